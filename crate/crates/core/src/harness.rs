//! Monte-Carlo runs, scheme comparison, parameter sweeps and CSV output.
//!
//! Every reported error is the learning-curve prediction `beta_m Theta_m(v_m)`
//! at the delivered sample count, not the accuracy of a trained classifier.

use std::fmt;
use std::io::Write;
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;

use crate::asymptotic;
use crate::baselines::{max_min_fair, water_filling};
use crate::channel::{
    composite_gains, draw_channels_stream, expected_gains, rates, sample_counts, GainMatrix, RateVector,
    SampleMode,
};
use crate::error::{Error, Result};
use crate::error_model::predict_weighted;
use crate::mirror_prox::{self, MirrorProxOptions};
use crate::mm::{self, MmOptions};
use crate::scenario::Scenario;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scheme {
    Mm,
    Asymptotic,
    MirrorProx,
    WaterFilling,
    MaxMin,
}

impl Scheme {
    pub const ALL: [Scheme; 5] = [
        Scheme::Mm,
        Scheme::Asymptotic,
        Scheme::MirrorProx,
        Scheme::WaterFilling,
        Scheme::MaxMin,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Scheme::Mm => "mm",
            Scheme::Asymptotic => "asymptotic",
            Scheme::MirrorProx => "mirror_prox",
            Scheme::WaterFilling => "water_filling",
            Scheme::MaxMin => "max_min",
        }
    }

    /// Whether the scheme minimizes the worst predicted error.
    pub fn is_learning_centric(self) -> bool {
        matches!(self, Scheme::Mm | Scheme::Asymptotic | Scheme::MirrorProx)
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Scheme::ALL.into_iter().find(|k| k.name() == s).ok_or_else(|| {
            Error::Usage(format!(
                "unknown scheme `{s}` (expected mm, asymptotic, mirror_prox, water_filling or max_min)"
            ))
        })
    }
}

/// Which gains a draw hands to the solvers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GainMode {
    /// Full MRC gains with interference; only MM accepts these.
    Full,
    /// Realized `|h_k|^2` per draw, off-diagonals zeroed.
    RealizedDiagonal,
    /// `N rho_k` on the diagonal; identical for every draw.
    ExpectedDiagonal,
}

impl GainMode {
    pub fn name(self) -> &'static str {
        match self {
            GainMode::Full => "full",
            GainMode::RealizedDiagonal => "realized",
            GainMode::ExpectedDiagonal => "expected",
        }
    }
}

impl FromStr for GainMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "full" => Ok(GainMode::Full),
            "realized" => Ok(GainMode::RealizedDiagonal),
            "expected" => Ok(GainMode::ExpectedDiagonal),
            _ => Err(Error::Usage(format!(
                "unknown diag mode `{s}` (expected expected, realized or full)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct RunConfig {
    pub seed: u64,
    pub draws: usize,
    pub gain_mode: GainMode,
    pub mm: MmOptions,
    pub mirror_prox: MirrorProxOptions,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 1,
            draws: 10,
            gain_mode: GainMode::ExpectedDiagonal,
            mm: MmOptions::default(),
            mirror_prox: MirrorProxOptions::default(),
        }
    }
}

/// One scheme's allocation on one channel draw, evaluated under the gains
/// the scheme was given.
#[derive(Debug, Clone, PartialEq)]
pub struct Allocation {
    pub draw: usize,
    pub scheme: Scheme,
    /// Watts.
    pub powers: Vec<f64>,
    pub rates: RateVector,
    /// Per-task `v_m` with fractional samples.
    pub samples: Vec<f64>,
    /// Per-task `v_m` with whole samples per user.
    pub samples_floored: Vec<f64>,
    /// Per-task `beta_m Theta_m(v_m)` at the fractional counts.
    pub predicted_errors: Vec<f64>,
    /// Largest predicted error.
    pub objective: f64,
    /// Seconds spent in the solver.
    pub wall_time: f64,
}

impl Allocation {
    pub fn sum_rate(&self) -> f64 {
        self.rates.sum()
    }
}

/// Gains for draw `draw` under `mode`.
pub fn draw_gains(scenario: &Scenario, seed: u64, draw: usize, mode: GainMode) -> Result<GainMatrix> {
    match mode {
        GainMode::ExpectedDiagonal => Ok(expected_gains(scenario)),
        GainMode::RealizedDiagonal => {
            Ok(composite_gains(&draw_channels_stream(scenario, seed, draw as u64))?.zero_off_diagonal())
        }
        GainMode::Full => composite_gains(&draw_channels_stream(scenario, seed, draw as u64)),
    }
}

fn check_compatible(scenario: &Scenario, gains: &GainMatrix, scheme: Scheme) -> Result<()> {
    let incompatible = |reason: &str| {
        Err(Error::Incompatible {
            scheme: scheme.name().into(),
            reason: reason.into(),
        })
    };
    if scheme != Scheme::Mm && !gains.is_diagonal() {
        return incompatible("needs diagonal gains (use the expected or realized diag mode)");
    }
    if matches!(scheme, Scheme::Asymptotic | Scheme::MirrorProx) && scenario.has_rate_bounds() {
        return incompatible("per-user sample bounds are only handled by mm");
    }
    Ok(())
}

/// Evaluates a power vector under `gains`.
pub fn evaluate(
    scenario: &Scenario,
    gains: &GainMatrix,
    scheme: Scheme,
    draw: usize,
    powers: Vec<f64>,
    wall_time: f64,
) -> Allocation {
    let r = rates(gains, &powers, scenario.noise_power);
    let samples = sample_counts(&r, scenario, SampleMode::Continuous);
    let samples_floored = sample_counts(&r, scenario, SampleMode::Floored);
    let predicted_errors: Vec<f64> = samples
        .iter()
        .zip(&scenario.tasks)
        .map(|(v, t)| predict_weighted(&t.error_params, *v).unwrap_or(f64::INFINITY))
        .collect();
    let objective = predicted_errors.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Allocation {
        draw,
        scheme,
        powers,
        rates: r,
        samples,
        samples_floored,
        predicted_errors,
        objective,
        wall_time,
    }
}

/// Runs one scheme on one gain matrix.
pub fn allocate(
    scenario: &Scenario,
    gains: &GainMatrix,
    scheme: Scheme,
    config: &RunConfig,
    draw: usize,
) -> Result<Allocation> {
    check_compatible(scenario, gains, scheme)?;
    let diag = gains.diagonal();
    let (noise, budget) = (scenario.noise_power, scenario.total_power);
    let start = Instant::now();
    let powers = match scheme {
        Scheme::Mm => mm::solve(scenario, gains, &config.mm)?.powers,
        Scheme::Asymptotic => asymptotic::solve(scenario, &diag)?.powers,
        Scheme::MirrorProx => mirror_prox::solve(scenario, &diag, &config.mirror_prox)?.powers,
        Scheme::WaterFilling => water_filling(&diag, noise, budget)?,
        Scheme::MaxMin => max_min_fair(&diag, noise, budget)?,
    };
    let wall_time = start.elapsed().as_secs_f64();
    Ok(evaluate(scenario, gains, scheme, draw, powers, wall_time))
}

/// `draws` independent channel draws of one scheme.
pub fn run(scenario: &Scenario, scheme: Scheme, config: &RunConfig) -> Result<Vec<Allocation>> {
    compare(scenario, &[scheme], config)
}

/// Every scheme on the same draws; rows are ordered by draw, then by the
/// order of `schemes`.
pub fn compare(scenario: &Scenario, schemes: &[Scheme], config: &RunConfig) -> Result<Vec<Allocation>> {
    if schemes.is_empty() {
        return Err(Error::Usage("at least one scheme is required".into()));
    }
    if config.draws == 0 {
        return Err(Error::Usage("draws must be at least 1".into()));
    }
    scenario.validate()?;
    let per_draw: Vec<Vec<Allocation>> = (0..config.draws)
        .into_par_iter()
        .map(|d| {
            let gains = draw_gains(scenario, config.seed, d, config.gain_mode)?;
            schemes
                .iter()
                .map(|&s| allocate(scenario, &gains, s, config, d))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(per_draw.into_iter().flatten().collect())
}

/// Mean of every numeric field per scheme, in first-appearance order.
pub fn summarize(rows: &[Allocation]) -> Vec<(Scheme, Allocation)> {
    let mut order: Vec<Scheme> = Vec::new();
    for r in rows {
        if !order.contains(&r.scheme) {
            order.push(r.scheme);
        }
    }
    order
        .into_iter()
        .map(|scheme| {
            let group: Vec<&Allocation> = rows.iter().filter(|r| r.scheme == scheme).collect();
            let n = group.len() as f64;
            let mean = |f: &dyn Fn(&Allocation) -> &[f64]| -> Vec<f64> {
                let len = f(group[0]).len();
                (0..len)
                    .map(|i| group.iter().map(|a| f(a)[i]).sum::<f64>() / n)
                    .collect()
            };
            let mean_alloc = Allocation {
                draw: group.len(),
                scheme,
                powers: mean(&|a| &a.powers),
                rates: RateVector(mean(&|a| &a.rates.0)),
                samples: mean(&|a| &a.samples),
                samples_floored: mean(&|a| &a.samples_floored),
                predicted_errors: mean(&|a| &a.predicted_errors),
                objective: group.iter().map(|a| a.objective).sum::<f64>() / n,
                wall_time: group.iter().map(|a| a.wall_time).sum::<f64>() / n,
            };
            (scheme, mean_alloc)
        })
        .collect()
}

fn num(x: f64) -> String {
    format!("{x:.11e}")
}

/// Wide CSV: one row per (draw, scheme) followed by one `mean` row per
/// scheme. Wall time is written only when `timing` is set, so the default
/// output is a pure function of its inputs.
pub fn write_allocations<W: Write>(writer: W, rows: &[Allocation], timing: bool) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let Some(first) = rows.first() else {
        w.flush()?;
        return Ok(());
    };
    let k = first.powers.len();
    let m = first.samples.len();
    let mut header = vec![
        "draw".to_string(),
        "scheme".into(),
        "predicted_max_error".into(),
        "sum_rate".into(),
    ];
    header.extend((1..=k).map(|i| format!("power_{i}")));
    header.extend((1..=k).map(|i| format!("rate_{i}")));
    header.extend((1..=m).map(|i| format!("samples_{i}")));
    header.extend((1..=m).map(|i| format!("samples_floored_{i}")));
    header.extend((1..=m).map(|i| format!("predicted_error_{i}")));
    if timing {
        header.push("wall_time_s".into());
    }
    w.write_record(&header)?;
    let mut emit = |label: String, a: &Allocation| -> Result<()> {
        let mut rec = vec![
            label,
            a.scheme.name().to_string(),
            num(a.objective),
            num(a.sum_rate()),
        ];
        rec.extend(a.powers.iter().map(|v| num(*v)));
        rec.extend(a.rates.0.iter().map(|v| num(*v)));
        rec.extend(a.samples.iter().map(|v| num(*v)));
        rec.extend(a.samples_floored.iter().map(|v| num(*v)));
        rec.extend(a.predicted_errors.iter().map(|v| num(*v)));
        if timing {
            rec.push(num(a.wall_time));
        }
        w.write_record(&rec)?;
        Ok(())
    };
    for a in rows {
        emit(a.draw.to_string(), a)?;
    }
    for (_, a) in summarize(rows) {
        emit("mean".into(), &a)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepParam {
    /// Transmission duration `T` (s).
    Duration,
    /// Antenna count `N`.
    Antennas,
    /// User count `K`.
    Users,
}

impl SweepParam {
    pub fn name(self) -> &'static str {
        match self {
            SweepParam::Duration => "T",
            SweepParam::Antennas => "N",
            SweepParam::Users => "K",
        }
    }

    pub fn apply(self, scenario: &Scenario, value: f64) -> Result<Scenario> {
        let count = || -> Result<usize> {
            if value >= 1.0 && value.fract() == 0.0 {
                Ok(value as usize)
            } else {
                Err(Error::Usage(format!(
                    "{} must be a positive integer, got {value}",
                    self.name()
                )))
            }
        };
        let s = match self {
            SweepParam::Duration => scenario.clone().with_duration(value),
            SweepParam::Antennas => scenario.clone().with_antennas(count()?),
            SweepParam::Users => scenario.clone().with_num_users(count()?)?,
        };
        s.validate()?;
        Ok(s)
    }
}

impl FromStr for SweepParam {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "T" | "t" => Ok(SweepParam::Duration),
            "N" | "n" => Ok(SweepParam::Antennas),
            "K" | "k" => Ok(SweepParam::Users),
            _ => Err(Error::Usage(format!(
                "unknown sweep parameter `{s}` (expected T, N or K)"
            ))),
        }
    }
}

/// Draw-averaged result of one scheme at one sweep value.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub value: f64,
    pub scheme: Scheme,
    pub mean: Allocation,
}

pub fn sweep(
    scenario: &Scenario,
    param: SweepParam,
    values: &[f64],
    schemes: &[Scheme],
    config: &RunConfig,
) -> Result<Vec<SweepPoint>> {
    if values.is_empty() {
        return Err(Error::Usage("sweep needs at least one value".into()));
    }
    let mut out = Vec::new();
    for &value in values {
        let s = param.apply(scenario, value)?;
        let rows = compare(&s, schemes, config)?;
        out.extend(
            summarize(&rows)
                .into_iter()
                .map(|(scheme, mean)| SweepPoint { value, scheme, mean }),
        );
    }
    Ok(out)
}

/// Long CSV: one row per (value, scheme) with draw-averaged task columns.
pub fn write_sweep<W: Write>(writer: W, param: SweepParam, points: &[SweepPoint]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let m = points.first().map_or(0, |p| p.mean.samples.len());
    let mut header = vec![
        param.name().to_string(),
        "scheme".into(),
        "predicted_max_error".into(),
        "sum_rate".into(),
    ];
    header.extend((1..=m).map(|i| format!("samples_{i}")));
    header.extend((1..=m).map(|i| format!("predicted_error_{i}")));
    w.write_record(&header)?;
    for p in points {
        let a = &p.mean;
        let mut rec = vec![
            num(p.value),
            p.scheme.name().into(),
            num(a.objective),
            num(a.sum_rate()),
        ];
        rec.extend(a.samples.iter().map(|v| num(*v)));
        rec.extend(a.predicted_errors.iter().map(|v| num(*v)));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}
