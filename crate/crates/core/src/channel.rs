//! Random multi-antenna uplink channels, MRC composite gains, rates and
//! per-task sample counts.

use std::io::{Read, Write};

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::scenario::Scenario;

/// One length-N complex channel vector per user.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelMatrix {
    vectors: Vec<Vec<Complex64>>,
}

impl ChannelMatrix {
    pub fn new(vectors: Vec<Vec<Complex64>>) -> Result<Self> {
        let n = vectors.first().map_or(0, Vec::len);
        if vectors.iter().any(|v| v.len() != n) {
            return Err(Error::Invalid("channel vectors differ in length".into()));
        }
        if vectors
            .iter()
            .flatten()
            .any(|z| !z.re.is_finite() || !z.im.is_finite())
        {
            return Err(Error::Invalid("non-finite channel entry".into()));
        }
        Ok(Self { vectors })
    }

    pub fn num_users(&self) -> usize {
        self.vectors.len()
    }

    pub fn num_antennas(&self) -> usize {
        self.vectors.first().map_or(0, Vec::len)
    }

    pub fn vector(&self, user: usize) -> &[Complex64] {
        &self.vectors[user]
    }

    pub fn norm_sqr(&self, user: usize) -> f64 {
        self.vectors[user].iter().map(|z| z.norm_sqr()).sum()
    }

    /// Writes one row per user: `re_1,im_1,...,re_N,im_N`.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(writer);
        for v in &self.vectors {
            let row: Vec<String> = v
                .iter()
                .flat_map(|z| [format!("{:e}", z.re), format!("{:e}", z.im)])
                .collect();
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut r = csv::ReaderBuilder::new()
            .has_headers(false)
            .trim(csv::Trim::All)
            .from_reader(reader);
        let mut vectors = Vec::new();
        for rec in r.records() {
            let rec = rec?;
            if rec.len() % 2 != 0 {
                return Err(Error::Parse("channel row has an odd number of entries".into()));
            }
            let vals: Vec<f64> = rec
                .iter()
                .map(|s| s.parse::<f64>().map_err(|e| Error::Parse(format!("{s}: {e}"))))
                .collect::<Result<_>>()?;
            vectors.push(vals.chunks(2).map(|c| Complex64::new(c[0], c[1])).collect());
        }
        Self::new(vectors)
    }
}

/// Dense K x K matrix of composite gains, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct GainMatrix {
    k: usize,
    data: Vec<f64>,
}

impl GainMatrix {
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let k = rows.len();
        if rows.iter().any(|r| r.len() != k) {
            return Err(Error::Invalid("gain matrix must be square".into()));
        }
        let data: Vec<f64> = rows.into_iter().flatten().collect();
        if data.iter().any(|g| !(*g >= 0.0 && g.is_finite())) {
            return Err(Error::Invalid("gains must be finite and nonnegative".into()));
        }
        Ok(Self { k, data })
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        let k = diag.len();
        let mut data = vec![0.0; k * k];
        for (i, g) in diag.iter().enumerate() {
            data[i * k + i] = *g;
        }
        Self { k, data }
    }

    pub fn dim(&self) -> usize {
        self.k
    }

    pub fn get(&self, k: usize, l: usize) -> f64 {
        self.data[k * self.k + l]
    }

    pub fn row(&self, k: usize) -> &[f64] {
        &self.data[k * self.k..(k + 1) * self.k]
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.k).map(|i| self.get(i, i)).collect()
    }

    pub fn zero_off_diagonal(&self) -> Self {
        Self::from_diagonal(&self.diagonal())
    }

    pub fn is_diagonal(&self) -> bool {
        (0..self.k).all(|i| (0..self.k).all(|j| i == j || self.get(i, j) == 0.0))
    }

    /// Interference seen by user `k`: `sum_{l != k} G_kl p_l`.
    pub fn interference(&self, k: usize, powers: &[f64]) -> f64 {
        self.row(k)
            .iter()
            .zip(powers)
            .enumerate()
            .filter(|(l, _)| *l != k)
            .map(|(_, (g, p))| g * p)
            .sum()
    }
}

/// Achievable rates in bit/s/Hz.
#[derive(Debug, Clone, PartialEq)]
pub struct RateVector(pub Vec<f64>);

impl RateVector {
    pub fn sum(&self) -> f64 {
        self.0.iter().sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SampleMode {
    /// Fractional samples; used inside every solver.
    Continuous,
    /// Whole samples per user, as actually delivered.
    Floored,
}

/// Draws `h_k ~ CN(0, rho_k I_N)` for every user from stream 0 of `seed`.
pub fn draw_channels(scenario: &Scenario, seed: u64) -> ChannelMatrix {
    draw_channels_stream(scenario, seed, 0)
}

/// Independent draw `stream` under the same seed. Monte-Carlo draw `i`
/// uses stream `i`, so draws can be generated in any order.
pub fn draw_channels_stream(scenario: &Scenario, seed: u64, stream: u64) -> ChannelMatrix {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    let vectors = scenario
        .path_loss
        .iter()
        .map(|&rho| {
            let s = (rho / 2.0).sqrt();
            (0..scenario.num_antennas)
                .map(|_| {
                    let re: f64 = StandardNormal.sample(&mut rng);
                    let im: f64 = StandardNormal.sample(&mut rng);
                    Complex64::new(s * re, s * im)
                })
                .collect()
        })
        .collect();
    ChannelMatrix { vectors }
}

/// MRC gains: `G_kk = |h_k|^2`, `G_kl = |h_k^H h_l|^2 / |h_k|^2`.
pub fn composite_gains(channels: &ChannelMatrix) -> Result<GainMatrix> {
    let k = channels.num_users();
    let norms: Vec<f64> = (0..k).map(|i| channels.norm_sqr(i)).collect();
    if let Some(u) = norms.iter().position(|&n| n == 0.0) {
        return Err(Error::DegenerateChannel { user: u + 1 });
    }
    let mut data = vec![0.0; k * k];
    for i in 0..k {
        data[i * k + i] = norms[i];
        for j in 0..k {
            if i == j {
                continue;
            }
            let inner: Complex64 = channels
                .vector(i)
                .iter()
                .zip(channels.vector(j))
                .map(|(a, b)| a.conj() * b)
                .sum();
            data[i * k + j] = inner.norm_sqr() / norms[i];
        }
    }
    Ok(GainMatrix { k, data })
}

/// Mean of `|h_k|^2` under the channel model: `N rho_k` on the diagonal.
pub fn expected_gains(scenario: &Scenario) -> GainMatrix {
    let n = scenario.num_antennas as f64;
    let diag: Vec<f64> = scenario.path_loss.iter().map(|r| n * r).collect();
    GainMatrix::from_diagonal(&diag)
}

pub fn sinr(gains: &GainMatrix, powers: &[f64], noise: f64) -> Vec<f64> {
    (0..gains.dim())
        .map(|k| gains.get(k, k) * powers[k] / (gains.interference(k, powers) + noise))
        .collect()
}

pub fn rates(gains: &GainMatrix, powers: &[f64], noise: f64) -> RateVector {
    RateVector(
        sinr(gains, powers, noise)
            .into_iter()
            .map(|s| s.ln_1p() / std::f64::consts::LN_2)
            .collect(),
    )
}

/// Samples user `k` delivers for task `m` at rate `rate`.
pub fn user_samples(scenario: &Scenario, task: usize, rate: f64) -> f64 {
    scenario.bits_per_rate_unit() * rate / scenario.tasks[task].data_size_bits
}

/// Per-task sample counts `v_m`, historical samples included.
pub fn sample_counts(rates: &RateVector, scenario: &Scenario, mode: SampleMode) -> Vec<f64> {
    let bt = scenario.bandwidth * scenario.duration;
    scenario
        .groups
        .iter()
        .zip(&scenario.tasks)
        .map(|(group, task)| {
            let fresh: f64 = match mode {
                SampleMode::Continuous => group
                    .iter()
                    .map(|&k| scenario.overhead_factor * bt * rates.0[k] / task.data_size_bits)
                    .sum(),
                SampleMode::Floored => {
                    scenario.overhead_factor
                        * group
                            .iter()
                            .map(|&k| (bt * rates.0[k] / task.data_size_bits).floor())
                            .sum::<f64>()
                }
            };
            fresh + task.historical_samples
        })
        .collect()
}
