//! Problem instances: users, task groups, link budget and per-task learning
//! curves.
//!
//! Scenarios are loaded from TOML files with three main sections:
//!
//! ```toml
//! [system]
//! num_users = 4
//! num_antennas = 20
//! total_power_dbm = 13.0      # or total_power_w
//! bandwidth_hz = 180000.0
//! duration_s = 20.0
//! overhead_factor = 1.0
//! noise_power_dbm = -87.0     # or noise_power_w
//! path_loss_db = -100.0       # scalar or per-user array; or path_loss_linear
//! groups = [[1], [2, 3, 4]]   # 1-based user indices, one list per task
//!
//! [tasks.1]
//! data_size_bits = 6276
//! historical_samples = 300
//! a = 7.3
//! b = 0.69
//! beta = 1.0
//!
//! [bounds.1]                  # 1-based user index
//! z_min = 100
//! z_max = 10000               # `inf` is accepted
//! ```
//!
//! Every missing key falls back to [`Scenario::four_user_default`]. An optional
//! `[uncertainty]` section overrides the confidence-gate thresholds and
//! presets (see [`crate::uncertainty::GateConfig`]).

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{out_of_range, Error, Result};
use crate::uncertainty::GateConfig;

/// Bits per MNIST sample: 28x28 8-bit pixels plus a 4-bit label.
pub const MNIST_SAMPLE_BITS: f64 = 6276.0;
/// Bits per scikit-learn digits sample: 8x8 5-bit pixels plus a 4-bit label.
pub const DIGITS_SAMPLE_BITS: f64 = 324.0;
/// Bits per CIFAR-10 sample (byte-aligned label).
pub const CIFAR10_SAMPLE_BITS: f64 = 24584.0;
/// Bits per ModelNet40 point cloud (2000 points, three f32 coordinates).
pub const MODELNET40_SAMPLE_BITS: f64 = 192008.0;

pub fn dbm_to_watt(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

pub fn watt_to_dbm(watt: f64) -> f64 {
    10.0 * watt.log10() + 30.0
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(linear: f64) -> f64 {
    10.0 * linear.log10()
}

/// Sample-loss factor from the fraction of resource blocks reserved for
/// control overhead and the packet error rate.
pub fn estimate_overhead(block_reserve_fraction: f64, packet_error_rate: f64) -> f64 {
    (1.0 - block_reserve_fraction) * (1.0 - packet_error_rate)
}

/// Power-law learning curve `a * v^-b` with a pessimism weight `beta`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorModelParams {
    pub scale: f64,
    pub exponent: f64,
    pub safety: f64,
}

impl ErrorModelParams {
    pub fn new(scale: f64, exponent: f64, safety: f64) -> Result<Self> {
        let params = Self {
            scale,
            exponent,
            safety,
        };
        params.validate("error_params")?;
        Ok(params)
    }

    fn validate(&self, ctx: &str) -> Result<()> {
        if !(self.scale >= 0.0 && self.scale.is_finite()) {
            return Err(out_of_range(format!("{ctx}.a"), "a >= 0"));
        }
        if !(self.exponent >= 0.0 && self.exponent.is_finite()) {
            return Err(out_of_range(format!("{ctx}.b"), "b >= 0"));
        }
        if !(self.safety >= 1.0 && self.safety.is_finite()) {
            return Err(out_of_range(format!("{ctx}.beta"), "beta >= 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TaskSpec {
    /// Bits per training sample, `D_m`.
    pub data_size_bits: f64,
    /// Samples already stored at the edge, `A_m`.
    pub historical_samples: f64,
    pub error_params: ErrorModelParams,
}

impl TaskSpec {
    /// CNN on MNIST with the learning curve extrapolated from 100..300 samples.
    pub fn mnist_cnn() -> Self {
        Self {
            data_size_bits: MNIST_SAMPLE_BITS,
            historical_samples: 300.0,
            error_params: ErrorModelParams {
                scale: 7.3,
                exponent: 0.69,
                safety: 1.0,
            },
        }
    }

    /// RBF-kernel SVM on the scikit-learn digits set.
    pub fn digits_svm() -> Self {
        Self {
            data_size_bits: DIGITS_SAMPLE_BITS,
            historical_samples: 200.0,
            error_params: ErrorModelParams {
                scale: 5.2,
                exponent: 0.72,
                safety: 1.2,
            },
        }
    }
}

/// Per-user bounds on the number of uploaded samples.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateBounds {
    pub min: f64,
    pub max: f64,
}

impl RateBounds {
    pub const UNBOUNDED: RateBounds = RateBounds {
        min: 0.0,
        max: f64::INFINITY,
    };

    pub fn is_unbounded(&self) -> bool {
        self.min <= 0.0 && self.max == f64::INFINITY
    }
}

impl Default for RateBounds {
    fn default() -> Self {
        Self::UNBOUNDED
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub num_users: usize,
    pub num_antennas: usize,
    /// Zero-based user indices per task. Groups may overlap.
    pub groups: Vec<Vec<usize>>,
    /// Watts.
    pub total_power: f64,
    /// Hz.
    pub bandwidth: f64,
    /// Seconds.
    pub duration: f64,
    pub overhead_factor: f64,
    /// Watts.
    pub noise_power: f64,
    /// Linear per-user large-scale gain.
    pub path_loss: Vec<f64>,
    pub tasks: Vec<TaskSpec>,
    pub rate_bounds: Vec<RateBounds>,
    pub gate: GateConfig,
}

impl Scenario {
    /// Four users, twenty antennas, CNN task fed by user 1 and SVM task fed
    /// by users 2..4, with the reference link budget (13 dBm total power,
    /// -87 dBm noise, 180 kHz, -100 dB path loss).
    pub fn four_user_default() -> Self {
        let num_users = 4;
        Self {
            num_users,
            num_antennas: 20,
            groups: vec![vec![0], vec![1, 2, 3]],
            total_power: 0.02,
            bandwidth: 180_000.0,
            duration: 20.0,
            overhead_factor: 1.0,
            noise_power: 10f64.powf(-11.7),
            path_loss: vec![1e-10; num_users],
            tasks: vec![TaskSpec::mnist_cnn(), TaskSpec::digits_svm()],
            rate_bounds: vec![RateBounds::UNBOUNDED; num_users],
            gate: GateConfig::default(),
        }
    }

    /// One CNN user and one SVM user (disjoint singleton groups).
    pub fn cnn_svm_pair(num_antennas: usize, duration: f64) -> Self {
        let mut s = Self::four_user_default();
        s.num_users = 2;
        s.num_antennas = num_antennas;
        s.duration = duration;
        s.groups = vec![vec![0], vec![1]];
        s.path_loss = vec![1e-10; 2];
        s.rate_bounds = vec![RateBounds::UNBOUNDED; 2];
        s
    }

    pub fn num_tasks(&self) -> usize {
        self.tasks.len()
    }

    /// `xi * B * T`: the number of bits per unit of spectral efficiency.
    pub fn bits_per_rate_unit(&self) -> f64 {
        self.overhead_factor * self.bandwidth * self.duration
    }

    /// First task listing user `k`; rate bounds are expressed in its samples.
    pub fn primary_task(&self, user: usize) -> usize {
        self.groups
            .iter()
            .position(|g| g.contains(&user))
            .expect("validated scenario: every user belongs to a group")
    }

    /// Per-user membership mask for task `m`.
    pub fn in_group(&self, task: usize, user: usize) -> bool {
        self.groups[task].contains(&user)
    }

    pub fn has_rate_bounds(&self) -> bool {
        self.rate_bounds.iter().any(|b| !b.is_unbounded())
    }

    pub fn with_duration(mut self, duration: f64) -> Self {
        self.duration = duration;
        self
    }

    pub fn with_antennas(mut self, num_antennas: usize) -> Self {
        self.num_antennas = num_antennas;
        self
    }

    /// Resizes the user population, re-partitioning disjoint groups into
    /// contiguous blocks with the same proportions as the current groups.
    /// Path loss of the first user is reused and rate bounds are cleared.
    pub fn with_num_users(mut self, num_users: usize) -> Result<Self> {
        let total: usize = self.groups.iter().map(Vec::len).sum();
        if total != self.num_users {
            return Err(Error::Invalid(
                "user-count sweeps require disjoint groups covering every user once".into(),
            ));
        }
        let m = self.groups.len();
        if num_users < m {
            return Err(out_of_range(
                "num_users",
                format!("at least one user per task ({m})"),
            ));
        }
        let mut sizes: Vec<usize> = self
            .groups
            .iter()
            .map(|g| ((g.len() * num_users) as f64 / total as f64).round().max(1.0) as usize)
            .collect();
        // absorb rounding into the largest group
        let assigned: usize = sizes.iter().sum();
        let largest = (0..m).max_by_key(|&i| sizes[i]).unwrap_or(0);
        sizes[largest] = (sizes[largest] + num_users).saturating_sub(assigned).max(1);
        let mut next = 0;
        self.groups = sizes
            .iter()
            .map(|&n| {
                let g: Vec<usize> = (next..next + n).collect();
                next += n;
                g
            })
            .collect();
        let loss = self.path_loss[0];
        self.num_users = num_users;
        self.path_loss = vec![loss; num_users];
        self.rate_bounds = vec![RateBounds::UNBOUNDED; num_users];
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        let k = self.num_users;
        if k == 0 {
            return Err(out_of_range("num_users", "K >= 1"));
        }
        if self.num_antennas == 0 {
            return Err(out_of_range("num_antennas", "N >= 1"));
        }
        if self.tasks.is_empty() {
            return Err(out_of_range("num_tasks", "M >= 1"));
        }
        if self.groups.len() != self.tasks.len() {
            return Err(Error::Invalid(format!(
                "{} groups but {} tasks",
                self.groups.len(),
                self.tasks.len()
            )));
        }
        let mut covered = vec![false; k];
        for (m, g) in self.groups.iter().enumerate() {
            if g.is_empty() {
                return Err(Error::EmptyGroup(m + 1));
            }
            for &u in g {
                if u >= k {
                    return Err(out_of_range(
                        format!("groups[{}]", m + 1),
                        format!("user {} not in 1..={k}", u + 1),
                    ));
                }
                covered[u] = true;
            }
        }
        if let Some(u) = covered.iter().position(|c| !c) {
            return Err(Error::Invalid(format!("user {} belongs to no group", u + 1)));
        }
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(out_of_range(name, "must be positive and finite"))
            }
        };
        positive("total_power", self.total_power)?;
        positive("bandwidth", self.bandwidth)?;
        positive("duration", self.duration)?;
        positive("noise_power", self.noise_power)?;
        if !(self.overhead_factor > 0.0 && self.overhead_factor <= 1.0) {
            return Err(out_of_range("overhead_factor", "(0, 1]"));
        }
        if self.path_loss.len() != k {
            return Err(Error::Invalid(format!(
                "path_loss has {} entries for {k} users",
                self.path_loss.len()
            )));
        }
        if self.path_loss.iter().any(|&g| !(g >= 0.0 && g.is_finite())) {
            return Err(out_of_range("path_loss", "linear gain >= 0"));
        }
        for (m, t) in self.tasks.iter().enumerate() {
            if !(t.data_size_bits > 0.0 && t.data_size_bits.is_finite()) {
                return Err(out_of_range(format!("tasks.{}.data_size_bits", m + 1), "D > 0"));
            }
            if !(t.historical_samples >= 0.0 && t.historical_samples.is_finite()) {
                return Err(out_of_range(
                    format!("tasks.{}.historical_samples", m + 1),
                    "A >= 0",
                ));
            }
            t.error_params.validate(&format!("tasks.{}", m + 1))?;
        }
        if self.rate_bounds.len() != k {
            return Err(Error::Invalid(format!(
                "rate_bounds has {} entries for {k} users",
                self.rate_bounds.len()
            )));
        }
        for (u, b) in self.rate_bounds.iter().enumerate() {
            if !(b.min >= 0.0 && b.min.is_finite()) {
                return Err(out_of_range(format!("bounds.{}.z_min", u + 1), "z_min >= 0"));
            }
            if b.max.is_nan() || b.min > b.max {
                return Err(out_of_range(format!("bounds.{}", u + 1), "z_min <= z_max"));
            }
        }
        self.gate.validate()?;
        Ok(())
    }

    pub fn from_toml_str(source: &str) -> Result<Self> {
        let file: ScenarioFile = toml::from_str(source).map_err(|e| Error::Parse(e.to_string()))?;
        file.into_scenario()
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml_str(&text)
    }

    /// Serializes with linear-unit keys so that loading the output
    /// reproduces every field bit for bit.
    pub fn to_toml_string(&self) -> String {
        let file = ScenarioFile::from_scenario(self);
        toml::to_string(&file).expect("scenario serializes to TOML")
    }
}

/// Loads a scenario from TOML text.
pub fn load_scenario(source: &str) -> Result<Scenario> {
    Scenario::from_toml_str(source)
}

// ---------------------------------------------------------------------------
// file schema

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
enum PerUser {
    Scalar(f64),
    List(Vec<f64>),
}

impl PerUser {
    fn expand(&self, k: usize, field: &str) -> Result<Vec<f64>> {
        match self {
            PerUser::Scalar(v) => Ok(vec![*v; k]),
            PerUser::List(v) if v.len() == k => Ok(v.clone()),
            PerUser::List(v) => Err(Error::Invalid(format!(
                "{field} has {} entries for {k} users",
                v.len()
            ))),
        }
    }
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SystemSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    num_users: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    num_antennas: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    total_power_dbm: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    total_power_w: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    bandwidth_hz: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    duration_s: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    overhead_factor: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    noise_power_dbm: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    noise_power_w: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    path_loss_db: Option<PerUser>,
    #[serde(skip_serializing_if = "Option::is_none")]
    path_loss_linear: Option<PerUser>,
    #[serde(skip_serializing_if = "Option::is_none")]
    groups: Option<Vec<Vec<usize>>>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TaskSection {
    data_size_bits: f64,
    #[serde(default)]
    historical_samples: f64,
    a: f64,
    b: f64,
    #[serde(default = "one")]
    beta: f64,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct BoundsSection {
    #[serde(default)]
    z_min: f64,
    #[serde(default = "infinity")]
    z_max: f64,
}

fn infinity() -> f64 {
    f64::INFINITY
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    #[serde(default)]
    system: SystemSection,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    tasks: BTreeMap<String, TaskSection>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    bounds: BTreeMap<String, BoundsSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    uncertainty: Option<GateConfig>,
}

fn parse_index(key: &str, section: &str, limit: usize) -> Result<usize> {
    let idx: usize = key
        .parse()
        .map_err(|_| Error::Parse(format!("[{section}.{key}]: key must be a 1-based index")))?;
    if idx == 0 || idx > limit {
        return Err(out_of_range(
            format!("{section}.{key}"),
            format!("index in 1..={limit}"),
        ));
    }
    Ok(idx - 1)
}

fn exclusive<T>(a: Option<T>, b: Option<T>, names: (&str, &str)) -> Result<Option<(bool, T)>> {
    match (a, b) {
        (Some(_), Some(_)) => Err(Error::Parse(format!(
            "give either {} or {}, not both",
            names.0, names.1
        ))),
        (Some(x), None) => Ok(Some((true, x))),
        (None, Some(x)) => Ok(Some((false, x))),
        (None, None) => Ok(None),
    }
}

impl ScenarioFile {
    fn into_scenario(self) -> Result<Scenario> {
        let d = Scenario::four_user_default();
        let sys = self.system;
        let num_users = sys.num_users.unwrap_or(d.num_users);
        let groups = match sys.groups {
            Some(gs) => {
                let mut out = Vec::with_capacity(gs.len());
                for (m, g) in gs.into_iter().enumerate() {
                    if g.is_empty() {
                        return Err(Error::EmptyGroup(m + 1));
                    }
                    let mut zero_based = Vec::with_capacity(g.len());
                    for u in g {
                        if u == 0 || u > num_users {
                            return Err(out_of_range(
                                format!("groups[{}]", m + 1),
                                format!("user {u} not in 1..={num_users}"),
                            ));
                        }
                        if !zero_based.contains(&(u - 1)) {
                            zero_based.push(u - 1);
                        }
                    }
                    out.push(zero_based);
                }
                out
            }
            None if num_users == d.num_users => d.groups.clone(),
            None => {
                return Err(Error::Parse(
                    "system.groups is required when num_users differs from the default".into(),
                ))
            }
        };

        let total_power = match exclusive(
            sys.total_power_dbm,
            sys.total_power_w,
            ("total_power_dbm", "total_power_w"),
        )? {
            Some((true, dbm)) => dbm_to_watt(dbm),
            Some((false, w)) => w,
            None => d.total_power,
        };
        let noise_power = match exclusive(
            sys.noise_power_dbm,
            sys.noise_power_w,
            ("noise_power_dbm", "noise_power_w"),
        )? {
            Some((true, dbm)) => dbm_to_watt(dbm),
            Some((false, w)) => w,
            None => d.noise_power,
        };
        let path_loss = match exclusive(
            sys.path_loss_db,
            sys.path_loss_linear,
            ("path_loss_db", "path_loss_linear"),
        )? {
            Some((true, db)) => db
                .expand(num_users, "path_loss_db")?
                .into_iter()
                .map(db_to_linear)
                .collect(),
            Some((false, lin)) => lin.expand(num_users, "path_loss_linear")?,
            None => vec![d.path_loss[0]; num_users],
        };

        let tasks = if self.tasks.is_empty() {
            if groups.len() != d.tasks.len() {
                return Err(Error::Parse(format!(
                    "{} groups declared but no [tasks.m] sections",
                    groups.len()
                )));
            }
            d.tasks.clone()
        } else {
            let m = groups.len();
            let mut slots: Vec<Option<TaskSpec>> = vec![None; m];
            for (key, t) in self.tasks {
                let idx = parse_index(&key, "tasks", m)?;
                slots[idx] = Some(TaskSpec {
                    data_size_bits: t.data_size_bits,
                    historical_samples: t.historical_samples,
                    error_params: ErrorModelParams {
                        scale: t.a,
                        exponent: t.b,
                        safety: t.beta,
                    },
                });
            }
            slots
                .into_iter()
                .enumerate()
                .map(|(i, s)| s.ok_or_else(|| Error::Parse(format!("missing [tasks.{}]", i + 1))))
                .collect::<Result<Vec<_>>>()?
        };

        let mut rate_bounds = vec![RateBounds::UNBOUNDED; num_users];
        for (key, b) in self.bounds {
            let idx = parse_index(&key, "bounds", num_users)?;
            rate_bounds[idx] = RateBounds {
                min: b.z_min,
                max: b.z_max,
            };
        }

        let scenario = Scenario {
            num_users,
            num_antennas: sys.num_antennas.unwrap_or(d.num_antennas),
            groups,
            total_power,
            bandwidth: sys.bandwidth_hz.unwrap_or(d.bandwidth),
            duration: sys.duration_s.unwrap_or(d.duration),
            overhead_factor: sys.overhead_factor.unwrap_or(d.overhead_factor),
            noise_power,
            path_loss,
            tasks,
            rate_bounds,
            gate: self.uncertainty.unwrap_or_default(),
        };
        scenario.validate()?;
        Ok(scenario)
    }

    fn from_scenario(s: &Scenario) -> Self {
        let system = SystemSection {
            num_users: Some(s.num_users),
            num_antennas: Some(s.num_antennas),
            total_power_w: Some(s.total_power),
            bandwidth_hz: Some(s.bandwidth),
            duration_s: Some(s.duration),
            overhead_factor: Some(s.overhead_factor),
            noise_power_w: Some(s.noise_power),
            path_loss_linear: Some(PerUser::List(s.path_loss.clone())),
            groups: Some(
                s.groups
                    .iter()
                    .map(|g| g.iter().map(|u| u + 1).collect())
                    .collect(),
            ),
            ..Default::default()
        };
        let tasks = s
            .tasks
            .iter()
            .enumerate()
            .map(|(m, t)| {
                (
                    (m + 1).to_string(),
                    TaskSection {
                        data_size_bits: t.data_size_bits,
                        historical_samples: t.historical_samples,
                        a: t.error_params.scale,
                        b: t.error_params.exponent,
                        beta: t.error_params.safety,
                    },
                )
            })
            .collect();
        let bounds = s
            .rate_bounds
            .iter()
            .enumerate()
            .filter(|(_, b)| **b != RateBounds::UNBOUNDED)
            .map(|(u, b)| {
                (
                    (u + 1).to_string(),
                    BoundsSection {
                        z_min: b.min,
                        z_max: b.max,
                    },
                )
            })
            .collect();
        Self {
            system,
            tasks,
            bounds,
            uncertainty: (s.gate != GateConfig::default()).then_some(s.gate),
        }
    }
}
