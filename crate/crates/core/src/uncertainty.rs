//! Confidence gating for non-IID users.
//!
//! Each user's historical samples are scored by the edge model (the score of
//! a sample is the model's probability for its predicted label). Users whose
//! data the model already handles confidently get a small sample cap; users
//! whose data confuses the model get a large minimum.

use std::collections::BTreeMap;
use std::io::Read;

use serde::{Deserialize, Serialize};

use crate::error::{out_of_range, Error, Result};
use crate::scenario::{RateBounds, Scenario};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Aggregation {
    Mean,
    /// Lower middle element for even counts.
    Median,
    #[default]
    Min,
}

impl std::str::FromStr for Aggregation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mean" => Ok(Self::Mean),
            "median" => Ok(Self::Median),
            "min" => Ok(Self::Min),
            other => Err(Error::Usage(format!(
                "unknown aggregation `{other}` (expected mean|median|min)"
            ))),
        }
    }
}

/// Thresholds and preset bounds of the gate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GateConfig {
    pub aggregation: Aggregation,
    /// Aggregates strictly above this are considered confident.
    pub confident_above: f64,
    /// Aggregates strictly below this are considered uncertain.
    pub uncertain_below: f64,
    pub confident_bounds: RateBounds,
    pub uncertain_bounds: RateBounds,
}

impl Default for GateConfig {
    fn default() -> Self {
        Self {
            aggregation: Aggregation::Min,
            confident_above: 0.9,
            uncertain_below: 0.5,
            confident_bounds: RateBounds { min: 0.0, max: 10.0 },
            uncertain_bounds: RateBounds {
                min: 100.0,
                max: 10_000.0,
            },
        }
    }
}

impl GateConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.uncertain_below < self.confident_above) {
            return Err(out_of_range(
                "uncertainty.uncertain_below",
                "must be below confident_above",
            ));
        }
        for (name, b) in [
            ("uncertainty.confident_bounds", self.confident_bounds),
            ("uncertainty.uncertain_bounds", self.uncertain_bounds),
        ] {
            if !(b.min >= 0.0 && b.min <= b.max) {
                return Err(out_of_range(name, "0 <= min <= max"));
            }
        }
        Ok(())
    }
}

/// Scores of one user's historical samples.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfidenceReport {
    /// Zero-based user index.
    pub user: usize,
    pub scores: Vec<f64>,
    pub aggregate: f64,
}

pub fn aggregate_confidence(scores: &[f64], method: Aggregation) -> Result<f64> {
    if scores.is_empty() {
        return Err(Error::Domain("no confidence scores to aggregate".into()));
    }
    if let Some(s) = scores.iter().find(|s| !(0.0..=1.0).contains(*s)) {
        return Err(out_of_range("score", format!("{s} not in [0, 1]")));
    }
    Ok(match method {
        Aggregation::Mean => scores.iter().sum::<f64>() / scores.len() as f64,
        Aggregation::Min => scores.iter().copied().fold(f64::INFINITY, f64::min),
        Aggregation::Median => {
            let mut sorted = scores.to_vec();
            sorted.sort_by(f64::total_cmp);
            sorted[(sorted.len() - 1) / 2]
        }
    })
}

pub fn assign_bounds(aggregate: f64, gate: &GateConfig) -> RateBounds {
    if aggregate > gate.confident_above {
        gate.confident_bounds
    } else if aggregate < gate.uncertain_below {
        gate.uncertain_bounds
    } else {
        RateBounds::UNBOUNDED
    }
}

#[derive(Debug, Deserialize)]
struct ScoreRow {
    user_id: usize,
    #[allow(dead_code)]
    sample_id: String,
    score: f64,
}

/// Reads `user_id,sample_id,score` rows (1-based user ids) and aggregates
/// them per user.
pub fn read_confidence_csv<R: Read>(reader: R, method: Aggregation) -> Result<Vec<ConfidenceReport>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let mut by_user: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
    for row in rdr.deserialize() {
        let row: ScoreRow = row?;
        if row.user_id == 0 {
            return Err(out_of_range("user_id", "user ids are 1-based"));
        }
        by_user.entry(row.user_id - 1).or_default().push(row.score);
    }
    by_user
        .into_iter()
        .map(|(user, scores)| {
            let aggregate = aggregate_confidence(&scores, method)?;
            Ok(ConfidenceReport {
                user,
                scores,
                aggregate,
            })
        })
        .collect()
}

/// Overwrites the rate bounds of every reported user with the gate output.
pub fn apply_gate(scenario: &mut Scenario, reports: &[ConfidenceReport]) -> Result<()> {
    for r in reports {
        if r.user >= scenario.num_users {
            return Err(out_of_range(
                "user_id",
                format!("{} exceeds {} users", r.user + 1, scenario.num_users),
            ));
        }
        scenario.rate_bounds[r.user] = assign_bounds(r.aggregate, &scenario.gate);
    }
    Ok(())
}

/// Optional refit rule: how many historical samples of each user to feed
/// the learning-curve fit, proportional to the user's sample cap. Users
/// with an infinite cap get the full `base` count.
pub fn fit_sample_budget(bounds: &[RateBounds], base: f64) -> Vec<f64> {
    let largest = bounds
        .iter()
        .map(|b| b.max)
        .filter(|m| m.is_finite())
        .fold(0.0, f64::max);
    bounds
        .iter()
        .map(|b| {
            if !b.max.is_finite() || largest == 0.0 {
                base
            } else {
                base * b.max / largest
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn aggregates() {
        assert_eq!(
            aggregate_confidence(&[0.999; 5], Aggregation::Min).unwrap(),
            0.999
        );
        assert_eq!(
            aggregate_confidence(&[0.274, 0.9], Aggregation::Min).unwrap(),
            0.274
        );
        for m in [Aggregation::Mean, Aggregation::Median, Aggregation::Min] {
            assert_eq!(aggregate_confidence(&[0.42], m).unwrap(), 0.42);
        }
        assert_eq!(
            aggregate_confidence(&[0.9, 0.1, 0.5, 0.7], Aggregation::Median).unwrap(),
            0.5
        );
        assert!(aggregate_confidence(&[], Aggregation::Mean).is_err());
        assert!(aggregate_confidence(&[1.2], Aggregation::Mean).is_err());
    }

    #[test]
    fn gate_presets() {
        let g = GateConfig::default();
        assert_eq!(assign_bounds(0.999, &g), RateBounds { min: 0.0, max: 10.0 });
        assert_eq!(
            assign_bounds(0.274, &g),
            RateBounds {
                min: 100.0,
                max: 10_000.0
            }
        );
        assert_eq!(assign_bounds(0.7, &g), RateBounds::UNBOUNDED);
        // thresholds are strict
        assert_eq!(assign_bounds(0.9, &g), RateBounds::UNBOUNDED);
        assert_eq!(assign_bounds(0.5, &g), RateBounds::UNBOUNDED);
    }

    #[test]
    fn csv_reports() {
        let data = "user_id,sample_id,score\n1,a,0.274\n1,b,0.95\n6,x,0.999\n6,y,1.0\n";
        let reports = read_confidence_csv(data.as_bytes(), Aggregation::Min).unwrap();
        assert_eq!(reports.len(), 2);
        assert_eq!(reports[0].user, 0);
        assert_eq!(reports[0].aggregate, 0.274);
        assert_eq!(reports[1].user, 5);
        assert_eq!(reports[1].aggregate, 0.999);
    }

    #[test]
    fn refit_budget_follows_caps() {
        let b = [
            RateBounds {
                min: 100.0,
                max: 10_000.0,
            },
            RateBounds { min: 0.0, max: 10.0 },
        ];
        let n = fit_sample_budget(&b, 450.0);
        assert_eq!(n[0], 450.0);
        assert!((n[1] - 0.45).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn gate_is_monotone(x in 0.0f64..=1.0, y in 0.0f64..=1.0) {
            let g = GateConfig::default();
            let (lo, hi) = if x <= y { (x, y) } else { (y, x) };
            let b_lo = assign_bounds(lo, &g);
            let b_hi = assign_bounds(hi, &g);
            prop_assert!(b_hi.min <= b_lo.min);
            // the uncertain preset caps at 10^4 while the neutral band is
            // uncapped, so the cap only tightens once the score turns confident
            if hi > g.confident_above || lo >= g.uncertain_below {
                prop_assert!(b_hi.max <= b_lo.max);
            }
            prop_assert!(b_lo.min <= b_lo.max && b_hi.min <= b_hi.max);
        }
    }
}
