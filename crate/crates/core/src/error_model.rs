//! Power-law learning curves `Theta(v) = a v^-b` and their least-squares fit.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{out_of_range, Error, Result};
use crate::scenario::ErrorModelParams;

/// Upper end of the exponent search.
pub const MAX_EXPONENT: f64 = 2.0;
const EXPONENT_STEP: f64 = 1e-3;

/// One observed (sample size, classification error) pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitPoint {
    pub sample_size: f64,
    pub error: f64,
}

impl FitPoint {
    pub fn new(sample_size: f64, error: f64) -> Result<Self> {
        let p = Self { sample_size, error };
        p.validate()?;
        Ok(p)
    }

    fn validate(&self) -> Result<()> {
        if !(self.sample_size > 0.0 && self.sample_size.is_finite()) {
            return Err(out_of_range("sample_size", "v > 0"));
        }
        if !(0.0..=1.0).contains(&self.error) {
            return Err(out_of_range("error", "0 <= error <= 1"));
        }
        Ok(())
    }
}

pub fn predict(params: &ErrorModelParams, v: f64) -> Result<f64> {
    if !(v > 0.0) {
        return Err(Error::Domain(format!("sample count must be positive, got {v}")));
    }
    Ok(params.scale * v.powf(-params.exponent))
}

/// `beta * a * v^-b`, the pessimistic error used as the allocation objective.
pub fn predict_weighted(params: &ErrorModelParams, v: f64) -> Result<f64> {
    Ok(params.safety * predict(params, v)?)
}

/// Result of [`fit`]: the curve (with unit safety factor) and its mean
/// squared residual on the fitted points.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerLawFit {
    pub params: ErrorModelParams,
    pub mse: f64,
}

fn mse(points: &[FitPoint], a: f64, b: f64) -> f64 {
    points
        .iter()
        .map(|p| {
            let r = a * p.sample_size.powf(-b) - p.error;
            r * r
        })
        .sum::<f64>()
        / points.len() as f64
}

/// Best scale for a fixed exponent, clamped to `[0, a_max]`.
fn profile_scale(points: &[FitPoint], b: f64, a_max: f64) -> f64 {
    let (mut num, mut den) = (0.0, 0.0);
    for p in points {
        let w = p.sample_size.powf(-b);
        num += p.error * w;
        den += w * w;
    }
    (num / den).clamp(0.0, a_max)
}

/// Nonlinear least squares on raw errors: minimizes the mean of
/// `(error - a v^-b)^2` over `a >= 0`, `0 <= b <= 2`.
///
/// The exponent is scanned on a 0.001 grid with the scale solved in closed
/// form at each node, then the best node is polished with damped
/// Gauss-Newton steps. Identical errors yield `b = 0` and `a` = their mean.
pub fn fit(points: &[FitPoint]) -> Result<PowerLawFit> {
    for p in points {
        if !(p.sample_size > 0.0 && p.sample_size.is_finite()) {
            return Err(out_of_range("sample_size", "v > 0"));
        }
        if !(p.error >= 0.0 && p.error.is_finite()) {
            return Err(out_of_range("error", "error >= 0"));
        }
    }
    let mut sizes: Vec<f64> = points.iter().map(|p| p.sample_size).collect();
    sizes.sort_by(f64::total_cmp);
    sizes.dedup();
    if sizes.len() < 2 {
        return Err(Error::InsufficientFitData(
            "need at least two distinct sample sizes".into(),
        ));
    }
    if points.iter().all(|p| p.error == 0.0) {
        return Err(Error::InsufficientFitData("all observed errors are zero".into()));
    }
    let first = points[0].error;
    if points.iter().all(|p| p.error == first) {
        return Ok(PowerLawFit {
            params: ErrorModelParams {
                scale: first,
                exponent: 0.0,
                safety: 1.0,
            },
            mse: 0.0,
        });
    }

    // work on errors scaled to a unit maximum so tolerances are relative
    let max_err = points.iter().map(|p| p.error).fold(0.0, f64::max);
    let points: Vec<FitPoint> = points
        .iter()
        .map(|p| FitPoint {
            error: p.error / max_err,
            ..*p
        })
        .collect();
    let points = points.as_slice();
    let a_max = sizes[0].powf(MAX_EXPONENT);

    let steps = (MAX_EXPONENT / EXPONENT_STEP).round() as usize;
    let (mut a, mut b, mut best) = (0.0, 0.0, f64::INFINITY);
    for i in 0..=steps {
        let bi = i as f64 * EXPONENT_STEP;
        let ai = profile_scale(points, bi, a_max);
        let obj = mse(points, ai, bi);
        if obj < best {
            (a, b, best) = (ai, bi, obj);
        }
    }

    // Levenberg-Marquardt polish, accepting decreases only.
    let mut lambda = 1e-3;
    for _ in 0..500 {
        let (mut jtj, mut jtr) = ([[0.0; 2]; 2], [0.0; 2]);
        for p in points {
            let w = p.sample_size.powf(-b);
            let r = a * w - p.error;
            let j = [w, -a * p.sample_size.ln() * w];
            for x in 0..2 {
                jtr[x] += j[x] * r;
                for y in 0..2 {
                    jtj[x][y] += j[x] * j[y];
                }
            }
        }
        let grad = (jtr[0].hypot(jtr[1])) * 2.0 / points.len() as f64;
        if grad < 1e-15 {
            break;
        }
        let mut improved = false;
        for _ in 0..30 {
            let m00 = jtj[0][0] * (1.0 + lambda);
            let m11 = jtj[1][1] * (1.0 + lambda);
            let det = m00 * m11 - jtj[0][1] * jtj[1][0];
            if det == 0.0 || !det.is_finite() {
                lambda *= 10.0;
                continue;
            }
            let da = -(m11 * jtr[0] - jtj[0][1] * jtr[1]) / det;
            let db = -(m00 * jtr[1] - jtj[1][0] * jtr[0]) / det;
            let (na, nb) = ((a + da).max(0.0), (b + db).clamp(0.0, MAX_EXPONENT));
            let obj = mse(points, na, nb);
            if obj < best {
                (a, b, best) = (na, nb, obj);
                lambda = (lambda * 0.3).max(1e-12);
                improved = true;
                break;
            }
            lambda *= 10.0;
        }
        if !improved {
            break;
        }
    }

    Ok(PowerLawFit {
        params: ErrorModelParams {
            scale: a * max_err,
            exponent: b,
            safety: 1.0,
        },
        mse: best * max_err * max_err,
    })
}

/// Largest absolute gap between held-out observations and the curve.
/// An empty holdout gives 0.
pub fn extrapolation_check(params: &ErrorModelParams, holdout: &[FitPoint]) -> f64 {
    holdout
        .iter()
        .map(|p| (p.error - params.scale * p.sample_size.powf(-params.exponent)).abs())
        .fold(0.0, f64::max)
}

/// Reads a `sample_size,error` CSV.
pub fn read_fit_points<R: Read>(reader: R) -> Result<Vec<FitPoint>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let mut out = Vec::new();
    for row in rdr.deserialize() {
        let p: FitPoint = row?;
        p.validate()?;
        out.push(p);
    }
    Ok(out)
}

pub fn write_fit_points<W: Write>(writer: W, points: &[FitPoint]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for p in points {
        w.serialize(p)?;
    }
    w.flush()?;
    Ok(())
}
