//! Bias-corrected and accelerated bootstrap intervals.

use log::warn;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{PpmError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IntervalMethod {
    Bca,
    PercentileFallback,
}

impl std::fmt::Display for IntervalMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            IntervalMethod::Bca => "bca",
            IntervalMethod::PercentileFallback => "percentile_fallback",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConfidenceInterval {
    pub point: f64,
    pub se: f64,
    pub lower: f64,
    pub upper: f64,
    pub method: IntervalMethod,
    pub z0: Option<f64>,
    pub acceleration: Option<f64>,
}

fn standard_normal() -> Normal {
    Normal::new(0.0, 1.0).expect("unit normal")
}

/// Linear interpolation between order statistics ("type 7").
pub fn quantile_type7(sorted: &[f64], q: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let h = (n - 1) as f64 * q.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(n - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Jackknife acceleration `sum(d^3) / (6 (sum d^2)^1.5)`, `d = mean - theta_i`.
pub fn acceleration(jackknife: &[f64]) -> f64 {
    if jackknife.len() < 2 {
        return 0.0;
    }
    let mean = jackknife.iter().sum::<f64>() / jackknife.len() as f64;
    let (mut s2, mut s3) = (0.0, 0.0);
    for &t in jackknife {
        let d = mean - t;
        s2 += d * d;
        s3 += d * d * d;
    }
    if s2 <= 0.0 {
        0.0
    } else {
        s3 / (6.0 * s2.powf(1.5))
    }
}

/// Sample standard deviation; 0 for fewer than two values.
pub fn sample_sd(values: &[f64]) -> f64 {
    if values.len() < 2 {
        return 0.0;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    (values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0)).sqrt()
}

pub fn bca_interval(replicates: &[f64], jackknife: &[f64], point: f64, level: f64) -> Result<ConfidenceInterval> {
    if !(level > 0.0 && level < 1.0) {
        return Err(PpmError::Config(format!("interval level {level} outside (0, 1)")));
    }
    let mut sorted: Vec<f64> = replicates.iter().copied().filter(|v| v.is_finite()).collect();
    if sorted.is_empty() {
        return Err(PpmError::Undefined("no finite bootstrap replicates"));
    }
    sorted.sort_by(f64::total_cmp);
    let se = sample_sd(&sorted);
    let tail = (1.0 - level) / 2.0;
    let percentile = |z0, acceleration| {
        let a = quantile_type7(&sorted, tail);
        let b = quantile_type7(&sorted, 1.0 - tail);
        ConfidenceInterval {
            point,
            se,
            lower: a.min(b),
            upper: a.max(b),
            method: IntervalMethod::PercentileFallback,
            z0,
            acceleration,
        }
    };

    if sorted.first() == sorted.last() {
        return Ok(ConfidenceInterval {
            point,
            se,
            lower: point,
            upper: point,
            method: IntervalMethod::PercentileFallback,
            z0: None,
            acceleration: None,
        });
    }

    let b = sorted.len() as f64;
    let below = sorted.iter().filter(|&&v| v < point).count() as f64;
    let ties = sorted.iter().filter(|&&v| v == point).count() as f64;
    let frac = (below + 0.5 * ties) / b;
    if frac <= 0.0 || frac >= 1.0 {
        warn!("point estimate {point} lies outside the bootstrap distribution; using percentile interval");
        return Ok(percentile(None, None));
    }
    let normal = standard_normal();
    let z0 = if frac == 0.5 { 0.0 } else { normal.inverse_cdf(frac) };
    let a = acceleration(jackknife);
    let (q_lo, q_hi) = if z0 == 0.0 && a == 0.0 {
        (tail, 1.0 - tail)
    } else {
        let z = normal.inverse_cdf(1.0 - tail);
        let adjust = |zq: f64| {
            let denom = 1.0 - a * (z0 + zq);
            (denom > 0.0).then(|| normal.cdf(z0 + (z0 + zq) / denom))
        };
        match (adjust(-z), adjust(z)) {
            (Some(lo), Some(hi)) if lo.is_finite() && hi.is_finite() => (lo, hi),
            _ => {
                warn!("BCa adjustment undefined (acceleration {a}); using percentile interval");
                return Ok(percentile(Some(z0), Some(a)));
            }
        }
    };
    let lo = quantile_type7(&sorted, q_lo);
    let hi = quantile_type7(&sorted, q_hi);
    Ok(ConfidenceInterval {
        point,
        se,
        lower: lo.min(hi),
        upper: lo.max(hi),
        method: IntervalMethod::Bca,
        z0: Some(z0),
        acceleration: Some(a),
    })
}
