//! Error ratios, mean squared errors and log-log slopes.

use serde::{Deserialize, Serialize};

use crate::error::{QemError, Result};

/// Denominators at or below this are treated as exact mitigation.
pub const SATURATION: f64 = 1e-14;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Ratio {
    Value(f64),
    /// The mitigated error vanished; the ratio is undefined.
    Saturated,
}

impl Ratio {
    pub fn value(&self) -> Option<f64> {
        match self {
            Ratio::Value(v) => Some(*v),
            Ratio::Saturated => None,
        }
    }

    /// True when the numerator error exceeds the denominator error; a
    /// saturated ratio counts as above one.
    pub fn is_above_one(&self) -> bool {
        match self {
            Ratio::Value(v) => *v > 1.0,
            Ratio::Saturated => true,
        }
    }
}

fn ratio(ideal: f64, num: f64, den: f64) -> Ratio {
    let d = (den - ideal).abs();
    if d <= SATURATION {
        Ratio::Saturated
    } else {
        Ratio::Value((num - ideal).abs() / d)
    }
}

/// RT_QEM = |noisy − ideal| / |mitigated − ideal|.
pub fn rt_qem(ideal: f64, noisy: f64, mitigated: f64) -> Ratio {
    ratio(ideal, noisy, mitigated)
}

/// RT_PEC/QEM = |pec − ideal| / |qem − ideal|.
pub fn rt_pec_qem(ideal: f64, pec_value: f64, qem_value: f64) -> Ratio {
    ratio(ideal, pec_value, qem_value)
}

pub fn mse(values: &[f64], ideal: f64) -> Result<f64> {
    if values.is_empty() {
        return Err(QemError::InvalidParameter("mean squared error of an empty series".into()));
    }
    Ok(values.iter().map(|v| (v - ideal) * (v - ideal)).sum::<f64>() / values.len() as f64)
}

/// Least-squares slope of ln y against ln x.
pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() {
        return Err(QemError::DimensionMismatch { expected: xs.len(), found: ys.len() });
    }
    if xs.len() < 3 {
        return Err(QemError::InvalidParameter("log-log slope needs at least 3 points".into()));
    }
    if xs.iter().chain(ys).any(|&v| !(v > 0.0)) {
        return Err(QemError::InvalidParameter("log-log slope needs positive data".into()));
    }
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let n = lx.len() as f64;
    let (mx, my) = (lx.iter().sum::<f64>() / n, ly.iter().sum::<f64>() / n);
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    Ok(sxy / sxx)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricPoint {
    pub theta_tau: f64,
    pub ideal: f64,
    pub noisy: f64,
    pub mitigated: f64,
    pub rt_qem: Ratio,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pec: Option<Vec<f64>>,
}

impl MetricPoint {
    pub fn new(theta_tau: f64, ideal: f64, noisy: f64, mitigated: f64) -> Self {
        Self { theta_tau, ideal, noisy, mitigated, rt_qem: rt_qem(ideal, noisy, mitigated), pec: None }
    }
}
