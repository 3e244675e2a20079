//! Finite-shot sampling on top of exact probabilities.
//!
//! Randomness comes from ChaCha20 keyed by the tuple
//! (master seed, member index, sample index, domain tag): every sample of
//! every circuit owns an independent keystream, so results do not depend on
//! evaluation order or thread count.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

use crate::circuit::{Circuit, PostSelect};
use crate::densim::{evolve, register_probabilities};
use crate::error::{QemError, Result};
use crate::noise::NoiseModel;
use crate::observable::Observable;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShotConfig {
    pub n_qc: u64,
    pub n_samp: usize,
    pub seed: u64,
}

impl ShotConfig {
    pub fn new(n_qc: u64, n_samp: usize, seed: u64) -> Result<Self> {
        if n_qc == 0 || n_samp == 0 {
            return Err(QemError::InvalidParameter("n_qc and n_samp must be at least 1".into()));
        }
        Ok(Self { n_qc, n_samp, seed })
    }
}

/// Domain tags keep independent uses of the same (seed, member, sample) apart.
pub mod domain {
    pub const SHOTS: u64 = 1;
    pub const PEC: u64 = 2;
    pub const NOISE: u64 = 3;
}

pub fn stream_rng(seed: u64, member: u64, sample: u64, domain: u64) -> ChaCha20Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&member.to_le_bytes());
    key[16..24].copy_from_slice(&sample.to_le_bytes());
    key[24..].copy_from_slice(&domain.to_le_bytes());
    ChaCha20Rng::from_seed(key)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleSeries {
    pub values: Vec<f64>,
    pub mean: f64,
    /// Unbiased sample variance (0 for a single value).
    pub variance: f64,
}

impl SampleSeries {
    pub fn from_values(values: Vec<f64>) -> Self {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let variance = if values.len() > 1 {
            values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0)
        } else {
            0.0
        };
        Self { values, mean, variance }
    }

    pub fn std_error(&self) -> f64 {
        (self.variance / self.values.len() as f64).sqrt()
    }
}

/// Multinomial draw of `n_qc` shots. Probability mass missing from the total
/// (a rejected post-selection branch) is an implicit discard outcome.
pub fn sample_counts<R: Rng + ?Sized>(probs: &[f64], n_qc: u64, rng: &mut R) -> Result<Vec<u64>> {
    let mut p: Vec<f64> = Vec::with_capacity(probs.len());
    for &x in probs {
        if x < -1e-9 || !x.is_finite() {
            return Err(QemError::InvalidParameter(format!("probability {x} is negative")));
        }
        p.push(x.max(0.0));
    }
    let total: f64 = p.iter().sum();
    if total > 1.0 + 1e-9 {
        return Err(QemError::InvalidParameter(format!("probabilities sum to {total} > 1")));
    }
    let mut remaining_mass = 1.0f64.max(total);
    let mut remaining = n_qc;
    let mut counts = vec![0u64; p.len()];
    for (c, &pi) in counts.iter_mut().zip(&p) {
        if remaining == 0 {
            break;
        }
        if pi <= 0.0 {
            remaining_mass -= pi;
            continue;
        }
        let q = (pi / remaining_mass).clamp(0.0, 1.0);
        let k = if q >= 1.0 {
            remaining
        } else {
            Binomial::new(remaining, q).map_err(|e| QemError::Numeric(e.to_string()))?.sample(rng)
        };
        *c = k;
        remaining -= k;
        remaining_mass -= pi;
    }
    Ok(counts)
}

/// One shot estimate of a diagonal observable: Σ counts·o / N_QC.
pub fn estimate_from_counts(counts: &[u64], o: &Observable, n_qc: u64) -> f64 {
    counts.iter().zip(&o.diag).map(|(&c, &v)| c as f64 * v).sum::<f64>() / n_qc as f64
}

/// Shot series from known branch probabilities.
pub fn sample_series(probs: &[f64], o: &Observable, cfg: &ShotConfig, member: u64) -> Result<SampleSeries> {
    let mut values = Vec::with_capacity(cfg.n_samp);
    for i in 0..cfg.n_samp {
        let mut rng = stream_rng(cfg.seed, member, i as u64, domain::SHOTS);
        let counts = sample_counts(probs, cfg.n_qc, &mut rng)?;
        values.push(estimate_from_counts(&counts, o, cfg.n_qc));
    }
    Ok(SampleSeries::from_values(values))
}

/// Simulates the circuit exactly, then draws N_samp repetitions of N_QC
/// shots. Post-selected shots failing the ancilla condition count as zero but
/// still divide by N_QC.
pub fn estimate_expectation(
    c: &Circuit,
    o: &Observable,
    model: &NoiseModel,
    cfg: &ShotConfig,
    post: &[PostSelect],
    member: u64,
) -> Result<SampleSeries> {
    if !o.x_qubits.is_empty() {
        return Err(QemError::InvalidParameter("shot estimates need a diagonal observable; append the rotation first".into()));
    }
    let r = evolve(c, model, None)?;
    let probs = register_probabilities(&r, c.n_register, post);
    sample_series(&probs, o, cfg, member)
}

/// Slope α of (σ²)⁻¹ = α·N_QC through the origin, by least squares.
pub fn inverse_variance_fit(series: &[(f64, f64)]) -> Result<f64> {
    let pts: Vec<(f64, f64)> = series.iter().filter(|(_, v)| *v > 0.0 && v.is_finite()).map(|&(n, v)| (n, 1.0 / v)).collect();
    if pts.len() < 3 {
        return Err(QemError::InvalidParameter("inverse-variance fit needs at least 3 points with positive variance".into()));
    }
    let sxy: f64 = pts.iter().map(|(x, y)| x * y).sum();
    let sxx: f64 = pts.iter().map(|(x, _)| x * x).sum();
    Ok(sxy / sxx)
}
