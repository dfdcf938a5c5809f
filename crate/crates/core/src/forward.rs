//! Eigenfunction-expansion solution `u(t) = Σ φ_k B_α(λ_k, t) v_k` and the observation
//! `U(t, α) = Σ Φ(λ_k)² B_α(λ_k, t)² φ_k²`.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma as gamma_fn;

use crate::error::{Error, Result};
use crate::kernel::{check_model, eval_b, KernelPoint};
use crate::quadrature::QuadratureConfig;
use crate::spectral::{DomainPoint, InitialData, ObservationWeights, SpectralOperator};

/// `C` in `λ B_α(λ, t) ≤ C t^{α-1}`, from `b_α(λ, r) ≤ r^{-α} / (πλγ sin απ)`.
pub fn decay_constant(gamma: f64, alpha: f64) -> f64 {
    gamma_fn(1.0 - alpha) / (PI * gamma * (alpha * PI).sin())
}

/// Upper bound on `B_α(λ, t)` that needs no quadrature.
pub fn kernel_bound(lambda: f64, gamma: f64, alpha: f64, t: f64) -> f64 {
    if t <= 0.0 {
        return 1.0;
    }
    (decay_constant(gamma, alpha) * t.powf(alpha - 1.0) / lambda).min(1.0)
}

/// Modes evaluated per batch before the tail is re-checked.
const BATCH: usize = 16;

fn check_data(op: &SpectralOperator, data: &InitialData) -> Result<()> {
    if data.len() != op.len() {
        return Err(Error::InvalidInput(format!(
            "initial data has {} coefficients, operator keeps {} modes",
            data.len(),
            op.len()
        )));
    }
    Ok(())
}

fn kernel_at(
    mode: usize,
    lambda: f64,
    gamma: f64,
    alpha: f64,
    t: f64,
    cfg: &QuadratureConfig,
) -> Result<f64> {
    KernelPoint::new(lambda, gamma, alpha, t)
        .and_then(|p| eval_b(&p, cfg))
        .map_err(|e| Error::Mode {
            mode: mode + 1,
            lambda,
            source: Box::new(e),
        })
}

/// Certified series value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeriesValue {
    pub value: f64,
    /// Number of leading modes actually evaluated.
    pub modes_used: usize,
    /// Bound on the omitted modes' contribution.
    pub tail_bound: f64,
}

/// Kernel values of the leading modes, stopping once the remaining modes are certified
/// below `rel_tol` of the partial sum `Σ (a_k B(λ_k, t))²`.
struct LazySeries {
    /// `B(λ_k, t)` for the evaluated modes (0 where `a_k = 0`).
    kernels: Vec<f64>,
    value: f64,
    tail_bound: f64,
}

fn lazy_series(
    lambdas: &[f64],
    amp: &[f64],
    alpha: f64,
    gamma: f64,
    t: f64,
    cfg: &QuadratureConfig,
) -> Result<LazySeries> {
    let bounds: Vec<f64> = amp
        .iter()
        .zip(lambdas)
        .map(|(a, &l)| (a * kernel_bound(l, gamma, alpha, t)).powi(2))
        .collect();
    let mut suffix = vec![0.0; bounds.len() + 1];
    for k in (0..bounds.len()).rev() {
        suffix[k] = suffix[k + 1] + bounds[k];
    }
    let mut kernels = Vec::with_capacity(amp.len());
    let mut value = 0.0;
    while kernels.len() < amp.len() {
        let done = kernels.len();
        if suffix[done] <= cfg.rel_tol * value {
            break;
        }
        let end = (done + BATCH).min(amp.len());
        let batch: Result<Vec<f64>> = (done..end)
            .into_par_iter()
            .map(|k| kernel_value(k, lambdas[k], amp[k], gamma, alpha, t, cfg))
            .collect();
        for (k, b) in (done..end).zip(batch?) {
            value += (amp[k] * b).powi(2);
            kernels.push(b);
        }
    }
    Ok(LazySeries {
        tail_bound: suffix[kernels.len()],
        kernels,
        value,
    })
}

fn kernel_value(
    k: usize,
    lambda: f64,
    amp: f64,
    gamma: f64,
    alpha: f64,
    t: f64,
    cfg: &QuadratureConfig,
) -> Result<f64> {
    if amp == 0.0 {
        Ok(0.0)
    } else if t == 0.0 {
        Ok(1.0)
    } else {
        kernel_at(k, lambda, gamma, alpha, t, cfg)
    }
}

/// `U(t0, α) = ‖Φ(A) u(t0)‖²`.
pub fn observation_u(
    op: &SpectralOperator,
    data: &InitialData,
    alpha: f64,
    gamma: f64,
    t0: f64,
    weights: &ObservationWeights,
    cfg: &QuadratureConfig,
) -> Result<SeriesValue> {
    check_model(op.lambda1(), gamma, alpha)?;
    check_data(op, data)?;
    if !(t0 > 0.0) || !t0.is_finite() {
        return Err(Error::param("t0", t0, "observation time must be positive"));
    }
    let amp: Vec<f64> = data
        .coefficients()
        .iter()
        .zip(weights.values())
        .map(|(c, w)| c * w)
        .collect();
    let s = lazy_series(op.eigenvalues(), &amp, alpha, gamma, t0, cfg)?;
    Ok(SeriesValue {
        value: s.value,
        modes_used: s.kernels.len(),
        tail_bound: s.tail_bound,
    })
}

/// Mode amplitudes `T_k(t) = φ_k B_α(λ_k, t)` on a time grid.
#[derive(Debug, Clone)]
pub struct ForwardSolution<'a> {
    pub alpha: f64,
    pub gamma: f64,
    op: &'a SpectralOperator,
    times: Vec<f64>,
    /// `amplitudes[k][i] = T_k(times[i])` for `k < modes_used`.
    amplitudes: Vec<Vec<f64>>,
    modes_used: usize,
    /// Certified bound on the omitted part of `‖u(t_i)‖²`.
    tail_bounds: Vec<f64>,
}

impl<'a> ForwardSolution<'a> {
    pub fn operator(&self) -> &'a SpectralOperator {
        self.op
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn modes_used(&self) -> usize {
        self.modes_used
    }

    pub fn amplitude(&self, k: usize, i: usize) -> f64 {
        self.amplitudes.get(k).map_or(0.0, |row| row[i])
    }

    pub fn tail_bounds(&self) -> &[f64] {
        &self.tail_bounds
    }

    /// `‖u(t_i)‖²` over the time grid.
    pub fn norm_sq(&self) -> Vec<f64> {
        (0..self.times.len())
            .map(|i| self.amplitudes.iter().map(|row| row[i] * row[i]).sum())
            .collect()
    }

    /// `u(x, t_i)` for each grid time (outer) and point (inner).
    pub fn synthesize(&self, points: &[DomainPoint]) -> Result<Vec<Vec<f64>>> {
        let mut basis = Vec::with_capacity(self.modes_used);
        for k in 0..self.modes_used {
            let row: Result<Vec<f64>> =
                points.iter().map(|x| self.op.eigenfunction(k, x)).collect();
            basis.push(row?);
        }
        if self.modes_used == 0 {
            for x in points {
                self.op.eigenfunction(0, x)?;
            }
        }
        Ok((0..self.times.len())
            .map(|i| {
                (0..points.len())
                    .map(|j| {
                        (0..self.modes_used)
                            .map(|k| self.amplitudes[k][i] * basis[k][j])
                            .sum()
                    })
                    .collect()
            })
            .collect())
    }
}

/// Forward solution on a nonnegative ascending time grid.
pub fn solve<'a>(
    op: &'a SpectralOperator,
    data: &InitialData,
    alpha: f64,
    gamma: f64,
    times: &[f64],
    cfg: &QuadratureConfig,
) -> Result<ForwardSolution<'a>> {
    check_model(op.lambda1(), gamma, alpha)?;
    check_data(op, data)?;
    if let Some(&t) = times.iter().find(|t| !(**t >= 0.0) || !t.is_finite()) {
        return Err(Error::param("t", t, "times must be nonnegative and finite"));
    }
    if times.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidInput("time grid must be ascending".into()));
    }
    let c = data.coefficients();
    let lambdas = op.eigenvalues();
    let mut series = Vec::with_capacity(times.len());
    for &t in times {
        series.push(lazy_series(lambdas, c, alpha, gamma, t, cfg)?);
    }
    let modes_used = series.iter().map(|s| s.kernels.len()).max().unwrap_or(0);
    // Times that stopped early still need the modes kept for the others.
    let mut amplitudes = vec![vec![0.0; times.len()]; modes_used];
    let mut tail_bounds = Vec::with_capacity(times.len());
    for (i, (s, &t)) in series.iter().zip(times).enumerate() {
        let have = s.kernels.len();
        let extra: Result<Vec<f64>> = (have..modes_used)
            .into_par_iter()
            .map(|k| kernel_value(k, lambdas[k], c[k], gamma, alpha, t, cfg))
            .collect();
        for (k, b) in s.kernels.iter().copied().chain(extra?).enumerate() {
            amplitudes[k][i] = c[k] * b;
        }
        let omitted: f64 = c[modes_used..]
            .iter()
            .zip(&lambdas[modes_used..])
            .map(|(a, &l)| (a * kernel_bound(l, gamma, alpha, t)).powi(2))
            .sum();
        tail_bounds.push(omitted);
    }
    Ok(ForwardSolution {
        alpha,
        gamma,
        op,
        times: times.to_vec(),
        amplitudes,
        modes_used,
        tail_bounds,
    })
}
