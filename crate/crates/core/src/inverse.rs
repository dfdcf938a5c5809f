//! Recovery of the fractional order from one observation `U(t0, α) = d0`.
//!
//! `U(t0, ·)` is strictly decreasing once `t0` exceeds the threshold time, so the order is
//! found by bisection. Every run samples `U` across the bracket first and refuses to
//! proceed if the samples are not strictly decreasing.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forward::{observation_u, solve, ForwardSolution};
use crate::kernel::check_alpha;
use crate::quadrature::QuadratureConfig;
use crate::sensitivity::{estimate_t0, ScanGrid};
use crate::spectral::{InitialData, ObservationWeights, SpectralOperator};

/// Number of equal subintervals of the bracket used by the monotonicity certificate; the
/// samples are the two endpoints and the 19 interior points.
pub const CERTIFICATE_INTERVALS: usize = 20;

pub const DEFAULT_BRACKET: (f64, f64) = (0.1, 0.95);

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InverseSpec {
    pub t0: f64,
    pub d0: f64,
    pub bracket: (f64, f64),
    pub alpha_tol: f64,
    /// Relative tolerance on `|U(t0, α̂) - d0| / d0`.
    pub value_tol: f64,
}

impl Default for InverseSpec {
    fn default() -> Self {
        Self {
            t0: f64::NAN,
            d0: f64::NAN,
            bracket: DEFAULT_BRACKET,
            alpha_tol: 1e-8,
            value_tol: 1e-10,
        }
    }
}

impl InverseSpec {
    pub fn new(t0: f64, d0: f64) -> Self {
        Self {
            t0,
            d0,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t0 >= 1.0) || !self.t0.is_finite() {
            return Err(Error::param(
                "t0",
                self.t0,
                "observation time must be finite and >= 1",
            ));
        }
        if !(self.d0 >= 0.0) || !self.d0.is_finite() {
            return Err(Error::param(
                "d0",
                self.d0,
                "observation must be finite and nonnegative",
            ));
        }
        validate_bracket(self.bracket)?;
        if !(self.alpha_tol > 0.0) {
            return Err(Error::param(
                "alpha_tol",
                self.alpha_tol,
                "must be positive",
            ));
        }
        if !(self.value_tol > 0.0) {
            return Err(Error::param(
                "value_tol",
                self.value_tol,
                "must be positive",
            ));
        }
        Ok(())
    }
}

fn validate_bracket((lo, hi): (f64, f64)) -> Result<()> {
    check_alpha(lo)?;
    check_alpha(hi)?;
    if !(lo < hi) {
        return Err(Error::param(
            "alpha_bracket",
            hi,
            "upper end must exceed lower end",
        ));
    }
    Ok(())
}

/// `lo, lo + h, …, hi` with `h = (hi - lo)/20`.
pub fn certificate_alphas((lo, hi): (f64, f64)) -> Vec<f64> {
    let n = CERTIFICATE_INTERVALS;
    (0..=n)
        .map(|i| match i {
            0 => lo,
            i if i == n => hi,
            i => lo + i as f64 * (hi - lo) / n as f64,
        })
        .collect()
}

/// How the observation time is checked against the threshold time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case", deny_unknown_fields)]
pub enum ThresholdGate {
    /// Run the threshold scan over the certificate α-samples.
    Verify {
        #[serde(default)]
        grid: ScanGrid,
    },
    /// A threshold time computed earlier.
    Precomputed { t0: f64 },
    /// Skip the threshold check; results are marked uncertified.
    Unsafe,
}

impl Default for ThresholdGate {
    fn default() -> Self {
        ThresholdGate::Verify {
            grid: ScanGrid::default(),
        }
    }
}

/// The fixed ingredients of the observation map `α ↦ U(t0, α)`.
#[derive(Debug, Clone, Copy)]
pub struct Observation<'a> {
    pub op: &'a SpectralOperator,
    pub data: &'a InitialData,
    pub gamma: f64,
    pub weights: &'a ObservationWeights,
    pub cfg: &'a QuadratureConfig,
}

impl Observation<'_> {
    pub fn u(&self, alpha: f64, t0: f64) -> Result<f64> {
        Ok(observation_u(
            self.op,
            self.data,
            alpha,
            self.gamma,
            t0,
            self.weights,
            self.cfg,
        )?
        .value)
    }

    fn degenerate(&self) -> bool {
        self.data
            .coefficients()
            .iter()
            .zip(self.weights.values())
            .all(|(c, w)| c * w == 0.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonotonicityCertificate {
    pub t0: f64,
    pub alphas: Vec<f64>,
    pub values: Vec<f64>,
    /// Threshold time the observation time was checked against; `None` when skipped.
    pub threshold: Option<f64>,
    /// `true` when the threshold check ran and passed.
    pub certified: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdmissibleRange {
    pub u_min: f64,
    pub u_max: f64,
    pub certificate: MonotonicityCertificate,
}

/// `[U(t0, hi), U(t0, lo)]`, after checking the threshold gate and sampling `U` for strict
/// decrease across the bracket.
pub fn admissible_range(
    obs: &Observation<'_>,
    t0: f64,
    bracket: (f64, f64),
    gate: ThresholdGate,
) -> Result<AdmissibleRange> {
    validate_bracket(bracket)?;
    if !(t0 >= 1.0) || !t0.is_finite() {
        return Err(Error::param(
            "t0",
            t0,
            "observation time must be finite and >= 1",
        ));
    }
    if obs.degenerate() {
        return Err(Error::DegenerateData);
    }
    let alphas = certificate_alphas(bracket);
    let threshold = match gate {
        ThresholdGate::Verify { grid } => {
            Some(estimate_t0(obs.gamma, obs.op.lambda1(), &alphas, grid, obs.cfg)?.t0)
        }
        ThresholdGate::Precomputed { t0 } => Some(t0),
        ThresholdGate::Unsafe => None,
    };
    if let Some(required) = threshold {
        if t0 < required {
            return Err(Error::ThresholdNotMet {
                t0,
                t0_required: required,
            });
        }
    }
    let values: Result<Vec<f64>> = alphas.par_iter().map(|&a| obs.u(a, t0)).collect();
    let values = values?;
    for (i, w) in values.windows(2).enumerate() {
        if !(w[1] < w[0]) {
            return Err(Error::MonotonicityViolation {
                t0,
                alpha_lo: alphas[i],
                alpha_hi: alphas[i + 1],
            });
        }
    }
    Ok(AdmissibleRange {
        u_min: *values.last().unwrap(),
        u_max: values[0],
        certificate: MonotonicityCertificate {
            t0,
            alphas,
            values,
            threshold,
            certified: threshold.is_some(),
        },
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Recovery {
    pub alpha_hat: f64,
    /// `U(t0, α̂) - d0`.
    pub residual: f64,
    pub iterations: usize,
    /// Final bisection bracket.
    pub bracket: (f64, f64),
    pub range: AdmissibleRange,
    #[serde(rename = "T0_used")]
    pub t0_used: Option<f64>,
    pub certified: bool,
}

/// Bisection for `U(t0, α) = d0` on the certified bracket.
pub fn recover_alpha(
    spec: &InverseSpec,
    obs: &Observation<'_>,
    gate: ThresholdGate,
) -> Result<Recovery> {
    spec.validate()?;
    if obs.degenerate() {
        return Err(Error::DegenerateData);
    }
    let range = admissible_range(obs, spec.t0, spec.bracket, gate)?;
    let d0 = spec.d0;
    if d0 < range.u_min || d0 > range.u_max {
        return Err(Error::NoSolution {
            d0,
            u_min: range.u_min,
            u_max: range.u_max,
        });
    }
    let (mut lo, mut hi) = spec.bracket;
    let mut iterations = 0;
    let mut hit = None;
    if d0 == range.u_max {
        hit = Some(lo);
    } else if d0 == range.u_min {
        hit = Some(hi);
    }
    while hit.is_none() && hi - lo > spec.alpha_tol {
        iterations += 1;
        let mid = 0.5 * (lo + hi);
        let u = obs.u(mid, spec.t0)?;
        if (u - d0).abs() <= spec.value_tol * d0 {
            hit = Some(mid);
        } else if u > d0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let alpha_hat = hit.unwrap_or(0.5 * (lo + hi));
    let residual = obs.u(alpha_hat, spec.t0)? - d0;
    Ok(Recovery {
        alpha_hat,
        residual,
        iterations,
        bracket: (lo, hi),
        t0_used: range.certificate.threshold,
        certified: range.certificate.certified,
        range,
    })
}

/// The recovered pair: `α̂` and the forward solution at `α̂`.
pub fn recover_and_solve<'a>(
    spec: &InverseSpec,
    obs: &Observation<'a>,
    gate: ThresholdGate,
    times: &[f64],
) -> Result<(Recovery, ForwardSolution<'a>)> {
    let rec = recover_alpha(spec, obs, gate)?;
    let sol = solve(obs.op, obs.data, rec.alpha_hat, obs.gamma, times, obs.cfg)?;
    Ok((rec, sol))
}
