//! Brute-force Grünwald–Letnikov solver for the scalar Cauchy problem
//! `y' + λ(1 + γ∂_t^α)y = 0`, `y(0) = y0`.
//!
//! Used only as an independent check of the quadrature kernel. Writing `y = y0 + z`, the
//! Riemann–Liouville derivative splits into `∂^α z + y0 t^{-α}/Γ(1-α)`. The scheme is implicit
//! Grünwald–Letnikov in `z` (full-history convolution `h^{-α} Σ_{j=0}^{n} w_j z_{n-j}`, backward
//! Euler in `z'`) with the singular constant part replaced by its exact average over the step:
//!
//! ```text
//! (z_n - z_{n-1})/h + λ z_n + λγ h^{-α} Σ_j w_j z_{n-j}
//!     = -λ y0 - λγ y0 (t_n^{1-α} - t_{n-1}^{1-α}) / (h Γ(2-α)).
//! ```
//!
//! This is the differenced form of first-order convolution quadrature for the integrated
//! equation `y + λ I^1 y + λγ I^{1-α} y = y0`, so the error at fixed `t > 0` is `O(h)`.
//! Applying the convolution to `y` itself (discrete derivative of the constant history)
//! only converges like `h^{1-α}`.

use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma as gamma_fn;

use crate::error::{Error, Result};
use crate::kernel::check_model;

/// Largest number of steps the O(n²) convolution is allowed to take.
pub const MAX_STEPS: usize = 10_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OracleConfig {
    /// Uniform step.
    pub h: f64,
    /// Horizon.
    pub horizon: f64,
}

impl OracleConfig {
    pub fn new(h: f64, horizon: f64) -> Result<Self> {
        if !(h > 0.0) || !h.is_finite() {
            return Err(Error::param("h", h, "step must be positive"));
        }
        if !(horizon > 0.0) || !horizon.is_finite() {
            return Err(Error::param("T", horizon, "horizon must be positive"));
        }
        if h > horizon / 10.0 * (1.0 + 1e-12) {
            return Err(Error::param("h", h, "step must not exceed T/10"));
        }
        if horizon / h > MAX_STEPS as f64 * (1.0 + 1e-12) {
            return Err(Error::param("h", h, "T/h exceeds the 1e7 step guard"));
        }
        Ok(Self { h, horizon })
    }

    pub fn steps(&self) -> usize {
        (self.horizon / self.h).round() as usize
    }
}

/// Grünwald–Letnikov weights `w_j = (-1)^j binom(α, j)`, `j = 0..=n`.
pub fn gl_weights(alpha: f64, n: usize) -> Vec<f64> {
    let mut w = Vec::with_capacity(n + 1);
    w.push(1.0);
    for j in 1..=n {
        let prev = w[j - 1];
        w.push(prev * (1.0 - (alpha + 1.0) / j as f64));
    }
    w
}

/// Discrete trajectory `(t_n, y_n)`, `t_n = n h`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub h: f64,
    pub y: Vec<f64>,
}

impl Trajectory {
    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.y.len()).map(move |n| n as f64 * self.h)
    }

    /// Value at the grid point nearest to `t`; `None` if `t` is off the grid by more than 1e-9 h.
    pub fn at(&self, t: f64) -> Option<f64> {
        let n = (t / self.h).round();
        if (n * self.h - t).abs() > 1e-9 * self.h || n < 0.0 {
            return None;
        }
        self.y.get(n as usize).copied()
    }
}

pub fn solve_scalar(
    lambda: f64,
    gamma: f64,
    alpha: f64,
    y0: f64,
    cfg: &OracleConfig,
) -> Result<Trajectory> {
    check_model(lambda, gamma, alpha)?;
    let cfg = OracleConfig::new(cfg.h, cfg.horizon)?;
    let n = cfg.steps();
    let h = cfg.h;
    let w = gl_weights(alpha, n);
    let c = lambda * gamma * h.powf(-alpha);
    let diag = 1.0 / h + lambda + c * w[0];
    let start = lambda * gamma / (h * gamma_fn(2.0 - alpha));
    let mut z: Vec<f64> = Vec::with_capacity(n + 1);
    z.push(0.0);
    let mut prev_pow = 0.0;
    for step in 1..=n {
        // Σ_{j=1}^{n} w_j z_{n-j}
        let mut hist = 0.0;
        for (wj, zk) in w[1..=step].iter().zip(z.iter().rev()) {
            hist += wj * zk;
        }
        let pow = (step as f64 * h).powf(1.0 - alpha);
        let forcing = -lambda - start * (pow - prev_pow);
        prev_pow = pow;
        z.push((z[step - 1] / h + forcing - c * hist) / diag);
    }
    let y = z.into_iter().map(|zn| y0 + y0 * zn).collect();
    Ok(Trajectory { h, y })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weights_by_hand() {
        let w = gl_weights(0.5, 2);
        assert_eq!(w, vec![1.0, -0.5, -0.125]);
        assert_eq!(gl_weights(0.3, 0), vec![1.0]);
    }

    #[test]
    fn weight_partial_sums_vanish() {
        let s: f64 = gl_weights(0.5, 10_000).iter().sum();
        assert!(s.abs() < 1e-2, "{s}");
        assert!(s > 0.0);
        // alternating-sign tail: all w_j, j ≥ 1, share the sign of -α
        assert!(gl_weights(0.7, 50)[1..].iter().all(|&x| x < 0.0));
    }

    #[test]
    fn config_guards() {
        assert!(OracleConfig::new(0.5, 2.0).is_err());
        assert!(OracleConfig::new(1e-8, 1.0).is_err());
        assert!(OracleConfig::new(1e-3, 2.0).is_ok());
    }

    #[test]
    fn trajectory_positive_and_decreasing() {
        let cfg = OracleConfig::new(1e-3, 2.0).unwrap();
        let tr = solve_scalar(2.0, 1.0, 0.5, 1.0, &cfg).unwrap();
        assert_eq!(tr.y.len(), 2001);
        for pair in tr.y.windows(2) {
            assert!(pair[1] < pair[0]);
            assert!(pair[1] > 0.0 && pair[1] < 1.0);
        }
    }

    #[test]
    fn linear_in_initial_value() {
        let cfg = OracleConfig::new(1e-3, 1.0).unwrap();
        let one = solve_scalar(2.0, 1.0, 0.5, 1.0, &cfg).unwrap();
        let two = solve_scalar(2.0, 1.0, 0.5, 2.0, &cfg).unwrap();
        for (a, b) in one.y.iter().zip(&two.y) {
            assert_eq!(2.0 * a, *b);
        }
    }

    #[test]
    fn first_order_convergence() {
        let at1 = |h: f64| {
            let cfg = OracleConfig::new(h, 1.0).unwrap();
            solve_scalar(2.0, 1.0, 0.5, 1.0, &cfg)
                .unwrap()
                .at(1.0)
                .unwrap()
        };
        let (a, b, c) = (at1(4e-3), at1(2e-3), at1(1e-3));
        let d1 = (a - b).abs();
        let d2 = (b - c).abs();
        let ratio = d1 / d2;
        assert!(d2 < d1);
        assert!((1.6..2.5).contains(&ratio), "ratio {ratio}");
    }
}
