//! The relaxation kernel `B_α(λ, t)`: the solution of `y' + λ(1 + γ∂_t^α)y = 0`, `y(0) = 1`,
//! evaluated through its Laplace-type representation
//!
//! ```text
//! B_α(λ, t) = ∫_0^∞ e^{-rt} b_α(λ, r) dr,
//! b_α(λ, r) = (γ/π) λ r^α sin απ / [(-r + λγ r^α cos απ + λ)^2 + (λγ r^α sin απ)^2].
//! ```

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::{Integrator, QuadratureConfig, Range};

/// The tuple `(λ, γ, α, t)` at which the kernel is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelPoint {
    lambda: f64,
    gamma: f64,
    alpha: f64,
    t: f64,
}

impl KernelPoint {
    pub fn new(lambda: f64, gamma: f64, alpha: f64, t: f64) -> Result<Self> {
        check_model(lambda, gamma, alpha)?;
        if !(t >= 0.0) || !t.is_finite() {
            return Err(Error::param("t", t, "time must be finite and nonnegative"));
        }
        Ok(Self {
            lambda,
            gamma,
            alpha,
            t,
        })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }
    pub fn gamma(&self) -> f64 {
        self.gamma
    }
    pub fn alpha(&self) -> f64 {
        self.alpha
    }
    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn with_t(self, t: f64) -> Result<Self> {
        Self::new(self.lambda, self.gamma, self.alpha, t)
    }

    pub fn with_alpha(self, alpha: f64) -> Result<Self> {
        Self::new(self.lambda, self.gamma, alpha, self.t)
    }

    pub fn with_lambda(self, lambda: f64) -> Result<Self> {
        Self::new(lambda, self.gamma, self.alpha, self.t)
    }
}

pub(crate) fn check_model(lambda: f64, gamma: f64, alpha: f64) -> Result<()> {
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(Error::param(
            "lambda",
            lambda,
            "eigenvalue must be positive and finite",
        ));
    }
    if !(gamma > 0.0) || !gamma.is_finite() {
        return Err(Error::param(
            "gamma",
            gamma,
            "viscoelastic constant must be positive and finite",
        ));
    }
    check_alpha(alpha)
}

pub(crate) fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::param(
            "alpha",
            alpha,
            "fractional order must lie in the open interval (0, 1)",
        ));
    }
    Ok(())
}

/// Precomputed trigonometry and regime boundaries for one `(λ, γ, α)`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Kernel {
    pub lambda: f64,
    pub gamma: f64,
    pub alpha: f64,
    pub sin: f64,
    pub cos: f64,
    /// Beyond this `r`, `|-r + λγ r^α cos απ + λ| ≥ r/2` and `b ≤ (4γλ sin απ/π) r^{α-2}`.
    pub r_asym: f64,
}

impl Kernel {
    pub fn new(lambda: f64, gamma: f64, alpha: f64) -> Self {
        let (sin, cos) = (alpha * std::f64::consts::PI).sin_cos();
        let lg = lambda * gamma;
        // h(r) = r/2 - λ - λγ r^α is increasing past r_star.
        let r_star = (2.0 * alpha * lg).powf(1.0 / (1.0 - alpha));
        let mut r = (4.0 * lambda).max(r_star).max(1.0);
        while r / 2.0 < lambda + lg * r.powf(alpha) {
            r *= 2.0;
        }
        Self {
            lambda,
            gamma,
            alpha,
            sin,
            cos,
            r_asym: r,
        }
    }

    pub fn from_point(p: &KernelPoint) -> Self {
        Self::new(p.lambda, p.gamma, p.alpha)
    }

    /// Spectral density; no argument checks.
    #[inline]
    pub fn density(&self, r: f64) -> f64 {
        let lg = self.lambda * self.gamma;
        if r <= 1.0 {
            let ra = r.powf(self.alpha);
            let re = -r + lg * ra * self.cos + self.lambda;
            let im = lg * ra * self.sin;
            self.gamma / std::f64::consts::PI * self.lambda * ra * self.sin / (re * re + im * im)
        } else {
            // divide through by r^2 to stay finite for huge r
            let ram1 = r.powf(self.alpha - 1.0);
            let re = -1.0 + lg * ram1 * self.cos + self.lambda / r;
            let im = lg * ram1 * self.sin;
            self.gamma / std::f64::consts::PI * self.lambda * self.sin * ram1
                / r
                / (re * re + im * im)
        }
    }

    /// `sup_{r ≥ R} b(r)·r^{2-α}` style constant for the asymptotic regime.
    fn far_constant(&self) -> f64 {
        4.0 * self.gamma * self.lambda * self.sin / std::f64::consts::PI
    }

    /// `b(r) ≤ near_constant·r^{-α}` for every `r > 0`.
    fn near_constant(&self) -> f64 {
        1.0 / (std::f64::consts::PI * self.lambda * self.gamma * self.sin)
    }

    fn origin_scale(&self, t: f64) -> f64 {
        let mut a = self.lambda.min(1.0);
        if t > 0.0 {
            a = a.min(1.0 / t);
        }
        a
    }

    /// Rough size of `B(t)`, used only to scale the absolute quadrature floor.
    pub fn magnitude(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 1.0;
        }
        let ta = t.powf(self.alpha);
        let m = t.powf(self.alpha - 1.0) * self.gamma / (self.lambda * (ta + self.gamma).powi(2));
        m.min(1.0)
    }

    /// `∫_R^∞ e^{-rt} b(r) dr`, `t > 0`.
    fn exp_tail(&self, big_r: f64, t: f64) -> f64 {
        let decay = (-big_r * t).exp() / t;
        if big_r >= self.r_asym {
            self.far_constant() * big_r.powf(self.alpha - 2.0) * decay
        } else {
            self.near_constant() * big_r.powf(-self.alpha) * decay
        }
    }

    /// `∫_R^∞ r e^{-rt} b(r) dr`, `t > 0`.
    fn exp_tail_first_moment(&self, big_r: f64, t: f64) -> f64 {
        let decay = (-big_r * t).exp();
        if big_r >= self.r_asym {
            self.far_constant() * big_r.powf(self.alpha - 1.0) * decay / t
        } else {
            // ∫_R^∞ r^β e^{-rt} ≤ e^{-Rt} (R^β/t + β R^{β-1}/t^2) for 0 < β < 1
            let beta = 1.0 - self.alpha;
            self.near_constant()
                * decay
                * (big_r.powf(beta) / t + beta * big_r.powf(beta - 1.0) / (t * t))
        }
    }

    pub fn eval(&self, q: &Integrator, t: f64) -> Result<f64> {
        let ker = *self;
        let scale = self.origin_scale(t);
        let mag = self.magnitude(t);
        let est = if t > 0.0 {
            let bound = move |r: f64| ker.exp_tail(r, t);
            let f = move |r: f64| (-r * t).exp() * ker.density(r);
            let range = Range::half_line(scale, mag)
                .origin_power(self.alpha)
                .tail_bound(&bound)
                .algebraic_tail(self.r_asym, self.alpha - 2.0);
            q.integrate(&f, &range)?
        } else {
            let f = move |r: f64| ker.density(r);
            let range = Range::half_line(scale, mag)
                .origin_power(self.alpha)
                .algebraic_tail(self.r_asym, self.alpha - 2.0);
            q.integrate(&f, &range)?
        };
        Ok(est.value)
    }

    pub fn eval_dt(&self, q: &Integrator, t: f64) -> Result<f64> {
        let ker = *self;
        let bound = move |r: f64| ker.exp_tail_first_moment(r, t);
        let f = move |r: f64| r * (-r * t).exp() * ker.density(r);
        let range = Range::half_line(self.origin_scale(t), self.magnitude(t) / t)
            .origin_power(self.alpha)
            .tail_bound(&bound);
        Ok(-q.integrate(&f, &range)?.value)
    }

    pub fn time_integral(&self, q: &Integrator, horizon: f64) -> Result<f64> {
        let ker = *self;
        let f = move |r: f64| -(-r * horizon).exp_m1() / r * ker.density(r);
        let range = Range::half_line(self.origin_scale(horizon), horizon.min(1.0 / self.lambda))
            .origin_power(self.alpha)
            .algebraic_tail(self.r_asym, self.alpha - 3.0);
        Ok(q.integrate(&f, &range)?.value)
    }
}

/// Spectral density `b_α(λ, r)`; `point.t` is ignored.
pub fn density_b(point: &KernelPoint, r: f64) -> Result<f64> {
    if !(r > 0.0) || !r.is_finite() {
        return Err(Error::param("r", r, "density is defined for finite r > 0"));
    }
    Ok(Kernel::from_point(point).density(r))
}

/// `B_α(λ, t)`. At `t = 0` the bare density integral is computed.
pub fn eval_b(point: &KernelPoint, cfg: &QuadratureConfig) -> Result<f64> {
    let q = Integrator::new(cfg)?;
    Kernel::from_point(point).eval(&q, point.t)
}

/// `∂_t B_α(λ, t) = -∫_0^∞ r e^{-rt} b_α(λ, r) dr`, defined for `t > 0`.
pub fn eval_db_dt(point: &KernelPoint, cfg: &QuadratureConfig) -> Result<f64> {
    if !(point.t > 0.0) {
        return Err(Error::param(
            "t",
            point.t,
            "time derivative is unbounded at t = 0; require t > 0",
        ));
    }
    let q = Integrator::new(cfg)?;
    Kernel::from_point(point).eval_dt(&q, point.t)
}

/// `∫_0^T B_α(λ, t) dt = ∫_0^∞ (1 - e^{-rT})/r · b_α(λ, r) dr`.
pub fn time_integral_b(
    lambda: f64,
    gamma: f64,
    alpha: f64,
    horizon: f64,
    cfg: &QuadratureConfig,
) -> Result<f64> {
    check_model(lambda, gamma, alpha)?;
    if !(horizon > 0.0) || !horizon.is_finite() {
        return Err(Error::param(
            "T",
            horizon,
            "horizon must be positive and finite",
        ));
    }
    let q = Integrator::new(cfg)?;
    Kernel::new(lambda, gamma, alpha).time_integral(&q, horizon)
}

/// `B` at every time in `times` for one `(λ, γ, α)`, evaluated in parallel.
pub fn eval_b_many(
    lambda: f64,
    gamma: f64,
    alpha: f64,
    times: &[f64],
    cfg: &QuadratureConfig,
) -> Result<Vec<f64>> {
    check_model(lambda, gamma, alpha)?;
    let q = Integrator::new(cfg)?;
    let ker = Kernel::new(lambda, gamma, alpha);
    times
        .par_iter()
        .map(|&t| {
            if !(t >= 0.0) || !t.is_finite() {
                return Err(Error::param("t", t, "time must be finite and nonnegative"));
            }
            ker.eval(&q, t)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn cfg() -> QuadratureConfig {
        QuadratureConfig::default()
    }

    #[test]
    fn rejects_inadmissible_points() {
        assert!(KernelPoint::new(0.0, 1.0, 0.5, 1.0).is_err());
        assert!(KernelPoint::new(1.0, 0.0, 0.5, 1.0).is_err());
        assert!(KernelPoint::new(1.0, 1.0, 0.0, 1.0).is_err());
        assert!(KernelPoint::new(1.0, 1.0, 1.0, 1.0).is_err());
        assert!(KernelPoint::new(1.0, 1.0, 0.5, -1.0).is_err());
        assert!(KernelPoint::new(1.0, 1.0, f64::NAN, 1.0).is_err());
        let err = KernelPoint::new(1.0, 1.0, 1.0, 0.0).unwrap_err();
        assert!(err.to_string().contains("open interval"));
    }

    #[test]
    fn density_closed_form_at_unit_r() {
        let p = KernelPoint::new(1.0, 1.0, 0.5, 0.0).unwrap();
        let v = density_b(&p, 1.0).unwrap();
        assert!((v - 1.0 / PI).abs() < 1e-15);
        assert!(density_b(&p, 0.0).is_err());
        assert!(density_b(&p, -1.0).is_err());
    }

    #[test]
    fn density_vanishes_like_sqrt_at_origin() {
        let p = KernelPoint::new(1.0, 1.0, 0.5, 0.0).unwrap();
        let mut prev = f64::INFINITY;
        for k in 4..16 {
            let r = 10f64.powi(-k);
            let v = density_b(&p, r).unwrap();
            assert!(v < prev);
            // b ≈ (γ sin απ/(πλ)) r^α near zero
            let ratio = v / r.sqrt();
            assert!(
                (ratio - 1.0 / PI).abs() < 2e-2 * 1.0 / PI,
                "ratio {ratio} at r={r}"
            );
            prev = v;
        }
    }

    #[test]
    fn density_algebraic_decay() {
        let p = KernelPoint::new(2.0, 1.0, 0.3, 0.0).unwrap();
        assert!(density_b(&p, 1e6).unwrap() < 1e-6);
        let mut prev = f64::INFINITY;
        for k in 3..=8 {
            let r = 10f64.powi(k);
            let v = density_b(&p, r).unwrap();
            assert!(v < prev);
            let slope = if prev.is_finite() {
                (v / prev).log10()
            } else {
                0.3 - 2.0
            };
            assert!((slope - (0.3 - 2.0)).abs() < 0.05, "slope {slope} at r={r}");
            prev = v;
        }
    }

    #[test]
    fn unit_at_time_zero() {
        let p = KernelPoint::new(3.0, 2.0, 0.7, 0.0).unwrap();
        assert!((eval_b(&p, &cfg()).unwrap() - 1.0).abs() < 1e-8);
    }

    #[test]
    fn decreasing_in_time() {
        let p1 = KernelPoint::new(2.0, 1.0, 0.5, 1.0).unwrap();
        let b1 = eval_b(&p1, &cfg()).unwrap();
        let b2 = eval_b(&p1.with_t(2.0).unwrap(), &cfg()).unwrap();
        assert!(0.0 < b2 && b2 < b1 && b1 < 1.0);
    }

    #[test]
    fn time_derivative_matches_central_difference() {
        let p = KernelPoint::new(2.0, 1.0, 0.5, 1.0).unwrap();
        let tight = cfg().tightened(1e-13);
        let d = eval_db_dt(&p, &cfg()).unwrap();
        let h = 1e-5;
        let fd = (eval_b(&p.with_t(1.0 + h).unwrap(), &tight).unwrap()
            - eval_b(&p.with_t(1.0 - h).unwrap(), &tight).unwrap())
            / (2.0 * h);
        assert!(d < 0.0);
        assert!((d - fd).abs() < 1e-6, "{d} vs {fd}");
    }

    #[test]
    fn time_derivative_negative_and_decaying() {
        let p = KernelPoint::new(5.0, 1.0, 0.3, 10.0).unwrap();
        assert!(eval_db_dt(&p, &cfg()).unwrap() < 0.0);
        let q = KernelPoint::new(2.0, 1.0, 0.5, 1.0).unwrap();
        let near = eval_db_dt(&q, &cfg()).unwrap();
        let far = eval_db_dt(&q.with_t(1e3).unwrap(), &cfg()).unwrap();
        assert!(far.abs() < near.abs());
        assert!(eval_db_dt(&q.with_t(0.0).unwrap(), &cfg()).is_err());
    }

    #[test]
    fn time_integral_bounded_by_inverse_lambda() {
        let v1 = time_integral_b(1.0, 1.0, 0.5, 100.0, &cfg()).unwrap();
        assert!(v1 <= 1.0 + 1e-8 && v1 > 0.0);
        let v10 = time_integral_b(10.0, 1.0, 0.5, 100.0, &cfg()).unwrap();
        assert!(v10 <= 0.1 + 1e-9 && v10 > 0.0);
        let small = time_integral_b(2.0, 1.0, 0.5, 1e-6, &cfg()).unwrap();
        assert!(small > 0.5e-6 && small < 2e-6, "{small}");
        assert!(time_integral_b(1.0, 1.0, 0.5, 0.0, &cfg()).is_err());
    }

    #[test]
    fn batch_matches_scalar() {
        let ts = [0.0, 0.5, 3.0];
        let many = eval_b_many(2.0, 0.5, 0.4, &ts, &cfg()).unwrap();
        for (t, v) in ts.iter().zip(&many) {
            let p = KernelPoint::new(2.0, 0.5, 0.4, *t).unwrap();
            assert_eq!(*v, eval_b(&p, &cfg()).unwrap());
        }
    }
}
