//! Sensitivity of the kernel to the fractional order.
//!
//! After the substitution `ξ = r t0`,
//!
//! ```text
//! B_α(λ, t0) = t0^{α-1} ∫_0^∞ e^{-ξ} b1(ξ) dξ,   b1 = g / (π (f² + g²)),
//! g = λγ ξ^α sin απ,   f = -ξ t0^{α-1} + λγ ξ^α cos απ + λ t0^α,
//! ```
//!
//! and `∂_α B` is the sum of five integrals `I_1..I_5`: one from `t0^{α-1}`, one from the
//! numerator `g`, three from the denominator. Each is split at `c0·t0` into a near part
//! `I_{j,0}` and a far part `I_{j,∞}`.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::{check_alpha, check_model, eval_b, KernelPoint};
use crate::quadrature::{Integrator, QuadratureConfig, Range};

/// Which of the two admissibility windows for `c0` applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitBranch {
    /// `γ + 1/λ1 < 1/2`: `1 < c0 < (γ + 1/λ1)^{-1}/2`.
    Wide,
    /// `γ + 1/λ1 ≥ 1/2`: `0 < c0^α < (γ + 1/λ1)^{-1}/2`.
    Narrow,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitConstant {
    pub value: f64,
    pub branch: SplitBranch,
}

/// Split constant `c0`. In the wide branch the midpoint of the admissible interval; in the
/// narrow branch `0.99·[(γ + 1/λ1)^{-1}/2]^{1/α}`, which depends on `α`.
pub fn c0_constant(gamma: f64, lambda1: f64, alpha: f64) -> Result<SplitConstant> {
    check_model(lambda1, gamma, alpha)?;
    let s = gamma + 1.0 / lambda1;
    let bound = 0.5 / s;
    if s < 0.5 {
        Ok(SplitConstant {
            value: 0.5 * (1.0 + bound),
            branch: SplitBranch::Wide,
        })
    } else {
        Ok(SplitConstant {
            value: 0.99 * bound.powf(1.0 / alpha),
            branch: SplitBranch::Narrow,
        })
    }
}

/// `f`, `g` and `b1` of the rescaled representation at one `ξ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScaledIntegrandParts {
    pub f: f64,
    pub g: f64,
    pub b1: f64,
}

/// Rescaled integrand pieces; `point.t` is taken as `t0`.
pub fn integrand_parts(xi: f64, point: &KernelPoint) -> Result<ScaledIntegrandParts> {
    if !(xi > 0.0) || !xi.is_finite() {
        return Err(Error::param("xi", xi, "must be positive and finite"));
    }
    if !(point.t() >= 1.0) {
        return Err(Error::param(
            "t0",
            point.t(),
            "rescaled form requires t0 >= 1",
        ));
    }
    Ok(Scaled::new(point).parts(xi))
}

/// Shared precomputation for the rescaled integrands.
#[derive(Debug, Clone, Copy)]
struct Scaled {
    lambda: f64,
    gamma: f64,
    alpha: f64,
    sin: f64,
    cos: f64,
    /// t0^{α-1}
    tam1: f64,
    /// t0^α
    ta: f64,
    ln_t0: f64,
}

struct Pointwise {
    p: f64,
    ln_xi: f64,
    f: f64,
    g: f64,
    d: f64,
    b1: f64,
}

impl Scaled {
    fn new(point: &KernelPoint) -> Self {
        let (sin, cos) = (point.alpha() * PI).sin_cos();
        let t0 = point.t();
        Self {
            lambda: point.lambda(),
            gamma: point.gamma(),
            alpha: point.alpha(),
            sin,
            cos,
            tam1: t0.powf(point.alpha() - 1.0),
            ta: t0.powf(point.alpha()),
            ln_t0: t0.ln(),
        }
    }

    #[inline]
    fn at(&self, xi: f64) -> Pointwise {
        let ln_xi = xi.ln();
        let p = (self.alpha * ln_xi).exp();
        let lg = self.lambda * self.gamma;
        let f = -xi * self.tam1 + lg * p * self.cos + self.lambda * self.ta;
        let g = lg * p * self.sin;
        let d = f * f + g * g;
        Pointwise {
            p,
            ln_xi,
            f,
            g,
            d,
            b1: g / (PI * d),
        }
    }

    fn parts(&self, xi: f64) -> ScaledIntegrandParts {
        let w = self.at(xi);
        ScaledIntegrandParts {
            f: w.f,
            g: w.g,
            b1: w.b1,
        }
    }

    /// Integrand of `I_{term+1}` without the `t0^{α-1}` prefactor.
    #[inline]
    fn integrand(&self, term: usize, xi: f64) -> f64 {
        if xi <= 0.0 {
            return 0.0;
        }
        let e = (-xi).exp();
        if e == 0.0 {
            return 0.0;
        }
        let w = self.at(xi);
        let lg = self.lambda * self.gamma;
        match term {
            0 => self.ln_t0 * e * w.b1,
            1 => {
                self.gamma / PI * e * self.lambda * w.p * (w.ln_xi * self.sin + PI * self.cos) / w.d
            }
            2 => {
                let x = -xi * self.tam1 + self.lambda * self.ta;
                -self.ln_t0 * e * w.b1 * 2.0 * w.f * x / w.d
            }
            3 => -e * w.b1 * 2.0 * w.f * lg * w.p * (w.ln_xi * self.cos - PI * self.sin) / w.d,
            4 => -e * w.b1 * 2.0 * w.g * lg * w.p * (w.ln_xi * self.sin + PI * self.cos) / w.d,
            _ => unreachable!("five terms"),
        }
    }

    /// Constant `E` with `|integrand(ξ)| ≤ E·e^{-ξ}(1 + ξ)` for `ξ ≥ 1`.
    fn envelope(&self, term: usize) -> f64 {
        let lgs = self.lambda * self.gamma * self.sin;
        match term {
            0 => self.ln_t0 / (PI * lgs),
            1 | 3 => 1.0 / (lgs * self.sin),
            2 => self.ln_t0 * (self.tam1 + self.lambda * self.ta) / (PI * lgs * lgs),
            4 => 2.0 / (lgs * self.sin),
            _ => unreachable!("five terms"),
        }
    }

    /// Rough size of `∫ e^{-ξ} b1`, for the absolute floor.
    fn magnitude(&self) -> f64 {
        self.gamma / (self.lambda * (self.ta + self.gamma).powi(2)) * (1.0 + self.ln_t0)
    }
}

/// The ten sub-integrals of `∂_α B` and their cross-check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensitivityBreakdown {
    /// `I_{j,0}`: integrals over `(0, c0 t0)`.
    pub near: [f64; 5],
    /// `I_{j,∞}`: integrals over `(c0 t0, ∞)`.
    pub far: [f64; 5],
    pub c0: SplitConstant,
    /// `c0·t0`.
    pub split: f64,
    /// `Σ near + Σ far`.
    pub total: f64,
    /// Central difference of `B` in `α`.
    pub fd_reference: f64,
    /// Whether `|total - fd_reference| ≤ max(1e-6, 1e-3·|fd_reference|)`.
    pub cross_check_ok: bool,
}

impl SensitivityBreakdown {
    /// `I_1..I_5`.
    pub fn terms(&self) -> [f64; 5] {
        std::array::from_fn(|k| self.near[k] + self.far[k])
    }

    /// Dominant near-field pair `J0 = I_{1,0} + I_{3,0}`.
    pub fn j0(&self) -> f64 {
        self.near[0] + self.near[2]
    }
}

pub const FD_STEP: f64 = 1e-5;

/// Tolerances of the decomposition/finite-difference cross-check.
pub const CROSS_CHECK_ABS: f64 = 1e-6;
pub const CROSS_CHECK_REL: f64 = 1e-3;

pub fn cross_check_tolerance(fd: f64) -> f64 {
    CROSS_CHECK_ABS.max(CROSS_CHECK_REL * fd.abs())
}

/// The ten sub-integrals only, without the finite-difference reference.
pub fn db_dalpha_terms(
    point: &KernelPoint,
    lambda1: f64,
    cfg: &QuadratureConfig,
) -> Result<([f64; 5], [f64; 5], SplitConstant, f64)> {
    if !(point.t() >= 1.0) {
        return Err(Error::param(
            "t0",
            point.t(),
            "sensitivity requires t0 >= 1",
        ));
    }
    if !(lambda1 > 0.0 && lambda1 <= point.lambda()) {
        return Err(Error::param(
            "lambda1",
            lambda1,
            "must satisfy 0 < lambda1 <= lambda",
        ));
    }
    let q = Integrator::new(cfg)?;
    let c0 = c0_constant(point.gamma(), lambda1, point.alpha())?;
    let split = c0.value * point.t();
    let sc = Scaled::new(point);
    let mag = sc.magnitude();
    let mut near = [0.0; 5];
    let mut far = [0.0; 5];
    for term in 0..5 {
        let env = sc.envelope(term);
        let bound = move |x: f64| {
            if x >= 1.0 {
                env * (-x).exp() * (x + 2.0)
            } else {
                f64::INFINITY
            }
        };
        let f = |xi: f64| sc.integrand(term, xi);
        let near_range = Range::between(0.0, split, split.min(1.0), mag)
            .origin_power(point.alpha())
            .tail_bound(&bound);
        near[term] = q.integrate(&f, &near_range)?.value * sc.tam1;
        let far_range = Range::between(split, f64::INFINITY, 1.0, mag).tail_bound(&bound);
        far[term] = q.integrate(&f, &far_range)?.value * sc.tam1;
    }
    let total = near.iter().sum::<f64>() + far.iter().sum::<f64>();
    Ok((near, far, c0, total))
}

/// `∂_α B_α(λ, t0)` by the five-term decomposition, with `λ1` the smallest eigenvalue used
/// for the split constant. `point.t()` is `t0 ≥ 1`.
pub fn db_dalpha(
    point: &KernelPoint,
    lambda1: f64,
    cfg: &QuadratureConfig,
) -> Result<SensitivityBreakdown> {
    let (near, far, c0, total) = db_dalpha_terms(point, lambda1, cfg)?;
    let h = FD_STEP
        .min(0.5 * point.alpha())
        .min(0.5 * (1.0 - point.alpha()));
    let fd_reference = db_dalpha_fd(point, h, cfg)?;
    let cross_check_ok = (total - fd_reference).abs() <= cross_check_tolerance(fd_reference);
    if !cross_check_ok {
        log::warn!(
            "sensitivity cross-check mismatch at {:?}: decomposition {total:e}, finite difference {fd_reference:e}",
            point
        );
    }
    Ok(SensitivityBreakdown {
        near,
        far,
        c0,
        split: c0.value * point.t(),
        total,
        fd_reference,
        cross_check_ok,
    })
}

/// Central difference `(B(α+h) - B(α-h)) / 2h` with the quadrature tolerance tightened to 1e-12.
pub fn db_dalpha_fd(point: &KernelPoint, h: f64, cfg: &QuadratureConfig) -> Result<f64> {
    if !(h > 0.0) {
        return Err(Error::param("h", h, "step must be positive"));
    }
    let a = point.alpha();
    check_alpha(a + h)?;
    check_alpha(a - h)?;
    let tight = cfg.tightened(1e-12);
    let up = eval_b(&point.with_alpha(a + h)?, &tight)?;
    let down = eval_b(&point.with_alpha(a - h)?, &tight)?;
    Ok((up - down) / (2.0 * h))
}

/// Geometric scan grid `start·2^k`, `k = 0..=doublings`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScanGrid {
    pub start: f64,
    pub doublings: u32,
}

impl Default for ScanGrid {
    fn default() -> Self {
        Self {
            start: 1.0,
            doublings: 20,
        }
    }
}

impl ScanGrid {
    pub fn times(&self) -> Vec<f64> {
        (0..=self.doublings)
            .map(|k| self.start * 2f64.powi(k as i32))
            .collect()
    }
}

/// Result of a threshold-time scan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdEstimate {
    /// Twice the smallest qualifying grid time.
    pub t0: f64,
    /// Smallest grid time from which every later grid time has `∂_α B < 0`.
    pub qualifying_time: f64,
    /// Largest grid time with a nonnegative derivative, if the scan met one.
    pub last_failure: Option<f64>,
    pub lambdas: Vec<f64>,
    pub alphas: Vec<f64>,
    pub grid: ScanGrid,
}

/// Eigenvalues checked by the threshold scan: `λ1, 10λ1, 100λ1`.
pub fn scan_lambdas(lambda1: f64) -> [f64; 3] {
    [lambda1, 10.0 * lambda1, 100.0 * lambda1]
}

/// Whether `∂_α B < 0` on every `(λ, α)` pair at time `t`.
pub fn negative_everywhere(
    gamma: f64,
    lambda1: f64,
    lambdas: &[f64],
    alphas: &[f64],
    t: f64,
    cfg: &QuadratureConfig,
) -> Result<bool> {
    let pairs: Vec<(f64, f64)> = lambdas
        .iter()
        .flat_map(|&l| alphas.iter().map(move |&a| (l, a)))
        .collect();
    let signs: Result<Vec<bool>> = pairs
        .par_iter()
        .map(|&(lambda, alpha)| {
            let p = KernelPoint::new(lambda, gamma, alpha, t)?;
            Ok(db_dalpha(&p, lambda1, cfg)?.total < 0.0)
        })
        .collect();
    Ok(signs?.into_iter().all(|neg| neg))
}

/// Heuristic threshold time `T0` beyond which `∂_α B_α(λ, t) < 0` for every `α` in the grid
/// and `λ ∈ {λ1, 10λ1, 100λ1}`. Scans the grid from the top down.
pub fn estimate_t0(
    gamma: f64,
    lambda1: f64,
    alpha_grid: &[f64],
    grid: ScanGrid,
    cfg: &QuadratureConfig,
) -> Result<ThresholdEstimate> {
    if alpha_grid.is_empty() {
        return Err(Error::InvalidInput("alpha grid is empty".into()));
    }
    for &a in alpha_grid {
        check_model(lambda1, gamma, a)?;
    }
    if !(grid.start >= 1.0) || !grid.start.is_finite() {
        return Err(Error::param(
            "start",
            grid.start,
            "scan must start at t >= 1",
        ));
    }
    let lambdas = scan_lambdas(lambda1);
    let times = grid.times();
    let mut qualifying = None;
    let mut last_failure = None;
    for &t in times.iter().rev() {
        if negative_everywhere(gamma, lambda1, &lambdas, alpha_grid, t, cfg)? {
            qualifying = Some(t);
        } else {
            last_failure = Some(t);
            break;
        }
    }
    let qualifying_time = qualifying.ok_or(Error::ThresholdNotFound {
        t_max: *times.last().expect("grid is nonempty"),
    })?;
    Ok(ThresholdEstimate {
        t0: 2.0 * qualifying_time,
        qualifying_time,
        last_failure,
        lambdas: lambdas.to_vec(),
        alphas: alpha_grid.to_vec(),
        grid,
    })
}

/// The pointwise inequalities on `f`, `F`, `b1` used by the sign argument.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundCheck {
    /// `λt0^α/2 ≤ f ≤ 3λt0^α/2` for `ξ ≤ c0 t0`.
    FTwoSided,
    /// `F ≤ -(3/4) λ² t0^{2α}` for `ξ ≤ c0 t0`.
    FNegative,
    /// `(λt0^α)²/4 ≤ f² + g² ≤ (10/4)(λt0^α)²` for `ξ ≤ c0 t0`.
    DenominatorTwoSided,
    /// Two-sided bound on `b1` for `ξ ≤ c0 t0`.
    B1TwoSided,
    /// `b1 ≤ ξ^{-α}/(πγλ sin απ)` for `ξ > c0 t0`.
    B1Far,
    /// `|F| ≤ 2(γ+1)²(λ²ξ^{2α} + ξ²)` for `ξ > c0 t0`, `t0 > 1`.
    FFar,
    /// `F = (λγξ^α + λt0^α - ξt0^{α-1})(λγξ^α + ξt0^{α-1} - λt0^α)`.
    Factorization,
}

impl BoundCheck {
    pub const ALL: [BoundCheck; 7] = [
        BoundCheck::FTwoSided,
        BoundCheck::FNegative,
        BoundCheck::DenominatorTwoSided,
        BoundCheck::B1TwoSided,
        BoundCheck::B1Far,
        BoundCheck::FFar,
        BoundCheck::Factorization,
    ];
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundViolation {
    pub check: BoundCheck,
    pub gamma: f64,
    pub lambda: f64,
    pub alpha: f64,
    pub t0: f64,
    pub xi: f64,
    pub c0: f64,
    /// Observed quantity and the bound it broke.
    pub value: f64,
    pub bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub samples: usize,
    pub checks: Vec<(BoundCheck, usize)>,
    pub violations: Vec<BoundViolation>,
}

impl BoundReport {
    pub fn violations_of(&self, check: BoundCheck) -> usize {
        self.violations.iter().filter(|v| v.check == check).count()
    }

    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LemmaGrid {
    pub gamma: f64,
    pub lambda1: f64,
    pub lambdas: Vec<f64>,
    pub alphas: Vec<f64>,
    pub t0s: Vec<f64>,
    pub samples_per_regime: usize,
}

impl LemmaGrid {
    /// `λ ∈ {λ1, 2λ1, 10λ1, 100λ1}`, `α ∈ {0.1, …, 0.9}`, `t0 ∈ {1, 10, 100, 1000}`, 200 samples.
    pub fn standard(gamma: f64, lambda1: f64) -> Self {
        Self {
            gamma,
            lambda1,
            lambdas: vec![lambda1, 2.0 * lambda1, 10.0 * lambda1, 100.0 * lambda1],
            alphas: (1..=9).map(|k| k as f64 / 10.0).collect(),
            t0s: vec![1.0, 10.0, 100.0, 1000.0],
            samples_per_regime: 200,
        }
    }
}

/// Relative slack for the pointwise inequalities.
const SLACK: f64 = 1e-12;

/// Samples `ξ` uniformly on `(0, c0 t0]` and `(c0 t0, 10 c0 t0]` and records every broken
/// inequality.
pub fn check_bound_lemmas(grid: &LemmaGrid) -> Result<BoundReport> {
    let n = grid.samples_per_regime;
    if n == 0 {
        return Err(Error::InvalidInput(
            "samples_per_regime must be positive".into(),
        ));
    }
    let mut counts: Vec<(BoundCheck, usize)> = BoundCheck::ALL.iter().map(|&c| (c, 0)).collect();
    let mut violations = Vec::new();
    let mut samples = 0;
    let mut tally = |check: BoundCheck, ok: bool, v: BoundViolation| {
        counts.iter_mut().find(|(c, _)| *c == check).unwrap().1 += 1;
        if !ok {
            violations.push(v);
        }
    };
    for &lambda in &grid.lambdas {
        if lambda < grid.lambda1 {
            return Err(Error::param(
                "lambda",
                lambda,
                "grid eigenvalues must be >= lambda1",
            ));
        }
        for &alpha in &grid.alphas {
            check_model(lambda, grid.gamma, alpha)?;
            let c0 = c0_constant(grid.gamma, grid.lambda1, alpha)?.value;
            for &t0 in &grid.t0s {
                let point = KernelPoint::new(lambda, grid.gamma, alpha, t0)?;
                let sc = Scaled::new(&point);
                let split = c0 * t0;
                let lt = lambda * sc.ta;
                let violation = |check, xi, value, bound| BoundViolation {
                    check,
                    gamma: grid.gamma,
                    lambda,
                    alpha,
                    t0,
                    xi,
                    c0,
                    value,
                    bound,
                };
                for i in 1..=2 * n {
                    let (xi, near) = if i <= n {
                        (split * i as f64 / n as f64, true)
                    } else {
                        (split * (1.0 + 9.0 * (i - n) as f64 / n as f64), false)
                    };
                    samples += 1;
                    let w = sc.at(xi);
                    let x = -xi * sc.tam1 + lambda * sc.ta;
                    let big_f = w.d - 2.0 * w.f * x;
                    let lgp = lambda * grid.gamma * w.p;
                    let factored = (lgp + lambda * sc.ta - xi * sc.tam1)
                        * (lgp + xi * sc.tam1 - lambda * sc.ta);
                    let scale = w.f * w.f + w.g * w.g + (2.0 * w.f * x).abs();
                    tally(
                        BoundCheck::Factorization,
                        (big_f - factored).abs() <= 1e-12 * scale,
                        violation(BoundCheck::Factorization, xi, big_f, factored),
                    );
                    if near {
                        let lo = 0.5 * lt;
                        let hi = 1.5 * lt;
                        let ok = w.f >= lo * (1.0 - SLACK) && w.f <= hi * (1.0 + SLACK);
                        let b = if w.f < lo { lo } else { hi };
                        tally(
                            BoundCheck::FTwoSided,
                            ok,
                            violation(BoundCheck::FTwoSided, xi, w.f, b),
                        );

                        let fb = -0.75 * lt * lt;
                        tally(
                            BoundCheck::FNegative,
                            big_f <= fb * (1.0 - SLACK),
                            violation(BoundCheck::FNegative, xi, big_f, fb),
                        );

                        let dlo = 0.25 * lt * lt;
                        let dhi = 2.5 * lt * lt;
                        let ok = w.d >= dlo * (1.0 - SLACK) && w.d <= dhi * (1.0 + SLACK);
                        let b = if w.d < dlo { dlo } else { dhi };
                        tally(
                            BoundCheck::DenominatorTwoSided,
                            ok,
                            violation(BoundCheck::DenominatorTwoSided, xi, w.d, b),
                        );

                        let core = w.p / (lambda * sc.ta * sc.ta);
                        let blo = 4.0 * grid.gamma * sc.sin / (10.0 * PI) * core;
                        let bhi = 4.0 * grid.gamma / PI * core;
                        let ok = w.b1 >= blo * (1.0 - SLACK) && w.b1 <= bhi * (1.0 + SLACK);
                        let b = if w.b1 < blo { blo } else { bhi };
                        tally(
                            BoundCheck::B1TwoSided,
                            ok,
                            violation(BoundCheck::B1TwoSided, xi, w.b1, b),
                        );
                    } else {
                        let bb = 1.0 / (PI * grid.gamma * lambda * sc.sin * w.p);
                        tally(
                            BoundCheck::B1Far,
                            w.b1 <= bb * (1.0 + SLACK),
                            violation(BoundCheck::B1Far, xi, w.b1, bb),
                        );
                        if t0 > 1.0 {
                            let fb = 2.0
                                * (grid.gamma + 1.0).powi(2)
                                * (lambda * lambda * w.p * w.p + xi * xi);
                            tally(
                                BoundCheck::FFar,
                                big_f.abs() <= fb * (1.0 + SLACK),
                                violation(BoundCheck::FFar, xi, big_f.abs(), fb),
                            );
                        }
                    }
                }
            }
        }
    }
    Ok(BoundReport {
        samples,
        checks: counts,
        violations,
    })
}

/// `∂_α B` on a whole grid of `α` at one `(λ, γ, t0)`, evaluated in parallel.
pub fn db_dalpha_many(
    lambda: f64,
    gamma: f64,
    t0: f64,
    lambda1: f64,
    alphas: &[f64],
    cfg: &QuadratureConfig,
) -> Result<Vec<SensitivityBreakdown>> {
    alphas
        .par_iter()
        .map(|&a| db_dalpha(&KernelPoint::new(lambda, gamma, a, t0)?, lambda1, cfg))
        .collect()
}
