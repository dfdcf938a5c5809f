//! Adaptive Gauss–Legendre panel quadrature on finite intervals and the half-line.
//!
//! Half-line integrals are split into three regimes:
//!
//! * an origin panel `[0, scale]`, optionally mapped through `x = scale·s^{1/p}` so that an
//!   integrand behaving like `x^p·h(x^p)` becomes smooth in `s`;
//! * geometrically doubling panels `[x, 2x]`, each refined adaptively;
//! * either a certified tail bound (stop once `∫_x^∞ |f| ≤ tol`), or, for integrands with a
//!   known algebraic decay `x^p` (`p < -1`), the whole tail mapped onto `(0, 1]` through
//!   `x = R·v^{-1/(-1-p)}`.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerances and limits for every adaptive integral in the crate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QuadratureConfig {
    /// Target relative accuracy.
    pub rel_tol: f64,
    /// Absolute floor, applied relative to the magnitude hint of each integral.
    pub abs_tol: f64,
    /// Limit on geometric panels, and on adaptive subdivisions inside any one panel.
    pub max_panels: usize,
    /// Gauss–Legendre nodes per panel.
    pub panel_order: usize,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self {
            rel_tol: 1e-10,
            abs_tol: 1e-14,
            max_panels: 200,
            panel_order: 15,
        }
    }
}

impl QuadratureConfig {
    pub fn new(rel_tol: f64, abs_tol: f64, max_panels: usize, panel_order: usize) -> Result<Self> {
        let cfg = Self {
            rel_tol,
            abs_tol,
            max_panels,
            panel_order,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tol >= 100.0 * f64::EPSILON) || !self.rel_tol.is_finite() {
            return Err(Error::param(
                "rel_tol",
                self.rel_tol,
                "must be finite and at least 100 machine epsilons",
            ));
        }
        if !(self.abs_tol > 0.0) || !self.abs_tol.is_finite() {
            return Err(Error::param("abs_tol", self.abs_tol, "must be positive"));
        }
        if self.max_panels < 4 {
            return Err(Error::param(
                "max_panels",
                self.max_panels as f64,
                "must be at least 4",
            ));
        }
        if !(2..=128).contains(&self.panel_order) {
            return Err(Error::param(
                "panel_order",
                self.panel_order as f64,
                "must lie in 2..=128",
            ));
        }
        Ok(())
    }

    /// Same configuration with the relative tolerance tightened to at most `rel_tol`.
    pub fn tightened(mut self, rel_tol: f64) -> Self {
        self.rel_tol = self.rel_tol.min(rel_tol);
        self
    }
}

/// Gauss–Legendre rule on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    /// Nodes by Newton iteration on `P_n` from the Tricomi initial guesses.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss-Legendre order must be positive");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = n.div_ceil(2);
        for i in 0..m {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() <= 1e-16 * x.abs().max(1.0) {
                    let (_, d) = legendre(n, x);
                    dp = d;
                    break;
                }
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        Self { nodes, weights }
    }

    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// `(∫_a^b f, ∫_a^b |f|)` by the fixed rule.
    pub fn apply<F: Fn(f64) -> f64 + ?Sized>(&self, f: &F, a: f64, b: f64) -> (f64, f64) {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        let mut sum = 0.0;
        let mut sum_abs = 0.0;
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            let v = w * f(mid + half * x);
            sum += v;
            sum_abs += v.abs();
        }
        (sum * half, sum_abs * half.abs())
    }
}

/// Legendre polynomial `P_n(x)` and its derivative.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Value, absolute-value integral and error bound of a quadrature.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub abs_value: f64,
    pub error: f64,
    /// Subintervals used.
    pub segments: usize,
}

impl std::ops::AddAssign for Estimate {
    fn add_assign(&mut self, rhs: Self) {
        self.value += rhs.value;
        self.abs_value += rhs.abs_value;
        self.error += rhs.error;
        self.segments += rhs.segments;
    }
}

/// Algebraic decay `|f(x)| ~ x^power` valid from `start` onwards.
#[derive(Debug, Clone, Copy)]
pub(crate) struct AlgebraicTail {
    pub start: f64,
    pub power: f64,
}

/// Description of an integral over `[lower, upper]`, `upper` possibly infinite.
pub(crate) struct Range<'a> {
    pub lower: f64,
    pub upper: f64,
    /// Behaviour `x^p` at the origin, used for the origin substitution. Only read when `lower == 0`.
    pub origin_power: Option<f64>,
    /// Width of the origin panel; later panels double.
    pub scale: f64,
    /// Rough size of the result; the absolute floor is `abs_tol·magnitude`.
    pub magnitude: f64,
    /// Certified bound on `∫_x^∞ |f|`.
    pub tail_bound: Option<&'a dyn Fn(f64) -> f64>,
    pub algebraic_tail: Option<AlgebraicTail>,
}

impl<'a> Range<'a> {
    pub fn half_line(scale: f64, magnitude: f64) -> Self {
        Self {
            lower: 0.0,
            upper: f64::INFINITY,
            origin_power: None,
            scale,
            magnitude,
            tail_bound: None,
            algebraic_tail: None,
        }
    }

    pub fn between(lower: f64, upper: f64, scale: f64, magnitude: f64) -> Self {
        Self {
            lower,
            upper,
            ..Self::half_line(scale, magnitude)
        }
    }

    pub fn origin_power(mut self, p: f64) -> Self {
        self.origin_power = Some(p);
        self
    }

    pub fn tail_bound(mut self, bound: &'a dyn Fn(f64) -> f64) -> Self {
        self.tail_bound = Some(bound);
        self
    }

    pub fn algebraic_tail(mut self, start: f64, power: f64) -> Self {
        debug_assert!(power < -1.0);
        self.algebraic_tail = Some(AlgebraicTail { start, power });
        self
    }
}

struct Segment {
    a: f64,
    b: f64,
    left: (f64, f64),
    right: (f64, f64),
    error: f64,
}

impl Segment {
    fn value(&self) -> (f64, f64) {
        (self.left.0 + self.right.0, self.left.1 + self.right.1)
    }
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error.total_cmp(&other.error) == Ordering::Equal
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

/// Adaptive integrator bound to one configuration.
#[derive(Debug, Clone)]
pub struct Integrator {
    rule: GaussLegendre,
    cfg: QuadratureConfig,
}

impl Integrator {
    pub fn new(cfg: &QuadratureConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(Self {
            rule: GaussLegendre::new(cfg.panel_order),
            cfg: *cfg,
        })
    }

    pub fn config(&self) -> &QuadratureConfig {
        &self.cfg
    }

    fn segment<F: Fn(f64) -> f64 + ?Sized>(
        &self,
        f: &F,
        a: f64,
        b: f64,
        coarse: (f64, f64),
    ) -> Segment {
        let m = 0.5 * (a + b);
        let left = self.rule.apply(f, a, m);
        let right = self.rule.apply(f, m, b);
        let error = (left.0 + right.0 - coarse.0).abs();
        Segment {
            a,
            b,
            left,
            right,
            error,
        }
    }

    /// Globally adaptive bisection on `[a, b]` until the summed error is below
    /// `max(rel_tol·∫|f|, floor)`.
    pub fn finite<F: Fn(f64) -> f64 + ?Sized>(
        &self,
        f: &F,
        a: f64,
        b: f64,
        floor: f64,
    ) -> Result<Estimate> {
        if b <= a {
            return Ok(Estimate::default());
        }
        let coarse = self.rule.apply(f, a, b);
        let mut heap = BinaryHeap::new();
        let first = self.segment(f, a, b, coarse);
        let (mut value, mut abs_value) = first.value();
        let mut error = first.error;
        heap.push(first);
        loop {
            if !value.is_finite() {
                return Err(Error::QuadratureNonConvergence {
                    panels: heap.len(),
                    estimate: value,
                    error,
                });
            }
            let tol = (self.cfg.rel_tol * abs_value).max(floor);
            if error <= tol {
                break;
            }
            if heap.len() >= self.cfg.max_panels {
                return Err(Error::QuadratureNonConvergence {
                    panels: heap.len(),
                    estimate: value,
                    error,
                });
            }
            let worst = heap.pop().expect("heap is never empty");
            let m = 0.5 * (worst.a + worst.b);
            if m <= worst.a || m >= worst.b {
                return Err(Error::QuadratureNonConvergence {
                    panels: heap.len() + 1,
                    estimate: value,
                    error,
                });
            }
            let l = self.segment(f, worst.a, m, worst.left);
            let r = self.segment(f, m, worst.b, worst.right);
            let (wv, wa) = worst.value();
            let (lv, la) = l.value();
            let (rv, ra) = r.value();
            value += lv + rv - wv;
            abs_value += la + ra - wa;
            error += l.error + r.error - worst.error;
            heap.push(l);
            heap.push(r);
        }
        // Re-sum to shed the drift of the running updates.
        let (mut v, mut av, mut e) = (0.0, 0.0, 0.0);
        let segments = heap.len();
        for s in heap {
            let (sv, sa) = s.value();
            v += sv;
            av += sa;
            e += s.error;
        }
        Ok(Estimate {
            value: v,
            abs_value: av,
            error: e,
            segments,
        })
    }

    /// Integral over a [`Range`], see the module documentation for the strategy.
    pub(crate) fn integrate<F: Fn(f64) -> f64 + ?Sized>(
        &self,
        f: &F,
        range: &Range<'_>,
    ) -> Result<Estimate> {
        let cfg = &self.cfg;
        let floor = cfg.abs_tol * range.magnitude;
        let mut acc = Estimate::default();
        let mut x = range.lower;
        if range.lower >= range.upper {
            return Ok(acc);
        }
        if range.lower == 0.0 {
            let a = range.scale.min(range.upper);
            let piece = match range.origin_power {
                Some(p) => {
                    let inv = 1.0 / p;
                    let g = |s: f64| {
                        if s <= 0.0 {
                            return 0.0;
                        }
                        let sp = s.powf(inv - 1.0);
                        f(a * s * sp) * a * inv * sp
                    };
                    self.finite(&g, 0.0, 1.0, floor)?
                }
                None => self.finite(f, 0.0, a, floor)?,
            };
            acc += piece;
            x = a;
        }
        let mut panels = 0usize;
        let mut last_abs = f64::INFINITY;
        while x < range.upper {
            if let Some(tail) = range.algebraic_tail {
                if x >= tail.start && range.upper.is_infinite() {
                    let q = 1.0 / (-1.0 - tail.power);
                    let start = x;
                    let g = |v: f64| {
                        if v <= 0.0 {
                            return 0.0;
                        }
                        let r = start * v.powf(-q);
                        if !r.is_finite() {
                            return 0.0;
                        }
                        f(r) * r * q / v
                    };
                    acc += self.finite(&g, 0.0, 1.0, floor)?;
                    return Ok(acc);
                }
            }
            if let Some(bound) = range.tail_bound {
                let tol = (cfg.rel_tol * acc.abs_value).max(floor);
                let tail = bound(x);
                let quiet = panels == 0 || last_abs <= tol;
                if quiet && tail <= tol {
                    acc.error += tail;
                    return Ok(acc);
                }
            }
            panels += 1;
            if panels > cfg.max_panels {
                return Err(Error::QuadratureNonConvergence {
                    panels,
                    estimate: acc.value,
                    error: acc.error,
                });
            }
            let next = (2.0 * x).min(range.upper);
            let piece = self.finite(f, x, next, floor)?;
            last_abs = piece.abs_value;
            acc += piece;
            x = next;
        }
        if range.upper.is_infinite() {
            // Only reachable with a zero lower limit and no tail information.
            return Err(Error::InvalidInput(
                "half-line integral without tail information".into(),
            ));
        }
        Ok(acc)
    }
}
