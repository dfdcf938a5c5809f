//! Operators with explicitly known spectra: the Dirichlet Laplacian on an interval and on a
//! rectangle, and symmetric positive-definite matrices.

use std::f64::consts::PI;

use nalgebra::{DMatrix, SymmetricEigen};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::GaussLegendre;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Domain {
    Interval { length: f64 },
    Rectangle { lx: f64, ly: f64 },
    Matrix { n: usize },
}

/// A point of the operator domain; `Index` addresses a component for matrix operators.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DomainPoint {
    X(f64),
    Xy(f64, f64),
    Index(usize),
}

#[derive(Debug, Clone)]
enum Modes {
    Sine(Vec<usize>),
    Product(Vec<(usize, usize)>),
    /// Orthonormal eigenvectors as columns.
    Vectors(DMatrix<f64>),
}

/// Truncated eigen-system `(λ_k, v_k)`, `k = 1..=K`, sorted by nondecreasing eigenvalue.
#[derive(Debug, Clone)]
pub struct SpectralOperator {
    domain: Domain,
    eigenvalues: Vec<f64>,
    modes: Modes,
}

/// Gauss–Legendre order of the composite rule used for expansions and Gram matrices.
const NODES_PER_PANEL: usize = 32;
/// Boundary slack when checking that a point lies in the closed domain.
const DOMAIN_SLACK: f64 = 1e-12;

fn positive(name: &'static str, v: f64) -> Result<f64> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(Error::param(name, v, "must be positive and finite"))
    }
}

fn modes_count(k: usize) -> Result<usize> {
    if k == 0 {
        return Err(Error::InvalidInput(
            "truncation K must be at least 1".into(),
        ));
    }
    Ok(k)
}

impl SpectralOperator {
    /// `-d²/dx²` on `(0, L)` with Dirichlet conditions: `λ_k = (kπ/L)²`, `v_k = √(2/L) sin(kπx/L)`.
    pub fn dirichlet_interval(length: f64, k: usize) -> Result<Self> {
        let length = positive("L", length)?;
        let k = modes_count(k)?;
        let idx: Vec<usize> = (1..=k).collect();
        let eigenvalues = idx
            .iter()
            .map(|&j| (j as f64 * PI / length).powi(2))
            .collect();
        Ok(Self {
            domain: Domain::Interval { length },
            eigenvalues,
            modes: Modes::Sine(idx),
        })
    }

    /// Dirichlet Laplacian on `(0, Lx) × (0, Ly)`; the `K` smallest eigenvalues, ties ordered by
    /// `(m, n)`.
    pub fn dirichlet_rectangle(lx: f64, ly: f64, k: usize) -> Result<Self> {
        let lx = positive("Lx", lx)?;
        let ly = positive("Ly", ly)?;
        let k = modes_count(k)?;
        // The K smallest eigenvalues all have m, n ≤ K: (j, 1), j ≤ K, already gives K smaller ones.
        let mut all: Vec<(f64, usize, usize)> = (1..=k)
            .flat_map(|m| (1..=k).map(move |n| (m, n)))
            .map(|(m, n)| {
                let l = (m as f64 * PI / lx).powi(2) + (n as f64 * PI / ly).powi(2);
                (l, m, n)
            })
            .collect();
        all.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
        all.truncate(k);
        Ok(Self {
            domain: Domain::Rectangle { lx, ly },
            eigenvalues: all.iter().map(|e| e.0).collect(),
            modes: Modes::Product(all.iter().map(|e| (e.1, e.2)).collect()),
        })
    }

    /// Full eigendecomposition of a symmetric positive-definite matrix.
    pub fn matrix_operator(m: &DMatrix<f64>) -> Result<Self> {
        let n = m.nrows();
        if n == 0 || m.ncols() != n {
            return Err(Error::NotSpd(format!(
                "matrix must be square and nonempty, got {}x{}",
                n,
                m.ncols()
            )));
        }
        if m.iter().any(|v| !v.is_finite()) {
            return Err(Error::NotSpd("matrix has non-finite entries".into()));
        }
        for i in 0..n {
            for j in 0..i {
                if (m[(i, j)] - m[(j, i)]).abs() > 1e-12 {
                    return Err(Error::NotSpd(format!(
                        "asymmetric at ({i}, {j}): {} vs {}",
                        m[(i, j)],
                        m[(j, i)]
                    )));
                }
            }
        }
        let sym = (m + m.transpose()) * 0.5;
        let eig = SymmetricEigen::new(sym);
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| {
            eig.eigenvalues[a]
                .total_cmp(&eig.eigenvalues[b])
                .then(a.cmp(&b))
        });
        let eigenvalues: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
        if let Some(&bad) = eigenvalues.iter().find(|&&l| !(l > 0.0)) {
            return Err(Error::NotSpd(format!("eigenvalue {bad} is not positive")));
        }
        let mut vectors = DMatrix::zeros(n, n);
        for (col, &i) in order.iter().enumerate() {
            let mut v = eig.eigenvectors.column(i).into_owned();
            // Fix the sign so that the largest-magnitude component is positive.
            let lead = v
                .iter()
                .copied()
                .fold(0.0f64, |acc, x| if x.abs() > acc.abs() { x } else { acc });
            if lead < 0.0 {
                v.neg_mut();
            }
            vectors.set_column(col, &v);
        }
        Ok(Self {
            domain: Domain::Matrix { n },
            eigenvalues,
            modes: Modes::Vectors(vectors),
        })
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    pub fn lambda1(&self) -> f64 {
        self.eigenvalues[0]
    }

    /// Mode labels: `k`, `(m, n)` or the eigenvector column.
    pub fn mode_label(&self, k: usize) -> String {
        match &self.modes {
            Modes::Sine(idx) => idx[k].to_string(),
            Modes::Product(mn) => format!("{}:{}", mn[k].0, mn[k].1),
            Modes::Vectors(_) => (k + 1).to_string(),
        }
    }

    fn check_point(&self, x: &DomainPoint) -> Result<()> {
        let inside = |v: f64, l: f64| v >= -DOMAIN_SLACK * l && v <= l * (1.0 + DOMAIN_SLACK);
        let ok = match (&self.domain, x) {
            (Domain::Interval { length }, DomainPoint::X(v)) => inside(*v, *length),
            (Domain::Rectangle { lx, ly }, DomainPoint::Xy(a, b)) => {
                inside(*a, *lx) && inside(*b, *ly)
            }
            (Domain::Matrix { n }, DomainPoint::Index(i)) => i < n,
            _ => false,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::OutOfDomain(format!("{x:?} for {:?}", self.domain)))
        }
    }

    /// `v_k(x)` for the zero-based mode index `k`.
    pub fn eigenfunction(&self, k: usize, x: &DomainPoint) -> Result<f64> {
        if k >= self.len() {
            return Err(Error::InvalidInput(format!(
                "mode {k} beyond truncation {}",
                self.len()
            )));
        }
        self.check_point(x)?;
        Ok(self.eval_unchecked(k, x))
    }

    fn eval_unchecked(&self, k: usize, x: &DomainPoint) -> f64 {
        match (&self.modes, &self.domain, *x) {
            (Modes::Sine(idx), Domain::Interval { length }, DomainPoint::X(v)) => {
                (2.0 / length).sqrt() * (idx[k] as f64 * PI * v / length).sin()
            }
            (Modes::Product(mn), Domain::Rectangle { lx, ly }, DomainPoint::Xy(a, b)) => {
                let (m, n) = mn[k];
                2.0 / (lx * ly).sqrt()
                    * (m as f64 * PI * a / lx).sin()
                    * (n as f64 * PI * b / ly).sin()
            }
            (Modes::Vectors(v), _, DomainPoint::Index(i)) => v[(i, k)],
            _ => unreachable!("point kind checked against domain"),
        }
    }

    /// Composite Gauss–Legendre grid resolving the highest retained mode with at least
    /// 64 nodes per wavelength. Empty for matrix operators.
    fn quadrature_grid(&self) -> Vec<(DomainPoint, f64)> {
        let gl = GaussLegendre::new(NODES_PER_PANEL);
        let axis = |l: f64, top: usize| -> Vec<(f64, f64)> {
            let panels = top.max(8);
            let h = l / panels as f64;
            (0..panels)
                .flat_map(|p| {
                    let a = p as f64 * h;
                    gl.nodes()
                        .iter()
                        .zip(gl.weights())
                        .map(move |(&x, &w)| (a + 0.5 * h * (x + 1.0), 0.5 * h * w))
                })
                .collect()
        };
        match (&self.domain, &self.modes) {
            (Domain::Interval { length }, Modes::Sine(idx)) => {
                let top = *idx.iter().max().unwrap();
                axis(*length, top)
                    .into_iter()
                    .map(|(x, w)| (DomainPoint::X(x), w))
                    .collect()
            }
            (Domain::Rectangle { lx, ly }, Modes::Product(mn)) => {
                let gx = axis(*lx, mn.iter().map(|p| p.0).max().unwrap());
                let gy = axis(*ly, mn.iter().map(|p| p.1).max().unwrap());
                gx.iter()
                    .flat_map(|&(x, wx)| {
                        gy.iter()
                            .map(move |&(y, wy)| (DomainPoint::Xy(x, y), wx * wy))
                    })
                    .collect()
            }
            _ => Vec::new(),
        }
    }

    /// Gram matrix `(v_j, v_k)`: by quadrature for the PDE operators, exactly for matrices.
    pub fn gram(&self) -> DMatrix<f64> {
        let k = self.len();
        if let Modes::Vectors(v) = &self.modes {
            return v.transpose() * v;
        }
        let grid = self.quadrature_grid();
        let values: Vec<Vec<f64>> = (0..k)
            .into_par_iter()
            .map(|j| {
                grid.iter()
                    .map(|(x, _)| self.eval_unchecked(j, x))
                    .collect()
            })
            .collect();
        let weights: Vec<f64> = grid.iter().map(|g| g.1).collect();
        let entries: Vec<f64> = (0..k * k)
            .into_par_iter()
            .map(|ij| {
                let (i, j) = (ij / k, ij % k);
                values[i]
                    .iter()
                    .zip(&values[j])
                    .zip(&weights)
                    .map(|((a, b), w)| a * b * w)
                    .sum()
            })
            .collect();
        DMatrix::from_row_slice(k, k, &entries)
    }

    /// `max |Gram - I|`.
    pub fn orthonormality_residual(&self) -> f64 {
        let g = self.gram();
        let k = self.len();
        let mut worst = 0.0f64;
        for i in 0..k {
            for j in 0..k {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((g[(i, j)] - target).abs());
            }
        }
        worst
    }

    /// Fourier coefficients `(φ, v_k)` of a function on the domain. For matrix operators `φ`
    /// is read at `DomainPoint::Index(i)` and the coefficients are exact inner products.
    pub fn expand<F>(&self, phi: F) -> Result<InitialData>
    where
        F: Fn(&DomainPoint) -> f64 + Sync,
    {
        let coefficients: Vec<f64> = match &self.modes {
            Modes::Vectors(v) => {
                let n = v.nrows();
                let x: Vec<f64> = (0..n).map(|i| phi(&DomainPoint::Index(i))).collect();
                (0..n)
                    .map(|k| (0..n).map(|i| v[(i, k)] * x[i]).sum())
                    .collect()
            }
            _ => {
                let grid = self.quadrature_grid();
                let f: Vec<f64> = grid.par_iter().map(|(x, _)| phi(x)).collect();
                (0..self.len())
                    .into_par_iter()
                    .map(|k| {
                        grid.iter()
                            .zip(&f)
                            .map(|((x, w), fx)| fx * w * self.eval_unchecked(k, x))
                            .sum()
                    })
                    .collect()
            }
        };
        InitialData::new(coefficients)
    }

    /// Coefficient list passed through, zero-padded to the truncation length.
    pub fn expand_list(&self, coefficients: &[f64]) -> Result<InitialData> {
        if coefficients.len() > self.len() {
            return Err(Error::InvalidInput(format!(
                "{} coefficients given but the operator keeps only {} modes",
                coefficients.len(),
                self.len()
            )));
        }
        let mut c = coefficients.to_vec();
        c.resize(self.len(), 0.0);
        InitialData::new(c)
    }
}

/// Fourier coefficients `φ_k = (φ, v_k)` of the initial state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InitialData {
    coefficients: Vec<f64>,
}

impl InitialData {
    pub fn new(coefficients: Vec<f64>) -> Result<Self> {
        if let Some(bad) = coefficients.iter().find(|c| !c.is_finite()) {
            return Err(Error::InvalidInput(format!("non-finite coefficient {bad}")));
        }
        Ok(Self { coefficients })
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    pub fn len(&self) -> usize {
        self.coefficients.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coefficients.is_empty()
    }

    pub fn norm_sq(&self) -> f64 {
        self.coefficients.iter().map(|c| c * c).sum()
    }
}

/// Choice of the observation function `Φ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Observation {
    /// `Φ ≡ 1`, the plain squared norm.
    #[default]
    One,
    /// `Φ(λ) = λ`.
    Lambda,
    /// `Φ(λ) = λ^p`.
    Power { p: f64 },
}

impl Observation {
    pub fn apply(&self, lambda: f64) -> f64 {
        match *self {
            Observation::One => 1.0,
            Observation::Lambda => lambda,
            Observation::Power { p } => lambda.powf(p),
        }
    }
}

/// Ratio `Φ(λ_K)/λ_K` beyond which a warning is logged.
pub const WEIGHT_GROWTH_WARNING: f64 = 1e3;

/// Tabulated `Φ(λ_k)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservationWeights {
    values: Vec<f64>,
}

impl ObservationWeights {
    pub fn new(kind: Observation, op: &SpectralOperator) -> Result<Self> {
        Self::from_fn(|l| kind.apply(l), op)
    }

    pub fn from_fn<F: Fn(f64) -> f64>(phi: F, op: &SpectralOperator) -> Result<Self> {
        let mut values = Vec::with_capacity(op.len());
        for &l in op.eigenvalues() {
            let v = phi(l);
            if !v.is_finite() {
                return Err(Error::NonFiniteWeight { lambda: l });
            }
            values.push(v);
        }
        let top = *op.eigenvalues().last().unwrap();
        let growth = values.last().unwrap().abs() / top;
        if growth > WEIGHT_GROWTH_WARNING {
            log::warn!(
                "observation weight grows faster than lambda: Phi(lambda_K)/lambda_K = {growth:e}; the existence theory may not apply"
            );
        }
        Ok(Self { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}
