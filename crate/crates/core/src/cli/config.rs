//! JSON problem files for `forward` and `recover`.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use rayleigh_stokes::inverse::{InverseSpec, ThresholdGate, DEFAULT_BRACKET};
use rayleigh_stokes::quadrature::QuadratureConfig;
use rayleigh_stokes::spectral::{DomainPoint, InitialData, Observation, SpectralOperator};
use rayleigh_stokes::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum OperatorSpec {
    Interval { length: f64, modes: usize },
    Rectangle { lx: f64, ly: f64, modes: usize },
    Matrix { entries: Vec<Vec<f64>> },
}

impl OperatorSpec {
    pub fn build(&self) -> Result<SpectralOperator> {
        match self {
            OperatorSpec::Interval { length, modes } => {
                SpectralOperator::dirichlet_interval(*length, *modes)
            }
            OperatorSpec::Rectangle { lx, ly, modes } => {
                SpectralOperator::dirichlet_rectangle(*lx, *ly, *modes)
            }
            OperatorSpec::Matrix { entries } => {
                let n = entries.len();
                if entries.iter().any(|row| row.len() != n) {
                    return Err(Error::InvalidInput(
                        "matrix entries must form a square array".into(),
                    ));
                }
                let flat: Vec<f64> = entries.iter().flatten().copied().collect();
                SpectralOperator::matrix_operator(&DMatrix::from_row_slice(n, n, &flat))
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Profile {
    /// `x(L - x)`, or the product over both axes on a rectangle.
    Parabola,
    /// The first eigenfunction.
    FirstMode,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DataSpec {
    /// Fourier coefficients, zero-padded to the operator truncation.
    Coefficients {
        values: Vec<f64>,
    },
    /// Components in the standard basis (matrix operators only).
    Vector {
        values: Vec<f64>,
    },
    Profile {
        name: Profile,
    },
}

impl DataSpec {
    pub fn build(&self, op: &SpectralOperator) -> Result<InitialData> {
        use rayleigh_stokes::spectral::Domain;
        match self {
            DataSpec::Coefficients { values } => op.expand_list(values),
            DataSpec::Vector { values } => match op.domain() {
                Domain::Matrix { n } if values.len() == *n => op.expand(|p| match p {
                    DomainPoint::Index(i) => values[*i],
                    _ => unreachable!(),
                }),
                Domain::Matrix { n } => Err(Error::InvalidInput(format!(
                    "vector has {} components, matrix is {n}x{n}",
                    values.len()
                ))),
                _ => Err(Error::InvalidInput(
                    "vector data requires a matrix operator".into(),
                )),
            },
            DataSpec::Profile {
                name: Profile::FirstMode,
            } => op.expand_list(&[1.0]),
            DataSpec::Profile {
                name: Profile::Parabola,
            } => match *op.domain() {
                Domain::Interval { length } => op.expand(|p| match p {
                    DomainPoint::X(x) => x * (length - x),
                    _ => unreachable!(),
                }),
                Domain::Rectangle { lx, ly } => op.expand(|p| match p {
                    DomainPoint::Xy(x, y) => x * (lx - x) * y * (ly - y),
                    _ => unreachable!(),
                }),
                Domain::Matrix { .. } => Err(Error::InvalidInput(
                    "the parabola profile needs a spatial domain".into(),
                )),
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InverseOptions {
    pub bracket: (f64, f64),
    pub alpha_tol: f64,
    pub value_tol: f64,
}

impl Default for InverseOptions {
    fn default() -> Self {
        let d = InverseSpec::default();
        Self {
            bracket: DEFAULT_BRACKET,
            alpha_tol: d.alpha_tol,
            value_tol: d.value_tol,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSpec {
    /// Main table or result; standard output when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub path: Option<String>,
    /// `(x, t, u)` table of the forward run.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub field_path: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    pub operator: OperatorSpec,
    pub initial_data: DataSpec,
    pub gamma: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d0: Option<f64>,
    #[serde(default)]
    pub observation: Observation,
    /// Forward time grid.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub times: Vec<f64>,
    /// Synthesis points: `[x]`, `[x, y]` or `[i]` (component index).
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub points: Vec<Vec<f64>>,
    #[serde(default)]
    pub quadrature: QuadratureConfig,
    #[serde(default)]
    pub inverse: InverseOptions,
    #[serde(default)]
    pub threshold: ThresholdGate,
    #[serde(default)]
    pub output: OutputSpec,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunKind {
    Forward,
    Recover,
}

impl ProblemConfig {
    pub fn parse(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::InvalidInput(format!("config: {e}")))
    }

    pub fn validate(&self, kind: RunKind) -> Result<()> {
        self.quadrature.validate()?;
        match kind {
            RunKind::Forward => {
                if self.alpha.is_none() {
                    return Err(Error::InvalidInput("forward runs need `alpha`".into()));
                }
                if self.d0.is_some() || self.t0.is_some() {
                    return Err(Error::InvalidInput(
                        "forward runs take `alpha`, not `d0`/`t0`".into(),
                    ));
                }
                if self.times.is_empty() {
                    return Err(Error::InvalidInput(
                        "forward runs need a nonempty `times` grid".into(),
                    ));
                }
            }
            RunKind::Recover => {
                if self.alpha.is_some() {
                    return Err(Error::InvalidInput(
                        "recover runs take `d0` and `t0`, not `alpha`".into(),
                    ));
                }
                if self.d0.is_none() || self.t0.is_none() {
                    return Err(Error::InvalidInput(
                        "recover runs need both `d0` and `t0`".into(),
                    ));
                }
                if !self.points.is_empty() || !self.times.is_empty() {
                    return Err(Error::InvalidInput(
                        "`times`/`points` apply to forward runs only".into(),
                    ));
                }
            }
        }
        Ok(())
    }

    pub fn inverse_spec(&self) -> InverseSpec {
        InverseSpec {
            t0: self.t0.unwrap_or(f64::NAN),
            d0: self.d0.unwrap_or(f64::NAN),
            bracket: self.inverse.bracket,
            alpha_tol: self.inverse.alpha_tol,
            value_tol: self.inverse.value_tol,
        }
    }

    pub fn domain_points(&self) -> Result<Vec<DomainPoint>> {
        self.points
            .iter()
            .map(|p| match p.as_slice() {
                [x] if matches!(self.operator, OperatorSpec::Matrix { .. }) => {
                    if *x >= 0.0 && x.fract() == 0.0 {
                        Ok(DomainPoint::Index(*x as usize))
                    } else {
                        Err(Error::OutOfDomain(format!("component index {x}")))
                    }
                }
                [x] => Ok(DomainPoint::X(*x)),
                [x, y] => Ok(DomainPoint::Xy(*x, *y)),
                other => Err(Error::InvalidInput(format!(
                    "point {other:?} must have one or two coordinates"
                ))),
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const FORWARD: &str = r#"{
        "operator": {"kind": "interval", "length": 3.141592653589793, "modes": 8},
        "initial_data": {"kind": "profile", "name": "parabola"},
        "gamma": 1.0, "alpha": 0.5, "times": [0.0, 1.0]
    }"#;

    #[test]
    fn forward_config_parses_with_defaults() {
        let c = ProblemConfig::parse(FORWARD).unwrap();
        c.validate(RunKind::Forward).unwrap();
        assert!(c.validate(RunKind::Recover).is_err());
        assert_eq!(c.observation, Observation::One);
        assert_eq!(c.quadrature, QuadratureConfig::default());
        let op = c.operator.build().unwrap();
        assert_eq!(c.initial_data.build(&op).unwrap().len(), 8);
    }

    #[test]
    fn unknown_fields_rejected() {
        let bad = FORWARD.replace("\"gamma\"", "\"gama\": 1, \"gamma\"");
        assert!(ProblemConfig::parse(&bad).is_err());
    }

    #[test]
    fn exclusive_run_fields() {
        let both = FORWARD.replace("\"alpha\": 0.5", "\"alpha\": 0.5, \"d0\": 0.1, \"t0\": 10");
        let c = ProblemConfig::parse(&both).unwrap();
        assert!(c.validate(RunKind::Forward).is_err());
        assert!(c.validate(RunKind::Recover).is_err());
    }

    #[test]
    fn matrix_operator_and_vector_data() {
        let text = r#"{
            "operator": {"kind": "matrix", "entries": [[2, 1], [1, 2]]},
            "initial_data": {"kind": "vector", "values": [1, 1]},
            "gamma": 0.5, "d0": 0.01, "t0": 100
        }"#;
        let c = ProblemConfig::parse(text).unwrap();
        c.validate(RunKind::Recover).unwrap();
        let op = c.operator.build().unwrap();
        let d = c.initial_data.build(&op).unwrap();
        // (1,1) is the eigenvector of eigenvalue 3
        assert!(d.coefficients()[0].abs() < 1e-14);
        assert!((d.coefficients()[1] - 2f64.sqrt()).abs() < 1e-14);
    }
}
