//! Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fails.

// `!(x > 0.0)` is how NaN gets rejected along with the out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::f64::consts::PI;
use std::time::{Duration, Instant};

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use rayleigh_stokes::forward::solve;
use rayleigh_stokes::inverse::{
    certificate_alphas, recover_alpha, InverseSpec, Observation, ThresholdGate, DEFAULT_BRACKET,
};
use rayleigh_stokes::kernel::{eval_b, eval_b_many, time_integral_b, KernelPoint};
use rayleigh_stokes::oracle::{solve_scalar, OracleConfig};
use rayleigh_stokes::quadrature::QuadratureConfig;
use rayleigh_stokes::sensitivity::{
    check_bound_lemmas, db_dalpha_fd, db_dalpha_terms, estimate_t0, BoundCheck, LemmaGrid, ScanGrid,
};
use rayleigh_stokes::spectral::{
    DomainPoint, InitialData, Observation as Phi, ObservationWeights, SpectralOperator,
};
use rayleigh_stokes::{Error, Result};

/// Enough doublings to reach the threshold for `γ ≤ 2` with `α = 0.1` in the grid.
const SCAN: ScanGrid = ScanGrid {
    start: 1.0,
    doublings: 40,
};

const TENTHS: [f64; 9] = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9];

type Criterion = fn() -> Result<Outcome>;

struct Outcome {
    pass: bool,
    detail: String,
}

impl Outcome {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Self {
            pass,
            detail: detail.into(),
        }
    }
}

fn cfg() -> QuadratureConfig {
    QuadratureConfig::default()
}

fn b(lambda: f64, gamma: f64, alpha: f64, t: f64) -> Result<f64> {
    eval_b(&KernelPoint::new(lambda, gamma, alpha, t)?, &cfg())
}

fn within_budget(elapsed: Duration, secs: u64) -> bool {
    elapsed <= Duration::from_secs(secs)
}

fn kernel_properties() -> Result<Outcome> {
    let start = Instant::now();
    let lambdas = [0.5, 1.0, 2.0, 5.0, 10.0];
    let gammas = [0.5, 1.0, 2.0];
    let alphas = [0.1, 0.3, 0.5, 0.7, 0.9];
    let times = [0.0, 0.01, 0.1, 1.0, 10.0, 100.0];
    let mut combos = Vec::new();
    for l in lambdas {
        for g in gammas {
            for a in alphas {
                combos.push((l, g, a));
            }
        }
    }

    // (a)–(d): counts of failures per property
    let fails = combos
        .par_iter()
        .map(|&(l, g, a)| -> Result<[usize; 4]> {
            let v = eval_b_many(l, g, a, &times, &cfg())?;
            let mut f = [0; 4];
            f[0] += ((v[0] - 1.0).abs() > 1e-8) as usize;
            f[1] += v[1..].iter().filter(|&&x| !(x > 0.0 && x < 1.0)).count();
            f[2] += v.windows(2).filter(|w| !(w[1] < w[0])).count();
            f[3] += (time_integral_b(l, g, a, 100.0, &cfg())? > 1.0 / l + 1e-8) as usize;
            Ok(f)
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .fold([0; 4], |acc, f| {
            [acc[0] + f[0], acc[1] + f[1], acc[2] + f[2], acc[3] + f[3]]
        });

    // (e): C fitted per (γ, α) over all λ on a log time grid, then on a 4x finer one
    let fit = |g: f64, a: f64, per_decade: i32| -> Result<f64> {
        let ts: Vec<f64> = (-2 * per_decade..=2 * per_decade)
            .map(|k| 10f64.powf(k as f64 / per_decade as f64))
            .collect();
        let mut c: f64 = 0.0;
        for &l in &lambdas {
            for (t, v) in ts.iter().zip(eval_b_many(l, g, a, &ts, &cfg())?) {
                c = c.max(l * v / (1.0 / t).min(t.powf(a - 1.0)));
            }
        }
        Ok(c)
    };
    let ratios = gammas
        .iter()
        .flat_map(|&g| alphas.iter().map(move |&a| (g, a)))
        .collect::<Vec<_>>()
        .par_iter()
        .map(|&(g, a)| Ok(fit(g, a, 8)? / fit(g, a, 2)?))
        .collect::<Result<Vec<f64>>>()?;
    let worst_ratio = ratios.iter().fold(1.0f64, |m, &r| m.max(r).max(1.0 / r));

    let elapsed = start.elapsed();
    let pass = fails.iter().all(|&n| n == 0) && worst_ratio <= 2.0 && within_budget(elapsed, 60);
    Ok(Outcome::new(
        pass,
        format!(
            "{} parameter triples; failures (a) {} (b) {} (c) {} (d) {}; worst C refinement ratio {worst_ratio:.4}; {:.1}s (budget 60s)",
            combos.len(),
            fails[0],
            fails[1],
            fails[2],
            fails[3],
            elapsed.as_secs_f64()
        ),
    ))
}

fn oracle_equivalence() -> Result<Outcome> {
    let start = Instant::now();
    let mut combos = Vec::new();
    for l in [0.5, 1.0, 2.0] {
        for g in [0.5, 1.0] {
            for a in [0.1, 0.5, 0.9] {
                combos.push((l, g, a));
            }
        }
    }
    let h = 1e-4;
    let sample_times: Vec<f64> = (10..=200).map(|k| k as f64 / 100.0).collect();
    let worst = combos
        .par_iter()
        .map(|&(l, g, a)| -> Result<f64> {
            let traj = solve_scalar(l, g, a, 1.0, &OracleConfig::new(h, 2.0)?)?;
            let exact = eval_b_many(l, g, a, &sample_times, &cfg())?;
            Ok(sample_times
                .iter()
                .zip(exact)
                .map(|(&t, e)| (traj.at(t).expect("on grid") - e).abs())
                .fold(0.0, f64::max))
        })
        .collect::<Result<Vec<f64>>>()?
        .into_iter()
        .fold(0.0, f64::max);

    let (l, g, a) = (2.0, 1.0, 0.5);
    let coarse = solve_scalar(l, g, a, 1.0, &OracleConfig::new(h, 1.0)?)?
        .at(1.0)
        .unwrap();
    let fine = solve_scalar(l, g, a, 1.0, &OracleConfig::new(h / 2.0, 1.0)?)?
        .at(1.0)
        .unwrap();
    let richardson = (2.0 * fine - coarse - b(l, g, a, 1.0)?).abs();

    let elapsed = start.elapsed();
    Ok(Outcome::new(
        worst <= 1e-4 && richardson <= 1e-6 && within_budget(elapsed, 300),
        format!(
            "max |B - oracle| on [0.1, 2] over {} triples {worst:.2e} (tol 1e-4); Richardson error at (2, 1, 0.5, 1) {richardson:.2e} (tol 1e-6); {:.1}s (budget 300s)",
            combos.len(),
            elapsed.as_secs_f64()
        ),
    ))
}

fn certified_t0(gamma: f64, lambda1: f64, alphas: &[f64]) -> Result<f64> {
    Ok(estimate_t0(gamma, lambda1, alphas, SCAN, &cfg())?.t0)
}

fn sensitivity_decomposition() -> Result<Outcome> {
    let mut points = Vec::new();
    for g in [0.5, 1.0, 2.0] {
        let mut t0s = vec![1.0, 10.0, 100.0, 1000.0];
        t0s.push(certified_t0(g, 1.0, &TENTHS)?);
        for l in [1.0, 2.0, 10.0, 100.0] {
            for &a in &TENTHS {
                for &t in &t0s {
                    points.push(KernelPoint::new(l, g, a, t)?);
                }
            }
        }
    }
    let errors = points
        .par_iter()
        .map(|p| -> Result<(f64, f64)> {
            let (_, _, _, total) = db_dalpha_terms(p, 1.0, &cfg())?;
            let h = 1e-5f64.min(0.5 * p.alpha()).min(0.5 * (1.0 - p.alpha()));
            let fd = db_dalpha_fd(p, h, &cfg())?;
            Ok(((total - fd).abs(), 1e-6f64.max(1e-3 * fd.abs())))
        })
        .collect::<Result<Vec<_>>>()?;
    let misses = errors.iter().filter(|(e, tol)| e > tol).count();
    let worst = errors.iter().map(|(e, tol)| e / tol).fold(0.0, f64::max);
    Ok(Outcome::new(
        misses == 0,
        format!(
            "{} points (λ ∈ {{1,2,10,100}}, γ ∈ {{0.5,1,2}}, α ∈ {{0.1..0.9}}, t0 ∈ {{1,10,100,1000,T0}}); {misses} outside max(1e-6, 1e-3|FD|); worst error/tolerance {worst:.2e}",
            points.len()
        ),
    ))
}

fn sign_certificate() -> Result<Outcome> {
    let mut notes = Vec::new();
    let mut violations = 0;
    let mut checked = 0;
    for g in [0.5, 1.0, 2.0] {
        let lambda1 = 1.0;
        let t0 = certified_t0(g, lambda1, &TENTHS)?;
        let pairs: Vec<(f64, f64)> = [1.0, 2.0, 10.0, 100.0]
            .iter()
            .flat_map(|&m| TENTHS.iter().map(move |&a| (m * lambda1, a)))
            .collect();
        let bad = pairs
            .par_iter()
            .map(|&(l, a)| -> Result<bool> {
                let (_, _, _, total) =
                    db_dalpha_terms(&KernelPoint::new(l, g, a, t0)?, lambda1, &cfg())?;
                Ok(!(total < 0.0))
            })
            .collect::<Result<Vec<bool>>>()?
            .into_iter()
            .filter(|&v| v)
            .count();
        violations += bad;
        checked += pairs.len();
        notes.push(format!("γ={g}: T0={t0:.0}"));
    }
    Ok(Outcome::new(
        violations == 0,
        format!(
            "{}; {checked} (λ, γ, α) points, {violations} with ∂B/∂α ≥ 0",
            notes.join(", ")
        ),
    ))
}

fn bound_lemmas() -> Result<Outcome> {
    let mut total = 0;
    let mut lines = Vec::new();
    for (g, l1) in [(0.1, 10.0), (0.5, 1.0), (1.0, 1.0), (2.0, 1.0)] {
        let report = check_bound_lemmas(&LemmaGrid::standard(g, l1))?;
        let parts: Vec<String> = BoundCheck::ALL
            .iter()
            .filter(|&&c| report.violations_of(c) > 0)
            .map(|&c| format!("{c:?}={}", report.violations_of(c)))
            .collect();
        total += report.violations.len();
        lines.push(format!(
            "(γ={g}, λ1={l1}) {} samples: {}",
            report.samples,
            if parts.is_empty() {
                "clean".to_string()
            } else {
                parts.join(" ")
            }
        ));
    }
    Ok(Outcome::new(
        total == 0,
        format!("{total} violations; {}", lines.join("; ")),
    ))
}

struct Case {
    name: &'static str,
    op: SpectralOperator,
    data: InitialData,
}

fn operators() -> Result<Vec<Case>> {
    let interval = SpectralOperator::dirichlet_interval(PI, 50)?;
    let interval_data = interval.expand(|p| match p {
        DomainPoint::X(x) => x * (PI - x) * (1.0 + x),
        _ => unreachable!(),
    })?;
    let rect = SpectralOperator::dirichlet_rectangle(PI, PI, 50)?;
    let rect_data = rect.expand(|p| match p {
        DomainPoint::Xy(x, y) => x * (PI - x) * y * (PI - y) * (1.0 + x + 0.5 * y),
        _ => unreachable!(),
    })?;
    let diag =
        SpectralOperator::matrix_operator(&DMatrix::from_diagonal(&DVector::from_row_slice(&[
            1.0, 2.0, 3.0,
        ])))?;
    let diag_data = diag.expand_list(&[1.0, 0.5, 0.25])?;
    Ok(vec![
        Case {
            name: "interval",
            op: interval,
            data: interval_data,
        },
        Case {
            name: "rectangle",
            op: rect,
            data: rect_data,
        },
        Case {
            name: "diag(1,2,3)",
            op: diag,
            data: diag_data,
        },
    ])
}

fn u_monotonicity() -> Result<Outcome> {
    let gamma = 1.0;
    let bracket_alphas = certificate_alphas(DEFAULT_BRACKET);
    let interior = &bracket_alphas[1..bracket_alphas.len() - 1];
    let mut pass = true;
    let mut notes = Vec::new();
    for case in operators()? {
        let active = case
            .data
            .coefficients()
            .iter()
            .filter(|c| c.abs() > 1e-12)
            .count();
        let t0 = certified_t0(gamma, case.op.lambda1(), &bracket_alphas)?;
        for kind in [Phi::One, Phi::Lambda] {
            let weights = ObservationWeights::new(kind, &case.op)?;
            let c = cfg();
            let obs = Observation {
                op: &case.op,
                data: &case.data,
                gamma,
                weights: &weights,
                cfg: &c,
            };
            let u = interior
                .par_iter()
                .map(|&a| obs.u(a, t0))
                .collect::<Result<Vec<f64>>>()?;
            let breaks = u.windows(2).filter(|w| !(w[1] < w[0])).count();
            pass &= breaks == 0 && active > 1;
            notes.push(format!(
                "{} {kind:?} ({active} modes, t0={t0:.0}): {breaks} breaks",
                case.name
            ));
        }
    }
    Ok(Outcome::new(
        pass,
        format!(
            "{} interior α, γ={gamma}; {}",
            interior.len(),
            notes.join("; ")
        ),
    ))
}

fn round_trip() -> Result<Outcome> {
    let start = Instant::now();
    let gamma = 0.5;
    let case = operators()?.pop().unwrap();
    let weights = ObservationWeights::new(Phi::One, &case.op)?;
    let c = cfg();
    let obs = Observation {
        op: &case.op,
        data: &case.data,
        gamma,
        weights: &weights,
        cfg: &c,
    };
    let gate = ThresholdGate::Verify { grid: SCAN };
    let t0 = certified_t0(
        gamma,
        case.op.lambda1(),
        &certificate_alphas(DEFAULT_BRACKET),
    )?;

    let mut worst_recovery: f64 = 0.0;
    let mut worst_two_time: f64 = 0.0;
    let mut uncertified = 0;
    for a in [0.1, 0.25, 0.5, 0.75, 0.9] {
        let first = recover_alpha(&InverseSpec::new(t0, obs.u(a, t0)?), &obs, gate)?;
        let second = recover_alpha(&InverseSpec::new(2.0 * t0, obs.u(a, 2.0 * t0)?), &obs, gate)?;
        uncertified += (!first.certified) as usize + (!second.certified) as usize;
        worst_recovery = worst_recovery.max((first.alpha_hat - a).abs());
        worst_two_time = worst_two_time.max((first.alpha_hat - second.alpha_hat).abs());
    }

    let u_max = obs.u(DEFAULT_BRACKET.0, t0)?;
    let no_solution = matches!(
        recover_alpha(&InverseSpec::new(t0, 1.1 * u_max), &obs, gate),
        Err(Error::NoSolution { .. })
    );

    let elapsed = start.elapsed();
    Ok(Outcome::new(
        worst_recovery <= 1e-6
            && worst_two_time <= 1e-6
            && no_solution
            && uncertified == 0
            && within_budget(elapsed, 600),
        format!(
            "diag(1,2,3), γ={gamma}, t0={t0:.0}: max |α̂ - α*| {worst_recovery:.2e}, max |α̂(t0) - α̂(2t0)| {worst_two_time:.2e} (tol 1e-6); 1.1·U_max no-solution: {no_solution}; uncertified runs: {uncertified}; {:.1}s (budget 600s)",
            elapsed.as_secs_f64()
        ),
    ))
}

fn parseval() -> Result<Outcome> {
    let mut cases = operators()?;
    let spd = DMatrix::from_row_slice(3, 3, &[4.0, 1.0, 0.5, 1.0, 3.0, 0.2, 0.5, 0.2, 2.0]);
    cases.push(Case {
        name: "dense 3x3",
        data: InitialData::new(vec![1.0])?,
        op: SpectralOperator::matrix_operator(&spd)?,
    });
    let (alpha, gamma) = (0.6, 0.8);
    let times = [0.0, 0.1, 1.0, 10.0];
    let mut worst_gram: f64 = 0.0;
    let mut worst_mode: f64 = 0.0;
    for case in &cases {
        worst_gram = worst_gram.max(case.op.orthonormality_residual());
        for k in [0, 1, case.op.len() - 1] {
            let mut c = vec![0.0; case.op.len()];
            c[k] = 1.0;
            let data = InitialData::new(c)?;
            let sol = solve(&case.op, &data, alpha, gamma, &times, &cfg())?;
            let lambda = case.op.eigenvalues()[k];
            for (i, &t) in times.iter().enumerate() {
                let exact = b(lambda, gamma, alpha, t)?;
                let err = (sol.amplitude(k, i) - exact).abs() / exact.max(1e-300);
                worst_mode = worst_mode.max(err);
            }
        }
    }
    let tol = cfg().rel_tol;
    Ok(Outcome::new(
        worst_gram <= 1e-8 && worst_mode <= tol,
        format!(
            "{} operators: max Gram residual {worst_gram:.2e} (tol 1e-8); max relative single-mode deviation from B {worst_mode:.2e} (tol {tol:e})",
            cases.len()
        ),
    ))
}

fn main() {
    let criteria: [(&str, Criterion); 8] = [
        ("kernel properties", kernel_properties),
        ("oracle equivalence", oracle_equivalence),
        ("sensitivity decomposition", sensitivity_decomposition),
        ("sign certificate at T0", sign_certificate),
        ("pointwise bound lemmas", bound_lemmas),
        ("monotonicity of U", u_monotonicity),
        ("order recovery round trip", round_trip),
        ("orthonormality and single modes", parseval),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = run().unwrap_or_else(|e| Outcome::new(false, format!("error: {e}")));
        failed += !outcome.pass as usize;
        println!(
            "{} criterion {} ({name}): {} [{:.1}s]",
            if outcome.pass { "PASS" } else { "FAIL" },
            i + 1,
            outcome.detail,
            start.elapsed().as_secs_f64()
        );
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        criteria.len() - failed
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
