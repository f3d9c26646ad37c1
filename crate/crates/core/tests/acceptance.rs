//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any
//! criterion fails.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::Rng;
use rayon::prelude::*;

use expdet::divdiff::{dd_lower_bound_check, lemma2_residual_bounds, SmoothExpFamily};
use expdet::expdet::{hadamard_log_upper, logdet_exp, theorem_bounds, total_positivity_check};
use expdet::gaussrbf::{
    gaussian_bounds, geometric_grid, logdet_gaussian, select_shape_detail, shape_objective,
    shape_objective_slope,
};
use expdet::nodes::log_vandermonde;
use expdet::quadcheck::{
    check_corollary_identity, check_lemma1_reduction, check_theorem_identity, QuadratureConfig,
};
use expdet::verify::{random_nodes, run_verify, trial_rng, VerifyConfig};
use expdet::{ExpSpec, GaussianModel, MpReal, Nodes, PrecisionConfig, Real};

const SLACK: f64 = 1e-9;

struct Verdict {
    passed: bool,
    detail: String,
}

impl Verdict {
    fn new(passed: bool, detail: impl Into<String>) -> Self {
        Self {
            passed,
            detail: detail.into(),
        }
    }
}

fn nodes(v: Vec<f64>) -> Nodes {
    Nodes::new(v).expect("generated nodes are increasing")
}

fn random_spec(seed: u64, trial: usize, n_lo: usize, n_hi: usize, lo: f64, hi: f64) -> ExpSpec {
    let mut rng = trial_rng(seed, trial);
    let n = rng.random_range(n_lo..=n_hi);
    let x = random_nodes(&mut rng, n, lo, hi, 1e-3);
    let y = random_nodes(&mut rng, n, lo, hi, 1e-3);
    ExpSpec::new(nodes(x), nodes(y)).unwrap()
}

fn fold_max(values: impl Iterator<Item = f64>) -> f64 {
    values.fold(0.0, f64::max)
}

fn fold_min(values: impl Iterator<Item = f64>) -> f64 {
    values.fold(f64::INFINITY, f64::min)
}

/// Per-trial data shared by criteria 1 and 9.
struct SandwichTrial {
    n: usize,
    lower_slack: f64,
    upper_slack: f64,
    hadamard_slack: f64,
    theorem_minus_hadamard: f64,
}

fn sandwich_trials() -> (Vec<Result<SandwichTrial, String>>, Duration) {
    let precision = PrecisionConfig::default();
    let start = Instant::now();
    let trials = (0..1000)
        .into_par_iter()
        .map(|trial| {
            let spec = random_spec(1, trial, 1, 7, -3.0, 3.0);
            let bounds = theorem_bounds(&spec);
            let hadamard = hadamard_log_upper(&spec);
            let d = logdet_exp(&spec, &precision).map_err(|e| format!("trial {trial}: {e}"))?;
            let v = d.value.log_abs;
            Ok(SandwichTrial {
                n: spec.n(),
                lower_slack: v - bounds.log_lower,
                upper_slack: bounds.log_upper - v,
                hadamard_slack: hadamard - v,
                theorem_minus_hadamard: bounds.log_upper - hadamard,
            })
        })
        .collect();
    (trials, start.elapsed())
}

fn criterion_1(trials: &[Result<SandwichTrial, String>], elapsed: Duration) -> Verdict {
    let errors: Vec<&String> = trials.iter().filter_map(|t| t.as_ref().err()).collect();
    let ok: Vec<&SandwichTrial> = trials.iter().filter_map(|t| t.as_ref().ok()).collect();
    let violations = ok
        .iter()
        .filter(|t| t.lower_slack < -SLACK || t.upper_slack < -SLACK)
        .count();
    // n = 1 trials are equalities; the minimum over the rest is informative
    let min_lower = fold_min(ok.iter().filter(|t| t.n > 1).map(|t| t.lower_slack));
    let min_upper = fold_min(ok.iter().filter(|t| t.n > 1).map(|t| t.upper_slack));
    Verdict::new(
        errors.is_empty() && violations == 0 && elapsed < Duration::from_secs(60),
        format!(
            "{} trials, {} violations, {} oracle errors, min slack (n > 1) lower {min_lower:.3e} upper {min_upper:.3e}, {:.2} s",
            trials.len(),
            violations,
            errors.len(),
            elapsed.as_secs_f64()
        ),
    )
}

fn criterion_9(trials: &[Result<SandwichTrial, String>]) -> Verdict {
    let ok: Vec<&SandwichTrial> = trials.iter().filter_map(|t| t.as_ref().ok()).collect();
    let errors = trials.len() - ok.len();
    let violations = ok.iter().filter(|t| t.hadamard_slack < -SLACK).count();
    let theorem_tighter = ok.iter().filter(|t| t.theorem_minus_hadamard < 0.0).count();
    let hadamard_tighter = ok.iter().filter(|t| t.theorem_minus_hadamard > 0.0).count();
    Verdict::new(
        errors == 0 && violations == 0,
        format!(
            "{} trials, {violations} violations, min slack (n > 1) {:.3e}; upper bounds: theorem tighter {theorem_tighter}, hadamard tighter {hadamard_tighter}, tied {}",
            ok.len(),
            fold_min(ok.iter().filter(|t| t.n > 1).map(|t| t.hadamard_slack)),
            ok.len() - theorem_tighter - hadamard_tighter
        ),
    )
}

/// `ln(e^b - e^a)` with `b - a = (x_2 - x_1)(y_2 - y_1)`, in 256-bit arithmetic.
fn two_by_two_reference(x: &[f64], y: &[f64]) -> f64 {
    let bits = 256;
    let m = |v: f64| MpReal::new(v, bits);
    let b = m(x[0]) * m(y[0]) + m(x[1]) * m(y[1]);
    let a = m(x[0]) * m(y[1]) + m(x[1]) * m(y[0]);
    (b.exp() - a.exp()).ln().to_f64()
}

fn criterion_2() -> Verdict {
    let precision = PrecisionConfig::default();
    let errors: Vec<Result<f64, String>> = (0..100)
        .into_par_iter()
        .map(|trial| {
            let spec = random_spec(2, trial, 2, 2, -3.0, 3.0);
            let got = logdet_exp(&spec, &precision)
                .map_err(|e| e.to_string())?
                .value
                .log_abs;
            let want = two_by_two_reference(spec.x().as_slice(), spec.y().as_slice());
            Ok((got - want).abs() / want.abs())
        })
        .collect();
    let failures = errors.iter().filter(|e| e.is_err()).count();
    let worst = fold_max(errors.iter().filter_map(|e| e.as_ref().ok().copied()));
    Verdict::new(
        failures == 0 && worst <= 1e-12,
        format!("100 specs, max relative error {worst:.3e}, {failures} oracle errors"),
    )
}

fn criterion_3() -> Verdict {
    let precision = PrecisionConfig::default();
    let results: Vec<Result<f64, String>> = (0..120)
        .into_par_iter()
        .map(|trial| {
            let mut rng = trial_rng(3, trial);
            let n = 1 + trial % 6;
            let x = random_nodes(&mut rng, n, -3.0, 3.0, 1e-3);
            let y: Vec<f64> = (0..n).map(|k| k as f64).collect();
            let z = nodes(x.iter().map(|v| v.exp()).collect());
            let spec = ExpSpec::new(nodes(x), nodes(y)).unwrap();
            let got = logdet_exp(&spec, &precision)
                .map_err(|e| e.to_string())?
                .value
                .log_abs;
            let want = log_vandermonde(&z);
            Ok(if want == 0.0 {
                got.abs()
            } else {
                (got - want).abs() / want.abs()
            })
        })
        .collect();
    let failures = results.iter().filter(|e| e.is_err()).count();
    let worst = fold_max(results.iter().filter_map(|e| e.as_ref().ok().copied()));
    Verdict::new(
        failures == 0 && worst <= 1e-10,
        format!("120 specs (n = 1..6), max relative error {worst:.3e}, {failures} oracle errors"),
    )
}

fn criterion_4() -> Verdict {
    let qcfg = QuadratureConfig::with_order(24);
    let precision = PrecisionConfig::default();
    let results: Vec<Result<(f64, f64), String>> = (0..50)
        .into_par_iter()
        .map(|trial| {
            let mut rng = trial_rng(4, trial);
            let n = 2 + trial % 3;
            let x = nodes(random_nodes(&mut rng, n, -2.0, 2.0, 1e-3));
            let c = rng.random_range(0.2..=2.0);
            let corollary = check_corollary_identity(&x, &qcfg).map_err(|e| e.to_string())?;
            let theorem = check_theorem_identity(&x, c * (n - 1) as f64, &qcfg)
                .map_err(|e| e.to_string())?;
            Ok((corollary, theorem))
        })
        .collect();
    let lemma1: Vec<Result<f64, String>> = (0..50)
        .into_par_iter()
        .map(|trial| {
            let spec = random_spec(40, trial, 3, 3, -2.0, 2.0);
            check_lemma1_reduction(&spec, &qcfg, &precision).map_err(|e| e.to_string())
        })
        .collect();
    let failures = results.iter().filter(|r| r.is_err()).count()
        + lemma1.iter().filter(|r| r.is_err()).count();
    let ok: Vec<(f64, f64)> = results.iter().filter_map(|r| r.as_ref().ok().copied()).collect();
    let worst_corollary = fold_max(ok.iter().map(|r| r.0));
    let worst_theorem = fold_max(ok.iter().map(|r| r.1));
    let worst_lemma1 = fold_max(lemma1.iter().filter_map(|r| r.as_ref().ok().copied()));
    Verdict::new(
        failures == 0 && worst_corollary <= 1e-10 && worst_theorem <= 1e-8 && worst_lemma1 <= 1e-8,
        format!(
            "50 sets (n = 2..4) + 50 reductions (n = 3), max residuals {worst_corollary:.3e} / {worst_theorem:.3e} / {worst_lemma1:.3e}, {failures} errors"
        ),
    )
}

fn criterion_5() -> Verdict {
    let results: Vec<Result<(bool, f64), String>> = (0..1000)
        .into_par_iter()
        .map(|trial| {
            let mut rng = trial_rng(5, trial);
            let n = rng.random_range(2..=6);
            let v = nodes(random_nodes(&mut rng, n, -2.0, 2.0, 1e-3));
            let c = rng.random_range(0.2..=2.0);
            let sandwich = lemma2_residual_bounds(&v, &SmoothExpFamily::exp(c)).holds();
            let lower =
                dd_lower_bound_check(&v, c * (n - 1) as f64).map_err(|e| e.to_string())?;
            Ok((sandwich, lower.dd - lower.bound))
        })
        .collect();
    let failures = results.iter().filter(|r| r.is_err()).count();
    let ok: Vec<(bool, f64)> = results.iter().filter_map(|r| r.as_ref().ok().copied()).collect();
    let sandwich_violations = ok.iter().filter(|r| !r.0).count();
    let lower_violations = ok.iter().filter(|r| r.1 < -1e-12).count();
    Verdict::new(
        failures == 0 && sandwich_violations == 0 && lower_violations == 0,
        format!(
            "1000 sets, {sandwich_violations} residual violations, {lower_violations} lower-bound violations (min dd - bound {:.3e}), {failures} errors",
            fold_min(ok.iter().map(|r| r.1))
        ),
    )
}

fn criterion_6() -> Verdict {
    let precision = PrecisionConfig::default();
    let results: Vec<Result<f64, String>> = (0..1000)
        .into_par_iter()
        .map(|trial| {
            let mut rng = trial_rng(6, trial);
            let n = rng.random_range(1..=7);
            let t = nodes(random_nodes(&mut rng, n, -3.0, 3.0, 1e-3));
            let lambda = rng.random_range(0.1..=10.0);
            let model = GaussianModel::new(t, lambda).map_err(|e| e.to_string())?;
            let bounds = gaussian_bounds(&model);
            let v = logdet_gaussian(&model, &precision)
                .map_err(|e| format!("trial {trial}: {e}"))?
                .value
                .log_abs;
            Ok((v - bounds.log_lower).min(bounds.log_upper - v))
        })
        .collect();
    let failures = results.iter().filter(|r| r.is_err()).count();
    let slacks: Vec<f64> = results.iter().filter_map(|r| r.as_ref().ok().copied()).collect();
    let violations = slacks.iter().filter(|&&s| s < -SLACK).count();
    Verdict::new(
        failures == 0 && violations == 0,
        format!(
            "1000 trials, {violations} violations, min slack {:.3e}, {failures} oracle errors",
            fold_min(slacks.iter().copied())
        ),
    )
}

fn criterion_7() -> Verdict {
    let mut grid_violations = 0;
    let mut worst_slope: f64 = 0.0;
    let mut errors = 0;
    for trial in 0..100 {
        let mut rng = trial_rng(7, trial);
        let n = rng.random_range(2..=8);
        let t = nodes(random_nodes(&mut rng, n, -3.0, 3.0, 1e-3));
        let Ok(sel) = select_shape_detail(&t) else {
            errors += 1;
            continue;
        };
        let star = sel.lambda_star;
        let top = shape_objective(&t, star).unwrap();
        let grid = geometric_grid(star / 10.0, 10.0 * star, 100).unwrap();
        grid_violations += grid
            .iter()
            .filter(|&&l| shape_objective(&t, l).unwrap() > top)
            .count();
        worst_slope = worst_slope.max(shape_objective_slope(&t, star).unwrap().abs());
    }
    Verdict::new(
        errors == 0 && grid_violations == 0 && worst_slope <= 1e-12,
        format!(
            "100 node sets, {grid_violations} grid points above the optimum, max |N/lambda* - S| {worst_slope:.3e}, {errors} errors"
        ),
    )
}

fn criterion_8() -> Verdict {
    let precision = PrecisionConfig::default();
    let results: Vec<Result<(usize, f64), String>> = (0..50)
        .into_par_iter()
        .map(|trial| {
            let spec = random_spec(8, trial, 1, 5, -2.0, 2.0);
            total_positivity_check(&spec, &precision, 5)
                .map(|r| (r.minors_checked, r.min_log_minor))
                .map_err(|e| format!("trial {trial}: {e}"))
        })
        .collect();
    let failures: Vec<&String> = results.iter().filter_map(|r| r.as_ref().err()).collect();
    let ok: Vec<(usize, f64)> = results.iter().filter_map(|r| r.as_ref().ok().copied()).collect();
    let minors: usize = ok.iter().map(|r| r.0).sum();
    let nonfinite = ok.iter().filter(|r| !r.1.is_finite()).count();
    Verdict::new(
        failures.is_empty() && nonfinite == 0,
        format!(
            "50 specs, {minors} minors positive, min log-minor {:.3e}, {} failures{}",
            fold_min(ok.iter().map(|r| r.1)),
            failures.len(),
            failures.first().map(|f| format!(" ({f})")).unwrap_or_default()
        ),
    )
}

fn criterion_10() -> Verdict {
    let cfg = VerifyConfig {
        n_min: 1,
        n_max: 6,
        trials: 60,
        seed: 10,
        ..VerifyConfig::default()
    };
    let run = || {
        run_verify(&cfg)
            .map(|r| serde_json::to_vec(&r).expect("report serializes"))
            .map_err(|e| e.to_string())
    };
    match (run(), run()) {
        (Ok(a), Ok(b)) => Verdict::new(
            a == b,
            format!("two runs of 60 trials, {} bytes, identical: {}", a.len(), a == b),
        ),
        (Err(e), _) | (_, Err(e)) => Verdict::new(false, format!("verify failed: {e}")),
    }
}

fn main() -> ExitCode {
    let (trials, elapsed) = sandwich_trials();
    let verdicts: Vec<(usize, &str, Verdict)> = vec![
        (1, "theorem sandwich", criterion_1(&trials, elapsed)),
        (2, "two-node closed form", criterion_2()),
        (3, "generalized Vandermonde", criterion_3()),
        (4, "integral identities", criterion_4()),
        (5, "mean-derivative residual", criterion_5()),
        (6, "gaussian sandwich", criterion_6()),
        (7, "shape selection", criterion_7()),
        (8, "total positivity", criterion_8()),
        (9, "hadamard inequality", criterion_9(&trials)),
        (10, "determinism", criterion_10()),
    ];
    let mut all = true;
    for (k, name, v) in &verdicts {
        all &= v.passed;
        let tag = if v.passed { "PASS" } else { "FAIL" };
        println!("criterion {k:>2} {tag} {name}: {}", v.detail);
    }
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
