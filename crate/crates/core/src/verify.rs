//! Randomized verification of the bound certificates against the oracle.
//!
//! Each trial draws its instance from a ChaCha stream seeded with
//! `seed ^ trial_index`, so trials are independent of scheduling and a
//! report is a pure function of its configuration.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::expdet::{
    hadamard_log_upper, logdet_exp, theorem_bounds, total_positivity_check, ExpMatrixSpec,
};
use crate::gaussrbf::{gaussian_bounds, logdet_gaussian, GaussianModel};
use crate::highprec::PrecisionConfig;
use crate::nodes::NodeVector;

/// Log-domain slack allowed by every sandwich check.
pub const SANDWICH_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyConfig {
    pub n_min: usize,
    pub n_max: usize,
    pub trials: usize,
    pub seed: u64,
    pub node_lo: f64,
    pub node_hi: f64,
    pub min_gap: f64,
    pub lambda_lo: f64,
    pub lambda_hi: f64,
    /// Total positivity is enumerated only for `n` up to this value.
    pub tp_max_n: usize,
    pub precision: PrecisionConfig,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self {
            n_min: 1,
            n_max: 7,
            trials: 100,
            seed: 0,
            node_lo: -3.0,
            node_hi: 3.0,
            min_gap: 1e-3,
            lambda_lo: 0.1,
            lambda_hi: 10.0,
            tp_max_n: 4,
            precision: PrecisionConfig::default(),
        }
    }
}

impl VerifyConfig {
    pub fn validate(&self) -> Result<()> {
        self.precision.validate()?;
        let bad = |m: &str| Err(Error::InvalidArgument(m.to_string()));
        if self.n_min == 0 || self.n_max < self.n_min {
            return bad("node count range must satisfy 1 <= min <= max");
        }
        if self.trials == 0 {
            return bad("trials must be at least 1");
        }
        if !(self.node_lo.is_finite() && self.node_hi.is_finite() && self.node_lo < self.node_hi) {
            return bad("node range must be finite with lo < hi");
        }
        if !(self.min_gap > 0.0) {
            return bad("minimum gap must be positive");
        }
        if (self.n_max - 1) as f64 * self.min_gap >= self.node_hi - self.node_lo {
            return bad("node range too narrow for n_max nodes at the minimum gap");
        }
        if !(self.lambda_lo > 0.0 && self.lambda_lo <= self.lambda_hi && self.lambda_hi.is_finite()) {
            return bad("lambda range must satisfy 0 < lo <= hi");
        }
        Ok(())
    }
}

/// `n` uniform points in `[lo, hi]`, sorted, with consecutive gaps of at
/// least `min_gap`: uniform order statistics on the shortened interval,
/// the k-th shifted right by `k * min_gap`.
pub fn random_nodes<R: Rng>(rng: &mut R, n: usize, lo: f64, hi: f64, min_gap: f64) -> Vec<f64> {
    let room = hi - lo - (n.saturating_sub(1)) as f64 * min_gap;
    let mut base: Vec<f64> = (0..n).map(|_| lo + room * rng.random::<f64>()).collect();
    base.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    base.iter()
        .enumerate()
        .map(|(k, &v)| v + k as f64 * min_gap)
        .collect()
}

/// Per-trial generator.
pub fn trial_rng(seed: u64, trial: usize) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed ^ trial as u64)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Instance {
    Exponential { x: Vec<f64>, y: Vec<f64> },
    Gaussian { t: Vec<f64>, lambda: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckSummary {
    pub name: &'static str,
    pub passed: usize,
    pub failed: usize,
    pub skipped: usize,
    /// Smallest observed margin (bound minus value, or value minus bound).
    pub min_slack: Option<f64>,
    pub worst_trial: Option<usize>,
    pub worst_instance: Option<Instance>,
    pub skip_reasons: Vec<String>,
}

impl CheckSummary {
    fn new(name: &'static str) -> Self {
        Self {
            name,
            passed: 0,
            failed: 0,
            skipped: 0,
            min_slack: None,
            worst_trial: None,
            worst_instance: None,
            skip_reasons: Vec::new(),
        }
    }

    fn record(&mut self, trial: usize, outcome: &Outcome, instance: &Instance) {
        match outcome {
            Outcome::Slack(s) => {
                if *s >= -SANDWICH_SLACK {
                    self.passed += 1;
                } else {
                    self.failed += 1;
                }
                if self.min_slack.is_none_or(|m| *s < m) {
                    self.min_slack = Some(*s);
                    self.worst_trial = Some(trial);
                    self.worst_instance = Some(instance.clone());
                }
            }
            Outcome::Pass => self.passed += 1,
            Outcome::Fail(reason) => {
                self.failed += 1;
                if self.worst_trial.is_none() || self.min_slack.is_none() {
                    self.worst_trial = Some(trial);
                    self.worst_instance = Some(instance.clone());
                }
                self.skip_reasons.push(format!("trial {trial} failed: {reason}"));
            }
            Outcome::Skipped(reason) => {
                self.skipped += 1;
                self.skip_reasons.push(format!("trial {trial}: {reason}"));
            }
            Outcome::NotApplicable => {}
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Outcome {
    Slack(f64),
    Pass,
    Fail(String),
    Skipped(String),
    NotApplicable,
}

/// How the two upper bounds compare across trials (no dominance implied).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UpperBoundComparison {
    pub theorem_tighter: usize,
    pub hadamard_tighter: usize,
    pub equal: usize,
    /// Range of `theorem_upper - hadamard_upper` over trials.
    pub min_difference: Option<f64>,
    pub max_difference: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyReport {
    pub config: VerifyConfig,
    pub checks: Vec<CheckSummary>,
    pub upper_bounds: UpperBoundComparison,
    pub total_failures: usize,
    pub total_skipped: usize,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.total_failures == 0
    }

    pub fn check(&self, name: &str) -> Option<&CheckSummary> {
        self.checks.iter().find(|c| c.name == name)
    }
}

pub const CHECK_NAMES: [&str; 6] = [
    "theorem_lower",
    "theorem_upper",
    "hadamard_upper",
    "bound_order",
    "gaussian_sandwich",
    "total_positivity",
];

struct TrialResult {
    exp_instance: Instance,
    gauss_instance: Instance,
    outcomes: [Outcome; 6],
    upper_difference: f64,
}

fn skip_or_fail(e: Error) -> Outcome {
    if e.is_precision_exhausted() {
        Outcome::Skipped(e.to_string())
    } else {
        Outcome::Fail(e.to_string())
    }
}

fn run_trial(cfg: &VerifyConfig, trial: usize) -> Result<TrialResult> {
    let mut rng = trial_rng(cfg.seed, trial);
    let n = rng.random_range(cfg.n_min..=cfg.n_max);
    let x = random_nodes(&mut rng, n, cfg.node_lo, cfg.node_hi, cfg.min_gap);
    let y = random_nodes(&mut rng, n, cfg.node_lo, cfg.node_hi, cfg.min_gap);
    let t = random_nodes(&mut rng, n, cfg.node_lo, cfg.node_hi, cfg.min_gap);
    let lambda = rng.random_range(cfg.lambda_lo..=cfg.lambda_hi);

    let spec = ExpMatrixSpec::new(NodeVector::new(x.clone())?, NodeVector::new(y.clone())?)?;
    let bounds = theorem_bounds(&spec);
    let hadamard = hadamard_log_upper(&spec);

    let (lower, upper, had) = match logdet_exp(&spec, &cfg.precision) {
        Ok(d) => {
            let v = d.value.log_abs;
            (
                Outcome::Slack(v - bounds.log_lower),
                Outcome::Slack(bounds.log_upper - v),
                Outcome::Slack(hadamard - v),
            )
        }
        Err(e) => {
            let o = skip_or_fail(e);
            (o.clone(), o.clone(), o)
        }
    };
    let order = Outcome::Slack(bounds.log_upper - bounds.log_lower);

    let model = GaussianModel::new(NodeVector::new(t.clone())?, lambda)?;
    let gauss = match logdet_gaussian(&model, &cfg.precision) {
        Ok(d) => {
            let gb = gaussian_bounds(&model);
            let v = d.value.log_abs;
            Outcome::Slack((v - gb.log_lower).min(gb.log_upper - v))
        }
        Err(e) => skip_or_fail(e),
    };

    let positivity = if n <= cfg.tp_max_n {
        match total_positivity_check(&spec, &cfg.precision, cfg.tp_max_n) {
            Ok(r) if r.min_log_minor.is_finite() => Outcome::Pass,
            Ok(r) => Outcome::Fail(format!("min log-minor {}", r.min_log_minor)),
            Err(e) => skip_or_fail(e),
        }
    } else {
        Outcome::NotApplicable
    };

    Ok(TrialResult {
        exp_instance: Instance::Exponential { x, y },
        gauss_instance: Instance::Gaussian { t, lambda },
        outcomes: [lower, upper, had, order, gauss, positivity],
        upper_difference: bounds.log_upper - hadamard,
    })
}

/// Runs all trials (concurrently) and aggregates them in trial order.
pub fn run_verify(cfg: &VerifyConfig) -> Result<VerifyReport> {
    cfg.validate()?;
    let results: Vec<TrialResult> = (0..cfg.trials)
        .into_par_iter()
        .map(|trial| run_trial(cfg, trial))
        .collect::<Result<_>>()?;

    let mut checks: Vec<CheckSummary> = CHECK_NAMES.iter().map(|n| CheckSummary::new(n)).collect();
    let mut upper = UpperBoundComparison {
        theorem_tighter: 0,
        hadamard_tighter: 0,
        equal: 0,
        min_difference: None,
        max_difference: None,
    };
    for (trial, r) in results.iter().enumerate() {
        for (k, outcome) in r.outcomes.iter().enumerate() {
            let instance = if k == 4 { &r.gauss_instance } else { &r.exp_instance };
            checks[k].record(trial, outcome, instance);
        }
        let d = r.upper_difference;
        match d.partial_cmp(&0.0) {
            Some(std::cmp::Ordering::Less) => upper.theorem_tighter += 1,
            Some(std::cmp::Ordering::Greater) => upper.hadamard_tighter += 1,
            _ => upper.equal += 1,
        }
        upper.min_difference = Some(upper.min_difference.map_or(d, |m: f64| m.min(d)));
        upper.max_difference = Some(upper.max_difference.map_or(d, |m: f64| m.max(d)));
    }
    let total_failures = checks.iter().map(|c| c.failed).sum();
    let total_skipped = checks.iter().map(|c| c.skipped).sum();
    Ok(VerifyReport {
        config: cfg.clone(),
        checks,
        upper_bounds: upper,
        total_failures,
        total_skipped,
    })
}
