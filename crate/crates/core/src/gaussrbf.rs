//! Univariate Gaussian kernel matrices `B = [exp(-lambda (t_j - t_i)^2 / 2)]`:
//! determinant bounds, the shape parameter `lambda* = N / S`,
//! interpolation, and a lambda sweep with an optional leave-one-out
//! comparator.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Exhaustion, Result};
use crate::highprec::{
    escalate, lu_logdet, Escalated, LuDecomposition, PrecisionConfig, Sign, SquareMatrix,
};
use crate::expdet::LogBounds;
use crate::nodes::{
    centered_moments, compensated_sum, log_superfactorial, log_vandermonde, pair_count,
    NodeVector,
};
use crate::scalar::{MpReal, Real};

/// Relative interpolation residual accepted after a solve.
pub const INTERPOLATION_TOL: f64 = 1e-8;

/// Gaussian nodes and shape parameter.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GaussianModel {
    t: NodeVector,
    lambda: f64,
}

fn check_lambda(lambda: f64) -> Result<f64> {
    if lambda > 0.0 && lambda.is_finite() {
        Ok(lambda)
    } else {
        Err(Error::InvalidLambda(lambda))
    }
}

impl GaussianModel {
    pub fn new(t: NodeVector, lambda: f64) -> Result<Self> {
        Ok(Self {
            t,
            lambda: check_lambda(lambda)?,
        })
    }

    /// Accepts distinct nodes in any order; the determinant is invariant
    /// under the simultaneous row/column permutation that sorts them.
    pub fn from_unsorted(raw: Vec<f64>, lambda: f64) -> Result<Self> {
        Self::new(NodeVector::from_unsorted(raw)?, lambda)
    }

    pub fn t(&self) -> &NodeVector {
        &self.t
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn n(&self) -> usize {
        self.t.len()
    }
}

/// The kernel matrix, differences and exponentials taken in `R`.
pub fn build_gaussian<R: Real>(model: &GaussianModel, ctx: &R::Context) -> SquareMatrix<R> {
    let t: Vec<R> = model.t.as_slice().iter().map(|&v| R::from_f64_in(v, ctx)).collect();
    let half_lambda = R::from_f64_in(model.lambda, ctx) / R::from_f64_in(2.0, ctx);
    SquareMatrix::from_fn(model.n(), |i, j| {
        if i == j {
            return R::one_in(ctx);
        }
        let d = t[j].clone() - t[i].clone();
        (-(half_lambda.clone() * d.clone() * d)).exp()
    })
    .expect("model is nonempty")
}

/// `ln det B` via the escalating oracle; must come out positive.
pub fn logdet_gaussian(model: &GaussianModel, cfg: &PrecisionConfig) -> Result<Escalated> {
    let out = escalate(cfg, |bits| Ok(lu_logdet(&build_gaussian::<MpReal>(model, &bits))))?;
    if out.value.sign != Sign::Positive {
        let all: Vec<usize> = (0..model.n()).collect();
        return Err(Error::PositivityViolated {
            context: format!("det B has sign {}", out.value.sign.as_i8()),
            rows: all.clone(),
            cols: all,
        });
    }
    Ok(out)
}

/// `ln(lambda^N V(t)^2 / c_n)` as upper bound and that minus `lambda S`
/// as lower bound.
pub fn gaussian_bounds(model: &GaussianModel) -> LogBounds {
    let n = model.n();
    let log_upper = pair_count(n) as f64 * model.lambda.ln() - log_superfactorial::<f64>(n)
        + 2.0 * log_vandermonde(&model.t);
    let spread = centered_moments(&model.t).spread;
    LogBounds {
        log_lower: log_upper - model.lambda * spread,
        log_upper,
    }
}

/// Quantities behind the shape rule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ShapeSelection {
    pub lambda_star: f64,
    /// `n(n-1)/2`.
    pub pairs: usize,
    /// Centered sum of squares of the nodes.
    pub spread: f64,
}

/// `lambda* = N / S`, the maximizer of `lambda^N exp(-lambda S)`.
pub fn select_shape_detail(t: &NodeVector) -> Result<ShapeSelection> {
    let spread = centered_moments(t).spread;
    if t.len() < 2 || !(spread > 0.0) {
        return Err(Error::DegenerateNodes);
    }
    let pairs = pair_count(t.len());
    Ok(ShapeSelection {
        lambda_star: pairs as f64 / spread,
        pairs,
        spread,
    })
}

pub fn select_shape(t: &NodeVector) -> Result<f64> {
    select_shape_detail(t).map(|s| s.lambda_star)
}

/// `ln f(lambda) = N ln lambda - lambda S`.
pub fn shape_objective(t: &NodeVector, lambda: f64) -> Result<f64> {
    let lambda = check_lambda(lambda)?;
    if t.len() < 2 {
        return Err(Error::DegenerateNodes);
    }
    let spread = centered_moments(t).spread;
    Ok(pair_count(t.len()) as f64 * lambda.ln() - lambda * spread)
}

/// Exact derivative of [`shape_objective`] in `lambda`, `N / lambda - S`.
pub fn shape_objective_slope(t: &NodeVector, lambda: f64) -> Result<f64> {
    let lambda = check_lambda(lambda)?;
    let spread = centered_moments(t).spread;
    Ok(pair_count(t.len()) as f64 / lambda - spread)
}

/// Fixed shape parameter or the `N / S` rule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Shape {
    Auto,
    Fixed(f64),
}

impl Shape {
    pub fn resolve(self, t: &NodeVector) -> Result<f64> {
        match self {
            Shape::Auto => select_shape(t),
            Shape::Fixed(lambda) => check_lambda(lambda),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Interpolant {
    pub lambda: f64,
    pub coefficients: Vec<f64>,
    /// `max_i |(B c)_i - values_i|`, evaluated in multi-precision.
    pub residual_inf: f64,
}

fn norm_inf(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// `max |B c - values|` with `B` at `bits` and `c` taken exactly.
fn residual_at(model: &GaussianModel, coefficients: &[f64], values: &[f64], bits: usize) -> f64 {
    let b = build_gaussian::<MpReal>(model, &bits);
    let c: Vec<MpReal> = coefficients.iter().map(|&v| MpReal::new(v, bits)).collect();
    let bc = b.apply(&c).expect("sizes match");
    bc.into_iter()
        .zip(values)
        .map(|(r, &v)| (r - MpReal::new(v, bits)).abs().to_f64())
        .fold(0.0, f64::max)
}

/// Solves `B c = values`. The double-precision solve is accepted when its
/// residual passes; otherwise the solve is repeated in multi-precision
/// along the escalation schedule.
pub fn interpolate(
    t: &NodeVector,
    values: &[f64],
    shape: Shape,
    cfg: &PrecisionConfig,
) -> Result<Interpolant> {
    cfg.validate()?;
    if values.len() != t.len() {
        return Err(Error::LengthMismatch {
            left: t.len(),
            right: values.len(),
        });
    }
    if let Some(index) = values.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite { index });
    }
    let lambda = shape.resolve(t)?;
    let model = GaussianModel::new(t.clone(), lambda)?;
    let tolerance = INTERPOLATION_TOL * norm_inf(values);

    let fast = LuDecomposition::new(&build_gaussian::<f64>(&model, &()));
    if let Some(c) = fast.solve(values) {
        if c.iter().all(|v| v.is_finite()) {
            let residual = residual_at(&model, &c, values, cfg.mantissa_bits);
            if residual <= tolerance {
                return Ok(Interpolant {
                    lambda,
                    coefficients: c,
                    residual_inf: residual,
                });
            }
        }
    }

    let mut last = (cfg.mantissa_bits, f64::INFINITY);
    for bits in cfg.schedule() {
        let lu = LuDecomposition::new(&build_gaussian::<MpReal>(&model, &bits));
        let rhs: Vec<MpReal> = values.iter().map(|&v| MpReal::new(v, bits)).collect();
        let Some(c) = lu.solve(&rhs) else {
            continue;
        };
        let c: Vec<f64> = c.iter().map(Real::to_f64).collect();
        if c.iter().any(|v| !v.is_finite()) {
            continue;
        }
        let residual = residual_at(&model, &c, values, bits);
        if residual <= tolerance {
            return Ok(Interpolant {
                lambda,
                coefficients: c,
                residual_inf: residual,
            });
        }
        last = (bits, residual);
    }
    Err(Error::PrecisionExhausted {
        mantissa_bits: last.0,
        reason: Exhaustion::Residual {
            residual: last.1,
            tolerance,
        },
    })
}

/// `s(q) = sum_j c_j exp(-lambda (q - t_j)^2 / 2)` at every query.
pub fn evaluate(
    t: &NodeVector,
    coefficients: &[f64],
    lambda: f64,
    queries: &[f64],
) -> Result<Vec<f64>> {
    if coefficients.len() != t.len() {
        return Err(Error::LengthMismatch {
            left: t.len(),
            right: coefficients.len(),
        });
    }
    let lambda = check_lambda(lambda)?;
    Ok(queries
        .iter()
        .map(|&q| {
            compensated_sum(t.as_slice().iter().zip(coefficients).map(|(&tj, &cj)| {
                let d = q - tj;
                cj * (-0.5 * lambda * d * d).exp()
            }))
        })
        .collect())
}

/// Leave-one-out errors `e_k = c_k / (B^{-1})_kk` in the precision of `R`.
fn loocv_errors_in<R: Real>(b: &SquareMatrix<R>, values: &[R]) -> Option<Vec<R>> {
    let lu = LuDecomposition::new(b);
    let c = lu.solve(values)?;
    let diag = lu.inverse_diagonal()?;
    Some(c.into_iter().zip(diag).map(|(ck, dk)| ck / dk).collect())
}

/// Root-mean-square leave-one-out error via the closed form, evaluated at
/// two consecutive precisions that must agree.
pub fn loocv_error(
    t: &NodeVector,
    values: &[f64],
    lambda: f64,
    cfg: &PrecisionConfig,
) -> Result<f64> {
    cfg.validate()?;
    if values.len() != t.len() {
        return Err(Error::LengthMismatch {
            left: t.len(),
            right: values.len(),
        });
    }
    if t.len() < 2 {
        return Err(Error::DegenerateNodes);
    }
    let model = GaussianModel::new(t.clone(), lambda)?;
    let rms_at = |bits: usize| -> Option<f64> {
        let b = build_gaussian::<MpReal>(&model, &bits);
        let v: Vec<MpReal> = values.iter().map(|&x| MpReal::new(x, bits)).collect();
        let errors = loocv_errors_in(&b, &v)?;
        let squares: Vec<f64> = errors
            .iter()
            .map(|e| {
                let e = e.to_f64();
                e * e
            })
            .collect();
        Some((compensated_sum(squares) / t.len() as f64).sqrt())
    };
    let mut schedule = cfg.schedule();
    let mut coarse = rms_at(schedule.next().expect("nonempty schedule"));
    let mut last_bits = cfg.mantissa_bits;
    for bits in schedule {
        let fine = rms_at(bits);
        if let (Some(a), Some(b)) = (coarse, fine) {
            if (a - b).abs() <= cfg.agree_tol.max(f64::EPSILON) * b.abs().max(f64::MIN_POSITIVE)
                || a == b
            {
                return Ok(b);
            }
        }
        coarse = fine;
        last_bits = bits;
    }
    Err(Error::PrecisionExhausted {
        mantissa_bits: last_bits,
        reason: Exhaustion::Residual {
            residual: f64::NAN,
            tolerance: cfg.agree_tol,
        },
    })
}

/// Geometric grid of `count` points from `min` to `max` inclusive.
pub fn geometric_grid(min: f64, max: f64, count: usize) -> Result<Vec<f64>> {
    if !(min > 0.0 && max >= min && max.is_finite()) || count == 0 {
        return Err(Error::InvalidArgument(format!(
            "grid needs 0 < min <= max and count >= 1, got {min}:{max}:{count}"
        )));
    }
    if count == 1 {
        return Ok(vec![min]);
    }
    let ratio = (max / min).ln() / (count - 1) as f64;
    Ok((0..count)
        .map(|k| {
            if k == count - 1 {
                max
            } else {
                min * (ratio * k as f64).exp()
            }
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub lambda: f64,
    pub log_f: f64,
    pub log_lower: f64,
    pub log_det: Option<f64>,
    pub log_upper: f64,
    pub loocv: Option<f64>,
    /// Set when the oracle (or the comparator) failed for this row.
    pub error: Option<String>,
}

impl SweepRow {
    pub fn within_bounds(&self, slack: f64) -> Option<bool> {
        self.log_det
            .map(|d| self.log_lower - slack <= d && d <= self.log_upper + slack)
    }
}

fn sweep_row(t: &NodeVector, values: Option<&[f64]>, lambda: f64, cfg: &PrecisionConfig) -> Result<SweepRow> {
    let model = GaussianModel::new(t.clone(), lambda)?;
    let bounds = gaussian_bounds(&model);
    let mut row = SweepRow {
        lambda,
        log_f: shape_objective(t, lambda)?,
        log_lower: bounds.log_lower,
        log_det: None,
        log_upper: bounds.log_upper,
        loocv: None,
        error: None,
    };
    match logdet_gaussian(&model, cfg) {
        Ok(d) => row.log_det = Some(d.value.log_abs),
        Err(e) => row.error = Some(e.to_string()),
    }
    if let Some(values) = values {
        match loocv_error(t, values, lambda, cfg) {
            Ok(e) => row.loocv = Some(e),
            Err(e) => {
                row.error.get_or_insert_with(|| e.to_string());
            }
        }
    }
    Ok(row)
}

/// One row per grid value, in grid order. Per-row oracle failures are
/// recorded on the row; invalid inputs abort the sweep.
pub fn sweep(
    t: &NodeVector,
    values: Option<&[f64]>,
    lambda_grid: &[f64],
    cfg: &PrecisionConfig,
) -> Result<Vec<SweepRow>> {
    cfg.validate()?;
    if t.len() < 2 {
        return Err(Error::DegenerateNodes);
    }
    if let Some(v) = values {
        if v.len() != t.len() {
            return Err(Error::LengthMismatch {
                left: t.len(),
                right: v.len(),
            });
        }
    }
    if lambda_grid.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidArgument("lambda grid must be ascending".into()));
    }
    lambda_grid
        .par_iter()
        .map(|&lambda| sweep_row(t, values, lambda, cfg))
        .collect()
}
