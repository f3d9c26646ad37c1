//! The exponential matrix `A = [exp(x_i y_j)]`: construction, oracle
//! log-determinant, bound certificates and the total-positivity check.

use std::collections::HashMap;

use num_traits::Float;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::highprec::{escalate, lu_logdet, Escalated, PrecisionConfig, Sign, SquareMatrix};
use crate::nodes::{
    compensated_sum, log_superfactorial, log_vandermonde, node_sum, NodeVector,
};
use crate::scalar::{MpReal, Real};

/// Largest `n` accepted by [`total_positivity_check`] by default.
pub const DEFAULT_TP_MAX_N: usize = 6;

/// The node pair `(x, y)` defining an exponential matrix.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExpMatrixSpec<T = f64> {
    x: NodeVector<T>,
    y: NodeVector<T>,
}

impl<T: Float> ExpMatrixSpec<T> {
    pub fn new(x: NodeVector<T>, y: NodeVector<T>) -> Result<Self> {
        if x.len() != y.len() {
            return Err(Error::LengthMismatch {
                left: x.len(),
                right: y.len(),
            });
        }
        Ok(Self { x, y })
    }

    pub fn from_slices(x: &[T], y: &[T]) -> Result<Self> {
        Self::new(NodeVector::new(x.to_vec())?, NodeVector::new(y.to_vec())?)
    }

    pub fn x(&self) -> &NodeVector<T> {
        &self.x
    }

    pub fn y(&self) -> &NodeVector<T> {
        &self.y
    }

    pub fn n(&self) -> usize {
        self.x.len()
    }

    /// The same matrix transposed: `x` and `y` exchanged.
    pub fn transposed(&self) -> Self {
        Self {
            x: self.y.clone(),
            y: self.x.clone(),
        }
    }
}

/// Lower and upper bounds on a log-determinant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LogBounds<T = f64> {
    pub log_lower: T,
    pub log_upper: T,
}

impl<T: Float> LogBounds<T> {
    pub fn contains(&self, log_value: T, slack: T) -> bool {
        self.log_lower - slack <= log_value && log_value <= self.log_upper + slack
    }
}

/// Entries `exp(x_i y_j)`, products and exponentials taken in `R`.
pub fn build_matrix<T, R>(spec: &ExpMatrixSpec<T>, ctx: &R::Context) -> SquareMatrix<R>
where
    T: Float,
    R: Real,
{
    let conv = |v: T| R::from_f64_in(v.to_f64().expect("finite node"), ctx);
    let x: Vec<R> = spec.x.as_slice().iter().map(|&v| conv(v)).collect();
    let y: Vec<R> = spec.y.as_slice().iter().map(|&v| conv(v)).collect();
    SquareMatrix::from_fn(spec.n(), |i, j| (x[i].clone() * y[j].clone()).exp())
        .expect("spec is nonempty")
}

/// `ln det A` from the escalating multi-precision oracle. A non-positive
/// sign is reported as [`Error::PositivityViolated`]: the determinant is
/// positive for every valid spec, so this signals an arithmetic defect.
pub fn logdet_exp<T: Float>(spec: &ExpMatrixSpec<T>, cfg: &PrecisionConfig) -> Result<Escalated> {
    let out = escalate(cfg, |bits| Ok(lu_logdet(&build_matrix::<T, MpReal>(spec, &bits))))?;
    if out.value.sign != Sign::Positive {
        let all: Vec<usize> = (0..spec.n()).collect();
        return Err(Error::PositivityViolated {
            context: format!("det A has sign {}", out.value.sign.as_i8()),
            rows: all.clone(),
            cols: all,
        });
    }
    Ok(out)
}

fn compensated_dot<T: Float>(a: &[T], b: &[T]) -> T {
    compensated_sum(a.iter().zip(b).map(|(&p, &q)| p * q))
}

/// Log-domain bounds
/// `ln V(x) + ln V(y) - ln c_n + s(x) s(y) / n <= ln det A
///   <= ln V(x) + ln V(y) - ln c_n + sum_i x_i y_i`.
pub fn theorem_bounds<T: Float>(spec: &ExpMatrixSpec<T>) -> LogBounds<T> {
    let n = spec.n();
    let common =
        (log_vandermonde(&spec.x) + log_vandermonde(&spec.y)) - log_superfactorial::<T>(n);
    let n_t = T::from(n).expect("length fits");
    let mean_exponent = node_sum(&spec.x) * node_sum(&spec.y) / n_t;
    LogBounds {
        log_lower: common + mean_exponent,
        log_upper: common + hadamard_log_upper(spec),
    }
}

/// Log of the diagonal product, `sum_i x_i y_i`.
pub fn hadamard_log_upper<T: Float>(spec: &ExpMatrixSpec<T>) -> T {
    compensated_dot(spec.x.as_slice(), spec.y.as_slice())
}

/// The smaller of the two available upper bounds.
pub fn effective_log_upper<T: Float>(spec: &ExpMatrixSpec<T>) -> T {
    theorem_bounds(spec).log_upper.min(hadamard_log_upper(spec))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PositivityReport {
    pub minors_checked: usize,
    pub min_log_minor: f64,
    pub witness_rows: Vec<usize>,
    pub witness_cols: Vec<usize>,
}

/// Lexicographic k-subsets of `0..n`.
pub(crate) fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut current: Vec<usize> = (0..k).collect();
    if k > n {
        return out;
    }
    loop {
        out.push(current.clone());
        let Some(pos) = (0..k).rev().find(|&i| current[i] != i + n - k) else {
            return out;
        };
        current[pos] += 1;
        for i in pos + 1..k {
            current[i] = current[i - 1] + 1;
        }
    }
}

/// Evaluates every minor of `A` through the escalating oracle and checks
/// that all are positive.
pub fn total_positivity_check<T: Float>(
    spec: &ExpMatrixSpec<T>,
    cfg: &PrecisionConfig,
    max_n: usize,
) -> Result<PositivityReport> {
    let n = spec.n();
    if n > max_n {
        return Err(Error::NTooLarge { n, max_n });
    }
    let mut full_by_bits: HashMap<usize, SquareMatrix<MpReal>> = HashMap::new();
    let mut report = PositivityReport {
        minors_checked: 0,
        min_log_minor: f64::INFINITY,
        witness_rows: Vec::new(),
        witness_cols: Vec::new(),
    };
    for k in 1..=n {
        let subsets = combinations(n, k);
        for rows in &subsets {
            for cols in &subsets {
                let minor = escalate(cfg, |bits| {
                    let full = full_by_bits
                        .entry(bits)
                        .or_insert_with(|| build_matrix::<T, MpReal>(spec, &bits));
                    Ok(lu_logdet(&full.submatrix(rows, cols)?))
                })?;
                report.minors_checked += 1;
                if minor.value.sign != Sign::Positive {
                    return Err(Error::PositivityViolated {
                        context: format!("minor has sign {}", minor.value.sign.as_i8()),
                        rows: rows.clone(),
                        cols: cols.clone(),
                    });
                }
                if minor.value.log_abs < report.min_log_minor {
                    report.min_log_minor = minor.value.log_abs;
                    report.witness_rows = rows.clone();
                    report.witness_cols = cols.clone();
                }
            }
        }
    }
    Ok(report)
}
