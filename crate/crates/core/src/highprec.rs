//! Configurable-precision determinant kernels.
//!
//! [`lu_logdet`] runs row-pivoted elimination entirely in the scalar type
//! of the matrix, so the same code is the double-precision fast path and
//! the multi-precision oracle. [`escalate`] wraps a precision-parametrized
//! computation and keeps doubling the mantissa until two consecutive
//! precisions agree.

use std::fmt;

use serde::Serialize;

use crate::error::{Error, Exhaustion, Result};
use crate::scalar::{MpReal, Real};

pub const DEFAULT_MANTISSA_BITS: usize = 256;
pub const DEFAULT_MAX_ESCALATIONS: u32 = 4;
pub const DEFAULT_AGREE_TOL: f64 = 1e-20;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PrecisionConfig {
    pub mantissa_bits: usize,
    /// Number of precision doublings after the first evaluation.
    pub max_escalations: u32,
    /// Relative agreement required between consecutive precisions. The
    /// comparison scale is `max(|log_abs|, 1)`.
    pub agree_tol: f64,
}

impl Default for PrecisionConfig {
    fn default() -> Self {
        Self {
            mantissa_bits: DEFAULT_MANTISSA_BITS,
            max_escalations: DEFAULT_MAX_ESCALATIONS,
            agree_tol: DEFAULT_AGREE_TOL,
        }
    }
}

impl PrecisionConfig {
    pub fn with_bits(mantissa_bits: usize) -> Result<Self> {
        let cfg = Self {
            mantissa_bits,
            ..Self::default()
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.mantissa_bits < 64 {
            return Err(Error::InvalidPrecision(format!(
                "mantissa_bits must be at least 64, got {}",
                self.mantissa_bits
            )));
        }
        if self.max_escalations == 0 || self.max_escalations > 16 {
            return Err(Error::InvalidPrecision(format!(
                "max_escalations must be in 1..=16, got {}",
                self.max_escalations
            )));
        }
        if !(self.agree_tol > 0.0 && self.agree_tol.is_finite()) {
            return Err(Error::InvalidPrecision(format!(
                "agree_tol must be positive, got {}",
                self.agree_tol
            )));
        }
        Ok(())
    }

    /// Mantissa lengths visited by [`escalate`], in order.
    pub fn schedule(&self) -> impl Iterator<Item = usize> + '_ {
        (0..=self.max_escalations).map(|k| self.mantissa_bits << k)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Sign {
    Negative,
    Zero,
    Positive,
}

impl Sign {
    pub fn as_i8(self) -> i8 {
        match self {
            Sign::Negative => -1,
            Sign::Zero => 0,
            Sign::Positive => 1,
        }
    }

    fn flip(self) -> Self {
        match self {
            Sign::Negative => Sign::Positive,
            Sign::Zero => Sign::Zero,
            Sign::Positive => Sign::Negative,
        }
    }
}

impl Serialize for Sign {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_i8(self.as_i8())
    }
}

/// A real number as sign and natural log of its magnitude. `log_abs` is
/// meaningless (and conventionally zero) when the sign is zero.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LogNumber<T = f64> {
    pub sign: Sign,
    pub log_abs: T,
}

impl<T: Real> LogNumber<T> {
    pub fn positive(log_abs: T) -> Self {
        Self {
            sign: Sign::Positive,
            log_abs,
        }
    }

    pub fn zero(ctx: &T::Context) -> Self {
        Self {
            sign: Sign::Zero,
            log_abs: T::zero_in(ctx),
        }
    }

    pub fn to_f64(&self) -> LogNumber<f64> {
        LogNumber {
            sign: self.sign,
            log_abs: if self.sign == Sign::Zero {
                0.0
            } else {
                self.log_abs.to_f64()
            },
        }
    }
}

impl LogNumber<f64> {
    /// `sign * exp(log_abs)`, which may overflow to infinity.
    pub fn value(&self) -> f64 {
        f64::from(self.sign.as_i8()) * self.log_abs.exp()
    }
}

impl fmt::Display for LogNumber<f64> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.sign {
            Sign::Zero => write!(f, "0"),
            Sign::Positive => write!(f, "+exp({})", self.log_abs),
            Sign::Negative => write!(f, "-exp({})", self.log_abs),
        }
    }
}

/// Dense row-major square matrix, `n >= 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct SquareMatrix<T> {
    n: usize,
    data: Vec<T>,
}

impl<T: Clone> SquareMatrix<T> {
    pub fn from_fn(n: usize, mut entry: impl FnMut(usize, usize) -> T) -> Result<Self> {
        if n == 0 {
            return Err(Error::DimensionMismatch);
        }
        let mut data = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                data.push(entry(i, j));
            }
        }
        Ok(Self { n, data })
    }

    pub fn from_rows(rows: Vec<Vec<T>>) -> Result<Self> {
        let n = rows.len();
        if n == 0 || rows.iter().any(|r| r.len() != n) {
            return Err(Error::DimensionMismatch);
        }
        Ok(Self {
            n,
            data: rows.into_iter().flatten().collect(),
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> &T {
        &self.data[i * self.n + j]
    }

    fn set(&mut self, i: usize, j: usize, v: T) {
        self.data[i * self.n + j] = v;
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a != b {
            for j in 0..self.n {
                self.data.swap(a * self.n + j, b * self.n + j);
            }
        }
    }

    /// Square submatrix on the given row and column positions.
    pub fn submatrix(&self, rows: &[usize], cols: &[usize]) -> Result<Self> {
        if rows.len() != cols.len() {
            return Err(Error::DimensionMismatch);
        }
        Self::from_fn(rows.len(), |i, j| self.get(rows[i], cols[j]).clone())
    }

    pub fn permute_rows(&self, perm: &[usize]) -> Result<Self> {
        if perm.len() != self.n {
            return Err(Error::DimensionMismatch);
        }
        Self::from_fn(self.n, |i, j| self.get(perm[i], j).clone())
    }

    pub fn map<U: Clone>(&self, f: impl Fn(&T) -> U) -> SquareMatrix<U> {
        SquareMatrix {
            n: self.n,
            data: self.data.iter().map(f).collect(),
        }
    }
}

impl<T: Real> SquareMatrix<T> {
    pub fn matmul(&self, rhs: &Self) -> Result<Self> {
        if self.n != rhs.n {
            return Err(Error::DimensionMismatch);
        }
        let ctx = self.data[0].context();
        Self::from_fn(self.n, |i, j| {
            (0..self.n).fold(T::zero_in(&ctx), |acc, k| {
                acc + self.get(i, k).clone() * rhs.get(k, j).clone()
            })
        })
    }

    /// `A v`.
    pub fn apply(&self, v: &[T]) -> Result<Vec<T>> {
        if v.len() != self.n {
            return Err(Error::DimensionMismatch);
        }
        let ctx = self.data[0].context();
        Ok((0..self.n)
            .map(|i| {
                (0..self.n).fold(T::zero_in(&ctx), |acc, k| {
                    acc + self.get(i, k).clone() * v[k].clone()
                })
            })
            .collect())
    }
}

/// `P A = L U` with unit lower `L`, stored compactly.
#[derive(Debug, Clone)]
pub struct LuDecomposition<T> {
    factors: SquareMatrix<T>,
    /// `perm[i]` is the original row now at position `i`.
    perm: Vec<usize>,
    odd_permutation: bool,
    singular: bool,
}

impl<T: Real> LuDecomposition<T> {
    /// Partial pivoting by magnitude. A column whose candidate pivots are
    /// all exactly zero marks the matrix singular; elimination continues
    /// past it.
    pub fn new(matrix: &SquareMatrix<T>) -> Self {
        let n = matrix.n();
        let mut a = matrix.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut odd = false;
        let mut singular = false;
        for k in 0..n {
            let mut pivot_row = k;
            let mut pivot_abs = a.get(k, k).abs();
            for i in k + 1..n {
                let candidate = a.get(i, k).abs();
                if candidate > pivot_abs {
                    pivot_abs = candidate;
                    pivot_row = i;
                }
            }
            if pivot_abs.is_zero() {
                singular = true;
                continue;
            }
            if pivot_row != k {
                a.swap_rows(pivot_row, k);
                perm.swap(pivot_row, k);
                odd = !odd;
            }
            let pivot = a.get(k, k).clone();
            for i in k + 1..n {
                let factor = a.get(i, k).clone() / pivot.clone();
                if factor.is_zero() {
                    a.set(i, k, factor);
                    continue;
                }
                for j in k + 1..n {
                    let updated = a.get(i, j).clone() - factor.clone() * a.get(k, j).clone();
                    a.set(i, j, updated);
                }
                a.set(i, k, factor);
            }
        }
        Self {
            factors: a,
            perm,
            odd_permutation: odd,
            singular,
        }
    }

    pub fn is_singular(&self) -> bool {
        self.singular
    }

    pub fn logdet(&self) -> LogNumber<T> {
        let ctx = self.factors.get(0, 0).context();
        if self.singular {
            return LogNumber::zero(&ctx);
        }
        let zero = T::zero_in(&ctx);
        let mut sign = if self.odd_permutation {
            Sign::Negative
        } else {
            Sign::Positive
        };
        let mut log_abs = zero.clone();
        for k in 0..self.factors.n() {
            let d = self.factors.get(k, k).clone();
            if d < zero {
                sign = sign.flip();
            }
            log_abs = log_abs + d.abs().ln();
        }
        LogNumber { sign, log_abs }
    }

    /// Solves `A z = b`; `None` when singular.
    pub fn solve(&self, b: &[T]) -> Option<Vec<T>> {
        let n = self.factors.n();
        if self.singular || b.len() != n {
            return None;
        }
        let mut z: Vec<T> = self.perm.iter().map(|&p| b[p].clone()).collect();
        for i in 0..n {
            for k in 0..i {
                let v = z[i].clone() - self.factors.get(i, k).clone() * z[k].clone();
                z[i] = v;
            }
        }
        for i in (0..n).rev() {
            for k in i + 1..n {
                let v = z[i].clone() - self.factors.get(i, k).clone() * z[k].clone();
                z[i] = v;
            }
            z[i] = z[i].clone() / self.factors.get(i, i).clone();
        }
        Some(z)
    }

    /// Diagonal of `A^{-1}`; `None` when singular.
    pub fn inverse_diagonal(&self) -> Option<Vec<T>> {
        let n = self.factors.n();
        let ctx = self.factors.get(0, 0).context();
        (0..n)
            .map(|k| {
                let unit: Vec<T> = (0..n)
                    .map(|i| if i == k { T::one_in(&ctx) } else { T::zero_in(&ctx) })
                    .collect();
                self.solve(&unit).map(|col| col[k].clone())
            })
            .collect()
    }
}

/// Sign and log-magnitude of the determinant at the matrix's own precision.
pub fn lu_logdet<T: Real>(matrix: &SquareMatrix<T>) -> LogNumber<T> {
    LuDecomposition::new(matrix).logdet()
}

/// Result of an escalated evaluation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Escalated {
    pub value: LogNumber<f64>,
    /// Observed relative disagreement between the last two precisions.
    pub achieved_rel_tol: f64,
    /// Mantissa length of the returned value.
    pub mantissa_bits: usize,
}

/// Relative disagreement between two evaluations, or `None` when the signs
/// differ.
fn disagreement(coarse: &LogNumber<MpReal>, fine: &LogNumber<MpReal>) -> Option<f64> {
    if coarse.sign != fine.sign {
        return None;
    }
    if fine.sign == Sign::Zero {
        return Some(0.0);
    }
    let diff = (fine.log_abs.clone() - coarse.log_abs.clone()).abs().to_f64();
    Some(diff / fine.log_abs.to_f64().abs().max(1.0))
}

/// Evaluates `compute` at `mantissa_bits`, `2 * mantissa_bits`, ... and
/// returns the first finer value that agrees with its predecessor.
pub fn escalate<F>(cfg: &PrecisionConfig, mut compute: F) -> Result<Escalated>
where
    F: FnMut(usize) -> Result<LogNumber<MpReal>>,
{
    cfg.validate()?;
    let mut schedule = cfg.schedule();
    let first_bits = schedule.next().expect("nonempty schedule");
    let mut coarse = compute(first_bits)?;
    let mut exhausted = None;
    for bits in schedule {
        let fine = compute(bits)?;
        if let Some(rel) = disagreement(&coarse, &fine) {
            if rel <= cfg.agree_tol {
                return Ok(Escalated {
                    value: fine.to_f64(),
                    achieved_rel_tol: rel,
                    mantissa_bits: bits,
                });
            }
        }
        exhausted = Some((bits, coarse.to_f64(), fine.to_f64()));
        coarse = fine;
    }
    let (mantissa_bits, coarse, fine) = exhausted.expect("at least one escalation");
    Err(Error::PrecisionExhausted {
        mantissa_bits,
        reason: Exhaustion::Disagreement { coarse, fine },
    })
}

/// Converts an `f64` matrix to multi-precision (exactly).
pub fn to_mp(matrix: &SquareMatrix<f64>, bits: usize) -> SquareMatrix<MpReal> {
    matrix.map(|&v| MpReal::new(v, bits))
}
