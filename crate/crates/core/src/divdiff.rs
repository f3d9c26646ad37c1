//! Divided differences of the exponential family `f(a) = exp(c a) / c^m`,
//! the mean-derivative approximation with its residual sandwich, and the
//! shifted node set `p` at which the lower-bound divided difference is
//! taken.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::highprec::DEFAULT_MANTISSA_BITS;
use crate::nodes::{centered_moments, node_sum, NodeVector};
use crate::scalar::{MpReal, Real};

/// Below this consecutive gap the Newton table is built in multi-precision.
pub const DOUBLE_PRECISION_MIN_GAP: f64 = 1e-3;

/// `f(a) = exp(c a) / c^m`, so that `f^(k)(a) = c^(k - m) exp(c a)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SmoothExpFamily {
    pub scale: f64,
    pub prefactor_power: u32,
}

impl SmoothExpFamily {
    pub fn new(scale: f64, prefactor_power: u32) -> Result<Self> {
        if !scale.is_finite() || (scale == 0.0 && prefactor_power > 0) {
            return Err(Error::InvalidFamily {
                scale,
                power: prefactor_power,
            });
        }
        Ok(Self {
            scale,
            prefactor_power,
        })
    }

    /// Plain `exp(c a)`.
    pub fn exp(scale: f64) -> Self {
        Self {
            scale,
            prefactor_power: 0,
        }
    }

    pub fn eval<R: Real>(&self, alpha: &R) -> R {
        self.derivative_in(0, alpha)
    }

    /// `f^(order)(alpha)` evaluated in the precision of `alpha`.
    pub fn derivative_in<R: Real>(&self, order: u32, alpha: &R) -> R {
        let ctx = alpha.context();
        let c = R::from_f64_in(self.scale, &ctx);
        let power = order as i32 - self.prefactor_power as i32;
        let coeff = if self.scale == 0.0 {
            // f is the constant 1 here (m = 0)
            if order == 0 {
                R::one_in(&ctx)
            } else {
                R::zero_in(&ctx)
            }
        } else {
            c.powi(power)
        };
        coeff * (c * alpha.clone()).exp()
    }

    pub fn derivative(&self, order: u32, alpha: f64) -> f64 {
        self.derivative_in(order, &alpha)
    }
}

/// Value of `[v_1, ..., v_n] f` together with the full Newton table:
/// `table[k][i] = [v_i, ..., v_{i+k}] f`.
#[derive(Debug, Clone, PartialEq)]
pub struct DividedDiffResult<T = f64> {
    pub value: T,
    pub table: Vec<Vec<T>>,
}

/// Newton recursion over arbitrary distinct nodes (any order).
pub fn newton_table<R: Real>(nodes: &[R], values: Vec<R>) -> DividedDiffResult<R> {
    assert_eq!(nodes.len(), values.len(), "one value per node");
    assert!(!nodes.is_empty(), "at least one node");
    let n = nodes.len();
    let mut table = Vec::with_capacity(n);
    table.push(values);
    for k in 1..n {
        let prev = &table[k - 1];
        let next: Vec<R> = (0..n - k)
            .map(|i| {
                (prev[i + 1].clone() - prev[i].clone()) / (nodes[i + k].clone() - nodes[i].clone())
            })
            .collect();
        table.push(next);
    }
    let value = table[n - 1][0].clone();
    DividedDiffResult { value, table }
}

/// Divided difference of `f` over nodes given in any order.
pub fn divided_difference_in<R: Real>(nodes: &[R], f: &SmoothExpFamily) -> DividedDiffResult<R> {
    newton_table(nodes, nodes.iter().map(|v| f.eval(v)).collect())
}

fn to_mp_nodes(v: &NodeVector, bits: usize) -> Vec<MpReal> {
    v.as_slice().iter().map(|&x| MpReal::new(x, bits)).collect()
}

/// Above this amplification factor the double-precision table is redone in
/// multi-precision.
pub const DOUBLE_PRECISION_MAX_CONDITION: f64 = 1e2;

/// `sum_i |f(v_i) / w_i| / |[v] f|` with `w_i = prod_{j != i} (v_i - v_j)`:
/// how much rounding in the values is amplified by the Newton table.
fn condition(nodes: &[f64], values: &[f64], result: f64) -> f64 {
    let spread: f64 = nodes
        .iter()
        .enumerate()
        .map(|(i, &vi)| {
            let w: f64 = nodes
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .map(|(_, &vj)| vi - vj)
                .product();
            (values[i] / w).abs()
        })
        .sum();
    spread / result.abs()
}

/// `[v_1, ..., v_n] f` in double precision, or via a multi-precision table
/// when consecutive nodes are closer than [`DOUBLE_PRECISION_MIN_GAP`] or
/// the double-precision table is badly conditioned.
pub fn divided_difference(v: &NodeVector, f: &SmoothExpFamily) -> DividedDiffResult<f64> {
    if v.min_gap() >= DOUBLE_PRECISION_MIN_GAP {
        let fast = divided_difference_in(v.as_slice(), f);
        let cond = condition(v.as_slice(), &fast.table[0], fast.value);
        if cond.is_finite() && cond <= DOUBLE_PRECISION_MAX_CONDITION {
            return fast;
        }
    }
    let precise = divided_difference_in(&to_mp_nodes(v, DEFAULT_MANTISSA_BITS), f);
    DividedDiffResult {
        value: precise.value.to_f64(),
        table: precise
            .table
            .iter()
            .map(|col| col.iter().map(Real::to_f64).collect())
            .collect(),
    }
}

fn factorial_in<R: Real>(k: usize, ctx: &R::Context) -> R {
    (2..=k).fold(R::one_in(ctx), |acc, i| acc * R::from_usize_in(i, ctx))
}

fn mean_derivative_in<R: Real>(nodes: &[R], f: &SmoothExpFamily) -> R {
    let ctx = nodes[0].context();
    let n = nodes.len();
    let sum = nodes
        .iter()
        .cloned()
        .fold(R::zero_in(&ctx), |acc, v| acc + v);
    let mean = sum / R::from_usize_in(n, &ctx);
    f.derivative_in(n as u32 - 1, &mean) / factorial_in(n - 1, &ctx)
}

/// `f^(n-1)(mean(v)) / (n-1)!`.
pub fn mean_derivative_approx(v: &NodeVector, f: &SmoothExpFamily) -> f64 {
    let n = v.len();
    let mean = node_sum(v) / n as f64;
    f.derivative(n as u32 - 1, mean) / factorial_in::<f64>(n - 1, &())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ResidualBounds {
    /// Divided difference minus the mean-derivative approximation.
    pub residual: f64,
    pub lo: f64,
    pub hi: f64,
}

impl ResidualBounds {
    pub fn holds(&self) -> bool {
        self.lo <= self.residual && self.residual <= self.hi
    }
}

/// Residual of the mean-derivative approximation and the interval
/// `(S/2) [min, max] f^(n+1) / (n+1)!` over the node hull that must
/// contain it. The residual is a cancelling difference, so both terms are
/// formed in multi-precision before rounding.
pub fn lemma2_residual_bounds(v: &NodeVector, f: &SmoothExpFamily) -> ResidualBounds {
    let n = v.len();
    let nodes = to_mp_nodes(v, DEFAULT_MANTISSA_BITS);
    let dd = divided_difference_in(&nodes, f).value;
    let approx = mean_derivative_in(&nodes, f);
    let residual = (dd - approx).to_f64();

    let spread = centered_moments(v).spread;
    let order = n as u32 + 1;
    let at_first = f.derivative(order, v.first());
    let at_last = f.derivative(order, v.last());
    let scale = spread / 2.0 / factorial_in::<f64>(n + 1, &());
    ResidualBounds {
        residual,
        lo: scale * at_first.min(at_last),
        hi: scale * at_first.max(at_last),
    }
}

/// `p_i = s(x) - x_{n+1-i}`, strictly increasing because `x` is.
pub fn p_vector(x: &NodeVector) -> Result<NodeVector> {
    let s = node_sum(x);
    NodeVector::new(x.as_slice().iter().rev().map(|&v| s - v).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LowerBoundCheck {
    pub dd: f64,
    pub bound: f64,
}

impl LowerBoundCheck {
    pub fn holds(&self, slack: f64) -> bool {
        self.dd >= self.bound - slack
    }
}

/// The family `exp(c a) / c^(n-1)` with `c = u_sum / (n-1)`; for `n = 1`
/// the prefactor power is zero and `c = u_sum`.
pub fn lower_bound_family(n: usize, u_sum: f64) -> Result<SmoothExpFamily> {
    if !(u_sum > 0.0 && u_sum.is_finite()) {
        return Err(Error::InvalidUSum(u_sum));
    }
    let degree = n.saturating_sub(1);
    SmoothExpFamily::new(u_sum / degree.max(1) as f64, degree as u32)
}

/// `[p_1, ..., p_n] f` against its mean-derivative lower bound
/// `exp(u_sum s(x) / n) / (n-1)!`. Both sides are formed in
/// multi-precision and rounded, and rounding is monotone, so a true
/// inequality survives into the `f64` pair.
pub fn dd_lower_bound_check(x: &NodeVector, u_sum: f64) -> Result<LowerBoundCheck> {
    let f = lower_bound_family(x.len(), u_sum)?;
    let p = p_vector(x)?;
    let nodes = to_mp_nodes(&p, DEFAULT_MANTISSA_BITS);
    Ok(LowerBoundCheck {
        dd: divided_difference_in(&nodes, &f).value.to_f64(),
        bound: mean_derivative_in(&nodes, &f).to_f64(),
    })
}
