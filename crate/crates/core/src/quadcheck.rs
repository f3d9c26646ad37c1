//! Tensor-product Gauss-Legendre quadrature over the box
//! `[x_1, x_2] x [x_2, x_3] x ... x [x_{n-1}, x_n]`, used to check the
//! integral representations of `det A` numerically at small `n`.

use num_traits::Float;
use serde::Serialize;

use crate::divdiff::{divided_difference_in, lower_bound_family, p_vector};
use crate::error::{Error, Result};
use crate::expdet::{logdet_exp, ExpMatrixSpec};
use crate::highprec::{PrecisionConfig, DEFAULT_MANTISSA_BITS};
use crate::nodes::{compensated_sum, node_sum, NodeVector};
use crate::scalar::{MpReal, Real};

/// Hard cap on integration dimensions.
pub const MAX_DIMS_CAP: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QuadratureConfig {
    /// Gauss points per dimension.
    pub order: usize,
    /// Largest accepted number of dimensions (`n - 1`), at most
    /// [`MAX_DIMS_CAP`].
    pub max_dims: usize,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self {
            order: 24,
            max_dims: 3,
        }
    }
}

impl QuadratureConfig {
    pub fn with_order(order: usize) -> Self {
        Self {
            order,
            ..Self::default()
        }
    }

    fn check(&self, dims: usize) -> Result<()> {
        if self.order < 2 {
            return Err(Error::InvalidOrder(self.order));
        }
        let max_dims = self.max_dims.min(MAX_DIMS_CAP);
        if dims > max_dims {
            return Err(Error::TooManyDims { dims, max_dims });
        }
        Ok(())
    }
}

/// Nodes and weights on `[-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussLegendre<T = f64> {
    pub nodes: Vec<T>,
    pub weights: Vec<T>,
}

/// Newton iteration on `P_order` from the usual cosine initial guesses.
pub fn gauss_legendre<T: Float>(order: usize) -> Result<GaussLegendre<T>> {
    if order < 2 {
        return Err(Error::InvalidOrder(order));
    }
    let c = |v: f64| T::from(v).expect("representable");
    let n = order as f64;
    let mut nodes = vec![T::zero(); order];
    let mut weights = vec![T::zero(); order];
    for i in 0..order.div_ceil(2) {
        let mut z = c((std::f64::consts::PI * (i as f64 + 0.75) / (n + 0.5)).cos());
        let mut derivative = T::one();
        for _ in 0..100 {
            // P_order(z) and P_{order-1}(z) by the three-term recurrence
            let (mut p_prev, mut p) = (T::one(), z);
            for k in 2..=order {
                let k_t = c(k as f64);
                let next = ((c(2.0) * k_t - T::one()) * z * p - (k_t - T::one()) * p_prev) / k_t;
                p_prev = p;
                p = next;
            }
            derivative = c(n) * (z * p - p_prev) / (z * z - T::one());
            let step = p / derivative;
            z = z - step;
            if step.abs() <= T::epsilon() {
                break;
            }
        }
        let w = c(2.0) / ((T::one() - z * z) * derivative * derivative);
        nodes[i] = -z;
        nodes[order - 1 - i] = z;
        weights[i] = w;
        weights[order - 1 - i] = w;
    }
    if order % 2 == 1 {
        nodes[order / 2] = T::zero();
    }
    Ok(GaussLegendre { nodes, weights })
}

/// Integrand over the box: `V(t)` or `V(t) exp(rate * s(t))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Integrand {
    Vandermonde,
    VandermondeExp { rate: f64 },
}

fn vandermonde_product<T: Float>(t: &[T]) -> T {
    let mut v = T::one();
    for j in 1..t.len() {
        for i in 0..j {
            v = v * (t[j] - t[i]);
        }
    }
    v
}

/// Integrates `g` over the box spanned by consecutive nodes. Points are
/// visited in odometer order (first coordinate fastest) and summed with
/// compensation, so results are reproducible bit for bit.
pub fn integrate_box<T, G>(x: &NodeVector<T>, cfg: &QuadratureConfig, mut g: G) -> Result<T>
where
    T: Float,
    G: FnMut(&[T]) -> T,
{
    let dims = x.len() - 1;
    cfg.check(dims)?;
    let rule = gauss_legendre::<T>(cfg.order)?;
    let half = T::from(0.5).expect("representable");
    let bounds = x.as_slice();
    let centers: Vec<T> = (0..dims).map(|k| half * (bounds[k] + bounds[k + 1])).collect();
    let radii: Vec<T> = (0..dims).map(|k| half * (bounds[k + 1] - bounds[k])).collect();
    let jacobian = radii.iter().fold(T::one(), |acc, &r| acc * r);

    let mut index = vec![0usize; dims];
    let mut point = vec![T::zero(); dims];
    let mut terms = Vec::with_capacity(cfg.order.pow(dims as u32));
    loop {
        let mut weight = T::one();
        for k in 0..dims {
            point[k] = centers[k] + radii[k] * rule.nodes[index[k]];
            weight = weight * rule.weights[index[k]];
        }
        terms.push(weight * g(&point));
        let Some(k) = (0..dims).find(|&k| index[k] + 1 < cfg.order) else {
            break;
        };
        index[k] += 1;
        for slot in index.iter_mut().take(k) {
            *slot = 0;
        }
    }
    Ok(jacobian * compensated_sum(terms))
}

/// `int ... int g(t) dt` over the box for the chosen integrand.
pub fn nested_integral<T: Float>(
    x: &NodeVector<T>,
    integrand: Integrand,
    cfg: &QuadratureConfig,
) -> Result<T> {
    match integrand {
        Integrand::Vandermonde => integrate_box(x, cfg, |t| vandermonde_product(t)),
        Integrand::VandermondeExp { rate } => {
            let rate = T::from(rate).expect("finite rate");
            integrate_box(x, cfg, |t| {
                let s = t.iter().fold(T::zero(), |acc, &v| acc + v);
                vandermonde_product(t) * (rate * s).exp()
            })
        }
    }
}

fn factorial(k: usize) -> f64 {
    (2..=k).map(|i| i as f64).product()
}

/// Relative error of the quadrature against `V(x) / (n-1)!`.
pub fn check_corollary_identity(x: &NodeVector, cfg: &QuadratureConfig) -> Result<f64> {
    let quad = nested_integral(x, Integrand::Vandermonde, cfg)?;
    let exact = vandermonde_product(x.as_slice()) / factorial(x.len() - 1);
    Ok((quad - exact).abs() / exact)
}

/// Relative error between the quadrature of `V(t) exp(c s(t))`,
/// `c = u_sum / (n-1)`, and `V(x) [p_1, ..., p_n] f` for
/// `f(a) = exp(c a) / c^(n-1)`. The right-hand side is formed in
/// multi-precision because the divided difference cancels heavily for
/// small `c`.
pub fn check_theorem_identity(x: &NodeVector, u_sum: f64, cfg: &QuadratureConfig) -> Result<f64> {
    let f = lower_bound_family(x.len(), u_sum)?;
    let quad = nested_integral(
        x,
        Integrand::VandermondeExp {
            rate: f.scale,
        },
        cfg,
    )?;
    let p = p_vector(x)?;
    let bits = DEFAULT_MANTISSA_BITS;
    let p_mp: Vec<MpReal> = p.as_slice().iter().map(|&v| MpReal::new(v, bits)).collect();
    let x_mp: Vec<MpReal> = x.as_slice().iter().map(|&v| MpReal::new(v, bits)).collect();
    let mut vandermonde = MpReal::new(1.0, bits);
    for j in 1..x_mp.len() {
        for i in 0..j {
            vandermonde = vandermonde * (x_mp[j].clone() - x_mp[i].clone());
        }
    }
    let exact = (vandermonde * divided_difference_in(&p_mp, &f).value).to_f64();
    Ok((quad - exact).abs() / exact.abs())
}

/// Determinant of `[exp(t_i u_j)]` of order 1 to 3 by cofactor expansion.
fn small_exp_det(t: &[f64], u: &[f64]) -> f64 {
    let e = |i: usize, j: usize| (t[i] * u[j]).exp();
    match t.len() {
        1 => e(0, 0),
        2 => e(0, 0) * e(1, 1) - e(0, 1) * e(1, 0),
        3 => {
            e(0, 0) * (e(1, 1) * e(2, 2) - e(1, 2) * e(2, 1))
                - e(0, 1) * (e(1, 0) * e(2, 2) - e(1, 2) * e(2, 0))
                + e(0, 2) * (e(1, 0) * e(2, 1) - e(1, 1) * e(2, 0))
        }
        _ => unreachable!("order checked by caller"),
    }
}

/// Relative difference between `det A` from the oracle and
/// `exp(s(x) y_1) u_1 ... u_{n-1} int det[exp(t_i u_j)] dt` with
/// `u_j = y_{j+1} - y_1`. Supports `n` from 2 to 4.
pub fn check_lemma1_reduction(
    spec: &ExpMatrixSpec,
    cfg: &QuadratureConfig,
    precision: &PrecisionConfig,
) -> Result<f64> {
    let n = spec.n();
    if n < 2 {
        return Err(Error::InvalidArgument(
            "the reduction needs at least two nodes".into(),
        ));
    }
    if n - 1 > 3 {
        return Err(Error::TooManyDims {
            dims: n - 1,
            max_dims: cfg.max_dims.min(3),
        });
    }
    let y = spec.y().as_slice();
    let u: Vec<f64> = y[1..].iter().map(|&v| v - y[0]).collect();
    let integral = integrate_box(spec.x(), cfg, |t| small_exp_det(t, &u))?;
    if !(integral > 0.0) {
        return Err(Error::PositivityViolated {
            context: format!("reduced integral is {integral}"),
            rows: Vec::new(),
            cols: Vec::new(),
        });
    }
    let log_rhs = node_sum(spec.x()) * y[0]
        + compensated_sum(u.iter().map(|v| v.ln()))
        + integral.ln();
    let oracle = logdet_exp(spec, precision)?;
    Ok((log_rhs - oracle.value.log_abs).exp_m1().abs())
}
