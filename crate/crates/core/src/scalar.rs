//! Scalar abstraction shared by the double-precision and the
//! configurable-precision code paths.
//!
//! Every kernel that has to run both in hardware floats and in
//! multi-precision (the LU oracle, Newton tables, kernel matrix builders)
//! is written against [`Real`]. Hardware floats get a blanket
//! implementation through [`num_traits::Float`]; [`MpReal`] wraps an
//! `astro-float` number whose mantissa length travels with the value.

use std::cell::RefCell;
use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use astro_float::{BigFloat, Consts, RoundingMode, Sign as BigSign};
use num_traits::Float;

/// Real arithmetic with an explicit construction context.
///
/// `Context` is `()` for hardware floats and the mantissa length in bits
/// for [`MpReal`]; constants are always built through it so that no
/// precision is ever taken from ambient global state.
pub trait Real:
    Clone
    + fmt::Debug
    + PartialOrd
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    type Context: Clone + fmt::Debug;

    /// Context that reproduces the precision of `self`.
    fn context(&self) -> Self::Context;

    /// Converts an `f64`; exact whenever the working precision has at
    /// least 53 mantissa bits.
    fn from_f64_in(value: f64, ctx: &Self::Context) -> Self;

    /// Nearest `f64` (ties to even).
    fn to_f64(&self) -> f64;

    fn exp(&self) -> Self;
    fn ln(&self) -> Self;
    fn abs(&self) -> Self;
    fn is_zero(&self) -> bool;
    fn is_finite(&self) -> bool;

    fn zero_in(ctx: &Self::Context) -> Self {
        Self::from_f64_in(0.0, ctx)
    }

    fn one_in(ctx: &Self::Context) -> Self {
        Self::from_f64_in(1.0, ctx)
    }

    fn from_usize_in(value: usize, ctx: &Self::Context) -> Self {
        Self::from_f64_in(value as f64, ctx)
    }

    /// Integer power by repeated squaring; negative exponents divide.
    fn powi(&self, exponent: i32) -> Self {
        let one = Self::one_in(&self.context());
        let mut base = self.clone();
        let mut remaining = exponent.unsigned_abs();
        let mut acc = one.clone();
        while remaining > 0 {
            if remaining & 1 == 1 {
                acc = acc * base.clone();
            }
            remaining >>= 1;
            if remaining > 0 {
                base = base.clone() * base;
            }
        }
        if exponent < 0 {
            one / acc
        } else {
            acc
        }
    }
}

impl<T> Real for T
where
    T: Float + fmt::Debug,
{
    type Context = ();

    fn context(&self) -> Self::Context {}

    fn from_f64_in(value: f64, _ctx: &()) -> Self {
        T::from(value).unwrap_or_else(T::nan)
    }

    fn to_f64(&self) -> f64 {
        num_traits::ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }

    fn exp(&self) -> Self {
        Float::exp(*self)
    }

    fn ln(&self) -> Self {
        Float::ln(*self)
    }

    fn abs(&self) -> Self {
        Float::abs(*self)
    }

    fn is_zero(&self) -> bool {
        *self == T::zero()
    }

    fn is_finite(&self) -> bool {
        Float::is_finite(*self)
    }
}

const RM: RoundingMode = RoundingMode::ToEven;

thread_local! {
    static CONSTS: RefCell<Consts> =
        RefCell::new(Consts::new().expect("astro-float constant cache"));
}

/// Multi-precision real. Binary operations round to the longer of the two
/// operand precisions.
#[derive(Clone)]
pub struct MpReal {
    value: BigFloat,
    bits: usize,
}

impl MpReal {
    pub fn new(value: f64, bits: usize) -> Self {
        Self {
            value: BigFloat::from_f64(value, bits),
            bits,
        }
    }

    /// Mantissa length requested for this value.
    pub fn bits(&self) -> usize {
        self.bits
    }

    pub fn as_big_float(&self) -> &BigFloat {
        &self.value
    }

    fn wrap(value: BigFloat, bits: usize) -> Self {
        Self { value, bits }
    }

    fn joint_bits(&self, other: &Self) -> usize {
        self.bits.max(other.bits)
    }

    /// Rounds to the nearest `f64`, ties to even, saturating to infinity
    /// on overflow.
    fn round_to_f64(&self) -> f64 {
        if self.value.is_nan() {
            return f64::NAN;
        }
        if self.value.is_inf_pos() {
            return f64::INFINITY;
        }
        if self.value.is_inf_neg() {
            return f64::NEG_INFINITY;
        }
        let Some((words, _, sign, exponent, _)) = self.value.as_raw_parts() else {
            return f64::NAN;
        };
        let Some((&top, rest)) = words.split_last() else {
            return 0.0;
        };
        if top == 0 {
            return 0.0;
        }
        // value = (top . rest) / 2^64 * 2^exponent with the top bit of `top` set
        let sticky = rest.iter().any(|&w| w != 0);
        let mut mantissa = top >> 11;
        let remainder = top & 0x7ff;
        let half = 0x400;
        if remainder > half || (remainder == half && (sticky || mantissa & 1 == 1)) {
            mantissa += 1;
        }
        let magnitude = scale_by_pow2(mantissa as f64, exponent as i64 - 53);
        match sign {
            BigSign::Neg => -magnitude,
            BigSign::Pos => magnitude,
        }
    }
}

fn scale_by_pow2(value: f64, mut power: i64) -> f64 {
    let mut out = value;
    while power > 1000 {
        out *= 2f64.powi(1000);
        power -= 1000;
        if out.is_infinite() {
            return out;
        }
    }
    while power < -1000 {
        out *= 2f64.powi(-1000);
        power += 1000;
        if out == 0.0 {
            return out;
        }
    }
    out * 2f64.powi(power as i32)
}

impl fmt::Debug for MpReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "MpReal({:e} @ {} bits)", self.round_to_f64(), self.bits)
    }
}

impl fmt::Display for MpReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.value)
    }
}

impl PartialEq for MpReal {
    fn eq(&self, other: &Self) -> bool {
        self.value.cmp(&other.value) == Some(0)
    }
}

impl PartialOrd for MpReal {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        self.value.cmp(&other.value).map(|c| c.cmp(&0))
    }
}

impl Add for MpReal {
    type Output = MpReal;
    fn add(self, rhs: Self) -> Self {
        let p = self.joint_bits(&rhs);
        Self::wrap(self.value.add(&rhs.value, p, RM), p)
    }
}

impl Sub for MpReal {
    type Output = MpReal;
    fn sub(self, rhs: Self) -> Self {
        let p = self.joint_bits(&rhs);
        Self::wrap(self.value.sub(&rhs.value, p, RM), p)
    }
}

impl Mul for MpReal {
    type Output = MpReal;
    fn mul(self, rhs: Self) -> Self {
        let p = self.joint_bits(&rhs);
        Self::wrap(self.value.mul(&rhs.value, p, RM), p)
    }
}

impl Div for MpReal {
    type Output = MpReal;
    fn div(self, rhs: Self) -> Self {
        let p = self.joint_bits(&rhs);
        Self::wrap(self.value.div(&rhs.value, p, RM), p)
    }
}

impl Neg for MpReal {
    type Output = MpReal;
    fn neg(self) -> Self {
        let bits = self.bits;
        Self::wrap(self.value.neg(), bits)
    }
}

impl Real for MpReal {
    type Context = usize;

    fn context(&self) -> usize {
        self.bits
    }

    fn from_f64_in(value: f64, bits: &usize) -> Self {
        Self::new(value, *bits)
    }

    fn to_f64(&self) -> f64 {
        self.round_to_f64()
    }

    fn exp(&self) -> Self {
        let v = CONSTS.with(|cc| self.value.exp(self.bits, RM, &mut cc.borrow_mut()));
        Self::wrap(v, self.bits)
    }

    fn ln(&self) -> Self {
        let v = CONSTS.with(|cc| self.value.ln(self.bits, RM, &mut cc.borrow_mut()));
        Self::wrap(v, self.bits)
    }

    fn abs(&self) -> Self {
        Self::wrap(self.value.abs(), self.bits)
    }

    fn is_zero(&self) -> bool {
        self.value.is_zero()
    }

    fn is_finite(&self) -> bool {
        !(self.value.is_nan() || self.value.is_inf())
    }
}
