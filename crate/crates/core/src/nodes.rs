//! Node vectors and the scalar quantities built from them: Vandermonde
//! products, superfactorials, sums and centered second moments.
//!
//! Everything here returns logarithms where a product is involved; the
//! raw products overflow for modest node counts.

use num_traits::Float;
use serde::Serialize;

use crate::error::{Error, Result};

/// A nonempty, finite, strictly increasing sequence of reals.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct NodeVector<T = f64> {
    values: Vec<T>,
}

impl<T: Float> NodeVector<T> {
    /// Validates `raw` as given; no sorting, no perturbation of ties.
    pub fn new(raw: Vec<T>) -> Result<Self> {
        if raw.is_empty() {
            return Err(Error::Empty);
        }
        if let Some(index) = raw.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        if let Some(index) = (1..raw.len()).find(|&i| raw[i] <= raw[i - 1]) {
            return Err(Error::NotStrictlyIncreasing { index });
        }
        Ok(Self { values: raw })
    }

    /// Sorts, then validates. Duplicates are still rejected; the reported
    /// index refers to the sorted order.
    pub fn from_unsorted(mut raw: Vec<T>) -> Result<Self> {
        if let Some(index) = raw.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        raw.sort_by(|a, b| a.partial_cmp(b).expect("finite values"));
        Self::new(raw)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn as_slice(&self) -> &[T] {
        &self.values
    }

    pub fn into_vec(self) -> Vec<T> {
        self.values
    }

    pub fn first(&self) -> T {
        self.values[0]
    }

    pub fn last(&self) -> T {
        self.values[self.values.len() - 1]
    }

    /// Smallest consecutive gap; infinite for a single node.
    pub fn min_gap(&self) -> T {
        self.values
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(T::infinity(), T::min)
    }

    /// `x + c` entrywise, revalidated (rounding can merge close nodes).
    pub fn shifted(&self, c: T) -> Result<Self> {
        Self::new(self.values.iter().map(|&v| v + c).collect())
    }

    /// `a * x` entrywise for `a > 0`.
    pub fn scaled(&self, a: T) -> Result<Self> {
        if !(a > T::zero()) {
            return Err(Error::InvalidArgument("scale factor must be positive".into()));
        }
        Self::new(self.values.iter().map(|&v| v * a).collect())
    }

    /// Subset of nodes at the given (increasing) positions.
    pub fn select(&self, indices: &[usize]) -> Result<Self> {
        Self::new(indices.iter().map(|&i| self.values[i]).collect())
    }
}

impl<T> std::ops::Index<usize> for NodeVector<T> {
    type Output = T;
    fn index(&self, i: usize) -> &T {
        &self.values[i]
    }
}

/// Validates a raw node list.
pub fn validate_nodes<T: Float>(raw: &[T]) -> Result<NodeVector<T>> {
    NodeVector::new(raw.to_vec())
}

/// Neumaier-compensated summation.
pub fn compensated_sum<T: Float, I: IntoIterator<Item = T>>(terms: I) -> T {
    let mut sum = T::zero();
    let mut carry = T::zero();
    for term in terms {
        let t = sum + term;
        if sum.abs() >= term.abs() {
            carry = carry + ((sum - t) + term);
        } else {
            carry = carry + ((term - t) + sum);
        }
        sum = t;
    }
    sum + carry
}

/// `ln V(x) = sum_{i<j} ln(x_j - x_i)`; zero for a single node.
pub fn log_vandermonde<T: Float>(nodes: &NodeVector<T>) -> T {
    let x = nodes.as_slice();
    compensated_sum(
        (0..x.len()).flat_map(|j| (0..j).map(move |i| (x[j] - x[i]).ln())),
    )
}

/// `ln c_n` with `c_n = 1! 2! ... (n-1)!`; zero for `n <= 1`.
pub fn log_superfactorial<T: Float>(n: usize) -> T {
    // ln c_n = sum_{k=1}^{n-1} (n - k) ln k
    compensated_sum((2..n).map(|k| {
        let weight = T::from(n - k).expect("small integer");
        weight * T::from(k).expect("small integer").ln()
    }))
}

/// Number of node pairs, `n(n-1)/2`.
pub fn pair_count(n: usize) -> usize {
    n * n.saturating_sub(1) / 2
}

/// Compensated sum of the nodes.
pub fn node_sum<T: Float>(nodes: &NodeVector<T>) -> T {
    compensated_sum(nodes.as_slice().iter().copied())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CenteredMoments<T = f64> {
    pub mean: T,
    /// Sum of squared deviations from the mean (not divided by n).
    pub spread: T,
}

/// Mean and centered sum of squares, two-pass with the standard
/// correction term for the rounding error of the mean.
pub fn centered_moments<T: Float>(nodes: &NodeVector<T>) -> CenteredMoments<T> {
    let x = nodes.as_slice();
    let n = T::from(x.len()).expect("length fits");
    let mean = node_sum(nodes) / n;
    let deviation_sum = compensated_sum(x.iter().map(|&v| v - mean));
    let squares = compensated_sum(x.iter().map(|&v| (v - mean) * (v - mean)));
    let spread = (squares - deviation_sum * deviation_sum / n).max(T::zero());
    CenteredMoments { mean, spread }
}
