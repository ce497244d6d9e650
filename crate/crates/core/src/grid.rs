//! Uniform hyper-rectangular partitions of a state domain.
//!
//! Cells are half-open, `(lower, upper]` in every dimension, except that a
//! cell touching the lower face of the domain also contains that face. With
//! this convention the cells partition the closed domain box exactly.
//!
//! Flat cell indices are row-major over the multi-index with dimension 0
//! varying fastest: `flat = i_0 + c_0 * (i_1 + c_1 * (i_2 + ...))`.

use std::fmt;

use crate::error::{Error, Result};
use crate::scalar::{euclidean, Scalar};

/// Closed axis-aligned box `[lower_0, upper_0] x ... x [lower_n, upper_n]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Hyperrect<T> {
    lower: Vec<T>,
    upper: Vec<T>,
}

impl<T: Scalar> Hyperrect<T> {
    pub fn new(lower: Vec<T>, upper: Vec<T>) -> Result<Self> {
        if lower.is_empty() {
            return Err(Error::InvalidBox("box has no dimensions".into()));
        }
        if lower.len() != upper.len() {
            return Err(Error::DimensionMismatch {
                expected: lower.len(),
                got: upper.len(),
            });
        }
        for (i, (&l, &u)) in lower.iter().zip(&upper).enumerate() {
            if !l.is_finite() || !u.is_finite() {
                return Err(Error::InvalidBox(format!("non-finite bound in dimension {i}")));
            }
            if !(l < u) {
                return Err(Error::InvalidBox(format!(
                    "lower {l} is not below upper {u} in dimension {i}"
                )));
            }
        }
        Ok(Self { lower, upper })
    }

    /// Builds a box from `(lower, upper)` pairs.
    pub fn from_intervals(intervals: &[(T, T)]) -> Result<Self> {
        let (lower, upper) = intervals.iter().copied().unzip();
        Self::new(lower, upper)
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[T] {
        &self.lower
    }

    pub fn upper(&self) -> &[T] {
        &self.upper
    }

    pub fn widths(&self) -> Vec<T> {
        self.lower.iter().zip(&self.upper).map(|(&l, &u)| u - l).collect()
    }

    pub fn center(&self) -> Vec<T> {
        let two = T::one() + T::one();
        self.lower
            .iter()
            .zip(&self.upper)
            .map(|(&l, &u)| (l + u) / two)
            .collect()
    }

    /// Closed membership test. Points of the wrong dimension are outside.
    pub fn contains(&self, x: &[T]) -> bool {
        x.len() == self.dim()
            && x
                .iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(&v, (&l, &u))| v >= l && v <= u)
    }

    /// `self` is a subset of `other`.
    pub fn is_within(&self, other: &Hyperrect<T>) -> bool {
        self.dim() == other.dim()
            && (0..self.dim())
                .all(|i| self.lower[i] >= other.lower[i] && self.upper[i] <= other.upper[i])
    }

    /// Nearest point of the box to `x`.
    pub fn project(&self, x: &[T]) -> Vec<T> {
        x.iter()
            .zip(self.lower.iter().zip(&self.upper))
            .map(|(&v, (&l, &u))| v.max(l).min(u))
            .collect()
    }

    /// Euclidean distance from `x` to the box (zero inside).
    pub fn distance(&self, x: &[T]) -> T {
        euclidean(x, &self.project(x))
    }

    /// Scales every bound by `factor`.
    pub fn scaled(&self, factor: T) -> Result<Self> {
        Self::new(
            self.lower.iter().map(|&v| v * factor).collect(),
            self.upper.iter().map(|&v| v * factor).collect(),
        )
    }
}

/// A grid cell, or the pseudo-cell collecting everything outside the domain.
///
/// `OutOfDomain` orders before every real cell, matching its `-1` encoding
/// in the abstraction file.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum CellId {
    OutOfDomain,
    Cell(usize),
}

impl CellId {
    pub fn index(self) -> Option<usize> {
        match self {
            CellId::Cell(i) => Some(i),
            CellId::OutOfDomain => None,
        }
    }

    pub fn is_out_of_domain(self) -> bool {
        matches!(self, CellId::OutOfDomain)
    }

    pub(crate) fn encode(self) -> i64 {
        match self {
            CellId::Cell(i) => i as i64,
            CellId::OutOfDomain => -1,
        }
    }
}

impl From<usize> for CellId {
    fn from(i: usize) -> Self {
        CellId::Cell(i)
    }
}

impl fmt::Display for CellId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CellId::Cell(i) => write!(f, "{i}"),
            CellId::OutOfDomain => f.write_str("out-of-domain"),
        }
    }
}

/// Uniform partition of a domain box.
#[derive(Clone, Debug, PartialEq)]
pub struct Grid<T> {
    domain: Hyperrect<T>,
    counts: Vec<usize>,
    strides: Vec<usize>,
    // boundaries[d][j] is the lower edge of cell j in dimension d; the last
    // entry is the domain's upper bound exactly.
    boundaries: Vec<Vec<T>>,
    n_x: usize,
}

impl<T: Scalar> Grid<T> {
    pub fn new(domain: Hyperrect<T>, counts: Vec<usize>) -> Result<Self> {
        if counts.len() != domain.dim() {
            return Err(Error::DimensionMismatch {
                expected: domain.dim(),
                got: counts.len(),
            });
        }
        if let Some(d) = counts.iter().position(|&c| c == 0) {
            return Err(Error::InvalidCounts(format!("zero cells in dimension {d}")));
        }
        let mut strides = Vec::with_capacity(counts.len());
        let mut n_x: usize = 1;
        for &c in &counts {
            strides.push(n_x);
            n_x = n_x
                .checked_mul(c)
                .ok_or_else(|| Error::InvalidCounts("cell count overflows".into()))?;
        }
        let boundaries = (0..domain.dim())
            .map(|d| {
                let (lo, hi) = (domain.lower[d], domain.upper[d]);
                let c = counts[d];
                let span = hi - lo;
                let mut b: Vec<T> = (0..c)
                    .map(|j| lo + span * T::from_count(j) / T::from_count(c))
                    .collect();
                b.push(hi);
                b
            })
            .collect();
        Ok(Self {
            domain,
            counts,
            strides,
            boundaries,
            n_x,
        })
    }

    pub fn domain(&self) -> &Hyperrect<T> {
        &self.domain
    }

    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    pub fn dim(&self) -> usize {
        self.counts.len()
    }

    pub fn n_x(&self) -> usize {
        self.n_x
    }

    /// Nominal cell widths, `(upper - lower) / count` per dimension.
    pub fn cell_widths(&self) -> Vec<T> {
        (0..self.dim())
            .map(|d| (self.domain.upper[d] - self.domain.lower[d]) / T::from_count(self.counts[d]))
            .collect()
    }

    /// Cell edges along dimension `d`, `counts[d] + 1` values.
    pub fn boundaries(&self, d: usize) -> &[T] {
        &self.boundaries[d]
    }

    pub fn flat_index(&self, multi: &[usize]) -> Result<usize> {
        if multi.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: multi.len(),
            });
        }
        let mut flat = 0;
        for (d, &i) in multi.iter().enumerate() {
            if i >= self.counts[d] {
                return Err(Error::CellOutOfRange {
                    index: i,
                    n_x: self.counts[d],
                });
            }
            flat += i * self.strides[d];
        }
        Ok(flat)
    }

    pub fn multi_index(&self, flat: usize) -> Result<Vec<usize>> {
        if flat >= self.n_x {
            return Err(Error::CellOutOfRange {
                index: flat,
                n_x: self.n_x,
            });
        }
        let mut rest = flat;
        Ok(self
            .counts
            .iter()
            .map(|&c| {
                let i = rest % c;
                rest /= c;
                i
            })
            .collect())
    }

    fn axis_index(&self, d: usize, v: T) -> usize {
        let b = &self.boundaries[d];
        let c = self.counts[d];
        let lo = b[0];
        let w = (b[c] - lo) / T::from_count(c);
        let guess = ((v - lo) / w).ceil().to_f64_lossy() - 1.0;
        let mut j = if guess <= 0.0 {
            0
        } else {
            (guess as usize).min(c - 1)
        };
        // Correct the float guess against the stored edges so that
        // quantization agrees bit-for-bit with cell_bounds.
        while j > 0 && v <= b[j] {
            j -= 1;
        }
        while j + 1 < c && v > b[j + 1] {
            j += 1;
        }
        j
    }

    /// Returns the unique cell containing `x`, or `OutOfDomain`.
    pub fn quantize(&self, x: &[T]) -> Result<CellId> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: x.len(),
            });
        }
        if !self.domain.contains(x) {
            return Ok(CellId::OutOfDomain);
        }
        let flat = x
            .iter()
            .enumerate()
            .map(|(d, &v)| self.axis_index(d, v) * self.strides[d])
            .sum();
        Ok(CellId::Cell(flat))
    }

    fn cell_index(&self, q: CellId) -> Result<usize> {
        match q {
            CellId::OutOfDomain => Err(Error::OutOfDomain),
            CellId::Cell(i) if i >= self.n_x => Err(Error::CellOutOfRange {
                index: i,
                n_x: self.n_x,
            }),
            CellId::Cell(i) => Ok(i),
        }
    }

    /// Closure of cell `q` as a box.
    pub fn cell_bounds(&self, q: CellId) -> Result<Hyperrect<T>> {
        let multi = self.multi_index(self.cell_index(q)?)?;
        let (lower, upper) = multi
            .iter()
            .enumerate()
            .map(|(d, &i)| (self.boundaries[d][i], self.boundaries[d][i + 1]))
            .unzip();
        Ok(Hyperrect { lower, upper })
    }

    /// Representative point of `q`: the midpoint of its bounds.
    pub fn cell_center(&self, q: CellId) -> Result<Vec<T>> {
        Ok(self.cell_bounds(q)?.center())
    }

    /// Largest distance from a point of a cell to that cell's center.
    pub fn achieved_precision(&self) -> T {
        let half = T::one() / (T::one() + T::one());
        let sq = self
            .cell_widths()
            .into_iter()
            .fold(T::zero(), |acc, w| acc + w * w);
        half * sq.sqrt()
    }
}

/// Finite set of representative inputs taken from an input box.
#[derive(Clone, Debug, PartialEq)]
pub struct InputSet<T> {
    dim: usize,
    inputs: Vec<Vec<T>>,
}

impl<T: Scalar> InputSet<T> {
    /// Product grid of cell-center values, dimension 0 varying fastest.
    pub fn grid(input_box: Hyperrect<T>, counts: &[usize]) -> Result<Self> {
        if counts.len() != input_box.dim() {
            return Err(Error::DimensionMismatch {
                expected: input_box.dim(),
                got: counts.len(),
            });
        }
        if let Some(d) = counts.iter().position(|&c| c == 0) {
            return Err(Error::InvalidCounts(format!("zero inputs in dimension {d}")));
        }
        let half = T::one() / (T::one() + T::one());
        let axes: Vec<Vec<T>> = (0..input_box.dim())
            .map(|d| {
                let (a, b) = (input_box.lower[d], input_box.upper[d]);
                let c = T::from_count(counts[d]);
                (0..counts[d])
                    .map(|i| a + (T::from_count(i) + half) * (b - a) / c)
                    .collect()
            })
            .collect();
        let n_u: usize = counts.iter().product();
        let inputs = (0..n_u)
            .map(|flat| {
                let mut rest = flat;
                axes.iter()
                    .map(|axis| {
                        let v = axis[rest % axis.len()];
                        rest /= axis.len();
                        v
                    })
                    .collect()
            })
            .collect();
        Ok(Self {
            dim: input_box.dim(),
            inputs,
        })
    }

    /// Explicit input list that must lie in `input_box`.
    pub fn from_inputs(input_box: Hyperrect<T>, inputs: Vec<Vec<T>>) -> Result<Self> {
        let set = Self::new(inputs)?;
        if set.dim != input_box.dim() {
            return Err(Error::DimensionMismatch {
                expected: input_box.dim(),
                got: set.dim,
            });
        }
        if let Some(k) = set.inputs.iter().position(|u| !input_box.contains(u)) {
            return Err(Error::InvalidParameter(format!("input {k} lies outside the input box")));
        }
        Ok(set)
    }

    /// Explicit input list: nonempty, finite, one dimension, no duplicates.
    pub fn new(inputs: Vec<Vec<T>>) -> Result<Self> {
        let dim = match inputs.first() {
            Some(u) if !u.is_empty() => u.len(),
            _ => return Err(Error::InvalidParameter("input set is empty".into())),
        };
        for (k, u) in inputs.iter().enumerate() {
            if u.len() != dim {
                return Err(Error::DimensionMismatch { expected: dim, got: u.len() });
            }
            if u.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidParameter(format!("input {k} is not finite")));
            }
            if inputs[..k].contains(u) {
                return Err(Error::InvalidParameter(format!("input {k} is a duplicate")));
            }
        }
        Ok(Self { dim, inputs })
    }

    pub fn n_u(&self) -> usize {
        self.inputs.len()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, index: usize) -> Option<&[T]> {
        self.inputs.get(index).map(Vec::as_slice)
    }

    pub fn iter(&self) -> impl Iterator<Item = &[T]> {
        self.inputs.iter().map(Vec::as_slice)
    }
}
