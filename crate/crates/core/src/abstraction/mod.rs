//! Sampling-based construction of a PAC symbolic abstraction.
//!
//! For every cell `q` and input `u`, `M` points are drawn uniformly from `q`,
//! pushed through the black-box system, and the successor set of `(q, u)`
//! becomes the set of cells hit by those successors. With `M` chosen by
//! [`required_sample_size`], each successor set misses at most a `mu`
//! fraction of the true image mass with confidence `1 - delta / (n_x n_u)`.

mod io;

use std::sync::atomic::{AtomicUsize, Ordering};

use rand::Rng;
use rayon::prelude::*;

pub use io::{load_abstraction, read_abstraction, save_abstraction, write_abstraction, ABSTRACTION_HEADER};

use crate::error::{Error, Result};
use crate::grid::{CellId, Grid, InputSet};
use crate::rng::{stream, Stream, StreamPurpose};
use crate::scalar::Scalar;
use crate::systems::BlackBoxSystem;

fn check_unit_interval(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("{name} must lie in (0, 1), got {v}")))
    }
}

/// Smallest `M` with `M >= (n_x ln 2 + ln(n_x n_u / delta)) / mu`.
pub fn required_sample_size(mu: f64, delta: f64, n_x: usize, n_u: usize) -> Result<u64> {
    check_unit_interval("mu", mu)?;
    check_unit_interval("delta", delta)?;
    if n_x == 0 || n_u == 0 {
        return Err(Error::InvalidParameter("n_x and n_u must be positive".into()));
    }
    let (nx, nu) = (n_x as f64, n_u as f64);
    let bound = (nx * std::f64::consts::LN_2 + nx.ln() + nu.ln() - delta.ln()) / mu;
    Ok(bound.ceil().max(1.0) as u64)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PacParams<T> {
    /// Precision in state units: the achieved precision of the grid.
    pub epsilon: T,
    pub mu: f64,
    pub delta: f64,
    pub sample_size: u64,
}

impl<T: Scalar> PacParams<T> {
    /// Validates the parameters against a grid and input set.
    pub fn new(grid: &Grid<T>, n_u: usize, mu: f64, delta: f64, sample_size: u64) -> Result<Self> {
        let required = required_sample_size(mu, delta, grid.n_x(), n_u)?;
        if sample_size < required {
            return Err(Error::InvalidParameter(format!(
                "sample size {sample_size} is below the required {required}"
            )));
        }
        Ok(Self {
            epsilon: grid.achieved_precision(),
            mu,
            delta,
            sample_size,
        })
    }
}

/// Sparse nondeterministic transition relation over `(cell, input)` pairs.
///
/// Pair `(q, u)` is stored at `q * n_u + u`; each successor list is sorted,
/// duplicate-free and nonempty.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TransitionRelation {
    n_x: usize,
    n_u: usize,
    successors: Vec<Vec<CellId>>,
}

impl TransitionRelation {
    pub fn new(n_x: usize, n_u: usize, successors: Vec<Vec<CellId>>) -> Result<Self> {
        if successors.len() != n_x * n_u {
            return Err(Error::Corrupt(format!(
                "expected {} successor lists, found {}",
                n_x * n_u,
                successors.len()
            )));
        }
        for (pair, list) in successors.iter().enumerate() {
            if list.is_empty() {
                return Err(Error::Corrupt(format!(
                    "empty successor list for cell {} input {}",
                    pair / n_u,
                    pair % n_u
                )));
            }
            if list.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::Corrupt(format!(
                    "successor list for cell {} input {} is not sorted and unique",
                    pair / n_u,
                    pair % n_u
                )));
            }
            if let Some(CellId::Cell(i)) = list.last() {
                if *i >= n_x {
                    return Err(Error::CellOutOfRange { index: *i, n_x });
                }
            }
        }
        Ok(Self { n_x, n_u, successors })
    }

    pub fn n_x(&self) -> usize {
        self.n_x
    }

    pub fn n_u(&self) -> usize {
        self.n_u
    }

    pub fn successors(&self, q: usize, u: usize) -> Result<&[CellId]> {
        if q >= self.n_x {
            return Err(Error::CellOutOfRange { index: q, n_x: self.n_x });
        }
        if u >= self.n_u {
            return Err(Error::InputOutOfRange { index: u, n_u: self.n_u });
        }
        let list = &self.successors[q * self.n_u + u];
        if list.is_empty() {
            return Err(Error::Corrupt(format!("missing successors for cell {q} input {u}")));
        }
        Ok(list)
    }

    /// Lists in `(q, u)` order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, &[CellId])> + '_ {
        let n_u = self.n_u;
        self.successors
            .iter()
            .enumerate()
            .map(move |(pair, list)| (pair / n_u, pair % n_u, list.as_slice()))
    }

    pub fn transition_count(&self) -> usize {
        self.successors.iter().map(Vec::len).sum()
    }

    /// Whether every list of `self` is contained in the matching list of `other`.
    pub fn is_subset_of(&self, other: &TransitionRelation) -> bool {
        self.n_x == other.n_x
            && self.n_u == other.n_u
            && self
                .successors
                .iter()
                .zip(&other.successors)
                .all(|(a, b)| a.iter().all(|s| b.binary_search(s).is_ok()))
    }
}

/// PAC symbolic abstraction: the grid, the inputs, the sampled relation and
/// everything needed to re-derive the samples that produced it.
#[derive(Clone, Debug, PartialEq)]
pub struct Abstraction<T> {
    pub grid: Grid<T>,
    pub inputs: InputSet<T>,
    pub params: PacParams<T>,
    pub seed: u64,
    pub transitions: TransitionRelation,
}

impl<T: Scalar> Abstraction<T> {
    pub fn from_parts(
        grid: Grid<T>,
        inputs: InputSet<T>,
        params: PacParams<T>,
        seed: u64,
        transitions: TransitionRelation,
    ) -> Result<Self> {
        if transitions.n_x() != grid.n_x() || transitions.n_u() != inputs.n_u() {
            return Err(Error::Corrupt(format!(
                "relation is {}x{} but grid and inputs are {}x{}",
                transitions.n_x(),
                transitions.n_u(),
                grid.n_x(),
                inputs.n_u()
            )));
        }
        let params = PacParams::new(&grid, inputs.n_u(), params.mu, params.delta, params.sample_size)?;
        Ok(Self {
            grid,
            inputs,
            params,
            seed,
            transitions,
        })
    }

    pub fn successors(&self, q: CellId, u: usize) -> Result<&[CellId]> {
        match q {
            CellId::OutOfDomain => Err(Error::OutOfDomain),
            CellId::Cell(i) => self.transitions.successors(i, u),
        }
    }

    /// SHA-256 of the canonical file body, as lowercase hex.
    pub fn checksum(&self) -> String {
        io::body_checksum(&io::render_body(self))
    }
}

/// Draws `count` points uniformly from cell `q`.
///
/// Each coordinate is `lower + t * width` with `t` uniform on `(0, 1]`; a
/// point that rounding pushes onto a neighbouring cell is redrawn, so every
/// returned point quantizes back to `q`.
pub fn sample_cell<T: Scalar>(grid: &Grid<T>, q: CellId, count: usize, rng: &mut Stream) -> Result<Vec<Vec<T>>> {
    let bounds = grid.cell_bounds(q)?;
    let widths = bounds.widths();
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let x: Vec<T> = bounds
            .lower()
            .iter()
            .zip(&widths)
            .map(|(&lo, &w)| {
                let t = 1.0 - rng.gen::<f64>();
                lo + T::from_f64_lossy(t) * w
            })
            .collect();
        if grid.quantize(&x)? == q {
            out.push(x);
        }
    }
    Ok(out)
}

/// Configures and runs an abstraction build.
pub struct AbstractionBuilder<'a> {
    mu: f64,
    delta: f64,
    seed: u64,
    sample_size: Option<u64>,
    progress: Option<&'a (dyn Fn(usize, usize) + Sync)>,
}

impl<'a> AbstractionBuilder<'a> {
    pub fn new(mu: f64, delta: f64, seed: u64) -> Self {
        Self {
            mu,
            delta,
            seed,
            sample_size: None,
            progress: None,
        }
    }

    /// Uses `m` samples per pair instead of the minimum; `m` may not be
    /// smaller than the required size.
    pub fn sample_size(mut self, m: u64) -> Self {
        self.sample_size = Some(m);
        self
    }

    /// Called with `(pairs done, pairs total)` as pairs complete.
    pub fn on_progress(mut self, f: &'a (dyn Fn(usize, usize) + Sync)) -> Self {
        self.progress = Some(f);
        self
    }

    pub fn build<T: Scalar, S: BlackBoxSystem<T> + ?Sized>(
        &self,
        system: &S,
        grid: &Grid<T>,
        inputs: &InputSet<T>,
    ) -> Result<Abstraction<T>> {
        if system.state_dim() != grid.dim() {
            return Err(Error::DimensionMismatch {
                expected: grid.dim(),
                got: system.state_dim(),
            });
        }
        if system.input_dim() != inputs.dim() {
            return Err(Error::DimensionMismatch {
                expected: inputs.dim(),
                got: system.input_dim(),
            });
        }
        let required = required_sample_size(self.mu, self.delta, grid.n_x(), inputs.n_u())?;
        let m = self.sample_size.unwrap_or(required);
        let params = PacParams::new(grid, inputs.n_u(), self.mu, self.delta, m)?;
        let n_u = inputs.n_u();
        let total = grid.n_x() * n_u;
        let done = AtomicUsize::new(0);

        let successors = (0..total)
            .into_par_iter()
            .map(|pair| {
                let (q, u) = (pair / n_u, pair % n_u);
                let list = sampled_successors(system, grid, inputs, self.seed, StreamPurpose::Build, q, u, m as usize)?;
                if let Some(report) = self.progress {
                    report(done.fetch_add(1, Ordering::Relaxed) + 1, total);
                }
                Ok(list)
            })
            .collect::<Result<Vec<_>>>()?;

        Ok(Abstraction {
            grid: grid.clone(),
            inputs: inputs.clone(),
            params,
            seed: self.seed,
            transitions: TransitionRelation::new(grid.n_x(), n_u, successors)?,
        })
    }
}

/// Builds the abstraction with the minimum sample size for `(mu, delta)`.
pub fn build_abstraction<T: Scalar, S: BlackBoxSystem<T> + ?Sized>(
    system: &S,
    grid: &Grid<T>,
    inputs: &InputSet<T>,
    mu: f64,
    delta: f64,
    seed: u64,
) -> Result<Abstraction<T>> {
    AbstractionBuilder::new(mu, delta, seed).build(system, grid, inputs)
}

/// Successor cells of the sampled points of one pair, sorted and deduplicated.
#[allow(clippy::too_many_arguments)]
fn sampled_successors<T: Scalar, S: BlackBoxSystem<T> + ?Sized>(
    system: &S,
    grid: &Grid<T>,
    inputs: &InputSet<T>,
    seed: u64,
    purpose: StreamPurpose,
    q: usize,
    u: usize,
    m: usize,
) -> Result<Vec<CellId>> {
    let input = inputs.get(u).ok_or(Error::InputOutOfRange { index: u, n_u: inputs.n_u() })?;
    let mut rng = stream(seed, purpose, q as u64, u as u64);
    let mut cells = Vec::new();
    for (i, x) in sample_cell(grid, CellId::Cell(q), m, &mut rng)?.iter().enumerate() {
        let next = evaluate(system, x, input).map_err(|source| Error::System {
            cell: q,
            input: u,
            sample: i,
            source,
        })?;
        cells.push(grid.quantize(&next)?);
    }
    cells.sort_unstable();
    cells.dedup();
    Ok(cells)
}

/// Runs the system and rejects non-finite successors.
pub(crate) fn evaluate<T: Scalar, S: BlackBoxSystem<T> + ?Sized>(
    system: &S,
    x: &[T],
    u: &[T],
) -> std::result::Result<Vec<T>, crate::systems::SystemError> {
    let next = system.step(x, u)?;
    if next.iter().any(|v| !v.is_finite()) {
        return Err(crate::systems::SystemError::NonFinite("successor"));
    }
    Ok(next)
}
