//! Black-box systems: the planar marine vessel and a 1D affine map whose
//! exact abstraction is available by interval arithmetic.

use thiserror::Error;

use crate::abstraction::TransitionRelation;
use crate::error::{Error as CrateError, Result};
use crate::grid::{CellId, Grid, InputSet};
use crate::scalar::Scalar;

#[derive(Clone, Debug, PartialEq, Error)]
pub enum SystemError {
    #[error("expected {expected}-dimensional {what}, got {got}")]
    Dimension {
        what: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("non-finite {0}")]
    NonFinite(&'static str),
}

/// Deterministic successor map `x' = step(x, u)` evaluated pointwise.
///
/// Implementations must be callable from many threads at once.
pub trait BlackBoxSystem<T: Scalar>: Sync {
    fn state_dim(&self) -> usize;
    fn input_dim(&self) -> usize;
    fn step(&self, x: &[T], u: &[T]) -> std::result::Result<Vec<T>, SystemError>;
}

fn check_dims(
    x: &[impl Copy],
    u: &[impl Copy],
    n: usize,
    p: usize,
) -> std::result::Result<(), SystemError> {
    if x.len() != n {
        return Err(SystemError::Dimension {
            what: "state",
            expected: n,
            got: x.len(),
        });
    }
    if u.len() != p {
        return Err(SystemError::Dimension {
            what: "input",
            expected: p,
            got: u.len(),
        });
    }
    Ok(())
}

/// One classical fourth-order Runge-Kutta step of size `h`.
pub fn rk4_step<T: Scalar, const N: usize>(
    f: impl Fn(&[T; N]) -> [T; N],
    x: &[T; N],
    h: T,
) -> [T; N] {
    let two = T::one() + T::one();
    let six = two + two + two;
    let offset = |k: &[T; N], s: T| {
        let mut y = *x;
        for i in 0..N {
            y[i] = y[i] + s * k[i];
        }
        y
    };
    let k1 = f(x);
    let k2 = f(&offset(&k1, h / two));
    let k3 = f(&offset(&k2, h / two));
    let k4 = f(&offset(&k3, h));
    let mut out = *x;
    for i in 0..N {
        out[i] = out[i] + h / six * (k1[i] + two * k2[i] + two * k3[i] + k4[i]);
    }
    out
}

/// Kinematic vessel model with surge, sway and yaw-rate inputs:
///
/// ```text
/// x1' = u1 cos x3 - u2 sin x3
/// x2' = u1 sin x3 + u2 cos x3
/// x3' = u3
/// ```
///
/// The sway row uses `u1 sin x3`, the standard planar kinematics. Disturbances
/// are zero. The heading is not wrapped.
pub fn vessel_field<T: Scalar>(x: &[T; 3], u: &[T; 3]) -> [T; 3] {
    let (s, c) = x[2].sin_cos();
    [u[0] * c - u[1] * s, u[0] * s + u[1] * c, u[2]]
}

/// Integrates the vessel over `tau` seconds with `substeps` RK4 steps.
pub fn vessel_step<T: Scalar>(
    x: &[T; 3],
    u: &[T; 3],
    tau: T,
    substeps: usize,
) -> std::result::Result<[T; 3], SystemError> {
    if x.iter().any(|v| !v.is_finite()) {
        return Err(SystemError::NonFinite("state"));
    }
    if u.iter().any(|v| !v.is_finite()) || !tau.is_finite() {
        return Err(SystemError::NonFinite("input"));
    }
    let substeps = substeps.max(1);
    let h = tau / T::from_count(substeps);
    let mut state = *x;
    for _ in 0..substeps {
        state = rk4_step(|y| vessel_field(y, u), &state, h);
    }
    Ok(state)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Vessel<T> {
    pub tau: T,
    pub substeps: usize,
}

impl<T: Scalar> Vessel<T> {
    pub const DEFAULT_SUBSTEPS: usize = 50;

    pub fn new(tau: T) -> Self {
        Self {
            tau,
            substeps: Self::DEFAULT_SUBSTEPS,
        }
    }
}

impl<T: Scalar> BlackBoxSystem<T> for Vessel<T> {
    fn state_dim(&self) -> usize {
        3
    }

    fn input_dim(&self) -> usize {
        3
    }

    fn step(&self, x: &[T], u: &[T]) -> std::result::Result<Vec<T>, SystemError> {
        check_dims(x, u, 3, 3)?;
        let next = vessel_step(&[x[0], x[1], x[2]], &[u[0], u[1], u[2]], self.tau, self.substeps)?;
        Ok(next.to_vec())
    }
}

pub fn affine1d_step<T: Scalar>(x: T, u: T, a: T, b: T) -> T {
    a * x + b * u
}

/// `x' = a x + b u` on the real line.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Affine1d<T> {
    pub a: T,
    pub b: T,
}

impl<T: Scalar> BlackBoxSystem<T> for Affine1d<T> {
    fn state_dim(&self) -> usize {
        1
    }

    fn input_dim(&self) -> usize {
        1
    }

    fn step(&self, x: &[T], u: &[T]) -> std::result::Result<Vec<T>, SystemError> {
        check_dims(x, u, 1, 1)?;
        let y = affine1d_step(x[0], u[0], self.a, self.b);
        if !y.is_finite() {
            return Err(SystemError::NonFinite("successor"));
        }
        Ok(vec![y])
    }
}

/// Image of a half-open affine image interval, with which end is closed.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ImageInterval<T> {
    pub lo: T,
    pub hi: T,
    pub lo_closed: bool,
    pub hi_closed: bool,
}

/// Exact image of cell `q = (l, h]` under `x -> a x + b u`. The lower face
/// that boundary cells additionally own has measure zero and is left out,
/// so the image is the open interval between the end images plus the image
/// of `h`.
pub fn affine1d_image<T: Scalar>(grid: &Grid<T>, q: usize, u: T, a: T, b: T) -> Result<ImageInterval<T>> {
    if grid.dim() != 1 {
        return Err(CrateError::DimensionMismatch {
            expected: 1,
            got: grid.dim(),
        });
    }
    if a == T::zero() {
        return Err(CrateError::InvalidParameter("affine coefficient a must be nonzero".into()));
    }
    let bounds = grid.cell_bounds(CellId::Cell(q))?;
    let (l, h) = (bounds.lower()[0], bounds.upper()[0]);
    let (fl, fh) = (affine1d_step(l, u, a, b), affine1d_step(h, u, a, b));
    Ok(if a > T::zero() {
        ImageInterval {
            lo: fl,
            hi: fh,
            lo_closed: false,
            hi_closed: true,
        }
    } else {
        ImageInterval {
            lo: fh,
            hi: fl,
            lo_closed: true,
            hi_closed: false,
        }
    })
}

fn intervals_meet<T: Scalar>(
    (a_lo, a_hi, a_lo_closed, a_hi_closed): (T, T, bool, bool),
    (b_lo, b_hi, b_lo_closed, b_hi_closed): (T, T, bool, bool),
) -> bool {
    let lo_ok = if a_lo_closed && b_hi_closed { a_lo <= b_hi } else { a_lo < b_hi };
    let hi_ok = if b_lo_closed && a_hi_closed { b_lo <= a_hi } else { b_lo < a_hi };
    lo_ok && hi_ok
}

/// Exact transition relation of the affine map, cell by cell: a successor
/// cell is any cell the image interval meets, and `OutOfDomain` is added
/// when part of the image leaves the domain.
pub fn exact_abstraction_affine1d<T: Scalar>(
    grid: &Grid<T>,
    inputs: &InputSet<T>,
    a: T,
    b: T,
) -> Result<TransitionRelation> {
    if inputs.dim() != 1 {
        return Err(CrateError::DimensionMismatch {
            expected: 1,
            got: inputs.dim(),
        });
    }
    let edges = grid.boundaries(0);
    let (d_lo, d_hi) = (grid.domain().lower()[0], grid.domain().upper()[0]);
    let mut lists = Vec::with_capacity(grid.n_x() * inputs.n_u());
    for q in 0..grid.n_x() {
        for u in inputs.iter() {
            let img = affine1d_image(grid, q, u[0], a, b)?;
            let span = (img.lo, img.hi, img.lo_closed, img.hi_closed);
            let mut succ: Vec<CellId> = (0..grid.n_x())
                .filter(|&j| intervals_meet(span, (edges[j], edges[j + 1], j == 0, true)))
                .map(CellId::Cell)
                .collect();
            if img.lo < d_lo || img.hi > d_hi {
                succ.insert(0, CellId::OutOfDomain);
            }
            lists.push(succ);
        }
    }
    TransitionRelation::new(grid.n_x(), inputs.n_u(), lists)
}
