//! Time-bounded reach-avoid games on a finite abstraction.
//!
//! The solver is the usual backward induction: `W_0` is the set of target
//! cells and `W_{k+1}` adds every safe cell having an input whose whole
//! successor set lies in `W_k` (and stays inside the domain). The resulting
//! policy only depends on the current cell and the number of steps left.

mod io;

pub use io::{load_controller, read_controller, save_controller, write_controller, ControllerFile, CONTROLLER_HEADER};

use crate::abstraction::{Abstraction, TransitionRelation};
use crate::error::{Error, Result};
use crate::grid::{CellId, Grid, Hyperrect};
use crate::scalar::Scalar;

/// Reach `target` within `horizon` steps without touching any obstacle.
#[derive(Clone, Debug, PartialEq)]
pub struct ReachAvoidSpec<T> {
    pub target: Hyperrect<T>,
    pub obstacles: Vec<Hyperrect<T>>,
    pub horizon: usize,
}

impl<T: Scalar> ReachAvoidSpec<T> {
    pub fn new(target: Hyperrect<T>, obstacles: Vec<Hyperrect<T>>, horizon: usize) -> Result<Self> {
        if horizon == 0 {
            return Err(Error::InvalidParameter("horizon must be at least one step".into()));
        }
        if let Some(o) = obstacles.iter().find(|o| o.dim() != target.dim()) {
            return Err(Error::DimensionMismatch {
                expected: target.dim(),
                got: o.dim(),
            });
        }
        Ok(Self {
            target,
            obstacles,
            horizon,
        })
    }

    pub fn dim(&self) -> usize {
        self.target.dim()
    }

    /// Checks the spec against a state domain.
    pub fn check_domain(&self, domain: &Hyperrect<T>) -> Result<()> {
        if self.dim() != domain.dim() {
            return Err(Error::DimensionMismatch {
                expected: domain.dim(),
                got: self.dim(),
            });
        }
        if !self.target.is_within(domain) {
            return Err(Error::InvalidParameter("target box is not inside the state domain".into()));
        }
        Ok(())
    }
}

/// Per-cell classification against a spec.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CellClasses {
    pub target: Vec<bool>,
    pub unsafe_: Vec<bool>,
}

impl CellClasses {
    pub fn target_cells(&self) -> Vec<usize> {
        (0..self.target.len()).filter(|&q| self.target[q]).collect()
    }

    pub fn unsafe_cells(&self) -> Vec<usize> {
        (0..self.unsafe_.len()).filter(|&q| self.unsafe_[q]).collect()
    }

    pub fn safe_count(&self) -> usize {
        self.unsafe_.iter().filter(|&&u| !u).count()
    }
}

/// Whether the half-open cell `q` meets the closed box `b`.
fn cell_meets_box<T: Scalar>(grid: &Grid<T>, q: usize, b: &Hyperrect<T>) -> bool {
    let cell = grid.cell_bounds(CellId::Cell(q)).expect("cell index in range");
    (0..grid.dim()).all(|d| {
        let (lo, hi) = (cell.lower()[d], cell.upper()[d]);
        let (b_lo, b_hi) = (b.lower()[d], b.upper()[d]);
        let closed_below = lo == grid.domain().lower()[d];
        let lower_ok = if closed_below { b_hi >= lo } else { b_hi > lo };
        lower_ok && b_lo <= hi
    })
}

/// Target cells are those contained in the target box; unsafe cells are
/// those meeting any obstacle. A cell that is both counts as unsafe.
pub fn classify_cells<T: Scalar>(grid: &Grid<T>, spec: &ReachAvoidSpec<T>) -> CellClasses {
    let n = grid.n_x();
    let unsafe_: Vec<bool> = (0..n)
        .map(|q| spec.obstacles.iter().any(|o| cell_meets_box(grid, q, o)))
        .collect();
    let target = (0..n)
        .map(|q| {
            !unsafe_[q]
                && grid
                    .cell_bounds(CellId::Cell(q))
                    .map(|c| c.is_within(&spec.target))
                    .unwrap_or(false)
        })
        .collect();
    CellClasses { target, unsafe_ }
}

/// Reach-avoid controller on the abstraction.
#[derive(Clone, Debug, PartialEq)]
pub struct DiscreteController<T> {
    pub spec: ReachAvoidSpec<T>,
    classes: CellClasses,
    // Steps needed from each winning cell; None outside the winning set.
    time_to_go: Vec<Option<usize>>,
    // Input chosen when the cell entered the winning set.
    action: Vec<Option<usize>>,
    /// Checksum of the abstraction the controller was solved on, if known.
    pub abstraction_checksum: Option<String>,
}

impl<T: Scalar> DiscreteController<T> {
    pub(crate) fn from_tables(
        spec: ReachAvoidSpec<T>,
        classes: CellClasses,
        time_to_go: Vec<Option<usize>>,
        action: Vec<Option<usize>>,
        abstraction_checksum: Option<String>,
    ) -> Result<Self> {
        let n = classes.target.len();
        if time_to_go.len() != n || action.len() != n || classes.unsafe_.len() != n {
            return Err(Error::Corrupt("controller tables have inconsistent sizes".into()));
        }
        for q in 0..n {
            let consistent = match (time_to_go[q], action[q]) {
                (Some(0), None) => classes.target[q],
                (Some(k), Some(_)) => k > 0 && k <= spec.horizon && !classes.target[q] && !classes.unsafe_[q],
                (None, None) => !classes.target[q],
                _ => false,
            };
            if !consistent {
                return Err(Error::Corrupt(format!("controller entry for cell {q} is inconsistent")));
            }
        }
        Ok(Self {
            spec,
            classes,
            time_to_go,
            action,
            abstraction_checksum,
        })
    }

    pub fn n_x(&self) -> usize {
        self.time_to_go.len()
    }

    pub fn horizon(&self) -> usize {
        self.spec.horizon
    }

    pub fn classes(&self) -> &CellClasses {
        &self.classes
    }

    pub fn is_winning(&self, q: usize) -> bool {
        self.time_to_go.get(q).is_some_and(Option::is_some)
    }

    /// Winning cells in increasing order.
    pub fn winning_set(&self) -> Vec<usize> {
        (0..self.n_x()).filter(|&q| self.is_winning(q)).collect()
    }

    pub fn time_to_go(&self, q: usize) -> Option<usize> {
        self.time_to_go.get(q).copied().flatten()
    }

    /// Input index for cell `q` with `steps_remaining` steps left.
    ///
    /// `None` for losing cells, target cells, out-of-domain states and when
    /// fewer steps remain than the cell needs.
    pub fn policy_lookup(&self, q: CellId, steps_remaining: usize) -> Option<usize> {
        let q = q.index()?;
        let ttg = self.time_to_go(q)?;
        if steps_remaining < ttg || steps_remaining > self.spec.horizon {
            return None;
        }
        self.action[q]
    }

    /// `(q, k, u)` triples of the policy, sorted by `(q, k)`.
    pub fn policy_entries(&self) -> impl Iterator<Item = (usize, usize, usize)> + '_ {
        (0..self.n_x()).flat_map(move |q| {
            let range = match (self.time_to_go[q], self.action[q]) {
                (Some(t), Some(u)) => (t..=self.spec.horizon).map(move |k| (q, k, u)).collect(),
                _ => Vec::new(),
            };
            range.into_iter()
        })
    }

    /// Fraction of safe cells that are winning.
    pub fn controllable_fraction(&self) -> f64 {
        let safe = self.classes.safe_count();
        if safe == 0 {
            return 0.0;
        }
        let won = (0..self.n_x())
            .filter(|&q| self.is_winning(q) && !self.classes.unsafe_[q])
            .count();
        won as f64 / safe as f64
    }
}

/// The winning sets `W_0 ⊆ W_1 ⊆ ...` produced by [`solve_relation`], for
/// inspection.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SolveTrace {
    pub layers: Vec<Vec<usize>>,
}

/// Solves the reach-avoid game on an explicit relation.
pub fn solve_relation<T: Scalar>(
    grid: &Grid<T>,
    relation: &TransitionRelation,
    spec: &ReachAvoidSpec<T>,
) -> Result<(DiscreteController<T>, SolveTrace)> {
    spec.check_domain(grid.domain())?;
    if relation.n_x() != grid.n_x() {
        return Err(Error::Corrupt(format!(
            "relation has {} cells, grid has {}",
            relation.n_x(),
            grid.n_x()
        )));
    }
    let n = grid.n_x();
    let classes = classify_cells(grid, spec);
    let mut time_to_go: Vec<Option<usize>> = classes.target.iter().map(|&t| t.then_some(0)).collect();
    let mut action = vec![None; n];
    let mut layers = vec![classes.target_cells()];

    for k in 1..=spec.horizon {
        let mut added = Vec::new();
        for q in 0..n {
            if time_to_go[q].is_some() || classes.unsafe_[q] {
                continue;
            }
            let choice = (0..relation.n_u()).find(|&u| {
                relation
                    .successors(q, u)
                    .map(|succ| {
                        succ.iter().all(|s| match s {
                            CellId::OutOfDomain => false,
                            CellId::Cell(j) => time_to_go[*j].is_some(),
                        })
                    })
                    .unwrap_or(false)
            });
            if let Some(u) = choice {
                added.push((q, u));
            }
        }
        if added.is_empty() {
            break;
        }
        for &(q, u) in &added {
            time_to_go[q] = Some(k);
            action[q] = Some(u);
        }
        let mut layer = layers.last().cloned().unwrap_or_default();
        layer.extend(added.iter().map(|&(q, _)| q));
        layer.sort_unstable();
        layers.push(layer);
    }

    let ctrl = DiscreteController::from_tables(spec.clone(), classes, time_to_go, action, None)?;
    Ok((ctrl, SolveTrace { layers }))
}

/// Solves the reach-avoid game on a sampled abstraction.
pub fn solve_reach_avoid<T: Scalar>(abs: &Abstraction<T>, spec: &ReachAvoidSpec<T>) -> Result<DiscreteController<T>> {
    let (mut ctrl, _) = solve_relation(&abs.grid, &abs.transitions, spec)?;
    ctrl.abstraction_checksum = Some(abs.checksum());
    Ok(ctrl)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(n: usize) -> Grid<f64> {
        Grid::new(Hyperrect::new(vec![0.0], vec![n as f64]).unwrap(), vec![n]).unwrap()
    }

    fn iv(lo: f64, hi: f64) -> Hyperrect<f64> {
        Hyperrect::new(vec![lo], vec![hi]).unwrap()
    }

    fn rel(n_x: usize, n_u: usize, lists: Vec<Vec<i64>>) -> TransitionRelation {
        let lists = lists
            .into_iter()
            .map(|l| {
                l.into_iter()
                    .map(|s| if s < 0 { CellId::OutOfDomain } else { CellId::Cell(s as usize) })
                    .collect()
            })
            .collect();
        TransitionRelation::new(n_x, n_u, lists).unwrap()
    }

    fn chain() -> (Grid<f64>, TransitionRelation, ReachAvoidSpec<f64>) {
        let spec = ReachAvoidSpec::new(iv(2.0, 3.0), vec![], 5).unwrap();
        (line(3), rel(3, 1, vec![vec![1], vec![2], vec![2]]), spec)
    }

    #[test]
    fn classify_aligned_target_and_touching_obstacle() {
        let g = Grid::new(iv(0.0, 10.0), vec![10]).unwrap();
        let spec = ReachAvoidSpec::new(iv(7.0, 10.0), vec![iv(2.0, 2.5)], 3).unwrap();
        let c = classify_cells(&g, &spec);
        assert_eq!(c.target_cells(), vec![7, 8, 9]);
        assert_eq!(c.unsafe_cells(), vec![1, 2]);

        let free = ReachAvoidSpec::new(iv(7.0, 10.0), vec![], 3).unwrap();
        assert!(classify_cells(&g, &free).unsafe_cells().is_empty());
    }

    #[test]
    fn obstacle_overlapping_target_wins_as_unsafe() {
        let g = Grid::new(iv(0.0, 10.0), vec![10]).unwrap();
        let spec = ReachAvoidSpec::new(iv(7.0, 10.0), vec![iv(8.5, 8.7)], 3).unwrap();
        let c = classify_cells(&g, &spec);
        assert_eq!(c.target_cells(), vec![7, 9]);
        assert_eq!(c.unsafe_cells(), vec![8]);
    }

    #[test]
    fn obstacle_at_lower_domain_face() {
        let g = Grid::new(iv(0.0, 10.0), vec![10]).unwrap();
        let spec = ReachAvoidSpec::new(iv(7.0, 10.0), vec![iv(-1.0, 0.0)], 3).unwrap();
        assert_eq!(classify_cells(&g, &spec).unsafe_cells(), vec![0]);
    }

    #[test]
    fn chain_is_fully_winning() {
        let (g, r, spec) = chain();
        let (ctrl, trace) = solve_relation(&g, &r, &spec).unwrap();
        assert_eq!(ctrl.winning_set(), vec![0, 1, 2]);
        assert_eq!((0..3).map(|q| ctrl.time_to_go(q)).collect::<Vec<_>>(), vec![Some(2), Some(1), Some(0)]);
        assert_eq!(ctrl.controllable_fraction(), 1.0);
        assert_eq!(trace.layers, vec![vec![2], vec![1, 2], vec![0, 1, 2]]);
    }

    #[test]
    fn chain_policy_lookup() {
        let (g, r, spec) = chain();
        let (ctrl, _) = solve_relation(&g, &r, &spec).unwrap();
        assert_eq!(ctrl.policy_lookup(CellId::Cell(0), 2), Some(0));
        assert_eq!(ctrl.policy_lookup(CellId::Cell(0), 1), None);
        assert_eq!(ctrl.policy_lookup(CellId::Cell(2), 3), None);
        assert_eq!(ctrl.policy_lookup(CellId::OutOfDomain, 3), None);
        let entries: Vec<_> = ctrl.policy_entries().collect();
        assert_eq!(entries.first(), Some(&(0, 2, 0)));
        assert_eq!(entries.len(), 4 + 5);
    }

    #[test]
    fn short_horizon_truncates_winning_set() {
        let (g, r, _) = chain();
        let spec = ReachAvoidSpec::new(iv(2.0, 3.0), vec![], 1).unwrap();
        let (ctrl, _) = solve_relation(&g, &r, &spec).unwrap();
        assert_eq!(ctrl.winning_set(), vec![1, 2]);
    }

    #[test]
    fn adversarial_nondeterminism() {
        // q0 -> {q1, q2} with q2 unsafe: the adversary picks q2.
        let g = line(4);
        let spec = ReachAvoidSpec::new(iv(3.0, 4.0), vec![iv(2.2, 2.8)], 4).unwrap();
        let r = rel(4, 1, vec![vec![1, 2], vec![3], vec![2], vec![3]]);
        let (ctrl, _) = solve_relation(&g, &r, &spec).unwrap();
        assert!(!ctrl.is_winning(0));
        assert!(ctrl.is_winning(1));
    }

    #[test]
    fn out_of_domain_successor_blocks_input() {
        let g = line(2);
        let spec = ReachAvoidSpec::new(iv(1.0, 2.0), vec![], 3).unwrap();
        let r = rel(2, 2, vec![vec![-1, 1], vec![1], vec![1], vec![1]]);
        let (ctrl, _) = solve_relation(&g, &r, &spec).unwrap();
        // Input 0 could leave the domain; input 1 is chosen.
        assert_eq!(ctrl.policy_lookup(CellId::Cell(0), 1), Some(1));
    }

    #[test]
    fn ties_pick_smallest_input() {
        let g = line(2);
        let spec = ReachAvoidSpec::new(iv(1.0, 2.0), vec![], 3).unwrap();
        let r = rel(2, 3, vec![vec![0], vec![1], vec![1], vec![1], vec![1], vec![1]]);
        let (ctrl, _) = solve_relation(&g, &r, &spec).unwrap();
        assert_eq!(ctrl.policy_lookup(CellId::Cell(0), 1), Some(1));
    }

    #[test]
    fn empty_winning_set_and_fractions() {
        let g = line(3);
        let spec = ReachAvoidSpec::new(iv(2.2, 2.8), vec![], 3).unwrap();
        let r = rel(3, 1, vec![vec![1], vec![2], vec![2]]);
        let (ctrl, _) = solve_relation(&g, &r, &spec).unwrap();
        assert!(ctrl.winning_set().is_empty());
        assert_eq!(ctrl.controllable_fraction(), 0.0);
    }

    #[test]
    fn rejects_target_outside_domain() {
        let (g, r, _) = chain();
        let spec = ReachAvoidSpec::new(iv(2.0, 4.0), vec![], 3).unwrap();
        assert!(solve_relation(&g, &r, &spec).is_err());
        assert!(ReachAvoidSpec::new(iv(0.0, 1.0), vec![], 0).is_err());
    }
}
