//! Concrete controllers, closed-loop simulation and statistical validation.
//!
//! A discrete controller is refined by quantizing the concrete state and
//! looking up the abstract policy. Validation estimates, per `(cell, input)`
//! pair, the probability that a fresh uniform sample's successor lands in
//! one of the stored successor cells, and measures how often closed-loop
//! traces satisfy the reach-avoid spec inflated by the grid precision.

mod csv;

pub use csv::{write_trace_csv, write_validation_csv};

use rand::Rng;
use rayon::prelude::*;

use crate::abstraction::{evaluate, sample_cell, Abstraction};
use crate::error::{Error, Result};
use crate::grid::{CellId, Grid, Hyperrect, InputSet};
use crate::rng::{stream, StreamPurpose};
use crate::scalar::{euclidean, Scalar};
use crate::synthesis::{DiscreteController, ReachAvoidSpec};
use crate::systems::BlackBoxSystem;

/// State feedback with access to the number of steps left.
pub trait FeedbackPolicy<T>: Sync {
    fn input(&self, x: &[T], steps_remaining: usize) -> Option<Vec<T>>;
}

impl<T, F> FeedbackPolicy<T> for F
where
    F: Fn(&[T], usize) -> Option<Vec<T>> + Sync,
{
    fn input(&self, x: &[T], steps_remaining: usize) -> Option<Vec<T>> {
        self(x, steps_remaining)
    }
}

/// Discrete controller composed with the quantizer.
#[derive(Clone, Copy, Debug)]
pub struct ConcreteController<'a, T> {
    ctrl: &'a DiscreteController<T>,
    grid: &'a Grid<T>,
    inputs: &'a InputSet<T>,
}

impl<'a, T: Scalar> ConcreteController<'a, T> {
    pub fn control(&self, x: &[T], steps_remaining: usize) -> Option<&'a [T]> {
        let q = self.grid.quantize(x).ok()?;
        let u = self.ctrl.policy_lookup(q, steps_remaining)?;
        self.inputs.get(u)
    }

    /// Whether `x` lies in a winning cell.
    pub fn admits(&self, x: &[T]) -> bool {
        matches!(self.grid.quantize(x), Ok(CellId::Cell(q)) if self.ctrl.is_winning(q))
    }

    pub fn discrete(&self) -> &'a DiscreteController<T> {
        self.ctrl
    }
}

impl<T: Scalar> FeedbackPolicy<T> for ConcreteController<'_, T> {
    fn input(&self, x: &[T], steps_remaining: usize) -> Option<Vec<T>> {
        self.control(x, steps_remaining).map(<[T]>::to_vec)
    }
}

pub fn refine<'a, T: Scalar>(
    ctrl: &'a DiscreteController<T>,
    grid: &'a Grid<T>,
    inputs: &'a InputSet<T>,
) -> Result<ConcreteController<'a, T>> {
    if ctrl.n_x() != grid.n_x() || ctrl.spec.dim() != grid.dim() {
        return Err(Error::Corrupt("controller was not solved on this grid".into()));
    }
    Ok(ConcreteController { ctrl, grid, inputs })
}

#[derive(Clone, Debug, PartialEq)]
pub enum ViolationReason {
    Obstacle(usize),
    LeftDomain,
    NoControl,
    NonFinite(String),
}

#[derive(Clone, Debug, PartialEq)]
pub enum Outcome {
    ReachedTarget(usize),
    Violated(usize, ViolationReason),
    HorizonExpired,
}

impl Outcome {
    pub fn reached(&self) -> bool {
        matches!(self, Outcome::ReachedTarget(_))
    }

    /// Short label used in CSV output.
    pub fn label(&self) -> String {
        match self {
            Outcome::ReachedTarget(k) => format!("reached@{k}"),
            Outcome::Violated(k, ViolationReason::Obstacle(i)) => format!("obstacle{i}@{k}"),
            Outcome::Violated(k, ViolationReason::LeftDomain) => format!("left_domain@{k}"),
            Outcome::Violated(k, ViolationReason::NoControl) => format!("no_control@{k}"),
            Outcome::Violated(k, ViolationReason::NonFinite(_)) => format!("non_finite@{k}"),
            Outcome::HorizonExpired => "horizon_expired".into(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Trace<T> {
    pub states: Vec<Vec<T>>,
    pub inputs: Vec<Vec<T>>,
    pub outcome: Outcome,
}

/// Runs the closed loop for at most `spec.horizon` steps.
pub fn simulate_closed_loop<T, S, P>(
    system: &S,
    controller: &P,
    x0: &[T],
    spec: &ReachAvoidSpec<T>,
    domain: &Hyperrect<T>,
) -> Trace<T>
where
    T: Scalar,
    S: BlackBoxSystem<T> + ?Sized,
    P: FeedbackPolicy<T> + ?Sized,
{
    let mut states = vec![x0.to_vec()];
    let mut inputs = Vec::new();
    let outcome = loop {
        let step = inputs.len();
        let x = &states[step];
        if !domain.contains(x) {
            break Outcome::Violated(step, ViolationReason::LeftDomain);
        }
        if let Some(i) = spec.obstacles.iter().position(|o| o.contains(x)) {
            break Outcome::Violated(step, ViolationReason::Obstacle(i));
        }
        if spec.target.contains(x) {
            break Outcome::ReachedTarget(step);
        }
        if step == spec.horizon {
            break Outcome::HorizonExpired;
        }
        let Some(u) = controller.input(x, spec.horizon - step) else {
            break Outcome::Violated(step, ViolationReason::NoControl);
        };
        match evaluate(system, x, &u) {
            Ok(next) => {
                inputs.push(u);
                states.push(next);
            }
            Err(e) => break Outcome::Violated(step, ViolationReason::NonFinite(e.to_string())),
        }
    };
    Trace {
        states,
        inputs,
        outcome,
    }
}

/// Distance from `x` to the safe set `domain \ obstacles`.
///
/// Exact when the obstacles containing the projected point do not overlap
/// each other; otherwise an upper bound.
pub fn distance_to_safe_set<T: Scalar>(x: &[T], domain: &Hyperrect<T>, obstacles: &[Hyperrect<T>]) -> T {
    let p = domain.project(x);
    let inside: Vec<&Hyperrect<T>> = obstacles.iter().filter(|o| o.contains(&p)).collect();
    if inside.is_empty() {
        return euclidean(x, &p);
    }
    let in_interior = |y: &[T], o: &Hyperrect<T>| {
        y.iter()
            .zip(o.lower().iter().zip(o.upper()))
            .all(|(&v, (&l, &u))| v > l && v < u)
    };
    let mut best = T::infinity();
    for o in &inside {
        for d in 0..p.len() {
            // Safe points exist just beyond a face only if that face is
            // strictly inside the domain.
            let exits = [
                (o.lower()[d], o.lower()[d] > domain.lower()[d]),
                (o.upper()[d], o.upper()[d] < domain.upper()[d]),
            ];
            for (face, open) in exits {
                if !open {
                    continue;
                }
                let mut y = p.clone();
                y[d] = face;
                if obstacles.iter().all(|other| std::ptr::eq(other, *o) || !in_interior(&y, other)) {
                    best = best.min(euclidean(x, &y));
                }
            }
        }
    }
    best
}

/// Membership of a trace in the `epsilon`-inflated reach-avoid behaviours:
/// every state within `epsilon` of the safe set, and some state within
/// `epsilon` of the target.
pub fn check_behaviour<T: Scalar>(trace: &Trace<T>, spec: &ReachAvoidSpec<T>, domain: &Hyperrect<T>, epsilon: T) -> bool {
    let states = &trace.states[..trace.states.len().min(spec.horizon + 1)];
    let safe = states
        .iter()
        .all(|x| distance_to_safe_set(x, domain, &spec.obstacles) <= epsilon);
    safe && states.iter().any(|x| spec.target.distance(x) <= epsilon)
}

#[derive(Clone, Debug, PartialEq)]
pub struct ValidationReport {
    /// Accuracy of pair `(q, u)` at index `q * n_u + u`.
    pub per_pair_accuracy: Vec<f64>,
    pub n_u: usize,
    pub min_accuracy: f64,
    pub mean_accuracy: f64,
    /// Share of pairs whose accuracy is below `1 - mu`.
    pub fraction_below_1_minus_mu: f64,
    pub hold_out_count: usize,
}

impl ValidationReport {
    pub fn accuracy(&self, q: usize, u: usize) -> f64 {
        self.per_pair_accuracy[q * self.n_u + u]
    }
}

/// Hold-out accuracy with fresh validation streams.
pub fn validate_accuracy<T: Scalar, S: BlackBoxSystem<T> + ?Sized>(
    system: &S,
    abs: &Abstraction<T>,
    k: usize,
    seed: u64,
) -> Result<ValidationReport> {
    validate_accuracy_with(system, abs, k, seed, StreamPurpose::Validation)
}

/// Accuracy estimate drawing from an explicit stream family. With
/// `StreamPurpose::Build`, the abstraction's seed and `k = M` this replays
/// the build samples exactly.
pub fn validate_accuracy_with<T: Scalar, S: BlackBoxSystem<T> + ?Sized>(
    system: &S,
    abs: &Abstraction<T>,
    k: usize,
    seed: u64,
    purpose: StreamPurpose,
) -> Result<ValidationReport> {
    if k == 0 {
        return Err(Error::InvalidParameter("hold-out count must be positive".into()));
    }
    let grid = &abs.grid;
    let n_u = abs.inputs.n_u();
    let per_pair = (0..grid.n_x() * n_u)
        .into_par_iter()
        .map(|pair| {
            let (q, u) = (pair / n_u, pair % n_u);
            let input = abs.inputs.get(u).expect("input index in range");
            let stored = abs.transitions.successors(q, u)?;
            let mut rng = stream(seed, purpose, q as u64, u as u64);
            let mut hits = 0usize;
            for x in sample_cell(grid, CellId::Cell(q), k, &mut rng)? {
                if let Ok(next) = evaluate(system, &x, input) {
                    if stored.binary_search(&grid.quantize(&next)?).is_ok() {
                        hits += 1;
                    }
                }
            }
            Ok(hits as f64 / k as f64)
        })
        .collect::<Result<Vec<f64>>>()?;
    let min_accuracy = per_pair.iter().copied().fold(f64::INFINITY, f64::min);
    let mean_accuracy = per_pair.iter().sum::<f64>() / per_pair.len() as f64;
    let floor = 1.0 - abs.params.mu;
    let below = per_pair.iter().filter(|&&a| a < floor).count();
    Ok(ValidationReport {
        fraction_below_1_minus_mu: below as f64 / per_pair.len() as f64,
        per_pair_accuracy: per_pair,
        n_u,
        min_accuracy,
        mean_accuracy,
        hold_out_count: k,
    })
}

/// Lower bound `(1 - mu)^m` on the behaviour probability after `m` steps.
pub fn behaviour_floor(mu: f64, steps: usize) -> f64 {
    (1.0 - mu).powi(steps as i32)
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrialRecord<T> {
    pub initial_cell: usize,
    pub trace: Trace<T>,
    pub satisfied: bool,
}

/// Problem shared by every closed-loop trial.
#[derive(Clone, Copy)]
pub struct TrialSetup<'a, T, S: ?Sized> {
    pub system: &'a S,
    pub ctrl: &'a DiscreteController<T>,
    pub grid: &'a Grid<T>,
    pub inputs: &'a InputSet<T>,
    pub spec: &'a ReachAvoidSpec<T>,
    pub epsilon: T,
}

/// Runs `n_trials` closed loops from initial states drawn uniformly over
/// the union of winning cells. Trial `i` uses its own stream, so results do
/// not depend on scheduling.
pub fn run_trials<T: Scalar, S: BlackBoxSystem<T> + ?Sized>(
    setup: &TrialSetup<'_, T, S>,
    n_trials: usize,
    seed: u64,
) -> Result<Vec<TrialRecord<T>>> {
    let winning = setup.ctrl.winning_set();
    if winning.is_empty() {
        return Err(Error::EmptyWinningSet);
    }
    let concrete = refine(setup.ctrl, setup.grid, setup.inputs)?;
    let domain = setup.grid.domain();
    (0..n_trials)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream(seed, StreamPurpose::Trial, i as u64, 0);
            let q = winning[rng.gen_range(0..winning.len())];
            let x0 = sample_cell(setup.grid, CellId::Cell(q), 1, &mut rng)?.remove(0);
            let trace = simulate_closed_loop(setup.system, &concrete, &x0, setup.spec, domain);
            let satisfied = check_behaviour(&trace, setup.spec, domain, setup.epsilon);
            Ok(TrialRecord {
                initial_cell: q,
                trace,
                satisfied,
            })
        })
        .collect()
}

/// Fraction of sampled closed-loop traces inside the inflated spec.
#[allow(clippy::too_many_arguments)]
pub fn estimate_success_rate<T: Scalar, S: BlackBoxSystem<T> + ?Sized>(
    system: &S,
    ctrl: &DiscreteController<T>,
    grid: &Grid<T>,
    inputs: &InputSet<T>,
    spec: &ReachAvoidSpec<T>,
    epsilon: T,
    n_trials: usize,
    seed: u64,
) -> Result<f64> {
    if n_trials == 0 {
        return Err(Error::InvalidParameter("trial count must be positive".into()));
    }
    let setup = TrialSetup {
        system,
        ctrl,
        grid,
        inputs,
        spec,
        epsilon,
    };
    let trials = run_trials(&setup, n_trials, seed)?;
    Ok(trials.iter().filter(|t| t.satisfied).count() as f64 / n_trials as f64)
}
