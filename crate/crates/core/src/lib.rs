//! Symbolic abstractions of black-box systems with PAC guarantees.
//!
//! Successors of each `(cell, input)` pair are estimated from uniform
//! samples, a reach-avoid controller is synthesized on the resulting finite
//! abstraction, and the controller is refined back onto the concrete system
//! through the quantizer.

pub mod abstraction;
pub mod error;
pub mod grid;
pub mod refinement;
pub mod rng;
pub mod scalar;
pub mod synthesis;
pub mod systems;
pub mod textfmt;

pub use abstraction::{
    build_abstraction, load_abstraction, read_abstraction, required_sample_size, sample_cell, save_abstraction,
    write_abstraction, Abstraction, AbstractionBuilder, PacParams, TransitionRelation,
};
pub use error::{Error, Result};
pub use grid::{CellId, Grid, Hyperrect, InputSet};
pub use refinement::{
    behaviour_floor, check_behaviour, distance_to_safe_set, estimate_success_rate, refine, run_trials,
    simulate_closed_loop, validate_accuracy, validate_accuracy_with, write_trace_csv, write_validation_csv,
    ConcreteController, FeedbackPolicy, Outcome, Trace, TrialRecord, TrialSetup, ValidationReport, ViolationReason,
};
pub use rng::StreamPurpose;
pub use scalar::Scalar;
pub use synthesis::{
    classify_cells, load_controller, read_controller, save_controller, solve_reach_avoid, solve_relation,
    write_controller, CellClasses, ControllerFile, DiscreteController, ReachAvoidSpec,
};
pub use systems::{exact_abstraction_affine1d, Affine1d, BlackBoxSystem, SystemError, Vessel};

pub type Hyperrect64 = Hyperrect<f64>;
pub type Grid64 = Grid<f64>;
pub type InputSet64 = InputSet<f64>;
pub type Abstraction64 = Abstraction<f64>;
pub type Controller64 = DiscreteController<f64>;
pub type Spec64 = ReachAvoidSpec<f64>;

pub type Grid32 = Grid<f32>;
pub type Abstraction32 = Abstraction<f32>;
