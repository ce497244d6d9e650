#![allow(dead_code)]

use std::f64::consts::PI;

use pac_abstraction::{Grid64, Hyperrect64, InputSet64, Spec64, Vessel};

pub const SEED: u64 = 42;
pub const MU: f64 = 0.1;
pub const DELTA: f64 = 1e-6;
pub const TAU: f64 = 5.0;
pub const HORIZON: usize = 24;

pub fn boxed(iv: &[(f64, f64)]) -> Hyperrect64 {
    Hyperrect64::from_intervals(iv).unwrap()
}

pub fn vessel_domain() -> Hyperrect64 {
    boxed(&[(0.0, 10.0), (0.0, 6.5), (-PI, PI)])
}

pub fn vessel_input_box() -> Hyperrect64 {
    boxed(&[(0.0, 0.18), (-0.05, 0.05), (-0.1, 0.1)])
}

pub fn desk_grid() -> Grid64 {
    Grid64::new(vessel_domain(), vec![8, 6, 8]).unwrap()
}

pub fn desk_inputs() -> InputSet64 {
    InputSet64::grid(vessel_input_box(), &[3, 3, 3]).unwrap()
}

pub fn vessel() -> Vessel<f64> {
    Vessel::new(TAU)
}

pub fn vessel_spec() -> Spec64 {
    let target = boxed(&[(7.0, 10.0), (0.0, 6.5), (PI / 3.0, 2.0 * PI / 3.0)]);
    let obstacles = vec![
        boxed(&[(2.0, 2.5), (0.0, 3.0), (-PI, PI)]),
        boxed(&[(5.0, 5.5), (3.5, 6.5), (-PI, PI)]),
    ];
    Spec64::new(target, obstacles, HORIZON).unwrap()
}
