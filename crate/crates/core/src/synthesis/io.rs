//! Canonical text encoding of a discrete controller.
//!
//! ```text
//! PACCTL 1
//! abstraction <checksum of the source abstraction, or ->
//! config <checksum of the run configuration, or ->
//! dim <n>
//! n_x <n_x>
//! target <lower_1> <upper_1> ... <lower_n> <upper_n>
//! obstacles <k>
//! <k lines of interleaved bounds>
//! horizon <N>
//! policy <q> <k> <u>      sorted by (q, k)
//! win <q> <time_to_go>    sorted by q
//! checksum <sha256 of every preceding byte>
//! ```

use std::fs;
use std::path::Path;

use super::{classify_cells, DiscreteController, ReachAvoidSpec};
use crate::error::{Error, Result};
use crate::grid::{Grid, Hyperrect};
use crate::scalar::Scalar;
use crate::textfmt::{push_line, sha256_hex, split_checksummed, Lines};

pub const CONTROLLER_HEADER: &str = "PACCTL 1";

/// A controller together with the configuration checksum it was produced under.
#[derive(Clone, Debug, PartialEq)]
pub struct ControllerFile<T> {
    pub controller: DiscreteController<T>,
    pub config_checksum: Option<String>,
}

fn interleave<T: Scalar>(b: &Hyperrect<T>) -> Vec<T> {
    b.lower().iter().zip(b.upper()).flat_map(|(l, u)| [*l, *u]).collect()
}

pub fn write_controller<T: Scalar>(ctrl: &DiscreteController<T>, config_checksum: Option<&str>) -> String {
    let mut out = String::new();
    out.push_str(CONTROLLER_HEADER);
    out.push('\n');
    push_line(&mut out, "abstraction", [ctrl.abstraction_checksum.as_deref().unwrap_or("-")]);
    push_line(&mut out, "config", [config_checksum.unwrap_or("-")]);
    push_line(&mut out, "dim", [ctrl.spec.dim()]);
    push_line(&mut out, "n_x", [ctrl.n_x()]);
    push_line(&mut out, "target", interleave(&ctrl.spec.target));
    push_line(&mut out, "obstacles", [ctrl.spec.obstacles.len()]);
    for o in &ctrl.spec.obstacles {
        let vals: Vec<String> = interleave(o).iter().map(T::to_string).collect();
        out.push_str(&vals.join(" "));
        out.push('\n');
    }
    push_line(&mut out, "horizon", [ctrl.spec.horizon]);
    for (q, k, u) in ctrl.policy_entries() {
        push_line(&mut out, "policy", [q, k, u]);
    }
    for q in ctrl.winning_set() {
        push_line(&mut out, "win", [q, ctrl.time_to_go(q).unwrap_or(0)]);
    }
    let sum = sha256_hex(out.as_bytes());
    out.push_str("checksum ");
    out.push_str(&sum);
    out.push('\n');
    out
}

pub fn save_controller<T: Scalar>(
    ctrl: &DiscreteController<T>,
    config_checksum: Option<&str>,
    path: impl AsRef<Path>,
) -> Result<()> {
    fs::write(path, write_controller(ctrl, config_checksum))?;
    Ok(())
}

pub fn load_controller<T: Scalar>(path: impl AsRef<Path>, grid: &Grid<T>) -> Result<ControllerFile<T>> {
    read_controller(&fs::read_to_string(path)?, grid)
}

fn parse_box<T: Scalar>(lines: &Lines<'_>, fields: &[&str], dim: usize) -> Result<Hyperrect<T>> {
    let vals: Vec<T> = lines.parse_all(fields, 2 * dim)?;
    let (lower, upper) = vals.chunks(2).map(|c| (c[0], c[1])).unzip();
    Hyperrect::new(lower, upper)
}

fn optional(field: &str) -> Option<String> {
    (field != "-").then(|| field.to_string())
}

/// Parses a controller file; `grid` is needed to recover the cell classes.
pub fn read_controller<T: Scalar>(text: &str, grid: &Grid<T>) -> Result<ControllerFile<T>> {
    let first = text.lines().next().unwrap_or("");
    if first != CONTROLLER_HEADER {
        return Err(Error::VersionMismatch {
            expected: CONTROLLER_HEADER.into(),
            found: first.into(),
        });
    }
    let body = split_checksummed(text)?;
    let mut lines = Lines::new(body);
    lines.next_raw("header")?;
    let f = lines.keyed("abstraction")?;
    let abstraction_checksum = optional(lines.parse_all::<String>(&f, 1)?[0].as_str());
    let f = lines.keyed("config")?;
    let config_checksum = optional(lines.parse_all::<String>(&f, 1)?[0].as_str());
    let f = lines.keyed("dim")?;
    let dim: usize = lines.parse_all(&f, 1)?[0];
    let f = lines.keyed("n_x")?;
    let n_x: usize = lines.parse_all(&f, 1)?[0];
    if dim != grid.dim() || n_x != grid.n_x() {
        return Err(lines.error(format!(
            "controller is for a {dim}-dimensional grid of {n_x} cells, not {} / {}",
            grid.dim(),
            grid.n_x()
        )));
    }
    let f = lines.keyed("target")?;
    let target = parse_box(&lines, &f, dim)?;
    let f = lines.keyed("obstacles")?;
    let k: usize = lines.parse_all(&f, 1)?[0];
    let mut obstacles = Vec::with_capacity(k);
    for _ in 0..k {
        let f = lines.fields("obstacle bounds")?;
        obstacles.push(parse_box(&lines, &f, dim)?);
    }
    let f = lines.keyed("horizon")?;
    let horizon: usize = lines.parse_all(&f, 1)?[0];
    let spec = ReachAvoidSpec::new(target, obstacles, horizon)?;

    let mut time_to_go = vec![None; n_x];
    let mut action: Vec<Option<usize>> = vec![None; n_x];
    let mut policy = Vec::new();
    let mut raw = lines.next_raw("policy or win line").ok();
    while let Some(line) = raw {
        let f: Vec<&str> = line.split_whitespace().collect();
        match f.first() {
            Some(&"policy") => {
                let v: Vec<usize> = lines.parse_all(&f[1..], 3)?;
                policy.push((v[0], v[1], v[2]));
            }
            Some(&"win") => {
                let v: Vec<usize> = lines.parse_all(&f[1..], 2)?;
                if v[0] >= n_x || time_to_go[v[0]].is_some() {
                    return Err(lines.error(format!("invalid win entry for cell {}", v[0])));
                }
                time_to_go[v[0]] = Some(v[1]);
            }
            _ => return Err(lines.error(format!("unexpected line {line:?}"))),
        }
        raw = lines.next_raw("policy or win line").ok();
    }
    for &(q, _, u) in &policy {
        if q >= n_x {
            return Err(Error::CellOutOfRange { index: q, n_x });
        }
        match action[q] {
            Some(prev) if prev != u => {
                return Err(Error::Corrupt(format!("cell {q} has conflicting policy inputs")));
            }
            _ => action[q] = Some(u),
        }
    }
    let classes = classify_cells(grid, &spec);
    let ctrl = DiscreteController::from_tables(spec, classes, time_to_go, action, abstraction_checksum)?;
    let expected: Vec<_> = ctrl.policy_entries().collect();
    if expected != policy {
        return Err(Error::Corrupt("policy lines do not match the winning set".into()));
    }
    Ok(ControllerFile {
        controller: ctrl,
        config_checksum,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::abstraction::TransitionRelation;
    use crate::grid::CellId;
    use crate::synthesis::solve_relation;

    fn setup() -> (Grid<f64>, DiscreteController<f64>) {
        let g = Grid::new(Hyperrect::new(vec![0.0], vec![4.0]).unwrap(), vec![4]).unwrap();
        let spec = ReachAvoidSpec::new(
            Hyperrect::new(vec![3.0], vec![4.0]).unwrap(),
            vec![Hyperrect::new(vec![0.2], vec![0.4]).unwrap()],
            4,
        )
        .unwrap();
        let lists = vec![vec![0], vec![2], vec![3], vec![3]]
            .into_iter()
            .map(|l: Vec<usize>| l.into_iter().map(CellId::Cell).collect())
            .collect();
        let r = TransitionRelation::new(4, 1, lists).unwrap();
        let (mut ctrl, _) = solve_relation(&g, &r, &spec).unwrap();
        ctrl.abstraction_checksum = Some("ab".repeat(32));
        (g, ctrl)
    }

    #[test]
    fn round_trip_and_layout() {
        let (g, ctrl) = setup();
        let text = write_controller(&ctrl, Some("cfg"));
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "PACCTL 1");
        assert_eq!(lines[2], "config cfg");
        assert_eq!(lines[5], "target 3 4");
        assert!(text.contains("\npolicy 1 2 0\npolicy 1 3 0\npolicy 1 4 0\npolicy 2 1 0\n"));
        assert!(text.contains("\nwin 1 2\nwin 2 1\nwin 3 0\n"));
        let back = read_controller(&text, &g).unwrap();
        assert_eq!(back.controller, ctrl);
        assert_eq!(back.config_checksum.as_deref(), Some("cfg"));
        assert_eq!(write_controller(&back.controller, Some("cfg")), text);
    }

    #[test]
    fn rejects_tampering_and_wrong_grid() {
        let (g, ctrl) = setup();
        let text = write_controller(&ctrl, None);
        let bad = text.replacen("win 1 2", "win 1 1", 1);
        assert!(matches!(read_controller(&bad, &g), Err(Error::ChecksumMismatch { .. })));
        let other = Grid::new(Hyperrect::new(vec![0.0], vec![4.0]).unwrap(), vec![8]).unwrap();
        assert!(read_controller(&text, &other).is_err());
        let wrong = text.replacen("PACCTL 1", "PACCTL 0", 1);
        assert!(matches!(read_controller(&wrong, &g), Err(Error::VersionMismatch { .. })));
    }
}
