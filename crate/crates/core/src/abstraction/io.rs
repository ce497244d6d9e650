//! Canonical text encoding of an abstraction.
//!
//! ```text
//! PACABS 1
//! dim <n>
//! domain <lower_1> <upper_1> ... <lower_n> <upper_n>
//! counts <c_1> ... <c_n>
//! inputs <n_u> <p>
//! <n_u lines of p reals>
//! params <mu> <delta> <M> <seed>
//! trans <n_x * n_u>
//! <q> <u> <k> <s_1> ... <s_k>      one line per pair, sorted by (q, u)
//! checksum <sha256 of every preceding byte>
//! ```
//!
//! Reals use the shortest decimal that round-trips; `OutOfDomain` is `-1`.

use std::fs;
use std::path::Path;

use super::{Abstraction, PacParams, TransitionRelation};
use crate::error::{Error, Result};
use crate::grid::{CellId, Grid, Hyperrect, InputSet};
use crate::scalar::Scalar;
use crate::textfmt::{push_line, push_values, sha256_hex, split_checksummed, Lines};

pub const ABSTRACTION_HEADER: &str = "PACABS 1";

pub(super) fn render_body<T: Scalar>(abs: &Abstraction<T>) -> String {
    let grid = &abs.grid;
    let mut out = String::new();
    out.push_str(ABSTRACTION_HEADER);
    out.push('\n');
    push_line(&mut out, "dim", [grid.dim()]);
    let dom = grid.domain();
    push_line(
        &mut out,
        "domain",
        dom.lower().iter().zip(dom.upper()).flat_map(|(l, u)| [*l, *u]),
    );
    push_line(&mut out, "counts", grid.counts());
    push_line(&mut out, "inputs", [abs.inputs.n_u(), abs.inputs.dim()]);
    for u in abs.inputs.iter() {
        push_values(&mut out, u);
    }
    out.push_str(&format!(
        "params {} {} {} {}\n",
        abs.params.mu, abs.params.delta, abs.params.sample_size, abs.seed
    ));
    push_line(&mut out, "trans", [grid.n_x() * abs.inputs.n_u()]);
    for (q, u, succ) in abs.transitions.iter() {
        out.push_str(&format!("{q} {u} {}", succ.len()));
        for s in succ {
            out.push_str(&format!(" {}", s.encode()));
        }
        out.push('\n');
    }
    out
}

pub(super) fn body_checksum(body: &str) -> String {
    sha256_hex(body.as_bytes())
}

/// Full canonical file contents.
pub fn write_abstraction<T: Scalar>(abs: &Abstraction<T>) -> String {
    let mut body = render_body(abs);
    let sum = body_checksum(&body);
    body.push_str("checksum ");
    body.push_str(&sum);
    body.push('\n');
    body
}

pub fn save_abstraction<T: Scalar>(abs: &Abstraction<T>, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, write_abstraction(abs))?;
    Ok(())
}

pub fn load_abstraction<T: Scalar>(path: impl AsRef<Path>) -> Result<Abstraction<T>> {
    read_abstraction(&fs::read_to_string(path)?)
}

pub fn read_abstraction<T: Scalar>(text: &str) -> Result<Abstraction<T>> {
    let first = text.lines().next().unwrap_or("");
    if first != ABSTRACTION_HEADER {
        return Err(Error::VersionMismatch {
            expected: ABSTRACTION_HEADER.into(),
            found: first.into(),
        });
    }
    let body = split_checksummed(text)?;
    let mut lines = Lines::new(body);
    lines.next_raw("header")?;

    let f = lines.keyed("dim")?;
    let dim: usize = lines.parse_all(&f, 1)?[0];
    if dim == 0 {
        return Err(lines.error("dimension must be positive"));
    }
    let f = lines.keyed("domain")?;
    let bounds: Vec<T> = lines.parse_all(&f, 2 * dim)?;
    let (lower, upper) = bounds.chunks(2).map(|c| (c[0], c[1])).unzip();
    let domain = Hyperrect::new(lower, upper)?;
    let f = lines.keyed("counts")?;
    let counts: Vec<usize> = lines.parse_all(&f, dim)?;
    let grid = Grid::new(domain, counts)?;

    let f = lines.keyed("inputs")?;
    let shape: Vec<usize> = lines.parse_all(&f, 2)?;
    let (n_u, p) = (shape[0], shape[1]);
    let mut inputs = Vec::with_capacity(n_u);
    for _ in 0..n_u {
        let f = lines.fields("input values")?;
        inputs.push(lines.parse_all::<T>(&f, p)?);
    }
    let inputs = InputSet::new(inputs)?;

    let f = lines.keyed("params")?;
    if f.len() != 4 {
        return Err(lines.error("params needs mu, delta, M and seed"));
    }
    let mu: f64 = lines.parse(f[0])?;
    let delta: f64 = lines.parse(f[1])?;
    let sample_size: u64 = lines.parse(f[2])?;
    let seed: u64 = lines.parse(f[3])?;

    let f = lines.keyed("trans")?;
    let pairs: usize = lines.parse_all(&f, 1)?[0];
    if pairs != grid.n_x() * n_u {
        return Err(lines.error(format!("expected {} pairs, header says {pairs}", grid.n_x() * n_u)));
    }
    let mut successors = Vec::with_capacity(pairs);
    for pair in 0..pairs {
        let f = lines.fields("transition line")?;
        if f.len() < 3 {
            return Err(lines.error("transition line too short"));
        }
        let (q, u, k): (usize, usize, usize) = (lines.parse(f[0])?, lines.parse(f[1])?, lines.parse(f[2])?);
        if (q, u) != (pair / n_u, pair % n_u) {
            return Err(lines.error(format!("pair ({q}, {u}) out of order")));
        }
        let raw: Vec<i64> = lines.parse_all(&f[3..], k)?;
        let list = raw
            .into_iter()
            .map(|s| match s {
                -1 => Ok(CellId::OutOfDomain),
                s if s >= 0 => Ok(CellId::Cell(s as usize)),
                s => Err(lines.error(format!("invalid cell {s}"))),
            })
            .collect::<Result<Vec<_>>>()?;
        successors.push(list);
    }
    lines.finish()?;

    let transitions = TransitionRelation::new(grid.n_x(), n_u, successors)?;
    let params = PacParams {
        epsilon: grid.achieved_precision(),
        mu,
        delta,
        sample_size,
    };
    Abstraction::from_parts(grid, inputs, params, seed, transitions)
}
