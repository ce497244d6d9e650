//! CSV emission for traces and validation reports.
//!
//! Both writers optionally start with a `# config <hex>` comment line so the
//! file can be traced back to the run that produced it.

use std::fmt::Write as _;

use super::{TrialRecord, ValidationReport};
use crate::scalar::Scalar;

fn config_line(out: &mut String, config: Option<&str>) {
    if let Some(sum) = config {
        let _ = writeln!(out, "# config {sum}");
    }
}

/// Concatenated trace file with a leading `trial` column. The last state of
/// every trace has empty input fields.
pub fn write_trace_csv<T: Scalar>(trials: &[TrialRecord<T>], n: usize, p: usize, config: Option<&str>) -> String {
    let mut out = String::new();
    config_line(&mut out, config);
    out.push_str("trial,step");
    for i in 1..=n {
        let _ = write!(out, ",x{i}");
    }
    for i in 1..=p {
        let _ = write!(out, ",u{i}");
    }
    out.push_str(",outcome\n");
    for (t, rec) in trials.iter().enumerate() {
        let label = rec.trace.outcome.label();
        for (k, x) in rec.trace.states.iter().enumerate() {
            let _ = write!(out, "{t},{k}");
            for v in x {
                let _ = write!(out, ",{v}");
            }
            match rec.trace.inputs.get(k) {
                Some(u) => {
                    for v in u {
                        let _ = write!(out, ",{v}");
                    }
                }
                None => out.push_str(&",".repeat(p)),
            }
            let _ = writeln!(out, ",{label}");
        }
    }
    out
}

pub fn write_validation_csv(report: &ValidationReport, config: Option<&str>) -> String {
    let mut out = String::new();
    config_line(&mut out, config);
    out.push_str("q,u,accuracy\n");
    for (i, a) in report.per_pair_accuracy.iter().enumerate() {
        let _ = writeln!(out, "{},{},{a}", i / report.n_u, i % report.n_u);
    }
    let _ = writeln!(
        out,
        "# summary min={} mean={} fraction_below_1_minus_mu={} K={}",
        report.min_accuracy, report.mean_accuracy, report.fraction_below_1_minus_mu, report.hold_out_count
    );
    out
}
