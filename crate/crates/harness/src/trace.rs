//! CSV serialization of per-iteration traces.
//!
//! Floats are written at 17 significant digits so parse -> re-serialize is
//! byte-identical and values round-trip exactly.

use crate::{HarnessError, Result};
use cwss_core::{ConditionReport64, ConvergenceRecord64};

pub const TRACE_HEADER: &str = "k,f,grad_norm,p_dev_frob,skipped,elapsed_ms";
pub const MONITOR_HEADER: &str =
    "k,f,grad_norm,p_dev_frob,skipped,elapsed_ms,t1_upper,t1_lower,t2_ok,gamma_est";

/// 17 significant digits: enough to reproduce any f64 exactly.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn fmt_bool(b: bool) -> &'static str {
    if b {
        "1"
    } else {
        "0"
    }
}

/// Serialize a trace; monitor reports (when given) must describe steps
/// `1..=K` and are aligned against the records by iteration index.
pub fn write_trace(
    records: &[ConvergenceRecord64],
    reports: Option<&[ConditionReport64]>,
) -> Result<String> {
    if let Some(reps) = reports {
        if reps.len() + 1 != records.len() && !(records.is_empty() && reps.is_empty()) {
            return Err(HarnessError::Runtime(format!(
                "{} monitor reports for {} records",
                reps.len(),
                records.len()
            )));
        }
    }
    let mut out = String::new();
    out.push_str(if reports.is_some() {
        MONITOR_HEADER
    } else {
        TRACE_HEADER
    });
    out.push('\n');
    for (i, r) in records.iter().enumerate() {
        out.push_str(&format!(
            "{},{},{},{},{},{}",
            r.k,
            fmt_f64(r.f),
            fmt_f64(r.grad_norm),
            fmt_f64(r.p_dev_frob),
            fmt_bool(r.skipped),
            fmt_f64(r.elapsed_ms),
        ));
        if let Some(reps) = reports {
            if i == 0 {
                // No step produced the starting point.
                out.push_str(",0,0,0,");
                out.push_str(&fmt_f64(0.0));
            } else {
                let c = &reps[i - 1];
                out.push_str(&format!(
                    ",{},{},{},{}",
                    fmt_bool(c.theorem1_upper_ok),
                    fmt_bool(c.theorem1_lower_ok),
                    fmt_bool(c.theorem2_ok),
                    fmt_f64(c.gamma_est),
                ));
            }
        }
        out.push('\n');
    }
    Ok(out)
}

fn parse_bool(s: &str, line: usize) -> Result<bool> {
    match s {
        "0" => Ok(false),
        "1" => Ok(true),
        other => Err(HarnessError::Validation(format!(
            "line {line}: bad boolean {other:?}"
        ))),
    }
}

fn parse_f64(s: &str, line: usize) -> Result<f64> {
    s.parse()
        .map_err(|_| HarnessError::Validation(format!("line {line}: bad float {s:?}")))
}

/// Parse a trace written by [`write_trace`].
pub fn parse_trace(
    text: &str,
) -> Result<(Vec<ConvergenceRecord64>, Option<Vec<ConditionReport64>>)> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| HarnessError::Validation("empty trace".into()))?;
    let monitored = match header {
        h if h == TRACE_HEADER => false,
        h if h == MONITOR_HEADER => true,
        other => {
            return Err(HarnessError::Validation(format!(
                "unrecognized trace header {other:?}"
            )))
        }
    };
    let mut records = Vec::new();
    let mut reports = Vec::new();
    for (idx, line) in lines {
        let cols: Vec<&str> = line.split(',').collect();
        let expected = if monitored { 10 } else { 6 };
        if cols.len() != expected {
            return Err(HarnessError::Validation(format!(
                "line {idx}: {} columns, expected {expected}",
                cols.len()
            )));
        }
        records.push(ConvergenceRecord64 {
            k: cols[0]
                .parse()
                .map_err(|_| HarnessError::Validation(format!("line {idx}: bad k {:?}", cols[0])))?,
            f: parse_f64(cols[1], idx)?,
            grad_norm: parse_f64(cols[2], idx)?,
            p_dev_frob: parse_f64(cols[3], idx)?,
            skipped: parse_bool(cols[4], idx)?,
            elapsed_ms: parse_f64(cols[5], idx)?,
        });
        if monitored && records.len() > 1 {
            reports.push(ConditionReport64 {
                theorem1_upper_ok: parse_bool(cols[6], idx)?,
                theorem1_lower_ok: parse_bool(cols[7], idx)?,
                theorem2_ok: parse_bool(cols[8], idx)?,
                p_dev_frob: records.last().unwrap().p_dev_frob,
                gamma_est: parse_f64(cols[9], idx)?,
            });
        }
    }
    Ok((records, monitored.then_some(reports)))
}

/// Training-log CSV: `update,mean_meta_loss,diverged_count`.
pub fn write_train_log(rows: &[(usize, f64, usize)]) -> String {
    let mut out = String::from("update,mean_meta_loss,diverged_count\n");
    for (update, loss, diverged) in rows {
        out.push_str(&format!("{update},{},{diverged}\n", fmt_f64(*loss)));
    }
    out
}

pub fn parse_train_log(text: &str) -> Result<Vec<(usize, f64, usize)>> {
    let mut lines = text.lines();
    match lines.next() {
        Some("update,mean_meta_loss,diverged_count") => {}
        other => {
            return Err(HarnessError::Validation(format!(
                "bad training log header {other:?}"
            )))
        }
    }
    let mut rows = Vec::new();
    for (idx, line) in lines.enumerate() {
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 3 {
            return Err(HarnessError::Validation(format!(
                "training log line {idx}: expected 3 columns"
            )));
        }
        rows.push((
            cols[0].parse().map_err(|_| {
                HarnessError::Validation(format!("training log line {idx}: bad update index"))
            })?,
            parse_f64(cols[1], idx)?,
            cols[2].parse().map_err(|_| {
                HarnessError::Validation(format!("training log line {idx}: bad diverged count"))
            })?,
        ));
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_records() -> Vec<ConvergenceRecord64> {
        vec![
            ConvergenceRecord64 {
                k: 0,
                f: 12.5,
                grad_norm: 3.1,
                p_dev_frob: 0.0,
                skipped: false,
                elapsed_ms: 0.0,
            },
            ConvergenceRecord64 {
                k: 1,
                f: 1.0 / 3.0,
                grad_norm: 1e-7,
                p_dev_frob: 0.25,
                skipped: true,
                elapsed_ms: 0.125,
            },
        ]
    }

    #[test]
    fn trace_round_trip_is_byte_identical() {
        let text = write_trace(&sample_records(), None).unwrap();
        let (records, reports) = parse_trace(&text).unwrap();
        assert!(reports.is_none());
        assert_eq!(records, sample_records());
        assert_eq!(write_trace(&records, None).unwrap(), text);
    }

    #[test]
    fn monitored_trace_round_trips() {
        let reps = vec![ConditionReport64 {
            theorem1_upper_ok: true,
            theorem1_lower_ok: false,
            theorem2_ok: true,
            p_dev_frob: 0.25,
            gamma_est: 0.7,
        }];
        let text = write_trace(&sample_records(), Some(&reps)).unwrap();
        let (records, reports) = parse_trace(&text).unwrap();
        let reports = reports.unwrap();
        assert_eq!(records, sample_records());
        assert_eq!(reports, reps);
        assert_eq!(write_trace(&records, Some(&reports)).unwrap(), text);
    }

    #[test]
    fn train_log_round_trips() {
        let rows = vec![(0usize, 3.25f64, 1usize), (1, 0.5, 0)];
        let text = write_train_log(&rows);
        assert_eq!(parse_train_log(&text).unwrap(), rows);
    }
}
