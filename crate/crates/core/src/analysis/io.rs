//! CSV tables: distributions, comparisons, snapshots and histograms.
//!
//! Reals are written with nine significant digits in shortest positional or
//! scientific form.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use crate::sim::{DegreeHistogram, ReplicaRun};

use super::compare::DegreeComparison;
use super::AnalysisError;

pub const CSV_SIGNIFICANT_DIGITS: usize = 9;

/// `x` rounded to `digits` significant digits, without trailing zeros.
pub fn format_sig(x: f64, digits: usize) -> String {
    if x == 0.0 || !x.is_finite() {
        return if x == 0.0 { "0".into() } else { x.to_string() };
    }
    let sci = format!("{:.*e}", digits - 1, x);
    let (mantissa, exponent) = sci.split_once('e').expect("scientific notation");
    let exponent: i32 = exponent.parse().expect("integer exponent");
    if (-5..digits as i32).contains(&exponent) {
        let decimals = (digits as i32 - 1 - exponent).max(0) as usize;
        trim_zeros(format!("{x:.decimals$}"))
    } else {
        format!("{}e{exponent}", trim_zeros(mantissa.to_string()))
    }
}

fn trim_zeros(s: String) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

fn sig(x: f64) -> String {
    format_sig(x, CSV_SIGNIFICANT_DIGITS)
}

/// Columns `k,p`.
pub fn write_pmf_csv<W: Write>(out: W, pmf: &[f64]) -> Result<(), AnalysisError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["k", "p"])?;
    for (k, &p) in pmf.iter().enumerate() {
        w.write_record([k.to_string(), sig(p)])?;
    }
    w.flush()?;
    Ok(())
}

/// Columns `k,p_analytic,p_empirical,abs_err`.
pub fn write_comparison_csv<W: Write>(out: W, rows: &[DegreeComparison]) -> Result<(), AnalysisError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["k", "p_analytic", "p_empirical", "abs_err"])?;
    for r in rows {
        w.write_record([r.k.to_string(), sig(r.p_analytic), sig(r.p_empirical), sig(r.abs_err)])?;
    }
    w.flush()?;
    Ok(())
}

/// Columns `t,k,count,replica`, one row per nonzero count. Overflow rows
/// carry an empty `k`.
pub fn write_snapshot_csv<W: Write>(out: W, runs: &[ReplicaRun]) -> Result<(), AnalysisError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["t", "k", "count", "replica"])?;
    for run in runs {
        for s in &run.snapshots {
            let (t, replica) = (s.t.to_string(), s.replica.to_string());
            for (k, &c) in s.histogram.counts().iter().enumerate().filter(|(_, &c)| c > 0) {
                w.write_record([t.as_str(), &k.to_string(), &c.to_string(), replica.as_str()])?;
            }
            if s.histogram.overflow() > 0 {
                w.write_record([t.as_str(), "", &s.histogram.overflow().to_string(), replica.as_str()])?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

/// Reads a histogram with columns `k` and `count`. With a `t` column only the
/// latest time is kept; every other column, such as `replica`, is pooled.
pub fn read_histogram_csv<R: Read>(input: R) -> Result<DegreeHistogram, AnalysisError> {
    let mut reader = csv::Reader::from_reader(input);
    let headers = reader.headers()?.clone();
    let column = |name: &str| headers.iter().position(|h| h.trim() == name);
    let k_col = column("k").ok_or_else(|| AnalysisError::MalformedTable("missing column k".into()))?;
    let c_col = column("count").ok_or_else(|| AnalysisError::MalformedTable("missing column count".into()))?;
    let t_col = column("t");
    let mut by_time: BTreeMap<u64, DegreeHistogram> = BTreeMap::new();
    for (line, record) in reader.records().enumerate() {
        let record = record?;
        let field = |i: usize| record.get(i).unwrap_or("").trim();
        let bad = |what: &str| AnalysisError::MalformedTable(format!("row {}: bad {what}", line + 2));
        let count: u64 = field(c_col).parse().map_err(|_| bad("count"))?;
        let t = match t_col {
            Some(i) => field(i).parse().map_err(|_| bad("t"))?,
            None => 0,
        };
        let hist = by_time.entry(t).or_default();
        match field(k_col) {
            "" => hist.merge(&DegreeHistogram::new(Vec::new(), count)),
            k => hist.add(k.parse().map_err(|_| bad("k"))?, count),
        }
    }
    by_time.pop_last().map(|(_, h)| h).ok_or_else(|| AnalysisError::MalformedTable("no rows".into()))
}
