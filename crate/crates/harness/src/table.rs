//! Result and trace rows and their CSV encoding.

use std::io::Write;
use std::path::Path;

use crate::error::{HarnessError, Result};

/// Column order of the result CSV.
pub const RESULT_HEADER: [&str; 12] = [
    "preset",
    "mechanism",
    "auditor",
    "epsilon",
    "iteration",
    "eps_lb",
    "eps_theoretical_certified",
    "N",
    "alpha",
    "mode",
    "seed",
    "wall_time_ms",
];

/// Column order of the per-iteration trace CSV.
pub const TRACE_HEADER: [&str; 11] = [
    "preset",
    "mechanism",
    "auditor",
    "epsilon",
    "seed",
    "group",
    "iteration",
    "key_budget",
    "value_budget",
    "mean_feedback",
    "mean_estimate",
];

/// One audited grid point at one iteration.
#[derive(Clone, Debug, PartialEq)]
pub struct ResultRow {
    pub preset: String,
    pub mechanism: String,
    pub auditor: String,
    pub epsilon: f64,
    /// 1-based round index (1 for single-round mechanisms).
    pub iteration: usize,
    pub eps_lb: f64,
    pub eps_theoretical_certified: f64,
    pub n: u64,
    pub alpha: f64,
    pub mode: String,
    pub seed: u64,
    pub wall_time_ms: u64,
}

impl ResultRow {
    fn fields(&self) -> [String; 12] {
        [
            self.preset.clone(),
            self.mechanism.clone(),
            self.auditor.clone(),
            fmt_g(self.epsilon),
            self.iteration.to_string(),
            fmt_g(self.eps_lb),
            fmt_g(self.eps_theoretical_certified),
            self.n.to_string(),
            fmt_g(self.alpha),
            self.mode.clone(),
            self.seed.to_string(),
            self.wall_time_ms.to_string(),
        ]
    }

    fn from_fields(r: &csv::StringRecord) -> std::result::Result<Self, String> {
        if r.len() != RESULT_HEADER.len() {
            return Err(format!("expected {} columns, found {}", RESULT_HEADER.len(), r.len()));
        }
        fn num<T: std::str::FromStr>(s: &str, col: &str) -> std::result::Result<T, String> {
            s.parse().map_err(|_| format!("column {col}: cannot parse `{s}`"))
        }
        Ok(Self {
            preset: r[0].to_string(),
            mechanism: r[1].to_string(),
            auditor: r[2].to_string(),
            epsilon: num(&r[3], "epsilon")?,
            iteration: num(&r[4], "iteration")?,
            eps_lb: num(&r[5], "eps_lb")?,
            eps_theoretical_certified: num(&r[6], "eps_theoretical_certified")?,
            n: num(&r[7], "N")?,
            alpha: num(&r[8], "alpha")?,
            mode: r[9].to_string(),
            seed: num(&r[10], "seed")?,
            wall_time_ms: num(&r[11], "wall_time_ms")?,
        })
    }
}

/// One group's state after one round of an interactive run.
#[derive(Clone, Debug, PartialEq)]
pub struct TraceRow {
    pub preset: String,
    pub mechanism: String,
    pub auditor: String,
    pub epsilon: f64,
    pub seed: u64,
    pub group: String,
    pub iteration: usize,
    pub key_budget: f64,
    pub value_budget: f64,
    pub mean_feedback: f64,
    pub mean_estimate: f64,
}

impl TraceRow {
    fn fields(&self) -> [String; 11] {
        [
            self.preset.clone(),
            self.mechanism.clone(),
            self.auditor.clone(),
            fmt_g(self.epsilon),
            self.seed.to_string(),
            self.group.clone(),
            self.iteration.to_string(),
            fmt_g(self.key_budget),
            fmt_g(self.value_budget),
            fmt_g(self.mean_feedback),
            fmt_g(self.mean_estimate),
        ]
    }
}

/// Formats like C's `%g`: six significant digits, trailing zeros dropped,
/// scientific notation below 1e-4 and from 1e6 on.
pub fn fmt_g(x: f64) -> String {
    const DIGITS: i32 = 6;
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return if x.is_nan() {
            "nan".into()
        } else if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        };
    }
    let sci = format!("{:.*e}", (DIGITS - 1) as usize, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..DIGITS).contains(&exp) {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{sign}{:02}", trim_zeros(mantissa), exp.abs())
    } else {
        let decimals = (DIGITS - 1 - exp).max(0) as usize;
        trim_zeros(&format!("{x:.decimals$}")).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

fn write_table<W: Write>(out: W, header: &[&str], rows: impl Iterator<Item = Vec<String>>) -> csv::Result<()> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    w.write_record(header)?;
    for r in rows {
        w.write_record(&r)?;
    }
    w.flush()?;
    Ok(())
}

/// Writes the header and `rows`. An empty row set is a configuration error.
pub fn write_results<W: Write>(rows: &[ResultRow], out: W) -> Result<()> {
    if rows.is_empty() {
        return Err(HarnessError::config("no result rows to write"));
    }
    write_table(out, &RESULT_HEADER, rows.iter().map(|r| r.fields().to_vec()))
        .map_err(|source| HarnessError::Csv { path: "<output>".into(), source })
}

pub fn emit_csv(rows: &[ResultRow], path: &Path) -> Result<()> {
    if rows.is_empty() {
        return Err(HarnessError::config("no result rows to write"));
    }
    let file = std::fs::File::create(path).map_err(|source| HarnessError::Io { path: path.into(), source })?;
    write_table(std::io::BufWriter::new(file), &RESULT_HEADER, rows.iter().map(|r| r.fields().to_vec()))
        .map_err(|source| HarnessError::Csv { path: path.into(), source })
}

pub fn emit_trace_csv(rows: &[TraceRow], path: &Path) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|source| HarnessError::Io { path: path.into(), source })?;
    write_table(std::io::BufWriter::new(file), &TRACE_HEADER, rows.iter().map(|r| r.fields().to_vec()))
        .map_err(|source| HarnessError::Csv { path: path.into(), source })
}

/// Parses a result CSV, checking the header against [`RESULT_HEADER`].
pub fn read_results(path: &Path) -> Result<Vec<ResultRow>> {
    let mut reader = csv::Reader::from_path(path).map_err(|source| HarnessError::Csv { path: path.into(), source })?;
    let header = reader.headers().map_err(|source| HarnessError::Csv { path: path.into(), source })?.clone();
    if header.iter().ne(RESULT_HEADER) {
        return Err(HarnessError::config(format!("{}: unexpected header", path.display())));
    }
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|source| HarnessError::Csv { path: path.into(), source })?;
        rows.push(
            ResultRow::from_fields(&record).map_err(|e| HarnessError::config(format!("{}: {e}", path.display())))?,
        );
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn general_format_matches_c() {
        let cases = [
            (0.0, "0"),
            (0.1, "0.1"),
            (1.0, "1"),
            (2.414079652502, "2.41408"),
            (1e6, "1e+06"),
            (123456.4, "123456"),
            (999999.5, "1e+06"),
            (0.0001, "0.0001"),
            (0.00001234567, "1.23457e-05"),
            (-0.05, "-0.05"),
            (1.5e-300, "1.5e-300"),
        ];
        for (x, want) in cases {
            assert_eq!(fmt_g(x), want, "{x}");
        }
    }

    #[test]
    fn empty_rows_are_rejected() {
        let mut buf = Vec::new();
        assert!(matches!(write_results(&[], &mut buf), Err(HarnessError::Config(_))));
    }
}
