//! Plain-text sample streams and CSV traces.
//!
//! Sample files hold one observation per line, values separated by commas
//! and/or whitespace. Blank lines and lines starting with `#` are skipped.
//! Numbers are written with Rust's shortest round-trip formatting, so a
//! file written by [`write_row`] reads back bit-for-bit.

use std::io::{self, BufRead, Write};

use streammode_core::TracePoint;

use crate::harness::LabeledTrajectory;

#[derive(Debug, thiserror::Error)]
pub enum InputError {
    #[error("read error: {0}")]
    Io(#[from] io::Error),
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
}

/// Streams rows from a reader without buffering more than one line.
pub struct SampleReader<R> {
    reader: R,
    line: usize,
    dim: Option<usize>,
    buf: String,
}

impl<R: BufRead> SampleReader<R> {
    pub fn new(reader: R) -> Self {
        SampleReader {
            reader,
            line: 0,
            dim: None,
            buf: String::new(),
        }
    }

    /// Row width, fixed by the first data row.
    pub fn dim(&self) -> Option<usize> {
        self.dim
    }

    fn parse_row(&mut self) -> Result<Vec<f64>, InputError> {
        let line = self.line;
        let malformed = |message: String| InputError::Malformed { line, message };
        let row = self
            .buf
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|t| !t.is_empty())
            .map(|t| match t.parse::<f64>() {
                Ok(v) if v.is_finite() => Ok(v),
                Ok(_) => Err(malformed(format!("non-finite value '{t}'"))),
                Err(_) => Err(malformed(format!("cannot parse '{t}' as a number"))),
            })
            .collect::<Result<Vec<f64>, _>>()?;
        if row.is_empty() {
            return Err(malformed("no values".into()));
        }
        match self.dim {
            Some(d) if d != row.len() => Err(malformed(format!(
                "expected {d} values, found {}",
                row.len()
            ))),
            _ => {
                self.dim = Some(row.len());
                Ok(row)
            }
        }
    }
}

impl<R: BufRead> Iterator for SampleReader<R> {
    type Item = Result<Vec<f64>, InputError>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            self.buf.clear();
            match self.reader.read_line(&mut self.buf) {
                Ok(0) => return None,
                Ok(_) => self.line += 1,
                Err(e) => return Some(Err(e.into())),
            }
            let trimmed = self.buf.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            return Some(self.parse_row());
        }
    }
}

fn join(values: &[f64]) -> String {
    values.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(",")
}

/// `#`-prefixed lines, skipped by [`SampleReader`].
pub fn write_comments<W: Write>(mut w: W, lines: &[String]) -> io::Result<()> {
    for line in lines {
        writeln!(w, "# {line}")?;
    }
    Ok(())
}

/// One sample as a comma-separated line.
pub fn write_row<W: Write>(mut w: W, row: &[f64]) -> io::Result<()> {
    writeln!(w, "{}", join(row))
}

fn coordinate_header(dim: usize) -> String {
    (1..=dim).map(|i| format!("m_{i}")).collect::<Vec<_>>().join(",")
}

/// `n,m_1,...,m_p`.
pub fn write_trace_csv<W: Write>(mut w: W, points: &[TracePoint]) -> io::Result<()> {
    let dim = points.first().map_or(1, |p| p.m.len());
    writeln!(w, "n,{}", coordinate_header(dim))?;
    for p in points {
        writeln!(w, "{},{}", p.n, join(&p.m))?;
    }
    Ok(())
}

/// `label,n,m_1,...,m_p`.
pub fn write_labeled_trace_csv<W: Write>(mut w: W, trajectories: &[LabeledTrajectory]) -> io::Result<()> {
    let dim = trajectories
        .first()
        .and_then(|t| t.points.first())
        .map_or(1, |p| p.m.len());
    writeln!(w, "label,n,{}", coordinate_header(dim))?;
    for t in trajectories {
        for p in &t.points {
            writeln!(w, "{},{},{}", t.label, p.n, join(&p.m))?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn read(text: &str) -> Vec<Result<Vec<f64>, InputError>> {
        SampleReader::new(text.as_bytes()).collect()
    }

    #[test]
    fn separators_comments_and_blank_lines() {
        let rows: Vec<Vec<f64>> = read("# header\n1, 2\n\n3 4\n  5,\t6  \n#x\n")
            .into_iter()
            .collect::<Result<_, _>>()
            .unwrap();
        assert_eq!(rows, vec![vec![1.0, 2.0], vec![3.0, 4.0], vec![5.0, 6.0]]);
    }

    #[test]
    fn errors_carry_line_numbers() {
        let rows = read("1\n\nabc\n");
        assert!(matches!(rows[1], Err(InputError::Malformed { line: 3, .. })));
        let rows = read("1 2\n3\n");
        assert!(matches!(rows[1], Err(InputError::Malformed { line: 2, .. })));
        let rows = read("NaN\n");
        assert!(matches!(rows[0], Err(InputError::Malformed { line: 1, .. })));
    }

    #[test]
    fn written_samples_read_back_exactly() {
        let row = [0.1 + 0.2, -1.0 / 3.0, 1e-300, 123_456_789.123_456_79];
        let mut out = Vec::new();
        write_comments(&mut out, &["seed 3".into()]).unwrap();
        write_row(&mut out, &row).unwrap();
        let back: Vec<f64> = read(std::str::from_utf8(&out).unwrap())[0].as_ref().unwrap().clone();
        assert_eq!(back, row);
    }

    #[test]
    fn trace_csv_layout() {
        let mut out = Vec::new();
        let pts = [TracePoint { n: 0, m: vec![1.5, 2.0] }, TracePoint { n: 10, m: vec![1.25, 2.5] }];
        write_trace_csv(&mut out, &pts).unwrap();
        assert_eq!(String::from_utf8(out).unwrap(), "n,m_1,m_2\n0,1.5,2\n10,1.25,2.5\n");
    }
}
