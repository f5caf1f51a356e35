//! CSV readers and writers for traces, detuning sweeps, spectra and generic
//! x/y data.
//!
//! Lines starting with `#` are comments. A comment of the form
//! `# key: value` is metadata; decay traces use `kind` and `bin_width_s`.
//! The first row may be a header; it is detected by failing to parse as
//! numbers. Parse errors report 1-based line and column.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use crate::dynamics::{DecayTrace, TraceKind};
use crate::quantities::Duration;
use crate::{Error, Result};

/// Numeric table plus `# key: value` metadata.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    pub header: Option<Vec<String>>,
    pub rows: Vec<Vec<f64>>,
    pub meta: BTreeMap<String, String>,
    /// Source line of each row, for error messages.
    pub lines: Vec<u64>,
}

impl Table {
    pub fn column(&self, i: usize) -> Vec<f64> {
        self.rows.iter().map(|r| r[i]).collect()
    }

    pub fn n_cols(&self) -> usize {
        self.rows.first().map_or(0, Vec::len)
    }
}

pub fn read_table<R: Read>(mut r: R) -> Result<Table> {
    let mut text = String::new();
    r.read_to_string(&mut text)?;
    let mut meta = BTreeMap::new();
    for line in text.lines() {
        if let Some(c) = line.trim_start().strip_prefix('#') {
            if let Some((k, v)) = c.split_once(':') {
                meta.insert(k.trim().to_string(), v.trim().to_string());
            }
        }
    }
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut table = Table {
        meta,
        ..Default::default()
    };
    let mut width = None;
    for rec in rdr.records() {
        let rec = rec.map_err(|e| crate::coupling::csv_error(&e, 1))?;
        let line = rec.position().map_or(0, |p| p.line());
        if rec.iter().all(str::is_empty) {
            continue;
        }
        let parsed: Vec<std::result::Result<f64, _>> = rec.iter().map(str::parse::<f64>).collect();
        if table.rows.is_empty() && table.header.is_none() && parsed.iter().any(|p| p.is_err()) {
            table.header = Some(rec.iter().map(str::to_string).collect());
            width = Some(rec.len());
            continue;
        }
        let w = *width.get_or_insert(rec.len());
        if rec.len() != w {
            return Err(Error::Parse {
                line,
                column: rec.len().min(w) as u64 + 1,
                message: format!("expected {w} columns, found {}", rec.len()),
            });
        }
        let mut row = Vec::with_capacity(w);
        for (c, (p, raw)) in parsed.into_iter().zip(rec.iter()).enumerate() {
            match p {
                Ok(v) if v.is_finite() => row.push(v),
                _ => {
                    return Err(Error::Parse {
                        line,
                        column: c as u64 + 1,
                        message: format!("'{raw}' is not a finite number"),
                    })
                }
            }
        }
        table.rows.push(row);
        table.lines.push(line);
    }
    if table.rows.is_empty() {
        return Err(Error::Parse {
            line: 1,
            column: 1,
            message: "no data rows".into(),
        });
    }
    Ok(table)
}

fn need_columns(t: &Table, min: usize, max: usize, what: &str) -> Result<()> {
    let n = t.n_cols();
    if n < min || n > max {
        return Err(Error::Parse {
            line: t.lines[0],
            column: 1,
            message: format!("{what} needs {min}..={max} columns, found {n}"),
        });
    }
    Ok(())
}

/// x, y and optional σ columns.
pub type XySigma = (Vec<f64>, Vec<f64>, Option<Vec<f64>>);

/// `x, y[, sigma]` columns.
pub fn read_xy<R: Read>(r: R) -> Result<XySigma> {
    let t = read_table(r)?;
    need_columns(&t, 2, 3, "x/y data")?;
    let sigma = (t.n_cols() == 3).then(|| t.column(2));
    Ok((t.column(0), t.column(1), sigma))
}

/// `detuning_hz, tau_s[, sigma_s]`. Missing σ is returned as NaN.
pub fn read_tau_points<R: Read>(r: R) -> Result<Vec<(f64, f64, f64)>> {
    let (x, y, s) = read_xy(r)?;
    Ok(match s {
        Some(s) => x.into_iter().zip(y).zip(s).map(|((a, b), c)| (a, b, c)).collect(),
        None => x.into_iter().zip(y).map(|(a, b)| (a, b, f64::NAN)).collect(),
    })
}

/// `wavelength_nm, intensity`.
pub fn read_spectrum<R: Read>(r: R) -> Result<Vec<(f64, f64)>> {
    let t = read_table(r)?;
    need_columns(&t, 2, 2, "spectrum")?;
    Ok(t.rows.iter().map(|r| (r[0], r[1])).collect())
}

/// `time_s, value` with optional `# kind:` and `# bin_width_s:` metadata.
/// Traces without a kind are treated as measured counts.
pub fn read_trace<R: Read>(r: R) -> Result<DecayTrace> {
    let t = read_table(r)?;
    need_columns(&t, 2, 2, "decay trace")?;
    let kind = match t.meta.get("kind").map(String::as_str) {
        None | Some("measured") => TraceKind::Measured,
        Some("simulated") => TraceKind::Simulated,
        Some(other) => {
            return Err(Error::Parse {
                line: 1,
                column: 1,
                message: format!("unknown trace kind '{other}'"),
            })
        }
    };
    let times = t.column(0);
    let values = t.column(1);
    let bin_width = match t.meta.get("bin_width_s") {
        Some(s) => Duration(s.parse().map_err(|_| Error::Parse {
            line: 1,
            column: 1,
            message: format!("bad bin_width_s '{s}'"),
        })?),
        None if times.len() >= 2 => Duration(times[1] - times[0]),
        None => Duration(1.0),
    };
    DecayTrace::new(times, values, bin_width, kind)
}

/// Writes metadata comments, a header row and columns of equal length.
pub fn write_columns<W: Write>(mut w: W, meta: &[(&str, String)], header: &[&str], columns: &[&[f64]]) -> Result<()> {
    for (k, v) in meta {
        writeln!(w, "# {k}: {v}")?;
    }
    writeln!(w, "{}", header.join(","))?;
    let n = columns.first().map_or(0, |c| c.len());
    if columns.iter().any(|c| c.len() != n) {
        return Err(Error::domain("columns have different lengths"));
    }
    let mut line = String::new();
    for i in 0..n {
        line.clear();
        for (j, c) in columns.iter().enumerate() {
            if j > 0 {
                line.push(',');
            }
            line.push_str(&format!("{:e}", c[i]));
        }
        writeln!(w, "{line}")?;
    }
    Ok(())
}

pub fn write_trace<W: Write>(w: W, trace: &DecayTrace, extra: &[(&str, String)]) -> Result<()> {
    let kind = match trace.kind {
        TraceKind::Measured => "measured",
        TraceKind::Simulated => "simulated",
    };
    let mut meta = vec![("kind", kind.to_string()), ("bin_width_s", format!("{:e}", trace.bin_width.0))];
    meta.extend(extra.iter().cloned());
    write_columns(w, &meta, &["time_s", "value"], &[&trace.times, &trace.values])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trace_round_trip() {
        let tr = DecayTrace::measured(vec![0.0, 1.28e-9, 2.56e-9], vec![10.0, 7.0, 5.0], Duration(1.28e-9)).unwrap();
        let mut buf = Vec::new();
        write_trace(&mut buf, &tr, &[("detuning_hz", "0".into())]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("# kind: measured\n# bin_width_s: 1.28e-9\n# detuning_hz: 0\ntime_s,value\n"));
        assert_eq!(read_trace(text.as_bytes()).unwrap(), tr);
    }

    #[test]
    fn headerless_xy_with_sigma() {
        let (x, y, s) = read_xy("1,2,0.1\n3,4,0.2\n".as_bytes()).unwrap();
        assert_eq!((x, y, s.unwrap()), (vec![1.0, 3.0], vec![2.0, 4.0], vec![0.1, 0.2]));
    }

    #[test]
    fn parse_error_position() {
        let text = "# comment\nx,y\n1,2\n3,abc\n";
        match read_xy(text.as_bytes()) {
            Err(Error::Parse { line, column, .. }) => assert_eq!((line, column), (4, 2)),
            other => panic!("{other:?}"),
        }
        match read_xy("1,2\n3\n".as_bytes()) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
        assert!(read_xy("x,y\n".as_bytes()).is_err());
        assert!(read_xy("1,nan\n".as_bytes()).is_err());
    }

    #[test]
    fn tau_points_without_sigma() {
        let p = read_tau_points("detuning_hz,tau_s\n0,1.4e-8\n1e12,1.5e-8\n".as_bytes()).unwrap();
        assert_eq!(p.len(), 2);
        assert!(p[0].2.is_nan());
    }

    #[test]
    fn unknown_trace_kind() {
        assert!(read_trace("# kind: bogus\n0,1\n1,2\n".as_bytes()).is_err());
    }
}
