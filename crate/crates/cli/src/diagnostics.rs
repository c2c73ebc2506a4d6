//! Per-step diagnostics rows and their CSV file.

use std::fs::{self, File, OpenOptions};
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use ism_core::dynamics::{
    circulation, energy, generalized_enstrophy, state_norm, w1inf_norms, MaterialLoop, Params, SimState,
};
use ism_core::field::{NormSpec, Normed};
use ism_core::incompressible::divergence;
use thiserror::Error;

pub const HEADER: &str = "t,energy,l2_us,l2_ut,l2_th,w1inf_us,w1inf_ut,w1inf_th,zkp,max_div,enstrophy_q2,circulation,lambda,w_t,cutoff_us,cutoff_ut,cutoff_th";
const COLUMNS: usize = 17;

#[derive(Debug, Error)]
pub enum DiagnosticsError {
    #[error("diagnostics header mismatch in {path}: found `{found}`")]
    HeaderMismatch { path: String, found: String },
    #[error("diagnostics line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("diagnostics I/O: {0}")]
    Io(#[from] io::Error),
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct DiagnosticsRecord {
    pub t: f64,
    pub energy: f64,
    pub l2: [f64; 3],
    pub w1inf: [f64; 3],
    pub zkp: f64,
    pub max_div: f64,
    pub enstrophy_q2: f64,
    pub circulation: Option<f64>,
    pub lambda: Option<f64>,
    pub w_t: Option<f64>,
    pub cutoff: Option<[f64; 3]>,
}

impl DiagnosticsRecord {
    /// Deterministic quantities of a state; the optional columns start empty.
    pub fn of_state(state: &SimState, params: &Params, norm: NormSpec) -> Self {
        DiagnosticsRecord {
            t: state.t,
            energy: energy(state, params),
            l2: [state.u_s.norm(NormSpec::L2), state.u_t.norm(NormSpec::L2), state.theta.norm(NormSpec::L2)],
            w1inf: w1inf_norms(state),
            zkp: state_norm(state, norm),
            max_div: divergence(&state.u_s).max_abs(),
            enstrophy_q2: generalized_enstrophy(state, params, |q| q * q),
            ..Default::default()
        }
    }

    pub fn with_circulation(mut self, state: &SimState, params: &Params, material: Option<&MaterialLoop>) -> Self {
        self.circulation = material.and_then(|m| circulation(state, params, m).ok());
        self
    }

    pub fn to_row(&self) -> String {
        let mut cells: Vec<String> = Vec::with_capacity(COLUMNS);
        cells.push(fmt_f64(self.t));
        cells.push(fmt_f64(self.energy));
        cells.extend(self.l2.iter().map(|v| fmt_f64(*v)));
        cells.extend(self.w1inf.iter().map(|v| fmt_f64(*v)));
        cells.push(fmt_f64(self.zkp));
        cells.push(fmt_f64(self.max_div));
        cells.push(fmt_f64(self.enstrophy_q2));
        for v in [self.circulation, self.lambda, self.w_t] {
            cells.push(v.map(fmt_f64).unwrap_or_default());
        }
        match self.cutoff {
            Some(c) => cells.extend(c.iter().map(|v| fmt_f64(*v))),
            None => cells.extend(std::iter::repeat_n(String::new(), 3)),
        }
        cells.join(",")
    }

    pub fn parse_row(row: &str, line: usize) -> Result<Self, DiagnosticsError> {
        let cells: Vec<&str> = row.split(',').collect();
        if cells.len() != COLUMNS {
            return Err(DiagnosticsError::Parse {
                line,
                message: format!("expected {COLUMNS} fields, found {}", cells.len()),
            });
        }
        let num = |i: usize| -> Result<f64, DiagnosticsError> {
            cells[i]
                .parse()
                .map_err(|_| DiagnosticsError::Parse { line, message: format!("bad number `{}`", cells[i]) })
        };
        let opt = |i: usize| -> Result<Option<f64>, DiagnosticsError> {
            if cells[i].is_empty() {
                Ok(None)
            } else {
                num(i).map(Some)
            }
        };
        let cutoff = match (opt(14)?, opt(15)?, opt(16)?) {
            (Some(a), Some(b), Some(c)) => Some([a, b, c]),
            (None, None, None) => None,
            _ => return Err(DiagnosticsError::Parse { line, message: "partially filled cutoff columns".into() }),
        };
        Ok(DiagnosticsRecord {
            t: num(0)?,
            energy: num(1)?,
            l2: [num(2)?, num(3)?, num(4)?],
            w1inf: [num(5)?, num(6)?, num(7)?],
            zkp: num(8)?,
            max_div: num(9)?,
            enstrophy_q2: num(10)?,
            circulation: opt(11)?,
            lambda: opt(12)?,
            w_t: opt(13)?,
            cutoff,
        })
    }
}

/// Shortest of the plain and exponent decimal forms; both parse back exactly.
pub fn fmt_f64(v: f64) -> String {
    let plain = format!("{v}");
    let exp = format!("{v:e}");
    if exp.len() < plain.len() {
        exp
    } else {
        plain
    }
}

fn open_for_append(path: &Path) -> Result<File, DiagnosticsError> {
    let fresh = fs::metadata(path).map(|m| m.len() == 0).unwrap_or(true);
    if !fresh {
        let mut first = String::new();
        BufReader::new(File::open(path)?).read_line(&mut first)?;
        let first = first.trim_end_matches(['\n', '\r']);
        if first != HEADER {
            return Err(DiagnosticsError::HeaderMismatch {
                path: path.display().to_string(),
                found: first.to_string(),
            });
        }
    }
    let mut file = OpenOptions::new().create(true).append(true).open(path)?;
    if fresh {
        writeln!(file, "{HEADER}")?;
    }
    Ok(file)
}

/// Appends one row, writing the header first if the file is new or empty.
pub fn append_diagnostics(record: &DiagnosticsRecord, path: &Path) -> Result<(), DiagnosticsError> {
    let mut file = open_for_append(path)?;
    writeln!(file, "{}", record.to_row())?;
    Ok(())
}

/// Buffered writer over one diagnostics file, checked once on open.
pub struct DiagnosticsLog {
    out: BufWriter<File>,
    last_t: f64,
}

impl DiagnosticsLog {
    pub fn open(path: &Path) -> Result<Self, DiagnosticsError> {
        Ok(DiagnosticsLog { out: BufWriter::new(open_for_append(path)?), last_t: f64::NEG_INFINITY })
    }

    pub fn push(&mut self, record: &DiagnosticsRecord) -> Result<(), DiagnosticsError> {
        debug_assert!(record.t >= self.last_t, "diagnostics times must be monotone");
        self.last_t = record.t;
        writeln!(self.out, "{}", record.to_row())?;
        Ok(())
    }

    pub fn finish(mut self) -> Result<(), DiagnosticsError> {
        self.out.flush()?;
        Ok(())
    }
}

pub fn read_diagnostics(path: &Path) -> Result<Vec<DiagnosticsRecord>, DiagnosticsError> {
    let text = fs::read_to_string(path)?;
    let mut lines = text.lines();
    let first = lines.next().unwrap_or("");
    if first != HEADER {
        return Err(DiagnosticsError::HeaderMismatch { path: path.display().to_string(), found: first.to_string() });
    }
    lines.enumerate().map(|(i, row)| DiagnosticsRecord::parse_row(row, i + 2)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sample() -> DiagnosticsRecord {
        DiagnosticsRecord {
            t: 0.1,
            energy: 1.0 / 3.0,
            l2: [1e-300, 2.5, 7.0],
            w1inf: [0.0, -0.0, 123456789.125],
            zkp: 3.0e20,
            max_div: 1.2345e-17,
            enstrophy_q2: std::f64::consts::PI,
            ..Default::default()
        }
    }

    #[test]
    fn header_has_seventeen_columns() {
        assert_eq!(HEADER.split(',').count(), COLUMNS);
    }

    #[test]
    fn first_write_creates_header_and_deterministic_rows_leave_blanks() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.csv");
        append_diagnostics(&sample(), &path).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), HEADER);
        let row: Vec<&str> = lines.next().unwrap().split(',').collect();
        assert_eq!(row.len(), COLUMNS);
        assert_eq!(row[12], "");
        assert_eq!(row[13], "");
        assert_eq!(row[0], "0.1");
        assert_eq!(row[2], "1e-300");
    }

    #[test]
    fn header_mismatch_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.csv");
        fs::write(&path, "t,energy\n").unwrap();
        assert!(matches!(append_diagnostics(&sample(), &path), Err(DiagnosticsError::HeaderMismatch { .. })));
    }

    #[test]
    fn appends_after_existing_rows() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.csv");
        let mut second = sample();
        second.t = 0.2;
        second.lambda = Some(1.5);
        second.w_t = Some(-0.25);
        second.cutoff = Some([1.0, 0.5, 0.0]);
        append_diagnostics(&sample(), &path).unwrap();
        append_diagnostics(&second, &path).unwrap();
        assert_eq!(read_diagnostics(&path).unwrap(), vec![sample(), second]);
    }

    proptest! {
        #[test]
        fn decimal_round_trip_is_exact(bits in any::<u64>()) {
            let v = f64::from_bits(bits);
            prop_assume!(v.is_finite());
            let s = fmt_f64(v);
            prop_assert_eq!(s.parse::<f64>().unwrap().to_bits(), v.to_bits());
            let plain = format!("{}", v);
            prop_assert!(s.len() <= plain.len());
        }

        #[test]
        fn rows_round_trip(vals in proptest::collection::vec(-1e12f64..1e12, 12), circ in proptest::option::of(-1.0f64..1.0)) {
            let r = DiagnosticsRecord {
                t: vals[0].abs(),
                energy: vals[1],
                l2: [vals[2], vals[3], vals[4]],
                w1inf: [vals[5], vals[6], vals[7]],
                zkp: vals[8],
                max_div: vals[9],
                enstrophy_q2: vals[10],
                circulation: circ,
                lambda: Some(vals[11]),
                w_t: None,
                cutoff: None,
            };
            prop_assert_eq!(DiagnosticsRecord::parse_row(&r.to_row(), 2).unwrap(), r);
        }
    }
}
