//! CSV and JSON writers. CSV uses `.` decimals, LF line endings and 17
//! significant digits so identical runs give identical files.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use mocon_core::dynamics::Trajectory;
use serde::Serialize;

use crate::error::{CliError, CliResult};

/// `x` with 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// `t,q1..qN,p1..pN,u1..uM,w1..wM`, one row per sample.
pub fn trajectory_csv(traj: &Trajectory) -> String {
    let (n, m) = traj.states.first().map_or((0, 0), |s| (s.q.len(), s.u.len()));
    let mut out = String::from("t");
    for (prefix, count) in [("q", n), ("p", n), ("u", m), ("w", m)] {
        for i in 1..=count {
            let _ = write!(out, ",{prefix}{i}");
        }
    }
    out.push('\n');
    for ((t, s), w) in traj.times.iter().zip(&traj.states).zip(&traj.rates) {
        out.push_str(&fmt_f64(*t));
        for x in s.q.iter().chain(s.p.iter()).chain(s.u.iter()).chain(w.iter()) {
            out.push(',');
            out.push_str(&fmt_f64(*x));
        }
        out.push('\n');
    }
    out
}

/// Two-column CSV with the given header.
pub fn pairs_csv(header: (&str, &str), rows: impl Iterator<Item = (f64, f64)>) -> String {
    let mut out = format!("{},{}\n", header.0, header.1);
    for (a, b) in rows {
        let _ = writeln!(out, "{},{}", fmt_f64(a), fmt_f64(b));
    }
    out
}

pub fn write_file(path: &Path, contents: &str) -> CliResult<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|source| CliError::Output {
            path: dir.to_path_buf(),
            source,
        })?;
    }
    std::fs::write(path, contents).map_err(|source| CliError::Output {
        path: path.to_path_buf(),
        source,
    })
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("reports serialize");
    s.push('\n');
    s
}

/// Prints the report and, with `--out`, also writes it as `name`.
pub fn emit_report<T: Serialize>(value: &T, out: Option<&PathBuf>, name: &str) -> CliResult<()> {
    let text = to_json(value);
    if let Some(dir) = out {
        write_file(&dir.join(name), &text)?;
    }
    print!("{text}");
    Ok(())
}
