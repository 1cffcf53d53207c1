//! CSV and JSON writers. Floats are printed with 12 significant digits.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::galerkin_system::SampledSignal;
use crate::spectral_basis::{CoeffVector, SpectralBasis};

/// Shortest rendering of `x` rounded to 12 significant digits, switching to
/// exponent notation outside `[1e-5, 1e12)`.
pub fn format_sig(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let sci = format!("{x:.11e}");
    let (mant, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-5..12).contains(&exp) {
        return format!("{}e{exp}", trim_zeros(mant));
    }
    let decimals = (11 - exp).max(0) as usize;
    trim_zeros(&format!("{x:.decimals$}")).to_string()
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Text of a signal CSV: header `t,u1,...`, one row per sample.
pub fn signal_csv(signal: &SampledSignal) -> String {
    let m = signal.n_channels();
    let mut out = String::from("t");
    for c in 1..=m {
        let _ = write!(out, ",u{c}");
    }
    out.push('\n');
    for (r, t) in signal.times().iter().enumerate() {
        out.push_str(&format_sig(*t));
        for c in 0..m {
            out.push(',');
            out.push_str(&format_sig(signal.values()[(r, c)]));
        }
        out.push('\n');
    }
    out
}

pub fn export_signal_csv(signal: &SampledSignal, path: impl AsRef<Path>) -> Result<()> {
    write_text(path.as_ref(), &signal_csv(signal))
}

/// Parses a signal CSV back into a [`SampledSignal`].
pub fn read_signal_csv(path: impl AsRef<Path>) -> Result<SampledSignal> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_signal_csv(&text)
}

pub fn parse_signal_csv(text: &str) -> Result<SampledSignal> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines.next().ok_or(Error::Parse {
        line: 1,
        message: "empty signal file".into(),
    })?;
    let cols: Vec<&str> = header.split(',').map(str::trim).collect();
    if cols.first() != Some(&"t") || cols.len() < 2 {
        return Err(Error::Parse {
            line: 1,
            message: "header must be `t,u1[,u2,...]`".into(),
        });
    }
    let m = cols.len() - 1;
    let mut times = Vec::new();
    let mut vals = Vec::new();
    for (idx, line) in lines {
        let row = line
            .split(',')
            .map(|t| t.trim().parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| Error::Parse {
                line: idx + 1,
                message: e.to_string(),
            })?;
        if row.len() != m + 1 {
            return Err(Error::Parse {
                line: idx + 1,
                message: format!("expected {} columns, found {}", m + 1, row.len()),
            });
        }
        times.push(row[0]);
        vals.extend_from_slice(&row[1..]);
    }
    let n = times.len();
    SampledSignal::new(times, DMatrix::from_row_slice(n, m, &vals))
}

/// Text of a field CSV: header `x[,y],theta` on `grid_n` points per axis
/// including the boundary, first coordinate varying slowest.
pub fn field_csv(coeffs: &CoeffVector, basis: &SpectralBasis, grid_n: usize) -> Result<String> {
    if grid_n < 2 {
        return Err(Error::InvalidArgument("field grid needs at least 2 points per axis".into()));
    }
    if coeffs.len() != basis.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} coefficients for a basis of {} modes",
            coeffs.len(),
            basis.len()
        )));
    }
    let dom = basis.domain();
    let axis = |a: usize| -> Vec<f64> {
        let l = dom.length(a);
        (0..grid_n)
            .map(|i| if i + 1 == grid_n { l } else { l * i as f64 / (grid_n - 1) as f64 })
            .collect()
    };
    // Dirichlet boundary, written as exact zeros.
    let on_edge = |i: usize| i == 0 || i + 1 == grid_n;
    let mut out = String::new();
    match basis.dim() {
        1 => {
            out.push_str("x,theta\n");
            let xs = axis(0);
            for (i, &x) in xs.iter().enumerate() {
                let v = if on_edge(i) { 0.0 } else { basis.eval_expansion(coeffs, &[x]) };
                let _ = writeln!(out, "{},{}", format_sig(x), format_sig(v));
            }
        }
        _ => {
            out.push_str("x,y,theta\n");
            let ys = axis(1);
            for (i, &x) in axis(0).iter().enumerate() {
                for (j, &y) in ys.iter().enumerate() {
                    let v = if on_edge(i) || on_edge(j) {
                        0.0
                    } else {
                        basis.eval_expansion(coeffs, &[x, y])
                    };
                    let _ = writeln!(out, "{},{},{}", format_sig(x), format_sig(y), format_sig(v));
                }
            }
        }
    }
    Ok(out)
}

pub fn export_field_csv(
    coeffs: &CoeffVector,
    basis: &SpectralBasis,
    grid_n: usize,
    path: impl AsRef<Path>,
) -> Result<()> {
    write_text(path.as_ref(), &field_csv(coeffs, basis, grid_n)?)
}

/// Pretty-printed JSON, creating parent directories as needed.
pub fn export_json_file<T: serde::Serialize>(value: &T, path: &Path) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_text(path, &text)
}
