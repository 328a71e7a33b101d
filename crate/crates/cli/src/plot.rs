//! Gnuplot scripts for coefficient tables. The scripts are written, never run.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use nmdot::doubledot::COEFFICIENT_LABELS;

use crate::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlotLayout {
    /// `Gamma_1` only.
    Single,
    /// All eight double-dot coefficients in each panel.
    Double,
}

/// Two-panel script (real part above, imaginary part below).
///
/// `csv_name` is referenced relative to the script's directory, and
/// `time_header` is the first CSV column name.
pub fn plot_script(csv_name: &str, time_header: &str, layout: PlotLayout) -> String {
    let xlabel = if time_header == "t_over_t0" { "t / t_0" } else { "t (1/μeV)" };
    let png = Path::new(csv_name).with_extension("png");
    let mut s = String::new();
    writeln!(s, "# Coefficients from {csv_name}").unwrap();
    writeln!(s, "set datafile separator ','").unwrap();
    writeln!(s, "set terminal pngcairo size 900,1000").unwrap();
    writeln!(s, "set output '{}'", png.display()).unwrap();
    writeln!(s, "set multiplot layout 2,1").unwrap();
    writeln!(s, "set xlabel '{xlabel}'").unwrap();
    for (panel, part, offset) in [("(a)", "Re", 2), ("(b)", "Im", 3)] {
        match layout {
            PlotLayout::Single => {
                writeln!(s, "set title '{panel} {part} Γ_1'").unwrap();
                writeln!(s, "set ylabel '{part} Γ_1 (μeV)'").unwrap();
                writeln!(s, "plot '{csv_name}' using 1:{offset} skip 1 with lines title '{part} Γ_1'").unwrap();
            }
            PlotLayout::Double => {
                writeln!(s, "set title '{panel} {part} Γ_{{λj}}'").unwrap();
                writeln!(s, "set ylabel '{part} Γ (μeV)'").unwrap();
                let curves: Vec<String> = COEFFICIENT_LABELS
                    .iter()
                    .enumerate()
                    .map(|(k, l)| format!("'{csv_name}' using 1:{} skip 1 with lines title '{part} Γ_{{{l}}}'", offset + 2 * k))
                    .collect();
                writeln!(s, "plot {}", curves.join(", \\\n     ")).unwrap();
            }
        }
    }
    writeln!(s, "unset multiplot").unwrap();
    s
}

/// Writes the `.gp` script next to an existing CSV and returns its path.
pub fn emit_plot_script(csv_path: &Path, layout: PlotLayout) -> Result<PathBuf> {
    let text = std::fs::read_to_string(csv_path).map_err(|source| CliError::Io { path: csv_path.into(), source })?;
    let header = text.lines().next().and_then(|l| l.split(',').next()).unwrap_or("");
    let name = csv_path
        .file_name()
        .and_then(|n| n.to_str())
        .ok_or_else(|| CliError::Usage(format!("{} has no usable file name", csv_path.display())))?;
    let script = csv_path.with_extension("gp");
    crate::write_file(&script, &plot_script(name, header, layout))?;
    Ok(script)
}
