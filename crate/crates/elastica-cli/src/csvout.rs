//! Deterministic CSV emission. All floating-point values are written with 17
//! significant digits so files round-trip losslessly and identical runs
//! produce byte-identical output.

use std::fs;
use std::io::Write;
use std::path::Path;

use elastica::analysis::ConvergenceTable;
use elastica::flow::StepReport;
use elastica::hermite::CurveState;

pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn write_reports(path: &Path, reports: &[StepReport]) -> std::io::Result<()> {
    let mut out = String::from(
        "n,t,energy,dissipation_l2,dissipation_h2,constraint_violation,kkt_residual\n",
    );
    for r in reports {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            r.n,
            fmt_f64(r.t),
            fmt_f64(r.energy),
            fmt_f64(r.dissipation_l2),
            fmt_f64(r.dissipation_h2),
            fmt_f64(r.constraint_violation),
            fmt_f64(r.kkt_residual),
        ));
    }
    fs::write(path, out)
}

pub fn write_snapshot<const D: usize>(
    path: &Path,
    state: &CurveState<D>,
    samples_per_element: usize,
) -> std::io::Result<()> {
    let mut file = fs::File::create(path)?;
    let mut header = String::from("x");
    for j in 1..=D {
        header.push_str(&format!(",z{j}"));
    }
    writeln!(file, "{header}")?;
    for (x, v) in state.sample(samples_per_element) {
        let mut line = fmt_f64(x);
        for c in v.iter() {
            line.push(',');
            line.push_str(&fmt_f64(*c));
        }
        writeln!(file, "{line}")?;
    }
    Ok(())
}

/// One file per norm: `h` column, then an error and an eoc column per
/// `(mode, τ)` pair. The first eoc entry of each column is empty.
pub fn write_table(path: &Path, table: &ConvergenceTable) -> std::io::Result<()> {
    let norm = table.norm.label();
    let mut header = String::from("h");
    for col in &table.columns {
        let label = col.label();
        header.push_str(&format!(",err_{norm}_{label},eoc_{norm}_{label}"));
    }
    let mut out = header;
    out.push('\n');
    for (i, h) in table.hs.iter().enumerate() {
        let mut line = fmt_f64(*h);
        for col in &table.columns {
            line.push(',');
            line.push_str(&fmt_f64(col.errors[i]));
            line.push(',');
            if let Some(e) = col.eocs[i] {
                line.push_str(&fmt_f64(e));
            }
        }
        out.push_str(&line);
        out.push('\n');
    }
    fs::write(path, out)
}
