//! CSV and VTK writers.

use std::fmt::Write as _;
use std::path::Path;

use stdg_core::{ErrorReport, Metric, PolyMesh, RateTable};

use crate::error::{CliError, Result};

pub const CSV_HEADER: [&str; 13] = [
    "level",
    "h",
    "tau",
    "n_dofs",
    "e_h1_T",
    "e_l2_T",
    "e_h1_QT",
    "e_energy_interp",
    "rate_h1_T",
    "rate_l2_T",
    "rate_h1_QT",
    "rate_energy",
    "wall_time_s",
];

fn sci(v: f64) -> String {
    format!("{v:.6e}")
}

/// Rows of a convergence table; `table` is `None` for a single run.
pub fn rates_csv(reports: &[ErrorReport], table: Option<&RateTable>) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(CSV_HEADER).expect("in-memory write");
    for (i, r) in reports.iter().enumerate() {
        let rate = |m: Metric| table.map(|t| t.order(i, m).to_string()).unwrap_or_default();
        w.write_record([
            i.to_string(),
            sci(r.h),
            sci(r.tau),
            r.n_dofs.to_string(),
            sci(r.e_h1_t),
            sci(r.e_l2_t),
            sci(r.e_h1_qt),
            sci(r.e_energy_interp),
            rate(Metric::H1T),
            rate(Metric::L2T),
            rate(Metric::H1QT),
            rate(Metric::Energy),
            format!("{:.3}", r.wall_time),
        ])
        .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("ascii output")
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(CliError::io(path))
}

pub fn create_dir(path: &Path) -> Result<()> {
    std::fs::create_dir_all(path).map_err(CliError::io(path))
}

/// Legacy ASCII unstructured grid of polygons with one point scalar.
pub fn vtk_polygons(mesh: &PolyMesh, name: &str, values: &[f64], time: Option<f64>) -> String {
    let mut s = String::new();
    s.push_str("# vtk DataFile Version 3.0\n");
    match time {
        Some(t) => writeln!(s, "stdg {name} t={t}").unwrap(),
        None => writeln!(s, "stdg {name}").unwrap(),
    }
    s.push_str("ASCII\nDATASET UNSTRUCTURED_GRID\n");
    if let Some(t) = time {
        writeln!(s, "FIELD FieldData 1\nTIME 1 1 double\n{t:e}").unwrap();
    }
    writeln!(s, "POINTS {} double", mesh.num_vertices()).unwrap();
    for p in mesh.vertices() {
        writeln!(s, "{:e} {:e} 0", p[0], p[1]).unwrap();
    }
    let size: usize = mesh.cells().iter().map(|c| c.len() + 1).sum();
    writeln!(s, "CELLS {} {size}", mesh.num_cells()).unwrap();
    for c in mesh.cells() {
        write!(s, "{}", c.len()).unwrap();
        for v in c {
            write!(s, " {v}").unwrap();
        }
        s.push('\n');
    }
    writeln!(s, "CELL_TYPES {}", mesh.num_cells()).unwrap();
    for _ in mesh.cells() {
        s.push_str("7\n");
    }
    if values.len() == mesh.num_vertices() {
        writeln!(s, "POINT_DATA {}\nSCALARS {name} double 1\nLOOKUP_TABLE default", values.len()).unwrap();
        for v in values {
            writeln!(s, "{v:e}").unwrap();
        }
    }
    s
}
