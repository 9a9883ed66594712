//! Convergence studies and the rotating-body benchmark.

use std::path::PathBuf;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use stdg_core::cases::{self, Case};
use stdg_core::mesh::{generate_cartesian, generate_triangulated, generate_voronoi, BBox};
use stdg_core::{
    error_metrics, rates, solve, Discretization, ErrorReport, GlobalSolution, Metric, PolyMesh, RateTable,
    SolverKind, StabMode, SupgParams, TimePartition,
};

use crate::error::{CliError, Result};
use crate::output::{create_dir, rates_csv, vtk_polygons, write_text};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum CaseId {
    /// Manufactured solution with `nu = 1`.
    Diffusion,
    /// Manufactured solution with `nu = 1e-10`.
    Convection,
    /// Space-time polynomial reproduced exactly.
    Patch,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum MeshFamily {
    Cartesian,
    Voronoi,
    Triangulated,
}

/// Lloyd iterations and seed used for Voronoi study meshes.
pub const VORONOI_RELAX: usize = 10;
pub const VORONOI_SEED: u64 = 1;

pub const PATCH_BETA: [f64; 2] = [1.0, 0.5];
pub const PATCH_T: f64 = 1.0;

impl MeshFamily {
    /// `nx` cells per side, or `nx^2` seeds for Voronoi meshes.
    pub fn generate(self, nx: usize) -> stdg_core::Result<PolyMesh> {
        let unit = BBox::unit();
        match self {
            MeshFamily::Cartesian => generate_cartesian(nx, nx, unit),
            MeshFamily::Voronoi => generate_voronoi(nx * nx, unit, VORONOI_RELAX, VORONOI_SEED),
            MeshFamily::Triangulated => generate_triangulated(nx, nx, unit),
        }
    }
}

/// Cells per side of refinement levels: doubling for `k = 1`, factor about
/// 1.6 otherwise so that the finest `k >= 2` levels stay affordable.
pub fn default_levels(k: usize, count: usize) -> Vec<usize> {
    let seq: &[usize] = if k == 1 { &[8, 16, 32, 64, 128, 256] } else { &[8, 13, 20, 32, 51, 81] };
    seq.iter().copied().take(count).collect()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StudySpec {
    pub case: CaseId,
    pub k: usize,
    pub r: usize,
    pub mesh: MeshFamily,
    /// Cells per side at every level, coarsest first.
    pub levels: Vec<usize>,
    pub stab: StabMode,
    /// Overrides the case's `nu`.
    pub nu: Option<f64>,
    pub output: Option<PathBuf>,
    /// Writes zero wall times, for byte-stable CSV files.
    pub deterministic: bool,
}

impl StudySpec {
    pub fn new(case: CaseId, k: usize, mesh: MeshFamily, levels: usize, stab: StabMode) -> Self {
        Self {
            case,
            k,
            r: k,
            mesh,
            levels: default_levels(k, levels),
            stab,
            nu: None,
            output: None,
            deterministic: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(CliError::InvalidField { field: "k", reason: "must be >= 1".into() });
        }
        if self.levels.len() < 2 {
            return Err(CliError::InvalidField {
                field: "levels",
                reason: format!("a rate study needs at least 2 levels, got {}", self.levels.len()),
            });
        }
        if self.levels.contains(&0) {
            return Err(CliError::InvalidField { field: "levels", reason: "cells per side must be >= 1".into() });
        }
        if let Some(nu) = self.nu {
            if !(nu >= 0.0) || !nu.is_finite() {
                return Err(CliError::InvalidField { field: "nu", reason: format!("must be finite and >= 0, got {nu}") });
            }
        }
        Ok(())
    }

    pub fn case(&self) -> Case {
        match self.case {
            CaseId::Diffusion => cases::manufactured(self.nu.unwrap_or(1.0)),
            CaseId::Convection => cases::manufactured(self.nu.unwrap_or(1e-10)),
            CaseId::Patch => cases::patch(self.k, self.r, self.nu.unwrap_or(1.0), PATCH_BETA, PATCH_T),
        }
    }

    fn params(&self) -> SupgParams {
        match self.stab {
            StabMode::Supg => SupgParams::default(),
            StabMode::None => SupgParams::none(),
        }
    }
}

/// Uniform slabs with `tau` as close to `target` as an integer count allows.
pub fn partition_for(t_final: f64, target: f64) -> stdg_core::Result<TimePartition> {
    let n = ((t_final / target).round() as usize).max(1);
    TimePartition::uniform(t_final, n)
}

#[derive(Debug, Clone)]
pub struct ConvergeOutput {
    pub reports: Vec<ErrorReport>,
    pub table: RateTable,
    pub csv: String,
}

/// Solves every level with `tau = h` and returns errors and observed orders.
/// Writes `rates.csv` when an output directory is set.
pub fn run_converge(spec: &StudySpec) -> Result<ConvergeOutput> {
    spec.validate()?;
    let case = spec.case();
    let exact = case.exact.clone().expect("study cases have exact solutions");
    let params = spec.params();
    let mut reports = Vec::with_capacity(spec.levels.len());
    for (level, &nx) in spec.levels.iter().enumerate() {
        let ctx = format!("level {level} ({nx} cells per side)");
        let start = Instant::now();
        let mesh = spec.mesh.generate(nx).map_err(CliError::solver(ctx.clone()))?;
        let part = partition_for(case.problem.t_final, mesh.h()).map_err(CliError::solver(ctx.clone()))?;
        let disc = Discretization::new(mesh, spec.k).map_err(CliError::solver(ctx.clone()))?;
        let sol = solve(&disc, &part, &case.problem, &params, spec.r, SolverKind::Direct)
            .map_err(CliError::solver(ctx.clone()))?;
        let mut rep = error_metrics(&disc, &sol, &exact, &case.problem.beta);
        if !spec.deterministic {
            rep.wall_time = start.elapsed().as_secs_f64();
        }
        log::info!(
            "{ctx}: h = {:.4e}, e_L2^T = {:.4e}, e_H1^T = {:.4e}, energy = {:.4e}",
            rep.h,
            rep.e_l2_t,
            rep.e_h1_t,
            rep.e_energy_interp
        );
        reports.push(rep);
    }
    let table = rates(&reports).map_err(CliError::solver("rate table"))?;
    let csv = rates_csv(&reports, Some(&table));
    if let Some(dir) = &spec.output {
        create_dir(dir)?;
        write_text(&dir.join("rates.csv"), &csv)?;
        let echo = serde_json::to_string_pretty(spec).expect("spec serializes");
        write_text(&dir.join("study.json"), &echo)?;
    }
    Ok(ConvergeOutput { reports, table, csv })
}

/// Minimum orders on the last level pair, or for the patch case a per-metric
/// error ceiling. Returns the failed checks.
pub fn check_rates(spec: &StudySpec, out: &ConvergeOutput) -> Vec<String> {
    let k = spec.k as f64;
    let mut failed = Vec::new();
    let mut need = |m: Metric, min: f64| {
        let got = out.table.last(m);
        if !got.at_least(min) {
            failed.push(format!("{m:?}: observed order {got} below {min}"));
        }
    };
    match spec.case {
        CaseId::Diffusion => {
            need(Metric::H1T, k - 0.2);
            need(Metric::L2T, k + 0.75);
            need(Metric::H1QT, k - 0.2);
        }
        CaseId::Convection => {
            need(Metric::Energy, k + 0.25);
            need(Metric::L2T, k + 0.75);
        }
        CaseId::Patch => {
            for (i, r) in out.reports.iter().enumerate() {
                for m in Metric::ALL {
                    if r.metric(m) > PATCH_TOLERANCE {
                        failed.push(format!("level {i} {m:?}: error {:.3e} above {PATCH_TOLERANCE:e}", r.metric(m)));
                    }
                }
            }
        }
    }
    failed
}

pub const PATCH_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RotatingSpec {
    pub nx: usize,
    pub mesh: MeshFamily,
    pub k: usize,
    pub r: usize,
    pub tau: f64,
    pub stab: StabMode,
    pub output: Option<PathBuf>,
    /// Snapshot every this many slabs; 0 writes none.
    pub vtk_every: usize,
}

impl Default for RotatingSpec {
    fn default() -> Self {
        Self {
            nx: 64,
            mesh: MeshFamily::Cartesian,
            k: 1,
            r: 1,
            tau: 0.1,
            stab: StabMode::Supg,
            output: None,
            vtk_every: 1,
        }
    }
}

pub const ROTATING_REPORT_TIMES: [f64; 3] = [1.5, 3.0, 6.0];

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RotatingReport {
    pub stab: StabMode,
    pub nx: usize,
    pub h: f64,
    pub tau: f64,
    pub times: Vec<f64>,
    /// `max |u_h|` over vertices farther than the exterior radius from the
    /// rotated disc centre.
    pub exterior_max: Vec<f64>,
    /// Extremes of the vertex values at every slab end.
    pub global_max: f64,
    pub global_min: f64,
    pub wall_time_s: f64,
}

fn vertex_values(mesh: &PolyMesh, global: &[f64]) -> Vec<f64> {
    global[..mesh.num_vertices()].to_vec()
}

/// Slab whose closure contains `t`, preferring the one ending at `t`.
fn slab_ending_at(sol: &GlobalSolution, t: f64) -> usize {
    let nodes = sol.partition.nodes();
    (0..sol.num_slabs())
        .find(|&n| nodes[n + 1] >= t - 1e-9 * t.max(1.0))
        .unwrap_or(sol.num_slabs() - 1)
}

pub fn exterior_max(mesh: &PolyMesh, values: &[f64], t: f64) -> f64 {
    let c = cases::rotating_center(t);
    mesh.vertices()
        .iter()
        .zip(values)
        .filter(|(p, _)| (p[0] - c[0]).hypot(p[1] - c[1]) > cases::EXTERIOR_RADIUS)
        .map(|(_, v)| v.abs())
        .fold(0.0, f64::max)
}

pub fn run_benchmark_rotating(spec: &RotatingSpec) -> Result<RotatingReport> {
    if spec.nx == 0 {
        return Err(CliError::InvalidField { field: "nx", reason: "must be >= 1".into() });
    }
    if !(spec.tau > 0.0) {
        return Err(CliError::InvalidField { field: "tau", reason: format!("must be > 0, got {}", spec.tau) });
    }
    let start = Instant::now();
    let case = cases::rotating_body();
    let mesh = spec.mesh.generate(spec.nx).map_err(CliError::solver("mesh"))?;
    let part = partition_for(case.problem.t_final, spec.tau).map_err(CliError::solver("time partition"))?;
    let disc = Discretization::new(mesh, spec.k).map_err(CliError::solver("discretization"))?;
    let params = match spec.stab {
        StabMode::Supg => SupgParams::default(),
        StabMode::None => SupgParams::none(),
    };
    let sol = solve(&disc, &part, &case.problem, &params, spec.r, SolverKind::Direct)
        .map_err(CliError::solver("rotating body"))?;
    let mesh = &disc.mesh;
    let exterior: Vec<f64> = ROTATING_REPORT_TIMES
        .iter()
        .map(|&t| {
            let n = slab_ending_at(&sol, t);
            exterior_max(mesh, &vertex_values(mesh, &sol.at(n, t)), t)
        })
        .collect();
    let mut global_max = f64::NEG_INFINITY;
    let mut global_min = f64::INFINITY;
    for n in 0..sol.num_slabs() {
        for v in vertex_values(mesh, &sol.end_trace(n)) {
            global_max = global_max.max(v);
            global_min = global_min.min(v);
        }
    }
    let report = RotatingReport {
        stab: spec.stab,
        nx: spec.nx,
        h: mesh.h(),
        tau: part.tau(),
        times: ROTATING_REPORT_TIMES.to_vec(),
        exterior_max: exterior,
        global_max,
        global_min,
        wall_time_s: start.elapsed().as_secs_f64(),
    };
    if let Some(dir) = &spec.output {
        create_dir(dir)?;
        let tag = match spec.stab {
            StabMode::Supg => "supg",
            StabMode::None => "none",
        };
        if spec.vtk_every > 0 {
            let init = disc.interpolate(|p| (case.problem.u0)(p));
            let text = vtk_polygons(mesh, "u", &vertex_values(mesh, &init), Some(0.0));
            write_text(&dir.join(format!("rotating_{tag}_0000.vtk")), &text)?;
            for n in (0..sol.num_slabs()).filter(|n| (n + 1) % spec.vtk_every == 0) {
                let t = part.nodes()[n + 1];
                let text = vtk_polygons(mesh, "u", &vertex_values(mesh, &sol.end_trace(n)), Some(t));
                write_text(&dir.join(format!("rotating_{tag}_{:04}.vtk", n + 1)), &text)?;
            }
        }
        let json = serde_json::to_string_pretty(&report).expect("report serializes");
        write_text(&dir.join(format!("rotating_{tag}.json")), &json)?;
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn levels() {
        assert_eq!(default_levels(1, 4), vec![8, 16, 32, 64]);
        assert_eq!(default_levels(2, 4), vec![8, 13, 20, 32]);
    }

    #[test]
    fn one_level_is_rejected() {
        let spec = StudySpec::new(CaseId::Patch, 1, MeshFamily::Cartesian, 1, StabMode::Supg);
        let err = run_converge(&spec).unwrap_err();
        assert_eq!(err.exit_code(), 2);
        assert!(err.to_string().contains("levels"));
    }

    #[test]
    fn initial_snapshot_is_an_indicator() {
        let mesh = MeshFamily::Cartesian.generate(20).unwrap();
        let disc = Discretization::new(mesh, 1).unwrap();
        let case = cases::rotating_body();
        let init = disc.interpolate(|p| (case.problem.u0)(p));
        assert!(init.iter().all(|&v| v == 0.0 || v == 1.0));
        assert!(init.contains(&1.0));
        assert_eq!(exterior_max(&disc.mesh, &init, 0.0), 0.0);
    }

    #[test]
    fn partition_rounds_to_integer_count() {
        let p = partition_for(1.5, 0.1).unwrap();
        assert_eq!(p.num_slabs(), 15);
        let p = partition_for(1.5, 2.0).unwrap();
        assert_eq!(p.num_slabs(), 1);
    }
}
