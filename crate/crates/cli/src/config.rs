//! Run configuration for `stdg solve`, read from TOML or JSON.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use stdg_core::cases::{self, Case};
use stdg_core::mesh::{generate_cartesian, generate_triangulated, generate_voronoi, load_mesh_with, BBox, LoadOptions};
use stdg_core::{
    energy_norm, error_metrics, solve, Discretization, EnergyNorm, ErrorReport, PolyMesh, ResolvedSupg, SolverKind,
    StabMode, SupgParams, TimePartition,
};

use crate::error::{CliError, Result};
use crate::output::{create_dir, rates_csv, vtk_polygons, write_text};

/// File layout as written by users; every field optional so that
/// validation can name what is missing.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    pub k: Option<usize>,
    pub r: Option<usize>,
    #[serde(default)]
    pub problem: RawProblem,
    #[serde(default)]
    pub mesh: RawMesh,
    #[serde(default)]
    pub time: RawTime,
    #[serde(default)]
    pub supg: RawSupg,
    #[serde(default)]
    pub solver: RawSolver,
    #[serde(default)]
    pub output: RawOutput,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawProblem {
    pub case: Option<String>,
    pub nu: Option<f64>,
    pub t_final: Option<f64>,
    pub beta: Option<[f64; 2]>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawMesh {
    pub kind: Option<String>,
    pub n: Option<usize>,
    pub nx: Option<usize>,
    pub ny: Option<usize>,
    pub seeds: Option<usize>,
    pub relax: Option<usize>,
    pub seed: Option<u64>,
    pub path: Option<PathBuf>,
    #[serde(default)]
    pub reorient: bool,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawTime {
    pub steps: Option<usize>,
    pub tau: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawSupg {
    pub mode: Option<StabMode>,
    pub zeta: Option<f64>,
    pub c_inv: Option<f64>,
    pub beta_eps: Option<f64>,
    pub bar_beta: Option<f64>,
    pub extra_time_stab: Option<bool>,
    pub c_star: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawSolver {
    pub kind: Option<String>,
    pub tol: Option<f64>,
    pub max_iter: Option<usize>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawOutput {
    pub dir: Option<PathBuf>,
    /// `none`, `final` (default) or `all`.
    pub vtk: Option<String>,
    /// Record wall time in `errors.csv`; off by default so reruns are identical.
    #[serde(default)]
    pub wall_time: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CaseKind {
    Manufactured,
    FixedData,
    Patch,
    Rotating,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum MeshSource {
    Cartesian { nx: usize, ny: usize },
    Triangulated { nx: usize, ny: usize },
    Voronoi { seeds: usize, relax: usize, seed: u64 },
    File { path: PathBuf, reorient: bool },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum VtkOutput {
    None,
    Final,
    All,
}

/// Validated configuration.
#[derive(Debug, Clone, Serialize)]
pub struct Config {
    pub case: CaseKind,
    pub nu: f64,
    pub t_final: Option<f64>,
    pub beta: [f64; 2],
    pub k: usize,
    pub r: usize,
    pub mesh: MeshSource,
    pub steps: Option<usize>,
    pub tau: Option<f64>,
    #[serde(skip)]
    pub supg: SupgParams,
    pub stab: StabMode,
    #[serde(skip)]
    pub solver: SolverKind,
    pub output: PathBuf,
    pub vtk: VtkOutput,
    pub wall_time: bool,
}

fn positive(field: &'static str, v: Option<f64>) -> Result<Option<f64>> {
    match v {
        Some(x) if !(x > 0.0) || !x.is_finite() => Err(CliError::InvalidField {
            field,
            reason: format!("must be finite and > 0, got {x}"),
        }),
        other => Ok(other),
    }
}

impl RawConfig {
    pub fn parse(text: &str, json: bool) -> Result<Self> {
        if json {
            serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))
        } else {
            toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
        }
    }

    pub fn validate(self) -> Result<Config> {
        let p = self.problem;
        let case = match p.case.as_deref() {
            None => return Err(CliError::MissingField("problem.case")),
            Some("manufactured") => CaseKind::Manufactured,
            Some("fixed-data") => CaseKind::FixedData,
            Some("patch") => CaseKind::Patch,
            Some("rotating") => CaseKind::Rotating,
            Some(other) => {
                return Err(CliError::InvalidField {
                    field: "problem.case",
                    reason: format!("unknown case `{other}` (manufactured, fixed-data, patch, rotating)"),
                })
            }
        };
        let nu = p.nu.ok_or(CliError::MissingField("problem.nu"))?;
        if !(nu >= 0.0) || !nu.is_finite() {
            return Err(CliError::InvalidField { field: "problem.nu", reason: format!("must be finite and >= 0, got {nu}") });
        }
        let t_final = positive("problem.t_final", p.t_final)?;
        let k = self.k.ok_or(CliError::MissingField("k"))?;
        if k == 0 {
            return Err(CliError::InvalidField { field: "k", reason: "must be >= 1".into() });
        }
        let r = self.r.unwrap_or(k);

        let m = self.mesh;
        let kind = m.kind.as_deref().unwrap_or(if m.path.is_some() { "file" } else { "cartesian" });
        let side = |field: &'static str, v: Option<usize>| -> Result<usize> {
            match v.or(m.n) {
                Some(0) => Err(CliError::InvalidField { field, reason: "must be >= 1".into() }),
                Some(n) => Ok(n),
                None => Err(CliError::MissingField(field)),
            }
        };
        let mesh = match kind {
            "cartesian" => MeshSource::Cartesian { nx: side("mesh.nx", m.nx)?, ny: side("mesh.ny", m.ny)? },
            "triangulated" => MeshSource::Triangulated { nx: side("mesh.nx", m.nx)?, ny: side("mesh.ny", m.ny)? },
            "voronoi" => MeshSource::Voronoi {
                seeds: m.seeds.or(m.n.map(|n| n * n)).ok_or(CliError::MissingField("mesh.seeds"))?,
                relax: m.relax.unwrap_or(10),
                seed: m.seed.unwrap_or(1),
            },
            "file" => MeshSource::File {
                path: m.path.ok_or(CliError::MissingField("mesh.path"))?,
                reorient: m.reorient,
            },
            other => {
                return Err(CliError::InvalidField {
                    field: "mesh.kind",
                    reason: format!("unknown mesh kind `{other}` (cartesian, triangulated, voronoi, file)"),
                })
            }
        };

        if self.time.steps == Some(0) {
            return Err(CliError::InvalidField { field: "time.steps", reason: "must be >= 1".into() });
        }
        let tau = positive("time.tau", self.time.tau)?;
        if self.time.steps.is_some() && tau.is_some() {
            return Err(CliError::Config("set at most one of `time.steps` and `time.tau`".into()));
        }

        let s = self.supg;
        let stab = s.mode.unwrap_or_default();
        let supg = SupgParams {
            zeta: positive("supg.zeta", s.zeta)?.unwrap_or(0.1),
            c_inv: positive("supg.c_inv", s.c_inv)?,
            beta_eps: positive("supg.beta_eps", s.beta_eps)?,
            bar_beta: positive("supg.bar_beta", s.bar_beta)?,
            mode: stab,
            extra_time_stab: s.extra_time_stab.unwrap_or(false),
            c_star_check: positive("supg.c_star", s.c_star)?.unwrap_or(1.0),
        };

        let solver = match self.solver.kind.as_deref().unwrap_or("direct") {
            "direct" => SolverKind::Direct,
            "bicgstab" => SolverKind::BiCgStab {
                tol: positive("solver.tol", self.solver.tol)?.unwrap_or(1e-10),
                max_iter: self.solver.max_iter.unwrap_or(2000),
            },
            other => {
                return Err(CliError::InvalidField {
                    field: "solver.kind",
                    reason: format!("unknown solver `{other}` (direct, bicgstab)"),
                })
            }
        };

        let vtk = match self.output.vtk.as_deref().unwrap_or("final") {
            "none" => VtkOutput::None,
            "final" => VtkOutput::Final,
            "all" => VtkOutput::All,
            other => {
                return Err(CliError::InvalidField {
                    field: "output.vtk",
                    reason: format!("unknown value `{other}` (none, final, all)"),
                })
            }
        };

        Ok(Config {
            case,
            nu,
            t_final,
            beta: p.beta.unwrap_or(crate::study::PATCH_BETA),
            k,
            r,
            mesh,
            steps: self.time.steps,
            tau,
            supg,
            stab,
            solver,
            output: self.output.dir.unwrap_or_else(|| PathBuf::from("stdg-out")),
            vtk,
            wall_time: self.output.wall_time,
        })
    }
}

/// Reads and validates a config file; `.json` files are JSON, anything else TOML.
pub fn load_config(path: &Path) -> Result<(Config, String)> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let json = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"));
    let cfg = RawConfig::parse(&text, json)?.validate()?;
    Ok((cfg, text))
}

impl Config {
    pub fn build_case(&self) -> Case {
        let mut case = match self.case {
            CaseKind::Manufactured => cases::manufactured(self.nu),
            CaseKind::FixedData => cases::fixed_data(self.nu),
            CaseKind::Patch => cases::patch(self.k, self.r, self.nu, self.beta, self.t_final.unwrap_or(crate::study::PATCH_T)),
            CaseKind::Rotating => {
                let mut c = cases::rotating_body();
                c.problem.nu = self.nu;
                c
            }
        };
        if let Some(t) = self.t_final {
            case.problem.t_final = t;
        }
        case
    }

    pub fn build_mesh(&self) -> stdg_core::Result<PolyMesh> {
        let unit = BBox::unit();
        match &self.mesh {
            MeshSource::Cartesian { nx, ny } => generate_cartesian(*nx, *ny, unit),
            MeshSource::Triangulated { nx, ny } => generate_triangulated(*nx, *ny, unit),
            MeshSource::Voronoi { seeds, relax, seed } => generate_voronoi(*seeds, unit, *relax, *seed),
            MeshSource::File { path, reorient } => load_mesh_with(path, LoadOptions { reorient: *reorient }),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SingleSummary {
    pub case: String,
    pub k: usize,
    pub r: usize,
    pub n_cells: usize,
    pub n_dofs: usize,
    pub h: f64,
    pub tau: f64,
    pub num_slabs: usize,
    pub params: ResolvedSupg,
    pub energy: EnergyNorm,
    pub max_relative_residual: f64,
    pub errors: Option<ErrorReport>,
}

/// Solves one configured problem and writes its artifacts into the output
/// directory (`out` overrides the configured one).
pub fn run_single(path: &Path, out: Option<&Path>) -> Result<SingleSummary> {
    let (cfg, text) = load_config(path)?;
    let start = std::time::Instant::now();
    let dir = out.map(Path::to_path_buf).unwrap_or_else(|| cfg.output.clone());
    let case = cfg.build_case();
    let mesh = cfg.build_mesh().map_err(|e| match e {
        stdg_core::Error::Io { .. } | stdg_core::Error::MeshParse { .. } => CliError::Config(e.to_string()),
        other => CliError::Solver { context: "mesh".into(), source: other },
    })?;
    let t_final = case.problem.t_final;
    let part = match (cfg.steps, cfg.tau) {
        (Some(n), _) => TimePartition::uniform(t_final, n),
        (None, Some(tau)) => crate::study::partition_for(t_final, tau),
        (None, None) => crate::study::partition_for(t_final, mesh.h()),
    }
    .map_err(CliError::solver("time partition"))?;
    let disc = Discretization::new(mesh, cfg.k).map_err(CliError::solver("discretization"))?;
    let sol = solve(&disc, &part, &case.problem, &cfg.supg, cfg.r, cfg.solver).map_err(CliError::solver("solve"))?;
    let energy = energy_norm(&disc, &sol, &case.problem.beta);
    let errors = case.exact.as_ref().map(|ex| {
        let mut rep = error_metrics(&disc, &sol, ex, &case.problem.beta);
        if cfg.wall_time {
            rep.wall_time = start.elapsed().as_secs_f64();
        }
        rep
    });
    let summary = SingleSummary {
        case: case.name.clone(),
        k: cfg.k,
        r: cfg.r,
        n_cells: disc.mesh.num_cells(),
        n_dofs: disc.n_dofs(),
        h: disc.mesh.h(),
        tau: part.tau(),
        num_slabs: part.num_slabs(),
        params: sol.params,
        energy,
        max_relative_residual: sol.diagnostics.iter().map(|d| d.relative_residual).fold(0.0, f64::max),
        errors,
    };

    create_dir(&dir)?;
    let ext = if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json")) { "json" } else { "toml" };
    write_text(&dir.join(format!("config.{ext}")), &text)?;
    write_text(&dir.join("summary.json"), &serde_json::to_string_pretty(&summary).expect("summary serializes"))?;
    if let Some(rep) = &summary.errors {
        write_text(&dir.join("errors.csv"), &rates_csv(std::slice::from_ref(rep), None))?;
    }
    let nv = disc.mesh.num_vertices();
    match cfg.vtk {
        VtkOutput::None => {}
        VtkOutput::Final => {
            let u = sol.final_trace();
            write_text(&dir.join("solution_final.vtk"), &vtk_polygons(&disc.mesh, "u", &u[..nv], Some(t_final)))?;
        }
        VtkOutput::All => {
            for n in 0..sol.num_slabs() {
                let u = sol.end_trace(n);
                let t = part.nodes()[n + 1];
                let name = format!("solution_{:04}.vtk", n + 1);
                write_text(&dir.join(name), &vtk_polygons(&disc.mesh, "u", &u[..nv], Some(t)))?;
            }
        }
    }
    Ok(summary)
}
