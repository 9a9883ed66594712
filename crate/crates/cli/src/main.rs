use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use stdg_cli::output::{create_dir, vtk_polygons, write_text};
use stdg_cli::{
    check_rates, run_benchmark_rotating, run_converge, run_single, CaseId, CliError, MeshFamily, Result,
    RotatingSpec, StudySpec,
};
use stdg_core::mesh::{check_regularity, generate_cartesian, generate_triangulated, generate_voronoi, load_mesh_with, save_mesh, BBox, LoadOptions};
use stdg_core::StabMode;

#[derive(Parser)]
#[command(name = "stdg", version, about = "SUPG space-time virtual element solver for advection-diffusion")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate or inspect meshes.
    Mesh {
        #[command(subcommand)]
        action: MeshCommand,
    },
    /// Convergence study on a sequence of refined meshes.
    Converge(ConvergeArgs),
    /// Benchmarks.
    Bench {
        #[command(subcommand)]
        which: BenchCommand,
    },
    /// Single run from a TOML or JSON config.
    Solve {
        #[arg(short, long)]
        config: PathBuf,
        /// Overrides `output.dir`.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Stab {
    Supg,
    None,
}

impl From<Stab> for StabMode {
    fn from(s: Stab) -> Self {
        match s {
            Stab::Supg => StabMode::Supg,
            Stab::None => StabMode::None,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum GenKind {
    Cartesian,
    Triangulated,
    Voronoi,
}

#[derive(Subcommand)]
enum MeshCommand {
    /// Write a generated mesh on the unit square as JSON.
    Gen {
        #[arg(long, value_enum, default_value = "cartesian")]
        kind: GenKind,
        /// Cells per side (cartesian, triangulated).
        #[arg(long, default_value_t = 8)]
        nx: usize,
        #[arg(long)]
        ny: Option<usize>,
        /// Number of seeds (voronoi); defaults to nx^2.
        #[arg(long)]
        seeds: Option<usize>,
        /// Lloyd iterations (voronoi).
        #[arg(long, default_value_t = 10)]
        relax: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(short, long)]
        output: PathBuf,
        /// Also write a VTK file of the mesh.
        #[arg(long)]
        vtk: Option<PathBuf>,
    },
    /// Validate a mesh file and print its shape-regularity report.
    Check {
        path: PathBuf,
        /// Regularity threshold.
        #[arg(long, default_value_t = 0.05)]
        rho: f64,
        /// Reverse clockwise cells instead of rejecting them.
        #[arg(long)]
        reorient: bool,
    },
}

#[derive(clap::Args)]
struct ConvergeArgs {
    #[arg(long, value_enum)]
    case: CaseId,
    #[arg(long, default_value_t = 1)]
    k: usize,
    /// Time degree; defaults to k.
    #[arg(long)]
    r: Option<usize>,
    #[arg(long, value_enum, default_value = "cartesian")]
    mesh: MeshFamily,
    #[arg(long, default_value_t = 4)]
    levels: usize,
    /// Explicit cells per side, comma separated; overrides --levels.
    #[arg(long, value_delimiter = ',')]
    nx: Option<Vec<usize>>,
    #[arg(long, value_enum, default_value = "supg")]
    stab: Stab,
    #[arg(long)]
    nu: Option<f64>,
    #[arg(short, long)]
    output: PathBuf,
    /// Write zero wall times.
    #[arg(long)]
    deterministic: bool,
    /// Exit with code 4 when the observed orders miss their thresholds.
    #[arg(long)]
    assert_rates: bool,
}

#[derive(Subcommand)]
enum BenchCommand {
    /// Rotating disc carried by a rigid rotation.
    Rotating {
        #[arg(long, default_value_t = 64)]
        nx: usize,
        #[arg(long, value_enum, default_value = "cartesian")]
        mesh: MeshFamily,
        #[arg(long, default_value_t = 1)]
        k: usize,
        #[arg(long, default_value_t = 1)]
        r: usize,
        #[arg(long, default_value_t = 0.1)]
        tau: f64,
        /// Runs SUPG and NONE when omitted.
        #[arg(long, value_enum)]
        stab: Option<Stab>,
        /// Snapshot every N slabs; 0 disables VTK output.
        #[arg(long, default_value_t = 1)]
        vtk_every: usize,
        #[arg(short, long)]
        output: PathBuf,
    },
}

fn mesh_cmd(action: MeshCommand) -> Result<()> {
    match action {
        MeshCommand::Gen { kind, nx, ny, seeds, relax, seed, output, vtk } => {
            let ny = ny.unwrap_or(nx);
            let unit = BBox::unit();
            let mesh = match kind {
                GenKind::Cartesian => generate_cartesian(nx, ny, unit),
                GenKind::Triangulated => generate_triangulated(nx, ny, unit),
                GenKind::Voronoi => generate_voronoi(seeds.unwrap_or(nx * ny), unit, relax, seed),
            }
            .map_err(|e| CliError::Config(e.to_string()))?;
            save_mesh(&mesh, &output).map_err(|e| CliError::Config(e.to_string()))?;
            if let Some(v) = vtk {
                write_text(&v, &vtk_polygons(&mesh, "mesh", &[], None))?;
            }
            println!(
                "{} cells, {} vertices, h = {:.6e}, h_min = {:.6e}",
                mesh.num_cells(),
                mesh.num_vertices(),
                mesh.h(),
                mesh.h_min()
            );
            Ok(())
        }
        MeshCommand::Check { path, rho, reorient } => {
            let mesh = load_mesh_with(&path, LoadOptions { reorient }).map_err(|e| CliError::Config(e.to_string()))?;
            let report = check_regularity(&mesh, rho);
            println!(
                "{} cells, {} vertices, {} edges, h = {:.6e}, h_min = {:.6e}",
                mesh.num_cells(),
                mesh.num_vertices(),
                mesh.num_edges(),
                mesh.h(),
                mesh.h_min()
            );
            println!(
                "min rho_star = {:.4}, min edge ratio = {:.4}, worst cell = {}, violations = {}",
                report.min_rho_star(),
                report.min_edge(),
                report.worst_cell,
                report.violations.len()
            );
            Ok(())
        }
    }
}

fn converge_cmd(a: ConvergeArgs) -> Result<()> {
    let mut spec = StudySpec::new(a.case, a.k, a.mesh, a.levels, a.stab.into());
    if let Some(r) = a.r {
        spec.r = r;
    }
    if let Some(nx) = a.nx {
        spec.levels = nx;
    }
    spec.nu = a.nu;
    spec.output = Some(a.output);
    spec.deterministic = a.deterministic;
    let out = run_converge(&spec)?;
    print!("{}", out.csv);
    if a.assert_rates {
        let failed = check_rates(&spec, &out);
        if !failed.is_empty() {
            return Err(CliError::Threshold(failed));
        }
    }
    Ok(())
}

fn bench_cmd(which: BenchCommand) -> Result<()> {
    let BenchCommand::Rotating { nx, mesh, k, r, tau, stab, vtk_every, output } = which;
    create_dir(&output)?;
    let modes: Vec<StabMode> = match stab {
        Some(s) => vec![s.into()],
        None => vec![StabMode::Supg, StabMode::None],
    };
    for mode in modes {
        let spec = RotatingSpec { nx, mesh, k, r, tau, stab: mode, output: Some(output.clone()), vtk_every };
        let rep = run_benchmark_rotating(&spec)?;
        let cells: Vec<String> = rep
            .times
            .iter()
            .zip(&rep.exterior_max)
            .map(|(t, m)| format!("t={t}: {m:.4e}"))
            .collect();
        println!(
            "{:?}: exterior max |u_h| {}; range [{:.4}, {:.4}]",
            mode,
            cells.join(", "),
            rep.global_min,
            rep.global_max
        );
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Mesh { action } => mesh_cmd(action),
        Command::Converge(a) => converge_cmd(a),
        Command::Bench { which } => bench_cmd(which),
        Command::Solve { config, output } => {
            let s = run_single(&config, output.as_deref())?;
            println!("{}", serde_json::to_string_pretty(&s).expect("summary serializes"));
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
