//! Command-line entry point for running and validating surveying scenarios.
//!
//! Exit codes: 0 success, 1 usage error, 2 validation failure,
//! 3 runtime invariant violation or output failure.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use hedac::mesh::load_mesh;
use hedac::scenario::load_scenario;
use hedac::sim::{write_outputs, Simulation};

#[derive(Parser)]
#[command(
    name = "hedac",
    about = "Multi-agent ergodic area-surveying simulator",
    disable_help_subcommand = true
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario and write trajectories, metrics and field snapshots.
    Run {
        /// Scenario file (hedac-scenario v1)
        scenario: PathBuf,
        /// Output directory (overrides the scenario's out_dir; default `out`)
        #[arg(long)]
        out: Option<PathBuf>,
        /// Field snapshot interval in seconds (overrides the scenario)
        #[arg(long, value_name = "S")]
        snapshot_every: Option<f64>,
    },
    /// Load a scenario and run every validation check without simulating.
    Validate {
        /// Scenario file (hedac-scenario v1)
        scenario: PathBuf,
    },
    /// Print node/element/boundary counts and the domain area of a mesh.
    MeshInfo {
        /// Mesh file (hedac-mesh v1)
        mesh: PathBuf,
    },
}

fn main() -> ExitCode {
    // HEDAC_THREADS caps internal parallelism; the numerical pipeline is
    // single-threaded, so any positive value is already within the cap.
    if let Ok(v) = std::env::var("HEDAC_THREADS") {
        if v.parse::<usize>().map_or(true, |n| n == 0) {
            eprintln!("error: HEDAC_THREADS must be a positive integer, got `{v}`");
            return ExitCode::from(1);
        }
    }

    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Help/version requests are successes; everything else is usage.
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };

    match cli.command {
        Command::Run {
            scenario,
            out,
            snapshot_every,
        } => cmd_run(scenario, out, snapshot_every),
        Command::Validate { scenario } => cmd_validate(scenario),
        Command::MeshInfo { mesh } => cmd_mesh_info(mesh),
    }
}

fn cmd_run(scenario: PathBuf, out: Option<PathBuf>, snapshot_every: Option<f64>) -> ExitCode {
    let mut config = match load_scenario(&scenario) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    if let Some(s) = snapshot_every {
        if !(s > 0.0) {
            eprintln!("error: --snapshot-every must be positive, got {s}");
            return ExitCode::from(1);
        }
        config.snapshot_every = Some(s);
    }
    let out_dir = out
        .or_else(|| config.out_dir.clone())
        .unwrap_or_else(|| PathBuf::from("out"));

    let mut sim = match Simulation::load(config) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };

    let output = match sim.run() {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(3);
        }
    };
    if let Err(e) = write_outputs(&output.record, &output.snapshots, &out_dir) {
        eprintln!("error: {e}");
        return ExitCode::from(3);
    }

    let steps = output.record.steps.len();
    let eta = output.record.steps.last().map_or(0.0, |s| s.eta);
    println!(
        "completed {steps} steps; eta = {eta:.4}; outputs in {}",
        out_dir.display()
    );
    ExitCode::SUCCESS
}

fn cmd_validate(scenario: PathBuf) -> ExitCode {
    let config = match load_scenario(&scenario) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let agents = config.agents.len();
    let steps = config.step_count();
    match Simulation::load(config) {
        Ok(sim) => {
            println!(
                "ok: {} nodes, {} elements, {agents} agents, {steps} steps of {} s",
                sim.mesh().node_count(),
                sim.mesh().element_count(),
                sim.config().dt
            );
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn cmd_mesh_info(mesh_path: PathBuf) -> ExitCode {
    match load_mesh(&mesh_path) {
        Ok((geometry, mesh)) => {
            println!("nodes: {}", mesh.node_count());
            println!("elements: {}", mesh.element_count());
            println!("boundary edges: {}", mesh.boundary_edges().len());
            println!("obstacles: {}", geometry.obstacle_count());
            println!("domain area: {:.4} m^2", geometry.area());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
