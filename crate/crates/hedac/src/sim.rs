//! The full control loop: load a scenario, run the per-step pipeline
//! (density update, potential solve, steering, maneuver feasibility, motion,
//! coverage), enforce the safety invariants and write the output artifacts.

use std::path::Path;
use std::time::Instant;

use crate::avoidance::{
    cluster_agents, escape_routes_at, minimal_collision_area, solve_maneuver, ManeuverProblem,
};
use crate::coverage::{normalize_initial_density, TargetDensity};
use crate::dubins::{curvature_radius, desired_turn_rate, step_agent, AgentState};
use crate::error::{Error, Result};
use crate::fem::{assemble, eval_gradient, HelmholtzSystem, NodalField};
use crate::geom::DomainGeometry;
use crate::mesh::{load_mesh, Located, TriMesh};
use crate::scenario::{DensitySpec, ScenarioConfig};

/// Clearance checks allow this much numerical slack (meters).
pub const CLEARANCE_TOL: f64 = 1e-9;

/// One agent's pose and command in a recorded step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AgentRow {
    pub x: f64,
    pub y: f64,
    pub theta: f64,
    pub omega: f64,
}

/// One recorded control step (state after moving the agents).
#[derive(Debug, Clone)]
pub struct StepRow {
    pub t: f64,
    pub agents: Vec<AgentRow>,
    pub eta: f64,
    /// Smallest commanded curvature radius this step; infinite when all
    /// agents moved straight.
    pub min_radius: f64,
    /// Smallest distance from any agent to any boundary.
    pub min_boundary_clearance: f64,
    /// Smallest pairwise agent distance; infinite for a single agent.
    pub min_agent_distance: f64,
    pub t_coverage: f64,
    pub t_solve: f64,
    pub t_maneuver: f64,
}

/// Recorded simulation run.
#[derive(Debug, Clone, Default)]
pub struct SimRecord {
    pub steps: Vec<StepRow>,
}

impl SimRecord {
    /// Equality of everything the simulation determines (poses, commands,
    /// metrics), ignoring the wall-clock timing columns.
    pub fn same_trajectories(&self, other: &SimRecord) -> bool {
        self.steps.len() == other.steps.len()
            && self.steps.iter().zip(&other.steps).all(|(a, b)| {
                a.t == b.t
                    && a.eta == b.eta
                    && a.min_radius == b.min_radius
                    && a.min_boundary_clearance == b.min_boundary_clearance
                    && a.min_agent_distance == b.min_agent_distance
                    && a.agents == b.agents
            })
    }

    /// Accomplishment at the step closest to time `t`.
    pub fn eta_at(&self, t: f64) -> Option<f64> {
        self.steps
            .iter()
            .min_by(|a, b| {
                (a.t - t).abs().partial_cmp(&(b.t - t).abs()).unwrap()
            })
            .map(|row| row.eta)
    }
}

/// Nodal field snapshot at one instant.
#[derive(Debug, Clone)]
pub struct FieldSnapshot {
    pub t: f64,
    pub u: NodalField,
    pub m: NodalField,
    pub c: NodalField,
}

/// Everything produced by a run.
#[derive(Debug)]
pub struct SimOutput {
    pub record: SimRecord,
    pub snapshots: Vec<FieldSnapshot>,
}

/// A validated, ready-to-run simulation.
pub struct Simulation {
    config: ScenarioConfig,
    geometry: DomainGeometry,
    mesh: TriMesh,
    system: HelmholtzSystem,
    agents: Vec<AgentState>,
    m0: NodalField,
}

impl Simulation {
    /// Loads the mesh, assembles the FEM system, builds the agents and runs
    /// every load-time validation: poses inside the domain with full
    /// clearance, and a collision-free escape-route combination at `t = 0`
    /// (the base case of the feasibility-inheritance argument).
    pub fn load(config: ScenarioConfig) -> Result<Self> {
        let (geometry, mesh) = load_mesh(&config.mesh_path)?;
        let system = assemble(&mesh, config.alpha, config.beta)?;

        let agents: Vec<AgentState> = config
            .agents
            .iter()
            .enumerate()
            .map(|(i, spec)| spec.build(i))
            .collect::<Result<_>>()?;

        for agent in &agents {
            if let Located::Outside = mesh.locate(agent.position) {
                return Err(Error::InvalidScenario(format!(
                    "agent {} starts outside the accessible domain (inside an obstacle \
                     or beyond the boundary) at ({}, {})",
                    agent.id + 1,
                    agent.position.x,
                    agent.position.y
                )));
            }
            let d = geometry.distance_to_boundary(agent.position);
            if d < agent.clearance - CLEARANCE_TOL {
                return Err(Error::InvalidScenario(format!(
                    "agent {} starts {d:.4} m from the boundary, below its clearance {}",
                    agent.id + 1,
                    agent.clearance
                )));
            }
        }
        for i in 0..agents.len() {
            for k in (i + 1)..agents.len() {
                let d = agents[i].position.dist(agents[k].position);
                let need = agents[i].clearance + agents[k].clearance;
                if d < need - CLEARANCE_TOL {
                    return Err(Error::InvalidScenario(format!(
                        "agents {} and {} start {d:.4} m apart, below the clearance sum {need}",
                        i + 1,
                        k + 1
                    )));
                }
            }
        }
        // Base case: at t = 0 some escape-route combination must be free.
        for cluster in cluster_agents(&agents, config.dt) {
            let routes: Vec<_> = cluster.iter().map(|&i| escape_routes_at(&agents[i])).collect();
            let problem = ManeuverProblem::new(
                cluster.clone(),
                vec![0.0; cluster.len()],
                config.dt,
                &agents,
                &geometry,
            )?;
            let (amin, _) = minimal_collision_area(&problem, &routes)?;
            if amin > 0.0 {
                return Err(Error::InvalidScenario(format!(
                    "initial poses of agents {:?} leave no collision-free escape route \
                     (A_min = {amin:.3e} m^2)",
                    cluster.iter().map(|i| i + 1).collect::<Vec<_>>()
                )));
            }
        }

        let raw = match config.density {
            DensitySpec::Uniform => NodalField::constant(mesh.node_count(), 1.0),
            DensitySpec::Gaussian { cx, cy, sigma } => NodalField::from_vec(
                mesh.nodes()
                    .iter()
                    .map(|p| {
                        let d2 = (p.x - cx).powi(2) + (p.y - cy).powi(2);
                        (-d2 / (2.0 * sigma * sigma)).exp()
                    })
                    .collect(),
            ),
        };
        let m0 = normalize_initial_density(&raw, &system)?;

        Ok(Simulation {
            config,
            geometry,
            mesh,
            system,
            agents,
            m0,
        })
    }

    pub fn config(&self) -> &ScenarioConfig {
        &self.config
    }

    pub fn geometry(&self) -> &DomainGeometry {
        &self.geometry
    }

    pub fn mesh(&self) -> &TriMesh {
        &self.mesh
    }

    /// Runs the scenario to `t_end`, enforcing every safety invariant.
    pub fn run(&mut self) -> Result<SimOutput> {
        self.system.factorize()?;
        let dt = self.config.dt;
        let n_steps = self.config.step_count();
        let mut agents = self.agents.clone();
        let mut density = TargetDensity::new(&self.mesh, &self.system, self.m0.clone())?;
        let mut record = SimRecord::default();
        let mut snapshots = Vec::new();
        let mut next_snapshot = self.config.snapshot_every;

        if self.config.snapshot_every.is_some() {
            // Initial snapshot before any motion: c = 0, m = m0.
            let u0 = self.system.solve_potential(density.density())?;
            snapshots.push(FieldSnapshot {
                t: 0.0,
                u: u0,
                m: density.density().clone(),
                c: density.coverage().clone(),
            });
        }

        let mut prev_eta = 0.0;
        for k in 0..n_steps {
            let t = dt * (k + 1) as f64;

            // (1) current density from accumulated coverage
            density.update_density();

            // (2) potential field
            let t_solve0 = Instant::now();
            let u = self.system.solve_potential(density.density())?;
            let t_solve = t_solve0.elapsed().as_secs_f64();

            // (3)-(4) steering commands from the potential gradient
            let mut dtheta_h = vec![0.0; agents.len()];
            for (i, agent) in agents.iter().enumerate() {
                let grad = eval_gradient(&self.mesh, &u, agent.position).ok_or_else(|| {
                    Error::InvariantViolation {
                        t,
                        msg: format!(
                            "agent {} left the domain at ({}, {})",
                            agent.id + 1,
                            agent.position.x,
                            agent.position.y
                        ),
                    }
                })?;
                dtheta_h[i] = desired_turn_rate(agent, grad, dt) * dt;
            }

            // (5) collision feasibility per cluster; optimize where needed
            let t_man0 = Instant::now();
            let mut chosen = dtheta_h.clone();
            for cluster in cluster_agents(&agents, dt) {
                let cluster_h: Vec<f64> = cluster.iter().map(|&i| dtheta_h[i]).collect();
                let mut problem = ManeuverProblem::new(
                    cluster.clone(),
                    cluster_h,
                    dt,
                    &agents,
                    &self.geometry,
                )?;
                let routes = problem.routes_for(&problem.dtheta)?;
                let (amin, _) = minimal_collision_area(&problem, &routes)?;
                if amin > 0.0 {
                    let solved = solve_maneuver(&mut problem).map_err(|e| match e {
                        Error::ManeuverInfeasible(msg) => Error::InvariantViolation {
                            t,
                            msg: format!("maneuver optimization failed: {msg}"),
                        },
                        other => other,
                    })?;
                    for (slot, &ai) in solved.iter().zip(&cluster) {
                        chosen[ai] = *slot;
                    }
                }
            }
            let t_maneuver = t_man0.elapsed().as_secs_f64();

            // (6) move all agents along exact arcs
            for (i, agent) in agents.iter_mut().enumerate() {
                *agent = step_agent(agent, chosen[i] / dt, dt)?;
            }

            // (7) coverage at the post-move poses
            let t_cov0 = Instant::now();
            density.accumulate_coverage(&self.mesh, &agents, dt);
            let t_coverage = t_cov0.elapsed().as_secs_f64();

            // (8) record and enforce invariants
            density.update_density();
            let eta = density.accomplishment(&self.system);
            if eta < prev_eta - 1e-12 {
                return Err(Error::InvariantViolation {
                    t,
                    msg: format!("accomplishment decreased from {prev_eta} to {eta}"),
                });
            }
            prev_eta = eta;

            let mut min_radius = f64::INFINITY;
            let mut min_boundary = f64::INFINITY;
            let mut min_pair = f64::INFINITY;
            for (i, agent) in agents.iter().enumerate() {
                let omega = chosen[i] / dt;
                if let Some(r) = curvature_radius(omega, agent.speed) {
                    if r < agent.min_turn_radius() - 1e-12 {
                        return Err(Error::InvariantViolation {
                            t,
                            msg: format!(
                                "agent {} curvature radius {r} below minimum {}",
                                agent.id + 1,
                                agent.min_turn_radius()
                            ),
                        });
                    }
                    min_radius = min_radius.min(r);
                }
                let d = self.geometry.distance_to_boundary(agent.position);
                if d < agent.clearance - CLEARANCE_TOL {
                    return Err(Error::InvariantViolation {
                        t,
                        msg: format!(
                            "agent {} boundary clearance {d} below {} at ({}, {})",
                            agent.id + 1,
                            agent.clearance,
                            agent.position.x,
                            agent.position.y
                        ),
                    });
                }
                min_boundary = min_boundary.min(d);
                for other in agents.iter().take(i) {
                    let dp = agent.position.dist(other.position);
                    if dp < agent.clearance + other.clearance - CLEARANCE_TOL {
                        return Err(Error::InvariantViolation {
                            t,
                            msg: format!(
                                "agents {} and {} are {dp} m apart, below clearance sum {}",
                                other.id + 1,
                                agent.id + 1,
                                agent.clearance + other.clearance
                            ),
                        });
                    }
                    min_pair = min_pair.min(dp);
                }
            }

            record.steps.push(StepRow {
                t,
                agents: agents
                    .iter()
                    .enumerate()
                    .map(|(i, a)| AgentRow {
                        x: a.position.x,
                        y: a.position.y,
                        theta: a.heading,
                        omega: chosen[i] / dt,
                    })
                    .collect(),
                eta,
                min_radius,
                min_boundary_clearance: min_boundary,
                min_agent_distance: min_pair,
                t_coverage,
                t_solve,
                t_maneuver,
            });

            if let Some(s) = self.config.snapshot_every {
                if t + 1e-9 >= next_snapshot.unwrap() {
                    snapshots.push(FieldSnapshot {
                        t,
                        u: u.clone(),
                        m: density.density().clone(),
                        c: density.coverage().clone(),
                    });
                    next_snapshot = Some(next_snapshot.unwrap() + s);
                }
            }
        }

        Ok(SimOutput { record, snapshots })
    }
}

/// Formats a simulation time for CSV columns and snapshot file names:
/// microsecond precision with trailing zeros trimmed.
pub fn format_time(t: f64) -> String {
    let mut s = format!("{t:.6}");
    while s.ends_with('0') {
        s.pop();
    }
    if s.ends_with('.') {
        s.pop();
    }
    s
}

fn fmt_metric(v: f64) -> String {
    if v == f64::INFINITY {
        "inf".to_string()
    } else {
        format!("{v}")
    }
}

/// Writes `trajectories.csv`, `metrics.csv` and `snapshots/field_<t>.csv`
/// under `out_dir`.
pub fn write_outputs(
    record: &SimRecord,
    snapshots: &[FieldSnapshot],
    out_dir: impl AsRef<Path>,
) -> Result<()> {
    let out_dir = out_dir.as_ref();
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;

    let traj_path = out_dir.join("trajectories.csv");
    let mut traj = String::from("t,agent_id,x,y,theta,omega\n");
    for step in &record.steps {
        for (i, a) in step.agents.iter().enumerate() {
            traj.push_str(&format!(
                "{},{},{},{},{},{}\n",
                format_time(step.t),
                i,
                a.x,
                a.y,
                a.theta,
                a.omega
            ));
        }
    }
    std::fs::write(&traj_path, traj).map_err(|e| Error::io(&traj_path, e))?;

    let metrics_path = out_dir.join("metrics.csv");
    let mut metrics = String::from(
        "t,eta,min_radius,min_boundary_clearance,min_agent_distance,t_coverage,t_solve,t_maneuver\n",
    );
    for step in &record.steps {
        metrics.push_str(&format!(
            "{},{},{},{},{},{:.6},{:.6},{:.6}\n",
            format_time(step.t),
            step.eta,
            fmt_metric(step.min_radius),
            step.min_boundary_clearance,
            fmt_metric(step.min_agent_distance),
            step.t_coverage,
            step.t_solve,
            step.t_maneuver
        ));
    }
    std::fs::write(&metrics_path, metrics).map_err(|e| Error::io(&metrics_path, e))?;

    if !snapshots.is_empty() {
        let snap_dir = out_dir.join("snapshots");
        std::fs::create_dir_all(&snap_dir).map_err(|e| Error::io(&snap_dir, e))?;
        for snap in snapshots {
            let path = snap_dir.join(format!("field_{}.csv", format_time(snap.t)));
            let mut body = String::from("node_id,u,m,c\n");
            for i in 0..snap.u.len() {
                body.push_str(&format!("{},{},{},{}\n", i + 1, snap.u[i], snap.m[i], snap.c[i]));
            }
            std::fs::write(&path, body).map_err(|e| Error::io(&path, e))?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gridmesh::{DiagonalStyle, GridSpec};
    use crate::mesh::write_mesh_file;
    use crate::scenario::load_scenario;

    fn write_square_mesh(dir: &Path) -> std::path::PathBuf {
        let mesh = GridSpec::with_diagonals(
            Point2::new(0.0, 0.0),
            0.125,
            16,
            16,
            DiagonalStyle::MirrorX,
        )
        .build()
        .unwrap();
        let path = dir.join("square.mesh");
        write_mesh_file(&mesh, &path).unwrap();
        path
    }

    fn trivial_cfg(dir: &Path) -> std::path::PathBuf {
        write_square_mesh(dir);
        let cfg = "hedac-scenario v1\n\
            mesh = square.mesh\n\
            alpha = 0.2\nbeta = 0.5\ndt = 0.4\nt_end = 4\n\
            density = uniform\n\
            [agent]\n\
            x = 0.5\ny = 0.5\ntheta = 0.3\nv = 0.1\nomega_max = 1.0\ndelta = 0.1\n\
            sensing = gaussian 1.5 0.1\n";
        let p = dir.join("trivial.cfg");
        std::fs::write(&p, cfg).unwrap();
        p
    }

    #[test]
    fn trivial_run_completes_with_progress() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = load_scenario(trivial_cfg(dir.path())).unwrap();
        let mut sim = Simulation::load(cfg).unwrap();
        let out = sim.run().unwrap();
        assert_eq!(out.record.steps.len(), 10);
        let last = out.record.steps.last().unwrap();
        assert!(last.eta > 0.0);
        assert!(last.min_boundary_clearance >= 0.1 - CLEARANCE_TOL);
        // Single agent: no pairwise distance.
        assert_eq!(last.min_agent_distance, f64::INFINITY);
        // Eta never decreases.
        let mut prev = 0.0;
        for row in &out.record.steps {
            assert!(row.eta >= prev - 1e-12);
            prev = row.eta;
        }
    }

    #[test]
    fn agent_inside_obstacle_rejected_by_name() {
        let dir = tempfile::tempdir().unwrap();
        let mut spec = GridSpec::rectangle(Point2::new(0.0, 0.0), 0.125, 16, 16);
        spec.add_obstacle(vec![(6, 10, 6, 10)]);
        let mesh = spec.build().unwrap();
        let mesh_path = dir.path().join("holed.mesh");
        write_mesh_file(&mesh, &mesh_path).unwrap();
        let cfg = "hedac-scenario v1\n\
            mesh = holed.mesh\n\
            alpha = 0.2\nbeta = 0.5\ndt = 0.4\nt_end = 4\n\
            density = uniform\n\
            [agent]\n\
            x = 1.0\ny = 1.0\ntheta = 0\nv = 0.1\nomega_max = 1.0\ndelta = 0.1\n\
            sensing = gaussian 1.5 0.1\n";
        let p = dir.path().join("bad.cfg");
        std::fs::write(&p, cfg).unwrap();
        let cfg = load_scenario(&p).unwrap();
        match Simulation::load(cfg) {
            Err(Error::InvalidScenario(msg)) => {
                assert!(msg.contains("agent 1"), "message: {msg}");
            }
            Err(other) => panic!("expected scenario rejection, got {other:?}"),
            Ok(_) => panic!("expected scenario rejection"),
        }
    }

    #[test]
    fn determinism_same_config_twice() {
        let dir = tempfile::tempdir().unwrap();
        let cfg_path = trivial_cfg(dir.path());
        let run = |path: &Path| {
            let cfg = load_scenario(path).unwrap();
            Simulation::load(cfg).unwrap().run().unwrap().record
        };
        let a = run(&cfg_path);
        let b = run(&cfg_path);
        assert!(a.same_trajectories(&b));
    }

    #[test]
    fn outputs_written_with_expected_shape() {
        let dir = tempfile::tempdir().unwrap();
        let mesh_path = write_square_mesh(dir.path());
        let _ = mesh_path;
        let cfg = "hedac-scenario v1\n\
            mesh = square.mesh\n\
            alpha = 0.2\nbeta = 0.5\ndt = 0.4\nt_end = 4\n\
            density = uniform\n\
            snapshot_every = 2\n\
            [agent]\n\
            x = 0.5\ny = 0.5\ntheta = 0.3\nv = 0.1\nomega_max = 1.0\ndelta = 0.1\n\
            sensing = gaussian 1.5 0.1\n\
            [agent]\n\
            x = 1.5\ny = 1.5\ntheta = -2.0\nv = 0.1\nomega_max = 1.0\ndelta = 0.1\n\
            sensing = gaussian 1.5 0.1\n";
        let p = dir.path().join("two.cfg");
        std::fs::write(&p, cfg).unwrap();
        let cfg = load_scenario(&p).unwrap();
        let mut sim = Simulation::load(cfg).unwrap();
        let out = sim.run().unwrap();
        let out_dir = dir.path().join("out");
        write_outputs(&out.record, &out.snapshots, &out_dir).unwrap();

        let traj = std::fs::read_to_string(out_dir.join("trajectories.csv")).unwrap();
        // Header + 10 steps x 2 agents.
        assert_eq!(traj.lines().count(), 1 + 20);
        assert!(traj.starts_with("t,agent_id,x,y,theta,omega\n"));

        let metrics = std::fs::read_to_string(out_dir.join("metrics.csv")).unwrap();
        assert_eq!(metrics.lines().count(), 1 + 10);

        // Snapshots at t = 0, 2, 4: uniform m0 on a 2x2 domain is 1/4.
        let snap0 = std::fs::read_to_string(out_dir.join("snapshots/field_0.csv")).unwrap();
        for line in snap0.lines().skip(1) {
            let m: f64 = line.split(',').nth(2).unwrap().parse().unwrap();
            assert!((m - 0.25).abs() < 1e-10);
        }
        assert!(out_dir.join("snapshots/field_2.csv").exists());
        assert!(out_dir.join("snapshots/field_4.csv").exists());
    }

    #[test]
    fn empty_record_writes_headers_only() {
        let dir = tempfile::tempdir().unwrap();
        let record = SimRecord::default();
        write_outputs(&record, &[], dir.path()).unwrap();
        let traj = std::fs::read_to_string(dir.path().join("trajectories.csv")).unwrap();
        assert_eq!(traj, "t,agent_id,x,y,theta,omega\n");
        let metrics = std::fs::read_to_string(dir.path().join("metrics.csv")).unwrap();
        assert_eq!(metrics.lines().count(), 1);
        assert!(!dir.path().join("snapshots").exists());
    }

    #[test]
    fn time_formatting() {
        assert_eq!(format_time(0.4), "0.4");
        assert_eq!(format_time(60.000000000000007), "60");
        assert_eq!(format_time(1.2000000000000002), "1.2");
        assert_eq!(format_time(0.0), "0");
    }
}
