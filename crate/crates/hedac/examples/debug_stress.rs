// Temporary diagnostic: replay a scenario with per-step avoidance dumps.
use hedac::avoidance::*;
use hedac::coverage::TargetDensity;
use hedac::dubins::*;
use hedac::fem::{assemble, eval_gradient};
use hedac::mesh::load_mesh;
use hedac::scenario::load_scenario;

fn main() {
    let scenario = std::env::args().nth(1).unwrap_or("scenarios/gap2.cfg".into());
    let cfg = load_scenario(&scenario).unwrap();
    let (geom, mesh) = load_mesh(&cfg.mesh_path).unwrap();
    let mut sys = assemble(&mesh, cfg.alpha, cfg.beta).unwrap();
    sys.factorize().unwrap();
    let mut agents: Vec<AgentState> = cfg
        .agents
        .iter()
        .enumerate()
        .map(|(i, s)| s.build(i).unwrap())
        .collect();
    let raw = match cfg.density {
        hedac::scenario::DensitySpec::Gaussian { cx, cy, sigma } => {
            hedac::fem::NodalField::from_vec(
                mesh.nodes()
                    .iter()
                    .map(|p| {
                        let d2 = (p.x - cx).powi(2) + (p.y - cy).powi(2);
                        (-d2 / (2.0 * sigma * sigma)).exp()
                    })
                    .collect(),
            )
        }
        _ => hedac::fem::NodalField::constant(mesh.node_count(), 1.0),
    };
    let m0 = hedac::coverage::normalize_initial_density(&raw, &sys).unwrap();
    let mut density = TargetDensity::new(&mesh, &sys, m0).unwrap();
    let dt = cfg.dt;

    // previous step's accepted routes (per agent) and areas
    let mut prev_info: Vec<String> = vec![];

    for k in 0..cfg.step_count() {
        let t = dt * (k + 1) as f64;
        density.update_density();
        let u = sys.solve_potential(density.density()).unwrap();
        let mut dtheta_h = vec![0.0; agents.len()];
        for (i, a) in agents.iter().enumerate() {
            let g = eval_gradient(&mesh, &u, a.position).unwrap();
            dtheta_h[i] = desired_turn_rate(a, g, dt) * dt;
        }
        let clusters = cluster_agents(&agents, dt);
        let mut chosen = dtheta_h.clone();
        for cluster in &clusters {
            let ch: Vec<f64> = cluster.iter().map(|&i| dtheta_h[i]).collect();
            let mut problem =
                ManeuverProblem::new(cluster.clone(), ch, dt, &agents, &geom).unwrap();
            let routes = problem.routes_for(&problem.dtheta).unwrap();
            let (amin, _) = minimal_collision_area(&problem, &routes).unwrap();
            if amin > 0.0 {
                match solve_maneuver(&mut problem) {
                    Ok(sol) => {
                        for (s, &ai) in sol.iter().zip(cluster) {
                            chosen[ai] = *s;
                        }
                    }
                    Err(e) => {
                        println!("t={t:.1} FAILURE cluster {cluster:?}");
                        println!("prev step info:");
                        for s in &prev_info { println!("  {s}"); }
                        println!("now:");
                        for &i in cluster {
                            let r = escape_routes_at(&agents[i]);
                            let ol = geom.circle_outside_area(r.left, r.clearance_radius);
                            let or_ = geom.circle_outside_area(r.right, r.clearance_radius);
                            let dl = geom.distance_to_boundary(r.left);
                            let dr = geom.distance_to_boundary(r.right);
                            println!(
                                "  agent{i} pose=({:.17},{:.17},{:.17}) L=({:.17},{:.17}) out={ol:.6e} d={dl:.9} | R=({:.17},{:.17}) out={or_:.6e} d={dr:.9}",
                                agents[i].position.x, agents[i].position.y, agents[i].heading,
                                r.left.x, r.left.y, r.right.x, r.right.y
                            );
                        }
                        println!("  err: {e}");
                        return;
                    }
                }
            }
        }
        // retain diagnostics about the circles the chosen motion commits to
        prev_info.clear();
        for (i, a) in agents.iter().enumerate() {
            let r = escape_routes_after(a, chosen[i], dt).unwrap();
            let ol = geom.circle_outside_area(r.left, r.clearance_radius);
            let or_ = geom.circle_outside_area(r.right, r.clearance_radius);
            prev_info.push(format!(
                "agent{i} t={t:.1} chosen={:.6} post-L=({:.17},{:.17}) out={ol:.6e} | post-R=({:.17},{:.17}) out={or_:.6e}",
                chosen[i], r.left.x, r.left.y, r.right.x, r.right.y
            ));
        }
        for (i, a) in agents.iter_mut().enumerate() {
            *a = step_agent(a, chosen[i] / dt, dt).unwrap();
        }
        density.accumulate_coverage(&mesh, &agents, dt);
    }
    println!("completed OK");
}
