//! Guaranteed collision avoidance via escape-route clearance circles.
//!
//! Every agent always has two radical escape routes: committing to a full
//! left or right turn keeps it on a fixed circle of minimum turning radius,
//! so the inflated clearance circle around that turn circle never moves. A
//! maneuver (vector of turning angles, one per agent) is safe when at least
//! one combination of per-agent escape sides has zero collision area, where
//! the collision area sums clearance-circle overlaps between agents and with
//! the domain exterior. When the potential-field command is unsafe, a Cyclic
//! Coordinate Search with Golden Section line searches picks the feasible
//! maneuver closest to it.

use crate::dubins::{step_agent, AgentState};
use crate::error::{Error, Result};
use crate::geom::{circle_circle_intersection_area, DomainGeometry, Point2};

/// Acceptance tolerance on minimal collision areas. Feasibility during
/// optimization is exact: separated circles and interior disks evaluate to
/// an area of exactly zero (clipping roundoff is absorbed inside the
/// geometry layer), so newly accepted maneuvers have zero area outright.
pub const AREA_FLOOR: f64 = 1e-9;

/// Tolerance when re-evaluating inherited bound maneuvers (full turns whose
/// clearance circles were certified on an earlier step). Boundary-clip
/// residue can drift across the geometry layer's roundoff guard between
/// evaluations; this band absorbs the drift. It admits no real clearance
/// loss: circumscribed-polygon slivers of this size still keep the true
/// disk strictly inside the domain, and pairwise circle overlaps are never
/// tolerated at all.
pub const INHERITED_AREA_TOL: f64 = 1e-10;

/// Hard cap on cluster size; the combination enumeration is `2^n`.
pub const MAX_CLUSTER_SIZE: usize = 16;

const GSS_MIN_ITERS: usize = 20;
const GSS_MAX_ITERS: usize = 40;
const MAX_SWEEPS: usize = 5;
const EPS_IMPROVEMENT: f64 = 1e-12;

/// Left/right escape-route clearance circles for one agent pose.
///
/// `left` is the center of the full-left-turn circle (offset `+R`
/// perpendicular to the heading), `right` the full-right-turn center. Both
/// clearance circles have radius `R + delta`.
#[derive(Debug, Clone, Copy)]
pub struct EscapeRoutes {
    pub left: Point2,
    pub right: Point2,
    pub clearance_radius: f64,
}

/// Escape-side selection inside combination indices: bit 0 picks the
/// right-turn circle, bit 1 the left-turn circle.
pub const SIDE_RIGHT: usize = 0;
pub const SIDE_LEFT: usize = 1;

impl EscapeRoutes {
    pub fn center(&self, side: usize) -> Point2 {
        if side == SIDE_LEFT {
            self.left
        } else {
            self.right
        }
    }
}

/// Clearance circles of the agent's current pose (no step applied); used for
/// the feasibility base case at `t = 0`.
pub fn escape_routes_at(agent: &AgentState) -> EscapeRoutes {
    let r = agent.min_turn_radius();
    let (sin_t, cos_t) = agent.heading.sin_cos();
    let perp = Point2::new(-sin_t, cos_t);
    EscapeRoutes {
        left: agent.position.add(perp.scale(r)),
        right: agent.position.sub(perp.scale(r)),
        clearance_radius: r + agent.clearance,
    }
}

/// Clearance circles after advancing the agent one step by the turning angle
/// `dtheta` (`|dtheta| <= omega_max * dt`). Committing to a bound angle keeps
/// the matching circle exactly where it was before the step.
pub fn escape_routes_after(agent: &AgentState, dtheta: f64, dt: f64) -> Result<EscapeRoutes> {
    let stepped = step_agent(agent, dtheta / dt, dt)?;
    Ok(escape_routes_at(&stepped))
}

/// One cluster's maneuver optimization problem.
#[derive(Debug)]
pub struct ManeuverProblem<'a> {
    /// Agent indices forming the cluster.
    pub cluster: Vec<usize>,
    /// Current trial turning angles (starts at the clamped desired angles).
    pub dtheta: Vec<f64>,
    /// Turning angles the potential field asked for.
    pub dtheta_h: Vec<f64>,
    /// Per-member bound `omega_max * dt`.
    pub bounds: Vec<f64>,
    pub dt: f64,
    agents: &'a [AgentState],
    geometry: &'a DomainGeometry,
}

impl<'a> ManeuverProblem<'a> {
    pub fn new(
        cluster: Vec<usize>,
        dtheta_h: Vec<f64>,
        dt: f64,
        agents: &'a [AgentState],
        geometry: &'a DomainGeometry,
    ) -> Result<Self> {
        if cluster.is_empty() || cluster.len() != dtheta_h.len() {
            return Err(Error::ManeuverInfeasible(
                "cluster and desired angles must be nonempty and equal length".into(),
            ));
        }
        if cluster.len() > MAX_CLUSTER_SIZE {
            return Err(Error::ManeuverInfeasible(format!(
                "cluster of {} agents exceeds the cap of {MAX_CLUSTER_SIZE}",
                cluster.len()
            )));
        }
        let bounds: Vec<f64> = cluster
            .iter()
            .map(|&i| agents[i].omega_max * dt)
            .collect();
        let dtheta: Vec<f64> = dtheta_h
            .iter()
            .zip(&bounds)
            .map(|(&h, &b)| h.clamp(-b, b))
            .collect();
        Ok(ManeuverProblem {
            cluster,
            dtheta,
            dtheta_h,
            bounds,
            dt,
            agents,
            geometry,
        })
    }

    pub fn member(&self, k: usize) -> &AgentState {
        &self.agents[self.cluster[k]]
    }

    pub fn geometry(&self) -> &DomainGeometry {
        self.geometry
    }

    /// Escape routes of every member after applying the trial angles.
    pub fn routes_for(&self, dtheta: &[f64]) -> Result<Vec<EscapeRoutes>> {
        self.cluster
            .iter()
            .zip(dtheta)
            .map(|(&i, &dth)| escape_routes_after(&self.agents[i], dth, self.dt))
            .collect()
    }

    /// Objective: squared distance from the desired turning angles.
    pub fn objective(&self, dtheta: &[f64]) -> f64 {
        self.dtheta_h
            .iter()
            .zip(dtheta)
            .map(|(h, x)| (h - x) * (h - x))
            .sum()
    }
}

/// Collision area of escape-route combination `j`: the bits of `j` select
/// each member's circle (0 = right, 1 = left); the area sums pairwise circle
/// overlaps plus each circle's overlap with the domain exterior.
pub fn combination_area(problem: &ManeuverProblem, routes: &[EscapeRoutes], j: usize) -> f64 {
    let n = routes.len();
    debug_assert!(j < (1usize << n));
    let geom = problem.geometry;
    let mut area = 0.0;
    for i in 0..n {
        let ci = routes[i].center((j >> i) & 1);
        let ri = routes[i].clearance_radius;
        area += geom.circle_outside_area(ci, ri);
        for k in (i + 1)..n {
            let ck = routes[k].center((j >> k) & 1);
            area += circle_circle_intersection_area(ci, ri, ck, routes[k].clearance_radius);
        }
    }
    area
}

/// Pairwise-lens and outside-area tables for one set of routes.
struct AreaTables {
    outside: Vec<[f64; 2]>,
    lens: Vec<[[f64; 2]; 2]>,
}

impl AreaTables {
    fn build(geom: &DomainGeometry, routes: &[EscapeRoutes]) -> AreaTables {
        let n = routes.len();
        let outside: Vec<[f64; 2]> = routes
            .iter()
            .map(|r| {
                [
                    geom.circle_outside_area(r.center(0), r.clearance_radius),
                    geom.circle_outside_area(r.center(1), r.clearance_radius),
                ]
            })
            .collect();
        let mut lens = Vec::with_capacity(n * (n - 1) / 2);
        for i in 0..n {
            for k in (i + 1)..n {
                lens.push(pair_lens(&routes[i], &routes[k]));
            }
        }
        AreaTables { outside, lens }
    }

    /// Collision area of combination `j` split into boundary and pairwise
    /// contributions.
    fn combination_split(&self, n: usize, j: usize) -> (f64, f64) {
        let mut outside = 0.0;
        for i in 0..n {
            outside += self.outside[i][(j >> i) & 1];
        }
        let mut lens = 0.0;
        let mut p = 0usize;
        for i in 0..n {
            for k in (i + 1)..n {
                lens += self.lens[p][(j >> i) & 1][(j >> k) & 1];
                p += 1;
            }
        }
        (outside, lens)
    }

    /// True when combination `j` is collision-free under the inherited
    /// tolerance: pairwise overlaps exactly zero, boundary residue within
    /// [`INHERITED_AREA_TOL`].
    fn combination_is_safe(&self, n: usize, j: usize) -> bool {
        let (outside, lens) = self.combination_split(n, j);
        lens == 0.0 && outside <= INHERITED_AREA_TOL
    }

    /// Exact minimum over all `2^n` combinations, ties to the lowest index.
    fn minimum(&self, n: usize) -> (f64, usize) {
        let mut best = f64::INFINITY;
        let mut best_j = 0usize;
        for j in 0..(1usize << n) {
            let mut area = 0.0;
            for i in 0..n {
                area += self.outside[i][(j >> i) & 1];
            }
            let mut p = 0usize;
            for i in 0..n {
                for k in (i + 1)..n {
                    area += self.lens[p][(j >> i) & 1][(j >> k) & 1];
                    p += 1;
                }
            }
            if area < best {
                best = area;
                best_j = j;
            }
        }
        (best, best_j)
    }
}

fn pair_lens(a: &EscapeRoutes, b: &EscapeRoutes) -> [[f64; 2]; 2] {
    let mut out = [[0.0; 2]; 2];
    for (sa, row) in out.iter_mut().enumerate() {
        for (sb, v) in row.iter_mut().enumerate() {
            *v = circle_circle_intersection_area(
                a.center(sa),
                a.clearance_radius,
                b.center(sb),
                b.clearance_radius,
            );
        }
    }
    out
}

/// Exact minimum collision area over every escape-route combination,
/// together with the minimizing combination index.
pub fn minimal_collision_area(
    problem: &ManeuverProblem,
    routes: &[EscapeRoutes],
) -> Result<(f64, usize)> {
    let n = routes.len();
    if n > MAX_CLUSTER_SIZE {
        return Err(Error::ManeuverInfeasible(format!(
            "cluster of {n} agents exceeds the cap of {MAX_CLUSTER_SIZE}"
        )));
    }
    if n == 0 {
        return Ok((0.0, 0));
    }
    Ok(AreaTables::build(problem.geometry, routes).minimum(n))
}

/// Groups agents whose maneuvers can interact within one control step:
/// connected components of the pairwise criterion
/// `|z1 - z2| <= (2R + delta + v dt) of each side`. Components are returned
/// with ascending member indices, ordered by their smallest member.
pub fn cluster_agents(agents: &[AgentState], dt: f64) -> Vec<Vec<usize>> {
    let n = agents.len();
    let reach: Vec<f64> = agents
        .iter()
        .map(|a| 2.0 * a.min_turn_radius() + a.clearance + a.speed * dt)
        .collect();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut Vec<usize>, mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for i in 0..n {
        for k in (i + 1)..n {
            if agents[i].position.dist(agents[k].position) <= reach[i] + reach[k] {
                let (ri, rk) = (find(&mut parent, i), find(&mut parent, k));
                if ri != rk {
                    parent[ri.max(rk)] = ri.min(rk);
                }
            }
        }
    }
    let mut clusters: Vec<Vec<usize>> = Vec::new();
    let mut root_slot: Vec<Option<usize>> = vec![None; n];
    for i in 0..n {
        let r = find(&mut parent, i);
        match root_slot[r] {
            Some(slot) => clusters[slot].push(i),
            None => {
                root_slot[r] = Some(clusters.len());
                clusters.push(vec![i]);
            }
        }
    }
    clusters
}

/// Lexicographic trial quality: smaller collision area wins; equal areas fall
/// back to the objective.
#[derive(Debug, Clone, Copy, PartialEq)]
struct TrialKey {
    area: f64,
    eps: f64,
}

impl TrialKey {
    fn better_than(&self, other: &TrialKey) -> bool {
        if self.area != other.area {
            self.area < other.area
        } else {
            self.eps < other.eps
        }
    }
}

/// Incremental evaluation state for the coordinate search: changing one
/// member's angle only refreshes that member's circles and pair entries.
struct ClusterEval<'p, 'a> {
    problem: &'p ManeuverProblem<'a>,
    dtheta: Vec<f64>,
    routes: Vec<EscapeRoutes>,
    tables: AreaTables,
}

impl<'p, 'a> ClusterEval<'p, 'a> {
    fn new(problem: &'p ManeuverProblem<'a>, dtheta: Vec<f64>) -> Result<Self> {
        let routes = problem.routes_for(&dtheta)?;
        let tables = AreaTables::build(problem.geometry, &routes);
        Ok(ClusterEval {
            problem,
            dtheta,
            routes,
            tables,
        })
    }

    fn set_coord(&mut self, ci: usize, x: f64) -> Result<()> {
        if self.dtheta[ci] == x {
            return Ok(());
        }
        self.dtheta[ci] = x;
        let agent = self.problem.member(ci);
        let route = escape_routes_after(agent, x, self.problem.dt)?;
        self.routes[ci] = route;
        let geom = self.problem.geometry;
        self.tables.outside[ci] = [
            geom.circle_outside_area(route.center(0), route.clearance_radius),
            geom.circle_outside_area(route.center(1), route.clearance_radius),
        ];
        let n = self.routes.len();
        let mut p = 0usize;
        for i in 0..n {
            for k in (i + 1)..n {
                if i == ci || k == ci {
                    self.tables.lens[p] = pair_lens(&self.routes[i], &self.routes[k]);
                }
                p += 1;
            }
        }
        Ok(())
    }

    fn key(&self) -> TrialKey {
        let (area, _) = self.tables.minimum(self.routes.len());
        TrialKey {
            area,
            eps: self.problem.objective(&self.dtheta),
        }
    }
}

/// Solves the cluster's maneuver: minimize the squared deviation from the
/// desired turning angles subject to zero collision area.
///
/// The search is a Cyclic Coordinate Search over the members' angles; each
/// coordinate runs a Golden Section Search on `[-omega_max dt, +omega_max dt]`
/// under the area-first comparison, with both interval endpoints and the
/// incumbent value always evaluated as candidates, so a coordinate only moves
/// when it improves. If the search ends infeasible, the bound combinations
/// (every member committed to a full turn, whose circles are exactly the
/// previous step's) are enumerated directly; failing even there violates the
/// feasibility-inheritance precondition and is a hard error.
pub fn solve_maneuver(problem: &mut ManeuverProblem) -> Result<Vec<f64>> {
    let n = problem.cluster.len();
    let start = problem.dtheta.clone();
    let mut eval = ClusterEval::new(problem, start.clone())?;
    let mut cur_key = eval.key();
    if cur_key.area == 0.0 {
        // The desired maneuver is already collision-free.
        problem.dtheta = start.clone();
        return Ok(start);
    }

    let invphi = (5.0f64.sqrt() - 1.0) / 2.0;
    for _sweep in 0..MAX_SWEEPS {
        let sweep_start = cur_key;
        for ci in 0..n {
            let hi = problem.bounds[ci];
            let lo = -hi;
            let mut best_x = eval.dtheta[ci];
            let mut best_key = cur_key;
            let probe = |x: f64,
                             eval: &mut ClusterEval,
                             best_x: &mut f64,
                             best_key: &mut TrialKey|
             -> Result<TrialKey> {
                eval.set_coord(ci, x)?;
                let key = eval.key();
                if key.better_than(best_key) {
                    *best_key = key;
                    *best_x = x;
                }
                Ok(key)
            };

            // Endpoints are always candidates: the full-turn bound keeps the
            // inherited collision-free circle stationary.
            probe(lo, &mut eval, &mut best_x, &mut best_key)?;
            probe(hi, &mut eval, &mut best_x, &mut best_key)?;

            let (mut a, mut b) = (lo, hi);
            let mut x1 = b - invphi * (b - a);
            let mut x2 = a + invphi * (b - a);
            let mut f1 = probe(x1, &mut eval, &mut best_x, &mut best_key)?;
            let mut f2 = probe(x2, &mut eval, &mut best_x, &mut best_key)?;
            let mut iters = 2usize;
            let width_tol = 1e-9 * (hi - lo).max(1e-30);
            while iters < GSS_MIN_ITERS || (b - a > width_tol && iters < GSS_MAX_ITERS) {
                if f1.better_than(&f2) || f1 == f2 {
                    b = x2;
                    x2 = x1;
                    f2 = f1;
                    x1 = b - invphi * (b - a);
                    f1 = probe(x1, &mut eval, &mut best_x, &mut best_key)?;
                } else {
                    a = x1;
                    x1 = x2;
                    f1 = f2;
                    x2 = a + invphi * (b - a);
                    f2 = probe(x2, &mut eval, &mut best_x, &mut best_key)?;
                }
                iters += 1;
            }

            eval.set_coord(ci, best_x)?;
            cur_key = best_key;
        }
        let improved = cur_key.area < sweep_start.area
            || (cur_key.area == sweep_start.area
                && cur_key.eps < sweep_start.eps - EPS_IMPROVEMENT);
        if !improved {
            break;
        }
    }

    let mut result = eval.dtheta.clone();
    if cur_key.area > 0.0 {
        result = bound_combination_fallback(problem)?;
    }

    // Independent feasibility recheck of the returned maneuver.
    let routes = problem.routes_for(&result)?;
    let tables = AreaTables::build(problem.geometry, &routes);
    let n_routes = routes.len();
    let safe = (0..(1usize << n_routes)).any(|j| tables.combination_is_safe(n_routes, j));
    if !safe {
        let (area, _) = tables.minimum(n_routes);
        return Err(Error::ManeuverInfeasible(format!(
            "optimized maneuver still collides (A_min = {area:.3e} m^2); cluster {:?}, \
             desired angles {:?}, returned angles {:?}, poses {:?}",
            problem.cluster,
            problem.dtheta_h,
            result,
            problem
                .cluster
                .iter()
                .map(|&i| {
                    let a = &problem.agents[i];
                    (a.position.x, a.position.y, a.heading)
                })
                .collect::<Vec<_>>()
        )));
    }
    problem.dtheta = result.clone();
    Ok(result)
}

/// Enumerates the `2^n` all-bound maneuvers. Feasibility inheritance says at
/// least one is collision-free: a full turn keeps the matching clearance
/// circle from the previous step stationary. Picks the feasible one closest
/// to the desired angles.
fn bound_combination_fallback(problem: &ManeuverProblem) -> Result<Vec<f64>> {
    let n = problem.cluster.len();
    // Composite routes: per member, the left circle of the full-left pose and
    // the right circle of the full-right pose.
    let mut routes = Vec::with_capacity(n);
    for k in 0..n {
        let agent = problem.member(k);
        let b = problem.bounds[k];
        let left = escape_routes_after(agent, b, problem.dt)?;
        let right = escape_routes_after(agent, -b, problem.dt)?;
        routes.push(EscapeRoutes {
            left: left.left,
            right: right.right,
            clearance_radius: left.clearance_radius,
        });
    }
    let tables = AreaTables::build(problem.geometry, &routes);
    let mut best: Option<(f64, Vec<f64>)> = None;
    for j in 0..(1usize << n) {
        if !tables.combination_is_safe(n, j) {
            continue;
        }
        let dtheta: Vec<f64> = (0..n)
            .map(|i| {
                if (j >> i) & 1 == SIDE_LEFT {
                    problem.bounds[i]
                } else {
                    -problem.bounds[i]
                }
            })
            .collect();
        let eps = problem.objective(&dtheta);
        if best.as_ref().map_or(true, |(e, _)| eps < *e) {
            best = Some((eps, dtheta));
        }
    }
    best.map(|(_, d)| d).ok_or_else(|| {
        Error::ManeuverInfeasible(format!(
            "no bound escape-route combination is collision-free; cluster {:?}, poses {:?}",
            problem.cluster,
            problem
                .cluster
                .iter()
                .map(|&i| {
                    let a = &problem.agents[i];
                    (a.position.x, a.position.y, a.heading)
                })
                .collect::<Vec<_>>()
        ))
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coverage::SensingFunction;
    use crate::geom::Polygon;
    use rand::{Rng, SeedableRng};

    fn open_square(side: f64) -> DomainGeometry {
        let outer = Polygon::new(vec![
            Point2::new(0.0, 0.0),
            Point2::new(side, 0.0),
            Point2::new(side, side),
            Point2::new(0.0, side),
        ])
        .unwrap();
        DomainGeometry::new(outer, vec![]).unwrap()
    }

    fn agent(id: usize, x: f64, y: f64, theta: f64) -> AgentState {
        // Case-1-style parameters: v = 0.1, omega_max = 1 (R = 0.1), delta = 0.1.
        AgentState::new(
            id,
            Point2::new(x, y),
            theta,
            0.1,
            1.0,
            0.1,
            SensingFunction::gaussian(1.5, 0.1).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn escape_route_centers_perpendicular() {
        // theta = 0 at the origin, dtheta = 0, v*dt = 1, R = 1.
        let a = AgentState::new(
            0,
            Point2::new(0.0, 0.0),
            0.0,
            1.0,
            1.0,
            0.2,
            SensingFunction::gaussian(1.0, 0.1).unwrap(),
        )
        .unwrap();
        let routes = escape_routes_after(&a, 0.0, 1.0).unwrap();
        assert!(routes.left.dist(Point2::new(1.0, 1.0)) < 1e-12);
        assert!(routes.right.dist(Point2::new(1.0, -1.0)) < 1e-12);
        assert!((routes.clearance_radius - 1.2).abs() < 1e-12);
    }

    #[test]
    fn escape_routes_mirror() {
        let a = agent(0, 0.5, 0.5, 0.73);
        let b = agent(1, 0.5, -0.5, -0.73);
        let ra = escape_routes_after(&a, 0.2, 0.4).unwrap();
        let rb = escape_routes_after(&b, -0.2, 0.4).unwrap();
        assert!((ra.left.x - rb.right.x).abs() < 1e-12);
        assert!((ra.left.y + rb.right.y).abs() < 1e-12);
        assert!((ra.right.x - rb.left.x).abs() < 1e-12);
        assert!((ra.right.y + rb.left.y).abs() < 1e-12);
    }

    #[test]
    fn full_turn_keeps_active_circle_stationary() {
        let a = agent(0, 1.3, 0.8, 0.4);
        let dt = 0.4;
        let before = escape_routes_at(&a);
        let left = escape_routes_after(&a, a.omega_max * dt, dt).unwrap();
        assert!(
            left.left.dist(before.left) < 1e-9,
            "left circle drifted {}",
            left.left.dist(before.left)
        );
        let right = escape_routes_after(&a, -a.omega_max * dt, dt).unwrap();
        assert!(right.right.dist(before.right) < 1e-9);
    }

    #[test]
    fn combination_area_single_agent_open_space() {
        let geom = open_square(10.0);
        let agents = vec![agent(0, 5.0, 5.0, 0.3)];
        let problem = ManeuverProblem::new(vec![0], vec![0.1], 0.4, &agents, &geom).unwrap();
        let routes = problem.routes_for(&[0.1]).unwrap();
        assert_eq!(combination_area(&problem, &routes, 0), 0.0);
        assert_eq!(combination_area(&problem, &routes, 1), 0.0);
    }

    #[test]
    fn combination_area_coincident_agents_matches_lens_formula() {
        let geom = open_square(10.0);
        let agents = vec![agent(0, 5.0, 5.0, 0.0), agent(1, 5.0, 5.0, 0.0)];
        let problem =
            ManeuverProblem::new(vec![0, 1], vec![0.0, 0.0], 0.4, &agents, &geom).unwrap();
        let routes = problem.routes_for(&[0.0, 0.0]).unwrap();
        let rc = routes[0].clearance_radius;
        let full = std::f64::consts::PI * rc * rc;
        // Same side: circles coincide, lens is the full circle.
        assert!((combination_area(&problem, &routes, 0b00) - full).abs() < 1e-12);
        assert!((combination_area(&problem, &routes, 0b11) - full).abs() < 1e-12);
        // Opposite sides: centers 2R apart.
        let expect = circle_circle_intersection_area(
            Point2::new(0.0, 0.0),
            rc,
            Point2::new(0.0, 0.2),
            rc,
        );
        assert!((combination_area(&problem, &routes, 0b01) - expect).abs() < 1e-12);
        for j in 0..4usize {
            assert!(combination_area(&problem, &routes, j) > 0.0);
        }
    }

    #[test]
    fn combination_area_wall_side() {
        let geom = open_square(10.0);
        // Heading +x along the bottom wall; the right circle dips below it.
        let agents = vec![agent(0, 5.0, 0.25, 0.0)];
        let problem = ManeuverProblem::new(vec![0], vec![0.0], 0.4, &agents, &geom).unwrap();
        let routes = problem.routes_for(&[0.0]).unwrap();
        // Right circle center near (5, 0.15), radius 0.2: crosses y = 0.
        assert!(combination_area(&problem, &routes, SIDE_RIGHT) > 1e-4);
        // Left circle center near (5, 0.35), radius 0.2: clear of the wall.
        assert_eq!(combination_area(&problem, &routes, SIDE_LEFT << 0), 0.0);

        // Half-plane oracle: the outside area of the right circle matches the
        // circular-segment formula for a straight wall.
        let r = routes[0].clearance_radius;
        let d = routes[0].right.y; // distance from center to the wall
        let seg = r * r * (d / r).acos() - d * (r * r - d * d).sqrt();
        let got = combination_area(&problem, &routes, SIDE_RIGHT);
        assert!((got - seg).abs() / seg < 6e-3, "got {got}, segment {seg}");
    }

    #[test]
    fn minimal_area_matches_direct_enumeration() {
        let geom = open_square(4.0);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..50 {
            let agents: Vec<AgentState> = (0..3)
                .map(|i| {
                    agent(
                        i,
                        rng.gen_range(0.5..3.5),
                        rng.gen_range(0.5..3.5),
                        rng.gen_range(-3.1..3.1),
                    )
                })
                .collect();
            let dth: Vec<f64> = (0..3).map(|_| rng.gen_range(-0.4..0.4)).collect();
            let problem =
                ManeuverProblem::new(vec![0, 1, 2], dth.clone(), 0.4, &agents, &geom).unwrap();
            let routes = problem.routes_for(&dth).unwrap();
            let (amin, jmin) = minimal_collision_area(&problem, &routes).unwrap();
            // Independent route: direct evaluation of every combination.
            let mut expect = f64::INFINITY;
            let mut expect_j = 0;
            for j in 0..8usize {
                let a = combination_area(&problem, &routes, j);
                if a < expect {
                    expect = a;
                    expect_j = j;
                }
            }
            assert!((amin - expect).abs() < 1e-12);
            assert_eq!(jmin, expect_j);
        }
    }

    #[test]
    fn minimal_area_all_clear_single() {
        let geom = open_square(10.0);
        let agents = vec![agent(0, 5.0, 5.0, 1.0)];
        let problem = ManeuverProblem::new(vec![0], vec![0.0], 0.4, &agents, &geom).unwrap();
        let routes = problem.routes_for(&[0.0]).unwrap();
        assert_eq!(minimal_collision_area(&problem, &routes).unwrap(), (0.0, 0));
    }

    #[test]
    fn head_on_pair_has_feasible_opposite_sides() {
        let geom = open_square(10.0);
        // Agent centers a hair beyond 2(R + delta) apart, facing each other.
        // Committing both to full left turns keeps their left circles
        // stationary; those circles sit on opposite sides of the approach
        // line, so one combination stays collision-free.
        let eps = 0.01;
        let gap = 2.0 * (0.1 + 0.1) + eps;
        let a = agent(0, 5.0 - gap / 2.0, 5.0, 0.0);
        let b = agent(1, 5.0 + gap / 2.0, 5.0, std::f64::consts::PI);
        let agents = vec![a, b];
        let dt = 0.4;
        let bound = 1.0 * dt;
        let problem =
            ManeuverProblem::new(vec![0, 1], vec![bound, bound], dt, &agents, &geom).unwrap();
        let routes = problem.routes_for(&[bound, bound]).unwrap();
        let (amin, _) = minimal_collision_area(&problem, &routes).unwrap();
        assert!(amin <= AREA_FLOOR, "A_min = {amin}");
        // The both-left combination is the collision-free one and its
        // circles straddle the approach line y = 5.
        let j = 0b11;
        assert!(combination_area(&problem, &routes, j) <= AREA_FLOOR);
        let ca = routes[0].center(1);
        let cb = routes[1].center(1);
        assert!((ca.y - 5.0) * (cb.y - 5.0) < 0.0, "circles on the same side");
    }

    #[test]
    fn clustering_examples() {
        let dt = 0.4;
        // Threshold per pair: 2 * (2R + delta + v dt) = 2 * 0.34 = 0.68.
        let far = vec![agent(0, 1.0, 1.0, 0.0), agent(1, 2.0, 1.0, 0.0)];
        assert_eq!(cluster_agents(&far, dt), vec![vec![0], vec![1]]);

        // Chain: a-b and b-c within threshold, a-c beyond.
        let chain = vec![
            agent(0, 1.0, 1.0, 0.0),
            agent(1, 1.6, 1.0, 0.0),
            agent(2, 2.2, 1.0, 0.0),
        ];
        assert_eq!(cluster_agents(&chain, dt), vec![vec![0, 1, 2]]);

        let spread: Vec<AgentState> =
            (0..5).map(|i| agent(i, i as f64 * 2.0, 0.0, 0.0)).collect();
        assert_eq!(cluster_agents(&spread, dt).len(), 5);
    }

    #[test]
    fn partition_soundness_random_poses() {
        // Agents in different clusters can never intersect clearance circles
        // within one step, whatever turning angles they pick.
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..30 {
            let agents: Vec<AgentState> = (0..4)
                .map(|i| {
                    agent(
                        i,
                        rng.gen_range(1.0..19.0),
                        rng.gen_range(1.0..19.0),
                        rng.gen_range(-3.1..3.1),
                    )
                })
                .collect();
            let dt = 0.4;
            let clusters = cluster_agents(&agents, dt);
            for ca in 0..clusters.len() {
                for cb in (ca + 1)..clusters.len() {
                    for &i in &clusters[ca] {
                        for &k in &clusters[cb] {
                            for _ in 0..5 {
                                let di = rng.gen_range(-0.4..0.4);
                                let dk = rng.gen_range(-0.4..0.4);
                                let ri = escape_routes_after(&agents[i], di, dt).unwrap();
                                let rk = escape_routes_after(&agents[k], dk, dt).unwrap();
                                for si in 0..2 {
                                    for sk in 0..2 {
                                        let lens = circle_circle_intersection_area(
                                            ri.center(si),
                                            ri.clearance_radius,
                                            rk.center(sk),
                                            rk.clearance_radius,
                                        );
                                        assert_eq!(lens, 0.0);
                                    }
                                }
                            }
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn solver_passes_through_feasible_command() {
        let geom = open_square(10.0);
        let agents = vec![agent(0, 5.0, 5.0, 0.0)];
        let dth_h = vec![0.17];
        let mut problem =
            ManeuverProblem::new(vec![0], dth_h.clone(), 0.4, &agents, &geom).unwrap();
        let out = solve_maneuver(&mut problem).unwrap();
        assert_eq!(out, dth_h);
        assert_eq!(problem.objective(&out), 0.0);
    }

    #[test]
    fn solver_turns_away_from_wall() {
        let geom = open_square(10.0);
        // Aimed straight at the right wall, close enough that going straight
        // is infeasible but both half-turns are clear.
        let a = agent(0, 9.78, 5.0, 0.0);
        let agents = vec![a];
        let mut problem = ManeuverProblem::new(vec![0], vec![0.0], 0.4, &agents, &geom).unwrap();
        let routes = problem.routes_for(&[0.0]).unwrap();
        let (a_straight, _) = minimal_collision_area(&problem, &routes).unwrap();
        assert!(a_straight > AREA_FLOOR, "straight-ahead should collide");
        let out = solve_maneuver(&mut problem).unwrap();
        let routes = problem.routes_for(&out).unwrap();
        let (amin, _) = minimal_collision_area(&problem, &routes).unwrap();
        assert!(amin <= AREA_FLOOR);
    }

    #[test]
    fn solver_resolves_symmetric_head_on_pair() {
        let geom = open_square(10.0);
        let a = agent(0, 4.75, 5.0, 0.0);
        let b = agent(1, 5.25, 5.0, std::f64::consts::PI);
        let agents = vec![a, b];
        let mut problem =
            ManeuverProblem::new(vec![0, 1], vec![0.0, 0.0], 0.4, &agents, &geom).unwrap();
        let out = solve_maneuver(&mut problem).unwrap();
        let routes = problem.routes_for(&out).unwrap();
        let (amin, jmin) = minimal_collision_area(&problem, &routes).unwrap();
        assert!(amin <= AREA_FLOOR, "A_min = {amin}");
        // The chosen combination's circles sit on opposite sides of the
        // approach line (head-on agents: equal bits are spatially opposite).
        let ca = routes[0].center(jmin & 1);
        let cb = routes[1].center((jmin >> 1) & 1);
        assert!((ca.y - 5.0) * (cb.y - 5.0) < 0.0, "circles on the same side");
    }
}
