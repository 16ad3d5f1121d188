//! Constant-speed agents with bounded turn rate, advanced by exact circular
//! arcs so the minimum-radius guarantee holds by construction.

use crate::coverage::SensingFunction;
use crate::error::{Error, Result};
use crate::geom::Point2;

/// Gradient magnitudes below this are treated as zero (hold heading).
pub const GRADIENT_FLOOR: f64 = 1e-12;

/// Turn rates below this step along a straight line instead of an arc.
pub const STRAIGHT_OMEGA_EPS: f64 = 1e-9;

/// Wraps an angle to `(-pi, pi]`.
pub fn wrap_angle(a: f64) -> f64 {
    let tau = 2.0 * std::f64::consts::PI;
    let mut r = a.rem_euclid(tau);
    if r > std::f64::consts::PI {
        r -= tau;
    }
    r
}

/// One agent's kinematic state and sensing configuration.
#[derive(Debug, Clone)]
pub struct AgentState {
    pub id: usize,
    /// Position `z` in meters.
    pub position: Point2,
    /// Heading from the +x axis, wrapped to `(-pi, pi]`.
    pub heading: f64,
    /// Constant speed in m/s.
    pub speed: f64,
    /// Turn-rate limit in rad/s; the minimum turning radius is `speed / omega_max`.
    pub omega_max: f64,
    /// Minimum allowed distance to boundaries and other agents, in meters.
    pub clearance: f64,
    pub sensing: SensingFunction,
}

impl AgentState {
    pub fn new(
        id: usize,
        position: Point2,
        heading: f64,
        speed: f64,
        omega_max: f64,
        clearance: f64,
        sensing: SensingFunction,
    ) -> Result<Self> {
        if !position.is_finite() || !heading.is_finite() {
            return Err(Error::InvalidScenario(format!(
                "agent {id}: non-finite pose"
            )));
        }
        if !(speed > 0.0) || !(omega_max > 0.0) || !(clearance > 0.0) {
            return Err(Error::InvalidScenario(format!(
                "agent {id}: speed, omega_max and clearance must be positive \
                 (got v={speed}, omega_max={omega_max}, delta={clearance})"
            )));
        }
        Ok(AgentState {
            id,
            position,
            heading: wrap_angle(heading),
            speed,
            omega_max,
            clearance,
            sensing,
        })
    }

    /// Minimum turning radius `R = v / omega_max`.
    pub fn min_turn_radius(&self) -> f64 {
        self.speed / self.omega_max
    }

    pub fn heading_vector(&self) -> Point2 {
        Point2::new(self.heading.cos(), self.heading.sin())
    }
}

/// Turn rate steering toward the potential gradient: the full correction
/// angle divided by the control step, clamped to the agent's limit.
///
/// Gradients below [`GRADIENT_FLOOR`] hold the current heading. A gradient
/// exactly opposite the heading turns left (`+omega_max`) as the
/// deterministic tie-break.
pub fn desired_turn_rate(agent: &AgentState, grad: Point2, dt: f64) -> f64 {
    debug_assert!(dt > 0.0);
    if grad.norm() < GRADIENT_FLOOR {
        return 0.0;
    }
    let h = agent.heading_vector();
    let cross = h.cross(grad);
    let dot = h.dot(grad);
    let psi = if cross == 0.0 && dot < 0.0 {
        std::f64::consts::PI
    } else {
        cross.atan2(dot)
    };
    (psi / dt).clamp(-agent.omega_max, agent.omega_max)
}

/// Advances the agent one control step with constant turn rate `omega`,
/// integrating the arc exactly. The instantaneous curvature radius
/// `v / |omega|` never drops below the minimum turning radius because
/// `|omega| <= omega_max` is enforced.
pub fn step_agent(agent: &AgentState, omega: f64, dt: f64) -> Result<AgentState> {
    if !(dt > 0.0) {
        return Err(Error::InvalidScenario(format!("non-positive dt {dt}")));
    }
    if omega.abs() > agent.omega_max + 1e-12 {
        return Err(Error::InvalidScenario(format!(
            "agent {}: turn rate {omega} exceeds limit {}",
            agent.id, agent.omega_max
        )));
    }
    let theta0 = agent.heading;
    let theta1 = wrap_angle(theta0 + omega * dt);
    let v = agent.speed;
    let z = agent.position;
    let position = if omega.abs() > STRAIGHT_OMEGA_EPS {
        let r = v / omega;
        Point2::new(
            z.x + r * (theta1.sin() - theta0.sin()),
            z.y + r * (theta0.cos() - theta1.cos()),
        )
    } else {
        Point2::new(z.x + v * dt * theta0.cos(), z.y + v * dt * theta0.sin())
    };
    let mut next = agent.clone();
    next.position = position;
    next.heading = theta1;
    Ok(next)
}

/// Instantaneous curvature radius for a commanded turn rate; `None` when the
/// motion is straight (unbounded radius).
pub fn curvature_radius(omega: f64, speed: f64) -> Option<f64> {
    if omega.abs() > STRAIGHT_OMEGA_EPS {
        Some(speed / omega.abs())
    } else {
        None
    }
}
