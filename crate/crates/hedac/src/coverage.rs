//! Sensing footprints, accumulated coverage and the remaining target density.
//!
//! Coverage `c` accumulates nodal sensing intensity along agent trajectories;
//! the remaining density is `m = m0 * exp(-c)` and the surveying
//! accomplishment is `eta = 1 - ∫ m`.

use crate::dubins::AgentState;
use crate::error::{Error, Result};
use crate::fem::{HelmholtzSystem, NodalField};
use crate::geom::Point2;
use crate::mesh::TriMesh;

/// An agent's instantaneous sensing footprint, evaluated in the agent frame
/// (x axis along the heading). Every kind vanishes exactly beyond
/// `cutoff_radius`.
#[derive(Debug, Clone, PartialEq)]
pub struct SensingFunction {
    kind: SensingKind,
    cutoff_radius: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum SensingKind {
    /// `A * exp(-|r|^2 / (2 sigma^2))`, truncated at 4 sigma, keeping the
    /// truncation error under 4e-4 of the amplitude.
    GaussianRadial { amplitude: f64, sigma: f64 },
    /// Constant `A` inside a `width x height` box centered on the agent,
    /// width along the heading axis.
    Rectangle {
        width: f64,
        height: f64,
        amplitude: f64,
    },
    /// Forward-looking wedge: `peak * (1 - d/range)` for `d <= range` and
    /// bearing within `±half_angle` of the heading.
    Sector {
        half_angle: f64,
        range: f64,
        peak: f64,
    },
}

impl SensingFunction {
    pub fn gaussian(amplitude: f64, sigma: f64) -> Result<Self> {
        if !(amplitude >= 0.0) || !(sigma > 0.0) {
            return Err(Error::InvalidScenario(format!(
                "gaussian sensing needs amplitude >= 0 and sigma > 0 (got {amplitude}, {sigma})"
            )));
        }
        Ok(SensingFunction {
            kind: SensingKind::GaussianRadial { amplitude, sigma },
            cutoff_radius: 4.0 * sigma,
        })
    }

    pub fn rectangle(width: f64, height: f64, amplitude: f64) -> Result<Self> {
        if !(amplitude >= 0.0) || !(width > 0.0) || !(height > 0.0) {
            return Err(Error::InvalidScenario(format!(
                "rectangle sensing needs positive size and amplitude >= 0 \
                 (got {width}x{height}, {amplitude})"
            )));
        }
        Ok(SensingFunction {
            kind: SensingKind::Rectangle {
                width,
                height,
                amplitude,
            },
            cutoff_radius: 0.5 * width.hypot(height),
        })
    }

    pub fn sector(half_angle: f64, range: f64, peak: f64) -> Result<Self> {
        if !(half_angle > 0.0 && half_angle <= std::f64::consts::PI)
            || !(range > 0.0)
            || !(peak >= 0.0)
        {
            return Err(Error::InvalidScenario(format!(
                "sector sensing needs half_angle in (0, pi], range > 0, peak >= 0 \
                 (got {half_angle}, {range}, {peak})"
            )));
        }
        Ok(SensingFunction {
            kind: SensingKind::Sector {
                half_angle,
                range,
                peak,
            },
            cutoff_radius: range,
        })
    }

    pub fn kind(&self) -> &SensingKind {
        &self.kind
    }

    pub fn cutoff_radius(&self) -> f64 {
        self.cutoff_radius
    }

    /// Sensing intensity at local coordinates `r` (agent at the origin,
    /// heading along +x).
    pub fn value(&self, r: Point2) -> f64 {
        let d = r.norm();
        if d > self.cutoff_radius {
            return 0.0;
        }
        match self.kind {
            SensingKind::GaussianRadial { amplitude, sigma } => {
                amplitude * (-d * d / (2.0 * sigma * sigma)).exp()
            }
            SensingKind::Rectangle {
                width,
                height,
                amplitude,
            } => {
                if r.x.abs() <= 0.5 * width && r.y.abs() <= 0.5 * height {
                    amplitude
                } else {
                    0.0
                }
            }
            SensingKind::Sector {
                half_angle,
                range,
                peak,
            } => {
                if d > range {
                    return 0.0;
                }
                let bearing = if d == 0.0 { 0.0 } else { r.y.atan2(r.x) };
                if bearing.abs() <= half_angle {
                    peak * (1.0 - d / range)
                } else {
                    0.0
                }
            }
        }
    }
}

/// Uniform grid over mesh nodes so coverage updates only touch nodes near an
/// agent.
#[derive(Debug)]
pub struct NodeIndex {
    x0: f64,
    y0: f64,
    inv_cell: f64,
    nx: usize,
    ny: usize,
    cells: Vec<Vec<u32>>,
}

impl NodeIndex {
    pub fn build(mesh: &TriMesh) -> NodeIndex {
        let nodes = mesh.nodes();
        let mut lo = nodes[0];
        let mut hi = nodes[0];
        for p in nodes {
            lo.x = lo.x.min(p.x);
            lo.y = lo.y.min(p.y);
            hi.x = hi.x.max(p.x);
            hi.y = hi.y.max(p.y);
        }
        let extent = (hi.x - lo.x).max(hi.y - lo.y).max(1e-12);
        let n = ((nodes.len() as f64).sqrt().ceil() as usize).clamp(1, 2048);
        let cell = extent / n as f64;
        let nx = (((hi.x - lo.x) / cell).ceil() as usize).max(1);
        let ny = (((hi.y - lo.y) / cell).ceil() as usize).max(1);
        let inv_cell = 1.0 / cell;
        let mut cells = vec![Vec::new(); nx * ny];
        for (i, p) in nodes.iter().enumerate() {
            let ix = (((p.x - lo.x) * inv_cell).floor() as isize).clamp(0, nx as isize - 1) as usize;
            let iy = (((p.y - lo.y) * inv_cell).floor() as isize).clamp(0, ny as isize - 1) as usize;
            cells[iy * nx + ix].push(i as u32);
        }
        NodeIndex {
            x0: lo.x,
            y0: lo.y,
            inv_cell,
            nx,
            ny,
            cells,
        }
    }

    /// Visits every node within `radius` of `center` (plus grid slack).
    fn for_nodes_near(&self, center: Point2, radius: f64, mut f: impl FnMut(usize)) {
        let ix0 = (((center.x - radius - self.x0) * self.inv_cell).floor() as isize)
            .clamp(0, self.nx as isize - 1) as usize;
        let ix1 = (((center.x + radius - self.x0) * self.inv_cell).floor() as isize)
            .clamp(0, self.nx as isize - 1) as usize;
        let iy0 = (((center.y - radius - self.y0) * self.inv_cell).floor() as isize)
            .clamp(0, self.ny as isize - 1) as usize;
        let iy1 = (((center.y + radius - self.y0) * self.inv_cell).floor() as isize)
            .clamp(0, self.ny as isize - 1) as usize;
        for iy in iy0..=iy1 {
            for ix in ix0..=ix1 {
                for &i in &self.cells[iy * self.nx + ix] {
                    f(i as usize);
                }
            }
        }
    }
}

/// Normalized initial density, accumulated coverage and current density.
#[derive(Debug)]
pub struct TargetDensity {
    m0: NodalField,
    c: NodalField,
    m: NodalField,
    index: NodeIndex,
}

impl TargetDensity {
    /// Takes an already-normalized initial density (`∫ m0 = 1` within 1e-8).
    pub fn new(mesh: &TriMesh, system: &HelmholtzSystem, m0: NodalField) -> Result<Self> {
        if m0.len() != mesh.node_count() {
            return Err(Error::InvalidField(format!(
                "initial density has {} values, mesh has {} nodes",
                m0.len(),
                mesh.node_count()
            )));
        }
        let integral = system.integrate(&m0);
        if (integral - 1.0).abs() > 1e-8 {
            return Err(Error::InvalidField(format!(
                "initial density integrates to {integral}, expected 1"
            )));
        }
        let n = m0.len();
        Ok(TargetDensity {
            m: m0.clone(),
            m0,
            c: NodalField::zeros(n),
            index: NodeIndex::build(mesh),
        })
    }

    pub fn m0(&self) -> &NodalField {
        &self.m0
    }

    pub fn coverage(&self) -> &NodalField {
        &self.c
    }

    pub fn density(&self) -> &NodalField {
        &self.m
    }

    /// Adds `phi * dt` to the coverage at every node inside each agent's
    /// sensing cutoff, with the footprint rotated to the agent heading.
    pub fn accumulate_coverage(&mut self, mesh: &TriMesh, agents: &[AgentState], dt: f64) {
        debug_assert!(dt > 0.0);
        let nodes = mesh.nodes();
        for agent in agents {
            let z = agent.position;
            let (sin_t, cos_t) = agent.heading.sin_cos();
            let phi = &agent.sensing;
            let c = &mut self.c;
            self.index.for_nodes_near(z, phi.cutoff_radius(), |i| {
                let d = nodes[i].sub(z);
                // World offset rotated into the agent frame.
                let local = Point2::new(cos_t * d.x + sin_t * d.y, -sin_t * d.x + cos_t * d.y);
                let v = phi.value(local);
                if v != 0.0 {
                    c[i] += v * dt;
                }
            });
        }
    }

    /// Recomputes `m = m0 * exp(-c)` nodewise.
    pub fn update_density(&mut self) {
        for i in 0..self.m.len() {
            self.m[i] = self.m0[i] * (-self.c[i]).exp();
        }
    }

    /// Surveying accomplishment `eta = 1 - ∫ m` for the current density.
    pub fn accomplishment(&self, system: &HelmholtzSystem) -> f64 {
        1.0 - system.integrate(&self.m)
    }

    #[cfg(test)]
    pub(crate) fn coverage_mut(&mut self) -> &mut NodalField {
        &mut self.c
    }
}

/// Scales a nonnegative raw field so its mass-matrix integral is exactly 1.
pub fn normalize_initial_density(
    m0_raw: &NodalField,
    system: &HelmholtzSystem,
) -> Result<NodalField> {
    if !m0_raw.is_finite() || m0_raw.values().iter().any(|&v| v < 0.0) {
        return Err(Error::InvalidField(
            "initial density must be finite and nonnegative".into(),
        ));
    }
    let integral = system.integrate(m0_raw);
    if integral <= 0.0 {
        return Err(Error::InvalidField(
            "initial density is zero everywhere".into(),
        ));
    }
    let s = 1.0 / integral;
    Ok(NodalField::from_vec(
        m0_raw.values().iter().map(|v| v * s).collect(),
    ))
}
