//! Scenario configuration files: flat `key = value` text with repeated
//! `[agent]` blocks.
//!
//! ```text
//! hedac-scenario v1
//! mesh = case1.mesh          # path relative to this file
//! alpha = 0.2
//! beta = 0.5
//! dt = 0.4
//! t_end = 600
//! density = uniform          # or: gaussian <cx> <cy> <sigma>
//! snapshot_every = 60        # optional, seconds
//! out_dir = out              # optional
//!
//! [agent]
//! x = 2.2
//! y = 1.2
//! theta = 0.0
//! v = 0.1
//! omega_max = 1.0
//! delta = 0.1
//! sensing = gaussian 1.5 0.1 # or: rect <w> <h> <amp> | sector <half_angle_deg> <range> <peak>
//! ```

use std::path::{Path, PathBuf};

use crate::coverage::SensingFunction;
use crate::dubins::AgentState;
use crate::error::{Error, Result};
use crate::geom::Point2;

/// Initial target-density specification.
#[derive(Debug, Clone, PartialEq)]
pub enum DensitySpec {
    Uniform,
    Gaussian { cx: f64, cy: f64, sigma: f64 },
}

/// One agent's initial pose and parameters.
#[derive(Debug, Clone)]
pub struct AgentSpec {
    pub x: f64,
    pub y: f64,
    pub theta: f64,
    pub v: f64,
    pub omega_max: f64,
    pub delta: f64,
    pub sensing: SensingFunction,
}

impl AgentSpec {
    pub fn build(&self, id: usize) -> Result<AgentState> {
        AgentState::new(
            id,
            Point2::new(self.x, self.y),
            self.theta,
            self.v,
            self.omega_max,
            self.delta,
            self.sensing.clone(),
        )
    }
}

/// Parsed scenario file.
#[derive(Debug, Clone)]
pub struct ScenarioConfig {
    /// Mesh path, resolved relative to the scenario file location.
    pub mesh_path: PathBuf,
    pub alpha: f64,
    pub beta: f64,
    pub dt: f64,
    pub t_end: f64,
    pub density: DensitySpec,
    pub agents: Vec<AgentSpec>,
    pub out_dir: Option<PathBuf>,
    /// Field-snapshot interval in seconds; `None` disables snapshots.
    pub snapshot_every: Option<f64>,
}

impl ScenarioConfig {
    pub fn step_count(&self) -> usize {
        (self.t_end / self.dt + 1e-9).floor() as usize
    }
}

pub fn load_scenario(path: impl AsRef<Path>) -> Result<ScenarioConfig> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_scenario(&text, path)
}

fn parse_scenario(text: &str, path: &Path) -> Result<ScenarioConfig> {
    let err = |line: usize, msg: String| Error::ScenarioParse {
        path: path.to_path_buf(),
        line,
        msg,
    };

    #[derive(Default)]
    struct AgentDraft {
        line: usize,
        x: Option<f64>,
        y: Option<f64>,
        theta: Option<f64>,
        v: Option<f64>,
        omega_max: Option<f64>,
        delta: Option<f64>,
        sensing: Option<SensingFunction>,
    }

    let mut mesh: Option<PathBuf> = None;
    let mut alpha: Option<f64> = None;
    let mut beta: Option<f64> = None;
    let mut dt: Option<f64> = None;
    let mut t_end: Option<f64> = None;
    let mut density: Option<DensitySpec> = None;
    let mut out_dir: Option<PathBuf> = None;
    let mut snapshot_every: Option<f64> = None;
    let mut drafts: Vec<AgentDraft> = Vec::new();
    let mut saw_header = false;

    for (idx, raw) in text.lines().enumerate() {
        let ln = idx + 1;
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        if !saw_header {
            if body != "hedac-scenario v1" {
                return Err(err(ln, "expected header `hedac-scenario v1`".into()));
            }
            saw_header = true;
            continue;
        }
        if body == "[agent]" {
            drafts.push(AgentDraft {
                line: ln,
                ..Default::default()
            });
            continue;
        }
        let (key, value) = body
            .split_once('=')
            .ok_or_else(|| err(ln, format!("expected `key = value`, got `{body}`")))?;
        let key = key.trim();
        let value = value.trim();
        let num = |what: &str| -> Result<f64> {
            value
                .parse::<f64>()
                .map_err(|_| err(ln, format!("bad number for `{what}`: `{value}`")))
        };

        if let Some(draft) = drafts.last_mut() {
            match key {
                "x" => draft.x = Some(num("x")?),
                "y" => draft.y = Some(num("y")?),
                "theta" => draft.theta = Some(num("theta")?),
                "v" => draft.v = Some(num("v")?),
                "omega_max" => draft.omega_max = Some(num("omega_max")?),
                "delta" => draft.delta = Some(num("delta")?),
                "sensing" => draft.sensing = Some(parse_sensing(value, ln, path)?),
                other => return Err(err(ln, format!("unknown agent key `{other}`"))),
            }
        } else {
            match key {
                "mesh" => {
                    let rel = PathBuf::from(value);
                    mesh = Some(match path.parent() {
                        Some(dir) if rel.is_relative() => dir.join(rel),
                        _ => rel,
                    });
                }
                "alpha" => alpha = Some(num("alpha")?),
                "beta" => beta = Some(num("beta")?),
                "dt" => dt = Some(num("dt")?),
                "t_end" => t_end = Some(num("t_end")?),
                "density" => density = Some(parse_density(value, ln, path)?),
                "out_dir" => out_dir = Some(PathBuf::from(value)),
                "snapshot_every" => snapshot_every = Some(num("snapshot_every")?),
                other => return Err(err(ln, format!("unknown key `{other}`"))),
            }
        }
    }
    if !saw_header {
        return Err(err(0, "empty scenario file".into()));
    }

    let require =
        |name: &str, v: Option<f64>| -> Result<f64> { v.ok_or_else(|| err(0, format!("missing `{name}`"))) };
    let alpha = require("alpha", alpha)?;
    let beta = require("beta", beta)?;
    let dt = require("dt", dt)?;
    let t_end = require("t_end", t_end)?;
    let mesh_path = mesh.ok_or_else(|| err(0, "missing `mesh`".into()))?;
    let density = density.ok_or_else(|| err(0, "missing `density`".into()))?;

    if !(alpha > 0.0) || !(beta > 0.0) {
        return Err(Error::InvalidScenario(format!(
            "alpha and beta must be positive (got {alpha}, {beta})"
        )));
    }
    if !(dt > 0.0) {
        return Err(Error::InvalidScenario(format!(
            "dt must be positive, got {dt}"
        )));
    }
    if t_end < dt {
        return Err(Error::InvalidScenario(format!(
            "t_end ({t_end}) must be at least one control step ({dt})"
        )));
    }
    if let Some(s) = snapshot_every {
        if !(s > 0.0) {
            return Err(Error::InvalidScenario(format!(
                "snapshot_every must be positive, got {s}"
            )));
        }
    }
    if drafts.is_empty() {
        return Err(Error::InvalidScenario("scenario has no agents".into()));
    }

    let mut agents = Vec::with_capacity(drafts.len());
    for (i, d) in drafts.into_iter().enumerate() {
        let missing = |what: &str, line: usize| Error::ScenarioParse {
            path: path.to_path_buf(),
            line,
            msg: format!("agent {} is missing `{what}`", i + 1),
        };
        let spec = AgentSpec {
            x: d.x.ok_or_else(|| missing("x", d.line))?,
            y: d.y.ok_or_else(|| missing("y", d.line))?,
            theta: d.theta.ok_or_else(|| missing("theta", d.line))?,
            v: d.v.ok_or_else(|| missing("v", d.line))?,
            omega_max: d.omega_max.ok_or_else(|| missing("omega_max", d.line))?,
            delta: d.delta.ok_or_else(|| missing("delta", d.line))?,
            sensing: d.sensing.ok_or_else(|| missing("sensing", d.line))?,
        };
        // Validate the numeric ranges eagerly.
        spec.build(i)?;
        agents.push(spec);
    }

    Ok(ScenarioConfig {
        mesh_path,
        alpha,
        beta,
        dt,
        t_end,
        density,
        agents,
        out_dir,
        snapshot_every,
    })
}

fn parse_density(value: &str, ln: usize, path: &Path) -> Result<DensitySpec> {
    let toks: Vec<&str> = value.split_whitespace().collect();
    let err = |msg: String| Error::ScenarioParse {
        path: path.to_path_buf(),
        line: ln,
        msg,
    };
    match toks.as_slice() {
        ["uniform"] => Ok(DensitySpec::Uniform),
        ["gaussian", cx, cy, sigma] => {
            let parse = |s: &str| {
                s.parse::<f64>()
                    .map_err(|_| err(format!("bad density parameter `{s}`")))
            };
            let sigma_v = parse(sigma)?;
            if !(sigma_v > 0.0) {
                return Err(err(format!(
                    "gaussian density sigma must be positive, got {sigma_v}"
                )));
            }
            Ok(DensitySpec::Gaussian {
                cx: parse(cx)?,
                cy: parse(cy)?,
                sigma: sigma_v,
            })
        }
        _ => Err(err(format!(
            "density must be `uniform` or `gaussian <cx> <cy> <sigma>`, got `{value}`"
        ))),
    }
}

fn parse_sensing(value: &str, ln: usize, path: &Path) -> Result<SensingFunction> {
    let toks: Vec<&str> = value.split_whitespace().collect();
    let err = |msg: String| Error::ScenarioParse {
        path: path.to_path_buf(),
        line: ln,
        msg,
    };
    let parse = |s: &str| {
        s.parse::<f64>()
            .map_err(|_| err(format!("bad sensing parameter `{s}`")))
    };
    match toks.as_slice() {
        ["gaussian", amp, sigma] => SensingFunction::gaussian(parse(amp)?, parse(sigma)?),
        ["rect", w, h, amp] => SensingFunction::rectangle(parse(w)?, parse(h)?, parse(amp)?),
        ["sector", half_deg, range, peak] => {
            SensingFunction::sector(parse(half_deg)?.to_radians(), parse(range)?, parse(peak)?)
        }
        _ => Err(err(format!(
            "sensing must be `gaussian <amp> <sigma>`, `rect <w> <h> <amp>` \
             or `sector <half_angle_deg> <range> <peak>`, got `{value}`"
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write_cfg(dir: &Path, name: &str, body: &str) -> PathBuf {
        let p = dir.join(name);
        std::fs::write(&p, body).unwrap();
        p
    }

    const GOOD: &str = "hedac-scenario v1\n\
        mesh = square.mesh\n\
        alpha = 0.2\n\
        beta = 0.5\n\
        dt = 0.4\n\
        t_end = 600\n\
        density = uniform\n\
        snapshot_every = 60\n\
        \n\
        [agent]\n\
        x = 1.0\n\
        y = 1.2 # trailing comment\n\
        theta = 0.0\n\
        v = 0.1\n\
        omega_max = 1.0\n\
        delta = 0.1\n\
        sensing = gaussian 1.5 0.1\n\
        \n\
        [agent]\n\
        x = 2.0\n\
        y = 2.2\n\
        theta = -1.2\n\
        v = 0.1\n\
        omega_max = 1.0\n\
        delta = 0.1\n\
        sensing = sector 60 0.5 0.8\n";

    #[test]
    fn parses_full_scenario() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_cfg(dir.path(), "good.cfg", GOOD);
        let cfg = load_scenario(&path).unwrap();
        assert_eq!(cfg.agents.len(), 2);
        assert_eq!(cfg.density, DensitySpec::Uniform);
        assert_eq!(cfg.step_count(), 1500);
        assert_eq!(cfg.snapshot_every, Some(60.0));
        // Mesh path resolves next to the scenario file.
        assert_eq!(cfg.mesh_path, dir.path().join("square.mesh"));
        // Sector half-angle arrives in radians.
        match cfg.agents[1].sensing.kind() {
            crate::coverage::SensingKind::Sector { half_angle, .. } => {
                assert!((half_angle - std::f64::consts::PI / 3.0).abs() < 1e-12);
            }
            other => panic!("wrong sensing {other:?}"),
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        let dir = tempfile::tempdir().unwrap();
        // Missing header.
        let p = write_cfg(dir.path(), "a.cfg", "mesh = m\n");
        assert!(matches!(load_scenario(&p), Err(Error::ScenarioParse { .. })));
        // Unknown key.
        let p = write_cfg(dir.path(), "b.cfg", &format!("{GOOD}wobble = 3\n"));
        assert!(load_scenario(&p).is_err());
        // Agent missing a field.
        let truncated = GOOD.rsplit_once("sensing = sector").unwrap().0;
        let p = write_cfg(dir.path(), "c.cfg", truncated);
        assert!(load_scenario(&p).is_err());
        // Non-positive dt.
        let p = write_cfg(dir.path(), "d.cfg", &GOOD.replace("dt = 0.4", "dt = 0"));
        assert!(load_scenario(&p).is_err());
        // Gaussian density with bad sigma.
        let p = write_cfg(
            dir.path(),
            "e.cfg",
            &GOOD.replace("density = uniform", "density = gaussian 1 1 0"),
        );
        assert!(load_scenario(&p).is_err());
    }
}
