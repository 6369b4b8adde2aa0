//! TOML benchmark configurations.
//!
//! Dynamics are expression strings over `x1..xn`. Named constants are
//! written `{c1}` and must be given under `[parameters]`; there are no
//! defaults, so a config that leaves one out is rejected.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::bounding::BoundOptions;
use crate::expr::{parse, Interval};
use crate::netfile::{load_network, NetFileError};
use crate::reach::{
    AvoidRegion, AvoidShape, Backend, Polarity, ReachOptions, Schedule, SystemSpec,
};
use crate::solver::{resolve_solver_cmd, MilpOptions};
use crate::univariate::UnivariateOptions;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchmarkConfig {
    pub name: String,
    pub n: usize,
    pub delta: f64,
    pub horizon: usize,
    pub init: Vec<[f64; 2]>,
    pub dynamics: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub perturbation: Option<Vec<[f64; 2]>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub goal: Option<Vec<[f64; 2]>>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub parameters: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub controller: Option<ControllerConfig>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub avoid: Vec<AvoidConfig>,
    #[serde(default)]
    pub enclosure: EnclosureConfig,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub schedule: ScheduleConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControllerConfig {
    /// Network file, relative to the config file.
    pub file: String,
    /// `[output index (1-based), value]` pairs overriding network outputs.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub constant_outputs: Vec<(usize, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HalfSpaceConfig {
    pub coeffs: Vec<f64>,
    pub rhs: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AvoidConfig {
    pub t_from: usize,
    pub t_to: usize,
    #[serde(rename = "box", default, skip_serializing_if = "Option::is_none")]
    pub bx: Option<Vec<[f64; 2]>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub halfspace: Option<HalfSpaceConfig>,
    pub polarity: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EnclosureConfig {
    pub divisions: usize,
}

impl Default for EnclosureConfig {
    fn default() -> Self {
        EnclosureConfig { divisions: 2 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    pub backend: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cmd: Option<String>,
    pub time_limit_s: f64,
    pub mip_gap: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            backend: "builtin".into(),
            cmd: None,
            time_limit_s: 600.0,
            mip_gap: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScheduleConfig {
    /// 1 means concrete steps throughout.
    pub symbolic_window: usize,
}

impl Default for ScheduleConfig {
    fn default() -> Self {
        ScheduleConfig { symbolic_window: 1 }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("{0}")]
    Syntax(String),
    #[error("{field}: {msg}")]
    Field { field: String, msg: String },
    #[error("controller: {0}")]
    Network(#[from] NetFileError),
}

fn field(f: impl Into<String>, msg: impl Into<String>) -> ConfigError {
    ConfigError::Field {
        field: f.into(),
        msg: msg.into(),
    }
}

fn boxes(name: &str, v: &[[f64; 2]], n: usize, finite: bool) -> Result<Vec<Interval>, ConfigError> {
    if v.len() != n {
        return Err(field(
            name,
            format!("expected {n} intervals, found {}", v.len()),
        ));
    }
    v.iter()
        .enumerate()
        .map(|(i, [lo, hi])| {
            if lo.is_nan() || hi.is_nan() || lo > hi {
                Err(field(
                    format!("{name}[{i}]"),
                    format!("empty interval [{lo}, {hi}]"),
                ))
            } else if finite && !(lo.is_finite() && hi.is_finite()) {
                Err(field(format!("{name}[{i}]"), "bounds must be finite"))
            } else {
                Ok(Interval { lo: *lo, hi: *hi })
            }
        })
        .collect()
}

/// Replaces `{name}` placeholders by parameter values.
fn substitute(src: &str, params: &BTreeMap<String, f64>, at: &str) -> Result<String, ConfigError> {
    let mut out = String::new();
    let mut rest = src;
    while let Some(open) = rest.find('{') {
        out.push_str(&rest[..open]);
        let close = rest[open..]
            .find('}')
            .ok_or_else(|| field(at, "unclosed `{`"))?
            + open;
        let name = rest[open + 1..close].trim();
        match params.get(name) {
            Some(v) => out.push_str(&format!("({v:?})")),
            None => {
                return Err(field(
                    format!("parameters.{name}"),
                    format!("required by {at} and has no default; supply it under [parameters]"),
                ))
            }
        }
        rest = &rest[close + 1..];
    }
    out.push_str(rest);
    Ok(out)
}

impl BenchmarkConfig {
    pub fn from_toml(text: &str) -> Result<BenchmarkConfig, ConfigError> {
        toml::from_str(text).map_err(|e| ConfigError::Syntax(e.to_string()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Validates the config and builds the system; `base` resolves the controller file.
    pub fn to_spec(&self, base: &Path) -> Result<SystemSpec, ConfigError> {
        let n = self.n;
        if n == 0 {
            return Err(field("n", "must be positive"));
        }
        if !(self.delta > 0.0 && self.delta.is_finite()) {
            return Err(field(
                "delta",
                format!("must be positive, got {}", self.delta),
            ));
        }
        let init = boxes("init", &self.init, n, true)?;
        let perturbation = match &self.perturbation {
            Some(p) => boxes("perturbation", p, n, true)?,
            None => vec![Interval::point(0.0); n],
        };
        if self.dynamics.len() != n {
            return Err(field(
                "dynamics",
                format!("expected {n} expressions, found {}", self.dynamics.len()),
            ));
        }
        let mut dynamics = Vec::with_capacity(n);
        for (i, src) in self.dynamics.iter().enumerate() {
            let at = format!("dynamics[{i}]");
            let text = substitute(src, &self.parameters, &at)?;
            let e = parse(&text).map_err(|e| field(&at, e.to_string()))?;
            if let Some(v) = e.vars().max().filter(|&v| v > n) {
                return Err(field(&at, format!("reads x{v} but n = {n}")));
            }
            dynamics.push(e);
        }
        let goal = self
            .goal
            .as_ref()
            .map(|g| boxes("goal", g, n, false))
            .transpose()?;
        let mut avoid = Vec::with_capacity(self.avoid.len());
        for (k, a) in self.avoid.iter().enumerate() {
            let at = format!("avoid[{k}]");
            let polarity = match a.polarity.as_str() {
                "inside" => Polarity::Inside,
                "outside" => Polarity::Outside,
                p => {
                    return Err(field(
                        format!("{at}.polarity"),
                        format!("expected inside|outside, found {p:?}"),
                    ))
                }
            };
            let shape = match (&a.bx, &a.halfspace) {
                (Some(b), None) => AvoidShape::Box(boxes(&format!("{at}.box"), b, n, false)?),
                (None, Some(h)) => {
                    if h.coeffs.len() != n {
                        return Err(field(
                            format!("{at}.halfspace.coeffs"),
                            format!("expected {n} coefficients"),
                        ));
                    }
                    AvoidShape::HalfSpace {
                        coeffs: h.coeffs.clone(),
                        rhs: h.rhs,
                    }
                }
                _ => return Err(field(&at, "give exactly one of `box` or `halfspace`")),
            };
            if a.t_from > a.t_to {
                return Err(field(format!("{at}.t_from"), "must not exceed t_to"));
            }
            avoid.push(AvoidRegion {
                t_from: a.t_from,
                t_to: a.t_to,
                shape,
                polarity,
            });
        }
        let controller = match &self.controller {
            None => None,
            Some(c) => {
                let path = base.join(&c.file);
                if !path.exists() {
                    return Err(field(
                        "controller.file",
                        format!(
                            "{} does not exist (controller weights are not shipped)",
                            path.display()
                        ),
                    ));
                }
                let net = load_network(&path)?;
                let mut consts = net.constants().to_vec();
                for &(i, v) in &c.constant_outputs {
                    if i == 0 || i > consts.len() {
                        return Err(field(
                            "controller.constant_outputs",
                            format!("output {i} out of range"),
                        ));
                    }
                    consts[i - 1] = Some(v);
                }
                let net = crate::milp::NeuralNetwork::new(net.layers().to_vec(), consts)
                    .map_err(|e| field("controller", e.to_string()))?;
                Some(net)
            }
        };
        let spec = SystemSpec {
            name: self.name.clone(),
            n,
            init,
            dynamics,
            perturbation,
            controller,
            delta: self.delta,
            horizon: self.horizon,
            goal,
            avoid,
        };
        spec.validate()
            .map_err(|e| field("system", e.to_string()))?;
        Ok(spec)
    }

    pub fn reach_options(&self) -> Result<ReachOptions, ConfigError> {
        if self.enclosure.divisions == 0 {
            return Err(field("enclosure.divisions", "must be at least 1"));
        }
        if !(self.solver.time_limit_s > 0.0) {
            return Err(field("solver.time_limit_s", "must be positive"));
        }
        let backend = match self.solver.backend.as_str() {
            "builtin" => Backend::Builtin,
            "external" => Backend::External(
                resolve_solver_cmd(self.solver.cmd.as_deref())
                    .map_err(|e| field("solver.cmd", e.to_string()))?,
            ),
            b => {
                return Err(field(
                    "solver.backend",
                    format!("expected builtin|external, found {b:?}"),
                ))
            }
        };
        Ok(ReachOptions {
            bound: BoundOptions {
                univariate: UnivariateOptions {
                    divisions: self.enclosure.divisions,
                    ..UnivariateOptions::default()
                },
            },
            milp: MilpOptions {
                time_limit: Duration::from_secs_f64(self.solver.time_limit_s),
                mip_gap: self.solver.mip_gap,
                ..MilpOptions::default()
            },
            backend,
        })
    }

    pub fn schedule(&self) -> Schedule {
        if self.schedule.symbolic_window > 1 {
            Schedule::symbolic(self.horizon, self.schedule.symbolic_window)
        } else {
            Schedule::concrete(self.horizon)
        }
    }

    /// Config text describing `spec` (dynamics printed in fully
    /// parenthesized form, parameters already substituted).
    pub fn from_spec(spec: &SystemSpec, controller: Option<ControllerConfig>) -> BenchmarkConfig {
        let pairs = |b: &[Interval]| b.iter().map(|iv| [iv.lo, iv.hi]).collect::<Vec<_>>();
        BenchmarkConfig {
            name: spec.name.clone(),
            n: spec.n,
            delta: spec.delta,
            horizon: spec.horizon,
            init: pairs(&spec.init),
            dynamics: spec.dynamics.iter().map(ToString::to_string).collect(),
            perturbation: Some(pairs(&spec.perturbation)),
            goal: spec.goal.as_deref().map(pairs),
            parameters: BTreeMap::new(),
            controller,
            avoid: spec
                .avoid
                .iter()
                .map(|a| {
                    let (bx, halfspace) = match &a.shape {
                        AvoidShape::Box(b) => (Some(pairs(b)), None),
                        AvoidShape::HalfSpace { coeffs, rhs } => (
                            None,
                            Some(HalfSpaceConfig {
                                coeffs: coeffs.clone(),
                                rhs: *rhs,
                            }),
                        ),
                    };
                    let polarity = if a.polarity == Polarity::Inside {
                        "inside"
                    } else {
                        "outside"
                    };
                    AvoidConfig {
                        t_from: a.t_from,
                        t_to: a.t_to,
                        bx,
                        halfspace,
                        polarity: polarity.into(),
                    }
                })
                .collect(),
            enclosure: EnclosureConfig::default(),
            solver: SolverConfig::default(),
            schedule: ScheduleConfig::default(),
        }
    }
}

/// A parsed config with the system it describes.
#[derive(Debug, Clone)]
pub struct LoadedConfig {
    pub path: PathBuf,
    pub config: BenchmarkConfig,
    pub spec: SystemSpec,
}

pub fn load_system_config(path: &Path) -> Result<LoadedConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io {
        path: path.display().to_string(),
        source: e,
    })?;
    let config = BenchmarkConfig::from_toml(&text)?;
    let base = path.parent().unwrap_or(Path::new("."));
    let spec = config.to_spec(base)?;
    Ok(LoadedConfig {
        path: path.to_path_buf(),
        config,
        spec,
    })
}
