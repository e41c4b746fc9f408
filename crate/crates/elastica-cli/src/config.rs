//! Experiment configuration files.
//!
//! The format is flat `key = value` lines under `[section]` headers, with
//! `#` comments. Lists are whitespace separated. Parsing and serialization
//! round-trip: `parse(serialize(parse(text))) == parse(text)`.
//!
//! ```text
//! [experiment]
//! flow = circle
//! modes = p2
//!
//! [mesh]
//! levels = 64
//!
//! [time]
//! taus = 0.1
//! t_final = 50
//!
//! [boundary]          # optional; defaults come from the flow
//! position_fixed = a
//! slope_fixed = a b
//! periodic = false
//!
//! [output]            # optional
//! dir = out
//! stride = 10
//! samples_per_element = 10
//! ```

use std::collections::BTreeMap;
use std::fmt;

use elastica::assembly::{BoundarySpec, ConstraintMode, EndpointSet};
use elastica::forcing::{FlowSpec, FLOW_NAMES};

#[derive(Debug, Clone, PartialEq)]
pub enum ConfigError {
    Syntax { line: usize, message: String },
    UnknownSection(String),
    UnknownKey { section: String, key: String },
    UnknownFlow(String),
    BadValue { key: String, value: String },
    Missing(&'static str),
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConfigError::Syntax { line, message } => write!(f, "line {line}: {message}"),
            ConfigError::UnknownSection(s) => write!(f, "unknown section [{s}]"),
            ConfigError::UnknownKey { section, key } => {
                write!(f, "unknown key `{key}` in section [{section}]")
            }
            ConfigError::UnknownFlow(name) => {
                write!(f, "unknown flow `{name}`; available: {}", FLOW_NAMES.join(", "))
            }
            ConfigError::BadValue { key, value } => {
                write!(f, "cannot parse value `{value}` for key `{key}`")
            }
            ConfigError::Missing(key) => write!(f, "missing required key `{key}`"),
        }
    }
}

impl std::error::Error for ConfigError {}

/// Everything one invocation needs: flow, discretization choices, mesh
/// levels, time grid, boundary conditions and output policy.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub flow: FlowSpec,
    pub modes: Vec<ConstraintMode>,
    pub forced: bool,
    pub levels: Vec<usize>,
    pub taus: Vec<f64>,
    pub t_final: f64,
    pub bc: BoundarySpec,
    pub out_dir: String,
    pub stride: usize,
    pub samples_per_element: usize,
}

fn parse_endpoints(key: &str, value: &str) -> Result<EndpointSet, ConfigError> {
    let mut set = EndpointSet::NONE;
    if value == "none" {
        return Ok(set);
    }
    for tok in value.split_whitespace() {
        match tok {
            "a" => set.a = true,
            "b" => set.b = true,
            _ => {
                return Err(ConfigError::BadValue {
                    key: key.into(),
                    value: value.into(),
                })
            }
        }
    }
    Ok(set)
}

fn endpoints_text(set: &EndpointSet) -> &'static str {
    match (set.a, set.b) {
        (false, false) => "none",
        (true, false) => "a",
        (false, true) => "b",
        (true, true) => "a b",
    }
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut sections: BTreeMap<String, BTreeMap<String, String>> = BTreeMap::new();
        let mut current = String::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some(name) = line.strip_prefix('[') {
                let name = name.strip_suffix(']').ok_or(ConfigError::Syntax {
                    line: idx + 1,
                    message: "section header missing `]`".into(),
                })?;
                current = name.trim().to_string();
                sections.entry(current.clone()).or_default();
                continue;
            }
            let (key, value) = line.split_once('=').ok_or(ConfigError::Syntax {
                line: idx + 1,
                message: "expected `key = value`".into(),
            })?;
            if current.is_empty() {
                return Err(ConfigError::Syntax {
                    line: idx + 1,
                    message: "key outside any [section]".into(),
                });
            }
            sections
                .get_mut(&current)
                .unwrap()
                .insert(key.trim().to_string(), value.trim().to_string());
        }

        for section in sections.keys() {
            if !["experiment", "mesh", "time", "boundary", "output"].contains(&section.as_str()) {
                return Err(ConfigError::UnknownSection(section.clone()));
            }
        }
        let known = |section: &str, allowed: &[&str]| -> Result<(), ConfigError> {
            if let Some(map) = sections.get(section) {
                for key in map.keys() {
                    if !allowed.contains(&key.as_str()) {
                        return Err(ConfigError::UnknownKey {
                            section: section.into(),
                            key: key.clone(),
                        });
                    }
                }
            }
            Ok(())
        };
        known("experiment", &["flow", "modes", "forced"])?;
        known("mesh", &["levels"])?;
        known("time", &["taus", "t_final"])?;
        known("boundary", &["position_fixed", "slope_fixed", "periodic"])?;
        known("output", &["dir", "stride", "samples_per_element"])?;

        let get = |section: &str, key: &str| -> Option<&String> {
            sections.get(section).and_then(|m| m.get(key))
        };

        let flow_name = get("experiment", "flow").ok_or(ConfigError::Missing("flow"))?;
        let flow = FlowSpec::lookup(flow_name)
            .ok_or_else(|| ConfigError::UnknownFlow(flow_name.clone()))?;

        let modes = match get("experiment", "modes") {
            None => vec![ConstraintMode::P2],
            Some(v) => {
                let mut modes = Vec::new();
                for tok in v.split_whitespace() {
                    modes.push(match tok {
                        "p1" => ConstraintMode::P1,
                        "p2" => ConstraintMode::P2,
                        _ => {
                            return Err(ConfigError::BadValue {
                                key: "modes".into(),
                                value: v.clone(),
                            })
                        }
                    });
                }
                modes
            }
        };

        let parse_bool = |key: &str, v: &str| -> Result<bool, ConfigError> {
            match v {
                "true" => Ok(true),
                "false" => Ok(false),
                _ => Err(ConfigError::BadValue {
                    key: key.into(),
                    value: v.into(),
                }),
            }
        };
        let forced = match get("experiment", "forced") {
            None => flow.default_forced(),
            Some(v) => parse_bool("forced", v)?,
        };

        let levels_text = get("mesh", "levels").ok_or(ConfigError::Missing("levels"))?;
        let mut levels = Vec::new();
        for tok in levels_text.split_whitespace() {
            levels.push(tok.parse::<usize>().map_err(|_| ConfigError::BadValue {
                key: "levels".into(),
                value: levels_text.clone(),
            })?);
        }
        if levels.is_empty() {
            return Err(ConfigError::Missing("levels"));
        }

        let taus_text = get("time", "taus").ok_or(ConfigError::Missing("taus"))?;
        let mut taus = Vec::new();
        for tok in taus_text.split_whitespace() {
            taus.push(tok.parse::<f64>().map_err(|_| ConfigError::BadValue {
                key: "taus".into(),
                value: taus_text.clone(),
            })?);
        }
        if taus.is_empty() {
            return Err(ConfigError::Missing("taus"));
        }
        let t_final_text = get("time", "t_final").ok_or(ConfigError::Missing("t_final"))?;
        let t_final = t_final_text
            .parse::<f64>()
            .map_err(|_| ConfigError::BadValue {
                key: "t_final".into(),
                value: t_final_text.clone(),
            })?;

        let default_bc = flow.default_boundary();
        let bc = BoundarySpec {
            position_fixed: match get("boundary", "position_fixed") {
                None => default_bc.position_fixed,
                Some(v) => parse_endpoints("position_fixed", v)?,
            },
            slope_fixed: match get("boundary", "slope_fixed") {
                None => default_bc.slope_fixed,
                Some(v) => parse_endpoints("slope_fixed", v)?,
            },
            periodic: match get("boundary", "periodic") {
                None => default_bc.periodic,
                Some(v) => parse_bool("periodic", v)?,
            },
        };

        let out_dir = get("output", "dir").cloned().unwrap_or_else(|| "out".into());
        let parse_usize = |key: &str, v: &String| -> Result<usize, ConfigError> {
            v.parse::<usize>().map_err(|_| ConfigError::BadValue {
                key: key.into(),
                value: v.clone(),
            })
        };
        let stride = match get("output", "stride") {
            None => 10,
            Some(v) => parse_usize("stride", v)?.max(1),
        };
        let samples_per_element = match get("output", "samples_per_element") {
            None => 10,
            Some(v) => parse_usize("samples_per_element", v)?.max(1),
        };

        Ok(Self {
            flow,
            modes,
            forced,
            levels,
            taus,
            t_final,
            bc,
            out_dir,
            stride,
            samples_per_element,
        })
    }

    /// Canonical serialization; parsing it yields an equal configuration.
    pub fn serialize(&self) -> String {
        let modes: Vec<String> = self.modes.iter().map(|m| m.to_string()).collect();
        let levels: Vec<String> = self.levels.iter().map(|l| l.to_string()).collect();
        let taus: Vec<String> = self.taus.iter().map(|t| t.to_string()).collect();
        format!(
            "[experiment]\nflow = {}\nmodes = {}\nforced = {}\n\n\
             [mesh]\nlevels = {}\n\n\
             [time]\ntaus = {}\nt_final = {}\n\n\
             [boundary]\nposition_fixed = {}\nslope_fixed = {}\nperiodic = {}\n\n\
             [output]\ndir = {}\nstride = {}\nsamples_per_element = {}\n",
            self.flow.name(),
            modes.join(" "),
            self.forced,
            levels.join(" "),
            taus.join(" "),
            self.t_final,
            endpoints_text(&self.bc.position_fixed),
            endpoints_text(&self.bc.slope_fixed),
            self.bc.periodic,
            self.out_dir,
            self.stride,
            self.samples_per_element,
        )
    }
}
