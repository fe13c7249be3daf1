//! Scenario configuration: a line-oriented `key=value` format with
//! `[scenario]`, `[agent N]`, `[edge]`, and `[event]` sections, plus the two
//! built-in presets. Unknown keys and missing keys are parse errors; numeric
//! fields must be finite.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use thiserror::Error;

use crate::control::{ControllerGains, FormationGraph};
use crate::geometry::Vec2;

pub const COMMENSURABILITY_TOLERANCE: f64 = 1e-6;
/// Samples per measurement window (not part of the file format).
pub const DEFAULT_SAMPLES_PER_WINDOW: usize = 4096;

#[derive(Debug, Error, PartialEq)]
pub enum ScenarioError {
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("invalid scenario: {0}")]
    Validation(String),
}

fn parse_err(line: usize, message: impl Into<String>) -> ScenarioError {
    ScenarioError::Parse {
        line,
        message: message.into(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    ConsensusOnly,
    ConsensusAndShape,
}

impl Mode {
    fn as_str(self) -> &'static str {
        match self {
            Mode::ConsensusOnly => "consensus_only",
            Mode::ConsensusAndShape => "consensus_and_shape",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AgentConfig {
    pub position: Vec2<f64>,
    pub velocity: Vec2<f64>,
    pub omega: f64,
    pub radius0: f64,
    pub phase0: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EdgeConfig {
    /// Zero-based agent indices, `i < j`.
    pub i: usize,
    pub j: usize,
    pub d_star: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PerturbationEvent {
    pub round: usize,
    /// Zero-based agent index.
    pub agent: usize,
    pub delta_v: Vec2<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub window: f64,
    pub windows: usize,
    pub mode: Mode,
    pub seed: u64,
    pub noise_std: f64,
    pub alpha: f64,
    pub eps1: f64,
    pub eps2: f64,
    pub omega_sign_known: bool,
    pub agents: Vec<AgentConfig>,
    pub edges: Vec<EdgeConfig>,
    pub events: Vec<PerturbationEvent>,
    /// Run parameter with a fixed default; not part of the file format.
    pub samples_per_window: usize,
}

impl Scenario {
    pub fn gains(&self) -> ControllerGains<f64> {
        ControllerGains {
            eps1: self.eps1,
            eps2: self.eps2,
            alpha: self.alpha,
            window: self.window,
        }
    }

    pub fn graph(&self) -> Result<FormationGraph<f64>, ScenarioError> {
        let edges: Vec<(usize, usize)> = self.edges.iter().map(|e| (e.i, e.j)).collect();
        let desired: Vec<Option<f64>> = self.edges.iter().map(|e| e.d_star).collect();
        FormationGraph::new(self.agents.len(), &edges, &desired)
            .map_err(|e| ScenarioError::Validation(e.to_string()))
    }

    /// Integer harmonic index of each agent at the configured window length.
    pub fn harmonics(&self) -> Result<Vec<i64>, ScenarioError> {
        self.agents
            .iter()
            .enumerate()
            .map(|(idx, a)| {
                let kf = a.omega * self.window / std::f64::consts::TAU;
                let k = kf.round();
                if (kf - k).abs() > COMMENSURABILITY_TOLERANCE {
                    return Err(ScenarioError::Validation(format!(
                        "agent {}: omega*T/(2*pi) = {} is not within {} of an integer",
                        idx + 1,
                        kf,
                        COMMENSURABILITY_TOLERANCE
                    )));
                }
                Ok(k as i64)
            })
            .collect()
    }

    /// Full structural validation; returns gain-guard warnings on success.
    pub fn validate(&self) -> Result<Vec<String>, ScenarioError> {
        if self.window <= 0.0 || !self.window.is_finite() {
            return Err(ScenarioError::Validation("T must be positive".into()));
        }
        if self.windows == 0 {
            return Err(ScenarioError::Validation(
                "windows must be at least 1".into(),
            ));
        }
        if self.noise_std < 0.0 {
            return Err(ScenarioError::Validation(
                "noise_std must be non-negative".into(),
            ));
        }
        for (idx, a) in self.agents.iter().enumerate() {
            if a.radius0 < 0.0 {
                return Err(ScenarioError::Validation(format!(
                    "agent {}: radius0 must be non-negative",
                    idx + 1
                )));
            }
        }
        let graph = self.graph()?;
        let ks = self.harmonics()?;
        for e in &self.edges {
            let (ki, kj) = (ks[e.i], ks[e.j]);
            let trio = [ki.abs(), kj.abs(), (ki - kj).abs()];
            if trio.contains(&0) || trio[0] == trio[1] || trio[0] == trio[2] || trio[1] == trio[2]
            {
                return Err(ScenarioError::Validation(format!(
                    "edge ({}, {}): harmonic indices {}, {}, |diff| {} must be pairwise distinct and nonzero",
                    e.i + 1,
                    e.j + 1,
                    trio[0],
                    trio[1],
                    trio[2]
                )));
            }
            if self.mode == Mode::ConsensusAndShape && e.d_star.is_none() {
                return Err(ScenarioError::Validation(format!(
                    "edge ({}, {}): dstar required in consensus_and_shape mode",
                    e.i + 1,
                    e.j + 1
                )));
            }
        }
        for ev in &self.events {
            if ev.agent >= self.agents.len() {
                return Err(ScenarioError::Validation(format!(
                    "event references agent {} of {}",
                    ev.agent + 1,
                    self.agents.len()
                )));
            }
            if ev.round >= self.windows {
                return Err(ScenarioError::Validation(format!(
                    "event round {} outside episode of {} windows",
                    ev.round, self.windows
                )));
            }
        }
        self.gains()
            .validate(graph.max_degree())
            .map_err(|e| ScenarioError::Validation(e.to_string()))
    }
}

// --- parsing -----------------------------------------------------------

struct Section {
    header: String,
    header_line: usize,
    entries: BTreeMap<String, (usize, String)>,
    order: Vec<String>,
}

fn split_sections(text: &str) -> Result<Vec<Section>, ScenarioError> {
    let mut sections: Vec<Section> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if line.starts_with('[') {
            if !line.ends_with(']') {
                return Err(parse_err(line_no, "unterminated section header"));
            }
            sections.push(Section {
                header: line[1..line.len() - 1].trim().to_string(),
                header_line: line_no,
                entries: BTreeMap::new(),
                order: Vec::new(),
            });
            continue;
        }
        let Some(section) = sections.last_mut() else {
            return Err(parse_err(line_no, "key outside of any section"));
        };
        let Some((key, value)) = line.split_once('=') else {
            return Err(parse_err(line_no, "expected key=value"));
        };
        let key = key.trim().to_string();
        if section.entries.contains_key(&key) {
            return Err(parse_err(line_no, format!("duplicate key `{key}`")));
        }
        section.order.push(key.clone());
        section
            .entries
            .insert(key, (line_no, value.trim().to_string()));
    }
    Ok(sections)
}

impl Section {
    fn take_f64(&mut self, key: &str) -> Result<f64, ScenarioError> {
        let (line, value) = self
            .entries
            .remove(key)
            .ok_or_else(|| parse_err(self.header_line, format!("missing key `{key}`")))?;
        let x: f64 = value
            .parse()
            .map_err(|_| parse_err(line, format!("`{key}` is not a number")))?;
        if !x.is_finite() {
            return Err(parse_err(line, format!("`{key}` must be finite")));
        }
        Ok(x)
    }

    fn take_usize(&mut self, key: &str) -> Result<usize, ScenarioError> {
        let (line, value) = self
            .entries
            .remove(key)
            .ok_or_else(|| parse_err(self.header_line, format!("missing key `{key}`")))?;
        value
            .parse()
            .map_err(|_| parse_err(line, format!("`{key}` is not a non-negative integer")))
    }

    fn take_u64(&mut self, key: &str) -> Result<u64, ScenarioError> {
        let (line, value) = self
            .entries
            .remove(key)
            .ok_or_else(|| parse_err(self.header_line, format!("missing key `{key}`")))?;
        value
            .parse()
            .map_err(|_| parse_err(line, format!("`{key}` is not a non-negative integer")))
    }

    fn take_bool(&mut self, key: &str) -> Result<bool, ScenarioError> {
        let (line, value) = self
            .entries
            .remove(key)
            .ok_or_else(|| parse_err(self.header_line, format!("missing key `{key}`")))?;
        match value.as_str() {
            "true" => Ok(true),
            "false" => Ok(false),
            _ => Err(parse_err(line, format!("`{key}` must be true or false"))),
        }
    }

    fn reject_leftovers(&self) -> Result<(), ScenarioError> {
        if let Some(key) = self.order.iter().find(|k| self.entries.contains_key(*k)) {
            let (line, _) = &self.entries[key];
            return Err(parse_err(*line, format!("unknown key `{key}`")));
        }
        Ok(())
    }
}

/// Parse a scenario file. Preset names (`preset:...`) are resolved through
/// [`preset`] before reaching this function.
pub fn parse(text: &str) -> Result<Scenario, ScenarioError> {
    let sections = split_sections(text)?;
    let mut scenario_sec: Option<Section> = None;
    let mut agents: Vec<(usize, Section)> = Vec::new();
    let mut edges: Vec<Section> = Vec::new();
    let mut events: Vec<Section> = Vec::new();

    for sec in sections {
        match sec.header.as_str() {
            "scenario" => {
                if scenario_sec.is_some() {
                    return Err(parse_err(sec.header_line, "duplicate [scenario] section"));
                }
                scenario_sec = Some(sec);
            }
            "edge" => edges.push(sec),
            "event" => events.push(sec),
            h if h.starts_with("agent") => {
                let id: usize = h["agent".len()..]
                    .trim()
                    .parse()
                    .map_err(|_| parse_err(sec.header_line, "agent sections are [agent N]"))?;
                agents.push((id, sec));
            }
            other => {
                return Err(parse_err(
                    sec.header_line,
                    format!("unknown section `[{other}]`"),
                ))
            }
        }
    }

    let mut s = scenario_sec.ok_or_else(|| parse_err(1, "missing [scenario] section"))?;
    let window = s.take_f64("T")?;
    let windows = s.take_usize("windows")?;
    let mode = {
        let (line, value) = s
            .entries
            .remove("mode")
            .ok_or_else(|| parse_err(s.header_line, "missing key `mode`"))?;
        match value.as_str() {
            "consensus_only" => Mode::ConsensusOnly,
            "consensus_and_shape" => Mode::ConsensusAndShape,
            _ => {
                return Err(parse_err(
                    line,
                    "mode must be consensus_only or consensus_and_shape",
                ))
            }
        }
    };
    let seed = s.take_u64("seed")?;
    let noise_std = s.take_f64("noise_std")?;
    let alpha = s.take_f64("alpha")?;
    let eps1 = s.take_f64("eps1")?;
    let eps2 = s.take_f64("eps2")?;
    let omega_sign_known = s.take_bool("omega_sign_known")?;
    s.reject_leftovers()?;

    agents.sort_by_key(|&(id, _)| id);
    for (expect, &(id, ref sec)) in agents.iter().enumerate() {
        if id != expect + 1 {
            return Err(parse_err(
                sec.header_line,
                format!("agent sections must be numbered 1..{} without gaps", agents.len()),
            ));
        }
    }
    let agent_configs = agents
        .into_iter()
        .map(|(_, mut sec)| {
            let a = AgentConfig {
                position: Vec2::new(sec.take_f64("px")?, sec.take_f64("py")?),
                velocity: Vec2::new(sec.take_f64("vx")?, sec.take_f64("vy")?),
                omega: sec.take_f64("omega")?,
                radius0: sec.take_f64("radius0")?,
                phase0: sec.take_f64("phase0")?,
            };
            sec.reject_leftovers()?;
            Ok(a)
        })
        .collect::<Result<Vec<_>, ScenarioError>>()?;

    let n = agent_configs.len();
    let edge_configs = edges
        .into_iter()
        .map(|mut sec| {
            let line = sec.header_line;
            let i = sec.take_usize("i")?;
            let j = sec.take_usize("j")?;
            let d_star = if sec.entries.contains_key("dstar") {
                Some(sec.take_f64("dstar")?)
            } else {
                None
            };
            sec.reject_leftovers()?;
            if i < 1 || j < 1 || i > n || j > n {
                return Err(parse_err(line, format!("edge endpoints must be in 1..{n}")));
            }
            Ok(EdgeConfig {
                i: i.min(j) - 1,
                j: i.max(j) - 1,
                d_star,
            })
        })
        .collect::<Result<Vec<_>, ScenarioError>>()?;

    let event_configs = events
        .into_iter()
        .map(|mut sec| {
            let line = sec.header_line;
            let round = sec.take_usize("round")?;
            let agent = sec.take_usize("agent")?;
            let delta_v = Vec2::new(sec.take_f64("dvx")?, sec.take_f64("dvy")?);
            sec.reject_leftovers()?;
            if agent < 1 || agent > n {
                return Err(parse_err(line, format!("event agent must be in 1..{n}")));
            }
            Ok(PerturbationEvent {
                round,
                agent: agent - 1,
                delta_v,
            })
        })
        .collect::<Result<Vec<_>, ScenarioError>>()?;

    let scenario = Scenario {
        window,
        windows,
        mode,
        seed,
        noise_std,
        alpha,
        eps1,
        eps2,
        omega_sign_known,
        agents: agent_configs,
        edges: edge_configs,
        events: event_configs,
        samples_per_window: DEFAULT_SAMPLES_PER_WINDOW,
    };
    scenario.validate()?;
    Ok(scenario)
}

/// Render a scenario back into the file format. Floats use Rust's shortest
/// round-trip representation, so `parse(serialize(s)) == s`.
pub fn serialize(s: &Scenario) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "[scenario]");
    let _ = writeln!(out, "T={}", s.window);
    let _ = writeln!(out, "windows={}", s.windows);
    let _ = writeln!(out, "mode={}", s.mode.as_str());
    let _ = writeln!(out, "seed={}", s.seed);
    let _ = writeln!(out, "noise_std={}", s.noise_std);
    let _ = writeln!(out, "alpha={}", s.alpha);
    let _ = writeln!(out, "eps1={}", s.eps1);
    let _ = writeln!(out, "eps2={}", s.eps2);
    let _ = writeln!(out, "omega_sign_known={}", s.omega_sign_known);
    for (idx, a) in s.agents.iter().enumerate() {
        let _ = writeln!(out, "\n[agent {}]", idx + 1);
        let _ = writeln!(out, "px={}", a.position.x);
        let _ = writeln!(out, "py={}", a.position.y);
        let _ = writeln!(out, "vx={}", a.velocity.x);
        let _ = writeln!(out, "vy={}", a.velocity.y);
        let _ = writeln!(out, "omega={}", a.omega);
        let _ = writeln!(out, "radius0={}", a.radius0);
        let _ = writeln!(out, "phase0={}", a.phase0);
    }
    for e in &s.edges {
        let _ = writeln!(out, "\n[edge]");
        let _ = writeln!(out, "i={}", e.i + 1);
        let _ = writeln!(out, "j={}", e.j + 1);
        if let Some(d) = e.d_star {
            let _ = writeln!(out, "dstar={}", d);
        }
    }
    for ev in &s.events {
        let _ = writeln!(out, "\n[event]");
        let _ = writeln!(out, "round={}", ev.round);
        let _ = writeln!(out, "agent={}", ev.agent + 1);
        let _ = writeln!(out, "dvx={}", ev.delta_v.x);
        let _ = writeln!(out, "dvy={}", ev.delta_v.y);
    }
    out
}

// --- presets -----------------------------------------------------------

/// Re-consensus demonstration: three agents on a path graph running pure
/// velocity consensus with adaptive excitation radii; agent 2 receives a
/// velocity kick at round 20 and the formation re-converges.
fn preset_reconsensus() -> Scenario {
    let velocities = [
        Vec2::new(-4.0, 2.0),
        Vec2::new(3.0, -2.0),
        Vec2::new(2.0, 4.0),
    ];
    let positions = [
        Vec2::new(70.0, 30.0),
        Vec2::new(0.0, 50.0),
        Vec2::new(0.0, 0.0),
    ];
    let omegas = [5.0, -3.0, 5.0];
    let alpha = 0.35;
    let neighborhood = [vec![1], vec![0, 2], vec![1]];
    let agents = (0..3)
        .map(|i| AgentConfig {
            position: positions[i],
            velocity: velocities[i],
            omega: omegas[i],
            radius0: alpha
                * neighborhood[i]
                    .iter()
                    .map(|&j| (velocities[j] - velocities[i]).norm())
                    .fold(0.0, f64::max),
            phase0: 0.0,
        })
        .collect();
    Scenario {
        window: std::f64::consts::TAU,
        windows: 80,
        mode: Mode::ConsensusOnly,
        seed: 0,
        noise_std: 0.0,
        alpha,
        eps1: 5e-2,
        eps2: 0.0,
        omega_sign_known: false,
        agents,
        edges: vec![
            EdgeConfig {
                i: 0,
                j: 1,
                d_star: None,
            },
            EdgeConfig {
                i: 1,
                j: 2,
                d_star: None,
            },
        ],
        events: vec![PerturbationEvent {
            round: 20,
            agent: 1,
            delta_v: Vec2::new(3.0, 2.0),
        }],
        samples_per_window: DEFAULT_SAMPLES_PER_WINDOW,
    }
}

/// Combined velocity consensus and formation shaping on a complete triangle
/// with desired side 20. Initial center spacing is kept inside the basin of
/// the per-window velocity update (the update is an explicit Euler step and
/// overshoots for center distances beyond roughly 45 at these gains).
fn preset_formation() -> Scenario {
    let velocities = [
        Vec2::new(-4.0, 1.5),
        Vec2::new(3.0, -3.5),
        Vec2::new(2.0, 3.5),
    ];
    let positions = [
        Vec2::new(30.0, 15.0),
        Vec2::new(0.0, 24.0),
        Vec2::new(0.0, 0.0),
    ];
    let omegas = [5.0, -3.0, 7.0];
    let alpha = 0.35;
    let agents = (0..3)
        .map(|i| AgentConfig {
            position: positions[i],
            velocity: velocities[i],
            omega: omegas[i],
            radius0: alpha
                * (0..3)
                    .filter(|&j| j != i)
                    .map(|j| (velocities[j] - velocities[i]).norm())
                    .fold(0.0, f64::max),
            phase0: 0.0,
        })
        .collect();
    let edge = |i, j| EdgeConfig {
        i,
        j,
        d_star: Some(20.0),
    };
    Scenario {
        window: std::f64::consts::TAU,
        windows: 400,
        mode: Mode::ConsensusAndShape,
        seed: 0,
        noise_std: 0.0,
        alpha,
        eps1: 5e-2,
        eps2: 7e-7,
        omega_sign_known: false,
        agents,
        edges: vec![edge(0, 1), edge(0, 2), edge(1, 2)],
        events: vec![],
        samples_per_window: DEFAULT_SAMPLES_PER_WINDOW,
    }
}

pub const PRESET_RECONSENSUS: &str = "reconsensus_sec3";
pub const PRESET_FORMATION: &str = "formation_sec4b";

pub fn preset_names() -> &'static [(&'static str, &'static str)] {
    &[
        (
            PRESET_RECONSENSUS,
            "three agents, path graph, pure consensus, velocity kick at round 20",
        ),
        (
            PRESET_FORMATION,
            "three agents, complete graph, consensus plus side-20 triangle shaping",
        ),
    ]
}

pub fn preset(name: &str) -> Option<Scenario> {
    match name {
        PRESET_RECONSENSUS => Some(preset_reconsensus()),
        PRESET_FORMATION => Some(preset_formation()),
        _ => None,
    }
}

/// Resolve `preset:NAME` or parse the given text.
pub fn from_source(source: &str) -> Result<Scenario, ScenarioError> {
    if let Some(name) = source.strip_prefix("preset:") {
        return preset(name.trim())
            .ok_or_else(|| ScenarioError::Validation(format!("unknown preset `{}`", name.trim())));
    }
    parse(source)
}
