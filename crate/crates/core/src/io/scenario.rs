//! JSON scenario files.
//!
//! Every section except `arena`, `agents` and `targets` is optional; omitted
//! parameters take engine defaults, and each default applied is reported back
//! to the caller so it can be logged. Unknown keys are rejected.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::controller::{ControllerParams, WallTermVariant};
use crate::decision::{DecisionConfig, DecisionWeights, ExtraFactor};
use crate::geometry::{Arena, Obstacle, Vec2};
use crate::simulator::{AgentPlacement, MetricsConfig, Scenario};
use crate::target_motion::LevyParams;

pub const SCHEMA_VERSION: u32 = 1;
pub const DEFAULT_STEPS: usize = 1000;
pub const DEFAULT_SPAWN_SEPARATION: f64 = 8.0;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("syntax error at byte offset {offset} (line {line}, column {column}): {message}")]
    Syntax {
        offset: usize,
        line: usize,
        column: usize,
        message: String,
    },
    #[error("schema violation at `{path}`: {message}")]
    Schema { path: String, message: String },
    #[error("{0}")]
    Invariant(String),
}

/// On-disk layout of a scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub schema_version: u32,
    pub name: String,
    #[serde(default)]
    pub description: String,
    pub arena: Arena,
    #[serde(default)]
    pub obstacles: Vec<Obstacle>,
    pub agents: AgentsSection,
    pub targets: TargetsSection,
    #[serde(default)]
    pub controller: ControllerSection,
    #[serde(default)]
    pub decision: DecisionSection,
    #[serde(default)]
    pub levy: LevySection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub steps: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default)]
    pub metrics: MetricsSection,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AgentsSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub positions: Option<Vec<Vec2>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spawn: Option<SpawnSection>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpawnSection {
    pub count: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub min: Option<Vec2>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max: Option<Vec2>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub min_separation: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetsSection {
    pub positions: Vec<Vec2>,
    pub speed: f64,
}

macro_rules! optional_section {
    (
        $(#[$meta:meta])*
        $name:ident { $( $(#[$fmeta:meta])* $field:ident : $ty:ty ),* $(,)? }
    ) => {
        $(#[$meta])*
        #[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
        #[serde(deny_unknown_fields)]
        pub struct $name {
            $(
                $(#[$fmeta])*
                #[serde(default, skip_serializing_if = "Option::is_none")]
                pub $field: Option<$ty>,
            )*
        }
    };
}

optional_section! {
    /// Controller parameters; the short aliases are accepted on input.
    ControllerSection {
        #[serde(alias = "v_f")] base_speed: f64,
        #[serde(alias = "c_t")] approach_gain: f64,
        #[serde(alias = "a_t")] approach_accel: f64,
        #[serde(alias = "p_t")] approach_brake_gain: f64,
        #[serde(alias = "r_entrap")] entrap_radius: f64,
        #[serde(alias = "r_arep")] agent_repulsion_range: f64,
        #[serde(alias = "p_arep")] agent_repulsion_gain: f64,
        #[serde(alias = "r_trep")] target_repulsion_range: f64,
        #[serde(alias = "p_trep")] target_repulsion_gain: f64,
        #[serde(alias = "c_d")] wall_gain: f64,
        #[serde(alias = "r_wall")] wall_range: f64,
        #[serde(alias = "a_d")] wall_accel: f64,
        #[serde(alias = "p_d")] wall_brake_gain: f64,
        #[serde(alias = "v_limit")] speed_limit: f64,
        #[serde(alias = "v_shill")] shill_speed: f64,
        wall_term_variant: WallTermVariant,
    }
}

optional_section! {
    DecisionSection {
        distance: f64,
        crowding: f64,
        hysteresis: f64,
        extra: Vec<ExtraFactor>,
        baseline: bool,
    }
}

optional_section! {
    LevySection {
        alpha: f64,
        min_step: f64,
        max_step: f64,
    }
}

optional_section! {
    MetricsSection {
        sector_radius: f64,
        sector_count: usize,
        sample_interval: usize,
    }
}

/// A validated scenario and the defaults that were filled in.
#[derive(Debug, Clone, PartialEq)]
pub struct ParsedScenario {
    pub scenario: Scenario,
    pub applied_defaults: Vec<String>,
}

struct Defaults(Vec<String>);

impl Defaults {
    fn take<T: std::fmt::Debug>(&mut self, value: Option<T>, key: &str, default: T) -> T {
        match value {
            Some(v) => v,
            None => {
                self.0.push(format!("{key} = {default:?}"));
                default
            }
        }
    }
}

fn offset_of(text: &str, line: usize, column: usize) -> usize {
    if line == 0 {
        return 0;
    }
    let mut offset = 0;
    for (i, l) in text.split_inclusive('\n').enumerate() {
        if i + 1 == line {
            return (offset + column.saturating_sub(1)).min(text.len());
        }
        offset += l.len();
    }
    text.len()
}

/// Parses and validates scenario JSON text.
pub fn parse_scenario_str(text: &str) -> Result<ParsedScenario, ScenarioError> {
    let value: serde_json::Value = serde_json::from_str(text).map_err(|e| ScenarioError::Syntax {
        offset: offset_of(text, e.line(), e.column()),
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    let file: ScenarioFile = serde_path_to_error::deserialize(value).map_err(|e| ScenarioError::Schema {
        path: e.path().to_string(),
        message: e.inner().to_string(),
    })?;
    from_file(file)
}

/// Reads, parses and validates a scenario file.
pub fn parse_scenario(path: impl AsRef<Path>) -> Result<ParsedScenario, ScenarioError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| ScenarioError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_scenario_str(&text)
}

/// Converts the on-disk layout into a validated [`Scenario`].
pub fn from_file(file: ScenarioFile) -> Result<ParsedScenario, ScenarioError> {
    if file.schema_version != SCHEMA_VERSION {
        return Err(ScenarioError::Schema {
            path: "schema_version".into(),
            message: format!("unsupported version {}, expected {SCHEMA_VERSION}", file.schema_version),
        });
    }
    let mut d = Defaults(Vec::new());
    let side = file.arena.side;

    let agents = match (file.agents.positions, file.agents.spawn) {
        (Some(p), None) => AgentPlacement::Explicit(p),
        (None, Some(s)) => AgentPlacement::Spawn {
            count: s.count,
            min: d.take(s.min, "agents.spawn.min", Vec2::new(0.02 * side, 0.02 * side)),
            max: d.take(s.max, "agents.spawn.max", Vec2::new(0.5 * side, 0.5 * side)),
            min_separation: d.take(
                s.min_separation,
                "agents.spawn.min_separation",
                DEFAULT_SPAWN_SEPARATION,
            ),
        },
        _ => {
            return Err(ScenarioError::Schema {
                path: "agents".into(),
                message: "exactly one of `positions` or `spawn` is required".into(),
            })
        }
    };

    let c = file.controller;
    let dc = ControllerParams::default();
    let controller = ControllerParams {
        base_speed: d.take(c.base_speed, "controller.base_speed", dc.base_speed),
        approach_gain: d.take(c.approach_gain, "controller.approach_gain", dc.approach_gain),
        approach_accel: d.take(c.approach_accel, "controller.approach_accel", dc.approach_accel),
        approach_brake_gain: d.take(
            c.approach_brake_gain,
            "controller.approach_brake_gain",
            dc.approach_brake_gain,
        ),
        entrap_radius: d.take(c.entrap_radius, "controller.entrap_radius", dc.entrap_radius),
        agent_repulsion_range: d.take(
            c.agent_repulsion_range,
            "controller.agent_repulsion_range",
            dc.agent_repulsion_range,
        ),
        agent_repulsion_gain: d.take(
            c.agent_repulsion_gain,
            "controller.agent_repulsion_gain",
            dc.agent_repulsion_gain,
        ),
        target_repulsion_range: d.take(
            c.target_repulsion_range,
            "controller.target_repulsion_range",
            dc.target_repulsion_range,
        ),
        target_repulsion_gain: d.take(
            c.target_repulsion_gain,
            "controller.target_repulsion_gain",
            dc.target_repulsion_gain,
        ),
        wall_gain: d.take(c.wall_gain, "controller.wall_gain", dc.wall_gain),
        wall_range: d.take(c.wall_range, "controller.wall_range", dc.wall_range),
        wall_accel: d.take(c.wall_accel, "controller.wall_accel", dc.wall_accel),
        wall_brake_gain: d.take(c.wall_brake_gain, "controller.wall_brake_gain", dc.wall_brake_gain),
        speed_limit: d.take(c.speed_limit, "controller.speed_limit", dc.speed_limit),
        shill_speed: d.take(c.shill_speed, "controller.shill_speed", dc.shill_speed),
        wall_term_variant: d.take(
            c.wall_term_variant,
            "controller.wall_term_variant",
            dc.wall_term_variant,
        ),
    };

    let target_count = file.targets.positions.len();
    let dd = DecisionConfig::default();
    let decision = DecisionConfig {
        weights: DecisionWeights {
            distance: d.take(file.decision.distance, "decision.distance", dd.weights.distance),
            crowding: d.take(file.decision.crowding, "decision.crowding", dd.weights.crowding),
            extra: d.take(
                file.decision.extra,
                "decision.extra",
                vec![ExtraFactor {
                    name: "priority".into(),
                    weight: 0.0,
                    values: vec![0.0; target_count],
                }],
            ),
        },
        hysteresis: d.take(file.decision.hysteresis, "decision.hysteresis", dd.hysteresis),
    };
    let baseline = d.take(file.decision.baseline, "decision.baseline", false);

    let dl = LevyParams::default();
    let levy = LevyParams {
        alpha: d.take(file.levy.alpha, "levy.alpha", dl.alpha),
        min_step: d.take(file.levy.min_step, "levy.min_step", dl.min_step),
        max_step: d.take(file.levy.max_step, "levy.max_step", dl.max_step),
    };

    let dm = MetricsConfig::default();
    let metrics = MetricsConfig {
        sector_radius: d.take(file.metrics.sector_radius, "metrics.sector_radius", dm.sector_radius),
        sector_count: d.take(file.metrics.sector_count, "metrics.sector_count", dm.sector_count),
        sample_interval: d.take(
            file.metrics.sample_interval,
            "metrics.sample_interval",
            dm.sample_interval,
        ),
    };

    let scenario = Scenario {
        name: file.name,
        description: file.description,
        arena: file.arena,
        obstacles: file.obstacles,
        agents,
        targets: file.targets.positions,
        target_speed: file.targets.speed,
        controller,
        decision,
        baseline,
        levy,
        steps: d.take(file.steps, "steps", DEFAULT_STEPS),
        seed: d.take(file.seed, "seed", 0),
        metrics,
    };
    if scenario.steps == 0 {
        return Err(ScenarioError::Schema {
            path: "steps".into(),
            message: "a scenario file must request at least one step".into(),
        });
    }
    scenario
        .validate()
        .map_err(|e| ScenarioError::Invariant(e.to_string()))?;
    Ok(ParsedScenario {
        scenario,
        applied_defaults: d.0,
    })
}

/// The fully explicit on-disk form of a scenario.
pub fn to_file(s: &Scenario) -> ScenarioFile {
    let agents = match &s.agents {
        AgentPlacement::Explicit(p) => AgentsSection {
            positions: Some(p.clone()),
            spawn: None,
        },
        AgentPlacement::Spawn {
            count,
            min,
            max,
            min_separation,
        } => AgentsSection {
            positions: None,
            spawn: Some(SpawnSection {
                count: *count,
                min: Some(*min),
                max: Some(*max),
                min_separation: Some(*min_separation),
            }),
        },
    };
    let c = &s.controller;
    ScenarioFile {
        schema_version: SCHEMA_VERSION,
        name: s.name.clone(),
        description: s.description.clone(),
        arena: s.arena,
        obstacles: s.obstacles.clone(),
        agents,
        targets: TargetsSection {
            positions: s.targets.clone(),
            speed: s.target_speed,
        },
        controller: ControllerSection {
            base_speed: Some(c.base_speed),
            approach_gain: Some(c.approach_gain),
            approach_accel: Some(c.approach_accel),
            approach_brake_gain: Some(c.approach_brake_gain),
            entrap_radius: Some(c.entrap_radius),
            agent_repulsion_range: Some(c.agent_repulsion_range),
            agent_repulsion_gain: Some(c.agent_repulsion_gain),
            target_repulsion_range: Some(c.target_repulsion_range),
            target_repulsion_gain: Some(c.target_repulsion_gain),
            wall_gain: Some(c.wall_gain),
            wall_range: Some(c.wall_range),
            wall_accel: Some(c.wall_accel),
            wall_brake_gain: Some(c.wall_brake_gain),
            speed_limit: Some(c.speed_limit),
            shill_speed: Some(c.shill_speed),
            wall_term_variant: Some(c.wall_term_variant),
        },
        decision: DecisionSection {
            distance: Some(s.decision.weights.distance),
            crowding: Some(s.decision.weights.crowding),
            hysteresis: Some(s.decision.hysteresis),
            extra: Some(s.decision.weights.extra.clone()),
            baseline: Some(s.baseline),
        },
        levy: LevySection {
            alpha: Some(s.levy.alpha),
            min_step: Some(s.levy.min_step),
            max_step: Some(s.levy.max_step),
        },
        steps: Some(s.steps),
        seed: Some(s.seed),
        metrics: MetricsSection {
            sector_radius: Some(s.metrics.sector_radius),
            sector_count: Some(s.metrics.sector_count),
            sample_interval: Some(s.metrics.sample_interval),
        },
    }
}

/// Pretty-printed JSON with every parameter spelled out.
pub fn serialize_scenario(s: &Scenario) -> String {
    let mut out = serde_json::to_string_pretty(&to_file(s)).expect("scenario serializes");
    out.push('\n');
    out
}

/// Hex SHA-256 of the canonical serialization.
pub fn scenario_digest(s: &Scenario) -> String {
    sha256_hex(serialize_scenario(s).as_bytes())
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}
