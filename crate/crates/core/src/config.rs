//! Run configuration. One structured file drives every command; callers
//! layer flag overrides on top before building the typed state.
//!
//! Numeric fields accept integers, decimals, and rational strings like
//! "7/2", so exact mode never loses precision to the file format.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{parse_scalar, Scalar};
use crate::world::{ScenarioConstants, Subscenario, WorldState};

/// A numeric literal as it appears in the config file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum NumLit {
    Int(i64),
    Float(f64),
    Str(String),
}

impl NumLit {
    pub fn to_scalar<S: Scalar>(&self, field: &str) -> Result<S> {
        let text = match self {
            NumLit::Int(n) => n.to_string(),
            NumLit::Float(f) => f.to_string(),
            NumLit::Str(s) => s.clone(),
        };
        parse_scalar(&text).map_err(|e| Error::Config {
            field: field.into(),
            msg: e.to_string(),
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ArithMode {
    Exact,
    Float,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Json,
    Csv,
}

/// How VACUOUS proof-obligation verdicts affect the check exit status.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VacuousPolicy {
    Warn,
    Fail,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StrategyConfig {
    pub name: String,
    /// Velocity script for the "scripted" strategy, one entry per cycle.
    pub script: Vec<NumLit>,
}

impl Default for StrategyConfig {
    fn default() -> Self {
        Self {
            name: "max-accel".into(),
            script: Vec::new(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ConstantsConfig {
    pub x_tgt: Option<NumLit>,
    pub v_min: Option<NumLit>,
    pub v_max: Option<NumLit>,
    pub b_min: Option<NumLit>,
    pub b_max: Option<NumLit>,
    pub a_max: Option<NumLit>,
    pub t_lc: Option<u32>,
    pub dt: Option<NumLit>,
}

impl ConstantsConfig {
    /// Defaults overlaid with the configured values, then validated.
    pub fn build<S: Scalar>(&self) -> Result<ScenarioConstants<S>> {
        let mut c = ScenarioConstants::defaults();
        let set = |slot: &mut S, lit: &Option<NumLit>, field: &str| -> Result<()> {
            if let Some(l) = lit {
                *slot = l.to_scalar(field)?;
            }
            Ok(())
        };
        set(&mut c.x_tgt, &self.x_tgt, "x_tgt")?;
        set(&mut c.v_min, &self.v_min, "v_min")?;
        set(&mut c.v_max, &self.v_max, "v_max")?;
        set(&mut c.b_min, &self.b_min, "b_min")?;
        set(&mut c.b_max, &self.b_max, "b_max")?;
        set(&mut c.a_max, &self.a_max, "a_max")?;
        set(&mut c.dt, &self.dt, "dt")?;
        if let Some(t) = self.t_lc {
            c.t_lc = t;
        }
        c.validate()?;
        Ok(c)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InitConfig {
    pub x: NumLit,
    pub v: NumLit,
    /// Lead-vehicle state; required for S3, ignored for S4.
    pub x_2: Option<NumLit>,
    pub v_2: Option<NumLit>,
}

impl Default for InitConfig {
    fn default() -> Self {
        Self {
            x: NumLit::Int(0),
            v: NumLit::Int(0),
            x_2: None,
            v_2: None,
        }
    }
}

impl InitConfig {
    pub fn build<S: Scalar>(&self, sub: Subscenario) -> Result<WorldState<S>> {
        let x = self.x.to_scalar("init.x")?;
        let v = self.v.to_scalar("init.v")?;
        match sub {
            Subscenario::S4 => Ok(WorldState::new_s4(x, v)),
            Subscenario::S3 => {
                let missing = |field: &str| Error::Config {
                    field: field.into(),
                    msg: "required for S3".into(),
                };
                let x2 = self
                    .x_2
                    .as_ref()
                    .ok_or_else(|| missing("init.x_2"))?
                    .to_scalar("init.x_2")?;
                let v2 = self
                    .v_2
                    .as_ref()
                    .ok_or_else(|| missing("init.v_2"))?
                    .to_scalar("init.v_2")?;
                Ok(WorldState::new_s3(x, v, x2, v2))
            }
            other => Err(Error::Feature(format!(
                "subscenario {other} is not simulated"
            ))),
        }
    }
}

/// Axes of an initial-state sweep.
#[derive(Clone, Debug, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LatticeConfig {
    pub xs: Vec<NumLit>,
    pub vs: Vec<NumLit>,
    /// S3 only: initial gaps to the lead vehicle.
    pub gaps: Vec<NumLit>,
    pub v_2: Option<NumLit>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub subscenario: String,
    pub seed: u64,
    pub max_cycles: u32,
    /// Samples per proof obligation for the check command.
    pub budget: u64,
    pub arith: ArithMode,
    pub format: OutputFormat,
    pub out: Option<String>,
    pub vacuous: VacuousPolicy,
    pub strategy: StrategyConfig,
    pub constants: ConstantsConfig,
    pub init: InitConfig,
    pub lattice: LatticeConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            subscenario: "S4".into(),
            seed: 0,
            max_cycles: 500,
            budget: 100_000,
            arith: ArithMode::Exact,
            format: OutputFormat::Json,
            out: None,
            vacuous: VacuousPolicy::Warn,
            strategy: StrategyConfig::default(),
            constants: ConstantsConfig::default(),
            init: InitConfig::default(),
            lattice: LatticeConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config {
            field: "config".into(),
            msg: e.to_string(),
        })
    }

    /// Canonical serialized form: fixed field order, so emitting a parsed
    /// config and re-parsing it is byte-stable.
    pub fn to_canonical_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config {
            field: "config".into(),
            msg: e.to_string(),
        })
    }

    pub fn subscenario(&self) -> Result<Subscenario> {
        self.subscenario.parse()
    }
}
