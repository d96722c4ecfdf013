//! Guarded-event encoding of the three-level machines for subscenarios S4
//! (M40, M41, M42) and S3 (M30, M31, M32), plus the generic event framework
//! the proof-obligation checker runs against.
//!
//! Machines are immutable after construction; states are immutable snapshots.
//! Guards and actions are pure functions of `(state, params, constants)`.

mod s3;
mod s4;

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::world::{ScenarioConstants, Subscenario, WorldState};

/// Event parameters: the proposed next position and velocity.
#[derive(Clone, Debug, PartialEq)]
pub struct EventParams<S: Scalar> {
    pub p_x: S,
    pub p_v: S,
}

pub type GuardFn<S> =
    Arc<dyn Fn(&WorldState<S>, &EventParams<S>, &ScenarioConstants<S>) -> bool + Send + Sync>;
pub type ActionFn<S> =
    Arc<dyn Fn(&WorldState<S>, &EventParams<S>, &ScenarioConstants<S>) -> WorldState<S> + Send + Sync>;
pub type ParamSamplerFn<S> =
    Arc<dyn Fn(&WorldState<S>, &ScenarioConstants<S>, &mut ChaCha8Rng) -> EventParams<S> + Send + Sync>;
pub type InvariantFn<S> =
    Arc<dyn Fn(&WorldState<S>, &ScenarioConstants<S>) -> bool + Send + Sync>;
pub type StateSamplerFn<S> =
    Arc<dyn Fn(&ScenarioConstants<S>, &mut ChaCha8Rng) -> WorldState<S> + Send + Sync>;

/// One labelled guard conjunct.
#[derive(Clone)]
pub struct GuardClause<S: Scalar> {
    pub label: &'static str,
    pub pred: GuardFn<S>,
}

pub(crate) fn guard<S: Scalar>(
    label: &'static str,
    f: impl Fn(&WorldState<S>, &EventParams<S>, &ScenarioConstants<S>) -> bool + Send + Sync + 'static,
) -> GuardClause<S> {
    GuardClause {
        label,
        pred: Arc::new(f),
    }
}

pub(crate) fn inv<S: Scalar>(
    label: &'static str,
    inherited: bool,
    f: impl Fn(&WorldState<S>, &ScenarioConstants<S>) -> bool + Send + Sync + 'static,
) -> InvariantClause<S> {
    InvariantClause {
        label,
        inherited,
        pred: Arc::new(f),
    }
}

/// Re-tags a machine's invariants as inherited for use by a refinement.
pub(crate) fn inherit<S: Scalar>(base: Vec<InvariantClause<S>>) -> Vec<InvariantClause<S>> {
    base.into_iter()
        .map(|mut i| {
            i.inherited = true;
            i
        })
        .collect()
}

/// One labelled invariant predicate.
#[derive(Clone)]
pub struct InvariantClause<S: Scalar> {
    pub label: &'static str,
    /// True when inherited from the abstract machine (all variables are
    /// inherited, so inherited invariants stay well-formed here).
    pub inherited: bool,
    pub pred: InvariantFn<S>,
}

/// A guarded event with an optional refinement link.
#[derive(Clone)]
pub struct EventDef<S: Scalar> {
    pub name: &'static str,
    pub refines: Option<&'static str>,
    pub is_init: bool,
    pub guards: Vec<GuardClause<S>>,
    pub action: ActionFn<S>,
    /// Samples parameters aimed at the guard-satisfying region, with
    /// boundary bias. The guard itself is still the arbiter.
    pub param_sampler: ParamSamplerFn<S>,
}

impl<S: Scalar> EventDef<S> {
    pub fn guard_holds(
        &self,
        state: &WorldState<S>,
        params: &EventParams<S>,
        consts: &ScenarioConstants<S>,
    ) -> bool {
        self.guards.iter().all(|g| (g.pred)(state, params, consts))
    }

    pub fn failing_guard(
        &self,
        state: &WorldState<S>,
        params: &EventParams<S>,
        consts: &ScenarioConstants<S>,
    ) -> Option<&'static str> {
        self.guards
            .iter()
            .find(|g| !(g.pred)(state, params, consts))
            .map(|g| g.label)
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug, Hash, PartialOrd, Ord)]
pub enum MachineName {
    M40,
    M41,
    M42,
    M30,
    M31,
    M32,
}

impl MachineName {
    pub const ALL: [MachineName; 6] = [
        MachineName::M40,
        MachineName::M41,
        MachineName::M42,
        MachineName::M30,
        MachineName::M31,
        MachineName::M32,
    ];

    pub fn family(&self) -> Subscenario {
        match self {
            MachineName::M40 | MachineName::M41 | MachineName::M42 => Subscenario::S4,
            MachineName::M30 | MachineName::M31 | MachineName::M32 => Subscenario::S3,
        }
    }

    pub fn abstract_name(&self) -> Option<MachineName> {
        match self {
            MachineName::M40 | MachineName::M30 => None,
            MachineName::M41 => Some(MachineName::M40),
            MachineName::M42 => Some(MachineName::M41),
            MachineName::M31 => Some(MachineName::M30),
            MachineName::M32 => Some(MachineName::M31),
        }
    }
}

impl fmt::Display for MachineName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            MachineName::M40 => "M40",
            MachineName::M41 => "M41",
            MachineName::M42 => "M42",
            MachineName::M30 => "M30",
            MachineName::M31 => "M31",
            MachineName::M32 => "M32",
        };
        write!(f, "{s}")
    }
}

impl FromStr for MachineName {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "M40" => Ok(MachineName::M40),
            "M41" => Ok(MachineName::M41),
            "M42" => Ok(MachineName::M42),
            "M30" => Ok(MachineName::M30),
            "M31" => Ok(MachineName::M31),
            "M32" => Ok(MachineName::M32),
            other => Err(Error::Feature(format!("unknown machine `{other}`"))),
        }
    }
}

/// Controlled guard mutations, used to demonstrate checker sensitivity.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Mutation {
    /// Weakens `surely_safe_next` from a two-cycle to a one-cycle
    /// max-acceleration lookahead.
    DmOneCycleLookahead,
}

impl FromStr for Mutation {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dm-one-cycle-lookahead" => Ok(Mutation::DmOneCycleLookahead),
            other => Err(Error::Feature(format!("unknown mutation `{other}`"))),
        }
    }
}

/// A machine: named invariants (inherited + new), events, and a constructive
/// sampler over its invariant-satisfying states.
#[derive(Clone)]
pub struct MachineDef<S: Scalar> {
    pub name: MachineName,
    pub refines: Option<MachineName>,
    pub invariants: Vec<InvariantClause<S>>,
    pub events: Vec<EventDef<S>>,
    pub state_sampler: StateSamplerFn<S>,
}

impl<S: Scalar> MachineDef<S> {
    pub fn event(&self, name: &str) -> Option<&EventDef<S>> {
        self.events.iter().find(|e| e.name == name)
    }

    pub fn invariants_hold(&self, state: &WorldState<S>, consts: &ScenarioConstants<S>) -> bool {
        self.invariants.iter().all(|i| (i.pred)(state, consts))
    }

    pub fn failing_invariant(
        &self,
        state: &WorldState<S>,
        consts: &ScenarioConstants<S>,
    ) -> Option<&'static str> {
        self.invariants
            .iter()
            .find(|i| !(i.pred)(state, consts))
            .map(|i| i.label)
    }

    pub fn non_init_events(&self) -> impl Iterator<Item = &EventDef<S>> {
        self.events.iter().filter(|e| !e.is_init)
    }
}

/// Builds one of the six machines, optionally with a guard mutation applied.
pub fn build_machine<S: Scalar>(
    name: MachineName,
    mutation: Option<Mutation>,
) -> MachineDef<S> {
    match name {
        MachineName::M40 => s4::m40(),
        MachineName::M41 => s4::m41(mutation),
        MachineName::M42 => s4::m42(mutation),
        MachineName::M30 => s3::m30(),
        MachineName::M31 => s3::m31(mutation),
        MachineName::M32 => s3::m32(mutation),
    }
}

/// Events whose guard is satisfiable at `state` for some sampled parameters.
/// Each enabled event is returned with a witness parameter assignment.
pub fn enabled_events<'m, S: Scalar>(
    m: &'m MachineDef<S>,
    state: &WorldState<S>,
    consts: &ScenarioConstants<S>,
    rng: &mut ChaCha8Rng,
    attempts: u32,
) -> Vec<(&'m EventDef<S>, EventParams<S>)> {
    let mut out = Vec::new();
    for ev in m.non_init_events() {
        for _ in 0..attempts {
            let params = (ev.param_sampler)(state, consts, rng);
            if ev.guard_holds(state, &params, consts) {
                out.push((ev, params));
                break;
            }
        }
    }
    out
}

/// Applies an event; errors with the failing guard label when off-guard.
pub fn apply_event<S: Scalar>(
    m: &MachineDef<S>,
    state: &WorldState<S>,
    event_name: &str,
    params: &EventParams<S>,
    consts: &ScenarioConstants<S>,
) -> Result<WorldState<S>> {
    let ev = m
        .event(event_name)
        .ok_or_else(|| Error::Model(format!("{}: no event `{event_name}`", m.name)))?;
    if let Some(label) = ev.failing_guard(state, params, consts) {
        return Err(Error::Contract(format!(
            "{}.{event_name}: guard `{label}` does not hold",
            m.name
        )));
    }
    Ok((ev.action)(state, params, consts))
}

/// Refinement pairing (concrete event, abstract event) per the `refines`
/// links; total over the concrete machine's non-initialisation events.
pub fn refinement_pairs<'a, S: Scalar>(
    concrete: &'a MachineDef<S>,
    abstract_m: &'a MachineDef<S>,
) -> Result<Vec<(&'a EventDef<S>, &'a EventDef<S>)>> {
    if concrete.refines != Some(abstract_m.name) {
        return Err(Error::Model(format!(
            "{} does not refine {}",
            concrete.name, abstract_m.name
        )));
    }
    let mut pairs = Vec::new();
    for ev in concrete.non_init_events() {
        let target = ev.refines.ok_or_else(|| {
            Error::Model(format!("{}.{}: missing refines link", concrete.name, ev.name))
        })?;
        let abs = abstract_m.event(target).ok_or_else(|| {
            Error::Model(format!(
                "{}.{}: dangling refines target `{target}`",
                concrete.name, ev.name
            ))
        })?;
        pairs.push((ev, abs));
    }
    Ok(pairs)
}

/// Machine inventory as line-oriented JSON (one machine per line).
pub fn inventory_jsonl<S: Scalar>(machines: &[MachineDef<S>]) -> String {
    let mut out = String::new();
    for m in machines {
        let events: Vec<serde_json::Value> = m
            .events
            .iter()
            .map(|e| {
                serde_json::json!({
                    "name": e.name,
                    "refines": e.refines,
                    "initialisation": e.is_init,
                    "guards": e.guards.iter().map(|g| g.label).collect::<Vec<_>>(),
                })
            })
            .collect();
        let invariants: Vec<serde_json::Value> = m
            .invariants
            .iter()
            .map(|i| serde_json::json!({"label": i.label, "inherited": i.inherited}))
            .collect();
        let line = serde_json::json!({
            "machine": m.name.to_string(),
            "subscenario": m.name.family().to_string(),
            "refines": m.refines.map(|r| r.to_string()),
            "invariants": invariants,
            "events": events,
        });
        out.push_str(&line.to_string());
        out.push('\n');
    }
    out
}
