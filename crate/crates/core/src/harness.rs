//! Cycle-loop trace runner, per-cycle violation detection, and
//! initial-state sweeps mapping the safe / goal-achieving region.

use crate::controller::{
    activate_bc, builtin_strategy, dm_decide, simplex_cycle, AcProposal, AcStrategy,
    CycleDecision, DmDecision, ProposalPolicy, SubscenarioSpec,
};
use crate::error::{Error, Result};
use crate::rss::{env_holds, goal_pred, phi4, safety_pred};
use crate::sample::{rng_for, seed_for};
use crate::scalar::Scalar;
use crate::world::{
    sv_lanes_during_change, Ctrl, ScenarioConstants, Subscenario, WorldState,
};

/// How a trace ended.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum TerminalStatus {
    Goal,
    Violation,
    Timeout,
    /// The SV is stopped away from the goal and no longer moving.
    Stalled,
}

impl std::fmt::Display for TerminalStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            TerminalStatus::Goal => write!(f, "GOAL"),
            TerminalStatus::Violation => write!(f, "VIOLATION"),
            TerminalStatus::Timeout => write!(f, "TIMEOUT"),
            TerminalStatus::Stalled => write!(f, "STALLED"),
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum ViolationKind {
    Invariant,
    Safety,
    Collision,
    Overtime,
}

impl std::fmt::Display for ViolationKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ViolationKind::Invariant => write!(f, "INVARIANT"),
            ViolationKind::Safety => write!(f, "SAFETY"),
            ViolationKind::Collision => write!(f, "COLLISION"),
            ViolationKind::Overtime => write!(f, "OVERTIME"),
        }
    }
}

/// One detected violation; re-evaluating `predicate` at `state` reproduces it.
#[derive(Clone, Debug)]
pub struct Violation<S: Scalar> {
    pub kind: ViolationKind,
    pub predicate: &'static str,
    pub cycle: u32,
    pub state: WorldState<S>,
}

/// One cycle boundary. The action fields describe the cycle that started
/// here; they are empty on the terminal record.
#[derive(Clone, Debug)]
pub struct CycleRecord<S: Scalar> {
    pub cycle: u32,
    pub state: WorldState<S>,
    pub proposal: Option<AcProposal<S>>,
    pub substituted: bool,
    pub decision: Option<CycleDecision>,
    /// Violations detected in the state this cycle produced.
    pub violations: Vec<Violation<S>>,
}

#[derive(Clone, Debug)]
pub struct Trace<S: Scalar> {
    pub subscenario: Subscenario,
    pub consts: ScenarioConstants<S>,
    pub seed: u64,
    pub status: TerminalStatus,
    pub records: Vec<CycleRecord<S>>,
}

impl<S: Scalar> Trace<S> {
    pub fn final_state(&self) -> &WorldState<S> {
        &self.records.last().expect("trace has records").state
    }

    pub fn cycles(&self) -> u32 {
        (self.records.len() - 1) as u32
    }

    pub fn violations(&self) -> impl Iterator<Item = &Violation<S>> {
        self.records.iter().flat_map(|r| r.violations.iter())
    }
}

/// Names the first initial-state clause that fails, if any.
pub fn precondition_failure<S: Scalar>(
    spec: SubscenarioSpec,
    init: &WorldState<S>,
    consts: &ScenarioConstants<S>,
) -> Option<&'static str> {
    let zero = S::zero();
    if init.sv.x < zero || init.sv.x > consts.x_tgt {
        return Some("no_overrun");
    }
    if init.sv.v < zero || init.sv.v > consts.v_max {
        return Some("v_regulated");
    }
    if !env_holds(&init.povs, consts) {
        return Some("env");
    }
    if !phi4(&init.sv.x, &init.sv.v, consts) {
        return Some("precond");
    }
    if spec.id == Subscenario::S3 {
        let Some(p2) = init.pov(2) else {
            return Some("env_pov2_present");
        };
        if init.sv.x >= p2.x {
            return Some("pov_ahead");
        }
        if init.sv.v > p2.v {
            return Some("v_below_lead");
        }
        // gap >= dRSS, via the full machine-form precondition
        if !spec.phi_now(init, consts) {
            return Some("rss_gap");
        }
        if init.lanes != sv_lanes_during_change(init.t_lce, consts.t_lc) {
            return Some("lane_progress");
        }
    }
    None
}

/// Evaluates every invariant and safety predicate of the active
/// subscenario, plus collision and lane-change overtime.
pub fn detect_violations<S: Scalar>(
    spec: SubscenarioSpec,
    state: &WorldState<S>,
    cycle: u32,
    consts: &ScenarioConstants<S>,
) -> Vec<Violation<S>> {
    let mut out = Vec::new();
    let mut push = |kind: ViolationKind, predicate: &'static str| {
        out.push(Violation {
            kind,
            predicate,
            cycle,
            state: state.clone(),
        });
    };
    let zero = S::zero();

    if state.sv.x < zero || state.sv.x > consts.x_tgt {
        push(ViolationKind::Invariant, "no_overrun");
    }
    if state.sv.v < zero || state.sv.v > consts.v_max {
        push(ViolationKind::Invariant, "v_regulated");
    }
    if !spec.phi_now(state, consts) {
        push(ViolationKind::Invariant, "precond");
    }
    if state.ctrl == Ctrl::Ac && !spec.lookahead_ok(state, consts, 1) {
        push(ViolationKind::Invariant, "switching");
    }
    if spec.id == Subscenario::S3 {
        if let Some(p2) = state.pov(2) {
            if state.sv.v > p2.v {
                push(ViolationKind::Invariant, "v_below_lead");
            }
        }
        if state.t_lce > consts.t_lc {
            push(ViolationKind::Overtime, "no_overtime");
        }
    }
    match safety_pred(spec.id, state, consts) {
        Ok(true) => {}
        _ => push(ViolationKind::Safety, "safety"),
    }
    // collision: a leading POV shares a lane and the gap is closed
    for pov in &state.povs {
        if pov.id >= 2 && pov.lanes.intersects(state.lanes) && pov.x <= state.sv.x {
            push(ViolationKind::Collision, "collision");
        }
    }
    out
}

/// Number of consecutive motionless stopped cycles before a trace is
/// declared stalled; transient zero-velocity proposals do not count.
const STALL_CYCLES: u32 = 3;

/// Runs the Simplex loop from `init` until the subgoal holds, a violation
/// is detected, the SV stalls, or `max_cycles` elapse.
///
/// The DM inspects the initial state before the AC's first move: an initial
/// state inside the precondition but past the two-cycle switching margin is
/// handed to the BC at cycle zero.
pub fn run_trace<S: Scalar>(
    spec: SubscenarioSpec,
    init: &WorldState<S>,
    strategy: &mut dyn AcStrategy<S>,
    max_cycles: u32,
    consts: &ScenarioConstants<S>,
    seed: u64,
) -> Result<Trace<S>> {
    if let Some(clause) = precondition_failure(spec, init, consts) {
        return Err(Error::Contract(format!(
            "initial state violates `{clause}`"
        )));
    }
    let mut rng = rng_for(seed, "trace");
    let mut state = init.clone();
    if state.ctrl == Ctrl::Ac && dm_decide(&state, spec, consts) == DmDecision::Switch {
        let here = AcProposal {
            p_x: state.sv.x.clone(),
            p_v: state.sv.v.clone(),
        };
        state.ctrl = Ctrl::Bc;
        state.v_bc0 = state.sv.v.clone();
        state.plan = activate_bc(&here, state.t_lce, spec, consts)?;
    }

    let mut records: Vec<CycleRecord<S>> = Vec::new();
    let terminal = |records: &mut Vec<CycleRecord<S>>,
                        state: &WorldState<S>,
                        cycle: u32,
                        violations: Vec<Violation<S>>| {
        records.push(CycleRecord {
            cycle,
            state: state.clone(),
            proposal: None,
            substituted: false,
            decision: None,
            violations,
        });
    };

    let init_viols = detect_violations(spec, &state, 0, consts);
    if !init_viols.is_empty() {
        terminal(&mut records, &state, 0, init_viols);
        return Ok(Trace {
            subscenario: spec.id,
            consts: consts.clone(),
            seed,
            status: TerminalStatus::Violation,
            records,
        });
    }

    let mut idle = 0u32;
    let mut status = TerminalStatus::Timeout;
    for cycle in 0..max_cycles {
        if goal_pred(spec.id, &state, consts)? {
            status = TerminalStatus::Goal;
            break;
        }
        let out = simplex_cycle(
            &state,
            strategy,
            spec,
            ProposalPolicy::default(),
            consts,
            &mut rng,
        )?;
        let viols = detect_violations(spec, &out.next, cycle, consts);
        let violated = !viols.is_empty();
        records.push(CycleRecord {
            cycle,
            state: state.clone(),
            proposal: out.proposal,
            substituted: out.substituted,
            decision: Some(out.decision),
            violations: viols,
        });
        if out.next.sv.v.is_zero() && out.next.sv.x == state.sv.x {
            idle += 1;
        } else {
            idle = 0;
        }
        state = out.next;
        if violated {
            status = TerminalStatus::Violation;
            break;
        }
        if idle >= STALL_CYCLES && !goal_pred(spec.id, &state, consts)? {
            status = TerminalStatus::Stalled;
            break;
        }
    }
    if status == TerminalStatus::Timeout && goal_pred(spec.id, &state, consts)? {
        status = TerminalStatus::Goal;
    }
    let end_cycle = records.len() as u32;
    terminal(&mut records, &state, end_cycle, Vec::new());
    Ok(Trace {
        subscenario: spec.id,
        consts: consts.clone(),
        seed,
        status,
        records,
    })
}

// --- sweeps -----------------------------------------------------------------

/// Initial-state lattice. For S3 sweeps the lead vehicle starts `gap` ahead
/// at velocity `v2` (default `v_max`); S4 ignores both.
#[derive(Clone, Debug)]
pub struct LatticeSpec<S: Scalar> {
    pub xs: Vec<S>,
    pub vs: Vec<S>,
    pub gaps: Vec<S>,
    pub v2: Option<S>,
}

#[derive(Clone, Debug)]
pub struct SweepPoint<S: Scalar> {
    pub x: S,
    pub v: S,
    pub gap: Option<S>,
    /// `None` when the point fails the precondition and was skipped.
    pub status: Option<TerminalStatus>,
    pub cycles: u32,
}

#[derive(Clone, Debug)]
pub struct SweepReport<S: Scalar> {
    pub subscenario: Subscenario,
    pub points: Vec<SweepPoint<S>>,
    pub skipped: usize,
    pub goals: usize,
    pub violations: usize,
    pub timeouts: usize,
    pub stalled: usize,
}

impl<S: Scalar> SweepReport<S> {
    /// Per (v, gap) line: the largest x ending GOAL and the smallest x that
    /// does not, marking the boundary of the goal-achieving region.
    pub fn goal_boundary(&self) -> Vec<(S, Option<S>, Option<S>, Option<S>)> {
        let mut rows: Vec<(S, Option<S>, Option<S>, Option<S>)> = Vec::new();
        for p in &self.points {
            let Some(status) = p.status else { continue };
            let row = rows
                .iter_mut()
                .find(|(v, g, _, _)| *v == p.v && *g == p.gap);
            let row = match row {
                Some(r) => r,
                None => {
                    rows.push((p.v.clone(), p.gap.clone(), None, None));
                    rows.last_mut().unwrap()
                }
            };
            if status == TerminalStatus::Goal {
                if row.2.as_ref().map_or(true, |best| p.x > *best) {
                    row.2 = Some(p.x.clone());
                }
            } else if row.3.as_ref().map_or(true, |best| p.x < *best) {
                row.3 = Some(p.x.clone());
            }
        }
        rows
    }
}

/// Runs one trace per lattice point whose initial state satisfies the
/// precondition; other points are skipped and counted.
pub fn sweep_initial_states<S: Scalar>(
    spec: SubscenarioSpec,
    lattice: &LatticeSpec<S>,
    strategy_name: &str,
    max_cycles: u32,
    consts: &ScenarioConstants<S>,
    seed: u64,
) -> Result<SweepReport<S>> {
    if lattice.xs.is_empty() || lattice.vs.is_empty() {
        return Err(Error::Domain("sweep lattice is empty".into()));
    }
    let gaps: Vec<Option<S>> = match spec.id {
        Subscenario::S3 => {
            if lattice.gaps.is_empty() {
                return Err(Error::Domain("S3 sweep lattice needs gap values".into()));
            }
            lattice.gaps.iter().cloned().map(Some).collect()
        }
        _ => vec![None],
    };
    let v2 = lattice.v2.clone().unwrap_or_else(|| consts.v_max.clone());
    let mut report = SweepReport {
        subscenario: spec.id,
        points: Vec::new(),
        skipped: 0,
        goals: 0,
        violations: 0,
        timeouts: 0,
        stalled: 0,
    };
    let mut idx = 0u64;
    for gap in &gaps {
        for v in &lattice.vs {
            for x in &lattice.xs {
                idx += 1;
                let init = match gap {
                    None => WorldState::new_s4(x.clone(), v.clone()),
                    Some(g) => WorldState::new_s3(
                        x.clone(),
                        v.clone(),
                        x.clone() + g.clone(),
                        v2.clone(),
                    ),
                };
                if precondition_failure(spec, &init, consts).is_some() {
                    report.skipped += 1;
                    report.points.push(SweepPoint {
                        x: x.clone(),
                        v: v.clone(),
                        gap: gap.clone(),
                        status: None,
                        cycles: 0,
                    });
                    continue;
                }
                let mut strategy = builtin_strategy::<S>(strategy_name)?;
                let trace = run_trace(
                    spec,
                    &init,
                    strategy.as_mut(),
                    max_cycles,
                    consts,
                    seed_for(seed, &format!("sweep/{idx}")),
                )?;
                match trace.status {
                    TerminalStatus::Goal => report.goals += 1,
                    TerminalStatus::Violation => report.violations += 1,
                    TerminalStatus::Timeout => report.timeouts += 1,
                    TerminalStatus::Stalled => report.stalled += 1,
                }
                report.points.push(SweepPoint {
                    x: x.clone(),
                    v: v.clone(),
                    gap: gap.clone(),
                    status: Some(trace.status),
                    cycles: trace.cycles(),
                });
            }
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::controller::{MaxAccel, RandomAdmissible};
    use crate::rss::phi4;
    use crate::scalar::Rat;
    use crate::world::{Ctrl, LaneSet};

    fn r(n: i64) -> Rat {
        Rat::from_int(n)
    }

    fn consts() -> ScenarioConstants<Rat> {
        ScenarioConstants::defaults()
    }

    fn s4() -> SubscenarioSpec {
        SubscenarioSpec::new(Subscenario::S4).unwrap()
    }

    fn s3() -> SubscenarioSpec {
        SubscenarioSpec::new(Subscenario::S3).unwrap()
    }

    #[test]
    fn standing_start_reaches_the_target_exactly() {
        let c = consts();
        let init = WorldState::new_s4(r(0), r(0));
        let trace = run_trace(s4(), &init, &mut MaxAccel, 200, &c, 1).unwrap();
        assert_eq!(trace.status, TerminalStatus::Goal);
        let end = trace.final_state();
        assert_eq!((end.sv.x.clone(), end.sv.v.clone()), (r(100), r(0)));
        assert_eq!(trace.violations().count(), 0);
    }

    #[test]
    fn zero_cycle_budget_times_out_with_one_record() {
        let c = consts();
        let init = WorldState::new_s4(r(0), r(10));
        let trace = run_trace(s4(), &init, &mut MaxAccel, 0, &c, 1).unwrap();
        assert_eq!(trace.status, TerminalStatus::Timeout);
        assert_eq!(trace.records.len(), 1);
    }

    #[test]
    fn bad_initial_gap_names_the_clause() {
        let c = consts();
        // gap 1 < dRSS(4, 10) = 23
        let init = WorldState::new_s3(r(29), r(10), r(30), r(4));
        let err = run_trace(s3(), &init, &mut MaxAccel, 10, &c, 1).unwrap_err();
        assert!(err.to_string().contains("v_below_lead"), "{err}");
        let init = WorldState::new_s3(r(20), r(4), r(21), r(4));
        let err = run_trace(s3(), &init, &mut MaxAccel, 10, &c, 1).unwrap_err();
        assert!(err.to_string().contains("rss_gap"), "{err}");
    }

    #[test]
    fn initial_state_past_switching_margin_is_handed_to_bc() {
        let c = consts();
        // phi4 holds at (90, 4) but not after two max-accel cycles
        let init = WorldState::new_s4(r(90), r(4));
        let trace = run_trace(s4(), &init, &mut MaxAccel, 50, &c, 1).unwrap();
        assert_eq!(trace.status, TerminalStatus::Goal);
        assert_eq!(trace.records[0].state.ctrl, Ctrl::Bc);
        let end = trace.final_state();
        assert_eq!((end.sv.x.clone(), end.sv.v.clone()), (r(100), r(0)));
    }

    #[test]
    fn stopped_cruise_stalls() {
        let c = consts();
        let init = WorldState::new_s4(r(50), r(0));
        let mut cruise = crate::controller::Cruise;
        let trace = run_trace(s4(), &init, &mut cruise, 50, &c, 1).unwrap();
        assert_eq!(trace.status, TerminalStatus::Stalled);
        assert_eq!(trace.violations().count(), 0);
    }

    #[test]
    fn collision_is_detected() {
        let c = consts();
        let mut state = WorldState::new_s3(r(30), r(4), r(30), r(4));
        state.t_lce = 1;
        state.lanes = sv_lanes_during_change(1, c.t_lc);
        let viols = detect_violations(s3(), &state, 0, &c);
        assert!(viols
            .iter()
            .any(|v| v.kind == ViolationKind::Collision));
    }

    #[test]
    fn s3_traces_complete_the_lane_change() {
        let c = consts();
        let init = WorldState::new_s3(r(0), r(8), r(30), r(10));
        let trace = run_trace(s3(), &init, &mut RandomAdmissible, 50, &c, 9).unwrap();
        assert_eq!(trace.status, TerminalStatus::Goal);
        let end = trace.final_state();
        assert_eq!(end.t_lce, c.t_lc);
        assert_eq!(end.lanes, LaneSet::single(3));
        assert_eq!(trace.violations().count(), 0);
    }

    #[test]
    fn traces_are_deterministic() {
        let c = consts();
        let init = WorldState::new_s4(r(0), r(10));
        let run = || {
            let mut strat = RandomAdmissible;
            run_trace(s4(), &init, &mut strat, 500, &c, 42).unwrap()
        };
        let (a, b) = (run(), run());
        assert_eq!(a.status, b.status);
        assert_eq!(a.records.len(), b.records.len());
        assert_eq!(a.final_state().sv, b.final_state().sv);
    }

    #[test]
    fn sweep_maps_the_goal_region() {
        let c = consts();
        let lattice = LatticeSpec {
            xs: (0..=9).map(|i| r(i * 10)).collect(),
            vs: (0..=10).map(|i| r(i * 2)).collect(),
            gaps: Vec::new(),
            v2: None,
        };
        let report =
            sweep_initial_states(s4(), &lattice, "max-accel", 500, &c, 5).unwrap();
        assert_eq!(report.points.len(), 110);
        assert_eq!(report.violations, 0);
        for p in &report.points {
            match p.status {
                // every admissible start with some speed pulls over
                Some(s) if p.v > r(0) => assert_eq!(s, TerminalStatus::Goal),
                Some(s) => assert_eq!(s, TerminalStatus::Goal), // max-accel moves off v=0 too
                None => assert!(!phi4(&p.x, &p.v, &c)),
            }
        }
        assert!(report.skipped > 0);
        assert!(!report.goal_boundary().is_empty());
    }
}
