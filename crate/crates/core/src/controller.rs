//! The Simplex control loop: advanced-controller strategies, the baseline
//! controller's proper-response schedules and their executor, and the
//! decision module that moves control between the two.
//!
//! One call to [`simplex_cycle`] advances the world by exactly one cycle.

use std::fmt;

use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::kinematics::{admissible_next, extrapolate_max_accel, step_const_accel};
use crate::rss::{phi3, phi4, Phi3Form};
use crate::sample::grid_in;
use crate::scalar::Scalar;
use crate::world::{
    sv_lanes_during_change, BcSchedule, Ctrl, ResponseId, ScenarioConstants, Subscenario,
    VehicleKinematics, WorldState,
};

/// A proposed next SV state from the advanced controller. Proposals are
/// validated against physical admissibility, never trusted.
#[derive(Clone, Debug, PartialEq)]
pub struct AcProposal<S: Scalar> {
    pub p_x: S,
    pub p_v: S,
}

/// The active subscenario the controller is driving. Only the pull-over
/// legs S3 and S4 have executable controllers here.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct SubscenarioSpec {
    pub id: Subscenario,
}

impl SubscenarioSpec {
    pub fn new(id: Subscenario) -> Result<Self> {
        match id {
            Subscenario::S3 | Subscenario::S4 => Ok(Self { id }),
            other => Err(Error::Feature(format!(
                "no executable controller for subscenario {other}"
            ))),
        }
    }

    /// Machine-form precondition of the subscenario at `state`.
    pub fn phi_now<S: Scalar>(
        &self,
        state: &WorldState<S>,
        consts: &ScenarioConstants<S>,
    ) -> bool {
        self.lookahead_ok(state, consts, 0)
    }

    /// Precondition after `k` further cycles of maximum acceleration.
    /// POVs keep their constant velocities over the lookahead.
    pub fn lookahead_ok<S: Scalar>(
        &self,
        state: &WorldState<S>,
        consts: &ScenarioConstants<S>,
        k: u32,
    ) -> bool {
        let (ex, ev) = extrapolate_max_accel(&state.sv.x, &state.sv.v, consts, k)
            .expect("lookahead depth is 0, 1 or 2");
        match self.id {
            Subscenario::S4 => phi4(&ex, &ev, consts),
            Subscenario::S3 => match state.pov(2) {
                Some(p) => {
                    let kdt = S::from_int(k as i64) * consts.dt.clone();
                    let x2 = p.x.clone() + p.v.clone() * kdt;
                    phi3(&ex, &ev, &x2, &p.v, consts, Phi3Form::Machine)
                }
                None => false,
            },
            _ => false,
        }
    }
}

// --- decision module --------------------------------------------------------

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum DmDecision {
    Stay,
    Switch,
}

/// The decision module. The AC keeps control only while the precondition
/// survives two further maximum-acceleration cycles; the BC hands control
/// back on the same test.
pub fn dm_decide<S: Scalar>(
    state: &WorldState<S>,
    spec: SubscenarioSpec,
    consts: &ScenarioConstants<S>,
) -> DmDecision {
    let surely_safe = spec.lookahead_ok(state, consts, 2);
    let stay = match state.ctrl {
        Ctrl::Ac => surely_safe,
        Ctrl::Bc => !surely_safe,
    };
    if stay {
        DmDecision::Stay
    } else {
        DmDecision::Switch
    }
}

// --- AC strategies ----------------------------------------------------------

/// A black-box advanced controller. Strategies may keep internal state
/// (e.g. a script position) and may use the cycle RNG.
pub trait AcStrategy<S: Scalar>: Send {
    fn name(&self) -> &str;
    fn propose(
        &mut self,
        state: &WorldState<S>,
        consts: &ScenarioConstants<S>,
        rng: &mut ChaCha8Rng,
    ) -> AcProposal<S>;
}

/// Speed limit the AC should respect: v_max, tightened to the lead POV's
/// velocity when one is present.
fn v_ceiling<S: Scalar>(state: &WorldState<S>, consts: &ScenarioConstants<S>) -> S {
    let mut hi = consts.v_max.clone();
    if let Some(p) = state.pov(2) {
        hi = hi.min_s(p.v.clone());
    }
    hi
}

fn consistent_step<S: Scalar>(
    state: &WorldState<S>,
    p_v: S,
    consts: &ScenarioConstants<S>,
) -> AcProposal<S> {
    // constant-acceleration displacement for the chosen end velocity
    let mean = (state.sv.v.clone() + p_v.clone()).half();
    AcProposal {
        p_x: state.sv.x.clone() + mean * consts.dt.clone(),
        p_v,
    }
}

/// Adversarial strategy: always accelerates as hard as the speed limits
/// allow, forcing the DM to intervene at the last safe moment.
pub struct MaxAccel;

impl<S: Scalar> AcStrategy<S> for MaxAccel {
    fn name(&self) -> &str {
        "max-accel"
    }
    fn propose(
        &mut self,
        state: &WorldState<S>,
        consts: &ScenarioConstants<S>,
        _rng: &mut ChaCha8Rng,
    ) -> AcProposal<S> {
        let p_v = (state.sv.v.clone() + consts.a_max.clone() * consts.dt.clone())
            .min_s(v_ceiling(state, consts))
            .max_s(S::zero());
        consistent_step(state, p_v, consts)
    }
}

/// Holds the current velocity.
pub struct Cruise;

impl<S: Scalar> AcStrategy<S> for Cruise {
    fn name(&self) -> &str {
        "cruise"
    }
    fn propose(
        &mut self,
        state: &WorldState<S>,
        consts: &ScenarioConstants<S>,
        _rng: &mut ChaCha8Rng,
    ) -> AcProposal<S> {
        consistent_step(state, state.sv.v.clone(), consts)
    }
}

/// Draws an end velocity uniformly from the comfortable band
/// `[v - b_min dt, v + a_max dt]` intersected with the legal limits.
/// Velocities snap to a fixed grid so exact runs keep small denominators.
pub struct RandomAdmissible;

impl<S: Scalar> AcStrategy<S> for RandomAdmissible {
    fn name(&self) -> &str {
        "random-admissible"
    }
    fn propose(
        &mut self,
        state: &WorldState<S>,
        consts: &ScenarioConstants<S>,
        rng: &mut ChaCha8Rng,
    ) -> AcProposal<S> {
        let lo = (state.sv.v.clone() - consts.b_min.clone() * consts.dt.clone()).max_s(S::zero());
        let hi = (state.sv.v.clone() + consts.a_max.clone() * consts.dt.clone())
            .min_s(v_ceiling(state, consts))
            .max_s(lo.clone());
        let p_v = grid_in(rng, &lo, &hi);
        consistent_step(state, p_v, consts)
    }
}

/// Replays a fixed list of proposals, one per cycle, then cruises.
pub struct Scripted<S: Scalar> {
    steps: Vec<AcProposal<S>>,
    next: usize,
}

impl<S: Scalar> Scripted<S> {
    pub fn new(steps: Vec<AcProposal<S>>) -> Self {
        Self { steps, next: 0 }
    }
}

impl<S: Scalar> AcStrategy<S> for Scripted<S> {
    fn name(&self) -> &str {
        "scripted"
    }
    fn propose(
        &mut self,
        state: &WorldState<S>,
        consts: &ScenarioConstants<S>,
        _rng: &mut ChaCha8Rng,
    ) -> AcProposal<S> {
        match self.steps.get(self.next) {
            Some(p) => {
                self.next += 1;
                p.clone()
            }
            None => consistent_step(state, state.sv.v.clone(), consts),
        }
    }
}

/// Replays a list of target velocities, deriving the consistent position
/// each cycle, then cruises once the list runs out.
pub struct ScriptedVelocities<S: Scalar> {
    velocities: Vec<S>,
    next: usize,
}

impl<S: Scalar> ScriptedVelocities<S> {
    pub fn new(velocities: Vec<S>) -> Self {
        Self {
            velocities,
            next: 0,
        }
    }
}

impl<S: Scalar> AcStrategy<S> for ScriptedVelocities<S> {
    fn name(&self) -> &str {
        "scripted"
    }
    fn propose(
        &mut self,
        state: &WorldState<S>,
        consts: &ScenarioConstants<S>,
        _rng: &mut ChaCha8Rng,
    ) -> AcProposal<S> {
        let p_v = match self.velocities.get(self.next) {
            Some(v) => {
                self.next += 1;
                v.clone()
            }
            None => state.sv.v.clone(),
        };
        consistent_step(state, p_v, consts)
    }
}

/// Built-in strategies by name.
pub fn builtin_strategy<S: Scalar>(name: &str) -> Result<Box<dyn AcStrategy<S>>> {
    match name {
        "max-accel" => Ok(Box::new(MaxAccel)),
        "cruise" => Ok(Box::new(Cruise)),
        "random-admissible" => Ok(Box::new(RandomAdmissible)),
        other => Err(Error::Feature(format!("unknown AC strategy `{other}`"))),
    }
}

// --- BC proper-response schedules -------------------------------------------

/// Clamp a float-mode rounding residue at zero; a genuinely negative value
/// is the caller's precondition failure.
fn nonnegative_or<S: Scalar>(t: S, msg: &str) -> Result<S> {
    if t >= S::zero() {
        Ok(t)
    } else if !S::EXACT && t.approx_eq(&S::zero()) {
        Ok(S::zero())
    } else {
        Err(Error::Precondition(msg.into()))
    }
}

/// Comfortable-stop schedule for the pull-over leg: cruise at `p_v` until
/// braking at `b_min` lands exactly on `x_Tgt` with velocity zero.
pub fn compute_schedule_s4<S: Scalar>(
    p_x: &S,
    p_v: &S,
    consts: &ScenarioConstants<S>,
) -> Result<BcSchedule<S>> {
    if *p_v <= S::zero() {
        return Err(Error::Domain("stop schedule needs a positive velocity".into()));
    }
    let two_b = consts.b_min.clone() + consts.b_min.clone();
    let t_brake = p_v.clone() / consts.b_min.clone();
    let t_cruise = (consts.x_tgt.clone() - p_x.clone()) / p_v.clone() - p_v.clone() / two_b;
    let t_cruise = nonnegative_or(
        t_cruise,
        "comfortable stopping distance exceeds the distance to target",
    )?;
    Ok(BcSchedule {
        t_accel: S::zero(),
        t_cruise,
        t_brake,
        last_response_id: Some(ResponseId::S4),
    })
}

/// Lane-change-completion schedule. Brakes long enough that the stop
/// condition of the following leg holds when braking ends; cruises first so
/// the response also covers the remaining lane-change time. The handoff
/// point only moves forward with extra cruising, so the shortest
/// lane-change-covering cruise time is the only candidate worth checking.
pub fn compute_schedule_s3<S: Scalar>(
    p_x: &S,
    p_v: &S,
    t_lce: u32,
    consts: &ScenarioConstants<S>,
) -> Result<BcSchedule<S>> {
    if *p_v <= S::zero() {
        return Err(Error::Domain(
            "lane-change schedule needs a positive velocity".into(),
        ));
    }
    let two_b = consts.b_min.clone() + consts.b_min.clone();
    let lc_left = S::from_int(consts.t_lc.saturating_sub(t_lce) as i64) * consts.dt.clone();
    let raw = lc_left.clone() + p_v.clone() / two_b.clone()
        + (p_x.clone() - consts.x_tgt.clone()) / p_v.clone();
    let t_brake = raw.max_s(S::zero());
    let t_cruise = (lc_left - t_brake.clone()).max_s(S::zero());

    // verify the handoff condition at the end of the response
    let x_cruise = p_x.clone() + t_cruise.clone() * p_v.clone();
    let brake_time = t_brake.clone().min_s(p_v.clone() / consts.b_min.clone());
    let (x_end, v_end) =
        step_const_accel(&x_cruise, p_v, &(-consts.b_min.clone()), &brake_time)?;
    let margin = (consts.x_tgt.clone() - x_end) - v_end.sq() / two_b;
    nonnegative_or(
        margin,
        "no cruise time covers the lane change and still stops before the target",
    )?;
    Ok(BcSchedule {
        t_accel: S::zero(),
        t_cruise,
        t_brake,
        last_response_id: Some(ResponseId::S3),
    })
}

/// Executes one cycle of the BC plan: accelerate, then cruise, then brake,
/// holding speed once the plan is exhausted. Phase boundaries may fall
/// inside the cycle; each sub-interval uses the closed-form step.
pub fn bc_step<S: Scalar>(
    sv: &VehicleKinematics<S>,
    plan: &BcSchedule<S>,
    consts: &ScenarioConstants<S>,
) -> Result<(VehicleKinematics<S>, BcSchedule<S>)> {
    for t in [&plan.t_accel, &plan.t_cruise, &plan.t_brake] {
        if *t < S::zero() {
            return Err(Error::Domain("negative phase duration in BC plan".into()));
        }
    }
    let mut rem = consts.dt.clone();
    let mut x = sv.x.clone();
    let mut v = sv.v.clone();
    let mut out = plan.clone();

    let d = out.t_accel.clone().min_s(rem.clone());
    if d > S::zero() {
        // accelerate at a_max, cruising once v_max is reached
        let to_cap = ((consts.v_max.clone() - v.clone()) / consts.a_max.clone()).max_s(S::zero());
        let da = d.clone().min_s(to_cap);
        let (nx, nv) = step_const_accel(&x, &v, &consts.a_max, &da)?;
        x = nx + nv.clone() * (d.clone() - da);
        v = nv;
        out.t_accel = out.t_accel - d.clone();
        rem = rem - d;
    }

    let d = out.t_cruise.clone().min_s(rem.clone());
    if d > S::zero() {
        x = x + v.clone() * d.clone();
        out.t_cruise = out.t_cruise - d.clone();
        rem = rem - d;
    }

    let d = out.t_brake.clone().min_s(rem.clone());
    if d > S::zero() {
        // brake at b_min, standing still once v reaches zero
        let to_stop = v.clone() / consts.b_min.clone();
        let db = d.clone().min_s(to_stop);
        let (nx, nv) = step_const_accel(&x, &v, &(-consts.b_min.clone()), &db)?;
        x = nx;
        v = nv;
        out.t_brake = out.t_brake - d.clone();
        rem = rem - d;
    }

    // hold the current speed for the rest of the cycle
    x = x + v.clone() * rem;
    let a_cmd = (v.clone() - sv.v.clone()) / consts.dt.clone();
    Ok((VehicleKinematics { x, v, a_cmd }, out))
}

// --- the cycle --------------------------------------------------------------

/// What to do with an AC proposal that fails validation.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Default)]
pub enum ProposalPolicy {
    /// Replace it with a cruise step (the default).
    #[default]
    SubstituteCruise,
    /// Clamp it into the admissible box.
    Clip,
    /// Fail the cycle.
    Reject,
}

fn proposal_valid<S: Scalar>(
    state: &WorldState<S>,
    p: &AcProposal<S>,
    consts: &ScenarioConstants<S>,
) -> bool {
    admissible_next(&state.sv, &p.p_x, &p.p_v, consts)
        && S::zero() <= p.p_v
        && p.p_v <= v_ceiling(state, consts)
        && p.p_x <= consts.x_tgt
}

fn clip_proposal<S: Scalar>(
    state: &WorldState<S>,
    p: &AcProposal<S>,
    consts: &ScenarioConstants<S>,
) -> AcProposal<S> {
    let dt = &consts.dt;
    let x_hi = (state.sv.x.clone()
        + state.sv.v.clone() * dt.clone()
        + (consts.a_max.clone() * dt.clone() * dt.clone()).half())
    .min_s(consts.x_tgt.clone());
    let v_lo = (state.sv.v.clone() - consts.b_max.clone() * dt.clone()).max_s(S::zero());
    let v_hi = (state.sv.v.clone() + consts.a_max.clone() * dt.clone())
        .min_s(v_ceiling(state, consts))
        .max_s(v_lo.clone());
    AcProposal {
        p_x: p.p_x.clone().max_s(state.sv.x.clone()).min_s(x_hi),
        p_v: p.p_v.clone().max_s(v_lo).min_s(v_hi),
    }
}

/// How control moved at the end of a cycle.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum CycleDecision {
    Stay,
    SwitchToBc,
    ReleaseToAc,
}

impl fmt::Display for CycleDecision {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CycleDecision::Stay => write!(f, "stay"),
            CycleDecision::SwitchToBc => write!(f, "switch_to_bc"),
            CycleDecision::ReleaseToAc => write!(f, "release_to_ac"),
        }
    }
}

#[derive(Clone, Debug)]
pub struct CycleOutcome<S: Scalar> {
    pub next: WorldState<S>,
    /// The proposal actually applied (AC cycles only).
    pub proposal: Option<AcProposal<S>>,
    /// True when the raw proposal failed validation and the policy replaced it.
    pub substituted: bool,
    pub decision: CycleDecision,
}

/// Moves everything but the SV forward one cycle: POVs by their constant
/// velocities, and lane-change progress when a lane change is running.
fn advance_environment<S: Scalar>(
    state: &mut WorldState<S>,
    spec: SubscenarioSpec,
    consts: &ScenarioConstants<S>,
) {
    for pov in state.povs.iter_mut() {
        pov.x = pov.x.clone() + pov.v.clone() * consts.dt.clone();
    }
    if spec.id == Subscenario::S3 {
        state.t_lce = (state.t_lce + 1).min(consts.t_lc);
        state.lanes = sv_lanes_during_change(state.t_lce, consts.t_lc);
    }
}

/// Selects the proper response at a switch to BC. A handover at standstill
/// has nothing to execute; the BC holds.
pub fn activate_bc<S: Scalar>(
    p: &AcProposal<S>,
    t_lce: u32,
    spec: SubscenarioSpec,
    consts: &ScenarioConstants<S>,
) -> Result<BcSchedule<S>> {
    if p.p_v <= S::zero() {
        return Ok(BcSchedule::empty());
    }
    match spec.id {
        Subscenario::S4 => compute_schedule_s4(&p.p_x, &p.p_v, consts),
        Subscenario::S3 => compute_schedule_s3(&p.p_x, &p.p_v, t_lce, consts),
        other => Err(Error::Feature(format!("no proper response for {other}"))),
    }
}

/// One cycle of the Simplex loop.
///
/// AC in control: obtain a proposal, validate it (applying `policy` when it
/// fails), move the world, then let the DM decide; on a switch the BC
/// schedule is computed from the applied proposal. BC in control: execute
/// one plan cycle, then let the DM consider a release. Releases are only
/// considered at phase-aligned points (a full cruise cycle ahead,
/// standstill, or an exhausted plan), matching the switch events of the
/// concrete machines.
pub fn simplex_cycle<S: Scalar>(
    state: &WorldState<S>,
    strategy: &mut dyn AcStrategy<S>,
    spec: SubscenarioSpec,
    policy: ProposalPolicy,
    consts: &ScenarioConstants<S>,
    rng: &mut ChaCha8Rng,
) -> Result<CycleOutcome<S>> {
    match state.ctrl {
        Ctrl::Ac => {
            let raw = strategy.propose(state, consts, rng);
            let (p, substituted) = if proposal_valid(state, &raw, consts) {
                (raw, false)
            } else {
                match policy {
                    ProposalPolicy::Reject => {
                        return Err(Error::Contract(format!(
                            "AC proposal ({}, {}) is not admissible",
                            raw.p_x.repr(),
                            raw.p_v.repr()
                        )))
                    }
                    ProposalPolicy::Clip => (clip_proposal(state, &raw, consts), true),
                    ProposalPolicy::SubstituteCruise => {
                        let cruise = consistent_step(state, state.sv.v.clone(), consts);
                        (clip_proposal(state, &cruise, consts), true)
                    }
                }
            };
            let mut next = state.clone();
            next.sv = VehicleKinematics {
                x: p.p_x.clone(),
                v: p.p_v.clone(),
                a_cmd: (p.p_v.clone() - state.sv.v.clone()) / consts.dt.clone(),
            };
            advance_environment(&mut next, spec, consts);
            let mut decision = CycleDecision::Stay;
            if dm_decide(&next, spec, consts) == DmDecision::Switch {
                decision = CycleDecision::SwitchToBc;
                next.ctrl = Ctrl::Bc;
                next.v_bc0 = p.p_v.clone();
                next.plan = activate_bc(&p, next.t_lce, spec, consts)?;
            }
            Ok(CycleOutcome {
                next,
                proposal: Some(p),
                substituted,
                decision,
            })
        }
        Ctrl::Bc => {
            let release_point = state.plan.t_cruise >= consts.dt
                || state.sv.v.is_zero()
                || state.plan.is_exhausted();
            let (kin, plan) = bc_step(&state.sv, &state.plan, consts)?;
            let mut next = state.clone();
            next.sv = kin;
            next.plan = plan;
            advance_environment(&mut next, spec, consts);
            let mut decision = CycleDecision::Stay;
            if release_point && dm_decide(&next, spec, consts) == DmDecision::Switch {
                decision = CycleDecision::ReleaseToAc;
                next.ctrl = Ctrl::Ac;
            }
            Ok(CycleOutcome {
                next,
                proposal: None,
                substituted: false,
                decision,
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rss::{d_rss, goal_pred};
    use crate::sample::rng_for;
    use crate::scalar::Rat;

    fn r(n: i64) -> Rat {
        Rat::from_int(n)
    }

    fn rr(n: i64, d: i64) -> Rat {
        Rat::from_ratio(n, d)
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
    fn stop_schedule_examples() {
        let c = consts();
        let plan = compute_schedule_s4(&r(0), &r(10), &c).unwrap();
        assert_eq!((plan.t_cruise, plan.t_brake), (rr(15, 2), r(5)));
        let plan = compute_schedule_s4(&r(75), &r(10), &c).unwrap();
        assert_eq!((plan.t_cruise, plan.t_brake), (r(0), r(5)));
        assert!(matches!(
            compute_schedule_s4(&r(90), &r(10), &c),
            Err(Error::Precondition(_))
        ));
        assert!(matches!(
            compute_schedule_s4(&r(0), &r(0), &c),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn lane_change_schedule_examples() {
        let c = consts();
        // lane change already complete: nothing forces braking yet
        let plan = compute_schedule_s3(&r(0), &r(10), c.t_lc, &c).unwrap();
        assert_eq!(plan.t_brake, r(0));
        assert_eq!(plan.last_response_id, Some(ResponseId::S3));
        // mid lane change, far from target: cruise covers the change
        let plan = compute_schedule_s3(&r(0), &r(10), 0, &c).unwrap();
        assert_eq!((plan.t_cruise, plan.t_brake), (r(4), r(0)));
        // too close: braking cannot restore the stop condition
        assert!(matches!(
            compute_schedule_s3(&r(90), &r(10), c.t_lc, &c),
            Err(Error::Precondition(_))
        ));
        assert!(matches!(
            compute_schedule_s3(&r(0), &r(0), 0, &c),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn bc_step_examples() {
        let c = consts();
        let plan = BcSchedule {
            t_accel: r(0),
            t_cruise: rr(15, 2),
            t_brake: r(5),
            last_response_id: Some(ResponseId::S4),
        };
        let sv = VehicleKinematics::new(r(0), r(10));
        let (kin, plan) = bc_step(&sv, &plan, &c).unwrap();
        assert_eq!((kin.x, kin.v), (r(10), r(10)));
        assert_eq!((plan.t_cruise.clone(), plan.t_brake.clone()), (rr(13, 2), r(5)));

        // mixed cruise/brake cycle
        let plan = BcSchedule {
            t_accel: r(0),
            t_cruise: rr(1, 2),
            t_brake: r(5),
            last_response_id: Some(ResponseId::S4),
        };
        let (kin, plan) = bc_step(&sv, &plan, &c).unwrap();
        assert_eq!((kin.x, kin.v), (rr(39, 4), r(9)));
        assert_eq!((plan.t_cruise, plan.t_brake), (r(0), rr(9, 2)));

        // exhausted plan at standstill holds
        let stopped = VehicleKinematics::new(r(100), r(0));
        let (kin, _) = bc_step(&stopped, &BcSchedule::empty(), &c).unwrap();
        assert_eq!((kin.x, kin.v), (r(100), r(0)));
    }

    #[test]
    fn bc_step_accelerates_up_to_v_max() {
        let c = consts();
        let plan = BcSchedule {
            t_accel: r(2),
            t_cruise: r(0),
            t_brake: r(0),
            last_response_id: None,
        };
        let sv = VehicleKinematics::new(r(0), r(19));
        let (kin, plan) = bc_step(&sv, &plan, &c).unwrap();
        assert_eq!((kin.x.clone(), kin.v.clone()), (rr(39, 2), r(20)));
        let (kin, _) = bc_step(&kin, &plan, &c).unwrap();
        // capped at v_max: second accel cycle is pure cruise
        assert_eq!((kin.x, kin.v), (rr(79, 2), r(20)));
    }

    #[test]
    fn dm_examples() {
        let c = consts();
        let stay = WorldState::new_s4(r(0), r(10));
        assert_eq!(dm_decide(&stay, s4(), &c), DmDecision::Stay);
        let close = WorldState::new_s4(r(60), r(12));
        assert_eq!(dm_decide(&close, s4(), &c), DmDecision::Switch);
        let mut bc = WorldState::new_s4(r(0), r(10));
        bc.ctrl = Ctrl::Bc;
        // plenty of margin: release control back to the AC
        assert_eq!(dm_decide(&bc, s4(), &c), DmDecision::Switch);
    }

    /// Drives a trace to the goal, checking the switching invariant and the
    /// BC's no-acceleration property every cycle.
    fn run_to_goal(
        mut state: WorldState<Rat>,
        strategy: &mut dyn AcStrategy<Rat>,
        spec: SubscenarioSpec,
        max_cycles: u32,
        seed: u64,
    ) -> WorldState<Rat> {
        let c = consts();
        let mut rng = rng_for(seed, "controller-test");
        for _ in 0..max_cycles {
            if goal_pred(spec.id, &state, &c).unwrap() {
                return state;
            }
            let out = simplex_cycle(&state, strategy, spec, ProposalPolicy::default(), &c, &mut rng)
                .unwrap();
            assert!(spec.phi_now(&out.next, &c), "precondition lost at {:?}", out.next.sv);
            if out.next.ctrl == Ctrl::Ac {
                assert!(spec.lookahead_ok(&out.next, &c, 1), "switching invariant lost");
            }
            if state.ctrl == Ctrl::Bc && out.next.ctrl == Ctrl::Bc {
                assert!(out.next.sv.v <= state.sv.v, "BC accelerated");
            }
            state = out.next;
        }
        panic!("no goal within {max_cycles} cycles");
    }

    #[test]
    fn adversarial_pull_over_stops_exactly_on_target() {
        let end = run_to_goal(WorldState::new_s4(r(0), r(10)), &mut MaxAccel, s4(), 100, 7);
        assert_eq!((end.sv.x, end.sv.v), (r(100), r(0)));
        assert_eq!(end.ctrl, Ctrl::Bc);
    }

    #[test]
    fn random_pull_over_stops_exactly_on_target() {
        for seed in 0..20 {
            let end = run_to_goal(
                WorldState::new_s4(r(0), r(10)),
                &mut RandomAdmissible,
                s4(),
                500,
                seed,
            );
            if end.ctrl == Ctrl::Bc {
                assert_eq!((end.sv.x, end.sv.v), (r(100), r(0)));
            }
        }
    }

    #[test]
    fn lane_change_completes_and_keeps_the_gap() {
        let c = consts();
        let mut state = WorldState::new_s3(r(0), r(8), r(30), r(10));
        let mut rng = rng_for(11, "controller-test");
        let mut strategy = MaxAccel;
        for _ in 0..c.t_lc {
            assert!(!goal_pred(Subscenario::S3, &state, &c).unwrap());
            let out = simplex_cycle(
                &state,
                &mut strategy,
                s3(),
                ProposalPolicy::default(),
                &c,
                &mut rng,
            )
            .unwrap();
            let pov2 = out.next.pov2().unwrap();
            let gap = pov2.x.clone() - out.next.sv.x.clone();
            assert!(gap >= d_rss(&pov2.v, &out.next.sv.v, &c).unwrap());
            state = out.next;
        }
        assert!(goal_pred(Subscenario::S3, &state, &c).unwrap());
    }

    #[test]
    fn invalid_proposals_are_substituted() {
        let c = consts();
        let mut strategy = Scripted::new(vec![AcProposal {
            p_x: r(50),
            p_v: r(40),
        }]);
        let state = WorldState::new_s4(r(0), r(10));
        let mut rng = rng_for(3, "controller-test");
        let out = simplex_cycle(
            &state,
            &mut strategy,
            s4(),
            ProposalPolicy::default(),
            &c,
            &mut rng,
        )
        .unwrap();
        assert!(out.substituted);
        let p = out.proposal.unwrap();
        assert_eq!((p.p_x, p.p_v), (r(10), r(10)));

        let mut strategy = Scripted::new(vec![AcProposal {
            p_x: r(50),
            p_v: r(40),
        }]);
        let err = simplex_cycle(
            &state,
            &mut strategy,
            s4(),
            ProposalPolicy::Reject,
            &c,
            &mut rng,
        );
        assert!(matches!(err, Err(Error::Contract(_))));
    }

    #[test]
    fn scripted_strategy_cruises_after_the_script() {
        let c = consts();
        let mut s = Scripted::new(vec![AcProposal {
            p_x: r(9),
            p_v: r(9),
        }]);
        let state = WorldState::new_s4(r(0), r(10));
        let mut rng = rng_for(5, "controller-test");
        let first = AcStrategy::<Rat>::propose(&mut s, &state, &c, &mut rng);
        assert_eq!((first.p_x, first.p_v), (r(9), r(9)));
        let second = AcStrategy::<Rat>::propose(&mut s, &state, &c, &mut rng);
        assert_eq!((second.p_x, second.p_v), (r(10), r(10)));
    }
}
