//! Structural support for the early subscenarios: multi-phase proper
//! responses (accelerate, cruise, brake with variable durations) and the
//! two-lead-vehicle safety predicate.
//!
//! No schedule construction for these legs ships here; their precondition
//! algebra has no closed form in this model. Decision and schedule hooks
//! are left to callers.

use crate::error::{Error, Result};
use crate::kinematics::step_const_accel;
use crate::rss::d_rss;
use crate::scalar::Scalar;
use crate::world::{
    BcSchedule, ResponseId, ScenarioConstants, VehicleKinematics, WorldState,
};

#[derive(Clone, Copy, PartialEq, Eq, Debug, PartialOrd, Ord)]
pub enum Manoeuvre {
    Accel,
    Cruise,
    Brake,
}

impl std::fmt::Display for Manoeuvre {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Manoeuvre::Accel => write!(f, "ACCEL"),
            Manoeuvre::Cruise => write!(f, "CRUISE"),
            Manoeuvre::Brake => write!(f, "BRAKE"),
        }
    }
}

/// An ordered accelerate -> cruise -> brake response with per-phase
/// durations. ACCEL runs at `a_max` (capped at `v_max`), BRAKE at `b_min`.
#[derive(Clone, Debug, PartialEq)]
pub struct MultiPhasePlan<S: Scalar> {
    phases: Vec<(Manoeuvre, S)>,
    pub last_response_id: Option<ResponseId>,
}

impl<S: Scalar> MultiPhasePlan<S> {
    pub fn new(
        phases: Vec<(Manoeuvre, S)>,
        last_response_id: Option<ResponseId>,
    ) -> Result<Self> {
        let mut prev = None;
        for (m, d) in &phases {
            if *d < S::zero() {
                return Err(Error::Domain("negative phase duration".into()));
            }
            if let Some(p) = prev {
                if *m < p {
                    return Err(Error::Domain(
                        "phases must run accelerate, then cruise, then brake".into(),
                    ));
                }
            }
            prev = Some(*m);
        }
        Ok(Self {
            phases,
            last_response_id,
        })
    }

    pub fn empty() -> Self {
        Self {
            phases: Vec::new(),
            last_response_id: None,
        }
    }

    /// The stop-leg schedule as a two-phase plan.
    pub fn from_schedule(plan: &BcSchedule<S>) -> Result<Self> {
        Self::new(
            vec![
                (Manoeuvre::Accel, plan.t_accel.clone()),
                (Manoeuvre::Cruise, plan.t_cruise.clone()),
                (Manoeuvre::Brake, plan.t_brake.clone()),
            ],
            plan.last_response_id,
        )
    }

    pub fn phases(&self) -> &[(Manoeuvre, S)] {
        &self.phases
    }

    pub fn is_exhausted(&self) -> bool {
        self.phases.iter().all(|(_, d)| d.is_zero())
    }
}

/// Executes one cycle of a multi-phase plan. Phase boundaries may fall
/// inside the cycle; ACCEL is capped at `v_max`, BRAKE stops at zero, and
/// the current speed is held once the plan is exhausted.
pub fn plan_executor_step<S: Scalar>(
    sv: &VehicleKinematics<S>,
    plan: &MultiPhasePlan<S>,
    consts: &ScenarioConstants<S>,
) -> Result<(VehicleKinematics<S>, MultiPhasePlan<S>)> {
    let mut rem = consts.dt.clone();
    let mut x = sv.x.clone();
    let mut v = sv.v.clone();
    let mut remaining: Vec<(Manoeuvre, S)> = Vec::new();
    for (m, dur) in &plan.phases {
        let d = dur.clone().min_s(rem.clone());
        if d > S::zero() {
            match m {
                Manoeuvre::Accel => {
                    let to_cap = ((consts.v_max.clone() - v.clone()) / consts.a_max.clone())
                        .max_s(S::zero());
                    let da = d.clone().min_s(to_cap);
                    let (nx, nv) = step_const_accel(&x, &v, &consts.a_max, &da)?;
                    x = nx + nv.clone() * (d.clone() - da);
                    v = nv;
                }
                Manoeuvre::Cruise => {
                    x = x + v.clone() * d.clone();
                }
                Manoeuvre::Brake => {
                    let to_stop = v.clone() / consts.b_min.clone();
                    let db = d.clone().min_s(to_stop);
                    let (nx, nv) = step_const_accel(&x, &v, &(-consts.b_min.clone()), &db)?;
                    x = nx;
                    v = nv;
                }
            }
            rem = rem - d.clone();
        }
        let left = dur.clone() - d;
        if left > S::zero() {
            remaining.push((*m, left));
        }
    }
    x = x + v.clone() * rem;
    let a_cmd = (v.clone() - sv.v.clone()) / consts.dt.clone();
    Ok((
        VehicleKinematics { x, v, a_cmd },
        MultiPhasePlan {
            phases: remaining,
            last_response_id: plan.last_response_id,
        },
    ))
}

/// Safety of the two-lead-vehicle leg: SV within the source lanes, legal
/// velocity and acceleration, and RSS gaps to both lead vehicles.
pub fn s2_safety_pred<S: Scalar>(
    state: &WorldState<S>,
    consts: &ScenarioConstants<S>,
) -> Result<bool> {
    let pov2 = state
        .pov(2)
        .ok_or_else(|| Error::Model("POV2 required but not present".into()))?;
    let pov3 = state
        .pov(3)
        .ok_or_else(|| Error::Model("POV3 required but not present".into()))?;
    let v = &state.sv.v;
    if *v < S::zero() {
        return Ok(false);
    }
    let lane_ok = !state.lanes.is_empty() && !state.lanes.contains(3);
    let band_ok = *v <= consts.v_max;
    let accel_ok =
        -consts.b_min.clone() <= state.sv.a_cmd && state.sv.a_cmd <= consts.a_max;
    let gap2 = pov2.x.clone() - state.sv.x.clone() >= d_rss(&pov2.v, v, consts)?;
    let gap3 = pov3.x.clone() - state.sv.x.clone() >= d_rss(&pov3.v, v, consts)?;
    Ok(lane_ok && band_ok && accel_ok && gap2 && gap3)
}

/// Velocity-matching clause of the first leg's subgoal. No schedule
/// construction targets it; it is exposed for completeness only.
pub fn goal1_pred<S: Scalar>(state: &WorldState<S>) -> Result<bool> {
    let pov2 = state
        .pov(2)
        .ok_or_else(|| Error::Model("POV2 required but not present".into()))?;
    Ok(state.sv.v.approx_eq(&pov2.v))
}
