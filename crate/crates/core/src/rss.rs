//! RSS safety distance, environment assumption, and per-subscenario
//! goal / safety / precondition predicates.

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::world::{LaneSet, PovState, ScenarioConstants, Subscenario, WorldState};

/// Which formulation of the S3 precondition to evaluate.
///
/// The workflow form carries the `0 < v_SV <= v_2` clause; the machine-level
/// form used by the decision module omits it. Neither is canonical.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Phi3Form {
    Workflow,
    Machine,
}

/// RSS safety distance a rear vehicle at `v_rear` must keep from a front
/// vehicle at `v_front`: `max(0, v_rear^2/(2 b_min) - v_front^2/(2 b_max))`.
pub fn d_rss<S: Scalar>(v_front: &S, v_rear: &S, consts: &ScenarioConstants<S>) -> Result<S> {
    if *v_front < S::zero() || *v_rear < S::zero() {
        return Err(Error::Domain("d_rss: velocities must be >= 0".into()));
    }
    let raw = v_rear.sq() / (consts.b_min.clone() + consts.b_min.clone())
        - v_front.sq() / (consts.b_max.clone() + consts.b_max.clone());
    Ok(raw.max_s(S::zero()))
}

fn pov_ok<S: Scalar>(p: &PovState<S>, consts: &ScenarioConstants<S>) -> bool {
    let lane_ok = match p.id {
        1 | 2 => p.lanes == LaneSet::single(2),
        3 => p.lanes == LaneSet::single(1),
        _ => false,
    };
    lane_ok && p.a.is_zero() && consts.v_min <= p.v && p.v <= consts.v_max
}

/// Environment assumption: every POV runs at constant velocity within the
/// legal band in its designated lane, and POV2 is ahead of POV1.
pub fn env_holds<S: Scalar>(povs: &[PovState<S>], consts: &ScenarioConstants<S>) -> bool {
    if !povs.iter().all(|p| pov_ok(p, consts)) {
        return false;
    }
    match (
        povs.iter().find(|p| p.id == 1),
        povs.iter().find(|p| p.id == 2),
    ) {
        (Some(p1), Some(p2)) => p2.x > p1.x,
        _ => true,
    }
}

/// Precondition of subscenario S4: `x_Tgt - x_SV >= v_SV^2 / (2 b_min)`.
pub fn phi4<S: Scalar>(x_sv: &S, v_sv: &S, consts: &ScenarioConstants<S>) -> bool {
    consts.x_tgt.clone() - x_sv.clone() >= v_sv.sq() / (consts.b_min.clone() + consts.b_min.clone())
}

/// Precondition of subscenario S3 over SV and the leading POV2.
///
/// Machine form: `phi4-part && x_SV < x_2 && x_2 - x_SV >= dRSS(v_2, v_SV)`.
/// Workflow form additionally requires `0 < v_SV <= v_2`.
pub fn phi3<S: Scalar>(
    x_sv: &S,
    v_sv: &S,
    x2: &S,
    v2: &S,
    consts: &ScenarioConstants<S>,
    form: Phi3Form,
) -> bool {
    if *v_sv < S::zero() || *v2 < S::zero() {
        return false;
    }
    let gap = x2.clone() - x_sv.clone();
    let machine = phi4(x_sv, v_sv, consts)
        && *x_sv < *x2
        && gap >= d_rss(v2, v_sv, consts).expect("nonnegative velocities");
    match form {
        Phi3Form::Machine => machine,
        Phi3Form::Workflow => machine && S::zero() < *v_sv && *v_sv <= *v2,
    }
}

/// The S3 gap clause in the machine's algebraic form:
/// `2 (x_SV - x_2) + v_SV^2 / b_min <= v_2^2 / b_max`.
pub fn s3_gap_machine_form<S: Scalar>(
    x_sv: &S,
    v_sv: &S,
    x2: &S,
    v2: &S,
    consts: &ScenarioConstants<S>,
) -> bool {
    let two = S::from_int(2);
    two * (x_sv.clone() - x2.clone()) + v_sv.sq() / consts.b_min.clone()
        <= v2.sq() / consts.b_max.clone()
}

/// Subgoal predicate for S3/S4.
pub fn goal_pred<S: Scalar>(
    id: Subscenario,
    state: &WorldState<S>,
    consts: &ScenarioConstants<S>,
) -> Result<bool> {
    match id {
        Subscenario::S4 => {
            Ok(state.sv.x.approx_eq(&consts.x_tgt) && state.sv.v.approx_eq(&S::zero()))
        }
        Subscenario::S3 => Ok(state.lanes == LaneSet::single(3)),
        other => Err(Error::Feature(format!("goal_pred: {other} not supported"))),
    }
}

/// Safety condition for S3/S4 (lane clause, velocity band, acceleration band
/// and, for S3, the RSS gap to POV2).
pub fn safety_pred<S: Scalar>(
    id: Subscenario,
    state: &WorldState<S>,
    consts: &ScenarioConstants<S>,
) -> Result<bool> {
    let v = &state.sv.v;
    let a = &state.sv.a_cmd;
    let accel_band = -consts.b_min.clone() <= *a && *a <= consts.a_max;
    match id {
        Subscenario::S4 => {
            let lane_ok = state.lanes == LaneSet::single(3);
            Ok(lane_ok && S::zero() <= *v && *v <= consts.v_max && accel_band)
        }
        Subscenario::S3 => {
            // anywhere within the source/target pair, including the
            // boundary instants of the lane change
            let lane_ok = !state.lanes.is_empty() && !state.lanes.contains(1);
            let pov2 = state.pov2()?;
            if *v < S::zero() {
                return Ok(false);
            }
            let gap = pov2.x.clone() - state.sv.x.clone();
            let gap_ok = gap >= d_rss(&pov2.v, v, consts)?;
            Ok(lane_ok && *v <= pov2.v && gap_ok && accel_band)
        }
        other => Err(Error::Feature(format!("safety_pred: {other} not supported"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::Rat;
    use crate::world::{Ctrl, VehicleKinematics};
    use proptest::prelude::*;

    fn r(n: i64) -> Rat {
        Rat::from_int(n)
    }

    fn rr(n: i64, d: i64) -> Rat {
        Rat::from_ratio(n, d)
    }

    fn consts() -> ScenarioConstants<Rat> {
        ScenarioConstants::defaults()
    }

    #[test]
    fn d_rss_examples() {
        let c = consts();
        assert_eq!(d_rss(&r(4), &r(10), &c).unwrap(), r(23));
        assert_eq!(d_rss(&r(20), &r(0), &c).unwrap(), r(0));
        assert_eq!(d_rss(&r(20), &r(4), &c).unwrap(), r(0));
        assert!(d_rss(&r(-1), &r(0), &c).is_err());
    }

    #[test]
    fn env_examples() {
        let c = consts();
        let povs = vec![
            PovState::canonical(1, r(5), r(10)),
            PovState::canonical(2, r(30), r(10)),
            PovState::canonical(3, r(15), r(8)),
        ];
        assert!(env_holds(&povs, &c));

        let mut accel = povs.clone();
        accel[0].a = r(1);
        assert!(!env_holds(&accel, &c));

        let mut swapped = povs;
        swapped[1].x = r(4); // x2 <= x1
        assert!(!env_holds(&swapped, &c));
    }

    #[test]
    fn phi4_examples() {
        let c = consts();
        assert!(phi4(&r(0), &r(10), &c));
        assert!(phi4(&c.x_tgt.clone(), &r(0), &c));
        assert!(!phi4(&r(90), &r(10), &c));
    }

    #[test]
    fn phi3_examples() {
        let c = consts();
        // dRSS(10, 8) = 16 - 12.5 = 3.5 <= 30
        assert!(phi3(&r(0), &r(8), &r(30), &r(10), &c, Phi3Form::Workflow));
        assert!(phi3(&r(0), &r(0), &r(1), &r(10), &c, Phi3Form::Machine));
        // gap 1 < dRSS 23
        assert!(!phi3(&r(29), &r(10), &r(30), &r(4), &c, Phi3Form::Machine));
        // workflow form also requires 0 < v_sv
        assert!(!phi3(&r(0), &r(0), &r(1), &r(10), &c, Phi3Form::Workflow));
    }

    #[test]
    fn goal_examples() {
        let c = consts();
        let mut s = WorldState::new_s4(r(100), r(0));
        assert!(goal_pred(Subscenario::S4, &s, &c).unwrap());
        s.sv.v = rr(1, 2);
        assert!(!goal_pred(Subscenario::S4, &s, &c).unwrap());

        let mut s3 = WorldState::new_s3(r(0), r(8), r(30), r(10));
        s3.lanes = LaneSet::of(&[2, 3]);
        s3.t_lce = 2;
        assert!(!goal_pred(Subscenario::S3, &s3, &c).unwrap());
        assert!(goal_pred(Subscenario::S1, &s3, &c).is_err());
    }

    #[test]
    fn safety_examples() {
        let c = consts();
        let mut s = WorldState::new_s4(r(50), r(10));
        assert!(safety_pred(Subscenario::S4, &s, &c).unwrap());
        s.sv.v = r(-1);
        assert!(!safety_pred(Subscenario::S4, &s, &c).unwrap());

        let mut s3 = WorldState::new_s3(r(29), r(10), r(30), r(4));
        s3.lanes = LaneSet::of(&[2, 3]);
        assert!(!safety_pred(Subscenario::S3, &s3, &c).unwrap());
        let mut ctrl_state = WorldState::new_s3(r(0), r(8), r(30), r(10));
        ctrl_state.lanes = LaneSet::of(&[2, 3]);
        ctrl_state.ctrl = Ctrl::Ac;
        assert!(safety_pred(Subscenario::S3, &ctrl_state, &c).unwrap());
    }

    #[test]
    fn safety_boundary_is_inclusive() {
        let c = consts();
        let mut s = WorldState::new_s4(r(0), c.v_max.clone());
        s.sv.a_cmd = c.a_max.clone();
        assert!(safety_pred(Subscenario::S4, &s, &c).unwrap());
        s.sv = VehicleKinematics::new(r(0), c.v_max.clone() + rr(1, 64));
        assert!(!safety_pred(Subscenario::S4, &s, &c).unwrap());
    }

    proptest! {
        // d_rss: nonnegative, monotone in each argument.
        #[test]
        fn d_rss_monotone(vf in 0i64..80, vr in 0i64..80, dv in 0i64..20) {
            let c = consts();
            let (vf, vr, dv) = (rr(vf, 4), rr(vr, 4), rr(dv, 4));
            let base = d_rss(&vf, &vr, &c).unwrap();
            prop_assert!(base >= r(0));
            prop_assert!(d_rss(&vf, &(vr.clone() + dv.clone()), &c).unwrap() >= base);
            prop_assert!(d_rss(&(vf + dv), &vr, &c).unwrap() <= base);
        }

        // phi4 holds at the target at rest and is antitone in x and v.
        #[test]
        fn phi4_antitone(x in 0i64..400, v in 0i64..80, dx in 0i64..40, dv in 0i64..40) {
            let c = consts();
            assert!(phi4(&c.x_tgt.clone(), &r(0), &c));
            let (x, v) = (rr(x, 4), rr(v, 4));
            if !phi4(&x, &v, &c) {
                prop_assert!(!phi4(&(x + rr(dx, 4)), &(v + rr(dv, 4)), &c));
            }
        }

        // The Fig-4 dRSS form and the machine algebraic form of the S3 gap
        // clause agree whenever the SV is behind POV2.
        #[test]
        fn gap_forms_agree(x in 0i64..400, v in 0i64..80, gap in 0i64..600, v2 in 0i64..80) {
            let c = consts();
            let (x, v, v2) = (rr(x, 4), rr(v, 4), rr(v2, 4));
            let x2 = x.clone() + rr(gap, 4) + rr(1, 64);
            let drss_form = x2.clone() - x.clone() >= d_rss(&v2, &v, &c).unwrap();
            prop_assert_eq!(drss_form, s3_gap_machine_form(&x, &v, &x2, &v2, &c));
        }
    }
}
