//! The S3 machine family: change from lane 2 to lane 3 behind POV2 while
//! keeping the RSS gap, ending inside the stoppable region.
//!
//! Same three-level structure as S4. The precondition adds the gap clause to
//! the lead vehicle; every event also advances POV2 and the lane-change
//! progress counter.

use std::sync::Arc;

use rand_chacha::ChaCha8Rng;

use crate::kinematics::extrapolate_max_accel;
use crate::rss::{d_rss, phi3, Phi3Form};
use crate::sample::{coin, int_in, rat_in_biased};
use crate::scalar::Scalar;
use crate::world::{Ctrl, LaneSet, ResponseId, ScenarioConstants, WorldState};

use super::s4::lookahead_k;
use super::{
    guard, inherit, inv, ActionFn, EventDef, EventParams, GuardClause, InvariantClause,
    MachineDef, MachineName, Mutation, ParamSamplerFn, StateSamplerFn,
};

fn two_b_min<S: Scalar>(c: &ScenarioConstants<S>) -> S {
    c.b_min.clone() + c.b_min.clone()
}

fn pov2_xv<S: Scalar>(s: &WorldState<S>) -> Option<(S, S)> {
    s.pov(2).map(|p| (p.x.clone(), p.v.clone()))
}

fn lanes_for(t_lce: u32, t_lc: u32) -> LaneSet {
    crate::world::sv_lanes_during_change(t_lce, t_lc)
}

/// The S3 precondition after `k` cycles of SV maximum acceleration, with the
/// POV frozen at `x2`. Freezing the POV under-approximates the gap, so this
/// is monotone in the right direction for a switching margin.
fn phi3_extrap<S: Scalar>(x: &S, v: &S, x2: &S, v2: &S, c: &ScenarioConstants<S>, k: u32) -> bool {
    let (ex, ev) = extrapolate_max_accel(x, v, c, k).expect("k <= 2");
    phi3(&ex, &ev, x2, v2, c, Phi3Form::Machine)
}

/// Safety of a proposal: precondition must survive `k` further max-accel
/// cycles measured against the POV position after this cycle.
fn proposal_safe<S: Scalar>(
    s: &WorldState<S>,
    p: &EventParams<S>,
    c: &ScenarioConstants<S>,
    k: u32,
) -> bool {
    match pov2_xv(s) {
        Some((x2, v2)) => {
            let x2_next = x2 + v2.clone() * c.dt.clone();
            phi3_extrap(&p.p_x, &p.p_v, &x2_next, &v2, c, k)
        }
        None => false,
    }
}

// --- guards -----------------------------------------------------------------

fn run_box_guards<S: Scalar>(with_precond: bool) -> Vec<GuardClause<S>> {
    let mut gs = vec![
        guard("preserve_no_overrun", |_s: &WorldState<S>, p: &EventParams<S>, c: &ScenarioConstants<S>| {
            S::zero() <= p.p_x && p.p_x <= c.x_tgt
        }),
        guard("preserve_v_band", |s, p, _c| match pov2_xv(s) {
            Some((_x2, v2)) => S::zero() <= p.p_v && p.p_v <= v2,
            None => false,
        }),
    ];
    if with_precond {
        gs.push(guard("preserve_precond", |s, p, c| {
            proposal_safe(s, p, c, 0)
        }));
    }
    gs.push(guard("x_physical_constr", |s: &WorldState<S>, p, c| {
        let hi = s.sv.x.clone()
            + s.sv.v.clone() * c.dt.clone()
            + (c.a_max.clone() * c.dt.clone() * c.dt.clone()).half();
        s.sv.x <= p.p_x && p.p_x <= hi
    }));
    gs.push(guard("v_physical_constr", |s: &WorldState<S>, p, c| {
        let lo = s.sv.v.clone() - c.b_max.clone() * c.dt.clone();
        let hi = s.sv.v.clone() + c.a_max.clone() * c.dt.clone();
        lo <= p.p_v && p.p_v <= hi
    }));
    gs
}

fn g_ac_operating<S: Scalar>() -> GuardClause<S> {
    guard("AC_operating", |s, _p, _c| s.ctrl == Ctrl::Ac)
}

fn g_bc_operating<S: Scalar>() -> GuardClause<S> {
    guard("BC_operating", |s, _p, _c| s.ctrl == Ctrl::Bc)
}

fn g_no_acceleration<S: Scalar>() -> GuardClause<S> {
    guard("no_acceleration", |s, p, _c| p.p_v <= s.v_bc0)
}

fn g_surely_safe<S: Scalar>(k: u32) -> GuardClause<S> {
    guard("surely_safe_next", move |s, p, c| proposal_safe(s, p, c, k))
}

fn g_maybe_unsafe<S: Scalar>() -> GuardClause<S> {
    guard("maybe_unsafe_next", |s, p, c| !proposal_safe(s, p, c, 2))
}

// --- actions ----------------------------------------------------------------

fn moved<S: Scalar>(
    s: &WorldState<S>,
    p: &EventParams<S>,
    c: &ScenarioConstants<S>,
    ctrl: Ctrl,
) -> WorldState<S> {
    let mut n = s.clone();
    n.sv.a_cmd = (p.p_v.clone() - s.sv.v.clone()) / c.dt.clone();
    n.sv.x = p.p_x.clone();
    n.sv.v = p.p_v.clone();
    n.ctrl = ctrl;
    for pov in n.povs.iter_mut() {
        pov.x = pov.x.clone() + pov.v.clone() * c.dt.clone();
    }
    n.t_lce = (s.t_lce + 1).min(c.t_lc);
    n.lanes = lanes_for(n.t_lce, c.t_lc);
    n
}

fn act_move<S: Scalar>(ctrl: Ctrl, set_vbc0: bool) -> ActionFn<S> {
    Arc::new(move |s, p, c| {
        let mut n = moved(s, p, c, ctrl);
        if set_vbc0 {
            n.v_bc0 = p.p_v.clone();
        }
        n
    })
}

// --- parameter samplers -----------------------------------------------------

fn box_draw<S: Scalar>(
    s: &WorldState<S>,
    c: &ScenarioConstants<S>,
    rng: &mut ChaCha8Rng,
    cap_vbc0: bool,
) -> EventParams<S> {
    let x_hi = (s.sv.x.clone()
        + s.sv.v.clone() * c.dt.clone()
        + (c.a_max.clone() * c.dt.clone() * c.dt.clone()).half())
    .min_s(c.x_tgt.clone())
    .max_s(s.sv.x.clone());
    let p_x = rat_in_biased(rng, &s.sv.x, &x_hi);
    let v_lo = (s.sv.v.clone() - c.b_max.clone() * c.dt.clone()).max_s(S::zero());
    let mut v_hi = (s.sv.v.clone() + c.a_max.clone() * c.dt.clone()).min_s(c.v_max.clone());
    if let Some((_x2, v2)) = pov2_xv(s) {
        v_hi = v_hi.min_s(v2);
    }
    if cap_vbc0 {
        v_hi = v_hi.min_s(s.v_bc0.clone());
    }
    let v_hi = v_hi.max_s(v_lo.clone());
    let p_v = rat_in_biased(rng, &v_lo, &v_hi);
    EventParams { p_x, p_v }
}

fn ps_ac_box<S: Scalar>() -> ParamSamplerFn<S> {
    Arc::new(|s, c, rng| box_draw(s, c, rng, false))
}

fn ps_bc_box<S: Scalar>() -> ParamSamplerFn<S> {
    Arc::new(|s, c, rng| box_draw(s, c, rng, true))
}

fn ps_ac_box_moving<S: Scalar>() -> ParamSamplerFn<S> {
    Arc::new(|s, c, rng| {
        let mut p = box_draw(s, c, rng, false);
        if p.p_v.is_zero() {
            let mut hi = (s.sv.v.clone() + c.a_max.clone() * c.dt.clone()).min_s(c.v_max.clone());
            if let Some((_x2, v2)) = pov2_xv(s) {
                hi = hi.min_s(v2);
            }
            p.p_v = hi;
        }
        p
    })
}

fn ps_ac_box_stopping<S: Scalar>() -> ParamSamplerFn<S> {
    Arc::new(|s, c, rng| {
        let mut p = box_draw(s, c, rng, false);
        p.p_v = S::zero();
        p
    })
}

fn ps_cruise<S: Scalar>() -> ParamSamplerFn<S> {
    Arc::new(|s, c, _rng| EventParams {
        p_x: s.sv.x.clone() + s.sv.v.clone() * c.dt.clone(),
        p_v: s.sv.v.clone(),
    })
}

fn ps_brake<S: Scalar>() -> ParamSamplerFn<S> {
    Arc::new(|s, c, _rng| {
        let t_c = s.plan.t_cruise.clone();
        let beta = c.dt.clone() - t_c.clone();
        let v = s.sv.v.clone();
        let p_x = s.sv.x.clone() + v.clone() * t_c + v.clone() * beta.clone()
            - (c.b_min.clone() * beta.sq()).half();
        let p_v = v - c.b_min.clone() * beta;
        EventParams { p_x, p_v }
    })
}

fn ps_brake_out<S: Scalar>() -> ParamSamplerFn<S> {
    Arc::new(|s, c, _rng| {
        let t_c = s.plan.t_cruise.clone();
        let t_b = s.plan.t_brake.clone();
        let gamma = c.dt.clone() - t_c.clone() - t_b.clone();
        let v = s.sv.v.clone();
        let v_end = v.clone() - c.b_min.clone() * t_b.clone();
        let p_x = s.sv.x.clone() + v.clone() * t_c + v * t_b.clone()
            - (c.b_min.clone() * t_b.sq()).half()
            + v_end.clone() * gamma;
        EventParams { p_x, p_v: v_end }
    })
}

fn ps_hold<S: Scalar>() -> ParamSamplerFn<S> {
    Arc::new(|s, _c, _rng| EventParams {
        p_x: s.sv.x.clone(),
        p_v: S::zero(),
    })
}

// --- invariants -------------------------------------------------------------

fn invs_m30<S: Scalar>() -> Vec<InvariantClause<S>> {
    vec![
        inv("types_xv", false, |s: &WorldState<S>, _c: &ScenarioConstants<S>| {
            s.sv.x.is_finite_val() && s.sv.v.is_finite_val()
        }),
        inv("no_overrun", false, |s, c| {
            S::zero() <= s.sv.x && s.sv.x <= c.x_tgt
        }),
        inv("v_below_lead", false, |s, _c| match pov2_xv(s) {
            Some((_x2, v2)) => S::zero() <= s.sv.v && s.sv.v <= v2,
            None => false,
        }),
        inv("env_pov", false, |s: &WorldState<S>, c| match s.pov(2) {
            Some(p) => {
                p.x.is_finite_val()
                    && p.a.is_zero()
                    && c.v_min <= p.v
                    && p.v <= c.v_max
                    && p.lanes == LaneSet::single(2)
            }
            None => false,
        }),
        inv("precond", false, |s, c| match pov2_xv(s) {
            Some((x2, v2)) => phi3(&s.sv.x, &s.sv.v, &x2, &v2, c, Phi3Form::Machine),
            None => false,
        }),
        inv("lane_progress", false, |s, c| {
            s.t_lce <= c.t_lc && s.lanes == lanes_for(s.t_lce, c.t_lc)
        }),
    ]
}

fn invs_m31_new<S: Scalar>() -> Vec<InvariantClause<S>> {
    vec![
        inv("types_v_bc0", false, |s: &WorldState<S>, _c: &ScenarioConstants<S>| {
            s.v_bc0.is_finite_val()
        }),
        inv("v_bc0_regulated", false, |s, c| {
            S::zero() <= s.v_bc0 && s.v_bc0 <= c.v_max
        }),
        inv("bc_no_accel", false, |s, _c| s.ctrl != Ctrl::Bc || s.sv.v <= s.v_bc0),
        // Two further max-accel cycles against a frozen POV must keep the
        // precondition while the AC drives.
        inv("ac_switchable", false, |s, c| {
            if s.ctrl != Ctrl::Ac {
                return true;
            }
            match pov2_xv(s) {
                Some((x2, v2)) => phi3_extrap(&s.sv.x, &s.sv.v, &x2, &v2, c, 2),
                None => false,
            }
        }),
    ]
}

fn invs_m32_new<S: Scalar>() -> Vec<InvariantClause<S>> {
    vec![
        inv("types_plan", false, |s: &WorldState<S>, _c: &ScenarioConstants<S>| {
            S::zero() <= s.plan.t_cruise && S::zero() <= s.plan.t_brake
        }),
        inv("cruise_before_brake", false, |s, _c| {
            !(s.plan.t_cruise > S::zero()) || s.plan.t_brake > S::zero()
        }),
        inv("bc_v_matches_brake_time", false, |s: &WorldState<S>, c| {
            s.ctrl != Ctrl::Bc || s.sv.v.approx_eq(&(s.plan.t_brake.clone() * c.b_min.clone()))
        }),
        inv("bc_cruise_v_pinned", false, |s: &WorldState<S>, _c| {
            !(s.ctrl == Ctrl::Bc && s.plan.t_cruise > S::zero()) || s.sv.v.approx_eq(&s.v_bc0)
        }),
        inv("bc_x_matches_plan", false, |s: &WorldState<S>, c| {
            if s.ctrl != Ctrl::Bc || s.sv.v.is_zero() {
                return true;
            }
            let t_b = &s.plan.t_brake;
            let planned = s.plan.t_cruise.clone() * s.sv.v.clone()
                + t_b.clone() * s.sv.v.clone()
                - (c.b_min.clone() * t_b.sq()).half();
            (c.x_tgt.clone() - s.sv.x.clone()).approx_eq(&planned)
        }),
    ]
}

// --- state samplers ---------------------------------------------------------

/// Places POV2 ahead of the given point with at least the RSS gap for the
/// given rear velocity; ~15% of draws sit exactly on the gap boundary.
fn place_pov<S: Scalar>(
    s: &mut WorldState<S>,
    ref_x: &S,
    ref_v: &S,
    v2: &S,
    c: &ScenarioConstants<S>,
    rng: &mut ChaCha8Rng,
) {
    let d = d_rss(v2, ref_v, c).expect("nonnegative velocities");
    let mut delta = rat_in_biased(rng, &S::zero(), &c.x_tgt);
    if delta.is_zero() && d.is_zero() {
        delta = S::from_ratio(1, 64);
    }
    let x2 = ref_x.clone() + d + delta;
    let pov = s.povs.iter_mut().find(|p| p.id == 2).expect("POV2 present");
    pov.x = x2;
    pov.v = v2.clone();
}

fn ps_state<S: Scalar>(level: u8) -> StateSamplerFn<S> {
    Arc::new(move |c, rng| {
        let two_b = two_b_min(c);
        let t_lce = int_in(rng, 0, c.t_lc);
        let ac = level >= 1 && coin(rng, 50);
        let mut s: WorldState<S>;
        let v2 = rat_in_biased(rng, &S::zero(), &c.v_max);
        if ac {
            // AC driving: x bounded by the two-cycle switching margin; the
            // gap margin is measured at the extrapolated point.
            let mut picked = None;
            for _ in 0..32 {
                let v = rat_in_biased(rng, &S::zero(), &v2);
                let (off_x, ev) = extrapolate_max_accel(&S::zero(), &v, c, 2).expect("k <= 2");
                let bound = c.x_tgt.clone() - ev.sq() / two_b.clone() - off_x.clone();
                if bound >= S::zero() {
                    picked = Some((v, off_x, ev, bound));
                    break;
                }
            }
            let (v, off_x, ev, bound) =
                picked.unwrap_or_else(|| (S::zero(), S::zero(), S::zero(), S::zero()));
            let x = rat_in_biased(rng, &S::zero(), &bound);
            s = WorldState::new_s3(x.clone(), v.clone(), S::zero(), S::zero());
            let ex = x + off_x;
            place_pov(&mut s, &ex, &ev, &v2, c, rng);
            s.v_bc0 = rat_in_biased(rng, &S::zero(), &c.v_max);
        } else {
            let mut picked = None;
            for _ in 0..32 {
                let v = rat_in_biased(rng, &S::zero(), &v2);
                let slack = c.x_tgt.clone() - v.sq() / two_b.clone();
                if slack >= S::zero() {
                    picked = Some((v, slack));
                    break;
                }
            }
            let (v, slack) = picked.unwrap_or_else(|| (S::zero(), c.x_tgt.clone()));
            let x;
            let mut plan_cruise = S::zero();
            let mut plan_brake = S::zero();
            if level == 2 && !v.is_zero() {
                // Consistent cruise-then-brake plan toward the stop target.
                let brake_dist = v.sq() / two_b.clone();
                let t_c_max = (c.x_tgt.clone() - brake_dist.clone()) / v.clone();
                let t_c = rat_in_biased(rng, &S::zero(), &t_c_max);
                x = c.x_tgt.clone() - t_c.clone() * v.clone() - brake_dist;
                plan_cruise = t_c;
                plan_brake = v.clone() / c.b_min.clone();
            } else {
                x = rat_in_biased(rng, &S::zero(), &slack);
            }
            s = WorldState::new_s3(x.clone(), v.clone(), S::zero(), S::zero());
            place_pov(&mut s, &x, &v, &v2, c, rng);
            if level >= 1 {
                s.ctrl = Ctrl::Bc;
                s.v_bc0 = if level == 2 && plan_cruise > S::zero() {
                    v.clone()
                } else {
                    rat_in_biased(rng, &v, &c.v_max)
                };
                if level == 2 {
                    s.plan.t_cruise = plan_cruise;
                    s.plan.t_brake = plan_brake;
                    s.plan.last_response_id = Some(ResponseId::S3);
                }
            }
        }
        s.t_lce = t_lce;
        s.lanes = lanes_for(t_lce, c.t_lc);
        s
    })
}

// --- machine assembly -------------------------------------------------------

fn init_event<S: Scalar>(switch_margin: bool, set_vbc0: bool, refines: bool) -> EventDef<S> {
    let mut guards = vec![
        guard("init_in_range", |_s: &WorldState<S>, p: &EventParams<S>, c: &ScenarioConstants<S>| {
            S::zero() <= p.p_x
                && p.p_x <= c.x_tgt
                && S::zero() <= p.p_v
                && p.p_v <= c.v_max
        }),
        guard("init_precond", |_s, p, c| {
            // The POV is placed canonically from the parameters.
            let d: S = match d_rss(&c.v_max, &p.p_v, c) {
                Ok(d) => d,
                Err(_) => return false,
            };
            let x2 = p.p_x.clone() + d + S::one();
            phi3(&p.p_x, &p.p_v, &x2, &c.v_max, c, Phi3Form::Machine)
        }),
    ];
    if switch_margin {
        guards.push(guard("init_switchable", |_s, p, c| {
            let d: S = match d_rss(&c.v_max, &p.p_v, c) {
                Ok(d) => d,
                Err(_) => return false,
            };
            let x2 = p.p_x.clone() + d + S::one();
            phi3_extrap(&p.p_x, &p.p_v, &x2, &c.v_max, c, 2)
        }));
    }
    EventDef {
        name: "initialisation",
        refines: if refines { Some("initialisation") } else { None },
        is_init: true,
        guards,
        action: Arc::new(move |_s, p, c| {
            let d = d_rss(&c.v_max, &p.p_v, c).unwrap_or_else(|_| S::zero());
            let x2 = p.p_x.clone() + d + S::one();
            let mut s =
                WorldState::new_s3(p.p_x.clone(), p.p_v.clone(), x2, c.v_max.clone());
            if set_vbc0 {
                s.v_bc0 = p.p_v.clone();
            }
            s
        }),
        param_sampler: Arc::new(|_s, c, rng| {
            let v = rat_in_biased(rng, &S::zero(), &c.v_max);
            let slack =
                (c.x_tgt.clone() - v.sq() / two_b_min(c)).max_s(S::zero());
            let p_x = rat_in_biased(rng, &S::zero(), &slack);
            EventParams { p_x, p_v: v }
        }),
    }
}

pub(super) fn m30<S: Scalar>() -> MachineDef<S> {
    let run = EventDef {
        name: "run",
        refines: None,
        is_init: false,
        guards: run_box_guards(true),
        action: act_move(Ctrl::Ac, false),
        param_sampler: ps_ac_box(),
    };
    MachineDef {
        name: MachineName::M30,
        refines: None,
        invariants: invs_m30(),
        events: vec![init_event(false, false, false), run],
        state_sampler: ps_state(0),
    }
}

pub(super) fn m31<S: Scalar>(mutation: Option<Mutation>) -> MachineDef<S> {
    let k = lookahead_k(mutation);

    let mut g_ac_ac = run_box_guards(true);
    g_ac_ac.push(g_ac_operating());
    g_ac_ac.push(g_surely_safe(k));

    // Precondition preservation is implied by the switching margin for any
    // physically reachable proposal.
    let mut g_ac_bc = run_box_guards(false);
    g_ac_bc.push(g_ac_operating());
    g_ac_bc.push(g_maybe_unsafe());

    let mut g_bc_bc = run_box_guards(true);
    g_bc_bc.push(g_bc_operating());
    g_bc_bc.push(g_no_acceleration());
    g_bc_bc.push(g_maybe_unsafe());

    let mut g_bc_ac = run_box_guards(true);
    g_bc_ac.push(g_bc_operating());
    g_bc_ac.push(g_no_acceleration());
    g_bc_ac.push(g_surely_safe(k));

    let mut invariants = inherit(invs_m30());
    invariants.extend(invs_m31_new());

    let events = vec![
        init_event(true, true, true),
        EventDef {
            name: "AC->AC",
            refines: Some("run"),
            is_init: false,
            guards: g_ac_ac,
            action: act_move(Ctrl::Ac, false),
            param_sampler: ps_ac_box(),
        },
        EventDef {
            name: "AC->BC",
            refines: Some("run"),
            is_init: false,
            guards: g_ac_bc,
            action: act_move(Ctrl::Bc, true),
            param_sampler: ps_ac_box(),
        },
        EventDef {
            name: "BC->BC",
            refines: Some("run"),
            is_init: false,
            guards: g_bc_bc,
            action: act_move(Ctrl::Bc, false),
            param_sampler: ps_bc_box(),
        },
        EventDef {
            name: "BC->AC",
            refines: Some("run"),
            is_init: false,
            guards: g_bc_ac,
            action: act_move(Ctrl::Ac, false),
            param_sampler: ps_bc_box(),
        },
    ];

    MachineDef {
        name: MachineName::M31,
        refines: Some(MachineName::M30),
        invariants,
        events,
        state_sampler: ps_state(1),
    }
}

pub(super) fn m32<S: Scalar>(mutation: Option<Mutation>) -> MachineDef<S> {
    let k = lookahead_k(mutation);

    let g_will_cruise = || {
        guard("will_cruise_more", |s: &WorldState<S>, _p: &EventParams<S>, c: &ScenarioConstants<S>| {
            c.dt <= s.plan.t_cruise
        })
    };
    let g_brake_phase = || {
        guard("brake_phase", |s: &WorldState<S>, _p: &EventParams<S>, c: &ScenarioConstants<S>| {
            s.plan.t_cruise < c.dt
        })
    };
    let g_cruise_xv = || {
        guard("cruise_xv", |s: &WorldState<S>, p: &EventParams<S>, c: &ScenarioConstants<S>| {
            p.p_x.approx_eq(&(s.sv.x.clone() + s.sv.v.clone() * c.dt.clone()))
                && p.p_v.approx_eq(&s.sv.v)
        })
    };
    let g_stopped = || {
        guard("stopped", |s: &WorldState<S>, _p: &EventParams<S>, _c: &ScenarioConstants<S>| {
            s.sv.v.is_zero()
        })
    };
    let g_stop_xv = || {
        guard("stop_xv", |s: &WorldState<S>, p: &EventParams<S>, _c: &ScenarioConstants<S>| {
            p.p_x.approx_eq(&s.sv.x) && p.p_v.is_zero()
        })
    };

    let mut g_ac_ac = run_box_guards(true);
    g_ac_ac.push(g_ac_operating());
    g_ac_ac.push(g_surely_safe(k));

    let mut g_ac_run_bc = run_box_guards(false);
    g_ac_run_bc.push(g_ac_operating());
    g_ac_run_bc.push(g_maybe_unsafe());
    g_ac_run_bc.push(guard("will_run_more", |_s, p, _c| S::zero() < p.p_v));
    // The cruise phase must outlast the remaining lane change so the SV does
    // not stop straddling two lanes.
    g_ac_run_bc.push(guard("schedule_feasible", |s: &WorldState<S>, p, c| {
        let t_c = (c.x_tgt.clone() - p.p_x.clone()) / p.p_v.clone()
            - p.p_v.clone() / two_b_min(c);
        let remaining = c.t_lc - (s.t_lce + 1).min(c.t_lc);
        t_c >= S::from_int(remaining as i64) * c.dt.clone()
    }));

    let mut g_ac_stop_bc = run_box_guards(false);
    g_ac_stop_bc.push(g_ac_operating());
    g_ac_stop_bc.push(g_maybe_unsafe());
    g_ac_stop_bc.push(guard("will_stop", |_s: &WorldState<S>, p, _c| p.p_v.is_zero()));

    let g_bc_cruise_ac = vec![g_bc_operating(), g_surely_safe(k), g_will_cruise(), g_cruise_xv()];
    let g_bc_cruise_bc = vec![g_bc_operating(), g_maybe_unsafe(), g_will_cruise(), g_cruise_xv()];

    let g_bc_brake_bc = vec![
        g_bc_operating(),
        g_maybe_unsafe(),
        g_brake_phase(),
        guard("will_brake_more", |s: &WorldState<S>, _p, c| {
            c.dt.clone() - s.plan.t_cruise.clone() <= s.plan.t_brake
        }),
        guard("brake_keeps_moving", |s: &WorldState<S>, _p, c| {
            c.b_min.clone() * (c.dt.clone() - s.plan.t_cruise.clone()) <= s.sv.v
        }),
        guard("brake_xv", |s: &WorldState<S>, p: &EventParams<S>, c: &ScenarioConstants<S>| {
            let beta = c.dt.clone() - s.plan.t_cruise.clone();
            let x_end = s.sv.x.clone()
                + s.sv.v.clone() * s.plan.t_cruise.clone()
                + s.sv.v.clone() * beta.clone()
                - (c.b_min.clone() * beta.sq()).half();
            p.p_x.approx_eq(&x_end) && p.p_v.approx_eq(&(s.sv.v.clone() - c.b_min.clone() * beta))
        }),
    ];

    let g_bc_brake_out_bc = vec![
        g_bc_operating(),
        g_maybe_unsafe(),
        g_brake_phase(),
        guard("will_finish_braking", |s: &WorldState<S>, _p, c| {
            S::zero() < s.plan.t_brake
                && s.plan.t_brake < c.dt.clone() - s.plan.t_cruise.clone()
        }),
        guard("brake_in_range", |s: &WorldState<S>, _p, c| {
            c.b_min.clone() * s.plan.t_brake.clone() <= s.sv.v
        }),
        guard("brake_out_xv", |s: &WorldState<S>, p: &EventParams<S>, c: &ScenarioConstants<S>| {
            let t_b = s.plan.t_brake.clone();
            let gamma = c.dt.clone() - s.plan.t_cruise.clone() - t_b.clone();
            let v_end = s.sv.v.clone() - c.b_min.clone() * t_b.clone();
            let x_end = s.sv.x.clone()
                + s.sv.v.clone() * s.plan.t_cruise.clone()
                + s.sv.v.clone() * t_b.clone()
                - (c.b_min.clone() * t_b.sq()).half()
                + v_end.clone() * gamma;
            p.p_x.approx_eq(&x_end) && p.p_v.approx_eq(&v_end)
        }),
    ];

    let g_bc_stopped_bc = vec![g_bc_operating(), g_maybe_unsafe(), g_stopped(), g_stop_xv()];
    let g_bc_stopped_ac = vec![g_bc_operating(), g_surely_safe(k), g_stopped(), g_stop_xv()];

    let act_ac_handover = |stop: bool| -> ActionFn<S> {
        Arc::new(move |s, p, c| {
            let mut n = moved(s, p, c, Ctrl::Bc);
            n.v_bc0 = p.p_v.clone();
            if stop || p.p_v.is_zero() {
                n.plan.t_cruise = S::zero();
                n.plan.t_brake = S::zero();
            } else {
                n.plan.t_cruise = (c.x_tgt.clone() - p.p_x.clone()) / p.p_v.clone()
                    - p.p_v.clone() / two_b_min(c);
                n.plan.t_brake = p.p_v.clone() / c.b_min.clone();
            }
            n.plan.last_response_id = Some(ResponseId::S3);
            n
        })
    };
    let act_cruise = |ctrl: Ctrl| -> ActionFn<S> {
        Arc::new(move |s, p, c| {
            let mut n = moved(s, p, c, ctrl);
            n.plan.t_cruise = s.plan.t_cruise.clone() - c.dt.clone();
            n
        })
    };
    let act_brake: ActionFn<S> = Arc::new(|s, p, c| {
        let mut n = moved(s, p, c, Ctrl::Bc);
        let beta = c.dt.clone() - s.plan.t_cruise.clone();
        n.plan.t_cruise = S::zero();
        n.plan.t_brake = s.plan.t_brake.clone() - beta;
        n
    });
    let act_brake_out: ActionFn<S> = Arc::new(|s, p, c| {
        let mut n = moved(s, p, c, Ctrl::Bc);
        n.plan.t_cruise = S::zero();
        n.plan.t_brake = S::zero();
        n
    });

    let mut invariants = inherit(invs_m30());
    invariants.extend(inherit(invs_m31_new()));
    invariants.extend(invs_m32_new());

    let events = vec![
        init_event(true, true, true),
        EventDef {
            name: "AC->AC",
            refines: Some("AC->AC"),
            is_init: false,
            guards: g_ac_ac,
            action: act_move(Ctrl::Ac, false),
            param_sampler: ps_ac_box(),
        },
        EventDef {
            name: "AC_run->BC",
            refines: Some("AC->BC"),
            is_init: false,
            guards: g_ac_run_bc,
            action: act_ac_handover(false),
            param_sampler: ps_ac_box_moving(),
        },
        EventDef {
            name: "AC_stop->BC",
            refines: Some("AC->BC"),
            is_init: false,
            guards: g_ac_stop_bc,
            action: act_ac_handover(true),
            param_sampler: ps_ac_box_stopping(),
        },
        EventDef {
            name: "BC_cruise->AC",
            refines: Some("BC->AC"),
            is_init: false,
            guards: g_bc_cruise_ac,
            action: act_cruise(Ctrl::Ac),
            param_sampler: ps_cruise(),
        },
        EventDef {
            name: "BC_cruise->BC",
            refines: Some("BC->BC"),
            is_init: false,
            guards: g_bc_cruise_bc,
            action: act_cruise(Ctrl::Bc),
            param_sampler: ps_cruise(),
        },
        EventDef {
            name: "BC_brake->BC",
            refines: Some("BC->BC"),
            is_init: false,
            guards: g_bc_brake_bc,
            action: act_brake,
            param_sampler: ps_brake(),
        },
        EventDef {
            name: "BC_brake_out->BC",
            refines: Some("BC->BC"),
            is_init: false,
            guards: g_bc_brake_out_bc,
            action: act_brake_out,
            param_sampler: ps_brake_out(),
        },
        EventDef {
            name: "BC_stopped->BC",
            refines: Some("BC->BC"),
            is_init: false,
            guards: g_bc_stopped_bc,
            action: act_move(Ctrl::Bc, false),
            param_sampler: ps_hold(),
        },
        EventDef {
            name: "BC_stopped->AC",
            refines: Some("BC->AC"),
            is_init: false,
            guards: g_bc_stopped_ac,
            action: act_move(Ctrl::Ac, false),
            param_sampler: ps_hold(),
        },
    ];

    MachineDef {
        name: MachineName::M32,
        refines: Some(MachineName::M31),
        invariants,
        events,
        state_sampler: ps_state(2),
    }
}

#[cfg(test)]
mod tests {
    use super::super::{apply_event, build_machine, enabled_events};
    use super::*;
    use crate::sample::rng_for;
    use crate::scalar::Rat;

    fn r(n: i64) -> Rat {
        Rat::from_int(n)
    }

    fn c() -> ScenarioConstants<Rat> {
        ScenarioConstants::defaults()
    }

    #[test]
    fn event_counts() {
        assert_eq!(build_machine::<Rat>(MachineName::M30, None).non_init_events().count(), 1);
        assert_eq!(build_machine::<Rat>(MachineName::M31, None).non_init_events().count(), 4);
        assert_eq!(build_machine::<Rat>(MachineName::M32, None).non_init_events().count(), 9);
    }

    #[test]
    fn sampled_states_satisfy_invariants() {
        let c = c();
        for name in [MachineName::M30, MachineName::M31, MachineName::M32] {
            let m = build_machine::<Rat>(name, None);
            let mut rng = rng_for(7, &format!("state-{name}"));
            for i in 0..500 {
                let s = (m.state_sampler)(&c, &mut rng);
                assert!(
                    m.invariants_hold(&s, &c),
                    "{name} sample {i}: {:?} fails {:?}",
                    s,
                    m.failing_invariant(&s, &c)
                );
            }
        }
    }

    #[test]
    fn every_event_is_reachable_by_sampling() {
        let c = c();
        for name in [MachineName::M30, MachineName::M31, MachineName::M32] {
            let m = build_machine::<Rat>(name, None);
            let mut rng = rng_for(11, &format!("enabled-{name}"));
            let mut seen: std::collections::HashSet<&str> = Default::default();
            for _ in 0..30_000 {
                let s = (m.state_sampler)(&c, &mut rng);
                for (ev, _) in enabled_events(&m, &s, &c, &mut rng, 4) {
                    seen.insert(ev.name);
                }
                if seen.len() == m.non_init_events().count() {
                    break;
                }
            }
            let missing: Vec<&str> = m
                .non_init_events()
                .map(|e| e.name)
                .filter(|n| !seen.contains(n))
                .collect();
            assert!(missing.is_empty(), "{name}: events never enabled: {missing:?}");
        }
    }

    #[test]
    fn events_preserve_invariants_on_samples() {
        let c = c();
        for name in [MachineName::M30, MachineName::M31, MachineName::M32] {
            let m = build_machine::<Rat>(name, None);
            let mut rng = rng_for(13, &format!("preserve-{name}"));
            for _ in 0..2_000 {
                let s = (m.state_sampler)(&c, &mut rng);
                for (ev, params) in enabled_events(&m, &s, &c, &mut rng, 4) {
                    let next = (ev.action)(&s, &params, &c);
                    assert!(
                        m.invariants_hold(&next, &c),
                        "{name}.{}: {:?} -> {:?} breaks {:?}",
                        ev.name,
                        s,
                        next,
                        m.failing_invariant(&next, &c)
                    );
                }
            }
        }
    }

    #[test]
    fn lane_change_completes_after_t_lc_cycles() {
        let cst = c();
        let m = build_machine::<Rat>(MachineName::M30, None);
        let mut s = WorldState::new_s3(r(0), r(8), r(30), r(10));
        assert_eq!(s.lanes, LaneSet::single(2));
        for i in 1..=cst.t_lc + 1 {
            let p = EventParams { p_x: s.sv.x.clone() + r(8), p_v: r(8) };
            s = apply_event(&m, &s, "run", &p, &cst).unwrap();
            let expect = if i >= cst.t_lc {
                LaneSet::single(3)
            } else {
                LaneSet::of(&[2, 3])
            };
            assert_eq!(s.lanes, expect, "cycle {i}");
        }
        // POV2 advanced at constant speed the whole time.
        assert_eq!(s.pov2().unwrap().x, r(30) + r(10) * r((cst.t_lc + 1) as i64));
    }

    #[test]
    fn handover_respects_lane_change_feasibility() {
        let cst = c();
        let m = build_machine::<Rat>(MachineName::M32, None);
        // AC close to the target mid lane change: stopping plan would cut
        // the lane change short, so the moving handover must refuse.
        let mut s = WorldState::new_s3(r(88), r(2), r(150), r(20));
        s.t_lce = 0;
        s.v_bc0 = r(2);
        assert!(m.invariants_hold(&s, &cst), "{:?}", m.failing_invariant(&s, &cst));
        let p = EventParams { p_x: r(90), p_v: r(3) };
        let ev = m.event("AC_run->BC").unwrap();
        assert_eq!(ev.failing_guard(&s, &p, &cst), Some("schedule_feasible"));
        // Same proposal with the lane change already done is accepted.
        s.t_lce = cst.t_lc;
        s.lanes = LaneSet::single(3);
        let next = apply_event(&m, &s, "AC_run->BC", &p, &cst).unwrap();
        assert_eq!(next.ctrl, Ctrl::Bc);
        assert_eq!(next.plan.t_brake, Rat::from_ratio(3, 2));
        assert!(m.invariants_hold(&next, &cst), "{:?}", m.failing_invariant(&next, &cst));
    }

    #[test]
    fn mutation_weakens_switch_back() {
        let cst = c();
        let strict = build_machine::<Rat>(MachineName::M31, None);
        let weak = build_machine::<Rat>(MachineName::M31, Some(Mutation::DmOneCycleLookahead));
        let mut s = WorldState::new_s3(r(90), r(2), r(200), r(20));
        s.v_bc0 = r(2);
        assert!(strict.invariants_hold(&s, &cst), "{:?}", strict.failing_invariant(&s, &cst));
        let p = EventParams { p_x: Rat::from_ratio(185, 2), p_v: r(3) };
        assert!(!strict.event("AC->AC").unwrap().guard_holds(&s, &p, &cst));
        let ev_weak = weak.event("AC->AC").unwrap();
        assert!(ev_weak.guard_holds(&s, &p, &cst), "{:?}", ev_weak.failing_guard(&s, &p, &cst));
        let next = (ev_weak.action)(&s, &p, &cst);
        assert!(!weak.invariants_hold(&next, &cst));
        assert_eq!(weak.failing_invariant(&next, &cst), Some("ac_switchable"));
    }
}
