//! The S4 machine family: stop exactly at the target position in lane 3.
//!
//! M40 captures the requirement (stay inside the stoppable region), M41 adds
//! the controller split with the switching rule, M42 adds the baseline
//! controller's cruise-then-brake schedule.

use std::sync::Arc;

use rand_chacha::ChaCha8Rng;

use crate::kinematics::extrapolate_max_accel;
use crate::rss::phi4;
use crate::sample::{coin, rat_in_biased};
use crate::scalar::Scalar;
use crate::world::{Ctrl, ResponseId, ScenarioConstants, WorldState};

use super::{
    guard, inherit, inv, ActionFn, EventDef, EventParams, GuardClause, InvariantClause,
    MachineDef, MachineName, Mutation, ParamSamplerFn, StateSamplerFn,
};

/// Lookahead depth of `surely_safe_next`. The mutation shortens it to one
/// cycle, which the switching invariant is calibrated to reject.
pub(super) fn lookahead_k(mutation: Option<Mutation>) -> u32 {
    match mutation {
        Some(Mutation::DmOneCycleLookahead) => 1,
        None => 2,
    }
}

/// The precondition evaluated after `k` cycles of maximum acceleration.
fn phi4_at<S: Scalar>(x: &S, v: &S, c: &ScenarioConstants<S>, k: u32) -> bool {
    let (ex, ev) = extrapolate_max_accel(x, v, c, k).expect("k <= 2");
    phi4(&ex, &ev, c)
}

fn two_b_min<S: Scalar>(c: &ScenarioConstants<S>) -> S {
    c.b_min.clone() + c.b_min.clone()
}

/// Draws `(x, v)` such that the precondition holds after `k` cycles of
/// maximum acceleration; `k = 0` samples the plain precondition region.
fn draw_xv_under<S: Scalar>(c: &ScenarioConstants<S>, rng: &mut ChaCha8Rng, k: u32) -> (S, S) {
    for _ in 0..32 {
        let v = rat_in_biased(rng, &S::zero(), &c.v_max);
        let (off_x, ev) = extrapolate_max_accel(&S::zero(), &v, c, k).expect("k <= 2");
        let bound = c.x_tgt.clone() - ev.sq() / two_b_min(c) - off_x;
        if bound >= S::zero() {
            let x = rat_in_biased(rng, &S::zero(), &bound);
            return (x, v);
        }
    }
    (S::zero(), S::zero())
}

// --- guards -----------------------------------------------------------------

/// The event-parameter box common to all run events: inside the track, inside
/// the legal velocity band, precondition-preserving, physically reachable in
/// one cycle.
fn run_box_guards<S: Scalar>(with_precond: bool) -> Vec<GuardClause<S>> {
    let mut gs = vec![
        guard("preserve_no_overrun", |_s: &WorldState<S>, p: &EventParams<S>, c: &ScenarioConstants<S>| {
            S::zero() <= p.p_x && p.p_x <= c.x_tgt
        }),
        guard("preserve_v_regulated", |_s, p, c| {
            S::zero() <= p.p_v && p.p_v <= c.v_max
        }),
    ];
    if with_precond {
        gs.push(guard("preserve_precond", |_s, p, c| phi4(&p.p_x, &p.p_v, c)));
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
    guard("surely_safe_next", move |_s, p, c| phi4_at(&p.p_x, &p.p_v, c, k))
}

fn g_maybe_unsafe<S: Scalar>() -> GuardClause<S> {
    guard("maybe_unsafe_next", |_s, p, c| !phi4_at(&p.p_x, &p.p_v, c, 2))
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

/// Box draw with a nonzero velocity, for the keep-running handover.
fn ps_ac_box_moving<S: Scalar>() -> ParamSamplerFn<S> {
    Arc::new(|s, c, rng| {
        let mut p = box_draw(s, c, rng, false);
        if p.p_v.is_zero() {
            p.p_v = (s.sv.v.clone() + c.a_max.clone() * c.dt.clone()).min_s(c.v_max.clone());
        }
        p
    })
}

/// Box draw for the position with a pinned zero velocity.
fn ps_ac_box_stopping<S: Scalar>() -> ParamSamplerFn<S> {
    Arc::new(|s, c, rng| {
        let mut p = box_draw(s, c, rng, false);
        p.p_v = S::zero();
        p
    })
}

/// One full cruise cycle at the pinned cruise velocity.
fn ps_cruise<S: Scalar>() -> ParamSamplerFn<S> {
    Arc::new(|s, c, _rng| EventParams {
        p_x: s.sv.x.clone() + s.sv.v.clone() * c.dt.clone(),
        p_v: s.sv.v.clone(),
    })
}

/// A mixed cycle: cruise for the remaining `t_cruise`, then brake at `b_min`
/// for the rest of the cycle.
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

/// A cycle that finishes the brake phase before the cycle boundary; the tail
/// of the cycle continues at the post-brake velocity.
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

fn invs_m40<S: Scalar>() -> Vec<InvariantClause<S>> {
    vec![
        inv("types_xv", false, |s: &WorldState<S>, _c: &ScenarioConstants<S>| {
            s.sv.x.is_finite_val() && s.sv.v.is_finite_val()
        }),
        inv("no_overrun", false, |s, c| {
            S::zero() <= s.sv.x && s.sv.x <= c.x_tgt
        }),
        inv("v_regulated", false, |s, c| {
            S::zero() <= s.sv.v && s.sv.v <= c.v_max
        }),
        inv("precond", false, |s, c| phi4(&s.sv.x, &s.sv.v, c)),
    ]
}

fn invs_m41_new<S: Scalar>() -> Vec<InvariantClause<S>> {
    vec![
        inv("types_v_bc0", false, |s: &WorldState<S>, _c: &ScenarioConstants<S>| {
            s.v_bc0.is_finite_val()
        }),
        inv("v_bc0_regulated", false, |s, c| {
            S::zero() <= s.v_bc0 && s.v_bc0 <= c.v_max
        }),
        inv("bc_no_accel", false, |s, _c| s.ctrl != Ctrl::Bc || s.sv.v <= s.v_bc0),
        // While the AC drives, even two further cycles of maximum
        // acceleration must leave the stop still reachable; this is the
        // margin the one-cycle switching delay consumes.
        inv("ac_switchable", false, |s, c| {
            s.ctrl != Ctrl::Ac || phi4_at(&s.sv.x, &s.sv.v, c, 2)
        }),
    ]
}

fn invs_m42_new<S: Scalar>() -> Vec<InvariantClause<S>> {
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

/// Constructive sampler over the invariant states of each refinement level.
fn ps_state<S: Scalar>(level: u8) -> StateSamplerFn<S> {
    Arc::new(move |c, rng| {
        if level == 0 {
            let (x, v) = draw_xv_under(c, rng, 0);
            return WorldState::new_s4(x, v);
        }
        if coin(rng, 50) {
            // AC driving: two-cycle switching margin on x.
            let (x, v) = draw_xv_under(c, rng, 2);
            let mut s = WorldState::new_s4(x, v);
            s.v_bc0 = rat_in_biased(rng, &S::zero(), &c.v_max);
            s
        } else {
            let (x0, v) = draw_xv_under(c, rng, 0);
            let mut s = WorldState::new_s4(x0, v.clone());
            s.ctrl = Ctrl::Bc;
            if level == 1 || v.is_zero() {
                s.v_bc0 = rat_in_biased(rng, &v, &c.v_max);
                return s;
            }
            // Level 2: place the SV on a consistent cruise-then-brake plan.
            let brake_dist = v.sq() / two_b_min(c);
            let t_c_max = (c.x_tgt.clone() - brake_dist.clone()) / v.clone();
            let t_c = rat_in_biased(rng, &S::zero(), &t_c_max);
            s.sv.x = c.x_tgt.clone() - t_c.clone() * v.clone() - brake_dist;
            s.plan.t_brake = v.clone() / c.b_min.clone();
            s.v_bc0 = if t_c > S::zero() {
                v.clone()
            } else {
                rat_in_biased(rng, &v, &c.v_max)
            };
            s.plan.t_cruise = t_c;
            s.plan.last_response_id = Some(ResponseId::S4);
            s
        }
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
        guard("init_precond", |_s, p, c| phi4(&p.p_x, &p.p_v, c)),
    ];
    if switch_margin {
        guards.push(guard("init_switchable", |_s, p, c| phi4_at(&p.p_x, &p.p_v, c, 2)));
    }
    let k = if switch_margin { 2 } else { 0 };
    EventDef {
        name: "initialisation",
        refines: if refines { Some("initialisation") } else { None },
        is_init: true,
        guards,
        action: Arc::new(move |_s, p, _c| {
            let mut s = WorldState::new_s4(p.p_x.clone(), p.p_v.clone());
            if set_vbc0 {
                s.v_bc0 = p.p_v.clone();
            }
            s
        }),
        param_sampler: Arc::new(move |_s, c, rng| {
            let (p_x, p_v) = draw_xv_under(c, rng, k);
            EventParams { p_x, p_v }
        }),
    }
}

pub(super) fn m40<S: Scalar>() -> MachineDef<S> {
    let run = EventDef {
        name: "run",
        refines: None,
        is_init: false,
        guards: run_box_guards(true),
        action: act_move(Ctrl::Ac, false),
        param_sampler: ps_ac_box(),
    };
    MachineDef {
        name: MachineName::M40,
        refines: None,
        invariants: invs_m40(),
        events: vec![init_event(false, false, false), run],
        state_sampler: ps_state(0),
    }
}

pub(super) fn m41<S: Scalar>(mutation: Option<Mutation>) -> MachineDef<S> {
    let k = lookahead_k(mutation);

    let mut g_ac_ac = run_box_guards(true);
    g_ac_ac.push(g_ac_operating());
    g_ac_ac.push(g_surely_safe(k));

    // The switching margin invariant already implies precondition
    // preservation for anything physically reachable from an AC state.
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

    let mut invariants = inherit(invs_m40());
    invariants.extend(invs_m41_new());

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
        name: MachineName::M41,
        refines: Some(MachineName::M40),
        invariants,
        events,
        state_sampler: ps_state(1),
    }
}

pub(super) fn m42<S: Scalar>(mutation: Option<Mutation>) -> MachineDef<S> {
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

    // Plan-updating actions.
    let act_ac_handover = |stop: bool| -> ActionFn<S> {
        Arc::new(move |s, p, c| {
            let mut n = moved(s, p, c, Ctrl::Bc);
            n.v_bc0 = p.p_v.clone();
            if stop || p.p_v.is_zero() {
                n.plan.t_cruise = S::zero();
                n.plan.t_brake = S::zero();
            } else {
                // Cruise until only the comfortable braking distance remains.
                n.plan.t_cruise = (c.x_tgt.clone() - p.p_x.clone()) / p.p_v.clone()
                    - p.p_v.clone() / two_b_min(c);
                n.plan.t_brake = p.p_v.clone() / c.b_min.clone();
            }
            n.plan.last_response_id = Some(ResponseId::S4);
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

    let mut invariants = inherit(invs_m40());
    invariants.extend(inherit(invs_m41_new()));
    invariants.extend(invs_m42_new());

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
        name: MachineName::M42,
        refines: Some(MachineName::M41),
        invariants,
        events,
        state_sampler: ps_state(2),
    }
}
