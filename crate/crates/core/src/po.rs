//! Proof-obligation generation and randomized discharge.
//!
//! Obligations follow the two standard schemas: invariant preservation
//! (axioms, invariants and the event guard imply the invariant after the
//! event's action) and guard strengthening (concrete invariants and the
//! concrete guard imply the abstract guard). Checking samples the
//! hypothesis region with boundary bias and evaluates in the scalar's
//! arithmetic; with the exact scalar a FAIL is a genuine refutation, while
//! a PASS is evidence, not proof.

use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::machines::{
    build_machine, refinement_pairs, EventParams, GuardFn, MachineDef, MachineName, Mutation,
    ParamSamplerFn, StateSamplerFn,
};
use crate::sample::rng_for;
use crate::scalar::Scalar;
use crate::world::{ScenarioConstants, WorldState};

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum PoKind {
    InvPreservation,
    GuardStrengthening,
}

impl std::fmt::Display for PoKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            PoKind::InvPreservation => write!(f, "INV_PRESERVATION"),
            PoKind::GuardStrengthening => write!(f, "GUARD_STRENGTHENING"),
        }
    }
}

/// One obligation, carrying everything needed to check it: samplers aimed
/// at the hypothesis region plus the hypothesis/conclusion predicates.
#[derive(Clone)]
pub struct ProofObligation<S: Scalar> {
    pub kind: PoKind,
    pub machine: MachineName,
    pub event: &'static str,
    /// Target invariant label (preservation) or abstract event name
    /// (strengthening).
    pub target: &'static str,
    pub state_sampler: StateSamplerFn<S>,
    pub param_sampler: ParamSamplerFn<S>,
    pub hypothesis: GuardFn<S>,
    pub conclusion: GuardFn<S>,
}

impl<S: Scalar> ProofObligation<S> {
    pub fn label(&self) -> String {
        format!("{}/{}/{}/{}", self.kind, self.machine, self.event, self.target)
    }

    fn violated(
        &self,
        state: &WorldState<S>,
        params: &EventParams<S>,
        consts: &ScenarioConstants<S>,
    ) -> bool {
        (self.hypothesis)(state, params, consts) && !(self.conclusion)(state, params, consts)
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum PoStatus {
    Pass,
    Fail,
    Vacuous,
}

impl std::fmt::Display for PoStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            PoStatus::Pass => write!(f, "PASS"),
            PoStatus::Fail => write!(f, "FAIL"),
            PoStatus::Vacuous => write!(f, "VACUOUS"),
        }
    }
}

#[derive(Clone, Debug)]
pub struct Counterexample<S: Scalar> {
    pub state: WorldState<S>,
    pub params: EventParams<S>,
}

#[derive(Clone, Debug)]
pub struct Verdict<S: Scalar> {
    pub status: PoStatus,
    /// Samples drawn before the verdict (the full budget unless FAIL).
    pub samples: u64,
    /// Samples that satisfied the hypothesis.
    pub hypothesis_hits: u64,
    pub counterexample: Option<Counterexample<S>>,
    pub seed: u64,
}

impl<S: Scalar> Verdict<S> {
    pub fn vacuity_ratio(&self) -> f64 {
        if self.samples == 0 {
            0.0
        } else {
            self.hypothesis_hits as f64 / self.samples as f64
        }
    }
}

/// Generates the machine's obligations: one preservation PO per
/// (non-initialisation event, newly introduced invariant) and, when the
/// abstract machine is given, one strengthening PO per refinement pair.
/// Inherited invariants are re-established at the abstract level, so only
/// the invariants a machine adds are preservation targets here.
pub fn generate_pos<S: Scalar>(
    m: &MachineDef<S>,
    abstract_m: Option<&MachineDef<S>>,
) -> Result<Vec<ProofObligation<S>>> {
    let mut pos = Vec::new();
    let all_invariants = m.invariants.clone();
    for ev in m.non_init_events() {
        for inv in m.invariants.iter().filter(|i| !i.inherited) {
            let hyp_invs = all_invariants.clone();
            let guards = ev.guards.clone();
            let action = ev.action.clone();
            let target_pred = inv.pred.clone();
            pos.push(ProofObligation {
                kind: PoKind::InvPreservation,
                machine: m.name,
                event: ev.name,
                target: inv.label,
                state_sampler: m.state_sampler.clone(),
                param_sampler: ev.param_sampler.clone(),
                hypothesis: Arc::new(move |s, p, c| {
                    hyp_invs.iter().all(|i| (i.pred)(s, c))
                        && guards.iter().all(|g| (g.pred)(s, p, c))
                }),
                conclusion: Arc::new(move |s, p, c| target_pred(&action(s, p, c), c)),
            });
        }
    }
    if let Some(abs) = abstract_m {
        for (con_ev, abs_ev) in refinement_pairs(m, abs)? {
            let hyp_invs = all_invariants.clone();
            let con_guards = con_ev.guards.clone();
            let abs_guards = abs_ev.guards.clone();
            pos.push(ProofObligation {
                kind: PoKind::GuardStrengthening,
                machine: m.name,
                event: con_ev.name,
                target: abs_ev.name,
                state_sampler: m.state_sampler.clone(),
                param_sampler: con_ev.param_sampler.clone(),
                hypothesis: Arc::new(move |s, p, c| {
                    hyp_invs.iter().all(|i| (i.pred)(s, c))
                        && con_guards.iter().all(|g| (g.pred)(s, p, c))
                }),
                conclusion: Arc::new(move |s, p, c| {
                    abs_guards.iter().all(|g| (g.pred)(s, p, c))
                }),
            });
        }
    }
    Ok(pos)
}

/// All obligations of all six machines, optionally under a guard mutation.
pub fn generate_all_pos<S: Scalar>(mutation: Option<Mutation>) -> Vec<ProofObligation<S>> {
    let mut out = Vec::new();
    for name in MachineName::ALL {
        let m = build_machine::<S>(name, mutation);
        let abs = name.abstract_name().map(|a| build_machine::<S>(a, mutation));
        out.extend(generate_pos(&m, abs.as_ref()).expect("refinement links are total"));
    }
    out
}

/// Discharges one obligation with a sampling budget. Deterministic: the
/// effective RNG stream is derived from `seed` and the obligation's label.
pub fn check_po<S: Scalar>(
    po: &ProofObligation<S>,
    budget: u64,
    seed: u64,
    consts: &ScenarioConstants<S>,
) -> Verdict<S> {
    let mut rng = rng_for(seed, &po.label());
    let mut hits = 0u64;
    for i in 0..budget {
        let state = (po.state_sampler)(consts, &mut rng);
        let params = (po.param_sampler)(&state, consts, &mut rng);
        if !(po.hypothesis)(&state, &params, consts) {
            continue;
        }
        hits += 1;
        if !(po.conclusion)(&state, &params, consts) {
            let (state, params) = shrink(&(state, params), po, consts)
                .expect("a found counterexample shrinks");
            return Verdict {
                status: PoStatus::Fail,
                samples: i + 1,
                hypothesis_hits: hits,
                counterexample: Some(Counterexample { state, params }),
                seed,
            };
        }
    }
    Verdict {
        status: if hits == 0 {
            PoStatus::Vacuous
        } else {
            PoStatus::Pass
        },
        samples: budget,
        hypothesis_hits: hits,
        counterexample: None,
        seed,
    }
}

type Point<S> = (WorldState<S>, EventParams<S>);

struct Coord<S: Scalar> {
    get: Box<dyn Fn(&Point<S>) -> S>,
    set: Box<dyn Fn(&mut Point<S>, S)>,
    anchor: Box<dyn Fn(&Point<S>) -> S>,
}

fn coords<S: Scalar>(point: &Point<S>) -> Vec<Coord<S>> {
    let zero = |_: &Point<S>| S::zero();
    let mut cs: Vec<Coord<S>> = vec![
        Coord {
            get: Box::new(|p| p.0.sv.x.clone()),
            set: Box::new(|p, v| p.0.sv.x = v),
            anchor: Box::new(zero),
        },
        Coord {
            get: Box::new(|p| p.0.sv.v.clone()),
            set: Box::new(|p, v| p.0.sv.v = v),
            anchor: Box::new(zero),
        },
        Coord {
            get: Box::new(|p| p.0.v_bc0.clone()),
            set: Box::new(|p, v| p.0.v_bc0 = v),
            anchor: Box::new(zero),
        },
        Coord {
            get: Box::new(|p| p.0.plan.t_cruise.clone()),
            set: Box::new(|p, v| p.0.plan.t_cruise = v),
            anchor: Box::new(zero),
        },
        Coord {
            get: Box::new(|p| p.0.plan.t_brake.clone()),
            set: Box::new(|p, v| p.0.plan.t_brake = v),
            anchor: Box::new(zero),
        },
        Coord {
            // proposal position shrinks toward standing still
            get: Box::new(|p| p.1.p_x.clone()),
            set: Box::new(|p, v| p.1.p_x = v),
            anchor: Box::new(|p: &Point<S>| p.0.sv.x.clone()),
        },
        Coord {
            get: Box::new(|p| p.1.p_v.clone()),
            set: Box::new(|p, v| p.1.p_v = v),
            anchor: Box::new(zero),
        },
    ];
    if point.0.pov(2).is_some() {
        cs.push(Coord {
            // lead-vehicle position shrinks toward a closed gap
            get: Box::new(|p| p.0.pov(2).unwrap().x.clone()),
            set: Box::new(|p, v| {
                if let Some(pov) = p.0.povs.iter_mut().find(|q| q.id == 2) {
                    pov.x = v;
                }
            }),
            anchor: Box::new(|p: &Point<S>| p.0.sv.x.clone()),
        });
        cs.push(Coord {
            get: Box::new(|p| p.0.pov(2).unwrap().v.clone()),
            set: Box::new(|p, v| {
                if let Some(pov) = p.0.povs.iter_mut().find(|q| q.id == 2) {
                    pov.v = v;
                }
            }),
            anchor: Box::new(zero),
        });
    }
    cs
}

const SHRINK_BISECTIONS: u32 = 16;
const SHRINK_PASSES: u32 = 3;

/// Coordinate-wise bisection of a counterexample toward zero-ish anchors.
/// Every accepted move is re-verified against the obligation, so the
/// result still violates it. Shrinking a non-violating point is an error.
pub fn shrink<S: Scalar>(
    cex: &Point<S>,
    po: &ProofObligation<S>,
    consts: &ScenarioConstants<S>,
) -> Result<Point<S>> {
    if !po.violated(&cex.0, &cex.1, consts) {
        return Err(Error::Contract(format!(
            "shrink: point does not violate {}",
            po.label()
        )));
    }
    let mut cur = cex.clone();
    for _ in 0..SHRINK_PASSES {
        let mut changed = false;
        for coord in coords(&cur) {
            let val = (coord.get)(&cur);
            let anchor = (coord.anchor)(&cur);
            if val == anchor {
                continue;
            }
            // try the anchor itself first
            let mut cand = cur.clone();
            (coord.set)(&mut cand, anchor.clone());
            if po.violated(&cand.0, &cand.1, consts) {
                cur = cand;
                changed = true;
                continue;
            }
            // bisect between the anchor (non-violating side) and the value
            let mut lo = anchor;
            let mut hi = val.clone();
            for _ in 0..SHRINK_BISECTIONS {
                let mid = (lo.clone() + hi.clone()).half();
                let mut cand = cur.clone();
                (coord.set)(&mut cand, mid.clone());
                if po.violated(&cand.0, &cand.1, consts) {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            if hi != val {
                (coord.set)(&mut cur, hi);
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    debug_assert!(po.violated(&cur.0, &cur.1, consts));
    Ok(cur)
}

/// Checks a list of obligations, preserving order. Obligations are
/// independent jobs; verdicts do not depend on scheduling.
pub fn check_all<S: Scalar>(
    pos: &[ProofObligation<S>],
    budget: u64,
    seed: u64,
    consts: &ScenarioConstants<S>,
) -> Vec<Verdict<S>> {
    pos.par_iter()
        .map(|po| check_po(po, budget, seed, consts))
        .collect()
}

// --- reports ----------------------------------------------------------------

/// One JSON line per obligation.
pub fn report_jsonl<S: Scalar>(pos: &[ProofObligation<S>], verdicts: &[Verdict<S>]) -> String {
    let mut out = String::new();
    for (po, v) in pos.iter().zip(verdicts) {
        let cex = v.counterexample.as_ref().map(|c| {
            serde_json::json!({
                "x_sv": c.state.sv.x.repr(),
                "v_sv": c.state.sv.v.repr(),
                "ctrl": c.state.ctrl.to_string(),
                "v_bc0": c.state.v_bc0.repr(),
                "t_cruise": c.state.plan.t_cruise.repr(),
                "t_brake": c.state.plan.t_brake.repr(),
                "x_2": c.state.pov(2).map(|p| p.x.repr()),
                "v_2": c.state.pov(2).map(|p| p.v.repr()),
                "t_lce": c.state.t_lce,
                "p_x": c.params.p_x.repr(),
                "p_v": c.params.p_v.repr(),
            })
        });
        let line = serde_json::json!({
            "kind": po.kind.to_string(),
            "machine": po.machine.to_string(),
            "event": po.event,
            "target": po.target,
            "status": v.status.to_string(),
            "samples": v.samples,
            "hypothesis_hits": v.hypothesis_hits,
            "vacuity_ratio": v.vacuity_ratio(),
            "counterexample": cex,
            "seed": v.seed,
        });
        out.push_str(&line.to_string());
        out.push('\n');
    }
    out
}

/// Human-readable summary: one row per obligation plus totals.
pub fn report_summary<S: Scalar>(
    pos: &[ProofObligation<S>],
    verdicts: &[Verdict<S>],
) -> String {
    let mut out = String::new();
    let (mut pass, mut fail, mut vac) = (0usize, 0usize, 0usize);
    out.push_str(&format!(
        "{:<20} {:<8} {:<16} {:<16} {:>8} {:>9}\n",
        "kind", "machine", "event", "target", "status", "hit-rate"
    ));
    for (po, v) in pos.iter().zip(verdicts) {
        match v.status {
            PoStatus::Pass => pass += 1,
            PoStatus::Fail => fail += 1,
            PoStatus::Vacuous => vac += 1,
        }
        out.push_str(&format!(
            "{:<20} {:<8} {:<16} {:<16} {:>8} {:>8.1}%\n",
            po.kind.to_string(),
            po.machine.to_string(),
            po.event,
            po.target,
            v.status.to_string(),
            100.0 * v.vacuity_ratio(),
        ));
    }
    out.push_str(&format!(
        "total: {} obligations, {pass} PASS, {fail} FAIL, {vac} VACUOUS\n",
        pos.len()
    ));
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::machines::build_machine;
    use crate::scalar::Rat;

    fn consts() -> ScenarioConstants<Rat> {
        ScenarioConstants::defaults()
    }

    #[test]
    fn po_counts() {
        let m40 = build_machine::<Rat>(MachineName::M40, None);
        let pos = generate_pos(&m40, None).unwrap();
        assert_eq!(pos.len(), 4); // 1 event x 4 invariants, nothing to strengthen
        assert!(pos
            .iter()
            .all(|p| p.kind == PoKind::InvPreservation));

        let m41 = build_machine::<Rat>(MachineName::M41, None);
        let pos = generate_pos(&m41, Some(&m40)).unwrap();
        let inv = pos
            .iter()
            .filter(|p| p.kind == PoKind::InvPreservation)
            .count();
        let gs = pos
            .iter()
            .filter(|p| p.kind == PoKind::GuardStrengthening)
            .count();
        assert_eq!((inv, gs), (16, 4)); // 4 events x 4 new invariants; 4 pairs
        assert!(pos
            .iter()
            .filter(|p| p.kind == PoKind::GuardStrengthening)
            .all(|p| p.target == "run"));
    }

    #[test]
    fn unmutated_pos_pass_at_small_budget() {
        let c = consts();
        let pos = generate_all_pos::<Rat>(None);
        assert_eq!(pos.len(), 158);
        let verdicts = check_all(&pos, 1500, 77, &c);
        for (po, v) in pos.iter().zip(&verdicts) {
            assert_ne!(v.status, PoStatus::Fail, "{} failed", po.label());
        }
    }

    #[test]
    fn mutated_lookahead_fails_in_both_families() {
        let c = consts();
        let pos = generate_all_pos::<Rat>(Some(Mutation::DmOneCycleLookahead));
        let verdicts = check_all(&pos, 20_000, 77, &c);
        for fam in [MachineName::M41, MachineName::M31] {
            let found = pos.iter().zip(&verdicts).find(|(p, v)| {
                p.machine == fam && v.status == PoStatus::Fail
            });
            let (po, v) = found.unwrap_or_else(|| panic!("no FAIL in {fam}"));
            let cex = v.counterexample.as_ref().unwrap();
            // the counterexample is re-checkable
            assert!(po.violated(&cex.state, &cex.params, &c));
        }
    }

    #[test]
    fn verdicts_are_deterministic() {
        let c = consts();
        let pos = generate_all_pos::<Rat>(Some(Mutation::DmOneCycleLookahead));
        let a = check_all(&pos, 5000, 3, &c);
        let b = check_all(&pos, 5000, 3, &c);
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.status, y.status);
            assert_eq!(x.samples, y.samples);
            match (&x.counterexample, &y.counterexample) {
                (None, None) => {}
                (Some(p), Some(q)) => {
                    assert_eq!(p.state, q.state);
                    assert_eq!(p.params, q.params);
                }
                _ => panic!("counterexample mismatch"),
            }
        }
    }

    #[test]
    fn impossible_guard_is_vacuous() {
        let c = consts();
        let m40 = build_machine::<Rat>(MachineName::M40, None);
        let mut po = generate_pos(&m40, None).unwrap().remove(0);
        let old = po.hypothesis.clone();
        po.hypothesis = Arc::new(move |s: &WorldState<Rat>, p, cst: &ScenarioConstants<Rat>| {
            old(s, p, cst) && s.sv.x > cst.x_tgt
        });
        let v = check_po(&po, 2000, 1, &c);
        assert_eq!(v.status, PoStatus::Vacuous);
        assert_eq!(v.hypothesis_hits, 0);
    }

    #[test]
    fn shrinking_a_pass_point_is_a_contract_error() {
        let c = consts();
        let m40 = build_machine::<Rat>(MachineName::M40, None);
        let po = &generate_pos(&m40, None).unwrap()[0];
        let state = WorldState::new_s4(Rat::from_int(0), Rat::from_int(10));
        let params = EventParams {
            p_x: Rat::from_int(10),
            p_v: Rat::from_int(10),
        };
        assert!(matches!(
            shrink(&(state, params), po, &c),
            Err(Error::Contract(_))
        ));
    }

    #[test]
    fn reports_cover_every_obligation() {
        let c = consts();
        let m40 = build_machine::<Rat>(MachineName::M40, None);
        let pos = generate_pos(&m40, None).unwrap();
        let verdicts = check_all(&pos, 500, 9, &c);
        let jsonl = report_jsonl(&pos, &verdicts);
        assert_eq!(jsonl.lines().count(), pos.len());
        for line in jsonl.lines() {
            let v: serde_json::Value = serde_json::from_str(line).unwrap();
            assert_eq!(v["machine"], "M40");
        }
        let summary = report_summary(&pos, &verdicts);
        assert!(summary.contains("total: 4 obligations"));
    }
}
