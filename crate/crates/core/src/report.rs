//! Trace and sweep serialization: line-oriented JSON for tooling, CSV for
//! spreadsheets and plotting. All writers are deterministic functions of
//! their inputs, so identical runs produce byte-identical reports.

use crate::harness::{SweepReport, Trace};
use crate::scalar::Scalar;

/// CSV with one row per cycle record.
pub fn trace_csv<S: Scalar>(trace: &Trace<S>) -> String {
    let mut out = String::from(
        "cycle,x_sv,v_sv,ctrl,t_cruise,t_brake,x_2,t_LCe,dm_decision,violations\n",
    );
    for r in &trace.records {
        let x2 = r
            .state
            .pov(2)
            .map(|p| p.x.repr())
            .unwrap_or_default();
        let decision = r.decision.map(|d| d.to_string()).unwrap_or_default();
        let violations = r
            .violations
            .iter()
            .map(|v| format!("{}:{}", v.kind, v.predicate))
            .collect::<Vec<_>>()
            .join(";");
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{}\n",
            r.cycle,
            r.state.sv.x.repr(),
            r.state.sv.v.repr(),
            r.state.ctrl,
            r.state.plan.t_cruise.repr(),
            r.state.plan.t_brake.repr(),
            x2,
            r.state.t_lce,
            decision,
            violations,
        ));
    }
    out
}

/// Line-oriented JSON: one metadata line, then one line per cycle record.
pub fn trace_jsonl<S: Scalar>(trace: &Trace<S>) -> String {
    let mut out = String::new();
    let meta = serde_json::json!({
        "subscenario": trace.subscenario.to_string(),
        "seed": trace.seed,
        "status": trace.status.to_string(),
        "cycles": trace.cycles(),
    });
    out.push_str(&meta.to_string());
    out.push('\n');
    for r in &trace.records {
        let proposal = r.proposal.as_ref().map(|p| {
            serde_json::json!({"p_x": p.p_x.repr(), "p_v": p.p_v.repr()})
        });
        let violations: Vec<serde_json::Value> = r
            .violations
            .iter()
            .map(|v| serde_json::json!({"kind": v.kind.to_string(), "predicate": v.predicate}))
            .collect();
        let line = serde_json::json!({
            "cycle": r.cycle,
            "x_sv": r.state.sv.x.repr(),
            "v_sv": r.state.sv.v.repr(),
            "a_cmd": r.state.sv.a_cmd.repr(),
            "ctrl": r.state.ctrl.to_string(),
            "v_bc0": r.state.v_bc0.repr(),
            "t_cruise": r.state.plan.t_cruise.repr(),
            "t_brake": r.state.plan.t_brake.repr(),
            "x_2": r.state.pov(2).map(|p| p.x.repr()),
            "v_2": r.state.pov(2).map(|p| p.v.repr()),
            "t_lce": r.state.t_lce,
            "lanes": r.state.lanes.to_string(),
            "proposal": proposal,
            "substituted": r.substituted,
            "dm_decision": r.decision.map(|d| d.to_string()),
            "violations": violations,
        });
        out.push_str(&line.to_string());
        out.push('\n');
    }
    out
}

/// Region CSV: one row per lattice point; skipped points keep an empty
/// status column.
pub fn sweep_csv<S: Scalar>(report: &SweepReport<S>) -> String {
    let mut out = String::from("x,v,gap,status,cycles\n");
    for p in &report.points {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            p.x.repr(),
            p.v.repr(),
            p.gap.as_ref().map(|g| g.repr()).unwrap_or_default(),
            p.status.map(|s| s.to_string()).unwrap_or_default(),
            p.cycles,
        ));
    }
    out
}

/// Counts plus the per-(v, gap) boundary of the goal-achieving region.
pub fn sweep_summary<S: Scalar>(report: &SweepReport<S>) -> String {
    let ran = report.points.len() - report.skipped;
    let mut out = format!(
        "{} sweep: {} points ({} run, {} skipped by precondition)\n\
         GOAL {}  VIOLATION {}  TIMEOUT {}  STALLED {}\n",
        report.subscenario,
        report.points.len(),
        ran,
        report.skipped,
        report.goals,
        report.violations,
        report.timeouts,
        report.stalled,
    );
    let boundary = report.goal_boundary();
    if !boundary.is_empty() {
        out.push_str("goal boundary (v, gap, last x reaching GOAL, first x not):\n");
        for (v, gap, last_goal, first_not) in boundary {
            out.push_str(&format!(
                "  v={} gap={} last_goal_x={} first_non_goal_x={}\n",
                v.repr(),
                gap.map(|g| g.repr()).unwrap_or_else(|| "-".into()),
                last_goal.map(|x| x.repr()).unwrap_or_else(|| "-".into()),
                first_not.map(|x| x.repr()).unwrap_or_else(|| "-".into()),
            ));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::controller::{MaxAccel, SubscenarioSpec};
    use crate::harness::{run_trace, sweep_initial_states, LatticeSpec};
    use crate::scalar::Rat;
    use crate::world::{ScenarioConstants, Subscenario, WorldState};

    fn r(n: i64) -> Rat {
        Rat::from_int(n)
    }

    #[test]
    fn trace_reports_are_deterministic_and_complete() {
        let c = ScenarioConstants::defaults();
        let spec = SubscenarioSpec::new(Subscenario::S4).unwrap();
        let init = WorldState::new_s4(r(0), r(10));
        let run = || run_trace(spec, &init, &mut MaxAccel, 100, &c, 4).unwrap();
        let (a, b) = (run(), run());
        assert_eq!(trace_csv(&a), trace_csv(&b));
        assert_eq!(trace_jsonl(&a), trace_jsonl(&b));

        let csv = trace_csv(&a);
        assert!(csv.starts_with("cycle,x_sv,v_sv,ctrl,"));
        assert_eq!(csv.lines().count(), a.records.len() + 1);
        let jsonl = trace_jsonl(&a);
        assert_eq!(jsonl.lines().count(), a.records.len() + 1);
        for line in jsonl.lines() {
            serde_json::from_str::<serde_json::Value>(line).unwrap();
        }
    }

    #[test]
    fn sweep_reports_include_every_point() {
        let c = ScenarioConstants::defaults();
        let spec = SubscenarioSpec::new(Subscenario::S4).unwrap();
        let lattice = LatticeSpec {
            xs: vec![r(0), r(50), r(95)],
            vs: vec![r(0), r(10)],
            gaps: Vec::new(),
            v2: None,
        };
        let report = sweep_initial_states(spec, &lattice, "max-accel", 300, &c, 2).unwrap();
        let csv = sweep_csv(&report);
        assert_eq!(csv.lines().count(), report.points.len() + 1);
        let summary = sweep_summary(&report);
        assert!(summary.contains("skipped"));
    }
}
