//! Core domain state: constants, vehicle kinematics, lanes, world snapshots.

use std::fmt;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Physical and legal constants of the pull-over scenario.
#[derive(Clone, Debug, PartialEq)]
pub struct ScenarioConstants<S: Scalar> {
    /// Target stop position (m).
    pub x_tgt: S,
    /// Legal speed limits (m/s).
    pub v_min: S,
    pub v_max: S,
    /// Comfortable braking deceleration (m/s^2).
    pub b_min: S,
    /// Emergency braking deceleration (m/s^2).
    pub b_max: S,
    /// Maximum acceleration (m/s^2).
    pub a_max: S,
    /// Lane-change duration (cycles).
    pub t_lc: u32,
    /// Cycle length (time units). Default 1.
    pub dt: S,
}

impl<S: Scalar> ScenarioConstants<S> {
    /// Defaults used throughout the acceptance runs:
    /// b_min=2, b_max=4, a_max=1, v_max=20, x_Tgt=100, t_LC=4, dt=1.
    pub fn defaults() -> Self {
        Self {
            x_tgt: S::from_int(100),
            v_min: S::zero(),
            v_max: S::from_int(20),
            b_min: S::from_int(2),
            b_max: S::from_int(4),
            a_max: S::from_int(1),
            t_lc: 4,
            dt: S::one(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let zero = S::zero();
        let check = |ok: bool, field: &str, msg: &str| -> Result<()> {
            if ok {
                Ok(())
            } else {
                Err(Error::Config {
                    field: field.into(),
                    msg: msg.into(),
                })
            }
        };
        check(self.b_min > zero, "b_min", "must be > 0")?;
        check(self.b_min <= self.b_max, "b_max", "must satisfy b_min <= b_max")?;
        check(self.a_max > zero, "a_max", "must be > 0")?;
        check(self.v_min >= zero, "v_min", "must be >= 0")?;
        check(self.v_min <= self.v_max, "v_max", "must satisfy v_min <= v_max")?;
        check(self.x_tgt > zero, "x_tgt", "must be > 0")?;
        check(self.t_lc >= 1, "t_lc", "must be >= 1")?;
        check(self.dt > zero, "dt", "must be > 0")?;
        Ok(())
    }
}

/// Longitudinal state of the subject vehicle at one cycle boundary.
#[derive(Clone, Debug, PartialEq)]
pub struct VehicleKinematics<S: Scalar> {
    pub x: S,
    pub v: S,
    /// Acceleration commanded over the cycle that produced this state.
    pub a_cmd: S,
}

impl<S: Scalar> VehicleKinematics<S> {
    pub fn new(x: S, v: S) -> Self {
        Self {
            x,
            v,
            a_cmd: S::zero(),
        }
    }
}

/// Set of lanes a vehicle occupies; lanes are the discrete set {1, 2, 3}.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Hash)]
pub struct LaneSet(u8);

impl LaneSet {
    pub const EMPTY: LaneSet = LaneSet(0);

    pub fn single(lane: u8) -> Self {
        assert!((1..=3).contains(&lane));
        LaneSet(1 << (lane - 1))
    }

    pub fn of(lanes: &[u8]) -> Self {
        let mut s = 0u8;
        for &l in lanes {
            assert!((1..=3).contains(&l));
            s |= 1 << (l - 1);
        }
        LaneSet(s)
    }

    pub fn contains(&self, lane: u8) -> bool {
        (1..=3).contains(&lane) && self.0 & (1 << (lane - 1)) != 0
    }

    pub fn is_empty(&self) -> bool {
        self.0 == 0
    }

    pub fn intersects(&self, other: LaneSet) -> bool {
        self.0 & other.0 != 0
    }

    pub fn lanes(&self) -> Vec<u8> {
        (1..=3).filter(|l| self.contains(*l)).collect()
    }
}

impl fmt::Display for LaneSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let lanes: Vec<String> = self.lanes().iter().map(|l| l.to_string()).collect();
        write!(f, "{{{}}}", lanes.join(","))
    }
}

/// SV lane occupancy as a function of lane-change progress: source lane
/// before the change starts, both lanes while it runs, target lane once
/// `t_lce` reaches `t_lc`.
pub fn sv_lanes_during_change(t_lce: u32, t_lc: u32) -> LaneSet {
    if t_lce == 0 {
        LaneSet::single(2)
    } else if t_lce >= t_lc {
        LaneSet::single(3)
    } else {
        LaneSet::of(&[2, 3])
    }
}

/// A principal other vehicle. POVs run at constant velocity in fixed lanes.
#[derive(Clone, Debug, PartialEq)]
pub struct PovState<S: Scalar> {
    pub id: u8,
    pub x: S,
    pub v: S,
    pub a: S,
    pub lanes: LaneSet,
}

impl<S: Scalar> PovState<S> {
    /// POV in its canonical lane per the environment assumption:
    /// POV1 and POV2 in lane 2, POV3 in lane 1.
    pub fn canonical(id: u8, x: S, v: S) -> Self {
        let lanes = match id {
            1 | 2 => LaneSet::single(2),
            3 => LaneSet::single(1),
            _ => panic!("POV id must be 1, 2 or 3"),
        };
        Self {
            id,
            x,
            v,
            a: S::zero(),
            lanes,
        }
    }
}

/// Which controller is driving.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Ctrl {
    Ac,
    Bc,
}

impl fmt::Display for Ctrl {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Ctrl::Ac => write!(f, "AC"),
            Ctrl::Bc => write!(f, "BC"),
        }
    }
}

/// Remaining proper-response schedule of the baseline controller.
///
/// Times are in the same time units as `dt`; with the default `dt = 1` they
/// are cycle counts. `t_cruise > 0` implies `t_brake > 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct BcSchedule<S: Scalar> {
    pub t_accel: S,
    pub t_cruise: S,
    pub t_brake: S,
    /// Identifier of the proper response selected at BC activation;
    /// `None` when the BC holds without an active response.
    pub last_response_id: Option<ResponseId>,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum ResponseId {
    S1,
    S2,
    S3,
    S4,
}

impl fmt::Display for ResponseId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ResponseId::S1 => write!(f, "S1"),
            ResponseId::S2 => write!(f, "S2"),
            ResponseId::S3 => write!(f, "S3"),
            ResponseId::S4 => write!(f, "S4"),
        }
    }
}

impl<S: Scalar> BcSchedule<S> {
    pub fn empty() -> Self {
        Self {
            t_accel: S::zero(),
            t_cruise: S::zero(),
            t_brake: S::zero(),
            last_response_id: None,
        }
    }

    pub fn is_exhausted(&self) -> bool {
        self.t_accel.is_zero() && self.t_cruise.is_zero() && self.t_brake.is_zero()
    }
}

/// One snapshot of the world, taken at a cycle boundary.
#[derive(Clone, Debug, PartialEq)]
pub struct WorldState<S: Scalar> {
    pub sv: VehicleKinematics<S>,
    pub povs: Vec<PovState<S>>,
    /// Lane set of the SV.
    pub lanes: LaneSet,
    /// Elapsed lane-change time (cycles), capped at `t_lc`.
    pub t_lce: u32,
    pub ctrl: Ctrl,
    /// SV velocity at the last switch to the BC.
    pub v_bc0: S,
    pub plan: BcSchedule<S>,
}

impl<S: Scalar> WorldState<S> {
    pub fn new_s4(x: S, v: S) -> Self {
        Self {
            sv: VehicleKinematics::new(x, v),
            povs: Vec::new(),
            lanes: LaneSet::single(3),
            t_lce: 0,
            ctrl: Ctrl::Ac,
            v_bc0: S::zero(),
            plan: BcSchedule::empty(),
        }
    }

    pub fn new_s3(x: S, v: S, x2: S, v2: S) -> Self {
        Self {
            sv: VehicleKinematics::new(x, v),
            povs: vec![PovState::canonical(2, x2, v2)],
            lanes: LaneSet::single(2),
            t_lce: 0,
            ctrl: Ctrl::Ac,
            v_bc0: S::zero(),
            plan: BcSchedule::empty(),
        }
    }

    pub fn pov(&self, id: u8) -> Option<&PovState<S>> {
        self.povs.iter().find(|p| p.id == id)
    }

    pub fn pov2(&self) -> Result<&PovState<S>> {
        self.pov(2)
            .ok_or_else(|| Error::Model("POV2 required but not present".into()))
    }
}

/// Subscenarios of the pull-over scenario.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Hash)]
pub enum Subscenario {
    S1,
    S2,
    S3,
    S4,
}

impl fmt::Display for Subscenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Subscenario::S1 => write!(f, "S1"),
            Subscenario::S2 => write!(f, "S2"),
            Subscenario::S3 => write!(f, "S3"),
            Subscenario::S4 => write!(f, "S4"),
        }
    }
}

impl std::str::FromStr for Subscenario {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "S1" => Ok(Subscenario::S1),
            "S2" => Ok(Subscenario::S2),
            "S3" => Ok(Subscenario::S3),
            "S4" => Ok(Subscenario::S4),
            other => Err(Error::Feature(format!("unknown subscenario `{other}`"))),
        }
    }
}
