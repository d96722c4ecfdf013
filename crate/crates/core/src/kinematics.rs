//! Closed-form longitudinal kinematics for unit-cycle steps and
//! max-acceleration lookahead.
//!
//! All operations are pure; the lookahead deliberately does not clamp the
//! velocity at `v_max`, which over-approximates the reachable speed.

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::world::{ScenarioConstants, VehicleKinematics};

/// Constant-acceleration step: `(x + v*dt + a*dt^2/2, v + a*dt)`. No clamping.
pub fn step_const_accel<S: Scalar>(x: &S, v: &S, a: &S, dt: &S) -> Result<(S, S)> {
    if *dt < S::zero() {
        return Err(Error::Domain("step_const_accel: dt must be >= 0".into()));
    }
    let x_next =
        x.clone() + v.clone() * dt.clone() + (a.clone() * dt.clone() * dt.clone()).half();
    let v_next = v.clone() + a.clone() * dt.clone();
    Ok((x_next, v_next))
}

/// `k`-cycle lookahead under maximum acceleration, `k` in {0, 1, 2}:
/// `(x + k*v*dt + a_max*(k*dt)^2/2, v + k*a_max*dt)`.
pub fn extrapolate_max_accel<S: Scalar>(
    x: &S,
    v: &S,
    consts: &ScenarioConstants<S>,
    k: u32,
) -> Result<(S, S)> {
    if k > 2 {
        return Err(Error::Domain(format!(
            "extrapolate_max_accel: k must be 0, 1 or 2 (got {k})"
        )));
    }
    let kdt = S::from_int(k as i64) * consts.dt.clone();
    step_const_accel(x, v, &consts.a_max, &kdt)
}

/// Physical admissibility of a proposed next state, per the one-cycle
/// reachability bounds:
/// `x <= p_x <= x + v*dt + a_max*dt^2/2` and `v - b_max*dt <= p_v <= v + a_max*dt`.
pub fn admissible_next<S: Scalar>(
    cur: &VehicleKinematics<S>,
    p_x: &S,
    p_v: &S,
    consts: &ScenarioConstants<S>,
) -> bool {
    let dt = &consts.dt;
    let x_hi = cur.x.clone()
        + cur.v.clone() * dt.clone()
        + (consts.a_max.clone() * dt.clone() * dt.clone()).half();
    let v_lo = cur.v.clone() - consts.b_max.clone() * dt.clone();
    let v_hi = cur.v.clone() + consts.a_max.clone() * dt.clone();
    cur.x <= *p_x && *p_x <= x_hi && v_lo <= *p_v && *p_v <= v_hi
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::Rat;
    use crate::world::ScenarioConstants;
    use proptest::prelude::*;

    fn r(n: i64, d: i64) -> Rat {
        Rat::from_ratio(n, d)
    }

    fn consts() -> ScenarioConstants<Rat> {
        ScenarioConstants::defaults()
    }

    #[test]
    fn step_examples() {
        // direct closed-form evaluation
        let (x, v) = step_const_accel(&r(10, 1), &r(5, 1), &r(1, 1), &r(1, 1)).unwrap();
        assert_eq!((x, v), (r(31, 2), r(6, 1)));
        // zero-duration identity
        let (x, v) = step_const_accel(&r(10, 1), &r(5, 1), &r(0, 1), &r(0, 1)).unwrap();
        assert_eq!((x, v), (r(10, 1), r(5, 1)));
        // braking to standstill: distance v^2/(2b) = 25
        let (x, v) = step_const_accel(&r(0, 1), &r(10, 1), &r(-2, 1), &r(5, 1)).unwrap();
        assert_eq!((x, v), (r(25, 1), r(0, 1)));
    }

    #[test]
    fn step_rejects_negative_duration() {
        assert!(step_const_accel(&r(0, 1), &r(1, 1), &r(0, 1), &r(-1, 1)).is_err());
    }

    #[test]
    fn extrapolate_examples() {
        let c = consts();
        let (x, v) = extrapolate_max_accel(&r(10, 1), &r(5, 1), &c, 2).unwrap();
        assert_eq!((x, v), (r(22, 1), r(7, 1)));
        let (x, v) = extrapolate_max_accel(&r(10, 1), &r(5, 1), &c, 0).unwrap();
        assert_eq!((x, v), (r(10, 1), r(5, 1)));
        let (x, v) = extrapolate_max_accel(&r(0, 1), &r(10, 1), &c, 1).unwrap();
        assert_eq!((x, v), (r(21, 2), r(11, 1)));
        assert!(extrapolate_max_accel(&r(0, 1), &r(0, 1), &c, 3).is_err());
    }

    #[test]
    fn admissible_examples() {
        let c = consts();
        let cur = VehicleKinematics::new(r(0, 1), r(10, 1));
        assert!(admissible_next(&cur, &r(10, 1), &r(10, 1), &c));
        assert!(admissible_next(&cur, &r(0, 1), &r(10, 1), &c));
        assert!(!admissible_next(&cur, &r(12, 1), &r(11, 1), &c));
    }

    proptest! {
        // Stepping dt then dt' equals stepping dt + dt' for the same a.
        #[test]
        fn step_composes(
            x in -200i64..200, v in 0i64..40, a in -8i64..4,
            d1 in 0i64..64, d2 in 0i64..64,
        ) {
            let (x, v, a) = (r(x, 1), r(v, 2), r(a, 2));
            let (d1, d2) = (r(d1, 8), r(d2, 8));
            let (x1, v1) = step_const_accel(&x, &v, &a, &d1).unwrap();
            let (x2, v2) = step_const_accel(&x1, &v1, &a, &d2).unwrap();
            let (xd, vd) = step_const_accel(&x, &v, &a, &(d1 + d2)).unwrap();
            prop_assert_eq!((x2, v2), (xd, vd));
        }

        // k-cycle lookahead equals k repeated max-accel steps.
        #[test]
        fn extrapolate_is_iterated_step(x in 0i64..200, v in 0i64..40, k in 0u32..3) {
            let c = consts();
            let (x, v) = (r(x, 2), r(v, 2));
            let direct = extrapolate_max_accel(&x, &v, &c, k).unwrap();
            let mut cur = (x, v);
            for _ in 0..k {
                cur = step_const_accel(&cur.0, &cur.1, &c.a_max, &c.dt).unwrap();
            }
            prop_assert_eq!(direct, cur);
        }

        // Any step with a in [-b_max, a_max] and nonnegative end velocity
        // lands inside the admissible box.
        #[test]
        fn step_is_admissible(x in 0i64..200, v in 0i64..40, a_num in -16i64..=4) {
            let c = consts();
            let (x, v, a) = (r(x, 2), r(v, 2), r(a_num, 4));
            let (p_x, p_v) = step_const_accel(&x, &v, &a, &c.dt).unwrap();
            prop_assume!(p_v >= Rat::from_int(0));
            let cur = VehicleKinematics::new(x, v);
            prop_assert!(admissible_next(&cur, &p_x, &p_v, &c));
        }
    }
}
