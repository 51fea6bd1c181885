//! Time-optimal finger trajectories on straight joint-space segments.
//!
//! All joints of a finger share one normalized trapezoidal profile `s(t)`, scaled by
//! the largest joint displacement, so the finger follows the straight segment from
//! start to goal and the slowest joint sets the duration. Equalizing durations dilates
//! `s` in time, which only lowers velocities and accelerations.

use serde::{Deserialize, Serialize};

use crate::kinematics::FINGER_DOF;
use crate::{Error, Result, CONTROL_RATE_HZ};

pub type FingerJoints = [f64; FINGER_DOF];

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrajectoryLimits {
    /// Per-joint velocity bound (rad/s).
    pub v_max: f64,
    /// Per-joint acceleration bound (rad/s²).
    pub a_max: f64,
}

impl Default for TrajectoryLimits {
    fn default() -> Self {
        TrajectoryLimits { v_max: 1.0, a_max: 4.0 }
    }
}

impl TrajectoryLimits {
    pub fn validate(&self) -> Result<()> {
        if !(self.v_max > 0.0 && self.v_max.is_finite() && self.a_max > 0.0 && self.a_max.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "trajectory limits must be positive and finite, got v_max {} a_max {}",
                self.v_max, self.a_max
            )));
        }
        Ok(())
    }

    /// Largest joint motion allowed in one control tick.
    pub fn per_tick_step(&self) -> f64 {
        self.v_max / CONTROL_RATE_HZ
    }
}

/// Normalized rest-to-rest profile `s: [0, duration] -> [0, 1]`.
#[derive(Clone, Copy, Debug, PartialEq)]
struct Profile {
    duration: f64,
    accel_time: f64,
    peak_rate: f64,
}

impl Profile {
    const STILL: Profile = Profile {
        duration: 0.0,
        accel_time: 0.0,
        peak_rate: 0.0,
    };

    /// Minimum-time profile for a unit path with rate bound `v` and acceleration bound `a`.
    fn minimal(v: f64, a: f64) -> Self {
        if v * v / a <= 1.0 {
            let accel_time = v / a;
            Profile {
                duration: 1.0 / v + accel_time,
                accel_time,
                peak_rate: v,
            }
        } else {
            let accel_time = (1.0 / a).sqrt();
            Profile {
                duration: 2.0 * accel_time,
                accel_time,
                peak_rate: a * accel_time,
            }
        }
    }

    fn dilated(&self, duration: f64) -> Self {
        if self.duration == 0.0 {
            return Profile::STILL;
        }
        let c = duration / self.duration;
        Profile {
            duration,
            accel_time: self.accel_time * c,
            peak_rate: self.peak_rate / c,
        }
    }

    fn at(&self, t: f64) -> f64 {
        if self.duration == 0.0 || t >= self.duration {
            return 1.0;
        }
        if t <= 0.0 {
            return 0.0;
        }
        let (ta, v) = (self.accel_time, self.peak_rate);
        let accel = v / ta;
        if t < ta {
            0.5 * accel * t * t
        } else if t <= self.duration - ta {
            0.5 * v * ta + v * (t - ta)
        } else {
            let r = self.duration - t;
            1.0 - 0.5 * accel * r * r
        }
    }
}

/// Joint positions of one finger sampled at the control rate.
#[derive(Clone, Debug, PartialEq)]
pub struct FingerTrajectory {
    pub finger: usize,
    pub start: FingerJoints,
    pub goal: FingerJoints,
    /// Seconds; the continuous profile length.
    pub duration: f64,
    /// `samples[0] == start`, `samples[K] == goal`.
    pub samples: Vec<FingerJoints>,
    profile: Profile,
}

/// Number of ticks needed to cover `duration`.
fn tick_count(duration: f64) -> usize {
    (duration * CONTROL_RATE_HZ - 1e-9).ceil().max(0.0) as usize
}

impl FingerTrajectory {
    fn sampled(finger: usize, start: FingerJoints, goal: FingerJoints, profile: Profile, ticks: usize) -> Self {
        let samples = (0..=ticks)
            .map(|k| {
                if k == ticks {
                    return goal;
                }
                let s = profile.at(k as f64 / CONTROL_RATE_HZ);
                std::array::from_fn(|j| start[j] + s * (goal[j] - start[j]))
            })
            .collect();
        FingerTrajectory {
            finger,
            start,
            goal,
            duration: profile.duration,
            samples,
            profile,
        }
    }

    /// Wraps an explicit tick-sampled path (not time-scalable by [`equalize_durations`]).
    pub(crate) fn from_samples(finger: usize, samples: Vec<FingerJoints>) -> Self {
        assert!(!samples.is_empty(), "a trajectory needs at least its start sample");
        let duration = (samples.len() - 1) as f64 / CONTROL_RATE_HZ;
        FingerTrajectory {
            finger,
            start: samples[0],
            goal: samples[samples.len() - 1],
            duration,
            samples,
            profile: Profile { duration, ..Profile::STILL },
        }
    }

    /// The plan length `K` in ticks.
    pub fn ticks(&self) -> usize {
        self.samples.len() - 1
    }

    /// Commanded increment for tick `k` (1-based), zero outside the plan.
    pub fn delta(&self, k: usize) -> FingerJoints {
        if k == 0 || k > self.ticks() {
            return [0.0; FINGER_DOF];
        }
        std::array::from_fn(|j| self.samples[k][j] - self.samples[k - 1][j])
    }
}

/// Minimum-time straight-line trajectory from `start` to `goal`.
pub fn plan_finger_trajectory(
    finger: usize,
    start: FingerJoints,
    goal: FingerJoints,
    limits: &TrajectoryLimits,
) -> Result<FingerTrajectory> {
    limits.validate()?;
    if start.iter().chain(goal.iter()).any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("trajectory endpoints must be finite".into()));
    }
    let span = (0..FINGER_DOF).map(|j| (goal[j] - start[j]).abs()).fold(0.0, f64::max);
    if span == 0.0 {
        return Ok(FingerTrajectory::sampled(finger, start, goal, Profile::STILL, 0));
    }
    let profile = Profile::minimal(limits.v_max / span, limits.a_max / span);
    Ok(FingerTrajectory::sampled(finger, start, goal, profile, tick_count(profile.duration)))
}

/// Dilates every trajectory to the longest duration so all fingers arrive together.
pub fn equalize_durations(trajectories: &[FingerTrajectory]) -> Vec<FingerTrajectory> {
    let longest = trajectories.iter().map(|t| t.duration).fold(0.0, f64::max);
    let ticks = tick_count(longest);
    trajectories
        .iter()
        .map(|t| {
            let profile = if t.duration == longest { t.profile } else { t.profile.dilated(longest) };
            let mut out = FingerTrajectory::sampled(t.finger, t.start, t.goal, profile, ticks);
            out.duration = longest;
            out
        })
        .collect()
}

/// Minimum time for a single rest-to-rest move of `distance` under `limits`.
pub fn minimal_time(distance: f64, limits: &TrajectoryLimits) -> f64 {
    let d = distance.abs();
    if d == 0.0 {
        return 0.0;
    }
    if d >= limits.v_max * limits.v_max / limits.a_max {
        d / limits.v_max + limits.v_max / limits.a_max
    } else {
        2.0 * (d / limits.a_max).sqrt()
    }
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use super::*;

    const DT: f64 = 1.0 / CONTROL_RATE_HZ;

    fn one_joint(delta: f64, v_max: f64, a_max: f64) -> FingerTrajectory {
        plan_finger_trajectory(0, [0.0; 4], [delta, 0.0, 0.0, 0.0], &TrajectoryLimits { v_max, a_max }).unwrap()
    }

    fn check_limits(t: &FingerTrajectory, limits: &TrajectoryLimits) {
        let s = &t.samples;
        for k in 1..s.len() {
            for j in 0..4 {
                let v = (s[k][j] - s[k - 1][j]) / DT;
                assert!(v.abs() <= limits.v_max + 1e-6, "v {v} at tick {k}");
            }
        }
        // Rest before the start and after the end.
        let at = |k: isize| -> FingerJoints {
            if k < 0 {
                s[0]
            } else if k as usize >= s.len() {
                s[s.len() - 1]
            } else {
                s[k as usize]
            }
        };
        for k in -1..=(s.len() as isize) {
            let (a, b, c) = (at(k - 1), at(k), at(k + 1));
            for j in 0..4 {
                let acc = (c[j] - 2.0 * b[j] + a[j]) / (DT * DT);
                assert!(acc.abs() <= limits.a_max + 1e-6, "a {acc} at tick {k}");
            }
        }
    }

    #[test]
    fn pure_cruise() {
        let t = one_joint(1.0, 1.0, 1e6);
        assert!((t.duration - 1.0).abs() <= DT);
        assert!(t.ticks().abs_diff(100) <= 1);
    }

    #[test]
    fn triangular_profile() {
        let t = one_joint(1.0, 2.0, 1.0);
        assert!((t.duration - 2.0).abs() < 1e-12);
        assert_eq!(t.ticks(), 200);
        assert!((t.samples[100][0] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn trapezoid_closed_form() {
        // Accelerate for 0.25 s, cruise, decelerate: 1/1 + 1/4.
        let t = one_joint(-1.0, 1.0, 4.0);
        assert!((t.duration - 1.25).abs() < 1e-12);
        assert!((t.duration - minimal_time(1.0, &TrajectoryLimits::default())).abs() < 1e-15);
        assert_eq!(t.samples.last().unwrap()[0], -1.0);
    }

    #[test]
    fn zero_displacement_is_a_single_sample() {
        let t = plan_finger_trajectory(2, [0.3; 4], [0.3; 4], &TrajectoryLimits::default()).unwrap();
        assert_eq!(t.duration, 0.0);
        assert_eq!(t.samples, vec![[0.3; 4]]);
        assert_eq!(t.ticks(), 0);
        assert_eq!(t.delta(1), [0.0; 4]);
    }

    #[test]
    fn bad_limits_are_rejected() {
        for (v, a) in [(0.0, 1.0), (1.0, -1.0), (f64::NAN, 1.0), (1.0, f64::INFINITY)] {
            assert!(plan_finger_trajectory(0, [0.0; 4], [1.0; 4], &TrajectoryLimits { v_max: v, a_max: a }).is_err());
        }
        assert!(plan_finger_trajectory(0, [f64::NAN; 4], [1.0; 4], &TrajectoryLimits::default()).is_err());
    }

    #[test]
    fn slowest_joint_sets_the_duration_and_all_joints_arrive_together() {
        let limits = TrajectoryLimits::default();
        let t = plan_finger_trajectory(1, [0.0, 0.1, 0.2, 0.3], [0.4, -0.9, 0.2, 0.5], &limits).unwrap();
        assert!((t.duration - minimal_time(1.0, &limits)).abs() < 1e-12);
        // Straight segment: every sample is start + s * (goal - start) with a common s.
        for q in &t.samples {
            let s = (q[1] - 0.1) / -1.0;
            assert!((q[0] - 0.4 * s).abs() < 1e-12);
            assert!((q[3] - (0.3 + 0.2 * s)).abs() < 1e-12);
            assert_eq!(q[2], 0.2);
        }
    }

    #[test]
    fn halving_the_duration_breaks_a_limit() {
        // The slowest joint's profile saturates a bound, so half the time needs twice
        // the peak velocity or four times the peak acceleration.
        let limits = TrajectoryLimits::default();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..100 {
            let goal: FingerJoints = std::array::from_fn(|_| rng.gen_range(-1.5..1.5));
            let t = plan_finger_trajectory(0, [0.0; 4], goal, &limits).unwrap();
            let span = goal.iter().fold(0.0f64, |m, g| m.max(g.abs()));
            let p = t.profile;
            let v_peak = p.peak_rate * span;
            let a_peak = p.peak_rate / p.accel_time * span;
            assert!((v_peak - limits.v_max).abs() < 1e-9 || (a_peak - limits.a_max).abs() < 1e-9);
            let half = p.dilated(p.duration / 2.0);
            let v2 = half.peak_rate * span;
            let a2 = half.peak_rate / half.accel_time * span;
            assert!(v2 > limits.v_max + 1e-9 || a2 > limits.a_max + 1e-9);
        }
    }

    #[test]
    fn equalize_stretches_to_the_longest() {
        let limits = TrajectoryLimits::default();
        let goals = [[0.5, 0.0, 0.0, 0.0], [1.5, 0.0, 0.0, 0.0], [0.2, 0.0, 0.0, 0.0], [0.0; 4]];
        let plans: Vec<_> = goals
            .iter()
            .enumerate()
            .map(|(i, g)| plan_finger_trajectory(i, [0.0; 4], *g, &limits).unwrap())
            .collect();
        let eq = equalize_durations(&plans);
        let longest = minimal_time(1.5, &limits);
        for (t, g) in eq.iter().zip(goals.iter()) {
            assert_eq!(t.duration, longest);
            assert_eq!(t.ticks(), eq[0].ticks());
            assert_eq!(t.samples[0], [0.0; 4]);
            assert_eq!(t.samples[t.ticks()], *g);
            check_limits(t, &limits);
        }
        assert_eq!(eq[1], plans[1]);
    }

    #[test]
    fn equalize_single_is_unchanged() {
        let t = one_joint(0.7, 1.0, 4.0);
        assert_eq!(equalize_durations(std::slice::from_ref(&t)), vec![t]);
    }

    #[test]
    fn equalize_known_durations() {
        // Distances whose minimal times are 1.0, 2.0, 0.5 and 2.0 s.
        let limits = TrajectoryLimits { v_max: 1.0, a_max: 4.0 };
        let d = |time: f64| time - 0.25;
        let plans: Vec<_> = [1.0, 2.0, 0.5, 2.0]
            .iter()
            .enumerate()
            .map(|(i, &time)| plan_finger_trajectory(i, [0.0; 4], [d(time), 0.0, 0.0, 0.0], &limits).unwrap())
            .collect();
        for (p, time) in plans.iter().zip([1.0, 2.0, 0.5, 2.0]) {
            assert!((p.duration - time).abs() < 1e-12);
        }
        assert!(equalize_durations(&plans).iter().all(|t| (t.duration - 2.0).abs() < 1e-12 && t.ticks() == 200));
    }

    proptest! {
        #[test]
        fn random_plans_respect_limits_and_endpoints(
            start in proptest::array::uniform4(-1.5f64..1.5),
            goal in proptest::array::uniform4(-1.5f64..1.5),
            v_max in 0.2f64..3.0,
            a_max in 0.5f64..20.0,
        ) {
            let limits = TrajectoryLimits { v_max, a_max };
            let t = plan_finger_trajectory(0, start, goal, &limits).unwrap();
            check_limits(&t, &limits);
            prop_assert_eq!(t.samples[0], start);
            prop_assert_eq!(t.samples[t.ticks()], goal);
            let sum: Vec<f64> = (0..4).map(|j| (1..=t.ticks()).map(|k| t.delta(k)[j]).sum::<f64>()).collect();
            for j in 0..4 {
                prop_assert!((start[j] + sum[j] - goal[j]).abs() < 1e-9);
            }
        }

        #[test]
        fn equalized_sets_keep_limits_and_endpoints(
            goals in proptest::collection::vec(proptest::array::uniform4(-1.5f64..1.5), 1..5),
        ) {
            let limits = TrajectoryLimits::default();
            let plans: Vec<_> = goals.iter().enumerate()
                .map(|(i, g)| plan_finger_trajectory(i, [0.1; 4], *g, &limits).unwrap())
                .collect();
            let eq = equalize_durations(&plans);
            let k = eq[0].ticks();
            for (t, g) in eq.iter().zip(&goals) {
                prop_assert_eq!(t.ticks(), k);
                prop_assert_eq!(t.samples[0], [0.1; 4]);
                for j in 0..4 {
                    prop_assert!((t.samples[k][j] - g[j]).abs() <= 1e-9);
                }
                check_limits(t, &limits);
            }
        }
    }
}
