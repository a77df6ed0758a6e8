//! Torque-limited pendulum swing-up (Pendulum-v1 dynamics).

use std::f64::consts::PI;

use super::{check_action, ActionSpace, Environment, StepResult, Task, TaskMetrics};
use crate::error::{Error, Result};
use crate::rng::SplitMix64;

pub const GRAVITY: f64 = 10.0;
pub const MASS: f64 = 1.0;
pub const LENGTH: f64 = 1.0;
pub const DT: f64 = 0.05;
pub const MAX_SPEED: f64 = 8.0;
pub const MAX_TORQUE: f64 = 2.0;
pub const HORIZON: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PendulumState {
    /// Radians in `[-pi, pi]`, zero upright.
    pub theta: f64,
    pub theta_dot: f64,
}

impl PendulumState {
    /// `(cos theta, sin theta, theta_dot)`.
    pub fn observation(&self) -> Vec<f64> {
        vec![self.theta.cos(), self.theta.sin(), self.theta_dot]
    }
}

/// Wrap an angle into `[-pi, pi)`.
pub fn wrap_angle(x: f64) -> f64 {
    (x + PI).rem_euclid(2.0 * PI) - PI
}

pub fn pendulum_reset(seed: u64) -> PendulumState {
    let mut rng = SplitMix64::new(seed);
    let theta = rng.uniform(-PI, PI);
    let theta_dot = rng.uniform(-1.0, 1.0);
    PendulumState { theta, theta_dot }
}

/// One Euler step. Returns the next state and the raw reward
/// `-(theta^2 + 0.1 theta_dot^2 + 0.001 u^2)` of the pre-step state.
pub fn pendulum_step(s: PendulumState, torque: f64) -> Result<(PendulumState, f64)> {
    if !torque.is_finite() {
        return Err(Error::contract(format!("non-finite torque {torque}")));
    }
    let u = torque.clamp(-MAX_TORQUE, MAX_TORQUE);
    let theta_n = wrap_angle(s.theta);
    let reward = -(theta_n * theta_n + 0.1 * s.theta_dot * s.theta_dot + 0.001 * u * u);

    let accel = 3.0 * GRAVITY / (2.0 * LENGTH) * s.theta.sin() + 3.0 / (MASS * LENGTH * LENGTH) * u;
    let theta_dot = (s.theta_dot + accel * DT).clamp(-MAX_SPEED, MAX_SPEED);
    let theta = wrap_angle(s.theta + theta_dot * DT);
    Ok((PendulumState { theta, theta_dot }, reward))
}

/// Mechanical energy per unit mass of a uniform rod, zero at upright rest.
pub fn energy(s: &PendulumState) -> f64 {
    // I = m l^2 / 3, centre of mass at l / 2.
    0.5 * (MASS * LENGTH * LENGTH / 3.0) * s.theta_dot * s.theta_dot
        + MASS * GRAVITY * (LENGTH / 2.0) * (s.theta.cos() - 1.0)
}

#[derive(Debug, Clone)]
pub struct PendulumEnv {
    state: PendulumState,
    t: usize,
}

impl Default for PendulumEnv {
    fn default() -> Self {
        Self::new()
    }
}

impl PendulumEnv {
    pub fn new() -> Self {
        Self {
            state: PendulumState {
                theta: 0.0,
                theta_dot: 0.0,
            },
            t: 0,
        }
    }

    pub fn state(&self) -> PendulumState {
        self.state
    }

    /// Start an episode from a chosen state instead of a random one.
    pub fn reset_to(&mut self, state: PendulumState) -> Vec<f64> {
        self.state = state;
        self.t = 0;
        state.observation()
    }
}

impl Environment for PendulumEnv {
    fn task(&self) -> Task {
        Task::Pendulum
    }

    fn obs_dim(&self) -> usize {
        3
    }

    fn action_space(&self) -> ActionSpace {
        ActionSpace::uniform(1, -MAX_TORQUE, MAX_TORQUE)
    }

    fn horizon(&self) -> usize {
        HORIZON
    }

    fn reset(&mut self, seed: u64) -> Result<Vec<f64>> {
        Ok(self.reset_to(pendulum_reset(seed)))
    }

    fn step(&mut self, action: &[f64]) -> Result<StepResult> {
        check_action(action, 1)?;
        let pre = self.state;
        let (next, raw_reward) = pendulum_step(pre, action[0])?;
        self.state = next;
        self.t += 1;
        Ok(StepResult {
            observation: next.observation(),
            raw_reward,
            semantic_reward: None,
            sentence: None,
            done: self.t >= HORIZON,
            metrics: TaskMetrics::Pendulum {
                theta: wrap_angle(pre.theta),
                theta_dot: pre.theta_dot,
            },
            diagnostic: None,
        })
    }

    fn metrics(&self) -> TaskMetrics {
        TaskMetrics::Pendulum {
            theta: wrap_angle(self.state.theta),
            theta_dot: self.state.theta_dot,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn equilibrium_is_fixed() {
        let s = PendulumState { theta: 0.0, theta_dot: 0.0 };
        let (next, r) = pendulum_step(s, 0.0).unwrap();
        assert_eq!(next, s);
        assert_eq!(r, 0.0);
    }

    #[test]
    fn upside_down_rest_reward() {
        let s = PendulumState { theta: PI, theta_dot: 0.0 };
        let (_, r) = pendulum_step(s, 0.0).unwrap();
        assert!((r + PI * PI).abs() < 1e-12);
    }

    #[test]
    fn hand_evaluated_step() {
        let s = PendulumState { theta: 0.1, theta_dot: 0.5 };
        let (next, _) = pendulum_step(s, 1.0).unwrap();
        let dot = 0.5 + (15.0 * 0.1f64.sin() + 3.0) * 0.05;
        assert!((next.theta_dot - dot).abs() < 1e-15);
        assert!((next.theta - (0.1 + dot * 0.05)).abs() < 1e-15);
    }

    #[test]
    fn torque_is_clamped_and_checked() {
        let s = PendulumState { theta: 0.3, theta_dot: -0.2 };
        assert_eq!(pendulum_step(s, 50.0).unwrap(), pendulum_step(s, 2.0).unwrap());
        assert!(pendulum_step(s, f64::NAN).is_err());
    }

    #[test]
    fn reset_is_deterministic_and_bounded() {
        assert_eq!(pendulum_reset(42), pendulum_reset(42));
        let n = 10_000;
        let mut mean = 0.0;
        for seed in 0..n {
            let s = pendulum_reset(seed);
            assert!((-PI..=PI).contains(&s.theta));
            assert!((-1.0..=1.0).contains(&s.theta_dot));
            mean += s.theta / n as f64;
        }
        assert!(mean.abs() < 0.1, "mean theta {mean}");
    }

    #[test]
    fn wrap_angle_range() {
        for k in -20..20 {
            let x = k as f64 * 0.77;
            let w = wrap_angle(x);
            assert!((-PI..PI).contains(&w));
            assert!(((x - w) / (2.0 * PI)).fract().abs() < 1e-9 || ((x - w) / (2.0 * PI)).fract().abs() > 1.0 - 1e-9);
        }
    }

    #[test]
    fn episode_ends_at_horizon() {
        let mut env = PendulumEnv::new();
        env.reset(1).unwrap();
        for t in 1..=HORIZON {
            let r = env.step(&[0.0]).unwrap();
            assert_eq!(r.done, t == HORIZON);
            assert_eq!(r.observation.len(), 3);
        }
    }

    #[test]
    fn braking_torque_dissipates_energy() {
        for (theta, dot) in [(0.05, 0.3), (-0.1, -0.2), (0.02, -0.4)] {
            let mut s = PendulumState { theta, theta_dot: dot };
            let mut e = energy(&s);
            for _ in 0..20 {
                if s.theta_dot == 0.0 {
                    break;
                }
                let u = -s.theta_dot.signum() * MAX_TORQUE;
                let (next, _) = pendulum_step(s, u).unwrap();
                // Stop once the brake would reverse the motion.
                if next.theta_dot.signum() != s.theta_dot.signum() {
                    break;
                }
                let e_next = energy(&next);
                assert!(e_next < e, "energy rose from {e} to {e_next}");
                s = next;
                e = e_next;
            }
        }
    }
}
