//! Deterministic cart-pole environment (classic control task: balance a pole
//! on a force-controlled cart). Dynamics, constants and termination
//! thresholds follow the canonical v0 environment; everything is kept in the
//! config so runs are auditable.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::seed::rng_for;

pub const ACTION_LEFT: usize = 0;
pub const ACTION_RIGHT: usize = 1;
pub const NUM_ACTIONS: usize = 2;

#[derive(Clone, Copy, Debug)]
pub struct CartPoleConfig<S: Scalar> {
    pub gravity: S,
    pub cart_mass: S,
    pub pole_mass: S,
    /// Half the pole length, as in the reference implementation.
    pub pole_half_length: S,
    pub force_mag: S,
    /// Integration time step (seconds).
    pub tau: S,
    pub x_threshold: S,
    pub theta_threshold: S,
    pub max_steps: u64,
    /// Initial state components are drawn uniformly from [-init_range, init_range].
    pub init_range: S,
}

impl<S: Scalar> Default for CartPoleConfig<S> {
    fn default() -> Self {
        CartPoleConfig {
            gravity: S::from_f(9.8),
            cart_mass: S::one(),
            pole_mass: S::from_f(0.1),
            pole_half_length: S::from_f(0.5),
            force_mag: S::from_f(10.0),
            tau: S::from_f(0.02),
            x_threshold: S::from_f(2.4),
            theta_threshold: S::from_f(12.0 * std::f64::consts::PI / 180.0),
            max_steps: 200,
            init_range: S::from_f(0.05),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CartPoleState<S: Scalar> {
    pub x: S,
    pub x_dot: S,
    pub theta: S,
    pub theta_dot: S,
    pub steps_elapsed: u64,
}

impl<S: Scalar> CartPoleState<S> {
    pub fn observation(&self) -> [S; 4] {
        [self.x, self.x_dot, self.theta, self.theta_dot]
    }
}

#[derive(Clone, Debug)]
pub struct CartPole<S: Scalar> {
    cfg: CartPoleConfig<S>,
    state: CartPoleState<S>,
    done: bool,
    rng: ChaCha8Rng,
}

impl<S: Scalar> CartPole<S> {
    pub fn new(cfg: CartPoleConfig<S>, seed: u64) -> Self {
        let mut env = CartPole {
            cfg,
            state: CartPoleState {
                x: S::zero(),
                x_dot: S::zero(),
                theta: S::zero(),
                theta_dot: S::zero(),
                steps_elapsed: 0,
            },
            done: true,
            rng: rng_for(seed, "cartpole"),
        };
        env.reset();
        env
    }

    pub fn config(&self) -> &CartPoleConfig<S> {
        &self.cfg
    }

    pub fn state(&self) -> &CartPoleState<S> {
        &self.state
    }

    pub fn is_done(&self) -> bool {
        self.done
    }

    /// Start a new episode with each state component drawn uniformly from
    /// [-init_range, init_range].
    pub fn reset(&mut self) -> CartPoleState<S> {
        let r = self.cfg.init_range.to_f();
        let mut draw = || S::from_f(self.rng.gen_range(-r..r));
        self.state = CartPoleState {
            x: draw(),
            x_dot: draw(),
            theta: draw(),
            theta_dot: draw(),
            steps_elapsed: 0,
        };
        self.done = false;
        self.state
    }

    /// Advance one step under the given action (0 = push left, 1 = push
    /// right). Reward is 1.0 for every step taken.
    pub fn step(&mut self, action: usize) -> Result<(CartPoleState<S>, S, bool)> {
        if action >= NUM_ACTIONS {
            return Err(Error::invalid(format!("action must be 0 or 1, got {action}")));
        }
        let force = if action == ACTION_RIGHT {
            self.cfg.force_mag
        } else {
            -self.cfg.force_mag
        };
        self.step_with_force(force)
    }

    /// Integration core, also usable as a test hook (e.g. zero force to watch
    /// an unactuated pole fall).
    pub fn step_with_force(&mut self, force: S) -> Result<(CartPoleState<S>, S, bool)> {
        if self.done {
            return Err(Error::EpisodeFinished);
        }
        let cfg = &self.cfg;
        let total_mass = cfg.cart_mass + cfg.pole_mass;
        let pole_mass_length = cfg.pole_mass * cfg.pole_half_length;
        let s = &mut self.state;

        let cos = s.theta.cos();
        let sin = s.theta.sin();
        let temp = (force + pole_mass_length * s.theta_dot * s.theta_dot * sin) / total_mass;
        let four_thirds = S::from_f(4.0 / 3.0);
        let theta_acc = (cfg.gravity * sin - cos * temp)
            / (cfg.pole_half_length * (four_thirds - cfg.pole_mass * cos * cos / total_mass));
        let x_acc = temp - pole_mass_length * theta_acc * cos / total_mass;

        // Euler step in the reference order: positions advance on the old
        // velocities, then velocities on the fresh accelerations.
        s.x = s.x + cfg.tau * s.x_dot;
        s.x_dot = s.x_dot + cfg.tau * x_acc;
        s.theta = s.theta + cfg.tau * s.theta_dot;
        s.theta_dot = s.theta_dot + cfg.tau * theta_acc;
        s.steps_elapsed += 1;

        self.done = s.x.abs() > cfg.x_threshold
            || s.theta.abs() > cfg.theta_threshold
            || s.steps_elapsed >= cfg.max_steps;
        Ok((*self.state(), S::one(), self.done))
    }

    /// Test hook: place the environment in an exact state mid-episode.
    pub fn set_state(&mut self, state: CartPoleState<S>) {
        self.state = state;
        self.done = false;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn env(seed: u64) -> CartPole<f64> {
        CartPole::new(CartPoleConfig::default(), seed)
    }

    #[test]
    fn same_seed_same_initial_state() {
        let a = env(5).state().observation();
        let b = env(5).state().observation();
        assert_eq!(a, b);
        let c = env(6).state().observation();
        assert_ne!(a, c);
    }

    #[test]
    fn reset_range() {
        let mut e = env(0);
        for _ in 0..10_000 {
            let s = e.reset();
            for v in s.observation() {
                assert!((-0.05..=0.05).contains(&v), "component {v} out of range");
            }
        }
    }

    #[test]
    fn first_step_from_zero_state_matches_hand_evaluation() {
        // Hand-evaluated update with the stated constants: from the zero
        // state with a +10 N push,
        //   temp      = 10 / 1.1
        //   theta_acc = -temp / (0.5 * (4/3 - 0.1/1.1)) = -14.634146341463415
        //   x_acc     = temp + 0.05 * 14.634146341463415 / 1.1
        // so x_dot' = 0.02 * x_acc and theta_dot' = 0.02 * theta_acc.
        let mut e = env(0);
        e.set_state(CartPoleState {
            x: 0.0,
            x_dot: 0.0,
            theta: 0.0,
            theta_dot: 0.0,
            steps_elapsed: 0,
        });
        let (s, r, done) = e.step(ACTION_RIGHT).unwrap();
        assert_eq!(r, 1.0);
        assert!(!done);
        assert_eq!(s.x, 0.0);
        assert_eq!(s.theta, 0.0);
        assert!((s.x_dot - 0.19512195121951223).abs() < 1e-12, "x_dot {}", s.x_dot);
        assert!(
            (s.theta_dot - (-0.2926829268292683)).abs() < 1e-12,
            "theta_dot {}",
            s.theta_dot
        );
    }

    #[test]
    fn mirrored_actions_produce_mirrored_states() {
        let zero = CartPoleState {
            x: 0.0,
            x_dot: 0.0,
            theta: 0.0,
            theta_dot: 0.0,
            steps_elapsed: 0,
        };
        let mut left = env(0);
        left.set_state(zero);
        let mut right = env(0);
        right.set_state(zero);
        for _ in 0..50 {
            let (sl, _, dl) = left.step(ACTION_LEFT).unwrap();
            let (sr, _, dr) = right.step(ACTION_RIGHT).unwrap();
            assert_eq!(sl.x, -sr.x);
            assert_eq!(sl.x_dot, -sr.x_dot);
            assert_eq!(sl.theta, -sr.theta);
            assert_eq!(sl.theta_dot, -sr.theta_dot);
            assert_eq!(dl, dr);
            if dl {
                break;
            }
        }
    }

    #[test]
    fn episode_reward_equals_step_count() {
        let mut e = env(3);
        let mut total = 0.0;
        let mut steps = 0;
        loop {
            let (_, r, done) = e.step(steps % 2).unwrap();
            total += r;
            steps += 1;
            if done {
                break;
            }
        }
        assert_eq!(total, steps as f64);
        assert!(steps <= 200);
    }

    #[test]
    fn stepping_finished_episode_errors() {
        let mut e = env(1);
        loop {
            // alternate pushes fall over quickly
            let step = e.state().steps_elapsed as usize;
            if e.step(step % 2).unwrap().2 {
                break;
            }
        }
        assert!(matches!(e.step(0), Err(Error::EpisodeFinished)));
    }

    #[test]
    fn unforced_tilted_pole_falls_monotonically() {
        let mut e = env(0);
        e.set_state(CartPoleState {
            x: 0.0,
            x_dot: 0.0,
            theta: 0.05,
            theta_dot: 0.0,
            steps_elapsed: 0,
        });
        let mut last = 0.05;
        loop {
            let (s, _, done) = e.step_with_force(0.0).unwrap();
            assert!(s.theta.abs() >= last, "|theta| shrank: {} -> {}", last, s.theta.abs());
            last = s.theta.abs();
            if done {
                break;
            }
        }
        assert!(last > 12.0f64.to_radians());
    }

    #[test]
    fn fixed_action_sequence_is_bit_deterministic() {
        let run = |seed: u64| -> Vec<[f64; 4]> {
            let mut e = env(seed);
            let mut out = vec![e.state().observation()];
            for i in 0..100 {
                if e.is_done() {
                    e.reset();
                }
                let (s, _, _) = e.step((i / 3) % 2).unwrap();
                out.push(s.observation());
            }
            out
        };
        assert_eq!(run(9), run(9));
    }
}
