//! Training environments: the classic cart-pole balancing task and a
//! many-door bandit with a hidden jackpot.
//!
//! Both are episodic with a discrete action space and auto-terminate. All
//! dynamics are deterministic given the construction seed, so a full
//! trajectory replays exactly from (seed, action sequence).

use rand::distributions::Uniform;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct StepResult {
    pub observation: Vec<f64>,
    pub reward: f64,
    pub done: bool,
}

/// Cart-pole balancing with Euler integration.
///
/// State is (cart position, cart velocity, pole angle, pole angular
/// velocity). The episode ends when the cart leaves +-2.4, the pole tips
/// past 12 degrees, or 500 steps elapse; every step pays reward 1.
#[derive(Debug, Clone)]
pub struct CartPole {
    state: [f64; 4],
    steps: usize,
    done: bool,
    rng: ChaCha8Rng,
}

const GRAVITY: f64 = 9.8;
const MASS_CART: f64 = 1.0;
const MASS_POLE: f64 = 0.1;
const TOTAL_MASS: f64 = MASS_CART + MASS_POLE;
const POLE_HALF_LENGTH: f64 = 0.5;
const POLE_MASS_LENGTH: f64 = MASS_POLE * POLE_HALF_LENGTH;
const FORCE_MAG: f64 = 10.0;
const TAU: f64 = 0.02;
const X_THRESHOLD: f64 = 2.4;
const THETA_THRESHOLD: f64 = 12.0 * 2.0 * std::f64::consts::PI / 360.0;
pub const CARTPOLE_MAX_STEPS: usize = 500;

impl CartPole {
    pub fn new(seed: u64) -> Self {
        CartPole {
            state: [0.0; 4],
            steps: 0,
            done: true,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    fn reset(&mut self) -> Vec<f64> {
        let dist = Uniform::new_inclusive(-0.05, 0.05);
        for v in self.state.iter_mut() {
            *v = self.rng.sample(dist);
        }
        self.steps = 0;
        self.done = false;
        self.state.to_vec()
    }

    fn step(&mut self, action: usize) -> Result<StepResult> {
        if self.done {
            return Err(Error::EpisodeDone);
        }
        if action > 1 {
            return Err(Error::InvalidAction { action, space: 2 });
        }
        let [x, x_dot, theta, theta_dot] = self.state;
        let force = if action == 1 { FORCE_MAG } else { -FORCE_MAG };
        let cos_t = theta.cos();
        let sin_t = theta.sin();

        let temp = (force + POLE_MASS_LENGTH * theta_dot * theta_dot * sin_t) / TOTAL_MASS;
        let theta_acc = (GRAVITY * sin_t - cos_t * temp)
            / (POLE_HALF_LENGTH * (4.0 / 3.0 - MASS_POLE * cos_t * cos_t / TOTAL_MASS));
        let x_acc = temp - POLE_MASS_LENGTH * theta_acc * cos_t / TOTAL_MASS;

        // Euler update: positions advance with the *old* velocities.
        self.state = [
            x + TAU * x_dot,
            x_dot + TAU * x_acc,
            theta + TAU * theta_dot,
            theta_dot + TAU * theta_acc,
        ];
        self.steps += 1;

        let [nx, _, ntheta, _] = self.state;
        self.done = nx.abs() > X_THRESHOLD
            || ntheta.abs() > THETA_THRESHOLD
            || self.steps >= CARTPOLE_MAX_STEPS;

        Ok(StepResult {
            observation: self.state.to_vec(),
            reward: 1.0,
            done: self.done,
        })
    }

    #[cfg(test)]
    fn set_state(&mut self, state: [f64; 4]) {
        self.state = state;
        self.steps = 0;
        self.done = false;
    }
}

/// Bandit of `num_doors` doors, presented as an episode of fixed length.
///
/// The observation is the constant vector [1.0]; choosing door `i` pays the
/// base reward, the periodic reward on every `period`-th door (1-indexed),
/// or the jackpot on the last door. Rewards are deterministic.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DoorsSpec {
    pub num_doors: usize,
    pub base_reward: f64,
    pub periodic_reward: f64,
    pub period: usize,
    pub jackpot_reward: f64,
    pub episode_length: usize,
}

impl Default for DoorsSpec {
    fn default() -> Self {
        DoorsSpec {
            num_doors: 8,
            base_reward: 1.5,
            periodic_reward: 4.5,
            period: 3,
            jackpot_reward: 1000.0,
            episode_length: 16,
        }
    }
}

impl DoorsSpec {
    pub fn validate(&self) -> Result<()> {
        if self.num_doors == 0 {
            return Err(Error::invalid("doors: num_doors must be positive"));
        }
        if self.period == 0 {
            return Err(Error::invalid("doors: period must be positive"));
        }
        if self.episode_length == 0 {
            return Err(Error::invalid("doors: episode_length must be positive"));
        }
        if !(self.base_reward.is_finite()
            && self.periodic_reward.is_finite()
            && self.jackpot_reward.is_finite())
        {
            return Err(Error::invalid("doors: rewards must be finite"));
        }
        Ok(())
    }

    pub fn reward(&self, door: usize) -> f64 {
        if door == self.num_doors - 1 {
            self.jackpot_reward
        } else if (door + 1).is_multiple_of(self.period) {
            self.periodic_reward
        } else {
            self.base_reward
        }
    }
}

#[derive(Debug, Clone)]
pub struct Doors {
    spec: DoorsSpec,
    steps: usize,
    done: bool,
}

impl Doors {
    pub fn new(spec: DoorsSpec) -> Result<Self> {
        spec.validate()?;
        Ok(Doors {
            spec,
            steps: 0,
            done: true,
        })
    }

    fn reset(&mut self) -> Vec<f64> {
        self.steps = 0;
        self.done = false;
        vec![1.0]
    }

    fn step(&mut self, action: usize) -> Result<StepResult> {
        if self.done {
            return Err(Error::EpisodeDone);
        }
        if action >= self.spec.num_doors {
            return Err(Error::InvalidAction {
                action,
                space: self.spec.num_doors,
            });
        }
        self.steps += 1;
        self.done = self.steps >= self.spec.episode_length;
        Ok(StepResult {
            observation: vec![1.0],
            reward: self.spec.reward(action),
            done: self.done,
        })
    }
}

/// Closed set of supported environments behind one dispatch type. One
/// instance exists per worker, so the variant size imbalance stays.
#[derive(Debug, Clone)]
#[allow(clippy::large_enum_variant)]
pub enum Env {
    CartPole(CartPole),
    Doors(Doors),
}

impl Env {
    pub fn cartpole(seed: u64) -> Env {
        Env::CartPole(CartPole::new(seed))
    }

    pub fn doors(spec: DoorsSpec) -> Result<Env> {
        Ok(Env::Doors(Doors::new(spec)?))
    }

    pub fn obs_dim(&self) -> usize {
        match self {
            Env::CartPole(_) => 4,
            Env::Doors(_) => 1,
        }
    }

    pub fn action_dim(&self) -> usize {
        match self {
            Env::CartPole(_) => 2,
            Env::Doors(d) => d.spec.num_doors,
        }
    }

    pub fn max_episode_steps(&self) -> usize {
        match self {
            Env::CartPole(_) => CARTPOLE_MAX_STEPS,
            Env::Doors(d) => d.spec.episode_length,
        }
    }

    /// Starts a new episode and returns its first observation.
    pub fn reset(&mut self) -> Vec<f64> {
        match self {
            Env::CartPole(e) => e.reset(),
            Env::Doors(e) => e.reset(),
        }
    }

    /// Advances one step. Stepping a finished episode is an error until the
    /// next `reset`.
    pub fn step(&mut self, action: usize) -> Result<StepResult> {
        match self {
            Env::CartPole(e) => e.step(action),
            Env::Doors(e) => e.step(action),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn cartpole_step_from_origin_matches_hand_integration() {
        // From the zero state with a rightward push the accelerations are
        // theta_acc = -600/41 and x_acc = 400/41, so after one Euler step
        // only the velocities move: (0, 8/41, 0, -12/41).
        let mut env = CartPole::new(0);
        env.set_state([0.0; 4]);
        let r = env.step(1).unwrap();
        assert_eq!(r.observation[0], 0.0);
        assert!((r.observation[1] - 8.0 / 41.0).abs() < 1e-15);
        assert_eq!(r.observation[2], 0.0);
        assert!((r.observation[3] + 12.0 / 41.0).abs() < 1e-15);
        assert_eq!(r.reward, 1.0);
        assert!(!r.done);
    }

    #[test]
    fn cartpole_push_left_mirrors_push_right() {
        let mut env = CartPole::new(0);
        env.set_state([0.0; 4]);
        let r = env.step(0).unwrap();
        assert!((r.observation[1] + 8.0 / 41.0).abs() < 1e-15);
        assert!((r.observation[3] - 12.0 / 41.0).abs() < 1e-15);
    }

    #[test]
    fn cartpole_reset_is_seed_deterministic_and_bounded() {
        let mut a = CartPole::new(3);
        let mut b = CartPole::new(3);
        let mut c = CartPole::new(4);
        let oa = a.reset();
        let ob = b.reset();
        let oc = c.reset();
        assert_eq!(oa, ob);
        assert_ne!(oa, oc);
        assert!(oa.iter().all(|v| v.abs() <= 0.05));
    }

    #[test]
    fn cartpole_constant_push_tips_the_pole() {
        let mut env = Env::cartpole(11);
        env.reset();
        let mut steps = 0;
        loop {
            let r = env.step(1).unwrap();
            steps += 1;
            if r.done {
                break;
            }
            assert!(steps < CARTPOLE_MAX_STEPS, "pole never tipped");
        }
        assert!(steps < 100, "constant push should fail fast, took {steps}");
        assert!(env.step(1).is_err());
    }

    #[test]
    fn cartpole_caps_episode_at_500_steps() {
        // A PD rule on the pole angle balances indefinitely (the angle
        // dynamics do not depend on the cart position), so the episode must
        // end through the step cap.
        let mut env = CartPole::new(0);
        env.set_state([0.0; 4]);
        let mut obs = vec![0.0; 4];
        let mut steps = 0;
        let mut done = false;
        while !done {
            let action = if 3.0 * obs[2] + obs[3] > 0.0 { 1 } else { 0 };
            let r = env.step(action).unwrap();
            obs = r.observation;
            steps += 1;
            done = r.done;
        }
        assert!(obs[0].abs() <= X_THRESHOLD, "cart ran away at {}", obs[0]);
        assert_eq!(steps, CARTPOLE_MAX_STEPS);
    }

    #[test]
    fn cartpole_rejects_out_of_range_action() {
        let mut env = Env::cartpole(0);
        env.reset();
        assert!(matches!(
            env.step(2),
            Err(Error::InvalidAction {
                action: 2,
                space: 2
            })
        ));
    }

    #[test]
    fn doors_reward_table_with_defaults() {
        let spec = DoorsSpec::default();
        assert_eq!(spec.reward(0), 1.5);
        assert_eq!(spec.reward(1), 1.5);
        assert_eq!(spec.reward(2), 4.5);
        assert_eq!(spec.reward(3), 1.5);
        assert_eq!(spec.reward(4), 1.5);
        assert_eq!(spec.reward(5), 4.5);
        assert_eq!(spec.reward(6), 1.5);
        assert_eq!(spec.reward(7), 1000.0);
    }

    #[test]
    fn doors_episode_runs_exactly_episode_length_steps() {
        let mut env = Env::doors(DoorsSpec::default()).unwrap();
        let obs = env.reset();
        assert_eq!(obs, vec![1.0]);
        for t in 0..16 {
            let r = env.step(t % 8).unwrap();
            assert_eq!(r.observation, vec![1.0]);
            assert_eq!(r.done, t == 15);
        }
        assert!(matches!(env.step(0), Err(Error::EpisodeDone)));
        env.reset();
        assert!(env.step(0).is_ok());
    }

    #[test]
    fn doors_rejects_invalid_spec_and_action() {
        let bad = DoorsSpec {
            num_doors: 0,
            ..DoorsSpec::default()
        };
        assert!(Doors::new(bad).is_err());

        let mut env = Env::doors(DoorsSpec::default()).unwrap();
        env.reset();
        assert!(env.step(8).is_err());
    }

    proptest! {
        #[test]
        fn cartpole_replays_exactly_from_seed(
            seed in 0u64..1000,
            actions in proptest::collection::vec(0usize..2, 1..600),
        ) {
            let run = |seed: u64| {
                let mut env = Env::cartpole(seed);
                let mut trail = vec![env.reset()];
                for &a in &actions {
                    let r = env.step(a).unwrap();
                    trail.push(r.observation.clone());
                    prop_assert!(r.observation.iter().all(|v| v.is_finite()));
                    if r.done {
                        break;
                    }
                }
                Ok(trail)
            };
            prop_assert_eq!(run(seed)?, run(seed)?);
        }

        #[test]
        fn cartpole_episodes_never_exceed_cap(
            seed in 0u64..50,
            actions in proptest::collection::vec(0usize..2, 600),
        ) {
            let mut env = Env::cartpole(seed);
            env.reset();
            let mut steps = 0;
            for &a in &actions {
                let r = env.step(a).unwrap();
                steps += 1;
                if r.done {
                    break;
                }
            }
            prop_assert!(steps <= CARTPOLE_MAX_STEPS);
        }
    }
}
