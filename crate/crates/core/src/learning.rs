//! The distributed strategy-learning algorithm.
//!
//! Each agent keeps a probability row over her own choices and, after
//! picking a choice and receiving a (non-negative, scaled) reward `r`,
//! applies the linear reward-inaction update
//!
//! ```text
//! q_i <- q_i + eps * r * (1[chosen = i] - q_i)
//! ```
//!
//! which preserves the row sum analytically. Step sizes come from one of
//! four policies; probabilities near 0 or 1 are snapped by a threshold rule
//! so runs terminate at exactly pure rows.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::game::{CompanionGame, LoadVector, PureProfile};
use crate::rng::{salt, stream};

/// Step-size policy. Constructors carry the customary parameters:
/// constant steps at 0.01 / 0.1 / 1, bounded updates at 0.1, a cyclic
/// decreasing schedule, and a decreasing-then-constant schedule.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum StepPolicy {
    /// Constant step size.
    Css { epsilon: f64 },
    /// Constant update size: the largest step keeping every probability
    /// change at most `gamma`, capped at `cap`.
    Cus { gamma: f64, cap: f64 },
    /// Cyclic decreasing steps `numerator / ((t mod cycle) + 1)`.
    Dsssa { numerator: f64, cycle: u64 },
    /// `numerator / t` until `switch_t`, then the constant `plateau`.
    Dsscss {
        numerator: f64,
        switch_t: u64,
        plateau: f64,
    },
}

impl StepPolicy {
    pub fn css_low() -> Self {
        StepPolicy::Css { epsilon: 0.01 }
    }

    pub fn css_medium() -> Self {
        StepPolicy::Css { epsilon: 0.1 }
    }

    pub fn css_high() -> Self {
        StepPolicy::Css { epsilon: 1.0 }
    }

    pub fn cus() -> Self {
        StepPolicy::Cus {
            gamma: 0.1,
            cap: 1.0,
        }
    }

    pub fn dsssa() -> Self {
        StepPolicy::Dsssa {
            numerator: 3.0,
            cycle: 10,
        }
    }

    pub fn dsscss() -> Self {
        StepPolicy::Dsscss {
            numerator: 4.0,
            switch_t: 120,
            plateau: 4.0,
        }
    }

    /// Step size for iteration `t >= 1` given the received reward and the
    /// current row.
    pub fn epsilon(&self, t: u64, reward: f64, row: &[f64], chosen: usize) -> f64 {
        match *self {
            StepPolicy::Css { epsilon } => epsilon,
            StepPolicy::Cus { gamma, cap } => cus_step(row, chosen, reward, gamma, cap),
            StepPolicy::Dsssa { numerator, cycle } => numerator / ((t % cycle) + 1) as f64,
            StepPolicy::Dsscss {
                numerator,
                switch_t,
                plateau,
            } => {
                if t < switch_t {
                    numerator / t.max(1) as f64
                } else {
                    plateau
                }
            }
        }
    }

    /// Largest step size the policy can produce; reward scaling divides by
    /// this so that `eps * r <= 1` always holds.
    pub fn max_epsilon(&self) -> f64 {
        match *self {
            StepPolicy::Css { epsilon } => epsilon,
            StepPolicy::Cus { cap, .. } => cap,
            StepPolicy::Dsssa { numerator, .. } => numerator,
            StepPolicy::Dsscss {
                numerator, plateau, ..
            } => numerator.max(plateau),
        }
    }
}

/// The largest step such that every coordinate changes by at most `gamma`,
/// bounded by `cap` and by `1/reward` (which keeps the row inside `[0,1]`).
pub fn cus_step(row: &[f64], chosen: usize, reward: f64, gamma: f64, cap: f64) -> f64 {
    let mut eps = cap;
    if reward > 0.0 {
        eps = eps.min(1.0 / reward);
        let max_dev = row
            .iter()
            .enumerate()
            .map(|(i, &q)| if i == chosen { 1.0 - q } else { q })
            .fold(0.0f64, f64::max);
        if max_dev > 0.0 {
            eps = eps.min(gamma / (reward * max_dev));
        }
    }
    eps
}

/// Snapping thresholds: probabilities below `delta_min` become 0 and
/// probabilities above `1 - delta_max` become 1, followed by
/// renormalization.
#[derive(Clone, Copy, Debug)]
pub struct ThresholdRule {
    pub delta_min: f64,
    pub delta_max: f64,
}

impl Default for ThresholdRule {
    fn default() -> Self {
        Self {
            delta_min: 0.05,
            delta_max: 0.3,
        }
    }
}

impl ThresholdRule {
    pub fn new(delta_min: f64, delta_max: f64) -> Result<Self> {
        if !(delta_min > 0.0 && delta_min < 1.0 - delta_max && 1.0 - delta_max <= 1.0) {
            return Err(Error::Config(format!(
                "thresholds must satisfy 0 < delta_min < 1 - delta_max <= 1 \
                 (got delta_min={delta_min}, delta_max={delta_max})"
            )));
        }
        Ok(Self {
            delta_min,
            delta_max,
        })
    }

    /// No snapping at all (both thresholds effectively disabled).
    pub fn disabled() -> Self {
        Self {
            delta_min: f64::MIN_POSITIVE,
            delta_max: 0.0,
        }
    }
}

/// Affine reward conditioning: `(r + shift) / divisor`, calibrated so that
/// scaled rewards are non-negative and `max_epsilon * r <= 1`.
#[derive(Clone, Copy, Debug)]
pub struct RewardScale {
    pub shift: f64,
    pub divisor: f64,
    /// Upper clamp for [`RewardScale::apply_clamped`]; keeps noisy rewards
    /// inside the step-validity range.
    pub ceiling: f64,
}

impl RewardScale {
    pub fn identity() -> Self {
        Self {
            shift: 0.0,
            divisor: 1.0,
            ceiling: f64::INFINITY,
        }
    }

    /// Calibrate for rewards in `[lo, hi]` under a policy whose largest
    /// step is `max_eps`.
    pub fn calibrate(lo: f64, hi: f64, max_eps: f64) -> Self {
        Self::calibrate_with_margin(lo, hi, max_eps, 1.0)
    }

    /// Calibration with an extra divisor margin (> 1 shrinks every step).
    /// Smaller steps track the mean dynamics more closely, which lowers the
    /// probability of absorbing at a non-equilibrium profile at the cost of
    /// proportionally more iterations.
    pub fn calibrate_with_margin(lo: f64, hi: f64, max_eps: f64, margin: f64) -> Self {
        let shift = (-lo).max(0.0);
        let span = (hi + shift).max(f64::MIN_POSITIVE);
        Self {
            shift,
            divisor: span * max_eps.max(1.0) * margin,
            ceiling: 1.0 / max_eps.max(f64::MIN_POSITIVE),
        }
    }

    /// Policy-aware calibration. The bounded-update policy adapts its step
    /// to the reward and already enforces `eps * r <= 1`, so it consumes
    /// rewards in natural units (dividing them squashes the updates of
    /// low-reward, congested cells to nothing). Fixed-step policies divide
    /// only as much as needed to guarantee `eps * r <= 1`.
    pub fn for_policy(lo: f64, hi: f64, policy: &StepPolicy) -> Self {
        let shift = (-lo).max(0.0);
        match policy {
            StepPolicy::Cus { .. } => Self {
                shift,
                divisor: 1.0,
                ceiling: f64::INFINITY,
            },
            _ => {
                let max_eps = policy.max_epsilon();
                let span = (hi + shift).max(f64::MIN_POSITIVE);
                Self {
                    shift,
                    divisor: (span * max_eps).max(1.0),
                    ceiling: 1.0 / max_eps.max(f64::MIN_POSITIVE),
                }
            }
        }
    }

    /// Calibrate from a table-backed companion game.
    pub fn for_game(companion: &CompanionGame, policy: &StepPolicy) -> Result<Self> {
        let (lo, hi) = companion
            .rewards()
            .payoff_bounds()
            .ok_or(Error::RequiresTable)?;
        Ok(Self::calibrate(lo, hi, policy.max_epsilon()))
    }

    pub fn apply(&self, reward: f64) -> f64 {
        (reward + self.shift) / self.divisor
    }

    /// Scale and clamp into `[0, ceiling]`; handles negative repercussion
    /// values and measurement-noise tails.
    pub fn apply_clamped(&self, reward: f64) -> f64 {
        self.apply(reward).clamp(0.0, self.ceiling)
    }
}

/// One agent: her strategy row, step policy, and private random stream.
#[derive(Clone, Debug)]
pub struct AgentState {
    strategy: Vec<f64>,
    policy: StepPolicy,
    rng: ChaCha8Rng,
}

impl AgentState {
    /// Fresh agent with the uniform strategy over `n_actions` choices.
    pub fn new(n_actions: usize, policy: StepPolicy, master_seed: u64, agent_id: u64) -> Self {
        assert!(n_actions >= 1);
        Self {
            strategy: vec![1.0 / n_actions as f64; n_actions],
            policy,
            rng: stream(master_seed, salt::AGENT_BASE + agent_id),
        }
    }

    /// Agent starting from an explicit strategy row.
    pub fn from_strategy(
        strategy: Vec<f64>,
        policy: StepPolicy,
        master_seed: u64,
        agent_id: u64,
    ) -> Result<Self> {
        let sum: f64 = strategy.iter().sum();
        if strategy.is_empty()
            || strategy.iter().any(|&p| !(0.0..=1.0).contains(&p))
            || (sum - 1.0).abs() > 1e-9
        {
            return Err(Error::InvalidProfile(
                "agent strategy must be a probability row".into(),
            ));
        }
        Ok(Self {
            strategy,
            policy,
            rng: stream(master_seed, salt::AGENT_BASE + agent_id),
        })
    }

    pub fn strategy(&self) -> &[f64] {
        &self.strategy
    }

    pub fn policy(&self) -> &StepPolicy {
        &self.policy
    }

    /// Index of the pure action, if the row is exactly pure.
    pub fn pure_action(&self) -> Option<usize> {
        let mut pure = None;
        for (i, &p) in self.strategy.iter().enumerate() {
            if p == 1.0 {
                if pure.is_some() {
                    return None;
                }
                pure = Some(i);
            } else if p != 0.0 {
                return None;
            }
        }
        pure
    }

    pub fn reset_uniform(&mut self) {
        let p = 1.0 / self.strategy.len() as f64;
        self.strategy.iter_mut().for_each(|q| *q = p);
    }

    /// Sample a choice from the current strategy.
    pub fn sample_choice(&mut self) -> usize {
        let x: f64 = self.rng.random();
        let mut acc = 0.0;
        for (i, &p) in self.strategy.iter().enumerate() {
            acc += p;
            if x < acc {
                return i;
            }
        }
        self.strategy.len() - 1
    }

    /// Apply the reward-weighted update for iteration `t`. The chosen
    /// coordinate moves toward 1, all others shrink proportionally; the row
    /// sum is preserved. Rejects negative rewards and steps with
    /// `eps * reward > 1`.
    pub fn update(&mut self, chosen: usize, reward: f64, t: u64) -> Result<()> {
        if reward < 0.0 {
            return Err(Error::NegativeReward(reward));
        }
        let eps = self.policy.epsilon(t, reward, &self.strategy, chosen);
        let step = eps * reward;
        if step > 1.0 {
            return Err(Error::StepOverflow(step));
        }
        for (i, q) in self.strategy.iter_mut().enumerate() {
            let target = if i == chosen { 1.0 } else { 0.0 };
            *q += step * (target - *q);
        }
        // Fold the (tiny) floating-point residue back into the row.
        let sum: f64 = self.strategy.iter().sum();
        if (sum - 1.0).abs() > 1e-13 {
            self.strategy.iter_mut().for_each(|q| *q /= sum);
        }
        Ok(())
    }

    /// Snap probabilities past the thresholds and renormalize. If an entry
    /// exceeds `1 - delta_max` the row becomes pure at that entry.
    pub fn apply_thresholds(&mut self, rule: &ThresholdRule) {
        if let Some(hi) = self
            .strategy
            .iter()
            .position(|&p| p > 1.0 - rule.delta_max && p < 1.0)
        {
            self.strategy.iter_mut().for_each(|p| *p = 0.0);
            self.strategy[hi] = 1.0;
            return;
        }
        let mut snapped = false;
        let mut sum = 0.0;
        for p in &self.strategy {
            if *p < rule.delta_min {
                snapped = true;
            } else {
                sum += *p;
            }
        }
        if !snapped || sum == 0.0 {
            return;
        }
        for p in self.strategy.iter_mut() {
            if *p < rule.delta_min {
                *p = 0.0;
            } else {
                *p /= sum;
            }
        }
    }
}

/// Result of a converged learning run.
#[derive(Clone, Debug)]
pub struct LearningRun {
    pub profile: PureProfile,
    pub iterations: u64,
    /// Per-player count of realized-choice changes.
    pub handovers: Vec<u64>,
}

/// Outcome of [`run_learning`]: either all rows reached a pure strategy, or
/// the iteration budget ran out.
#[derive(Clone, Debug)]
pub enum LearningOutcome {
    Converged(LearningRun),
    MaxIters {
        final_strategies: Vec<Vec<f64>>,
        handovers: Vec<u64>,
    },
}

impl LearningOutcome {
    pub fn converged(&self) -> Option<&LearningRun> {
        match self {
            LearningOutcome::Converged(run) => Some(run),
            LearningOutcome::MaxIters { .. } => None,
        }
    }
}

/// Run the synchronous learning loop on a table-backed companion game:
/// rewards are shifted positive and scaled automatically.
pub fn run_learning(
    companion: &CompanionGame,
    policy: StepPolicy,
    rule: &ThresholdRule,
    seed: u64,
    max_iters: u64,
) -> Result<LearningOutcome> {
    let scale = RewardScale::for_game(companion, &policy)?;
    run_learning_scaled(companion, policy, rule, scale, seed, max_iters)
}

/// Learning loop with an explicit reward scale (required for oracle-backed
/// games whose reward bounds the caller knows).
pub fn run_learning_scaled(
    companion: &CompanionGame,
    policy: StepPolicy,
    rule: &ThresholdRule,
    scale: RewardScale,
    seed: u64,
    max_iters: u64,
) -> Result<LearningOutcome> {
    let rewards = companion.rewards();
    let n = rewards.n_players();
    let mut agents: Vec<AgentState> = (0..n)
        .map(|k| AgentState::new(rewards.action_set(k).len(), policy, seed, k as u64))
        .collect();
    let mut handovers = vec![0u64; n];
    let mut prev: Vec<Option<usize>> = vec![None; n];
    let mut bits: Vec<Vec<bool>> = vec![vec![false; n]; rewards.n_resources()];

    for t in 1..=max_iters {
        let choices: Vec<usize> = agents.iter_mut().map(|a| a.sample_choice()).collect();
        for row in bits.iter_mut() {
            row.iter_mut().for_each(|b| *b = false);
        }
        for (k, &c) in choices.iter().enumerate() {
            bits[rewards.action_set(k)[c]][k] = true;
        }
        for (k, agent) in agents.iter_mut().enumerate() {
            let resource = rewards.action_set(k)[choices[k]];
            let load = LoadVector::new(resource, bits[resource].clone());
            let reward = scale.apply(rewards.payoff(k, &load)?);
            agent.update(choices[k], reward, t)?;
            agent.apply_thresholds(rule);
        }
        for (k, &c) in choices.iter().enumerate() {
            if prev[k].is_some_and(|p| p != c) {
                handovers[k] += 1;
            }
            prev[k] = Some(c);
        }
        if agents.iter().all(|a| a.pure_action().is_some()) {
            let indices: Vec<usize> = agents.iter().map(|a| a.pure_action().unwrap()).collect();
            let profile = PureProfile::from_indices(rewards, &indices)?;
            return Ok(LearningOutcome::Converged(LearningRun {
                profile,
                iterations: t,
                handovers,
            }));
        }
    }
    Ok(LearningOutcome::MaxIters {
        final_strategies: agents.iter().map(|a| a.strategy.clone()).collect(),
        handovers,
    })
}
