//! Scenario engine: synchronous learning rounds over a topology with
//! arrivals, departures, measurement noise, traffic classes, baseline
//! association policies, and metrics.
//!
//! Each iteration, every active user samples a cell from her strategy,
//! stations compute rewards from their own load, agents update and apply
//! the snapping thresholds, transfers progress, and users whose workload
//! completes depart. Once every learning user is pure and stable for a
//! window, the system is converged; users then monitor their reward and
//! restart learning from the uniform strategy when it shifts by more than
//! the configured relative threshold (an arrival or departure in the cell).

pub mod policies;
pub mod traffic;

use std::io::Write;


use rand_distr::{Distribution, Normal, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fairness::g_alpha;
use crate::learning::{AgentState, RewardScale, StepPolicy, ThresholdRule};
use crate::rng::{salt, stream};
use crate::sim::traffic::{real_time_utility, TrafficClass};
use crate::wireless::{reward_bounds, CellMember, CellModels, CellState, Topology, UserSite};

/// Floor (in Mb/s-scale reward units) applied to rewards so saturated,
/// all-non-positive neighborhoods still polarize. Sits below the smallest
/// meaningful positive reward of the default models (the three-user WiFi
/// marginal, 0.022).
pub const REWARD_FLOOR: f64 = 0.015;
/// Stronger floor for users whose recent rewards are uniformly negligible:
/// every option of theirs is essentially dead, so resolving the (outcome-
/// irrelevant) race quickly matters more than resolving it finely.
pub const REWARD_FLOOR_SATURATED: f64 = 0.1;
/// Reward-average level below which a user counts as saturated.
pub const SATURATION_EMA: f64 = 0.02;
/// Episode age (in bounded-update iterations) over which the floor anneals
/// up to the saturated level, forcing straggling near-tie races to finish.
/// Scaled by the step policy's speed: small constant steps anneal
/// proportionally later.
pub const FLOOR_ANNEAL_ITERS: f64 = 120.0;

/// Relative progress speed of a policy, 1 for the bounded-update rule.
fn policy_speed(policy: &StepPolicy) -> f64 {
    match *policy {
        StepPolicy::Cus { .. } => 1.0,
        StepPolicy::Css { epsilon } => (10.0 * epsilon).min(1.0),
        StepPolicy::Dsssa { .. } | StepPolicy::Dsscss { .. } => 1.0,
    }
}

/// How users pick cells.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolicyKind {
    /// The learning algorithm with repercussion rewards.
    Algorithm,
    /// The learning algorithm with the raw throughput as reward.
    ThroughputPayoff,
    /// Always the first listed WiFi cell (WiMAX only as a last resort);
    /// never reconsidered.
    GanWifiFirst,
    /// Probe all cells at arrival, pick the best instantaneous throughput;
    /// never reconsidered.
    SelfishBest,
}

/// Step-size policy selection for the config file.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StepConfig {
    Css { epsilon: f64 },
    Cus {
        #[serde(default = "default_gamma")]
        gamma: f64,
        #[serde(default = "default_cap")]
        cap: f64,
    },
    Dsssa {
        #[serde(default = "default_dsssa_numerator")]
        numerator: f64,
        #[serde(default = "default_dsssa_cycle")]
        cycle: u64,
    },
    Dsscss {
        #[serde(default = "default_dsscss_numerator")]
        numerator: f64,
        #[serde(default = "default_dsscss_switch")]
        switch_t: u64,
        #[serde(default = "default_dsscss_plateau")]
        plateau: f64,
    },
}

fn default_gamma() -> f64 {
    0.1
}
fn default_cap() -> f64 {
    1.0
}
fn default_dsssa_numerator() -> f64 {
    3.0
}
fn default_dsssa_cycle() -> u64 {
    10
}
fn default_dsscss_numerator() -> f64 {
    4.0
}
fn default_dsscss_switch() -> u64 {
    120
}
fn default_dsscss_plateau() -> f64 {
    4.0
}

impl Default for StepConfig {
    fn default() -> Self {
        StepConfig::Cus {
            gamma: default_gamma(),
            cap: default_cap(),
        }
    }
}

impl StepConfig {
    pub fn to_policy(self) -> StepPolicy {
        match self {
            StepConfig::Css { epsilon } => StepPolicy::Css { epsilon },
            StepConfig::Cus { gamma, cap } => StepPolicy::Cus { gamma, cap },
            StepConfig::Dsssa { numerator, cycle } => StepPolicy::Dsssa { numerator, cycle },
            StepConfig::Dsscss {
                numerator,
                switch_t,
                plateau,
            } => StepPolicy::Dsscss {
                numerator,
                switch_t,
                plateau,
            },
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PolicyConfig {
    pub kind: PolicyKind,
    pub step: StepConfig,
}

impl Default for PolicyConfig {
    fn default() -> Self {
        Self {
            kind: PolicyKind::Algorithm,
            step: StepConfig::default(),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TopologyConfig {
    pub users: usize,
    pub wifi_cells: usize,
    pub choices_per_user: usize,
    /// Load the topology from a file instead of generating it.
    pub file: Option<String>,
}

impl Default for TopologyConfig {
    fn default() -> Self {
        Self {
            users: 20,
            wifi_cells: 9,
            choices_per_user: 3,
            file: None,
        }
    }
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ThresholdConfig {
    pub delta_min: f64,
    pub delta_max: f64,
}

impl Default for ThresholdConfig {
    fn default() -> Self {
        Self {
            delta_min: 0.05,
            delta_max: 0.3,
        }
    }
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ArrivalConfig {
    /// Poisson arrival rate per iteration; 0 means a static scenario.
    pub rate: f64,
}

impl Default for ArrivalConfig {
    fn default() -> Self {
        Self { rate: 0.0 }
    }
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseConfig {
    /// Standard deviation of the additive Gaussian noise on measured
    /// throughputs (Mb/s), truncated so measurements stay non-negative.
    pub std: f64,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        Self { std: 0.0 }
    }
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrafficConfig {
    /// Probability that an arrival is a mouse.
    pub mice_fraction: f64,
    /// Elephant mean workload divided by mouse mean workload.
    pub size_ratio: f64,
    /// Mean workload (Mb) of an elephant (the base class).
    pub workload_mean: f64,
    /// Route mice straight to their first WiFi cell instead of learning.
    pub mice_to_wifi: bool,
}

impl Default for TrafficConfig {
    fn default() -> Self {
        Self {
            mice_fraction: 0.0,
            size_ratio: 20.0,
            workload_mean: 400.0,
            mice_to_wifi: false,
        }
    }
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RealTimeConfig {
    /// Fraction of users with the threshold utility.
    pub fraction: f64,
    /// Minimum throughput (Mb/s) for non-zero real-time utility.
    pub threshold: f64,
}

impl Default for RealTimeConfig {
    fn default() -> Self {
        Self {
            fraction: 0.0,
            threshold: 1.0,
        }
    }
}

/// Throughput model parameters; defaults are the calibrated table and the
/// standard zone rates.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    pub wifi_per_user: Vec<f64>,
    pub wifi_decline: f64,
    pub wimax_zone_rates: Vec<f64>,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            wifi_per_user: vec![2.245, 1.225, 0.824],
            wifi_decline: 0.97,
            wimax_zone_rates: crate::wireless::ZONE_RATES.to_vec(),
        }
    }
}

impl ModelConfig {
    pub fn build(&self) -> Result<CellModels> {
        Ok(CellModels {
            wifi: crate::wireless::WifiModel::table(self.wifi_per_user.clone(), self.wifi_decline)?,
            wimax: crate::wireless::WimaxModel::new(self.wimax_zone_rates.clone())?,
        })
    }
}

/// Full scenario description; every field has a default, so a config file
/// only lists what it overrides.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub seed: u64,
    pub alpha: f64,
    pub max_iters: u64,
    /// Consecutive all-pure iterations before the system counts as
    /// converged.
    pub convergence_window: u64,
    /// Relative reward change that makes a settled user relearn.
    pub rerun_threshold: f64,
    /// Record the per-iteration log (choices, rewards, probabilities).
    pub record_log: bool,
    pub topology: TopologyConfig,
    pub policy: PolicyConfig,
    pub thresholds: ThresholdConfig,
    pub arrivals: ArrivalConfig,
    pub noise: NoiseConfig,
    pub traffic: TrafficConfig,
    pub real_time: RealTimeConfig,
    pub models: ModelConfig,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            alpha: 0.0,
            max_iters: 20_000,
            convergence_window: 50,
            rerun_threshold: 0.05,
            record_log: false,
            topology: TopologyConfig::default(),
            policy: PolicyConfig::default(),
            thresholds: ThresholdConfig::default(),
            arrivals: ArrivalConfig::default(),
            noise: NoiseConfig::default(),
            traffic: TrafficConfig::default(),
            real_time: RealTimeConfig::default(),
            models: ModelConfig::default(),
        }
    }
}

impl ScenarioConfig {
    pub fn from_toml_str(text: &str) -> Result<ScenarioConfig> {
        let cfg: ScenarioConfig =
            toml::from_str(text).map_err(|e| Error::Config(format!("scenario config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.alpha < 0.0 {
            return Err(Error::Config("alpha must be >= 0".into()));
        }
        if self.max_iters == 0 {
            return Err(Error::Config("max_iters must be positive".into()));
        }
        if self.arrivals.rate < 0.0 {
            return Err(Error::Config("arrival rate must be >= 0".into()));
        }
        if self.noise.std < 0.0 {
            return Err(Error::Config("noise std must be >= 0".into()));
        }
        if !(0.0..=1.0).contains(&self.traffic.mice_fraction) {
            return Err(Error::Config("mice_fraction must be in [0, 1]".into()));
        }
        if self.traffic.size_ratio <= 0.0 || self.traffic.workload_mean <= 0.0 {
            return Err(Error::Config("traffic sizes must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.real_time.fraction) {
            return Err(Error::Config("real_time fraction must be in [0, 1]".into()));
        }
        if self.real_time.threshold <= 0.0 {
            return Err(Error::Config("real_time threshold must be positive".into()));
        }
        if self.rerun_threshold <= 0.0 {
            return Err(Error::Config("rerun_threshold must be positive".into()));
        }
        ThresholdRule::new(self.thresholds.delta_min, self.thresholds.delta_max)?;
        self.models.build()?;
        if self.topology.file.is_none() {
            if self.topology.choices_per_user < 1 {
                return Err(Error::Config("choices_per_user must be >= 1".into()));
            }
            if self.topology.wifi_cells + 1 < self.topology.choices_per_user {
                return Err(Error::Config(
                    "not enough WiFi cells for the requested choice sets".into(),
                ));
            }
        }
        Ok(())
    }

    pub fn load_topology(&self) -> Result<Topology> {
        match &self.topology.file {
            Some(path) => {
                let text = std::fs::read_to_string(path)?;
                Topology::from_toml_str(&text)
            }
            None => Topology::generate(
                self.topology.users,
                self.topology.wifi_cells,
                self.topology.choices_per_user,
                self.seed,
            ),
        }
    }
}

/// One row of the per-iteration log (entries are `None` for users not yet
/// arrived or already departed).
#[derive(Clone, Debug)]
pub struct LogRow {
    pub iteration: u64,
    pub cells: Vec<Option<usize>>,
    pub rewards: Vec<Option<f64>>,
    pub max_prob: Vec<Option<f64>>,
    pub potential: f64,
}

/// Outputs of one scenario run.
#[derive(Clone, Debug, Default)]
pub struct RunMetrics {
    pub iterations_run: u64,
    /// Static scenarios: whether the system converged before `max_iters`.
    /// Dynamic scenarios complete their horizon and report `true`.
    pub converged: bool,
    /// Global throughput (Mb/s) per iteration.
    pub throughput_series: Vec<f64>,
    /// Realized-choice changes per user ever active.
    pub handovers: Vec<u64>,
    /// Iterations from each episode start to its all-pure iteration.
    pub episode_iterations: Vec<u64>,
    /// Choice index per initial user at termination (static scenarios).
    pub final_allocation: Option<Vec<usize>>,
    pub log: Vec<LogRow>,
}

impl RunMetrics {
    pub fn mean_throughput(&self) -> f64 {
        if self.throughput_series.is_empty() {
            return 0.0;
        }
        self.throughput_series.iter().sum::<f64>() / self.throughput_series.len() as f64
    }

    /// Mean over the second half of the series: the steady-state estimate
    /// used by the policy comparisons.
    pub fn steady_state_mean(&self) -> f64 {
        let n = self.throughput_series.len();
        if n == 0 {
            return 0.0;
        }
        let tail = &self.throughput_series[n / 2..];
        tail.iter().sum::<f64>() / tail.len() as f64
    }

    pub fn total_handovers(&self) -> u64 {
        self.handovers.iter().sum()
    }

    pub fn mean_handovers(&self) -> f64 {
        if self.handovers.is_empty() {
            return 0.0;
        }
        self.total_handovers() as f64 / self.handovers.len() as f64
    }

    /// CSV export of the log: iteration, per-user cell/reward/max-prob
    /// columns, and the global potential.
    pub fn write_log_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        let n = self.handovers.len();
        write!(w, "iteration")?;
        for u in 0..n {
            write!(w, ",cell_{u},reward_{u},max_prob_{u}")?;
        }
        writeln!(w, ",potential")?;
        for row in &self.log {
            write!(w, "{}", row.iteration)?;
            for u in 0..n {
                match (row.cells.get(u).copied().flatten(), row.rewards.get(u).copied().flatten(), row.max_prob.get(u).copied().flatten()) {
                    (Some(c), Some(r), Some(p)) => write!(w, ",{c},{r},{p}")?,
                    _ => write!(w, ",,,")?,
                }
            }
            writeln!(w, ",{}", row.potential)?;
        }
        Ok(())
    }
}

struct UserRuntime {
    site: UserSite,
    class: TrafficClass,
    agent: Option<AgentState>,
    fixed: Option<usize>,
    prev_choice: Option<usize>,
    workload_left: Option<f64>,
    monitor: Option<f64>,
    monitor_breach: u32,
    handovers: u64,
    active: bool,
}

impl UserRuntime {
    fn choices(&self) -> Vec<usize> {
        self.site.choices()
    }

    fn is_learning(&self) -> bool {
        self.agent.is_some()
    }

    fn is_pure(&self) -> bool {
        self.agent
            .as_ref()
            .map_or(true, |a| a.pure_action().is_some())
    }
}

/// Run a scenario to completion. Deterministic in the config (including
/// its master seed).
pub fn run_scenario(config: &ScenarioConfig) -> Result<RunMetrics> {
    config.validate()?;
    let topology = config.load_topology()?;
    let models = config.models.build()?;
    let policy = config.policy.step.to_policy();
    let rule = ThresholdRule::new(config.thresholds.delta_min, config.thresholds.delta_max)?;
    let dynamic = config.arrivals.rate > 0.0;

    // Reward calibration: bounds over utilities that can occur in this
    // scenario, widened for the real-time class if present. Rewards with
    // alpha < 1 are clamped at zero instead of shifted: a uniform shift
    // compresses relative reward gaps, and under the bounded-update step
    // rule it erases the reward signal entirely (every bound-hitting
    // update moves by exactly gamma). For alpha >= 1 the utilities are
    // negative throughout, so a shift is unavoidable.
    let bound_pop = (topology.n_users() + 8).max(64);
    let (mut lo, mut hi) = reward_bounds(&models, config.alpha, bound_pop)?;
    if config.real_time.fraction > 0.0 {
        lo = lo.min(1.0 - bound_pop as f64);
        hi = hi.max(1.0);
    }
    if config.policy.kind == PolicyKind::ThroughputPayoff {
        lo = lo.min(0.0);
        hi = hi.max(crate::wireless::ZONE_RATES[0].max(models.wifi.per_user_goodput(1)));
    }
    let scale = if config.alpha < 1.0 {
        RewardScale::for_policy(0.0, hi.max(0.0), &policy)
    } else {
        RewardScale::for_policy(lo, hi, &policy)
    };
    // Saturated cells can make every option's repercussion utility
    // non-positive; floors keep those strategies polarizing instead of
    // freezing (the convergence theory assumes positive rewards, which
    // overload violates). The floors live in natural reward units and are
    // rescaled alongside the rewards.
    let floors_enabled = config.alpha < 1.0;
    let floor_base = REWARD_FLOOR / scale.divisor;
    let floor_saturated = REWARD_FLOOR_SATURATED / scale.divisor;
    let saturation_ema = SATURATION_EMA / scale.divisor;
    let floor_anneal_iters = FLOOR_ANNEAL_ITERS / policy_speed(&policy);
    let mut reward_ema: Vec<f64> = Vec::new();

    let mut arrivals_rng = stream(config.seed, salt::ARRIVALS);
    let mut noise_rng = stream(config.seed, salt::NOISE);
    let normal = if config.noise.std > 0.0 {
        Some(Normal::new(0.0, config.noise.std).map_err(|e| Error::Config(e.to_string()))?)
    } else {
        None
    };
    let poisson = if dynamic {
        Some(Poisson::new(config.arrivals.rate).map_err(|e| Error::Config(e.to_string()))?)
    } else {
        None
    };

    // Initial population.
    let classes = traffic::initial_population(
        &topology,
        &config.traffic,
        &config.real_time,
        dynamic,
        &mut arrivals_rng,
    )?;
    let mut users: Vec<UserRuntime> = Vec::new();
    let mut selfish_occupancy = vec![0usize; topology.n_wifi + 1];
    for (u, (class, workload)) in classes.into_iter().enumerate() {
        let site = topology.users[u].clone();
        users.push(make_user(
            u as u64,
            site,
            class,
            workload,
            config,
            &models,
            &mut selfish_occupancy,
        ));
    }
    let n_initial = users.len();
    // Which users (ever) have each cell in their choice set.
    let mut access: Vec<Vec<usize>> = vec![Vec::new(); topology.n_wifi + 1];
    for (u, user) in users.iter().enumerate() {
        for cell in user.choices() {
            access[cell].push(u);
        }
    }

    let mut metrics = RunMetrics::default();
    let mut settled = false;
    let mut episode_open = true;
    let mut episode_start: u64 = 1;
    let mut all_pure_since: Option<u64> = None;

    let mut cells: Vec<Vec<CellMember>> = vec![Vec::new(); topology.n_wifi + 1];
    for t in 1..=config.max_iters {
        // Arrivals.
        if let Some(poisson) = &poisson {
            let count = poisson.sample(&mut arrivals_rng) as u64;
            for _ in 0..count {
                let ev = traffic::sample_arrival(
                    t,
                    &config.traffic,
                    &config.real_time,
                    topology.n_wifi,
                    config.topology.choices_per_user,
                    &mut arrivals_rng,
                )?;
                let id = users.len() as u64;
                users.push(make_user(
                    id,
                    ev.site,
                    ev.class,
                    Some(ev.workload),
                    config,
                    &models,
                    &mut selfish_occupancy,
                ));
                for cell in users[id as usize].choices() {
                    access[cell].push(id as usize);
                }
                if settled || !episode_open {
                    episode_open = true;
                    episode_start = t;
                    settled = false;
                }
                all_pure_since = None;
            }
        }

        // Realized choices.
        let mut choices: Vec<Option<usize>> = vec![None; users.len()];
        for (u, user) in users.iter_mut().enumerate() {
            if !user.active {
                continue;
            }
            let c = match (&mut user.agent, user.fixed) {
                (Some(agent), _) => agent.sample_choice(),
                (None, Some(fixed)) => fixed,
                (None, None) => unreachable!("user without agent or fixed choice"),
            };
            choices[u] = Some(c);
        }

        // Cell membership and true throughputs.
        for cell in cells.iter_mut() {
            cell.clear();
        }
        for (u, user) in users.iter().enumerate() {
            if let Some(c) = choices[u] {
                let cell = user.choices()[c];
                cells[cell].push(CellMember {
                    user: u,
                    zone: user.site.zone,
                });
            }
        }
        let mut true_throughput: Vec<f64> = vec![0.0; users.len()];
        for (cell_id, members) in cells.iter().enumerate() {
            if members.is_empty() {
                continue;
            }
            let state = CellState {
                cell: cell_id,
                members: members.clone(),
            };
            for (m, &tp) in members.iter().zip(state.throughputs(&models).iter()) {
                true_throughput[m.user] = tp;
            }
        }

        // Per-user measurement noise on the own-throughput function.
        let mut eta: Vec<f64> = vec![0.0; users.len()];
        if let Some(normal) = &normal {
            for (u, user) in users.iter().enumerate() {
                if user.active {
                    eta[u] = normal.sample(&mut noise_rng);
                }
            }
        }

        // Station rewards per cell. Learning consumes the noisy rewards;
        // monitoring compares the clean (load-based) values, which is the
        // averaged measurement a station converges to.
        let compute_rewards = |eta: &[f64]| -> Result<Vec<Option<f64>>> {
            let mut rewards: Vec<Option<f64>> = vec![None; users.len()];
            for (cell_id, members) in cells.iter().enumerate() {
                if members.is_empty() {
                    continue;
                }
                let state = CellState {
                    cell: cell_id,
                    members: members.clone(),
                };
                if config.policy.kind == PolicyKind::ThroughputPayoff {
                    for m in members {
                        let measured = (true_throughput[m.user] + eta[m.user]).max(0.0);
                        rewards[m.user] = Some(measured);
                    }
                } else {
                    let alpha = config.alpha;
                    let rs = state.rewards_with(&models, |u, tp| {
                        let measured =
                            (tp + eta[u]).max(if alpha >= 1.0 { 1e-6 } else { 0.0 });
                        match users[u].class {
                            TrafficClass::RealTime { threshold } => {
                                Ok(real_time_utility(measured, threshold))
                            }
                            _ => g_alpha(measured, alpha),
                        }
                    })?;
                    for (m, r) in members.iter().zip(rs) {
                        rewards[m.user] = Some(r);
                    }
                }
            }
            Ok(rewards)
        };
        let rewards = compute_rewards(&eta)?;
        let clean_rewards = if normal.is_some() {
            compute_rewards(&vec![0.0; users.len()])?
        } else {
            rewards.clone()
        };

        // Learning updates and thresholds.
        reward_ema.resize(users.len(), 1.0);
        for (u, user) in users.iter_mut().enumerate() {
            let (Some(c), Some(r)) = (choices[u], rewards[u]) else {
                continue;
            };
            if let Some(agent) = &mut user.agent {
                let mut scaled = scale.apply_clamped(r);
                if floors_enabled {
                    reward_ema[u] = 0.9 * reward_ema[u] + 0.1 * scaled;
                    let age = (t - episode_start) as f64;
                    let anneal = (age / floor_anneal_iters).min(1.0);
                    let mut floor = if reward_ema[u] < saturation_ema {
                        floor_saturated
                    } else {
                        floor_base
                    };
                    // Races still open late in an episode are between
                    // near-equal options; coarsen them so they finish.
                    floor = floor.max(anneal * floor_saturated);
                    scaled = scaled.max(floor);
                }
                agent.update(c, scaled, t)?;
                agent.apply_thresholds(&rule);
            }
            if user.prev_choice.is_some_and(|p| p != c) {
                user.handovers += 1;
            }
            user.prev_choice = Some(c);
        }

        // Monitoring. A cell asks its users to monitor only once every
        // user with access to it has reached a pure strategy; a monitored
        // user keeps a reference reward and relearns from scratch when the
        // clean (load-based) value stays off the reference for a few
        // consecutive iterations. Re-runs therefore react to arrivals,
        // departures, and neighbors relearning, not to exploration noise
        // mid-episode.
        const BREACH_PERSISTENCE: u32 = 5;
        let cell_ready: Vec<bool> = access
            .iter()
            .map(|users_with_access| {
                users_with_access.iter().all(|&u| {
                    let user = &users[u];
                    !user.active || !user.is_learning() || user.is_pure()
                })
            })
            .collect();
        for u in 0..users.len() {
            let user = &users[u];
            if !user.active || !user.is_learning() {
                continue;
            }
            if !user.is_pure() {
                users[u].monitor = None;
                users[u].monitor_breach = 0;
                continue;
            }
            let Some(c) = choices[u] else { continue };
            if !cell_ready[user.choices()[c]] {
                continue;
            }
            let Some(current) = clean_rewards[u] else { continue };
            let Some(reference) = user.monitor else {
                users[u].monitor = Some(current);
                users[u].monitor_breach = 0;
                continue;
            };
            let denom = reference.abs().max(1e-9);
            if (current - reference).abs() / denom > config.rerun_threshold {
                users[u].monitor_breach += 1;
            } else {
                users[u].monitor_breach = 0;
            }
            if users[u].monitor_breach >= BREACH_PERSISTENCE {
                if let Some(agent) = &mut users[u].agent {
                    agent.reset_uniform();
                }
                users[u].monitor = None;
                users[u].monitor_breach = 0;
                settled = false;
                all_pure_since = None;
                if !episode_open {
                    episode_open = true;
                    episode_start = t;
                }
            }
        }

        // Transfers and departures.
        for (u, user) in users.iter_mut().enumerate() {
            if !user.active {
                continue;
            }
            if let Some(left) = &mut user.workload_left {
                *left -= true_throughput[u];
                if *left <= 0.0 {
                    user.active = false;
                }
            }
        }

        // Metrics.
        let global: f64 = users
            .iter()
            .enumerate()
            .filter(|(_, u)| u.active)
            .map(|(u, _)| true_throughput[u])
            .sum();
        metrics.throughput_series.push(global);
        metrics.iterations_run = t;

        if config.record_log {
            let mut potential = 0.0;
            for (u, user) in users.iter().enumerate() {
                if !user.active {
                    continue;
                }
                potential += match user.class {
                    TrafficClass::RealTime { threshold } => {
                        real_time_utility(true_throughput[u], threshold)
                    }
                    _ => g_alpha(true_throughput[u].max(1e-12), config.alpha)?,
                };
            }
            metrics.log.push(LogRow {
                iteration: t,
                cells: users
                    .iter()
                    .enumerate()
                    .map(|(u, user)| choices[u].map(|c| user.choices()[c]))
                    .collect(),
                rewards: rewards.clone(),
                max_prob: users
                    .iter()
                    .map(|user| {
                        user.agent.as_ref().map(|a| {
                            a.strategy().iter().cloned().fold(f64::MIN, f64::max)
                        })
                    })
                    .collect(),
                potential,
            });
        }

        // Convergence bookkeeping. Pure agents stay pure unless reset, so
        // a purity break always comes from an arrival or a re-run trigger.
        let all_pure = users.iter().filter(|u| u.active).all(|u| u.is_pure());
        if all_pure {
            if all_pure_since.is_none() {
                all_pure_since = Some(t);
            }
            if !settled && t - all_pure_since.unwrap() + 1 >= config.convergence_window {
                settled = true;
                if episode_open {
                    metrics
                        .episode_iterations
                        .push(all_pure_since.unwrap() - episode_start + 1);
                    episode_open = false;
                }
                if !dynamic {
                    break;
                }
            }
        } else {
            all_pure_since = None;
            settled = false;
            if !episode_open {
                episode_open = true;
                episode_start = t;
            }
        }
    }

    metrics.converged = if dynamic { true } else { settled };
    metrics.handovers = users.iter().map(|u| u.handovers).collect();
    if !dynamic {
        let allocation: Option<Vec<usize>> = users[..n_initial]
            .iter()
            .map(|u| {
                u.agent
                    .as_ref()
                    .and_then(|a| a.pure_action())
                    .or(u.fixed)
                    .or(u.prev_choice)
            })
            .collect();
        metrics.final_allocation = allocation;
    }
    Ok(metrics)
}

fn make_user(
    id: u64,
    site: UserSite,
    class: TrafficClass,
    workload: Option<f64>,
    config: &ScenarioConfig,
    models: &CellModels,
    selfish_occupancy: &mut [usize],
) -> UserRuntime {
    let choices = site.choices();
    let learning = match config.policy.kind {
        PolicyKind::Algorithm | PolicyKind::ThroughputPayoff => {
            !(config.traffic.mice_to_wifi && class.is_mouse())
        }
        PolicyKind::GanWifiFirst | PolicyKind::SelfishBest => false,
    };
    let fixed = if learning {
        None
    } else {
        let c = match config.policy.kind {
            PolicyKind::GanWifiFirst => policies::gan_wifi_first_choice(&site),
            PolicyKind::SelfishBest => {
                policies::selfish_best_choice(&site, models, selfish_occupancy)
            }
            // Mice routed to WiFi under the learning policies.
            _ => policies::gan_wifi_first_choice(&site),
        };
        selfish_occupancy[choices[c]] += 1;
        Some(c)
    };
    let agent = learning.then(|| {
        AgentState::new(
            choices.len(),
            config.policy.step.to_policy(),
            config.seed,
            id,
        )
    });
    UserRuntime {
        site,
        class,
        agent,
        fixed,
        prev_choice: None,
        workload_left: workload,
        monitor: None,
        monitor_breach: 0,
        handovers: 0,
        active: true,
    }
}

#[cfg(test)]
mod tests;
