//! Naive association policies and scenario-level comparisons.

use crate::error::Result;
use crate::sim::{run_scenario, PolicyKind, RunMetrics, ScenarioConfig};
use crate::wireless::{CellModels, UserSite, WIMAX_CELL};

/// Absolute WiFi preference: the first listed WiFi cell, the WiMAX cell
/// only when there is no WiFi choice. Returns a choice index.
pub fn gan_wifi_first_choice(site: &UserSite) -> usize {
    if site.wifi.is_empty() {
        0
    } else {
        1
    }
}

/// Greedy probing at arrival: the cell maximizing the user's own
/// instantaneous throughput if she joins, given current per-cell
/// occupancy; ties break toward the lowest cell id. Returns a choice
/// index.
pub fn selfish_best_choice(
    site: &UserSite,
    models: &CellModels,
    occupancy: &[usize],
) -> usize {
    let choices = site.choices();
    let mut best = 0usize;
    let mut best_tp = f64::NEG_INFINITY;
    let mut best_cell = usize::MAX;
    for (i, &cell) in choices.iter().enumerate() {
        let p = occupancy[cell] + 1;
        let tp = if cell == WIMAX_CELL {
            models.wimax.per_user_goodput(site.zone, p)
        } else {
            models.wifi.per_user_goodput(p)
        };
        if tp > best_tp || (tp == best_tp && cell < best_cell) {
            best = i;
            best_tp = tp;
            best_cell = cell;
        }
    }
    best
}

/// Steady-state throughput of every policy on the same scenario and seed.
#[derive(Clone, Debug)]
pub struct PolicyComparison {
    pub algorithm: f64,
    pub selfish_best: f64,
    pub gan_wifi_first: f64,
    pub throughput_payoff: f64,
}

/// Run the scenario under each policy kind with identical seeds and
/// arrival streams; report steady-state mean global throughputs.
pub fn compare_policies(config: &ScenarioConfig) -> Result<PolicyComparison> {
    let run = |kind: PolicyKind| -> Result<f64> {
        let mut c = config.clone();
        c.policy.kind = kind;
        Ok(run_scenario(&c)?.steady_state_mean())
    };
    Ok(PolicyComparison {
        algorithm: run(PolicyKind::Algorithm)?,
        selfish_best: run(PolicyKind::SelfishBest)?,
        gan_wifi_first: run(PolicyKind::GanWifiFirst)?,
        throughput_payoff: run(PolicyKind::ThroughputPayoff)?,
    })
}

/// Outcome of the mice-routing comparison: the same event stream run with
/// every user learning versus mice pinned to their first WiFi cell.
#[derive(Clone, Debug)]
pub struct MiceComparison {
    pub all_learning: RunMetrics,
    pub mice_to_wifi: RunMetrics,
}

impl MiceComparison {
    /// Throughput gain (percent) of running the algorithm for everyone
    /// relative to pinning mice to WiFi.
    pub fn gain_pct(&self) -> f64 {
        let a = self.all_learning.mean_throughput();
        let b = self.mice_to_wifi.mean_throughput();
        if b == 0.0 {
            return 0.0;
        }
        (a - b) / b * 100.0
    }
}

/// Run both mice-routing variants on identical arrival streams.
pub fn mice_policy_compare(config: &ScenarioConfig) -> Result<MiceComparison> {
    let mut all = config.clone();
    all.traffic.mice_to_wifi = false;
    let mut pinned = config.clone();
    pinned.traffic.mice_to_wifi = true;
    Ok(MiceComparison {
        all_learning: run_scenario(&all)?,
        mice_to_wifi: run_scenario(&pinned)?,
    })
}
