//! Throughput models for WiFi (TCP over 802.11) and WiMAX (OFDMA zone
//! sharing), topology generation, and station-side reward computation.
//!
//! All throughputs are in Mb/s and times in ms. A topology has one WiMAX
//! cell (id 0) whose users sit in one of eight modulation zones, plus WiFi
//! cells with ids `1..=n_wifi`. Stations compute repercussion utilities
//! from their own cell's load alone, so the computation stays fully
//! distributed.

use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fairness::g_alpha;
use crate::game::{AllocationInstance, CompanionGame, ResourceId};
use crate::rng::{salt, stream};

/// Cell id of the WiMAX cell.
pub const WIMAX_CELL: usize = 0;
/// Number of WiMAX modulation/coding zones.
pub const N_ZONES: usize = 8;

/// Single-user TCP goodputs (Mb/s) per WiMAX zone, best zone first.
pub const ZONE_RATES: [f64; N_ZONES] = [9.58, 8.88, 6.80, 4.50, 3.37, 2.21, 1.65, 1.08];

/// Modulation/coding labels for the eight zones.
pub const ZONE_LABELS: [&str; N_ZONES] = [
    "QAM64 3/4",
    "QAM64 2/3",
    "QAM16 3/4",
    "QAM16 1/2",
    "QPSK 3/4",
    "QPSK 1/2",
    "BPSK 3/4",
    "BPSK 1/2",
];

/// TCP packet size used by the analytic WiFi formula (bits).
pub const L_TCP_BITS: f64 = 8000.0;
/// Raw transmission time of a TCP data packet (ms).
pub const T_DATA_MS: f64 = 1.785;
/// Raw transmission time of a TCP ACK (ms).
pub const T_ACK_MS: f64 = 1.091;

/// Backoff/collision times as a function of the load count: returns
/// `(T_TBO, T_W)` in ms.
pub type CollisionTimes = Arc<dyn Fn(usize) -> (f64, f64) + Send + Sync>;

#[derive(Clone)]
enum WifiKind {
    /// Calibration table of per-user goodputs for small loads, extended by
    /// a geometric decline of the aggregate beyond the table.
    Table { per_user: Vec<f64>, decline: f64 },
    /// Analytic mode: cycle-time formula with pluggable collision times.
    /// Best-effort, for experimentation; the table is authoritative.
    Formula { collision: CollisionTimes },
}

/// Per-user WiFi goodput as a function of the cell's load count.
#[derive(Clone)]
pub struct WifiModel {
    kind: WifiKind,
}

impl std::fmt::Debug for WifiModel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match &self.kind {
            WifiKind::Table { per_user, decline } => f
                .debug_struct("WifiModel::Table")
                .field("per_user", per_user)
                .field("decline", decline)
                .finish(),
            WifiKind::Formula { .. } => f.debug_struct("WifiModel::Formula").finish(),
        }
    }
}

impl Default for WifiModel {
    fn default() -> Self {
        Self::table(vec![2.245, 1.225, 0.824], 0.97).expect("default table is valid")
    }
}

impl WifiModel {
    /// Calibrated table of per-user goodputs for loads `1..=len`; beyond
    /// it, the aggregate declines geometrically by `decline` per user.
    pub fn table(per_user: Vec<f64>, decline: f64) -> Result<Self> {
        if per_user.is_empty() || per_user.iter().any(|&v| v <= 0.0) {
            return Err(Error::Config("WiFi table needs positive entries".into()));
        }
        if !(0.0 < decline && decline <= 1.0) {
            return Err(Error::Config("WiFi decline must be in (0, 1]".into()));
        }
        if per_user.windows(2).any(|w| w[1] >= w[0]) {
            return Err(Error::Config(
                "per-user WiFi goodput must strictly decrease with load".into(),
            ));
        }
        Ok(Self {
            kind: WifiKind::Table { per_user, decline },
        })
    }

    /// Analytic mode with explicit collision times.
    pub fn formula(collision: CollisionTimes) -> Self {
        Self {
            kind: WifiKind::Formula { collision },
        }
    }

    /// Analytic mode with a simple collision model: per-packet collision
    /// probability `1 - (1 - tau)^(p-1)`, a constant mean backoff, and a
    /// collision time that scales with the odds of colliding.
    pub fn formula_simple(tau: f64, t_backoff_ms: f64, t_collision_ms: f64) -> Self {
        Self::formula(Arc::new(move |p| {
            let pc = 1.0 - (1.0 - tau).powi(p.saturating_sub(1) as i32);
            let t_w = if pc < 1.0 {
                pc / (1.0 - pc) * t_collision_ms
            } else {
                f64::INFINITY
            };
            (t_backoff_ms, t_w)
        }))
    }

    /// Per-user goodput (Mb/s) when `p >= 1` users share the cell.
    pub fn per_user_goodput(&self, p: usize) -> f64 {
        assert!(p >= 1, "load count must be at least 1");
        match &self.kind {
            WifiKind::Table { per_user, decline } => {
                if p <= per_user.len() {
                    per_user[p - 1]
                } else {
                    let last = per_user.len();
                    let aggregate =
                        per_user[last - 1] * last as f64 * decline.powi((p - last) as i32);
                    aggregate / p as f64
                }
            }
            WifiKind::Formula { collision } => {
                let (t_tbo, t_w) = collision(p);
                let cycle_ms = T_DATA_MS + T_ACK_MS + 2.0 * t_tbo + 2.0 * t_w;
                L_TCP_BITS / (p as f64 * cycle_ms) / 1000.0
            }
        }
    }

    /// Aggregate cell goodput at load `p`.
    pub fn aggregate_goodput(&self, p: usize) -> f64 {
        p as f64 * self.per_user_goodput(p)
    }
}

/// WiFi per-user goodput; identical to [`WifiModel::per_user_goodput`].
pub fn wifi_goodput(model: &WifiModel, p: usize) -> f64 {
    model.per_user_goodput(p)
}

/// Single-user goodput per zone; per-user goodput divides it by the load
/// (carrier fair-sharing, like processor sharing).
#[derive(Clone, Debug)]
pub struct WimaxModel {
    zone_rates: Vec<f64>,
}

impl Default for WimaxModel {
    fn default() -> Self {
        Self {
            zone_rates: ZONE_RATES.to_vec(),
        }
    }
}

impl WimaxModel {
    pub fn new(zone_rates: Vec<f64>) -> Result<Self> {
        if zone_rates.is_empty() || zone_rates.iter().any(|&r| r <= 0.0) {
            return Err(Error::Config("zone rates must be positive".into()));
        }
        Ok(Self { zone_rates })
    }

    pub fn n_zones(&self) -> usize {
        self.zone_rates.len()
    }

    pub fn zone_rate(&self, zone: usize) -> f64 {
        self.zone_rates[zone]
    }

    /// Per-user goodput for a user in `zone` when `p` users share the cell.
    pub fn per_user_goodput(&self, zone: usize, p: usize) -> f64 {
        assert!(p >= 1, "load count must be at least 1");
        self.zone_rates[zone] / p as f64
    }
}

/// WiMAX per-user goodput; identical to [`WimaxModel::per_user_goodput`].
pub fn wimax_goodput(model: &WimaxModel, zone: usize, p: usize) -> f64 {
    model.per_user_goodput(zone, p)
}

/// Both cell models, bundled for call sites that need either kind.
#[derive(Clone, Debug, Default)]
pub struct CellModels {
    pub wifi: WifiModel,
    pub wimax: WimaxModel,
}

impl CellModels {
    /// Throughput of `member` (with her zone) in a cell of `p` users.
    fn member_throughput(&self, cell: usize, zone: usize, p: usize) -> f64 {
        if cell == WIMAX_CELL {
            self.wimax.per_user_goodput(zone, p)
        } else {
            self.wifi.per_user_goodput(p)
        }
    }
}

/// One user's candidate cells: her WiMAX zone plus the WiFi cells she can
/// reach. Her choice set is the WiMAX cell followed by the listed WiFi
/// cells, in order.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct UserSite {
    pub zone: usize,
    pub wifi: Vec<usize>,
}

impl UserSite {
    /// Choice set as cell ids (index 0 is the WiMAX cell).
    pub fn choices(&self) -> Vec<usize> {
        let mut v = Vec::with_capacity(self.wifi.len() + 1);
        v.push(WIMAX_CELL);
        v.extend_from_slice(&self.wifi);
        v
    }
}

/// A WiMAX cell with zoned users plus WiFi cells `1..=n_wifi`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Topology {
    pub n_wifi: usize,
    pub users: Vec<UserSite>,
}

impl Topology {
    pub fn n_users(&self) -> usize {
        self.users.len()
    }

    /// Choice set of `user` as cell ids.
    pub fn choice_set(&self, user: usize) -> Vec<usize> {
        self.users[user].choices()
    }

    /// Validate zone and cell-id ranges and per-user distinctness.
    pub fn validate(&self) -> Result<()> {
        for (u, site) in self.users.iter().enumerate() {
            if site.zone >= N_ZONES {
                return Err(Error::Topology(format!(
                    "user {u}: zone {} out of range",
                    site.zone
                )));
            }
            let mut seen = std::collections::HashSet::new();
            for &c in &site.wifi {
                if c == WIMAX_CELL || c > self.n_wifi {
                    return Err(Error::Topology(format!(
                        "user {u}: WiFi cell id {c} out of range 1..={}",
                        self.n_wifi
                    )));
                }
                if !seen.insert(c) {
                    return Err(Error::Topology(format!(
                        "user {u}: duplicate cell {c} in choice set"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Generate a topology: each user gets a uniform zone and
    /// `choices_per_user - 1` distinct WiFi cells drawn uniformly.
    /// Deterministic in `seed`.
    pub fn generate(
        n_users: usize,
        n_wifi: usize,
        choices_per_user: usize,
        seed: u64,
    ) -> Result<Topology> {
        if choices_per_user < 1 {
            return Err(Error::Config("choices_per_user must be at least 1".into()));
        }
        if n_wifi + 1 < choices_per_user {
            return Err(Error::Config(format!(
                "cannot draw {} distinct WiFi cells from {n_wifi}",
                choices_per_user - 1
            )));
        }
        let mut rng = stream(seed, salt::TOPOLOGY);
        let users = (0..n_users)
            .map(|_| sample_site(n_wifi, choices_per_user, &mut rng))
            .collect();
        Ok(Topology { n_wifi, users })
    }

    pub fn from_toml_str(text: &str) -> Result<Topology> {
        let topo: Topology =
            toml::from_str(text).map_err(|e| Error::Parse(format!("topology: {e}")))?;
        topo.validate()?;
        Ok(topo)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Parse(format!("serialize: {e}")))
    }

    /// The induced allocation game: payoffs are `G_alpha` of each user's
    /// model throughput, evaluated lazily from cell loads.
    pub fn game(&self, models: &CellModels, alpha: f64) -> Result<AllocationInstance> {
        let action_sets: Vec<Vec<ResourceId>> =
            (0..self.n_users()).map(|u| self.choice_set(u)).collect();
        let zones: Vec<usize> = self.users.iter().map(|s| s.zone).collect();
        let models = models.clone();
        AllocationInstance::from_oracle(action_sets, move |n, load| {
            let p = load.count();
            let cell = load.resource();
            let u = models.member_throughput(cell, zones[n], p);
            g_alpha(u, alpha).expect("model throughputs are positive")
        })
    }

    /// The companion game with station-computed repercussion rewards built
    /// from `G_alpha` of the throughputs.
    pub fn companion_game(&self, models: &CellModels, alpha: f64) -> Result<CompanionGame> {
        let base = self.game(models, alpha)?;
        let action_sets: Vec<Vec<ResourceId>> =
            (0..self.n_users()).map(|u| self.choice_set(u)).collect();
        let zones: Vec<usize> = self.users.iter().map(|s| s.zone).collect();
        let models = models.clone();
        let rewards = AllocationInstance::from_oracle(action_sets, move |n, load| {
            let members: Vec<CellMember> = load
                .players()
                .map(|u| CellMember {
                    user: u,
                    zone: zones[u],
                })
                .collect();
            let state = CellState {
                cell: load.resource(),
                members,
            };
            let idx = state.members.iter().position(|m| m.user == n).unwrap();
            state.alpha_rewards(&models, alpha).expect("positive throughputs")[idx]
        })?;
        Ok(CompanionGame::from_parts(base, rewards, 0.0))
    }
}

fn sample_site<R: Rng>(n_wifi: usize, choices_per_user: usize, rng: &mut R) -> UserSite {
    let zone = rng.random_range(0..N_ZONES);
    let mut pool: Vec<usize> = (1..=n_wifi).collect();
    let k = choices_per_user - 1;
    for i in 0..k {
        let j = rng.random_range(i..pool.len());
        pool.swap(i, j);
    }
    UserSite {
        zone,
        wifi: pool[..k].to_vec(),
    }
}

/// One connected user within a cell; the zone matters only in the WiMAX
/// cell.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CellMember {
    pub user: usize,
    pub zone: usize,
}

/// A cell and its connected users.
#[derive(Clone, Debug)]
pub struct CellState {
    pub cell: usize,
    pub members: Vec<CellMember>,
}

impl CellState {
    pub fn load(&self) -> usize {
        self.members.len()
    }

    /// Per-member throughputs at the current load.
    pub fn throughputs(&self, models: &CellModels) -> Vec<f64> {
        let p = self.load();
        self.members
            .iter()
            .map(|m| models.member_throughput(self.cell, m.zone, p))
            .collect()
    }

    /// Station-side repercussion utilities: each member's payoff minus the
    /// payoff gain her departure would grant the rest of the cell. Needs
    /// nothing beyond this cell's own state.
    pub fn rewards(&self, models: &CellModels) -> Vec<f64> {
        self.alpha_rewards(models, 0.0)
            .expect("alpha = 0 never fails on positive throughputs")
    }

    /// Repercussion utilities built from `G_alpha` of the throughputs.
    pub fn alpha_rewards(&self, models: &CellModels, alpha: f64) -> Result<Vec<f64>> {
        self.rewards_with(models, |_, u| g_alpha(u, alpha))
    }

    /// Repercussion utilities under per-member utility transforms of the
    /// throughput (mixed traffic classes share a cell).
    pub fn rewards_with<F>(&self, models: &CellModels, utility: F) -> Result<Vec<f64>>
    where
        F: Fn(usize, f64) -> Result<f64>,
    {
        let p = self.load();
        let full: Vec<f64> = self
            .members
            .iter()
            .map(|m| utility(m.user, models.member_throughput(self.cell, m.zone, p)))
            .collect::<Result<_>>()?;
        if p == 1 {
            return Ok(full);
        }
        let reduced: Vec<f64> = self
            .members
            .iter()
            .map(|m| utility(m.user, models.member_throughput(self.cell, m.zone, p - 1)))
            .collect::<Result<_>>()?;
        let mut out = Vec::with_capacity(p);
        for j in 0..p {
            let externality: f64 = (0..p)
                .filter(|&m| m != j)
                .map(|m| reduced[m] - full[m])
                .sum();
            out.push(full[j] - externality);
        }
        Ok(out)
    }
}

/// Station rewards for a cell; identical to [`CellState::rewards`].
pub fn station_rewards(state: &CellState, models: &CellModels) -> Vec<f64> {
    state.rewards(models)
}

/// Station rewards under the `G_alpha` utility; identical to
/// [`CellState::alpha_rewards`].
pub fn alpha_station_rewards(state: &CellState, models: &CellModels, alpha: f64) -> Result<Vec<f64>> {
    state.alpha_rewards(models, alpha)
}

/// Conservative `(lo, hi)` bounds on station rewards over loads up to
/// `max_users`, used to calibrate reward scaling. Scans WiFi loads exactly
/// and WiMAX zone-mix extremes.
pub fn reward_bounds(models: &CellModels, alpha: f64, max_users: usize) -> Result<(f64, f64)> {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    let mut push = |v: f64| {
        lo = lo.min(v);
        hi = hi.max(v);
    };
    // WiFi: every member sees the same throughput.
    for p in 1..=max_users.max(1) {
        let full = g_alpha(models.wifi.per_user_goodput(p), alpha)?;
        if p == 1 {
            push(full);
        } else {
            let reduced = g_alpha(models.wifi.per_user_goodput(p - 1), alpha)?;
            push(full - (p as f64 - 1.0) * (reduced - full));
        }
    }
    // WiMAX: extremes are hit when the member and the rest sit in the best
    // or worst zones.
    let rates = [
        models
            .wimax
            .zone_rates
            .iter()
            .cloned()
            .fold(f64::INFINITY, f64::min),
        models
            .wimax
            .zone_rates
            .iter()
            .cloned()
            .fold(f64::NEG_INFINITY, f64::max),
    ];
    for p in 1..=max_users.max(1) {
        for &own in &rates {
            if p == 1 {
                push(g_alpha(own, alpha)?);
                continue;
            }
            for &other in &rates {
                let full = g_alpha(own / p as f64, alpha)?;
                let others_full = g_alpha(other / p as f64, alpha)?;
                let others_reduced = g_alpha(other / (p as f64 - 1.0), alpha)?;
                push(full - (p as f64 - 1.0) * (others_reduced - others_full));
            }
        }
    }
    Ok((lo, hi))
}
