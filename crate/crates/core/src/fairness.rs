//! Alpha-fair objectives over wireless topologies, exhaustive and
//! local-search optimization, and local-optimality certification.
//!
//! An *allocation* assigns each user an index into her choice set
//! (0 = WiMAX, then her WiFi cells). The objective is the sum of
//! `G_alpha(throughput)` over users; alpha = 0 is total throughput,
//! alpha -> 1 proportional fairness (natural log), larger alpha more
//! egalitarian.

use rand::Rng;

use crate::error::{Error, Result};
use crate::rng::{salt, stream};
use crate::wireless::{CellModels, Topology, WIMAX_CELL};

/// `G_alpha(x) = x^(1-alpha) / (1-alpha)`, with `G_0(x) = x`,
/// `G_1(x) = ln x` (the continuity limit), and `G_2(x) = -1/x`.
/// Requires `x > 0` when `alpha >= 1`.
pub fn g_alpha(x: f64, alpha: f64) -> Result<f64> {
    if alpha < 0.0 {
        return Err(Error::Config(format!("alpha must be >= 0, got {alpha}")));
    }
    if alpha == 0.0 {
        return Ok(x);
    }
    if x <= 0.0 && alpha >= 1.0 {
        return Err(Error::NonPositiveThroughput { x, alpha });
    }
    if alpha == 1.0 {
        Ok(x.ln())
    } else {
        Ok(x.powf(1.0 - alpha) / (1.0 - alpha))
    }
}

/// Users connected to each cell under an allocation: `wifi_loads[c - 1]`
/// for WiFi cell `c`, plus the WiMAX members with their zones.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CellOccupancy {
    pub wifi_loads: Vec<usize>,
    pub wimax_members: Vec<usize>,
}

/// Compute per-cell occupancy from an allocation (choice indices).
pub fn occupancy(topology: &Topology, allocation: &[usize]) -> Result<CellOccupancy> {
    if allocation.len() != topology.n_users() {
        return Err(Error::Config(format!(
            "allocation lists {} users, topology has {}",
            allocation.len(),
            topology.n_users()
        )));
    }
    let mut wifi_loads = vec![0usize; topology.n_wifi];
    let mut wimax_members = Vec::new();
    for (u, &choice) in allocation.iter().enumerate() {
        let choices = topology.choice_set(u);
        let cell = *choices.get(choice).ok_or_else(|| {
            Error::Config(format!("user {u}: choice index {choice} out of range"))
        })?;
        if cell == WIMAX_CELL {
            wimax_members.push(u);
        } else {
            wifi_loads[cell - 1] += 1;
        }
    }
    Ok(CellOccupancy {
        wifi_loads,
        wimax_members,
    })
}

/// Per-user model throughputs under an allocation.
pub fn per_user_throughputs(
    topology: &Topology,
    models: &CellModels,
    allocation: &[usize],
) -> Result<Vec<f64>> {
    let occ = occupancy(topology, allocation)?;
    let wimax_load = occ.wimax_members.len();
    let mut out = Vec::with_capacity(topology.n_users());
    for (u, &choice) in allocation.iter().enumerate() {
        let cell = topology.choice_set(u)[choice];
        if cell == WIMAX_CELL {
            out.push(
                models
                    .wimax
                    .per_user_goodput(topology.users[u].zone, wimax_load),
            );
        } else {
            out.push(models.wifi.per_user_goodput(occ.wifi_loads[cell - 1]));
        }
    }
    Ok(out)
}

/// WiFi cell loads (cells `1..=n_wifi`) under an allocation.
pub fn wifi_loads(topology: &Topology, allocation: &[usize]) -> Result<Vec<usize>> {
    Ok(occupancy(topology, allocation)?.wifi_loads)
}

/// The alpha-fair objective: `sum_n G_alpha(throughput_n)`.
pub fn objective(
    topology: &Topology,
    models: &CellModels,
    allocation: &[usize],
    alpha: f64,
) -> Result<f64> {
    let mut total = 0.0;
    for u in per_user_throughputs(topology, models, allocation)? {
        total += g_alpha(u, alpha)?;
    }
    Ok(total)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Method {
    Exhaustive,
    LocalSearch,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Certificate {
    Global,
    Local,
}

/// Best allocation found, its objective, and how strong the guarantee is.
#[derive(Clone, Debug)]
pub struct OptimizationResult {
    pub allocation: Vec<usize>,
    pub objective: f64,
    pub method: Method,
    pub certificate: Certificate,
}

impl OptimizationResult {
    /// Plain-text report: allocation, per-user throughputs, objective,
    /// certificate.
    pub fn report(&self, topology: &Topology, models: &CellModels, alpha: f64) -> Result<String> {
        use std::fmt::Write;
        let mut s = String::new();
        let throughputs = per_user_throughputs(topology, models, &self.allocation)?;
        writeln!(s, "method: {:?}", self.method).unwrap();
        writeln!(s, "certificate: {:?}", self.certificate).unwrap();
        writeln!(s, "alpha: {alpha}").unwrap();
        writeln!(s, "objective: {:.6}", self.objective).unwrap();
        writeln!(s, "allocation (choice index per user): {:?}", self.allocation).unwrap();
        writeln!(s, "user, cell, throughput_mbps").unwrap();
        for (u, &choice) in self.allocation.iter().enumerate() {
            let cell = topology.choice_set(u)[choice];
            writeln!(s, "{u}, {cell}, {:.3}", throughputs[u]).unwrap();
        }
        Ok(s)
    }
}

/// Exhaustively enumerate every allocation (up to `limit` of them) and
/// return the global optimum; ties break toward the lexicographically
/// smallest allocation.
pub fn exhaustive_optimum(
    topology: &Topology,
    models: &CellModels,
    alpha: f64,
    limit: u128,
) -> Result<OptimizationResult> {
    let sizes: Vec<usize> = (0..topology.n_users())
        .map(|u| topology.choice_set(u).len())
        .collect();
    let space: u128 = sizes.iter().map(|&s| s as u128).product();
    if space > limit {
        return Err(Error::EnumerationTooLarge { size: space, limit });
    }
    let mut best: Option<(f64, Vec<usize>)> = None;
    let mut current = vec![0usize; sizes.len()];
    loop {
        let value = objective(topology, models, &current, alpha)?;
        match &best {
            Some((b, _)) if value <= *b => {}
            _ => best = Some((value, current.clone())),
        }
        // Mixed-radix increment, user 0 slowest: lexicographic order.
        let mut i = sizes.len();
        loop {
            if i == 0 {
                let (objective, allocation) = best.unwrap();
                return Ok(OptimizationResult {
                    allocation,
                    objective,
                    method: Method::Exhaustive,
                    certificate: Certificate::Global,
                });
            }
            i -= 1;
            current[i] += 1;
            if current[i] < sizes[i] {
                break;
            }
            current[i] = 0;
        }
    }
}

/// Outcome of the local-optimality scan.
#[derive(Clone, Debug)]
pub struct LocalOptReport {
    pub is_local_opt: bool,
    /// A strictly improving unilateral deviation, if one exists:
    /// `(user, new choice index, objective gain)`.
    pub improving: Option<(usize, usize, f64)>,
}

/// Strict-improvement threshold for deviation scans; float recomputation
/// noise sits many orders of magnitude below it.
const GAIN_TOL: f64 = 1e-9;

/// Check whether any single user can switch cells and strictly increase
/// the objective.
pub fn local_opt_check(
    topology: &Topology,
    models: &CellModels,
    allocation: &[usize],
    alpha: f64,
) -> Result<LocalOptReport> {
    let base = objective(topology, models, allocation, alpha)?;
    let mut trial = allocation.to_vec();
    for u in 0..topology.n_users() {
        let n_choices = topology.choice_set(u).len();
        for c in 0..n_choices {
            if c == allocation[u] {
                continue;
            }
            trial[u] = c;
            let value = objective(topology, models, &trial, alpha)?;
            if value > base + GAIN_TOL {
                return Ok(LocalOptReport {
                    is_local_opt: false,
                    improving: Some((u, c, value - base)),
                });
            }
        }
        trial[u] = allocation[u];
    }
    Ok(LocalOptReport {
        is_local_opt: true,
        improving: None,
    })
}

/// Best-improvement descent from a starting allocation; returns the local
/// optimum it settles in.
fn descend(
    topology: &Topology,
    models: &CellModels,
    mut allocation: Vec<usize>,
    alpha: f64,
) -> Result<(Vec<usize>, f64)> {
    let mut value = objective(topology, models, &allocation, alpha)?;
    loop {
        let mut best_move: Option<(usize, usize, f64)> = None;
        let mut trial = allocation.clone();
        for u in 0..topology.n_users() {
            for c in 0..topology.choice_set(u).len() {
                if c == allocation[u] {
                    continue;
                }
                trial[u] = c;
                let v = objective(topology, models, &trial, alpha)?;
                if v > value + GAIN_TOL
                    && best_move.map_or(true, |(_, _, b)| v - value > b)
                {
                    best_move = Some((u, c, v - value));
                }
            }
            trial[u] = allocation[u];
        }
        match best_move {
            Some((u, c, gain)) => {
                allocation[u] = c;
                value += gain;
            }
            None => return Ok((allocation, value)),
        }
    }
}

/// Multi-start deviation descent: `starts` random initial allocations,
/// each descended to a local optimum; the best is returned with a `Local`
/// certificate. Deterministic in `seed`.
pub fn multistart_local_search(
    topology: &Topology,
    models: &CellModels,
    alpha: f64,
    starts: usize,
    seed: u64,
) -> Result<OptimizationResult> {
    let mut rng = stream(seed, salt::SEARCH);
    let mut best: Option<(f64, Vec<usize>)> = None;
    for _ in 0..starts.max(1) {
        let start: Vec<usize> = (0..topology.n_users())
            .map(|u| rng.random_range(0..topology.choice_set(u).len()))
            .collect();
        let (alloc, value) = descend(topology, models, start, alpha)?;
        match &best {
            Some((b, a)) if value < *b || (value == *b && *a <= alloc) => {}
            _ => best = Some((value, alloc)),
        }
    }
    let (objective, allocation) = best.unwrap();
    Ok(OptimizationResult {
        allocation,
        objective,
        method: Method::LocalSearch,
        certificate: Certificate::Local,
    })
}
