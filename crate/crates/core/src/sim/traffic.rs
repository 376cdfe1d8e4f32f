//! Traffic classes, the arrival process, and the real-time utility.

use rand::Rng;
use rand_distr::{Distribution, Exp, Poisson};

use crate::error::{Error, Result};
use crate::rng::{salt, stream};
use crate::sim::{RealTimeConfig, TrafficConfig};
use crate::wireless::{Topology, UserSite, N_ZONES};

/// Workload/utility class of a user.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum TrafficClass {
    /// Persistent elastic user (static scenarios).
    Elastic,
    /// Threshold utility `0` below, `1 - exp(-u)` above.
    RealTime { threshold: f64 },
    /// Short transfer.
    Mouse,
    /// Long transfer (mean size `size_ratio` times the mouse mean).
    Elephant,
}

impl TrafficClass {
    pub fn is_mouse(&self) -> bool {
        matches!(self, TrafficClass::Mouse)
    }
}

/// Utility of a real-time user: zero below the threshold, `1 - exp(-u)`
/// at or above it.
pub fn real_time_utility(u: f64, threshold: f64) -> f64 {
    if u < threshold {
        0.0
    } else {
        1.0 - (-u).exp()
    }
}

/// One arriving user: when, where, what class, and how much to transfer.
#[derive(Clone, Debug)]
pub struct ArrivalEvent {
    pub t: u64,
    pub site: UserSite,
    pub class: TrafficClass,
    pub workload: f64,
}

/// Pre-generate the Poisson arrival stream over `1..=horizon` iterations.
/// Classes are drawn from the traffic mix (real-time first, then mice vs
/// elephants), workloads are exponential with the class mean. Fixed seed,
/// fixed stream.
pub fn traffic_mix_process(
    rate: f64,
    traffic: &TrafficConfig,
    real_time: &RealTimeConfig,
    n_wifi: usize,
    choices_per_user: usize,
    seed: u64,
    horizon: u64,
) -> Result<Vec<ArrivalEvent>> {
    if rate < 0.0 {
        return Err(Error::Config("arrival rate must be >= 0".into()));
    }
    let mut events = Vec::new();
    if rate == 0.0 {
        return Ok(events);
    }
    let mut rng = stream(seed, salt::ARRIVALS);
    let poisson =
        Poisson::new(rate).map_err(|e| Error::Config(format!("arrival rate: {e}")))?;
    for t in 1..=horizon {
        let count = poisson.sample(&mut rng) as u64;
        for _ in 0..count {
            events.push(sample_arrival(
                t,
                traffic,
                real_time,
                n_wifi,
                choices_per_user,
                &mut rng,
            )?);
        }
    }
    Ok(events)
}

pub(crate) fn sample_arrival<R: Rng>(
    t: u64,
    traffic: &TrafficConfig,
    real_time: &RealTimeConfig,
    n_wifi: usize,
    choices_per_user: usize,
    rng: &mut R,
) -> Result<ArrivalEvent> {
    let class = sample_class(traffic, real_time, rng);
    let workload = sample_workload(&class, traffic, rng)?;
    let site = sample_site_like_topology(n_wifi, choices_per_user, rng)?;
    Ok(ArrivalEvent {
        t,
        site,
        class,
        workload,
    })
}

pub(crate) fn sample_class<R: Rng>(
    traffic: &TrafficConfig,
    real_time: &RealTimeConfig,
    rng: &mut R,
) -> TrafficClass {
    if real_time.fraction > 0.0 && rng.random::<f64>() < real_time.fraction {
        return TrafficClass::RealTime {
            threshold: real_time.threshold,
        };
    }
    if traffic.mice_fraction > 0.0 && rng.random::<f64>() < traffic.mice_fraction {
        TrafficClass::Mouse
    } else {
        TrafficClass::Elephant
    }
}

pub(crate) fn sample_workload<R: Rng>(
    class: &TrafficClass,
    traffic: &TrafficConfig,
    rng: &mut R,
) -> Result<f64> {
    let mean = match class {
        TrafficClass::Mouse => traffic.workload_mean / traffic.size_ratio,
        _ => traffic.workload_mean,
    };
    let exp = Exp::new(1.0 / mean).map_err(|e| Error::Config(format!("workload mean: {e}")))?;
    Ok(exp.sample(rng))
}

/// Same site distribution as the topology generator, drawn from the
/// arrivals stream.
fn sample_site_like_topology<R: Rng>(
    n_wifi: usize,
    choices_per_user: usize,
    rng: &mut R,
) -> Result<UserSite> {
    if n_wifi + 1 < choices_per_user {
        return Err(Error::Config(format!(
            "cannot draw {} distinct WiFi cells from {n_wifi}",
            choices_per_user.saturating_sub(1)
        )));
    }
    let zone = rng.random_range(0..N_ZONES);
    let mut pool: Vec<usize> = (1..=n_wifi).collect();
    let k = choices_per_user - 1;
    for i in 0..k {
        let j = rng.random_range(i..pool.len());
        pool.swap(i, j);
    }
    Ok(UserSite {
        zone,
        wifi: pool[..k].to_vec(),
    })
}

/// Sample classes/workloads for the initial population of a dynamic run.
pub(crate) fn initial_population<R: Rng>(
    topology: &Topology,
    traffic: &TrafficConfig,
    real_time: &RealTimeConfig,
    dynamic: bool,
    rng: &mut R,
) -> Result<Vec<(TrafficClass, Option<f64>)>> {
    let mut out = Vec::with_capacity(topology.n_users());
    for _ in 0..topology.n_users() {
        if dynamic {
            let class = sample_class(traffic, real_time, rng);
            let workload = sample_workload(&class, traffic, rng)?;
            out.push((class, Some(workload)));
        } else {
            let class = sample_class(traffic, real_time, rng);
            // Persistent users: real-time keeps its utility, everything
            // else is plain elastic.
            let class = match class {
                TrafficClass::RealTime { threshold } => TrafficClass::RealTime { threshold },
                _ => TrafficClass::Elastic,
            };
            out.push((class, None));
        }
    }
    Ok(out)
}
