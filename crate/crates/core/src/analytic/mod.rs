//! Closed-form layer: conditional scheduling and PHY success
//! probabilities, expected BS loading, and the approximate average
//! successful transmission probability they compose into.

mod beta;
mod pmf;

pub use beta::{beta_factor, beta_factor_full_plane};
pub use pmf::{
    exact_success_small, load_pmf, ExactSuccess, LoadPmf, DEFAULT_K_MAX, DEFAULT_TAIL_EPS,
};

use crate::error::{Error, Result};
use crate::model::{CacheAllocation, LoadingVector, Popularity, SystemConfig};

/// Mean extra users per tagged cell: the first moment of the
/// user-weighted normalized cell size, (3.5^4.5/Γ(4.5)) z^3.5 e^(−3.5z),
/// which is 4.5/3.5.
pub(crate) const CELL_LOAD_FACTOR: f64 = 9.0 / 7.0;

/// Per-file and aggregate approximate success probabilities together with
/// the intermediates they were built from.
#[derive(Debug, Clone)]
pub struct AnalyticReport {
    /// Approximate success probability per requested file.
    pub per_file_p: Vec<f64>,
    /// Popularity-weighted aggregate.
    pub aggregate_p: f64,
    /// Effective served load at the expected loading vector.
    pub g_tilde: f64,
    /// Interference factor at that load.
    pub beta: f64,
    /// Expected loading vector.
    pub k_tilde: Vec<f64>,
}

/// Conditional scheduling probability for a user requesting file `l0`
/// given the loading vector: 1 for cached files, otherwise the backhaul
/// admission ratio min{B_B / Σ_(uncached) k_l, 1}. No uncached demand at
/// all means no contention, so the empty ratio counts as 1.
pub fn sched_prob(k: &LoadingVector, l0: usize, q: &CacheAllocation, backhaul_files: u32) -> f64 {
    debug_assert_eq!(k.counts.len(), q.q.len());
    if q.q[l0] != 0 {
        return 1.0;
    }
    let uncached_demand: u64 = k
        .counts
        .iter()
        .zip(&q.q)
        .filter(|(_, &ql)| ql == 0)
        .map(|(&kl, _)| kl as u64)
        .sum();
    if uncached_demand == 0 {
        1.0
    } else {
        (backhaul_files as f64 / uncached_demand as f64).min(1.0)
    }
}

/// Number of users a BS with loading `k` serves simultaneously:
/// all cached demand plus backhaul demand capped at B_B.
pub fn effective_load(k: &LoadingVector, q: &CacheAllocation, backhaul_files: u32) -> f64 {
    debug_assert_eq!(k.counts.len(), q.q.len());
    let mut cached: u64 = 0;
    let mut uncached: u64 = 0;
    for (&kl, &ql) in k.counts.iter().zip(&q.q) {
        if ql != 0 {
            cached += kl as u64;
        } else {
            uncached += kl as u64;
        }
    }
    cached as f64 + (uncached as f64).min(backhaul_files as f64)
}

/// Conditional PHY success probability for file `l0` at served load `g0`:
/// r/(r + β(M, g₀)) with r the serving-to-interferer density ratio,
/// which is q_(l0) for cached files and M for uncached ones.
pub fn phy_success(l0: usize, q: &CacheAllocation, g0: f64, cfg: &SystemConfig) -> Result<f64> {
    let m = q.num_groups;
    let ratio = if q.q[l0] == 0 {
        m as f64
    } else {
        q.q[l0] as f64
    };
    let beta = beta_factor(m, g0, cfg)?;
    Ok(success_from_ratio(ratio, beta))
}

#[inline]
pub(crate) fn success_from_ratio(ratio: f64, beta: f64) -> f64 {
    if beta.is_infinite() {
        0.0
    } else {
        ratio / (ratio + beta)
    }
}

/// Expected loading vector at the tagged BS: k̃_l = ρ_l (1 + (9/7) λᵘ/λᵇ).
pub fn expected_loading(cfg: &SystemConfig, rho: &Popularity) -> Vec<f64> {
    let factor = 1.0 + CELL_LOAD_FACTOR * cfg.user_density / cfg.bs_density;
    rho.probs().iter().map(|&p| p * factor).collect()
}

/// Approximate average successful transmission probability for an integer
/// cache storage allocation, obtained by substituting the expected
/// loading for the random loading vector.
pub fn approx_success(
    q: &CacheAllocation,
    cfg: &SystemConfig,
    rho: &Popularity,
) -> Result<AnalyticReport> {
    if q.q.len() != rho.len() {
        return Err(Error::InvalidConfig(format!(
            "allocation length {} does not match popularity length {}",
            q.q.len(),
            rho.len()
        )));
    }
    let report = crate::model::validate_allocation(
        q,
        &SystemConfig {
            library_size: q.q.len(),
            ..cfg.clone()
        },
    );
    if !report.is_feasible() {
        return Err(Error::InfeasibleAllocation(report.violations.join("; ")));
    }
    let q_real: Vec<f64> = q.q.iter().map(|&v| v as f64).collect();
    approx_success_real(q.num_groups, &q_real, cfg, rho)
}

/// Real-valued core of [`approx_success`], shared with the optimizer's
/// relaxed evaluations. Entries with q_l > 0 count as cached.
pub(crate) fn approx_success_real(
    num_groups: u32,
    q: &[f64],
    cfg: &SystemConfig,
    rho: &Popularity,
) -> Result<AnalyticReport> {
    let k_tilde = expected_loading(cfg, rho);
    let mut cached_load = 0.0;
    let mut uncached_load = 0.0;
    for (&ql, &kl) in q.iter().zip(&k_tilde) {
        if ql > 0.0 {
            cached_load += kl;
        } else {
            uncached_load += kl;
        }
    }
    let b_b = cfg.backhaul_files as f64;
    let g_tilde = cached_load + uncached_load.min(b_b);
    let beta = beta_factor(num_groups, g_tilde, cfg)?;
    let sched_uncached = if uncached_load == 0.0 {
        1.0
    } else {
        (b_b / uncached_load).min(1.0)
    };
    let m = num_groups as f64;
    let per_file_p: Vec<f64> = q
        .iter()
        .map(|&ql| {
            if ql > 0.0 {
                success_from_ratio(ql, beta)
            } else {
                success_from_ratio(m, beta) * sched_uncached
            }
        })
        .collect();
    let aggregate_p = rho
        .probs()
        .iter()
        .zip(&per_file_p)
        .map(|(&r, &p)| r * p)
        .sum();
    Ok(AnalyticReport {
        per_file_p,
        aggregate_p,
        g_tilde,
        beta,
        k_tilde,
    })
}
