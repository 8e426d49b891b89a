//! Per-file loading distributions at the tagged BS and the exact
//! small-instance success probability built from them.
//!
//! The per-file counts mix a Poisson demand over the cell with the
//! user-weighted cell-size density (3.5^4.5/Γ(4.5)) z^3.5 e^(−3.5z),
//! which integrates to negative-binomial-shaped marginals. Both marginal
//! families are evaluated in log space from log-Gamma ratios so counts
//! well beyond 100 stay finite.

use statrs::function::gamma::ln_gamma;

use super::beta::beta_factor;
use super::success_from_ratio;
use crate::error::{Error, Result};
use crate::model::{build_placement, CacheAllocation, Popularity, SystemConfig};

const SHAPE: f64 = 3.5;
const SHAPE_P1: f64 = 4.5;

/// Default truncation bound for the per-file count distributions.
pub const DEFAULT_K_MAX: usize = 64;
/// Default allowed tail mass beyond the truncation bound.
pub const DEFAULT_TAIL_EPS: f64 = 1e-6;

/// ln of the normalizing constant 3.5^4.5 / Γ(4.5).
fn ln_norm_const() -> f64 {
    SHAPE_P1 * SHAPE.ln() - ln_gamma(SHAPE_P1)
}

/// Marginal count distribution for the file requested by the tagged user:
/// the user itself contributes one count, so the support starts at 1.
/// `r` is the demand-to-supply density ratio x/y.
fn psi_shifted(r: f64, k: usize) -> f64 {
    if k == 0 {
        return 0.0;
    }
    if r == 0.0 {
        return if k == 1 { 1.0 } else { 0.0 };
    }
    let kf = (k - 1) as f64;
    let ln_p = ln_norm_const() + kf * r.ln() - ln_gamma(kf + 1.0) + ln_gamma(kf + SHAPE_P1)
        - (kf + SHAPE_P1) * (r + SHAPE).ln();
    ln_p.exp()
}

/// Marginal count distribution for files the tagged user did not request.
fn psi_plain(r: f64, k: usize) -> f64 {
    if r == 0.0 {
        return if k == 0 { 1.0 } else { 0.0 };
    }
    let kf = k as f64;
    let ln_p = ln_norm_const() + kf * r.ln() - ln_gamma(kf + 1.0) + ln_gamma(kf + SHAPE_P1)
        - (kf + SHAPE_P1) * (r + SHAPE).ln();
    ln_p.exp()
}

fn truncated(pmf: impl Fn(usize) -> f64, k_max: usize) -> (Vec<f64>, f64) {
    let values: Vec<f64> = (0..=k_max).map(pmf).collect();
    let mass: f64 = values.iter().sum();
    (values, (1.0 - mass).max(0.0))
}

/// Truncated per-file count distributions at the tagged BS, conditioned
/// on the tagged user requesting file `l0` and its serving BS belonging
/// to group `m0`.
#[derive(Debug, Clone)]
pub struct LoadPmf {
    /// `per_file[l][k]` = Pr[K_l = k], k = 0..=k_max.
    pub per_file: Vec<Vec<f64>>,
    pub k_max: usize,
    /// Probability mass beyond `k_max` for each file.
    pub tail: Vec<f64>,
}

/// Builds the five-case conditional marginals:
/// the tagged file gets the shifted distribution against its serving
/// density (q_l λᵇ/M if cached, λᵇ otherwise); other cached files load
/// the BS only when group `m0` stores them; other uncached files always
/// contribute backhaul demand.
pub fn load_pmf(
    cfg: &SystemConfig,
    rho: &Popularity,
    alloc: &CacheAllocation,
    l0: usize,
    m0: u32,
    k_max: usize,
    tail_eps: f64,
) -> Result<LoadPmf> {
    if k_max < 1 {
        return Err(Error::InvalidConfig("k_max must be at least 1".into()));
    }
    if l0 >= rho.len() || alloc.q.len() != rho.len() {
        return Err(Error::InvalidConfig("file index out of range".into()));
    }
    if m0 >= alloc.num_groups {
        return Err(Error::InvalidConfig("group index out of range".into()));
    }
    let placement = build_placement(alloc, cfg.cache_files)?;
    let m = alloc.num_groups as f64;
    let mut per_file = Vec::with_capacity(rho.len());
    let mut tails = Vec::with_capacity(rho.len());
    for (l, &p) in rho.probs().iter().enumerate() {
        let ql = alloc.q[l];
        let demand = cfg.user_density * p;
        let (pmf, tail) = if l == l0 {
            let supply = if ql != 0 {
                ql as f64 * cfg.bs_density / m
            } else {
                cfg.bs_density
            };
            truncated(|k| psi_shifted(demand / supply, k), k_max)
        } else if ql != 0 {
            if placement.group_caches(m0, l) {
                let supply = ql as f64 * cfg.bs_density / m;
                truncated(|k| psi_plain(demand / supply, k), k_max)
            } else {
                // group m0 does not store file l, so nobody requests it here
                let mut point = vec![0.0; k_max + 1];
                point[0] = 1.0;
                (point, 0.0)
            }
        } else {
            truncated(|k| psi_plain(demand / cfg.bs_density, k), k_max)
        };
        if tail > tail_eps {
            return Err(Error::TruncationTail {
                tail,
                limit: tail_eps,
            });
        }
        per_file.push(pmf);
        tails.push(tail);
    }
    Ok(LoadPmf {
        per_file,
        k_max,
        tail: tails,
    })
}

/// Exact small-instance success probability plus the truncation error
/// bound it was computed under.
#[derive(Debug, Clone, Copy)]
pub struct ExactSuccess {
    pub p: f64,
    /// Upper bound on the probability mass discarded by truncation; the
    /// untruncated value lies within this of `p`.
    pub tail_bound: f64,
}

const EXACT_MAX_LIBRARY: usize = 10;

/// Success probability marginalized over the full loading distribution:
/// per tagged file, average over the serving group, convolve the cached
/// and uncached per-file marginals, and compose the scheduling and PHY
/// terms on the resulting (served load, backhaul demand) distribution.
///
/// Deliberately limited to L ≤ 10 files; this is a validation oracle,
/// not a production path.
pub fn exact_success_small(
    cfg: &SystemConfig,
    rho: &Popularity,
    alloc: &CacheAllocation,
    k_max: usize,
    tail_eps: f64,
) -> Result<ExactSuccess> {
    let l_total = rho.len();
    if l_total > EXACT_MAX_LIBRARY {
        return Err(Error::InvalidConfig(format!(
            "exact evaluation supports at most {} files, got {}",
            EXACT_MAX_LIBRARY, l_total
        )));
    }
    if alloc.q.len() != l_total {
        return Err(Error::InvalidConfig(
            "allocation length does not match popularity length".into(),
        ));
    }
    let m = alloc.num_groups;
    let placement = build_placement(alloc, cfg.cache_files)?;
    let b_b = cfg.backhaul_files as usize;

    // beta(M, g0) memoized over the integer loads that can occur
    let mut beta_cache: Vec<Option<f64>> = vec![None; l_total * k_max + b_b + 2];
    let mut beta_at = |g0: usize, cfg: &SystemConfig| -> Result<f64> {
        if let Some(b) = beta_cache[g0] {
            return Ok(b);
        }
        let b = beta_factor(m, g0 as f64, cfg)?;
        beta_cache[g0] = Some(b);
        Ok(b)
    };

    let mut aggregate = 0.0;
    let mut tail_bound = 0.0;
    for l0 in 0..l_total {
        let groups: Vec<u32> = if alloc.q[l0] != 0 {
            placement.group_sets[l0].clone()
        } else {
            (0..m).collect()
        };
        let ratio = if alloc.q[l0] == 0 {
            m as f64
        } else {
            alloc.q[l0] as f64
        };
        let mut p_l0 = 0.0;
        let mut tail_l0 = 0.0;
        for &m0 in &groups {
            let pmf = load_pmf(cfg, rho, alloc, l0, m0, k_max, tail_eps)?;
            tail_l0 += pmf.tail.iter().sum::<f64>();
            let mut cached_dist = vec![1.0];
            let mut uncached_dist = vec![1.0];
            for (l, file_pmf) in pmf.per_file.iter().enumerate() {
                if alloc.q[l] != 0 {
                    cached_dist = convolve(&cached_dist, file_pmf);
                } else {
                    uncached_dist = convolve(&uncached_dist, file_pmf);
                }
            }
            // split backhaul demand u at B_B: above it the served load and
            // the admission ratio's denominator both freeze
            let sched_uncached = alloc.q[l0] == 0;
            let mut saturated_sched_mass = 0.0;
            for (u, &pu) in uncached_dist.iter().enumerate().skip(b_b) {
                let sched = if sched_uncached {
                    if u == 0 {
                        1.0
                    } else {
                        (b_b as f64 / u as f64).min(1.0)
                    }
                } else {
                    1.0
                };
                saturated_sched_mass += pu * sched;
            }
            let mut p_m0 = 0.0;
            for (s, &pc) in cached_dist.iter().enumerate() {
                if pc == 0.0 {
                    continue;
                }
                let mut inner = 0.0;
                for (u, &pu) in uncached_dist.iter().enumerate().take(b_b) {
                    let sched = if sched_uncached {
                        if u == 0 {
                            1.0
                        } else {
                            (b_b as f64 / u as f64).min(1.0)
                        }
                    } else {
                        1.0
                    };
                    let beta = beta_at(s + u, cfg)?;
                    inner += pu * sched * success_from_ratio(ratio, beta);
                }
                if saturated_sched_mass > 0.0 {
                    let beta = beta_at(s + b_b, cfg)?;
                    inner += saturated_sched_mass * success_from_ratio(ratio, beta);
                }
                p_m0 += pc * inner;
            }
            p_l0 += p_m0;
        }
        let weight = 1.0 / groups.len() as f64;
        aggregate += rho.probs()[l0] * p_l0 * weight;
        tail_bound += rho.probs()[l0] * tail_l0 * weight;
    }
    Ok(ExactSuccess {
        p: aggregate,
        tail_bound,
    })
}

fn convolve(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        if x == 0.0 {
            continue;
        }
        for (j, &y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}
