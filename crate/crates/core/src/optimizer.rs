//! Joint reuse-factor and cache-allocation optimization: the KKT
//! water-filling solution of each relaxed subproblem, the enumeration
//! over (M, L') with rounding and greedy residue allocation, and the
//! baseline schemes the joint design is compared against.

use crate::analytic::{
    approx_success, beta_factor, beta_factor_full_plane, expected_loading, success_from_ratio,
    AnalyticReport,
};
use crate::error::{Error, Result};
use crate::model::{CacheAllocation, CachePolicy, Popularity, SystemConfig};

/// Capacity residual tolerance for the multiplier bisection.
const BISECT_TOL: f64 = 1e-9;
const BISECT_MAX_ITERS: u32 = 200;
/// Objective ties closer than this are broken toward smaller (M, L').
const TIE_EPS: f64 = 1e-12;

/// Relaxed solution of one (M, L') subproblem.
#[derive(Debug, Clone)]
pub struct SubproblemSolution {
    /// Real-valued allocation over the cached prefix, nonincreasing,
    /// each entry in [1, M], summing to M·B_C.
    pub q_real: Vec<f64>,
    /// KKT multiplier of the capacity constraint.
    pub lambda_star: f64,
    /// Average PHY outage over the cached prefix at the solution.
    pub objective: f64,
}

/// Output of the enumeration: chosen reuse factor, cached prefix length,
/// integer allocation, and the relaxed/achieved objective pair.
#[derive(Debug, Clone)]
pub struct OptResult {
    pub m_star: u32,
    pub l_prime_star: usize,
    pub q_int: CacheAllocation,
    /// Approximate success probability at the relaxed optimum; an upper
    /// bound on what any integer allocation can achieve.
    pub upper_bound: f64,
    /// Approximate success probability at the rounded integer allocation.
    pub achieved: f64,
}

/// Served load and interference factor for the cached-prefix split at L'.
fn prefix_load(
    num_groups: u32,
    l_prime: usize,
    cfg: &SystemConfig,
    rho: &Popularity,
) -> Result<(f64, f64)> {
    let k_tilde = expected_loading(cfg, rho);
    let cached: f64 = k_tilde[..l_prime].iter().sum();
    let uncached: f64 = k_tilde[l_prime..].iter().sum();
    let g_tilde = cached + uncached.min(cfg.backhaul_files as f64);
    let beta = beta_factor(num_groups, g_tilde, cfg)?;
    Ok((g_tilde, beta))
}

/// Water-filling map: Σ_l clamp(√(ρ_l/λ) − β, 1, M), nonincreasing in λ.
fn capacity_at(lambda: f64, rho: &[f64], beta: f64, m: f64) -> f64 {
    rho.iter()
        .map(|&p| {
            let raw = if lambda > 0.0 {
                (p / lambda).sqrt() - beta
            } else {
                f64::INFINITY
            };
            raw.clamp(1.0, m)
        })
        .sum()
}

/// Solves the relaxed subproblem for a fixed number of groups and cached
/// prefix length: minimize Σ ρ_l β/(q_l + β) subject to Σ q_l = M·B_C and
/// 1 ≤ q_l ≤ M. The KKT solution is q_l = clamp(√(ρ_l/λ*) − β, 1, M)
/// with λ* found by bisection on the capacity residual.
pub fn solve_subproblem(
    num_groups: u32,
    l_prime: usize,
    cfg: &SystemConfig,
    rho: &Popularity,
) -> Result<SubproblemSolution> {
    let m = num_groups as f64;
    let b_c = cfg.cache_files;
    if num_groups == 0 {
        return Err(Error::InfeasibleSubproblem("M must be at least 1".into()));
    }
    if l_prime < b_c || l_prime > num_groups as usize * b_c || l_prime > rho.len() {
        return Err(Error::InfeasibleSubproblem(format!(
            "L' = {} outside [B_C, min(M*B_C, L)] = [{}, {}]",
            l_prime,
            b_c,
            (num_groups as usize * b_c).min(rho.len())
        )));
    }
    let target = m * b_c as f64;
    let (g_tilde, beta) = prefix_load(num_groups, l_prime, cfg, rho)?;
    let prefix = &rho.probs()[..l_prime];

    let q_real: Vec<f64>;
    let lambda_star: f64;
    if l_prime == b_c {
        // the equality constraint forces saturation
        q_real = vec![m; l_prime];
        lambda_star = prefix.iter().cloned().fold(f64::INFINITY, f64::min) / (m + beta).powi(2);
    } else if l_prime == num_groups as usize * b_c {
        q_real = vec![1.0; l_prime];
        lambda_star = prefix.iter().cloned().fold(0.0, f64::max) / (1.0 + beta).powi(2);
    } else {
        let mut lo = prefix.iter().cloned().fold(f64::INFINITY, f64::min) / (m + beta).powi(2);
        let mut hi = prefix.iter().cloned().fold(0.0, f64::max) / (1.0 + beta).powi(2);
        if lo.is_nan() || hi.is_nan() || lo > hi {
            return Err(Error::Numerical(format!(
                "bisection bracket degenerate: [{lo}, {hi}]"
            )));
        }
        let mut lambda = 0.5 * (lo + hi);
        let mut converged = false;
        for _ in 0..BISECT_MAX_ITERS {
            lambda = 0.5 * (lo + hi);
            let cap = capacity_at(lambda, prefix, beta, m);
            let residual = cap - target;
            if residual.abs() <= BISECT_TOL {
                converged = true;
                break;
            }
            if residual > 0.0 {
                // too much capacity allocated: raise the multiplier
                lo = lambda;
            } else {
                hi = lambda;
            }
        }
        if !converged {
            // the map is continuous and monotone, so the bracket collapse
            // itself pins the multiplier; accept if the residual is tiny
            let cap = capacity_at(lambda, prefix, beta, m);
            if (cap - target).abs() > 1e-6 {
                return Err(Error::Numerical(format!(
                    "bisection failed: residual {} at lambda {}",
                    cap - target,
                    lambda
                )));
            }
            converged = true;
        }
        let _ = converged;
        lambda_star = lambda;
        q_real = prefix
            .iter()
            .map(|&p| ((p / lambda_star).sqrt() - beta).clamp(1.0, m))
            .collect();
    }
    let objective = prefix
        .iter()
        .zip(&q_real)
        .map(|(&p, &q)| p * beta / (q + beta))
        .sum();
    let _ = g_tilde;
    Ok(SubproblemSolution {
        q_real,
        lambda_star,
        objective,
    })
}

fn pad_to_library(prefix: &[f64], library: usize) -> Vec<f64> {
    let mut q = prefix.to_vec();
    q.resize(library, 0.0);
    q
}

/// Floors a relaxed cached-prefix allocation and hands the rounding
/// residue back one unit at a time, each time to the file with the
/// steepest decrease of the cached outage Σ ρ_l β/(q_l + β); index ties
/// go to the most popular file. The greedy completion of the floor is
/// exact for this separable convex objective.
fn round_prefix(
    q_relaxed: &[f64],
    m: u32,
    beta: f64,
    rho: &Popularity,
    b_c: usize,
) -> Result<Vec<u32>> {
    let mut q_int: Vec<u32> = q_relaxed.iter().map(|&v| v.floor() as u32).collect();
    let target = m as u64 * b_c as u64;
    let mut total: u64 = q_int.iter().map(|&v| v as u64).sum();
    while total < target {
        let mut pick: Option<(f64, usize)> = None;
        for (l, &ql) in q_int.iter().enumerate() {
            if ql >= m {
                continue;
            }
            let p = rho.probs()[l];
            let delta = p / (ql as f64 + 1.0 + beta) - p / (ql as f64 + beta);
            match pick {
                Some((best_delta, _)) if delta >= best_delta => {}
                _ => pick = Some((delta, l)),
            }
        }
        let (_, l) = pick
            .ok_or_else(|| Error::Numerical("greedy residue allocation ran out of room".into()))?;
        q_int[l] += 1;
        total += 1;
    }
    // near-tied popularities can leave the greedy result unordered; the
    // objective only pairs q with rho through rank, so restore the
    // nonincreasing pairing
    q_int.sort_unstable_by(|a, b| b.cmp(a));
    Ok(q_int)
}

/// Enumerates M ∈ {1..M_max} and L' ∈ {B_C..min(M·B_C, L)}, solves each
/// relaxed subproblem, rounds every candidate (floor plus greedy residue
/// allocation), and keeps the candidate whose rounded allocation scores
/// best (ties toward smaller M then smaller L'). The reported upper
/// bound is the best relaxed value across the whole enumeration.
pub fn optimize(cfg: &SystemConfig, rho: &Popularity, m_max: u32) -> Result<OptResult> {
    if m_max == 0 {
        return Err(Error::InvalidConfig("M_max must be at least 1".into()));
    }
    let library = rho.len();
    let b_c = cfg.cache_files;

    let mut upper_bound = f64::NEG_INFINITY;
    let mut best: Option<(f64, u32, usize, Vec<u32>)> = None;
    for m in 1..=m_max {
        if b_c == 0 {
            // nothing can be cached; the only decision left is M
            let q = vec![0.0; library];
            let report = crate::analytic::approx_success_real(m, &q, cfg, rho)?;
            upper_bound = upper_bound.max(report.aggregate_p);
            if best
                .as_ref()
                .is_none_or(|b| report.aggregate_p > b.0 + TIE_EPS)
            {
                best = Some((report.aggregate_p, m, 0, vec![0; library]));
            }
            continue;
        }
        let hi = (m as usize * b_c).min(library);
        for l_prime in b_c..=hi {
            let sol = solve_subproblem(m, l_prime, cfg, rho)?;
            let q_full = pad_to_library(&sol.q_real, library);
            let relaxed = crate::analytic::approx_success_real(m, &q_full, cfg, rho)?;
            upper_bound = upper_bound.max(relaxed.aggregate_p);

            let (_, beta) = prefix_load(m, l_prime, cfg, rho)?;
            let mut q_vec = round_prefix(&sol.q_real, m, beta, rho, b_c)?;
            q_vec.resize(library, 0);
            let q_real: Vec<f64> = q_vec.iter().map(|&v| v as f64).collect();
            let achieved = crate::analytic::approx_success_real(m, &q_real, cfg, rho)?;
            if best
                .as_ref()
                .is_none_or(|b| achieved.aggregate_p > b.0 + TIE_EPS)
            {
                best = Some((achieved.aggregate_p, m, l_prime, q_vec));
            }
        }
    }
    let (achieved, m_star, l_prime_star, q_vec) =
        best.ok_or_else(|| Error::InfeasibleSubproblem("no feasible (M, L') candidate".into()))?;
    let q_alloc = CacheAllocation::new(m_star, q_vec);
    Ok(OptResult {
        m_star,
        l_prime_star,
        q_int: q_alloc,
        upper_bound,
        achieved,
    })
}

/// The comparison schemes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BaselineKind {
    /// Joint design produced by [`optimize`].
    Proposed,
    /// Most popular content in every BS, single band.
    Mpc,
    /// Independent per-BS random caching, single band.
    Gcp,
    /// Most popular content with a separately tuned reuse factor.
    MpcReuse,
    /// Random caching with a separately tuned reuse factor.
    GcpReuse,
}

impl BaselineKind {
    pub fn name(self) -> &'static str {
        match self {
            BaselineKind::Proposed => "proposed",
            BaselineKind::Mpc => "mpc",
            BaselineKind::Gcp => "gcp",
            BaselineKind::MpcReuse => "mpc-reuse",
            BaselineKind::GcpReuse => "gcp-reuse",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "proposed" => Some(BaselineKind::Proposed),
            "mpc" => Some(BaselineKind::Mpc),
            "gcp" => Some(BaselineKind::Gcp),
            "mpc-reuse" | "mpc+reuse" => Some(BaselineKind::MpcReuse),
            "gcp-reuse" | "gcp+reuse" => Some(BaselineKind::GcpReuse),
            _ => None,
        }
    }
}

/// A fully specified scheme ready for simulation.
#[derive(Debug, Clone)]
pub struct BaselineSpec {
    pub kind: BaselineKind,
    /// Number of BS groups / subbands the scheme transmits over.
    pub m: u32,
    /// Number of distinct files held somewhere in the network.
    pub l_prime: usize,
    pub policy: CachePolicy,
    /// Closed-form success estimate where the analytic layer applies;
    /// random-caching schemes are only scored by simulation.
    pub p_analytic: Option<f64>,
}

fn mpc_allocation(m: u32, cfg: &SystemConfig, rho: &Popularity) -> CacheAllocation {
    let mut q = vec![m; cfg.cache_files.min(rho.len())];
    q.resize(rho.len(), 0);
    CacheAllocation::new(m, q)
}

/// Builds one of the comparison schemes at the given configuration.
pub fn make_baseline(
    kind: BaselineKind,
    cfg: &SystemConfig,
    rho: &Popularity,
    m_max: u32,
) -> Result<BaselineSpec> {
    match kind {
        BaselineKind::Proposed => {
            let opt = optimize(cfg, rho, m_max)?;
            Ok(BaselineSpec {
                kind,
                m: opt.m_star,
                l_prime: opt.l_prime_star,
                p_analytic: Some(opt.achieved),
                policy: CachePolicy::Grouped(opt.q_int),
            })
        }
        BaselineKind::Mpc => {
            let alloc = mpc_allocation(1, cfg, rho);
            let report = approx_success(&alloc, cfg, rho)?;
            Ok(BaselineSpec {
                kind,
                m: 1,
                l_prime: alloc.cached_count(),
                p_analytic: Some(report.aggregate_p),
                policy: CachePolicy::Grouped(alloc),
            })
        }
        BaselineKind::MpcReuse => {
            let mut best: Option<(f64, u32, CacheAllocation)> = None;
            for m in 1..=m_max {
                let alloc = mpc_allocation(m, cfg, rho);
                let report = approx_success(&alloc, cfg, rho)?;
                if best
                    .as_ref()
                    .is_none_or(|b| report.aggregate_p > b.0 + TIE_EPS)
                {
                    best = Some((report.aggregate_p, m, alloc));
                }
            }
            let (p, m, alloc) = best.expect("m_max >= 1 guarantees a candidate");
            Ok(BaselineSpec {
                kind,
                m,
                l_prime: alloc.cached_count(),
                p_analytic: Some(p),
                policy: CachePolicy::Grouped(alloc),
            })
        }
        BaselineKind::Gcp => {
            let (probs, l_prime, _) = gcp_probabilities(cfg, rho)?;
            Ok(BaselineSpec {
                kind,
                m: 1,
                l_prime,
                p_analytic: None,
                policy: CachePolicy::Random(probs),
            })
        }
        BaselineKind::GcpReuse => {
            let (probs, l_prime, _) = gcp_probabilities(cfg, rho)?;
            let m = separated_reuse_choice(&probs, l_prime, cfg, rho, m_max)?;
            Ok(BaselineSpec {
                kind,
                m,
                l_prime,
                p_analytic: None,
                policy: CachePolicy::Random(probs),
            })
        }
    }
}

/// Optimized per-file caching probabilities for the random-caching
/// baseline: enumerate the support length L', water-fill b_l in [0,1]
/// with Σ b_l = B_C against the same success surrogate shape, and keep
/// the best support.
pub fn gcp_probabilities(cfg: &SystemConfig, rho: &Popularity) -> Result<(Vec<f64>, usize, f64)> {
    let library = rho.len();
    let b_c = cfg.cache_files;
    if b_c >= library {
        return Ok((vec![1.0; library], library, 1.0));
    }
    if b_c == 0 {
        let q = vec![0.0; library];
        let report = crate::analytic::approx_success_real(1, &q, cfg, rho)?;
        return Ok((q, 0, report.aggregate_p));
    }
    let k_tilde = expected_loading(cfg, rho);
    let b_b = cfg.backhaul_files as f64;
    let mut best: Option<(f64, usize, Vec<f64>)> = None;
    for l_prime in b_c..=library {
        let cached: f64 = k_tilde[..l_prime].iter().sum();
        let uncached: f64 = k_tilde[l_prime..].iter().sum();
        let g_tilde = cached + uncached.min(b_b);
        let beta = beta_factor(1, g_tilde, cfg)?;
        let b = waterfill_unit_box(&rho.probs()[..l_prime], beta, b_c as f64)?;
        let sched_uncached = if uncached == 0.0 {
            1.0
        } else {
            (b_b / uncached).min(1.0)
        };
        let hit_part: f64 = rho.probs()[..l_prime]
            .iter()
            .zip(&b)
            .map(|(&p, &bl)| p * success_from_ratio(bl, beta))
            .sum();
        let miss_mass: f64 = rho.probs()[l_prime..].iter().sum();
        let surrogate = hit_part + miss_mass * success_from_ratio(1.0, beta) * sched_uncached;
        if best.as_ref().is_none_or(|bst| surrogate > bst.0 + TIE_EPS) {
            let mut full = b;
            full.resize(library, 0.0);
            best = Some((surrogate, l_prime, full));
        }
    }
    let (surrogate, l_prime, probs) = best.expect("support enumeration is nonempty");
    Ok((probs, l_prime, surrogate))
}

/// Water-filling with box constraints [0, 1]: b_l = clamp(√(ρ_l/λ) − β, 0, 1)
/// with λ bisected so the entries sum to the budget.
fn waterfill_unit_box(rho: &[f64], beta: f64, budget: f64) -> Result<Vec<f64>> {
    debug_assert!(budget <= rho.len() as f64);
    let fill_at = |lambda: f64| -> f64 {
        rho.iter()
            .map(|&p| {
                let raw = if lambda > 0.0 {
                    (p / lambda).sqrt() - beta
                } else {
                    f64::INFINITY
                };
                raw.clamp(0.0, 1.0)
            })
            .sum()
    };
    let rho_max = rho.iter().cloned().fold(0.0, f64::max);
    if rho_max == 0.0 {
        // degenerate popularity: spread the budget uniformly
        return Ok(vec![budget / rho.len() as f64; rho.len()]);
    }
    let mut lo = rho_max / (1.0 + beta).powi(2); // everything at 1 or below
    while fill_at(lo) < budget {
        lo *= 0.5;
        if lo < f64::MIN_POSITIVE {
            return Err(Error::Numerical(
                "unit-box water-fill bracket collapsed".into(),
            ));
        }
    }
    let mut hi = lo.max(rho_max / beta.max(1e-300).powi(2));
    while fill_at(hi) > budget {
        hi *= 2.0;
        if !hi.is_finite() {
            return Err(Error::Numerical(
                "unit-box water-fill bracket diverged".into(),
            ));
        }
    }
    let mut lambda = 0.5 * (lo + hi);
    for _ in 0..BISECT_MAX_ITERS {
        lambda = 0.5 * (lo + hi);
        let cap = fill_at(lambda);
        if (cap - budget).abs() <= BISECT_TOL {
            break;
        }
        if cap > budget {
            lo = lambda;
        } else {
            hi = lambda;
        }
    }
    Ok(rho
        .iter()
        .map(|&p| ((p / lambda).sqrt() - beta).clamp(0.0, 1.0))
        .collect())
}

/// Reuse factor for the separated random-caching design. The serving BS
/// is the nearest holder of the file but not necessarily the nearest
/// transmitter in its subband, so in-band holders are guarded (they lie
/// beyond the serving distance) while non-holders interfere from anywhere:
/// p_l ≈ b_l M / (b_l M + b_l β' + (1−b_l) β̂) with β' the guarded and β̂
/// the full-plane factor.
fn separated_reuse_choice(
    probs: &[f64],
    l_prime: usize,
    cfg: &SystemConfig,
    rho: &Popularity,
    m_max: u32,
) -> Result<u32> {
    let k_tilde = expected_loading(cfg, rho);
    let cached: f64 = k_tilde[..l_prime].iter().sum();
    let uncached: f64 = k_tilde[l_prime..].iter().sum();
    let b_b = cfg.backhaul_files as f64;
    let g_tilde = cached + uncached.min(b_b);
    let sched_uncached = if uncached == 0.0 {
        1.0
    } else {
        (b_b / uncached).min(1.0)
    };
    let mut best: Option<(f64, u32)> = None;
    for m in 1..=m_max {
        let guarded = beta_factor(m, g_tilde, cfg)?;
        let full = beta_factor_full_plane(m, g_tilde, cfg)?;
        let mf = m as f64;
        let hit_part: f64 = rho.probs()[..l_prime]
            .iter()
            .zip(probs)
            .map(|(&p, &bl)| {
                if guarded.is_infinite() || full.is_infinite() {
                    return 0.0;
                }
                let denom = bl * mf + bl * guarded + (1.0 - bl) * full;
                if denom == 0.0 {
                    0.0
                } else {
                    p * bl * mf / denom
                }
            })
            .sum();
        let miss_mass: f64 = rho.probs()[l_prime..].iter().sum();
        let p_sep = hit_part + miss_mass * success_from_ratio(mf, guarded) * sched_uncached;
        if best.as_ref().is_none_or(|b| p_sep > b.0 + TIE_EPS) {
            best = Some((p_sep, m));
        }
    }
    Ok(best.expect("m_max >= 1").1)
}

/// Convenience wrapper: the analytic report at an optimizer result.
pub fn report_at(opt: &OptResult, cfg: &SystemConfig, rho: &Popularity) -> Result<AnalyticReport> {
    approx_success(&opt.q_int, cfg, rho)
}
