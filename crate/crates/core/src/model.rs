//! Domain types shared by the analytic, optimizer, and simulator layers:
//! system parameters, Zipf popularity, cache storage allocation, and the
//! group placement map.
//!
//! File indices are 0-based throughout the library; external I/O (CLI,
//! CSV) renders them 1-based.

use crate::error::{Error, Result};

/// Physical and content parameters of the network.
///
/// `tx_power_w`, `noise_psd`, `slot_s`, and `file_bits` are carried for
/// completeness but cancel out of every interference-limited formula in
/// this crate; none of the analytic or simulation paths read them.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemConfig {
    /// BS density λᵇ in BSs per m².
    pub bs_density: f64,
    /// User density λᵘ in users per m².
    pub user_density: f64,
    /// Path loss exponent α (must exceed 2).
    pub pathloss_exp: f64,
    /// Total bandwidth W in Hz.
    pub bandwidth_hz: f64,
    /// Fixed per-user target rate τ in bits per second.
    pub target_rate_bps: f64,
    /// Per-BS transmit power P in watts (unused by the formulas).
    pub tx_power_w: f64,
    /// Noise power spectral density N₀ (unused by the formulas).
    pub noise_psd: f64,
    /// Slot duration ν in seconds (unused by the formulas).
    pub slot_s: f64,
    /// Library size L.
    pub library_size: usize,
    /// File size F in bits (unused by the formulas).
    pub file_bits: f64,
    /// Per-BS cache capacity B_C in files.
    pub cache_files: usize,
    /// Per-BS backhaul capacity B_B in files per slot.
    pub backhaul_files: u32,
    /// Zipf popularity exponent γ ≥ 0.
    pub zipf_exp: f64,
}

impl Default for SystemConfig {
    /// Reference operating point used throughout the test suite and as
    /// the CLI default: λᵇ=3e-5, λᵘ=3e-4, α=4, W=20 MHz, τ=0.1 Mbps,
    /// L=1000, B_C=20, B_B=5, γ=0.8.
    fn default() -> Self {
        SystemConfig {
            bs_density: 3e-5,
            user_density: 3e-4,
            pathloss_exp: 4.0,
            bandwidth_hz: 20e6,
            target_rate_bps: 1e5,
            tx_power_w: 1.0,
            noise_psd: 1e-20,
            slot_s: 1e-3,
            library_size: 1000,
            file_bits: 1e8,
            cache_files: 20,
            backhaul_files: 5,
            zipf_exp: 0.8,
        }
    }
}

impl SystemConfig {
    /// Checks the model invariants, returning the first violation.
    ///
    /// `target_rate_bps` and `user_density` may be zero (the zero-rate and
    /// zero-user edge cases are well defined); everything else that scales
    /// the geometry must be strictly positive.
    pub fn validate(&self) -> Result<()> {
        if self.pathloss_exp.is_nan() || self.pathloss_exp <= 2.0 {
            return Err(Error::InvalidConfig(format!(
                "pathloss_exp must exceed 2, got {}",
                self.pathloss_exp
            )));
        }
        if self.bs_density.is_nan() || self.bs_density <= 0.0 {
            return Err(Error::InvalidConfig(format!(
                "bs_density must be positive, got {}",
                self.bs_density
            )));
        }
        if self.user_density.is_nan() || self.user_density < 0.0 {
            return Err(Error::InvalidConfig(format!(
                "user_density must be nonnegative, got {}",
                self.user_density
            )));
        }
        if self.bandwidth_hz.is_nan() || self.bandwidth_hz <= 0.0 {
            return Err(Error::InvalidConfig(format!(
                "bandwidth_hz must be positive, got {}",
                self.bandwidth_hz
            )));
        }
        if self.target_rate_bps.is_nan() || self.target_rate_bps < 0.0 {
            return Err(Error::InvalidConfig(format!(
                "target_rate_bps must be nonnegative, got {}",
                self.target_rate_bps
            )));
        }
        if self.library_size == 0 {
            return Err(Error::InvalidConfig(
                "library_size must be at least 1".into(),
            ));
        }
        if self.cache_files > self.library_size {
            return Err(Error::InvalidConfig(format!(
                "cache_files {} exceeds library_size {}",
                self.cache_files, self.library_size
            )));
        }
        if self.zipf_exp.is_nan() || self.zipf_exp < 0.0 {
            return Err(Error::InvalidConfig(format!(
                "zipf_exp must be nonnegative, got {}",
                self.zipf_exp
            )));
        }
        Ok(())
    }
}

/// Request probabilities ρ over the content library, sorted nonincreasing
/// and summing to one.
#[derive(Debug, Clone, PartialEq)]
pub struct Popularity {
    probs: Vec<f64>,
}

impl Popularity {
    /// Wraps an explicit probability vector, enforcing the sortedness and
    /// normalization invariants (sum within 1e-12 of one).
    pub fn from_probs(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::InvalidConfig(
                "popularity vector must be nonempty".into(),
            ));
        }
        for (l, &p) in probs.iter().enumerate() {
            if !p.is_finite() || p < 0.0 {
                return Err(Error::InvalidConfig(format!(
                    "popularity entry {} is not a probability: {}",
                    l + 1,
                    p
                )));
            }
            if l > 0 && probs[l - 1] < p {
                return Err(Error::InvalidConfig(format!(
                    "popularity must be nonincreasing; entry {} ({}) exceeds entry {} ({})",
                    l + 1,
                    p,
                    l,
                    probs[l - 1]
                )));
            }
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidConfig(format!(
                "popularity must sum to 1 within 1e-12, got {}",
                sum
            )));
        }
        Ok(Popularity { probs })
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }
}

/// Zipf popularity: ρ_l = l^(−γ) / Σ_{j=1..L} j^(−γ) for 1-based rank l.
///
/// γ = 0 degenerates to the uniform distribution; the natural index order
/// is kept for ties.
pub fn zipf_popularity(library_size: usize, exponent: f64) -> Result<Popularity> {
    if library_size == 0 {
        return Err(Error::InvalidConfig(
            "zipf library size must be at least 1".into(),
        ));
    }
    if exponent.is_nan() || exponent < 0.0 {
        return Err(Error::InvalidConfig(format!(
            "zipf exponent must be nonnegative, got {}",
            exponent
        )));
    }
    let weights: Vec<f64> = (1..=library_size)
        .map(|rank| (rank as f64).powf(-exponent))
        .collect();
    let norm: f64 = weights.iter().sum();
    let probs = weights.iter().map(|w| w / norm).collect();
    Ok(Popularity { probs })
}

/// Cache storage allocation: `q[l]` is the number of BS groups (out of
/// `num_groups`) that store file `l`. The decision variable of the joint
/// design problem.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CacheAllocation {
    /// Number of BS groups / subbands M ≥ 1.
    pub num_groups: u32,
    /// Per-file group counts, expected nonincreasing with 0 ≤ q_l ≤ M.
    pub q: Vec<u32>,
}

impl CacheAllocation {
    pub fn new(num_groups: u32, q: Vec<u32>) -> Self {
        CacheAllocation { num_groups, q }
    }

    /// Number of distinct files held somewhere in the network (q_l > 0).
    /// Equals the cached-prefix length for a nonincreasing q.
    pub fn cached_count(&self) -> usize {
        self.q.iter().filter(|&&v| v > 0).count()
    }

    pub fn total(&self) -> u64 {
        self.q.iter().map(|&v| v as u64).sum()
    }
}

/// Feasibility report for a cache allocation; empty `violations` means
/// the allocation is feasible.
#[derive(Debug, Clone, Default)]
pub struct ValidationReport {
    pub violations: Vec<String>,
}

impl ValidationReport {
    pub fn is_feasible(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks every allocation invariant against `cfg` and lists all
/// violations instead of stopping at the first.
pub fn validate_allocation(alloc: &CacheAllocation, cfg: &SystemConfig) -> ValidationReport {
    let mut report = ValidationReport::default();
    let m = alloc.num_groups;
    if m == 0 {
        report
            .violations
            .push("number of groups M must be at least 1".into());
    }
    if alloc.q.len() != cfg.library_size {
        report.violations.push(format!(
            "allocation length {} does not match library size {}",
            alloc.q.len(),
            cfg.library_size
        ));
    }
    for (l, &v) in alloc.q.iter().enumerate() {
        if v > m {
            report
                .violations
                .push(format!("q_{} = {} exceeds group count M = {}", l + 1, v, m));
        }
        if l > 0 && alloc.q[l - 1] < v {
            report.violations.push(format!(
                "ordering violated: q_{} = {} < q_{} = {}",
                l,
                alloc.q[l - 1],
                l + 1,
                v
            ));
        }
    }
    let total = alloc.total();
    let capacity = m as u64 * cfg.cache_files as u64;
    if total > capacity {
        report.violations.push(format!(
            "capacity violated: sum q = {} exceeds M*B_C = {}",
            total, capacity
        ));
    }
    report
}

/// Per-file group index sets and per-group cached file sets induced by a
/// cache storage allocation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PlacementMap {
    pub num_groups: u32,
    /// For each file l, the sorted set of group indices that store it.
    pub group_sets: Vec<Vec<u32>>,
    /// For each group m, the sorted set of file indices it caches.
    pub group_contents: Vec<Vec<u32>>,
}

impl PlacementMap {
    /// True when group `m` caches file `l`.
    pub fn group_caches(&self, m: u32, l: usize) -> bool {
        self.group_contents[m as usize]
            .binary_search(&(l as u32))
            .is_ok()
    }
}

/// Builds the placement map by filling group slots sequentially: file l
/// occupies groups mod(Σ_{l'<l} q_{l'} + j, M) for j = 0..q_l−1. When
/// Σ q_l = M·B_C every group ends up caching exactly B_C distinct files.
///
/// Rejects allocations that violate bounds, ordering, or the capacity
/// Σ q_l ≤ M·B_C.
pub fn build_placement(alloc: &CacheAllocation, cache_files: usize) -> Result<PlacementMap> {
    let m = alloc.num_groups;
    if m == 0 {
        return Err(Error::InfeasibleAllocation(
            "group count M must be at least 1".into(),
        ));
    }
    let capacity = m as u64 * cache_files as u64;
    if alloc.total() > capacity {
        return Err(Error::InfeasibleAllocation(format!(
            "sum q = {} exceeds M*B_C = {}",
            alloc.total(),
            capacity
        )));
    }
    let mut group_sets = Vec::with_capacity(alloc.q.len());
    let mut group_contents = vec![Vec::new(); m as usize];
    let mut offset: u64 = 0;
    for (l, &ql) in alloc.q.iter().enumerate() {
        if ql > m {
            return Err(Error::InfeasibleAllocation(format!(
                "q_{} = {} exceeds group count M = {}",
                l + 1,
                ql,
                m
            )));
        }
        if l > 0 && alloc.q[l - 1] < ql {
            return Err(Error::InfeasibleAllocation(format!(
                "q must be nonincreasing; q_{} = {} < q_{} = {}",
                l,
                alloc.q[l - 1],
                l + 1,
                ql
            )));
        }
        let mut groups: Vec<u32> = (0..ql as u64)
            .map(|j| ((offset + j) % m as u64) as u32)
            .collect();
        groups.sort_unstable();
        for &g in &groups {
            group_contents[g as usize].push(l as u32);
        }
        group_sets.push(groups);
        offset += ql as u64;
    }
    Ok(PlacementMap {
        num_groups: m,
        group_sets,
        group_contents,
    })
}

/// Per-file request counts at a tagged BS.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LoadingVector {
    pub counts: Vec<u32>,
}

impl LoadingVector {
    pub fn new(counts: Vec<u32>) -> Self {
        LoadingVector { counts }
    }
}

/// How caches are filled across BSs; the input the simulator evaluates.
#[derive(Debug, Clone)]
pub enum CachePolicy {
    /// Deterministic group placement driven by a cache storage allocation
    /// (the joint design and the most-popular-content baselines).
    Grouped(CacheAllocation),
    /// Independent per-BS random caching with per-file inclusion
    /// probabilities in [0,1] summing to the cache capacity.
    Random(Vec<f64>),
}
