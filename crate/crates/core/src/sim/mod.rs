//! Stochastic-geometry Monte Carlo engine: Poisson network realizations
//! on a square torus, content-centric association, backhaul-limited
//! scheduling, SIR evaluation, and success-probability estimation.
//!
//! The torus removes edge bias, every user is statistically typical, and
//! all randomness is keyed through [`stream`] so trials reduce in any
//! order to identical results.

pub mod stream;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::Distribution;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{build_placement, CachePolicy, Popularity, SystemConfig};
use stream::*;

/// Simulation controls shared by all estimators.
#[derive(Debug, Clone)]
pub struct SimOptions {
    pub n_trials: u32,
    pub base_seed: u64,
    /// Window sizing: expected BSs per group; the side is
    /// √(bs_per_group · M / λᵇ).
    pub bs_per_group: f64,
    /// Freeze the BS/user geometry (and cache draws) of trial zero and
    /// only redraw requests, fading, and scheduling across trials.
    pub fixed_ppp: bool,
}

impl Default for SimOptions {
    fn default() -> Self {
        SimOptions {
            n_trials: 200,
            base_seed: 1,
            bs_per_group: 50.0,
            fixed_ppp: false,
        }
    }
}

/// One spatial draw of the network.
#[derive(Debug, Clone)]
pub struct Realization {
    pub side: f64,
    pub bs_pos: Vec<(f64, f64)>,
    pub bs_group: Vec<u32>,
    pub user_pos: Vec<(f64, f64)>,
    /// Requested file per user, 0-based.
    pub user_request: Vec<u32>,
}

/// Failure-mode counters accumulated across trials.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Diagnostics {
    /// Users whose requested file is nominally cached but no storing BS
    /// landed in the window.
    pub empty_candidates: u64,
    /// Users not admitted by the backhaul.
    pub backhaul_dropped: u64,
    /// Scheduled users whose SIR fell below the rate threshold.
    pub phy_failures: u64,
}

/// Monte Carlo estimate of the success probability.
#[derive(Debug, Clone)]
pub struct SimOutcome {
    pub p_hat: f64,
    /// Wilson 95% half-width.
    pub ci95: f64,
    pub n_users: u64,
    pub n_success: u64,
    pub diagnostics: Diagnostics,
    /// Set when the empty-candidate rate exceeds 1e-3, suggesting the
    /// window is too small for the requested placement.
    pub window_warning: bool,
}

/// Integer per-trial tallies; integer so parallel reduction is exact.
#[derive(Debug, Clone, Copy, Default)]
pub struct TrialCounts {
    pub success: u64,
    pub total: u64,
    pub empty_candidates: u64,
    pub backhaul_dropped: u64,
    pub phy_failures: u64,
}

impl TrialCounts {
    fn merge(mut self, other: TrialCounts) -> TrialCounts {
        self.success += other.success;
        self.total += other.total;
        self.empty_candidates += other.empty_candidates;
        self.backhaul_dropped += other.backhaul_dropped;
        self.phy_failures += other.phy_failures;
        self
    }
}

/// Window side for an expected `bs_per_group` BSs in each of `m` groups.
pub fn window_side(cfg: &SystemConfig, m: u32, bs_per_group: f64) -> f64 {
    (bs_per_group * m as f64 / cfg.bs_density).sqrt()
}

#[inline]
fn torus_dist2(a: (f64, f64), b: (f64, f64), side: f64) -> f64 {
    let mut dx = (a.0 - b.0).abs();
    if dx > side - dx {
        dx = side - dx;
    }
    let mut dy = (a.1 - b.1).abs();
    if dy > side - dy {
        dy = side - dy;
    }
    dx * dx + dy * dy
}

fn poisson_count(mean: f64, rng: &mut ChaCha12Rng) -> usize {
    if mean <= 0.0 {
        return 0;
    }
    let dist = rand_distr::Poisson::new(mean).expect("positive finite mean");
    dist.sample(rng) as usize
}

/// Draws a network realization: Poisson BS and user counts with uniform
/// positions, independent uniform group labels, and i.i.d. requests from
/// the popularity. Geometry is keyed by `geom_seed`, requests by
/// `request_seed`, so a fixed geometry can serve many request redraws.
pub fn generate(
    cfg: &SystemConfig,
    rho: &Popularity,
    m: u32,
    side: f64,
    geom_seed: u64,
    request_seed: u64,
) -> Realization {
    let area = side * side;
    let mut bs_rng = ChaCha12Rng::seed_from_u64(derive(geom_seed, &[TAG_BS_GEOM]));
    let n_bs = poisson_count(cfg.bs_density * area, &mut bs_rng);
    let bs_pos: Vec<(f64, f64)> = (0..n_bs)
        .map(|_| (bs_rng.gen::<f64>() * side, bs_rng.gen::<f64>() * side))
        .collect();
    // group labels are coupled across different M through one uniform per BS
    let bs_group: Vec<u32> = (0..n_bs)
        .map(|i| {
            let u = unit_uniform(derive(geom_seed, &[TAG_GROUP, i as u64]));
            ((u * m as f64) as u32).min(m - 1)
        })
        .collect();
    let mut user_rng = ChaCha12Rng::seed_from_u64(derive(geom_seed, &[TAG_USER_GEOM]));
    let n_users = poisson_count(cfg.user_density * area, &mut user_rng);
    let user_pos: Vec<(f64, f64)> = (0..n_users)
        .map(|_| (user_rng.gen::<f64>() * side, user_rng.gen::<f64>() * side))
        .collect();
    let cdf: Vec<f64> = rho
        .probs()
        .iter()
        .scan(0.0, |acc, &p| {
            *acc += p;
            Some(*acc)
        })
        .collect();
    let user_request: Vec<u32> = (0..n_users)
        .map(|j| {
            let u = unit_uniform(derive(request_seed, &[TAG_REQUEST, j as u64]));
            match cdf.binary_search_by(|c| c.partial_cmp(&u).expect("finite cdf")) {
                Ok(idx) | Err(idx) => (idx as u32).min(cdf.len() as u32 - 1),
            }
        })
        .collect();
    Realization {
        side,
        bs_pos,
        bs_group,
        user_pos,
        user_request,
    }
}

/// Writes the realization as comma-separated text, one record per point:
/// `bs,x,y,group` and `user,x,y,request` with 1-based file indices.
pub fn dump_realization<W: std::io::Write>(real: &Realization, out: &mut W) -> std::io::Result<()> {
    writeln!(out, "kind,x,y,group_or_request")?;
    for (i, &(x, y)) in real.bs_pos.iter().enumerate() {
        writeln!(out, "bs,{},{},{}", x, y, real.bs_group[i])?;
    }
    for (j, &(x, y)) in real.user_pos.iter().enumerate() {
        writeln!(out, "user,{},{},{}", x, y, real.user_request[j] + 1)?;
    }
    Ok(())
}

/// Per-BS cache contents realized for one network draw, plus the
/// association index that goes with the placement style.
pub struct BsContents {
    m: u32,
    /// Whether each file is held somewhere by design.
    cached_file: Vec<bool>,
    index: CandidateIndex,
}

enum CandidateIndex {
    /// Joint placement: per-file candidate groups and per-group BS lists.
    Grouped {
        group_sets: Vec<Vec<u32>>,
        group_bs: Vec<Vec<u32>>,
    },
    /// Per-BS random caching: per-file holder lists.
    PerBs {
        file_bs: Vec<Vec<u32>>,
        group_bs: Vec<Vec<u32>>,
    },
}

impl BsContents {
    fn group_bs(&self) -> &Vec<Vec<u32>> {
        match &self.index {
            CandidateIndex::Grouped { group_bs, .. } => group_bs,
            CandidateIndex::PerBs { group_bs, .. } => group_bs,
        }
    }
}

/// Instantiates a cache policy on a realization. Grouped policies map
/// each BS to its group's content set; random policies draw each BS's
/// cache by systematic sampling so exactly ⌈Σb⌉ or ⌊Σb⌋ distinct files
/// are held with the prescribed per-file inclusion probabilities.
pub fn prepare_contents(
    policy: &CachePolicy,
    real: &Realization,
    cfg: &SystemConfig,
    cache_seed: u64,
) -> Result<BsContents> {
    let n_bs = real.bs_pos.len();
    match policy {
        CachePolicy::Grouped(alloc) => {
            let m = alloc.num_groups;
            let map = build_placement(alloc, cfg.cache_files)?;
            let mut group_bs = vec![Vec::new(); m as usize];
            for (i, &g) in real.bs_group.iter().enumerate() {
                group_bs[g as usize].push(i as u32);
            }
            Ok(BsContents {
                m,
                cached_file: alloc.q.iter().map(|&q| q > 0).collect(),
                index: CandidateIndex::Grouped {
                    group_sets: map.group_sets,
                    group_bs,
                },
            })
        }
        CachePolicy::Random(probs) => {
            let m = real.bs_group.iter().copied().max().map_or(1, |g| g + 1);
            let mut group_bs = vec![Vec::new(); m as usize];
            for (i, &g) in real.bs_group.iter().enumerate() {
                group_bs[g as usize].push(i as u32);
            }
            let mut file_bs = vec![Vec::new(); probs.len()];
            for i in 0..n_bs {
                let u = unit_uniform(derive(cache_seed, &[TAG_CACHE, i as u64]));
                for l in systematic_sample(probs, u) {
                    file_bs[l as usize].push(i as u32);
                }
            }
            Ok(BsContents {
                m,
                cached_file: probs.iter().map(|&b| b > 0.0).collect(),
                index: CandidateIndex::PerBs { file_bs, group_bs },
            })
        }
    }
}

/// Systematic sampling: lay the inclusion probabilities end to end and
/// pick the intervals hit by the unit-spaced points u, u+1, u+2, ...
/// Each file is selected with probability b_l, never twice (b_l ≤ 1),
/// and the draw always holds Σ b_l files up to the fractional boundary.
fn systematic_sample(probs: &[f64], u: f64) -> Vec<u32> {
    let mut cache = Vec::new();
    let mut cum = 0.0;
    for (l, &b) in probs.iter().enumerate() {
        if b > 0.0 {
            let j = (cum - u).ceil().max(0.0);
            let point = u + j;
            if point < cum + b {
                cache.push(l as u32);
            }
        }
        cum += b;
    }
    cache
}

/// Per-user association outcome.
pub struct Association {
    /// Serving BS per user; `None` when the candidate set is empty.
    pub serving: Vec<Option<u32>>,
    /// Whether the served file sits in the serving BS's cache.
    pub hit: Vec<bool>,
}

/// Content-centric association: a user requesting a cached file goes to
/// the nearest BS (toroidal metric) holding it; an uncached request goes
/// to the nearest BS overall. Distance ties break to the lower BS index.
pub fn associate(real: &Realization, contents: &BsContents) -> Association {
    let n_users = real.user_pos.len();
    let mut serving = Vec::with_capacity(n_users);
    let mut hit = Vec::with_capacity(n_users);
    for j in 0..n_users {
        let file = real.user_request[j] as usize;
        let pos = real.user_pos[j];
        let mut best: Option<(f64, u32)> = None;
        let mut consider = |i: u32| {
            let d2 = torus_dist2(pos, real.bs_pos[i as usize], real.side);
            match best {
                Some((bd, bi)) if d2 > bd || (d2 == bd && i >= bi) => {}
                _ => best = Some((d2, i)),
            }
        };
        if contents.cached_file.get(file).copied().unwrap_or(false) {
            match &contents.index {
                CandidateIndex::Grouped {
                    group_sets,
                    group_bs,
                    ..
                } => {
                    for &g in &group_sets[file] {
                        for &i in &group_bs[g as usize] {
                            consider(i);
                        }
                    }
                }
                CandidateIndex::PerBs { file_bs, .. } => {
                    for &i in &file_bs[file] {
                        consider(i);
                    }
                }
            }
            serving.push(best.map(|(_, i)| i));
            hit.push(best.is_some());
        } else {
            for i in 0..real.bs_pos.len() as u32 {
                consider(i);
            }
            serving.push(best.map(|(_, i)| i));
            hit.push(false);
        }
    }
    Association { serving, hit }
}

/// Scheduling outcome for one realization.
pub struct ScheduleOutcome {
    pub scheduled: Vec<bool>,
    /// Served load G₀ per BS: cache hits plus backhaul admissions.
    pub served_load: Vec<u32>,
    pub backhaul_dropped: u64,
}

/// At each BS all cache-hit users are served; among backhaul users, if
/// more than B_B compete, B_B are drawn uniformly at random.
pub fn schedule(
    assoc: &Association,
    n_bs: usize,
    backhaul_files: u32,
    sched_seed: u64,
) -> ScheduleOutcome {
    let n_users = assoc.serving.len();
    let mut scheduled = vec![false; n_users];
    let mut hit_count = vec![0u32; n_bs];
    let mut backhaul_users: Vec<Vec<u32>> = vec![Vec::new(); n_bs];
    for (j, serving) in assoc.serving.iter().enumerate() {
        if let Some(bs) = serving {
            if assoc.hit[j] {
                scheduled[j] = true;
                hit_count[*bs as usize] += 1;
            } else {
                backhaul_users[*bs as usize].push(j as u32);
            }
        }
    }
    let mut dropped = 0u64;
    let mut served_load = vec![0u32; n_bs];
    for (bs, users) in backhaul_users.iter_mut().enumerate() {
        let admitted = (users.len() as u32).min(backhaul_files);
        if (users.len() as u32) > backhaul_files {
            // partial Fisher-Yates over the contenders, seeded per BS
            let mut rng = ChaCha12Rng::seed_from_u64(derive(sched_seed, &[TAG_SCHED, bs as u64]));
            for slot in 0..admitted as usize {
                let pick = rng.gen_range(slot..users.len());
                users.swap(slot, pick);
            }
            dropped += users.len() as u64 - admitted as u64;
        }
        for &j in users.iter().take(admitted as usize) {
            scheduled[j as usize] = true;
        }
        served_load[bs] = hit_count[bs] + admitted;
    }
    ScheduleOutcome {
        scheduled,
        served_load,
        backhaul_dropped: dropped,
    }
}

/// SIR threshold for serving load g0 over m subbands, 2^(m g0 τ/W) − 1.
#[inline]
fn rate_threshold(m: u32, g0: f64, cfg: &SystemConfig) -> f64 {
    let e = m as f64 * g0 * cfg.target_rate_bps / cfg.bandwidth_hz;
    f64::exp_m1(e * std::f64::consts::LN_2)
}

/// Rates every user: success means scheduled and achieving the target
/// rate against Rayleigh-faded interference from the serving group's
/// other BSs (all BSs transmit). An empty interference sum counts as
/// success in this interference-limited model.
pub fn evaluate(
    cfg: &SystemConfig,
    real: &Realization,
    contents: &BsContents,
    assoc: &Association,
    sched: &ScheduleOutcome,
    fading_seed: u64,
) -> TrialCounts {
    let alpha = cfg.pathloss_exp;
    let group_bs = contents.group_bs();
    let mut counts = TrialCounts {
        total: real.user_pos.len() as u64,
        backhaul_dropped: sched.backhaul_dropped,
        ..TrialCounts::default()
    };
    for j in 0..real.user_pos.len() {
        let Some(bs) = assoc.serving[j] else {
            counts.empty_candidates += 1;
            continue;
        };
        if !sched.scheduled[j] {
            continue;
        }
        let pos = real.user_pos[j];
        let d2 = torus_dist2(pos, real.bs_pos[bs as usize], real.side);
        let fade = unit_exponential(derive(fading_seed, &[TAG_FADING, j as u64, bs as u64]));
        let signal = fade * d2.powf(-alpha * 0.5);
        let group = real.bs_group[bs as usize] as usize;
        let mut interference = 0.0;
        for &i in &group_bs[group] {
            if i == bs {
                continue;
            }
            let di2 = torus_dist2(pos, real.bs_pos[i as usize], real.side);
            let h = unit_exponential(derive(fading_seed, &[TAG_FADING, j as u64, i as u64]));
            interference += h * di2.powf(-alpha * 0.5);
        }
        let threshold = rate_threshold(contents.m, sched.served_load[bs as usize] as f64, cfg);
        let ok =
            interference == 0.0 || (threshold.is_finite() && signal >= threshold * interference);
        if ok {
            counts.success += 1;
        } else {
            counts.phy_failures += 1;
        }
    }
    counts
}

/// Runs one complete trial on an existing realization.
pub fn evaluate_trial(
    cfg: &SystemConfig,
    real: &Realization,
    policy: &CachePolicy,
    cache_seed: u64,
    channel_seed: u64,
) -> Result<TrialCounts> {
    let contents = prepare_contents(policy, real, cfg, cache_seed)?;
    let assoc = associate(real, &contents);
    let sched = schedule(
        &assoc,
        real.bs_pos.len(),
        cfg.backhaul_files,
        derive(channel_seed, &[TAG_SCHED]),
    );
    Ok(evaluate(
        cfg,
        real,
        &contents,
        &assoc,
        &sched,
        derive(channel_seed, &[TAG_FADING]),
    ))
}

/// Wilson 95% half-width.
fn wilson_halfwidth(successes: u64, n: u64) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let z = 1.959963984540054_f64;
    let nf = n as f64;
    let p = successes as f64 / nf;
    let z2 = z * z;
    (z / (1.0 + z2 / nf)) * (p * (1.0 - p) / nf + z2 / (4.0 * nf * nf)).sqrt()
}

fn outcome_from_counts(counts: TrialCounts) -> SimOutcome {
    let p_hat = if counts.total == 0 {
        0.0
    } else {
        counts.success as f64 / counts.total as f64
    };
    let empty_rate = if counts.total == 0 {
        0.0
    } else {
        counts.empty_candidates as f64 / counts.total as f64
    };
    SimOutcome {
        p_hat,
        ci95: wilson_halfwidth(counts.success, counts.total),
        n_users: counts.total,
        n_success: counts.success,
        diagnostics: Diagnostics {
            empty_candidates: counts.empty_candidates,
            backhaul_dropped: counts.backhaul_dropped,
            phy_failures: counts.phy_failures,
        },
        window_warning: empty_rate > 1e-3,
    }
}

/// Estimates the success probability of a scheme over independent
/// realizations (or, in fixed-PPP mode, over request/fading redraws on
/// the trial-zero geometry). Deterministic in `options.base_seed` and
/// invariant to trial evaluation order.
pub fn estimate_p(
    cfg: &SystemConfig,
    rho: &Popularity,
    policy: &CachePolicy,
    m: u32,
    options: &SimOptions,
) -> Result<SimOutcome> {
    if options.n_trials == 0 {
        return Err(Error::InvalidConfig("n_trials must be at least 1".into()));
    }
    let side = window_side(cfg, m, options.bs_per_group);
    let base = options.base_seed;
    let counts = (0..options.n_trials)
        .into_par_iter()
        .map(|t| {
            let trial_seed = derive(base, &[TAG_TRIAL, t as u64]);
            let geom_seed = if options.fixed_ppp {
                derive(base, &[TAG_TRIAL, 0])
            } else {
                trial_seed
            };
            let real = generate(cfg, rho, m, side, geom_seed, trial_seed);
            evaluate_trial(cfg, &real, policy, geom_seed, trial_seed)
        })
        .try_reduce(TrialCounts::default, |a, b| Ok(a.merge(b)))?;
    Ok(outcome_from_counts(counts))
}

/// Conditional PHY validation: all-cached association (nearest BS, with
/// interference restricted to the serving group) and the rate threshold
/// forced to a given served load g. Estimates Pr[C ≥ τ | G₀ = g, S = 1].
pub fn conditional_phy_success(
    cfg: &SystemConfig,
    rho: &Popularity,
    m: u32,
    g0: f64,
    options: &SimOptions,
) -> SimOutcome {
    let side = window_side(cfg, m, options.bs_per_group);
    let base = options.base_seed;
    let alpha = cfg.pathloss_exp;
    let threshold = rate_threshold(m, g0, cfg);
    let counts = (0..options.n_trials)
        .into_par_iter()
        .map(|t| {
            let trial_seed = derive(base, &[TAG_TRIAL, t as u64]);
            let real = generate(cfg, rho, m, side, trial_seed, trial_seed);
            let mut group_bs = vec![Vec::new(); m as usize];
            for (i, &g) in real.bs_group.iter().enumerate() {
                group_bs[g as usize].push(i as u32);
            }
            let fading_seed = derive(trial_seed, &[TAG_FADING]);
            let mut counts = TrialCounts {
                total: real.user_pos.len() as u64,
                ..TrialCounts::default()
            };
            for (j, &pos) in real.user_pos.iter().enumerate() {
                let mut best: Option<(f64, u32)> = None;
                for (i, &bp) in real.bs_pos.iter().enumerate() {
                    let d2 = torus_dist2(pos, bp, real.side);
                    match best {
                        Some((bd, bi)) if d2 > bd || (d2 == bd && i as u32 >= bi) => {}
                        _ => best = Some((d2, i as u32)),
                    }
                }
                let Some((d2, bs)) = best else {
                    counts.empty_candidates += 1;
                    continue;
                };
                let fade =
                    unit_exponential(derive(fading_seed, &[TAG_FADING, j as u64, bs as u64]));
                let signal = fade * d2.powf(-alpha * 0.5);
                let group = real.bs_group[bs as usize] as usize;
                let mut interference = 0.0;
                for &i in &group_bs[group] {
                    if i == bs {
                        continue;
                    }
                    let di2 = torus_dist2(pos, real.bs_pos[i as usize], real.side);
                    let h =
                        unit_exponential(derive(fading_seed, &[TAG_FADING, j as u64, i as u64]));
                    interference += h * di2.powf(-alpha * 0.5);
                }
                let ok = interference == 0.0
                    || (threshold.is_finite() && signal >= threshold * interference);
                if ok {
                    counts.success += 1;
                } else {
                    counts.phy_failures += 1;
                }
            }
            counts
        })
        .reduce(TrialCounts::default, TrialCounts::merge);
    outcome_from_counts(counts)
}

/// Empirical per-file loading at the tagged BS, sampled user-weighted:
/// every user is tagged in turn and the request counts of its serving
/// cell are accumulated. Uses nearest-BS association (single band,
/// everything cached), under which the loading distribution is the
/// reference one. Returns per-file means and the number of tagged
/// samples.
pub fn loading_stats(
    cfg: &SystemConfig,
    rho: &Popularity,
    options: &SimOptions,
) -> (Vec<f64>, u64) {
    let side = window_side(cfg, 1, options.bs_per_group);
    let base = options.base_seed;
    let l_total = rho.len();
    let (sums, samples) = (0..options.n_trials)
        .into_par_iter()
        .map(|t| {
            let trial_seed = derive(base, &[TAG_TRIAL, t as u64]);
            let real = generate(cfg, rho, 1, side, trial_seed, trial_seed);
            let n_bs = real.bs_pos.len();
            let mut per_bs_file = vec![0u32; n_bs * l_total];
            let mut per_bs_total = vec![0u64; n_bs];
            let mut serving = Vec::with_capacity(real.user_pos.len());
            for &pos in &real.user_pos {
                let mut best: Option<(f64, u32)> = None;
                for (i, &bp) in real.bs_pos.iter().enumerate() {
                    let d2 = torus_dist2(pos, bp, real.side);
                    match best {
                        Some((bd, bi)) if d2 > bd || (d2 == bd && i as u32 >= bi) => {}
                        _ => best = Some((d2, i as u32)),
                    }
                }
                serving.push(best.map(|(_, i)| i));
            }
            for (j, s) in serving.iter().enumerate() {
                if let Some(bs) = s {
                    per_bs_file[*bs as usize * l_total + real.user_request[j] as usize] += 1;
                    per_bs_total[*bs as usize] += 1;
                }
            }
            // tagging every user weights each cell by its user count
            let mut sums = vec![0u64; l_total];
            let mut samples = 0u64;
            for bs in 0..n_bs {
                let w = per_bs_total[bs];
                if w == 0 {
                    continue;
                }
                samples += w;
                for l in 0..l_total {
                    let c = per_bs_file[bs * l_total + l] as u64;
                    if c > 0 {
                        sums[l] += w * c;
                    }
                }
            }
            (sums, samples)
        })
        .reduce(
            || (vec![0u64; l_total], 0u64),
            |(mut sa, na), (sb, nb)| {
                for (a, b) in sa.iter_mut().zip(&sb) {
                    *a += *b;
                }
                (sa, na + nb)
            },
        );
    let means = sums
        .iter()
        .map(|&s| {
            if samples == 0 {
                0.0
            } else {
                s as f64 / samples as f64
            }
        })
        .collect();
    (means, samples)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{zipf_popularity, CacheAllocation};

    fn small_cfg() -> SystemConfig {
        SystemConfig {
            library_size: 6,
            cache_files: 3,
            backhaul_files: 2,
            ..SystemConfig::default()
        }
    }

    #[test]
    fn generate_is_deterministic() {
        let cfg = small_cfg();
        let rho = zipf_popularity(6, 0.8).unwrap();
        let a = generate(&cfg, &rho, 3, 1000.0, 42, 42);
        let b = generate(&cfg, &rho, 3, 1000.0, 42, 42);
        assert_eq!(a.bs_pos, b.bs_pos);
        assert_eq!(a.bs_group, b.bs_group);
        assert_eq!(a.user_pos, b.user_pos);
        assert_eq!(a.user_request, b.user_request);
        let c = generate(&cfg, &rho, 3, 1000.0, 43, 43);
        assert_ne!(a.bs_pos, c.bs_pos);
    }

    #[test]
    fn generate_zero_user_density() {
        let cfg = SystemConfig {
            user_density: 0.0,
            ..small_cfg()
        };
        let rho = zipf_popularity(6, 0.8).unwrap();
        let real = generate(&cfg, &rho, 2, 800.0, 7, 7);
        assert!(real.user_pos.is_empty());
        assert!(real.user_request.is_empty());
    }

    #[test]
    fn generate_poisson_mean_bs_count() {
        let cfg = small_cfg();
        let rho = zipf_popularity(6, 0.8).unwrap();
        let side = 1000.0;
        let mean = cfg.bs_density * side * side; // 30
        let n = 1000;
        let total: u64 = (0..n)
            .map(|s| generate(&cfg, &rho, 1, side, s, s).bs_pos.len() as u64)
            .sum();
        let avg = total as f64 / n as f64;
        let se = (mean / n as f64).sqrt();
        assert!(
            (avg - mean).abs() < 3.0 * se,
            "BS count mean {avg} vs expected {mean} (se {se})"
        );
    }

    #[test]
    fn group_counts_match_thinning() {
        let cfg = small_cfg();
        let rho = zipf_popularity(6, 0.8).unwrap();
        let m = 3u32;
        let side = 1200.0;
        let mean = cfg.bs_density * side * side / m as f64;
        let n = 800;
        let mut count_sum = 0u64;
        let mut count_sq = 0.0f64;
        for s in 0..n {
            let real = generate(&cfg, &rho, m, side, s, s);
            let c = real.bs_group.iter().filter(|&&g| g == 1).count() as u64;
            count_sum += c;
            count_sq += (c * c) as f64;
        }
        let avg = count_sum as f64 / n as f64;
        let var = count_sq / n as f64 - avg * avg;
        let se_mean = (mean / n as f64).sqrt();
        assert!(
            (avg - mean).abs() < 3.0 * se_mean,
            "group mean {avg} vs {mean}"
        );
        // Poisson variance ~ mean; allow a generous band
        let se_var = mean * (2.0 / n as f64).sqrt() * 2.0;
        assert!(
            (var - mean).abs() < 3.0 * se_var,
            "group var {var} vs {mean}"
        );
    }

    #[test]
    fn systematic_sample_exact_count_and_marginals() {
        let probs = vec![0.9, 0.7, 0.5, 0.5, 0.4];
        let mut hits = vec![0u64; probs.len()];
        let n = 40_000u64;
        for i in 0..n {
            let u = unit_uniform(derive(5, &[TAG_CACHE, i]));
            let cache = systematic_sample(&probs, u);
            assert_eq!(cache.len(), 3, "sum of probs is 3");
            for &l in &cache {
                hits[l as usize] += 1;
            }
        }
        for (l, &b) in probs.iter().enumerate() {
            let freq = hits[l] as f64 / n as f64;
            assert!(
                (freq - b).abs() < 0.01,
                "file {l} frequency {freq} vs prob {b}"
            );
        }
    }

    #[test]
    fn association_prefers_storing_group() {
        // one BS of each group; the nearer BS does not store the file,
        // the farther one does: the user must be served by the farther
        let cfg = small_cfg();
        let real = Realization {
            side: 1000.0,
            bs_pos: vec![(500.0, 500.0), (600.0, 500.0)],
            bs_group: vec![1, 0],
            user_pos: vec![(510.0, 500.0)],
            user_request: vec![1],
        };
        // q = [2,1,1,1,0,0]: file 1 (index 1) lives only in group 0
        let alloc = CacheAllocation::new(2, vec![2, 1, 1, 1, 0, 0]);
        let map = build_placement(&alloc, 3).unwrap();
        assert_eq!(map.group_sets[1], vec![0]);
        let contents = prepare_contents(&CachePolicy::Grouped(alloc), &real, &cfg, 1).unwrap();
        let assoc = associate(&real, &contents);
        assert_eq!(assoc.serving[0], Some(1));
        assert!(assoc.hit[0]);
    }

    #[test]
    fn association_nearest_overall_when_uncached() {
        let cfg = small_cfg();
        let real = Realization {
            side: 1000.0,
            bs_pos: vec![(500.0, 500.0), (600.0, 500.0)],
            bs_group: vec![1, 0],
            user_pos: vec![(510.0, 500.0)],
            user_request: vec![5],
        };
        let alloc = CacheAllocation::new(2, vec![2, 1, 1, 1, 0, 0]);
        let contents = prepare_contents(&CachePolicy::Grouped(alloc), &real, &cfg, 1).unwrap();
        let assoc = associate(&real, &contents);
        assert_eq!(assoc.serving[0], Some(0));
        assert!(!assoc.hit[0]);
    }

    #[test]
    fn association_single_bs_serves_everyone() {
        let cfg = small_cfg();
        let real = Realization {
            side: 1000.0,
            bs_pos: vec![(100.0, 100.0)],
            bs_group: vec![0],
            user_pos: vec![(1.0, 1.0), (900.0, 900.0)],
            user_request: vec![0, 5],
        };
        let alloc = CacheAllocation::new(1, vec![1, 1, 1, 0, 0, 0]);
        let contents = prepare_contents(&CachePolicy::Grouped(alloc), &real, &cfg, 1).unwrap();
        let assoc = associate(&real, &contents);
        assert_eq!(assoc.serving, vec![Some(0), Some(0)]);
    }

    #[test]
    fn association_wraps_around_torus() {
        let cfg = small_cfg();
        let real = Realization {
            side: 1000.0,
            bs_pos: vec![(990.0, 500.0), (400.0, 500.0)],
            bs_group: vec![0, 0],
            user_pos: vec![(5.0, 500.0)],
            user_request: vec![0],
        };
        let alloc = CacheAllocation::new(1, vec![1, 0, 0, 0, 0, 0]);
        let contents = prepare_contents(&CachePolicy::Grouped(alloc), &real, &cfg, 1).unwrap();
        let assoc = associate(&real, &contents);
        // wrapped distance to BS 0 is 15, direct distance to BS 1 is 395
        assert_eq!(assoc.serving[0], Some(0));
    }

    #[test]
    fn schedule_respects_backhaul_budget() {
        // 5 backhaul users at one BS, budget 2
        let assoc = Association {
            serving: vec![Some(0); 5],
            hit: vec![false; 5],
        };
        let out = schedule(&assoc, 1, 2, 99);
        let admitted = out.scheduled.iter().filter(|&&s| s).count();
        assert_eq!(admitted, 2);
        assert_eq!(out.backhaul_dropped, 3);
        assert_eq!(out.served_load[0], 2);

        let none = schedule(&assoc, 1, 0, 99);
        assert_eq!(none.scheduled.iter().filter(|&&s| s).count(), 0);
        assert_eq!(none.served_load[0], 0);

        let all = schedule(&assoc, 1, 5, 99);
        assert_eq!(all.scheduled.iter().filter(|&&s| s).count(), 5);
        assert_eq!(all.backhaul_dropped, 0);
    }

    #[test]
    fn schedule_selection_is_uniform() {
        // empirical admission rate of a tagged contender over many seeds
        // must match 2/5 (within a generous band; the exact binomial test
        // lives in the acceptance suite)
        let assoc = Association {
            serving: vec![Some(0); 5],
            hit: vec![false; 5],
        };
        let n = 20_000;
        let mut tagged = 0u64;
        for s in 0..n {
            let out = schedule(&assoc, 1, 2, s);
            if out.scheduled[0] {
                tagged += 1;
            }
        }
        let rate = tagged as f64 / n as f64;
        assert!((rate - 0.4).abs() < 0.01, "tagged admission rate {rate}");
    }

    #[test]
    fn single_bs_single_user_cached_succeeds() {
        let cfg = small_cfg();
        let rho = zipf_popularity(6, 0.8).unwrap();
        let real = Realization {
            side: 1000.0,
            bs_pos: vec![(500.0, 500.0)],
            bs_group: vec![0],
            user_pos: vec![(510.0, 500.0)],
            user_request: vec![0],
        };
        let _ = rho;
        let alloc = CacheAllocation::new(1, vec![1, 1, 1, 0, 0, 0]);
        let counts = evaluate_trial(&cfg, &real, &CachePolicy::Grouped(alloc), 7, 7).unwrap();
        assert_eq!(counts.success, 1);
        assert_eq!(counts.total, 1);
    }

    #[test]
    fn huge_target_rate_fails_everyone() {
        let cfg = SystemConfig {
            target_rate_bps: 20e9, // tau = 1000 W
            ..small_cfg()
        };
        let rho = zipf_popularity(6, 0.8).unwrap();
        let alloc = CacheAllocation::new(1, vec![1, 1, 1, 0, 0, 0]);
        let opts = SimOptions {
            n_trials: 10,
            base_seed: 3,
            ..SimOptions::default()
        };
        let out = estimate_p(&cfg, &rho, &CachePolicy::Grouped(alloc), 1, &opts).unwrap();
        assert_eq!(out.n_success, 0);
        assert_eq!(out.p_hat, 0.0);
    }

    #[test]
    fn estimate_is_deterministic_and_seed_sensitive() {
        let cfg = small_cfg();
        let rho = zipf_popularity(6, 0.8).unwrap();
        let alloc = CacheAllocation::new(2, vec![2, 1, 1, 1, 0, 0]);
        let policy = CachePolicy::Grouped(alloc);
        let opts = SimOptions {
            n_trials: 20,
            base_seed: 5,
            bs_per_group: 25.0,
            ..SimOptions::default()
        };
        let a = estimate_p(&cfg, &rho, &policy, 2, &opts).unwrap();
        let b = estimate_p(&cfg, &rho, &policy, 2, &opts).unwrap();
        assert_eq!(a.p_hat.to_bits(), b.p_hat.to_bits());
        assert_eq!(a.n_users, b.n_users);
        assert_eq!(a.diagnostics, b.diagnostics);
        let opts2 = SimOptions {
            base_seed: 6,
            ..opts
        };
        let c = estimate_p(&cfg, &rho, &policy, 2, &opts2).unwrap();
        assert_ne!(a.n_users, c.n_users);
    }

    #[test]
    fn single_trial_equals_direct_evaluation() {
        let cfg = small_cfg();
        let rho = zipf_popularity(6, 0.8).unwrap();
        let alloc = CacheAllocation::new(2, vec![2, 1, 1, 1, 0, 0]);
        let policy = CachePolicy::Grouped(alloc);
        let opts = SimOptions {
            n_trials: 1,
            base_seed: 11,
            bs_per_group: 25.0,
            ..SimOptions::default()
        };
        let out = estimate_p(&cfg, &rho, &policy, 2, &opts).unwrap();
        let side = window_side(&cfg, 2, 25.0);
        let trial_seed = derive(11, &[TAG_TRIAL, 0]);
        let real = generate(&cfg, &rho, 2, side, trial_seed, trial_seed);
        let counts = evaluate_trial(&cfg, &real, &policy, trial_seed, trial_seed).unwrap();
        assert_eq!(out.n_success, counts.success);
        assert_eq!(out.n_users, counts.total);
    }

    #[test]
    fn translation_invariance_on_torus() {
        let cfg = small_cfg();
        let rho = zipf_popularity(6, 0.8).unwrap();
        let side = window_side(&cfg, 2, 25.0);
        let trial_seed = derive(13, &[TAG_TRIAL, 0]);
        let mut real = generate(&cfg, &rho, 2, side, trial_seed, trial_seed);
        let alloc = CacheAllocation::new(2, vec![2, 1, 1, 1, 0, 0]);
        let policy = CachePolicy::Grouped(alloc);
        let base = evaluate_trial(&cfg, &real, &policy, trial_seed, trial_seed).unwrap();
        let shift = (123.4, 567.8);
        for p in real.bs_pos.iter_mut().chain(real.user_pos.iter_mut()) {
            p.0 = (p.0 + shift.0).rem_euclid(side);
            p.1 = (p.1 + shift.1).rem_euclid(side);
        }
        let shifted = evaluate_trial(&cfg, &real, &policy, trial_seed, trial_seed).unwrap();
        assert_eq!(base.success, shifted.success);
        assert_eq!(base.backhaul_dropped, shifted.backhaul_dropped);
        assert_eq!(base.phy_failures, shifted.phy_failures);
    }

    #[test]
    fn fixed_ppp_reuses_geometry() {
        let cfg = small_cfg();
        let rho = zipf_popularity(6, 0.8).unwrap();
        let opts = SimOptions {
            n_trials: 5,
            base_seed: 21,
            bs_per_group: 25.0,
            fixed_ppp: true,
        };
        // all trials share trial-zero geometry: user counts are n_trials
        // times the trial-zero population
        let side = window_side(&cfg, 1, 25.0);
        let t0 = derive(21, &[TAG_TRIAL, 0]);
        let real0 = generate(&cfg, &rho, 1, side, t0, t0);
        let alloc = CacheAllocation::new(1, vec![1, 1, 1, 0, 0, 0]);
        let out = estimate_p(&cfg, &rho, &CachePolicy::Grouped(alloc), 1, &opts).unwrap();
        assert_eq!(out.n_users, 5 * real0.user_pos.len() as u64);
    }

    #[test]
    fn dump_realization_format() {
        let real = Realization {
            side: 10.0,
            bs_pos: vec![(1.0, 2.0)],
            bs_group: vec![0],
            user_pos: vec![(3.0, 4.0)],
            user_request: vec![0],
        };
        let mut buf = Vec::new();
        dump_realization(&real, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("kind,x,y,group_or_request"));
        assert_eq!(lines.next(), Some("bs,1,2,0"));
        assert_eq!(lines.next(), Some("user,3,4,1")); // 1-based file index
    }
}
