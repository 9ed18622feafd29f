//! Counting surviving maximal-path ancestries, equitable vertex sets, the
//! evolve-and-split construction and the equitability cascade.

use std::collections::BTreeMap;

use num::rational::Ratio;
use num::{Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::diagram::BratteliDiagram;
use crate::ordering::{max_edge_source, Order};
use crate::rng::trial_seed;
use crate::stats::equitability_failure_bound;

/// Signed exact ratio for deviations.
pub type SRational = Ratio<i64>;

#[derive(Debug, Error, PartialEq)]
pub enum CensusError {
    #[error("diagram lacks required property: {0}")]
    MissingProperty(String),
    #[error("schedule level {level} has size {size}, need > 4^{k}")]
    ScheduleSizeCondition { k: usize, level: usize, size: usize },
    #[error("no schedule of length {0} fits within the diagram depth")]
    ScheduleInfeasible(usize),
    #[error("split family failed its checks; refusing to read iota prefixes")]
    FamilyNotGood,
    #[error("vertex {0} is not in any leaf set of the family")]
    VertexNotCovered(usize),
}

/// Distinct values of the tribe map `V_N -> V_k`, ascending.
pub fn surviving_tribes(
    diagram: &BratteliDiagram,
    order: &Order,
    k: usize,
    big_n: usize,
) -> Vec<usize> {
    let t = crate::ordering::ancestry_table(diagram, order, k, big_n);
    let mut seen = vec![false; diagram.level_size(k)];
    for &v in &t.tribe {
        seen[v] = true;
    }
    (0..seen.len()).filter(|&v| seen[v]).collect()
}

/// Empirical distribution of surviving-tribe counts at each scheduled depth.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JHistogram {
    pub k: usize,
    pub depths: Vec<usize>,
    pub trials: u64,
    /// `counts[d][j]` = number of trials with exactly `j` surviving tribes at
    /// `depths[d]`.
    pub counts: Vec<Vec<u64>>,
}

impl JHistogram {
    pub fn fraction_at_least(&self, depth_index: usize, j: usize) -> f64 {
        let total: u64 = self.counts[depth_index][j..].iter().sum();
        total as f64 / self.trials as f64
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("depth,j,trials\n");
        for (d, hist) in self.depths.iter().zip(&self.counts) {
            for (j, &c) in hist.iter().enumerate() {
                if c > 0 {
                    out.push_str(&format!("{d},{j},{c}\n"));
                }
            }
        }
        out
    }
}

/// Counts surviving level-`k` tribes at every depth in `schedule`, per trial,
/// via the maximal-edge parent draw (no full orders materialized).
pub fn estimate_j(
    diagram: &BratteliDiagram,
    k: usize,
    schedule: &[usize],
    trials: u64,
    seed: u64,
) -> JHistogram {
    assert!(!schedule.is_empty());
    assert!(schedule.windows(2).all(|w| w[0] < w[1]));
    assert!(k < schedule[0] && *schedule.last().unwrap() < diagram.depth());
    let size_k = diagram.level_size(k);
    let per_trial: Vec<Vec<usize>> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let s = trial_seed(seed, t);
            let mut tribe: Vec<usize> = (0..size_k).collect();
            let mut level = k;
            let mut counts = Vec::with_capacity(schedule.len());
            for &target in schedule {
                while level < target {
                    level += 1;
                    tribe = (0..diagram.level_size(level))
                        .map(|v| tribe[max_edge_source(diagram, s, level, v)])
                        .collect();
                }
                let mut seen = vec![false; size_k];
                let mut j = 0;
                for &x in &tribe {
                    if !seen[x] {
                        seen[x] = true;
                        j += 1;
                    }
                }
                counts.push(j);
            }
            // Ancestries only merge as depth grows.
            debug_assert!(counts.windows(2).all(|w| w[1] <= w[0]));
            counts
        })
        .collect();
    let mut counts = vec![vec![0u64; size_k + 1]; schedule.len()];
    for trial in &per_trial {
        for (d, &j) in trial.iter().enumerate() {
            counts[d][j] += 1;
        }
    }
    JHistogram { k, depths: schedule.to_vec(), trials, counts }
}

// ── Equitability ────────────────────────────────────────────────────────────

/// Exact equitability evaluation of one set at one level.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EquitabilityReport {
    pub level: usize,
    pub set: Vec<usize>,
    pub beta: SRational,
    pub eps: SRational,
    /// Max over `v` in `V_{n+1}` and multiplicities `i` of
    /// `| |A cap V_n^{v,i}| / |V_n^{v,i}| - beta |`.
    pub worst_deviation: SRational,
    pub pass: bool,
}

/// Evaluates `(beta, eps)`-equitability of `a` at level `n` against the
/// multiplicity classes of level `n + 1`, with exact rationals.
pub fn check_equitable(
    diagram: &BratteliDiagram,
    n: usize,
    a: &[usize],
    beta: SRational,
    eps: SRational,
) -> EquitabilityReport {
    assert!(n + 1 < diagram.depth());
    let mut member = vec![false; diagram.level_size(n)];
    for &v in a {
        member[v] = true;
    }
    let m = diagram.incidence(n);
    let r = m.max_entry();
    let mut worst = SRational::zero();
    // Identical rows mean identical multiplicity classes: check one vertex.
    let rows_to_check = if m.uniform_entry().is_some() { 1 } else { m.rows() };
    for v in 0..rows_to_check {
        for i in 1..=r {
            let class = diagram.multiplicity_class(n, v, i);
            if class.is_empty() {
                continue;
            }
            let inside = class.iter().filter(|&&w| member[w]).count() as i64;
            let dev = (SRational::new(inside, class.len() as i64) - beta).abs();
            if dev > worst {
                worst = dev;
            }
        }
    }
    EquitabilityReport {
        level: n,
        set: a.to_vec(),
        beta,
        eps,
        worst_deviation: worst,
        pass: worst <= eps,
    }
}

/// Search outcome of [`find_equitable_set`].
#[derive(Debug, Clone, PartialEq)]
pub struct EquitableSearch {
    pub set: Option<Vec<usize>>,
    pub attempts_used: u64,
    /// `2 r |V_{n+1}| e^{-2 alpha |V_n| eps^2}` (the exponent the Hoeffding
    /// computation yields).
    pub bound_strong: f64,
    /// Same with exponent factor 1 (the weaker stated form).
    pub bound_weak: f64,
}

fn impartiality_of(
    diagram: &BratteliDiagram,
) -> Result<crate::diagram::Impartiality, CensusError> {
    diagram
        .classify(&[])
        .impartial
        .ok_or_else(|| CensusError::MissingProperty("impartial".into()))
}

/// Draws independent p = 1/2 subsets of `V_n` until one is `(1/2, eps)`-
/// equitable, up to `attempts` tries. Requires an impartial diagram; the
/// Hoeffding-style failure bounds are reported alongside.
pub fn find_equitable_set(
    diagram: &BratteliDiagram,
    n: usize,
    eps: SRational,
    attempts: u64,
    seed: u64,
) -> Result<EquitableSearch, CensusError> {
    let imp = impartiality_of(diagram)?;
    let alpha = *imp.alpha.numer() as f64 / *imp.alpha.denom() as f64;
    let eps_f = *eps.numer() as f64 / *eps.denom() as f64;
    let bound = |c| {
        equitability_failure_bound(
            imp.r,
            diagram.level_size(n + 1),
            alpha,
            diagram.level_size(n),
            eps_f,
            c,
        )
    };
    let beta = SRational::new(1, 2);
    for attempt in 0..attempts {
        let set = random_half_subset(diagram.level_size(n), trial_seed(seed, attempt));
        if check_equitable(diagram, n, &set, beta, eps).pass {
            return Ok(EquitableSearch {
                set: Some(set),
                attempts_used: attempt + 1,
                bound_strong: bound(2.0),
                bound_weak: bound(1.0),
            });
        }
    }
    Ok(EquitableSearch {
        set: None,
        attempts_used: attempts,
        bound_strong: bound(2.0),
        bound_weak: bound(1.0),
    })
}

fn random_half_subset(size: usize, seed: u64) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..size).filter(|_| rng.gen_bool(0.5)).collect()
}

/// Fraction of random p = 1/2 subsets failing `(1/2, eps)`-equitability.
pub fn equitability_failure_rate(
    diagram: &BratteliDiagram,
    n: usize,
    eps: SRational,
    subsets: u64,
    seed: u64,
) -> f64 {
    let beta = SRational::new(1, 2);
    let failures: u64 = (0..subsets)
        .into_par_iter()
        .map(|i| {
            let set = random_half_subset(diagram.level_size(n), trial_seed(seed, i));
            !check_equitable(diagram, n, &set, beta, eps).pass as u64
        })
        .sum();
    failures as f64 / subsets as f64
}

/// Exact probability that the omega-maximal incoming edge of `v` (level
/// `n + 1`) has its source in `a`: `sum_i i |A cap V_n^{v,i}| / sum_i i
/// |V_n^{v,i}|`.
pub fn mean_inclusion_probability(
    diagram: &BratteliDiagram,
    n: usize,
    a: &[usize],
    v: usize,
) -> SRational {
    let m = diagram.incidence(n);
    let mut member = vec![false; m.cols()];
    for &w in a {
        member[w] = true;
    }
    let mut num = 0i64;
    let mut den = 0i64;
    for w in 0..m.cols() {
        let i = m.entry(v, w) as i64;
        den += i;
        if member[w] {
            num += i;
        }
    }
    SRational::new(num, den)
}

// ── Evolve and split ────────────────────────────────────────────────────────

/// One Eq.-style drift check between consecutive scheduled levels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitCheck {
    pub label: String,
    pub from_level: usize,
    pub to_level: usize,
    pub drift: SRational,
    /// `4^{-(k+1)}` for a label of length `k`.
    pub budget: SRational,
    pub pass: bool,
}

/// The family `A_s` over a split schedule, with its per-split checks.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitFamily {
    /// Levels `n_0 = 0 < n_1 < ... < n_K`.
    pub schedule: Vec<usize>,
    /// Binary label (root is the empty string) to sorted vertex set at level
    /// `n_{|s|}`.
    pub sets: BTreeMap<String, Vec<usize>>,
    pub kappa: f64,
    pub checks: Vec<SplitCheck>,
    pub good: bool,
}

impl SplitFamily {
    pub fn leaf_labels(&self) -> Vec<String> {
        let k = self.schedule.len() - 1;
        self.sets.keys().filter(|s| s.len() == k).cloned().collect()
    }

    /// `s -> v v v ...` dump, one line per set.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for (s, set) in &self.sets {
            let label = if s.is_empty() { "-" } else { s.as_str() };
            out.push_str(label);
            out.push_str(" ->");
            for v in set {
                out.push_str(&format!(" {v}"));
            }
            out.push('\n');
        }
        out
    }
}

/// Runs the evolve-and-split construction for one seeded order: evolve each
/// `A_s` to the next scheduled level along maximal-edge ancestry, split the
/// image into the first `ceil(|image|/2)` vertices (ascending index) and the
/// rest, and check the frequency drift against `4^{-(k+1)}`.
pub fn evolve_and_split(
    diagram: &BratteliDiagram,
    seed: u64,
    schedule: &[usize],
    kappa: f64,
) -> Result<SplitFamily, CensusError> {
    assert!(schedule.first() == Some(&0) && schedule.windows(2).all(|w| w[0] < w[1]));
    assert!(*schedule.last().unwrap() < diagram.depth());
    // The root stage starts from the single level-0 vertex; the size
    // condition binds from the first split on.
    for (k, &n_k) in schedule.iter().enumerate().skip(1) {
        let size = diagram.level_size(n_k);
        if (size as u128) <= 4u128.pow(k as u32) {
            return Err(CensusError::ScheduleSizeCondition { k, level: n_k, size });
        }
    }
    let big_k = schedule.len() - 1;
    let mut sets = BTreeMap::new();
    sets.insert(String::new(), (0..diagram.level_size(0)).collect::<Vec<usize>>());
    let mut checks = Vec::new();
    let mut good = true;
    for k in 0..big_k {
        let (from, to) = (schedule[k], schedule[k + 1]);
        // Ancestor map V_{n_{k+1}} -> V_{n_k}, shared by all sets at stage k.
        let mut anc: Vec<usize> = (0..diagram.level_size(from)).collect();
        for m in from + 1..=to {
            anc = (0..diagram.level_size(m))
                .map(|v| anc[max_edge_source(diagram, seed, m, v)])
                .collect();
        }
        let labels: Vec<String> = sets
            .keys()
            .filter(|s| s.len() == k)
            .cloned()
            .collect();
        for s in labels {
            let a_s = &sets[&s];
            let mut member = vec![false; diagram.level_size(from)];
            for &v in a_s {
                member[v] = true;
            }
            let image: Vec<usize> = (0..diagram.level_size(to))
                .filter(|&v| member[anc[v]])
                .collect();
            let drift = (SRational::new(image.len() as i64, diagram.level_size(to) as i64)
                - SRational::new(a_s.len() as i64, diagram.level_size(from) as i64))
            .abs();
            let budget = SRational::new(1, 4i64.pow(k as u32 + 1));
            let pass = drift < budget;
            good &= pass;
            checks.push(SplitCheck {
                label: s.clone(),
                from_level: from,
                to_level: to,
                drift,
                budget,
                pass,
            });
            let half = image.len().div_ceil(2);
            sets.insert(format!("{s}0"), image[..half].to_vec());
            sets.insert(format!("{s}1"), image[half..].to_vec());
        }
    }
    if good {
        // A good family realizes every binary string with a nonempty set.
        assert!(sets.values().all(|s| !s.is_empty()));
    }
    Ok(SplitFamily { schedule: schedule.to_vec(), sets, kappa, checks, good })
}

/// The unique leaf label whose set contains `v` (level `n_K`).
pub fn iota_prefix(family: &SplitFamily, v: usize) -> Result<String, CensusError> {
    if !family.good {
        return Err(CensusError::FamilyNotGood);
    }
    let k = family.schedule.len() - 1;
    for (s, set) in &family.sets {
        if s.len() == k && set.contains(&v) {
            return Ok(s.clone());
        }
    }
    Err(CensusError::VertexNotCovered(v))
}

/// Fraction of seeds whose family passes all checks with nonempty leaves.
pub fn good_family_fraction(
    diagram: &BratteliDiagram,
    schedule: &[usize],
    trials: u64,
    seed: u64,
    kappa: f64,
) -> Result<f64, CensusError> {
    // Validate the schedule once up front.
    evolve_and_split(diagram, seed, schedule, kappa)?;
    let good: u64 = (0..trials)
        .into_par_iter()
        .map(|t| {
            let f = evolve_and_split(diagram, trial_seed(seed, t), schedule, kappa)
                .expect("schedule validated");
            (f.good && f.sets.values().all(|s| !s.is_empty())) as u64
        })
        .sum();
    Ok(good as f64 / trials as f64)
}

/// How a schedule was produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScheduleKind {
    /// Every stage also satisfies the tail variance-sum budget.
    GreedyWithinBudget,
    /// Size condition only; stages packed at the deepest levels because the
    /// variance budget is unattainable at this depth.
    PackedFallback,
}

/// Picks `n_k` greedily as the smallest level with `M_{n_k} > 4^k` whose tail
/// variance sum `sum_{j > n_k} 1/(4 M_j)` fits the stage budget
/// `kappa 4^{-k} (4^{-(k+1)})^2`; if some stage cannot meet the budget within
/// depth, falls back to packing the stages at the deepest levels (size
/// condition still enforced).
pub fn greedy_schedule(
    diagram: &BratteliDiagram,
    big_k: usize,
    kappa: f64,
) -> Result<(Vec<usize>, ScheduleKind), CensusError> {
    let depth = diagram.depth();
    let tail_sum: Vec<f64> = {
        // tail[n] = sum_{j > n, j < depth} 1/(4 M_j).
        let mut tail = vec![0.0; depth];
        for n in (0..depth - 1).rev() {
            tail[n] = tail[n + 1] + 1.0 / (4.0 * diagram.level_size(n + 1) as f64);
        }
        tail
    };
    let mut schedule = vec![0usize];
    let mut within_budget = true;
    for k in 1..=big_k {
        let budget = kappa * 4f64.powi(-(k as i32)) * 16f64.powi(-(k as i32 + 1));
        let prev = *schedule.last().unwrap();
        let found = (prev + 1..depth).find(|&n| {
            (diagram.level_size(n) as u128) > 4u128.pow(k as u32) && tail_sum[n] < budget
        });
        match found {
            Some(n) => schedule.push(n),
            None => {
                within_budget = false;
                break;
            }
        }
    }
    if within_budget {
        return Ok((schedule, ScheduleKind::GreedyWithinBudget));
    }
    // Packed fallback: n_k = depth - 1 - (K - k).
    if big_k >= depth {
        return Err(CensusError::ScheduleInfeasible(big_k));
    }
    let mut packed = vec![0usize];
    for k in 1..=big_k {
        let n_k = depth - 1 - (big_k - k);
        if n_k == 0 {
            return Err(CensusError::ScheduleInfeasible(big_k));
        }
        let size = diagram.level_size(n_k);
        if (size as u128) <= 4u128.pow(k as u32) {
            return Err(CensusError::ScheduleSizeCondition { k, level: n_k, size });
        }
        packed.push(n_k);
    }
    Ok((packed, ScheduleKind::PackedFallback))
}

// ── Equitability cascade ────────────────────────────────────────────────────

#[derive(Debug, Clone, PartialEq)]
pub struct CascadeLevel {
    pub level: usize,
    pub set_size: usize,
    pub deviation: SRational,
    /// Accumulated tolerance `delta_{N+k} = sum_{i <= k} eps_{N+i}`.
    pub delta: f64,
    pub pass: bool,
    /// `2 r |V_{level+2}| e^{-2 alpha |V_{level+1}| eps^2}` for this step.
    pub analytic_bound: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CascadeTrace {
    pub start_level: usize,
    pub levels: Vec<CascadeLevel>,
    pub first_failure: Option<usize>,
    pub success: bool,
}

impl CascadeTrace {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("level,set_size,deviation_num,deviation_den,pass\n");
        for l in &self.levels {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                l.level,
                l.set_size,
                l.deviation.numer(),
                l.deviation.denom(),
                l.pass as u8
            ));
        }
        out
    }
}

/// Propagates `initial` (a `(1/2, eps[0])`-equitable set at `start_level`)
/// along maximal-edge ancestry and checks `delta`-equitability at each level,
/// where `delta` accumulates the `eps` entries. Requires an impartial,
/// superquadratic, exponentially bounded diagram (classification options are
/// the caller's).
pub fn equitability_cascade(
    diagram: &BratteliDiagram,
    seed: u64,
    start_level: usize,
    initial: &[usize],
    eps: &[f64],
    depth: usize,
    delta_candidates: &[f64],
    exp_tol: f64,
) -> Result<CascadeTrace, CensusError> {
    let class = diagram.classify_with_tolerance(delta_candidates, exp_tol);
    if class.impartial.is_none() {
        return Err(CensusError::MissingProperty("impartial".into()));
    }
    if class.superquadratic.is_none() {
        return Err(CensusError::MissingProperty("superquadratic".into()));
    }
    if !class.exponentially_bounded {
        return Err(CensusError::MissingProperty("exponentially bounded".into()));
    }
    let imp = class.impartial.unwrap();
    let alpha = *imp.alpha.numer() as f64 / *imp.alpha.denom() as f64;
    assert!(depth <= diagram.depth() && start_level < depth);
    assert!(eps.len() >= depth - start_level, "need one eps per cascade step");
    assert!(eps.iter().take(depth - start_level).sum::<f64>() < 0.5);

    let beta = SRational::new(1, 2);
    let mut member = vec![false; diagram.level_size(start_level)];
    for &v in initial {
        member[v] = true;
    }
    let mut levels = Vec::new();
    let mut first_failure = None;
    let mut delta = 0.0;
    for (step, level) in (start_level..depth).enumerate() {
        if step > 0 {
            member = (0..diagram.level_size(level))
                .map(|v| member[max_edge_source(diagram, seed, level, v)])
                .collect();
        }
        delta += eps[step];
        let set: Vec<usize> = (0..member.len()).filter(|&v| member[v]).collect();
        // Equitability is defined against the next level's classes; the last
        // stored level has none to check.
        if level + 1 >= diagram.depth() {
            break;
        }
        let report = check_equitable(diagram, level, &set, beta, SRational::new(1, 1));
        let dev = *report.worst_deviation.numer() as f64
            / *report.worst_deviation.denom() as f64;
        let pass = dev <= delta;
        if !pass && first_failure.is_none() {
            first_failure = Some(level);
        }
        let analytic_bound = if level + 2 < diagram.depth() {
            equitability_failure_bound(
                imp.r,
                diagram.level_size(level + 2),
                alpha,
                diagram.level_size(level + 1),
                eps[step],
                2.0,
            )
        } else {
            f64::NAN
        };
        levels.push(CascadeLevel {
            level,
            set_size: set.len(),
            deviation: report.worst_deviation,
            delta,
            pass,
            analytic_bound,
        });
    }
    Ok(CascadeTrace {
        start_level,
        levels,
        first_failure,
        success: first_failure.is_none(),
    })
}

/// Default tolerance sequence `eps_j = c j^{-(1 + delta/3)}` for
/// `j = start + 1, ...`, scaled so the infinite tail past `start` stays
/// below 1/2.
pub fn default_eps_sequence(start: usize, count: usize, delta: f64) -> Vec<f64> {
    let p = 1.0 + delta / 3.0;
    let horizon = (start + count).max(start + 1) + 1000;
    let finite: f64 = (start + 1..=horizon).map(|j| (j as f64).powf(-p)).sum();
    let tail = (horizon as f64).powf(1.0 - p) / (p - 1.0);
    let c = 0.49 / (finite + tail);
    (0..count)
        .map(|i| c * ((start + 1 + i) as f64).powf(-p))
        .collect()
}
