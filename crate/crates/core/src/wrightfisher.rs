//! The Wright-Fisher correspondence: allele propagation along maximal-edge
//! ancestry, allele-frequency trajectories with exact rational frequencies,
//! martingale and decay statistics, and the divergence dichotomy scan.
//!
//! On all-ones incidence the parent of each vertex is uniform on the previous
//! level, which is the classical Wright-Fisher model with variable population
//! sizes. With larger incidence entries the parent is the source of the
//! omega-maximal incoming edge, so parent probabilities are proportional to
//! edge multiplicities; the probabilistic assertions in this module are made
//! for the all-ones case only.

use num::rational::Ratio;
use num::{BigInt, BigRational, One};
use rayon::prelude::*;

use crate::diagram::{BratteliDiagram, DiagramError};
use crate::ordering::max_edge_source;
use crate::rng::trial_seed;
use crate::stats::{chi_square_merged, chi_square_p_value, mean_se};

/// Exact allele frequency `|S|/M_n`.
pub type Freq = Ratio<u64>;

/// Allele labels over one level.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AlleleState {
    pub level: usize,
    pub alleles: Vec<u32>,
}

impl AlleleState {
    /// Indicator state: allele 1 on `set`, 0 elsewhere.
    pub fn indicator(level: usize, size: usize, set: &[usize]) -> Self {
        let mut alleles = vec![0u32; size];
        for &v in set {
            alleles[v] = 1;
        }
        AlleleState { level, alleles }
    }

    pub fn distinct(level: usize, size: usize) -> Self {
        AlleleState { level, alleles: (0..size as u32).collect() }
    }

    pub fn count_label(&self, label: u32) -> usize {
        self.alleles.iter().filter(|&&a| a == label).count()
    }

    pub fn distinct_labels(&self) -> usize {
        let mut seen = std::collections::HashSet::new();
        self.alleles.iter().for_each(|&a| {
            seen.insert(a);
        });
        seen.len()
    }
}

/// Pushes the allele assignment up to `to_level`: each vertex inherits from
/// the source of its omega-maximal incoming edge, under the same per-vertex
/// substream as full order sampling.
pub fn propagate(
    diagram: &BratteliDiagram,
    seed: u64,
    initial: &AlleleState,
    to_level: usize,
) -> Result<AlleleState, DiagramError> {
    diagram.check_vertex(initial.level, 0)?;
    diagram.check_vertex(to_level, 0)?;
    assert_eq!(initial.alleles.len(), diagram.level_size(initial.level));
    let mut cur = initial.alleles.clone();
    for m in initial.level..to_level {
        let next_size = diagram.level_size(m + 1);
        let mut next = Vec::with_capacity(next_size);
        for v in 0..next_size {
            next.push(cur[max_edge_source(diagram, seed, m + 1, v)]);
        }
        cur = next;
    }
    Ok(AlleleState { level: to_level, alleles: cur })
}

/// Frequency path of allele 1 with absorption events.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Trajectory {
    pub start_level: usize,
    /// `y[i]` is `Y_{start_level + i}`.
    pub y: Vec<Freq>,
    /// `q[i] = y[i] (1 - y[i])`.
    pub q: Vec<Freq>,
    /// First level with `Y = 1`.
    pub domination: Option<usize>,
    /// First level with `Y = 0`.
    pub extinction: Option<usize>,
    /// Absorbed at either end within the stored depth.
    pub fixated: bool,
}

/// One seeded trajectory of the indicator of `set` from `start_level` to
/// `depth - 1` (inclusive).
pub fn run_trial(
    diagram: &BratteliDiagram,
    start_level: usize,
    set: &[usize],
    seed: u64,
    depth: usize,
) -> Trajectory {
    assert!(start_level < depth && depth <= diagram.depth());
    let mut state = AlleleState::indicator(start_level, diagram.level_size(start_level), set);
    let mut y = Vec::with_capacity(depth - start_level);
    let mut q = Vec::with_capacity(depth - start_level);
    let mut domination = None;
    let mut extinction = None;
    for level in start_level..depth {
        if level > start_level {
            state = propagate(diagram, seed, &state, level).expect("levels validated");
        }
        let count = state.count_label(1) as u64;
        let m = diagram.level_size(level) as u64;
        let yv = Freq::new(count, m);
        if yv == Freq::new(1, 1) && domination.is_none() {
            domination = Some(level);
        }
        if yv == Freq::new(0, 1) && extinction.is_none() {
            extinction = Some(level);
        }
        q.push(yv * (Freq::new(1, 1) - yv));
        y.push(yv);
    }
    Trajectory {
        start_level,
        y,
        q,
        domination,
        extinction,
        fixated: domination.is_some() || extinction.is_some(),
    }
}

/// `E Q_n = q0 * prod_{j=first..=n} (1 - 1/M_j)` with `sizes[j] = M_j`.
///
/// The product starts at `first` (the level after the initial one) and is
/// exact; levels with `M_j = 1` zero it.
pub fn expected_q(sizes: &[usize], q0: &BigRational, first: usize, n: usize) -> BigRational {
    let mut acc = q0.clone();
    for j in first..=n {
        let m = BigInt::from(sizes[j] as u64);
        acc *= BigRational::new(&m - BigInt::one(), m);
    }
    acc
}

/// Per-level Monte Carlo summaries of a trajectory ensemble.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelStats {
    pub level: usize,
    pub mean_y: f64,
    pub se_y: f64,
    pub mean_q: f64,
    pub se_q: f64,
    pub expected_q: f64,
}

/// Check that `(Y_n - Y_{n-1})^2` averages to `mean(Q_{n-1}) / M_n`.
#[derive(Debug, Clone, PartialEq)]
pub struct VarianceCheck {
    pub level: usize,
    pub mean_sq_increment: f64,
    pub se: f64,
    pub target: f64,
}

impl VarianceCheck {
    pub fn within(&self, z: f64) -> bool {
        (self.mean_sq_increment - self.target).abs() <= z * self.se
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MartingaleStats {
    pub levels: Vec<LevelStats>,
    pub variance_checks: Vec<VarianceCheck>,
    pub trajectories: Vec<Trajectory>,
}

impl MartingaleStats {
    /// `level,meanY,seY,meanQ,seQ,expectedQ` summary.
    pub fn summary_csv(&self) -> String {
        let mut out = String::from("level,meanY,seY,meanQ,seQ,expectedQ\n");
        for l in &self.levels {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                l.level, l.mean_y, l.se_y, l.mean_q, l.se_q, l.expected_q
            ));
        }
        out
    }
}

/// `trial,level,Y_num,Y_den,event` rows for a trajectory ensemble.
pub fn trajectory_csv(trajectories: &[Trajectory]) -> String {
    let mut out = String::from("trial,level,Y_num,Y_den,event\n");
    for (t, tr) in trajectories.iter().enumerate() {
        for (i, y) in tr.y.iter().enumerate() {
            let level = tr.start_level + i;
            let event = if tr.domination == Some(level) {
                "dominated"
            } else if tr.extinction == Some(level) {
                "extinct"
            } else {
                ""
            };
            out.push_str(&format!("{},{},{},{},{}\n", t, level, y.numer(), y.denom(), event));
        }
    }
    out
}

/// Runs `trials` independent trajectories and aggregates the martingale,
/// decay and conditional-variance statistics.
pub fn martingale_stats(
    diagram: &BratteliDiagram,
    start_level: usize,
    set: &[usize],
    trials: u64,
    seed: u64,
    depth: usize,
) -> MartingaleStats {
    let trajectories: Vec<Trajectory> = (0..trials)
        .into_par_iter()
        .map(|t| run_trial(diagram, start_level, set, trial_seed(seed, t), depth))
        .collect();
    let m0 = diagram.level_size(start_level) as u64;
    let q0 = {
        let y = BigRational::new(BigInt::from(set.len() as u64), BigInt::from(m0));
        &y * (BigRational::one() - &y)
    };
    let levels: Vec<LevelStats> = (start_level..depth)
        .map(|level| {
            let i = level - start_level;
            let ys: Vec<f64> = trajectories
                .iter()
                .map(|t| ratio_f64(&t.y[i]))
                .collect();
            let qs: Vec<f64> = trajectories
                .iter()
                .map(|t| ratio_f64(&t.q[i]))
                .collect();
            let (mean_y, se_y) = mean_se(&ys);
            let (mean_q, se_q) = mean_se(&qs);
            let eq = expected_q(diagram.level_sizes(), &q0, start_level + 1, level);
            LevelStats {
                level,
                mean_y,
                se_y,
                mean_q,
                se_q,
                expected_q: big_rational_f64(&eq),
            }
        })
        .collect();
    let variance_checks: Vec<VarianceCheck> = (start_level + 1..depth)
        .map(|level| {
            let i = level - start_level;
            let sq: Vec<f64> = trajectories
                .iter()
                .map(|t| {
                    let d = ratio_f64(&t.y[i]) - ratio_f64(&t.y[i - 1]);
                    d * d
                })
                .collect();
            let (mean_sq_increment, se) = mean_se(&sq);
            let mean_q_prev = levels[i - 1].mean_q;
            VarianceCheck {
                level,
                mean_sq_increment,
                se,
                target: mean_q_prev / diagram.level_size(level) as f64,
            }
        })
        .collect();
    MartingaleStats { levels, variance_checks, trajectories }
}

pub fn ratio_f64(r: &Freq) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

pub fn big_rational_f64(r: &BigRational) -> f64 {
    // Good enough for summary columns; exact values stay rational upstream.
    let numer = r.numer().to_string().parse::<f64>().unwrap_or(f64::NAN);
    let denom = r.denom().to_string().parse::<f64>().unwrap_or(f64::NAN);
    numer / denom
}

/// Domination curve for initially all-distinct alleles.
#[derive(Debug, Clone, PartialEq)]
pub struct DonnellyScan {
    pub start_level: usize,
    /// Per level: fraction of trials with a single surviving label.
    pub domination_fraction: Vec<f64>,
    /// Partial sums of `1/M_n` up to each level.
    pub reciprocal_partial_sum: Vec<f64>,
    pub trials: u64,
}

impl DonnellyScan {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("level,domination_fraction,reciprocal_partial_sum\n");
        for (i, (f, s)) in self
            .domination_fraction
            .iter()
            .zip(&self.reciprocal_partial_sum)
            .enumerate()
        {
            out.push_str(&format!("{},{},{}\n", self.start_level + i, f, s));
        }
        out
    }
}

/// Starts every vertex of `start_level` with a distinct label and tracks the
/// fraction of trials in which a single label survives, level by level.
pub fn donnelly_scan(
    diagram: &BratteliDiagram,
    start_level: usize,
    trials: u64,
    seed: u64,
    depth: usize,
) -> DonnellyScan {
    assert!(start_level < depth && depth <= diagram.depth());
    let span = depth - start_level;
    let dominated: Vec<u64> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let s = trial_seed(seed, t);
            let mut per_level = vec![0u64; span];
            let mut state =
                AlleleState::distinct(start_level, diagram.level_size(start_level));
            for i in 0..span {
                if i > 0 {
                    state = propagate(diagram, s, &state, start_level + i).unwrap();
                }
                per_level[i] = (state.distinct_labels() == 1) as u64;
            }
            per_level
        })
        .reduce(
            || vec![0u64; span],
            |mut a, b| {
                for (x, y) in a.iter_mut().zip(b) {
                    *x += y;
                }
                a
            },
        );
    let domination_fraction = dominated
        .iter()
        .map(|&c| c as f64 / trials as f64)
        .collect();
    let mut acc = 0.0;
    let reciprocal_partial_sum = (start_level..depth)
        .map(|n| {
            acc += 1.0 / diagram.level_size(n) as f64;
            acc
        })
        .collect();
    DonnellyScan { start_level, domination_fraction, reciprocal_partial_sum, trials }
}

/// Chi-square test of one `(Y_{n-1}, M_n)` stratum of transition counts.
#[derive(Debug, Clone, PartialEq)]
pub struct StratumTest {
    pub y_prev: Freq,
    pub next_size: usize,
    pub samples: u64,
    pub p_value: f64,
}

/// Stratified goodness-of-fit of `|S|` transitions against
/// `Binomial(M_{n+1}, Y_n)`. Strata with fewer than `min_samples`
/// observations are skipped.
pub fn binomial_law_test(
    diagram: &BratteliDiagram,
    start_level: usize,
    set: &[usize],
    trials: u64,
    seed: u64,
    depth: usize,
    min_samples: u64,
) -> Vec<StratumTest> {
    use std::collections::HashMap;
    let trajectories: Vec<Trajectory> = (0..trials)
        .into_par_iter()
        .map(|t| run_trial(diagram, start_level, set, trial_seed(seed, t), depth))
        .collect();
    // (y_prev, next level size) -> histogram of next-level counts.
    let mut strata: HashMap<(Freq, usize), Vec<u64>> = HashMap::new();
    for tr in &trajectories {
        for i in 1..tr.y.len() {
            let next_size = diagram.level_size(start_level + i);
            let y_prev = tr.y[i - 1];
            let count = (tr.y[i] * Freq::new(next_size as u64, 1)).to_integer() as usize;
            let hist = strata
                .entry((y_prev, next_size))
                .or_insert_with(|| vec![0u64; next_size + 1]);
            hist[count] += 1;
        }
    }
    let mut keys: Vec<(Freq, usize)> = strata.keys().copied().collect();
    keys.sort_by(|a, b| (a.0.numer() * b.0.denom()).cmp(&(b.0.numer() * a.0.denom())).then(a.1.cmp(&b.1)));
    keys.into_iter()
        .filter_map(|key| {
            let hist = &strata[&key];
            let samples: u64 = hist.iter().sum();
            if samples < min_samples {
                return None;
            }
            let (y_prev, next_size) = key;
            let p = ratio_f64(&y_prev);
            let expected: Vec<f64> = crate::stats::binomial_pmf_table(next_size, p)
                .into_iter()
                .map(|x| x * samples as f64)
                .collect();
            let p_value = match chi_square_merged(hist, &expected, 5.0) {
                Some((stat, df)) => chi_square_p_value(stat, df),
                // Degenerate stratum (absorbed): nothing to test.
                None => 1.0,
            };
            Some(StratumTest { y_prev, next_size, samples, p_value })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ordering::{ancestry_table, sample_order};
    use num::Zero;

    fn all_ones_const(m: usize, depth: usize) -> BratteliDiagram {
        let mut sizes = vec![1usize];
        sizes.extend(std::iter::repeat(m).take(depth - 1));
        BratteliDiagram::all_ones(&sizes).unwrap()
    }

    #[test]
    fn shared_allele_is_preserved() {
        let d = all_ones_const(4, 6);
        let init = AlleleState { level: 1, alleles: vec![7; 4] };
        let out = propagate(&d, 3, &init, 5).unwrap();
        assert_eq!(out.alleles, vec![7; 4]);
    }

    #[test]
    fn singleton_chain_is_constant() {
        let d = BratteliDiagram::all_ones(&[1, 1, 1, 1]).unwrap();
        let init = AlleleState { level: 0, alleles: vec![3] };
        let out = propagate(&d, 5, &init, 3).unwrap();
        assert_eq!(out.alleles, vec![3]);
    }

    #[test]
    fn propagate_equals_tribe_ancestry() {
        let d = BratteliDiagram::diagonal_heavy(&[1, 3, 3, 3, 3], &[4, 2, 3], 1).unwrap();
        for seed in 0..30u64 {
            let init = AlleleState::distinct(1, 3);
            let out = propagate(&d, seed, &init, 4).unwrap();
            let order = sample_order(&d, seed, 5);
            let t = ancestry_table(&d, &order, 1, 4);
            let via_tribe: Vec<u32> = t.tribe.iter().map(|&v| v as u32).collect();
            assert_eq!(out.alleles, via_tribe);
        }
    }

    #[test]
    fn absorbing_states() {
        let d = all_ones_const(3, 10);
        let t = run_trial(&d, 1, &[], 9, 10);
        assert_eq!(t.extinction, Some(1));
        assert!(t.y.iter().all(|y| *y == Freq::new(0, 1)));
        let t = run_trial(&d, 1, &[0, 1, 2], 9, 10);
        assert_eq!(t.domination, Some(1));
        assert!(t.fixated);
        // Generic absorption: once fixed, stays.
        for seed in 0..50u64 {
            let t = run_trial(&d, 1, &[0], seed, 10);
            if let Some(l) = t.domination {
                for i in l - 1..t.y.len() {
                    assert_eq!(t.y[i], Freq::new(1, 1));
                }
            }
            if let Some(l) = t.extinction {
                for i in l - 1..t.y.len() {
                    assert_eq!(t.y[i], Freq::new(0, 1));
                }
            }
        }
    }

    #[test]
    fn expected_q_closed_forms() {
        let q0 = BigRational::new(BigInt::from(1), BigInt::from(4));
        // Constant 2: q0 / 2^n.
        let sizes = vec![1, 2, 2, 2, 2];
        let eq = expected_q(&sizes, &q0, 1, 3);
        assert_eq!(eq, BigRational::new(BigInt::from(1), BigInt::from(32)));
        // M_j = j + 1: telescoping to q0 / (n + 1).
        let sizes: Vec<usize> = (0..6).map(|j| j + 1).collect();
        let eq = expected_q(&sizes, &q0, 1, 4);
        assert_eq!(eq, BigRational::new(BigInt::from(1), BigInt::from(20)));
        // A level of size 1 kills the product.
        let sizes = vec![1, 3, 1, 3];
        assert!(expected_q(&sizes, &q0, 1, 3).is_zero());
    }

    #[test]
    fn martingale_and_decay_within_three_se() {
        let d = all_ones_const(5, 12);
        let stats = martingale_stats(&d, 1, &[0, 1], 4000, 11, 12);
        let y0 = 2.0 / 5.0;
        for l in &stats.levels {
            assert!(
                (l.mean_y - y0).abs() <= 3.0 * l.se_y.max(1e-12),
                "level {}: mean_y {}",
                l.level,
                l.mean_y
            );
            assert!(
                (l.mean_q - l.expected_q).abs() <= 3.0 * l.se_q.max(1e-12),
                "level {}: mean_q {} vs {}",
                l.level,
                l.mean_q,
                l.expected_q
            );
        }
        for c in &stats.variance_checks {
            assert!(c.within(3.5), "level {}: {} vs {}", c.level, c.mean_sq_increment, c.target);
        }
    }

    #[test]
    fn deterministic_initial_state_has_zero_variance() {
        let d = all_ones_const(3, 8);
        let stats = martingale_stats(&d, 1, &[], 200, 1, 8);
        for l in &stats.levels {
            assert_eq!(l.mean_y, 0.0);
            assert_eq!(l.se_y, 0.0);
        }
        for c in &stats.variance_checks {
            assert_eq!(c.mean_sq_increment, 0.0);
        }
    }

    #[test]
    fn binomial_transition_law_holds() {
        let d = all_ones_const(5, 4);
        let tests = binomial_law_test(&d, 1, &[0, 1], 20_000, 21, 4, 500);
        assert!(!tests.is_empty());
        for t in &tests {
            assert!(
                t.p_value >= 0.001,
                "stratum y={} n={} p={}",
                t.y_prev,
                t.next_size,
                t.p_value
            );
        }
    }

    #[test]
    fn donnelly_divergent_side_dominates() {
        // Constant size 3: sum 1/M diverges, domination should be near
        // certain by level 30.
        let d = all_ones_const(3, 31);
        let scan = donnelly_scan(&d, 1, 400, 17, 31);
        assert!(scan.domination_fraction.last().unwrap() >= &0.99);
        // Fractions are monotone non-decreasing (absorption).
        for w in scan.domination_fraction.windows(2) {
            assert!(w[1] >= w[0]);
        }
    }

    #[test]
    fn donnelly_convergent_side_resists() {
        // Sizes (n+2)^2: sum 1/M_n converges, domination stays rare.
        let mut sizes = vec![1usize];
        sizes.extend((1..25).map(|n| (n + 2) * (n + 2)));
        let d = BratteliDiagram::all_ones(&sizes).unwrap();
        let scan = donnelly_scan(&d, 1, 300, 23, 25);
        assert!(scan.domination_fraction.last().unwrap() <= &0.9);
    }

    #[test]
    fn trajectory_csv_has_exact_rationals() {
        let d = all_ones_const(2, 5);
        let t = run_trial(&d, 1, &[0], 3, 5);
        let csv = trajectory_csv(&[t]);
        assert!(csv.starts_with("trial,level,Y_num,Y_den,event\n"));
        assert!(csv.lines().count() >= 5);
    }
}
