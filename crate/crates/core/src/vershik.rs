//! The successor map on finite path prefixes and the imperfection-witness
//! machinery: continuity sets, clan-count events, the star-condition search
//! and the probability bound on the combined event.

use std::cmp::Ordering as CmpOrdering;

use rayon::prelude::*;
use thiserror::Error;

use crate::diagram::BratteliDiagram;
use crate::ordering::{
    canonical_edge, canonical_index, extreme_path, sample_order, Extreme, Order, PathPrefix,
};
use crate::rng::trial_seed;
use crate::stats::wilson_interval;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum VershikError {
    #[error("diagram is not completely connected; the bound requires positive incidence entries")]
    NotCompletelyConnected,
}

/// Result of one successor (or predecessor) step.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StepOutcome {
    Path(PathPrefix),
    /// The input was already extreme at every stored level.
    Extreme,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StepResult {
    pub outcome: StepOutcome,
    /// Level whose edge was advanced; absent for extreme inputs.
    pub pivot: Option<usize>,
}

impl StepResult {
    pub fn path(&self) -> Option<&PathPrefix> {
        match &self.outcome {
            StepOutcome::Path(p) => Some(p),
            StepOutcome::Extreme => None,
        }
    }
}

fn step(
    diagram: &BratteliDiagram,
    order: &Order,
    x: &PathPrefix,
    direction: Extreme,
) -> StepResult {
    // First level whose edge is not extreme in `direction`.
    let pivot = x.edges.iter().position(|e| {
        let vo = order.vertex(e.level, e.target);
        let r = vo.rank_of(canonical_index(diagram, e)) as usize;
        match direction {
            Extreme::Max => r != vo.degree() - 1,
            Extreme::Min => r != 0,
        }
    });
    let Some(i) = pivot else {
        return StepResult { outcome: StepOutcome::Extreme, pivot: None };
    };
    let e = &x.edges[i];
    let vo = order.vertex(e.level, e.target);
    let r = vo.rank_of(canonical_index(diagram, e)) as usize;
    let next_rank = match direction {
        Extreme::Max => r + 1,
        Extreme::Min => r - 1,
    };
    let new_edge = canonical_edge(diagram, e.level, e.target, vo.edge_at_rank(next_rank));
    // Reset everything below the pivot to the opposite extreme path into the
    // new source.
    let reset_to = match direction {
        Extreme::Max => Extreme::Min,
        Extreme::Min => Extreme::Max,
    };
    let mut edges = extreme_path(diagram, order, e.level - 1, new_edge.source, reset_to).edges;
    edges.push(new_edge);
    edges.extend_from_slice(&x.edges[i + 1..]);
    StepResult { outcome: StepOutcome::Path(PathPrefix { edges }), pivot: Some(e.level) }
}

/// Replaces the first non-maximal edge by its successor and resets the levels
/// below to the minimal path; `Extreme` marks a fully maximal prefix
/// (finite-depth maximality over the stored levels).
pub fn successor(diagram: &BratteliDiagram, order: &Order, x: &PathPrefix) -> StepResult {
    step(diagram, order, x, Extreme::Max)
}

/// Mirror of [`successor`] with maximal and minimal swapped.
pub fn predecessor(diagram: &BratteliDiagram, order: &Order, x: &PathPrefix) -> StepResult {
    step(diagram, order, x, Extreme::Min)
}

/// Tribe map `V_m -> V_base` (follow maximal edges down) and clan map
/// (minimal edges), advanced one level at a time.
struct AncestrySweep {
    base: usize,
    level: usize,
    map: Vec<usize>,
    which: Extreme,
}

impl AncestrySweep {
    fn identity(base: usize, size: usize, which: Extreme) -> Self {
        AncestrySweep { base, level: base, map: (0..size).collect(), which }
    }

    fn advance_to(&mut self, diagram: &BratteliDiagram, order: &Order, level: usize) {
        while self.level < level {
            let n = self.level + 1;
            let size = diagram.level_size(n);
            let mut next = Vec::with_capacity(size);
            for v in 0..size {
                let vo = order.vertex(n, v);
                let c = match self.which {
                    Extreme::Max => vo.max_edge(),
                    Extreme::Min => vo.min_edge(),
                };
                let src = canonical_edge(diagram, n, v, c).source;
                next.push(self.map[src]);
            }
            self.map = next;
            self.level = n;
        }
        debug_assert_eq!(self.level, level);
        debug_assert!(self.base <= level);
    }
}

/// True iff every pair of non-maximal prefixes of length `n_prime` that agree
/// on the first `big_n` edges has successors agreeing on the first `n` edges.
///
/// Evaluated by the tribe/clan reduction: a prefix that is maximal below its
/// pivot is determined up to level `big_n` by the `big_n`-tribe of the pivot
/// source, and its successor's first `n` edges by the `n`-clan of the next
/// edge's source. Consistency of the induced tribe-to-clan assignment across
/// all pivot levels in `(big_n, n_prime]` decides the check.
pub fn continuity_check(
    diagram: &BratteliDiagram,
    order: &Order,
    n: usize,
    big_n: usize,
    n_prime: usize,
) -> bool {
    assert!(n < big_n && big_n < n_prime && n_prime < diagram.depth());
    let mut tribe = AncestrySweep::identity(big_n, diagram.level_size(big_n), Extreme::Max);
    let mut clan = AncestrySweep::identity(n, diagram.level_size(n), Extreme::Min);
    clan.advance_to(diagram, order, big_n);
    let mut assign: Vec<Option<usize>> = vec![None; diagram.level_size(big_n)];
    for pivot_level in big_n + 1..=n_prime {
        // Tables live one level below the pivot.
        tribe.advance_to(diagram, order, pivot_level - 1);
        clan.advance_to(diagram, order, pivot_level - 1);
        for v in 0..diagram.level_size(pivot_level) {
            let vo = order.vertex(pivot_level, v);
            for alpha in 0..vo.degree() - 1 {
                let src = canonical_edge(diagram, pivot_level, v, vo.edge_at_rank(alpha)).source;
                let nxt =
                    canonical_edge(diagram, pivot_level, v, vo.edge_at_rank(alpha + 1)).source;
                let key = tribe.map[src];
                let val = clan.map[nxt];
                match assign[key] {
                    None => assign[key] = Some(val),
                    Some(prev) if prev != val => return false,
                    Some(_) => {}
                }
            }
        }
    }
    true
}

/// Searches for a map `f: V_N -> V_n` satisfying the star condition at every
/// vertex of `V_{N'}` and every non-maximal rank, by constraint propagation.
/// Unconstrained points are completed with vertex 0.
pub fn find_star_map(
    diagram: &BratteliDiagram,
    order: &Order,
    n: usize,
    big_n: usize,
    n_prime: usize,
) -> Option<Vec<usize>> {
    assert!(n < big_n && big_n < n_prime && n_prime < diagram.depth());
    let mut tribe = AncestrySweep::identity(big_n, diagram.level_size(big_n), Extreme::Max);
    let mut clan = AncestrySweep::identity(n, diagram.level_size(n), Extreme::Min);
    tribe.advance_to(diagram, order, n_prime - 1);
    clan.advance_to(diagram, order, n_prime - 1);
    let mut assign: Vec<Option<usize>> = vec![None; diagram.level_size(big_n)];
    for v in 0..diagram.level_size(n_prime) {
        let vo = order.vertex(n_prime, v);
        for alpha in 0..vo.degree() - 1 {
            let src = canonical_edge(diagram, n_prime, v, vo.edge_at_rank(alpha)).source;
            let nxt = canonical_edge(diagram, n_prime, v, vo.edge_at_rank(alpha + 1)).source;
            let key = tribe.map[src];
            let val = clan.map[nxt];
            match assign[key] {
                None => assign[key] = Some(val),
                Some(prev) if prev != val => return None,
                Some(_) => {}
            }
        }
    }
    Some(assign.into_iter().map(|a| a.unwrap_or(0)).collect())
}

/// Number of distinct `n`-clans among the vertices of `V_m`.
pub fn clan_count(diagram: &BratteliDiagram, order: &Order, n: usize, m: usize) -> usize {
    let mut clan = AncestrySweep::identity(n, diagram.level_size(n), Extreme::Min);
    clan.advance_to(diagram, order, m);
    let mut seen = vec![false; diagram.level_size(n)];
    let mut count = 0;
    for &c in &clan.map {
        if !seen[c] {
            seen[c] = true;
            count += 1;
        }
    }
    count
}

/// Joint evaluation of the imperfection events for one order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ImperfectionProbe {
    pub n: usize,
    pub big_n: usize,
    pub n_prime: usize,
    /// Distinct `n`-clans among `V_{N'-1}`.
    pub clan_count_at_prev: usize,
    pub star_map: Option<Vec<usize>>,
    pub in_c: bool,
    pub in_d: bool,
    pub in_e: bool,
}

pub fn probe(
    diagram: &BratteliDiagram,
    order: &Order,
    n: usize,
    big_n: usize,
    n_prime: usize,
) -> ImperfectionProbe {
    let clan_count_at_prev = clan_count(diagram, order, n, n_prime - 1);
    let in_d = clan_count_at_prev >= 2;
    // E is defined inside D at level N' - 1.
    let star_map = if in_d {
        find_star_map(diagram, order, n, big_n, n_prime)
    } else {
        None
    };
    let in_e = star_map.is_some();
    let in_c = continuity_check(diagram, order, n, big_n, n_prime);
    ImperfectionProbe {
        n,
        big_n,
        n_prime,
        clan_count_at_prev,
        star_map,
        in_c,
        in_d,
        in_e,
    }
}

/// Re-checks the star condition under a given `f`; used as the
/// self-consistency assertion for maps returned by [`find_star_map`].
pub fn verify_star_map(
    diagram: &BratteliDiagram,
    order: &Order,
    n: usize,
    big_n: usize,
    n_prime: usize,
    f: &[usize],
) -> bool {
    let mut tribe = AncestrySweep::identity(big_n, diagram.level_size(big_n), Extreme::Max);
    let mut clan = AncestrySweep::identity(n, diagram.level_size(n), Extreme::Min);
    tribe.advance_to(diagram, order, n_prime - 1);
    clan.advance_to(diagram, order, n_prime - 1);
    for v in 0..diagram.level_size(n_prime) {
        let vo = order.vertex(n_prime, v);
        for alpha in 0..vo.degree() - 1 {
            let src = canonical_edge(diagram, n_prime, v, vo.edge_at_rank(alpha)).source;
            let nxt = canonical_edge(diagram, n_prime, v, vo.edge_at_rank(alpha + 1)).source;
            if f[tribe.map[src]] != clan.map[nxt] {
                return false;
            }
        }
    }
    true
}

#[derive(Debug, Clone, PartialEq)]
pub struct EEstimate {
    pub trials: u64,
    pub count_d: u64,
    pub count_e: u64,
    pub empirical_p: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    /// `|V_n|^{|V_N|} / (|V_{N'-1}| - 1)^{|V_{N'}|}` with `P(D)` replaced by
    /// 1, capped at 1.
    pub analytic_bound: f64,
    /// Per-trial `(in_D, in_E)` flags in trial order.
    pub rows: Vec<(bool, bool)>,
}

impl EEstimate {
    /// CSV body: `trial_index,in_D,in_E` rows then a summary row.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("trial_index,in_D,in_E\n");
        for (i, &(d, e)) in self.rows.iter().enumerate() {
            out.push_str(&format!("{},{},{}\n", i, d as u8, e as u8));
        }
        out.push_str("empirical_p,ci_low,ci_high,analytic_bound\n");
        out.push_str(&format!(
            "{},{},{},{}\n",
            self.empirical_p, self.ci_low, self.ci_high, self.analytic_bound
        ));
        out
    }
}

/// The paper bound with `P(D)` replaced by 1, computed in log space.
pub fn analytic_e_bound(diagram: &BratteliDiagram, n: usize, big_n: usize, n_prime: usize) -> f64 {
    let vn = diagram.level_size(n) as f64;
    let vbn = diagram.level_size(big_n) as f64;
    let prev = diagram.level_size(n_prime - 1) as f64;
    let top = diagram.level_size(n_prime) as f64;
    if prev <= 1.0 {
        return 1.0;
    }
    let log = vbn * vn.ln() - top * (prev - 1.0).ln();
    log.exp().min(1.0)
}

/// Monte Carlo estimate of `P(E_{n,N,N'})` with a Wilson 95% interval and the
/// analytic bound alongside.
pub fn estimate_e_probability(
    diagram: &BratteliDiagram,
    n: usize,
    big_n: usize,
    n_prime: usize,
    trials: u64,
    seed: u64,
) -> Result<EEstimate, VershikError> {
    if !diagram.is_completely_connected() {
        return Err(VershikError::NotCompletelyConnected);
    }
    let rows: Vec<(bool, bool)> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let order = sample_order(diagram, trial_seed(seed, t), n_prime + 1);
            let clan_cnt = clan_count(diagram, &order, n, n_prime - 1);
            let in_d = clan_cnt >= 2;
            let in_e = in_d && find_star_map(diagram, &order, n, big_n, n_prime).is_some();
            (in_d, in_e)
        })
        .collect();
    let count_d = rows.iter().filter(|r| r.0).count() as u64;
    let count_e = rows.iter().filter(|r| r.1).count() as u64;
    let (ci_low, ci_high) = wilson_interval(count_e, trials, 1.96);
    Ok(EEstimate {
        trials,
        count_d,
        count_e,
        empirical_p: count_e as f64 / trials as f64,
        ci_low,
        ci_high,
        analytic_bound: analytic_e_bound(diagram, n, big_n, n_prime),
        rows,
    })
}

/// Compares two prefixes for the orbit test, `None` if incomparable.
pub fn lex_cmp(
    diagram: &BratteliDiagram,
    order: &Order,
    p: &PathPrefix,
    q: &PathPrefix,
) -> Option<CmpOrdering> {
    crate::ordering::compare_lex(diagram, order, p, q).ok()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diagram::IncidenceMatrix;
    use crate::ordering::enumerate_paths;

    fn odometer(levels: usize) -> BratteliDiagram {
        let sizes = vec![1usize; levels];
        let incidence = (0..levels - 1)
            .map(|_| IncidenceMatrix::new(1, 1, vec![2]))
            .collect();
        BratteliDiagram::new(sizes, incidence).unwrap()
    }

    fn identity_order(levels: usize, degree: usize) -> Order {
        let mut text = String::new();
        for n in 1..levels {
            text.push_str(&format!("{n} 0:"));
            for r in 0..degree {
                text.push_str(&format!(" {r}"));
            }
            text.push('\n');
        }
        Order::parse_dump(&text).unwrap()
    }

    fn odometer_prefix(bits: &[u64]) -> PathPrefix {
        PathPrefix {
            edges: bits
                .iter()
                .enumerate()
                .map(|(i, &b)| crate::ordering::EdgeRef {
                    level: i + 1,
                    target: 0,
                    source: 0,
                    copy: b + 1,
                })
                .collect(),
        }
    }

    #[test]
    fn odometer_carry() {
        let d = odometer(4);
        let o = identity_order(4, 2);
        let x = odometer_prefix(&[1, 1, 0]);
        let r = successor(&d, &o, &x);
        assert_eq!(r.pivot, Some(3));
        assert_eq!(r.path().unwrap(), &odometer_prefix(&[0, 0, 1]));

        let max = odometer_prefix(&[1, 1, 1]);
        assert_eq!(successor(&d, &o, &max).outcome, StepOutcome::Extreme);

        let p = predecessor(&d, &o, &odometer_prefix(&[0, 0, 1]));
        assert_eq!(p.path().unwrap(), &odometer_prefix(&[1, 1, 0]));
        let min = odometer_prefix(&[0, 0, 0]);
        assert_eq!(predecessor(&d, &o, &min).outcome, StepOutcome::Extreme);
    }

    #[test]
    fn predecessor_inverts_successor() {
        let d = BratteliDiagram::all_ones(&[1, 3, 3]).unwrap();
        for seed in 0..10u64 {
            let o = sample_order(&d, seed, 3);
            for v in 0..3 {
                for p in enumerate_paths(&d, 2, v) {
                    if let Some(s) = successor(&d, &o, &p).path() {
                        assert_eq!(predecessor(&d, &o, s).path().unwrap(), &p);
                    }
                }
            }
        }
    }

    #[test]
    fn orbit_enumerates_tail_class_in_lex_order() {
        let d = BratteliDiagram::all_ones(&[1, 3, 3]).unwrap();
        for seed in 0..20u64 {
            let o = sample_order(&d, seed, 3);
            for v in 0..3 {
                let all = enumerate_paths(&d, 2, v);
                let mut cur = extreme_path(&d, &o, 2, v, Extreme::Min);
                let mut visited = vec![cur.clone()];
                while let Some(next) = successor(&d, &o, &cur).path().cloned() {
                    assert_eq!(
                        lex_cmp(&d, &o, &cur, &next),
                        Some(CmpOrdering::Less),
                        "orbit must be strictly increasing"
                    );
                    visited.push(next.clone());
                    cur = next;
                }
                assert_eq!(visited.len(), all.len());
                for p in &all {
                    assert!(visited.contains(p));
                }
            }
        }
    }

    #[test]
    fn continuity_trivial_cases() {
        // Single vertex per level: always continuous.
        let d = odometer(6);
        let o = sample_order(&d, 5, 6);
        assert!(continuity_check(&d, &o, 1, 2, 4));
        assert!(continuity_check(&d, &o, 2, 3, 5));
    }

    /// Brute force: enumerate all non-maximal prefixes of length `np`, group
    /// by their first `bn` edges, and compare successor prefixes to level `n`.
    fn continuity_brute(
        d: &BratteliDiagram,
        o: &Order,
        n: usize,
        bn: usize,
        np: usize,
    ) -> bool {
        let mut prefixes = Vec::new();
        for v in 0..d.level_size(np) {
            prefixes.extend(enumerate_paths(d, np, v));
        }
        let nonmax: Vec<&PathPrefix> = prefixes
            .iter()
            .filter(|p| successor(d, o, p).path().is_some())
            .collect();
        for (i, p) in nonmax.iter().enumerate() {
            for q in &nonmax[..i] {
                if p.edges[..bn] != q.edges[..bn] {
                    continue;
                }
                let sp = successor(d, o, p).path().unwrap().clone();
                let sq = successor(d, o, q).path().unwrap().clone();
                if sp.edges[..n] != sq.edges[..n] {
                    return false;
                }
            }
        }
        true
    }

    #[test]
    fn continuity_matches_brute_force() {
        // Small sizes make continuity common, larger sizes make it rare;
        // together both outcomes are exercised.
        let diagrams = [
            BratteliDiagram::all_ones(&[1, 2, 2, 2, 2]).unwrap(),
            BratteliDiagram::all_ones(&[1, 4, 4, 4, 4]).unwrap(),
        ];
        let mut seen_true = 0;
        let mut seen_false = 0;
        for d in &diagrams {
            for seed in 0..40u64 {
                let o = sample_order(d, seed, 5);
                let fast = continuity_check(d, &o, 1, 2, 4);
                let slow = continuity_brute(d, &o, 1, 2, 4);
                assert_eq!(fast, slow, "seed {seed}");
                if fast {
                    seen_true += 1;
                } else {
                    seen_false += 1;
                }
            }
        }
        // The comparison is only meaningful if both outcomes occur.
        assert!(seen_true > 0 && seen_false > 0);
    }

    #[test]
    fn continuity_monotone_in_big_n() {
        let d = BratteliDiagram::all_ones(&[1, 3, 3, 3, 3, 3]).unwrap();
        for seed in 0..60u64 {
            let o = sample_order(&d, seed, 6);
            if continuity_check(&d, &o, 1, 2, 5) {
                assert!(continuity_check(&d, &o, 1, 3, 5), "seed {seed}");
            }
        }
    }

    #[test]
    fn star_map_single_clan_value_always_exists() {
        // |V_n| = 1 at n = 1 forces the constant map.
        let sizes = [1usize, 1, 3, 3, 3];
        let d = BratteliDiagram::all_ones(&sizes).unwrap();
        for seed in 0..10u64 {
            let o = sample_order(&d, seed, 5);
            let f = find_star_map(&d, &o, 1, 2, 4).expect("constant map");
            assert!(f.iter().all(|&x| x == 0));
            assert!(verify_star_map(&d, &o, 1, 2, 4, &f));
        }
    }

    /// Exhaustive search over all maps `f: V_N -> V_n`.
    fn star_map_exists_brute(
        d: &BratteliDiagram,
        o: &Order,
        n: usize,
        bn: usize,
        np: usize,
    ) -> bool {
        let vn = d.level_size(n);
        let vbn = d.level_size(bn);
        let total = (vn as u64).pow(vbn as u32);
        for idx in 0..total {
            let mut f = Vec::with_capacity(vbn);
            let mut rem = idx;
            for _ in 0..vbn {
                f.push((rem % vn as u64) as usize);
                rem /= vn as u64;
            }
            if verify_star_map(d, o, n, bn, np, &f) {
                return true;
            }
        }
        false
    }

    #[test]
    fn star_map_agrees_with_exhaustive_search() {
        let d = BratteliDiagram::all_ones(&[1, 2, 3, 3, 3]).unwrap();
        let mut some = 0;
        let mut none = 0;
        for seed in 0..60u64 {
            let o = sample_order(&d, seed, 5);
            let fast = find_star_map(&d, &o, 1, 2, 4);
            let brute = star_map_exists_brute(&d, &o, 1, 2, 4);
            assert_eq!(fast.is_some(), brute, "seed {seed}");
            if let Some(f) = fast {
                assert!(verify_star_map(&d, &o, 1, 2, 4, &f));
                some += 1;
            } else {
                none += 1;
            }
        }
        assert!(some > 0 && none > 0);
    }

    #[test]
    fn probe_invariants() {
        let d = BratteliDiagram::all_ones(&[1, 2, 2, 2, 2]).unwrap();
        for seed in 0..50u64 {
            let o = sample_order(&d, seed, 5);
            let p = probe(&d, &o, 1, 2, 4);
            assert_eq!(p.in_e, p.star_map.is_some());
            if p.in_e {
                assert!(p.in_d);
            }
        }
    }

    #[test]
    fn estimate_refuses_disconnected_diagram() {
        let m0 = IncidenceMatrix::ones(2, 1);
        let m1 = IncidenceMatrix::from_rows(&[vec![1, 0], vec![0, 1]]);
        let m2 = IncidenceMatrix::ones(2, 2);
        let m3 = IncidenceMatrix::ones(2, 2);
        let d = BratteliDiagram::new(vec![1, 2, 2, 2, 2], vec![m0, m1, m2, m3]).unwrap();
        assert_eq!(
            estimate_e_probability(&d, 1, 2, 4, 10, 1).unwrap_err(),
            VershikError::NotCompletelyConnected
        );
    }

    #[test]
    fn estimate_respects_analytic_bound_when_informative() {
        // M = [1,5,9,9,9,9], (n,N,N') = (1,2,5): bound 5^9 / 8^9 ~ 0.015.
        let d = BratteliDiagram::all_ones(&[1, 5, 9, 9, 9, 9]).unwrap();
        let est = estimate_e_probability(&d, 1, 2, 5, 2000, 7).unwrap();
        let bound = 5f64.powi(9) / 8f64.powi(9);
        assert!((est.analytic_bound - bound).abs() < 1e-12);
        // P(E) is below the bound, so the estimate should be too (3 s.e.).
        let se = (bound * (1.0 - bound) / 2000.0).sqrt();
        assert!(est.empirical_p <= bound + 3.0 * se);
    }

    #[test]
    fn conditional_star_rate_obeys_lemma_bound() {
        // Over orders in D, the rate at which a fixed f satisfies the star
        // condition at one fixed vertex is at most 1/(|V_{N'-1}| - 1).
        let d = BratteliDiagram::all_ones(&[1, 2, 4, 4, 4]).unwrap();
        let (n, bn, np) = (1, 2, 4);
        let f = vec![0usize; d.level_size(bn)];
        let v = 0usize;
        let mut in_d = 0u64;
        let mut hit = 0u64;
        for seed in 0..20_000u64 {
            let o = sample_order(&d, trial_seed(0xbee, seed), np + 1);
            if clan_count(&d, &o, n, np - 1) < 2 {
                continue;
            }
            in_d += 1;
            // Star condition restricted to the single vertex v.
            let mut ok = true;
            let tribe = crate::ordering::ancestry_table(&d, &o, bn, np - 1);
            let clan = crate::ordering::ancestry_table(&d, &o, n, np - 1);
            let vo = o.vertex(np, v);
            for alpha in 0..vo.degree() - 1 {
                let src = canonical_edge(&d, np, v, vo.edge_at_rank(alpha)).source;
                let nxt = canonical_edge(&d, np, v, vo.edge_at_rank(alpha + 1)).source;
                if f[tribe.tribe[src]] != clan.clan[nxt] {
                    ok = false;
                    break;
                }
            }
            if ok {
                hit += 1;
            }
        }
        let p = hit as f64 / in_d as f64;
        let bound = 1.0 / (d.level_size(np - 1) as f64 - 1.0);
        let se = (bound * (1.0 - bound) / in_d as f64).sqrt();
        assert!(p <= bound + 3.0 * se, "p = {p}, bound = {bound}");
    }
}
