//! Exact brute-force verifiers: good-ordering and Eulerian-trail counting
//! for the chaining bound, and exhaustive order enumeration on tiny diagrams
//! for exact census and imperfection probabilities.

use itertools::Itertools;
use num::rational::Ratio;
use num::{BigInt, BigRational, One};
use thiserror::Error;

use crate::diagram::BratteliDiagram;
use crate::ordering::{ancestry_table, enumerate_orders, OrderingError};
use crate::vershik;

pub const GOOD_ORDERING_CAP: usize = 9;
pub const EULERIAN_EDGE_CAP: usize = 12;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum OracleError {
    #[error("instance maps must share a positive length")]
    BadInstance,
    #[error("G must take at least two values")]
    ConstantG,
    #[error("refusing {n}! = {factorial} orderings (cap {cap}!)")]
    OrderingCap { n: usize, factorial: u64, cap: usize },
    #[error("refusing trail search over {edges} edges (cap {cap})")]
    EdgeCap { edges: usize, cap: usize },
    #[error("order enumeration refused: {orders} orders, cap {cap}")]
    OrderSpaceCap { orders: u128, cap: u128 },
}

impl From<OrderingError> for OracleError {
    fn from(e: OrderingError) -> Self {
        match e {
            OrderingError::EnumerationCap { orders, cap } => {
                OracleError::OrderSpaceCap { orders, cap }
            }
            other => panic!("unexpected enumeration error: {other}"),
        }
    }
}

/// Maps `F, G: {0..n} -> R` with `G` non-constant; labels are small integers.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LemmaInstance {
    pub f: Vec<u32>,
    pub g: Vec<u32>,
}

impl LemmaInstance {
    pub fn new(f: Vec<u32>, g: Vec<u32>) -> Result<Self, OracleError> {
        if f.is_empty() || f.len() != g.len() {
            return Err(OracleError::BadInstance);
        }
        if g.iter().all(|&x| x == g[0]) {
            return Err(OracleError::ConstantG);
        }
        Ok(LemmaInstance { f, g })
    }

    pub fn n(&self) -> usize {
        self.f.len()
    }

    /// The directed multigraph with one edge `G(i) -> F(i)` per index.
    pub fn trail_graph(&self) -> TrailGraph {
        TrailGraph {
            edges: self.g.iter().copied().zip(self.f.iter().copied()).collect(),
        }
    }
}

/// Counts bijections `sigma` with `F(sigma(i)) = G(sigma(i+1))` for all
/// consecutive positions, by enumerating all `n!` orderings.
pub fn count_good_orderings(instance: &LemmaInstance) -> Result<u64, OracleError> {
    let n = instance.n();
    if n > GOOD_ORDERING_CAP {
        let factorial: u64 = (1..=n as u64).product();
        return Err(OracleError::OrderingCap { n, factorial, cap: GOOD_ORDERING_CAP });
    }
    let count = (0..n)
        .permutations(n)
        .filter(|sigma| {
            sigma
                .windows(2)
                .all(|w| instance.f[w[0]] == instance.g[w[1]])
        })
        .count() as u64;
    // The chaining bound, exactly: count / n! <= 1 / (n - 1).
    if n >= 2 {
        let factorial: u64 = (1..=n as u64).product();
        assert!(count * (n as u64 - 1) <= factorial);
    }
    Ok(count)
}

/// Directed multigraph with labeled (distinguishable) edges.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrailGraph {
    /// `(tail, head)` per labeled edge.
    pub edges: Vec<(u32, u32)>,
}

/// Counts labeled Eulerian trails (orderings of all edges where each edge's
/// tail equals the previous edge's head) by backtracking.
pub fn count_eulerian_trails(graph: &TrailGraph) -> Result<u64, OracleError> {
    let m = graph.edges.len();
    if m > EULERIAN_EDGE_CAP {
        return Err(OracleError::EdgeCap { edges: m, cap: EULERIAN_EDGE_CAP });
    }
    fn go(edges: &[(u32, u32)], used: &mut [bool], last_head: Option<u32>, left: usize) -> u64 {
        if left == 0 {
            return 1;
        }
        let mut total = 0;
        for i in 0..edges.len() {
            if used[i] {
                continue;
            }
            if let Some(h) = last_head {
                if edges[i].0 != h {
                    continue;
                }
            }
            used[i] = true;
            total += go(edges, used, Some(edges[i].1), left - 1);
            used[i] = false;
        }
        total
    }
    let mut used = vec![false; m];
    Ok(go(&graph.edges, &mut used, None, m))
}

/// The extremal instance of the chaining bound: vertex 0 with out-degree
/// `n - 1` (n - 2 loops plus one edge to vertex 1) and vertex 1 with a single
/// edge back. It admits exactly `n (n-2)!` good orderings.
pub fn extremal_instance(n: usize) -> LemmaInstance {
    assert!(n >= 3);
    // Edge i is G(i) -> F(i): loops 0 -> 0, then 0 -> 1, then 1 -> 0.
    let mut f = vec![0u32; n - 2];
    let mut g = vec![0u32; n - 2];
    f.push(1);
    g.push(0);
    f.push(0);
    g.push(1);
    LemmaInstance::new(f, g).expect("g takes two values")
}

/// Exact distribution of the number of surviving level-`k` tribes at level
/// `big_n`, over all orders of the truncated diagram (uniformly likely).
pub fn exact_census(
    diagram: &BratteliDiagram,
    k: usize,
    big_n: usize,
    cap: u128,
) -> Result<Vec<Ratio<u64>>, OracleError> {
    let it = enumerate_orders(diagram, big_n + 1, cap)?;
    let total = it.total() as u64;
    let mut counts = vec![0u64; diagram.level_size(k) + 1];
    for order in it {
        let t = ancestry_table(diagram, &order, k, big_n);
        let mut seen = vec![false; diagram.level_size(k)];
        let mut j = 0;
        for &v in &t.tribe {
            if !seen[v] {
                seen[v] = true;
                j += 1;
            }
        }
        counts[j] += 1;
    }
    Ok(counts.into_iter().map(|c| Ratio::new(c, total)).collect())
}

/// Exact imperfection probabilities with the displayed bound checked as an
/// exact rational inequality.
#[derive(Debug, Clone, PartialEq)]
pub struct ImperfectionExact {
    pub p_e: Ratio<u64>,
    pub p_d: Ratio<u64>,
    /// `|V_n|^{|V_N|} p_d / (|V_{N'-1}| - 1)^{|V_{N'}|}`.
    pub rhs: BigRational,
    pub inequality_holds: bool,
}

pub fn exact_imperfection(
    diagram: &BratteliDiagram,
    n: usize,
    big_n: usize,
    n_prime: usize,
    cap: u128,
) -> Result<ImperfectionExact, OracleError> {
    let it = enumerate_orders(diagram, n_prime + 1, cap)?;
    let total = it.total() as u64;
    let mut count_d = 0u64;
    let mut count_e = 0u64;
    for order in it {
        let in_d = vershik::clan_count(diagram, &order, n, n_prime - 1) >= 2;
        if in_d {
            count_d += 1;
            if vershik::find_star_map(diagram, &order, n, big_n, n_prime).is_some() {
                count_e += 1;
            }
        }
    }
    let p_e = Ratio::new(count_e, total);
    let p_d = Ratio::new(count_d, total);
    let rhs = imperfection_rhs(diagram, n, big_n, n_prime, &p_d);
    let p_e_big = BigRational::new(BigInt::from(count_e), BigInt::from(total));
    Ok(ImperfectionExact { p_e, p_d, inequality_holds: p_e_big <= rhs, rhs })
}

/// The bound's right-hand side as an exact rational.
pub fn imperfection_rhs(
    diagram: &BratteliDiagram,
    n: usize,
    big_n: usize,
    n_prime: usize,
    p_d: &Ratio<u64>,
) -> BigRational {
    let vn = BigInt::from(diagram.level_size(n) as u64);
    let prev = BigInt::from(diagram.level_size(n_prime - 1) as u64) - BigInt::one();
    let numer = vn.pow(diagram.level_size(big_n) as u32) * BigInt::from(*p_d.numer());
    let denom = prev.pow(diagram.level_size(n_prime) as u32) * BigInt::from(*p_d.denom());
    BigRational::new(numer, denom)
}
