//! Orders on a Bratteli diagram: sampling from the uniform product measure,
//! exhaustive enumeration, lexicographic path comparison, extreme paths and
//! tribe/clan ancestry tables.
//!
//! The canonical incoming-edge list of a vertex enumerates sources in
//! ascending index order and parallel copies in ascending copy order. An
//! [`Order`] stores, per vertex, the ranking of that canonical list (rank 0
//! is minimal) together with its precomputed inverse.

use std::cmp::Ordering as CmpOrdering;

use thiserror::Error;

use crate::diagram::BratteliDiagram;
use crate::rng::{self, uniform_permutation};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum OrderingError {
    #[error("paths are incomparable: they must share length and final vertex")]
    Incomparable,
    #[error("order enumeration refused: state space has exactly {orders} orders, cap is {cap}")]
    EnumerationCap { orders: u128, cap: u128 },
    #[error("order dump parse error: {0}")]
    Parse(String),
}

/// One edge of the diagram: the `copy`-th (1-based) of the parallel edges
/// from `(level-1, source)` up to `(level, target)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct EdgeRef {
    pub level: usize,
    pub target: usize,
    pub source: usize,
    pub copy: u64,
}

/// Finite edge path from the root; `edges[i]` sits at level `i + 1`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PathPrefix {
    pub edges: Vec<EdgeRef>,
}

impl PathPrefix {
    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn end_vertex(&self) -> Option<usize> {
        self.edges.last().map(|e| e.target)
    }

    /// Checks the range/source chain starting at the root.
    pub fn is_valid(&self, diagram: &BratteliDiagram) -> bool {
        let mut prev = 0usize;
        for (i, e) in self.edges.iter().enumerate() {
            if e.level != i + 1 || e.source != prev {
                return false;
            }
            if diagram.check_vertex(e.level, e.target).is_err() {
                return false;
            }
            let f = diagram.incidence(e.level - 1).entry(e.target, e.source);
            if e.copy == 0 || e.copy > f {
                return false;
            }
            prev = e.target;
        }
        true
    }
}

/// Decodes canonical index `c` of an incoming edge of `(level, target)`.
pub fn canonical_edge(
    diagram: &BratteliDiagram,
    level: usize,
    target: usize,
    c: usize,
) -> EdgeRef {
    let (source, copy) = diagram.incidence(level - 1).locate(target, c as u64);
    EdgeRef { level, target, source, copy }
}

/// Inverse of [`canonical_edge`].
pub fn canonical_index(diagram: &BratteliDiagram, edge: &EdgeRef) -> usize {
    let before = diagram
        .incidence(edge.level - 1)
        .prefix_sum(edge.target, edge.source);
    (before + edge.copy - 1) as usize
}

/// Ranking of one vertex's incoming edges.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct VertexOrder {
    /// `rank[c]` is the rank (0 = minimal) of canonical edge `c`.
    rank: Vec<u32>,
    /// `edge_at_rank[r]` is the canonical index of the rank-`r` edge.
    edge_at_rank: Vec<u32>,
}

impl VertexOrder {
    /// Builds from the rank-to-edge table (a permutation of `0..d`).
    pub fn from_edge_at_rank(edge_at_rank: Vec<u32>) -> Self {
        let mut rank = vec![0u32; edge_at_rank.len()];
        for (r, &c) in edge_at_rank.iter().enumerate() {
            rank[c as usize] = r as u32;
        }
        VertexOrder { rank, edge_at_rank }
    }

    pub fn degree(&self) -> usize {
        self.rank.len()
    }

    pub fn rank_of(&self, canonical: usize) -> u32 {
        self.rank[canonical]
    }

    /// Canonical index of the `alpha`-th smallest edge, `alpha` from 0.
    pub fn edge_at_rank(&self, alpha: usize) -> usize {
        self.edge_at_rank[alpha] as usize
    }

    pub fn max_edge(&self) -> usize {
        *self.edge_at_rank.last().unwrap() as usize
    }

    pub fn min_edge(&self) -> usize {
        self.edge_at_rank[0] as usize
    }
}

/// A sampled or enumerated point of the order space, down to `depth` levels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Order {
    /// `levels[n - 1][v]` is the ranking at vertex `v` of level `n`.
    levels: Vec<Vec<VertexOrder>>,
}

impl Order {
    pub fn depth(&self) -> usize {
        self.levels.len()
    }

    pub fn vertex(&self, level: usize, v: usize) -> &VertexOrder {
        &self.levels[level - 1][v]
    }

    /// The edge of rank `alpha` (0-based from minimal) into `(level, v)`.
    pub fn edge(&self, diagram: &BratteliDiagram, level: usize, v: usize, alpha: usize) -> EdgeRef {
        canonical_edge(diagram, level, v, self.vertex(level, v).edge_at_rank(alpha))
    }

    pub fn rank(&self, diagram: &BratteliDiagram, edge: &EdgeRef) -> u32 {
        self.vertex(edge.level, edge.target)
            .rank_of(canonical_index(diagram, edge))
    }

    pub fn is_max_edge(&self, diagram: &BratteliDiagram, edge: &EdgeRef) -> bool {
        let vo = self.vertex(edge.level, edge.target);
        vo.rank_of(canonical_index(diagram, edge)) as usize == vo.degree() - 1
    }

    /// Dump format: one line `level vertex: r0 r1 ...` with the rank of each
    /// canonical edge. Round-trips exactly through [`Order::parse_dump`].
    pub fn emit_dump(&self) -> String {
        let mut out = String::new();
        for (li, level) in self.levels.iter().enumerate() {
            for (v, vo) in level.iter().enumerate() {
                out.push_str(&format!("{} {}:", li + 1, v));
                for &r in &vo.rank {
                    out.push_str(&format!(" {r}"));
                }
                out.push('\n');
            }
        }
        out
    }

    pub fn parse_dump(text: &str) -> Result<Order, OrderingError> {
        let mut levels: Vec<Vec<VertexOrder>> = Vec::new();
        for line in text.lines().filter(|l| !l.trim().is_empty()) {
            let (head, tail) = line
                .split_once(':')
                .ok_or_else(|| OrderingError::Parse(format!("missing ':' in {line:?}")))?;
            let mut hw = head.split_whitespace();
            let level: usize = hw
                .next()
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| OrderingError::Parse(format!("bad level in {line:?}")))?;
            let vertex: usize = hw
                .next()
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| OrderingError::Parse(format!("bad vertex in {line:?}")))?;
            let rank: Vec<u32> = tail
                .split_whitespace()
                .map(|s| s.parse::<u32>())
                .collect::<Result<_, _>>()
                .map_err(|e| OrderingError::Parse(e.to_string()))?;
            let mut edge_at_rank = vec![0u32; rank.len()];
            for (c, &r) in rank.iter().enumerate() {
                if r as usize >= rank.len() {
                    return Err(OrderingError::Parse(format!("rank {r} out of range")));
                }
                edge_at_rank[r as usize] = c as u32;
            }
            while levels.len() < level {
                levels.push(Vec::new());
            }
            if levels[level - 1].len() != vertex {
                return Err(OrderingError::Parse(format!(
                    "vertex {vertex} at level {level} out of order"
                )));
            }
            levels[level - 1].push(VertexOrder { rank, edge_at_rank });
        }
        Ok(Order { levels })
    }
}

/// Samples each vertex's ranking as an independent uniform permutation, from
/// the substream keyed `(seed, level, vertex)`.
pub fn sample_order(diagram: &BratteliDiagram, seed: u64, depth: usize) -> Order {
    assert!(depth <= diagram.depth(), "depth exceeds diagram depth");
    let levels = (1..depth)
        .map(|n| {
            (0..diagram.level_size(n))
                .map(|v| {
                    let d = diagram.in_degree(n, v);
                    let mut rng = rng::vertex_rng(seed, n, v);
                    VertexOrder::from_edge_at_rank(uniform_permutation(&mut rng, d))
                })
                .collect()
        })
        .collect();
    Order { levels }
}

/// Source of the omega-maximal incoming edge of `(level, v)` under the same
/// substream as [`sample_order`], without materializing the full ranking.
pub fn max_edge_source(diagram: &BratteliDiagram, seed: u64, level: usize, v: usize) -> usize {
    let d = diagram.in_degree(level, v);
    let mut rng = rng::vertex_rng(seed, level, v);
    let c = rng::max_rank_element(&mut rng, d);
    canonical_edge(diagram, level, v, c as usize).source
}

pub const DEFAULT_ENUMERATION_CAP: u128 = 10_000_000;

/// Exhaustive iterator over every order on the first `depth` levels.
#[derive(Debug)]
pub struct OrderEnumerator<'a> {
    diagram: &'a BratteliDiagram,
    /// `(level, vertex, degree)` in a fixed sweep order.
    vertices: Vec<(usize, usize, usize)>,
    /// Mixed-radix counter digit per vertex, radix `degree!`.
    counter: Vec<u64>,
    radices: Vec<u64>,
    done: bool,
    total: u128,
}

fn factorial(n: usize) -> u64 {
    (1..=n as u64).product()
}

/// Lehmer-code unranking: the `index`-th permutation of `0..d`.
fn unrank_permutation(d: usize, mut index: u64) -> Vec<u32> {
    let mut items: Vec<u32> = (0..d as u32).collect();
    let mut out = Vec::with_capacity(d);
    for i in (1..=d).rev() {
        let f = factorial(i - 1);
        let pos = (index / f) as usize;
        index %= f;
        out.push(items.remove(pos));
    }
    out
}

impl<'a> OrderEnumerator<'a> {
    pub fn total(&self) -> u128 {
        self.total
    }
}

impl<'a> Iterator for OrderEnumerator<'a> {
    type Item = Order;

    fn next(&mut self) -> Option<Order> {
        if self.done {
            return None;
        }
        // Materialize the order for the current counter.
        let depth = self.vertices.last().map_or(1, |&(n, _, _)| n + 1);
        let mut levels: Vec<Vec<VertexOrder>> = (1..depth)
            .map(|n| Vec::with_capacity(self.diagram.level_size(n)))
            .collect();
        for (idx, &(n, _v, d)) in self.vertices.iter().enumerate() {
            let perm = unrank_permutation(d, self.counter[idx]);
            levels[n - 1].push(VertexOrder::from_edge_at_rank(perm));
        }
        // Advance the mixed-radix counter.
        let mut i = 0;
        loop {
            if i == self.counter.len() {
                self.done = true;
                break;
            }
            self.counter[i] += 1;
            if self.counter[i] < self.radices[i] {
                break;
            }
            self.counter[i] = 0;
            i += 1;
        }
        Some(Order { levels })
    }
}

/// Yields every order on levels `1..depth` exactly once; the count is the
/// product of `d_v!` over the ordered vertices and must stay within `cap`.
pub fn enumerate_orders<'a>(
    diagram: &'a BratteliDiagram,
    depth: usize,
    cap: u128,
) -> Result<OrderEnumerator<'a>, OrderingError> {
    assert!(depth <= diagram.depth());
    let mut vertices = Vec::new();
    let mut radices = Vec::new();
    let mut total: u128 = 1;
    for n in 1..depth {
        for v in 0..diagram.level_size(n) {
            let d = diagram.in_degree(n, v);
            vertices.push((n, v, d));
            let f = factorial(d);
            radices.push(f);
            total = total.saturating_mul(f as u128);
        }
    }
    if total > cap {
        return Err(OrderingError::EnumerationCap { orders: total, cap });
    }
    Ok(OrderEnumerator {
        diagram,
        counter: vec![0; vertices.len()],
        vertices,
        radices,
        done: false,
        total,
    })
}

/// Lexicographic comparison of two comparable finite paths: the highest
/// differing index decides, by rank at that edge's common range.
pub fn compare_lex(
    diagram: &BratteliDiagram,
    order: &Order,
    p: &PathPrefix,
    q: &PathPrefix,
) -> Result<CmpOrdering, OrderingError> {
    if p.len() != q.len() || p.end_vertex() != q.end_vertex() {
        return Err(OrderingError::Incomparable);
    }
    for (pe, qe) in p.edges.iter().zip(&q.edges).rev() {
        if pe != qe {
            // Ranges agree because all later edges agree.
            debug_assert_eq!(pe.target, qe.target);
            let rp = order.rank(diagram, pe);
            let rq = order.rank(diagram, qe);
            return Ok(rp.cmp(&rq));
        }
    }
    Ok(CmpOrdering::Equal)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Extreme {
    Max,
    Min,
}

/// The unique path into `(level, v)` whose every edge is extreme among its
/// range's incoming edges.
pub fn extreme_path(
    diagram: &BratteliDiagram,
    order: &Order,
    level: usize,
    v: usize,
    which: Extreme,
) -> PathPrefix {
    let mut edges = Vec::with_capacity(level);
    let mut target = v;
    for n in (1..=level).rev() {
        let vo = order.vertex(n, target);
        let c = match which {
            Extreme::Max => vo.max_edge(),
            Extreme::Min => vo.min_edge(),
        };
        let e = canonical_edge(diagram, n, target, c);
        target = e.source;
        edges.push(e);
    }
    edges.reverse();
    PathPrefix { edges }
}

/// For each `v` in `V_N`, the level-`k` vertex reached by following maximal
/// (tribe) or minimal (clan) edges downward.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AncestryTable {
    pub base_level: usize,
    pub top_level: usize,
    pub tribe: Vec<usize>,
    pub clan: Vec<usize>,
}

/// One bottom-up sweep: seeded by the identity at level `k`, then
/// `tribe(v) = tribe(source of the max incoming edge of v)` per level.
pub fn ancestry_table(
    diagram: &BratteliDiagram,
    order: &Order,
    k: usize,
    top: usize,
) -> AncestryTable {
    assert!(k <= top && top <= order.depth());
    let mut tribe: Vec<usize> = (0..diagram.level_size(k)).collect();
    let mut clan = tribe.clone();
    for n in k + 1..=top {
        let size = diagram.level_size(n);
        let mut next_tribe = Vec::with_capacity(size);
        let mut next_clan = Vec::with_capacity(size);
        for v in 0..size {
            let vo = order.vertex(n, v);
            let max_src = canonical_edge(diagram, n, v, vo.max_edge()).source;
            let min_src = canonical_edge(diagram, n, v, vo.min_edge()).source;
            next_tribe.push(tribe[max_src]);
            next_clan.push(clan[min_src]);
        }
        tribe = next_tribe;
        clan = next_clan;
    }
    AncestryTable { base_level: k, top_level: top, tribe, clan }
}

/// All paths in `E(v_0, v)` ending at `(level, v)`; exact, for oracles.
pub fn enumerate_paths(diagram: &BratteliDiagram, level: usize, v: usize) -> Vec<PathPrefix> {
    let mut acc: Vec<PathPrefix> = vec![PathPrefix { edges: Vec::new() }];
    // Build downward from the root, pruning to paths that can still reach v.
    // Reachability mask per level.
    let mut reach: Vec<Vec<bool>> = vec![Vec::new(); level + 1];
    reach[level] = (0..diagram.level_size(level)).map(|x| x == v).collect();
    for n in (0..level).rev() {
        let m = diagram.incidence(n);
        reach[n] = (0..diagram.level_size(n))
            .map(|w| (0..m.rows()).any(|t| reach[n + 1][t] && m.entry(t, w) > 0))
            .collect();
    }
    for n in 1..=level {
        let m = diagram.incidence(n - 1);
        let mut next = Vec::new();
        for p in &acc {
            let src = p.end_vertex().unwrap_or(0);
            for t in 0..m.rows() {
                if !reach[n][t] {
                    continue;
                }
                for copy in 1..=m.entry(t, src) {
                    let mut edges = p.edges.clone();
                    edges.push(EdgeRef { level: n, target: t, source: src, copy });
                    next.push(PathPrefix { edges });
                }
            }
        }
        acc = next;
    }
    acc
}
