//! Immutable Bratteli diagram model: construction, validation, telescoping
//! and structural classification.
//!
//! A diagram is a finite truncation of depth `D`: level sizes
//! `M_0 = 1, M_1, ..., M_{D-1}` and, between consecutive levels, integer
//! incidence matrices counting edges. Vertices are identified by
//! `(level, index)` with indices `0..M_n`; this fixed indexing is also the
//! one used by the evolve-and-split halving in the census module.

use num::BigUint;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub type Rational = num::rational::Ratio<u64>;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum DiagramError {
    #[error("level sizes must be non-empty and start with a single root vertex")]
    BadRoot,
    #[error("expected {expected} incidence matrices for {levels} levels, got {got}")]
    MatrixCount { levels: usize, expected: usize, got: usize },
    #[error("incidence matrix {level} has shape {rows}x{cols}, expected {want_rows}x{want_cols}")]
    DimensionMismatch {
        level: usize,
        rows: usize,
        cols: usize,
        want_rows: usize,
        want_cols: usize,
    },
    #[error("vertex {vertex} at level {level} has no incoming edge")]
    ZeroRow { level: usize, vertex: usize },
    #[error("telescoping cuts must start at 0 and be strictly increasing within depth: {0:?}")]
    BadCuts(Vec<usize>),
    #[error("level {level} out of range (depth {depth})")]
    LevelOutOfRange { level: usize, depth: usize },
    #[error("vertex {vertex} out of range at level {level}")]
    VertexOutOfRange { level: usize, vertex: usize },
    #[error("diagram file parse error: {0}")]
    Parse(String),
}

/// Non-negative integer matrix, `rows` = next level, `cols` = previous.
///
/// Stored either densely or as a single constant entry; the constant form
/// keeps all-ones diagrams with very large levels O(1) in memory and makes
/// edge lookups O(1).
#[derive(Debug, Clone, Eq)]
pub struct IncidenceMatrix {
    rows: usize,
    cols: usize,
    data: MatrixData,
}

#[derive(Debug, Clone, Eq, PartialEq)]
enum MatrixData {
    Dense(Vec<u64>),
    Constant(u64),
}

impl PartialEq for IncidenceMatrix {
    fn eq(&self, other: &Self) -> bool {
        if self.rows != other.rows || self.cols != other.cols {
            return false;
        }
        match (&self.data, &other.data) {
            (MatrixData::Dense(a), MatrixData::Dense(b)) => a == b,
            (MatrixData::Constant(a), MatrixData::Constant(b)) => a == b,
            _ => (0..self.rows)
                .all(|v| (0..self.cols).all(|w| self.entry(v, w) == other.entry(v, w))),
        }
    }
}

impl IncidenceMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<u64>) -> Self {
        assert_eq!(data.len(), rows * cols);
        IncidenceMatrix { rows, cols, data: MatrixData::Dense(data) }
    }

    pub fn from_rows(rows: &[Vec<u64>]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            assert_eq!(row.len(), c);
            data.extend_from_slice(row);
        }
        IncidenceMatrix { rows: r, cols: c, data: MatrixData::Dense(data) }
    }

    pub fn ones(rows: usize, cols: usize) -> Self {
        IncidenceMatrix::constant(rows, cols, 1)
    }

    /// Every entry equal to `value`, without materializing the entries.
    pub fn constant(rows: usize, cols: usize, value: u64) -> Self {
        IncidenceMatrix { rows, cols, data: MatrixData::Constant(value) }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    /// The constant entry, when the matrix is stored in constant form.
    pub fn uniform_entry(&self) -> Option<u64> {
        match self.data {
            MatrixData::Constant(c) => Some(c),
            MatrixData::Dense(_) => None,
        }
    }

    /// Number of edges from `(level n, w)` up to `(level n+1, v)`.
    pub fn entry(&self, v: usize, w: usize) -> u64 {
        debug_assert!(v < self.rows && w < self.cols);
        match &self.data {
            MatrixData::Dense(d) => d[v * self.cols + w],
            MatrixData::Constant(c) => *c,
        }
    }

    pub fn row(&self, v: usize) -> Vec<u64> {
        match &self.data {
            MatrixData::Dense(d) => d[v * self.cols..(v + 1) * self.cols].to_vec(),
            MatrixData::Constant(c) => vec![*c; self.cols],
        }
    }

    pub fn row_sum(&self, v: usize) -> u64 {
        match &self.data {
            MatrixData::Dense(d) => d[v * self.cols..(v + 1) * self.cols].iter().sum(),
            MatrixData::Constant(c) => c * self.cols as u64,
        }
    }

    /// Source and 1-based copy of the `c`-th entry of row `v` when the row's
    /// multiplicities are laid out source-by-source.
    pub fn locate(&self, v: usize, c: u64) -> (usize, u64) {
        match &self.data {
            MatrixData::Constant(f) => ((c / f) as usize, c % f + 1),
            MatrixData::Dense(_) => {
                let mut rem = c;
                for w in 0..self.cols {
                    let f = self.entry(v, w);
                    if rem < f {
                        return (w, rem + 1);
                    }
                    rem -= f;
                }
                panic!("edge index {c} out of range in row {v}");
            }
        }
    }

    /// Sum of row `v` entries over sources `0..source`.
    pub fn prefix_sum(&self, v: usize, source: usize) -> u64 {
        match &self.data {
            MatrixData::Constant(f) => f * source as u64,
            MatrixData::Dense(d) => {
                d[v * self.cols..v * self.cols + source].iter().sum()
            }
        }
    }

    pub fn col_sum(&self, w: usize) -> u64 {
        match &self.data {
            MatrixData::Dense(d) => {
                (0..self.rows).map(|v| d[v * self.cols + w]).sum()
            }
            MatrixData::Constant(c) => c * self.rows as u64,
        }
    }

    pub fn max_entry(&self) -> u64 {
        match &self.data {
            MatrixData::Dense(d) => d.iter().copied().max().unwrap_or(0),
            MatrixData::Constant(c) => *c,
        }
    }

    pub fn all_positive(&self) -> bool {
        match &self.data {
            MatrixData::Dense(d) => d.iter().all(|&e| e > 0),
            MatrixData::Constant(c) => *c > 0,
        }
    }

    /// `self * other`, exact with overflow checks (used by telescoping).
    fn multiply(&self, other: &IncidenceMatrix) -> IncidenceMatrix {
        assert_eq!(self.cols, other.rows);
        let mut data = vec![0u64; self.rows * other.cols];
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.entry(i, k);
                if a == 0 {
                    continue;
                }
                for j in 0..other.cols {
                    data[i * other.cols + j] = data[i * other.cols + j]
                        .checked_add(a.checked_mul(other.entry(k, j)).expect("incidence overflow"))
                        .expect("incidence overflow");
                }
            }
        }
        IncidenceMatrix { rows: self.rows, cols: other.cols, data: MatrixData::Dense(data) }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BratteliDiagram {
    level_sizes: Vec<usize>,
    incidence: Vec<IncidenceMatrix>,
}

impl BratteliDiagram {
    /// Validates the dimension chain and the positive-row-sum invariant.
    pub fn new(
        level_sizes: Vec<usize>,
        incidence: Vec<IncidenceMatrix>,
    ) -> Result<Self, DiagramError> {
        if level_sizes.is_empty() || level_sizes[0] != 1 || level_sizes.contains(&0) {
            return Err(DiagramError::BadRoot);
        }
        if incidence.len() != level_sizes.len() - 1 {
            return Err(DiagramError::MatrixCount {
                levels: level_sizes.len(),
                expected: level_sizes.len() - 1,
                got: incidence.len(),
            });
        }
        for (n, m) in incidence.iter().enumerate() {
            if m.rows() != level_sizes[n + 1] || m.cols() != level_sizes[n] {
                return Err(DiagramError::DimensionMismatch {
                    level: n,
                    rows: m.rows(),
                    cols: m.cols(),
                    want_rows: level_sizes[n + 1],
                    want_cols: level_sizes[n],
                });
            }
            for v in 0..m.rows() {
                if m.row_sum(v) == 0 {
                    return Err(DiagramError::ZeroRow { level: n + 1, vertex: v });
                }
            }
        }
        Ok(BratteliDiagram { level_sizes, incidence })
    }

    /// All-ones incidence between every pair of consecutive levels.
    pub fn all_ones(level_sizes: &[usize]) -> Result<Self, DiagramError> {
        let incidence = level_sizes
            .windows(2)
            .map(|w| IncidenceMatrix::ones(w[1], w[0]))
            .collect();
        BratteliDiagram::new(level_sizes.to_vec(), incidence)
    }

    /// Every row of matrix `n` equals `rows[n]` (one row pattern per level).
    pub fn constant_rows(level_sizes: &[usize], rows: &[Vec<u64>]) -> Result<Self, DiagramError> {
        if rows.len() + 1 != level_sizes.len() {
            return Err(DiagramError::MatrixCount {
                levels: level_sizes.len(),
                expected: level_sizes.len() - 1,
                got: rows.len(),
            });
        }
        let incidence = level_sizes
            .windows(2)
            .zip(rows)
            .map(|(w, row)| {
                IncidenceMatrix::from_rows(&vec![row.clone(); w[1]])
            })
            .collect();
        BratteliDiagram::new(level_sizes.to_vec(), incidence)
    }

    /// Square levels with `f_{ii} = diag[n]` and `b` off the diagonal
    /// (matrix `0` from the root is all ones).
    pub fn diagonal_heavy(
        level_sizes: &[usize],
        diag: &[u64],
        b: u64,
    ) -> Result<Self, DiagramError> {
        let mut incidence = Vec::with_capacity(level_sizes.len().saturating_sub(1));
        for (n, w) in level_sizes.windows(2).enumerate() {
            if n == 0 {
                incidence.push(IncidenceMatrix::ones(w[1], w[0]));
            } else {
                let (rows, cols) = (w[1], w[0]);
                let a = diag[n - 1];
                let mut data = vec![b; rows * cols];
                for i in 0..rows.min(cols) {
                    data[i * cols + i] = a;
                }
                incidence.push(IncidenceMatrix::new(rows, cols, data));
            }
        }
        BratteliDiagram::new(level_sizes.to_vec(), incidence)
    }

    /// Number of stored levels.
    pub fn depth(&self) -> usize {
        self.level_sizes.len()
    }

    pub fn level_sizes(&self) -> &[usize] {
        &self.level_sizes
    }

    pub fn level_size(&self, n: usize) -> usize {
        self.level_sizes[n]
    }

    /// Matrix of edges between levels `n` and `n+1`.
    pub fn incidence(&self, n: usize) -> &IncidenceMatrix {
        &self.incidence[n]
    }

    /// `|r^{-1}(v)|` for `v` at `level >= 1`.
    pub fn in_degree(&self, level: usize, v: usize) -> usize {
        self.incidence[level - 1].row_sum(v) as usize
    }

    pub fn check_vertex(&self, level: usize, v: usize) -> Result<(), DiagramError> {
        if level >= self.depth() {
            return Err(DiagramError::LevelOutOfRange { level, depth: self.depth() });
        }
        if v >= self.level_sizes[level] {
            return Err(DiagramError::VertexOutOfRange { level, vertex: v });
        }
        Ok(())
    }

    /// Number of edges leaving `(n, w)` upward.
    pub fn column_sum(&self, n: usize, w: usize) -> u64 {
        self.incidence[n].col_sum(w)
    }

    pub fn is_completely_connected(&self) -> bool {
        self.incidence.iter().all(IncidenceMatrix::all_positive)
    }

    /// Proportion of edges with range `v` (level `n+1`) that have source `w`.
    pub fn edge_proportion(&self, n: usize, v: usize, w: usize) -> Rational {
        let m = &self.incidence[n];
        Rational::new(m.entry(v, w), m.row_sum(v))
    }

    /// Multiplicity class `V_n^{v,i}` for `v` at level `n+1`: sources `w` with
    /// exactly `i` edges up to `v`.
    pub fn multiplicity_class(&self, n: usize, v: usize, i: u64) -> Vec<usize> {
        let m = &self.incidence[n];
        (0..m.cols()).filter(|&w| m.entry(v, w) == i).collect()
    }

    pub fn max_incidence_entry(&self) -> u64 {
        self.incidence
            .iter()
            .map(IncidenceMatrix::max_entry)
            .max()
            .unwrap_or(0)
    }

    /// Number of root-to-`v` paths, as entry `v` of `F_{n-1} ... F_0 e_{v_0}`.
    pub fn path_count(&self, level: usize, v: usize) -> Result<BigUint, DiagramError> {
        self.check_vertex(level, v)?;
        let mut counts = vec![BigUint::from(1u32)];
        for n in 0..level {
            let m = &self.incidence[n];
            let mut next = vec![BigUint::from(0u32); m.rows()];
            for (t, slot) in next.iter_mut().enumerate() {
                for (w, c) in counts.iter().enumerate() {
                    *slot += c * m.entry(t, w);
                }
            }
            counts = next;
        }
        Ok(counts[v].clone())
    }

    /// Telescoping to the levels named by `cuts` (`cuts[0] = 0`, strictly
    /// increasing, within depth). Incidence matrices are exact products of
    /// the spanned matrices.
    pub fn telescope(&self, cuts: &[usize]) -> Result<BratteliDiagram, DiagramError> {
        let ok = cuts.first() == Some(&0)
            && cuts.windows(2).all(|w| w[0] < w[1])
            && cuts.last().is_some_and(|&l| l < self.depth());
        if !ok {
            return Err(DiagramError::BadCuts(cuts.to_vec()));
        }
        let level_sizes: Vec<usize> = cuts.iter().map(|&c| self.level_sizes[c]).collect();
        let mut incidence = Vec::with_capacity(cuts.len() - 1);
        for w in cuts.windows(2) {
            let (lo, hi) = (w[0], w[1]);
            let mut prod = self.incidence[lo].clone();
            for n in lo + 1..hi {
                prod = self.incidence[n].multiply(&prod);
            }
            incidence.push(prod);
        }
        BratteliDiagram::new(level_sizes, incidence)
    }
}

// ── Classification ──────────────────────────────────────────────────────────

/// Witness that the incidence entries are bounded by `r` and every
/// multiplicity class holds at least an `alpha` fraction of its level.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Impartiality {
    pub r: u64,
    pub alpha: Rational,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Superquadratic {
    pub delta: f64,
    /// Smallest level from which `M_n >= n^{2+delta}` holds to depth.
    pub threshold: usize,
}

/// Structural predicates evaluated exhaustively over the stored depth.
/// "For all n" statements are witnessed up to depth only.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagramClassification {
    pub completely_connected: bool,
    /// Bound on level sizes, reported when the sizes stop growing within depth.
    pub finite_rank: Option<usize>,
    pub simple_witnessed: bool,
    pub impartial: Option<Impartiality>,
    /// Level at which impartiality fails (some class empty or entry zero).
    pub impartial_failure: Option<usize>,
    pub superquadratic: Option<Superquadratic>,
    /// Level violating `M_n >= n^{2+delta}` for the best candidate delta.
    pub superquadratic_failure: Option<usize>,
    /// Tail partial sums of `|V_{n+1}| exp(-|V_n| / n^{2+2delta/3})` beyond
    /// half depth stay below the tolerance.
    pub exponentially_bounded: bool,
}

pub const DEFAULT_EXP_BOUND_TOL: f64 = 1e-9;

impl BratteliDiagram {
    pub fn classify(&self, delta_candidates: &[f64]) -> DiagramClassification {
        self.classify_with_tolerance(delta_candidates, DEFAULT_EXP_BOUND_TOL)
    }

    pub fn classify_with_tolerance(
        &self,
        delta_candidates: &[f64],
        exp_tol: f64,
    ) -> DiagramClassification {
        let depth = self.depth();
        let completely_connected = self.is_completely_connected();

        // Finite rank: sizes in the deeper half never exceed the earlier max.
        let finite_rank = if depth >= 2 {
            let bound = *self.level_sizes[1..].iter().max().unwrap();
            let half = depth / 2;
            let early = self.level_sizes[1..half.max(2)].iter().max().copied().unwrap_or(1);
            if early == bound { Some(bound) } else { None }
        } else {
            None
        };

        // Simplicity witnessed: from any level m, some later stored level is
        // reachable from every vertex (positivity of running products).
        //
        // Cheap sufficient check first: an everywhere-positive matrix above m
        // spreads any nonempty forward image to the whole next level, and the
        // image stays nonempty as long as no vertex below it is a dead end
        // (zero column). Only small diagrams get the exact propagation.
        const SIMPLE_EXHAUSTIVE_LIMIT: usize = 512;
        let no_dead_ends =
            |n: usize| (0..self.level_sizes[n]).all(|w| self.column_sum(n, w) > 0);
        let simple_quick = |m: usize| {
            (m..depth.saturating_sub(1)).any(|cur| {
                self.incidence[cur].all_positive() && (m..cur).all(no_dead_ends)
            })
        };
        let simple_exact = |m: usize| {
            // pos[w][x]: path exists from (m, w) to current-level vertex x.
            let mut pos: Vec<Vec<bool>> = (0..self.level_sizes[m])
                .map(|w| (0..self.level_sizes[m]).map(|x| x == w).collect())
                .collect();
            let mut cur = m;
            loop {
                if cur + 1 >= depth {
                    break false;
                }
                let mat = &self.incidence[cur];
                let next_size = self.level_sizes[cur + 1];
                for w in 0..pos.len() {
                    let mut nxt = vec![false; next_size];
                    for (t, slot) in nxt.iter_mut().enumerate() {
                        *slot = (0..mat.cols()).any(|x| pos[w][x] && mat.entry(t, x) > 0);
                    }
                    pos[w] = nxt;
                }
                cur += 1;
                if pos.iter().all(|row| row.iter().all(|&b| b)) {
                    break true;
                }
            }
        };
        let small = self.level_sizes.iter().all(|&s| s <= SIMPLE_EXHAUSTIVE_LIMIT);
        let simple_witnessed = (0..depth.saturating_sub(1))
            .all(|m| simple_quick(m) || (small && simple_exact(m)));

        // Impartiality.
        let r = self.max_incidence_entry();
        let mut impartial_failure = None;
        let mut alpha: Option<Rational> = None;
        'outer: for n in 1..depth.saturating_sub(1) {
            let m = &self.incidence[n];
            let size = self.level_sizes[n] as u64;
            // Identical rows have identical multiplicity classes.
            let rows_to_check = if m.uniform_entry().is_some() { 1 } else { m.rows() };
            for v in 0..rows_to_check {
                for i in 1..=r {
                    let class = self.multiplicity_class(n, v, i).len() as u64;
                    if class == 0 {
                        impartial_failure = Some(n);
                        alpha = None;
                        break 'outer;
                    }
                    let ratio = Rational::new(class, size);
                    alpha = Some(match alpha {
                        Some(a) if a <= ratio => a,
                        _ => ratio,
                    });
                }
            }
        }
        let impartial = if completely_connected && impartial_failure.is_none() {
            alpha
                .or(if depth <= 2 { Some(Rational::new(1, 1)) } else { None })
                .map(|alpha| Impartiality { r, alpha })
        } else {
            None
        };

        // Superquadratic growth: largest candidate delta with a witness
        // threshold no deeper than half depth.
        let mut superquadratic: Option<Superquadratic> = None;
        let mut superquadratic_failure = None;
        let mut sorted = delta_candidates.to_vec();
        sorted.sort_by(|a, b| b.partial_cmp(a).unwrap());
        for &delta in &sorted {
            let holds_from = |t: usize| {
                (t..depth).all(|n| self.level_sizes[n] as f64 >= (n as f64).powf(2.0 + delta))
            };
            let threshold = (1..=depth / 2).find(|&t| holds_from(t));
            match threshold {
                Some(t) => {
                    superquadratic = Some(Superquadratic { delta, threshold: t });
                    break;
                }
                None => {
                    let witness = (depth / 2..depth)
                        .find(|&n| (self.level_sizes[n] as f64) < (n as f64).powf(2.0 + delta));
                    superquadratic_failure = superquadratic_failure.or(witness);
                }
            }
        }
        if superquadratic.is_some() {
            superquadratic_failure = None;
        }

        // Exponential boundedness under the found delta: the tail of
        // sum |V_{n+1}| exp(-|V_n|/n^{2+2delta/3}) beyond half depth is flat.
        let exponentially_bounded = match &superquadratic {
            None => false,
            Some(sq) => {
                let expo = 2.0 + 2.0 * sq.delta / 3.0;
                let tail: f64 = (depth / 2..depth.saturating_sub(1))
                    .map(|n| {
                        let vn = self.level_sizes[n] as f64;
                        let vn1 = self.level_sizes[n + 1] as f64;
                        vn1 * (-vn / (n as f64).powf(expo)).exp()
                    })
                    .sum();
                tail < exp_tol
            }
        };

        DiagramClassification {
            completely_connected,
            finite_rank,
            simple_witnessed,
            impartial,
            impartial_failure,
            superquadratic,
            superquadratic_failure,
            exponentially_bounded,
        }
    }
}

// ── File format ─────────────────────────────────────────────────────────────

#[derive(Debug, Serialize, Deserialize)]
struct DiagramFile {
    levels: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    incidence: Option<Vec<Vec<Vec<u64>>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    generator: Option<GeneratorRule>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "rule")]
enum GeneratorRule {
    #[serde(rename = "all_ones")]
    AllOnes,
    #[serde(rename = "constant_rows")]
    ConstantRows { rows: Vec<Vec<u64>> },
    #[serde(rename = "diagonal_heavy")]
    DiagonalHeavy { diag: Vec<u64>, b: u64 },
}

impl BratteliDiagram {
    /// Structured-text form with explicit incidence; `parse_text(emit_text(d)) == d`.
    pub fn emit_text(&self) -> String {
        let file = DiagramFile {
            levels: self.level_sizes.clone(),
            incidence: Some(
                self.incidence
                    .iter()
                    .map(|m| (0..m.rows()).map(|v| m.row(v)).collect())
                    .collect(),
            ),
            generator: None,
        };
        toml::to_string(&file).expect("diagram serialization")
    }

    pub fn parse_text(text: &str) -> Result<Self, DiagramError> {
        let file: DiagramFile =
            toml::from_str(text).map_err(|e| DiagramError::Parse(e.to_string()))?;
        match (file.incidence, file.generator) {
            (Some(mats), _) => {
                let incidence = mats.iter().map(|m| IncidenceMatrix::from_rows(m)).collect();
                BratteliDiagram::new(file.levels, incidence)
            }
            (None, Some(GeneratorRule::AllOnes)) => BratteliDiagram::all_ones(&file.levels),
            (None, Some(GeneratorRule::ConstantRows { rows })) => {
                BratteliDiagram::constant_rows(&file.levels, &rows)
            }
            (None, Some(GeneratorRule::DiagonalHeavy { diag, b })) => {
                BratteliDiagram::diagonal_heavy(&file.levels, &diag, b)
            }
            (None, None) => Err(DiagramError::Parse(
                "need either `incidence` or `generator`".into(),
            )),
        }
    }
}
