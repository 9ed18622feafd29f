//! Diagram specifications and the resolved experiment configuration that
//! gets embedded into every summary.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use anyhow::{bail, Context};
use bratteli::diagram::IncidenceMatrix;
use bratteli::BratteliDiagram;
use serde::Serialize;

/// Level-size profile named on the command line.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum DiagramSpec {
    /// `const:K` — all-ones, constant level size `K`.
    Const(usize),
    /// `square` — all-ones, `M_n = (n+2)^2`.
    Square,
    /// `cube` — all-ones, `M_n = (n+2)^3`.
    Cube,
    /// `levels:1,a,b,...` — all-ones with explicit sizes (root included).
    Levels(Vec<usize>),
    /// `odometer` — single vertex per level, two parallel edges.
    Odometer,
    /// `finite-rank-2` — two vertices, diagonal entries `100(n^2+1)`, ones
    /// off the diagonal.
    FiniteRank2,
    /// `file:PATH` — structured-text diagram file.
    File(String),
}

impl FromStr for DiagramSpec {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> anyhow::Result<Self> {
        if let Some(k) = s.strip_prefix("const:") {
            let k: usize = k.parse().context("const:K needs an integer K")?;
            if k == 0 {
                bail!("const:K needs K >= 1");
            }
            return Ok(DiagramSpec::Const(k));
        }
        if let Some(list) = s.strip_prefix("levels:") {
            let levels: Vec<usize> = list
                .split(',')
                .map(|x| x.trim().parse::<usize>())
                .collect::<Result<_, _>>()
                .context("levels: needs a comma-separated integer list")?;
            return Ok(DiagramSpec::Levels(levels));
        }
        if let Some(path) = s.strip_prefix("file:") {
            return Ok(DiagramSpec::File(path.to_string()));
        }
        match s {
            "square" => Ok(DiagramSpec::Square),
            "cube" => Ok(DiagramSpec::Cube),
            "odometer" => Ok(DiagramSpec::Odometer),
            "finite-rank-2" => Ok(DiagramSpec::FiniteRank2),
            other => bail!(
                "unknown diagram spec {other:?}; use const:K, square, cube, \
                 levels:..., odometer, finite-rank-2 or file:PATH"
            ),
        }
    }
}

impl fmt::Display for DiagramSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DiagramSpec::Const(k) => write!(f, "const:{k}"),
            DiagramSpec::Square => write!(f, "square"),
            DiagramSpec::Cube => write!(f, "cube"),
            DiagramSpec::Levels(l) => {
                let list: Vec<String> = l.iter().map(usize::to_string).collect();
                write!(f, "levels:{}", list.join(","))
            }
            DiagramSpec::Odometer => write!(f, "odometer"),
            DiagramSpec::FiniteRank2 => write!(f, "finite-rank-2"),
            DiagramSpec::File(p) => write!(f, "file:{p}"),
        }
    }
}

impl DiagramSpec {
    /// Materializes levels `0..=depth` (file specs keep their own depth).
    pub fn build(&self, depth: usize) -> anyhow::Result<BratteliDiagram> {
        let sizes = |f: &dyn Fn(usize) -> usize| -> Vec<usize> {
            (0..=depth).map(|n| if n == 0 { 1 } else { f(n) }).collect()
        };
        let d = match self {
            DiagramSpec::Const(k) => BratteliDiagram::all_ones(&sizes(&|_| *k))?,
            DiagramSpec::Square => {
                BratteliDiagram::all_ones(&sizes(&|n| (n + 2) * (n + 2)))?
            }
            DiagramSpec::Cube => {
                BratteliDiagram::all_ones(&sizes(&|n| (n + 2) * (n + 2) * (n + 2)))?
            }
            DiagramSpec::Levels(levels) => BratteliDiagram::all_ones(levels)?,
            DiagramSpec::Odometer => {
                let incidence = (0..depth).map(|_| IncidenceMatrix::constant(1, 1, 2)).collect();
                BratteliDiagram::new(vec![1; depth + 1], incidence)?
            }
            DiagramSpec::FiniteRank2 => {
                let diag: Vec<u64> = (1..depth as u64)
                    .map(|n| 100 * (n * n + 1))
                    .collect();
                BratteliDiagram::diagonal_heavy(&sizes(&|_| 2), &diag, 1)?
            }
            DiagramSpec::File(path) => {
                let text = std::fs::read_to_string(Path::new(path))
                    .with_context(|| format!("reading diagram file {path}"))?;
                BratteliDiagram::parse_text(&text)?
            }
        };
        Ok(d)
    }
}

/// Fully resolved run parameters, serialized into the summary.
#[derive(Debug, Clone, Serialize)]
pub struct ResolvedConfig {
    pub experiment: String,
    pub diagram: String,
    pub seed: u64,
    pub trials: u64,
    pub depth: usize,
    /// Experiment-specific key=value pairs, sorted by key.
    pub params: Vec<(String, String)>,
}

impl ResolvedConfig {
    /// FNV-1a over the canonical serialization; stable across runs and
    /// platforms.
    pub fn hash(&self) -> u64 {
        let text = toml::to_string(self).expect("config serialization");
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for b in text.bytes() {
            h ^= b as u64;
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        }
        h
    }
}
