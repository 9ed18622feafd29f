//! Named reproduction recipes: each pins down the exact configuration used by
//! the acceptance experiments, so a single command replays any of them.

use crate::config::DiagramSpec;
use crate::experiments::{self, RunError, RunOutput};

pub struct Recipe {
    pub name: &'static str,
    pub description: &'static str,
    run: fn(u64) -> Result<RunOutput, RunError>,
}

impl Recipe {
    /// Runs the recipe; `trials` can be reduced for quick determinism checks.
    pub fn run(&self, trials_override: Option<u64>) -> Result<RunOutput, RunError> {
        (self.run)(trials_override.unwrap_or(self.default_trials()))
    }

    pub fn default_trials(&self) -> u64 {
        DEFAULT_TRIALS
            .iter()
            .find(|(n, _)| *n == self.name)
            .map(|(_, t)| *t)
            .unwrap_or(1)
    }
}

const DEFAULT_TRIALS: &[(&str, u64)] = &[
    ("lemma-random", 500),
    ("trail-bijection", 200),
    ("martingale", 10_000),
    ("binomial-law", 20_000),
    ("dichotomy-divergent", 5_000),
    ("dichotomy-convergent", 5_000),
    ("evolve-split", 2_000),
    ("imperfection-mc", 100_000),
    ("equitability-cascade", 20),
    ("finite-rank-2", 2_000),
    ("donnelly-scan", 4_000),
];

fn square() -> DiagramSpec {
    DiagramSpec::Square
}

pub fn registry() -> Vec<Recipe> {
    vec![
        Recipe {
            name: "lemma-random",
            description: "good-ordering bound on 500 random instances at n = 7",
            run: |t| experiments::lemma_oracle(7, t, 101, false),
        },
        Recipe {
            name: "bing-extremal",
            description: "extremal degree profile meeting the 1/(n-1) bound with equality",
            run: |_| experiments::lemma_oracle(6, 0, 0, true),
        },
        Recipe {
            name: "trail-bijection",
            description: "good orderings vs labeled Eulerian trails, 200 random instances",
            run: |t| experiments::lemma_oracle(6, t, 202, false),
        },
        Recipe {
            name: "martingale",
            description: "frequency martingale and heterozygosity decay, M_n = 5, depth 25",
            run: |t| experiments::wf_sim(&DiagramSpec::Const(5), 25, t, 7, 1, 2),
        },
        Recipe {
            name: "binomial-law",
            description: "binomial conditional transition law data, M_n = 5",
            run: |t| experiments::wf_sim(&DiagramSpec::Const(5), 6, t, 21, 1, 2),
        },
        Recipe {
            name: "dichotomy-divergent",
            description: "unique surviving tribe census, M_n = 2 constant, depth 40",
            run: |t| {
                experiments::census_run(&DiagramSpec::Const(2), 1, &[10, 20, 30, 40], t, 11)
            },
        },
        Recipe {
            name: "dichotomy-convergent",
            description: "surviving tribe census, M_n = (n+2)^2, depth 40",
            run: |t| experiments::census_run(&square(), 1, &[10, 20, 30, 40], t, 13),
        },
        Recipe {
            name: "evolve-split",
            description: "evolve-and-split good-family rate, M_n = (n+2)^2, K = 3",
            run: |t| experiments::evolve_split(&square(), 41, None, 3, t, 17, 0.2),
        },
        Recipe {
            name: "exact-oracle",
            description: "exact census and imperfection rationals on the small fixture",
            run: |_| {
                experiments::exact_oracle(
                    &DiagramSpec::Levels(vec![1, 2, 2, 2, 2]),
                    1,
                    3,
                    Some((1, 4)),
                    10_000_000,
                )
            },
        },
        Recipe {
            name: "imperfection-mc",
            description: "Monte Carlo imperfection estimate on the exact-oracle fixture",
            run: |t| {
                experiments::imperfection(&DiagramSpec::Levels(vec![1, 2, 2, 2, 2]), 1, 2, 4, t, 29)
            },
        },
        Recipe {
            name: "successor-orbit",
            description: "odometer orbit through all depth-10 binary paths",
            run: |_| experiments::successor_orbit(&DiagramSpec::Odometer, 10, 1, 0),
        },
        Recipe {
            name: "equitability-cascade",
            description: "equitable-set cascade on the cubic-growth diagram",
            run: |t| experiments::cascade(&DiagramSpec::Cube, 40, 10, 0.1, 1e-3, t, 23, 0.05),
        },
        Recipe {
            name: "finite-rank-2",
            description: "two-tribe census on the diagonal-heavy rank-2 diagram, depth 30",
            run: |t| {
                experiments::census_run(&DiagramSpec::FiniteRank2, 1, &[10, 20, 30], t, 19)
            },
        },
        Recipe {
            name: "donnelly-scan",
            description: "domination fraction against the reciprocal size sum, M_n = 2",
            run: |t| experiments::donnelly_scan(&DiagramSpec::Const(2), 30, t, 31, 1),
        },
    ]
}

pub fn find(name: &str) -> Option<Recipe> {
    registry().into_iter().find(|r| r.name == name)
}
