//! Experiment implementations: each produces deterministic CSV bodies plus
//! summary metrics for one resolved configuration.

use std::fmt::Write as _;

use anyhow::anyhow;
use bratteli::census;
use bratteli::census::SRational;
use bratteli::oracle;
use bratteli::ordering::{self, Extreme};
use bratteli::rng::trial_seed;
use bratteli::vershik;
use bratteli::wrightfisher;
use bratteli::BratteliDiagram;
use rayon::prelude::*;

use crate::config::{DiagramSpec, ResolvedConfig};

/// Failure modes mapped to process exit codes.
#[derive(Debug)]
pub enum RunError {
    /// Invalid or inconsistent configuration (exit 2).
    Config(anyhow::Error),
    /// An explicit enumeration/size cap refused the run (exit 3).
    Cap(String),
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => 2,
            RunError::Cap(_) => 3,
        }
    }

    pub fn message(&self) -> String {
        match self {
            RunError::Config(e) => format!("config error: {e:#}"),
            RunError::Cap(m) => format!("cap refusal: {m}"),
        }
    }
}

impl From<anyhow::Error> for RunError {
    fn from(e: anyhow::Error) -> Self {
        RunError::Config(e)
    }
}

impl From<bratteli::DiagramError> for RunError {
    fn from(e: bratteli::DiagramError) -> Self {
        RunError::Config(anyhow!(e))
    }
}

pub struct RunOutput {
    pub config: ResolvedConfig,
    pub results_csv: String,
    pub summary_csv: Option<String>,
    pub metrics: Vec<(String, String)>,
}

fn build(spec: &DiagramSpec, depth: usize) -> Result<BratteliDiagram, RunError> {
    spec.build(depth).map_err(RunError::Config)
}

fn resolved(
    experiment: &str,
    spec: &DiagramSpec,
    seed: u64,
    trials: u64,
    depth: usize,
    params: &[(&str, String)],
) -> ResolvedConfig {
    ResolvedConfig {
        experiment: experiment.to_string(),
        diagram: spec.to_string(),
        seed,
        trials,
        depth,
        params: params
            .iter()
            .map(|(k, v)| (k.to_string(), v.clone()))
            .collect(),
    }
}

pub fn sample_order(
    spec: &DiagramSpec,
    depth: usize,
    seed: u64,
) -> Result<RunOutput, RunError> {
    let diagram = build(spec, depth)?;
    let order = ordering::sample_order(&diagram, seed, diagram.depth());
    let mut csv = String::from("level,vertex,ranks\n");
    for level in 1..diagram.depth() {
        for v in 0..diagram.level_size(level) {
            let vo = order.vertex(level, v);
            let ranks: Vec<String> = (0..vo.degree())
                .map(|c| vo.rank_of(c).to_string())
                .collect();
            writeln!(csv, "{},{},{}", level, v, ranks.join(" ")).unwrap();
        }
    }
    Ok(RunOutput {
        config: resolved("sample-order", spec, seed, 1, depth, &[]),
        results_csv: csv,
        summary_csv: None,
        metrics: vec![("levels".into(), (diagram.depth() - 1).to_string())],
    })
}

const ORBIT_CAP: u64 = 2_000_000;

pub fn successor_orbit(
    spec: &DiagramSpec,
    depth: usize,
    seed: u64,
    vertex: usize,
) -> Result<RunOutput, RunError> {
    let diagram = build(spec, depth)?;
    let level = diagram.depth() - 1;
    if vertex >= diagram.level_size(level) {
        return Err(RunError::Config(anyhow!(
            "vertex {vertex} out of range at level {level}"
        )));
    }
    let total = diagram.path_count(level, vertex).expect("vertex validated");
    if total > num::BigUint::from(ORBIT_CAP) {
        return Err(RunError::Cap(format!(
            "orbit of {total} paths exceeds cap {ORBIT_CAP}"
        )));
    }
    let order = ordering::sample_order(&diagram, seed, diagram.depth());
    let mut csv = String::from("index,edges\n");
    let mut cur = ordering::extreme_path(&diagram, &order, level, vertex, Extreme::Min);
    let mut index = 0u64;
    loop {
        let edges: Vec<String> = cur
            .edges
            .iter()
            .map(|e| ordering::canonical_index(&diagram, e).to_string())
            .collect();
        writeln!(csv, "{},{}", index, edges.join(" ")).unwrap();
        let step = vershik::successor(&diagram, &order, &cur);
        match step.path() {
            Some(next) => cur = next.clone(),
            None => break,
        }
        index += 1;
    }
    let visited = index + 1;
    Ok(RunOutput {
        config: resolved(
            "successor-orbit",
            spec,
            seed,
            1,
            depth,
            &[("vertex", vertex.to_string())],
        ),
        results_csv: csv,
        summary_csv: None,
        metrics: vec![
            ("orbit_length".into(), visited.to_string()),
            ("path_count".into(), total.to_string()),
        ],
    })
}

pub fn wf_sim(
    spec: &DiagramSpec,
    depth: usize,
    trials: u64,
    seed: u64,
    start_level: usize,
    init_count: usize,
) -> Result<RunOutput, RunError> {
    let diagram = build(spec, depth)?;
    if start_level >= diagram.depth() || init_count > diagram.level_size(start_level) {
        return Err(RunError::Config(anyhow!(
            "initial set of {init_count} vertices does not fit level {start_level}"
        )));
    }
    let set: Vec<usize> = (0..init_count).collect();
    let stats =
        wrightfisher::martingale_stats(&diagram, start_level, &set, trials, seed, diagram.depth());
    let fixated = stats
        .trajectories
        .iter()
        .filter(|t| t.fixated)
        .count() as f64
        / trials as f64;
    Ok(RunOutput {
        config: resolved(
            "wf-sim",
            spec,
            seed,
            trials,
            depth,
            &[
                ("init_count", init_count.to_string()),
                ("start_level", start_level.to_string()),
            ],
        ),
        results_csv: wrightfisher::trajectory_csv(&stats.trajectories),
        summary_csv: Some(stats.summary_csv()),
        metrics: vec![("fixated_fraction".into(), fixated.to_string())],
    })
}

pub fn donnelly_scan(
    spec: &DiagramSpec,
    depth: usize,
    trials: u64,
    seed: u64,
    start_level: usize,
) -> Result<RunOutput, RunError> {
    let diagram = build(spec, depth)?;
    let scan =
        wrightfisher::donnelly_scan(&diagram, start_level, trials, seed, diagram.depth());
    let last = *scan.domination_fraction.last().unwrap();
    Ok(RunOutput {
        config: resolved(
            "donnelly-scan",
            spec,
            seed,
            trials,
            depth,
            &[("start_level", start_level.to_string())],
        ),
        results_csv: scan.to_csv(),
        summary_csv: None,
        metrics: vec![("final_domination_fraction".into(), last.to_string())],
    })
}

pub fn census_run(
    spec: &DiagramSpec,
    k: usize,
    depths: &[usize],
    trials: u64,
    seed: u64,
) -> Result<RunOutput, RunError> {
    if depths.is_empty() || depths.windows(2).any(|w| w[0] >= w[1]) {
        return Err(RunError::Config(anyhow!(
            "census depths must be strictly increasing"
        )));
    }
    let max_depth = *depths.last().unwrap();
    let diagram = build(spec, max_depth)?;
    if k >= depths[0] {
        return Err(RunError::Config(anyhow!("need k < first census depth")));
    }
    let hist = census::estimate_j(&diagram, k, depths, trials, seed);
    let last = depths.len() - 1;
    Ok(RunOutput {
        config: resolved(
            "census",
            spec,
            seed,
            trials,
            max_depth,
            &[
                ("depths", depths.iter().map(usize::to_string).collect::<Vec<_>>().join(" ")),
                ("k", k.to_string()),
            ],
        ),
        results_csv: hist.to_csv(),
        summary_csv: None,
        metrics: vec![
            (
                "fraction_unique_final".into(),
                (hist.fraction_at_least(last, 1) - hist.fraction_at_least(last, 2)).to_string(),
            ),
            (
                "fraction_at_least_2_final".into(),
                hist.fraction_at_least(last, 2).to_string(),
            ),
        ],
    })
}

pub fn evolve_split(
    spec: &DiagramSpec,
    depth: usize,
    schedule: Option<Vec<usize>>,
    stages: usize,
    trials: u64,
    seed: u64,
    kappa: f64,
) -> Result<RunOutput, RunError> {
    let diagram = build(spec, depth)?;
    let (schedule, kind) = match schedule {
        Some(s) => {
            if s.first() != Some(&0)
                || s.windows(2).any(|w| w[0] >= w[1])
                || *s.last().unwrap() >= diagram.depth()
            {
                return Err(RunError::Config(anyhow!(
                    "schedule must start at 0, increase strictly and stay below the depth"
                )));
            }
            (s, None)
        }
        None => {
            let (s, kind) = census::greedy_schedule(&diagram, stages, kappa)
                .map_err(|e| RunError::Config(anyhow!(e)))?;
            (s, Some(kind))
        }
    };
    // Validate once so precondition failures refuse the whole run.
    census::evolve_and_split(&diagram, seed, &schedule, kappa)
        .map_err(|e| RunError::Config(anyhow!(e)))?;
    let flags: Vec<bool> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let f = census::evolve_and_split(&diagram, trial_seed(seed, t), &schedule, kappa)
                .expect("schedule validated");
            f.good && f.sets.values().all(|s| !s.is_empty())
        })
        .collect();
    let mut csv = String::from("trial,good\n");
    for (t, g) in flags.iter().enumerate() {
        writeln!(csv, "{},{}", t, *g as u8).unwrap();
    }
    let fraction = flags.iter().filter(|&&g| g).count() as f64 / trials as f64;
    let mut metrics = vec![
        ("good_family_fraction".into(), fraction.to_string()),
        (
            "schedule".into(),
            schedule.iter().map(usize::to_string).collect::<Vec<_>>().join(" "),
        ),
    ];
    if let Some(kind) = kind {
        metrics.push(("schedule_kind".into(), format!("{kind:?}")));
    }
    Ok(RunOutput {
        config: resolved(
            "evolve-split",
            spec,
            seed,
            trials,
            depth,
            &[
                ("kappa", kappa.to_string()),
                (
                    "schedule",
                    schedule.iter().map(usize::to_string).collect::<Vec<_>>().join(" "),
                ),
            ],
        ),
        results_csv: csv,
        summary_csv: None,
        metrics,
    })
}

#[allow(clippy::too_many_arguments)]
pub fn cascade(
    spec: &DiagramSpec,
    depth: usize,
    start_level: usize,
    delta: f64,
    exp_tol: f64,
    trials: u64,
    seed: u64,
    eps0: f64,
) -> Result<RunOutput, RunError> {
    let diagram = build(spec, depth)?;
    let steps = depth - start_level;
    let mut eps = vec![eps0];
    eps.extend(census::default_eps_sequence(start_level, steps + 1, delta));
    let eps0_exact = float_to_ratio(eps0)
        .ok_or_else(|| RunError::Config(anyhow!("eps0 must be a small dyadic value")))?;
    let rows: Vec<(bool, Option<usize>, bool)> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let s = trial_seed(seed, t);
            let search = census::find_equitable_set(&diagram, start_level, eps0_exact, 200, s)
                .map_err(|e| RunError::Config(anyhow!(e)))?;
            let Some(a) = search.set else {
                // No starting set found: count as a failed trial at the start.
                return Ok((false, Some(start_level), false));
            };
            let trace = census::equitability_cascade(
                &diagram,
                s,
                start_level,
                &a,
                &eps,
                depth,
                &[delta],
                exp_tol,
            )
            .map_err(|e| RunError::Config(anyhow!(e)))?;
            Ok((true, trace.first_failure, trace.success))
        })
        .collect::<Result<_, RunError>>()?;
    let mut csv = String::from("trial,start_found,first_failure,success\n");
    for (t, (found, fail, success)) in rows.iter().enumerate() {
        let fail = fail.map_or(String::new(), |l| l.to_string());
        writeln!(csv, "{},{},{},{}", t, *found as u8, fail, *success as u8).unwrap();
    }
    let successes = rows.iter().filter(|r| r.2).count() as f64 / trials as f64;
    Ok(RunOutput {
        config: resolved(
            "cascade",
            spec,
            seed,
            trials,
            depth,
            &[
                ("delta", delta.to_string()),
                ("eps0", eps0.to_string()),
                ("exp_tol", exp_tol.to_string()),
                ("start_level", start_level.to_string()),
            ],
        ),
        results_csv: csv,
        summary_csv: None,
        metrics: vec![("success_fraction".into(), successes.to_string())],
    })
}

/// Exact rational for simple command-line fractions like 0.05 (denominator
/// divides 10^6).
fn float_to_ratio(x: f64) -> Option<SRational> {
    let den = 1_000_000i64;
    let num = (x * den as f64).round() as i64;
    if ((num as f64 / den as f64) - x).abs() < 1e-12 {
        Some(SRational::new(num, den))
    } else {
        None
    }
}

pub fn lemma_oracle(
    n: usize,
    random_instances: u64,
    seed: u64,
    extremal: bool,
) -> Result<RunOutput, RunError> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut csv = String::from("instance,count,trails,factorial,bound_ok,bijection_ok\n");
    let mut all_ok = true;
    let factorial = |n: usize| (1..=n as u64).product::<u64>();
    let mut emit = |label: &str, inst: &oracle::LemmaInstance| -> Result<(), RunError> {
        let count = oracle::count_good_orderings(inst).map_err(cap_from_oracle)?;
        let trails = oracle::count_eulerian_trails(&inst.trail_graph()).map_err(cap_from_oracle)?;
        let nn = inst.n();
        let fact = factorial(nn);
        let bound_ok = nn < 2 || count * (nn as u64 - 1) <= fact;
        let bijection_ok = count == trails;
        all_ok &= bound_ok && bijection_ok;
        writeln!(
            csv,
            "{},{},{},{},{},{}",
            label, count, trails, fact, bound_ok as u8, bijection_ok as u8
        )
        .unwrap();
        Ok(())
    };
    if extremal {
        if n < 3 {
            return Err(RunError::Config(anyhow!("extremal instance needs n >= 3")));
        }
        let inst = oracle::extremal_instance(n);
        emit("extremal", &inst)?;
    }
    let mut made = 0u64;
    while made < random_instances {
        let r = rng.gen_range(2..=3u32);
        let f: Vec<u32> = (0..n).map(|_| rng.gen_range(0..r)).collect();
        let g: Vec<u32> = (0..n).map(|_| rng.gen_range(0..r)).collect();
        let Ok(inst) = oracle::LemmaInstance::new(f, g) else {
            continue;
        };
        emit(&format!("random-{made}"), &inst)?;
        made += 1;
    }
    Ok(RunOutput {
        config: resolved(
            "lemma-oracle",
            &DiagramSpec::Levels(vec![1]),
            seed,
            random_instances,
            n,
            &[("extremal", extremal.to_string()), ("n", n.to_string())],
        ),
        results_csv: csv,
        summary_csv: None,
        metrics: vec![("all_ok".into(), all_ok.to_string())],
    })
}

fn cap_from_oracle(e: oracle::OracleError) -> RunError {
    match e {
        oracle::OracleError::OrderingCap { .. }
        | oracle::OracleError::EdgeCap { .. }
        | oracle::OracleError::OrderSpaceCap { .. } => RunError::Cap(e.to_string()),
        other => RunError::Config(anyhow!(other)),
    }
}

pub fn imperfection(
    spec: &DiagramSpec,
    n: usize,
    big_n: usize,
    n_prime: usize,
    trials: u64,
    seed: u64,
) -> Result<RunOutput, RunError> {
    if !(n < big_n && big_n < n_prime) {
        return Err(RunError::Config(anyhow!("need n < N < N'")));
    }
    let diagram = build(spec, n_prime)?;
    let est = vershik::estimate_e_probability(&diagram, n, big_n, n_prime, trials, seed)
        .map_err(|e| RunError::Config(anyhow!(e)))?;
    Ok(RunOutput {
        config: resolved(
            "imperfection",
            spec,
            seed,
            trials,
            n_prime,
            &[
                ("big_n", big_n.to_string()),
                ("n", n.to_string()),
                ("n_prime", n_prime.to_string()),
            ],
        ),
        results_csv: est.to_csv(),
        summary_csv: None,
        metrics: vec![
            ("empirical_p".into(), est.empirical_p.to_string()),
            ("analytic_bound".into(), est.analytic_bound.to_string()),
            ("fraction_in_d".into(), (est.count_d as f64 / trials as f64).to_string()),
        ],
    })
}

pub fn exact_oracle(
    spec: &DiagramSpec,
    k: usize,
    big_n: usize,
    imperfection_args: Option<(usize, usize)>,
    cap: u128,
) -> Result<RunOutput, RunError> {
    let depth = imperfection_args.map_or(big_n, |(_, np)| np.max(big_n));
    let diagram = build(spec, depth)?;
    let mut csv = String::from("kind,key,num,den\n");
    let dist = oracle::exact_census(&diagram, k, big_n, cap).map_err(cap_from_oracle)?;
    for (j, p) in dist.iter().enumerate() {
        if *p.numer() > 0 {
            writeln!(csv, "census,{},{},{}", j, p.numer(), p.denom()).unwrap();
        }
    }
    let mut metrics: Vec<(String, String)> = Vec::new();
    if let Some((n, n_prime)) = imperfection_args {
        let e = oracle::exact_imperfection(&diagram, n, big_n, n_prime, cap)
            .map_err(cap_from_oracle)?;
        writeln!(csv, "imperfection,p_e,{},{}", e.p_e.numer(), e.p_e.denom()).unwrap();
        writeln!(csv, "imperfection,p_d,{},{}", e.p_d.numer(), e.p_d.denom()).unwrap();
        writeln!(csv, "imperfection,rhs,{},{}", e.rhs.numer(), e.rhs.denom()).unwrap();
        metrics.push(("inequality_holds".into(), e.inequality_holds.to_string()));
    }
    Ok(RunOutput {
        config: resolved(
            "exact-oracle",
            spec,
            0,
            1,
            depth,
            &[
                ("big_n", big_n.to_string()),
                (
                    "imperfection",
                    imperfection_args
                        .map(|(n, np)| format!("{n} {np}"))
                        .unwrap_or_default(),
                ),
                ("k", k.to_string()),
            ],
        ),
        results_csv: csv,
        summary_csv: None,
        metrics,
    })
}
