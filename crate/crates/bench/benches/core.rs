use criterion::{criterion_group, criterion_main, Criterion};

use bratteli::census;
use bratteli::oracle;
use bratteli::ordering::{self, Extreme};
use bratteli::vershik;
use bratteli::wrightfisher::{self, AlleleState};
use bratteli::BratteliDiagram;

fn all_ones(m: impl Fn(usize) -> usize, depth: usize) -> BratteliDiagram {
    let sizes: Vec<usize> = (0..=depth).map(|n| if n == 0 { 1 } else { m(n) }).collect();
    BratteliDiagram::all_ones(&sizes).unwrap()
}

fn bench_sample_order(c: &mut Criterion) {
    let d = all_ones(|_| 16, 20);
    c.bench_function("sample_order 16x20", |b| {
        let mut seed = 0u64;
        b.iter(|| {
            seed += 1;
            ordering::sample_order(&d, seed, d.depth())
        })
    });
}

fn bench_successor_orbit(c: &mut Criterion) {
    let d = all_ones(|_| 3, 6);
    let order = ordering::sample_order(&d, 5, d.depth());
    c.bench_function("successor orbit 3x6", |b| {
        b.iter(|| {
            let mut cur = ordering::extreme_path(&d, &order, 6, 0, Extreme::Min);
            let mut count = 0u64;
            loop {
                let step = vershik::successor(&d, &order, &cur);
                match step.path() {
                    Some(next) => cur = next.clone(),
                    None => break,
                }
                count += 1;
            }
            count
        })
    });
}

fn bench_eulerian_trails(c: &mut Criterion) {
    let inst = oracle::extremal_instance(6);
    let graph = inst.trail_graph();
    c.bench_function("eulerian trails n=6", |b| {
        b.iter(|| oracle::count_eulerian_trails(&graph).unwrap())
    });
}

fn bench_wf_trial(c: &mut Criterion) {
    let d = all_ones(|_| 5, 25);
    c.bench_function("wf trial 5x25", |b| {
        let mut seed = 0u64;
        b.iter(|| {
            seed += 1;
            wrightfisher::run_trial(&d, 1, &[0, 1], seed, d.depth())
        })
    });
}

fn bench_census_trial(c: &mut Criterion) {
    let d = all_ones(|n| (n + 2) * (n + 2), 40);
    c.bench_function("census trial square depth 40", |b| {
        let mut seed = 0u64;
        b.iter(|| {
            seed += 1;
            census::estimate_j(&d, 1, &[40], 1, seed)
        })
    });
}

fn bench_propagate(c: &mut Criterion) {
    let d = all_ones(|n| (n + 2) * (n + 2) * (n + 2), 30);
    let init = AlleleState::indicator(1, d.level_size(1), &[0, 5, 9]);
    c.bench_function("propagate cube depth 30", |b| {
        let mut seed = 0u64;
        b.iter(|| {
            seed += 1;
            wrightfisher::propagate(&d, seed, &init, 30)
        })
    });
}

criterion_group!(
    benches,
    bench_sample_order,
    bench_successor_orbit,
    bench_eulerian_trails,
    bench_wf_trial,
    bench_census_trial,
    bench_propagate,
);
criterion_main!(benches);
