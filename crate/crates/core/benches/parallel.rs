use std::hint::black_box;
use std::sync::Arc;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use sphere_poincare::eigensolver::gamma_numeric_sweep;
use sphere_poincare::flow::{gradient_flow_with, perturbed_normal};
use sphere_poincare::grid::{inner_product, Grid};
use sphere_poincare::sharp::gamma;
use sphere_poincare::spectral::{g_kappa, random_normalized};
use sphere_poincare::vsh::VshTable;
use sphere_poincare::{Execution, FOUR_PI};

const POLICIES: [(&str, Execution); 2] = [
    ("sequential", Execution::Sequential),
    ("parallel", Execution::Parallel),
];

fn transforms(c: &mut Criterion) {
    let band = 16;
    let grid = Arc::new(Grid::for_band(band));
    let table = VshTable::new(grid, band).unwrap();
    let coeffs = random_normalized(band, &mut ChaCha8Rng::seed_from_u64(1));
    let field = table.synthesize(&coeffs, Execution::Sequential);

    let mut g = c.benchmark_group("synthesize_band16");
    for (name, exec) in POLICIES {
        g.bench_function(name, |b| b.iter(|| table.synthesize(black_box(&coeffs), exec)));
    }
    g.finish();

    let mut g = c.benchmark_group("analyze_band16");
    for (name, exec) in POLICIES {
        g.bench_function(name, |b| b.iter(|| table.analyze(black_box(&field), exec).unwrap()));
    }
    g.finish();
}

fn tables(c: &mut Criterion) {
    let mut g = c.benchmark_group("vsh_table");
    for band in [8usize, 16] {
        let grid = Arc::new(Grid::for_band(band));
        for (name, exec) in POLICIES {
            g.bench_with_input(BenchmarkId::new(name, band), &band, |b, &band| {
                b.iter(|| VshTable::with_execution(grid.clone(), band, exec).unwrap())
            });
        }
    }
    g.finish();

    let grid = Arc::new(Grid::for_band(6));
    let table = VshTable::new(grid, 6).unwrap();
    let fields: Vec<_> = (0..table.modes.len()).map(|k| table.field(k)).collect();
    let mut g = c.benchmark_group("gram_band6");
    g.sample_size(20);
    for (name, exec) in POLICIES {
        g.bench_function(name, |b| {
            b.iter(|| {
                exec.map_range(fields.len(), |a| {
                    fields
                        .iter()
                        .map(|f| inner_product(&fields[a], f).unwrap())
                        .sum::<f64>()
                })
            })
        });
    }
    g.finish();
}

fn batches(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let sets: Vec<_> = (0..2000).map(|_| random_normalized(6, &mut rng)).collect();
    let mut g = c.benchmark_group("inequality_fuzz_2000x6");
    for (name, exec) in POLICIES {
        g.bench_function(name, |b| {
            b.iter(|| {
                let floor = FOUR_PI * gamma(1.5).unwrap();
                exec.map_slice(&sets, |s| g_kappa(s, 1.5) - floor)
                    .into_iter()
                    .fold(f64::INFINITY, f64::min)
            })
        });
    }
    g.finish();

    let kappas: Vec<f64> = (0..4000).map(|k| -20.0 + 0.01 * k as f64).collect();
    let mut g = c.benchmark_group("gamma_sweep_4000");
    for (name, exec) in POLICIES {
        g.bench_function(name, |b| b.iter(|| gamma_numeric_sweep(black_box(&kappas), 20, exec)));
    }
    g.finish();
}

fn flow(c: &mut Criterion) {
    let grid = Arc::new(Grid::for_band(12));
    let u0 = perturbed_normal(grid, 0.05).unwrap();
    let mut g = c.benchmark_group("flow_20_steps_band12");
    g.sample_size(10);
    for (name, exec) in POLICIES {
        g.bench_function(name, |b| {
            b.iter(|| gradient_flow_with(&u0, -1.0, 0.005, 20, 12, exec).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, transforms, tables, batches, flow);
criterion_main!(benches);
