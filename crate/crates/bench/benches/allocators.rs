use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::hint::black_box;

use relay_bench::{reference_power, unit_fading};
use relay_core::fading::{
    causal_allocate_slot, noncausal_min_slots, run_relay, waterfill, Knowledge, RayleighGains,
    RelayBuffers, RelayOptions, Strategy,
};
use relay_core::span::{lp_oracle, optimal_schedule};
use relay_core::{Backlog, LinkCapacities};

fn bench_waterfill(c: &mut Criterion) {
    let mut group = c.benchmark_group("waterfill");
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    for n in [8usize, 64, 512] {
        let gains: Vec<f64> = (0..n).map(|_| rng.random_range(0.01..10.0)).collect();
        group.bench_with_input(BenchmarkId::from_parameter(n), &gains, |b, g| {
            b.iter(|| waterfill(black_box(g), 1.0).unwrap())
        });
    }
    group.finish();
}

fn bench_schedule(c: &mut Criterion) {
    let caps = LinkCapacities::new(2.0, 0.7).unwrap();
    let backlog = Backlog::new(40.0, 13.0).unwrap();
    c.bench_function("optimal_schedule", |b| {
        b.iter(|| optimal_schedule(black_box(caps), black_box(backlog)))
    });
    c.bench_function("lp_oracle", |b| {
        b.iter(|| lp_oracle(black_box(caps), black_box(backlog)).unwrap())
    });
}

fn bench_planners(c: &mut Criterion) {
    let fading = unit_fading(0);
    let cfg = reference_power(1e-4);
    c.bench_function("causal_allocate_slot", |b| {
        b.iter(|| causal_allocate_slot((0.8, 1.3), 1.36e8, 1e-4, &fading, &cfg, 1 << 20).unwrap())
    });
    c.bench_function("noncausal_min_slots", |b| {
        b.iter(|| {
            let mut gains = RayleighGains::new(&fading, ChaCha8Rng::seed_from_u64(3));
            noncausal_min_slots(&mut gains, 1.36e8, &cfg, 100_000).unwrap()
        })
    });
}

fn bench_relay(c: &mut Criterion) {
    let fading = unit_fading(0);
    let cfg = reference_power(1e-4);
    let mut group = c.benchmark_group("run_relay");
    for strategy in Strategy::ALL {
        for knowledge in Knowledge::ALL {
            let id = format!("{strategy}/{knowledge}");
            group.bench_function(id, |b| {
                b.iter(|| {
                    let mut gains = RayleighGains::new(&fading, ChaCha8Rng::seed_from_u64(11));
                    run_relay(
                        strategy,
                        RelayBuffers::new(6.8e7, 4.0e7).unwrap(),
                        &fading,
                        &cfg,
                        knowledge,
                        &mut gains,
                        RelayOptions::default(),
                    )
                    .unwrap()
                })
            });
        }
    }
    group.finish();
}

criterion_group!(benches, bench_waterfill, bench_schedule, bench_planners, bench_relay);
criterion_main!(benches);
