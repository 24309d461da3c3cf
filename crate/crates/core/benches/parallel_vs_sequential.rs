use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use maskdp::audit::{violation_probability_mc, McConfig};
use maskdp::calibration::{table1_rows, Table1Grid};
use maskdp::mechanisms::{make_neighbor, DataMatrix, Setting};
use maskdp::par::Exec;

fn modes() -> Vec<(&'static str, Exec)> {
    let mut m = vec![("sequential", Exec::Sequential)];
    #[cfg(feature = "parallel")]
    m.push(("parallel", Exec::Parallel));
    m
}

fn table(c: &mut Criterion) {
    let grid = Table1Grid::default();
    let mut group = c.benchmark_group("table1");
    for (name, exec) in modes() {
        group.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter(|| table1_rows(&grid, exec).unwrap())
        });
    }
    group.finish();
}

fn monte_carlo(c: &mut Criterion) {
    let x = DataMatrix::new(4, 1, vec![0.0, 1.0, 1.0, 1.0]).unwrap();
    let pair = make_neighbor(&x, 0, &[1.0]).unwrap();
    let mut group = c.benchmark_group("violation_mc");
    group.sample_size(10);
    for (name, exec) in modes() {
        let cfg_a = McConfig::new(200_000, 1).with_exec(exec);
        group.bench_with_input(BenchmarkId::new("setting_a", name), &cfg_a, |b, cfg| {
            b.iter(|| violation_probability_mc(&pair, Setting::A, 2.0, 0.5, cfg).unwrap())
        });
        let cfg_b = McConfig::new(16, 1)
            .with_inner_samples(5_000)
            .with_exec(exec);
        group.bench_with_input(BenchmarkId::new("setting_b", name), &cfg_b, |b, cfg| {
            b.iter(|| violation_probability_mc(&pair, Setting::B, 2.0, 0.5, cfg).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, table, monte_carlo);
criterion_main!(benches);
