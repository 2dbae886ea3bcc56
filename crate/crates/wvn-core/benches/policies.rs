use std::f64::consts::PI;
use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

use wvn_core::hs::{HsMesh, HsQuadrature, DEFAULT_ORDER};
use wvn_core::lap::{lap_scan, LapConfig, WeightKind};
use wvn_core::linalg::HermitianEigen;
use wvn_core::smooth::Bracket;
use wvn_core::thresholds::{energy_set_oracle, OracleConfig};
use wvn_core::{Boundary, ExecPolicy, ModelSpec};

const POLICIES: [(&str, ExecPolicy); 2] = [("sequential", ExecPolicy::Sequential), ("parallel", ExecPolicy::Parallel)];

fn oracle(c: &mut Criterion) {
    let mut g = c.benchmark_group("oracle_d2_grid256");
    g.sample_size(10);
    let cfg = OracleConfig::new(256);
    for (name, p) in POLICIES {
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| energy_set_oracle(2, black_box(PI / 3.0), &cfg, p).unwrap())
        });
    }
    g.finish();
}

fn hs_apply(c: &mut Criterion) {
    let mut g = c.benchmark_group("hs_apply_32x32");
    g.sample_size(10);
    let n = 32;
    let a = DMatrix::from_fn(n, n, |i, j| {
        let x = ((i * 31 + j * 17) % 13) as f64 / 13.0 - 0.5;
        C64::new(x, 0.0)
    });
    let a = (&a + a.adjoint()) * C64::new(0.25, 0.0);
    let eig = HermitianEigen::new(&a);
    let phi = Bracket { power: -2.0 };
    let q = HsQuadrature::new(&phi, DEFAULT_ORDER, HsMesh::default(), 3.0).unwrap();
    for (name, p) in POLICIES {
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| q.apply_spectral(black_box(&eig), 0, p).unwrap())
        });
    }
    g.finish();
}

fn scan(c: &mut Criterion) {
    let mut g = c.benchmark_group("lap_scan_d1");
    g.sample_size(10);
    let spec = ModelSpec::isotropic(0.5, PI / 3.0);
    let cfg = LapConfig {
        e_grid: vec![1.0, 2.0, 3.0],
        y_count: 6,
        s: 1.0,
        weight: WeightKind::Position,
        half_widths: vec![64, 128],
        boundary: Boundary::Dirichlet,
        deflate: false,
    };
    for (name, p) in POLICIES {
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| lap_scan(black_box(&spec), 1, &cfg, p).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, oracle, hs_apply, scan);
criterion_main!(benches);
