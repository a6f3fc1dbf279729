use std::hint::black_box;

use asai_core::charsums::{kloosterman_twisted, ramanujan_z_brute};
use asai_core::harness::{run_suite, SuiteSpec};
use asai_core::multident::r_sum_check;
use asai_core::solnsets::{check_bijection, AdmissibleR};
use asai_core::spectransform::{bessel_j, convolve, h_transform, Spectral, TestFunction};
use asai_core::{make_field, QuadInt};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use num_complex::Complex64;

fn arithmetic(c: &mut Criterion) {
    let k = make_field(5).unwrap();
    let mut g = c.benchmark_group("arithmetic");
    g.bench_function("residue_ring_norm_121", |b| b.iter(|| k.residue_ring(black_box(QuadInt::new(11, 0))).unwrap()));
    for n in [25i64, 50] {
        let adm = AdmissibleR::new(n, &k).unwrap();
        g.bench_with_input(BenchmarkId::new("bijection_c=7+3w", n), &adm, |b, adm| {
            b.iter(|| check_bijection(black_box(QuadInt::new(7, 3)), adm, &k).unwrap())
        });
    }
    g.bench_function("kloosterman_twisted_c=500", |b| b.iter(|| kloosterman_twisted(black_box(3), 7, 500, &k)));
    g.bench_function("ramanujan_brute_n=997", |b| b.iter(|| ramanujan_z_brute(black_box(997), 12)));
    g.bench_function("r_sum_n=9240", |b| b.iter(|| r_sum_check(black_box(9240)).unwrap()));
    g.finish();
}

fn analysis(c: &mut Criterion) {
    let mut g = c.benchmark_group("analysis");
    for x in [1.0, 10.0, 35.0] {
        g.bench_with_input(BenchmarkId::new("bessel_j_nu=0.3+4i", x), &x, |b, &x| b.iter(|| bessel_j(black_box(Complex64::new(0.3, 4.0)), x).unwrap()));
    }
    let v = TestFunction::bump(1.0, 3.0).unwrap();
    let w = TestFunction::bump(2.0, 5.0).unwrap();
    g.bench_function("h_transform_t=1.7", |b| b.iter(|| h_transform(&v, black_box(Spectral::Principal(1.7))).unwrap()));
    g.sample_size(10);
    g.bench_function("convolve_z=5", |b| b.iter(|| convolve(&v, &w, black_box(5.0)).unwrap()));
    g.finish();
}

fn suites(c: &mut Criterion) {
    let mut g = c.benchmark_group("suites");
    g.sample_size(10);
    for suite in ["zagier", "hecke", "dcard"] {
        let mut spec = SuiteSpec::new(suite);
        spec.field_d = vec![5];
        g.bench_function(suite, |b| b.iter(|| run_suite(black_box(&spec)).unwrap()));
    }
    g.finish();
}

criterion_group!(benches, arithmetic, analysis, suites);
criterion_main!(benches);
