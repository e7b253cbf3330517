use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use ddstab::ewald::{maxwell_lambda_pm, symbol_range_scan, EwaldParams, LambdaPmMethod};
use ddstab::kernels::{builtin, BuiltinKernel};
use ddstab::lattice::{build_domain, FiniteSectionOperator, GridConvention, Shape, DEFAULT_DENSE_LIMIT};
use ddstab::spectra::{numerical_range, EigOptions};
use ddstab::{Complex64, Par};

fn policies() -> Vec<(&'static str, Par)> {
    let mut v = vec![("sequential", Par::Sequential)];
    #[cfg(feature = "parallel")]
    v.push(("rayon", Par::Rayon));
    v
}

fn symbol_scan(c: &mut Criterion) {
    let mut g = c.benchmark_group("symbol_scan");
    g.sample_size(10);
    let ex3 = builtin(BuiltinKernel::Ex3).unwrap();
    let mx3 = builtin(BuiltinKernel::Maxwell(3)).unwrap();
    for (name, par) in policies() {
        g.bench_with_input(BenchmarkId::new("ex3_201x201", name), &par, |b, &par| {
            b.iter(|| symbol_range_scan(&ex3, EwaldParams::default_for(2), black_box(201), par).unwrap())
        });
        g.bench_with_input(BenchmarkId::new("maxwell3_21^3", name), &par, |b, &par| {
            b.iter(|| symbol_range_scan(&mx3, EwaldParams::default_for(3), black_box(21), par).unwrap())
        });
    }
    g.finish();
}

fn cube_partial_sum(c: &mut Criterion) {
    let mut g = c.benchmark_group("cube_partial_sum");
    g.sample_size(10);
    for (name, par) in policies() {
        g.bench_with_input(BenchmarkId::new("maxwell3_M40", name), &par, |b, &par| {
            b.iter(|| maxwell_lambda_pm(3, LambdaPmMethod::CubePartial(black_box(40)), par).unwrap())
        });
    }
    g.finish();
}

fn assembly_and_matvec(c: &mut Criterion) {
    let mut g = c.benchmark_group("finite_section");
    g.sample_size(10);
    let k = BuiltinKernel::Maxwell(3).build().unwrap();
    let dom = build_domain(3, 10, &Shape::unit_box(3), GridConvention::VertexClosed).unwrap();
    let rows = dom.len() * 3;
    let u: Vec<Complex64> = (0..rows).map(|i| Complex64::new((i as f64).sin(), (i as f64).cos())).collect();
    for (name, par) in policies() {
        g.bench_with_input(BenchmarkId::new("dense_assembly_maxwell3_N10", name), &par, |b, &par| {
            b.iter(|| FiniteSectionOperator::dense(&k, &dom, DEFAULT_DENSE_LIMIT, par).unwrap())
        });
        g.bench_with_input(BenchmarkId::new("fft_setup_maxwell3_N10", name), &par, |b, &par| {
            b.iter(|| FiniteSectionOperator::fft(&k, &dom, par).unwrap())
        });
        let op = FiniteSectionOperator::fft(&k, &dom, par).unwrap();
        g.bench_with_input(BenchmarkId::new("fft_matvec_maxwell3_N10", name), &par, |b, _| {
            b.iter(|| op.matvec(black_box(&u)).unwrap())
        });
    }
    g.finish();
}

fn numerical_range_sweep(c: &mut Criterion) {
    let mut g = c.benchmark_group("numerical_range");
    g.sample_size(10);
    let k = BuiltinKernel::Ex4.build().unwrap();
    let dom = build_domain(2, 16, &Shape::unit_box(2), GridConvention::VertexClosed).unwrap();
    for (name, par) in policies() {
        let op = FiniteSectionOperator::fft(&k, &dom, par).unwrap();
        g.bench_with_input(BenchmarkId::new("ex4_N16_32_angles", name), &par, |b, &par| {
            b.iter(|| numerical_range(&op, 32, EigOptions::default(), par).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, symbol_scan, cube_partial_sum, assembly_and_matvec, numerical_range_sweep);
criterion_main!(benches);
