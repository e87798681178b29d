//! Hot-path benchmarks: eigendecomposition, joint evolution, nested-integral
//! terms, oscillation fits and spectra.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use num_complex::Complex64 as C64;

use qprobe_bench::{random_blocks, random_hermitian};
use qprobe_core::dynamics::dyson::dyson_term;
use qprobe_core::dynamics::{linspace, ProbeExperiment};
use qprobe_core::estimation::{fit_oscillation, fourier_spectrum, tau_series_from_values, Window};
use qprobe_core::model::{control_eigenbasis, ProbePureState};
use qprobe_core::spin::{build_spin_hamiltonian, random_geometry};

fn bench_eigendecomposition(c: &mut Criterion) {
    let mut group = c.benchmark_group("eig_hermitian");
    for dim in [8usize, 16, 32, 64] {
        group.bench_with_input(BenchmarkId::from_parameter(dim), &dim, |b, &dim| {
            let h = random_hermitian(dim as u64, dim);
            b.iter(|| {
                // Rebuild to defeat the cache; measures the solver itself.
                let fresh =
                    qprobe_core::linalg::HermitianOperator::new(h.matrix().clone()).unwrap();
                fresh.eigen().unwrap().values[0]
            });
        });
    }
    group.finish();
}

fn bench_transition_probability(c: &mut Criterion) {
    let (blocks, rho) = random_blocks(3, 16);
    let basis = control_eigenbasis(0.0, 0.0);
    let exp = ProbeExperiment {
        v_ps: blocks.assemble(&basis),
        rho_s: rho,
        theta: 0.0,
        phi: 0.0,
        preparation: ProbePureState::pi0(),
        measurement: ProbePureState::pi1(),
    };
    let cache = exp.evolution_cache(50.0).unwrap();
    c.bench_function("evolution_cache_build_dim16", |b| {
        b.iter(|| exp.evolution_cache(50.0).unwrap().dim_sys())
    });
    c.bench_function("probability_per_tau_dim16", |b| {
        let mut tau = 0.1;
        b.iter(|| {
            tau += 1e-4;
            cache.probability(tau).unwrap()
        })
    });
}

fn bench_dyson_term(c: &mut Criterion) {
    let (blocks, rho) = random_blocks(5, 4);
    let prep = ProbePureState::equator(0.4);
    let meas = ProbePureState::equator(1.1);
    let mut group = c.benchmark_group("dyson_term");
    for (x, y) in [(1u32, 1u32), (2, 2)] {
        group.bench_with_input(BenchmarkId::from_parameter(format!("{x}{y}")), &(x, y), |b, &(x, y)| {
            b.iter(|| dyson_term(&blocks, &rho, &prep, &meas, 60.0, 0.8, x, y).unwrap())
        });
    }
    group.finish();
}

fn bench_fit_and_spectrum(c: &mut Criterion) {
    let tau = 1.0;
    let lambdas = linspace(50.0, 60.0, 100);
    let values: Vec<f64> =
        lambdas.iter().map(|&l| 0.3 + 0.05 * (l * tau + 0.4).cos()).collect();
    c.bench_function("fit_oscillation_100pts", |b| {
        b.iter(|| fit_oscillation(&lambdas, &values, None, tau, None).unwrap().amplitude)
    });

    let n = 4096;
    let taus: Vec<f64> = (0..n).map(|k| k as f64 * 0.1).collect();
    let series: Vec<C64> =
        taus.iter().map(|&t| C64::from_polar(1.0, 3.7 * t) + C64::from_polar(0.4, -1.9 * t)).collect();
    let series = tau_series_from_values(&taus, &series, "bench").unwrap();
    c.bench_function("fourier_spectrum_4096", |b| {
        b.iter(|| fourier_spectrum(&series, Window::Rectangular).unwrap().resolution)
    });
}

fn bench_spin_hamiltonian(c: &mut Criterion) {
    let geom = random_geometry(7, 4, 0.02, 0.026, (1.0, 1.5), 100.0).unwrap();
    c.bench_function("build_spin_hamiltonian_4spins", |b| {
        b.iter(|| build_spin_hamiltonian(&geom).unwrap().dim())
    });
}

criterion_group!(
    benches,
    bench_eigendecomposition,
    bench_transition_probability,
    bench_dyson_term,
    bench_fit_and_spectrum,
    bench_spin_hamiltonian
);
criterion_main!(benches);
