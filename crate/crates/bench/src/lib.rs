//! Shared fixtures for the kernel benchmarks.

use num_complex::Complex64 as C64;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use qprobe_core::linalg::{ComplexMatrix, DensityOperator, HermitianOperator};
use qprobe_core::model::CouplingBlocks;

pub fn random_hermitian(seed: u64, dim: usize) -> HermitianOperator {
    let mut rng = StdRng::seed_from_u64(seed);
    let m = ComplexMatrix::from_fn(dim, dim, |_, _| {
        C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
    });
    HermitianOperator::new(m.add(&m.adjoint()).scale(C64::new(0.5, 0.0))).unwrap()
}

pub fn random_blocks(seed: u64, dim: usize) -> (CouplingBlocks, DensityOperator) {
    let mut rng = StdRng::seed_from_u64(seed);
    let a0 = random_hermitian(seed ^ 1, dim);
    let a1 = random_hermitian(seed ^ 2, dim);
    let b = ComplexMatrix::from_fn(dim, dim, |_, _| {
        C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
    });
    let blocks = CouplingBlocks::new(a0, a1, b).unwrap();
    let g = ComplexMatrix::from_fn(dim, dim, |_, _| {
        C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
    });
    let gram = g.matmul(&g.adjoint());
    let tr = gram.trace().re;
    let rho = DensityOperator::new(gram.scale(C64::new(1.0 / tr, 0.0))).unwrap();
    (blocks, rho)
}
