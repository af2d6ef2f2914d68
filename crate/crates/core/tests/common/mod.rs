//! Seeded generators shared by the integration tests.
#![allow(dead_code)]

use num_complex::Complex64;
use qpt_core::channel::{chi_from_kraus, ChiMatrix, KrausSet};
use qpt_core::linalg::ComplexMatrix;
use qpt_core::projection::tp_normalize;
use qpt_core::state::{density_from_bloch, BlochVector, DensityMatrix};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn complex(rng: &mut impl Rng) -> Complex64 {
    Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
}

pub fn complex_matrix(rng: &mut impl Rng, n: usize) -> ComplexMatrix {
    ComplexMatrix::from_vec(n, n, (0..n * n).map(|_| complex(rng)).collect()).unwrap()
}

pub fn hermitian(rng: &mut impl Rng, n: usize) -> ComplexMatrix {
    complex_matrix(rng, n).hermitian_part()
}

/// Bloch vector uniform in the ball, or on the sphere when `pure`.
pub fn bloch(rng: &mut impl Rng, pure: bool) -> BlochVector {
    loop {
        let v: [f64; 3] = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
        let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        if n <= 1.0 && n > 1e-3 {
            let s = if pure { 1.0 / n } else { 1.0 };
            return BlochVector::from_array([v[0] * s, v[1] * s, v[2] * s]);
        }
    }
}

/// Mostly mixed states, one in five pure.
pub fn state(rng: &mut impl Rng) -> DensityMatrix {
    let pure = rng.gen_bool(0.2);
    density_from_bloch(bloch(rng, pure).clamped_to_ball()).unwrap()
}

/// Random Kraus set of 1–4 operators, normalized to be trace preserving.
pub fn cptp_kraus(rng: &mut impl Rng) -> KrausSet {
    let k = rng.gen_range(1..=4);
    let ops = (0..k).map(|_| complex_matrix(rng, 2)).collect();
    tp_normalize(&KrausSet::new(ops).unwrap()).unwrap()
}

pub fn cptp_chi(rng: &mut impl Rng) -> ChiMatrix {
    chi_from_kraus(&cptp_kraus(rng))
}
