use alloc::vec::Vec;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::linalg::{ComplexMatrix, HermitianMatrix};
use crate::spectrogram::Spectrogram;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn complex(rng: &mut ChaCha8Rng) -> Complex64 {
    Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
}

pub fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(rows, cols, |_, _| complex(rng))
}

pub fn random_hermitian(rng: &mut ChaCha8Rng, dim: usize) -> HermitianMatrix {
    let a = random_matrix(rng, dim, dim);
    let sum = ComplexMatrix::from_fn(dim, dim, |r, c| a[(r, c)] + a[(c, r)].conj());
    HermitianMatrix::new(sum).unwrap()
}

/// `X X^H + shift I` for a random square `X`.
pub fn random_pd(rng: &mut ChaCha8Rng, dim: usize, shift: f64) -> HermitianMatrix {
    let x = random_matrix(rng, dim, dim);
    let mut g = x.matmul(&x.conj_transpose()).unwrap();
    for k in 0..dim {
        g[(k, k)] += Complex64::new(shift, 0.0);
    }
    HermitianMatrix::new(g).unwrap()
}

pub fn random_spectrogram(rng: &mut ChaCha8Rng, channels: usize, bins: usize, frames: usize) -> Spectrogram {
    Spectrogram::from_fn(channels, bins, frames, |_, _, _| complex(rng))
}

pub fn positive(rng: &mut ChaCha8Rng, n: usize, lo: f64, hi: f64) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(lo..hi)).collect()
}
