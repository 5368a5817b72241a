//! Seeded randomness for fixtures and property sweeps.
//!
//! The stream is fully specified so fixtures can be regenerated in any
//! language:
//!
//! * generator: xoshiro256++, state filled from the 64-bit seed by SplitMix64;
//! * uniform `f64` in `[0, 1)`: `(next_u64() >> 11) * 2^-53`;
//! * standard normal: Box–Muller, `sqrt(-2 ln(1 - u1)) * cos(2π u2)`, two
//!   uniforms per draw, sine branch discarded;
//! * complex normal: real part then imaginary part, each `N(0, 1/2)`;
//! * matrices are filled row-major.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand_xoshiro::rand_core::{RngCore, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;
use std::f64::consts::{FRAC_1_SQRT_2, TAU};

use crate::linalg::{self, ComplexMatrix};

#[derive(Debug, Clone)]
pub struct FixtureRng {
    inner: Xoshiro256PlusPlus,
}

impl FixtureRng {
    pub fn new(seed: u64) -> Self {
        Self {
            inner: Xoshiro256PlusPlus::seed_from_u64(seed),
        }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn uniform_range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }

    /// Uniform integer in `0..n`.
    pub fn below(&mut self, n: usize) -> usize {
        assert!(n > 0, "empty range");
        ((self.uniform() * n as f64) as usize).min(n - 1)
    }

    /// Uniform integer in `lo..=hi`.
    pub fn between(&mut self, lo: usize, hi: usize) -> usize {
        lo + self.below(hi - lo + 1)
    }

    pub fn normal(&mut self) -> f64 {
        let u1 = self.uniform();
        let u2 = self.uniform();
        (-2.0 * (1.0 - u1).ln()).sqrt() * (TAU * u2).cos()
    }

    pub fn complex_normal(&mut self) -> Complex64 {
        let re = self.normal() * FRAC_1_SQRT_2;
        let im = self.normal() * FRAC_1_SQRT_2;
        Complex64::new(re, im)
    }

    /// Fisher–Yates shuffle driven by [`below`](Self::below).
    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.below(i + 1);
            items.swap(i, j);
        }
    }

    /// Complex Ginibre matrix.
    pub fn ginibre(&mut self, n: usize) -> ComplexMatrix {
        let entries: Vec<Complex64> = (0..n * n).map(|_| self.complex_normal()).collect();
        DMatrix::from_row_slice(n, n, &entries)
    }

    /// Haar-distributed unitary: QR of a Ginibre matrix with the phases of
    /// `R`'s diagonal moved into `Q`, which makes the factorization unique.
    pub fn haar_unitary(&mut self, n: usize) -> ComplexMatrix {
        let qr = self.ginibre(n).qr();
        let (mut q, r) = qr.unpack();
        for k in 0..n {
            let d = r[(k, k)];
            let phase = if d.norm() > 0.0 {
                d / d.norm()
            } else {
                Complex64::new(1.0, 0.0)
            };
            for z in q.column_mut(k).iter_mut() {
                *z *= phase;
            }
        }
        q
    }

    pub fn hermitian(&mut self, n: usize) -> ComplexMatrix {
        let g = self.ginibre(n);
        (&g + g.adjoint()).scale(0.5)
    }

    /// Full-rank mixed state `G G† / Tr[G G†]`.
    pub fn density_matrix(&mut self, n: usize) -> ComplexMatrix {
        let g = self.ginibre(n);
        let m = &g * g.adjoint();
        let t = linalg::trace(&m).re;
        m.unscale(t)
    }

    /// Normalized state vector.
    pub fn pure_state(&mut self, n: usize) -> Vec<Complex64> {
        let v: Vec<Complex64> = (0..n).map(|_| self.complex_normal()).collect();
        let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        v.into_iter().map(|z| z / norm).collect()
    }
}
