//! Seeded random states and unitaries.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::linalg::{c, CMatrix, HermitianOperator};
use crate::state::{BipartiteState, DensityMatrix};

pub type StdRng = ChaCha8Rng;

pub fn rng_from_seed(seed: u64) -> StdRng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn complex_normal<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

pub fn ginibre<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| complex_normal(rng))
}

/// Haar unitary: QR of a Ginibre matrix with the phases of R's diagonal removed.
pub fn haar_unitary<R: Rng + ?Sized>(rng: &mut R, d: usize) -> CMatrix {
    let qr = ginibre(rng, d, d).qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..d {
        let z = r[(j, j)];
        let phase = if z.norm() > 0.0 { z / c(z.norm()) } else { c(1.0) };
        for i in 0..d {
            q[(i, j)] *= phase;
        }
    }
    q
}

/// Full-support state with squared-Ginibre spectrum in a Haar-random basis.
pub fn random_density_matrix<R: Rng + ?Sized>(rng: &mut R, d: usize) -> DensityMatrix {
    let w: Vec<f64> = (0..d).map(|_| complex_normal(rng).norm_sqr() + 1e-3).collect();
    let s: f64 = w.iter().sum();
    let diag = HermitianOperator::from_real_diagonal(&w.iter().map(|x| x / s).collect::<Vec<_>>());
    let u = haar_unitary(rng, d);
    DensityMatrix::normalized(&diag.conjugate(&u)).expect("positive trace")
}

/// Hilbert–Schmidt random state of rank at most `rank`.
pub fn random_mixed_state<R: Rng + ?Sized>(rng: &mut R, d: usize, rank: usize) -> DensityMatrix {
    let g = ginibre(rng, d, rank.max(1));
    let op = HermitianOperator::new(&g * g.adjoint()).expect("finite");
    DensityMatrix::normalized(&op).expect("positive trace")
}

pub fn random_pure_state<R: Rng + ?Sized>(rng: &mut R, d: usize) -> DensityMatrix {
    random_mixed_state(rng, d, 1)
}

/// Random full-rank bipartite state.
pub fn random_bipartite_state<R: Rng + ?Sized>(rng: &mut R, d_a: usize, d_b: usize) -> BipartiteState {
    let rho = random_mixed_state(rng, d_a * d_b, d_a * d_b);
    BipartiteState::new(rho, d_a, d_b).expect("dimensions match")
}

/// Random bipartite state with substantial correlation: a random pure state mixed with a full-rank state.
pub fn random_correlated_state<R: Rng + ?Sized>(rng: &mut R, d_a: usize, d_b: usize) -> BipartiteState {
    let d = d_a * d_b;
    let pure = random_pure_state(rng, d);
    let noise = random_mixed_state(rng, d, d);
    let t = 0.2 + 0.3 * rng.random::<f64>();
    BipartiteState::new(pure.mix(&noise, t), d_a, d_b).expect("dimensions match")
}

pub fn random_probability_vector<R: Rng + ?Sized>(rng: &mut R, k: usize) -> Vec<f64> {
    let w: Vec<f64> = (0..k).map(|_| -(1.0 - rng.random::<f64>()).ln() + 1e-3).collect();
    let s: f64 = w.iter().sum();
    w.into_iter().map(|x| x / s).collect()
}
