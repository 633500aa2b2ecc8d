//! Helpers and property checks shared by the property and acceptance suites.
#![allow(dead_code)]

use qia_core::divergences::{mutual_information, petz_divergence, sandwiched_divergence};
use qia_core::exponents::{direct_exponent, linear_rates, strong_converse_exponent};
use qia_core::hyptest::random_symmetric_state;
use qia_core::linalg::{CMatrix, HermitianOperator};
use qia_core::random::{ginibre, random_bipartite_state, random_correlated_state, random_density_matrix, rng_from_seed};
use qia_core::rmi::{rmi, Minimization, OptimizerOpts, RmiVariant};
use qia_core::state::{BipartiteState, DensityMatrix};
use qia_core::symmetry::{all_permutations, g_f64, permute_operator, twirl, universal_state, PermutationAction};

pub type Check = std::result::Result<(), String>;

pub fn copy_state(p: f64) -> BipartiteState {
    BipartiteState::new(DensityMatrix::diagonal(&[p, 0.0, 0.0, 1.0 - p]).unwrap(), 2, 2).unwrap()
}

/// Smallest mutual information accepted for a "correlated" test state.
pub const MIN_CORRELATION: f64 = 0.05;

/// Two-qubit state from the correlated family, redrawn until I(A:B) ≥ MIN_CORRELATION.
pub fn correlated_qubits(seed: u64) -> BipartiteState {
    let mut rng = rng_from_seed(seed);
    loop {
        let rho = random_correlated_state(&mut rng, 2, 2);
        if mutual_information(&rho).unwrap() >= MIN_CORRELATION {
            return rho;
        }
    }
}

pub fn random_hermitian(seed: u64, d: usize) -> HermitianOperator {
    let mut rng = rng_from_seed(seed);
    let g = ginibre(&mut rng, d, d);
    HermitianOperator::new(&g + g.adjoint()).unwrap()
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Check {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn err(e: qia_core::Error) -> String {
    e.to_string()
}

pub const DIVERGENCE_ORDERS: [f64; 7] = [0.3, 0.5, 0.9, 1.0, 1.5, 2.0, 3.0];
pub const RMI_ORDERS: [f64; 7] = [0.55, 0.7, 0.9, 1.0, 1.2, 1.5, 2.0];

/// Divergences and doubly minimized RMIs are nondecreasing in the order.
pub fn alpha_monotonicity(seed: u64) -> Check {
    let mut rng = rng_from_seed(seed);
    let d = 2 + (seed % 3) as usize;
    let rho = random_density_matrix(&mut rng, d);
    let sigma = random_density_matrix(&mut rng, d);
    let mut prev = (f64::NEG_INFINITY, f64::NEG_INFINITY);
    for a in DIVERGENCE_ORDERS {
        let p = petz_divergence(&rho, sigma.op(), a).map_err(err)?;
        let s = sandwiched_divergence(&rho, sigma.op(), a).map_err(err)?;
        ensure(p >= prev.0 - 1e-10 && s >= prev.1 - 1e-10, || format!("divergence decreased at order {a}"))?;
        prev = (p, s);
    }
    let opts = OptimizerOpts { seed, ..OptimizerOpts::default() };
    let state = random_bipartite_state(&mut rng, 2, 2);
    let mut prev = (f64::NEG_INFINITY, f64::NEG_INFINITY);
    for a in RMI_ORDERS {
        let p = rmi(&state, a, RmiVariant::petz(Minimization::DownDown), &opts).map_err(err)?.value;
        let s = if a >= 1.0 {
            rmi(&state, a, RmiVariant::sandwiched(Minimization::DownDown), &opts).map_err(err)?.value
        } else {
            prev.1
        };
        ensure(p >= prev.0 - 1e-8 && s >= prev.1 - 1e-8, || format!("RMI decreased at order {a}: {p} {s} after {prev:?}"))?;
        prev = (p, s);
    }
    Ok(())
}

/// Direct curve nonincreasing and convex below I, strong-converse curve nondecreasing and convex above it.
pub fn curve_shape(seed: u64) -> Check {
    let rho = correlated_qubits(seed);
    let opts = OptimizerOpts { seed, ..OptimizerOpts::default() };
    let mi = mutual_information(&rho).map_err(err)?;
    let below = linear_rates(0.0, mi, 6).map_err(err)?;
    let above = linear_rates(mi, 2.0 * mi, 6).map_err(err)?;
    let direct: Vec<f64> = below.iter().map(|&r| direct_exponent(&rho, r, &opts).map(|p| p.exponent)).collect::<Result<_, _>>().map_err(err)?;
    let converse: Vec<f64> =
        above.iter().map(|&r| strong_converse_exponent(&rho, r, &opts).map(|p| p.exponent)).collect::<Result<_, _>>().map_err(err)?;
    for w in direct.windows(2) {
        ensure(w[1] <= w[0] + 1e-8, || format!("direct curve increased: {direct:?}"))?;
    }
    for w in converse.windows(2) {
        ensure(w[1] >= w[0] - 1e-8, || format!("strong-converse curve decreased: {converse:?}"))?;
    }
    for v in [&direct, &converse] {
        for w in v.windows(3) {
            ensure(w[0] + w[2] - 2.0 * w[1] >= -1e-8, || format!("curve not convex: {v:?}"))?;
        }
    }
    Ok(())
}

/// ψ(s) = s·φ′(s) − φ(s) with φ(s) = (s−1)·I_s and φ′ the forward difference on the grid is
/// nondecreasing; on a uniform grid this is equivalent to convexity of the samples.
pub fn psi_monotonicity(seed: u64) -> Check {
    let rho = correlated_qubits(seed);
    let opts = OptimizerOpts { seed, ..OptimizerOpts::default() };
    let grids: [(RmiVariant, Vec<f64>); 2] = [
        (RmiVariant::petz(Minimization::DownDown), (0..10).map(|k| 0.52 + 0.05 * k as f64).collect()),
        (RmiVariant::sandwiched(Minimization::DownDown), (0..10).map(|k| 1.1 + 0.3 * k as f64).collect()),
    ];
    for (variant, grid) in grids {
        let phi: Vec<f64> =
            grid.iter().map(|&s| rmi(&rho, s, variant, &opts).map(|r| (s - 1.0) * r.value)).collect::<Result<_, _>>().map_err(err)?;
        let psi: Vec<f64> = (0..grid.len() - 1)
            .map(|k| grid[k] * (phi[k + 1] - phi[k]) / (grid[k + 1] - grid[k]) - phi[k])
            .collect();
        for w in psi.windows(2) {
            ensure(w[1] >= w[0] - 1e-7, || format!("ψ decreased for {variant:?}: {psi:?}"))?;
        }
    }
    Ok(())
}

/// Twirling is idempotent, commutes with every permutation, and leaves invariant operators unchanged.
pub fn twirl_idempotence(seed: u64) -> Check {
    let n = 2 + (seed % 2) as usize;
    let d: usize = 2;
    let x = random_hermitian(seed, d.pow(n as u32));
    let once = twirl(&x, n, d).map_err(err)?;
    let twice = twirl(&once, n, d).map_err(err)?;
    ensure(once.frobenius_distance(&twice) < 1e-12, || "twirl not idempotent".into())?;
    ensure((once.trace() - x.trace()).abs() < 1e-10, || "twirl changed the trace".into())?;
    for perm in all_permutations(n) {
        let a = PermutationAction::new(d, perm).map_err(err)?;
        let moved = permute_operator(once.matrix(), &a).map_err(err)?;
        ensure((&moved - once.matrix()).norm() < 1e-12, || "twirled operator not permutation invariant".into())?;
    }
    Ok(())
}

/// Every permutation-invariant state is dominated by g(n,d)·ω^n.
pub fn universal_domination(seed: u64) -> Check {
    let mut rng = rng_from_seed(seed);
    let n = 1 + (seed % 3) as usize;
    let d = 2;
    let sigma = random_symmetric_state(&mut rng, n, d).map_err(err)?;
    let omega = universal_state(n, d).map_err(err)?;
    let gap = omega.state.op().scale(g_f64(n, d).map_err(err)?).sub(sigma.op());
    let low = gap.eig().map_err(err)?.lambda_min();
    ensure(low >= -1e-10, || format!("g·ω − σ has eigenvalue {low}"))
}

pub fn identity(d: usize) -> CMatrix {
    CMatrix::identity(d, d)
}
