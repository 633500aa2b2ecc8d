//! Acceptance suite: one PASS/FAIL line per criterion, with pinned tolerances and time budgets.
//! Runs as a plain binary so the report is printed even when every criterion passes.

mod common;

use std::time::{Duration, Instant};

use nalgebra::SymmetricEigen;
use num_complex::Complex64;
use proptest::prelude::any;
use proptest::test_runner::{Config, RngAlgorithm, TestCaseError, TestRng, TestRunner};

use qia_core::classical::{cc_equivalence_check, cc_state, classical_rmi, JointPmf};
use qia_core::divergences::{mi_variance, mutual_information};
use qia_core::exponents::{
    direct_exponent, moderate_rate, relative_rates, std_normal_cdf, strong_converse_exponent, thresholds,
};
use qia_core::hyptest::{
    build_direct_test, build_sc_test, min_type1_bounds, worst_case_type2_bounds, Bracket, BracketOpts, Hypothesis,
};
use qia_core::linalg::CMatrix;
use qia_core::random::{haar_unitary, random_bipartite_state, random_density_matrix, rng_from_seed};
use qia_core::rmi::{check_range, rmi, rmi_derivative, Minimization, OptimizerOpts, RmiVariant, Side};
use qia_core::state::{BipartiteState, DensityMatrix};

use common::{copy_state, correlated_qubits, Check};

const COPY_PROBABILITIES: [f64; 3] = [0.6, 0.75, 0.9];

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

fn copy_closed_form() -> Check {
    const VALUE_TOL: f64 = 1e-6;
    const SLOPE_TOL: f64 = 1e-4;
    const RATE_TOL: f64 = 1e-5;
    const BUDGET: Duration = Duration::from_secs(5);
    let opts = OptimizerOpts::default();
    let petz = RmiVariant::petz(Minimization::DownDown);
    for p in COPY_PROBABILITIES {
        let start = Instant::now();
        let rho = copy_state(p);
        let value = rmi(&rho, 0.5, petz, &opts).map_err(err)?.value;
        ensure((value + p.ln()).abs() <= VALUE_TOL, || format!("p={p}: value {value} vs {}", -p.ln()))?;
        let slope = rmi_derivative(&rho, 0.5, petz, Side::Right, &opts).map_err(err)?;
        ensure((slope + 4.0 * p.ln()).abs() <= SLOPE_TOL, || format!("p={p}: slope {slope} vs {}", -4.0 * p.ln()))?;
        let report = thresholds(&rho, &opts).map_err(err)?;
        ensure(report.r_half.abs() <= RATE_TOL, || format!("p={p}: R_half {}", report.r_half))?;
        let elapsed = start.elapsed();
        ensure(elapsed < BUDGET, || format!("p={p}: took {elapsed:?}"))?;
    }
    Ok(())
}

fn order_one_coincidence() -> Check {
    const TOL: f64 = 1e-7;
    let opts = OptimizerOpts::default();
    let mut rng = rng_from_seed(101);
    for k in 0..10 {
        let rho = random_bipartite_state(&mut rng, 2, 2);
        let mi = mutual_information(&rho).map_err(err)?;
        for variant in RmiVariant::all() {
            let v = rmi(&rho, 1.0, variant, &opts).map_err(err)?.value;
            ensure((v - mi).abs() <= TOL, || format!("state {k} {variant:?}: {v} vs {mi}"))?;
        }
    }
    Ok(())
}

fn exponent_signs() -> Check {
    const POSITIVE: f64 = 1e-6;
    const MARGIN: f64 = 1e-4;
    let opts = OptimizerOpts::default();
    for seed in 0..5u64 {
        let rho = correlated_qubits(200 + seed);
        let mi = mutual_information(&rho).map_err(err)?;
        for rate in relative_rates(mi, 20) {
            let d = direct_exponent(&rho, rate, &opts).map_err(err)?.exponent;
            let s = strong_converse_exponent(&rho, rate, &opts).map_err(err)?.exponent;
            ensure((d > POSITIVE) == (rate < mi - MARGIN), || format!("state {seed} R={rate}: direct {d}, I={mi}"))?;
            ensure(rate < mi || d == 0.0, || format!("state {seed} R={rate}: direct {d} above I"))?;
            ensure((s > POSITIVE) == (rate > mi + MARGIN), || format!("state {seed} R={rate}: converse {s}, I={mi}"))?;
            ensure(rate > mi || s == 0.0, || format!("state {seed} R={rate}: converse {s} below I"))?;
        }
    }
    Ok(())
}

fn classical_equivalence() -> Check {
    const TOL: f64 = 1e-8;
    let opts = OptimizerOpts::default();
    let bracket_opts = BracketOpts::default();
    let mut rng = rng_from_seed(303);
    for k in 0..5 {
        let p = JointPmf::random(&mut rng, 2, 2);
        let rho = cc_state(&p);
        for alpha in [0.6, 0.8, 1.0, 1.5, 2.0] {
            for variant in RmiVariant::all() {
                if check_range(variant, alpha, &opts).is_err() {
                    continue;
                }
                let c = classical_rmi(&p, alpha, variant, &opts).map_err(err)?.value;
                let q = rmi(&rho, alpha, variant, &opts).map_err(err)?.value;
                ensure((c - q).abs() <= TOL, || format!("pmf {k} α={alpha} {variant:?}: {c} vs {q}"))?;
            }
        }
        for mu in [0.1, 0.5] {
            let exact = cc_equivalence_check(&p, 1, mu, Hypothesis::Mar, &bracket_opts).map_err(err)?;
            let gap = (exact.quantum.lower - exact.classical.lower).abs().max((exact.quantum.upper - exact.classical.upper).abs());
            ensure(gap <= TOL && exact.quantum.width() <= TOL, || format!("pmf {k} μ={mu}: marginal case {exact:?}"))?;
            cc_equivalence_check(&p, 2, mu, Hypothesis::SymBoth, &bracket_opts).map_err(err)?;
        }
    }
    Ok(())
}

fn constructed_tests() -> Check {
    const SLACK: f64 = 1e-9;
    const N: usize = 2;
    let opts = BracketOpts::default();
    let states = [copy_state(0.75), correlated_qubits(500), correlated_qubits(501)];
    for (k, rho) in states.iter().enumerate() {
        for rate in [0.05, 0.2] {
            let target = (-(N as f64) * rate).exp();
            let mut tests = Vec::new();
            for s in [0.6, 0.8] {
                tests.push((format!("direct s={s}"), build_direct_test(rho, N, rate, s).map_err(err)?));
            }
            for s_hat in [1.5, 3.0] {
                tests.push((format!("converse ŝ={s_hat}"), build_sc_test(rho, N, rate, s_hat, None).map_err(err)?));
            }
            for (name, test) in tests {
                let (_, upper) = worst_case_type2_bounds(&test, Hypothesis::SymBoth, None, &opts).map_err(err)?;
                ensure(upper <= target * (1.0 + SLACK), || format!("state {k} R={rate} {name}: {upper} > {target}"))?;
            }
        }
    }
    Ok(())
}

fn ordering_chain() -> Check {
    const SLACK: f64 = 1e-9;
    let opts = BracketOpts::default();
    let mut rng = rng_from_seed(606);
    let mut states: Vec<(String, BipartiteState, bool)> =
        (0..3).map(|k| (format!("random {k}"), random_bipartite_state(&mut rng, 2, 2), false)).collect();
    for p in COPY_PROBABILITIES {
        states.push((format!("copy p={p}"), copy_state(p), true));
    }
    let chain = [Hypothesis::Mar, Hypothesis::Iid, Hypothesis::SymBoth, Hypothesis::Ind];
    for (name, rho, separable) in &states {
        for n in [1, 2] {
            for mu in [0.1, 0.5, 0.9] {
                let brackets: Vec<Bracket> =
                    chain.iter().map(|&h| min_type1_bounds(rho, n, mu, h, &opts)).collect::<Result<_, _>>().map_err(err)?;
                for (i, w) in brackets.windows(2).enumerate() {
                    ensure(w[0].lower <= w[1].upper + SLACK, || {
                        format!("{name} n={n} μ={mu}: {} {:?} above {} {:?}", chain[i], w[0], chain[i + 1], w[1])
                    })?;
                }
                let ind = brackets[3];
                ensure(ind.lower <= (1.0 - mu).max(0.0) + SLACK, || format!("{name} n={n} μ={mu}: ind {ind:?} above 1−μ"))?;
                if *separable {
                    let gap = (ind.lower - (1.0 - mu)).abs().max((ind.upper - (1.0 - mu)).abs());
                    ensure(gap <= SLACK, || format!("{name} n={n} μ={mu}: separable ind {ind:?}"))?;
                }
            }
        }
    }
    Ok(())
}

/// V = tr[ρ L²] − (tr[ρ L])² with L = log ρ − log(ρ_A⊗ρ_B) on the support of ρ, from raw eigendecompositions.
fn variance_by_hand(rho: &BipartiteState) -> f64 {
    let log_of = |m: &CMatrix| -> CMatrix {
        let e = SymmetricEigen::new(m.clone());
        let top = e.eigenvalues.iter().cloned().fold(0.0, f64::max);
        let logs = e.eigenvalues.map(|v| if v > 1e-12 * top { v.ln() } else { 0.0 });
        let diag = CMatrix::from_diagonal(&logs.map(|v| Complex64::new(v, 0.0)));
        &e.eigenvectors * diag * e.eigenvectors.adjoint()
    };
    let r = rho.state().matrix().clone();
    let support = {
        let e = SymmetricEigen::new(r.clone());
        let top = e.eigenvalues.iter().cloned().fold(0.0, f64::max);
        let mask = e.eigenvalues.map(|v| Complex64::new(if v > 1e-12 * top { 1.0 } else { 0.0 }, 0.0));
        &e.eigenvectors * CMatrix::from_diagonal(&mask) * e.eigenvectors.adjoint()
    };
    let l = log_of(&r) - &support * log_of(rho.marginal_product().matrix()) * &support;
    let first = (&r * &l).trace().re;
    let second = (&r * &l * &l).trace().re;
    second - first * first
}

fn variance_and_second_order() -> Check {
    const ZERO_TOL: f64 = 1e-10;
    const RATE_TOL: f64 = 1e-9;
    let mut rng = rng_from_seed(707);
    let mut zero_cases: Vec<(String, BipartiteState)> = Vec::new();
    for k in 0..3 {
        let a = random_density_matrix(&mut rng, 2);
        let b = random_density_matrix(&mut rng, 3);
        zero_cases.push((format!("product {k}"), BipartiteState::product(&a, &b)));
    }
    for d in [2usize, 3] {
        let ua = haar_unitary(&mut rng, d);
        let ub = haar_unitary(&mut rng, d);
        let mut psi = vec![Complex64::new(0.0, 0.0); d * d];
        for i in 0..d {
            psi[i * d + i] = Complex64::new(1.0 / (d as f64).sqrt(), 0.0);
        }
        let pure = DensityMatrix::pure(&psi).map_err(err)?.conjugate(&ua.kronecker(&ub));
        zero_cases.push((format!("maximally entangled d={d}"), BipartiteState::new(pure, d, d).map_err(err)?));
    }
    zero_cases.push(("flat copy".into(), copy_state(0.5)));
    for (name, rho) in &zero_cases {
        let v = mi_variance(rho).map_err(err)?;
        ensure(v.abs() <= ZERO_TOL, || format!("{name}: V = {v}"))?;
    }
    ensure(std_normal_cdf(0.0) == 0.5, || "Φ(0) ≠ 0.5".into())?;
    let mut states = vec![copy_state(0.75)];
    states.extend((0..3).map(|k| correlated_qubits(710 + k)));
    for rho in &states {
        let v = variance_by_hand(rho);
        let rate = moderate_rate(rho).map_err(err)?;
        ensure((rate - 1.0 / (2.0 * v)).abs() <= RATE_TOL * rate, || format!("moderate rate {rate} vs 1/(2·{v})"))?;
    }
    Ok(())
}

const PROPERTY_CASES: u32 = 40;

fn property_suites() -> Check {
    let suites: [(&str, fn(u64) -> Check); 5] = [
        ("order monotonicity", common::alpha_monotonicity),
        ("curve shape", common::curve_shape),
        ("ψ monotonicity", common::psi_monotonicity),
        ("twirl idempotence", common::twirl_idempotence),
        ("universal domination", common::universal_domination),
    ];
    for (name, check) in suites {
        let config = Config { cases: PROPERTY_CASES, failure_persistence: None, ..Config::default() };
        let mut runner = TestRunner::new_with_rng(config, TestRng::deterministic_rng(RngAlgorithm::ChaCha));
        runner
            .run(&any::<u64>(), |seed| check(seed).map_err(TestCaseError::fail))
            .map_err(|e| format!("{name}: {e}"))?;
    }
    Ok(())
}

fn main() {
    let criteria: [(&str, Duration, fn() -> Check); 8] = [
        ("copy-state closed form", Duration::from_secs(15), copy_closed_form),
        ("order-one coincidence", Duration::from_secs(60), order_one_coincidence),
        ("exponent sign structure", Duration::from_secs(600), exponent_signs),
        ("classical oracle equivalence", Duration::from_secs(600), classical_equivalence),
        ("constructed-test guarantees", Duration::from_secs(300), constructed_tests),
        ("ordering chain", Duration::from_secs(600), ordering_chain),
        ("variance and second order", Duration::from_secs(30), variance_and_second_order),
        ("property suites", Duration::from_secs(900), property_suites),
    ];
    let mut failures = 0;
    for (k, (name, budget, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = run();
        let elapsed = start.elapsed();
        let outcome = outcome.and_then(|_| {
            if elapsed <= *budget {
                Ok(())
            } else {
                Err(format!("took {elapsed:.1?}, budget {budget:?}"))
            }
        });
        match outcome {
            Ok(()) => println!("PASS {}: {name} ({elapsed:.2?})", k + 1),
            Err(e) => {
                failures += 1;
                println!("FAIL {}: {name} ({elapsed:.2?}): {e}", k + 1);
            }
        }
    }
    if failures > 0 {
        std::process::exit(1);
    }
}
