//! Reference fixtures with closed-form or independently computed values.

use qia_core::classical::{classical_min_type1, JointPmf};
use qia_core::divergences::{mi_variance, mutual_information, petz_divergence, sandwiched_divergence};
use qia_core::exponents::{direct_exponent, forward_cutoff, std_normal_cdf, thresholds};
use qia_core::hyptest::{build_direct_test, neyman_pearson_min_type1, tilt, worst_case_type2_bounds, BracketOpts, Hypothesis};
use qia_core::linalg::{c, HermitianOperator};
use qia_core::rmi::{rmi, rmi_derivative, Minimization, OptimizerOpts, RmiVariant, Side};
use qia_core::state::{BipartiteState, DensityMatrix};
use qia_core::symmetry::{g_f64, sym_projector};

#[derive(Clone, Debug, PartialEq)]
pub struct FixtureOutcome {
    pub name: &'static str,
    pub value: Result<f64, String>,
    pub expected: f64,
    pub tol: f64,
    pub pass: bool,
}

type Eval = fn() -> qia_core::Result<f64>;

fn diag(p: &[f64]) -> DensityMatrix {
    DensityMatrix::diagonal(p).expect("valid fixture distribution")
}

fn copy(p: f64) -> BipartiteState {
    BipartiteState::new(diag(&[p, 0.0, 0.0, 1.0 - p]), 2, 2).expect("valid fixture state")
}

fn bell() -> BipartiteState {
    let (h, z) = (c(std::f64::consts::FRAC_1_SQRT_2), c(0.0));
    BipartiteState::new(DensityMatrix::pure(&[h, z, z, h]).expect("unit vector"), 2, 2).expect("valid fixture state")
}

const PETZ_DD: RmiVariant = RmiVariant::petz(Minimization::DownDown);

fn fixtures() -> Vec<(&'static str, Eval, f64, f64)> {
    let ln = f64::ln;
    vec![
        ("petz order 2 of (1/2,1/2) from (1/4,3/4)", || petz_divergence(&diag(&[0.5, 0.5]), diag(&[0.25, 0.75]).op(), 2.0), ln(4.0 / 3.0), 1e-12),
        ("sandwiched order 2 of (1/2,1/2) from (1/4,3/4)", || sandwiched_divergence(&diag(&[0.5, 0.5]), diag(&[0.25, 0.75]).op(), 2.0), ln(4.0 / 3.0), 1e-12),
        (
            "max-divergence of (3/4,1/4) from the maximally mixed qubit",
            || sandwiched_divergence(&diag(&[0.75, 0.25]), &HermitianOperator::identity(2).scale(0.5), f64::INFINITY),
            ln(1.5),
            1e-12,
        ),
        ("mutual information of a Bell pair", || mutual_information(&bell()), 2.0 * ln(2.0), 1e-10),
        ("mutual information of the copy state p=3/4", || mutual_information(&copy(0.75)), 0.5623351446188083, 1e-12),
        ("information variance of the copy state p=3/4", || mi_variance(&copy(0.75)), 0.22630293015235912, 1e-12),
        ("information variance of the flat copy state", || mi_variance(&copy(0.5)), 0.0, 1e-10),
        ("Petz order-1/2 information of the copy state p=3/4", || Ok(rmi(&copy(0.75), 0.5, PETZ_DD, &OptimizerOpts::default())?.value), -ln(0.75), 1e-8),
        (
            "right order derivative at 1/2 of the copy state p=3/4",
            || rmi_derivative(&copy(0.75), 0.5, PETZ_DD, Side::Right, &OptimizerOpts::default()),
            -4.0 * ln(0.75),
            1e-4,
        ),
        ("forward cutoff at slope -1/3 of the copy state p=3/4", || forward_cutoff(&copy(0.75), -1.0 / 3.0, &OptimizerOpts::default()), 0.5110260384983778, 1e-8),
        ("direct exponent at rate 0.1 of the copy state p=3/4", || Ok(direct_exponent(&copy(0.75), 0.1, &OptimizerOpts::default())?.exponent), 0.21020967726751435, 1e-8),
        ("curvature threshold of the copy state p=3/4", || Ok(thresholds(&copy(0.75), &OptimizerOpts::default())?.r_half), 0.0, 1e-6),
        ("dimension bound g(2,2)", || g_f64(2, 2), 10.0, 0.0),
        ("symmetric subspace dimension for n=2, d=2", || Ok(sym_projector(2, 2)?.trace()), 3.0, 1e-12),
        ("Neyman-Pearson type-I error of (3/4,1/4) against (1/2,1/2) at level 1/2", || Ok(neyman_pearson_min_type1(&diag(&[0.75, 0.25]), &diag(&[0.5, 0.5]), 0.5)?.type1), 0.25, 1e-14),
        ("tilted weight of (3/4,1/4) against (1/2,1/2) at order 2", || Ok(tilt(&[0.75, 0.25], &[0.5, 0.5], 2.0)?[0]), 0.9, 1e-14),
        ("independent-alternative error of the copy joint at level 0.3", || Ok(classical_min_type1(&JointPmf::copy(0.75)?, 1, 0.3, Hypothesis::Ind)?.upper), 0.7, 1e-12),
        ("exchangeable-alternative error of the copy joint, n=2, level 1/2", || Ok(classical_min_type1(&JointPmf::copy(0.75)?, 2, 0.5, Hypothesis::SymBoth)?.upper), 0.3125, 1e-9),
        ("standard normal CDF at 0", || Ok(std_normal_cdf(0.0)), 0.5, 0.0),
        ("standard normal CDF at 1", || Ok(std_normal_cdf(1.0)), 0.8413447460685429, 1e-15),
        (
            "relative worst-case type-II excess of the direct test, n=2, rate 0.05",
            || {
                let t = build_direct_test(&copy(0.75), 2, 0.05, 0.6)?;
                let (_, hi) = worst_case_type2_bounds(&t, Hypothesis::SymBoth, None, &BracketOpts::default())?;
                Ok((hi / (-0.1f64).exp() - 1.0).max(0.0))
            },
            0.0,
            1e-9,
        ),
    ]
}

pub fn run_suite() -> Vec<FixtureOutcome> {
    fixtures()
        .into_iter()
        .map(|(name, eval, expected, tol)| {
            let value = eval().map_err(|e| e.to_string());
            let pass = matches!(value, Ok(v) if (v - expected).abs() <= tol);
            FixtureOutcome { name, value, expected, tol, pass }
        })
        .collect()
}
