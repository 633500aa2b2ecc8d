//! Single-letter exponent formulas built from the doubly minimized Rényi mutual informations:
//! direct and strong-converse exponent curves, the rate parametrizations R(s), threshold rates,
//! β-cutoff rates, and the moderate-deviation and second-order quantities.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::divergences::{mi_variance, mutual_information};
use crate::error::{Error, Result};
use crate::rmi::{rmi, rmi_derivative, Minimization, OptimizerOpts, RmiVariant, Side};
use crate::state::BipartiteState;

/// Tolerance in the optimization variable of the golden-section searches.
pub const ORDER_TOL: f64 = 1e-8;
/// Points of the bracketing grid searched before the golden-section refinement.
pub const BRACKET_POINTS: usize = 11;
/// Points of the dense fallback grid used when the bracketing grid is not unimodal.
pub const FALLBACK_POINTS: usize = 2001;
/// Largest finite order sampled by the strong-converse search; the limit s → ∞ is added separately.
pub const MAX_FINITE_ORDER: f64 = 256.0;
/// Orders at which R(s) is sampled to estimate its limit.
pub const LIMIT_ORDERS: [f64; 3] = [16.0, 64.0, 256.0];
/// Step of the central-difference fallback for order derivatives.
pub const FALLBACK_STEP: f64 = 1e-3;
/// Variances at or below this are treated as zero.
pub const VARIANCE_FLOOR: f64 = 1e-12;
/// Tolerance used to decide R(s) = I(A:B) when locating the end of the linear part of a curve.
pub const RATE_MATCH_TOL: f64 = 1e-7;

/// Numerical noise tolerated before the bracketing grid counts as non-unimodal.
const UNIMODAL_SLACK: f64 = 1e-10;

pub const DIRECT_VARIANT: RmiVariant = RmiVariant::petz(Minimization::DownDown);
pub const CONVERSE_VARIANT: RmiVariant = RmiVariant::sandwiched(Minimization::DownDown);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Regime {
    /// Decay of the type-I error below the mutual information.
    Direct,
    /// Decay of the success probability above the mutual information.
    StrongConverse,
}

impl Regime {
    pub fn name(self) -> &'static str {
        match self {
            Regime::Direct => "direct",
            Regime::StrongConverse => "strong-converse",
        }
    }
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Regime {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "direct" => Ok(Regime::Direct),
            "strong-converse" | "sc" | "converse" => Ok(Regime::StrongConverse),
            other => Err(Error::InvalidInput(format!("unknown regime '{other}'"))),
        }
    }
}

/// One sample of an exponent curve. `argmax_s` is the optimal order, +∞ when the supremum is
/// approached as s → ∞.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExponentPoint {
    pub rate: f64,
    pub exponent: f64,
    pub argmax_s: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExponentCurve {
    pub points: Vec<ExponentPoint>,
    pub regime: Regime,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThresholdReport {
    #[serde(rename = "I")]
    pub mutual_information: f64,
    #[serde(rename = "V")]
    pub variance: f64,
    #[serde(rename = "R_half")]
    pub r_half: f64,
    /// +∞ when R(s) diverges.
    #[serde(rename = "R_inf", with = "crate::io::extended_f64")]
    pub r_inf: f64,
    pub stein: f64,
    /// Notes on quantities computed by a fallback path.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

/// R(s) together with the derivative it was computed from.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OrderRate {
    pub order: f64,
    pub rate: f64,
    pub derivative: f64,
    /// True when the derivative came from plain central differences.
    pub fallback: bool,
}

/// Range of slopes β where a cutoff rate equals the RMI of order 1/(1−β). Each end is given as
/// an interval bracketing it; both ends are exact when the variance is nonzero.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ValidityWindow {
    pub lower: (f64, f64),
    pub upper: (f64, f64),
}

fn check_rate(rate: f64) -> Result<()> {
    if !(rate >= 0.0) || !rate.is_finite() {
        return Err(Error::InvalidInput(format!("rate must be finite and nonnegative, got {rate}")));
    }
    Ok(())
}

/// Maximizes `f` on [a, b] assuming unimodality, after locating the best point of a coarse grid.
/// Falls back to a dense grid when the coarse samples are not unimodal. Returns (argmax, max).
fn maximize_on_interval(a: f64, b: f64, f: &dyn Fn(f64) -> Result<f64>) -> Result<(f64, f64)> {
    let grid: Vec<f64> = (0..BRACKET_POINTS).map(|k| a + (b - a) * k as f64 / (BRACKET_POINTS - 1) as f64).collect();
    let values = grid.iter().map(|&x| f(x)).collect::<Result<Vec<_>>>()?;
    let (mut k, mut best) = (0, values[0]);
    for (i, &v) in values.iter().enumerate() {
        if v > best {
            best = v;
            k = i;
        }
    }
    let unimodal = values[..=k].windows(2).all(|w| w[1] >= w[0] - UNIMODAL_SLACK)
        && values[k..].windows(2).all(|w| w[1] <= w[0] + UNIMODAL_SLACK);
    let (lo, hi, mut arg) = if unimodal {
        (grid[k.saturating_sub(1)], grid[(k + 1).min(BRACKET_POINTS - 1)], grid[k])
    } else {
        let step = (b - a) / (FALLBACK_POINTS - 1) as f64;
        let mut j_best = 0;
        for j in 0..FALLBACK_POINTS {
            let v = f(a + step * j as f64)?;
            if v > best || j == 0 {
                if v > best {
                    best = v;
                }
                j_best = j;
            }
        }
        let centre = a + step * j_best as f64;
        ((centre - step).max(a), (centre + step).min(b), centre)
    };
    let (x, v) = golden_section(lo, hi, f)?;
    if v > best {
        best = v;
        arg = x;
    }
    Ok((arg, best))
}

fn golden_section(mut a: f64, mut b: f64, f: &dyn Fn(f64) -> Result<f64>) -> Result<(f64, f64)> {
    let phi = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = b - phi * (b - a);
    let mut x2 = a + phi * (b - a);
    let mut f1 = f(x1)?;
    let mut f2 = f(x2)?;
    while b - a > ORDER_TOL {
        if f1 >= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - phi * (b - a);
            f1 = f(x1)?;
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + phi * (b - a);
            f2 = f(x2)?;
        }
    }
    Ok(if f1 >= f2 { (x1, f1) } else { (x2, f2) })
}

/// sup over s ∈ (1/2, 1) of (1−s)/s·(I_s − R), with I_s the doubly minimized Petz RMI.
/// Zero, attained at s = 1, when R ≥ I(A:B).
pub fn direct_exponent(rho: &BipartiteState, rate: f64, opts: &OptimizerOpts) -> Result<ExponentPoint> {
    check_rate(rate)?;
    let mi = mutual_information(rho)?;
    if rate >= mi {
        return Ok(ExponentPoint { rate, exponent: 0.0, argmax_s: 1.0 });
    }
    let objective = |s: f64| -> Result<f64> {
        if s >= 1.0 {
            return Ok(0.0);
        }
        Ok((1.0 - s) / s * (rmi(rho, s, DIRECT_VARIANT, opts)?.value - rate))
    };
    let (s, value) = maximize_on_interval(0.5, 1.0, &objective)?;
    Ok(ExponentPoint { rate, exponent: value.max(0.0), argmax_s: s })
}

/// sup over s ∈ (1, ∞) of (s−1)/s·(R − Ĩ_s), with Ĩ_s the doubly minimized sandwiched RMI.
/// Searched in b = (s−1)/s up to s = 256; the limit s → ∞ is compared separately.
/// Zero, attained at s = 1, when R ≤ I(A:B).
pub fn strong_converse_exponent(rho: &BipartiteState, rate: f64, opts: &OptimizerOpts) -> Result<ExponentPoint> {
    check_rate(rate)?;
    let mi = mutual_information(rho)?;
    if rate <= mi {
        return Ok(ExponentPoint { rate, exponent: 0.0, argmax_s: 1.0 });
    }
    let objective = |b: f64| -> Result<f64> {
        if b <= 0.0 {
            return Ok(0.0);
        }
        let s = 1.0 / (1.0 - b);
        Ok(b * (rate - rmi(rho, s, CONVERSE_VARIANT, opts)?.value))
    };
    let b_max = 1.0 - 1.0 / MAX_FINITE_ORDER;
    let (b, value) = maximize_on_interval(0.0, b_max, &objective)?;
    let limit = rate - rmi(rho, f64::INFINITY, CONVERSE_VARIANT, opts)?.value;
    let point = if limit > value {
        ExponentPoint { rate, exponent: limit, argmax_s: f64::INFINITY }
    } else {
        ExponentPoint { rate, exponent: value, argmax_s: 1.0 / (1.0 - b) }
    };
    Ok(ExponentPoint { exponent: point.exponent.max(0.0), ..point })
}

pub fn exponent(rho: &BipartiteState, rate: f64, regime: Regime, opts: &OptimizerOpts) -> Result<ExponentPoint> {
    match regime {
        Regime::Direct => direct_exponent(rho, rate, opts),
        Regime::StrongConverse => strong_converse_exponent(rho, rate, opts),
    }
}

/// Samples an exponent curve at the given rates, in parallel.
pub fn exponent_curve(rho: &BipartiteState, rates: &[f64], regime: Regime, opts: &OptimizerOpts) -> Result<ExponentCurve> {
    let points = rates.par_iter().map(|&r| exponent(rho, r, regime, opts)).collect::<Result<Vec<_>>>()?;
    Ok(ExponentCurve { points, regime })
}

/// `count` evenly spaced rates from `r_min` to `r_max` inclusive.
pub fn linear_rates(r_min: f64, r_max: f64, count: usize) -> Result<Vec<f64>> {
    if count == 0 || !(r_min <= r_max) || !r_min.is_finite() || !r_max.is_finite() {
        return Err(Error::InvalidInput(format!("bad rate range [{r_min}, {r_max}] with {count} points")));
    }
    if count == 1 {
        return Ok(vec![r_min]);
    }
    Ok((0..count).map(|k| r_min + (r_max - r_min) * k as f64 / (count - 1) as f64).collect())
}

/// Rates I·(0.05 + 0.1k) for k < count: half on each side of the mutual information when count = 20.
pub fn relative_rates(mutual_information: f64, count: usize) -> Vec<f64> {
    (0..count).map(|k| mutual_information * (0.05 + 0.1 * k as f64)).collect()
}

/// Order derivative of an RMI, falling back to central differences when the
/// envelope value and its finite-difference cross-check disagree.
fn order_derivative(rho: &BipartiteState, s: f64, variant: RmiVariant, side: Side, opts: &OptimizerOpts) -> Result<(f64, bool)> {
    match rmi_derivative(rho, s, variant, side, opts) {
        Ok(d) => Ok((d, false)),
        Err(Error::NotConverged { .. }) => {
            let h = FALLBACK_STEP;
            let (lo, hi) = match side {
                Side::Right => (s, s + h),
                Side::Left => (s - h, s),
                Side::Central => (s - h, s + h),
            };
            let d = (rmi(rho, hi, variant, opts)?.value - rmi(rho, lo, variant, opts)?.value) / (hi - lo);
            Ok((d, true))
        }
        Err(e) => Err(e),
    }
}

/// R(s) = I_s − s(1−s)·dI_s/ds for s ∈ (1/2, 1] in the direct regime and
/// R(s) = Ĩ_s + s(s−1)·dĨ_s/ds for s > 1 in the strong-converse regime.
pub fn rate_of_order(rho: &BipartiteState, s: f64, regime: Regime, opts: &OptimizerOpts) -> Result<OrderRate> {
    let (variant, ok) = match regime {
        Regime::Direct => (DIRECT_VARIANT, s > 0.5 && s <= 1.0),
        Regime::StrongConverse => (CONVERSE_VARIANT, s > 1.0 && s.is_finite()),
    };
    if !ok {
        return Err(Error::InvalidInput(format!("order {s} outside the {regime} range")));
    }
    let value = rmi(rho, s, variant, opts)?.value;
    let (derivative, fallback) = order_derivative(rho, s, variant, Side::Central, opts)?;
    let rate = match regime {
        Regime::Direct => value - s * (1.0 - s) * derivative,
        Regime::StrongConverse => value + s * (s - 1.0) * derivative,
    };
    Ok(OrderRate { order: s, rate, derivative, fallback })
}

/// The exponent attained at R(s): (1−s)²·dI_s/ds, resp. (s−1)²·dĨ_s/ds.
pub fn exponent_at_order(rate: &OrderRate) -> f64 {
    (rate.order - 1.0).powi(2) * rate.derivative
}

/// Mutual information, its variance, and the threshold rates of both exponent curves.
pub fn thresholds(rho: &BipartiteState, opts: &OptimizerOpts) -> Result<ThresholdReport> {
    let mi = mutual_information(rho)?;
    let variance = mi_variance(rho)?;
    let mut warnings = Vec::new();

    let half = rmi(rho, 0.5, DIRECT_VARIANT, opts)?.value;
    let (slope, fallback) = order_derivative(rho, 0.5, DIRECT_VARIANT, Side::Right, opts)?;
    if fallback {
        warnings.push("R_half: order derivative from central differences".to_string());
    }
    let r_half = half - 0.25 * slope;

    let mut samples = [0.0; 3];
    for (slot, &s) in samples.iter_mut().zip(&LIMIT_ORDERS) {
        let r = rate_of_order(rho, s, Regime::StrongConverse, opts)?;
        if r.fallback {
            warnings.push(format!("R({s}): order derivative from central differences"));
        }
        *slot = r.rate;
    }
    let r_inf = extrapolate_limit(samples);
    Ok(ThresholdReport { mutual_information: mi, variance, r_half, r_inf, stein: mi, warnings })
}

/// Limit of an increasing sequence sampled at geometrically spaced orders. Aitken's Δ² is used
/// when the increments shrink, otherwise the last sample; a jump above 1 nat reads as divergence.
fn extrapolate_limit([r0, r1, r2]: [f64; 3]) -> f64 {
    if r2 > r1 + 1.0 {
        return f64::INFINITY;
    }
    let (d1, d2) = (r1 - r0, r2 - r1);
    if d1 > 0.0 && d2 > 0.0 && d2 < d1 {
        r2 + d2 * d2 / (d1 - d2)
    } else {
        r2
    }
}

/// Forward β-cutoff rate for β ∈ (−1, 0): the Petz RMI of order 1/(1−β).
pub fn forward_cutoff(rho: &BipartiteState, beta: f64, opts: &OptimizerOpts) -> Result<f64> {
    if !(beta > -1.0 && beta < 0.0) {
        return Err(Error::InvalidInput(format!("forward cutoff needs β in (−1, 0), got {beta}")));
    }
    Ok(rmi(rho, 1.0 / (1.0 - beta), DIRECT_VARIANT, opts)?.value)
}

/// Reverse β-cutoff rate for β ∈ (0, 1): the sandwiched RMI of order 1/(1−β).
pub fn reverse_cutoff(rho: &BipartiteState, beta: f64, opts: &OptimizerOpts) -> Result<f64> {
    if !(beta > 0.0 && beta < 1.0) {
        return Err(Error::InvalidInput(format!("reverse cutoff needs β in (0, 1), got {beta}")));
    }
    Ok(rmi(rho, 1.0 / (1.0 - beta), CONVERSE_VARIANT, opts)?.value)
}

/// Slopes for which the cutoff formula holds, or None when the relevant RMIs coincide with the
/// mutual information and the curve has no strictly curved part. The end next to β = 0 is where
/// R(s) first reaches I(A:B); with nonzero variance that is s = 1, otherwise it is bracketed on a grid.
pub fn validity_window(rho: &BipartiteState, regime: Regime, opts: &OptimizerOpts) -> Result<Option<ValidityWindow>> {
    let mi = mutual_information(rho)?;
    let far = match regime {
        Regime::Direct => rmi(rho, 0.5, DIRECT_VARIANT, opts)?.value,
        Regime::StrongConverse => rmi(rho, f64::INFINITY, CONVERSE_VARIANT, opts)?.value,
    };
    if (far - mi).abs() <= RATE_MATCH_TOL {
        return Ok(None);
    }
    let beta = |s: f64| 1.0 - 1.0 / s;
    let near = if mi_variance(rho)? > VARIANCE_FLOOR {
        (0.0, 0.0)
    } else {
        let orders: Vec<f64> = match regime {
            Regime::Direct => (1..=BRACKET_POINTS).map(|k| 0.5 + 0.5 * k as f64 / BRACKET_POINTS as f64).collect(),
            Regime::StrongConverse => (0..BRACKET_POINTS).rev().map(|k| 1.0 + 1e-3 * 2f64.powi(k as i32)).collect(),
        };
        let mut prev = match regime {
            Regime::Direct => 0.5,
            Regime::StrongConverse => MAX_FINITE_ORDER,
        };
        let mut found = (beta(prev), 0.0);
        for &s in &orders {
            let r = rate_of_order(rho, s, regime, opts)?.rate;
            if (r - mi).abs() <= RATE_MATCH_TOL {
                found = (beta(prev).min(beta(s)), beta(prev).max(beta(s)));
                break;
            }
            prev = s;
        }
        found
    };
    Ok(Some(match regime {
        Regime::Direct => ValidityWindow { lower: (-1.0, -1.0), upper: near },
        Regime::StrongConverse => ValidityWindow { lower: near, upper: (1.0, 1.0) },
    }))
}

fn nondegenerate_variance(rho: &BipartiteState) -> Result<f64> {
    let v = mi_variance(rho)?;
    if v <= VARIANCE_FLOOR {
        return Err(Error::DegenerateVariance(v));
    }
    Ok(v)
}

/// Moderate-deviation rate 1/(2V).
pub fn moderate_rate(rho: &BipartiteState) -> Result<f64> {
    Ok(1.0 / (2.0 * nondegenerate_variance(rho)?))
}

/// Standard normal distribution function.
pub fn std_normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}

/// Limiting type-I error Φ(r/√V) at type-II rate I − r/√n.
pub fn second_order_type1(rho: &BipartiteState, r: f64) -> Result<f64> {
    if r.is_nan() {
        return Err(Error::InvalidInput("second-order offset is NaN".into()));
    }
    Ok(std_normal_cdf(r / nondegenerate_variance(rho)?.sqrt()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::state::DensityMatrix;

    fn copy_cc(p: f64) -> BipartiteState {
        BipartiteState::new(DensityMatrix::diagonal(&[p, 0.0, 0.0, 1.0 - p]).unwrap(), 2, 2).unwrap()
    }

    #[test]
    fn limit_extrapolation() {
        assert_eq!(extrapolate_limit([1.0, 1.5, 1.75]), 2.0);
        assert_eq!(extrapolate_limit([1.0, 1.0, 1.0]), 1.0);
        assert!(extrapolate_limit([1.0, 2.0, 3.5]).is_infinite());
    }

    #[test]
    fn golden_section_finds_quadratic_peak() {
        let (x, v) = maximize_on_interval(0.0, 1.0, &|x| Ok(-(x - 0.3141).powi(2))).unwrap();
        assert!((x - 0.3141).abs() < 1e-7 && v.abs() < 1e-14);
        let bumpy = |x: f64| Ok(if x < 0.05 { 1.0 - x } else { -(x - 0.7).powi(2) + 0.5 * (x > 0.5) as u8 as f64 });
        let (_, v) = maximize_on_interval(0.0, 1.0, &bumpy).unwrap();
        assert!(v >= 1.0 - 1e-12);
    }

    #[test]
    fn normal_cdf_reference_values() {
        let reference = [
            (-8.0, 6.22096057427178412e-16),
            (-3.0, 0.00134989803163009453),
            (-1.0, 0.158655253931457051),
            (0.0, 0.5),
            (0.5, 0.691462461274013104),
            (2.0, 0.977249868051820793),
            (5.0, 0.999999713348428121),
        ];
        for (x, v) in reference {
            assert!((std_normal_cdf(x) - v).abs() <= 1e-15, "{x}");
        }
        assert_eq!(std_normal_cdf(0.0), 0.5);
        assert_eq!(std_normal_cdf(f64::NEG_INFINITY), 0.0);
    }

    #[test]
    fn regime_names_round_trip() {
        for r in [Regime::Direct, Regime::StrongConverse] {
            assert_eq!(r.name().parse::<Regime>().unwrap(), r);
        }
        assert!("nope".parse::<Regime>().is_err());
    }

    #[test]
    fn copy_state_direct_exponent_matches_entropy_form() {
        let opts = OptimizerOpts::default();
        let p = 0.75f64;
        let point = direct_exponent(&copy_cc(p), 0.1, &opts).unwrap();
        let renyi = |a: f64| (a * p.ln() + (1.0 + ((1.0 - p) / p).powf(a)).ln()) / (1.0 - a);
        let mut best: f64 = 0.0;
        let mut k = 0;
        while k <= 50_000 {
            let s = 0.5 + 1e-5 * k as f64;
            if s < 1.0 && s > 0.5 {
                best = best.max((1.0 - s) / s * (renyi(s / (2.0 * s - 1.0)) - 0.1));
            }
            k += 1;
        }
        assert!((point.exponent - best).abs() < 1e-8, "{} vs {best}", point.exponent);
    }
}
