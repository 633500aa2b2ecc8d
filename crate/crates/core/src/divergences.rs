//! Petz and sandwiched Rényi divergences, mutual information and its variance.
//!
//! Divergence values are `f64` that may be `+∞` but are never NaN.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{dominates_spec, orthogonal_spec, trace_product, CMatrix, HermitianOperator, Spectrum};
use crate::state::{BipartiteState, DensityMatrix};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DivergenceFamily {
    Petz,
    Sandwiched,
}

impl DivergenceFamily {
    pub fn name(self) -> &'static str {
        match self {
            DivergenceFamily::Petz => "petz",
            DivergenceFamily::Sandwiched => "sandwiched",
        }
    }
}

/// log Σ exp(x_i), ignoring `-∞` terms.
pub(crate) fn log_sum_exp(xs: impl IntoIterator<Item = f64>) -> f64 {
    let v: Vec<f64> = xs.into_iter().filter(|x| *x > f64::NEG_INFINITY).collect();
    if v.is_empty() {
        return f64::NEG_INFINITY;
    }
    let m = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    m + v.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// |⟨u_i|v_j⟩|² between support eigenvectors, with the index lists used.
fn overlaps(sr: &Spectrum, ss: &Spectrum) -> (Vec<usize>, Vec<usize>, Vec<Vec<f64>>) {
    let ir = sr.support_indices();
    let is = ss.support_indices();
    let w = sr.columns(&ir).adjoint() * ss.columns(&is);
    let table = (0..ir.len()).map(|a| (0..is.len()).map(|b| w[(a, b)].norm_sqr()).collect()).collect();
    (ir, is, table)
}

fn check_order(alpha: f64) -> Result<()> {
    if alpha.is_nan() || alpha < 0.0 {
        return Err(Error::InvalidInput(format!("Rényi order must be nonnegative, got {alpha}")));
    }
    Ok(())
}

fn check_dims(rho: &DensityMatrix, sigma: &HermitianOperator) -> Result<()> {
    if rho.dim() != sigma.dim() {
        return Err(Error::DimensionMismatch(format!("{} vs {}", rho.dim(), sigma.dim())));
    }
    Ok(())
}

/// True when the divergence of order `alpha` is finite.
pub(crate) fn finite_support(sr: &Spectrum, ss: &Spectrum, alpha: f64) -> bool {
    (alpha < 1.0 && !orthogonal_spec(sr, ss)) || dominates_spec(sr, ss)
}

/// Relative entropy tr[ρ(log ρ − log σ)] from spectra.
pub(crate) fn relative_entropy_spec(sr: &Spectrum, ss: &Spectrum) -> f64 {
    if !dominates_spec(sr, ss) {
        return f64::INFINITY;
    }
    let (ir, is, w) = overlaps(sr, ss);
    let mut d = 0.0;
    for (a, &i) in ir.iter().enumerate() {
        let r = sr.values[i];
        d += r * r.ln();
        for (b, &j) in is.iter().enumerate() {
            d -= r * w[a][b] * ss.values[j].ln();
        }
    }
    d
}

/// log tr[ρ^α σ^{1−α}] from spectra, on supports.
pub(crate) fn petz_log_q_spec(sr: &Spectrum, ss: &Spectrum, alpha: f64) -> f64 {
    let (ir, is, w) = overlaps(sr, ss);
    let mut terms = Vec::with_capacity(ir.len() * is.len());
    for (a, &i) in ir.iter().enumerate() {
        let lr = sr.values[i].ln();
        for (b, &j) in is.iter().enumerate() {
            if w[a][b] > 0.0 {
                terms.push(alpha * lr + (1.0 - alpha) * ss.values[j].ln() + w[a][b].ln());
            }
        }
    }
    log_sum_exp(terms)
}

pub(crate) fn petz_spec(sr: &Spectrum, ss: &Spectrum, alpha: f64) -> f64 {
    if alpha == 1.0 {
        return relative_entropy_spec(sr, ss);
    }
    if !finite_support(sr, ss, alpha) {
        return f64::INFINITY;
    }
    if alpha == 0.0 {
        let (_, is, w) = overlaps(sr, ss);
        let t: f64 = is.iter().enumerate().map(|(b, &j)| ss.values[j] * w.iter().map(|row| row[b]).sum::<f64>()).sum();
        return if t > 0.0 { -t.ln() } else { f64::INFINITY };
    }
    let lq = petz_log_q_spec(sr, ss, alpha);
    if lq == f64::NEG_INFINITY {
        return f64::INFINITY;
    }
    lq / (alpha - 1.0)
}

/// Petz Rényi divergence D_α(ρ‖σ) for α ∈ [0, ∞).
pub fn petz_divergence(rho: &DensityMatrix, sigma: &HermitianOperator, alpha: f64) -> Result<f64> {
    check_order(alpha)?;
    if alpha.is_infinite() {
        return Err(Error::InvalidInput("Petz divergence needs a finite order".into()));
    }
    check_dims(rho, sigma)?;
    let ss = sigma.eig()?;
    ss.check_psd()?;
    Ok(petz_spec(&rho.eig()?, &ss, alpha))
}

/// σ^γ ρ σ^γ with the power taken on the support of σ.
pub(crate) fn sandwich(rho: &CMatrix, ss: &Spectrum, gamma: f64) -> HermitianOperator {
    let p = ss.on_support(|x| x.powf(gamma));
    HermitianOperator::from_hermitian_unchecked(p.matrix() * rho * p.matrix())
}

/// log tr[X^α] with scaling by the largest eigenvalue.
pub(crate) fn log_trace_power(sx: &Spectrum, alpha: f64) -> f64 {
    let lmax = sx.lambda_max();
    if !(lmax > 0.0) {
        return f64::NEG_INFINITY;
    }
    let sum: f64 = sx.support_indices().iter().map(|&i| (sx.values[i] / lmax).powf(alpha)).sum();
    alpha * lmax.ln() + sum.ln()
}

pub(crate) fn sandwiched_spec(rho: &DensityMatrix, sr: &Spectrum, ss: &Spectrum, alpha: f64) -> Result<f64> {
    if alpha == 1.0 {
        return Ok(relative_entropy_spec(sr, ss));
    }
    if alpha.is_infinite() {
        if !dominates_spec(sr, ss) {
            return Ok(f64::INFINITY);
        }
        let x = sandwich(rho.matrix(), ss, -0.5);
        return Ok(x.eig()?.lambda_max().ln());
    }
    if !finite_support(sr, ss, alpha) {
        return Ok(f64::INFINITY);
    }
    let gamma = (1.0 - alpha) / (2.0 * alpha);
    let sx = sandwich(rho.matrix(), ss, gamma).eig()?;
    let lq = log_trace_power(&sx, alpha);
    if lq == f64::NEG_INFINITY {
        return Ok(f64::INFINITY);
    }
    Ok(lq / (alpha - 1.0))
}

/// Sandwiched Rényi divergence D̃_α(ρ‖σ) for α ∈ (0, ∞].
pub fn sandwiched_divergence(rho: &DensityMatrix, sigma: &HermitianOperator, alpha: f64) -> Result<f64> {
    check_order(alpha)?;
    if alpha == 0.0 {
        return Err(Error::InvalidInput("sandwiched divergence needs a positive order".into()));
    }
    check_dims(rho, sigma)?;
    let ss = sigma.eig()?;
    ss.check_psd()?;
    sandwiched_spec(rho, &rho.eig()?, &ss, alpha)
}

pub fn divergence(family: DivergenceFamily, rho: &DensityMatrix, sigma: &HermitianOperator, alpha: f64) -> Result<f64> {
    match family {
        DivergenceFamily::Petz => petz_divergence(rho, sigma, alpha),
        DivergenceFamily::Sandwiched => sandwiched_divergence(rho, sigma, alpha),
    }
}

/// Relative entropy D(ρ‖σ).
pub fn relative_entropy(rho: &DensityMatrix, sigma: &HermitianOperator) -> Result<f64> {
    petz_divergence(rho, sigma, 1.0)
}

/// Von Neumann entropy in nats.
pub fn von_neumann_entropy(rho: &DensityMatrix) -> Result<f64> {
    let s = rho.eig()?;
    Ok(s.support_indices().iter().map(|&i| -s.values[i] * s.values[i].ln()).sum())
}

/// I(A:B) = H(A) + H(B) − H(AB).
pub fn mutual_information(rho: &BipartiteState) -> Result<f64> {
    let mi = von_neumann_entropy(&rho.marginal_a())? + von_neumann_entropy(&rho.marginal_b())?
        - von_neumann_entropy(rho.state())?;
    Ok(mi.max(0.0))
}

/// tr[ρ(log ρ − log σ − D)²] with logs on supports; +∞ unless ρ ≪ σ.
pub fn relative_entropy_variance(rho: &DensityMatrix, sigma: &HermitianOperator) -> Result<f64> {
    check_dims(rho, sigma)?;
    let sr = rho.eig()?;
    let ss = sigma.eig()?;
    ss.check_psd()?;
    if !dominates_spec(&sr, &ss) {
        return Ok(f64::INFINITY);
    }
    let d = relative_entropy_spec(&sr, &ss);
    let l = sr.on_support(f64::ln).into_matrix() - ss.on_support(f64::ln).into_matrix();
    let n = rho.dim();
    let k = l - CMatrix::identity(n, n) * crate::linalg::c(d);
    let kk = &k * &k;
    Ok(trace_product(rho.matrix(), &kk).max(0.0))
}

/// Mutual information variance V(A:B).
pub fn mi_variance(rho: &BipartiteState) -> Result<f64> {
    relative_entropy_variance(rho.state(), rho.marginal_product().op())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::c;

    fn diag(p: &[f64]) -> DensityMatrix {
        DensityMatrix::diagonal(p).unwrap()
    }

    #[test]
    fn petz_examples() {
        let r = diag(&[0.5, 0.5]);
        let s = diag(&[0.25, 0.75]);
        let v = petz_divergence(&r, s.op(), 2.0).unwrap();
        assert!((v - 0.28768207245178085).abs() < 1e-14);
        assert_eq!(petz_divergence(&diag(&[1.0, 0.0]), diag(&[0.0, 1.0]).op(), 2.0).unwrap(), f64::INFINITY);
        assert_eq!(petz_divergence(&diag(&[1.0, 0.0]), diag(&[0.0, 1.0]).op(), 0.5).unwrap(), f64::INFINITY);
        for a in [0.0, 0.3, 1.0, 2.0, 7.0] {
            assert!(petz_divergence(&s, s.op(), a).unwrap().abs() < 1e-14);
        }
        assert!(petz_divergence(&r, s.op(), -0.1).is_err());
    }

    #[test]
    fn sandwiched_examples() {
        let v = sandwiched_divergence(&diag(&[0.5, 0.5]), diag(&[0.25, 0.75]).op(), 2.0).unwrap();
        assert!((v - 0.28768207245178085).abs() < 1e-14);
        let v = sandwiched_divergence(&diag(&[0.75, 0.25]), diag(&[0.5, 0.5]).op(), f64::INFINITY).unwrap();
        assert!((v - 0.4054651081081644).abs() < 1e-14);
    }

    #[test]
    fn order_zero_and_partial_support() {
        // −log tr[Π_ρ σ] with Π_ρ = diag(1,0) and σ = diag(0.2,0.8)
        let v = petz_divergence(&diag(&[1.0, 0.0]), diag(&[0.2, 0.8]).op(), 0.0).unwrap();
        assert!((v + 0.2f64.ln()).abs() < 1e-14);
        // α<1 with ρ not dominated by σ stays finite: Σ p^α q^{1−α} = 0.5^0.5·1
        let v = petz_divergence(&diag(&[0.5, 0.5]), diag(&[1.0, 0.0]).op(), 0.5).unwrap();
        assert!((v - (-2.0 * 0.5f64.sqrt().ln())).abs() < 1e-14);
        assert_eq!(petz_divergence(&diag(&[0.5, 0.5]), diag(&[1.0, 0.0]).op(), 1.0).unwrap(), f64::INFINITY);
    }

    #[test]
    fn information_examples() {
        let copy = BipartiteState::new(diag(&[0.75, 0.0, 0.0, 0.25]), 2, 2).unwrap();
        assert!((mutual_information(&copy).unwrap() - 0.5623351446188083).abs() < 1e-14);
        assert!((mi_variance(&copy).unwrap() - 0.22630293015235908).abs() < 1e-13);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let bell = BipartiteState::new(DensityMatrix::pure(&[c(s), c(0.0), c(0.0), c(s)]).unwrap(), 2, 2).unwrap();
        assert!((mutual_information(&bell).unwrap() - 2.0 * 2f64.ln()).abs() < 1e-13);
        assert!(mi_variance(&bell).unwrap().abs() < 1e-12);
        let prod = BipartiteState::product(&diag(&[0.3, 0.7]), &diag(&[0.9, 0.1]));
        assert!(mutual_information(&prod).unwrap().abs() < 1e-14);
        assert!(mi_variance(&prod).unwrap().abs() < 1e-14);
    }
}
