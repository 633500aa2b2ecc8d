//! Density matrices and bipartite states.

use crate::error::{Error, Result};
use crate::linalg::{c, partial_trace, CMatrix, CVector, HermitianOperator, Spectrum, Subsystem, PSD_SLACK};

/// Unit-trace PSD operator. Eigenvalues in [-1e-10, 0) are kept as stored and read as zero.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    op: HermitianOperator,
}

pub const TRACE_TOL: f64 = 1e-10;

impl DensityMatrix {
    pub fn new(op: HermitianOperator) -> Result<Self> {
        let tr = op.trace();
        if (tr - 1.0).abs() > TRACE_TOL {
            return Err(Error::InvalidInput(format!("trace is {tr}, expected 1")));
        }
        op.eig()?.check_psd()?;
        Ok(Self { op })
    }

    pub fn from_matrix(m: CMatrix) -> Result<Self> {
        Self::new(HermitianOperator::new(m)?)
    }

    /// Normalizes a PSD operator by its trace.
    pub fn normalized(op: &HermitianOperator) -> Result<Self> {
        let tr = op.trace();
        if !(tr > 0.0) || !tr.is_finite() {
            return Err(Error::InvalidInput(format!("cannot normalize operator with trace {tr}")));
        }
        Self::new(op.scale(1.0 / tr))
    }

    pub(crate) fn from_op_unchecked(op: HermitianOperator) -> Self {
        Self { op }
    }

    pub fn diagonal(p: &[f64]) -> Result<Self> {
        Self::new(HermitianOperator::from_real_diagonal(p))
    }

    pub fn maximally_mixed(d: usize) -> Self {
        Self { op: HermitianOperator::identity(d).scale(1.0 / d as f64) }
    }

    /// |ψ⟩⟨ψ| for a vector normalized here.
    pub fn pure(psi: &[num_complex::Complex64]) -> Result<Self> {
        let v = CVector::from_column_slice(psi);
        let n = v.norm();
        if !(n > 0.0) {
            return Err(Error::InvalidInput("zero state vector".into()));
        }
        Self::new(HermitianOperator::outer(&(v / c(n))))
    }

    pub fn op(&self) -> &HermitianOperator {
        &self.op
    }

    pub fn matrix(&self) -> &CMatrix {
        self.op.matrix()
    }

    pub fn dim(&self) -> usize {
        self.op.dim()
    }

    pub fn eig(&self) -> Result<Spectrum> {
        self.op.eig()
    }

    pub fn tensor(&self, other: &Self) -> Self {
        Self { op: self.op.tensor(&other.op) }
    }

    pub fn tensor_power(&self, n: usize) -> Self {
        Self { op: HermitianOperator::from_hermitian_unchecked(crate::linalg::tensor_power(self.matrix(), n)) }
    }

    pub fn conjugate(&self, u: &CMatrix) -> Self {
        Self { op: self.op.conjugate(u) }
    }

    /// Convex mixture (1-t)·self + t·other.
    pub fn mix(&self, other: &Self, t: f64) -> Self {
        Self { op: self.op.scale(1.0 - t).add(&other.op.scale(t)) }
    }
}

/// Density matrix on A⊗B.
#[derive(Clone, Debug, PartialEq)]
pub struct BipartiteState {
    state: DensityMatrix,
    d_a: usize,
    d_b: usize,
}

impl BipartiteState {
    pub fn new(state: DensityMatrix, d_a: usize, d_b: usize) -> Result<Self> {
        if d_a == 0 || d_b == 0 || d_a * d_b != state.dim() {
            return Err(Error::InvalidInput(format!(
                "factor dimensions {d_a}x{d_b} do not match state dimension {}",
                state.dim()
            )));
        }
        Ok(Self { state, d_a, d_b })
    }

    pub fn product(a: &DensityMatrix, b: &DensityMatrix) -> Self {
        Self { state: a.tensor(b), d_a: a.dim(), d_b: b.dim() }
    }

    pub fn state(&self) -> &DensityMatrix {
        &self.state
    }

    pub fn d_a(&self) -> usize {
        self.d_a
    }

    pub fn d_b(&self) -> usize {
        self.d_b
    }

    pub fn dim(&self) -> usize {
        self.d_a * self.d_b
    }

    pub fn marginal_a(&self) -> DensityMatrix {
        self.marginal(Subsystem::B)
    }

    pub fn marginal_b(&self) -> DensityMatrix {
        self.marginal(Subsystem::A)
    }

    fn marginal(&self, traced: Subsystem) -> DensityMatrix {
        let m = partial_trace(self.state.op(), traced, self.d_a, self.d_b).expect("dimensions checked at construction");
        DensityMatrix::from_op_unchecked(m)
    }

    /// ρ_A ⊗ ρ_B.
    pub fn marginal_product(&self) -> DensityMatrix {
        self.marginal_a().tensor(&self.marginal_b())
    }

    /// ρ^{⊗n} with factors ordered (AB)(AB)…
    pub fn tensor_power(&self, n: usize) -> DensityMatrix {
        self.state.tensor_power(n)
    }

    pub fn is_diagonal(&self) -> bool {
        self.state.op().is_diagonal(PSD_SLACK * 1e-2)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_trace_and_negativity() {
        assert!(DensityMatrix::diagonal(&[0.5, 0.4]).is_err());
        assert!(matches!(DensityMatrix::diagonal(&[1.1, -0.1]), Err(Error::NotPsd(_))));
        assert!(DensityMatrix::diagonal(&[1.0 + 5e-11, -5e-11]).is_ok());
    }

    #[test]
    fn marginals_of_product() {
        let a = DensityMatrix::diagonal(&[0.3, 0.7]).unwrap();
        let b = DensityMatrix::diagonal(&[0.1, 0.2, 0.7]).unwrap();
        let ab = BipartiteState::product(&a, &b);
        assert!(ab.marginal_a().op().frobenius_distance(a.op()) < 1e-15);
        assert!(ab.marginal_b().op().frobenius_distance(b.op()) < 1e-15);
    }
}
