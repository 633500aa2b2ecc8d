//! Dense complex Hermitian linear algebra and spectral primitives.

use std::sync::atomic::{AtomicUsize, Ordering};

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

/// Eigenvalues at or below this fraction of the largest one count as kernel.
pub const SUPPORT_REL_TOL: f64 = 1e-12;
/// Negative eigenvalues down to this magnitude are read as zero.
pub const PSD_SLACK: f64 = 1e-10;
/// Relative gap separating eigenvalue groups in [`pinch`].
pub const DEGENERACY_REL_TOL: f64 = 1e-10;
/// Tolerance on subspace overlaps in [`dominates`] and [`orthogonal`].
pub const SUBSPACE_TOL: f64 = 1e-10;

static MAX_DIM: AtomicUsize = AtomicUsize::new(4096);

/// Largest total Hilbert-space dimension that n-copy constructions may allocate.
pub fn max_dim() -> usize {
    MAX_DIM.load(Ordering::Relaxed)
}

pub fn set_max_dim(d: usize) {
    MAX_DIM.store(d.max(1), Ordering::Relaxed);
}

pub(crate) fn check_dim(dim: usize, what: &str) -> Result<()> {
    if dim > max_dim() {
        return Err(Error::ResourceLimit(format!(
            "{what} needs dimension {dim}, cap is {}",
            max_dim()
        )));
    }
    Ok(())
}

pub fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// Hermitian matrix, symmetrized on construction.
#[derive(Clone, Debug, PartialEq)]
pub struct HermitianOperator {
    m: CMatrix,
}

/// Eigen-decomposition with eigenvalues ascending and eigenvectors as columns.
#[derive(Clone, Debug)]
pub struct Spectrum {
    pub values: Vec<f64>,
    pub vectors: CMatrix,
}

impl Spectrum {
    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |a, v| a.max(v.abs()))
    }

    pub fn lambda_max(&self) -> f64 {
        *self.values.last().unwrap_or(&0.0)
    }

    pub fn lambda_min(&self) -> f64 {
        *self.values.first().unwrap_or(&0.0)
    }

    /// Errors if the spectrum has an eigenvalue below `-PSD_SLACK`.
    pub fn check_psd(&self) -> Result<()> {
        let lo = self.lambda_min();
        if lo < -PSD_SLACK {
            return Err(Error::NotPsd(lo));
        }
        Ok(())
    }

    /// Threshold separating support from kernel for a PSD spectrum.
    pub fn support_threshold(&self) -> f64 {
        SUPPORT_REL_TOL * self.lambda_max().max(0.0)
    }

    pub fn in_support(&self, i: usize) -> bool {
        let v = self.values[i];
        v > 0.0 && v > self.support_threshold()
    }

    pub fn support_indices(&self) -> Vec<usize> {
        (0..self.dim()).filter(|&i| self.in_support(i)).collect()
    }

    pub fn kernel_indices(&self) -> Vec<usize> {
        (0..self.dim()).filter(|&i| !self.in_support(i)).collect()
    }

    pub fn rank(&self) -> usize {
        self.support_indices().len()
    }

    /// Columns of the eigenvector matrix at `idx`.
    pub fn columns(&self, idx: &[usize]) -> CMatrix {
        let n = self.dim();
        CMatrix::from_fn(n, idx.len(), |r, k| self.vectors[(r, idx[k])])
    }

    /// V diag(w) V† for real weights `w`.
    pub fn compose(&self, w: &[f64]) -> CMatrix {
        let n = self.dim();
        let mut scaled = self.vectors.clone();
        for j in 0..n {
            let wj = w[j];
            for i in 0..n {
                scaled[(i, j)] *= wj;
            }
        }
        &scaled * self.vectors.adjoint()
    }

    /// Apply `f` to support eigenvalues, mapping the kernel to zero.
    pub fn on_support(&self, f: impl Fn(f64) -> f64) -> HermitianOperator {
        let w: Vec<f64> = (0..self.dim())
            .map(|i| if self.in_support(i) { f(self.values[i]) } else { 0.0 })
            .collect();
        HermitianOperator::from_hermitian_unchecked(self.compose(&w))
    }

    pub fn support_projector(&self) -> HermitianOperator {
        self.on_support(|_| 1.0)
    }
}

impl HermitianOperator {
    /// Symmetrizes `m` as (m + m†)/2.
    pub fn new(m: CMatrix) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::InvalidInput(format!(
                "matrix is {}x{}, expected square",
                m.nrows(),
                m.ncols()
            )));
        }
        if m.nrows() == 0 {
            return Err(Error::InvalidInput("empty matrix".into()));
        }
        if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidInput("non-finite matrix entry".into()));
        }
        Ok(Self::from_hermitian_unchecked(m))
    }

    pub(crate) fn from_hermitian_unchecked(m: CMatrix) -> Self {
        let n = m.nrows();
        let mut h = m;
        for i in 0..n {
            h[(i, i)] = c(h[(i, i)].re);
            for j in (i + 1)..n {
                let a = h[(i, j)];
                let b = h[(j, i)].conj();
                let avg = (a + b) * 0.5;
                h[(i, j)] = avg;
                h[(j, i)] = avg.conj();
            }
        }
        Self { m: h }
    }

    pub fn from_real_diagonal(d: &[f64]) -> Self {
        let n = d.len();
        Self { m: CMatrix::from_fn(n, n, |i, j| if i == j { c(d[i]) } else { c(0.0) }) }
    }

    pub fn identity(n: usize) -> Self {
        Self { m: CMatrix::identity(n, n) }
    }

    pub fn zeros(n: usize) -> Self {
        Self { m: CMatrix::zeros(n, n) }
    }

    /// |v⟩⟨v| (not normalized).
    pub fn outer(v: &CVector) -> Self {
        Self::from_hermitian_unchecked(v * v.adjoint())
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.m
    }

    pub fn into_matrix(self) -> CMatrix {
        self.m
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim()).map(|i| self.m[(i, i)].re).sum()
    }

    pub fn eig(&self) -> Result<Spectrum> {
        eig_hermitian(self)
    }

    pub fn tensor(&self, other: &Self) -> Self {
        Self { m: self.m.kronecker(&other.m) }
    }

    pub fn scale(&self, a: f64) -> Self {
        Self { m: &self.m * c(a) }
    }

    pub fn add(&self, other: &Self) -> Self {
        Self { m: &self.m + &other.m }
    }

    pub fn sub(&self, other: &Self) -> Self {
        Self { m: &self.m - &other.m }
    }

    /// U X U†.
    pub fn conjugate(&self, u: &CMatrix) -> Self {
        Self::from_hermitian_unchecked(u * &self.m * u.adjoint())
    }

    /// Re tr[self · other]; exact for Hermitian pairs.
    pub fn trace_product(&self, other: &Self) -> f64 {
        trace_product(&self.m, &other.m)
    }

    /// Operator norm (largest eigenvalue magnitude).
    pub fn norm_inf(&self) -> Result<f64> {
        Ok(self.eig()?.max_abs())
    }

    pub fn frobenius_distance(&self, other: &Self) -> f64 {
        (&self.m - &other.m).norm()
    }

    pub fn is_diagonal(&self, tol: f64) -> bool {
        let n = self.dim();
        (0..n).all(|i| (0..n).all(|j| i == j || self.m[(i, j)].norm() <= tol))
    }

    pub fn diagonal_real(&self) -> Vec<f64> {
        (0..self.dim()).map(|i| self.m[(i, i)].re).collect()
    }
}

/// Re tr[A B] without forming the product.
pub fn trace_product(a: &CMatrix, b: &CMatrix) -> f64 {
    let n = a.nrows();
    let mut s = 0.0;
    for i in 0..n {
        for k in 0..n {
            s += (a[(i, k)] * b[(k, i)]).re;
        }
    }
    s
}

/// Hermitian eigendecomposition, eigenvalues ascending.
pub fn eig_hermitian(h: &HermitianOperator) -> Result<Spectrum> {
    let m = h.matrix();
    if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::InvalidInput("non-finite matrix entry".into()));
    }
    let n = m.nrows();
    if n == 1 {
        return Ok(Spectrum { values: vec![m[(0, 0)].re], vectors: CMatrix::identity(1, 1) });
    }
    let se = SymmetricEigen::try_new(m.clone(), f64::EPSILON, 0)
        .ok_or_else(|| Error::InvalidInput("eigendecomposition failed".into()))?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| se.eigenvalues[a].total_cmp(&se.eigenvalues[b]));
    let values = order.iter().map(|&i| se.eigenvalues[i]).collect();
    let vectors = CMatrix::from_fn(n, n, |r, k| se.eigenvectors[(r, order[k])]);
    Ok(Spectrum { values, vectors })
}

/// P^p on the support of P, zero on the kernel.
pub fn power_on_support(p: &HermitianOperator, exponent: f64) -> Result<HermitianOperator> {
    let s = p.eig()?;
    s.check_psd()?;
    Ok(s.on_support(|x| x.powf(exponent)))
}

/// Natural logarithm on the support, zero on the kernel.
pub fn log_on_support(p: &HermitianOperator) -> Result<HermitianOperator> {
    let s = p.eig()?;
    s.check_psd()?;
    Ok(s.on_support(f64::ln))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Subsystem {
    A,
    B,
}

/// Partial trace of a matrix on A⊗B over the named factor.
pub fn partial_trace_matrix(x: &CMatrix, which: Subsystem, d_a: usize, d_b: usize) -> Result<CMatrix> {
    if x.nrows() != d_a * d_b || x.ncols() != d_a * d_b {
        return Err(Error::InvalidInput(format!(
            "operator of dimension {} cannot be split as {d_a}x{d_b}",
            x.nrows()
        )));
    }
    Ok(match which {
        Subsystem::B => CMatrix::from_fn(d_a, d_a, |a, ap| {
            (0..d_b).map(|b| x[(a * d_b + b, ap * d_b + b)]).sum()
        }),
        Subsystem::A => CMatrix::from_fn(d_b, d_b, |b, bp| {
            (0..d_a).map(|a| x[(a * d_b + b, a * d_b + bp)]).sum()
        }),
    })
}

/// Partial trace over the named factor of A⊗B.
pub fn partial_trace(x: &HermitianOperator, which: Subsystem, d_a: usize, d_b: usize) -> Result<HermitianOperator> {
    Ok(HermitianOperator::from_hermitian_unchecked(partial_trace_matrix(x.matrix(), which, d_a, d_b)?))
}

fn same_dim(x: &HermitianOperator, y: &HermitianOperator) -> Result<()> {
    if x.dim() != y.dim() {
        return Err(Error::DimensionMismatch(format!("{} vs {}", x.dim(), y.dim())));
    }
    Ok(())
}

/// Projector onto the eigenspaces of X − Y with nonnegative eigenvalue.
pub fn spectral_projector_geq(x: &HermitianOperator, y: &HermitianOperator) -> Result<HermitianOperator> {
    same_dim(x, y)?;
    let s = x.sub(y).eig()?;
    let tol = 1e-14 * s.max_abs();
    let w: Vec<f64> = s.values.iter().map(|&v| if v >= -tol { 1.0 } else { 0.0 }).collect();
    Ok(HermitianOperator::from_hermitian_unchecked(s.compose(&w)))
}

/// Eigenvalue groups of a spectrum (ascending), split at relative gaps above the grouping tolerance.
pub fn eigen_groups(s: &Spectrum) -> Vec<Vec<usize>> {
    let scale = s.max_abs().max(f64::MIN_POSITIVE);
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for i in 0..s.dim() {
        match groups.last_mut() {
            Some(g) if s.values[i] - s.values[*g.last().unwrap()] <= DEGENERACY_REL_TOL * scale => g.push(i),
            _ => groups.push(vec![i]),
        }
    }
    groups
}

/// Σ_λ Π_λ X Π_λ over the eigenprojectors of `reference`.
pub fn pinch(x: &HermitianOperator, reference: &HermitianOperator) -> Result<HermitianOperator> {
    same_dim(x, reference)?;
    let s = reference.eig()?;
    Ok(pinch_with(x, &s))
}

pub(crate) fn pinch_with(x: &HermitianOperator, s: &Spectrum) -> HermitianOperator {
    let n = x.dim();
    let mut out = CMatrix::zeros(n, n);
    for g in eigen_groups(s) {
        let v = s.columns(&g);
        let block = v.adjoint() * x.matrix() * &v;
        out += &v * block * v.adjoint();
    }
    HermitianOperator::from_hermitian_unchecked(out)
}

/// Kernel inclusion ker Y ⊆ ker X, i.e. X ≪ Y.
pub fn dominates(x: &HermitianOperator, y: &HermitianOperator) -> Result<bool> {
    same_dim(x, y)?;
    let sx = x.eig()?;
    let sy = y.eig()?;
    Ok(dominates_spec(&sx, &sy))
}

pub(crate) fn dominates_spec(sx: &Spectrum, sy: &Spectrum) -> bool {
    let ker_y = sy.kernel_indices();
    let supp_x = sx.support_indices();
    if ker_y.is_empty() || supp_x.is_empty() {
        return true;
    }
    let overlap = sy.columns(&ker_y).adjoint() * sx.columns(&supp_x);
    overlap.norm() <= SUBSPACE_TOL
}

/// Support orthogonality, i.e. XY = 0 for PSD X, Y.
pub fn orthogonal(x: &HermitianOperator, y: &HermitianOperator) -> Result<bool> {
    same_dim(x, y)?;
    let sx = x.eig()?;
    let sy = y.eig()?;
    Ok(orthogonal_spec(&sx, &sy))
}

pub(crate) fn orthogonal_spec(sx: &Spectrum, sy: &Spectrum) -> bool {
    let a = sx.support_indices();
    let b = sy.support_indices();
    if a.is_empty() || b.is_empty() {
        return true;
    }
    let overlap = sx.columns(&a).adjoint() * sy.columns(&b);
    overlap.norm() <= SUBSPACE_TOL
}

/// n-fold tensor power.
pub fn tensor_power(x: &CMatrix, n: usize) -> CMatrix {
    let mut out = CMatrix::identity(1, 1);
    for _ in 0..n {
        out = out.kronecker(x);
    }
    out
}

/// Reorder tensor factors: output factor k is input factor `perm[k]`.
pub fn permute_subsystems(x: &CMatrix, dims: &[usize], perm: &[usize]) -> Result<CMatrix> {
    let total: usize = dims.iter().product();
    if x.nrows() != total || x.ncols() != total || perm.len() != dims.len() {
        return Err(Error::InvalidInput("subsystem permutation does not match dimensions".into()));
    }
    let map = subsystem_index_map(dims, perm)?;
    Ok(CMatrix::from_fn(total, total, |i, j| x[(map[i], map[j])]))
}

/// For each output basis index, the input basis index it reads from.
pub(crate) fn subsystem_index_map(dims: &[usize], perm: &[usize]) -> Result<Vec<usize>> {
    let k = dims.len();
    let mut seen = vec![false; k];
    for &p in perm {
        if p >= k || seen[p] {
            return Err(Error::InvalidInput("not a permutation".into()));
        }
        seen[p] = true;
    }
    let out_dims: Vec<usize> = perm.iter().map(|&p| dims[p]).collect();
    let total: usize = dims.iter().product();
    let mut in_strides = vec![1usize; k];
    for i in (0..k.saturating_sub(1)).rev() {
        in_strides[i] = in_strides[i + 1] * dims[i + 1];
    }
    let mut map = vec![0usize; total];
    let mut digits = vec![0usize; k];
    for (idx, slot) in map.iter_mut().enumerate() {
        let mut r = idx;
        for pos in (0..k).rev() {
            digits[pos] = r % out_dims[pos];
            r /= out_dims[pos];
        }
        *slot = (0..k).map(|pos| digits[pos] * in_strides[perm[pos]]).sum();
    }
    Ok(map)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pauli_x() -> HermitianOperator {
        HermitianOperator::new(CMatrix::from_row_slice(2, 2, &[c(0.0), c(1.0), c(1.0), c(0.0)])).unwrap()
    }

    #[test]
    fn eig_examples() {
        let s = HermitianOperator::identity(2).eig().unwrap();
        assert_eq!(s.values, vec![1.0, 1.0]);
        let s = HermitianOperator::from_real_diagonal(&[0.75, 0.25]).eig().unwrap();
        assert!((s.values[0] - 0.25).abs() < 1e-15 && (s.values[1] - 0.75).abs() < 1e-15);
        let s = pauli_x().eig().unwrap();
        assert!((s.values[0] + 1.0).abs() < 1e-14 && (s.values[1] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn non_finite_rejected() {
        let m = CMatrix::from_element(2, 2, c(f64::NAN));
        assert!(matches!(HermitianOperator::new(m), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn power_examples() {
        let p = power_on_support(&HermitianOperator::identity(2).scale(0.5), -1.0).unwrap();
        assert!(p.frobenius_distance(&HermitianOperator::identity(2).scale(2.0)) < 1e-14);
        let p = power_on_support(&HermitianOperator::from_real_diagonal(&[4.0, 0.0]), 0.5).unwrap();
        assert!(p.frobenius_distance(&HermitianOperator::from_real_diagonal(&[2.0, 0.0])) < 1e-14);
        let p = power_on_support(&HermitianOperator::from_real_diagonal(&[0.75, 0.25]), 2.0).unwrap();
        assert!(p.frobenius_distance(&HermitianOperator::from_real_diagonal(&[0.5625, 0.0625])) < 1e-14);
        let bad = HermitianOperator::from_real_diagonal(&[1.0, -1e-6]);
        assert!(matches!(power_on_support(&bad, 2.0), Err(Error::NotPsd(_))));
        let slack = HermitianOperator::from_real_diagonal(&[1.0, -1e-11]);
        let p = power_on_support(&slack, -1.0).unwrap();
        assert!(p.frobenius_distance(&HermitianOperator::from_real_diagonal(&[1.0, 0.0])) < 1e-14);
    }

    #[test]
    fn partial_trace_examples() {
        let i4 = HermitianOperator::identity(4).scale(0.25);
        let r = partial_trace(&i4, Subsystem::A, 2, 2).unwrap();
        assert!(r.frobenius_distance(&HermitianOperator::identity(2).scale(0.5)) < 1e-15);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let bell = HermitianOperator::outer(&CVector::from_vec(vec![c(s), c(0.0), c(0.0), c(s)]));
        let r = partial_trace(&bell, Subsystem::B, 2, 2).unwrap();
        assert!(r.frobenius_distance(&HermitianOperator::identity(2).scale(0.5)) < 1e-15);
        assert!(partial_trace(&i4, Subsystem::A, 3, 2).is_err());
    }

    #[test]
    fn projector_examples() {
        let x = pauli_x();
        let p = spectral_projector_geq(&x, &x).unwrap();
        assert!(p.frobenius_distance(&HermitianOperator::identity(2)) < 1e-14);
        let p = spectral_projector_geq(
            &HermitianOperator::from_real_diagonal(&[2.0, 0.0]),
            &HermitianOperator::identity(2),
        )
        .unwrap();
        assert!(p.frobenius_distance(&HermitianOperator::from_real_diagonal(&[1.0, 0.0])) < 1e-14);
    }

    #[test]
    fn pinch_examples() {
        let x = pauli_x();
        let p = pinch(&x, &HermitianOperator::identity(2)).unwrap();
        assert!(p.frobenius_distance(&x) < 1e-14);
        let p = pinch(&x, &HermitianOperator::from_real_diagonal(&[1.0, 2.0])).unwrap();
        assert!(p.frobenius_distance(&HermitianOperator::zeros(2)) < 1e-14);
    }

    #[test]
    fn support_relations() {
        let a = HermitianOperator::from_real_diagonal(&[1.0, 0.0]);
        let b = HermitianOperator::from_real_diagonal(&[0.0, 1.0]);
        let i = HermitianOperator::identity(2);
        assert!(dominates(&a, &a).unwrap());
        assert!(orthogonal(&a, &b).unwrap());
        assert!(!dominates(&i, &a).unwrap());
        assert!(dominates(&a, &i).unwrap());
        assert!(!orthogonal(&a, &i).unwrap());
    }

    #[test]
    fn subsystem_permutation_swaps_factors() {
        let a = HermitianOperator::from_real_diagonal(&[1.0, 2.0]);
        let b = HermitianOperator::from_real_diagonal(&[3.0, 5.0, 7.0]);
        let ab = a.tensor(&b);
        let ba = permute_subsystems(ab.matrix(), &[2, 3], &[1, 0]).unwrap();
        assert!((ba - b.tensor(&a).into_matrix()).norm() < 1e-15);
    }
}
