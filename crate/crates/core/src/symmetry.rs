//! Permutation action on n-fold tensor powers, the symmetric projector and the
//! universal permutation-invariant state.

use std::collections::HashMap;
use std::sync::{Arc, OnceLock, RwLock};

use num_bigint::BigUint;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{check_dim, CMatrix, HermitianOperator};
use crate::state::DensityMatrix;

/// Exact binomial coefficient.
pub fn binomial(n: u64, k: u64) -> BigUint {
    let k = k.min(n.saturating_sub(k));
    let mut acc = BigUint::from(1u32);
    for i in 0..k {
        acc *= n - i;
        acc /= i + 1;
    }
    acc
}

/// Dimension bound of the universal state: binom(n + d² − 1, n).
pub fn g(n: usize, d: usize) -> Result<BigUint> {
    if n == 0 || d == 0 {
        return Err(Error::InvalidInput(format!("g needs n, d ≥ 1, got n={n}, d={d}")));
    }
    let d2 = (d as u64)
        .checked_mul(d as u64)
        .ok_or_else(|| Error::InvalidInput("local dimension too large".into()))?;
    Ok(binomial(n as u64 + d2 - 1, n as u64))
}

/// Natural log of [`g`], accurate for values beyond f64 range.
pub fn log_g(n: usize, d: usize) -> Result<f64> {
    let v = g(n, d)?;
    let bits = v.bits();
    if bits <= 1000 {
        return Ok(big_to_f64(&v).ln());
    }
    let shift = bits - 60;
    let top = big_to_f64(&(v >> shift));
    Ok(top.ln() + shift as f64 * std::f64::consts::LN_2)
}

pub fn g_f64(n: usize, d: usize) -> Result<f64> {
    Ok(big_to_f64(&g(n, d)?))
}

fn big_to_f64(v: &BigUint) -> f64 {
    v.to_string().parse::<f64>().unwrap_or(f64::INFINITY)
}

/// Dimension of the symmetric subspace of (C^d)^{⊗n}.
pub fn sym_dimension(n: usize, d: usize) -> BigUint {
    binomial((n + d - 1) as u64, n as u64)
}

/// A permutation π of n tensor slots with local dimension d; `perm[m]` is the image of slot m.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PermutationAction {
    n: usize,
    d: usize,
    perm: Vec<usize>,
}

impl PermutationAction {
    pub fn new(d: usize, perm: Vec<usize>) -> Result<Self> {
        let n = perm.len();
        if n == 0 || d == 0 {
            return Err(Error::InvalidInput("empty permutation or zero dimension".into()));
        }
        let mut seen = vec![false; n];
        for &p in &perm {
            if p >= n || seen[p] {
                return Err(Error::InvalidInput(format!("{perm:?} is not a permutation")));
            }
            seen[p] = true;
        }
        Ok(Self { n, d, perm })
    }

    pub fn identity(n: usize, d: usize) -> Self {
        Self { n, d, perm: (0..n).collect() }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn perm(&self) -> &[usize] {
        &self.perm
    }

    pub fn inverse(&self) -> Self {
        let mut inv = vec![0; self.n];
        for (m, &p) in self.perm.iter().enumerate() {
            inv[p] = m;
        }
        Self { n: self.n, d: self.d, perm: inv }
    }

    /// (self ∘ other)(m) = self(other(m)).
    pub fn compose(&self, other: &Self) -> Result<Self> {
        if self.n != other.n || self.d != other.d {
            return Err(Error::DimensionMismatch("permutations act on different spaces".into()));
        }
        Ok(Self { n: self.n, d: self.d, perm: other.perm.iter().map(|&m| self.perm[m]).collect() })
    }

    pub fn cycle_count(&self) -> usize {
        let mut seen = vec![false; self.n];
        let mut cycles = 0;
        for start in 0..self.n {
            if !seen[start] {
                cycles += 1;
                let mut m = start;
                while !seen[m] {
                    seen[m] = true;
                    m = self.perm[m];
                }
            }
        }
        cycles
    }

    /// Image of each basis index: slot π(m) of the output carries digit m of the input.
    pub fn index_map(&self) -> Result<Vec<usize>> {
        let total = checked_power(self.d, self.n)?;
        let mut map = vec![0usize; total];
        let mut digits = vec![0usize; self.n];
        let mut out_digits = vec![0usize; self.n];
        for (i, slot) in map.iter_mut().enumerate() {
            let mut r = i;
            for pos in (0..self.n).rev() {
                digits[pos] = r % self.d;
                r /= self.d;
            }
            for m in 0..self.n {
                out_digits[self.perm[m]] = digits[m];
            }
            *slot = out_digits.iter().fold(0, |acc, &x| acc * self.d + x);
        }
        Ok(map)
    }
}

fn checked_power(d: usize, n: usize) -> Result<usize> {
    let total = u32::try_from(n)
        .ok()
        .and_then(|n| d.checked_pow(n))
        .ok_or_else(|| Error::ResourceLimit(format!("dimension {d}^{n} overflows")))?;
    check_dim(total, "permutation action")?;
    Ok(total)
}

/// All permutations of 0..n in lexicographic order.
pub fn all_permutations(n: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut p: Vec<usize> = (0..n).collect();
    loop {
        out.push(p.clone());
        let Some(i) = (1..n).rev().find(|&i| p[i - 1] < p[i]) else { break };
        let j = (i..n).rev().find(|&j| p[j] > p[i - 1]).expect("successor exists");
        p.swap(i - 1, j);
        p[i..].reverse();
    }
    out
}

/// Permutation matrix U(π) on the computational product basis.
pub fn permutation_unitary(a: &PermutationAction) -> Result<CMatrix> {
    let map = a.index_map()?;
    let dim = map.len();
    let mut u = CMatrix::zeros(dim, dim);
    for (i, &j) in map.iter().enumerate() {
        u[(j, i)] = Complex64::new(1.0, 0.0);
    }
    Ok(u)
}

/// U(π) X U(π)† via the index map.
pub fn permute_operator(x: &CMatrix, a: &PermutationAction) -> Result<CMatrix> {
    let map = a.index_map()?;
    if x.nrows() != map.len() || x.ncols() != map.len() {
        return Err(Error::DimensionMismatch(format!("operator dimension {} vs {}", x.nrows(), map.len())));
    }
    let mut out = CMatrix::zeros(map.len(), map.len());
    for (i, &fi) in map.iter().enumerate() {
        for (k, &fk) in map.iter().enumerate() {
            out[(fi, fk)] = x[(i, k)];
        }
    }
    Ok(out)
}

/// Projector onto the symmetric subspace, (1/n!) Σ_π U(π).
pub fn sym_projector(n: usize, d_local: usize) -> Result<HermitianOperator> {
    let dim = checked_power(d_local, n)?;
    let perms = all_permutations(n);
    let weight = 1.0 / perms.len() as f64;
    let mut p = CMatrix::zeros(dim, dim);
    for perm in perms {
        let map = PermutationAction::new(d_local, perm)?.index_map()?;
        for (i, &j) in map.iter().enumerate() {
            p[(j, i)].re += weight;
        }
    }
    HermitianOperator::new(p)
}

/// Average of U(π) X U(π)† over all π, acting on n blocks of dimension `d_local`.
pub fn twirl(x: &HermitianOperator, n: usize, d_local: usize) -> Result<HermitianOperator> {
    let dim = checked_power(d_local, n)?;
    if x.dim() != dim {
        return Err(Error::DimensionMismatch(format!("operator dimension {} vs {d_local}^{n}", x.dim())));
    }
    let perms = all_permutations(n);
    let weight = 1.0 / perms.len() as f64;
    let mut acc = CMatrix::zeros(dim, dim);
    for perm in perms {
        let map = PermutationAction::new(d_local, perm)?.index_map()?;
        for (i, &fi) in map.iter().enumerate() {
            for (k, &fk) in map.iter().enumerate() {
                acc[(fi, fk)] += x.matrix()[(i, k)] * weight;
            }
        }
    }
    HermitianOperator::new(acc)
}

/// The universal permutation-invariant state on (C^d)^{⊗n}.
#[derive(Clone, Debug)]
pub struct UniversalState {
    pub n: usize,
    pub d: usize,
    pub state: DensityMatrix,
}

type Cache = RwLock<HashMap<(usize, usize), Arc<UniversalState>>>;

fn cache() -> &'static Cache {
    static CACHE: OnceLock<Cache> = OnceLock::new();
    CACHE.get_or_init(|| RwLock::new(HashMap::new()))
}

/// Normalized partial trace over the primed copies of the symmetric projector on (C^d ⊗ C^d)^{⊗n}.
pub fn universal_state(n: usize, d: usize) -> Result<Arc<UniversalState>> {
    if let Some(hit) = cache().read().expect("cache poisoned").get(&(n, d)) {
        return Ok(hit.clone());
    }
    let built = Arc::new(build_universal_state(n, d)?);
    cache().write().expect("cache poisoned").entry((n, d)).or_insert_with(|| built.clone());
    Ok(built)
}

fn build_universal_state(n: usize, d: usize) -> Result<UniversalState> {
    let g = g_f64(n, d)?;
    let dd = d.checked_mul(d).ok_or_else(|| Error::ResourceLimit("local dimension overflows".into()))?;
    let doubled = checked_power(dd, n)?;
    let dim = doubled / checked_power(d, n)?;
    let perms = all_permutations(n);
    let weight = 1.0 / (perms.len() as f64 * g);
    let split = |idx: usize| {
        // local index on AA' is a·d + a'
        let mut r = idx;
        let (mut a, mut ap, mut scale) = (0usize, 0usize, 1usize);
        for _ in 0..n {
            let local = r % dd;
            r /= dd;
            a += (local / d) * scale;
            ap += (local % d) * scale;
            scale *= d;
        }
        (a, ap)
    };
    let mut omega = CMatrix::zeros(dim, dim);
    for perm in perms {
        let map = PermutationAction::new(dd, perm)?.index_map()?;
        for (i, &j) in map.iter().enumerate() {
            let (a_in, ap_in) = split(i);
            let (a_out, ap_out) = split(j);
            if ap_in == ap_out {
                omega[(a_out, a_in)].re += weight;
            }
        }
    }
    let state = DensityMatrix::new(HermitianOperator::new(omega)?)?;
    Ok(UniversalState { n, d, state })
}

/// Whether σ ≤ g(n,d)·ω^n holds, with eigenvalue slack `tol`.
pub fn dominated_by_universal(sigma: &DensityMatrix, n: usize, d: usize, tol: f64) -> Result<bool> {
    let omega = universal_state(n, d)?;
    let gap = omega.state.op().scale(g_f64(n, d)?).sub(sigma.op());
    Ok(gap.eig()?.lambda_min() >= -tol)
}

/// Partition of the index set of d^n sequences into type classes (equal letter counts).
pub fn type_classes(n: usize, d: usize) -> Vec<Vec<usize>> {
    let total = d.pow(n as u32);
    let mut classes: HashMap<Vec<usize>, Vec<usize>> = HashMap::new();
    for idx in 0..total {
        let mut counts = vec![0usize; d];
        let mut r = idx;
        for _ in 0..n {
            counts[r % d] += 1;
            r /= d;
        }
        classes.entry(counts).or_default().push(idx);
    }
    let mut out: Vec<Vec<usize>> = classes.into_values().collect();
    out.sort();
    out
}
