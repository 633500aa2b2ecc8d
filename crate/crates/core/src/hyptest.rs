//! Finite-copy correlation testing: exact simple-vs-simple Neyman–Pearson,
//! the threshold tests behind the error exponents, and certified brackets on the
//! composite minimum type-I error.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::divergences::petz_divergence;
use crate::error::{Error, Result};
use crate::linalg::{c, check_dim, eigen_groups, spectral_projector_geq, CMatrix, CVector, HermitianOperator, PSD_SLACK};
use crate::random::{complex_normal, rng_from_seed, StdRng};
use crate::rmi::{rmi, OptimizerOpts, RmiVariant};
use crate::state::{BipartiteState, DensityMatrix};
use crate::symmetry::{g_f64, log_g, twirl, type_classes, universal_state};

/// Duality gap accepted as a certificate of Neyman–Pearson optimality.
pub const NP_GAP_TOL: f64 = 1e-9;
/// Tolerance on 0 ≤ T ≤ 1.
pub const TEST_TOL: f64 = 1e-10;

/// The five alternative sets for testing correlation against product structure.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Hypothesis {
    /// σ^{⊗n} ⊗ τ^{⊗n}
    Iid,
    /// permutation-invariant σ_{A^n} ⊗ τ_{B^n}
    SymBoth,
    /// permutation-invariant σ_{A^n}, arbitrary τ_{B^n}
    SymA,
    /// arbitrary σ_{A^n} ⊗ τ_{B^n}
    Ind,
    /// the single state ρ_A^{⊗n} ⊗ ρ_B^{⊗n}
    Mar,
}

impl Hypothesis {
    pub fn all() -> [Hypothesis; 5] {
        [Hypothesis::Iid, Hypothesis::SymBoth, Hypothesis::SymA, Hypothesis::Ind, Hypothesis::Mar]
    }

    pub fn name(self) -> &'static str {
        match self {
            Hypothesis::Iid => "iid",
            Hypothesis::SymBoth => "symboth",
            Hypothesis::SymA => "syma",
            Hypothesis::Ind => "ind",
            Hypothesis::Mar => "mar",
        }
    }
}

impl fmt::Display for Hypothesis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Hypothesis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Hypothesis::all()
            .into_iter()
            .find(|h| h.name() == s.to_ascii_lowercase())
            .ok_or_else(|| Error::InvalidInput(format!("unknown hypothesis '{s}' (iid, symboth, syma, ind, mar)")))
    }
}

/// Index bookkeeping for n copies of A⊗B, ordered (AB)(AB)…
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Layout {
    pub n: usize,
    pub d_a: usize,
    pub d_b: usize,
}

impl Layout {
    pub fn new(n: usize, d_a: usize, d_b: usize) -> Result<Self> {
        if n == 0 || d_a == 0 || d_b == 0 {
            return Err(Error::InvalidInput("copies and local dimensions must be positive".into()));
        }
        let total = u32::try_from(n)
            .ok()
            .and_then(|k| (d_a * d_b).checked_pow(k))
            .ok_or_else(|| Error::ResourceLimit(format!("({d_a}·{d_b})^{n} overflows")))?;
        check_dim(total, &format!("{n} copies of a {d_a}x{d_b} system"))?;
        Ok(Self { n, d_a, d_b })
    }

    pub fn of(rho: &BipartiteState, n: usize) -> Result<Self> {
        Self::new(n, rho.d_a(), rho.d_b())
    }

    pub fn dim(&self) -> usize {
        self.dim_a() * self.dim_b()
    }

    pub fn dim_a(&self) -> usize {
        self.d_a.pow(self.n as u32)
    }

    pub fn dim_b(&self) -> usize {
        self.d_b.pow(self.n as u32)
    }

    /// (A^n index, B^n index) of an interleaved basis index.
    pub fn split(&self, z: usize) -> (usize, usize) {
        let local = self.d_a * self.d_b;
        let (mut x, mut y, mut r) = (0, 0, z);
        let (mut sx, mut sy) = (1, 1);
        for _ in 0..self.n {
            let digit = r % local;
            r /= local;
            x += (digit / self.d_b) * sx;
            y += (digit % self.d_b) * sy;
            sx *= self.d_a;
            sy *= self.d_b;
        }
        (x, y)
    }

    pub fn join(&self, x: usize, y: usize) -> usize {
        let local = self.d_a * self.d_b;
        let (mut z, mut scale, mut x, mut y) = (0, 1, x, y);
        for _ in 0..self.n {
            z += ((x % self.d_a) * self.d_b + y % self.d_b) * scale;
            x /= self.d_a;
            y /= self.d_b;
            scale *= local;
        }
        z
    }

    /// σ_{A^n} ⊗ τ_{B^n} in interleaved order.
    pub fn product(&self, a: &CMatrix, b: &CMatrix) -> HermitianOperator {
        let idx: Vec<(usize, usize)> = (0..self.dim()).map(|z| self.split(z)).collect();
        let m = CMatrix::from_fn(self.dim(), self.dim(), |i, j| a[(idx[i].0, idx[j].0)] * b[(idx[i].1, idx[j].1)]);
        HermitianOperator::from_hermitian_unchecked(m)
    }

    /// tr_{B^n}[(1 ⊗ τ) T].
    pub fn reduce_a(&self, t: &CMatrix, tau: &CMatrix) -> CMatrix {
        let (da, db) = (self.dim_a(), self.dim_b());
        let mut k = CMatrix::zeros(da, da);
        for x in 0..da {
            for xp in 0..da {
                let mut acc = c(0.0);
                for y in 0..db {
                    for yp in 0..db {
                        acc += t[(self.join(x, y), self.join(xp, yp))] * tau[(yp, y)];
                    }
                }
                k[(x, xp)] = acc;
            }
        }
        k
    }

    /// tr_{A^n}[(σ ⊗ 1) T].
    pub fn reduce_b(&self, t: &CMatrix, sigma: &CMatrix) -> CMatrix {
        let (da, db) = (self.dim_a(), self.dim_b());
        let mut k = CMatrix::zeros(db, db);
        for y in 0..db {
            for yp in 0..db {
                let mut acc = c(0.0);
                for x in 0..da {
                    for xp in 0..da {
                        acc += t[(self.join(x, y), self.join(xp, yp))] * sigma[(xp, x)];
                    }
                }
                k[(y, yp)] = acc;
            }
        }
        k
    }

    /// ω^n_{A} ⊗ ω^n_{B}.
    pub fn universal_product(&self) -> Result<HermitianOperator> {
        let wa = universal_state(self.n, self.d_a)?;
        let wb = universal_state(self.n, self.d_b)?;
        Ok(self.product(wa.state.matrix(), wb.state.matrix()))
    }

    /// log g_{n,d_A} + log g_{n,d_B}.
    pub fn log_g_sum(&self) -> Result<f64> {
        Ok(log_g(self.n, self.d_a)? + log_g(self.n, self.d_b)?)
    }
}

/// A test operator 0 ≤ T ≤ 1 on n copies of A⊗B; T is the probability of accepting H₀.
#[derive(Clone, Debug, PartialEq)]
pub struct Test {
    op: HermitianOperator,
    layout: Layout,
}

impl Test {
    pub fn new(op: HermitianOperator, layout: Layout) -> Result<Self> {
        if op.dim() != layout.dim() {
            return Err(Error::DimensionMismatch(format!("test of dimension {} vs {}", op.dim(), layout.dim())));
        }
        let s = op.eig()?;
        if s.lambda_min() < -TEST_TOL || s.lambda_max() > 1.0 + TEST_TOL {
            return Err(Error::InvalidInput(format!(
                "test spectrum [{}, {}] outside [0, 1]",
                s.lambda_min(),
                s.lambda_max()
            )));
        }
        Ok(Self { op, layout })
    }

    pub fn op(&self) -> &HermitianOperator {
        &self.op
    }

    pub fn layout(&self) -> Layout {
        self.layout
    }

    pub fn n(&self) -> usize {
        self.layout.n
    }

    /// Type-I error 1 − tr[ρ^{⊗n} T].
    pub fn type1(&self, rho_n: &DensityMatrix) -> f64 {
        (1.0 - self.op.trace_product(rho_n.op())).clamp(0.0, 1.0)
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self { op: self.op.scale(factor.clamp(0.0, 1.0)), layout: self.layout }
    }
}

/// Type-I error with a certified bracket on the worst-case type-II error.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorPair {
    pub type1: f64,
    pub type2_lower: f64,
    pub type2_upper: f64,
}

/// Certified bracket on a minimum error probability.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Bracket {
    pub lower: f64,
    pub upper: f64,
}

impl Bracket {
    pub fn exact(v: f64) -> Self {
        Self { lower: v, upper: v }
    }

    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }

    pub fn contains(&self, v: f64, slack: f64) -> bool {
        v >= self.lower - slack && v <= self.upper + slack
    }
}

#[derive(Clone, Debug)]
pub struct NpSolution {
    pub type1: f64,
    pub test: HermitianOperator,
    /// Likelihood-ratio threshold t at the boundary.
    pub threshold: f64,
    /// h(t) − tr[ρT] with h(t) = tr(ρ − tσ)₊ + tμ, an upper bound on the suboptimality.
    pub duality_gap: f64,
}

fn check_level(mu: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&mu) {
        return Err(Error::InvalidInput(format!("type-II level must lie in [0, 1], got {mu}")));
    }
    Ok(())
}

/// Optimal randomized classical test: acceptance weights, threshold and type-I error.
/// Outcomes are admitted in decreasing likelihood ratio, ties by larger P first.
pub fn classical_neyman_pearson(p: &[f64], q: &[f64], mu: f64) -> Result<(f64, Vec<f64>, f64)> {
    check_level(mu)?;
    if p.len() != q.len() {
        return Err(Error::DimensionMismatch(format!("{} vs {} outcomes", p.len(), q.len())));
    }
    let ratio = |i: usize| {
        if p[i] <= 0.0 {
            0.0
        } else if q[i] <= 0.0 {
            f64::INFINITY
        } else {
            p[i] / q[i]
        }
    };
    let mut order: Vec<usize> = (0..p.len()).filter(|&i| p[i] > 0.0).collect();
    order.sort_by(|&i, &j| ratio(j).total_cmp(&ratio(i)).then(p[j].total_cmp(&p[i])).then(i.cmp(&j)));
    let mut w = vec![0.0; p.len()];
    let mut budget = mu;
    let mut threshold = 0.0;
    for &i in &order {
        if q[i] <= budget {
            w[i] = 1.0;
            budget -= q[i].max(0.0);
        } else {
            w[i] = budget / q[i];
            threshold = ratio(i);
            break;
        }
    }
    let accepted: f64 = p.iter().zip(&w).map(|(a, b)| a * b).sum();
    Ok(((1.0 - accepted).clamp(0.0, 1.0), w, threshold))
}

struct ThresholdCut {
    projector: HermitianOperator,
    sigma_mass: f64,
    rho_mass: f64,
    dual: f64,
}

fn threshold_cut(rho: &DensityMatrix, sigma: &DensityMatrix, t: f64, mu: f64) -> Result<ThresholdCut> {
    let s = rho.op().sub(&sigma.op().scale(t)).eig()?;
    let tol = 1e-14 * s.max_abs();
    let w: Vec<f64> = s.values.iter().map(|&v| if v >= -tol { 1.0 } else { 0.0 }).collect();
    let projector = HermitianOperator::from_hermitian_unchecked(s.compose(&w));
    let positive: f64 = s.values.iter().filter(|&&v| v > 0.0).sum();
    Ok(ThresholdCut {
        sigma_mass: projector.trace_product(sigma.op()),
        rho_mass: projector.trace_product(rho.op()),
        dual: positive + t * mu,
        projector,
    })
}

/// Minimum type-I error against the single alternative σ at type-II level μ.
pub fn neyman_pearson_min_type1(rho: &DensityMatrix, sigma: &DensityMatrix, mu: f64) -> Result<NpSolution> {
    check_level(mu)?;
    if rho.dim() != sigma.dim() {
        return Err(Error::DimensionMismatch(format!("{} vs {}", rho.dim(), sigma.dim())));
    }
    let d = rho.dim();
    if rho.op().is_diagonal(0.0) && sigma.op().is_diagonal(0.0) {
        let p = rho.op().diagonal_real();
        let q = sigma.op().diagonal_real();
        let (type1, w, threshold) = classical_neyman_pearson(&p, &q, mu)?;
        let dual = threshold * mu + p.iter().zip(&q).map(|(a, b)| (a - threshold * b).max(0.0)).sum::<f64>();
        let gap = if threshold.is_finite() { (dual - (1.0 - type1)).max(0.0) } else { 0.0 };
        return Ok(NpSolution { type1, test: HermitianOperator::from_real_diagonal(&w), threshold, duality_gap: gap });
    }
    if mu >= 1.0 {
        return Ok(NpSolution { type1: 0.0, test: HermitianOperator::identity(d), threshold: 0.0, duality_gap: 0.0 });
    }
    if mu <= 0.0 {
        let s = sigma.eig()?;
        let w: Vec<f64> = (0..d).map(|i| if s.in_support(i) { 0.0 } else { 1.0 }).collect();
        let test = HermitianOperator::from_hermitian_unchecked(s.compose(&w));
        let type1 = (1.0 - test.trace_product(rho.op())).clamp(0.0, 1.0);
        return Ok(NpSolution { type1, test, threshold: f64::INFINITY, duality_gap: 0.0 });
    }
    let mut lo = threshold_cut(rho, sigma, 0.0, mu)?;
    let mut t_lo = 0.0;
    let mut t_hi = 1.0;
    let mut hi = threshold_cut(rho, sigma, t_hi, mu)?;
    let mut doublings = 0;
    while hi.sigma_mass > mu {
        t_lo = t_hi;
        lo = hi;
        t_hi *= 2.0;
        hi = threshold_cut(rho, sigma, t_hi, mu)?;
        doublings += 1;
        if doublings > 1100 {
            return Err(Error::NotConverged { best: 1.0, residual: hi.sigma_mass - mu });
        }
    }
    for _ in 0..200 {
        if t_hi - t_lo <= 1e-15 * t_hi {
            break;
        }
        let t = 0.5 * (t_lo + t_hi);
        let mid = threshold_cut(rho, sigma, t, mu)?;
        if mid.sigma_mass > mu {
            t_lo = t;
            lo = mid;
        } else {
            t_hi = t;
            hi = mid;
        }
    }
    let spread = lo.sigma_mass - hi.sigma_mass;
    let lambda = if spread > 0.0 { ((mu - hi.sigma_mass) / spread).clamp(0.0, 1.0) } else { 0.0 };
    let test = hi.projector.scale(1.0 - lambda).add(&lo.projector.scale(lambda));
    let accepted = (1.0 - lambda) * hi.rho_mass + lambda * lo.rho_mass;
    let gap = (lo.dual.min(hi.dual) - accepted).max(0.0);
    let type1 = (1.0 - accepted).clamp(0.0, 1.0);
    if gap > NP_GAP_TOL {
        return Err(Error::NotConverged { best: type1, residual: gap });
    }
    Ok(NpSolution { type1, test, threshold: 0.5 * (t_lo + t_hi), duality_gap: gap })
}

/// Projector {ρ^{⊗n} ≥ e^{λ} ω^n⊗ω^n} with λ set so the symmetric worst-case type-II is at most e^{−nR}.
pub fn build_direct_test(rho: &BipartiteState, n: usize, rate: f64, s: f64) -> Result<Test> {
    if !(s > 0.0 && s < 1.0) {
        return Err(Error::InvalidInput(format!("direct test order must lie in (0, 1), got {s}")));
    }
    let layout = Layout::of(rho, n)?;
    let rho_n = rho.tensor_power(n);
    let omega = layout.universal_product()?;
    let d_s = petz_divergence(&rho_n, &omega, s)?;
    let lambda = (layout.log_g_sum()? + n as f64 * rate - (1.0 - s) * d_s) / s;
    let t = spectral_projector_geq(rho_n.op(), &omega.scale(lambda.exp()))?;
    Test::new(t, layout)
}

/// Common eigenbasis of the pinched n-copy state and ω^n⊗ω^n, with both spectra in that basis.
struct PinchedBasis {
    vectors: CMatrix,
    p: Vec<f64>,
    q: Vec<f64>,
}

fn pinched_basis(rho: &BipartiteState, layout: &Layout) -> Result<PinchedBasis> {
    let rho_n = rho.tensor_power(layout.n);
    let omega = layout.universal_product()?;
    let so = omega.eig()?;
    let dim = layout.dim();
    let mut vectors = CMatrix::zeros(dim, dim);
    let mut p = Vec::with_capacity(dim);
    let mut q = Vec::with_capacity(dim);
    for group in eigen_groups(&so) {
        let v = so.columns(&group);
        let block = HermitianOperator::new(v.adjoint() * rho_n.matrix() * &v)?;
        let sb = block.eig()?;
        let level = group.iter().map(|&i| so.values[i]).sum::<f64>() / group.len() as f64;
        let rotated = &v * &sb.vectors;
        for (k, &val) in sb.values.iter().enumerate() {
            vectors.set_column(p.len(), &rotated.column(k));
            p.push(val.max(0.0));
            q.push(level);
        }
    }
    let sp: f64 = p.iter().sum();
    let sq: f64 = q.iter().sum();
    p.iter_mut().for_each(|x| *x /= sp);
    q.iter_mut().for_each(|x| *x /= sq);
    Ok(PinchedBasis { vectors, p, q })
}

/// Outcome distributions of the pinched n-copy state and ω^n⊗ω^n in their common eigenbasis.
pub fn pinched_pair(rho: &BipartiteState, n: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    let layout = Layout::of(rho, n)?;
    let b = pinched_basis(rho, &layout)?;
    Ok((b.p, b.q))
}

fn classical_petz(p: &[f64], q: &[f64], s: f64) -> f64 {
    let terms = p.iter().zip(q).filter(|(a, _)| **a > 0.0).map(|(a, b)| s * a.ln() + (1.0 - s) * b.ln());
    crate::divergences::log_sum_exp(terms) / (s - 1.0)
}

/// Pinched threshold test {𝒫(ρ^{⊗n}) ≥ e^{μ_n} ω⊗ω}, optionally built at the lower rate R′ and scaled by e^{−n(R−R′)}.
pub fn build_sc_test(rho: &BipartiteState, n: usize, rate: f64, s_hat: f64, rate_prime: Option<f64>) -> Result<Test> {
    if !(s_hat > 1.0) || !s_hat.is_finite() {
        return Err(Error::InvalidInput(format!("pinched test order must lie in (1, ∞), got {s_hat}")));
    }
    let built_rate = match rate_prime {
        Some(rp) if rp > rate => {
            return Err(Error::InvalidInput(format!("scaled test needs R ≥ R′, got R={rate}, R′={rp}")));
        }
        Some(rp) => rp,
        None => rate,
    };
    let layout = Layout::of(rho, n)?;
    let b = pinched_basis(rho, &layout)?;
    let d_hat = classical_petz(&b.p, &b.q, s_hat);
    let level = (layout.log_g_sum()? + n as f64 * built_rate + (s_hat - 1.0) * d_hat) / s_hat;
    let cut = level.exp();
    let w: Vec<f64> = b.p.iter().zip(&b.q).map(|(p, q)| if *p >= cut * q { 1.0 } else { 0.0 }).collect();
    let scale = (-(n as f64) * (rate - built_rate)).exp();
    let op = diagonal_in_basis(&b.vectors, &w).scale(scale);
    Test::new(op, layout)
}

fn diagonal_in_basis(v: &CMatrix, w: &[f64]) -> HermitianOperator {
    let mut scaled = v.clone();
    for (j, &x) in w.iter().enumerate() {
        scaled.column_mut(j).scale_mut(x);
    }
    HermitianOperator::from_hermitian_unchecked(scaled * v.adjoint())
}

/// Exponentially tilted distribution P^s Q^{1−s} / Σ P^s Q^{1−s}.
pub fn tilt(p: &[f64], q: &[f64], s: f64) -> Result<Vec<f64>> {
    if p.len() != q.len() {
        return Err(Error::DimensionMismatch(format!("{} vs {} outcomes", p.len(), q.len())));
    }
    if p.iter().zip(q).any(|(a, b)| *a > 0.0 && *b <= 0.0) {
        return Err(Error::InvalidInput("support of P must lie inside support of Q".into()));
    }
    let logs: Vec<f64> = p
        .iter()
        .zip(q)
        .map(|(a, b)| if *a > 0.0 { s * a.ln() + (1.0 - s) * b.ln() } else { f64::NEG_INFINITY })
        .collect();
    let norm = crate::divergences::log_sum_exp(logs.iter().copied());
    if !norm.is_finite() {
        return Err(Error::InvalidInput("tilted distribution has empty support".into()));
    }
    Ok(logs.iter().map(|l| (l - norm).exp()).collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BracketOpts {
    pub seed: u64,
    /// Random starts of the alternating maximization.
    pub restarts: usize,
    pub max_rounds: usize,
}

impl Default for BracketOpts {
    fn default() -> Self {
        Self { seed: 0, restarts: 10, max_rounds: 50 }
    }
}

fn top_eigenvector(k: &CMatrix) -> Result<(f64, CVector)> {
    let s = HermitianOperator::new(k.clone())?.eig()?;
    let last = s.dim() - 1;
    Ok((s.values[last], s.vectors.column(last).into_owned()))
}

fn random_pure(rng: &mut StdRng, d: usize) -> CVector {
    let v = CVector::from_fn(d, |_, _| complex_normal(rng));
    let n = v.norm();
    v / c(n)
}

fn twirled_state(v: &CVector, n: usize, d: usize, symmetric: bool) -> Result<CMatrix> {
    let p = HermitianOperator::outer(v);
    Ok(if symmetric { twirl(&p, n, d)?.into_matrix() } else { p.into_matrix() })
}

/// Best response in one factor: top eigenvector of the (twirled) reduced operator.
fn best_response(k: CMatrix, n: usize, d: usize, symmetric: bool) -> Result<CMatrix> {
    let k = if symmetric { twirl(&HermitianOperator::new(k)?, n, d)?.into_matrix() } else { k };
    let (_, v) = top_eigenvector(&k)?;
    twirled_state(&v, n, d, symmetric)
}

fn pair_value(layout: &Layout, t: &CMatrix, sigma: &CMatrix, tau: &CMatrix) -> f64 {
    crate::linalg::trace_product(&layout.reduce_b(t, sigma), tau)
}

/// A feasible alternative σ_{A^n} ⊗ τ_{B^n} and its acceptance probability tr[(σ⊗τ)T].
struct Alternative {
    value: f64,
    sigma: CMatrix,
    tau: CMatrix,
}

fn keep_best(best: &mut Option<Alternative>, cand: Alternative) {
    if best.as_ref().is_none_or(|b| cand.value > b.value) {
        *best = Some(cand);
    }
}

/// Alternating maximization of tr[(σ⊗τ)T] with σ, τ optionally restricted to permutation-invariant states.
fn alternating_best(
    layout: &Layout,
    t: &CMatrix,
    sym_a: bool,
    sym_b: bool,
    starts: Vec<CMatrix>,
    max_rounds: usize,
) -> Result<Option<Alternative>> {
    let mut best = None;
    for mut tau in starts {
        let mut prev = f64::NEG_INFINITY;
        for _ in 0..max_rounds {
            let sigma = best_response(layout.reduce_a(t, &tau), layout.n, layout.d_a, sym_a)?;
            tau = best_response(layout.reduce_b(t, &sigma), layout.n, layout.d_b, sym_b)?;
            let value = pair_value(layout, t, &sigma, &tau);
            let done = value - prev < 1e-12;
            prev = value;
            keep_best(&mut best, Alternative { value, sigma, tau: tau.clone() });
            if done {
                break;
            }
        }
    }
    Ok(best)
}

/// Shifted higher-order power iteration for max over unit a of ⟨a^{⊗n}|K|a^{⊗n}⟩.
fn power_product_state(k: &CMatrix, n: usize, d: usize, mut a: CVector, steps: usize) -> (CVector, f64) {
    let power = |a: &CVector| {
        let mut v = CVector::from_element(1, c(1.0));
        for _ in 0..n {
            v = v.kronecker(a);
        }
        v
    };
    let value = |a: &CVector| {
        let an = power(a);
        (an.adjoint() * k * &an)[(0, 0)].re
    };
    let mut f = value(&a);
    for _ in 0..steps {
        let kv = k * power(&a);
        let mut grad = CVector::zeros(d);
        for (idx, &amp) in kv.iter().enumerate() {
            let mut digits = vec![0usize; n];
            let mut r = idx;
            for pos in (0..n).rev() {
                digits[pos] = r % d;
                r /= d;
            }
            for slot in 0..n {
                let mut coef = amp;
                for (pos, &dg) in digits.iter().enumerate() {
                    if pos != slot {
                        coef *= a[dg].conj();
                    }
                }
                grad[digits[slot]] += coef;
            }
        }
        let next = grad + &a * c(n as f64);
        let nn = next.norm();
        if !(nn > 0.0) {
            break;
        }
        let next = next / c(nn);
        let fn_ = value(&next);
        if fn_ <= f + 1e-14 {
            break;
        }
        a = next;
        f = fn_;
    }
    (a, f)
}

fn iid_best(layout: &Layout, t: &CMatrix, rng: &mut StdRng, opts: &BracketOpts) -> Option<Alternative> {
    let (n, da, db) = (layout.n, layout.d_a, layout.d_b);
    let mut best = None;
    for _ in 0..opts.restarts.max(1) {
        let mut a = random_pure(rng, da);
        let mut b = random_pure(rng, db);
        let mut prev = f64::NEG_INFINITY;
        for _ in 0..opts.max_rounds {
            let tau = crate::linalg::tensor_power(&(&b * b.adjoint()), n);
            a = power_product_state(&layout.reduce_a(t, &tau), n, da, a, 50).0;
            let sigma = crate::linalg::tensor_power(&(&a * a.adjoint()), n);
            let (nb, value) = power_product_state(&layout.reduce_b(t, &sigma), n, db, b, 50);
            b = nb;
            let done = value - prev < 1e-12;
            prev = value;
            let tau = crate::linalg::tensor_power(&(&b * b.adjoint()), n);
            keep_best(&mut best, Alternative { value, sigma, tau });
            if done {
                break;
            }
        }
    }
    best
}

/// Heuristic maximizer of tr[(σ⊗τ)T] over the alternative set of `hyp` (not the marginal one).
fn hardest_alternative(layout: &Layout, t: &CMatrix, hyp: Hypothesis, opts: &BracketOpts) -> Result<Option<Alternative>> {
    let mut rng = rng_from_seed(opts.seed);
    if hyp == Hypothesis::Iid {
        return Ok(iid_best(layout, t, &mut rng, opts));
    }
    let (sym_a, sym_b) = match hyp {
        Hypothesis::SymBoth => (true, true),
        Hypothesis::SymA => (true, false),
        _ => (false, false),
    };
    let mixed_b = CMatrix::identity(layout.dim_b(), layout.dim_b()) * c(1.0 / layout.dim_b() as f64);
    let mut starts = vec![mixed_b];
    for _ in 0..opts.restarts {
        let v = random_pure(&mut rng, layout.dim_b());
        starts.push(twirled_state(&v, layout.n, layout.d_b, sym_b)?);
    }
    alternating_best(layout, t, sym_a, sym_b, starts, opts.max_rounds)
}

/// Exact worst-case type-II error of a diagonal test over the symmetric sets, from type classes.
fn diagonal_worst_case(layout: &Layout, diag: &[f64], hyp: Hypothesis) -> f64 {
    let db = layout.dim_b();
    let m = |x: usize, y: usize| diag[layout.join(x, y)];
    match hyp {
        Hypothesis::Ind => diag.iter().cloned().fold(0.0, f64::max),
        Hypothesis::SymA => {
            let classes = type_classes(layout.n, layout.d_a);
            let mut best = 0.0f64;
            for cx in &classes {
                for y in 0..db {
                    best = best.max(cx.iter().map(|&x| m(x, y)).sum::<f64>() / cx.len() as f64);
                }
            }
            best
        }
        _ => {
            let cxs = type_classes(layout.n, layout.d_a);
            let cys = type_classes(layout.n, layout.d_b);
            let mut best = 0.0f64;
            for cx in &cxs {
                for cy in &cys {
                    let s: f64 = cx.iter().flat_map(|&x| cy.iter().map(move |&y| (x, y))).map(|(x, y)| m(x, y)).sum();
                    best = best.max(s / (cx.len() * cy.len()) as f64);
                }
            }
            best
        }
    }
}

fn marginal_powers(layout: &Layout, marginals: (&DensityMatrix, &DensityMatrix)) -> HermitianOperator {
    let a = crate::linalg::tensor_power(marginals.0.matrix(), layout.n);
    let b = crate::linalg::tensor_power(marginals.1.matrix(), layout.n);
    layout.product(&a, &b)
}

/// Certified upper bound on the worst-case type-II error.
fn type2_upper(test: &Test, hyp: Hypothesis, marginals: Option<(&DensityMatrix, &DensityMatrix)>) -> Result<f64> {
    let layout = test.layout();
    let t = test.op();
    if hyp == Hypothesis::Mar {
        let m = marginals.ok_or_else(|| Error::InvalidInput("the marginal hypothesis needs ρ_A and ρ_B".into()))?;
        return Ok(marginal_powers(&layout, m).trace_product(t).clamp(0.0, 1.0));
    }
    let top = t.eig()?.lambda_max().clamp(0.0, 1.0);
    if t.is_diagonal(1e-14) {
        return Ok(diagonal_worst_case(&layout, &t.diagonal_real(), hyp).min(top));
    }
    let symmetric_bound = || -> Result<f64> {
        let g = g_f64(layout.n, layout.d_a)? * g_f64(layout.n, layout.d_b)?;
        Ok(g * layout.universal_product()?.trace_product(t))
    };
    let bound = match hyp {
        Hypothesis::Iid | Hypothesis::SymBoth => symmetric_bound()?,
        Hypothesis::SymA => {
            let invariant = twirl(t, layout.n, layout.d_a * layout.d_b)?.frobenius_distance(t) <= 1e-10;
            if invariant {
                symmetric_bound()?
            } else {
                let wa = universal_state(layout.n, layout.d_a)?;
                let k = HermitianOperator::new(layout.reduce_b(t.matrix(), wa.state.matrix()))?;
                g_f64(layout.n, layout.d_a)? * k.eig()?.lambda_max()
            }
        }
        Hypothesis::Ind | Hypothesis::Mar => top,
    };
    Ok(bound.min(top).max(0.0))
}

/// Bracket on sup tr[(σ⊗τ)T] over the alternative set of `hyp`. The marginal hypothesis needs the marginals.
pub fn worst_case_type2_bounds(
    test: &Test,
    hyp: Hypothesis,
    marginals: Option<(&DensityMatrix, &DensityMatrix)>,
    opts: &BracketOpts,
) -> Result<(f64, f64)> {
    let layout = test.layout();
    let upper = type2_upper(test, hyp, marginals)?;
    if hyp == Hypothesis::Mar {
        return Ok((upper, upper));
    }
    let t = test.op().matrix();
    let mixed_a = CMatrix::identity(layout.dim_a(), layout.dim_a()) * c(1.0 / layout.dim_a() as f64);
    let mixed_b = CMatrix::identity(layout.dim_b(), layout.dim_b()) * c(1.0 / layout.dim_b() as f64);
    let mut lower = pair_value(&layout, t, &mixed_a, &mixed_b);
    if let Some(m) = marginals {
        lower = lower.max(marginal_powers(&layout, m).trace_product(test.op()));
    }
    if let Some(best) = hardest_alternative(&layout, t, hyp, opts)? {
        lower = lower.max(best.value);
    }
    let lower = lower.clamp(0.0, 1.0);
    Ok((lower, upper.max(lower)))
}

/// Type-I error and worst-case type-II bracket of a test.
pub fn evaluate_test(rho: &BipartiteState, test: &Test, hyp: Hypothesis, opts: &BracketOpts) -> Result<ErrorPair> {
    let ma = rho.marginal_a();
    let mb = rho.marginal_b();
    let (lo, hi) = worst_case_type2_bounds(test, hyp, Some((&ma, &mb)), opts)?;
    Ok(ErrorPair { type1: test.type1(&rho.tensor_power(test.n())), type2_lower: lo, type2_upper: hi })
}

/// PPT criterion where it is conclusive (dimension ≤ 6), diagonal states otherwise.
pub fn is_separable(rho: &BipartiteState) -> Option<bool> {
    if rho.is_diagonal() {
        return Some(true);
    }
    if rho.dim() > 6 {
        return None;
    }
    let (da, db) = (rho.d_a(), rho.d_b());
    let m = rho.state().matrix();
    let pt = CMatrix::from_fn(da * db, da * db, |i, j| {
        let (a, b) = (i / db, i % db);
        let (ap, bp) = (j / db, j % db);
        m[(a * db + bp, ap * db + b)]
    });
    let s = HermitianOperator::new(pt).ok()?.eig().ok()?;
    Some(s.lambda_min() >= -PSD_SLACK)
}

fn candidate_alternatives(
    rho: &BipartiteState,
    layout: &Layout,
    hyp: Hypothesis,
    seed: u64,
) -> Result<Vec<DensityMatrix>> {
    let n = layout.n;
    let mut out = vec![rho.marginal_a().tensor_power(n).tensor(&rho.marginal_b().tensor_power(n))];
    // rmi minimizers at order 1/2 give i.i.d. alternatives that are hard to separate from ρ
    let opts = OptimizerOpts { restarts: 1, seed, ..OptimizerOpts::default() };
    if let Ok(m) = rmi(rho, 0.5, RmiVariant::petz(crate::rmi::Minimization::DownDown), &opts) {
        out.push(m.sigma_a.tensor_power(n).tensor(&m.tau_b.tensor_power(n)));
    }
    if hyp != Hypothesis::Iid {
        let wa = universal_state(n, layout.d_a)?;
        let wb = universal_state(n, layout.d_b)?;
        out.push(wa.state.tensor(&wb.state));
    }
    let mut out: Vec<DensityMatrix> = out
        .into_iter()
        .map(|grouped| {
            let b_dim = layout.dim_b();
            let m = grouped.matrix();
            let reordered = CMatrix::from_fn(layout.dim(), layout.dim(), |i, j| {
                let (xi, yi) = layout.split(i);
                let (xj, yj) = layout.split(j);
                m[(xi * b_dim + yi, xj * b_dim + yj)]
            });
            DensityMatrix::from_op_unchecked(HermitianOperator::from_hermitian_unchecked(reordered))
        })
        .collect();
    if (hyp == Hypothesis::Ind || n == 1) && is_separable(rho) == Some(true) {
        // ρ^{⊗n} is then a mixture of feasible alternatives, so every feasible test has tr[ρ^{⊗n} T] ≤ μ
        out.push(rho.tensor_power(n));
    }
    Ok(out)
}

fn candidate_tests(rho: &BipartiteState, layout: &Layout, mu: f64) -> Result<Vec<HermitianOperator>> {
    let n = layout.n;
    let mut tests = Vec::new();
    if !(mu > 0.0) {
        return Ok(tests);
    }
    let rate = -mu.ln() / n as f64;
    for k in 1..=19 {
        let s = 0.05 * k as f64;
        if let Ok(t) = build_direct_test(rho, n, rate, s) {
            tests.push(t.op);
        }
    }
    for s_hat in [1.1, 1.25, 1.5, 2.0, 3.0, 5.0, 10.0] {
        if let Ok(t) = build_sc_test(rho, n, rate, s_hat, None) {
            tests.push(t.op);
        }
    }
    let rho_n = rho.tensor_power(n);
    let omega = DensityMatrix::from_op_unchecked(layout.universal_product()?);
    let product = DensityMatrix::from_op_unchecked(marginal_powers(layout, (&rho.marginal_a(), &rho.marginal_b())));
    let g = g_f64(n, layout.d_a)? * g_f64(n, layout.d_b)?;
    let levels = (g.log2().ceil() as i32 + 4).max(8);
    let basis = pinched_basis(rho, layout)?;
    for j in 0..=levels {
        let level = mu * 2f64.powi(-j);
        for alt in [&omega, &product] {
            if let Ok(np) = neyman_pearson_min_type1(&rho_n, alt, level) {
                tests.push(np.test);
            }
        }
        let (_, w, _) = classical_neyman_pearson(&basis.p, &basis.q, level)?;
        tests.push(diagonal_in_basis(&basis.vectors, &w));
    }
    Ok(tests)
}

/// Rounds of adding the hardest alternative against the current Neyman–Pearson test.
const COLUMN_ROUNDS: usize = 8;
const LINE_SEARCH_EVALS: usize = 24;

fn np_lower(rho_n: &DensityMatrix, alt: &DensityMatrix, mu: f64) -> Result<(f64, Option<HermitianOperator>)> {
    match neyman_pearson_min_type1(rho_n, alt, mu) {
        Ok(np) => Ok((np.type1, Some(np.test))),
        Err(Error::NotConverged { best, residual }) => Ok(((best - residual).max(0.0), None)),
        Err(e) => Err(e),
    }
}

/// Certified bracket on the minimum type-I error over tests whose worst-case type-II error under `hyp` is at most μ.
///
/// Lower bounds are Neyman–Pearson values against mixtures of feasible alternatives, grown by
/// column generation. Upper bounds are type-I errors of candidate tests rescaled by a certified
/// worst-case type-II bound so that they become feasible.
pub fn min_type1_bounds(rho: &BipartiteState, n: usize, mu: f64, hyp: Hypothesis, opts: &BracketOpts) -> Result<Bracket> {
    check_level(mu)?;
    let layout = Layout::of(rho, n)?;
    if mu >= 1.0 {
        return Ok(Bracket::exact(0.0));
    }
    let rho_n = rho.tensor_power(n);
    let ma = rho.marginal_a();
    let mb = rho.marginal_b();
    if hyp == Hypothesis::Mar {
        let alt = DensityMatrix::from_op_unchecked(marginal_powers(&layout, (&ma, &mb)));
        let np = neyman_pearson_min_type1(&rho_n, &alt, mu)?;
        return Ok(Bracket::exact(np.type1));
    }
    // twirling a test keeps its type-I error and makes the SymA and SymBoth worst cases coincide
    let bound_hyp = if hyp == Hypothesis::SymA { Hypothesis::SymBoth } else { hyp };
    let mut upper = (1.0 - mu).max(0.0);
    let certify = |op: HermitianOperator, upper: &mut f64| -> Result<()> {
        if hyp == Hypothesis::Ind {
            return Ok(());
        }
        let test = Test { op, layout };
        let beta = type2_upper(&test, bound_hyp, Some((&ma, &mb)))?;
        let scale = if beta > mu { mu / beta } else { 1.0 };
        let accepted = scale * test.op.trace_product(rho_n.op());
        *upper = upper.min((1.0 - accepted).clamp(0.0, 1.0));
        Ok(())
    };
    for op in candidate_tests(rho, &layout, mu)? {
        certify(op, &mut upper)?;
    }
    if hyp != Hypothesis::Ind {
        let diag = rho_n.op().diagonal_real();
        let (_, t) = crate::classical::best_exchangeable_test(&layout, &diag, mu, true)?;
        certify(HermitianOperator::from_real_diagonal(&t), &mut upper)?;
    }

    let mut lower = 0.0f64;
    let mut mix: Option<DensityMatrix> = None;
    for alt in candidate_alternatives(rho, &layout, hyp, opts.seed)? {
        let (v, _) = np_lower(&rho_n, &alt, mu)?;
        if mix.is_none() || v > lower {
            lower = lower.max(v);
            mix = Some(alt);
        }
    }
    let mut mix = mix.expect("the marginal product is always a candidate");
    let oracle_opts = BracketOpts { restarts: opts.restarts.min(3), max_rounds: opts.max_rounds.min(30), ..*opts };
    for _ in 0..COLUMN_ROUNDS {
        let (v, test) = np_lower(&rho_n, &mix, mu)?;
        lower = lower.max(v);
        let Some(test) = test else { break };
        certify(test.clone(), &mut upper)?;
        if lower >= upper - 1e-12 {
            break;
        }
        let Some(alt) = hardest_alternative(&layout, test.matrix(), hyp, &oracle_opts)? else { break };
        if alt.value <= mu * (1.0 + 1e-9) {
            break;
        }
        let column = DensityMatrix::from_op_unchecked(layout.product(&alt.sigma, &alt.tau));
        let eval = |g: f64| np_lower(&rho_n, &mix.mix(&column, g), mu).map(|r| r.0);
        let (mut a, mut b) = (0.0, 1.0);
        let phi = 0.5 * (5f64.sqrt() - 1.0);
        let (mut x1, mut x2) = (b - phi * (b - a), a + phi * (b - a));
        let (mut f1, mut f2) = (eval(x1)?, eval(x2)?);
        let mut best = (eval(1.0)?, 1.0);
        for _ in 0..LINE_SEARCH_EVALS {
            if f1 > best.0 {
                best = (f1, x1);
            }
            if f2 > best.0 {
                best = (f2, x2);
            }
            if f1 >= f2 {
                b = x2;
                x2 = x1;
                f2 = f1;
                x1 = b - phi * (b - a);
                f1 = eval(x1)?;
            } else {
                a = x1;
                x1 = x2;
                f1 = f2;
                x2 = a + phi * (b - a);
                f2 = eval(x2)?;
            }
        }
        if best.0 <= lower + 1e-12 {
            break;
        }
        lower = best.0;
        mix = mix.mix(&column, best.1);
    }
    Ok(Bracket { lower, upper })
}

/// Random permutation-invariant state on n copies of C^d, built by twirling a random state.
pub fn random_symmetric_state(rng: &mut StdRng, n: usize, d: usize) -> Result<DensityMatrix> {
    let dim = d.pow(n as u32);
    let raw = crate::random::random_density_matrix(rng, dim);
    let t = twirl(raw.op(), n, d)?;
    DensityMatrix::normalized(&t)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn diag(p: &[f64]) -> DensityMatrix {
        DensityMatrix::diagonal(p).unwrap()
    }

    fn copy_state(p: f64) -> BipartiteState {
        BipartiteState::new(diag(&[p, 0.0, 0.0, 1.0 - p]), 2, 2).unwrap()
    }

    #[test]
    fn np_examples() {
        let r = diag(&[0.75, 0.25]);
        let s = diag(&[0.5, 0.5]);
        assert!((neyman_pearson_min_type1(&r, &s, 0.5).unwrap().type1 - 0.25).abs() < 1e-15);
        assert_eq!(neyman_pearson_min_type1(&r, &s, 1.0).unwrap().type1, 0.0);
        assert_eq!(neyman_pearson_min_type1(&r, &s, 0.0).unwrap().type1, 1.0);
        assert!(neyman_pearson_min_type1(&r, &s, 1.5).is_err());
    }

    #[test]
    fn np_noncommuting_meets_level_with_small_gap() {
        let mut rng = rng_from_seed(5);
        let r = crate::random::random_density_matrix(&mut rng, 4);
        let s = crate::random::random_density_matrix(&mut rng, 4);
        for mu in [0.01, 0.2, 0.7] {
            let np = neyman_pearson_min_type1(&r, &s, mu).unwrap();
            assert!((np.test.trace_product(s.op()) - mu).abs() < 1e-12);
            assert!(np.duality_gap <= NP_GAP_TOL);
            Test::new(np.test, Layout::new(1, 2, 2).unwrap()).unwrap();
        }
    }

    #[test]
    fn layout_roundtrip() {
        let l = Layout::new(2, 2, 3).unwrap();
        for z in 0..l.dim() {
            let (x, y) = l.split(z);
            assert_eq!(l.join(x, y), z);
        }
        let a = DensityMatrix::diagonal(&[0.1, 0.2, 0.3, 0.4]).unwrap();
        let b = crate::random::random_density_matrix(&mut rng_from_seed(1), 9);
        let p = l.product(a.matrix(), b.matrix());
        assert!((CMatrix::from(l.reduce_a(p.matrix(), &CMatrix::identity(9, 9))) - a.matrix()).norm() < 1e-14);
    }

    #[test]
    fn layout_matches_tensor_power_order() {
        let mut rng = rng_from_seed(8);
        let a = crate::random::random_density_matrix(&mut rng, 2);
        let b = crate::random::random_density_matrix(&mut rng, 2);
        let l = Layout::new(2, 2, 2).unwrap();
        let via_layout = l.product(a.tensor_power(2).matrix(), b.tensor_power(2).matrix());
        let via_copies = a.tensor(&b).tensor_power(2);
        assert!(via_layout.frobenius_distance(via_copies.op()) < 1e-15);
    }

    #[test]
    fn tilt_example() {
        let t = tilt(&[0.75, 0.25], &[0.5, 0.5], 2.0).unwrap();
        assert!((t[0] - 0.9).abs() < 1e-15 && (t[1] - 0.1).abs() < 1e-15);
        assert_eq!(tilt(&[0.3, 0.7], &[0.3, 0.7], 3.0).unwrap().len(), 2);
    }

    #[test]
    fn pinched_pair_single_copy() {
        let rho = crate::random::random_correlated_state(&mut rng_from_seed(2), 2, 2);
        let (p, q) = pinched_pair(&rho, 1).unwrap();
        assert!(q.iter().all(|x| (x - 0.25).abs() < 1e-14));
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn trivial_test_worst_case() {
        let l = Layout::new(2, 2, 2).unwrap();
        let t = Test::new(HermitianOperator::identity(16).scale(0.3), l).unwrap();
        for hyp in [Hypothesis::Iid, Hypothesis::SymBoth, Hypothesis::SymA, Hypothesis::Ind] {
            let (lo, hi) = worst_case_type2_bounds(&t, hyp, None, &BracketOpts::default()).unwrap();
            assert!((lo - 0.3).abs() < 1e-12 && hi >= 0.3 - 1e-12, "{hyp}: {lo} {hi}");
        }
    }

    #[test]
    fn direct_test_guarantee() {
        let rho = copy_state(0.75);
        let rate = 0.1;
        let t = build_direct_test(&rho, 2, rate, 0.6).unwrap();
        let (_, hi) = worst_case_type2_bounds(&t, Hypothesis::SymBoth, None, &BracketOpts::default()).unwrap();
        assert!(hi <= (-2.0 * rate).exp() * (1.0 + 1e-9));
        let mut rng = rng_from_seed(3);
        for _ in 0..20 {
            let s = random_symmetric_state(&mut rng, 2, 2).unwrap();
            let u = random_symmetric_state(&mut rng, 2, 2).unwrap();
            let alt = t.layout().product(s.matrix(), u.matrix());
            assert!(alt.trace_product(t.op()) <= (-2.0 * rate).exp() * (1.0 + 1e-9));
        }
    }

    #[test]
    fn sc_test_scaling() {
        let rho = crate::random::random_correlated_state(&mut rng_from_seed(4), 2, 2);
        let a = build_sc_test(&rho, 2, 0.3, 2.0, Some(0.3)).unwrap();
        let b = build_sc_test(&rho, 2, 0.3, 2.0, None).unwrap();
        assert_eq!(a, b);
        let (_, hi) = worst_case_type2_bounds(&b, Hypothesis::SymBoth, None, &BracketOpts::default()).unwrap();
        assert!(hi <= (-0.6f64).exp() * (1.0 + 1e-9));
        assert!(build_sc_test(&rho, 2, 0.3, 2.0, Some(0.5)).is_err());
    }

    #[test]
    fn separable_ind_is_one_minus_mu() {
        let rho = copy_state(0.75);
        for mu in [0.1, 0.5] {
            let b = min_type1_bounds(&rho, 1, mu, Hypothesis::Ind, &BracketOpts::default()).unwrap();
            assert!((b.lower - (1.0 - mu)).abs() < 1e-9 && (b.upper - (1.0 - mu)).abs() < 1e-9, "{b:?}");
        }
    }

    #[test]
    fn large_mu_is_zero() {
        let rho = copy_state(0.75);
        assert_eq!(min_type1_bounds(&rho, 2, 1.0, Hypothesis::SymBoth, &BracketOpts::default()).unwrap(), Bracket::exact(0.0));
    }
}
