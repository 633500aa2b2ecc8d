//! Rényi mutual informations: non-minimized, minimized over τ_B, and minimized over both factors.
//!
//! Minimized variants use alternating partial updates. For fixed σ_A the Petz objective is
//! minimized exactly by τ_B ∝ (tr_A[ρ^α (σ_A^{1−α} ⊗ 1)])^{1/α}; the sandwiched step
//! τ_B ∝ (τ^{(α−1)/2} N τ^{(α−1)/2})^{1/α} with N = tr_A[(ω^γ ρ ω^γ)^α] is exact when everything
//! commutes and is guarded by backtracking otherwise, so every accepted step is non-increasing.

use serde::{Deserialize, Serialize};

use crate::divergences::{
    log_trace_power, petz_spec, relative_entropy_variance, sandwich, sandwiched_spec, DivergenceFamily,
};
use crate::error::{Error, Result};
use crate::linalg::{c, partial_trace_matrix, CMatrix, HermitianOperator, Spectrum, Subsystem};
use crate::random::{random_density_matrix, rng_from_seed};
use crate::state::{BipartiteState, DensityMatrix};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Minimization {
    /// Both factors fixed to the marginals.
    UpUp,
    /// σ_A = ρ_A, minimized over τ_B.
    UpDown,
    /// Minimized over σ_A and τ_B.
    DownDown,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RmiVariant {
    pub kind: Minimization,
    pub family: DivergenceFamily,
}

impl RmiVariant {
    pub const fn new(kind: Minimization, family: DivergenceFamily) -> Self {
        Self { kind, family }
    }

    pub const fn petz(kind: Minimization) -> Self {
        Self::new(kind, DivergenceFamily::Petz)
    }

    pub const fn sandwiched(kind: Minimization) -> Self {
        Self::new(kind, DivergenceFamily::Sandwiched)
    }

    pub fn all() -> [RmiVariant; 6] {
        use Minimization::*;
        [
            Self::petz(UpUp),
            Self::petz(UpDown),
            Self::petz(DownDown),
            Self::sandwiched(UpUp),
            Self::sandwiched(UpDown),
            Self::sandwiched(DownDown),
        ]
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptimizerOpts {
    pub tol: f64,
    pub max_iter: usize,
    pub restarts: usize,
    pub seed: u64,
    pub allow_experimental: bool,
}

impl Default for OptimizerOpts {
    fn default() -> Self {
        Self { tol: 1e-10, max_iter: 10_000, restarts: 5, seed: 0, allow_experimental: false }
    }
}

#[derive(Clone, Debug)]
pub struct MinimizerResult {
    /// Divergence of ρ from σ_A ⊗ τ_B. At α = ∞ for minimized variants this is an
    /// extrapolated estimate lying inside `bracket`.
    pub value: f64,
    pub sigma_a: DensityMatrix,
    pub tau_b: DensityMatrix,
    pub iterations: usize,
    pub residual: f64,
    pub restarts_used: usize,
    /// Certified lower and upper bounds, when the value is not attained by the pair.
    pub bracket: Option<(f64, f64)>,
}

/// One alternating run from a given start.
#[derive(Clone, Debug)]
pub struct Run {
    pub sigma_a: DensityMatrix,
    pub tau_b: DensityMatrix,
    pub value: f64,
    pub iterations: usize,
    pub residual: f64,
    pub converged: bool,
    /// Objective after every iteration, starting with the initial pair.
    pub history: Vec<f64>,
}

/// Floor applied to eigenvalues of iterates before they feed the next update.
pub const ITERATE_FLOOR: f64 = 1e-14;
/// Relative eigenvalue below which a factor is projected off that direction when that lowers the objective.
pub const SNAP_RATIO: f64 = 1e-4;
/// Tolerance stated for the extrapolated α = ∞ value.
pub const INFINITE_ORDER_TOL: f64 = 1e-3;
/// Finite orders used to extrapolate α = ∞.
pub const INFINITE_ORDER_SAMPLES: (f64, f64) = (64.0, 256.0);
/// Step and agreement threshold of the finite-difference cross-check on derivatives.
pub const DERIVATIVE_FD_STEP: f64 = 1e-4;
pub const DERIVATIVE_FD_TOL: f64 = 1e-4;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Side {
    Left,
    Right,
    Central,
}

fn unsupported(variant: RmiVariant, alpha: f64) -> Error {
    Error::Unsupported(format!("{:?}/{:?} at order {alpha}", variant.family, variant.kind))
}

/// Checks the order against the documented range of the variant.
pub fn check_range(variant: RmiVariant, alpha: f64, opts: &OptimizerOpts) -> Result<()> {
    if alpha.is_nan() {
        return Err(Error::InvalidInput("order is NaN".into()));
    }
    let ok = match (variant.family, variant.kind) {
        (DivergenceFamily::Petz, Minimization::UpUp) => alpha >= 0.0 && alpha.is_finite(),
        (DivergenceFamily::Sandwiched, Minimization::UpUp) => alpha > 0.0,
        (DivergenceFamily::Petz, _) => alpha > 0.0 && alpha <= 2.0,
        (DivergenceFamily::Sandwiched, _) => alpha >= 1.0 || (alpha >= 0.5 && opts.allow_experimental),
    };
    if ok {
        Ok(())
    } else {
        Err(unsupported(variant, alpha))
    }
}

/// Eigenvalue floor and renormalization.
fn floored(s: &Spectrum) -> Spectrum {
    let mut values: Vec<f64> = s.values.iter().map(|&v| v.max(ITERATE_FLOOR)).collect();
    let t: f64 = values.iter().sum();
    values.iter_mut().for_each(|v| *v /= t);
    Spectrum { values, vectors: s.vectors.clone() }
}

/// Spectrum of A ⊗ B from the spectra of the factors.
pub(crate) fn product_spectrum(a: &Spectrum, b: &Spectrum) -> Spectrum {
    let mut pairs: Vec<(f64, usize, usize)> = Vec::with_capacity(a.dim() * b.dim());
    for i in 0..a.dim() {
        for j in 0..b.dim() {
            pairs.push((a.values[i] * b.values[j], i, j));
        }
    }
    pairs.sort_by(|x, y| x.0.total_cmp(&y.0));
    let (da, db) = (a.dim(), b.dim());
    let mut vectors = CMatrix::zeros(da * db, da * db);
    for (k, &(_, i, j)) in pairs.iter().enumerate() {
        for r in 0..da {
            let ar = a.vectors[(r, i)];
            for s in 0..db {
                vectors[(r * db + s, k)] = ar * b.vectors[(s, j)];
            }
        }
    }
    Spectrum { values: pairs.iter().map(|p| p.0).collect(), vectors }
}

/// Divergence of ρ from σ ⊗ τ given spectra.
struct Objective<'a> {
    rho: &'a BipartiteState,
    rho_spec: Spectrum,
    family: DivergenceFamily,
    alpha: f64,
    /// ρ^α for the Petz updates.
    rho_alpha: CMatrix,
}

impl<'a> Objective<'a> {
    fn new(rho: &'a BipartiteState, family: DivergenceFamily, alpha: f64) -> Result<Self> {
        let rho_spec = rho.state().eig()?;
        let rho_alpha = match family {
            DivergenceFamily::Petz => rho_spec.on_support(|x| x.powf(alpha)).into_matrix(),
            DivergenceFamily::Sandwiched => CMatrix::zeros(0, 0),
        };
        Ok(Self { rho, rho_spec, family, alpha, rho_alpha })
    }

    fn value_spec(&self, ss: &Spectrum, st: &Spectrum) -> Result<f64> {
        let sw = product_spectrum(ss, st);
        match self.family {
            DivergenceFamily::Petz => Ok(petz_spec(&self.rho_spec, &sw, self.alpha)),
            DivergenceFamily::Sandwiched => sandwiched_spec(self.rho.state(), &self.rho_spec, &sw, self.alpha),
        }
    }

    fn dims(&self) -> (usize, usize) {
        (self.rho.d_a(), self.rho.d_b())
    }

    /// Gradient of the sandwiched divergence with respect to the factor on `target`,
    /// both factors full rank.
    fn sandwiched_gradient(&self, ss: &Spectrum, st: &Spectrum, target: Subsystem) -> Result<HermitianOperator> {
        let (da, db) = self.dims();
        let a = self.alpha;
        let gamma = (1.0 - a) / (2.0 * a);
        let sw = product_spectrum(ss, st);
        let w = sw.compose(&sw.values.iter().map(|x| x.powf(gamma)).collect::<Vec<_>>());
        let rho = self.rho.state().matrix();
        let sx = HermitianOperator::from_hermitian_unchecked(&w * rho * &w).eig()?;
        let lmax = sx.lambda_max();
        let supp = sx.support_indices();
        let q_hat: f64 = supp.iter().map(|&i| (sx.values[i] / lmax).powf(a)).sum();
        let xp = sx.on_support(|x| (x / lmax).powf(a - 1.0)).into_matrix();
        let half = rho * &w * &xp;
        let b = &half + half.adjoint();
        let bt = sw.vectors.adjoint() * b * &sw.vectors;
        let n = sw.dim();
        let scale = a / ((a - 1.0) * lmax * q_hat);
        let g = CMatrix::from_fn(n, n, |i, j| bt[(i, j)] * c(scale * power_divided_difference(sw.values[i], sw.values[j], gamma)));
        let g = &sw.vectors * g * sw.vectors.adjoint();
        let (weight, traced) = match target {
            Subsystem::B => (ss.compose(&ss.values).kronecker(&CMatrix::identity(db, db)), Subsystem::A),
            Subsystem::A => (CMatrix::identity(da, da).kronecker(&st.compose(&st.values)), Subsystem::B),
        };
        Ok(HermitianOperator::from_hermitian_unchecked(partial_trace_matrix(&(weight * g), traced, da, db)?))
    }

    /// Proposed update of the factor on `target` given the other factor and the current target.
    fn propose(&self, target: Subsystem, other: &Spectrum, current: &Spectrum) -> Result<Option<DensityMatrix>> {
        let (da, db) = self.dims();
        let a = self.alpha;
        let embed = |m: &CMatrix| -> CMatrix {
            match target {
                Subsystem::B => m.kronecker(&CMatrix::identity(db, db)),
                Subsystem::A => CMatrix::identity(da, da).kronecker(m),
            }
        };
        let traced = match target {
            Subsystem::B => Subsystem::A,
            Subsystem::A => Subsystem::B,
        };
        let kernel = match self.family {
            DivergenceFamily::Petz => {
                let half = embed(other.on_support(|x| x.powf((1.0 - a) / 2.0)).matrix());
                let m = &half * &self.rho_alpha * &half;
                HermitianOperator::from_hermitian_unchecked(partial_trace_matrix(&m, traced, da, db)?)
            }
            DivergenceFamily::Sandwiched => {
                let gamma = (1.0 - a) / (2.0 * a);
                let (sa, sb) = match target {
                    Subsystem::B => (other, current),
                    Subsystem::A => (current, other),
                };
                let sw = product_spectrum(sa, sb);
                let x = sandwich(self.rho.state().matrix(), &sw, gamma);
                let sx = x.eig()?;
                let lmax = sx.lambda_max();
                if !(lmax > 0.0) {
                    return Ok(None);
                }
                let xa = sx.on_support(|v| (v / lmax).powf(a));
                let n = partial_trace_matrix(xa.matrix(), traced, da, db)?;
                let cmax = current.lambda_max();
                let pw = current.on_support(|v| (v / cmax).powf((a - 1.0) / 2.0));
                HermitianOperator::from_hermitian_unchecked(pw.matrix() * n * pw.matrix())
            }
        };
        let sk = kernel.eig()?;
        let kmax = sk.lambda_max();
        if !(kmax > 0.0) || !kmax.is_finite() {
            return Ok(None);
        }
        // the 1/α root lifts eigenvalues far below the support tolerance, so keep every positive one
        let w: Vec<f64> = sk.values.iter().map(|&v| if v > 0.0 { (v / kmax).powf(1.0 / a) } else { 0.0 }).collect();
        let cand = HermitianOperator::from_hermitian_unchecked(sk.compose(&w));
        let tr = cand.trace();
        if !(tr > 0.0) || !tr.is_finite() {
            return Ok(None);
        }
        Ok(Some(DensityMatrix::from_op_unchecked(cand.scale(1.0 / tr))))
    }
}

/// Divided difference of x ↦ x^p at (a, b).
fn power_divided_difference(a: f64, b: f64, p: f64) -> f64 {
    if (a - b).abs() <= 1e-12 * a.max(b) {
        let m = 0.5 * (a + b);
        return p * m.powf(p - 1.0);
    }
    b.powf(p) * (p * (a / b).ln()).exp_m1() / (a - b)
}

struct Iterate {
    sigma: DensityMatrix,
    tau: DensityMatrix,
    sigma_spec: Spectrum,
    tau_spec: Spectrum,
    value: f64,
}

impl Iterate {
    fn new(obj: &Objective, sigma: DensityMatrix, tau: DensityMatrix) -> Result<Self> {
        let sigma_spec = sigma.eig()?;
        let tau_spec = tau.eig()?;
        let value = obj.value_spec(&sigma_spec, &tau_spec)?;
        Ok(Self { sigma, tau, sigma_spec, tau_spec, value })
    }
}

const BACKTRACK_STEPS: usize = 8;
const MIRROR_STEPS: usize = 40;
/// Block stationarity (Frank–Wolfe gap of the sandwiched objective) required for convergence.
pub const STATIONARITY_TOL: f64 = 1e-6;

impl Iterate {
    fn target_spec(&self, target: Subsystem) -> &Spectrum {
        match target {
            Subsystem::A => &self.sigma_spec,
            Subsystem::B => &self.tau_spec,
        }
    }

    fn try_replace(&mut self, obj: &Objective, target: Subsystem, cand: DensityMatrix) -> Result<bool> {
        let cs = cand.eig()?;
        let v = match target {
            Subsystem::A => obj.value_spec(&cs, &self.tau_spec)?,
            Subsystem::B => obj.value_spec(&self.sigma_spec, &cs)?,
        };
        if !(v <= self.value) {
            return Ok(false);
        }
        match target {
            Subsystem::A => {
                self.sigma = cand;
                self.sigma_spec = cs;
            }
            Subsystem::B => {
                self.tau = cand;
                self.tau_spec = cs;
            }
        }
        self.value = v;
        Ok(true)
    }

    /// Replace the free factors by their projections onto eigenvalues above SNAP_RATIO·λ_max
    /// if that does not increase the objective. Product eigenvalues cross the support
    /// tolerance while the factor eigenvalues are still around its square root, so
    /// minimizers on the boundary are otherwise approached only geometrically.
    fn try_snap(&mut self, obj: &Objective, kind: Minimization) -> Result<()> {
        let snap = |s: &Spectrum| -> Option<DensityMatrix> {
            let top = s.lambda_max();
            if !s.values.iter().any(|&v| v > 0.0 && v < SNAP_RATIO * top) {
                return None;
            }
            let w: Vec<f64> = s.values.iter().map(|&v| if v >= SNAP_RATIO * top { v } else { 0.0 }).collect();
            let m = HermitianOperator::from_hermitian_unchecked(s.compose(&w));
            let tr = m.trace();
            Some(DensityMatrix::from_op_unchecked(m.scale(1.0 / tr)))
        };
        let sigma = if kind == Minimization::DownDown { snap(&self.sigma_spec) } else { None };
        let tau = snap(&self.tau_spec);
        let mut pairs = Vec::new();
        if let Some(s) = &sigma {
            pairs.push((s.clone(), self.tau.clone()));
        }
        if let Some(t) = &tau {
            pairs.push((self.sigma.clone(), t.clone()));
            if let Some(s) = &sigma {
                pairs.push((s.clone(), t.clone()));
            }
        }
        for (s, t) in pairs {
            let cand = Iterate::new(obj, s, t)?;
            if cand.value <= self.value {
                *self = cand;
            }
        }
        Ok(())
    }
}

/// Replace one factor by the proposal if it does not increase the objective, backtracking
/// along the segment towards it otherwise. Sandwiched blocks then take a mirror-descent step
/// along the exact gradient. Returns the block stationarity gap (zero for Petz, whose update
/// is the exact block minimizer).
fn block_step(obj: &Objective, it: &mut Iterate, target: Subsystem) -> Result<f64> {
    let other_of = |it: &Iterate| match target {
        Subsystem::A => floored(&it.tau_spec),
        Subsystem::B => floored(&it.sigma_spec),
    };
    let current = floored(it.target_spec(target));
    if let Some(proposal) = obj.propose(target, &other_of(it), &current)? {
        let old = match target {
            Subsystem::A => it.sigma.clone(),
            Subsystem::B => it.tau.clone(),
        };
        let mut t = 1.0;
        for _ in 0..=BACKTRACK_STEPS {
            let cand = if t == 1.0 { proposal.clone() } else { old.mix(&proposal, t) };
            if it.try_replace(obj, target, cand)? || obj.family == DivergenceFamily::Petz {
                break;
            }
            t *= 0.5;
        }
    }
    if obj.family == DivergenceFamily::Petz || obj.alpha == 1.0 {
        return Ok(0.0);
    }
    let current = floored(it.target_spec(target));
    let other = other_of(it);
    let (ss, st) = match target {
        Subsystem::A => (&current, &other),
        Subsystem::B => (&other, &current),
    };
    let g = obj.sandwiched_gradient(ss, st, target)?;
    let gs = g.eig()?;
    let cur_op = HermitianOperator::from_hermitian_unchecked(current.compose(&current.values));
    let gap = (cur_op.trace_product(&g) - gs.lambda_min()).max(0.0);
    let spread = gs.lambda_max() - gs.lambda_min();
    if gap < STATIONARITY_TOL || !(spread > 0.0) {
        return Ok(gap);
    }
    let log_cur = current.compose(&current.values.iter().map(|x| x.ln()).collect::<Vec<_>>());
    let mut eta = 1.0 / spread;
    for _ in 0..MIRROR_STEPS {
        let h = HermitianOperator::from_hermitian_unchecked(&log_cur - g.matrix() * c(eta));
        let sh = h.eig()?;
        let top = sh.lambda_max();
        let w: Vec<f64> = sh.values.iter().map(|x| (x - top).exp()).collect();
        let cand = HermitianOperator::from_hermitian_unchecked(sh.compose(&w));
        let cand = DensityMatrix::from_op_unchecked(cand.scale(1.0 / cand.trace()));
        if it.try_replace(obj, target, cand)? {
            break;
        }
        eta *= 0.5;
    }
    Ok(gap)
}

/// Alternating minimization from one starting pair.
pub fn minimize_from(
    rho: &BipartiteState,
    alpha: f64,
    variant: RmiVariant,
    sigma0: DensityMatrix,
    tau0: DensityMatrix,
    opts: &OptimizerOpts,
) -> Result<Run> {
    check_range(variant, alpha, opts)?;
    if !alpha.is_finite() {
        return Err(Error::InvalidInput("alternating runs need a finite order".into()));
    }
    let obj = Objective::new(rho, variant.family, alpha)?;
    run(&obj, variant.kind, sigma0, tau0, opts)
}

fn run(obj: &Objective, kind: Minimization, sigma0: DensityMatrix, tau0: DensityMatrix, opts: &OptimizerOpts) -> Result<Run> {
    let mut it = Iterate::new(obj, sigma0, tau0)?;
    let mut history = vec![it.value];
    let mut residual = f64::INFINITY;
    let mut converged = false;
    let mut iterations = 0;
    if kind != Minimization::UpUp {
        for k in 1..=opts.max_iter {
            let before = it.value;
            let mut gap = 0.0f64;
            if kind == Minimization::DownDown {
                gap = gap.max(block_step(obj, &mut it, Subsystem::A)?);
            }
            gap = gap.max(block_step(obj, &mut it, Subsystem::B)?);
            it.try_snap(obj, kind)?;
            iterations = k;
            history.push(it.value);
            residual = if before.is_finite() { (before - it.value).abs() } else { f64::INFINITY };
            if residual < opts.tol && gap < STATIONARITY_TOL {
                converged = true;
                break;
            }
        }
    } else {
        residual = 0.0;
        converged = true;
    }
    Ok(Run { sigma_a: it.sigma, tau_b: it.tau, value: it.value, iterations, residual, converged, history })
}

/// Starting pairs: the marginals, then seeded random full-support states.
fn starts(rho: &BipartiteState, kind: Minimization, opts: &OptimizerOpts) -> Vec<(DensityMatrix, DensityMatrix)> {
    let (ra, rb) = (rho.marginal_a(), rho.marginal_b());
    let mut out = vec![(ra.clone(), rb.clone())];
    if kind == Minimization::UpUp {
        return out;
    }
    let mut rng = rng_from_seed(opts.seed);
    for _ in 0..opts.restarts {
        let s = random_density_matrix(&mut rng, rho.d_a());
        let t = random_density_matrix(&mut rng, rho.d_b());
        let s = if kind == Minimization::DownDown { s } else { ra.clone() };
        out.push((s, t));
    }
    out
}

fn best_run(runs: Vec<Run>) -> Option<Run> {
    let mut best: Option<Run> = None;
    for r in runs {
        best = match best {
            None => Some(r),
            Some(b) => {
                let better = r.value < b.value - 1e-12
                    || ((r.value - b.value).abs() <= 1e-12 && r.iterations < b.iterations);
                Some(if better { r } else { b })
            }
        };
    }
    best
}

fn solve_finite(rho: &BipartiteState, alpha: f64, variant: RmiVariant, opts: &OptimizerOpts, extra: Option<(DensityMatrix, DensityMatrix)>) -> Result<MinimizerResult> {
    let obj = Objective::new(rho, variant.family, alpha)?;
    let mut inits = starts(rho, variant.kind, opts);
    if let Some(p) = extra {
        inits.insert(0, p);
    }
    let restarts_used = inits.len();
    let mut runs = Vec::with_capacity(restarts_used);
    for (s, t) in inits {
        runs.push(run(&obj, variant.kind, s, t, opts)?);
    }
    let best_any = best_run(runs.clone()).expect("at least one start");
    let converged: Vec<Run> = runs.into_iter().filter(|r| r.converged).collect();
    let Some(best) = best_run(converged) else {
        return Err(Error::NotConverged { best: best_any.value, residual: best_any.residual });
    };
    Ok(MinimizerResult {
        value: best.value,
        sigma_a: best.sigma_a,
        tau_b: best.tau_b,
        iterations: best.iterations,
        residual: best.residual,
        restarts_used,
        bracket: None,
    })
}

/// Rényi mutual information of order `alpha` for the given variant.
pub fn rmi(rho: &BipartiteState, alpha: f64, variant: RmiVariant, opts: &OptimizerOpts) -> Result<MinimizerResult> {
    rmi_warm(rho, alpha, variant, opts, None)
}

/// As [`rmi`], with an extra starting pair tried first.
pub fn rmi_warm(
    rho: &BipartiteState,
    alpha: f64,
    variant: RmiVariant,
    opts: &OptimizerOpts,
    warm: Option<(DensityMatrix, DensityMatrix)>,
) -> Result<MinimizerResult> {
    check_range(variant, alpha, opts)?;
    if alpha.is_infinite() && variant.kind != Minimization::UpUp {
        return infinite_order(rho, variant, opts);
    }
    solve_finite(rho, alpha, variant, opts, warm)
}

/// Minimized sandwiched quantity at α = ∞ from the runs at two large finite orders.
fn infinite_order(rho: &BipartiteState, variant: RmiVariant, opts: &OptimizerOpts) -> Result<MinimizerResult> {
    let (lo_order, hi_order) = INFINITE_ORDER_SAMPLES;
    let lo = solve_finite(rho, lo_order, variant, opts, None)?;
    let hi = solve_finite(rho, hi_order, variant, opts, Some((lo.sigma_a.clone(), lo.tau_b.clone())))?;
    let omega = hi.sigma_a.tensor(&hi.tau_b);
    let upper = crate::divergences::sandwiched_divergence(rho.state(), omega.op(), f64::INFINITY)?;
    let lower = hi.value;
    let extrapolated = (hi_order * hi.value - lo_order * lo.value) / (hi_order - lo_order);
    let value = extrapolated.max(lower).min(upper.max(lower));
    Ok(MinimizerResult { value, bracket: Some((lower, upper.max(lower))), ..hi })
}

/// d/dα of D_α(ρ‖ω) at fixed ω, from spectra.
fn divergence_order_derivative(
    rho: &DensityMatrix,
    sr: &Spectrum,
    sw: &Spectrum,
    family: DivergenceFamily,
    alpha: f64,
) -> Result<f64> {
    if alpha == 1.0 {
        let omega = HermitianOperator::from_hermitian_unchecked(sw.compose(&sw.values));
        return Ok(relative_entropy_variance(rho, &omega)? / 2.0);
    }
    let am1 = alpha - 1.0;
    match family {
        DivergenceFamily::Petz => {
            let ir = sr.support_indices();
            let iw = sw.support_indices();
            let w = sr.columns(&ir).adjoint() * sw.columns(&iw);
            let mut terms = Vec::new();
            for (a, &i) in ir.iter().enumerate() {
                for (b, &j) in iw.iter().enumerate() {
                    let o = w[(a, b)].norm_sqr();
                    if o > 0.0 {
                        let (lr, lw) = (sr.values[i].ln(), sw.values[j].ln());
                        terms.push((alpha * lr + (1.0 - alpha) * lw + o.ln(), lr - lw));
                    }
                }
            }
            if terms.is_empty() {
                return Ok(0.0);
            }
            let m = terms.iter().map(|t| t.0).fold(f64::NEG_INFINITY, f64::max);
            let (mut z, mut dz) = (0.0, 0.0);
            for (t, d) in &terms {
                let e = (t - m).exp();
                z += e;
                dz += e * d;
            }
            let log_q = m + z.ln();
            Ok((dz / z) / am1 - log_q / (am1 * am1))
        }
        DivergenceFamily::Sandwiched => {
            let kappa = (1.0 - alpha) / alpha;
            let dkappa = -1.0 / (alpha * alpha);
            let rho_half = sr.on_support(f64::sqrt).into_matrix();
            let wk = sw.on_support(|x| x.powf(kappa)).into_matrix();
            let wk_log = sw.on_support(|x| x.powf(kappa) * x.ln()).into_matrix();
            let x = HermitianOperator::from_hermitian_unchecked(&rho_half * wk * &rho_half);
            let dx = &rho_half * wk_log * &rho_half * c(dkappa);
            let sx = x.eig()?;
            let lmax = sx.lambda_max();
            if !(lmax > 0.0) {
                return Ok(0.0);
            }
            let supp = sx.support_indices();
            let q_hat: f64 = supp.iter().map(|&i| (sx.values[i] / lmax).powf(alpha)).sum();
            let a1: f64 = supp.iter().map(|&i| (sx.values[i] / lmax).powf(alpha) * sx.values[i].ln()).sum();
            let pw = sx.on_support(|v| (v / lmax).powf(alpha - 1.0));
            let a2 = alpha * crate::linalg::trace_product(pw.matrix(), &dx) / lmax;
            let log_q = log_trace_power(&sx, alpha);
            Ok(((a1 + a2) / q_hat) / am1 - log_q / (am1 * am1))
        }
    }
}

/// d/dα of D_α(ρ‖σ⊗τ) with the pair held fixed.
pub fn divergence_derivative_at(
    rho: &BipartiteState,
    sigma_a: &DensityMatrix,
    tau_b: &DensityMatrix,
    family: DivergenceFamily,
    alpha: f64,
) -> Result<f64> {
    let sw = product_spectrum(&sigma_a.eig()?, &tau_b.eig()?);
    divergence_order_derivative(rho.state(), &rho.state().eig()?, &sw, family, alpha)
}

/// Order derivative of the mutual information at the minimizing pair, cross-checked
/// against finite differences of [`rmi`].
pub fn rmi_derivative(rho: &BipartiteState, alpha: f64, variant: RmiVariant, side: Side, opts: &OptimizerOpts) -> Result<f64> {
    if !alpha.is_finite() {
        return Err(unsupported(variant, alpha));
    }
    let h = DERIVATIVE_FD_STEP;
    let probes: Vec<f64> = match side {
        Side::Central => vec![alpha - h, alpha + h],
        Side::Right => vec![alpha + h, alpha + 2.0 * h],
        Side::Left => vec![alpha - h, alpha - 2.0 * h],
    };
    check_range(variant, alpha, opts)?;
    for &p in &probes {
        check_range(variant, p, opts)?;
    }
    let tight = OptimizerOpts { tol: opts.tol.min(1e-13), ..*opts };
    let at = rmi(rho, alpha, variant, &tight)?;
    let envelope = divergence_derivative_at(rho, &at.sigma_a, &at.tau_b, variant.family, alpha)?;
    let warm = OptimizerOpts { restarts: 0, ..tight };
    let mut f = Vec::with_capacity(2);
    for &p in &probes {
        let r = rmi_warm(rho, p, variant, &warm, Some((at.sigma_a.clone(), at.tau_b.clone())))?;
        f.push(r.value.min(rmi_value_bound(rho, p, variant, &at)?));
    }
    let fd = match side {
        Side::Central => (f[1] - f[0]) / (2.0 * h),
        Side::Right => (-3.0 * at.value + 4.0 * f[0] - f[1]) / (2.0 * h),
        Side::Left => (3.0 * at.value - 4.0 * f[0] + f[1]) / (2.0 * h),
    };
    let gap = (envelope - fd).abs();
    if !(gap <= DERIVATIVE_FD_TOL) {
        return Err(Error::NotConverged { best: envelope, residual: gap });
    }
    Ok(envelope)
}

/// Value at a probe order using the centre pair, an upper bound for minimized variants.
fn rmi_value_bound(rho: &BipartiteState, alpha: f64, variant: RmiVariant, at: &MinimizerResult) -> Result<f64> {
    let omega = at.sigma_a.tensor(&at.tau_b);
    if variant.kind == Minimization::UpUp {
        return Ok(f64::INFINITY);
    }
    crate::divergences::divergence(variant.family, rho.state(), omega.op(), alpha)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sandwiched_gradient_matches_finite_differences() {
        let mut rng = rng_from_seed(9);
        let rho = random_bipartite_state(&mut rng, 2, 2);
        let sigma = random_density_matrix(&mut rng, 2);
        let tau = random_density_matrix(&mut rng, 2);
        let dir = random_density_matrix(&mut rng, 2).op().sub(tau.op());
        for alpha in [1.5, 7.0, 0.75] {
            let obj = Objective::new(&rho, DivergenceFamily::Sandwiched, alpha).unwrap();
            let g = obj.sandwiched_gradient(&sigma.eig().unwrap(), &tau.eig().unwrap(), Subsystem::B).unwrap();
            let h = 1e-6;
            let f = |t: f64| {
                let m = DensityMatrix::from_op_unchecked(tau.op().add(&dir.scale(t)));
                obj.value_spec(&sigma.eig().unwrap(), &m.eig().unwrap()).unwrap()
            };
            let fd = (f(h) - f(-h)) / (2.0 * h);
            let an = g.trace_product(&dir);
            assert!((fd - an).abs() < 1e-7, "{alpha}: {fd} vs {an}");
        }
    }
    use crate::divergences::mutual_information;
    use crate::random::random_bipartite_state;

    fn copy_cc(p: f64) -> BipartiteState {
        BipartiteState::new(DensityMatrix::diagonal(&[p, 0.0, 0.0, 1.0 - p]).unwrap(), 2, 2).unwrap()
    }

    #[test]
    fn copy_state_at_half() {
        let r = rmi(&copy_cc(0.75), 0.5, RmiVariant::petz(Minimization::DownDown), &OptimizerOpts::default()).unwrap();
        assert!((r.value - 0.2876820724517809).abs() < 1e-8, "{}", r.value);
    }

    #[test]
    fn order_one_gives_mutual_information() {
        let rho = random_bipartite_state(&mut rng_from_seed(11), 2, 2);
        let mi = mutual_information(&rho).unwrap();
        for v in RmiVariant::all() {
            let r = rmi(&rho, 1.0, v, &OptimizerOpts::default()).unwrap();
            assert!((r.value - mi).abs() < 1e-8, "{v:?}: {} vs {mi}", r.value);
        }
    }

    #[test]
    fn product_state_is_zero() {
        let mut rng = rng_from_seed(5);
        let a = random_density_matrix(&mut rng, 2);
        let b = random_density_matrix(&mut rng, 3);
        let rho = BipartiteState::product(&a, &b);
        for v in RmiVariant::all() {
            for alpha in [0.7, 1.5, 2.0] {
                if check_range(v, alpha, &OptimizerOpts::default()).is_err() {
                    continue;
                }
                let r = rmi(&rho, alpha, v, &OptimizerOpts::default()).unwrap();
                assert!(r.value.abs() < 1e-9, "{v:?} {alpha}: {}", r.value);
            }
        }
    }

    #[test]
    fn ranges_enforced() {
        let rho = copy_cc(0.75);
        let o = OptimizerOpts::default();
        assert!(matches!(rmi(&rho, 2.5, RmiVariant::petz(Minimization::DownDown), &o), Err(Error::Unsupported(_))));
        assert!(matches!(rmi(&rho, 0.7, RmiVariant::sandwiched(Minimization::DownDown), &o), Err(Error::Unsupported(_))));
        let exp = OptimizerOpts { allow_experimental: true, ..o };
        assert!(rmi(&rho, 0.7, RmiVariant::sandwiched(Minimization::DownDown), &exp).is_ok());
    }

    #[test]
    fn right_derivative_at_half_for_copy_state() {
        let d = rmi_derivative(&copy_cc(0.75), 0.5, RmiVariant::petz(Minimization::DownDown), Side::Right, &OptimizerOpts::default()).unwrap();
        assert!((d - 1.1507282898071236).abs() < 1e-4, "{d}");
    }
}
