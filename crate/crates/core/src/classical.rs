//! Classical distributions: Rényi divergence and mutual information, the
//! classical-classical embedding, and brute-force finite-n testing oracles.

use nalgebra::DMatrix;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::divergences::log_sum_exp;
use crate::error::{Error, Result};
use crate::hyptest::{classical_neyman_pearson, min_type1_bounds, Bracket, BracketOpts, Hypothesis, Layout};
use crate::lp::maximize;
use crate::random::{random_probability_vector, rng_from_seed};
use crate::rmi::{check_range, Minimization, OptimizerOpts, RmiVariant, INFINITE_ORDER_SAMPLES, ITERATE_FLOOR};
use crate::state::{BipartiteState, DensityMatrix};
use crate::symmetry::type_classes;

pub const PMF_SUM_TOL: f64 = 1e-12;

/// Probability mass function.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Pmf {
    probs: Vec<f64>,
}

impl Pmf {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::InvalidInput("empty distribution".into()));
        }
        if probs.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
            return Err(Error::InvalidInput("probabilities must be finite and nonnegative".into()));
        }
        let s: f64 = probs.iter().sum();
        if (s - 1.0).abs() > PMF_SUM_TOL {
            return Err(Error::InvalidInput(format!("probabilities sum to {s}")));
        }
        Ok(Self { probs })
    }

    pub fn uniform(k: usize) -> Self {
        Self { probs: vec![1.0 / k as f64; k] }
    }

    /// Normalizes positive weights.
    pub fn from_weights(w: &[f64]) -> Result<Self> {
        let s: f64 = w.iter().sum();
        if !(s > 0.0) || !s.is_finite() {
            return Err(Error::InvalidInput("weights must have positive finite sum".into()));
        }
        Self::new(w.iter().map(|x| x / s).collect())
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }
}

impl TryFrom<Vec<f64>> for Pmf {
    type Error = Error;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        Pmf::new(v)
    }
}

impl From<Pmf> for Vec<f64> {
    fn from(p: Pmf) -> Self {
        p.probs
    }
}

/// Joint PMF of (X, Y), stored row-major with rows indexed by x.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "JointPmfJson", into = "JointPmfJson")]
pub struct JointPmf {
    nx: usize,
    ny: usize,
    table: Vec<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct JointPmfJson {
    #[serde(rename = "X")]
    x: usize,
    #[serde(rename = "Y")]
    y: usize,
    p: Vec<Vec<f64>>,
}

impl TryFrom<JointPmfJson> for JointPmf {
    type Error = Error;

    fn try_from(j: JointPmfJson) -> Result<Self> {
        if j.p.len() != j.x || j.p.iter().any(|r| r.len() != j.y) {
            return Err(Error::InvalidInput(format!("table is not {}x{}", j.x, j.y)));
        }
        JointPmf::new(j.p)
    }
}

impl From<JointPmf> for JointPmfJson {
    fn from(p: JointPmf) -> Self {
        JointPmfJson { x: p.nx, y: p.ny, p: p.rows() }
    }
}

impl JointPmf {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        let nx = rows.len();
        let ny = rows.first().map_or(0, Vec::len);
        if nx == 0 || ny == 0 || rows.iter().any(|r| r.len() != ny) {
            return Err(Error::InvalidInput("joint table must be a nonempty rectangle".into()));
        }
        let flat = Pmf::new(rows.concat())?;
        Ok(Self { nx, ny, table: flat.probs })
    }

    pub fn from_flat(nx: usize, ny: usize, table: Vec<f64>) -> Result<Self> {
        if table.len() != nx * ny || nx == 0 || ny == 0 {
            return Err(Error::InvalidInput(format!("{} entries do not form a {nx}x{ny} table", table.len())));
        }
        let flat = Pmf::new(table)?;
        Ok(Self { nx, ny, table: flat.probs })
    }

    pub fn independent(px: &Pmf, py: &Pmf) -> Self {
        let table = px.probs.iter().flat_map(|a| py.probs.iter().map(move |b| a * b)).collect();
        Self { nx: px.len(), ny: py.len(), table }
    }

    /// (p, 1 − p) on the diagonal of a 2×2 table.
    pub fn copy(p: f64) -> Result<Self> {
        Self::new(vec![vec![p, 0.0], vec![0.0, 1.0 - p]])
    }

    pub fn random<R: Rng + ?Sized>(rng: &mut R, nx: usize, ny: usize) -> Self {
        Self { nx, ny, table: random_probability_vector(rng, nx * ny) }
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.table[x * self.ny + y]
    }

    pub fn flat(&self) -> &[f64] {
        &self.table
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.table.chunks(self.ny).map(<[f64]>::to_vec).collect()
    }

    pub fn marginal_x(&self) -> Pmf {
        Pmf { probs: (0..self.nx).map(|x| (0..self.ny).map(|y| self.get(x, y)).sum()).collect() }
    }

    pub fn marginal_y(&self) -> Pmf {
        Pmf { probs: (0..self.ny).map(|y| (0..self.nx).map(|x| self.get(x, y)).sum()).collect() }
    }
}

fn check_order(alpha: f64) -> Result<()> {
    if alpha.is_nan() || alpha < 0.0 {
        return Err(Error::InvalidInput(format!("Rényi order must be nonnegative, got {alpha}")));
    }
    Ok(())
}

/// Rényi divergence of slices with the same support conventions as the Petz quantity.
pub(crate) fn renyi_slices(p: &[f64], q: &[f64], alpha: f64) -> f64 {
    let dominated = p.iter().zip(q).all(|(a, b)| *a <= 0.0 || *b > 0.0);
    if alpha == 1.0 {
        if !dominated {
            return f64::INFINITY;
        }
        return p.iter().zip(q).filter(|(a, _)| **a > 0.0).map(|(a, b)| a * (a / b).ln()).sum();
    }
    if alpha.is_infinite() {
        if !dominated {
            return f64::INFINITY;
        }
        return p.iter().zip(q).filter(|(a, _)| **a > 0.0).map(|(a, b)| (a / b).ln()).fold(f64::NEG_INFINITY, f64::max);
    }
    if alpha > 1.0 && !dominated {
        return f64::INFINITY;
    }
    let terms = p.iter().zip(q).filter(|(a, b)| **a > 0.0 && **b > 0.0).map(|(a, b)| {
        if alpha == 0.0 {
            b.ln()
        } else {
            alpha * a.ln() + (1.0 - alpha) * b.ln()
        }
    });
    let log_q = log_sum_exp(terms);
    if log_q == f64::NEG_INFINITY {
        return f64::INFINITY;
    }
    log_q / (alpha - 1.0)
}

/// D_α(P‖Q) = log Σ p^α q^{1−α} / (α − 1); α = 1 is the Kullback–Leibler divergence.
pub fn classical_renyi_divergence(p: &Pmf, q: &Pmf, alpha: f64) -> Result<f64> {
    check_order(alpha)?;
    if p.len() != q.len() {
        return Err(Error::DimensionMismatch(format!("{} vs {} outcomes", p.len(), q.len())));
    }
    Ok(renyi_slices(&p.probs, &q.probs, alpha))
}

/// Classical mutual information.
pub fn classical_mutual_information(p: &JointPmf) -> f64 {
    let q = JointPmf::independent(&p.marginal_x(), &p.marginal_y());
    renyi_slices(&p.table, &q.table, 1.0).max(0.0)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassicalRmi {
    pub value: f64,
    pub q_x: Pmf,
    pub r_y: Pmf,
    pub iterations: usize,
    /// Lower and upper bounds when the value is extrapolated.
    pub bracket: Option<(f64, f64)>,
}

fn product_table(q: &[f64], r: &[f64]) -> Vec<f64> {
    q.iter().flat_map(|a| r.iter().map(move |b| a * b)).collect()
}

fn floored(v: &[f64]) -> Vec<f64> {
    let w: Vec<f64> = v.iter().map(|x| x.max(ITERATE_FLOOR)).collect();
    let s: f64 = w.iter().sum();
    w.into_iter().map(|x| x / s).collect()
}

/// Exact minimizer of D_α(P‖Q⊗R) over R for fixed Q (or over Q, transposed).
fn block_update(p: &JointPmf, other: &[f64], alpha: f64, update_y: bool) -> Vec<f64> {
    let (len, inner) = if update_y { (p.ny, p.nx) } else { (p.nx, p.ny) };
    let logs: Vec<f64> = (0..len)
        .map(|j| {
            let terms = (0..inner).filter_map(|i| {
                let v = if update_y { p.get(i, j) } else { p.get(j, i) };
                (v > 0.0).then(|| alpha * v.ln() + (1.0 - alpha) * other[i].ln())
            });
            log_sum_exp(terms) / alpha
        })
        .collect();
    let norm = log_sum_exp(logs.iter().copied());
    logs.iter().map(|l| (l - norm).exp()).collect()
}

fn alternating(p: &JointPmf, alpha: f64, kind: Minimization, q0: Vec<f64>, r0: Vec<f64>, opts: &OptimizerOpts) -> (Vec<f64>, Vec<f64>, f64, usize, bool) {
    let value = |q: &[f64], r: &[f64]| renyi_slices(&p.table, &product_table(q, r), alpha);
    let (mut q, mut r) = (q0, r0);
    let mut v = value(&q, &r);
    for k in 1..=opts.max_iter {
        let before = v;
        if kind == Minimization::DownDown {
            let cand = block_update(p, &floored(&r), alpha, false);
            let cv = value(&cand, &r);
            if cv <= v {
                q = cand;
                v = cv;
            }
        }
        let cand = block_update(p, &floored(&q), alpha, true);
        let cv = value(&q, &cand);
        if cv <= v {
            r = cand;
            v = cv;
        }
        if (before - v).abs() < opts.tol {
            return (q, r, v, k, true);
        }
    }
    (q, r, v, opts.max_iter, false)
}

fn solve_finite(p: &JointPmf, alpha: f64, kind: Minimization, opts: &OptimizerOpts, warm: Option<(Vec<f64>, Vec<f64>)>) -> Result<ClassicalRmi> {
    let (px, py) = (p.marginal_x().probs, p.marginal_y().probs);
    if kind == Minimization::UpUp {
        let value = renyi_slices(&p.table, &product_table(&px, &py), alpha);
        return Ok(ClassicalRmi { value, q_x: Pmf { probs: px }, r_y: Pmf { probs: py }, iterations: 0, bracket: None });
    }
    let mut inits = vec![(px.clone(), py.clone())];
    if let Some(w) = warm {
        inits.insert(0, w);
    }
    let mut rng = rng_from_seed(opts.seed);
    for _ in 0..opts.restarts {
        let q = random_probability_vector(&mut rng, p.nx);
        let r = random_probability_vector(&mut rng, p.ny);
        inits.push((if kind == Minimization::DownDown { q } else { px.clone() }, r));
    }
    let mut best: Option<(Vec<f64>, Vec<f64>, f64, usize)> = None;
    let mut best_any = f64::INFINITY;
    for (q0, r0) in inits {
        let (q, r, v, its, ok) = alternating(p, alpha, kind, q0, r0, opts);
        best_any = best_any.min(v);
        if !ok {
            continue;
        }
        let better = match &best {
            None => true,
            Some(b) => v < b.2 - 1e-12 || ((v - b.2).abs() <= 1e-12 && its < b.3),
        };
        if better {
            best = Some((q, r, v, its));
        }
    }
    let Some((q, r, value, iterations)) = best else {
        return Err(Error::NotConverged { best: best_any, residual: f64::NAN });
    };
    Ok(ClassicalRmi { value, q_x: Pmf { probs: q }, r_y: Pmf { probs: r }, iterations, bracket: None })
}

/// Rényi mutual information of a joint PMF; accepts the same orders as the quantum variants.
/// Classical Petz and sandwiched quantities coincide.
pub fn classical_rmi(p: &JointPmf, alpha: f64, variant: RmiVariant, opts: &OptimizerOpts) -> Result<ClassicalRmi> {
    check_range(variant, alpha, opts)?;
    if alpha.is_infinite() && variant.kind != Minimization::UpUp {
        let (lo_order, hi_order) = INFINITE_ORDER_SAMPLES;
        let lo = solve_finite(p, lo_order, variant.kind, opts, None)?;
        let hi = solve_finite(p, hi_order, variant.kind, opts, Some((lo.q_x.probs.clone(), lo.r_y.probs.clone())))?;
        let upper = renyi_slices(&p.table, &product_table(&hi.q_x.probs, &hi.r_y.probs), f64::INFINITY).max(hi.value);
        let extrapolated = (hi_order * hi.value - lo_order * lo.value) / (hi_order - lo_order);
        return Ok(ClassicalRmi { value: extrapolated.clamp(hi.value, upper), bracket: Some((hi.value, upper)), ..hi });
    }
    solve_finite(p, alpha, variant.kind, opts, None)
}

/// Diagonal bipartite state Σ P(x,y) |x,y⟩⟨x,y|.
pub fn cc_state(p: &JointPmf) -> BipartiteState {
    let state = DensityMatrix::diagonal(&p.table).expect("a joint PMF is a valid spectrum");
    BipartiteState::new(state, p.nx, p.ny).expect("dimensions match the table")
}

/// Classical minimum type-I error bracket, with the grid discretization bound used (0 when exact).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassicalBracket {
    pub lower: f64,
    pub upper: f64,
    pub grid_gap: f64,
}

impl ClassicalBracket {
    fn exact(v: f64) -> Self {
        Self { lower: v, upper: v, grid_gap: 0.0 }
    }

    pub fn bracket(&self) -> Bracket {
        Bracket { lower: self.lower, upper: self.upper }
    }
}

/// Largest alphabet product and copy count handled by the brute-force oracles.
pub const MAX_JOINT_ALPHABET: usize = 4;
pub const MAX_COPIES: usize = 3;

struct Sequences {
    layout: Layout,
    /// P^{×n} over interleaved outcome indices.
    p_n: Vec<f64>,
}

impl Sequences {
    fn new(p: &JointPmf, n: usize) -> Result<Self> {
        if p.nx * p.ny > MAX_JOINT_ALPHABET || n > MAX_COPIES || n == 0 {
            return Err(Error::ResourceLimit(format!(
                "brute-force testing handles |X||Y| ≤ {MAX_JOINT_ALPHABET} and 1 ≤ n ≤ {MAX_COPIES}, got {}x{} and n={n}",
                p.nx, p.ny
            )));
        }
        let layout = Layout::new(n, p.nx, p.ny)?;
        let p_n = power_distribution(&layout, |x, y| p.get(x, y));
        Ok(Self { layout, p_n })
    }

    fn outcomes(&self) -> usize {
        self.p_n.len()
    }
}

/// Product distribution over interleaved sequences from a single-letter table.
fn power_distribution(layout: &Layout, single: impl Fn(usize, usize) -> f64) -> Vec<f64> {
    let local = layout.d_a * layout.d_b;
    (0..layout.dim())
        .map(|z| {
            let mut r = z;
            let mut prob = 1.0;
            for _ in 0..layout.n {
                let digit = r % local;
                r /= local;
                prob *= single(digit / layout.d_b, digit % layout.d_b);
            }
            prob
        })
        .collect()
}

/// Averaging constraints of the exchangeable alternatives: one row per type-class pair,
/// or per (type class of x^n, y^n) when only X is symmetrized.
fn exchangeable_rows(layout: &Layout, symmetric_y: bool) -> Vec<Vec<f64>> {
    let cxs = type_classes(layout.n, layout.d_a);
    let cys: Vec<Vec<usize>> = if symmetric_y {
        type_classes(layout.n, layout.d_b)
    } else {
        (0..layout.dim_b()).map(|y| vec![y]).collect()
    };
    let mut rows = Vec::new();
    for cx in &cxs {
        for cy in &cys {
            let mut row = vec![0.0; layout.dim()];
            let w = 1.0 / (cx.len() * cy.len()) as f64;
            for &x in cx {
                for &y in cy {
                    row[layout.join(x, y)] = w;
                }
            }
            rows.push(row);
        }
    }
    rows
}

fn box_rows(dim: usize) -> Vec<Vec<f64>> {
    (0..dim)
        .map(|i| {
            let mut r = vec![0.0; dim];
            r[i] = 1.0;
            r
        })
        .collect()
}

/// Most powerful test against exchangeable alternatives for outcome weights `p` over interleaved
/// sequences: returns the accepted weight Σ p T and the test.
pub(crate) fn best_exchangeable_test(layout: &Layout, p: &[f64], mu: f64, symmetric_y: bool) -> Result<(f64, Vec<f64>)> {
    let mut a = exchangeable_rows(layout, symmetric_y);
    let mut b = vec![mu; a.len()];
    a.extend(box_rows(layout.dim()));
    b.extend(vec![1.0; layout.dim()]);
    let sol = maximize(p, &a, &b)?;
    let t = sol.x.iter().map(|v| v.clamp(0.0, 1.0)).collect();
    Ok((sol.value, t))
}

fn exchangeable_exact(seq: &Sequences, mu: f64, symmetric_y: bool) -> Result<f64> {
    let (accepted, _) = best_exchangeable_test(&seq.layout, &seq.p_n, mu, symmetric_y)?;
    Ok((1.0 - accepted).clamp(0.0, 1.0))
}

/// Composition grid of the probability simplex with the given resolution.
fn simplex_grid(k: usize, resolution: usize) -> Vec<Vec<f64>> {
    fn rec(k: usize, left: usize, prefix: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if k == 1 {
            prefix.push(left);
            out.push(prefix.clone());
            prefix.pop();
            return;
        }
        for i in 0..=left {
            prefix.push(i);
            rec(k - 1, left - i, prefix, out);
            prefix.pop();
        }
    }
    let mut comps = Vec::new();
    rec(k, resolution, &mut Vec::new(), &mut comps);
    comps.into_iter().map(|c| c.into_iter().map(|v| v as f64 / resolution as f64).collect()).collect()
}

/// Grid resolution per alphabet size and the largest L1 distance from a PMF to the grid.
fn grid_spec(k: usize) -> (usize, f64) {
    match k {
        1 => (1, 0.0),
        2 => (200, 1.0 / 200.0),
        3 => (40, 2.0 * 2.0 / 40.0),
        _ => (20, 2.0 * (k as f64 - 1.0) / 20.0),
    }
}

fn power_vector(q: &[f64], n: usize) -> Vec<f64> {
    let mut out = vec![1.0];
    for _ in 0..n {
        out = out.iter().flat_map(|a| q.iter().map(move |b| a * b)).collect();
    }
    out
}

/// Values of Σ Q^n(x) R^n(y) T(x,y) over the whole grid.
fn grid_values(layout: &Layout, t: &[f64], qs: &[Vec<f64>], rs: &[Vec<f64>]) -> DMatrix<f64> {
    let (da, db) = (layout.dim_a(), layout.dim_b());
    let m = DMatrix::from_fn(da, db, |x, y| t[layout.join(x, y)]);
    let qn = DMatrix::from_fn(qs.len(), da, |i, x| power_vector(&qs[i], layout.n)[x]);
    let rn = DMatrix::from_fn(db, rs.len(), |y, j| power_vector(&rs[j], layout.n)[y]);
    qn * m * rn
}

fn cut_row(layout: &Layout, q: &[f64], r: &[f64]) -> Vec<f64> {
    let qn = power_vector(q, layout.n);
    let rn = power_vector(r, layout.n);
    (0..layout.dim())
        .map(|z| {
            let (x, y) = layout.split(z);
            qn[x] * rn[y]
        })
        .collect()
}

const MAX_CUT_ROUNDS: usize = 300;
const CUTS_PER_ROUND: usize = 20;

/// Cutting-plane bracket for i.i.d. product alternatives: the LP over finitely many cuts is a
/// relaxation (lower bound on type-I); its test rescaled by the Lipschitz-inflated grid maximum
/// is feasible for every product PMF (upper bound). Cuts that stop binding are dropped between
/// rounds, and the best bounds seen over all rounds are kept.
fn iid_bracket(seq: &Sequences, p: &JointPmf, mu: f64) -> Result<ClassicalBracket> {
    let layout = seq.layout;
    let (res_x, delta_x) = grid_spec(p.nx);
    let (res_y, delta_y) = grid_spec(p.ny);
    let qs = simplex_grid(p.nx, res_x);
    let rs = simplex_grid(p.ny, res_y);
    let lipschitz = layout.n as f64 * (delta_x + delta_y) / 2.0;
    let stride_x = (qs.len() / 10).max(1);
    let stride_y = (rs.len() / 10).max(1);
    let mut a: Vec<Vec<f64>> = box_rows(seq.outcomes());
    a.push(cut_row(&layout, p.marginal_x().probs(), p.marginal_y().probs()));
    let fixed = a.len();
    for i in (0..qs.len()).step_by(stride_x) {
        for j in (0..rs.len()).step_by(stride_y) {
            a.push(cut_row(&layout, &qs[i], &rs[j]));
        }
    }
    let rhs = |a: &[Vec<f64>]| -> Vec<f64> { (0..a.len()).map(|k| if k < seq.outcomes() { 1.0 } else { mu }).collect() };
    let (mut lower, mut upper) = (0.0f64, 1.0f64);
    for _ in 0..MAX_CUT_ROUNDS {
        let sol = maximize(&seq.p_n, &a, &rhs(&a))?;
        let f = grid_values(&layout, &sol.x, &qs, &rs);
        let certified = f.max() + lipschitz;
        let scale = if certified > mu { mu / certified } else { 1.0 };
        lower = lower.max((1.0 - sol.value).clamp(0.0, 1.0));
        upper = upper.min((1.0 - scale * sol.value).clamp(0.0, 1.0));
        let mut violated: Vec<(f64, usize, usize)> = Vec::new();
        for i in 0..qs.len() {
            for j in 0..rs.len() {
                if f[(i, j)] > mu * (1.0 + 1e-9) {
                    violated.push((f[(i, j)], i, j));
                }
            }
        }
        if violated.is_empty() {
            break;
        }
        let binding = |row: &Vec<f64>| row.iter().zip(&sol.x).map(|(r, x)| r * x).sum::<f64>() >= mu * (1.0 - 1e-9);
        let kept: Vec<Vec<f64>> = a.drain(fixed..).filter(binding).collect();
        a.extend(kept);
        violated.sort_by(|x, y| y.0.total_cmp(&x.0));
        for &(_, i, j) in violated.iter().take(CUTS_PER_ROUND) {
            a.push(cut_row(&layout, &qs[i], &rs[j]));
        }
    }
    Ok(ClassicalBracket { lower, upper: upper.max(lower), grid_gap: lipschitz })
}

/// Minimum type-I error for testing P^{×n} against the product alternatives of `hyp` at type-II level μ.
pub fn classical_min_type1(p: &JointPmf, n: usize, mu: f64, hyp: Hypothesis) -> Result<ClassicalBracket> {
    if !(0.0..=1.0).contains(&mu) {
        return Err(Error::InvalidInput(format!("type-II level must lie in [0, 1], got {mu}")));
    }
    let seq = Sequences::new(p, n)?;
    if mu >= 1.0 {
        return Ok(ClassicalBracket::exact(0.0));
    }
    let marginal = || -> Result<f64> {
        let (px, py) = (p.marginal_x(), p.marginal_y());
        let q_n = power_distribution(&seq.layout, |x, y| px.probs[x] * py.probs[y]);
        Ok(classical_neyman_pearson(&seq.p_n, &q_n, mu)?.0)
    };
    match hyp {
        Hypothesis::Mar => Ok(ClassicalBracket::exact(marginal()?)),
        // point masses are product distributions, so every feasible test is bounded by μ pointwise
        Hypothesis::Ind => Ok(ClassicalBracket::exact(1.0 - mu)),
        Hypothesis::SymBoth => Ok(ClassicalBracket::exact(exchangeable_exact(&seq, mu, true)?)),
        Hypothesis::SymA => Ok(ClassicalBracket::exact(exchangeable_exact(&seq, mu, false)?)),
        Hypothesis::Iid => {
            let mut br = iid_bracket(&seq, p, mu)?;
            br.lower = br.lower.max(marginal()?);
            br.upper = br.upper.min(exchangeable_exact(&seq, mu, true)?);
            Ok(br)
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EquivalenceReport {
    pub n: usize,
    pub mu: f64,
    pub hypothesis: Hypothesis,
    pub quantum: Bracket,
    pub classical: ClassicalBracket,
}

/// Slack allowed when intersecting quantum and classical brackets.
pub const EQUIVALENCE_SLACK: f64 = 1e-9;

/// Runs the quantum bracket on the embedded state and the classical oracle, and checks they intersect.
pub fn cc_equivalence_check(p: &JointPmf, n: usize, mu: f64, hyp: Hypothesis, opts: &BracketOpts) -> Result<EquivalenceReport> {
    let classical = classical_min_type1(p, n, mu, hyp)?;
    let quantum = min_type1_bounds(&cc_state(p), n, mu, hyp, opts)?;
    let lo = quantum.lower.max(classical.lower);
    let hi = quantum.upper.min(classical.upper);
    if lo > hi + EQUIVALENCE_SLACK {
        return Err(Error::EquivalenceViolation {
            q_lo: quantum.lower,
            q_hi: quantum.upper,
            c_lo: classical.lower,
            c_hi: classical.upper,
        });
    }
    Ok(EquivalenceReport { n, mu, hypothesis: hyp, quantum, classical })
}
