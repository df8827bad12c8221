//! Transmit covariance design by successive convex approximation.
//!
//! The sum secrecy rate, as a function of the information covariance `W`
//! and the artificial-noise covariance `V`, is a difference `P - Q` of two
//! concave functions. Each SCA round replaces `Q` by its tangent plane at
//! the previous iterate and maximizes the resulting concave surrogate over
//! `{W, V ⪰ 0, Tr(W + V) ≤ P_B}` with a spectral projected-gradient method.
//!
//! Every log term has the form `weight · log2(h_w^H W h_w + h_v^H V h_v + c)`
//! with rank-one channel Gram matrices, so objectives and gradients are
//! assembled from a short list of [`LogTerm`]s.

use std::fmt;

use nalgebra::{Complex, SymmetricEigen};

use crate::channel::Channels;
use crate::config::LinkBudget;
use crate::error::Error;
use crate::metrics::DuplexMode;
use crate::scalar::{CMatrix, CVector, Real, abs2, gram, hermitian_part, inner, log2, norm2, quad_form, real, trace_re};

/// Channels seen by the transmit covariances once `w_r` is fixed.
#[derive(Debug, Clone, PartialEq)]
pub struct EffectiveChannels<T: Real> {
    /// `w_r^H h_UB`.
    pub h1: Complex<T>,
    /// `√ρ H_SI^H w_r`.
    pub h2: CVector<T>,
    pub h_bd: CVector<T>,
    pub h_be: CVector<T>,
    pub h_ud: Complex<T>,
    pub h_ue: Complex<T>,
}

impl<T: Real> EffectiveChannels<T> {
    pub fn new(ch: &Channels<T>, w_r: &CVector<T>, rho: T) -> Self {
        let h2 = (ch.h_si.adjoint() * w_r).map(|z| z * rho.sqrt());
        EffectiveChannels {
            h1: w_r.dotc(&ch.h_ub),
            h2,
            h_bd: ch.h_bd.clone(),
            h_be: ch.h_be.clone(),
            h_ud: ch.h_ud,
            h_ue: ch.h_ue,
        }
    }

    pub fn n_t(&self) -> usize {
        self.h_bd.len()
    }

    pub fn h2_gram(&self) -> CMatrix<T> {
        gram(&self.h2)
    }

    pub fn bd_gram(&self) -> CMatrix<T> {
        gram(&self.h_bd)
    }

    pub fn be_gram(&self) -> CMatrix<T> {
        gram(&self.h_be)
    }
}

/// `weight · log2(h_w^H W h_w + h_v^H V h_v + constant)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LogTerm<T: Real> {
    pub weight: T,
    pub on_w: Option<CVector<T>>,
    pub on_v: Option<CVector<T>>,
    pub constant: T,
}

impl<T: Real> LogTerm<T> {
    fn new(weight: T, on_w: Option<&CVector<T>>, on_v: Option<&CVector<T>>, constant: T) -> Self {
        LogTerm {
            weight,
            on_w: on_w.cloned(),
            on_v: on_v.cloned(),
            constant,
        }
    }

    fn argument(&self, w: &CMatrix<T>, v: &CMatrix<T>) -> T {
        let mut a = self.constant;
        if let Some(h) = &self.on_w {
            a += quad_form(w, h);
        }
        if let Some(h) = &self.on_v {
            a += quad_form(v, h);
        }
        a
    }

    fn value(&self, w: &CMatrix<T>, v: &CMatrix<T>) -> T {
        self.weight * log2(self.argument(w, v))
    }

    /// Adds this term's gradient into `(gw, gv)`.
    fn accumulate_gradient(&self, w: &CMatrix<T>, v: &CMatrix<T>, gw: &mut CMatrix<T>, gv: &mut CMatrix<T>) {
        let scale = self.weight / (self.argument(w, v) * T::ln_2());
        if let Some(h) = &self.on_w {
            add_scaled_gram(gw, h, scale);
        }
        if let Some(h) = &self.on_v {
            add_scaled_gram(gv, h, scale);
        }
    }
}

fn add_scaled_gram<T: Real>(acc: &mut CMatrix<T>, h: &CVector<T>, scale: T) {
    let n = h.len();
    for j in 0..n {
        for i in 0..n {
            acc[(i, j)] += h[i] * h[j].conj() * scale;
        }
    }
}

/// Difference-of-concave objective `P(W, V) - Q(W, V)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DcObjective<T: Real> {
    pub p: Vec<LogTerm<T>>,
    pub q: Vec<LogTerm<T>>,
    pub n_t: usize,
}

impl<T: Real> DcObjective<T> {
    /// Full-duplex sum secrecy rate (unclamped).
    pub fn full_duplex(eff: &EffectiveChannels<T>, budget: &LinkBudget<T>) -> Self {
        let pu = budget.p_u;
        let c_b = pu * abs2(eff.h1) + budget.sigma_b2;
        let c_d = pu * abs2(eff.h_ud) + budget.sigma_d2;
        let c_e = pu * abs2(eff.h_ue) + budget.sigma_e2;
        let one = T::one();
        let (h2, bd, be) = (Some(&eff.h2), Some(&eff.h_bd), Some(&eff.h_be));
        DcObjective {
            p: vec![
                LogTerm::new(one, h2, h2, c_b),
                LogTerm::new(one, bd, bd, c_d),
                LogTerm::new(one, be, be, budget.sigma_e2),
                LogTerm::new(one, None, be, c_e),
            ],
            q: vec![
                LogTerm::new(one, h2, h2, budget.sigma_b2),
                LogTerm::new(one, None, bd, c_d),
                LogTerm::new(T::lit(2.0), be, be, c_e),
            ],
            n_t: eff.n_t(),
        }
    }

    /// Time-division half-duplex sum secrecy rate (unclamped): each link
    /// gets half the time, SI and UL/DL cross terms vanish.
    pub fn half_duplex(eff: &EffectiveChannels<T>, budget: &LinkBudget<T>) -> Self {
        let half = T::lit(0.5);
        let pu = budget.p_u;
        let (bd, be) = (Some(&eff.h_bd), Some(&eff.h_be));
        DcObjective {
            p: vec![
                LogTerm::new(half, None, None, pu * abs2(eff.h1) + budget.sigma_b2),
                LogTerm::new(half, None, None, budget.sigma_e2),
                LogTerm::new(half, bd, bd, budget.sigma_d2),
                LogTerm::new(half, None, be, budget.sigma_e2),
            ],
            q: vec![
                LogTerm::new(half, None, None, budget.sigma_b2),
                LogTerm::new(half, None, None, pu * abs2(eff.h_ue) + budget.sigma_e2),
                LogTerm::new(half, None, bd, budget.sigma_d2),
                LogTerm::new(half, be, be, budget.sigma_e2),
            ],
            n_t: eff.n_t(),
        }
    }

    pub fn for_mode(eff: &EffectiveChannels<T>, budget: &LinkBudget<T>, mode: DuplexMode) -> Self {
        match mode {
            DuplexMode::Full => Self::full_duplex(eff, budget),
            DuplexMode::Half => Self::half_duplex(eff, budget),
        }
    }

    pub fn p_value(&self, w: &CMatrix<T>, v: &CMatrix<T>) -> T {
        self.p.iter().fold(T::zero(), |acc, t| acc + t.value(w, v))
    }

    pub fn q_value(&self, w: &CMatrix<T>, v: &CMatrix<T>) -> T {
        self.q.iter().fold(T::zero(), |acc, t| acc + t.value(w, v))
    }

    pub fn value(&self, w: &CMatrix<T>, v: &CMatrix<T>) -> T {
        self.p_value(w, v) - self.q_value(w, v)
    }

    fn gradient_of(terms: &[LogTerm<T>], n: usize, w: &CMatrix<T>, v: &CMatrix<T>) -> (CMatrix<T>, CMatrix<T>) {
        let mut gw = CMatrix::zeros(n, n);
        let mut gv = CMatrix::zeros(n, n);
        for t in terms {
            t.accumulate_gradient(w, v, &mut gw, &mut gv);
        }
        (gw, gv)
    }

    pub fn grad_p(&self, w: &CMatrix<T>, v: &CMatrix<T>) -> (CMatrix<T>, CMatrix<T>) {
        Self::gradient_of(&self.p, self.n_t, w, v)
    }

    /// `(∇_W Q, ∇_V Q)`, Hermitian, such that the first-order change of `Q`
    /// along `(dW, dV)` is `Re Tr(∇_W^H dW) + Re Tr(∇_V^H dV)`.
    pub fn grad_q(&self, w: &CMatrix<T>, v: &CMatrix<T>) -> (CMatrix<T>, CMatrix<T>) {
        Self::gradient_of(&self.q, self.n_t, w, v)
    }

    /// Surrogate obtained by replacing `Q` with its tangent at the anchor.
    pub fn linearize(&self, anchor_w: &CMatrix<T>, anchor_v: &CMatrix<T>) -> Linearized<'_, T> {
        let (gw, gv) = self.grad_q(anchor_w, anchor_v);
        Linearized {
            objective: self,
            q_anchor: self.q_value(anchor_w, anchor_v),
            grad_w: gw,
            grad_v: gv,
            anchor_w: anchor_w.clone(),
            anchor_v: anchor_v.clone(),
        }
    }
}

/// Concave lower bound of `P - Q` that is tight at the anchor.
#[derive(Debug, Clone)]
pub struct Linearized<'a, T: Real> {
    pub objective: &'a DcObjective<T>,
    pub q_anchor: T,
    pub grad_w: CMatrix<T>,
    pub grad_v: CMatrix<T>,
    pub anchor_w: CMatrix<T>,
    pub anchor_v: CMatrix<T>,
}

impl<T: Real> Linearized<'_, T> {
    /// Tangent-plane overestimate of `Q` at `(W, V)`.
    pub fn q_upper(&self, w: &CMatrix<T>, v: &CMatrix<T>) -> T {
        self.q_anchor + inner(&self.grad_w, &(w - &self.anchor_w)) + inner(&self.grad_v, &(v - &self.anchor_v))
    }

    pub fn value(&self, w: &CMatrix<T>, v: &CMatrix<T>) -> T {
        self.objective.p_value(w, v) - self.q_upper(w, v)
    }

    pub fn gradient(&self, w: &CMatrix<T>, v: &CMatrix<T>) -> (CMatrix<T>, CMatrix<T>) {
        let (pw, pv) = self.objective.grad_p(w, v);
        (pw - &self.grad_w, pv - &self.grad_v)
    }
}

/// `P(W, V)` of the full-duplex objective.
pub fn objective_p<T: Real>(w: &CMatrix<T>, v: &CMatrix<T>, eff: &EffectiveChannels<T>, budget: &LinkBudget<T>) -> T {
    DcObjective::full_duplex(eff, budget).p_value(w, v)
}

/// `Q(W, V)` of the full-duplex objective.
pub fn objective_q<T: Real>(w: &CMatrix<T>, v: &CMatrix<T>, eff: &EffectiveChannels<T>, budget: &LinkBudget<T>) -> T {
    DcObjective::full_duplex(eff, budget).q_value(w, v)
}

pub fn grad_q<T: Real>(
    w: &CMatrix<T>,
    v: &CMatrix<T>,
    eff: &EffectiveChannels<T>,
    budget: &LinkBudget<T>,
) -> (CMatrix<T>, CMatrix<T>) {
    DcObjective::full_duplex(eff, budget).grad_q(w, v)
}

/// `P(W,V) - Q(W,V | anchor)` for the full-duplex objective.
pub fn linearized_objective<T: Real>(
    w: &CMatrix<T>,
    v: &CMatrix<T>,
    anchor: (&CMatrix<T>, &CMatrix<T>),
    eff: &EffectiveChannels<T>,
    budget: &LinkBudget<T>,
) -> T {
    let dc = DcObjective::full_duplex(eff, budget);
    dc.linearize(anchor.0, anchor.1).value(w, v)
}

// ---------------------------------------------------------------------------
// Projection onto {W, V ⪰ 0, Tr(W + V) ≤ budget}

/// Euclidean projection of `values` onto `{x ≥ 0, Σx ≤ budget}`.
pub fn project_capped_simplex<T: Real>(values: &mut [T], budget: T) {
    let zero = T::zero();
    let clipped_sum = values.iter().fold(zero, |acc, &x| acc + x.max(zero));
    if clipped_sum <= budget {
        for x in values.iter_mut() {
            *x = x.max(zero);
        }
        return;
    }
    // Shift τ > 0 with Σ max(x - τ, 0) = budget.
    let mut sorted: Vec<T> = values.to_vec();
    sorted.sort_by(|a, b| b.partial_cmp(a).expect("finite eigenvalues"));
    let mut cumsum = zero;
    let mut tau = zero;
    for (k, &x) in sorted.iter().enumerate() {
        cumsum += x;
        let candidate = (cumsum - budget) / T::from_usize(k + 1).unwrap();
        if k + 1 == sorted.len() || sorted[k + 1] <= candidate {
            tau = candidate;
            break;
        }
    }
    for x in values.iter_mut() {
        *x = (*x - tau).max(zero);
    }
}

fn reconstruct<T: Real>(vectors: &CMatrix<T>, values: &[T]) -> CMatrix<T> {
    let n = vectors.nrows();
    let mut out = CMatrix::zeros(n, n);
    for (k, &lam) in values.iter().enumerate() {
        if lam <= T::zero() {
            continue;
        }
        let u = vectors.column(k);
        for j in 0..n {
            for i in 0..n {
                out[(i, j)] += u[i] * u[j].conj() * lam;
            }
        }
    }
    out
}

/// Projection of the pair `(W, V)` onto the feasible set. With
/// `with_noise == false`, `V` is pinned to zero.
pub fn project_feasible<T: Real>(w: &CMatrix<T>, v: &CMatrix<T>, budget: T, with_noise: bool) -> (CMatrix<T>, CMatrix<T>) {
    let n = w.nrows();
    let ew = SymmetricEigen::new(hermitian_part(w));
    if !with_noise {
        let mut vals: Vec<T> = ew.eigenvalues.iter().copied().collect();
        project_capped_simplex(&mut vals, budget);
        return (reconstruct(&ew.eigenvectors, &vals), CMatrix::zeros(n, n));
    }
    let ev = SymmetricEigen::new(hermitian_part(v));
    let mut vals: Vec<T> = ew.eigenvalues.iter().chain(ev.eigenvalues.iter()).copied().collect();
    project_capped_simplex(&mut vals, budget);
    (reconstruct(&ew.eigenvectors, &vals[..n]), reconstruct(&ev.eigenvectors, &vals[n..]))
}

// ---------------------------------------------------------------------------
// Inner concave maximization

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InnerOptions {
    pub max_iters: usize,
    /// Stop when `|Δf| ≤ rel_tol · max(1, |f|)`.
    pub rel_tol: f64,
    /// Stop when the unit-step projected gradient (in units of `P_B`) is
    /// at most this.
    pub pg_tol: f64,
    pub armijo: f64,
}

impl Default for InnerOptions {
    fn default() -> Self {
        InnerOptions {
            max_iters: 10_000,
            rel_tol: 1e-8,
            pg_tol: 1e-6,
            armijo: 1e-4,
        }
    }
}

/// Iteration cap reached; carries the last iterate.
#[derive(Debug, Clone)]
pub struct ConvergenceFailure<T: Real> {
    pub iterations: usize,
    pub w: CMatrix<T>,
    pub v: CMatrix<T>,
}

impl<T: Real> fmt::Display for ConvergenceFailure<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "inner solver stopped after {} iterations without converging", self.iterations)
    }
}

impl<T: Real> std::error::Error for ConvergenceFailure<T> {}

impl<T: Real> From<ConvergenceFailure<T>> for Error {
    fn from(e: ConvergenceFailure<T>) -> Self {
        Error::NonConvergence {
            iterations: e.iterations,
        }
    }
}

#[derive(Debug, Clone)]
pub struct InnerSolution<T: Real> {
    pub w: CMatrix<T>,
    pub v: CMatrix<T>,
    pub value: T,
    pub iterations: usize,
}

fn scaled<T: Real>(m: &CMatrix<T>, s: T) -> CMatrix<T> {
    m.map(|z| z * s)
}

fn pair_inner<T: Real>(a: &(CMatrix<T>, CMatrix<T>), b: &(CMatrix<T>, CMatrix<T>)) -> T {
    inner(&a.0, &b.0) + inner(&a.1, &b.1)
}

/// Maximize the SCA surrogate over the feasible set, starting from the
/// anchor. Spectral projected gradient with a monotone Armijo search, run in
/// coordinates normalized by `P_B`.
pub fn solve_inner_convex<T: Real>(
    surrogate: &Linearized<'_, T>,
    p_b: T,
    with_noise: bool,
    options: &InnerOptions,
) -> Result<InnerSolution<T>, ConvergenceFailure<T>> {
    let n = surrogate.objective.n_t;
    if p_b <= T::zero() {
        let z = CMatrix::zeros(n, n);
        let value = surrogate.value(&z, &z);
        return Ok(InnerSolution {
            w: z.clone(),
            v: z,
            value,
            iterations: 0,
        });
    }
    let one = T::one();
    let inv = one / p_b;
    let eval = |x: &(CMatrix<T>, CMatrix<T>)| surrogate.value(&scaled(&x.0, p_b), &scaled(&x.1, p_b));
    let grad = |x: &(CMatrix<T>, CMatrix<T>)| {
        let (gw, gv) = surrogate.gradient(&scaled(&x.0, p_b), &scaled(&x.1, p_b));
        let gv = if with_noise { gv } else { CMatrix::zeros(n, n) };
        (hermitian_part(&scaled(&gw, p_b)), hermitian_part(&scaled(&gv, p_b)))
    };
    let project = |w: &CMatrix<T>, v: &CMatrix<T>| project_feasible(w, v, one, with_noise);

    let rel_tol = T::floor_tol(options.rel_tol);
    let pg_tol = T::floor_tol(options.pg_tol);
    let armijo = T::lit(options.armijo);
    let (step_min, step_max) = (T::lit(1e-12), T::lit(1e12));

    let mut x = project(&scaled(&surrogate.anchor_w, inv), &scaled(&surrogate.anchor_v, inv));
    let mut f = eval(&x);
    let mut g = grad(&x);
    let gnorm = pair_inner(&g, &g).sqrt();
    let mut step = if gnorm > T::zero() { one / gnorm } else { one };
    let finish = |best: ((CMatrix<T>, CMatrix<T>), T), it: usize| finish_scaled(best.0, best.1, it, p_b);
    let mut best = (x.clone(), f);

    for it in 0..options.max_iters {
        // optimality measure: unit-step projected gradient
        let unit = project(&(&x.0 + &g.0), &(&x.1 + &g.1));
        let pg = (&unit.0 - &x.0, &unit.1 - &x.1);
        if pair_inner(&pg, &pg).sqrt() <= pg_tol {
            return Ok(finish(best, it));
        }

        let y = project(&(&x.0 + scaled(&g.0, step)), &(&x.1 + scaled(&g.1, step)));
        let d = (&y.0 - &x.0, &y.1 - &x.1);
        let slope = pair_inner(&g, &d);
        if slope <= T::zero() {
            return Ok(finish(best, it));
        }
        let reference = f;
        let mut t = one;
        let (xn, fn_) = loop {
            let cand = (&x.0 + scaled(&d.0, t), &x.1 + scaled(&d.1, t));
            let fc = eval(&cand);
            if fc >= reference + armijo * t * slope {
                break (cand, fc);
            }
            t *= T::lit(0.5);
            if t < T::lit(1e-20) {
                // no measurable ascent left at this precision
                return Ok(finish(best, it));
            }
        };
        let gn = grad(&xn);
        let s = (&xn.0 - &x.0, &xn.1 - &x.1);
        let yk = (&g.0 - &gn.0, &g.1 - &gn.1);
        let curvature = pair_inner(&s, &yk);
        step = if curvature > T::zero() {
            (pair_inner(&s, &s) / curvature).max(step_min).min(step_max)
        } else {
            step_max
        };
        let change = (fn_ - f).abs();
        x = xn;
        g = gn;
        let done = change <= rel_tol * one.max(f.abs());
        f = fn_;
        if f > best.1 {
            best = (x.clone(), f);
        }
        if done {
            return Ok(finish(best, it + 1));
        }
    }
    Err(ConvergenceFailure {
        iterations: options.max_iters,
        w: scaled(&best.0.0, p_b),
        v: scaled(&best.0.1, p_b),
    })
}

fn finish_scaled<T: Real>(x: (CMatrix<T>, CMatrix<T>), value: T, iterations: usize, p_b: T) -> InnerSolution<T> {
    InnerSolution {
        w: hermitian_part(&scaled(&x.0, p_b)),
        v: hermitian_part(&scaled(&x.1, p_b)),
        value,
        iterations,
    }
}

// ---------------------------------------------------------------------------
// SCA outer loop

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaOptions {
    /// Stop once the true objective improves by less than this.
    pub eps: f64,
    pub max_iters: usize,
    pub inner: InnerOptions,
}

impl Default for ScaOptions {
    fn default() -> Self {
        ScaOptions {
            eps: 1e-3,
            max_iters: 100,
            inner: InnerOptions::default(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ScaState<T: Real> {
    /// SCA rounds performed.
    pub iterations: usize,
    pub w: CMatrix<T>,
    pub v: CMatrix<T>,
    /// True objective `P - Q`, starting with the initial point.
    pub history: Vec<T>,
    pub converged: bool,
    pub inner_iterations: usize,
}

impl<T: Real> ScaState<T> {
    pub fn objective(&self) -> T {
        *self.history.last().expect("history holds the initial point")
    }
}

/// Strictly interior, full-rank starting point `(P_B / 4N) I` for both.
pub fn default_initial<T: Real>(n_t: usize, p_b: T) -> (CMatrix<T>, CMatrix<T>) {
    let d = p_b / T::from_usize(4 * n_t).unwrap();
    let m = CMatrix::identity(n_t, n_t).map(|z: Complex<T>| z * d);
    (m.clone(), m)
}

pub fn sca_loop<T: Real>(
    objective: &DcObjective<T>,
    initial: (CMatrix<T>, CMatrix<T>),
    p_b: T,
    with_noise: bool,
    options: &ScaOptions,
) -> Result<ScaState<T>, ConvergenceFailure<T>> {
    let n = objective.n_t;
    let (mut w, mut v) = initial;
    if !with_noise {
        v = CMatrix::zeros(n, n);
    }
    let eps = T::lit(options.eps);
    let mut history = vec![objective.value(&w, &v)];
    let mut converged = false;
    let mut iterations = 0;
    let mut inner_iterations = 0;
    for _ in 0..options.max_iters {
        iterations += 1;
        let surrogate = objective.linearize(&w, &v);
        let sol = solve_inner_convex(&surrogate, p_b, with_noise, &options.inner)?;
        inner_iterations += sol.iterations;
        let prev = *history.last().unwrap();
        let value = objective.value(&sol.w, &sol.v);
        if value >= prev {
            w = sol.w;
            v = sol.v;
            history.push(value);
        } else {
            // rounding-level regression; keep the incumbent
            history.push(prev);
        }
        if *history.last().unwrap() - prev < eps {
            converged = true;
            break;
        }
    }
    Ok(ScaState {
        iterations,
        w,
        v,
        history,
        converged,
        inner_iterations,
    })
}

/// Run SCA from each start and keep the run with the highest final
/// objective (the earliest one on ties). The objective is not concave, so a
/// single start can end at a poor stationary point.
pub fn sca_multistart<T: Real>(
    objective: &DcObjective<T>,
    starts: Vec<(CMatrix<T>, CMatrix<T>)>,
    p_b: T,
    with_noise: bool,
    options: &ScaOptions,
) -> Result<ScaState<T>, ConvergenceFailure<T>> {
    let mut best: Option<ScaState<T>> = None;
    for start in starts {
        let run = match sca_loop(objective, start, p_b, with_noise, options) {
            Ok(run) => run,
            // only the first start is required to converge
            Err(e) if best.is_some() => {
                log::debug!("extra SCA start dropped: {e}");
                continue;
            }
            Err(e) => return Err(e),
        };
        if best.as_ref().is_none_or(|b| run.objective() > b.objective()) {
            best = Some(run);
        }
    }
    Ok(best.expect("at least one start"))
}

/// Starts used by the transmit stage: the given point and the silent point
/// `W = V = 0`.
pub fn transmit_starts<T: Real>(incumbent: (CMatrix<T>, CMatrix<T>)) -> Vec<(CMatrix<T>, CMatrix<T>)> {
    let n = incumbent.0.nrows();
    vec![incumbent, (CMatrix::zeros(n, n), CMatrix::zeros(n, n))]
}

// ---------------------------------------------------------------------------
// Rank-one extraction

/// Principal component `√λ₁ u₁` of `W` and the ratio `λ₂ / λ₁`.
///
/// `u₁` is normalized so that its first non-negligible entry is real and
/// positive.
pub fn rank_one_extract<T: Real>(w: &CMatrix<T>) -> (CVector<T>, T) {
    let n = w.nrows();
    if n == 0 || w.iter().all(|z| abs2(*z) == T::zero()) {
        return (CVector::zeros(n), T::zero());
    }
    let eig = SymmetricEigen::new(hermitian_part(w));
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].partial_cmp(&eig.eigenvalues[a]).expect("finite eigenvalues"));
    let lam1 = eig.eigenvalues[order[0]];
    let lam2 = if n > 1 { eig.eigenvalues[order[1]].max(T::zero()) } else { T::zero() };
    let ratio = if lam1 > T::zero() { lam2 / lam1 } else { T::zero() };
    let u: CVector<T> = eig.eigenvectors.column(order[0]).into_owned();
    let unorm = norm2(&u).sqrt();
    let tiny = unorm * T::lit(1e-12).max(T::default_epsilon());
    let phase = u
        .iter()
        .find(|z| abs2(**z).sqrt() > tiny)
        .map(|z| z.conj() / real(abs2(*z).sqrt()))
        .unwrap_or_else(|| real(T::one()));
    let amp = lam1.max(T::zero()).sqrt() / unorm;
    (u.map(|z| z * phase * amp), ratio)
}

/// Total power `Tr(W) + Tr(V)`.
pub fn total_power<T: Real>(w: &CMatrix<T>, v: &CMatrix<T>) -> T {
    trace_re(w) + trace_re(v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::SystemConfig;
    use crate::scalar::{C, min_eigenvalue};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn rand_vec(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> CVector<f64> {
        CVector::from_iterator(
            n,
            (0..n).map(|_| C::new(rng.random_range(-1.0..1.0) * scale, rng.random_range(-1.0..1.0) * scale)),
        )
    }

    fn rand_psd(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> CMatrix<f64> {
        let a = CMatrix::from_fn(n, n, |_, _| C::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
        hermitian_part(&(&a * a.adjoint())).map(|z| z * scale)
    }

    fn eff(rng: &mut ChaCha8Rng, n: usize) -> EffectiveChannels<f64> {
        EffectiveChannels {
            h1: C::new(2e-4, 1e-4),
            h2: rand_vec(rng, n, 3e-5),
            h_bd: rand_vec(rng, n, 1e-4),
            h_be: rand_vec(rng, n, 5e-5),
            h_ud: C::new(1e-5, 2e-5),
            h_ue: C::new(3e-5, 0.0),
        }
    }

    fn budget() -> LinkBudget<f64> {
        SystemConfig::full_budget().budget()
    }

    #[test]
    fn zero_covariances_reduce_to_constants() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let e = eff(&mut rng, 3);
        let b = budget();
        let z = CMatrix::zeros(3, 3);
        let pu = b.p_u;
        let p = objective_p(&z, &z, &e, &b);
        let expected_p = (pu * abs2(e.h1) + b.sigma_b2).log2()
            + (pu * abs2(e.h_ud) + b.sigma_d2).log2()
            + b.sigma_e2.log2()
            + (pu * abs2(e.h_ue) + b.sigma_e2).log2();
        assert!((p - expected_p).abs() < 1e-10);
        let q = objective_q(&z, &z, &e, &b);
        let expected_q = b.sigma_b2.log2() + (pu * abs2(e.h_ud) + b.sigma_d2).log2() + 2.0 * (pu * abs2(e.h_ue) + b.sigma_e2).log2();
        assert!((q - expected_q).abs() < 1e-10);
        let (gw, gv) = grad_q(&z, &z, &EffectiveChannels { h2: CVector::zeros(3), h_bd: CVector::zeros(3), h_be: CVector::zeros(3), ..e.clone() }, &b);
        assert!(gw.iter().chain(gv.iter()).all(|x| x.norm() == 0.0));
    }

    #[test]
    fn doubling_eve_noise_raises_third_p_term() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let e = eff(&mut rng, 2);
        let b = budget();
        let w = rand_psd(&mut rng, 2, 0.01);
        let dc = DcObjective::full_duplex(&e, &b);
        let mut b2 = b;
        b2.sigma_e2 *= 2.0;
        let dc2 = DcObjective::full_duplex(&e, &b2);
        assert!(dc2.p[2].value(&w, &w) > dc.p[2].value(&w, &w));
    }

    #[test]
    fn scalar_expansion_oracle() {
        let e = EffectiveChannels {
            h1: C::new(1e-4, 0.0),
            h2: CVector::from_element(1, C::new(2e-5, 1e-5)),
            h_bd: CVector::from_element(1, C::new(5e-5, -5e-5)),
            h_be: CVector::from_element(1, C::new(0.0, 3e-5)),
            h_ud: C::new(1e-6, 0.0),
            h_ue: C::new(0.0, 2e-6),
        };
        let b = budget();
        let (wp, vp) = (0.03, 0.05);
        let w = CMatrix::from_element(1, 1, C::new(wp, 0.0));
        let v = CMatrix::from_element(1, 1, C::new(vp, 0.0));
        let (a2, abd, abe) = (5e-10, 5e-9, 9e-10);
        let (cb, cd, ce) = (b.sigma_b2, b.p_u * 1e-12 + b.sigma_d2, b.p_u * 4e-12 + b.sigma_e2);
        let p = ((wp + vp) * a2 + b.p_u * 1e-8 + cb).log2()
            + ((wp + vp) * abd + cd).log2()
            + ((wp + vp) * abe + b.sigma_e2).log2()
            + (vp * abe + ce).log2();
        let q = ((wp + vp) * a2 + cb).log2() + (vp * abd + cd).log2() + 2.0 * ((wp + vp) * abe + ce).log2();
        assert!((objective_p(&w, &v, &e, &b) - p).abs() < 1e-9);
        assert!((objective_q(&w, &v, &e, &b) - q).abs() < 1e-9);
        // d/dw of the scalar logs
        let ln2 = std::f64::consts::LN_2;
        let dq_dw = (a2 / ((wp + vp) * a2 + cb) + 2.0 * abe / ((wp + vp) * abe + ce)) / ln2;
        let dq_dv = dq_dw + abd / (vp * abd + cd) / ln2;
        let (gw, gv) = grad_q(&w, &v, &e, &b);
        assert!((gw[(0, 0)].re - dq_dw).abs() <= 1e-10 * dq_dw);
        assert!((gv[(0, 0)].re - dq_dv).abs() <= 1e-10 * dq_dv);
    }

    #[test]
    fn q_is_concave_on_random_pairs() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let b = budget();
        for _ in 0..200 {
            let e = eff(&mut rng, 3);
            let (wa, va, wb, vb) = (
                rand_psd(&mut rng, 3, 0.01),
                rand_psd(&mut rng, 3, 0.01),
                rand_psd(&mut rng, 3, 0.01),
                rand_psd(&mut rng, 3, 0.01),
            );
            let mid_w = (&wa + &wb).map(|z| z * 0.5);
            let mid_v = (&va + &vb).map(|z| z * 0.5);
            let qm = objective_q(&mid_w, &mid_v, &e, &b);
            let avg = 0.5 * objective_q(&wa, &va, &e, &b) + 0.5 * objective_q(&wb, &vb, &e, &b);
            assert!(qm >= avg - 1e-9);
        }
    }

    #[test]
    fn linearization_is_tight_at_anchor() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let e = eff(&mut rng, 3);
        let b = budget();
        let (aw, av) = (rand_psd(&mut rng, 3, 0.01), rand_psd(&mut rng, 3, 0.01));
        let at = linearized_objective(&aw, &av, (&aw, &av), &e, &b);
        let exact = objective_p(&aw, &av, &e, &b) - objective_q(&aw, &av, &e, &b);
        assert!((at - exact).abs() < 1e-10);
        let z = CMatrix::zeros(3, 3);
        let at0 = linearized_objective(&z, &z, (&z, &z), &e, &b);
        assert!((at0 - (objective_p(&z, &z, &e, &b) - objective_q(&z, &z, &e, &b))).abs() < 1e-10);
    }

    #[test]
    fn capped_simplex_projection() {
        let mut v = vec![0.5f64, -1.0, 0.2];
        project_capped_simplex(&mut v, 1.0);
        assert_eq!(v, vec![0.5, 0.0, 0.2]);
        let mut v = vec![2.0f64, 1.0, 0.0];
        project_capped_simplex(&mut v, 1.0);
        assert!((v[0] - 1.0).abs() < 1e-15 && v[1].abs() < 1e-15 && v[2] == 0.0);
        let mut v = vec![0.7f64, 0.7, 0.7, -3.0];
        project_capped_simplex(&mut v, 1.5);
        assert!(v[..3].iter().all(|x| (x - 0.5).abs() < 1e-15) && v[3] == 0.0);
    }

    #[test]
    fn projection_is_feasible_idempotent_and_nonexpansive() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..100 {
            let n = rng.random_range(1..5);
            let a = CMatrix::from_fn(n, n, |_, _| C::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
            let b = CMatrix::from_fn(n, n, |_, _| C::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
            let (w, v) = project_feasible(&hermitian_part(&a), &hermitian_part(&b), 1.0, true);
            assert!(min_eigenvalue(&w) >= -1e-12 && min_eigenvalue(&v) >= -1e-12);
            assert!(total_power(&w, &v) <= 1.0 + 1e-12);
            let (w2, v2) = project_feasible(&w, &v, 1.0, true);
            assert!((&w2 - &w).norm() < 1e-10 && (&v2 - &v).norm() < 1e-10);
            // variational inequality against random feasible points
            for _ in 0..5 {
                let (yw, yv) = project_feasible(&rand_psd(&mut rng, n, 0.3), &rand_psd(&mut rng, n, 0.3), 1.0, true);
                let lhs = inner(&(hermitian_part(&a) - &w), &(&yw - &w)) + inner(&(hermitian_part(&b) - &v), &(&yv - &v));
                assert!(lhs <= 1e-10, "{lhs}");
            }
        }
    }

    #[test]
    fn zero_budget_gives_zero_covariances() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let e = eff(&mut rng, 2);
        let dc = DcObjective::full_duplex(&e, &budget());
        let z = CMatrix::zeros(2, 2);
        let sol = solve_inner_convex(&dc.linearize(&z, &z), 0.0, true, &InnerOptions::default()).unwrap();
        assert_eq!(sol.w, z);
        assert_eq!(sol.v, z);
    }

    #[test]
    fn rank_one_examples() {
        let u = CVector::from_vec(vec![C::new(0.6f64, 0.0), C::new(0.0, 0.8)]);
        let w = gram(&u).map(|z| z * 0.25);
        let (x, ratio) = rank_one_extract(&w);
        assert!(ratio < 1e-12);
        assert!((&gram(&x) - &w).norm() < 1e-12);
        assert!(x[0].im.abs() < 1e-12 && x[0].re > 0.0);

        let (_, ratio) = rank_one_extract(&CMatrix::<f64>::identity(2, 2));
        assert!((ratio - 1.0).abs() < 1e-12);
        let (x, ratio) = rank_one_extract(&CMatrix::<f64>::zeros(3, 3));
        assert_eq!(ratio, 0.0);
        assert!(x.iter().all(|z| z.norm() == 0.0));
    }

    #[test]
    fn sca_is_monotone_and_feasible() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let b = budget();
        for n in 1..=4 {
            let e = eff(&mut rng, n);
            let dc = DcObjective::full_duplex(&e, &b);
            let opts = ScaOptions { eps: 1e-6, max_iters: 50, ..Default::default() };
            let st = sca_loop(&dc, default_initial(n, b.p_b), b.p_b, true, &opts).unwrap();
            assert!(st.history.windows(2).all(|h| h[1] >= h[0] - 1e-8));
            assert!(total_power(&st.w, &st.v) <= b.p_b * (1.0 + 1e-9));
            assert!(min_eigenvalue(&st.w) >= -1e-9 && min_eigenvalue(&st.v) >= -1e-9);
            assert!(st.iterations <= 50);
        }
    }

    #[test]
    fn multistart_keeps_the_best_run() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let b = budget();
        for n in 1..=3 {
            let e = eff(&mut rng, n);
            let dc = DcObjective::full_duplex(&e, &b);
            let opts = ScaOptions::default();
            let starts = transmit_starts(default_initial(n, b.p_b));
            assert_eq!(starts.len(), 2);
            let runs: Vec<f64> = starts
                .iter()
                .map(|s| sca_loop(&dc, s.clone(), b.p_b, true, &opts).unwrap().objective())
                .collect();
            let best = sca_multistart(&dc, starts, b.p_b, true, &opts).unwrap();
            assert_eq!(best.objective(), runs.iter().copied().fold(f64::NEG_INFINITY, f64::max));
        }
    }

    #[test]
    fn stationary_start_terminates_immediately() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let b = budget();
        let e = eff(&mut rng, 2);
        let dc = DcObjective::full_duplex(&e, &b);
        let opts = ScaOptions { eps: 1e-9, max_iters: 200, ..Default::default() };
        let st = sca_loop(&dc, default_initial(2, b.p_b), b.p_b, true, &opts).unwrap();
        let again = sca_loop(&dc, (st.w.clone(), st.v.clone()), b.p_b, true, &ScaOptions { eps: 1e-3, ..opts }).unwrap();
        assert_eq!(again.iterations, 1);
        assert!((&again.w - &st.w).norm() <= 1e-6 * b.p_b);
    }

    #[test]
    fn without_noise_v_stays_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let b = budget();
        let e = eff(&mut rng, 3);
        let dc = DcObjective::full_duplex(&e, &b);
        let st = sca_loop(&dc, default_initial(3, b.p_b), b.p_b, false, &ScaOptions::default()).unwrap();
        assert_eq!(trace_re(&st.v), 0.0);
        assert!(st.v.iter().all(|z| z.norm() == 0.0));
    }

    #[test]
    fn half_duplex_objective_matches_metrics() {
        use crate::metrics::{BeamformingState, unclamped_sum_rate};
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let b = budget();
        let n = 3;
        let ch = Channels {
            h_si: CMatrix::from_fn(n, n, |_, _| C::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))),
            h_ub: rand_vec(&mut rng, n, 1e-4),
            h_bd: rand_vec(&mut rng, n, 1e-4),
            h_be: rand_vec(&mut rng, n, 1e-4),
            h_ud: C::new(1e-5, 0.0),
            h_ue: C::new(0.0, 1e-5),
        };
        let mut w_r = rand_vec(&mut rng, n, 1.0);
        let nr = norm2(&w_r).sqrt();
        w_r = w_r.map(|z| z / nr);
        let state = BeamformingState {
            w_r: w_r.clone(),
            w: rand_psd(&mut rng, n, 0.01),
            v: rand_psd(&mut rng, n, 0.01),
            w_vec: None,
            v_vec: None,
        };
        let e = EffectiveChannels::new(&ch, &w_r, b.rho);
        for mode in [DuplexMode::Full, DuplexMode::Half] {
            let dc = DcObjective::for_mode(&e, &b, mode);
            let direct = unclamped_sum_rate(&ch, &state, &b, mode);
            assert!((dc.value(&state.w, &state.v) - direct).abs() < 1e-9, "{mode:?}");
        }
    }
}
