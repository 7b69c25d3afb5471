//! Information distances, the dual function and its ray maximization.

use dusa_conic::{solve, ConicProgram, Solution, SolveStatus};
use serde::{Deserialize, Serialize};

use crate::bandit::{best_arm_and_value, optimal_arms, RewardMatrix};
use crate::structures::{classify_arms, primal_cone, StructureSpec};
use crate::{Error, Result};

/// Exploration rates `η(x) ≥ 0`, one per arm.
pub type RateVector = Vec<f64>;

/// Nonnegative finite weights over the reward levels.
#[derive(Debug, Clone, PartialEq)]
pub struct Measure(Vec<f64>);

impl Measure {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::Parameter("measure weights must be finite and nonnegative".into()));
        }
        Ok(Self(weights))
    }

    pub fn weights(&self) -> &[f64] {
        &self.0
    }
}

/// `Σ M'(r) log(M'(r)/M(r)) − M'(r) + M(r)`, infinite unless `M' ≪ M`.
pub fn info_distance(mp: &Measure, m: &Measure) -> Result<f64> {
    if mp.0.len() != m.0.len() {
        return Err(Error::Parameter("measures live on different supports".into()));
    }
    Ok(info_terms(&mp.0, &m.0))
}

pub(crate) fn info_terms(mp: &[f64], m: &[f64]) -> f64 {
    let mut total = 0.0;
    for (&a, &b) in mp.iter().zip(m) {
        if a > 0.0 {
            if b <= 0.0 {
                return f64::INFINITY;
            }
            total += a * (a / b).ln();
        }
        total += b - a;
    }
    total
}

/// Bernoulli relative entropy `I_B(p, q)`.
pub fn bernoulli_kl(p: f64, q: f64) -> f64 {
    let term = |a: f64, b: f64| {
        if a <= 0.0 {
            0.0
        } else if b <= 0.0 {
            f64::INFINITY
        } else {
            a * (a / b).ln()
        }
    };
    (term(p, q) + term(1.0 - p, 1.0 - q)).max(0.0)
}

/// Both sides of the chain-rule identity `N·I(P̂, P) = Σ_r N'(r)·I_B(P̂'(r), P'(r))`.
///
/// `P'(r) = P(r) / (1 − Σ_{r'<r} P(r'))` and `N'(r) = N·(1 − Σ_{r'<r} P̂(r'))`.
pub fn kl_chain_decomposition(phat: &Measure, p: &Measure, n: f64) -> Result<(f64, f64)> {
    let (a, b) = (phat.weights(), p.weights());
    if a.len() != b.len() || a.len() < 2 {
        return Err(Error::Parameter("need two distributions on a common support of size >= 2".into()));
    }
    if !(n >= 0.0) {
        return Err(Error::Parameter("N must be nonnegative".into()));
    }
    let left = if n == 0.0 { 0.0 } else { n * info_terms(a, b) };
    let mut right = 0.0;
    let (mut tail_hat, mut tail) = (1.0f64, 1.0f64);
    for r in 0..a.len() - 1 {
        let weight = n * tail_hat;
        if weight > 0.0 {
            let ph = (a[r] / tail_hat).clamp(0.0, 1.0);
            let pp = if tail > 0.0 { (b[r] / tail).clamp(0.0, 1.0) } else { 1.0 };
            right += weight * bernoulli_kl(ph, pp);
        }
        tail_hat -= a[r];
        tail -= b[r];
        if tail_hat < 1e-15 {
            tail_hat = 0.0;
        }
        if tail < 1e-15 {
            tail = 0.0;
        }
    }
    Ok((left, right))
}

/// Dual variables `μ = (α, β, λ)` with the dual-cone auxiliaries that certify `λ ∈ K*`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DualVars {
    pub alpha: f64,
    pub beta: f64,
    /// Column-major like [`RewardMatrix`].
    pub lambda: Vec<f64>,
    pub aux: Vec<f64>,
}

impl DualVars {
    pub fn zero(levels: usize, arms: usize, aux: usize) -> Self {
        Self { alpha: 0.0, beta: 0.0, lambda: vec![0.0; levels * arms], aux: vec![0.0; aux] }
    }

    pub fn scaled(&self, rho: f64) -> Self {
        Self {
            alpha: rho * self.alpha,
            beta: rho * self.beta,
            lambda: self.lambda.iter().map(|v| rho * v).collect(),
            aux: self.aux.iter().map(|v| rho * v).collect(),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.alpha == 0.0 && self.beta == 0.0 && self.lambda.iter().all(|v| *v == 0.0)
    }

    /// Squared Euclidean norm of `(α, β, λ)`.
    pub fn norm_sq(&self) -> f64 {
        self.alpha * self.alpha + self.beta * self.beta + self.lambda.iter().map(|v| v * v).sum::<f64>()
    }
}

/// The dual function along the ray `ρ ↦ Dual(η, x', P; ρμ)`.
///
/// Cells are `(ηP, η, d)` with `d = λ(r,x) + β + α·r·1(x = x')` over the
/// suboptimal arms; `slope` collects the terms linear in `ρ`.
#[derive(Debug, Clone)]
pub struct DualRay {
    cells: Vec<(f64, f64, f64)>,
    slope: f64,
    /// Largest feasible `ρ` and whether it is excluded.
    rho_max: f64,
    open_end: bool,
}

impl DualRay {
    pub fn new(eta: &[f64], xp: usize, p: &RewardMatrix, mu: &DualVars) -> Self {
        let k = p.levels();
        let r = p.support().values();
        let (_, best) = best_arm_and_value(p);
        let opt = optimal_arms(p);
        let mut cells = Vec::new();
        let mut rho_max = f64::INFINITY;
        let mut open_end = false;
        let mut n_sub = 0usize;
        let mut slope = mu.alpha * best;
        for x in 0..p.arms() {
            if opt.contains(&x) {
                for l in 0..k {
                    slope -= mu.lambda[x * k + l] * p.get(l, x);
                }
                continue;
            }
            n_sub += 1;
            let e = eta[x];
            for l in 0..k {
                let d = mu.lambda[x * k + l] + mu.beta + if x == xp { mu.alpha * r[l] } else { 0.0 };
                let pr = p.get(l, x);
                if d > 0.0 {
                    let lim = e / d;
                    let open = e > 0.0 && pr > 0.0;
                    if lim < rho_max || (lim == rho_max && open) {
                        rho_max = lim;
                        open_end = open;
                    }
                }
                if e > 0.0 && pr > 0.0 {
                    cells.push((e * pr, e, d));
                }
            }
        }
        slope += mu.beta * n_sub as f64;
        Self { cells, slope, rho_max, open_end }
    }

    /// Coefficient of `ρ` in the terms that are linear along the ray.
    pub fn slope(&self) -> f64 {
        self.slope
    }

    pub fn rho_max(&self) -> f64 {
        self.rho_max
    }

    pub fn value(&self, rho: f64) -> f64 {
        if rho > self.rho_max || (rho == self.rho_max && self.open_end) {
            return f64::NEG_INFINITY;
        }
        let mut v = rho * self.slope;
        for &(w, e, d) in &self.cells {
            let c = e - rho * d;
            if c <= 0.0 {
                return f64::NEG_INFINITY;
            }
            v += w * (c / e).ln();
        }
        v
    }

    /// `max_{ρ ≥ 0}` of [`value`](Self::value) and a maximizer.
    pub fn maximize(&self) -> (f64, f64) {
        if self.rho_max <= 0.0 {
            return (0.0, 0.0);
        }
        let f = |rho: f64| self.value(rho);
        // bracket expansion
        let mut prev = 0.0;
        let mut f_prev = 0.0;
        let mut cur = if self.rho_max.is_finite() { self.rho_max.min(1.0) * 0.5 } else { 1.0 };
        let mut f_cur = f(cur);
        if f_cur <= f_prev {
            return golden(&f, 0.0, cur, (0.0, 0.0));
        }
        for _ in 0..200 {
            let next = if self.rho_max.is_finite() { (2.0 * cur).min(0.5 * (cur + self.rho_max)) } else { 2.0 * cur };
            let f_next = f(next);
            if f_next <= f_cur || next == cur {
                return golden(&f, prev, next, (f_cur, cur));
            }
            if self.rho_max.is_finite() && self.rho_max - next <= 1e-12 * self.rho_max {
                // increasing up to the boundary of the domain
                let v = f(self.rho_max);
                return if v > f_next { (v, self.rho_max) } else { (f_next, next) };
            }
            prev = cur;
            f_prev = f_cur;
            cur = next;
            f_cur = f_next;
        }
        let _ = f_prev;
        (f64::INFINITY, f64::INFINITY)
    }
}

const GOLDEN_ITERS: usize = 200;

/// Golden-section maximization of a concave `f` on `[a, b]`, seeded with a known point.
fn golden(f: &impl Fn(f64) -> f64, mut a: f64, mut b: f64, seed: (f64, f64)) -> (f64, f64) {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut best = if seed.0 > 0.0 { seed } else { (0.0, 0.0) };
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    for _ in 0..GOLDEN_ITERS {
        if b - a <= 1e-13 * b.max(1e-300) {
            break;
        }
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
        for (v, x) in [(fc, c), (fd, d)] {
            if v > best.0 {
                best = (v, x);
            }
        }
    }
    best
}

/// `Dual(η, x', P; μ)`, possibly `−∞`.
pub fn dual_value(eta: &[f64], xp: usize, p: &RewardMatrix, mu: &DualVars) -> f64 {
    DualRay::new(eta, xp, p, mu).value(1.0)
}

/// `max_{ρ ≥ 0} Dual(η, x', P; ρμ)`; at least zero, possibly `+∞`.
pub fn dual_test(eta: &[f64], xp: usize, p: &RewardMatrix, mu: &DualVars) -> f64 {
    DualRay::new(eta, xp, p, mu).maximize().0
}

/// [`dual_test`] together with a maximizing `ρ`.
pub fn dual_test_argmax(eta: &[f64], xp: usize, p: &RewardMatrix, mu: &DualVars) -> (f64, f64) {
    DualRay::new(eta, xp, p, mu).maximize()
}

const ORACLE_TOL: f64 = 1e-9;

fn accept(sol: Solution, context: &str) -> Result<Solution> {
    match sol.status {
        SolveStatus::Optimal => Ok(sol),
        SolveStatus::MaxIter if sol.primal_residual <= 1e-7 => Ok(sol),
        status => Err(Error::Solver { status, context: context.into() }),
    }
}

/// Adds KL terms `η(x)·I(P(x), Q(x))` for suboptimal arms; returns the constant part.
///
/// `q_var(r, x)` is the program variable holding `Q(r, x)`.
fn add_kl_objective(
    prog: &mut ConicProgram,
    eta: &[f64],
    p: &RewardMatrix,
    arms: &[usize],
    q_var: impl Fn(usize, usize) -> usize,
) -> f64 {
    let mut constant = 0.0;
    for &x in arms {
        let e = eta[x];
        if e <= 0.0 {
            continue;
        }
        for l in 0..p.levels() {
            let pr = p.get(l, x);
            let q = q_var(l, x);
            prog.add_cost(q, e);
            constant -= e * pr;
            if pr > 0.0 {
                // (a, Q, p) ∈ K_exp  ⇔  a ≤ p·log(Q/p), so −a bounds p·log(p/Q)
                let a = prog.add_var();
                let pc = prog.add_var();
                prog.fix(pc, pr);
                prog.add_exp([a, q, pc]);
                prog.set_cost(a, -e);
            }
        }
    }
    constant
}

fn kl_objective_at(eta: &[f64], p: &RewardMatrix, arms: &[usize], q: impl Fn(usize, usize) -> f64) -> f64 {
    arms.iter()
        .filter(|&&x| eta[x] > 0.0)
        .map(|&x| {
            let col: Vec<f64> = (0..p.levels()).map(|l| q(l, x).max(0.0)).collect();
            eta[x] * info_terms(p.column(x), &col)
        })
        .sum()
}

/// `min Σ_{x ∈ X̃} η(x) I(P(x), Q(x))` over deceitful models for `x'`; `+∞` if none exist.
pub fn dist_oracle(eta: &[f64], xp: usize, p: &RewardMatrix, spec: &StructureSpec) -> Result<f64> {
    spec.check_matrix(p)?;
    let class = classify_arms(spec, p)?;
    if !class.is_deceitful(xp) {
        return Ok(f64::INFINITY);
    }
    let (_, best) = best_arm_and_value(p);
    let sub = class.suboptimal();
    let k = p.levels();
    let cone = primal_cone(spec);
    let nv = cone.system.var_count;
    let mut prog = ConicProgram::new(nv);
    cone.system.embed(&mut prog, &(0..nv).collect::<Vec<_>>());
    prog.fix(cone.mass_var.expect("primal mass"), 1.0);
    for &x in &class.optimal {
        for l in 0..k {
            prog.fix(x * k + l, p.get(l, x));
        }
    }
    let r = p.support().values();
    prog.add_ge((0..k).map(|l| (xp * k + l, r[l])).collect(), best);
    let constant = add_kl_objective(&mut prog, eta, p, &sub, |l, x| x * k + l);
    let sol = accept(solve(&prog, ORACLE_TOL)?, "distance oracle")?;
    let exact = kl_objective_at(eta, p, &sub, |l, x| sol.x[x * k + l]);
    Ok(if exact.is_finite() { exact } else { sol.objective + constant })
}

/// `min Σ_{x ∈ X̃} η(x) I(P(x), Q(x))` over the half-space set cut out by `μ`.
pub fn halfspace_distance(eta: &[f64], xp: usize, p: &RewardMatrix, mu: &DualVars) -> Result<f64> {
    let ray = DualRay::new(eta, xp, p, mu);
    let k = p.levels();
    let r = p.support().values();
    let opt = optimal_arms(p);
    let sub: Vec<usize> = (0..p.arms()).filter(|x| !opt.contains(x)).collect();
    let mut prog = ConicProgram::new(sub.len() * k);
    let slot = |x: usize| sub.iter().position(|&s| s == x).expect("suboptimal arm");
    let q_var = |l: usize, x: usize| slot(x) * k + l;
    let mut terms = Vec::new();
    for &x in &sub {
        for l in 0..k {
            let d = mu.lambda[x * k + l] + mu.beta + if x == xp { mu.alpha * r[l] } else { 0.0 };
            prog.add_ge(vec![(q_var(l, x), 1.0)], 0.0);
            if d != 0.0 {
                terms.push((q_var(l, x), d));
            }
        }
    }
    prog.add_ge(terms, ray.slope);
    let constant = add_kl_objective(&mut prog, eta, p, &sub, q_var);
    let sol = solve(&prog, ORACLE_TOL)?;
    if sol.status == SolveStatus::Infeasible {
        return Ok(f64::INFINITY);
    }
    let sol = accept(sol, "half-space distance")?;
    let exact = kl_objective_at(eta, p, &sub, |l, x| sol.x[q_var(l, x)]);
    Ok(if exact.is_finite() { exact } else { sol.objective + constant })
}
