//! Regret lower bound: the dual conic program and closed-form oracles.

use dusa_conic::{lp_solve, solve, ConicProgram, SolveStatus};
use serde::Serialize;

use crate::bandit::{best_arm_and_value, gap, RewardMatrix};
use crate::info::{bernoulli_kl, dual_test_argmax, DualVars, RateVector};
use crate::structures::{classify_arms, dual_cone, ArmClassification, StructureSpec};
use crate::{Error, Result};

/// Default solver tolerance for lower-bound solves.
pub const DEFAULT_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Serialize)]
pub struct LowerBoundResult {
    /// `C(P) = Σ η(x) Δ(x)` at the returned rates.
    pub value: f64,
    pub rates: RateVector,
    /// Per arm; zero for arms that are not deceitful.
    pub duals: Vec<DualVars>,
    pub deceitful: Vec<usize>,
    pub non_deceitful: Vec<usize>,
    pub status: SolveStatus,
}

/// Extra constraints and the minimum-norm objective of the strict deep update.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StrictSelection {
    /// Upper bound on `Σ η Δ`, normally `C(P) + ε`.
    pub budget: f64,
    /// Floor on the rates and on the slacks `η − λ − β − α r 1`.
    pub floor: f64,
}

#[derive(Debug, Clone)]
pub struct DualBlock {
    pub arm: usize,
    pub alpha: usize,
    pub beta: usize,
    pub lambda: usize,
    pub aux: usize,
    pub aux_len: usize,
}

/// The lower-bound program with the positions of its named variables.
#[derive(Debug, Clone)]
pub struct LowerBoundProgram {
    pub program: ConicProgram,
    /// Rate variable per arm; `None` on optimal arms, whose rate is fixed at zero.
    pub eta: Vec<Option<usize>>,
    pub blocks: Vec<DualBlock>,
    pub classification: ArmClassification,
}

impl LowerBoundProgram {
    /// Builds the program for `P`; returns `Ok(None)` if no arm is deceitful.
    pub fn build(spec: &StructureSpec, p: &RewardMatrix, strict: Option<StrictSelection>) -> Result<Option<Self>> {
        let class = classify_arms(spec, p)?;
        Ok(Self::with_classification(spec, p, class, strict))
    }

    pub fn with_classification(
        spec: &StructureSpec,
        p: &RewardMatrix,
        class: ArmClassification,
        strict: Option<StrictSelection>,
    ) -> Option<Self> {
        Self::with_level(spec, p, class, strict, 1.0)
    }

    /// The program with every information constraint reading `≥ level` instead of `≥ 1`.
    ///
    /// The feasible set scales by `level`, so a solution divided by `level`
    /// solves the original program.
    pub fn with_level(
        spec: &StructureSpec,
        p: &RewardMatrix,
        class: ArmClassification,
        strict: Option<StrictSelection>,
        level: f64,
    ) -> Option<Self> {
        if class.deceitful.is_empty() {
            return None;
        }
        let k = p.levels();
        let arms = p.arms();
        let r = p.support().values();
        let (_, best) = best_arm_and_value(p);
        let sub = class.suboptimal();
        let cone = dual_cone(spec);
        let mut prog = ConicProgram::new(0);

        let mut eta = vec![None; arms];
        for &x in &sub {
            let v = prog.add_var();
            prog.add_ge(vec![(v, 1.0)], strict.map_or(0.0, |s| s.floor));
            match strict {
                Some(_) => prog.set_quadratic(v, 2.0),
                None => prog.set_cost(v, gap(p, x)),
            }
            eta[x] = Some(v);
        }
        if let Some(s) = strict {
            let terms = sub.iter().map(|&x| (eta[x].unwrap(), gap(p, x))).collect();
            prog.add_le(terms, s.budget);
        }

        let mut blocks = Vec::new();
        for &xp in &class.deceitful {
            let alpha = prog.add_var();
            let beta = prog.add_var();
            let lambda = prog.add_vars(k * arms);
            let aux = prog.add_vars(cone.aux_count());
            prog.add_ge(vec![(alpha, 1.0)], 0.0);
            let map: Vec<usize> = (0..k * arms).map(|i| lambda + i).chain((0..cone.aux_count()).map(|i| aux + i)).collect();
            cone.system.embed(&mut prog, &map);
            if strict.is_some() {
                for v in [alpha, beta].into_iter().chain(lambda..lambda + k * arms) {
                    prog.set_quadratic(v, 2.0);
                }
            }

            // Σ P m − Σ_{X⋆} λ P + α Rew⋆ + β |X̃| ≥ 1
            let mut info = vec![(alpha, best), (beta, sub.len() as f64)];
            for &x in &class.optimal {
                for l in 0..k {
                    let pr = p.get(l, x);
                    if pr > 0.0 {
                        info.push((lambda + x * k + l, -pr));
                    }
                }
            }
            for &x in &sub {
                let e = eta[x].unwrap();
                for l in 0..k {
                    // d = λ(r,x) + β + α r 1(x = x')
                    let mut d = vec![(lambda + x * k + l, 1.0), (beta, 1.0)];
                    if x == xp && r[l] != 0.0 {
                        d.push((alpha, r[l]));
                    }
                    let pr = p.get(l, x);
                    if pr > 0.0 {
                        let m = prog.add_var();
                        let c = prog.add_var();
                        let mut row: Vec<(usize, f64)> = vec![(c, 1.0), (e, -1.0)];
                        row.extend(d.iter().copied());
                        prog.add_eq(row, 0.0);
                        prog.add_exp([m, c, e]);
                        info.push((m, pr));
                    }
                    let floor = strict.map_or(0.0, |s| s.floor);
                    if pr == 0.0 || floor > 0.0 {
                        let mut row: Vec<(usize, f64)> = vec![(e, 1.0)];
                        row.extend(d.iter().map(|&(i, c)| (i, -c)));
                        prog.add_ge(row, floor);
                    }
                }
            }
            prog.add_ge(info, level);
            blocks.push(DualBlock { arm: xp, alpha, beta, lambda, aux, aux_len: cone.aux_count() });
        }
        Some(Self { program: prog, eta, blocks, classification: class })
    }

    /// Reads rates and per-arm duals out of a solution vector.
    pub fn extract(&self, x: &[f64], levels: usize) -> (RateVector, Vec<DualVars>) {
        let arms = self.eta.len();
        let rates = self.eta.iter().map(|v| v.map_or(0.0, |i| x[i].max(0.0))).collect();
        let mut duals = vec![DualVars::zero(levels, arms, 0); arms];
        for b in &self.blocks {
            duals[b.arm] = DualVars {
                alpha: x[b.alpha].max(0.0),
                beta: x[b.beta],
                lambda: x[b.lambda..b.lambda + levels * arms].to_vec(),
                aux: x[b.aux..b.aux + b.aux_len].to_vec(),
            };
        }
        (rates, duals)
    }
}

/// [`lower_bound_dual_tol`] at [`DEFAULT_TOL`].
pub fn lower_bound_dual(spec: &StructureSpec, p: &RewardMatrix) -> Result<LowerBoundResult> {
    lower_bound_dual_tol(spec, p, DEFAULT_TOL)
}

/// `C(P)` through the dual conic program.
///
/// The returned rates and duals are made exactly feasible after the solve:
/// each `μ(x')` is moved to its best point on its ray and, if a dual test
/// still falls short of one, rates and duals are scaled up jointly.
pub fn lower_bound_dual_tol(spec: &StructureSpec, p: &RewardMatrix, tol: f64) -> Result<LowerBoundResult> {
    let class = classify_arms(spec, p)?;
    lower_bound_classified(spec, p, class, tol, None)
}

pub(crate) fn lower_bound_classified(
    spec: &StructureSpec,
    p: &RewardMatrix,
    class: ArmClassification,
    tol: f64,
    strict: Option<StrictSelection>,
) -> Result<LowerBoundResult> {
    let k = p.levels();
    let arms = p.arms();
    let aux = dual_cone(spec).aux_count();
    let (deceitful, non_deceitful) = (class.deceitful.clone(), class.non_deceitful.clone());
    if deceitful.is_empty() {
        return Ok(LowerBoundResult {
            value: 0.0,
            rates: vec![0.0; arms],
            duals: vec![DualVars::zero(k, arms, aux); arms],
            deceitful,
            non_deceitful,
            status: SolveStatus::Optimal,
        });
    }
    // Near-tied means push the optimal rates far from the solver's unit
    // starting point; the homogeneous rescaling brings them back.
    let levels: &[f64] = if strict.is_some() { &[1.0] } else { &RETRY_LEVELS };
    let mut failure = None;
    for &level in levels {
        let lb = LowerBoundProgram::with_level(spec, p, class.clone(), strict, level).expect("a deceitful arm");
        let sol = solve(&lb.program, tol)?;
        // a stalled iterate is still usable: the rescaling below restores exact feasibility
        let usable = matches!(sol.status, SolveStatus::Optimal | SolveStatus::MaxIter) && sol.x.iter().all(|v| v.is_finite());
        if !usable {
            failure = Some(Error::Solver { status: sol.status, context: "lower-bound program".into() });
            continue;
        }
        let (rates, duals) = lb.extract(&sol.x, k);
        let rates: Vec<f64> = rates.iter().map(|v| v / level).collect();
        let duals = duals.iter().map(|d| d.scaled(1.0 / level)).collect();
        match restore_feasibility(p, &deceitful, rates, duals, aux, strict.is_none()) {
            Some((value, rates, duals)) => {
                return Ok(LowerBoundResult { value, rates, duals, deceitful, non_deceitful, status: sol.status });
            }
            None => {
                failure = Some(Error::Solver { status: SolveStatus::MaxIter, context: "lower-bound rates fail every dual test".into() })
            }
        }
    }
    Err(failure.expect("at least one attempt"))
}

/// Right-hand sides tried in turn for the information constraints.
const RETRY_LEVELS: [f64; 3] = [1.0, 1e-3, 1e-6];

/// Moves each dual to its best point on its ray and scales rates and duals
/// until every dual test reaches one; `None` if some test stays at zero.
fn restore_feasibility(
    p: &RewardMatrix,
    deceitful: &[usize],
    mut rates: RateVector,
    mut duals: Vec<DualVars>,
    aux: usize,
    along_ray: bool,
) -> Option<(f64, RateVector, Vec<DualVars>)> {
    for d in duals.iter_mut() {
        d.aux.resize(aux, 0.0);
    }
    let mut worst = f64::INFINITY;
    for &xp in deceitful {
        let (val, rho) = dual_test_argmax(&rates, xp, p, &duals[xp]);
        if rho.is_finite() && rho > 0.0 && along_ray {
            duals[xp] = duals[xp].scaled(rho);
        }
        worst = worst.min(val);
    }
    if !(worst > 0.0) {
        return None;
    }
    if worst < 1.0 {
        let s = 1.0 / worst;
        rates.iter_mut().for_each(|v| *v *= s);
        for &xp in deceitful {
            duals[xp] = duals[xp].scaled(s);
        }
    }
    let value = (0..p.arms()).map(|x| rates[x] * gap(p, x)).sum();
    Some((value, rates, duals))
}

/// `K_inf(P(x), m) = min { I(P(x), Q) : mean(Q) ≥ m }` over distributions on the support,
/// computed through its one-dimensional dual.
pub fn kl_inf(column: &[f64], support: &[f64], m: f64) -> f64 {
    let mean: f64 = column.iter().zip(support).map(|(p, r)| p * r).sum();
    if mean >= m {
        return 0.0;
    }
    let top = support[support.len() - 1];
    if m >= top {
        return f64::INFINITY;
    }
    let g = |lam: f64| -> f64 {
        column.iter().zip(support).filter(|(p, _)| **p > 0.0).map(|(p, r)| p * (1.0 - lam * (r - m)).ln()).sum()
    };
    let dg = |lam: f64| -> f64 {
        -column.iter().zip(support).filter(|(p, _)| **p > 0.0).map(|(p, r)| p * (r - m) / (1.0 - lam * (r - m))).sum::<f64>()
    };
    let upper = 1.0 / (top - m);
    let (mut lo, mut hi) = (0.0, upper);
    if dg(upper * (1.0 - 1e-15)) >= 0.0 {
        return g(upper);
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if dg(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-16 * upper {
            break;
        }
    }
    g(0.5 * (lo + hi))
}

/// `Σ_{x deceitful} Δ(x) / K_inf(P(x), Rew⋆)` for arms without structure.
pub fn lower_bound_separable(p: &RewardMatrix) -> f64 {
    let (_, best) = best_arm_and_value(p);
    let top = p.support().max();
    if best >= top - crate::structures::DECEIT_TOL {
        return 0.0;
    }
    crate::bandit::suboptimal_arms(p)
        .into_iter()
        .map(|x| gap(p, x) / kl_inf(p.column(x), p.support().values(), best))
        .sum()
}

/// Worst deceitful Bernoulli model for `x'`: `Q(1,x) = max(P(1,x), Rew⋆ − L·d(x, x'))`.
pub fn worst_deceitful_lipschitz(p: &RewardMatrix, xp: usize, lipschitz: f64, d: &[Vec<f64>]) -> Result<RewardMatrix> {
    check_bernoulli_lipschitz(p, d)?;
    p.check_arm(xp)?;
    let (_, best) = best_arm_and_value(p);
    let means: Vec<f64> = (0..p.arms()).map(|x| p.get(1, x).max(best - lipschitz * d[x][xp])).collect();
    RewardMatrix::bernoulli(&means)
}

fn check_bernoulli_lipschitz(p: &RewardMatrix, d: &[Vec<f64>]) -> Result<()> {
    if !p.support().is_bernoulli() {
        return Err(Error::Support("closed-form Lipschitz bound needs rewards {0, 1}".into()));
    }
    if d.len() != p.arms() || d.iter().any(|row| row.len() != p.arms()) {
        return Err(Error::Structure("distance matrix must be square over the arms".into()));
    }
    Ok(())
}

/// Lipschitz Bernoulli lower bound as a linear program over the rates; returns `(C, η)`.
pub fn lower_bound_lipschitz_rates(p: &RewardMatrix, lipschitz: f64, d: &[Vec<f64>]) -> Result<(f64, RateVector)> {
    check_bernoulli_lipschitz(p, d)?;
    let arms = p.arms();
    let (_, best) = best_arm_and_value(p);
    let sub = crate::bandit::suboptimal_arms(p);
    if best >= 1.0 - crate::structures::DECEIT_TOL || sub.is_empty() {
        return Ok((0.0, vec![0.0; arms]));
    }
    let mut prog = ConicProgram::new(arms);
    for x in 0..arms {
        prog.add_ge(vec![(x, 1.0)], 0.0);
        prog.set_cost(x, gap(p, x));
    }
    let opt = crate::bandit::optimal_arms(p);
    for &x in &opt {
        prog.fix(x, 0.0);
    }
    let mut rows = Vec::new();
    for &xp in &sub {
        let q = worst_deceitful_lipschitz(p, xp, lipschitz, d)?;
        let row: Vec<(usize, f64)> = sub
            .iter()
            .map(|&x| (x, bernoulli_kl(p.get(1, x), q.get(1, x))))
            .filter(|(_, c)| *c > 0.0)
            .collect();
        if row.iter().any(|(_, c)| !c.is_finite()) {
            return Err(Error::Infeasible("worst deceitful model is singular with respect to P".into()));
        }
        prog.add_ge(row.clone(), 1.0);
        rows.push(row);
    }
    let sol = lp_solve(&prog, 1e-10)?;
    let usable = matches!(sol.status, SolveStatus::Optimal | SolveStatus::MaxIter) && sol.x.iter().all(|v| v.is_finite());
    if !usable {
        return Err(Error::Solver { status: sol.status, context: "Lipschitz lower-bound LP".into() });
    }
    let mut eta: Vec<f64> = sol.x.iter().map(|v| v.max(0.0)).collect();
    for &x in &opt {
        eta[x] = 0.0;
    }
    // badly scaled instances can stall just short of feasibility
    let worst = rows.iter().map(|row| row.iter().map(|&(x, c)| c * eta[x]).sum::<f64>()).fold(f64::INFINITY, f64::min);
    if !(worst > 0.0) {
        return Err(Error::Solver { status: sol.status, context: "Lipschitz lower-bound LP".into() });
    }
    if worst < 1.0 {
        eta.iter_mut().for_each(|v| *v /= worst);
    }
    let value = (0..arms).map(|x| eta[x] * gap(p, x)).sum();
    Ok((value, eta))
}

/// Value of [`lower_bound_lipschitz_rates`].
pub fn lower_bound_lipschitz_lp(p: &RewardMatrix, lipschitz: f64, d: &[Vec<f64>]) -> Result<f64> {
    lower_bound_lipschitz_rates(p, lipschitz, d).map(|(c, _)| c)
}

/// Tail bound `P(Σ_x N_t(x) I(P_t(x), P(x)) ≥ δ)` for `arms` arms and `levels` reward levels.
pub fn concentration_bound(delta: f64, t: f64, arms: usize, levels: usize) -> Result<f64> {
    if arms == 0 || levels < 2 {
        return Err(Error::Parameter("need at least one arm and two levels".into()));
    }
    let n = (arms * (levels - 1)) as f64;
    if !(delta >= n + 1.0) {
        return Err(Error::Parameter(format!("delta must be at least {}", n + 1.0)));
    }
    if !(t >= 1.0) {
        return Err(Error::Parameter("t must be at least 1".into()));
    }
    let e = std::f64::consts::E;
    let base = delta * (t.ln() * delta + 1.0).ceil() * 2.0 * e / n;
    // in logs to stay finite for large exponents
    Ok((1.0 + n * base.ln() - delta).exp())
}
