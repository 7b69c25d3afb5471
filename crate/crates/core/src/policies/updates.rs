//! Shallow and deep re-optimization of exploration rates and dual variables.

use dusa_conic::{solve, ConicProgram, SolveStatus};

use crate::bandit::{gap, RewardMatrix};
use crate::info::{dual_test, DualRay, DualVars, RateVector};
use crate::lowerbound::{lower_bound_classified, LowerBoundResult, StrictSelection};
use crate::structures::{ArmClassification, StructureSpec};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum ShallowOutcome {
    Rates(RateVector),
    /// No rates pass every dual test with the given duals.
    Infeasible,
}

impl ShallowOutcome {
    /// Rates, with `+∞` on every arm in the infeasible case.
    pub fn rates(&self, arms: usize) -> RateVector {
        match self {
            ShallowOutcome::Rates(r) => r.clone(),
            ShallowOutcome::Infeasible => vec![f64::INFINITY; arms],
        }
    }
}

struct ShallowProgram {
    program: ConicProgram,
    eta: Vec<Option<usize>>,
}

fn shallow_program(p: &RewardMatrix, class: &ArmClassification, duals: &[DualVars]) -> Option<ShallowProgram> {
    let k = p.levels();
    let sub = class.suboptimal();
    let mut prog = ConicProgram::new(0);
    let mut eta = vec![None; p.arms()];
    for &x in &sub {
        let v = prog.add_var();
        prog.add_ge(vec![(v, 1.0)], 0.0);
        eta[x] = Some(v);
    }
    let r = p.support().values();
    for &xp in &class.deceitful {
        let mu = &duals[xp];
        if mu.is_zero() {
            return None;
        }
        let ray = DualRay::new(&vec![1.0; p.arms()], xp, p, mu);
        let rho = prog.add_var();
        prog.add_ge(vec![(rho, 1.0)], 0.0);
        let mut info = vec![(rho, ray.slope())];
        for &x in &sub {
            let e = eta[x].unwrap();
            for l in 0..k {
                let d = mu.lambda[x * k + l] + mu.beta + if x == xp { mu.alpha * r[l] } else { 0.0 };
                let pr = p.get(l, x);
                if pr > 0.0 {
                    let m = prog.add_var();
                    let c = prog.add_var();
                    prog.add_eq(vec![(c, 1.0), (e, -1.0), (rho, d)], 0.0);
                    prog.add_exp([m, c, e]);
                    info.push((m, pr));
                } else if d != 0.0 {
                    prog.add_ge(vec![(e, 1.0), (rho, -d)], 0.0);
                }
            }
        }
        prog.add_ge(info, 1.0);
    }
    Some(ShallowProgram { program: prog, eta })
}

fn finish_rates(
    p: &RewardMatrix,
    class: &ArmClassification,
    duals: &[DualVars],
    eta_vars: &[Option<usize>],
    x: &[f64],
) -> ShallowOutcome {
    let mut rates: RateVector = eta_vars.iter().map(|v| v.map_or(0.0, |i| x[i].max(0.0))).collect();
    let worst = class.deceitful.iter().map(|&xp| dual_test(&rates, xp, p, &duals[xp])).fold(f64::INFINITY, f64::min);
    if !(worst > 0.0) {
        return ShallowOutcome::Infeasible;
    }
    if worst < 1.0 {
        rates.iter_mut().for_each(|v| *v /= worst);
    }
    ShallowOutcome::Rates(rates)
}

fn usable(status: SolveStatus, x: &[f64]) -> bool {
    matches!(status, SolveStatus::Optimal | SolveStatus::MaxIter) && x.iter().all(|v| v.is_finite())
}

/// Cheapest rates passing every dual test with the duals held fixed.
pub fn shallow_update(
    p: &RewardMatrix,
    class: &ArmClassification,
    duals: &[DualVars],
    tol: f64,
) -> Result<ShallowOutcome> {
    if class.deceitful.is_empty() {
        return Ok(ShallowOutcome::Rates(vec![0.0; p.arms()]));
    }
    let Some(mut sp) = shallow_program(p, class, duals) else {
        return Ok(ShallowOutcome::Infeasible);
    };
    for (x, v) in sp.eta.iter().enumerate() {
        if let Some(i) = v {
            sp.program.set_cost(*i, gap(p, x));
        }
    }
    let sol = solve(&sp.program, tol)?;
    if !usable(sol.status, &sol.x) {
        return Ok(ShallowOutcome::Infeasible);
    }
    Ok(finish_rates(p, class, duals, &sp.eta, &sol.x))
}

/// Rates nearest to `reference` among those within `2ε` of the shallow optimum.
pub fn shallow_update_strict(
    p: &RewardMatrix,
    class: &ArmClassification,
    duals: &[DualVars],
    reference: &[f64],
    epsilon: f64,
    tol: f64,
) -> Result<ShallowOutcome> {
    let base = match shallow_update(p, class, duals, tol)? {
        ShallowOutcome::Rates(r) => r,
        ShallowOutcome::Infeasible => return Ok(ShallowOutcome::Infeasible),
    };
    if class.deceitful.is_empty() {
        return Ok(ShallowOutcome::Rates(base));
    }
    let optimum: f64 = (0..p.arms()).map(|x| base[x] * gap(p, x)).sum();
    let mut sp = shallow_program(p, class, duals).expect("feasible shallow program");
    let mut budget = Vec::new();
    for (x, v) in sp.eta.iter().enumerate() {
        if let Some(i) = *v {
            // ½·2(η − η')² up to a constant
            sp.program.set_quadratic(i, 2.0);
            sp.program.set_cost(i, -2.0 * reference[x].min(1e12));
            budget.push((i, gap(p, x)));
        }
    }
    sp.program.add_le(budget, optimum + 2.0 * epsilon);
    let sol = solve(&sp.program, tol)?;
    if !usable(sol.status, &sol.x) {
        return Ok(ShallowOutcome::Rates(base));
    }
    Ok(finish_rates(p, class, duals, &sp.eta, &sol.x))
}

#[derive(Debug, Clone)]
pub struct DeepUpdate {
    pub rates: RateVector,
    pub duals: Vec<DualVars>,
    pub value: f64,
}

impl From<LowerBoundResult> for DeepUpdate {
    fn from(r: LowerBoundResult) -> Self {
        Self { rates: r.rates, duals: r.duals, value: r.value }
    }
}

/// Fresh rates and duals from the lower-bound program at `P`.
///
/// In strict mode the minimum-norm point of the `ε`-suboptimal set with
/// floors `ε / (2 Σ Δ)` on rates and slacks is returned instead.
pub fn deep_update(
    spec: &StructureSpec,
    p: &RewardMatrix,
    class: &ArmClassification,
    epsilon: f64,
    strict: bool,
    tol: f64,
) -> Result<DeepUpdate> {
    let plain = lower_bound_classified(spec, p, class.clone(), tol, None)?;
    if !strict || class.deceitful.is_empty() {
        return Ok(plain.into());
    }
    let total_gap: f64 = class.suboptimal().iter().map(|&x| gap(p, x)).sum();
    let selection = StrictSelection { budget: plain.value + epsilon, floor: epsilon / (2.0 * total_gap) };
    match lower_bound_classified(spec, p, class.clone(), tol, Some(selection)) {
        // restoring exact feasibility can push the strict point past its budget
        Ok(r) if r.value <= selection.budget * (1.0 + tol) => Ok(r.into()),
        Ok(_) | Err(Error::Solver { .. }) => Ok(plain.into()),
        Err(e) => Err(e),
    }
}
