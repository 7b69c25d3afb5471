use clarabel::algebra::CscMatrix;
use clarabel::solver::{
    DefaultSettings, DefaultSolver, ExponentialConeT, IPSolver, NonnegativeConeT, SolverStatus,
    SupportedConeT, ZeroConeT,
};

use crate::{ConicProgram, ProgramError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    Unbounded,
    /// Stopped without a certificate: iteration cap, stalled progress or
    /// reduced accuracy. The point is the last iterate and is often usable.
    MaxIter,
}

#[derive(Debug, Clone)]
pub struct Solution {
    pub x: Vec<f64>,
    pub objective: f64,
    pub status: SolveStatus,
    pub primal_residual: f64,
    pub dual_residual: f64,
    /// Complementarity measure at exit.
    pub barrier: f64,
    pub iterations: u32,
}

impl Solution {
    pub fn is_optimal(&self) -> bool {
        self.status == SolveStatus::Optimal
    }
}

pub const MAX_ITER: u32 = 200;

/// Solves `prog` to tolerance `tol`, which must lie in `(0, 1e-2]`.
pub fn solve(prog: &ConicProgram, tol: f64) -> Result<Solution, ProgramError> {
    if !(tol > 0.0 && tol <= 1e-2) {
        return Err(ProgramError::Tolerance(tol));
    }
    prog.validate()?;
    let n = prog.var_count();

    let mut rows = Vec::new();
    let mut cols = Vec::new();
    let mut vals = Vec::new();
    let mut b = Vec::new();
    let mut cones: Vec<SupportedConeT<f64>> = Vec::new();

    let mut push_row = |coeffs: &[(usize, f64)], sign: f64, rhs: f64, b: &mut Vec<f64>| {
        let r = b.len();
        for &(i, c) in coeffs {
            if c != 0.0 {
                rows.push(r);
                cols.push(i);
                vals.push(sign * c);
            }
        }
        b.push(rhs);
    };

    for row in &prog.equalities {
        push_row(&row.coeffs, 1.0, row.rhs, &mut b);
    }
    if !prog.equalities.is_empty() {
        cones.push(ZeroConeT(prog.equalities.len()));
    }
    for row in &prog.inequalities {
        push_row(&row.coeffs, -1.0, -row.rhs, &mut b);
    }
    if !prog.inequalities.is_empty() {
        cones.push(NonnegativeConeT(prog.inequalities.len()));
    }
    // Clarabel orders its exponential cone as (x, y, z) with y·exp(x/y) ≤ z,
    // so our (u, v, w) maps to (u, w, v).
    for &[u, v, w] in &prog.exp_triples {
        for i in [u, w, v] {
            push_row(&[(i, 1.0)], -1.0, 0.0, &mut b);
        }
        cones.push(ExponentialConeT());
    }

    let m = b.len();
    let a = CscMatrix::new_from_triplets(m, n, rows, cols, vals);
    let p = match &prog.quadratic {
        Some(q) => {
            let idx: Vec<usize> = (0..n).filter(|&i| q[i] != 0.0).collect();
            let w: Vec<f64> = idx.iter().map(|&i| q[i]).collect();
            CscMatrix::new_from_triplets(n, n, idx.clone(), idx, w)
        }
        None => CscMatrix::zeros((n, n)),
    };

    let settings = DefaultSettings {
        verbose: false,
        max_iter: MAX_ITER,
        tol_gap_abs: tol,
        tol_gap_rel: tol,
        tol_feas: tol,
        tol_ktratio: tol.sqrt().min(1e-6),
        ..DefaultSettings::default()
    };
    let mut solver = DefaultSolver::new(&p, &prog.objective, &a, &b, &cones, settings)
        .map_err(|e| ProgramError::Backend(format!("{e:?}")))?;
    solver.solve();

    let sol = &solver.solution;
    let status = match sol.status {
        SolverStatus::Solved => SolveStatus::Optimal,
        SolverStatus::PrimalInfeasible | SolverStatus::AlmostPrimalInfeasible => SolveStatus::Infeasible,
        SolverStatus::DualInfeasible | SolverStatus::AlmostDualInfeasible => SolveStatus::Unbounded,
        _ => SolveStatus::MaxIter,
    };
    let x = if sol.x.iter().all(|v| v.is_finite()) { sol.x.clone() } else { vec![f64::NAN; n] };
    let primal_residual = prog.primal_residual(&x);
    let status = if status == SolveStatus::Optimal && !(primal_residual <= 10.0 * tol) {
        SolveStatus::MaxIter
    } else {
        status
    };
    let objective = match status {
        SolveStatus::Infeasible => f64::INFINITY,
        SolveStatus::Unbounded => f64::NEG_INFINITY,
        _ => prog.objective_value(&x),
    };
    Ok(Solution {
        x,
        objective,
        status,
        primal_residual,
        dual_residual: sol.r_dual,
        barrier: solver.info.mu,
        iterations: sol.iterations,
    })
}

/// [`solve`] restricted to linear programs.
pub fn lp_solve(prog: &ConicProgram, tol: f64) -> Result<Solution, ProgramError> {
    if !prog.is_lp() {
        return Err(ProgramError::NotLinear);
    }
    solve(prog, tol)
}
