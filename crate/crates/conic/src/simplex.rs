//! Dense two-phase tableau simplex with Bland's rule.
//!
//! Deliberately textbook and independent of the interior-point path: it is
//! the reference used to cross-check LP results on small problems.

use crate::ConicProgram;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone)]
pub struct LpOutcome {
    pub status: LpStatus,
    pub x: Vec<f64>,
    pub objective: f64,
}

const PIVOT_TOL: f64 = 1e-11;

/// Minimizes `c·x` over free `x` with dense equality rows `a·x = b` and
/// inequality rows `a·x ≥ b`.
pub fn simplex(c: &[f64], eq: &[(Vec<f64>, f64)], ge: &[(Vec<f64>, f64)]) -> LpOutcome {
    let n = c.len();
    let m = eq.len() + ge.len();
    let n_surplus = ge.len();
    // columns: x+ (n), x- (n), surplus, artificials (m)
    let n_std = 2 * n + n_surplus;
    let width = n_std + m;

    let mut tab = vec![vec![0.0; width + 1]; m];
    for (i, (a, b)) in eq.iter().chain(ge.iter()).enumerate() {
        assert_eq!(a.len(), n, "row width must equal variable count");
        let row = &mut tab[i];
        for j in 0..n {
            row[j] = a[j];
            row[n + j] = -a[j];
        }
        if i >= eq.len() {
            row[2 * n + (i - eq.len())] = -1.0;
        }
        row[width] = *b;
        if *b < 0.0 {
            for v in row.iter_mut() {
                *v = -*v;
            }
        }
        row[n_std + i] = 1.0;
    }
    let mut basis: Vec<usize> = (n_std..width).collect();

    // phase one
    let mut cost1 = vec![0.0; width];
    for v in &mut cost1[n_std..] {
        *v = 1.0;
    }
    let scale = 1.0 + tab.iter().map(|r| r[width].abs()).fold(0.0, f64::max);
    if pivot_loop(&mut tab, &mut basis, &cost1, width) {
        unreachable!("phase one objective is bounded below");
    }
    let infeas: f64 = basis.iter().zip(&tab).filter(|(&b, _)| b >= n_std).map(|(_, r)| r[width]).sum();
    if infeas > 1e-9 * scale {
        return LpOutcome { status: LpStatus::Infeasible, x: vec![f64::NAN; n], objective: f64::INFINITY };
    }

    // drive artificials out of the basis, dropping redundant rows
    let mut i = 0;
    while i < tab.len() {
        if basis[i] >= n_std {
            match (0..n_std).find(|&j| tab[i][j].abs() > 1e-9) {
                Some(j) => {
                    pivot(&mut tab, i, j);
                    basis[i] = j;
                    i += 1;
                }
                None => {
                    tab.remove(i);
                    basis.remove(i);
                }
            }
        } else {
            i += 1;
        }
    }
    // phase two over structural columns only
    let mut cost2 = vec![0.0; width];
    for j in 0..n {
        cost2[j] = c[j];
        cost2[n + j] = -c[j];
    }
    if pivot_loop(&mut tab, &mut basis, &cost2, n_std) {
        return LpOutcome { status: LpStatus::Unbounded, x: vec![f64::NAN; n], objective: f64::NEG_INFINITY };
    }
    let mut std_x = vec![0.0; n_std];
    for (&b, row) in basis.iter().zip(&tab) {
        std_x[b] = row[width];
    }
    let x: Vec<f64> = (0..n).map(|j| std_x[j] - std_x[n + j]).collect();
    let objective = c.iter().zip(&x).map(|(a, b)| a * b).sum();
    LpOutcome { status: LpStatus::Optimal, x, objective }
}

/// Runs Bland-rule pivots for `cost`; returns `true` if unbounded.
fn pivot_loop(tab: &mut [Vec<f64>], basis: &mut [usize], cost: &[f64], ncols: usize) -> bool {
    let rhs = tab.first().map(|r| r.len() - 1).unwrap_or(ncols);
    loop {
        let entering = (0..ncols).find(|&j| {
            if basis.contains(&j) {
                return false;
            }
            let reduced = cost[j] - basis.iter().zip(tab.iter()).map(|(&b, r)| cost[b] * r[j]).sum::<f64>();
            reduced < -1e-10
        });
        let Some(j) = entering else { return false };
        let mut best: Option<(usize, f64)> = None;
        for (i, row) in tab.iter().enumerate() {
            if row[j] > PIVOT_TOL {
                let ratio = row[rhs] / row[j];
                best = match best {
                    None => Some((i, ratio)),
                    Some((bi, br)) => {
                        if ratio < br - 1e-12 || (ratio <= br + 1e-12 && basis[i] < basis[bi]) {
                            Some((i, ratio))
                        } else {
                            Some((bi, br))
                        }
                    }
                };
            }
        }
        let Some((i, _)) = best else { return true };
        pivot(tab, i, j);
        basis[i] = j;
    }
}

fn pivot(tab: &mut [Vec<f64>], pr: usize, pc: usize) {
    let p = tab[pr][pc];
    for v in tab[pr].iter_mut() {
        *v /= p;
    }
    let prow = tab[pr].clone();
    for (i, row) in tab.iter_mut().enumerate() {
        if i != pr {
            let f = row[pc];
            if f != 0.0 {
                for (v, pv) in row.iter_mut().zip(&prow) {
                    *v -= f * pv;
                }
            }
        }
    }
}

/// Runs [`simplex`] on a linear [`ConicProgram`].
pub fn simplex_program(prog: &ConicProgram) -> LpOutcome {
    assert!(prog.is_lp(), "simplex oracle accepts linear programs only");
    let n = prog.var_count();
    let dense = |rows: &[crate::Row]| -> Vec<(Vec<f64>, f64)> {
        rows.iter()
            .map(|r| {
                let mut a = vec![0.0; n];
                for &(i, c) in &r.coeffs {
                    a[i] += c;
                }
                (a, r.rhs)
            })
            .collect()
    };
    simplex(&prog.objective, &dense(&prog.equalities), &dense(&prog.inequalities))
}
