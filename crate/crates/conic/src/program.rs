use std::fmt::Write as _;

use crate::ProgramError;

/// Sparse linear row `Σ coeff·x[index]` compared against `rhs`.
#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub coeffs: Vec<(usize, f64)>,
    pub rhs: f64,
}

impl Row {
    pub fn eval(&self, x: &[f64]) -> f64 {
        self.coeffs.iter().map(|&(i, c)| c * x[i]).sum()
    }

    /// Sum of absolute term magnitudes at `x`, used to scale residuals.
    pub fn magnitude(&self, x: &[f64]) -> f64 {
        self.coeffs.iter().map(|&(i, c)| (c * x[i]).abs()).sum::<f64>() + self.rhs.abs()
    }
}

/// Minimize `c·x + ½ Σ q_i x_i²` over free variables subject to linear
/// equalities, `≥` inequalities and exponential-cone memberships.
///
/// A triple `[u, v, w]` requires `(x[u], x[v], x[w])` to lie in the closure of
/// `{(u, v, w) : w > 0, exp(u / w) ≤ v / w}`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConicProgram {
    pub objective: Vec<f64>,
    pub quadratic: Option<Vec<f64>>,
    pub equalities: Vec<Row>,
    pub inequalities: Vec<Row>,
    pub exp_triples: Vec<[usize; 3]>,
}

impl ConicProgram {
    pub fn new(var_count: usize) -> Self {
        Self { objective: vec![0.0; var_count], ..Self::default() }
    }

    pub fn var_count(&self) -> usize {
        self.objective.len()
    }

    /// Appends `count` fresh variables and returns the index of the first.
    pub fn add_vars(&mut self, count: usize) -> usize {
        let first = self.objective.len();
        self.objective.resize(first + count, 0.0);
        if let Some(q) = self.quadratic.as_mut() {
            q.resize(first + count, 0.0);
        }
        first
    }

    pub fn add_var(&mut self) -> usize {
        self.add_vars(1)
    }

    pub fn set_cost(&mut self, var: usize, cost: f64) {
        self.objective[var] = cost;
    }

    pub fn add_cost(&mut self, var: usize, cost: f64) {
        self.objective[var] += cost;
    }

    pub fn set_quadratic(&mut self, var: usize, weight: f64) {
        let n = self.var_count();
        self.quadratic.get_or_insert_with(|| vec![0.0; n])[var] = weight;
    }

    pub fn add_eq(&mut self, coeffs: Vec<(usize, f64)>, rhs: f64) {
        self.equalities.push(Row { coeffs, rhs });
    }

    pub fn add_ge(&mut self, coeffs: Vec<(usize, f64)>, rhs: f64) {
        self.inequalities.push(Row { coeffs, rhs });
    }

    pub fn add_le(&mut self, coeffs: Vec<(usize, f64)>, rhs: f64) {
        let coeffs = coeffs.into_iter().map(|(i, c)| (i, -c)).collect();
        self.inequalities.push(Row { coeffs, rhs: -rhs });
    }

    pub fn fix(&mut self, var: usize, value: f64) {
        self.add_eq(vec![(var, 1.0)], value);
    }

    pub fn add_exp(&mut self, triple: [usize; 3]) {
        self.exp_triples.push(triple);
    }

    pub fn is_lp(&self) -> bool {
        self.exp_triples.is_empty() && self.quadratic.is_none()
    }

    pub fn validate(&self) -> Result<(), ProgramError> {
        let n = self.var_count();
        if self.objective.iter().any(|c| !c.is_finite()) {
            return Err(ProgramError::NonFinite("objective".into()));
        }
        if let Some(q) = &self.quadratic {
            if q.len() != n {
                return Err(ProgramError::Shape("quadratic length".into()));
            }
            if q.iter().any(|w| !w.is_finite() || *w < 0.0) {
                return Err(ProgramError::NonFinite("quadratic weights must be finite and >= 0".into()));
            }
        }
        for (kind, rows) in [("equality", &self.equalities), ("inequality", &self.inequalities)] {
            for (k, row) in rows.iter().enumerate() {
                if !row.rhs.is_finite() || row.coeffs.iter().any(|&(_, c)| !c.is_finite()) {
                    return Err(ProgramError::NonFinite(format!("{kind} row {k}")));
                }
                if let Some(&(i, _)) = row.coeffs.iter().find(|&&(i, _)| i >= n) {
                    return Err(ProgramError::IndexOutOfRange { index: i, var_count: n });
                }
            }
        }
        for t in &self.exp_triples {
            if let Some(&i) = t.iter().find(|&&i| i >= n) {
                return Err(ProgramError::IndexOutOfRange { index: i, var_count: n });
            }
            if t[0] == t[1] || t[0] == t[2] || t[1] == t[2] {
                return Err(ProgramError::RepeatedTripleIndex(*t));
            }
        }
        Ok(())
    }

    pub fn objective_value(&self, x: &[f64]) -> f64 {
        let lin: f64 = self.objective.iter().zip(x).map(|(c, v)| c * v).sum();
        let quad: f64 = self
            .quadratic
            .as_ref()
            .map(|q| q.iter().zip(x).map(|(w, v)| 0.5 * w * v * v).sum())
            .unwrap_or(0.0);
        lin + quad
    }

    /// Largest scaled violation of any constraint at `x`.
    ///
    /// Linear rows are scaled by `1 + Σ|terms|`; cone triples by `1 + |u| + |w·log(v/w)|`.
    pub fn primal_residual(&self, x: &[f64]) -> f64 {
        let mut worst = 0.0f64;
        for row in &self.equalities {
            let viol = (row.eval(x) - row.rhs).abs();
            worst = worst.max(viol / (1.0 + row.magnitude(x)));
        }
        for row in &self.inequalities {
            let viol = (row.rhs - row.eval(x)).max(0.0);
            worst = worst.max(viol / (1.0 + row.magnitude(x)));
        }
        for &[u, v, w] in &self.exp_triples {
            worst = worst.max(exp_cone_violation(x[u], x[v], x[w]));
        }
        worst
    }

    /// Plain-text rendering with one objective term or constraint per line.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "vars {}", self.var_count());
        for (i, c) in self.objective.iter().enumerate() {
            if *c != 0.0 {
                let _ = writeln!(out, "obj x{i} {c:e}");
            }
        }
        if let Some(q) = &self.quadratic {
            for (i, w) in q.iter().enumerate() {
                if *w != 0.0 {
                    let _ = writeln!(out, "quad x{i} {w:e}");
                }
            }
        }
        for row in &self.equalities {
            let _ = writeln!(out, "eq {} = {:e}", render_terms(&row.coeffs), row.rhs);
        }
        for row in &self.inequalities {
            let _ = writeln!(out, "ge {} >= {:e}", render_terms(&row.coeffs), row.rhs);
        }
        for [u, v, w] in &self.exp_triples {
            let _ = writeln!(out, "exp x{u} x{v} x{w}");
        }
        out
    }
}

fn render_terms(coeffs: &[(usize, f64)]) -> String {
    if coeffs.is_empty() {
        return "0".into();
    }
    coeffs.iter().map(|(i, c)| format!("{c:e}*x{i}")).collect::<Vec<_>>().join(" + ")
}

/// Scaled violation of `(u, v, w) ∈ K_exp`.
pub fn exp_cone_violation(u: f64, v: f64, w: f64) -> f64 {
    let neg = (-v).max(0.0).max((-w).max(0.0));
    if w > 0.0 && v > 0.0 {
        let bound = w * (v / w).ln();
        neg.max((u - bound).max(0.0) / (1.0 + u.abs() + bound.abs()))
    } else {
        neg.max(u.max(0.0))
    }
}
