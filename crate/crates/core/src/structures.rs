//! Polyhedral structure descriptions, their conic hulls and dual cones.
//!
//! Both cones are described over the flattened reward matrix (entry `(r, x)`
//! at index `x * levels + r`) followed by auxiliary variables. Any `(Q, aux)`
//! satisfying the primal system has `Q ∈ cone(𝒫)`, and every `Q` in the cone
//! admits such an `aux`; likewise for `λ ∈ K*`.

use dusa_conic::{lp_solve, ConicProgram, SolveStatus};
use serde::{Deserialize, Serialize};

use crate::bandit::{best_arm_and_value, optimal_arms, RewardMatrix, RewardSupport};
use crate::{Error, Result};

/// An arm is deceitful when `Rew_max` exceeds `Rew⋆` by more than this.
pub const DECEIT_TOL: f64 = 1e-7;

const LP_TOL: f64 = 1e-9;

/// Column constraint `Σ_r coeffs[r]·P(r, arm) ≥ rhs`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnConstraint {
    pub arm: usize,
    pub coeffs: Vec<f64>,
    pub rhs: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StructureKind {
    Separable,
    Lipschitz,
    Linear,
    Dispersion,
}

#[derive(Debug, Clone, PartialEq)]
pub enum StructureParams {
    /// Independent arms, each optionally restricted by column constraints.
    Separable { constraints: Vec<ColumnConstraint> },
    /// `mean(x) − mean(x') ≤ L·d(x, x')`; on `{0, 1}` this is `Q(1,x) − Q(1,x') ≤ L·d`.
    Lipschitz { lipschitz: f64, distances: Vec<Vec<f64>> },
    /// `mean(x) = c_x·θ` for a shared `θ`.
    Linear { features: Vec<Vec<f64>> },
    /// `Σ_r r²·Q(r,x) ≤ γ(x)·Σ_r r·Q(r,x)`.
    Dispersion { gamma: Vec<f64> },
}

#[derive(Debug, Clone)]
pub struct StructureSpec {
    support: RewardSupport,
    arms: usize,
    params: StructureParams,
    /// Per-arm maximal mean for arm-separable structures.
    arm_caps: Option<Vec<f64>>,
    /// Shortest-path closure of the Lipschitz distances.
    path_dist: Option<Vec<Vec<f64>>>,
    /// Ordered Lipschitz pairs not implied through an intermediate arm.
    pairs: Vec<(usize, usize)>,
}

impl StructureSpec {
    /// Separable structure without constraints.
    pub fn generic(support: RewardSupport, arms: usize) -> Result<Self> {
        Self::separable(support, arms, Vec::new())
    }

    pub fn separable(support: RewardSupport, arms: usize, constraints: Vec<ColumnConstraint>) -> Result<Self> {
        check_arms(arms)?;
        for c in &constraints {
            if c.arm >= arms {
                return Err(Error::Structure(format!("constraint on missing arm {}", c.arm)));
            }
            if c.coeffs.len() != support.len() {
                return Err(Error::Structure("constraint width must equal the number of levels".into()));
            }
            if !c.rhs.is_finite() || c.coeffs.iter().any(|v| !v.is_finite()) {
                return Err(Error::Structure("constraint data must be finite".into()));
            }
        }
        Self::finish(support, arms, StructureParams::Separable { constraints })
    }

    pub fn lipschitz(support: RewardSupport, lipschitz: f64, distances: Vec<Vec<f64>>) -> Result<Self> {
        let arms = distances.len();
        check_arms(arms)?;
        if !(lipschitz >= 0.0 && lipschitz.is_finite()) {
            return Err(Error::Structure("Lipschitz constant must be finite and >= 0".into()));
        }
        for (i, row) in distances.iter().enumerate() {
            if row.len() != arms {
                return Err(Error::Structure("distance matrix must be square".into()));
            }
            if row[i] != 0.0 {
                return Err(Error::Structure("distance matrix must have a zero diagonal".into()));
            }
            for (j, &d) in row.iter().enumerate() {
                if !(d >= 0.0 && d.is_finite()) || d != distances[j][i] {
                    return Err(Error::Structure("distances must be finite, nonnegative and symmetric".into()));
                }
            }
        }
        Self::finish(support, arms, StructureParams::Lipschitz { lipschitz, distances })
    }

    /// Lipschitz structure with `d(x, x') = |pos(x) − pos(x')|`.
    pub fn lipschitz_on_line(support: RewardSupport, lipschitz: f64, positions: &[f64]) -> Result<Self> {
        let d = positions.iter().map(|a| positions.iter().map(|b| (a - b).abs()).collect()).collect();
        Self::lipschitz(support, lipschitz, d)
    }

    pub fn linear(support: RewardSupport, features: Vec<Vec<f64>>) -> Result<Self> {
        let arms = features.len();
        check_arms(arms)?;
        let dim = features[0].len();
        if dim == 0 || features.iter().any(|c| c.len() != dim) {
            return Err(Error::Structure("feature vectors must share a positive dimension".into()));
        }
        if features.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::Structure("features must be finite".into()));
        }
        Self::finish(support, arms, StructureParams::Linear { features })
    }

    pub fn dispersion(support: RewardSupport, gamma: Vec<f64>) -> Result<Self> {
        let arms = gamma.len();
        check_arms(arms)?;
        if gamma.iter().any(|g| !(*g > 0.0 && g.is_finite())) {
            return Err(Error::Structure("dispersion bounds must be positive".into()));
        }
        Self::finish(support, arms, StructureParams::Dispersion { gamma })
    }

    fn finish(support: RewardSupport, arms: usize, params: StructureParams) -> Result<Self> {
        let mut spec = Self { support, arms, params, arm_caps: None, path_dist: None, pairs: Vec::new() };
        match &spec.params {
            StructureParams::Separable { .. } | StructureParams::Dispersion { .. } => {
                let caps = (0..arms).map(|x| spec.column_cap(x)).collect::<Result<Vec<_>>>()?;
                spec.arm_caps = Some(caps);
            }
            StructureParams::Lipschitz { distances, .. } => {
                spec.path_dist = Some(shortest_paths(distances));
                spec.pairs = essential_pairs(distances);
            }
            StructureParams::Linear { .. } => {}
        }
        Ok(spec)
    }

    pub fn kind(&self) -> StructureKind {
        match self.params {
            StructureParams::Separable { .. } => StructureKind::Separable,
            StructureParams::Lipschitz { .. } => StructureKind::Lipschitz,
            StructureParams::Linear { .. } => StructureKind::Linear,
            StructureParams::Dispersion { .. } => StructureKind::Dispersion,
        }
    }

    pub fn support(&self) -> &RewardSupport {
        &self.support
    }

    pub fn arms(&self) -> usize {
        self.arms
    }

    pub fn levels(&self) -> usize {
        self.support.len()
    }

    pub fn params(&self) -> &StructureParams {
        &self.params
    }

    /// Ordered pairs `(x, x')` carrying an explicit Lipschitz constraint.
    pub fn lipschitz_pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    pub fn check_matrix(&self, p: &RewardMatrix) -> Result<()> {
        if p.arms() != self.arms || p.support() != &self.support {
            return Err(Error::Matrix("matrix shape does not match the structure".into()));
        }
        Ok(())
    }

    /// Constraints acting on a single column, as `(coeffs, rhs)` with `coeffs·P(x) ≥ rhs`.
    fn column_rows(&self, x: usize) -> Vec<(Vec<f64>, f64)> {
        let r = self.support.values();
        match &self.params {
            StructureParams::Separable { constraints } => {
                constraints.iter().filter(|c| c.arm == x).map(|c| (c.coeffs.clone(), c.rhs)).collect()
            }
            StructureParams::Dispersion { gamma } => {
                vec![(r.iter().map(|&v| gamma[x] * v - v * v).collect(), 0.0)]
            }
            _ => Vec::new(),
        }
    }

    fn column_cap(&self, x: usize) -> Result<f64> {
        let rows = self.column_rows(x);
        if rows.is_empty() {
            return Ok(self.support.max());
        }
        let k = self.levels();
        let mut prog = ConicProgram::new(k);
        for (r, &v) in self.support.values().iter().enumerate() {
            prog.set_cost(r, -v);
            prog.add_ge(vec![(r, 1.0)], 0.0);
        }
        prog.add_eq((0..k).map(|r| (r, 1.0)).collect(), 1.0);
        for (a, b) in rows {
            prog.add_ge(a.into_iter().enumerate().collect(), b);
        }
        let sol = lp_solve(&prog, LP_TOL)?;
        match sol.status {
            SolveStatus::Optimal => Ok(-sol.objective),
            SolveStatus::Infeasible => Err(Error::Structure(format!("no distribution satisfies the constraints of arm {x}"))),
            status => Err(Error::Solver { status, context: format!("reward cap of arm {x}") }),
        }
    }

    /// Whether column `x` of `p` meets its own column constraints within `tol`.
    fn column_feasible(&self, p: &RewardMatrix, x: usize, tol: f64) -> bool {
        self.column_rows(x)
            .iter()
            .all(|(a, b)| a.iter().zip(p.column(x)).map(|(c, q)| c * q).sum::<f64>() >= b - tol)
    }

    /// Whether `p` lies in 𝒫 within `tol`.
    pub fn contains(&self, p: &RewardMatrix, tol: f64) -> Result<bool> {
        self.check_matrix(p)?;
        match &self.params {
            StructureParams::Separable { .. } | StructureParams::Dispersion { .. } => {
                Ok((0..self.arms).all(|x| self.column_feasible(p, x, tol)))
            }
            StructureParams::Lipschitz { lipschitz, distances } => {
                let m = p.means();
                Ok((0..self.arms)
                    .all(|x| (0..self.arms).all(|y| m[x] - m[y] <= lipschitz * distances[x][y] + tol)))
            }
            StructureParams::Linear { .. } => {
                let cone = primal_cone(self);
                let mut base = p.as_slice().to_vec();
                base.truncate(cone.base_count);
                Ok(cone.violation_with_mass(&base, 1.0)? <= tol)
            }
        }
    }
}

fn check_arms(arms: usize) -> Result<()> {
    if arms == 0 {
        Err(Error::Structure("need at least one arm".into()))
    } else {
        Ok(())
    }
}

fn shortest_paths(d: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = d.len();
    let mut sp = d.to_vec();
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                let via = sp[i][k] + sp[k][j];
                if via < sp[i][j] {
                    sp[i][j] = via;
                }
            }
        }
    }
    sp
}

/// Drops pairs whose constraint follows from two others through some `z`.
fn essential_pairs(d: &[Vec<f64>]) -> Vec<(usize, usize)> {
    let n = d.len();
    let mut out = Vec::new();
    for x in 0..n {
        for y in 0..n {
            if x == y {
                continue;
            }
            let implied = (0..n).any(|z| z != x && z != y && d[x][z] + d[z][y] <= d[x][y] + 1e-12);
            if !implied {
                out.push((x, y));
            }
        }
    }
    out
}

/// Dense linear system; inequality rows mean `coeffs·v ≥ rhs`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct LinearSystem {
    pub var_count: usize,
    pub equalities: Vec<(Vec<f64>, f64)>,
    pub inequalities: Vec<(Vec<f64>, f64)>,
}

impl LinearSystem {
    fn new(var_count: usize) -> Self {
        Self { var_count, ..Self::default() }
    }

    fn row(&self, terms: &[(usize, f64)]) -> Vec<f64> {
        let mut row = vec![0.0; self.var_count];
        for &(i, c) in terms {
            row[i] += c;
        }
        row
    }

    fn push_eq(&mut self, terms: &[(usize, f64)], rhs: f64) {
        let row = self.row(terms);
        self.equalities.push((row, rhs));
    }

    fn push_ge(&mut self, terms: &[(usize, f64)], rhs: f64) {
        let row = self.row(terms);
        self.inequalities.push((row, rhs));
    }

    /// Largest absolute violation at `v`.
    pub fn violation(&self, v: &[f64]) -> f64 {
        let dot = |a: &[f64]| a.iter().zip(v).map(|(c, x)| c * x).sum::<f64>();
        let eq = self.equalities.iter().map(|(a, b)| (dot(a) - b).abs());
        let ge = self.inequalities.iter().map(|(a, b)| (b - dot(a)).max(0.0));
        eq.chain(ge).fold(0.0, f64::max)
    }

    /// Appends the rows to `prog`, sending variable `i` to `map[i]`.
    pub fn embed(&self, prog: &mut ConicProgram, map: &[usize]) {
        let sparse = |a: &[f64]| -> Vec<(usize, f64)> {
            a.iter().enumerate().filter(|(_, c)| **c != 0.0).map(|(i, &c)| (map[i], c)).collect()
        };
        for (a, b) in &self.equalities {
            prog.add_eq(sparse(a), *b);
        }
        for (a, b) in &self.inequalities {
            prog.add_ge(sparse(a), *b);
        }
    }
}

/// A cone given as the projection of a polyhedron onto its base variables.
#[derive(Debug, Clone, PartialEq)]
pub struct ConeDescription {
    pub base_count: usize,
    pub aux_names: Vec<String>,
    pub system: LinearSystem,
    /// Auxiliary holding the common column mass, for primal cones.
    pub mass_var: Option<usize>,
}

impl ConeDescription {
    pub fn aux_count(&self) -> usize {
        self.aux_names.len()
    }

    /// Whether `base` lies in the cone, up to an LP-certified violation of `tol`.
    pub fn contains(&self, base: &[f64], tol: f64) -> Result<bool> {
        Ok(self.violation(base, None)? <= tol)
    }

    /// Smallest uniform constraint violation over all auxiliary choices.
    pub fn violation(&self, base: &[f64], mass: Option<f64>) -> Result<f64> {
        if base.len() != self.base_count {
            return Err(Error::Parameter("base vector has the wrong length".into()));
        }
        let n_aux = self.aux_count();
        let slack = n_aux;
        let mut prog = ConicProgram::new(n_aux + 1);
        prog.set_cost(slack, 1.0);
        prog.add_ge(vec![(slack, 1.0)], 0.0);
        let split = |a: &[f64], b: f64| -> (Vec<(usize, f64)>, f64) {
            let fixed: f64 = a[..self.base_count].iter().zip(base).map(|(c, v)| c * v).sum();
            let terms = a[self.base_count..].iter().enumerate().filter(|(_, c)| **c != 0.0).map(|(i, &c)| (i, c)).collect();
            (terms, b - fixed)
        };
        for (a, b) in &self.system.equalities {
            let (terms, rhs) = split(a, *b);
            let mut up = terms.clone();
            up.push((slack, 1.0));
            prog.add_ge(up, rhs);
            let mut down: Vec<(usize, f64)> = terms.iter().map(|&(i, c)| (i, -c)).collect();
            down.push((slack, 1.0));
            prog.add_ge(down, -rhs);
        }
        for (a, b) in &self.system.inequalities {
            let (mut terms, rhs) = split(a, *b);
            terms.push((slack, 1.0));
            prog.add_ge(terms, rhs);
        }
        if let (Some(m), Some(value)) = (self.mass_var, mass) {
            prog.fix(m - self.base_count, value);
        }
        let sol = lp_solve(&prog, LP_TOL)?;
        match sol.status {
            SolveStatus::Optimal => Ok(sol.objective.max(0.0)),
            SolveStatus::Infeasible => Ok(f64::INFINITY),
            status => Err(Error::Solver { status, context: "cone membership".into() }),
        }
    }

    fn violation_with_mass(&self, base: &[f64], mass: f64) -> Result<f64> {
        self.violation(base, Some(mass))
    }
}

/// The conic hull `K = cone(𝒫)` over `(Q, aux)`; the first auxiliary is the column mass.
pub fn primal_cone(spec: &StructureSpec) -> ConeDescription {
    let k = spec.levels();
    let arms = spec.arms;
    let nb = k * arms;
    let r = spec.support.values();
    let q = |r: usize, x: usize| x * k + r;
    let theta = nb;

    let mut names = vec!["theta".to_string()];
    if let StructureParams::Linear { features } = &spec.params {
        names.extend((0..features[0].len()).map(|j| format!("theta[{j}]")));
    }
    let mut sys = LinearSystem::new(nb + names.len());
    for i in 0..nb {
        sys.push_ge(&[(i, 1.0)], 0.0);
    }
    for x in 0..arms {
        let mut terms: Vec<_> = (0..k).map(|l| (q(l, x), 1.0)).collect();
        terms.push((theta, -1.0));
        sys.push_eq(&terms, 0.0);
    }
    match &spec.params {
        StructureParams::Separable { constraints } => {
            for c in constraints {
                let mut terms: Vec<_> = (0..k).map(|l| (q(l, c.arm), c.coeffs[l])).collect();
                terms.push((theta, -c.rhs));
                sys.push_ge(&terms, 0.0);
            }
        }
        StructureParams::Lipschitz { lipschitz, distances } => {
            // mean(x) − mean(y) ≤ θ·L·d(x, y)
            for &(x, y) in &spec.pairs {
                let mut terms: Vec<_> = (0..k).map(|l| (q(l, y), r[l])).collect();
                terms.extend((0..k).map(|l| (q(l, x), -r[l])));
                terms.push((theta, lipschitz * distances[x][y]));
                sys.push_ge(&terms, 0.0);
            }
        }
        StructureParams::Linear { features } => {
            for (x, c) in features.iter().enumerate() {
                let mut terms: Vec<_> = (0..k).map(|l| (q(l, x), r[l])).collect();
                terms.extend(c.iter().enumerate().map(|(j, &v)| (theta + 1 + j, -v)));
                sys.push_eq(&terms, 0.0);
            }
        }
        StructureParams::Dispersion { gamma } => {
            for x in 0..arms {
                let terms: Vec<_> = (0..k).map(|l| (q(l, x), gamma[x] * r[l] - r[l] * r[l])).collect();
                sys.push_ge(&terms, 0.0);
            }
        }
    }
    ConeDescription { base_count: nb, aux_names: names, system: sys, mass_var: Some(theta) }
}

/// The dual cone `K*` over `(λ, aux)`.
///
/// Every structure yields rows of the form `λ(r, x) ≥ affine(aux)` plus
/// constraints on the auxiliaries alone.
pub fn dual_cone(spec: &StructureSpec) -> ConeDescription {
    let k = spec.levels();
    let arms = spec.arms;
    let nb = k * arms;
    let r = spec.support.values();
    let lam = |r: usize, x: usize| x * k + r;

    let mut names: Vec<String> = Vec::new();
    let mut sys;
    match &spec.params {
        StructureParams::Separable { constraints } => {
            // λ(r,x) − γ(x) − Σ_k τ_k (a_k(r) − b_k) ≥ 0, τ ≥ 0, Σγ = 0
            names.extend((0..arms).map(|x| format!("gamma[{x}]")));
            names.extend((0..constraints.len()).map(|c| format!("tau[{c}]")));
            sys = LinearSystem::new(nb + names.len());
            let gamma = |x: usize| nb + x;
            let tau = |c: usize| nb + arms + c;
            for x in 0..arms {
                for l in 0..k {
                    let mut terms = vec![(lam(l, x), 1.0), (gamma(x), -1.0)];
                    for (ci, c) in constraints.iter().enumerate().filter(|(_, c)| c.arm == x) {
                        terms.push((tau(ci), -(c.coeffs[l] - c.rhs)));
                    }
                    sys.push_ge(&terms, 0.0);
                }
            }
            for c in 0..constraints.len() {
                sys.push_ge(&[(tau(c), 1.0)], 0.0);
            }
            sys.push_eq(&(0..arms).map(|x| (gamma(x), 1.0)).collect::<Vec<_>>(), 0.0);
        }
        StructureParams::Lipschitz { lipschitz, distances } => {
            // λ(r,x) − γ(x) + r·(Σ_out Λ − Σ_in Λ) ≥ 0, Λ ≥ 0, Σγ = L·Σ d·Λ
            names.extend((0..arms).map(|x| format!("gamma[{x}]")));
            names.extend(spec.pairs.iter().map(|(x, y)| format!("Lambda[{x},{y}]")));
            sys = LinearSystem::new(nb + names.len());
            let gamma = |x: usize| nb + x;
            let pair = |p: usize| nb + arms + p;
            for x in 0..arms {
                for l in 0..k {
                    let mut terms = vec![(lam(l, x), 1.0), (gamma(x), -1.0)];
                    for (pi, &(a, b)) in spec.pairs.iter().enumerate() {
                        if a == x {
                            terms.push((pair(pi), r[l]));
                        } else if b == x {
                            terms.push((pair(pi), -r[l]));
                        }
                    }
                    sys.push_ge(&terms, 0.0);
                }
            }
            for p in 0..spec.pairs.len() {
                sys.push_ge(&[(pair(p), 1.0)], 0.0);
            }
            let mut terms: Vec<_> = (0..arms).map(|x| (gamma(x), 1.0)).collect();
            terms.extend(spec.pairs.iter().enumerate().map(|(pi, &(a, b))| (pair(pi), -lipschitz * distances[a][b])));
            sys.push_eq(&terms, 0.0);
        }
        StructureParams::Linear { features } => {
            // λ(r,x) − γ(x) − r·ν(x) ≥ 0, Σγ = 0, Σ_x c_x ν(x) = 0
            names.extend((0..arms).map(|x| format!("gamma[{x}]")));
            names.extend((0..arms).map(|x| format!("nu[{x}]")));
            sys = LinearSystem::new(nb + names.len());
            let gamma = |x: usize| nb + x;
            let nu = |x: usize| nb + arms + x;
            for x in 0..arms {
                for l in 0..k {
                    sys.push_ge(&[(lam(l, x), 1.0), (gamma(x), -1.0), (nu(x), -r[l])], 0.0);
                }
            }
            sys.push_eq(&(0..arms).map(|x| (gamma(x), 1.0)).collect::<Vec<_>>(), 0.0);
            for j in 0..features[0].len() {
                sys.push_eq(&(0..arms).map(|x| (nu(x), features[x][j])).collect::<Vec<_>>(), 0.0);
            }
        }
        StructureParams::Dispersion { gamma } => {
            // λ(r,x) − μ(x) + (r² − γ(x)·r)·ν(x) ≥ 0, ν ≥ 0, Σμ = 0
            names.extend((0..arms).map(|x| format!("mu[{x}]")));
            names.extend((0..arms).map(|x| format!("nu[{x}]")));
            sys = LinearSystem::new(nb + names.len());
            let mu = |x: usize| nb + x;
            let nu = |x: usize| nb + arms + x;
            for x in 0..arms {
                for l in 0..k {
                    sys.push_ge(&[(lam(l, x), 1.0), (mu(x), -1.0), (nu(x), r[l] * r[l] - gamma[x] * r[l])], 0.0);
                }
                sys.push_ge(&[(nu(x), 1.0)], 0.0);
            }
            sys.push_eq(&(0..arms).map(|x| (mu(x), 1.0)).collect::<Vec<_>>(), 0.0);
        }
    }
    ConeDescription { base_count: nb, aux_names: names, system: sys, mass_var: None }
}

/// Largest attainable mean of `x'` over `Q ∈ 𝒫` agreeing with `P` on its optimal arms.
///
/// Uses closed forms where the structure allows and the LP otherwise.
pub fn rew_max(spec: &StructureSpec, p: &RewardMatrix, xp: usize) -> Result<f64> {
    spec.check_matrix(p)?;
    p.check_arm(xp)?;
    let opt = optimal_arms(p);
    if opt.contains(&xp) {
        return Ok(p.mean(xp));
    }
    match &spec.params {
        StructureParams::Separable { .. } | StructureParams::Dispersion { .. } => {
            if let Some(&x) = opt.iter().find(|&&x| !spec.column_feasible(p, x, 1e-9)) {
                return Err(Error::Infeasible(format!("optimal arm {x} violates its own constraints")));
            }
            Ok(spec.arm_caps.as_ref().expect("separable caps")[xp])
        }
        StructureParams::Lipschitz { lipschitz, .. } => {
            let sp = spec.path_dist.as_ref().expect("path distances");
            let (_, best) = best_arm_and_value(p);
            let reach = opt.iter().map(|&x| best + lipschitz * sp[xp][x]).fold(f64::INFINITY, f64::min);
            Ok(reach.min(spec.support.max()))
        }
        StructureParams::Linear { .. } => rew_max_lp(spec, p, xp),
    }
}

/// [`rew_max`] by its defining linear program.
pub fn rew_max_lp(spec: &StructureSpec, p: &RewardMatrix, xp: usize) -> Result<f64> {
    spec.check_matrix(p)?;
    p.check_arm(xp)?;
    let opt = optimal_arms(p);
    let cone = primal_cone(spec);
    let k = spec.levels();
    let mut prog = ConicProgram::new(cone.system.var_count);
    let map: Vec<usize> = (0..cone.system.var_count).collect();
    cone.system.embed(&mut prog, &map);
    prog.fix(cone.mass_var.expect("primal mass"), 1.0);
    for &x in &opt {
        for l in 0..k {
            prog.fix(x * k + l, p.get(l, x));
        }
    }
    for (l, &v) in spec.support.values().iter().enumerate() {
        prog.set_cost(xp * k + l, -v);
    }
    let sol = lp_solve(&prog, LP_TOL)?;
    match sol.status {
        SolveStatus::Optimal => Ok(-sol.objective),
        SolveStatus::Infeasible => Err(Error::Infeasible("no model in 𝒫 agrees with the optimal arms".into())),
        status => Err(Error::Solver { status, context: "maximum reward LP".into() }),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ArmClassification {
    pub optimal: Vec<usize>,
    pub deceitful: Vec<usize>,
    pub non_deceitful: Vec<usize>,
    /// `Rew_max` per arm; optimal arms carry their own mean.
    pub rew_max: Vec<f64>,
}

impl ArmClassification {
    pub fn suboptimal(&self) -> Vec<usize> {
        let mut s: Vec<usize> = self.deceitful.iter().chain(&self.non_deceitful).copied().collect();
        s.sort_unstable();
        s
    }

    pub fn is_deceitful(&self, x: usize) -> bool {
        self.deceitful.contains(&x)
    }
}

pub fn classify_arms(spec: &StructureSpec, p: &RewardMatrix) -> Result<ArmClassification> {
    spec.check_matrix(p)?;
    let (_, best) = best_arm_and_value(p);
    let optimal = optimal_arms(p);
    let mut out = ArmClassification { optimal, deceitful: vec![], non_deceitful: vec![], rew_max: vec![0.0; p.arms()] };
    for x in 0..p.arms() {
        let rm = rew_max(spec, p, x)?;
        out.rew_max[x] = rm;
        if out.optimal.contains(&x) {
            continue;
        }
        if rm > best + DECEIT_TOL {
            out.deceitful.push(x);
        } else {
            out.non_deceitful.push(x);
        }
    }
    Ok(out)
}

/// An ℓ1-closest member of 𝒫 to the column-stochastic `q`.
pub fn project_l1(spec: &StructureSpec, q: &RewardMatrix) -> Result<RewardMatrix> {
    spec.check_matrix(q)?;
    let cone = primal_cone(spec);
    let nb = cone.base_count;
    let nv = cone.system.var_count;
    let mut prog = ConicProgram::new(nv + nb);
    let map: Vec<usize> = (0..nv).collect();
    cone.system.embed(&mut prog, &map);
    prog.fix(cone.mass_var.expect("primal mass"), 1.0);
    for i in 0..nb {
        let t = nv + i;
        let target = q.as_slice()[i];
        prog.set_cost(t, 1.0);
        prog.add_ge(vec![(t, 1.0), (i, -1.0)], -target);
        prog.add_ge(vec![(t, 1.0), (i, 1.0)], target);
    }
    let sol = lp_solve(&prog, 1e-10)?;
    match sol.status {
        SolveStatus::Optimal => {}
        SolveStatus::Infeasible => return Err(Error::Infeasible("structure admits no distribution".into())),
        status => return Err(Error::Solver { status, context: "l1 projection".into() }),
    }
    let k = spec.levels();
    let cols = (0..spec.arms)
        .map(|x| {
            let col: Vec<f64> = (0..k).map(|l| sol.x[x * k + l].max(0.0)).collect();
            let s: f64 = col.iter().sum();
            col.into_iter().map(|v| v / s).collect()
        })
        .collect();
    RewardMatrix::new(spec.support.clone(), cols)
}
