//! Exact rational linear programs.
//!
//! [`LinearProgram`] is a small model builder (named variables with optional
//! bounds, sparse rows, a linear objective). [`solve`] runs a two-phase
//! bounded-variable simplex over [`Rational`]s, and
//! [`verify_solution`] re-checks any returned solution or infeasibility
//! certificate from scratch.
//!
//! Sign conventions for the multipliers in [`LpSolution::dual_or_farkas`]:
//!
//! * **Infeasible**: `y` with `y_i >= 0` on `<=` rows, `y_i <= 0` on `>=`
//!   rows, free on `=` rows, such that every point of the variable box gives
//!   `yᵀA x >= yᵀb + 1`. With plain `x >= 0` bounds this is the familiar
//!   `yᵀA >= 0, yᵀb = -1` form.
//! * **Optimal**: `y` with reduced costs `r = c - yᵀA`. For minimisation
//!   `y_i <= 0` on `<=` rows and `y_i >= 0` on `>=` rows, and
//!   `yᵀb + sum_j min_{x_j in box} r_j x_j` equals the optimum. For
//!   maximisation all signs flip and `min` becomes `max`.

mod simplex;

use std::collections::HashMap;
use std::fmt::{self, Write as _};
use std::sync::atomic::{AtomicU64, Ordering};

use crate::error::{Error, Result};
use crate::rational::Rational;

pub use simplex::solve;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Relation {
    Le,
    Eq,
    Ge,
}

impl fmt::Display for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Relation::Le => "<=",
            Relation::Eq => "=",
            Relation::Ge => ">=",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Sense {
    Minimize,
    Maximize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Variable {
    pub name: String,
    pub lower: Option<Rational>,
    pub upper: Option<Rational>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Constraint {
    pub terms: Vec<(usize, Rational)>,
    pub relation: Relation,
    pub rhs: Rational,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LinearProgram {
    variables: Vec<Variable>,
    constraints: Vec<Constraint>,
    objective: Vec<(usize, Rational)>,
    sense: Sense,
    names: HashMap<String, usize>,
}

/// Merges duplicate indices and drops zero coefficients; sorted by index.
fn normalize_terms(terms: impl IntoIterator<Item = (usize, Rational)>) -> Vec<(usize, Rational)> {
    let mut v: Vec<(usize, Rational)> = terms.into_iter().collect();
    v.sort_by_key(|(j, _)| *j);
    let mut out: Vec<(usize, Rational)> = Vec::with_capacity(v.len());
    for (j, c) in v {
        match out.last_mut() {
            Some((k, acc)) if *k == j => *acc += c,
            _ => out.push((j, c)),
        }
    }
    out.retain(|(_, c)| !c.is_zero());
    out
}

impl LinearProgram {
    pub fn new(sense: Sense) -> Self {
        LinearProgram {
            variables: Vec::new(),
            constraints: Vec::new(),
            objective: Vec::new(),
            sense,
            names: HashMap::new(),
        }
    }

    /// Adds a variable and returns its index. Panics on a duplicate name.
    pub fn add_variable(
        &mut self,
        name: impl Into<String>,
        lower: Option<Rational>,
        upper: Option<Rational>,
    ) -> usize {
        let name = name.into();
        let idx = self.variables.len();
        let prev = self.names.insert(name.clone(), idx);
        assert!(prev.is_none(), "duplicate LP variable name `{name}`");
        self.variables.push(Variable { name, lower, upper });
        idx
    }

    /// Adds a variable together with its coefficients in existing rows and
    /// in the objective.
    pub fn add_column(
        &mut self,
        name: impl Into<String>,
        lower: Option<Rational>,
        upper: Option<Rational>,
        objective: Rational,
        column: impl IntoIterator<Item = (usize, Rational)>,
    ) -> Result<usize> {
        let rows = normalize_terms(column);
        if let Some((i, _)) = rows.iter().find(|(i, _)| *i >= self.constraints.len()) {
            return Err(Error::MalformedLp(format!("column references undeclared row {i}")));
        }
        let j = self.add_variable(name, lower, upper);
        for (i, a) in rows {
            self.constraints[i].terms.push((j, a));
        }
        if !objective.is_zero() {
            self.objective.push((j, objective));
        }
        Ok(j)
    }

    pub fn set_bounds(&mut self, var: usize, lower: Option<Rational>, upper: Option<Rational>) {
        let v = &mut self.variables[var];
        v.lower = lower;
        v.upper = upper;
    }

    pub fn add_constraint(
        &mut self,
        terms: impl IntoIterator<Item = (usize, Rational)>,
        relation: Relation,
        rhs: Rational,
    ) -> usize {
        self.constraints.push(Constraint {
            terms: normalize_terms(terms),
            relation,
            rhs,
        });
        self.constraints.len() - 1
    }

    pub fn set_objective(&mut self, terms: impl IntoIterator<Item = (usize, Rational)>) {
        self.objective = normalize_terms(terms);
    }

    pub fn sense(&self) -> Sense {
        self.sense
    }

    pub fn variables(&self) -> &[Variable] {
        &self.variables
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    pub fn objective(&self) -> &[(usize, Rational)] {
        &self.objective
    }

    pub fn num_variables(&self) -> usize {
        self.variables.len()
    }

    pub fn num_constraints(&self) -> usize {
        self.constraints.len()
    }

    pub fn variable_index(&self, name: &str) -> Option<usize> {
        self.names.get(name).copied()
    }

    /// Rejects out-of-range indices and crossed bounds.
    pub fn check(&self) -> Result<()> {
        let n = self.variables.len();
        for v in &self.variables {
            if let (Some(l), Some(u)) = (&v.lower, &v.upper) {
                if l > u {
                    return Err(Error::MalformedLp(format!(
                        "variable `{}` has lower bound {l} above upper bound {u}",
                        v.name
                    )));
                }
            }
        }
        for (i, c) in self.constraints.iter().enumerate() {
            if let Some((j, _)) = c.terms.iter().find(|(j, _)| *j >= n) {
                return Err(Error::MalformedLp(format!(
                    "row {i} references undeclared variable {j}"
                )));
            }
        }
        if let Some((j, _)) = self.objective.iter().find(|(j, _)| *j >= n) {
            return Err(Error::MalformedLp(format!(
                "objective references undeclared variable {j}"
            )));
        }
        Ok(())
    }

    pub fn objective_at(&self, values: &[Rational]) -> Rational {
        self.objective.iter().map(|(j, c)| c * &values[*j]).sum()
    }

    /// Human-readable dump in the usual LP text layout.
    pub fn to_lp_string(&self) -> String {
        let mut out = String::new();
        let fmt_row = |terms: &[(usize, Rational)]| -> String {
            if terms.is_empty() {
                return "0".to_string();
            }
            let mut s = String::new();
            for (k, (j, c)) in terms.iter().enumerate() {
                let name = &self.variables[*j].name;
                if k == 0 {
                    if c.is_negative() {
                        s.push_str("- ");
                    }
                } else if c.is_negative() {
                    s.push_str(" - ");
                } else {
                    s.push_str(" + ");
                }
                let a = c.abs();
                if a.is_one() {
                    s.push_str(name);
                } else {
                    let _ = write!(s, "{a} {name}");
                }
            }
            s
        };
        out.push_str(match self.sense {
            Sense::Minimize => "Minimize\n",
            Sense::Maximize => "Maximize\n",
        });
        let _ = writeln!(out, " obj: {}", fmt_row(&self.objective));
        out.push_str("Subject To\n");
        for (i, c) in self.constraints.iter().enumerate() {
            let _ = writeln!(out, " c{i}: {} {} {}", fmt_row(&c.terms), c.relation, c.rhs);
        }
        out.push_str("Bounds\n");
        for v in &self.variables {
            match (&v.lower, &v.upper) {
                (Some(l), Some(u)) if l == u => {
                    let _ = writeln!(out, " {} = {l}", v.name);
                }
                (Some(l), Some(u)) => {
                    let _ = writeln!(out, " {l} <= {} <= {u}", v.name);
                }
                (Some(l), None) => {
                    let _ = writeln!(out, " {} >= {l}", v.name);
                }
                (None, Some(u)) => {
                    let _ = writeln!(out, " -inf <= {} <= {u}", v.name);
                }
                (None, None) => {
                    let _ = writeln!(out, " {} free", v.name);
                }
            }
        }
        out.push_str("End\n");
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LpSolution {
    pub status: LpStatus,
    /// Set exactly when `status` is optimal.
    pub objective_value: Option<Rational>,
    /// Primal point; for an unbounded problem the last feasible vertex,
    /// for an infeasible one all zeros.
    pub values: Vec<Rational>,
    /// Row duals when optimal, a Farkas certificate when infeasible.
    pub dual_or_farkas: Option<Vec<Rational>>,
}

impl LpSolution {
    pub fn is_optimal(&self) -> bool {
        self.status == LpStatus::Optimal
    }

    pub fn value(&self, lp: &LinearProgram, name: &str) -> Option<&Rational> {
        lp.variable_index(name).map(|j| &self.values[j])
    }
}

fn row_activity(terms: &[(usize, Rational)], values: &[Rational]) -> Rational {
    terms.iter().map(|(j, c)| c * &values[*j]).sum()
}

fn satisfies(lhs: &Rational, rel: Relation, rhs: &Rational) -> bool {
    match rel {
        Relation::Le => lhs <= rhs,
        Relation::Eq => lhs == rhs,
        Relation::Ge => lhs >= rhs,
    }
}

/// `y_i * (a_i x) <= y_i * b_i` is implied by row `i`.
fn farkas_sign_ok(rel: Relation, y: &Rational) -> bool {
    match rel {
        Relation::Le => !y.is_negative(),
        Relation::Ge => !y.is_positive(),
        Relation::Eq => true,
    }
}

/// `sum_j min over the box of coeff_j * x_j`, or `None` if unbounded below.
fn box_minimum(lp: &LinearProgram, coeff: &[Rational]) -> Option<Rational> {
    let mut total = Rational::zero();
    for (j, c) in coeff.iter().enumerate() {
        if c.is_zero() {
            continue;
        }
        let v = &lp.variables[j];
        let bound = if c.is_positive() { &v.lower } else { &v.upper };
        total += c * bound.as_ref()?;
    }
    Some(total)
}

fn combine_rows(lp: &LinearProgram, y: &[Rational]) -> Vec<Rational> {
    let mut coeff = vec![Rational::zero(); lp.num_variables()];
    for (c, yi) in lp.constraints.iter().zip(y) {
        if yi.is_zero() {
            continue;
        }
        for (j, a) in &c.terms {
            coeff[*j] += yi * a;
        }
    }
    coeff
}

/// Gap `min_box(yᵀA x) - yᵀb` of a candidate Farkas vector, if it is
/// sign-consistent and bounded.
pub(crate) fn farkas_gap(lp: &LinearProgram, y: &[Rational]) -> Option<Rational> {
    if y.len() != lp.num_constraints() {
        return None;
    }
    if !lp
        .constraints
        .iter()
        .zip(y)
        .all(|(c, yi)| farkas_sign_ok(c.relation, yi))
    {
        return None;
    }
    let coeff = combine_rows(lp, y);
    let low = box_minimum(lp, &coeff)?;
    let yb: Rational = lp.constraints.iter().zip(y).map(|(c, yi)| yi * &c.rhs).sum();
    Some(low - yb)
}

/// Checks that `y` proves infeasibility: sign-consistent with a positive
/// gap. [`solve`] scales its certificates to a gap of exactly one.
pub fn verify_farkas(lp: &LinearProgram, y: &[Rational]) -> bool {
    matches!(farkas_gap(lp, y), Some(g) if g.is_positive())
}

/// Whether `values` satisfies every bound and row exactly.
pub fn is_feasible_point(lp: &LinearProgram, values: &[Rational]) -> bool {
    if values.len() != lp.num_variables() {
        return false;
    }
    for (v, x) in lp.variables.iter().zip(values) {
        if v.lower.as_ref().is_some_and(|l| x < l) || v.upper.as_ref().is_some_and(|u| x > u) {
            return false;
        }
    }
    lp.constraints
        .iter()
        .all(|c| satisfies(&row_activity(&c.terms, values), c.relation, &c.rhs))
}

/// Dual objective of `y`, or `None` if `y` is not dual feasible.
fn dual_objective(lp: &LinearProgram, y: &[Rational]) -> Option<Rational> {
    if y.len() != lp.num_constraints() {
        return None;
    }
    let minimize = lp.sense == Sense::Minimize;
    for (c, yi) in lp.constraints.iter().zip(y) {
        let ok = match (c.relation, minimize) {
            (Relation::Eq, _) => true,
            (Relation::Le, true) | (Relation::Ge, false) => !yi.is_positive(),
            (Relation::Ge, true) | (Relation::Le, false) => !yi.is_negative(),
        };
        if !ok {
            return None;
        }
    }
    let ya = combine_rows(lp, y);
    let mut reduced = vec![Rational::zero(); lp.num_variables()];
    for (j, c) in &lp.objective {
        reduced[*j] = c.clone();
    }
    for (r, a) in reduced.iter_mut().zip(&ya) {
        *r -= a;
    }
    let bound_part = if minimize {
        box_minimum(lp, &reduced)?
    } else {
        let neg: Vec<Rational> = reduced.iter().map(|r| -r).collect();
        -box_minimum(lp, &neg)?
    };
    let yb: Rational = lp.constraints.iter().zip(y).map(|(c, yi)| yi * &c.rhs).sum();
    Some(yb + bound_part)
}

/// Re-checks `sol` against `lp` in exact arithmetic.
///
/// Optimal: the point is feasible, the objective matches, and when duals are
/// attached they are dual feasible with equal objective (which proves
/// optimality). Infeasible: the attached Farkas vector is valid. Unbounded:
/// the attached point is feasible.
pub fn verify_solution(lp: &LinearProgram, sol: &LpSolution) -> bool {
    if lp.check().is_err() {
        return false;
    }
    match sol.status {
        LpStatus::Optimal => {
            let Some(obj) = &sol.objective_value else {
                return false;
            };
            if !is_feasible_point(lp, &sol.values) || lp.objective_at(&sol.values) != *obj {
                return false;
            }
            match &sol.dual_or_farkas {
                None => true,
                Some(y) => dual_objective(lp, y).as_ref() == Some(obj),
            }
        }
        LpStatus::Infeasible => match &sol.dual_or_farkas {
            Some(y) => verify_farkas(lp, y),
            None => false,
        },
        LpStatus::Unbounded => is_feasible_point(lp, &sol.values),
    }
}

static SOLVES: AtomicU64 = AtomicU64::new(0);
static VERIFIED: AtomicU64 = AtomicU64::new(0);
static INFEASIBLE: AtomicU64 = AtomicU64::new(0);
static CERTIFIED: AtomicU64 = AtomicU64::new(0);

/// Process-wide tallies of [`solve_checked`] calls.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct AuditCounters {
    pub solves: u64,
    pub verified: u64,
    pub infeasible: u64,
    pub certified_infeasible: u64,
}

pub fn audit_counters() -> AuditCounters {
    AuditCounters {
        solves: SOLVES.load(Ordering::Relaxed),
        verified: VERIFIED.load(Ordering::Relaxed),
        infeasible: INFEASIBLE.load(Ordering::Relaxed),
        certified_infeasible: CERTIFIED.load(Ordering::Relaxed),
    }
}

/// [`solve`] followed by [`verify_solution`]; a failed check is an
/// [`Error::Internal`]. Every call is tallied in [`audit_counters`].
pub fn solve_checked(lp: &LinearProgram) -> Result<LpSolution> {
    let sol = solve(lp)?;
    audit(lp, sol)
}

fn audit(lp: &LinearProgram, sol: LpSolution) -> Result<LpSolution> {
    SOLVES.fetch_add(1, Ordering::Relaxed);
    let infeasible = sol.status == LpStatus::Infeasible;
    if infeasible {
        INFEASIBLE.fetch_add(1, Ordering::Relaxed);
    }
    if !verify_solution(lp, &sol) {
        return Err(Error::Internal(format!(
            "LP solution failed verification (status {:?})",
            sol.status
        )));
    }
    VERIFIED.fetch_add(1, Ordering::Relaxed);
    if infeasible {
        CERTIFIED.fetch_add(1, Ordering::Relaxed);
    }
    Ok(sol)
}

/// A feasible model that keeps its simplex basis, so that nonnegative
/// columns can be added and the optimum recomputed without starting over.
/// Every solve is verified and tallied like [`solve_checked`].
pub struct WarmStart {
    lp: LinearProgram,
    simplex: simplex::Simplex,
}

impl WarmStart {
    /// Solves `lp`; `Err` with the verified infeasible solution's status if
    /// the model has no feasible point.
    pub fn new(lp: LinearProgram) -> Result<(Self, LpSolution)> {
        let mut simplex = simplex::Simplex::new(&lp)?;
        if let Some(infeasible) = simplex.phase_one(&lp)? {
            audit(&lp, infeasible)?;
            return Err(Error::Input("warm-start model is infeasible".into()));
        }
        let sol = audit(&lp, simplex.phase_two(&lp))?;
        Ok((WarmStart { lp, simplex }, sol))
    }

    pub fn lp(&self) -> &LinearProgram {
        &self.lp
    }

    /// Adds a variable with bounds `[0, inf)`; call [`WarmStart::resolve`]
    /// afterwards.
    pub fn add_column(
        &mut self,
        name: impl Into<String>,
        objective: Rational,
        column: impl IntoIterator<Item = (usize, Rational)>,
    ) -> Result<usize> {
        let j = self.lp.add_column(name, Some(Rational::zero()), None, objective, column)?;
        self.simplex.append_column(&self.lp, j);
        Ok(j)
    }

    pub fn resolve(&mut self) -> Result<LpSolution> {
        let sol = self.simplex.phase_two(&self.lp);
        audit(&self.lp, sol)
    }
}
