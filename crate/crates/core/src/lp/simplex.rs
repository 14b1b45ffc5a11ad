//! Two-phase bounded-variable primal simplex on a dense tableau.
//!
//! Every model variable is shifted or mirrored so that internal columns live
//! in `[0, u]` (free variables are split). Inequalities get a slack column,
//! rows with negative right-hand side are negated, and rows whose slack
//! cannot start basic get an artificial column. Phase one minimises the sum
//! of artificials; phase two keeps the artificials pinned to zero. The
//! entering column has the largest reduced cost; after a run of degenerate
//! pivots both choices switch to Bland's rule until the objective moves
//! again, so the method terminates.

use super::{farkas_gap, LinearProgram, LpSolution, LpStatus, Relation, Sense};
use crate::error::{Error, Result};
use crate::rational::Rational;

/// Consecutive degenerate pivots before switching to Bland's rule.
const STALL_LIMIT: usize = 20;

/// Model variable `x = offset + pos - neg`.
struct VarMap {
    offset: Rational,
    pos: Option<usize>,
    neg: Option<usize>,
}

struct Tableau {
    rows: Vec<Vec<Rational>>,
    beta: Vec<Rational>,
    basis: Vec<usize>,
    in_basis: Vec<Option<usize>>,
    at_upper: Vec<bool>,
    upper: Vec<Option<Rational>>,
    cost: Vec<Rational>,
    reduced: Vec<Rational>,
}

enum Outcome {
    Optimal,
    Unbounded,
}

impl Tableau {
    fn recompute_reduced(&mut self) {
        let mut d = self.cost.clone();
        for (i, &b) in self.basis.iter().enumerate() {
            let cb = &self.cost[b];
            if cb.is_zero() {
                continue;
            }
            for (dk, t) in d.iter_mut().zip(&self.rows[i]) {
                if !t.is_zero() {
                    dk.sub_mul_assign(cb, t);
                }
            }
        }
        self.reduced = d;
    }

    fn col_value(&self, k: usize) -> Rational {
        match self.in_basis[k] {
            Some(i) => self.beta[i].clone(),
            None if self.at_upper[k] => self.upper[k].clone().expect("at upper without bound"),
            None => Rational::zero(),
        }
    }

    fn entering(&self, bland: bool) -> Option<(usize, bool)> {
        let mut best: Option<(usize, bool)> = None;
        for (j, d) in self.reduced.iter().enumerate() {
            if self.in_basis[j].is_some() || d.is_zero() {
                continue;
            }
            if self.upper[j].as_ref().is_some_and(|u| u.is_zero()) {
                continue;
            }
            let candidate = if !self.at_upper[j] && d.is_negative() {
                (j, true)
            } else if self.at_upper[j] && d.is_positive() {
                (j, false)
            } else {
                continue;
            };
            if bland {
                return Some(candidate);
            }
            if best.is_none_or(|(b, _)| d.abs() > self.reduced[b].abs()) {
                best = Some(candidate);
            }
        }
        best
    }

    fn run(&mut self) -> Outcome {
        let mut stall = 0;
        loop {
            let Some((j, increase)) = self.entering(stall >= STALL_LIMIT) else {
                return Outcome::Optimal;
            };
            // (step length, index of the variable that blocks, leaving row and side)
            let mut best: Option<(Rational, usize, Option<(usize, bool)>)> =
                self.upper[j].clone().map(|u| (u, j, None));
            for i in 0..self.rows.len() {
                let a = &self.rows[i][j];
                if a.is_zero() {
                    continue;
                }
                let alpha = if increase { a.clone() } else { -a };
                let b = self.basis[i];
                let (limit, to_upper) = if alpha.is_positive() {
                    (&self.beta[i] / &alpha, false)
                } else {
                    match &self.upper[b] {
                        Some(u) => ((u - &self.beta[i]) / (-&alpha), true),
                        None => continue,
                    }
                };
                let better = match &best {
                    None => true,
                    Some((l, col, _)) => limit < *l || (limit == *l && b < *col),
                };
                if better {
                    best = Some((limit, b, Some((i, to_upper))));
                }
            }
            let Some((t, _, leave)) = best else {
                return Outcome::Unbounded;
            };
            stall = if t.is_zero() { stall + 1 } else { 0 };
            if !t.is_zero() {
                for i in 0..self.rows.len() {
                    let a = &self.rows[i][j];
                    if a.is_zero() {
                        continue;
                    }
                    let delta = a * &t;
                    if increase {
                        self.beta[i] -= delta;
                    } else {
                        self.beta[i] += delta;
                    }
                }
            }
            match leave {
                None => self.at_upper[j] = !self.at_upper[j],
                Some((r, to_upper)) => {
                    let leaving = self.basis[r];
                    self.in_basis[leaving] = None;
                    self.at_upper[leaving] = to_upper;
                    self.beta[r] = if increase {
                        t
                    } else {
                        self.upper[j].as_ref().expect("decreasing from a bound") - &t
                    };
                    self.at_upper[j] = false;
                    self.basis[r] = j;
                    self.in_basis[j] = Some(r);
                    self.pivot(r, j);
                }
            }
        }
    }

    fn pivot(&mut self, r: usize, j: usize) {
        let p = self.rows[r][j].clone();
        if !p.is_one() {
            let inv = p.recip();
            for v in self.rows[r].iter_mut() {
                if !v.is_zero() {
                    *v *= &inv;
                }
            }
        }
        let nz: Vec<(usize, Rational)> = self.rows[r]
            .iter()
            .enumerate()
            .filter(|(_, v)| !v.is_zero())
            .map(|(k, v)| (k, v.clone()))
            .collect();
        for (i, row) in self.rows.iter_mut().enumerate() {
            if i == r || row[j].is_zero() {
                continue;
            }
            let f = row[j].clone();
            for (k, v) in &nz {
                row[*k].sub_mul_assign(&f, v);
            }
        }
        let f = self.reduced[j].clone();
        if !f.is_zero() {
            for (k, v) in &nz {
                self.reduced[*k].sub_mul_assign(&f, v);
            }
        }
    }
}

/// Tableau state of one model, kept between solves so that columns can be
/// appended and the optimum recomputed from the current basis.
pub(super) struct Simplex {
    tab: Tableau,
    maps: Vec<VarMap>,
    init_col: Vec<usize>,
    row_sign: Vec<bool>,
    artificial: Vec<usize>,
    obj_sign: Rational,
}

impl Simplex {
    pub(super) fn new(lp: &LinearProgram) -> Result<Self> {
        lp.check()?;
        let m = lp.num_constraints();

        let mut maps = Vec::with_capacity(lp.num_variables());
        let mut upper: Vec<Option<Rational>> = Vec::new();
        for v in lp.variables() {
            let c = upper.len();
            match (&v.lower, &v.upper) {
                (Some(l), u) => {
                    upper.push(u.as_ref().map(|u| u - l));
                    maps.push(VarMap { offset: l.clone(), pos: Some(c), neg: None });
                }
                (None, Some(u)) => {
                    upper.push(None);
                    maps.push(VarMap { offset: u.clone(), pos: None, neg: Some(c) });
                }
                (None, None) => {
                    upper.push(None);
                    upper.push(None);
                    maps.push(VarMap { offset: Rational::zero(), pos: Some(c), neg: Some(c + 1) });
                }
            }
        }
        let n_struct = upper.len();

        // Sparse transformed rows before the column count is known.
        let mut sparse: Vec<Vec<(usize, Rational)>> = Vec::with_capacity(m);
        let mut rhs: Vec<Rational> = Vec::with_capacity(m);
        let mut row_sign: Vec<bool> = Vec::with_capacity(m);
        let mut slack_coef: Vec<Option<bool>> = Vec::with_capacity(m);
        for c in lp.constraints() {
            let mut b = c.rhs.clone();
            let mut row = Vec::with_capacity(c.terms.len() + 1);
            for (j, a) in &c.terms {
                let vm = &maps[*j];
                if !vm.offset.is_zero() {
                    b -= a * &vm.offset;
                }
                if let Some(p) = vm.pos {
                    row.push((p, a.clone()));
                }
                if let Some(q) = vm.neg {
                    row.push((q, -a));
                }
            }
            let negate = b.is_negative();
            if negate {
                b = -b;
                for (_, a) in row.iter_mut() {
                    *a = -&*a;
                }
            }
            let slack = match c.relation {
                Relation::Le => Some(!negate),
                Relation::Ge => Some(negate),
                Relation::Eq => None,
            };
            sparse.push(row);
            rhs.push(b);
            row_sign.push(!negate);
            slack_coef.push(slack);
        }

        let mut n = n_struct;
        let mut slack_col = vec![None; m];
        for (i, s) in slack_coef.iter().enumerate() {
            if s.is_some() {
                slack_col[i] = Some(n);
                n += 1;
            }
        }
        let mut init_col = vec![0; m];
        let mut artificial = vec![false; m];
        for i in 0..m {
            match (slack_col[i], slack_coef[i]) {
                (Some(k), Some(true)) => init_col[i] = k,
                _ => {
                    init_col[i] = n;
                    artificial[i] = true;
                    n += 1;
                }
            }
        }
        upper.resize(n, None);

        let mut rows = vec![vec![Rational::zero(); n]; m];
        for (i, row) in rows.iter_mut().enumerate() {
            for (k, a) in &sparse[i] {
                row[*k] += a;
            }
            if let (Some(k), Some(plus)) = (slack_col[i], slack_coef[i]) {
                row[k] = if plus { Rational::one() } else { -Rational::one() };
            }
            row[init_col[i]] = Rational::one();
        }
        drop(sparse);

        let mut in_basis = vec![None; n];
        for (i, &k) in init_col.iter().enumerate() {
            in_basis[k] = Some(i);
        }
        let mut cost = vec![Rational::zero(); n];
        for i in (0..m).filter(|&i| artificial[i]) {
            cost[init_col[i]] = Rational::one();
        }
        let obj_sign = match lp.sense() {
            Sense::Minimize => Rational::one(),
            Sense::Maximize => -Rational::one(),
        };
        Ok(Simplex {
            tab: Tableau {
                rows,
                beta: rhs,
                basis: init_col.clone(),
                in_basis,
                at_upper: vec![false; n],
                upper,
                cost,
                reduced: Vec::new(),
            },
            maps,
            artificial: (0..m).filter(|&i| artificial[i]).map(|i| init_col[i]).collect(),
            init_col,
            row_sign,
            obj_sign,
        })
    }

    /// Phase one; returns the infeasibility certificate if there is one.
    pub(super) fn phase_one(&mut self, lp: &LinearProgram) -> Result<Option<LpSolution>> {
        let artificial = &self.artificial;
        if artificial.is_empty() {
            return Ok(None);
        }
        let tab = &mut self.tab;
        tab.recompute_reduced();
        if let Outcome::Unbounded = tab.run() {
            return Err(Error::Internal("phase one reported unbounded".into()));
        }
        let infeasibility: Rational = artificial.iter().map(|&k| tab.col_value(k)).sum();
        if infeasibility.is_positive() {
            let y: Vec<Rational> = (0..lp.num_constraints())
                .map(|i| {
                    let k = self.init_col[i];
                    let y_int = &tab.cost[k] - &tab.reduced[k];
                    if self.row_sign[i] {
                        -y_int
                    } else {
                        y_int
                    }
                })
                .collect();
            let gap = farkas_gap(lp, &y)
                .filter(|g| g.is_positive())
                .ok_or_else(|| Error::Internal("phase one produced an invalid Farkas vector".into()))?;
            let y = y.into_iter().map(|v| v / &gap).collect();
            return Ok(Some(LpSolution {
                status: LpStatus::Infeasible,
                objective_value: None,
                values: vec![Rational::zero(); lp.num_variables()],
                dual_or_farkas: Some(y),
            }));
        }
        for &k in artificial {
            tab.upper[k] = Some(Rational::zero());
        }
        Ok(None)
    }

    /// Phase two from the current (feasible) basis.
    pub(super) fn phase_two(&mut self, lp: &LinearProgram) -> LpSolution {
        let tab = &mut self.tab;
        tab.cost = vec![Rational::zero(); tab.cost.len()];
        for (j, c) in lp.objective() {
            let c = c * &self.obj_sign;
            if let Some(p) = self.maps[*j].pos {
                tab.cost[p] += &c;
            }
            if let Some(q) = self.maps[*j].neg {
                tab.cost[q] -= &c;
            }
        }
        tab.recompute_reduced();
        let outcome = tab.run();

        let values: Vec<Rational> = self
            .maps
            .iter()
            .map(|vm| {
                let mut x = vm.offset.clone();
                if let Some(p) = vm.pos {
                    x += tab.col_value(p);
                }
                if let Some(q) = vm.neg {
                    x -= tab.col_value(q);
                }
                x
            })
            .collect();

        match outcome {
            Outcome::Unbounded => LpSolution {
                status: LpStatus::Unbounded,
                objective_value: None,
                values,
                dual_or_farkas: None,
            },
            Outcome::Optimal => {
                let duals = (0..lp.num_constraints())
                    .map(|i| {
                        let k = self.init_col[i];
                        let y_int = &tab.cost[k] - &tab.reduced[k];
                        let y = if self.row_sign[i] { y_int } else { -y_int };
                        y * &self.obj_sign
                    })
                    .collect();
                LpSolution {
                    status: LpStatus::Optimal,
                    objective_value: Some(lp.objective_at(&values)),
                    values,
                    dual_or_farkas: Some(duals),
                }
            }
        }
    }

    /// Appends model variable `var` of `lp` (lower bound 0, no upper bound)
    /// as a nonbasic column `B⁻¹a` read off the initial-basis columns.
    pub(super) fn append_column(&mut self, lp: &LinearProgram, var: usize) {
        debug_assert_eq!(var, self.maps.len());
        let tab = &mut self.tab;
        let k = tab.cost.len();
        let mut entries = vec![Rational::zero(); lp.num_constraints()];
        for (i, c) in lp.constraints().iter().enumerate() {
            if let Some((_, a)) = c.terms.iter().find(|(j, _)| *j == var) {
                entries[i] = if self.row_sign[i] { a.clone() } else { -a };
            }
        }
        for row in tab.rows.iter_mut() {
            let mut v = Rational::zero();
            for (i, a) in entries.iter().enumerate() {
                let b = &row[self.init_col[i]];
                if !a.is_zero() && !b.is_zero() {
                    v += a * b;
                }
            }
            row.push(v);
        }
        tab.upper.push(None);
        tab.at_upper.push(false);
        tab.in_basis.push(None);
        tab.cost.push(Rational::zero());
        self.maps.push(VarMap { offset: Rational::zero(), pos: Some(k), neg: None });
    }
}

/// Solves `lp` exactly. Fails only on a malformed model.
pub fn solve(lp: &LinearProgram) -> Result<LpSolution> {
    let mut s = Simplex::new(lp)?;
    if let Some(infeasible) = s.phase_one(lp)? {
        return Ok(infeasible);
    }
    Ok(s.phase_two(lp))
}
