//! The basic LP relaxation: arc consistency on the finite/infinite
//! skeleton, the relaxation itself, and assignment recovery by pinning.

use crate::error::{Error, Result};
use crate::lp::{solve_checked, LinearProgram, LpSolution, LpStatus, Relation, Sense};
use crate::rational::Rational;
use crate::structure::{Assignment, Term, ValuedStructure};
use crate::tuple::tuple_index;
use crate::value::ExtendedRational;

/// Surviving values per instance variable after arc consistency.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AcState {
    /// Ascending surviving values of each variable.
    pub domains: Vec<Vec<usize>>,
    pub empty_domain: bool,
}

impl AcState {
    pub fn contains(&self, x: usize, a: usize) -> bool {
        self.domains[x].binary_search(&a).is_ok()
    }
}

/// Positions of each distinct variable of a scope.
fn slots(term: &Term) -> (Vec<usize>, Vec<usize>) {
    let vars = term.variables();
    let pos = term
        .scope
        .iter()
        .map(|x| vars.iter().position(|v| v == x).expect("scope variable"))
        .collect();
    (vars, pos)
}

/// Calls `visit(σ, image)` for every assignment `σ` of `vars` drawn from
/// the given domains, where `image` is the scope under `σ`.
fn for_each_sigma(
    domains: &[Vec<usize>],
    vars: &[usize],
    pos: &[usize],
    mut visit: impl FnMut(&[usize], &[usize]),
) {
    let radices: Vec<usize> = vars.iter().map(|&x| domains[x].len()).collect();
    if radices.contains(&0) {
        return;
    }
    let mut digits = vec![0; vars.len()];
    let mut sigma = vec![0; vars.len()];
    let mut image = vec![0; pos.len()];
    loop {
        for (i, &x) in vars.iter().enumerate() {
            sigma[i] = domains[x][digits[i]];
        }
        for (slot, &p) in image.iter_mut().zip(pos) {
            *slot = sigma[p];
        }
        visit(&sigma, &image);
        let mut i = digits.len();
        loop {
            if i == 0 {
                return;
            }
            i -= 1;
            digits[i] += 1;
            if digits[i] < radices[i] {
                break;
            }
            digits[i] = 0;
        }
    }
}

/// Generalised arc consistency: removes `a` from `Dom(x)` while some
/// positive-weight term on `x` has no finite-cost support with `x = a`.
pub fn arc_consistency(instance: &ValuedStructure, language: &ValuedStructure) -> Result<AcState> {
    instance.check_same_signature(language)?;
    let (n, d) = (instance.domain_size(), language.domain_size());
    let mut domains: Vec<Vec<usize>> = vec![(0..d).collect(); n];
    let terms = instance.terms();
    if !language.is_finite_valued() {
        let shaped: Vec<(Term, Vec<usize>, Vec<usize>)> = terms
            .into_iter()
            .map(|t| {
                let (vars, pos) = slots(&t);
                (t, vars, pos)
            })
            .collect();
        let mut changed = true;
        while changed {
            changed = false;
            for (term, vars, pos) in &shaped {
                let mut supported: Vec<Vec<bool>> = vec![vec![false; d]; vars.len()];
                let table = language.table(term.symbol);
                for_each_sigma(&domains, vars, pos, |sigma, image| {
                    if table[tuple_index(image, d)].is_finite() {
                        for (i, &a) in sigma.iter().enumerate() {
                            supported[i][a] = true;
                        }
                    }
                });
                for (i, &x) in vars.iter().enumerate() {
                    let before = domains[x].len();
                    domains[x].retain(|&a| supported[i][a]);
                    changed |= domains[x].len() != before;
                }
            }
        }
    }
    let empty_domain = domains.iter().any(Vec::is_empty);
    Ok(AcState { domains, empty_domain })
}

/// The λ variables of one positive-weight term.
#[derive(Debug, Clone)]
pub struct LambdaBlock {
    pub term: Term,
    /// Distinct scope variables, in order of first appearance.
    pub variables: Vec<usize>,
    /// `(σ as values of `variables`, LP variable)` for finite-cost `σ`.
    pub entries: Vec<(Vec<usize>, usize)>,
}

/// The relaxation as an LP, with maps from `(x, a)` to `μ_x(a)` and from
/// terms and assignments to `λ`.
///
/// Variables are named `mu_<x>_<a>` and `lam_<block>_<entry>`.
#[derive(Debug, Clone)]
pub struct BlpModel {
    pub lp: LinearProgram,
    pub ac: AcState,
    mu: Vec<Vec<Option<usize>>>,
    pub blocks: Vec<LambdaBlock>,
}

impl BlpModel {
    pub fn mu(&self, x: usize, a: usize) -> Option<usize> {
        self.mu[x][a]
    }

    pub fn num_variables(&self) -> usize {
        self.mu.len()
    }

    /// Variables that occur in no positive-weight term.
    pub fn isolated(&self) -> Vec<bool> {
        let mut iso = vec![true; self.mu.len()];
        for b in &self.blocks {
            for &x in &b.variables {
                iso[x] = false;
            }
        }
        iso
    }
}

fn finite_weight(term: &Term) -> Result<Rational> {
    term.weight.finite().cloned().ok_or_else(|| {
        Error::input(format!(
            "instance weight of symbol #{} at {:?} is infinite; relaxations need finite weights",
            term.symbol, term.scope
        ))
    })
}

/// Builds the relaxation over the surviving values of `ac`; `None` when a
/// domain is empty (the optimum is infinite).
pub fn build_blp(
    instance: &ValuedStructure,
    language: &ValuedStructure,
    ac: &AcState,
) -> Result<Option<BlpModel>> {
    instance.check_same_signature(language)?;
    if ac.domains.len() != instance.domain_size() {
        return Err(Error::input("arc consistency state does not match the instance"));
    }
    if ac.empty_domain {
        return Ok(None);
    }
    let d = language.domain_size();
    let mut lp = LinearProgram::new(Sense::Minimize);
    let unit = || (Some(Rational::zero()), Some(Rational::one()));
    let mut mu = vec![vec![None; d]; instance.domain_size()];
    for (x, dom) in ac.domains.iter().enumerate() {
        for &a in dom {
            let (l, u) = unit();
            mu[x][a] = Some(lp.add_variable(format!("mu_{x}_{a}"), l, u));
        }
    }
    let mut objective = Vec::new();
    let mut blocks = Vec::new();
    for term in instance.terms() {
        let weight = finite_weight(&term)?;
        let (vars, pos) = slots(&term);
        let table = language.table(term.symbol);
        let b = blocks.len();
        let mut entries = Vec::new();
        for_each_sigma(&ac.domains, &vars, &pos, |sigma, image| {
            if let Some(c) = table[tuple_index(image, d)].finite() {
                let (l, u) = unit();
                let v = lp.add_variable(format!("lam_{b}_{}", entries.len()), l, u);
                objective.push((v, &weight * c));
                entries.push((sigma.to_vec(), v));
            }
        });
        for (i, &x) in vars.iter().enumerate() {
            for &a in &ac.domains[x] {
                let row = entries
                    .iter()
                    .filter(|(s, _)| s[i] == a)
                    .map(|(_, v)| (*v, Rational::one()))
                    .chain(std::iter::once((mu[x][a].expect("surviving value"), -Rational::one())));
                lp.add_constraint(row, Relation::Eq, Rational::zero());
            }
        }
        blocks.push(LambdaBlock { term, variables: vars, entries });
    }
    for row in &mu {
        lp.add_constraint(row.iter().flatten().map(|&v| (v, Rational::one())), Relation::Eq, Rational::one());
    }
    lp.set_objective(objective);
    Ok(Some(BlpModel { lp, ac: ac.clone(), mu, blocks }))
}

fn value_of(sol: &LpSolution) -> Result<ExtendedRational> {
    match sol.status {
        LpStatus::Optimal => Ok(ExtendedRational::Finite(
            sol.objective_value.clone().expect("optimal value"),
        )),
        LpStatus::Infeasible => Ok(ExtendedRational::Infinity),
        LpStatus::Unbounded => Err(Error::Internal("bounded relaxation reported unbounded".into())),
    }
}

/// Optimum of the relaxation after arc consistency; infinite when a domain
/// empties or the LP is infeasible.
pub fn blp_value(instance: &ValuedStructure, language: &ValuedStructure) -> Result<ExtendedRational> {
    let ac = arc_consistency(instance, language)?;
    match build_blp(instance, language, &ac)? {
        None => Ok(ExtendedRational::Infinity),
        Some(model) => value_of(&solve_checked(&model.lp)?),
    }
}

/// Self-reduction: for each variable in ascending order, pins the least
/// value whose pinned relaxation keeps the optimum. Returns the optimum and
/// the pinned assignment, or no assignment if some variable admits no such
/// value (the relaxation is not exact on this instance).
pub fn solve_via_blp(
    instance: &ValuedStructure,
    language: &ValuedStructure,
) -> Result<(ExtendedRational, Option<Assignment>)> {
    let ac = arc_consistency(instance, language)?;
    let Some(mut model) = build_blp(instance, language, &ac)? else {
        return Ok((ExtendedRational::Infinity, None));
    };
    let sol = solve_checked(&model.lp)?;
    let value = value_of(&sol)?;
    let Some(target) = value.finite().cloned() else {
        return Ok((value, None));
    };
    let mut current = sol.values;
    let isolated = model.isolated();
    let mut h = vec![0; instance.domain_size()];
    for x in 0..instance.domain_size() {
        if isolated[x] {
            continue;
        }
        let dom = model.ac.domains[x].clone();
        let mut pinned = None;
        for &a in &dom {
            let pin = |model: &mut BlpModel, a: Option<usize>| {
                for &b in &dom {
                    let v = model.mu(x, b).expect("surviving value");
                    let (l, u) = match a {
                        Some(a) if a == b => (Rational::one(), Rational::one()),
                        Some(_) => (Rational::zero(), Rational::zero()),
                        None => (Rational::zero(), Rational::one()),
                    };
                    model.lp.set_bounds(v, Some(l), Some(u));
                }
            };
            pin(&mut model, Some(a));
            let mu_xa = model.mu(x, a).expect("surviving value");
            if current[mu_xa].is_one() {
                // the last optimum already satisfies this pin
                pinned = Some(a);
                break;
            }
            let trial = solve_checked(&model.lp)?;
            if trial.status == LpStatus::Optimal && trial.objective_value.as_ref() == Some(&target) {
                current = trial.values;
                pinned = Some(a);
                break;
            }
            pin(&mut model, None);
        }
        match pinned {
            Some(a) => h[x] = a,
            None => return Ok((value, None)),
        }
    }
    let h = Assignment::new(h, language.domain_size())?;
    Ok((value, Some(h)))
}
