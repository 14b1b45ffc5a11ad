//! Optimal soft arc consistency: the bound-maximizing LP and its dual with
//! one `λ` block per scope set.

use std::collections::BTreeMap;

use crate::blp::{arc_consistency, AcState};
use crate::error::{Error, Result};
use crate::lp::{solve_checked, LinearProgram, LpStatus, Relation, Sense};
use crate::rational::Rational;
use crate::structure::{Term, ValuedStructure};
use crate::tuple::tuple_index;
use crate::value::ExtendedRational;

/// Positive-weight terms grouped by scope set; unary-symbol terms are kept
/// per variable instead.
#[derive(Debug, Clone)]
pub struct ScopeIndex {
    /// `(S, terms with {x̄} = S)`, `S` sorted ascending, in ascending order.
    pub groups: Vec<(Vec<usize>, Vec<Term>)>,
    /// `unary[x]`: `(symbol, weight)` for every unary symbol, zero weights
    /// included.
    pub unary: Vec<Vec<(usize, Rational)>>,
}

impl ScopeIndex {
    pub fn new(instance: &ValuedStructure) -> Result<Self> {
        let sig = instance.signature();
        let n = instance.domain_size();
        let mut groups: BTreeMap<Vec<usize>, Vec<Term>> = BTreeMap::new();
        let mut unary = vec![Vec::new(); n];
        for s in (0..sig.len()).filter(|&s| sig.arity(s) == 1) {
            for (x, slot) in unary.iter_mut().enumerate() {
                let w = instance.cost(s, &[x]).finite().cloned().ok_or_else(|| infinite_weight(s, &[x]))?;
                slot.push((s, w));
            }
        }
        for term in instance.terms() {
            if sig.arity(term.symbol) == 1 {
                continue;
            }
            if !term.weight.is_finite() {
                return Err(infinite_weight(term.symbol, &term.scope));
            }
            groups.entry(term.variables_sorted()).or_default().push(term);
        }
        Ok(ScopeIndex { groups: groups.into_iter().collect(), unary })
    }
}

fn infinite_weight(symbol: usize, scope: &[usize]) -> Error {
    Error::input(format!(
        "instance weight of symbol #{symbol} at {scope:?} is infinite; relaxations need finite weights"
    ))
}

/// Assignments `σ: S -> D` over surviving values, with the group's total
/// cost when finite.
fn group_costs(
    set: &[usize],
    terms: &[Term],
    language: &ValuedStructure,
    ac: &AcState,
) -> Vec<(Vec<usize>, Rational)> {
    let d = language.domain_size();
    let domains: Vec<&[usize]> = set.iter().map(|&x| ac.domains[x].as_slice()).collect();
    if domains.iter().any(|dom| dom.is_empty()) {
        return Vec::new();
    }
    let positions: Vec<Vec<usize>> = terms
        .iter()
        .map(|t| t.scope.iter().map(|x| set.binary_search(x).expect("scope in set")).collect())
        .collect();
    let mut out = Vec::new();
    let mut digits = vec![0; set.len()];
    let mut image = Vec::new();
    'sigmas: loop {
        let sigma: Vec<usize> = digits.iter().zip(&domains).map(|(&i, dom)| dom[i]).collect();
        let mut total = ExtendedRational::zero();
        for (t, pos) in terms.iter().zip(&positions) {
            image.clear();
            image.extend(pos.iter().map(|&p| sigma[p]));
            total += &(&t.weight * &language.table(t.symbol)[tuple_index(&image, d)]);
        }
        if let Some(c) = total.into_finite() {
            out.push((sigma, c));
        }
        let mut i = digits.len();
        loop {
            if i == 0 {
                break 'sigmas;
            }
            i -= 1;
            digits[i] += 1;
            if digits[i] < domains[i].len() {
                break;
            }
            digits[i] = 0;
        }
    }
    out
}

fn unary_cost(index: &ScopeIndex, language: &ValuedStructure, x: usize, a: usize) -> Rational {
    index.unary[x]
        .iter()
        .map(|(s, w)| match language.table(*s)[a].finite() {
            Some(c) => w * c,
            // pruned by arc consistency whenever the weight is positive
            None => Rational::zero(),
        })
        .sum()
}

struct Prepared {
    index: ScopeIndex,
    ac: AcState,
    costs: Vec<Vec<(Vec<usize>, Rational)>>,
}

fn prepare(instance: &ValuedStructure, language: &ValuedStructure) -> Result<Prepared> {
    instance.check_same_signature(language)?;
    let index = ScopeIndex::new(instance)?;
    let ac = arc_consistency(instance, language)?;
    let costs = index.groups.iter().map(|(set, terms)| group_costs(set, terms, language, &ac)).collect();
    Ok(Prepared { index, ac, costs })
}

/// `max Σ z_x` over free `y_{S,x}(a)` and `z_x`, after arc consistency.
///
/// Variables are named `y_<group>_<x>_<a>` and `z_<x>`.
pub fn build_osac_primal(instance: &ValuedStructure, language: &ValuedStructure) -> Result<LinearProgram> {
    let p = prepare(instance, language)?;
    let n = instance.domain_size();
    let d = language.domain_size();
    let mut lp = LinearProgram::new(Sense::Maximize);
    let z: Vec<usize> = (0..n).map(|x| lp.add_variable(format!("z_{x}"), None, None)).collect();
    // y[g][i][a] for the i-th variable of group g
    let mut y = Vec::with_capacity(p.index.groups.len());
    for (g, (set, _)) in p.index.groups.iter().enumerate() {
        let block: Vec<Vec<Option<usize>>> = set
            .iter()
            .map(|&x| {
                (0..d)
                    .map(|a| p.ac.contains(x, a).then(|| lp.add_variable(format!("y_{g}_{x}_{a}"), None, None)))
                    .collect()
            })
            .collect();
        y.push(block);
    }
    for (g, costs) in p.costs.iter().enumerate() {
        for (sigma, c) in costs {
            let terms = sigma.iter().enumerate().map(|(i, &a)| (y[g][i][a].expect("surviving"), -Rational::one()));
            lp.add_constraint(terms, Relation::Ge, -c);
        }
    }
    for x in 0..n {
        for &a in &p.ac.domains[x] {
            let mut terms = vec![(z[x], -Rational::one())];
            for (g, (set, _)) in p.index.groups.iter().enumerate() {
                if let Ok(i) = set.binary_search(&x) {
                    terms.push((y[g][i][a].expect("surviving"), Rational::one()));
                }
            }
            lp.add_constraint(terms, Relation::Ge, -unary_cost(&p.index, language, x, a));
        }
    }
    lp.set_objective(z.iter().map(|&v| (v, Rational::one())));
    Ok(lp)
}

/// `min Σ c_S(σ) λ_{S,σ} + Σ u_x(a) μ_x(a)` with marginalization per scope
/// set, after arc consistency.
///
/// Variables are named `lam_<group>_<entry>` and `mu_<x>_<a>`.
pub fn build_osac_dual(instance: &ValuedStructure, language: &ValuedStructure) -> Result<LinearProgram> {
    let p = prepare(instance, language)?;
    let n = instance.domain_size();
    let d = language.domain_size();
    let mut lp = LinearProgram::new(Sense::Minimize);
    let mut objective = Vec::new();
    let mut mu = vec![vec![None; d]; n];
    for x in 0..n {
        for &a in &p.ac.domains[x] {
            let v = lp.add_variable(format!("mu_{x}_{a}"), Some(Rational::zero()), None);
            mu[x][a] = Some(v);
            objective.push((v, unary_cost(&p.index, language, x, a)));
        }
    }
    for (g, ((set, _), costs)) in p.index.groups.iter().zip(&p.costs).enumerate() {
        let lam: Vec<usize> = costs
            .iter()
            .enumerate()
            .map(|(e, (_, c))| {
                let v = lp.add_variable(format!("lam_{g}_{e}"), Some(Rational::zero()), None);
                objective.push((v, c.clone()));
                v
            })
            .collect();
        for (i, &x) in set.iter().enumerate() {
            for &a in &p.ac.domains[x] {
                let row = costs
                    .iter()
                    .zip(&lam)
                    .filter(|((sigma, _), _)| sigma[i] == a)
                    .map(|(_, &v)| (v, Rational::one()))
                    .chain(std::iter::once((mu[x][a].expect("surviving"), -Rational::one())));
                lp.add_constraint(row, Relation::Eq, Rational::zero());
            }
        }
    }
    for row in &mu {
        lp.add_constraint(row.iter().flatten().map(|&v| (v, Rational::one())), Relation::Eq, Rational::one());
    }
    lp.set_objective(objective);
    Ok(lp)
}

/// Optimum of the dual after arc consistency; infinite on an empty domain
/// or an infeasible dual.
pub fn osac_value(instance: &ValuedStructure, language: &ValuedStructure) -> Result<ExtendedRational> {
    let lp = build_osac_dual(instance, language)?;
    let sol = solve_checked(&lp)?;
    match sol.status {
        LpStatus::Optimal => Ok(ExtendedRational::Finite(sol.objective_value.expect("optimal value"))),
        LpStatus::Infeasible => Ok(ExtendedRational::Infinity),
        LpStatus::Unbounded => Err(Error::Internal("OSAC dual reported unbounded".into())),
    }
}

/// Optimum of the primal; infinite when it is unbounded.
pub fn osac_primal_value(instance: &ValuedStructure, language: &ValuedStructure) -> Result<ExtendedRational> {
    let lp = build_osac_primal(instance, language)?;
    let sol = solve_checked(&lp)?;
    match sol.status {
        LpStatus::Optimal => Ok(ExtendedRational::Finite(sol.objective_value.expect("optimal value"))),
        LpStatus::Unbounded => Ok(ExtendedRational::Infinity),
        LpStatus::Infeasible => Err(Error::Internal("OSAC primal reported infeasible".into())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::blp::blp_value;
    use crate::oracle::{brute_force_opt, DEFAULT_BUDGET};
    use crate::structure::{Signature, Symbol};

    fn er(n: i64) -> ExtendedRational {
        ExtendedRational::from_integer(n)
    }

    fn soft_neq() -> ValuedStructure {
        let sig = Signature::new(vec![Symbol::new("f", 2)]).unwrap();
        ValuedStructure::new(sig, 2, vec![vec![er(1), er(0), er(0), er(1)]]).unwrap()
    }

    fn triangle() -> ValuedStructure {
        let sig = Signature::new(vec![Symbol::new("f", 2)]).unwrap();
        ValuedStructure::from_fn(sig, 3, |_, t| er(i64::from(t[0] < t[1])))
    }

    #[test]
    fn zero_instance() {
        let inst = ValuedStructure::zero(soft_neq().signature().clone(), 3);
        assert_eq!(osac_value(&inst, &soft_neq()).unwrap(), er(0));
        assert_eq!(osac_primal_value(&inst, &soft_neq()).unwrap(), er(0));
    }

    #[test]
    fn triangle_matches_blp() {
        assert_eq!(osac_value(&triangle(), &soft_neq()).unwrap(), er(0));
        assert_eq!(osac_primal_value(&triangle(), &soft_neq()).unwrap(), er(0));
        assert_eq!(blp_value(&triangle(), &soft_neq()).unwrap(), er(0));
    }

    #[test]
    fn shared_scope_is_tighter() {
        // f1 = [a != b], f2 = [a = b] on one pair: every σ costs 1
        let sig = Signature::new(vec![Symbol::new("f1", 2), Symbol::new("f2", 2)]).unwrap();
        let lang =
            ValuedStructure::new(sig.clone(), 2, vec![vec![er(0), er(1), er(1), er(0)], vec![er(1), er(0), er(0), er(1)]])
                .unwrap();
        let mut inst = ValuedStructure::zero(sig, 2);
        inst.set_cost(0, &[0, 1], er(1));
        inst.set_cost(1, &[0, 1], er(1));
        assert_eq!(blp_value(&inst, &lang).unwrap(), er(0));
        assert_eq!(osac_value(&inst, &lang).unwrap(), er(1));
        assert_eq!(osac_primal_value(&inst, &lang).unwrap(), er(1));
        assert_eq!(brute_force_opt(&inst, &lang, DEFAULT_BUDGET).unwrap().opt_value, er(1));
    }

    #[test]
    fn unary_terms_and_empty_domains() {
        let sig = Signature::new(vec![Symbol::new("f", 2), Symbol::new("u", 1)]).unwrap();
        let lang = ValuedStructure::new(
            sig.clone(),
            2,
            vec![vec![er(0), er(2), er(1), er(0)], vec![er(3), ExtendedRational::Infinity]],
        )
        .unwrap();
        let mut inst = ValuedStructure::zero(sig.clone(), 2);
        inst.set_cost(0, &[0, 1], er(1));
        inst.set_cost(1, &[1], er(1));
        let opt = brute_force_opt(&inst, &lang, DEFAULT_BUDGET).unwrap().opt_value;
        assert_eq!(opt, er(3));
        assert_eq!(osac_value(&inst, &lang).unwrap(), opt);
        assert_eq!(osac_primal_value(&inst, &lang).unwrap(), opt);

        let sig = inst.signature().clone();
        let mut empty = ValuedStructure::zero(sig, 1);
        empty.set_cost(1, &[0], er(1));
        let never = ValuedStructure::new(
            empty.signature().clone(),
            2,
            vec![vec![er(0); 4], vec![ExtendedRational::Infinity, ExtendedRational::Infinity]],
        )
        .unwrap();
        assert_eq!(osac_value(&empty, &never).unwrap(), ExtendedRational::Infinity);
        assert_eq!(osac_primal_value(&empty, &never).unwrap(), ExtendedRational::Infinity);
    }

    #[test]
    fn repeated_variable_scope_groups_by_set() {
        let sig = Signature::new(vec![Symbol::new("f", 2)]).unwrap();
        let lang = ValuedStructure::new(sig.clone(), 2, vec![vec![er(2), er(0), er(0), er(1)]]).unwrap();
        let mut inst = ValuedStructure::zero(sig, 2);
        inst.set_cost(0, &[0, 0], er(1));
        inst.set_cost(0, &[0, 1], er(1));
        inst.set_cost(0, &[1, 0], er(1));
        let index = ScopeIndex::new(&inst).unwrap();
        assert_eq!(index.groups.len(), 2);
        assert_eq!(index.groups[0].0, vec![0]);
        assert_eq!(index.groups[1].1.len(), 2);
        let opt = brute_force_opt(&inst, &lang, DEFAULT_BUDGET).unwrap().opt_value;
        let osac = osac_value(&inst, &lang).unwrap();
        assert!(blp_value(&inst, &lang).unwrap() <= osac && osac <= opt);
        assert_eq!(osac, osac_primal_value(&inst, &lang).unwrap());
    }
}
