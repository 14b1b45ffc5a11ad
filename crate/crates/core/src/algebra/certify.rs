use super::decide::{find_tsfp, Certificate, Refutation};
use super::multiset::{build_multiset_structure, MultisetDomain};
use super::operation::FractionalOperation;
use crate::blp::{arc_consistency, blp_value, build_blp, BlpModel};
use crate::error::{Error, Result};
use crate::lp::is_feasible_point;
use crate::oracle::brute_force_opt;
use crate::rational::Rational;
use crate::structure::ValuedStructure;
use crate::tuple::tuple_index;
use crate::value::ExtendedRational;

/// Exact numbers behind a gap instance.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GapReport {
    /// The instance; variable `v` stands for multiset `origin[v]`.
    pub instance: ValuedStructure,
    pub origin: Vec<usize>,
    /// Copies per multiset that occurs twice in one scope (1: no expansion).
    pub copies: usize,
    /// `Σ f^I(x̄) · f^{P^m(A)}(origin(x̄))`.
    pub farkas_bound: Rational,
    /// Objective of the explicit relaxation point built from multiplicities
    /// and minimizing orderings. Equals `farkas_bound` unless some scope
    /// repeats a variable, where one ordering must serve every occurrence.
    /// `None` if that point is not feasible for the relaxation.
    pub explicit_bound: Option<Rational>,
    pub blp_value: ExtendedRational,
    pub opt: ExtendedRational,
}

impl GapReport {
    pub fn is_strict_gap(&self) -> bool {
        self.blp_value < self.opt
    }
}

/// All combinations of one ordering per distinct scope variable, calling
/// `visit` on each; the first variable keeps its sorted encoding.
fn for_each_ordering_choice(ms: &MultisetDomain, vars: &[usize], mut visit: impl FnMut(&[&[usize]])) {
    let orderings: Vec<Vec<Vec<usize>>> = vars
        .iter()
        .enumerate()
        .map(|(i, &v)| if i == 0 { vec![ms.element(v).to_vec()] } else { ms.orderings(v) })
        .collect();
    let mut digits = vec![0; vars.len()];
    loop {
        let chosen: Vec<&[usize]> = orderings.iter().zip(&digits).map(|(o, &c)| o[c].as_slice()).collect();
        visit(&chosen);
        let mut i = vars.len();
        loop {
            if i == 0 {
                return;
            }
            i -= 1;
            digits[i] += 1;
            if digits[i] < orderings[i].len() {
                break;
            }
            digits[i] = 0;
        }
    }
}

/// The relaxation point `μ_x(a) = mult/m` (of the multiset behind `x`) with
/// `λ` from a cheapest ordering per distinct scope variable, as values for
/// `model.lp`.
fn explicit_point(
    model: &BlpModel,
    language: &ValuedStructure,
    ms: &MultisetDomain,
    origin: &[usize],
) -> Option<Vec<Rational>> {
    let d = language.domain_size();
    let m = ms.m();
    let inv_m = Rational::new(1, m as i64);
    let mut values = vec![Rational::zero(); model.lp.num_variables()];
    for (x, &alpha) in origin.iter().enumerate() {
        for a in 0..d {
            let mult = ms.multiplicity(alpha, a);
            if mult > 0 {
                values[model.mu(x, a)?] = Rational::new(mult as i64, m as i64);
            }
        }
    }
    for block in &model.blocks {
        let table = language.table(block.term.symbol);
        let pos: Vec<usize> = block
            .term
            .scope
            .iter()
            .map(|x| block.variables.iter().position(|v| v == x).expect("scope variable"))
            .collect();
        let alphas: Vec<usize> = block.variables.iter().map(|&x| origin[x]).collect();
        let mut best: Option<(ExtendedRational, Vec<Vec<usize>>)> = None;
        let mut image = vec![0; pos.len()];
        for_each_ordering_choice(ms, &alphas, |chosen| {
            let mut sum = ExtendedRational::zero();
            for i in 0..m {
                for (slot, &p) in image.iter_mut().zip(&pos) {
                    *slot = chosen[p][i];
                }
                sum += &table[tuple_index(&image, d)];
            }
            if best.as_ref().is_none_or(|(b, _)| sum < *b) {
                best = Some((sum, chosen.iter().map(|c| c.to_vec()).collect()));
            }
        });
        let (cost, chosen) = best?;
        if !cost.is_finite() {
            return None;
        }
        for i in 0..m {
            let sigma: Vec<usize> = chosen.iter().map(|t| t[i]).collect();
            let (_, v) = block.entries.iter().find(|(s, _)| *s == sigma)?;
            values[*v] += &inv_m;
        }
    }
    Some(values)
}

/// Variables occurring more than once in some positive-weight scope, with
/// the largest such multiplicity.
fn repeated_variables(instance: &ValuedStructure) -> (Vec<bool>, usize) {
    let mut repeated = vec![false; instance.domain_size()];
    let mut most = 1;
    for term in instance.terms() {
        for &x in &term.scope {
            let c = term.scope.iter().filter(|&&y| y == x).count();
            if c > 1 {
                repeated[x] = true;
                most = most.max(c);
            }
        }
    }
    (repeated, most)
}

/// Replaces each repeated variable by `copies` copies and each term by the
/// average of its images in which every position reads a copy and the
/// occurrences of one variable read distinct copies.
fn expand(instance: &ValuedStructure, repeated: &[bool], copies: usize) -> (ValuedStructure, Vec<usize>) {
    let mut first = Vec::with_capacity(repeated.len());
    let mut origin = Vec::new();
    for (x, &r) in repeated.iter().enumerate() {
        first.push(origin.len());
        let n = if r { copies } else { 1 };
        origin.extend(std::iter::repeat_n(x, n));
    }
    let mut out = ValuedStructure::zero(instance.signature().clone(), origin.len());
    for term in instance.terms() {
        let radices: Vec<usize> = term.scope.iter().map(|&x| if repeated[x] { copies } else { 1 }).collect();
        let mut images = Vec::new();
        let mut digits = vec![0; radices.len()];
        'choices: loop {
            let distinct = (0..digits.len()).all(|i| {
                (0..i).all(|j| term.scope[i] != term.scope[j] || digits[i] != digits[j])
            });
            if distinct {
                images.push(term.scope.iter().zip(&digits).map(|(&x, &c)| first[x] + c).collect::<Vec<_>>());
            }
            let mut i = digits.len();
            loop {
                if i == 0 {
                    break 'choices;
                }
                i -= 1;
                digits[i] += 1;
                if digits[i] < radices[i] {
                    break;
                }
                digits[i] = 0;
            }
        }
        let share = term.weight.mul_rational(&Rational::new(1, images.len() as i64));
        for scope in images {
            let total = out.cost(term.symbol, &scope).clone() + share.clone();
            out.set_cost(term.symbol, &scope, total);
        }
    }
    (out, origin)
}

fn gap_report(
    language: &ValuedStructure,
    pm: &ValuedStructure,
    ms: &MultisetDomain,
    instance: ValuedStructure,
    origin: Vec<usize>,
    copies: usize,
    budget: u128,
) -> Result<GapReport> {
    let mut farkas_bound = Rational::zero();
    for term in instance.terms() {
        let w = term.weight.finite().ok_or_else(|| Error::input("gap instance weight is infinite"))?;
        let alphas: Vec<usize> = term.scope.iter().map(|&x| origin[x]).collect();
        match pm.cost(term.symbol, &alphas).finite() {
            Some(c) => farkas_bound += w * c,
            None => return Err(Error::Internal("refutation weights a row of infinite cost".into())),
        }
    }
    let ac = arc_consistency(&instance, language)?;
    let explicit_bound = match build_blp(&instance, language, &ac)? {
        None => None,
        Some(model) => match explicit_point(&model, language, ms, &origin) {
            Some(point) => {
                if !is_feasible_point(&model.lp, &point) {
                    return Err(Error::Internal("explicit relaxation point is infeasible".into()));
                }
                Some(model.lp.objective_at(&point))
            }
            None => None,
        },
    };
    let blp = blp_value(&instance, language)?;
    if let Some(e) = &explicit_bound {
        if blp > ExtendedRational::Finite(e.clone()) {
            return Err(Error::Internal("relaxation value exceeds the explicit point".into()));
        }
    }
    let opt = brute_force_opt(&instance, language, budget)?.opt_value;
    Ok(GapReport { instance, origin, copies, farkas_bound, explicit_bound, blp_value: blp, opt })
}

/// Builds the instance carried by `refutation` (indexed by the multisets
/// of size `m`) and checks exactly that its relaxation value lies below its
/// true optimum.
///
/// When a scope repeats a variable the relaxation assigns that variable a
/// single value inside the scope, so the plain instance may show no gap.
/// Repeated variables are then split into 2, 3, .. copies (see
/// [`GapReport::copies`]) until a strict gap appears or the oracle budget
/// runs out.
pub fn farkas_gap_instance(
    language: &ValuedStructure,
    m: usize,
    refutation: &Refutation,
    budget: u128,
) -> Result<GapReport> {
    let (pm, ms) = build_multiset_structure(language, m)?;
    let instance = refutation.gap_instance.clone();
    instance.check_same_signature(language)?;
    if instance.domain_size() != ms.len() {
        return Err(Error::input(format!(
            "gap instance has {} variables, expected {} multisets",
            instance.domain_size(),
            ms.len()
        )));
    }
    let (repeated, most) = repeated_variables(&instance);
    let origin: Vec<usize> = (0..ms.len()).collect();
    let plain = gap_report(language, &pm, &ms, instance.clone(), origin, 1, budget)?;
    if plain.is_strict_gap() {
        return Ok(plain);
    }
    let mut last = plain;
    if most > 1 {
        let d = language.domain_size() as u128;
        for copies in most..=most + 3 {
            let (expanded, origin) = expand(&instance, &repeated, copies);
            let space = u32::try_from(expanded.domain_size()).ok().and_then(|n| d.checked_pow(n));
            if space.is_none_or(|s| s > budget) {
                break;
            }
            last = gap_report(language, &pm, &ms, expanded, origin, copies, budget)?;
            if last.is_strict_gap() {
                return Ok(last);
            }
        }
    }
    Err(Error::Internal(format!(
        "certificate invalid: relaxation {} is not below optimum {}",
        last.blp_value, last.opt
    )))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ArityOutcome {
    Witness(FractionalOperation),
    Refuted { refutation: Refutation, gap: GapReport },
    BudgetExceeded { required: u128, budget: u128 },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ArityResult {
    pub m: usize,
    pub outcome: ArityOutcome,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    /// The relaxation provably fails on some instance; `m` is the arity
    /// whose refutation produced the gap instance.
    Refuted { m: usize },
    /// Symmetric fractional polymorphisms exist for every `2..=m_max`.
    /// Arities beyond `m_max` are unchecked.
    CertifiedUpTo { m_max: usize },
    /// Arities `2..first_unchecked` have witnesses; the budget ran out at
    /// `first_unchecked`.
    Partial { first_unchecked: usize },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CertifyReport {
    pub results: Vec<ArityResult>,
    pub verdict: Verdict,
}

/// Runs [`find_tsfp`] for `m = 2..=m_max`, stopping at the first
/// refutation or the first arity beyond the budget.
pub fn certify_blp_solvability(language: &ValuedStructure, m_max: usize, budget: u128) -> Result<CertifyReport> {
    if m_max < 2 {
        return Err(Error::input(format!("m_max must be at least 2, got {m_max}")));
    }
    let mut results = Vec::new();
    for m in 2..=m_max {
        match find_tsfp(language, m, budget) {
            Ok(Certificate::Witness(omega)) => results.push(ArityResult { m, outcome: ArityOutcome::Witness(omega) }),
            Ok(Certificate::Refutation(refutation)) => {
                let gap = farkas_gap_instance(language, m, &refutation, budget)?;
                results.push(ArityResult { m, outcome: ArityOutcome::Refuted { refutation, gap } });
                return Ok(CertifyReport { results, verdict: Verdict::Refuted { m } });
            }
            Err(Error::BudgetExceeded { required, budget, .. }) => {
                results.push(ArityResult { m, outcome: ArityOutcome::BudgetExceeded { required, budget } });
                return Ok(CertifyReport { results, verdict: Verdict::Partial { first_unchecked: m } });
            }
            Err(e) => return Err(e),
        }
    }
    Ok(CertifyReport { results, verdict: Verdict::CertifiedUpTo { m_max } })
}
