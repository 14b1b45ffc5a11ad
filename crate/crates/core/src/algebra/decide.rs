use std::collections::BTreeMap;

use super::check::{check_fractional_homomorphism, check_fractional_polymorphism, Check, FractionalMap};
use super::colgen::{farkas_margin, solve_map_system, MapOutcome, MapRow, MapSystem};
use super::multiset::{build_multiset_structure, MultisetDomain};
use super::operation::{is_symmetric, FractionalOperation, Operation};
use crate::error::{Error, Result};
use crate::rational::Rational;
use crate::structure::ValuedStructure;
use crate::tuple::{tuple_at, tuple_index, tuples, Odometer};
use crate::value::ExtendedRational;

/// One component `y(f, ā)` of a Farkas vector.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct FarkasEntry {
    pub symbol: usize,
    /// Tuple over the source domain (multiset indices for `P^m(A)`).
    pub tuple: Vec<usize>,
    pub weight: Rational,
}

/// Proof that no (totally symmetric) fractional homomorphism exists.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Refutation {
    /// Nonzero components, sorted by symbol then tuple. Scaled so that the
    /// least slack `y·c_g - y·b` over admissible maps `g` is exactly one.
    pub farkas: Vec<FarkasEntry>,
    /// Instance on the source domain weighted by the Farkas vector (plus a
    /// small uniform weight on every finite row when the target has
    /// infinite costs, so that inadmissible maps cost infinity).
    pub gap_instance: ValuedStructure,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Certificate<W> {
    Witness(W),
    Refutation(Refutation),
}

impl<W> Certificate<W> {
    pub fn is_witness(&self) -> bool {
        matches!(self, Certificate::Witness(_))
    }

    pub fn witness(&self) -> Option<&W> {
        match self {
            Certificate::Witness(w) => Some(w),
            Certificate::Refutation(_) => None,
        }
    }

    pub fn refutation(&self) -> Option<&Refutation> {
        match self {
            Certificate::Witness(_) => None,
            Certificate::Refutation(r) => Some(r),
        }
    }
}

/// Rows `(f, ā)` of `source` with finite cost.
fn homomorphism_rows(source: &ValuedStructure) -> Vec<MapRow> {
    let d = source.domain_size();
    let mut rows = Vec::new();
    for s in 0..source.signature().len() {
        let k = source.signature().arity(s);
        let mut odo = Odometer::new(d, k);
        let mut idx = 0;
        while let Some(t) = odo.next_tuple() {
            if let Some(b) = source.table(s)[idx].finite() {
                rows.push(MapRow { symbol: s, points: t.to_vec(), rhs: b.clone() });
            }
            idx += 1;
        }
    }
    rows
}

fn refutation_from(
    sys: &MapSystem,
    source: &ValuedStructure,
    y: Vec<Rational>,
) -> Refutation {
    let farkas: Vec<FarkasEntry> = sys
        .rows
        .iter()
        .zip(&y)
        .filter(|(_, w)| !w.is_zero())
        .map(|(r, w)| FarkasEntry { symbol: r.symbol, tuple: r.points.clone(), weight: w.clone() })
        .collect();
    let mut gap_instance = ValuedStructure::zero(source.signature().clone(), source.domain_size());
    let eps = if sys.target.is_finite_valued() {
        Rational::zero()
    } else {
        let total: Rational = sys.rows.iter().map(|r| &r.rhs).sum();
        Rational::one() / (total * Rational::from(2) + Rational::from(2))
    };
    for (r, w) in sys.rows.iter().zip(&y) {
        let weight = w + &eps;
        if !weight.is_zero() {
            gap_instance.set_cost(r.symbol, &r.points, ExtendedRational::Finite(weight));
        }
    }
    Refutation { farkas, gap_instance }
}

fn sorted_farkas(mut farkas: Vec<FarkasEntry>) -> Vec<FarkasEntry> {
    farkas.sort();
    farkas
}

/// Decides whether a fractional homomorphism `a ->_f b` exists by LP
/// feasibility over all maps `D(a) -> D(b)`.
pub fn find_fractional_homomorphism(
    a: &ValuedStructure,
    b: &ValuedStructure,
    budget: u128,
) -> Result<Certificate<FractionalMap>> {
    a.check_same_signature(b)?;
    let sys = MapSystem { target: b, n_points: a.domain_size(), rows: homomorphism_rows(a) };
    match solve_map_system(&sys, budget, "maps between the structures")? {
        MapOutcome::Feasible(maps) => {
            let omega = FractionalMap { source_size: a.domain_size(), target_size: b.domain_size(), maps };
            match check_fractional_homomorphism(a, b, &omega)? {
                Check::Ok => Ok(Certificate::Witness(omega)),
                Check::Violated(v) => Err(Error::Internal(format!("homomorphism witness fails: {v}"))),
            }
        }
        MapOutcome::Infeasible(y) => {
            let mut r = refutation_from(&sys, a, y);
            r.farkas = sorted_farkas(r.farkas);
            Ok(Certificate::Refutation(r))
        }
    }
}

/// Re-checks a homomorphism refutation by enumerating every map.
pub fn verify_homomorphism_refutation(
    a: &ValuedStructure,
    b: &ValuedStructure,
    refutation: &Refutation,
    budget: u128,
) -> Result<bool> {
    a.check_same_signature(b)?;
    let sys = MapSystem { target: b, n_points: a.domain_size(), rows: homomorphism_rows(a) };
    verify_against(&sys, refutation, budget)
}

fn verify_against(sys: &MapSystem, refutation: &Refutation, budget: u128) -> Result<bool> {
    let mut y = vec![Rational::zero(); sys.rows.len()];
    for e in &refutation.farkas {
        if e.weight.is_negative() {
            return Ok(false);
        }
        let Some(r) = sys.rows.iter().position(|r| r.symbol == e.symbol && r.points == e.tuple) else {
            return Ok(false);
        };
        y[r] = e.weight.clone();
    }
    Ok(match farkas_margin(sys, &y, budget)? {
        None => true,
        Some(margin) => margin.is_positive(),
    })
}

/// Rows of the totally symmetric system built straight from the definition:
/// one inequality per symbol and multiset of `m` argument tuples, with
/// right-hand side the average cost of the arguments. Rows whose
/// coefficients agree for every symmetric operation (same symbol and same
/// coordinate multisets) are merged, keeping the tightest right-hand side.
fn tsfp_rows(language: &ValuedStructure, ms: &MultisetDomain, orbit: &[usize]) -> Vec<MapRow> {
    let d = language.domain_size();
    let m = ms.m();
    let inv_m = Rational::new(1, m as i64);
    let mut merged: BTreeMap<(usize, Vec<usize>), Rational> = BTreeMap::new();
    for s in 0..language.signature().len() {
        let k = language.signature().arity(s);
        let table = language.table(s);
        let arg_sets = MultisetDomain::new(d.pow(k as u32), m);
        let mut column = vec![0; m];
        for choice in arg_sets.elements() {
            let args: Vec<Vec<usize>> = choice.iter().map(|&i| tuple_at(i, d, k)).collect();
            let Some(total) = choice.iter().map(|&i| table[i].clone()).sum::<ExtendedRational>().into_finite() else {
                continue;
            };
            let rhs = total * &inv_m;
            let points: Vec<usize> = (0..k)
                .map(|i| {
                    for (c, a) in column.iter_mut().zip(&args) {
                        *c = a[i];
                    }
                    orbit[tuple_index(&column, d)]
                })
                .collect();
            merged
                .entry((s, points))
                .and_modify(|b| {
                    if rhs < *b {
                        *b = rhs.clone();
                    }
                })
                .or_insert(rhs);
        }
    }
    merged
        .into_iter()
        .map(|((symbol, points), rhs)| MapRow { symbol, points, rhs })
        .collect()
}

/// The symmetric operation `g(x) = map([x])`.
pub fn symmetric_operation_from_map(ms: &MultisetDomain, map: &[usize]) -> Operation {
    let orbit = ms.orbit_table();
    let table = orbit.iter().map(|&o| map[o]).collect();
    Operation::new(ms.domain_size(), ms.m(), table).expect("map values lie in the domain")
}

/// Converts a fractional homomorphism `P^m(A) ->_f A` into a totally
/// symmetric fractional polymorphism of `A`.
pub fn homomorphism_to_tsfp(ms: &MultisetDomain, omega: &FractionalMap) -> Result<FractionalOperation> {
    if omega.source_size != ms.len() || omega.target_size != ms.domain_size() {
        return Err(Error::input("fractional map is not defined on the multiset domain"));
    }
    FractionalOperation::new(
        omega
            .maps
            .iter()
            .map(|(map, w)| (symmetric_operation_from_map(ms, map), w.clone()))
            .collect(),
    )
}

/// Converts a totally symmetric fractional polymorphism into a fractional
/// homomorphism `P^m(A) ->_f A` by reading each operation on multisets.
pub fn tsfp_to_homomorphism(ms: &MultisetDomain, omega: &FractionalOperation) -> Result<FractionalMap> {
    if omega.arity() != ms.m() || omega.domain_size() != ms.domain_size() {
        return Err(Error::input("fractional operation does not match the multiset domain"));
    }
    if let Some(g) = omega.support().find(|g| !is_symmetric(g)) {
        return Err(Error::input(format!("operation {g:?} is not symmetric")));
    }
    let mut merged: BTreeMap<Vec<usize>, Rational> = BTreeMap::new();
    for (g, w) in omega.entries() {
        let map: Vec<usize> = ms.elements().iter().map(|alpha| g.apply(alpha)).collect();
        *merged.entry(map).or_insert_with(Rational::zero) += w;
    }
    Ok(FractionalMap {
        source_size: ms.len(),
        target_size: ms.domain_size(),
        maps: merged.into_iter().collect(),
    })
}

/// Decides whether `language` has an `m`-ary totally symmetric fractional
/// polymorphism, by LP feasibility over symmetric operations.
///
/// A refutation is indexed like `P^m(A)`: its tuples are tuples of multiset
/// indices of [`MultisetDomain::new`]`(d, m)`.
pub fn find_tsfp(language: &ValuedStructure, m: usize, budget: u128) -> Result<Certificate<FractionalOperation>> {
    if m <= 1 {
        return Err(Error::input(format!("arity must exceed 1, got {m}")));
    }
    let d = language.domain_size();
    let count = MultisetDomain::count(d, m);
    let required = if count >= 128 { u128::MAX } else { (d as u128).checked_pow(count as u32).unwrap_or(u128::MAX) };
    if required > budget {
        return Err(Error::BudgetExceeded {
            what: format!("symmetric {m}-ary operations on {d} elements"),
            required,
            budget,
        });
    }
    let ms = MultisetDomain::new(d, m);
    let orbit = ms.orbit_table();
    let sys = MapSystem { target: language, n_points: ms.len(), rows: tsfp_rows(language, &ms, &orbit) };
    match solve_map_system(&sys, budget, "symmetric operations")? {
        MapOutcome::Feasible(maps) => {
            let omega = FractionalOperation::new(
                maps.iter().map(|(map, w)| (symmetric_operation_from_map(&ms, map), w.clone())).collect(),
            )?;
            if let Some(g) = omega.support().find(|g| !is_symmetric(g)) {
                return Err(Error::Internal(format!("witness operation {g:?} is not symmetric")));
            }
            match check_fractional_polymorphism(language, &omega)? {
                Check::Ok => Ok(Certificate::Witness(omega)),
                Check::Violated(v) => Err(Error::Internal(format!("symmetric witness fails: {v}"))),
            }
        }
        MapOutcome::Infeasible(y) => {
            let pm_sig_instance = ValuedStructure::zero(language.signature().clone(), ms.len());
            let mut r = refutation_from(&sys, &pm_sig_instance, y);
            r.farkas = sorted_farkas(r.farkas);
            Ok(Certificate::Refutation(r))
        }
    }
}

/// Re-checks a symmetric-operation refutation against the rows built from
/// the fractional polymorphism definition.
pub fn verify_tsfp_refutation(
    language: &ValuedStructure,
    m: usize,
    refutation: &Refutation,
    budget: u128,
) -> Result<bool> {
    let ms = MultisetDomain::new(language.domain_size(), m);
    let orbit = ms.orbit_table();
    let sys = MapSystem { target: language, n_points: ms.len(), rows: tsfp_rows(language, &ms, &orbit) };
    verify_against(&sys, refutation, budget)
}

/// Convenience: `P^m(A)` paired with its multiset domain, then
/// [`find_fractional_homomorphism`] into `A`.
pub fn find_tsfp_via_homomorphism(
    language: &ValuedStructure,
    m: usize,
    budget: u128,
) -> Result<(Certificate<FractionalMap>, ValuedStructure, MultisetDomain)> {
    let (pm, ms) = build_multiset_structure(language, m)?;
    let cert = find_fractional_homomorphism(&pm, language, budget)?;
    Ok((cert, pm, ms))
}

/// All `k`-tuples of multiset indices, for callers that need to walk a
/// refutation's index space.
pub fn multiset_tuples(ms: &MultisetDomain, k: usize) -> impl Iterator<Item = Vec<usize>> {
    tuples(ms.len(), k)
}
