//! Exhaustive ground truth: brute-force optimum and operation enumeration.

use crate::algebra::{MultisetDomain, Operation};
use crate::error::{Error, Result};
use crate::structure::{Assignment, ValuedStructure};
use crate::tuple::{checked_pow, tuple_index, Odometer};
use crate::value::ExtendedRational;

/// Default cap on enumerated candidates.
pub const DEFAULT_BUDGET: u128 = 1_000_000;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OracleResult {
    pub opt_value: ExtendedRational,
    /// Lexicographically least optimal assignment; `None` iff the optimum
    /// is infinite.
    pub argmin: Option<Assignment>,
    pub assignments_enumerated: u128,
}

fn space(d: usize, n: usize) -> u128 {
    checked_pow(d, n).map_or(u128::MAX, |c| c as u128)
}

/// Minimum measure over all `|D|^|X|` assignments, enumerated in
/// lexicographic order; stops early at the first assignment of measure 0.
pub fn brute_force_opt(
    instance: &ValuedStructure,
    language: &ValuedStructure,
    budget: u128,
) -> Result<OracleResult> {
    instance.check_same_signature(language)?;
    let (n, d) = (instance.domain_size(), language.domain_size());
    let required = space(d, n);
    if required > budget {
        return Err(Error::BudgetExceeded {
            what: format!("brute force over {d}^{n} assignments"),
            required,
            budget,
        });
    }
    // Each term with its weighted cost table over the language domain.
    let terms: Vec<(Vec<usize>, Vec<ExtendedRational>)> = instance
        .terms()
        .into_iter()
        .map(|t| {
            let table = language.table(t.symbol).iter().map(|c| &t.weight * c).collect();
            (t.scope, table)
        })
        .collect();
    let mut best = ExtendedRational::Infinity;
    let mut argmin = None;
    let mut enumerated: u128 = 0;
    let mut odo = Odometer::new(d, n);
    let mut image = Vec::new();
    while let Some(h) = odo.next_tuple() {
        enumerated += 1;
        let mut total = ExtendedRational::zero();
        for (scope, table) in &terms {
            image.clear();
            image.extend(scope.iter().map(|&x| h[x]));
            total += &table[tuple_index(&image, d)];
            if total >= best {
                break;
            }
        }
        if total < best {
            best = total;
            argmin = Some(h.to_vec());
            if best.is_zero() {
                break;
            }
        }
    }
    Ok(OracleResult {
        opt_value: best,
        argmin: argmin.map(|v| Assignment::new(v, d).expect("odometer stays in range")),
        assignments_enumerated: enumerated,
    })
}

/// All `arity`-ary operations on `domain_size` elements, tables in
/// lexicographic order.
pub fn enumerate_operations(
    domain_size: usize,
    arity: usize,
    budget: u128,
) -> Result<impl Iterator<Item = Operation>> {
    let cells = checked_pow(domain_size, arity)
        .ok_or_else(|| Error::input("operation table size overflows"))?;
    let required = space(domain_size, cells);
    if required > budget {
        return Err(Error::BudgetExceeded {
            what: format!("{arity}-ary operations on {domain_size} elements"),
            required,
            budget,
        });
    }
    let mut odo = Odometer::new(domain_size, cells);
    Ok(std::iter::from_fn(move || {
        odo.next_tuple()
            .map(|t| Operation::new(domain_size, arity, t.to_vec()).expect("valid table"))
    }))
}

/// The symmetric members of [`enumerate_operations`], in the same order.
pub fn enumerate_symmetric_operations(
    domain_size: usize,
    arity: usize,
    budget: u128,
) -> Result<impl Iterator<Item = Operation>> {
    let count = MultisetDomain::count(domain_size, arity);
    let required = if count > 128 {
        u128::MAX
    } else {
        space(domain_size, count as usize)
    };
    if required > budget {
        return Err(Error::BudgetExceeded {
            what: format!("symmetric {arity}-ary operations on {domain_size} elements"),
            required,
            budget,
        });
    }
    let ms = MultisetDomain::new(domain_size, arity);
    let orbit = ms.orbit_table();
    // Lexicographic order of full tables equals lexicographic order of the
    // orbit values listed by first occurrence in row-major order.
    let mut first_seen: Vec<usize> = Vec::with_capacity(ms.len());
    for &o in &orbit {
        if !first_seen.contains(&o) {
            first_seen.push(o);
        }
    }
    let mut odo = Odometer::new(domain_size, ms.len());
    let mut values = vec![0; ms.len()];
    Ok(std::iter::from_fn(move || {
        let digits = odo.next_tuple()?;
        for (&o, &v) in first_seen.iter().zip(digits) {
            values[o] = v;
        }
        let table = orbit.iter().map(|&o| values[o]).collect();
        Some(Operation::new(domain_size, arity, table).expect("valid table"))
    }))
}
