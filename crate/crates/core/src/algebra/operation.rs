use std::collections::{BTreeMap, HashSet};
use std::fmt;

use crate::error::{Error, Result};
use crate::rational::Rational;
use crate::tuple::{checked_pow, tuple_index, tuples, Odometer};

/// An `m`-ary operation on `{0, .., d-1}` stored as a row-major table.
///
/// The derived order compares tables lexicographically, which is the order
/// of [`crate::oracle::enumerate_operations`].
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Operation {
    domain_size: usize,
    arity: usize,
    table: Vec<usize>,
}

impl Operation {
    pub fn new(domain_size: usize, arity: usize, table: Vec<usize>) -> Result<Self> {
        let len = checked_pow(domain_size, arity)
            .ok_or_else(|| Error::input("operation table size overflows"))?;
        if table.len() != len {
            return Err(Error::input(format!(
                "operation of arity {arity} on {domain_size} elements needs {len} entries, got {}",
                table.len()
            )));
        }
        if let Some(v) = table.iter().find(|&&v| v >= domain_size) {
            return Err(Error::input(format!(
                "operation value {v} outside a domain of size {domain_size}"
            )));
        }
        Ok(Operation { domain_size, arity, table })
    }

    pub fn from_fn(domain_size: usize, arity: usize, mut f: impl FnMut(&[usize]) -> usize) -> Self {
        let table = tuples(domain_size, arity).map(|t| f(&t)).collect();
        Operation::new(domain_size, arity, table).expect("from_fn produced an out-of-range value")
    }

    pub fn projection(domain_size: usize, arity: usize, i: usize) -> Self {
        assert!(i < arity);
        Self::from_fn(domain_size, arity, |t| t[i])
    }

    pub fn domain_size(&self) -> usize {
        self.domain_size
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn table(&self) -> &[usize] {
        &self.table
    }

    pub fn apply(&self, args: &[usize]) -> usize {
        debug_assert_eq!(args.len(), self.arity);
        self.table[tuple_index(args, self.domain_size)]
    }

    pub fn is_commutative(&self) -> bool {
        self.arity == 2
            && (0..self.domain_size)
                .all(|x| (0..self.domain_size).all(|y| self.apply(&[x, y]) == self.apply(&[y, x])))
    }

    pub fn is_idempotent(&self) -> bool {
        (0..self.domain_size).all(|x| self.apply(&vec![x; self.arity]) == x)
    }

    pub fn is_associative(&self) -> bool {
        let d = self.domain_size;
        self.arity == 2
            && tuples(d, 3).all(|t| {
                let l = self.apply(&[self.apply(&[t[0], t[1]]), t[2]]);
                let r = self.apply(&[t[0], self.apply(&[t[1], t[2]])]);
                l == r
            })
    }

    /// Associative, commutative and idempotent.
    pub fn is_semilattice(&self) -> bool {
        self.is_commutative() && self.is_associative() && self.is_idempotent()
    }

    /// `g(x, y) ∈ {x, y}` for all `x, y`.
    pub fn is_conservative(&self) -> bool {
        tuples(self.domain_size, self.arity).all(|t| t.contains(&self.apply(&t)))
    }
}

impl fmt::Debug for Operation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Operation(d={}, m={}, {:?})", self.domain_size, self.arity, self.table)
    }
}

/// Applies `g` coordinate-wise to `m` tuples of equal length.
pub fn apply_componentwise<T: AsRef<[usize]>>(g: &Operation, args: &[T]) -> Result<Vec<usize>> {
    if args.len() != g.arity {
        return Err(Error::input(format!(
            "operation of arity {} applied to {} tuples",
            g.arity,
            args.len()
        )));
    }
    let k = args.first().map_or(0, |a| a.as_ref().len());
    if args.iter().any(|a| a.as_ref().len() != k) {
        return Err(Error::input("argument tuples differ in length"));
    }
    if args.iter().flat_map(|a| a.as_ref()).any(|&v| v >= g.domain_size) {
        return Err(Error::input("argument value outside the operation's domain"));
    }
    let mut column = vec![0; g.arity];
    Ok((0..k)
        .map(|i| {
            for (c, a) in column.iter_mut().zip(args) {
                *c = a.as_ref()[i];
            }
            g.apply(&column)
        })
        .collect())
}

/// Whether `g` is invariant under every permutation of its arguments.
pub fn is_symmetric(g: &Operation) -> bool {
    let mut sorted = vec![0; g.arity];
    tuples(g.domain_size, g.arity).all(|t| {
        sorted.copy_from_slice(&t);
        sorted.sort_unstable();
        g.apply(&t) == g.apply(&sorted)
    })
}

/// `h[g_1, .., g_n](x) = h(g_1(x), .., g_n(x))`.
pub fn superpose(h: &Operation, gs: &[Operation]) -> Result<Operation> {
    if gs.len() != h.arity {
        return Err(Error::input(format!(
            "superposition into an operation of arity {} needs {} inner operations, got {}",
            h.arity,
            h.arity,
            gs.len()
        )));
    }
    let Some(first) = gs.first() else {
        return Err(Error::input("superposition of a nullary operation"));
    };
    let (d, m) = (first.domain_size, first.arity);
    if h.domain_size != d || gs.iter().any(|g| g.domain_size != d || g.arity != m) {
        return Err(Error::input("superposition with mismatched domains or arities"));
    }
    let mut inner = vec![0; gs.len()];
    let table = (0..first.table.len())
        .map(|idx| {
            for (v, g) in inner.iter_mut().zip(gs) {
                *v = g.table[idx];
            }
            h.apply(&inner)
        })
        .collect();
    Ok(Operation { domain_size: d, arity: m, table })
}

/// A finitely supported nonnegative weighting of operations of one arity.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct FractionalOperation {
    domain_size: usize,
    arity: usize,
    entries: Vec<(Operation, Rational)>,
}

impl FractionalOperation {
    /// Merges repeated operations; drops nothing but rejects nonpositive
    /// weights and mixed shapes.
    pub fn new(entries: Vec<(Operation, Rational)>) -> Result<Self> {
        let Some((first, _)) = entries.first() else {
            return Err(Error::input("fractional operation with empty support"));
        };
        let (d, m) = (first.domain_size, first.arity);
        let mut merged: BTreeMap<Operation, Rational> = BTreeMap::new();
        for (g, w) in entries {
            if g.domain_size != d || g.arity != m {
                return Err(Error::input("fractional operation mixes arities or domains"));
            }
            if !w.is_positive() {
                return Err(Error::input(format!("nonpositive weight {w} in fractional operation")));
            }
            *merged.entry(g).or_insert_with(Rational::zero) += w;
        }
        Ok(FractionalOperation {
            domain_size: d,
            arity: m,
            entries: merged.into_iter().collect(),
        })
    }

    /// Equal weights summing to one.
    pub fn uniform(ops: Vec<Operation>) -> Result<Self> {
        let w = Rational::new(1, ops.len().max(1) as i64);
        Self::new(ops.into_iter().map(|g| (g, w.clone())).collect())
    }

    pub fn domain_size(&self) -> usize {
        self.domain_size
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    /// Support with weights, sorted by operation table.
    pub fn entries(&self) -> &[(Operation, Rational)] {
        &self.entries
    }

    pub fn support(&self) -> impl Iterator<Item = &Operation> {
        self.entries.iter().map(|(g, _)| g)
    }

    pub fn weight(&self, g: &Operation) -> Rational {
        self.entries
            .iter()
            .find(|(h, _)| h == g)
            .map_or_else(Rational::zero, |(_, w)| w.clone())
    }

    pub fn norm(&self) -> Rational {
        self.entries.iter().map(|(_, w)| w).sum()
    }
}

/// `ω[g_1, .., g_n]`: pushes each `h` in the support of `ω` to
/// `h[g_1, .., g_n]`, merging weights of collisions.
pub fn superpose_fractional(omega: &FractionalOperation, gs: &[Operation]) -> Result<FractionalOperation> {
    let entries = omega
        .entries
        .iter()
        .map(|(h, w)| Ok((superpose(h, gs)?, w.clone())))
        .collect::<Result<Vec<_>>>()?;
    FractionalOperation::new(entries)
}

/// Result of a bounded clone search.
#[derive(Debug, Clone)]
pub struct CloneSearch {
    /// Every operation found, in order of discovery (projections first).
    pub operations: Vec<Operation>,
    /// The first symmetric operation in discovery order.
    pub symmetric: Option<Operation>,
    /// Number of operations first found at each depth `0..=depth`.
    pub per_depth: Vec<usize>,
}

/// Arity-`arity` members of the clone generated by `generators`, built from
/// terms of nesting depth at most `depth` (projections have depth 0,
/// `h[g_1, ..]` has depth one more than its deepest `g_i`).
///
/// `budget` caps the number of superpositions evaluated per level.
pub fn generate_clone_bounded(
    generators: &[Operation],
    domain_size: usize,
    arity: usize,
    depth: usize,
    budget: u128,
) -> Result<CloneSearch> {
    if arity == 0 {
        return Err(Error::input("target arity must be positive"));
    }
    if generators.iter().any(|g| g.domain_size != domain_size || g.arity == 0) {
        return Err(Error::input("generator on a different domain"));
    }
    let mut seen: HashSet<Operation> = HashSet::new();
    let mut operations = Vec::new();
    for i in 0..arity {
        let p = Operation::projection(domain_size, arity, i);
        if seen.insert(p.clone()) {
            operations.push(p);
        }
    }
    let mut per_depth = vec![operations.len()];
    for _ in 0..depth {
        let level = operations.clone();
        let mut required: u128 = 0;
        for h in generators {
            let combos = (level.len() as u128).checked_pow(h.arity as u32).unwrap_or(u128::MAX);
            required = required.saturating_add(combos);
        }
        if required > budget {
            return Err(Error::BudgetExceeded {
                what: "clone generation".into(),
                required,
                budget,
            });
        }
        let before = operations.len();
        for h in generators {
            let mut odo = Odometer::new(level.len(), h.arity);
            let mut gs: Vec<Operation> = Vec::with_capacity(h.arity);
            while let Some(pick) = odo.next_tuple() {
                gs.clear();
                gs.extend(pick.iter().map(|&i| level[i].clone()));
                let s = superpose(h, &gs)?;
                if seen.insert(s.clone()) {
                    operations.push(s);
                }
            }
        }
        per_depth.push(operations.len() - before);
        if operations.len() == before {
            break;
        }
    }
    let symmetric = operations.iter().find(|g| is_symmetric(g)).cloned();
    Ok(CloneSearch { operations, symmetric, per_depth })
}

pub fn min_op(domain_size: usize) -> Operation {
    Operation::from_fn(domain_size, 2, |t| t[0].min(t[1]))
}

pub fn max_op(domain_size: usize) -> Operation {
    Operation::from_fn(domain_size, 2, |t| t[0].max(t[1]))
}
