//! Tractable language families built from binary multimorphisms, and seeded
//! generators for cost tables and instances.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::algebra::{apply_componentwise, check_multimorphism, is_symmetric, Operation};
use crate::error::{Error, Result};
use crate::rational::Rational;
use crate::structure::{Signature, Symbol, ValuedStructure};
use crate::tuple::{checked_pow, tuple_index, tuples};
use crate::value::ExtendedRational;

/// A finite lattice given by its meet and join tables (row-major, binary).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LatticeSpec {
    pub domain_size: usize,
    pub meet: Vec<usize>,
    pub join: Vec<usize>,
}

impl LatticeSpec {
    /// Meet and join of a partial order given by `leq`; fails unless every
    /// pair has a greatest lower and a least upper bound.
    pub fn from_order(domain_size: usize, leq: impl Fn(usize, usize) -> bool) -> Result<Self> {
        let d = domain_size;
        for x in 0..d {
            if !leq(x, x) {
                return Err(Error::input(format!("order is not reflexive at {x}")));
            }
            for y in 0..d {
                if x != y && leq(x, y) && leq(y, x) {
                    return Err(Error::input(format!("order is not antisymmetric at ({x}, {y})")));
                }
                for z in 0..d {
                    if leq(x, y) && leq(y, z) && !leq(x, z) {
                        return Err(Error::input(format!("order is not transitive at ({x}, {y}, {z})")));
                    }
                }
            }
        }
        let bound = |x: usize, y: usize, lower: bool| -> Result<usize> {
            let below = |a: usize, b: usize| if lower { leq(a, b) } else { leq(b, a) };
            let common: Vec<usize> = (0..d).filter(|&z| below(z, x) && below(z, y)).collect();
            common
                .iter()
                .copied()
                .find(|&z| common.iter().all(|&w| below(w, z)))
                .ok_or_else(|| {
                    let what = if lower { "greatest lower" } else { "least upper" };
                    Error::input(format!("({x}, {y}) has no {what} bound"))
                })
        };
        let mut meet = Vec::with_capacity(d * d);
        let mut join = Vec::with_capacity(d * d);
        for x in 0..d {
            for y in 0..d {
                meet.push(bound(x, y, true)?);
                join.push(bound(x, y, false)?);
            }
        }
        let spec = LatticeSpec { domain_size, meet, join };
        spec.validate()?;
        Ok(spec)
    }

    /// The chain `0 < 1 < .. < n-1`.
    pub fn chain(n: usize) -> Self {
        Self::from_order(n, |x, y| x <= y).expect("a chain is a lattice")
    }

    /// `M_2`: bottom 0, incomparable 1 and 2, top 3.
    pub fn diamond() -> Self {
        Self::from_order(4, |x, y| x == y || x == 0 || y == 3).expect("the diamond is a lattice")
    }

    /// `N_5`: bottom 0, chain 1 < 2 beside 3, top 4.
    pub fn pentagon() -> Self {
        Self::from_order(5, |x, y| x == y || x == 0 || y == 4 || (x == 1 && y == 2))
            .expect("the pentagon is a lattice")
    }

    fn op(&self, table: &[usize]) -> Result<Operation> {
        Operation::new(self.domain_size, 2, table.to_vec())
    }

    /// Commutativity, associativity, idempotence and both absorption laws,
    /// checked exhaustively.
    pub fn validate(&self) -> Result<()> {
        let d = self.domain_size;
        let meet = self.op(&self.meet)?;
        let join = self.op(&self.join)?;
        for (name, g) in [("meet", &meet), ("join", &join)] {
            for x in 0..d {
                if g.apply(&[x, x]) != x {
                    return Err(Error::input(format!("{name} is not idempotent at {x}")));
                }
                for y in 0..d {
                    if g.apply(&[x, y]) != g.apply(&[y, x]) {
                        return Err(Error::input(format!("{name} is not commutative at ({x}, {y})")));
                    }
                    for z in 0..d {
                        if g.apply(&[g.apply(&[x, y]), z]) != g.apply(&[x, g.apply(&[y, z])]) {
                            return Err(Error::input(format!("{name} is not associative at ({x}, {y}, {z})")));
                        }
                    }
                }
            }
        }
        for x in 0..d {
            for y in 0..d {
                if meet.apply(&[x, join.apply(&[x, y])]) != x {
                    return Err(Error::input(format!("absorption x∧(x∨y)=x fails at ({x}, {y})")));
                }
                if join.apply(&[x, meet.apply(&[x, y])]) != x {
                    return Err(Error::input(format!("absorption x∨(x∧y)=x fails at ({x}, {y})")));
                }
            }
        }
        Ok(())
    }
}

/// Meet and join as operations, after checking the lattice laws.
pub fn lattice_ops(spec: &LatticeSpec) -> Result<(Operation, Operation)> {
    spec.validate()?;
    Ok((spec.op(&spec.meet)?, spec.op(&spec.join)?))
}

/// `⟨min_0, max_0⟩` on `{0, .., k}`.
pub fn min0_max0(k: usize) -> Result<(Operation, Operation)> {
    if k == 0 {
        return Err(Error::input("k must be at least 1"));
    }
    let d = k + 1;
    let min0 = Operation::from_fn(d, 2, |t| if t[0] == t[1] { t[0] } else { 0 });
    let max0 = Operation::from_fn(d, 2, |t| {
        let (x, y) = (t[0], t[1]);
        if x != 0 && y != 0 && x != y {
            0
        } else {
            x.max(y)
        }
    });
    Ok((min0, max0))
}

/// A rooted tree on `{0, .., n-1}`; `parent[v]` is `None` exactly at the root.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TreeSpec {
    parent: Vec<Option<usize>>,
}

impl TreeSpec {
    pub fn new(parent: Vec<Option<usize>>) -> Result<Self> {
        let n = parent.len();
        let roots = parent.iter().filter(|p| p.is_none()).count();
        if roots != 1 {
            return Err(Error::input(format!("tree needs exactly one root, found {roots}")));
        }
        if let Some(v) = parent.iter().flatten().find(|&&p| p >= n) {
            return Err(Error::input(format!("parent {v} outside the tree")));
        }
        for v in 0..n {
            let mut u = v;
            let mut steps = 0;
            while let Some(p) = parent[u] {
                u = p;
                steps += 1;
                if steps > n {
                    return Err(Error::input(format!("cycle through {v}")));
                }
            }
        }
        Ok(TreeSpec { parent })
    }

    /// The path `0 - 1 - .. - n-1` rooted at 0.
    pub fn chain(n: usize) -> Self {
        Self::new((0..n).map(|v| v.checked_sub(1)).collect()).expect("a path is a tree")
    }

    /// Root 0 with children `1..=k`.
    pub fn star(k: usize) -> Self {
        Self::new((0..=k).map(|v| if v == 0 { None } else { Some(0) }).collect()).expect("a star is a tree")
    }

    pub fn len(&self) -> usize {
        self.parent.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parent.is_empty()
    }

    pub fn parent(&self, v: usize) -> Option<usize> {
        self.parent[v]
    }

    /// `v` followed by its ancestors up to the root.
    fn ancestry(&self, mut v: usize) -> Vec<usize> {
        let mut out = vec![v];
        while let Some(p) = self.parent[v] {
            out.push(p);
            v = p;
        }
        out
    }

    pub fn depth(&self, v: usize) -> usize {
        self.ancestry(v).len() - 1
    }

    /// Lowest common ancestor of `x` and `y`.
    pub fn meet(&self, x: usize, y: usize) -> usize {
        let ay = self.ancestry(y);
        *self.ancestry(x).iter().find(|a| ay.contains(a)).expect("trees share the root")
    }

    /// The node `j` on the path from `x` to `y` with `dist(x, j) =
    /// dist(meet, y)`, the mirror image of the meet on that path.
    pub fn join(&self, x: usize, y: usize) -> usize {
        let a = self.meet(x, y);
        let up_x = self.depth(x) - self.depth(a);
        let up_y = self.depth(y) - self.depth(a);
        // path: x, .., a (up_x edges), .., y (up_y edges); step up_y from x
        let mut path = self.ancestry(x)[..=up_x].to_vec();
        let mut down = self.ancestry(y)[..up_y].to_vec();
        down.reverse();
        path.extend(down);
        path[up_y]
    }
}

/// Binary lowest-common-ancestor operation.
pub fn tree_meet(spec: &TreeSpec) -> Operation {
    Operation::from_fn(spec.len(), 2, |t| spec.meet(t[0], t[1]))
}

/// Binary companion of [`tree_meet`] for weak tree-submodularity.
pub fn tree_join(spec: &TreeSpec) -> Operation {
    Operation::from_fn(spec.len(), 2, |t| spec.join(t[0], t[1]))
}

/// Symmetric tournament pair: both commutative and conservative, and
/// different on every pair of distinct arguments.
pub fn check_stp(g1: &Operation, g2: &Operation) -> bool {
    if g1.arity() != 2 || g2.arity() != 2 || g1.domain_size() != g2.domain_size() {
        return false;
    }
    let d = g1.domain_size();
    g1.is_commutative()
        && g2.is_commutative()
        && g1.is_conservative()
        && g2.is_conservative()
        && (0..d).all(|x| (0..d).all(|y| x == y || g1.apply(&[x, y]) != g2.apply(&[x, y])))
}

/// A strict partial order relating every pair except `{b, c}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PartialOrderWithDefect {
    domain_size: usize,
    less: Vec<bool>,
    b: usize,
    c: usize,
}

impl PartialOrderWithDefect {
    pub fn new(domain_size: usize, less: impl Fn(usize, usize) -> bool, b: usize, c: usize) -> Result<Self> {
        let d = domain_size;
        if b >= d || c >= d || b == c {
            return Err(Error::input(format!("defect pair ({b}, {c}) must be two distinct elements")));
        }
        let table: Vec<bool> = tuples(d, 2).map(|t| less(t[0], t[1])).collect();
        let lt = |x: usize, y: usize| table[x * d + y];
        for x in 0..d {
            if lt(x, x) {
                return Err(Error::input(format!("order is not irreflexive at {x}")));
            }
            for y in 0..d {
                if x != y && lt(x, y) && lt(y, x) {
                    return Err(Error::input(format!("order is not antisymmetric at ({x}, {y})")));
                }
                let defect = (x == b && y == c) || (x == c && y == b);
                if x != y && !defect && !lt(x, y) && !lt(y, x) {
                    return Err(Error::input(format!("({x}, {y}) is incomparable")));
                }
                if defect && (lt(x, y) || lt(y, x)) {
                    return Err(Error::input(format!("defect pair ({b}, {c}) is comparable")));
                }
                for z in 0..d {
                    if lt(x, y) && lt(y, z) && !lt(x, z) {
                        return Err(Error::input(format!("order is not transitive at ({x}, {y}, {z})")));
                    }
                }
            }
        }
        Ok(PartialOrderWithDefect { domain_size, less: table, b, c })
    }

    /// `0 < 1, 2 < 3` with `1` and `2` incomparable.
    pub fn four_element() -> Self {
        Self::new(4, |x, y| x < y && !(x == 1 && y == 2), 1, 2).expect("valid defect order")
    }

    pub fn domain_size(&self) -> usize {
        self.domain_size
    }

    pub fn defect(&self) -> (usize, usize) {
        (self.b, self.c)
    }

    pub fn less(&self, x: usize, y: usize) -> bool {
        self.less[x * self.domain_size + y]
    }

    fn is_defect(&self, x: usize, y: usize) -> bool {
        (x, y) == (self.b, self.c) || (x, y) == (self.c, self.b)
    }

    /// Smaller of two comparable elements.
    fn lower(&self, x: usize, y: usize) -> usize {
        if self.less(y, x) { y } else { x }
    }

    fn upper(&self, x: usize, y: usize) -> usize {
        if self.less(x, y) { y } else { x }
    }
}

/// Checks that `⟨g1, g2⟩` is a 1-defect pair for `order`.
pub fn check_one_defect(g1: &Operation, g2: &Operation, order: &PartialOrderWithDefect) -> bool {
    let d = order.domain_size();
    if g1.arity() != 2 || g2.arity() != 2 || g1.domain_size() != d || g2.domain_size() != d {
        return false;
    }
    if !g1.is_commutative() || !g2.is_commutative() {
        return false;
    }
    (0..d).all(|x| {
        (0..d).all(|y| {
            let (l, u) = (g1.apply(&[x, y]), g2.apply(&[x, y]));
            if order.is_defect(x, y) {
                ![x, y].contains(&l) && ![x, y].contains(&u) && order.less(l, u)
            } else {
                l == order.lower(x, y) && u == order.upper(x, y)
            }
        })
    })
}

/// `f = g(f_1, g(f_2, .., g(f_{M-1}, f_M)..))` over the pairwise terms
/// `f_t = g(x_i, x_j)`, `i < j`, in lexicographic order.
pub fn one_defect_symmetric_op(g: &Operation, order: &PartialOrderWithDefect, m: usize) -> Result<Operation> {
    let d = order.domain_size();
    if g.arity() != 2 || g.domain_size() != d {
        return Err(Error::input("expected a binary operation on the order's domain"));
    }
    if m < 2 {
        return Err(Error::input(format!("arity must be at least 2, got {m}")));
    }
    let (b, c) = order.defect();
    let gbc = g.apply(&[b, c]);
    let meet_like = order.less(gbc, b) && order.less(gbc, c);
    let join_like = order.less(b, gbc) && order.less(c, gbc);
    let regular = (0..d).all(|x| {
        (0..d).all(|y| {
            order.is_defect(x, y)
                || g.apply(&[x, y]) == if meet_like { order.lower(x, y) } else { order.upper(x, y) }
        })
    });
    if !g.is_commutative() || !(meet_like || join_like) || !regular {
        return Err(Error::input("not a valid 1-defect operation for this order"));
    }
    let cells = checked_pow(d, m).ok_or_else(|| Error::input("operation table size overflows"))?;
    let mut table = Vec::with_capacity(cells);
    let mut terms = Vec::new();
    for x in tuples(d, m) {
        terms.clear();
        for i in 0..m {
            for j in i + 1..m {
                terms.push(g.apply(&[x[i], x[j]]));
            }
        }
        let mut acc = *terms.last().expect("m >= 2");
        for &t in terms.iter().rev().skip(1) {
            acc = g.apply(&[t, acc]);
        }
        table.push(acc);
    }
    let f = Operation::new(d, m, table)?;
    if !is_symmetric(&f) {
        return Err(Error::Internal("1-defect construction is not symmetric".into()));
    }
    Ok(f)
}

fn draw_weight(rng: &mut ChaCha8Rng) -> ExtendedRational {
    ExtendedRational::from_integer(rng.random_range(1..=16))
}

/// Instance on `num_vars` variables: each scope tuple of each symbol gets,
/// with probability `density`, a weight drawn uniformly from `1..=16`.
pub fn random_instance(language: &ValuedStructure, num_vars: usize, density: f64, seed: u64) -> ValuedStructure {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sig = language.signature().clone();
    let mut out = ValuedStructure::zero(sig.clone(), num_vars);
    for s in 0..sig.len() {
        for scope in tuples(num_vars, sig.arity(s)) {
            if rng.random_bool(density.clamp(0.0, 1.0)) {
                let w = draw_weight(&mut rng);
                out.set_cost(s, &scope, w);
            }
        }
    }
    out
}

/// Maximum repair sweeps before falling back to the zero table.
const MAX_SWEEPS: usize = 200;

/// One pass over all argument pairs lowering `f(g1(ā, b̄))`, then
/// `f(g2(ā, b̄))`, until `f(g1) + f(g2) <= f(ā) + f(b̄)`. Returns whether
/// anything changed.
fn repair_sweep(table: &mut [ExtendedRational], g1: &Operation, g2: &Operation, all: &[Vec<usize>]) -> bool {
    let d = g1.domain_size();
    let mut changed = false;
    for a in all {
        for b in all {
            let rhs = table[tuple_index(a, d)].clone() + table[tuple_index(b, d)].clone();
            let Some(rhs) = rhs.into_finite() else {
                continue;
            };
            let i1 = tuple_index(&apply_componentwise(g1, &[a, b]).expect("binary"), d);
            let i2 = tuple_index(&apply_componentwise(g2, &[a, b]).expect("binary"), d);
            let lhs = table[i1].clone() + table[i2].clone();
            if lhs <= ExtendedRational::Finite(rhs.clone()) {
                continue;
            }
            changed = true;
            if i1 == i2 {
                table[i1] = ExtendedRational::Finite(rhs / Rational::from(2));
                continue;
            }
            // lower f(g1) as far as zero, then f(g2) for what remains
            let v2 = table[i2].clone();
            let room = match v2.finite() {
                Some(v2) if *v2 < rhs => &rhs - v2,
                _ => Rational::zero(),
            };
            if table[i1] > ExtendedRational::Finite(room.clone()) {
                table[i1] = ExtendedRational::Finite(room);
            }
            let left = &rhs - table[i1].finite().expect("just lowered");
            if table[i2] > ExtendedRational::Finite(left.clone()) {
                table[i2] = ExtendedRational::Finite(left);
            }
        }
    }
    changed
}

fn repaired(mut table: Vec<ExtendedRational>, g1: &Operation, g2: &Operation, arity: usize) -> Vec<ExtendedRational> {
    let all: Vec<Vec<usize>> = tuples(g1.domain_size(), arity).collect();
    for _ in 0..MAX_SWEEPS {
        if !repair_sweep(&mut table, g1, g2, &all) {
            return table;
        }
    }
    let mut zero = table;
    zero.iter_mut().filter(|v| v.is_finite()).for_each(|v| *v = ExtendedRational::zero());
    zero
}

fn random_entry(rng: &mut ChaCha8Rng) -> ExtendedRational {
    let den = rng.random_range(1..=4i64);
    ExtendedRational::Finite(Rational::new(rng.random_range(0..=12i64), den))
}

fn check_table(g1: &Operation, g2: &Operation, arity: usize, table: &[ExtendedRational]) -> Result<bool> {
    let sig = Signature::new(vec![Symbol::new("f", arity)])?;
    let lang = ValuedStructure::new(sig, g1.domain_size(), vec![table.to_vec()])?;
    Ok(check_multimorphism(&lang, g1, g2)?.is_ok())
}

/// Random table on `D^arity` with entries `p/q` (`0 <= p <= 12`,
/// `1 <= q <= 4`) repaired until `⟨g1, g2⟩` is a multimorphism.
pub fn random_cost_table_with_multimorphism(
    g1: &Operation,
    g2: &Operation,
    arity: usize,
    seed: u64,
) -> Result<Vec<ExtendedRational>> {
    if g1.arity() != 2 || g2.arity() != 2 || g1.domain_size() != g2.domain_size() {
        return Err(Error::input("expected two binary operations on one domain"));
    }
    let cells = checked_pow(g1.domain_size(), arity).ok_or_else(|| Error::input("table too large"))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let table: Vec<ExtendedRational> = (0..cells).map(|_| random_entry(&mut rng)).collect();
    let table = repaired(table, g1, g2, arity);
    if !check_table(g1, g2, arity, &table)? {
        return Err(Error::Internal("repaired table still violates the multimorphism".into()));
    }
    Ok(table)
}

/// As [`random_cost_table_with_multimorphism`], but a fraction of entries
/// is set to infinity first. The finite part is then shrunk until it is
/// closed under `g1` and `g2`, and the finite values are repaired.
pub fn random_general_table_with_multimorphism(
    g1: &Operation,
    g2: &Operation,
    arity: usize,
    infinite_fraction: f64,
    seed: u64,
) -> Result<Vec<ExtendedRational>> {
    if g1.arity() != 2 || g2.arity() != 2 || g1.domain_size() != g2.domain_size() {
        return Err(Error::input("expected two binary operations on one domain"));
    }
    let d = g1.domain_size();
    let cells = checked_pow(d, arity).ok_or_else(|| Error::input("table too large"))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut table: Vec<ExtendedRational> = (0..cells)
        .map(|_| {
            let v = random_entry(&mut rng);
            if rng.random_bool(infinite_fraction.clamp(0.0, 1.0)) { ExtendedRational::Infinity } else { v }
        })
        .collect();
    let all: Vec<Vec<usize>> = tuples(d, arity).collect();
    loop {
        let mut changed = false;
        for a in &all {
            for b in &all {
                let (ia, ib) = (tuple_index(a, d), tuple_index(b, d));
                if !table[ia].is_finite() || !table[ib].is_finite() {
                    continue;
                }
                let closed = [g1, g2].iter().all(|g| {
                    let t = apply_componentwise(g, &[a, b]).expect("binary");
                    table[tuple_index(&t, d)].is_finite()
                });
                if !closed {
                    table[ia.max(ib)] = ExtendedRational::Infinity;
                    changed = true;
                }
            }
        }
        if !changed {
            break;
        }
    }
    let table = repaired(table, g1, g2, arity);
    if !check_table(g1, g2, arity, &table)? {
        return Err(Error::Internal("repaired table still violates the multimorphism".into()));
    }
    Ok(table)
}

/// Language with one table per entry of `arities` (symbols `f0`, `f1`, ..)
/// admitting `⟨g1, g2⟩`; `infinite_fraction > 0` makes it general-valued.
pub fn random_language_with_multimorphism(
    g1: &Operation,
    g2: &Operation,
    arities: &[usize],
    infinite_fraction: f64,
    seed: u64,
) -> Result<ValuedStructure> {
    let mut symbols = Vec::new();
    let mut tables = Vec::new();
    for (i, &k) in arities.iter().enumerate() {
        let s = seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(i as u64);
        let table = if infinite_fraction > 0.0 {
            random_general_table_with_multimorphism(g1, g2, k, infinite_fraction, s)?
        } else {
            random_cost_table_with_multimorphism(g1, g2, k, s)?
        };
        symbols.push(Symbol::new(format!("f{i}"), k));
        tables.push(table);
    }
    ValuedStructure::new(Signature::new(symbols)?, g1.domain_size(), tables)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{max_op, min_op};

    #[test]
    fn chain_lattice_is_min_max() {
        let (meet, join) = lattice_ops(&LatticeSpec::chain(3)).unwrap();
        assert_eq!(meet, min_op(3));
        assert_eq!(join, max_op(3));
    }

    #[test]
    fn diamond_and_pentagon_tables() {
        let (meet, join) = lattice_ops(&LatticeSpec::diamond()).unwrap();
        assert_eq!(meet.apply(&[1, 2]), 0);
        assert_eq!(join.apply(&[1, 2]), 3);
        let (meet, join) = lattice_ops(&LatticeSpec::pentagon()).unwrap();
        assert_eq!(meet.apply(&[2, 3]), 0);
        assert_eq!(join.apply(&[1, 3]), 4);
        assert_eq!(join.apply(&[1, 2]), 2);
    }

    #[test]
    fn broken_lattice_is_rejected() {
        let mut spec = LatticeSpec::chain(3);
        spec.join[1] = 0;
        let err = lattice_ops(&spec).unwrap_err().to_string();
        assert!(err.contains("join"), "{err}");
        // two maximal elements: no join
        assert!(LatticeSpec::from_order(3, |x, y| x == y || x == 0).is_err());
    }

    #[test]
    fn min0_max0_values() {
        let (min0, max0) = min0_max0(1).unwrap();
        assert_eq!(min0, min_op(2));
        assert_eq!(max0, max_op(2));
        let (min0, max0) = min0_max0(2).unwrap();
        assert_eq!(min0.apply(&[1, 2]), 0);
        assert_eq!(max0.apply(&[1, 2]), 0);
        assert_eq!(max0.apply(&[0, 2]), 2);
        assert!(is_symmetric(&min0) && min0.is_semilattice());
    }

    #[test]
    fn tree_operations() {
        let chain = TreeSpec::chain(4);
        assert_eq!(tree_meet(&chain), min_op(4));
        assert_eq!(tree_join(&chain), max_op(4));
        for k in 1..=4 {
            let star = TreeSpec::star(k);
            let (min0, max0) = min0_max0(k).unwrap();
            assert_eq!(tree_meet(&star), min0);
            assert_eq!(tree_join(&star), max0);
        }
        // 0 -> {1, 2, 3}, 1 -> {4, 5}
        let t = TreeSpec::new(vec![None, Some(0), Some(0), Some(0), Some(1), Some(1)]).unwrap();
        assert_eq!(t.meet(4, 5), 1);
        assert_eq!(t.meet(4, 2), 0);
        assert_eq!(t.join(4, 2), 1);
        assert_eq!(t.join(2, 4), 1);
        assert!(tree_meet(&t).is_semilattice());
        assert!(TreeSpec::new(vec![Some(1), Some(0)]).is_err());
        assert!(TreeSpec::new(vec![None, None]).is_err());
    }

    #[test]
    fn stp_examples() {
        assert!(check_stp(&min_op(3), &max_op(3)));
        assert!(!check_stp(&min_op(3), &min_op(3)));
        // rock-paper-scissors winner and loser
        let beats = |x: usize, y: usize| (x + 1) % 3 == y;
        let win = Operation::from_fn(3, 2, |t| if t[0] == t[1] || beats(t[0], t[1]) { t[0] } else { t[1] });
        let lose = Operation::from_fn(3, 2, |t| if t[0] == t[1] || beats(t[0], t[1]) { t[1] } else { t[0] });
        assert!(check_stp(&win, &lose));
    }

    fn defect_pair(low: usize, high: usize) -> (Operation, Operation) {
        let order = PartialOrderWithDefect::four_element();
        let g1 = Operation::from_fn(4, 2, |t| match (t[0], t[1]) {
            (1, 2) | (2, 1) => low,
            (x, y) => order.lower(x, y),
        });
        let g2 = Operation::from_fn(4, 2, |t| match (t[0], t[1]) {
            (1, 2) | (2, 1) => high,
            (x, y) => order.upper(x, y),
        });
        (g1, g2)
    }

    #[test]
    fn one_defect_checks() {
        let order = PartialOrderWithDefect::four_element();
        let (g1, g2) = defect_pair(0, 3);
        assert!(check_one_defect(&g1, &g2, &order));
        let (g1, g2) = defect_pair(1, 3);
        assert!(!check_one_defect(&g1, &g2, &order));
        let (g1, g2) = defect_pair(3, 0);
        assert!(!check_one_defect(&g1, &g2, &order));
    }

    #[test]
    fn one_defect_symmetric_cases() {
        let order = PartialOrderWithDefect::four_element();
        let (g, g2) = defect_pair(0, 3);
        assert_eq!(one_defect_symmetric_op(&g, &order, 2).unwrap(), g);
        let f = one_defect_symmetric_op(&g, &order, 3).unwrap();
        assert_eq!(f.apply(&[1, 2, 3]), 0);
        assert_eq!(f.apply(&[3, 1, 1]), 1);
        assert_eq!(f.apply(&[0, 1, 2]), 0);
        let dual = one_defect_symmetric_op(&g2, &order, 3).unwrap();
        assert_eq!(dual.apply(&[1, 2, 0]), 3);
        assert!(one_defect_symmetric_op(&min_op(4), &order, 3).is_err());
    }

    #[test]
    fn random_instance_shape() {
        let sig = Signature::new(vec![Symbol::new("f", 2)]).unwrap();
        let lang = ValuedStructure::zero(sig, 2);
        assert!(random_instance(&lang, 3, 0.0, 7).terms().is_empty());
        assert_eq!(random_instance(&lang, 3, 1.0, 7).terms().len(), 9);
        assert_eq!(random_instance(&lang, 4, 0.5, 11), random_instance(&lang, 4, 0.5, 11));
    }

    #[test]
    fn random_tables_admit_the_multimorphism() {
        for seed in 0..20 {
            let t = random_cost_table_with_multimorphism(&min_op(2), &max_op(2), 2, seed).unwrap();
            assert!(t[0].clone() + t[3].clone() <= t[1].clone() + t[2].clone());
            assert_eq!(t, random_cost_table_with_multimorphism(&min_op(2), &max_op(2), 2, seed).unwrap());
            let (min0, max0) = min0_max0(2).unwrap();
            let g = random_general_table_with_multimorphism(&min0, &max0, 2, 0.2, seed).unwrap();
            assert!(check_table(&min0, &max0, 2, &g).unwrap());
        }
    }
}
