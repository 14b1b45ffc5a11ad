use std::fmt;

use super::operation::{FractionalOperation, Operation};
use crate::error::{Error, Result};
use crate::rational::Rational;
use crate::structure::ValuedStructure;
use crate::tuple::{tuple_at, tuple_index, Odometer};
use crate::value::ExtendedRational;

/// The first (lexicographically least) failing instance of an inequality.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InequalityViolation {
    pub symbol: usize,
    pub arguments: Vec<Vec<usize>>,
    pub lhs: ExtendedRational,
    pub rhs: ExtendedRational,
}

impl fmt::Display for InequalityViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let args: Vec<String> = self.arguments.iter().map(|a| format!("{a:?}")).collect();
        write!(
            f,
            "symbol #{} at {}: {} > {}",
            self.symbol,
            args.join(" "),
            self.lhs,
            self.rhs
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Check {
    Ok,
    Violated(InequalityViolation),
}

impl Check {
    pub fn is_ok(&self) -> bool {
        matches!(self, Check::Ok)
    }
}

fn require_domain(language: &ValuedStructure, d: usize) -> Result<()> {
    if language.domain_size() != d {
        return Err(Error::input(format!(
            "operation domain size {d} differs from language domain size {}",
            language.domain_size()
        )));
    }
    Ok(())
}

/// Visits every symbol and every `m`-tuple of argument tuples in
/// lexicographic order; stops at the first `Some`.
fn scan<T>(
    language: &ValuedStructure,
    m: usize,
    mut visit: impl FnMut(usize, &[Vec<usize>], &[usize]) -> Option<T>,
) -> Option<T> {
    let d = language.domain_size();
    for s in 0..language.signature().len() {
        let k = language.signature().arity(s);
        let all: Vec<Vec<usize>> = (0..d.pow(k as u32)).map(|i| tuple_at(i, d, k)).collect();
        let mut odo = Odometer::new(all.len(), m);
        let mut args: Vec<Vec<usize>> = vec![Vec::new(); m];
        while let Some(pick) = odo.next_tuple() {
            for (slot, &p) in args.iter_mut().zip(pick) {
                slot.clone_from(&all[p]);
            }
            if let Some(t) = visit(s, &args, pick) {
                return Some(t);
            }
        }
    }
    None
}

fn image(g: &Operation, args: &[Vec<usize>], column: &mut [usize], out: &mut Vec<usize>) {
    out.clear();
    let k = args[0].len();
    for i in 0..k {
        for (c, a) in column.iter_mut().zip(args) {
            *c = a[i];
        }
        out.push(g.apply(column));
    }
}

/// Exhaustively checks `Σ_g ω(g) f(g(ā_1..ā_m)) <= (1/m) Σ_i f(ā_i)`.
pub fn check_fractional_polymorphism(language: &ValuedStructure, omega: &FractionalOperation) -> Result<Check> {
    if !omega.norm().is_one() {
        return Err(Error::input(format!(
            "fractional operation has total weight {}, expected 1",
            omega.norm()
        )));
    }
    require_domain(language, omega.domain_size())?;
    let m = omega.arity();
    let inv_m = Rational::new(1, m as i64);
    let d = language.domain_size();
    let mut column = vec![0; m];
    let mut out = Vec::new();
    let found = scan(language, m, |s, args, _| {
        let table = language.table(s);
        let rhs: ExtendedRational = args.iter().map(|a| table[tuple_index(a, d)].clone()).sum();
        let rhs = rhs.mul_rational(&inv_m);
        let mut lhs = ExtendedRational::zero();
        for (g, w) in omega.entries() {
            image(g, args, &mut column, &mut out);
            lhs += &table[tuple_index(&out, d)].mul_rational(w);
        }
        (lhs > rhs).then(|| InequalityViolation {
            symbol: s,
            arguments: args.to_vec(),
            lhs,
            rhs,
        })
    });
    Ok(found.map_or(Check::Ok, Check::Violated))
}

/// Checks `f(g1(ā, b̄)) + f(g2(ā, b̄)) <= f(ā) + f(b̄)` for every symbol.
pub fn check_multimorphism(language: &ValuedStructure, g1: &Operation, g2: &Operation) -> Result<Check> {
    if g1.arity() != 2 || g2.arity() != 2 {
        return Err(Error::input("multimorphism operations must be binary"));
    }
    require_domain(language, g1.domain_size())?;
    require_domain(language, g2.domain_size())?;
    let d = language.domain_size();
    let mut column = vec![0; 2];
    let mut out = Vec::new();
    let found = scan(language, 2, |s, args, _| {
        let table = language.table(s);
        let rhs = &table[tuple_index(&args[0], d)] + &table[tuple_index(&args[1], d)];
        image(g1, args, &mut column, &mut out);
        let mut lhs = table[tuple_index(&out, d)].clone();
        image(g2, args, &mut column, &mut out);
        lhs += &table[tuple_index(&out, d)];
        (lhs > rhs).then(|| InequalityViolation {
            symbol: s,
            arguments: args.to_vec(),
            lhs,
            rhs,
        })
    });
    Ok(found.map_or(Check::Ok, Check::Violated))
}

/// Checks `feas(f(g(ā_1..ā_m))) <= Σ_i feas(f(ā_i))`: finite-cost arguments
/// must map to a finite-cost result.
pub fn check_polymorphism(language: &ValuedStructure, g: &Operation) -> Result<Check> {
    require_domain(language, g.domain_size())?;
    if language.is_finite_valued() {
        return Ok(Check::Ok);
    }
    let d = language.domain_size();
    let mut column = vec![0; g.arity()];
    let mut out = Vec::new();
    let found = scan(language, g.arity(), |s, args, _| {
        let table = language.table(s);
        if args.iter().any(|a| table[tuple_index(a, d)].is_infinite()) {
            return None;
        }
        image(g, args, &mut column, &mut out);
        table[tuple_index(&out, d)].is_infinite().then(|| InequalityViolation {
            symbol: s,
            arguments: args.to_vec(),
            lhs: ExtendedRational::Infinity,
            rhs: ExtendedRational::zero(),
        })
    });
    Ok(found.map_or(Check::Ok, Check::Violated))
}

/// A probability distribution over maps `D(A) -> D(B)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct FractionalMap {
    pub source_size: usize,
    pub target_size: usize,
    /// `(map as a table over the source domain, weight)`, sorted by table.
    pub maps: Vec<(Vec<usize>, Rational)>,
}

impl FractionalMap {
    pub fn norm(&self) -> Rational {
        self.maps.iter().map(|(_, w)| w).sum()
    }
}

/// Checks `Σ_g ω(g) f^B(g(ā)) <= f^A(ā)` for every symbol and tuple of `A`.
pub fn check_fractional_homomorphism(
    a: &ValuedStructure,
    b: &ValuedStructure,
    omega: &FractionalMap,
) -> Result<Check> {
    a.check_same_signature(b)?;
    if omega.source_size != a.domain_size() || omega.target_size != b.domain_size() {
        return Err(Error::input("fractional map does not fit the structures"));
    }
    if !omega.norm().is_one() {
        return Err(Error::input(format!(
            "fractional map has total weight {}, expected 1",
            omega.norm()
        )));
    }
    if omega
        .maps
        .iter()
        .any(|(g, w)| g.len() != a.domain_size() || g.iter().any(|&v| v >= b.domain_size()) || !w.is_positive())
    {
        return Err(Error::input("malformed map in fractional map"));
    }
    let (da, db) = (a.domain_size(), b.domain_size());
    for s in 0..a.signature().len() {
        let k = a.signature().arity(s);
        let mut odo = Odometer::new(da, k);
        let mut img = vec![0; k];
        while let Some(t) = odo.next_tuple() {
            let rhs = a.table(s)[tuple_index(t, da)].clone();
            let mut lhs = ExtendedRational::zero();
            for (g, w) in &omega.maps {
                for (v, &x) in img.iter_mut().zip(t) {
                    *v = g[x];
                }
                lhs += &b.table(s)[tuple_index(&img, db)].mul_rational(w);
            }
            if lhs > rhs {
                return Ok(Check::Violated(InequalityViolation {
                    symbol: s,
                    arguments: vec![t.to_vec()],
                    lhs,
                    rhs,
                }));
            }
        }
    }
    Ok(Check::Ok)
}
