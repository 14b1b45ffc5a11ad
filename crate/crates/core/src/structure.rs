//! Valued structures, assignments and the measure functional.
//!
//! A [`ValuedStructure`] plays both roles: a *language* (cost tables over a
//! domain) and an *instance* (term weights indexed by tuples of variables).
//! Domain elements are the integers `0..domain_size`.

use std::collections::HashSet;
use std::fmt;

use crate::error::{Error, Result};
use crate::rational::Rational;
use crate::tuple::{checked_pow, tuple_index, tuples, Odometer};
use crate::value::ExtendedRational;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Symbol {
    pub name: String,
    pub arity: usize,
}

impl Symbol {
    pub fn new(name: impl Into<String>, arity: usize) -> Self {
        Symbol {
            name: name.into(),
            arity,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Signature {
    symbols: Vec<Symbol>,
}

impl Signature {
    /// Checked constructor: names unique, arities at least one.
    pub fn new(symbols: Vec<Symbol>) -> Result<Self> {
        let sig = Signature { symbols };
        let violations = sig.violations();
        if violations.is_empty() {
            Ok(sig)
        } else {
            Err(Error::InvalidStructure(violations))
        }
    }

    /// No checks; see [`validate_structure`].
    pub fn from_raw(symbols: Vec<Symbol>) -> Self {
        Signature { symbols }
    }

    fn violations(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        let mut seen = HashSet::new();
        for s in &self.symbols {
            if !seen.insert(s.name.as_str()) {
                out.push(Violation::DuplicateSymbol(s.name.clone()));
            }
            if s.arity == 0 {
                out.push(Violation::ZeroArity(s.name.clone()));
            }
        }
        out
    }

    pub fn symbols(&self) -> &[Symbol] {
        &self.symbols
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn arity(&self, symbol: usize) -> usize {
        self.symbols[symbol].arity
    }

    pub fn name(&self, symbol: usize) -> &str {
        &self.symbols[symbol].name
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.symbols.iter().position(|s| s.name == name)
    }
}

/// One problem found by [`validate_structure`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    DuplicateSymbol(String),
    ZeroArity(String),
    EmptyDomain,
    MissingTable(String),
    ExtraTables { expected: usize, found: usize },
    TableLength {
        symbol: String,
        expected: usize,
        found: usize,
    },
    NegativeEntry {
        symbol: String,
        index: usize,
        value: Rational,
    },
    FiniteFlag { stored: bool, actual: bool },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::DuplicateSymbol(s) => write!(f, "duplicate symbol `{s}`"),
            Violation::ZeroArity(s) => write!(f, "symbol `{s}` has arity 0"),
            Violation::EmptyDomain => write!(f, "domain is empty"),
            Violation::MissingTable(s) => write!(f, "symbol `{s}` has no table"),
            Violation::ExtraTables { expected, found } => {
                write!(f, "expected {expected} tables, found {found}")
            }
            Violation::TableLength {
                symbol,
                expected,
                found,
            } => write!(
                f,
                "table of `{symbol}` has {found} entries, expected {expected}"
            ),
            Violation::NegativeEntry {
                symbol,
                index,
                value,
            } => write!(f, "table of `{symbol}` has negative entry {value} at index {index}"),
            Violation::FiniteFlag { stored, actual } => write!(
                f,
                "finite-valued flag is {stored} but the tables say {actual}"
            ),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ValuedStructure {
    signature: Signature,
    domain_size: usize,
    tables: Vec<Vec<ExtendedRational>>,
    finite_valued: bool,
}

fn all_finite(tables: &[Vec<ExtendedRational>]) -> bool {
    tables.iter().flatten().all(ExtendedRational::is_finite)
}

impl ValuedStructure {
    /// Checked constructor; any [`Violation`] is returned as an error.
    pub fn new(
        signature: Signature,
        domain_size: usize,
        tables: Vec<Vec<ExtendedRational>>,
    ) -> Result<Self> {
        let s = Self::from_raw(signature, domain_size, tables);
        let violations = validate_structure(&s);
        if violations.is_empty() {
            Ok(s)
        } else {
            Err(Error::InvalidStructure(violations))
        }
    }

    /// Builds without validation.
    pub fn from_raw(
        signature: Signature,
        domain_size: usize,
        tables: Vec<Vec<ExtendedRational>>,
    ) -> Self {
        let finite_valued = all_finite(&tables);
        ValuedStructure {
            signature,
            domain_size,
            tables,
            finite_valued,
        }
    }

    pub fn zero(signature: Signature, domain_size: usize) -> Self {
        Self::from_fn(signature, domain_size, |_, _| ExtendedRational::zero())
    }

    /// Tabulates `cost(symbol, tuple)` in row-major order.
    pub fn from_fn(
        signature: Signature,
        domain_size: usize,
        mut cost: impl FnMut(usize, &[usize]) -> ExtendedRational,
    ) -> Self {
        let tables = (0..signature.len())
            .map(|s| {
                tuples(domain_size, signature.arity(s))
                    .map(|t| cost(s, &t))
                    .collect()
            })
            .collect();
        Self::from_raw(signature, domain_size, tables)
    }

    pub fn signature(&self) -> &Signature {
        &self.signature
    }

    pub fn domain_size(&self) -> usize {
        self.domain_size
    }

    pub fn tables(&self) -> &[Vec<ExtendedRational>] {
        &self.tables
    }

    pub fn table(&self, symbol: usize) -> &[ExtendedRational] {
        &self.tables[symbol]
    }

    pub fn cost(&self, symbol: usize, tuple: &[usize]) -> &ExtendedRational {
        &self.tables[symbol][tuple_index(tuple, self.domain_size)]
    }

    pub fn set_cost(&mut self, symbol: usize, tuple: &[usize], value: ExtendedRational) {
        let idx = tuple_index(tuple, self.domain_size);
        self.tables[symbol][idx] = value;
        self.finite_valued = all_finite(&self.tables);
    }

    pub fn is_finite_valued(&self) -> bool {
        self.finite_valued
    }

    /// Multiplies every entry by `c`, with `0 * inf = 0`.
    pub fn scaled(&self, c: &Rational) -> Self {
        let tables = self
            .tables
            .iter()
            .map(|t| t.iter().map(|v| v.mul_rational(c)).collect())
            .collect();
        Self::from_raw(self.signature.clone(), self.domain_size, tables)
    }

    /// Nonzero entries of an instance, in symbol then row-major order.
    pub fn terms(&self) -> Vec<Term> {
        let mut out = Vec::new();
        for (s, table) in self.tables.iter().enumerate() {
            let k = self.signature.arity(s);
            let mut odo = Odometer::new(self.domain_size, k);
            let mut idx = 0;
            while let Some(t) = odo.next_tuple() {
                if !table[idx].is_zero() {
                    out.push(Term {
                        symbol: s,
                        scope: t.to_vec(),
                        weight: table[idx].clone(),
                    });
                }
                idx += 1;
            }
        }
        out
    }

    /// Checks that `other` has the same signature.
    pub fn check_same_signature(&self, other: &ValuedStructure) -> Result<()> {
        if self.signature != other.signature {
            return Err(Error::SignatureMismatch(format!(
                "[{}] vs [{}]",
                describe(&self.signature),
                describe(&other.signature)
            )));
        }
        Ok(())
    }
}

fn describe(sig: &Signature) -> String {
    sig.symbols
        .iter()
        .map(|s| format!("{}/{}", s.name, s.arity))
        .collect::<Vec<_>>()
        .join(", ")
}

/// A weighted term `f(x̄)` of an instance.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Term {
    pub symbol: usize,
    pub scope: Vec<usize>,
    pub weight: ExtendedRational,
}

impl Term {
    /// Distinct variables of the scope in order of first appearance.
    pub fn variables(&self) -> Vec<usize> {
        let mut vars = Vec::with_capacity(self.scope.len());
        for &x in &self.scope {
            if !vars.contains(&x) {
                vars.push(x);
            }
        }
        vars
    }

    /// The scope as a set, ascending.
    pub fn variables_sorted(&self) -> Vec<usize> {
        let mut vars = self.scope.clone();
        vars.sort_unstable();
        vars.dedup();
        vars
    }
}

/// Checks table sizes, nonnegativity and symbol names.
pub fn validate_structure(s: &ValuedStructure) -> Vec<Violation> {
    let mut out = s.signature.violations();
    if s.domain_size == 0 {
        out.push(Violation::EmptyDomain);
    }
    for (i, sym) in s.signature.symbols.iter().enumerate() {
        let Some(table) = s.tables.get(i) else {
            out.push(Violation::MissingTable(sym.name.clone()));
            continue;
        };
        let expected = checked_pow(s.domain_size, sym.arity).unwrap_or(usize::MAX);
        if table.len() != expected {
            out.push(Violation::TableLength {
                symbol: sym.name.clone(),
                expected,
                found: table.len(),
            });
        }
        for (index, v) in table.iter().enumerate() {
            if let ExtendedRational::Finite(r) = v {
                if r.is_negative() {
                    out.push(Violation::NegativeEntry {
                        symbol: sym.name.clone(),
                        index,
                        value: r.clone(),
                    });
                }
            }
        }
    }
    if s.tables.len() > s.signature.len() {
        out.push(Violation::ExtraTables {
            expected: s.signature.len(),
            found: s.tables.len(),
        });
    }
    let actual = all_finite(&s.tables);
    if actual != s.finite_valued {
        out.push(Violation::FiniteFlag {
            stored: s.finite_valued,
            actual,
        });
    }
    out
}

/// A map from instance variables to language domain values.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Assignment(Vec<usize>);

impl Assignment {
    pub fn new(values: Vec<usize>, domain_size: usize) -> Result<Self> {
        if let Some((x, &v)) = values.iter().enumerate().find(|(_, &v)| v >= domain_size) {
            return Err(Error::InvalidAssignment(format!(
                "variable {x} mapped to {v}, outside a domain of size {domain_size}"
            )));
        }
        Ok(Assignment(values))
    }

    pub fn values(&self) -> &[usize] {
        &self.0
    }

    pub fn get(&self, x: usize) -> usize {
        self.0[x]
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl fmt::Display for Assignment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|v| v.to_string()).collect();
        write!(f, "[{}]", parts.join(", "))
    }
}

/// `sum over f, x̄ of f^I(x̄) * f^A(h(x̄))`, with `0 * inf = 0`.
pub fn measure(
    instance: &ValuedStructure,
    language: &ValuedStructure,
    h: &Assignment,
) -> Result<ExtendedRational> {
    instance.check_same_signature(language)?;
    if h.len() != instance.domain_size() {
        return Err(Error::InvalidAssignment(format!(
            "assignment covers {} variables, instance has {}",
            h.len(),
            instance.domain_size()
        )));
    }
    if let Some(&v) = h.values().iter().find(|&&v| v >= language.domain_size()) {
        return Err(Error::InvalidAssignment(format!(
            "value {v} outside a domain of size {}",
            language.domain_size()
        )));
    }
    let mut total = ExtendedRational::zero();
    let mut image = Vec::new();
    for term in instance.terms() {
        image.clear();
        image.extend(term.scope.iter().map(|&x| h.get(x)));
        total += &(&term.weight * language.cost(term.symbol, &image));
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64) -> ExtendedRational {
        ExtendedRational::from_integer(n)
    }

    fn binary_sig() -> Signature {
        Signature::new(vec![Symbol::new("f", 2)]).unwrap()
    }

    fn soft_neq() -> ValuedStructure {
        ValuedStructure::new(binary_sig(), 2, vec![vec![q(1), q(0), q(0), q(1)]]).unwrap()
    }

    fn triangle() -> ValuedStructure {
        let mut inst = ValuedStructure::zero(binary_sig(), 3);
        for (x, y) in [(0, 1), (1, 2), (0, 2)] {
            inst.set_cost(0, &[x, y], q(1));
        }
        inst
    }

    #[test]
    fn zero_weights_give_zero_measure() {
        let sig = Signature::new(vec![Symbol::new("u", 1)]).unwrap();
        let lang = ValuedStructure::new(sig.clone(), 2, vec![vec![q(5), q(7)]]).unwrap();
        let inst = ValuedStructure::zero(sig, 3);
        for h in tuples(2, 3) {
            let h = Assignment::new(h, 2).unwrap();
            assert_eq!(measure(&inst, &lang, &h).unwrap(), q(0));
        }
    }

    #[test]
    fn triangle_constant_assignment_costs_three() {
        let h = Assignment::new(vec![0, 0, 0], 2).unwrap();
        assert_eq!(measure(&triangle(), &soft_neq(), &h).unwrap(), q(3));
        let h = Assignment::new(vec![0, 1, 0], 2).unwrap();
        assert_eq!(measure(&triangle(), &soft_neq(), &h).unwrap(), q(1));
    }

    #[test]
    fn zero_weight_on_infinite_cost_contributes_zero() {
        let sig = Signature::new(vec![Symbol::new("u", 1)]).unwrap();
        let lang = ValuedStructure::new(
            sig.clone(),
            2,
            vec![vec![ExtendedRational::Infinity, q(0)]],
        )
        .unwrap();
        let inst = ValuedStructure::new(sig, 2, vec![vec![q(0), q(1)]]).unwrap();
        let h = Assignment::new(vec![0, 1], 2).unwrap();
        assert_eq!(measure(&inst, &lang, &h).unwrap(), q(0));
        let h = Assignment::new(vec![0, 0], 2).unwrap();
        assert_eq!(measure(&inst, &lang, &h).unwrap(), ExtendedRational::Infinity);
    }

    #[test]
    fn measure_rejects_bad_inputs() {
        let h = Assignment::new(vec![0, 0], 2).unwrap();
        assert!(matches!(
            measure(&triangle(), &soft_neq(), &h),
            Err(Error::InvalidAssignment(_))
        ));
        assert!(Assignment::new(vec![0, 2], 2).is_err());
        let other = ValuedStructure::zero(
            Signature::new(vec![Symbol::new("g", 2)]).unwrap(),
            2,
        );
        let h = Assignment::new(vec![0, 0, 0], 2).unwrap();
        assert!(matches!(
            measure(&triangle(), &other, &h),
            Err(Error::SignatureMismatch(_))
        ));
    }

    #[test]
    fn validation_reports_violations() {
        assert!(validate_structure(&soft_neq()).is_empty());

        let bad_len = ValuedStructure::from_raw(binary_sig(), 2, vec![vec![q(1), q(0), q(0)]]);
        let v = validate_structure(&bad_len);
        assert_eq!(
            v,
            vec![Violation::TableLength {
                symbol: "f".into(),
                expected: 4,
                found: 3
            }]
        );
        assert!(v[0].to_string().contains("`f`"));

        let neg = ValuedStructure::from_raw(
            binary_sig(),
            2,
            vec![vec![q(1), ExtendedRational::Finite(Rational::new(-1, 2)), q(0), q(0)]],
        );
        assert!(matches!(
            validate_structure(&neg).as_slice(),
            [Violation::NegativeEntry { index: 1, .. }]
        ));

        let dup = Signature::from_raw(vec![Symbol::new("f", 1), Symbol::new("f", 1)]);
        let s = ValuedStructure::from_raw(dup, 1, vec![vec![q(0)], vec![q(0)]]);
        assert_eq!(
            validate_structure(&s),
            vec![Violation::DuplicateSymbol("f".into())]
        );
        assert!(ValuedStructure::new(binary_sig(), 2, vec![]).is_err());
    }

    #[test]
    fn finite_flag_tracks_entries() {
        let mut s = soft_neq();
        assert!(s.is_finite_valued());
        s.set_cost(0, &[1, 0], ExtendedRational::Infinity);
        assert!(!s.is_finite_valued());
        assert!(validate_structure(&s).is_empty());
    }

    #[test]
    fn measure_is_linear_in_weights() {
        let lang = soft_neq();
        let inst = triangle();
        let c = Rational::new(7, 3);
        let scaled = inst.scaled(&c);
        for h in tuples(2, 3) {
            let h = Assignment::new(h, 2).unwrap();
            let base = measure(&inst, &lang, &h).unwrap();
            assert_eq!(measure(&scaled, &lang, &h).unwrap(), base.mul_rational(&c));
        }
    }
}
