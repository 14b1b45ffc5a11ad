use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::rational::Rational;
use crate::structure::ValuedStructure;
use crate::tuple::{checked_pow, tuple_index, tuples, Odometer};
use crate::value::ExtendedRational;

/// Size-`m` multisets over `{0, .., d-1}`, each encoded as its sorted
/// (nondecreasing) tuple, indexed in lexicographic order of the encoding.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MultisetDomain {
    domain_size: usize,
    m: usize,
    elements: Vec<Vec<usize>>,
    index: HashMap<Vec<usize>, usize>,
}

/// Rearranges `v` into the next lexicographic permutation; false at the last.
pub(crate) fn next_permutation(v: &mut [usize]) -> bool {
    if v.len() < 2 {
        return false;
    }
    let mut i = v.len() - 1;
    while i > 0 && v[i - 1] >= v[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = v.len() - 1;
    while v[j] <= v[i - 1] {
        j -= 1;
    }
    v.swap(i - 1, j);
    v[i..].reverse();
    true
}

/// Binomial coefficient, saturating.
pub fn binomial(n: u128, k: u128) -> u128 {
    let k = k.min(n.saturating_sub(k));
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc.saturating_mul(n - i) / (i + 1);
    }
    acc
}

impl MultisetDomain {
    pub fn new(domain_size: usize, m: usize) -> Self {
        let mut elements = Vec::new();
        let mut current = vec![0; m];
        if domain_size > 0 {
            loop {
                elements.push(current.clone());
                // advance to the next nondecreasing tuple
                let Some(i) = (0..m).rev().find(|&i| current[i] + 1 < domain_size) else {
                    break;
                };
                let v = current[i] + 1;
                for slot in &mut current[i..] {
                    *slot = v;
                }
            }
        }
        let index = elements.iter().cloned().enumerate().map(|(i, e)| (e, i)).collect();
        MultisetDomain { domain_size, m, elements, index }
    }

    /// `C(d + m - 1, m)` without building the domain.
    pub fn count(domain_size: usize, m: usize) -> u128 {
        if domain_size == 0 {
            return u128::from(m == 0);
        }
        binomial((domain_size + m - 1) as u128, m as u128)
    }

    pub fn domain_size(&self) -> usize {
        self.domain_size
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    /// Canonical (sorted) encoding of multiset `i`.
    pub fn element(&self, i: usize) -> &[usize] {
        &self.elements[i]
    }

    pub fn elements(&self) -> &[Vec<usize>] {
        &self.elements
    }

    /// Index of the multiset of the entries of `tuple`, in any order.
    pub fn index_of(&self, tuple: &[usize]) -> Option<usize> {
        let mut key = tuple.to_vec();
        key.sort_unstable();
        self.index.get(&key).copied()
    }

    pub fn multiplicity(&self, i: usize, a: usize) -> usize {
        self.elements[i].iter().filter(|&&x| x == a).count()
    }

    /// Orbit index of every tuple of `D^m`, in row-major order.
    pub fn orbit_table(&self) -> Vec<usize> {
        tuples(self.domain_size, self.m)
            .map(|t| self.index_of(&t).expect("tuple outside domain"))
            .collect()
    }

    /// All distinct orderings of multiset `i`, lexicographically.
    pub fn orderings(&self, i: usize) -> Vec<Vec<usize>> {
        let mut cur = self.elements[i].clone();
        let mut out = vec![cur.clone()];
        while next_permutation(&mut cur) {
            out.push(cur.clone());
        }
        out
    }
}

/// Valued structure on size-`m` multisets of the language domain, with
/// `f(α_1, .., α_k) = (1/m) min Σ_i f(t_1[i], .., t_k[i])` over orderings
/// `t_j` of `α_j`.
///
/// The first argument's ordering is fixed to its sorted encoding; permuting
/// all orderings by the same index permutation leaves the sum unchanged.
pub fn build_multiset_structure(
    language: &ValuedStructure,
    m: usize,
) -> Result<(ValuedStructure, MultisetDomain)> {
    if m <= 1 {
        return Err(Error::input(format!("multiset structure needs m > 1, got {m}")));
    }
    let d = language.domain_size();
    let ms = MultisetDomain::new(d, m);
    let n = ms.len();
    let orderings: Vec<Vec<Vec<usize>>> = (0..n).map(|i| ms.orderings(i)).collect();
    let inv_m = Rational::new(1, m as i64);
    let mut tables = Vec::with_capacity(language.signature().len());
    for s in 0..language.signature().len() {
        let k = language.signature().arity(s);
        let size = checked_pow(n, k)
            .ok_or_else(|| Error::input("multiset structure table too large"))?;
        let table = language.table(s);
        let mut out = Vec::with_capacity(size);
        let mut scope = Odometer::new(n, k);
        let mut column = vec![0; k];
        while let Some(alphas) = scope.next_tuple() {
            let mut best = ExtendedRational::Infinity;
            if k > 1 {
                // choose one ordering for each argument after the first
                let counts: Vec<usize> = alphas[1..].iter().map(|&a| orderings[a].len()).collect();
                let mut choice = MixedRadix::new(counts);
                loop {
                    let mut sum = ExtendedRational::zero();
                    for i in 0..m {
                        column[0] = ms.element(alphas[0])[i];
                        for j in 1..k {
                            column[j] = orderings[alphas[j]][choice.digits[j - 1]][i];
                        }
                        sum += &table[tuple_index(&column, d)];
                        if sum >= best {
                            break;
                        }
                    }
                    if sum < best {
                        best = sum;
                    }
                    if !choice.advance() {
                        break;
                    }
                }
            } else {
                best = ms
                    .element(alphas[0])
                    .iter()
                    .map(|&a| table[a].clone())
                    .sum();
            }
            out.push(best.mul_rational(&inv_m));
        }
        tables.push(out);
    }
    let pm = ValuedStructure::from_raw(language.signature().clone(), n, tables);
    Ok((pm, ms))
}

/// Odometer with a separate radix per digit.
struct MixedRadix {
    radices: Vec<usize>,
    digits: Vec<usize>,
}

impl MixedRadix {
    fn new(radices: Vec<usize>) -> Self {
        let digits = vec![0; radices.len()];
        MixedRadix { radices, digits }
    }

    fn advance(&mut self) -> bool {
        for i in (0..self.digits.len()).rev() {
            self.digits[i] += 1;
            if self.digits[i] < self.radices[i] {
                return true;
            }
            self.digits[i] = 0;
        }
        false
    }
}
