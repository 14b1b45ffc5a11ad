//! Feasibility of `Σ_g ω(g) c_g <= b, Σ ω = 1, ω >= 0` over all maps
//! `g: {0..n} -> D(B)`, where column entries are costs in a target
//! structure: `c_g[r] = f_r^B(g(p_r))` for a row's symbol `f_r` and point
//! tuple `p_r`.
//!
//! The column set is exponential, so the system is solved by column
//! generation on an elastic master (`min t` subject to
//! `Σ c ω - t <= b`, `Σ ω = 1`) with full enumeration as the pricing step.
//! At convergence the master's duals either certify `t = 0` (a witness) or
//! give a Farkas vector valid against every column.

use std::collections::BinaryHeap;

use num_integer::Integer;

use crate::error::{Error, Result};
use crate::lp::{LinearProgram, LpSolution, LpStatus, Relation, Sense, WarmStart};
use crate::rational::Rational;
use crate::structure::ValuedStructure;
use crate::tuple::{checked_pow, tuple_index, Odometer};
use crate::value::ExtendedRational;

/// Columns added to the master per round.
const COLUMNS_PER_ROUND: usize = 32;

#[derive(Debug, Clone)]
pub(crate) struct MapRow {
    pub symbol: usize,
    pub points: Vec<usize>,
    pub rhs: Rational,
}

pub(crate) struct MapSystem<'a> {
    pub target: &'a ValuedStructure,
    pub n_points: usize,
    pub rows: Vec<MapRow>,
}

pub(crate) enum MapOutcome {
    /// Maps with positive weights summing to one, sorted by table.
    Feasible(Vec<(Vec<usize>, Rational)>),
    /// Nonnegative row multipliers with `y·c_g - y·b >= 1` for every
    /// admissible `g`, with equality for some `g`; all zero when no map is
    /// admissible at all.
    Infeasible(Vec<Rational>),
}

/// Scaled lookup tables for fast exact pricing.
enum Tables {
    Int { tables: Vec<Vec<Option<i128>>>, scale: i128 },
    Exact,
}

fn lcm_checked(a: i128, b: i128) -> Option<i128> {
    let g = a.gcd(&b);
    (a / g).checked_mul(b)
}

fn int_tables(target: &ValuedStructure) -> Tables {
    let mut scale: i128 = 1;
    for t in target.tables() {
        for v in t.iter().filter_map(ExtendedRational::finite) {
            let Some((_, d)) = v.small_parts() else {
                return Tables::Exact;
            };
            match lcm_checked(scale, d as i128) {
                Some(l) if l < (1i128 << 62) => scale = l,
                _ => return Tables::Exact,
            }
        }
    }
    let tables = target
        .tables()
        .iter()
        .map(|t| {
            t.iter()
                .map(|v| {
                    v.finite().map(|r| {
                        let (n, d) = r.small_parts().expect("checked above");
                        n as i128 * (scale / d as i128)
                    })
                })
                .collect()
        })
        .collect();
    Tables::Int { tables, scale }
}

struct Scan<N> {
    /// Up to `COLUMNS_PER_ROUND` admissible columns with value below the
    /// threshold, smallest first, ties by enumeration order.
    candidates: Vec<Vec<usize>>,
    /// Least value over admissible columns.
    min_value: Option<N>,
}

impl MapSystem<'_> {
    fn column_count(&self) -> Option<usize> {
        checked_pow(self.target.domain_size(), self.n_points)
    }

    fn entry(&self, row: &MapRow, g: &[usize], img: &mut Vec<usize>) -> ExtendedRational {
        img.clear();
        img.extend(row.points.iter().map(|&p| g[p]));
        self.target.table(row.symbol)[tuple_index(img, self.target.domain_size())].clone()
    }

    /// `None` when some row gets an infinite entry.
    pub fn column(&self, g: &[usize]) -> Option<Vec<Rational>> {
        let mut img = Vec::new();
        self.rows
            .iter()
            .map(|r| self.entry(r, g, &mut img).into_finite())
            .collect()
    }

    fn admissible(&self, g: &[usize], crisp_rows: &[usize], img: &mut Vec<usize>) -> bool {
        crisp_rows
            .iter()
            .all(|&r| self.entry(&self.rows[r], g, img).is_finite())
    }

    fn crisp_rows(&self) -> Vec<usize> {
        let crisp: Vec<bool> = self
            .target
            .tables()
            .iter()
            .map(|t| t.iter().any(ExtendedRational::is_infinite))
            .collect();
        (0..self.rows.len()).filter(|&r| crisp[self.rows[r].symbol]).collect()
    }

    /// Enumerates every column once, scoring it with `Σ w_r · table_r(g)`.
    /// Returns `None` if `mul_add` overflows.
    fn scan<N: Ord + Clone>(
        &self,
        weights: &[(usize, N)],
        tables: &[Vec<Option<N>>],
        zero: N,
        threshold: &N,
        crisp_rows: &[usize],
        mul_add: impl Fn(&N, &N, &N) -> Option<N>,
    ) -> Option<Scan<N>> {
        let d = self.target.domain_size();
        let mut heap: BinaryHeap<(N, u128, Vec<usize>)> = BinaryHeap::new();
        let mut min_value: Option<N> = None;
        let mut odo = Odometer::new(d, self.n_points);
        let mut img = Vec::new();
        let mut order: u128 = 0;
        'columns: while let Some(g) = odo.next_tuple() {
            order += 1;
            let mut s = zero.clone();
            for (r, w) in weights {
                let row = &self.rows[*r];
                let idx = row.points.iter().fold(0, |acc, &p| acc * d + g[p]);
                match &tables[row.symbol][idx] {
                    None => continue 'columns,
                    Some(t) => s = mul_add(&s, w, t)?,
                }
            }
            let below = s < *threshold;
            let improves = min_value.as_ref().is_none_or(|m| s < *m);
            let competitive =
                below && (heap.len() < COLUMNS_PER_ROUND || heap.peek().is_some_and(|top| s < top.0));
            if !(improves || competitive) {
                continue;
            }
            if !self.admissible(g, crisp_rows, &mut img) {
                continue;
            }
            if improves {
                min_value = Some(s.clone());
            }
            if competitive {
                heap.push((s, order, g.to_vec()));
                if heap.len() > COLUMNS_PER_ROUND {
                    heap.pop();
                }
            }
        }
        let candidates = heap.into_sorted_vec().into_iter().map(|(_, _, g)| g).collect();
        Some(Scan { candidates, min_value })
    }

    /// Candidates with `u·c_g < z` and the exact `min_g u·c_g`.
    fn price(
        &self,
        tables: &Tables,
        u: &[Rational],
        z: &Rational,
        crisp_rows: &[usize],
    ) -> (Vec<Vec<usize>>, Option<Rational>) {
        if let Tables::Int { tables: int_tables, scale } = tables {
            if let Some(res) = self.price_int(int_tables, *scale, u, z, crisp_rows) {
                return res;
            }
        }
        let exact: Vec<Vec<Option<Rational>>> = self
            .target
            .tables()
            .iter()
            .map(|t| t.iter().map(|v| v.finite().cloned()).collect())
            .collect();
        let weights: Vec<(usize, Rational)> = u
            .iter()
            .enumerate()
            .filter(|(_, w)| !w.is_zero())
            .map(|(r, w)| (r, w.clone()))
            .collect();
        let scan = self
            .scan(&weights, &exact, Rational::zero(), z, crisp_rows, |s, w, t| Some(s + w * t))
            .expect("exact arithmetic cannot overflow");
        (scan.candidates, scan.min_value)
    }

    fn price_int(
        &self,
        tables: &[Vec<Option<i128>>],
        scale: i128,
        u: &[Rational],
        z: &Rational,
        crisp_rows: &[usize],
    ) -> Option<(Vec<Vec<usize>>, Option<Rational>)> {
        let mut den: i128 = 1;
        for w in u.iter().filter(|w| !w.is_zero()) {
            let (_, d) = w.small_parts()?;
            den = lcm_checked(den, d as i128).filter(|l| *l < (1i128 << 62))?;
        }
        let weights: Vec<(usize, i128)> = u
            .iter()
            .enumerate()
            .filter(|(_, w)| !w.is_zero())
            .map(|(r, w)| {
                let (n, d) = w.small_parts().expect("checked above");
                Some((r, (n as i128).checked_mul(den / d as i128)?))
            })
            .collect::<Option<_>>()?;
        // value(g) = S_g / (den * scale); S_g < z * den * scale iff S_g < ceil(...)
        let total = den.checked_mul(scale)?;
        let (zn, zd) = z.small_parts()?;
        let prod = (zn as i128).checked_mul(total)?;
        let threshold = Integer::div_ceil(&prod, &(zd as i128));
        let scan = self.scan(&weights, tables, 0i128, &threshold, crisp_rows, |s, w, t| {
            w.checked_mul(*t).and_then(|p| s.checked_add(p))
        })?;
        let min = scan.min_value.map(|s| Rational::from_i128_ratio(s, total));
        Some((scan.candidates, min))
    }

    fn first_admissible(&self, crisp_rows: &[usize]) -> Option<Vec<usize>> {
        let mut odo = Odometer::new(self.target.domain_size(), self.n_points);
        let mut img = Vec::new();
        while let Some(g) = odo.next_tuple() {
            if self.admissible(g, crisp_rows, &mut img) {
                return Some(g.to_vec());
            }
        }
        None
    }
}

struct Master {
    t: Rational,
    omega: Vec<Rational>,
    u: Vec<Rational>,
    z: Rational,
}

fn read_master(sol: &LpSolution, m: usize) -> Result<Master> {
    if sol.status != LpStatus::Optimal {
        return Err(Error::Internal("elastic master LP is not optimal".into()));
    }
    let duals = sol.dual_or_farkas.as_ref().expect("optimal solutions carry duals");
    // variable 0 is t, then one weight per column
    Ok(Master {
        t: sol.values[0].clone(),
        omega: sol.values[1..].to_vec(),
        u: duals[..m].iter().map(|y| -y).collect(),
        z: duals[m].clone(),
    })
}

fn column_terms(column: &[Rational]) -> impl Iterator<Item = (usize, Rational)> + '_ {
    let m = column.len();
    column.iter().cloned().enumerate().chain(std::iter::once((m, Rational::one())))
}

/// Elastic master `min t` over the first column, kept warm for later ones.
fn start_master(sys: &MapSystem, first: &[Rational]) -> Result<(WarmStart, LpSolution)> {
    let mut lp = LinearProgram::new(Sense::Minimize);
    let t = lp.add_variable("t", Some(Rational::zero()), None);
    for row in &sys.rows {
        lp.add_constraint([(t, -Rational::one())], Relation::Le, row.rhs.clone());
    }
    lp.add_constraint(std::iter::empty(), Relation::Eq, Rational::one());
    lp.set_objective([(t, Rational::one())]);
    lp.add_column("w0", Some(Rational::zero()), None, Rational::zero(), column_terms(first))?;
    WarmStart::new(lp)
}

/// Decides the system; `what` names it in budget errors.
pub(crate) fn solve_map_system(sys: &MapSystem, budget: u128, what: &str) -> Result<MapOutcome> {
    let count = sys.column_count().map_or(u128::MAX, |c| c as u128);
    if count > budget {
        return Err(Error::BudgetExceeded {
            what: what.to_string(),
            required: count,
            budget,
        });
    }
    let crisp_rows = sys.crisp_rows();
    let Some(first) = sys.first_admissible(&crisp_rows) else {
        return Ok(MapOutcome::Infeasible(vec![Rational::zero(); sys.rows.len()]));
    };
    let tables = int_tables(sys.target);
    let m = sys.rows.len();
    let (mut master_lp, mut sol) = start_master(sys, &sys.column(&first).expect("admissible column"))?;
    let mut maps = vec![first];
    loop {
        let master = read_master(&sol, m)?;
        let (candidates, min_value) = sys.price(&tables, &master.u, &master.z, &crisp_rows);
        if !candidates.is_empty() {
            for g in candidates {
                debug_assert!(!maps.contains(&g));
                let col = sys.column(&g).expect("admissible column");
                master_lp.add_column(format!("w{}", maps.len()), Rational::zero(), column_terms(&col))?;
                maps.push(g);
            }
            sol = master_lp.resolve()?;
            continue;
        }
        if master.t.is_zero() {
            let mut out: Vec<(Vec<usize>, Rational)> = maps
                .into_iter()
                .zip(master.omega)
                .filter(|(_, w)| w.is_positive())
                .collect();
            out.sort();
            return Ok(MapOutcome::Feasible(out));
        }
        let min_value = min_value.expect("an admissible column exists");
        let ub: Rational = master.u.iter().zip(&sys.rows).map(|(u, r)| u * &r.rhs).sum();
        let gap = min_value - ub;
        if !gap.is_positive() {
            return Err(Error::Internal("column generation ended without a separating dual".into()));
        }
        return Ok(MapOutcome::Infeasible(master.u.iter().map(|u| u / &gap).collect()));
    }
}

/// `min over admissible g of (y·c_g - y·b)` by plain enumeration in exact
/// arithmetic, or `None` if no map is admissible.
pub(crate) fn farkas_margin(sys: &MapSystem, y: &[Rational], budget: u128) -> Result<Option<Rational>> {
    let count = sys.column_count().map_or(u128::MAX, |c| c as u128);
    if count > budget {
        return Err(Error::BudgetExceeded {
            what: "Farkas re-verification".into(),
            required: count,
            budget,
        });
    }
    let yb: Rational = y.iter().zip(&sys.rows).map(|(w, r)| w * &r.rhs).sum();
    let mut best: Option<Rational> = None;
    let mut odo = Odometer::new(sys.target.domain_size(), sys.n_points);
    while let Some(g) = odo.next_tuple() {
        let Some(col) = sys.column(g) else {
            continue;
        };
        let v: Rational = col.iter().zip(y).map(|(c, w)| c * w).sum::<Rational>() - &yb;
        if best.as_ref().is_none_or(|b| v < *b) {
            best = Some(v);
        }
    }
    Ok(best)
}
