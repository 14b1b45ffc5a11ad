//! Row-major enumeration of tuples over `{0, .., d-1}`.
//!
//! Index of a tuple `t` of length `k` is `sum t[i] * d^(k-1-i)`; the last
//! coordinate varies fastest.

/// `d^k`, or `None` on overflow.
pub fn checked_pow(d: usize, k: usize) -> Option<usize> {
    let mut acc: usize = 1;
    for _ in 0..k {
        acc = acc.checked_mul(d)?;
    }
    Some(acc)
}

pub fn tuple_index(tuple: &[usize], d: usize) -> usize {
    tuple.iter().fold(0, |acc, &t| acc * d + t)
}

pub fn tuple_at(mut index: usize, d: usize, k: usize) -> Vec<usize> {
    let mut t = vec![0; k];
    for slot in t.iter_mut().rev() {
        *slot = index % d;
        index /= d;
    }
    t
}

/// Odometer over `d^k` tuples in row-major order; reuses one buffer.
#[derive(Debug, Clone)]
pub struct Odometer {
    d: usize,
    current: Vec<usize>,
    started: bool,
    done: bool,
}

impl Odometer {
    pub fn new(d: usize, k: usize) -> Self {
        Odometer {
            d,
            current: vec![0; k],
            started: false,
            done: d == 0 && k > 0,
        }
    }

    /// Advances and returns the next tuple, or `None` when exhausted.
    pub fn next_tuple(&mut self) -> Option<&[usize]> {
        if self.done {
            return None;
        }
        if !self.started {
            self.started = true;
            return Some(&self.current);
        }
        for i in (0..self.current.len()).rev() {
            self.current[i] += 1;
            if self.current[i] < self.d {
                return Some(&self.current);
            }
            self.current[i] = 0;
        }
        self.done = true;
        None
    }
}

/// All tuples in `{0..d}^k`, row-major.
pub fn tuples(d: usize, k: usize) -> impl Iterator<Item = Vec<usize>> {
    let mut odo = Odometer::new(d, k);
    std::iter::from_fn(move || odo.next_tuple().map(|t| t.to_vec()))
}
