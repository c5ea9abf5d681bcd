//! Small numerical helpers: compensated summation with a thread-count
//! independent reduction order, and bracketed root finding.

use rayon::prelude::*;

/// Fixed chunk length for parallel reductions. Chunk boundaries depend only on
/// the data length, so partial sums are combined in the same order no matter
/// how many worker threads rayon uses.
pub const REDUCTION_CHUNK: usize = 2048;

/// Neumaier's variant of Kahan summation.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    compensation: f64,
}

impl CompensatedSum {
    pub fn add(&mut self, value: f64) {
        let t = self.sum + value;
        if self.sum.abs() >= value.abs() {
            self.compensation += (self.sum - t) + value;
        } else {
            self.compensation += (value - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.compensation
    }
}

/// Sums `K` per-item quantities over `items`, reproducibly.
pub fn reduce_sums<T, const K: usize, F>(items: &[T], f: F) -> [f64; K]
where
    T: Sync,
    F: Fn(&T) -> [f64; K] + Sync,
{
    let partials: Vec<[f64; K]> = items
        .par_chunks(REDUCTION_CHUNK)
        .map(|chunk| {
            let mut acc = [CompensatedSum::default(); K];
            for item in chunk {
                let v = f(item);
                for (a, x) in acc.iter_mut().zip(v) {
                    a.add(x);
                }
            }
            acc.map(|a| a.value())
        })
        .collect();
    let mut total = [CompensatedSum::default(); K];
    for p in partials {
        for (t, x) in total.iter_mut().zip(p) {
            t.add(x);
        }
    }
    total.map(|t| t.value())
}

/// Bisection for a sign change of `f` on `[lo, hi]`.
///
/// Returns `None` when `f(lo)` and `f(hi)` have the same strict sign.
pub fn bisect<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64, x_tol: f64) -> Option<f64> {
    let mut f_lo = f(lo);
    let f_hi = f(hi);
    if f_lo == 0.0 {
        return Some(lo);
    }
    if f_hi == 0.0 {
        return Some(hi);
    }
    if f_lo.signum() == f_hi.signum() {
        return None;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi || hi - lo <= x_tol {
            break;
        }
        let f_mid = f(mid);
        if f_mid == 0.0 {
            return Some(mid);
        }
        if f_mid.signum() == f_lo.signum() {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    Some(0.5 * (lo + hi))
}

/// First root of `f` on `[lo, hi]`: scan `n` equal sub-intervals for a sign
/// change, then bisect inside the first one found.
pub fn first_root<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, n: usize, x_tol: f64) -> Option<f64> {
    let h = (hi - lo) / n as f64;
    let mut a = lo;
    let mut fa = f(a);
    for i in 1..=n {
        let b = if i == n { hi } else { lo + h * i as f64 };
        let fb = f(b);
        if fa == 0.0 {
            return Some(a);
        }
        if fa.signum() != fb.signum() {
            return bisect(&f, a, b, x_tol);
        }
        a = b;
        fa = fb;
    }
    None
}
