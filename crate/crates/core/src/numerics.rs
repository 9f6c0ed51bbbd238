//! Scalar root finding and maximization used by the vendor optimizers.

/// Absolute tolerance on first-order conditions.
pub const FOC_TOLERANCE: f64 = 1e-9;
pub const MAX_ROOT_ITERATIONS: usize = 200;

/// Safeguarded Newton on a bracket `[lo, hi]` where `f` changes sign.
///
/// Newton steps use `df`; any step leaving the current bracket, or failing
/// to halve the residual, is replaced by bisection. Stops when
/// `|f| ≤ tol` or the bracket collapses.
pub fn safeguarded_newton(
    f: impl Fn(f64) -> f64,
    df: impl Fn(f64) -> f64,
    mut lo: f64,
    mut hi: f64,
    tol: f64,
) -> f64 {
    let mut f_lo = f(lo);
    if f_lo == 0.0 {
        return lo;
    }
    if f(hi) == 0.0 {
        return hi;
    }
    let mut x = 0.5 * (lo + hi);
    let mut fx = f(x);
    for _ in 0..MAX_ROOT_ITERATIONS {
        if fx.abs() <= tol || hi - lo <= f64::EPSILON * hi.abs().max(1.0) {
            break;
        }
        if (fx > 0.0) == (f_lo > 0.0) {
            lo = x;
            f_lo = fx;
        } else {
            hi = x;
        }
        let d = df(x);
        let newton = x - fx / d;
        let candidate = if d != 0.0 && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        let fc = f(candidate);
        if fc.abs() > 0.5 * fx.abs() && candidate == newton {
            x = 0.5 * (lo + hi);
            fx = f(x);
        } else {
            x = candidate;
            fx = fc;
        }
    }
    x
}

/// Central finite difference.
pub fn central_difference(f: impl Fn(f64) -> f64, x: f64, h: f64) -> f64 {
    (f(x + h) - f(x - h)) / (2.0 * h)
}

/// Golden-section search for a maximum of a unimodal `f` on `[lo, hi]`.
pub fn golden_section_max(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    let inv_phi = (5.0_f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    for _ in 0..300 {
        if hi - lo <= tol {
            break;
        }
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = f(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = f(x1);
        }
    }
    let mid = 0.5 * (lo + hi);
    [lo, mid, hi]
        .into_iter()
        .max_by(|a, b| f(*a).total_cmp(&f(*b)))
        .unwrap_or(mid)
}

/// Evenly spaced grid of `intervals + 1` points on `[lo, hi]`.
pub fn linspace(lo: f64, hi: f64, intervals: usize) -> Vec<f64> {
    let h = (hi - lo) / intervals as f64;
    (0..=intervals)
        .map(|i| {
            if i == intervals {
                hi
            } else {
                lo + i as f64 * h
            }
        })
        .collect()
}

/// A sign change of a sampled function between two adjacent grid points.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SignChange {
    pub lo: f64,
    pub hi: f64,
    /// `true` when the function goes from positive to negative.
    pub falling: bool,
}

/// Sign changes of `f` across `grid`. Exact zeros at grid points count as
/// a change on the interval to their right.
pub fn sign_changes(f: impl Fn(f64) -> f64, grid: &[f64]) -> Vec<SignChange> {
    let values: Vec<f64> = grid.iter().map(|&t| f(t)).collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i + 1 < grid.len() {
        let (a, b) = (values[i], values[i + 1]);
        if (a > 0.0 && b <= 0.0) || (a < 0.0 && b >= 0.0) {
            out.push(SignChange {
                lo: grid[i],
                hi: grid[i + 1],
                falling: a > 0.0,
            });
            // skip over an exact zero so it is not counted twice
            if b == 0.0 {
                i += 1;
            }
        }
        i += 1;
    }
    out
}

/// Neumaier compensated sum.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
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

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn newton_finds_sqrt_two() {
        let r = safeguarded_newton(|x| x * x - 2.0, |x| 2.0 * x, 0.0, 2.0, 1e-14);
        assert!((r - 2.0_f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn newton_survives_bad_derivative() {
        // derivative deliberately wrong; bisection must carry it
        let r = safeguarded_newton(|x| x.powi(3) - 0.1, |_| 0.0, 0.0, 1.0, 1e-12);
        assert!((r.powi(3) - 0.1).abs() <= 1e-12);
    }

    #[test]
    fn golden_section_quadratic() {
        let x = golden_section_max(|x| -(x - 0.3) * (x - 0.3), 0.0, 1.0, 1e-12);
        assert!((x - 0.3).abs() < 1e-6);
    }

    #[test]
    fn sign_changes_counts_each_root_once() {
        let grid = linspace(0.0, 4.0, 8);
        let changes = sign_changes(|x| (x - 1.0) * (x - 3.0), &grid);
        assert_eq!(changes.len(), 2);
        assert!(changes[0].falling);
        assert!(!changes[1].falling);
    }

    #[test]
    fn compensated_sum_beats_naive() {
        let mut s = CompensatedSum::default();
        s.add(1e16);
        for _ in 0..1000 {
            s.add(1.0);
        }
        s.add(-1e16);
        assert_eq!(s.value(), 1000.0);
    }
}
