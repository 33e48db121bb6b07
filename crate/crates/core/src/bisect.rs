//! Bracketing of eigenvalues from a monotone counting function.

use alloc::vec;
use alloc::vec::Vec;

/// Splits `[a, b)` until every eigenvalue counted by `count_below` is isolated,
/// then hands each single-root bracket to `refine`.
///
/// `count_below(x)` must return the number of eigenvalues strictly below `x`.
/// Brackets that reach width `tol` (or float resolution) while still holding
/// several eigenvalues emit their midpoint once per eigenvalue.
pub(crate) fn isolate<C, R>(count_below: &C, a: f64, b: f64, tol: f64, mut refine: R) -> Vec<f64>
where
    C: Fn(f64) -> usize,
    R: FnMut(f64, f64, usize) -> f64,
{
    if !(a < b) {
        return Vec::new();
    }
    let na = count_below(a);
    let nb = count_below(b).max(na);
    let mut found = Vec::with_capacity(nb - na);
    let mut stack = vec![(a, b, na, nb)];
    while let Some((a, b, na, nb)) = stack.pop() {
        let k = nb - na;
        if k == 0 {
            continue;
        }
        if k == 1 {
            found.push(refine(a, b, na));
            continue;
        }
        let mid = a + 0.5 * (b - a);
        if b - a <= tol || !(a < mid && mid < b) {
            found.extend(core::iter::repeat_n(mid, k));
            continue;
        }
        let nm = count_below(mid).clamp(na, nb);
        stack.push((mid, b, nm, nb));
        stack.push((a, mid, na, nm));
    }
    found
}

/// Plain count bisection of a bracket `[a, b)` holding the eigenvalue with
/// index `below` (zero based).
pub(crate) fn refine_by_count<C>(
    count_below: &C,
    mut a: f64,
    mut b: f64,
    below: usize,
    tol: f64,
) -> f64
where
    C: Fn(f64) -> usize,
{
    loop {
        let mid = a + 0.5 * (b - a);
        if b - a <= tol || !(a < mid && mid < b) {
            return mid;
        }
        if count_below(mid) > below {
            b = mid;
        } else {
            a = mid;
        }
    }
}

/// Eigenvalue with the given zero-based index inside `[lower, upper)`.
pub(crate) fn by_index<C>(count_below: &C, lower: f64, upper: f64, index: usize, tol: f64) -> f64
where
    C: Fn(f64) -> usize,
{
    refine_by_count(count_below, lower, upper, index, tol)
}
