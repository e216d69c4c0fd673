//! Small dense linear solves on caller-provided buffers.
//!
//! Systems here are at most (d+1)x(d+1) with d <= 8, so a plain partial-pivot
//! elimination on the stack beats any general-purpose matrix library.

/// Solve `a * x = b` in place (`a` row-major `n`×`n`, solution left in `b`).
/// Returns false when a pivot is exactly zero; near-degenerate systems are the
/// caller's responsibility (exact predicates guard nondegeneracy upstream).
pub(crate) fn solve_in_place(n: usize, a: &mut [f64], b: &mut [f64]) -> bool {
    debug_assert_eq!(a.len(), n * n);
    debug_assert_eq!(b.len(), n);
    for k in 0..n {
        let mut piv = k;
        let mut best = a[k * n + k].abs();
        for r in (k + 1)..n {
            let v = a[r * n + k].abs();
            if v > best {
                piv = r;
                best = v;
            }
        }
        if best == 0.0 {
            return false;
        }
        if piv != k {
            for c in k..n {
                a.swap(k * n + c, piv * n + c);
            }
            b.swap(k, piv);
        }
        let d = a[k * n + k];
        for r in (k + 1)..n {
            let f = a[r * n + k] / d;
            if f != 0.0 {
                for c in (k + 1)..n {
                    a[r * n + c] -= f * a[k * n + c];
                }
                b[r] -= f * b[k];
            }
            a[r * n + k] = 0.0;
        }
    }
    for k in (0..n).rev() {
        let mut s = b[k];
        for c in (k + 1)..n {
            s -= a[k * n + c] * b[c];
        }
        b[k] = s / a[k * n + k];
    }
    true
}

/// Determinant by partial-pivot elimination (destroys `a`).
pub(crate) fn det(n: usize, a: &mut [f64]) -> f64 {
    debug_assert_eq!(a.len(), n * n);
    let mut sign = 1.0;
    for k in 0..n {
        let mut piv = k;
        let mut best = a[k * n + k].abs();
        for r in (k + 1)..n {
            let v = a[r * n + k].abs();
            if v > best {
                piv = r;
                best = v;
            }
        }
        if best == 0.0 {
            return 0.0;
        }
        if piv != k {
            for c in k..n {
                a.swap(k * n + c, piv * n + c);
            }
            sign = -sign;
        }
        let d = a[k * n + k];
        for r in (k + 1)..n {
            let f = a[r * n + k] / d;
            for c in (k + 1)..n {
                a[r * n + c] -= f * a[k * n + c];
            }
        }
    }
    let mut out = sign;
    for k in 0..n {
        out *= a[k * n + k];
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_a_known_system() {
        let mut a = [2.0, 1.0, 1.0, 3.0];
        let mut b = [5.0, 10.0];
        assert!(solve_in_place(2, &mut a, &mut b));
        assert!((b[0] - 1.0).abs() < 1e-12 && (b[1] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn det_of_permutation() {
        let mut a = [0.0, 1.0, 0.0, 0.0, 0.0, 1.0, 1.0, 0.0, 0.0];
        assert!((det(3, &mut a) - 1.0).abs() < 1e-15);
    }
}
