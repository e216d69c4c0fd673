//! Conservative interval arithmetic used as a floating-point filter for the
//! exact-sign predicates.
//!
//! Every operation widens the result by one ulp on each side. IEEE-754 ops
//! round to nearest (error at most half an ulp), and the gap to the previous
//! or next representable value is at least half an ulp, so the widened
//! interval always encloses the true real result.

use super::Sign;

#[derive(Clone, Copy, Debug)]
pub(crate) struct Interval {
    lo: f64,
    hi: f64,
}

impl Interval {
    #[inline]
    pub fn exact(x: f64) -> Self {
        Self { lo: x, hi: x }
    }

    /// Exact difference of two f64 values as an interval.
    #[inline]
    pub fn sub_exact(a: f64, b: f64) -> Self {
        let d = a - b;
        Self {
            lo: (d).next_down(),
            hi: (d).next_up(),
        }
    }

    #[inline]
    pub fn add(self, o: Self) -> Self {
        Self {
            lo: (self.lo + o.lo).next_down(),
            hi: (self.hi + o.hi).next_up(),
        }
    }

    #[inline]
    pub fn sub(self, o: Self) -> Self {
        Self {
            lo: (self.lo - o.hi).next_down(),
            hi: (self.hi - o.lo).next_up(),
        }
    }

    #[inline]
    pub fn mul(self, o: Self) -> Self {
        let a = self.lo * o.lo;
        let b = self.lo * o.hi;
        let c = self.hi * o.lo;
        let d = self.hi * o.hi;
        Self {
            lo: a.min(b).min(c).min(d).next_down(),
            hi: a.max(b).max(c).max(d).next_up(),
        }
    }

    /// Division; caller must ensure `o` does not contain zero.
    #[inline]
    pub fn div(self, o: Self) -> Self {
        debug_assert!(o.lo > 0.0 || o.hi < 0.0);
        let a = self.lo / o.lo;
        let b = self.lo / o.hi;
        let c = self.hi / o.lo;
        let d = self.hi / o.hi;
        Self {
            lo: a.min(b).min(c).min(d).next_down(),
            hi: a.max(b).max(c).max(d).next_up(),
        }
    }

    /// Smallest absolute value in the interval; 0 when it straddles zero.
    #[inline]
    pub fn mig(self) -> f64 {
        if self.lo > 0.0 {
            self.lo
        } else if self.hi < 0.0 {
            -self.hi
        } else {
            0.0
        }
    }

    /// The sign, when it is unambiguous.
    #[inline]
    pub fn sign(self) -> Option<Sign> {
        if self.lo > 0.0 {
            Some(Sign::Positive)
        } else if self.hi < 0.0 {
            Some(Sign::Negative)
        } else if self.lo == 0.0 && self.hi == 0.0 {
            Some(Sign::Zero)
        } else {
            None
        }
    }
}

/// Sign of the determinant of a row-major `n`×`n` interval matrix, or `None`
/// when interval Gaussian elimination cannot certify it.
pub(crate) fn det_sign(n: usize, m: &mut [Interval]) -> Option<Sign> {
    debug_assert_eq!(m.len(), n * n);
    let mut flip = false;
    for k in 0..n {
        let mut best = k;
        let mut best_mig = m[k * n + k].mig();
        for r in (k + 1)..n {
            let mg = m[r * n + k].mig();
            if mg > best_mig {
                best = r;
                best_mig = mg;
            }
        }
        if best_mig == 0.0 {
            // Every candidate pivot straddles zero: either singular or too
            // noisy to tell. The exact path decides.
            return None;
        }
        if best != k {
            for c in 0..n {
                m.swap(k * n + c, best * n + c);
            }
            flip = !flip;
        }
        for r in (k + 1)..n {
            let f = m[r * n + k].div(m[k * n + k]);
            for c in (k + 1)..n {
                m[r * n + c] = m[r * n + c].sub(f.mul(m[k * n + c]));
            }
            m[r * n + k] = Interval::exact(0.0);
        }
    }
    let mut sign = if flip { Sign::Negative } else { Sign::Positive };
    for k in 0..n {
        match m[k * n + k].sign() {
            Some(Sign::Positive) => {}
            Some(Sign::Negative) => sign = sign.flip(),
            _ => return None,
        }
    }
    Some(sign)
}
