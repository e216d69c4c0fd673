//! Exact determinant signs over dyadic rationals.
//!
//! Every f64 is a dyadic rational `mantissa * 2^exp`, so matrices built from
//! coordinate differences and their squared norms can be evaluated exactly:
//! rows are rescaled by positive powers of two into big integers and the
//! determinant sign comes from fraction-free (Bareiss) elimination.

use num_bigint::BigInt;

use super::Sign;

/// Exact dyadic rational: `mant * 2^exp`.
#[derive(Clone, Debug)]
pub(crate) struct Dyadic {
    mant: BigInt,
    exp: i64,
}

impl Dyadic {
    pub fn zero() -> Self {
        Self {
            mant: BigInt::from(0),
            exp: 0,
        }
    }

    /// Exact decomposition of a finite f64.
    pub fn from_f64(x: f64) -> Self {
        assert!(x.is_finite(), "non-finite coordinate in exact predicate");
        if x == 0.0 {
            return Self::zero();
        }
        let bits = x.to_bits();
        let neg = bits >> 63 == 1;
        let exp_field = ((bits >> 52) & 0x7ff) as i64;
        let frac = bits & ((1u64 << 52) - 1);
        let (mant, exp) = if exp_field == 0 {
            (frac, -1074)
        } else {
            (frac | (1u64 << 52), exp_field - 1075)
        };
        let mut mant = BigInt::from(mant);
        if neg {
            mant = -mant;
        }
        Self { mant, exp }
    }

    pub fn sub(&self, o: &Self) -> Self {
        let (a, b, exp) = Self::aligned(self, o);
        Self { mant: a - b, exp }
    }

    pub fn add(&self, o: &Self) -> Self {
        let (a, b, exp) = Self::aligned(self, o);
        Self { mant: a + b, exp }
    }

    pub fn mul(&self, o: &Self) -> Self {
        Self {
            mant: &self.mant * &o.mant,
            exp: self.exp + o.exp,
        }
    }

    fn is_zero(&self) -> bool {
        self.mant.sign() == num_bigint::Sign::NoSign
    }

    fn aligned(a: &Self, b: &Self) -> (BigInt, BigInt, i64) {
        if a.is_zero() {
            return (BigInt::from(0), b.mant.clone(), b.exp);
        }
        if b.is_zero() {
            return (a.mant.clone(), BigInt::from(0), a.exp);
        }
        let exp = a.exp.min(b.exp);
        let am = &a.mant << (a.exp - exp) as u32;
        let bm = &b.mant << (b.exp - exp) as u32;
        (am, bm, exp)
    }
}

/// Exact determinant sign of a row-major `n`×`n` dyadic matrix.
///
/// Rows are rescaled by positive powers of two (sign-preserving) into
/// integers, then reduced by Bareiss elimination whose divisions are exact.
pub(crate) fn det_sign(n: usize, m: &[Dyadic]) -> Sign {
    debug_assert_eq!(m.len(), n * n);
    let mut ints: Vec<BigInt> = Vec::with_capacity(n * n);
    for r in 0..n {
        let row = &m[r * n..(r + 1) * n];
        let min_exp = row
            .iter()
            .filter(|d| !d.is_zero())
            .map(|d| d.exp)
            .min()
            .unwrap_or(0);
        for d in row {
            if d.is_zero() {
                ints.push(BigInt::from(0));
            } else {
                ints.push(&d.mant << (d.exp - min_exp) as u32);
            }
        }
    }
    bareiss_sign(n, &mut ints)
}

fn bareiss_sign(n: usize, m: &mut [BigInt]) -> Sign {
    let zero = BigInt::from(0);
    let mut prev = BigInt::from(1);
    let mut flip = false;
    for k in 0..n {
        let pivot_row = match (k..n).find(|&r| m[r * n + k] != zero) {
            Some(r) => r,
            None => return Sign::Zero,
        };
        if pivot_row != k {
            for c in 0..n {
                m.swap(k * n + c, pivot_row * n + c);
            }
            flip = !flip;
        }
        for i in (k + 1)..n {
            for j in (k + 1)..n {
                let t = &m[i * n + j] * &m[k * n + k] - &m[i * n + k] * &m[k * n + j];
                m[i * n + j] = t / &prev;
            }
            m[i * n + k] = zero.clone();
        }
        prev = m[k * n + k].clone();
    }
    let s = match m[(n - 1) * n + (n - 1)].sign() {
        num_bigint::Sign::Plus => Sign::Positive,
        num_bigint::Sign::NoSign => Sign::Zero,
        num_bigint::Sign::Minus => Sign::Negative,
    };
    if flip {
        s.flip()
    } else {
        s
    }
}
