// SPDX-License-Identifier: Apache-2.0
//! Arithmetic in `F_p` and its quadratic extension `F_p[i] / (i^2 + 1)`.
//!
//! `p ≡ 3 (mod 4)` is assumed throughout, so `-1` is a non-residue and the
//! Frobenius map on `F_p2` is complex conjugation.

use num_bigint::BigUint;
use num_traits::{One, Zero};

#[derive(Clone, Debug, PartialEq, Eq)]
pub(crate) struct PrimeField {
    pub(crate) p: BigUint,
    /// `(p + 1) / 4`, the square-root exponent.
    sqrt_exp: BigUint,
}

impl PrimeField {
    pub(crate) fn new(p: BigUint) -> Self {
        let sqrt_exp = (&p + 1u32) >> 2u32;
        Self { p, sqrt_exp }
    }

    pub(crate) fn add(&self, a: &BigUint, b: &BigUint) -> BigUint {
        let s = a + b;
        if s >= self.p {
            s - &self.p
        } else {
            s
        }
    }

    pub(crate) fn sub(&self, a: &BigUint, b: &BigUint) -> BigUint {
        if a >= b {
            a - b
        } else {
            &self.p - (b - a)
        }
    }

    pub(crate) fn neg(&self, a: &BigUint) -> BigUint {
        if a.is_zero() {
            BigUint::zero()
        } else {
            &self.p - a
        }
    }

    pub(crate) fn mul(&self, a: &BigUint, b: &BigUint) -> BigUint {
        (a * b) % &self.p
    }

    pub(crate) fn inv(&self, a: &BigUint) -> Option<BigUint> {
        a.modinv(&self.p)
    }

    /// Square root if `a` is a quadratic residue.
    pub(crate) fn sqrt(&self, a: &BigUint) -> Option<BigUint> {
        let root = a.modpow(&self.sqrt_exp, &self.p);
        (self.mul(&root, &root) == *a).then_some(root)
    }

    /// `x^3 + x`, the right-hand side of the curve equation.
    pub(crate) fn curve_rhs(&self, x: &BigUint) -> BigUint {
        let x2 = self.mul(x, x);
        self.add(&self.mul(&x2, x), x)
    }
}

/// Element `re + im·i` of `F_p2`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub(crate) struct Fp2 {
    pub(crate) re: BigUint,
    pub(crate) im: BigUint,
}

impl Fp2 {
    pub(crate) fn one() -> Self {
        Self {
            re: BigUint::one(),
            im: BigUint::zero(),
        }
    }

    pub(crate) fn is_one(&self) -> bool {
        self.re.is_one() && self.im.is_zero()
    }

    pub(crate) fn mul(&self, other: &Self, f: &PrimeField) -> Self {
        // Karatsuba: (a + bi)(c + di) = (ac - bd) + ((a + b)(c + d) - ac - bd)i
        let ac = f.mul(&self.re, &other.re);
        let bd = f.mul(&self.im, &other.im);
        let cross = f.mul(&f.add(&self.re, &self.im), &f.add(&other.re, &other.im));
        Self {
            re: f.sub(&ac, &bd),
            im: f.sub(&f.sub(&cross, &ac), &bd),
        }
    }

    pub(crate) fn square(&self, f: &PrimeField) -> Self {
        // (a + bi)^2 = (a + b)(a - b) + 2ab·i
        let re = f.mul(&f.add(&self.re, &self.im), &f.sub(&self.re, &self.im));
        let ab = f.mul(&self.re, &self.im);
        Self {
            re,
            im: f.add(&ab, &ab),
        }
    }

    pub(crate) fn conjugate(&self, f: &PrimeField) -> Self {
        Self {
            re: self.re.clone(),
            im: f.neg(&self.im),
        }
    }

    pub(crate) fn inv(&self, f: &PrimeField) -> Option<Self> {
        let norm = f.add(&f.mul(&self.re, &self.re), &f.mul(&self.im, &self.im));
        let norm_inv = f.inv(&norm)?;
        Some(Self {
            re: f.mul(&self.re, &norm_inv),
            im: f.mul(&f.neg(&self.im), &norm_inv),
        })
    }

    pub(crate) fn pow(&self, exp: &BigUint, f: &PrimeField) -> Self {
        let mut acc = Self::one();
        for bit in (0..exp.bits()).rev() {
            acc = acc.square(f);
            if exp.bit(bit) {
                acc = acc.mul(self, f);
            }
        }
        acc
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn field() -> PrimeField {
        // 10007 ≡ 3 mod 4
        PrimeField::new(BigUint::from(10007u32))
    }

    fn el(re: u32, im: u32) -> Fp2 {
        Fp2 {
            re: BigUint::from(re),
            im: BigUint::from(im),
        }
    }

    #[test]
    fn fp2_mul_matches_schoolbook() {
        let f = field();
        let a = el(1234, 5678);
        let b = el(9000, 17);
        let p = 10007i64;
        let (ar, ai, br, bi) = (1234i64, 5678i64, 9000i64, 17i64);
        let re = ((ar * br - ai * bi) % p + p) % p;
        let im = ((ar * bi + ai * br) % p + p) % p;
        assert_eq!(a.mul(&b, &f), el(re as u32, im as u32));
        assert_eq!(a.square(&f), a.mul(&a, &f));
    }

    #[test]
    fn fp2_inverse_and_frobenius() {
        let f = field();
        let a = el(321, 4000);
        let inv = a.inv(&f).unwrap();
        assert!(a.mul(&inv, &f).is_one());
        // a^p is the conjugate when p ≡ 3 mod 4
        assert_eq!(a.pow(&f.p, &f), a.conjugate(&f));
    }

    #[test]
    fn sqrt_roundtrip() {
        let f = field();
        for x in 1u32..200 {
            let sq = f.mul(&BigUint::from(x), &BigUint::from(x));
            let r = f.sqrt(&sq).unwrap();
            assert!(r == BigUint::from(x) || r == f.neg(&BigUint::from(x)));
        }
        // -1 is a non-residue
        assert!(f.sqrt(&f.neg(&BigUint::one())).is_none());
    }
}
