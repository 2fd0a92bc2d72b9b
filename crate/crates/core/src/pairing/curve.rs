// SPDX-License-Identifier: Apache-2.0
//! Affine point arithmetic on `E: y^2 = x^3 + x` over `F_p`.

use num_bigint::BigUint;
use num_traits::Zero;

use super::field::PrimeField;

/// A point of `E(F_p)`; elements of the pairing group are the points of prime order `q`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum GroupElement {
    Identity,
    Affine { x: BigUint, y: BigUint },
}

impl GroupElement {
    pub fn is_identity(&self) -> bool {
        matches!(self, GroupElement::Identity)
    }

    pub(crate) fn coords(&self) -> Option<(&BigUint, &BigUint)> {
        match self {
            GroupElement::Identity => None,
            GroupElement::Affine { x, y } => Some((x, y)),
        }
    }
}

pub(crate) fn is_on_curve(f: &PrimeField, point: &GroupElement) -> bool {
    match point {
        GroupElement::Identity => true,
        GroupElement::Affine { x, y } => x < &f.p && y < &f.p && f.mul(y, y) == f.curve_rhs(x),
    }
}

pub(crate) fn negate(f: &PrimeField, point: &GroupElement) -> GroupElement {
    match point {
        GroupElement::Identity => GroupElement::Identity,
        GroupElement::Affine { x, y } => GroupElement::Affine {
            x: x.clone(),
            y: f.neg(y),
        },
    }
}

pub(crate) fn double(f: &PrimeField, point: &GroupElement) -> GroupElement {
    let Some((x, y)) = point.coords() else {
        return GroupElement::Identity;
    };
    if y.is_zero() {
        return GroupElement::Identity;
    }
    let Some(slope) = tangent_slope(f, x, y) else {
        return GroupElement::Identity;
    };
    chord_result(f, &slope, x, x, y)
}

pub(crate) fn add(f: &PrimeField, a: &GroupElement, b: &GroupElement) -> GroupElement {
    let Some((x1, y1)) = a.coords() else {
        return b.clone();
    };
    let Some((x2, y2)) = b.coords() else {
        return a.clone();
    };
    if x1 == x2 {
        if y1 == y2 {
            return double(f, a);
        }
        return GroupElement::Identity;
    }
    let slope = chord_slope(f, x1, y1, x2, y2).expect("distinct x coordinates");
    chord_result(f, &slope, x1, x2, y1)
}

pub(crate) fn scalar_mul(f: &PrimeField, point: &GroupElement, k: &BigUint) -> GroupElement {
    let Some((x, y)) = point.coords() else {
        return GroupElement::Identity;
    };
    let mut acc = Jacobian::identity();
    for bit in (0..k.bits()).rev() {
        acc = acc.double(f);
        if k.bit(bit) {
            acc = acc.add_affine(f, x, y);
        }
    }
    acc.to_affine(f)
}

/// `(X, Y, Z)` standing for `(X/Z^2, Y/Z^3)`; `Z = 0` is the identity.
#[derive(Clone, Debug)]
pub(crate) struct Jacobian {
    pub x: BigUint,
    pub y: BigUint,
    pub z: BigUint,
}

impl Jacobian {
    pub fn identity() -> Self {
        Self {
            x: BigUint::from(1u32),
            y: BigUint::from(1u32),
            z: BigUint::zero(),
        }
    }

    pub fn from_affine(x: &BigUint, y: &BigUint) -> Self {
        Self {
            x: x.clone(),
            y: y.clone(),
            z: BigUint::from(1u32),
        }
    }

    pub fn is_identity(&self) -> bool {
        self.z.is_zero()
    }

    /// `M = 3X^2 + Z^4`, the numerator of the tangent slope `M / 2YZ`.
    pub fn tangent_numerator(&self, f: &PrimeField) -> BigUint {
        let xx = f.mul(&self.x, &self.x);
        let zz = f.mul(&self.z, &self.z);
        f.add(&f.add(&f.add(&xx, &xx), &xx), &f.mul(&zz, &zz))
    }

    pub fn double(&self, f: &PrimeField) -> Self {
        if self.is_identity() || self.y.is_zero() {
            return Self::identity();
        }
        let m = self.tangent_numerator(f);
        self.double_with(f, &m)
    }

    /// Doubling given a precomputed `M`.
    pub fn double_with(&self, f: &PrimeField, m: &BigUint) -> Self {
        let yy = f.mul(&self.y, &self.y);
        let xyy = f.mul(&self.x, &yy);
        let s = f.add(&f.add(&xyy, &xyy), &f.add(&xyy, &xyy));
        let x3 = f.sub(&f.mul(m, m), &f.add(&s, &s));
        let yyyy = f.mul(&yy, &yy);
        let y4x8 = {
            let t = f.add(&yyyy, &yyyy);
            let t = f.add(&t, &t);
            f.add(&t, &t)
        };
        let y3 = f.sub(&f.mul(m, &f.sub(&s, &x3)), &y4x8);
        let yz = f.mul(&self.y, &self.z);
        Self {
            x: x3,
            y: y3,
            z: f.add(&yz, &yz),
        }
    }

    /// `(H, r)` with `H = x·Z^2 - X` and `r = y·Z^3 - Y`; the chord slope is `r / (H·Z)`.
    pub fn chord_terms(&self, f: &PrimeField, x: &BigUint, y: &BigUint) -> (BigUint, BigUint) {
        let zz = f.mul(&self.z, &self.z);
        let h = f.sub(&f.mul(x, &zz), &self.x);
        let r = f.sub(&f.mul(y, &f.mul(&zz, &self.z)), &self.y);
        (h, r)
    }

    pub fn add_affine(&self, f: &PrimeField, x: &BigUint, y: &BigUint) -> Self {
        if self.is_identity() {
            return Self::from_affine(x, y);
        }
        let (h, r) = self.chord_terms(f, x, y);
        if h.is_zero() {
            return if r.is_zero() { self.double(f) } else { Self::identity() };
        }
        self.add_with(f, &h, &r)
    }

    /// Mixed addition given precomputed `(H, r)` with `H != 0`.
    pub fn add_with(&self, f: &PrimeField, h: &BigUint, r: &BigUint) -> Self {
        let hh = f.mul(h, h);
        let hhh = f.mul(h, &hh);
        let v = f.mul(&self.x, &hh);
        let x3 = f.sub(&f.sub(&f.mul(r, r), &hhh), &f.add(&v, &v));
        let y3 = f.sub(&f.mul(r, &f.sub(&v, &x3)), &f.mul(&self.y, &hhh));
        Self {
            x: x3,
            y: y3,
            z: f.mul(&self.z, h),
        }
    }

    pub fn to_affine(&self, f: &PrimeField) -> GroupElement {
        if self.is_identity() {
            return GroupElement::Identity;
        }
        let zi = f.inv(&self.z).expect("nonzero z is invertible");
        let zi2 = f.mul(&zi, &zi);
        GroupElement::Affine {
            x: f.mul(&self.x, &zi2),
            y: f.mul(&self.y, &f.mul(&zi2, &zi)),
        }
    }
}

/// `(3x^2 + 1) / 2y`
pub(crate) fn tangent_slope(f: &PrimeField, x: &BigUint, y: &BigUint) -> Option<BigUint> {
    let x2 = f.mul(x, x);
    let num = f.add(&f.add(&f.add(&x2, &x2), &x2), &BigUint::from(1u32));
    let den = f.add(y, y);
    Some(f.mul(&num, &f.inv(&den)?))
}

/// `(y2 - y1) / (x2 - x1)`
pub(crate) fn chord_slope(f: &PrimeField, x1: &BigUint, y1: &BigUint, x2: &BigUint, y2: &BigUint) -> Option<BigUint> {
    let den = f.sub(x2, x1);
    Some(f.mul(&f.sub(y2, y1), &f.inv(&den)?))
}

/// Third intersection reflected: `x3 = s^2 - x1 - x2`, `y3 = s(x1 - x3) - y1`.
fn chord_result(f: &PrimeField, slope: &BigUint, x1: &BigUint, x2: &BigUint, y1: &BigUint) -> GroupElement {
    let x3 = f.sub(&f.sub(&f.mul(slope, slope), x1), x2);
    let y3 = f.sub(&f.mul(slope, &f.sub(x1, &x3)), y1);
    GroupElement::Affine { x: x3, y: y3 }
}

#[cfg(test)]
mod tests {
    use super::*;

    // p = 103 ≡ 3 mod 4, so #E(F_p) = p + 1 = 104.
    fn field() -> PrimeField {
        PrimeField::new(BigUint::from(103u32))
    }

    fn all_points(f: &PrimeField) -> alloc::vec::Vec<GroupElement> {
        let mut pts = alloc::vec![GroupElement::Identity];
        for x in 0u32..103 {
            for y in 0u32..103 {
                let pt = GroupElement::Affine {
                    x: BigUint::from(x),
                    y: BigUint::from(y),
                };
                if is_on_curve(f, &pt) {
                    pts.push(pt);
                }
            }
        }
        pts
    }

    #[test]
    fn supersingular_point_count() {
        let f = field();
        assert_eq!(all_points(&f).len(), 104);
    }

    #[test]
    fn group_law_closure_and_order() {
        let f = field();
        let pts = all_points(&f);
        let order = BigUint::from(104u32);
        for p in pts.iter().take(20) {
            for q in pts.iter().take(20) {
                let s = add(&f, p, q);
                assert!(is_on_curve(&f, &s));
                assert_eq!(s, add(&f, q, p));
            }
            assert!(scalar_mul(&f, p, &order).is_identity());
            assert!(add(&f, p, &negate(&f, p)).is_identity());
            let mut naive = GroupElement::Identity;
            for k in 0u32..12 {
                assert_eq!(scalar_mul(&f, p, &BigUint::from(k)), naive);
                naive = add(&f, &naive, p);
            }
        }
    }

    #[test]
    fn associativity_on_sample() {
        let f = field();
        let pts = all_points(&f);
        for a in pts.iter().step_by(7) {
            for b in pts.iter().step_by(11) {
                for c in pts.iter().step_by(13) {
                    let l = add(&f, &add(&f, a, b), c);
                    let r = add(&f, a, &add(&f, b, c));
                    assert_eq!(l, r);
                }
            }
        }
    }
}
