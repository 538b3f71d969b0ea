//! Exact arithmetic in the field Q(alpha), alpha = sqrt(2 + 2 sqrt 2),
//! which contains every matrix entry of the octagonal side-pairing
//! isometries: cos/sin of multiples of pi/4 and cosh/sinh of the
//! octagon inradius all lie in it (sqrt 2 = (alpha^2 - 2)/2,
//! cosh r = alpha^2 / 2, sinh r = alpha). Minimal polynomial
//! x^4 - 4 x^2 - 4.
//!
//! Working here makes the deck representation of the surface group
//! exact: the defining relation holds identically, so identity tests on
//! isometries are decided by exact comparison with zero round-off. Only
//! addition, multiplication and Lorentz transposes are ever needed, so
//! no field division is implemented.

use num_rational::BigRational;
use num_traits::{FromPrimitive, ToPrimitive, Zero};

/// Numeric value of alpha, for projecting exact data to f64 geometry.
pub const ALPHA: f64 = 2.197368226935623;

/// Element c0 + c1 a + c2 a^2 + c3 a^3 in the power basis of alpha.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FieldElem([BigRational; 4]);

impl FieldElem {
    pub fn zero() -> Self {
        FieldElem(std::array::from_fn(|_| BigRational::zero()))
    }

    pub fn one() -> Self {
        Self::from_integer(1)
    }

    pub fn from_integer(n: i64) -> Self {
        let mut c = Self::zero();
        c.0[0] = BigRational::from_i64(n).expect("small integer");
        c
    }

    pub fn from_ratio(num: i64, den: i64) -> Self {
        let mut c = Self::zero();
        c.0[0] = BigRational::new(num.into(), den.into());
        c
    }

    /// alpha itself.
    pub fn alpha() -> Self {
        let mut c = Self::zero();
        c.0[1] = BigRational::from_i64(1).unwrap();
        c
    }

    /// q * alpha^k for small rational q.
    pub fn monomial(num: i64, den: i64, k: usize) -> Self {
        let mut c = Self::zero();
        c.0[k] = BigRational::new(num.into(), den.into());
        c
    }

    /// sqrt 2 = (alpha^2 - 2) / 2.
    pub fn sqrt2() -> Self {
        let mut c = Self::zero();
        c.0[0] = BigRational::from_i64(-1).unwrap();
        c.0[2] = BigRational::new(1.into(), 2.into());
        c
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|c| c.is_zero())
    }

    pub fn add(&self, o: &Self) -> Self {
        FieldElem(std::array::from_fn(|i| &self.0[i] + &o.0[i]))
    }

    pub fn sub(&self, o: &Self) -> Self {
        FieldElem(std::array::from_fn(|i| &self.0[i] - &o.0[i]))
    }

    pub fn neg(&self) -> Self {
        FieldElem(std::array::from_fn(|i| -self.0[i].clone()))
    }

    /// Product, reduced by alpha^4 = 4 alpha^2 + 4 (hence
    /// alpha^5 = 4 alpha^3 + 4 alpha, alpha^6 = 20 alpha^2 + 16).
    pub fn mul(&self, o: &Self) -> Self {
        let mut raw = vec![BigRational::zero(); 7];
        for i in 0..4 {
            if self.0[i].is_zero() {
                continue;
            }
            for j in 0..4 {
                if o.0[j].is_zero() {
                    continue;
                }
                raw[i + j] = &raw[i + j] + &self.0[i] * &o.0[j];
            }
        }
        let four = BigRational::from_i64(4).unwrap();
        let c6 = raw[6].clone();
        raw[2] = &raw[2] + &c6 * BigRational::from_i64(20).unwrap();
        raw[0] = &raw[0] + &c6 * BigRational::from_i64(16).unwrap();
        let c5 = raw[5].clone();
        raw[3] = &raw[3] + &c5 * &four;
        raw[1] = &raw[1] + &c5 * &four;
        let c4 = raw[4].clone();
        raw[2] = &raw[2] + &c4 * &four;
        raw[0] = &raw[0] + &c4 * &four;
        FieldElem(std::array::from_fn(|i| raw[i].clone()))
    }

    pub fn to_f64(&self) -> f64 {
        let mut acc = 0.0;
        for c in self.0.iter().rev() {
            acc = acc * ALPHA + c.to_f64().unwrap_or(f64::NAN);
        }
        acc
    }
}

/// 3x3 matrix over Q(alpha); used for exact Lorentz isometries.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FieldMat(pub [[FieldElem; 3]; 3]);

impl FieldMat {
    pub fn identity() -> Self {
        FieldMat(std::array::from_fn(|i| {
            std::array::from_fn(|j| {
                if i == j {
                    FieldElem::one()
                } else {
                    FieldElem::zero()
                }
            })
        }))
    }

    pub fn mul(&self, o: &Self) -> Self {
        FieldMat(std::array::from_fn(|i| {
            std::array::from_fn(|j| {
                let mut acc = FieldElem::zero();
                for k in 0..3 {
                    acc = acc.add(&self.0[i][k].mul(&o.0[k][j]));
                }
                acc
            })
        }))
    }

    /// Inverse of a Lorentz isometry: J M^T J, J = diag(1,1,-1). Exact
    /// and division-free, valid only for matrices preserving the form.
    pub fn lorentz_inverse(&self) -> Self {
        FieldMat(std::array::from_fn(|i| {
            std::array::from_fn(|j| {
                if (i == 2) ^ (j == 2) {
                    self.0[j][i].neg()
                } else {
                    self.0[j][i].clone()
                }
            })
        }))
    }

    pub fn is_identity(&self) -> bool {
        let id = Self::identity();
        (0..3).all(|i| (0..3).all(|j| self.0[i][j] == id.0[i][j]))
    }

    /// Check M^T J M = J exactly.
    pub fn is_lorentz(&self) -> bool {
        let j = |i: usize| {
            if i == 2 {
                FieldElem::from_integer(-1)
            } else {
                FieldElem::one()
            }
        };
        for p in 0..3 {
            for q in 0..3 {
                let mut acc = FieldElem::zero();
                for k in 0..3 {
                    acc = acc.add(&self.0[k][p].mul(&j(k)).mul(&self.0[k][q]));
                }
                let want = if p == q { j(p) } else { FieldElem::zero() };
                if acc != want {
                    return false;
                }
            }
        }
        true
    }

    pub fn to_f64(&self) -> [[f64; 3]; 3] {
        std::array::from_fn(|i| std::array::from_fn(|j| self.0[i][j].to_f64()))
    }
}

/// Rotation by k * pi/4 about the origin (k taken mod 8). Entries are
/// 0, +-1 or +-sqrt2/2, all in the field.
pub fn rotation_eighth(k: i64) -> FieldMat {
    let k = k.rem_euclid(8);
    let half_sqrt2 = FieldElem::monomial(1, 4, 2).add(&FieldElem::from_ratio(-1, 2));
    let (cos, sin) = match k {
        0 => (FieldElem::one(), FieldElem::zero()),
        1 => (half_sqrt2.clone(), half_sqrt2.clone()),
        2 => (FieldElem::zero(), FieldElem::one()),
        3 => (half_sqrt2.neg(), half_sqrt2.clone()),
        4 => (FieldElem::from_integer(-1), FieldElem::zero()),
        5 => (half_sqrt2.neg(), half_sqrt2.neg()),
        6 => (FieldElem::zero(), FieldElem::from_integer(-1)),
        _ => (half_sqrt2.clone(), half_sqrt2.neg()),
    };
    FieldMat([
        [cos.clone(), sin.neg(), FieldElem::zero()],
        [sin, cos, FieldElem::zero()],
        [FieldElem::zero(), FieldElem::zero(), FieldElem::one()],
    ])
}

/// Boost along x through +-(octagon inradius): cosh r = alpha^2/2,
/// sinh r = alpha.
pub fn boost_inradius(sign: i64) -> FieldMat {
    let c = FieldElem::monomial(1, 2, 2);
    let s = if sign >= 0 {
        FieldElem::alpha()
    } else {
        FieldElem::alpha().neg()
    };
    FieldMat([
        [c.clone(), FieldElem::zero(), s.clone()],
        [FieldElem::zero(), FieldElem::one(), FieldElem::zero()],
        [s, FieldElem::zero(), c],
    ])
}

/// Exact isometry carrying ordered side (v_j, v_{j+1}) of the base
/// octagon onto (v_{k+1}, v_k): rotate side j to the x axis, flip
/// across the far side of the inradius, rotate out to side k.
pub fn exact_side_pairing(j: i64, k: i64) -> FieldMat {
    rotation_eighth(k)
        .mul(&boost_inradius(1))
        .mul(&rotation_eighth(4))
        .mul(&boost_inradius(-1))
        .mul(&rotation_eighth(-j))
}

/// Exact deck matrices of the four standard generators, solved from the
/// side-pairing words read off the octagon's corner walk:
/// side(2->0) = a b' a', side(3->1) = (ab) a (ab)',
/// side(6->4) = (abABc) d' (abABc)', side(7->5) = abABc.
pub fn exact_surface_generators() -> [FieldMat; 4] {
    let ha = exact_side_pairing(2, 0);
    let hb = exact_side_pairing(3, 1);
    let hc = exact_side_pairing(6, 4);
    let hd = exact_side_pairing(7, 5);
    let ma = ha.mul(&hb).mul(&ha.lorentz_inverse());
    let mb = ma.lorentz_inverse().mul(&ha.lorentz_inverse()).mul(&ma);
    let md = hd.lorentz_inverse().mul(&hc.lorentz_inverse()).mul(&hd);
    let mc = mb
        .mul(&ma)
        .mul(&mb.lorentz_inverse())
        .mul(&ma.lorentz_inverse())
        .mul(&hd);
    [ma, mb, mc, md]
}
