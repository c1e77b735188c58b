//! Projective 2×2 matrices over exact scalars and the group `G = ⟨P1, H⟩`.
//!
//! `P1 = [[1,6],[0,1]]` and `P2 = (1/4)·[[-5,27],[-3,13]]` are the parabolic
//! elements synthesized from the slope-1 and slope-2 cylinder decompositions;
//! `H = P2·P1` is hyperbolic with fixed points ±1, and `{P1, H}` is the
//! generator pair used for calculations. The fundamental domain `F` is the
//! intersection of the strip `|Re z| < 3` with the exterior of two half-disks
//! over `(-3, -1/3)` and `(1/3, 3)`; its cusps are `∞`, `3`, `-3` and the
//! interval `(-1/3, 1/3)` is a free side. Reduction moves a point into the
//! closure of `F` by strip translations and wall inversions, and membership
//! for a matrix `A` is decided by reducing `A·i` and checking that the
//! residual is projectively trivial.
//!
//! Projective canonical form: entries are scaled to primitive integer
//! coefficients, the determinant is scaled to 1 whenever it has a square root
//! in the entry field, and the first nonzero entry is made positive. All
//! group elements handled here normalize to determinant 1, so equality of
//! canonical forms is exactly equality in PSL(2, R).

use crate::exactnum::{rat, rat_int, ExactError, QuadRat, Rational};
use crate::surface::DirVec;
use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FuchsianError {
    #[error(transparent)]
    Exact(#[from] ExactError),
    #[error("matrix is degenerate (zero determinant)")]
    Degenerate,
    #[error("matrix has negative determinant; not orientation-preserving")]
    NegativeDeterminant,
    #[error("operation requires a parabolic element, got {0:?}")]
    NotParabolic(MatClass),
    #[error("operation requires an interior point of the upper half-plane")]
    NotInterior,
    #[error("fixed points live outside the supported quadratic fields: {0}")]
    UnsupportedField(String),
    #[error("the identity has no meaningful fixed-point set here")]
    IdentityInput,
    #[error("reduction exceeded {0} iterations; this indicates an arithmetic bug")]
    IterationCap(usize),
    #[error("word length {0} exceeds the guard {1}")]
    WordTooLong(usize, usize),
    #[error("reduction exponent does not fit a machine word")]
    ExponentOverflow,
}

/// Projective 2×2 matrix with positive determinant, stored in canonical form.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Mat2 {
    a: QuadRat,
    b: QuadRat,
    c: QuadRat,
    d: QuadRat,
}

impl Mat2 {
    /// Builds and canonicalizes; rejects mixed irrational fields and
    /// non-positive determinants.
    pub fn new(a: QuadRat, b: QuadRat, c: QuadRat, d: QuadRat) -> Result<Mat2, FuchsianError> {
        QuadRat::common_field(&[&a, &b, &c, &d])?;
        let det = &(&a * &d) - &(&b * &c);
        match det.signum() {
            0 => return Err(FuchsianError::Degenerate),
            -1 => return Err(FuchsianError::NegativeDeterminant),
            _ => {}
        }
        let mut m = Mat2 { a, b, c, d };
        m.canonicalize();
        Ok(m)
    }

    pub fn from_rationals(
        a: Rational,
        b: Rational,
        c: Rational,
        d: Rational,
    ) -> Result<Mat2, FuchsianError> {
        Mat2::new(a.into(), b.into(), c.into(), d.into())
    }

    /// Integer-entry convenience used for the named constants and in tests.
    pub fn from_i64(rows: [[i64; 2]; 2]) -> Mat2 {
        Mat2::from_rationals(
            rat_int(rows[0][0]),
            rat_int(rows[0][1]),
            rat_int(rows[1][0]),
            rat_int(rows[1][1]),
        )
        .expect("integer matrix with positive determinant")
    }

    pub fn identity() -> Mat2 {
        Mat2::from_i64([[1, 0], [0, 1]])
    }

    /// `P1 = [[1, 6], [0, 1]]`, the horizontal Dehn-twist parabolic.
    pub fn p1() -> Mat2 {
        Mat2::from_i64([[1, 6], [0, 1]])
    }

    /// `P2 = (1/4)·[[-5, 27], [-3, 13]]`, the slope-2 twist parabolic,
    /// exposed as the derived product `H·P1⁻¹`.
    pub fn p2() -> Mat2 {
        Mat2::h().mul(&Mat2::p1().inverse())
    }

    /// `H = P2·P1 ≡ (1/4)·[[5, 3], [3, 5]]`, hyperbolic with fixed points ±1.
    pub fn h() -> Mat2 {
        Mat2::from_i64([[5, 3], [3, 5]])
    }

    /// The elliptic element of order 4 fixing `i`: `(√2/2)·[[1, -1], [1, 1]]`.
    pub fn m_elliptic() -> Mat2 {
        let w = |n: i64| QuadRat::new(Rational::zero(), rat(n, 2), 2);
        Mat2::new(w(1), w(-1), w(1), w(1)).expect("elliptic generator is valid")
    }

    fn canonicalize(&mut self) {
        // Scale all 8 rational coefficients to primitive integers.
        let mut den_lcm = BigInt::one();
        for e in [&self.a, &self.b, &self.c, &self.d] {
            den_lcm = den_lcm.lcm(e.rational_part().denom());
            den_lcm = den_lcm.lcm(e.sqrt_coeff().denom());
        }
        let mut num_gcd = BigInt::zero();
        for e in [&self.a, &self.b, &self.c, &self.d] {
            let sa = e.rational_part() * Rational::from_integer(den_lcm.clone());
            let sb = e.sqrt_coeff() * Rational::from_integer(den_lcm.clone());
            num_gcd = num_gcd.gcd(&sa.to_integer()).gcd(&sb.to_integer());
        }
        let scale = QuadRat::from_rational(Rational::new(den_lcm, num_gcd));
        self.scale_by(&scale);

        // Scale the determinant to 1 when it has a square root in the field.
        let det = self.det();
        if let Some(root) = sqrt_in_field(&det, self.field()) {
            let inv = root.try_inv().expect("nonzero square root");
            self.scale_by(&inv);
        }

        // Sign: first nonzero entry positive.
        let sign = [&self.a, &self.b, &self.c, &self.d]
            .iter()
            .map(|e| e.signum())
            .find(|s| *s != 0)
            .unwrap_or(1);
        if sign < 0 {
            self.a = -&self.a;
            self.b = -&self.b;
            self.c = -&self.c;
            self.d = -&self.d;
        }
    }

    fn scale_by(&mut self, s: &QuadRat) {
        self.a = &self.a * s;
        self.b = &self.b * s;
        self.c = &self.c * s;
        self.d = &self.d * s;
    }

    pub fn entries(&self) -> [&QuadRat; 4] {
        [&self.a, &self.b, &self.c, &self.d]
    }

    /// Field tag of the entries; `None` for rational matrices.
    pub fn field(&self) -> Option<u64> {
        [&self.a, &self.b, &self.c, &self.d]
            .iter()
            .find_map(|e| e.field())
    }

    pub fn det(&self) -> QuadRat {
        &(&self.a * &self.d) - &(&self.b * &self.c)
    }

    pub fn trace(&self) -> QuadRat {
        &self.a + &self.d
    }

    pub fn is_identity(&self) -> bool {
        *self == Mat2::identity()
    }

    pub fn try_mul(&self, rhs: &Mat2) -> Result<Mat2, FuchsianError> {
        Mat2::new(
            &self.a.try_mul(&rhs.a)? + &self.b.try_mul(&rhs.c)?,
            &self.a.try_mul(&rhs.b)? + &self.b.try_mul(&rhs.d)?,
            &self.c.try_mul(&rhs.a)? + &self.d.try_mul(&rhs.c)?,
            &self.c.try_mul(&rhs.b)? + &self.d.try_mul(&rhs.d)?,
        )
    }

    /// Product; panics on a genuine field mismatch (checked contexts use
    /// [`Mat2::try_mul`]).
    pub fn mul(&self, rhs: &Mat2) -> Mat2 {
        self.try_mul(rhs).expect("compatible fields")
    }

    pub fn inverse(&self) -> Mat2 {
        Mat2::new(self.d.clone(), -&self.b, -&self.c, self.a.clone())
            .expect("inverse of a nondegenerate matrix")
    }

    pub fn pow(&self, e: i64) -> Mat2 {
        if e < 0 {
            return self.inverse().pow(-e);
        }
        let mut result = Mat2::identity();
        let mut base = self.clone();
        let mut e = e as u64;
        while e > 0 {
            if e & 1 == 1 {
                result = result.mul(&base);
            }
            base = base.mul(&base);
            e >>= 1;
        }
        result
    }

    /// Möbius action `(az + b)/(cz + d)` on the closed upper half-plane.
    pub fn apply(&self, z: &HPoint) -> Result<HPoint, FuchsianError> {
        match z {
            HPoint::Infinity => {
                if self.c.is_zero() {
                    Ok(HPoint::Infinity)
                } else {
                    Ok(HPoint::Boundary(self.a.try_div(&self.c)?))
                }
            }
            HPoint::Boundary(x) => {
                let den = &self.c.try_mul(x)? + &self.d;
                if den.is_zero() {
                    Ok(HPoint::Infinity)
                } else {
                    let num = &self.a.try_mul(x)? + &self.b;
                    Ok(HPoint::Boundary(&num / &den))
                }
            }
            HPoint::Interior { re, im } => {
                // (az + b)·conj(cz + d), expanded over re/im.
                let cx_d = &self.c.try_mul(re)? + &self.d;
                let cy = self.c.try_mul(im)?;
                let den = &(&cx_d * &cx_d) + &(&cy * &cy);
                let ax_b = &self.a.try_mul(re)? + &self.b;
                let re_num = &(&ax_b * &cx_d) + &(&self.a * &(&cy * im));
                let im_num = im.try_mul(&self.det())?;
                Ok(HPoint::Interior {
                    re: &re_num / &den,
                    im: &im_num / &den,
                })
            }
        }
    }
}

impl fmt::Display for Mat2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[[{}, {}], [{}, {}]]", self.a, self.b, self.c, self.d)
    }
}

impl Serialize for Mat2 {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut st = s.serialize_struct("Mat2", 4)?;
        st.serialize_field("a", &self.a)?;
        st.serialize_field("b", &self.b)?;
        st.serialize_field("c", &self.c)?;
        st.serialize_field("d", &self.d)?;
        st.end()
    }
}

impl<'de> Deserialize<'de> for Mat2 {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Raw {
            a: QuadRat,
            b: QuadRat,
            c: QuadRat,
            d: QuadRat,
        }
        let r = Raw::deserialize(d)?;
        Mat2::new(r.a, r.b, r.c, r.d).map_err(serde::de::Error::custom)
    }
}

/// Square root of `x` within the field `Q(√d)` tagged by `field`, if any.
fn sqrt_in_field(x: &QuadRat, field: Option<u64>) -> Option<QuadRat> {
    if x.signum() < 0 {
        return None;
    }
    if let Some(r) = x.as_rational() {
        let root = QuadRat::sqrt_rational(r).ok()?;
        return match (root.field(), field) {
            (None, _) => Some(root),
            (Some(f), Some(d)) if f == d => Some(root),
            _ => None,
        };
    }
    // x = A + B√d with B ≠ 0: look for (u + v√d)² = x with rational u, v.
    let d = x.radicand();
    let big_a = x.rational_part();
    let big_b = x.sqrt_coeff();
    let disc = big_a * big_a - big_b * big_b * rat_int(d as i64);
    let r = QuadRat::sqrt_rational(&disc).ok()?;
    let r = r.as_rational()?.clone();
    for sign in [1i64, -1] {
        let u_sq = (big_a + &r * rat_int(sign)) / rat_int(2);
        if u_sq < Rational::zero() {
            continue;
        }
        let u_root = QuadRat::sqrt_rational(&u_sq).ok()?;
        let Some(u) = u_root.as_rational() else {
            continue;
        };
        if u.is_zero() {
            continue;
        }
        let v = big_b / (u * rat_int(2));
        let candidate = QuadRat::new(u.clone(), v, d);
        if &candidate.try_mul(&candidate).ok()? == x && candidate.signum() > 0 {
            return Some(candidate);
        }
    }
    None
}

/// Point of the closed upper half-plane.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum HPoint {
    Interior { re: QuadRat, im: QuadRat },
    Boundary(QuadRat),
    Infinity,
}

impl HPoint {
    pub fn interior(re: QuadRat, im: QuadRat) -> Result<HPoint, FuchsianError> {
        re.join_field(&im)?;
        if im.signum() <= 0 {
            return Err(FuchsianError::NotInterior);
        }
        Ok(HPoint::Interior { re, im })
    }

    /// The base point `i` of the Dirichlet construction.
    pub fn base_i() -> HPoint {
        HPoint::Interior {
            re: QuadRat::from_int(0),
            im: QuadRat::from_int(1),
        }
    }

    pub fn boundary_int(x: i64) -> HPoint {
        HPoint::Boundary(QuadRat::from_int(x))
    }

    pub fn boundary_rat(x: Rational) -> HPoint {
        HPoint::Boundary(QuadRat::from_rational(x))
    }
}

impl fmt::Display for HPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            HPoint::Infinity => write!(f, "inf"),
            HPoint::Boundary(x) => write!(f, "{x}"),
            HPoint::Interior { re, im } => write!(f, "{re} + ({im})i"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MatClass {
    Identity,
    Parabolic,
    Elliptic,
    Hyperbolic,
}

/// Classification by the sign of `trace² − 4·det`; exact and scale-invariant.
pub fn classify(m: &Mat2) -> MatClass {
    if m.is_identity() {
        return MatClass::Identity;
    }
    match disc_of(m).signum() {
        0 => MatClass::Parabolic,
        1 => MatClass::Hyperbolic,
        _ => MatClass::Elliptic,
    }
}

fn disc_of(m: &Mat2) -> QuadRat {
    let t = m.trace();
    &(&t * &t) - &(&m.det() * &QuadRat::from_int(4))
}

/// Fixed points of the Möbius action: roots of `cz² + (d−a)z − b = 0`.
/// Parabolic: one boundary point; hyperbolic: two boundary points (sorted);
/// elliptic: the interior fixed point.
pub fn fixed_points(m: &Mat2) -> Result<Vec<HPoint>, FuchsianError> {
    let class = classify(m);
    if class == MatClass::Identity {
        return Err(FuchsianError::IdentityInput);
    }
    let [a, b, c, d] = m.entries();
    if c.is_zero() {
        let mut points = Vec::new();
        let diff = d.try_sub(a)?;
        if !diff.is_zero() {
            points.push(HPoint::Boundary(b.try_div(&diff)?));
        }
        points.push(HPoint::Infinity);
        return Ok(points);
    }
    let two_c = c.try_mul(&QuadRat::from_int(2))?;
    let a_minus_d = a.try_sub(d)?;
    match class {
        MatClass::Parabolic => Ok(vec![HPoint::Boundary(a_minus_d.try_div(&two_c)?)]),
        MatClass::Hyperbolic => {
            let disc = disc_of(m);
            let root = sqrt_in_field(&disc, m.field())
                .ok_or_else(|| FuchsianError::UnsupportedField(disc.to_string()))?;
            let mut points = vec![
                HPoint::Boundary(a_minus_d.try_add(&root)?.try_div(&two_c)?),
                HPoint::Boundary(a_minus_d.try_sub(&root)?.try_div(&two_c)?),
            ];
            points.sort_by(|p, q| match (p, q) {
                (HPoint::Boundary(x), HPoint::Boundary(y)) => {
                    x.partial_cmp(y).unwrap_or(Ordering::Equal)
                }
                _ => Ordering::Equal,
            });
            Ok(points)
        }
        MatClass::Elliptic => {
            let neg_disc = -&disc_of(m);
            let root = sqrt_in_field(&neg_disc, m.field())
                .ok_or_else(|| FuchsianError::UnsupportedField(neg_disc.to_string()))?;
            let re = a_minus_d.try_div(&two_c)?;
            let im_signed = root.try_div(&two_c)?;
            let im = if im_signed.signum() > 0 {
                im_signed
            } else {
                -&im_signed
            };
            Ok(vec![HPoint::Interior { re, im }])
        }
        MatClass::Identity => unreachable!(),
    }
}

/// Rotates a square-frame direction by −π/4: `(q, p) → (q+p, p−q)`, reduced.
pub fn frame_rotate(dir: DirVec) -> DirVec {
    DirVec::new(dir.q + dir.p, dir.p - dir.q).expect("rotation of a nonzero vector is nonzero")
}

/// Inverse of [`frame_rotate`]: `(q', p') → (q'−p', q'+p')`, reduced.
pub fn frame_unrotate(dir: DirVec) -> DirVec {
    DirVec::new(dir.q - dir.p, dir.q + dir.p).expect("rotation of a nonzero vector is nonzero")
}

/// Where a parabolic's eigen direction sits relative to the admissible cone.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DirectionStatus {
    /// Boundary fixed point outside `[-1, 1]` or at infinity.
    Allowed,
    /// Fixed point exactly ±1 (rotated-frame angle ±π/4).
    Boundary,
    /// Fixed point inside `(-1, 1)`; square-frame angle outside `[-π/4, π/4]`.
    Forbidden,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EigenDirection {
    /// Primitive integer eigenvector in the rotated frame, when rational.
    pub dir: Option<DirVec>,
    pub fixed_point: HPoint,
    pub status: DirectionStatus,
}

/// Eigen direction of a parabolic element, read off its boundary fixed point.
pub fn eigen_direction(m: &Mat2) -> Result<EigenDirection, FuchsianError> {
    let class = classify(m);
    if class != MatClass::Parabolic {
        return Err(FuchsianError::NotParabolic(class));
    }
    let fixed = fixed_points(m)?.remove(0);
    let (dir, status) = match &fixed {
        HPoint::Infinity => (Some(DirVec { q: 1, p: 0 }), DirectionStatus::Allowed),
        HPoint::Boundary(x) => {
            let dir = x.as_rational().and_then(|r| {
                let q = r.numer().to_i64()?;
                let p = r.denom().to_i64()?;
                let d = DirVec::new(q, p).ok()?;
                Some(if d.q < 0 || (d.q == 0 && d.p < 0) {
                    DirVec { q: -d.q, p: -d.p }
                } else {
                    d
                })
            });
            let one = QuadRat::from_int(1);
            let inside = x.partial_cmp(&-&one) == Some(Ordering::Greater)
                && x.partial_cmp(&one) == Some(Ordering::Less);
            let on_edge = *x == one || *x == -&one;
            let status = if inside {
                DirectionStatus::Forbidden
            } else if on_edge {
                DirectionStatus::Boundary
            } else {
                DirectionStatus::Allowed
            };
            (dir, status)
        }
        HPoint::Interior { .. } => unreachable!("parabolic fixed point is on the boundary"),
    };
    Ok(EigenDirection {
        dir,
        fixed_point: fixed,
        status,
    })
}

/// Walls of the fundamental domain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Wall {
    /// `Re z = -3`
    StripLeft,
    /// `Re z = 3`
    StripRight,
    /// Geodesic with endpoints `-3` and `-1/3`.
    InnerLeft,
    /// Geodesic with endpoints `1/3` and `3`.
    InnerRight,
}

/// Static description of the fundamental domain `F`.
#[derive(Debug, Clone)]
pub struct FundDomain {
    pub strip_bound: i64,
    /// Real endpoints of the two inner walls.
    pub inner_walls: [(Rational, Rational); 2],
    pub cusps: [HPoint; 3],
    /// Ideal boundary interval not paired to any wall.
    pub free_side: (Rational, Rational),
}

impl FundDomain {
    pub fn get() -> FundDomain {
        FundDomain {
            strip_bound: 3,
            inner_walls: [(rat_int(-3), rat(-1, 3)), (rat(1, 3), rat_int(3))],
            cusps: [
                HPoint::Infinity,
                HPoint::boundary_int(3),
                HPoint::boundary_int(-3),
            ],
            free_side: (rat(-1, 3), rat(1, 3)),
        }
    }
}

impl Serialize for FundDomain {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let pair = |p: &(Rational, Rational)| [p.0.to_string(), p.1.to_string()];
        let mut st = s.serialize_struct("FundDomain", 4)?;
        st.serialize_field("strip_bound", &self.strip_bound)?;
        st.serialize_field(
            "inner_walls",
            &[pair(&self.inner_walls[0]), pair(&self.inner_walls[1])],
        )?;
        st.serialize_field("cusps", &self.cusps)?;
        st.serialize_field("free_side", &pair(&self.free_side))?;
        st.end()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum DomainPosition {
    Inside,
    Boundary(Wall),
    Outside(Wall),
}

/// Exact membership of an interior point in `F`: compares `|Re z|` with 3 and
/// `|z−1|²` with `|z+1|²/4` and `4·|z+1|²` (the pullback of the annulus
/// `1/2 < |w| < 2` through the elliptic element fixing `i`).
pub fn in_fundamental_domain(z: &HPoint) -> Result<DomainPosition, FuchsianError> {
    let HPoint::Interior { re, im } = z else {
        return Err(FuchsianError::NotInterior);
    };
    let three = QuadRat::from_int(3);
    let one = QuadRat::from_int(1);
    let four = QuadRat::from_int(4);

    let re_vs_right = re.try_sub(&three)?.signum();
    let re_vs_left = re.try_add(&three)?.signum();
    if re_vs_right > 0 {
        return Ok(DomainPosition::Outside(Wall::StripRight));
    }
    if re_vs_left < 0 {
        return Ok(DomainPosition::Outside(Wall::StripLeft));
    }

    let dm = re.try_sub(&one)?;
    let dp = re.try_add(&one)?;
    let im2 = im.try_mul(im)?;
    let r2 = &dm.try_mul(&dm)? + &im2; // |z-1|²
    let s2 = &dp.try_mul(&dp)? + &im2; // |z+1|²
    let right_test = (&r2 * &four).try_sub(&s2)?.signum(); // < 0 inside right half-disk
    let left_test = r2.try_sub(&(&s2 * &four))?.signum(); // > 0 inside left half-disk
    if right_test < 0 {
        return Ok(DomainPosition::Outside(Wall::InnerRight));
    }
    if left_test > 0 {
        return Ok(DomainPosition::Outside(Wall::InnerLeft));
    }
    if re_vs_right == 0 {
        return Ok(DomainPosition::Boundary(Wall::StripRight));
    }
    if re_vs_left == 0 {
        return Ok(DomainPosition::Boundary(Wall::StripLeft));
    }
    if right_test == 0 {
        return Ok(DomainPosition::Boundary(Wall::InnerRight));
    }
    if left_test == 0 {
        return Ok(DomainPosition::Boundary(Wall::InnerLeft));
    }
    Ok(DomainPosition::Inside)
}

/// Generators of `G` as used in words.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Gen {
    P1,
    H,
}

impl Gen {
    fn matrix(self) -> Mat2 {
        match self {
            Gen::P1 => Mat2::p1(),
            Gen::H => Mat2::h(),
        }
    }
}

impl fmt::Display for Gen {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Gen::P1 => write!(f, "P1"),
            Gen::H => write!(f, "H"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Letter {
    pub gen: Gen,
    pub exp: i64,
}

/// Freely reduced word in `{P1, H}`: adjacent letters use distinct
/// generators and every exponent is nonzero.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Word {
    letters: Vec<Letter>,
}

impl Word {
    pub fn identity() -> Word {
        Word::default()
    }

    pub fn from_letters<I: IntoIterator<Item = (Gen, i64)>>(letters: I) -> Word {
        let mut w = Word::identity();
        for (gen, exp) in letters {
            w.push(gen, exp);
        }
        w
    }

    /// Appends `gen^exp`, merging and cancelling as needed.
    pub fn push(&mut self, gen: Gen, exp: i64) {
        if exp == 0 {
            return;
        }
        match self.letters.last_mut() {
            Some(last) if last.gen == gen => {
                last.exp += exp;
                if last.exp == 0 {
                    self.letters.pop();
                }
            }
            _ => self.letters.push(Letter { gen, exp }),
        }
    }

    pub fn is_identity(&self) -> bool {
        self.letters.is_empty()
    }

    pub fn letters(&self) -> &[Letter] {
        &self.letters
    }

    /// Length in the alphabet `{P1, P1⁻¹, H, H⁻¹}`: the sum of |exponent|.
    pub fn len(&self) -> u64 {
        self.letters.iter().map(|l| l.exp.unsigned_abs()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    pub fn inverse(&self) -> Word {
        Word::from_letters(self.letters.iter().rev().map(|l| (l.gen, -l.exp)))
    }

    pub fn concat(&self, rhs: &Word) -> Word {
        let mut w = self.clone();
        for l in &rhs.letters {
            w.push(l.gen, l.exp);
        }
        w
    }

    pub fn matrix(&self) -> Mat2 {
        self.letters.iter().fold(Mat2::identity(), |acc, l| {
            acc.mul(&l.gen.matrix().pow(l.exp))
        })
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.letters.is_empty() {
            return write!(f, "id");
        }
        for (i, l) in self.letters.iter().enumerate() {
            if i > 0 {
                write!(f, " ")?;
            }
            if l.exp == 1 {
                write!(f, "{}", l.gen)?;
            } else {
                write!(f, "{}^{}", l.gen, l.exp)?;
            }
        }
        Ok(())
    }
}

/// Result of reducing a point into the closed fundamental domain.
#[derive(Debug, Clone, Serialize)]
pub struct Reduction {
    /// Word with `word • input = point`.
    pub word: Word,
    pub point: HPoint,
    /// Walls crossed, in order of application.
    pub walls: Vec<Wall>,
}

const REDUCTION_CAP: usize = 10_000;

/// Moves `z` into the closure of `F`: strip translations by powers of `P1`,
/// then `H` or `H⁻¹` for whichever inner half-disk contains the point,
/// repeated until neither applies. Points on `Re z = 3` and on the right
/// inner wall count as reduced; their partners on the left are moved over
/// (half-open convention, so output words are deterministic).
pub fn reduce_to_domain(z: &HPoint) -> Result<Reduction, FuchsianError> {
    let HPoint::Interior { .. } = z else {
        return Err(FuchsianError::NotInterior);
    };
    let mut current = z.clone();
    let mut applied: Vec<(Gen, i64)> = Vec::new();
    let mut walls = Vec::new();
    let h = Mat2::h();
    let h_inv = h.inverse();

    for _ in 0..REDUCTION_CAP {
        // Translate Re into (-3, 3] with a power of P1.
        let HPoint::Interior { re, .. } = &current else {
            unreachable!()
        };
        let shift = re
            .try_add(&QuadRat::from_int(3))?
            .try_div(&QuadRat::from_int(6))?;
        let k = shift.ceil() - BigInt::one();
        if !k.is_zero() {
            let k_i64 = k.to_i64().ok_or(FuchsianError::ExponentOverflow)?;
            let p1_pow = Mat2::new(
                QuadRat::from_int(1),
                QuadRat::from_rational(rat_int(-6) * Rational::from_integer(k)),
                QuadRat::from_int(0),
                QuadRat::from_int(1),
            )?;
            current = p1_pow.apply(&current)?;
            applied.push((Gen::P1, -k_i64));
            walls.push(if k_i64 > 0 {
                Wall::StripRight
            } else {
                Wall::StripLeft
            });
        }

        match in_fundamental_domain(&current)? {
            DomainPosition::Outside(Wall::InnerRight) => {
                current = h_inv.apply(&current)?;
                applied.push((Gen::H, -1));
                walls.push(Wall::InnerRight);
            }
            DomainPosition::Outside(Wall::InnerLeft)
            | DomainPosition::Boundary(Wall::InnerLeft) => {
                current = h.apply(&current)?;
                applied.push((Gen::H, 1));
                walls.push(Wall::InnerLeft);
            }
            // Re = -3 cannot occur here: the normalization above maps it to
            // the paired wall Re = 3 directly.
            _ => {
                // Applied S1, S2, ..., Sn; the reducing word is Sn· ... ·S1.
                let word = Word::from_letters(applied.into_iter().rev());
                return Ok(Reduction {
                    word,
                    point: current,
                    walls,
                });
            }
        }
    }
    Err(FuchsianError::IterationCap(REDUCTION_CAP))
}

/// Verdict of the membership test.
#[derive(Debug, Clone, Serialize)]
#[serde(tag = "verdict", rename_all = "lowercase")]
pub enum Membership {
    /// `A ∈ G`, expressed by the returned word.
    Member { word: Word },
    /// `A ∉ G`; the non-identity residual `w·A` is the witness.
    NonMember { residual: Box<Mat2> },
}

impl Membership {
    pub fn is_member(&self) -> bool {
        matches!(self, Membership::Member { .. })
    }
}

/// Decides `A ∈ G` by reducing `A • i` and checking the residual exactly.
/// The exact residual check is what rules out an elliptic stabilizer of `i`
/// producing a false positive.
pub fn is_member(a: &Mat2) -> Result<Membership, FuchsianError> {
    let z0 = a.apply(&HPoint::base_i())?;
    let reduction = reduce_to_domain(&z0)?;
    let residual = reduction.word.matrix().try_mul(a)?;
    if residual.is_identity() {
        Ok(Membership::Member {
            word: reduction.word.inverse(),
        })
    } else {
        Ok(Membership::NonMember {
            residual: Box::new(residual),
        })
    }
}

const ENUMERATION_GUARD: usize = 12;

/// All freely reduced words of length 1..=max_len with their matrices. The
/// matrices are pairwise distinct projectively because `G` is free on the
/// generator pair.
pub fn enumerate_words(max_len: usize) -> Result<Vec<(Word, Mat2)>, FuchsianError> {
    if max_len > ENUMERATION_GUARD {
        return Err(FuchsianError::WordTooLong(max_len, ENUMERATION_GUARD));
    }
    let alphabet: [(Gen, i64); 4] = [(Gen::P1, 1), (Gen::P1, -1), (Gen::H, 1), (Gen::H, -1)];
    let mats: Vec<Mat2> = alphabet.iter().map(|(g, e)| g.matrix().pow(*e)).collect();
    let mut out = Vec::new();
    let mut stack: Vec<(Word, Mat2, Option<usize>)> =
        vec![(Word::identity(), Mat2::identity(), None)];
    while let Some((word, mat, last)) = stack.pop() {
        if word.len() as usize >= max_len {
            continue;
        }
        for (i, (g, e)) in alphabet.iter().enumerate() {
            // Skip the exact inverse of the previous letter: same generator
            // (index pair 0/1 or 2/3), opposite sign.
            if last == Some(i ^ 1) {
                continue;
            }
            let mut w = word.clone();
            w.push(*g, *e);
            let m = mat.mul(&mats[i]);
            out.push((w.clone(), m.clone()));
            stack.push((w, m, Some(i)));
        }
    }
    Ok(out)
}

const SCAN_GUARD: usize = 10;

/// Census entry for one parabolic found in the word scan.
#[derive(Debug, Clone, Serialize)]
pub struct ParabolicHit {
    pub word: Word,
    pub fixed_point: HPoint,
}

/// Result of scanning all words up to a length bound for parabolic elements
/// and checking that no fixed point falls inside `(-1, 1)`. Finite-length
/// evidence, not a proof.
#[derive(Debug, Clone, Serialize)]
pub struct ScanReport {
    pub max_len: usize,
    pub words_scanned: usize,
    pub parabolic_count: usize,
    /// Fixed-point value (display form) -> number of parabolic words fixing it.
    pub census: BTreeMap<String, usize>,
    pub violations: Vec<ParabolicHit>,
}

pub fn parabolic_direction_scan(max_len: usize) -> Result<ScanReport, FuchsianError> {
    if max_len > SCAN_GUARD {
        return Err(FuchsianError::WordTooLong(max_len, SCAN_GUARD));
    }
    let words = enumerate_words(max_len)?;
    let mut report = ScanReport {
        max_len,
        words_scanned: words.len(),
        parabolic_count: 0,
        census: BTreeMap::new(),
        violations: Vec::new(),
    };
    for (word, mat) in words {
        if classify(&mat) != MatClass::Parabolic {
            continue;
        }
        report.parabolic_count += 1;
        let fixed = fixed_points(&mat)?.remove(0);
        *report.census.entry(fixed.to_string()).or_default() += 1;
        if let HPoint::Boundary(x) = &fixed {
            let one = QuadRat::from_int(1);
            let inside = x.partial_cmp(&-&one) == Some(Ordering::Greater)
                && x.partial_cmp(&one) == Some(Ordering::Less);
            if inside {
                report.violations.push(ParabolicHit {
                    word,
                    fixed_point: fixed,
                });
            }
        }
    }
    Ok(report)
}

#[derive(Debug, Clone, Serialize)]
pub struct PairingCheck {
    pub name: String,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct SidePairingReport {
    pub checks: Vec<PairingCheck>,
}

impl SidePairingReport {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }
}

/// Checks that `P1` pairs the strip walls, `H` pairs the inner walls, the
/// diagonalization of `H` through the order-4 elliptic element holds, and the
/// three cusps are stabilized by parabolic elements.
pub fn verify_side_pairing() -> SidePairingReport {
    let mut checks = Vec::new();
    let mut push = |name: &str, pass: bool| {
        checks.push(PairingCheck {
            name: name.into(),
            pass,
        })
    };

    let p1 = Mat2::p1();
    let p2 = Mat2::p2();
    let h = Mat2::h();
    let m = Mat2::m_elliptic();

    for t in [1i64, 2] {
        let z = HPoint::interior(QuadRat::from_int(-3), QuadRat::from_int(t)).unwrap();
        let want = HPoint::interior(QuadRat::from_int(3), QuadRat::from_int(t)).unwrap();
        push(
            &format!("P1 maps -3+{t}i to 3+{t}i"),
            p1.apply(&z).map(|got| got == want).unwrap_or(false),
        );
    }

    let ends = [
        (HPoint::boundary_int(-3), HPoint::boundary_int(3)),
        (
            HPoint::boundary_rat(rat(-1, 3)),
            HPoint::boundary_rat(rat(1, 3)),
        ),
    ];
    for (from, to) in ends {
        push(
            &format!("H maps inner-wall endpoint {from} to {to}"),
            h.apply(&from).map(|got| got == to).unwrap_or(false),
        );
    }

    // Apex of the left inner wall lands on the right inner wall.
    let apex = HPoint::interior(
        QuadRat::from_rational(rat(-5, 3)),
        QuadRat::from_rational(rat(4, 3)),
    )
    .unwrap();
    let image = h.apply(&apex).unwrap();
    push(
        "H maps the left inner wall onto the right inner wall",
        matches!(
            in_fundamental_domain(&image),
            Ok(DomainPosition::Boundary(Wall::InnerRight))
        ),
    );

    let diag = m.inverse().mul(&h).mul(&m);
    let want = Mat2::from_rationals(rat_int(2), rat_int(0), rat_int(0), rat(1, 2)).unwrap();
    push(
        "conjugating H by the elliptic element gives diag(2, 1/2)",
        diag == want,
    );

    let cusp_cases = [
        (
            "P1 stabilizes the cusp at infinity",
            p1.clone(),
            HPoint::Infinity,
        ),
        (
            "P2 stabilizes the cusp at 3",
            p2.clone(),
            HPoint::boundary_int(3),
        ),
        (
            "P1^-1 P2 P1 stabilizes the cusp at -3",
            p1.inverse().mul(&p2).mul(&p1),
            HPoint::boundary_int(-3),
        ),
    ];
    for (name, mat, cusp) in cusp_cases {
        let parabolic = classify(&mat) == MatClass::Parabolic;
        let fixes = fixed_points(&mat)
            .map(|f| f == vec![cusp.clone()])
            .unwrap_or(false);
        push(name, parabolic && fixes);
    }

    SidePairingReport { checks }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    #[test]
    fn named_constants_match() {
        // H = P2 · P1 with the projective sign absorbed.
        let h = Mat2::p2().mul(&Mat2::p1());
        assert_eq!(h, Mat2::h());
        // P2 ≡ H·P1⁻¹ equals the explicit entries.
        let p2_explicit = Mat2::from_i64([[-5, 27], [-3, 13]]);
        assert_eq!(Mat2::p2(), p2_explicit);
        let h_inv = Mat2::h().inverse();
        assert_eq!(h_inv, Mat2::from_i64([[5, -3], [-3, 5]]));
    }

    #[test]
    fn canonical_form_is_projective_and_idempotent() {
        let a = Mat2::from_i64([[-5, 27], [-3, 13]]);
        let b = Mat2::from_rationals(rat(5, 4), rat(-27, 4), rat(3, 4), rat(-13, 4)).unwrap();
        assert_eq!(a, b);
        let [ea, eb, ec, ed] = a.entries();
        let again = Mat2::new(ea.clone(), eb.clone(), ec.clone(), ed.clone()).unwrap();
        assert_eq!(a, again, "canonicalization is idempotent");
        assert_eq!(a.det(), QuadRat::from_int(1), "determinant scales to 1");
    }

    #[test]
    fn construction_rejects_bad_determinants() {
        assert!(matches!(
            Mat2::from_rationals(rat_int(1), rat_int(2), rat_int(2), rat_int(4)),
            Err(FuchsianError::Degenerate)
        ));
        assert!(matches!(
            Mat2::from_rationals(rat_int(0), rat_int(1), rat_int(1), rat_int(0)),
            Err(FuchsianError::NegativeDeterminant)
        ));
    }

    #[test]
    fn mobius_examples() {
        let m = Mat2::m_elliptic();
        let apply_b = |mat: &Mat2, x: Rational| match mat.apply(&HPoint::boundary_rat(x)).unwrap() {
            HPoint::Boundary(v) => v,
            other => panic!("expected boundary, got {other}"),
        };
        assert_eq!(apply_b(&m, rat_int(-2)), QuadRat::from_int(3));
        assert_eq!(apply_b(&m, rat(-1, 2)), QuadRat::from_int(-3));
        assert_eq!(apply_b(&m, rat(1, 2)), QuadRat::from_rational(rat(-1, 3)));
        assert_eq!(apply_b(&m, rat_int(2)), QuadRat::from_rational(rat(1, 3)));

        assert_eq!(
            Mat2::p1().apply(&HPoint::Infinity).unwrap(),
            HPoint::Infinity
        );
        assert_eq!(m.apply(&HPoint::base_i()).unwrap(), HPoint::base_i());
    }

    #[test]
    fn mobius_rejects_mixed_fields() {
        let m = Mat2::m_elliptic(); // entries in Q(√2)
        let z = HPoint::Boundary(QuadRat::sqrt_int(5));
        assert!(matches!(
            m.apply(&z),
            Err(FuchsianError::Exact(ExactError::FieldMismatch(..)))
        ));
    }

    #[test]
    fn classification_examples() {
        assert_eq!(classify(&Mat2::p2()), MatClass::Parabolic);
        assert_eq!(classify(&Mat2::h()), MatClass::Hyperbolic);
        assert_eq!(classify(&Mat2::m_elliptic()), MatClass::Elliptic);
        assert_eq!(classify(&Mat2::identity()), MatClass::Identity);
    }

    #[test]
    fn fixed_point_examples() {
        assert_eq!(
            fixed_points(&Mat2::p2()).unwrap(),
            vec![HPoint::boundary_int(3)]
        );
        assert_eq!(
            fixed_points(&Mat2::h()).unwrap(),
            vec![HPoint::boundary_int(-1), HPoint::boundary_int(1)]
        );
        assert_eq!(
            fixed_points(&Mat2::m_elliptic()).unwrap(),
            vec![HPoint::base_i()]
        );
        assert_eq!(fixed_points(&Mat2::p1()).unwrap(), vec![HPoint::Infinity]);
    }

    #[test]
    fn eigen_direction_examples() {
        let p1 = eigen_direction(&Mat2::p1()).unwrap();
        assert_eq!(p1.dir, Some(DirVec { q: 1, p: 0 }));
        assert_eq!(p1.status, DirectionStatus::Allowed);

        let p2 = eigen_direction(&Mat2::p2()).unwrap();
        assert_eq!(p2.dir, Some(DirVec { q: 3, p: 1 }));
        assert_eq!(p2.fixed_point, HPoint::boundary_int(3));
        assert_eq!(p2.status, DirectionStatus::Allowed);

        // Parabolic with rotated-frame eigen direction at the -π/4 edge.
        let edge = Mat2::from_i64([[1, -1], [1, 3]]);
        let e = eigen_direction(&edge).unwrap();
        assert_eq!(e.fixed_point, HPoint::boundary_int(-1));
        assert_eq!(e.status, DirectionStatus::Boundary);
        assert_eq!(e.dir, Some(DirVec { q: 1, p: -1 }));

        assert!(matches!(
            eigen_direction(&Mat2::h()),
            Err(FuchsianError::NotParabolic(MatClass::Hyperbolic))
        ));

        // Irrational fixed point: no integer eigenvector, reported through
        // the fixed point alone. Parabolic fixing √2 with entries in Q(√2).
        let sqrt2 = QuadRat::sqrt_int(2);
        let irr = Mat2::new(
            QuadRat::from_int(1).try_add(&sqrt2).unwrap(),
            QuadRat::from_int(-2),
            QuadRat::from_int(1),
            QuadRat::from_int(1).try_sub(&sqrt2).unwrap(),
        )
        .unwrap();
        let e = eigen_direction(&irr).unwrap();
        assert_eq!(e.dir, None);
        assert_eq!(e.fixed_point, HPoint::Boundary(QuadRat::sqrt_int(2)));
        assert_eq!(e.status, DirectionStatus::Allowed);
    }

    #[test]
    fn frame_rotation_examples() {
        let d = |q, p| DirVec::new(q, p).unwrap();
        assert_eq!(frame_rotate(d(1, 1)), d(1, 0));
        assert_eq!(frame_rotate(d(1, 2)), d(3, 1));
        assert_eq!(frame_rotate(d(1, 4)), d(5, 3));
        assert_eq!(frame_rotate(d(2, 1)), d(3, -1));
        for v in [d(1, 1), d(1, 2), d(2, 1), d(5, 3)] {
            assert_eq!(frame_unrotate(frame_rotate(v)), v);
        }
    }

    #[test]
    fn domain_membership_examples() {
        assert_eq!(
            in_fundamental_domain(&HPoint::base_i()).unwrap(),
            DomainPosition::Inside
        );
        let z = HPoint::interior(QuadRat::from_int(1), QuadRat::from_int(1)).unwrap();
        assert_eq!(
            in_fundamental_domain(&z).unwrap(),
            DomainPosition::Outside(Wall::InnerRight)
        );
        let z = HPoint::interior(QuadRat::from_int(3), QuadRat::from_int(1)).unwrap();
        assert_eq!(
            in_fundamental_domain(&z).unwrap(),
            DomainPosition::Boundary(Wall::StripRight)
        );
    }

    #[test]
    fn reduction_examples() {
        let r = reduce_to_domain(&HPoint::base_i()).unwrap();
        assert!(r.word.is_identity());
        assert_eq!(r.point, HPoint::base_i());

        // P1 • i = 6 + i reduces by P1⁻¹.
        let z = HPoint::interior(QuadRat::from_int(6), QuadRat::from_int(1)).unwrap();
        let r = reduce_to_domain(&z).unwrap();
        assert_eq!(r.word, Word::from_letters([(Gen::P1, -1)]));
        assert_eq!(r.point, HPoint::base_i());

        // H • i reduces by H⁻¹.
        let hi = Mat2::h().apply(&HPoint::base_i()).unwrap();
        let r = reduce_to_domain(&hi).unwrap();
        assert_eq!(r.word, Word::from_letters([(Gen::H, -1)]));
        assert_eq!(r.point, HPoint::base_i());
    }

    #[test]
    fn reduction_of_ten_plus_i() {
        // 10 + i normalizes to -2 + i (inside the left half-disk), then H
        // carries it to (11 + 8i)/5, which lies in the closed domain.
        let z = HPoint::interior(QuadRat::from_int(10), QuadRat::from_int(1)).unwrap();
        let r = reduce_to_domain(&z).unwrap();
        assert_eq!(r.word, Word::from_letters([(Gen::H, 1), (Gen::P1, -2)]));
        let want = HPoint::interior(
            QuadRat::from_rational(rat(11, 5)),
            QuadRat::from_rational(rat(8, 5)),
        )
        .unwrap();
        assert_eq!(r.point, want);
        assert_eq!(r.walls, vec![Wall::StripRight, Wall::InnerLeft]);
        assert!(matches!(
            in_fundamental_domain(&r.point).unwrap(),
            DomainPosition::Inside | DomainPosition::Boundary(_)
        ));
        // Round trip: word • z = point.
        assert_eq!(r.word.matrix().apply(&z).unwrap(), r.point);
    }

    #[test]
    fn membership_examples() {
        match is_member(&Mat2::p1()).unwrap() {
            Membership::Member { word } => assert_eq!(word, Word::from_letters([(Gen::P1, 1)])),
            other => panic!("P1 is a member, got {other:?}"),
        }
        // Cusp stabilizer at -3: P1⁻¹ P2 P1 = P1⁻¹ H as a reduced word.
        let a = Mat2::p1().inverse().mul(&Mat2::p2()).mul(&Mat2::p1());
        match is_member(&a).unwrap() {
            Membership::Member { word } => {
                assert_eq!(word, Word::from_letters([(Gen::P1, -1), (Gen::H, 1)]))
            }
            other => panic!("P1^-1 P2 P1 is a member, got {other:?}"),
        }
        for bad in [
            Mat2::from_i64([[1, 1], [0, 1]]),
            Mat2::from_i64([[1, 3], [0, 1]]),
        ] {
            match is_member(&bad).unwrap() {
                Membership::NonMember { residual } => assert!(!residual.is_identity()),
                other => panic!("expected rejection, got {other:?}"),
            }
        }
    }

    /// Freely reduced random word over the single-step alphabet.
    fn random_word(rng: &mut StdRng, len: usize) -> Word {
        let alphabet = [(Gen::P1, 1i64), (Gen::P1, -1), (Gen::H, 1), (Gen::H, -1)];
        let mut letters: Vec<(Gen, i64)> = Vec::new();
        let mut last: Option<usize> = None;
        for _ in 0..len {
            loop {
                let i = rng.gen_range(0..4);
                if last == Some(i ^ 1) {
                    continue;
                }
                letters.push(alphabet[i]);
                last = Some(i);
                break;
            }
        }
        Word::from_letters(letters)
    }

    #[test]
    fn membership_round_trip_on_random_words() {
        let mut rng = StdRng::seed_from_u64(41);
        for _ in 0..200 {
            let len = rng.gen_range(1..=8);
            let w = random_word(&mut rng, len);
            let mat = w.matrix();
            match is_member(&mat).unwrap() {
                Membership::Member { word } => {
                    assert_eq!(word, w, "recovered word matches after free reduction")
                }
                Membership::NonMember { residual } => {
                    panic!("word {w} rejected with residual {residual}")
                }
            }
        }
    }

    #[test]
    fn enumeration_counts_and_contents() {
        let l1 = enumerate_words(1).unwrap();
        assert_eq!(l1.len(), 4);
        let mats: Vec<&Mat2> = l1.iter().map(|(_, m)| m).collect();
        assert!(mats.contains(&&Mat2::p1()));
        assert!(mats.contains(&&Mat2::p1().inverse()));
        assert!(mats.contains(&&Mat2::h()));
        assert!(mats.contains(&&Mat2::h().inverse()));

        let l2 = enumerate_words(2).unwrap();
        assert_eq!(l2.len(), 4 + 12, "4·3^(L-1) words per length");
        assert!(
            l2.iter().any(|(_, m)| *m == Mat2::p2()),
            "P2 = H·P1⁻¹ appears at length 2"
        );

        // The group is free: projective dedup removes nothing.
        let mut unique: Vec<String> = l2.iter().map(|(_, m)| m.to_string()).collect();
        unique.sort();
        unique.dedup();
        assert_eq!(unique.len(), l2.len());

        assert!(matches!(
            enumerate_words(13),
            Err(FuchsianError::WordTooLong(13, 12))
        ));
    }

    #[test]
    fn slope_two_twist_conjugates_to_p2() {
        // Rotating the twist [[1, 15/2], [0, 1]] by the angle with
        // sin = 1/√10, cos = 3/√10 gives P2; the √10 factors cancel exactly.
        let e = |num: i64| QuadRat::new(Rational::zero(), rat(num, 10), 10);
        let rot = Mat2::new(e(3), e(-1), e(1), e(3)).unwrap();
        assert_eq!(classify(&rot), MatClass::Elliptic);
        let twist = Mat2::from_rationals(rat_int(1), rat(15, 2), rat_int(0), rat_int(1)).unwrap();
        let conj = rot.mul(&twist).mul(&rot.inverse());
        assert_eq!(conj, Mat2::p2());
        assert!(conj.field().is_none(), "the irrational parts cancel");
    }

    #[test]
    fn short_parabolics_at_the_two_cusps_are_powers_of_the_generators() {
        // Enumerative check of the maximality statement: every parabolic word
        // of length <= 6 fixing ∞ is a power of P1, and every one fixing 3 is
        // a power of P2.
        let p1 = Mat2::p1();
        let p2 = Mat2::p2();
        for (word, mat) in enumerate_words(6).unwrap() {
            if classify(&mat) != MatClass::Parabolic {
                continue;
            }
            let fixed = fixed_points(&mat).unwrap().remove(0);
            let target = match &fixed {
                HPoint::Infinity => Some(&p1),
                HPoint::Boundary(x) if *x == QuadRat::from_int(3) => Some(&p2),
                _ => None,
            };
            if let Some(generator) = target {
                let is_power =
                    (1..=6i64).any(|k| generator.pow(k) == mat || generator.pow(-k) == mat);
                assert!(
                    is_power,
                    "{word} fixes {fixed} but is not a generator power"
                );
            }
        }
    }

    #[test]
    fn parabolic_scan_small() {
        let report = parabolic_direction_scan(2).unwrap();
        assert!(report.violations.is_empty());
        assert!(report.census.contains_key("inf"), "P1 fixes infinity");
        assert!(report.census.contains_key("3"), "P2 fixes 3");

        let l1 = parabolic_direction_scan(1).unwrap();
        assert_eq!(l1.parabolic_count, 2, "only P1^(±1) at length 1");

        let l4 = parabolic_direction_scan(4).unwrap();
        assert!(
            l4.violations.is_empty(),
            "no fixed point inside (-1,1) at length 4"
        );
    }

    #[test]
    fn side_pairing_passes() {
        let report = verify_side_pairing();
        for c in &report.checks {
            assert!(c.pass, "side-pairing check failed: {}", c.name);
        }
    }

    #[test]
    fn action_is_a_homomorphism() {
        let mut rng = StdRng::seed_from_u64(7);
        let samples = [
            HPoint::base_i(),
            HPoint::interior(
                QuadRat::from_rational(rat(3, 7)),
                QuadRat::from_rational(rat(2, 5)),
            )
            .unwrap(),
            HPoint::boundary_rat(rat(-4, 3)),
            HPoint::Infinity,
        ];
        for _ in 0..50 {
            let la = rng.gen_range(1..=5);
            let a = random_word(&mut rng, la).matrix();
            let lb = rng.gen_range(1..=5);
            let b = random_word(&mut rng, lb).matrix();
            let ab = a.mul(&b);
            for z in &samples {
                let lhs = ab.apply(z).unwrap();
                let rhs = a.apply(&b.apply(z).unwrap()).unwrap();
                assert_eq!(lhs, rhs, "group action composition");
            }
        }
    }

    #[test]
    fn classify_is_conjugation_invariant() {
        let mut rng = StdRng::seed_from_u64(11);
        let subjects = [Mat2::p1(), Mat2::p2(), Mat2::h(), Mat2::p1().inverse()];
        for _ in 0..60 {
            let lg = rng.gen_range(1..=6);
            let g = random_word(&mut rng, lg).matrix();
            for a in &subjects {
                let conj = g.mul(a).mul(&g.inverse());
                assert_eq!(classify(&conj), classify(a));
            }
        }
    }

    #[test]
    fn depth_one_tiling_is_disjoint() {
        // Translates of F by distinct short words are pairwise disjoint:
        // h⁻¹g moves interior sample points out of F.
        let samples = [
            HPoint::base_i(),
            HPoint::interior(QuadRat::from_int(2), QuadRat::from_int(2)).unwrap(),
            HPoint::interior(QuadRat::from_rational(rat(-3, 2)), QuadRat::from_int(2)).unwrap(),
        ];
        for z in &samples {
            assert_eq!(in_fundamental_domain(z).unwrap(), DomainPosition::Inside);
        }
        let mut elements = vec![(Word::identity(), Mat2::identity())];
        elements.extend(enumerate_words(2).unwrap());
        for (wg, g) in &elements {
            for (wh, h) in &elements {
                if wg == wh {
                    continue;
                }
                let rel = h.inverse().mul(g);
                for z in &samples {
                    let moved = rel.apply(z).unwrap();
                    assert!(
                        matches!(
                            in_fundamental_domain(&moved).unwrap(),
                            DomainPosition::Outside(_)
                        ),
                        "translates by {wg} and {wh} overlap at {z}"
                    );
                }
            }
        }
    }

    #[test]
    fn word_display_and_json() {
        let w = Word::from_letters([(Gen::P1, -2), (Gen::H, 1), (Gen::P1, 1)]);
        assert_eq!(w.to_string(), "P1^-2 H P1");
        assert_eq!(Word::identity().to_string(), "id");
        let json = serde_json::to_string(&w).unwrap();
        let back: Word = serde_json::from_str(&json).unwrap();
        assert_eq!(back, w);

        // Free reduction merges and cancels.
        let u = Word::from_letters([
            (Gen::P1, 1),
            (Gen::P1, 1),
            (Gen::H, 1),
            (Gen::H, -1),
            (Gen::P1, 1),
        ]);
        assert_eq!(u, Word::from_letters([(Gen::P1, 3)]));
    }

    #[test]
    fn mat2_json_round_trip() {
        for m in [Mat2::p1(), Mat2::p2(), Mat2::h(), Mat2::m_elliptic()] {
            let json = serde_json::to_string(&m).unwrap();
            let back: Mat2 = serde_json::from_str(&json).unwrap();
            assert_eq!(back, m);
        }
    }
}
