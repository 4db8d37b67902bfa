//! The conformal model of S²×ℝ: `ℝ³ \ {0}` with metric `|x|⁻² (dx₁² + dx₂² + dx₃²)`.
//!
//! The product `S² × ℝ` is mapped onto the model by `φ(y, t) = eᵗ y`. The
//! frame `E_j(x) = |x| ∂_{x_j}` is orthonormal for the model metric, and a
//! tangent vector is carried either in canonical coordinates (components along
//! `∂_{x_j}`) or in frame coordinates (components along `E_j`), see
//! [`FrameVector`].

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::linalg::{Mat3, Vec3};
use crate::scalar::{c, Real};

/// Point of the model, stored in canonical Euclidean coordinates. Never the origin.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelPoint<T> {
    x: Vec3<T>,
}

impl<T: Real> ModelPoint<T> {
    pub fn new(x1: T, x2: T, x3: T) -> Result<Self> {
        Self::from_vec(Vec3::new(x1, x2, x3))
    }

    pub fn from_vec(x: Vec3<T>) -> Result<Self> {
        if !x.is_finite() || x.norm_sq() <= T::zero() {
            return Err(Error::Domain(format!(
                "model point must be finite and non-zero, got {x:?}"
            )));
        }
        Ok(Self { x })
    }

    pub fn coords(&self) -> Vec3<T> {
        self.x
    }

    pub fn norm(&self) -> T {
        self.x.norm()
    }

    /// Canonical components of a frame vector at this point.
    pub fn frame_to_canonical(&self, v: FrameVector<T>) -> Vec3<T> {
        v.coeffs().scale(self.norm())
    }

    /// Frame components of a canonical vector at this point.
    pub fn canonical_to_frame(&self, v: Vec3<T>) -> FrameVector<T> {
        FrameVector::from(v.scale(T::one() / self.norm()))
    }
}

/// Point `(y, t)` of the product `S² × ℝ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CylPoint<T> {
    pub y: Vec3<T>,
    pub t: T,
}

impl<T: Real> CylPoint<T> {
    pub fn new(y: Vec3<T>, t: T) -> Result<Self> {
        if !y.is_finite() || !t.is_finite() || (y.norm() - T::one()).abs() > c(1e-12) {
            return Err(Error::Domain(format!(
                "S^2 component must be a unit vector, got |y| = {}",
                y.norm()
            )));
        }
        Ok(Self { y, t })
    }
}

/// Coefficients of a tangent vector in the orthonormal frame `{E_j}`.
///
/// The metric length of the vector equals the Euclidean length of the coefficients.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct FrameVector<T>(pub Vec3<T>);

impl<T: Real> FrameVector<T> {
    pub fn new(v1: T, v2: T, v3: T) -> Self {
        Self(Vec3::new(v1, v2, v3))
    }

    pub fn coeffs(&self) -> Vec3<T> {
        self.0
    }

    pub fn length(&self) -> T {
        self.0.norm()
    }
}

impl<T: Real> From<Vec3<T>> for FrameVector<T> {
    fn from(v: Vec3<T>) -> Self {
        Self(v)
    }
}

/// `φ(y, t) = eᵗ y`.
pub fn phi<T: Real>(p: &CylPoint<T>) -> Result<ModelPoint<T>> {
    if (p.y.norm() - T::one()).abs() > c(1e-12) {
        return Err(Error::Domain("phi requires a unit S^2 component".into()));
    }
    ModelPoint::from_vec(p.y.scale(p.t.exp()))
}

/// `φ⁻¹(x) = (x/|x|, log|x|)`.
pub fn phi_inv<T: Real>(x: &ModelPoint<T>) -> CylPoint<T> {
    let r = x.norm();
    CylPoint {
        y: x.coords().scale(T::one() / r),
        t: r.ln(),
    }
}

/// Model inner product of two canonical vectors at `x`: `⟨V, W⟩ / |x|²`.
pub fn metric_inner<T: Real>(x: &ModelPoint<T>, v: Vec3<T>, w: Vec3<T>) -> T {
    v.dot(w) / x.coords().norm_sq()
}

/// `E_j(x) = |x| ∂_{x_j}` in canonical coordinates. `j` is 1-based.
pub fn frame_vector<T: Real>(x: &ModelPoint<T>, j: usize) -> Result<Vec3<T>> {
    check_index(j)?;
    Ok(Vec3::basis(j - 1).scale(x.norm()))
}

fn check_index(j: usize) -> Result<()> {
    if (1..=3).contains(&j) {
        Ok(())
    } else {
        Err(Error::Domain(format!("frame index {j} not in 1..=3")))
    }
}

/// Frame coefficients of `∇̄_{E_i} E_j` at `x` (1-based indices).
///
/// `∇̄_{E_i} E_i = |x|⁻¹ Σ_{k≠i} x_k E_k` and `∇̄_{E_i} E_j = -(x_j/|x|) E_i` for `i ≠ j`.
pub fn connection_coeffs<T: Real>(x: &ModelPoint<T>, i: usize, j: usize) -> Result<FrameVector<T>> {
    check_index(i)?;
    check_index(j)?;
    Ok(connection_unchecked(x.coords(), i - 1, j - 1))
}

/// Zero-based, unvalidated variant used in field loops.
pub(crate) fn connection_unchecked<T: Real>(x: Vec3<T>, i: usize, j: usize) -> FrameVector<T> {
    let r = x.norm();
    let mut out = [T::zero(); 3];
    if i == j {
        for (k, o) in out.iter_mut().enumerate() {
            if k != i {
                *o = x[k] / r;
            }
        }
    } else {
        out[i] = -x[j] / r;
    }
    FrameVector(Vec3::from(out))
}

/// Whether an isometry preserves or reverses the orientation of the ℝ factor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum Orientation {
    Preserving,
    Reversing,
}

/// Isometry `(M, T)` of S²×ℝ acting on the model; `T(t) = s ± t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Isometry<T> {
    m: Mat3<T>,
    s: T,
    eps: Orientation,
}

impl<T: Real> Isometry<T> {
    pub fn new(m: Mat3<T>, s: T, eps: Orientation) -> Result<Self> {
        if m.orthogonality_defect() > c(1e-12) {
            return Err(Error::Domain("isometry matrix is not orthogonal".into()));
        }
        Ok(Self { m, s, eps })
    }

    /// Vertical translation by `s`.
    pub fn vertical_translation(s: T) -> Self {
        Self {
            m: Mat3::identity(),
            s,
            eps: Orientation::Preserving,
        }
    }

    pub fn matrix(&self) -> &Mat3<T> {
        &self.m
    }

    pub fn shift(&self) -> T {
        self.s
    }

    pub fn orientation(&self) -> Orientation {
        self.eps
    }

    /// `self ∘ first`, defined for ℝ-orientation preserving pairs.
    pub fn compose(&self, first: &Self) -> Result<Self> {
        if self.eps != Orientation::Preserving || first.eps != Orientation::Preserving {
            return Err(Error::Domain(
                "composition is implemented for orientation-preserving isometries".into(),
            ));
        }
        Ok(Self {
            m: self.m.mul_mat(&first.m),
            s: self.s + first.s,
            eps: Orientation::Preserving,
        })
    }
}

/// `x ↦ eˢ M x` (preserving) or `x ↦ eˢ M x / |x|²` (reversing).
pub fn apply_isometry<T: Real>(f: &Isometry<T>, x: &ModelPoint<T>) -> ModelPoint<T> {
    let mut y = f.m.mul_vec(x.coords()).scale(f.s.exp());
    if f.eps == Orientation::Reversing {
        y = y.scale(T::one() / x.coords().norm_sq());
    }
    ModelPoint { x: y }
}

/// Value in the extended complex plane, stored in one of two charts.
///
/// On the standard chart `value = w`; on the inverted chart `value = 1/w`, so
/// `w = ∞` is the inverted value `0`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ExtComplex<T> {
    pub value: Complex<T>,
    pub inverted: bool,
}

/// Modulus at which values switch from the standard to the inverted chart,
/// matching the `N₃ ≤ -1/2` rule for unit normals (`|g|² ≥ 3`).
pub fn chart_switch<T: Real>() -> T {
    c::<T>(3.0).sqrt()
}

impl<T: Real> ExtComplex<T> {
    pub fn finite(w: Complex<T>) -> Self {
        Self::from_ratio(w, Complex::new(T::one(), T::zero()))
    }

    pub fn infinity() -> Self {
        Self {
            value: Complex::new(T::zero(), T::zero()),
            inverted: true,
        }
    }

    /// Canonical representation of `num / den`.
    pub fn from_ratio(num: Complex<T>, den: Complex<T>) -> Self {
        if num.norm() <= chart_switch::<T>() * den.norm() {
            Self {
                value: num / den,
                inverted: false,
            }
        } else {
            Self {
                value: den / num,
                inverted: true,
            }
        }
    }

    /// Finite value `w`, or `None` at `∞`.
    pub fn to_standard(&self) -> Option<Complex<T>> {
        if !self.inverted {
            Some(self.value)
        } else if self.value.norm() > T::zero() {
            Some(self.value.inv())
        } else {
            None
        }
    }

    /// `1/w`, or `None` at `w = 0`.
    pub fn to_inverted(&self) -> Option<Complex<T>> {
        if self.inverted {
            Some(self.value)
        } else if self.value.norm() > T::zero() {
            Some(self.value.inv())
        } else {
            None
        }
    }

    pub fn is_infinite(&self) -> bool {
        self.inverted && self.value.norm() == T::zero()
    }

    /// Chordal-style distance used in tests: compares in whichever chart keeps both finite.
    pub fn distance(&self, other: &Self) -> T {
        match (self.to_standard(), other.to_standard()) {
            (Some(a), Some(b)) if a.norm() <= c(2.0) || b.norm() <= c(2.0) => (a - b).norm(),
            _ => match (self.to_inverted(), other.to_inverted()) {
                (Some(a), Some(b)) => (a - b).norm(),
                _ => T::infinity(),
            },
        }
    }
}

/// Stereographic projection from the southern pole: `(n₁ + i n₂)/(1 + n₃)`.
pub fn stereographic<T: Real>(n: Vec3<T>) -> ExtComplex<T> {
    if n.z > -c::<T>(0.5) {
        ExtComplex {
            value: Complex::new(n.x, n.y) / (T::one() + n.z),
            inverted: false,
        }
    } else {
        ExtComplex {
            value: Complex::new(n.x, -n.y) / (T::one() - n.z),
            inverted: true,
        }
    }
}

/// Inverse stereographic projection `σ(w) = (w + w̄, i(w̄ - w), 1 - |w|²)/(1 + |w|²)`.
pub fn inverse_stereographic<T: Real>(w: &ExtComplex<T>) -> Vec3<T> {
    let (two, one) = (c::<T>(2.0), T::one());
    let a = w.value;
    let m = a.norm_sqr();
    let d = one + m;
    if !w.inverted {
        Vec3::new(two * a.re / d, two * a.im / d, (one - m) / d)
    } else {
        Vec3::new(two * a.re / d, -two * a.im / d, (m - one) / d)
    }
}

/// Fractional linear map `w ↦ (a w + b)/(c w + d)` with `ad - bc = 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MobiusMap<T> {
    pub a: Complex<T>,
    pub b: Complex<T>,
    pub c: Complex<T>,
    pub d: Complex<T>,
}

impl<T: Real> MobiusMap<T> {
    pub fn identity() -> Self {
        let (o, z) = (
            Complex::new(T::one(), T::zero()),
            Complex::new(T::zero(), T::zero()),
        );
        Self {
            a: o,
            b: z,
            c: z,
            d: o,
        }
    }

    pub fn det(&self) -> Complex<T> {
        self.a * self.d - self.b * self.c
    }

    pub fn apply(&self, w: &ExtComplex<T>) -> ExtComplex<T> {
        if w.inverted {
            // w = 1/t: (a + b t)/(c + d t)
            let t = w.value;
            ExtComplex::from_ratio(self.a + self.b * t, self.c + self.d * t)
        } else {
            ExtComplex::from_ratio(self.a * w.value + self.b, self.c * w.value + self.d)
        }
    }

    /// `self ∘ first`.
    pub fn compose(&self, first: &Self) -> Self {
        Self {
            a: self.a * first.a + self.b * first.c,
            b: self.a * first.b + self.b * first.d,
            c: self.c * first.a + self.d * first.c,
            d: self.c * first.b + self.d * first.d,
        }
    }
}

/// The SU(2) action on the Gauss-map sphere induced by `M ∈ O(3)`.
///
/// Satisfies `stereographic((det M) M n) = R_M(stereographic(n))` for every unit `n`.
/// Built from the unit quaternion of `(det M) M`; the overall sign is irrelevant.
pub fn mobius_from_rotation<T: Real>(m: &Mat3<T>) -> Result<MobiusMap<T>> {
    if m.orthogonality_defect() > c(1e-10) {
        return Err(Error::Domain(
            "mobius_from_rotation needs an orthogonal matrix".into(),
        ));
    }
    let r = m.scale(m.det().signum());
    let [w, x, y, z] = rotation_quaternion(&r);
    Ok(MobiusMap {
        a: Complex::new(w, z),
        b: Complex::new(y, -x),
        c: Complex::new(-y, -x),
        d: Complex::new(w, -z),
    })
}

/// Unit quaternion `[w, x, y, z]` of a rotation matrix (Shepperd's method).
fn rotation_quaternion<T: Real>(r: &Mat3<T>) -> [T; 4] {
    let m = &r.m;
    let (one, two, quarter) = (T::one(), c::<T>(2.0), c::<T>(0.25));
    let tr = m[0][0] + m[1][1] + m[2][2];
    let q = if tr > T::zero() {
        let s = (tr + one).sqrt() * two;
        [
            quarter * s,
            (m[2][1] - m[1][2]) / s,
            (m[0][2] - m[2][0]) / s,
            (m[1][0] - m[0][1]) / s,
        ]
    } else if m[0][0] > m[1][1] && m[0][0] > m[2][2] {
        let s = (one + m[0][0] - m[1][1] - m[2][2]).sqrt() * two;
        [
            (m[2][1] - m[1][2]) / s,
            quarter * s,
            (m[0][1] + m[1][0]) / s,
            (m[0][2] + m[2][0]) / s,
        ]
    } else if m[1][1] > m[2][2] {
        let s = (one + m[1][1] - m[0][0] - m[2][2]).sqrt() * two;
        [
            (m[0][2] - m[2][0]) / s,
            (m[0][1] + m[1][0]) / s,
            quarter * s,
            (m[1][2] + m[2][1]) / s,
        ]
    } else {
        let s = (one + m[2][2] - m[0][0] - m[1][1]).sqrt() * two;
        [
            (m[1][0] - m[0][1]) / s,
            (m[0][2] + m[2][0]) / s,
            (m[1][2] + m[2][1]) / s,
            quarter * s,
        ]
    };
    let n = q.iter().map(|&e| e * e).sum::<T>().sqrt();
    q.map(|e| e / n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn pt(x: f64, y: f64, z: f64) -> ModelPoint<f64> {
        ModelPoint::new(x, y, z).unwrap()
    }

    #[test]
    fn origin_is_excluded() {
        assert!(ModelPoint::new(0.0, 0.0, 0.0).is_err());
        assert!(ModelPoint::new(f64::NAN, 0.0, 1.0).is_err());
    }

    #[test]
    fn phi_examples() {
        let e3 = Vec3::new(0.0, 0.0, 1.0);
        let p = phi(&CylPoint::new(e3, 0.0).unwrap()).unwrap();
        assert_eq!(p.coords(), e3);
        let p = phi(&CylPoint::new(e3, 1.0).unwrap()).unwrap();
        assert!((p.coords().z - std::f64::consts::E).abs() < 1e-15);
        let p = phi(&CylPoint::new(Vec3::new(1.0, 0.0, 0.0), 3f64.ln()).unwrap()).unwrap();
        assert!(p.coords().max_abs_diff(Vec3::new(3.0, 0.0, 0.0)) < 1e-14);
    }

    #[test]
    fn phi_rejects_non_unit() {
        assert!(CylPoint::new(Vec3::new(2.0, 0.0, 0.0), 0.0).is_err());
        let bad = CylPoint {
            y: Vec3::new(0.5, 0.0, 0.0),
            t: 0.0,
        };
        assert!(phi(&bad).is_err());
    }

    #[test]
    fn phi_inv_examples() {
        let c0 = phi_inv(&pt(0.0, 0.0, 1.0));
        assert_eq!(c0.y, Vec3::new(0.0, 0.0, 1.0));
        assert_eq!(c0.t, 0.0);
        let c1 = phi_inv(&pt(3.0, 0.0, 0.0));
        assert_eq!(c1.y, Vec3::new(1.0, 0.0, 0.0));
        assert!((c1.t - 3f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn metric_examples() {
        let e = |j| Vec3::<f64>::basis(j);
        assert_eq!(metric_inner(&pt(1.0, 0.0, 0.0), e(0), e(0)), 1.0);
        assert_eq!(metric_inner(&pt(2.0, 0.0, 0.0), e(0), e(0)), 0.25);
        assert_eq!(
            metric_inner(&pt(0.0, 0.0, std::f64::consts::E), e(0), e(1)),
            0.0
        );
    }

    #[test]
    fn frame_vector_examples() {
        assert_eq!(
            frame_vector(&pt(0.0, 0.0, 1.0), 1).unwrap(),
            Vec3::new(1.0, 0.0, 0.0)
        );
        assert_eq!(
            frame_vector(&pt(0.0, 0.0, 2.0), 3).unwrap(),
            Vec3::new(0.0, 0.0, 2.0)
        );
        assert!(frame_vector(&pt(0.0, 0.0, 2.0), 0).is_err());
        assert!(frame_vector(&pt(0.0, 0.0, 2.0), 4).is_err());
    }

    #[test]
    fn connection_table_entries() {
        // ∇̄_{E1}E1 = (x2 E2 + x3 E3)/|x|
        let c11 = connection_coeffs(&pt(0.0, 0.0, 1.0), 1, 1).unwrap();
        assert_eq!(c11.coeffs(), Vec3::new(0.0, 0.0, 1.0));
        // ∇̄_{E2}E1 = -(x1/|x|) E2
        let c21 = connection_coeffs(&pt(1.0, 0.0, 0.0), 2, 1).unwrap();
        assert_eq!(c21.coeffs(), Vec3::new(0.0, -1.0, 0.0));
        // the remaining seven entries at a generic point
        let x = pt(0.3, -1.2, 0.7);
        let r = x.norm();
        let (x1, x2, x3) = (0.3 / r, -1.2 / r, 0.7 / r);
        let table = [
            ((1, 1), [0.0, x2, x3]),
            ((2, 1), [0.0, -x1, 0.0]),
            ((3, 1), [0.0, 0.0, -x1]),
            ((1, 2), [-x2, 0.0, 0.0]),
            ((2, 2), [x1, 0.0, x3]),
            ((3, 2), [0.0, 0.0, -x2]),
            ((1, 3), [-x3, 0.0, 0.0]),
            ((2, 3), [0.0, -x3, 0.0]),
            ((3, 3), [x1, x2, 0.0]),
        ];
        for ((i, j), want) in table {
            let got = connection_coeffs(&x, i, j).unwrap().coeffs();
            assert!(got.max_abs_diff(Vec3::from(want)) < 1e-15, "({i},{j})");
        }
        assert!(connection_coeffs(&x, 0, 1).is_err());
    }

    /// Independent oracle: Christoffel symbols of the conformally flat metric
    /// `e^{2f} δ` with `f = -log|x|`, `Γᵏᵢⱼ = δᵢₖ ∂ⱼf + δⱼₖ ∂ᵢf - δᵢⱼ ∂ₖf`.
    #[test]
    fn connection_matches_christoffel_oracle() {
        let xs = [[0.3, -1.2, 0.7], [2.0, 0.1, -0.4], [-0.5, -0.5, 3.0]];
        for xa in xs {
            let x = pt(xa[0], xa[1], xa[2]);
            let r2: f64 = xa.iter().map(|v| v * v).sum();
            let r = r2.sqrt();
            let df: Vec<f64> = xa.iter().map(|v| -v / r2).collect();
            let d = |a: usize, b: usize| if a == b { 1.0 } else { 0.0 };
            for i in 0..3 {
                for j in 0..3 {
                    // E_i(E_j) = |x| ∂_i(|x|) ∂_j + |x|² Γᵏᵢⱼ ∂_k, in canonical coords
                    let mut canon = [0.0; 3];
                    for (k, out) in canon.iter_mut().enumerate() {
                        let gamma = d(i, k) * df[j] + d(j, k) * df[i] - d(i, j) * df[k];
                        *out = r2 * gamma + if k == j { xa[i] } else { 0.0 };
                    }
                    let frame = Vec3::from(canon).scale(1.0 / r);
                    let got = connection_coeffs(&x, i + 1, j + 1).unwrap().coeffs();
                    assert!(got.max_abs_diff(frame) < 1e-13, "({i},{j})");
                }
            }
        }
    }

    #[test]
    fn isometry_examples() {
        let x = pt(0.2, 0.4, -1.0);
        let id = Isometry::vertical_translation(0.0);
        assert_eq!(apply_isometry(&id, &x).coords(), x.coords());
        let up = Isometry::vertical_translation(1.0);
        let y = apply_isometry(&up, &pt(0.0, 0.0, 1.0)).coords();
        assert!((y.z - std::f64::consts::E).abs() < 1e-15);
        let flip = Isometry::new(Mat3::identity(), 0.0, Orientation::Reversing).unwrap();
        let y = apply_isometry(&flip, &pt(2.0, 0.0, 0.0)).coords();
        assert!(y.max_abs_diff(Vec3::new(0.5, 0.0, 0.0)) < 1e-15);
        assert!(Isometry::new(Mat3::scalar(2.0), 0.0, Orientation::Preserving).is_err());
    }

    #[test]
    fn orientation_reversing_isometry_is_an_isometry() {
        // x ↦ eˢ M x/|x|² sends t ↦ s - t and preserves the metric.
        let f = Isometry::new(
            Mat3::rotation(Vec3::new(1.0, 1.0, 0.0), 0.4),
            0.3,
            Orientation::Reversing,
        )
        .unwrap();
        let x = pt(0.4, -0.9, 1.3);
        let v = Vec3::new(0.2, 0.7, -0.1);
        let eps = 1e-6;
        let fx = |p: Vec3<f64>| apply_isometry(&f, &ModelPoint::from_vec(p).unwrap()).coords();
        let push = (fx(x.coords() + v.scale(eps)) - fx(x.coords() - v.scale(eps))).scale(0.5 / eps);
        let y = ModelPoint::from_vec(fx(x.coords())).unwrap();
        let lhs = metric_inner(&y, push, push);
        let rhs = metric_inner(&x, v, v);
        assert!((lhs - rhs).abs() < 1e-9);
        assert!((phi_inv(&y).t - (0.3 - phi_inv(&x).t)).abs() < 1e-12);
    }

    #[test]
    fn stereographic_examples() {
        let g = stereographic(Vec3::new(0.0, 0.0, 1.0));
        assert_eq!(g.to_standard(), Some(Complex::new(0.0, 0.0)));
        let g = stereographic(Vec3::new(0.0, 0.0, -1.0));
        assert!(g.inverted && g.is_infinite());
        let g = stereographic(Vec3::new(1.0, 0.0, 0.0));
        assert_eq!(g.to_standard(), Some(Complex::new(1.0, 0.0)));
    }

    #[test]
    fn mobius_identity_and_antipodal() {
        let id = mobius_from_rotation(&Mat3::<f64>::identity()).unwrap();
        let anti = mobius_from_rotation(&Mat3::<f64>::antipodal()).unwrap();
        for m in [id, anti] {
            assert!((m.a - Complex::new(1.0, 0.0)).norm() < 1e-15);
            assert!(m.b.norm() < 1e-15 && m.c.norm() < 1e-15);
        }
        assert!(mobius_from_rotation(&Mat3::scalar(1.1)).is_err());
    }

    #[test]
    fn mobius_rotation_about_vertical_axis() {
        let theta = 0.83;
        let m = mobius_from_rotation(&Mat3::rotation(Vec3::new(0.0, 0.0, 1.0), theta)).unwrap();
        let rot = Complex::from_polar(1.0, theta);
        for k in 0..10 {
            let t = k as f64 * 0.61;
            let n = Vec3::new(
                t.cos() * (0.3 * t).sin(),
                t.sin() * (0.3 * t).sin(),
                (0.3 * t).cos(),
            );
            let w = stereographic(n);
            let want = ExtComplex::finite(rot * w.to_standard().unwrap());
            assert!(m.apply(&w).distance(&want) < 1e-12);
        }
    }

    fn unit(a: f64, b: f64) -> Vec3<f64> {
        Vec3::new(b.sin() * a.cos(), b.sin() * a.sin(), b.cos())
    }

    proptest! {
        #[test]
        fn phi_round_trip(a in 0.0..6.2f64, b in 0.0..3.1f64, t in -3.0..3.0f64) {
            let p = CylPoint::new(unit(a, b), t).unwrap();
            let q = phi_inv(&phi(&p).unwrap());
            prop_assert!(q.y.max_abs_diff(p.y) < 1e-12);
            prop_assert!((q.t - p.t).abs() < 1e-12);
        }

        #[test]
        fn phi_is_isometric(a in 0.0..6.2f64, b in 0.2..2.9f64, t in -2.0..2.0f64,
                            da in -1.0..1.0f64, db in -1.0..1.0f64, dt in -1.0..1.0f64) {
            // curve (y(ε), t(ε)) through (y, t); pushforward by central differences
            let eps = 1e-5;
            let curve = |e: f64| phi(&CylPoint::new(unit(a + e * da, b + e * db), t + e * dt).unwrap()).unwrap().coords();
            let push = (curve(eps) - curve(-eps)).scale(0.5 / eps);
            let x = phi(&CylPoint::new(unit(a, b), t).unwrap()).unwrap();
            let ydot = (unit(a + eps * da, b + eps * db) - unit(a - eps * da, b - eps * db)).scale(0.5 / eps);
            let product = ydot.norm_sq() + dt * dt;
            prop_assert!((metric_inner(&x, push, push) - product).abs() < 1e-9);
        }

        #[test]
        fn frame_is_orthonormal(x1 in -5.0..5.0f64, x2 in -5.0..5.0f64, x3 in 0.1..5.0f64) {
            let x = pt(x1, x2, x3);
            for i in 1..=3 {
                for j in 1..=3 {
                    let g = metric_inner(&x, frame_vector(&x, i).unwrap(), frame_vector(&x, j).unwrap());
                    let want = if i == j { 1.0 } else { 0.0 };
                    prop_assert!((g - want).abs() < 1e-14);
                }
            }
        }

        #[test]
        fn connection_is_metric_compatible(x1 in -5.0..5.0f64, x2 in -5.0..5.0f64, x3 in 0.1..5.0f64) {
            let x = pt(x1, x2, x3);
            for k in 1..=3 {
                for i in 1..=3 {
                    for j in 1..=3 {
                        let a = connection_coeffs(&x, k, i).unwrap().coeffs()[j - 1];
                        let b = connection_coeffs(&x, k, j).unwrap().coeffs()[i - 1];
                        prop_assert!((a + b).abs() < 1e-14);
                    }
                }
            }
        }

        #[test]
        fn preserving_isometries_compose(ax in -1.0..1.0f64, ay in -1.0..1.0f64, th1 in 0.0..6.0f64,
                                         th2 in 0.0..6.0f64, s1 in -1.0..1.0f64, s2 in -1.0..1.0f64) {
            let axis = Vec3::new(ax, ay, 0.5);
            let f1 = Isometry::new(Mat3::rotation(axis, th1), s1, Orientation::Preserving).unwrap();
            let f2 = Isometry::new(Mat3::rotation(Vec3::new(0.2, 1.0, ay), th2).scale(-1.0), s2, Orientation::Preserving).unwrap();
            let x = pt(0.3, -0.8, 1.1);
            let lhs = apply_isometry(&f2, &apply_isometry(&f1, &x));
            let rhs = apply_isometry(&f2.compose(&f1).unwrap(), &x);
            prop_assert!(lhs.coords().max_abs_diff(rhs.coords()) < 1e-12);
        }

        #[test]
        fn mobius_realizes_rotation(ax in -1.0..1.0f64, ay in -1.0..1.0f64, az in -1.0..1.0f64,
                                    th in 0.0..6.2f64, reflect in proptest::bool::ANY) {
            prop_assume!(ax * ax + ay * ay + az * az > 1e-3);
            let mut m = Mat3::rotation(Vec3::new(ax, ay, az), th);
            if reflect { m = m.scale(-1.0); }
            let r = mobius_from_rotation(&m).unwrap();
            prop_assert!((r.det() - Complex::new(1.0, 0.0)).norm() < 1e-12);
            let rot = m.scale(m.det());
            for k in 0..10 {
                let n = unit(0.7 * k as f64, 0.1 + 0.29 * k as f64);
                let want = stereographic(rot.mul_vec(n));
                prop_assert!(r.apply(&stereographic(n)).distance(&want) < 1e-10);
            }
        }

        #[test]
        fn mobius_is_homomorphism_up_to_sign(a1 in 0.0..6.2f64, a2 in 0.0..6.2f64, b1 in 0.1..3.0f64, b2 in 0.1..3.0f64) {
            let m1 = Mat3::rotation(unit(a1, b1), 1.1);
            let m2 = Mat3::rotation(unit(a2, b2), 2.3);
            let r12 = mobius_from_rotation(&m2.mul_mat(&m1)).unwrap();
            let r2r1 = mobius_from_rotation(&m2).unwrap().compose(&mobius_from_rotation(&m1).unwrap());
            // ±1 ambiguity: compare actions
            for k in 0..10 {
                let w = stereographic(unit(0.5 * k as f64, 0.2 + 0.28 * k as f64));
                prop_assert!(r12.apply(&w).distance(&r2r1.apply(&w)) < 1e-10);
            }
            let same = (r12.a - r2r1.a).norm() + (r12.b - r2r1.b).norm();
            let flipped = (r12.a + r2r1.a).norm() + (r12.b + r2r1.b).norm();
            prop_assert!(same.min(flipped) < 1e-10);
        }
    }
}
