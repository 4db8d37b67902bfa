//! Normal, Gauss map and the auxiliary maps `η`, `p`, `r`, `Ω` of a sampled
//! conformal immersion `X = (F, h)`.

use num_complex::Complex;

use crate::calculus::{
    d_z, d_zbar, ComplexField, ExtComplexField, Field, GridChart, ScalarField, VectorField,
};
use crate::error::{Error, Result};
use crate::linalg::Vec3;
use crate::model::{
    apply_isometry, inverse_stereographic, stereographic, ExtComplex, Isometry, ModelPoint,
};
use crate::scalar::{c, Real};

/// Nodes where `‖X_u × X_v‖` (model metric) falls below this are degenerate.
pub const DEGENERACY_FLOOR: f64 = 1e-12;

/// Sampled immersion `X = (F, h)` with `F = x₁ + i x₂` and `h = x₃`.
#[derive(Debug, Clone, PartialEq)]
pub struct Immersion<T> {
    f: ComplexField<T>,
    h: ScalarField<T>,
}

impl<T: Real> Immersion<T> {
    pub fn new(f: ComplexField<T>, h: ScalarField<T>) -> Result<Self> {
        if !f.same_chart(&h) {
            return Err(Error::Shape("F and h must share a chart".into()));
        }
        let ch = *f.chart();
        for (i, j) in ch.nodes() {
            let (Some(fv), Some(hv)) = (f.get(i, j), h.get(i, j)) else {
                return Err(Error::Shape(format!(
                    "immersion has no value at node {:?}",
                    (i, j)
                )));
            };
            if fv.norm_sqr() + hv * hv == T::zero() {
                return Err(Error::Domain(format!(
                    "immersion hits the origin at node {:?}",
                    (i, j)
                )));
            }
        }
        Ok(Self { f, h })
    }

    pub fn from_fn(
        chart: GridChart<T>,
        x: impl FnMut(usize, usize) -> Vec3<T>,
    ) -> Result<Self> {
        let pts: VectorField<T> = Field::from_fn(chart, x);
        Self::from_points(&pts)
    }

    pub fn from_points(pts: &VectorField<T>) -> Result<Self> {
        let ch = *pts.chart();
        if pts.valid_count() != ch.len() {
            return Err(Error::Shape(
                "immersion samples must be finite at every node".into(),
            ));
        }
        let f = pts.map(|p| Complex::new(p.x, p.y));
        let h = pts.map(|p| p.z);
        Self::new(f, h)
    }

    pub fn chart(&self) -> &GridChart<T> {
        self.f.chart()
    }

    pub fn f(&self) -> &ComplexField<T> {
        &self.f
    }

    pub fn h(&self) -> &ScalarField<T> {
        &self.h
    }

    pub fn point(&self, i: usize, j: usize) -> Vec3<T> {
        let f = self.f.at(i, j);
        Vec3::new(f.re, f.im, self.h.at(i, j))
    }

    pub fn points(&self) -> VectorField<T> {
        Field::from_fn(*self.chart(), |i, j| self.point(i, j))
    }

    /// `|X|` at every node.
    pub fn modulus(&self) -> ScalarField<T> {
        self.f
            .zip_map(&self.h, |f, h| (f.norm_sqr() + h * h).sqrt())
    }

    /// `f ∘ X` for an isometry `f` of the model.
    pub fn transform(&self, iso: &Isometry<T>) -> Result<Self> {
        let ch = *self.chart();
        let mut out = Vec::with_capacity(ch.len());
        for (i, j) in ch.nodes() {
            let x = ModelPoint::from_vec(self.point(i, j))?;
            out.push(apply_isometry(iso, &x).coords());
        }
        Self::from_points(&Field::from_values(ch, out)?)
    }

    /// `c · X` for `c ≠ 0` (a vertical translation, composed with `𝒜` when `c < 0`).
    pub fn scaled(&self, c: T) -> Result<Self> {
        Self::new(self.f.map(|w| w * c), self.h.map(|x| x * c))
    }
}

/// Wirtinger derivatives of `X` used throughout: `F_z`, `F_z̄`, `η = 2h_z`.
pub(crate) struct FirstDerivatives<T> {
    pub fz: ComplexField<T>,
    pub fzb: ComplexField<T>,
    pub eta: ComplexField<T>,
}

impl<T: Real> FirstDerivatives<T> {
    pub fn of(x: &Immersion<T>) -> Self {
        Self {
            fz: d_z(x.f()),
            fzb: d_zbar(x.f()),
            eta: eta_field(x),
        }
    }
}

/// Unit normal `(X_u × X_v)/‖X_u × X_v‖` in frame coordinates.
///
/// Components are `Re(ηF_z̄ − η̄F_z)`, `Im(ηF_z̄ − η̄F_z)`, `|F_z|² − |F_z̄|²`
/// (the Euclidean cross product, which is also the frame-coordinate direction).
pub fn normal_field<T: Real>(x: &Immersion<T>) -> Result<VectorField<T>> {
    let d = FirstDerivatives::of(x);
    normal_from_derivatives(x, &d)
}

pub(crate) fn normal_from_derivatives<T: Real>(
    x: &Immersion<T>,
    d: &FirstDerivatives<T>,
) -> Result<VectorField<T>> {
    let ch = *x.chart();
    let xmod = x.modulus();
    let floor = c::<T>(DEGENERACY_FLOOR);
    let mut degenerate = None;
    let n = Field::from_fn_opt(ch, |i, j| {
        let (fz, fzb, eta) = (d.fz.get(i, j)?, d.fzb.get(i, j)?, d.eta.get(i, j)?);
        let w = eta * fzb - eta.conj() * fz;
        let v = Vec3::new(w.re, w.im, fz.norm_sqr() - fzb.norm_sqr());
        let len = v.norm();
        let r = xmod.at(i, j);
        if !(len / (r * r) >= floor) {
            degenerate.get_or_insert(((i, j), (len / (r * r)).to_f64_lossy()));
            return None;
        }
        Some(v.scale(T::one() / len))
    });
    if let Some((node, norm)) = degenerate {
        return Err(Error::Degenerate { node, norm });
    }
    Ok(n.with_margin(d.fz.margin()))
}

/// Stereographic projection of the normal from the southern pole.
pub fn gauss_map<T: Real>(n: &VectorField<T>) -> ExtComplexField<T> {
    n.map(stereographic)
}

/// Unit normal recovered from the Gauss map (inverse stereographic projection).
pub fn normal_from_gauss<T: Real>(g: &ExtComplexField<T>) -> VectorField<T> {
    g.map(|w| inverse_stereographic(&w))
}

/// The Gauss map of the oppositely oriented surface, `g ↦ −1/ḡ`.
pub fn flip_orientation<T: Real>(g: &ExtComplexField<T>) -> ExtComplexField<T> {
    g.map(|w| ExtComplex {
        value: -w.value.conj(),
        inverted: !w.inverted,
    })
}

/// `η = 2 h_z`.
pub fn eta_field<T: Real>(x: &Immersion<T>) -> ComplexField<T> {
    d_z(&x.h().to_complex()).map(|w| w * c::<T>(2.0))
}

/// `p = F/(|X| + h)`, the stereographic projection of `X/|X|`.
///
/// Nodes with `h ≤ −|X|/2` use the inverted chart `1/p = F̄/(|X| − h)`, so
/// neither formula cancels; `F = 0, h < 0` gives `p = ∞`.
pub fn p_field<T: Real>(x: &Immersion<T>) -> ExtComplexField<T> {
    x.f().zip_map(x.h(), |f, h| p_at(f, h))
}

pub fn p_at<T: Real>(f: Complex<T>, h: T) -> ExtComplex<T> {
    let r = (f.norm_sqr() + h * h).sqrt();
    if h > -c::<T>(0.5) * r {
        ExtComplex {
            value: f / (r + h),
            inverted: false,
        }
    } else {
        ExtComplex {
            value: f.conj() / (r - h),
            inverted: true,
        }
    }
}

/// `r = log |X|`.
pub fn r_field<T: Real>(x: &Immersion<T>) -> ScalarField<T> {
    x.modulus().map(|m| m.ln())
}

/// `Ω = Fḡ + F̄g + h(1 − |g|²)`, computed from complex products.
///
/// On inverted-chart nodes `g̃ = 1/g` is substituted, giving
/// `Ω = (F g̃ + F̄ conj(g̃) + h(|g̃|² − 1))/|g̃|²`; the pole itself is invalid.
pub fn omega_field<T: Real>(x: &Immersion<T>, g: &ExtComplexField<T>) -> ScalarField<T> {
    let out = Field::from_fn_opt(*x.chart(), |i, j| {
        omega_ext(x.f().get(i, j)?, x.h().get(i, j)?, g.get(i, j)?).map(|z| z.re)
    });
    out.with_margin(g.margin())
}

/// `Ω` as a complex number; its imaginary part measures rounding only.
pub fn omega_ext<T: Real>(f: Complex<T>, h: T, g: ExtComplex<T>) -> Option<Complex<T>> {
    let one = T::one();
    if !g.inverted {
        Some(omega_complex(f, h, g.value))
    } else {
        let gt = g.value;
        let m = gt.norm_sqr();
        if m == T::zero() {
            return None;
        }
        Some((f * gt + f.conj() * gt.conj() + Complex::new(h * (m - one), T::zero())) / m)
    }
}

pub fn omega_complex<T: Real>(f: Complex<T>, h: T, g: Complex<T>) -> Complex<T> {
    f * g.conj() + f.conj() * g + Complex::new(h * (T::one() - g.norm_sqr()), T::zero())
}

/// Every derived field of an immersion, computed once.
#[derive(Debug, Clone)]
pub struct GaussData<T> {
    pub normal: VectorField<T>,
    pub g: ExtComplexField<T>,
    pub eta: ComplexField<T>,
    pub p: ExtComplexField<T>,
    pub r: ScalarField<T>,
    pub omega: ScalarField<T>,
}

impl<T: Real> GaussData<T> {
    pub fn compute(x: &Immersion<T>) -> Result<Self> {
        let d = FirstDerivatives::of(x);
        let normal = normal_from_derivatives(x, &d)?;
        let g = gauss_map(&normal);
        let omega = omega_field(x, &g);
        Ok(Self {
            normal,
            g,
            eta: d.eta,
            p: p_field(x),
            r: r_field(x),
            omega,
        })
    }

    /// Largest imaginary part produced when evaluating `Ω` with complex arithmetic.
    pub fn omega_imaginary_residue(&self, x: &Immersion<T>) -> T {
        let ch = *x.chart();
        ch.nodes()
            .filter_map(|(i, j)| omega_ext(x.f().get(i, j)?, x.h().get(i, j)?, self.g.get(i, j)?))
            .fold(T::zero(), |m, w| m.max(w.im.abs()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Mat3;
    use crate::model::{mobius_from_rotation, Orientation};
    use proptest::prelude::*;

    type C = Complex<f64>;

    fn sigma(z: C) -> Vec3<f64> {
        let m = z.norm_sqr();
        Vec3::new(2.0 * z.re, 2.0 * z.im, 1.0 - m).scale(1.0 / (1.0 + m))
    }

    fn sphere(a: f64, ch: GridChart<f64>) -> Immersion<f64> {
        Immersion::from_fn(ch, |i, j| sigma(ch.z(i, j)).scale(a.exp())).unwrap()
    }

    /// Non-minimal test surface: a tilted, bent graph over a disc.
    fn bumpy(ch: GridChart<f64>) -> Immersion<f64> {
        Immersion::from_fn(ch, |i, j| {
            let (u, v) = (ch.u(i), ch.v(j));
            Vec3::new(
                u + 0.3,
                0.7 * v - 0.2,
                1.5 + 0.3 * u * u - 0.2 * u * v + 0.1 * v.sin(),
            )
        })
        .unwrap()
    }

    fn chart(lo: f64, hi: f64, n: usize) -> GridChart<f64> {
        GridChart::new(lo, hi, lo, hi, n, n).unwrap()
    }

    #[test]
    fn immersion_validation() {
        let ch = chart(-1.0, 1.0, 5);
        let zero = Immersion::from_fn(ch, |i, j| {
            if (i, j) == (2, 2) {
                Vec3::zero()
            } else {
                Vec3::new(1.0, 0.0, 0.0)
            }
        });
        assert!(matches!(zero, Err(Error::Domain(_))));
        let f = Field::from_fn(ch, |_, _| Complex::new(1.0, 0.0));
        let h = Field::from_fn(chart(0.0, 1.0, 5), |_, _| 0.0);
        assert!(matches!(Immersion::new(f, h), Err(Error::Shape(_))));
    }

    #[test]
    fn sphere_normal_is_radial() {
        let ch = chart(-0.5, 0.5, 101);
        let x = sphere(1.0, ch);
        let n = normal_field(&x).unwrap();
        assert_eq!(n.margin(), 1);
        let mut worst: f64 = 0.0;
        for (i, j) in ch.nodes() {
            if let Some(nv) = n.get(i, j) {
                worst = worst.max(nv.max_abs_diff(x.point(i, j).normalized()));
            }
        }
        assert!(worst < 1e-3, "{worst}");
        let c = n.get(50, 50).unwrap();
        assert!(c.max_abs_diff(Vec3::new(0.0, 0.0, 1.0)) < 1e-15);
    }

    #[test]
    fn plane_normal_is_constant() {
        let ch = chart(-0.3, 0.3, 21);
        let x = Immersion::from_fn(ch, |i, j| {
            let (u, v) = (ch.u(i), ch.v(j));
            Vec3::new(u.exp() * v.cos(), 0.0, u.exp() * v.sin())
        })
        .unwrap();
        let n = normal_field(&x).unwrap();
        for (i, j) in ch.nodes() {
            if let Some(nv) = n.get(i, j) {
                assert!(nv.max_abs_diff(Vec3::new(0.0, -1.0, 0.0)) < 1e-14, "{nv:?}");
            }
        }
    }

    #[test]
    fn degenerate_immersion_is_reported() {
        let ch = chart(0.0, 1.0, 7);
        let x = Immersion::from_fn(ch, |i, _| Vec3::new(ch.u(i), 0.0, 1.0)).unwrap();
        assert!(matches!(
            normal_field(&x),
            Err(Error::Degenerate { node: (1, 1), .. })
        ));
    }

    #[test]
    fn gauss_map_examples() {
        let ch = chart(0.0, 1.0, 5);
        let pts = [
            Vec3::new(0.0, 0.0, 1.0),
            Vec3::new(0.0, 0.0, -1.0),
            Vec3::new(1.0, 0.0, 0.0),
        ];
        let n = Field::from_fn(ch, |i, _| pts[i % 3]);
        let g = gauss_map(&n);
        assert_eq!(g.at(0, 0), ExtComplex::finite(Complex::new(0.0, 0.0)));
        assert!(g.at(1, 0).is_infinite());
        assert_eq!(g.at(2, 0).value, Complex::new(1.0, 0.0));
    }

    #[test]
    fn sphere_eta_matches_analytic_derivative() {
        let a = 0.3f64;
        let ch = chart(0.1, 0.11, 201);
        let x = sphere(a, ch);
        let eta = eta_field(&x);
        let mut worst: f64 = 0.0;
        for (i, j) in ch.nodes() {
            if let Some(e) = eta.get(i, j) {
                let z = ch.z(i, j);
                let exact = z.conj() * (-4.0 * a.exp()) / (1.0 + z.norm_sqr()).powi(2);
                worst = worst.max((e - exact).norm());
            }
        }
        assert!(worst < 1e-8, "{worst}");
    }

    #[test]
    fn flat_height_gives_zero_eta() {
        let ch = chart(-0.2, 0.2, 11);
        let x = Immersion::from_fn(ch, |i, j| Vec3::new(1.0 + ch.u(i), ch.v(j), 0.0)).unwrap();
        assert_eq!(eta_field(&x).max_modulus(), 0.0);
    }

    #[test]
    fn p_and_r_examples() {
        assert_eq!(
            p_at(Complex::new(0.0, 0.0), 2.0),
            ExtComplex::finite(Complex::new(0.0, 0.0))
        );
        assert!(p_at(Complex::new(0.0, 0.0), -2.0).is_infinite());
        let ch = chart(-0.8, 0.8, 17);
        let x = sphere(1.0, ch);
        let p = p_field(&x);
        let r = r_field(&x);
        for (i, j) in ch.nodes() {
            assert!((p.at(i, j).value - ch.z(i, j)).norm() < 1e-14);
            assert!((r.at(i, j) - 1.0).abs() < 1e-14);
        }
        let unit = sphere(0.0, ch);
        assert!(r_field(&unit).max_modulus() < 1e-15);
    }

    #[test]
    fn p_switches_chart_near_south_pole() {
        let ch = chart(2.0, 4.0, 9);
        let x = sphere(0.0, ch);
        let p = p_field(&x);
        assert!(p.inverted_count() > 0);
        for (i, j) in ch.nodes() {
            let w = p.at(i, j).to_standard().unwrap();
            assert!((w - ch.z(i, j)).norm() < 1e-12 * ch.z(i, j).norm());
        }
    }

    #[test]
    fn omega_examples() {
        let f = Complex::new(0.4, -1.3);
        assert_eq!(omega_complex(f, 0.7, Complex::new(0.0, 0.0)).re, 0.7);
        let ch = chart(-0.4, 0.4, 21);
        let x = Immersion::from_fn(ch, |i, j| {
            let (u, v) = (ch.u(i), ch.v(j));
            Vec3::new(u.exp() * v.cos(), 0.0, u.exp() * v.sin())
        })
        .unwrap();
        let gd = GaussData::compute(&x).unwrap();
        assert!(gd.omega.max_modulus() <= 1e-10);
        assert_eq!(gd.omega_imaginary_residue(&x), 0.0);
    }

    proptest! {
        /// Ω = −(|X| + h)(|g − p|² − |1 + ḡp|²)/2 at every point.
        #[test]
        fn omega_matches_denominator_identity(
            fr in -2.0..2.0f64, fi in -2.0..2.0f64, h in -2.0..2.0f64,
            gr in -3.0..3.0f64, gi in -3.0..3.0f64,
        ) {
            let f = Complex::new(fr, fi);
            let g = Complex::new(gr, gi);
            let xm = (f.norm_sqr() + h * h).sqrt();
            prop_assume!(xm + h > 1e-3);
            let p = f / (xm + h);
            let den = (g - p).norm_sqr() - (1.0 + g.conj() * p).norm_sqr();
            let om = omega_complex(f, h, g);
            prop_assert!((om.re + 0.5 * (xm + h) * den).abs() < 1e-10 * (1.0 + om.re.abs()));
            prop_assert!(om.im.abs() <= 1e-12);
            let inv = omega_ext(f, h, ExtComplex { value: g.inv(), inverted: true }).unwrap();
            prop_assert!((inv.re - om.re).abs() < 1e-9 * (1.0 + om.re.abs()));
        }
    }

    #[test]
    fn normal_and_gauss_round_trip() {
        let ch = chart(-0.4, 0.4, 31);
        for x in [sphere(0.5, ch), bumpy(ch)] {
            let gd = GaussData::compute(&x).unwrap();
            let back = normal_from_gauss(&gd.g);
            for (i, j) in ch.nodes() {
                if let (Some(a), Some(b)) = (gd.normal.get(i, j), back.get(i, j)) {
                    assert!((a.norm() - 1.0).abs() < 1e-10);
                    assert!(a.max_abs_diff(b) < 1e-10);
                }
            }
        }
    }

    #[test]
    fn chart_coherence_and_orientation_swap() {
        let ch = chart(-0.4, 0.4, 31);
        let x = bumpy(ch);
        let gd = GaussData::compute(&x).unwrap();
        let flipped = flip_orientation(&gd.g);
        let neg = gauss_map(&gd.normal.map(|v| -v));
        for (i, j) in ch.nodes() {
            if let (Some(w), Some(a), Some(b)) = (gd.g.get(i, j), flipped.get(i, j), neg.get(i, j))
            {
                assert!(a.distance(&b) < 1e-10, "{a:?} {b:?}");
                if let (Some(s), Some(t)) = (w.to_standard(), w.to_inverted()) {
                    assert!((s * t - 1.0).norm() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn p_and_r_rebuild_the_immersion() {
        let ch = chart(-0.4, 0.4, 21);
        for x in [sphere(-0.7, ch), bumpy(ch)] {
            let (p, r) = (p_field(&x), r_field(&x));
            for (i, j) in ch.nodes() {
                let rebuilt = inverse_stereographic(&p.at(i, j)).scale(r.at(i, j).exp());
                assert!(rebuilt.max_abs_diff(x.point(i, j)) < 1e-10 * x.point(i, j).norm());
            }
        }
    }

    #[test]
    fn antipodal_map_preserves_gauss_map() {
        let ch = chart(-0.4, 0.4, 31);
        let x = bumpy(ch);
        let iso = Isometry::new(Mat3::antipodal(), 0.4, Orientation::Preserving).unwrap();
        let y = x.transform(&iso).unwrap();
        let (g, gy) = (
            GaussData::compute(&x).unwrap().g,
            GaussData::compute(&y).unwrap().g,
        );
        for (i, j) in ch.nodes() {
            if let (Some(a), Some(b)) = (g.get(i, j), gy.get(i, j)) {
                assert!(a.distance(&b) < 1e-12);
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]
        #[test]
        fn gauss_map_is_isometry_equivariant(
            ax in -1.0..1.0f64, ay in -1.0..1.0f64, az in 0.1..1.0f64,
            angle in -3.0..3.0f64, s in -1.0..1.0f64, reflect in any::<bool>(),
        ) {
            let mut m = Mat3::rotation(Vec3::new(ax, ay, az), angle);
            if reflect {
                m = m.mul_mat(&Mat3::new([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, -1.0]]));
            }
            let ch = chart(-0.4, 0.4, 21);
            let x = bumpy(ch);
            let y = x.transform(&Isometry::new(m, s, Orientation::Preserving).unwrap()).unwrap();
            let rm = mobius_from_rotation(&m).unwrap();
            let (g, gy) = (GaussData::compute(&x).unwrap().g, GaussData::compute(&y).unwrap().g);
            for (i, j) in ch.nodes() {
                if let (Some(a), Some(b)) = (g.get(i, j), gy.get(i, j)) {
                    prop_assert!(rm.apply(&a).distance(&b) < 1e-9);
                }
            }
        }
    }
}
