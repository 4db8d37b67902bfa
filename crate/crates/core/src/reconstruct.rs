//! Recovery of a minimal immersion from its Gauss map.
//!
//! From a sampled non-constant `g`: the coefficients `A, B, C` of
//! `A(1 − |p|²) + Bp + Cp̄ = 0`, the two roots `p` and `−1/p̄` of
//! `αp² + βp − ᾱ = 0`, the radial function `r = log|X|` by integrating `r_z`,
//! and `X = e^r σ(p)`. Two immersions with the same Gauss map differ by a
//! vertical translation, possibly composed with the antipodal map.

use std::collections::VecDeque;

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::calculus::{
    d_z, d_zbar, d_zzbar, integrate_exact_form, ComplexField, ExtComplexField, Field, FormIntegral,
    GridChart, ScalarField,
};
use crate::error::{Error, Node, Result};
use crate::gauss::{normal_field, Immersion};
use crate::minimality::{evaluate, gauss_map_regularity, max_of, ResidualEntry, DENOMINATOR_FLOOR};
use crate::model::{inverse_stereographic, ExtComplex};
use crate::scalar::{c, Real};

/// Half-width of the band around `|g| = 1` excluded from reconstruction.
pub const UNIT_BAND: f64 = 1e-3;
/// `|α|` below this multiple of its scale is a degenerate quadratic.
pub const ALPHA_FLOOR: f64 = 1e-12;
/// Default closedness tolerance for `r_z`, relative to `max |r_z|`.
pub const CLOSEDNESS_TOL: f64 = 1e-3;
/// Variation of `g` at or below which it is treated as constant.
pub const CONSTANT_TOL: f64 = 1e-8;

/// `A, B, C` with the derivatives of `g` they were built from.
///
/// Valid on interior standard-chart nodes outside the band `||g| − 1| < 1e-3`.
#[derive(Debug, Clone)]
pub struct AbcCoefficients<T> {
    pub a: ComplexField<T>,
    pub b: ComplexField<T>,
    pub c: ComplexField<T>,
    pub g: ComplexField<T>,
    pub g_z: ComplexField<T>,
    pub g_zb: ComplexField<T>,
    /// Nodes excluded by the `|g| = 1` band.
    pub masked: usize,
}

pub fn abc_coefficients<T: Real>(g: &ExtComplexField<T>) -> Result<AbcCoefficients<T>> {
    let ch = *g.chart();
    let band = c::<T>(UNIT_BAND);
    let mut masked = 0;
    let gs = g.standard_values().map_opt(|w| {
        if (w.norm() - T::one()).abs() < band {
            masked += 1;
            None
        } else {
            Some(w)
        }
    });
    let (g_z, g_zb, g_zzb) = (d_z(&gs), d_zbar(&gs), d_zzbar(&gs));
    let (one, two) = (T::one(), c::<T>(2.0));
    let mut a = Vec::with_capacity(ch.len());
    let mut b = Vec::with_capacity(ch.len());
    let mut cc = Vec::with_capacity(ch.len());
    for (i, j) in ch.nodes() {
        let vals = (|| {
            Some((
                gs.get(i, j)?,
                g_z.get(i, j)?,
                g_zb.get(i, j)?,
                g_zzb.get(i, j)?,
            ))
        })();
        let (av, bv, cv) = match vals {
            Some((g, gz, gzb, gzzb)) => {
                let m = g.norm_sqr();
                let gz2 = gz.norm_sqr();
                let p = gz * gzb;
                (
                    Some(-gzzb * (one - m * m) + g * (two * gz2) - g.conj() * p * (two * m)),
                    Some(
                        -g.conj() * gzzb * (two * (one + m)) - Complex::new(two * gz2, T::zero())
                            + g.conj() * g.conj() * p * two,
                    ),
                    Some(
                        -g * gzzb * (two * (one + m))
                            + g * g * (two * gz2)
                            + p * (two * (one + two * m)),
                    ),
                )
            }
            None => (None, None, None),
        };
        a.push(av);
        b.push(bv);
        cc.push(cv);
    }
    let to_field = |v: Vec<Option<Complex<T>>>| {
        let mut it = v.into_iter();
        Field::from_fn_opt(ch, |_, _| it.next().flatten()).with_margin(g_zzb.margin())
    };
    let (a, b, cc) = (to_field(a), to_field(b), to_field(cc));
    if a.valid_count() == 0 {
        return Err(Error::InsufficientData(
            "every node of g is masked or on the boundary".into(),
        ));
    }
    Ok(AbcCoefficients {
        a,
        b,
        c: cc,
        g: gs,
        g_z,
        g_zb,
        masked,
    })
}

impl<T: Real> AbcCoefficients<T> {
    pub fn chart(&self) -> &GridChart<T> {
        self.a.chart()
    }

    /// `(α, β) = (ĀB − AC̄, |C|² − |B|²)`.
    pub fn quadratic(&self, i: usize, j: usize) -> Option<(Complex<T>, T)> {
        let (a, b, c) = (self.a.get(i, j)?, self.b.get(i, j)?, self.c.get(i, j)?);
        Some((a.conj() * b - a * c.conj(), c.norm_sqr() - b.norm_sqr()))
    }

    /// `D = ḡ_z̄ − ḡ²g_z̄` and `E = g²ḡ_z̄ − g_z̄`.
    pub fn d_e(&self, i: usize, j: usize) -> Option<(Complex<T>, Complex<T>)> {
        let (g, gz, gzb) = (self.g.get(i, j)?, self.g_z.get(i, j)?, self.g_zb.get(i, j)?);
        // ḡ_z̄ = conj(g_z)
        let gbar_zb = gz.conj();
        Some((gbar_zb - g.conj() * g.conj() * gzb, g * g * gbar_zb - gzb))
    }

    /// `A(1 − |p|²) + Bp + Cp̄` for a given `p`, relative to its largest term.
    pub fn substitution_residual(&self, p: &ExtComplexField<T>) -> ResidualEntry {
        let one = T::one();
        evaluate("abc_substitution", self.chart(), self.a.margin(), |i, j| {
            let (a, b, cc) = (self.a.get(i, j)?, self.b.get(i, j)?, self.c.get(i, j)?);
            let pv = p.get(i, j)?;
            // multiply through by |p̃|² on the inverted chart, p = 1/p̃
            let (t1, t2, t3) = if !pv.inverted {
                let p = pv.value;
                (a * (one - p.norm_sqr()), b * p, cc * p.conj())
            } else {
                let t = pv.value;
                (a * (t.norm_sqr() - one), b * t.conj(), cc * t)
            };
            Some((
                (t1 + t2 + t3).norm(),
                max_of(&[t1.norm(), t2.norm(), t3.norm()]),
            ))
        })
    }

    /// Residuals of `2ḡA − (1−|g|²)B = 2(1+|g|²)g_z D` and `2gA − (1−|g|²)C = 2(1+|g|²)g_z E`.
    pub fn identity_residuals(&self) -> [ResidualEntry; 2] {
        let (one, two) = (T::one(), c::<T>(2.0));
        let margin = self.a.margin();
        let eval = |name: &str, first: bool| {
            evaluate(name, self.chart(), margin, |i, j| {
                let (a, b, cc, g, gz) = (
                    self.a.get(i, j)?,
                    self.b.get(i, j)?,
                    self.c.get(i, j)?,
                    self.g.get(i, j)?,
                    self.g_z.get(i, j)?,
                );
                let (d, e) = self.d_e(i, j)?;
                let m = g.norm_sqr();
                let (lhs1, lhs2, rhs) = if first {
                    (
                        g.conj() * a * two,
                        b * (one - m),
                        gz * d * (two * (one + m)),
                    )
                } else {
                    (g * a * two, cc * (one - m), gz * e * (two * (one + m)))
                };
                Some((
                    (lhs1 - lhs2 - rhs).norm(),
                    max_of(&[lhs1.norm(), lhs2.norm(), rhs.norm()]),
                ))
            })
        };
        [eval("abc_identity_d", true), eval("abc_identity_e", false)]
    }
}

/// The two root fields of `αp² + βp − ᾱ = 0`, continued from a seed node.
#[derive(Debug, Clone)]
pub struct PRoots<T> {
    /// The root of smaller modulus at the seed, continued by nearest value.
    pub first: ExtComplexField<T>,
    /// `−1/p̄` of `first`.
    pub second: ExtComplexField<T>,
    pub seed: Node,
    /// `min |α| / scale` over solved nodes.
    pub alpha_margin: f64,
    /// Largest `|root₁ · conj(root₂) + 1|`.
    pub antipodal_defect: f64,
    /// Largest `|root₁ root₂ + ᾱ/α|` (Vieta).
    pub vieta_defect: f64,
    /// Solved nodes not connected to the seed.
    pub unreached: usize,
}

/// Both roots at one node, as `(q/α, −ᾱ/q)` with the cancellation-free `q`.
fn roots_at<T: Real>(alpha: Complex<T>, beta: T) -> (ExtComplex<T>, ExtComplex<T>) {
    let disc = (beta * beta + c::<T>(4.0) * alpha.norm_sqr()).sqrt();
    let s = if beta >= T::zero() {
        T::one()
    } else {
        -T::one()
    };
    let q = Complex::new(-(beta + s * disc) * c::<T>(0.5), T::zero());
    (
        ExtComplex::from_ratio(q, alpha),
        ExtComplex::from_ratio(-alpha.conj(), q),
    )
}

/// `−1/w̄`, in canonical chart.
fn antipode<T: Real>(w: ExtComplex<T>) -> ExtComplex<T> {
    let one = Complex::new(T::one(), T::zero());
    if w.inverted {
        ExtComplex::from_ratio(-w.value.conj(), one)
    } else {
        ExtComplex::from_ratio(-one, w.value.conj())
    }
}

fn standard<T: Real>(w: ExtComplex<T>) -> Option<Complex<T>> {
    w.to_standard()
}

pub fn solve_p_quadratic<T: Real>(abc: &AbcCoefficients<T>, seed: Node) -> Result<PRoots<T>> {
    let ch = *abc.chart();
    let n = ch.len();
    let mut pairs: Vec<Option<(ExtComplex<T>, ExtComplex<T>)>> = vec![None; n];
    let mut alpha_margin = f64::INFINITY;
    let mut vieta_defect = 0.0f64;
    for (i, j) in ch.nodes() {
        let Some((alpha, beta)) = abc.quadratic(i, j) else {
            continue;
        };
        let (a, b, cc) = (abc.a.at(i, j), abc.b.at(i, j), abc.c.at(i, j));
        let scale = a.norm() * (b.norm() + cc.norm());
        if !(alpha.norm() > c::<T>(ALPHA_FLOOR) * scale) {
            return Err(Error::DegenerateQuadratic { node: (i, j) });
        }
        alpha_margin = alpha_margin.min((alpha.norm() / scale).to_f64_lossy());
        let (r1, r2) = roots_at(alpha, beta);
        if let (Some(x), Some(y)) = (standard(r1), standard(r2)) {
            let target = -alpha.conj() / alpha;
            vieta_defect = vieta_defect.max((x * y - target).norm().to_f64_lossy());
        }
        pairs[ch.idx(i, j)] = Some((r1, r2));
    }
    let Some((s1, s2)) = pairs
        .get(ch.idx(seed.0.min(ch.nu - 1), seed.1.min(ch.nv - 1)))
        .copied()
        .flatten()
    else {
        return Err(Error::InsufficientData(format!(
            "seed node {seed:?} has no quadratic (masked or boundary)"
        )));
    };
    let modulus = |w: ExtComplex<T>| {
        if w.inverted {
            T::infinity()
        } else {
            w.value.norm()
        }
    };
    let seed_root = if modulus(s1) <= modulus(s2) { s1 } else { s2 };

    let mut chosen: Vec<Option<ExtComplex<T>>> = vec![None; n];
    chosen[ch.idx(seed.0, seed.1)] = Some(seed_root);
    let mut queue = VecDeque::from([seed]);
    while let Some((i, j)) = queue.pop_front() {
        let parent = chosen[ch.idx(i, j)].expect("queued nodes are assigned");
        let neighbours = [
            (i.wrapping_sub(1), j),
            (i + 1, j),
            (i, j.wrapping_sub(1)),
            (i, j + 1),
        ];
        for (a, b) in neighbours {
            if a >= ch.nu || b >= ch.nv {
                continue;
            }
            let k = ch.idx(a, b);
            if chosen[k].is_some() {
                continue;
            }
            if let Some((r1, r2)) = pairs[k] {
                let pick = if r1.distance(&parent) <= r2.distance(&parent) {
                    r1
                } else {
                    r2
                };
                chosen[k] = Some(pick);
                queue.push_back((a, b));
            }
        }
    }
    let unreached = pairs
        .iter()
        .zip(&chosen)
        .filter(|(p, c)| p.is_some() && c.is_none())
        .count();
    let margin = abc.a.margin();
    let first = Field::from_fn_opt(ch, |i, j| chosen[ch.idx(i, j)]).with_margin(margin);
    let second = first.map(antipode).with_margin(margin);
    let mut antipodal_defect = 0.0f64;
    for (i, j) in ch.nodes() {
        let k = ch.idx(i, j);
        if let (Some(x), Some((r1, r2))) = (chosen[k], pairs[k]) {
            let other = if x == r1 { r2 } else { r1 };
            // distance between the computed other root and −1/x̄
            antipodal_defect = antipodal_defect.max(other.distance(&antipode(x)).to_f64_lossy());
        }
    }
    Ok(PRoots {
        first,
        second,
        seed,
        alpha_margin,
        antipodal_defect,
        vieta_defect,
        unreached,
    })
}

/// `r_z` from `g`, `g_z` and `p` on either chart of `p`.
///
/// With `p = 1/t` the expression becomes
/// `2(ḡt̄ − 1)(t + ḡ) g_z / ((1 + |g|²)(|gt − 1|² − |t + ḡ|²))`.
pub fn r_z_ext<T: Real>(g: Complex<T>, g_z: Complex<T>, p: ExtComplex<T>) -> Option<Complex<T>> {
    let one = T::one();
    let (num, den) = if !p.inverted {
        let p = p.value;
        let (a, b) = ((g - p).norm_sqr(), (g.conj() * p + one).norm_sqr());
        (
            (g.conj() - p.conj()) * (g.conj() * p + one),
            (a - b, a.max(b)),
        )
    } else {
        let t = p.value;
        let (a, b) = ((g * t - one).norm_sqr(), (t + g.conj()).norm_sqr());
        (
            (g.conj() * t.conj() - one) * (t + g.conj()),
            (a - b, a.max(b)),
        )
    };
    if den.0.abs() < c::<T>(DENOMINATOR_FLOOR) * den.1 {
        return None;
    }
    Some(num * g_z * (c::<T>(2.0) / ((one + g.norm_sqr()) * den.0)))
}

/// Integrates `r_z` built from `g` and `p` with `r(base) = r0`.
///
/// `closedness_tol` is relative to `max |r_z|`; failure to close means the
/// data is not the Gauss map of a minimal immersion.
pub fn recover_r<T: Real>(
    abc: &AbcCoefficients<T>,
    p: &ExtComplexField<T>,
    base: Node,
    r0: T,
    closedness_tol: T,
) -> Result<FormIntegral<T>> {
    let ch = *abc.chart();
    let mut singular = None;
    let rz = Field::from_fn_opt(ch, |i, j| {
        let (g, gz, pv) = (abc.g.get(i, j)?, abc.g_z.get(i, j)?, p.get(i, j)?);
        let out = r_z_ext(g, gz, pv);
        if out.is_none() {
            singular.get_or_insert((i, j));
        }
        out
    })
    .with_margin(abc.a.margin().max(p.margin()));
    if let Some(node) = singular {
        return Err(Error::SingularDenominator { node });
    }
    let tol = closedness_tol * rz.max_modulus();
    integrate_exact_form(&rz, base, r0, tol).map_err(|e| match e {
        Error::Integrability { residual, tol } => Error::InconsistentGaussMap(format!(
            "r_z is not closed: circulation residual {residual:e} exceeds {tol:e}"
        )),
        e => e,
    })
}

/// `X = e^r σ(p)` on a chart where both fields are valid everywhere.
pub fn assemble_immersion<T: Real>(
    p: &ExtComplexField<T>,
    r: &ScalarField<T>,
) -> Result<Immersion<T>> {
    if !p.same_chart(r) {
        return Err(Error::Shape("p and r must share a chart".into()));
    }
    let ch = *p.chart();
    for (i, j) in ch.nodes() {
        if !(p.is_valid(i, j) && r.is_valid(i, j)) {
            return Err(Error::Assembly { node: (i, j) });
        }
    }
    let x = Immersion::from_fn(ch, |i, j| {
        inverse_stereographic(&p.at(i, j)).scale(r.at(i, j).exp())
    })?;
    match normal_field(&x) {
        Ok(_) => Ok(x),
        Err(Error::Degenerate { node, .. }) => Err(Error::Assembly { node }),
        Err(e) => Err(e),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Congruence {
    VerticalTranslation,
    AntipodalTranslation,
    NotCongruent,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CongruenceResult {
    pub verdict: Congruence,
    /// `e^s` of the vertical translation: the median of `|X̂|/|X|`.
    pub q0: f64,
    /// Deviation of the reported verdict (the smaller one when not congruent).
    pub max_deviation: f64,
    pub vertical_deviation: f64,
    pub antipodal_deviation: f64,
}

/// Tests `X̂ = q₀X` and `X̂ = −q₀X` in the ambient metric.
///
/// The nodewise deviation is `|log(|X̂|/(q₀|X|))|` plus the angle between
/// `X/|X|` and `±X̂/|X̂|`.
pub fn verify_congruence<T: Real>(
    x: &Immersion<T>,
    xhat: &Immersion<T>,
    tol: f64,
) -> Result<CongruenceResult> {
    let ch = *x.chart();
    if ch != *xhat.chart() {
        return Err(Error::Shape("immersions must share a chart".into()));
    }
    let mut ratios: Vec<f64> = ch
        .nodes()
        .map(|(i, j)| (xhat.point(i, j).norm() / x.point(i, j).norm()).to_f64_lossy())
        .collect();
    ratios.sort_by(f64::total_cmp);
    let q0 = ratios[ratios.len() / 2];
    let (mut vertical, mut antipodal) = (0.0f64, 0.0f64);
    for (i, j) in ch.nodes() {
        let (a, b) = (x.point(i, j), xhat.point(i, j));
        let (na, nb) = (a.norm().to_f64_lossy(), b.norm().to_f64_lossy());
        let radial = (nb / (q0 * na)).ln().abs();
        let (ua, ub) = (a.normalized(), b.normalized());
        // atan2 keeps the angle accurate near 0 and π
        let angle = |s: T| {
            let cross = ua.cross(ub.scale(s)).norm().to_f64_lossy();
            cross.atan2(ua.dot(ub.scale(s)).to_f64_lossy())
        };
        vertical = vertical.max(radial + angle(T::one()));
        antipodal = antipodal.max(radial + angle(-T::one()));
    }
    let (verdict, max_deviation) = if vertical <= antipodal && vertical <= tol {
        (Congruence::VerticalTranslation, vertical)
    } else if antipodal <= tol {
        (Congruence::AntipodalTranslation, antipodal)
    } else {
        (Congruence::NotCongruent, vertical.min(antipodal))
    };
    Ok(CongruenceResult {
        verdict,
        q0,
        max_deviation,
        vertical_deviation: vertical,
        antipodal_deviation: antipodal,
    })
}

/// One reconstructed immersion with the fields it was assembled from.
#[derive(Debug, Clone)]
pub struct Candidate<T> {
    pub p: ExtComplexField<T>,
    pub r: FormIntegral<T>,
    /// Defined on the input chart shrunk by the derivative margin.
    pub immersion: Immersion<T>,
}

#[derive(Debug, Clone)]
pub struct Reconstruction<T> {
    pub abc: AbcCoefficients<T>,
    pub roots: PRoots<T>,
    pub candidates: [Candidate<T>; 2],
    /// Boundary layers removed from the input chart.
    pub margin: usize,
    /// The two candidates agree (only possible on special charts).
    pub coincident: bool,
}

impl<T: Real> Reconstruction<T> {
    /// Restricts an immersion on the input chart to the candidates' chart.
    pub fn restrict(&self, x: &Immersion<T>) -> Result<Immersion<T>> {
        Immersion::new(x.f().shrink(self.margin)?, x.h().shrink(self.margin)?)
    }
}

/// Rejects constant or singular `g`, for which there is nothing to reconstruct.
fn check_regular<T: Real>(g: &ExtComplexField<T>) -> Result<()> {
    let reg = gauss_map_regularity(g)
        .ok_or_else(|| Error::InsufficientData("g has no valid nodes".into()))?;
    if reg.g_variation <= CONSTANT_TOL {
        return Err(Error::ConstantGaussMap(format!(
            "g varies by {:e} over the chart",
            reg.g_variation
        )));
    }
    if reg.max_det_dg <= CONSTANT_TOL {
        return Err(Error::ConstantGaussMap(format!(
            "dg is singular: max |det dg| = {:e}",
            reg.max_det_dg
        )));
    }
    Ok(())
}

/// Rejects charts crossing a singular curve of `g`, where `|g_z|² − |g_z̄|²`
/// changes sign and the quadratic degenerates between nodes.
fn check_orientation<T: Real>(abc: &AbcCoefficients<T>) -> Result<()> {
    let ch = *abc.chart();
    let mut seen: [Option<Node>; 2] = [None, None];
    for (i, j) in ch.nodes() {
        if let (Some(a), Some(b)) = (abc.g_z.get(i, j), abc.g_zb.get(i, j)) {
            let det = a.norm_sqr() - b.norm_sqr();
            if det != T::zero() {
                let k = usize::from(det < T::zero());
                seen[k].get_or_insert((i, j));
                if let Some(other) = seen[1 - k] {
                    let node = if ch.idx(other.0, other.1) > ch.idx(i, j) {
                        other
                    } else {
                        (i, j)
                    };
                    return Err(Error::SingularGaussMap { node });
                }
            }
        }
    }
    Ok(())
}

/// Runs `A, B, C` → both roots → `r` → `X` for both candidates.
pub fn reconstruct_pipeline<T: Real>(
    g: &ExtComplexField<T>,
    base: Node,
    r0: T,
) -> Result<Reconstruction<T>> {
    reconstruct_pipeline_with(g, base, r0, c(CLOSEDNESS_TOL))
}

pub fn reconstruct_pipeline_with<T: Real>(
    g: &ExtComplexField<T>,
    base: Node,
    r0: T,
    closedness_tol: T,
) -> Result<Reconstruction<T>> {
    check_regular(g)?;
    let abc = abc_coefficients(g)?;
    check_orientation(&abc)?;
    let roots = solve_p_quadratic(&abc, base)?;
    let margin = abc.a.margin();
    let build = |p: &ExtComplexField<T>| -> Result<Candidate<T>> {
        let r = recover_r(&abc, p, base, r0, closedness_tol)?;
        let immersion = assemble_immersion(&p.shrink(margin)?, &r.r.shrink(margin)?)?;
        Ok(Candidate {
            p: p.clone(),
            r,
            immersion,
        })
    };
    let first = build(&roots.first)?;
    let second = build(&roots.second)?;
    let coincident = first
        .immersion
        .points()
        .zip_map(&second.immersion.points(), |a, b| (a - b).norm())
        .max_modulus()
        <= c::<T>(1e-12);
    Ok(Reconstruction {
        abc,
        roots,
        candidates: [first, second],
        margin,
        coincident,
    })
}
