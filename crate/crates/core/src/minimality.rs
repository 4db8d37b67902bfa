//! Residuals of the identities satisfied by conformal minimal immersions, the
//! induced metric, Gauss curvature and the cylinder/sphere/generic classification.
//!
//! Every residual is evaluated nodewise on the valid interior and summarized
//! by its largest modulus, RMS and a scale. The scale is the largest modulus
//! over the evaluated nodes of any single term of the identity, or of a
//! reference magnitude built from the first derivatives that enter it, so
//! identities whose terms all vanish (holomorphic `p`, constant `g`) are
//! still measured against the size of the data.

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::calculus::{
    d_z, d_zbar, d_zzbar, ComplexField, ExtComplexField, Field, GridChart, ScalarField,
};
use crate::error::{Error, Result};
use crate::gauss::{FirstDerivatives, GaussData, Immersion};
use crate::model::{connection_unchecked, ExtComplex};
use crate::scalar::{c, Real};

/// `|g|` or `|η|` below this excludes a node from identities that divide by them.
pub const MODULUS_FLOOR: f64 = 1e-6;
/// Relative size of `|g − p|² − |1 + ḡp|²` treated as a vanishing denominator.
pub const DENOMINATOR_FLOOR: f64 = 1e-10;
/// Relative residual treated as exact (rounding only).
pub const ROUNDING_FLOOR: f64 = 1e-11;

/// Relative acceptance threshold for a chart with `n` samples along its shorter axis:
/// `1e-5` at 401 samples, scaled with `h²`.
pub fn relative_tolerance(n: usize) -> f64 {
    let r = 400.0 / (n.max(2) - 1) as f64;
    1e-5 * r * r
}

pub fn chart_tolerance<T: Real>(chart: &GridChart<T>) -> f64 {
    relative_tolerance(chart.nu.min(chart.nv))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualEntry {
    pub name: String,
    pub max_abs: f64,
    pub rms: f64,
    pub nodes_evaluated: usize,
    pub nodes_excluded: usize,
    pub mask_margin: usize,
    /// Largest modulus of a single term of the identity on evaluated nodes.
    pub scale: f64,
    /// Both sides vanish identically; no residual is meaningful.
    #[serde(default)]
    pub degenerate: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub diagnostic: Option<f64>,
}

impl ResidualEntry {
    /// `max_abs / scale`, or 0 for an entry with nothing to compare.
    pub fn relative(&self) -> f64 {
        if self.degenerate || self.nodes_evaluated == 0 {
            0.0
        } else if self.scale > 0.0 {
            self.max_abs / self.scale
        } else if self.max_abs == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    }

    pub fn passes(&self, tol_rel: f64) -> bool {
        self.relative() <= tol_rel
    }

    fn degenerate(name: &str, margin: usize) -> Self {
        Self {
            name: name.into(),
            max_abs: 0.0,
            rms: 0.0,
            nodes_evaluated: 0,
            nodes_excluded: 0,
            mask_margin: margin,
            scale: 0.0,
            degenerate: true,
            diagnostic: None,
        }
    }
}

/// Accumulates a residual over the interior of a chart at a given margin.
pub(crate) fn evaluate<T: Real>(
    name: &str,
    chart: &GridChart<T>,
    margin: usize,
    mut f: impl FnMut(usize, usize) -> Option<(T, T)>,
) -> ResidualEntry {
    let (mut max_abs, mut sum_sq, mut scale) = (0.0f64, 0.0f64, 0.0f64);
    let (mut evaluated, mut excluded) = (0, 0);
    for (i, j) in chart.nodes() {
        if !chart.is_interior((i, j), margin) {
            continue;
        }
        match f(i, j) {
            Some((res, sc)) if res.is_finite() && sc.is_finite() => {
                let r = res.to_f64_lossy();
                max_abs = max_abs.max(r);
                sum_sq += r * r;
                scale = scale.max(sc.to_f64_lossy());
                evaluated += 1;
            }
            _ => excluded += 1,
        }
    }
    ResidualEntry {
        name: name.into(),
        max_abs,
        rms: if evaluated > 0 {
            (sum_sq / evaluated as f64).sqrt()
        } else {
            0.0
        },
        nodes_evaluated: evaluated,
        nodes_excluded: excluded,
        mask_margin: margin,
        scale,
        degenerate: false,
        diagnostic: None,
    }
}

pub(crate) fn max_of<T: Real>(terms: &[T]) -> T {
    terms.iter().fold(T::zero(), |m, &t| m.max(t.abs()))
}

/// Derivatives shared by the residual evaluators.
pub struct Derived<T> {
    pub xmod: ScalarField<T>,
    pub fz: ComplexField<T>,
    pub fzb: ComplexField<T>,
    pub eta: ComplexField<T>,
    pub eta_z: ComplexField<T>,
    pub eta_zb: ComplexField<T>,
    /// `g` on standard-chart nodes.
    pub g: ComplexField<T>,
    pub g_z: ComplexField<T>,
    pub g_zb: ComplexField<T>,
    pub g_zzb: ComplexField<T>,
    /// `p` on standard-chart nodes.
    pub p: ComplexField<T>,
    pub p_z: ComplexField<T>,
    pub p_zb: ComplexField<T>,
    pub p_zzb: ComplexField<T>,
    pub r_z: ComplexField<T>,
    pub omega: ScalarField<T>,
}

impl<T: Real> Derived<T> {
    pub fn new(x: &Immersion<T>, gd: &GaussData<T>) -> Self {
        let d = FirstDerivatives::of(x);
        let g = gd.g.standard_values();
        let p = gd.p.standard_values();
        Self {
            xmod: x.modulus(),
            eta_z: d_z(&d.eta),
            eta_zb: d_zbar(&d.eta),
            g_z: d_z(&g),
            g_zb: d_zbar(&g),
            g_zzb: d_zzbar(&g),
            p_z: d_z(&p),
            p_zb: d_zbar(&p),
            p_zzb: d_zzbar(&p),
            r_z: d_z(&gd.r.to_complex()),
            fz: d.fz,
            fzb: d.fzb,
            eta: d.eta,
            g,
            p,
            omega: gd.omega.clone(),
        }
    }
}

/// `F_z (F̄)_z + η²/4`.
pub fn conformality_residual<T: Real>(x: &Immersion<T>) -> ResidualEntry {
    let d = FirstDerivatives::of(x);
    let q = c::<T>(0.25);
    evaluate("conformality", x.chart(), 1, |i, j| {
        let (fz, fzb, eta) = (d.fz.get(i, j)?, d.fzb.get(i, j)?, d.eta.get(i, j)?);
        let a = fz * fzb.conj();
        let b = eta * eta * q;
        let reference = fz.norm_sqr() + fzb.norm_sqr() + eta.norm_sqr() * q;
        Some(((a + b).norm(), max_of(&[a.norm(), b.norm(), reference])))
    })
}

/// `∇̄_{X_z̄} X_z = Σ (A_k)_z̄ E_k + Σ Ā_ℓ A_j ∇̄_{E_ℓ} E_j` with `X_z = Σ A_j E_j`,
/// measured in the (orthonormal) frame.
pub fn covariant_minimality_residual<T: Real>(x: &Immersion<T>) -> ResidualEntry {
    let ch = *x.chart();
    let xmod = x.modulus();
    let comps: [ComplexField<T>; 3] = [
        x.f().map(|w| Complex::new(w.re, T::zero())),
        x.f().map(|w| Complex::new(w.im, T::zero())),
        x.h().to_complex(),
    ];
    // A_j = ∂_z x_j / |X|
    let a: Vec<ComplexField<T>> = comps
        .iter()
        .map(|f| d_z(f).zip_map(&xmod, |w, m| w / m))
        .collect();
    let a_zb: Vec<ComplexField<T>> = a.iter().map(d_zbar).collect();
    evaluate("covariant_minimality", &ch, 2, |i, j| {
        let av = [a[0].get(i, j)?, a[1].get(i, j)?, a[2].get(i, j)?];
        let mut res = [a_zb[0].get(i, j)?, a_zb[1].get(i, j)?, a_zb[2].get(i, j)?];
        let reference = av.iter().fold(T::zero(), |s, w| s + w.norm_sqr());
        let mut scale = res.iter().fold(reference, |m, w| m.max(w.norm()));
        let p = x.point(i, j);
        for (l, al) in av.iter().enumerate() {
            for (k, ak) in av.iter().enumerate() {
                let coef = al.conj() * ak;
                let gamma = connection_unchecked(p, l, k).0;
                for (m, slot) in res.iter_mut().enumerate() {
                    let term = coef * gamma[m];
                    scale = scale.max(term.norm());
                    *slot = *slot + term;
                }
            }
        }
        let norm = res
            .iter()
            .map(|w| w.norm_sqr())
            .fold(T::zero(), |s, v| s + v)
            .sqrt();
        Some((norm, scale))
    })
}

/// `(1 − |g|²)/(1 + |g|²) · ḡ_z̄/ḡ − η_z̄/η`, on nodes with `|g|, |η| ≥ 1e-6`.
///
/// The logarithmic derivatives are cleared by `ḡη`, so nodes with small `|g|`
/// do not dominate the scale.
pub fn eta_g_residual<T: Real>(dv: &Derived<T>) -> ResidualEntry {
    let floor = c::<T>(MODULUS_FLOOR);
    let one = T::one();
    evaluate("eta_g", dv.g.chart(), 2, |i, j| {
        let (g, gz, eta, eta_zb) = (
            dv.g.get(i, j)?,
            dv.g_z.get(i, j)?,
            dv.eta.get(i, j)?,
            dv.eta_zb.get(i, j)?,
        );
        if g.norm() < floor || eta.norm() < floor {
            return None;
        }
        let eta_z = dv.eta_z.get(i, j)?;
        let m = g.norm_sqr();
        // ḡ_z̄ = conj(g_z)
        let a = gz.conj() * eta * ((one - m) / (one + m));
        let b = eta_zb * g.conj();
        let reference = gz.norm() * eta.norm() + eta_z.norm() * g.norm();
        Some(((a - b).norm(), max_of(&[a.norm(), b.norm(), reference])))
    })
}

/// The two equations of the minimality system:
/// `4|X|² g ḡ_z̄ + η̄(1 + |g|²)Ω` and `4|X|²|g|² η̄_z + |η|²(1 − |g|²)Ω`.
pub fn minimality_system_residual<T: Real>(dv: &Derived<T>) -> [ResidualEntry; 2] {
    let (one, four) = (T::one(), c::<T>(4.0));
    let ch = dv.g.chart();
    let first = evaluate("minimality_g", ch, 2, |i, j| {
        let (g, gz, eta, om, xm) = (
            dv.g.get(i, j)?,
            dv.g_z.get(i, j)?,
            dv.eta.get(i, j)?,
            dv.omega.get(i, j)?,
            dv.xmod.get(i, j)?,
        );
        let a = g * gz.conj() * (four * xm * xm);
        let b = eta.conj() * ((one + g.norm_sqr()) * om);
        let reference = eta.norm() * xm * (one + g.norm_sqr());
        Some(((a + b).norm(), max_of(&[a.norm(), b.norm(), reference])))
    });
    let second = evaluate("minimality_eta", ch, 2, |i, j| {
        let (g, eta, eta_zb, om, xm) = (
            dv.g.get(i, j)?,
            dv.eta.get(i, j)?,
            dv.eta_zb.get(i, j)?,
            dv.omega.get(i, j)?,
            dv.xmod.get(i, j)?,
        );
        let m = g.norm_sqr();
        // η̄_z = conj(η_z̄)
        let a = eta_zb.conj() * (four * xm * xm * m);
        let b = eta.norm_sqr() * (one - m) * om;
        let reference = eta.norm_sqr() * xm * (one + m);
        Some(((a + b).norm(), max_of(&[a.norm(), b.abs(), reference])))
    });
    [first, second]
}

/// Harmonicity of `p` and the two first-order equations linking `p` and `g`:
/// `(1 + |p|²)p_zz̄ − 2p̄ p_z p_z̄`, `(ḡ − p̄)² p_z + (1 + ḡp)² p̄_z` and
/// `(1 + |p|²)² g_z − (1 + g p̄)² p_z − (g − p)² p̄_z`.
pub fn p_system_residual<T: Real>(dv: &Derived<T>) -> [ResidualEntry; 3] {
    let (one, two) = (T::one(), c::<T>(2.0));
    let ch = dv.p.chart();
    let harm = evaluate("p_harmonicity", ch, 1, |i, j| {
        let (p, pz, pzb, pzzb) = (
            dv.p.get(i, j)?,
            dv.p_z.get(i, j)?,
            dv.p_zb.get(i, j)?,
            dv.p_zzb.get(i, j)?,
        );
        let a = pzzb * (one + p.norm_sqr());
        let b = p.conj() * pz * pzb * two;
        let reference = (one + p.norm_sqr()) * (pz.norm() + pzb.norm()).powi(2);
        Some(((a - b).norm(), max_of(&[a.norm(), b.norm(), reference])))
    });
    let eq1 = evaluate("p_equation_1", ch, 1, |i, j| {
        let (g, p, pz, pzb) = (
            dv.g.get(i, j)?,
            dv.p.get(i, j)?,
            dv.p_z.get(i, j)?,
            dv.p_zb.get(i, j)?,
        );
        let a = (g.conj() - p.conj()).powu(2) * pz;
        let b = (g.conj() * p + one).powu(2) * pzb.conj();
        let (_, s1, s2) = denominator(g, p);
        let reference = (s1 + s2) * (pz.norm() + pzb.norm());
        Some(((a + b).norm(), max_of(&[a.norm(), b.norm(), reference])))
    });
    let eq2 = evaluate("p_equation_2", ch, 2, |i, j| {
        let (g, gz, p, pz, pzb) = (
            dv.g.get(i, j)?,
            dv.g_z.get(i, j)?,
            dv.p.get(i, j)?,
            dv.p_z.get(i, j)?,
            dv.p_zb.get(i, j)?,
        );
        let a = gz * (one + p.norm_sqr()).powi(2);
        let b = (g * p.conj() + one).powu(2) * pz;
        let e = (g - p).powu(2) * pzb.conj();
        let reference = (one + p.norm_sqr()).powi(2) * (pz.norm() + pzb.norm());
        Some((
            (a - b - e).norm(),
            max_of(&[a.norm(), b.norm(), e.norm(), reference]),
        ))
    });
    [harm, eq1, eq2]
}

fn denominator<T: Real>(g: Complex<T>, p: Complex<T>) -> (T, T, T) {
    let a = (g - p).norm_sqr();
    let b = (g.conj() * p + T::one()).norm_sqr();
    (a - b, a, b)
}

/// Second-order equation for `g` with coefficients built from `p`:
/// `(|g−p|² − |1+ḡp|²)(1+|g|²) g_zz̄ + 2(g−p)(1+gp̄)|g_z|² + 2(ḡ|1+ḡp|² − (ḡ−p̄)(1+|g|²)) g_z g_z̄`.
pub fn gaussmap_pde_residual<T: Real>(dv: &Derived<T>) -> ResidualEntry {
    let (one, two) = (T::one(), c::<T>(2.0));
    evaluate("gauss_map_pde", dv.g.chart(), 2, |i, j| {
        let (g, gz, gzb, gzzb, p) = (
            dv.g.get(i, j)?,
            dv.g_z.get(i, j)?,
            dv.g_zb.get(i, j)?,
            dv.g_zzb.get(i, j)?,
            dv.p.get(i, j)?,
        );
        let (den, a, b) = denominator(g, p);
        let m = one + g.norm_sqr();
        let t1 = gzzb * (den * m);
        let t2 = (g - p) * (g * p.conj() + one) * (two * gz.norm_sqr());
        let t3 = (g.conj() * b - (g.conj() - p.conj()) * m) * gz * gzb * two;
        let reference = (a + b) * m * (gz.norm() + gzb.norm()).powi(2);
        Some((
            (t1 + t2 + t3).norm(),
            max_of(&[t1.norm(), t2.norm(), t3.norm(), reference]),
        ))
    })
}

/// `r_z` in terms of `g` and `p`: `2(ḡ − p̄)(1 + ḡp) g_z / ((1 + |g|²)(|g − p|² − |1 + ḡp|²))`.
pub fn r_z_from_gauss<T: Real>(
    g: Complex<T>,
    g_z: Complex<T>,
    p: Complex<T>,
) -> Option<Complex<T>> {
    let (den, a, b) = denominator(g, p);
    if den.abs() < c::<T>(DENOMINATOR_FLOOR) * a.max(b) {
        return None;
    }
    let one = T::one();
    Some(
        (g.conj() - p.conj())
            * (g.conj() * p + one)
            * g_z
            * (c::<T>(2.0) / ((one + g.norm_sqr()) * den)),
    )
}

/// Residual of the `r_z` equation. A vanishing denominator is an error.
pub fn r_equation_residual<T: Real>(dv: &Derived<T>) -> Result<ResidualEntry> {
    let mut singular = None;
    let entry = evaluate("r_equation", dv.g.chart(), 2, |i, j| {
        let (g, gz, p, rz) = (
            dv.g.get(i, j)?,
            dv.g_z.get(i, j)?,
            dv.p.get(i, j)?,
            dv.r_z.get(i, j)?,
        );
        match r_z_from_gauss(g, gz, p) {
            Some(rhs) => {
                let reference = gz.norm() * c::<T>(2.0) / (T::one() + g.norm_sqr());
                Some((
                    (rz - rhs).norm(),
                    max_of(&[rz.norm(), rhs.norm(), reference]),
                ))
            }
            None => {
                singular.get_or_insert((i, j));
                None
            }
        }
    });
    match singular {
        Some(node) => Err(Error::SingularDenominator { node }),
        None => Ok(entry),
    }
}

/// Relative residual of `16|X|²|g|²(1+|p|²)²|g_z|² = |η|²(1+|g|²)²(|g−p|² − |1+ḡp|²)²`.
///
/// The diagnostic is `min (|g−p|² − |1+ḡp|²)²/|g_z|²`, which stays positive for
/// non-constant `g`. When both sides vanish everywhere the entry is degenerate.
pub fn quotient_identity_residual<T: Real>(dv: &Derived<T>) -> ResidualEntry {
    let one = T::one();
    let sixteen = c::<T>(16.0);
    let floor = c::<T>(ROUNDING_FLOOR);
    let mut diag = f64::INFINITY;
    let mut nonzero = false;
    let mut entry = evaluate("quotient_identity", dv.g.chart(), 2, |i, j| {
        let (g, gz, p, eta, xm) = (
            dv.g.get(i, j)?,
            dv.g_z.get(i, j)?,
            dv.p.get(i, j)?,
            dv.eta.get(i, j)?,
            dv.xmod.get(i, j)?,
        );
        let (den, _, _) = denominator(g, p);
        let lhs = sixteen * xm * xm * g.norm_sqr() * (one + p.norm_sqr()).powi(2) * gz.norm_sqr();
        let rhs = eta.norm_sqr() * (one + g.norm_sqr()).powi(2) * den * den;
        let size = lhs.max(rhs);
        if gz.norm_sqr() > T::zero() {
            diag = diag.min((den * den / gz.norm_sqr()).to_f64_lossy());
        }
        if size <= floor * xm * xm {
            return Some((T::zero(), T::zero()));
        }
        nonzero = true;
        Some(((lhs - rhs).abs() / size, one))
    });
    if !nonzero {
        let mut e = ResidualEntry::degenerate("quotient_identity", 2);
        e.nodes_evaluated = entry.nodes_evaluated;
        return e;
    }
    entry.diagnostic = diag.is_finite().then_some(diag);
    entry
}

/// Conformal factor `ds² = λ|dz|²` and Gauss curvature.
#[derive(Debug, Clone)]
pub struct MetricData<T> {
    /// `λ = (|F_z|² + |F_z̄|² + |η|²/2)/|X|²`, i.e. `‖X_u‖²` in the model metric.
    pub lambda: ScalarField<T>,
    /// `(1+|g|²)²|η|²/(4|g|²|X|²)` where `g ∉ {0, ∞}`.
    pub lambda_gauss: ScalarField<T>,
    /// `4(1+|p|²)²|g_z|²/(|g−p|² − |1+ḡp|²)²` where the denominator is nonzero.
    pub lambda_p: ScalarField<T>,
    /// Pairwise largest relative deviations (direct vs Gauss, direct vs p, Gauss vs p).
    pub deviations: [f64; 3],
    /// `K = −(2/λ)(log λ)_zz̄`.
    pub k: ScalarField<T>,
    /// `K = (|g−p|² − |1+ḡp|²)²(|g_z|² − |ḡ_z|²)/((1+|g|²)²(1+|p|²)²|g_z|²)`.
    pub k_closed: ScalarField<T>,
    /// Largest `|K − K_closed|/max(1, |K|)`.
    pub k_deviation: f64,
}

fn max_rel_dev<T: Real>(a: &ScalarField<T>, b: &ScalarField<T>) -> f64 {
    a.zip_map(b, |x, y| (x - y).abs() / x.abs().max(y.abs()))
        .max_modulus()
        .to_f64_lossy()
}

/// The three forms of the conformal factor and both forms of the curvature.
pub fn induced_metric<T: Real>(
    x: &Immersion<T>,
    gd: &GaussData<T>,
    dv: &Derived<T>,
) -> Result<MetricData<T>> {
    let ch = *x.chart();
    let (one, half, four) = (T::one(), c::<T>(0.5), c::<T>(4.0));
    let mut bad = None;
    let lambda = Field::from_fn_opt(ch, |i, j| {
        let (fz, fzb, eta, xm) = (
            dv.fz.get(i, j)?,
            dv.fzb.get(i, j)?,
            dv.eta.get(i, j)?,
            dv.xmod.get(i, j)?,
        );
        let l = (fz.norm_sqr() + fzb.norm_sqr() + half * eta.norm_sqr()) / (xm * xm);
        if !(l > T::zero()) {
            bad.get_or_insert((i, j));
            return None;
        }
        Some(l)
    })
    .with_margin(1);
    if let Some(node) = bad {
        return Err(Error::Degenerate { node, norm: 0.0 });
    }
    let floor = c::<T>(MODULUS_FLOOR);
    let lambda_gauss = Field::from_fn_opt(ch, |i, j| {
        let (w, eta, xm) = (gd.g.get(i, j)?, dv.eta.get(i, j)?, dv.xmod.get(i, j)?);
        // (1+|g|²)²/|g|² is invariant under g ↦ 1/g, so either chart works
        let m = w.value.norm_sqr();
        if m < floor * floor {
            return None;
        }
        Some((one + m).powi(2) * eta.norm_sqr() / (four * m * xm * xm))
    })
    .with_margin(1);
    let lambda_p = Field::from_fn_opt(ch, |i, j| {
        let (g, gz, p) = (dv.g.get(i, j)?, dv.g_z.get(i, j)?, dv.p.get(i, j)?);
        let (den, a, b) = denominator(g, p);
        if den.abs() < c::<T>(DENOMINATOR_FLOOR) * a.max(b) {
            return None;
        }
        Some(four * (one + p.norm_sqr()).powi(2) * gz.norm_sqr() / (den * den))
    })
    .with_margin(2);
    let deviations = [
        max_rel_dev(&lambda, &lambda_gauss),
        max_rel_dev(&lambda, &lambda_p),
        max_rel_dev(&lambda_gauss, &lambda_p),
    ];
    let log_l = lambda.map(|l| Complex::new(l.ln(), T::zero()));
    let k = lambda
        .zip_map(&d_zzbar(&log_l), |l, w| -c::<T>(2.0) / l * w.re)
        .with_margin(2);
    let k_closed = Field::from_fn_opt(ch, |i, j| {
        let (g, gz, gzb, p) = (
            dv.g.get(i, j)?,
            dv.g_z.get(i, j)?,
            dv.g_zb.get(i, j)?,
            dv.p.get(i, j)?,
        );
        let (den, _, _) = denominator(g, p);
        if gz.norm() < floor {
            return None;
        }
        // |ḡ_z| = |g_z̄|
        Some(
            den * den * (gz.norm_sqr() - gzb.norm_sqr())
                / ((one + g.norm_sqr()).powi(2) * (one + p.norm_sqr()).powi(2) * gz.norm_sqr()),
        )
    })
    .with_margin(2);
    let k_deviation = k
        .zip_map(&k_closed, |a, b| (a - b).abs() / a.abs().max(one))
        .max_modulus()
        .to_f64_lossy();
    Ok(MetricData {
        lambda,
        lambda_gauss,
        lambda_p,
        deviations,
        k,
        k_closed,
        k_deviation,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Classification {
    Generic,
    Cylinder,
    Sphere,
    Degenerate,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassificationEvidence {
    pub classification: Classification,
    /// Largest distance between `g` and its value at the first valid node.
    pub g_variation: f64,
    /// `max ||g_z|² − |g_z̄|²|`.
    pub max_det_dg: f64,
    /// `min |p − g|`.
    pub min_p_minus_g: f64,
    /// `min |p + 1/ḡ|` (zero where `1 + p̄g = 0`).
    pub min_p_antipodal_g: f64,
    pub max_g_z: f64,
    pub tol: f64,
}

/// How far a sampled `g` is from constant and from singular.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussMapRegularity {
    /// Largest distance between `g` and its value at the first valid node.
    pub g_variation: f64,
    /// `max ||g_z|² − |g_z̄|²|`, on whichever chart holds most nodes.
    pub max_det_dg: f64,
    pub max_g_z: f64,
}

/// `None` when `g` has no valid node.
pub fn gauss_map_regularity<T: Real>(g: &ExtComplexField<T>) -> Option<GaussMapRegularity> {
    let ch = *g.chart();
    let reference = ch.nodes().find_map(|(i, j)| g.get(i, j))?;
    let g_variation = ch
        .nodes()
        .filter_map(|(i, j)| g.get(i, j).map(|w| w.distance(&reference)))
        .fold(T::zero(), |m, d| m.max(d))
        .to_f64_lossy();
    let values = if 2 * g.inverted_count() > g.valid_count() {
        g.map_opt(|w| w.to_inverted())
    } else {
        g.standard_values()
    };
    let (gz, gzb) = (d_z(&values), d_zbar(&values));
    let max_det_dg = gz
        .zip_map(&gzb, |a, b| a.norm_sqr() - b.norm_sqr())
        .max_modulus()
        .to_f64_lossy();
    Some(GaussMapRegularity {
        g_variation,
        max_det_dg,
        max_g_z: gz.max_modulus().to_f64_lossy(),
    })
}

/// Cylinder (constant `g`), sphere (`p = g` or `p = −1/ḡ` somewhere), or generic.
///
/// A singular but non-constant `g`, or a generic surface whose `g` is
/// anti-holomorphic, cannot be minimal and is reported as a conflict.
pub fn classify<T: Real>(gd: &GaussData<T>, tol: f64) -> Result<ClassificationEvidence> {
    let ch = *gd.g.chart();
    let Some(GaussMapRegularity {
        g_variation,
        max_det_dg,
        max_g_z,
    }) = gauss_map_regularity(&gd.g)
    else {
        return Ok(ClassificationEvidence {
            classification: Classification::Degenerate,
            g_variation: 0.0,
            max_det_dg: 0.0,
            min_p_minus_g: f64::INFINITY,
            min_p_antipodal_g: f64::INFINITY,
            max_g_z: 0.0,
            tol,
        });
    };
    let (mut min_pg, mut min_anti) = (f64::INFINITY, f64::INFINITY);
    for (i, j) in ch.nodes() {
        if let (Some(g), Some(p)) = (gd.g.get(i, j), gd.p.get(i, j)) {
            min_pg = min_pg.min(p.distance(&g).to_f64_lossy());
            let anti = ExtComplex {
                value: -g.value.conj(),
                inverted: !g.inverted,
            };
            min_anti = min_anti.min(p.distance(&anti).to_f64_lossy());
        }
    }
    let constant = g_variation <= tol;
    let singular = max_det_dg <= tol;
    let classification = if constant {
        Classification::Cylinder
    } else if singular {
        return Err(Error::ClassificationConflict(format!(
            "dg is singular (max |det dg| = {max_det_dg:e}) but g varies by {g_variation:e}"
        )));
    } else if min_pg <= tol || min_anti <= tol {
        Classification::Sphere
    } else if max_g_z <= tol {
        return Err(Error::ClassificationConflict(format!(
            "g is anti-holomorphic (max |g_z| = {max_g_z:e}) on a non-spherical surface"
        )));
    } else {
        Classification::Generic
    };
    Ok(ClassificationEvidence {
        classification,
        g_variation,
        max_det_dg,
        min_p_minus_g: min_pg,
        min_p_antipodal_g: min_anti,
        max_g_z,
        tol,
    })
}

/// Default classification tolerance.
pub const CLASSIFY_TOL: f64 = 1e-8;

/// Every residual entry plus the classification of a sampled immersion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualReport {
    pub identities: Vec<ResidualEntry>,
    pub classification: ClassificationEvidence,
    /// Relative tolerance the entries are judged against.
    pub tol_rel: f64,
    pub resolution: [usize; 2],
    /// Larger of the two grid spacings.
    pub spacing: f64,
}

impl ResidualReport {
    pub fn entry(&self, name: &str) -> Option<&ResidualEntry> {
        self.identities.iter().find(|e| e.name == name)
    }

    pub fn failures(&self) -> Vec<&ResidualEntry> {
        self.identities
            .iter()
            .filter(|e| !e.passes(self.tol_rel))
            .collect()
    }

    pub fn passed(&self) -> bool {
        self.failures().is_empty()
    }
}

/// Names of the entries produced by [`residual_suite`], in order.
pub const IDENTITY_NAMES: [&str; 11] = [
    "conformality",
    "covariant_minimality",
    "eta_g",
    "minimality_g",
    "minimality_eta",
    "p_harmonicity",
    "p_equation_1",
    "p_equation_2",
    "gauss_map_pde",
    "r_equation",
    "quotient_identity",
];

/// Runs the full residual suite with the default tolerance for the chart.
pub fn residual_suite<T: Real>(x: &Immersion<T>) -> Result<ResidualReport> {
    residual_suite_with(x, chart_tolerance(x.chart()))
}

pub fn residual_suite_with<T: Real>(x: &Immersion<T>, tol_rel: f64) -> Result<ResidualReport> {
    let gd = GaussData::compute(x)?;
    let dv = Derived::new(x, &gd);
    let classification = classify(&gd, CLASSIFY_TOL).or_else(|e| match e {
        // a conflict is a property of the data, not a failure to evaluate it
        Error::ClassificationConflict(_) => Ok(ClassificationEvidence {
            classification: Classification::Degenerate,
            g_variation: f64::NAN,
            max_det_dg: f64::NAN,
            min_p_minus_g: f64::NAN,
            min_p_antipodal_g: f64::NAN,
            max_g_z: f64::NAN,
            tol: CLASSIFY_TOL,
        }),
        e => Err(e),
    })?;
    let cylinder = classification.classification == Classification::Cylinder;
    let mut identities = vec![
        conformality_residual(x),
        covariant_minimality_residual(x),
        eta_g_residual(&dv),
    ];
    identities.extend(minimality_system_residual(&dv));
    identities.extend(p_system_residual(&dv));
    if cylinder {
        // every term carries a derivative of g
        identities.push(ResidualEntry::degenerate("gauss_map_pde", 2));
        // Ω ≡ 0 on a plane through the origin, so |g − p|² − |1 + ḡp|² ≡ 0
        identities.push(ResidualEntry::degenerate("r_equation", 2));
        identities.push(ResidualEntry::degenerate("quotient_identity", 2));
    } else {
        identities.push(gaussmap_pde_residual(&dv));
        identities.push(match r_equation_residual(&dv) {
            Ok(e) => e,
            Err(Error::SingularDenominator { node }) => {
                let mut e = ResidualEntry::degenerate("r_equation", 2);
                e.degenerate = false;
                e.max_abs = f64::INFINITY;
                e.diagnostic = Some((node.0 * x.chart().nv + node.1) as f64);
                e
            }
            Err(e) => return Err(e),
        });
        identities.push(quotient_identity_residual(&dv));
    }
    Ok(ResidualReport {
        identities,
        classification,
        tol_rel,
        resolution: [x.chart().nu, x.chart().nv],
        spacing: x.chart().hu().max(x.chart().hv()).to_f64_lossy(),
    })
}

/// Smallest accepted observed order of accuracy under grid refinement.
pub const MIN_ORDER: f64 = 1.9;
/// Relative residual below which an entry is exact up to rounding at every level.
pub const EXACT_FLOOR: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderEntry {
    pub name: String,
    /// Relative residual at each level, coarsest first.
    pub relative: Vec<f64>,
    /// Observed order between consecutive levels.
    pub orders: Vec<f64>,
    /// Degenerate or below [`EXACT_FLOOR`] everywhere; orders are not meaningful.
    pub exact: bool,
    pub passed: bool,
}

/// Observed orders `log(e₁/e₂)/log(h₁/h₂)` of every entry across reports
/// of the same surface at increasing resolution.
pub fn convergence_orders(reports: &[ResidualReport]) -> Result<Vec<OrderEntry>> {
    if reports.len() < 2 {
        return Err(Error::InsufficientData(
            "at least two refinement levels are needed".into(),
        ));
    }
    let first = &reports[0];
    let mut out = Vec::with_capacity(first.identities.len());
    for e in &first.identities {
        let levels: Vec<&ResidualEntry> = reports
            .iter()
            .map(|r| {
                r.entry(&e.name)
                    .ok_or_else(|| Error::Shape(format!("entry {} missing at some level", e.name)))
            })
            .collect::<Result<_>>()?;
        let relative: Vec<f64> = levels.iter().map(|l| l.relative()).collect();
        let orders: Vec<f64> = levels
            .windows(2)
            .zip(reports.windows(2))
            .map(|(l, r)| (l[0].max_abs / l[1].max_abs).ln() / (r[0].spacing / r[1].spacing).ln())
            .collect();
        let exact =
            levels.iter().all(|l| l.degenerate) || relative.iter().all(|&r| r <= EXACT_FLOOR);
        let passed = exact || orders.iter().all(|&o| o >= MIN_ORDER);
        out.push(OrderEntry {
            name: e.name.clone(),
            relative,
            orders,
            exact,
            passed,
        });
    }
    Ok(out)
}
