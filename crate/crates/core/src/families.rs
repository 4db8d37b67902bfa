//! Minimal surfaces with known Gauss maps: totally geodesic spheres, vertical
//! cylinders, helicoids and unduloids.
//!
//! Helicoids and unduloids are rotational-type surfaces driven by a profile
//! `ρ(u)`, either integrated from its first-order ODE (RK4) or obtained from
//! the arclength-type substitution `u(s) = ∫₀ˢ dσ/√(1 + k sin²σ)` inverted by
//! Newton's method.

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::calculus::{quad, rk4_solve, ExtComplexField, Field, GridChart, ScalarField};
use crate::error::{Error, Result};
use crate::gauss::{p_at, Immersion};
use crate::linalg::Vec3;
use crate::model::{stereographic, ExtComplex};
use crate::scalar::{c, Real};

/// Largest RK4 step used by the ODE profiles.
pub const RK4_MAX_STEP: f64 = 1e-3;
/// Absolute tolerance of the quadrature behind `u(s)`.
pub const QUAD_TOL: f64 = 1e-14;

/// How the profile `ρ(u)` is produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProfileMode {
    Ode,
    ClosedForm,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum FamilyKind<T> {
    Sphere { a: T },
    Cylinder { normal: [T; 3] },
    Helicoid { beta: T, rho0: T, mode: ProfileMode },
    Unduloid { alpha: T, mode: ProfileMode },
}

/// A family member sampled on a chart.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FamilySpec<T> {
    pub kind: FamilyKind<T>,
    pub chart: GridChart<T>,
}

/// Profile samples `ρ(u_i)`, `ρ'(u_i)` at the chart's `u` nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct Profile<T> {
    pub rho: Vec<T>,
    pub rhop: Vec<T>,
}

/// Closed-form Gauss map, `p` and `r` of a family member.
#[derive(Debug, Clone)]
pub struct FamilyOracle<T> {
    pub g: ExtComplexField<T>,
    pub p: ExtComplexField<T>,
    pub r: ScalarField<T>,
}

impl<T: Real> FamilySpec<T> {
    pub fn new(kind: FamilyKind<T>, chart: GridChart<T>) -> Result<Self> {
        let spec = Self { kind, chart };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        match self.kind {
            FamilyKind::Sphere { a } if !a.is_finite() => {
                Err(Error::Domain("sphere parameter a must be finite".into()))
            }
            FamilyKind::Cylinder { normal } => check_unit(Vec3::from(normal)),
            FamilyKind::Helicoid { beta, rho0, .. } => {
                if beta == T::zero() || !beta.is_finite() || !rho0.is_finite() {
                    Err(Error::Domain(format!(
                        "helicoid needs a finite beta != 0, got {beta}"
                    )))
                } else {
                    Ok(())
                }
            }
            FamilyKind::Unduloid { alpha, .. } => {
                if !(alpha.abs() > T::one()) || !alpha.is_finite() {
                    Err(Error::Domain(format!(
                        "unduloid needs |alpha| > 1, got {alpha}"
                    )))
                } else {
                    Ok(())
                }
            }
            _ => Ok(()),
        }
    }

    pub fn generate(&self) -> Result<Immersion<T>> {
        self.validate()?;
        match self.kind {
            FamilyKind::Sphere { a } => sphere(a, self.chart),
            FamilyKind::Cylinder { normal } => cylinder(Vec3::from(normal), self.chart),
            FamilyKind::Helicoid { beta, rho0, mode } => helicoid(beta, rho0, self.chart, mode),
            FamilyKind::Unduloid { alpha, mode } => unduloid(alpha, self.chart, mode),
        }
    }

    pub fn oracle(&self) -> Result<FamilyOracle<T>> {
        self.validate()?;
        let ch = self.chart;
        let ext = |f: &dyn Fn(usize, usize) -> ExtComplex<T>| Field::from_fn(ch, f);
        match self.kind {
            FamilyKind::Sphere { a } => {
                let z = ext(&|i, j| ExtComplex::finite(ch.z(i, j)));
                Ok(FamilyOracle {
                    g: z.clone(),
                    p: z,
                    r: Field::from_fn(ch, |_, _| a),
                })
            }
            FamilyKind::Cylinder { normal } => {
                let (e1, e2) = cylinder_basis(Vec3::from(normal))?;
                let n = stereographic(Vec3::from(normal));
                Ok(FamilyOracle {
                    g: ext(&|_, _| n),
                    p: ext(&|_, j| {
                        let (s, co) = ch.v(j).sin_cos();
                        let y = e1.scale(co) + e2.scale(s);
                        p_at(Complex::new(y.x, y.y), y.z)
                    }),
                    r: Field::from_fn(ch, |i, _| ch.u(i)),
                })
            }
            FamilyKind::Helicoid { beta, rho0, mode } => {
                let pr = helicoid_profile(beta, rho0, &u_nodes(&ch), mode)?;
                Ok(FamilyOracle {
                    g: ext(&|i, j| helicoid_gauss(beta, ch.v(j), pr.rho[i], pr.rhop[i])),
                    p: ext(&|i, j| profile_p(beta, ch.v(j), pr.rho[i])),
                    r: Field::from_fn(ch, |_, j| ch.v(j)),
                })
            }
            FamilyKind::Unduloid { alpha, mode } => {
                let pr = unduloid_profile(alpha, &u_nodes(&ch), mode)?;
                Ok(FamilyOracle {
                    g: ext(&|i, j| unduloid_gauss(alpha, ch.v(j), pr.rho[i], pr.rhop[i])),
                    p: ext(&|i, j| profile_p(alpha, ch.v(j), pr.rho[i])),
                    r: Field::from_fn(ch, |i, _| ch.u(i)),
                })
            }
        }
    }
}

fn u_nodes<T: Real>(ch: &GridChart<T>) -> Vec<T> {
    (0..ch.nu).map(|i| ch.u(i)).collect()
}

fn check_unit<T: Real>(n: Vec3<T>) -> Result<()> {
    if (n.norm() - T::one()).abs() > c(1e-9) || !n.is_finite() {
        return Err(Error::Domain(format!(
            "cylinder normal must be a unit vector, got |n| = {}",
            n.norm()
        )));
    }
    Ok(())
}

/// Inverse stereographic map `σ(z)`.
fn sigma<T: Real>(z: Complex<T>) -> Vec3<T> {
    let two = c::<T>(2.0);
    let m = z.norm_sqr();
    Vec3::new(two * z.re, two * z.im, T::one() - m).scale(T::one() / (T::one() + m))
}

/// The slice `S² × {a}`: the round sphere `X = e^a σ(z)`.
pub fn sphere<T: Real>(a: T, chart: GridChart<T>) -> Result<Immersion<T>> {
    Immersion::from_fn(chart, |i, j| sigma(chart.z(i, j)).scale(a.exp()))
}

/// Orthonormal basis `{e₁, e₂}` of the plane `⟨x, n⟩ = 0` with `e₁ × e₂ = n`.
///
/// `e₁ = normalize(k × n)` for `k` the first of `x₃, x₁, x₂` not parallel to `n`.
pub fn cylinder_basis<T: Real>(n: Vec3<T>) -> Result<(Vec3<T>, Vec3<T>)> {
    check_unit(n)?;
    for axis in [2, 0, 1] {
        let k = Vec3::basis(axis).cross(n);
        if k.norm() > c(1e-8) {
            let e1 = k.normalized();
            return Ok((e1, n.cross(e1)));
        }
    }
    unreachable!("a unit vector is parallel to at most one axis")
}

/// The vertical cylinder over a great circle: the plane through the origin
/// normal to `n`, sampled as `e^u(cos v e₁ + sin v e₂)`.
pub fn cylinder<T: Real>(n: Vec3<T>, chart: GridChart<T>) -> Result<Immersion<T>> {
    let (e1, e2) = cylinder_basis(n)?;
    Immersion::from_fn(chart, |i, j| {
        let (s, co) = chart.v(j).sin_cos();
        (e1.scale(co) + e2.scale(s)).scale(chart.u(i).exp())
    })
}

/// `X(u + iv) = (e^v sin ρ(u) e^{iβv}, e^v cos ρ(u))` with `ρ'² = 1 + β² sin²ρ`, `ρ(0) = rho0`.
pub fn helicoid<T: Real>(
    beta: T,
    rho0: T,
    chart: GridChart<T>,
    mode: ProfileMode,
) -> Result<Immersion<T>> {
    FamilySpec {
        kind: FamilyKind::Helicoid { beta, rho0, mode },
        chart,
    }
    .validate()?;
    let pr = helicoid_profile(beta, rho0, &u_nodes(&chart), mode)?;
    Immersion::from_fn(chart, |i, j| {
        let v = chart.v(j);
        rotational_point(v.exp(), pr.rho[i], beta * v)
    })
}

/// `X(u + iv) = (e^u sin ρ(u) e^{iαv}, e^u cos ρ(u))` with `ρ'² + 1 = α² sin²ρ`.
///
/// `ρ(0) = arcsin(1/|α|)`, the turning point `ρ' = 0`.
pub fn unduloid<T: Real>(alpha: T, chart: GridChart<T>, mode: ProfileMode) -> Result<Immersion<T>> {
    FamilySpec {
        kind: FamilyKind::Unduloid { alpha, mode },
        chart,
    }
    .validate()?;
    let pr = unduloid_profile(alpha, &u_nodes(&chart), mode)?;
    Immersion::from_fn(chart, |i, j| {
        rotational_point(chart.u(i).exp(), pr.rho[i], alpha * chart.v(j))
    })
}

fn rotational_point<T: Real>(scale: T, rho: T, angle: T) -> Vec3<T> {
    let (s, co) = rho.sin_cos();
    let (sa, ca) = angle.sin_cos();
    Vec3::new(s * ca, s * sa, co).scale(scale)
}

/// `g_β = (β sin²ρ − i) e^{iβv} / (ρ' + β sin ρ cos ρ)`.
pub fn helicoid_gauss<T: Real>(beta: T, v: T, rho: T, rhop: T) -> ExtComplex<T> {
    let (s, co) = rho.sin_cos();
    let num = Complex::new(beta * s * s, -T::one()) * Complex::from_polar(T::one(), beta * v);
    ExtComplex::from_ratio(num, Complex::new(rhop + beta * s * co, T::zero()))
}

/// `g_α = (ρ' sin ρ − cos ρ) e^{iαv} / ((1 + α) sin ρ + ρ' cos ρ)`.
pub fn unduloid_gauss<T: Real>(alpha: T, v: T, rho: T, rhop: T) -> ExtComplex<T> {
    let (s, co) = rho.sin_cos();
    let num = Complex::from_polar(rhop * s - co, alpha * v);
    ExtComplex::from_ratio(
        num,
        Complex::new((T::one() + alpha) * s + rhop * co, T::zero()),
    )
}

/// `p = sin ρ/(1 + cos ρ) · e^{iκv}` for the rotational families (`κ = β` or `α`).
pub fn profile_p<T: Real>(kappa: T, v: T, rho: T) -> ExtComplex<T> {
    let (s, co) = rho.sin_cos();
    ExtComplex::from_ratio(
        Complex::from_polar(s, kappa * v),
        Complex::new(T::one() + co, T::zero()),
    )
}

/// Helicoid profile at the sorted nodes `us`.
pub fn helicoid_profile<T: Real>(
    beta: T,
    rho0: T,
    us: &[T],
    mode: ProfileMode,
) -> Result<Profile<T>> {
    let b2 = beta * beta;
    let speed = move |rho: T| (T::one() + b2 * rho.sin().powi(2)).sqrt();
    let rho = match mode {
        ProfileMode::Ode => integrate_profile(move |_, r| speed(r), T::zero(), rho0, us)?,
        ProfileMode::ClosedForm => invert_substitution(move |s| T::one() / speed(s), rho0, us)?,
    };
    let rhop = rho.iter().map(|&r| speed(r)).collect();
    Ok(Profile { rho, rhop })
}

/// Unduloid profile at the sorted nodes `us`.
///
/// The closed form parametrizes by `s` with `u(s) = ∫₀ˢ dσ/√(1 + (α² − 1) sin²σ)`,
/// `sin ρ = √(1 + (α² − 1) sin²s)/|α|`, `cos ρ = √(α² − 1) cos s/|α|`,
/// `ρ' = √(α² − 1) sin s`. The ODE mode only covers `0 < s < π` (`ρ' > 0`)
/// and starts from `s = π/2`, where `ρ = π/2`.
pub fn unduloid_profile<T: Real>(alpha: T, us: &[T], mode: ProfileMode) -> Result<Profile<T>> {
    let a = alpha.abs();
    let k = a * a - T::one();
    let sk = k.sqrt();
    let q = move |s: T| T::one() / (T::one() + k * s.sin().powi(2)).sqrt();
    match mode {
        ProfileMode::ClosedForm => {
            let ss = invert_substitution(q, T::zero(), us)?;
            let mut rho = Vec::with_capacity(ss.len());
            let mut rhop = Vec::with_capacity(ss.len());
            for s in ss {
                let (sn, cs) = s.sin_cos();
                rho.push(((T::one() + k * sn * sn).sqrt() / a).atan2(sk * cs / a));
                rhop.push(sk * sn);
            }
            Ok(Profile { rho, rhop })
        }
        ProfileMode::Ode => {
            let tol = c::<T>(QUAD_TOL);
            let u_mid = quad(q, T::zero(), T::FRAC_PI_2(), tol)?;
            let u_end = quad(q, T::zero(), T::PI(), tol)?;
            if us.iter().any(|&u| !(u > T::zero() && u < u_end)) {
                return Err(Error::Domain(format!(
                    "unduloid ODE mode needs rho' > 0, i.e. every u node inside (0, {u_end})"
                )));
            }
            let a2 = a * a;
            let rho = integrate_profile(
                move |_, r: T| (a2 * r.sin().powi(2) - T::one()).sqrt(),
                u_mid,
                T::FRAC_PI_2(),
                us,
            )?;
            let rhop = rho
                .iter()
                .map(|&r| (a2 * r.sin().powi(2) - T::one()).max(T::zero()).sqrt())
                .collect();
            Ok(Profile { rho, rhop })
        }
    }
}

/// Integrates `ρ' = rhs(u, ρ)` from `ρ(u_start) = rho_start` to every node of
/// `us` (ascending), in both directions from `u_start` as needed.
fn integrate_profile<T: Real>(
    rhs: impl Fn(T, T) -> T + Copy,
    u_start: T,
    rho_start: T,
    us: &[T],
) -> Result<Vec<T>> {
    let max_step = c::<T>(RK4_MAX_STEP);
    let substeps = |a: T, b: T| -> usize {
        ((b - a).abs() / max_step).ceil().to_f64_lossy().max(1.0) as usize
    };
    let mut out = vec![T::zero(); us.len()];
    let split = us.partition_point(|&u| u < u_start);
    // forward: nodes ≥ u_start
    let fwd = &us[split..];
    if !fwd.is_empty() {
        let mut grid = vec![u_start];
        grid.extend(fwd.iter().copied().filter(|&u| u > u_start));
        let vals = run_segmented(rhs, rho_start, &grid, &substeps)?;
        let offset = grid.len() - fwd.len();
        for (k, slot) in out[split..].iter_mut().enumerate() {
            *slot = if fwd[k] == u_start {
                rho_start
            } else {
                vals[k + offset]
            };
        }
    }
    // backward: nodes < u_start, walked in descending order
    if split > 0 {
        let mut grid = vec![u_start];
        grid.extend(us[..split].iter().rev().copied());
        let vals = run_segmented(rhs, rho_start, &grid, &substeps)?;
        for (k, v) in vals.into_iter().skip(1).enumerate() {
            out[split - 1 - k] = v;
        }
    }
    Ok(out)
}

/// RK4 with the first (possibly long) leg integrated separately so every step stays below the cap.
fn run_segmented<T: Real>(
    rhs: impl Fn(T, T) -> T + Copy,
    rho0: T,
    grid: &[T],
    substeps: &impl Fn(T, T) -> usize,
) -> Result<Vec<T>> {
    if grid.len() < 2 {
        return Ok(vec![rho0]);
    }
    let first = rk4_solve(rhs, rho0, &grid[..2], substeps(grid[0], grid[1]))?;
    let mut out = vec![rho0, first[1]];
    if grid.len() > 2 {
        let n = grid[1..]
            .windows(2)
            .map(|w| substeps(w[0], w[1]))
            .max()
            .unwrap_or(1);
        let rest = rk4_solve(rhs, first[1], &grid[1..], n)?;
        out.extend_from_slice(&rest[1..]);
    }
    Ok(out)
}

/// Solves `∫_{s0}^{s} q(σ) dσ = u` for `s` at every node of `us` (ascending), with `q > 0`.
fn invert_substitution<T: Real>(q: impl Fn(T) -> T + Copy, s0: T, us: &[T]) -> Result<Vec<T>> {
    let tol = c::<T>(QUAD_TOL);
    let eps = c::<T>(4.0) * T::epsilon();
    let mut out = Vec::with_capacity(us.len());
    // (s, u(s)) of the last solved point; start at (s0, 0)
    let (mut s_prev, mut u_prev) = (s0, T::zero());
    for &target in us {
        let mut s = s_prev + (target - u_prev) / q(s_prev);
        let mut converged = false;
        for _ in 0..60 {
            let u = u_prev + quad(q, s_prev, s, tol)?;
            let step = (target - u) / q(s);
            s = s + step;
            if step.abs() <= eps * (T::one() + s.abs()) {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(Error::Integration {
                at: target.to_f64_lossy(),
            });
        }
        u_prev = u_prev + quad(q, s_prev, s, tol)?;
        s_prev = s;
        out.push(s);
    }
    Ok(out)
}
