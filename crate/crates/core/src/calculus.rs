//! Discrete calculus on a rectangular conformal chart `z = u + iv`.
//!
//! Fields carry a per-node validity mask. Central differences leave the
//! outermost layer invalid, so every derivative grows the invalid margin by the
//! stencil radius; residuals are only ever evaluated on valid nodes.

use num_complex::Complex;

use crate::error::{Error, Node, Result};
use crate::linalg::Vec3;
use crate::model::ExtComplex;
use crate::scalar::{c, Real};

/// Uniform sampling of `[u0, u1] × [v0, v1]` with `nu × nv` nodes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridChart<T> {
    pub u0: T,
    pub u1: T,
    pub v0: T,
    pub v1: T,
    pub nu: usize,
    pub nv: usize,
}

impl<T: Real> GridChart<T> {
    pub fn new(u0: T, u1: T, v0: T, v1: T, nu: usize, nv: usize) -> Result<Self> {
        if nu < 5 || nv < 5 {
            return Err(Error::ChartTooSmall { nu, nv });
        }
        if !(u1 > u0 && v1 > v0)
            || !(u0.is_finite() && u1.is_finite() && v0.is_finite() && v1.is_finite())
        {
            return Err(Error::InvalidChart(format!(
                "bounds must satisfy u0 < u1 and v0 < v1, got [{u0}, {u1}] x [{v0}, {v1}]"
            )));
        }
        Ok(Self {
            u0,
            u1,
            v0,
            v1,
            nu,
            nv,
        })
    }

    pub fn hu(&self) -> T {
        (self.u1 - self.u0) / T::lit((self.nu - 1) as f64)
    }

    pub fn hv(&self) -> T {
        (self.v1 - self.v0) / T::lit((self.nv - 1) as f64)
    }

    /// Node coordinate; the last node is exactly `u1`.
    pub fn u(&self, i: usize) -> T {
        if i + 1 == self.nu {
            return self.u1;
        }
        self.u0 + self.hu() * T::lit(i as f64)
    }

    pub fn v(&self, j: usize) -> T {
        if j + 1 == self.nv {
            return self.v1;
        }
        self.v0 + self.hv() * T::lit(j as f64)
    }

    pub fn z(&self, i: usize, j: usize) -> Complex<T> {
        Complex::new(self.u(i), self.v(j))
    }

    pub fn len(&self) -> usize {
        self.nu * self.nv
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn idx(&self, i: usize, j: usize) -> usize {
        i * self.nv + j
    }

    #[inline]
    pub fn node(&self, k: usize) -> Node {
        (k / self.nv, k % self.nv)
    }

    /// Nodes in row-major order (`u` outer, `v` inner).
    pub fn nodes(&self) -> impl Iterator<Item = Node> + '_ {
        (0..self.nu).flat_map(move |i| (0..self.nv).map(move |j| (i, j)))
    }

    pub fn diameter(&self) -> T {
        ((self.u1 - self.u0).powi(2) + (self.v1 - self.v0).powi(2)).sqrt()
    }

    /// Node nearest to `(u, v)`, clamped to the chart.
    pub fn nearest(&self, u: T, v: T) -> Node {
        let clamp = |x: T, n: usize| -> usize {
            let k = x.round().to_f64_lossy();
            if k.is_nan() || k < 0.0 {
                0
            } else {
                (k as usize).min(n - 1)
            }
        };
        (
            clamp((u - self.u0) / self.hu(), self.nu),
            clamp((v - self.v0) / self.hv(), self.nv),
        )
    }

    /// Same bounds, different resolution.
    pub fn with_resolution(&self, nu: usize, nv: usize) -> Result<Self> {
        Self::new(self.u0, self.u1, self.v0, self.v1, nu, nv)
    }

    /// The sub-chart of nodes at distance `margin` or more from the boundary.
    pub fn shrink(&self, margin: usize) -> Result<Self> {
        if self.nu < 2 * margin + 5 || self.nv < 2 * margin + 5 {
            return Err(Error::ChartTooSmall {
                nu: self.nu.saturating_sub(2 * margin),
                nv: self.nv.saturating_sub(2 * margin),
            });
        }
        let (nu, nv) = (self.nu - 1 - margin, self.nv - 1 - margin);
        Self::new(
            self.u(margin),
            self.u(nu),
            self.v(margin),
            self.v(nv),
            nu + 1 - margin,
            nv + 1 - margin,
        )
    }

    /// Nodes at distance `margin` or more from the boundary.
    pub fn is_interior(&self, (i, j): Node, margin: usize) -> bool {
        i >= margin && j >= margin && i + margin < self.nu && j + margin < self.nv
    }
}

/// Values usable in a [`Field`].
pub trait FieldValue<T: Real>: Copy + Default + PartialEq + std::fmt::Debug {
    fn finite(&self) -> bool;
    fn modulus(&self) -> T;
}

impl<T: Real> FieldValue<T> for T {
    fn finite(&self) -> bool {
        self.is_finite()
    }
    fn modulus(&self) -> T {
        self.abs()
    }
}

impl<T: Real> FieldValue<T> for Complex<T> {
    fn finite(&self) -> bool {
        self.re.is_finite() && self.im.is_finite()
    }
    fn modulus(&self) -> T {
        self.norm()
    }
}

impl<T: Real> FieldValue<T> for Vec3<T> {
    fn finite(&self) -> bool {
        self.is_finite()
    }
    fn modulus(&self) -> T {
        self.norm()
    }
}

impl<T: Real> FieldValue<T> for ExtComplex<T> {
    fn finite(&self) -> bool {
        self.value.re.is_finite() && self.value.im.is_finite()
    }
    /// Modulus of the represented value (`∞` at the pole).
    fn modulus(&self) -> T {
        if self.inverted {
            T::one() / self.value.norm()
        } else {
            self.value.norm()
        }
    }
}

/// Sampled function on a chart. Invalid nodes hold `V::default()`.
#[derive(Debug, Clone, PartialEq)]
pub struct Field<T, V> {
    chart: GridChart<T>,
    values: Vec<V>,
    valid: Vec<bool>,
    margin: usize,
}

pub type ScalarField<T> = Field<T, T>;
pub type ComplexField<T> = Field<T, Complex<T>>;
pub type VectorField<T> = Field<T, Vec3<T>>;
/// Extended-complex field; each node carries its own chart flag.
pub type ExtComplexField<T> = Field<T, ExtComplex<T>>;

impl<T: Real, V: FieldValue<T>> Field<T, V> {
    pub fn from_fn(chart: GridChart<T>, mut f: impl FnMut(usize, usize) -> V) -> Self {
        Self::from_fn_opt(chart, |i, j| Some(f(i, j)))
    }

    /// Nodes where `f` returns `None` or a non-finite value are invalid.
    pub fn from_fn_opt(chart: GridChart<T>, mut f: impl FnMut(usize, usize) -> Option<V>) -> Self {
        let mut values = Vec::with_capacity(chart.len());
        let mut valid = Vec::with_capacity(chart.len());
        for (i, j) in chart.nodes() {
            match f(i, j) {
                Some(v) if v.finite() => {
                    values.push(v);
                    valid.push(true);
                }
                _ => {
                    values.push(V::default());
                    valid.push(false);
                }
            }
        }
        Self {
            chart,
            values,
            valid,
            margin: 0,
        }
    }

    /// Builds a field from row-major values; every value must be finite.
    pub fn from_values(chart: GridChart<T>, values: Vec<V>) -> Result<Self> {
        if values.len() != chart.len() {
            return Err(Error::Shape(format!(
                "expected {} values for a {}x{} chart, got {}",
                chart.len(),
                chart.nu,
                chart.nv,
                values.len()
            )));
        }
        if let Some(k) = values.iter().position(|v| !v.finite()) {
            return Err(Error::Shape(format!(
                "non-finite value at node {:?}",
                chart.node(k)
            )));
        }
        let valid = vec![true; values.len()];
        Ok(Self {
            chart,
            values,
            valid,
            margin: 0,
        })
    }

    pub fn chart(&self) -> &GridChart<T> {
        &self.chart
    }

    /// Boundary layers excluded by the derivative stencils that produced this field.
    pub fn margin(&self) -> usize {
        self.margin
    }

    pub fn with_margin(mut self, margin: usize) -> Self {
        self.margin = margin;
        for (i, j) in self.chart.nodes() {
            if !self.chart.is_interior((i, j), margin) {
                let k = self.chart.idx(i, j);
                self.valid[k] = false;
                self.values[k] = V::default();
            }
        }
        self
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> Option<V> {
        let k = self.chart.idx(i, j);
        self.valid[k].then(|| self.values[k])
    }

    /// Raw stored value (the default value on invalid nodes).
    #[inline]
    pub fn at(&self, i: usize, j: usize) -> V {
        self.values[self.chart.idx(i, j)]
    }

    #[inline]
    pub fn is_valid(&self, i: usize, j: usize) -> bool {
        self.valid[self.chart.idx(i, j)]
    }

    pub fn values(&self) -> &[V] {
        &self.values
    }

    pub fn valid_mask(&self) -> &[bool] {
        &self.valid
    }

    pub fn valid_count(&self) -> usize {
        self.valid.iter().filter(|&&b| b).count()
    }

    pub fn invalidate(&mut self, i: usize, j: usize) {
        let k = self.chart.idx(i, j);
        self.valid[k] = false;
        self.values[k] = V::default();
    }

    pub fn map<W: FieldValue<T>>(&self, mut f: impl FnMut(V) -> W) -> Field<T, W> {
        self.map_opt(|v| Some(f(v)))
    }

    pub fn map_opt<W: FieldValue<T>>(&self, mut f: impl FnMut(V) -> Option<W>) -> Field<T, W> {
        let mut out = Field::from_fn_opt(self.chart, |i, j| self.get(i, j).and_then(&mut f));
        out.margin = self.margin;
        out
    }

    /// Pointwise combination; valid where both inputs are valid.
    pub fn zip_map<U: FieldValue<T>, W: FieldValue<T>>(
        &self,
        other: &Field<T, U>,
        mut f: impl FnMut(V, U) -> W,
    ) -> Field<T, W> {
        let mut out = Field::from_fn_opt(self.chart, |i, j| {
            Some(f(self.get(i, j)?, other.get(i, j)?))
        });
        out.margin = self.margin.max(other.margin);
        out
    }

    /// Largest modulus over valid nodes (0 for an empty field).
    /// Restriction to [`GridChart::shrink`]`(margin)`; margins shrink accordingly.
    pub fn shrink(&self, margin: usize) -> Result<Self> {
        let ch = self.chart.shrink(margin)?;
        let out = Self::from_fn_opt(ch, |i, j| self.get(i + margin, j + margin));
        Ok(out.with_margin(self.margin.saturating_sub(margin)))
    }

    pub fn max_modulus(&self) -> T {
        self.values
            .iter()
            .zip(&self.valid)
            .filter(|(_, &ok)| ok)
            .fold(T::zero(), |m, (v, _)| m.max(v.modulus()))
    }

    pub fn same_chart<U>(&self, other: &Field<T, U>) -> bool {
        self.chart == other.chart
    }
}

impl<T: Real> ScalarField<T> {
    pub fn to_complex(&self) -> ComplexField<T> {
        self.map(|x| Complex::new(x, T::zero()))
    }
}

impl<T: Real> ComplexField<T> {
    pub fn conj(&self) -> Self {
        self.map(|w| w.conj())
    }

    pub fn re(&self) -> ScalarField<T> {
        self.map(|w| w.re)
    }

    pub fn im(&self) -> ScalarField<T> {
        self.map(|w| w.im)
    }
}

impl<T: Real> ExtComplexField<T> {
    /// Finite values `w` (valid everywhere except at `∞`).
    pub fn finite_values(&self) -> ComplexField<T> {
        self.map_opt(|w| w.to_standard())
    }

    /// Values on standard-chart nodes only.
    pub fn standard_values(&self) -> ComplexField<T> {
        self.map_opt(|w| (!w.inverted).then_some(w.value))
    }

    pub fn inverted_count(&self) -> usize {
        self.chart
            .nodes()
            .filter(|&(i, j)| self.get(i, j).is_some_and(|w| w.inverted))
            .count()
    }
}

/// Applies a radius-1 stencil; the output is valid where all touched nodes are valid.
fn stencil<T: Real, V: FieldValue<T>, W: FieldValue<T>>(
    f: &Field<T, V>,
    mut op: impl FnMut(V, V, V, V, V) -> W,
) -> Field<T, W> {
    let ch = f.chart;
    let mut out = Field::from_fn_opt(ch, |i, j| {
        if !ch.is_interior((i, j), 1) {
            return None;
        }
        Some(op(
            f.get(i, j)?,
            f.get(i + 1, j)?,
            f.get(i - 1, j)?,
            f.get(i, j + 1)?,
            f.get(i, j - 1)?,
        ))
    });
    out.margin = f.margin + 1;
    out
}

/// Central difference `∂_u`.
pub fn d_u<T: Real>(f: &ComplexField<T>) -> ComplexField<T> {
    let s = T::one() / (c::<T>(2.0) * f.chart.hu());
    stencil(f, |_, up, um, _, _| (up - um) * s)
}

/// Central difference `∂_v`.
pub fn d_v<T: Real>(f: &ComplexField<T>) -> ComplexField<T> {
    let s = T::one() / (c::<T>(2.0) * f.chart.hv());
    stencil(f, |_, _, _, vp, vm| (vp - vm) * s)
}

/// Wirtinger `∂_z = ½(∂_u − i∂_v)` by central differences.
pub fn d_z<T: Real>(f: &ComplexField<T>) -> ComplexField<T> {
    wirtinger(f, -T::one())
}

/// Wirtinger `∂_z̄ = ½(∂_u + i∂_v)` by central differences.
pub fn d_zbar<T: Real>(f: &ComplexField<T>) -> ComplexField<T> {
    wirtinger(f, T::one())
}

fn wirtinger<T: Real>(f: &ComplexField<T>, sign: T) -> ComplexField<T> {
    let su = T::one() / (c::<T>(4.0) * f.chart.hu());
    let sv = T::one() / (c::<T>(4.0) * f.chart.hv());
    let i_sv = Complex::new(T::zero(), sign * sv);
    stencil(f, move |_, up, um, vp, vm| {
        (up - um) * su + (vp - vm) * i_sv
    })
}

/// `∂_z∂_z̄ = ¼Δ` with the compact five-point Laplacian.
pub fn d_zzbar<T: Real>(f: &ComplexField<T>) -> ComplexField<T> {
    let q = c::<T>(0.25);
    let su = q / (f.chart.hu() * f.chart.hu());
    let sv = q / (f.chart.hv() * f.chart.hv());
    let two = c::<T>(2.0);
    stencil(f, move |m, up, um, vp, vm| {
        (up + um - m * two) * su + (vp + vm - m * two) * sv
    })
}

/// Classical RK4 for `ρ' = rhs(u, ρ)` with `substeps` equal steps between
/// consecutive output nodes. `grid` must be strictly monotone; `grid[0]` carries `rho0`.
pub fn rk4_solve<T: Real>(
    rhs: impl Fn(T, T) -> T,
    rho0: T,
    grid: &[T],
    substeps: usize,
) -> Result<Vec<T>> {
    if substeps == 0 {
        return Err(Error::Domain("rk4_solve needs at least one substep".into()));
    }
    if grid.windows(2).any(|w| !(w[1] > w[0])) && grid.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(Error::Domain(
            "rk4_solve grid must be strictly monotone".into(),
        ));
    }
    let mut out = Vec::with_capacity(grid.len());
    let Some(&first) = grid.first() else {
        return Ok(out);
    };
    let (half, sixth, two) = (c::<T>(0.5), c::<T>(1.0 / 6.0), c::<T>(2.0));
    let mut rho = rho0;
    out.push(rho);
    let mut u_prev = first;
    for &u_next in &grid[1..] {
        let step = (u_next - u_prev) / T::lit(substeps as f64);
        for k in 0..substeps {
            let u = u_prev + step * T::lit(k as f64);
            let eval = |u: T, r: T| -> Result<T> {
                let d = rhs(u, r);
                if d.is_finite() {
                    Ok(d)
                } else {
                    Err(Error::Integration {
                        at: u.to_f64_lossy(),
                    })
                }
            };
            let k1 = eval(u, rho)?;
            let k2 = eval(u + half * step, rho + half * step * k1)?;
            let k3 = eval(u + half * step, rho + half * step * k2)?;
            let k4 = eval(u + step, rho + step * k3)?;
            rho = rho + step * sixth * (k1 + two * k2 + two * k3 + k4);
        }
        out.push(rho);
        u_prev = u_next;
    }
    Ok(out)
}

const QUAD_MAX_DEPTH: u32 = 48;
const QUAD_MAX_EVALS: usize = 2_000_000;

/// Adaptive Simpson quadrature of `f` over `[a, b]` to absolute tolerance `tol`.
pub fn quad<T: Real>(f: impl Fn(T) -> T, a: T, b: T, tol: T) -> Result<T> {
    if a == b {
        return Ok(T::zero());
    }
    let m = c::<T>(0.5) * (a + b);
    let (fa, fm, fb) = (f(a), f(m), f(b));
    let whole = simpson(a, b, fa, fm, fb);
    let mut budget = Budget {
        evals: 3,
        exhausted: false,
    };
    let val = simpson_rec(
        &f,
        a,
        b,
        fa,
        fm,
        fb,
        whole,
        tol,
        QUAD_MAX_DEPTH,
        &mut budget,
    );
    if budget.exhausted || !val.is_finite() {
        return Err(Error::Accuracy {
            a: a.to_f64_lossy(),
            b: b.to_f64_lossy(),
            tol: tol.to_f64_lossy(),
        });
    }
    Ok(val)
}

struct Budget {
    evals: usize,
    exhausted: bool,
}

fn simpson<T: Real>(a: T, b: T, fa: T, fm: T, fb: T) -> T {
    (b - a) / c(6.0) * (fa + c::<T>(4.0) * fm + fb)
}

#[allow(clippy::too_many_arguments)]
fn simpson_rec<T: Real>(
    f: &impl Fn(T) -> T,
    a: T,
    b: T,
    fa: T,
    fm: T,
    fb: T,
    whole: T,
    tol: T,
    depth: u32,
    budget: &mut Budget,
) -> T {
    let half = c::<T>(0.5);
    let m = half * (a + b);
    let (lm, rm) = (half * (a + m), half * (m + b));
    let (flm, frm) = (f(lm), f(rm));
    budget.evals += 2;
    let left = simpson(a, m, fa, flm, fm);
    let right = simpson(m, b, fm, frm, fb);
    let delta = left + right - whole;
    if delta.abs() <= c::<T>(15.0) * tol {
        return left + right + delta / c(15.0);
    }
    if depth == 0 || budget.exhausted || budget.evals >= QUAD_MAX_EVALS {
        budget.exhausted = true;
        return left + right + delta / c(15.0);
    }
    simpson_rec(f, a, m, fa, flm, fm, left, half * tol, depth - 1, budget)
        + simpson_rec(f, m, b, fm, frm, fb, right, half * tol, depth - 1, budget)
}

/// Result of integrating an exact 1-form `dr = 2 Re(r_z dz)`.
#[derive(Debug, Clone)]
pub struct FormIntegral<T> {
    pub r: ScalarField<T>,
    /// Largest cell circulation of the discrete form over `4·cell area`, the
    /// discrete counterpart of `max |Im ∂_z̄ r_z|`.
    pub closedness: T,
    /// Largest difference between row-first and column-first staircase values.
    pub path_discrepancy: T,
    /// Valid input nodes that no staircase path could reach.
    pub holes: usize,
}

/// Integrates `dr = 2 Re(r_z dz)` from `base` with `r(base) = r0`.
///
/// Values come from the row-first staircase (along `u` first, then `v`);
/// nodes it cannot reach use the column-first staircase. Both use the
/// trapezoidal rule on grid edges. Fails with [`Error::Integrability`] when
/// the closedness residual exceeds `tol`. Row-first and column-first values
/// differ by the summed cell circulations between the two paths.
pub fn integrate_exact_form<T: Real>(
    rz: &ComplexField<T>,
    base: Node,
    r0: T,
    tol: T,
) -> Result<FormIntegral<T>> {
    let ch = *rz.chart();
    if base.0 >= ch.nu || base.1 >= ch.nv || !rz.is_valid(base.0, base.1) {
        return Err(Error::InsufficientData(format!(
            "base node {base:?} is not a valid node of the 1-form"
        )));
    }
    let two = c::<T>(2.0);
    let half = c::<T>(0.5);
    // r_u = 2 Re r_z, r_v = -2 Im r_z
    let ru = |i: usize, j: usize| rz.get(i, j).map(|w| two * w.re);
    let rv = |i: usize, j: usize| rz.get(i, j).map(|w| -two * w.im);
    let (hu, hv) = (ch.hu(), ch.hv());
    let edge_u = |i0: usize, i1: usize, j: usize| Some(half * hu * (ru(i0, j)? + ru(i1, j)?));
    let edge_v = |i: usize, j0: usize, j1: usize| Some(half * hv * (rv(i, j0)? + rv(i, j1)?));

    // Circulation of the trapezoid edge integrals around each cell; divided by
    // 4·area it approximates |Im ∂_z̄ r_z|, since curl = ∂_u r_v − ∂_v r_u = −4 Im ∂_z̄ r_z.
    let cell_scale = T::one() / (c::<T>(4.0) * hu * hv);
    let mut closedness = T::zero();
    for i in 0..ch.nu - 1 {
        for j in 0..ch.nv - 1 {
            let circ = (|| {
                Some(
                    edge_u(i, i + 1, j)? + edge_v(i + 1, j, j + 1)?
                        - edge_u(i, i + 1, j + 1)?
                        - edge_v(i, j, j + 1)?,
                )
            })();
            if let Some(circ) = circ {
                closedness = closedness.max(circ.abs() * cell_scale);
            }
        }
    }
    if !(closedness <= tol) {
        return Err(Error::Integrability {
            residual: closedness.to_f64_lossy(),
            tol: tol.to_f64_lossy(),
        });
    }

    let row_first = staircase(
        &ch,
        base,
        r0,
        &edge_u,
        |a, b, fixed| edge_v(fixed, a, b),
        true,
    );
    let col_first = staircase(
        &ch,
        base,
        r0,
        |a, b, fixed| edge_v(fixed, a, b),
        edge_u,
        false,
    );

    let mut discrepancy = T::zero();
    let mut holes = 0;
    let r = Field::from_fn_opt(ch, |i, j| {
        let k = ch.idx(i, j);
        match (row_first[k], col_first[k]) {
            (Some(a), Some(b)) => {
                discrepancy = discrepancy.max((a - b).abs());
                Some(a)
            }
            (Some(a), None) | (None, Some(a)) => Some(a),
            (None, None) => {
                if rz.is_valid(i, j) {
                    holes += 1;
                }
                None
            }
        }
    });
    Ok(FormIntegral {
        r: r.with_margin(rz.margin()),
        closedness,
        path_discrepancy: discrepancy,
        holes,
    })
}

/// Staircase accumulation. With `u_first`, `first(a, b, j)` integrates along `u`
/// from `i = a` to `b` at fixed `j`, and `second(a, b, i)` along `v`; otherwise
/// the roles of the axes are swapped.
fn staircase<T: Real>(
    ch: &GridChart<T>,
    base: Node,
    r0: T,
    first: impl Fn(usize, usize, usize) -> Option<T>,
    second: impl Fn(usize, usize, usize) -> Option<T>,
    u_first: bool,
) -> Vec<Option<T>> {
    let (n1, n2, b1, b2) = if u_first {
        (ch.nu, ch.nv, base.0, base.1)
    } else {
        (ch.nv, ch.nu, base.1, base.0)
    };
    let mut out = vec![None; ch.len()];
    let mut line = vec![None; n1];
    line[b1] = Some(r0);
    for a in (b1 + 1)..n1 {
        line[a] = line[a - 1].and_then(|prev| Some(prev + first(a - 1, a, b2)?));
    }
    for a in (0..b1).rev() {
        line[a] = line[a + 1].and_then(|prev| Some(prev - first(a, a + 1, b2)?));
    }
    for (a, start) in line.iter().enumerate() {
        let mut col = vec![None; n2];
        col[b2] = *start;
        for b in (b2 + 1)..n2 {
            col[b] = col[b - 1].and_then(|prev| Some(prev + second(b - 1, b, a)?));
        }
        for b in (0..b2).rev() {
            col[b] = col[b + 1].and_then(|prev| Some(prev - second(b, b + 1, a)?));
        }
        for (b, val) in col.into_iter().enumerate() {
            let (i, j) = if u_first { (a, b) } else { (b, a) };
            out[ch.idx(i, j)] = val;
        }
    }
    out
}
