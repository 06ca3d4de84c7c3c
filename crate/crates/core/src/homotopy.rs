//! Fiber integration, relative primitives and order-of-vanishing fits.

use std::collections::BTreeMap;
use std::sync::Arc;

use rand::Rng;

use crate::domain::{random_unit, seeded_rng, Chart, DomainBox};
use crate::error::{Error, Result};
use crate::expr::{Expr, TIME};
use crate::forms::{DifferentialForm, MultiIndex, SmoothMap};
use crate::linalg::condition_number;
use crate::quadrature::GaussLegendre;
use crate::strata::{stratum_isotropy, StratifiedModel};

pub const DEFAULT_QUADRATURE: usize = 8;
const IDENTITY_TOL: f64 = 1e-12;
const RETRACT_TOL: f64 = 1e-9;
const VANISH_FLOOR: f64 = 1e-13;

/// Coordinate subspace `{x_i = 0 : i ∈ normal}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FlatSubspace {
    ambient: usize,
    normal: Vec<usize>,
}

impl FlatSubspace {
    pub fn new(ambient: usize, normal: &[usize]) -> Result<Self> {
        let mut normal = normal.to_vec();
        normal.sort_unstable();
        normal.dedup();
        if normal.iter().any(|&i| i >= ambient) {
            return Err(Error::Dimension(format!("normal coordinate out of range in R^{ambient}")));
        }
        Ok(FlatSubspace { ambient, normal })
    }

    /// `{y = 0}` for the named coordinates.
    pub fn named(chart: &Chart, normal: &[&str]) -> Result<Self> {
        let idx: Result<Vec<usize>> = normal
            .iter()
            .map(|n| chart.index_of(n).ok_or_else(|| Error::Dimension(format!("no coordinate `{n}` in {chart:?}"))))
            .collect();
        Self::new(chart.dim(), &idx?)
    }

    pub fn ambient(&self) -> usize {
        self.ambient
    }

    pub fn normal(&self) -> &[usize] {
        &self.normal
    }

    pub fn tangent(&self) -> Vec<usize> {
        (0..self.ambient).filter(|i| !self.normal.contains(i)).collect()
    }

    pub fn dim(&self) -> usize {
        self.ambient - self.normal.len()
    }

    pub fn residual(&self, p: &[f64]) -> f64 {
        self.normal.iter().fold(0.0f64, |m, &i| m.max(p[i].abs()))
    }

    pub fn project(&self, p: &[f64]) -> Vec<f64> {
        let mut q = p.to_vec();
        for &i in &self.normal {
            q[i] = 0.0;
        }
        q
    }
}

/// A subset that a retraction lands in or preserves.
#[derive(Debug, Clone)]
pub enum Subset {
    Flat(FlatSubspace),
    Model(Arc<StratifiedModel>),
}

impl Subset {
    pub fn contains(&self, p: &[f64], tol: f64) -> Result<bool> {
        match self {
            Subset::Flat(f) => Ok(f.residual(p) <= tol),
            Subset::Model(m) => m.contains(p, tol),
        }
    }

    /// Sample points of the subset inside `domain`.
    pub fn samples(&self, domain: &DomainBox, rng: &mut impl Rng, count: usize) -> Result<Vec<Vec<f64>>> {
        match self {
            Subset::Flat(f) => Ok(domain.flatten(f.normal()).samples(rng, count)),
            Subset::Model(m) => {
                let per = count.div_ceil(m.strata().len().max(1));
                Ok(m.samples(rng, per)?.into_iter().map(|(_, p)| p).filter(|p| domain.contains(p)).collect())
            }
        }
    }

    pub fn flat(&self) -> Option<&FlatSubspace> {
        match self {
            Subset::Flat(f) => Some(f),
            Subset::Model(_) => None,
        }
    }
}

/// Smooth deformation retraction `R(t, x) = r^t(x)` of a chart box onto `A`.
#[derive(Debug, Clone)]
pub struct Retraction {
    pub map: SmoothMap,
    pub domain: DomainBox,
    pub a: Subset,
    /// Additional invariant subset `B`; defaults to `A` where needed.
    pub b: Option<Subset>,
    pub strong: bool,
}

impl Retraction {
    pub fn new(map: SmoothMap, domain: DomainBox, a: Subset, b: Option<Subset>, strong: bool) -> Result<Self> {
        let chart = map.target();
        if map.source() != &chart.with_time() {
            return Err(Error::Dimension(format!("retraction source must be (t, {chart:?})")));
        }
        if domain.dim() != chart.dim() {
            return Err(Error::Dimension("retraction domain does not match the chart".into()));
        }
        Ok(Retraction { map, domain, a, b, strong })
    }

    /// `r^t(x) = t x`, onto the origin or any cone through it.
    pub fn radial(chart: &Chart, domain: DomainBox, a: Subset) -> Result<Self> {
        let t = Expr::var(TIME);
        let comps = chart.names().iter().map(|n| Expr::mul(&t, &Expr::var(n))).collect();
        Self::new(SmoothMap::new(&chart.with_time(), chart, comps)?, domain, a, None, false)
    }

    /// `r^t(x, y) = (x, t y)` onto the flat subspace; strong.
    pub fn flat(chart: &Chart, domain: DomainBox, a: FlatSubspace) -> Result<Self> {
        let t = Expr::var(TIME);
        let comps = (0..chart.dim())
            .map(|i| {
                let v = Expr::var(chart.name(i));
                if a.normal().contains(&i) {
                    Expr::mul(&t, &v)
                } else {
                    v
                }
            })
            .collect();
        Self::new(SmoothMap::new(&chart.with_time(), chart, comps)?, domain, Subset::Flat(a), None, true)
    }

    pub fn chart(&self) -> &Chart {
        self.map.target()
    }

    pub fn at(&self, t: f64, x: &[f64]) -> Result<Vec<f64>> {
        let mut p = vec![t];
        p.extend_from_slice(x);
        Ok(self.map.apply(&p)?)
    }

    pub fn b_or_a(&self) -> &Subset {
        self.b.as_ref().unwrap_or(&self.a)
    }

    /// Checks `r^1 = id`, `r^0(U) ⊂ A`, invariance of `A` and `B`, and
    /// pointwise fixing of `A` when strong.
    pub fn validate(&self, grid: usize, seed: u64) -> Result<()> {
        let mut rng = seeded_rng(seed);
        let pts = self.domain.grid(grid);
        for x in &pts {
            let r1 = self.at(1.0, x)?;
            let e = r1.iter().zip(x).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
            if e > IDENTITY_TOL {
                return Err(Error::precondition("r^1 = id", x, e));
            }
            let r0 = self.at(0.0, x)?;
            if !self.a.contains(&r0, RETRACT_TOL)? {
                return Err(Error::precondition("r^0 lands in A", x, f64::NAN));
            }
        }
        let times = [0.0, 0.25, 0.5, 0.75, 1.0];
        for (label, set) in [("A", Some(&self.a)), ("B", self.b.as_ref())] {
            let Some(set) = set else { continue };
            for p in set.samples(&self.domain, &mut rng, 32)? {
                for &t in &times {
                    let q = self.at(t, &p)?;
                    if !set.contains(&q, RETRACT_TOL)? {
                        return Err(Error::precondition(format!("r^t preserves {label} (t = {t})"), &p, f64::NAN));
                    }
                    if self.strong && label == "A" {
                        let e = q.iter().zip(&p).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
                        if e > RETRACT_TOL {
                            return Err(Error::precondition(format!("strong retraction fixes A (t = {t})"), &p, e));
                        }
                    }
                }
            }
        }
        Ok(())
    }
}

/// Grid resolution keeping about `budget` points in `dim` dimensions.
pub(crate) fn grid_for(dim: usize, budget: usize) -> usize {
    ((budget as f64).powf(1.0 / dim.max(1) as f64).floor() as usize).max(2)
}

/// `(π)_* γ = ∫_0^1 i_t^* ι_{∂t} γ dt` with Gauss–Legendre quadrature of
/// the given order, kept symbolic in the base coordinates.
pub fn fiber_integrate(gamma: &DifferentialForm, order: usize) -> Result<DifferentialForm> {
    if gamma.degree() == 0 {
        return Err(Error::Degree("fiber integration of a function".into()));
    }
    let time = gamma.time_position()?;
    let base = gamma.chart().without_time();
    let rule = GaussLegendre::<f64>::new(order);
    let mut terms = Vec::new();
    for (idx, c) in gamma.terms() {
        let Some(pos) = idx.indices().iter().position(|&i| i == time) else { continue };
        let sign = if pos % 2 == 0 { 1.0 } else { -1.0 };
        let mut sum = Expr::zero();
        for (&node, &w) in rule.nodes().iter().zip(rule.weights()) {
            sum = sum + w * c.substitute_one(TIME, &Expr::constant(node));
        }
        let rest: Vec<usize> = idx.indices().iter().filter(|&&i| i != time).map(|&i| i - 1).collect();
        terms.push((rest, sign * sum));
    }
    DifferentialForm::from_terms(&base, gamma.degree() - 1, terms)
}

/// `i_1^*γ − i_0^*γ − (π)_* dγ − d (π)_* γ`, which vanishes identically.
pub fn homotopy_defect(gamma: &DifferentialForm, order: usize) -> Result<DifferentialForm> {
    let ends = gamma.restrict_time(1.0)?.sub(&gamma.restrict_time(0.0)?)?;
    let d_first = if gamma.degree() < gamma.dim() {
        fiber_integrate(&gamma.exterior_derivative(), order)?
    } else {
        DifferentialForm::zero(&gamma.chart().without_time(), gamma.degree())
    };
    let d_after = if gamma.degree() > 0 {
        fiber_integrate(gamma, order)?.exterior_derivative()
    } else {
        DifferentialForm::zero(&gamma.chart().without_time(), gamma.degree())
    };
    ends.sub(&d_first)?.sub(&d_after)
}

fn flat_or_unsupported(s: &Subset) -> Result<&FlatSubspace> {
    s.flat().ok_or_else(|| Error::Unsupported("correction along a non-flat subset".into()))
}

/// Checks `dα = 0` on a grid and that `α` vanishes at sampled points of `A`.
fn check_relative_closed(alpha: &DifferentialForm, r: &Retraction) -> Result<()> {
    let chart = r.chart();
    if alpha.chart() != chart {
        return Err(Error::Dimension("form and retraction live on different charts".into()));
    }
    let pts = r.domain.grid(grid_for(chart.dim(), 4096));
    let (res, at) = alpha.exterior_derivative().max_abs_over(&pts, None)?;
    if res > 1e-9 {
        return Err(Error::precondition("dα = 0", &at, res));
    }
    let mut rng = seeded_rng(0xA11CE);
    let a_pts = r.a.samples(&r.domain, &mut rng, 64)?;
    let (res, at) = alpha.max_abs_over(&a_pts, None)?;
    if res > 1e-9 {
        return Err(Error::precondition("α vanishes along A", &at, res));
    }
    Ok(())
}

/// `β = (π)_* R^*α`, a primitive of a closed form vanishing along `A`,
/// itself vanishing along `A`.
pub fn relative_primitive(alpha: &DifferentialForm, r: &Retraction, order: usize) -> Result<DifferentialForm> {
    check_relative_closed(alpha, r)?;
    r.validate(grid_for(r.chart().dim(), 256), 0xBEEF)?;
    fiber_integrate(&alpha.pullback(&r.map)?, order)
}

/// Largest condition number of the coefficient matrix over grid points.
fn worst_condition(omega: &DifferentialForm, pts: &[Vec<f64>]) -> Result<(f64, Vec<f64>)> {
    let mut worst = (0.0f64, Vec::new());
    for p in pts {
        let c = condition_number(&omega.coefficient_matrix(&omega.chart().binding(p))?);
        if !(c <= worst.0) {
            worst = (c, p.clone());
        }
    }
    Ok(worst)
}

/// Primitive of `ω0 − ω1` vanishing along the flat subset `B`:
/// `β = β' − df` with `f = Σ_j β'_{y_j}(x, 0) y_j`.
pub fn primitive_vanishing_on_b(
    omega0: &DifferentialForm,
    omega1: &DifferentialForm,
    r: &Retraction,
    order: usize,
) -> Result<DifferentialForm> {
    let b = flat_or_unsupported(r.b_or_a())?;
    let chart = r.chart();
    let pts = r.domain.grid(grid_for(chart.dim(), 1024));
    for om in [omega0, omega1] {
        let (cond, at) = worst_condition(om, &pts)?;
        if !(cond <= 1e8) {
            return Err(Error::Degenerate { t: f64::NAN, point: at, cond });
        }
    }
    let alpha = omega0.sub(omega1)?;
    let mut rng = seeded_rng(0xB0B);
    let b_pts = Subset::Flat(b.clone()).samples(&r.domain, &mut rng, 64)?;
    let tangent = b.tangent();
    let along_b = alpha.map_coefficients(|idx, c| {
        if idx.indices().iter().all(|i| tangent.contains(i)) {
            c.clone()
        } else {
            Expr::zero()
        }
    });
    let (res, at) = along_b.max_abs_over(&b_pts, None)?;
    if res > 1e-9 {
        return Err(Error::precondition("ω0 and ω1 agree on TB", &at, res));
    }
    let beta = relative_primitive(&alpha, r, order)?;
    let on_b: BTreeMap<String, Expr> = b.normal().iter().map(|&j| (chart.name(j).to_string(), Expr::zero())).collect();
    let mut f = Expr::zero();
    for &j in b.normal() {
        let c = beta.coefficient(&[j]).substitute(&on_b);
        f = f + c * Expr::var(chart.name(j));
    }
    beta.sub(&DifferentialForm::function(chart, f).exterior_derivative())
}

/// Settings for [`vanishing_order`].
#[derive(Debug, Clone)]
pub struct OrderProbe {
    /// Decreasing normal distances.
    pub scales: Vec<f64>,
    /// Base points on `A`, each with its own random normal direction.
    pub samples: usize,
    pub seed: u64,
}

impl Default for OrderProbe {
    fn default() -> Self {
        OrderProbe { scales: vec![1e-1, 1e-2, 1e-3], samples: 16, seed: 7 }
    }
}

#[derive(Debug, Clone)]
pub struct CoefficientFit {
    pub label: String,
    /// Smallest fitted exponent; infinite when every value is below the floor.
    pub exponent: f64,
    pub worst_at: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct VanishingReport {
    pub order: usize,
    pub fits: Vec<CoefficientFit>,
    pub passed: bool,
}

impl VanishingReport {
    pub fn min_exponent(&self) -> f64 {
        self.fits.iter().map(|f| f.exponent).fold(f64::INFINITY, f64::min)
    }
}

/// Least-squares slope of `log v` against `log s`.
fn loglog_slope(scales: &[f64], values: &[f64]) -> f64 {
    let xs: Vec<f64> = scales.iter().map(|s| s.ln()).collect();
    let ys: Vec<f64> = values.iter().map(|v| v.max(1e-300).ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

fn fit_expr(
    label: &str,
    c: &Expr,
    chart: &Chart,
    a: &FlatSubspace,
    domain: &DomainBox,
    probe: &OrderProbe,
    rng: &mut impl Rng,
) -> Result<CoefficientFit> {
    let timed = c.mentions(TIME);
    let base = domain.flatten(a.normal());
    let mut fit = CoefficientFit { label: label.to_string(), exponent: f64::INFINITY, worst_at: Vec::new() };
    for _ in 0..probe.samples {
        let x = base.sample(rng);
        let u = random_unit(rng, a.normal().len());
        let t = if timed { Some(rng.gen_range(0.0..=1.0)) } else { None };
        let values: Vec<f64> = probe
            .scales
            .iter()
            .map(|&s| {
                let mut p = x.clone();
                for (&j, &uj) in a.normal().iter().zip(&u) {
                    p[j] += s * uj;
                }
                let mut b = chart.binding(&p);
                if let Some(t) = t {
                    b.set(TIME, t);
                }
                Ok(c.evaluate(&b)?.abs())
            })
            .collect::<Result<_>>()?;
        if values.iter().all(|&v| v < VANISH_FLOOR) {
            continue;
        }
        let slope = loglog_slope(&probe.scales, &values);
        if slope < fit.exponent {
            fit.exponent = slope;
            fit.worst_at = x;
        }
    }
    Ok(fit)
}

/// Fits the decay exponent of `c` off the flat subspace `A` and compares it
/// with the claimed order `j`. Coefficients may depend on `t`, which is then
/// sampled slice-wise.
pub fn vanishing_order_expr(
    c: &Expr,
    chart: &Chart,
    a: &FlatSubspace,
    domain: &DomainBox,
    j: usize,
    probe: &OrderProbe,
) -> Result<VanishingReport> {
    let mut rng = seeded_rng(probe.seed);
    let fit = fit_expr("f", c, chart, a, domain, probe, &mut rng)?;
    let passed = fit.exponent >= j as f64 - 0.2;
    Ok(VanishingReport { order: j, fits: vec![fit], passed })
}

/// Coefficient-wise [`vanishing_order_expr`] for a form on `chart` (which
/// may carry a leading time coordinate that is sampled, not probed).
pub fn vanishing_order(
    form: &DifferentialForm,
    a: &FlatSubspace,
    domain: &DomainBox,
    j: usize,
    probe: &OrderProbe,
) -> Result<VanishingReport> {
    if !(1..=3).contains(&j) {
        return Err(Error::Unsupported(format!("vanishing order {j}")));
    }
    let chart = form.chart().without_time();
    if a.ambient() != chart.dim() {
        return Err(Error::Dimension("subspace and form dimensions differ".into()));
    }
    let mut rng = seeded_rng(probe.seed);
    let mut fits = Vec::new();
    for (idx, c) in form.terms() {
        let label = index_label(form.chart(), idx);
        fits.push(fit_expr(&label, c, &chart, a, domain, probe, &mut rng)?);
    }
    let passed = fits.iter().all(|f| f.exponent >= j as f64 - 0.2);
    Ok(VanishingReport { order: j, fits, passed })
}

fn index_label(chart: &Chart, idx: &MultiIndex) -> String {
    if idx.degree() == 0 {
        return "1".into();
    }
    idx.indices().iter().map(|&i| format!("d{}", chart.name(i))).collect::<Vec<_>>().join("^")
}

/// Primitive `λ = (π)_* R^*ω` of `ω` near a model whose strata are all
/// isotropic. A non-isotropic stratum is refused, reporting `|r^0* ω|`.
pub fn exactness_primitive(
    omega: &DifferentialForm,
    r: &Retraction,
    model: &StratifiedModel,
    order: usize,
) -> Result<DifferentialForm> {
    if omega.chart() != model.ambient() || omega.chart() != r.chart() {
        return Err(Error::Dimension("form, retraction and model must share a chart".into()));
    }
    let pulled = omega.pullback(&r.map)?;
    let classes = stratum_isotropy(model, omega, 16, 0x150)?;
    if let Some(bad) = classes.iter().find(|c| !c.isotropic) {
        let r0 = pulled.restrict_time(0.0)?;
        let pts = r.domain.grid(grid_for(r.chart().dim(), 1024));
        let (obstruction, _) = r0.max_abs_over(&pts, None)?;
        return Err(Error::NotIsotropic { stratum: bad.name.clone(), residual: bad.residual, obstruction });
    }
    r.validate(grid_for(r.chart().dim(), 256), 0xBEEF)?;
    fiber_integrate(&pulled, order)
}
