//! Stratified conical models and linear symplectic classification.
//!
//! A model is a finite list of strata (each with a parameterization for
//! sampling and implicit equations for membership and tangents), a closure
//! poset, and conical charts at singular points. Zariski tangents at a
//! singular point are the stratum tangent plus the span of sampled cone
//! directions of the higher strata.

pub mod models;

use rand::Rng;

use crate::domain::{seeded_rng, Chart, DomainBox};
use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::forms::{DifferentialForm, SmoothMap};
use crate::linalg::{self, condition_number, Matrix};
use crate::Mat;

/// Relative singular value threshold for spans and kernels.
pub const SPAN_TOL: f64 = 1e-9;
/// Singular values between `SPAN_TOL` and this (relative) make the rank
/// ambiguous and are reported.
pub const RANK_INSTABILITY_BAND: f64 = 1e-6;
/// Tolerance for isotropy and containment residuals.
pub const CLASSIFY_TOL: f64 = 1e-9;
/// Cone directions sampled per higher stratum.
pub const CONE_SAMPLES: usize = 64;
const MEMBERSHIP_TOL: f64 = 1e-9;

/// Linear subspace of `R^n` stored by an orthonormal basis.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearSubspace {
    ambient: usize,
    basis: Vec<Vec<f64>>,
}

impl LinearSubspace {
    pub fn zero(ambient: usize) -> Self {
        LinearSubspace { ambient, basis: Vec::new() }
    }

    pub fn whole(ambient: usize) -> Self {
        LinearSubspace { ambient, basis: Matrix::<f64>::identity(ambient).columns() }
    }

    /// Span of the coordinate axes at the given positions.
    pub fn coordinate(ambient: usize, axes: &[usize]) -> Self {
        let id = Matrix::<f64>::identity(ambient);
        LinearSubspace { ambient, basis: axes.iter().map(|&i| id.column(i)).collect() }
    }

    /// Span of arbitrary vectors, with an SVD rank decision.
    pub fn span(ambient: usize, vectors: &[Vec<f64>]) -> Result<Self> {
        if let Some(v) = vectors.iter().find(|v| v.len() != ambient) {
            return Err(Error::Dimension(format!("vector of length {} in R^{ambient}", v.len())));
        }
        let (basis, _) = linalg::orthonormal_span(ambient, vectors, SPAN_TOL);
        Ok(LinearSubspace { ambient, basis })
    }

    /// Like [`span`](Self::span) but refuses when a singular value falls in
    /// the ambiguous band above the threshold.
    pub fn span_checked(ambient: usize, vectors: &[Vec<f64>]) -> Result<Self> {
        let (basis, sigma) = linalg::orthonormal_span(ambient, vectors, SPAN_TOL);
        if let Some(&smax) = sigma.first() {
            if let Some(s) = sigma.iter().find(|&&s| s > SPAN_TOL * smax && s <= RANK_INSTABILITY_BAND * smax) {
                return Err(Error::Diagnostic(format!(
                    "rank instability: relative singular value {:.3e} near the threshold",
                    s / smax
                )));
            }
        }
        Ok(LinearSubspace { ambient, basis })
    }

    pub fn ambient(&self) -> usize {
        self.ambient
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn basis(&self) -> &[Vec<f64>] {
        &self.basis
    }

    pub fn project(&self, v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.ambient];
        for b in &self.basis {
            let c = linalg::dot(b, v);
            for (o, &bi) in out.iter_mut().zip(b) {
                *o += c * bi;
            }
        }
        out
    }

    /// Distance from `v` to the subspace.
    pub fn residual(&self, v: &[f64]) -> f64 {
        let p = self.project(v);
        linalg::norm(&v.iter().zip(&p).map(|(a, b)| a - b).collect::<Vec<_>>())
    }

    /// Largest residual of `other`'s basis vectors against `self`.
    pub fn containment_residual(&self, other: &LinearSubspace) -> f64 {
        other.basis.iter().map(|v| self.residual(v)).fold(0.0, f64::max)
    }

    pub fn contains_subspace(&self, other: &LinearSubspace, tol: f64) -> bool {
        self.containment_residual(other) <= tol
    }

    pub fn sum(&self, other: &LinearSubspace) -> Result<Self> {
        let all: Vec<Vec<f64>> = self.basis.iter().chain(&other.basis).cloned().collect();
        Self::span(self.ambient, &all)
    }

    /// `self ⊕ other = R^n`.
    pub fn is_complementary_to(&self, other: &LinearSubspace) -> bool {
        self.dim() + other.dim() == self.ambient && self.sum(other).map(|s| s.dim() == self.ambient).unwrap_or(false)
    }

    /// Matrix whose columns are the basis vectors.
    pub fn matrix(&self) -> Mat {
        Matrix::from_columns(self.ambient, &self.basis)
    }
}

/// ω-complement `W^Ω = {v : Ω(w, v) = 0 for all w ∈ W}`.
pub fn symplectic_complement(w: &LinearSubspace, omega: &Mat) -> Result<LinearSubspace> {
    let n = w.ambient();
    if omega.rows() != n || omega.cols() != n {
        return Err(Error::Dimension(format!("{}x{} form on R^{n}", omega.rows(), omega.cols())));
    }
    if omega.add(&omega.transpose()).max_abs() > 1e-12 * (1.0 + omega.max_abs()) {
        return Err(Error::Diagnostic("form matrix is not antisymmetric".into()));
    }
    let cond = condition_number(omega);
    if !(cond <= 1e8) {
        return Err(Error::Degenerate { t: f64::NAN, point: Vec::new(), cond });
    }
    if w.dim() == 0 {
        return Ok(LinearSubspace::whole(n));
    }
    let a = w.matrix().transpose().matmul(omega);
    let kernel = linalg::null_space(&a, SPAN_TOL);
    LinearSubspace::span(n, &kernel)
}

/// Largest `|ω(u, v)|` over basis pairs of `w`.
pub fn restricted_form_norm(w: &LinearSubspace, omega: &Mat) -> f64 {
    if w.dim() == 0 {
        return 0.0;
    }
    let m = w.matrix();
    m.transpose().matmul(omega).matmul(&m).max_abs()
}

/// One stratum: a parameterized manifold with implicit equations.
#[derive(Debug, Clone)]
pub struct Stratum {
    pub name: String,
    pub dim: usize,
    /// Parameterization from a parameter chart into the ambient chart.
    pub param: SmoothMap,
    pub param_box: DomainBox,
    /// Ambient functions whose common zero set contains the stratum, with
    /// Jacobian of rank `n - dim` along it.
    pub equations: Vec<Expr>,
}

impl Stratum {
    pub fn new(name: &str, param: SmoothMap, param_box: DomainBox, equations: Vec<Expr>) -> Result<Self> {
        if param_box.dim() != param.source().dim() {
            return Err(Error::Dimension(format!("stratum `{name}`: parameter box does not match parameters")));
        }
        Ok(Stratum { name: name.to_string(), dim: param.source().dim(), param, param_box, equations })
    }

    /// A single point as a 0-dimensional stratum.
    pub fn point(name: &str, ambient: &Chart, p: &[f64]) -> Result<Self> {
        let empty = Chart::new::<&str>(&[]);
        let comps = p.iter().map(|&v| Expr::constant(v)).collect();
        let param = SmoothMap::new(&empty, ambient, comps)?;
        let equations =
            ambient.names().iter().zip(p).map(|(n, &v)| Expr::var(n) - Expr::constant(v)).collect();
        Self::new(name, param, DomainBox::new(vec![], vec![]), equations)
    }

    pub fn point_at(&self, s: &[f64]) -> Result<Vec<f64>> {
        Ok(self.param.apply(s)?)
    }

    pub fn sample(&self, rng: &mut impl Rng, count: usize) -> Result<Vec<(Vec<f64>, Vec<f64>)>> {
        let count = if self.dim == 0 { 1 } else { count };
        (0..count)
            .map(|_| {
                let s = self.param_box.sample(rng);
                let p = self.point_at(&s)?;
                Ok((s, p))
            })
            .collect()
    }

    /// Tangent space from the parameterization's Jacobian.
    pub fn tangent_at_param(&self, s: &[f64]) -> Result<LinearSubspace> {
        let n = self.param.target().dim();
        if self.dim == 0 {
            return Ok(LinearSubspace::zero(n));
        }
        let j = self.param.jacobian_at(s)?;
        LinearSubspace::span(n, &j.columns())
    }

    /// Tangent space as the kernel of the equations' Jacobian.
    pub fn tangent_at_point(&self, ambient: &Chart, p: &[f64]) -> Result<LinearSubspace> {
        let n = ambient.dim();
        if self.equations.is_empty() {
            return Ok(LinearSubspace::whole(n));
        }
        let b = ambient.binding(p);
        let rows: Result<Vec<Vec<f64>>> = self
            .equations
            .iter()
            .map(|e| ambient.names().iter().map(|v| Ok(e.differentiate(v).evaluate(&b)?)).collect())
            .collect();
        let j = Matrix::from_rows(&rows?);
        let kernel = linalg::null_space(&j, SPAN_TOL);
        let t = LinearSubspace::span(n, &kernel)?;
        if t.dim() != self.dim {
            return Err(Error::Diagnostic(format!(
                "stratum `{}`: equations give a {}-dimensional tangent at {p:?}, expected {}",
                self.name,
                t.dim(),
                self.dim
            )));
        }
        Ok(t)
    }

    /// Largest equation residual at `p`.
    pub fn equation_residual(&self, ambient: &Chart, p: &[f64]) -> Result<f64> {
        let b = ambient.binding(p);
        let mut worst = 0.0f64;
        for e in &self.equations {
            worst = worst.max(e.evaluate(&b)?.abs());
        }
        Ok(worst)
    }
}

/// Cone of one higher stratum inside the normal slice of a conical chart.
#[derive(Debug, Clone)]
pub struct ConeSpec {
    /// Name of the higher stratum this cone describes.
    pub stratum: String,
    /// Functions of the chart coordinates vanishing on `R^k × cone`.
    pub equations: Vec<Expr>,
    /// Functions of the chart coordinates that must be strictly positive.
    pub positive: Vec<Expr>,
    /// Sampler of cone points in the normal slice `R^{n-k}`.
    pub generator: SmoothMap,
    pub generator_box: DomainBox,
}

impl ConeSpec {
    pub fn contains(&self, chart: &Chart, q: &[f64]) -> Result<bool> {
        let b = chart.binding(q);
        for e in &self.equations {
            if e.evaluate(&b)?.abs() > MEMBERSHIP_TOL {
                return Ok(false);
            }
        }
        for e in &self.positive {
            if e.evaluate(&b)? <= 0.0 {
                return Ok(false);
            }
        }
        Ok(true)
    }

    pub fn sample_normal(&self, rng: &mut impl Rng) -> Result<Vec<f64>> {
        let s = self.generator_box.sample(rng);
        Ok(self.generator.apply(&s)?)
    }
}

/// Chart `θ_p` around a point of a stratum, flattening the stratum to
/// `R^k × {0}` and each higher stratum to `R^k × cone`.
#[derive(Debug, Clone)]
pub struct ConicalChart {
    pub stratum: String,
    pub center: Vec<f64>,
    /// `θ`: ambient coordinates to chart coordinates.
    pub theta: SmoothMap,
    /// `θ^{-1}`: chart coordinates to ambient coordinates.
    pub theta_inv: SmoothMap,
    /// Dimension of the flattened stratum; chart coordinates split `k + (n-k)`.
    pub k: usize,
    /// Half-width of the ambient cube around `center` where the chart is valid.
    pub radius: f64,
    pub cones: Vec<ConeSpec>,
}

impl ConicalChart {
    /// Identity chart at `center` with the given split.
    pub fn identity(stratum: &str, ambient: &Chart, center: &[f64], k: usize, radius: f64, cones: Vec<ConeSpec>) -> Self {
        let id = SmoothMap::identity(ambient);
        ConicalChart {
            stratum: stratum.to_string(),
            center: center.to_vec(),
            theta: id.clone(),
            theta_inv: id,
            k,
            radius,
            cones,
        }
    }

    pub fn chart(&self) -> &Chart {
        self.theta.target()
    }

    pub fn ambient(&self) -> &Chart {
        self.theta.source()
    }

    pub fn dim(&self) -> usize {
        self.ambient().dim()
    }

    pub fn ambient_box(&self) -> DomainBox {
        DomainBox::new(
            self.center.iter().map(|c| c - self.radius).collect(),
            self.center.iter().map(|c| c + self.radius).collect(),
        )
    }

    /// Box of base coordinates `x ∈ R^k` around the image of the center.
    pub fn base_box(&self) -> Result<DomainBox> {
        let c = self.theta.apply(&self.center)?;
        Ok(DomainBox::new(
            c[..self.k].iter().map(|v| v - self.radius).collect(),
            c[..self.k].iter().map(|v| v + self.radius).collect(),
        ))
    }

    /// Worst `|θ^{-1}(θ(p)) - p|` over ambient samples.
    pub fn inversion_residual(&self, rng: &mut impl Rng, samples: usize) -> Result<(f64, Vec<f64>)> {
        let mut worst = (0.0, self.center.clone());
        for p in self.ambient_box().samples(rng, samples) {
            let q = self.theta.apply(&p)?;
            let back = self.theta_inv.apply(&q)?;
            let r = back.iter().zip(&p).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
            if r > worst.0 {
                worst = (r, p);
            }
        }
        Ok(worst)
    }

    /// Worst normal chart coordinate of stratum samples inside the chart box.
    pub fn flattening_residual(&self, stratum: &Stratum, rng: &mut impl Rng, samples: usize) -> Result<f64> {
        let b = self.ambient_box();
        let mut worst = 0.0f64;
        for (_, p) in stratum.sample(rng, samples)? {
            if !b.contains(&p) {
                continue;
            }
            let q = self.theta.apply(&p)?;
            worst = q[self.k..].iter().fold(worst, |m, v| m.max(v.abs()));
        }
        Ok(worst)
    }

    /// Ambient tangent vector at `p` of the chart vector `v` (chart coordinates).
    pub fn push_vector(&self, p: &[f64], v: &[f64]) -> Result<Vec<f64>> {
        let q = self.theta.apply(p)?;
        Ok(self.theta_inv.jacobian_at(&q)?.mul_vec(v))
    }
}

/// Checks the product-and-cone condition of a conical chart: for sampled
/// points `(x, y)` of each cone and `t ∈ {0.9, 0.5, 0.1}`, `(x', t·y)` stays
/// in the cone for sampled base points `x'`.
pub fn check_conical(chart: &ConicalChart, samples: usize, tol: f64, seed: u64) -> Result<bool> {
    let mut rng = seeded_rng(seed);
    let (res, at) = chart.inversion_residual(&mut rng, samples)?;
    if res > tol {
        return Err(Error::precondition("conical chart inversion", &at, res));
    }
    let base = chart.base_box()?;
    let cc = chart.chart();
    for cone in &chart.cones {
        for _ in 0..samples {
            let y = cone.sample_normal(&mut rng)?;
            if y.len() != chart.dim() - chart.k {
                return Err(Error::Dimension(format!("cone `{}` generator has the wrong arity", cone.stratum)));
            }
            let point = |x: Vec<f64>, scale: f64| -> Vec<f64> { x.into_iter().chain(y.iter().map(|v| v * scale)).collect() };
            if !cone.contains(cc, &point(base.sample(&mut rng), 1.0))? {
                return Ok(false);
            }
            for t in [0.9, 0.5, 0.1] {
                if !cone.contains(cc, &point(base.sample(&mut rng), t))? {
                    return Ok(false);
                }
            }
        }
    }
    Ok(true)
}

/// Stratified subspace of a chart together with its closure poset.
#[derive(Debug, Clone)]
pub struct StratifiedModel {
    pub name: String,
    ambient: Chart,
    strata: Vec<Stratum>,
    /// `below[i][j]` iff stratum i < stratum j (transitively closed).
    below: Vec<Vec<bool>>,
    charts: Vec<ConicalChart>,
}

impl StratifiedModel {
    /// Validates and builds a model. `order` lists pairs `(X, Y)` meaning
    /// `X < Y`; it is transitively closed here.
    pub fn new(
        name: &str,
        ambient: &Chart,
        strata: Vec<Stratum>,
        order: &[(&str, &str)],
        charts: Vec<ConicalChart>,
    ) -> Result<Self> {
        let idx = |s: &str| {
            strata.iter().position(|st| st.name == s).ok_or_else(|| Error::Model(format!("unknown stratum `{s}`")))
        };
        for (i, s) in strata.iter().enumerate() {
            if strata[..i].iter().any(|o| o.name == s.name) {
                return Err(Error::Model(format!("duplicate stratum `{}`", s.name)));
            }
            if s.param.target() != ambient {
                return Err(Error::Model(format!("stratum `{}` does not map into {ambient:?}", s.name)));
            }
        }
        let m = strata.len();
        let mut below = vec![vec![false; m]; m];
        for (a, b) in order {
            below[idx(a)?][idx(b)?] = true;
        }
        for k in 0..m {
            for i in 0..m {
                for j in 0..m {
                    if below[i][k] && below[k][j] {
                        below[i][j] = true;
                    }
                }
            }
        }
        for i in 0..m {
            if below[i][i] {
                return Err(Error::Model(format!("closure order has a cycle through `{}`", strata[i].name)));
            }
            for j in 0..m {
                if below[i][j] && strata[i].dim >= strata[j].dim {
                    return Err(Error::Model(format!(
                        "`{}` < `{}` but dimensions are {} and {}",
                        strata[i].name, strata[j].name, strata[i].dim, strata[j].dim
                    )));
                }
            }
        }
        for c in &charts {
            idx(&c.stratum)?;
            if c.ambient() != ambient {
                return Err(Error::Model(format!("chart at {:?} is on another ambient chart", c.center)));
            }
            for cone in &c.cones {
                idx(&cone.stratum)?;
            }
        }
        let model = StratifiedModel { name: name.to_string(), ambient: ambient.clone(), strata, below, charts };
        model.check_disjoint(0x5eed, 24)?;
        Ok(model)
    }

    fn check_disjoint(&self, seed: u64, per_stratum: usize) -> Result<()> {
        let mut rng = seeded_rng(seed);
        let samples: Vec<Vec<Vec<f64>>> = self
            .strata
            .iter()
            .map(|s| Ok(s.sample(&mut rng, per_stratum)?.into_iter().map(|(_, p)| p).collect()))
            .collect::<Result<_>>()?;
        for i in 0..samples.len() {
            for j in i + 1..samples.len() {
                for a in &samples[i] {
                    for b in &samples[j] {
                        let d = linalg::norm(&a.iter().zip(b).map(|(x, y)| x - y).collect::<Vec<_>>());
                        if d <= 1e-9 {
                            return Err(Error::Model(format!(
                                "strata `{}` and `{}` meet at {a:?}",
                                self.strata[i].name, self.strata[j].name
                            )));
                        }
                    }
                }
            }
        }
        Ok(())
    }

    pub fn ambient(&self) -> &Chart {
        &self.ambient
    }

    pub fn dim(&self) -> usize {
        self.ambient.dim()
    }

    pub fn strata(&self) -> &[Stratum] {
        &self.strata
    }

    pub fn charts(&self) -> &[ConicalChart] {
        &self.charts
    }

    pub fn stratum(&self, name: &str) -> Option<(usize, &Stratum)> {
        self.strata.iter().enumerate().find(|(_, s)| s.name == name)
    }

    pub fn less(&self, i: usize, j: usize) -> bool {
        self.below[i][j]
    }

    pub fn higher(&self, i: usize) -> Vec<usize> {
        (0..self.strata.len()).filter(|&j| self.below[i][j]).collect()
    }

    /// Whether `p` satisfies the equations of some stratum.
    pub fn contains(&self, p: &[f64], tol: f64) -> Result<bool> {
        for s in &self.strata {
            if s.equation_residual(&self.ambient, p)? <= tol {
                return Ok(true);
            }
        }
        Ok(false)
    }

    pub fn chart_at(&self, p: &[f64]) -> Option<&ConicalChart> {
        self.charts.iter().find(|c| c.center.iter().zip(p).all(|(a, b)| (a - b).abs() <= 1e-9))
    }

    /// Sample points of stratum `i`. Strata below others are sampled at
    /// their chart centers, where Zariski tangents are defined.
    pub fn stratum_samples(&self, i: usize, rng: &mut impl Rng, count: usize) -> Result<Vec<Vec<f64>>> {
        let s = &self.strata[i];
        if self.higher(i).is_empty() {
            return Ok(s.sample(rng, count)?.into_iter().map(|(_, p)| p).collect());
        }
        Ok(self.charts.iter().filter(|c| c.stratum == s.name).map(|c| c.center.clone()).collect())
    }

    /// Samples across all strata, tagged with the stratum index.
    pub fn samples(&self, rng: &mut impl Rng, per_stratum: usize) -> Result<Vec<(usize, Vec<f64>)>> {
        let mut out = Vec::new();
        for i in 0..self.strata.len() {
            for p in self.stratum_samples(i, rng, per_stratum)? {
                out.push((i, p));
            }
        }
        Ok(out)
    }
}

/// Zariski tangent of the model at `p`, a point of the named stratum.
pub fn zariski_tangent(model: &StratifiedModel, p: &[f64], stratum: &str) -> Result<LinearSubspace> {
    let (i, s) = model.stratum(stratum).ok_or_else(|| Error::Model(format!("unknown stratum `{stratum}`")))?;
    let res = s.equation_residual(model.ambient(), p)?;
    if res > MEMBERSHIP_TOL {
        return Err(Error::precondition(format!("point lies on stratum `{stratum}`"), p, res));
    }
    let tangent = s.tangent_at_point(model.ambient(), p)?;
    let higher = model.higher(i);
    if higher.is_empty() {
        return Ok(tangent);
    }
    let chart = model
        .chart_at(p)
        .ok_or_else(|| Error::Diagnostic(format!("missing conical chart at singular point {p:?} of `{stratum}`")))?;
    let mut vectors = tangent.basis().to_vec();
    let mut rng = seeded_rng(0xC0FE);
    for cone in &chart.cones {
        for _ in 0..CONE_SAMPLES {
            let y = cone.sample_normal(&mut rng)?;
            let v: Vec<f64> = vec![0.0; chart.k].into_iter().chain(y).collect();
            vectors.push(chart.push_vector(p, &v)?);
        }
    }
    LinearSubspace::span_checked(model.dim(), &vectors)
}

#[derive(Debug, Clone)]
pub struct StratumClass {
    pub name: String,
    pub dim: usize,
    pub isotropic: bool,
    /// Worst `|ω(u, v)|` over orthonormal tangent frames at samples.
    pub residual: f64,
    pub worst_at: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct PointClass {
    pub stratum: String,
    pub point: Vec<f64>,
    pub zariski_dim: usize,
    pub coisotropic: bool,
    /// Residual of `W^Ω ⊆ W`.
    pub residual: f64,
}

#[derive(Debug, Clone)]
pub struct Classification {
    pub strata: Vec<StratumClass>,
    pub points: Vec<PointClass>,
    pub lagrangian: bool,
}

impl Classification {
    pub fn all_isotropic(&self) -> bool {
        self.strata.iter().all(|s| s.isotropic)
    }

    pub fn all_coisotropic(&self) -> bool {
        self.points.iter().all(|p| p.coisotropic)
    }

    pub fn stratum(&self, name: &str) -> Option<&StratumClass> {
        self.strata.iter().find(|s| s.name == name)
    }
}

/// Isotropy of each stratum: `ω` on orthonormal tangent frames at samples.
pub fn stratum_isotropy(model: &StratifiedModel, omega: &DifferentialForm, per_stratum: usize, seed: u64) -> Result<Vec<StratumClass>> {
    if omega.degree() != 2 || omega.chart() != model.ambient() {
        return Err(Error::Dimension("classification needs a 2-form on the model's chart".into()));
    }
    let mut rng = seeded_rng(seed);
    let chart = model.ambient();
    let mut strata = Vec::new();
    for s in model.strata() {
        let mut worst = (0.0f64, Vec::new());
        for (param, p) in s.sample(&mut rng, per_stratum)? {
            let t = s.tangent_at_param(&param)?;
            let om = omega.coefficient_matrix(&chart.binding(&p))?;
            let r = restricted_form_norm(&t, &om);
            if r > worst.0 || worst.1.is_empty() {
                worst = (r, p);
            }
        }
        strata.push(StratumClass {
            name: s.name.clone(),
            dim: s.dim,
            isotropic: worst.0 <= CLASSIFY_TOL,
            residual: worst.0,
            worst_at: worst.1,
        });
    }
    Ok(strata)
}

/// Classifies each stratum (isotropic), each sampled point (coisotropic)
/// and the whole model (Lagrangian) with respect to the 2-form `omega`.
pub fn classify(model: &StratifiedModel, omega: &DifferentialForm, per_stratum: usize, seed: u64) -> Result<Classification> {
    let strata = stratum_isotropy(model, omega, per_stratum, seed)?;
    let mut rng = seeded_rng(seed.wrapping_add(1));
    let chart = model.ambient();
    let mut points = Vec::new();
    for (i, p) in model.samples(&mut rng, per_stratum)? {
        let name = &model.strata()[i].name;
        let w = zariski_tangent(model, &p, name)?;
        let om = omega.coefficient_matrix(&chart.binding(&p))?;
        let c = symplectic_complement(&w, &om)?;
        let residual = w.containment_residual(&c);
        points.push(PointClass {
            stratum: name.clone(),
            point: p,
            zariski_dim: w.dim(),
            coisotropic: residual <= CLASSIFY_TOL,
            residual,
        });
    }
    let lagrangian = strata.iter().all(|s| s.isotropic) && points.iter().all(|p| p.coisotropic);
    Ok(Classification { strata, points, lagrangian })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Equivalence {
    /// Isotropic and coisotropic everywhere.
    pub left: bool,
    /// Every stratum lies below (or is) a Lagrangian stratum.
    pub right: bool,
    pub agree: bool,
}

/// Classifies the model and compares the pointwise Lagrangian condition
/// with the combinatorial one read from the closure poset.
pub fn lagrangian_equivalence_check(
    model: &StratifiedModel,
    omega: &DifferentialForm,
    per_stratum: usize,
    seed: u64,
) -> Result<Equivalence> {
    let classes = classify(model, omega, per_stratum, seed)?;
    Ok(equivalence_from(model, &classes))
}

pub fn equivalence_from(model: &StratifiedModel, classes: &Classification) -> Equivalence {
    let n = model.dim();
    let left = classes.all_isotropic() && classes.all_coisotropic();
    let lagrangian_stratum = |j: usize| {
        let s = &model.strata()[j];
        2 * s.dim == n && classes.stratum(&s.name).is_some_and(|c| c.isotropic)
    };
    let right = (0..model.strata().len())
        .all(|i| lagrangian_stratum(i) || model.higher(i).into_iter().any(lagrangian_stratum));
    Equivalence { left, right, agree: left == right }
}

/// `Σ dx_i ∧ dy_i`, pairing the first half of the coordinates with the second.
pub fn standard_symplectic(chart: &Chart) -> Result<DifferentialForm> {
    let n = chart.dim();
    if n % 2 != 0 {
        return Err(Error::Dimension(format!("no symplectic form on R^{n}")));
    }
    let mut om = DifferentialForm::zero(chart, 2);
    for i in 0..n / 2 {
        om = om.add(&DifferentialForm::dx(chart, i).wedge(&DifferentialForm::dx(chart, i + n / 2))?)?;
    }
    Ok(om)
}

#[cfg(test)]
mod tests {
    use super::models::*;
    use super::*;

    fn standard_omega4() -> Mat {
        // (x1, x2, y1, y2) with ω = dx1∧dy1 + dx2∧dy2
        let mut m = Matrix::zeros(4, 4);
        m[(0, 2)] = 1.0;
        m[(2, 0)] = -1.0;
        m[(1, 3)] = 1.0;
        m[(3, 1)] = -1.0;
        m
    }

    #[test]
    fn complement_of_a_coordinate_line() {
        let w = LinearSubspace::coordinate(4, &[0]);
        let c = symplectic_complement(&w, &standard_omega4()).unwrap();
        assert_eq!(c.dim(), 3);
        assert!(c.contains_subspace(&LinearSubspace::coordinate(4, &[0, 1, 3]), 1e-12));
        let whole = symplectic_complement(&LinearSubspace::whole(4), &standard_omega4()).unwrap();
        assert_eq!(whole.dim(), 0);
    }

    #[test]
    fn degenerate_form_is_refused() {
        let w = LinearSubspace::coordinate(2, &[0]);
        assert!(symplectic_complement(&w, &Matrix::zeros(2, 2)).is_err());
    }

    #[test]
    fn zariski_tangents_of_line_pairs() {
        let m = transversal_lines();
        let t = zariski_tangent(&m, &[0.0, 0.0], "origin").unwrap();
        assert_eq!(t.dim(), 2);
        let t = zariski_tangent(&m, &[0.4, 0.0], "horizontal").unwrap();
        assert_eq!(t.dim(), 1);
        assert!(t.residual(&[1.0, 0.0]) < 1e-12);
        assert!(zariski_tangent(&m, &[0.4, 0.1], "horizontal").is_err());
    }

    #[test]
    fn zariski_tangent_at_cone_apex_is_everything() {
        let m = cone_over_circle();
        let t = zariski_tangent(&m, &[0.0, 0.0, 0.0], "apex").unwrap();
        assert_eq!(t.dim(), 3);
    }

    #[test]
    fn missing_chart_is_a_diagnostic() {
        let full = transversal_lines();
        let m = StratifiedModel::new("bare", full.ambient(), full.strata().to_vec(), &[("origin", "horizontal"), ("origin", "vertical")], vec![])
            .unwrap();
        assert!(matches!(zariski_tangent(&m, &[0.0, 0.0], "origin"), Err(Error::Diagnostic(_))));
    }

    #[test]
    fn conical_checks() {
        assert!(check_conical(&ray_chart(), 32, 1e-9, 1).unwrap());
        assert!(!check_conical(&shifted_line_chart(), 32, 1e-9, 1).unwrap());
        assert!(check_conical(&double_cone_chart(), 32, 1e-9, 1).unwrap());
    }

    #[test]
    fn bad_orders_are_rejected() {
        let c = Chart::new(&["x", "y"]);
        let o = Stratum::point("o", &c, &[0.0, 0.0]).unwrap();
        let q = Stratum::point("q", &c, &[1.0, 0.0]).unwrap();
        assert!(StratifiedModel::new("bad", &c, vec![o.clone(), q.clone()], &[("o", "q")], vec![]).is_err());
        let same = Stratum::point("p", &c, &[0.0, 0.0]).unwrap();
        assert!(StratifiedModel::new("overlap", &c, vec![o, same], &[], vec![]).is_err());
    }

    #[test]
    fn classification_examples() {
        let om = standard_symplectic(lagrangian_pair().ambient()).unwrap();
        let pair = classify(&lagrangian_pair(), &om, 8, 3).unwrap();
        assert!(pair.lagrangian, "{pair:?}");
        let line = classify(&isotropic_line(), &om, 8, 3).unwrap();
        assert!(line.all_isotropic() && !line.all_coisotropic() && !line.lagrangian);
        let graph = classify(&nonclosed_graph(), &om, 8, 3).unwrap();
        assert!(!graph.strata[0].isotropic);
    }

    #[test]
    fn equivalence_examples() {
        for model in symplectic_models() {
            let om = standard_symplectic(model.ambient()).unwrap();
            let eq = lagrangian_equivalence_check(&model, &om, 8, 5).unwrap();
            assert!(eq.agree, "{}: {eq:?}", model.name);
        }
        let m = plane_with_isolated_point();
        let eq = lagrangian_equivalence_check(&m, &standard_symplectic(m.ambient()).unwrap(), 8, 5).unwrap();
        assert_eq!(eq, Equivalence { left: false, right: false, agree: true });
    }
}
