//! Euler-like vector fields along `N = {y = 0}`, the induced scalar
//! multiplication `m^t`, concrete tubular inverses and normal bundles.

use std::collections::BTreeMap;

use crate::domain::{seeded_rng, Chart, DomainBox};
use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::forms::{SmoothMap, VectorField};
use crate::homotopy::{grid_for, vanishing_order_expr, FlatSubspace, OrderProbe, VanishingReport};
use crate::linalg::{self, Matrix};
use crate::moser::{flow, flow_with_differential, ExprField, DEFAULT_STEP};
use crate::strata::{check_conical, ConicalChart, LinearSubspace, StratifiedModel};
use crate::Mat;

/// Smallest `t` reached by flowing; smaller `t` are extrapolated.
pub const T_MIN: f64 = 1e-6;
/// Default FD step in `t` for derivatives at `t = 0`.
pub const FD_STEP: f64 = 1e-4;
/// Relative singular value threshold for `ker Dm^0`.
pub const KERNEL_TOL: f64 = 1e-7;

/// A vector field on `R^k × R^{n-k}` together with `N = {y = 0}`.
#[derive(Debug, Clone)]
pub struct EulerLikeCandidate {
    pub field: VectorField,
    /// Number of leading coordinates along `N`.
    pub k: usize,
    pub domain: DomainBox,
}

impl EulerLikeCandidate {
    pub fn new(field: VectorField, k: usize, domain: DomainBox) -> Result<Self> {
        let n = field.dim();
        if k > n || domain.dim() != n {
            return Err(Error::Dimension(format!("split {k} + {} on a {}-box", n.saturating_sub(k), domain.dim())));
        }
        let c = EulerLikeCandidate { field, k, domain };
        let on_n = c.domain.flatten(&c.normal_indices()).grid(grid_for(k, 512));
        for p in &on_n {
            let v = c.field.evaluate(&c.chart().binding(p))?;
            let r = v[k..].iter().fold(0.0f64, |m, x| m.max(x.abs()));
            if r > 1e-10 {
                return Err(Error::precondition("field is tangent to N", p, r));
            }
        }
        Ok(c)
    }

    /// `Σ y_i ∂y_i` on the chart.
    pub fn radial(chart: &Chart, k: usize, domain: DomainBox) -> Result<Self> {
        let comps = (0..chart.dim()).map(|i| if i < k { Expr::zero() } else { Expr::var(chart.name(i)) }).collect();
        Self::new(VectorField::new(chart, comps)?, k, domain)
    }

    pub fn chart(&self) -> &Chart {
        self.field.chart()
    }

    pub fn dim(&self) -> usize {
        self.field.dim()
    }

    pub fn normal_indices(&self) -> Vec<usize> {
        (self.k..self.dim()).collect()
    }

    pub fn submanifold(&self) -> FlatSubspace {
        FlatSubspace::new(self.dim(), &self.normal_indices()).expect("normal indices in range")
    }

    /// `y_i` and `y_i x_j`.
    pub fn default_probes(&self) -> Vec<Expr> {
        let c = self.chart();
        let mut out: Vec<Expr> = (self.k..self.dim()).map(|i| Expr::var(c.name(i))).collect();
        for i in self.k..self.dim() {
            for j in 0..self.k {
                out.push(Expr::var(c.name(i)) * Expr::var(c.name(j)));
            }
        }
        out
    }
}

#[derive(Debug, Clone)]
pub struct EulerReport {
    pub euler_like: bool,
    /// One report per probe `f`, for `f − E(f)`.
    pub probes: Vec<(String, VanishingReport)>,
}

impl EulerReport {
    pub fn min_exponent(&self) -> f64 {
        self.probes.iter().map(|(_, r)| r.min_exponent()).fold(f64::INFINITY, f64::min)
    }
}

/// `f − E(f)` vanishes to order 2 on `N` for every probe `f`.
pub fn is_euler_like(c: &EulerLikeCandidate, probes: Option<&[Expr]>, probe: &OrderProbe) -> Result<EulerReport> {
    let defaults;
    let probes = match probes {
        Some(p) => p,
        None => {
            defaults = c.default_probes();
            &defaults
        }
    };
    let n = c.submanifold();
    let on_n = c.domain.flatten(n.normal()).grid(grid_for(c.k, 256));
    let mut out = Vec::new();
    for f in probes {
        for p in &on_n {
            let v = f.evaluate(&c.chart().binding(p))?;
            if v.abs() > 1e-12 {
                return Err(Error::precondition(format!("probe {f} vanishes on N"), p, v.abs()));
            }
        }
        let g = f - &c.field.apply(f);
        out.push((f.to_string(), vanishing_order_expr(&g, c.chart(), &n, &c.domain, 2, probe)?));
    }
    Ok(EulerReport { euler_like: out.iter().all(|(_, r)| r.passed), probes: out })
}

/// `Σ w_i E_i` for weights summing to one.
pub fn convex_combine(fields: &[EulerLikeCandidate], weights: &[Expr]) -> Result<EulerLikeCandidate> {
    let first = fields.first().ok_or_else(|| Error::Diagnostic("no fields to combine".into()))?;
    if fields.len() != weights.len() {
        return Err(Error::Dimension(format!("{} fields and {} weights", fields.len(), weights.len())));
    }
    if fields.iter().any(|f| f.chart() != first.chart() || f.k != first.k) {
        return Err(Error::Dimension("fields on different charts or splits".into()));
    }
    let sum = weights.iter().fold(Expr::zero(), |a, w| a + w.clone());
    for p in first.domain.grid(grid_for(first.dim(), 1024)) {
        let s = sum.evaluate(&first.chart().binding(&p))?;
        if (s - 1.0).abs() > 1e-10 {
            return Err(Error::precondition("weights sum to 1", &p, (s - 1.0).abs()));
        }
    }
    for (i, f) in fields.iter().enumerate() {
        let rep = is_euler_like(f, None, &OrderProbe::default())?;
        if !rep.euler_like {
            return Err(Error::precondition(format!("field {i} is Euler-like"), &[], rep.min_exponent()));
        }
    }
    let mut acc = VectorField::zero(first.chart());
    for (f, w) in fields.iter().zip(weights) {
        acc = acc.add(&f.field.scale(w))?;
    }
    EulerLikeCandidate::new(acc, first.k, first.domain.clone())
}

/// `φ E` for `φ = 1` on `N` and on the collar `|y_i| ≤ collar`.
pub fn rescale(c: &EulerLikeCandidate, phi: &Expr, collar: f64) -> Result<EulerLikeCandidate> {
    let mut bx = c.domain.clone();
    for i in c.normal_indices() {
        bx.lo[i] = bx.lo[i].max(-collar);
        bx.hi[i] = bx.hi[i].min(collar);
    }
    for p in bx.grid(grid_for(c.dim(), 1024)) {
        let e = (phi.evaluate(&c.chart().binding(&p))? - 1.0).abs();
        if e > 1e-12 {
            return Err(Error::precondition("φ = 1 on the collar", &p, e));
        }
    }
    EulerLikeCandidate::new(c.field.scale(phi), c.k, c.domain.clone())
}

fn not_tubular(q: &[f64], e: Error) -> Error {
    match e {
        Error::Escape { time, point } => Error::NotInTubularImage {
            point: q.to_vec(),
            reason: format!("backward flow left the box at log t = {time:.4} near {point:?}"),
        },
        other => other,
    }
}

/// Scalar multiplication `m^t = Φ^{log t}` and its differential.
pub struct Multiplication {
    field: ExprField,
    domain: DomainBox,
    step: f64,
}

impl Multiplication {
    pub fn new(c: &EulerLikeCandidate, step: f64) -> Result<Self> {
        Ok(Multiplication { field: ExprField::new(&c.field)?, domain: c.domain.clone(), step })
    }

    fn raw(&self, q: &[f64], t: f64) -> Result<Vec<f64>> {
        flow(&self.field, q, 0.0, t.ln(), self.step, &self.domain).map_err(|e| not_tubular(q, e))
    }

    fn raw_diff(&self, q: &[f64], t: f64) -> Result<(Vec<f64>, Mat)> {
        flow_with_differential(&self.field, q, 0.0, t.ln(), self.step, &self.domain).map_err(|e| not_tubular(q, e))
    }

    /// `m^t(q)`; below `T_MIN` linearly extrapolated from `T_MIN` and `2 T_MIN`.
    pub fn apply(&self, q: &[f64], t: f64) -> Result<Vec<f64>> {
        if t < 0.0 {
            return Err(Error::precondition("t ≥ 0", q, t));
        }
        if t >= T_MIN {
            return self.raw(q, t);
        }
        let a = self.raw(q, T_MIN)?;
        let b = self.raw(q, 2.0 * T_MIN)?;
        let s = (t - T_MIN) / T_MIN;
        Ok(a.iter().zip(&b).map(|(a, b)| a + s * (b - a)).collect())
    }

    /// `(m^t(q), Dm^t(q))` with the same extrapolation.
    pub fn apply_with_differential(&self, q: &[f64], t: f64) -> Result<(Vec<f64>, Mat)> {
        if t < 0.0 {
            return Err(Error::precondition("t ≥ 0", q, t));
        }
        if t >= T_MIN {
            return self.raw_diff(q, t);
        }
        let (a, ma) = self.raw_diff(q, T_MIN)?;
        let (b, mb) = self.raw_diff(q, 2.0 * T_MIN)?;
        let s = (t - T_MIN) / T_MIN;
        let p = a.iter().zip(&b).map(|(a, b)| a + s * (b - a)).collect();
        Ok((p, ma.add(&mb.sub(&ma).scale(s))))
    }
}

pub fn scaled_multiplication(c: &EulerLikeCandidate, q: &[f64], t: f64, h: f64) -> Result<Vec<f64>> {
    Multiplication::new(c, h)?.apply(q, t)
}

/// A tangent vector `v` at `base`.
#[derive(Debug, Clone, PartialEq)]
pub struct TangentVector {
    pub base: Vec<f64>,
    pub vector: Vec<f64>,
}

/// One-sided second-order difference `(4 f(h) − 3 f(0) − f(2h)) / 2h`.
fn one_sided(f0: &[f64], fh: &[f64], f2h: &[f64], h: f64) -> Vec<f64> {
    (0..f0.len()).map(|i| (4.0 * fh[i] - 3.0 * f0[i] - f2h[i]) / (2.0 * h)).collect()
}

/// `ψ^{-1}(q) = d/dt|_0 m^t(q)`, based at `m^0(q)`.
pub fn concrete_tubular_inverse(c: &EulerLikeCandidate, q: &[f64], h: f64) -> Result<TangentVector> {
    let m = Multiplication::new(c, DEFAULT_STEP)?;
    tubular_inverse_with(&m, q, h)
}

fn tubular_inverse_with(m: &Multiplication, q: &[f64], h: f64) -> Result<TangentVector> {
    let f0 = m.apply(q, 0.0)?;
    let fh = m.apply(q, h)?;
    let f2h = m.apply(q, 2.0 * h)?;
    let vector = one_sided(&f0, &fh, &f2h, h);
    Ok(TangentVector { base: f0, vector })
}

/// Point of the second tangent bundle in coordinates `(x, v; u, w)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TangentTangentVector {
    pub x: Vec<f64>,
    pub v: Vec<f64>,
    pub u: Vec<f64>,
    pub w: Vec<f64>,
}

impl TangentTangentVector {
    pub fn new(x: Vec<f64>, v: Vec<f64>, u: Vec<f64>, w: Vec<f64>) -> Result<Self> {
        let n = x.len();
        if v.len() != n || u.len() != n || w.len() != n {
            return Err(Error::Dimension("TT blocks of unequal length".into()));
        }
        Ok(TangentTangentVector { x, v, u, w })
    }

    /// `(x, v, u, w)` concatenated.
    pub fn flatten(&self) -> Vec<f64> {
        [&self.x, &self.v, &self.u, &self.w].into_iter().flatten().copied().collect()
    }

    pub fn max_diff(&self, other: &Self) -> f64 {
        self.flatten().iter().zip(other.flatten()).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()))
    }
}

/// `κ(x, v; u, w) = (x, u; v, w)`.
pub fn canonical_flip(tt: &TangentTangentVector) -> TangentTangentVector {
    TangentTangentVector { x: tt.x.clone(), v: tt.u.clone(), u: tt.v.clone(), w: tt.w.clone() }
}

/// `D(Df)` on the second tangent bundle:
/// `(x, v; u, w) ↦ (f, Df v; Df u, D²f[u, v] + Df w)`.
#[derive(Debug, Clone)]
pub struct SecondDifferential {
    map: SmoothMap,
    jacobian: Vec<Vec<Expr>>,
    hessian: Vec<Vec<Vec<Expr>>>,
}

impl SecondDifferential {
    pub fn new(map: &SmoothMap) -> Self {
        let names = map.source().names().to_vec();
        let jacobian = map.jacobian_exprs();
        let hessian = map
            .components()
            .iter()
            .map(|c| {
                names
                    .iter()
                    .map(|a| {
                        let da = c.differentiate(a);
                        names.iter().map(|b| da.differentiate(b)).collect()
                    })
                    .collect()
            })
            .collect();
        SecondDifferential { map: map.clone(), jacobian, hessian }
    }

    pub fn apply(&self, tt: &TangentTangentVector) -> Result<TangentTangentVector> {
        let b = self.map.source().binding(&tt.x);
        let fx = self.map.evaluate(&b)?;
        let j: Vec<Vec<f64>> =
            self.jacobian.iter().map(|r| r.iter().map(|e| e.evaluate(&b)).collect::<Result<_, _>>()).collect::<Result<_, _>>()?;
        let jm = Matrix::from_rows(&j);
        let mut w = jm.mul_vec(&tt.w);
        for (i, h) in self.hessian.iter().enumerate() {
            for (a, row) in h.iter().enumerate() {
                for (bi, e) in row.iter().enumerate() {
                    w[i] += e.evaluate(&b)? * tt.u[a] * tt.v[bi];
                }
            }
        }
        TangentTangentVector::new(fx, jm.mul_vec(&tt.v), jm.mul_vec(&tt.u), w)
    }
}

pub fn second_differential(f: &SmoothMap, tt: &TangentTangentVector) -> Result<TangentTangentVector> {
    SecondDifferential::new(f).apply(tt)
}

/// `Dψ^{-1}(v) = κ(d/dt|_0 (m^t(q), Dm^t(q) v))`, with the same one-sided
/// difference in `t` applied to the variational matrices.
pub fn concrete_tubular_inverse_differential(
    c: &EulerLikeCandidate,
    q: &[f64],
    v: &[f64],
    h: f64,
) -> Result<TangentTangentVector> {
    if v.len() != c.dim() || q.len() != c.dim() {
        return Err(Error::Dimension("point or vector of the wrong length".into()));
    }
    let m = Multiplication::new(c, DEFAULT_STEP)?;
    let (p0, m0) = m.apply_with_differential(q, 0.0)?;
    let (ph, mh) = m.apply_with_differential(q, h)?;
    let (p2h, m2h) = m.apply_with_differential(q, 2.0 * h)?;
    let (v0, vh, v2h) = (m0.mul_vec(v), mh.mul_vec(v), m2h.mul_vec(v));
    let curve = TangentTangentVector::new(p0.clone(), v0, one_sided(&p0, &ph, &p2h, h), one_sided(&m0.mul_vec(v), &vh, &v2h, h))?;
    Ok(canonical_flip(&curve))
}

/// Central-difference differential of `ψ^{-1}` as a map into `TM`, used to
/// cross-check [`concrete_tubular_inverse_differential`].
pub fn tubular_inverse_fd_differential(
    c: &EulerLikeCandidate,
    q: &[f64],
    v: &[f64],
    h: f64,
    delta: f64,
) -> Result<TangentTangentVector> {
    let m = Multiplication::new(c, DEFAULT_STEP)?;
    let at = tubular_inverse_with(&m, q, h)?;
    let shift = |s: f64| -> Vec<f64> { q.iter().zip(v).map(|(a, b)| a + s * b).collect() };
    let plus = tubular_inverse_with(&m, &shift(delta), h)?;
    let minus = tubular_inverse_with(&m, &shift(-delta), h)?;
    let d = |a: &[f64], b: &[f64]| -> Vec<f64> { a.iter().zip(b).map(|(x, y)| (x - y) / (2.0 * delta)).collect() };
    TangentTangentVector::new(at.base, at.vector, d(&plus.base, &minus.base), d(&plus.vector, &minus.vector))
}

/// `ν_E = ker Dm^0` at a point of `N`, with `Dm^0` extrapolated from
/// `T_MIN` and `2 T_MIN`.
pub fn concrete_normal_bundle(c: &EulerLikeCandidate, p: &[f64], step: f64) -> Result<LinearSubspace> {
    let n = c.dim();
    let nsub = c.submanifold();
    let r = nsub.residual(p);
    if r > 1e-12 {
        return Err(Error::precondition("p lies on N", p, r));
    }
    let m = Multiplication::new(c, step)?;
    let (_, dm0) = m.apply_with_differential(p, 0.0)?;
    let kernel = linalg::null_space(&dm0, KERNEL_TOL);
    let nu = LinearSubspace::span(n, &kernel)?;
    if nu.dim() != n - c.k {
        return Err(Error::Diagnostic(format!("ker Dm^0 at {p:?} has dimension {}, expected {}", nu.dim(), n - c.k)));
    }
    let tn = LinearSubspace::coordinate(n, &(0..c.k).collect::<Vec<_>>());
    if !nu.is_complementary_to(&tn) {
        return Err(Error::Diagnostic(format!("ker Dm^0 at {p:?} is not transverse to N")));
    }
    Ok(nu)
}

/// `(θ^{-1})_*(Σ y_i ∂y_i)` for a conical chart whose stratum is the flat
/// subspace `{y = 0}` of the ambient coordinates.
pub fn conical_radial_field(model: &StratifiedModel, chart: &ConicalChart) -> Result<EulerLikeCandidate> {
    if !check_conical(chart, 32, 1e-9, 0xC0)? {
        return Err(Error::precondition("conical chart", &chart.center, f64::NAN));
    }
    let ambient = chart.ambient();
    let cc = chart.chart();
    let n = ambient.dim();
    let k = chart.k;
    let mut rng = seeded_rng(0xF1A7);
    for _ in 0..32 {
        let mut u = chart.base_box()?.sample(&mut rng);
        u.resize(n, 0.0);
        let p = chart.theta_inv.apply(&u)?;
        let r = p[k..].iter().fold(0.0f64, |m, x| m.max(x.abs()));
        if r > 1e-9 {
            return Err(Error::Unsupported("conical chart whose stratum is not {y = 0} in ambient coordinates".into()));
        }
    }
    let theta: BTreeMap<String, Expr> =
        cc.names().iter().cloned().zip(chart.theta.components().iter().cloned()).collect();
    let jac = chart.theta_inv.jacobian_exprs();
    let comps = (0..n)
        .map(|i| {
            let e = (k..n).fold(Expr::zero(), |acc, j| acc + &jac[i][j] * &Expr::var(cc.name(j)));
            e.substitute(&theta)
        })
        .collect();
    let field = VectorField::new(ambient, comps)?;
    let cand = EulerLikeCandidate::new(field, k, chart.ambient_box())?;
    let (res, at) = higher_strata_tangency(model, chart, &cand, 32, 0x7A)?;
    if res > 1e-8 {
        return Err(Error::Diagnostic(format!("pushed radial field leaves a higher stratum at {at:?} ({res:.3e})")));
    }
    Ok(cand)
}

/// Worst distance of the field from the tangent spaces of the strata above
/// the chart's stratum, at samples inside the chart box.
pub fn higher_strata_tangency(
    model: &StratifiedModel,
    chart: &ConicalChart,
    cand: &EulerLikeCandidate,
    samples: usize,
    seed: u64,
) -> Result<(f64, Vec<f64>)> {
    let (i, _) = model.stratum(&chart.stratum).ok_or_else(|| Error::Model(format!("unknown stratum `{}`", chart.stratum)))?;
    let bx = chart.ambient_box();
    let mut rng = seeded_rng(seed);
    let mut worst = (0.0f64, chart.center.clone());
    for j in model.higher(i) {
        let s = &model.strata()[j];
        for (param, p) in s.sample(&mut rng, samples)? {
            if !bx.contains(&p) {
                continue;
            }
            let t = s.tangent_at_param(&param)?;
            let e = cand.field.evaluate(&model.ambient().binding(&p))?;
            let r = t.residual(&e);
            if r > worst.0 {
                worst = (r, p);
            }
        }
    }
    Ok(worst)
}
