//! Moser's trick: interpolation, the pointwise Moser field, flows with
//! their first variation, and pullback verification.

use std::sync::Arc;

use crate::domain::{seeded_rng, Chart, DomainBox};
use crate::error::{Error, Result};
use crate::expr::{CompiledExpr, Expr, TIME};
use crate::forms::{DifferentialForm, VectorField};
use crate::homotopy::{grid_for, primitive_vanishing_on_b, Retraction, DEFAULT_QUADRATURE};
use crate::linalg::{Lu, Matrix};
use crate::ode::rk4;
use crate::Mat;

pub const DEFAULT_STEP: f64 = 1e-3;
/// Condition numbers above this make `ω_t` degenerate.
pub const MAX_CONDITION: f64 = 1e8;

/// Two symplectic forms on a common chart box.
#[derive(Debug, Clone)]
pub struct SymplecticPair {
    pub omega0: DifferentialForm,
    pub omega1: DifferentialForm,
    pub domain: DomainBox,
    /// Worst 1-norm condition numbers of `Ω0` and `Ω1` on the check grid.
    pub condition: (f64, f64),
}

impl SymplecticPair {
    pub fn new(omega0: DifferentialForm, omega1: DifferentialForm, domain: DomainBox) -> Result<Self> {
        if omega0.degree() != 2 || omega1.degree() != 2 {
            return Err(Error::Degree("a symplectic pair needs 2-forms".into()));
        }
        if omega0.chart() != omega1.chart() {
            return Err(Error::Dimension("forms live on different charts".into()));
        }
        let n = omega0.dim();
        if n % 2 != 0 || domain.dim() != n {
            return Err(Error::Dimension(format!("symplectic pair on R^{n} with a {}-box", domain.dim())));
        }
        let pts = domain.grid(grid_for(n, 2048));
        let mut condition = [0.0f64; 2];
        for (k, om) in [&omega0, &omega1].into_iter().enumerate() {
            let (res, at) = om.exterior_derivative().max_abs_over(&pts, None)?;
            if res > 1e-9 {
                return Err(Error::precondition(format!("dω{k} = 0"), &at, res));
            }
            for p in &pts {
                let m = om.coefficient_matrix(&om.chart().binding(p))?;
                let c = cond(&m);
                if !(c <= MAX_CONDITION) {
                    return Err(Error::Degenerate { t: k as f64, point: p.clone(), cond: c });
                }
                condition[k] = condition[k].max(c);
            }
        }
        Ok(SymplecticPair { omega0, omega1, domain, condition: (condition[0], condition[1]) })
    }

    pub fn chart(&self) -> &Chart {
        self.omega0.chart()
    }

    /// `ω_t = (1 − t) ω0 + t ω1`; the endpoints are returned unchanged.
    pub fn interpolate(&self, t: f64) -> Result<DifferentialForm> {
        if !(0.0..=1.0).contains(&t) {
            return Err(Error::precondition("0 ≤ t ≤ 1", &[t], t));
        }
        if t == 0.0 {
            return Ok(self.omega0.clone());
        }
        if t == 1.0 {
            return Ok(self.omega1.clone());
        }
        self.omega0.scale(&Expr::constant(1.0 - t)).add(&self.omega1.scale(&Expr::constant(t)))
    }

    /// `ω_t` with `t` left as a free symbol.
    pub fn interpolate_symbolic(&self) -> Result<DifferentialForm> {
        self.omega0.add(&self.omega1.sub(&self.omega0)?.scale(&Expr::var(TIME)))
    }
}

fn cond(m: &Mat) -> f64 {
    match Lu::factor(m) {
        Ok(lu) => m.norm1() * lu.inverse().norm1(),
        Err(_) => f64::INFINITY,
    }
}

/// A time-dependent vector field with a Jacobian in the space variables.
pub trait TimeDependentField: Send + Sync {
    fn dim(&self) -> usize;
    fn value(&self, t: f64, p: &[f64]) -> Result<Vec<f64>>;
    fn value_and_jacobian(&self, t: f64, p: &[f64]) -> Result<(Vec<f64>, Mat)>;
}

fn slots(chart: &Chart) -> Vec<String> {
    let mut v = vec![TIME.to_string()];
    v.extend(chart.names().iter().cloned());
    v
}

fn compile(e: &Expr, names: &[String]) -> Result<CompiledExpr> {
    let refs: Vec<&str> = names.iter().map(String::as_str).collect();
    Ok(e.compile(&refs)?)
}

fn slot_values(t: f64, p: &[f64]) -> Vec<f64> {
    let mut s = Vec::with_capacity(p.len() + 1);
    s.push(t);
    s.extend_from_slice(p);
    s
}

/// A symbolic vector field whose components may mention `t`.
#[derive(Debug, Clone)]
pub struct ExprField {
    components: Vec<CompiledExpr>,
    jacobian: Vec<Vec<CompiledExpr>>,
}

impl ExprField {
    pub fn new(field: &VectorField) -> Result<Self> {
        let names = slots(field.chart());
        let components = field.components().iter().map(|c| compile(c, &names)).collect::<Result<_>>()?;
        let jacobian = field
            .jacobian_exprs()
            .iter()
            .map(|row| row.iter().map(|c| compile(c, &names)).collect::<Result<_>>())
            .collect::<Result<_>>()?;
        Ok(ExprField { components, jacobian })
    }
}

impl TimeDependentField for ExprField {
    fn dim(&self) -> usize {
        self.components.len()
    }

    fn value(&self, t: f64, p: &[f64]) -> Result<Vec<f64>> {
        let s = slot_values(t, p);
        Ok(self.components.iter().map(|c| c.eval(&s)).collect::<Result<_, _>>()?)
    }

    fn value_and_jacobian(&self, t: f64, p: &[f64]) -> Result<(Vec<f64>, Mat)> {
        let s = slot_values(t, p);
        let v = self.components.iter().map(|c| c.eval(&s)).collect::<Result<_, _>>()?;
        let rows: Vec<Vec<f64>> =
            self.jacobian.iter().map(|r| r.iter().map(|c| c.eval(&s)).collect::<Result<_, _>>()).collect::<Result<_, _>>()?;
        Ok((v, Matrix::from_rows(&rows)))
    }
}

/// Solution of `ι_X ω_t = β`, written as `Ω_t X = −β` for the matrix
/// `Ω_ij = ω(∂_i, ∂_j)`, solved pointwise on demand.
pub struct MoserField {
    n: usize,
    /// `(i, j, coefficient, ∂_k coefficient)` for each term `i < j` of `ω_t`.
    omega: Vec<(usize, usize, CompiledExpr, Vec<CompiledExpr>)>,
    beta: Vec<(CompiledExpr, Vec<CompiledExpr>)>,
    pub beta_form: DifferentialForm,
}

impl std::fmt::Debug for MoserField {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "MoserField({})", self.beta_form)
    }
}

impl MoserField {
    pub fn new(pair: &SymplecticPair, beta: &DifferentialForm) -> Result<Self> {
        if beta.degree() != 1 || beta.chart() != pair.chart() {
            return Err(Error::Degree("the Moser field needs a 1-form on the pair's chart".into()));
        }
        let chart = pair.chart();
        let names = slots(chart);
        let omega_t = pair.interpolate_symbolic()?;
        let diff = |c: &Expr| -> Result<Vec<CompiledExpr>> {
            chart.names().iter().map(|v| compile(&c.differentiate(v), &names)).collect()
        };
        let omega = omega_t
            .terms()
            .map(|(idx, c)| Ok((idx.indices()[0], idx.indices()[1], compile(c, &names)?, diff(c)?)))
            .collect::<Result<_>>()?;
        let beta_c = (0..chart.dim())
            .map(|i| {
                let c = beta.coefficient(&[i]);
                Ok((compile(&c, &names)?, diff(&c)?))
            })
            .collect::<Result<_>>()?;
        Ok(MoserField { n: chart.dim(), omega, beta: beta_c, beta_form: beta.clone() })
    }

    /// `Ω_t(p)` as a matrix.
    pub fn omega_matrix(&self, t: f64, p: &[f64]) -> Result<Mat> {
        let s = slot_values(t, p);
        let mut m = Matrix::zeros(self.n, self.n);
        for (i, j, c, _) in &self.omega {
            let v = c.eval(&s)?;
            m[(*i, *j)] = v;
            m[(*j, *i)] = -v;
        }
        Ok(m)
    }

    fn factor(&self, t: f64, p: &[f64], m: &Mat) -> Result<Lu<f64>> {
        let degenerate = |c| Error::Degenerate { t, point: p.to_vec(), cond: c };
        let lu = Lu::factor(m).map_err(|_| degenerate(f64::INFINITY))?;
        let c = m.norm1() * lu.inverse().norm1();
        if !(c <= MAX_CONDITION) {
            return Err(degenerate(c));
        }
        Ok(lu)
    }

    /// `|Ω_t X + β|` at a point, the residual of the contraction identity.
    pub fn contraction_residual(&self, t: f64, p: &[f64]) -> Result<f64> {
        let x = self.value(t, p)?;
        let m = self.omega_matrix(t, p)?;
        let s = slot_values(t, p);
        let mx = m.mul_vec(&x);
        let mut worst = 0.0f64;
        for (i, (b, _)) in self.beta.iter().enumerate() {
            worst = worst.max((mx[i] + b.eval(&s)?).abs());
        }
        Ok(worst)
    }
}

impl TimeDependentField for MoserField {
    fn dim(&self) -> usize {
        self.n
    }

    fn value(&self, t: f64, p: &[f64]) -> Result<Vec<f64>> {
        let m = self.omega_matrix(t, p)?;
        let lu = self.factor(t, p, &m)?;
        let s = slot_values(t, p);
        let rhs: Vec<f64> = self.beta.iter().map(|(b, _)| Ok(-b.eval(&s)?)).collect::<Result<_>>()?;
        Ok(lu.solve(&rhs))
    }

    /// `∂_k X = Ω^{-1}(−∂_k β − (∂_k Ω) X)`.
    fn value_and_jacobian(&self, t: f64, p: &[f64]) -> Result<(Vec<f64>, Mat)> {
        let m = self.omega_matrix(t, p)?;
        let lu = self.factor(t, p, &m)?;
        let s = slot_values(t, p);
        let rhs: Vec<f64> = self.beta.iter().map(|(b, _)| Ok(-b.eval(&s)?)).collect::<Result<_>>()?;
        let x = lu.solve(&rhs);
        let mut jac = Matrix::zeros(self.n, self.n);
        for k in 0..self.n {
            let mut r: Vec<f64> = self.beta.iter().map(|(_, db)| Ok(-db[k].eval(&s)?)).collect::<Result<_>>()?;
            for (i, j, _, dc) in &self.omega {
                let d = dc[k].eval(&s)?;
                r[*i] -= d * x[*j];
                r[*j] += d * x[*i];
            }
            for (i, v) in lu.solve(&r).into_iter().enumerate() {
                jac[(i, k)] = v;
            }
        }
        Ok((x, jac))
    }
}

fn escape_check(domain: &DomainBox) -> impl Fn(f64, &[f64]) -> Result<()> + '_ {
    move |t, y: &[f64]| {
        let x = &y[..domain.dim()];
        if domain.contains(x) {
            Ok(())
        } else {
            Err(Error::Escape { time: t, point: x.to_vec() })
        }
    }
}

/// RK4 flow of `X` from `t0` to `t1`, refusing to leave `domain`.
pub fn flow(x: &dyn TimeDependentField, p: &[f64], t0: f64, t1: f64, h: f64, domain: &DomainBox) -> Result<Vec<f64>> {
    if !domain.contains(p) {
        return Err(Error::Escape { time: t0, point: p.to_vec() });
    }
    rk4(
        |t, y: &[f64], dy: &mut [f64]| {
            dy.copy_from_slice(&x.value(t, y)?);
            Ok(())
        },
        t0,
        t1,
        p,
        h,
        escape_check(domain),
    )
}

/// Flow together with its differential from the first-variation equation
/// `M' = J_X(t, x(t)) M`, `M(t0) = Id`.
pub fn flow_with_differential(
    x: &dyn TimeDependentField,
    p: &[f64],
    t0: f64,
    t1: f64,
    h: f64,
    domain: &DomainBox,
) -> Result<(Vec<f64>, Mat)> {
    let n = p.len();
    if !domain.contains(p) {
        return Err(Error::Escape { time: t0, point: p.to_vec() });
    }
    let mut y0 = p.to_vec();
    y0.extend_from_slice(Matrix::<f64>::identity(n).as_slice());
    let y = rk4(
        |t, y: &[f64], dy: &mut [f64]| {
            let (v, j) = x.value_and_jacobian(t, &y[..n])?;
            dy[..n].copy_from_slice(&v);
            for r in 0..n {
                for c in 0..n {
                    dy[n + r * n + c] = (0..n).map(|k| j[(r, k)] * y[n + k * n + c]).sum();
                }
            }
            Ok(())
        },
        t0,
        t1,
        &y0,
        h,
        escape_check(domain),
    )?;
    let m = Matrix::from_fn(n, n, |r, c| y[n + r * n + c]);
    Ok((y[..n].to_vec(), m))
}

/// The time-`t1` flow map of a field started at `t0`.
#[derive(Clone)]
pub struct FlowMap {
    pub field: Arc<dyn TimeDependentField>,
    pub domain: DomainBox,
    pub step: f64,
    pub t0: f64,
    pub t1: f64,
}

impl std::fmt::Debug for FlowMap {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "FlowMap(t {} -> {}, h = {})", self.t0, self.t1, self.step)
    }
}

impl FlowMap {
    pub fn apply(&self, p: &[f64]) -> Result<Vec<f64>> {
        flow(self.field.as_ref(), p, self.t0, self.t1, self.step, &self.domain)
    }

    pub fn apply_with_differential(&self, p: &[f64]) -> Result<(Vec<f64>, Mat)> {
        flow_with_differential(self.field.as_ref(), p, self.t0, self.t1, self.step, &self.domain)
    }

    pub fn until(&self, t1: f64) -> FlowMap {
        FlowMap { t1, ..self.clone() }
    }
}

#[derive(Debug, Clone)]
pub struct MoserOptions {
    pub step: f64,
    pub quadrature: usize,
    /// Verification grid resolution per axis.
    pub grid: usize,
    /// Verification box; defaults to the pair's domain.
    pub grid_box: Option<DomainBox>,
    /// Samples of `B` checked for being fixed.
    pub b_samples: usize,
    pub seed: u64,
}

impl Default for MoserOptions {
    fn default() -> Self {
        MoserOptions { step: DEFAULT_STEP, quadrature: DEFAULT_QUADRATURE, grid: 20, grid_box: None, b_samples: 16, seed: 42 }
    }
}

#[derive(Debug, Clone)]
pub struct MoserReport {
    pub beta: DifferentialForm,
    /// Worst `|G(b) − b|` over samples of `B`.
    pub b_fixed: (f64, Vec<f64>),
    /// Worst entry of `Mᵀ Ω1(G(p)) M − Ω0(p)` over the grid.
    pub pullback: (f64, Vec<f64>),
}

/// `Mᵀ Ω1(G(p)) M − Ω0(p)` at one point.
pub fn pullback_residual(pair: &SymplecticPair, g: &FlowMap, p: &[f64]) -> Result<f64> {
    let (q, m) = g.apply_with_differential(p)?;
    let chart = pair.chart();
    let o1 = pair.omega1.coefficient_matrix(&chart.binding(&q))?;
    let o0 = pair.omega0.coefficient_matrix(&chart.binding(p))?;
    Ok(m.transpose().matmul(&o1).matmul(&m).sub(&o0).max_abs())
}

/// Builds `G = Φ^1` for the Moser field of a primitive of `ω0 − ω1`
/// vanishing along `B`, and verifies `G|_B = id` and `G^*ω1 = ω0`.
pub fn moser_trick(pair: &SymplecticPair, r: &Retraction, opts: &MoserOptions) -> Result<(FlowMap, MoserReport)> {
    if r.chart() != pair.chart() {
        return Err(Error::Dimension("retraction and forms live on different charts".into()));
    }
    let beta = primitive_vanishing_on_b(&pair.omega0, &pair.omega1, r, opts.quadrature)?;
    let field = MoserField::new(pair, &beta)?;
    let g = FlowMap { field: Arc::new(field), domain: pair.domain.clone(), step: opts.step, t0: 0.0, t1: 1.0 };
    let grid_box = opts.grid_box.clone().unwrap_or_else(|| pair.domain.clone());
    let mut rng = seeded_rng(opts.seed);
    let mut b_fixed = (0.0f64, Vec::new());
    for b in r.b_or_a().samples(&grid_box, &mut rng, opts.b_samples)? {
        let q = g.apply(&b)?;
        let e = q.iter().zip(&b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
        if e >= b_fixed.0 {
            b_fixed = (e, b);
        }
    }
    let mut pullback = (0.0f64, Vec::new());
    for p in grid_box.grid(opts.grid) {
        let e = pullback_residual(pair, &g, &p)?;
        if !(e < pullback.0) {
            pullback = (e, p);
        }
    }
    Ok((g, MoserReport { beta, b_fixed, pullback }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse_expr;
    use crate::homotopy::{relative_primitive, FlatSubspace, Subset};

    fn xy() -> Chart {
        Chart::new(&["x", "y"])
    }

    fn form2(c: &str) -> DifferentialForm {
        let e = parse_expr(c, &["x", "y"]).unwrap();
        DifferentialForm::from_terms(&xy(), 2, [(vec![0, 1], e)]).unwrap()
    }

    fn example() -> SymplecticPair {
        SymplecticPair::new(form2("1"), form2("1 + y"), DomainBox::new(vec![-1.5, -0.5], vec![1.5, 0.5])).unwrap()
    }

    fn example_field() -> MoserField {
        let pair = example();
        let a = FlatSubspace::named(&xy(), &["y"]).unwrap();
        let r = Retraction::radial(&xy(), pair.domain.clone(), Subset::Flat(a)).unwrap();
        let beta = relative_primitive(&pair.omega0.sub(&pair.omega1).unwrap(), &r, 8).unwrap();
        MoserField::new(&pair, &beta).unwrap()
    }

    #[test]
    fn interpolation_endpoints() {
        let p = example();
        assert_eq!(p.interpolate(0.0).unwrap(), p.omega0);
        assert_eq!(p.interpolate(1.0).unwrap(), p.omega1);
        let mid = p.interpolate(0.25).unwrap();
        let v = mid.coefficient(&[0, 1]).evaluate(&xy().binding(&[0.3, 0.4])).unwrap();
        assert!((v - 1.1).abs() < 1e-15);
    }

    #[test]
    fn degenerate_pair_is_rejected() {
        let err = SymplecticPair::new(form2("1"), form2("y"), DomainBox::cube(2, 1.0)).unwrap_err();
        assert!(matches!(err, Error::Degenerate { .. }));
    }

    #[test]
    fn example_field_matches_closed_form() {
        let f = example_field();
        for &(t, x, y) in &[(0.0, 0.5, 0.2), (0.7, -0.4, -0.3), (1.0, 0.9, 0.1)] {
            let v = f.value(t, &[x, y]).unwrap();
            let s = -y / (3.0 * (1.0 + t * y));
            assert!((v[0] - s * x).abs() < 1e-12 && (v[1] - s * y).abs() < 1e-12, "{v:?}");
            assert!(f.contraction_residual(t, &[x, y]).unwrap() < 1e-12);
        }
    }

    #[test]
    fn moser_jacobian_matches_differences() {
        let f = example_field();
        let p = [0.4, 0.25];
        let (_, j) = f.value_and_jacobian(0.6, &p).unwrap();
        let h = 1e-6;
        for k in 0..2 {
            let mut a = p;
            let mut b = p;
            a[k] += h;
            b[k] -= h;
            let (va, vb) = (f.value(0.6, &a).unwrap(), f.value(0.6, &b).unwrap());
            for i in 0..2 {
                assert!((j[(i, k)] - (va[i] - vb[i]) / (2.0 * h)).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn exponential_flow_and_escape() {
        let c = Chart::new(&["x"]);
        let f = ExprField::new(&VectorField::new(&c, vec![Expr::var("x")]).unwrap()).unwrap();
        let bx = DomainBox::cube(1, 10.0);
        let q = flow(&f, &[1.0], 0.0, 1.0, 1e-3, &bx).unwrap();
        assert!((q[0] - std::f64::consts::E).abs() < 1e-11);
        let (_, m) = flow_with_differential(&f, &[1.0], 0.0, 1.0, 1e-3, &bx).unwrap();
        assert!((m[(0, 0)] - std::f64::consts::E).abs() < 1e-11);
        let err = flow(&f, &[1.0], 0.0, 3.0, 1e-3, &DomainBox::cube(1, 5.0)).unwrap_err();
        assert!(matches!(err, Error::Escape { time, .. } if (time - 5f64.ln()).abs() < 2e-3));
    }

    #[test]
    fn weak_example_differential() {
        let f = example_field();
        let bx = example().domain;
        for x in [0.3, 0.6, 0.9] {
            let (q, m) = flow_with_differential(&f, &[x, 0.0], 0.0, 1.0, 1e-3, &bx).unwrap();
            assert_eq!(q, vec![x, 0.0]);
            assert!((m[(0, 1)] + x / 3.0).abs() < 1e-9, "{m:?}");
            assert!((m[(0, 0)] - 1.0).abs() < 1e-12 && (m[(1, 1)] - 1.0).abs() < 1e-12 && m[(1, 0)].abs() < 1e-12);
        }
    }

    #[test]
    fn identical_forms_give_identity() {
        let pair = SymplecticPair::new(form2("1"), form2("1"), DomainBox::cube(2, 1.0)).unwrap();
        let r = Retraction::flat(&xy(), pair.domain.clone(), FlatSubspace::named(&xy(), &["y"]).unwrap()).unwrap();
        let opts = MoserOptions { grid: 4, ..Default::default() };
        let (g, rep) = moser_trick(&pair, &r, &opts).unwrap();
        assert_eq!(rep.pullback.0, 0.0);
        assert_eq!(g.apply(&[0.3, 0.2]).unwrap(), vec![0.3, 0.2]);
    }
}
