//! Exterior calculus on a single coordinate chart with symbolic
//! coefficients: forms, vector fields and smooth maps.
//!
//! Time-dependence is carried by the variable `t` appearing in coefficients;
//! `d` differentiates only along chart coordinates.

use std::collections::BTreeMap;
use std::fmt;

use crate::domain::Chart;
use crate::error::{Error, Result};
use crate::expr::{Binding, Expr, ExprError};
use crate::linalg::Matrix;

/// Strictly increasing list of coordinate positions.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct MultiIndex(Vec<usize>);

impl MultiIndex {
    pub fn empty() -> Self {
        MultiIndex(Vec::new())
    }

    /// Sorts `idx`, returning the permutation sign, or `None` on repeats.
    pub fn sorted(idx: &[usize]) -> Option<(MultiIndex, f64)> {
        let mut v = idx.to_vec();
        let mut sign = 1.0;
        for i in 0..v.len() {
            for j in 0..v.len() - 1 - i {
                if v[j] > v[j + 1] {
                    v.swap(j, j + 1);
                    sign = -sign;
                } else if v[j] == v[j + 1] {
                    return None;
                }
            }
        }
        if v.windows(2).any(|w| w[0] == w[1]) {
            return None;
        }
        Some((MultiIndex(v), sign))
    }

    pub fn indices(&self) -> &[usize] {
        &self.0
    }

    pub fn degree(&self) -> usize {
        self.0.len()
    }

    pub fn contains(&self, i: usize) -> bool {
        self.0.binary_search(&i).is_ok()
    }

    fn without_position(&self, p: usize) -> MultiIndex {
        let mut v = self.0.clone();
        v.remove(p);
        MultiIndex(v)
    }

    /// `dx_I ∧ dx_J` as (index, sign), or `None` if the indices overlap.
    fn merge(&self, other: &MultiIndex) -> Option<(MultiIndex, f64)> {
        let mut inversions = 0usize;
        for &i in &self.0 {
            for &j in &other.0 {
                if i == j {
                    return None;
                }
                if i > j {
                    inversions += 1;
                }
            }
        }
        let mut v: Vec<usize> = self.0.iter().chain(&other.0).copied().collect();
        v.sort_unstable();
        Some((MultiIndex(v), if inversions % 2 == 0 { 1.0 } else { -1.0 }))
    }

    /// All increasing multi-indices of the given degree in `n` coordinates.
    pub fn all(n: usize, degree: usize) -> Vec<MultiIndex> {
        fn rec(start: usize, n: usize, left: usize, cur: &mut Vec<usize>, out: &mut Vec<MultiIndex>) {
            if left == 0 {
                out.push(MultiIndex(cur.clone()));
                return;
            }
            for i in start..n {
                cur.push(i);
                rec(i + 1, n, left - 1, cur, out);
                cur.pop();
            }
        }
        let mut out = Vec::new();
        rec(0, n, degree, &mut Vec::new(), &mut out);
        out
    }
}

/// Degree-k differential form `Σ c_I dx_I` with expression coefficients.
#[derive(Clone, PartialEq)]
pub struct DifferentialForm {
    chart: Chart,
    degree: usize,
    terms: BTreeMap<MultiIndex, Expr>,
}

fn check_same_chart(a: &Chart, b: &Chart, op: &str) -> Result<()> {
    if a != b {
        return Err(Error::Dimension(format!("{op}: charts {a:?} and {b:?} differ")));
    }
    Ok(())
}

impl DifferentialForm {
    pub fn zero(chart: &Chart, degree: usize) -> Self {
        DifferentialForm { chart: chart.clone(), degree, terms: BTreeMap::new() }
    }

    pub fn function(chart: &Chart, f: Expr) -> Self {
        Self::from_terms(chart, 0, [(Vec::new(), f)]).expect("degree 0 term")
    }

    /// `dx_i` for the coordinate at position `i`.
    pub fn dx(chart: &Chart, i: usize) -> Self {
        assert!(i < chart.dim(), "coordinate index out of range");
        Self::from_terms(chart, 1, [(vec![i], Expr::one())]).expect("degree 1 term")
    }

    /// Builds a form from (possibly unsorted) index lists; repeated indices
    /// contribute nothing and like terms are summed.
    pub fn from_terms<I>(chart: &Chart, degree: usize, terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (Vec<usize>, Expr)>,
    {
        let mut form = Self::zero(chart, degree);
        for (idx, c) in terms {
            if idx.len() != degree {
                return Err(Error::Degree(format!("index {idx:?} in a {degree}-form")));
            }
            if let Some(&bad) = idx.iter().find(|&&i| i >= chart.dim()) {
                return Err(Error::Dimension(format!("coordinate {bad} out of range for {chart:?}")));
            }
            if let Some((mi, sign)) = MultiIndex::sorted(&idx) {
                let c = if sign < 0.0 { -c } else { c };
                form.add_term(mi, c);
            }
        }
        Ok(form)
    }

    fn add_term(&mut self, idx: MultiIndex, c: Expr) {
        if c.is_zero() {
            return;
        }
        let sum = match self.terms.remove(&idx) {
            Some(prev) => &prev + &c,
            None => c,
        };
        if !sum.is_zero() {
            self.terms.insert(idx, sum);
        }
    }

    pub fn chart(&self) -> &Chart {
        &self.chart
    }

    pub fn dim(&self) -> usize {
        self.chart.dim()
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&MultiIndex, &Expr)> {
        self.terms.iter()
    }

    /// Coefficient of `dx_idx`, accounting for the ordering sign.
    pub fn coefficient(&self, idx: &[usize]) -> Expr {
        match MultiIndex::sorted(idx) {
            Some((mi, sign)) => {
                let c = self.terms.get(&mi).cloned().unwrap_or_else(Expr::zero);
                if sign < 0.0 {
                    -c
                } else {
                    c
                }
            }
            None => Expr::zero(),
        }
    }

    pub fn map_coefficients(&self, mut f: impl FnMut(&MultiIndex, &Expr) -> Expr) -> Self {
        let mut out = Self::zero(&self.chart, self.degree);
        for (i, c) in &self.terms {
            out.add_term(i.clone(), f(i, c));
        }
        out
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        check_same_chart(&self.chart, &other.chart, "add")?;
        if self.degree != other.degree {
            return Err(Error::Degree(format!("cannot add degrees {} and {}", self.degree, other.degree)));
        }
        let mut out = self.clone();
        for (i, c) in &other.terms {
            out.add_term(i.clone(), c.clone());
        }
        Ok(out)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> Self {
        self.map_coefficients(|_, c| -c)
    }

    pub fn scale(&self, s: &Expr) -> Self {
        self.map_coefficients(|_, c| s * c)
    }

    pub fn wedge(&self, other: &Self) -> Result<Self> {
        check_same_chart(&self.chart, &other.chart, "wedge")?;
        let mut out = Self::zero(&self.chart, self.degree + other.degree);
        if out.degree > self.dim() {
            return Ok(out);
        }
        for (i, a) in &self.terms {
            for (j, b) in &other.terms {
                if let Some((k, sign)) = i.merge(j) {
                    let c = a * b;
                    out.add_term(k, if sign < 0.0 { -c } else { c });
                }
            }
        }
        Ok(out)
    }

    /// Exterior derivative along the chart coordinates.
    pub fn exterior_derivative(&self) -> Self {
        let mut out = Self::zero(&self.chart, self.degree + 1);
        if out.degree > self.dim() {
            return out;
        }
        for (idx, c) in &self.terms {
            for (j, name) in self.chart.names().iter().enumerate() {
                if idx.contains(j) {
                    continue;
                }
                let dc = c.differentiate(name);
                if dc.is_zero() {
                    continue;
                }
                let (k, sign) = MultiIndex(vec![j]).merge(idx).expect("disjoint");
                out.add_term(k, if sign < 0.0 { -dc } else { dc });
            }
        }
        out
    }

    /// Interior product `ι_X`.
    pub fn contract(&self, x: &VectorField) -> Result<Self> {
        check_same_chart(&self.chart, &x.chart, "contract")?;
        if self.degree == 0 {
            return Err(Error::Degree("cannot contract a 0-form".into()));
        }
        let mut out = Self::zero(&self.chart, self.degree - 1);
        for (idx, c) in &self.terms {
            for (p, &i) in idx.indices().iter().enumerate() {
                let xi = &x.components[i];
                if xi.is_zero() {
                    continue;
                }
                let term = xi * c;
                out.add_term(idx.without_position(p), if p % 2 == 0 { term } else { -term });
            }
        }
        Ok(out)
    }

    /// Pullback `f^* self`; the target chart of `f` must be this form's chart.
    pub fn pullback(&self, f: &SmoothMap) -> Result<Self> {
        check_same_chart(&self.chart, &f.target, "pullback")?;
        let subs = f.substitution();
        let differentials: Vec<DifferentialForm> = (0..f.target.dim()).map(|i| f.differential_of(i)).collect();
        let mut out = Self::zero(&f.source, self.degree);
        for (idx, c) in &self.terms {
            let mut acc = Self::function(&f.source, c.substitute(&subs));
            for &i in idx.indices() {
                acc = acc.wedge(&differentials[i])?;
            }
            out = out.add(&acc)?;
        }
        Ok(out)
    }

    /// Lie derivative by Cartan's formula `ι_X d + d ι_X`.
    pub fn lie_derivative(&self, x: &VectorField) -> Result<Self> {
        check_same_chart(&self.chart, &x.chart, "lie_derivative")?;
        let first = self.exterior_derivative().contract(x)?;
        if self.degree == 0 {
            return Ok(first);
        }
        first.add(&self.contract(x)?.exterior_derivative())
    }

    /// Substitutes `var := value` in every coefficient.
    pub fn substitute(&self, var: &str, value: &Expr) -> Self {
        self.map_coefficients(|_, c| c.substitute_one(var, value))
    }

    /// `i_s^*` for a form on a chart whose first coordinate is time: drops
    /// every `dt` term and sets `t = s`.
    pub fn restrict_time(&self, s: f64) -> Result<Self> {
        let time = self.time_position()?;
        let base = self.chart.without_time();
        let mut out = Self::zero(&base, self.degree);
        let value = Expr::constant(s);
        for (idx, c) in &self.terms {
            if idx.contains(time) {
                continue;
            }
            let shifted = MultiIndex(idx.indices().iter().map(|&i| i - 1).collect());
            out.add_term(shifted, c.substitute_one(crate::expr::TIME, &value));
        }
        Ok(out)
    }

    pub(crate) fn time_position(&self) -> Result<usize> {
        if self.chart.names().first().map(String::as_str) == Some(crate::expr::TIME) {
            Ok(0)
        } else {
            Err(Error::Dimension(format!("{:?} has no leading time coordinate", self.chart)))
        }
    }

    /// Re-homes the coefficients on a chart with identical coordinates.
    pub fn with_chart(&self, chart: &Chart) -> Result<Self> {
        if chart.dim() != self.dim() {
            return Err(Error::Dimension("re-charting needs equal dimension".into()));
        }
        Ok(DifferentialForm { chart: chart.clone(), degree: self.degree, terms: self.terms.clone() })
    }

    pub fn evaluate(&self, b: &Binding) -> Result<BTreeMap<MultiIndex, f64>, ExprError> {
        self.terms.iter().map(|(i, c)| Ok((i.clone(), c.evaluate(b)?))).collect()
    }

    /// Largest absolute coefficient at a binding.
    pub fn max_abs_at(&self, b: &Binding) -> Result<f64, ExprError> {
        Ok(self.evaluate(b)?.values().fold(0.0f64, |m, v| m.max(v.abs())))
    }

    /// Worst coefficient magnitude over chart points (with optional time).
    pub fn max_abs_over(&self, points: &[Vec<f64>], t: Option<f64>) -> Result<(f64, Vec<f64>), ExprError> {
        let mut worst = (0.0f64, points.first().cloned().unwrap_or_default());
        for p in points {
            let mut b = self.chart.binding(p);
            if let Some(t) = t {
                b.set(crate::expr::TIME, t);
            }
            let v = self.max_abs_at(&b)?;
            if v > worst.0 || v.is_nan() {
                worst = (v, p.clone());
            }
        }
        Ok(worst)
    }

    /// Antisymmetric matrix `Ω_ij = ω(∂_i, ∂_j)` of a 2-form at a binding.
    pub fn coefficient_matrix(&self, b: &Binding) -> Result<Matrix<f64>> {
        if self.degree != 2 {
            return Err(Error::Degree(format!("coefficient matrix of a {}-form", self.degree)));
        }
        let n = self.dim();
        let mut m = Matrix::zeros(n, n);
        for (idx, c) in &self.terms {
            let (i, j) = (idx.indices()[0], idx.indices()[1]);
            let v = c.evaluate(b)?;
            m[(i, j)] = v;
            m[(j, i)] = -v;
        }
        Ok(m)
    }

    pub fn variables(&self) -> std::collections::BTreeSet<String> {
        self.terms.values().flat_map(|c| c.variables()).collect()
    }
}

impl fmt::Display for DifferentialForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (k, (idx, c)) in self.terms.iter().enumerate() {
            if k > 0 {
                write!(f, " + ")?;
            }
            if idx.degree() == 0 {
                write!(f, "({c})")?;
            } else {
                let names: Vec<String> = idx.indices().iter().map(|&i| format!("d{}", self.chart.name(i))).collect();
                write!(f, "({c}) {}", names.join("^"))?;
            }
        }
        Ok(())
    }
}

impl fmt::Debug for DifferentialForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-form on {:?}: {}", self.degree, self.chart, self)
    }
}

/// Vector field `Σ X^i ∂_i`, possibly time-dependent.
#[derive(Clone, PartialEq)]
pub struct VectorField {
    chart: Chart,
    components: Vec<Expr>,
}

impl VectorField {
    pub fn new(chart: &Chart, components: Vec<Expr>) -> Result<Self> {
        if components.len() != chart.dim() {
            return Err(Error::Dimension(format!(
                "{} components for a {}-dimensional chart",
                components.len(),
                chart.dim()
            )));
        }
        Ok(VectorField { chart: chart.clone(), components })
    }

    pub fn zero(chart: &Chart) -> Self {
        VectorField { chart: chart.clone(), components: vec![Expr::zero(); chart.dim()] }
    }

    /// The coordinate field `∂_i`.
    pub fn coordinate(chart: &Chart, i: usize) -> Self {
        let mut f = Self::zero(chart);
        f.components[i] = Expr::one();
        f
    }

    pub fn chart(&self) -> &Chart {
        &self.chart
    }

    pub fn dim(&self) -> usize {
        self.chart.dim()
    }

    pub fn components(&self) -> &[Expr] {
        &self.components
    }

    /// The derivation `X(f) = Σ X^i ∂_i f`.
    pub fn apply(&self, f: &Expr) -> Expr {
        self.components
            .iter()
            .zip(self.chart.names())
            .fold(Expr::zero(), |acc, (xi, name)| &acc + &(xi * &f.differentiate(name)))
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        check_same_chart(&self.chart, &other.chart, "vector field sum")?;
        Ok(VectorField {
            chart: self.chart.clone(),
            components: self.components.iter().zip(&other.components).map(|(a, b)| a + b).collect(),
        })
    }

    pub fn scale(&self, s: &Expr) -> Self {
        VectorField { chart: self.chart.clone(), components: self.components.iter().map(|c| s * c).collect() }
    }

    pub fn evaluate(&self, b: &Binding) -> Result<Vec<f64>, ExprError> {
        self.components.iter().map(|c| c.evaluate(b)).collect()
    }

    /// `J[i][j] = ∂_j X^i` along chart coordinates.
    pub fn jacobian_exprs(&self) -> Vec<Vec<Expr>> {
        self.components.iter().map(|c| self.chart.names().iter().map(|n| c.differentiate(n)).collect()).collect()
    }

    pub fn is_time_dependent(&self) -> bool {
        self.components.iter().any(|c| c.mentions(crate::expr::TIME))
    }
}

impl fmt::Debug for VectorField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> =
            self.components.iter().zip(self.chart.names()).map(|(c, n)| format!("({c}) d/d{n}")).collect();
        write!(f, "VectorField[{}]", parts.join(" + "))
    }
}

/// Smooth map between charts given by component expressions in the source
/// coordinates.
#[derive(Clone, PartialEq)]
pub struct SmoothMap {
    source: Chart,
    target: Chart,
    components: Vec<Expr>,
}

impl SmoothMap {
    pub fn new(source: &Chart, target: &Chart, components: Vec<Expr>) -> Result<Self> {
        if components.len() != target.dim() {
            return Err(Error::Dimension(format!(
                "{} components for a {}-dimensional target",
                components.len(),
                target.dim()
            )));
        }
        Ok(SmoothMap { source: source.clone(), target: target.clone(), components })
    }

    pub fn identity(chart: &Chart) -> Self {
        SmoothMap {
            source: chart.clone(),
            target: chart.clone(),
            components: chart.names().iter().map(|n| Expr::var(n)).collect(),
        }
    }

    pub fn source(&self) -> &Chart {
        &self.source
    }

    pub fn target(&self) -> &Chart {
        &self.target
    }

    pub fn components(&self) -> &[Expr] {
        &self.components
    }

    fn substitution(&self) -> BTreeMap<String, Expr> {
        self.target.names().iter().cloned().zip(self.components.iter().cloned()).collect()
    }

    fn differential_of(&self, i: usize) -> DifferentialForm {
        DifferentialForm::function(&self.source, self.components[i].clone()).exterior_derivative()
    }

    /// `self ∘ inner`.
    pub fn compose(&self, inner: &SmoothMap) -> Result<SmoothMap> {
        check_same_chart(&self.source, &inner.target, "compose")?;
        let subs = inner.substitution();
        Ok(SmoothMap {
            source: inner.source.clone(),
            target: self.target.clone(),
            components: self.components.iter().map(|c| c.substitute(&subs)).collect(),
        })
    }

    pub fn evaluate(&self, b: &Binding) -> Result<Vec<f64>, ExprError> {
        self.components.iter().map(|c| c.evaluate(b)).collect()
    }

    pub fn apply(&self, point: &[f64]) -> Result<Vec<f64>, ExprError> {
        self.evaluate(&self.source.binding(point))
    }

    /// `J[i][j] = ∂ f^i / ∂ u^j`.
    pub fn jacobian_exprs(&self) -> Vec<Vec<Expr>> {
        self.components.iter().map(|c| self.source.names().iter().map(|n| c.differentiate(n)).collect()).collect()
    }

    pub fn jacobian_at(&self, point: &[f64]) -> Result<Matrix<f64>, ExprError> {
        let b = self.source.binding(point);
        let rows: Result<Vec<Vec<f64>>, ExprError> =
            self.jacobian_exprs().iter().map(|row| row.iter().map(|e| e.evaluate(&b)).collect()).collect();
        Ok(Matrix::from_rows(&rows?))
    }
}

impl fmt::Debug for SmoothMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.components.iter().map(|c| c.to_string()).collect();
        write!(f, "SmoothMap {:?} -> {:?}: ({})", self.source, self.target, parts.join(", "))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse_expr;

    fn chart(names: &[&str]) -> Chart {
        Chart::new(names)
    }

    fn e(s: &str) -> Expr {
        parse_expr(s, &["t", "x", "y", "z"]).unwrap()
    }

    fn form(c: &Chart, k: usize, terms: &[(&[usize], &str)]) -> DifferentialForm {
        DifferentialForm::from_terms(c, k, terms.iter().map(|(i, s)| (i.to_vec(), e(s)))).unwrap()
    }

    fn close(a: &DifferentialForm, b: &DifferentialForm, pts: &[Vec<f64>]) -> f64 {
        a.sub(b).unwrap().max_abs_over(pts, Some(0.37)).unwrap().0
    }

    fn grid2() -> Vec<Vec<f64>> {
        crate::domain::DomainBox::cube(2, 1.0).grid(5)
    }

    #[test]
    fn wedge_examples() {
        let c = chart(&["x", "y"]);
        let dx = DifferentialForm::dx(&c, 0);
        let dy = DifferentialForm::dx(&c, 1);
        let area = dx.wedge(&dy).unwrap();
        assert!(area.coefficient(&[0, 1]).is_one());
        assert!(dx.wedge(&dx).unwrap().is_zero());
        let a = form(&c, 1, &[(&[0], "y^2")]);
        let b = form(&c, 1, &[(&[1], "x")]);
        let w = a.wedge(&b).unwrap();
        let want = form(&c, 2, &[(&[0, 1], "x*y^2")]);
        assert_eq!(close(&w, &want, &grid2()), 0.0);
        assert_eq!(dy.wedge(&dx).unwrap().coefficient(&[0, 1]).as_const(), Some(-1.0));
    }

    #[test]
    fn exterior_derivative_examples() {
        let c = chart(&["x", "y"]);
        let beta = form(&c, 1, &[(&[0], "(1/3)*y^2"), (&[1], "-(1/3)*x*y")]);
        let want = form(&c, 2, &[(&[0, 1], "-y")]);
        assert!(close(&beta.exterior_derivative(), &want, &grid2()) < 1e-15);
        assert!(DifferentialForm::dx(&c, 0).exterior_derivative().is_zero());
        let xdy = form(&c, 1, &[(&[1], "x")]);
        assert!(xdy.exterior_derivative().coefficient(&[0, 1]).is_one());
    }

    #[test]
    fn contraction_examples() {
        let ct = chart(&["t", "x"]);
        let dtdx = form(&ct, 2, &[(&[0, 1], "1")]);
        let r = dtdx.contract(&VectorField::coordinate(&ct, 0)).unwrap();
        assert_eq!(r, DifferentialForm::dx(&ct, 1));
        let c = chart(&["x", "y"]);
        let radial = VectorField::new(&c, vec![e("x"), e("y")]).unwrap();
        let r = form(&c, 2, &[(&[0, 1], "1")]).contract(&radial).unwrap();
        let want = form(&c, 1, &[(&[1], "x"), (&[0], "-y")]);
        assert_eq!(close(&r, &want, &grid2()), 0.0);
        assert!(DifferentialForm::function(&c, e("x")).contract(&radial).is_err());
    }

    #[test]
    fn pullback_examples() {
        let c = chart(&["x", "y"]);
        let area = form(&c, 2, &[(&[0, 1], "1")]);
        let ct = chart(&["t", "x", "y"]);
        // r^t(x, y) = (t x, t y) as a map from the chart (t, x, y)
        let r = SmoothMap::new(&ct, &c, vec![e("t*x"), e("t*y")]).unwrap();
        let pulled = area.pullback(&r).unwrap().restrict_time(0.5).unwrap();
        let want = form(&c, 2, &[(&[0, 1], "0.25")]);
        assert!(close(&pulled, &want, &grid2()) < 1e-15);
        let id = SmoothMap::identity(&c);
        let a = form(&c, 1, &[(&[0], "sin(x)*y"), (&[1], "exp(x)")]);
        assert_eq!(close(&a.pullback(&id).unwrap(), &a, &grid2()), 0.0);
        assert!(a.pullback(&r).is_ok());
        assert!(form(&ct, 1, &[(&[0], "x")]).pullback(&r).is_err());
    }

    #[test]
    fn radial_pullback_integrand_matches_closed_form() {
        let c = chart(&["x", "y"]);
        let ct = c.with_time();
        let alpha = form(&c, 2, &[(&[0, 1], "-y")]);
        let r = SmoothMap::new(&ct, &c, vec![e("t*x"), e("t*y")]).unwrap();
        let integrand = alpha.pullback(&r).unwrap().contract(&VectorField::coordinate(&ct, 0)).unwrap();
        // -t^2 (x y dy - y^2 dx)
        let want = form(&ct, 1, &[(&[2], "-t^2*x*y"), (&[1], "t^2*y^2")]);
        let pts = crate::domain::DomainBox::cube(3, 1.0).grid(4);
        assert!(close(&integrand, &want, &pts) < 1e-14);
    }

    #[test]
    fn lie_derivative_examples() {
        let c = chart(&["x", "y"]);
        let xdx = form(&c, 1, &[(&[0], "x")]);
        let l = xdx.lie_derivative(&VectorField::coordinate(&c, 0)).unwrap();
        assert_eq!(l, DifferentialForm::dx(&c, 0));
        let radial = VectorField::new(&c, vec![e("x"), e("y")]).unwrap();
        let l = form(&c, 2, &[(&[0, 1], "1")]).lie_derivative(&radial).unwrap();
        assert_eq!(close(&l, &form(&c, 2, &[(&[0, 1], "2")]), &grid2()), 0.0);
    }

    #[test]
    fn top_degree_is_zero() {
        let c = chart(&["x", "y"]);
        let area = form(&c, 2, &[(&[0, 1], "x*y")]);
        assert!(area.exterior_derivative().is_zero());
        assert!(area.wedge(&DifferentialForm::dx(&c, 0)).unwrap().is_zero());
    }

    #[test]
    fn dimension_mismatches() {
        let a = DifferentialForm::dx(&chart(&["x", "y"]), 0);
        let b = DifferentialForm::dx(&chart(&["x", "y", "z"]), 0);
        assert!(matches!(a.wedge(&b), Err(Error::Dimension(_))));
        assert!(DifferentialForm::from_terms(&chart(&["x"]), 1, [(vec![3], Expr::one())]).is_err());
    }
}
