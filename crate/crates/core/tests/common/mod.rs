#![allow(dead_code)]

use proptest::prelude::*;
use stratsym::{Chart, DifferentialForm, Expr, MultiIndex, SmoothMap, VectorField};

/// Polynomial with up to four monomials of per-variable degree ≤ 2.
pub fn poly(vars: &'static [&'static str]) -> impl Strategy<Value = Expr> {
    prop::collection::vec((-4i32..=4, prop::collection::vec(0i32..=2, vars.len())), 1..=4).prop_map(move |terms| {
        terms.into_iter().fold(Expr::zero(), |acc, (c, exps)| {
            let mono = vars.iter().zip(exps).fold(Expr::constant(c as f64 / 2.0), |m, (v, p)| {
                if p == 0 {
                    m
                } else {
                    m * Expr::pow(&Expr::var(v), p)
                }
            });
            acc + mono
        })
    })
}

/// Smooth expressions built from the whole grammar, free of domain errors.
pub fn smooth(vars: &'static [&'static str]) -> impl Strategy<Value = Expr> {
    let leaf = prop_oneof![
        (-3i32..=3).prop_map(|c| Expr::constant(c as f64 / 2.0)),
        prop::sample::select(vars).prop_map(Expr::var),
    ];
    leaf.prop_recursive(4, 24, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| a + b),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| a - b),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| a * b),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| a / (Expr::constant(2.0) + &b * &b)),
            inner.clone().prop_map(|a| -a),
            inner.clone().prop_map(|a| Expr::call(stratsym::expr::Func::Sin, &a)),
            inner.clone().prop_map(|a| Expr::call(stratsym::expr::Func::Cos, &a)),
            inner.clone().prop_map(|a| Expr::call(stratsym::expr::Func::Exp, &Expr::call(stratsym::expr::Func::Sin, &a))),
            inner.clone().prop_map(|a| Expr::call(stratsym::expr::Func::Sqrt, &(Expr::one() + &a * &a))),
            inner.clone().prop_map(|a| Expr::call(stratsym::expr::Func::Log, &(Expr::one() + &a * &a))),
            (inner, 2i32..=3).prop_map(|(a, n)| Expr::pow(&a, n)),
        ]
    })
}

pub const XYZ: &[&str] = &["x", "y", "z"];
pub const XY: &[&str] = &["x", "y"];

pub fn chart(vars: &[&str]) -> Chart {
    Chart::new(vars)
}

/// Random polynomial form of the given degree on the chart of `vars`.
pub fn form(vars: &'static [&'static str], degree: usize) -> impl Strategy<Value = DifferentialForm> {
    let idx = MultiIndex::all(vars.len(), degree);
    prop::collection::vec(poly(vars), idx.len()).prop_map(move |coeffs| {
        let terms = idx.iter().map(|i| i.indices().to_vec()).zip(coeffs);
        DifferentialForm::from_terms(&Chart::new(vars), degree, terms).unwrap()
    })
}

pub fn field(vars: &'static [&'static str]) -> impl Strategy<Value = VectorField> {
    prop::collection::vec(poly(vars), vars.len()).prop_map(move |c| VectorField::new(&Chart::new(vars), c).unwrap())
}

pub fn map(vars: &'static [&'static str]) -> impl Strategy<Value = SmoothMap> {
    prop::collection::vec(poly(vars), vars.len()).prop_map(move |c| {
        let ch = Chart::new(vars);
        SmoothMap::new(&ch, &ch, c).unwrap()
    })
}

/// Largest coefficient of `a − b` on an `m`-per-axis grid of `[-1, 1]^n`.
pub fn grid_diff(a: &DifferentialForm, b: &DifferentialForm, m: usize) -> f64 {
    let pts = stratsym::DomainBox::cube(a.dim(), 1.0).grid(m);
    a.sub(b).unwrap().max_abs_over(&pts, None).unwrap().0
}

/// Largest coefficient magnitude of `a` on the same grid.
pub fn grid_max(a: &DifferentialForm, m: usize) -> f64 {
    let pts = stratsym::DomainBox::cube(a.dim(), 1.0).grid(m);
    a.max_abs_over(&pts, None).unwrap().0
}
