//! Built-in stratified models and conical charts.

use super::{ConeSpec, ConicalChart, StratifiedModel, Stratum};
use crate::domain::{Chart, DomainBox};
use crate::expr::{parse_expr, Expr};
use crate::forms::SmoothMap;

fn exprs(chart: &Chart, texts: &[&str]) -> Vec<Expr> {
    let vars = chart.name_refs();
    texts.iter().map(|t| parse_expr(t, &vars).expect("built-in expression")).collect()
}

fn map(source: &Chart, target: &Chart, texts: &[&str]) -> SmoothMap {
    SmoothMap::new(source, target, exprs(source, texts)).expect("built-in map")
}

fn stratum(name: &str, ambient: &Chart, params: &[&str], comps: &[&str], bx: DomainBox, eqs: &[&str]) -> Stratum {
    let source = Chart::new(params);
    Stratum::new(name, map(&source, ambient, comps), bx, exprs(ambient, eqs)).expect("built-in stratum")
}

fn cone(stratum: &str, chart: &Chart, eqs: &[&str], pos: &[&str], normal: &Chart, params: &[&str], gen: &[&str], bx: DomainBox) -> ConeSpec {
    ConeSpec {
        stratum: stratum.to_string(),
        equations: exprs(chart, eqs),
        positive: exprs(chart, pos),
        generator: map(&Chart::new(params), normal, gen),
        generator_box: bx,
    }
}

fn r2() -> Chart {
    Chart::new(&["x", "y"])
}

fn r4() -> Chart {
    Chart::new(&["x1", "x2", "y1", "y2"])
}

fn unit(dim: usize) -> DomainBox {
    DomainBox::cube(dim, 1.0)
}

/// The origin of `R^2`.
pub fn point() -> StratifiedModel {
    let c = r2();
    let o = Stratum::point("origin", &c, &[0.0, 0.0]).expect("point");
    StratifiedModel::new("point", &c, vec![o], &[], vec![]).expect("model")
}

/// The line `{y = 0}` in `R^2`.
pub fn lagrangian_line() -> StratifiedModel {
    let c = r2();
    let l = stratum("line", &c, &["s"], &["s", "0"], unit(1), &["y"]);
    StratifiedModel::new("lagrangian-line", &c, vec![l], &[], vec![]).expect("model")
}

/// `{y = 0} ∪ {x = 0}` in `R^4`, stratified by the origin and the two
/// punctured planes.
pub fn lagrangian_pair() -> StratifiedModel {
    let c = r4();
    let o = Stratum::point("origin", &c, &[0.0; 4]).expect("point");
    let h = stratum("horizontal", &c, &["a", "b"], &["a", "b", "0", "0"], unit(2), &["y1", "y2"]);
    let v = stratum("vertical", &c, &["a", "b"], &["0", "0", "a", "b"], unit(2), &["x1", "x2"]);
    let cones = vec![
        cone("horizontal", &c, &["y1", "y2"], &["x1^2 + x2^2"], &c, &["a", "b"], &["a", "b", "0", "0"], unit(2)),
        cone("vertical", &c, &["x1", "x2"], &["y1^2 + y2^2"], &c, &["a", "b"], &["0", "0", "a", "b"], unit(2)),
    ];
    let chart = ConicalChart::identity("origin", &c, &[0.0; 4], 0, 1.0, cones);
    StratifiedModel::new(
        "lagrangian-pair",
        &c,
        vec![o, h, v],
        &[("origin", "horizontal"), ("origin", "vertical")],
        vec![chart],
    )
    .expect("model")
}

/// The `x1`-axis in `R^4`.
pub fn isotropic_line() -> StratifiedModel {
    let c = r4();
    let l = stratum("line", &c, &["s"], &["s", "0", "0", "0"], unit(1), &["x2", "y1", "y2"]);
    StratifiedModel::new("isotropic-line", &c, vec![l], &[], vec![]).expect("model")
}

/// The plane `{x2 = y2 = 0}` in `R^4`.
pub fn symplectic_plane() -> StratifiedModel {
    let c = r4();
    let p = stratum("plane", &c, &["a", "b"], &["a", "0", "b", "0"], unit(2), &["x2", "y2"]);
    StratifiedModel::new("symplectic-plane", &c, vec![p], &[], vec![]).expect("model")
}

/// Lagrangian plane `{y = 0}` plus the isolated point `(0, 0, 1, 1)`.
pub fn plane_with_isolated_point() -> StratifiedModel {
    let c = r4();
    let p = stratum("plane", &c, &["a", "b"], &["a", "b", "0", "0"], unit(2), &["y1", "y2"]);
    let q = Stratum::point("isolated", &c, &[0.0, 0.0, 1.0, 1.0]).expect("point");
    StratifiedModel::new("plane-with-isolated-point", &c, vec![p, q], &[], vec![]).expect("model")
}

/// Graph of the 1-form `x2 dx1`, which is not closed.
pub fn nonclosed_graph() -> StratifiedModel {
    let c = r4();
    let g = stratum("graph", &c, &["a", "b"], &["a", "b", "b", "0"], unit(2), &["y1 - x2", "y2"]);
    StratifiedModel::new("nonclosed-graph", &c, vec![g], &[], vec![]).expect("model")
}

/// The coordinate axes of `R^2` meeting at the origin.
pub fn transversal_lines() -> StratifiedModel {
    let c = r2();
    let o = Stratum::point("origin", &c, &[0.0, 0.0]).expect("point");
    let h = stratum("horizontal", &c, &["s"], &["s", "0"], unit(1), &["y"]);
    let v = stratum("vertical", &c, &["s"], &["0", "s"], unit(1), &["x"]);
    let cones = vec![
        cone("horizontal", &c, &["y"], &["x^2"], &c, &["s"], &["s", "0"], unit(1)),
        cone("vertical", &c, &["x"], &["y^2"], &c, &["s"], &["0", "s"], unit(1)),
    ];
    let chart = ConicalChart::identity("origin", &c, &[0.0, 0.0], 0, 1.0, cones);
    StratifiedModel::new(
        "transversal-lines",
        &c,
        vec![o, h, v],
        &[("origin", "horizontal"), ("origin", "vertical")],
        vec![chart],
    )
    .expect("model")
}

/// Cone `x^2 + y^2 = z^2, z > 0` over a circle, with its apex.
pub fn cone_over_circle() -> StratifiedModel {
    let c = Chart::new(&["x", "y", "z"]);
    let bx = DomainBox::new(vec![0.2, 0.0], vec![1.0, std::f64::consts::TAU]);
    let comps = ["s * cos(p)", "s * sin(p)", "s"];
    let apex = Stratum::point("apex", &c, &[0.0; 3]).expect("point");
    let sheet = stratum("sheet", &c, &["s", "p"], &comps, bx.clone(), &["x^2 + y^2 - z^2"]);
    let cones = vec![cone("sheet", &c, &["x^2 + y^2 - z^2"], &["z"], &c, &["s", "p"], &comps, bx)];
    let chart = ConicalChart::identity("apex", &c, &[0.0; 3], 0, 1.0, cones);
    StratifiedModel::new("cone-over-circle", &c, vec![apex, sheet], &[("apex", "sheet")], vec![chart]).expect("model")
}

/// Models living in an even-dimensional chart with the standard form.
pub fn symplectic_models() -> Vec<StratifiedModel> {
    vec![
        point(),
        lagrangian_line(),
        lagrangian_pair(),
        isotropic_line(),
        symplectic_plane(),
        plane_with_isolated_point(),
        nonclosed_graph(),
        transversal_lines(),
    ]
}

pub fn by_name(name: &str) -> Option<StratifiedModel> {
    symplectic_models().into_iter().chain([cone_over_circle()]).find(|m| m.name == name)
}

fn plane_chart(k: usize, cones: Vec<ConeSpec>) -> ConicalChart {
    let amb = Chart::new(&["p", "q"]);
    let chart = Chart::new(&["u", "v"]);
    ConicalChart {
        stratum: "base".into(),
        center: vec![0.0, 0.0],
        theta: map(&amb, &chart, &["p", "q"]),
        theta_inv: map(&chart, &amb, &["u", "v"]),
        k,
        radius: 1.0,
        cones,
    }
}

/// Chart at the origin of `R^2` whose only cone is the open ray `{(0, s) : s > 0}`.
pub fn ray_chart() -> ConicalChart {
    let uv = Chart::new(&["u", "v"]);
    let bx = DomainBox::new(vec![0.05], vec![1.0]);
    plane_chart(0, vec![cone("ray", &uv, &["u"], &["v"], &uv, &["s"], &["0", "s"], bx)])
}

/// Chart over the `u`-axis whose cone is the line `{v = 1}`; not conical.
pub fn shifted_line_chart() -> ConicalChart {
    let uv = Chart::new(&["u", "v"]);
    let normal = Chart::new(&["v"]);
    plane_chart(1, vec![cone("shifted", &uv, &["v - 1"], &[], &normal, &["s"], &["1"], unit(1))])
}

/// Chart at the origin whose cone is `{v = ±u, (u, v) ≠ 0}`.
pub fn double_cone_chart() -> ConicalChart {
    let uv = Chart::new(&["u", "v"]);
    let eq = ["v^2 - u^2"];
    let pos = ["u^2 + v^2"];
    plane_chart(
        0,
        vec![
            cone("double", &uv, &eq, &pos, &uv, &["s"], &["s", "s"], unit(1)),
            cone("double", &uv, &eq, &pos, &uv, &["s"], &["s", "-s"], unit(1)),
        ],
    )
}
