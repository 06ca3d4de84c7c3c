//! Acceptance suite: one line per criterion, nonzero exit on any failure.

use std::sync::Arc;
use std::time::{Duration, Instant};

use rand::Rng;
use stratsym::domain::seeded_rng;
use stratsym::eulerlike::{
    canonical_flip, concrete_normal_bundle, concrete_tubular_inverse, concrete_tubular_inverse_differential,
    convex_combine, is_euler_like, rescale, tubular_inverse_fd_differential, EulerLikeCandidate, Multiplication,
    SecondDifferential, TangentTangentVector, FD_STEP,
};
use stratsym::homotopy::{
    exactness_primitive, homotopy_defect, relative_primitive, FlatSubspace, OrderProbe, Retraction, Subset,
};
use stratsym::moser::{flow_with_differential, moser_trick, MoserField, MoserOptions, SymplecticPair, TimeDependentField};
use stratsym::strata::{
    classify, lagrangian_equivalence_check, models, standard_symplectic, symplectic_complement, LinearSubspace,
};
use stratsym::{parse_expr, Chart, DifferentialForm, DomainBox, Error, Expr, SmoothMap, VectorField};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn xy() -> Chart {
    Chart::new(&["x", "y"])
}

fn e(text: &str, chart: &Chart) -> Expr {
    parse_expr(text, &chart.name_refs()).unwrap()
}

fn area(c: &str) -> DifferentialForm {
    DifferentialForm::from_terms(&xy(), 2, [(vec![0, 1], e(c, &xy()))]).unwrap()
}

fn example_pair() -> SymplecticPair {
    SymplecticPair::new(area("1"), area("1 + y"), DomainBox::new(vec![-1.5, -0.5], vec![1.5, 0.5])).unwrap()
}

fn weak_retraction(domain: DomainBox) -> Retraction {
    Retraction::radial(&xy(), domain, Subset::Flat(FlatSubspace::named(&xy(), &["y"]).unwrap())).unwrap()
}

fn strong_retraction(domain: DomainBox) -> Retraction {
    Retraction::flat(&xy(), domain, FlatSubspace::named(&xy(), &["y"]).unwrap()).unwrap()
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()))
}

fn weak_beta() -> Result<(f64, Vec<f64>), Error> {
    let alpha = area("1").sub(&area("1 + y"))?;
    let beta = relative_primitive(&alpha, &weak_retraction(DomainBox::cube(2, 1.0)), 8)?;
    let mut worst = (0.0f64, vec![]);
    for p in DomainBox::cube(2, 1.0).grid(20) {
        let b = xy().binding(&p);
        let (x, y) = (p[0], p[1]);
        let dx = beta.coefficient(&[0]).evaluate(&b)? - y * y / 3.0;
        let dy = beta.coefficient(&[1]).evaluate(&b)? + x * y / 3.0;
        let err = dx.abs().max(dy.abs());
        if err >= worst.0 {
            worst = (err, p);
        }
    }
    Ok(worst)
}

fn c1() -> Result<Outcome, Error> {
    let (err, at) = weak_beta()?;
    Ok(outcome(err <= 1e-9, format!("max coefficient error {err:.2e} at {at:?}, tol 1e-9")))
}

fn example_field() -> Result<MoserField, Error> {
    let pair = example_pair();
    let alpha = pair.omega0.sub(&pair.omega1)?;
    let beta = relative_primitive(&alpha, &weak_retraction(pair.domain.clone()), 8)?;
    MoserField::new(&pair, &beta)
}

fn c2() -> Result<Outcome, Error> {
    let field = example_field()?;
    let mut rng = seeded_rng(2);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let (t, x, y) = (rng.gen_range(0.0..=1.0), rng.gen_range(-1.0..=1.0), rng.gen_range(-0.3..=0.3));
        let v = field.value(t, &[x, y])?;
        let s = -y / (3.0 * (1.0 + t * y));
        worst = worst.max(max_diff(&v, &[s * x, s * y]));
    }
    Ok(outcome(worst <= 1e-10, format!("X_t = -y/(3(1+ty))(x, y): max error {worst:.2e} over 100 samples, tol 1e-10")))
}

fn c3() -> Result<Outcome, Error> {
    let field = example_field()?;
    let bx = example_pair().domain;
    let mut worst = 0.0f64;
    let mut nonzero = true;
    let mut offs = Vec::new();
    for x in [0.3, 0.6, 0.9] {
        let (_, m) = flow_with_differential(&field, &[x, 0.0], 0.0, 1.0, 1e-3, &bx)?;
        let expect = [1.0, -x / 3.0, 0.0, 1.0];
        worst = worst.max(max_diff(m.as_slice(), &expect));
        nonzero &= m[(0, 1)].abs() >= x / 3.0 - 1e-3;
        offs.push(format!("{:.6}", m[(0, 1)]));
    }
    Ok(outcome(
        worst <= 1e-6 && nonzero,
        format!("DPhi^1 off-diagonals [{}], max error {worst:.2e} vs [[1,-x/3],[0,1]], tol 1e-6", offs.join(", ")),
    ))
}

fn grid_box() -> DomainBox {
    DomainBox::new(vec![-1.0, -0.3], vec![1.0, 0.3])
}

fn c4() -> Result<Outcome, Error> {
    let pair = example_pair();
    let opts = MoserOptions { grid: 20, grid_box: Some(grid_box()), b_samples: 20, ..Default::default() };
    let (_, rep) = moser_trick(&pair, &weak_retraction(pair.domain.clone()), &opts)?;
    Ok(outcome(
        rep.pullback.0 <= 1e-6 && rep.b_fixed.0 <= 1e-8,
        format!(
            "pullback residual {:.2e} at {:?} (tol 1e-6), |G(b) - b| {:.2e} (tol 1e-8)",
            rep.pullback.0, rep.pullback.1, rep.b_fixed.0
        ),
    ))
}

fn c5() -> Result<Outcome, Error> {
    let pair = example_pair();
    let r = strong_retraction(pair.domain.clone());
    let opts = MoserOptions { grid: 6, grid_box: Some(grid_box()), ..Default::default() };
    let (g, rep) = moser_trick(&pair, &r, &opts)?;
    let mut worst = 0.0f64;
    for x in [0.3, 0.6, 0.9] {
        let (_, m) = g.apply_with_differential(&[x, 0.0])?;
        worst = worst.max(max_diff(m.as_slice(), &[1.0, 0.0, 0.0, 1.0]));
    }
    let order = stratsym::homotopy::vanishing_order(
        &rep.beta,
        &FlatSubspace::named(&xy(), &["y"])?,
        &grid_box(),
        2,
        &OrderProbe::default(),
    )?;
    let exponent = order.min_exponent();
    let half_y2 = DifferentialForm::from_terms(&xy(), 1, [(vec![0], e("y^2/2", &xy()))])?;
    let (beta_err, _) = rep.beta.sub(&half_y2)?.max_abs_over(&grid_box().grid(20), None)?;
    Ok(outcome(
        worst <= 1e-6 && order.passed && exponent >= 1.8 && beta_err <= 1e-12,
        format!(
            "|DG - Id| {worst:.2e} (tol 1e-6), beta - y^2/2 dx {beta_err:.2e}, min fitted exponent {exponent:.3} (>= 1.8)"
        ),
    ))
}

fn random_poly(rng: &mut impl Rng, chart: &Chart) -> Expr {
    let mut out = Expr::zero();
    for _ in 0..4 {
        let mut term = Expr::constant((rng.gen_range(-20..=20) as f64) / 4.0);
        for name in chart.names() {
            let p = rng.gen_range(0..=3);
            if p > 0 {
                term = term * Expr::pow(&Expr::var(name), p);
            }
        }
        out = out + term;
    }
    out
}

fn homotopy_corpus() -> Vec<DifferentialForm> {
    let chart = xy().with_time();
    let mut rng = seeded_rng(6);
    let mut out = Vec::new();
    for degree in 0..=3 {
        for _ in 0..3 {
            let terms = stratsym::MultiIndex::all(3, degree)
                .into_iter()
                .map(|idx| (idx.indices().to_vec(), random_poly(&mut rng, &chart)))
                .collect::<Vec<_>>();
            out.push(DifferentialForm::from_terms(&chart, degree, terms).unwrap());
        }
    }
    // The pulled-back example forms belong in the corpus too.
    let alpha = area("1").sub(&area("1 + y")).unwrap();
    out.push(alpha.pullback(&weak_retraction(DomainBox::cube(2, 1.0)).map).unwrap());
    out.push(alpha.pullback(&strong_retraction(DomainBox::cube(2, 1.0)).map).unwrap());
    out
}

fn c6() -> Result<Outcome, Error> {
    let corpus = homotopy_corpus();
    let pts = DomainBox::cube(2, 1.0).grid(20);
    let mut worst = 0.0f64;
    for g in &corpus {
        let (d, _) = homotopy_defect(g, 8)?.max_abs_over(&pts, None)?;
        worst = worst.max(d);
    }
    Ok(outcome(worst <= 1e-8, format!("{} forms, max defect {worst:.2e} on a 20x20 grid, tol 1e-8", corpus.len())))
}

fn candidate(chart: &Chart, k: usize, comps: &[&str], bx: DomainBox) -> EulerLikeCandidate {
    let field = VectorField::new(chart, comps.iter().map(|c| e(c, chart)).collect()).unwrap();
    EulerLikeCandidate::new(field, k, bx).unwrap()
}

fn c7() -> Result<Outcome, Error> {
    let p = OrderProbe::default();
    let bx = DomainBox::cube(2, 1.0);
    let radial = candidate(&xy(), 1, &["0", "y"], bx.clone());
    let quad = candidate(&xy(), 1, &["0", "y + y^2"], bx.clone());
    let double = candidate(&xy(), 1, &["0", "2*y"], bx.clone());
    let c3 = Chart::new(&["x", "y1", "y2"]);
    let radial3 = candidate(&c3, 1, &["0", "y1", "y2"], DomainBox::cube(3, 1.0));
    let mixed3 = candidate(&c3, 1, &["0", "y1 + x*y2^2", "y2 - y1^2"], DomainBox::cube(3, 1.0));
    let phi = e("1/(1 + x^2)", &xy());
    let mut cases: Vec<(&str, bool, EulerLikeCandidate)> = vec![
        ("radial", true, radial.clone()),
        ("radial + quadratic", true, quad.clone()),
        ("radial in R^1 x R^2", true, radial3),
        ("quadratic perturbation in R^1 x R^2", true, mixed3),
        ("equal-weight combination", true, convex_combine(&[radial.clone(), quad.clone()], &[Expr::constant(0.5), Expr::constant(0.5)])?),
        ("x-dependent weights", true, convex_combine(&[radial.clone(), quad.clone()], &[phi.clone(), Expr::one() - phi])?),
        ("bump rescaling, collar 0.1", true, rescale(&radial, &e("1/(1 + (y/0.3)^40)", &xy()), 0.1)?),
        ("1/(1+y^2) rescaling", true, rescale(&quad, &e("1/(1 + y^2)", &xy()), 0.0)?),
    ];
    cases.push(("2y dy", false, double));
    let mut details = Vec::new();
    let mut pass = true;
    for (name, expected, cand) in &cases {
        let rep = is_euler_like(cand, None, &p)?;
        let ok = rep.euler_like == *expected && (*expected || rep.min_exponent() <= 1.2);
        pass &= ok;
        if !ok || !expected {
            details.push(format!("{name}: euler_like={} exponent {:.3}", rep.euler_like, rep.min_exponent()));
        }
    }
    Ok(outcome(pass, format!("{} cases; {}", cases.len(), details.join("; "))))
}

struct TubularCase {
    cand: EulerLikeCandidate,
    m: fn(&[f64], f64) -> Vec<f64>,
    inverse: fn(&[f64]) -> (Vec<f64>, Vec<f64>),
    normal: fn(&[f64]) -> Vec<f64>,
}

/// `S_* E`, expressed in the target coordinates through `S^{-1}`.
fn push_forward(field: &VectorField, s: &SmoothMap, s_inv: &SmoothMap) -> VectorField {
    let jac = s.jacobian_exprs();
    let back: std::collections::BTreeMap<String, Expr> =
        s.source().names().iter().cloned().zip(s_inv.components().iter().cloned()).collect();
    let comps = jac
        .iter()
        .map(|row| row.iter().zip(field.components()).fold(Expr::zero(), |acc, (d, c)| acc + d * c).substitute(&back))
        .collect();
    VectorField::new(s_inv.source(), comps).unwrap()
}

fn tubular_cases() -> Vec<TubularCase> {
    let c = xy();
    let bx = DomainBox::new(vec![-2.5, -0.6], vec![2.5, 0.6]);
    let radial = VectorField::new(&c, vec![Expr::zero(), Expr::var("y")]).unwrap();
    let map = |a: &str, b: &str| SmoothMap::new(&c, &c, vec![e(a, &c), e(b, &c)]).unwrap();
    let tilted = push_forward(&radial, &map("x*(1 + y)", "y"), &map("x/(1 + y)", "y"));
    let sheared = push_forward(&radial, &map("x", "y + x*y"), &map("x", "y/(1 + x)"));
    vec![
        TubularCase {
            cand: EulerLikeCandidate::new(radial, 1, bx.clone()).unwrap(),
            m: |q, t| vec![q[0], t * q[1]],
            inverse: |q| (vec![q[0], 0.0], vec![0.0, q[1]]),
            normal: |_| vec![0.0, 1.0],
        },
        TubularCase {
            // Radial field conjugated by (x, y) -> (x(1 + y), y).
            cand: EulerLikeCandidate::new(tilted, 1, bx.clone()).unwrap(),
            m: |q, t| vec![q[0] * (1.0 + t * q[1]) / (1.0 + q[1]), t * q[1]],
            inverse: |q| (vec![q[0] / (1.0 + q[1]), 0.0], vec![q[0] * q[1] / (1.0 + q[1]), q[1]]),
            normal: |p| vec![p[0], 1.0],
        },
        TubularCase {
            // Conjugated by (x, y) -> (x, y + x y), which maps the y-axes to themselves.
            cand: EulerLikeCandidate::new(sheared, 1, DomainBox::new(vec![-0.9, -0.6], vec![0.9, 0.6])).unwrap(),
            m: |q, t| vec![q[0], t * q[1]],
            inverse: |q| (vec![q[0], 0.0], vec![0.0, q[1]]),
            normal: |_| vec![0.0, 1.0],
        },
    ]
}

fn c8() -> Result<Outcome, Error> {
    let mut rng = seeded_rng(8);
    let samples: Vec<Vec<f64>> = (0..4).map(|_| vec![rng.gen_range(-0.8..=0.8), rng.gen_range(-0.5..=0.5)]).collect();
    let (mut semi, mut closed, mut inv, mut dinv, mut normal) = (0.0f64, 0.0f64, 0.0f64, 0.0f64, 0.0f64);
    let mut dims_ok = true;
    for case in tubular_cases() {
        let m = Multiplication::new(&case.cand, 1e-3)?;
        for q in &samples {
            for s in [0.2, 0.5, 1.0] {
                for t in [0.2, 0.5, 1.0] {
                    let lhs = m.apply(&m.apply(q, t)?, s)?;
                    semi = semi.max(max_diff(&lhs, &m.apply(q, s * t)?));
                    closed = closed.max(max_diff(&m.apply(q, s * t)?, &(case.m)(q, s * t)));
                }
            }
            let got = concrete_tubular_inverse(&case.cand, q, FD_STEP)?;
            let (base, vec) = (case.inverse)(q);
            inv = inv.max(max_diff(&got.base, &base)).max(max_diff(&got.vector, &vec));
            let v = [rng.gen_range(-1.0..=1.0), rng.gen_range(-1.0..=1.0)];
            let analytic = concrete_tubular_inverse_differential(&case.cand, q, &v, FD_STEP)?;
            let fd = tubular_inverse_fd_differential(&case.cand, q, &v, FD_STEP, 1e-4)?;
            dinv = dinv.max(analytic.max_diff(&fd));
            let p = vec![q[0], 0.0];
            let nu = concrete_normal_bundle(&case.cand, &p, 1e-3)?;
            dims_ok &= nu.dim() == 1 && nu.is_complementary_to(&LinearSubspace::coordinate(2, &[0]));
            let dir = (case.normal)(&p);
            let len = dir.iter().map(|v| v * v).sum::<f64>().sqrt();
            normal = normal.max(nu.residual(&dir.iter().map(|v| v / len).collect::<Vec<_>>()));
        }
    }
    let pass = semi <= 1e-6 && closed <= 1e-6 && inv <= 1e-6 && dinv <= 1e-4 && dims_ok && normal <= 1e-6;
    Ok(outcome(
        pass,
        format!(
            "semigroup {semi:.2e}, m^t closed form {closed:.2e}, psi^-1 {inv:.2e} (tol 1e-6), Dpsi^-1 vs FD {dinv:.2e} (tol 1e-4), normal bundle dim/transverse {dims_ok}, direction {normal:.2e}"
        ),
    ))
}

fn c9() -> Result<Outcome, Error> {
    let c2 = xy();
    let c3 = Chart::new(&["a", "b", "c"]);
    let maps = vec![
        SmoothMap::new(&c2, &c2, vec![e("x^2", &c2), e("y", &c2)])?,
        SmoothMap::new(&c2, &c2, vec![e("sin(x)*y", &c2), e("exp(y) + x^3*y", &c2)])?,
        SmoothMap::new(&c3, &c2, vec![e("a*b*c", &c3), e("cos(a) + b^2 - c/(2 + b^2)", &c3)])?,
    ];
    let mut rng = seeded_rng(9);
    let mut involution = true;
    let mut worst = 0.0f64;
    for f in &maps {
        let d = SecondDifferential::new(f);
        let n = f.source().dim();
        for _ in 0..1000 {
            let mut block = || (0..n).map(|_| rng.gen_range(-1.0..=1.0)).collect::<Vec<f64>>();
            let tt = TangentTangentVector::new(block(), block(), block(), block())?;
            involution &= canonical_flip(&canonical_flip(&tt)) == tt;
            let lhs = canonical_flip(&d.apply(&tt)?);
            let rhs = d.apply(&canonical_flip(&tt))?;
            worst = worst.max(lhs.max_diff(&rhs));
        }
    }
    Ok(outcome(
        involution && worst <= 1e-9,
        format!("kappa^2 = id exactly: {involution}; naturality max {worst:.2e} over 3000 vectors, tol 1e-9"),
    ))
}

fn c10() -> Result<Outcome, Error> {
    let pair = models::lagrangian_pair();
    let om4 = standard_symplectic(pair.ambient())?;
    let pair_lag = classify(&pair, &om4, 16, 10)?.lagrangian;
    let line_lag = classify(&models::isotropic_line(), &om4, 16, 10)?.lagrangian;
    let mut agree = Vec::new();
    for m in models::symplectic_models() {
        let om = standard_symplectic(m.ambient())?;
        let eq = lagrangian_equivalence_check(&m, &om, 16, 10)?;
        if !eq.agree {
            agree.push(m.name.clone());
        }
    }
    let mut rng = seeded_rng(10);
    let mut identity = true;
    let mut double = 0.0f64;
    for n in [4usize, 6] {
        let om = standard_symplectic(&Chart::new(&(0..n).map(|i| format!("z{i}")).collect::<Vec<_>>()))?
            .coefficient_matrix(&stratsym::Binding::new())?;
        for _ in 0..100 {
            let k = rng.gen_range(0..=n);
            let vs: Vec<Vec<f64>> = (0..k).map(|_| (0..n).map(|_| rng.gen_range(-1.0..=1.0)).collect()).collect();
            let w = LinearSubspace::span(n, &vs)?;
            let c = symplectic_complement(&w, &om)?;
            identity &= w.dim() + c.dim() == n;
            let cc = symplectic_complement(&c, &om)?;
            double = double.max(w.containment_residual(&cc)).max(cc.containment_residual(&w));
        }
    }
    Ok(outcome(
        pair_lag && !line_lag && agree.is_empty() && identity && double <= 1e-9,
        format!(
            "pair Lagrangian {pair_lag}, isotropic line Lagrangian {line_lag}, disagreeing models {agree:?}, dim identity {identity}, double complement {double:.2e}"
        ),
    ))
}

fn c11() -> Result<Outcome, Error> {
    let mut worst = 0.0f64;
    let c2 = xy();
    let om2 = standard_symplectic(&c2)?;
    let point = models::point();
    let r = Retraction::radial(&c2, DomainBox::cube(2, 1.0), Subset::Model(Arc::new(point.clone())))?;
    let lam = exactness_primitive(&om2, &r, &point, 8)?;
    worst = worst.max(lam.exterior_derivative().sub(&om2)?.max_abs_over(&DomainBox::cube(2, 1.0).grid(20), None)?.0);
    let line = models::lagrangian_line();
    let r = strong_retraction(DomainBox::cube(2, 1.0));
    let lam = exactness_primitive(&om2, &r, &line, 8)?;
    worst = worst.max(lam.exterior_derivative().sub(&om2)?.max_abs_over(&DomainBox::cube(2, 1.0).grid(20), None)?.0);
    let pair = models::lagrangian_pair();
    let c4 = pair.ambient().clone();
    let om4 = standard_symplectic(&c4)?;
    let r = Retraction::radial(&c4, DomainBox::cube(4, 1.0), Subset::Model(Arc::new(pair.clone())))?;
    let lam = exactness_primitive(&om4, &r, &pair, 8)?;
    worst = worst.max(lam.exterior_derivative().sub(&om4)?.max_abs_over(&DomainBox::cube(4, 1.0).grid(8), None)?.0);
    let plane = models::symplectic_plane();
    let t = Expr::var("t");
    let comps = vec![Expr::var("x1"), &t * &Expr::var("x2"), Expr::var("y1"), &t * &Expr::var("y2")];
    let map = SmoothMap::new(&c4.with_time(), &c4, comps)?;
    let r = Retraction::new(map, DomainBox::cube(4, 1.0), Subset::Model(Arc::new(plane.clone())), None, true)?;
    let refusal = match exactness_primitive(&om4, &r, &plane, 8) {
        Err(Error::NotIsotropic { obstruction, .. }) => Some(obstruction),
        _ => None,
    };
    let refused = refusal.map_or(false, |o| o > 0.5);
    Ok(outcome(
        worst <= 1e-7 && refused,
        format!("max |d lambda - omega| {worst:.2e} (tol 1e-7) over point, line, pair; symplectic plane refused with r*omega obstruction {refusal:?}"),
    ))
}

fn main() {
    type Check = fn() -> Result<Outcome, Error>;
    let criteria: [(&str, Check, Option<Duration>); 11] = [
        ("primitive of the example", c1, Some(Duration::from_secs(1))),
        ("Moser field of the example", c2, Some(Duration::from_secs(1))),
        ("weak-retraction differential", c3, Some(Duration::from_secs(5))),
        ("Moser pullback", c4, Some(Duration::from_secs(30))),
        ("strong-retraction theorem", c5, None),
        ("homotopy-operator identity", c6, None),
        ("Euler-like criterion", c7, Some(Duration::from_secs(10))),
        ("tubular machinery", c8, None),
        ("canonical flip", c9, None),
        ("strata classification", c10, None),
        ("isotropic exactness", c11, None),
    ];
    let mut failed = 0;
    for (i, (name, check, budget)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let result = check();
        let elapsed = start.elapsed();
        let (pass, detail) = match result {
            Ok(o) => (o.pass, o.detail),
            Err(err) => (false, format!("error: {err}")),
        };
        let in_time = budget.map_or(true, |b| elapsed <= b);
        let budget_note = budget.map(|b| format!(" / budget {:.0} s", b.as_secs_f64())).unwrap_or_default();
        let ok = pass && in_time;
        if !ok {
            failed += 1;
        }
        println!(
            "criterion {:>2} {} {name}: {detail} [{:.2} s{budget_note}]",
            i + 1,
            if ok { "PASS" } else { "FAIL" },
            elapsed.as_secs_f64()
        );
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
