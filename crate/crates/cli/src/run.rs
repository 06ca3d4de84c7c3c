use std::collections::BTreeMap;
use std::sync::Arc;
use std::time::Instant;

use rand::Rng;
use stratsym::domain::{seeded_rng, SampleRng};
use stratsym::eulerlike::{
    concrete_normal_bundle, concrete_tubular_inverse, concrete_tubular_inverse_differential, is_euler_like,
    tubular_inverse_fd_differential, EulerLikeCandidate, Multiplication, FD_STEP,
};
use stratsym::homotopy::{exactness_primitive, primitive_vanishing_on_b, relative_primitive, OrderProbe};
use stratsym::moser::{moser_trick, FlowMap, MoserField, MoserOptions, MoserReport, SymplecticPair};
use stratsym::strata::{classify, equivalence_from, LinearSubspace, CLASSIFY_TOL};
use stratsym::{DifferentialForm, DomainBox, Error};

use crate::report::{Record, Report};
use crate::scenario::{Check, CheckKind, Scenario};

/// Command-line overrides of the scenario settings.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub seed: u64,
    pub tol: Option<f64>,
    pub grid: Option<usize>,
    pub step: Option<f64>,
    pub quadrature: Option<usize>,
}

impl RunOptions {
    pub fn seeded(seed: u64) -> Self {
        RunOptions { seed, ..Default::default() }
    }
}

pub const DEFAULT_SEED: u64 = 42;

/// Points per axis keeping a grid near 4096 points.
fn grid_per_axis(requested: usize, dim: usize) -> usize {
    let cap = (4096f64).powf(1.0 / dim as f64).floor() as usize;
    requested.min(cap.max(2))
}

/// Samples of each field check are drawn from this box unless one is given.
fn inner_box(domain: &DomainBox) -> DomainBox {
    let mid = |i: usize| 0.5 * (domain.lo[i] + domain.hi[i]);
    let half = |i: usize| 0.25 * (domain.hi[i] - domain.lo[i]);
    let n = domain.dim();
    DomainBox::new((0..n).map(|i| mid(i) - half(i)).collect(), (0..n).map(|i| mid(i) + half(i)).collect())
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()))
}

/// Running maximum with its location.
#[derive(Default)]
struct Worst {
    value: f64,
    at: Option<Vec<f64>>,
}

impl Worst {
    fn update(&mut self, v: f64, p: &[f64]) {
        if !(v <= self.value) || self.at.is_none() {
            self.value = v;
            self.at = Some(p.to_vec());
        }
    }
}

struct Runner<'a> {
    sc: &'a Scenario,
    opts: &'a RunOptions,
    grid: usize,
    step: f64,
    quadrature: usize,
    moser: BTreeMap<(String, String, String), MoserReport>,
    flows: BTreeMap<(String, String), FlowMap>,
}

pub fn run(sc: &Scenario, seed: u64) -> Report {
    run_with(sc, &RunOptions::seeded(seed))
}

pub fn run_with(sc: &Scenario, opts: &RunOptions) -> Report {
    let start = Instant::now();
    let mut runner = Runner {
        sc,
        opts,
        grid: opts.grid.unwrap_or(sc.settings.grid),
        step: opts.step.unwrap_or(sc.settings.step),
        quadrature: opts.quadrature.unwrap_or(sc.settings.quadrature),
        moser: BTreeMap::new(),
        flows: BTreeMap::new(),
    };
    let mut records = Vec::new();
    for (i, check) in sc.checks.iter().enumerate() {
        let tol = match opts.tol {
            Some(t) if has_tolerance(check.kind) => t,
            _ => check.tol,
        };
        let mut rng = seeded_rng(opts.seed.wrapping_add(i as u64));
        let record = match runner.check(check, tol, &mut rng) {
            Ok(r) => r,
            Err(e) => Record::failed(&check.name, tol, e.to_string()),
        };
        records.push(record);
    }
    Report { scenario: sc.name.clone(), seed: opts.seed, records, elapsed: start.elapsed() }
}

/// Checks whose verdict is a residual against a tolerance; the rest report
/// a structural yes/no and keep their fixed threshold.
pub fn has_tolerance(kind: CheckKind) -> bool {
    !matches!(kind, CheckKind::EulerLike | CheckKind::NormalBundle | CheckKind::Classify | CheckKind::Equivalence)
}

impl Runner<'_> {
    fn form(&self, name: &Option<String>) -> &DifferentialForm {
        &self.sc.forms[name.as_ref().expect("validated at load")]
    }

    fn candidate(&self, check: &Check) -> Result<EulerLikeCandidate, Error> {
        let decl = &self.sc.fields[check.field.as_ref().expect("validated at load")];
        EulerLikeCandidate::new(decl.field.clone(), decl.split.expect("validated at load"), self.sc.domain.clone())
    }

    fn pair(&self, check: &Check) -> Result<SymplecticPair, Error> {
        SymplecticPair::new(self.form(&check.from).clone(), self.form(&check.to).clone(), self.sc.domain.clone())
    }

    /// `G = Φ^1` without the grid verification of [`Runner::moser`].
    fn flow(&mut self, check: &Check) -> Result<&FlowMap, Error> {
        let key = (check.from.clone().unwrap_or_default(), check.to.clone().unwrap_or_default());
        if !self.flows.contains_key(&key) {
            let pair = self.pair(check)?;
            let r = self.sc.retraction.as_ref().expect("validated at load");
            let beta = primitive_vanishing_on_b(&pair.omega0, &pair.omega1, r, self.quadrature)?;
            let field = MoserField::new(&pair, &beta)?;
            let g = FlowMap { field: Arc::new(field), domain: pair.domain.clone(), step: self.step, t0: 0.0, t1: 1.0 };
            self.flows.insert(key.clone(), g);
        }
        Ok(&self.flows[&key])
    }

    fn moser(&mut self, check: &Check) -> Result<&MoserReport, Error> {
        let key = (check.from.clone().unwrap_or_default(), check.to.clone().unwrap_or_default(), format!("{:?}", check.bx));
        if !self.moser.contains_key(&key) {
            let pair = self.pair(check)?;
            let r = self.sc.retraction.as_ref().expect("validated at load");
            let mo = MoserOptions {
                step: self.step,
                quadrature: self.quadrature,
                grid: grid_per_axis(self.grid, self.sc.chart.dim()),
                grid_box: check.bx.clone(),
                b_samples: 16,
                seed: self.opts.seed,
            };
            let (_, report) = moser_trick(&pair, r, &mo)?;
            self.moser.insert(key.clone(), report);
        }
        Ok(&self.moser[&key])
    }

    fn check(&mut self, check: &Check, tol: f64, rng: &mut SampleRng) -> Result<Record, Error> {
        let sc = self.sc;
        let n = sc.chart.dim();
        let record = |worst: Worst, detail: String| Record::residual(&check.name, worst.value, worst.at, tol, detail);
        match check.kind {
            CheckKind::Primitive => {
                let alpha = self.form(&check.from).sub(self.form(&check.to))?;
                let r = sc.retraction.as_ref().expect("validated at load");
                let beta = relative_primitive(&alpha, r, self.quadrature)?;
                let bx = check.bx.clone().unwrap_or_else(|| sc.domain.clone());
                let mut w = Worst::default();
                let (d, at) = beta.exterior_derivative().sub(&alpha)?.max_abs_over(&bx.grid(grid_per_axis(self.grid, n)), None)?;
                w.update(d, &at);
                let (on_a, at_a) = beta.max_abs_over(&r.a.samples(&bx, rng, 32)?, None)?;
                w.update(on_a, &at_a);
                Ok(record(w, format!("max |dβ − α| {d:.3e}, max |β| on A {on_a:.3e}")))
            }
            CheckKind::Moser => {
                let rep = self.moser(check)?;
                let w = Worst { value: rep.pullback.0, at: Some(rep.pullback.1.clone()) };
                Ok(record(w, "max entry of Mᵀ Ω1(G p) M − Ω0(p) over the grid".into()))
            }
            CheckKind::FixesB => {
                let rep = self.moser(check)?;
                let w = Worst { value: rep.b_fixed.0, at: Some(rep.b_fixed.1.clone()) };
                Ok(record(w, "max |G(b) − b| over samples of B".into()))
            }
            CheckKind::Differential => {
                let at = check.at.clone().expect("validated at load");
                let (i, j) = check.entry.expect("validated at load");
                let expect: f64 = check.expect.as_ref().expect("validated at load").parse().expect("validated at load");
                let g = self.flow(check)?;
                let (_, m) = g.apply_with_differential(&at)?;
                let got = m[(i, j)];
                let w = Worst { value: (got - expect).abs(), at: Some(at) };
                Ok(record(w, format!("DG[{i}][{j}] = {got:.9}, expected {expect}")))
            }
            CheckKind::DifferentialIdentity => {
                let bx = check.bx.clone().unwrap_or_else(|| sc.domain.clone());
                let r = sc.retraction.as_ref().expect("validated at load");
                let samples = r.a.samples(&bx, rng, 16)?;
                let g = self.flow(check)?;
                let mut w = Worst::default();
                for p in samples {
                    let (_, m) = g.apply_with_differential(&p)?;
                    w.update(m.sub(&stratsym::Mat::identity(n)).max_abs(), &p);
                }
                Ok(record(w, "max |DG − Id| over samples of A".into()))
            }
            CheckKind::EulerLike => {
                let c = self.candidate(check)?;
                let probe = OrderProbe { seed: self.opts.seed, ..OrderProbe::default() };
                let rep = is_euler_like(&c, None, &probe)?;
                let expect = check.expect.as_deref() == Some("true");
                let exponent = rep.min_exponent();
                let detail = rep
                    .probes
                    .iter()
                    .map(|(f, r)| format!("{f}: order {:.3}", r.min_exponent()))
                    .collect::<Vec<_>>()
                    .join(", ");
                let worst_at = rep.probes.iter().flat_map(|(_, r)| &r.fits).min_by(|a, b| a.exponent.total_cmp(&b.exponent));
                Ok(Record {
                    name: check.name.clone(),
                    passed: rep.euler_like == expect,
                    worst: exponent,
                    at: worst_at.map(|f| f.worst_at.clone()),
                    tol: 2.0 - 0.2,
                    detail: format!("Euler-like {} (expected {expect}); fitted {detail}", rep.euler_like),
                    rows: Vec::new(),
                })
            }
            CheckKind::Semigroup => {
                let c = self.candidate(check)?;
                let m = Multiplication::new(&c, self.step)?;
                let bx = check.bx.clone().unwrap_or_else(|| inner_box(&sc.domain));
                let mut w = Worst::default();
                for q in bx.samples(rng, 4) {
                    for s in [0.2, 0.5, 1.0] {
                        for t in [0.2, 0.5, 1.0] {
                            let lhs = m.apply(&m.apply(&q, t)?, s)?;
                            w.update(max_diff(&lhs, &m.apply(&q, s * t)?), &q);
                        }
                    }
                }
                Ok(record(w, "max |m^s(m^t q) − m^{st} q| for s, t in {0.2, 0.5, 1}".into()))
            }
            CheckKind::TubularInverse => {
                let c = self.candidate(check)?;
                let bx = check.bx.clone().unwrap_or_else(|| inner_box(&sc.domain));
                let (base, vector) = (check.base.as_ref().expect("validated"), check.vector.as_ref().expect("validated"));
                let mut w = Worst::default();
                for q in bx.samples(rng, 8) {
                    let got = concrete_tubular_inverse(&c, &q, FD_STEP)?;
                    let b = sc.chart.binding(&q);
                    let eb = base.iter().map(|e| e.evaluate(&b)).collect::<Result<Vec<_>, _>>()?;
                    let ev = vector.iter().map(|e| e.evaluate(&b)).collect::<Result<Vec<_>, _>>()?;
                    w.update(max_diff(&got.base, &eb).max(max_diff(&got.vector, &ev)), &q);
                }
                Ok(record(w, "max deviation of ψ⁻¹ from the closed form".into()))
            }
            CheckKind::TubularDifferential => {
                let c = self.candidate(check)?;
                let bx = check.bx.clone().unwrap_or_else(|| inner_box(&sc.domain));
                let mut w = Worst::default();
                for q in bx.samples(rng, 6) {
                    let v: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..=1.0)).collect();
                    let analytic = concrete_tubular_inverse_differential(&c, &q, &v, FD_STEP)?;
                    let fd = tubular_inverse_fd_differential(&c, &q, &v, FD_STEP, 1e-4)?;
                    w.update(analytic.max_diff(&fd), &q);
                }
                Ok(record(w, "max |Dψ⁻¹ v − finite-difference Jacobian of ψ⁻¹ applied to v|".into()))
            }
            CheckKind::NormalBundle => {
                let c = self.candidate(check)?;
                let k = c.k;
                let bx = check.bx.clone().unwrap_or_else(|| inner_box(&sc.domain));
                let tangent = LinearSubspace::coordinate(n, &(0..k).collect::<Vec<_>>());
                let mut deficit = Worst::default();
                let mut transverse = true;
                for mut p in bx.samples(rng, 4) {
                    p[k..].iter_mut().for_each(|v| *v = 0.0);
                    let nu = concrete_normal_bundle(&c, &p, 1e-3)?;
                    deficit.update((nu.dim() as f64 - (n - k) as f64).abs(), &p);
                    transverse &= nu.is_complementary_to(&tangent);
                }
                Ok(Record {
                    name: check.name.clone(),
                    passed: deficit.value == 0.0 && transverse,
                    worst: deficit.value,
                    at: deficit.at,
                    tol: 0.0,
                    detail: format!("dimension deficit {}, transverse to TN {transverse}", deficit.value),
                    rows: Vec::new(),
                })
            }
            CheckKind::Classify | CheckKind::Equivalence => {
                let model = sc.model.as_ref().expect("validated at load");
                let classes = classify(model, self.form(&check.form), 16, self.opts.seed)?;
                let mut w = Worst::default();
                let mut rows = Vec::new();
                for s in &classes.strata {
                    w.update(s.residual, &s.worst_at);
                    rows.push(format!("stratum {} (dim {}): isotropic {} ({:.2e})", s.name, s.dim, s.isotropic, s.residual));
                }
                let mut points: BTreeMap<&str, (usize, bool, f64)> = BTreeMap::new();
                for p in &classes.points {
                    w.update(p.residual, &p.point);
                    let e = points.entry(&p.stratum).or_insert((p.zariski_dim, true, 0.0));
                    e.1 &= p.coisotropic;
                    e.2 = e.2.max(p.residual);
                }
                for (s, (dim, co, res)) in points {
                    rows.push(format!("points of {s}: Zariski dim {dim}, coisotropic {co} ({res:.2e})"));
                }
                if check.kind == CheckKind::Classify {
                    let expect = check.expect.as_deref() == Some("lagrangian");
                    rows.push(format!("Lagrangian: {}", classes.lagrangian));
                    Ok(Record {
                        name: check.name.clone(),
                        passed: classes.lagrangian == expect,
                        worst: w.value,
                        at: w.at,
                        tol: CLASSIFY_TOL,
                        detail: format!("Lagrangian {} (expected {expect})", classes.lagrangian),
                        rows,
                    })
                } else {
                    let eq = equivalence_from(model, &classes);
                    Ok(Record {
                        name: check.name.clone(),
                        passed: eq.agree,
                        worst: w.value,
                        at: w.at,
                        tol: CLASSIFY_TOL,
                        detail: format!("isotropic and coisotropic {}, dense Lagrangian strata {}, agree {}", eq.left, eq.right, eq.agree),
                        rows,
                    })
                }
            }
            CheckKind::Exactness => {
                let model = sc.model.as_ref().expect("validated at load");
                let r = sc.retraction.as_ref().expect("validated at load");
                let omega = self.form(&check.form);
                let want_exact = check.expect.as_deref() == Some("exact");
                match exactness_primitive(omega, r, model, self.quadrature) {
                    Ok(lam) => {
                        let pts = sc.domain.grid(grid_per_axis(self.grid, n));
                        let (d, at) = lam.exterior_derivative().sub(omega)?.max_abs_over(&pts, None)?;
                        let mut rec = record(Worst { value: d, at: Some(at) }, format!("max |dλ − ω| {d:.3e}"));
                        rec.passed &= want_exact;
                        Ok(rec)
                    }
                    Err(Error::NotIsotropic { stratum, residual, obstruction }) => Ok(Record {
                        name: check.name.clone(),
                        passed: !want_exact,
                        worst: obstruction,
                        at: None,
                        tol,
                        detail: format!("refused: stratum `{stratum}` not isotropic ({residual:.2e}), r*ω obstruction {obstruction:.3e}"),
                        rows: Vec::new(),
                    }),
                    Err(e) => Err(e),
                }
            }
        }
    }
}
