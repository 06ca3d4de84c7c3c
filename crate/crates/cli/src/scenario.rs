//! Line-oriented scenario files.
//!
//! ```text
//! name = weak-moser-example
//!
//! [chart]
//! coords = x y
//! box = -1.5 1.5, -0.5 0.5
//!
//! [form omega1]
//! dx^dy = 1 + y
//!
//! [checks]
//! moser from=omega0 to=omega1 tol=1e-6
//! ```
//!
//! `#` starts a comment. Expressions may use the chart coordinates and the
//! names declared under `[exprs]`.

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Arc;

use stratsym::expr::ExprError;
use stratsym::homotopy::{FlatSubspace, Retraction, Subset};
use stratsym::strata::{models, StratifiedModel};
use stratsym::{parse_expr, Chart, DifferentialForm, DomainBox, Expr, SmoothMap, VectorField};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum LoadError {
    #[error("line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },
    #[error("line {line}, column {column}: unresolved reference `{name}`")]
    Unresolved { line: usize, column: usize, name: String },
    #[error("line {line}: dimension mismatch: {message}")]
    Dimension { line: usize, message: String },
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("line {line}: {source}")]
    Core { line: usize, source: stratsym::Error },
}

type Result<T> = std::result::Result<T, LoadError>;

#[derive(Debug, Clone)]
pub struct FieldDecl {
    pub field: VectorField,
    /// Leading coordinates tangent to the submanifold the field is Euler-like along.
    pub split: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CheckKind {
    Primitive,
    Moser,
    FixesB,
    Differential,
    DifferentialIdentity,
    EulerLike,
    Semigroup,
    TubularInverse,
    TubularDifferential,
    NormalBundle,
    Classify,
    Equivalence,
    Exactness,
}

impl CheckKind {
    pub const ALL: [CheckKind; 13] = [
        CheckKind::Primitive,
        CheckKind::Moser,
        CheckKind::FixesB,
        CheckKind::Differential,
        CheckKind::DifferentialIdentity,
        CheckKind::EulerLike,
        CheckKind::Semigroup,
        CheckKind::TubularInverse,
        CheckKind::TubularDifferential,
        CheckKind::NormalBundle,
        CheckKind::Classify,
        CheckKind::Equivalence,
        CheckKind::Exactness,
    ];

    pub fn keyword(self) -> &'static str {
        match self {
            CheckKind::Primitive => "primitive",
            CheckKind::Moser => "moser",
            CheckKind::FixesB => "fixes-b",
            CheckKind::Differential => "differential",
            CheckKind::DifferentialIdentity => "differential-identity",
            CheckKind::EulerLike => "euler-like",
            CheckKind::Semigroup => "semigroup",
            CheckKind::TubularInverse => "tubular-inverse",
            CheckKind::TubularDifferential => "tubular-differential",
            CheckKind::NormalBundle => "normal-bundle",
            CheckKind::Classify => "classify",
            CheckKind::Equivalence => "equivalence",
            CheckKind::Exactness => "exactness",
        }
    }

    pub fn default_tol(self) -> f64 {
        match self {
            CheckKind::Primitive => 1e-9,
            CheckKind::Moser | CheckKind::FixesB | CheckKind::DifferentialIdentity => 1e-6,
            CheckKind::Differential => 1e-3,
            CheckKind::Semigroup | CheckKind::TubularInverse => 1e-6,
            CheckKind::TubularDifferential => 1e-4,
            CheckKind::NormalBundle => 1e-6,
            CheckKind::Classify | CheckKind::Equivalence => 1e-9,
            CheckKind::Exactness => 1e-7,
            CheckKind::EulerLike => 0.2,
        }
    }

    fn from_keyword(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.keyword() == s)
    }

    /// Option keys a check of this kind accepts besides `name` and `tol`.
    fn keys(self) -> &'static [&'static str] {
        match self {
            CheckKind::Primitive => &["from", "to", "box"],
            CheckKind::Moser | CheckKind::FixesB | CheckKind::DifferentialIdentity => &["from", "to", "box"],
            CheckKind::Differential => &["from", "to", "at", "entry", "expect"],
            CheckKind::EulerLike => &["field", "expect"],
            CheckKind::Semigroup | CheckKind::TubularDifferential | CheckKind::NormalBundle => &["field", "box"],
            CheckKind::TubularInverse => &["field", "box", "base", "vector"],
            CheckKind::Classify => &["form", "expect"],
            CheckKind::Equivalence => &["form"],
            CheckKind::Exactness => &["form", "expect"],
        }
    }
}

/// One requested check with its options resolved against the scenario.
#[derive(Debug, Clone)]
pub struct Check {
    pub name: String,
    pub kind: CheckKind,
    pub tol: f64,
    pub line: usize,
    pub from: Option<String>,
    pub to: Option<String>,
    pub field: Option<String>,
    pub form: Option<String>,
    pub bx: Option<DomainBox>,
    pub at: Option<Vec<f64>>,
    pub entry: Option<(usize, usize)>,
    pub expect: Option<String>,
    /// Closed forms of `ψ⁻¹`, base point and vector.
    pub base: Option<Vec<Expr>>,
    pub vector: Option<Vec<Expr>>,
}

#[derive(Debug, Clone)]
pub struct Settings {
    pub grid: usize,
    pub step: f64,
    pub quadrature: usize,
}

impl Default for Settings {
    fn default() -> Self {
        Settings { grid: 20, step: 1e-3, quadrature: 8 }
    }
}

#[derive(Debug, Clone)]
pub struct Scenario {
    pub name: String,
    pub description: String,
    pub chart: Chart,
    pub domain: DomainBox,
    pub exprs: BTreeMap<String, Expr>,
    pub forms: BTreeMap<String, DifferentialForm>,
    pub fields: BTreeMap<String, FieldDecl>,
    pub retraction: Option<Retraction>,
    pub model: Option<Arc<StratifiedModel>>,
    pub checks: Vec<Check>,
    pub settings: Settings,
}

pub fn load_scenario(path: &Path) -> Result<Scenario> {
    let text = std::fs::read_to_string(path).map_err(|source| LoadError::Io { path: path.display().to_string(), source })?;
    parse_scenario(&text)
}

/// A trimmed piece of a source line together with its 1-based column.
#[derive(Clone, Copy)]
struct Span<'a> {
    text: &'a str,
    line: usize,
    column: usize,
}

impl<'a> Span<'a> {
    fn trim(self) -> Span<'a> {
        let lead = self.text.len() - self.text.trim_start().len();
        Span { text: self.text.trim(), line: self.line, column: self.column + lead }
    }

    fn split_once(self, sep: char) -> Option<(Span<'a>, Span<'a>)> {
        let i = self.text.find(sep)?;
        let left = Span { text: &self.text[..i], ..self };
        let right = Span { text: &self.text[i + sep.len_utf8()..], column: self.column + i + sep.len_utf8(), ..self };
        Some((left.trim(), right.trim()))
    }

    fn split(self, sep: char) -> Vec<Span<'a>> {
        let mut out = Vec::new();
        let mut start = 0;
        for (i, c) in self.text.char_indices().chain([(self.text.len(), sep)]) {
            if c == sep {
                out.push(Span { text: &self.text[start..i], column: self.column + start, ..self }.trim());
                start = i + c.len_utf8();
            }
        }
        out
    }

    fn words(self) -> Vec<Span<'a>> {
        let mut out = Vec::new();
        let mut start = None;
        for (i, c) in self.text.char_indices().chain([(self.text.len(), ' ')]) {
            match (c.is_whitespace(), start) {
                (true, Some(s)) => {
                    out.push(Span { text: &self.text[s..i], column: self.column + s, ..self });
                    start = None;
                }
                (false, None) => start = Some(i),
                _ => {}
            }
        }
        out
    }

    fn error(self, message: impl Into<String>) -> LoadError {
        LoadError::Parse { line: self.line, column: self.column, message: message.into() }
    }

    fn number(self) -> Result<f64> {
        self.text.parse().map_err(|_| self.error(format!("expected a number, found `{}`", self.text)))
    }

    fn integer(self) -> Result<usize> {
        self.text.parse().map_err(|_| self.error(format!("expected a non-negative integer, found `{}`", self.text)))
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Section {
    Top,
    Chart,
    Exprs,
    Form(String),
    Field(String),
    Retraction,
    Model,
    Checks,
}

struct Builder {
    name: Option<String>,
    description: String,
    coords: Option<Chart>,
    domain: Option<(DomainBox, usize)>,
    exprs: BTreeMap<String, Expr>,
    forms: BTreeMap<String, (usize, Option<usize>, Vec<(Vec<usize>, Expr)>)>,
    fields: BTreeMap<String, (usize, Option<usize>, BTreeMap<usize, Expr>)>,
    retraction: BTreeMap<String, (String, usize, usize)>,
    retraction_line: usize,
    model: Option<(String, usize, usize)>,
    checks: Vec<(usize, usize, String)>,
    settings: Settings,
}

pub fn parse_scenario(text: &str) -> Result<Scenario> {
    let mut b = Builder {
        name: None,
        description: String::new(),
        coords: None,
        domain: None,
        exprs: BTreeMap::new(),
        forms: BTreeMap::new(),
        fields: BTreeMap::new(),
        retraction: BTreeMap::new(),
        retraction_line: 0,
        model: None,
        checks: Vec::new(),
        settings: Settings::default(),
    };
    let mut section = Section::Top;
    let mut seen: Vec<Section> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let content = raw.split('#').next().unwrap_or("");
        let span = Span { text: content, line: i + 1, column: 1 }.trim();
        if span.text.is_empty() {
            continue;
        }
        if span.text.starts_with('[') {
            section = parse_header(span)?;
            if seen.contains(&section) {
                return Err(span.error("duplicate section"));
            }
            if !matches!(section, Section::Chart) && b.coords.is_none() {
                return Err(span.error("[chart] must come first"));
            }
            match &section {
                Section::Form(name) if b.forms.contains_key(name) || b.fields.contains_key(name) => {
                    return Err(span.error(format!("`{name}` declared twice")));
                }
                Section::Field(name) if b.forms.contains_key(name) || b.fields.contains_key(name) => {
                    return Err(span.error(format!("`{name}` declared twice")));
                }
                Section::Form(name) => {
                    b.forms.insert(name.clone(), (span.line, None, Vec::new()));
                }
                Section::Field(name) => {
                    b.fields.insert(name.clone(), (span.line, None, BTreeMap::new()));
                }
                Section::Retraction => b.retraction_line = span.line,
                _ => {}
            }
            seen.push(section.clone());
            continue;
        }
        match &section {
            Section::Checks => b.checks.push((span.line, span.column, span.text.to_string())),
            s => {
                let (key, value) = span.split_once('=').ok_or_else(|| span.error("expected `key = value`"))?;
                if key.text.is_empty() {
                    return Err(key.error("missing key"));
                }
                b.entry(s, key, value)?;
            }
        }
    }
    b.finish()
}

fn parse_header(span: Span<'_>) -> Result<Section> {
    let inner = span
        .text
        .strip_prefix('[')
        .and_then(|s| s.strip_suffix(']'))
        .ok_or_else(|| span.error("malformed section header"))?;
    let inner = Span { text: inner, column: span.column + 1, ..span };
    let words = inner.words();
    let named = |w: &[Span<'_>]| -> Result<String> {
        match w {
            [_, name] if is_identifier(name.text) => Ok(name.text.to_string()),
            [_, name] => Err(name.error(format!("invalid name `{}`", name.text))),
            _ => Err(inner.error("expected a single name")),
        }
    };
    match words.first().map(|w| w.text) {
        Some("chart") if words.len() == 1 => Ok(Section::Chart),
        Some("exprs") if words.len() == 1 => Ok(Section::Exprs),
        Some("retraction") if words.len() == 1 => Ok(Section::Retraction),
        Some("model") if words.len() == 1 => Ok(Section::Model),
        Some("checks") if words.len() == 1 => Ok(Section::Checks),
        Some("form") => Ok(Section::Form(named(&words)?)),
        Some("field") => Ok(Section::Field(named(&words)?)),
        _ => Err(span.error(format!("unknown section `{}`", span.text))),
    }
}

fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-')
}

fn expr_error(span: Span<'_>, e: ExprError) -> LoadError {
    match e {
        ExprError::UnknownIdentifier { offset, name } => {
            LoadError::Unresolved { line: span.line, column: span.column + offset, name }
        }
        ExprError::Syntax { offset, message } => {
            LoadError::Parse { line: span.line, column: span.column + offset, message }
        }
        other => span.error(other.to_string()),
    }
}

impl Builder {
    fn chart(&self) -> &Chart {
        self.coords.as_ref().expect("chart parsed first")
    }

    fn expr(&self, span: Span<'_>, with_time: bool) -> Result<Expr> {
        let mut vars: Vec<&str> = self.chart().name_refs();
        if with_time {
            vars.push("t");
        }
        vars.extend(self.exprs.keys().map(String::as_str));
        let e = parse_expr(span.text, &vars).map_err(|e| expr_error(span, e))?;
        Ok(e.substitute(&self.exprs))
    }

    fn coordinate(&self, span: Span<'_>) -> Result<usize> {
        self.chart().index_of(span.text).ok_or_else(|| LoadError::Unresolved {
            line: span.line,
            column: span.column,
            name: span.text.to_string(),
        })
    }

    fn entry(&mut self, section: &Section, key: Span<'_>, value: Span<'_>) -> Result<()> {
        match section {
            Section::Top => match key.text {
                "name" => self.name = Some(value.text.to_string()),
                "description" => self.description = value.text.to_string(),
                "grid" => self.settings.grid = value.integer()?,
                "step" => self.settings.step = value.number()?,
                "quadrature" => self.settings.quadrature = value.integer()?,
                _ => return Err(key.error(format!("unknown setting `{}`", key.text))),
            },
            Section::Chart => match key.text {
                "coords" => {
                    let names: Vec<&str> = value.words().iter().map(|w| w.text).collect();
                    if let Some(bad) = value.words().into_iter().find(|w| !is_identifier(w.text) || w.text == "t") {
                        return Err(bad.error(format!("invalid coordinate name `{}`", bad.text)));
                    }
                    if names.is_empty() {
                        return Err(value.error("no coordinates"));
                    }
                    self.coords = Some(Chart::new(&names));
                }
                "box" => {
                    let mut lo = Vec::new();
                    let mut hi = Vec::new();
                    for axis in value.split(',') {
                        let w = axis.words();
                        if w.len() != 2 {
                            return Err(axis.error("expected `lo hi`"));
                        }
                        let (a, b) = (w[0].number()?, w[1].number()?);
                        if !(a <= b) {
                            return Err(axis.error("empty interval"));
                        }
                        lo.push(a);
                        hi.push(b);
                    }
                    self.domain = Some((DomainBox::new(lo, hi), key.line));
                }
                _ => return Err(key.error(format!("unknown chart key `{}`", key.text))),
            },
            Section::Exprs => {
                if !is_identifier(key.text) || self.chart().index_of(key.text).is_some() || key.text == "t" {
                    return Err(key.error(format!("invalid expression name `{}`", key.text)));
                }
                let e = self.expr(value, false)?;
                self.exprs.insert(key.text.to_string(), e);
            }
            Section::Form(name) => {
                if key.text == "degree" {
                    let d = value.integer()?;
                    self.forms.get_mut(name).expect("declared").1 = Some(d);
                    return Ok(());
                }
                let idx = if key.text == "1" {
                    Vec::new()
                } else {
                    key.split('^')
                        .into_iter()
                        .map(|part| {
                            let coord = part
                                .text
                                .strip_prefix('d')
                                .ok_or_else(|| part.error(format!("expected a differential `d<coord>`, found `{}`", part.text)))?;
                            self.coordinate(Span { text: coord, column: part.column + 1, ..part })
                        })
                        .collect::<Result<_>>()?
                };
                let e = self.expr(value, false)?;
                let entry = self.forms.get_mut(name).expect("declared");
                if let Some((first, _)) = entry.2.first() {
                    if first.len() != idx.len() {
                        return Err(LoadError::Dimension {
                            line: key.line,
                            message: format!("term of degree {} in a form of degree {}", idx.len(), first.len()),
                        });
                    }
                }
                entry.2.push((idx, e));
            }
            Section::Field(name) => {
                if key.text == "split" {
                    let k = value.integer()?;
                    if k > self.chart().dim() {
                        return Err(LoadError::Dimension {
                            line: key.line,
                            message: format!("split {k} exceeds the chart dimension {}", self.chart().dim()),
                        });
                    }
                    self.fields.get_mut(name).expect("declared").1 = Some(k);
                    return Ok(());
                }
                let i = self.coordinate(key)?;
                let e = self.expr(value, false)?;
                if self.fields.get_mut(name).expect("declared").2.insert(i, e).is_some() {
                    return Err(key.error(format!("component `{}` given twice", key.text)));
                }
            }
            Section::Retraction => match key.text {
                "kind" | "onto" | "map" | "strong" => {
                    self.retraction.insert(key.text.to_string(), (value.text.to_string(), value.line, value.column));
                }
                _ => return Err(key.error(format!("unknown retraction key `{}`", key.text))),
            },
            Section::Model => match key.text {
                "builtin" => self.model = Some((value.text.to_string(), value.line, value.column)),
                _ => return Err(key.error(format!("unknown model key `{}`", key.text))),
            },
            Section::Checks => unreachable!("check lines are kept verbatim"),
        }
        Ok(())
    }

    fn finish(self) -> Result<Scenario> {
        let chart = self.coords.clone().ok_or(LoadError::Parse {
            line: 1,
            column: 1,
            message: "missing [chart] coords".into(),
        })?;
        let domain = match &self.domain {
            Some((bx, line)) if bx.dim() != chart.dim() => {
                return Err(LoadError::Dimension {
                    line: *line,
                    message: format!("box has {} axes for {} coordinates", bx.dim(), chart.dim()),
                })
            }
            Some((bx, _)) => bx.clone(),
            None => DomainBox::cube(chart.dim(), 1.0),
        };
        let mut forms = BTreeMap::new();
        for (name, (line, degree, terms)) in &self.forms {
            let found = terms.first().map(|t| t.0.len());
            let degree = match (degree, found) {
                (Some(d), Some(f)) if *d != f => {
                    return Err(LoadError::Dimension { line: *line, message: format!("`{name}` declared of degree {d} with terms of degree {f}") })
                }
                (Some(d), _) => *d,
                (None, Some(f)) => f,
                (None, None) => return Err(LoadError::Dimension { line: *line, message: format!("empty form `{name}` needs `degree`") }),
            };
            if degree > chart.dim() {
                return Err(LoadError::Dimension { line: *line, message: format!("degree {degree} exceeds the chart dimension") });
            }
            let form = DifferentialForm::from_terms(&chart, degree, terms.iter().cloned())
                .map_err(|source| LoadError::Core { line: *line, source })?;
            forms.insert(name.clone(), form);
        }
        let mut fields = BTreeMap::new();
        for (name, (line, split, comps)) in &self.fields {
            let comps = (0..chart.dim()).map(|i| comps.get(&i).cloned().unwrap_or_else(Expr::zero)).collect();
            let field = VectorField::new(&chart, comps).map_err(|source| LoadError::Core { line: *line, source })?;
            fields.insert(name.clone(), FieldDecl { field, split: *split });
        }
        let model = match &self.model {
            Some((name, line, column)) => Some(Arc::new(models::by_name(name).ok_or_else(|| LoadError::Unresolved {
                line: *line,
                column: *column,
                name: name.clone(),
            })?)),
            None => None,
        };
        if let Some(m) = &model {
            if m.ambient() != &chart {
                return Err(LoadError::Dimension {
                    line: self.model.as_ref().map_or(0, |m| m.1),
                    message: format!("model `{}` lives on {:?}, the chart is {:?}", m.name, m.ambient().names(), chart.names()),
                });
            }
        }
        let retraction = self.build_retraction(&chart, &domain, model.clone())?;
        let mut scenario = Scenario {
            name: self.name.clone().unwrap_or_else(|| "unnamed".into()),
            description: self.description.clone(),
            chart,
            domain,
            exprs: self.exprs.clone(),
            forms,
            fields,
            retraction,
            model,
            checks: Vec::new(),
            settings: self.settings.clone(),
        };
        for (line, column, text) in &self.checks {
            let check = self.parse_check(Span { text, line: *line, column: *column }, &scenario)?;
            scenario.checks.push(check);
        }
        dedupe_names(&mut scenario.checks);
        Ok(scenario)
    }

    fn build_retraction(&self, chart: &Chart, domain: &DomainBox, model: Option<Arc<StratifiedModel>>) -> Result<Option<Retraction>> {
        if self.retraction.is_empty() {
            return Ok(None);
        }
        let line = self.retraction_line;
        let get = |k: &str| self.retraction.get(k).map(|(v, l, c)| Span { text: v.as_str(), line: *l, column: *c });
        let onto = get("onto").ok_or(LoadError::Parse { line, column: 1, message: "retraction needs `onto`".into() })?;
        let subset = if onto.text == "model" {
            let m = model.ok_or_else(|| onto.error("`onto = model` without a [model] section"))?;
            Subset::Model(m)
        } else {
            let normal = onto.words().into_iter().map(|w| self.coordinate(w)).collect::<Result<Vec<_>>>()?;
            Subset::Flat(FlatSubspace::new(chart.dim(), &normal).map_err(|source| LoadError::Core { line: onto.line, source })?)
        };
        let core = |source| LoadError::Core { line, source };
        let kind = get("kind").map_or("radial", |s| s.text);
        let r = match kind {
            "radial" => Retraction::radial(chart, domain.clone(), subset).map_err(core)?,
            "flat" => match subset {
                Subset::Flat(a) => Retraction::flat(chart, domain.clone(), a).map_err(core)?,
                Subset::Model(_) => return Err(onto.error("a flat retraction needs coordinates to collapse")),
            },
            "map" => {
                let text = get("map").ok_or(LoadError::Parse { line, column: 1, message: "`kind = map` needs `map`".into() })?;
                let comps = text.split(';').into_iter().map(|s| self.expr(s, true)).collect::<Result<Vec<_>>>()?;
                if comps.len() != chart.dim() {
                    return Err(LoadError::Dimension {
                        line: text.line,
                        message: format!("retraction has {} components for {} coordinates", comps.len(), chart.dim()),
                    });
                }
                let strong = match get("strong").map(|s| s.text) {
                    None | Some("false") => false,
                    Some("true") => true,
                    Some(_) => return Err(get("strong").expect("present").error("expected `true` or `false`")),
                };
                let map = SmoothMap::new(&chart.with_time(), chart, comps).map_err(core)?;
                Retraction::new(map, domain.clone(), subset, None, strong).map_err(core)?
            }
            other => return Err(get("kind").expect("present").error(format!("unknown retraction kind `{other}`"))),
        };
        Ok(Some(r))
    }

    fn parse_check(&self, span: Span<'_>, sc: &Scenario) -> Result<Check> {
        let words = span.words();
        let head = words[0];
        let kind = CheckKind::from_keyword(head.text).ok_or_else(|| head.error(format!("unknown check `{}`", head.text)))?;
        let mut check = Check {
            name: kind.keyword().to_string(),
            kind,
            tol: kind.default_tol(),
            line: span.line,
            from: None,
            to: None,
            field: None,
            form: None,
            bx: None,
            at: None,
            entry: None,
            expect: None,
            base: None,
            vector: None,
        };
        let n = sc.chart.dim();
        let mut given = Vec::new();
        for w in &words[1..] {
            let (key, value) = w.split_once('=').ok_or_else(|| w.error("expected `key=value`"))?;
            if given.contains(&key.text) {
                return Err(key.error(format!("option `{}` given twice", key.text)));
            }
            given.push(key.text);
            match key.text {
                "name" if is_identifier(value.text) => check.name = value.text.to_string(),
                "name" => return Err(value.error("invalid check name")),
                "tol" => check.tol = value.number()?,
                k if !kind.keys().contains(&k) => {
                    return Err(key.error(format!("`{}` does not take `{k}`", kind.keyword())));
                }
                "from" | "to" | "form" => {
                    let f = sc.forms.get(value.text).ok_or_else(|| unresolved(value))?;
                    if f.degree() != 2 {
                        return Err(LoadError::Dimension {
                            line: span.line,
                            message: format!("`{}` has degree {}, `{}` needs a 2-form", value.text, f.degree(), key.text),
                        });
                    }
                    let slot = match key.text {
                        "from" => &mut check.from,
                        "to" => &mut check.to,
                        _ => &mut check.form,
                    };
                    *slot = Some(value.text.to_string());
                }
                "field" => {
                    let f = sc.fields.get(value.text).ok_or_else(|| unresolved(value))?;
                    if f.split.is_none() {
                        return Err(value.error(format!("field `{}` has no `split`", value.text)));
                    }
                    check.field = Some(value.text.to_string());
                }
                "box" => {
                    let mut lo = Vec::new();
                    let mut hi = Vec::new();
                    for axis in value.split(',') {
                        let (a, b) = axis.split_once(':').ok_or_else(|| axis.error("expected `lo:hi`"))?;
                        lo.push(a.number()?);
                        hi.push(b.number()?);
                    }
                    if lo.len() != n {
                        return Err(LoadError::Dimension { line: span.line, message: format!("box has {} axes for {n} coordinates", lo.len()) });
                    }
                    check.bx = Some(DomainBox::new(lo, hi));
                }
                "at" => {
                    let p = value.split(',').into_iter().map(|s| s.number()).collect::<Result<Vec<_>>>()?;
                    if p.len() != n {
                        return Err(LoadError::Dimension { line: span.line, message: format!("point has {} coordinates, chart has {n}", p.len()) });
                    }
                    check.at = Some(p);
                }
                "entry" => {
                    let ij = value.split(',').into_iter().map(|s| s.integer()).collect::<Result<Vec<_>>>()?;
                    match ij[..] {
                        [i, j] if i < n && j < n => check.entry = Some((i, j)),
                        _ => return Err(LoadError::Dimension { line: span.line, message: format!("entry must be `i,j` below {n}") }),
                    }
                }
                "expect" => check.expect = Some(value.text.to_string()),
                "base" | "vector" => {
                    let es = value.split(',').into_iter().map(|s| self.expr(s, false)).collect::<Result<Vec<_>>>()?;
                    if es.len() != n {
                        return Err(LoadError::Dimension { line: span.line, message: format!("`{}` needs {n} expressions", key.text) });
                    }
                    if key.text == "base" {
                        check.base = Some(es);
                    } else {
                        check.vector = Some(es);
                    }
                }
                _ => unreachable!("keys() lists every option"),
            }
        }
        let missing = |what: &str| head.error(format!("`{}` needs `{what}=`", kind.keyword()));
        match kind {
            CheckKind::Primitive | CheckKind::Moser | CheckKind::FixesB | CheckKind::Differential | CheckKind::DifferentialIdentity => {
                check.from.as_ref().ok_or_else(|| missing("from"))?;
                check.to.as_ref().ok_or_else(|| missing("to"))?;
                if sc.retraction.is_none() {
                    return Err(head.error("needs a [retraction]"));
                }
                if kind == CheckKind::Differential {
                    check.at.as_ref().ok_or_else(|| missing("at"))?;
                    check.entry.ok_or_else(|| missing("entry"))?;
                    let e = check.expect.as_ref().ok_or_else(|| missing("expect"))?;
                    e.parse::<f64>().map_err(|_| head.error("`expect` must be a number"))?;
                }
            }
            CheckKind::EulerLike | CheckKind::Semigroup | CheckKind::TubularInverse | CheckKind::TubularDifferential | CheckKind::NormalBundle => {
                check.field.as_ref().ok_or_else(|| missing("field"))?;
                if kind == CheckKind::EulerLike {
                    expect_one_of(head, &check.expect, &["true", "false"])?;
                }
                if kind == CheckKind::TubularInverse && (check.base.is_none() || check.vector.is_none()) {
                    return Err(missing("base= and vector"));
                }
            }
            CheckKind::Classify | CheckKind::Equivalence | CheckKind::Exactness => {
                check.form.as_ref().ok_or_else(|| missing("form"))?;
                if sc.model.is_none() {
                    return Err(head.error("needs a [model]"));
                }
                match kind {
                    CheckKind::Classify => expect_one_of(head, &check.expect, &["lagrangian", "not-lagrangian"])?,
                    CheckKind::Exactness => {
                        if sc.retraction.is_none() {
                            return Err(head.error("needs a [retraction]"));
                        }
                        expect_one_of(head, &check.expect, &["exact", "not-isotropic"])?
                    }
                    _ => {}
                }
            }
        }
        Ok(check)
    }
}

fn unresolved(s: Span<'_>) -> LoadError {
    LoadError::Unresolved { line: s.line, column: s.column, name: s.text.to_string() }
}

fn expect_one_of(head: Span<'_>, value: &Option<String>, allowed: &[&str]) -> Result<()> {
    match value {
        Some(v) if allowed.contains(&v.as_str()) => Ok(()),
        _ => Err(head.error(format!("`expect` must be one of {allowed:?}"))),
    }
}

fn dedupe_names(checks: &mut [Check]) {
    let mut counts: BTreeMap<String, usize> = BTreeMap::new();
    for c in checks.iter_mut() {
        let n = counts.entry(c.name.clone()).or_default();
        *n += 1;
        if *n > 1 {
            c.name = format!("{}-{}", c.name, n);
        }
    }
}
