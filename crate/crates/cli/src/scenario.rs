//! Scenario files: JSON with an explicit `schema_version`, parsed into records and then
//! resolved into toolkit objects. Resolution collects every problem it finds, each tagged
//! with the field path it came from.

use std::collections::BTreeMap;
use std::fmt;

use num_complex::Complex64;
use serde::Deserialize;
use skewprod::classifier::ClassifierConfig;
use skewprod::crossed::TermRecord;
use skewprod::law::LawRecord;
use skewprod::rotation::RotationRecord;
use skewprod::solver::SolverConfig;
use skewprod::states::MeasureSpec;
use skewprod::unitary::ExpansionConfig;
use skewprod::{CocycleSpec, CoefficientLaw, CpElement, FourierPoly, RotationNumber, UnitaryFn};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub schema_version: u32,
    pub name: String,
    #[serde(default)]
    pub description: String,
    /// One base angle per generator of the acting group.
    pub theta: Vec<RotationRecord>,
    pub alpha: RotationRecord,
    pub cocycles: BTreeMap<String, CocycleRecord>,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default = "default_n_max")]
    pub n_max: i64,
    /// Følner window schedule for the averaging tasks.
    #[serde(default = "default_windows")]
    pub windows: Vec<i64>,
    #[serde(default)]
    pub expansion: Option<ExpansionConfig>,
    pub tasks: Vec<TaskRecord>,
    #[serde(default)]
    pub outputs: Outputs,
}

fn default_n_max() -> i64 {
    12
}

fn default_windows() -> Vec<i64> {
    vec![10, 100, 1000]
}

/// Either trigonometric generators (one per base angle) or a coefficient law (`d = 1`).
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CocycleRecord {
    #[serde(default)]
    pub generators: Vec<GeneratorRecord>,
    #[serde(default)]
    pub law: Option<LawRecord>,
}

/// `u(x) = e^{2 pi i (winding x + lambda + phase(x))}`, all in turns.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneratorRecord {
    #[serde(default)]
    pub winding: i64,
    #[serde(default)]
    pub lambda: Option<Lambda>,
    /// `[[m, re, im], ...]`; must describe a real function.
    #[serde(default)]
    pub phase: Vec<(i64, f64, f64)>,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
pub enum Lambda {
    Turns(f64),
    ThetaMultiple { theta_multiple: i64 },
}

#[derive(Debug, Deserialize)]
#[serde(tag = "task", rename_all = "snake_case", deny_unknown_fields)]
pub enum TaskRecord {
    Classify {
        cocycle: String,
    },
    Coboundary {
        cocycle: String,
        #[serde(default = "one")]
        level: i64,
    },
    Average {
        cocycle: String,
        /// Defaults to `V`.
        #[serde(default)]
        element: Option<Vec<TermRecord>>,
        /// Defaults to the scenario schedule.
        #[serde(default)]
        windows: Option<Vec<i64>>,
    },
    States {
        cocycle: String,
        measures: BTreeMap<String, MeasureSpec>,
        #[serde(default = "three")]
        radius: i64,
        #[serde(default = "twenty")]
        window: i64,
        #[serde(default = "ten")]
        samples: usize,
    },
    Conjugacy {
        u: String,
        v: String,
        #[serde(default = "eight")]
        window: i64,
    },
}

fn one() -> i64 {
    1
}
fn three() -> i64 {
    3
}
fn eight() -> i64 {
    8
}
fn ten() -> usize {
    10
}
fn twenty() -> i64 {
    20
}

#[derive(Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Outputs {
    pub report: String,
    pub cesaro: String,
    pub levels: String,
    pub timings: String,
}

impl Default for Outputs {
    fn default() -> Self {
        Self {
            report: "report.json".into(),
            cesaro: "cesaro.csv".into(),
            levels: "levels.csv".into(),
            timings: "timings.json".into(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Diagnostic {
    pub path: String,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

/// A scenario that failed to parse or resolve.
#[derive(Debug)]
pub struct SchemaError(pub Vec<Diagnostic>);

impl fmt::Display for SchemaError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, d) in self.0.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{d}")?;
        }
        Ok(())
    }
}

pub fn parse(text: &str) -> Result<(ScenarioFile, serde_json::Value), SchemaError> {
    let fail = |path: String, message: String| SchemaError(vec![Diagnostic { path, message }]);
    let value: serde_json::Value = serde_json::from_str(text).map_err(|e| fail("$".into(), e.to_string()))?;
    let mut de = serde_json::Deserializer::from_str(text);
    let file: ScenarioFile = serde_path_to_error::deserialize(&mut de).map_err(|e| {
        let path = e.path().to_string();
        fail(if path == "." { "$".into() } else { path }, e.into_inner().to_string())
    })?;
    Ok((file, value))
}

#[derive(Debug)]
pub enum Task {
    Classify { cocycle: String },
    Coboundary { cocycle: String, level: i64 },
    Average { cocycle: String, element: CpElement, windows: Vec<i64> },
    States { cocycle: String, measures: BTreeMap<String, MeasureSpec>, radius: i64, window: i64, samples: usize },
    Conjugacy { u: String, v: String, window: i64 },
}

impl Task {
    pub fn kind(&self) -> &'static str {
        match self {
            Task::Classify { .. } => "classify",
            Task::Coboundary { .. } => "coboundary",
            Task::Average { .. } => "average",
            Task::States { .. } => "states",
            Task::Conjugacy { .. } => "conjugacy",
        }
    }
}

#[derive(Debug)]
pub struct Scenario {
    pub name: String,
    pub description: String,
    pub specs: BTreeMap<String, CocycleSpec>,
    pub classifier: ClassifierConfig,
    pub expansion: ExpansionConfig,
    pub tasks: Vec<Task>,
    pub outputs: Outputs,
}

struct Resolver {
    diags: Vec<Diagnostic>,
}

impl Resolver {
    fn push(&mut self, path: impl Into<String>, message: impl fmt::Display) {
        self.diags.push(Diagnostic { path: path.into(), message: message.to_string() });
    }

    fn range(&mut self, path: impl Into<String>, v: i64, lo: i64, hi: i64) {
        if !(lo..=hi).contains(&v) {
            self.push(path, format!("{v} is outside the allowed range {lo}..={hi}"));
        }
    }

    fn rotation(&mut self, path: String, r: &RotationRecord) -> Option<RotationNumber> {
        match RotationNumber::try_from(r.clone()) {
            Ok(x) => Some(x),
            Err(e) => {
                self.push(path, e);
                None
            }
        }
    }

    fn generator(&mut self, path: String, g: &GeneratorRecord, theta: &RotationNumber) -> Option<UnitaryFn> {
        let lambda = match g.lambda {
            None => 0.0,
            Some(Lambda::Turns(t)) => t,
            Some(Lambda::ThetaMultiple { theta_multiple }) => theta.frac_multiple(theta_multiple),
        };
        if !lambda.is_finite() {
            self.push(format!("{path}.lambda"), "must be finite");
            return None;
        }
        let phase = FourierPoly::from_coeffs(
            g.phase.iter().map(|&(m, re, im)| (m, Complex64::new(re, im))).chain([(0, Complex64::new(lambda, 0.0))]),
        );
        match UnitaryFn::new(g.winding, phase) {
            Ok(u) => Some(u),
            Err(e) => {
                self.push(format!("{path}.phase"), e);
                None
            }
        }
    }

    fn cocycle(&mut self, path: String, c: &CocycleRecord, thetas: &[RotationNumber], alpha: &RotationNumber) -> Option<CocycleSpec> {
        match (&c.law, c.generators.is_empty()) {
            (Some(_), false) => {
                self.push(path, "give either `generators` or `law`, not both");
                None
            }
            (None, true) => {
                self.push(path, "needs `generators` or `law`");
                None
            }
            (Some(law), true) => {
                if thetas.len() != 1 {
                    self.push(format!("{path}.law"), "coefficient laws need a single base angle");
                    return None;
                }
                let law = match CoefficientLaw::try_from(law.clone()) {
                    Ok(l) => l,
                    Err(e) => {
                        self.push(format!("{path}.law"), e);
                        return None;
                    }
                };
                CocycleSpec::from_law(thetas[0].clone(), alpha.clone(), law).map_err(|e| self.push(format!("{path}.law"), e)).ok()
            }
            (None, false) => {
                if c.generators.len() != thetas.len() {
                    self.push(
                        format!("{path}.generators"),
                        format!("expected {} generators (one per base angle), got {}", thetas.len(), c.generators.len()),
                    );
                    return None;
                }
                let gens: Vec<Option<UnitaryFn>> = c
                    .generators
                    .iter()
                    .zip(thetas)
                    .enumerate()
                    .map(|(i, (g, t))| self.generator(format!("{path}.generators[{i}]"), g, t))
                    .collect();
                let gens: Option<Vec<UnitaryFn>> = gens.into_iter().collect();
                CocycleSpec::new(thetas.to_vec(), alpha.clone(), gens?).map_err(|e| self.push(format!("{path}.generators"), e)).ok()
            }
        }
    }

    fn reference(&mut self, path: String, name: &str, specs: &BTreeMap<String, Option<CocycleSpec>>) -> Option<CocycleSpec> {
        match specs.get(name) {
            None => {
                self.push(path, format!("unknown cocycle `{name}`"));
                None
            }
            Some(s) => s.clone(),
        }
    }

    fn trigonometric(&mut self, path: String, name: &str, kind: &str, spec: &CocycleSpec) {
        if spec.is_analytic() {
            self.push(path, format!("`{name}` is law-defined; {kind} needs trigonometric generators"));
        }
    }
}

fn is_trivial(spec: &CocycleSpec) -> bool {
    !spec.is_analytic() && spec.generators().iter().all(|u| u.winding() == 0 && u.is_constant() && u.phase_mean() == 0.0)
}

/// Schema and invariant checks; no numerical work beyond building the objects.
pub fn resolve(file: ScenarioFile) -> Result<Scenario, SchemaError> {
    let mut r = Resolver { diags: Vec::new() };
    if file.schema_version != SCHEMA_VERSION {
        r.push("schema_version", format!("unsupported version {} (expected {SCHEMA_VERSION})", file.schema_version));
    }
    if file.name.trim().is_empty() {
        r.push("name", "must not be empty");
    }
    if file.theta.is_empty() {
        r.push("theta", "needs at least one base angle");
    }
    let thetas: Vec<Option<RotationNumber>> =
        file.theta.iter().enumerate().map(|(i, t)| r.rotation(format!("theta[{i}]"), t)).collect();
    let alpha = r.rotation("alpha".into(), &file.alpha);
    r.range("n_max", file.n_max, 1, 64);
    if file.windows.is_empty() {
        r.push("windows", "needs at least one window");
    }
    for (i, &w) in file.windows.iter().enumerate() {
        r.range(format!("windows[{i}]"), w, 1, 1_000_000);
    }
    let s = &file.solver;
    if !(s.tol > 0.0 && s.tol < 1.0) {
        r.push("solver.tol", format!("{} must lie in (0, 1)", s.tol));
    }
    if s.depth < 1 {
        r.push("solver.depth", "must be at least 1");
    }
    if s.detector.battery > s.detector.band {
        r.push("solver.detector.battery", "must not exceed solver.detector.band");
    }
    if s.detector.iterations < 1 {
        r.push("solver.detector.iterations", "must be at least 1");
    }
    let expansion = file.expansion.unwrap_or_default();
    if expansion.cap < 1 || expansion.cap > 1 << 24 {
        r.push("expansion.cap", format!("{} is outside the allowed range 1..={}", expansion.cap, 1 << 24));
    }
    if file.cocycles.is_empty() {
        r.push("cocycles", "needs at least one cocycle");
    }
    if file.tasks.is_empty() {
        r.push("tasks", "needs at least one task");
    }
    for (key, path) in [
        (&file.outputs.report, "outputs.report"),
        (&file.outputs.cesaro, "outputs.cesaro"),
        (&file.outputs.levels, "outputs.levels"),
        (&file.outputs.timings, "outputs.timings"),
    ] {
        let p = std::path::Path::new(key);
        if key.is_empty() || p.is_absolute() || p.components().any(|c| matches!(c, std::path::Component::ParentDir)) {
            r.push(path, format!("`{key}` must be a relative path inside the output directory"));
        }
    }

    let thetas: Option<Vec<RotationNumber>> = thetas.into_iter().collect();
    let specs: BTreeMap<String, Option<CocycleSpec>> = match (&thetas, &alpha) {
        (Some(t), Some(a)) if !t.is_empty() => file
            .cocycles
            .iter()
            .map(|(name, c)| (name.clone(), r.cocycle(format!("cocycles.{name}"), c, t, a)))
            .collect(),
        _ => file.cocycles.keys().map(|n| (n.clone(), None)).collect(),
    };

    let a = alpha.as_ref().map_or(0.0, RotationNumber::value);
    let mut tasks = Vec::new();
    for (i, t) in file.tasks.into_iter().enumerate() {
        let p = format!("tasks[{i}]");
        let task = match t {
            TaskRecord::Classify { cocycle } => {
                r.reference(format!("{p}.cocycle"), &cocycle, &specs);
                Task::Classify { cocycle }
            }
            TaskRecord::Coboundary { cocycle, level } => {
                r.reference(format!("{p}.cocycle"), &cocycle, &specs);
                if level == 0 {
                    r.push(format!("{p}.level"), "level must be nonzero");
                }
                r.range(format!("{p}.level"), level, -10_000, 10_000);
                Task::Coboundary { cocycle, level }
            }
            TaskRecord::Average { cocycle, element, windows } => {
                if let Some(spec) = r.reference(format!("{p}.cocycle"), &cocycle, &specs) {
                    r.trigonometric(format!("{p}.cocycle"), &cocycle, "average", &spec);
                }
                let windows = windows.unwrap_or_else(|| file.windows.clone());
                if windows.is_empty() {
                    r.push(format!("{p}.windows"), "needs at least one window");
                }
                for (j, &w) in windows.iter().enumerate() {
                    r.range(format!("{p}.windows[{j}]"), w, 1, 1_000_000);
                }
                let element = match element {
                    None => CpElement::monomial(a, FourierPoly::one(), 1),
                    Some(rec) => CpElement::from_records(a, &rec).unwrap_or_else(|e| {
                        r.push(format!("{p}.element"), e);
                        CpElement::zero(a)
                    }),
                };
                if element.is_zero() {
                    r.push(format!("{p}.element"), "element is zero");
                }
                Task::Average { cocycle, element, windows }
            }
            TaskRecord::States { cocycle, measures, radius, window, samples } => {
                if let Some(spec) = r.reference(format!("{p}.cocycle"), &cocycle, &specs) {
                    r.trigonometric(format!("{p}.cocycle"), &cocycle, "states", &spec);
                }
                if measures.is_empty() {
                    r.push(format!("{p}.measures"), "needs at least one measure");
                }
                for (name, m) in &measures {
                    if let Err(e) = m.validate() {
                        r.push(format!("{p}.measures.{name}"), e);
                    }
                }
                r.range(format!("{p}.radius"), radius, 1, 16);
                r.range(format!("{p}.window"), window, 1, 1000);
                r.range(format!("{p}.samples"), samples as i64, 1, 1000);
                Task::States { cocycle, measures, radius, window, samples }
            }
            TaskRecord::Conjugacy { u, v, window } => {
                let su = r.reference(format!("{p}.u"), &u, &specs);
                let sv = r.reference(format!("{p}.v"), &v, &specs);
                if let (Some(su), Some(sv)) = (su, sv) {
                    let law_pair = (su.is_analytic() && !is_trivial(&sv)) || (sv.is_analytic() && !is_trivial(&su));
                    if law_pair {
                        r.push(p.clone(), "a law-defined cocycle can only be compared with the trivial cocycle");
                    }
                }
                r.range(format!("{p}.window"), window, 1, 1000);
                Task::Conjugacy { u, v, window }
            }
        };
        tasks.push(task);
    }

    if !r.diags.is_empty() {
        return Err(SchemaError(r.diags));
    }
    let classifier = ClassifierConfig { n_max: file.n_max, solver: file.solver, ..ClassifierConfig::default() };
    Ok(Scenario {
        name: file.name,
        description: file.description,
        specs: specs.into_iter().map(|(k, v)| (k, v.expect("resolved without diagnostics"))).collect(),
        classifier,
        expansion,
        tasks,
        outputs: file.outputs,
    })
}

pub fn load(text: &str) -> Result<(Scenario, serde_json::Value), SchemaError> {
    let (file, value) = parse(text)?;
    Ok((resolve(file)?, value))
}
