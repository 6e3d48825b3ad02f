//! Task execution and report emission. Data outputs contain no wall-clock values, so
//! identical scenario, seed and toolkit version give identical bytes; timings go to a
//! separate file.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};
use skewprod::classifier::{classify_level, classify_system, ClassificationReport, Flag};
use skewprod::conjugacy::are_cohomologous;
use skewprod::crossed::cesaro_average;
use skewprod::states::{check_invariance, expectation_onto_fixed_points, state_from_measure, WitnessTable};
use skewprod::unitary::expand_adaptive;
use skewprod::{CocycleSpec, CpElement, Error};

use crate::scenario::{Outputs, Scenario, SchemaError, Task};

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("{0}")]
    Schema(SchemaError),
    #[error("task {index} ({kind}): {source}")]
    Task { index: usize, kind: &'static str, source: Error },
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("`{0}` is neither a readable file nor a bundled scenario")]
    NotFound(String),
}

impl RunError {
    pub fn exit_code(&self) -> u8 {
        match self {
            RunError::Schema(_) => 2,
            RunError::Task { source, .. } if is_budget(source) => 3,
            _ => 1,
        }
    }
}

fn is_budget(e: &Error) -> bool {
    matches!(
        e,
        Error::BandOverflow { .. }
            | Error::DegreeOverflow { .. }
            | Error::ExpansionBudget { .. }
            | Error::GridBudget { .. }
            | Error::AliasingTooLarge { .. }
    )
}

#[derive(Debug, Serialize)]
pub struct CesaroRow {
    pub task: usize,
    pub cocycle: String,
    pub window: i64,
    pub gns_norm: f64,
}

#[derive(Debug, Serialize)]
pub struct LevelRow {
    pub task: usize,
    pub cocycle: String,
    pub level: i64,
    pub verdict: &'static str,
    pub certificate: String,
    pub measurable_excluded: &'static str,
    pub residual: Option<f64>,
}

#[derive(Debug, Serialize)]
pub struct Timing {
    pub task: usize,
    pub kind: &'static str,
    pub seconds: f64,
}

pub struct Artifacts {
    pub report: Value,
    pub cesaro: Vec<CesaroRow>,
    pub levels: Vec<LevelRow>,
    pub timings: Vec<Timing>,
}

struct Runner<'a> {
    scenario: &'a Scenario,
    seed: u64,
    reports: BTreeMap<String, ClassificationReport>,
    cesaro: Vec<CesaroRow>,
    levels: Vec<LevelRow>,
}

type TaskResult = std::result::Result<Value, Error>;

impl Runner<'_> {
    fn spec(&self, name: &str) -> &CocycleSpec {
        &self.scenario.specs[name]
    }

    fn report(&mut self, name: &str) -> Result<&ClassificationReport, Error> {
        if !self.reports.contains_key(name) {
            let r = classify_system(self.spec(name), &self.scenario.classifier)?;
            self.reports.insert(name.to_string(), r);
        }
        Ok(&self.reports[name])
    }

    fn classify(&mut self, index: usize, cocycle: &str) -> TaskResult {
        let report = self.report(cocycle)?.clone();
        for l in &report.levels {
            self.levels.push(LevelRow {
                task: index,
                cocycle: cocycle.to_string(),
                level: l.level,
                verdict: l.verdict.tag().name(),
                certificate: l.verdict.certificate().map_or(String::new(), |c| c.name().to_string()),
                measurable_excluded: l.measurable_excluded.name(),
                residual: l.verdict.residual(),
            });
        }
        Ok(json!({ "classification": report, "consistency": report.validate() }))
    }

    fn average(&mut self, index: usize, cocycle: &str, x: &CpElement, windows: &[i64]) -> TaskResult {
        let cfg = self.scenario.expansion;
        let spec = &self.scenario.specs[cocycle];
        let mut series = Vec::new();
        for &w in windows {
            let norm = cesaro_average(spec, x, w, &cfg)?.gns_norm();
            series.push(json!({ "window": w, "gns_norm": norm }));
            self.cesaro.push(CesaroRow { task: index, cocycle: cocycle.to_string(), window: w, gns_norm: norm });
        }
        let wmax = windows.iter().copied().max().unwrap_or(1);
        let est = expectation_onto_fixed_points(spec, x, wmax, &cfg)?;
        let degree_norms: Vec<(i64, f64)> = est.limit.terms().map(|(n, a)| (n, a.l2_norm_sqr().sqrt())).collect();
        // proportionality to the witnesses needs a fixed-point generator
        let report = self.reports.get(cocycle);
        let witness_residual = match report {
            Some(r) if r.n0 >= 1 => {
                let table = WitnessTable::from_report(r, x.support_radius().max(1), x.alpha())?;
                Some(est.witness_residual(&table, &cfg)?)
            }
            _ => None,
        };
        Ok(json!({
            "element": x.to_records(),
            "series": series,
            "fixed_point_estimate": {
                "window": est.window,
                "stability": est.stability,
                "limit_window": est.limit_window,
                "limit_gns_norm": est.limit.gns_norm(),
                "limit_degree_norms": degree_norms,
                "witness_residual": witness_residual,
            },
        }))
    }

    fn states(
        &mut self,
        index: usize,
        cocycle: &str,
        measures: &BTreeMap<String, skewprod::states::MeasureSpec>,
        radius: i64,
        window: i64,
        samples: usize,
    ) -> TaskResult {
        let cfg = self.scenario.expansion;
        let report = self.report(cocycle)?.clone();
        if report.n0 < 1 {
            let reason = match report.uniquely_ergodic {
                Flag::True => "uniquely ergodic: the invariant state is omega alone",
                _ => "no fixed-point generator in the scanned levels; no states were constructed",
            };
            return Ok(json!({ "n0": report.n0, "states": Value::Null, "reason": reason }));
        }
        let spec = self.spec(cocycle);
        let a = spec.alpha().value();
        let table = WitnessTable::from_report(&report, 2 * radius, a)?;
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed.wrapping_add(index as u64));
        let xs: Vec<CpElement> = (0..samples).map(|_| CpElement::random(a, radius, 3, &mut rng)).collect();
        let squares: Vec<CpElement> = xs.iter().map(|x| x.adjoint().multiply(x)).collect::<Result<_, _>>()?;
        let kmax = radius / report.n0;
        let mut out = BTreeMap::new();
        for (name, mu) in measures {
            let state = state_from_measure(mu, &table, &cfg)?;
            let invariance = check_invariance(&state, spec, window, &xs, &cfg)?;
            let mut values = Vec::new();
            for k in -kmax..=kmax {
                let level = k * report.n0;
                let w = expand_adaptive(table.get(level)?, &cfg)?.poly;
                let z = state.eval(&CpElement::monomial(a, w, level))?;
                values.push((level, z.re, z.im));
            }
            let positivity = squares.iter().map(|s| state.eval(s).map(|z| z.re)).try_fold(f64::INFINITY, |m, v| v.map(|v| m.min(v)))?;
            out.insert(
                name.clone(),
                json!({ "measure": mu, "invariance": invariance, "witness_values": values, "min_positivity": positivity }),
            );
        }
        Ok(json!({ "n0": report.n0, "states": out }))
    }

    fn run_task(&mut self, index: usize, task: &Task) -> Result<Value, RunError> {
        let sc = self.scenario;
        let (cocycle, config, result) = match task {
            Task::Classify { cocycle } => (json!(cocycle), json!(sc.classifier), self.classify(index, cocycle)),
            Task::Coboundary { cocycle, level } => (
                json!(cocycle),
                json!({ "solver": sc.classifier.solver, "level": level }),
                classify_level(self.spec(cocycle), *level, &sc.classifier.solver).map(|v| json!({ "level": level, "verdict": v })),
            ),
            Task::Average { cocycle, element, windows } => (
                json!(cocycle),
                json!({ "expansion": sc.expansion, "windows": windows }),
                self.average(index, cocycle, element, windows),
            ),
            Task::States { cocycle, measures, radius, window, samples } => (
                json!(cocycle),
                json!({
                    "classifier": sc.classifier,
                    "expansion": sc.expansion,
                    "radius": radius,
                    "window": window,
                    "samples": samples,
                    "seed": self.seed.wrapping_add(index as u64),
                }),
                self.states(index, cocycle, measures, *radius, *window, *samples),
            ),
            Task::Conjugacy { u, v, window } => (
                json!([u, v]),
                json!({ "solver": sc.classifier.solver, "expansion": sc.expansion, "window": window }),
                are_cohomologous(self.spec(u), self.spec(v), *window, &sc.classifier.solver, &sc.expansion)
                    .map(|r| json!(r)),
            ),
        };
        let result = result.map_err(|source| RunError::Task { index, kind: task.kind(), source })?;
        Ok(json!({
            "index": index,
            "task": task.kind(),
            "cocycle": cocycle,
            "provenance": config,
            "result": result,
        }))
    }
}

/// Runs the tasks in declared order.
pub fn execute(scenario: &Scenario, echo: Value, seed: u64) -> Result<Artifacts, RunError> {
    let mut runner = Runner { scenario, seed, reports: BTreeMap::new(), cesaro: Vec::new(), levels: Vec::new() };
    let mut tasks = Vec::new();
    let mut timings = Vec::new();
    for (index, task) in scenario.tasks.iter().enumerate() {
        let start = Instant::now();
        tasks.push(runner.run_task(index, task)?);
        timings.push(Timing { task: index, kind: task.kind(), seconds: start.elapsed().as_secs_f64() });
    }
    let report = json!({
        "report_version": 1,
        "toolkit": { "name": "skewprod", "version": skewprod::VERSION },
        "scenario_name": scenario.name,
        "seed": seed,
        "scenario": echo,
        "tasks": tasks,
    });
    Ok(Artifacts { report, cesaro: runner.cesaro, levels: runner.levels, timings })
}

fn io(path: &Path) -> impl FnOnce(std::io::Error) -> RunError + '_ {
    move |source| RunError::Io { path: path.display().to_string(), source }
}

/// Header written explicitly so empty tables still carry their columns.
fn write_csv<T: Serialize>(path: &Path, header: &[&str], rows: &[T]) -> Result<(), RunError> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_path(path).map_err(|e| io(path)(e.into()))?;
    w.write_record(header).map_err(|e| io(path)(e.into()))?;
    for r in rows {
        w.serialize(r).map_err(|e| io(path)(e.into()))?;
    }
    w.flush().map_err(io(path))
}

fn write_json(path: &Path, v: &impl Serialize) -> Result<(), RunError> {
    let mut text = serde_json::to_string_pretty(v).map_err(|e| io(path)(e.into()))?;
    text.push('\n');
    fs::write(path, text).map_err(io(path))
}

pub fn write(artifacts: &Artifacts, out: &Path, names: &Outputs) -> Result<(), RunError> {
    fs::create_dir_all(out).map_err(io(out))?;
    write_json(&out.join(&names.report), &artifacts.report)?;
    write_csv(&out.join(&names.cesaro), &["task", "cocycle", "window", "gns_norm"], &artifacts.cesaro)?;
    let header = ["task", "cocycle", "level", "verdict", "certificate", "measurable_excluded", "residual"];
    write_csv(&out.join(&names.levels), &header, &artifacts.levels)?;
    let total: f64 = artifacts.timings.iter().map(|t| t.seconds).sum();
    write_json(&out.join(&names.timings), &json!({ "tasks": artifacts.timings, "total_seconds": total }))
}
