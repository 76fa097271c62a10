//! Repeated-run experiments comparing weight schedules by hypervolume.
//!
//! Output layout under the output directory:
//!
//! ```text
//! summary.csv              instance,method,mean_hv,std_hv,best_flag
//! report.json              full report
//! fronts/<method>_run<r>.csv   f1,f2,lambda1,lambda2 per archive entry
//! reference_front.csv      f1,f2 (only when a reference front was given)
//! ```

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;

use crate::encoding::ObjectivePair;
use crate::error::{Error, Result};
use crate::instance::{BiQapInstance, MatrixOrder, ReferenceFront};
use crate::metrics::{hypervolume_2d, reference_point, summarize, t_test, ReferencePoint, TTest};
use crate::scalarisation::{run_plan, MethodKind, ScalarisationPlan};
use crate::solver::{backend_by_name, Budget, EvaluatedSolution};

/// Significance level of the pairwise t-tests.
pub const ALPHA: f64 = 0.05;

/// Seed offset between consecutive runs of one method.
pub const RUN_SEED_STRIDE: u64 = 65_537;

#[derive(Debug, Clone)]
pub struct ExperimentSettings {
    pub methods: Vec<MethodKind>,
    pub num_weights: usize,
    pub budget: Budget,
    pub runs: usize,
    pub base_seed: u64,
    pub backend: String,
    pub workers: usize,
}

impl Default for ExperimentSettings {
    fn default() -> Self {
        Self {
            methods: MethodKind::ALL.to_vec(),
            num_weights: 10,
            budget: Budget::WallClock(std::time::Duration::from_secs(5)),
            runs: 20,
            base_seed: 0,
            backend: "sa".into(),
            workers: 1,
        }
    }
}

impl ExperimentSettings {
    pub fn validate(&self) -> Result<()> {
        if self.runs < 1 {
            return Err(Error::Validation("runs must be >= 1".into()));
        }
        if self.num_weights < 1 {
            return Err(Error::Validation("num_weights must be >= 1".into()));
        }
        if self.methods.is_empty() {
            return Err(Error::Validation("at least one method is required".into()));
        }
        for (i, m) in self.methods.iter().enumerate() {
            if self.methods[..i].contains(m) {
                return Err(Error::Validation(format!("method {m} listed twice")));
            }
            if m.is_adaptive() && self.num_weights < 2 {
                return Err(Error::Validation(format!("{m} needs at least 2 weights")));
            }
        }
        if self.workers < 1 {
            return Err(Error::Validation("workers must be >= 1".into()));
        }
        Ok(())
    }

    /// Seed of run `run` (1-based).
    pub fn run_seed(&self, run: usize) -> u64 {
        self.base_seed
            .wrapping_add((run as u64).wrapping_mul(RUN_SEED_STRIDE))
    }

    fn effective_workers(&self) -> usize {
        match self.budget {
            Budget::WallClock(_) => self.workers.min(num_cpus::get_physical().max(1)),
            Budget::Iterations(_) => self.workers,
        }
    }
}

/// File-based experiment description, as taken by the CLI.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub instance_path: PathBuf,
    pub matrix_order: MatrixOrder,
    pub reference_front_path: Option<PathBuf>,
    pub output_dir: PathBuf,
    pub settings: ExperimentSettings,
}

#[derive(Debug, Clone, Serialize)]
#[serde(tag = "mode", rename_all = "lowercase")]
pub enum BudgetInfo {
    Wallclock { seconds: f64 },
    Iterations { proposals: u64 },
}

impl From<Budget> for BudgetInfo {
    fn from(b: Budget) -> Self {
        match b {
            Budget::WallClock(d) => BudgetInfo::Wallclock {
                seconds: d.as_secs_f64(),
            },
            Budget::Iterations(k) => BudgetInfo::Iterations { proposals: k },
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RunRecord {
    /// 1-based.
    pub run: usize,
    pub seed: u64,
    pub weights: Vec<crate::encoding::WeightVector>,
    pub front: Vec<EvaluatedSolution>,
    pub hypervolume: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct MethodReport {
    pub method: MethodKind,
    pub runs: Vec<RunRecord>,
    pub hypervolumes: Vec<f64>,
    pub mean_hv: f64,
    pub std_hv: f64,
    /// Best mean, or not significantly worse than the best mean.
    pub best_flag: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct PairwiseTest {
    pub a: MethodKind,
    pub b: MethodKind,
    /// Absent when either method has fewer than two runs.
    pub test: Option<TTest>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ReferenceSource {
    /// Maxima of the supplied reference front.
    Front,
    /// Maxima over every archive of every method in this experiment.
    Empirical,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub instance: String,
    pub n: usize,
    pub backend: String,
    pub budget: BudgetInfo,
    pub num_weights: usize,
    pub runs: usize,
    pub base_seed: u64,
    pub reference_point: ReferencePoint,
    pub reference_source: ReferenceSource,
    pub reference_front: Option<Vec<ObjectivePair>>,
    pub methods: Vec<MethodReport>,
    pub significance: Vec<PairwiseTest>,
}

impl RunReport {
    pub fn method(&self, m: MethodKind) -> Option<&MethodReport> {
        self.methods.iter().find(|r| r.method == m)
    }
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunReport> {
    let instance = BiQapInstance::load(&cfg.instance_path, cfg.matrix_order)?;
    let reference = cfg
        .reference_front_path
        .as_deref()
        .map(ReferenceFront::load)
        .transpose()?;
    run_experiment_on(&instance, reference.as_ref(), &cfg.settings)
}

struct Cell {
    method: MethodKind,
    run: usize,
    seed: u64,
}

pub fn run_experiment_on(
    instance: &BiQapInstance,
    reference: Option<&ReferenceFront>,
    settings: &ExperimentSettings,
) -> Result<RunReport> {
    settings.validate()?;
    let backend = backend_by_name(&settings.backend)?;
    if let Some(front) = reference {
        if front.is_empty() {
            return Err(Error::Validation("reference front is empty".into()));
        }
    }

    let cells: Vec<Cell> = settings
        .methods
        .iter()
        .flat_map(|&method| {
            (1..=settings.runs).map(move |run| Cell {
                method,
                run,
                seed: settings.run_seed(run),
            })
        })
        .collect();

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(settings.effective_workers())
        .build()
        .map_err(|e| Error::Validation(format!("cannot start worker pool: {e}")))?;
    let outcomes: Vec<(Vec<crate::encoding::WeightVector>, Vec<EvaluatedSolution>)> = pool
        .install(|| {
            cells
                .par_iter()
                .map(|cell| {
                    let plan = ScalarisationPlan {
                        method: cell.method,
                        num_weights: settings.num_weights,
                        budget: settings.budget,
                        seed: cell.seed,
                    };
                    run_plan(instance, backend.as_ref(), &plan)
                        .map(|r| (r.weights, r.archive.into_entries()))
                        .map_err(|e| e.context(format!("{} run {}", cell.method, cell.run)))
                })
                .collect::<Result<Vec<_>>>()
        })?;

    let (reference_point, reference_source) = match reference {
        Some(front) => (reference_point(front.points())?, ReferenceSource::Front),
        None => {
            let all: Vec<ObjectivePair> = outcomes
                .iter()
                .flat_map(|(_, front)| front.iter().map(|s| s.objectives))
                .collect();
            (reference_point(&all)?, ReferenceSource::Empirical)
        }
    };

    let mut methods: Vec<MethodReport> = Vec::with_capacity(settings.methods.len());
    let mut outcomes = outcomes.into_iter();
    for &method in &settings.methods {
        let mut runs = Vec::with_capacity(settings.runs);
        for run in 1..=settings.runs {
            let (weights, front) = outcomes.next().expect("one outcome per cell");
            let objs: Vec<ObjectivePair> = front.iter().map(|s| s.objectives).collect();
            runs.push(RunRecord {
                run,
                seed: settings.run_seed(run),
                weights,
                hypervolume: hypervolume_2d(&objs, reference_point),
                front,
            });
        }
        let hypervolumes: Vec<f64> = runs.iter().map(|r| r.hypervolume).collect();
        let s = summarize(&hypervolumes)?;
        methods.push(MethodReport {
            method,
            runs,
            hypervolumes,
            mean_hv: s.mean,
            std_hv: s.std,
            best_flag: false,
        });
    }

    let mut significance = Vec::new();
    for i in 0..methods.len() {
        for j in i + 1..methods.len() {
            significance.push(PairwiseTest {
                a: methods[i].method,
                b: methods[j].method,
                test: pairwise(&methods[i], &methods[j])?,
            });
        }
    }
    mark_best(&mut methods)?;

    Ok(RunReport {
        instance: instance.name.clone(),
        n: instance.n(),
        backend: backend.name().to_string(),
        budget: settings.budget.into(),
        num_weights: settings.num_weights,
        runs: settings.runs,
        base_seed: settings.base_seed,
        reference_point,
        reference_source,
        reference_front: reference.map(|f| f.points().to_vec()),
        methods,
        significance,
    })
}

fn pairwise(a: &MethodReport, b: &MethodReport) -> Result<Option<TTest>> {
    if a.hypervolumes.len() < 2 || b.hypervolumes.len() < 2 {
        return Ok(None);
    }
    t_test(&a.hypervolumes, &b.hypervolumes, ALPHA).map(Some)
}

/// Flags the method with the largest mean and every method whose samples
/// are not significantly different from it.
pub fn mark_best(methods: &mut [MethodReport]) -> Result<()> {
    let Some(best) = methods
        .iter()
        .enumerate()
        .fold(None::<usize>, |acc, (i, m)| match acc {
            Some(b) if methods[b].mean_hv >= m.mean_hv => Some(b),
            _ => Some(i),
        })
    else {
        return Ok(());
    };
    let best_mean = methods[best].mean_hv;
    let flags: Vec<bool> = methods
        .iter()
        .map(|m| {
            if m.mean_hv == best_mean {
                return Ok(true);
            }
            Ok(match pairwise(m, &methods[best])? {
                Some(t) => !t.significant,
                None => false,
            })
        })
        .collect::<Result<_>>()?;
    for (m, f) in methods.iter_mut().zip(flags) {
        m.best_flag = f;
    }
    Ok(())
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

pub fn summary_csv(report: &RunReport) -> String {
    let mut out = String::from("instance,method,mean_hv,std_hv,best_flag\n");
    for m in &report.methods {
        writeln!(
            out,
            "{},{},{},{},{}",
            report.instance, m.method, m.mean_hv, m.std_hv, m.best_flag
        )
        .unwrap();
    }
    out
}

/// Writes `summary.csv` and `report.json` into `dir`.
pub fn emit_summary(report: &RunReport, dir: &Path) -> Result<()> {
    write_file(&dir.join("summary.csv"), &summary_csv(report))?;
    let mut json = serde_json::to_string_pretty(report).map_err(|e| Error::Json {
        context: "serialising report".into(),
        source: e,
    })?;
    json.push('\n');
    write_file(&dir.join("report.json"), &json)
}

pub fn front_csv(front: &[EvaluatedSolution]) -> String {
    let mut out = String::from("f1,f2,lambda1,lambda2\n");
    for s in front {
        writeln!(
            out,
            "{},{},{},{}",
            s.objectives.f1, s.objectives.f2, s.weight.lambda1, s.weight.lambda2
        )
        .unwrap();
    }
    out
}

pub fn front_file_name(method: MethodKind, run: usize) -> String {
    format!("{method}_run{run}.csv")
}

/// Writes one front file per (method, run) under `dir/fronts/`, plus
/// `dir/reference_front.csv` when the report carries a reference front.
pub fn emit_front_csv(report: &RunReport, dir: &Path) -> Result<()> {
    let fronts = dir.join("fronts");
    for m in &report.methods {
        for r in &m.runs {
            write_file(&fronts.join(front_file_name(m.method, r.run)), &front_csv(&r.front))?;
        }
    }
    if let Some(reference) = &report.reference_front {
        let mut out = String::from("f1,f2\n");
        for p in reference {
            writeln!(out, "{},{}", p.f1, p.f2).unwrap();
        }
        write_file(&dir.join("reference_front.csv"), &out)?;
    }
    Ok(())
}
