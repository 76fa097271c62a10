//! Weight schedules for weighted-sum scalarisation and the runners that
//! feed them to a backend.
//!
//! * `uniform`: evenly spaced `lambda1` in `[0, 1]`.
//! * `adaptive-dichotomic`: after the two single-objective runs, repeatedly
//!   targets the largest gap of the current front with the weight that makes
//!   both gap endpoints score equally.
//! * `adaptive-averages`: same loop, but the next weight is the midpoint of
//!   the weights that produced the two gap endpoints.
//!
//! Gaps are euclidean distances on min-max normalised objectives.

use std::fmt;
use std::str::FromStr;

use serde::{Serialize, Serializer};

use crate::archive::Archive;
use crate::encoding::{ObjectivePair, WeightVector};
use crate::error::{Error, Result};
use crate::instance::BiQapInstance;
use crate::solver::{Backend, Budget, SolverRequest};

/// Two weights closer than this in `lambda1` count as the same weight.
pub const DUPLICATE_WEIGHT_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum MethodKind {
    Uniform,
    AdaptiveAverages,
    AdaptiveDichotomic,
}

impl MethodKind {
    pub const ALL: [MethodKind; 3] = [
        MethodKind::Uniform,
        MethodKind::AdaptiveAverages,
        MethodKind::AdaptiveDichotomic,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            MethodKind::Uniform => "uniform",
            MethodKind::AdaptiveAverages => "adaptive-averages",
            MethodKind::AdaptiveDichotomic => "adaptive-dichotomic",
        }
    }

    pub fn is_adaptive(&self) -> bool {
        !matches!(self, MethodKind::Uniform)
    }
}

impl fmt::Display for MethodKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for MethodKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace('_', "-").as_str() {
            "uniform" => Ok(MethodKind::Uniform),
            "adaptive-averages" | "averages" => Ok(MethodKind::AdaptiveAverages),
            "adaptive-dichotomic" | "dichotomic" => Ok(MethodKind::AdaptiveDichotomic),
            other => Err(Error::Validation(format!("unknown method `{other}`"))),
        }
    }
}

impl Serialize for MethodKind {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy)]
pub struct ScalarisationPlan {
    pub method: MethodKind,
    pub num_weights: usize,
    pub budget: Budget,
    pub seed: u64,
}

impl ScalarisationPlan {
    pub fn validate(&self) -> Result<()> {
        let min = if self.method.is_adaptive() { 2 } else { 1 };
        if self.num_weights < min {
            return Err(Error::Validation(format!(
                "{} needs at least {min} weights, got {}",
                self.method, self.num_weights
            )));
        }
        Ok(())
    }
}

/// Final archive plus the weights issued, in call order.
#[derive(Debug, Clone)]
pub struct ScalarisationRun {
    pub archive: Archive,
    pub weights: Vec<WeightVector>,
}

pub fn uniform_weights(count: usize) -> Result<Vec<WeightVector>> {
    match count {
        0 => Err(Error::Validation("need at least one weight".into())),
        1 => Ok(vec![WeightVector::EQUAL]),
        _ => (0..count)
            .map(|i| {
                let l1 = i as f64 / (count - 1) as f64;
                WeightVector::from_lambda1(l1)
            })
            .collect(),
    }
}

/// Adjacent pair of front points and their normalised distance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Gap {
    /// Index of the left point in the sorted front.
    pub index: usize,
    pub left: ObjectivePair,
    pub right: ObjectivePair,
    pub distance: f64,
}

/// All adjacent gaps of a front, largest first; ties keep the leftmost gap
/// first.
pub fn ranked_gaps(front: &[ObjectivePair]) -> Result<Vec<Gap>> {
    if front.len() < 2 {
        return Err(Error::DegenerateFront(front.len()));
    }
    let mut pts = front.to_vec();
    pts.sort_by(|a, b| a.f1.total_cmp(&b.f1).then(b.f2.total_cmp(&a.f2)));

    let bounds = |get: fn(&ObjectivePair) -> f64| {
        pts.iter()
            .map(get)
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)))
    };
    let (lo1, hi1) = bounds(|p| p.f1);
    let (lo2, hi2) = bounds(|p| p.f2);
    let norm = |v: f64, lo: f64, hi: f64| if hi > lo { (v - lo) / (hi - lo) } else { 0.0 };

    let mut gaps: Vec<Gap> = pts
        .windows(2)
        .enumerate()
        .map(|(index, w)| {
            let dx = norm(w[1].f1, lo1, hi1) - norm(w[0].f1, lo1, hi1);
            let dy = norm(w[1].f2, lo2, hi2) - norm(w[0].f2, lo2, hi2);
            Gap {
                index,
                left: w[0],
                right: w[1],
                distance: dx.hypot(dy),
            }
        })
        .collect();
    // Stable sort keeps leftmost-first among equal distances.
    gaps.sort_by(|a, b| b.distance.total_cmp(&a.distance));
    Ok(gaps)
}

pub fn largest_gap(front: &[ObjectivePair]) -> Result<Gap> {
    Ok(ranked_gaps(front)?[0])
}

/// Weight under which `left` and `right` have the same scalarised value.
pub fn dichotomic_weight(left: ObjectivePair, right: ObjectivePair) -> Result<WeightVector> {
    if !(left.f1 < right.f1 && left.f2 > right.f2) {
        return Err(Error::DegeneratePair);
    }
    let drop2 = left.f2 - right.f2;
    let rise1 = right.f1 - left.f1;
    let lambda1 = drop2 / (drop2 + rise1);
    Ok(WeightVector {
        lambda1,
        lambda2: rise1 / (drop2 + rise1),
    })
}

pub fn averages_weight(left: WeightVector, right: WeightVector) -> WeightVector {
    WeightVector {
        lambda1: 0.5 * (left.lambda1 + right.lambda1),
        lambda2: 0.5 * (left.lambda2 + right.lambda2),
    }
}

fn run_one(
    instance: &BiQapInstance,
    backend: &dyn Backend,
    plan: &ScalarisationPlan,
    call: usize,
    weight: WeightVector,
    run: &mut ScalarisationRun,
) -> Result<()> {
    let req = SolverRequest {
        instance,
        weight,
        budget: plan.budget,
        seed: plan.seed.wrapping_add(call as u64),
    };
    let result = backend
        .solve(&req)
        .map_err(|e| e.context(format!("{} call {call} at weight {weight:?}", backend.name())))?;
    run.weights.push(weight);
    run.archive.extend(result.solutions);
    Ok(())
}

pub fn run_uniform(
    instance: &BiQapInstance,
    backend: &dyn Backend,
    plan: &ScalarisationPlan,
) -> Result<ScalarisationRun> {
    plan.validate()?;
    let mut run = ScalarisationRun {
        archive: Archive::new(),
        weights: Vec::with_capacity(plan.num_weights),
    };
    for (call, w) in uniform_weights(plan.num_weights)?.into_iter().enumerate() {
        run_one(instance, backend, plan, call, w, &mut run)?;
    }
    Ok(run)
}

fn is_used(used: &[WeightVector], w: WeightVector) -> bool {
    used.iter()
        .any(|u| (u.lambda1 - w.lambda1).abs() <= DUPLICATE_WEIGHT_TOLERANCE)
}

/// Midpoint of the widest interval between consecutive used `lambda1`
/// values. Always new when at least two distinct weights are in use.
fn widest_interval_midpoint(used: &[WeightVector]) -> WeightVector {
    let mut l1: Vec<f64> = used.iter().map(|w| w.lambda1).collect();
    l1.sort_by(f64::total_cmp);
    let (lo, hi) = l1
        .windows(2)
        .map(|w| (w[0], w[1]))
        .fold((0.0, 0.0), |best, cur| {
            if cur.1 - cur.0 > best.1 - best.0 {
                cur
            } else {
                best
            }
        });
    let lambda1 = 0.5 * (lo + hi);
    WeightVector {
        lambda1,
        lambda2: 1.0 - lambda1,
    }
}

/// Next weight for an adaptive method given the archive so far.
///
/// Walks the gaps largest first and returns the first derived weight that
/// has not been used. If every gap yields a used weight, or the front has
/// fewer than two points and `(0.5, 0.5)` is taken, falls back to the
/// midpoint of the widest interval between used weights.
pub fn next_adaptive_weight(
    method: MethodKind,
    archive: &Archive,
    used: &[WeightVector],
) -> WeightVector {
    let front = archive.front_sorted();
    if front.len() < 2 {
        if !is_used(used, WeightVector::EQUAL) {
            return WeightVector::EQUAL;
        }
        return widest_interval_midpoint(used);
    }
    let objs = archive.objectives();
    let gaps = ranked_gaps(&objs).expect("front has two points");
    for gap in gaps {
        let candidate = match method {
            MethodKind::AdaptiveDichotomic => {
                dichotomic_weight(gap.left, gap.right).expect("archive front is strictly monotone")
            }
            MethodKind::AdaptiveAverages => {
                averages_weight(front[gap.index].weight, front[gap.index + 1].weight)
            }
            MethodKind::Uniform => unreachable!("uniform is not adaptive"),
        };
        if !is_used(used, candidate) {
            return candidate;
        }
    }
    widest_interval_midpoint(used)
}

pub fn run_adaptive(
    instance: &BiQapInstance,
    backend: &dyn Backend,
    plan: &ScalarisationPlan,
) -> Result<ScalarisationRun> {
    if !plan.method.is_adaptive() {
        return Err(Error::Validation(format!(
            "run_adaptive needs an adaptive method, got {}",
            plan.method
        )));
    }
    plan.validate()?;
    let mut run = ScalarisationRun {
        archive: Archive::new(),
        weights: Vec::with_capacity(plan.num_weights),
    };
    run_one(instance, backend, plan, 0, WeightVector::FIRST_ONLY, &mut run)?;
    run_one(instance, backend, plan, 1, WeightVector::SECOND_ONLY, &mut run)?;
    for call in 2..plan.num_weights {
        let w = next_adaptive_weight(plan.method, &run.archive, &run.weights);
        run_one(instance, backend, plan, call, w, &mut run)?;
    }
    Ok(run)
}

/// Dispatches on `plan.method`.
pub fn run_plan(
    instance: &BiQapInstance,
    backend: &dyn Backend,
    plan: &ScalarisationPlan,
) -> Result<ScalarisationRun> {
    match plan.method {
        MethodKind::Uniform => run_uniform(instance, backend, plan),
        _ => run_adaptive(instance, backend, plan),
    }
}
