//! Permutation and two-way one-hot representations of an assignment, the
//! scalarised constrained quadratic model, and objective evaluation.
//!
//! Binary variable `x[i][j]` is 1 when facility `j` sits in location `i`.
//! Row `i` of the matrix carries the `g1` exactly-one constraint, column `j`
//! carries `g2`. The objective is the standard QAP quadratic form
//!
//! ```text
//! c(x) = sum_{i,j,l,v} (l1 * h1[j][v] + l2 * h2[j][v]) * d[i][l] * x[i][j] * x[l][v]
//! ```
//!
//! and the constraints are kept as hard discrete groups, never as penalties.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{ConstraintKind, Error, Result};
use crate::instance::BiQapInstance;

const WEIGHT_SUM_TOLERANCE: f64 = 1e-12;

/// Scalarisation weights `(lambda1, lambda2)` with `lambda1 + lambda2 = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightVector {
    pub lambda1: f64,
    pub lambda2: f64,
}

impl WeightVector {
    pub const FIRST_ONLY: WeightVector = WeightVector {
        lambda1: 1.0,
        lambda2: 0.0,
    };
    pub const SECOND_ONLY: WeightVector = WeightVector {
        lambda1: 0.0,
        lambda2: 1.0,
    };
    pub const EQUAL: WeightVector = WeightVector {
        lambda1: 0.5,
        lambda2: 0.5,
    };

    pub fn new(lambda1: f64, lambda2: f64) -> Result<Self> {
        let in_range = |v: f64| (0.0..=1.0).contains(&v);
        if !in_range(lambda1) || !in_range(lambda2) {
            return Err(Error::Validation(format!(
                "weights must lie in [0, 1], got ({lambda1}, {lambda2})"
            )));
        }
        if (lambda1 + lambda2 - 1.0).abs() > WEIGHT_SUM_TOLERANCE {
            return Err(Error::Validation(format!(
                "weights must sum to 1, got ({lambda1}, {lambda2})"
            )));
        }
        Ok(Self { lambda1, lambda2 })
    }

    /// `(lambda1, 1 - lambda1)`.
    pub fn from_lambda1(lambda1: f64) -> Result<Self> {
        Self::new(lambda1, 1.0 - lambda1)
    }
}

/// Objective values `(f1, f2)`, both minimised.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObjectivePair {
    pub f1: f64,
    pub f2: f64,
}

impl ObjectivePair {
    pub const fn new(f1: f64, f2: f64) -> Self {
        Self { f1, f2 }
    }
}

/// Facility-to-location map: `loc[j]` is the location of facility `j`.
/// Indices are 0-based.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Assignment(Vec<usize>);

impl Assignment {
    pub fn new(loc: Vec<usize>) -> Result<Self> {
        let n = loc.len();
        let mut seen = vec![false; n];
        for &l in &loc {
            if l >= n || std::mem::replace(&mut seen[l], true) {
                return Err(Error::Validation(format!("{loc:?} is not a permutation")));
            }
        }
        Ok(Self(loc))
    }

    pub fn identity(n: usize) -> Self {
        Self((0..n).collect())
    }

    /// Caller guarantees `loc` is a permutation.
    pub(crate) fn from_vec_unchecked(loc: Vec<usize>) -> Self {
        debug_assert!(Self::new(loc.clone()).is_ok());
        Self(loc)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn location_of(&self, facility: usize) -> usize {
        self.0[facility]
    }
}

/// `n x n` binary matrix, `x[i][j] = 1` when facility `j` is in location `i`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryAssignment {
    n: usize,
    bits: Vec<bool>,
}

impl BinaryAssignment {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            bits: vec![false; n * n],
        }
    }

    pub fn from_rows(rows: &[Vec<u8>]) -> Result<Self> {
        let n = rows.len();
        let mut out = Self::zeros(n);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(Error::Validation(format!("row {i} has {} entries", row.len())));
            }
            for (j, &b) in row.iter().enumerate() {
                match b {
                    0 => {}
                    1 => out.set(i, j, true),
                    _ => return Err(Error::Validation(format!("entry ({i},{j}) is {b}"))),
                }
            }
        }
        Ok(out)
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn get(&self, location: usize, facility: usize) -> bool {
        self.bits[location * self.n + facility]
    }

    pub fn set(&mut self, location: usize, facility: usize, value: bool) {
        self.bits[location * self.n + facility] = value;
    }

    /// Indices `i * n + j` of the variables set to 1.
    fn active(&self) -> impl Iterator<Item = usize> + '_ {
        self.bits
            .iter()
            .enumerate()
            .filter_map(|(idx, &b)| b.then_some(idx))
    }

    /// First violated constraint, rows before columns.
    pub fn check_feasible(&self) -> Result<()> {
        let n = self.n;
        for i in 0..n {
            let sum = (0..n).filter(|&j| self.get(i, j)).count();
            if sum != 1 {
                return Err(Error::Infeasible {
                    constraint: ConstraintKind::Row,
                    index: i,
                    sum,
                });
            }
        }
        for j in 0..n {
            let sum = (0..n).filter(|&i| self.get(i, j)).count();
            if sum != 1 {
                return Err(Error::Infeasible {
                    constraint: ConstraintKind::Column,
                    index: j,
                    sum,
                });
            }
        }
        Ok(())
    }
}

pub fn encode(a: &Assignment) -> BinaryAssignment {
    let mut x = BinaryAssignment::zeros(a.len());
    for (facility, &location) in a.as_slice().iter().enumerate() {
        x.set(location, facility, true);
    }
    x
}

pub fn decode(x: &BinaryAssignment) -> Result<Assignment> {
    x.check_feasible()?;
    let n = x.size();
    let loc = (0..n)
        .map(|j| (0..n).find(|&i| x.get(i, j)).expect("column has a one"))
        .collect();
    Ok(Assignment::from_vec_unchecked(loc))
}

/// Exact per-objective costs `f_k = sum_{u,v} H_k[u][v] * D[loc(u)][loc(v)]`.
pub fn evaluate_objectives(instance: &BiQapInstance, a: &Assignment) -> ObjectivePair {
    let n = instance.n();
    debug_assert_eq!(a.len(), n);
    let d = instance.distances();
    let (h1, h2) = (instance.flow(0), instance.flow(1));
    let loc = a.as_slice();
    let (mut f1, mut f2) = (0i128, 0i128);
    for u in 0..n {
        let du = d.row(loc[u]);
        let (r1, r2) = (h1.row(u), h2.row(u));
        for v in 0..n {
            let dist = du[loc[v]] as i128;
            f1 += r1[v] as i128 * dist;
            f2 += r2[v] as i128 * dist;
        }
    }
    ObjectivePair::new(f1 as f64, f2 as f64)
}

pub fn scalarised_value(objs: ObjectivePair, w: WeightVector) -> f64 {
    w.lambda1 * objs.f1 + w.lambda2 * objs.f2
}

/// A hard exactly-one constraint over a group of variables.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DiscreteGroup {
    pub kind: ConstraintKind,
    pub index: usize,
    /// Variable indices `i * n + j`.
    pub members: Vec<usize>,
}

/// Constrained quadratic model over `n^2` binary variables indexed
/// `i * n + j`.
#[derive(Debug, Clone, PartialEq)]
pub struct CqmModel {
    n: usize,
    linear: BTreeMap<usize, f64>,
    /// Keys are `(a, b)` with `a < b`.
    quadratic: BTreeMap<(usize, usize), f64>,
    groups: Vec<DiscreteGroup>,
}

impl CqmModel {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn num_vars(&self) -> usize {
        self.n * self.n
    }

    pub fn linear_terms(&self) -> &BTreeMap<usize, f64> {
        &self.linear
    }

    pub fn quadratic_terms(&self) -> &BTreeMap<(usize, usize), f64> {
        &self.quadratic
    }

    pub fn discrete_groups(&self) -> &[DiscreteGroup] {
        &self.groups
    }

    pub fn var_index(&self, location: usize, facility: usize) -> usize {
        location * self.n + facility
    }

    pub fn var_coords(&self, var: usize) -> (usize, usize) {
        (var / self.n, var % self.n)
    }

    /// Objective value of any binary vector, feasible or not.
    pub fn objective(&self, x: &BinaryAssignment) -> f64 {
        let active: Vec<usize> = x.active().collect();
        let mut total = 0.0;
        for (k, &a) in active.iter().enumerate() {
            total += self.linear.get(&a).copied().unwrap_or(0.0);
            for &b in &active[k + 1..] {
                total += self.quadratic.get(&(a, b)).copied().unwrap_or(0.0);
            }
        }
        total
    }

    /// Textual listing of the model:
    ///
    /// ```text
    /// var <idx> <i> <j>
    /// linear (<i>,<j>) <coeff>
    /// quad (<i>,<j>) (<l>,<v>) <coeff>
    /// group <row|column> <index>: (<i>,<j>) ...
    /// ```
    ///
    /// Terms appear in ascending variable order; coefficients use the
    /// shortest round-trip decimal form.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        let coords = |v: usize| {
            let (i, j) = self.var_coords(v);
            format!("({i},{j})")
        };
        for v in 0..self.num_vars() {
            let (i, j) = self.var_coords(v);
            writeln!(out, "var {v} {i} {j}").unwrap();
        }
        for (&v, &c) in &self.linear {
            writeln!(out, "linear {} {c}", coords(v)).unwrap();
        }
        for (&(a, b), &c) in &self.quadratic {
            writeln!(out, "quad {} {} {c}", coords(a), coords(b)).unwrap();
        }
        for g in &self.groups {
            let kind = match g.kind {
                ConstraintKind::Row => "row",
                ConstraintKind::Column => "column",
            };
            let members: Vec<String> = g.members.iter().map(|&m| coords(m)).collect();
            writeln!(out, "group {kind} {}: {}", g.index, members.join(" ")).unwrap();
        }
        out
    }
}

/// Builds the scalarised model for weight `w`. Zero coefficients are not
/// stored.
pub fn build_cqm(instance: &BiQapInstance, w: WeightVector) -> CqmModel {
    let n = instance.n();
    let d = instance.distances();
    let (h1, h2) = (instance.flow(0), instance.flow(1));
    let flow = |j: usize, v: usize| w.lambda1 * h1.get(j, v) as f64 + w.lambda2 * h2.get(j, v) as f64;

    let mut linear = BTreeMap::new();
    let mut quadratic = BTreeMap::new();
    for i in 0..n {
        for j in 0..n {
            let a = i * n + j;
            for l in 0..n {
                let dist = d.get(i, l) as f64;
                if dist == 0.0 {
                    continue;
                }
                for v in 0..n {
                    let c = flow(j, v) * dist;
                    if c == 0.0 {
                        continue;
                    }
                    let b = l * n + v;
                    if a == b {
                        *linear.entry(a).or_insert(0.0) += c;
                    } else {
                        *quadratic.entry((a.min(b), a.max(b))).or_insert(0.0) += c;
                    }
                }
            }
        }
    }

    let rows = (0..n).map(|i| DiscreteGroup {
        kind: ConstraintKind::Row,
        index: i,
        members: (0..n).map(|j| i * n + j).collect(),
    });
    let cols = (0..n).map(|j| DiscreteGroup {
        kind: ConstraintKind::Column,
        index: j,
        members: (0..n).map(|i| i * n + j).collect(),
    });
    CqmModel {
        n,
        linear,
        quadratic,
        groups: rows.chain(cols).collect(),
    }
}

/// Model energy of a feasible binary vector.
pub fn cqm_energy(model: &CqmModel, x: &BinaryAssignment) -> Result<f64> {
    if x.size() != model.n() {
        return Err(Error::Validation(format!(
            "binary assignment is {0}x{0}, model has n = {1}",
            x.size(),
            model.n()
        )));
    }
    x.check_feasible()?;
    Ok(model.objective(x))
}
