//! Backends that solve one scalarised subproblem.
//!
//! Every backend takes a [`SolverRequest`] and returns up to
//! [`POOL_SIZE`] distinct feasible assignments, best first. Candidates are
//! ranked by scalarised value, then by the objective the weight ignores
//! (`f2` when `lambda2 = 0`, `f1` otherwise), then by assignment, so the
//! head of the list is never weakly dominated at the endpoint weights.
//!
//! Random numbers come from ChaCha8 (`rand_chacha`) seeded with the request
//! seed through `SeedableRng::seed_from_u64`.

use std::cmp::Ordering;
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::archive::Archive;
use crate::encoding::{evaluate_objectives, scalarised_value, Assignment, ObjectivePair, WeightVector};
use crate::error::{Error, Result};
use crate::instance::BiQapInstance;

/// Maximum number of distinct solutions a backend keeps per call.
pub const POOL_SIZE: usize = 20;

/// Largest instance the exhaustive backend accepts.
pub const EXHAUSTIVE_MAX_N: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Budget {
    /// Stop after this much wall-clock time.
    WallClock(Duration),
    /// Stop after this many proposed moves; fully deterministic.
    Iterations(u64),
}

impl Budget {
    pub fn wall_clock_secs(seconds: f64) -> Result<Self> {
        if !(seconds > 0.0 && seconds.is_finite()) {
            return Err(Error::Validation(format!(
                "time limit must be a positive number of seconds, got {seconds}"
            )));
        }
        Ok(Budget::WallClock(Duration::from_secs_f64(seconds)))
    }

    pub fn iterations(count: u64) -> Result<Self> {
        if count == 0 {
            return Err(Error::Validation("iteration budget must be positive".into()));
        }
        Ok(Budget::Iterations(count))
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SolverRequest<'a> {
    pub instance: &'a BiQapInstance,
    pub weight: WeightVector,
    pub budget: Budget,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvaluatedSolution {
    pub assignment: Assignment,
    pub objectives: ObjectivePair,
    /// Weight of the scalarisation that produced this solution.
    pub weight: WeightVector,
}

impl EvaluatedSolution {
    pub fn evaluate(instance: &BiQapInstance, assignment: Assignment, weight: WeightVector) -> Self {
        let objectives = evaluate_objectives(instance, &assignment);
        Self {
            assignment,
            objectives,
            weight,
        }
    }

    pub fn scalarised(&self) -> f64 {
        scalarised_value(self.objectives, self.weight)
    }
}

#[derive(Debug, Clone)]
pub struct SolverResult {
    /// Best first; never empty.
    pub solutions: Vec<EvaluatedSolution>,
    pub best_scalarised: f64,
    pub wall_time: Duration,
}

pub trait Backend: Send + Sync {
    fn name(&self) -> &'static str;
    fn solve(&self, req: &SolverRequest<'_>) -> Result<SolverResult>;
}

/// Looks a backend up by its CLI name.
pub fn backend_by_name(name: &str) -> Result<Box<dyn Backend>> {
    match name {
        "sa" => Ok(Box::new(SimulatedAnnealing::default())),
        "exhaustive" => Ok(Box::new(Exhaustive)),
        other => Err(Error::Validation(format!(
            "unknown backend `{other}` (expected `sa` or `exhaustive`)"
        ))),
    }
}

fn rank(a: &EvaluatedSolution, b: &EvaluatedSolution, w: WeightVector) -> Ordering {
    let secondary = |s: &EvaluatedSolution| {
        if w.lambda2 == 0.0 {
            s.objectives.f2
        } else {
            s.objectives.f1
        }
    };
    a.scalarised()
        .total_cmp(&b.scalarised())
        .then(secondary(a).total_cmp(&secondary(b)))
        .then_with(|| a.assignment.cmp(&b.assignment))
}

/// Best-`POOL_SIZE` distinct assignments seen so far, sorted by [`rank`].
struct Pool {
    weight: WeightVector,
    entries: Vec<EvaluatedSolution>,
}

impl Pool {
    fn new(weight: WeightVector) -> Self {
        Self {
            weight,
            entries: Vec::with_capacity(POOL_SIZE + 1),
        }
    }

    /// Cheap pre-filter on an approximate scalarised cost.
    fn may_accept(&self, approx: f64) -> bool {
        match self.entries.last() {
            Some(worst) if self.entries.len() >= POOL_SIZE => {
                let w = worst.scalarised();
                approx <= w + 1e-9 * (1.0 + w.abs())
            }
            _ => true,
        }
    }

    fn offer(&mut self, cand: EvaluatedSolution) {
        if self.entries.iter().any(|e| e.assignment == cand.assignment) {
            return;
        }
        let pos = self
            .entries
            .partition_point(|e| rank(e, &cand, self.weight) == Ordering::Less);
        if pos >= POOL_SIZE {
            return;
        }
        self.entries.insert(pos, cand);
        self.entries.truncate(POOL_SIZE);
    }

    fn into_result(self, started: Instant) -> SolverResult {
        let best_scalarised = self
            .entries
            .first()
            .map(EvaluatedSolution::scalarised)
            .expect("pool is non-empty");
        SolverResult {
            solutions: self.entries,
            best_scalarised,
            wall_time: started.elapsed(),
        }
    }
}

/// Simulated annealing over permutations with a pairwise-swap neighbourhood.
///
/// The start temperature is the standard deviation of the scalarised cost
/// over `temperature_samples` random assignments (at least
/// `temperature_floor`). Temperature drops geometrically by `cooling` after
/// each sweep of `n (n - 1) / 2` proposals, and the search restarts from a
/// fresh random assignment once it falls below `stop_ratio` times the start
/// temperature. Restarts continue until the budget runs out.
#[derive(Debug, Clone)]
pub struct SimulatedAnnealing {
    pub cooling: f64,
    pub stop_ratio: f64,
    pub temperature_samples: usize,
    pub temperature_floor: f64,
}

impl Default for SimulatedAnnealing {
    fn default() -> Self {
        Self {
            cooling: 0.995,
            stop_ratio: 1e-3,
            temperature_samples: 100,
            temperature_floor: 1.0,
        }
    }
}

/// Dense copy of the weighted flow and the distance matrix in `f64`.
struct ScalarisedQap {
    n: usize,
    flow: Vec<f64>,
    dist: Vec<f64>,
}

impl ScalarisedQap {
    fn new(instance: &BiQapInstance, w: WeightVector) -> Self {
        let n = instance.n();
        let (h1, h2, d) = (instance.flow(0), instance.flow(1), instance.distances());
        let mut flow = Vec::with_capacity(n * n);
        let mut dist = Vec::with_capacity(n * n);
        for u in 0..n {
            for v in 0..n {
                flow.push(w.lambda1 * h1.get(u, v) as f64 + w.lambda2 * h2.get(u, v) as f64);
                dist.push(d.get(u, v) as f64);
            }
        }
        Self { n, flow, dist }
    }

    fn cost(&self, loc: &[usize]) -> f64 {
        let n = self.n;
        let mut total = 0.0;
        for u in 0..n {
            let drow = &self.dist[loc[u] * n..(loc[u] + 1) * n];
            let frow = &self.flow[u * n..(u + 1) * n];
            for v in 0..n {
                total += frow[v] * drow[loc[v]];
            }
        }
        total
    }

    /// Cost change from swapping the locations of facilities `r` and `s`.
    fn swap_delta(&self, loc: &[usize], r: usize, s: usize) -> f64 {
        let n = self.n;
        let c = |u: usize, v: usize| self.flow[u * n + v];
        let d = |i: usize, l: usize| self.dist[i * n + l];
        let (pr, ps) = (loc[r], loc[s]);
        let mut delta = c(r, r) * (d(ps, ps) - d(pr, pr))
            + c(s, s) * (d(pr, pr) - d(ps, ps))
            + c(r, s) * (d(ps, pr) - d(pr, ps))
            + c(s, r) * (d(pr, ps) - d(ps, pr));
        for k in 0..n {
            if k == r || k == s {
                continue;
            }
            let pk = loc[k];
            delta += (c(r, k) - c(s, k)) * (d(ps, pk) - d(pr, pk))
                + (c(k, r) - c(k, s)) * (d(pk, ps) - d(pk, pr));
        }
        delta
    }
}

struct BudgetClock {
    budget: Budget,
    started: Instant,
    proposals: u64,
}

impl BudgetClock {
    fn exhausted(&self) -> bool {
        match self.budget {
            Budget::Iterations(limit) => self.proposals >= limit,
            // Polling the clock on every proposal is measurable for small n.
            Budget::WallClock(limit) => {
                self.proposals % 64 == 0 && self.started.elapsed() >= limit
            }
        }
    }
}

impl SimulatedAnnealing {
    fn initial_temperature(&self, qap: &ScalarisedQap, rng: &mut ChaCha8Rng) -> f64 {
        let mut loc: Vec<usize> = (0..qap.n).collect();
        let samples: Vec<f64> = (0..self.temperature_samples)
            .map(|_| {
                loc.shuffle(rng);
                qap.cost(&loc)
            })
            .collect();
        let std = crate::metrics::summarize(&samples)
            .map(|s| s.std)
            .unwrap_or(0.0);
        std.max(self.temperature_floor)
    }
}

impl Backend for SimulatedAnnealing {
    fn name(&self) -> &'static str {
        "sa"
    }

    fn solve(&self, req: &SolverRequest<'_>) -> Result<SolverResult> {
        let started = Instant::now();
        let inst = req.instance;
        let n = inst.n();
        let qap = ScalarisedQap::new(inst, req.weight);
        let mut rng = ChaCha8Rng::seed_from_u64(req.seed);
        let t0 = self.initial_temperature(&qap, &mut rng);
        let t_stop = self.stop_ratio * t0;
        let sweep = n * (n - 1) / 2;

        let mut pool = Pool::new(req.weight);
        let mut clock = BudgetClock {
            budget: req.budget,
            started,
            proposals: 0,
        };
        let offer = |pool: &mut Pool, loc: &[usize], approx: f64| {
            if pool.may_accept(approx) {
                let a = Assignment::from_vec_unchecked(loc.to_vec());
                pool.offer(EvaluatedSolution::evaluate(inst, a, req.weight));
            }
        };

        let mut loc: Vec<usize> = (0..n).collect();
        'restarts: loop {
            loc.shuffle(&mut rng);
            let mut cost = qap.cost(&loc);
            offer(&mut pool, &loc, cost);
            let mut temp = t0;
            while temp >= t_stop {
                for _ in 0..sweep {
                    if clock.exhausted() {
                        break 'restarts;
                    }
                    clock.proposals += 1;
                    let r = rng.gen_range(0..n);
                    let mut s = rng.gen_range(0..n - 1);
                    if s >= r {
                        s += 1;
                    }
                    let delta = qap.swap_delta(&loc, r, s);
                    if delta <= 0.0 || rng.gen::<f64>() < (-delta / temp).exp() {
                        loc.swap(r, s);
                        cost += delta;
                        offer(&mut pool, &loc, cost);
                    }
                }
                // Resynchronise to stop floating-point drift.
                cost = qap.cost(&loc);
                temp *= self.cooling;
            }
        }
        Ok(pool.into_result(started))
    }
}

/// Enumerates all `n!` assignments. Returns the minimisers (up to
/// [`POOL_SIZE`], ranked as for every backend) followed by every other
/// Pareto-optimal assignment found, one per objective pair.
#[derive(Debug, Clone, Copy, Default)]
pub struct Exhaustive;

impl Backend for Exhaustive {
    fn name(&self) -> &'static str {
        "exhaustive"
    }

    fn solve(&self, req: &SolverRequest<'_>) -> Result<SolverResult> {
        let started = Instant::now();
        let inst = req.instance;
        let n = inst.n();
        if n > EXHAUSTIVE_MAX_N {
            return Err(Error::Capacity {
                n,
                max: EXHAUSTIVE_MAX_N,
            });
        }
        let mut pool = Pool::new(req.weight);
        let mut pareto = Archive::new();
        let mut loc: Vec<usize> = (0..n).collect();
        loop {
            let sol = EvaluatedSolution::evaluate(
                inst,
                Assignment::from_vec_unchecked(loc.clone()),
                req.weight,
            );
            pareto.insert(sol.clone());
            if pool.may_accept(sol.scalarised()) {
                pool.offer(sol);
            }
            if !next_permutation(&mut loc) {
                break;
            }
        }

        let best = pool.entries[0].scalarised();
        pool.entries.retain(|s| s.scalarised() == best);
        for s in pareto.into_entries() {
            if !pool.entries.iter().any(|e| e.assignment == s.assignment) {
                pool.entries.push(s);
            }
        }
        Ok(pool.into_result(started))
    }
}

/// Advances `v` to the next permutation in lexicographic order.
fn next_permutation(v: &mut [usize]) -> bool {
    let Some(i) = v.windows(2).rposition(|w| w[0] < w[1]) else {
        return false;
    };
    let j = v.iter().rposition(|&x| x > v[i]).expect("pivot has a successor");
    v.swap(i, j);
    v[i + 1..].reverse();
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{synth_instance, SquareMatrix};
    use proptest::prelude::*;

    fn two_by_two() -> BiQapInstance {
        let h1 = SquareMatrix::from_rows(&[vec![0, 2], vec![5, 0]]).unwrap();
        let h2 = SquareMatrix::from_rows(&[vec![0, 1], vec![1, 0]]).unwrap();
        let d = SquareMatrix::from_rows(&[vec![0, 1], vec![3, 0]]).unwrap();
        BiQapInstance::new("t", [h1, h2], d).unwrap()
    }

    fn zero_flow(n: usize) -> BiQapInstance {
        let d = SquareMatrix::from_rows(&vec![vec![2; n]; n]).unwrap();
        BiQapInstance::new("z", [SquareMatrix::zeros(n), SquareMatrix::zeros(n)], d).unwrap()
    }

    fn all_assignments(n: usize) -> Vec<Assignment> {
        let mut out = Vec::new();
        let mut v: Vec<usize> = (0..n).collect();
        loop {
            out.push(Assignment::new(v.clone()).unwrap());
            if !next_permutation(&mut v) {
                return out;
            }
        }
    }

    fn req(inst: &BiQapInstance, w: WeightVector, budget: Budget, seed: u64) -> SolverRequest<'_> {
        SolverRequest {
            instance: inst,
            weight: w,
            budget,
            seed,
        }
    }

    #[test]
    fn next_permutation_enumerates_all() {
        assert_eq!(all_assignments(4).len(), 24);
        let mut seen = all_assignments(5);
        seen.dedup();
        assert_eq!(seen.len(), 120);
    }

    #[test]
    fn exhaustive_hand_example() {
        let inst = two_by_two();
        let r = Exhaustive
            .solve(&req(&inst, WeightVector::FIRST_ONLY, Budget::Iterations(1), 0))
            .unwrap();
        assert_eq!(r.best_scalarised, 11.0);
        assert_eq!(r.solutions[0].assignment.as_slice(), &[1, 0]);
    }

    #[test]
    fn exhaustive_zero_flow_ties() {
        let inst = zero_flow(4);
        let r = Exhaustive
            .solve(&req(&inst, WeightVector::EQUAL, Budget::Iterations(1), 0))
            .unwrap();
        assert_eq!(r.best_scalarised, 0.0);
        assert_eq!(r.solutions.len(), POOL_SIZE);
        assert!(r.solutions.iter().all(|s| s.scalarised() == 0.0));
    }

    #[test]
    fn exhaustive_capacity() {
        let inst = synth_instance(11, 1.0, 1).unwrap();
        let err = Exhaustive
            .solve(&req(&inst, WeightVector::EQUAL, Budget::Iterations(1), 0))
            .unwrap_err();
        assert!(matches!(err, Error::Capacity { n: 11, max: 10 }));
    }

    #[test]
    fn exhaustive_endpoint_is_lexicographic_optimum() {
        let inst = synth_instance(5, 0.0, 4).unwrap();
        let all: Vec<_> = all_assignments(5)
            .into_iter()
            .map(|a| evaluate_objectives(&inst, &a))
            .collect();
        let min_f1 = all.iter().map(|p| p.f1).fold(f64::INFINITY, f64::min);
        let best_f2 = all
            .iter()
            .filter(|p| p.f1 == min_f1)
            .map(|p| p.f2)
            .fold(f64::INFINITY, f64::min);
        let r = Exhaustive
            .solve(&req(&inst, WeightVector::FIRST_ONLY, Budget::Iterations(1), 0))
            .unwrap();
        assert_eq!(r.solutions[0].objectives, ObjectivePair::new(min_f1, best_f2));
    }

    #[test]
    fn sa_zero_flow() {
        let inst = zero_flow(5);
        let r = SimulatedAnnealing::default()
            .solve(&req(&inst, WeightVector::EQUAL, Budget::Iterations(2_000), 3))
            .unwrap();
        assert_eq!(r.best_scalarised, 0.0);
    }

    #[test]
    fn sa_finds_n3_optimum() {
        let inst = synth_instance(3, 1.0, 9).unwrap();
        let min_f1 = all_assignments(3)
            .iter()
            .map(|a| evaluate_objectives(&inst, a).f1)
            .fold(f64::INFINITY, f64::min);
        let r = SimulatedAnnealing::default()
            .solve(&req(&inst, WeightVector::FIRST_ONLY, Budget::Iterations(5_000), 1))
            .unwrap();
        assert_eq!(r.best_scalarised, min_f1);
    }

    #[test]
    fn sa_is_deterministic_in_iteration_mode() {
        let inst = synth_instance(7, -0.75, 2).unwrap();
        let w = WeightVector::from_lambda1(0.3).unwrap();
        let a = SimulatedAnnealing::default()
            .solve(&req(&inst, w, Budget::Iterations(10_000), 42))
            .unwrap();
        let b = SimulatedAnnealing::default()
            .solve(&req(&inst, w, Budget::Iterations(10_000), 42))
            .unwrap();
        assert_eq!(a.solutions, b.solutions);
        assert_eq!(a.best_scalarised, b.best_scalarised);
    }

    #[test]
    fn sa_wall_clock_stops() {
        let inst = synth_instance(12, 0.0, 2).unwrap();
        let budget = Budget::wall_clock_secs(0.05).unwrap();
        let r = SimulatedAnnealing::default()
            .solve(&req(&inst, WeightVector::EQUAL, budget, 1))
            .unwrap();
        assert!(r.wall_time < Duration::from_secs(2));
        assert!(!r.solutions.is_empty());
    }

    #[test]
    fn results_are_sorted_distinct_and_consistent() {
        let inst = synth_instance(6, 0.75, 5).unwrap();
        let w = WeightVector::from_lambda1(0.6).unwrap();
        let r = SimulatedAnnealing::default()
            .solve(&req(&inst, w, Budget::Iterations(20_000), 8))
            .unwrap();
        assert!(r.solutions.len() <= POOL_SIZE);
        for pair in r.solutions.windows(2) {
            assert_eq!(rank(&pair[0], &pair[1], w), Ordering::Less);
        }
        let min = r
            .solutions
            .iter()
            .map(EvaluatedSolution::scalarised)
            .fold(f64::INFINITY, f64::min);
        assert_eq!(r.best_scalarised, min);
        for s in &r.solutions {
            assert_eq!(s.objectives, evaluate_objectives(&inst, &s.assignment));
            assert_eq!(s.weight, w);
        }
    }

    #[test]
    fn budget_validation() {
        assert!(Budget::wall_clock_secs(0.0).is_err());
        assert!(Budget::wall_clock_secs(-1.0).is_err());
        assert!(Budget::iterations(0).is_err());
        assert!(backend_by_name("tabu").is_err());
        assert_eq!(backend_by_name("sa").unwrap().name(), "sa");
        assert_eq!(backend_by_name("exhaustive").unwrap().name(), "exhaustive");
    }

    proptest! {
        #[test]
        fn swap_delta_matches_recompute(
            seed in 0u64..1000,
            n in 2usize..8,
            l1 in 0.0f64..=1.0,
            r in 0usize..8,
            s in 0usize..8,
        ) {
            let (r, s) = (r % n, s % n);
            prop_assume!(r != s);
            // Non-zero diagonals exercise the self-interaction terms.
            let base = synth_instance(n, 1.0, seed).unwrap();
            let mut h1 = base.flow(0).clone();
            let mut d = base.distances().clone();
            for u in 0..n {
                h1.set(u, u, (seed as i64 + u as i64) % 7);
                d.set(u, u, (u as i64 * 3) % 5);
            }
            let inst = BiQapInstance::new("p", [h1, base.flow(1).clone()], d).unwrap();
            let qap = ScalarisedQap::new(&inst, WeightVector::from_lambda1(l1).unwrap());
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut loc: Vec<usize> = (0..n).collect();
            loc.shuffle(&mut rng);
            let before = qap.cost(&loc);
            let delta = qap.swap_delta(&loc, r, s);
            loc.swap(r, s);
            let after = qap.cost(&loc);
            prop_assert!((before + delta - after).abs() <= 1e-9 * (1.0 + after.abs()));
        }
    }
}
