#![allow(dead_code)]

use bqap::{BiQapInstance, ObjectivePair};

/// All permutations of `0..n` by Heap's algorithm.
pub fn permutations(n: usize) -> Vec<Vec<usize>> {
    fn heap(k: usize, v: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if k <= 1 {
            out.push(v.clone());
            return;
        }
        for i in 0..k {
            heap(k - 1, v, out);
            if k % 2 == 0 {
                v.swap(i, k - 1);
            } else {
                v.swap(0, k - 1);
            }
        }
    }
    let mut v: Vec<usize> = (0..n).collect();
    let mut out = Vec::new();
    heap(n, &mut v, &mut out);
    out
}

/// Objectives straight from the definition, summing over every
/// facility pair.
pub fn naive_objectives(inst: &BiQapInstance, loc: &[usize]) -> ObjectivePair {
    let n = inst.n();
    let mut f = [0i64; 2];
    for (k, fk) in f.iter_mut().enumerate() {
        for u in 0..n {
            for v in 0..n {
                *fk += inst.flow(k).get(u, v) * inst.distances().get(loc[u], loc[v]);
            }
        }
    }
    ObjectivePair::new(f[0] as f64, f[1] as f64)
}

/// Distinct non-dominated objective pairs by pairwise comparison, sorted by f1.
pub fn pareto_filter(points: &[ObjectivePair]) -> Vec<ObjectivePair> {
    let dom = |a: &ObjectivePair, b: &ObjectivePair| {
        a.f1 <= b.f1 && a.f2 <= b.f2 && (a.f1 < b.f1 || a.f2 < b.f2)
    };
    let mut out: Vec<ObjectivePair> = points
        .iter()
        .filter(|p| !points.iter().any(|q| dom(q, p)))
        .copied()
        .collect();
    out.sort_by(|a, b| a.f1.total_cmp(&b.f1).then(a.f2.total_cmp(&b.f2)));
    out.dedup();
    out
}

/// True Pareto front of an instance by enumeration.
pub fn brute_force_front(inst: &BiQapInstance) -> Vec<ObjectivePair> {
    let all: Vec<ObjectivePair> = permutations(inst.n())
        .iter()
        .map(|p| naive_objectives(inst, p))
        .collect();
    pareto_filter(&all)
}

pub fn factorial(n: usize) -> u64 {
    (1..=n as u64).product()
}

pub fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()))
}
