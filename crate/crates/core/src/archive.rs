//! Non-dominated archive of evaluated solutions (minimisation).

use crate::encoding::ObjectivePair;
use crate::solver::EvaluatedSolution;

/// `a` dominates `b` iff it is no worse in both objectives and strictly
/// better in at least one.
pub fn dominates(a: &ObjectivePair, b: &ObjectivePair) -> bool {
    a.f1 <= b.f1 && a.f2 <= b.f2 && (a.f1 < b.f1 || a.f2 < b.f2)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InsertOutcome {
    Rejected,
    Accepted { removed: usize },
    DuplicateKept,
}

/// Mutually non-dominated solutions, at most one per objective pair, kept
/// sorted ascending by `f1` (so `f2` is strictly descending).
#[derive(Debug, Clone, Default)]
pub struct Archive {
    entries: Vec<EvaluatedSolution>,
}

impl Archive {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn insert(&mut self, sol: EvaluatedSolution) -> InsertOutcome {
        let p = sol.objectives;
        // First entry with f1 >= p.f1; everything before it has smaller f1.
        let pos = self.entries.partition_point(|e| e.objectives.f1 < p.f1);
        if let Some(e) = self.entries.get(pos) {
            if e.objectives == p {
                return InsertOutcome::DuplicateKept;
            }
        }
        // The only candidate dominators are the entry just left of `pos`
        // (largest f1 below p.f1, smallest f2 among those) and an entry with
        // equal f1.
        let left_dominates = pos > 0 && self.entries[pos - 1].objectives.f2 <= p.f2;
        let equal_dominates = self
            .entries
            .get(pos)
            .is_some_and(|e| e.objectives.f1 == p.f1 && e.objectives.f2 <= p.f2);
        if left_dominates || equal_dominates {
            return InsertOutcome::Rejected;
        }
        // Dominated entries form a contiguous run starting at `pos`.
        let end = pos
            + self.entries[pos..]
                .iter()
                .take_while(|e| e.objectives.f2 >= p.f2)
                .count();
        let removed = end - pos;
        self.entries.splice(pos..end, std::iter::once(sol));
        InsertOutcome::Accepted { removed }
    }

    /// Entries ascending by `f1`.
    pub fn front_sorted(&self) -> &[EvaluatedSolution] {
        &self.entries
    }

    pub fn objectives(&self) -> Vec<ObjectivePair> {
        self.entries.iter().map(|e| e.objectives).collect()
    }

    pub fn into_entries(self) -> Vec<EvaluatedSolution> {
        self.entries
    }
}

impl Extend<EvaluatedSolution> for Archive {
    fn extend<T: IntoIterator<Item = EvaluatedSolution>>(&mut self, iter: T) {
        for s in iter {
            self.insert(s);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encoding::{Assignment, WeightVector};
    use proptest::prelude::*;

    fn sol(f1: f64, f2: f64) -> EvaluatedSolution {
        EvaluatedSolution {
            assignment: Assignment::identity(2),
            objectives: ObjectivePair::new(f1, f2),
            weight: WeightVector::EQUAL,
        }
    }

    fn archive_of(pts: &[(f64, f64)]) -> Archive {
        let mut a = Archive::new();
        for &(x, y) in pts {
            a.insert(sol(x, y));
        }
        a
    }

    #[test]
    fn dominance_examples() {
        let p = ObjectivePair::new;
        assert!(dominates(&p(1.0, 1.0), &p(2.0, 2.0)));
        assert!(!dominates(&p(1.0, 2.0), &p(2.0, 1.0)));
        assert!(!dominates(&p(2.0, 1.0), &p(1.0, 2.0)));
        assert!(!dominates(&p(1.0, 1.0), &p(1.0, 1.0)));
        assert!(dominates(&p(1.0, 1.0), &p(1.0, 2.0)));
    }

    #[test]
    fn insert_examples() {
        let mut a = archive_of(&[(1.0, 1.0)]);
        assert_eq!(a.insert(sol(2.0, 2.0)), InsertOutcome::Rejected);

        let mut a = archive_of(&[(1.0, 2.0), (2.0, 1.0)]);
        assert_eq!(a.insert(sol(0.0, 0.0)), InsertOutcome::Accepted { removed: 2 });
        assert_eq!(a.len(), 1);

        let mut a = archive_of(&[(1.0, 2.0)]);
        assert_eq!(a.insert(sol(1.0, 2.0)), InsertOutcome::DuplicateKept);
        assert_eq!(a.len(), 1);
    }

    #[test]
    fn duplicate_keeps_first_assignment() {
        let mut a = Archive::new();
        a.insert(sol(1.0, 2.0));
        let mut other = sol(1.0, 2.0);
        other.assignment = Assignment::new(vec![1, 0]).unwrap();
        assert_eq!(a.insert(other), InsertOutcome::DuplicateKept);
        assert_eq!(a.front_sorted()[0].assignment, Assignment::identity(2));
    }

    #[test]
    fn front_sorted_examples() {
        let a = archive_of(&[(2.0, 1.0), (1.0, 2.0)]);
        let f: Vec<_> = a.objectives();
        assert_eq!(f, vec![ObjectivePair::new(1.0, 2.0), ObjectivePair::new(2.0, 1.0)]);
        assert!(Archive::new().front_sorted().is_empty());
        assert_eq!(archive_of(&[(3.0, 3.0)]).len(), 1);
    }

    #[test]
    fn equal_f1_smaller_f2_replaces() {
        let mut a = archive_of(&[(1.0, 5.0), (3.0, 2.0)]);
        assert_eq!(a.insert(sol(1.0, 4.0)), InsertOutcome::Accepted { removed: 1 });
        assert_eq!(a.insert(sol(1.0, 4.5)), InsertOutcome::Rejected);
        assert_eq!(
            a.objectives(),
            vec![ObjectivePair::new(1.0, 4.0), ObjectivePair::new(3.0, 2.0)]
        );
    }

    fn brute_force(pts: &[(f64, f64)]) -> Vec<ObjectivePair> {
        let ps: Vec<ObjectivePair> = pts.iter().map(|&(a, b)| ObjectivePair::new(a, b)).collect();
        let mut out: Vec<ObjectivePair> = ps
            .iter()
            .filter(|p| !ps.iter().any(|q| dominates(q, p)))
            .copied()
            .collect();
        out.sort_by(|a, b| a.f1.total_cmp(&b.f1));
        out.dedup();
        out
    }

    proptest! {
        #[test]
        fn matches_brute_force(pts in proptest::collection::vec((0u8..30, 0u8..30), 0..200)) {
            let pts: Vec<(f64, f64)> = pts.into_iter().map(|(a, b)| (a as f64, b as f64)).collect();
            let a = archive_of(&pts);
            prop_assert_eq!(a.objectives(), brute_force(&pts));
            for w in a.front_sorted().windows(2) {
                prop_assert!(w[0].objectives.f1 < w[1].objectives.f1);
                prop_assert!(w[0].objectives.f2 > w[1].objectives.f2);
            }
        }

        #[test]
        fn insert_is_idempotent(pts in proptest::collection::vec((0u8..30, 0u8..30), 1..50)) {
            let pts: Vec<(f64, f64)> = pts.into_iter().map(|(a, b)| (a as f64, b as f64)).collect();
            let mut a = archive_of(&pts);
            let before = a.objectives();
            for &(x, y) in &pts {
                let outcome = a.insert(sol(x, y));
                let accepted = matches!(outcome, InsertOutcome::Accepted { .. });
                prop_assert!(!accepted);
            }
            prop_assert_eq!(a.objectives(), before);
        }
    }
}
