//! Bi-objective QAP instances and reference fronts.
//!
//! Instance files are whitespace-separated integers: the problem size `n`
//! followed by three `n x n` matrices. By default the matrices appear in the
//! order distance, flow 1, flow 2; [`MatrixOrder`] overrides that for
//! archives that use a different layout.

use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::archive::dominates;
use crate::encoding::ObjectivePair;
use crate::error::{Error, Result};

/// Dense row-major square matrix of non-negative integers.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SquareMatrix {
    n: usize,
    data: Vec<i64>,
}

impl SquareMatrix {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![0; n * n],
        }
    }

    pub fn from_rows(rows: &[Vec<i64>]) -> Result<Self> {
        let n = rows.len();
        let mut data = Vec::with_capacity(n * n);
        for (r, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(Error::Validation(format!(
                    "row {r} has {} entries, expected {n}",
                    row.len()
                )));
            }
            data.extend_from_slice(row);
        }
        Ok(Self { n, data })
    }

    fn from_flat(n: usize, data: Vec<i64>) -> Self {
        debug_assert_eq!(data.len(), n * n);
        Self { n, data }
    }

    #[inline]
    pub fn size(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> i64 {
        self.data[row * self.n + col]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, value: i64) {
        self.data[row * self.n + col] = value;
    }

    pub fn row(&self, row: usize) -> &[i64] {
        &self.data[row * self.n..(row + 1) * self.n]
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|&v| v == 0)
    }
}

/// One of the three matrices stored in an instance file.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MatrixKind {
    Distance,
    Flow1,
    Flow2,
}

impl FromStr for MatrixKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "distance" | "d" => Ok(MatrixKind::Distance),
            "flow1" | "h1" => Ok(MatrixKind::Flow1),
            "flow2" | "h2" => Ok(MatrixKind::Flow2),
            other => Err(Error::Validation(format!("unknown matrix name `{other}`"))),
        }
    }
}

/// Order in which the three matrices appear in an instance file.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MatrixOrder([MatrixKind; 3]);

impl MatrixOrder {
    pub fn new(order: [MatrixKind; 3]) -> Result<Self> {
        let all = [MatrixKind::Distance, MatrixKind::Flow1, MatrixKind::Flow2];
        if all.iter().all(|k| order.contains(k)) {
            Ok(Self(order))
        } else {
            Err(Error::Validation(
                "matrix order must name distance, flow1 and flow2 exactly once".into(),
            ))
        }
    }

    pub fn kinds(&self) -> [MatrixKind; 3] {
        self.0
    }
}

impl Default for MatrixOrder {
    fn default() -> Self {
        Self([MatrixKind::Distance, MatrixKind::Flow1, MatrixKind::Flow2])
    }
}

impl FromStr for MatrixOrder {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let kinds = s
            .split(',')
            .map(MatrixKind::from_str)
            .collect::<Result<Vec<_>>>()?;
        let kinds: [MatrixKind; 3] = kinds.try_into().map_err(|v: Vec<MatrixKind>| {
            Error::Validation(format!("matrix order needs 3 names, got {}", v.len()))
        })?;
        Self::new(kinds)
    }
}

/// A bi-objective QAP instance: two flow matrices over facilities and one
/// distance matrix over locations.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BiQapInstance {
    pub name: String,
    n: usize,
    flows: [SquareMatrix; 2],
    distances: SquareMatrix,
}

impl BiQapInstance {
    pub fn new(
        name: impl Into<String>,
        flows: [SquareMatrix; 2],
        distances: SquareMatrix,
    ) -> Result<Self> {
        let n = distances.size();
        if n < 2 {
            return Err(Error::Validation(format!("instance size must be >= 2, got {n}")));
        }
        for (k, flow) in flows.iter().enumerate() {
            if flow.size() != n {
                return Err(Error::Validation(format!(
                    "flow matrix {} is {}x{}, distance matrix is {n}x{n}",
                    k + 1,
                    flow.size(),
                    flow.size()
                )));
            }
        }
        let negative = flows
            .iter()
            .chain(std::iter::once(&distances))
            .any(|m| m.data.iter().any(|&v| v < 0));
        if negative {
            return Err(Error::Validation("matrix entries must be non-negative".into()));
        }
        Ok(Self {
            name: name.into(),
            n,
            flows,
            distances,
        })
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    /// Flow matrix for objective `k` (0 or 1), indexed `[facility][facility]`.
    #[inline]
    pub fn flow(&self, k: usize) -> &SquareMatrix {
        &self.flows[k]
    }

    /// Distance matrix indexed `[location][location]`.
    #[inline]
    pub fn distances(&self) -> &SquareMatrix {
        &self.distances
    }

    fn matrix(&self, kind: MatrixKind) -> &SquareMatrix {
        match kind {
            MatrixKind::Distance => &self.distances,
            MatrixKind::Flow1 => &self.flows[0],
            MatrixKind::Flow2 => &self.flows[1],
        }
    }

    /// Parses the whitespace-token instance format.
    pub fn parse(text: &str, order: MatrixOrder) -> Result<Self> {
        let mut tokens = text.split_whitespace();
        let first = tokens.next().ok_or(Error::TokenCount {
            expected: 1,
            found: 0,
        })?;
        let n = parse_int(first, 1)?;
        if n < 2 {
            return Err(Error::Validation(format!("instance size must be >= 2, got {n}")));
        }
        let n = n as usize;
        let rest: Vec<&str> = tokens.collect();
        let expected = 1 + 3 * n * n;
        if rest.len() + 1 != expected {
            return Err(Error::TokenCount {
                expected,
                found: rest.len() + 1,
            });
        }
        let mut values = Vec::with_capacity(rest.len());
        for (idx, tok) in rest.iter().enumerate() {
            values.push(parse_int(tok, idx + 2)?);
        }

        let mut slots: [Option<SquareMatrix>; 3] = [None, None, None];
        for (block, kind) in order.kinds().into_iter().enumerate() {
            let chunk = values[block * n * n..(block + 1) * n * n].to_vec();
            let slot = match kind {
                MatrixKind::Distance => 0,
                MatrixKind::Flow1 => 1,
                MatrixKind::Flow2 => 2,
            };
            slots[slot] = Some(SquareMatrix::from_flat(n, chunk));
        }
        let [d, h1, h2] = slots.map(|m| m.expect("order covers every matrix"));
        Self::new(String::new(), [h1, h2], d)
    }

    /// Reads an instance file; the file name becomes the instance name.
    pub fn load(path: &Path, order: MatrixOrder) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut inst = Self::parse(&text, order)
            .map_err(|e| e.context(format!("parsing {}", path.display())))?;
        inst.name = path
            .file_name()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        Ok(inst)
    }

    /// Renders the instance in the same format [`BiQapInstance::parse`] reads.
    pub fn render(&self, order: MatrixOrder) -> String {
        let mut out = String::new();
        writeln!(out, "{}", self.n).unwrap();
        for kind in order.kinds() {
            out.push('\n');
            let m = self.matrix(kind);
            for r in 0..self.n {
                let row: Vec<String> = m.row(r).iter().map(i64::to_string).collect();
                writeln!(out, "{}", row.join(" ")).unwrap();
            }
        }
        out
    }
}

/// `position` is the 1-based token index.
fn parse_int(tok: &str, position: usize) -> Result<i64> {
    tok.parse::<i64>().map_err(|_| Error::BadToken {
        position,
        token: tok.to_string(),
    })
}

/// Best known (or exact) Pareto front of an instance.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ReferenceFront {
    points: Vec<ObjectivePair>,
}

impl ReferenceFront {
    /// Builds a front from arbitrary points, dropping dominated and duplicate
    /// ones and sorting ascending by `f1`.
    pub fn from_points(points: impl IntoIterator<Item = ObjectivePair>) -> Self {
        let mut pts: Vec<ObjectivePair> = points.into_iter().collect();
        pts.sort_by(|a, b| a.f1.total_cmp(&b.f1).then(a.f2.total_cmp(&b.f2)));
        pts.dedup();
        let kept: Vec<ObjectivePair> = pts
            .iter()
            .filter(|p| !pts.iter().any(|q| dominates(q, p)))
            .copied()
            .collect();
        Self { points: kept }
    }

    pub fn points(&self) -> &[ObjectivePair] {
        &self.points
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    /// Parses one `f1 f2` pair per non-empty line. Lines starting with `#`
    /// are comments.
    pub fn parse(text: &str) -> Result<Self> {
        let mut pts = Vec::new();
        for (idx, line) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line
                .split(|c: char| c.is_whitespace() || c == ',')
                .filter(|s| !s.is_empty())
                .collect();
            if fields.len() != 2 {
                return Err(Error::Parse {
                    line: line_no,
                    message: format!("expected 2 values, found {}", fields.len()),
                });
            }
            let mut vals = [0.0; 2];
            for (slot, field) in vals.iter_mut().zip(&fields) {
                *slot = field
                    .parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| Error::Parse {
                        line: line_no,
                        message: format!("`{field}` is not a finite number"),
                    })?;
            }
            pts.push(ObjectivePair::new(vals[0], vals[1]));
        }
        Ok(Self::from_points(pts))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text).map_err(|e| e.context(format!("parsing {}", path.display())))
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for p in &self.points {
            writeln!(out, "{} {}", p.f1, p.f2).unwrap();
        }
        out
    }
}

const SYNTH_MAX_ENTRY: i64 = 99;
const SYNTH_GRID: i64 = 100;
const SYNTH_TOLERANCE: f64 = 0.15;
const SYNTH_ATTEMPTS: usize = 64;

/// Generates a random instance whose two flow matrices have the requested
/// correlation over their off-diagonal entries.
///
/// Flow 1 is uniform in `[0, 99]`. Flow 2 mixes flow 1 with an independent
/// uniform draw `U`: `round(rho * H1 + sqrt(1 - rho^2) * U)` for `rho >= 0`
/// and `round(|rho| * (99 - H1) + sqrt(1 - rho^2) * U)` for `rho < 0`, which
/// keeps every entry non-negative without clamping. Distances are rounded
/// euclidean distances between random points on a 100 x 100 grid. Diagonals
/// are zero. Candidates whose sample correlation misses `rho` by more than
/// 0.15 are redrawn from the same stream a bounded number of times.
///
/// The generator is ChaCha8 seeded with `seed`.
pub fn synth_instance(n: usize, correlation: f64, seed: u64) -> Result<BiQapInstance> {
    if n < 2 {
        return Err(Error::Validation(format!("instance size must be >= 2, got {n}")));
    }
    if !(-1.0..=1.0).contains(&correlation) {
        return Err(Error::Validation(format!(
            "correlation must lie in [-1, 1], got {correlation}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = (1.0 - correlation * correlation).max(0.0).sqrt();

    let mut last = f64::NAN;
    for _ in 0..SYNTH_ATTEMPTS {
        let mut h1 = SquareMatrix::zeros(n);
        let mut h2 = SquareMatrix::zeros(n);
        for u in 0..n {
            for v in 0..n {
                if u == v {
                    continue;
                }
                let a = rng.gen_range(0..=SYNTH_MAX_ENTRY);
                let e = rng.gen_range(0..=SYNTH_MAX_ENTRY) as f64;
                let base = if correlation >= 0.0 {
                    correlation * a as f64
                } else {
                    -correlation * (SYNTH_MAX_ENTRY - a) as f64
                };
                h1.set(u, v, a);
                h2.set(u, v, (base + noise * e).round() as i64);
            }
        }
        let r = off_diagonal_correlation(&h1, &h2);
        if r.is_finite() && (r - correlation).abs() <= SYNTH_TOLERANCE {
            let distances = grid_distances(n, &mut rng);
            let name = format!("synth.n{n}.r{correlation}.s{seed}");
            return BiQapInstance::new(name, [h1, h2], distances);
        }
        last = r;
    }
    Err(Error::Generation(format!(
        "could not reach correlation {correlation} within {SYNTH_TOLERANCE} for n = {n} \
         after {SYNTH_ATTEMPTS} attempts (last sample correlation {last})"
    )))
}

fn grid_distances(n: usize, rng: &mut ChaCha8Rng) -> SquareMatrix {
    let pts: Vec<(i64, i64)> = (0..n)
        .map(|_| (rng.gen_range(0..SYNTH_GRID), rng.gen_range(0..SYNTH_GRID)))
        .collect();
    let mut d = SquareMatrix::zeros(n);
    for i in 0..n {
        for l in 0..n {
            let (dx, dy) = (pts[i].0 - pts[l].0, pts[i].1 - pts[l].1);
            d.set(i, l, ((dx * dx + dy * dy) as f64).sqrt().round() as i64);
        }
    }
    d
}

/// Pearson correlation of the off-diagonal entries of two matrices.
pub fn off_diagonal_correlation(a: &SquareMatrix, b: &SquareMatrix) -> f64 {
    let n = a.size();
    let pairs: Vec<(f64, f64)> = (0..n)
        .flat_map(|u| (0..n).filter(move |&v| v != u).map(move |v| (u, v)))
        .map(|(u, v)| (a.get(u, v) as f64, b.get(u, v) as f64))
        .collect();
    let m = pairs.len() as f64;
    let (ma, mb) = pairs
        .iter()
        .fold((0.0, 0.0), |(sa, sb), &(x, y)| (sa + x / m, sb + y / m));
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for &(x, y) in &pairs {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    sab / (saa * sbb).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn parses_default_order() {
        let inst = BiQapInstance::parse("2\n0 1\n1 0\n0 2\n2 0\n0 3\n3 0", MatrixOrder::default())
            .unwrap();
        assert_eq!(inst.n(), 2);
        assert_eq!(inst.distances().row(0), &[0, 1]);
        assert_eq!(inst.distances().row(1), &[1, 0]);
        assert_eq!(inst.flow(0).row(0), &[0, 2]);
        assert_eq!(inst.flow(1).row(1), &[3, 0]);
    }

    #[test]
    fn respects_matrix_order_override() {
        let order: MatrixOrder = "flow1,flow2,distance".parse().unwrap();
        let inst = BiQapInstance::parse("2  0 1 1 0  0 2 2 0  0 3 3 0", order).unwrap();
        assert_eq!(inst.flow(0).row(0), &[0, 1]);
        assert_eq!(inst.flow(1).row(0), &[0, 2]);
        assert_eq!(inst.distances().row(0), &[0, 3]);
    }

    #[test]
    fn rejects_bad_order() {
        assert!("distance,flow1".parse::<MatrixOrder>().is_err());
        assert!("distance,flow1,flow1".parse::<MatrixOrder>().is_err());
        assert!("distance,flow1,speed".parse::<MatrixOrder>().is_err());
    }

    #[test]
    fn missing_matrices_is_token_count_error() {
        let err = BiQapInstance::parse("2\n0 1\n1 0", MatrixOrder::default()).unwrap_err();
        assert!(matches!(
            err,
            Error::TokenCount {
                expected: 13,
                found: 5
            }
        ));
    }

    #[test]
    fn non_integer_token_is_parse_error() {
        let err = BiQapInstance::parse("2 0 1 1 0 0 2 2 0 0 3 3 x", MatrixOrder::default())
            .unwrap_err();
        assert!(matches!(err, Error::BadToken { position: 13, .. }));
        let err = BiQapInstance::parse("2 0 1 1 0 0 2 2 0 0 3 3 1.5", MatrixOrder::default())
            .unwrap_err();
        assert!(matches!(err, Error::BadToken { .. }));
    }

    #[test]
    fn size_below_two_is_validation_error() {
        let err = BiQapInstance::parse("1 0 0 0", MatrixOrder::default()).unwrap_err();
        assert!(matches!(err, Error::Validation(_)));
    }

    #[test]
    fn negative_entry_is_validation_error() {
        let err = BiQapInstance::parse("2 0 -1 1 0 0 2 2 0 0 3 3 0", MatrixOrder::default())
            .unwrap_err();
        assert!(matches!(err, Error::Validation(_)));
    }

    #[test]
    fn diagonal_entries_are_kept() {
        let inst = BiQapInstance::parse("2 4 1 1 4 7 2 2 0 0 3 3 9", MatrixOrder::default())
            .unwrap();
        assert_eq!(inst.distances().get(0, 0), 4);
        assert_eq!(inst.flow(0).get(0, 0), 7);
        assert_eq!(inst.flow(1).get(1, 1), 9);
    }

    #[test]
    fn front_examples() {
        let f = ReferenceFront::parse("1 2\n2 1").unwrap();
        assert_eq!(
            f.points(),
            &[ObjectivePair::new(1.0, 2.0), ObjectivePair::new(2.0, 1.0)]
        );
        let f = ReferenceFront::parse("1 2\n2 3").unwrap();
        assert_eq!(f.points(), &[ObjectivePair::new(1.0, 2.0)]);
        assert!(ReferenceFront::parse("").unwrap().is_empty());
    }

    #[test]
    fn front_sorted_and_deduplicated() {
        let f = ReferenceFront::parse("5 1\n\n1 5\n3 3\n3 3\n# comment\n4 4\n").unwrap();
        assert_eq!(
            f.points(),
            &[
                ObjectivePair::new(1.0, 5.0),
                ObjectivePair::new(3.0, 3.0),
                ObjectivePair::new(5.0, 1.0)
            ]
        );
    }

    #[test]
    fn front_malformed_line_reports_line_number() {
        match ReferenceFront::parse("1 2\n3\n").unwrap_err() {
            Error::Parse { line, .. } => assert_eq!(line, 2),
            e => panic!("unexpected {e:?}"),
        }
        match ReferenceFront::parse("1 2\n\n3 abc\n").unwrap_err() {
            Error::Parse { line, .. } => assert_eq!(line, 3),
            e => panic!("unexpected {e:?}"),
        }
    }

    #[test]
    fn synth_is_deterministic() {
        let a = synth_instance(6, 0.0, 1).unwrap();
        let b = synth_instance(6, 0.0, 1).unwrap();
        assert_eq!(a, b);
        let c = synth_instance(6, 0.0, 2).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn synth_full_correlation() {
        let inst = synth_instance(6, 1.0, 1).unwrap();
        let r = off_diagonal_correlation(inst.flow(0), inst.flow(1));
        assert!(r >= 0.85, "r = {r}");
    }

    #[test]
    fn synth_hits_target_correlations() {
        for &rho in &[-1.0, -0.75, 0.0, 0.75] {
            let inst = synth_instance(25, rho, 7).unwrap();
            let r = off_diagonal_correlation(inst.flow(0), inst.flow(1));
            assert!((r - rho).abs() <= 0.15, "rho {rho}: r = {r}");
            for u in 0..25 {
                assert_eq!(inst.flow(0).get(u, u), 0);
                assert_eq!(inst.flow(1).get(u, u), 0);
                assert_eq!(inst.distances().get(u, u), 0);
            }
        }
    }

    #[test]
    fn synth_rejects_bad_arguments() {
        assert!(matches!(synth_instance(1, 0.0, 1), Err(Error::Validation(_))));
        assert!(matches!(synth_instance(5, 1.5, 1), Err(Error::Validation(_))));
    }

    #[test]
    fn synth_unreachable_correlation() {
        // Two off-diagonal entries always correlate at +-1 or not at all.
        assert!(matches!(synth_instance(2, 0.0, 1), Err(Error::Generation(_))));
    }

    fn arb_instance() -> impl Strategy<Value = BiQapInstance> {
        (2usize..6).prop_flat_map(|n| {
            proptest::collection::vec(0i64..1000, 3 * n * n).prop_map(move |v| {
                let m = |k: usize| SquareMatrix::from_flat(n, v[k * n * n..(k + 1) * n * n].to_vec());
                BiQapInstance::new(String::new(), [m(1), m(2)], m(0)).unwrap()
            })
        })
    }

    proptest! {
        #[test]
        fn render_parse_round_trip(inst in arb_instance(), pick in 0usize..6) {
            use MatrixKind::*;
            let orders = [
                [Distance, Flow1, Flow2], [Distance, Flow2, Flow1], [Flow1, Distance, Flow2],
                [Flow1, Flow2, Distance], [Flow2, Distance, Flow1], [Flow2, Flow1, Distance],
            ];
            let order = MatrixOrder::new(orders[pick]).unwrap();
            let back = BiQapInstance::parse(&inst.render(order), order).unwrap();
            prop_assert_eq!(back, inst);
        }

        #[test]
        fn parsed_front_is_non_dominated(pts in proptest::collection::vec((0u8..20, 0u8..20), 0..30)) {
            let text: String = pts.iter().map(|(a, b)| format!("{a} {b}\n")).collect();
            let front = ReferenceFront::parse(&text).unwrap();
            let p = front.points();
            for a in p {
                for b in p {
                    prop_assert!(!dominates(a, b));
                }
            }
            for w in p.windows(2) {
                prop_assert!(w[0].f1 < w[1].f1);
            }
            // Every input point is weakly dominated by some kept point.
            for &(a, b) in &pts {
                let q = ObjectivePair::new(a as f64, b as f64);
                prop_assert!(p.iter().any(|k| k.f1 <= q.f1 && k.f2 <= q.f2));
            }
        }
    }
}
