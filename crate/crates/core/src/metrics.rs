//! Hypervolume, reference points and the two-sample Student t-test.

use serde::Serialize;

use crate::archive::dominates;
use crate::encoding::ObjectivePair;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ReferencePoint {
    pub r1: f64,
    pub r2: f64,
}

/// Component-wise maximum of a non-empty point set.
pub fn reference_point(points: &[ObjectivePair]) -> Result<ReferencePoint> {
    if points.is_empty() {
        return Err(Error::Validation(
            "reference point needs at least one point".into(),
        ));
    }
    let (r1, r2) = points.iter().fold(
        (f64::NEG_INFINITY, f64::NEG_INFINITY),
        |(a, b), p| (a.max(p.f1), b.max(p.f2)),
    );
    Ok(ReferencePoint { r1, r2 })
}

/// Area dominated by `points` and bounded by `reference`.
///
/// Only points strictly better than the reference in both objectives
/// contribute. Input order and dominated points do not matter.
pub fn hypervolume_2d(points: &[ObjectivePair], reference: ReferencePoint) -> f64 {
    let mut inside: Vec<ObjectivePair> = points
        .iter()
        .filter(|p| p.f1 < reference.r1 && p.f2 < reference.r2)
        .copied()
        .collect();
    inside.sort_by(|a, b| a.f1.total_cmp(&b.f1).then(a.f2.total_cmp(&b.f2)));

    // Sweep left to right keeping only points that improve f2.
    let mut front: Vec<ObjectivePair> = Vec::with_capacity(inside.len());
    for p in inside {
        if front.last().is_none_or(|q| p.f2 < q.f2) {
            front.push(p);
        }
    }
    debug_assert!(front
        .iter()
        .all(|p| !front.iter().any(|q| dominates(q, p))));

    let mut area = 0.0;
    for (k, p) in front.iter().enumerate() {
        let next_f1 = front.get(k + 1).map_or(reference.r1, |q| q.f1);
        area += (next_f1 - p.f1) * (reference.r2 - p.f2);
    }
    area
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Summary {
    pub mean: f64,
    /// Sample standard deviation (divisor `len - 1`), 0 for one value.
    pub std: f64,
}

pub fn summarize(values: &[f64]) -> Result<Summary> {
    if values.is_empty() {
        return Err(Error::Validation("cannot summarise an empty sample".into()));
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let std = if values.len() == 1 {
        0.0
    } else {
        (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    };
    Ok(Summary { mean, std })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TTest {
    /// `+-inf` when both samples have zero variance and different means.
    #[serde(serialize_with = "serialize_float")]
    pub t: f64,
    pub df: usize,
    pub p_value: f64,
    pub significant: bool,
}

/// JSON has no infinities; those are written as strings.
fn serialize_float<S: serde::Serializer>(v: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    if v.is_finite() {
        s.serialize_f64(*v)
    } else {
        s.serialize_str(if *v > 0.0 { "inf" } else { "-inf" })
    }
}

/// Pooled-variance two-sample Student t-test, two-sided.
pub fn t_test(a: &[f64], b: &[f64], alpha: f64) -> Result<TTest> {
    if a.len() < 2 || b.len() < 2 {
        return Err(Error::Validation(format!(
            "t-test needs at least 2 values per sample, got {} and {}",
            a.len(),
            b.len()
        )));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Validation(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    let sa = summarize(a)?;
    let sb = summarize(b)?;
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let df = a.len() + b.len() - 2;
    let pooled = ((na - 1.0) * sa.std.powi(2) + (nb - 1.0) * sb.std.powi(2)) / df as f64;
    let diff = sa.mean - sb.mean;

    if pooled == 0.0 {
        if diff == 0.0 {
            return Ok(TTest {
                t: 0.0,
                df,
                p_value: 1.0,
                significant: false,
            });
        }
        return Ok(TTest {
            t: f64::INFINITY.copysign(diff),
            df,
            p_value: 0.0,
            significant: true,
        });
    }

    let t = diff / (pooled * (1.0 / na + 1.0 / nb)).sqrt();
    let p_value = t_two_sided_p(t, df as f64);
    Ok(TTest {
        t,
        df,
        p_value,
        significant: p_value < alpha,
    })
}

/// `P(|T| >= |t|)` for Student's t with `df` degrees of freedom.
pub fn t_two_sided_p(t: f64, df: f64) -> f64 {
    if t == 0.0 {
        return 1.0;
    }
    let x = df / (df + t * t);
    regularized_incomplete_beta(x, 0.5 * df, 0.5)
}

const BETA_EPS: f64 = 1e-10;
const BETA_MAX_ITER: usize = 300;
const BETA_TINY: f64 = 1e-300;

/// `I_x(a, b)` via the continued fraction expansion (modified Lentz),
/// using the symmetry `I_x(a, b) = 1 - I_{1-x}(b, a)` where it converges
/// faster.
pub fn regularized_incomplete_beta(x: f64, a: f64, b: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    let ln_front = ln_gamma(a + b) - ln_gamma(a) - ln_gamma(b) + a * x.ln() + b * (1.0 - x).ln();
    let front = ln_front.exp();
    if x < (a + 1.0) / (a + b + 2.0) {
        front * beta_continued_fraction(x, a, b) / a
    } else {
        1.0 - front * beta_continued_fraction(1.0 - x, b, a) / b
    }
}

fn beta_continued_fraction(x: f64, a: f64, b: f64) -> f64 {
    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < BETA_TINY {
        d = BETA_TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..=BETA_MAX_ITER {
        let m = m as f64;
        let m2 = 2.0 * m;
        // Even step.
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < BETA_TINY {
            d = BETA_TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < BETA_TINY {
            c = BETA_TINY;
        }
        d = 1.0 / d;
        h *= d * c;
        // Odd step.
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < BETA_TINY {
            d = BETA_TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < BETA_TINY {
            c = BETA_TINY;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < BETA_EPS {
            break;
        }
    }
    h
}

/// Lanczos approximation (g = 7, 9 terms), accurate to ~15 digits for
/// positive arguments.
pub fn ln_gamma(x: f64) -> f64 {
    const G: f64 = 7.0;
    const COEFFS: [f64; 9] = [
        0.999_999_999_999_809_9,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_1,
        -176.615_029_162_140_6,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_572e-6,
        1.505_632_735_149_311_6e-7,
    ];
    if x < 0.5 {
        // Reflection.
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut acc = COEFFS[0];
    for (k, &c) in COEFFS.iter().enumerate().skip(1) {
        acc += c / (x + k as f64);
    }
    let t = x + G + 0.5;
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + acc.ln()
}
