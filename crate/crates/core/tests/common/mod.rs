//! Independent reference implementations and data builders shared by the
//! integration tests. Nothing here calls the library code it is compared with.

#![allow(dead_code)]

use emothaw::seed::{stream_rng, StreamRng};
use emothaw::{FeatureMatrix64, PenStatus, SamplePoint, TaskId, TaskRecording};
use rand::Rng;
use statrs::distribution::{ContinuousCDF, Normal};

/// Features by walking the recording one millisecond at a time: each
/// millisecond `[m, m + 1)` is charged to the status of the latest sample at
/// or before `m`.
pub fn brute_force_features(points: &[(i64, bool)]) -> [i64; 4] {
    let (mut in_air, mut on_paper) = (0, 0);
    if let (Some(first), Some(last)) = (points.first(), points.last()) {
        for ms in first.0..last.0 {
            let current = points.iter().rev().find(|p| p.0 <= ms).unwrap();
            if current.1 {
                on_paper += 1;
            } else {
                in_air += 1;
            }
        }
    }
    let total = points.last().map_or(0, |l| l.0 - points[0].0);
    let mut strokes = 0;
    let mut previous_down = false;
    for &(_, down) in points {
        if down && !previous_down {
            strokes += 1;
        }
        previous_down = down;
    }
    [in_air, on_paper, total, strokes]
}

/// Two-sided p-value of the Mann-Whitney U test, normal approximation with
/// tie correction.
pub fn mann_whitney_p(a: &[f64], b: &[f64]) -> f64 {
    let (n1, n2) = (a.len() as f64, b.len() as f64);
    let mut all: Vec<(f64, usize)> = a
        .iter()
        .map(|&v| (v, 0))
        .chain(b.iter().map(|&v| (v, 1)))
        .collect();
    all.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap());
    let n = all.len();
    let mut rank_sum_a = 0.0;
    let mut tie_term = 0.0;
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && all[j + 1].0 == all[i].0 {
            j += 1;
        }
        let mid_rank = (i + j) as f64 / 2.0 + 1.0;
        let t = (j - i + 1) as f64;
        tie_term += t * t * t - t;
        for item in &all[i..=j] {
            if item.1 == 0 {
                rank_sum_a += mid_rank;
            }
        }
        i = j + 1;
    }
    let u = rank_sum_a - n1 * (n1 + 1.0) / 2.0;
    let mean = n1 * n2 / 2.0;
    let nn = n1 + n2;
    let var = n1 * n2 / 12.0 * ((nn + 1.0) - tie_term / (nn * (nn - 1.0)));
    if var <= 0.0 {
        return 1.0;
    }
    let z = (u - mean).abs() / var.sqrt();
    2.0 * (1.0 - Normal::standard().cdf(z))
}

/// Upper tail of χ² with one degree of freedom by Simpson integration:
/// `P(χ² > x) = 2 ∫_{√x}^{∞} φ(s) ds`, truncated 40 standard deviations out.
pub fn chi2_1df_tail_simpson(x: f64) -> f64 {
    let phi = |s: f64| (-0.5 * s * s).exp() / (2.0 * std::f64::consts::PI).sqrt();
    let (lo, hi) = (x.sqrt(), x.sqrt() + 40.0);
    let steps = 200_000;
    let h = (hi - lo) / steps as f64;
    let mut acc = phi(lo) + phi(hi);
    for k in 1..steps {
        let w = if k % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * phi(lo + k as f64 * h);
    }
    2.0 * acc * h / 3.0
}

/// `n` rows, alternating labels; feature 0 is `U(0,1)` shifted by 2 for
/// positives, every other feature is `U(0,1)` noise.
pub fn planted_rows(
    n: usize,
    n_features: usize,
    rng: &mut StreamRng,
) -> (Vec<Vec<f64>>, Vec<bool>) {
    let labels: Vec<bool> = (0..n).map(|i| i % 2 == 0).collect();
    let rows = labels
        .iter()
        .map(|&l| {
            let mut r: Vec<f64> = (0..n_features).map(|_| rng.random::<f64>()).collect();
            r[0] = if l { 2.0 } else { 0.0 } + rng.random::<f64>();
            r
        })
        .collect();
    (rows, labels)
}

pub fn planted(n: usize, n_features: usize, seed: u64) -> (Vec<Vec<f64>>, Vec<bool>) {
    planted_rows(n, n_features, &mut stream_rng(seed))
}

pub fn planted_matrix(n: usize, n_features: usize, seed: u64) -> (FeatureMatrix64, Vec<bool>) {
    let (rows, labels) = planted(n, n_features, seed);
    (FeatureMatrix64::from_rows(rows).unwrap(), labels)
}

/// Pure noise rows with balanced labels.
pub fn noise(n: usize, n_features: usize, seed: u64) -> (Vec<Vec<f64>>, Vec<bool>) {
    let mut rng = stream_rng(seed);
    let labels = (0..n).map(|i| i % 2 == 0).collect();
    let rows = (0..n)
        .map(|_| (0..n_features).map(|_| rng.random::<f64>()).collect())
        .collect();
    (rows, labels)
}

/// A strictly valid recording of up to `max_points` samples with random gaps
/// of 1..=`max_gap` ms.
pub fn random_recording(rng: &mut StreamRng, max_points: usize, max_gap: i64) -> TaskRecording {
    let n = rng.random_range(0..=max_points);
    let task = TaskId::ALL[rng.random_range(0..7)];
    let mut t = rng.random_range(-1_000..1_000_000i64);
    let points = (0..n)
        .map(|_| {
            t += rng.random_range(1..=max_gap);
            let down = rng.random_bool(0.5);
            SamplePoint {
                x: rng.random_range(-50_000..50_000),
                y: rng.random_range(-50_000..50_000),
                timestamp: t,
                pen_status: if down {
                    PenStatus::OnPaper
                } else {
                    PenStatus::InAir
                },
                azimuth_raw: rng.random_range(0..=4095),
                altitude_raw: rng.random_range(0..=1023),
                pressure: if down { rng.random_range(1..=4096) } else { 0 },
            }
        })
        .collect();
    TaskRecording::new(task, points)
}

pub fn as_pairs(rec: &TaskRecording) -> Vec<(i64, bool)> {
    rec.points
        .iter()
        .map(|p| (p.timestamp, p.pen_status == PenStatus::OnPaper))
        .collect()
}
