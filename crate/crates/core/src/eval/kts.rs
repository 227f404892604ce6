//! Kernel temporal segmentation: cut a feature sequence into contiguous
//! segments minimizing within-segment scatter plus a per-segment penalty.
//!
//! The objective over a segmentation into m segments is
//!
//! ```text
//! sum_seg sum_{t in seg} ||f_t - mean(seg)||^2  +  lambda * m
//! ```
//!
//! minimized exactly by dynamic programming over all cut positions and all
//! m up to `max_segments`, in O(max_segments * T^2) time. Scatter costs come
//! from prefix sums, so each segment cost is O(D) to evaluate.

use crate::error::Result;
use crate::numerics::{Scalar, Tensor};

/// A partition of `[0, T)` into contiguous segments.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Segmentation {
    /// First frame of each segment; `starts[0] == 0`, strictly increasing.
    starts: Vec<usize>,
    /// Total frame count `T`.
    total: usize,
}

impl Segmentation {
    /// Build from segment start indices. Panics when the starts are not
    /// strictly increasing from zero or reach past the end.
    pub fn from_starts(starts: Vec<usize>, total: usize) -> Self {
        assert!(!starts.is_empty() && starts[0] == 0, "first segment must start at frame 0");
        assert!(starts.windows(2).all(|w| w[0] < w[1]), "segment starts must strictly increase");
        assert!(*starts.last().unwrap() < total, "segment start past the last frame");
        Segmentation { starts, total }
    }

    pub fn num_segments(&self) -> usize {
        self.starts.len()
    }

    /// First frame of each segment, starting with 0.
    pub fn starts(&self) -> &[usize] {
        &self.starts
    }

    pub fn total_frames(&self) -> usize {
        self.total
    }

    /// Half-open frame range of segment `k`.
    pub fn bounds(&self, k: usize) -> (usize, usize) {
        let start = self.starts[k];
        let end = self.starts.get(k + 1).copied().unwrap_or(self.total);
        (start, end)
    }

    pub fn len_of(&self, k: usize) -> usize {
        let (s, e) = self.bounds(k);
        e - s
    }

    pub fn segments(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.num_segments()).map(|k| self.bounds(k))
    }
}

/// Prefix sums enabling O(D) scatter lookups for any frame range.
struct ScatterTable {
    /// `sum[t]` = per-channel sums of frames `[0, t)`, flattened `[T+1, D]`.
    sum: Vec<f64>,
    /// `sq[t]` = total squared norm of frames `[0, t)`.
    sq: Vec<f64>,
    dim: usize,
}

impl ScatterTable {
    fn new<S: Scalar>(features: &Tensor<S>) -> Self {
        let (t, d) = (features.rows(), features.cols());
        let mut sum = vec![0.0; (t + 1) * d];
        let mut sq = vec![0.0; t + 1];
        for r in 0..t {
            let row = features.row(r);
            let (prev, next) = sum.split_at_mut((r + 1) * d);
            let prev = &prev[r * d..];
            let next = &mut next[..d];
            let mut s2 = 0.0;
            for c in 0..d {
                let v = row[c].as_f64();
                next[c] = prev[c] + v;
                s2 += v * v;
            }
            sq[r + 1] = sq[r] + s2;
        }
        ScatterTable { sum, sq, dim: d }
    }

    /// Within-segment scatter of frames `[i, j)`:
    /// `sum ||f_t||^2 - ||sum f_t||^2 / (j - i)`, clamped at zero against
    /// rounding.
    fn scatter(&self, i: usize, j: usize) -> f64 {
        debug_assert!(i < j);
        let n = (j - i) as f64;
        let (lo, hi) = (&self.sum[i * self.dim..(i + 1) * self.dim], &self.sum[j * self.dim..(j + 1) * self.dim]);
        let mut norm_sq = 0.0;
        for c in 0..self.dim {
            let s = hi[c] - lo[c];
            norm_sq += s * s;
        }
        ((self.sq[j] - self.sq[i]) - norm_sq / n).max(0.0)
    }
}

/// Segment `features` (`[T, D]`) into at most `max_segments` parts. With
/// `lambda: None` the penalty defaults to `scatter(whole) / (4 * max_segments)`,
/// which keeps the m-penalty on the scale of the data. Ties prefer fewer
/// segments, then earlier cuts.
pub fn kts_segment<S: Scalar>(features: &Tensor<S>, max_segments: usize, lambda: Option<f64>) -> Result<Segmentation> {
    let t = features.rows();
    if max_segments == 0 || max_segments > t {
        return Err(crate::Error::TooManySegments {
            requested: max_segments,
            frames: t,
        });
    }
    let table = ScatterTable::new(features);
    let lambda = lambda.unwrap_or_else(|| table.scatter(0, t) / (4.0 * max_segments as f64));

    // cost[m-1][j] = best scatter splitting frames [0, j) into exactly m
    // segments; parent[m-1][j] = start of the last segment in that optimum.
    let mut cost = vec![vec![f64::INFINITY; t + 1]; max_segments];
    let mut parent = vec![vec![0usize; t + 1]; max_segments];
    for j in 1..=t {
        cost[0][j] = table.scatter(0, j);
    }
    for m in 1..max_segments {
        // At least m frames are needed for m segments before the last one.
        for j in m + 1..=t {
            let mut best = f64::INFINITY;
            let mut best_i = m;
            for i in m..j {
                let c = cost[m - 1][i] + table.scatter(i, j);
                if c < best {
                    best = c;
                    best_i = i;
                }
            }
            cost[m][j] = best;
            parent[m][j] = best_i;
        }
    }

    let mut best_m = 1;
    let mut best_obj = cost[0][t] + lambda;
    for m in 2..=max_segments {
        let obj = cost[m - 1][t] + lambda * m as f64;
        if obj < best_obj {
            best_obj = obj;
            best_m = m;
        }
    }

    let mut starts = vec![0; best_m];
    let mut j = t;
    for m in (1..best_m).rev() {
        let i = parent[m][j];
        starts[m] = i;
        j = i;
    }
    Ok(Segmentation::from_starts(starts, t))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::Rng;

    fn column(vals: &[f64]) -> Tensor<f64> {
        Tensor::from_vec(&[vals.len(), 1], vals.to_vec())
    }

    /// Objective of an explicit segmentation, computed naively (two-pass
    /// mean, no prefix sums) — the independent cost oracle.
    fn naive_objective(features: &Tensor<f64>, starts: &[usize], lambda: f64) -> f64 {
        let t = features.rows();
        let d = features.cols();
        let mut total = 0.0;
        for (k, &s) in starts.iter().enumerate() {
            let e = starts.get(k + 1).copied().unwrap_or(t);
            let n = (e - s) as f64;
            let mut mean = vec![0.0; d];
            for r in s..e {
                for c in 0..d {
                    mean[c] += features.at(r, c);
                }
            }
            for m in &mut mean {
                *m /= n;
            }
            for r in s..e {
                for c in 0..d {
                    let diff = features.at(r, c) - mean[c];
                    total += diff * diff;
                }
            }
        }
        total + lambda * starts.len() as f64
    }

    /// All segmentations of [0, t) into at most m_max parts.
    fn all_segmentations(t: usize, m_max: usize) -> Vec<Vec<usize>> {
        let mut out = Vec::new();
        // Choose interior cut points: any subset of {1..t-1} of size < m_max.
        fn rec(next: usize, t: usize, left: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
            out.push(cur.clone());
            if left == 0 {
                return;
            }
            for cut in next..t {
                cur.push(cut);
                rec(cut + 1, t, left - 1, cur, out);
                cur.pop();
            }
        }
        let mut cur = vec![0];
        rec(1, t, m_max - 1, &mut cur, &mut out);
        out
    }

    #[test]
    fn constant_features_collapse_to_one_segment() {
        let f = column(&[2.5; 17]);
        for lambda in [None, Some(0.1), Some(10.0)] {
            let seg = kts_segment(&f, 5, lambda).unwrap();
            assert_eq!(seg.num_segments(), 1, "lambda {lambda:?}");
            assert_eq!(seg.bounds(0), (0, 17));
        }
    }

    #[test]
    fn two_constant_halves_split_at_the_midpoint() {
        let f = column(&[0.0, 0.0, 0.0, 0.0, 0.0, 1.0, 1.0, 1.0, 1.0, 1.0]);
        let seg = kts_segment(&f, 4, Some(0.1)).unwrap();
        assert_eq!(seg.num_segments(), 2);
        assert_eq!(seg.bounds(0), (0, 5));
        assert_eq!(seg.bounds(1), (5, 10));

        // And the exhaustive check agrees that no segmentation does better.
        let best = all_segmentations(10, 4)
            .iter()
            .map(|s| naive_objective(&f, s, 0.1))
            .fold(f64::INFINITY, f64::min);
        assert!((naive_objective(&f, &[0, 5], 0.1) - best).abs() < 1e-12);
    }

    #[test]
    fn dynamic_program_matches_exhaustive_enumeration() {
        let mut rng = Rng::seeded(7);
        for trial in 0..30 {
            let t = 4 + (trial % 9); // 4..=12
            let d = 1 + (trial % 2);
            let mut f = Tensor::zeros(&[t, d]);
            rng.fill_uniform(f.data_mut(), -1.0, 1.0);
            let lambda = rng.uniform_in(0.01, 0.5);
            let m_max = 1 + (trial % 3);

            let seg = kts_segment(&f, m_max, Some(lambda)).unwrap();
            let starts: Vec<usize> = seg.segments().map(|(s, _)| s).collect();
            let dp_obj = naive_objective(&f, &starts, lambda);
            let best = all_segmentations(t, m_max)
                .iter()
                .map(|s| naive_objective(&f, s, lambda))
                .fold(f64::INFINITY, f64::min);
            assert!(
                (dp_obj - best).abs() < 1e-9,
                "trial {trial}: dp objective {dp_obj} vs exhaustive {best} (t={t}, m_max={m_max}, lambda={lambda})"
            );
        }
    }

    #[test]
    fn more_penalty_never_means_more_segments() {
        let mut rng = Rng::seeded(8);
        let mut f = Tensor::<f64>::zeros(&[40, 2]);
        rng.fill_uniform(f.data_mut(), -1.0, 1.0);
        let mut last = usize::MAX;
        for lambda in [0.0, 0.05, 0.2, 1.0, 5.0, 50.0] {
            let m = kts_segment(&f, 8, Some(lambda)).unwrap().num_segments();
            assert!(m <= last, "lambda {lambda}: {m} segments after {last}");
            last = m;
        }
    }

    #[test]
    fn segment_count_request_is_bounded_by_frames() {
        let f = column(&[1.0, 2.0]);
        assert!(kts_segment(&f, 3, None).is_err());
        assert!(kts_segment(&f, 0, None).is_err());
        assert!(kts_segment(&f, 2, None).is_ok());
    }

    #[test]
    fn single_frame_video_is_one_segment() {
        let f = column(&[4.0]);
        let seg = kts_segment(&f, 1, None).unwrap();
        assert_eq!(seg.num_segments(), 1);
        assert_eq!(seg.bounds(0), (0, 1));
    }

    #[test]
    fn storage_precision_features_segment_like_their_f64_cast() {
        let mut rng = Rng::seeded(9);
        let mut f = Tensor::<f64>::zeros(&[30, 3]);
        rng.fill_uniform(f.data_mut(), -1.0, 1.0);
        let f32_view: Tensor<f32> = f.cast();
        let from32 = kts_segment(&f32_view, 6, Some(0.2)).unwrap();
        let from64 = kts_segment(&f32_view.cast::<f64>(), 6, Some(0.2)).unwrap();
        assert_eq!(from32, from64);
    }
}
