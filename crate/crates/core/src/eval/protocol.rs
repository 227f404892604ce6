//! Keyshot construction and summary scoring.
//!
//! Both the predicted and the annotated side of a comparison are reduced to
//! the same shape — a subset of temporal segments whose total length fits a
//! 15%-of-duration budget — and then compared frame-by-frame.

use crate::error::Result;
use crate::eval::knapsack::knapsack_select;
use crate::eval::kts::{kts_segment, Segmentation};
use crate::numerics::{Scalar, Tensor};
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default)]
pub struct EvalConfig {
    /// Summary budget as a fraction of the video length.
    pub budget_fraction: f64,
    /// Keyframes a segment needs to become a ground-truth candidate. The
    /// protocol standard is 1; 2 exists for the stricter literal reading of
    /// "more than one".
    pub min_keyframes: usize,
    /// Upper bound on KTS segments; default is one segment per ~25 frames.
    pub max_segments: Option<usize>,
    /// KTS penalty; default normalizes by whole-video scatter.
    pub lambda: Option<f64>,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            budget_fraction: 0.15,
            min_keyframes: 1,
            max_segments: None,
            lambda: None,
        }
    }
}

impl EvalConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.budget_fraction) {
            return Err(crate::Error::InvalidConfig(format!(
                "budget fraction {} outside [0, 1]",
                self.budget_fraction
            )));
        }
        if self.min_keyframes == 0 {
            return Err(crate::Error::InvalidConfig("min_keyframes must be >= 1".into()));
        }
        if self.max_segments == Some(0) {
            return Err(crate::Error::InvalidConfig("max_segments must be >= 1".into()));
        }
        Ok(())
    }

    /// Segment budget for a `t`-frame video: one per ~25 frames by default.
    pub fn segments_for(&self, t: usize) -> usize {
        let auto = ((t as f64 / 25.0).round() as usize).max(1);
        self.max_segments.unwrap_or(auto).min(t)
    }

    /// Frame budget for a `t`-frame video.
    pub fn budget_frames(&self, t: usize) -> usize {
        (self.budget_fraction * t as f64).floor() as usize
    }
}

/// A keyshot selection: segment indices plus the frame mask they induce.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Keyshots {
    pub selected: Vec<usize>,
    pub mask: Vec<bool>,
}

impl Keyshots {
    fn from_selection(selected: Vec<usize>, seg: &Segmentation) -> Self {
        let mut mask = vec![false; seg.total_frames()];
        for &k in &selected {
            let (s, e) = seg.bounds(k);
            for m in &mut mask[s..e] {
                *m = true;
            }
        }
        Keyshots { selected, mask }
    }

    pub fn frames(&self) -> usize {
        self.mask.iter().filter(|&&m| m).count()
    }
}

/// Turn per-frame importance scores into keyshots: each segment is valued by
/// the sum of its frame scores and weighed by its length, then packed into
/// the frame budget.
pub fn scores_to_keyshots<S: Scalar>(scores: &[S], seg: &Segmentation, budget_fraction: f64) -> Result<Keyshots> {
    let t = seg.total_frames();
    if scores.len() != t {
        return Err(crate::Error::LengthMismatch {
            context: "scores vs segmentation",
            len: scores.len(),
            expected: t,
        });
    }
    let budget = (budget_fraction * t as f64).floor() as usize;
    let values: Vec<f64> = seg
        .segments()
        .map(|(s, e)| scores[s..e].iter().map(|v| v.as_f64()).sum())
        .collect();
    let weights: Vec<usize> = seg.segments().map(|(s, e)| e - s).collect();
    let selected = knapsack_select(&values, &weights, budget);
    Ok(Keyshots::from_selection(selected, seg))
}

/// Turn an annotated keyframe mask into keyshots: segments holding at least
/// `min_keyframes` keyframes are candidates valued by their length (longer
/// shots carry more of the annotation), packed into the same frame budget.
pub fn keyframes_to_keyshots(
    keyframes: &[bool],
    seg: &Segmentation,
    budget_fraction: f64,
    min_keyframes: usize,
) -> Result<Keyshots> {
    let t = seg.total_frames();
    if keyframes.len() != t {
        return Err(crate::Error::LengthMismatch {
            context: "keyframes vs segmentation",
            len: keyframes.len(),
            expected: t,
        });
    }
    let budget = (budget_fraction * t as f64).floor() as usize;
    let mut candidates = Vec::new();
    let mut values = Vec::new();
    let mut weights = Vec::new();
    for (k, (s, e)) in seg.segments().enumerate() {
        let hits = keyframes[s..e].iter().filter(|&&b| b).count();
        if hits >= min_keyframes {
            candidates.push(k);
            values.push((e - s) as f64);
            weights.push(e - s);
        }
    }
    let picked = knapsack_select(&values, &weights, budget);
    let selected = picked.into_iter().map(|i| candidates[i]).collect();
    Ok(Keyshots::from_selection(selected, seg))
}

/// Temporal-overlap precision and recall of mask `a` against reference `b`.
pub fn precision_recall(a: &[bool], b: &[bool]) -> Result<(f64, f64)> {
    if a.len() != b.len() {
        return Err(crate::Error::LengthMismatch {
            context: "summary masks",
            len: a.len(),
            expected: b.len(),
        });
    }
    let overlap = a.iter().zip(b).filter(|(&x, &y)| x && y).count() as f64;
    let na = a.iter().filter(|&&x| x).count() as f64;
    let nb = b.iter().filter(|&&x| x).count() as f64;
    let p = if na > 0.0 { overlap / na } else { 0.0 };
    let r = if nb > 0.0 { overlap / nb } else { 0.0 };
    Ok((p, r))
}

/// Harmonic F-measure on a 0–100 scale; zero when both components vanish.
pub fn f_measure(p: f64, r: f64) -> f64 {
    if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r) * 100.0
    }
}

/// Everything a per-video evaluation line reports.
#[derive(Clone, Debug)]
pub struct EvalResult {
    pub precision: f64,
    pub recall: f64,
    pub f: f64,
    /// Segments the video was cut into.
    pub segments: usize,
    /// Frames in the predicted summary.
    pub predicted_frames: usize,
    /// Frames in the ground-truth summary.
    pub gt_frames: usize,
    /// Frames in both.
    pub overlap: usize,
}

/// Full protocol for one video: segment the features, build both keyshot
/// selections, compare the masks.
pub fn evaluate_video<S: Scalar>(
    scores: &[S],
    keyframes: &[bool],
    features: &Tensor<S>,
    cfg: &EvalConfig,
) -> Result<EvalResult> {
    cfg.validate()?;
    let t = features.rows();
    if scores.len() != t {
        return Err(crate::Error::LengthMismatch {
            context: "scores vs features",
            len: scores.len(),
            expected: t,
        });
    }
    if keyframes.len() != t {
        return Err(crate::Error::LengthMismatch {
            context: "keyframes vs features",
            len: keyframes.len(),
            expected: t,
        });
    }
    let seg = kts_segment(features, cfg.segments_for(t), cfg.lambda)?;
    let predicted = scores_to_keyshots(scores, &seg, cfg.budget_fraction)?;
    let gt = keyframes_to_keyshots(keyframes, &seg, cfg.budget_fraction, cfg.min_keyframes)?;
    let overlap = predicted.mask.iter().zip(&gt.mask).filter(|(&x, &y)| x && y).count();
    let (p, r) = precision_recall(&predicted.mask, &gt.mask)?;
    Ok(EvalResult {
        precision: p,
        recall: r,
        f: f_measure(p, r),
        segments: seg.num_segments(),
        predicted_frames: predicted.frames(),
        gt_frames: gt.frames(),
        overlap,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::Rng;
    use proptest::prelude::*;

    fn uniform_segmentation(t: usize, seg_len: usize) -> Segmentation {
        let starts = (0..t).step_by(seg_len).collect();
        Segmentation::from_starts(starts, t)
    }

    #[test]
    fn no_keyframes_select_nothing() {
        let seg = uniform_segmentation(20, 5);
        let ks = keyframes_to_keyshots(&[false; 20], &seg, 0.15, 1).unwrap();
        assert!(ks.selected.is_empty());
        assert_eq!(ks.frames(), 0);
    }

    #[test]
    fn one_keyframe_in_an_affordable_segment_selects_it() {
        // T = 20, budget = floor(3) = 3; segments of length 2 fit.
        let seg = uniform_segmentation(20, 2);
        let mut kf = [false; 20];
        kf[7] = true; // segment 3 = frames [6, 8)
        let ks = keyframes_to_keyshots(&kf, &seg, 0.15, 1).unwrap();
        assert_eq!(ks.selected, vec![3]);
        assert_eq!(ks.frames(), 2);
        assert!(ks.mask[6] && ks.mask[7]);
    }

    #[test]
    fn stricter_candidate_rule_drops_single_keyframe_segments() {
        let seg = uniform_segmentation(20, 2);
        let mut kf = [false; 20];
        kf[7] = true;
        kf[10] = true;
        kf[11] = true;
        let relaxed = keyframes_to_keyshots(&kf, &seg, 0.3, 1).unwrap();
        assert_eq!(relaxed.selected, vec![3, 5]);
        let strict = keyframes_to_keyshots(&kf, &seg, 0.3, 2).unwrap();
        assert_eq!(strict.selected, vec![5]);
    }

    #[test]
    fn uniform_scores_pick_the_earliest_segments_that_fit() {
        // Four segments of length 5, budget floor(0.55 * 20) = 11 -> two fit.
        let seg = uniform_segmentation(20, 5);
        let ks = scores_to_keyshots(&[0.5; 20], &seg, 0.55).unwrap();
        assert_eq!(ks.selected, vec![0, 1]);
    }

    #[test]
    fn zero_budget_selects_nothing() {
        let seg = uniform_segmentation(10, 2);
        let ks = scores_to_keyshots(&[0.9; 10], &seg, 0.0).unwrap();
        assert!(ks.selected.is_empty());
        let kf = keyframes_to_keyshots(&[true; 10], &seg, 0.0, 1).unwrap();
        assert!(kf.selected.is_empty());
    }

    #[test]
    fn score_selection_matches_exhaustive_subset_search() {
        let mut rng = Rng::seeded(1);
        for trial in 0..20 {
            let t = 30;
            // Irregular segmentation: cut at random strictly increasing spots.
            let mut starts = vec![0];
            let mut at = 0;
            loop {
                at += rng.range_inclusive(2, 7);
                if at >= t {
                    break;
                }
                starts.push(at);
            }
            let seg = Segmentation::from_starts(starts, t);
            let scores: Vec<f64> = (0..t).map(|_| rng.uniform()).collect();
            let ks = scores_to_keyshots(&scores, &seg, 0.3).unwrap();

            // Exhaustive: best subset of segments by summed score within the
            // budget (same back-to-front accumulation as the selector).
            let budget = (0.3 * t as f64).floor() as usize;
            let n = seg.num_segments();
            let mut best_val = 0.0;
            let mut best_frames = Vec::new();
            for mask in 0u32..(1 << n) {
                let picked: Vec<usize> = (0..n).filter(|k| mask & (1 << k) != 0).collect();
                let weight: usize = picked.iter().map(|&k| seg.len_of(k)).sum();
                if weight > budget {
                    continue;
                }
                let val = picked.iter().rev().fold(0.0, |acc, &k| {
                    let (s, e) = seg.bounds(k);
                    scores[s..e].iter().sum::<f64>() + acc
                });
                if val > best_val {
                    best_val = val;
                    best_frames = picked;
                }
            }
            assert_eq!(ks.selected, best_frames, "trial {trial}");
        }
    }

    #[test]
    fn precision_recall_worked_examples() {
        let a = [true, true, false, false];
        let b = [true, false, true, false];
        let (p, r) = precision_recall(&a, &b).unwrap();
        assert_eq!((p, r), (0.5, 0.5));

        let (p, r) = precision_recall(&a, &a).unwrap();
        assert_eq!((p, r), (1.0, 1.0));

        let disjoint = [false, false, true, true];
        let (p, r) = precision_recall(&a, &disjoint).unwrap();
        assert_eq!((p, r), (0.0, 0.0));

        assert!(precision_recall(&a, &[true]).is_err());
    }

    #[test]
    fn f_measure_worked_examples() {
        assert_eq!(f_measure(1.0, 1.0), 100.0);
        assert_eq!(f_measure(0.0, 0.7), 0.0);
        assert_eq!(f_measure(0.0, 0.0), 0.0);
        let f = f_measure(0.5, 0.25);
        assert!((f - 100.0 / 3.0).abs() < 1e-9, "got {f}");
    }

    #[test]
    fn perfect_agreement_scores_one_hundred() {
        // Planted geometry: segment 1 is the only candidate and both sides
        // select exactly it.
        const T: usize = 40;
        let seg = uniform_segmentation(T, 5); // budget floor(6) covers one segment
        let mut kf = [false; T];
        kf[7] = true;
        let mut scores = [0.01; T];
        for s in &mut scores[5..10] {
            *s = 0.99;
        }
        let pred = scores_to_keyshots(&scores, &seg, 0.15).unwrap();
        let gt = keyframes_to_keyshots(&kf, &seg, 0.15, 1).unwrap();
        assert_eq!(pred.selected, vec![1]);
        assert_eq!(pred, gt);
        let (p, r) = precision_recall(&pred.mask, &gt.mask).unwrap();
        assert_eq!(f_measure(p, r), 100.0);
    }

    fn features_with_blocks(t: usize) -> crate::Tensor64 {
        let mut f = crate::Tensor64::zeros(&[t, 2]);
        for r in 0..t {
            let block = (r / 5) as f64;
            f.data_mut()[2 * r] = block;
            f.data_mut()[2 * r + 1] = -block;
        }
        f
    }

    #[test]
    fn full_protocol_composes_the_pieces() {
        // Block-constant features give kts an exact 8-way cut at this lambda;
        // the score and keyframe plants both land on block 2 (frames 10..15),
        // which fits the floor(0.15 * 40) = 6 frame budget.
        const T: usize = 40;
        let features = features_with_blocks(T);
        let mut kf = [false; T];
        kf[12] = true;
        let mut scores = vec![0.05; T];
        for s in &mut scores[10..15] {
            *s = 0.95;
        }
        let cfg = EvalConfig {
            max_segments: Some(8),
            lambda: Some(0.5),
            ..EvalConfig::default()
        };
        let got = evaluate_video(&scores, &kf, &features, &cfg).unwrap();

        let seg = kts_segment(&features, cfg.segments_for(T), cfg.lambda).unwrap();
        assert_eq!(seg.num_segments(), 8, "one segment per constant block");
        let pred = scores_to_keyshots(&scores, &seg, cfg.budget_fraction).unwrap();
        let gt = keyframes_to_keyshots(&kf, &seg, cfg.budget_fraction, cfg.min_keyframes).unwrap();
        let (p, r) = precision_recall(&pred.mask, &gt.mask).unwrap();
        assert_eq!(got.precision, p);
        assert_eq!(got.recall, r);
        assert_eq!(got.f, f_measure(p, r));
        assert_eq!(got.segments, seg.num_segments());
        assert_eq!(pred.selected, vec![2]);
        assert_eq!(got.f, 100.0, "identical selections score a perfect F");
    }

    #[test]
    fn empty_ground_truth_scores_zero() {
        let t = 30;
        let features = features_with_blocks(t);
        let scores = vec![0.5; t];
        let got = evaluate_video(&scores, &[false; 30], &features, &EvalConfig::default()).unwrap();
        assert_eq!(got.f, 0.0);
        assert_eq!(got.gt_frames, 0);
    }

    #[test]
    fn budget_is_never_exceeded() {
        let mut rng = Rng::seeded(3);
        for _ in 0..20 {
            let t = rng.range_inclusive(10, 60);
            let seg_len = rng.range_inclusive(2, 6);
            let seg = uniform_segmentation(t, seg_len);
            let scores: Vec<f64> = (0..t).map(|_| rng.uniform()).collect();
            let ks = scores_to_keyshots(&scores, &seg, 0.15).unwrap();
            assert!(ks.frames() <= (0.15 * t as f64).floor() as usize);
        }
    }

    #[test]
    fn raising_scores_of_a_selected_segment_keeps_it_selected() {
        let mut rng = Rng::seeded(4);
        for trial in 0..20 {
            let t = 40;
            let seg = uniform_segmentation(t, 4);
            let mut scores: Vec<f64> = (0..t).map(|_| rng.uniform_in(0.05, 0.95)).collect();
            let before = scores_to_keyshots(&scores, &seg, 0.2).unwrap();
            let Some(&k) = before.selected.first() else { continue };
            let (s, e) = seg.bounds(k);
            for v in &mut scores[s..e] {
                *v += 0.04; // strictly raise every frame in the segment
            }
            let after = scores_to_keyshots(&scores, &seg, 0.2).unwrap();
            assert!(after.selected.contains(&k), "trial {trial}: segment {k} dropped after its scores rose");
        }
    }

    proptest! {
        #[test]
        fn masks_swap_precision_and_recall(
            bits in prop::collection::vec((prop::bool::ANY, prop::bool::ANY), 1..64)
        ) {
            let a: Vec<bool> = bits.iter().map(|p| p.0).collect();
            let b: Vec<bool> = bits.iter().map(|p| p.1).collect();
            let (p_ab, r_ab) = precision_recall(&a, &b).unwrap();
            let (p_ba, r_ba) = precision_recall(&b, &a).unwrap();
            prop_assert_eq!((p_ab, r_ab), (r_ba, p_ba));
        }
    }
}
