//! Per-video annotation documents.
//!
//! An annotation is a small TOML file naming the video, its frame count,
//! and the annotated keyframes, optionally with real-valued per-frame
//! importance scores:
//!
//! ```toml
//! video_id = "v01"
//! num_frames = 120
//! keyframes = [14, 57, 99]
//! frame_scores = [0.0, 0.1, ...]   # optional, length num_frames, in [0, 1]
//! ```
//!
//! Keyframes may be listed in any order; loading sorts them. When the
//! keyframe list is empty but scores are present, keyframes are derived by
//! thresholding at the per-video top-15% score quantile.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{file_err, Error, Result};
use crate::numerics::Scalar;

/// Fraction of frames kept when score-valued ground truth is binarized.
pub const BINARIZE_FRACTION: f64 = 0.15;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnnotationRecord {
    pub video_id: String,
    pub num_frames: usize,
    pub keyframes: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub frame_scores: Option<Vec<f64>>,
}

impl AnnotationRecord {
    fn bad(&self, message: String) -> Error {
        Error::BadAnnotation {
            video_id: self.video_id.clone(),
            message,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_frames == 0 {
            return Err(self.bad("num_frames must be >= 1".into()));
        }
        let mut seen = vec![false; self.num_frames];
        for &k in &self.keyframes {
            if k >= self.num_frames {
                return Err(self.bad(format!("keyframe index {k} out of range 0..{}", self.num_frames)));
            }
            if seen[k] {
                return Err(self.bad(format!("duplicate keyframe index {k}")));
            }
            seen[k] = true;
        }
        if let Some(scores) = &self.frame_scores {
            if scores.len() != self.num_frames {
                return Err(self.bad(format!(
                    "{} frame scores for {} frames",
                    scores.len(),
                    self.num_frames
                )));
            }
            for (i, &s) in scores.iter().enumerate() {
                if !s.is_finite() || !(0.0..=1.0).contains(&s) {
                    return Err(self.bad(format!("frame score {s} at frame {i} outside [0, 1]")));
                }
            }
        }
        Ok(())
    }

    /// Annotated keyframes, sorted; when the explicit list is empty and
    /// scores exist, the frames scoring at or above the top-15% quantile.
    pub fn effective_keyframes(&self) -> Vec<usize> {
        if !self.keyframes.is_empty() {
            let mut ks = self.keyframes.clone();
            ks.sort_unstable();
            return ks;
        }
        let Some(scores) = &self.frame_scores else {
            return Vec::new();
        };
        let keep = ((self.num_frames as f64) * BINARIZE_FRACTION).floor().max(1.0) as usize;
        let mut sorted: Vec<f64> = scores.clone();
        sorted.sort_by(|a, b| b.partial_cmp(a).expect("scores validated finite"));
        let threshold = sorted[keep - 1];
        (0..self.num_frames).filter(|&i| scores[i] >= threshold).collect()
    }

    /// Binary keyframe mask over all frames.
    pub fn mask(&self) -> Vec<bool> {
        let mut mask = vec![false; self.num_frames];
        for k in self.effective_keyframes() {
            mask[k] = true;
        }
        mask
    }

    /// The frame-level training target: explicit scores when present,
    /// otherwise the binary keyframe mask.
    pub fn gt_scores<S: Scalar>(&self) -> Vec<S> {
        match &self.frame_scores {
            Some(scores) => scores.iter().map(|&s| S::from_f64(s)).collect(),
            None => self.mask().iter().map(|&b| S::from_f64(b as u8 as f64)).collect(),
        }
    }

    /// True when keyframes only exist via score thresholding.
    pub fn binarized(&self) -> bool {
        self.keyframes.is_empty() && self.frame_scores.is_some()
    }
}

pub fn load_annotations(path: &Path) -> Result<AnnotationRecord> {
    let text = fs::read_to_string(path).map_err(file_err(path))?;
    let record: AnnotationRecord =
        toml::from_str(&text).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
    record.validate()?;
    Ok(record)
}

pub fn save_annotations(path: &Path, record: &AnnotationRecord) -> Result<()> {
    record.validate()?;
    let text = toml::to_string(record).expect("annotation records serialize");
    fs::write(path, text).map_err(file_err(path))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(t: usize, keyframes: Vec<usize>) -> AnnotationRecord {
        AnnotationRecord {
            video_id: "v".into(),
            num_frames: t,
            keyframes,
            frame_scores: None,
        }
    }

    #[test]
    fn empty_keyframes_give_an_all_zero_mask() {
        let r = record(6, vec![]);
        r.validate().unwrap();
        assert_eq!(r.mask(), vec![false; 6]);
        assert_eq!(r.gt_scores::<f64>(), vec![0.0; 6]);
    }

    #[test]
    fn boundary_keyframes_set_exactly_two_ones() {
        let r = record(10, vec![0, 9]);
        r.validate().unwrap();
        let mask = r.mask();
        assert_eq!(mask.iter().filter(|&&b| b).count(), 2);
        assert!(mask[0] && mask[9]);
    }

    #[test]
    fn out_of_range_and_duplicate_indices_are_rejected() {
        assert!(matches!(
            record(10, vec![10]).validate(),
            Err(Error::BadAnnotation { .. })
        ));
        assert!(matches!(
            record(10, vec![3, 3]).validate(),
            Err(Error::BadAnnotation { .. })
        ));
    }

    #[test]
    fn keyframes_come_back_sorted() {
        let r = record(10, vec![7, 2, 5]);
        assert_eq!(r.effective_keyframes(), vec![2, 5, 7]);
    }

    #[test]
    fn scores_binarize_at_the_top_fifteen_percent() {
        let mut r = record(20, vec![]);
        // 20 frames -> keep floor(3) = 3; the three largest sit at 4, 9, 14.
        let mut scores = vec![0.1; 20];
        scores[4] = 0.9;
        scores[9] = 0.8;
        scores[14] = 0.7;
        r.frame_scores = Some(scores);
        r.validate().unwrap();
        assert!(r.binarized());
        assert_eq!(r.effective_keyframes(), vec![4, 9, 14]);
        // Explicit keyframes win over thresholding.
        r.keyframes = vec![1];
        assert!(!r.binarized());
        assert_eq!(r.effective_keyframes(), vec![1]);
    }

    #[test]
    fn score_targets_pass_through_and_masks_are_binary() {
        let mut r = record(4, vec![2]);
        assert_eq!(r.gt_scores::<f64>(), vec![0.0, 0.0, 1.0, 0.0]);
        r.frame_scores = Some(vec![0.25, 0.5, 1.0, 0.0]);
        assert_eq!(r.gt_scores::<f64>(), vec![0.25, 0.5, 1.0, 0.0]);
    }

    #[test]
    fn document_round_trip_preserves_the_record() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("v.toml");
        let mut r = record(12, vec![3, 8]);
        r.frame_scores = Some((0..12).map(|i| i as f64 / 11.0).collect());
        save_annotations(&path, &r).unwrap();
        assert_eq!(load_annotations(&path).unwrap(), r);
    }

    #[test]
    fn missing_fields_are_a_parse_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.toml");
        fs::write(&path, "video_id = \"v\"\nnum_frames = 5\n").unwrap();
        match load_annotations(&path) {
            Err(Error::Parse(msg)) => assert!(msg.contains("keyframes"), "message: {msg}"),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn score_length_and_range_are_validated() {
        let mut r = record(5, vec![]);
        r.frame_scores = Some(vec![0.5; 4]);
        assert!(r.validate().is_err());
        r.frame_scores = Some(vec![0.5, 0.5, 1.5, 0.5, 0.5]);
        assert!(r.validate().is_err());
    }
}
