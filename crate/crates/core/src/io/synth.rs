//! Synthetic corpora with planted structure.
//!
//! Each video is a sequence of contiguous blocks. Every block draws its
//! frames from a Gaussian around a block-specific mean, and the means are
//! kept at least `separation` apart so segmentation has a recoverable
//! ground truth. Blocks come in three roles:
//!
//! * **key** blocks carry the annotation: a keyframe at the block center
//!   and a dense score target of 1. Together they stay under the 15%
//!   summary budget, so a model that scores them highly earns a perfect F.
//! * one **decoy** block is exactly as long as the summary budget. Under
//!   flat (untrained) scores its length makes it the best knapsack pick —
//!   and it contains no keyframes, so flat scoring earns F = 0. High
//!   scores therefore have to be *learned*; geometry alone hands nothing
//!   over.
//! * **filler** blocks are each longer than the budget and can never be
//!   selected.

use std::fs;
use std::ops::Range;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{file_err, Error, Result};
use crate::eval::protocol::EvalConfig;
use crate::io::annotations::{save_annotations, AnnotationRecord};
use crate::io::features::write_features;
use crate::io::manifest::{save_manifest, DatasetManifest, VideoRecord};
use crate::numerics::rng::streams;
use crate::numerics::{Rng, Scalar, Tensor};
use crate::training::Video;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SyntheticSpec {
    pub videos: usize,
    /// Inclusive frame-count range each video draws from.
    pub t_range: [usize; 2],
    pub dim: usize,
    /// Blocks per video (key + decoy + filler).
    pub segments: usize,
    /// Fraction of blocks that are key blocks; at least one, at most
    /// `segments - 2` (one decoy and one filler must remain).
    pub keyframe_density: f64,
    /// Minimum Euclidean distance between block means.
    pub separation: f64,
    /// Per-coordinate noise scale.
    pub sigma: f64,
    /// Fraction of frames covered by key blocks; must stay under the 15%
    /// summary budget so the annotated summary is feasible.
    pub key_coverage: f64,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        SyntheticSpec {
            videos: 8,
            t_range: [150, 250],
            dim: 16,
            segments: 5,
            keyframe_density: 0.2,
            separation: 12.0,
            sigma: 1.0,
            key_coverage: 0.08,
            seed: 0,
        }
    }
}

impl SyntheticSpec {
    pub fn n_key(&self) -> usize {
        ((self.keyframe_density * self.segments as f64).floor() as usize).max(1)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if self.videos == 0 {
            return bad("corpus needs at least one video".into());
        }
        if self.dim == 0 {
            return bad("features need at least one dimension".into());
        }
        if self.t_range[0] > self.t_range[1] {
            return bad(format!("empty frame range {:?}", self.t_range));
        }
        for (name, v) in [
            ("keyframe_density", self.keyframe_density),
            ("key_coverage", self.key_coverage),
        ] {
            if !v.is_finite() || !(0.0..1.0).contains(&v) || v == 0.0 {
                return bad(format!("{name} must lie in (0, 1), got {v}"));
            }
        }
        if self.key_coverage >= 0.15 {
            return bad(format!(
                "key_coverage {} would overflow the 15% summary budget",
                self.key_coverage
            ));
        }
        if !self.separation.is_finite() || self.separation <= 0.0 {
            return bad(format!("separation must be positive, got {}", self.separation));
        }
        if !self.sigma.is_finite() || self.sigma <= 0.0 {
            return bad(format!("sigma must be positive, got {}", self.sigma));
        }
        if self.segments < self.n_key() + 2 {
            return bad(format!(
                "{} segments cannot hold {} key blocks plus a decoy and a filler",
                self.segments,
                self.n_key()
            ));
        }
        if self.t_range[0] < 10 * self.segments {
            return bad(format!(
                "videos of {} frames are too short for {} blocks; need at least {}",
                self.t_range[0],
                self.segments,
                10 * self.segments
            ));
        }
        Ok(())
    }
}

/// One generated video together with the structure that was planted in it.
#[derive(Clone, Debug)]
pub struct SyntheticVideo<S: Scalar> {
    pub video: Video<S>,
    pub annotation: AnnotationRecord,
    /// First frame of every block, starting with 0.
    pub boundaries: Vec<usize>,
    pub key_blocks: Vec<Range<usize>>,
    /// `[segments, dim]` planted block means, in block order.
    pub means: Tensor<S>,
}

#[derive(Clone, Copy, PartialEq)]
enum Role {
    Key,
    Decoy,
    Filler,
}

/// Split `total` into `parts` near-equal pieces.
fn split_evenly(total: usize, parts: usize) -> Vec<usize> {
    let base = total / parts;
    let extra = total % parts;
    (0..parts).map(|i| base + usize::from(i < extra)).collect()
}

fn sample_means(rng: &mut Rng, segments: usize, dim: usize, separation: f64) -> Result<Vec<Vec<f64>>> {
    let mut means: Vec<Vec<f64>> = Vec::with_capacity(segments);
    let mut attempts = 0;
    while means.len() < segments {
        attempts += 1;
        if attempts > 10_000 {
            return Err(Error::InvalidConfig(format!(
                "could not place {segments} block means {separation} apart in {dim} dimensions"
            )));
        }
        let raw: Vec<f64> = (0..dim).map(|_| rng.normal()).collect();
        let norm = raw.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm < 1e-9 {
            continue;
        }
        // Points on the radius-`separation` sphere; in more than a few
        // dimensions their typical pairwise distance is sqrt(2) times the
        // radius, so rejection is rare.
        let candidate: Vec<f64> = raw.iter().map(|v| v * separation / norm).collect();
        let ok = means.iter().all(|m| {
            let d2: f64 = m.iter().zip(&candidate).map(|(a, b)| (a - b) * (a - b)).sum();
            d2.sqrt() >= separation
        });
        if ok {
            means.push(candidate);
        }
    }
    Ok(means)
}

fn generate_one<S: Scalar>(spec: &SyntheticSpec, id: String, rng: &mut Rng) -> Result<SyntheticVideo<S>> {
    let t = rng.range_inclusive(spec.t_range[0], spec.t_range[1]);
    let budget = EvalConfig::default().budget_frames(t);
    let n_key = spec.n_key();
    let key_total = ((spec.key_coverage * t as f64).round() as usize).max(n_key);
    if key_total >= budget {
        return Err(Error::InvalidConfig(format!(
            "key blocks ({key_total} frames) do not fit the {budget}-frame summary budget"
        )));
    }
    let n_filler = spec.segments - n_key - 1;
    let filler_total = t - key_total - budget;
    if filler_total < n_filler {
        return Err(Error::InvalidConfig(format!(
            "{filler_total} frames left for {n_filler} filler blocks"
        )));
    }

    let mut blocks: Vec<(Role, usize)> = split_evenly(key_total, n_key)
        .into_iter()
        .map(|len| (Role::Key, len))
        .collect();
    blocks.push((Role::Decoy, budget));
    blocks.extend(split_evenly(filler_total, n_filler).into_iter().map(|len| (Role::Filler, len)));
    rng.shuffle(&mut blocks);

    let mut boundaries = Vec::with_capacity(spec.segments);
    let mut key_blocks = Vec::new();
    let mut at = 0;
    for &(role, len) in &blocks {
        boundaries.push(at);
        if role == Role::Key {
            key_blocks.push(at..at + len);
        }
        at += len;
    }
    debug_assert_eq!(at, t);

    let means = sample_means(rng, spec.segments, spec.dim, spec.separation)?;
    let mut data = Vec::with_capacity(t * spec.dim);
    for (k, &(_, len)) in blocks.iter().enumerate() {
        for _ in 0..len {
            for d in 0..spec.dim {
                data.push(S::from_f64(means[k][d] + spec.sigma * rng.normal()));
            }
        }
    }
    let features = Tensor::from_vec(&[t, spec.dim], data);

    let keyframes: Vec<usize> = key_blocks.iter().map(|b| b.start + b.len() / 2).collect();
    let mut dense = vec![0.0; t];
    for b in &key_blocks {
        for v in &mut dense[b.clone()] {
            *v = 1.0;
        }
    }
    let annotation = AnnotationRecord {
        video_id: id.clone(),
        num_frames: t,
        keyframes,
        frame_scores: Some(dense),
    };
    annotation.validate()?;

    let video = Video {
        id,
        features,
        gt_scores: annotation.gt_scores(),
        keyframes: annotation.mask(),
    };
    video.validate(spec.dim)?;

    let mean_data: Vec<S> = means.iter().flatten().map(|&v| S::from_f64(v)).collect();
    Ok(SyntheticVideo {
        video,
        annotation,
        boundaries,
        key_blocks,
        means: Tensor::from_vec(&[spec.segments, spec.dim], mean_data),
    })
}

/// Generate the whole corpus in memory. The same spec always produces the
/// same corpus, bit for bit.
pub fn generate<S: Scalar>(spec: &SyntheticSpec) -> Result<Vec<SyntheticVideo<S>>> {
    spec.validate()?;
    let mut rng = Rng::substream(spec.seed, streams::SYNTH);
    (0..spec.videos)
        .map(|i| generate_one(spec, format!("v{:02}", i + 1), &mut rng))
        .collect()
}

/// Generate and write a corpus directory: one feature file and one
/// annotation document per video, plus `manifest.toml`.
pub fn write_corpus(spec: &SyntheticSpec, dir: &Path) -> Result<DatasetManifest> {
    let corpus = generate::<f64>(spec)?;
    fs::create_dir_all(dir).map_err(file_err(dir))?;
    let mut records = Vec::with_capacity(corpus.len());
    for sv in &corpus {
        let id = &sv.video.id;
        let features = PathBuf::from(format!("{id}.dtrf"));
        let annotations = PathBuf::from(format!("{id}.toml"));
        write_features(&dir.join(&features), &sv.video.features)?;
        save_annotations(&dir.join(&annotations), &sv.annotation)?;
        records.push(VideoRecord {
            id: id.clone(),
            frames: sv.video.features.rows(),
            dim: spec.dim,
            features,
            annotations,
            binarized: false,
        });
    }
    let manifest = DatasetManifest {
        videos: records,
        split: None,
    };
    save_manifest(&dir.join("manifest.toml"), &manifest)?;
    Ok(manifest)
}
