//! Dataset manifests: one TOML document tying feature files to annotations.
//!
//! ```toml
//! [[videos]]
//! id = "v01"
//! frames = 192
//! dim = 16
//! features = "v01.dtrf"
//! annotations = "v01.toml"
//!
//! [split]
//! seed = 0
//! train = ["v01"]
//! test = []
//! ```
//!
//! Paths are resolved relative to the manifest's own directory, so a corpus
//! directory can be moved wholesale.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{file_err, Error, Result};
use crate::io::annotations::load_annotations;
use crate::io::features::{load_features, read_header};
use crate::numerics::Scalar;
use crate::training::{self, Video};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VideoRecord {
    pub id: String,
    pub frames: usize,
    pub dim: usize,
    pub features: PathBuf,
    pub annotations: PathBuf,
    /// True when the annotation keyframes were derived from scores rather
    /// than annotated directly.
    #[serde(default)]
    pub binarized: bool,
}

/// A frozen train/test assignment by video id.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplitAssignment {
    pub seed: u64,
    pub train: Vec<String>,
    pub test: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub videos: Vec<VideoRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub split: Option<SplitAssignment>,
}

impl DatasetManifest {
    pub fn validate(&self) -> Result<()> {
        if self.videos.is_empty() {
            return Err(Error::BadManifest("manifest lists no videos".into()));
        }
        let mut ids: Vec<&str> = self.videos.iter().map(|v| v.id.as_str()).collect();
        ids.sort_unstable();
        for pair in ids.windows(2) {
            if pair[0] == pair[1] {
                return Err(Error::BadManifest(format!("duplicate video id `{}`", pair[0])));
            }
        }
        if let Some(split) = &self.split {
            for id in split.train.iter().chain(&split.test) {
                if !self.videos.iter().any(|v| v.id == *id) {
                    return Err(Error::BadManifest(format!(
                        "split names unknown video `{id}`"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Check every feature header against the recorded shape without
    /// reading payloads, so shape mistakes surface before training starts.
    pub fn validate_against_files(&self, base: &Path) -> Result<()> {
        self.validate()?;
        for record in &self.videos {
            let header = read_header(&base.join(&record.features))?;
            if header.frames as usize != record.frames || header.dim as usize != record.dim {
                return Err(Error::BadManifest(format!(
                    "video `{}`: manifest says {}x{}, feature file holds {}x{}",
                    record.id, record.frames, record.dim, header.frames, header.dim
                )));
            }
        }
        Ok(())
    }
}

pub fn load_manifest(path: &Path) -> Result<DatasetManifest> {
    let text = fs::read_to_string(path).map_err(file_err(path))?;
    let manifest: DatasetManifest =
        toml::from_str(&text).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
    manifest.validate()?;
    Ok(manifest)
}

pub fn save_manifest(path: &Path, manifest: &DatasetManifest) -> Result<()> {
    manifest.validate()?;
    let text = toml::to_string(manifest).expect("manifests serialize");
    fs::write(path, text).map_err(file_err(path))
}

/// Load every video in the manifest into memory. `manifest_path` anchors the
/// relative feature/annotation paths.
pub fn load_dataset<S: Scalar>(
    manifest_path: &Path,
    manifest: &DatasetManifest,
) -> Result<Vec<Video<S>>> {
    manifest.validate()?;
    let base = manifest_path.parent().unwrap_or_else(|| Path::new("."));
    let mut videos = Vec::with_capacity(manifest.videos.len());
    for record in &manifest.videos {
        let features = load_features::<S>(&base.join(&record.features))?;
        let annotation = load_annotations(&base.join(&record.annotations))?;
        if annotation.video_id != record.id {
            return Err(Error::BadManifest(format!(
                "annotation file for `{}` names video `{}`",
                record.id, annotation.video_id
            )));
        }
        if annotation.num_frames != record.frames || features.rows() != record.frames {
            return Err(Error::BadManifest(format!(
                "video `{}`: manifest says {} frames, features hold {}, annotations say {}",
                record.id,
                record.frames,
                features.rows(),
                annotation.num_frames
            )));
        }
        let video = Video {
            id: record.id.clone(),
            features,
            gt_scores: annotation.gt_scores(),
            keyframes: annotation.mask(),
        };
        video.validate(record.dim)?;
        videos.push(video);
    }
    Ok(videos)
}

/// Assign train/test ids with the shared seeded shuffle and record the
/// assignment in the manifest.
pub fn split_dataset(
    manifest: &mut DatasetManifest,
    train_fraction: f64,
    seed: u64,
) -> Result<()> {
    manifest.validate()?;
    let (train, test) = training::split_indices(manifest.videos.len(), train_fraction, seed)?;
    manifest.split = Some(SplitAssignment {
        seed,
        train: train.iter().map(|&i| manifest.videos[i].id.clone()).collect(),
        test: test.iter().map(|&i| manifest.videos[i].id.clone()).collect(),
    });
    Ok(())
}
