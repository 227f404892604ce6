//! On-disk formats: feature files, annotation documents, dataset manifests,
//! synthetic corpora, and model checkpoints.

pub mod annotations;
pub mod checkpoint;
pub mod features;
pub mod manifest;
pub mod synth;

pub use annotations::{load_annotations, save_annotations, AnnotationRecord};
pub use checkpoint::{load_checkpoint, load_checkpoint_expecting, save_checkpoint, LoadedCheckpoint};
pub use features::{load_features, read_header, write_features, FeatureHeader};
pub use manifest::{
    load_dataset, load_manifest, save_manifest, split_dataset, DatasetManifest, SplitAssignment,
    VideoRecord,
};
pub use synth::{generate, write_corpus, SyntheticSpec, SyntheticVideo};
