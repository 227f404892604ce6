//! The keyshot evaluation protocol.
//!
//! A video is first cut into contiguous segments by an exact
//! scatter-minimizing dynamic program ([`kts_segment`]). Predicted per-frame
//! scores and annotated keyframes are each converted to a keyshot selection
//! over those segments under a 15%-of-duration budget ([`scores_to_keyshots`],
//! [`keyframes_to_keyshots`], both on top of the exact 0/1 knapsack in
//! [`knapsack_select`]), and the two frame masks are compared by temporal
//! overlap into precision, recall, and a 0–100 F-measure.

pub mod knapsack;
pub mod kts;
pub mod protocol;

pub use knapsack::knapsack_select;
pub use kts::{kts_segment, Segmentation};
pub use protocol::{
    evaluate_video, f_measure, keyframes_to_keyshots, precision_recall, scores_to_keyshots, EvalConfig, EvalResult,
    Keyshots,
};
