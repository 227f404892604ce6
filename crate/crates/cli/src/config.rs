//! Layered training configuration.
//!
//! A run starts from library defaults, overlays an optional TOML document,
//! then overlays command-line flags. The feature dimensionality always comes
//! from the data, so config files cannot declare it.

use serde::Deserialize;
use vidsum_core::training::{AdversaryMode, TrainConfig};

use crate::TrainArgs;

/// Every trainer knob, all optional; absent fields keep their previous value.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub mode: Option<AdversaryMode>,
    pub supervised: Option<bool>,
    pub lr_g: Option<f64>,
    pub lr_d: Option<f64>,
    pub tau: Option<f64>,
    pub shot_len: Option<usize>,
    pub shot_overlap: Option<f64>,
    pub g_steps_per_iter: Option<usize>,
    pub d_steps_per_iter: Option<usize>,
    pub epochs: Option<usize>,
    pub seed: Option<u64>,
    pub eval_every: Option<usize>,
    pub train_fraction: Option<f64>,
    pub target_train_f: Option<f64>,
    pub clip_norm: Option<f64>,
    pub model: Option<FileModel>,
    pub eval: Option<FileEval>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileModel {
    pub lstm_hidden: Option<usize>,
    pub holes: Option<Vec<usize>>,
    pub enc_dim: Option<usize>,
    pub dropout: Option<f64>,
    pub bypass_norm: Option<bool>,
    pub disc_hidden: Option<usize>,
    pub head_dims: Option<[usize; 3]>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileEval {
    pub budget_fraction: Option<f64>,
    pub min_keyframes: Option<usize>,
    pub max_segments: Option<usize>,
    pub lambda: Option<f64>,
}

macro_rules! overlay {
    ($dst:expr, $src:expr) => {
        if let Some(v) = $src {
            $dst = v;
        }
    };
}

fn apply_file(cfg: &mut TrainConfig, file: FileConfig) {
    overlay!(cfg.mode, file.mode);
    overlay!(cfg.supervised, file.supervised);
    overlay!(cfg.lr_g, file.lr_g);
    overlay!(cfg.lr_d, file.lr_d);
    overlay!(cfg.tau, file.tau);
    overlay!(cfg.shot_len, file.shot_len);
    overlay!(cfg.shot_overlap, file.shot_overlap);
    overlay!(cfg.g_steps_per_iter, file.g_steps_per_iter);
    overlay!(cfg.d_steps_per_iter, file.d_steps_per_iter);
    overlay!(cfg.epochs, file.epochs);
    overlay!(cfg.seed, file.seed);
    overlay!(cfg.eval_every, file.eval_every);
    overlay!(cfg.train_fraction, file.train_fraction);
    overlay!(cfg.target_train_f, file.target_train_f.map(Some));
    overlay!(cfg.clip_norm, file.clip_norm.map(Some));
    if let Some(model) = file.model {
        overlay!(cfg.model.lstm_hidden, model.lstm_hidden);
        overlay!(cfg.model.holes, model.holes);
        overlay!(cfg.model.enc_dim, model.enc_dim);
        overlay!(cfg.model.dropout, model.dropout);
        overlay!(cfg.model.bypass_norm, model.bypass_norm);
        overlay!(cfg.model.disc_hidden, model.disc_hidden);
        overlay!(cfg.model.head_dims, model.head_dims);
    }
    if let Some(eval) = file.eval {
        overlay!(cfg.eval.budget_fraction, eval.budget_fraction);
        overlay!(cfg.eval.min_keyframes, eval.min_keyframes);
        overlay!(cfg.eval.max_segments, eval.max_segments.map(Some));
        overlay!(cfg.eval.lambda, eval.lambda.map(Some));
    }
}

fn apply_flags(cfg: &mut TrainConfig, args: &TrainArgs) {
    overlay!(cfg.mode, args.mode.map(AdversaryMode::from));
    if args.no_supervised {
        cfg.supervised = false;
    }
    overlay!(cfg.model.holes, args.holes.clone());
    overlay!(cfg.model.lstm_hidden, args.lstm_hidden);
    overlay!(cfg.model.enc_dim, args.enc_dim);
    overlay!(cfg.model.disc_hidden, args.disc_hidden);
    overlay!(cfg.model.dropout, args.dropout);
    if args.bypass_norm {
        cfg.model.bypass_norm = true;
    }
    overlay!(cfg.lr_g, args.lr_g);
    overlay!(cfg.lr_d, args.lr_d);
    overlay!(cfg.tau, args.tau);
    overlay!(cfg.shot_len, args.shot_len);
    overlay!(cfg.shot_overlap, args.shot_overlap);
    overlay!(cfg.g_steps_per_iter, args.g_steps);
    overlay!(cfg.d_steps_per_iter, args.d_steps);
    overlay!(cfg.epochs, args.epochs);
    overlay!(cfg.seed, args.seed);
    overlay!(cfg.eval_every, args.eval_every);
    overlay!(cfg.train_fraction, args.train_fraction);
    overlay!(cfg.target_train_f, args.target_train_f.map(Some));
    overlay!(cfg.clip_norm, args.clip_norm.map(Some));
}

/// Defaults for `in_dim`-wide features, overlaid by `file`, then by flags.
/// The result still needs [`TrainConfig::validate`].
pub fn resolve_train_config(in_dim: usize, file: Option<FileConfig>, args: &TrainArgs) -> TrainConfig {
    let mut cfg = TrainConfig::new(in_dim);
    if let Some(file) = file {
        apply_file(&mut cfg, file);
    }
    apply_flags(&mut cfg, args);
    cfg
}
