//! One function per subcommand.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use vidsum_core::eval::{kts_segment, scores_to_keyshots, evaluate_video, EvalConfig, EvalResult};
use vidsum_core::io::{self, SplitAssignment, SyntheticSpec};
use vidsum_core::numerics::GradCheckConfig;
use vidsum_core::training::{self, Video};
use vidsum_core::{audit, Error, Result};

use crate::config::{resolve_train_config, FileConfig};
use crate::output;
use crate::{EvalArgs, GradcheckArgs, InferArgs, SplitArg, SynthArgs, TrainArgs, VisualizeArgs};

fn file_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::File {
        path: path.to_path_buf(),
        source,
    }
}

fn parse_toml<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(file_err(path))?;
    toml::from_str(&text).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
}

/// Write, creating parent directories on the way.
fn write_file(path: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(file_err(parent))?;
    }
    fs::write(path, contents).map_err(file_err(path))
}

/// All videos must share one feature width; the model gets built from it.
fn uniform_dim(dataset: &[Video<f64>]) -> Result<usize> {
    let dim = dataset[0].features.cols();
    for v in dataset {
        if v.features.cols() != dim {
            return Err(Error::InvalidConfig(format!(
                "video `{}` has {}-dimensional features, `{}` has {dim}; one model cannot serve both",
                v.id,
                v.features.cols(),
                dataset[0].id
            )));
        }
    }
    Ok(dim)
}

fn load_videos(manifest_path: &Path) -> Result<(io::DatasetManifest, Vec<Video<f64>>, usize)> {
    let manifest = io::load_manifest(manifest_path)?;
    let dataset = io::load_dataset::<f64>(manifest_path, &manifest)?;
    let dim = uniform_dim(&dataset)?;
    Ok((manifest, dataset, dim))
}

pub fn synth(args: &SynthArgs) -> Result<()> {
    let mut spec: SyntheticSpec = match &args.config {
        Some(path) => parse_toml(path)?,
        None => SyntheticSpec::default(),
    };
    macro_rules! overlay {
        ($field:ident) => {
            if let Some(v) = args.$field {
                spec.$field = v;
            }
        };
    }
    overlay!(videos);
    overlay!(dim);
    overlay!(segments);
    overlay!(keyframe_density);
    overlay!(separation);
    overlay!(sigma);
    overlay!(key_coverage);
    overlay!(seed);
    if let Some(v) = args.min_frames {
        spec.t_range[0] = v;
    }
    if let Some(v) = args.max_frames {
        spec.t_range[1] = v;
    }

    let manifest = io::write_corpus(&spec, &args.out)?;
    let resolved = toml::to_string_pretty(&spec).expect("specs serialize");
    write_file(&args.out.join("spec.toml"), &resolved)?;
    print!("{resolved}");
    println!(
        "wrote {} videos to {} (manifest.toml, spec.toml)",
        manifest.videos.len(),
        args.out.display()
    );
    Ok(())
}

pub fn train(args: &TrainArgs) -> Result<()> {
    let (_, dataset, dim) = load_videos(&args.data)?;
    let file: Option<FileConfig> = args.config.as_deref().map(parse_toml).transpose()?;
    let cfg = resolve_train_config(dim, file, args);
    cfg.validate()?;

    let resolved = toml::to_string_pretty(&cfg).expect("configs serialize");
    write_file(&args.out.join("config.toml"), &resolved)?;
    print!("{resolved}");
    println!("training on {} videos ({dim}-dimensional features)", dataset.len());

    let outcome = training::train(&cfg, &dataset)?;

    write_file(&args.out.join("metrics.csv"), output::metrics_csv(&outcome.history))?;
    let id_of = |ix: &usize| dataset[*ix].id.clone();
    let split = SplitAssignment {
        seed: cfg.seed,
        train: outcome.train_ids.iter().map(id_of).collect(),
        test: outcome.val_ids.iter().map(id_of).collect(),
    };
    write_file(
        &args.out.join("split.toml"),
        toml::to_string_pretty(&split).expect("splits serialize"),
    )?;
    io::save_checkpoint(&args.out.join("checkpoint.dtrc"), &outcome.models, cfg.tau)?;
    io::save_checkpoint(&args.out.join("best.dtrc"), &outcome.best_models()?, cfg.tau)?;

    if let Some(point) = outcome.evals.last() {
        match point.val_f {
            Some(v) => println!("final train F {:.2}, val F {v:.2}", point.train_f),
            None => println!("final train F {:.2}", point.train_f),
        }
    }
    if outcome.stopped_early {
        let stop = outcome.evals.last().map_or(0, |p| p.epoch);
        println!("target reached; stopped after epoch {stop}");
    }
    println!(
        "wrote metrics.csv, split.toml, checkpoint.dtrc, best.dtrc (epoch {}) to {}",
        outcome.best.epoch,
        args.out.display()
    );
    Ok(())
}

pub fn infer(args: &InferArgs) -> Result<()> {
    if let Some(features_path) = &args.features {
        let header = io::read_header(features_path)?;
        let loaded = io::load_checkpoint_expecting::<f64>(&args.checkpoint, header.dim as usize)?;
        let features = io::load_features::<f64>(features_path)?;
        let scores = loaded.models.generator.infer_scores(&loaded.models.g_params, &features)?;
        write_file(&args.out, output::scores_csv(&scores))?;
        println!("wrote {} scores to {}", scores.len(), args.out.display());
        return Ok(());
    }

    let data = args.data.as_ref().expect("clap guarantees one input");
    let (_, dataset, dim) = load_videos(data)?;
    let loaded = io::load_checkpoint_expecting::<f64>(&args.checkpoint, dim)?;
    fs::create_dir_all(&args.out).map_err(file_err(&args.out))?;
    for video in &dataset {
        let scores = loaded.models.generator.infer_scores(&loaded.models.g_params, &video.features)?;
        write_file(&args.out.join(format!("{}.csv", video.id)), output::scores_csv(&scores))?;
    }
    println!("wrote {} score files to {}", dataset.len(), args.out.display());
    Ok(())
}

/// Restrict a dataset to one side of a recorded split.
fn select_split<'a>(
    args: &EvalArgs,
    manifest: &io::DatasetManifest,
    dataset: &'a [Video<f64>],
) -> Result<Vec<&'a Video<f64>>> {
    let wanted = match args.split {
        SplitArg::All => return Ok(dataset.iter().collect()),
        side => {
            let assignment: SplitAssignment = match &args.split_file {
                Some(path) => parse_toml(path)?,
                None => manifest.split.clone().ok_or_else(|| {
                    Error::InvalidConfig(
                        "manifest records no split; pass --split-file or use --split all".into(),
                    )
                })?,
            };
            match side {
                SplitArg::Train => assignment.train,
                SplitArg::Test => assignment.test,
                SplitArg::All => unreachable!(),
            }
        }
    };
    let wanted: BTreeSet<String> = wanted.into_iter().collect();
    let known: BTreeSet<&str> = dataset.iter().map(|v| v.id.as_str()).collect();
    if let Some(stranger) = wanted.iter().find(|id| !known.contains(id.as_str())) {
        return Err(Error::InvalidConfig(format!(
            "split names `{stranger}`, which the manifest does not hold"
        )));
    }
    let chosen: Vec<&Video<f64>> = dataset.iter().filter(|v| wanted.contains(&v.id)).collect();
    if chosen.is_empty() {
        return Err(Error::InvalidConfig(format!(
            "the {:?} split selects no videos",
            args.split
        )));
    }
    Ok(chosen)
}

pub fn eval(args: &EvalArgs) -> Result<()> {
    let (manifest, dataset, dim) = load_videos(&args.data)?;
    let loaded = io::load_checkpoint_expecting::<f64>(&args.checkpoint, dim)?;

    let mut cfg = EvalConfig::default();
    if let Some(v) = args.budget {
        cfg.budget_fraction = v;
    }
    if let Some(v) = args.min_keyframes {
        cfg.min_keyframes = v;
    }
    if args.max_segments.is_some() {
        cfg.max_segments = args.max_segments;
    }
    if args.lambda.is_some() {
        cfg.lambda = args.lambda;
    }

    let chosen = select_split(args, &manifest, &dataset)?;
    let mut rows: Vec<(String, EvalResult)> = Vec::with_capacity(chosen.len());
    for video in chosen {
        let scores = loaded.models.generator.infer_scores(&loaded.models.g_params, &video.features)?;
        let result = evaluate_video(&scores, &video.keyframes, &video.features, &cfg)?;
        rows.push((video.id.clone(), result));
    }
    let mean_f = rows.iter().map(|(_, r)| r.f).sum::<f64>() / rows.len() as f64;

    write_file(&args.out, output::eval_csv(&rows, mean_f))?;
    println!("mean F {mean_f:.2} over {} videos -> {}", rows.len(), args.out.display());
    Ok(())
}

pub fn gradcheck(args: &GradcheckArgs) -> Result<()> {
    let check = GradCheckConfig {
        eps: args.step,
        tol: args.tolerance,
    };
    let reports = audit::audit_gradients::<f64>(
        audit::reference_model(args.dim),
        args.frames,
        args.tau,
        args.seed,
        &check,
    )?;
    for (name, report) in &reports {
        println!("== {name} ==\n{report}\n");
    }
    for (_, report) in &reports {
        report.ensure_pass()?;
    }
    println!("gradient audit: {} objectives within tolerance", reports.len());
    Ok(())
}

pub fn visualize(args: &VisualizeArgs) -> Result<()> {
    let header = io::read_header(&args.features)?;
    let loaded = io::load_checkpoint_expecting::<f64>(&args.checkpoint, header.dim as usize)?;
    let features = io::load_features::<f64>(&args.features)?;
    let scores = loaded.models.generator.infer_scores(&loaded.models.g_params, &features)?;

    let mut cfg = EvalConfig::default();
    if args.max_segments.is_some() {
        cfg.max_segments = args.max_segments;
    }
    if args.lambda.is_some() {
        cfg.lambda = args.lambda;
    }
    let t = features.rows();
    let seg = kts_segment(&features, cfg.segments_for(t), cfg.lambda)?;
    let keyshots = scores_to_keyshots(&scores, &seg, cfg.budget_fraction)?;

    let keyframes: Option<Vec<bool>> = match &args.annotations {
        Some(path) => {
            let record = io::load_annotations(path)?;
            if record.num_frames != t {
                return Err(Error::BadAnnotation {
                    video_id: record.video_id.clone(),
                    message: format!("{} frames annotated, features hold {t}", record.num_frames),
                });
            }
            Some(record.mask())
        }
        None => None,
    };

    let svg = output::score_svg(&scores, &keyshots.mask, keyframes.as_deref(), seg.starts());
    let table = output::frame_table_csv(&scores, &keyshots.mask, keyframes.as_deref());
    let table_path: PathBuf = args.out.with_extension("csv");
    write_file(&args.out, svg)?;
    write_file(&table_path, table)?;
    println!(
        "wrote {} and {} ({} of {t} frames selected)",
        args.out.display(),
        table_path.display(),
        keyshots.mask.iter().filter(|&&m| m).count(),
    );
    Ok(())
}
