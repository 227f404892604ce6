//! Release gate. Each test checks one shipped guarantee end to end and
//! prints a `PASS` line with the measured numbers (visible under
//! `--nocapture`). Every threshold and tolerance is pinned here, in code.
//!
//! Long-running checks (training runs, the gradient audit, the CLI
//! round-trips) serialize through [`gate`] so their wall-clock budgets are
//! measured without contention from sibling tests.

use std::collections::BTreeSet;
use std::fs;
use std::path::Path;
use std::process::Command;
use std::sync::{Mutex, MutexGuard};
use std::time::Instant;

use vidsum_core::audit::{audit_gradients, reference_model};
use vidsum_core::eval::{f_measure, knapsack_select, kts_segment, precision_recall};
use vidsum_core::io::{
    generate, load_annotations, load_checkpoint, load_features, save_annotations, save_checkpoint,
    write_features, AnnotationRecord, DatasetManifest, SyntheticSpec, VideoRecord,
};
use vidsum_core::layers::{receptive_field, time_span, DtrNetwork, DtrNetworkConfig};
use vidsum_core::loss::{
    adversarial_spread, discriminator_loss, generator_adversarial_loss, supervised_loss,
};
use vidsum_core::numerics::{GradCheckConfig, Mode, ParamSet, Rng, Tape, Tensor};
use vidsum_core::training::{self, AdversaryMode, IterationMetrics, Models, TrainConfig, Video};
use vidsum_core::Error;

static GATE: Mutex<()> = Mutex::new(());

fn gate() -> MutexGuard<'static, ()> {
    GATE.lock().unwrap_or_else(|e| e.into_inner())
}

// ---------------------------------------------------------------- 1: gradients

#[test]
fn c01_every_gradient_matches_central_differences() {
    let _g = gate();
    let start = Instant::now();
    let check = GradCheckConfig { eps: 1e-5, tol: 1e-4 };
    let reports = audit_gradients::<f64>(reference_model(4), 6, 0.5, 0, &check).unwrap();

    let models = Models::<f64>::init(reference_model(4), 0).unwrap();
    let (n_g, n_d) = (models.g_params.ids().len(), models.d_params.ids().len());
    let names: Vec<&str> = reports.iter().map(|(n, _)| *n).collect();
    assert_eq!(names, ["critic", "adversarial", "supervised", "combined"]);
    for (name, report) in &reports {
        let expected = if *name == "critic" { n_d } else { n_g };
        assert_eq!(report.params.len(), expected, "`{name}` must touch every parameter");
        assert!(report.pass(), "`{name}` out of tolerance:\n{report}");
    }

    let secs = start.elapsed().as_secs_f64();
    assert!(secs < 60.0, "gradient audit took {secs:.1} s, budget is 60 s");
    println!(
        "c01 gradient integrity: PASS — 4 objectives, {n_g}+{n_d} parameters, rel tol 1e-4, {secs:.1} s"
    );
}

// ------------------------------------------------------- 2: receptive field

/// Final-layer features at frame `t`, inference path (frozen stats).
fn dtr_features_at(net: &DtrNetwork, params: &ParamSet<f64>, x: Tensor<f64>, t: usize) -> Vec<f64> {
    let mut tape = Tape::new(Mode::Infer);
    let xn = tape.constant(x);
    let (outs, _) = net.forward(&mut tape, params, xn, true);
    tape.value(*outs.last().unwrap()).row(t).to_vec()
}

#[test]
fn c02_distant_frames_cannot_reach_a_dtr_output() {
    let _g = gate();
    // Three stacked layers, each tapping {-h, 0, +h} with h in {1,4,16,64},
    // reach exactly the offsets expressible as a sum of three such taps.
    // Within [1, 64] that is a strict subset of all distances (10 is not a
    // sum; 2 = 1+1+0 is), so propagation trials draw from the reachable set.
    let taps: [i64; 9] = [0, 1, -1, 4, -4, 16, -16, 64, -64];
    let mut sums = BTreeSet::new();
    for a in taps {
        for b in taps {
            for c in taps {
                let s = a + b + c;
                if (1..=64).contains(&s) {
                    sums.insert(s);
                }
            }
        }
    }
    let reachable: Vec<i64> = sums.into_iter().collect();

    const T_TOTAL: usize = 1000;
    const T: usize = 400; // probe frame: far frames exist on both sides
    const DIM: usize = 6;
    const FAR: usize = 385; // receptive field of hole 64, kernel 3, 3 layers
    const TRIALS: usize = 50;
    assert_eq!(receptive_field(64, 3, 3), FAR);

    let mut rng = Rng::seeded(0xC02);
    let mut redraws = 0;
    for trial in 0..TRIALS {
        // Fresh random nonzero weights and input each trial. A draw whose
        // entire output row at T is gated to zero by the final relu is
        // rejected: such a row registers no perturbation at any distance,
        // so it cannot witness reach either way.
        let (net, params, base, reference) = loop {
            let mut params = ParamSet::<f64>::new();
            let net =
                DtrNetwork::build(DtrNetworkConfig::new(DIM, vec![1, 4, 16, 64]), "dtr", &mut params, &mut rng);
            let mut base = vec![0.0f64; T_TOTAL * DIM];
            rng.fill_uniform(&mut base, -1.0, 1.0);
            let reference = dtr_features_at(&net, &params, Tensor::from_vec(&[T_TOTAL, DIM], base.clone()), T);
            if reference.iter().any(|&v| v != 0.0) {
                break (net, params, base, reference);
            }
            redraws += 1;
            assert!(redraws < 20, "relu gates frame {T} off in {redraws} straight draws");
        };

        // A reachable offset within 64 frames must propagate into frame T.
        let d = reachable[rng.below(reachable.len())];
        let u = if rng.below(2) == 0 { T as i64 + d } else { T as i64 - d } as usize;
        let col = rng.below(DIM);
        let mut bumped = base.clone();
        bumped[u * DIM + col] += 4.0;
        let near = dtr_features_at(&net, &params, Tensor::from_vec(&[T_TOTAL, DIM], bumped), T);
        assert_ne!(near, reference, "trial {trial}: offset {d} did not reach frame {T}");

        // A frame at distance >= 385 must leave frame T bit-for-bit alone.
        let far = if rng.below(2) == 0 {
            rng.range_inclusive(T + FAR, T_TOTAL - 1)
        } else {
            rng.below(T - FAR + 1)
        };
        let col = rng.below(DIM);
        let mut bumped = base.clone();
        bumped[far * DIM + col] += 4.0;
        let distant = dtr_features_at(&net, &params, Tensor::from_vec(&[T_TOTAL, DIM], bumped), T);
        assert_eq!(distant, reference, "trial {trial}: frame {far} moved frame {T}");
    }

    // Exhaustive far sweep on one fixed network: every frame at distance
    // >= 385, both directions.
    let mut params = ParamSet::<f64>::new();
    let net = DtrNetwork::build(DtrNetworkConfig::new(DIM, vec![1, 4, 16, 64]), "dtr", &mut params, &mut rng);
    let mut base = vec![0.0f64; T_TOTAL * DIM];
    rng.fill_uniform(&mut base, -1.0, 1.0);
    let reference = dtr_features_at(&net, &params, Tensor::from_vec(&[T_TOTAL, DIM], base.clone()), T);
    let far_frames: Vec<usize> = (0..T_TOTAL).filter(|&u| u.abs_diff(T) >= FAR).collect();
    for &u in &far_frames {
        let mut bumped = base.clone();
        bumped[u * DIM] += 1.0;
        let out = dtr_features_at(&net, &params, Tensor::from_vec(&[T_TOTAL, DIM], bumped), T);
        assert_eq!(out, reference, "frame {u} (distance {}) moved frame {T}", u.abs_diff(T));
    }

    println!(
        "c02 receptive-field isolation: PASS — {TRIALS} propagation trials over {} reachable offsets \
         ({redraws} gated draws redrawn), {} far frames bitwise inert",
        reachable.len(),
        far_frames.len()
    );
}

// ------------------------------------------------------------ 3: closed forms

#[test]
fn c03_span_and_reach_closed_forms_hold_on_the_grid() {
    // Hand anchors first.
    assert_eq!(time_span(1, 3), 3);
    assert_eq!(time_span(64, 3), 129);
    assert_eq!(receptive_field(1, 3, 1), 3);
    assert_eq!(receptive_field(64, 3, 3), 385);

    let mut checked = 0;
    for h in [1usize, 2, 4, 16, 32, 64, 128] {
        for w in [1usize, 3] {
            assert_eq!(time_span(h, w), h * (w - 1) + 1, "span h={h} w={w}");
            for j in [1usize, 2, 3] {
                assert_eq!(receptive_field(h, w, j), h * (w - 1) * j + 1, "reach h={h} w={w} j={j}");
                checked += 1;
            }
        }
    }
    println!("c03 span/reach conformance: PASS — {checked} grid points exact");
}

// ------------------------------------------------------------- 4: loss algebra

#[test]
fn c04_loss_identities_are_exact() {
    let mut rng = Rng::seeded(4);
    for _ in 0..200 {
        let (d_g, d_s, d_r) = (rng.uniform(), rng.uniform(), rng.uniform());
        let tau = rng.uniform();
        // The two players optimize exact negatives of one another.
        assert_eq!(
            generator_adversarial_loss(d_g, d_s, d_r, tau),
            -discriminator_loss(d_g, d_s, d_r, tau),
            "duality at tau {tau}"
        );
        // At tau = 1/2 the fake term is the exact mean of both fakes.
        assert_eq!(
            adversarial_spread(d_g, d_s, d_r, 0.5),
            d_g - (d_s + d_r) / 2.0,
            "tau 1/2 blend of {d_s} and {d_r}"
        );
    }
    assert_eq!(supervised_loss(&[0.5, 0.5], &[1.0, 0.0]).unwrap(), 0.5);
    println!("c04 loss identities: PASS — duality and tau-1/2 mean exact on 200 draws, fixture exact");
}

// ------------------------------------------------------ 5: oracle equivalence

/// Scatter table mirroring the segmentation code's arithmetic exactly
/// (per-column prefix sums, squared-norm prefix, clamp at zero).
struct Scatter {
    sum: Vec<f64>,
    sq: Vec<f64>,
    dim: usize,
}

impl Scatter {
    fn new(x: &Tensor<f64>) -> Self {
        let (t, d) = (x.rows(), x.cols());
        let mut sum = vec![0.0; (t + 1) * d];
        let mut sq = vec![0.0; t + 1];
        for r in 0..t {
            let row = x.row(r);
            let mut s2 = 0.0;
            for c in 0..d {
                sum[(r + 1) * d + c] = sum[r * d + c] + row[c];
                s2 += row[c] * row[c];
            }
            sq[r + 1] = sq[r] + s2;
        }
        Scatter { sum, sq, dim: d }
    }

    fn of(&self, i: usize, j: usize) -> f64 {
        let n = (j - i) as f64;
        let mut norm_sq = 0.0;
        for c in 0..self.dim {
            let s = self.sum[j * self.dim + c] - self.sum[i * self.dim + c];
            norm_sq += s * s;
        }
        ((self.sq[j] - self.sq[i]) - norm_sq / n).max(0.0)
    }

    /// Left-folded segment scatter plus the per-segment penalty.
    fn objective(&self, starts: &[usize], total: usize, lambda: f64) -> f64 {
        let mut cost = 0.0;
        for (k, &s) in starts.iter().enumerate() {
            let e = starts.get(k + 1).copied().unwrap_or(total);
            cost += self.of(s, e);
        }
        cost + lambda * starts.len() as f64
    }
}

#[test]
fn c05_dynamic_programs_match_exhaustive_search() {
    let mut rng = Rng::seeded(5);

    // Knapsack vs. all 2^n subsets. Values are quarter-integers, so every
    // subset sum is exact in f64 and equality is meaningful.
    let knapsack_cases = 500;
    for case in 0..knapsack_cases {
        let n = rng.range_inclusive(1, 15);
        let weights: Vec<usize> = (0..n).map(|_| rng.range_inclusive(1, 12)).collect();
        let values: Vec<f64> = (0..n).map(|_| rng.range_inclusive(0, 100) as f64 / 4.0).collect();
        let capacity = rng.below(weights.iter().sum::<usize>() + 2);

        let picked = knapsack_select(&values, &weights, capacity);
        let picked_weight: usize = picked.iter().map(|&i| weights[i]).sum();
        let picked_value: f64 = picked.iter().map(|&i| values[i]).sum();
        assert!(picked_weight <= capacity, "case {case} overweight");

        let mut best = 0.0f64;
        for mask in 0u32..1 << n {
            let mut w = 0;
            let mut v = 0.0;
            for i in 0..n {
                if mask >> i & 1 == 1 {
                    w += weights[i];
                    v += values[i];
                }
            }
            if w <= capacity && v > best {
                best = v;
            }
        }
        assert_eq!(picked_value, best, "case {case}: n={n} capacity={capacity}");
    }

    // Segmentation vs. every cut placement, exact objective equality.
    let kts_cases = 200;
    for case in 0..kts_cases {
        let t = rng.range_inclusive(2, 12);
        let d = rng.range_inclusive(1, 3);
        let m_max = rng.range_inclusive(1, 3.min(t));
        let mut data = vec![0.0; t * d];
        rng.fill_uniform(&mut data, -2.0, 2.0);
        let x = Tensor::from_vec(&[t, d], data);
        let lambda_arg = if case % 2 == 0 { Some(rng.uniform() * 2.0) } else { None };

        let table = Scatter::new(&x);
        let lambda = lambda_arg.unwrap_or_else(|| table.of(0, t) / (4.0 * m_max as f64));
        let seg = kts_segment(&x, m_max, lambda_arg).unwrap();
        let got = table.objective(seg.starts(), t, lambda);

        let mut best = f64::INFINITY;
        for mask in 0u32..1 << (t - 1) {
            let m = mask.count_ones() as usize + 1;
            if m > m_max {
                continue;
            }
            let mut starts = vec![0usize];
            for cut in 1..t {
                if mask >> (cut - 1) & 1 == 1 {
                    starts.push(cut);
                }
            }
            best = best.min(table.objective(&starts, t, lambda));
        }
        assert_eq!(got, best, "case {case}: T={t} m_max={m_max} lambda={lambda}");
    }

    // F-measure against hand arithmetic, including the all-zero corner.
    let f_tol = 1e-9;
    assert_eq!(f_measure(0.0, 0.0), 0.0);
    assert!((f_measure(1.0, 1.0) - 100.0).abs() <= f_tol);
    assert!((f_measure(0.5, 1.0) - 200.0 / 3.0).abs() <= f_tol);
    assert!((f_measure(0.25, 0.75) - 37.5).abs() <= f_tol);
    let (p, r) = precision_recall(&[true, true, false, false], &[true, false, true, false]).unwrap();
    assert_eq!((p, r), (0.5, 0.5));
    assert!((f_measure(p, r) - 50.0).abs() <= f_tol);
    let (p, r) = precision_recall(&[false; 4], &[false; 4]).unwrap();
    assert_eq!((p, r), (0.0, 0.0));
    assert_eq!(f_measure(p, r), 0.0);

    println!(
        "c05 oracle equivalence: PASS — {knapsack_cases} knapsack and {kts_cases} segmentation \
         instances exact, F fixtures within 1e-9"
    );
}

// --------------------------------------------------- 6: planted segmentation

#[test]
fn c06_planted_boundaries_recovered_at_ten_sigma() {
    let _g = gate();
    let spec = SyntheticSpec {
        videos: 100,
        separation: 10.0,
        sigma: 1.0,
        seed: 6,
        ..SyntheticSpec::default()
    };
    let corpus = generate::<f64>(&spec).unwrap();
    let mut hits = 0;
    for sv in &corpus {
        let seg = kts_segment(&sv.video.features, spec.segments, None).unwrap();
        if seg.starts() == &sv.boundaries[..] {
            hits += 1;
        }
    }
    assert!(hits >= 95, "only {hits}/100 videos segmented exactly at the planted cuts");
    println!("c06 planted recovery: PASS — {hits}/100 exact at separation 10 sigma");
}

// ------------------------------------------------------- 7: training quality

fn default_corpus() -> Vec<Video<f64>> {
    generate::<f64>(&SyntheticSpec::default())
        .unwrap()
        .into_iter()
        .map(|sv| sv.video)
        .collect()
}

fn peak_train_f(history: &[training::EvalPoint]) -> f64 {
    history.iter().map(|e| e.train_f).fold(f64::NEG_INFINITY, f64::max)
}

fn assert_finite_history(history: &[IterationMetrics]) {
    for m in history {
        assert!(m.l_summ.is_finite(), "iteration {}: L_summ = {}", m.iteration, m.l_summ);
        for (name, v) in [
            ("L_D", m.l_d),
            ("L_G_adv", m.l_g_adv),
            ("d_g", m.d_g),
            ("d_s", m.d_s),
            ("d_r", m.d_r),
        ] {
            if let Some(v) = v {
                assert!(v.is_finite(), "iteration {}: {name} = {v}", m.iteration);
            }
        }
    }
}

fn tail_mean(history: &[IterationMetrics], window: usize, f: impl Fn(&IterationMetrics) -> Option<f64>) -> f64 {
    let tail = &history[history.len().saturating_sub(window)..];
    let vals: Vec<f64> = tail.iter().filter_map(f).collect();
    assert!(!vals.is_empty(), "no values in the final {window} iterations");
    vals.iter().sum::<f64>() / vals.len() as f64
}

#[test]
fn c07_desk_scale_training_reaches_target_f() {
    let _g = gate();
    let start = Instant::now();
    let dataset = default_corpus();

    // (a) Summarizer alone must overfit the train split: mean F >= 90
    // within 500 epochs.
    let mut cfg = TrainConfig::new(16);
    cfg.mode = AdversaryMode::GeneratorOnly;
    cfg.epochs = 500;
    cfg.target_train_f = Some(90.0);
    cfg.eval_every = 5;
    let outcome = training::train(&cfg, &dataset).unwrap();
    assert_finite_history(&outcome.history);
    let f_a = peak_train_f(&outcome.evals);
    let secs_a = start.elapsed().as_secs_f64();
    assert!(f_a >= 90.0, "generator-only peaked at train F {f_a:.2} < 90");

    // (b) Full three-player run: finite losses, train F >= 80, and the
    // critic must end up scoring annotated pairs above random ones
    // (mean over the final 50 iterations).
    let mid = Instant::now();
    let mut cfg = TrainConfig::new(16);
    cfg.epochs = 300;
    cfg.target_train_f = Some(80.0);
    cfg.eval_every = 5;
    let outcome = training::train(&cfg, &dataset).unwrap();
    assert_finite_history(&outcome.history);
    let f_b = peak_train_f(&outcome.evals);
    assert!(f_b >= 80.0, "three-player peaked at train F {f_b:.2} < 80");
    let d_g = tail_mean(&outcome.history, 50, |m| m.d_g);
    let d_r = tail_mean(&outcome.history, 50, |m| m.d_r);
    assert!(d_g > d_r, "critic ends with d_g {d_g:.3} <= d_r {d_r:.3} over the final 50 iterations");
    let secs_b = mid.elapsed().as_secs_f64();

    let total = start.elapsed().as_secs_f64();
    assert!(total < 900.0, "training pair took {total:.0} s, budget is 900 s");
    println!(
        "c07 desk-scale training: PASS — (a) train F {f_a:.1} in {secs_a:.0} s; \
         (b) train F {f_b:.1}, d_g {d_g:.3} > d_r {d_r:.3} in {secs_b:.0} s; total {total:.0} s < 900"
    );
}

// ------------------------------------------------------ 8: ablation plumbing

fn vidsum(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_vidsum"))
        .args(args)
        .output()
        .expect("spawn vidsum")
}

fn vidsum_ok(args: &[&str]) {
    let out = vidsum(args);
    assert!(
        out.status.success(),
        "vidsum {args:?} failed:\n{}",
        String::from_utf8_lossy(&out.stderr)
    );
}

/// Every populated cell of a metrics CSV parses to a finite number.
fn assert_finite_metrics_csv(path: &Path) -> usize {
    let text = fs::read_to_string(path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    let mut rows = 0;
    for line in text.lines().skip(1) {
        rows += 1;
        for cell in line.split(',').filter(|c| !c.is_empty()) {
            let v: f64 = cell.parse().unwrap_or_else(|e| panic!("{path:?}: `{cell}`: {e}", path = path));
            assert!(v.is_finite(), "{}: non-finite cell `{cell}`", path.display());
        }
    }
    assert!(rows > 0, "{}: empty metrics", path.display());
    rows
}

#[test]
fn c08_ablation_flags_complete_adversarial_runs() {
    let _g = gate();
    let tmp = tempfile::tempdir().unwrap();
    let corpus = tmp.path().join("corpus");
    vidsum_ok(&["synth", "--out", corpus.to_str().unwrap()]); // library defaults
    let manifest = corpus.join("manifest.toml");

    let ablations: [(&str, &[&str]); 4] = [
        ("holes-1-2-4-16", &["--holes", "1,2,4,16"]),
        ("holes-16-32-64-128", &["--holes", "16,32,64,128"]),
        ("two-player", &["--mode", "two-player"]),
        ("no-supervised", &["--no-supervised"]),
    ];
    let mut summary = Vec::new();
    for (label, extra) in ablations {
        let out_dir = tmp.path().join(label);
        let mut args = vec![
            "train",
            "--data",
            manifest.to_str().unwrap(),
            "--out",
            out_dir.to_str().unwrap(),
            "--epochs",
            "40",
        ];
        args.extend_from_slice(extra);
        vidsum_ok(&args);
        let rows = assert_finite_metrics_csv(&out_dir.join("metrics.csv"));
        assert!(out_dir.join("checkpoint.dtrc").exists());
        summary.push(format!("{label} ({rows} iterations)"));
    }
    println!("c08 ablation plumbing: PASS — {} finite-loss runs: {}", summary.len(), summary.join(", "));
}

// ----------------------------------------------------------- 9: determinism

#[test]
fn c09_identical_configs_reproduce_identical_bytes() {
    let _g = gate();
    let tmp = tempfile::tempdir().unwrap();

    for side in ["a", "b"] {
        let root = tmp.path().join(side);
        let corpus = root.join("corpus");
        let run = root.join("run");
        vidsum_ok(&[
            "synth",
            "--out",
            corpus.to_str().unwrap(),
            "--videos",
            "4",
            "--min-frames",
            "60",
            "--max-frames",
            "90",
            "--dim",
            "8",
            "--segments",
            "4",
            "--separation",
            "8",
            "--seed",
            "9",
        ]);
        let manifest = corpus.join("manifest.toml");
        vidsum_ok(&[
            "train",
            "--data",
            manifest.to_str().unwrap(),
            "--out",
            run.to_str().unwrap(),
            "--epochs",
            "3",
            "--lstm-hidden",
            "4",
            "--enc-dim",
            "4",
            "--disc-hidden",
            "4",
            "--seed",
            "9",
        ]);
        let checkpoint = run.join("checkpoint.dtrc");
        vidsum_ok(&[
            "infer",
            "--checkpoint",
            checkpoint.to_str().unwrap(),
            "--data",
            manifest.to_str().unwrap(),
            "--out",
            root.join("scores").to_str().unwrap(),
        ]);
        vidsum_ok(&[
            "eval",
            "--checkpoint",
            checkpoint.to_str().unwrap(),
            "--data",
            manifest.to_str().unwrap(),
            "--out",
            root.join("report.csv").to_str().unwrap(),
        ]);
    }

    let mut compared = 0;
    let mut check = |rel: &str| {
        let a = fs::read(tmp.path().join("a").join(rel)).unwrap_or_else(|e| panic!("a/{rel}: {e}"));
        let b = fs::read(tmp.path().join("b").join(rel)).unwrap_or_else(|e| panic!("b/{rel}: {e}"));
        assert_eq!(a, b, "{rel} differs between identically-seeded runs");
        compared += 1;
    };
    check("run/checkpoint.dtrc");
    check("run/best.dtrc");
    check("run/metrics.csv");
    check("report.csv");
    for id in ["v01", "v02", "v03", "v04"] {
        check(&format!("scores/{id}.csv"));
    }
    println!("c09 determinism: PASS — {compared} artifacts bitwise identical across two seeded runs");
}

// -------------------------------------------------------- 10: file formats

#[test]
fn c10_formats_round_trip_and_reject_corruption() {
    let tmp = tempfile::tempdir().unwrap();
    let mut rng = Rng::seeded(10);

    // Features: storage is 32-bit, so any 32-bit-representable payload must
    // survive bit for bit.
    let mut vals = vec![0.0f64; 30 * 5];
    rng.fill_uniform(&mut vals, -3.0, 3.0);
    let vals: Vec<f64> = vals.into_iter().map(|v| v as f32 as f64).collect();
    let features = Tensor::from_vec(&[30, 5], vals);
    let fpath = tmp.path().join("x.dtrf");
    write_features(&fpath, &features).unwrap();
    let back = load_features::<f64>(&fpath).unwrap();
    assert_eq!(back.shape(), features.shape());
    assert_eq!(back.data(), features.data());

    // Annotations: full document equality through disk.
    let record = AnnotationRecord {
        video_id: "v01".into(),
        num_frames: 30,
        keyframes: vec![3, 17, 25],
        frame_scores: Some((0..30).map(|i| i as f64 / 29.0).collect()),
    };
    let apath = tmp.path().join("v01.toml");
    save_annotations(&apath, &record).unwrap();
    assert_eq!(load_annotations(&apath).unwrap(), record);

    // Checkpoints: every exported tensor bitwise, plus the stored tau.
    let mut model = vidsum_core::training::ModelConfig::new(5);
    model.lstm_hidden = 3;
    model.enc_dim = 3;
    model.disc_hidden = 3;
    model.head_dims = [6, 5, 4];
    let models = Models::<f64>::init(model, 42).unwrap();
    let cpath = tmp.path().join("m.dtrc");
    save_checkpoint(&cpath, &models, 0.25).unwrap();
    let loaded = load_checkpoint::<f64>(&cpath).unwrap();
    assert_eq!(loaded.tau, 0.25);
    for (before, after) in models
        .g_params
        .export()
        .iter()
        .chain(models.d_params.export().iter())
        .zip(loaded.models.g_params.export().iter().chain(loaded.models.d_params.export().iter()))
    {
        assert_eq!(before.0, after.0, "tensor order must survive");
        assert_eq!(before.1.data(), after.1.data(), "`{}` changed across disk", before.0);
    }

    // Corruption: each defect maps to its own error, not a panic or a
    // silent misread.
    let original = fs::read(&fpath).unwrap();
    let mut bad = original.clone();
    bad[0] = b'X';
    fs::write(&fpath, &bad).unwrap();
    assert!(matches!(load_features::<f64>(&fpath), Err(Error::BadMagic { .. })));

    let mut bad = original.clone();
    bad[4] = 9; // version field
    fs::write(&fpath, &bad).unwrap();
    assert!(matches!(load_features::<f64>(&fpath), Err(Error::UnsupportedVersion(9))));

    let mut bad = original.clone();
    bad[6] = 7; // dtype tag
    fs::write(&fpath, &bad).unwrap();
    assert!(matches!(load_features::<f64>(&fpath), Err(Error::UnsupportedDtype(7))));

    fs::write(&fpath, &original[..original.len() - 3]).unwrap();
    assert!(matches!(load_features::<f64>(&fpath), Err(Error::Truncated { .. })));

    let cbytes = fs::read(&cpath).unwrap();
    let mut bad = cbytes.clone();
    bad[4] = 9;
    fs::write(&cpath, &bad).unwrap();
    assert!(matches!(load_checkpoint::<f64>(&cpath), Err(Error::UnsupportedVersion(9))));
    fs::write(&cpath, &cbytes[..cbytes.len() - 5]).unwrap();
    assert!(matches!(load_checkpoint::<f64>(&cpath), Err(Error::Truncated { .. })));

    fs::write(&apath, "video_id = [not toml").unwrap();
    assert!(matches!(load_annotations(&apath), Err(Error::Parse(_))));

    // A manifest whose declared shape disagrees with the file on disk.
    write_features(&fpath, &features).unwrap();
    let manifest = DatasetManifest {
        videos: vec![VideoRecord {
            id: "v01".into(),
            frames: 31, // file holds 30
            dim: 5,
            features: "x.dtrf".into(),
            annotations: "v01.toml".into(),
            binarized: false,
        }],
        split: None,
    };
    assert!(matches!(
        manifest.validate_against_files(tmp.path()),
        Err(Error::BadManifest(_))
    ));

    println!(
        "c10 format round-trips: PASS — features/annotations/checkpoints lossless, \
         8 corruption cases produce their typed errors"
    );
}
