//! Text and SVG artifacts the subcommands write.
//!
//! All numbers go through `Display`, which prints the shortest digits that
//! round-trip — byte-identical output for byte-identical runs.

use std::fmt::Write as _;

use vidsum_core::eval::EvalResult;
use vidsum_core::training::IterationMetrics;

/// `metrics.csv`: one row per training iteration. Quantities a mode does not
/// produce (critic terms under generator-only, validation F between
/// evaluations) stay empty rather than faking a zero.
pub fn metrics_csv(history: &[IterationMetrics]) -> String {
    let cell = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    let mut out = String::from("iteration,L_D,L_G_adv,L_summ,d_g,d_s,d_r,val_F\n");
    for m in history {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            m.iteration,
            cell(m.l_d),
            cell(m.l_g_adv),
            m.l_summ,
            cell(m.d_g),
            cell(m.d_s),
            cell(m.d_r),
            cell(m.val_f),
        )
        .unwrap();
    }
    out
}

/// Evaluation report: one row per video, then a `mean` footer carrying the
/// corpus-level F in the last column.
pub fn eval_csv(rows: &[(String, EvalResult)], mean_f: f64) -> String {
    let mut out = String::from("video_id,segments,predicted_frames,gt_frames,overlap,precision,recall,f\n");
    for (id, r) in rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            id, r.segments, r.predicted_frames, r.gt_frames, r.overlap, r.precision, r.recall, r.f
        )
        .unwrap();
    }
    writeln!(out, "mean,,,,,,,{mean_f}").unwrap();
    out
}

/// Per-frame scores as written by `infer`.
pub fn scores_csv(scores: &[f64]) -> String {
    let mut out = String::from("frame,score\n");
    for (t, s) in scores.iter().enumerate() {
        writeln!(out, "{t},{s}").unwrap();
    }
    out
}

/// Per-frame table behind a visualization: score, summary membership, and
/// (when annotations were given) the keyframe flag.
pub fn frame_table_csv(scores: &[f64], selected: &[bool], keyframes: Option<&[bool]>) -> String {
    assert_eq!(scores.len(), selected.len(), "score/selection length");
    let mut out = String::from("frame,score,selected,keyframe\n");
    for (t, s) in scores.iter().enumerate() {
        let kf = keyframes.map_or(false, |k| k[t]);
        writeln!(out, "{t},{s},{},{}", u8::from(selected[t]), u8::from(kf)).unwrap();
    }
    out
}

/// Maximal runs of `true`, as `[start, end)` pairs.
fn runs(mask: &[bool]) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    let mut open = None;
    for (i, &m) in mask.iter().enumerate() {
        match (m, open) {
            (true, None) => open = Some(i),
            (false, Some(s)) => {
                out.push((s, i));
                open = None;
            }
            _ => {}
        }
    }
    if let Some(s) = open {
        out.push((s, mask.len()));
    }
    out
}

/// Score curve over one video: selected keyshots shaded, segment boundaries
/// dashed, keyframes (if any) ticked below the axis.
pub fn score_svg(
    scores: &[f64],
    selected: &[bool],
    keyframes: Option<&[bool]>,
    boundaries: &[usize],
) -> String {
    assert_eq!(scores.len(), selected.len(), "score/selection length");
    let t_total = scores.len().max(1) as f64;
    let (width, height) = (860.0, 240.0);
    let (x0, x1) = (50.0, width - 15.0);
    let (y0, y1) = (16.0, 190.0);
    // `pos` runs over [0, T]; frame t sits at its center, t + 0.5.
    let x = |pos: f64| x0 + (x1 - x0) * pos / t_total;
    let y = |score: f64| y1 - (y1 - y0) * score.clamp(0.0, 1.0);

    let mut s = String::new();
    writeln!(
        s,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width}\" height=\"{height}\" \
         viewBox=\"0 0 {width} {height}\" font-family=\"sans-serif\" font-size=\"11\">"
    )
    .unwrap();
    writeln!(s, "<rect width=\"{width}\" height=\"{height}\" fill=\"#ffffff\"/>").unwrap();

    // Selected keyshots first, so everything else draws on top.
    for (start, end) in runs(selected) {
        writeln!(
            s,
            "<rect x=\"{:.2}\" y=\"{y0}\" width=\"{:.2}\" height=\"{:.2}\" fill=\"#2563eb\" fill-opacity=\"0.15\"/>",
            x(start as f64),
            x(end as f64) - x(start as f64),
            y1 - y0,
        )
        .unwrap();
    }

    // Horizontal grid at 0, 0.5, 1 with labels.
    for level in [0.0, 0.5, 1.0] {
        let yy = y(level);
        writeln!(
            s,
            "<line x1=\"{x0}\" y1=\"{yy:.2}\" x2=\"{x1}\" y2=\"{yy:.2}\" stroke=\"#dddddd\"/>\
             <text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"end\" fill=\"#444444\">{level}</text>",
            x0 - 6.0,
            yy + 4.0,
        )
        .unwrap();
    }

    // Segment boundaries (skip the one at frame 0).
    for &b in boundaries.iter().filter(|&&b| b > 0) {
        let xx = x(b as f64);
        writeln!(
            s,
            "<line x1=\"{xx:.2}\" y1=\"{y0}\" x2=\"{xx:.2}\" y2=\"{y1}\" stroke=\"#999999\" stroke-dasharray=\"3 3\"/>"
        )
        .unwrap();
    }

    // The score curve.
    let mut points = String::new();
    for (t, &sc) in scores.iter().enumerate() {
        write!(points, "{:.2},{:.2} ", x(t as f64 + 0.5), y(sc)).unwrap();
    }
    writeln!(
        s,
        "<polyline points=\"{}\" fill=\"none\" stroke=\"#2563eb\" stroke-width=\"1.5\"/>",
        points.trim_end()
    )
    .unwrap();

    // Keyframe ticks under the axis.
    if let Some(kf) = keyframes {
        for (t, _) in kf.iter().enumerate().filter(|(_, &k)| k) {
            let xx = x(t as f64 + 0.5);
            writeln!(
                s,
                "<line x1=\"{xx:.2}\" y1=\"{:.2}\" x2=\"{xx:.2}\" y2=\"{:.2}\" stroke=\"#dc2626\" stroke-width=\"1.5\"/>",
                y1 + 4.0,
                y1 + 14.0,
            )
            .unwrap();
        }
    }

    // Frame axis.
    writeln!(
        s,
        "<line x1=\"{x0}\" y1=\"{y1}\" x2=\"{x1}\" y2=\"{y1}\" stroke=\"#444444\"/>\
         <text x=\"{x0}\" y=\"{:.2}\" fill=\"#444444\">0</text>\
         <text x=\"{x1}\" y=\"{:.2}\" text-anchor=\"end\" fill=\"#444444\">{}</text>",
        height - 8.0,
        height - 8.0,
        scores.len(),
    )
    .unwrap();
    writeln!(s, "</svg>").unwrap();
    s
}
