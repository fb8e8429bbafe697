use std::fmt::Write as _;
use std::path::Path;

use super::{EvalReport, Scores, TrackerReport};
use crate::error::Result;
use crate::io::{create_dir, write_bytes};
use crate::types::MetricCurve;

const WIDTH: f64 = 480.0;
const HEIGHT: f64 = 360.0;
const MARGIN: f64 = 48.0;
const PALETTE: [&str; 8] = [
    "#d62728", "#1f77b4", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf",
];

fn num(v: f64) -> String {
    format!("{v:.6}")
}

/// `tracker,metric,threshold,value`, one row per grid point per tracker.
pub fn report_csv(trackers: &[TrackerReport]) -> String {
    let mut out = String::from("tracker,metric,threshold,value\n");
    for t in trackers {
        csv_rows(&mut out, &t.name, &t.overall);
    }
    out
}

fn csv_rows(out: &mut String, name: &str, s: &Scores) {
    for (metric, curve) in [
        ("precision", &s.precision),
        ("norm_precision", &s.norm_precision),
        ("success", &s.success),
    ] {
        for (t, v) in curve.thresholds().iter().zip(curve.values()) {
            let _ = writeln!(out, "{name},{metric},{},{}", num(*t), num(*v));
        }
    }
}

struct Series<'a> {
    label: String,
    score: f64,
    curve: &'a MetricCurve,
}

fn plot(title: &str, x_label: &str, series: Vec<Series<'_>>) -> String {
    let mut series = series;
    series.sort_by(|a, b| b.score.total_cmp(&a.score).then_with(|| a.label.cmp(&b.label)));
    let x_max = series
        .iter()
        .filter_map(|s| s.curve.thresholds().last().copied())
        .fold(0.0f64, f64::max)
        .max(f64::MIN_POSITIVE);
    let (pw, ph) = (WIDTH - 2.0 * MARGIN, HEIGHT - 2.0 * MARGIN);
    let px = |x: f64| MARGIN + pw * x / x_max;
    let py = |y: f64| HEIGHT - MARGIN - ph * y;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="24" text-anchor="middle" font-family="sans-serif" font-size="14">{title}</text>"#,
        WIDTH / 2.0
    );
    let _ = writeln!(
        s,
        r#"<rect x="{MARGIN}" y="{MARGIN}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#
    );
    for i in 0..=5 {
        let f = i as f64 / 5.0;
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end" font-family="sans-serif" font-size="10">{f:.1}</text>"#,
            MARGIN - 4.0,
            py(f) + 3.0
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle" font-family="sans-serif" font-size="10">{}</text>"#,
            px(f * x_max),
            HEIGHT - MARGIN + 14.0,
            trim(f * x_max)
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle" font-family="sans-serif" font-size="12">{x_label}</text>"#,
        WIDTH / 2.0,
        HEIGHT - 12.0
    );
    for (i, se) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let points: Vec<String> = se
            .curve
            .thresholds()
            .iter()
            .zip(se.curve.values())
            .map(|(x, y)| format!("{:.2},{:.2}", px(*x), py(*y)))
            .collect();
        let _ = writeln!(
            s,
            r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
            points.join(" ")
        );
        let ly = MARGIN + 14.0 + 14.0 * i as f64;
        let lx = WIDTH - MARGIN - 150.0;
        let _ = writeln!(
            s,
            r#"<line x1="{lx:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="{color}" stroke-width="2"/>"#,
            ly - 4.0,
            lx + 16.0,
            ly - 4.0
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{ly:.2}" font-family="sans-serif" font-size="10">{}</text>"#,
            lx + 20.0,
            escape(&se.label)
        );
    }
    s.push_str("</svg>\n");
    s
}

fn trim(v: f64) -> String {
    let s = format!("{v:.2}");
    s.trim_end_matches('0').trim_end_matches('.').to_string()
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn series<'a>(
    trackers: &'a [TrackerReport],
    scores: impl Fn(&'a TrackerReport) -> &'a Scores,
    pick: impl Fn(&'a Scores) -> (&'a MetricCurve, f64),
) -> Vec<Series<'a>> {
    trackers
        .iter()
        .map(|t| {
            let (curve, score) = pick(scores(t));
            Series {
                label: format!("{} [{score:.3}]", t.name),
                score,
                curve,
            }
        })
        .collect()
}

pub fn precision_svg(trackers: &[TrackerReport]) -> String {
    plot(
        "Precision plot",
        "Location error threshold (px)",
        series(trackers, |t| &t.overall, |s| (&s.precision, s.precision_at_20)),
    )
}

pub fn norm_precision_svg(trackers: &[TrackerReport]) -> String {
    plot(
        "Normalized precision plot",
        "Normalized location error threshold",
        series(trackers, |t| &t.overall, |s| (&s.norm_precision, s.norm_precision_score)),
    )
}

pub fn success_svg(trackers: &[TrackerReport]) -> String {
    plot(
        "Success plot",
        "Overlap threshold",
        series(trackers, |t| &t.overall, |s| (&s.success, s.auc)),
    )
}

/// Trackers ranked by success AUC, then name.
pub fn ranking_table(trackers: &[TrackerReport]) -> String {
    let mut order: Vec<&TrackerReport> = trackers.iter().collect();
    order.sort_by(|a, b| b.overall.auc.total_cmp(&a.overall.auc).then_with(|| a.name.cmp(&b.name)));
    let width = order.iter().map(|t| t.name.len()).max().unwrap_or(0).max("tracker".len());
    let mut out = format!(
        "{:<4} {:<width$} {:>8} {:>10} {:>8} {:>7}\n",
        "rank", "tracker", "prec@20", "norm_prec", "auc", "frames"
    );
    for (i, t) in order.iter().enumerate() {
        let s = &t.overall;
        let _ = writeln!(
            out,
            "{:<4} {:<width$} {:>8.4} {:>10.4} {:>8.4} {:>7}",
            i + 1,
            t.name,
            s.precision_at_20,
            s.norm_precision_score,
            s.auc,
            s.frames_used
        );
    }
    out
}

/// Writes `curves.csv`, `ranking.txt`, the three plots and, per attribute,
/// `attributes/<CODE>.csv` with `attributes/<CODE>_success.svg`. With no
/// trackers only the CSV header is written.
pub fn emit_report(report: &EvalReport, out_dir: &Path) -> Result<()> {
    create_dir(out_dir)?;
    let trackers = &report.trackers;
    write_bytes(&out_dir.join("curves.csv"), report_csv(trackers).as_bytes())?;
    if trackers.is_empty() {
        return Ok(());
    }
    write_bytes(&out_dir.join("ranking.txt"), ranking_table(trackers).as_bytes())?;
    write_bytes(&out_dir.join("precision.svg"), precision_svg(trackers).as_bytes())?;
    write_bytes(&out_dir.join("norm_precision.svg"), norm_precision_svg(trackers).as_bytes())?;
    write_bytes(&out_dir.join("success.svg"), success_svg(trackers).as_bytes())?;

    let mut attrs: Vec<_> = trackers.iter().flat_map(|t| t.per_attribute.keys().copied()).collect();
    attrs.sort();
    attrs.dedup();
    if attrs.is_empty() {
        return Ok(());
    }
    let dir = out_dir.join("attributes");
    create_dir(&dir)?;
    for a in attrs {
        let with: Vec<&TrackerReport> = trackers.iter().filter(|t| t.per_attribute.contains_key(&a)).collect();
        let mut csv = String::from("tracker,metric,threshold,value\n");
        for t in &with {
            csv_rows(&mut csv, &t.name, &t.per_attribute[&a]);
        }
        write_bytes(&dir.join(format!("{a}.csv")), csv.as_bytes())?;
        let svg = plot(
            &format!("Success plot ({a})"),
            "Overlap threshold",
            with.iter()
                .map(|t| {
                    let s = &t.per_attribute[&a];
                    Series {
                        label: format!("{} [{:.3}]", t.name, s.auc),
                        score: s.auc,
                        curve: &s.success,
                    }
                })
                .collect(),
        );
        write_bytes(&dir.join(format!("{a}_success.svg")), svg.as_bytes())?;
    }
    Ok(())
}
