use std::collections::BTreeMap;
use std::fmt::Write as _;

use super::compare::combo_sort_key;
use super::{ComparisonReport, EvalRow};

const W: f64 = 720.0;
const H: f64 = 400.0;
const LEFT: f64 = 60.0;
const RIGHT: f64 = 160.0;
const TOP: f64 = 30.0;
const BOTTOM: f64 = 50.0;
const PALETTE: [&str; 8] = ["#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"];

fn header(title: &str) -> String {
    format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" viewBox=\"0 0 {W} {H}\" font-family=\"sans-serif\" font-size=\"11\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n<text x=\"{}\" y=\"18\" text-anchor=\"middle\" font-size=\"13\">{}</text>\n",
        (W - RIGHT + LEFT) / 2.0,
        escape(title)
    )
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

struct Axis {
    lo: f64,
    hi: f64,
}

impl Axis {
    fn y(&self, v: f64) -> f64 {
        let span = if self.hi > self.lo { self.hi - self.lo } else { 1.0 };
        H - BOTTOM - (v - self.lo) / span * (H - TOP - BOTTOM)
    }

    fn draw(&self, out: &mut String, ticks: usize, percent: bool) {
        let _ =
            writeln!(out, "<line x1=\"{LEFT}\" y1=\"{TOP}\" x2=\"{LEFT}\" y2=\"{}\" stroke=\"black\"/>", H - BOTTOM);
        for i in 0..=ticks {
            let v = self.lo + (self.hi - self.lo) * i as f64 / ticks as f64;
            let y = self.y(v);
            let label = if percent { format!("{:.0}%", v * 100.0) } else { format!("{v:.2}") };
            let _ = writeln!(
                out,
                "<line x1=\"{}\" y1=\"{y:.2}\" x2=\"{LEFT}\" y2=\"{y:.2}\" stroke=\"black\"/><text x=\"{}\" y=\"{:.2}\" text-anchor=\"end\">{label}</text>",
                LEFT - 4.0,
                LEFT - 6.0,
                y + 4.0
            );
        }
    }
}

/// Line chart of each combo's F1 change over the baseline, one point per
/// project, with the baseline drawn at zero.
pub fn improvement_svg(report: &ComparisonReport, model: &str) -> String {
    let imps: Vec<_> = report.improvements.iter().filter(|i| i.model == model).collect();
    let mut projects: Vec<&str> = imps.iter().map(|i| i.project.as_str()).collect();
    projects.sort();
    projects.dedup();
    let mut series: BTreeMap<(usize, String), Vec<(usize, f64)>> = BTreeMap::new();
    for i in &imps {
        if let Some(v) = i.improvement {
            let x = projects.iter().position(|p| *p == i.project).unwrap_or(0);
            series.entry(combo_sort_key(&i.combo)).or_default().push((x, v));
        }
    }
    let values: Vec<f64> = series.values().flatten().map(|p| p.1).chain([0.0]).collect();
    let axis = Axis {
        lo: values.iter().copied().fold(f64::INFINITY, f64::min).min(0.0),
        hi: values.iter().copied().fold(f64::NEG_INFINITY, f64::max).max(0.0),
    };
    let step = (W - LEFT - RIGHT) / projects.len().max(1) as f64;
    let px = |x: usize| LEFT + step * (x as f64 + 0.5);

    let mut out = header(&format!("F1 change over {} ({model})", report.baseline));
    axis.draw(&mut out, 5, true);
    let y0 = axis.y(0.0);
    let _ = writeln!(
        out,
        "<line x1=\"{LEFT}\" y1=\"{y0:.2}\" x2=\"{}\" y2=\"{y0:.2}\" stroke=\"gray\" stroke-dasharray=\"4 3\"/>",
        W - RIGHT
    );
    for (i, p) in projects.iter().enumerate() {
        let _ = writeln!(
            out,
            "<text x=\"{:.2}\" y=\"{}\" text-anchor=\"middle\">{}</text>",
            px(i),
            H - BOTTOM + 16.0,
            escape(p)
        );
    }
    for (k, ((_, combo), pts)) in series.iter().enumerate() {
        let color = PALETTE[k % PALETTE.len()];
        let path: Vec<String> = pts.iter().map(|(x, v)| format!("{:.2},{:.2}", px(*x), axis.y(*v))).collect();
        let _ = writeln!(
            out,
            "<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"2\" points=\"{}\"/>",
            path.join(" ")
        );
        for (x, v) in pts {
            let _ = writeln!(out, "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"3\" fill=\"{color}\"/>", px(*x), axis.y(*v));
        }
        let ly = TOP + 16.0 * k as f64;
        let _ = writeln!(
            out,
            "<rect x=\"{}\" y=\"{ly}\" width=\"12\" height=\"10\" fill=\"{color}\"/><text x=\"{}\" y=\"{}\">{}</text>",
            W - RIGHT + 16.0,
            W - RIGHT + 32.0,
            ly + 9.0,
            escape(combo)
        );
    }
    out.push_str("</svg>\n");
    out
}

fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let (i, frac) = (pos.floor() as usize, pos.fract());
    if i + 1 < sorted.len() {
        sorted[i] + frac * (sorted[i + 1] - sorted[i])
    } else {
        sorted[i]
    }
}

/// Box plot of one metric across projects, one box per combo.
pub fn box_plot_svg(rows: &[EvalRow], model: &str, metric: &str) -> String {
    let mut by_combo: BTreeMap<(usize, String), Vec<f64>> = BTreeMap::new();
    for r in rows.iter().filter(|r| r.model == model) {
        if let Some(v) = r.metric(metric) {
            by_combo.entry(combo_sort_key(&r.combo)).or_default().push(v);
        }
    }
    let axis = Axis { lo: 0.0, hi: 1.0 };
    let step = (W - LEFT - RIGHT) / by_combo.len().max(1) as f64;
    let mut out = header(&format!("{metric} by feature combination ({model})"));
    axis.draw(&mut out, 5, false);
    for (k, ((_, combo), vals)) in by_combo.iter_mut().enumerate() {
        vals.sort_by(f64::total_cmp);
        let cx = LEFT + step * (k as f64 + 0.5);
        let half = (step * 0.3).min(30.0);
        let [lo, q1, med, q3, hi] = [0.0, 0.25, 0.5, 0.75, 1.0].map(|q| axis.y(quantile(vals, q)));
        let color = PALETTE[k % PALETTE.len()];
        let _ = writeln!(
            out,
            "<line x1=\"{cx:.2}\" y1=\"{lo:.2}\" x2=\"{cx:.2}\" y2=\"{hi:.2}\" stroke=\"black\"/>\n<rect x=\"{:.2}\" y=\"{q3:.2}\" width=\"{:.2}\" height=\"{:.2}\" fill=\"{color}\" fill-opacity=\"0.5\" stroke=\"black\"/>\n<line x1=\"{:.2}\" y1=\"{med:.2}\" x2=\"{:.2}\" y2=\"{med:.2}\" stroke=\"black\" stroke-width=\"2\"/>\n<text x=\"{cx:.2}\" y=\"{}\" text-anchor=\"middle\">{}</text>",
            cx - half,
            2.0 * half,
            (q1 - q3).max(0.0),
            cx - half,
            cx + half,
            H - BOTTOM + 16.0,
            escape(combo)
        );
    }
    out.push_str("</svg>\n");
    out
}
