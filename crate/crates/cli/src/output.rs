//! Aggregation across seeds, `summary.csv`, and the SVG regret plot.

use std::fmt::Write as _;
use std::io;

/// Cumulative-regret curves of one setting, one inner vector per seed.
#[derive(Debug, Clone, PartialEq)]
pub struct Aggregate {
    pub label: String,
    pub t: Vec<usize>,
    pub mean: Vec<f64>,
    pub median: Vec<f64>,
    pub q25: Vec<f64>,
    pub q75: Vec<f64>,
}

/// Linear-interpolation quantile of sorted data.
pub fn quantile(sorted: &[f64], p: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let pos = p * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

impl Aggregate {
    /// Curves may differ in length; t runs to the shortest.
    pub fn from_curves(label: impl Into<String>, curves: &[Vec<f64>]) -> Self {
        let len = curves.iter().map(Vec::len).min().unwrap_or(0);
        let mut agg = Aggregate {
            label: label.into(),
            t: Vec::with_capacity(len),
            mean: Vec::with_capacity(len),
            median: Vec::with_capacity(len),
            q25: Vec::with_capacity(len),
            q75: Vec::with_capacity(len),
        };
        let mut col = Vec::with_capacity(curves.len());
        for i in 0..len {
            col.clear();
            col.extend(curves.iter().map(|c| c[i]));
            col.sort_by(f64::total_cmp);
            agg.t.push(i + 1);
            agg.mean.push(col.iter().sum::<f64>() / col.len() as f64);
            agg.median.push(quantile(&col, 0.5));
            agg.q25.push(quantile(&col, 0.25));
            agg.q75.push(quantile(&col, 0.75));
        }
        agg
    }

    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }
}

pub const SUMMARY_CSV_HEADER: [&str; 7] = ["experiment", "t", "mean", "median", "q25", "q75", "iqr"];

pub fn write_summary_csv<W: io::Write>(aggs: &[Aggregate], w: W) -> csv::Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(SUMMARY_CSV_HEADER)?;
    for a in aggs {
        for i in 0..a.len() {
            wtr.write_record([
                a.label.clone(),
                a.t[i].to_string(),
                a.mean[i].to_string(),
                a.median[i].to_string(),
                a.q25[i].to_string(),
                a.q75[i].to_string(),
                (a.q75[i] - a.q25[i]).to_string(),
            ])?;
        }
    }
    wtr.flush()?;
    Ok(())
}

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 440.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 170.0;
const TOP: f64 = 30.0;
const BOTTOM: f64 = 60.0;
const MAX_POINTS: usize = 400;
const COLOURS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

/// Roughly five round tick values covering [0, max].
fn ticks(max: f64) -> Vec<f64> {
    let raw = max / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0].iter().map(|m| m * mag).find(|s| *s >= raw).unwrap_or(10.0 * mag);
    let mut out = Vec::new();
    let mut v = 0.0;
    while v <= max * (1.0 + 1e-9) {
        out.push(v);
        v += step;
    }
    out
}

fn fmt_tick(v: f64) -> String {
    if v == 0.0 || (v.abs() >= 1e-3 && v.abs() < 1e6) {
        let s = format!("{v:.3}");
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        format!("{v:.1e}")
    }
}

/// Mean curve and IQR band of each aggregate against t, on shared axes.
pub fn emit_svg(aggs: &[Aggregate], title: &str) -> String {
    let t_max = aggs.iter().filter_map(|a| a.t.last()).copied().max().unwrap_or(1).max(1) as f64;
    let y_top = aggs
        .iter()
        .flat_map(|a| a.q75.iter().chain(&a.mean))
        .copied()
        .filter(|v| v.is_finite())
        .fold(0.0, f64::max);
    let y_max = if y_top > 0.0 { y_top * 1.05 } else { 1.0 };
    let pw = WIDTH - LEFT - RIGHT;
    let ph = HEIGHT - TOP - BOTTOM;
    let x = |t: f64| LEFT + pw * t / t_max;
    let y = |v: f64| TOP + ph * (1.0 - v / y_max);

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<title>{}</title>"#, escape(title));
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    for v in ticks(y_max) {
        let yy = y(v);
        let _ = writeln!(
            s,
            r##"<line x1="{LEFT}" y1="{yy:.2}" x2="{:.2}" y2="{yy:.2}" stroke="#e0e0e0"/><text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"##,
            LEFT + pw,
            LEFT - 6.0,
            yy + 4.0,
            fmt_tick(v)
        );
    }
    for v in ticks(t_max) {
        let xx = x(v);
        let _ = writeln!(
            s,
            r#"<line x1="{xx:.2}" y1="{:.2}" x2="{xx:.2}" y2="{:.2}" stroke="black"/><text x="{xx:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            TOP + ph,
            TOP + ph + 5.0,
            TOP + ph + 18.0,
            fmt_tick(v)
        );
    }
    let _ = writeln!(
        s,
        r#"<line x1="{LEFT}" y1="{TOP}" x2="{LEFT}" y2="{:.2}" stroke="black"/><line x1="{LEFT}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="black"/>"#,
        TOP + ph,
        TOP + ph,
        LEFT + pw,
        TOP + ph
    );
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">t</text>"#,
        LEFT + pw / 2.0,
        HEIGHT - 15.0
    );
    let _ = writeln!(
        s,
        r#"<text x="20" y="{:.2}" text-anchor="middle" transform="rotate(-90 20 {:.2})">cumulative regret</text>"#,
        TOP + ph / 2.0,
        TOP + ph / 2.0
    );
    let _ = writeln!(s, r#"<text x="{:.2}" y="18" text-anchor="middle">{}</text>"#, LEFT + pw / 2.0, escape(title));

    for (k, a) in aggs.iter().enumerate() {
        let colour = COLOURS[k % COLOURS.len()];
        let stride = a.len().div_ceil(MAX_POINTS).max(1);
        let mut idx: Vec<usize> = (0..a.len()).step_by(stride).collect();
        if let Some(&last) = idx.last() {
            if last + 1 != a.len() {
                idx.push(a.len() - 1);
            }
        }
        if idx.is_empty() {
            continue;
        }
        let upper: Vec<String> = idx.iter().map(|&i| format!("{:.2},{:.2}", x(a.t[i] as f64), y(a.q75[i]))).collect();
        let lower: Vec<String> = idx.iter().rev().map(|&i| format!("{:.2},{:.2}", x(a.t[i] as f64), y(a.q25[i]))).collect();
        let _ = writeln!(
            s,
            r#"<polygon points="{} {}" fill="{colour}" fill-opacity="0.2" stroke="none"/>"#,
            upper.join(" "),
            lower.join(" ")
        );
        let mean: Vec<String> = idx.iter().map(|&i| format!("{:.2},{:.2}", x(a.t[i] as f64), y(a.mean[i]))).collect();
        let _ = writeln!(
            s,
            r#"<polyline points="{}" fill="none" stroke="{colour}" stroke-width="2"><title>{}</title></polyline>"#,
            mean.join(" "),
            escape(&a.label)
        );
        let ly = TOP + 10.0 + 20.0 * k as f64;
        let lx = LEFT + pw + 15.0;
        let _ = writeln!(
            s,
            r#"<line x1="{lx:.2}" y1="{ly:.2}" x2="{:.2}" y2="{ly:.2}" stroke="{colour}" stroke-width="2"/><text x="{:.2}" y="{:.2}">{}</text>"#,
            lx + 20.0,
            lx + 26.0,
            ly + 4.0,
            escape(&a.label)
        );
    }
    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quantiles_interpolate() {
        let v = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(quantile(&v, 0.5), 2.5);
        assert_eq!(quantile(&v, 0.25), 1.75);
        assert_eq!(quantile(&[7.0], 0.75), 7.0);
    }

    #[test]
    fn aggregate_of_identical_curves_has_zero_iqr() {
        let a = Aggregate::from_curves("x", &[vec![0.0, 1.0, 3.0], vec![0.0, 1.0, 3.0]]);
        assert_eq!(a.t, vec![1, 2, 3]);
        assert_eq!(a.mean, vec![0.0, 1.0, 3.0]);
        assert_eq!(a.q25, a.q75);
    }

    #[test]
    fn summary_has_one_row_per_t() {
        let a = Aggregate::from_curves("x", &[vec![1.0, 2.0], vec![3.0, 4.0]]);
        let mut buf = Vec::new();
        write_summary_csv(&[a], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 3);
        assert!(text.starts_with("experiment,t,mean,median,q25,q75,iqr"));
        assert!(text.contains("x,2,3,3,2.5,3.5,1"));
    }

    #[test]
    fn ticks_cover_range() {
        let t = ticks(5000.0);
        assert_eq!(t.first(), Some(&0.0));
        assert!(*t.last().unwrap() <= 5000.0 && t.len() >= 3);
    }
}
