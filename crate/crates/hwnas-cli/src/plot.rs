//! Scatter-data export: several front files merged into one labeled CSV,
//! and an optional SVG scatter. Both outputs are pure functions of the
//! inputs, so identical inputs give identical bytes.

use hwnas::engine::FrontRow;
use std::collections::BTreeMap;
use std::fmt::Write as _;

pub struct Series {
    pub label: String,
    pub meta: BTreeMap<String, String>,
    pub rows: Vec<FrontRow>,
}

pub const MERGED_HEADER: &str = "series,arch,niche,accuracy,latency,generation";

pub fn merged_csv(series: &[Series]) -> String {
    let mut out = String::from(MERGED_HEADER);
    out.push('\n');
    for s in series {
        for row in &s.rows {
            writeln!(
                out,
                "{},{},{},{},{},{}",
                s.label, row.arch, row.niche, row.accuracy, row.latency, row.generation
            )
            .expect("string write");
        }
    }
    out
}

/// Axis ranges for the scatter. When every input front carries the same
/// normalization bounds in its metadata those bounds are used verbatim;
/// otherwise the ranges fall back to the data extent with a small margin.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Axes {
    pub lat_min: f64,
    pub lat_max: f64,
    pub acc_min: f64,
    pub acc_max: f64,
    pub from_metadata: bool,
}

const BOUND_KEYS: [&str; 4] = [
    "bounds_lat_min",
    "bounds_lat_max",
    "bounds_acc_min",
    "bounds_acc_max",
];

fn metadata_bounds(meta: &BTreeMap<String, String>) -> Option<[f64; 4]> {
    let mut values = [0.0; 4];
    for (slot, key) in BOUND_KEYS.iter().enumerate() {
        values[slot] = meta.get(*key)?.parse().ok()?;
    }
    Some(values)
}

pub fn axes(series: &[Series]) -> Axes {
    let from_meta: Vec<[f64; 4]> = series
        .iter()
        .filter_map(|s| metadata_bounds(&s.meta))
        .collect();
    if from_meta.len() == series.len() && from_meta.windows(2).all(|w| w[0] == w[1]) {
        if let Some(b) = from_meta.first() {
            return Axes {
                lat_min: b[0],
                lat_max: b[1],
                acc_min: b[2],
                acc_max: b[3],
                from_metadata: true,
            };
        }
    }
    let mut lat = (f64::INFINITY, f64::NEG_INFINITY);
    let mut acc = (f64::INFINITY, f64::NEG_INFINITY);
    for row in series.iter().flat_map(|s| &s.rows) {
        lat = (lat.0.min(row.latency), lat.1.max(row.latency));
        acc = (acc.0.min(row.accuracy), acc.1.max(row.accuracy));
    }
    if !lat.0.is_finite() {
        // No points at all; any fixed frame works.
        lat = (0.0, 1.0);
        acc = (0.0, 1.0);
    }
    let pad = |lo: f64, hi: f64| {
        let span = hi - lo;
        let margin = if span > 0.0 { span * 0.05 } else { 0.5 };
        (lo - margin, hi + margin)
    };
    let (lat_min, lat_max) = pad(lat.0, lat.1);
    let (acc_min, acc_max) = pad(acc.0, acc.1);
    Axes {
        lat_min,
        lat_max,
        acc_min,
        acc_max,
        from_metadata: false,
    }
}

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 480.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 20.0;
const BOTTOM: f64 = 50.0;
const PALETTE: [&str; 6] = [
    "#1b6ca8", "#d1495b", "#2e933c", "#8e5ba6", "#c77d2e", "#4d4d4d",
];

/// Latency on x, accuracy on y, one color per series, fixed layout.
pub fn svg_scatter(series: &[Series]) -> String {
    let axes = axes(series);
    let plot_w = WIDTH - LEFT - RIGHT;
    let plot_h = HEIGHT - TOP - BOTTOM;
    let x = |lat: f64| LEFT + (lat - axes.lat_min) / (axes.lat_max - axes.lat_min) * plot_w;
    let y = |acc: f64| TOP + (axes.acc_max - acc) / (axes.acc_max - axes.acc_min) * plot_h;

    let mut out = String::new();
    writeln!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 {WIDTH} {HEIGHT}\" font-family=\"sans-serif\" font-size=\"12\">"
    )
    .expect("string write");
    writeln!(
        out,
        "  <rect x=\"{LEFT}\" y=\"{TOP}\" width=\"{plot_w}\" height=\"{plot_h}\" fill=\"none\" stroke=\"#333\"/>"
    )
    .expect("string write");

    // Axis end labels and titles.
    let bottom_y = TOP + plot_h;
    writeln!(
        out,
        "  <text x=\"{LEFT}\" y=\"{:.2}\" text-anchor=\"middle\">{:.3}</text>",
        bottom_y + 16.0,
        axes.lat_min
    )
    .expect("string write");
    writeln!(
        out,
        "  <text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"middle\">{:.3}</text>",
        LEFT + plot_w,
        bottom_y + 16.0,
        axes.lat_max
    )
    .expect("string write");
    writeln!(
        out,
        "  <text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"middle\">latency (ms)</text>",
        LEFT + plot_w / 2.0,
        bottom_y + 34.0
    )
    .expect("string write");
    writeln!(
        out,
        "  <text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"end\">{:.3}</text>",
        LEFT - 6.0,
        bottom_y,
        axes.acc_min
    )
    .expect("string write");
    writeln!(
        out,
        "  <text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"end\">{:.3}</text>",
        LEFT - 6.0,
        TOP + 10.0,
        axes.acc_max
    )
    .expect("string write");
    writeln!(
        out,
        "  <text x=\"16\" y=\"{:.2}\" text-anchor=\"middle\" transform=\"rotate(-90 16 {:.2})\">accuracy (%)</text>",
        TOP + plot_h / 2.0,
        TOP + plot_h / 2.0
    )
    .expect("string write");

    for (i, s) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        writeln!(out, "  <g fill=\"{color}\" fill-opacity=\"0.8\">").expect("string write");
        for row in &s.rows {
            writeln!(
                out,
                "    <circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"3\"/>",
                x(row.latency),
                y(row.accuracy)
            )
            .expect("string write");
        }
        writeln!(out, "  </g>").expect("string write");
        let legend_y = TOP + 8.0 + 16.0 * i as f64;
        writeln!(
            out,
            "  <rect x=\"{:.2}\" y=\"{:.2}\" width=\"10\" height=\"10\" fill=\"{color}\"/>",
            LEFT + plot_w - 150.0,
            legend_y
        )
        .expect("string write");
        writeln!(
            out,
            "  <text x=\"{:.2}\" y=\"{:.2}\">{}</text>",
            LEFT + plot_w - 136.0,
            legend_y + 9.0,
            s.label
        )
        .expect("string write");
    }
    out.push_str("</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(arch: &str, acc: f64, lat: f64) -> FrontRow {
        FrontRow {
            arch: arch.to_string(),
            niche: 0,
            accuracy: acc,
            latency: lat,
            generation: 1,
        }
    }

    fn series(label: &str, rows: Vec<FrontRow>) -> Series {
        Series {
            label: label.to_string(),
            meta: BTreeMap::new(),
            rows,
        }
    }

    #[test]
    fn merged_csv_has_one_labeled_row_per_point() {
        let a = series("a", vec![row("x", 80.0, 2.0), row("y", 85.0, 3.0)]);
        let b = series("b", vec![row("z", 70.0, 1.0)]);
        let csv = merged_csv(&[a, b]);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 4);
        assert_eq!(lines[0], MERGED_HEADER);
        assert!(lines[1].starts_with("a,x,"));
        assert!(lines[3].starts_with("b,z,"));
    }

    #[test]
    fn axes_prefer_shared_metadata_bounds() {
        let mut meta = BTreeMap::new();
        meta.insert("bounds_lat_min".to_string(), "1".to_string());
        meta.insert("bounds_lat_max".to_string(), "9".to_string());
        meta.insert("bounds_acc_min".to_string(), "10".to_string());
        meta.insert("bounds_acc_max".to_string(), "95".to_string());
        let mut a = series("a", vec![row("x", 80.0, 2.0)]);
        a.meta = meta.clone();
        let mut b = series("b", vec![row("y", 70.0, 5.0)]);
        b.meta = meta;
        let axes = axes(&[a, b]);
        assert!(axes.from_metadata);
        assert_eq!((axes.lat_min, axes.lat_max), (1.0, 9.0));
        assert_eq!((axes.acc_min, axes.acc_max), (10.0, 95.0));
    }

    #[test]
    fn axes_fall_back_to_padded_data_extent() {
        let a = series("a", vec![row("x", 80.0, 2.0), row("y", 90.0, 4.0)]);
        let axes = axes(&[a]);
        assert!(!axes.from_metadata);
        assert!(axes.lat_min < 2.0 && axes.lat_max > 4.0);
        assert!(axes.acc_min < 80.0 && axes.acc_max > 90.0);
    }

    #[test]
    fn svg_is_deterministic_and_mentions_every_series() {
        let make = || {
            vec![
                series("run-a", vec![row("x", 80.0, 2.0)]),
                series("run-b", vec![row("y", 85.0, 3.0)]),
            ]
        };
        let one = svg_scatter(&make());
        let two = svg_scatter(&make());
        assert_eq!(one, two);
        assert!(one.contains("run-a") && one.contains("run-b"));
        assert_eq!(one.matches("<circle").count(), 2);
    }
}
