//! Comparison reports: per-metric CSV tables and grouped-bar SVG charts.
//!
//! Every byte written here is a pure function of the comparison results, so
//! regenerating a report from its own CSV files reproduces the charts
//! exactly — that is what the `render` subcommand does.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::metrics::{CellFailure, CellStats, Comparison, COMPARE_METRICS};
use crate::routing::Protocol;

/// The four headline charts: where the energy went, and what is left.
pub const CHART_METRICS: &[(&str, &str)] = &[
    ("mean_idle_mj", "Mean idle energy per node (mJ)"),
    ("mean_tx_mj", "Mean transmit energy per node (mJ)"),
    ("mean_rx_mj", "Mean receive energy per node (mJ)"),
    ("mean_remaining_mj", "Mean remaining energy per node (mJ)"),
];

pub fn protocol_color(p: Protocol) -> &'static str {
    match p {
        Protocol::Dsdv => "#1f77b4",
        Protocol::Dsr => "#ff7f0e",
        Protocol::Aodv => "#2ca02c",
        Protocol::Deerp => "#d62728",
    }
}

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path} line {line}: {msg}")]
    BadCsv {
        path: PathBuf,
        line: usize,
        msg: String,
    },
}

/// One metric's cell statistics as CSV. Full float precision, so parsing
/// the file back recovers the numbers bit-for-bit.
pub fn metric_csv(stats: &[CellStats]) -> String {
    let mut out = String::from("protocol,node_count,mean,stddev,n\n");
    for s in stats {
        let _ = writeln!(out, "{},{},{},{},{}", s.protocol, s.nodes, s.mean, s.stddev, s.n);
    }
    out
}

pub fn parse_metric_csv(path: &Path, text: &str) -> Result<Vec<CellStats>, ReportError> {
    let bad = |line: usize, msg: String| ReportError::BadCsv {
        path: path.to_path_buf(),
        line,
        msg,
    };
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, "protocol,node_count,mean,stddev,n")) => {}
        other => {
            return Err(bad(
                1,
                format!("expected the metric header, got {:?}", other.map(|(_, l)| l)),
            ))
        }
    }
    let mut out = Vec::new();
    for (i, line) in lines {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 5 {
            return Err(bad(i + 1, format!("expected 5 fields, got {}", fields.len())));
        }
        let parse_err = |what: &str| bad(i + 1, format!("cannot parse {what}"));
        out.push(CellStats {
            protocol: fields[0].parse().map_err(|_| parse_err("protocol"))?,
            nodes: fields[1].parse().map_err(|_| parse_err("node_count"))?,
            mean: fields[2].parse().map_err(|_| parse_err("mean"))?,
            stddev: fields[3].parse().map_err(|_| parse_err("stddev"))?,
            n: fields[4].parse().map_err(|_| parse_err("n"))?,
        });
    }
    Ok(out)
}

pub fn failures_csv(failures: &[CellFailure]) -> String {
    let mut out = String::from("protocol,node_count,seed,error\n");
    for f in failures {
        let _ = writeln!(
            out,
            "{},{},{},\"{}\"",
            f.protocol,
            f.nodes,
            f.seed,
            f.error.replace('"', "'")
        );
    }
    out
}

/// A grouped-bar chart: one group per node count, one bar per protocol,
/// whiskers at mean ± stddev. All coordinates are formatted to fixed
/// precision, so identical inputs yield identical bytes.
pub fn chart_svg(title: &str, stats: &[CellStats]) -> String {
    const W: f64 = 680.0;
    const H: f64 = 420.0;
    const LEFT: f64 = 86.0;
    const RIGHT: f64 = 24.0;
    const TOP: f64 = 52.0;
    const BOTTOM: f64 = 58.0;
    let plot_w = W - LEFT - RIGHT;
    let plot_h = H - TOP - BOTTOM;

    let counts: Vec<u32> = stats
        .iter()
        .map(|s| s.nodes)
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let protocols: Vec<Protocol> = Protocol::all()
        .into_iter()
        .filter(|p| stats.iter().any(|s| s.protocol == *p))
        .collect();

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" \
         viewBox=\"0 0 {W} {H}\" font-family=\"Helvetica, Arial, sans-serif\">"
    );
    let _ = writeln!(svg, "<rect width=\"{W}\" height=\"{H}\" fill=\"#ffffff\"/>");
    let _ = writeln!(
        svg,
        "<text x=\"{:.2}\" y=\"28\" text-anchor=\"middle\" font-size=\"15\" fill=\"#222222\">{}</text>",
        LEFT + plot_w / 2.0,
        xml_escape(title)
    );

    if counts.is_empty() || protocols.is_empty() {
        let _ = writeln!(
            svg,
            "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"middle\" font-size=\"13\" fill=\"#666666\">no data</text>",
            LEFT + plot_w / 2.0,
            TOP + plot_h / 2.0
        );
        svg.push_str("</svg>\n");
        return svg;
    }

    let ymax = stats
        .iter()
        .map(|s| s.mean + s.stddev)
        .fold(0.0f64, f64::max)
        .max(1e-12)
        * 1.08;
    let y_of = |v: f64| TOP + plot_h * (1.0 - v / ymax);

    // horizontal grid and y labels
    const TICKS: u32 = 5;
    for t in 0..=TICKS {
        let v = ymax * t as f64 / TICKS as f64;
        let y = y_of(v);
        let _ = writeln!(
            svg,
            "<line x1=\"{LEFT:.2}\" y1=\"{y:.2}\" x2=\"{:.2}\" y2=\"{y:.2}\" stroke=\"#dddddd\" stroke-width=\"1\"/>",
            LEFT + plot_w
        );
        let _ = writeln!(
            svg,
            "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"end\" font-size=\"11\" fill=\"#444444\">{}</text>",
            LEFT - 8.0,
            y + 4.0,
            fmt_tick(v)
        );
    }

    // bars with error whiskers
    let group_w = plot_w / counts.len() as f64;
    let band = group_w * 0.82;
    let bar_w = band / protocols.len() as f64;
    for (gi, &nodes) in counts.iter().enumerate() {
        let group_x = LEFT + gi as f64 * group_w + (group_w - band) / 2.0;
        for (pi, &protocol) in protocols.iter().enumerate() {
            let Some(cell) = stats.iter().find(|s| s.protocol == protocol && s.nodes == nodes)
            else {
                continue;
            };
            let x = group_x + pi as f64 * bar_w;
            let y = y_of(cell.mean);
            let _ = writeln!(
                svg,
                "<rect x=\"{x:.2}\" y=\"{y:.2}\" width=\"{:.2}\" height=\"{:.2}\" fill=\"{}\"/>",
                bar_w * 0.92,
                (TOP + plot_h - y).max(0.0),
                protocol_color(protocol)
            );
            if cell.stddev > 0.0 {
                let cx = x + bar_w * 0.46;
                let y_lo = y_of((cell.mean - cell.stddev).max(0.0));
                let y_hi = y_of(cell.mean + cell.stddev);
                let _ = writeln!(
                    svg,
                    "<line x1=\"{cx:.2}\" y1=\"{y_lo:.2}\" x2=\"{cx:.2}\" y2=\"{y_hi:.2}\" stroke=\"#333333\" stroke-width=\"1\"/>"
                );
                for yy in [y_lo, y_hi] {
                    let _ = writeln!(
                        svg,
                        "<line x1=\"{:.2}\" y1=\"{yy:.2}\" x2=\"{:.2}\" y2=\"{yy:.2}\" stroke=\"#333333\" stroke-width=\"1\"/>",
                        cx - 3.0,
                        cx + 3.0
                    );
                }
            }
        }
        let _ = writeln!(
            svg,
            "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"middle\" font-size=\"12\" fill=\"#444444\">{nodes}</text>",
            LEFT + gi as f64 * group_w + group_w / 2.0,
            TOP + plot_h + 20.0
        );
    }

    // axes
    let _ = writeln!(
        svg,
        "<line x1=\"{LEFT:.2}\" y1=\"{TOP:.2}\" x2=\"{LEFT:.2}\" y2=\"{:.2}\" stroke=\"#222222\" stroke-width=\"1\"/>",
        TOP + plot_h
    );
    let _ = writeln!(
        svg,
        "<line x1=\"{LEFT:.2}\" y1=\"{:.2}\" x2=\"{:.2}\" y2=\"{:.2}\" stroke=\"#222222\" stroke-width=\"1\"/>",
        TOP + plot_h,
        LEFT + plot_w,
        TOP + plot_h
    );
    let _ = writeln!(
        svg,
        "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"middle\" font-size=\"12\" fill=\"#444444\">nodes</text>",
        LEFT + plot_w / 2.0,
        TOP + plot_h + 42.0
    );

    // legend, top-right inside the plot
    for (pi, &protocol) in protocols.iter().enumerate() {
        let lx = LEFT + plot_w - 86.0;
        let ly = TOP + 6.0 + pi as f64 * 18.0;
        let _ = writeln!(
            svg,
            "<rect x=\"{lx:.2}\" y=\"{ly:.2}\" width=\"12\" height=\"12\" fill=\"{}\"/>",
            protocol_color(protocol)
        );
        let _ = writeln!(
            svg,
            "<text x=\"{:.2}\" y=\"{:.2}\" font-size=\"12\" fill=\"#222222\">{protocol}</text>",
            lx + 18.0,
            ly + 10.0
        );
    }

    svg.push_str("</svg>\n");
    svg
}

fn fmt_tick(v: f64) -> String {
    if v >= 1_000_000.0 {
        format!("{:.2}M", v / 1_000_000.0)
    } else if v >= 10_000.0 {
        format!("{:.1}k", v / 1_000.0)
    } else if v >= 100.0 {
        format!("{v:.0}")
    } else {
        format!("{v:.2}")
    }
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn chart_file(key: &str) -> String {
    format!("chart_{key}.svg")
}

fn write_file(dir: &Path, name: &str, content: &str) -> Result<PathBuf, ReportError> {
    let path = dir.join(name);
    fs::write(&path, content).map_err(|e| ReportError::Io {
        path: path.clone(),
        source: e,
    })?;
    Ok(path)
}

/// Write the full report for a comparison: one CSV per metric, the chart
/// SVGs, and `failures.csv`. Returns the files written.
pub fn write_report(dir: &Path, comparison: &Comparison) -> Result<Vec<PathBuf>, ReportError> {
    fs::create_dir_all(dir).map_err(|e| ReportError::Io {
        path: dir.to_path_buf(),
        source: e,
    })?;
    let mut written = Vec::new();
    for key in COMPARE_METRICS {
        let stats = comparison.cell_stats(key);
        written.push(write_file(dir, &format!("{key}.csv"), &metric_csv(&stats))?);
    }
    for (key, title) in CHART_METRICS {
        let stats = comparison.cell_stats(key);
        written.push(write_file(dir, &chart_file(key), &chart_svg(title, &stats))?);
    }
    written.push(write_file(dir, "failures.csv", &failures_csv(&comparison.failures))?);
    Ok(written)
}

/// Regenerate the chart SVGs from the metric CSVs already in `dir`.
/// Rendering is pure, so this reproduces `write_report`'s charts exactly.
pub fn render_charts_from_dir(dir: &Path) -> Result<Vec<PathBuf>, ReportError> {
    let mut written = Vec::new();
    for (key, title) in CHART_METRICS {
        let path = dir.join(format!("{key}.csv"));
        let text = fs::read_to_string(&path).map_err(|e| ReportError::Io {
            path: path.clone(),
            source: e,
        })?;
        let stats = parse_metric_csv(&path, &text)?;
        written.push(write_file(dir, &chart_file(key), &chart_svg(title, &stats))?);
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn stats() -> Vec<CellStats> {
        let mut out = Vec::new();
        for (pi, protocol) in Protocol::all().into_iter().enumerate() {
            for (ni, nodes) in [5u32, 10, 15].into_iter().enumerate() {
                out.push(CellStats {
                    protocol,
                    nodes,
                    n: 10,
                    mean: 1000.0 + 100.0 * pi as f64 + 10.0 * ni as f64,
                    stddev: 7.5 + pi as f64,
                });
            }
        }
        out
    }

    #[test]
    fn metric_csv_round_trips_exactly() {
        let original = stats();
        let text = metric_csv(&original);
        let parsed = parse_metric_csv(Path::new("x.csv"), &text).unwrap();
        assert_eq!(parsed, original);
        // and therefore the chart re-renders byte-identically
        assert_eq!(chart_svg("t", &original), chart_svg("t", &parsed));
    }

    #[test]
    fn parse_rejects_malformed_input() {
        let p = Path::new("x.csv");
        assert!(parse_metric_csv(p, "wrong,header\n").is_err());
        assert!(parse_metric_csv(p, "protocol,node_count,mean,stddev,n\ndsdv,5,1.0\n").is_err());
        assert!(
            parse_metric_csv(p, "protocol,node_count,mean,stddev,n\nospf,5,1.0,0.0,3\n").is_err()
        );
    }

    #[test]
    fn chart_is_deterministic_and_complete() {
        let s = stats();
        let a = chart_svg("Mean idle energy per node (mJ)", &s);
        let b = chart_svg("Mean idle energy per node (mJ)", &s);
        assert_eq!(a, b);
        assert_eq!(a.matches("<rect").count(), 1 + 12 + 4, "background + bars + legend");
        for p in Protocol::all() {
            assert!(a.contains(protocol_color(p)));
            assert!(a.contains(&format!(">{p}</text>")));
        }
        assert!(a.contains(">5</text>") && a.contains(">15</text>"));
    }

    #[test]
    fn chart_tolerates_missing_cells_and_empty_data() {
        let mut s = stats();
        s.retain(|c| !(c.protocol == Protocol::Aodv && c.nodes == 10));
        let svg = chart_svg("t", &s);
        assert_eq!(svg.matches("<rect").count(), 1 + 11 + 4);
        let empty = chart_svg("t", &[]);
        assert!(empty.contains("no data"));
    }

    #[test]
    fn failures_csv_quotes_messages() {
        let text = failures_csv(&[CellFailure {
            protocol: Protocol::Deerp,
            nodes: 100,
            seed: 3,
            error: "no selection row matches \"x\"".into(),
        }]);
        assert!(text.starts_with("protocol,node_count,seed,error\n"));
        assert!(text.contains("deerp,100,3,\"no selection row matches 'x'\""));
    }

    #[test]
    fn report_writes_and_rerenders_identically() {
        let dir = tempfile::tempdir().unwrap();
        let comparison = Comparison {
            protocols: Protocol::all().to_vec(),
            node_counts: vec![5, 10, 15],
            seeds: vec![1],
            runs: vec![],
            failures: vec![],
        };
        let files = write_report(dir.path(), &comparison).unwrap();
        assert_eq!(files.len(), COMPARE_METRICS.len() + CHART_METRICS.len() + 1);
        let chart_path = dir.path().join(chart_file("mean_idle_mj"));
        let first = fs::read_to_string(&chart_path).unwrap();
        render_charts_from_dir(dir.path()).unwrap();
        let second = fs::read_to_string(&chart_path).unwrap();
        assert_eq!(first, second);
    }
}
