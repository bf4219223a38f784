//! Benchmark reporting: the results CSV, a markdown summary table, and the
//! search/check split chart as SVG.

use crate::bench::{summarize, BenchRecord, PlannerSummary};
use crate::error::Error;
use crate::planner::PlanStatus;
use crate::Result;
use std::path::Path;

pub const CSV_HEADER: &str =
    "problem_id,planner,status,total_s,search_s,check_s,replans,path_length,sound";

/// Serializes records to CSV. Floats print in shortest round-trip form, so
/// parsing gives back the exact values.
pub fn records_to_csv(records: &[BenchRecord]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in records {
        let status = match r.status {
            PlanStatus::Solved => "solved",
            PlanStatus::Timeout => "timeout",
        };
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            r.problem_id,
            r.planner,
            status,
            r.total_s,
            r.search_s,
            r.check_s,
            r.replans,
            r.path_length,
            r.sound
        ));
    }
    out
}

pub fn records_from_csv(text: &str) -> Result<Vec<BenchRecord>> {
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h == CSV_HEADER => {}
        _ => return Err(Error::format("missing or wrong CSV header")),
    }
    let mut out = Vec::new();
    for (lineno, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 9 {
            return Err(Error::format(format!(
                "line {}: expected 9 fields, got {}",
                lineno + 2,
                fields.len()
            )));
        }
        let parse_f = |s: &str| -> Result<f64> {
            s.parse::<f64>()
                .map_err(|_| Error::format(format!("line {}: bad float '{s}'", lineno + 2)))
        };
        out.push(BenchRecord {
            problem_id: fields[0]
                .parse()
                .map_err(|_| Error::format("bad problem id"))?,
            planner: fields[1].to_string(),
            status: match fields[2] {
                "solved" => PlanStatus::Solved,
                "timeout" => PlanStatus::Timeout,
                other => return Err(Error::format(format!("bad status '{other}'"))),
            },
            total_s: parse_f(fields[3])?,
            search_s: parse_f(fields[4])?,
            check_s: parse_f(fields[5])?,
            replans: fields[6]
                .parse()
                .map_err(|_| Error::format("bad replan count"))?,
            path_length: parse_f(fields[7])?,
            sound: match fields[8] {
                "true" => true,
                "false" => false,
                other => return Err(Error::format(format!("bad sound flag '{other}'"))),
            },
        });
    }
    Ok(out)
}

/// Markdown summary table, one row per planner.
pub fn summary_markdown(summaries: &[PlannerSummary]) -> String {
    let mut out = String::new();
    out.push_str("| Planner | Runs | Success rate | Time (mean±std s) | Solved-only (mean±std s) | Search (s) | Check (s) | Replans |\n");
    out.push_str("|---|---|---|---|---|---|---|---|\n");
    for s in summaries {
        let solved_col = if s.solved_mean_time.is_nan() {
            "—".to_string()
        } else {
            format!("{:.3}±{:.3}", s.solved_mean_time, s.solved_std_time)
        };
        out.push_str(&format!(
            "| {} | {} | {:.2} | {:.3}±{:.3} | {} | {:.3} | {:.3} | {:.2} |\n",
            s.planner,
            s.runs,
            s.success_rate,
            s.mean_time,
            s.std_time,
            solved_col,
            s.mean_search,
            s.mean_check,
            s.mean_replans
        ));
    }
    out
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Grouped bar chart of mean path-search versus mean path-check time per
/// planner, in the style of an interval sweep comparison.
pub fn split_chart_svg(summaries: &[PlannerSummary]) -> String {
    let width = 120 + summaries.len().max(1) * 130;
    let height = 320;
    let plot_h = 220.0;
    let base_y = 260.0;
    let max_val = summaries
        .iter()
        .flat_map(|s| [s.mean_search, s.mean_check])
        .fold(1e-9f64, f64::max);
    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width}\" height=\"{height}\" viewBox=\"0 0 {width} {height}\">\n"
    ));
    svg.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
    svg.push_str(&format!(
        "<text x=\"{}\" y=\"24\" font-family=\"sans-serif\" font-size=\"15\" text-anchor=\"middle\">Mean path search vs. check time</text>\n",
        width / 2
    ));
    svg.push_str(&format!(
        "<line x1=\"60\" y1=\"{base_y}\" x2=\"{}\" y2=\"{base_y}\" stroke=\"black\"/>\n",
        width - 30
    ));
    for (i, s) in summaries.iter().enumerate() {
        let x0 = 80.0 + i as f64 * 130.0;
        let search_h = plot_h * s.mean_search / max_val;
        let check_h = plot_h * s.mean_check / max_val;
        svg.push_str(&format!(
            "<rect x=\"{:.1}\" y=\"{:.1}\" width=\"36\" height=\"{:.1}\" fill=\"#4878cf\"/>\n",
            x0,
            base_y - search_h,
            search_h
        ));
        svg.push_str(&format!(
            "<rect x=\"{:.1}\" y=\"{:.1}\" width=\"36\" height=\"{:.1}\" fill=\"#d65f5f\"/>\n",
            x0 + 42.0,
            base_y - check_h,
            check_h
        ));
        svg.push_str(&format!(
            "<text x=\"{:.1}\" y=\"{:.1}\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"middle\">{}</text>\n",
            x0 + 39.0,
            base_y + 18.0,
            xml_escape(&s.planner)
        ));
        svg.push_str(&format!(
            "<text x=\"{:.1}\" y=\"{:.1}\" font-family=\"sans-serif\" font-size=\"10\" text-anchor=\"middle\">{:.2}s</text>\n",
            x0 + 18.0,
            base_y - search_h - 4.0,
            s.mean_search
        ));
        svg.push_str(&format!(
            "<text x=\"{:.1}\" y=\"{:.1}\" font-family=\"sans-serif\" font-size=\"10\" text-anchor=\"middle\">{:.2}s</text>\n",
            x0 + 60.0,
            base_y - check_h - 4.0,
            s.mean_check
        ));
    }
    svg.push_str(&format!(
        "<rect x=\"60\" y=\"{}\" width=\"12\" height=\"12\" fill=\"#4878cf\"/><text x=\"76\" y=\"{}\" font-family=\"sans-serif\" font-size=\"11\">path search</text>\n",
        height - 26,
        height - 16
    ));
    svg.push_str(&format!(
        "<rect x=\"170\" y=\"{}\" width=\"12\" height=\"12\" fill=\"#d65f5f\"/><text x=\"186\" y=\"{}\" font-family=\"sans-serif\" font-size=\"11\">path check</text>\n",
        height - 26,
        height - 16
    ));
    svg.push_str("</svg>\n");
    svg
}

/// Writes `results.csv`, `summary.md` and `fig6_analog.svg` into `out_dir`.
pub fn emit_report(records: &[BenchRecord], out_dir: &Path) -> Result<Vec<std::path::PathBuf>> {
    std::fs::create_dir_all(out_dir)?;
    let summaries = summarize(records)?;
    let csv_path = out_dir.join("results.csv");
    let md_path = out_dir.join("summary.md");
    let svg_path = out_dir.join("fig6_analog.svg");
    std::fs::write(&csv_path, records_to_csv(records))?;
    std::fs::write(&md_path, summary_markdown(&summaries))?;
    std::fs::write(&svg_path, split_chart_svg(&summaries))?;
    Ok(vec![csv_path, md_path, svg_path])
}
