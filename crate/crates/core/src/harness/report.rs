//! Metrics reports and their on-disk forms: CSV tables, a JSON summary and
//! two SVG bar charts. Emission is byte-deterministic.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::abtest::{AgentMetrics, PairedDifference};
use super::experiment::ExperimentSpec;
use super::ranking::SchemeRanking;
use super::run::{config_hash, HarnessError};

pub const REPORT_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunMetadata {
    pub master_seed: u64,
    pub train_seed: u64,
    pub eval_seed: u64,
    pub config_hash: String,
    pub n_train_users: usize,
    pub n_eval_users: usize,
    pub common_random_numbers: bool,
    /// Per-click baseline used by baseline-subtracted attribution.
    pub attribution_baseline: f64,
}

impl RunMetadata {
    pub fn new(spec: &ExperimentSpec, attribution_baseline: f64) -> Self {
        Self {
            master_seed: spec.env.master_seed,
            train_seed: spec.train_seed(),
            eval_seed: spec.eval_seed(),
            config_hash: config_hash(spec),
            n_train_users: spec.n_train_users,
            n_eval_users: spec.n_eval_users,
            common_random_numbers: spec.common_random_numbers,
            attribution_baseline,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricsReport {
    pub schema_version: u32,
    pub metadata: RunMetadata,
    pub agents: Vec<AgentMetrics>,
    /// Paired sales differences between agents (later minus earlier).
    pub paired: Vec<PairedDifference>,
    #[serde(default)]
    pub rankings: Vec<SchemeRanking>,
}

impl MetricsReport {
    pub fn agent(&self, label: &str) -> Option<&AgentMetrics> {
        self.agents.iter().find(|a| a.agent == label)
    }

    /// Difference `treatment - control`, whichever direction it was stored in.
    pub fn difference(&self, treatment: &str, control: &str) -> Option<PairedDifference> {
        self.paired.iter().find_map(|d| {
            if d.treatment == treatment && d.control == control {
                Some(d.clone())
            } else if d.treatment == control && d.control == treatment {
                Some(PairedDifference {
                    treatment: treatment.to_string(),
                    control: control.to_string(),
                    mean: -d.mean,
                    ci: super::stats::Interval { lo: -d.ci.hi, hi: -d.ci.lo },
                    paired: d.paired,
                })
            } else {
                None
            }
        })
    }
}

fn write_file(path: &Path, contents: &[u8]) -> Result<PathBuf, HarnessError> {
    std::fs::write(path, contents).map_err(|e| HarnessError::io(path, e))?;
    Ok(path.to_path_buf())
}

fn csv_bytes(header: &[&str], rows: Vec<Vec<String>>) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for row in rows {
        w.write_record(&row).expect("in-memory write");
    }
    w.into_inner().expect("in-memory flush")
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn agents_csv(report: &MetricsReport) -> Vec<u8> {
    csv_bytes(
        &[
            "agent",
            "users",
            "clicks_per_user",
            "ctr",
            "sales_per_user",
            "attributed_sales_per_user",
            "sales_ci_lo",
            "sales_ci_hi",
        ],
        report
            .agents
            .iter()
            .map(|m| {
                vec![
                    m.agent.clone(),
                    m.users.to_string(),
                    m.clicks_per_user.to_string(),
                    m.ctr.to_string(),
                    m.sales_per_user.to_string(),
                    m.attributed_sales_per_user.to_string(),
                    m.sales_ci.lo.to_string(),
                    m.sales_ci.hi.to_string(),
                ]
            })
            .collect(),
    )
}

pub fn paired_csv(report: &MetricsReport) -> Vec<u8> {
    csv_bytes(
        &["treatment", "control", "mean_difference", "ci_lo", "ci_hi", "paired"],
        report
            .paired
            .iter()
            .map(|d| {
                vec![
                    d.treatment.clone(),
                    d.control.clone(),
                    d.mean.to_string(),
                    d.ci.lo.to_string(),
                    d.ci.hi.to_string(),
                    d.paired.to_string(),
                ]
            })
            .collect(),
    )
}

pub fn rankings_csv(report: &MetricsReport) -> Vec<u8> {
    csv_bytes(
        &["scheme", "mean_tau", "contexts_used", "contexts_flagged"],
        report
            .rankings
            .iter()
            .map(|r| {
                vec![
                    r.scheme.name().to_string(),
                    opt(r.mean_tau),
                    r.contexts_used.to_string(),
                    r.contexts_flagged.to_string(),
                ]
            })
            .collect(),
    )
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

struct Bar {
    label: String,
    value: f64,
    whisker: Option<(f64, f64)>,
}

/// A vertical bar chart with a zero line, optional whiskers and labels
/// under each bar.
fn bar_chart(title: &str, y_label: &str, bars: &[Bar]) -> String {
    let (width, height) = (120.0 * bars.len().max(1) as f64 + 100.0, 360.0);
    let (left, top, plot_h) = (70.0, 40.0, 240.0);
    let values = bars.iter().flat_map(|b| {
        let (lo, hi) = b.whisker.unwrap_or((b.value, b.value));
        [b.value, lo, hi]
    });
    let (mut lo, mut hi) = values.fold((0.0f64, 0.0f64), |(lo, hi), v| (lo.min(v), hi.max(v)));
    if hi - lo <= 0.0 {
        hi = lo + 1.0;
    }
    let pad = 0.05 * (hi - lo);
    hi += pad;
    if lo < 0.0 {
        lo -= pad;
    }
    let y = |v: f64| top + plot_h * (hi - v) / (hi - lo);

    let mut svg = String::new();
    writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0}" height="{height:.0}" viewBox="0 0 {width:.0} {height:.0}" font-family="sans-serif" font-size="12">"#
    )
    .unwrap();
    writeln!(svg, r#"<rect width="{width:.0}" height="{height:.0}" fill="white"/>"#).unwrap();
    writeln!(svg, r#"<text x="{:.1}" y="22" text-anchor="middle" font-size="15">{}</text>"#, width / 2.0, escape(title)).unwrap();
    writeln!(
        svg,
        r#"<text x="16" y="{:.1}" text-anchor="middle" transform="rotate(-90 16 {:.1})">{}</text>"#,
        top + plot_h / 2.0,
        top + plot_h / 2.0,
        escape(y_label)
    )
    .unwrap();
    for tick in [lo, 0.0, hi] {
        writeln!(
            svg,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{tick:.3}</text>"#,
            left - 6.0,
            y(tick) + 4.0
        )
        .unwrap();
    }
    writeln!(
        svg,
        r##"<line x1="{left:.1}" y1="{:.1}" x2="{:.1}" y2="{:.1}" stroke="#333"/>"##,
        y(0.0),
        width - 20.0,
        y(0.0)
    )
    .unwrap();
    for (i, bar) in bars.iter().enumerate() {
        let x = left + 20.0 + 120.0 * i as f64;
        let (y0, y1) = (y(0.0).min(y(bar.value)), y(0.0).max(y(bar.value)));
        writeln!(
            svg,
            r##"<rect x="{x:.1}" y="{y0:.1}" width="80.0" height="{:.1}" fill="#4c78a8"><title>{}: {}</title></rect>"##,
            y1 - y0,
            escape(&bar.label),
            bar.value
        )
        .unwrap();
        if let Some((wlo, whi)) = bar.whisker {
            let cx = x + 40.0;
            writeln!(
                svg,
                r##"<path d="M{cx:.1} {:.1}V{:.1}M{:.1} {:.1}H{:.1}M{:.1} {:.1}H{:.1}" stroke="#222" fill="none"/>"##,
                y(wlo),
                y(whi),
                cx - 10.0,
                y(wlo),
                cx + 10.0,
                cx - 10.0,
                y(whi),
                cx + 10.0
            )
            .unwrap();
        }
        writeln!(
            svg,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle" font-size="10">{}</text>"#,
            x + 40.0,
            top + plot_h + 20.0 + 12.0 * (i % 2) as f64,
            escape(&bar.label)
        )
        .unwrap();
    }
    svg.push_str("</svg>\n");
    svg
}

pub fn sales_svg(report: &MetricsReport) -> String {
    let bars: Vec<Bar> = report
        .agents
        .iter()
        .map(|m| Bar {
            label: m.agent.clone(),
            value: m.sales_per_user,
            whisker: Some((m.sales_ci.lo, m.sales_ci.hi)),
        })
        .collect();
    bar_chart("Sales per user (95% bootstrap CI)", "sales / user", &bars)
}

pub fn ranking_svg(report: &MetricsReport) -> String {
    let bars: Vec<Bar> = report
        .rankings
        .iter()
        .map(|r| Bar {
            label: r.scheme.name().to_string(),
            value: r.mean_tau.unwrap_or(0.0),
            whisker: None,
        })
        .collect();
    bar_chart("Ranking quality vs incremental oracle", "mean Kendall tau", &bars)
}

/// Writes `agents.csv`, `paired.csv`, `rankings.csv`, `summary.json`,
/// `sales.svg` and `ranking.svg` into `dir`, creating it if needed.
pub fn emit_report(report: &MetricsReport, dir: &Path) -> Result<Vec<PathBuf>, HarnessError> {
    std::fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;
    let mut json = serde_json::to_string_pretty(report).expect("reports always serialize");
    json.push('\n');
    Ok(vec![
        write_file(&dir.join("agents.csv"), &agents_csv(report))?,
        write_file(&dir.join("paired.csv"), &paired_csv(report))?,
        write_file(&dir.join("rankings.csv"), &rankings_csv(report))?,
        write_file(&dir.join("summary.json"), json.as_bytes())?,
        write_file(&dir.join("sales.svg"), sales_svg(report).as_bytes())?,
        write_file(&dir.join("ranking.svg"), ranking_svg(report).as_bytes())?,
    ])
}

pub fn read_report(path: &Path) -> Result<MetricsReport, HarnessError> {
    let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| HarnessError::Format {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}
