//! Event annotations, static SVG plots, and peak inspection.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{RegionRegistry, TweetCorpus, TweetRecord};
use crate::keywords::KeywordSet;
use crate::normalize::{run_normalizer, NormalizerConfig};
use crate::scoring::count_keyword_hits;
use crate::series::{DailySeries, SignalKind};

/// Region value for events shown on every plot.
pub const ALL_REGIONS: &str = "ALL";

/// A dated event drawn as a dashed line on plots.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EventAnnotation {
    pub date: NaiveDate,
    pub region: String,
    pub label: String,
}

impl EventAnnotation {
    pub fn new(date: NaiveDate, region: impl Into<String>, label: impl Into<String>) -> Result<Self> {
        let label = label.into();
        if label.trim().is_empty() {
            return Err(Error::InvalidArgument("event label must not be empty".into()));
        }
        Ok(EventAnnotation {
            date,
            region: region.into(),
            label,
        })
    }

    pub fn applies_to(&self, region: &str) -> bool {
        self.region == region || self.region == ALL_REGIONS
    }
}

/// Reads `date,region,label` rows.
pub fn load_events(path: impl AsRef<Path>) -> Result<Vec<EventAnnotation>> {
    let path = path.as_ref();
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| Error::parse(path, 0, e.to_string()))?;
    let mut events = Vec::new();
    for (i, row) in rdr.deserialize::<EventAnnotation>().enumerate() {
        let row = row.map_err(|e| Error::parse(path, i + 2, e.to_string()))?;
        events.push(
            EventAnnotation::new(row.date, row.region, row.label)
                .map_err(|e| Error::parse(path, i + 2, e.to_string()))?,
        );
    }
    Ok(events)
}

const WIDTH: f64 = 900.0;
const PANEL_HEIGHT: f64 = 240.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 40.0;
const GAP: f64 = 50.0;
const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

/// SVG text of a plot: one panel per signal kind, one polyline per
/// labelled series, and a dashed vertical line per event in range.
///
/// Output depends only on the arguments, so identical input gives
/// identical bytes.
pub fn plot_svg(series: &[(&str, &DailySeries)], events: &[EventAnnotation]) -> Result<String> {
    let Some((_, first)) = series.first() else {
        return Err(Error::InvalidArgument("nothing to plot".into()));
    };
    let region = first.region.as_str();
    if let Some((_, s)) = series.iter().find(|(_, s)| s.region != region) {
        return Err(Error::MixedRegions(region.to_string(), s.region.clone()));
    }
    let start = series.iter().map(|(_, s)| s.start()).min().expect("non-empty");
    let end = series.iter().map(|(_, s)| s.end()).max().expect("non-empty");
    let span = (end - start).num_days().max(1) as f64;
    let plot_w = WIDTH - LEFT - RIGHT;
    let x_of = |d: NaiveDate| LEFT + plot_w * (d - start).num_days() as f64 / span;

    type Panel<'a> = (SignalKind, Vec<(usize, &'a str, &'a DailySeries)>);
    let mut panels: Vec<Panel> = Vec::new();
    for (i, (label, s)) in series.iter().enumerate() {
        match panels.iter_mut().find(|(k, _)| *k == s.kind) {
            Some((_, members)) => members.push((i, label, s)),
            None => panels.push((s.kind, vec![(i, label, s)])),
        }
    }
    let height = TOP + panels.len() as f64 * (PANEL_HEIGHT + GAP);

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{height}" viewBox="0 0 {WIDTH} {height}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<text x="{LEFT}" y="20" font-size="14">{} {start} to {end}</text>"#,
        escape(region)
    );

    for (p, (kind, members)) in panels.iter().enumerate() {
        let top = TOP + p as f64 * (PANEL_HEIGHT + GAP);
        let bottom = top + PANEL_HEIGHT;
        let values = members.iter().flat_map(|(_, _, s)| s.values().iter().copied());
        let (lo, hi) = values.fold((0.0f64, 0.0f64), |(lo, hi), v| (lo.min(v), hi.max(v)));
        let hi = if hi > lo { hi } else { lo + 1.0 };
        let y_of = |v: f64| bottom - PANEL_HEIGHT * (v - lo) / (hi - lo);

        let _ = writeln!(svg, r#"<g class="panel" data-kind="{kind}">"#);
        let _ = writeln!(
            svg,
            r##"<line class="axis" x1="{LEFT}" y1="{bottom:.2}" x2="{:.2}" y2="{bottom:.2}" stroke="#333"/>"##,
            WIDTH - RIGHT
        );
        let _ = writeln!(
            svg,
            r##"<line class="axis" x1="{LEFT}" y1="{top:.2}" x2="{LEFT}" y2="{bottom:.2}" stroke="#333"/>"##
        );
        for frac in [0.0, 0.5, 1.0] {
            let v = lo + frac * (hi - lo);
            let y = y_of(v);
            let _ = writeln!(
                svg,
                r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#,
                LEFT - 6.0,
                y + 4.0,
                format_tick(v)
            );
        }
        let ticks = 6usize.min(span as usize).max(1);
        for t in 0..=ticks {
            let day = start + chrono::Days::new((span as u64 * t as u64) / ticks as u64);
            let x = x_of(day);
            let _ = writeln!(
                svg,
                r##"<line x1="{x:.2}" y1="{bottom:.2}" x2="{x:.2}" y2="{:.2}" stroke="#333"/>"##,
                bottom + 4.0
            );
            let _ = writeln!(
                svg,
                r#"<text x="{x:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
                bottom + 16.0,
                day.format("%m-%d")
            );
        }
        let _ = writeln!(
            svg,
            r#"<text x="{LEFT}" y="{:.2}">{}</text>"#,
            top - 6.0,
            kind.as_str().replace('_', " ")
        );

        for (i, label, s) in members {
            let points: Vec<String> = s
                .iter()
                .map(|(d, v)| format!("{:.2},{:.2}", x_of(d), y_of(v)))
                .collect();
            let _ = writeln!(
                svg,
                r#"<polyline class="series" data-label="{}" fill="none" stroke="{}" stroke-width="1.5" points="{}"/>"#,
                escape(label),
                COLORS[i % COLORS.len()],
                points.join(" ")
            );
        }

        // legend runs along the header row, right of the panel title
        for (slot, (i, label, _)) in members.iter().enumerate() {
            let legend_x = LEFT + 140.0 + 190.0 * slot as f64;
            let y = top - 10.0;
            let _ = writeln!(
                svg,
                r#"<line class="legend" x1="{legend_x}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="{}" stroke-width="2"/>"#,
                legend_x + 18.0,
                COLORS[i % COLORS.len()]
            );
            let _ = writeln!(
                svg,
                r#"<text x="{:.2}" y="{:.2}">{}</text>"#,
                legend_x + 24.0,
                y + 4.0,
                escape(label)
            );
        }

        if lo < 0.0 {
            let y = y_of(0.0);
            let _ = writeln!(
                svg,
                r##"<line class="zero" x1="{LEFT}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#bbb"/>"##,
                WIDTH - RIGHT
            );
        }
        let shown = events
            .iter()
            .filter(|e| e.applies_to(region) && e.date >= start && e.date <= end);
        for (n, e) in shown.enumerate() {
            let x = x_of(e.date);
            let _ = writeln!(
                svg,
                r##"<line class="event" data-date="{}" x1="{x:.2}" y1="{top:.2}" x2="{x:.2}" y2="{bottom:.2}" stroke="#777" stroke-dasharray="4,3"/>"##,
                e.date
            );
            if p == 0 {
                let _ = writeln!(
                    svg,
                    r##"<text x="{:.2}" y="{:.2}" fill="#555">{}</text>"##,
                    x + 3.0,
                    top + 10.0 + 12.0 * (n % 3) as f64,
                    escape(&e.label)
                );
            }
        }
        let _ = writeln!(svg, "</g>");
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}

fn format_tick(v: f64) -> String {
    if v.abs() >= 100.0 || v.fract() == 0.0 {
        format!("{v:.0}")
    } else {
        format!("{v:.2}")
    }
}

/// Writes [`plot_svg`] output to `out`.
pub fn render_plot(series: &[(&str, &DailySeries)], events: &[EventAnnotation], out: impl AsRef<Path>) -> Result<()> {
    let out = out.as_ref();
    let svg = plot_svg(series, events)?;
    fs::write(out, svg).map_err(|e| Error::io(out, e))
}

/// A tweet and its keyword hit count.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedTweet {
    pub hits: usize,
    pub record: TweetRecord,
}

/// The `k` tweets posted on local `date` with the most keyword hits, most
/// first; equal counts keep timestamp order.
pub fn top_tweets_for_date(
    corpus: &TweetCorpus,
    keywords: &KeywordSet,
    date: NaiveDate,
    k: usize,
    registry: &RegionRegistry,
    normalizer: &NormalizerConfig,
) -> Result<Vec<RankedTweet>> {
    if k < 1 {
        return Err(Error::InvalidArgument("k must be at least 1".into()));
    }
    let mut ranked = Vec::new();
    for r in corpus.records() {
        if registry.local_date(r)? != date {
            continue;
        }
        let tokens = run_normalizer(r, normalizer)?.tokens;
        ranked.push(RankedTweet {
            hits: count_keyword_hits(&tokens, keywords),
            record: r.clone(),
        });
    }
    // stable, and the corpus is already in timestamp order
    ranked.sort_by_key(|r| std::cmp::Reverse(r.hits));
    ranked.truncate(k);
    Ok(ranked)
}

/// Events per date for one region.
pub fn events_by_date<'a>(events: &'a [EventAnnotation], region: &str) -> BTreeMap<NaiveDate, Vec<&'a str>> {
    let mut out: BTreeMap<NaiveDate, Vec<&str>> = BTreeMap::new();
    for e in events.iter().filter(|e| e.applies_to(region)) {
        out.entry(e.date).or_default().push(&e.label);
    }
    out
}
