//! Moving-average, simple exponential and Holt linear smoothing, and the
//! choice among them by Pearson correlation with confirmed cases.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dates::add_days;
use crate::error::{Error, Result};
use crate::series::{CaseSeries, DailySeries, SignalKind};

/// A smoother and its parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model")]
pub enum SmoothingSpec {
    #[serde(rename = "MA")]
    MovingAverage { window: usize },
    #[serde(rename = "SES")]
    Exponential { alpha: f64 },
    #[serde(rename = "Holt")]
    Holt { alpha: f64, beta: f64 },
}

fn unit_interval(name: &str, x: f64) -> Result<()> {
    if x > 0.0 && x <= 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("{name} = {x} outside (0, 1]")))
    }
}

impl SmoothingSpec {
    pub fn validate(&self) -> Result<()> {
        match *self {
            SmoothingSpec::MovingAverage { window } if window < 1 => Err(Error::InvalidArgument(
                "moving-average window must be at least 1".into(),
            )),
            SmoothingSpec::MovingAverage { .. } => Ok(()),
            SmoothingSpec::Exponential { alpha } => unit_interval("alpha", alpha),
            SmoothingSpec::Holt { alpha, beta } => {
                unit_interval("alpha", alpha)?;
                unit_interval("beta", beta)
            }
        }
    }

    pub fn apply(&self, series: &DailySeries) -> Result<DailySeries> {
        match *self {
            SmoothingSpec::MovingAverage { window } => moving_average(series, window),
            SmoothingSpec::Exponential { alpha } => exp_smooth(series, alpha),
            SmoothingSpec::Holt { alpha, beta } => holt_smooth(series, alpha, beta),
        }
    }
}

impl fmt::Display for SmoothingSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SmoothingSpec::MovingAverage { window } => write!(f, "MA({window})"),
            SmoothingSpec::Exponential { alpha } => write!(f, "SES({alpha})"),
            SmoothingSpec::Holt { alpha, beta } => write!(f, "Holt({alpha},{beta})"),
        }
    }
}

impl FromStr for SmoothingSpec {
    type Err = Error;

    /// Parses the `Display` form: `MA(5)`, `SES(0.3)`, `Holt(0.3,0.1)`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidArgument(format!("bad smoothing spec {s:?}"));
        let s = s.trim();
        let open = s.find('(').ok_or_else(bad)?;
        let args = s[open + 1..].strip_suffix(')').ok_or_else(bad)?;
        let nums: Vec<&str> = args.split(',').map(str::trim).collect();
        let spec = match (&s[..open], nums.as_slice()) {
            ("MA", [n]) => SmoothingSpec::MovingAverage {
                window: n.parse().map_err(|_| bad())?,
            },
            ("SES", [a]) => SmoothingSpec::Exponential {
                alpha: a.parse().map_err(|_| bad())?,
            },
            ("Holt", [a, b]) => SmoothingSpec::Holt {
                alpha: a.parse().map_err(|_| bad())?,
                beta: b.parse().map_err(|_| bad())?,
            },
            _ => return Err(bad()),
        };
        spec.validate()?;
        Ok(spec)
    }
}

/// MA(3), MA(4), MA(5), SES(0.3), Holt(0.3, 0.1).
pub fn default_candidates() -> Vec<SmoothingSpec> {
    vec![
        SmoothingSpec::MovingAverage { window: 3 },
        SmoothingSpec::MovingAverage { window: 4 },
        SmoothingSpec::MovingAverage { window: 5 },
        SmoothingSpec::Exponential { alpha: 0.3 },
        SmoothingSpec::Holt { alpha: 0.3, beta: 0.1 },
    ]
}

/// MA windows 3–7 plus SES and Holt over {0.1, 0.3, 0.5, 0.7, 0.9}.
pub fn extended_candidates() -> Vec<SmoothingSpec> {
    const GRID: [f64; 5] = [0.1, 0.3, 0.5, 0.7, 0.9];
    let mut out: Vec<SmoothingSpec> = (3..=7).map(|window| SmoothingSpec::MovingAverage { window }).collect();
    out.extend(GRID.iter().map(|&alpha| SmoothingSpec::Exponential { alpha }));
    for &alpha in &GRID {
        out.extend(GRID.iter().map(|&beta| SmoothingSpec::Holt { alpha, beta }));
    }
    out
}

/// Trailing mean over `window` days; the first days average what exists.
pub fn moving_average_values(values: &[f64], window: usize) -> Vec<f64> {
    (0..values.len())
        .map(|t| {
            let lo = (t + 1).saturating_sub(window);
            values[lo..=t].iter().sum::<f64>() / (t + 1 - lo) as f64
        })
        .collect()
}

/// `s_0 = y_0`, `s_t = α·y_t + (1−α)·s_{t−1}`.
pub fn exp_smooth_values(values: &[f64], alpha: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(values.len());
    let mut level = match values.first() {
        Some(&y) => y,
        None => return out,
    };
    out.push(level);
    for &y in &values[1..] {
        level = alpha * y + (1.0 - alpha) * level;
        out.push(level);
    }
    out
}

/// Holt's linear method, returning the level at each step. Starts from
/// `l_0 = y_0`, `b_0 = y_1 − y_0`.
pub fn holt_values(values: &[f64], alpha: f64, beta: f64) -> Vec<f64> {
    if values.len() < 2 {
        return values.to_vec();
    }
    let mut level = values[0];
    let mut trend = values[1] - values[0];
    let mut out = Vec::with_capacity(values.len());
    out.push(level);
    for &y in &values[1..] {
        let prev = level;
        level = alpha * y + (1.0 - alpha) * (prev + trend);
        trend = beta * (level - prev) + (1.0 - beta) * trend;
        out.push(level);
    }
    out
}

pub fn moving_average(series: &DailySeries, window: usize) -> Result<DailySeries> {
    SmoothingSpec::MovingAverage { window }.validate()?;
    series.with_values(moving_average_values(series.values(), window))
}

pub fn exp_smooth(series: &DailySeries, alpha: f64) -> Result<DailySeries> {
    SmoothingSpec::Exponential { alpha }.validate()?;
    series.with_values(exp_smooth_values(series.values(), alpha))
}

pub fn holt_smooth(series: &DailySeries, alpha: f64, beta: f64) -> Result<DailySeries> {
    SmoothingSpec::Holt { alpha, beta }.validate()?;
    if series.len() < 2 {
        return Err(Error::SeriesTooShort("Holt smoothing needs at least 2 days".into()));
    }
    series.with_values(holt_values(series.values(), alpha, beta))
}

/// Sample Pearson correlation of two equal-length slices.
pub fn pearson_values(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::SeriesMismatch(format!("{} vs {} values", x.len(), y.len())));
    }
    if x.len() < 3 {
        return Err(Error::UndefinedCorrelation(format!(
            "{} overlapping days, need 3",
            x.len()
        )));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::UndefinedCorrelation(
            "a series is constant on the overlap".into(),
        ));
    }
    Ok((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

// Signal values paired with cases `lag` days later.
fn aligned(series: &DailySeries, cases: &CaseSeries, lag: i64) -> (Vec<f64>, Vec<f64>) {
    series
        .iter()
        .filter_map(|(date, v)| cases.get(add_days(date, lag)).map(|c| (v, c as f64)))
        .unzip()
}

/// Pearson r between a signal and cases on the same dates (or cases `lag`
/// days later).
pub fn pearson(series: &DailySeries, cases: &CaseSeries, lag: i64) -> Result<f64> {
    let (x, y) = aligned(series, cases, lag);
    pearson_values(&x, &y)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateScore {
    pub spec: SmoothingSpec,
    pub label: String,
    pub pearson: Option<f64>,
    pub error: Option<String>,
}

/// Outcome of comparing smoothers against case counts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionReport {
    pub region: String,
    pub kind: SignalKind,
    pub lag: i64,
    pub overlap_days: usize,
    pub candidates: Vec<CandidateScore>,
    pub winner: SmoothingSpec,
    pub winner_label: String,
    pub winner_pearson: f64,
}

/// Smooths with every candidate and keeps the one with the highest Pearson
/// r against cases; earlier candidates win ties.
pub fn select_model(
    series: &DailySeries,
    cases: &CaseSeries,
    candidates: &[SmoothingSpec],
    lag: i64,
) -> Result<SelectionReport> {
    if candidates.is_empty() {
        return Err(Error::InvalidArgument("no smoothing candidates".into()));
    }
    let overlap_days = aligned(series, cases, lag).0.len();
    if overlap_days < 3 {
        return Err(Error::UndefinedCorrelation(format!(
            "{overlap_days} overlapping days with cases, need 3"
        )));
    }
    let mut scores = Vec::with_capacity(candidates.len());
    let mut best: Option<(SmoothingSpec, f64)> = None;
    for spec in candidates {
        let r = spec
            .validate()
            .and_then(|_| spec.apply(series))
            .and_then(|s| pearson(&s, cases, lag));
        let (pearson, error) = match r {
            Ok(r) => {
                if best.is_none_or(|(_, b)| r > b) {
                    best = Some((*spec, r));
                }
                (Some(r), None)
            }
            Err(e) => (None, Some(e.to_string())),
        };
        scores.push(CandidateScore {
            spec: *spec,
            label: spec.to_string(),
            pearson,
            error,
        });
    }
    let (winner, winner_pearson) = best.ok_or(Error::NoViableCandidate)?;
    Ok(SelectionReport {
        region: series.region.clone(),
        kind: series.kind,
        lag,
        overlap_days,
        candidates: scores,
        winner,
        winner_label: winner.to_string(),
        winner_pearson,
    })
}
