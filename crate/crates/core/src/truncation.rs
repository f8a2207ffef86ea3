//! Detection and correction of the historical-scrape level shift.
//!
//! A scrape returns every tweet of the most recent seven days but only a
//! fraction of older ones, so the series jumps up at `scrape_date - 6`, the
//! first full-volume day. The correction multiplies every earlier day by
//! the ratio of the window means on either side of that boundary.
//!
//! Flat noise also produces ratios above one, so a boundary only counts as
//! truncated when the ratio reaches `min_ratio` *and* the Welch t statistic
//! of the two windows reaches `min_t`. Both quantities are unchanged when
//! the whole series is multiplied by a positive constant.

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::dates::add_days;
use crate::error::{Error, Result};
use crate::series::{DailySeries, SignalKind};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TruncationParams {
    /// Days averaged on each side of the boundary.
    pub window: usize,
    pub min_ratio: f64,
    pub min_t: f64,
}

impl Default for TruncationParams {
    fn default() -> Self {
        TruncationParams {
            window: 7,
            min_ratio: 1.05,
            min_t: 3.5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryStatus {
    Truncated,
    NoTruncation,
    /// The pre-boundary window is all zero; no ratio exists.
    Degenerate,
}

/// What was measured at the boundary, written out for audit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryReport {
    pub region: String,
    pub kind: SignalKind,
    /// First full-volume day.
    pub boundary_date: NaiveDate,
    /// True when placed by scrape-date arithmetic rather than a scan.
    pub anchored: bool,
    pub window: usize,
    pub pre_mean: f64,
    pub post_mean: f64,
    /// post_mean / pre_mean.
    pub confidence: Option<f64>,
    /// Welch t of post vs pre window; `None` when both windows are constant.
    pub t_statistic: Option<f64>,
    /// Factor applied to pre-boundary days when truncated.
    pub scale_factor: Option<f64>,
    pub status: BoundaryStatus,
}

fn mean_var(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = if values.len() > 1 {
        values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    (mean, var)
}

fn report_at(series: &DailySeries, boundary: usize, params: &TruncationParams, anchored: bool) -> BoundaryReport {
    let k = params.window;
    let (pre_mean, pre_var) = mean_var(&series.values()[boundary - k..boundary]);
    let (post_mean, post_var) = mean_var(&series.values()[boundary..boundary + k]);
    let se = (pre_var / k as f64 + post_var / k as f64).sqrt();
    let diff = post_mean - pre_mean;
    let t_statistic = (se > 0.0).then(|| diff / se);
    let confidence = (pre_mean > 0.0).then(|| post_mean / pre_mean);
    let status = match confidence {
        None => BoundaryStatus::Degenerate,
        Some(c) if c >= params.min_ratio && t_statistic.is_none_or(|t| t >= params.min_t) => BoundaryStatus::Truncated,
        Some(_) => BoundaryStatus::NoTruncation,
    };
    BoundaryReport {
        region: series.region.clone(),
        kind: series.kind,
        boundary_date: series.date_at(boundary),
        anchored,
        window: k,
        pre_mean,
        post_mean,
        confidence,
        t_statistic,
        scale_factor: confidence,
        status,
    }
}

fn check_params(params: &TruncationParams) -> Result<()> {
    if params.window < 1 {
        return Err(Error::InvalidArgument(
            "truncation window must be at least 1 day".into(),
        ));
    }
    Ok(())
}

/// Places the boundary at `scrape_date - 6` and measures the jump there.
pub fn detect_boundary(series: &DailySeries, params: &TruncationParams) -> Result<BoundaryReport> {
    check_params(params)?;
    let scrape = series
        .scrape_date
        .ok_or_else(|| Error::InvalidArgument("series has no scrape date; use detect_boundary_scan".into()))?;
    if series.len() < 9 {
        return Err(Error::SeriesTooShort(format!("{} days, need at least 9", series.len())));
    }
    if series.index_of(scrape).is_none() {
        return Err(Error::SeriesTooShort(format!(
            "scrape date {scrape} outside {}..={}",
            series.start(),
            series.end()
        )));
    }
    let boundary_date = add_days(scrape, -6);
    let k = params.window;
    let boundary = series
        .index_of(boundary_date)
        .filter(|&b| b >= k && b + k <= series.len());
    let boundary =
        boundary.ok_or_else(|| Error::SeriesTooShort(format!("need {k} days on each side of {boundary_date}")))?;
    Ok(report_at(series, boundary, params, true))
}

/// Fallback for dumps with unknown scrape date: the boundary is where the
/// ratio of adjacent window means peaks (earliest on ties).
pub fn detect_boundary_scan(series: &DailySeries, params: &TruncationParams) -> Result<BoundaryReport> {
    check_params(params)?;
    let k = params.window;
    if series.len() < 2 * k {
        return Err(Error::SeriesTooShort(format!("{} days, need {}", series.len(), 2 * k)));
    }
    let v = series.values();
    let mut best: Option<(usize, f64)> = None;
    for b in k..=series.len() - k {
        let pre: f64 = v[b - k..b].iter().sum();
        let post: f64 = v[b..b + k].iter().sum();
        if pre > 0.0 {
            let ratio = post / pre;
            if best.is_none_or(|(_, r)| ratio > r) {
                best = Some((b, ratio));
            }
        }
    }
    let boundary = best.map_or(k, |(b, _)| b);
    Ok(report_at(series, boundary, params, false))
}

/// Rescales days before the boundary when the report says truncated;
/// otherwise returns the series unchanged.
pub fn adjust(series: &DailySeries, report: &BoundaryReport) -> Result<DailySeries> {
    if series.region != report.region || series.kind != report.kind {
        return Err(Error::SeriesMismatch(format!(
            "report for {}/{} applied to {}/{}",
            report.region, report.kind, series.region, series.kind
        )));
    }
    let scale = match (report.status, report.scale_factor) {
        (BoundaryStatus::Truncated, Some(s)) => s,
        _ => return Ok(series.clone()),
    };
    let values = series
        .iter()
        .map(|(date, v)| if date < report.boundary_date { v * scale } else { v })
        .collect();
    series.with_values(values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Poisson};

    fn d(s: &str) -> NaiveDate {
        s.parse().unwrap()
    }

    // 30 days ending on the scrape date; the last seven are full volume.
    fn step_series(pre: f64, post: f64) -> DailySeries {
        let values = (0..30).map(|i| if i < 23 { pre } else { post }).collect();
        DailySeries::new("DL", SignalKind::KeywordCount, d("2020-04-01"), values)
            .unwrap()
            .with_scrape_date(Some(d("2020-04-30")))
    }

    #[test]
    fn step_40_to_100() {
        let s = step_series(40.0, 100.0);
        let r = detect_boundary(&s, &TruncationParams::default()).unwrap();
        assert_eq!(r.boundary_date, d("2020-04-24"));
        assert_eq!(r.status, BoundaryStatus::Truncated);
        assert!((r.scale_factor.unwrap() - 2.5).abs() < 1e-12);
        let adjusted = adjust(&s, &r).unwrap();
        assert!(adjusted.values().iter().all(|&v| (v - 100.0).abs() < 1e-9));
        let three = TruncationParams {
            window: 3,
            ..Default::default()
        };
        assert!((detect_boundary(&s, &three).unwrap().scale_factor.unwrap() - 2.5).abs() < 1e-12);
    }

    #[test]
    fn flat_series_not_truncated() {
        let s = step_series(50.0, 50.0);
        let r = detect_boundary(&s, &TruncationParams::default()).unwrap();
        assert_eq!(r.confidence, Some(1.0));
        assert_eq!(r.status, BoundaryStatus::NoTruncation);
        assert_eq!(adjust(&s, &r).unwrap(), s);
    }

    #[test]
    fn zero_history_is_degenerate() {
        let s = step_series(0.0, 12.0);
        let r = detect_boundary(&s, &TruncationParams::default()).unwrap();
        assert_eq!(r.status, BoundaryStatus::Degenerate);
        assert_eq!(r.scale_factor, None);
        let a = adjust(&s, &r).unwrap();
        assert_eq!(a, s);
    }

    #[test]
    fn short_or_unanchored_series_rejected() {
        let s = DailySeries::new("DL", SignalKind::Volume, d("2020-04-01"), vec![1.0; 5])
            .unwrap()
            .with_scrape_date(Some(d("2020-04-05")));
        assert!(matches!(
            detect_boundary(&s, &TruncationParams::default()),
            Err(Error::SeriesTooShort(_))
        ));
        let no_scrape = step_series(1.0, 2.0).with_scrape_date(None);
        assert!(detect_boundary(&no_scrape, &TruncationParams::default()).is_err());
        let outside = step_series(1.0, 2.0).with_scrape_date(Some(d("2020-06-01")));
        assert!(detect_boundary(&outside, &TruncationParams::default()).is_err());
    }

    #[test]
    fn mismatched_report_rejected() {
        let s = step_series(40.0, 100.0);
        let r = detect_boundary(&s, &TruncationParams::default()).unwrap();
        let other = DailySeries::new("MH", SignalKind::KeywordCount, s.start(), s.values().to_vec()).unwrap();
        assert!(matches!(adjust(&other, &r), Err(Error::SeriesMismatch(_))));
    }

    #[test]
    fn scan_finds_the_step() {
        let s = step_series(40.0, 100.0).with_scrape_date(None);
        let r = detect_boundary_scan(&s, &TruncationParams::default()).unwrap();
        assert_eq!(r.boundary_date, d("2020-04-24"));
        assert!(!r.anchored);
        assert_eq!(r.status, BoundaryStatus::Truncated);
    }

    #[test]
    fn scaling_input_scales_output() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let pois = Poisson::new(100.0).unwrap();
        let values: Vec<f64> = (0..30)
            .map(|i| pois.sample(&mut rng) * if i < 23 { 0.4 } else { 1.0 })
            .collect();
        let s = DailySeries::new("DL", SignalKind::Volume, d("2020-04-01"), values.clone())
            .unwrap()
            .with_scrape_date(Some(d("2020-04-30")));
        let p = TruncationParams::default();
        let r = detect_boundary(&s, &p).unwrap();
        let a = adjust(&s, &r).unwrap();
        for c in [0.01, 3.0, 250.0] {
            let sc = s.with_values(values.iter().map(|v| v * c).collect()).unwrap();
            let rc = detect_boundary(&sc, &p).unwrap();
            assert_eq!(rc.status, r.status);
            assert!((rc.scale_factor.unwrap() - r.scale_factor.unwrap()).abs() < 1e-12);
            let ac = adjust(&sc, &rc).unwrap();
            for (x, y) in ac.values().iter().zip(a.values()) {
                assert!((x - c * y).abs() <= 1e-9 * (c * y).abs().max(1.0));
            }
        }
    }

    #[test]
    fn adjusted_series_redetects_flat() {
        let s = step_series(40.0, 100.0);
        let p = TruncationParams::default();
        let a = adjust(&s, &detect_boundary(&s, &p).unwrap()).unwrap();
        let again = detect_boundary(&a, &p).unwrap();
        assert_eq!(again.status, BoundaryStatus::NoTruncation);
        let c = again.confidence.unwrap();
        assert!((0.9..=1.1).contains(&c));
    }
}
