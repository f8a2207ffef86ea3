//! Daily time series and their CSV forms.
//!
//! Signals are written as `region,kind,date,value`; confirmed cases are read
//! from `region,date,new_cases`. Dates are ISO-8601 and every series covers a
//! contiguous run of days.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::dates::{add_days, DateRange};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SignalKind {
    /// Daily occurrences of shortlisted keywords.
    KeywordCount,
    /// Daily number of tokens in filtered tweets.
    Volume,
}

impl SignalKind {
    pub const ALL: [SignalKind; 2] = [SignalKind::KeywordCount, SignalKind::Volume];

    pub fn as_str(self) -> &'static str {
        match self {
            SignalKind::KeywordCount => "keyword_count",
            SignalKind::Volume => "volume",
        }
    }
}

impl fmt::Display for SignalKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SignalKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "keyword_count" => Ok(SignalKind::KeywordCount),
            "volume" => Ok(SignalKind::Volume),
            _ => Err(Error::InvalidArgument(format!("unknown signal kind {s:?}"))),
        }
    }
}

/// One value per local date over a contiguous date range.
///
/// Raw signals are non-negative counts; smoothed output (Holt in
/// particular) may leave that range, so only finiteness is enforced.
#[derive(Debug, Clone, PartialEq)]
pub struct DailySeries {
    pub region: String,
    pub kind: SignalKind,
    start: NaiveDate,
    values: Vec<f64>,
    pub scrape_date: Option<NaiveDate>,
}

impl DailySeries {
    pub fn new(region: impl Into<String>, kind: SignalKind, start: NaiveDate, values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::SeriesTooShort("a series needs at least one day".into()));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(format!("non-finite series value {v}")));
        }
        Ok(DailySeries {
            region: region.into(),
            kind,
            start,
            values,
            scrape_date: None,
        })
    }

    pub fn zeros(region: impl Into<String>, kind: SignalKind, range: DateRange) -> Self {
        DailySeries::new(region, kind, range.start(), vec![0.0; range.num_days()]).expect("non-empty range")
    }

    pub fn with_scrape_date(mut self, date: Option<NaiveDate>) -> Self {
        self.scrape_date = date;
        self
    }

    pub fn start(&self) -> NaiveDate {
        self.start
    }

    pub fn end(&self) -> NaiveDate {
        add_days(self.start, self.values.len() as i64 - 1)
    }

    pub fn range(&self) -> DateRange {
        DateRange::new(self.start, self.end()).expect("start <= end")
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn index_of(&self, date: NaiveDate) -> Option<usize> {
        let offset = (date - self.start).num_days();
        (0..self.values.len() as i64)
            .contains(&offset)
            .then_some(offset as usize)
    }

    pub fn get(&self, date: NaiveDate) -> Option<f64> {
        self.index_of(date).map(|i| self.values[i])
    }

    pub fn date_at(&self, index: usize) -> NaiveDate {
        add_days(self.start, index as i64)
    }

    pub fn iter(&self) -> impl Iterator<Item = (NaiveDate, f64)> + '_ {
        self.values.iter().enumerate().map(|(i, &v)| (self.date_at(i), v))
    }

    /// Same region, kind, dates and scrape date with new values.
    pub fn with_values(&self, values: Vec<f64>) -> Result<Self> {
        if values.len() != self.values.len() {
            return Err(Error::SeriesMismatch(format!(
                "expected {} values, got {}",
                self.values.len(),
                values.len()
            )));
        }
        Ok(DailySeries::new(self.region.clone(), self.kind, self.start, values)?.with_scrape_date(self.scrape_date))
    }

    pub(crate) fn add_at(&mut self, date: NaiveDate, amount: f64) -> Result<()> {
        let i = self.index_of(date).ok_or(Error::DateOutOfRange {
            date,
            start: self.start,
            end: self.end(),
        })?;
        self.values[i] += amount;
        Ok(())
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct SeriesRow {
    region: String,
    kind: SignalKind,
    date: NaiveDate,
    value: f64,
}

/// Writes series as `region,kind,date,value` rows, in the order given.
pub fn write_series_csv<W: Write>(writer: W, series: &[DailySeries]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let csv_err = |e: csv::Error| Error::InvalidArgument(format!("csv write: {e}"));
    w.write_record(["region", "kind", "date", "value"]).map_err(csv_err)?;
    for s in series {
        for (date, value) in s.iter() {
            w.write_record([
                s.region.as_str(),
                s.kind.as_str(),
                &date.to_string(),
                &value.to_string(),
            ])
            .map_err(csv_err)?;
        }
    }
    w.flush().map_err(|e| Error::InvalidArgument(format!("csv write: {e}")))
}

pub fn save_series_csv(path: impl AsRef<Path>, series: &[DailySeries]) -> Result<()> {
    let path = path.as_ref();
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    write_series_csv(file, series)
}

/// Reads `region,kind,date,value` rows back into series, one per
/// (region, kind), in order of first appearance. Dates must be contiguous
/// and ascending within each series.
pub fn read_series_csv<R: Read>(reader: R, origin: &Path) -> Result<Vec<DailySeries>> {
    let mut rdr = csv::Reader::from_reader(reader);
    let mut order: Vec<(String, SignalKind)> = Vec::new();
    let mut rows: BTreeMap<(String, SignalKind), (NaiveDate, Vec<f64>)> = BTreeMap::new();
    for (i, row) in rdr.deserialize::<SeriesRow>().enumerate() {
        let line = i + 2;
        let row = row.map_err(|e| Error::parse(origin, line, e.to_string()))?;
        let key = (row.region.clone(), row.kind);
        match rows.get_mut(&key) {
            None => {
                order.push(key.clone());
                rows.insert(key, (row.date, vec![row.value]));
            }
            Some((start, values)) => {
                if add_days(*start, values.len() as i64) != row.date {
                    return Err(Error::parse(origin, line, format!("non-contiguous date {}", row.date)));
                }
                values.push(row.value);
            }
        }
    }
    order
        .into_iter()
        .map(|key| {
            let (start, values) = rows.remove(&key).expect("recorded key");
            DailySeries::new(key.0, key.1, start, values)
        })
        .collect()
}

pub fn load_series_csv(path: impl AsRef<Path>) -> Result<Vec<DailySeries>> {
    let path = path.as_ref();
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_series_csv(file, path)
}

/// Daily confirmed cases for one region.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CaseSeries {
    pub region: String,
    start: NaiveDate,
    values: Vec<u64>,
}

impl CaseSeries {
    pub fn new(region: impl Into<String>, start: NaiveDate, values: Vec<u64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::SeriesTooShort("case series is empty".into()));
        }
        Ok(CaseSeries {
            region: region.into(),
            start,
            values,
        })
    }

    pub fn start(&self) -> NaiveDate {
        self.start
    }

    pub fn values(&self) -> &[u64] {
        &self.values
    }

    pub fn get(&self, date: NaiveDate) -> Option<u64> {
        let offset = (date - self.start).num_days();
        (0..self.values.len() as i64)
            .contains(&offset)
            .then(|| self.values[offset as usize])
    }
}

#[derive(Deserialize)]
struct CaseRow {
    region: String,
    date: NaiveDate,
    new_cases: u64,
}

/// Reads `region,date,new_cases` rows. Rows may be in any order but each
/// region's dates must form a gap-free run without repeats.
pub fn read_cases_csv<R: Read>(reader: R, origin: &Path) -> Result<BTreeMap<String, CaseSeries>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let mut by_region: BTreeMap<String, BTreeMap<NaiveDate, u64>> = BTreeMap::new();
    for (i, row) in rdr.deserialize::<CaseRow>().enumerate() {
        let row = row.map_err(|e| Error::parse(origin, i + 2, e.to_string()))?;
        if by_region
            .entry(row.region.clone())
            .or_default()
            .insert(row.date, row.new_cases)
            .is_some()
        {
            return Err(Error::parse(
                origin,
                i + 2,
                format!("repeated date {} for region {}", row.date, row.region),
            ));
        }
    }
    let mut out = BTreeMap::new();
    for (region, days) in by_region {
        let start = *days.keys().next().expect("non-empty");
        for (i, date) in days.keys().enumerate() {
            if add_days(start, i as i64) != *date {
                return Err(Error::parse(
                    origin,
                    0,
                    format!("gap before {date} in cases for {region}"),
                ));
            }
        }
        let series = CaseSeries::new(region.clone(), start, days.into_values().collect())?;
        out.insert(region, series);
    }
    Ok(out)
}

pub fn load_cases_csv(path: impl AsRef<Path>) -> Result<BTreeMap<String, CaseSeries>> {
    let path = path.as_ref();
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_cases_csv(file, path)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn d(s: &str) -> NaiveDate {
        s.parse().unwrap()
    }

    #[test]
    fn csv_round_trip() {
        let a = DailySeries::new("DL", SignalKind::KeywordCount, d("2020-03-30"), vec![1.0, 0.5, 3.0]).unwrap();
        let b = DailySeries::new("DL", SignalKind::Volume, d("2020-03-30"), vec![10.0, 2.25, 0.1]).unwrap();
        let mut buf = Vec::new();
        write_series_csv(&mut buf, &[a.clone(), b.clone()]).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("region,kind,date,value\nDL,keyword_count,2020-03-30,1\n"));
        let back = read_series_csv(&buf[..], Path::new("mem")).unwrap();
        assert_eq!(back, vec![a, b]);
    }

    #[test]
    fn gaps_are_rejected() {
        let text = "region,kind,date,value\nDL,volume,2020-03-01,1\nDL,volume,2020-03-03,1\n";
        assert!(read_series_csv(text.as_bytes(), Path::new("mem")).is_err());
        let cases = "region,date,new_cases\nDL,2020-03-01,1\nDL,2020-03-03,1\n";
        assert!(read_cases_csv(cases.as_bytes(), Path::new("mem")).is_err());
    }

    #[test]
    fn cases_any_order() {
        let cases = "region,date,new_cases\nDL,2020-03-02,5\nMH,2020-03-01,2\nDL,2020-03-01,4\n";
        let c = read_cases_csv(cases.as_bytes(), Path::new("mem")).unwrap();
        assert_eq!(c["DL"].values(), &[4, 5]);
        assert_eq!(c["DL"].get(d("2020-03-02")), Some(5));
        assert_eq!(c["MH"].get(d("2020-03-02")), None);
    }

    #[test]
    fn date_lookup() {
        let s = DailySeries::new("DL", SignalKind::Volume, d("2020-02-28"), vec![1.0, 2.0, 3.0]).unwrap();
        assert_eq!(s.end(), d("2020-03-01"));
        assert_eq!(s.get(d("2020-02-29")), Some(2.0));
        assert_eq!(s.get(d("2020-03-02")), None);
        assert!(DailySeries::new("DL", SignalKind::Volume, d("2020-02-28"), vec![f64::NAN]).is_err());
    }
}
