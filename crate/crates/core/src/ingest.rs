//! Loading, filtering and partitioning archived tweet dumps.
//!
//! A dump is newline-delimited JSON, one object per line:
//!
//! ```text
//! {"id":"1","created_at":"2020-04-30T09:15:00Z","region":"MH","text":"No beds in Mumbai","lang":"en"}
//! ```
//!
//! Unknown keys are ignored. A line that fails to parse, or whose timestamp
//! predates 2006, counts as malformed.

use std::collections::{BTreeMap, HashSet};
use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use chrono::{DateTime, FixedOffset, NaiveDate, TimeZone, Utc};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dates::{add_days, DateRange};
use crate::error::{Error, Result};

/// One archived tweet.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TweetRecord {
    pub id: String,
    #[serde(rename = "created_at")]
    pub timestamp: DateTime<Utc>,
    pub region: String,
    pub text: String,
    pub lang: String,
}

/// Where a corpus came from.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Provenance {
    pub source: Option<PathBuf>,
    pub loaded_at: Option<DateTime<Utc>>,
    pub malformed_lines: usize,
}

/// An ordered, duplicate-free collection of tweets.
#[derive(Debug, Clone, PartialEq)]
pub struct TweetCorpus {
    records: Vec<TweetRecord>,
    pub provenance: Provenance,
    pub scrape_date: NaiveDate,
}

impl TweetCorpus {
    /// Builds a corpus from records in any order. Fails on a repeated id.
    pub fn new(mut records: Vec<TweetRecord>, scrape_date: NaiveDate) -> Result<Self> {
        let mut seen = HashSet::with_capacity(records.len());
        for r in &records {
            if r.id.is_empty() {
                return Err(Error::InvalidArgument("tweet with empty id".into()));
            }
            if !seen.insert(r.id.as_str()) {
                return Err(Error::DuplicateId(r.id.clone()));
            }
        }
        sort_records(&mut records);
        Ok(TweetCorpus {
            records,
            provenance: Provenance::default(),
            scrape_date,
        })
    }

    pub fn records(&self) -> &[TweetRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn into_records(self) -> Vec<TweetRecord> {
        self.records
    }

    // Records taken from an already-valid corpus keep its order and uniqueness.
    fn derived(&self, records: Vec<TweetRecord>) -> TweetCorpus {
        TweetCorpus {
            records,
            provenance: self.provenance.clone(),
            scrape_date: self.scrape_date,
        }
    }
}

fn sort_records(records: &mut [TweetRecord]) {
    records.sort_by(|a, b| a.timestamp.cmp(&b.timestamp).then_with(|| a.id.cmp(&b.id)));
}

/// A region known to the pipeline.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Region {
    pub name: String,
    pub country: String,
    /// Fixed offset from UTC; the target countries do not observe DST.
    pub utc_offset_minutes: i32,
}

/// Region code → metadata, loaded from `code,name,country,utc_offset_minutes` CSV.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RegionRegistry {
    entries: BTreeMap<String, Region>,
}

#[derive(Deserialize)]
struct RegistryRow {
    code: String,
    name: String,
    country: String,
    utc_offset_minutes: i32,
}

impl RegionRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, code: impl Into<String>, region: Region) -> Result<()> {
        let code = code.into();
        if code.is_empty() {
            return Err(Error::Registry("empty region code".into()));
        }
        if !(-720..=840).contains(&region.utc_offset_minutes) {
            return Err(Error::Registry(format!(
                "region {code}: offset {} outside [-720, 840]",
                region.utc_offset_minutes
            )));
        }
        if self.entries.contains_key(&code) {
            return Err(Error::Registry(format!("duplicate region code {code:?}")));
        }
        self.entries.insert(code, region);
        Ok(())
    }

    pub fn from_csv_reader<R: std::io::Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let mut registry = RegionRegistry::new();
        for row in rdr.deserialize::<RegistryRow>() {
            let row = row.map_err(|e| Error::Registry(e.to_string()))?;
            registry.insert(
                row.code,
                Region {
                    name: row.name,
                    country: row.country,
                    utc_offset_minutes: row.utc_offset_minutes,
                },
            )?;
        }
        Ok(registry)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::from_csv_reader(file)
    }

    pub fn get(&self, code: &str) -> Option<&Region> {
        self.entries.get(code)
    }

    pub fn codes(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Region)> {
        self.entries.iter().map(|(k, v)| (k.as_str(), v))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// The calendar date of a tweet in its region's local time.
    pub fn local_date(&self, record: &TweetRecord) -> Result<NaiveDate> {
        let region = self.get(&record.region).ok_or_else(|| Error::UnknownRegion {
            code: record.region.clone(),
            record: record.id.clone(),
        })?;
        Ok(local_date_at(record.timestamp, region.utc_offset_minutes))
    }
}

pub fn local_date_at(timestamp: DateTime<Utc>, offset_minutes: i32) -> NaiveDate {
    let offset = FixedOffset::east_opt(offset_minutes * 60).expect("offset validated on insert");
    offset.from_utc_datetime(&timestamp.naive_utc()).date_naive()
}

/// Options for [`load_corpus_with`].
#[derive(Debug, Clone, Copy)]
pub struct LoadOptions {
    /// Largest tolerated fraction of malformed non-blank lines.
    pub max_malformed_ratio: f64,
}

impl Default for LoadOptions {
    fn default() -> Self {
        LoadOptions {
            max_malformed_ratio: 0.01,
        }
    }
}

fn earliest_valid_timestamp() -> DateTime<Utc> {
    Utc.with_ymd_and_hms(2006, 1, 1, 0, 0, 0).unwrap()
}

/// Loads a dump with the default 1% malformed-line tolerance.
pub fn load_corpus(path: impl AsRef<Path>, scrape_date: NaiveDate) -> Result<TweetCorpus> {
    load_corpus_with(path, scrape_date, LoadOptions::default())
}

pub fn load_corpus_with(path: impl AsRef<Path>, scrape_date: NaiveDate, options: LoadOptions) -> Result<TweetCorpus> {
    let path = path.as_ref();
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut records = Vec::new();
    let mut lines = 0usize;
    let mut malformed = 0usize;
    for line in BufReader::new(file).lines() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        lines += 1;
        match serde_json::from_str::<TweetRecord>(&line) {
            Ok(r) if r.timestamp >= earliest_valid_timestamp() && !r.id.is_empty() => records.push(r),
            _ => malformed += 1,
        }
    }
    if lines > 0 && malformed as f64 / lines as f64 > options.max_malformed_ratio {
        return Err(Error::TooManyMalformed {
            path: path.to_path_buf(),
            malformed,
            lines,
            tolerance: options.max_malformed_ratio,
        });
    }
    let mut corpus = TweetCorpus::new(records, scrape_date)?;
    corpus.provenance = Provenance {
        source: Some(path.to_path_buf()),
        loaded_at: Some(Utc::now()),
        malformed_lines: malformed,
    };
    Ok(corpus)
}

/// Writes a corpus in the dump format, one record per line.
pub fn write_corpus(corpus: &TweetCorpus, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    for r in corpus.records() {
        serde_json::to_writer(&mut w, r)?;
        w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Keeps tweets mentioning any term (case-folded substring) posted within
/// `range`, judged by the region's local date.
pub fn filter_by_query(
    corpus: &TweetCorpus,
    terms: &[impl AsRef<str>],
    range: DateRange,
    registry: &RegionRegistry,
) -> Result<TweetCorpus> {
    if terms.is_empty() {
        return Err(Error::InvalidArgument("query terms must not be empty".into()));
    }
    let terms: Vec<String> = terms.iter().map(|t| t.as_ref().to_lowercase()).collect();
    let mut kept = Vec::new();
    for r in corpus.records() {
        if !range.contains(registry.local_date(r)?) {
            continue;
        }
        let text = r.text.to_lowercase();
        if terms.iter().any(|t| text.contains(t.as_str())) {
            kept.push(r.clone());
        }
    }
    Ok(corpus.derived(kept))
}

/// Text used to detect duplicates: leading `RT @user:` markers removed,
/// case-folded, whitespace collapsed.
pub fn duplicate_key_text(text: &str) -> String {
    let mut rest = text.trim_start();
    while let Some(after_rt) = rest.strip_prefix("RT @").or_else(|| rest.strip_prefix("rt @")) {
        match after_rt.find(':') {
            Some(colon) if !after_rt[..colon].contains(char::is_whitespace) => {
                rest = after_rt[colon + 1..].trim_start();
            }
            _ => break,
        }
    }
    rest.split_whitespace()
        .map(str::to_lowercase)
        .collect::<Vec<_>>()
        .join(" ")
}

/// Drops tweets whose (region, normalized text, local date) repeats an
/// earlier one. Returns the deduplicated corpus and the number removed.
pub fn deduplicate(corpus: &TweetCorpus, registry: &RegionRegistry) -> Result<(TweetCorpus, usize)> {
    let mut seen = HashSet::new();
    let mut kept = Vec::with_capacity(corpus.len());
    for r in corpus.records() {
        let key = (r.region.clone(), duplicate_key_text(&r.text), registry.local_date(r)?);
        if seen.insert(key) {
            kept.push(r.clone());
        }
    }
    let removed = corpus.len() - kept.len();
    Ok((corpus.derived(kept), removed))
}

/// Splits a corpus by region code.
pub fn partition_by_region(corpus: &TweetCorpus, registry: &RegionRegistry) -> Result<BTreeMap<String, TweetCorpus>> {
    let mut parts: BTreeMap<String, Vec<TweetRecord>> = BTreeMap::new();
    for r in corpus.records() {
        if registry.get(&r.region).is_none() {
            return Err(Error::UnknownRegion {
                code: r.region.clone(),
                record: r.id.clone(),
            });
        }
        parts.entry(r.region.clone()).or_default().push(r.clone());
    }
    Ok(parts
        .into_iter()
        .map(|(code, records)| (code, corpus.derived(records)))
        .collect())
}

/// Reproduces the historical-scrape artifact: tweets whose local date is at
/// least seven days before `scrape_date` survive independently with
/// probability `retention`; the most recent week is untouched.
pub fn simulate_truncation(
    corpus: &TweetCorpus,
    scrape_date: NaiveDate,
    retention: f64,
    seed: u64,
    registry: &RegionRegistry,
) -> Result<TweetCorpus> {
    if !(retention > 0.0 && retention <= 1.0) {
        return Err(Error::InvalidArgument(format!("retention {retention} outside (0, 1]")));
    }
    let last_truncated = add_days(scrape_date, -7);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut kept = Vec::with_capacity(corpus.len());
    for r in corpus.records() {
        if registry.local_date(r)? <= last_truncated && rng.random::<f64>() >= retention {
            continue;
        }
        kept.push(r.clone());
    }
    let mut out = corpus.derived(kept);
    out.scrape_date = scrape_date;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn d(s: &str) -> NaiveDate {
        s.parse().unwrap()
    }

    fn registry() -> RegionRegistry {
        RegionRegistry::from_csv_reader(
            "code,name,country,utc_offset_minutes\nDL,Delhi,IN,330\nJK,Jakarta,ID,420\nBD,Bangladesh,BD,360\n"
                .as_bytes(),
        )
        .unwrap()
    }

    fn rec(id: &str, ts: &str, region: &str, text: &str) -> TweetRecord {
        TweetRecord {
            id: id.into(),
            timestamp: ts.parse().unwrap(),
            region: region.into(),
            text: text.into(),
            lang: "en".into(),
        }
    }

    fn write_lines(lines: &[&str]) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        for l in lines {
            writeln!(f, "{l}").unwrap();
        }
        f
    }

    #[test]
    fn empty_file_gives_empty_corpus() {
        let f = write_lines(&[]);
        let c = load_corpus(f.path(), d("2020-05-01")).unwrap();
        assert!(c.is_empty());
        assert_eq!(c.provenance.malformed_lines, 0);
    }

    #[test]
    fn records_are_sorted_on_load() {
        let f = write_lines(&[
            r#"{"id":"c","created_at":"2020-04-03T00:00:00Z","region":"DL","text":"x","lang":"en"}"#,
            r#"{"id":"a","created_at":"2020-04-01T00:00:00Z","region":"DL","text":"y","lang":"en"}"#,
            r#"{"id":"b","created_at":"2020-04-02T00:00:00+05:30","region":"DL","text":"z","lang":"en"}"#,
        ]);
        let c = load_corpus(f.path(), d("2020-05-01")).unwrap();
        let ids: Vec<_> = c.records().iter().map(|r| r.id.as_str()).collect();
        assert_eq!(ids, ["a", "b", "c"]);
    }

    #[test]
    fn malformed_lines_are_counted() {
        let f = write_lines(&[
            r#"{"id":"1","created_at":"2020-04-01T00:00:00Z","region":"DL","text":"a","lang":"en"}"#,
            r#"{"id":"2","created_at":"2020-04-01T00:00:00Z","region":"DL","lang":"en"}"#,
            r#"{"id":"3","created_at":"2020-04-02T00:00:00Z","region":"DL","text":"b","lang":"en"}"#,
        ]);
        // one bad line in three is far above the default 1% tolerance
        assert!(matches!(
            load_corpus(f.path(), d("2020-05-01")),
            Err(Error::TooManyMalformed {
                malformed: 1,
                lines: 3,
                ..
            })
        ));
        let c = load_corpus_with(
            f.path(),
            d("2020-05-01"),
            LoadOptions {
                max_malformed_ratio: 0.5,
            },
        )
        .unwrap();
        assert_eq!(c.len(), 2);
        assert_eq!(c.provenance.malformed_lines, 1);
    }

    #[test]
    fn pre_2006_timestamp_is_malformed() {
        let f =
            write_lines(&[r#"{"id":"1","created_at":"2005-12-31T23:59:59Z","region":"DL","text":"a","lang":"en"}"#]);
        let c = load_corpus_with(
            f.path(),
            d("2020-05-01"),
            LoadOptions {
                max_malformed_ratio: 1.0,
            },
        )
        .unwrap();
        assert_eq!(c.provenance.malformed_lines, 1);
    }

    #[test]
    fn duplicate_id_is_named() {
        let f = write_lines(&[
            r#"{"id":"dup","created_at":"2020-04-01T00:00:00Z","region":"DL","text":"a","lang":"en"}"#,
            r#"{"id":"dup","created_at":"2020-04-02T00:00:00Z","region":"DL","text":"b","lang":"en"}"#,
        ]);
        match load_corpus(f.path(), d("2020-05-01")) {
            Err(Error::DuplicateId(id)) => assert_eq!(id, "dup"),
            other => panic!("expected duplicate id error, got {other:?}"),
        }
    }

    #[test]
    fn missing_file_is_io_error() {
        assert!(matches!(
            load_corpus("/nonexistent/dump.jsonl", d("2020-05-01")),
            Err(Error::Io { .. })
        ));
    }

    #[test]
    fn filter_uses_case_folded_substrings() {
        let c = TweetCorpus::new(
            vec![
                rec("1", "2020-04-01T06:00:00Z", "DL", "Hospital beds full"),
                rec("2", "2020-04-01T06:00:00Z", "DL", "COVIDIOT rant"),
                rec("3", "2020-04-01T06:00:00Z", "DL", "lovely weather"),
            ],
            d("2020-05-01"),
        )
        .unwrap();
        let all = DateRange::unbounded();
        let kept = filter_by_query(&c, &["corona", "covid", "hospital"], all, &registry()).unwrap();
        let ids: Vec<_> = kept.records().iter().map(|r| r.id.as_str()).collect();
        assert_eq!(ids, ["1", "2"]);
    }

    #[test]
    fn filter_range_uses_local_date() {
        // 2020-03-31T19:00Z is 2020-04-01 00:30 in Delhi (+05:30)
        let c = TweetCorpus::new(
            vec![rec("1", "2020-03-31T19:00:00Z", "DL", "covid ward")],
            d("2020-05-01"),
        )
        .unwrap();
        let march = DateRange::new(d("2020-03-01"), d("2020-03-31")).unwrap();
        let april = DateRange::new(d("2020-04-01"), d("2020-04-30")).unwrap();
        assert!(filter_by_query(&c, &["covid"], march, &registry()).unwrap().is_empty());
        assert_eq!(filter_by_query(&c, &["covid"], april, &registry()).unwrap().len(), 1);
    }

    #[test]
    fn empty_terms_rejected() {
        let c = TweetCorpus::new(vec![], d("2020-05-01")).unwrap();
        let none: [&str; 0] = [];
        assert!(filter_by_query(&c, &none, DateRange::unbounded(), &registry()).is_err());
    }

    #[test]
    fn dedupe_same_day_only() {
        let c = TweetCorpus::new(
            vec![
                rec("1", "2020-04-01T06:00:00Z", "DL", "hospital full"),
                rec("2", "2020-04-01T07:00:00Z", "DL", "hospital full"),
                rec("3", "2020-04-02T07:00:00Z", "DL", "hospital full"),
            ],
            d("2020-05-01"),
        )
        .unwrap();
        let (out, removed) = deduplicate(&c, &registry()).unwrap();
        assert_eq!(removed, 1);
        let ids: Vec<_> = out.records().iter().map(|r| r.id.as_str()).collect();
        assert_eq!(ids, ["1", "3"]);
    }

    #[test]
    fn dedupe_strips_retweet_prefix() {
        assert_eq!(duplicate_key_text("RT @x: hospital full"), "hospital full");
        assert_eq!(duplicate_key_text("RT @a: RT @b:  Hospital   FULL"), "hospital full");
        assert_eq!(duplicate_key_text("RT @ nobody"), "rt @ nobody");
        let c = TweetCorpus::new(
            vec![
                rec("1", "2020-04-01T06:00:00Z", "DL", "RT @x: hospital full"),
                rec("2", "2020-04-01T07:00:00Z", "DL", "hospital full"),
            ],
            d("2020-05-01"),
        )
        .unwrap();
        let (out, removed) = deduplicate(&c, &registry()).unwrap();
        assert_eq!((out.len(), removed), (1, 1));
        assert_eq!(out.records()[0].id, "1");
    }

    #[test]
    fn partition_sizes_sum() {
        let c = TweetCorpus::new(
            vec![
                rec("1", "2020-04-01T06:00:00Z", "DL", "a"),
                rec("2", "2020-04-01T06:00:00Z", "JK", "b"),
                rec("3", "2020-04-01T06:00:00Z", "BD", "c"),
                rec("4", "2020-04-02T06:00:00Z", "DL", "d"),
            ],
            d("2020-05-01"),
        )
        .unwrap();
        let parts = partition_by_region(&c, &registry()).unwrap();
        assert_eq!(parts.len(), 3);
        assert_eq!(parts.values().map(TweetCorpus::len).sum::<usize>(), 4);
        assert_eq!(parts["DL"].len(), 2);
    }

    #[test]
    fn partition_single_region() {
        let c = TweetCorpus::new(
            vec![
                rec("1", "2020-04-01T06:00:00Z", "DL", "a"),
                rec("2", "2020-04-02T06:00:00Z", "DL", "b"),
            ],
            d("2020-05-01"),
        )
        .unwrap();
        let parts = partition_by_region(&c, &registry()).unwrap();
        assert_eq!(parts.len(), 1);
        assert_eq!(parts["DL"], c);
    }

    #[test]
    fn partition_unknown_region_names_code() {
        let c = TweetCorpus::new(vec![rec("7", "2020-04-01T06:00:00Z", "XX", "a")], d("2020-05-01")).unwrap();
        let err = partition_by_region(&c, &registry()).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("XX") && msg.contains('7'), "{msg}");
    }

    #[test]
    fn registry_rejects_bad_offset_and_duplicates() {
        let bad = "code,name,country,utc_offset_minutes\nA,a,X,900\n";
        assert!(RegionRegistry::from_csv_reader(bad.as_bytes()).is_err());
        let dup = "code,name,country,utc_offset_minutes\nA,a,X,0\nA,b,X,0\n";
        assert!(RegionRegistry::from_csv_reader(dup.as_bytes()).is_err());
    }

    #[test]
    fn truncation_identity_and_determinism() {
        let records = (0..200)
            .map(|i| rec(&i.to_string(), "2020-04-01T06:00:00Z", "DL", "covid"))
            .collect();
        let c = TweetCorpus::new(records, d("2020-04-20")).unwrap();
        let same = simulate_truncation(&c, d("2020-04-20"), 1.0, 3, &registry()).unwrap();
        assert_eq!(same.records(), c.records());
        let a = simulate_truncation(&c, d("2020-04-20"), 0.5, 9, &registry()).unwrap();
        let b = simulate_truncation(&c, d("2020-04-20"), 0.5, 9, &registry()).unwrap();
        assert_eq!(a, b);
        assert!(a.len() < c.len());
        assert!(simulate_truncation(&c, d("2020-04-20"), 0.0, 9, &registry()).is_err());
        assert!(simulate_truncation(&c, d("2020-04-20"), 1.5, 9, &registry()).is_err());
    }
}
