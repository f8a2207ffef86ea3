//! Stage orchestration over on-disk intermediates.
//!
//! ```text
//! out/ingest.json                     corpus counts and region list
//! out/<region>/corpus.jsonl           filtered, deduplicated tweets
//! out/<region>/tokens.jsonl           normalized tweets with local dates
//! out/keywords/<country>.tsv          keyword list used for scoring
//! out/models/<country>/               n-grams, topic model, embeddings
//! out/<region>/raw.csv                both daily signals
//! out/<region>/adjusted.csv           after truncation correction
//! out/<region>/boundary.json
//! out/<region>/smoothed.csv           winner-smoothed signals
//! out/<region>/selection.json
//! out/<region>/plot.svg, peaks.json, manifest.json
//! ```
//!
//! Ingest, normalize and discover always cover every region; a region
//! restriction applies from scoring on, so a restricted run writes the
//! same bytes for its region as a full run.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use chrono::NaiveDate;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::{LoadedConfig, PipelineConfig, OUT_DIR_ENV};
use crate::error::{Error, Result};
use crate::ingest::{
    deduplicate, filter_by_query, load_corpus, load_corpus_with, partition_by_region, write_corpus, LoadOptions,
    RegionRegistry, TweetCorpus,
};
use crate::keywords::{assemble_keywords, build_ngram_table, lda_fit, w2v_train, Keyword, KeywordSet};
use crate::normalize::{load_word_list, run_normalizer, NormalizerConfig};
use crate::report::{events_by_date, load_events, render_plot, top_tweets_for_date, EventAnnotation, RankedTweet};
use crate::scoring::{keyword_count_per_day, normalize_keywords, volume_per_day, DatedTweet};
use crate::series::{load_cases_csv, load_series_csv, save_series_csv, CaseSeries, DailySeries, SignalKind};
use crate::smoothing::{select_model, SelectionReport, SmoothingSpec};
use crate::truncation::{adjust, detect_boundary, BoundaryReport};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Stage {
    Ingest,
    Normalize,
    Discover,
    Score,
    Adjust,
    Smooth,
    Report,
}

impl Stage {
    pub const ALL: [Stage; 7] = [
        Stage::Ingest,
        Stage::Normalize,
        Stage::Discover,
        Stage::Score,
        Stage::Adjust,
        Stage::Smooth,
        Stage::Report,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Stage::Ingest => "ingest",
            Stage::Normalize => "normalize",
            Stage::Discover => "discover",
            Stage::Score => "score",
            Stage::Adjust => "adjust",
            Stage::Smooth => "smooth",
            Stage::Report => "report",
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Stage {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Stage::ALL
            .into_iter()
            .find(|st| st.as_str() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown stage {s:?}")))
    }
}

/// Command-line overrides.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub region: Option<String>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    /// Worker threads for per-region work; `None` lets rayon decide.
    pub jobs: Option<usize>,
}

/// Per-region result of a run.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RunSummary {
    pub succeeded: BTreeSet<String>,
    /// Region → first error message.
    pub failed: BTreeMap<String, String>,
}

impl RunSummary {
    /// 0 when every region succeeded, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        i32::from(!self.failed.is_empty())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
struct IngestSummary {
    source_records: usize,
    malformed_lines: usize,
    after_filter: usize,
    duplicates_removed: usize,
    /// Region → tweets kept.
    regions: BTreeMap<String, usize>,
}

/// Which smoother a signal got and, when cases existed, why.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignalSelection {
    pub kind: SignalKind,
    pub smoothing: SmoothingSpec,
    pub label: String,
    pub report: Option<SelectionReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionFile {
    pub region: String,
    /// `selected` or `skipped`.
    pub status: String,
    pub note: Option<String>,
    pub signals: Vec<SignalSelection>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Peak {
    date: NaiveDate,
    value: f64,
    events: Vec<String>,
    tweets: Vec<RankedTweet>,
}

/// Everything needed to re-run a region and check its outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub region: String,
    pub seed: u64,
    pub derived_seeds: BTreeMap<String, u64>,
    pub config_dir: PathBuf,
    pub config_sha256: String,
    pub config: String,
    /// Input file → SHA-256.
    pub inputs: BTreeMap<String, String>,
    /// Artifact in the region directory → SHA-256.
    pub artifacts: BTreeMap<String, String>,
}

/// Name of the per-region manifest file.
pub const MANIFEST: &str = "manifest.json";

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn file_sha256(path: &Path) -> Result<String> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(sha256_hex(&bytes))
}

/// A stable per-purpose seed derived from the run seed.
pub fn derive_seed(seed: u64, purpose: &str, scope: &str) -> u64 {
    let digest = Sha256::digest(format!("{seed}/{purpose}/{scope}").as_bytes());
    u64::from_le_bytes(digest[..8].try_into().expect("8 bytes"))
}

/// File-name form of a country name.
pub fn country_slug(country: &str) -> String {
    country
        .chars()
        .map(|c| {
            if c.is_alphanumeric() {
                c.to_ascii_lowercase()
            } else {
                '_'
            }
        })
        .collect()
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_str(&text)?)
}

fn create_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(|e| Error::io(path, e))
}

fn write_tokens(path: &Path, tweets: &[DatedTweet]) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    for t in tweets {
        serde_json::to_writer(&mut w, t)?;
        w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn read_tokens(path: &Path) -> Result<Vec<DatedTweet>> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if !line.trim().is_empty() {
            out.push(serde_json::from_str(&line).map_err(|e| Error::parse(path, i + 1, e.to_string()))?);
        }
    }
    Ok(out)
}

/// A configured run.
pub struct Pipeline {
    loaded: LoadedConfig,
    seed: u64,
    out: PathBuf,
    region: Option<String>,
    registry: RegionRegistry,
    normalizer: NormalizerConfig,
    pool: rayon::ThreadPool,
    failed: BTreeMap<String, String>,
}

impl Pipeline {
    /// Applies overrides: `--out` beats `BURDEN_OUT_DIR` beats `paths.out`.
    pub fn new(loaded: LoadedConfig, options: RunOptions) -> Result<Self> {
        let config = &loaded.config;
        let out = options
            .out
            .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
            .unwrap_or_else(|| config.paths.out.clone());
        let registry = RegionRegistry::load(&config.paths.registry)?;
        if let Some(r) = &options.region {
            if registry.get(r).is_none() {
                return Err(Error::Config(format!("region {r} is not in the registry")));
            }
        }
        let normalizer = config.normalizer()?;
        let mut pool = rayon::ThreadPoolBuilder::new();
        if let Some(jobs) = options.jobs {
            pool = pool.num_threads(jobs.max(1));
        }
        let pool = pool.build().map_err(|e| Error::Config(format!("thread pool: {e}")))?;
        Ok(Pipeline {
            seed: options.seed.unwrap_or(config.seed),
            out,
            region: options.region,
            registry,
            normalizer,
            pool,
            failed: BTreeMap::new(),
            loaded,
        })
    }

    /// Loads the config embedded in a manifest, resolving paths as the
    /// original run did. The manifest's seed applies unless overridden.
    pub fn from_manifest(path: impl AsRef<Path>, mut options: RunOptions) -> Result<Self> {
        let manifest: Manifest = read_json(path.as_ref())?;
        let loaded = PipelineConfig::from_text(&manifest.config, &manifest.config_dir)?;
        options.seed = options.seed.or(Some(manifest.seed));
        Self::new(loaded, options)
    }

    pub fn config(&self) -> &PipelineConfig {
        &self.loaded.config
    }

    pub fn out_dir(&self) -> &Path {
        &self.out
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Runs `stages` in order. Region errors are collected in the summary;
    /// anything else (config, shared inputs) aborts with `Err`.
    pub fn run(&mut self, stages: &[Stage]) -> Result<RunSummary> {
        create_dir(&self.out)?;
        for &stage in stages {
            match stage {
                Stage::Ingest => self.ingest()?,
                Stage::Normalize => self.normalize()?,
                Stage::Discover => self.discover()?,
                Stage::Score => self.score()?,
                Stage::Adjust => self.adjust()?,
                Stage::Smooth => self.smooth()?,
                Stage::Report => self.report()?,
            }
        }
        let touched: Vec<String> = if stages.iter().any(|&s| s >= Stage::Score) {
            self.selected_regions()?
        } else {
            self.all_regions()?
        };
        Ok(RunSummary {
            succeeded: touched.into_iter().filter(|r| !self.failed.contains_key(r)).collect(),
            failed: self.failed.clone(),
        })
    }

    fn region_dir(&self, region: &str) -> PathBuf {
        self.out.join(region)
    }

    fn ingest_summary_path(&self) -> PathBuf {
        self.out.join("ingest.json")
    }

    fn keywords_path(&self, country: &str) -> PathBuf {
        self.out.join("keywords").join(format!("{}.tsv", country_slug(country)))
    }

    fn all_regions(&self) -> Result<Vec<String>> {
        let summary: IngestSummary = read_json(&self.ingest_summary_path())?;
        Ok(summary.regions.into_keys().collect())
    }

    fn selected_regions(&self) -> Result<Vec<String>> {
        let all = self.all_regions()?;
        match &self.region {
            None => Ok(all),
            Some(r) if all.contains(r) => Ok(vec![r.clone()]),
            Some(r) => Err(Error::Config(format!("region {r} has no tweets in the dump"))),
        }
    }

    fn country_of(&self, region: &str) -> Result<&str> {
        self.registry
            .get(region)
            .map(|r| r.country.as_str())
            .ok_or_else(|| Error::Registry(format!("region {region} is not in the registry")))
    }

    // Runs `f` for every region not already failed, in parallel, and
    // records new failures.
    fn for_regions<F>(&mut self, regions: &[String], f: F)
    where
        F: Fn(&Pipeline, &str) -> Result<()> + Sync,
    {
        let this = &*self;
        let results: Vec<(String, Result<()>)> = this.pool.install(|| {
            regions
                .par_iter()
                .filter(|r| !this.failed.contains_key(*r))
                .map(|r| (r.clone(), f(this, r)))
                .collect()
        });
        for (region, result) in results {
            if let Err(e) = result {
                self.failed.insert(region, e.to_string());
            }
        }
    }

    fn ingest(&mut self) -> Result<()> {
        let config = &self.loaded.config;
        let loaded = load_corpus(&config.paths.dump, config.scrape_date())?;
        let regions: BTreeSet<String> = partition_by_region(&loaded, &self.registry)?.into_keys().collect();
        let filtered = filter_by_query(&loaded, &config.query_terms, config.range()?, &self.registry)?;
        let (kept, removed) = if config.scoring.dedupe {
            deduplicate(&filtered, &self.registry)?
        } else {
            (filtered.clone(), 0)
        };
        let mut parts = partition_by_region(&kept, &self.registry)?;
        let mut counts = BTreeMap::new();
        for region in &regions {
            let dir = self.region_dir(region);
            create_dir(&dir)?;
            let part = parts
                .remove(region)
                .unwrap_or_else(|| TweetCorpus::new(Vec::new(), kept.scrape_date).expect("empty corpus"));
            counts.insert(region.clone(), part.len());
            write_corpus(&part, dir.join("corpus.jsonl"))?;
        }
        write_json(
            &self.ingest_summary_path(),
            &IngestSummary {
                source_records: loaded.len(),
                malformed_lines: loaded.provenance.malformed_lines,
                after_filter: filtered.len(),
                duplicates_removed: removed,
                regions: counts,
            },
        )
    }

    fn load_region_corpus(&self, region: &str) -> Result<TweetCorpus> {
        let strict = LoadOptions {
            max_malformed_ratio: 0.0,
        };
        load_corpus_with(
            self.region_dir(region).join("corpus.jsonl"),
            self.config().scrape_date(),
            strict,
        )
    }

    fn normalize(&mut self) -> Result<()> {
        let regions = self.all_regions()?;
        self.for_regions(&regions, |p, region| {
            let corpus = p.load_region_corpus(region)?;
            let tweets = corpus
                .records()
                .iter()
                .map(|r| {
                    Ok(DatedTweet {
                        region: region.to_string(),
                        date: p.registry.local_date(r)?,
                        raw_words: r.text.split_whitespace().count(),
                        tweet: run_normalizer(r, &p.normalizer)?,
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            write_tokens(&p.region_dir(region).join("tokens.jsonl"), &tweets)
        });
        Ok(())
    }

    fn discover(&mut self) -> Result<()> {
        let regions = self.all_regions()?;
        let mut by_country: BTreeMap<String, Vec<String>> = BTreeMap::new();
        for r in &regions {
            by_country
                .entry(self.country_of(r)?.to_string())
                .or_default()
                .push(r.clone());
        }
        create_dir(&self.out.join("keywords"))?;
        let blocklist = match &self.config().paths.blocklist {
            Some(p) => load_word_list(p)?,
            None => BTreeSet::new(),
        };
        let this = &*self;
        let results: Vec<(Vec<String>, Result<()>)> = this.pool.install(|| {
            by_country
                .par_iter()
                .map(|(country, members)| (members.clone(), this.discover_country(country, members, &blocklist)))
                .collect()
        });
        for (members, result) in results {
            if let Err(e) = result {
                for r in members {
                    self.failed.entry(r).or_insert_with(|| e.to_string());
                }
            }
        }
        Ok(())
    }

    fn discover_country(&self, country: &str, members: &[String], blocklist: &BTreeSet<String>) -> Result<()> {
        let config = self.config();
        if let Some(r) = members.iter().find(|r| self.failed.contains_key(*r)) {
            return Err(Error::InvalidArgument(format!(
                "keyword discovery for {country} needs region {r}, which failed"
            )));
        }
        let seed_path = config
            .keywords
            .get(country)
            .ok_or_else(|| Error::Config(format!("no keyword file for country {country}")))?;
        let seeds = normalize_keywords(&KeywordSet::load(country, seed_path)?, &self.normalizer)?;
        let out = self.keywords_path(country);
        if !config.discovery.enabled {
            return seeds.save(out);
        }

        let mut tweets = Vec::new();
        for r in members {
            tweets.extend(
                read_tokens(&self.region_dir(r).join("tokens.jsonl"))?
                    .into_iter()
                    .map(|t| t.tweet),
            );
        }
        let model_dir = self.out.join("models").join(country_slug(country));
        create_dir(&model_dir)?;
        let mut grams = String::new();
        for n in 1..=3 {
            let table = build_ngram_table(&tweets, n)?;
            for (gram, count) in table.most_frequent(50) {
                grams.push_str(&format!("{n}\t{}\t{count}\n", gram.join(" ")));
            }
        }
        let grams_path = model_dir.join("ngrams.tsv");
        fs::write(&grams_path, grams).map_err(|e| Error::io(&grams_path, e))?;

        let d = &config.discovery;
        let topics = lda_fit(&tweets, d.lda_params(derive_seed(self.seed, "lda", country)))?;
        let embedding = w2v_train(&tweets, d.w2v_params(derive_seed(self.seed, "w2v", country)))?;
        write_json(&model_dir.join("lda.json"), &topics)?;
        embedding.save_json(model_dir.join("w2v.json"))?;
        let phrases: Vec<&str> = seeds.phrases().collect();
        let set = assemble_keywords(
            &phrases,
            &topics,
            &embedding,
            &d.expansion_params(blocklist.clone()),
            country,
        )?;
        // assemble marks everything it was given as a seed; keep manual tags
        let set = KeywordSet::new(
            country,
            set.keywords()
                .iter()
                .map(|k| {
                    let original = seeds.keywords().iter().find(|s| s.phrase() == k.phrase());
                    Keyword::new(k.phrase(), original.map_or(k.source, |s| s.source))
                })
                .collect::<Result<Vec<_>>>()?,
        )?;
        normalize_keywords(&set, &self.normalizer)?.save(out)
    }

    fn region_keywords(&self, region: &str) -> Result<KeywordSet> {
        let country = self.country_of(region)?;
        let set = KeywordSet::load(region, self.keywords_path(country))?;
        normalize_keywords(&set, &self.normalizer)
    }

    fn score(&mut self) -> Result<()> {
        let regions = self.selected_regions()?;
        self.for_regions(&regions, |p, region| {
            let config = p.config();
            let dir = p.region_dir(region);
            let tweets = read_tokens(&dir.join("tokens.jsonl"))?;
            let keywords = p.region_keywords(region)?;
            let range = config.range()?;
            let kw = keyword_count_per_day(region, &tweets, &keywords, range, config.scoring.count)?;
            let vol = volume_per_day(region, &tweets, range, config.scoring.volume)?;
            save_series_csv(dir.join("raw.csv"), &[kw, vol])
        });
        Ok(())
    }

    fn adjust(&mut self) -> Result<()> {
        let regions = self.selected_regions()?;
        self.for_regions(&regions, |p, region| {
            let config = p.config();
            let dir = p.region_dir(region);
            let mut reports: Vec<BoundaryReport> = Vec::new();
            let mut adjusted = Vec::new();
            for s in load_series_csv(dir.join("raw.csv"))? {
                let s = s.with_scrape_date(Some(config.scrape_date()));
                let report = detect_boundary(&s, &config.truncation)?;
                adjusted.push(adjust(&s, &report)?);
                reports.push(report);
            }
            save_series_csv(dir.join("adjusted.csv"), &adjusted)?;
            write_json(&dir.join("boundary.json"), &reports)
        });
        Ok(())
    }

    fn smooth(&mut self) -> Result<()> {
        let regions = self.selected_regions()?;
        let cases: Option<BTreeMap<String, CaseSeries>> =
            self.config().paths.cases.as_ref().map(load_cases_csv).transpose()?;
        let candidates = self.config().candidates()?;
        self.for_regions(&regions, |p, region| {
            let dir = p.region_dir(region);
            let region_cases = cases.as_ref().and_then(|c| c.get(region));
            let note = match (&cases, region_cases) {
                (None, _) => Some("no cases: no case file configured".to_string()),
                (Some(_), None) => Some(format!("no cases for region {region}")),
                _ => None,
            };
            let mut signals = Vec::new();
            let mut smoothed = Vec::new();
            for s in load_series_csv(dir.join("adjusted.csv"))? {
                let (spec, report) = match region_cases {
                    Some(c) => {
                        let r = select_model(&s, c, &candidates, p.config().smoothing.lag)?;
                        (r.winner, Some(r))
                    }
                    None => (candidates[0], None),
                };
                smoothed.push(spec.apply(&s)?);
                signals.push(SignalSelection {
                    kind: s.kind,
                    smoothing: spec,
                    label: spec.to_string(),
                    report,
                });
            }
            save_series_csv(dir.join("smoothed.csv"), &smoothed)?;
            let status = if note.is_some() { "skipped" } else { "selected" };
            write_json(
                &dir.join("selection.json"),
                &SelectionFile {
                    region: region.to_string(),
                    status: status.into(),
                    note,
                    signals,
                },
            )
        });
        Ok(())
    }

    fn report(&mut self) -> Result<()> {
        let regions = self.selected_regions()?;
        let events = match &self.config().paths.events {
            Some(p) => load_events(p)?,
            None => Vec::new(),
        };
        let inputs = self.input_hashes()?;
        self.for_regions(&regions, |p, region| p.report_region(region, &events, &inputs));
        Ok(())
    }

    fn report_region(&self, region: &str, events: &[EventAnnotation], inputs: &BTreeMap<String, String>) -> Result<()> {
        let config = self.config();
        let dir = self.region_dir(region);
        let raw = load_series_csv(dir.join("raw.csv"))?;
        let adjusted = load_series_csv(dir.join("adjusted.csv"))?;
        let smoothed = load_series_csv(dir.join("smoothed.csv"))?;

        let primary = config.smoothing.primary;
        let mut kinds: Vec<SignalKind> = vec![primary];
        kinds.extend(SignalKind::ALL.into_iter().filter(|&k| k != primary));
        let find = |set: &[DailySeries], kind: SignalKind| -> Result<DailySeries> {
            set.iter()
                .find(|s| s.kind == kind)
                .cloned()
                .ok_or_else(|| Error::SeriesMismatch(format!("no {kind} series for {region}")))
        };
        let mut lines: Vec<(String, DailySeries)> = Vec::new();
        for &kind in &kinds {
            lines.push((format!("raw {kind}"), find(&raw, kind)?));
            lines.push((format!("adjusted {kind}"), find(&adjusted, kind)?));
            lines.push((format!("smoothed {kind}"), find(&smoothed, kind)?));
        }
        let plot: Vec<(&str, &DailySeries)> = lines.iter().map(|(l, s)| (l.as_str(), s)).collect();
        render_plot(&plot, events, dir.join("plot.svg"))?;

        let corpus = self.load_region_corpus(region)?;
        let keywords = self.region_keywords(region)?;
        let signal = find(&adjusted, primary)?;
        let mut days: Vec<(NaiveDate, f64)> = signal.iter().filter(|&(_, v)| v > 0.0).collect();
        days.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        let on_date = events_by_date(events, region);
        let peaks = days
            .into_iter()
            .take(3)
            .map(|(date, value)| {
                Ok(Peak {
                    date,
                    value,
                    events: on_date
                        .get(&date)
                        .map_or(Vec::new(), |v| v.iter().map(|s| s.to_string()).collect()),
                    tweets: top_tweets_for_date(&corpus, &keywords, date, 5, &self.registry, &self.normalizer)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        write_json(&dir.join("peaks.json"), &peaks)?;

        let mut artifacts = BTreeMap::new();
        for name in [
            "corpus.jsonl",
            "tokens.jsonl",
            "raw.csv",
            "adjusted.csv",
            "boundary.json",
            "smoothed.csv",
            "selection.json",
            "plot.svg",
            "peaks.json",
        ] {
            artifacts.insert(name.to_string(), file_sha256(&dir.join(name))?);
        }
        let country = self.country_of(region)?;
        artifacts.insert(
            format!("../keywords/{}.tsv", country_slug(country)),
            file_sha256(&self.keywords_path(country))?,
        );
        let mut derived_seeds = BTreeMap::new();
        if config.discovery.enabled {
            derived_seeds.insert("lda".to_string(), derive_seed(self.seed, "lda", country));
            derived_seeds.insert("w2v".to_string(), derive_seed(self.seed, "w2v", country));
        }
        let config_dir = fs::canonicalize(&self.loaded.base_dir).unwrap_or_else(|_| self.loaded.base_dir.clone());
        write_json(
            &dir.join(MANIFEST),
            &Manifest {
                tool: env!("CARGO_PKG_NAME").to_string(),
                version: env!("CARGO_PKG_VERSION").to_string(),
                region: region.to_string(),
                seed: self.seed,
                derived_seeds,
                config_dir,
                config_sha256: sha256_hex(self.loaded.text.as_bytes()),
                config: self.loaded.text.clone(),
                inputs: inputs.clone(),
                artifacts,
            },
        )
    }

    fn input_hashes(&self) -> Result<BTreeMap<String, String>> {
        let c = self.config();
        let p = &c.paths;
        let mut named: Vec<(String, &PathBuf)> = vec![
            ("dump".into(), &p.dump),
            ("registry".into(), &p.registry),
            ("stopwords".into(), &p.stopwords),
            ("lemmas".into(), &p.lemmas),
            ("slang".into(), &p.slang),
        ];
        for (name, path) in [("cases", &p.cases), ("events", &p.events), ("blocklist", &p.blocklist)] {
            if let Some(path) = path {
                named.push((name.into(), path));
            }
        }
        for (country, path) in &c.keywords {
            named.push((format!("keywords/{country}"), path));
        }
        named.into_iter().map(|(n, path)| Ok((n, file_sha256(path)?))).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stage_names_round_trip() {
        for s in Stage::ALL {
            assert_eq!(s.as_str().parse::<Stage>().unwrap(), s);
        }
        assert!("plot".parse::<Stage>().is_err());
    }

    #[test]
    fn derived_seeds_differ_by_purpose_and_scope() {
        assert_eq!(derive_seed(7, "lda", "India"), derive_seed(7, "lda", "India"));
        assert_ne!(derive_seed(7, "lda", "India"), derive_seed(7, "w2v", "India"));
        assert_ne!(derive_seed(7, "lda", "India"), derive_seed(7, "lda", "Indonesia"));
        assert_ne!(derive_seed(7, "lda", "India"), derive_seed(8, "lda", "India"));
    }

    #[test]
    fn slugs() {
        assert_eq!(country_slug("India"), "india");
        assert_eq!(country_slug("Sri Lanka"), "sri_lanka");
    }
}
