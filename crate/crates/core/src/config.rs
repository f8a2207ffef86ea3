//! The single TOML file that drives a pipeline run.
//!
//! Relative paths are resolved against the directory holding the config
//! file. Only `paths.out` may be overridden from outside, by the
//! `BURDEN_OUT_DIR` environment variable or the `--out` flag.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::dates::DateRange;
use crate::error::{Error, Result};
use crate::keywords::{ExpansionParams, LdaParams, Word2VecParams};
use crate::normalize::{NormalizerConfig, ScriptPolicy};
use crate::scoring::{CountMode, VolumeMode};
use crate::series::SignalKind;
use crate::smoothing::{default_candidates, SmoothingSpec};
use crate::truncation::TruncationParams;

/// Environment variable that overrides `paths.out`.
pub const OUT_DIR_ENV: &str = "BURDEN_OUT_DIR";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Paths {
    /// JSON-lines tweet dump.
    pub dump: PathBuf,
    /// `code,name,country,utc_offset_minutes` CSV.
    pub registry: PathBuf,
    pub stopwords: PathBuf,
    pub lemmas: PathBuf,
    pub slang: PathBuf,
    /// `region,date,new_cases` CSV; without it model selection is skipped.
    #[serde(default)]
    pub cases: Option<PathBuf>,
    /// `date,region,label` CSV of events drawn on plots.
    #[serde(default)]
    pub events: Option<PathBuf>,
    /// One expansion term per line that discovery must never add.
    #[serde(default)]
    pub blocklist: Option<PathBuf>,
    #[serde(default = "default_out")]
    pub out: PathBuf,
}

fn default_out() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NormalizeSection {
    /// Language tag → `latin_only` or `allow_script(bengali)`.
    #[serde(default)]
    pub policies: BTreeMap<String, String>,
    /// Policy for tags not listed; unlisted tags are an error without it.
    #[serde(default)]
    pub fallback: Option<String>,
}

impl Default for NormalizeSection {
    fn default() -> Self {
        NormalizeSection {
            policies: BTreeMap::new(),
            fallback: Some("latin_only".into()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiscoverySection {
    /// When false the seed lists are used as they are.
    #[serde(default)]
    pub enabled: bool,
    #[serde(default = "default_topics")]
    pub topics: usize,
    #[serde(default)]
    pub alpha: Option<f64>,
    #[serde(default = "default_beta")]
    pub beta: f64,
    #[serde(default = "default_lda_iterations")]
    pub lda_iterations: usize,
    #[serde(default = "default_dim")]
    pub dim: usize,
    #[serde(default = "default_w2v_window")]
    pub window: usize,
    #[serde(default = "default_negatives")]
    pub negatives: usize,
    #[serde(default = "default_epochs")]
    pub epochs: usize,
    #[serde(default = "default_min_count")]
    pub min_count: u64,
    #[serde(default = "default_lr")]
    pub learning_rate: f64,
    #[serde(default = "default_weight_floor")]
    pub weight_floor: f64,
    #[serde(default = "default_sim_floor")]
    pub sim_floor: f64,
    #[serde(default = "default_topic_words")]
    pub topic_words: usize,
    #[serde(default = "default_neighbors")]
    pub neighbors: usize,
}

fn default_topics() -> usize {
    10
}
fn default_beta() -> f64 {
    0.01
}
fn default_lda_iterations() -> usize {
    1000
}
fn default_dim() -> usize {
    100
}
fn default_w2v_window() -> usize {
    5
}
fn default_negatives() -> usize {
    5
}
fn default_epochs() -> usize {
    5
}
fn default_min_count() -> u64 {
    5
}
fn default_lr() -> f64 {
    0.025
}
fn default_weight_floor() -> f64 {
    0.05
}
fn default_sim_floor() -> f64 {
    0.6
}
fn default_topic_words() -> usize {
    10
}
fn default_neighbors() -> usize {
    10
}

impl Default for DiscoverySection {
    fn default() -> Self {
        toml::from_str("").expect("all fields have defaults")
    }
}

impl DiscoverySection {
    pub fn lda_params(&self, seed: u64) -> LdaParams {
        let mut p = LdaParams::with_defaults(self.topics);
        if let Some(alpha) = self.alpha {
            p.alpha = alpha;
        }
        p.beta = self.beta;
        p.iterations = self.lda_iterations;
        p.seed = seed;
        p
    }

    pub fn w2v_params(&self, seed: u64) -> Word2VecParams {
        Word2VecParams {
            dim: self.dim,
            window: self.window,
            negatives: self.negatives,
            epochs: self.epochs,
            min_count: self.min_count,
            learning_rate: self.learning_rate,
            seed,
        }
    }

    pub fn expansion_params(&self, blocklist: std::collections::BTreeSet<String>) -> ExpansionParams {
        ExpansionParams {
            weight_floor: self.weight_floor,
            sim_floor: self.sim_floor,
            topic_words: self.topic_words,
            neighbors: self.neighbors,
            blocklist,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScoringSection {
    #[serde(default = "yes")]
    pub dedupe: bool,
    #[serde(default)]
    pub volume: VolumeMode,
    #[serde(default)]
    pub count: CountMode,
}

fn yes() -> bool {
    true
}

impl Default for ScoringSection {
    fn default() -> Self {
        ScoringSection {
            dedupe: true,
            volume: VolumeMode::default(),
            count: CountMode::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SmoothingSection {
    /// Display forms such as `MA(5)`; the default grid when absent.
    #[serde(default)]
    pub candidates: Option<Vec<String>>,
    /// Cases are compared `lag` days after the signal.
    #[serde(default)]
    pub lag: i64,
    /// Signal drawn first on the plot and used for peak inspection.
    #[serde(default = "default_primary")]
    pub primary: SignalKind,
}

fn default_primary() -> SignalKind {
    SignalKind::KeywordCount
}

impl Default for SmoothingSection {
    fn default() -> Self {
        SmoothingSection {
            candidates: None,
            lag: 0,
            primary: default_primary(),
        }
    }
}

type Policies = (Vec<(String, ScriptPolicy)>, Option<ScriptPolicy>);

/// Everything a run needs, as written in the config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    pub seed: u64,
    pub start_date: NaiveDate,
    pub end_date: NaiveDate,
    /// Day the dump was scraped; defaults to `end_date`.
    #[serde(default)]
    pub scrape_date: Option<NaiveDate>,
    /// Tweets must contain one of these (case-folded substring).
    pub query_terms: Vec<String>,
    pub paths: Paths,
    /// Country → seed keyword file (`phrase[TAB]provenance` lines).
    pub keywords: BTreeMap<String, PathBuf>,
    #[serde(default)]
    pub normalize: NormalizeSection,
    #[serde(default)]
    pub discovery: DiscoverySection,
    #[serde(default)]
    pub scoring: ScoringSection,
    #[serde(default)]
    pub truncation: TruncationParams,
    #[serde(default)]
    pub smoothing: SmoothingSection,
}

/// A parsed config plus the text it came from.
#[derive(Debug, Clone)]
pub struct LoadedConfig {
    pub config: PipelineConfig,
    pub text: String,
    /// Directory relative paths were resolved against.
    pub base_dir: PathBuf,
}

impl PipelineConfig {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    /// Reads, parses, resolves and checks a config file.
    pub fn load(path: impl AsRef<Path>) -> Result<LoadedConfig> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::from_text(&text, &base_dir)
    }

    /// Parses `text` as if it were a file in `base_dir`.
    pub fn from_text(text: &str, base_dir: &Path) -> Result<LoadedConfig> {
        let mut config = Self::parse(text)?;
        config.resolve_paths(base_dir);
        config.validate()?;
        Ok(LoadedConfig {
            config,
            text: text.to_string(),
            base_dir: base_dir.to_path_buf(),
        })
    }

    fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        let paths = &mut self.paths;
        for p in [
            &mut paths.dump,
            &mut paths.registry,
            &mut paths.stopwords,
            &mut paths.lemmas,
            &mut paths.slang,
            &mut paths.out,
        ] {
            fix(p);
        }
        for p in [&mut paths.cases, &mut paths.events, &mut paths.blocklist]
            .into_iter()
            .flatten()
        {
            fix(p);
        }
        self.keywords.values_mut().for_each(fix);
    }

    fn validate(&self) -> Result<()> {
        self.range()?;
        let scrape = self.scrape_date();
        if !self.range()?.contains(scrape) {
            return Err(Error::Config(format!(
                "scrape_date {scrape} outside {}..={}",
                self.start_date, self.end_date
            )));
        }
        if self.query_terms.iter().all(|t| t.trim().is_empty()) {
            return Err(Error::Config("query_terms must name at least one term".into()));
        }
        if self.keywords.is_empty() {
            return Err(Error::Config("no keyword files configured".into()));
        }
        let p = &self.paths;
        let required = [&p.dump, &p.registry, &p.stopwords, &p.lemmas, &p.slang];
        let optional = [&p.cases, &p.events, &p.blocklist];
        for path in required
            .into_iter()
            .chain(optional.into_iter().flatten())
            .chain(self.keywords.values())
        {
            if !path.is_file() {
                return Err(Error::Config(format!("{} does not exist", path.display())));
            }
        }
        if self.truncation.window < 1 {
            return Err(Error::Config("truncation.window must be at least 1".into()));
        }
        self.candidates()?;
        self.policies()?;
        Ok(())
    }

    pub fn range(&self) -> Result<DateRange> {
        DateRange::new(self.start_date, self.end_date).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn scrape_date(&self) -> NaiveDate {
        self.scrape_date.unwrap_or(self.end_date)
    }

    pub fn candidates(&self) -> Result<Vec<SmoothingSpec>> {
        match &self.smoothing.candidates {
            None => Ok(default_candidates()),
            Some(list) if list.is_empty() => Err(Error::Config("smoothing.candidates is empty".into())),
            Some(list) => list
                .iter()
                .map(|s| s.parse().map_err(|e: Error| Error::Config(e.to_string())))
                .collect(),
        }
    }

    fn policies(&self) -> Result<Policies> {
        let parse = |s: &str| s.parse::<ScriptPolicy>().map_err(|e| Error::Config(e.to_string()));
        let policies = self
            .normalize
            .policies
            .iter()
            .map(|(lang, p)| Ok((lang.clone(), parse(p)?)))
            .collect::<Result<Vec<_>>>()?;
        let fallback = self.normalize.fallback.as_deref().map(parse).transpose()?;
        Ok((policies, fallback))
    }

    /// Loads the lexicons into a validated normalizer.
    pub fn normalizer(&self) -> Result<NormalizerConfig> {
        let (policies, fallback) = self.policies()?;
        let p = &self.paths;
        let config = NormalizerConfig::from_files(&p.stopwords, &p.lemmas, &p.slang, policies)?;
        Ok(match fallback {
            Some(f) => config.with_fallback_policy(f),
            None => config,
        })
    }
}
