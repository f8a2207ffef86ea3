//! Keyword discovery: n-gram frequencies, LDA topics, skip-gram embeddings,
//! and the per-region shortlists assembled from them.

mod assemble;
pub mod lda;
pub mod ngram;
pub mod word2vec;

use std::collections::BTreeSet;
use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use assemble::{assemble_keywords, ExpansionParams};
pub use lda::{lda_fit, lda_top_words, GibbsSampler, LdaParams, TopicModel};
pub use ngram::{build_ngram_table, NGramTable};
pub use word2vec::{w2v_nearest, w2v_train, EmbeddingModel, Word2VecParams};

/// How a phrase got into a keyword set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KeywordSource {
    Seed,
    Lda,
    W2v,
    Manual,
}

impl KeywordSource {
    pub fn as_str(self) -> &'static str {
        match self {
            KeywordSource::Seed => "seed",
            KeywordSource::Lda => "lda",
            KeywordSource::W2v => "w2v",
            KeywordSource::Manual => "manual",
        }
    }
}

impl fmt::Display for KeywordSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for KeywordSource {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "seed" => Ok(KeywordSource::Seed),
            "lda" => Ok(KeywordSource::Lda),
            "w2v" => Ok(KeywordSource::W2v),
            "manual" => Ok(KeywordSource::Manual),
            other => Err(Error::InvalidArgument(format!("unknown keyword provenance {other:?}"))),
        }
    }
}

/// A lowercase phrase of one to three space-separated tokens.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Keyword {
    phrase: String,
    pub source: KeywordSource,
}

impl Keyword {
    pub fn new(phrase: &str, source: KeywordSource) -> Result<Self> {
        let tokens: Vec<String> = phrase.split_whitespace().map(str::to_lowercase).collect();
        if !(1..=3).contains(&tokens.len()) {
            return Err(Error::InvalidArgument(format!(
                "keyword {phrase:?} must have 1 to 3 tokens"
            )));
        }
        Ok(Keyword {
            phrase: tokens.join(" "),
            source,
        })
    }

    pub fn phrase(&self) -> &str {
        &self.phrase
    }

    pub fn tokens(&self) -> impl Iterator<Item = &str> {
        self.phrase.split(' ')
    }
}

/// A region's shortlist of surveillance keywords.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KeywordSet {
    pub region: String,
    keywords: Vec<Keyword>,
}

impl KeywordSet {
    pub fn new(region: impl Into<String>, keywords: Vec<Keyword>) -> Result<Self> {
        if keywords.is_empty() {
            return Err(Error::InvalidArgument("keyword set is empty".into()));
        }
        let mut seen = BTreeSet::new();
        for k in &keywords {
            if !seen.insert(k.phrase.as_str()) {
                return Err(Error::InvalidArgument(format!("duplicate keyword {:?}", k.phrase)));
            }
        }
        Ok(KeywordSet {
            region: region.into(),
            keywords,
        })
    }

    /// Builds a set of hand-picked phrases, all tagged `source`.
    pub fn from_phrases<S: AsRef<str>>(
        region: impl Into<String>,
        phrases: &[S],
        source: KeywordSource,
    ) -> Result<Self> {
        let keywords = phrases
            .iter()
            .map(|p| Keyword::new(p.as_ref(), source))
            .collect::<Result<_>>()?;
        KeywordSet::new(region, keywords)
    }

    pub fn keywords(&self) -> &[Keyword] {
        &self.keywords
    }

    pub fn phrases(&self) -> impl Iterator<Item = &str> {
        self.keywords.iter().map(Keyword::phrase)
    }

    pub fn contains(&self, phrase: &str) -> bool {
        self.keywords.iter().any(|k| k.phrase == phrase)
    }

    pub fn len(&self) -> usize {
        self.keywords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keywords.is_empty()
    }

    /// Copy of this set relabelled for another region.
    pub fn for_region(&self, region: impl Into<String>) -> KeywordSet {
        KeywordSet {
            region: region.into(),
            keywords: self.keywords.clone(),
        }
    }

    /// `phrase<TAB>provenance` per line.
    pub fn to_tsv(&self) -> String {
        self.keywords
            .iter()
            .map(|k| format!("{}\t{}\n", k.phrase, k.source))
            .collect()
    }

    /// Parses the TSV form. A line without a provenance column is `manual`.
    pub fn from_tsv(region: impl Into<String>, text: &str, origin: &Path) -> Result<Self> {
        let mut keywords = Vec::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let mut cols = line.split('\t');
            let phrase = cols.next().unwrap_or_default();
            let source = match cols.next() {
                Some(s) => s
                    .parse()
                    .map_err(|e: Error| Error::parse(origin, i + 1, e.to_string()))?,
                None => KeywordSource::Manual,
            };
            if cols.next().is_some() {
                return Err(Error::parse(origin, i + 1, "too many columns"));
            }
            keywords.push(Keyword::new(phrase, source).map_err(|e| Error::parse(origin, i + 1, e.to_string()))?);
        }
        KeywordSet::new(region, keywords)
    }

    pub fn load(region: impl Into<String>, path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_tsv(region, &text, path)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_tsv()).map_err(|e| Error::io(path, e))
    }
}
