//! Daily Word Count and Volume signals.
//!
//! Keyword hits are counted per occurrence by a greedy left-to-right scan
//! that tries longer phrases first and never reuses a token, so a day's
//! keyword count can never exceed its token volume. A single-token phrase
//! also matches its hashtag (`#covid` for `covid`), and a multi-token phrase
//! also matches its underscore-joined form (`rumah_sakit` for
//! `rumah sakit`), which is what slang normalization produces.

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::dates::DateRange;
use crate::error::{Error, Result};
use crate::keywords::{Keyword, KeywordSet};
use crate::normalize::{lemmatize, normalize_codemixed, remove_stopwords, tokenize, NormalizerConfig, TokenizedTweet};
use crate::series::{DailySeries, SignalKind};

/// A normalized tweet placed on its region's local calendar.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatedTweet {
    pub region: String,
    pub date: NaiveDate,
    /// Whitespace-separated words in the original text.
    pub raw_words: usize,
    #[serde(flatten)]
    pub tweet: TokenizedTweet,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CountMode {
    /// Every keyword occurrence counts.
    #[default]
    Occurrences,
    /// A tweet counts once if it contains any keyword.
    TweetPresence,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VolumeMode {
    /// Tokens left after cleaning.
    #[default]
    PostCleaning,
    /// Words in the raw text.
    PreCleaning,
}

// Length in tokens of the match of `phrase` at `tokens[i..]`, if any.
fn match_at(tokens: &[String], i: usize, phrase: &[&str]) -> Option<usize> {
    let tok = tokens[i].as_str();
    if phrase.len() == 1 {
        let p = phrase[0];
        return (tok == p || tok.strip_prefix('#') == Some(p)).then_some(1);
    }
    let end = i + phrase.len();
    if end <= tokens.len() && tokens[i..end].iter().zip(phrase).all(|(t, p)| t == p) {
        return Some(phrase.len());
    }
    let mut parts = tok.split('_');
    let joined = phrase.iter().all(|p| parts.next() == Some(p)) && parts.next().is_none();
    joined.then_some(1)
}

/// Non-overlapping occurrences of one phrase, scanning left to right.
pub fn match_keyword_count(tokens: &[String], phrase: &Keyword) -> usize {
    let phrase: Vec<&str> = phrase.tokens().collect();
    let mut i = 0;
    let mut hits = 0;
    while i < tokens.len() {
        match match_at(tokens, i, &phrase) {
            Some(len) => {
                hits += 1;
                i += len;
            }
            None => i += 1,
        }
    }
    hits
}

/// Occurrences of any phrase of the set, longest phrase first at each
/// position, each token used at most once.
pub fn count_keyword_hits(tokens: &[String], keywords: &KeywordSet) -> usize {
    let mut phrases: Vec<Vec<&str>> = keywords.keywords().iter().map(|k| k.tokens().collect()).collect();
    phrases.sort_by_key(|p| std::cmp::Reverse(p.len()));
    let mut i = 0;
    let mut hits = 0;
    while i < tokens.len() {
        match phrases.iter().find_map(|p| match_at(tokens, i, p)) {
            Some(len) => {
                hits += 1;
                i += len;
            }
            None => i += 1,
        }
    }
    hits
}

/// Passes each phrase through the tokenizer, stopword, slang and lemma
/// stages that tweets go through, so `Beds` matches the lemmatized `bed`.
/// Slang targets joined with `_` are split back into words. Phrases that
/// clean to nothing are dropped and later duplicates are merged.
pub fn normalize_keywords(keywords: &KeywordSet, config: &NormalizerConfig) -> Result<KeywordSet> {
    let mut out: Vec<Keyword> = Vec::new();
    for k in keywords.keywords() {
        let tokens = remove_stopwords(&tokenize(k.phrase()), config.stopwords());
        let tokens = lemmatize(&normalize_codemixed(&tokens, config.slang()), config.lemmas());
        let words: Vec<&str> = tokens
            .iter()
            .flat_map(|t| t.split('_'))
            .filter(|w| !w.is_empty())
            .collect();
        if words.is_empty() {
            continue;
        }
        let phrase = Keyword::new(&words.join(" "), k.source)?;
        if !out.iter().any(|e| e.phrase() == phrase.phrase()) {
            out.push(phrase);
        }
    }
    KeywordSet::new(keywords.region.clone(), out)
}

fn check_region(region: &str, tweets: &[DatedTweet]) -> Result<()> {
    match tweets.iter().find(|t| t.region != region) {
        Some(t) => Err(Error::MixedRegions(region.to_string(), t.region.clone())),
        None => Ok(()),
    }
}

/// Keyword hits per local date over `range`; days without tweets are 0.
pub fn keyword_count_per_day(
    region: &str,
    tweets: &[DatedTweet],
    keywords: &KeywordSet,
    range: DateRange,
    mode: CountMode,
) -> Result<DailySeries> {
    check_region(region, tweets)?;
    let mut series = DailySeries::zeros(region, SignalKind::KeywordCount, range);
    for t in tweets {
        let hits = count_keyword_hits(&t.tweet.tokens, keywords);
        let value = match mode {
            CountMode::Occurrences => hits,
            CountMode::TweetPresence => usize::from(hits > 0),
        };
        series.add_at(t.date, value as f64)?;
    }
    Ok(series)
}

/// Words per local date over `range`; days without tweets are 0.
pub fn volume_per_day(region: &str, tweets: &[DatedTweet], range: DateRange, mode: VolumeMode) -> Result<DailySeries> {
    check_region(region, tweets)?;
    let mut series = DailySeries::zeros(region, SignalKind::Volume, range);
    for t in tweets {
        let words = match mode {
            VolumeMode::PostCleaning => t.tweet.tokens.len(),
            VolumeMode::PreCleaning => t.raw_words,
        };
        series.add_at(t.date, words as f64)?;
    }
    Ok(series)
}
