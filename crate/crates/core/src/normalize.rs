//! Tweet cleaning: URL removal, script filtering, tweet-aware tokenization,
//! stopword removal, code-mixed slang normalization and lexicon lemmatization.
//!
//! [`run_normalizer`] applies the stages in a fixed order:
//!
//! 1. [`strip_urls`]
//! 2. [`apply_script_policy`] (followed by a second URL pass, since deleting
//!    characters can expose a link)
//! 3. [`tokenize`]
//! 4. [`remove_stopwords`]
//! 5. [`normalize_codemixed`]
//! 6. [`lemmatize`]
//!
//! Each stage is idempotent, and [`NormalizerConfig::new`] rejects lexicons
//! that would make the composition non-idempotent (a lemma that is itself a
//! stopword, a slang target that is another slang key, and so on).

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::TweetRecord;

/// Writing systems that may survive script filtering besides ASCII.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Script {
    Bengali,
}

impl Script {
    fn contains(self, c: char) -> bool {
        match self {
            // Bengali block, the shared danda marks, and ZWNJ/ZWJ used inside words
            Script::Bengali => matches!(
                c,
                '\u{0980}'..='\u{09FF}' | '\u{0964}' | '\u{0965}' | '\u{200C}' | '\u{200D}'
            ),
        }
    }
}

/// Which characters survive for a given language tag.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScriptPolicy {
    LatinOnly,
    AllowScript(Script),
}

impl fmt::Display for ScriptPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScriptPolicy::LatinOnly => f.write_str("latin_only"),
            ScriptPolicy::AllowScript(Script::Bengali) => f.write_str("allow_script(bengali)"),
        }
    }
}

impl FromStr for ScriptPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "latin_only" => Ok(ScriptPolicy::LatinOnly),
            "allow_script(bengali)" => Ok(ScriptPolicy::AllowScript(Script::Bengali)),
            other => Err(Error::Config(format!("unknown script policy {other:?}"))),
        }
    }
}

/// Tokens removed by each stage of [`run_normalizer`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageDrops {
    pub urls: usize,
    pub script: usize,
    pub tokenize: usize,
    pub stopwords: usize,
}

/// Normalized tokens of one tweet.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenizedTweet {
    pub source_id: String,
    pub tokens: Vec<String>,
    pub dropped: StageDrops,
}

/// Lexicons and script policies for the cleaning pipeline.
#[derive(Debug, Clone, Default)]
pub struct NormalizerConfig {
    stopwords: BTreeSet<String>,
    lemmas: BTreeMap<String, String>,
    slang: BTreeMap<String, String>,
    policies: BTreeMap<String, ScriptPolicy>,
    fallback_policy: Option<ScriptPolicy>,
}

impl NormalizerConfig {
    /// Validates and assembles a configuration.
    ///
    /// Keys are case-folded; multi-word slang targets are joined with `_`.
    /// Rejects lexicons whose outputs would be rewritten or removed by a
    /// second pass of the pipeline.
    pub fn new(
        stopwords: impl IntoIterator<Item = String>,
        lemmas: impl IntoIterator<Item = (String, String)>,
        slang: impl IntoIterator<Item = (String, String)>,
        policies: impl IntoIterator<Item = (String, ScriptPolicy)>,
    ) -> Result<Self> {
        let stopwords: BTreeSet<String> = stopwords.into_iter().map(|w| w.trim().to_lowercase()).collect();
        let lemmas = canonical_map("lemma", lemmas)?;
        let slang = canonical_map("slang", slang)?;
        let config = NormalizerConfig {
            stopwords,
            lemmas,
            slang,
            policies: policies.into_iter().map(|(k, v)| (k.to_lowercase(), v)).collect(),
            fallback_policy: None,
        };
        config.validate()?;
        Ok(config)
    }

    /// Policy used for language tags without an explicit entry.
    pub fn with_fallback_policy(mut self, policy: ScriptPolicy) -> Self {
        self.fallback_policy = Some(policy);
        self
    }

    pub fn from_files(
        stopwords: impl AsRef<Path>,
        lemmas: impl AsRef<Path>,
        slang: impl AsRef<Path>,
        policies: impl IntoIterator<Item = (String, ScriptPolicy)>,
    ) -> Result<Self> {
        Self::new(
            load_word_list(stopwords)?,
            load_tsv_map(lemmas)?,
            load_tsv_map(slang)?,
            policies,
        )
    }

    pub fn stopwords(&self) -> &BTreeSet<String> {
        &self.stopwords
    }

    pub fn lemmas(&self) -> &BTreeMap<String, String> {
        &self.lemmas
    }

    pub fn slang(&self) -> &BTreeMap<String, String> {
        &self.slang
    }

    pub fn policy_for(&self, lang: &str) -> Result<ScriptPolicy> {
        self.policies
            .get(&lang.to_lowercase())
            .copied()
            .or(self.fallback_policy)
            .ok_or_else(|| Error::UnknownScriptPolicy(lang.to_string()))
    }

    fn validate(&self) -> Result<()> {
        let bad = |name: &str, reason: String| {
            Err(Error::Lexicon {
                name: name.to_string(),
                reason,
            })
        };
        for (name, map) in [("lemma", &self.lemmas), ("slang", &self.slang)] {
            for (k, v) in map {
                if let Some(next) = map.get(v) {
                    if next != v {
                        return bad(name, format!("{k} -> {v} -> {next} is not idempotent"));
                    }
                }
                if self.stopwords.contains(v) {
                    return bad(name, format!("{k} -> {v}: target is a stopword"));
                }
                if tokenize(v) != [v.as_str()] || is_url(v) {
                    return bad(name, format!("{k} -> {v}: target is not a stable token"));
                }
            }
        }
        for (k, v) in &self.lemmas {
            if let Some(s) = self.slang.get(v) {
                if s != v {
                    return bad("lemma", format!("{k} -> {v} collides with slang entry {v} -> {s}"));
                }
            }
        }
        Ok(())
    }
}

fn canonical_map(name: &str, entries: impl IntoIterator<Item = (String, String)>) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (k, v) in entries {
        let key = k.trim().to_lowercase();
        let value = v.split_whitespace().collect::<Vec<_>>().join("_").to_lowercase();
        if key.is_empty() || key.contains(char::is_whitespace) || value.is_empty() {
            return Err(Error::Lexicon {
                name: name.to_string(),
                reason: format!("bad entry {k:?} -> {v:?}"),
            });
        }
        map.insert(key, value);
    }
    Ok(map)
}

/// One word per line; blank lines ignored.
pub fn load_word_list(path: impl AsRef<Path>) -> Result<BTreeSet<String>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .map(str::to_lowercase)
        .collect())
}

/// Two tab-separated columns per line; blank lines ignored.
pub fn load_tsv_map(path: impl AsRef<Path>) -> Result<BTreeMap<String, String>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut map = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let mut cols = line.split('\t');
        match (cols.next(), cols.next(), cols.next()) {
            (Some(k), Some(v), None) if !k.trim().is_empty() && !v.trim().is_empty() => {
                map.insert(k.trim().to_string(), v.trim().to_string());
            }
            _ => return Err(Error::parse(path, i + 1, "expected two tab-separated columns")),
        }
    }
    Ok(map)
}

fn is_punct(c: char) -> bool {
    c.is_ascii_punctuation()
        || matches!(
            c,
            '…' | '“'
                | '”'
                | '‘'
                | '’'
                | '«'
                | '»'
                | '¡'
                | '¿'
                | '–'
                | '—'
                | '।'
                | '॥'
                | '、'
                | '。'
                | '，'
                | '！'
                | '？'
        )
}

// The part of a whitespace-delimited piece the tokenizer keeps, before case folding.
fn token_core(piece: &str) -> &str {
    let mut s = piece.trim_end_matches(is_punct);
    loop {
        let mut chars = s.chars();
        match chars.next() {
            Some('#' | '@') => match chars.next() {
                Some(next) if !is_punct(next) => return s,
                _ => s = &s[1..],
            },
            Some(c) if is_punct(c) => s = &s[c.len_utf8()..],
            _ => return s,
        }
    }
}

fn is_url(piece: &str) -> bool {
    let core = token_core(piece).to_ascii_lowercase();
    core.starts_with("http://") || core.starts_with("https://") || core.starts_with("www.")
}

fn strip_urls_counted(text: &str) -> (String, usize) {
    let mut out = String::with_capacity(text.len());
    let mut gap = String::new();
    let mut removed = 0;
    let mut dropped_since_kept = false;
    for piece in split_keep_whitespace(text) {
        if piece.starts_with(char::is_whitespace) {
            gap.push_str(piece);
        } else if is_url(piece) {
            removed += 1;
            dropped_since_kept = true;
        } else {
            if dropped_since_kept {
                if !out.is_empty() {
                    out.push(' ');
                }
            } else {
                out.push_str(&gap);
            }
            out.push_str(piece);
            gap.clear();
            dropped_since_kept = false;
        }
    }
    if !dropped_since_kept {
        out.push_str(&gap);
    }
    if removed == 0 {
        return (text.to_string(), 0);
    }
    (out, removed)
}

fn split_keep_whitespace(text: &str) -> impl Iterator<Item = &str> {
    let mut rest = text;
    std::iter::from_fn(move || {
        let first = rest.chars().next()?;
        let ws = first.is_whitespace();
        let end = rest
            .char_indices()
            .find(|&(_, c)| c.is_whitespace() != ws)
            .map_or(rest.len(), |(i, _)| i);
        let (head, tail) = rest.split_at(end);
        rest = tail;
        Some(head)
    })
}

/// Removes `http(s)://` and `www.` links, collapsing the whitespace around
/// each removed link to one space. Text without links is returned unchanged.
pub fn strip_urls(text: &str) -> String {
    strip_urls_counted(text).0
}

/// Deletes characters the language's policy does not allow. Printable ASCII
/// always survives; any Unicode whitespace becomes a plain space so that
/// words stay separated.
pub fn apply_script_policy(text: &str, lang: &str, config: &NormalizerConfig) -> Result<String> {
    let policy = config.policy_for(lang)?;
    Ok(filter_script(text, policy))
}

pub fn filter_script(text: &str, policy: ScriptPolicy) -> String {
    text.chars()
        .filter_map(|c| {
            if (' '..='~').contains(&c) {
                Some(c)
            } else if c.is_whitespace() {
                Some(if c.is_ascii() { c } else { ' ' })
            } else {
                match policy {
                    ScriptPolicy::AllowScript(script) if script.contains(c) => Some(c),
                    _ => None,
                }
            }
        })
        .collect()
}

/// Splits on whitespace, keeps `#tag` and `@user` intact, strips leading and
/// trailing punctuation, lowercases, and drops empty tokens.
///
/// ```
/// use hospital_burden::normalize::tokenize;
/// assert_eq!(tokenize("#COVID19 @MoHFW help!"), ["#covid19", "@mohfw", "help"]);
/// ```
pub fn tokenize(text: &str) -> Vec<String> {
    text.split(char::is_whitespace)
        .map(token_core)
        .filter(|core| !core.is_empty())
        .map(str::to_lowercase)
        .collect()
}

pub fn remove_stopwords(tokens: &[String], stopwords: &BTreeSet<String>) -> Vec<String> {
    tokens.iter().filter(|t| !stopwords.contains(*t)).cloned().collect()
}

pub fn lemmatize(tokens: &[String], lemmas: &BTreeMap<String, String>) -> Vec<String> {
    substitute(tokens, lemmas)
}

/// Replaces slang and contracted forms with canonical tokens, e.g. `rs` →
/// `rumah_sakit`.
pub fn normalize_codemixed(tokens: &[String], slang: &BTreeMap<String, String>) -> Vec<String> {
    substitute(tokens, slang)
}

fn substitute(tokens: &[String], map: &BTreeMap<String, String>) -> Vec<String> {
    tokens.iter().map(|t| map.get(t).unwrap_or(t).clone()).collect()
}

/// Runs the full cleaning pipeline on one record.
pub fn run_normalizer(record: &TweetRecord, config: &NormalizerConfig) -> Result<TokenizedTweet> {
    let policy = config.policy_for(&record.lang)?;
    let mut dropped = StageDrops::default();

    let (text, urls) = strip_urls_counted(&record.text);
    dropped.urls += urls;

    let before = text.split_whitespace().count();
    let text = filter_script(&text, policy);
    dropped.script = before.saturating_sub(text.split_whitespace().count());
    let (text, urls) = strip_urls_counted(&text);
    dropped.urls += urls;

    let pieces = text.split_whitespace().count();
    let tokens = tokenize(&text);
    dropped.tokenize = pieces - tokens.len();

    let kept = remove_stopwords(&tokens, &config.stopwords);
    dropped.stopwords = tokens.len() - kept.len();

    let tokens = lemmatize(&normalize_codemixed(&kept, &config.slang), &config.lemmas);
    Ok(TokenizedTweet {
        source_id: record.id.clone(),
        tokens,
        dropped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn toks(words: &[&str]) -> Vec<String> {
        words.iter().map(|s| s.to_string()).collect()
    }

    fn map(pairs: &[(&str, &str)]) -> BTreeMap<String, String> {
        pairs.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect()
    }

    fn config() -> NormalizerConfig {
        NormalizerConfig::new(
            toks(&["the", "is", "an", "are", "yang", "di"]),
            map(&[("hospitals", "hospital"), ("beds", "bed")]),
            map(&[("rs", "rumah sakit"), ("bgt", "banget")]),
            [
                ("en".to_string(), ScriptPolicy::LatinOnly),
                ("id".to_string(), ScriptPolicy::LatinOnly),
                ("bn".to_string(), ScriptPolicy::AllowScript(Script::Bengali)),
            ],
        )
        .unwrap()
    }

    #[test]
    fn urls() {
        assert_eq!(strip_urls("full https://t.co/abc wards"), "full wards");
        assert_eq!(strip_urls("www.example.com beds gone"), "beds gone");
        assert_eq!(strip_urls("  no links  here "), "  no links  here ");
        assert_eq!(strip_urls("see http://x.y"), "see");
        assert_eq!(strip_urls("(https://x.y) beds"), "beds");
    }

    #[test]
    fn script_policy() {
        let c = config();
        assert_eq!(apply_script_policy("beds 😷 full", "en", &c).unwrap(), "beds  full");
        assert_eq!(apply_script_policy("plain ascii!", "en", &c).unwrap(), "plain ascii!");
        let bangla = "হাসপাতালে কোনো শয্যা খালি নেই।";
        assert_eq!(apply_script_policy(bangla, "bn", &c).unwrap(), bangla);
        assert_eq!(apply_script_policy(bangla, "en", &c).unwrap(), "    ");
        assert!(matches!(
            apply_script_policy("x", "fr", &c),
            Err(Error::UnknownScriptPolicy(l)) if l == "fr"
        ));
    }

    #[test]
    fn tokenizer() {
        assert_eq!(tokenize("ICU beds full!"), ["icu", "beds", "full"]);
        assert_eq!(tokenize("#COVID19 @MoHFW help"), ["#covid19", "@mohfw", "help"]);
        assert!(tokenize("").is_empty());
        assert_eq!(
            tokenize("(#tag), ## @ ... don't covid-19."),
            ["#tag", "don't", "covid-19"]
        );
        assert_eq!(tokenize("হাসপাতাল।"), ["হাসপাতাল"]);
    }

    #[test]
    fn stopwords() {
        let sw: BTreeSet<String> = toks(&["the", "is", "an"]).into_iter().collect();
        assert_eq!(
            remove_stopwords(&toks(&["the", "hospital", "is", "full"]), &sw),
            ["hospital", "full"]
        );
        assert_eq!(remove_stopwords(&toks(&["a", "b"]), &BTreeSet::new()), ["a", "b"]);
        assert!(remove_stopwords(&toks(&["the", "is"]), &sw).is_empty());
    }

    #[test]
    fn lemmas_and_slang() {
        let l = map(&[("hospitals", "hospital"), ("beds", "bed")]);
        assert_eq!(
            lemmatize(&toks(&["hospitals", "beds", "icu"]), &l),
            ["hospital", "bed", "icu"]
        );
        let c = config();
        assert_eq!(
            normalize_codemixed(&toks(&["rs", "penuh"]), c.slang()),
            ["rumah_sakit", "penuh"]
        );
        assert_eq!(normalize_codemixed(&toks(&["rs"]), &BTreeMap::new()), ["rs"]);
        let selfmap = map(&[("ok", "ok")]);
        assert_eq!(normalize_codemixed(&toks(&["ok"]), &selfmap), ["ok"]);
    }

    #[test]
    fn config_rejects_unstable_lexicons() {
        let none = || Vec::<(String, String)>::new();
        let chain = NormalizerConfig::new(vec![], map(&[("a", "b"), ("b", "c")]), none(), []);
        assert!(chain.is_err());
        let to_stop = NormalizerConfig::new(toks(&["be"]), map(&[("was", "be")]), none(), []);
        assert!(to_stop.is_err());
        let cross = NormalizerConfig::new(vec![], map(&[("x", "y")]), map(&[("y", "z")]), []);
        assert!(cross.is_err());
        let punct = NormalizerConfig::new(vec![], map(&[("x", "y!")]), none(), []);
        assert!(punct.is_err());
    }

    #[test]
    fn pipeline_english() {
        let r = TweetRecord {
            id: "1".into(),
            timestamp: "2020-04-01T00:00:00Z".parse().unwrap(),
            region: "DL".into(),
            text: "The hospitals are FULL https://t.co/x".into(),
            lang: "en".into(),
        };
        let t = run_normalizer(&r, &config()).unwrap();
        assert_eq!(t.tokens, ["hospital", "full"]);
        assert_eq!(t.source_id, "1");
        assert_eq!(
            t.dropped,
            StageDrops {
                urls: 1,
                script: 0,
                tokenize: 0,
                stopwords: 2
            }
        );
    }

    #[test]
    fn pipeline_indonesian_and_empty() {
        let mut r = TweetRecord {
            id: "2".into(),
            timestamp: "2020-04-01T00:00:00Z".parse().unwrap(),
            region: "JK".into(),
            text: "RS di Jakarta penuh bgt 😭".into(),
            lang: "id".into(),
        };
        let t = run_normalizer(&r, &config()).unwrap();
        assert_eq!(t.tokens, ["rumah_sakit", "jakarta", "penuh", "banget"]);
        assert_eq!(t.dropped.script, 1);
        r.text.clear();
        assert!(run_normalizer(&r, &config()).unwrap().tokens.is_empty());
    }

    proptest! {
        #[test]
        fn tokens_are_nonempty_and_whitespace_free(s in "\\PC{0,60}") {
            for t in tokenize(&s) {
                prop_assert!(!t.is_empty());
                prop_assert!(!t.contains(char::is_whitespace));
            }
        }

        #[test]
        fn stages_are_idempotent(s in "\\PC{0,60}") {
            let once = strip_urls(&s);
            prop_assert!(once.chars().count() <= s.chars().count());
            prop_assert_eq!(strip_urls(&once), once.clone());
            let f = filter_script(&s, ScriptPolicy::LatinOnly);
            prop_assert_eq!(filter_script(&f, ScriptPolicy::LatinOnly), f);
            let t = tokenize(&s);
            prop_assert_eq!(tokenize(&t.join(" ")), t);
        }

        #[test]
        fn pipeline_is_idempotent(s in "(\\PC|[ #@.:/]|http|www|rs |the ){0,40}", lang in "(en|id|bn)") {
            let c = config();
            let r = TweetRecord {
                id: "x".into(),
                timestamp: "2020-04-01T00:00:00Z".parse().unwrap(),
                region: "DL".into(),
                text: s,
                lang,
            };
            let first = run_normalizer(&r, &c).unwrap();
            let again = TweetRecord { text: first.tokens.join(" "), ..r };
            prop_assert_eq!(run_normalizer(&again, &c).unwrap().tokens, first.tokens);
        }
    }
}
