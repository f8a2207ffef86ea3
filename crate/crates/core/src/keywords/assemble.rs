use std::collections::BTreeSet;

use crate::error::{Error, Result};

use super::lda::{lda_top_words, TopicModel};
use super::word2vec::{w2v_nearest, EmbeddingModel};
use super::{Keyword, KeywordSet, KeywordSource};

/// Thresholds for growing a seed list.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpansionParams {
    /// A topic is considered when some seed token's weight in it exceeds this;
    /// only its top words above the same floor are added.
    pub weight_floor: f64,
    /// Embedding neighbours must have cosine strictly above this.
    pub sim_floor: f64,
    /// How many top words per qualifying topic are inspected.
    pub topic_words: usize,
    /// How many nearest neighbours per seed token are inspected.
    pub neighbors: usize,
    /// Expansion terms rejected on review.
    pub blocklist: BTreeSet<String>,
}

impl Default for ExpansionParams {
    fn default() -> Self {
        ExpansionParams {
            weight_floor: 0.05,
            sim_floor: 0.6,
            topic_words: 10,
            neighbors: 10,
            blocklist: BTreeSet::new(),
        }
    }
}

/// Seeds, plus top words of topics where a seed token carries weight, plus
/// embedding neighbours of seed tokens. Mentions and blocklisted terms are
/// never added; hashtags are added without their `#`.
pub fn assemble_keywords<S: AsRef<str>>(
    seeds: &[S],
    topics: &TopicModel,
    embedding: &EmbeddingModel,
    params: &ExpansionParams,
    region: &str,
) -> Result<KeywordSet> {
    if seeds.is_empty() {
        return Err(Error::InvalidArgument("no seed keywords".into()));
    }
    for floor in [params.weight_floor, params.sim_floor] {
        if !(0.0..=1.0).contains(&floor) {
            return Err(Error::InvalidArgument(format!("floor {floor} outside [0, 1]")));
        }
    }

    let mut keywords: Vec<Keyword> = Vec::new();
    let push = |keywords: &mut Vec<Keyword>, k: Keyword| {
        if !keywords.iter().any(|e| e.phrase == k.phrase) {
            keywords.push(k);
        }
    };
    for s in seeds {
        push(&mut keywords, Keyword::new(s.as_ref(), KeywordSource::Seed)?);
    }
    let seed_tokens: Vec<String> = {
        let mut seen = BTreeSet::new();
        keywords
            .iter()
            .flat_map(|k| k.tokens().map(str::to_string).collect::<Vec<_>>())
            .filter(|t| seen.insert(t.clone()))
            .collect()
    };

    let candidate = |word: &str, source| -> Option<Keyword> {
        if word.starts_with('@') {
            return None;
        }
        let word = word.trim_start_matches('#');
        if word.is_empty() || params.blocklist.contains(word) {
            return None;
        }
        Keyword::new(word, source).ok()
    };

    for t in 0..topics.topics() {
        let relevant = seed_tokens
            .iter()
            .any(|s| topics.weight(t, s).is_some_and(|w| w > params.weight_floor));
        if !relevant {
            continue;
        }
        for (word, weight) in lda_top_words(topics, t, params.topic_words.max(1))? {
            if weight > params.weight_floor {
                if let Some(k) = candidate(&word, KeywordSource::Lda) {
                    push(&mut keywords, k);
                }
            }
        }
    }

    if params.neighbors > 0 {
        for s in &seed_tokens {
            if !embedding.contains(s) {
                continue;
            }
            for (word, sim) in w2v_nearest(embedding, s, params.neighbors)? {
                if sim > params.sim_floor {
                    if let Some(k) = candidate(&word, KeywordSource::W2v) {
                        push(&mut keywords, k);
                    }
                }
            }
        }
    }

    KeywordSet::new(region, keywords)
}
