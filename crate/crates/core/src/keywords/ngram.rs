use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::normalize::TokenizedTweet;

/// Frequencies of contiguous token n-grams. N-grams never span two tweets.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NGramTable {
    n: usize,
    counts: BTreeMap<Vec<String>, u64>,
    total: u64,
}

impl NGramTable {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn counts(&self) -> &BTreeMap<Vec<String>, u64> {
        &self.counts
    }

    pub fn count(&self, gram: &[&str]) -> u64 {
        let key: Vec<String> = gram.iter().map(|s| s.to_string()).collect();
        self.counts.get(&key).copied().unwrap_or(0)
    }

    /// The `m` most frequent n-grams, ties in lexicographic order.
    pub fn most_frequent(&self, m: usize) -> Vec<(&[String], u64)> {
        let mut all: Vec<_> = self.counts.iter().map(|(k, &v)| (k.as_slice(), v)).collect();
        all.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
        all.truncate(m);
        all
    }
}

pub fn build_ngram_table(tweets: &[TokenizedTweet], n: usize) -> Result<NGramTable> {
    if n < 1 {
        return Err(Error::InvalidArgument("n-gram order must be at least 1".into()));
    }
    let mut counts = BTreeMap::new();
    let mut total = 0;
    for tweet in tweets {
        for gram in tweet.tokens.windows(n) {
            *counts.entry(gram.to_vec()).or_insert(0) += 1;
            total += 1;
        }
    }
    Ok(NGramTable { n, counts, total })
}
