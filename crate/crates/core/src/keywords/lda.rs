//! Latent Dirichlet allocation fitted by collapsed Gibbs sampling.
//!
//! Topic and word distributions are integrated out; each sweep resamples
//! every token's topic from
//!
//! ```text
//! p(z = k | rest) ∝ (n_dk + α) · (n_kw + β) / (n_k + Vβ)
//! ```
//!
//! with the token's own assignment removed from the counts. The returned
//! estimates are the posterior means for the final state:
//! `φ_kw = (n_kw + β) / (n_k + Vβ)` and `θ_dk = (n_dk + α) / (n_d + Kα)`.

use std::collections::{BTreeSet, HashMap};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::normalize::TokenizedTweet;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LdaParams {
    pub topics: usize,
    /// Document–topic prior.
    pub alpha: f64,
    /// Topic–word prior.
    pub beta: f64,
    pub iterations: usize,
    pub seed: u64,
}

impl LdaParams {
    /// α = 50/K, β = 0.01, 1000 sweeps.
    pub fn with_defaults(topics: usize) -> Self {
        LdaParams {
            topics,
            alpha: 50.0 / topics.max(1) as f64,
            beta: 0.01,
            iterations: 1000,
            seed: 0,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.topics < 1 {
            return Err(Error::InvalidArgument("LDA needs at least one topic".into()));
        }
        if !(self.alpha > 0.0 && self.beta > 0.0) {
            return Err(Error::InvalidArgument("LDA priors must be positive".into()));
        }
        if self.iterations < 1 {
            return Err(Error::InvalidArgument("LDA needs at least one sweep".into()));
        }
        Ok(())
    }
}

/// A fitted topic model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicModel {
    pub vocab: Vec<String>,
    /// K rows over the vocabulary, each summing to one.
    pub topic_word: Vec<Vec<f64>>,
    /// One row per document over topics, each summing to one.
    pub doc_topic: Vec<Vec<f64>>,
    /// Final topic label of every token, per document.
    pub assignments: Vec<Vec<usize>>,
    pub params: LdaParams,
}

impl TopicModel {
    pub fn topics(&self) -> usize {
        self.topic_word.len()
    }

    pub fn word_index(&self, word: &str) -> Option<usize> {
        self.vocab.binary_search_by(|w| w.as_str().cmp(word)).ok()
    }

    pub fn weight(&self, topic: usize, word: &str) -> Option<f64> {
        let w = self.word_index(word)?;
        self.topic_word.get(topic).map(|row| row[w])
    }
}

/// Collapsed Gibbs state, exposed so callers can step sweeps and inspect counts.
pub struct GibbsSampler {
    vocab: Vec<String>,
    docs: Vec<Vec<usize>>,
    assignments: Vec<Vec<usize>>,
    doc_topic: Vec<Vec<u32>>,
    topic_word: Vec<u32>,
    topic_totals: Vec<u32>,
    params: LdaParams,
    rng: ChaCha8Rng,
    weights: Vec<f64>,
}

impl GibbsSampler {
    /// Indexes the corpus (vocabulary in lexicographic order) and draws
    /// uniform initial assignments.
    pub fn new(tweets: &[TokenizedTweet], params: LdaParams) -> Result<Self> {
        params.validate()?;
        let vocab: Vec<String> = tweets
            .iter()
            .flat_map(|t| t.tokens.iter().cloned())
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        if vocab.is_empty() {
            return Err(Error::EmptyCorpus);
        }
        if vocab.len() < params.topics {
            return Err(Error::VocabularyTooSmall {
                vocab: vocab.len(),
                topics: params.topics,
            });
        }
        let index: HashMap<&str, usize> = vocab.iter().enumerate().map(|(i, w)| (w.as_str(), i)).collect();
        let docs: Vec<Vec<usize>> = tweets
            .iter()
            .map(|t| t.tokens.iter().map(|w| index[w.as_str()]).collect())
            .collect();

        let k = params.topics;
        let v = vocab.len();
        let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
        let mut doc_topic = vec![vec![0u32; k]; docs.len()];
        let mut topic_word = vec![0u32; k * v];
        let mut topic_totals = vec![0u32; k];
        let assignments: Vec<Vec<usize>> = docs
            .iter()
            .enumerate()
            .map(|(d, doc)| {
                doc.iter()
                    .map(|&w| {
                        let z = rng.random_range(0..k);
                        doc_topic[d][z] += 1;
                        topic_word[z * v + w] += 1;
                        topic_totals[z] += 1;
                        z
                    })
                    .collect()
            })
            .collect();
        Ok(GibbsSampler {
            vocab,
            docs,
            assignments,
            doc_topic,
            topic_word,
            topic_totals,
            params,
            rng,
            weights: vec![0.0; k],
        })
    }

    /// Resamples every token once, in document order.
    pub fn sweep(&mut self) {
        let k = self.params.topics;
        let v = self.vocab.len();
        let (alpha, beta) = (self.params.alpha, self.params.beta);
        let vbeta = v as f64 * beta;
        for (d, doc) in self.docs.iter().enumerate() {
            for (i, &w) in doc.iter().enumerate() {
                let old = self.assignments[d][i];
                self.doc_topic[d][old] -= 1;
                self.topic_word[old * v + w] -= 1;
                self.topic_totals[old] -= 1;

                let mut total = 0.0;
                for t in 0..k {
                    total += (self.doc_topic[d][t] as f64 + alpha) * (self.topic_word[t * v + w] as f64 + beta)
                        / (self.topic_totals[t] as f64 + vbeta);
                    self.weights[t] = total;
                }
                let u = self.rng.random::<f64>() * total;
                let new = self.weights.iter().position(|&c| u < c).unwrap_or(k - 1);

                self.assignments[d][i] = new;
                self.doc_topic[d][new] += 1;
                self.topic_word[new * v + w] += 1;
                self.topic_totals[new] += 1;
            }
        }
    }

    /// Number of tokens currently assigned to some topic.
    pub fn assigned_tokens(&self) -> u64 {
        self.topic_totals.iter().map(|&n| n as u64).sum()
    }

    pub fn corpus_tokens(&self) -> u64 {
        self.docs.iter().map(|d| d.len() as u64).sum()
    }

    pub fn assignments(&self) -> &[Vec<usize>] {
        &self.assignments
    }

    pub fn into_model(self) -> TopicModel {
        let k = self.params.topics;
        let v = self.vocab.len();
        let (alpha, beta) = (self.params.alpha, self.params.beta);
        let topic_word = (0..k)
            .map(|t| {
                let denom = self.topic_totals[t] as f64 + v as f64 * beta;
                (0..v)
                    .map(|w| (self.topic_word[t * v + w] as f64 + beta) / denom)
                    .collect()
            })
            .collect();
        let doc_topic = self
            .doc_topic
            .iter()
            .zip(&self.docs)
            .map(|(counts, doc)| {
                let denom = doc.len() as f64 + k as f64 * alpha;
                counts.iter().map(|&c| (c as f64 + alpha) / denom).collect()
            })
            .collect();
        TopicModel {
            vocab: self.vocab,
            topic_word,
            doc_topic,
            assignments: self.assignments,
            params: self.params,
        }
    }
}

/// Runs `params.iterations` full Gibbs sweeps. Deterministic for a fixed seed.
pub fn lda_fit(tweets: &[TokenizedTweet], params: LdaParams) -> Result<TopicModel> {
    let mut sampler = GibbsSampler::new(tweets, params)?;
    for _ in 0..params.iterations {
        sampler.sweep();
    }
    Ok(sampler.into_model())
}

/// The `m` heaviest words of a topic, descending; ties in lexicographic order.
pub fn lda_top_words(model: &TopicModel, topic: usize, m: usize) -> Result<Vec<(String, f64)>> {
    let row = model
        .topic_word
        .get(topic)
        .ok_or_else(|| Error::InvalidArgument(format!("topic {topic} out of range 0..{}", model.topics())))?;
    if m < 1 {
        return Err(Error::InvalidArgument("m must be at least 1".into()));
    }
    let mut ranked: Vec<(usize, f64)> = row.iter().copied().enumerate().collect();
    ranked.sort_by(|a, b| {
        b.1.total_cmp(&a.1)
            .then_with(|| model.vocab[a.0].cmp(&model.vocab[b.0]))
    });
    Ok(ranked
        .into_iter()
        .take(m)
        .map(|(w, p)| (model.vocab[w].clone(), p))
        .collect())
}
