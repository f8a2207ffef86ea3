//! Skip-gram embeddings trained with negative sampling.
//!
//! For a center word with input vector `v`, an observed context word with
//! output vector `u_o`, and sampled noise words `u_1..u_n`, the per-pair loss
//! is
//!
//! ```text
//! L = -ln σ(u_o·v) - Σ_i ln σ(-u_i·v)
//! ```
//!
//! Noise words are drawn from the unigram distribution raised to the 3/4
//! power. The learning rate decays linearly to 1e-4 of its initial value.

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::normalize::TokenizedTweet;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Word2VecParams {
    pub dim: usize,
    pub window: usize,
    pub negatives: usize,
    pub epochs: usize,
    pub min_count: u64,
    pub learning_rate: f64,
    pub seed: u64,
}

impl Default for Word2VecParams {
    fn default() -> Self {
        Word2VecParams {
            dim: 100,
            window: 5,
            negatives: 5,
            epochs: 5,
            min_count: 5,
            learning_rate: 0.025,
            seed: 0,
        }
    }
}

impl Word2VecParams {
    fn validate(&self) -> Result<()> {
        if self.dim < 2 || self.window < 1 || self.negatives < 1 || self.epochs < 1 {
            return Err(Error::InvalidArgument(
                "word2vec needs dim >= 2, window >= 1, negatives >= 1, epochs >= 1".into(),
            ));
        }
        if self.learning_rate.is_nan() || self.learning_rate <= 0.0 {
            return Err(Error::InvalidArgument("learning rate must be positive".into()));
        }
        Ok(())
    }
}

/// Trained word vectors plus the hyperparameters that produced them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingModel {
    /// Ordered by descending corpus count, ties lexicographic.
    pub vocab: Vec<String>,
    pub counts: Vec<u64>,
    pub dim: usize,
    /// Row-major `vocab.len() × dim`.
    pub input_vectors: Vec<f64>,
    pub output_vectors: Vec<f64>,
    pub params: Word2VecParams,
    /// Mean per-pair loss of each epoch.
    pub epoch_losses: Vec<f64>,
    #[serde(skip)]
    index: HashMap<String, usize>,
}

impl EmbeddingModel {
    /// Wraps hand-made input vectors, e.g. for inspection or tests.
    pub fn from_input_vectors(words: Vec<String>, vectors: Vec<Vec<f64>>) -> Result<Self> {
        let dim = vectors.first().map_or(0, Vec::len);
        if words.len() != vectors.len() || vectors.iter().any(|v| v.len() != dim) || dim == 0 {
            return Err(Error::InvalidArgument(
                "one equal-length vector per word required".into(),
            ));
        }
        let n = words.len();
        let mut model = EmbeddingModel {
            vocab: words,
            counts: vec![0; n],
            dim,
            input_vectors: vectors.into_iter().flatten().collect(),
            output_vectors: vec![0.0; n * dim],
            params: Word2VecParams {
                dim,
                ..Default::default()
            },
            epoch_losses: Vec::new(),
            index: HashMap::new(),
        };
        model.rebuild_index()?;
        Ok(model)
    }

    fn rebuild_index(&mut self) -> Result<()> {
        self.index.clear();
        for (i, w) in self.vocab.iter().enumerate() {
            if self.index.insert(w.clone(), i).is_some() {
                return Err(Error::InvalidArgument(format!("duplicate vocabulary word {w:?}")));
            }
        }
        if self
            .input_vectors
            .iter()
            .chain(&self.output_vectors)
            .any(|x| !x.is_finite())
        {
            return Err(Error::InvalidArgument("non-finite embedding entry".into()));
        }
        Ok(())
    }

    pub fn contains(&self, word: &str) -> bool {
        self.index.contains_key(word)
    }

    pub fn vector(&self, word: &str) -> Option<&[f64]> {
        self.index.get(word).map(|&i| self.row(i))
    }

    fn row(&self, i: usize) -> &[f64] {
        &self.input_vectors[i * self.dim..(i + 1) * self.dim]
    }

    pub fn cosine(&self, a: &str, b: &str) -> Option<f64> {
        Some(cosine(self.vector(a)?, self.vector(b)?))
    }

    pub fn save_json(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let text = serde_json::to_string(self)?;
        fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn load_json(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut model: EmbeddingModel = serde_json::from_str(&text)?;
        model.rebuild_index()?;
        Ok(model)
    }
}

/// Cosine similarity; zero when either vector is zero.
pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let norms = dot(a, a).sqrt() * dot(b, b).sqrt();
    if norms == 0.0 {
        0.0
    } else {
        (dot(a, b) / norms).clamp(-1.0, 1.0)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

// -ln σ(x), stable for large |x|
fn neg_log_sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        (-x).exp().ln_1p()
    } else {
        -x + x.exp().ln_1p()
    }
}

/// Negative-sampling loss of one (center, context, noise) instance.
pub fn sgns_loss(center: &[f64], context: &[f64], negatives: &[Vec<f64>]) -> f64 {
    neg_log_sigmoid(dot(context, center)) + negatives.iter().map(|u| neg_log_sigmoid(-dot(u, center))).sum::<f64>()
}

/// Partial derivatives of [`sgns_loss`].
#[derive(Debug, Clone, PartialEq)]
pub struct SgnsGradient {
    pub center: Vec<f64>,
    pub context: Vec<f64>,
    pub negatives: Vec<Vec<f64>>,
}

pub fn sgns_gradient(center: &[f64], context: &[f64], negatives: &[Vec<f64>]) -> SgnsGradient {
    let g_pos = sigmoid(dot(context, center)) - 1.0;
    let mut d_center: Vec<f64> = context.iter().map(|u| g_pos * u).collect();
    let d_context = center.iter().map(|v| g_pos * v).collect();
    let d_negatives = negatives
        .iter()
        .map(|u| {
            let g = sigmoid(dot(u, center));
            for (dc, ui) in d_center.iter_mut().zip(u) {
                *dc += g * ui;
            }
            center.iter().map(|v| g * v).collect()
        })
        .collect();
    SgnsGradient {
        center: d_center,
        context: d_context,
        negatives: d_negatives,
    }
}

// One gradient-descent step on a center row and its target output rows.
// `targets[0]` is the observed context, the rest are noise words. All
// coefficients use the pre-step vectors, so repeated targets accumulate
// exactly as in `sgns_gradient`. Returns the pre-step loss.
fn sgns_step(
    center: &mut [f64],
    output: &mut [f64],
    dim: usize,
    targets: &[usize],
    lr: f64,
    coeffs: &mut Vec<f64>,
    d_center: &mut [f64],
) -> f64 {
    coeffs.clear();
    d_center.fill(0.0);
    let mut loss = 0.0;
    for (j, &t) in targets.iter().enumerate() {
        let u = &output[t * dim..(t + 1) * dim];
        let score = dot(u, center);
        let g = if j == 0 {
            loss += neg_log_sigmoid(score);
            sigmoid(score) - 1.0
        } else {
            loss += neg_log_sigmoid(-score);
            sigmoid(score)
        };
        for (dc, ui) in d_center.iter_mut().zip(u) {
            *dc += g * ui;
        }
        coeffs.push(g);
    }
    for (&t, &g) in targets.iter().zip(coeffs.iter()) {
        for (ui, vi) in output[t * dim..(t + 1) * dim].iter_mut().zip(center.iter()) {
            *ui -= lr * g * vi;
        }
    }
    for (vi, dc) in center.iter_mut().zip(d_center.iter()) {
        *vi -= lr * dc;
    }
    loss
}

struct NoiseTable {
    cumulative: Vec<f64>,
}

impl NoiseTable {
    fn new(counts: &[u64]) -> Self {
        let mut acc = 0.0;
        let cumulative = counts
            .iter()
            .map(|&c| {
                acc += (c as f64).powf(0.75);
                acc
            })
            .collect();
        NoiseTable { cumulative }
    }

    fn sample(&self, rng: &mut ChaCha8Rng) -> usize {
        let total = *self.cumulative.last().expect("non-empty vocabulary");
        let u = rng.random::<f64>() * total;
        self.cumulative
            .partition_point(|&c| c <= u)
            .min(self.cumulative.len() - 1)
    }
}

/// Trains skip-gram vectors single-threaded; a fixed seed gives identical output.
pub fn w2v_train(tweets: &[TokenizedTweet], params: Word2VecParams) -> Result<EmbeddingModel> {
    params.validate()?;
    let mut freq: HashMap<&str, u64> = HashMap::new();
    for t in tweets {
        for w in &t.tokens {
            *freq.entry(w.as_str()).or_insert(0) += 1;
        }
    }
    let mut ranked: Vec<(&str, u64)> = freq.into_iter().filter(|&(_, c)| c >= params.min_count).collect();
    if ranked.is_empty() {
        return Err(Error::EmptyVocabulary(params.min_count));
    }
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    let vocab: Vec<String> = ranked.iter().map(|(w, _)| w.to_string()).collect();
    let counts: Vec<u64> = ranked.iter().map(|&(_, c)| c).collect();
    let index: HashMap<String, usize> = vocab.iter().enumerate().map(|(i, w)| (w.clone(), i)).collect();
    let sentences: Vec<Vec<usize>> = tweets
        .iter()
        .map(|t| t.tokens.iter().filter_map(|w| index.get(w).copied()).collect())
        .collect();

    let dim = params.dim;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut input: Vec<f64> = (0..vocab.len() * dim)
        .map(|_| (rng.random::<f64>() - 0.5) / dim as f64)
        .collect();
    let mut output = vec![0.0; vocab.len() * dim];
    let noise = NoiseTable::new(&counts);

    let positions: usize = sentences.iter().map(Vec::len).sum();
    let schedule = (positions * params.epochs).max(1) as f64;
    let mut processed = 0usize;
    let mut epoch_losses = Vec::with_capacity(params.epochs);
    let mut targets = Vec::with_capacity(params.negatives + 1);
    let mut coeffs = Vec::with_capacity(params.negatives + 1);
    let mut d_center = vec![0.0; dim];

    for _ in 0..params.epochs {
        let mut loss = 0.0;
        let mut pairs = 0usize;
        for sentence in &sentences {
            for (pos, &center) in sentence.iter().enumerate() {
                let lr = params.learning_rate * (1.0 - processed as f64 / schedule).max(1e-4);
                processed += 1;
                let lo = pos.saturating_sub(params.window);
                let hi = (pos + params.window + 1).min(sentence.len());
                for (cpos, &context) in sentence.iter().enumerate().take(hi).skip(lo) {
                    if cpos == pos {
                        continue;
                    }
                    targets.clear();
                    targets.push(context);
                    while targets.len() <= params.negatives {
                        let n = noise.sample(&mut rng);
                        if n != context {
                            targets.push(n);
                        } else if vocab.len() == 1 {
                            break;
                        }
                    }
                    let row = &mut input[center * dim..(center + 1) * dim];
                    loss += sgns_step(row, &mut output, dim, &targets, lr, &mut coeffs, &mut d_center);
                    pairs += 1;
                }
            }
        }
        epoch_losses.push(if pairs == 0 { 0.0 } else { loss / pairs as f64 });
    }

    let mut model = EmbeddingModel {
        vocab,
        counts,
        dim,
        input_vectors: input,
        output_vectors: output,
        params,
        epoch_losses,
        index: HashMap::new(),
    };
    model.rebuild_index()?;
    Ok(model)
}

/// The `k` words closest to `word` by cosine of input vectors, excluding
/// `word` itself; ties in lexicographic order.
pub fn w2v_nearest(model: &EmbeddingModel, word: &str, k: usize) -> Result<Vec<(String, f64)>> {
    if k < 1 {
        return Err(Error::InvalidArgument("k must be at least 1".into()));
    }
    let &qi = model
        .index
        .get(word)
        .ok_or_else(|| Error::OutOfVocabulary(word.to_string()))?;
    let query = model.row(qi);
    let mut scored: Vec<(&str, f64)> = (0..model.vocab.len())
        .filter(|&i| i != qi)
        .map(|i| (model.vocab[i].as_str(), cosine(query, model.row(i))))
        .collect();
    scored.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    Ok(scored.into_iter().take(k).map(|(w, c)| (w.to_string(), c)).collect())
}
