use std::path::Path;

use rand::Rng;

use super::{SENTENCE_DIM, SENTENCE_HIDDEN, WORD_DIM};
use crate::error::{Error, Result};
use crate::io::{read_text, write_bytes};
use crate::nn::{prefixed, tanh_backward, xavier_uniform, DenseLayer, ParamSet, Tensor};
use crate::synth::VOCABULARY;

/// Closed word list; row `i` of the embedding table belongs to word `i`
/// and the row after the last word is the out-of-vocabulary row.
#[derive(Clone, Debug, PartialEq)]
pub struct Vocabulary {
    words: Vec<String>,
}

impl Vocabulary {
    pub fn new(words: Vec<String>) -> Result<Self> {
        for (i, w) in words.iter().enumerate() {
            if w.is_empty() || w.chars().any(char::is_whitespace) {
                return Err(Error::Invalid(format!("vocabulary entry {i} is not a single token: {w:?}")));
            }
            if words[..i].contains(w) {
                return Err(Error::Invalid(format!("duplicate vocabulary entry {w:?}")));
            }
        }
        Ok(Self { words })
    }

    /// The sentence grammar's vocabulary.
    pub fn standard() -> Self {
        Self {
            words: VOCABULARY.iter().map(|w| w.to_string()).collect(),
        }
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn oov_row(&self) -> usize {
        self.words.len()
    }

    /// Table rows including the OOV row.
    pub fn rows(&self) -> usize {
        self.words.len() + 1
    }

    pub fn index(&self, token: &str) -> usize {
        self.words.iter().position(|w| w == token).unwrap_or(self.oov_row())
    }

    /// One token per line.
    pub fn write(&self, path: &Path) -> Result<()> {
        let mut text = self.words.join("\n");
        text.push('\n');
        write_bytes(path, text.as_bytes())
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = read_text(path)?;
        let words = text.lines().map(str::trim).filter(|l| !l.is_empty()).map(str::to_owned).collect();
        Self::new(words).map_err(|e| Error::parse(path, 0, e.to_string()))
    }
}

/// Learned word table followed by two dense layers over the mean word
/// vector.
#[derive(Clone, Debug, PartialEq)]
pub struct SentenceEncoder {
    pub table: Tensor,
    pub fc1: DenseLayer,
    pub fc2: DenseLayer,
}

/// Word vectors and the pooled sentence vector, with the intermediates
/// needed for the backward pass.
#[derive(Clone, Debug, PartialEq)]
pub struct SentenceEmbedding {
    pub rows: Vec<usize>,
    /// `T x 64`, row-major.
    pub word_vectors: Vec<f64>,
    pub mean: Vec<f64>,
    pub hidden: Vec<f64>,
    pub pooled: Vec<f64>,
}

impl SentenceEncoder {
    pub fn zeros(vocab_rows: usize) -> Self {
        Self {
            table: Tensor::zeros(&[vocab_rows, WORD_DIM]),
            fc1: DenseLayer::zeros(WORD_DIM, SENTENCE_HIDDEN),
            fc2: DenseLayer::zeros(SENTENCE_HIDDEN, SENTENCE_DIM),
        }
    }

    pub fn xavier(vocab_rows: usize, rng: &mut impl Rng) -> Self {
        let mut enc = Self::zeros(vocab_rows);
        xavier_uniform(&mut enc.table, vocab_rows, WORD_DIM, rng);
        enc.fc1 = DenseLayer::xavier(WORD_DIM, SENTENCE_HIDDEN, rng);
        enc.fc2 = DenseLayer::xavier(SENTENCE_HIDDEN, SENTENCE_DIM, rng);
        enc
    }

    pub fn embed_rows(&self, rows: &[usize]) -> Result<SentenceEmbedding> {
        if rows.is_empty() {
            return Err(Error::Invalid("cannot embed an empty sentence".into()));
        }
        let n = self.table.rows();
        let mut word_vectors = Vec::with_capacity(rows.len() * WORD_DIM);
        let mut mean = vec![0.0; WORD_DIM];
        for &r in rows {
            if r >= n {
                return Err(Error::Invalid(format!("embedding row {r} outside table of {n}")));
            }
            let v = self.table.row(r);
            word_vectors.extend_from_slice(v);
            for (m, x) in mean.iter_mut().zip(v) {
                *m += x;
            }
        }
        let t = rows.len() as f64;
        mean.iter_mut().for_each(|m| *m /= t);
        let hidden: Vec<f64> = self.fc1.forward(&mean)?.into_iter().map(f64::tanh).collect();
        let pooled: Vec<f64> = self.fc2.forward(&hidden)?.into_iter().map(f64::tanh).collect();
        Ok(SentenceEmbedding {
            rows: rows.to_vec(),
            word_vectors,
            mean,
            hidden,
            pooled,
        })
    }

    pub fn embed(&self, vocab: &Vocabulary, tokens: &[String]) -> Result<SentenceEmbedding> {
        let rows: Vec<usize> = tokens.iter().map(|t| vocab.index(t)).collect();
        self.embed_rows(&rows)
    }

    /// Accumulates parameter gradients for `d loss / d pooled`.
    pub fn backward(&self, emb: &SentenceEmbedding, dpooled: &[f64], grads: &mut SentenceEncoder) -> Result<()> {
        let da2: Vec<f64> = emb.pooled.iter().zip(dpooled).map(|(&y, &d)| tanh_backward(y, d)).collect();
        let dhidden = self.fc2.backward_batch(&emb.hidden, &da2, 1, &mut grads.fc2, true)?.unwrap_or_default();
        let da1: Vec<f64> = emb.hidden.iter().zip(&dhidden).map(|(&y, &d)| tanh_backward(y, d)).collect();
        let dmean = self.fc1.backward_batch(&emb.mean, &da1, 1, &mut grads.fc1, true)?.unwrap_or_default();
        let t = emb.rows.len() as f64;
        for &r in &emb.rows {
            let row = &mut grads.table.data_mut()[r * WORD_DIM..(r + 1) * WORD_DIM];
            for (g, d) in row.iter_mut().zip(&dmean) {
                *g += d / t;
            }
        }
        Ok(())
    }
}

impl ParamSet for SentenceEncoder {
    fn named_tensors(&self) -> Vec<(String, &Tensor)> {
        let mut v = vec![("table".to_string(), &self.table)];
        v.extend(prefixed("fc1", &self.fc1));
        v.extend(prefixed("fc2", &self.fc2));
        v
    }

    fn tensors_mut(&mut self) -> Vec<&mut Tensor> {
        let mut v = vec![&mut self.table];
        v.extend(self.fc1.tensors_mut());
        v.extend(self.fc2.tensors_mut());
        v
    }
}
