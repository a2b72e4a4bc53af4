//! Rule-book passages and lexical top-k retrieval.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Passage {
    pub source: String,
    /// Article heading, e.g. `Article 38`.
    pub article: String,
    pub text: String,
}

/// Splits a rule book into one passage per article. A line whose first word
/// is `Article` starts a new passage; text before the first article is dropped.
pub fn chunk_rulebook(source: &str, text: &str) -> Vec<Passage> {
    let mut out: Vec<Passage> = Vec::new();
    for line in text.lines() {
        let trimmed = line.trim();
        if trimmed.split_whitespace().next() == Some("Article") {
            let (head, rest) = match trimmed.find(['.', ':']) {
                Some(i) => (&trimmed[..i], trimmed[i + 1..].trim()),
                None => (trimmed, ""),
            };
            out.push(Passage { source: source.to_string(), article: head.trim().to_string(), text: rest.to_string() });
        } else if let Some(p) = out.last_mut() {
            if !trimmed.is_empty() {
                if !p.text.is_empty() {
                    p.text.push(' ');
                }
                p.text.push_str(trimmed);
            }
        }
    }
    out
}

pub trait Retriever: Send + Sync {
    /// Exactly `min(k, corpus size)` passages, best first.
    fn retrieve(&self, query: &str, k: usize) -> Vec<&Passage>;

    fn len(&self) -> usize;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

fn tokens(text: &str) -> impl Iterator<Item = String> + '_ {
    text.split(|c: char| !c.is_alphanumeric()).filter(|t| !t.is_empty()).map(str::to_lowercase)
}

/// Okapi BM25 over passage text and heading.
pub struct Bm25Retriever {
    passages: Vec<Passage>,
    term_freqs: Vec<HashMap<String, u32>>,
    lengths: Vec<f64>,
    doc_freq: HashMap<String, u32>,
    avg_len: f64,
}

const K1: f64 = 1.2;
const B: f64 = 0.75;

impl Bm25Retriever {
    pub fn new(passages: Vec<Passage>) -> Self {
        let mut term_freqs = Vec::with_capacity(passages.len());
        let mut lengths = Vec::with_capacity(passages.len());
        let mut doc_freq: HashMap<String, u32> = HashMap::new();
        for p in &passages {
            let mut tf: HashMap<String, u32> = HashMap::new();
            let mut n = 0;
            for t in tokens(&p.article).chain(tokens(&p.text)) {
                *tf.entry(t).or_default() += 1;
                n += 1;
            }
            for t in tf.keys() {
                *doc_freq.entry(t.clone()).or_default() += 1;
            }
            term_freqs.push(tf);
            lengths.push(n as f64);
        }
        let avg_len = if lengths.is_empty() { 0.0 } else { lengths.iter().sum::<f64>() / lengths.len() as f64 };
        Bm25Retriever { passages, term_freqs, lengths, doc_freq, avg_len }
    }

    pub fn passages(&self) -> &[Passage] {
        &self.passages
    }

    pub fn score(&self, query: &str, idx: usize) -> f64 {
        let n = self.passages.len() as f64;
        let mut seen = std::collections::HashSet::new();
        tokens(query)
            .filter(|t| seen.insert(t.clone()))
            .map(|t| {
                let Some(&tf) = self.term_freqs[idx].get(&t) else { return 0.0 };
                let df = self.doc_freq[&t] as f64;
                let idf = ((n - df + 0.5) / (df + 0.5) + 1.0).ln();
                let tf = tf as f64;
                idf * tf * (K1 + 1.0) / (tf + K1 * (1.0 - B + B * self.lengths[idx] / self.avg_len.max(1e-9)))
            })
            .sum()
    }
}

impl Retriever for Bm25Retriever {
    fn retrieve(&self, query: &str, k: usize) -> Vec<&Passage> {
        let mut scored: Vec<(f64, usize)> = (0..self.passages.len()).map(|i| (self.score(query, i), i)).collect();
        scored.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
        scored.into_iter().take(k).map(|(_, i)| &self.passages[i]).collect()
    }

    fn len(&self) -> usize {
        self.passages.len()
    }
}
