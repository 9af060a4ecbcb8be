//! Lexical text similarity used by every validator.
//!
//! All accumulation runs over ordered maps so that scores are bit-for-bit
//! reproducible across runs.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SimilarityError {
    #[error("unknown metric `{0}` (expected token_jaccard, cosine_tf or char_ngram_containment:N)")]
    UnknownMetric(String),
    #[error("n-gram size must be at least 2, got {0}")]
    NgramTooSmall(usize),
}

/// Lowercase word tokens split on anything that is not alphanumeric.
pub fn normalize(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .collect()
}

/// Split normalized text after `.`, `!` or `?` followed by whitespace. The
/// terminator stays with its sentence.
pub fn split_sentences(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut cur = String::new();
    let mut chars = text.chars().peekable();
    while let Some(c) = chars.next() {
        cur.push(c);
        if matches!(c, '.' | '!' | '?') && chars.peek().is_some_and(|n| n.is_whitespace()) {
            let s = cur.trim();
            if !s.is_empty() {
                out.push(s.to_string());
            }
            cur.clear();
        }
    }
    let s = cur.trim();
    if !s.is_empty() {
        out.push(s.to_string());
    }
    out
}

/// Distinct word n-grams, each joined with single spaces.
pub fn word_ngrams(tokens: &[String], n: usize) -> BTreeSet<String> {
    if n == 0 || tokens.len() < n {
        return BTreeSet::new();
    }
    tokens.windows(n).map(|w| w.join(" ")).collect()
}

/// Fraction of the distinct word n-grams of `needle` found in `hay`.
/// Zero when `needle` has fewer than `n` tokens.
pub fn containment(needle: &str, hay: &str, n: usize) -> f64 {
    let grams = word_ngrams(&normalize(needle), n);
    containment_of(&grams, hay, n)
}

/// Containment for a precomputed n-gram set.
pub fn containment_of(grams: &BTreeSet<String>, hay: &str, n: usize) -> f64 {
    if grams.is_empty() {
        return 0.0;
    }
    let hay = word_ngrams(&normalize(hay), n);
    let hits = grams.iter().filter(|g| hay.contains(*g)).count();
    hits as f64 / grams.len() as f64
}

/// Anything that scores two texts in `[0, 1]`.
pub trait TextMetric: Send + Sync {
    fn name(&self) -> String;
    fn score(&self, a: &str, b: &str) -> f64;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[derive(Default)]
pub enum SimilarityMetric {
    #[default]
    TokenJaccard,
    CosineTf,
    /// Share of `a`'s character n-grams present in `b`.
    CharNgramContainment(usize),
}


impl SimilarityMetric {
    pub fn char_ngram(n: usize) -> Result<Self, SimilarityError> {
        if n < 2 {
            return Err(SimilarityError::NgramTooSmall(n));
        }
        Ok(SimilarityMetric::CharNgramContainment(n))
    }
}

impl fmt::Display for SimilarityMetric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SimilarityMetric::TokenJaccard => f.write_str("token_jaccard"),
            SimilarityMetric::CosineTf => f.write_str("cosine_tf"),
            SimilarityMetric::CharNgramContainment(n) => write!(f, "char_ngram_containment:{n}"),
        }
    }
}

impl FromStr for SimilarityMetric {
    type Err = SimilarityError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "token_jaccard" | "jaccard" => Ok(SimilarityMetric::TokenJaccard),
            "cosine_tf" | "cosine" => Ok(SimilarityMetric::CosineTf),
            _ => {
                let n = s
                    .strip_prefix("char_ngram_containment:")
                    .and_then(|n| n.parse::<usize>().ok())
                    .ok_or_else(|| SimilarityError::UnknownMetric(s.to_string()))?;
                SimilarityMetric::char_ngram(n)
            }
        }
    }
}

impl Serialize for SimilarityMetric {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for SimilarityMetric {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

impl TextMetric for SimilarityMetric {
    fn name(&self) -> String {
        self.to_string()
    }

    fn score(&self, a: &str, b: &str) -> f64 {
        score(*self, a, b)
    }
}

pub fn score(metric: SimilarityMetric, a: &str, b: &str) -> f64 {
    match metric {
        SimilarityMetric::TokenJaccard => jaccard(&normalize(a), &normalize(b)),
        SimilarityMetric::CosineTf => cosine_tf(&normalize(a), &normalize(b)),
        SimilarityMetric::CharNgramContainment(n) => char_containment(a, b, n),
    }
}

fn jaccard(a: &[String], b: &[String]) -> f64 {
    let a: BTreeSet<&String> = a.iter().collect();
    let b: BTreeSet<&String> = b.iter().collect();
    if a.is_empty() && b.is_empty() {
        return 1.0;
    }
    let inter = a.intersection(&b).count();
    let union = a.union(&b).count();
    inter as f64 / union as f64
}

fn term_frequencies(tokens: &[String]) -> BTreeMap<&str, u64> {
    let mut tf = BTreeMap::new();
    for t in tokens {
        *tf.entry(t.as_str()).or_insert(0) += 1;
    }
    tf
}

fn cosine_tf(a: &[String], b: &[String]) -> f64 {
    match (a.is_empty(), b.is_empty()) {
        (true, true) => return 1.0,
        (true, false) | (false, true) => return 0.0,
        _ => {}
    }
    let ta = term_frequencies(a);
    let tb = term_frequencies(b);
    if ta == tb {
        return 1.0;
    }
    let dot: u64 = ta.iter().filter_map(|(k, x)| tb.get(k).map(|y| x * y)).sum();
    let na: u64 = ta.values().map(|x| x * x).sum();
    let nb: u64 = tb.values().map(|x| x * x).sum();
    (dot as f64 / ((na as f64).sqrt() * (nb as f64).sqrt())).clamp(0.0, 1.0)
}

fn char_grams(text: &str, n: usize) -> BTreeSet<String> {
    let norm = normalize(text).join(" ");
    let chars: Vec<char> = norm.chars().collect();
    if chars.is_empty() {
        return BTreeSet::new();
    }
    if chars.len() < n {
        return BTreeSet::from([norm]);
    }
    chars.windows(n).map(|w| w.iter().collect()).collect()
}

fn char_containment(a: &str, b: &str, n: usize) -> f64 {
    let ga = char_grams(a, n);
    let gb = char_grams(b, n);
    match (ga.is_empty(), gb.is_empty()) {
        (true, true) => 1.0,
        (true, false) | (false, true) => 0.0,
        _ => ga.intersection(&gb).count() as f64 / ga.len() as f64,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(s: &str) -> Vec<String> {
        normalize(s)
    }

    #[test]
    fn normalize_examples() {
        assert_eq!(toks("Hello, World!"), vec!["hello", "world"]);
        assert!(toks("").is_empty());
        assert_eq!(toks("Groß-Stadt"), vec!["groß", "stadt"]);
    }

    #[test]
    fn sentence_split() {
        assert_eq!(
            split_sentences("One two. Three? Four!  Five 2.5 six."),
            vec!["One two.", "Three?", "Four!", "Five 2.5 six."]
        );
        assert!(split_sentences("  ").is_empty());
    }

    #[test]
    fn jaccard_examples() {
        let j = SimilarityMetric::TokenJaccard;
        assert_eq!(score(j, "a b c", "a b c"), 1.0);
        assert_eq!(score(j, "a b", "c d"), 0.0);
        assert_eq!(score(j, "", ""), 1.0);
    }

    #[test]
    fn cosine_edges() {
        let c = SimilarityMetric::CosineTf;
        assert_eq!(score(c, "", ""), 1.0);
        assert_eq!(score(c, "a", ""), 0.0);
        assert_eq!(score(c, "x y y", "y x y"), 1.0);
        // (1*1)/(sqrt(2)*1)
        assert!((score(c, "a b", "a") - 1.0 / 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn containment_examples() {
        assert_eq!(containment("a b c", "x a b c y", 2), 1.0);
        assert_eq!(containment("a b c", "z z z", 2), 0.0);
        assert_eq!(containment("a", "a a a", 2), 0.0);
        assert_eq!(containment("a b c", "a b", 2), 0.5);
    }

    #[test]
    fn char_containment_is_directional() {
        let m = SimilarityMetric::CharNgramContainment(3);
        assert_eq!(score(m, "abc", "xxabcxx"), 1.0);
        assert!(score(m, "xxabcxx", "abc") < 1.0);
    }

    #[test]
    fn metric_names_round_trip() {
        for m in [
            SimilarityMetric::TokenJaccard,
            SimilarityMetric::CosineTf,
            SimilarityMetric::CharNgramContainment(4),
        ] {
            assert_eq!(m.to_string().parse::<SimilarityMetric>().unwrap(), m);
            let j = serde_json::to_string(&m).unwrap();
            assert_eq!(serde_json::from_str::<SimilarityMetric>(&j).unwrap(), m);
        }
        assert_eq!(
            "char_ngram_containment:1".parse::<SimilarityMetric>(),
            Err(SimilarityError::NgramTooSmall(1))
        );
        assert!("bleu".parse::<SimilarityMetric>().is_err());
    }
}
