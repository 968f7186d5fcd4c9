//! String normalization, similarity metrics, and hashed document vectors.
//!
//! Everything here is a pure function; downstream stages (blocking, linking,
//! disambiguation, search) all compare strings through [`normalize_text`].

use std::collections::{HashMap, HashSet};
use std::hash::{Hash, Hasher};

use fnv::FnvHasher;
use serde::{Deserialize, Serialize};
use unicode_normalization::char::is_combining_mark;
use unicode_normalization::UnicodeNormalization;

/// Default dimensionality of [`DocVector`]s.
pub const DEFAULT_EMBEDDING_DIM: usize = 256;

/// Minimum dimensionality accepted by [`embed_document`].
pub const MIN_EMBEDDING_DIM: usize = 16;

/// Lowercase, diacritic-free, punctuation-free, single-spaced text.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NormText(String);

impl NormText {
    pub fn new(raw: &str) -> Self {
        normalize_text(raw)
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn tokens(&self) -> impl Iterator<Item = &str> {
        self.0.split(' ').filter(|t| !t.is_empty())
    }

    pub fn token_set(&self) -> HashSet<&str> {
        self.tokens().collect()
    }

    pub fn into_string(self) -> String {
        self.0
    }
}

impl std::fmt::Display for NormText {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl AsRef<str> for NormText {
    fn as_ref(&self) -> &str {
        &self.0
    }
}

fn normalize_once(raw: &str) -> String {
    // Decompose, lowercase, decompose again: lowercasing can produce
    // characters that carry their own combining marks (e.g. U+0130).
    let lowered: String = raw.nfkd().flat_map(char::to_lowercase).collect();
    let mut out = String::with_capacity(lowered.len());
    let mut pending_space = false;
    for c in lowered.nfkd() {
        if is_combining_mark(c) {
            continue;
        }
        // Uppercase code points with no lowercase mapping count as separators.
        if c.is_alphanumeric() && !c.is_uppercase() {
            if pending_space && !out.is_empty() {
                out.push(' ');
            }
            pending_space = false;
            out.push(c);
        } else {
            pending_space = true;
        }
    }
    out
}

/// Single-pass equivalent of [`normalize_once`] for ASCII input, where
/// decomposition is the identity.
fn normalize_ascii(raw: &str) -> String {
    let mut out = String::with_capacity(raw.len());
    let mut pending_space = false;
    for b in raw.bytes() {
        if b.is_ascii_alphanumeric() {
            if pending_space && !out.is_empty() {
                out.push(' ');
            }
            pending_space = false;
            out.push(b.to_ascii_lowercase() as char);
        } else {
            pending_space = true;
        }
    }
    out
}

/// Normalize free text for comparison.
///
/// Compatibility decomposition, combining marks dropped, lowercased, every
/// run of non-alphanumeric characters collapsed to one space, trimmed.
/// Characters without a decomposition (e.g. `ß`) pass through lowercased.
pub fn normalize_text(raw: &str) -> NormText {
    if raw.is_ascii() {
        return NormText(normalize_ascii(raw));
    }
    let mut current = normalize_once(raw);
    // A handful of code points only reach their fixed point on a second pass.
    for _ in 0..3 {
        let next = normalize_once(&current);
        if next == current {
            break;
        }
        current = next;
    }
    NormText(current)
}

/// Tokens of the normalized form of `raw`.
pub fn tokenize(raw: &str) -> Vec<String> {
    normalize_text(raw).tokens().map(str::to_owned).collect()
}

/// `|a ∩ b| / |a ∪ b|`, with two empty sets counting as identical.
pub fn jaccard<T: Eq + Hash>(a: &HashSet<T>, b: &HashSet<T>) -> f64 {
    if a.is_empty() && b.is_empty() {
        return 1.0;
    }
    let (small, large) = if a.len() <= b.len() { (a, b) } else { (b, a) };
    let inter = small.iter().filter(|x| large.contains(*x)).count();
    let union = a.len() + b.len() - inter;
    inter as f64 / union as f64
}

/// `1 - levenshtein(a, b) / max(|a|, |b|)` over characters; 1 when both are empty.
pub fn edit_ratio(a: &str, b: &str) -> f64 {
    if a.is_ascii() && b.is_ascii() {
        let longest = a.len().max(b.len());
        if longest == 0 {
            return 1.0;
        }
        return 1.0 - ascii_levenshtein(a.as_bytes(), b.as_bytes()) as f64 / longest as f64;
    }
    strsim::normalized_levenshtein(a, b)
}

/// Byte-level single-row Levenshtein distance; ASCII inputs only.
fn ascii_levenshtein(a: &[u8], b: &[u8]) -> usize {
    let (a, b) = if a.len() < b.len() { (b, a) } else { (a, b) };
    if b.is_empty() {
        return a.len();
    }
    let mut row: Vec<usize> = (0..=b.len()).collect();
    for (i, &ca) in a.iter().enumerate() {
        let mut diag = row[0];
        row[0] = i + 1;
        for (j, &cb) in b.iter().enumerate() {
            let above = row[j + 1];
            row[j + 1] = if ca == cb { diag } else { 1 + diag.min(above).min(row[j]) };
            diag = above;
        }
    }
    row[b.len()]
}

/// All contiguous character n-grams of `text` for every `n` in `n_min..=n_max`.
///
/// Returned as a multiset (duplicates kept, ordered by `n` then position).
pub fn char_ngrams(text: &NormText, n_min: usize, n_max: usize) -> Vec<String> {
    assert!(n_min >= 1 && n_min <= n_max, "char_ngrams requires 1 <= n_min <= n_max");
    let chars: Vec<char> = text.as_str().chars().collect();
    let mut out = Vec::new();
    for n in n_min..=n_max {
        if n > chars.len() {
            break;
        }
        out.extend(chars.windows(n).map(|w| w.iter().collect::<String>()));
    }
    out
}

/// Stable 64-bit FNV-1a hash of a string.
pub fn stable_hash(s: &str) -> u64 {
    let mut h = FnvHasher::default();
    h.write(s.as_bytes());
    h.finish()
}

/// Dense, L2-normalized document vector (or the zero vector for empty input).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DocVector(Vec<f64>);

impl DocVector {
    pub fn zeros(dim: usize) -> Self {
        DocVector(vec![0.0; dim])
    }

    pub fn from_values(values: Vec<f64>) -> Self {
        DocVector(values)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|v| *v == 0.0)
    }

    pub fn dot(&self, other: &DocVector) -> f64 {
        self.0.iter().zip(&other.0).map(|(a, b)| a * b).sum()
    }

    /// Cosine similarity; 0 when either side is the zero vector.
    pub fn cosine(&self, other: &DocVector) -> f64 {
        cosine(&self.0, &other.0)
    }

    /// Scale to unit length in place; the zero vector is left untouched.
    pub fn normalize(&mut self) {
        let n = self.norm();
        if n > 0.0 {
            self.0.iter_mut().for_each(|v| *v /= n);
        }
    }
}

/// Cosine similarity of two equal-length slices; 0 if either has zero norm.
pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        dot / (na * nb)
    }
}

/// Feature-hashed bag of word unigrams and bigrams over title and abstract.
///
/// Each feature hashes to a bucket (`hash % dim`) and a sign (bit 32 of the
/// hash); counts are damped as `1 + ln(tf)` and the result L2-normalized.
pub fn embed_document(title: &str, abstract_text: &str, dim: usize) -> DocVector {
    assert!(dim >= MIN_EMBEDDING_DIM, "embedding dim must be >= {MIN_EMBEDDING_DIM}");
    let norm = normalize_text(&format!("{title} {abstract_text}"));
    let tokens: Vec<&str> = norm.tokens().collect();
    let mut counts: HashMap<String, u32> = HashMap::new();
    for t in &tokens {
        *counts.entry((*t).to_owned()).or_default() += 1;
    }
    for w in tokens.windows(2) {
        *counts.entry(format!("{} {}", w[0], w[1])).or_default() += 1;
    }
    // Accumulate in sorted feature order so float summation is reproducible.
    let mut features: Vec<(String, u32)> = counts.into_iter().collect();
    features.sort_unstable();
    let mut values = vec![0.0; dim];
    for (feature, tf) in features {
        let h = stable_hash(&feature);
        let bucket = (h % dim as u64) as usize;
        let sign = if (h >> 32) & 1 == 0 { 1.0 } else { -1.0 };
        values[bucket] += sign * (1.0 + f64::from(tf).ln());
    }
    let mut v = DocVector(values);
    v.normalize();
    v
}

/// A person name split into first, middle, and last components.
///
/// Components are stored normalized with internal spaces removed
/// (`"Jean-Paul"` becomes `"jeanpaul"`).
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct PersonName {
    pub first: String,
    pub middle: Vec<String>,
    pub last: String,
}

fn name_token(raw: &str) -> String {
    normalize_text(raw).as_str().replace(' ', "")
}

/// Split a token like `"J.A."` into its initials; other tokens pass through.
fn expand_initials(token: &str) -> Vec<String> {
    let parts: Vec<&str> = token.split('.').filter(|p| !p.is_empty()).collect();
    if parts.len() > 1 && parts.iter().all(|p| p.chars().count() == 1) {
        parts.into_iter().map(name_token).collect()
    } else {
        vec![name_token(token)]
    }
}

impl PersonName {
    /// Parse a raw display name.
    ///
    /// A single comma followed by at most two tokens is read as
    /// `"Last, First [Middle]"`.
    pub fn parse(raw: &str) -> Self {
        let trimmed = raw.trim();
        let mut ordered: Vec<&str> = Vec::new();
        let commas = trimmed.matches(',').count();
        if commas == 1 {
            let (last, rest) = trimmed.split_once(',').unwrap_or((trimmed, ""));
            let rest_tokens: Vec<&str> = rest.split_whitespace().collect();
            if !rest_tokens.is_empty() && rest_tokens.len() <= 2 {
                ordered.extend(rest_tokens);
                ordered.extend(last.split_whitespace());
            }
        }
        if ordered.is_empty() {
            ordered = trimmed.split(|c: char| c.is_whitespace() || c == ',').collect();
        }
        let tokens: Vec<String> = ordered
            .into_iter()
            .flat_map(expand_initials)
            .filter(|t| !t.is_empty())
            .collect();
        match tokens.len() {
            0 => PersonName::default(),
            1 => PersonName {
                last: tokens[0].clone(),
                ..Default::default()
            },
            n => PersonName {
                first: tokens[0].clone(),
                middle: tokens[1..n - 1].to_vec(),
                last: tokens[n - 1].clone(),
            },
        }
    }

    pub fn is_mononym(&self) -> bool {
        self.first.is_empty()
    }

    pub fn first_initial(&self) -> Option<char> {
        self.first.chars().next()
    }

    /// Normalized "first middle last", omitting empty parts.
    pub fn full(&self) -> String {
        let mut parts: Vec<&str> = Vec::new();
        if !self.first.is_empty() {
            parts.push(&self.first);
        }
        parts.extend(self.middle.iter().map(String::as_str));
        if !self.last.is_empty() {
            parts.push(&self.last);
        }
        parts.join(" ")
    }
}

/// Outcome of [`name_compatibility`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NameCompat {
    Compatible,
    Incompatible,
}

/// Minimum edit ratio at which two full first names are considered the same.
const FIRST_NAME_MIN_RATIO: f64 = 0.9;

fn given_names_conflict(a: &str, b: &str) -> bool {
    if a.is_empty() || b.is_empty() {
        return false;
    }
    if a.chars().next() != b.chars().next() {
        return true;
    }
    let both_full = a.chars().count() > 1 && b.chars().count() > 1;
    both_full && edit_ratio(a, b) < FIRST_NAME_MIN_RATIO
}

/// Can two names refer to the same person?
///
/// Incompatible when last names differ, when initials conflict, or when both
/// first names are spelled out and differ beyond an edit ratio of 0.9.
/// Middle names are compared positionally with the same rule.
pub fn name_compatibility(a: &PersonName, b: &PersonName) -> NameCompat {
    if a.last != b.last {
        return NameCompat::Incompatible;
    }
    if given_names_conflict(&a.first, &b.first) {
        return NameCompat::Incompatible;
    }
    if a.middle
        .iter()
        .zip(&b.middle)
        .any(|(x, y)| given_names_conflict(x, y))
    {
        return NameCompat::Incompatible;
    }
    NameCompat::Compatible
}

/// Convenience wrapper over raw strings.
pub fn names_compatible(a: &str, b: &str) -> bool {
    name_compatibility(&PersonName::parse(a), &PersonName::parse(b)) == NameCompat::Compatible
}

/// Fixed 50-word English stopword list used for blocking and search.
pub const STOPWORDS: [&str; 50] = [
    "a", "about", "after", "all", "also", "an", "and", "any", "are", "as", "at", "be", "been",
    "but", "by", "can", "do", "for", "from", "has", "have", "how", "in", "into", "is", "it",
    "its", "new", "not", "of", "on", "or", "our", "over", "than", "that", "the", "their",
    "there", "these", "this", "to", "towards", "under", "using", "via", "was", "we", "what",
    "with",
];

pub fn is_stopword(token: &str) -> bool {
    STOPWORDS.binary_search(&token).is_ok()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn set<'a>(xs: &[&'a str]) -> HashSet<&'a str> {
        xs.iter().copied().collect()
    }

    #[test]
    fn stopwords_sorted_for_binary_search() {
        let mut sorted = STOPWORDS;
        sorted.sort_unstable();
        assert_eq!(sorted, STOPWORDS);
    }

    #[test]
    fn normalize_examples() {
        assert_eq!(normalize_text("Deep   Learning: A Review").as_str(), "deep learning a review");
        assert_eq!(normalize_text("").as_str(), "");
        assert_eq!(normalize_text("Résumé-Parsing!!").as_str(), "resume parsing");
        assert_eq!(normalize_text("Straße").as_str(), "straße");
        assert_eq!(normalize_text("  ﬁle\tİstanbul ").as_str(), "file istanbul");
    }

    #[test]
    fn jaccard_examples() {
        assert_eq!(jaccard(&set(&["a", "b", "c"]), &set(&["b", "c", "d"])), 0.5);
        assert_eq!(jaccard(&set(&["x", "y"]), &set(&["x", "y"])), 1.0);
        assert_eq!(jaccard(&set(&["a"]), &set(&["b"])), 0.0);
        assert_eq!(jaccard::<&str>(&set(&[]), &set(&[])), 1.0);
    }

    #[test]
    fn edit_ratio_examples() {
        assert_eq!(edit_ratio("abc", "abc"), 1.0);
        assert!((edit_ratio("abc", "axc") - 0.6667).abs() < 1e-4);
        assert_eq!(edit_ratio("abc", ""), 0.0);
        assert_eq!(edit_ratio("", ""), 1.0);
    }

    #[test]
    fn char_ngram_examples() {
        let mut got = char_ngrams(&normalize_text("ab"), 1, 2);
        got.sort();
        assert_eq!(got, vec!["a", "ab", "b"]);
        assert!(char_ngrams(&normalize_text(""), 1, 5).is_empty());
        assert_eq!(char_ngrams(&normalize_text("abc"), 3, 3), vec!["abc"]);
    }

    #[test]
    fn embedding_basics() {
        let a = embed_document("Graph neural networks", "We study message passing.", 256);
        let b = embed_document("Graph neural networks", "We study message passing.", 256);
        assert_eq!(a, b);
        assert!((a.cosine(&b) - 1.0).abs() < 1e-12);
        assert!((a.norm() - 1.0).abs() < 1e-9);
        let z = embed_document("", "", 256);
        assert!(z.is_zero());
        assert_eq!(z.dim(), 256);
    }

    #[test]
    fn unrelated_texts_have_low_cosine() {
        // Word-disjoint random texts: signed hashing gives expected cosine 0.
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let word = |rng: &mut rand_chacha::ChaCha8Rng, prefix: char| -> String {
            let len = rng.gen_range(4..9);
            let mut w = String::from(prefix);
            for _ in 0..len {
                w.push(rng.gen_range(b'a'..=b'z') as char);
            }
            w
        };
        let mut worst: f64 = 0.0;
        for _ in 0..50 {
            let a: Vec<String> = (0..50).map(|_| word(&mut rng, 'q')).collect();
            let b: Vec<String> = (0..50).map(|_| word(&mut rng, 'z')).collect();
            let va = embed_document(&a.join(" "), "", 256);
            let vb = embed_document(&b.join(" "), "", 256);
            worst = worst.max(va.cosine(&vb));
        }
        assert!(worst < 0.5, "max cosine {worst}");
    }

    #[test]
    fn name_parsing() {
        let n = PersonName::parse("John A. Smith");
        assert_eq!((n.first.as_str(), n.middle.clone(), n.last.as_str()), ("john", vec!["a".to_string()], "smith"));
        let n = PersonName::parse("Smith, J.");
        assert_eq!((n.first.as_str(), n.last.as_str()), ("j", "smith"));
        let n = PersonName::parse("J.A. Smith");
        assert_eq!(n.middle, vec!["a"]);
        let n = PersonName::parse("Plato");
        assert!(n.is_mononym());
        assert_eq!(n.last, "plato");
    }

    #[test]
    fn name_compatibility_examples() {
        assert!(names_compatible("J. Smith", "John Smith"));
        assert!(!names_compatible("John Smith", "Jane Smith"));
        assert!(!names_compatible("John Smith", "John Smyth"));
        assert!(!names_compatible("John A. Smith", "John B. Smith"));
        assert!(names_compatible("John A. Smith", "John Smith"));
        assert!(names_compatible("Smith, John", "J. Smith"));
    }

    proptest! {
        #[test]
        fn normalize_is_idempotent(s in "\\PC{0,40}") {
            let once = normalize_text(&s);
            let twice = normalize_text(once.as_str());
            prop_assert_eq!(&once, &twice);
            prop_assert!(!once.as_str().contains("  "));
            prop_assert_eq!(once.as_str().trim(), once.as_str());
            prop_assert!(!once.as_str().chars().any(char::is_uppercase));
        }

        #[test]
        fn ascii_fast_paths_match_general(a in "[ -~]{0,60}", b in "[ -~]{0,60}") {
            prop_assert_eq!(normalize_ascii(&a), normalize_once(&a));
            prop_assert_eq!(edit_ratio(&a, &b), strsim::normalized_levenshtein(&a, &b));
        }

        #[test]
        fn similarity_is_symmetric(a in "[a-d ]{0,12}", b in "[a-d ]{0,12}") {
            prop_assert_eq!(edit_ratio(&a, &b), edit_ratio(&b, &a));
            let sa: HashSet<&str> = a.split(' ').collect();
            let sb: HashSet<&str> = b.split(' ').collect();
            prop_assert_eq!(jaccard(&sa, &sb), jaccard(&sb, &sa));
        }

        #[test]
        fn ngram_count_matches_formula(s in "[a-z]{0,20}", n in 1usize..6) {
            let t = normalize_text(&s);
            let len = t.as_str().chars().count();
            prop_assert_eq!(char_ngrams(&t, n, n).len(), (len + 1).saturating_sub(n));
        }

        #[test]
        fn embedding_norm_is_zero_or_one(title in "\\PC{0,30}", abs in "[a-z ]{0,60}") {
            let v = embed_document(&title, &abs, 64);
            let n = v.norm();
            prop_assert!(n == 0.0 || (n - 1.0).abs() < 1e-9);
        }
    }
}
