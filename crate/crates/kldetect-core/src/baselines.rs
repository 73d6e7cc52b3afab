//! Comparison feature families: bag-of-words with supervised selection,
//! behavioral-profile anomaly scores, and per-message content counts.
//!
//! The bundled stopword and sentiment lexicons are plain UTF-8 files, one
//! token per line, embedded at compile time so extraction needs no IO.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::corpus::{Account, Corpus, Label, Message};
use crate::error::Error;

const STOPWORDS: [(&str, &str); 5] = [
    ("de", include_str!("assets/stopwords_de.txt")),
    ("en", include_str!("assets/stopwords_en.txt")),
    ("es", include_str!("assets/stopwords_es.txt")),
    ("fr", include_str!("assets/stopwords_fr.txt")),
    ("pt", include_str!("assets/stopwords_pt.txt")),
];

const SENTIMENT_POSITIVE: &str = include_str!("assets/sentiment_positive.txt");
const SENTIMENT_NEGATIVE: &str = include_str!("assets/sentiment_negative.txt");

pub const COMPA_FEATURE_NAMES: [&str; 5] = [
    "compa_hour",
    "compa_language",
    "compa_topics",
    "compa_links",
    "compa_mentions",
];

pub const VANDAM_FEATURE_NAMES: [&str; 5] = [
    "vd_hashtags",
    "vd_mentions",
    "vd_urls",
    "vd_retweets",
    "vd_sentiment",
];

/// Named per-account feature values for one baseline family.
#[derive(Debug, Clone, PartialEq)]
pub struct BaselineVector {
    pub user_id: String,
    pub label: Label,
    pub names: &'static [&'static str],
    pub values: Vec<f64>,
}

// ---------------------------------------------------------------------------
// Bag of words
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BowRepresentation {
    Count,
    TfIdf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BowSelector {
    ChiSquare,
    MutualInformation,
    None,
}

#[derive(Debug, Clone)]
pub struct BowConfig {
    pub representation: BowRepresentation,
    pub max_vocab: usize,
    pub min_df: usize,
    pub max_df_fraction: f64,
    pub selector: BowSelector,
    /// Number of terms kept by supervised selection; ignored when the
    /// selector is `None`.
    pub selected_k: usize,
}

impl Default for BowConfig {
    fn default() -> BowConfig {
        BowConfig {
            representation: BowRepresentation::Count,
            max_vocab: 100_000,
            min_df: 20,
            max_df_fraction: 0.10,
            selector: BowSelector::None,
            selected_k: 0,
        }
    }
}

impl BowConfig {
    pub fn validate(&self) -> Result<(), Error> {
        if self.min_df == 0 {
            return Err(Error::InvalidConfig("bow min_df must be positive".to_string()));
        }
        if !(self.max_df_fraction > 0.0 && self.max_df_fraction <= 1.0) {
            return Err(Error::InvalidConfig(
                "bow max_df_fraction must lie in (0,1]".to_string(),
            ));
        }
        if self.max_vocab == 0 {
            return Err(Error::InvalidConfig("bow max_vocab must be positive".to_string()));
        }
        if self.selector != BowSelector::None && self.selected_k == 0 {
            return Err(Error::InvalidConfig(
                "bow selected_k must be positive when a selector is set".to_string(),
            ));
        }
        Ok(())
    }
}

/// One account's sparse bag-of-words vector; entries are `(column, value)`
/// sorted by column.
#[derive(Debug, Clone, PartialEq)]
pub struct BowRow {
    pub user_id: String,
    pub entries: Vec<(usize, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BowMatrix {
    /// Final vocabulary in lexicographic order; column `i` is `vocabulary[i]`.
    pub vocabulary: Vec<String>,
    /// One row per corpus account, in sorted user-id order.
    pub rows: Vec<BowRow>,
}

/// Chi-square statistic of a 2x2 contingency table
/// `(present,pos) (present,neg) / (absent,pos) (absent,neg)`.
/// Degenerate marginals score zero.
pub fn chi_square_2x2(a: usize, b: usize, c: usize, d: usize) -> f64 {
    let n = (a + b + c + d) as f64;
    let den = ((a + b) * (c + d) * (a + c) * (b + d)) as f64;
    if den == 0.0 {
        return 0.0;
    }
    let ad_bc = (a * d) as f64 - (b * c) as f64;
    n * ad_bc * ad_bc / den
}

/// Mutual information (nats) of the same 2x2 table, with `0·ln 0 = 0`.
pub fn mutual_information_2x2(a: usize, b: usize, c: usize, d: usize) -> f64 {
    let n = (a + b + c + d) as f64;
    if n == 0.0 {
        return 0.0;
    }
    let cells = [
        (a, a + b, a + c),
        (b, a + b, b + d),
        (c, c + d, a + c),
        (d, c + d, b + d),
    ];
    let mut total = 0.0;
    for (joint, row, col) in cells {
        if joint == 0 {
            continue;
        }
        total += (joint as f64 / n) * libm::log(joint as f64 * n / (row as f64 * col as f64));
    }
    total
}

/// Builds the bag-of-words matrix.
///
/// Each document is the concatenation of one account's messages. Document
/// frequencies, the df filter, TF*IDF idf terms, and supervised selection are
/// computed on the training documents only; test documents are merely
/// transformed. Vocabulary truncation ranks by descending df with ties broken
/// lexicographically.
pub fn build_bow_matrix(
    corpus: &Corpus,
    config: &BowConfig,
    training_ids: &BTreeSet<String>,
) -> Result<BowMatrix, Error> {
    config.validate()?;
    if training_ids.is_empty() {
        return Err(Error::EmptyInput("bow training set is empty".to_string()));
    }
    for id in training_ids {
        if !corpus.accounts.contains_key(id) {
            return Err(Error::UnknownAccount(id.clone()));
        }
    }

    // Per-account token counts (document = all messages concatenated).
    let doc_counts: BTreeMap<&str, BTreeMap<&str, u64>> = corpus
        .accounts
        .values()
        .map(|a| {
            let mut counts: BTreeMap<&str, u64> = BTreeMap::new();
            for msg in &a.messages {
                for tok in &msg.tokens {
                    *counts.entry(tok.as_str()).or_insert(0) += 1;
                }
            }
            (a.user_id.as_str(), counts)
        })
        .collect();

    let n_train = training_ids.len();
    let mut df: BTreeMap<&str, usize> = BTreeMap::new();
    for id in training_ids {
        for tok in doc_counts[id.as_str()].keys() {
            *df.entry(tok).or_insert(0) += 1;
        }
    }

    let max_df = config.max_df_fraction * n_train as f64;
    let mut candidates: Vec<(&str, usize)> = df
        .iter()
        .filter(|&(_, &d)| d >= config.min_df && d as f64 <= max_df)
        .map(|(&t, &d)| (t, d))
        .collect();
    candidates.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    candidates.truncate(config.max_vocab);
    if candidates.is_empty() {
        return Err(Error::EmptyBowVocabulary);
    }

    if config.selector != BowSelector::None {
        let mut labels: BTreeMap<&str, u8> = BTreeMap::new();
        for id in training_ids {
            let label = corpus.accounts[id]
                .label
                .as_binary()
                .ok_or_else(|| Error::UnlabeledAccount(id.clone()))?;
            labels.insert(id.as_str(), label);
        }
        let positives = labels.values().filter(|&&l| l == 1).count();
        let negatives = n_train - positives;
        let mut scored: Vec<(&str, usize, f64)> = candidates
            .iter()
            .map(|&(tok, d)| {
                // Binary-presence contingency against training labels.
                let a = training_ids
                    .iter()
                    .filter(|id| labels[id.as_str()] == 1 && doc_counts[id.as_str()].contains_key(tok))
                    .count();
                let present = df[tok];
                let b = present - a;
                let c = positives - a;
                let d2 = negatives - b;
                let score = match config.selector {
                    BowSelector::ChiSquare => chi_square_2x2(a, b, c, d2),
                    BowSelector::MutualInformation => mutual_information_2x2(a, b, c, d2),
                    BowSelector::None => unreachable!(),
                };
                (tok, d, score)
            })
            .collect();
        scored.sort_by(|x, y| {
            y.2.partial_cmp(&x.2)
                .expect("selection scores are finite")
                .then_with(|| x.0.cmp(y.0))
        });
        scored.truncate(config.selected_k);
        candidates = scored.into_iter().map(|(t, d, _)| (t, d)).collect();
    }

    let mut vocabulary: Vec<String> = candidates.iter().map(|&(t, _)| t.to_string()).collect();
    vocabulary.sort();
    let column: BTreeMap<&str, usize> = vocabulary
        .iter()
        .enumerate()
        .map(|(i, t)| (t.as_str(), i))
        .collect();

    let rows = corpus
        .accounts
        .values()
        .map(|a| {
            let counts = &doc_counts[a.user_id.as_str()];
            let mut entries: Vec<(usize, f64)> = Vec::new();
            for (tok, &col) in &column {
                if let Some(&tf) = counts.get(tok) {
                    let value = match config.representation {
                        BowRepresentation::Count => tf as f64,
                        BowRepresentation::TfIdf => {
                            tf as f64 * libm::log(n_train as f64 / df[tok] as f64)
                        }
                    };
                    entries.push((col, value));
                }
            }
            BowRow {
                user_id: a.user_id.clone(),
                entries,
            }
        })
        .collect();

    Ok(BowMatrix { vocabulary, rows })
}

// ---------------------------------------------------------------------------
// COMPA-style behavioral anomaly scores
// ---------------------------------------------------------------------------

/// Incrementally built behavioral profile over a message prefix: categorical
/// frequency tables for posting hour, language, hashtag topics, link
/// presence, and mentioned users.
#[derive(Debug, Clone, Default)]
pub struct CompaProfile {
    messages_seen: usize,
    hour_counts: [usize; 24],
    language_counts: BTreeMap<&'static str, usize>,
    /// Per hashtag: number of profile messages containing it.
    topic_counts: BTreeMap<String, usize>,
    link_counts: [usize; 2],
    /// Per mention target: number of profile messages containing it.
    mention_counts: BTreeMap<String, usize>,
}

impl CompaProfile {
    pub fn observe(&mut self, msg: &Message) {
        self.hour_counts[hour_of_day(msg.timestamp)] += 1;
        *self
            .language_counts
            .entry(language_id(&msg.tokens))
            .or_insert(0) += 1;
        for tag in message_topics(msg) {
            *self.topic_counts.entry(tag.to_string()).or_insert(0) += 1;
        }
        self.link_counts[usize::from(has_link(msg))] += 1;
        for target in message_mentions(msg) {
            *self.mention_counts.entry(target.to_string()).or_insert(0) += 1;
        }
        self.messages_seen += 1;
    }

    fn relfreq(&self, count: usize) -> f64 {
        count as f64 / self.messages_seen as f64
    }

    /// Anomaly scores of one message against this profile, in
    /// [`COMPA_FEATURE_NAMES`] order. Multi-valued features (topics,
    /// mentions) return `None` when the message carries no value.
    pub fn anomalies(&self, msg: &Message) -> [Option<f64>; 5] {
        debug_assert!(self.messages_seen > 0, "profile must precede scoring");
        let hour = 1.0 - self.relfreq(self.hour_counts[hour_of_day(msg.timestamp)]);
        let lang = 1.0
            - self.relfreq(
                self.language_counts
                    .get(language_id(&msg.tokens))
                    .copied()
                    .unwrap_or(0),
            );
        let topics = mean_novelty(&message_topics(msg), |t| {
            self.relfreq(self.topic_counts.get(t).copied().unwrap_or(0))
        });
        let link = 1.0 - self.relfreq(self.link_counts[usize::from(has_link(msg))]);
        let mentions = mean_novelty(&message_mentions(msg), |t| {
            self.relfreq(self.mention_counts.get(t).copied().unwrap_or(0))
        });
        [Some(hour), Some(lang), topics, Some(link), mentions]
    }
}

fn mean_novelty(values: &BTreeSet<&str>, relfreq: impl Fn(&str) -> f64) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let sum: f64 = values.iter().map(|&v| 1.0 - relfreq(v)).sum();
    Some(sum / values.len() as f64)
}

fn hour_of_day(timestamp: i64) -> usize {
    (timestamp.rem_euclid(86_400) / 3_600) as usize
}

fn message_topics(msg: &Message) -> BTreeSet<&str> {
    msg.tokens
        .iter()
        .filter(|t| t.starts_with('#'))
        .map(String::as_str)
        .collect()
}

fn message_mentions(msg: &Message) -> BTreeSet<&str> {
    msg.tokens
        .iter()
        .filter(|t| t.starts_with('@'))
        .map(String::as_str)
        .collect()
}

fn is_url(token: &str) -> bool {
    token.starts_with("http://") || token.starts_with("https://")
}

fn has_link(msg: &Message) -> bool {
    msg.tokens.iter().any(|t| is_url(t))
}

/// Behavioral anomaly features: messages are replayed in temporal order, each
/// scored against the profile of its predecessors, and the per-feature scores
/// are averaged over messages 1..n-1. The first message has no prior profile
/// and is never scored. A feature that never fires scores zero.
pub fn compa_features(account: &Account) -> BaselineVector {
    assert!(
        account.message_count() >= 2,
        "compa features need at least two messages"
    );
    let mut profile = CompaProfile::default();
    profile.observe(&account.messages[0]);
    let mut sums = [0.0f64; 5];
    let mut firing = [0usize; 5];
    for msg in &account.messages[1..] {
        for (i, anomaly) in profile.anomalies(msg).into_iter().enumerate() {
            if let Some(a) = anomaly {
                sums[i] += a;
                firing[i] += 1;
            }
        }
        profile.observe(msg);
    }
    let values = (0..5)
        .map(|i| if firing[i] == 0 { 0.0 } else { sums[i] / firing[i] as f64 })
        .collect();
    BaselineVector {
        user_id: account.user_id.clone(),
        label: account.label,
        names: &COMPA_FEATURE_NAMES,
        values,
    }
}

// ---------------------------------------------------------------------------
// VanDam-style content counts
// ---------------------------------------------------------------------------

/// Per-account means of per-message hashtag, mention, and URL counts, the
/// retweet indicator, and a lexicon sentiment score.
pub fn vandam_features(account: &Account) -> BaselineVector {
    assert!(
        account.message_count() >= 1,
        "vandam features need a non-empty account"
    );
    let n = account.message_count() as f64;
    let mut sums = [0.0f64; 5];
    for msg in &account.messages {
        let hashtags = msg.tokens.iter().filter(|t| t.starts_with('#')).count();
        let mentions = msg.tokens.iter().filter(|t| t.starts_with('@')).count();
        let urls = msg.tokens.iter().filter(|t| is_url(t)).count();
        let retweet = msg.text.to_lowercase().starts_with("rt ")
            || msg.tokens.first().map(String::as_str) == Some("rt");
        let pos = msg
            .tokens
            .iter()
            .filter(|t| lexicon_contains(SENTIMENT_POSITIVE, t))
            .count() as f64;
        let neg = msg
            .tokens
            .iter()
            .filter(|t| lexicon_contains(SENTIMENT_NEGATIVE, t))
            .count() as f64;
        let sentiment = (pos - neg) / (msg.tokens.len().max(1) as f64);
        sums[0] += hashtags as f64;
        sums[1] += mentions as f64;
        sums[2] += urls as f64;
        sums[3] += f64::from(retweet);
        sums[4] += sentiment;
    }
    BaselineVector {
        user_id: account.user_id.clone(),
        label: account.label,
        names: &VANDAM_FEATURE_NAMES,
        values: sums.iter().map(|s| s / n).collect(),
    }
}

fn lexicon_contains(lexicon: &str, token: &str) -> bool {
    lexicon.lines().any(|w| w == token)
}

/// Heuristic language identifier: the language whose bundled stopword list
/// hits the most tokens. Zero hits yield "unknown"; ties go to the
/// lexicographically first language id.
pub fn language_id(tokens: &[String]) -> &'static str {
    let mut best = "unknown";
    let mut best_hits = 0usize;
    for (lang, list) in STOPWORDS {
        let hits = tokens.iter().filter(|t| lexicon_contains(list, t)).count();
        if hits > best_hits {
            best = lang;
            best_hits = hits;
        }
    }
    best
}
