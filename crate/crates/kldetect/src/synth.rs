//! Deterministic synthetic corpus generator.
//!
//! Each account draws tokens from a mixture of a shared Zipf-weighted
//! vocabulary and an account-specific vocabulary; `shared_weight` controls
//! how much accounts overlap. Accounts also carry their own posting-hour
//! habit, hashtag/mention/URL/retweet rates, friend lists, and sentiment
//! bias, so the baseline feature families see realistic per-account
//! variation. Generation is per-account seeded: the corpus is identical
//! regardless of iteration or scheduling order.

use kldetect_core::corpus::{Account, Corpus, Message};
use kldetect_core::rng::{account_rng, mix_seed};
use rand::Rng;

#[derive(Debug, Clone)]
pub struct SynthParams {
    pub accounts: usize,
    pub min_messages: usize,
    pub max_messages: usize,
    pub min_tokens: usize,
    pub max_tokens: usize,
    pub shared_vocab: usize,
    pub account_vocab: usize,
    /// Probability that a content token comes from the shared vocabulary
    /// rather than the account's own.
    pub shared_weight: f64,
    pub seed: u64,
}

impl Default for SynthParams {
    fn default() -> SynthParams {
        SynthParams {
            accounts: 200,
            min_messages: 60,
            max_messages: 140,
            min_tokens: 6,
            max_tokens: 12,
            shared_vocab: 1200,
            account_vocab: 40,
            shared_weight: 0.55,
            seed: 0,
        }
    }
}

// Sentiment tokens drawn from the bundled lexicons so the sentiment feature
// is exercised.
const POSITIVE_WORDS: [&str; 5] = ["good", "great", "love", "happy", "nice"];
const NEGATIVE_WORDS: [&str; 5] = ["bad", "sad", "hate", "awful", "wrong"];

// Each account writes in one language, realized as function words unique to
// that language's bundled stopword list. A takeover then reads as a language
// switch, which the behavioral baseline can pick up.
const LANGUAGE_WORDS: [[&str; 5]; 5] = [
    ["the", "and", "of", "have", "they"],
    ["el", "ser", "su", "tener", "estar"],
    ["les", "des", "dans", "pour", "avec"],
    ["der", "das", "und", "nicht", "mit"],
    ["nao", "uma", "dos", "foi", "tambem"],
];

const EPOCH_BASE: i64 = 1_600_000_000;

pub fn account_id(index: usize) -> String {
    format!("u{index:05}")
}

/// Generates the corpus. Labels are `Unknown`; the simulator assigns gold
/// labels later.
pub fn generate(params: &SynthParams) -> Corpus {
    // Zipf-ish cumulative weights over the shared vocabulary.
    let mut cum = Vec::with_capacity(params.shared_vocab);
    let mut total = 0.0;
    for rank in 0..params.shared_vocab {
        total += 1.0 / (rank as f64 + 10.0);
        cum.push(total);
    }

    let accounts = (0..params.accounts).map(|i| {
        let id = account_id(i);
        let mut rng = account_rng(mix_seed(params.seed, 0x5359_4e54), &id);
        let n_messages = rng.gen_range(params.min_messages..=params.max_messages);
        let preferred_hour: i64 = rng.gen_range(0..24);
        let language = rng.gen_range(0..LANGUAGE_WORDS.len());
        let stopword_p = 0.45 + 0.30 * rng.gen::<f64>();
        let hashtag_p = 0.30 + 0.35 * rng.gen::<f64>();
        let mention_p = 0.30 + 0.35 * rng.gen::<f64>();
        let url_p = 0.05 + 0.20 * rng.gen::<f64>();
        let retweet_p = 0.05 + 0.10 * rng.gen::<f64>();
        let sentiment_bias = rng.gen_range(-1.0..1.0);
        let friends: Vec<String> = (0..10)
            .map(|_| format!("@{}", account_id(rng.gen_range(0..params.accounts))))
            .collect();
        let own_tags: Vec<String> = (0..8).map(|k| format!("#t{i}x{k}")).collect();

        let messages = (0..n_messages)
            .map(|j| {
                let day = (j / 3) as i64;
                let timestamp =
                    EPOCH_BASE + day * 86_400 + preferred_hour * 3_600 + rng.gen_range(0..3_600);
                let mut tokens: Vec<String> = Vec::new();
                if rng.gen::<f64>() < retweet_p {
                    tokens.push("rt".to_string());
                    tokens.push(friends[rng.gen_range(0..friends.len())].clone());
                }
                let content = rng.gen_range(params.min_tokens..=params.max_tokens);
                for _ in 0..content {
                    let roll = rng.gen::<f64>();
                    if roll < 0.08 {
                        let positive = rng.gen::<f64>() < (1.0 + sentiment_bias) / 2.0;
                        let pool = if positive { &POSITIVE_WORDS } else { &NEGATIVE_WORDS };
                        tokens.push(pool[rng.gen_range(0..pool.len())].to_string());
                    } else if rng.gen::<f64>() < params.shared_weight {
                        let u: f64 = rng.gen::<f64>() * total;
                        let idx = cum.partition_point(|&c| c < u);
                        tokens.push(format!("w{:04}", idx.min(params.shared_vocab - 1)));
                    } else {
                        tokens.push(format!("u{i}t{:02}", rng.gen_range(0..params.account_vocab)));
                    }
                }
                if rng.gen::<f64>() < stopword_p {
                    let words = &LANGUAGE_WORDS[language];
                    tokens.push(words[rng.gen_range(0..words.len())].to_string());
                }
                if rng.gen::<f64>() < hashtag_p {
                    if rng.gen::<f64>() < 0.5 {
                        tokens.push(own_tags[rng.gen_range(0..own_tags.len())].clone());
                    } else {
                        tokens.push(format!("#shared{:02}", rng.gen_range(0..30)));
                    }
                }
                if rng.gen::<f64>() < mention_p {
                    tokens.push(friends[rng.gen_range(0..friends.len())].clone());
                }
                if rng.gen::<f64>() < url_p {
                    tokens.push(format!("http://sh.rt/p{:02}", rng.gen_range(0..20)));
                }
                Message::new(id.clone(), timestamp, tokens.join(" "))
            })
            .collect();
        Account::new(id, messages)
    });
    Corpus::from_accounts(accounts)
}
