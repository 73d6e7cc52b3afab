//! Message streams, accounts, and the retention filters applied before
//! feature extraction.
//!
//! An [`Account`] is one user's time-ordered message stream plus a gold label.
//! A [`Corpus`] maps user ids to accounts and keeps per-token document
//! frequencies (one account = one document).

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;

/// Gold label for an account.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Label {
    Benign,
    Compromised,
    Unknown,
}

impl Label {
    /// 0 for benign, 1 for compromised; `None` when unlabeled.
    pub fn as_binary(self) -> Option<u8> {
        match self {
            Label::Benign => Some(0),
            Label::Compromised => Some(1),
            Label::Unknown => None,
        }
    }

    pub fn from_binary(v: u8) -> Label {
        if v == 0 {
            Label::Benign
        } else {
            Label::Compromised
        }
    }
}

/// One message in a user's stream. `tokens` is always exactly
/// `tokenize(&text)`; constructors enforce this.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Message {
    pub user_id: String,
    /// Seconds since the Unix epoch, UTC. Never negative.
    pub timestamp: i64,
    pub text: String,
    pub tokens: Vec<String>,
}

impl Message {
    pub fn new(user_id: impl Into<String>, timestamp: i64, text: impl Into<String>) -> Message {
        let text = text.into();
        debug_assert!(timestamp >= 0, "message timestamps are epoch seconds >= 0");
        let tokens = tokenize(&text);
        Message {
            user_id: user_id.into(),
            timestamp,
            text,
            tokens,
        }
    }

    /// Re-derives the token cache after a text replacement.
    pub fn set_text(&mut self, text: impl Into<String>) {
        self.text = text.into();
        self.tokens = tokenize(&self.text);
    }
}

/// A user's message stream, sorted ascending by timestamp with ties broken by
/// input order, plus the gold label.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Account {
    pub user_id: String,
    pub messages: Vec<Message>,
    pub label: Label,
}

impl Account {
    /// Builds an account from messages in input order. The stable sort keeps
    /// input order among equal timestamps, which the interval sampler relies
    /// on for determinism.
    pub fn new(user_id: impl Into<String>, mut messages: Vec<Message>) -> Account {
        assert!(!messages.is_empty(), "accounts must have at least one message");
        messages.sort_by_key(|m| m.timestamp);
        Account {
            user_id: user_id.into(),
            messages,
            label: Label::Unknown,
        }
    }

    pub fn message_count(&self) -> usize {
        self.messages.len()
    }

    /// Last timestamp minus first timestamp.
    pub fn coverage_seconds(&self) -> i64 {
        let first = self.messages.first().map(|m| m.timestamp).unwrap_or(0);
        let last = self.messages.last().map(|m| m.timestamp).unwrap_or(0);
        last - first
    }
}

/// All accounts, keyed by user id, plus per-token document frequencies
/// (number of accounts whose streams contain the token).
#[derive(Debug, Clone, Default)]
pub struct Corpus {
    pub accounts: BTreeMap<String, Account>,
    pub vocabulary_stats: BTreeMap<String, usize>,
}

impl Corpus {
    pub fn from_accounts(accounts: impl IntoIterator<Item = Account>) -> Corpus {
        let accounts: BTreeMap<String, Account> = accounts
            .into_iter()
            .map(|a| (a.user_id.clone(), a))
            .collect();
        let vocabulary_stats = document_frequencies(&accounts);
        Corpus {
            accounts,
            vocabulary_stats,
        }
    }

    pub fn len(&self) -> usize {
        self.accounts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.accounts.is_empty()
    }

    /// Account ids in sorted order. All seeded iteration uses this order.
    pub fn sorted_ids(&self) -> Vec<&str> {
        self.accounts.keys().map(String::as_str).collect()
    }
}

fn document_frequencies(accounts: &BTreeMap<String, Account>) -> BTreeMap<String, usize> {
    let mut df: BTreeMap<String, usize> = BTreeMap::new();
    for account in accounts.values() {
        let mut seen: BTreeSet<&str> = BTreeSet::new();
        for msg in &account.messages {
            for tok in &msg.tokens {
                seen.insert(tok);
            }
        }
        for tok in seen {
            *df.entry(String::from(tok)).or_insert(0) += 1;
        }
    }
    df
}

/// Splits text into lowercased tokens.
///
/// Rules: split on Unicode whitespace; lowercase; strip leading and trailing
/// characters that are not alphanumeric, except a leading `#` or `@` which is
/// retained; tokens beginning with `http://` or `https://` are kept verbatim
/// (lowercased) with no stripping; empty results are dropped.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split_whitespace()
        .filter_map(|raw| {
            let lower = raw.to_lowercase();
            if lower.starts_with("http://") || lower.starts_with("https://") {
                return Some(lower);
            }
            let trimmed = lower.trim_end_matches(strippable);
            let mut start = 0;
            for ch in trimmed.chars() {
                if ch == '#' || ch == '@' || !strippable(ch) {
                    break;
                }
                start += ch.len_utf8();
            }
            let token = &trimmed[start..];
            if token.is_empty() {
                None
            } else {
                Some(String::from(token))
            }
        })
        .collect()
}

// A char is strippable at token edges when it is not alphanumeric. This drops
// punctuation, symbols, and emoji; an emoji-only token tokenizes to nothing.
fn strippable(ch: char) -> bool {
    !ch.is_alphanumeric()
}

/// Drops accounts whose time coverage is not strictly greater than
/// `min_coverage_seconds`; then, if `top_k` is given, keeps the `k` accounts
/// with the most messages (ties broken by ascending user id).
pub fn apply_retention(corpus: &Corpus, min_coverage_seconds: i64, top_k: Option<usize>) -> Corpus {
    let mut kept: Vec<&Account> = corpus
        .accounts
        .values()
        .filter(|a| a.coverage_seconds() > min_coverage_seconds)
        .collect();
    if let Some(k) = top_k {
        kept.sort_by(|a, b| {
            b.message_count()
                .cmp(&a.message_count())
                .then_with(|| a.user_id.cmp(&b.user_id))
        });
        kept.truncate(k);
    }
    Corpus::from_accounts(kept.into_iter().cloned())
}
