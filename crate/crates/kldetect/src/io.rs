//! Corpus stream files and gold-label files.
//!
//! Stream format (also used for the simulated-corpus cache): UTF-8 TSV, one
//! message per line, `user_id<TAB>epoch_seconds<TAB>text`. Tabs, newlines,
//! and backslashes inside the text are escaped as `\t`, `\n`, `\\`. Lines
//! starting with `#` are comments; the cache's first line is a versioned
//! provenance comment.

use std::collections::BTreeMap;
use std::path::Path;

use anyhow::{bail, Context, Result};

use kldetect_core::corpus::{Account, Corpus, Label, Message};
use kldetect_core::simulator::SimulationPlan;

use crate::formats::{atomic_write, format_sig9, ProvenanceHeader};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct LoadStats {
    pub messages: usize,
    pub malformed: usize,
    pub accounts: usize,
}

pub fn escape_text(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for ch in text.chars() {
        match ch {
            '\\' => out.push_str("\\\\"),
            '\t' => out.push_str("\\t"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            other => out.push(other),
        }
    }
    out
}

pub fn unescape_text(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    let mut chars = text.chars();
    while let Some(ch) = chars.next() {
        if ch != '\\' {
            out.push(ch);
            continue;
        }
        match chars.next() {
            Some('t') => out.push('\t'),
            Some('n') => out.push('\n'),
            Some('r') => out.push('\r'),
            Some('\\') => out.push('\\'),
            // Unknown escapes are kept literally.
            Some(other) => {
                out.push('\\');
                out.push(other);
            }
            None => out.push('\\'),
        }
    }
    out
}

/// Loads a message-stream TSV into a corpus.
///
/// Malformed lines (wrong field count, bad or negative timestamp) are counted
/// and skipped; more than 10% malformed is treated as a wrong-format signal
/// and fails the load.
pub fn load_corpus(path: &Path) -> Result<(Corpus, LoadStats)> {
    let raw = std::fs::read_to_string(path)
        .with_context(|| format!("cannot read corpus {}", path.display()))?;
    let mut streams: BTreeMap<String, Vec<Message>> = BTreeMap::new();
    let mut stats = LoadStats::default();
    let mut considered = 0usize;
    for line in raw.lines() {
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        considered += 1;
        let mut fields = line.split('\t');
        let parsed = match (fields.next(), fields.next(), fields.next(), fields.next()) {
            (Some(user), Some(ts), Some(text), None) if !user.is_empty() => {
                match ts.parse::<i64>() {
                    Ok(t) if t >= 0 => Some((user, t, text)),
                    _ => None,
                }
            }
            _ => None,
        };
        match parsed {
            Some((user, ts, text)) => {
                streams
                    .entry(user.to_string())
                    .or_default()
                    .push(Message::new(user, ts, unescape_text(text)));
                stats.messages += 1;
            }
            None => stats.malformed += 1,
        }
    }
    if considered > 0 && stats.malformed * 10 > considered {
        bail!(
            "{} of {} lines malformed in {}; this exceeds 10% and signals a wrong format",
            stats.malformed,
            considered,
            path.display()
        );
    }
    let corpus = Corpus::from_accounts(
        streams
            .into_iter()
            .map(|(user_id, messages)| Account::new(user_id, messages)),
    );
    stats.accounts = corpus.len();
    Ok((corpus, stats))
}

/// Writes a corpus in the stream format, with a provenance comment first.
/// Accounts are written in sorted id order, messages in stream order, so the
/// output is byte-deterministic and `load_corpus` is its inverse.
pub fn write_corpus(path: &Path, corpus: &Corpus, header: &ProvenanceHeader) -> Result<()> {
    let mut out = String::new();
    out.push_str(&header.line("corpus"));
    for account in corpus.accounts.values() {
        for msg in &account.messages {
            out.push_str(&account.user_id);
            out.push('\t');
            out.push_str(&msg.timestamp.to_string());
            out.push('\t');
            out.push_str(&escape_text(&msg.text));
            out.push('\n');
        }
    }
    atomic_write(path, &out)
}

/// One gold-label row. Benign rows have no plan fields.
#[derive(Debug, Clone, PartialEq)]
pub struct GoldRow {
    pub user_id: String,
    pub label: u8,
    pub plan: Option<SimulationPlan>,
}

/// Writes gold labels: `user_id<TAB>label<TAB>injected_start<TAB>
/// injected_count<TAB>donor_id<TAB>effective_ratio`, benign rows with empty
/// trailing fields.
pub fn write_gold(
    path: &Path,
    corpus: &Corpus,
    plans: &[SimulationPlan],
    header: &ProvenanceHeader,
) -> Result<()> {
    let by_victim: BTreeMap<&str, &SimulationPlan> =
        plans.iter().map(|p| (p.victim_id.as_str(), p)).collect();
    let mut out = String::new();
    out.push_str(&header.line("gold"));
    out.push_str("# user_id\tlabel\tinjected_start\tinjected_count\tdonor_id\teffective_ratio\n");
    for account in corpus.accounts.values() {
        let label = match account.label {
            Label::Compromised => 1,
            _ => 0,
        };
        match by_victim.get(account.user_id.as_str()) {
            Some(plan) => out.push_str(&format!(
                "{}\t{}\t{}\t{}\t{}\t{}\n",
                account.user_id,
                label,
                plan.injected_start_index,
                plan.injected_count,
                plan.donor_id,
                format_sig9(plan.effective_ratio),
            )),
            None => out.push_str(&format!("{}\t{}\t\t\t\t\n", account.user_id, label)),
        }
    }
    atomic_write(path, &out)
}

pub fn read_gold(path: &Path) -> Result<Vec<GoldRow>> {
    let raw = std::fs::read_to_string(path)
        .with_context(|| format!("cannot read gold file {}", path.display()))?;
    let mut rows = Vec::new();
    for (lineno, line) in raw.lines().enumerate() {
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 6 {
            bail!("gold line {}: expected 6 fields, got {}", lineno + 1, fields.len());
        }
        let user_id = fields[0].to_string();
        let label: u8 = fields[1]
            .parse()
            .with_context(|| format!("gold line {}: bad label", lineno + 1))?;
        let plan = if fields[2].is_empty() {
            None
        } else {
            Some(SimulationPlan {
                victim_id: user_id.clone(),
                donor_id: fields[4].to_string(),
                injected_start_index: fields[2].parse()?,
                injected_count: fields[3].parse()?,
                donor_start_index: 0,
                effective_ratio: fields[5].parse()?,
            })
        };
        rows.push(GoldRow { user_id, label, plan });
    }
    Ok(rows)
}

/// Applies gold labels to a freshly loaded corpus cache.
pub fn apply_gold_labels(corpus: &mut Corpus, rows: &[GoldRow]) -> Result<()> {
    for row in rows {
        let account = corpus
            .accounts
            .get_mut(&row.user_id)
            .with_context(|| format!("gold row for unknown account {}", row.user_id))?;
        account.label = Label::from_binary(row.label);
    }
    for account in corpus.accounts.values() {
        if account.label == Label::Unknown {
            bail!("account {} missing from gold file", account.user_id);
        }
    }
    Ok(())
}
