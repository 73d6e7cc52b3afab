//! Simulated account takeovers with gold labels.
//!
//! A takeover replaces a consecutive span of a victim's messages with an
//! equally sized consecutive span drawn from a random donor account. The
//! injected messages keep the victim's original timestamps: the attacker
//! posts on the victim's timeline, so the detector sees one coherent stream.

use alloc::string::{String, ToString};
use alloc::vec::Vec;

use rand::Rng;

use crate::corpus::{Account, Corpus, Label};
use crate::error::Error;
use crate::rng::rng_from_seed;

/// How the fraction of injected messages is chosen per compromised account.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RatioMode {
    Fixed(f64),
    UniformRandom { lo: f64, hi: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationConfig {
    pub compromise_probability: f64,
    pub ratio_mode: RatioMode,
    pub rng_seed: u64,
}

impl SimulationConfig {
    pub fn validate(&self) -> Result<(), Error> {
        if !(0.0..=1.0).contains(&self.compromise_probability) {
            return Err(Error::InvalidConfig(
                "compromise_probability must lie in [0,1]".to_string(),
            ));
        }
        match self.ratio_mode {
            RatioMode::Fixed(r) if r > 0.0 && r < 1.0 => Ok(()),
            RatioMode::UniformRandom { lo, hi } if lo > 0.0 && lo <= hi && hi < 1.0 => Ok(()),
            _ => Err(Error::InvalidConfig(
                "ratio must lie in (0,1); uniform bounds need 0 < lo <= hi < 1".to_string(),
            )),
        }
    }
}

/// Gold record of one injected takeover.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulationPlan {
    pub victim_id: String,
    pub donor_id: String,
    pub injected_start_index: usize,
    pub injected_count: usize,
    pub donor_start_index: usize,
    pub effective_ratio: f64,
}

/// Output of a corpus-level simulation: the relabeled corpus, the gold plans,
/// and the ids of accounts that were drawn for compromise but skipped because
/// no feasible donor was found.
#[derive(Debug, Clone)]
pub struct SimulationResult {
    pub corpus: Corpus,
    pub plans: Vec<SimulationPlan>,
    pub skipped: Vec<String>,
}

const MAX_DONOR_REDRAWS: usize = 100;

/// Plans one takeover: the injected span length is `round(ratio·n)` clamped
/// to `[1, n-1]` so at least one message is injected and at least one benign
/// message survives; span positions are uniform.
pub fn plan_attack(
    victim: &Account,
    donor: &Account,
    ratio: f64,
    rng: &mut impl Rng,
) -> Result<SimulationPlan, Error> {
    let n = victim.message_count();
    if n < 2 {
        return Err(Error::VictimTooShort {
            victim_id: victim.user_id.clone(),
            count: n,
        });
    }
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(Error::InvalidConfig("ratio must lie in (0,1)".to_string()));
    }
    // Round half away from zero, then clamp.
    let rounded = libm::round(ratio * n as f64) as usize;
    let injected_count = rounded.clamp(1, n - 1);
    if donor.message_count() < injected_count {
        return Err(Error::DonorTooShort {
            donor_id: donor.user_id.clone(),
            available: donor.message_count(),
            needed: injected_count,
        });
    }
    let injected_start_index = rng.gen_range(0..=n - injected_count);
    let donor_start_index = rng.gen_range(0..=donor.message_count() - injected_count);
    Ok(SimulationPlan {
        victim_id: victim.user_id.clone(),
        donor_id: donor.user_id.clone(),
        injected_start_index,
        injected_count,
        donor_start_index,
        effective_ratio: injected_count as f64 / n as f64,
    })
}

/// Executes a plan: texts and tokens of the injected span are replaced by the
/// donor span's, timestamps keep the victim's originals, and the account is
/// labeled compromised. Panics on a plan that does not fit either account.
pub fn apply_attack(victim: &Account, donor: &Account, plan: &SimulationPlan) -> Account {
    let mut messages = victim.messages.clone();
    for k in 0..plan.injected_count {
        let source = &donor.messages[plan.donor_start_index + k];
        let target = &mut messages[plan.injected_start_index + k];
        target.text = source.text.clone();
        target.tokens = source.tokens.clone();
    }
    Account {
        user_id: victim.user_id.clone(),
        messages,
        label: Label::Compromised,
    }
}

/// Simulates takeovers across a corpus.
///
/// Accounts are visited in sorted user-id order with a single generator
/// seeded from `rng_seed`, so results are bit-reproducible. Each account is
/// independently compromised with `compromise_probability`; donors are drawn
/// uniformly from the other accounts of the *original* corpus and redrawn
/// (bounded) when too short. Non-compromised accounts are labeled benign.
pub fn simulate_corpus(
    corpus: &Corpus,
    config: &SimulationConfig,
) -> Result<SimulationResult, Error> {
    config.validate()?;
    if corpus.len() < 2 {
        return Err(Error::InvalidConfig(
            "simulation needs a corpus with at least 2 accounts".to_string(),
        ));
    }
    let ids = corpus.sorted_ids();
    let mut rng = rng_from_seed(config.rng_seed);
    let mut out: Vec<Account> = Vec::with_capacity(ids.len());
    let mut plans = Vec::new();
    let mut skipped = Vec::new();

    for (idx, &id) in ids.iter().enumerate() {
        let victim = &corpus.accounts[id];
        let hit = rng.gen_bool(config.compromise_probability);
        if !hit {
            let mut benign = victim.clone();
            benign.label = Label::Benign;
            out.push(benign);
            continue;
        }
        let ratio = match config.ratio_mode {
            RatioMode::Fixed(r) => r,
            RatioMode::UniformRandom { lo, hi } => rng.gen_range(lo..=hi),
        };
        if victim.message_count() < 2 {
            skipped.push(victim.user_id.clone());
            let mut benign = victim.clone();
            benign.label = Label::Benign;
            out.push(benign);
            continue;
        }
        let mut attacked = None;
        for _ in 0..MAX_DONOR_REDRAWS {
            let mut donor_idx = rng.gen_range(0..ids.len() - 1);
            if donor_idx >= idx {
                donor_idx += 1;
            }
            let donor = &corpus.accounts[ids[donor_idx]];
            match plan_attack(victim, donor, ratio, &mut rng) {
                Ok(plan) => {
                    attacked = Some((apply_attack(victim, donor, &plan), plan));
                    break;
                }
                Err(Error::DonorTooShort { .. }) => continue,
                Err(e) => return Err(e),
            }
        }
        match attacked {
            Some((account, plan)) => {
                out.push(account);
                plans.push(plan);
            }
            None => {
                skipped.push(victim.user_id.clone());
                let mut benign = victim.clone();
                benign.label = Label::Benign;
                out.push(benign);
            }
        }
    }

    Ok(SimulationResult {
        corpus: Corpus::from_accounts(out),
        plans,
        skipped,
    })
}
