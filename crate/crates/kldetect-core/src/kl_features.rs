//! Randomized interval sampling of per-account KL divergences.
//!
//! For each account we repeatedly draw a random consecutive span of messages
//! as the hypothesized attack partition, estimate a language model for the
//! span and one for its complement, and record the divergence between them.
//! The max, min, mean, and population variance of the sampled divergences form
//! the account's feature vector.

use alloc::string::String;
use alloc::vec::Vec;

use rand::Rng;

use crate::corpus::Account;
use crate::error::Error;
use crate::langmodel::{count_tokens, divergence, smooth_pair, KlDirection};
use crate::rng::account_rng;

/// Time granularity for interval endpoints. Message index is the finest
/// granularity and the only one instantiated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Granularity {
    #[default]
    PerMessage,
}

#[derive(Debug, Clone)]
pub struct SamplerConfig {
    pub num_samples: usize,
    pub granularity: Granularity,
    pub rng_seed: u64,
    pub kl_direction: KlDirection,
}

impl Default for SamplerConfig {
    fn default() -> SamplerConfig {
        SamplerConfig {
            num_samples: 50,
            granularity: Granularity::PerMessage,
            rng_seed: 0,
            kl_direction: KlDirection::default(),
        }
    }
}

/// Aggregate statistics of one account's sampled divergences.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KlStats {
    pub max: f64,
    pub min: f64,
    pub mean: f64,
    /// Population variance (divide by n).
    pub variance: f64,
}

impl KlStats {
    pub const FEATURE_NAMES: [&'static str; 4] = ["kl_max", "kl_min", "kl_mean", "kl_variance"];

    pub fn as_row(&self) -> [f64; 4] {
        [self.max, self.min, self.mean, self.variance]
    }
}

/// Per-account feature vector: the four aggregate statistics plus identity.
#[derive(Debug, Clone, PartialEq)]
pub struct KlFeatureVector {
    pub user_id: String,
    pub stats: KlStats,
}

/// One batch of sampled divergences. `zero_filled` counts samples that were
/// recorded as 0.0 because no draw produced two token-bearing partitions
/// within the redraw budget.
#[derive(Debug, Clone, PartialEq)]
pub struct KlSamples {
    pub values: Vec<f64>,
    pub zero_filled: usize,
}

// Bounded redraws when a partition tokenizes to nothing (e.g. emoji-only
// messages); afterwards the sample is recorded as zero.
const MAX_EMPTY_PARTITION_REDRAWS: usize = 1000;

/// Draws a random attack interval over `n` messages: an inclusive index span
/// `[start, end]` whose complement is non-empty. Uniform over admissible
/// spans via rejection. At `n = 2` the two single-message spans are the only
/// admissible draws.
pub fn draw_interval(n: usize, rng: &mut impl Rng) -> Result<(usize, usize), Error> {
    if n < 2 {
        return Err(Error::AccountTooShort { count: n });
    }
    loop {
        let start = rng.gen_range(0..n);
        let end = rng.gen_range(0..n);
        if start > end {
            continue;
        }
        if end - start + 1 == n {
            continue;
        }
        return Ok((start, end));
    }
}

/// Samples `num_samples` divergences for one account.
///
/// Each sample splits the stream into the attack span `[start, end]` and its
/// complement (prefix plus suffix), smooths both unigram models over the
/// shared vocabulary, and records the KL divergence in the configured
/// direction. The per-account generator is derived from the config seed and
/// the user id, so results are independent of scheduling order.
pub fn sample_kl(account: &Account, config: &SamplerConfig) -> Result<KlSamples, Error> {
    let Granularity::PerMessage = config.granularity;
    let n = account.message_count();
    if n < 2 {
        return Err(Error::AccountTooShort { count: n });
    }
    let mut rng = account_rng(config.rng_seed, &account.user_id);
    let msgs = &account.messages;
    let mut values = Vec::with_capacity(config.num_samples);
    let mut zero_filled = 0;
    for _ in 0..config.num_samples {
        let mut recorded = None;
        for _ in 0..MAX_EMPTY_PARTITION_REDRAWS {
            let (start, end) = draw_interval(n, &mut rng)?;
            let attack = count_tokens(&msgs[start..=end]);
            let user = count_tokens(msgs[..start].iter().chain(msgs[end + 1..].iter()));
            if attack.is_empty() || user.is_empty() {
                continue;
            }
            let (theta_user, theta_attack) = smooth_pair(&user, &attack)?;
            recorded = Some(divergence(&theta_user, &theta_attack, config.kl_direction));
            break;
        }
        match recorded {
            Some(v) => values.push(v),
            None => {
                values.push(0.0);
                zero_filled += 1;
            }
        }
    }
    Ok(KlSamples {
        values,
        zero_filled,
    })
}

/// Max, min, mean, and population variance of a non-empty sample list.
pub fn aggregate(samples: &[f64]) -> Result<KlStats, Error> {
    if samples.is_empty() {
        return Err(Error::EmptyInput(String::from("no samples to aggregate")));
    }
    let n = samples.len() as f64;
    let mut max = f64::NEG_INFINITY;
    let mut min = f64::INFINITY;
    let mut sum = 0.0;
    for &x in samples {
        max = max.max(x);
        min = min.min(x);
        sum += x;
    }
    // The true mean lies in [min, max]; clamping removes the summation
    // rounding that could otherwise break the min <= mean <= max invariant.
    let mean = (sum / n).clamp(min, max);
    let variance = samples.iter().map(|&x| (x - mean) * (x - mean)).sum::<f64>() / n;
    Ok(KlStats {
        max,
        min,
        mean,
        variance,
    })
}

/// Full per-account extraction: sample, aggregate, attach identity. Also
/// returns how many samples were zero-filled so callers can surface warnings.
pub fn extract_account(
    account: &Account,
    config: &SamplerConfig,
) -> Result<(KlFeatureVector, usize), Error> {
    let samples = sample_kl(account, config)?;
    let stats = aggregate(&samples.values)?;
    Ok((
        KlFeatureVector {
            user_id: account.user_id.clone(),
            stats,
        },
        samples.zero_filled,
    ))
}
