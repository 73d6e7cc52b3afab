//! Unigram language models: maximum-likelihood counts, Laplace smoothing over
//! a shared union vocabulary, and KL divergence between the smoothed models.
//!
//! A unigram model treats every token as an independent draw from one
//! multinomial, so the joint probability of a text factors into per-token
//! probabilities `P(w_k) = c(w_k)/N` and no conditioning context is kept.
//! Higher-order models would condition on preceding tokens; they are out of
//! scope here.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;

use crate::corpus::Message;
use crate::error::Error;

/// Raw token counts. Zero-count entries are never stored; `total` is always
/// the sum of all counts.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CountModel {
    counts: BTreeMap<String, u64>,
    total: u64,
}

impl CountModel {
    pub fn new() -> CountModel {
        CountModel::default()
    }

    pub fn add(&mut self, token: &str) {
        self.add_n(token, 1);
    }

    pub fn add_n(&mut self, token: &str, n: u64) {
        if n == 0 {
            return;
        }
        *self.counts.entry(String::from(token)).or_insert(0) += n;
        self.total += n;
    }

    pub fn count(&self, token: &str) -> u64 {
        self.counts.get(token).copied().unwrap_or(0)
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn is_empty(&self) -> bool {
        self.total == 0
    }

    pub fn distinct(&self) -> usize {
        self.counts.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, u64)> {
        self.counts.iter().map(|(t, &c)| (t.as_str(), c))
    }
}

/// A smoothed multinomial distribution over a fixed vocabulary. Every stored
/// probability is strictly positive and the distribution sums to one.
#[derive(Debug, Clone, PartialEq)]
pub struct LanguageModel {
    probs: BTreeMap<String, f64>,
}

impl LanguageModel {
    pub fn prob(&self, token: &str) -> Option<f64> {
        self.probs.get(token).copied()
    }

    pub fn vocabulary(&self) -> impl Iterator<Item = &str> {
        self.probs.keys().map(String::as_str)
    }

    pub fn vocab_size(&self) -> usize {
        self.probs.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, f64)> {
        self.probs.iter().map(|(t, &p)| (t.as_str(), p))
    }
}

/// Which direction the divergence is computed in. The user model is typically
/// estimated from the larger partition, so user→attack is the default.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum KlDirection {
    /// D(user ‖ attack)
    #[default]
    UserAttack,
    /// D(attack ‖ user)
    AttackUser,
}

/// Aggregates token counts across messages.
pub fn count_tokens<'a>(messages: impl IntoIterator<Item = &'a Message>) -> CountModel {
    let mut model = CountModel::new();
    for msg in messages {
        for tok in &msg.tokens {
            model.add(tok);
        }
    }
    model
}

/// Smooths two count models over their union vocabulary with the Laplace
/// estimate `P(w) = (c(w) + 1) / (N + |V|)`, yielding two models defined on
/// the identical vocabulary as KL divergence requires.
///
/// Errors when both models are empty (no vocabulary to share). A one-sided
/// empty model is still smoothed: it degenerates to the uniform distribution
/// `1 / |V|` per token.
pub fn smooth_pair(
    user_counts: &CountModel,
    attack_counts: &CountModel,
) -> Result<(LanguageModel, LanguageModel), Error> {
    if user_counts.is_empty() && attack_counts.is_empty() {
        return Err(Error::EmptyVocabulary);
    }
    let vocab: BTreeSet<&str> = user_counts
        .iter()
        .map(|(t, _)| t)
        .chain(attack_counts.iter().map(|(t, _)| t))
        .collect();
    let smooth = |counts: &CountModel| -> LanguageModel {
        let denom = (counts.total() + vocab.len() as u64) as f64;
        let probs = vocab
            .iter()
            .map(|&t| (String::from(t), (counts.count(t) + 1) as f64 / denom))
            .collect();
        LanguageModel { probs }
    };
    Ok((smooth(user_counts), smooth(attack_counts)))
}

/// KL divergence `Σ_w p(w)·ln(p(w)/q(w))` in nats.
///
/// Both models must share the identical vocabulary; anything else is a
/// programming error and panics. Tiny negative rounding residue (within
/// `-1e-12`) is clamped to zero, so the result is always non-negative.
pub fn kl_divergence(p: &LanguageModel, q: &LanguageModel) -> f64 {
    assert_eq!(
        p.vocab_size(),
        q.vocab_size(),
        "kl_divergence requires identical vocabularies"
    );
    let mut sum = 0.0;
    for ((tp, pp), (tq, pq)) in p.iter().zip(q.iter()) {
        assert_eq!(tp, tq, "kl_divergence requires identical vocabularies");
        sum += pp * libm::log(pp / pq);
    }
    if sum < 0.0 {
        debug_assert!(sum > -1e-12, "KL residue below numerical tolerance: {sum}");
        return 0.0;
    }
    sum
}

/// Divergence of a smoothed pair in the configured direction.
pub fn divergence(user: &LanguageModel, attack: &LanguageModel, direction: KlDirection) -> f64 {
    match direction {
        KlDirection::UserAttack => kl_divergence(user, attack),
        KlDirection::AttackUser => kl_divergence(attack, user),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Message;
    use alloc::vec;
    use alloc::vec::Vec;

    fn counts(entries: &[(&str, u64)]) -> CountModel {
        let mut m = CountModel::new();
        for &(t, c) in entries {
            m.add_n(t, c);
        }
        m
    }

    #[test]
    fn count_tokens_aggregates_across_messages() {
        let msgs = vec![Message::new("u", 0, "a a b"), Message::new("u", 1, "a")];
        let model = count_tokens(&msgs);
        assert_eq!(model.count("a"), 3);
        assert_eq!(model.count("b"), 1);
        assert_eq!(model.total(), 4);
    }

    #[test]
    fn count_tokens_empty() {
        let none: Vec<Message> = vec![];
        let model = count_tokens(&none);
        assert!(model.is_empty());
        assert_eq!(model.total(), 0);
    }

    #[test]
    fn smooth_pair_union_vocabulary_laplace() {
        let user = counts(&[("a", 2), ("b", 1)]);
        let attack = counts(&[("b", 1), ("c", 1)]);
        let (tu, ta) = smooth_pair(&user, &attack).unwrap();
        assert_eq!(tu.prob("a"), Some(0.5));
        assert_eq!(tu.prob("b"), Some(1.0 / 3.0));
        assert_eq!(tu.prob("c"), Some(1.0 / 6.0));
        assert_eq!(ta.prob("a"), Some(0.2));
        assert_eq!(ta.prob("b"), Some(0.4));
        assert_eq!(ta.prob("c"), Some(0.4));
    }

    #[test]
    fn smooth_pair_identical_single_token() {
        let user = counts(&[("a", 1)]);
        let attack = counts(&[("a", 1)]);
        let (tu, ta) = smooth_pair(&user, &attack).unwrap();
        assert_eq!(tu.prob("a"), Some(1.0));
        assert_eq!(ta.prob("a"), Some(1.0));
    }

    #[test]
    fn smooth_pair_one_sided_empty() {
        let user = counts(&[]);
        let attack = counts(&[("a", 1)]);
        let (tu, ta) = smooth_pair(&user, &attack).unwrap();
        assert_eq!(tu.prob("a"), Some(1.0));
        assert_eq!(ta.prob("a"), Some(1.0));
    }

    #[test]
    fn smooth_pair_both_empty_is_error() {
        assert_eq!(
            smooth_pair(&CountModel::new(), &CountModel::new()),
            Err(Error::EmptyVocabulary)
        );
    }

    #[test]
    fn kl_identity_is_zero() {
        let m = counts(&[("a", 3), ("b", 1), ("c", 7)]);
        let (p, q) = smooth_pair(&m, &m.clone()).unwrap();
        assert_eq!(kl_divergence(&p, &q), 0.0);
    }

    #[test]
    fn kl_two_point_hand_value() {
        let p = LanguageModel {
            probs: [("a", 0.5), ("b", 0.5)]
                .iter()
                .map(|&(t, v)| (String::from(t), v))
                .collect(),
        };
        let q = LanguageModel {
            probs: [("a", 0.9), ("b", 0.1)]
                .iter()
                .map(|&(t, v)| (String::from(t), v))
                .collect(),
        };
        assert!((kl_divergence(&p, &q) - 0.510_825_623_765_990_7).abs() < 1e-6);
    }

    #[test]
    fn kl_smoothed_pair_hand_value() {
        let user = counts(&[("a", 2), ("b", 1)]);
        let attack = counts(&[("b", 1), ("c", 1)]);
        let (tu, ta) = smooth_pair(&user, &attack).unwrap();
        // Hand-applied (c+1)/(N+|V|) then sum of three p·ln(p/q) terms.
        assert!((kl_divergence(&tu, &ta) - 0.251_460_057_446_775_96).abs() < 1e-6);
        // The reverse direction differs; asymmetry is expected.
        let reverse = kl_divergence(&ta, &tu);
        assert!((kl_divergence(&tu, &ta) - reverse).abs() > 1e-3);
    }

    #[test]
    #[should_panic(expected = "identical vocabularies")]
    fn kl_vocabulary_mismatch_panics() {
        let (p, _) = smooth_pair(&counts(&[("a", 1)]), &counts(&[("a", 2)])).unwrap();
        let (_, q) = smooth_pair(&counts(&[("b", 1)]), &counts(&[("b", 2)])).unwrap();
        kl_divergence(&p, &q);
    }

    proptest::proptest! {
        #[test]
        fn smoothed_models_normalize(
            user in proptest::collection::btree_map("[a-h]", 1u64..40, 0..12),
            attack in proptest::collection::btree_map("[a-h]", 1u64..40, 0..12),
        ) {
            proptest::prop_assume!(!user.is_empty() || !attack.is_empty());
            let mk = |m: &std::collections::BTreeMap<String, u64>| {
                let mut c = CountModel::new();
                for (t, &n) in m { c.add_n(t, n); }
                c
            };
            let (p, q) = smooth_pair(&mk(&user), &mk(&attack)).unwrap();
            for lm in [&p, &q] {
                let sum: f64 = lm.iter().map(|(_, v)| v).sum();
                proptest::prop_assert!((sum - 1.0).abs() < 1e-9);
                proptest::prop_assert!(lm.iter().all(|(_, v)| v > 0.0));
            }
        }

        #[test]
        fn gibbs_inequality_holds(
            user in proptest::collection::btree_map("[a-h]", 1u64..40, 1..12),
            attack in proptest::collection::btree_map("[a-h]", 1u64..40, 1..12),
        ) {
            let mk = |m: &std::collections::BTreeMap<String, u64>| {
                let mut c = CountModel::new();
                for (t, &n) in m { c.add_n(t, n); }
                c
            };
            let (p, q) = smooth_pair(&mk(&user), &mk(&attack)).unwrap();
            let d = kl_divergence(&p, &q);
            proptest::prop_assert!(d >= 0.0);
            // Equality only when the smoothed distributions coincide.
            let equal = p.iter().zip(q.iter()).all(|((_, a), (_, b))| (a - b).abs() < 1e-12);
            if equal {
                proptest::prop_assert!(d < 1e-12);
            } else {
                proptest::prop_assert!(d > 0.0);
            }
        }

        #[test]
        fn scaling_counts_keeps_kl_finite_nonnegative(
            base in proptest::collection::btree_map("[a-e]", 1u64..20, 1..6),
            other in proptest::collection::btree_map("[a-e]", 1u64..20, 1..6),
            k in 2u64..10,
        ) {
            let mk = |m: &std::collections::BTreeMap<String, u64>, scale: u64| {
                let mut c = CountModel::new();
                for (t, &n) in m { c.add_n(t, n * scale); }
                c
            };
            let (p1, q1) = smooth_pair(&mk(&base, 1), &mk(&other, 1)).unwrap();
            let (pk, qk) = smooth_pair(&mk(&base, k), &mk(&other, k)).unwrap();
            for d in [kl_divergence(&p1, &q1), kl_divergence(&pk, &qk)] {
                proptest::prop_assert!(d.is_finite());
                proptest::prop_assert!(d >= 0.0);
            }
        }
    }

    #[test]
    fn count_model_never_stores_zero_counts() {
        let mut m = CountModel::new();
        m.add_n("a", 0);
        assert!(m.is_empty());
        assert_eq!(m.iter().collect::<Vec<_>>(), vec![]);
    }
}
