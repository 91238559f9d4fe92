//! Synthetic taxonomy corpus with a controllable entailment signal.
//!
//! The generator plants categories, each with one hypernym token (`hyper3`)
//! and several hyponyms (`w3_1`). All members of a category share topical
//! contexts (`topic3+2`), which makes them distributionally similar without
//! saying anything about direction. Directional evidence comes from pattern
//! families: templates such as `nmod:such_as+{}` produce, for every
//! hypernym, a shared marker context (`nmod:such_as`) plus one filled
//! context per hyponym (`nmod:such_as+w3_1`), and each hyponym receives the
//! weaker inverted forms (`nmod:such_as^-1`, `nmod:such_as^-1+hyper3`).
//! Because markers are shared across categories they survive dimensionality
//! reduction as a recoverable hypernym direction.
//!
//! Negative pairs come in three kinds that different baselines get wrong in
//! different ways: co-hyponym pairs are topically close (similarity alone
//! accepts them), reversed pairs have the right words in the wrong order,
//! and random cross-category pairs have hypernym-shaped consequents with a
//! mismatched antecedent.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::datasets::LabeledPair;
use crate::error::{Error, Result};
use crate::util::{self, stream};
use crate::vecspace::CountMatrix;

/// Whether every pattern family applies to every category or families take
/// turns (family `f` covers categories with `c % n_families == f`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FamilyScope {
    All,
    Split,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct PatternFamily {
    /// Template containing a `{}` placeholder for the filler word, e.g.
    /// `nmod:such_as+{}`. The inverted form is derived by injecting `^-1`
    /// before the first `+`.
    pub template: String,
    /// Multiplier on this family's co-occurrence counts.
    pub weight: f64,
    /// Emit per-word filled contexts alongside the shared marker. Without
    /// them the family contributes exactly one context column per side, so
    /// its evidence is a single latent direction.
    pub filled: bool,
}

impl Default for PatternFamily {
    fn default() -> PatternFamily {
        PatternFamily::new("nmod:such_as+{}", 1.0)
    }
}

impl PatternFamily {
    pub fn new(template: &str, weight: f64) -> PatternFamily {
        PatternFamily {
            template: template.to_string(),
            weight,
            filled: true,
        }
    }

    pub fn shared_only(template: &str, weight: f64) -> PatternFamily {
        PatternFamily {
            filled: false,
            ..PatternFamily::new(template, weight)
        }
    }

    fn prefix(&self) -> &str {
        self.template.split("+{}").next().unwrap_or(&self.template)
    }

    fn filled(&self, word: &str) -> String {
        self.template.replace("{}", word)
    }

    fn inverse_marker(&self) -> String {
        format!("{}^-1", self.prefix())
    }

    fn inverse_filled(&self, word: &str) -> String {
        format!("{}^-1+{}", self.prefix(), word)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthConfig {
    pub seed: u64,
    pub categories: usize,
    pub hyponyms_per_category: usize,
    pub topics_per_category: usize,
    /// Shared junk contexts sprinkled over every word.
    pub noise_contexts: usize,
    /// Relative jitter on all planted counts, in [0, 1).
    pub noise: f64,
    pub pattern_families: Vec<PatternFamily>,
    pub family_scope: FamilyScope,
    pub include_cohyponyms: bool,
    pub include_reversed: bool,
    pub include_random: bool,
    pub topic_base: f64,
    pub pattern_base: f64,
    pub inverse_base: f64,
}

impl Default for SynthConfig {
    fn default() -> SynthConfig {
        SynthConfig {
            seed: 0,
            categories: 12,
            hyponyms_per_category: 4,
            topics_per_category: 4,
            noise_contexts: 8,
            noise: 0.05,
            pattern_families: vec![
                PatternFamily::new("nmod:such_as+{}", 1.0),
                PatternFamily::new("nmod:including+{}", 1.0),
            ],
            family_scope: FamilyScope::All,
            include_cohyponyms: true,
            include_reversed: true,
            include_random: true,
            topic_base: 20.0,
            pattern_base: 10.0,
            inverse_base: 4.0,
        }
    }
}

impl SynthConfig {
    fn validate(&self) -> Result<()> {
        if self.categories == 0 || self.hyponyms_per_category == 0 {
            return Err(Error::invalid("need at least one category and hyponym"));
        }
        if self.include_random && self.categories < 2 {
            return Err(Error::invalid(
                "random negatives need at least two categories",
            ));
        }
        if self.include_cohyponyms && self.hyponyms_per_category < 2 {
            return Err(Error::invalid(
                "co-hyponym negatives need at least two hyponyms per category",
            ));
        }
        if self.pattern_families.is_empty() {
            return Err(Error::invalid("need at least one pattern family"));
        }
        for fam in &self.pattern_families {
            if !fam.template.contains("+{}") {
                return Err(Error::invalid(format!(
                    "template {:?} must end a dependency path with +{{}}",
                    fam.template
                )));
            }
            if fam.weight <= 0.0 {
                return Err(Error::invalid("family weights must be positive"));
            }
        }
        if !(0.0..1.0).contains(&self.noise) {
            return Err(Error::invalid("noise must be in [0, 1)"));
        }
        Ok(())
    }

    fn family_applies(&self, family: usize, category: usize) -> bool {
        match self.family_scope {
            FamilyScope::All => true,
            FamilyScope::Split => category % self.pattern_families.len() == family,
        }
    }
}

pub struct SynthOutput {
    pub counts: CountMatrix,
    pub pairs: Vec<LabeledPair>,
    pattern_prefixes: Vec<String>,
}

impl SynthOutput {
    /// True for marker, filled, and inverted pattern contexts alike.
    pub fn is_pattern_context(&self, token: &str) -> bool {
        self.pattern_prefixes.iter().any(|p| token.starts_with(p))
    }
}

fn hypernym(c: usize) -> String {
    format!("hyper{c}")
}

fn hyponym(c: usize, j: usize) -> String {
    format!("w{c}_{j}")
}

pub fn synth_corpus(config: &SynthConfig) -> Result<SynthOutput> {
    config.validate()?;
    let mut rng = util::seeded_stream(config.seed, stream::SYNTH);
    let noise = config.noise;
    let jitter = move |rng: &mut rand_chacha::ChaCha8Rng, base: f64| -> f64 {
        if noise == 0.0 {
            base
        } else {
            base * (1.0 + noise * rng.gen_range(-1.0..1.0))
        }
    };

    let mut counts = CountMatrix::builder();
    for c in 0..config.categories {
        let hyper = hypernym(c);
        let members: Vec<String> = (0..config.hyponyms_per_category)
            .map(|j| hyponym(c, j))
            .collect();

        for t in 0..config.topics_per_category {
            let ctx = format!("topic{c}+{t}");
            let v = jitter(&mut rng, config.topic_base);
            counts.add(&hyper, &ctx, v);
            for w in &members {
                let v = jitter(&mut rng, config.topic_base);
                counts.add(w, &ctx, v);
            }
        }

        for (f, fam) in config.pattern_families.iter().enumerate() {
            if !config.family_applies(f, c) {
                continue;
            }
            let marker = fam.prefix().to_string();
            let inv_marker = fam.inverse_marker();
            for w in &members {
                if fam.filled {
                    let v = jitter(&mut rng, config.pattern_base * fam.weight);
                    counts.add(&hyper, &fam.filled(w), v);
                }
                let v = jitter(&mut rng, config.pattern_base * fam.weight);
                counts.add(&hyper, &marker, v);
                if fam.filled {
                    let v = jitter(&mut rng, config.inverse_base * fam.weight);
                    counts.add(w, &fam.inverse_filled(&hyper), v);
                }
                let v = jitter(&mut rng, config.inverse_base * fam.weight);
                counts.add(w, &inv_marker, v);
            }
        }

        if config.noise_contexts > 0 && config.noise > 0.0 {
            for w in std::iter::once(&hyper).chain(members.iter()) {
                let n = rng.gen_range(0..=2usize.min(config.noise_contexts));
                for _ in 0..n {
                    let ctx = format!("junk{}", rng.gen_range(0..config.noise_contexts));
                    let v = jitter(&mut rng, config.topic_base * config.noise);
                    counts.add(w, &ctx, v.max(0.5));
                }
            }
        }
    }

    let mut pairs = Vec::new();
    for c in 0..config.categories {
        let hyper = hypernym(c);
        for j in 0..config.hyponyms_per_category {
            pairs.push(LabeledPair::new(&hyponym(c, j), &hyper, true));
        }
    }
    if config.include_cohyponyms {
        for c in 0..config.categories {
            for j in 0..config.hyponyms_per_category {
                let next = (j + 1) % config.hyponyms_per_category;
                pairs.push(LabeledPair::new(&hyponym(c, j), &hyponym(c, next), false));
            }
        }
    }
    if config.include_reversed {
        for c in 0..config.categories {
            let j = rng.gen_range(0..config.hyponyms_per_category);
            pairs.push(LabeledPair::new(&hypernym(c), &hyponym(c, j), false));
        }
    }
    if config.include_random {
        for c in 0..config.categories {
            for j in 0..config.hyponyms_per_category {
                let offset = rng.gen_range(1..config.categories);
                let other = (c + offset) % config.categories;
                pairs.push(LabeledPair::new(&hyponym(c, j), &hypernym(other), false));
            }
        }
    }

    let pattern_prefixes = config
        .pattern_families
        .iter()
        .map(|f| f.prefix().to_string())
        .collect();
    Ok(SynthOutput {
        counts: counts.finish(),
        pairs,
        pattern_prefixes,
    })
}
