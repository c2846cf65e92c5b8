//! Seeded synthetic ontology and prescription corpus.
//!
//! Safe prescriptions draw their total hot+cold dosage from a range below
//! the threshold and unsafe ones from a range above it. A `noise` fraction
//! of prescriptions gets the other class's range. Each prescription holds
//! 3 to 12 distinct drugs; the drawn total is split over its hot and cold
//! drugs by a normalised-uniform partition, and any neutral drugs get an
//! independent small dosage. All dosages are multiples of 0.01.

use std::str::FromStr;

use rand::seq::{index, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::corpus::{Attribution, Corpus, DrugOntology, Item, Label, Prescription};

const MIN_ITEMS: usize = 3;
const MAX_ITEMS: usize = 12;
const NEUTRAL_DOSAGE: (f64, f64) = (1.0, 30.0);

#[derive(Debug, Clone, PartialEq, Error)]
#[error("invalid synth config: {0}")]
pub struct InvalidConfig(pub String);

/// Which classes the `noise` fraction applies to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum NoiseTarget {
    #[default]
    Both,
    Safe,
    Unsafe,
}

impl NoiseTarget {
    fn applies_to(self, label: Label) -> bool {
        match self {
            NoiseTarget::Both => true,
            NoiseTarget::Safe => label == Label::Safe,
            NoiseTarget::Unsafe => label == Label::Unsafe,
        }
    }
}

impl FromStr for NoiseTarget {
    type Err = InvalidConfig;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "both" => Ok(NoiseTarget::Both),
            "safe" => Ok(NoiseTarget::Safe),
            "unsafe" => Ok(NoiseTarget::Unsafe),
            other => Err(InvalidConfig(format!("unknown noise target `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub n_safe: usize,
    pub n_unsafe: usize,
    pub n_drugs: usize,
    pub hot_fraction: f64,
    pub cold_fraction: f64,
    pub threshold: f64,
    pub safe_total_dosage_range: (f64, f64),
    pub unsafe_total_dosage_range: (f64, f64),
    pub noise: f64,
    pub noise_target: NoiseTarget,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            n_safe: 150,
            n_unsafe: 92,
            n_drugs: 100,
            hot_fraction: 0.40,
            cold_fraction: 0.35,
            threshold: 500.0,
            safe_total_dosage_range: (100.0, 480.0),
            unsafe_total_dosage_range: (520.0, 1200.0),
            noise: 0.1,
            noise_target: NoiseTarget::Both,
            seed: 0,
        }
    }
}

impl SynthConfig {
    /// Hot, cold and neutral drug counts.
    pub fn attribution_counts(&self) -> (usize, usize, usize) {
        let n = self.n_drugs;
        let hot = ((n as f64 * self.hot_fraction).round() as usize).min(n);
        let cold = ((n as f64 * self.cold_fraction).round() as usize).min(n - hot);
        (hot, cold, n - hot - cold)
    }

    pub fn validate(&self) -> Result<(), InvalidConfig> {
        let fail = |m: &str| Err(InvalidConfig(m.to_string()));
        if self.n_safe == 0 || self.n_unsafe == 0 {
            return fail("n_safe and n_unsafe must be at least 1");
        }
        if self.n_drugs < MIN_ITEMS {
            return fail("n_drugs must be at least 3");
        }
        let fraction_ok = |f: f64| (0.0..=1.0).contains(&f);
        if !fraction_ok(self.hot_fraction)
            || !fraction_ok(self.cold_fraction)
            || self.hot_fraction + self.cold_fraction > 1.0
        {
            return fail("attribution fractions must lie in [0,1] and sum to at most 1");
        }
        let (hot, cold, _) = self.attribution_counts();
        if hot + cold == 0 {
            return fail("ontology needs at least one hot or cold drug");
        }
        for (lo, hi) in [self.safe_total_dosage_range, self.unsafe_total_dosage_range] {
            if !(lo.is_finite() && hi.is_finite() && lo > 0.0 && lo <= hi) {
                return fail("dosage ranges must be positive and ordered");
            }
        }
        if !fraction_ok(self.noise) {
            return fail("noise must lie in [0,1]");
        }
        if !self.threshold.is_finite() {
            return fail("threshold must be finite");
        }
        Ok(())
    }
}

/// Generates an ontology and a corpus covered by it. Output is a pure
/// function of the config.
pub fn generate(config: &SynthConfig) -> Result<(DrugOntology, Corpus), InvalidConfig> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let version = format!("synthetic-seed-{}", config.seed);

    let (n_hot, n_cold, n_neutral) = config.attribution_counts();
    let mut attributions: Vec<Attribution> = std::iter::repeat_n(Attribution::Hot, n_hot)
        .chain(std::iter::repeat_n(Attribution::Cold, n_cold))
        .chain(std::iter::repeat_n(Attribution::Neutral, n_neutral))
        .collect();
    attributions.shuffle(&mut rng);
    let width = config.n_drugs.to_string().len().max(3);
    let drugs: Vec<(String, Attribution)> = attributions
        .into_iter()
        .enumerate()
        .map(|(i, a)| (format!("herb{:0width$}", i + 1), a))
        .collect();
    let mut ontology = DrugOntology::new(version.clone());
    for (name, a) in &drugs {
        ontology
            .insert(name, *a)
            .expect("generated names are unique tokens");
    }
    let thermal: Vec<usize> = (0..drugs.len())
        .filter(|&i| drugs[i].1 != Attribution::Neutral)
        .collect();

    // (label, swapped) per prescription
    let mut plan = Vec::with_capacity(config.n_safe + config.n_unsafe);
    for (label, n) in [
        (Label::Safe, config.n_safe),
        (Label::Unsafe, config.n_unsafe),
    ] {
        let n_swapped = if config.noise_target.applies_to(label) {
            (config.noise * n as f64).round() as usize
        } else {
            0
        };
        let mut swapped = vec![false; n];
        for i in index::sample(&mut rng, n, n_swapped) {
            swapped[i] = true;
        }
        plan.extend(swapped.into_iter().map(|s| (label, s)));
    }
    plan.shuffle(&mut rng);

    let max_items = MAX_ITEMS.min(drugs.len());
    let id_width = plan.len().to_string().len().max(3);
    let mut corpus = Corpus::new(version);
    for (n, (label, swapped)) in plan.into_iter().enumerate() {
        let use_unsafe_range = (label == Label::Unsafe) != swapped;
        let (lo, hi) = if use_unsafe_range {
            config.unsafe_total_dosage_range
        } else {
            config.safe_total_dosage_range
        };
        let total = if lo < hi { rng.gen_range(lo..hi) } else { lo };

        let n_items = rng.gen_range(MIN_ITEMS..=max_items);
        // one thermal drug guarantees the total has somewhere to go
        let anchor = *thermal.choose(&mut rng).unwrap();
        let mut picked = vec![anchor];
        let others: Vec<usize> = (0..drugs.len()).filter(|&i| i != anchor).collect();
        picked.extend(
            index::sample(&mut rng, others.len(), n_items - 1)
                .into_iter()
                .map(|i| others[i]),
        );

        let thermal_picked: Vec<usize> = picked
            .iter()
            .copied()
            .filter(|&i| drugs[i].1 != Attribution::Neutral)
            .collect();
        let weights: Vec<f64> = thermal_picked
            .iter()
            .map(|_| rng.gen_range(0.05..1.0))
            .collect();
        let cents = partition_cents((total * 100.0).round() as u64, &weights);

        let mut items = Vec::with_capacity(picked.len());
        for &d in &picked {
            let dosage_cents = match thermal_picked.iter().position(|&t| t == d) {
                Some(j) => cents[j],
                None => (rng.gen_range(NEUTRAL_DOSAGE.0..NEUTRAL_DOSAGE.1) * 100.0).round() as u64,
            };
            items.push(Item {
                drug: drugs[d].0.clone(),
                dosage: dosage_cents as f64 / 100.0,
            });
        }
        let id = format!("rx{:0id_width$}", n + 1);
        let p = Prescription::new(&id, label, items).expect("generated prescription is valid");
        corpus.push(p).expect("generated ids are unique");
    }
    Ok((ontology, corpus))
}

/// Splits `total` cents proportionally to `weights` by largest remainder,
/// giving every share at least one cent when the total allows it.
fn partition_cents(total: u64, weights: &[f64]) -> Vec<u64> {
    let n = weights.len() as u64;
    let floor = if total >= n { 1 } else { 0 };
    let rest = total - floor * n;
    let sum: f64 = weights.iter().sum();
    let exact: Vec<f64> = weights.iter().map(|w| rest as f64 * w / sum).collect();
    let mut shares: Vec<u64> = exact.iter().map(|e| e.floor() as u64).collect();
    let mut left = rest - shares.iter().sum::<u64>();
    let mut order: Vec<usize> = (0..weights.len()).collect();
    order.sort_by(|&a, &b| {
        let fa = exact[a] - exact[a].floor();
        let fb = exact[b] - exact[b].floor();
        fb.total_cmp(&fa).then(a.cmp(&b))
    });
    for &i in order.iter().cycle() {
        if left == 0 {
            break;
        }
        shares[i] += 1;
        left -= 1;
    }
    shares.iter().map(|s| s + floor).collect()
}
