//! Independent oracles shared by the integration suites. Nothing here goes
//! through the matrix, backprop or confusion-matrix code paths it checks.

#![allow(dead_code)]

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sepredict::corpus::{Attribution, DrugOntology, Item, Label, Prescription};
use sepredict::encoder::Target;
use sepredict::network::{loss, NetworkModel};

/// 100-drug ontology: 40 hot, 35 cold, 25 neutral.
pub fn hundred_drug_ontology() -> DrugOntology {
    let mut ont = DrugOntology::new("test");
    for i in 0..100 {
        let a = match i % 20 {
            0..=7 => Attribution::Hot,
            8..=14 => Attribution::Cold,
            _ => Attribution::Neutral,
        };
        ont.insert(&format!("d{i:03}"), a).unwrap();
    }
    ont
}

/// Random prescription over the ontology's drugs, 1..=12 items.
pub fn random_prescription(
    rng: &mut ChaCha8Rng,
    ont: &DrugOntology,
    id: usize,
    integer: bool,
) -> Prescription {
    let drugs: Vec<&str> = ont.iter().map(|(d, _)| d).collect();
    let n = rng.gen_range(1..=12);
    let picked = rand::seq::index::sample(rng, drugs.len(), n);
    let items = picked
        .into_iter()
        .map(|i| Item {
            drug: drugs[i].to_string(),
            dosage: if integer {
                rng.gen_range(0..=200) as f64
            } else {
                rng.gen_range(0.0..200.0)
            },
        })
        .collect();
    let label = if rng.gen_bool(0.5) {
        Label::Safe
    } else {
        Label::Unsafe
    };
    Prescription::new(&format!("p{id}"), label, items).unwrap()
}

/// Hot and cold dosage totals by looking each item's attribution up and
/// summing, without any matrix.
pub fn grouped_dosage(p: &Prescription, ont: &DrugOntology) -> (f64, f64) {
    let mut sums: HashMap<Attribution, f64> = HashMap::new();
    for item in p.items() {
        *sums.entry(ont.get(&item.drug).unwrap()).or_default() += item.dosage;
    }
    (
        sums.get(&Attribution::Hot).copied().unwrap_or(0.0),
        sums.get(&Attribution::Cold).copied().unwrap_or(0.0),
    )
}

/// Central-difference derivative of the loss with respect to parameter `i`.
pub fn numeric_gradient(
    model: &NetworkModel,
    batch: &[([f64; 2], Target)],
    l2: f64,
    i: usize,
    h: f64,
) -> f64 {
    let mut plus = model.clone();
    *plus.params.get_mut(i) += h;
    let mut minus = model.clone();
    *minus.params.get_mut(i) -= h;
    (loss(&plus, batch, l2).unwrap() - loss(&minus, batch, l2).unwrap()) / (2.0 * h)
}

pub fn random_batch(rng: &mut ChaCha8Rng, n: usize) -> Vec<([f64; 2], Target)> {
    (0..n)
        .map(|_| {
            let x = [rng.gen_range(0.0..1.2), rng.gen_range(0.0..1.2)];
            let label = if rng.gen_bool(0.5) {
                Label::Safe
            } else {
                Label::Unsafe
            };
            (x, Target::from(label))
        })
        .collect()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Brute-force (tp, fn, tn, fp) from (predicted, actual) pairs.
pub fn recount(pairs: &[(Label, Label)]) -> (usize, usize, usize, usize) {
    let count = |p: Label, a: Label| pairs.iter().filter(|&&(x, y)| x == p && y == a).count();
    (
        count(Label::Safe, Label::Safe),
        count(Label::Unsafe, Label::Safe),
        count(Label::Unsafe, Label::Unsafe),
        count(Label::Safe, Label::Unsafe),
    )
}
