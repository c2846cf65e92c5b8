//! Cross-validation and classification metrics.
//!
//! The positive class is `Safe`: sensitivity is the recall of safe
//! prescriptions and specificity the recall of unsafe ones.

use std::collections::HashMap;
use std::fmt;
use std::fmt::Write as _;

use log::warn;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::corpus::{Corpus, Label};
use crate::encoder::{EncodeError, EncodedSample, Encoder};
use crate::network::{train, NetworkError, NetworkModel, NetworkShape, TrainConfig};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("k must be at least 2, got {0}")]
    InvalidK(usize),
    #[error("k = {k} exceeds corpus size {n}")]
    KTooLarge { k: usize, n: usize },
    #[error("fold {fold} out of range for k = {k}")]
    FoldOutOfRange { fold: usize, k: usize },
    #[error("fold plan does not match the corpus")]
    PlanMismatch,
    #[error("empty sample set")]
    EmptySampleSet,
    #[error(transparent)]
    Encode(#[from] EncodeError),
    #[error(transparent)]
    Network(#[from] NetworkError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FoldStrategy {
    /// Shuffle within each class, then deal round-robin.
    #[default]
    Stratified,
    /// Shuffle the whole corpus, then deal round-robin.
    Plain,
}

/// Assignment of every prescription to one of `k` folds.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FoldPlan {
    pub k: usize,
    pub seed: u64,
    /// Fold index per prescription, aligned with corpus order.
    pub assignments: Vec<usize>,
    ids: HashMap<String, usize>,
}

impl FoldPlan {
    pub fn fold_of(&self, prescription_id: &str) -> Option<usize> {
        self.ids.get(prescription_id).map(|&i| self.assignments[i])
    }

    /// Corpus indices of the held-out fold.
    pub fn test_indices(&self, fold: usize) -> Vec<usize> {
        (0..self.assignments.len())
            .filter(|&i| self.assignments[i] == fold)
            .collect()
    }

    pub fn train_indices(&self, fold: usize) -> Vec<usize> {
        (0..self.assignments.len())
            .filter(|&i| self.assignments[i] != fold)
            .collect()
    }

    pub fn fold_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &f in &self.assignments {
            sizes[f] += 1;
        }
        sizes
    }
}

pub fn plan_folds(corpus: &Corpus, k: usize, seed: u64) -> Result<FoldPlan, EvalError> {
    plan_folds_with(corpus, k, seed, FoldStrategy::Stratified)
}

/// Deterministic for a fixed corpus order and seed. In stratified mode the
/// classes are dealt in the order Safe, Unsafe, with the round-robin
/// position carried over between them.
pub fn plan_folds_with(
    corpus: &Corpus,
    k: usize,
    seed: u64,
    strategy: FoldStrategy,
) -> Result<FoldPlan, EvalError> {
    if k < 2 {
        return Err(EvalError::InvalidK(k));
    }
    if k > corpus.len() {
        return Err(EvalError::KTooLarge { k, n: corpus.len() });
    }
    let rx = corpus.prescriptions();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let groups: Vec<Vec<usize>> = match strategy {
        FoldStrategy::Stratified => [Label::Safe, Label::Unsafe]
            .into_iter()
            .map(|label| {
                let members: Vec<usize> =
                    (0..rx.len()).filter(|&i| rx[i].label() == label).collect();
                if members.len() < k {
                    warn!(
                        "class {label} has {} members, fewer than k = {k}",
                        members.len()
                    );
                }
                members
            })
            .collect(),
        FoldStrategy::Plain => vec![(0..rx.len()).collect()],
    };
    let mut assignments = vec![0; rx.len()];
    let mut next = 0;
    for mut group in groups {
        group.shuffle(&mut rng);
        for i in group {
            assignments[i] = next;
            next = (next + 1) % k;
        }
    }
    let ids = rx
        .iter()
        .enumerate()
        .map(|(i, p)| (p.id().to_string(), i))
        .collect();
    Ok(FoldPlan {
        k,
        seed,
        assignments,
        ids,
    })
}

/// Counts with `Safe` as the positive class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct ConfusionMatrix {
    pub tp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub tn: usize,
    pub fp: usize,
}

impl ConfusionMatrix {
    pub fn record(&mut self, predicted: Label, actual: Label) {
        match (actual, predicted) {
            (Label::Safe, Label::Safe) => self.tp += 1,
            (Label::Safe, Label::Unsafe) => self.fn_ += 1,
            (Label::Unsafe, Label::Unsafe) => self.tn += 1,
            (Label::Unsafe, Label::Safe) => self.fp += 1,
        }
    }

    /// Builds counts from `(predicted, actual)` pairs.
    pub fn from_pairs<I: IntoIterator<Item = (Label, Label)>>(pairs: I) -> Self {
        let mut m = ConfusionMatrix::default();
        for (predicted, actual) in pairs {
            m.record(predicted, actual);
        }
        m
    }

    pub fn positives(&self) -> usize {
        self.tp + self.fn_
    }

    pub fn negatives(&self) -> usize {
        self.tn + self.fp
    }

    pub fn total(&self) -> usize {
        self.positives() + self.negatives()
    }

    /// None when there are no Safe samples.
    pub fn sensitivity(&self) -> Option<f64> {
        ratio(self.tp, self.positives())
    }

    /// None when there are no Unsafe samples.
    pub fn specificity(&self) -> Option<f64> {
        ratio(self.tn, self.negatives())
    }

    pub fn accuracy(&self) -> Option<f64> {
        ratio(self.tp + self.tn, self.total())
    }

    pub fn rates(&self) -> Rates {
        Rates {
            se: self.sensitivity(),
            sp: self.specificity(),
            acc: self.accuracy(),
        }
    }
}

fn ratio(num: usize, den: usize) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

/// Sensitivity, specificity and accuracy; `None` marks an undefined rate.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct Rates {
    pub se: Option<f64>,
    pub sp: Option<f64>,
    pub acc: Option<f64>,
}

impl Rates {
    pub fn new(se: f64, sp: f64, acc: f64) -> Self {
        Rates {
            se: Some(se),
            sp: Some(sp),
            acc: Some(acc),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FoldReport {
    pub fold: usize,
    pub rates: Rates,
    pub counts: ConfusionMatrix,
}

impl FoldReport {
    pub fn from_counts(fold: usize, counts: ConfusionMatrix) -> Self {
        FoldReport {
            fold,
            rates: counts.rates(),
            counts,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CvReport {
    pub folds: Vec<FoldReport>,
    pub average: Rates,
}

/// Unweighted mean of each rate over the folds where it is defined.
pub fn average_rates(rates: &[Rates]) -> Rates {
    let mean = |name: &str, pick: fn(&Rates) -> Option<f64>| {
        let defined: Vec<f64> = rates.iter().filter_map(pick).collect();
        if defined.len() < rates.len() {
            warn!(
                "{name} undefined in {} fold(s); excluded from the average",
                rates.len() - defined.len()
            );
        }
        (!defined.is_empty()).then(|| defined.iter().sum::<f64>() / defined.len() as f64)
    };
    Rates {
        se: mean("sensitivity", |r| r.se),
        sp: mean("specificity", |r| r.sp),
        acc: mean("accuracy", |r| r.acc),
    }
}

impl CvReport {
    pub fn from_folds(mut folds: Vec<FoldReport>) -> Self {
        folds.sort_by_key(|f| f.fold);
        let rates: Vec<Rates> = folds.iter().map(|f| f.rates).collect();
        CvReport {
            average: average_rates(&rates),
            folds,
        }
    }

    /// Table with a `fold se sp acc` header, one row per fold and a final
    /// `avg` row; rates to 2 decimals, undefined rates as `n/a`.
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("fold\tse\tsp\tacc\n");
        for f in &self.folds {
            let _ = writeln!(out, "{}\t{}", f.fold + 1, RateRow(&f.rates));
        }
        let _ = writeln!(out, "avg\t{}", RateRow(&self.average));
        out
    }

    /// Full-precision sidecar with confusion counts.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes") + "\n"
    }
}

struct RateRow<'a>(&'a Rates);

impl fmt::Display for RateRow<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let cell = |v: Option<f64>| v.map_or_else(|| "n/a".to_string(), |v| format!("{v:.2}"));
        write!(
            f,
            "{}\t{}\t{}",
            cell(self.0.se),
            cell(self.0.sp),
            cell(self.0.acc)
        )
    }
}

/// Derives the training seed of one fold from the master seed.
pub fn fold_seed(master: u64, fold: usize) -> u64 {
    // splitmix64 finaliser over the combined value
    let mut z = master
        ^ (fold as u64)
            .wrapping_add(1)
            .wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Everything needed to train and score folds, shared read-only by
/// concurrently running folds.
pub struct CvSetup<'a> {
    pub samples: Vec<EncodedSample>,
    pub plan: &'a FoldPlan,
    pub train: TrainConfig,
    pub shape: NetworkShape,
}

impl<'a> CvSetup<'a> {
    pub fn new(
        corpus: &Corpus,
        encoder: &Encoder,
        plan: &'a FoldPlan,
        train: TrainConfig,
        shape: NetworkShape,
    ) -> Result<Self, EvalError> {
        if plan.assignments.len() != corpus.len() {
            return Err(EvalError::PlanMismatch);
        }
        Ok(CvSetup {
            samples: encoder.encode_corpus(corpus)?,
            plan,
            train,
            shape,
        })
    }

    /// Trains on every sample outside `fold` and scores the held-out fold.
    /// Also returns the trained model.
    pub fn run_fold(&self, fold: usize) -> Result<(FoldReport, NetworkModel), EvalError> {
        if fold >= self.plan.k {
            return Err(EvalError::FoldOutOfRange {
                fold,
                k: self.plan.k,
            });
        }
        let training: Vec<EncodedSample> = self
            .plan
            .train_indices(fold)
            .into_iter()
            .map(|i| self.samples[i].clone())
            .collect();
        let config = TrainConfig {
            seed: fold_seed(self.train.seed, fold),
            ..self.train.clone()
        };
        let model = train(&training, &config, &self.shape)?;
        let mut counts = ConfusionMatrix::default();
        for i in self.plan.test_indices(fold) {
            let s = &self.samples[i];
            counts.record(model.predict(&s.input)?.predicted_label, s.label);
        }
        Ok((FoldReport::from_counts(fold, counts), model))
    }
}

pub fn evaluate_fold(
    corpus: &Corpus,
    encoder: &Encoder,
    plan: &FoldPlan,
    fold: usize,
    train: &TrainConfig,
    shape: &NetworkShape,
) -> Result<FoldReport, EvalError> {
    let setup = CvSetup::new(corpus, encoder, plan, train.clone(), shape.clone())?;
    Ok(setup.run_fold(fold)?.0)
}

/// Runs all `k` folds in parallel; `train.seed` is the master seed.
pub fn cross_validate(
    corpus: &Corpus,
    encoder: &Encoder,
    k: usize,
    seed: u64,
    train: &TrainConfig,
    shape: &NetworkShape,
    strategy: FoldStrategy,
) -> Result<CvReport, EvalError> {
    let plan = plan_folds_with(corpus, k, seed, strategy)?;
    let setup = CvSetup::new(
        corpus,
        encoder,
        &plan,
        TrainConfig {
            seed,
            ..train.clone()
        },
        shape.clone(),
    )?;
    let folds = (0..k)
        .into_par_iter()
        .map(|fold| setup.run_fold(fold).map(|(report, _)| report))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(CvReport::from_folds(folds))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassDistribution {
    pub label: Label,
    pub count: usize,
    pub above: usize,
}

impl ClassDistribution {
    /// None when the class has no samples.
    pub fn above_fraction(&self) -> Option<f64> {
        ratio(self.above, self.count)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DistributionReport {
    pub threshold: f64,
    /// Safe first, then Unsafe.
    pub classes: [ClassDistribution; 2],
}

impl DistributionReport {
    pub fn class(&self, label: Label) -> &ClassDistribution {
        &self.classes[label as usize]
    }

    pub fn to_tsv(&self) -> String {
        let mut out = String::from("class\tabove_threshold_fraction\tcount\n");
        for c in &self.classes {
            let fraction = c
                .above_fraction()
                .map_or_else(|| "n/a".to_string(), |v| v.to_string());
            let _ = writeln!(out, "{}\t{}\t{}", c.label, fraction, c.count);
        }
        out
    }
}

/// Fraction of each class whose total IF (hot + cold) is strictly above
/// `threshold`.
pub fn distribution_report(
    samples: &[EncodedSample],
    threshold: f64,
) -> Result<DistributionReport, EvalError> {
    if samples.is_empty() {
        return Err(EvalError::EmptySampleSet);
    }
    let tally = |label: Label| {
        let members = samples.iter().filter(|s| s.label == label);
        ClassDistribution {
            label,
            count: members.clone().count(),
            above: members.filter(|s| s.input.total() > threshold).count(),
        }
    };
    Ok(DistributionReport {
        threshold,
        classes: [tally(Label::Safe), tally(Label::Unsafe)],
    })
}

/// Scatter data for plotting: `id hot cold label`.
pub fn scatter_tsv(samples: &[EncodedSample]) -> String {
    crate::encoder::samples_to_tsv(samples)
}
