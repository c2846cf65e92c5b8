//! Side-effect prediction from hot/cold drug attributions.
//!
//! A prescription is reduced to two influential factors, the total dosage
//! of its hot drugs and of its cold drugs, through a 0/1 drug-by-attribution
//! weight matrix. A small feed-forward network classifies the scaled
//! factors as safe or unsafe, and stratified k-fold cross-validation reports
//! sensitivity, specificity and accuracy with `Safe` as the positive class.
//!
//! Modules:
//! - [`corpus`]: ontology and prescription types, TSV formats
//! - [`encoder`]: bag-of-words vectors, weight matrix, IF vectors, scaling
//! - [`network`]: the classifier, backpropagation, model files
//! - [`evaluation`]: fold plans, confusion metrics, reports
//! - [`synth`]: seeded synthetic corpora
//! - [`cli`]: the `sepredict` command line

pub mod cli;
pub mod corpus;
pub mod encoder;
pub mod evaluation;
pub mod network;
pub mod synth;

pub use corpus::{Attribution, Corpus, DrugOntology, Label, Prescription};
pub use encoder::{EncodedSample, Encoder, IfVector, InputScaler};
pub use evaluation::{CvReport, FoldPlan, FoldReport};
pub use network::{NetworkModel, NetworkShape, TrainConfig};
