//! Prescription to influential-factor encoding.
//!
//! A prescription becomes a dense bag-of-words vector over the drug
//! vocabulary whose entries are dosages. The weight matrix has one row per
//! drug and one column per attribution (`[hot, cold]`), with a 1 marking
//! the drug's attribution; neutral drugs have an all-zero row. The
//! influential-factor vector is the transposed matrix times the bag, i.e.
//! the total hot dosage and the total cold dosage.

use std::collections::HashMap;

use thiserror::Error;

use crate::corpus::{
    validate_against, Attribution, Corpus, CoverageGap, DrugOntology, Label, Prescription,
};

/// Column order of the weight matrix.
pub const COLUMNS: [Attribution; 2] = [Attribution::Hot, Attribution::Cold];

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EncodeError {
    #[error("ontology is empty")]
    EmptyOntology,
    #[error("drug `{0}` is not in the vocabulary")]
    DrugNotInVocabulary(String),
    #[error("bag has {got} entries, weight matrix has {expected} rows")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("weight matrix row for `{0}` is not a 0/1 single-attribution row")]
    InvalidRow(String),
    #[error("duplicate vocabulary entry `{0}`")]
    DuplicateVocabulary(String),
    #[error("empty sample set")]
    EmptySampleSet,
    #[error("{} drug reference(s) missing from the ontology, first: `{}` in `{}`", .0.len(), .0[0].drug, .0[0].prescription)]
    MissingDrugs(Vec<CoverageGap>),
}

/// Ordered drug list with O(1) index lookup.
#[derive(Debug, Clone, PartialEq)]
pub struct Vocabulary {
    drugs: Vec<String>,
    index: HashMap<String, usize>,
}

impl Vocabulary {
    pub fn new(drugs: Vec<String>) -> Result<Self, EncodeError> {
        let mut index = HashMap::with_capacity(drugs.len());
        for (i, d) in drugs.iter().enumerate() {
            if index.insert(d.clone(), i).is_some() {
                return Err(EncodeError::DuplicateVocabulary(d.clone()));
            }
        }
        Ok(Vocabulary { drugs, index })
    }

    pub fn len(&self) -> usize {
        self.drugs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.drugs.is_empty()
    }

    pub fn index_of(&self, drug: &str) -> Option<usize> {
        self.index.get(drug).copied()
    }

    pub fn drugs(&self) -> &[String] {
        &self.drugs
    }
}

/// Dense dosage vector over a vocabulary.
#[derive(Debug, Clone, PartialEq)]
pub struct BowVector(pub Vec<f64>);

impl BowVector {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Drug-by-attribution 0/1 membership matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightMatrix {
    vocabulary: Vocabulary,
    cells: Vec<[f64; 2]>,
}

impl WeightMatrix {
    /// Builds a matrix from explicit rows. Every row must be `[0,0]`,
    /// `[1,0]` or `[0,1]`.
    pub fn from_rows(vocabulary: Vocabulary, cells: Vec<[f64; 2]>) -> Result<Self, EncodeError> {
        if vocabulary.len() != cells.len() {
            return Err(EncodeError::DimensionMismatch {
                expected: vocabulary.len(),
                got: cells.len(),
            });
        }
        for (drug, row) in vocabulary.drugs.iter().zip(&cells) {
            let binary = row.iter().all(|&c| c == 0.0 || c == 1.0);
            if !binary || row[0] + row[1] > 1.0 {
                return Err(EncodeError::InvalidRow(drug.clone()));
            }
        }
        Ok(WeightMatrix { vocabulary, cells })
    }

    pub fn vocabulary(&self) -> &Vocabulary {
        &self.vocabulary
    }

    pub fn rows(&self) -> usize {
        self.cells.len()
    }

    pub fn row(&self, d: usize) -> [f64; 2] {
        self.cells[d]
    }

    pub fn column_sums(&self) -> [f64; 2] {
        self.cells
            .iter()
            .fold([0.0, 0.0], |acc, r| [acc[0] + r[0], acc[1] + r[1]])
    }
}

/// Rows follow the ontology's lexicographic drug order.
pub fn build_weight_matrix(ontology: &DrugOntology) -> Result<WeightMatrix, EncodeError> {
    if ontology.is_empty() {
        return Err(EncodeError::EmptyOntology);
    }
    let (drugs, cells): (Vec<String>, Vec<[f64; 2]>) = ontology
        .iter()
        .map(|(drug, attribution)| (drug.to_string(), row_for(attribution)))
        .unzip();
    WeightMatrix::from_rows(Vocabulary::new(drugs)?, cells)
}

fn row_for(attribution: Attribution) -> [f64; 2] {
    let mut row = [0.0; 2];
    if let Some(c) = COLUMNS.iter().position(|&a| a == attribution) {
        row[c] = 1.0;
    }
    row
}

pub fn to_bow(
    prescription: &Prescription,
    vocabulary: &Vocabulary,
) -> Result<BowVector, EncodeError> {
    let mut values = vec![0.0; vocabulary.len()];
    for item in prescription.items() {
        let d = vocabulary
            .index_of(&item.drug)
            .ok_or_else(|| EncodeError::DrugNotInVocabulary(item.drug.clone()))?;
        values[d] = item.dosage;
    }
    Ok(BowVector(values))
}

/// Total hot and cold dosage of a prescription.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct IfVector {
    pub hot: f64,
    pub cold: f64,
}

impl IfVector {
    pub fn new(hot: f64, cold: f64) -> Self {
        IfVector { hot, cold }
    }

    pub fn total(&self) -> f64 {
        self.hot + self.cold
    }
}

/// Computes `Wᵀ · v_p`.
pub fn encode(bow: &BowVector, weights: &WeightMatrix) -> Result<IfVector, EncodeError> {
    if bow.len() != weights.rows() {
        return Err(EncodeError::DimensionMismatch {
            expected: weights.rows(),
            got: bow.len(),
        });
    }
    let mut out = [0.0; 2];
    for (v, row) in bow.0.iter().zip(&weights.cells) {
        for c in 0..2 {
            out[c] += row[c] * v;
        }
    }
    Ok(IfVector::new(out[0], out[1]))
}

/// Per-component maxima of the training split.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InputScaler {
    pub hot_max: f64,
    pub cold_max: f64,
}

impl InputScaler {
    /// Divides each component by its maximum. Not clamped: inputs beyond
    /// the fitted range map above 1.
    pub fn apply(&self, v: &IfVector) -> [f64; 2] {
        [v.hot / self.hot_max, v.cold / self.cold_max]
    }
}

/// A zero maximum is replaced by 1 so that scaling stays total.
pub fn fit_scaler<'a, I>(samples: I) -> Result<InputScaler, EncodeError>
where
    I: IntoIterator<Item = &'a IfVector>,
{
    let mut iter = samples.into_iter().peekable();
    if iter.peek().is_none() {
        return Err(EncodeError::EmptySampleSet);
    }
    let (hot, cold) = iter.fold((0.0f64, 0.0f64), |(h, c), v| (h.max(v.hot), c.max(v.cold)));
    let nonzero = |m: f64| if m > 0.0 { m } else { 1.0 };
    Ok(InputScaler {
        hot_max: nonzero(hot),
        cold_max: nonzero(cold),
    })
}

/// One-hot training target: Safe = (1, 0), Unsafe = (0, 1).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Target([f64; 2]);

impl Target {
    /// Accepts only exact one-hot vectors.
    pub fn new(values: [f64; 2]) -> Option<Self> {
        match values {
            [1.0, 0.0] | [0.0, 1.0] => Some(Target(values)),
            _ => None,
        }
    }

    pub fn values(&self) -> [f64; 2] {
        self.0
    }

    pub fn label(&self) -> Label {
        if self.0[0] == 1.0 {
            Label::Safe
        } else {
            Label::Unsafe
        }
    }
}

impl From<Label> for Target {
    fn from(label: Label) -> Self {
        match label {
            Label::Safe => Target([1.0, 0.0]),
            Label::Unsafe => Target([0.0, 1.0]),
        }
    }
}

/// A prescription reduced to its raw IF vector and label. Scaling is
/// applied later with the scaler of whichever model consumes it.
#[derive(Debug, Clone, PartialEq)]
pub struct EncodedSample {
    pub prescription_id: String,
    pub input: IfVector,
    pub label: Label,
}

impl EncodedSample {
    pub fn target(&self) -> Target {
        self.label.into()
    }

    pub fn scaled(&self, scaler: &InputScaler) -> [f64; 2] {
        scaler.apply(&self.input)
    }
}

/// Weight matrix built from an ontology, ready to encode corpora.
#[derive(Debug, Clone)]
pub struct Encoder {
    weights: WeightMatrix,
    ontology: DrugOntology,
}

impl Encoder {
    pub fn new(ontology: &DrugOntology) -> Result<Self, EncodeError> {
        Ok(Encoder {
            weights: build_weight_matrix(ontology)?,
            ontology: ontology.clone(),
        })
    }

    pub fn weights(&self) -> &WeightMatrix {
        &self.weights
    }

    pub fn encode_prescription(&self, p: &Prescription) -> Result<EncodedSample, EncodeError> {
        let bow = to_bow(p, &self.weights.vocabulary)?;
        Ok(EncodedSample {
            prescription_id: p.id().to_string(),
            input: encode(&bow, &self.weights)?,
            label: p.label(),
        })
    }

    /// Encodes every prescription in corpus order. Fails up front if the
    /// ontology does not cover the corpus.
    pub fn encode_corpus(&self, corpus: &Corpus) -> Result<Vec<EncodedSample>, EncodeError> {
        let gaps = validate_against(corpus, &self.ontology);
        if !gaps.is_empty() {
            return Err(EncodeError::MissingDrugs(gaps));
        }
        corpus
            .prescriptions()
            .iter()
            .map(|p| self.encode_prescription(p))
            .collect()
    }
}

/// `id<TAB>hot<TAB>cold<TAB>label` lines with raw IFs.
pub fn samples_to_tsv(samples: &[EncodedSample]) -> String {
    let mut out = String::from("id\thot\tcold\tlabel\n");
    for s in samples {
        out.push_str(&format!(
            "{}\t{}\t{}\t{}\n",
            s.prescription_id, s.input.hot, s.input.cold, s.label
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{parse_corpus, parse_ontology, Item};

    fn rx(items: &[(&str, f64)]) -> Prescription {
        Prescription::new(
            "p",
            Label::Safe,
            items
                .iter()
                .map(|&(drug, dosage)| Item {
                    drug: drug.into(),
                    dosage,
                })
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn weight_matrix_rows_follow_sorted_vocabulary() {
        let ont = parse_ontology("c\tneutral\na\thot\nb\tcold").unwrap();
        let w = build_weight_matrix(&ont).unwrap();
        assert_eq!(w.vocabulary().drugs(), ["a", "b", "c"]);
        assert_eq!(w.row(0), [1.0, 0.0]);
        assert_eq!(w.row(1), [0.0, 1.0]);
        assert_eq!(w.row(2), [0.0, 0.0]);
    }

    #[test]
    fn singleton_weight_matrix() {
        let w = build_weight_matrix(&parse_ontology("a\thot").unwrap()).unwrap();
        assert_eq!(w.rows(), 1);
        assert_eq!(w.row(0), [1.0, 0.0]);
    }

    #[test]
    fn empty_ontology_rejected() {
        assert_eq!(
            build_weight_matrix(&DrugOntology::default()).unwrap_err(),
            EncodeError::EmptyOntology
        );
    }

    #[test]
    fn from_rows_rejects_double_membership() {
        let vocab = Vocabulary::new(vec!["a".into()]).unwrap();
        assert!(WeightMatrix::from_rows(vocab.clone(), vec![[1.0, 1.0]]).is_err());
        assert!(WeightMatrix::from_rows(vocab, vec![[0.5, 0.0]]).is_err());
    }

    #[test]
    fn bow_places_dosages() {
        let vocab = Vocabulary::new(vec!["a".into(), "b".into(), "c".into()]).unwrap();
        let bow = to_bow(&rx(&[("a", 9.0), ("c", 3.0)]), &vocab).unwrap();
        assert_eq!(bow.0, vec![9.0, 0.0, 3.0]);

        let vocab = Vocabulary::new(vec!["a".into()]).unwrap();
        assert_eq!(to_bow(&rx(&[("a", 2.5)]), &vocab).unwrap().0, vec![2.5]);
    }

    #[test]
    fn bow_rejects_unknown_drug() {
        let vocab = Vocabulary::new(vec!["a".into(), "b".into()]).unwrap();
        assert_eq!(
            to_bow(&rx(&[("x", 1.0)]), &vocab).unwrap_err(),
            EncodeError::DrugNotInVocabulary("x".into())
        );
    }

    #[test]
    fn encode_zero_and_mixed() {
        let ont = parse_ontology("hotA\thot\ncoldB\tcold\nneutC\tneutral").unwrap();
        let w = build_weight_matrix(&ont).unwrap();
        assert_eq!(
            encode(&BowVector(vec![0.0; 3]), &w).unwrap(),
            IfVector::new(0.0, 0.0)
        );

        let bow = to_bow(
            &rx(&[("hotA", 10.0), ("coldB", 5.0), ("neutC", 3.0)]),
            w.vocabulary(),
        )
        .unwrap();
        assert_eq!(encode(&bow, &w).unwrap(), IfVector::new(10.0, 5.0));
    }

    #[test]
    fn encode_dimension_mismatch() {
        let w = build_weight_matrix(&parse_ontology("a\thot").unwrap()).unwrap();
        assert_eq!(
            encode(&BowVector(vec![1.0, 2.0]), &w).unwrap_err(),
            EncodeError::DimensionMismatch {
                expected: 1,
                got: 2
            }
        );
    }

    #[test]
    fn scaler_fit_and_apply() {
        let s = fit_scaler(&[IfVector::new(10.0, 5.0), IfVector::new(20.0, 0.0)]).unwrap();
        assert_eq!((s.hot_max, s.cold_max), (20.0, 5.0));
        assert_eq!(s.apply(&IfVector::new(10.0, 5.0)), [0.5, 1.0]);
        assert_eq!(s.apply(&IfVector::new(0.0, 0.0)), [0.0, 0.0]);
        assert_eq!(s.apply(&IfVector::new(40.0, 10.0)), [2.0, 2.0]);
    }

    #[test]
    fn scaler_zero_max_substitution() {
        let s = fit_scaler(&[IfVector::default(), IfVector::default()]).unwrap();
        assert_eq!((s.hot_max, s.cold_max), (1.0, 1.0));
    }

    #[test]
    fn scaler_single_sample_fixed_point() {
        let v = IfVector::new(7.0, 3.0);
        let s = fit_scaler(&[v]).unwrap();
        assert_eq!((s.hot_max, s.cold_max), (7.0, 3.0));
        assert_eq!(s.apply(&v), [1.0, 1.0]);
    }

    #[test]
    fn scaler_requires_samples() {
        assert_eq!(fit_scaler(&[]).unwrap_err(), EncodeError::EmptySampleSet);
    }

    #[test]
    fn targets_are_one_hot() {
        assert_eq!(Target::from(Label::Safe).values(), [1.0, 0.0]);
        assert_eq!(Target::from(Label::Unsafe).values(), [0.0, 1.0]);
        assert!(Target::new([0.0, 0.0]).is_none());
        assert!(Target::new([1.0, 1.0]).is_none());
        assert!(Target::new([0.5, 0.5]).is_none());
        assert_eq!(Target::new([0.0, 1.0]).unwrap().label(), Label::Unsafe);
    }

    #[test]
    fn encode_corpus_requires_coverage() {
        let ont = parse_ontology("a\thot").unwrap();
        let enc = Encoder::new(&ont).unwrap();
        let corpus = parse_corpus("p1\tsafe\ta:1,x:2").unwrap();
        assert!(
            matches!(enc.encode_corpus(&corpus), Err(EncodeError::MissingDrugs(g)) if g.len() == 1)
        );
    }
}
