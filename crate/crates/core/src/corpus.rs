//! Drug ontology and prescription corpus: data model, TSV parsing and
//! serialization, and ontology coverage checks.
//!
//! Ontology files (`.ont.tsv`) hold one `drug_id<TAB>attribution` entry per
//! line. Corpus files (`.rx.tsv`) hold one prescription per line as
//! `id<TAB>label<TAB>drug:dosage[,drug:dosage]*`. In both formats lines
//! starting with `#` are comments and blank lines are ignored. A comment of
//! the form `# version: <text>` (ontology) or `# ontology_version: <text>`
//! (corpus) carries the version string.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use thiserror::Error;

const ONTOLOGY_VERSION_KEY: &str = "version:";
const CORPUS_VERSION_KEY: &str = "ontology_version:";

/// Thermal property of a drug.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Attribution {
    Hot,
    Cold,
    /// Not affiliated with either hot or cold; ignored by the encoder.
    Neutral,
}

impl Attribution {
    pub fn as_str(self) -> &'static str {
        match self {
            Attribution::Hot => "hot",
            Attribution::Cold => "cold",
            Attribution::Neutral => "neutral",
        }
    }
}

impl fmt::Display for Attribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Attribution {
    type Err = ParseErrorKind;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "hot" => Ok(Attribution::Hot),
            "cold" => Ok(Attribution::Cold),
            "neutral" => Ok(Attribution::Neutral),
            other => Err(ParseErrorKind::UnknownAttribution(other.to_string())),
        }
    }
}

/// Class label of a prescription. `Safe` is the positive class in all
/// reported metrics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Label {
    /// No side effect reported when used correctly.
    Safe,
    /// Reported to frequently cause side effects.
    Unsafe,
}

impl Label {
    pub fn as_str(self) -> &'static str {
        match self {
            Label::Safe => "safe",
            Label::Unsafe => "unsafe",
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Label {
    type Err = ParseErrorKind;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "safe" => Ok(Label::Safe),
            "unsafe" => Ok(Label::Unsafe),
            other => Err(ParseErrorKind::UnknownLabel(other.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseErrorKind {
    #[error("duplicate drug `{0}`")]
    DuplicateDrug(String),
    #[error("unknown attribution `{0}`")]
    UnknownAttribution(String),
    #[error("unknown label `{0}`")]
    UnknownLabel(String),
    #[error("duplicate prescription id `{0}`")]
    DuplicatePrescriptionId(String),
    #[error("drug `{drug}` listed twice in prescription `{prescription}`")]
    DuplicateDrugInPrescription { prescription: String, drug: String },
    #[error("negative dosage `{0}`")]
    NegativeDosage(String),
    #[error("malformed line: {0}")]
    MalformedLine(String),
}

impl ParseErrorKind {
    /// Stable machine-readable name of the error kind.
    pub fn code(&self) -> &'static str {
        match self {
            ParseErrorKind::DuplicateDrug(_) => "DuplicateDrug",
            ParseErrorKind::UnknownAttribution(_) => "UnknownAttribution",
            ParseErrorKind::UnknownLabel(_) => "UnknownLabel",
            ParseErrorKind::DuplicatePrescriptionId(_) => "DuplicatePrescriptionId",
            ParseErrorKind::DuplicateDrugInPrescription { .. } => "DuplicateDrugInPrescription",
            ParseErrorKind::NegativeDosage(_) => "NegativeDosage",
            ParseErrorKind::MalformedLine(_) => "MalformedLine",
        }
    }
}

/// A parse failure located at a 1-based line of a named source.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{source_name}:{line}: {kind}")]
pub struct ParseError {
    pub source_name: String,
    pub line: usize,
    pub kind: ParseErrorKind,
}

#[derive(Debug, Error)]
pub enum LoadError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Parse(#[from] ParseError),
}

/// Mapping from drug identifier to its attribution.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DrugOntology {
    entries: BTreeMap<String, Attribution>,
    version: String,
}

impl DrugOntology {
    pub fn new(version: impl Into<String>) -> Self {
        DrugOntology {
            entries: BTreeMap::new(),
            version: version.into(),
        }
    }

    /// Adds an entry, rejecting duplicates and invalid identifiers.
    pub fn insert(&mut self, drug: &str, attribution: Attribution) -> Result<(), ParseErrorKind> {
        check_token(drug)?;
        if self.entries.contains_key(drug) {
            return Err(ParseErrorKind::DuplicateDrug(drug.to_string()));
        }
        self.entries.insert(drug.to_string(), attribution);
        Ok(())
    }

    pub fn get(&self, drug: &str) -> Option<Attribution> {
        self.entries.get(drug).copied()
    }

    pub fn contains(&self, drug: &str) -> bool {
        self.entries.contains_key(drug)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn version(&self) -> &str {
        &self.version
    }

    /// Entries in lexicographic drug order.
    pub fn iter(&self) -> impl Iterator<Item = (&str, Attribution)> {
        self.entries.iter().map(|(k, v)| (k.as_str(), *v))
    }

    pub fn load(path: &Path) -> Result<Self, LoadError> {
        let text = read_to_string(path)?;
        Ok(parse_ontology_from(&path.display().to_string(), &text)?)
    }

    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        if !self.version.is_empty() {
            let _ = writeln!(out, "# {} {}", ONTOLOGY_VERSION_KEY, self.version);
        }
        for (drug, attribution) in self.iter() {
            let _ = writeln!(out, "{drug}\t{attribution}");
        }
        out
    }
}

/// A single (drug, dosage) entry of a prescription.
#[derive(Debug, Clone, PartialEq)]
pub struct Item {
    pub drug: String,
    pub dosage: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Prescription {
    id: String,
    label: Label,
    items: Vec<Item>,
}

impl Prescription {
    /// Builds a prescription, enforcing a non-empty item list, finite
    /// non-negative dosages and no repeated drug.
    pub fn new(id: &str, label: Label, items: Vec<Item>) -> Result<Self, ParseErrorKind> {
        check_token(id)?;
        if items.is_empty() {
            return Err(ParseErrorKind::MalformedLine(format!(
                "prescription `{id}` has no items"
            )));
        }
        let mut seen = HashSet::with_capacity(items.len());
        for item in &items {
            check_token(&item.drug)?;
            if !item.dosage.is_finite() {
                return Err(ParseErrorKind::MalformedLine(format!(
                    "non-finite dosage for `{}`",
                    item.drug
                )));
            }
            if item.dosage < 0.0 {
                return Err(ParseErrorKind::NegativeDosage(item.dosage.to_string()));
            }
            if !seen.insert(item.drug.as_str()) {
                return Err(ParseErrorKind::DuplicateDrugInPrescription {
                    prescription: id.to_string(),
                    drug: item.drug.clone(),
                });
            }
        }
        let items = items
            .into_iter()
            .map(|item| Item {
                // fold -0.0 into 0.0
                dosage: item.dosage + 0.0,
                ..item
            })
            .collect();
        Ok(Prescription {
            id: id.to_string(),
            label,
            items,
        })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn label(&self) -> Label {
        self.label
    }

    pub fn items(&self) -> &[Item] {
        &self.items
    }

    pub fn total_dosage(&self) -> f64 {
        self.items.iter().map(|i| i.dosage).sum()
    }
}

/// Ordered collection of prescriptions with unique ids.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Corpus {
    prescriptions: Vec<Prescription>,
    ontology_version: String,
}

impl Corpus {
    pub fn new(ontology_version: impl Into<String>) -> Self {
        Corpus {
            prescriptions: Vec::new(),
            ontology_version: ontology_version.into(),
        }
    }

    pub fn push(&mut self, prescription: Prescription) -> Result<(), ParseErrorKind> {
        if self.prescriptions.iter().any(|p| p.id == prescription.id) {
            return Err(ParseErrorKind::DuplicatePrescriptionId(prescription.id));
        }
        self.prescriptions.push(prescription);
        Ok(())
    }

    pub fn prescriptions(&self) -> &[Prescription] {
        &self.prescriptions
    }

    pub fn len(&self) -> usize {
        self.prescriptions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.prescriptions.is_empty()
    }

    pub fn ontology_version(&self) -> &str {
        &self.ontology_version
    }

    pub fn count(&self, label: Label) -> usize {
        self.prescriptions
            .iter()
            .filter(|p| p.label == label)
            .count()
    }

    pub fn load(path: &Path) -> Result<Self, LoadError> {
        let text = read_to_string(path)?;
        Ok(parse_corpus_from(&path.display().to_string(), &text)?)
    }

    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        if !self.ontology_version.is_empty() {
            let _ = writeln!(out, "# {} {}", CORPUS_VERSION_KEY, self.ontology_version);
        }
        for p in &self.prescriptions {
            let _ = write!(out, "{}\t{}\t", p.id, p.label);
            for (i, item) in p.items.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                // `Display` for f64 is the shortest string that parses back exactly.
                let _ = write!(out, "{}:{}", item.drug, item.dosage);
            }
            out.push('\n');
        }
        out
    }
}

pub fn parse_ontology(text: &str) -> Result<DrugOntology, ParseError> {
    parse_ontology_from("<input>", text)
}

/// Parses an ontology document; `source_name` is reported in errors.
pub fn parse_ontology_from(source_name: &str, text: &str) -> Result<DrugOntology, ParseError> {
    let mut ontology = DrugOntology::default();
    for (idx, raw) in text.lines().enumerate() {
        let at = |kind| ParseError {
            source_name: source_name.to_string(),
            line: idx + 1,
            kind,
        };
        let line = raw.trim_end_matches('\r');
        match classify(line) {
            LineKind::Skip => continue,
            LineKind::Comment(body) => {
                if let Some(v) = body.strip_prefix(ONTOLOGY_VERSION_KEY) {
                    ontology.version = v.trim().to_string();
                }
                continue;
            }
            LineKind::Data => {}
        }
        let fields: Vec<&str> = line.split('\t').collect();
        let [drug, attribution] = fields[..] else {
            return Err(at(ParseErrorKind::MalformedLine(format!(
                "expected 2 tab-separated fields, found {}",
                fields.len()
            ))));
        };
        let attribution: Attribution = attribution.trim().parse().map_err(at)?;
        ontology.insert(drug.trim(), attribution).map_err(at)?;
    }
    Ok(ontology)
}

pub fn parse_corpus(text: &str) -> Result<Corpus, ParseError> {
    parse_corpus_from("<input>", text)
}

/// Parses a prescription corpus; `source_name` is reported in errors.
pub fn parse_corpus_from(source_name: &str, text: &str) -> Result<Corpus, ParseError> {
    let mut corpus = Corpus::default();
    let mut ids = HashSet::new();
    for (idx, raw) in text.lines().enumerate() {
        let at = |kind| ParseError {
            source_name: source_name.to_string(),
            line: idx + 1,
            kind,
        };
        let line = raw.trim_end_matches('\r');
        match classify(line) {
            LineKind::Skip => continue,
            LineKind::Comment(body) => {
                if let Some(v) = body.strip_prefix(CORPUS_VERSION_KEY) {
                    corpus.ontology_version = v.trim().to_string();
                }
                continue;
            }
            LineKind::Data => {}
        }
        let fields: Vec<&str> = line.split('\t').collect();
        let [id, label, items] = fields[..] else {
            return Err(at(ParseErrorKind::MalformedLine(format!(
                "expected 3 tab-separated fields, found {}",
                fields.len()
            ))));
        };
        let id = id.trim();
        let label: Label = label.trim().parse().map_err(at)?;
        let items = parse_items(items).map_err(at)?;
        let prescription = Prescription::new(id, label, items).map_err(at)?;
        if !ids.insert(id.to_string()) {
            return Err(at(ParseErrorKind::DuplicatePrescriptionId(id.to_string())));
        }
        corpus.prescriptions.push(prescription);
    }
    Ok(corpus)
}

fn parse_items(field: &str) -> Result<Vec<Item>, ParseErrorKind> {
    field
        .split(',')
        .map(|pair| {
            let (drug, dosage) = pair.split_once(':').ok_or_else(|| {
                ParseErrorKind::MalformedLine(format!("expected `drug:dosage`, found `{pair}`"))
            })?;
            let dosage_text = dosage.trim();
            let dosage = parse_decimal(dosage_text).ok_or_else(|| {
                ParseErrorKind::MalformedLine(format!("invalid dosage `{dosage_text}`"))
            })?;
            if dosage < 0.0 {
                return Err(ParseErrorKind::NegativeDosage(dosage_text.to_string()));
            }
            Ok(Item {
                drug: drug.trim().to_string(),
                dosage,
            })
        })
        .collect()
}

/// Accepts plain decimal literals (optional sign, digits, point, exponent);
/// rejects `inf`, `nan` and other words `f64::from_str` would take.
fn parse_decimal(s: &str) -> Option<f64> {
    let ok = !s.is_empty()
        && s.bytes()
            .all(|b| b.is_ascii_digit() || matches!(b, b'.' | b'-' | b'+' | b'e' | b'E'))
        && s.bytes().any(|b| b.is_ascii_digit());
    if !ok {
        return None;
    }
    s.parse::<f64>().ok().filter(|v| v.is_finite())
}

fn check_token(token: &str) -> Result<(), ParseErrorKind> {
    if token.is_empty() {
        return Err(ParseErrorKind::MalformedLine("empty identifier".into()));
    }
    if token
        .chars()
        .any(|c| c.is_whitespace() || c == ':' || c == ',' || c == '#')
    {
        return Err(ParseErrorKind::MalformedLine(format!(
            "identifier `{token}` contains a reserved character"
        )));
    }
    Ok(())
}

enum LineKind<'a> {
    Skip,
    Comment(&'a str),
    Data,
}

fn classify(line: &str) -> LineKind<'_> {
    if line.trim().is_empty() {
        LineKind::Skip
    } else if let Some(body) = line.trim_start().strip_prefix('#') {
        LineKind::Comment(body.trim())
    } else {
        LineKind::Data
    }
}

fn read_to_string(path: &Path) -> Result<String, LoadError> {
    std::fs::read_to_string(path).map_err(|source| LoadError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// A drug referenced by a prescription but absent from the ontology.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoverageGap {
    pub prescription: String,
    pub drug: String,
}

/// Lists every (prescription, drug) pair whose drug has no ontology entry,
/// in corpus order. Empty iff the ontology covers the corpus.
pub fn validate_against(corpus: &Corpus, ontology: &DrugOntology) -> Vec<CoverageGap> {
    corpus
        .prescriptions
        .iter()
        .flat_map(|p| {
            p.items
                .iter()
                .filter(|item| !ontology.contains(&item.drug))
                .map(|item| CoverageGap {
                    prescription: p.id.clone(),
                    drug: item.drug.clone(),
                })
        })
        .collect()
}
