//! Command-line front end: argument and config-file handling plus one
//! function per subcommand.
//!
//! Settings come from a flat `key = value` config file (`--config`), with
//! command-line flags overriding file values. Machine-readable artifacts are
//! written to the output directory; human-readable tables go to stdout.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

use crate::corpus::{validate_against, Corpus, CoverageGap, DrugOntology, LoadError};
use crate::encoder::{samples_to_tsv, EncodeError, Encoder};
use crate::evaluation::{
    cross_validate, distribution_report, scatter_tsv, CvReport, EvalError, FoldStrategy,
};
use crate::network::{train, NetworkError, NetworkModel, NetworkShape, TrainConfig};
use crate::synth::{generate, InvalidConfig, SynthConfig};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(String),
    #[error("missing required setting `{0}`")]
    Missing(&'static str),
    #[error("`{0}` requires a seed (--seed or `seed` in the config file)")]
    MissingSeed(&'static str),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Load(#[from] LoadError),
    #[error("{} drug reference(s) missing from the ontology", .0.len())]
    Gaps(Vec<CoverageGap>),
    #[error(transparent)]
    Encode(#[from] EncodeError),
    #[error(transparent)]
    Network(#[from] NetworkError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Synth(#[from] InvalidConfig),
}

impl CliError {
    /// Stable error name for diagnostics.
    pub fn code(&self) -> &'static str {
        match self {
            CliError::Config(_) => "Config",
            CliError::Missing(_) => "MissingSetting",
            CliError::MissingSeed(_) => "MissingSeed",
            CliError::Io { .. } | CliError::Load(LoadError::Io { .. }) => "Io",
            CliError::Load(LoadError::Parse(e)) => e.kind.code(),
            CliError::Gaps(_) => "OntologyGaps",
            CliError::Encode(_) => "Encode",
            CliError::Network(_) => "Network",
            CliError::Eval(_) => "Evaluation",
            CliError::Synth(_) => "InvalidConfig",
        }
    }

    /// `error<TAB>code<TAB>message` on a single line.
    pub fn diagnostic(&self) -> String {
        let msg = self.to_string().replace(['\n', '\t'], " ");
        format!("error\t{}\t{}", self.code(), msg)
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "sepredict",
    version,
    about = "Hot/cold influential-factor side-effect classifier"
)]
pub struct Cli {
    /// Flat key=value config file
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Master seed for stochastic commands
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a synthetic ontology and corpus
    Generate(GenerateArgs),
    /// Check that the ontology covers every drug in the corpus
    Validate(DataArgs),
    /// Write raw hot/cold IF vectors
    Encode(DataArgs),
    /// Train on the full corpus and save the model
    Train(TrainArgs),
    /// Predict side-effect probabilities with a saved model
    Predict(PredictArgs),
    /// Cross-validate and write reports
    Evaluate(EvaluateArgs),
}

#[derive(Debug, Args)]
pub struct DataArgs {
    #[arg(long)]
    pub ontology: Option<PathBuf>,
    #[arg(long)]
    pub corpus: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    /// Base name of the written files
    #[arg(long)]
    pub name: Option<String>,
    #[arg(long)]
    pub n_safe: Option<usize>,
    #[arg(long)]
    pub n_unsafe: Option<usize>,
    #[arg(long)]
    pub n_drugs: Option<usize>,
    #[arg(long)]
    pub noise: Option<f64>,
    /// both | safe | unsafe
    #[arg(long)]
    pub noise_target: Option<String>,
    #[arg(long)]
    pub threshold: Option<f64>,
}

#[derive(Debug, Args)]
pub struct NetArgs {
    /// Comma-separated layer sizes, e.g. 2,24,24,16,2
    #[arg(long)]
    pub shape: Option<String>,
    #[arg(long)]
    pub learning_rate: Option<f64>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub l2: Option<f64>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub net: NetArgs,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long)]
    pub model: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub net: NetArgs,
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub threshold: Option<f64>,
    /// Deal folds without per-class stratification
    #[arg(long)]
    pub unstratified: bool,
}

/// Every setting a command may consume.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub ontology: Option<PathBuf>,
    pub corpus: Option<PathBuf>,
    pub model: Option<PathBuf>,
    pub out: PathBuf,
    pub seed: Option<u64>,
    pub shape: NetworkShape,
    pub train: TrainConfig,
    pub k: usize,
    pub threshold: f64,
    pub strategy: FoldStrategy,
    pub synth: SynthConfig,
    pub name: String,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            ontology: None,
            corpus: None,
            model: None,
            out: PathBuf::from("."),
            seed: None,
            shape: NetworkShape::default(),
            train: TrainConfig::default(),
            k: 10,
            threshold: 500.0,
            strategy: FoldStrategy::Stratified,
            synth: SynthConfig::default(),
            name: "synth".into(),
        }
    }
}

/// Parses `key = value` lines; `#` starts a comment line.
pub fn parse_config_text(text: &str) -> Result<BTreeMap<String, String>, CliError> {
    let mut map = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| CliError::Config(format!("line {}: expected `key = value`", i + 1)))?;
        if map
            .insert(key.trim().to_string(), value.trim().to_string())
            .is_some()
        {
            return Err(CliError::Config(format!(
                "line {}: duplicate key `{}`",
                i + 1,
                key.trim()
            )));
        }
    }
    Ok(map)
}

fn parse_value<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, CliError> {
    value
        .parse()
        .map_err(|_| CliError::Config(format!("invalid value `{value}` for `{key}`")))
}

fn parse_range(key: &str, value: &str) -> Result<(f64, f64), CliError> {
    let (lo, hi) = value
        .split_once(',')
        .ok_or_else(|| CliError::Config(format!("`{key}` expects `low,high`")))?;
    Ok((parse_value(key, lo.trim())?, parse_value(key, hi.trim())?))
}

impl RunConfig {
    /// Builds a config from key/value settings applied in order, so later
    /// entries override earlier ones.
    pub fn from_settings<'a, I>(settings: I) -> Result<Self, CliError>
    where
        I: IntoIterator<Item = (&'a str, &'a str)>,
    {
        let mut c = RunConfig::default();
        for (key, value) in settings {
            let v = value;
            match key {
                "ontology" => c.ontology = Some(v.into()),
                "corpus" => c.corpus = Some(v.into()),
                "model" => c.model = Some(v.into()),
                "out" => c.out = v.into(),
                "seed" => c.seed = Some(parse_value(key, v)?),
                "shape" => {
                    let sizes = v
                        .split(',')
                        .map(|s| parse_value(key, s.trim()))
                        .collect::<Result<Vec<usize>, _>>()?;
                    c.shape = NetworkShape::new(sizes)?;
                }
                "learning_rate" => c.train.learning_rate = parse_value(key, v)?,
                "epochs" => c.train.epochs = parse_value(key, v)?,
                "batch_size" => c.train.batch_size = parse_value(key, v)?,
                "l2" => c.train.l2 = parse_value(key, v)?,
                "k" => c.k = parse_value(key, v)?,
                "threshold" => {
                    c.threshold = parse_value(key, v)?;
                    c.synth.threshold = c.threshold;
                }
                "stratified" => {
                    c.strategy = if parse_value::<bool>(key, v)? {
                        FoldStrategy::Stratified
                    } else {
                        FoldStrategy::Plain
                    }
                }
                "name" => c.name = v.to_string(),
                "n_safe" => c.synth.n_safe = parse_value(key, v)?,
                "n_unsafe" => c.synth.n_unsafe = parse_value(key, v)?,
                "n_drugs" => c.synth.n_drugs = parse_value(key, v)?,
                "hot_fraction" => c.synth.hot_fraction = parse_value(key, v)?,
                "cold_fraction" => c.synth.cold_fraction = parse_value(key, v)?,
                "noise" => c.synth.noise = parse_value(key, v)?,
                "noise_target" => c.synth.noise_target = v.parse()?,
                "safe_range" => c.synth.safe_total_dosage_range = parse_range(key, v)?,
                "unsafe_range" => c.synth.unsafe_total_dosage_range = parse_range(key, v)?,
                other => return Err(CliError::Config(format!("unknown key `{other}`"))),
            }
        }
        if c.name.is_empty() || c.name.contains(['/', '\\']) || c.name.starts_with('.') {
            return Err(CliError::Config(format!(
                "invalid output name `{}`",
                c.name
            )));
        }
        c.train.validate()?;
        Ok(c)
    }

    fn required_seed(&self, command: &'static str) -> Result<u64, CliError> {
        self.seed.ok_or(CliError::MissingSeed(command))
    }
}

fn existing(path: &Option<PathBuf>, key: &'static str) -> Result<PathBuf, CliError> {
    let path = path.clone().ok_or(CliError::Missing(key))?;
    if !path.is_file() {
        return Err(CliError::Io {
            path: path.display().to_string(),
            source: std::io::Error::new(std::io::ErrorKind::NotFound, "file not found"),
        });
    }
    Ok(path)
}

fn write_out(dir: &Path, file_name: &str, contents: &str) -> Result<PathBuf, CliError> {
    let io = |path: &Path| {
        let path = path.display().to_string();
        move |source| CliError::Io { path, source }
    };
    fs::create_dir_all(dir).map_err(io(dir))?;
    let path = dir.join(file_name);
    fs::write(&path, contents).map_err(io(&path))?;
    Ok(path)
}

/// File stem of a corpus path with `.rx.tsv` / `.tsv` removed.
fn corpus_stem(path: &Path) -> String {
    let name = path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    let stem = name
        .strip_suffix(".rx.tsv")
        .or_else(|| name.strip_suffix(".tsv"))
        .unwrap_or(&name);
    if stem.is_empty() {
        "corpus".into()
    } else {
        stem.to_string()
    }
}

fn load_data(config: &RunConfig) -> Result<(DrugOntology, Corpus, String), CliError> {
    let ont_path = existing(&config.ontology, "ontology")?;
    let corpus_path = existing(&config.corpus, "corpus")?;
    let ontology = DrugOntology::load(&ont_path)?;
    let corpus = Corpus::load(&corpus_path)?;
    Ok((ontology, corpus, corpus_stem(&corpus_path)))
}

/// What a command produced: stdout text and written files.
#[derive(Debug, Default)]
pub struct Outcome {
    pub stdout: String,
    pub files: Vec<PathBuf>,
}

pub fn cmd_generate(config: &RunConfig) -> Result<Outcome, CliError> {
    let seed = config.required_seed("generate")?;
    let synth = SynthConfig {
        seed,
        ..config.synth.clone()
    };
    let (ontology, corpus) = generate(&synth)?;
    let files = vec![
        write_out(
            &config.out,
            &format!("{}.ont.tsv", config.name),
            &ontology.to_tsv(),
        )?,
        write_out(
            &config.out,
            &format!("{}.rx.tsv", config.name),
            &corpus.to_tsv(),
        )?,
    ];
    let stdout = format!(
        "generated {} drugs, {} prescriptions ({} safe, {} unsafe)\n",
        ontology.len(),
        corpus.len(),
        synth.n_safe,
        synth.n_unsafe
    );
    Ok(Outcome { stdout, files })
}

/// Fails with [`CliError::Gaps`] when any drug lacks an ontology entry.
pub fn cmd_validate(config: &RunConfig) -> Result<Outcome, CliError> {
    let (ontology, corpus, _) = load_data(config)?;
    let gaps = validate_against(&corpus, &ontology);
    if !gaps.is_empty() {
        return Err(CliError::Gaps(gaps));
    }
    Ok(Outcome {
        stdout: format!(
            "ok\t{} prescriptions\t{} drugs\n",
            corpus.len(),
            ontology.len()
        ),
        files: vec![],
    })
}

fn encoder_for(ontology: &DrugOntology, corpus: &Corpus) -> Result<Encoder, CliError> {
    let gaps = validate_against(corpus, ontology);
    if !gaps.is_empty() {
        return Err(CliError::Gaps(gaps));
    }
    Ok(Encoder::new(ontology)?)
}

pub fn cmd_encode(config: &RunConfig) -> Result<Outcome, CliError> {
    let (ontology, corpus, stem) = load_data(config)?;
    let samples = encoder_for(&ontology, &corpus)?.encode_corpus(&corpus)?;
    let path = write_out(
        &config.out,
        &format!("{stem}.enc.tsv"),
        &samples_to_tsv(&samples),
    )?;
    Ok(Outcome {
        stdout: format!("encoded {} prescriptions\n", samples.len()),
        files: vec![path],
    })
}

pub fn cmd_train(config: &RunConfig) -> Result<Outcome, CliError> {
    let seed = config.required_seed("train")?;
    let (ontology, corpus, stem) = load_data(config)?;
    let samples = encoder_for(&ontology, &corpus)?.encode_corpus(&corpus)?;
    let train_config = TrainConfig {
        seed,
        ..config.train.clone()
    };
    let model = train(&samples, &train_config, &config.shape)?;
    let hits = samples
        .iter()
        .map(|s| {
            model
                .predict(&s.input)
                .map(|p| p.predicted_label == s.label)
        })
        .collect::<Result<Vec<_>, _>>()?
        .into_iter()
        .filter(|&hit| hit)
        .count();
    let path = write_out(&config.out, &format!("{stem}.model.json"), &model.to_json())?;
    Ok(Outcome {
        stdout: format!(
            "trained on {} prescriptions, training accuracy {:.4}\n",
            samples.len(),
            hits as f64 / samples.len() as f64
        ),
        files: vec![path],
    })
}

pub fn cmd_predict(config: &RunConfig) -> Result<Outcome, CliError> {
    let model_path = existing(&config.model, "model")?;
    let text = fs::read_to_string(&model_path).map_err(|source| CliError::Io {
        path: model_path.display().to_string(),
        source,
    })?;
    let model = NetworkModel::from_json(&text)?;
    let (ontology, corpus, stem) = load_data(config)?;
    let samples = encoder_for(&ontology, &corpus)?.encode_corpus(&corpus)?;
    let mut out = String::from("id\tp_safe\tp_unsafe\tlabel\n");
    for s in &samples {
        let p = model.predict(&s.input)?;
        let _ = writeln!(
            out,
            "{}\t{}\t{}\t{}",
            s.prescription_id, p.probabilities[0], p.probabilities[1], p.predicted_label
        );
    }
    let path = write_out(&config.out, &format!("{stem}.pred.tsv"), &out)?;
    Ok(Outcome {
        stdout: format!("predicted {} prescriptions\n", samples.len()),
        files: vec![path],
    })
}

pub fn cmd_evaluate(config: &RunConfig) -> Result<Outcome, CliError> {
    let seed = config.required_seed("evaluate")?;
    let (ontology, corpus, stem) = load_data(config)?;
    let encoder = encoder_for(&ontology, &corpus)?;
    let report: CvReport = cross_validate(
        &corpus,
        &encoder,
        config.k,
        seed,
        &config.train,
        &config.shape,
        config.strategy,
    )?;
    let samples = encoder.encode_corpus(&corpus)?;
    let dist = distribution_report(&samples, config.threshold)?;
    let table = report.to_tsv();
    let files = vec![
        write_out(&config.out, &format!("{stem}.report.tsv"), &table)?,
        write_out(
            &config.out,
            &format!("{stem}.report.json"),
            &report.to_json(),
        )?,
        write_out(&config.out, &format!("{stem}.dist.tsv"), &dist.to_tsv())?,
        write_out(
            &config.out,
            &format!("{stem}.scatter.tsv"),
            &scatter_tsv(&samples),
        )?,
    ];
    let mut stdout = table.replace('\t', "  ");
    let _ = writeln!(stdout, "\ntotal IF above {}:", config.threshold);
    stdout.push_str(&dist.to_tsv().replace('\t', "  "));
    Ok(Outcome { stdout, files })
}

fn opt<T: ToString>(v: &Option<T>) -> Option<String> {
    v.as_ref().map(T::to_string)
}

fn path(p: &Option<PathBuf>) -> Option<String> {
    p.as_ref().map(|p| p.display().to_string())
}

/// Resolves config file and flags, then dispatches.
pub fn run(cli: Cli) -> Result<Outcome, CliError> {
    let file_settings = match &cli.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|source| CliError::Io {
                path: path.display().to_string(),
                source,
            })?;
            parse_config_text(&text)?
        }
        None => BTreeMap::new(),
    };
    let mut flags: Vec<(&str, Option<String>)> =
        vec![("seed", opt(&cli.seed)), ("out", path(&cli.out))];
    let data = |d: &DataArgs| [("ontology", path(&d.ontology)), ("corpus", path(&d.corpus))];
    let net = |n: &NetArgs| {
        [
            ("shape", n.shape.clone()),
            ("learning_rate", opt(&n.learning_rate)),
            ("epochs", opt(&n.epochs)),
            ("batch_size", opt(&n.batch_size)),
            ("l2", opt(&n.l2)),
        ]
    };
    match &cli.command {
        Command::Generate(g) => flags.extend([
            ("name", g.name.clone()),
            ("n_safe", opt(&g.n_safe)),
            ("n_unsafe", opt(&g.n_unsafe)),
            ("n_drugs", opt(&g.n_drugs)),
            ("noise", opt(&g.noise)),
            ("noise_target", g.noise_target.clone()),
            ("threshold", opt(&g.threshold)),
        ]),
        Command::Validate(d) | Command::Encode(d) => flags.extend(data(d)),
        Command::Train(t) => {
            flags.extend(data(&t.data));
            flags.extend(net(&t.net));
        }
        Command::Predict(p) => {
            flags.extend(data(&p.data));
            flags.push(("model", path(&p.model)));
        }
        Command::Evaluate(e) => {
            flags.extend(data(&e.data));
            flags.extend(net(&e.net));
            flags.push(("k", opt(&e.k)));
            flags.push(("threshold", opt(&e.threshold)));
            if e.unstratified {
                flags.push(("stratified", Some("false".into())));
            }
        }
    }
    let settings = file_settings
        .iter()
        .map(|(k, v)| (k.as_str(), v.as_str()))
        .chain(
            flags
                .iter()
                .filter_map(|(k, v)| v.as_deref().map(|v| (*k, v))),
        );
    let config = RunConfig::from_settings(settings)?;
    match cli.command {
        Command::Generate(_) => cmd_generate(&config),
        Command::Validate(_) => cmd_validate(&config),
        Command::Encode(_) => cmd_encode(&config),
        Command::Train(_) => cmd_train(&config),
        Command::Predict(_) => cmd_predict(&config),
        Command::Evaluate(_) => cmd_evaluate(&config),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_text_parsing() {
        let map = parse_config_text("# run\nseed = 7\n\nepochs=20\n").unwrap();
        assert_eq!(map["seed"], "7");
        assert_eq!(map["epochs"], "20");
        assert!(parse_config_text("seed 7").is_err());
        assert!(parse_config_text("seed=1\nseed=2").is_err());
    }

    #[test]
    fn later_settings_override_earlier() {
        let c = RunConfig::from_settings([("epochs", "20"), ("epochs", "30"), ("k", "5")]).unwrap();
        assert_eq!(c.train.epochs, 30);
        assert_eq!(c.k, 5);
    }

    #[test]
    fn settings_cover_synth_and_network() {
        let c = RunConfig::from_settings([
            ("shape", "2,30,30,10,2"),
            ("noise", "0.35"),
            ("noise_target", "unsafe"),
            ("safe_range", "50, 400"),
            ("stratified", "false"),
            ("threshold", "450"),
        ])
        .unwrap();
        assert_eq!(c.shape.sizes(), [2, 30, 30, 10, 2]);
        assert_eq!(c.synth.noise, 0.35);
        assert_eq!(c.synth.safe_total_dosage_range, (50.0, 400.0));
        assert_eq!(c.strategy, FoldStrategy::Plain);
        assert_eq!(c.synth.threshold, 450.0);
    }

    #[test]
    fn bad_settings_rejected() {
        for bad in [
            [("epochs", "many")],
            [("shape", "2,10,10,10,2")],
            [("colour", "red")],
            [("learning_rate", "-1")],
            [("name", "../escape")],
        ] {
            assert!(RunConfig::from_settings(bad).is_err(), "{bad:?}");
        }
    }

    #[test]
    fn seed_is_mandatory_for_stochastic_commands() {
        let c = RunConfig::default();
        let err = cmd_generate(&c).unwrap_err();
        assert_eq!(err.code(), "MissingSeed");
        assert_eq!(cmd_evaluate(&c).unwrap_err().code(), "MissingSeed");
        assert_eq!(cmd_train(&c).unwrap_err().code(), "MissingSeed");
    }

    #[test]
    fn corpus_stem_strips_extensions() {
        assert_eq!(corpus_stem(Path::new("data/synth.rx.tsv")), "synth");
        assert_eq!(corpus_stem(Path::new("x.tsv")), "x");
        assert_eq!(corpus_stem(Path::new("plain")), "plain");
    }

    #[test]
    fn diagnostic_is_one_line() {
        let err = CliError::Config("bad\nthing".into());
        let d = err.diagnostic();
        assert!(!d.contains('\n'));
        assert!(d.starts_with("error\tConfig\t"));
    }
}
