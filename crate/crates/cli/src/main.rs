//! `texsvm`: feature extraction, SVM training and prediction from the shell.

mod genfeature;
mod stats;
mod train;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

use texsvm::evaluation::Classifier;
use texsvm::featfile::{write_sparse, FeatureSet};

#[derive(Parser)]
#[command(name = "texsvm", version, about = "Color/texture descriptors and kernel SVM classification")]
#[command(arg_required_else_help = true)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Cross-validate and/or train a classifier on a feature file, or test a saved one
    Train(train::TrainArgs),
    /// Print the predicted class of every row of a feature file
    Predict {
        /// Classifier file written by `train -o`
        #[arg(short = 'l', value_name = "MODEL")]
        model: PathBuf,
        /// Feature file to classify
        #[arg(short = 'f', value_name = "FEATURESET")]
        features: PathBuf,
    },
    /// Extract descriptor vectors from images into a feature file
    ///
    /// genfeature -o OUT.feat [-l LABEL] (-i IMAGE [-x LEFT -y TOP -w WIDTH -h HEIGHT])...
    /// genfeature -o OUT.feat -D DIR      (DIR/<class>/<image> layout)
    #[command(disable_help_flag = true)]
    Genfeature {
        #[arg(trailing_var_arg = true, allow_hyphen_values = true, num_args = 0..)]
        args: Vec<String>,
    },
    /// Image counts and sizes per class of a DIR/<class>/<image> tree
    Stats {
        /// Class to report, or -1 for every class
        #[arg(short = 'c', value_name = "CLASS", default_value_t = -1, allow_hyphen_values = true)]
        class: i64,
        /// Root of the labeled image tree
        #[arg(short = 'd', value_name = "DIR")]
        dir: PathBuf,
    },
    /// Write a feature file in sparse `label index:value` form to standard output
    Tolibsvm {
        /// Feature file to convert
        #[arg(value_name = "FEATURESET")]
        features: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Train(args) => train::run(&args),
        Command::Predict { model, features } => predict(&model, &features),
        Command::Genfeature { args } => genfeature::run(&args),
        Command::Stats { class, dir } => stats::run(class, &dir),
        Command::Tolibsvm { features } => tolibsvm(&features),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

pub(crate) fn read_features(path: &std::path::Path) -> Result<FeatureSet> {
    FeatureSet::read(path).with_context(|| format!("reading feature file {}", path.display()))
}

pub(crate) fn read_classifier(path: &std::path::Path) -> Result<Classifier> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading model {}", path.display()))?;
    Classifier::from_text(&text).with_context(|| format!("parsing model {}", path.display()))
}

fn predict(model: &std::path::Path, features: &std::path::Path) -> Result<ExitCode> {
    let clf = read_classifier(model)?;
    let set = read_features(features)?;
    if !set.examples.is_empty() && set.arity != clf.arity() {
        anyhow::bail!("feature file has {} features per row, model expects {}", set.arity, clf.arity());
    }
    let mut out = String::new();
    for e in &set.examples {
        out.push_str(&clf.predict(&e.features)?.to_string());
        out.push('\n');
    }
    print!("{out}");
    Ok(ExitCode::SUCCESS)
}

fn tolibsvm(features: &std::path::Path) -> Result<ExitCode> {
    let set = read_features(features)?;
    let stdout = std::io::stdout();
    let mut lock = std::io::BufWriter::new(stdout.lock());
    write_sparse(&set, &mut lock)?;
    Ok(ExitCode::SUCCESS)
}
