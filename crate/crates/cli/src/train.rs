use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::Args;

use texsvm::dataview::View;
use texsvm::evaluation::{
    apply_simplified_problem, cross_validate, evaluate_classifier, train_classifier, Classifier, EvalConfig,
};
use texsvm::svm::{KernelSpec, Terminator, TrainConfig};

const KERNEL_LIST: &str = "\
kernels:
  1  linear      x.y                      (-p ignored)
  2  polynomial  (x.y + 1)^d              -p d, a positive integer
  3  rbf         exp(-|x-y|^2 / (2 s2))   -p s2 > 0 (--rbf-unsquared: |x-y|)
  4  mlp         tanh(x.y + b)            -p b";

#[derive(Args)]
pub struct TrainArgs {
    /// Feature file to train or test on
    #[arg(short = 'd', value_name = "DATASET")]
    dataset: Option<PathBuf>,
    /// Number of cross-validation folds; 1 trains on all data
    #[arg(short = 'f', value_name = "N_FOLDS", default_value_t = 2)]
    folds: usize,
    /// Test a saved classifier on the dataset instead of training
    #[arg(short = 'l', value_name = "MODEL")]
    load: Option<PathBuf>,
    /// Save the classifier (the last fold's when cross-validating)
    #[arg(short = 'o', value_name = "MODEL")]
    output: Option<PathBuf>,
    /// Kernel code; 0 lists the kernels
    #[arg(short = 'k', value_name = "KERN", default_value_t = 2)]
    kernel: u32,
    /// Kernel parameter: degree, sigma^2 or mlp bias
    #[arg(short = 'p', value_name = "KERN_PARAM", allow_hyphen_values = true)]
    param: Option<f64>,
    /// Box constraint C
    #[arg(short = 'C', value_name = "DOUBLE", default_value_t = 10.0)]
    c: f64,
    /// Feasibility gap tolerance
    #[arg(short = 'g', value_name = "GAP_TOL", default_value_t = 1e-3)]
    gap_tol: f64,
    /// Terminator bit mask: 1 gap, 2 KKT, 3 both
    #[arg(short = 'm', value_name = "TERM", default_value_t = 3)]
    terminator: u8,
    /// Epoch budget per binary machine
    #[arg(long, default_value_t = 10_000)]
    max_epochs: usize,
    /// Seed of the fold shuffle
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Remove and merge classes as in the simplified cell problem first
    #[arg(long)]
    simplified: bool,
    /// Fit feature scaling on all data instead of each training fold
    #[arg(long)]
    global_scale: bool,
    /// Use the unsquared distance in the rbf kernel
    #[arg(long)]
    rbf_unsquared: bool,
    /// Also write the cross-validation report as JSON
    #[arg(long, value_name = "PATH")]
    report: Option<PathBuf>,
}

fn kernel_spec(args: &TrainArgs) -> Result<KernelSpec> {
    let param = |default: f64| args.param.unwrap_or(default);
    let spec = match args.kernel {
        1 => {
            if args.param.is_some() {
                eprintln!("warning: -p is ignored for the linear kernel");
            }
            KernelSpec::Linear
        }
        2 => {
            let d = param(3.0);
            if d.fract() != 0.0 || d < 1.0 || d > f64::from(u32::MAX) {
                bail!("polynomial degree must be a positive integer, got {d}");
            }
            KernelSpec::Polynomial { degree: d as u32 }
        }
        3 if args.rbf_unsquared => KernelSpec::RbfUnsquared { sigma2: param(1.0) },
        3 => KernelSpec::Rbf { sigma2: param(1.0) },
        4 => KernelSpec::Mlp { bias: param(-1.0) },
        5..=7 => bail!("kernel code {} is reserved and not implemented; use -k 0 to list kernels", args.kernel),
        other => bail!("unknown kernel code {other}; use -k 0 to list kernels"),
    };
    spec.validate()?;
    Ok(spec)
}

pub fn run(args: &TrainArgs) -> Result<ExitCode> {
    if args.kernel == 0 {
        println!("{KERNEL_LIST}");
        return Ok(ExitCode::SUCCESS);
    }
    let Some(dataset) = &args.dataset else {
        bail!("a dataset is required (-d FEATURESET)");
    };
    let set = crate::read_features(dataset)?;
    let mut data: View = set.view().context("dataset has no rows")?;
    if args.simplified {
        data = apply_simplified_problem(&data);
        if data.is_empty() {
            bail!("no examples left after applying the simplified problem");
        }
    }

    if let Some(load) = &args.load {
        return test_loaded(load, &data, args);
    }

    let spec = kernel_spec(args)?;
    let cfg = TrainConfig {
        c: args.c,
        gap_tol: args.gap_tol,
        terminator: Terminator::new(args.terminator)?,
        max_epochs: args.max_epochs,
        ..Default::default()
    };
    cfg.validate()?;

    if args.folds == 1 {
        let (clf, converged) = train_classifier(&data, &spec, &cfg)?;
        let cm = evaluate_classifier(&clf, &data)?;
        println!("trained on {} examples, {} classes", data.len(), clf.mapping.len());
        println!("training error (%) {:.4}", cm.error_rate());
        if !converged {
            eprintln!("warning: training stopped after {} epochs without converging", cfg.max_epochs);
        }
        save(args, &clf)?;
        return Ok(ExitCode::SUCCESS);
    }

    let eval = EvalConfig {
        n_folds: args.folds,
        seed: args.seed,
        global_scale: args.global_scale,
    };
    let cv = cross_validate(&data, &spec, &cfg, &eval)?;
    print!("{}", cv.report);
    if let Some(path) = &args.report {
        std::fs::write(path, cv.report.to_json()?).with_context(|| format!("writing report {}", path.display()))?;
    }
    if let Some(last) = cv.classifiers.last() {
        save(args, last)?;
    }
    Ok(ExitCode::SUCCESS)
}

fn test_loaded(load: &std::path::Path, data: &View, args: &TrainArgs) -> Result<ExitCode> {
    let clf = crate::read_classifier(load)?;
    if data.arity() != clf.arity() {
        bail!("dataset has {} features per row, model expects {}", data.arity(), clf.arity());
    }
    let cm = evaluate_classifier(&clf, data)?;
    println!("tested on {} examples", cm.total());
    println!("Error rate (%)  Total {:.4}", cm.error_rate());
    for (t, g, n) in cm.confusions() {
        println!("  {t}\t{g}\t{n}");
    }
    save(args, &clf)?;
    Ok(ExitCode::SUCCESS)
}

fn save(args: &TrainArgs, clf: &Classifier) -> Result<()> {
    if let Some(path) = &args.output {
        std::fs::write(path, clf.to_text()).with_context(|| format!("writing model {}", path.display()))?;
    }
    Ok(())
}
