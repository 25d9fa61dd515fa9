//! Cross-validation, confusion matrices and error-rate reports.

use std::collections::BTreeMap;
use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataview::{make_folds, ClassMapping, ScaleParams, View, ViewExt};
use crate::error::{Error, Result};
use crate::svm::{train_multiclass, KernelSpec, MulticlassModel, TrainConfig};
use crate::textio::{join_f64, parse_f64_list, parse_int, LineReader};

/// Classes dropped from the simplified cell problem.
pub const SIMPLIFIED_REMOVED: [i64; 8] = [0, 9, 10, 11, 21, 24, 25, 29];
/// Classes merged in the simplified problem, with their new label.
pub const SIMPLIFIED_JOINS: [(&[i64], i64); 2] = [(&[1, 6], 30), (&[4, 7], 31)];

/// Drops the removed classes, then merges 1 and 6 into 30 and 4 and 7 into 31.
pub fn apply_simplified_problem(view: &View) -> View {
    let kept = SIMPLIFIED_REMOVED.iter().fold(view.clone(), |v, &c| v.class_remove(c));
    kept.class_join(&SIMPLIFIED_JOINS)
}

/// Counts of (true class, guessed class) pairs.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub classes: Vec<i64>,
    /// `counts[t][g]`, indexed by position in `classes`.
    pub counts: Vec<Vec<usize>>,
}

impl ConfusionMatrix {
    pub fn new(mut classes: Vec<i64>) -> Self {
        classes.sort_unstable();
        classes.dedup();
        let k = classes.len();
        Self {
            classes,
            counts: vec![vec![0; k]; k],
        }
    }

    fn position(&mut self, class: i64) -> usize {
        match self.classes.binary_search(&class) {
            Ok(p) => p,
            Err(p) => {
                self.classes.insert(p, class);
                for row in &mut self.counts {
                    row.insert(p, 0);
                }
                self.counts.insert(p, vec![0; self.classes.len()]);
                p
            }
        }
    }

    pub fn add(&mut self, truth: i64, guess: i64) {
        let t = self.position(truth);
        let g = self.position(guess);
        self.counts[t][g] += 1;
    }

    pub fn merge(&mut self, other: &ConfusionMatrix) {
        for (t, &truth) in other.classes.iter().enumerate() {
            for (g, &guess) in other.classes.iter().enumerate() {
                let n = other.counts[t][g];
                if n > 0 {
                    let (ti, gi) = (self.position(truth), self.position(guess));
                    self.counts[ti][gi] += n;
                }
            }
        }
    }

    pub fn total(&self) -> usize {
        self.counts.iter().flatten().sum()
    }

    pub fn correct(&self) -> usize {
        (0..self.classes.len()).map(|k| self.counts[k][k]).sum()
    }

    pub fn errors(&self) -> usize {
        self.total() - self.correct()
    }

    /// Number of test examples whose true class is `class`.
    pub fn class_total(&self, class: i64) -> usize {
        self.classes
            .binary_search(&class)
            .map(|t| self.counts[t].iter().sum())
            .unwrap_or(0)
    }

    /// `(true, guessed, count)` for every nonzero off-diagonal cell.
    pub fn confusions(&self) -> Vec<(i64, i64, usize)> {
        let mut out = Vec::new();
        for (t, row) in self.counts.iter().enumerate() {
            for (g, &n) in row.iter().enumerate() {
                if t != g && n > 0 {
                    out.push((self.classes[t], self.classes[g], n));
                }
            }
        }
        out
    }

    /// Misclassified share in percent; 0 for an empty matrix.
    pub fn error_rate(&self) -> f64 {
        let total = self.total();
        if total == 0 {
            0.0
        } else {
            100.0 * self.errors() as f64 / total as f64
        }
    }
}

/// Feature scaling, class mapping and trained machines bundled for
/// prediction on raw feature vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct Classifier {
    pub scale: ScaleParams,
    pub mapping: ClassMapping,
    /// `None` when training saw a single class, which is then always predicted.
    pub model: Option<MulticlassModel>,
}

pub const CLASSIFIER_HEADER: &str = "texsvm-classifier v1";

impl Classifier {
    pub fn arity(&self) -> usize {
        self.scale.arity()
    }

    pub fn predict(&self, features: &[f64]) -> Result<i64> {
        if features.len() != self.arity() {
            return Err(Error::Arity {
                expected: self.arity(),
                actual: features.len(),
            });
        }
        let linear = match &self.model {
            Some(m) => m.predict(&self.scale.apply(features))?,
            None => 0,
        };
        Ok(self.mapping.classes[linear])
    }

    /// Text form: header, class list, scale bounds, then the multiclass
    /// model or the word `constant`.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str(CLASSIFIER_HEADER);
        out.push('\n');
        let classes: Vec<String> = self.mapping.classes.iter().map(|c| c.to_string()).collect();
        out.push_str(&format!("classes {}\n", classes.join(" ")));
        out.push_str(&format!("arity {}\n", self.arity()));
        out.push_str(&format!("scale-min {}\n", join_f64(&self.scale.min)));
        out.push_str(&format!("scale-max {}\n", join_f64(&self.scale.max)));
        match &self.model {
            Some(m) => m.write_text(&mut out),
            None => out.push_str("constant\n"),
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut r = LineReader::new(text);
        let (n, header) = r.expect_line("classifier header")?;
        if header.trim() != CLASSIFIER_HEADER {
            return Err(Error::parse(n, format!("expected `{CLASSIFIER_HEADER}`, found {header:?}")));
        }
        let (n, classes) = r.expect_key("classes")?;
        let classes = classes
            .split_whitespace()
            .map(|t| parse_int::<i64>(n, t))
            .collect::<Result<Vec<_>>>()?;
        if classes.is_empty() || classes.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::parse(n, "class list must be nonempty and strictly ascending"));
        }
        let (n, arity) = r.expect_key("arity")?;
        let arity: usize = parse_int(n, arity)?;
        let (n, min) = r.expect_key("scale-min")?;
        let min = parse_f64_list(n, min)?;
        let (n2, max) = r.expect_key("scale-max")?;
        let max = parse_f64_list(n2, max)?;
        if min.len() != arity || max.len() != arity {
            return Err(Error::parse(n, format!("scale bounds must have {arity} values")));
        }
        let (n, next) = r.expect_line("model")?;
        let model = if next.trim() == "constant" {
            if classes.len() != 1 {
                return Err(Error::parse(n, "constant classifier must have exactly one class"));
            }
            None
        } else {
            // rewind so the multiclass reader sees its own header line
            let mut r = LineReader::new(text);
            skip_to(&mut r, n);
            let m = MulticlassModel::read_text(&mut r)?;
            if m.classes() != classes.len() {
                return Err(Error::parse(n, "model count does not match class list"));
            }
            if m.models.iter().any(|b| b.arity().is_some_and(|a| a != arity)) {
                return Err(Error::parse(n, "support vector length does not match arity"));
            }
            Some(m)
        };
        Ok(Self {
            scale: ScaleParams { min, max },
            mapping: ClassMapping { classes },
            model,
        })
    }
}

fn skip_to(r: &mut LineReader<'_>, line: usize) {
    while r.line_no() + 1 < line {
        if r.next_line().is_none() {
            break;
        }
    }
}

/// Scales, relabels and trains on `train`. Returns the classifier and
/// whether every binary machine converged.
pub fn train_classifier(train: &View, spec: &KernelSpec, cfg: &TrainConfig) -> Result<(Classifier, bool)> {
    let scale = train.fit_scale()?;
    train_classifier_scaled(train, scale, spec, cfg)
}

fn train_classifier_scaled(
    train: &View,
    scale: ScaleParams,
    spec: &KernelSpec,
    cfg: &TrainConfig,
) -> Result<(Classifier, bool)> {
    let (linear, mapping) = train.scaled(&scale)?.class_map_linear();
    if mapping.len() < 2 {
        return Ok((
            Classifier {
                scale,
                mapping,
                model: None,
            },
            true,
        ));
    }
    let outcome = train_multiclass(&linear, spec, cfg)?;
    let converged = outcome.converged();
    Ok((
        Classifier {
            scale,
            mapping,
            model: Some(outcome.model),
        },
        converged,
    ))
}

/// Confusion counts of `clf` on every example of `data`.
pub fn evaluate_classifier(clf: &Classifier, data: &View) -> Result<ConfusionMatrix> {
    let mut cm = ConfusionMatrix::new(data.class_counts().into_keys().collect());
    for i in 0..data.len() {
        cm.add(data.label(i), clf.predict(&data.features(i))?);
    }
    Ok(cm)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvalConfig {
    pub n_folds: usize,
    pub seed: u64,
    /// Fit feature scaling on the whole data set instead of each training fold.
    pub global_scale: bool,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            n_folds: 2,
            seed: 0,
            global_scale: false,
        }
    }
}

/// Settings echoed into a report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportParams {
    pub kernel: String,
    pub kernel_param: Option<f64>,
    pub c: f64,
    pub gap_tol: f64,
    pub terminator: u8,
    pub max_epochs: usize,
    pub n_folds: usize,
    pub seed: u64,
    pub global_scale: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    /// Percent misclassified over all folds.
    pub total_error: f64,
    /// Percent misclassified per fold.
    pub fold_errors: Vec<f64>,
    pub max_error: f64,
    pub min_error: f64,
    pub confusion: ConfusionMatrix,
    pub params: ReportParams,
    pub warnings: Vec<String>,
}

impl EvalReport {
    /// JSON with the keys `total_error`, `fold_errors`, `confusion`,
    /// `params` and friends; error rates rounded to 4 decimals.
    pub fn to_json(&self) -> Result<String> {
        let round = |x: f64| (x * 1e4).round() / 1e4;
        let value = serde_json::json!({
            "total_error": round(self.total_error),
            "fold_errors": self.fold_errors.iter().map(|&e| round(e)).collect::<Vec<_>>(),
            "max_error": round(self.max_error),
            "min_error": round(self.min_error),
            "classes": self.confusion.classes,
            "confusion": self.confusion.counts,
            "params": self.params,
            "warnings": self.warnings,
        });
        Ok(serde_json::to_string_pretty(&value)? + "\n")
    }
}

impl fmt::Display for EvalReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Error rate (%)  Total {:.4}  Max {:.4}  Min {:.4}", self.total_error, self.max_error, self.min_error)?;
        for (k, e) in self.fold_errors.iter().enumerate() {
            writeln!(f, "  fold {}: {:.4}", k + 1, e)?;
        }
        let confusions = self.confusion.confusions();
        if !confusions.is_empty() {
            writeln!(f, "Confusions (class, guessed, n):")?;
            for (t, g, n) in confusions {
                writeln!(f, "  {t}\t{g}\t{n}")?;
            }
        }
        for w in &self.warnings {
            writeln!(f, "warning: {w}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct CrossValidation {
    pub report: EvalReport,
    /// Classifier trained on each fold, in fold order.
    pub classifiers: Vec<Classifier>,
}

/// Shuffled `n_folds`-fold cross-validation of a one-against-rest SVM.
pub fn cross_validate(data: &View, spec: &KernelSpec, cfg: &TrainConfig, eval: &EvalConfig) -> Result<CrossValidation> {
    spec.validate()?;
    cfg.validate()?;
    if data.is_empty() {
        return Err(Error::EmptyView);
    }
    let counts: BTreeMap<i64, usize> = data.class_counts();
    if let Some((&class, &count)) = counts.iter().find(|(_, &n)| n < eval.n_folds) {
        return Err(Error::ClassTooSmall {
            class,
            count,
            folds: eval.n_folds,
        });
    }
    let folds = make_folds(data, eval.n_folds, eval.seed)?;
    let global = if eval.global_scale { Some(data.fit_scale()?) } else { None };

    let results = folds
        .par_iter()
        .enumerate()
        .map(|(k, fold)| -> Result<(ConfusionMatrix, Classifier, Vec<String>)> {
            let scale = match &global {
                Some(s) => s.clone(),
                None => fold.train.fit_scale()?,
            };
            let (clf, converged) = train_classifier_scaled(&fold.train, scale, spec, cfg)?;
            let mut warnings = Vec::new();
            if clf.model.is_none() {
                warnings.push(format!(
                    "fold {}: training data has only class {}, predicting it everywhere",
                    k + 1,
                    clf.mapping.classes[0]
                ));
            }
            if !converged {
                warnings.push(format!("fold {}: training stopped after {} epochs without converging", k + 1, cfg.max_epochs));
            }
            let mut cm = ConfusionMatrix::new(counts.keys().copied().collect());
            for i in 0..fold.test.len() {
                cm.add(fold.test.label(i), clf.predict(&fold.test.features(i))?);
            }
            Ok((cm, clf, warnings))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut confusion = ConfusionMatrix::new(counts.keys().copied().collect());
    let mut fold_errors = Vec::new();
    let mut warnings = Vec::new();
    let mut classifiers = Vec::new();
    for (cm, clf, w) in results {
        confusion.merge(&cm);
        fold_errors.push(cm.error_rate());
        warnings.extend(w);
        classifiers.push(clf);
    }
    let max_error = fold_errors.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min_error = fold_errors.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(CrossValidation {
        report: EvalReport {
            total_error: confusion.error_rate(),
            fold_errors,
            max_error,
            min_error,
            confusion,
            params: ReportParams {
                kernel: spec.name().to_string(),
                kernel_param: spec.param(),
                c: cfg.c,
                gap_tol: cfg.gap_tol,
                terminator: cfg.terminator.bits(),
                max_epochs: cfg.max_epochs,
                n_folds: eval.n_folds,
                seed: eval.seed,
                global_scale: eval.global_scale,
            },
            warnings,
        },
        classifiers,
    })
}
