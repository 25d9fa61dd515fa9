use std::borrow::Cow;

use rayon::prelude::*;

use crate::dataview::View;
use crate::error::{Error, Result};

use super::kernel::{GramCache, KernelSpec};
use super::model::MulticlassModel;
use super::train::{train_problem, Gram, Problem, TrainConfig, TrainOutcome};

#[derive(Debug, Clone)]
pub struct MulticlassOutcome {
    pub model: MulticlassModel,
    /// Per-class training results, in class order.
    pub outcomes: Vec<TrainOutcome>,
}

impl MulticlassOutcome {
    pub fn converged(&self) -> bool {
        self.outcomes.iter().all(|o| o.converged)
    }
}

/// Trains one model per class of `data` (labels `0..k`), each separating its
/// class from all others. The kernel matrix is computed once and shared.
pub fn train_multiclass(data: &View, spec: &KernelSpec, cfg: &TrainConfig) -> Result<MulticlassOutcome> {
    spec.validate()?;
    cfg.validate()?;
    let counts = {
        let mut counts: Vec<usize> = Vec::new();
        for i in 0..data.len() {
            let label = data.label(i);
            let k = usize::try_from(label)
                .map_err(|_| Error::Config(format!("multiclass labels must be 0..k, got {label}")))?;
            if k >= counts.len() {
                counts.resize(k + 1, 0);
            }
            counts[k] += 1;
        }
        counts
    };
    if counts.len() < 2 {
        return Err(Error::TooFewClasses {
            needed: 2,
            actual: counts.len(),
        });
    }
    if let Some(empty) = counts.iter().position(|&c| c == 0) {
        return Err(Error::EmptyClass(empty as i64));
    }

    let points: Vec<Vec<f64>> = (0..data.len()).map(|i| data.features(i).into_owned()).collect();
    let ids: Vec<u64> = (0..data.len()).map(|i| data.id(i)).collect();
    let labels: Vec<i64> = (0..data.len()).map(|i| data.label(i)).collect();
    let cache = if cfg.cache_gram {
        Some(GramCache::build(spec, &points)?)
    } else {
        None
    };

    let outcomes = (0..counts.len())
        .into_par_iter()
        .map(|class| {
            let problem = Problem {
                points: points.clone(),
                labels: labels.iter().map(|&l| if l == class as i64 { 1.0 } else { -1.0 }).collect(),
                ids: ids.clone(),
            };
            let gram = match &cache {
                Some(c) => Gram::Cached(Cow::Borrowed(c)),
                None => Gram::new(spec, &problem.points, false)?,
            };
            train_problem(&problem, &gram, spec, cfg)
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(MulticlassOutcome {
        model: MulticlassModel {
            models: outcomes.iter().map(|o| o.model.clone()).collect(),
        },
        outcomes,
    })
}
