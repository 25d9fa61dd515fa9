//! Read-only, composable views over a collection of labeled examples.
//!
//! A view never copies feature data: derived views hold an [`Arc`] to the
//! view they transform and map indices, labels or values on access. Views
//! are chained to build training and test sets for cross-validation:
//!
//! ```
//! use texsvm::dataview::{view_base, Example, ViewExt};
//!
//! let examples = (0..6)
//!     .map(|i| Example::new(i, (i % 2) as i64, vec![i as f64, 1.0]))
//!     .collect();
//! let base = view_base(examples).unwrap();
//! let train = base.shuffled(7).range(0, 4).unwrap();
//! let scale = train.fit_scale().unwrap();
//! let scaled = train.scaled(&scale).unwrap();
//! assert_eq!(scaled.len(), 4);
//! ```

use std::borrow::Cow;
use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A feature vector with its class label and a stable identifier.
#[derive(Debug, Clone, PartialEq)]
pub struct Example {
    pub id: u64,
    pub label: i64,
    pub features: Vec<f64>,
}

impl Example {
    pub fn new(id: u64, label: i64, features: Vec<f64>) -> Self {
        Self { id, label, features }
    }
}

pub trait DataView: Send + Sync + fmt::Debug {
    fn len(&self) -> usize;

    /// Number of features per example.
    fn arity(&self) -> usize;

    fn features(&self, i: usize) -> Cow<'_, [f64]>;

    fn label(&self, i: usize) -> i64;

    fn id(&self, i: usize) -> u64;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

pub type View = Arc<dyn DataView>;

/// Identity view over owned examples.
#[derive(Debug)]
struct ExampleView {
    examples: Arc<Vec<Example>>,
    arity: usize,
}

impl DataView for ExampleView {
    fn len(&self) -> usize {
        self.examples.len()
    }
    fn arity(&self) -> usize {
        self.arity
    }
    fn features(&self, i: usize) -> Cow<'_, [f64]> {
        Cow::Borrowed(&self.examples[i].features)
    }
    fn label(&self, i: usize) -> i64 {
        self.examples[i].label
    }
    fn id(&self, i: usize) -> u64 {
        self.examples[i].id
    }
}

pub fn view_base(examples: Vec<Example>) -> Result<View> {
    view_shared(Arc::new(examples))
}

pub fn view_shared(examples: Arc<Vec<Example>>) -> Result<View> {
    let arity = examples.first().ok_or(Error::EmptyView)?.features.len();
    if let Some(bad) = examples.iter().find(|e| e.features.len() != arity) {
        return Err(Error::Arity {
            expected: arity,
            actual: bad.features.len(),
        });
    }
    Ok(Arc::new(ExampleView { examples, arity }))
}

/// Selects source indices of an inner view.
#[derive(Debug)]
struct IndexView {
    inner: View,
    indices: Vec<usize>,
}

impl DataView for IndexView {
    fn len(&self) -> usize {
        self.indices.len()
    }
    fn arity(&self) -> usize {
        self.inner.arity()
    }
    fn features(&self, i: usize) -> Cow<'_, [f64]> {
        self.inner.features(self.indices[i])
    }
    fn label(&self, i: usize) -> i64 {
        self.inner.label(self.indices[i])
    }
    fn id(&self, i: usize) -> u64 {
        self.inner.id(self.indices[i])
    }
}

#[derive(Debug)]
struct RangeView {
    inner: View,
    start: usize,
    end: usize,
}

impl DataView for RangeView {
    fn len(&self) -> usize {
        self.end - self.start
    }
    fn arity(&self) -> usize {
        self.inner.arity()
    }
    fn features(&self, i: usize) -> Cow<'_, [f64]> {
        self.inner.features(self.start + i)
    }
    fn label(&self, i: usize) -> i64 {
        self.inner.label(self.start + i)
    }
    fn id(&self, i: usize) -> u64 {
        self.inner.id(self.start + i)
    }
}

#[derive(Debug)]
struct ConcatView {
    first: View,
    second: View,
}

impl ConcatView {
    fn locate(&self, i: usize) -> (&View, usize) {
        let n = self.first.len();
        if i < n {
            (&self.first, i)
        } else {
            (&self.second, i - n)
        }
    }
}

impl DataView for ConcatView {
    fn len(&self) -> usize {
        self.first.len() + self.second.len()
    }
    fn arity(&self) -> usize {
        self.first.arity()
    }
    fn features(&self, i: usize) -> Cow<'_, [f64]> {
        let (v, j) = self.locate(i);
        v.features(j)
    }
    fn label(&self, i: usize) -> i64 {
        let (v, j) = self.locate(i);
        v.label(j)
    }
    fn id(&self, i: usize) -> u64 {
        let (v, j) = self.locate(i);
        v.id(j)
    }
}

/// Rewrites labels through a lookup table; unknown labels pass through.
#[derive(Debug)]
struct RelabelView {
    inner: View,
    table: BTreeMap<i64, i64>,
    default: Option<i64>,
}

impl DataView for RelabelView {
    fn len(&self) -> usize {
        self.inner.len()
    }
    fn arity(&self) -> usize {
        self.inner.arity()
    }
    fn features(&self, i: usize) -> Cow<'_, [f64]> {
        self.inner.features(i)
    }
    fn label(&self, i: usize) -> i64 {
        let original = self.inner.label(i);
        match self.table.get(&original) {
            Some(&mapped) => mapped,
            None => self.default.unwrap_or(original),
        }
    }
    fn id(&self, i: usize) -> u64 {
        self.inner.id(i)
    }
}

/// Per-feature minimum and maximum fitted on a view.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScaleParams {
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

impl ScaleParams {
    pub fn arity(&self) -> usize {
        self.min.len()
    }

    pub fn range(&self, feature: usize) -> f64 {
        self.max[feature] - self.min[feature]
    }

    pub fn midrange(&self, feature: usize) -> f64 {
        (self.max[feature] + self.min[feature]) / 2.0
    }

    /// True for features that were constant on the fitting data.
    pub fn is_constant(&self, feature: usize) -> bool {
        self.range(feature) == 0.0
    }

    /// Maps one value of `feature` to `(x - midrange) / (range / 2)`, or 0
    /// for constant features.
    ///
    /// Evaluated as `((x - max) + (x - min)) / (max - min)` so the fitted
    /// extremes land on exactly -1 and +1.
    pub fn apply_value(&self, feature: usize, x: f64) -> f64 {
        let (lo, hi) = (self.min[feature], self.max[feature]);
        if hi == lo {
            0.0
        } else {
            ((x - hi) + (x - lo)) / (hi - lo)
        }
    }

    pub fn apply(&self, features: &[f64]) -> Vec<f64> {
        features
            .iter()
            .enumerate()
            .map(|(k, &x)| self.apply_value(k, x))
            .collect()
    }
}

#[derive(Debug)]
struct ScaledView {
    inner: View,
    params: ScaleParams,
}

impl DataView for ScaledView {
    fn len(&self) -> usize {
        self.inner.len()
    }
    fn arity(&self) -> usize {
        self.inner.arity()
    }
    fn features(&self, i: usize) -> Cow<'_, [f64]> {
        Cow::Owned(self.params.apply(&self.inner.features(i)))
    }
    fn label(&self, i: usize) -> i64 {
        self.inner.label(i)
    }
    fn id(&self, i: usize) -> u64 {
        self.inner.id(i)
    }
}

/// Ordered class ids of a linear class map: position `k` holds the original
/// label now represented as `k`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassMapping {
    pub classes: Vec<i64>,
}

impl ClassMapping {
    pub fn to_linear(&self, original: i64) -> Option<usize> {
        self.classes.binary_search(&original).ok()
    }

    pub fn to_original(&self, linear: usize) -> Option<i64> {
        self.classes.get(linear).copied()
    }

    pub fn len(&self) -> usize {
        self.classes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.classes.is_empty()
    }
}

/// SplitMix64: 64-bit state, golden-ratio increment, and the standard
/// variant-13 finalizer. Output depends only on the seed.
#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        Self { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Uniform integer in `0..bound` by 128-bit multiply-shift.
    pub fn below(&mut self, bound: usize) -> usize {
        ((u128::from(self.next_u64()) * bound as u128) >> 64) as usize
    }
}

/// Fisher-Yates permutation of `0..n` driven by [`SplitMix64`].
pub fn permutation(n: usize, seed: u64) -> Vec<usize> {
    let mut rng = SplitMix64::new(seed);
    let mut idx: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        let j = rng.below(i + 1);
        idx.swap(i, j);
    }
    idx
}

/// View constructors available on every [`View`].
pub trait ViewExt {
    fn range(&self, start: usize, end: usize) -> Result<View>;
    fn concat(&self, other: &View) -> Result<View>;
    fn shuffled(&self, seed: u64) -> View;
    fn fit_scale(&self) -> Result<ScaleParams>;
    fn scaled(&self, params: &ScaleParams) -> Result<View>;
    fn class_map_linear(&self) -> (View, ClassMapping);
    fn class_map_binary(&self, positive: i64) -> View;
    fn class_join(&self, groups: &[(&[i64], i64)]) -> View;
    fn class_remove(&self, class: i64) -> View;
    fn class_counts(&self) -> BTreeMap<i64, usize>;
    fn examples(&self) -> Vec<Example>;
}

impl ViewExt for View {
    fn range(&self, start: usize, end: usize) -> Result<View> {
        if start > end || end > self.len() {
            return Err(Error::RangeBounds {
                start,
                end,
                len: self.len(),
            });
        }
        Ok(Arc::new(RangeView {
            inner: self.clone(),
            start,
            end,
        }))
    }

    fn concat(&self, other: &View) -> Result<View> {
        if self.arity() != other.arity() {
            return Err(Error::Arity {
                expected: self.arity(),
                actual: other.arity(),
            });
        }
        Ok(Arc::new(ConcatView {
            first: self.clone(),
            second: other.clone(),
        }))
    }

    fn shuffled(&self, seed: u64) -> View {
        Arc::new(IndexView {
            inner: self.clone(),
            indices: permutation(self.len(), seed),
        })
    }

    fn fit_scale(&self) -> Result<ScaleParams> {
        if self.is_empty() {
            return Err(Error::EmptyView);
        }
        let arity = self.arity();
        let mut min = vec![f64::INFINITY; arity];
        let mut max = vec![f64::NEG_INFINITY; arity];
        for i in 0..self.len() {
            for (k, &x) in self.features(i).iter().enumerate() {
                min[k] = min[k].min(x);
                max[k] = max[k].max(x);
            }
        }
        Ok(ScaleParams { min, max })
    }

    fn scaled(&self, params: &ScaleParams) -> Result<View> {
        if params.arity() != self.arity() {
            return Err(Error::Arity {
                expected: self.arity(),
                actual: params.arity(),
            });
        }
        Ok(Arc::new(ScaledView {
            inner: self.clone(),
            params: params.clone(),
        }))
    }

    fn class_map_linear(&self) -> (View, ClassMapping) {
        let classes: Vec<i64> = self.class_counts().into_keys().collect();
        let table = classes.iter().enumerate().map(|(k, &c)| (c, k as i64)).collect();
        let view: View = Arc::new(RelabelView {
            inner: self.clone(),
            table,
            default: None,
        });
        (view, ClassMapping { classes })
    }

    fn class_map_binary(&self, positive: i64) -> View {
        Arc::new(RelabelView {
            inner: self.clone(),
            table: BTreeMap::from([(positive, 1)]),
            default: Some(-1),
        })
    }

    fn class_join(&self, groups: &[(&[i64], i64)]) -> View {
        let table = groups
            .iter()
            .flat_map(|(members, target)| members.iter().map(move |&m| (m, *target)))
            .collect();
        Arc::new(RelabelView {
            inner: self.clone(),
            table,
            default: None,
        })
    }

    fn class_remove(&self, class: i64) -> View {
        let indices = (0..self.len()).filter(|&i| self.label(i) != class).collect();
        Arc::new(IndexView {
            inner: self.clone(),
            indices,
        })
    }

    fn class_counts(&self) -> BTreeMap<i64, usize> {
        let mut counts = BTreeMap::new();
        for i in 0..self.len() {
            *counts.entry(self.label(i)).or_insert(0) += 1;
        }
        counts
    }

    /// Materializes the view; used where a model must own its data.
    fn examples(&self) -> Vec<Example> {
        (0..self.len())
            .map(|i| Example::new(self.id(i), self.label(i), self.features(i).into_owned()))
            .collect()
    }
}

/// One cross-validation split.
#[derive(Debug, Clone)]
pub struct Fold {
    pub train: View,
    pub test: View,
}

/// Shuffles `view` by `seed` and cuts it into `n_folds` contiguous test
/// ranges; earlier folds take one extra example each until the remainder is
/// used up. A single fold trains and tests on the whole view.
pub fn make_folds(view: &View, n_folds: usize, seed: u64) -> Result<Vec<Fold>> {
    let n = view.len();
    if n_folds == 0 || n_folds > n {
        return Err(Error::Folds { folds: n_folds, len: n });
    }
    if n_folds == 1 {
        return Ok(vec![Fold {
            train: view.clone(),
            test: view.clone(),
        }]);
    }
    let shuffled = view.shuffled(seed);
    let (base, rem) = (n / n_folds, n % n_folds);
    let mut folds = Vec::with_capacity(n_folds);
    let mut start = 0;
    for f in 0..n_folds {
        let end = start + base + usize::from(f < rem);
        let test = shuffled.range(start, end)?;
        let train = shuffled.range(0, start)?.concat(&shuffled.range(end, n)?)?;
        folds.push(Fold { train, test });
        start = end;
    }
    Ok(folds)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy(n: usize) -> View {
        view_base(
            (0..n)
                .map(|i| Example::new(i as u64, (i % 3) as i64, vec![i as f64, -(i as f64), 7.0]))
                .collect(),
        )
        .unwrap()
    }

    fn ids(v: &View) -> Vec<u64> {
        (0..v.len()).map(|i| v.id(i)).collect()
    }

    fn column(v: &View, k: usize) -> Vec<f64> {
        (0..v.len()).map(|i| v.features(i)[k]).collect()
    }

    fn with_column(values: &[f64]) -> View {
        view_base(
            values
                .iter()
                .enumerate()
                .map(|(i, &x)| Example::new(i as u64, 0, vec![x]))
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn base_view_is_identity() {
        let v = toy(5);
        assert_eq!(v.len(), 5);
        assert_eq!(v.features(3).as_ref(), &[3.0, -3.0, 7.0]);
        let r = v.range(0, 5).unwrap();
        assert_eq!(ids(&r), ids(&v));
        assert!(view_base(vec![]).is_err());
        let ragged = vec![Example::new(0, 0, vec![1.0]), Example::new(1, 0, vec![1.0, 2.0])];
        assert!(view_base(ragged).is_err());
    }

    #[test]
    fn ranges() {
        let v = toy(4);
        assert_eq!(v.range(2, 2).unwrap().len(), 0);
        assert_eq!(ids(&v.range(1, 3).unwrap()), vec![1, 2]);
        assert!(v.range(3, 2).is_err());
        assert!(v.range(0, 5).is_err());
    }

    #[test]
    fn concat_views() {
        let v = toy(6);
        let a = v.range(0, 2).unwrap();
        let b = v.range(2, 6).unwrap();
        let c = a.concat(&b).unwrap();
        assert_eq!(c.len(), 6);
        assert_eq!(ids(&c), ids(&v));
        assert_eq!(c.id(2), b.id(0));
        let other = with_column(&[1.0]);
        assert!(a.concat(&other).is_err());
    }

    #[test]
    fn shuffle_is_seeded_permutation() {
        let v = toy(52);
        let s1 = ids(&v.shuffled(1));
        let mut sorted = s1.clone();
        sorted.sort_unstable();
        assert_eq!(sorted, ids(&v));
        assert_eq!(s1, ids(&v.shuffled(1)));
        assert_ne!(s1, ids(&v.shuffled(2)));
    }

    #[test]
    fn splitmix_reference_values() {
        // first outputs for seed 0 of the reference SplitMix64
        let mut rng = SplitMix64::new(0);
        assert_eq!(rng.next_u64(), 0xE220_A839_7B1D_CDAF);
        assert_eq!(rng.next_u64(), 0x6E78_9E6A_A1B9_65F4);
        assert_eq!(rng.next_u64(), 0x06C4_5D18_8009_454F);
    }

    #[test]
    fn scale_fit_and_apply() {
        let v = with_column(&[0.0, 10.0]);
        let p = v.fit_scale().unwrap();
        assert_eq!((p.range(0), p.midrange(0)), (10.0, 5.0));
        assert_eq!(column(&v.scaled(&p).unwrap(), 0), vec![-1.0, 1.0]);
        assert_eq!(p.apply_value(0, 20.0), 3.0);

        let c = with_column(&[7.0, 7.0, 7.0]);
        let pc = c.fit_scale().unwrap();
        assert!(pc.is_constant(0));
        assert_eq!(column(&c.scaled(&pc).unwrap(), 0), vec![0.0; 3]);

        let p3 = with_column(&[-3.0, 1.0, 5.0]).fit_scale().unwrap();
        assert_eq!((p3.range(0), p3.midrange(0)), (8.0, 1.0));

        assert!(toy(2).scaled(&p).is_err());
    }

    #[test]
    fn linear_class_map() {
        let v = view_base(
            [42, 0, 3, 42]
                .iter()
                .enumerate()
                .map(|(i, &l)| Example::new(i as u64, l, vec![0.0]))
                .collect(),
        )
        .unwrap();
        let (mapped, mapping) = v.class_map_linear();
        assert_eq!(mapping.classes, vec![0, 3, 42]);
        let labels: Vec<i64> = (0..4).map(|i| mapped.label(i)).collect();
        assert_eq!(labels, vec![2, 0, 1, 2]);
        for i in 0..4 {
            assert_eq!(mapping.to_original(mapped.label(i) as usize), Some(v.label(i)));
        }
        let (again, _) = mapped.class_map_linear();
        assert_eq!((0..4).map(|i| again.label(i)).collect::<Vec<_>>(), labels);
    }

    #[test]
    fn binary_class_map() {
        let v = toy(9);
        let b = v.class_map_binary(1);
        let positives = (0..9).filter(|&i| b.label(i) == 1).count();
        assert_eq!(positives, v.class_counts()[&1]);
        assert!((0..9).all(|i| b.label(i) == 1 || b.label(i) == -1));
        let absent = v.class_map_binary(99);
        assert!((0..9).all(|i| absent.label(i) == -1));
        let twice = b.class_map_binary(1);
        assert!((0..9).all(|i| twice.label(i) == b.label(i)));
    }

    #[test]
    fn join_and_remove() {
        let v = view_base(
            [1, 6, 2, 6, 1, 5]
                .iter()
                .enumerate()
                .map(|(i, &l)| Example::new(i as u64, l, vec![0.0]))
                .collect(),
        )
        .unwrap();
        let joined = v.class_join(&[(&[1, 6], 30)]);
        assert_eq!(joined.len(), 6);
        assert_eq!(joined.class_counts(), BTreeMap::from([(2, 1), (5, 1), (30, 4)]));
        let single = v.class_join(&[(&[2], 20)]);
        assert_eq!(single.label(2), 20);

        let removed = v.class_remove(6);
        assert_eq!(ids(&removed), vec![0, 2, 4, 5]);
        assert_eq!(ids(&v.class_remove(99)), ids(&v));
    }

    #[test]
    fn folds_partition_ids() {
        let v = toy(10);
        let folds = make_folds(&v, 2, 3).unwrap();
        assert_eq!(folds.iter().map(|f| f.test.len()).collect::<Vec<_>>(), vec![5, 5]);
        let mut all: Vec<u64> = folds.iter().flat_map(|f| ids(&f.test)).collect();
        all.sort_unstable();
        assert_eq!(all, (0..10).collect::<Vec<_>>());
        for f in &folds {
            let mut both: Vec<u64> = ids(&f.train).into_iter().chain(ids(&f.test)).collect();
            both.sort_unstable();
            assert_eq!(both, (0..10).collect::<Vec<_>>());
        }

        let three = make_folds(&v, 3, 3).unwrap();
        assert_eq!(three.iter().map(|f| f.test.len()).collect::<Vec<_>>(), vec![4, 3, 3]);

        let one = make_folds(&v, 1, 3).unwrap();
        assert_eq!((one[0].train.len(), one[0].test.len()), (10, 10));

        assert!(make_folds(&v, 11, 0).is_err());
        assert!(make_folds(&v, 0, 0).is_err());
    }

    #[test]
    fn chained_views_compose_associatively() {
        let v = toy(12);
        let a = v.range(0, 4).unwrap();
        let b = v.range(4, 8).unwrap();
        let c = v.range(8, 12).unwrap();
        let left = a.concat(&b).unwrap().concat(&c).unwrap();
        let right = a.concat(&b.concat(&c).unwrap()).unwrap();
        assert_eq!(ids(&left), ids(&right));
        assert_eq!(ids(&left.shuffled(5)), ids(&right.shuffled(5)));
    }
}
