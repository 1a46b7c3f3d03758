//! Pixelwise segmentation scores (AUC, ACC, MCC), the cross-entropy loss,
//! and a sparsity measure for decomposition layers.
//!
//! Every function accepts an optional evaluation region: a binary grid
//! whose ones mark the pixels taken into account (for example a field of
//! view mask). Without one, the whole image is evaluated.

use crate::error::{Error, Result};
use crate::grid::Grid;

/// Lower/upper clamp applied to probabilities before taking logs.
pub const CE_EPSILON: f64 = 1e-7;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ConfusionCounts {
    pub tp: u64,
    pub fp: u64,
    pub fn_: u64,
    pub tn: u64,
}

impl ConfusionCounts {
    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.fn_ + self.tn
    }
}

/// Predicted probabilities with an optional evaluation region.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreMap {
    values: Grid,
    region: Option<Grid>,
}

impl ScoreMap {
    pub fn new(values: Grid, region: Option<Grid>) -> Result<Self> {
        if let Some(r) = &region {
            values.ensure_same_dims(r)?;
            check_binary(r, "region")?;
        }
        let map = ScoreMap { values, region };
        if map
            .pixels()
            .any(|idx| !(0.0..=1.0).contains(&map.values.as_slice()[idx]))
        {
            return Err(Error::arg("scores must lie in [0, 1] inside the region"));
        }
        Ok(map)
    }

    pub fn values(&self) -> &Grid {
        &self.values
    }

    pub fn region(&self) -> Option<&Grid> {
        self.region.as_ref()
    }

    fn pixels(&self) -> impl Iterator<Item = usize> + '_ {
        region_pixels(self.values.len(), self.region.as_ref())
    }
}

fn region_pixels(len: usize, region: Option<&Grid>) -> impl Iterator<Item = usize> + '_ {
    (0..len).filter(move |&i| region.is_none_or(|r| r.as_slice()[i] != 0.0))
}

fn check_binary(g: &Grid, what: &str) -> Result<()> {
    if g.as_slice().iter().any(|&v| v != 0.0 && v != 1.0) {
        return Err(Error::arg(format!("{what} must be binary (0/1)")));
    }
    Ok(())
}

pub fn confusion(pred: &Grid, truth: &Grid, region: Option<&Grid>) -> Result<ConfusionCounts> {
    pred.ensure_same_dims(truth)?;
    check_binary(pred, "prediction")?;
    check_binary(truth, "ground truth")?;
    if let Some(r) = region {
        pred.ensure_same_dims(r)?;
        check_binary(r, "region")?;
    }
    let (p, t) = (pred.as_slice(), truth.as_slice());
    let mut c = ConfusionCounts::default();
    for i in region_pixels(p.len(), region) {
        match (p[i] == 1.0, t[i] == 1.0) {
            (true, true) => c.tp += 1,
            (true, false) => c.fp += 1,
            (false, true) => c.fn_ += 1,
            (false, false) => c.tn += 1,
        }
    }
    Ok(c)
}

pub fn acc(c: &ConfusionCounts) -> Result<f64> {
    if c.total() == 0 {
        return Err(Error::arg("accuracy of an empty region"));
    }
    Ok((c.tp + c.tn) as f64 / c.total() as f64)
}

/// Matthews correlation coefficient; 0 when any marginal is empty.
pub fn mcc(c: &ConfusionCounts) -> Result<f64> {
    if c.total() == 0 {
        return Err(Error::arg("MCC of an empty region"));
    }
    let (tp, fp, fn_, tn) = (c.tp as f64, c.fp as f64, c.fn_ as f64, c.tn as f64);
    let denom = ((tp + fp) * (tp + fn_) * (tn + fp) * (tn + fn_)).sqrt();
    if denom == 0.0 {
        return Ok(0.0);
    }
    Ok((tp * tn - fp * fn_) / denom)
}

/// Binary prediction `scores >= threshold`.
pub fn binarize(scores: &Grid, threshold: f64) -> Grid {
    scores.map(|s| if s >= threshold { 1.0 } else { 0.0 })
}

/// `(score, is_positive)` pairs with the positive and negative counts.
type Labeled = (Vec<(f64, bool)>, usize, usize);

/// Labeled scores inside the evaluation region, checked for both classes.
fn labeled(scores: &ScoreMap, truth: &Grid) -> Result<Labeled> {
    scores.values.ensure_same_dims(truth)?;
    check_binary(truth, "ground truth")?;
    let s = scores.values.as_slice();
    let t = truth.as_slice();
    let pairs: Vec<(f64, bool)> = scores.pixels().map(|i| (s[i], t[i] == 1.0)).collect();
    let pos = pairs.iter().filter(|p| p.1).count();
    let neg = pairs.len() - pos;
    if pos == 0 || neg == 0 {
        return Err(Error::arg("AUC needs both positive and negative pixels"));
    }
    Ok((pairs, pos, neg))
}

/// Probability that a random positive outscores a random negative, ties
/// counted one half (Mann-Whitney statistic).
pub fn auc(scores: &ScoreMap, truth: &Grid) -> Result<f64> {
    let (mut pairs, pos, neg) = labeled(scores, truth)?;
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut rank_sum = 0.0;
    let mut start = 0;
    while start < pairs.len() {
        let mut end = start;
        while end + 1 < pairs.len() && pairs[end + 1].0 == pairs[start].0 {
            end += 1;
        }
        // 1-based average rank of the tie block
        let avg = (start + end) as f64 / 2.0 + 1.0;
        rank_sum += avg * pairs[start..=end].iter().filter(|p| p.1).count() as f64;
        start = end + 1;
    }
    let (pos, neg) = (pos as f64, neg as f64);
    Ok((rank_sum - pos * (pos + 1.0) / 2.0) / (pos * neg))
}

/// ROC curve as `(false positive rate, true positive rate)` points, one per
/// distinct score threshold, starting at `(0, 0)`.
pub fn roc_points(scores: &ScoreMap, truth: &Grid) -> Result<Vec<(f64, f64)>> {
    let (mut pairs, pos, neg) = labeled(scores, truth)?;
    pairs.sort_by(|a, b| b.0.total_cmp(&a.0));
    let mut points = vec![(0.0, 0.0)];
    let (mut tp, mut fp) = (0usize, 0usize);
    for (idx, &(s, is_pos)) in pairs.iter().enumerate() {
        if is_pos {
            tp += 1;
        } else {
            fp += 1;
        }
        if pairs.get(idx + 1).is_none_or(|next| next.0 != s) {
            points.push((fp as f64 / neg as f64, tp as f64 / pos as f64));
        }
    }
    Ok(points)
}

/// Mean binary cross-entropy over the region, probabilities clamped to
/// `[CE_EPSILON, 1 - CE_EPSILON]`.
pub fn cross_entropy(scores: &ScoreMap, truth: &Grid) -> Result<f64> {
    scores.values.ensure_same_dims(truth)?;
    check_binary(truth, "ground truth")?;
    let s = scores.values.as_slice();
    let t = truth.as_slice();
    let mut total = 0.0;
    let mut count = 0usize;
    for i in scores.pixels() {
        let p = s[i].clamp(CE_EPSILON, 1.0 - CE_EPSILON);
        total -= if t[i] == 1.0 { p.ln() } else { (1.0 - p).ln() };
        count += 1;
    }
    if count == 0 {
        return Err(Error::arg("cross-entropy over an empty region"));
    }
    Ok(total / count as f64)
}

/// Fraction of pixels with `|v| > threshold`.
pub fn sparsity_fraction(v: &Grid, threshold: f64) -> Result<f64> {
    if !(threshold >= 0.0) {
        return Err(Error::arg("sparsity threshold must be >= 0"));
    }
    let n = v.as_slice().iter().filter(|x| x.abs() > threshold).count();
    Ok(n as f64 / v.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn row(values: &[f64]) -> Grid {
        Grid::from_vec(1, values.len(), values.to_vec()).unwrap()
    }

    #[test]
    fn confusion_examples() {
        let truth = Grid::from_rows(&[[1.0, 1.0], [0.0, 0.0]]);
        let same = confusion(&truth, &truth, None).unwrap();
        assert_eq!((same.fp, same.fn_), (0, 0));
        let flipped = truth.map(|t| 1.0 - t);
        let c = confusion(&flipped, &truth, None).unwrap();
        assert_eq!((c.tp, c.tn), (0, 0));
        let pred = Grid::from_rows(&[[1.0, 0.0], [1.0, 0.0]]);
        let c = confusion(&pred, &truth, None).unwrap();
        assert_eq!(c, ConfusionCounts { tp: 1, fp: 1, fn_: 1, tn: 1 });
        let region = Grid::from_rows(&[[1.0, 0.0], [0.0, 1.0]]);
        let c = confusion(&pred, &truth, Some(&region)).unwrap();
        assert_eq!(c, ConfusionCounts { tp: 1, fp: 0, fn_: 0, tn: 1 });
    }

    #[test]
    fn confusion_rejects_non_binary() {
        let truth = Grid::filled(2, 2, 1.0);
        assert!(confusion(&Grid::filled(2, 2, 0.5), &truth, None).is_err());
        assert!(confusion(&truth, &truth, Some(&Grid::filled(2, 2, 2.0))).is_err());
    }

    #[test]
    fn acc_mcc_examples() {
        let perfect = ConfusionCounts { tp: 3, fp: 0, fn_: 0, tn: 5 };
        assert_eq!(acc(&perfect).unwrap(), 1.0);
        assert_eq!(mcc(&perfect).unwrap(), 1.0);
        let all_positive = ConfusionCounts { tp: 3, fp: 5, fn_: 0, tn: 0 };
        assert_eq!(mcc(&all_positive).unwrap(), 0.0);
        let even = ConfusionCounts { tp: 1, fp: 1, fn_: 1, tn: 1 };
        assert_eq!(acc(&even).unwrap(), 0.5);
        assert_eq!(mcc(&even).unwrap(), 0.0);
        assert!(acc(&ConfusionCounts::default()).is_err());
        assert!(mcc(&ConfusionCounts::default()).is_err());
    }

    #[test]
    fn auc_examples() {
        let truth = row(&[0.0, 1.0, 1.0, 0.0, 1.0]);
        let exact = ScoreMap::new(truth.clone(), None).unwrap();
        assert_eq!(auc(&exact, &truth).unwrap(), 1.0);
        let reversed = ScoreMap::new(truth.map(|t| 1.0 - t), None).unwrap();
        assert_eq!(auc(&reversed, &truth).unwrap(), 0.0);
        let s = ScoreMap::new(row(&[0.1, 0.4, 0.35, 0.8]), None).unwrap();
        assert_eq!(auc(&s, &row(&[0.0, 0.0, 1.0, 1.0])).unwrap(), 0.75);
        let ties = ScoreMap::new(row(&[0.5, 0.5]), None).unwrap();
        assert_eq!(auc(&ties, &row(&[0.0, 1.0])).unwrap(), 0.5);
    }

    #[test]
    fn auc_needs_both_classes() {
        let s = ScoreMap::new(row(&[0.2, 0.3]), None).unwrap();
        assert!(auc(&s, &row(&[1.0, 1.0])).is_err());
        let region = row(&[1.0, 0.0]);
        let s = ScoreMap::new(row(&[0.2, 0.3]), Some(region)).unwrap();
        assert!(auc(&s, &row(&[1.0, 0.0])).is_err());
    }

    #[test]
    fn roc_endpoints() {
        let s = ScoreMap::new(row(&[0.1, 0.4, 0.35, 0.8]), None).unwrap();
        let pts = roc_points(&s, &row(&[0.0, 0.0, 1.0, 1.0])).unwrap();
        assert_eq!(pts.first(), Some(&(0.0, 0.0)));
        assert_eq!(pts.last(), Some(&(1.0, 1.0)));
        // trapezoid area of the curve equals the rank statistic
        let area: f64 = pts.windows(2).map(|w| (w[1].0 - w[0].0) * (w[1].1 + w[0].1) / 2.0).sum();
        assert!((area - 0.75).abs() < 1e-15);
    }

    #[test]
    fn cross_entropy_examples() {
        let truth = Grid::from_rows(&[[1.0, 0.0], [0.0, 1.0]]);
        let half = ScoreMap::new(Grid::filled(2, 2, 0.5), None).unwrap();
        assert!((cross_entropy(&half, &truth).unwrap() - std::f64::consts::LN_2).abs() < 1e-12);
        let perfect = ScoreMap::new(truth.clone(), None).unwrap();
        assert!(cross_entropy(&perfect, &truth).unwrap() <= 2e-6);
        let single = ScoreMap::new(row(&[0.25]), None).unwrap();
        let ce = cross_entropy(&single, &row(&[1.0])).unwrap();
        assert!((ce - 4f64.ln()).abs() < 1e-12);
        assert!((ce - 1.386294).abs() < 1e-6);
    }

    #[test]
    fn score_map_range_checked() {
        assert!(ScoreMap::new(row(&[0.2, 1.5]), None).is_err());
        // out of range outside the region is ignored
        assert!(ScoreMap::new(row(&[0.2, 1.5]), Some(row(&[1.0, 0.0]))).is_ok());
    }

    #[test]
    fn sparsity_examples() {
        assert_eq!(sparsity_fraction(&Grid::zeros(4, 4), 0.0).unwrap(), 0.0);
        assert_eq!(sparsity_fraction(&Grid::filled(3, 3, 1.0), 0.5).unwrap(), 1.0);
        let mut g = Grid::filled(4, 4, 0.1);
        g[(0, 1)] = -0.9;
        g[(2, 2)] = 0.7;
        g[(3, 0)] = 0.51;
        assert_eq!(sparsity_fraction(&g, 0.5).unwrap(), 0.1875);
        assert!(sparsity_fraction(&g, -1.0).is_err());
    }

    fn labeled_case() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
        (2usize..40).prop_flat_map(|n| {
            (
                prop::collection::vec(0.0f64..1.0, n),
                prop::collection::vec(prop::bool::ANY, n),
            )
                .prop_filter_map("needs both classes", |(s, t)| {
                    let pos = t.iter().filter(|b| **b).count();
                    (pos > 0 && pos < t.len())
                        .then(|| (s, t.into_iter().map(|b| if b { 1.0 } else { 0.0 }).collect()))
                })
        })
    }

    proptest! {
        #[test]
        fn auc_invariant_under_monotone_transform((s, t) in labeled_case()) {
            let truth = row(&t);
            let a = auc(&ScoreMap::new(row(&s), None).unwrap(), &truth).unwrap();
            let squashed: Vec<f64> = s.iter().map(|x| x * x * x).collect();
            let b = auc(&ScoreMap::new(row(&squashed), None).unwrap(), &truth).unwrap();
            prop_assert!((0.0..=1.0).contains(&a));
            prop_assert!((a - b).abs() < 1e-12);
        }

        #[test]
        fn scores_stay_in_range((s, t) in labeled_case(), thr in 0.0f64..1.0) {
            let truth = row(&t);
            let c = confusion(&binarize(&row(&s), thr), &truth, None).unwrap();
            prop_assert_eq!(c.total(), s.len() as u64);
            let a = acc(&c).unwrap();
            let m = mcc(&c).unwrap();
            prop_assert!((0.0..=1.0).contains(&a));
            prop_assert!((-1.0 - 1e-12..=1.0 + 1e-12).contains(&m));
        }

        #[test]
        fn confusion_permutation_equivariant((s, t) in labeled_case(), seed in any::<u64>()) {
            let pred = binarize(&row(&s), 0.5);
            let truth = row(&t);
            let mut order: Vec<usize> = (0..s.len()).collect();
            let mut rng = crate::synth::SplitMix64::new(seed);
            for k in (1..order.len()).rev() {
                order.swap(k, rng.below(k + 1));
            }
            let shuffle = |g: &Grid| row(&order.iter().map(|&i| g.as_slice()[i]).collect::<Vec<_>>());
            prop_assert_eq!(
                confusion(&pred, &truth, None).unwrap(),
                confusion(&shuffle(&pred), &shuffle(&truth), None).unwrap()
            );
        }
    }
}
