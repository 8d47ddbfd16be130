//! Evaluation criteria for multi-label predictions and the cost-difference
//! label weighting derived from them.
//!
//! Four criteria are supported: Hamming loss, F1 score, Accuracy score and
//! Rank loss. Each is a function of a ground-truth label vector and a
//! predicted label vector. The weighting scheme measures, per label, how much
//! the criterion value moves when that single label is forced to 0 versus 1
//! while all other labels are held at a previous prediction.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Binary relevance vector of fixed length K. Every element is 0 or 1.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LabelVector(Vec<u8>);

impl LabelVector {
    /// Builds a label vector, rejecting empty input and entries other than 0/1.
    pub fn new(bits: Vec<u8>) -> Result<Self> {
        if bits.is_empty() {
            return Err(Error::Size("label vector must have length >= 1".into()));
        }
        if let Some(bad) = bits.iter().find(|&&b| b > 1) {
            return Err(Error::Schema(format!(
                "label vector entries must be 0 or 1, found {bad}"
            )));
        }
        Ok(LabelVector(bits))
    }

    /// Builds from anything truthy without validation overhead.
    pub fn from_bools(bits: &[bool]) -> Self {
        LabelVector(bits.iter().map(|&b| b as u8).collect())
    }

    pub fn zeros(len: usize) -> Self {
        LabelVector(vec![0; len.max(1)])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        false // length >= 1 by construction
    }

    pub fn get(&self, index: usize) -> u8 {
        self.0[index]
    }

    pub fn bits(&self) -> &[u8] {
        &self.0
    }

    /// Number of relevant labels, the vector's L1 norm.
    pub fn count_ones(&self) -> usize {
        self.0.iter().filter(|&&b| b == 1).count()
    }

    /// Copy with bit `index` forced to `value`.
    pub fn with_bit(&self, index: usize, value: u8) -> Self {
        let mut bits = self.0.clone();
        bits[index] = value;
        LabelVector(bits)
    }
}

fn check_lengths(context: &'static str, y: &LabelVector, yhat: &LabelVector) -> Result<()> {
    if y.len() != yhat.len() {
        return Err(Error::dimension(context, y.len(), yhat.len()));
    }
    Ok(())
}

/// Which of the four criteria a [`CostFunction`] evaluates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CostKind {
    Hamming,
    F1,
    Accuracy,
    RankLoss,
}

impl CostKind {
    pub const ALL: [CostKind; 4] = [
        CostKind::Hamming,
        CostKind::RankLoss,
        CostKind::F1,
        CostKind::Accuracy,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            CostKind::Hamming => "hamming",
            CostKind::F1 => "f1",
            CostKind::Accuracy => "accuracy",
            CostKind::RankLoss => "rank_loss",
        }
    }
}

impl std::fmt::Display for CostKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Whether smaller or larger values of a criterion indicate a better prediction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    LowerBetter,
    HigherBetter,
}

/// One evaluation criterion together with its direction.
///
/// The direction is fixed by the kind: losses (Hamming, Rank) are
/// lower-better, scores (F1, Accuracy) are higher-better.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CostFunction {
    kind: CostKind,
    direction: Direction,
}

impl CostFunction {
    pub fn new(kind: CostKind) -> Self {
        let direction = match kind {
            CostKind::Hamming | CostKind::RankLoss => Direction::LowerBetter,
            CostKind::F1 | CostKind::Accuracy => Direction::HigherBetter,
        };
        CostFunction { kind, direction }
    }

    pub fn kind(&self) -> CostKind {
        self.kind
    }

    pub fn direction(&self) -> Direction {
        self.direction
    }

    /// Evaluates the criterion on a (truth, prediction) pair.
    pub fn evaluate(&self, y: &LabelVector, yhat: &LabelVector) -> Result<f64> {
        match self.kind {
            CostKind::Hamming => hamming_loss(y, yhat),
            CostKind::F1 => f1_score(y, yhat),
            CostKind::Accuracy => accuracy_score(y, yhat),
            CostKind::RankLoss => rank_loss(y, yhat),
        }
    }

    /// True if `a` is a strictly better criterion value than `b`.
    pub fn is_better(&self, a: f64, b: f64) -> bool {
        match self.direction {
            Direction::LowerBetter => a < b,
            Direction::HigherBetter => a > b,
        }
    }
}

/// Fraction of label positions where the two vectors disagree.
pub fn hamming_loss(y: &LabelVector, yhat: &LabelVector) -> Result<f64> {
    check_lengths("hamming_loss", y, yhat)?;
    let mismatches = y
        .bits()
        .iter()
        .zip(yhat.bits())
        .filter(|(a, b)| a != b)
        .count();
    Ok(mismatches as f64 / y.len() as f64)
}

/// F1 score, `2|y ∩ ŷ| / (|y| + |ŷ|)`. Both vectors all-zero scores 1.
pub fn f1_score(y: &LabelVector, yhat: &LabelVector) -> Result<f64> {
    check_lengths("f1_score", y, yhat)?;
    let intersection = y
        .bits()
        .iter()
        .zip(yhat.bits())
        .filter(|(a, b)| **a == 1 && **b == 1)
        .count();
    let total = y.count_ones() + yhat.count_ones();
    if total == 0 {
        // 0/0: agreeing on the empty set is a perfect prediction.
        return Ok(1.0);
    }
    Ok(2.0 * intersection as f64 / total as f64)
}

/// Accuracy (Jaccard) score, `|y ∩ ŷ| / |y ∪ ŷ|`. Empty union scores 1.
pub fn accuracy_score(y: &LabelVector, yhat: &LabelVector) -> Result<f64> {
    check_lengths("accuracy_score", y, yhat)?;
    let mut intersection = 0usize;
    let mut union = 0usize;
    for (a, b) in y.bits().iter().zip(yhat.bits()) {
        if *a == 1 && *b == 1 {
            intersection += 1;
        }
        if *a == 1 || *b == 1 {
            union += 1;
        }
    }
    if union == 0 {
        return Ok(1.0);
    }
    Ok(intersection as f64 / union as f64)
}

/// Rank loss: over every (relevant, irrelevant) label pair, 1 for a reversed
/// prediction pair and 1/2 for a tied one. Ranges in `[0, r(K-r)]` where r is
/// the number of relevant labels.
pub fn rank_loss(y: &LabelVector, yhat: &LabelVector) -> Result<f64> {
    check_lengths("rank_loss", y, yhat)?;
    let k = y.len();
    let mut loss = 0.0;
    for i in 0..k {
        if y.get(i) != 1 {
            continue;
        }
        for j in 0..k {
            if y.get(j) != 0 {
                continue;
            }
            if yhat.get(i) < yhat.get(j) {
                loss += 1.0;
            } else if yhat.get(i) == yhat.get(j) {
                loss += 0.5;
            }
        }
    }
    Ok(loss)
}

/// Per-label importance weights for one example at one rethink iteration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImportanceWeights {
    pub values: Vec<f64>,
    /// Rethink iteration the weights belong to (1-based).
    pub iteration: usize,
}

impl ImportanceWeights {
    pub fn uniform(len: usize, iteration: usize) -> Self {
        ImportanceWeights {
            values: vec![1.0; len],
            iteration,
        }
    }
}

/// How raw cost-difference weights are rescaled before entering the loss.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightNorm {
    /// Rescale so the mean weight is 1 (uniform raw weights become exactly
    /// all-ones). Makes weight magnitudes comparable across criteria and
    /// iterations.
    #[default]
    MeanOne,
    /// Keep the raw absolute cost differences.
    Raw,
}

// Distinct raw weights are rationals at least ~1/(4K^2) apart for every
// supported criterion, while float evaluation perturbs mathematically equal
// values by a few ulp. A spread below this threshold can only be noise on a
// uniform vector, which must normalize to exactly 1.0 everywhere.
const UNIFORM_COLLAPSE_REL: f64 = 1e-9;

impl WeightNorm {
    /// Applies the normalization to raw weights.
    pub fn apply(&self, raw: &[f64]) -> Vec<f64> {
        match self {
            WeightNorm::Raw => raw.to_vec(),
            WeightNorm::MeanOne => {
                let max = raw.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                let min = raw.iter().cloned().fold(f64::INFINITY, f64::min);
                if max <= 0.0 || (max - min) <= UNIFORM_COLLAPSE_REL * max {
                    // All-zero fallback and the uniform case collapse to ones.
                    return vec![1.0; raw.len()];
                }
                let sum: f64 = raw.iter().sum();
                let scale = raw.len() as f64 / sum;
                raw.iter().map(|&w| w * scale).collect()
            }
        }
    }
}

fn raw_flip_weights(y: &LabelVector, yhat_prev: &LabelVector, cost: CostFunction) -> Result<Vec<f64>> {
    check_lengths("label_importance_weights", y, yhat_prev)?;
    let mut raw = Vec::with_capacity(y.len());
    for i in 0..y.len() {
        let c0 = cost.evaluate(y, &yhat_prev.with_bit(i, 0))?;
        let c1 = cost.evaluate(y, &yhat_prev.with_bit(i, 1))?;
        raw.push((c0 - c1).abs());
    }
    Ok(raw)
}

/// Importance of each label given the previous iteration's prediction.
///
/// With no previous prediction (the first iteration) every label weighs 1.
/// Otherwise the weight of label i is the absolute difference in criterion
/// value between forcing bit i of the previous prediction to 0 and to 1,
/// rescaled according to `norm`.
pub fn label_importance_weights_with(
    y: &LabelVector,
    yhat_prev: Option<&LabelVector>,
    cost: CostFunction,
    norm: WeightNorm,
) -> Result<ImportanceWeights> {
    let Some(prev) = yhat_prev else {
        return Ok(ImportanceWeights::uniform(y.len(), 1));
    };
    let raw = raw_flip_weights(y, prev, cost)?;
    Ok(ImportanceWeights {
        values: norm.apply(&raw),
        iteration: 2,
    })
}

/// [`label_importance_weights_with`] under the default mean-one normalization.
pub fn label_importance_weights(
    y: &LabelVector,
    yhat_prev: Option<&LabelVector>,
    cost: CostFunction,
) -> Result<ImportanceWeights> {
    label_importance_weights_with(y, yhat_prev, cost, WeightNorm::MeanOne)
}

/// Brute-force reference for the raw flip weights, written for clarity over
/// speed: it rebuilds both candidate vectors from scratch and runs two full
/// criterion evaluations per label. Used by tests to pin down
/// [`label_importance_weights`]; not called by the training path.
pub fn flip_oracle_weights(
    y: &LabelVector,
    yhat_prev: &LabelVector,
    cost: CostFunction,
) -> Result<ImportanceWeights> {
    check_lengths("flip_oracle_weights", y, yhat_prev)?;
    let k = y.len();
    let mut values = Vec::new();
    for i in 0..k {
        let mut forced_zero = Vec::new();
        let mut forced_one = Vec::new();
        for j in 0..k {
            if j == i {
                forced_zero.push(0u8);
                forced_one.push(1u8);
            } else {
                forced_zero.push(yhat_prev.get(j));
                forced_one.push(yhat_prev.get(j));
            }
        }
        let c0 = cost.evaluate(y, &LabelVector::new(forced_zero)?)?;
        let c1 = cost.evaluate(y, &LabelVector::new(forced_one)?)?;
        values.push((c0 - c1).abs());
    }
    Ok(ImportanceWeights {
        values,
        iteration: 2,
    })
}

/// Iterator over all 2^k label vectors of length k, for exhaustive tests.
pub fn enumerate_label_vectors(k: usize) -> impl Iterator<Item = LabelVector> {
    assert!((1..=20).contains(&k), "enumeration is only sane for small k");
    (0u32..(1 << k)).map(move |pattern| {
        let bits = (0..k).map(|i| ((pattern >> i) & 1) as u8).collect();
        LabelVector(bits)
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lv(bits: &[u8]) -> LabelVector {
        LabelVector::new(bits.to_vec()).unwrap()
    }

    #[test]
    fn label_vector_rejects_bad_input() {
        assert!(LabelVector::new(vec![]).is_err());
        assert!(LabelVector::new(vec![0, 2]).is_err());
        assert!(LabelVector::new(vec![0, 1, 1]).is_ok());
    }

    #[test]
    fn hamming_examples() {
        assert_eq!(hamming_loss(&lv(&[1, 0, 1]), &lv(&[1, 0, 1])).unwrap(), 0.0);
        assert_eq!(
            hamming_loss(&lv(&[1, 0, 1]), &lv(&[1, 1, 1])).unwrap(),
            1.0 / 3.0
        );
        assert_eq!(hamming_loss(&lv(&[0, 0]), &lv(&[1, 1])).unwrap(), 1.0);
    }

    #[test]
    fn f1_examples() {
        assert_eq!(f1_score(&lv(&[1, 0]), &lv(&[1, 0])).unwrap(), 1.0);
        assert_eq!(f1_score(&lv(&[1, 1, 0]), &lv(&[1, 0, 0])).unwrap(), 2.0 / 3.0);
        assert_eq!(f1_score(&lv(&[0, 0, 0]), &lv(&[0, 0, 0])).unwrap(), 1.0);
    }

    #[test]
    fn accuracy_examples() {
        assert_eq!(accuracy_score(&lv(&[1, 1, 0]), &lv(&[1, 1, 0])).unwrap(), 1.0);
        assert_eq!(
            accuracy_score(&lv(&[1, 1, 0]), &lv(&[1, 0, 1])).unwrap(),
            1.0 / 3.0
        );
        assert_eq!(accuracy_score(&lv(&[0, 0]), &lv(&[0, 0])).unwrap(), 1.0);
    }

    #[test]
    fn rank_loss_examples() {
        assert_eq!(rank_loss(&lv(&[1, 0]), &lv(&[1, 0])).unwrap(), 0.0);
        assert_eq!(rank_loss(&lv(&[1, 0]), &lv(&[0, 1])).unwrap(), 1.0);
        assert_eq!(rank_loss(&lv(&[1, 0, 1]), &lv(&[0, 1, 1])).unwrap(), 1.5);
        assert_eq!(rank_loss(&lv(&[1, 0]), &lv(&[1, 1])).unwrap(), 0.5);
    }

    #[test]
    fn length_mismatch_is_an_error() {
        let y = lv(&[1, 0]);
        let yhat = lv(&[1, 0, 1]);
        assert!(hamming_loss(&y, &yhat).is_err());
        assert!(f1_score(&y, &yhat).is_err());
        assert!(accuracy_score(&y, &yhat).is_err());
        assert!(rank_loss(&y, &yhat).is_err());
        assert!(label_importance_weights(&y, Some(&yhat), CostFunction::new(CostKind::F1)).is_err());
        assert!(flip_oracle_weights(&y, &yhat, CostFunction::new(CostKind::F1)).is_err());
    }

    #[test]
    fn directions_are_fixed_by_kind() {
        assert_eq!(
            CostFunction::new(CostKind::Hamming).direction(),
            Direction::LowerBetter
        );
        assert_eq!(
            CostFunction::new(CostKind::RankLoss).direction(),
            Direction::LowerBetter
        );
        assert_eq!(
            CostFunction::new(CostKind::F1).direction(),
            Direction::HigherBetter
        );
        assert_eq!(
            CostFunction::new(CostKind::Accuracy).direction(),
            Direction::HigherBetter
        );
        assert!(CostFunction::new(CostKind::Hamming).is_better(0.1, 0.2));
        assert!(CostFunction::new(CostKind::F1).is_better(0.9, 0.2));
    }

    #[test]
    fn first_iteration_weights_are_uniform() {
        for k in 1..=6 {
            let y = LabelVector::zeros(k);
            let w =
                label_importance_weights(&y, None, CostFunction::new(CostKind::RankLoss)).unwrap();
            assert_eq!(w.values, vec![1.0; k]);
            assert_eq!(w.iteration, 1);
        }
    }

    #[test]
    fn hamming_raw_weights_are_one_over_k() {
        // Flipping a single bit moves the Hamming loss by exactly 1/K.
        for prev in enumerate_label_vectors(4) {
            let y = lv(&[1, 0, 1, 0]);
            let raw =
                flip_oracle_weights(&y, &prev, CostFunction::new(CostKind::Hamming)).unwrap();
            for v in raw.values {
                assert!((v - 0.25).abs() < 1e-12, "raw weight {v}");
            }
        }
    }

    #[test]
    fn hamming_weights_normalize_to_exact_ones() {
        for k in 1..=6 {
            for y in enumerate_label_vectors(k) {
                for prev in enumerate_label_vectors(k) {
                    let w = label_importance_weights(
                        &y,
                        Some(&prev),
                        CostFunction::new(CostKind::Hamming),
                    )
                    .unwrap();
                    assert_eq!(w.values, vec![1.0; k], "y={y:?} prev={prev:?}");
                }
            }
        }
    }

    #[test]
    fn f1_weight_example() {
        let y = lv(&[1, 1, 0]);
        let prev = lv(&[1, 0, 0]);
        let cost = CostFunction::new(CostKind::F1);
        let raw = flip_oracle_weights(&y, &prev, cost).unwrap();
        let expected_raw = [2.0 / 3.0, 1.0 / 3.0, 1.0 / 6.0];
        for (got, want) in raw.values.iter().zip(expected_raw) {
            assert!((got - want).abs() < 1e-15, "raw {got} vs {want}");
        }
        let normalized = label_importance_weights(&y, Some(&prev), cost).unwrap();
        for (got, want) in normalized.values.iter().zip(expected_raw) {
            let want = want * 18.0 / 7.0;
            assert!((got - want).abs() < 1e-12, "normalized {got} vs {want}");
        }
    }

    #[test]
    fn rank_loss_oracle_example() {
        let y = lv(&[1, 0]);
        let prev = lv(&[0, 0]);
        let raw = flip_oracle_weights(&y, &prev, CostFunction::new(CostKind::RankLoss)).unwrap();
        assert_eq!(raw.values, vec![0.5, 0.5]);
    }

    #[test]
    fn single_label_weight_is_forced() {
        let raw = flip_oracle_weights(&lv(&[1]), &lv(&[0]), CostFunction::new(CostKind::Hamming))
            .unwrap();
        assert_eq!(raw.values, vec![1.0]);
    }

    #[test]
    fn weights_match_oracle_exhaustively_small_k() {
        for kind in CostKind::ALL {
            let cost = CostFunction::new(kind);
            for k in 1..=6 {
                for y in enumerate_label_vectors(k) {
                    for prev in enumerate_label_vectors(k) {
                        let fast =
                            label_importance_weights_with(&y, Some(&prev), cost, WeightNorm::MeanOne)
                                .unwrap();
                        let oracle = flip_oracle_weights(&y, &prev, cost).unwrap();
                        let oracle_norm = WeightNorm::MeanOne.apply(&oracle.values);
                        assert_eq!(
                            fast.values, oracle_norm,
                            "kind={kind:?} y={y:?} prev={prev:?}"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn raw_norm_keeps_raw_values() {
        let y = lv(&[1, 1, 0]);
        let prev = lv(&[1, 0, 0]);
        let cost = CostFunction::new(CostKind::F1);
        let w = label_importance_weights_with(&y, Some(&prev), cost, WeightNorm::Raw).unwrap();
        let oracle = flip_oracle_weights(&y, &prev, cost).unwrap();
        assert_eq!(w.values, oracle.values);
    }

    #[test]
    fn zero_raw_weights_fall_back_to_ones() {
        // Rank loss with an all-relevant truth: no (relevant, irrelevant)
        // pairs exist, so every flip difference is 0.
        let y = lv(&[1, 1, 1]);
        let prev = lv(&[0, 1, 0]);
        let cost = CostFunction::new(CostKind::RankLoss);
        let oracle = flip_oracle_weights(&y, &prev, cost).unwrap();
        assert!(oracle.values.iter().all(|&v| v == 0.0));
        let w = label_importance_weights(&y, Some(&prev), cost).unwrap();
        assert_eq!(w.values, vec![1.0; 3]);
    }

    #[test]
    fn criteria_stay_in_range_and_are_optimal_on_identity() {
        for k in 1..=6usize {
            for y in enumerate_label_vectors(k) {
                let r = y.count_ones();
                for yhat in enumerate_label_vectors(k) {
                    let h = hamming_loss(&y, &yhat).unwrap();
                    let f = f1_score(&y, &yhat).unwrap();
                    let a = accuracy_score(&y, &yhat).unwrap();
                    let rl = rank_loss(&y, &yhat).unwrap();
                    assert!((0.0..=1.0).contains(&h));
                    assert!((0.0..=1.0).contains(&f));
                    assert!((0.0..=1.0).contains(&a));
                    assert!(rl >= 0.0 && rl <= (r * (k - r)) as f64);
                }
                assert_eq!(hamming_loss(&y, &y).unwrap(), 0.0);
                assert_eq!(rank_loss(&y, &y).unwrap(), 0.0);
                assert_eq!(f1_score(&y, &y).unwrap(), 1.0);
                assert_eq!(accuracy_score(&y, &y).unwrap(), 1.0);
            }
        }
    }

    #[test]
    fn hamming_is_argument_symmetric_and_flip_symmetric() {
        let complement = |v: &LabelVector| {
            LabelVector::new(v.bits().iter().map(|&b| 1 - b).collect()).unwrap()
        };
        for k in 1..=5usize {
            for y in enumerate_label_vectors(k) {
                for yhat in enumerate_label_vectors(k) {
                    assert_eq!(
                        hamming_loss(&y, &yhat).unwrap(),
                        hamming_loss(&yhat, &y).unwrap()
                    );
                    assert_eq!(
                        hamming_loss(&y, &yhat).unwrap(),
                        hamming_loss(&complement(&y), &complement(&yhat)).unwrap()
                    );
                    assert_eq!(
                        rank_loss(&y, &yhat).unwrap(),
                        rank_loss(&complement(&y), &complement(&yhat)).unwrap()
                    );
                }
            }
        }
    }

    #[test]
    fn weights_ignore_direction_convention() {
        // Replacing a score C with the complementary loss 1 - C flips the sign
        // of every difference but not its magnitude, so raw weights agree.
        let cost = CostFunction::new(CostKind::F1);
        for k in 1..=4usize {
            for y in enumerate_label_vectors(k) {
                for prev in enumerate_label_vectors(k) {
                    let raw = flip_oracle_weights(&y, &prev, cost).unwrap();
                    for i in 0..k {
                        let c0 = 1.0 - cost.evaluate(&y, &prev.with_bit(i, 0)).unwrap();
                        let c1 = 1.0 - cost.evaluate(&y, &prev.with_bit(i, 1)).unwrap();
                        assert_eq!((c0 - c1).abs(), raw.values[i]);
                    }
                }
            }
        }
    }

    #[test]
    fn normalized_mean_is_one() {
        let cost = CostFunction::new(CostKind::RankLoss);
        for k in 2..=6usize {
            for y in enumerate_label_vectors(k) {
                for prev in enumerate_label_vectors(k) {
                    let w = label_importance_weights(&y, Some(&prev), cost).unwrap();
                    let mean: f64 = w.values.iter().sum::<f64>() / k as f64;
                    assert!((mean - 1.0).abs() < 1e-12);
                    assert!(w.values.iter().all(|&v| v >= 0.0));
                }
            }
        }
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        fn random_pair() -> impl Strategy<Value = (LabelVector, LabelVector)> {
            (1usize..=12).prop_flat_map(|k| {
                (
                    proptest::collection::vec(0u8..=1, k),
                    proptest::collection::vec(0u8..=1, k),
                )
                    .prop_map(|(a, b)| {
                        (LabelVector::new(a).unwrap(), LabelVector::new(b).unwrap())
                    })
            })
        }

        proptest! {
            #[test]
            fn criteria_ranges_hold_at_larger_k((y, yhat) in random_pair()) {
                let k = y.len();
                let r = y.count_ones();
                prop_assert!((0.0..=1.0).contains(&hamming_loss(&y, &yhat).unwrap()));
                prop_assert!((0.0..=1.0).contains(&f1_score(&y, &yhat).unwrap()));
                prop_assert!((0.0..=1.0).contains(&accuracy_score(&y, &yhat).unwrap()));
                let rl = rank_loss(&y, &yhat).unwrap();
                prop_assert!(rl >= 0.0 && rl <= (r * (k - r)) as f64);
            }

            #[test]
            fn weights_match_oracle_at_larger_k((y, prev) in random_pair()) {
                for kind in CostKind::ALL {
                    let cost = CostFunction::new(kind);
                    let fast = label_importance_weights(&y, Some(&prev), cost).unwrap();
                    let oracle = flip_oracle_weights(&y, &prev, cost).unwrap();
                    prop_assert_eq!(
                        fast.values.clone(),
                        WeightNorm::MeanOne.apply(&oracle.values)
                    );
                    if kind == CostKind::Hamming {
                        prop_assert_eq!(fast.values, vec![1.0; y.len()]);
                    }
                }
            }
        }
    }
}
