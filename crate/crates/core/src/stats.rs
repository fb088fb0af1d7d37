//! Agreement and aggregation statistics.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::highlight::HighlightCorpusEntry;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum StatsError {
    #[error("label matrix has no items")]
    DegenerateMatrix,
    #[error("need at least 2 raters, got {0}")]
    TooFewRaters(usize),
    #[error("label matrix expects {expected} labels, got {found}")]
    ShapeMismatch { expected: usize, found: usize },
    #[error("sample mean must be positive, got {0}")]
    NonPositiveMean(f64),
    #[error("need at least 2 observations, got {0}")]
    SingletonSample(usize),
    #[error("samples differ in length ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("sample has zero variance")]
    ZeroVariance,
    #[error("score {0} outside [1, 100]")]
    ScoreOutOfRange(f64),
}

/// `items × raters` binary labels, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryLabelMatrix {
    items: usize,
    raters: usize,
    labels: Vec<bool>,
}

impl BinaryLabelMatrix {
    pub fn new(items: usize, raters: usize, labels: Vec<bool>) -> Result<Self, StatsError> {
        if labels.len() != items * raters {
            return Err(StatsError::ShapeMismatch {
                expected: items * raters,
                found: labels.len(),
            });
        }
        Ok(Self { items, raters, labels })
    }

    /// Token × annotator matrix: `true` where the annotator highlighted the token.
    pub fn from_highlights(entry: &HighlightCorpusEntry) -> Self {
        let items = entry.doc.len();
        let raters = entry.highlights.len();
        let mut labels = vec![false; items * raters];
        for (r, h) in entry.highlights.iter().enumerate() {
            for j in h.indices() {
                labels[j * raters + r] = true;
            }
        }
        Self { items, raters, labels }
    }

    /// Builds a matrix from the number of positive labels per item.
    pub fn from_positive_counts(raters: usize, counts: &[usize]) -> Self {
        let labels = counts
            .iter()
            .flat_map(|&c| (0..raters).map(move |r| r < c))
            .collect();
        Self {
            items: counts.len(),
            raters,
            labels,
        }
    }

    pub fn items(&self) -> usize {
        self.items
    }

    pub fn raters(&self) -> usize {
        self.raters
    }

    fn positives(&self) -> impl Iterator<Item = usize> + '_ {
        self.labels
            .chunks(self.raters.max(1))
            .take(self.items)
            .map(|row| row.iter().filter(|&&l| l).count())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Kappa {
    Defined { kappa: f64 },
    /// Every label falls in one category, so chance agreement is 1.
    Undefined { observed_agreement: f64 },
}

impl Kappa {
    pub fn value(&self) -> Option<f64> {
        match self {
            Self::Defined { kappa } => Some(*kappa),
            Self::Undefined { .. } => None,
        }
    }
}

/// Fleiss' kappa over two categories.
pub fn fleiss_kappa(matrix: &BinaryLabelMatrix) -> Result<Kappa, StatsError> {
    if matrix.items == 0 {
        return Err(StatsError::DegenerateMatrix);
    }
    if matrix.raters < 2 {
        return Err(StatsError::TooFewRaters(matrix.raters));
    }
    let r = matrix.raters as f64;
    let m = matrix.items as f64;
    let mut total_pos = 0usize;
    let mut agreement_sum = 0.0;
    for pos in matrix.positives() {
        total_pos += pos;
        let (p, q) = (pos as f64, (matrix.raters - pos) as f64);
        agreement_sum += (p * p + q * q - r) / (r * (r - 1.0));
    }
    let observed = agreement_sum / m;
    let total = matrix.items * matrix.raters;
    if total_pos == 0 || total_pos == total {
        return Ok(Kappa::Undefined {
            observed_agreement: observed,
        });
    }
    let p_pos = total_pos as f64 / total as f64;
    let expected = p_pos * p_pos + (1.0 - p_pos) * (1.0 - p_pos);
    Ok(Kappa::Defined {
        kappa: (observed - expected) / (1.0 - expected),
    })
}

/// Mean of the defined kappas and how many were defined. `None` if none were.
pub fn macro_average_kappa<'a>(kappas: impl IntoIterator<Item = &'a Kappa>) -> Option<(f64, usize)> {
    let defined: Vec<f64> = kappas.into_iter().filter_map(Kappa::value).collect();
    if defined.is_empty() {
        None
    } else {
        Some((mean(&defined), defined.len()))
    }
}

pub fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Sample standard deviation (n − 1 denominator).
pub fn sample_std(values: &[f64]) -> f64 {
    let mu = mean(values);
    let ss: f64 = values.iter().map(|v| (v - mu) * (v - mu)).sum();
    (ss / (values.len() as f64 - 1.0)).sqrt()
}

/// Small-sample corrected coefficient of variation,
/// `(1 + 1/(4n)) · σ / x̄` with σ the sample standard deviation.
pub fn coefficient_of_variation(sample: &[f64]) -> Result<f64, StatsError> {
    let n = sample.len();
    if n < 2 {
        return Err(StatsError::SingletonSample(n));
    }
    let mu = mean(sample);
    if !(mu > 0.0) {
        return Err(StatsError::NonPositiveMean(mu));
    }
    Ok((1.0 + 1.0 / (4.0 * n as f64)) * sample_std(sample) / mu)
}

/// Pearson product-moment correlation.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64, StatsError> {
    if x.len() != y.len() {
        return Err(StatsError::LengthMismatch(x.len(), y.len()));
    }
    if x.len() < 2 {
        return Err(StatsError::SingletonSample(x.len()));
    }
    let (mx, my) = (mean(x), mean(y));
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(StatsError::ZeroVariance);
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// One human score, already resolved to the system that produced the
/// judged summary.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScoreObservation {
    pub system: String,
    pub summary_id: String,
    /// Grouping label such as `content/recall` or `fluency`.
    pub metric: String,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AggregateRow {
    pub system: String,
    pub metric: String,
    pub mean: f64,
    /// Per-summary cv averaged over summaries with at least two judgments.
    pub cv: Option<f64>,
    pub n_judgments: usize,
    pub n_summaries: usize,
}

/// Groups observations by `(system, metric)` into mean and cv rows, sorted
/// by key. Groups without observations do not appear.
pub fn aggregate_scores<'a>(
    observations: impl IntoIterator<Item = &'a ScoreObservation>,
) -> Result<Vec<AggregateRow>, StatsError> {
    type Group<'a> = BTreeMap<&'a str, Vec<f64>>;
    let mut groups: BTreeMap<(&str, &str), Group> = BTreeMap::new();
    for o in observations {
        if !(1.0..=100.0).contains(&o.score) {
            return Err(StatsError::ScoreOutOfRange(o.score));
        }
        groups
            .entry((o.system.as_str(), o.metric.as_str()))
            .or_default()
            .entry(o.summary_id.as_str())
            .or_default()
            .push(o.score);
    }
    Ok(groups
        .into_iter()
        .map(|((system, metric), per_summary)| {
            // Summaries and scores are visited in key order, then sorted, so
            // the float sums do not depend on input order.
            let mut all: Vec<f64> = per_summary.values().flatten().copied().collect();
            all.sort_by(f64::total_cmp);
            let cvs: Vec<f64> = per_summary
                .values()
                .filter_map(|scores| {
                    let mut s = scores.clone();
                    s.sort_by(f64::total_cmp);
                    coefficient_of_variation(&s).ok()
                })
                .collect();
            AggregateRow {
                system: system.to_owned(),
                metric: metric.to_owned(),
                mean: mean(&all),
                cv: (!cvs.is_empty()).then(|| mean(&cvs)),
                n_judgments: all.len(),
                n_summaries: per_summary.len(),
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn kappa_fixtures() {
        let m = BinaryLabelMatrix::from_positive_counts(3, &[3, 0, 1, 2]);
        let k = fleiss_kappa(&m).unwrap().value().unwrap();
        assert!((k - 1.0 / 3.0).abs() < 1e-9);

        let m = BinaryLabelMatrix::from_positive_counts(4, &[4, 0, 4, 0]);
        assert_eq!(fleiss_kappa(&m).unwrap(), Kappa::Defined { kappa: 1.0 });

        let m = BinaryLabelMatrix::from_positive_counts(3, &[3, 3]);
        assert_eq!(
            fleiss_kappa(&m).unwrap(),
            Kappa::Undefined {
                observed_agreement: 1.0
            }
        );

        assert_eq!(
            fleiss_kappa(&BinaryLabelMatrix::from_positive_counts(3, &[])),
            Err(StatsError::DegenerateMatrix)
        );
        assert_eq!(
            fleiss_kappa(&BinaryLabelMatrix::from_positive_counts(1, &[1, 0])),
            Err(StatsError::TooFewRaters(1))
        );
    }

    #[test]
    fn matrix_shape_checked() {
        assert!(matches!(
            BinaryLabelMatrix::new(2, 2, vec![true; 3]),
            Err(StatsError::ShapeMismatch { .. })
        ));
    }

    #[test]
    fn cv_fixtures() {
        assert_eq!(coefficient_of_variation(&[50.0, 50.0, 50.0]).unwrap(), 0.0);
        let cv = coefficient_of_variation(&[40.0, 50.0, 60.0]).unwrap();
        assert!((cv - 0.216667).abs() < 1e-6);
        let scaled = coefficient_of_variation(&[80.0, 100.0, 120.0]).unwrap();
        assert!((cv - scaled).abs() < 1e-12);
        assert_eq!(coefficient_of_variation(&[5.0]), Err(StatsError::SingletonSample(1)));
        assert!(matches!(
            coefficient_of_variation(&[-1.0, 1.0]),
            Err(StatsError::NonPositiveMean(_))
        ));
    }

    #[test]
    fn pearson_fixtures() {
        assert!((pearson(&[1., 2., 3.], &[2., 4., 6.]).unwrap() - 1.0).abs() < 1e-12);
        assert!((pearson(&[1., 2., 3.], &[3., 2., 1.]).unwrap() + 1.0).abs() < 1e-12);
        assert!((pearson(&[1., 2., 3.], &[1., 3., 2.]).unwrap() - 0.5).abs() < 1e-9);
        assert_eq!(pearson(&[1., 2.], &[1.]), Err(StatsError::LengthMismatch(2, 1)));
        assert_eq!(pearson(&[1., 1.], &[1., 2.]), Err(StatsError::ZeroVariance));
    }

    fn obs(system: &str, summary: &str, metric: &str, score: f64) -> ScoreObservation {
        ScoreObservation {
            system: system.into(),
            summary_id: summary.into(),
            metric: metric.into(),
            score,
        }
    }

    #[test]
    fn aggregation() {
        let rows = aggregate_scores(&[
            obs("s1", "x", "fluency", 40.0),
            obs("s1", "x", "fluency", 50.0),
            obs("s1", "x", "fluency", 60.0),
            obs("s2", "y", "fluency", 70.0),
        ])
        .unwrap();
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[0].mean, 50.0);
        assert!((rows[0].cv.unwrap() - 0.216667).abs() < 1e-6);
        assert_eq!(rows[1].cv, None);
        assert_eq!(rows[1].n_judgments, 1);
        assert!(!rows.iter().any(|r| r.metric == "clarity"));

        assert_eq!(
            aggregate_scores(&[obs("s", "x", "fluency", 0.0)]),
            Err(StatsError::ScoreOutOfRange(0.0))
        );
        assert!(aggregate_scores(&[]).unwrap().is_empty());
    }

    proptest! {
        #[test]
        fn kappa_label_swap_and_permutation(counts in proptest::collection::vec(0usize..=4, 1..12), rot in 0usize..12) {
            let m = BinaryLabelMatrix::from_positive_counts(4, &counts);
            let flipped: Vec<usize> = counts.iter().map(|c| 4 - c).collect();
            let mut rotated = counts.clone();
            let len = rotated.len();
            rotated.rotate_left(rot % len);
            let k = fleiss_kappa(&m).unwrap();
            let kf = fleiss_kappa(&BinaryLabelMatrix::from_positive_counts(4, &flipped)).unwrap();
            let kr = fleiss_kappa(&BinaryLabelMatrix::from_positive_counts(4, &rotated)).unwrap();
            match (k.value(), kf.value(), kr.value()) {
                (Some(a), Some(b), Some(c)) => {
                    prop_assert!((a - b).abs() < 1e-12 && (a - c).abs() < 1e-12);
                    prop_assert!((-1.0..=1.0).contains(&a));
                }
                (None, None, None) => {}
                other => prop_assert!(false, "definedness differs: {other:?}"),
            }
        }

        #[test]
        fn cv_scale_invariant(v in proptest::collection::vec(1.0f64..100.0, 2..10), c in 0.01f64..50.0) {
            let cv = coefficient_of_variation(&v).unwrap();
            let scaled: Vec<f64> = v.iter().map(|x| x * c).collect();
            prop_assert!(cv >= 0.0);
            prop_assert!((cv - coefficient_of_variation(&scaled).unwrap()).abs() < 1e-9);
        }

        #[test]
        fn pearson_affine(
            xy in proptest::collection::vec((-50.0f64..50.0, -50.0f64..50.0), 3..12),
            a in prop_oneof![-5.0f64..-0.1, 0.1f64..5.0], b in -10.0f64..10.0,
            c in prop_oneof![-5.0f64..-0.1, 0.1f64..5.0], d in -10.0f64..10.0,
        ) {
            let (x, y): (Vec<f64>, Vec<f64>) = xy.into_iter().unzip();
            let Ok(r) = pearson(&x, &y) else { return Ok(()) };
            let x2: Vec<f64> = x.iter().map(|v| a * v + b).collect();
            let y2: Vec<f64> = y.iter().map(|v| c * v + d).collect();
            let r2 = pearson(&x2, &y2).unwrap();
            prop_assert!((r2 - (a * c).signum() * r).abs() < 1e-9);
        }

        #[test]
        fn aggregation_order_invariant(scores in proptest::collection::vec((0usize..3, 0usize..4, 1.0f64..=100.0), 1..30), seed in any::<u64>()) {
            let observations: Vec<ScoreObservation> = scores
                .iter()
                .map(|&(s, x, v)| obs(&format!("s{s}"), &format!("x{x}"), "fluency", v))
                .collect();
            let mut shuffled = observations.clone();
            use rand::{seq::SliceRandom, SeedableRng};
            shuffled.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
            prop_assert_eq!(aggregate_scores(&observations).unwrap(), aggregate_scores(&shuffled).unwrap());
        }
    }
}
