//! Inter-annotator agreement and judgment statistics: Fleiss kappa on
//! binary token labels, the unbiased coefficient of variation, and Pearson
//! correlation.
//!
//! ```text
//! cargo run --example agreement_stats
//! ```

use highres::stats::{
    aggregate_scores, coefficient_of_variation, fleiss_kappa, pearson, BinaryLabelMatrix, ScoreObservation,
};

fn main() {
    // 4 tokens, 3 annotators; entries count annotators who highlighted the token
    let m = BinaryLabelMatrix::from_positive_counts(3, &[3, 0, 1, 2]);
    println!("kappa (4 tokens x 3 annotators): {:?}", fleiss_kappa(&m).unwrap());
    let all_off = BinaryLabelMatrix::from_positive_counts(3, &[0, 0, 0, 0]);
    println!("kappa (nobody highlights): {:?}", fleiss_kappa(&all_off).unwrap());

    println!("cv([40, 50, 60]) = {:.6}", coefficient_of_variation(&[40.0, 50.0, 60.0]).unwrap());
    println!("pearson([1,2,3], [1,3,2]) = {:.3}", pearson(&[1.0, 2.0, 3.0], &[1.0, 3.0, 2.0]).unwrap());

    let obs = [
        ("sysA", "d1::sysA", 70.0),
        ("sysA", "d1::sysA", 80.0),
        ("sysA", "d2::sysA", 60.0),
        ("sysA", "d2::sysA", 64.0),
        ("sysB", "d1::sysB", 40.0),
        ("sysB", "d1::sysB", 55.0),
    ]
    .map(|(system, summary, score)| ScoreObservation {
        system: system.into(),
        summary_id: summary.into(),
        metric: "content/precision".into(),
        score,
    });
    for row in aggregate_scores(&obs).unwrap() {
        println!(
            "{} {}: mean {:.2}, cv {:?}, {} judgments over {} summaries",
            row.system, row.metric, row.mean, row.cv, row.n_judgments, row.n_summaries
        );
    }
}
