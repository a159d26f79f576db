use wassmatrix::classify::{
    full_pipeline, stability_experiment, Classifier, ColumnSource, StabilityConfig,
};
use wassmatrix::measures::SyntheticSpec;
use wassmatrix::ot::{w2_matrix, MatrixPlan};

#[test]
fn few_columns_classify_about_as_well_as_all() {
    let data = SyntheticSpec::Classes { n: 150 }.generate(4).unwrap();
    let labels = data.labels().unwrap().to_vec();
    let cfg = StabilityConfig {
        seed: 21,
        classifiers: vec![Classifier::Knn1, Classifier::Lda],
        ..Default::default()
    };
    let reports = stability_experiment(
        ColumnSource::Measures(&data, 4),
        &labels,
        &[0.1, 1.0],
        10,
        &cfg,
    )
    .unwrap();
    assert_eq!(reports.len(), 4);
    for k in 0..2 {
        let (low, full) = (&reports[k], &reports[k + 2]);
        assert_eq!(low.classifier, full.classifier);
        assert_eq!((low.columns, full.columns), (15, 150));
        assert!(
            (low.mean - full.mean).abs() <= 0.05,
            "{}: {} vs {}",
            low.classifier.name(),
            low.mean,
            full.mean
        );
    }

    // the full fraction is the plain pipeline on the exact matrix
    let d = w2_matrix(&data, MatrixPlan::Full, 4).unwrap();
    let direct = full_pipeline(&d, &labels, 10, &cfg).unwrap();
    assert_eq!(direct[0].accuracies, reports[2].accuracies);
    assert_eq!(direct[1].accuracies, reports[3].accuracies);
}
