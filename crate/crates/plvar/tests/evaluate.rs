mod common;

use common::*;
use plvar::evaluate::{one_step_mse, precision_recall};
use plvar::simulate::example_var2;
use plvar::{learn_structure, LearnConfig};

#[test]
fn fitted_model_predicts_nearly_as_well_as_the_truth() {
    let truth = example_var2();
    for seed in 0..20 {
        let y = example_series(800 + 512, 60 + seed);
        let train = y.window(0, 800).unwrap();
        let test = y.window(800, 800 + 512).unwrap();
        let mut r = learn_structure(&train, &LearnConfig::new(5)).unwrap();
        let (fitted, _) = r.fit(&train, 1e-6).unwrap().clone();
        let fitted_mse = one_step_mse(&fitted, &test).unwrap();
        let true_mse = one_step_mse(&truth, &test).unwrap();
        assert!(fitted_mse <= 1.1 * true_mse, "seed {seed}: {fitted_mse} vs {true_mse}");
    }
}

#[test]
fn metrics_are_invariant_to_relabeling() {
    let (_, a) = random_model(8, 2, 3.0, 1);
    let (_, b) = random_model(8, 2, 3.0, 2);
    let perm = [3usize, 0, 7, 1, 6, 2, 5, 4];
    let relabel = |s: &plvar::GvarStructure| {
        let edges = s.temporal_edges().iter().map(|e| plvar::TemporalEdge { lag: e.lag, source: perm[e.source], target: perm[e.target] });
        let pairs = s.contemporaneous_edges().iter().map(|&(x, y)| (perm[x].min(perm[y]), perm[x].max(perm[y])));
        plvar::GvarStructure::new(s.dim(), s.lag(), edges, pairs).unwrap()
    };
    assert_eq!(precision_recall(&a, &b).unwrap(), precision_recall(&relabel(&a), &relabel(&b)).unwrap());
}
