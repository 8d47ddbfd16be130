use ndarray::array;

use super::*;
use crate::data::synth;
use crate::kernels::gradient_check;

fn small_config(cell: CellKind) -> ModelConfig {
    ModelConfig {
        cell,
        hidden_dim: 5,
        rethink_iterations: 3,
        recurrent_dropout: 0.0,
        l2_strength: 1e-3,
        cost: CostKind::F1,
        reweighted: true,
        seed: 42,
        weight_norm: WeightNorm::MeanOne,
    }
}

fn toy_batch(n: usize, d: usize, k: usize, seed: u64) -> (Tensor, Tensor) {
    use rand::{Rng, SeedableRng};
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x = Tensor::from_shape_fn((n, d), |_| rng.gen::<f64>());
    let y = Tensor::from_shape_fn((n, k), |_| rng.gen_range(0..=1) as f64);
    (x, y)
}

#[test]
fn forward_with_b1_yields_one_output() {
    let mut config = small_config(CellKind::Srn);
    config.rethink_iterations = 1;
    let model = RethinkNetModel::new(config, 4, 3).unwrap();
    let (x, _) = toy_batch(2, 4, 3, 0);
    let probs = model.predict_proba(&x).unwrap();
    assert_eq!(probs.len(), 1);
    assert_eq!(probs[0].dim(), (2, 3));
}

#[test]
fn probabilities_are_in_open_unit_interval() {
    let model = RethinkNetModel::new(small_config(CellKind::Lstm), 4, 3).unwrap();
    let (x, _) = toy_batch(5, 4, 3, 1);
    for p in model.predict_proba(&x).unwrap() {
        assert!(p.iter().all(|&v| v > 0.0 && v < 1.0));
    }
}

#[test]
fn evaluation_forward_is_deterministic() {
    let model = RethinkNetModel::new(small_config(CellKind::Gru), 4, 3).unwrap();
    let (x, _) = toy_batch(5, 4, 3, 2);
    let a = model.predict_proba(&x).unwrap();
    let b = model.predict_proba(&x).unwrap();
    assert_eq!(a, b);
}

#[test]
fn training_forward_draws_dropout_masks() {
    let mut config = small_config(CellKind::Srn);
    config.recurrent_dropout = 0.5;
    let mut model = RethinkNetModel::new(config, 4, 3).unwrap();
    let (x, _) = toy_batch(5, 4, 3, 3);
    let eval = model.predict_proba(&x).unwrap();
    let train_a = model.forward(&x, true).unwrap();
    let train_b = model.forward(&x, true).unwrap();
    assert_ne!(eval, train_a);
    assert_ne!(train_a, train_b, "fresh masks per training forward");
    assert_eq!(model.forward(&x, false).unwrap(), eval);
}

#[test]
fn threshold_puts_half_on_the_positive_side() {
    let probs = array![[0.49, 0.5, 0.51]];
    let labels = threshold_probs(&probs);
    assert_eq!(labels[0].bits(), &[0, 1, 1]);
}

#[test]
fn untrained_zero_model_predicts_all_ones() {
    let mut model = RethinkNetModel::new(small_config(CellKind::Srn), 4, 3).unwrap();
    model.zero_parameters();
    let (x, _) = toy_batch(2, 4, 3, 4);
    let probs = model.predict_proba(&x).unwrap();
    assert!(probs.last().unwrap().iter().all(|&p| p == 0.5));
    for lv in model.predict(&x).unwrap() {
        assert_eq!(lv.bits(), &[1, 1, 1]);
    }
}

#[test]
fn prediction_uses_only_the_final_iteration() {
    let model = RethinkNetModel::new(small_config(CellKind::Srn), 4, 3).unwrap();
    let (x, _) = toy_batch(3, 4, 3, 5);
    let probs = model.predict_proba(&x).unwrap();
    assert_eq!(model.predict(&x).unwrap(), threshold_probs(&probs[2]));
}

#[test]
fn parameter_count_is_independent_of_b() {
    for cell in CellKind::ALL {
        let mut config = small_config(cell);
        config.rethink_iterations = 1;
        let one = RethinkNetModel::new(config.clone(), 7, 4).unwrap();
        config.rethink_iterations = 5;
        let five = RethinkNetModel::new(config, 7, 4).unwrap();
        assert_eq!(one.parameter_count(), five.parameter_count(), "{cell}");
    }
}

#[test]
fn unweighted_loss_is_sum_of_bce_terms_plus_l2() {
    let mut config = small_config(CellKind::Srn);
    config.reweighted = false;
    config.l2_strength = 0.01;
    let mut model = RethinkNetModel::new(config, 4, 3).unwrap();
    let (x, y) = toy_batch(4, 4, 3, 6);
    let (loss, weights) = model.training_loss(&x, &y).unwrap();
    assert_eq!(weights.len(), 3);
    assert!(weights.iter().all(|w| w.iter().all(|&v| v == 1.0)));

    let probs = model.predict_proba(&x).unwrap();
    let ones = Tensor::ones(y.dim());
    let mut expected: f64 = probs
        .iter()
        .map(|p| weighted_bce(p, &y, &ones).unwrap())
        .sum();
    expected += model.l2_penalty();
    assert_eq!(loss, expected);

    let mut no_l2 = model.clone();
    no_l2.config.l2_strength = 0.0;
    let (plain, _) = no_l2.training_loss(&x, &y).unwrap();
    let pure: f64 = probs
        .iter()
        .map(|p| weighted_bce(p, &y, &ones).unwrap())
        .sum();
    assert_eq!(plain, pure);
}

#[test]
fn hamming_reweighting_is_bitwise_identical_to_uniform() {
    let mut config = small_config(CellKind::Srn);
    config.cost = CostKind::Hamming;
    config.reweighted = true;
    let mut reweighted = RethinkNetModel::new(config.clone(), 4, 3).unwrap();
    config.reweighted = false;
    let mut uniform = RethinkNetModel::new(config, 4, 3).unwrap();
    let (x, y) = toy_batch(6, 4, 3, 7);
    let (a, wa) = reweighted.training_loss(&x, &y).unwrap();
    let (b, wb) = uniform.training_loss(&x, &y).unwrap();
    assert_eq!(a.to_bits(), b.to_bits());
    assert_eq!(wa, wb);
}

#[test]
fn reweighted_f1_loss_differs_from_uniform() {
    let mut config = small_config(CellKind::Srn);
    config.cost = CostKind::F1;
    let mut reweighted = RethinkNetModel::new(config.clone(), 4, 3).unwrap();
    config.reweighted = false;
    let mut uniform = RethinkNetModel::new(config, 4, 3).unwrap();
    let (x, y) = toy_batch(6, 4, 3, 8);
    let (a, _) = reweighted.training_loss(&x, &y).unwrap();
    let (b, _) = uniform.training_loss(&x, &y).unwrap();
    assert_ne!(a, b);
}

#[test]
fn full_loss_gradient_passes_finite_difference_check_for_every_cell() {
    for cell in CellKind::ALL {
        let config = small_config(cell);
        let model = RethinkNetModel::new(config, 4, 3).unwrap();
        let (x, y) = toy_batch(2, 4, 3, 9);
        let (_, grads) = model.compute_gradients(&x, &y, None).unwrap();
        let params = model.flat_params();
        let err = gradient_check(
            |p| {
                let mut probe = model.clone();
                probe.set_flat_params(p).unwrap();
                probe.loss_value(&x, &y, None).unwrap()
            },
            &params,
            &grads,
            1e-5,
        );
        assert!(err < 1e-5, "{cell}: max relative error {err}");
    }
}

#[test]
fn gradients_hold_across_unroll_depths_and_weight_modes() {
    for cell in CellKind::ALL {
        for b in [1usize, 2, 3] {
            for reweighted in [true, false] {
                let mut config = small_config(cell);
                config.rethink_iterations = b;
                config.reweighted = reweighted;
                config.cost = CostKind::RankLoss;
                let model = RethinkNetModel::new(config, 3, 2).unwrap();
                let (x, y) = toy_batch(2, 3, 2, 100 + b as u64);
                let (_, grads) = model.compute_gradients(&x, &y, None).unwrap();
                let params = model.flat_params();
                let err = gradient_check(
                    |p| {
                        let mut probe = model.clone();
                        probe.set_flat_params(p).unwrap();
                        probe.loss_value(&x, &y, None).unwrap()
                    },
                    &params,
                    &grads,
                    1e-5,
                );
                assert!(
                    err < 1e-5,
                    "{cell} B={b} reweighted={reweighted}: relative error {err}"
                );
            }
        }
    }
}

#[test]
fn gradient_check_holds_under_fixed_dropout_masks() {
    use crate::kernels::recurrent_dropout_mask;
    use rand::SeedableRng;
    let mut config = small_config(CellKind::Gru);
    config.recurrent_dropout = 0.25;
    let model = RethinkNetModel::new(config, 4, 3).unwrap();
    let (x, y) = toy_batch(3, 4, 3, 10);
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let masks: Vec<Tensor> = (0..CellKind::Gru.gates())
        .map(|_| recurrent_dropout_mask((5, 5), 0.25, &mut rng).unwrap())
        .collect();
    let (_, grads) = model.compute_gradients(&x, &y, Some(&masks)).unwrap();
    let params = model.flat_params();
    let err = gradient_check(
        |p| {
            let mut probe = model.clone();
            probe.set_flat_params(p).unwrap();
            probe.loss_value(&x, &y, Some(&masks)).unwrap()
        },
        &params,
        &grads,
        1e-5,
    );
    assert!(err < 1e-5, "max relative error {err}");
}

#[test]
fn fit_learns_the_sign_toy_problem() {
    let ds = synth::sign_labels(0, 64);
    let mut config = small_config(CellKind::Srn);
    config.hidden_dim = 8;
    config.l2_strength = 0.0;
    config.cost = CostKind::Hamming;
    let mut model = RethinkNetModel::new(config, 2, 2).unwrap();
    let tc = TrainConfig {
        max_epochs: 200,
        batch_size: 4,
        ..TrainConfig::default()
    };
    model.fit(&ds, &tc).unwrap();
    let eval = model.evaluate(&ds, CostKind::Hamming).unwrap();
    assert!(
        eval.final_value < 0.05,
        "training hamming loss {}",
        eval.final_value
    );
}

#[test]
fn fit_is_deterministic_for_a_fixed_seed() {
    let ds = synth::linear_threshold(3, 40, 4, 3);
    let tc = TrainConfig {
        max_epochs: 15,
        batch_size: 16,
        ..TrainConfig::default()
    };
    let mut config = small_config(CellKind::Lstm);
    config.recurrent_dropout = 0.25;
    let run = || {
        let mut model = RethinkNetModel::new(config.clone(), 4, 3).unwrap();
        model.fit(&ds, &tc).unwrap();
        (model.flat_params(), model.history().to_vec())
    };
    let (params_a, hist_a) = run();
    let (params_b, hist_b) = run();
    assert_eq!(params_a, params_b);
    assert_eq!(hist_a, hist_b);
}

#[test]
fn stalled_training_stops_after_patience_epochs() {
    let ds = synth::linear_threshold(4, 24, 3, 2);
    let mut model = RethinkNetModel::new(small_config(CellKind::Srn), 3, 2).unwrap();
    model.optimizer.hyper.learning_rate = 0.0; // loss can never improve
    let tc = TrainConfig {
        max_epochs: 100,
        batch_size: 8,
        patience: 4,
        min_delta: 1e-4,
    };
    model.fit(&ds, &tc).unwrap();
    // One baseline epoch plus `patience` stale ones.
    assert_eq!(model.history().len(), 5);
}

#[test]
fn divergence_is_reported_with_location() {
    let ds = synth::linear_threshold(5, 24, 3, 2);
    let mut model = RethinkNetModel::new(small_config(CellKind::Irnn), 3, 2).unwrap();
    model.optimizer.hyper.learning_rate = f64::NAN;
    let tc = TrainConfig {
        max_epochs: 5,
        batch_size: 8,
        ..TrainConfig::default()
    };
    match model.fit(&ds, &tc) {
        Err(Error::Divergence { .. }) => {}
        other => panic!("expected divergence, got {other:?}"),
    }
}

#[test]
fn evaluate_perfect_and_constant_predictors() {
    // Constant-label dataset plus a huge dense bias gives a perfect model.
    let features = Tensor::from_shape_fn((4, 2), |(i, j)| (i + j) as f64 / 4.0);
    let labels = vec![crate::costs::LabelVector::new(vec![1, 0]).unwrap(); 4];
    let ds = Dataset::with_default_names("const", features, labels).unwrap();
    let mut model = RethinkNetModel::new(small_config(CellKind::Srn), 2, 2).unwrap();
    model.zero_parameters();
    model.set_dense_bias(&[30.0, -30.0]).unwrap();
    let eval = model.evaluate(&ds, CostKind::Hamming).unwrap();
    assert_eq!(eval.final_value, 0.0);
    assert_eq!(eval.per_iteration.len(), 3);
    assert_eq!(model.evaluate(&ds, CostKind::F1).unwrap().final_value, 1.0);

    // All-ones predictor against labels [[1,0],[1,1]]: mean hamming 0.25.
    let features = Tensor::zeros((2, 2)) + 0.5;
    let labels = vec![
        crate::costs::LabelVector::new(vec![1, 0]).unwrap(),
        crate::costs::LabelVector::new(vec![1, 1]).unwrap(),
    ];
    let ds = Dataset::with_default_names("pair", features, labels).unwrap();
    let mut all_ones = RethinkNetModel::new(small_config(CellKind::Srn), 2, 2).unwrap();
    all_ones.zero_parameters();
    all_ones.set_dense_bias(&[30.0, 30.0]).unwrap();
    let eval = all_ones.evaluate(&ds, CostKind::Hamming).unwrap();
    assert_eq!(eval.final_value, 0.25);
}

#[test]
fn evaluate_agrees_with_direct_cost_computation() {
    let ds = synth::linear_threshold(6, 20, 4, 3);
    let model = RethinkNetModel::new(small_config(CellKind::Gru), 4, 3).unwrap();
    let eval = model.evaluate(&ds, CostKind::F1).unwrap();
    let predictions = model.predict(&ds.features).unwrap();
    let cost = CostFunction::new(CostKind::F1);
    let direct: f64 = ds
        .labels
        .iter()
        .zip(&predictions)
        .map(|(t, p)| cost.evaluate(t, p).unwrap())
        .sum::<f64>()
        / ds.n_examples() as f64;
    assert_eq!(eval.final_value, direct);
}

#[test]
fn evaluate_rejects_label_count_mismatch() {
    let ds = synth::linear_threshold(7, 12, 4, 2);
    let model = RethinkNetModel::new(small_config(CellKind::Srn), 4, 3).unwrap();
    assert!(model.evaluate(&ds, CostKind::Hamming).is_err());
}

fn quick_tc() -> TrainConfig {
    TrainConfig {
        max_epochs: 8,
        batch_size: 16,
        patience: 3,
        min_delta: 1e-4,
    }
}

#[test]
fn l2_grid_search_runs_grid_times_folds_models() {
    let ds = synth::linear_threshold(8, 30, 3, 2);
    let mut config = small_config(CellKind::Srn);
    config.hidden_dim = 3;
    let grid = [1e-6, 1e-4, 1e-2];
    let selection = select_l2(&ds, &grid, 3, &config, &quick_tc()).unwrap();
    assert_eq!(selection.table.len(), 3);
    assert!(selection.table.iter().all(|row| row.fold_values.len() == 3));
    assert!(grid.contains(&selection.best_l2));
}

#[test]
fn l2_selection_is_direction_aware() {
    let table_best = |cost: CostKind, means: &[(f64, f64)]| {
        let cf = CostFunction::new(cost);
        let mut best = means[0];
        for &(l2, mean) in &means[1..] {
            if cf.is_better(mean, best.1) || (mean == best.1 && l2 > best.0) {
                best = (l2, mean);
            }
        }
        best.0
    };
    // Higher-better criterion picks the max, lower-better the min, and an
    // exact tie resolves toward the larger regularization.
    assert_eq!(
        table_best(CostKind::F1, &[(1e-6, 0.6), (1e-3, 0.7)]),
        1e-3
    );
    assert_eq!(
        table_best(CostKind::RankLoss, &[(1e-6, 0.6), (1e-3, 0.7)]),
        1e-6
    );
    assert_eq!(
        table_best(CostKind::F1, &[(1e-6, 0.6), (1e-3, 0.6)]),
        1e-3
    );
}

#[test]
fn exact_ties_resolve_toward_larger_regularization() {
    // L2 strengths this small are absorbed by float addition into both the
    // loss and the gradients, so the two grid points train bitwise
    // identically and their validation means tie exactly.
    let ds = synth::linear_threshold(22, 30, 3, 2);
    let mut config = small_config(CellKind::Srn);
    config.hidden_dim = 3;
    let selection = select_l2(&ds, &[1e-300, 1e-290], 3, &config, &quick_tc()).unwrap();
    assert_eq!(
        selection.table[0].fold_values, selection.table[1].fold_values,
        "absorbed strengths should tie exactly"
    );
    assert_eq!(selection.best_l2, 1e-290);
}

#[test]
fn singleton_grid_skips_cross_validation() {
    let ds = synth::linear_threshold(9, 12, 3, 2);
    let config = small_config(CellKind::Srn);
    let selection = select_l2(&ds, &[3e-4], 3, &config, &quick_tc()).unwrap();
    assert_eq!(selection.best_l2, 3e-4);
    assert!(selection.table[0].fold_values.is_empty());
}

#[test]
fn memory_matrix_normalizes_rows_by_diagonal() {
    let mut config = small_config(CellKind::Srn);
    config.hidden_dim = 2;
    let mut model = RethinkNetModel::new(config, 3, 2).unwrap();
    model.set_recurrent_matrix(array![[2.0, 4.0], [1.0, 5.0]]).unwrap();
    let mm = model.extract_memory_matrix().unwrap();
    assert_eq!(mm.normalized, vec![vec![1.0, 2.0], vec![0.2, 1.0]]);
    assert!(mm.unnormalized_rows.is_empty());

    model.set_recurrent_matrix(array![[0.0, 4.0], [1.0, 5.0]]).unwrap();
    let mm = model.extract_memory_matrix().unwrap();
    assert_eq!(mm.unnormalized_rows, vec![0]);
    assert_eq!(mm.normalized[0], vec![0.0, 4.0]);

    model.set_recurrent_matrix(Tensor::eye(2)).unwrap();
    assert_eq!(
        model.extract_memory_matrix().unwrap().to_tensor(),
        Tensor::eye(2)
    );
}

#[test]
fn memory_matrix_requires_srn_with_matching_width() {
    let model = RethinkNetModel::new(small_config(CellKind::Lstm), 3, 2).unwrap();
    assert!(model.extract_memory_matrix().is_err());
    let model = RethinkNetModel::new(small_config(CellKind::Srn), 3, 2).unwrap();
    assert!(model.extract_memory_matrix().is_err(), "hidden 5 != 2 labels");
}

#[test]
fn save_load_round_trip_reproduces_evaluation_bitwise() {
    let ds = synth::linear_threshold(10, 32, 4, 3);
    let mut config = small_config(CellKind::Lstm);
    config.recurrent_dropout = 0.25;
    let mut model = RethinkNetModel::new(config, 4, 3).unwrap();
    model
        .fit(
            &ds,
            &TrainConfig {
                max_epochs: 10,
                batch_size: 16,
                ..TrainConfig::default()
            },
        )
        .unwrap();

    let json = model.to_json().unwrap();
    let restored = RethinkNetModel::from_json(&json).unwrap();
    assert_eq!(restored.config, model.config);
    assert_eq!(restored.history(), model.history());

    let probs_a = model.predict_proba(&ds.features).unwrap();
    let probs_b = restored.predict_proba(&ds.features).unwrap();
    for (a, b) in probs_a.iter().zip(&probs_b) {
        for (va, vb) in a.iter().zip(b.iter()) {
            assert_eq!(va.to_bits(), vb.to_bits());
        }
    }
}

#[test]
fn model_file_rejects_wrong_gate_counts() {
    let model = RethinkNetModel::new(small_config(CellKind::Gru), 3, 2).unwrap();
    let mut file = model.to_model_file();
    file.config.cell = CellKind::Lstm; // four gates expected, three present
    assert!(RethinkNetModel::from_model_file(file).is_err());
}

#[test]
fn config_validation_catches_bad_values() {
    let mut config = small_config(CellKind::Srn);
    config.rethink_iterations = 0;
    assert!(config.validate().is_err());
    let mut config = small_config(CellKind::Srn);
    config.recurrent_dropout = 1.0;
    assert!(config.validate().is_err());
    let mut config = small_config(CellKind::Srn);
    config.hidden_dim = 0;
    assert!(config.validate().is_err());
}
