use chunkcode::decoder::*;
use chunkcode::metrics::{evaluate, EvalBatch};
use chunkcode::textprep::Strategy;
use nncore::{grad_check, Graph, NnError, Tensor};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const D: usize = 8;
const L: usize = 5;

fn fbm() -> InputSlots {
    InputSlots::Fixed(
        [Strategy::Front, Strategy::Back, Strategy::Mixed]
            .into_iter()
            .map(|s| SlotKey::new(s, "0"))
            .collect(),
    )
}

fn random_inputs(rng: &mut ChaCha8Rng, n: usize, slots: usize) -> Vec<DecoderInput> {
    (0..n)
        .map(|i| {
            DecoderInput::all_present(
                format!("d{i}"),
                (0..slots)
                    .map(|_| (0..D).map(|_| rng.random_range(-1.0..1.0)).collect())
                    .collect(),
            )
        })
        .collect()
}

#[test]
fn every_decoder_passes_gradient_check() {
    for arch in Architecture::ALL {
        for size in Size::ALL {
            let mut rng = ChaCha8Rng::seed_from_u64(11);
            let cfg = DecoderConfig::new(arch, size, fbm(), D, L).with_hidden(12, 6).with_dropout(0.0);
            let cfg = DecoderConfig { heads: 2, ..cfg };
            let model = Decoder::build(cfg, &mut rng).unwrap();
            let inputs = random_inputs(&mut rng, 2, 3);
            let targets: Vec<f64> = (0..2 * L).map(|_| f64::from(rng.random_bool(0.5) as u8)).collect();
            let targets = Tensor::new(vec![2, L], targets).unwrap();
            let mut store = model.store().clone();
            let report = grad_check(
                &mut store,
                |g| {
                    let z = model
                        .forward(g, &inputs)
                        .map_err(|e| NnError::InvalidArgument(e.to_string()))?;
                    g.bce_with_logits(z, &targets)
                },
                1e-5,
            )
            .unwrap();
            assert!(report.passes(1e-4), "{arch}/{size}: {:?}", report.worst());
        }
    }
}

#[test]
fn variable_transformer_passes_gradient_check() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let cfg = DecoderConfig::new(Architecture::Transformer, Size::Base, InputSlots::Variable(Strategy::All), D, L)
        .with_hidden(12, 6)
        .with_dropout(0.0);
    let model = Decoder::build(DecoderConfig { heads: 2, ..cfg }, &mut rng).unwrap();
    let mut inputs = random_inputs(&mut rng, 1, 4);
    inputs.extend(random_inputs(&mut rng, 1, 2));
    let targets = Tensor::new(vec![2, L], vec![1.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0, 1.0, 0.0, 1.0]).unwrap();
    let mut store = model.store().clone();
    let report = grad_check(
        &mut store,
        |g| {
            let z = model.forward(g, &inputs).map_err(|e| NnError::InvalidArgument(e.to_string()))?;
            g.bce_with_logits(z, &targets)
        },
        1e-5,
    )
    .unwrap();
    assert!(report.passes(1e-4), "{:?}", report.worst());
}

#[test]
fn linear_parameter_count() {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let model = Decoder::build(DecoderConfig::new(Architecture::Linear, Size::Base, fbm(), 768, 50), &mut rng).unwrap();
    assert_eq!(model.parameter_count(), 115_250);
    // size is ignored by the linear family
    let large = Decoder::build(DecoderConfig::new(Architecture::Linear, Size::Xlarge, fbm(), 768, 50), &mut rng).unwrap();
    assert_eq!(large.parameter_count(), 115_250);
}

#[test]
fn parameter_counts_grow_with_size() {
    for arch in [Architecture::Flat, Architecture::Parallel, Architecture::Transformer] {
        let counts: Vec<usize> = Size::ALL
            .iter()
            .map(|&s| {
                let cfg = DecoderConfig::new(arch, s, fbm(), 64, 50).with_hidden(96, 64);
                Decoder::build(cfg, &mut ChaCha8Rng::seed_from_u64(0)).unwrap().parameter_count()
            })
            .collect();
        assert!(counts[0] < counts[1] && counts[1] < counts[2], "{arch}: {counts:?}");
    }
}

#[test]
fn zero_input_linear_gives_bias() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut model = Decoder::build(DecoderConfig::new(Architecture::Linear, Size::Base, fbm(), D, L), &mut rng).unwrap();
    let bias = model.store().find("decoder.linear.bias").unwrap();
    model.store_mut().get_mut(bias).tensor.data_mut().copy_from_slice(&[0.1, -0.2, 0.3, 0.0, 2.0]);
    let input = DecoderInput::all_present("z", vec![vec![0.0; D]; 3]);
    let mut g = Graph::new(model.store());
    let z = model.forward(&mut g, &[input]).unwrap();
    assert_eq!(g.value(z).data(), &[0.1, -0.2, 0.3, 0.0, 2.0]);

    model.store_mut().get_mut(bias).tensor.data_mut().fill(0.0);
    let p = model.predict(&[DecoderInput::all_present("z", vec![vec![0.0; D]; 3])]).unwrap();
    assert!(p[0].iter().all(|&v| v == 0.5));
}

fn variable_model(rng: &mut ChaCha8Rng) -> Decoder {
    let cfg = DecoderConfig::new(Architecture::Transformer, Size::Base, InputSlots::Variable(Strategy::Paragraph), D, L)
        .with_hidden(12, 6);
    Decoder::build(DecoderConfig { heads: 2, ..cfg }, rng).unwrap()
}

#[test]
fn variable_transformer_is_permutation_invariant() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let model = variable_model(&mut rng);
    let a = random_inputs(&mut rng, 1, 4).remove(0);
    let mut b = a.clone();
    b.vectors.reverse();
    let pa = model.predict(&[a]).unwrap();
    let pb = model.predict(&[b]).unwrap();
    for (x, y) in pa[0].iter().zip(&pb[0]) {
        assert!((x - y).abs() < 1e-12);
    }
}

#[test]
fn masked_slots_are_ignored() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let model = variable_model(&mut rng);
    let single = random_inputs(&mut rng, 1, 1).remove(0);
    let mut padded = single.clone();
    padded.vectors.push(vec![3.0; D]);
    padded.presence.push(false);
    let a = model.predict(&[single]).unwrap();
    let b = model.predict(&[padded.clone()]).unwrap();
    for (x, y) in a[0].iter().zip(&b[0]) {
        assert!((x - y).abs() < 1e-12);
    }

    let mut g = Graph::new(model.store());
    g.record_attention = true;
    model.forward(&mut g, &[padded]).unwrap();
    let probs = &g.attention_log()[0];
    // [batch=1, heads=2, seq=2, seq=2]: key 1 is masked
    for h in 0..2 {
        for q in 0..2 {
            assert_eq!(probs[h * 4 + q * 2 + 1], 0.0);
        }
    }
}

#[test]
fn slot_count_mismatch_is_error() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let model = Decoder::build(DecoderConfig::new(Architecture::Flat, Size::Base, fbm(), D, L).with_hidden(8, 4), &mut rng).unwrap();
    let bad = random_inputs(&mut rng, 1, 2);
    assert!(model.predict(&bad).is_err());
}

#[test]
fn prediction_is_repeatable_and_in_range() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let model = Decoder::build(DecoderConfig::new(Architecture::Parallel, Size::Large, fbm(), D, L).with_hidden(12, 6), &mut rng).unwrap();
    let inputs = random_inputs(&mut rng, 5, 3);
    let a = model.predict(&inputs).unwrap();
    assert_eq!(a, model.predict(&inputs).unwrap());
    assert!(a.iter().flatten().all(|&p| p > 0.0 && p < 1.0));
}

/// Targets are a fixed linear threshold of the inputs.
fn separable(rng: &mut ChaCha8Rng, n: usize, w: &[Vec<f64>]) -> (Vec<DecoderInput>, Vec<Vec<f64>>) {
    let inputs = random_inputs(rng, n, 3);
    let targets = inputs
        .iter()
        .map(|x| {
            let flat: Vec<f64> = x.vectors.iter().flatten().copied().collect();
            w.iter()
                .map(|wl| f64::from(wl.iter().zip(&flat).map(|(a, b)| a * b).sum::<f64>() > 0.0))
                .collect()
        })
        .collect();
    (inputs, targets)
}

#[test]
fn linear_decoder_learns_separable_data() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let w: Vec<Vec<f64>> = (0..L).map(|_| (0..3 * D).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
    let (tx, ty) = separable(&mut rng, 8067, &w);
    let (vx, vy) = separable(&mut rng, 1574, &w);
    let mut model = Decoder::build(DecoderConfig::new(Architecture::Linear, Size::Base, fbm(), D, L), &mut rng).unwrap();
    let cfg = TrainConfig {
        max_epochs: 30,
        ..TrainConfig::default()
    };
    train_decoder(&mut model, &tx, &ty, &vx, &vy, &cfg).unwrap();
    let scores = model.predict(&vx).unwrap();
    let targets = vy.iter().map(|r| r.iter().map(|&v| v == 1.0).collect()).collect();
    let names = (0..L).map(|j| format!("l{j}")).collect();
    let report = evaluate(&EvalBatch::new(scores, targets, names).unwrap()).unwrap();
    assert!(report.macro_auc > 0.95, "macro {}", report.macro_auc);
}

#[test]
fn early_stopping_keeps_best_epoch() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let w: Vec<Vec<f64>> = (0..L).map(|_| (0..3 * D).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
    let (tx, ty) = separable(&mut rng, 200, &w);
    // validation labels are the complement, so learning only hurts there
    let (vx, vy) = separable(&mut rng, 100, &w);
    let vy: Vec<Vec<f64>> = vy.iter().map(|r| r.iter().map(|v| 1.0 - v).collect()).collect();
    let mut model = Decoder::build(DecoderConfig::new(Architecture::Linear, Size::Base, fbm(), D, L), &mut rng).unwrap();
    let cfg = TrainConfig {
        patience: 1,
        base_lr: 1e-2,
        ..TrainConfig::default()
    };
    let h = train_decoder(&mut model, &tx, &ty, &vx, &vy, &cfg).unwrap();
    assert!(h.val_loss[1] > h.val_loss[0]);
    assert_eq!(h.epochs_run, 2);
    assert_eq!(h.best_epoch, 1);
    let restored = evaluation_loss(&model, &vx, &vy).unwrap();
    assert_eq!(restored, h.best_val_loss);
    assert!(h.val_loss.iter().all(|&v| v >= h.best_val_loss));
}

#[test]
fn checkpoint_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("dec.nnc");
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let model = Decoder::build(DecoderConfig::new(Architecture::Transformer, Size::Large, fbm(), D, L).with_hidden(8, 4), &mut rng).unwrap();
    model.save(&path).unwrap();
    let back = Decoder::load(&path).unwrap();
    assert_eq!(back.config(), model.config());
    let inputs = random_inputs(&mut rng, 3, 3);
    assert_eq!(model.predict(&inputs).unwrap(), back.predict(&inputs).unwrap());
}
