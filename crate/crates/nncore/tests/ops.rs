use nncore::{bce_value, Graph, ParamStore, Tensor};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn t2(rows: &[Vec<f64>]) -> Tensor {
    Tensor::from_rows(rows).unwrap()
}

#[test]
fn dense_identity_and_hand_multiply() {
    let store = ParamStore::new();
    let mut g = Graph::new(&store);
    let x = g.input(t2(&[vec![1.0, 2.0]]));
    let w = g.input(t2(&[vec![1.0, 0.0], vec![0.0, 1.0]]));
    let b = g.input(Tensor::new(vec![2], vec![0.0, 0.0]).unwrap());
    let xw = g.matmul(x, w).unwrap();
    let y = g.add_bias(xw, b).unwrap();
    assert_eq!(g.value(y).data(), &[1.0, 2.0]);

    let w = g.input(t2(&[vec![1.0, 1.0], vec![1.0, 1.0]]));
    let b = g.input(Tensor::new(vec![2], vec![1.0, -1.0]).unwrap());
    let xw = g.matmul(x, w).unwrap();
    let y = g.add_bias(xw, b).unwrap();
    assert_eq!(g.value(y).data(), &[4.0, 2.0]);
}

#[test]
fn dense_weight_gradient_of_sum() {
    let mut store = ParamStore::new();
    let w = store.add("w", t2(&[vec![1.0, 1.0], vec![1.0, 1.0]]), true).unwrap();
    let mut g = Graph::new(&store);
    let x = g.input(t2(&[vec![1.0, 2.0]]));
    let wn = g.param(w);
    let y = g.matmul(x, wn).unwrap();
    let s = g.sum(y);
    let grads = g.backward(s).unwrap();
    assert_eq!(grads.get(w).unwrap(), &[1.0, 1.0, 2.0, 2.0]);
}

#[test]
fn dense_shape_mismatch_names_both_shapes() {
    let store = ParamStore::new();
    let mut g = Graph::new(&store);
    let x = g.input(Tensor::zeros(vec![1, 3]));
    let w = g.input(Tensor::zeros(vec![2, 2]));
    let err = g.matmul(x, w).unwrap_err().to_string();
    assert!(err.contains("[1, 3]") && err.contains("[2, 2]"), "{err}");
}

#[test]
fn layer_norm_examples() {
    let store = ParamStore::new();
    let mut g = Graph::new(&store);
    let ones = g.input(Tensor::filled(vec![2], 1.0));
    let zeros = g.input(Tensor::zeros(vec![2]));
    let x = g.input(t2(&[vec![3.0, 3.0], vec![-1.0, 1.0]]));
    let y = g.layer_norm(x, ones, zeros, 1e-5).unwrap();
    let v = g.value(y).data();
    assert_eq!(&v[..2], &[0.0, 0.0]);
    assert!((v[2] + 1.0).abs() < 1e-5 && (v[3] - 1.0).abs() < 1e-5);

    let five = g.input(Tensor::filled(vec![2], 5.0));
    let y = g.layer_norm(x, zeros, five, 1e-5).unwrap();
    assert!(g.value(y).data().iter().all(|&v| v == 5.0));
}

#[test]
fn prelu_examples() {
    let mut store = ParamStore::new();
    let a = store.add("a", Tensor::filled(vec![1], 0.25), false).unwrap();
    let mut g = Graph::new(&store);
    let x = g.input(Tensor::new(vec![2], vec![-2.0, 3.0]).unwrap());
    let an = g.param(a);
    let y = g.prelu(x, an).unwrap();
    assert_eq!(g.value(y).data(), &[-0.5, 3.0]);
    let s = g.sum(y);
    let grads = g.backward(s).unwrap();
    assert_eq!(grads.get(a).unwrap(), &[-2.0]);

    let one = g.input(Tensor::filled(vec![1], 1.0));
    let x = g.input(Tensor::new(vec![4], vec![-3.0, -0.1, 0.0, 7.0]).unwrap());
    let y = g.prelu(x, one).unwrap();
    assert_eq!(g.value(y).data(), &[-3.0, -0.1, 0.0, 7.0]);
}

#[test]
fn dropout_modes() {
    let store = ParamStore::new();
    let x_t = Tensor::filled(vec![100_000], 1.0);

    let mut g = Graph::new(&store);
    let x = g.input(x_t.clone());
    let y = g.dropout(x, 0.5).unwrap();
    assert_eq!(g.value(y).data(), x_t.data());

    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut g = Graph::training(&store, &mut rng);
    let x = g.input(x_t.clone());
    let y = g.dropout(x, 0.0).unwrap();
    assert_eq!(g.value(y).data(), x_t.data());
    let y = g.dropout(x, 0.1).unwrap();
    let mean = g.value(y).data().iter().sum::<f64>() / 1e5;
    assert!((mean - 1.0).abs() < 0.01, "mean {mean}");
    assert!(g.dropout(x, 1.0).is_err());
}

#[test]
fn dropout_masks_follow_seed() {
    let store = ParamStore::new();
    let run = |seed| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut g = Graph::training(&store, &mut rng);
        let x = g.input(Tensor::filled(vec![64], 1.0));
        let y = g.dropout(x, 0.3).unwrap();
        g.value(y).data().to_vec()
    };
    assert_eq!(run(3), run(3));
    assert_ne!(run(3), run(4));
}

#[test]
fn bce_examples() {
    assert!((bce_value(&[0.0], &[1.0]).unwrap() - std::f64::consts::LN_2).abs() < 1e-12);
    let big = bce_value(&[1000.0], &[1.0]).unwrap();
    assert!(big.is_finite() && big.abs() < 1e-12);
    assert!((bce_value(&[1.0], &[0.0]).unwrap() - (1.0 + 1f64.exp()).ln()).abs() < 1e-12);
    assert!((bce_value(&[1.0], &[0.0]).unwrap() - 1.313262).abs() < 1e-6);
    assert!(bce_value(&[0.0], &[0.5]).is_err());
    for z in [-1e6, -1e3, -1.0, 0.0, 1.0, 1e3, 1e6] {
        for y in [0.0, 1.0] {
            assert!(bce_value(&[z], &[y]).unwrap().is_finite());
        }
    }
}

#[test]
fn attention_single_position_returns_value() {
    let store = ParamStore::new();
    let mut g = Graph::new(&store);
    let q = g.input(t2(&[vec![0.3, -1.0, 2.0, 0.5]]));
    let k = g.input(t2(&[vec![1.0, 1.0, -1.0, 0.2]]));
    let v = g.input(t2(&[vec![4.0, 5.0, 6.0, 7.0]]));
    let y = g.attention(q, k, v, &[1.0], 1, 1, 2).unwrap();
    assert_eq!(g.value(y).data(), &[4.0, 5.0, 6.0, 7.0]);
}

#[test]
fn attention_rows_normalise_and_skip_masked_keys() {
    let store = ParamStore::new();
    let mut g = Graph::new(&store);
    g.record_attention = true;
    let rows: Vec<Vec<f64>> = (0..8).map(|i| (0..4).map(|j| ((i * 4 + j) as f64 * 0.37).sin()).collect()).collect();
    let x = g.input(t2(&rows));
    let mask = [1.0, 1.0, 0.0, 1.0, 1.0, 0.0, 0.0, 1.0];
    g.attention(x, x, x, &mask, 2, 4, 2).unwrap();
    let probs = &g.attention_log()[0];
    for b in 0..2 {
        for h in 0..2 {
            for i in 0..4 {
                let row = &probs[((b * 2 + h) * 4 + i) * 4..][..4];
                let s: f64 = row.iter().sum();
                assert!((s - 1.0).abs() < 1e-9);
                for j in 0..4 {
                    if mask[b * 4 + j] == 0.0 {
                        assert_eq!(row[j], 0.0);
                    }
                }
            }
        }
    }
}

#[test]
fn attention_rejects_indivisible_heads() {
    let store = ParamStore::new();
    let mut g = Graph::new(&store);
    let x = g.input(Tensor::zeros(vec![2, 6]));
    assert!(g.attention(x, x, x, &[1.0, 1.0], 1, 2, 4).is_err());
}
