mod common;

use common::{gradient_check, kink_margin};
use lpgnet::graph::Graph;
use lpgnet::matrix::DenseMatrix;
use lpgnet::nn::{cross_entropy, normalize_adjacency, Network, NormalizationMode};
use lpgnet::rng::stream_rng;
use rand::Rng;

const TOLERANCE: f64 = 1e-4;

fn random_features(n: usize, d: usize, seed: u64) -> DenseMatrix {
    let mut rng = stream_rng(seed);
    DenseMatrix::from_vec(n, d, (0..n * d).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap()
}

/// Glorot init leaves biases at zero, so a dead unit feeds an exact zero into
/// the next layer; random biases move the check point off that kink.
fn network(input: usize, hidden_layers: usize, classes: usize, dropout: f64, seed: u64) -> Network {
    let mut net = Network::new(input, 5, hidden_layers, classes, dropout, &mut stream_rng(seed)).unwrap();
    let mut rng = stream_rng(seed ^ 0xb1a5);
    for layer in &mut net.layers {
        layer.bias.iter_mut().for_each(|b| *b = rng.gen_range(-0.5..0.5));
    }
    net
}

fn cycle_with_chords(n: usize) -> Graph {
    let edges = (0..n).map(|i| (i, (i + 1) % n)).chain([(0, n / 2), (1, n - 2)]);
    Graph::from_edges(n, edges).unwrap()
}

#[test]
fn mlp_gradients_match_finite_differences() {
    for (seed, hidden_layers) in [(1, 0), (2, 1), (3, 2), (4, 3)] {
        let net = network(4, hidden_layers, 3, 0.0, seed);
        let x = random_features(7, 4, seed + 100);
        let labels = [0, 1, 2, 0, 1, 2, 0];
        assert!(kink_margin(&net, &x, None) > 1e-4);
        let err = gradient_check(&net, &x, None, &labels, &[0, 2, 3, 5, 6], None);
        assert!(err < TOLERANCE, "{hidden_layers} hidden layers: relative error {err}");
    }
}

#[test]
fn dropout_gradients_match_with_a_replayed_mask() {
    let net = network(3, 2, 2, 0.3, 5);
    let x = random_features(6, 3, 55);
    let err = gradient_check(&net, &x, None, &[0, 1, 1, 0, 1, 0], &[0, 1, 2, 3, 4, 5], Some(9));
    assert!(err < TOLERANCE, "relative error {err}");
}

#[test]
fn gcn_gradients_match_for_both_normalizations() {
    let g = cycle_with_chords(8);
    for mode in [NormalizationMode::AugNormAdj, NormalizationMode::FirstOrderGcn] {
        let adj = normalize_adjacency(&g, mode);
        for (seed, hidden_layers) in [(11, 0), (12, 1), (13, 2)] {
            let net = network(3, hidden_layers, 2, 0.0, seed);
            let x = random_features(8, 3, seed + 7);
            let labels = [0, 1, 0, 1, 1, 0, 0, 1];
            assert!(kink_margin(&net, &x, Some(&adj)) > 1e-4, "{mode} seed {seed} sits on a ReLU kink");
            let err = gradient_check(&net, &x, Some(&adj), &labels, &[0, 1, 4, 5, 7], None);
            assert!(err < TOLERANCE, "{mode} with {hidden_layers} hidden layers: relative error {err}");
        }
    }
}

#[test]
fn loss_gradient_wrt_logits() {
    let logits = random_features(5, 4, 21);
    let labels = [3, 0, 1, 2, 2];
    let rows = [0, 1, 3, 4];
    let (_, grad) = cross_entropy(&logits, &labels, &rows).unwrap();
    let h = 1e-6;
    for i in 0..5 {
        for j in 0..4 {
            let mut up = logits.clone();
            up.set(i, j, logits.get(i, j) + h);
            let mut down = logits.clone();
            down.set(i, j, logits.get(i, j) - h);
            let numeric = (cross_entropy(&up, &labels, &rows).unwrap().0 - cross_entropy(&down, &labels, &rows).unwrap().0)
                / (2.0 * h);
            let a = grad.get(i, j);
            assert!((a - numeric).abs() <= TOLERANCE * a.abs().max(numeric.abs()).max(1e-6), "({i},{j}): {a} vs {numeric}");
        }
    }
    // rows outside the loss get no gradient
    assert!(grad.row(2).iter().all(|&g| g == 0.0));
}
