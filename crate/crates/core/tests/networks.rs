mod common;

use common::{naive_logits, rng, zero_masked};
use condnet::network::FormatError;
use condnet::{ActivationKind, FeedForwardNet, NetworkSpec};
use proptest::prelude::*;
use rand::Rng;

#[test]
fn glorot_variance() {
    let spec = NetworkSpec::new(300, vec![200], 2, ActivationKind::Relu, 77).unwrap();
    let net = FeedForwardNet::init(&spec).unwrap();
    let w = net.layers()[0].weights.as_slice();
    let limit = (6.0f64 / 500.0).sqrt();
    let mean = w.iter().sum::<f64>() / w.len() as f64;
    let var = w.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / w.len() as f64;
    let expected = limit * limit / 3.0;
    assert!((var - expected).abs() < 0.01 * expected, "{var} vs {expected}");
    assert!(w.iter().all(|v| v.abs() <= limit));
}

#[test]
fn forward_matches_scalar_evaluator() {
    let mut r = rng(8);
    for activation in [ActivationKind::TunableErf, ActivationKind::Sigmoid, ActivationKind::Relu] {
        let spec = NetworkSpec::new(5, vec![7, 3, 6], 4, activation, 21).unwrap();
        let net = FeedForwardNet::init(&spec).unwrap();
        for _ in 0..20 {
            let x: Vec<f64> = (0..5).map(|_| r.gen_range(-2.0..2.0)).collect();
            let fast = net.forward(&x).unwrap();
            let slow = naive_logits(&net, &x);
            for (a, b) in fast.logits().iter().zip(&slow) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }
}

#[test]
fn resizing_a_proportioned_mnist_net() {
    let widths = vec![300, 205, 255, 210, 250, 210, 180, 150, 120, 95, 65, 25];
    let spec = NetworkSpec::new(200, widths, 10, ActivationKind::TunableErf, 0).unwrap();
    let doubled = spec.resized(2.0, 1).unwrap();
    assert_eq!(
        doubled.hidden_widths,
        vec![600, 410, 510, 420, 500, 420, 360, 300, 240, 190, 130, 50]
    );
    let adult = NetworkSpec::new(108, vec![44, 39, 32, 22, 20, 15, 12, 8, 5, 4, 8, 6], 2, ActivationKind::TunableErf, 0)
        .unwrap();
    assert_eq!(
        adult.resized(1.4, 1).unwrap().hidden_widths,
        vec![61, 54, 44, 30, 28, 21, 16, 11, 7, 5, 11, 8]
    );
}

/// A second reader for the model file, written from the format description.
fn decode_independently(bytes: &[u8]) -> (Vec<usize>, u8, Vec<f64>) {
    assert_eq!(&bytes[..4], b"CSHP");
    let mut pos = 4;
    let u32_at = |pos: &mut usize| {
        let v = u32::from_le_bytes(bytes[*pos..*pos + 4].try_into().unwrap());
        *pos += 4;
        v as usize
    };
    assert_eq!(u32_at(&mut pos), 1);
    let input = u32_at(&mut pos);
    let output = u32_at(&mut pos);
    let hidden = u32_at(&mut pos);
    let mut widths = vec![input];
    for _ in 0..hidden {
        widths.push(u32_at(&mut pos));
    }
    widths.push(output);
    let activation = bytes[pos];
    pos += 1 + 8;
    let mut params = Vec::new();
    for _ in 0..=hidden {
        let rows = u32_at(&mut pos);
        let cols = u32_at(&mut pos);
        for _ in 0..rows * cols + cols {
            params.push(f64::from_le_bytes(bytes[pos..pos + 8].try_into().unwrap()));
            pos += 8;
        }
        if bytes[pos] == 1 {
            params.push(f64::from_le_bytes(bytes[pos + 1..pos + 9].try_into().unwrap()));
            pos += 9;
        } else {
            pos += 1;
        }
    }
    let crc = u32::from_le_bytes(bytes[pos..pos + 4].try_into().unwrap());
    assert_eq!(crc, crc32fast::hash(&bytes[..pos]));
    assert_eq!(pos + 4, bytes.len());
    (widths, activation, params)
}

#[test]
fn model_file_matches_its_description() {
    let spec = NetworkSpec::new(3, vec![4, 2], 2, ActivationKind::TunableErf, 5).unwrap();
    let net = FeedForwardNet::init(&spec).unwrap();
    let (widths, activation, params) = decode_independently(&net.to_bytes().unwrap());
    assert_eq!(widths, spec.widths());
    assert_eq!(activation, 0);
    let mut expected = Vec::new();
    for l in net.layers() {
        expected.extend_from_slice(l.weights.as_slice());
        expected.extend_from_slice(&l.bias);
        expected.extend(l.gain);
    }
    assert_eq!(params, expected);
}

#[test]
fn malformed_model_files_are_rejected() {
    let spec = NetworkSpec::new(2, vec![3], 2, ActivationKind::Relu, 5).unwrap();
    let bytes = FeedForwardNet::init(&spec).unwrap().to_bytes().unwrap();
    let mut extra = bytes.clone();
    extra.push(0);
    assert!(FeedForwardNet::from_bytes(&extra).is_err());
    assert!(matches!(FeedForwardNet::from_json("{"), Err(FormatError::Json(_))));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn removal_equals_zero_masking(
        seed in any::<u64>(),
        hidden in proptest::collection::vec(2usize..7, 1..4),
        layer_pick in any::<usize>(),
        victim_bits in any::<u64>(),
    ) {
        let spec = NetworkSpec::new(3, hidden.clone(), 2, ActivationKind::TunableErf, seed).unwrap();
        let net = FeedForwardNet::init(&spec).unwrap();
        let layer = layer_pick % hidden.len();
        let victims: Vec<usize> = (0..hidden[layer]).filter(|j| victim_bits >> j & 1 == 1).collect();
        prop_assume!(victims.len() < hidden[layer]);
        let small = net.remove_neurons(layer, &victims).unwrap();
        let masked = zero_masked(&net, layer, &victims);
        let mut r = rng(seed);
        for _ in 0..5 {
            let x: Vec<f64> = (0..3).map(|_| r.gen_range(-1.0..1.0)).collect();
            let a = small.forward(&x).unwrap();
            let b = masked.forward(&x).unwrap();
            for (u, v) in a.logits().iter().zip(b.logits()) {
                prop_assert!((u - v).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn binary_and_json_round_trip(seed in any::<u64>(), hidden in proptest::collection::vec(1usize..6, 1..4)) {
        let spec = NetworkSpec::new(2, hidden, 3, ActivationKind::Sigmoid, seed).unwrap();
        let net = FeedForwardNet::init(&spec).unwrap();
        prop_assert_eq!(&FeedForwardNet::from_bytes(&net.to_bytes().unwrap()).unwrap(), &net);
        prop_assert_eq!(&FeedForwardNet::from_json(&net.to_json().unwrap()).unwrap(), &net);
    }
}
