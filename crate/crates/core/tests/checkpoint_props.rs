mod common;

use cgnn::checkpoint::{decode_params, encode_params, load_checkpoint, save_checkpoint};
use cgnn::encoder::{init_params, ModelParams};
use cgnn::train::{embed, initial_params, TrainConfig};
use cgnn::Prng;
use proptest::prelude::*;

fn params() -> impl Strategy<Value = ModelParams> {
    (any::<u64>(), 1usize..8, 1usize..6, any::<bool>(), -2.0f64..2.0).prop_map(|(seed, f, h, stack, slope)| {
        let mut p = init_params(&mut Prng::new(seed), f, h, stack).unwrap();
        p.slope = slope;
        p
    })
}

fn bits(p: &ModelParams) -> Vec<Vec<u64>> {
    p.tensors().iter().map(|(_, t)| t.iter().map(|v| v.to_bits()).collect()).collect()
}

proptest! {
    #[test]
    fn round_trip_is_bit_exact(p in params()) {
        let bytes = encode_params(&p);
        let q = decode_params(&bytes).unwrap();
        prop_assert_eq!(bits(&p), bits(&q));
        prop_assert_eq!(p.has_stack(), q.has_stack());
        prop_assert_eq!(encode_params(&q), bytes);
    }

    #[test]
    fn every_truncation_is_rejected(p in params(), frac in 0.0f64..1.0) {
        let bytes = encode_params(&p);
        let cut = ((bytes.len() as f64) * frac) as usize;
        prop_assert!(decode_params(&bytes[..cut]).is_err());
    }
}

#[test]
fn file_round_trip_and_corruption() {
    let dir = tempfile::tempdir().unwrap();
    let p = init_params(&mut Prng::new(3), 4, 3, true).unwrap();
    let a = dir.path().join("a.bin");
    let b = dir.path().join("b.bin");
    save_checkpoint(&p, &a).unwrap();
    save_checkpoint(&load_checkpoint(&a).unwrap(), &b).unwrap();
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());

    let mut bytes = encode_params(&p);
    bytes[0] = b'X';
    assert!(decode_params(&bytes).is_err());
    let mut bytes = encode_params(&p);
    bytes.push(0);
    assert!(decode_params(&bytes).is_err());
    let mut bytes = encode_params(&p);
    let last = bytes.len() - 8;
    bytes[last..].copy_from_slice(&f64::NAN.to_le_bytes());
    assert!(decode_params(&bytes).is_err());
    assert!(load_checkpoint(dir.path().join("missing.bin")).is_err());
}

#[test]
fn reloaded_params_embed_identically() {
    let g = common::small_random_graph(17);
    let cfg = TrainConfig { hidden_dim: 4, ..Default::default() };
    let p = initial_params(&g, &cfg).unwrap();
    let q = decode_params(&encode_params(&p)).unwrap();
    assert_eq!(embed(&g, &p).unwrap(), embed(&g, &q).unwrap());
}
