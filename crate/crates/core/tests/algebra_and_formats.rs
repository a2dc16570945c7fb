use proptest::prelude::*;
use sffda_core::autodiff::Graph;
use sffda_core::formats::{decode_sffw, decode_sfft, encode_sffw, encode_sfft, read_sffw, read_sfft, write_sffw, write_sfft};
use sffda_core::params::ParamStore;
use sffda_core::siamese::{similarity, similarity_value};
use sffda_core::Tensor;

fn nonzero_vec(len: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-10.0f64..10.0, len).prop_filter("non-zero", |v| v.iter().any(|x| x.abs() > 1e-3))
}

fn pair() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    (1usize..48).prop_flat_map(|n| (nonzero_vec(n), nonzero_vec(n)))
}

fn graph_similarity(a: &[f64], b: &[f64]) -> f64 {
    let mut g = Graph::new();
    let va = g.constant(Tensor::vector(a.to_vec()));
    let vb = g.constant(Tensor::vector(b.to_vec()));
    let s = similarity(&mut g, va, vb).unwrap();
    g.value(s).item()
}

fn shaped_tensor() -> impl Strategy<Value = Tensor> {
    prop::collection::vec(1usize..5, 1..4).prop_flat_map(|shape| {
        let n = shape.iter().product::<usize>();
        prop::collection::vec(any::<f64>(), n).prop_map(move |d| Tensor::new(shape.clone(), d).unwrap())
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn self_similarity_is_one((a, _) in pair()) {
        prop_assert!((similarity_value(&a, &a) - 1.0).abs() < 1e-12);
        prop_assert!((graph_similarity(&a, &a) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn opposite_similarity_is_zero((a, _) in pair()) {
        let neg: Vec<f64> = a.iter().map(|x| -x).collect();
        prop_assert!(similarity_value(&a, &neg).abs() < 1e-12);
        prop_assert!(graph_similarity(&a, &neg).abs() < 1e-12);
    }

    #[test]
    fn similarity_is_symmetric_and_bounded((a, b) in pair()) {
        let s = similarity_value(&a, &b);
        prop_assert_eq!(s, similarity_value(&b, &a));
        prop_assert!((-1e-12..=1.0 + 1e-12).contains(&s));
        prop_assert!((s - graph_similarity(&a, &b)).abs() < 1e-12);
    }

    #[test]
    fn similarity_ignores_positive_scale((a, b) in pair(), k in 1e-3f64..1e3, m in 1e-3f64..1e3) {
        let ka: Vec<f64> = a.iter().map(|x| k * x).collect();
        let mb: Vec<f64> = b.iter().map(|x| m * x).collect();
        prop_assert!((similarity_value(&a, &b) - similarity_value(&ka, &mb)).abs() < 1e-12);
    }

    #[test]
    fn sffw_round_trips_bit_exactly(
        tensors in prop::collection::btree_map("[a-z][a-z0-9_.]{0,20}", shaped_tensor(), 0..6),
    ) {
        let mut p = ParamStore::new();
        for (n, t) in &tensors {
            p.insert(n.clone(), t.clone());
        }
        let bytes = encode_sffw(&p).unwrap();
        let back = decode_sffw(&bytes).unwrap();
        prop_assert_eq!(back.len(), p.len());
        for (n, t) in p.iter() {
            let u = back.get(n).unwrap();
            prop_assert_eq!(u.shape(), t.shape());
            let bits = |x: &Tensor| x.data().iter().map(|v| v.to_bits()).collect::<Vec<_>>();
            prop_assert_eq!(bits(u), bits(t));
        }
        prop_assert_eq!(encode_sffw(&back).unwrap(), bytes);
    }

    #[test]
    fn sfft_round_trips_single_precision_values(
        shape in prop::collection::vec(1usize..6, 1..5),
        seed in any::<u64>(),
    ) {
        let n: usize = shape.iter().product();
        let data = (0..n as u64)
            .map(|i| f32::from_bits((seed.wrapping_mul(i + 1) >> 32) as u32 & 0x7f7f_ffff) as f64)
            .collect();
        let t = Tensor::new(shape, data).unwrap();
        let bytes = encode_sfft(&t).unwrap();
        let back = decode_sfft(&bytes).unwrap();
        prop_assert_eq!(back.shape(), t.shape());
        let bits = |x: &Tensor| x.data().iter().map(|v| v.to_bits()).collect::<Vec<_>>();
        prop_assert_eq!(bits(&back), bits(&t));
        prop_assert_eq!(encode_sfft(&back).unwrap(), bytes);
    }

    #[test]
    fn truncated_files_are_rejected(t in shaped_tensor(), cut in 1usize..8) {
        let mut p = ParamStore::new();
        p.insert("w", t.clone());
        let w = encode_sffw(&p).unwrap();
        prop_assert!(decode_sffw(&w[..w.len().saturating_sub(cut)]).is_err());
        let f = encode_sfft(&t).unwrap();
        prop_assert!(decode_sfft(&f[..f.len().saturating_sub(cut)]).is_err());
    }
}

#[test]
fn zero_vector_similarity_is_neutral() {
    assert_eq!(similarity_value(&[0.0, 0.0], &[1.0, 2.0]), 0.5);
    assert_eq!(graph_similarity(&[0.0, 0.0], &[1.0, 2.0]), 0.5);
}

#[test]
fn files_round_trip_through_disk() {
    let dir = tempfile::tempdir().unwrap();
    let mut p = ParamStore::new();
    p.insert("a.w", Tensor::new(vec![2, 3], vec![0.1, -0.0, f64::MIN_POSITIVE, 1e300, -7.5, 3.0]).unwrap());
    p.insert("b", Tensor::scalar(std::f64::consts::PI));
    let wp = dir.path().join("w.sffw");
    write_sffw(&wp, &p).unwrap();
    let back = read_sffw(&wp).unwrap();
    for (n, t) in p.iter() {
        let u = back.get(n).unwrap();
        assert!(t.data().iter().zip(u.data()).all(|(x, y)| x.to_bits() == y.to_bits()));
    }
    let t = Tensor::new(vec![4], vec![0.5, -1.25, 3.0e-3f32 as f64, 1e30f32 as f64]).unwrap();
    let tp = dir.path().join("t.sfft");
    write_sfft(&tp, &t).unwrap();
    assert_eq!(read_sfft(&tp).unwrap(), t);
    assert!(decode_sfft(b"SFFW\x01\x00\x00").is_err());
}
