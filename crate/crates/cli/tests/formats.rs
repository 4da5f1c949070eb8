use pairclust::io::*;
use pairclust::model::{decode_model, encode_model};
use pairclust::FormatError;
use pairclust_core::{
    ClusterAssignment, DensityMode, DensityScores, FeatureMatrix, KnnGraph, LabelVector, LayerDims, MlpClassifier,
};
use proptest::prelude::*;

fn finite_f32() -> impl Strategy<Value = f32> {
    any::<f32>().prop_filter("finite", |v| v.is_finite())
}

fn features() -> impl Strategy<Value = FeatureMatrix> {
    (1usize..20, 1usize..12).prop_flat_map(|(n, d)| {
        proptest::collection::vec(finite_f32(), n * d).prop_map(move |data| FeatureMatrix::new(n, d, data).unwrap())
    })
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 128, ..ProptestConfig::default() })]

    #[test]
    fn features_round_trip_bitwise(f in features()) {
        let bytes = encode_features(&f);
        prop_assert_eq!(bytes.len(), FEATURE_HEADER_LEN + 4 * f.n() * f.d());
        let back = decode_features(&bytes).unwrap();
        let bits = |m: &FeatureMatrix| m.as_slice().iter().map(|v| v.to_bits()).collect::<Vec<_>>();
        prop_assert_eq!((back.n(), back.d()), (f.n(), f.d()));
        prop_assert_eq!(bits(&back), bits(&f));
    }

    #[test]
    fn labels_round_trip(labels in proptest::collection::vec(0i64..i64::MAX, 0..50)) {
        let l = LabelVector::new(labels).unwrap();
        prop_assert_eq!(decode_labels(&encode_labels(&l)).unwrap(), l);
    }

    #[test]
    fn truncated_files_are_rejected(f in features(), cut in 1usize..64) {
        let bytes = encode_features(&f);
        let cut = cut.min(bytes.len());
        prop_assert!(decode_features(&bytes[..bytes.len() - cut]).is_err());
        let mut longer = bytes.clone();
        longer.extend_from_slice(&[0; 4]);
        let is_size_mismatch = matches!(decode_features(&longer), Err(FormatError::SizeMismatch { .. }));
        prop_assert!(is_size_mismatch);
    }

    #[test]
    fn arbitrary_bytes_never_panic(bytes in proptest::collection::vec(any::<u8>(), 0..80), magic in 0usize..5) {
        let mut bytes = bytes;
        let magics = [FEATURE_MAGIC, LABEL_MAGIC, KNN_MAGIC, DENSITY_MAGIC, *b"PCLF"];
        if bytes.len() >= 8 {
            bytes[..4].copy_from_slice(&magics[magic]);
            bytes[4..8].copy_from_slice(&FORMAT_VERSION.to_le_bytes());
        }
        let _ = decode_features(&bytes);
        let _ = decode_labels(&bytes);
        let _ = decode_knn(&bytes);
        let _ = decode_density(&bytes);
        let _ = decode_model(&bytes);
        let _ = decode_assignment(&String::from_utf8_lossy(&bytes));
    }

    #[test]
    fn density_round_trip_bitwise(values in proptest::collection::vec(any::<f64>(), 0..40)) {
        let d = DensityScores { values, mode: DensityMode::RankWeighted { power: 5.0 } };
        let back = decode_density(&encode_density(&d)).unwrap();
        prop_assert_eq!(back.iter().map(|v| v.to_bits()).collect::<Vec<_>>(), d.values.iter().map(|v| v.to_bits()).collect::<Vec<_>>());
    }

    #[test]
    fn knn_round_trip(n in 1usize..20, d in 1usize..8, k in 0usize..6, seed in any::<u64>()) {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let f = FeatureMatrix::new(n, d, (0..n * d).map(|_| rng.random_range(-4.0f32..4.0)).collect()).unwrap();
        let k = k.min(n - 1);
        let g = pairclust_core::build_knn(&f, k).unwrap();
        prop_assert_eq!(decode_knn(&encode_knn(&g)).unwrap(), g);
    }

    #[test]
    fn assignment_round_trip(raw in proptest::collection::vec(0u32..30, 1..80)) {
        let a = ClusterAssignment::from_raw(&raw);
        prop_assert_eq!(decode_assignment(&encode_assignment(&a)).unwrap(), a);
    }

    #[test]
    fn model_round_trip(input in 1usize..9, h1 in 1usize..9, h2 in 1usize..9, seed in any::<u64>()) {
        let m = MlpClassifier::new(LayerDims::new(input, h1, h2).unwrap(), seed);
        prop_assert_eq!(decode_model(&encode_model(&m)).unwrap(), m);
    }
}

#[test]
fn knn_graph_with_bad_neighbor_is_rejected() {
    let g = KnnGraph::new(2, 1, vec![1, 0], vec![0.5, 0.5]).unwrap();
    let mut bytes = encode_knn(&g);
    bytes[KNN_HEADER_LEN..KNN_HEADER_LEN + 4].copy_from_slice(&7u32.to_le_bytes());
    assert!(matches!(decode_knn(&bytes), Err(FormatError::Core(_))));
}
