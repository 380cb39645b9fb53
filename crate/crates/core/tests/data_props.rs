use nlab_core::data::idx::{dataset_from_idx, dataset_to_idx};
use nlab_core::data::{
    batches, generate_glyphs, inject_asymmetric, inject_symmetric_with, rotate_classes, GlyphSpec, Image,
    NoisyDataset, SymmetricMode,
};
use proptest::prelude::*;

fn glyphs(classes: usize, per_class: usize, seed: u64) -> NoisyDataset {
    let spec = GlyphSpec {
        num_classes: classes,
        per_class,
        size: 16,
        ..GlyphSpec::default()
    };
    generate_glyphs(&spec, seed).unwrap()
}

fn check_consistent(ds: &NoisyDataset) -> Result<(), TestCaseError> {
    for i in 0..ds.len() {
        prop_assert_eq!(ds.flip_mask[i], ds.given_labels[i] != ds.true_labels[i]);
        prop_assert!(ds.given_labels[i] < ds.num_classes);
    }
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn injection_touches_only_given_labels(
        classes in 2usize..6,
        rate in 0.0f64..=1.0,
        other in any::<bool>(),
        asym in any::<bool>(),
        seed in any::<u64>(),
    ) {
        let clean = glyphs(classes, 4, seed);
        let noisy = if asym {
            inject_asymmetric(&clean, rate, &rotate_classes(classes), seed).unwrap()
        } else {
            let mode = if other { SymmetricMode::OtherClasses } else { SymmetricMode::AllClasses };
            inject_symmetric_with(&clean, rate, mode, seed).unwrap()
        };
        prop_assert_eq!(&noisy.images, &clean.images);
        prop_assert_eq!(&noisy.true_labels, &clean.true_labels);
        prop_assert_eq!(&noisy.stats, &clean.stats);
        check_consistent(&noisy)?;
        // re-injection is relative to the true labels
        let again = inject_symmetric_with(&noisy, rate, SymmetricMode::AllClasses, seed ^ 1).unwrap();
        check_consistent(&again)?;
        prop_assert_eq!(&again.true_labels, &clean.true_labels);
    }

    #[test]
    fn batches_partition_indices(n in 0usize..300, bs in 1usize..50, epoch in 0usize..100, seed in any::<u64>()) {
        let b = batches(n, bs, epoch, seed);
        let mut all: Vec<usize> = b.iter().flatten().copied().collect();
        prop_assert!(b.iter().all(|x| !x.is_empty() && x.len() <= bs));
        all.sort_unstable();
        prop_assert_eq!(all, (0..n).collect::<Vec<_>>());
    }

    #[test]
    fn idx_round_trip_is_lossless_at_8_bits(
        dims in (1usize..6, 1usize..6, 1usize..5),
        seed in any::<u64>(),
    ) {
        let (h, w, n) = dims;
        let mut state = seed;
        let mut next = || { state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407); (state >> 56) as u8 };
        let images: Vec<Image> = (0..n)
            .map(|_| Image::new(1, h, w, (0..h * w).map(|_| next() as f64 / 255.0).collect()).unwrap())
            .collect();
        let labels: Vec<usize> = (0..n).map(|i| i % 3).collect();
        let ds = NoisyDataset::clean(images, labels, 3).unwrap();
        let (img, lab) = dataset_to_idx(&ds).unwrap();
        let back = dataset_from_idx(&img, &lab).unwrap();
        prop_assert_eq!(&back.images, &ds.images);
        prop_assert_eq!(&back.given_labels, &ds.given_labels);
        let (img2, lab2) = dataset_to_idx(&back).unwrap();
        prop_assert_eq!(img2, img);
        prop_assert_eq!(lab2, lab);
    }
}
