use hydrostat::snapshot::{decode, encode};
use hydrostat::{load_snapshot, save_snapshot, HarnessError};
use hydrostat_core::initial::{generate_initial_data, Recipe};
use hydrostat_core::solvers::{NsStepper, Stepper};
use hydrostat_core::Grid;
use proptest::prelude::*;

#[test]
fn file_round_trip_after_steps() {
    let g = Grid::new(8, 8, 8).unwrap();
    let u0 = generate_initial_data(Recipe::BandlimitedRandom, 5, &g).unwrap();
    let mut s = NsStepper::ns(&u0, 0.1, 0.1).unwrap();
    for _ in 0..3 {
        s.step(1e-3).unwrap();
    }
    let u = s.state();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("state.hsn");
    save_snapshot(&u, &path).unwrap();
    let back = load_snapshot(&path).unwrap();
    assert_eq!(back, u);
    assert_eq!(std::fs::read(&path).unwrap(), encode(&back));
}

#[test]
fn missing_file_is_an_io_error() {
    let dir = tempfile::tempdir().unwrap();
    assert!(matches!(load_snapshot(&dir.path().join("absent")), Err(HarnessError::Io(_))));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn every_truncation_is_a_format_error(seed in 0u64..1000, cut in 0usize..10_000) {
        let g = Grid::new(4, 4, 4).unwrap();
        let bytes = encode(&generate_initial_data(Recipe::BandlimitedRandom, seed, &g).unwrap());
        let cut = cut % bytes.len();
        let is_format = matches!(decode(&bytes[..cut]), Err(HarnessError::Format { .. }));
        prop_assert!(is_format);
    }

    #[test]
    fn single_bit_flips_are_detected(pos in 0usize..10_000, bit in 0u8..8) {
        let g = Grid::new(4, 4, 4).unwrap();
        let bytes = encode(&generate_initial_data(Recipe::BandlimitedRandom, 1, &g).unwrap());
        let mut bad = bytes.clone();
        let pos = pos % bytes.len();
        bad[pos] ^= 1 << bit;
        prop_assert!(decode(&bad).is_err());
    }

    #[test]
    fn arbitrary_bytes_never_panic(data in prop::collection::vec(any::<u8>(), 0..256)) {
        let mut v = b"HSN1\x01\x00\x00\x00".to_vec();
        v.extend(data);
        let _ = decode(&v);
    }
}
