use nncore::checkpoint::{load_into, read_checkpoint, write_checkpoint};
use nncore::layers::Dense;
use nncore::ParamStore;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn model(seed: u64) -> ParamStore {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut store = ParamStore::new();
    Dense::new(&mut store, "decoder.flat.layer1", 7, 3, &mut rng).unwrap();
    Dense::new(&mut store, "decoder.flat.out", 3, 2, &mut rng).unwrap();
    store
}

proptest! {
    #[test]
    fn round_trip_is_bit_exact(seed in any::<u64>()) {
        let store = model(seed);
        let mut bytes = Vec::new();
        write_checkpoint(&store, &mut bytes).unwrap();
        let mut other = model(seed.wrapping_add(1));
        load_into(&mut other, &read_checkpoint(bytes.as_slice()).unwrap()).unwrap();
        for ((_, a), (_, b)) in store.iter().zip(other.iter()) {
            let ab: Vec<u64> = a.tensor.data().iter().map(|v| v.to_bits()).collect();
            let bb: Vec<u64> = b.tensor.data().iter().map(|v| v.to_bits()).collect();
            prop_assert_eq!(ab, bb);
        }
        let mut again = Vec::new();
        write_checkpoint(&other, &mut again).unwrap();
        prop_assert_eq!(bytes, again);
    }
}

#[test]
fn layout_and_errors() {
    let store = model(1);
    let mut bytes = Vec::new();
    write_checkpoint(&store, &mut bytes).unwrap();
    assert_eq!(&bytes[..4], b"NNC1");
    assert_eq!(u32::from_le_bytes(bytes[4..8].try_into().unwrap()), 4);

    let mut bad = bytes.clone();
    bad[0] = b'X';
    assert!(read_checkpoint(bad.as_slice()).unwrap_err().to_string().contains("bad magic"));
    let cut = &bytes[..bytes.len() - 3];
    assert!(read_checkpoint(cut).unwrap_err().to_string().contains("truncated"));
}
