use pulse_core::codec::{penc_compress, BitPlane, EventList, Penc};

#[test]
fn every_16_bit_plane_round_trips() {
    for v in 0u64..(1 << 16) {
        let plane = BitPlane::from_u64(v, 16);
        let events = penc_compress(plane.as_ref());
        assert_eq!(events.len() as u32, v.count_ones(), "plane {v:#06x}");
        assert!(events.as_slice().windows(2).all(|w| w[0] < w[1]));
        assert_eq!(events.scatter(16), plane, "plane {v:#06x}");
    }
}

#[test]
fn wide_planes_cross_word_boundaries() {
    let bits: Vec<bool> = (0..200).map(|i| i % 7 == 0 || i == 63 || i == 64 || i == 199).collect();
    let plane = BitPlane::from_bools(&bits);
    let events: Vec<usize> = Penc::new(plane.as_ref()).collect();
    let expected: Vec<usize> = (0..200).filter(|&i| bits[i]).collect();
    assert_eq!(events, expected);
    assert_eq!(
        EventList::new(events.iter().map(|&i| i as u32).collect()).scatter(200),
        plane
    );
}

#[test]
fn empty_and_full_planes() {
    assert!(penc_compress(BitPlane::zeros(784).as_ref()).is_empty());
    let full = BitPlane::from_bools(&[true; 784]);
    let events = penc_compress(full.as_ref());
    assert_eq!(events.len(), 784);
    assert_eq!(events.scatter(784), full);
}
