use proptest::prelude::*;
use pulse_core::Fx32;

fn any_fx() -> impl Strategy<Value = Fx32> {
    any::<i32>().prop_map(Fx32::from_raw)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2000))]

    #[test]
    fn encode_is_monotone(a in -4.0f64..4.0, b in -4.0f64..4.0) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        prop_assert!(Fx32::encode(lo).unwrap() <= Fx32::encode(hi).unwrap());
    }

    #[test]
    fn encode_error_is_half_an_ulp(x in -4.0f64..4.0) {
        let e = (Fx32::encode(x).unwrap().to_f64() - x).abs();
        prop_assert!(e <= 0.5 / (1u64 << 29) as f64);
    }

    #[test]
    fn add_is_commutative(a in any_fx(), b in any_fx()) {
        prop_assert_eq!(a + b, b + a);
    }

    #[test]
    fn add_is_associative(a in any_fx(), b in any_fx(), c in any_fx()) {
        prop_assert_eq!((a + b) + c, a + (b + c));
    }

    #[test]
    fn add_wraps_like_i32(a in any::<i32>(), b in any::<i32>()) {
        let (sum, wrapped) = Fx32::from_raw(a).overflowing_add(Fx32::from_raw(b));
        prop_assert_eq!(sum.raw(), a.wrapping_add(b));
        prop_assert_eq!(wrapped, a.checked_add(b).is_none());
    }

    #[test]
    fn mul_identities(x in any_fx()) {
        prop_assert_eq!(x * Fx32::ZERO, Fx32::ZERO);
        prop_assert_eq!(Fx32::ONE * x, x);
        prop_assert_eq!(x * Fx32::ONE, x);
    }

    #[test]
    fn mul_truncates_toward_negative_infinity(a in any_fx(), b in any_fx()) {
        let exact = a.raw() as i128 * b.raw() as i128;
        let floor = exact.div_euclid(1 << 29);
        prop_assert_eq!((a * b).raw(), floor as i32);
    }

    #[test]
    fn spike_check_matches_signed_compare(x in any_fx()) {
        prop_assert_eq!(x.spike_check(), x.raw() >= 0x2000_0000);
    }

    #[test]
    fn soft_reset_subtracts_one(x in 0x2000_0000i32..=i32::MAX) {
        let v = Fx32::from_raw(x).soft_reset();
        prop_assert_eq!(v.raw(), x - 0x2000_0000);
        prop_assert!(v.raw() >= 0);
    }

    #[test]
    fn decimal_string_round_trips(x in any_fx()) {
        prop_assert_eq!(Fx32::from_decimal_str(&x.to_decimal_string()).unwrap(), x);
    }

    #[test]
    fn decimal_parse_agrees_with_f64_encode(x in -3.9f64..3.9) {
        // Three decimals are exact enough that f64 rounding cannot flip a tie.
        let s = format!("{x:.3}");
        prop_assert_eq!(Fx32::from_decimal_str(&s).unwrap(), Fx32::encode(s.parse().unwrap()).unwrap());
    }
}

#[test]
fn spike_check_boundary_patterns() {
    for top in 0u32..8 {
        for low in [0u32, 1, 0x0FFF_FFFF, 0x1FFF_FFFF, 0x1555_5555] {
            let raw = ((top << 29) | low) as i32;
            let expected = top == 1 || top == 2 || top == 3;
            assert_eq!(
                Fx32::from_raw(raw).spike_check(),
                expected,
                "bits {top:03b} low {low:#x}"
            );
        }
    }
    assert!(!Fx32::from_raw(0x1FFF_FFFF).spike_check());
    assert!(Fx32::from_raw(0x2000_0000).spike_check());
    assert!(Fx32::MAX.spike_check());
    assert!(!Fx32::MIN.spike_check());
    assert!(!Fx32::from_raw(-1).spike_check());
}
