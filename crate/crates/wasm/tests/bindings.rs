use pulse_wasm::{allocate_cores, penc, simulate};
use serde_json::{json, Value};

fn parse(s: &str) -> Value {
    serde_json::from_str(s).unwrap()
}

#[test]
fn penc_lists_lowest_bit_first() {
    let r = parse(&penc("0110 1000", 4).unwrap());
    assert_eq!(r["events"], json!([1, 2, 4]));
    assert_eq!(r["steps"][0]["remaining"], "00101000");
    assert_eq!(r["steps"][2]["remaining"], "00000000");
    assert_eq!(r["scan_cycles"], 3 + 2);
    assert!(penc("01x", 4).is_err());
    assert!(penc("", 4).is_err());
}

#[test]
fn allocation_round_trip() {
    let r = parse(&allocate_cores(r#"{"workloads": [90, 10], "budget": 10}"#).unwrap());
    assert_eq!(r["nc_count"], json!([9, 1]));
    assert_eq!(r["bottleneck"], 10.0);
    assert!(allocate_cores(r#"{"workloads": [1, 2, 3], "budget": 2}"#).is_err());
    assert!(allocate_cores(r#"{"workloads": [1], "caps": [1, 2], "budget": 2}"#).is_err());
}

#[test]
fn small_simulation_matches_oracle() {
    let r = parse(&simulate(r#"{"topology": "10x10-4C3-P2-3", "classes": 3, "seed": 4, "density": 0.3}"#).unwrap());
    assert_eq!(r["oracle_match"], true);
    assert_eq!(r["workloads"].as_array().unwrap().len(), 2);
    assert_eq!(r["report"]["format_version"], 1);
    assert!(simulate(r#"{"topology": "10x10-4C3-3", "classes": 2}"#).is_err());
    assert!(simulate(r#"{"topology": "10x10-4C3-P2-3", "classes": 3, "density": 1.5}"#).is_err());
}

#[test]
fn calibration_preset_runs() {
    let r = parse(&simulate(r#"{"topology": "calibration", "nc_count": [8, 32, 4, 2]}"#).unwrap());
    assert_eq!(r["oracle_match"], true);
    assert_eq!(r["report"]["layers"][1]["nc_count"], 32);
}

#[test]
fn simulation_is_deterministic() {
    let req = r#"{"topology": "12x12x2-6C3-6C3-P2-4", "classes": 4, "pop_per_class": 2, "seed": 8}"#;
    assert_eq!(simulate(req).unwrap(), simulate(req).unwrap());
}
