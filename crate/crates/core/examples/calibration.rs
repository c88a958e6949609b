//! Simulates the 28x28 calibration network on synthetic sparse inputs and
//! prints the first image's cycle table plus the mean latency.
//!
//! `cargo run --release -p pulse-core --example calibration -- [seed] [images]`

use pulse_core::engine::run_model;
use pulse_core::perf::report;
use pulse_core::synth::{calibration_image, calibration_model};

fn main() {
    let mut args = std::env::args()
        .skip(1)
        .map(|s| s.parse::<u64>().expect("integer argument"));
    let seed = args.next().unwrap_or(0);
    let images = args.next().unwrap_or(16).max(1);
    let (model, mut rng) = calibration_model(seed);
    let mut totals = Vec::new();
    for k in 0..images {
        let image = calibration_image(&model.spec, &mut rng);
        let run = run_model(&model, &image, 1000 + k).expect("calibration run");
        let rep = report(&model.spec, &model.hw, &run, 1000 + k);
        if k == 0 {
            print!("{}", rep.to_text());
        }
        totals.push(rep.cycles.network_total);
    }
    let mean = totals.iter().sum::<u64>() as f64 / totals.len() as f64;
    println!(
        "\nmean latency over {images} images: {mean:.0} cycles (min {}, max {})",
        totals.iter().min().unwrap(),
        totals.iter().max().unwrap()
    );
}
