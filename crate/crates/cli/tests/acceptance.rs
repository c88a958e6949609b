//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any
//! criterion fails.

use std::fs;
use std::path::Path;
use std::process::Command;
use std::time::Instant;

use rand::Rng;

use pulse_core::codec::{penc_compress, rate_encode, BitPlane};
use pulse_core::engine::{run_model, run_spikes};
use pulse_core::model::{CoreConfig, HardwareConfig, LayerSpec, Model};
use pulse_core::oracle::forward_spikes;
use pulse_core::partition::{allocate, bottleneck, workload};
use pulse_core::perf::{estimate_cycles, report};
use pulse_core::synth::{self, calibration_image, calibration_model, hardware_variants, ModelLimits, NcChoice};
use pulse_core::Fx32;

const CALIBRATION_SEED: u64 = 0;
const CALIBRATION_IMAGES: usize = 16;
const TARGET_CYCLES: f64 = 131_700.0;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn random_models(count: usize) -> Vec<(Model, pulse_core::codec::SpikeTensor)> {
    let mut rng = synth::rng(0xACCE);
    (0..count)
        .map(|i| {
            let m = synth::random_model(&mut rng, ModelLimits::default());
            let img = synth::random_image(m.spec.input(), 1.0, &mut rng);
            let input = rate_encode(&img, m.spec.timesteps, i as u64).unwrap();
            (m, input)
        })
        .collect()
}

fn oracle_equivalence(models: &[(Model, pulse_core::codec::SpikeTensor)]) -> Outcome {
    let mut runs = 0;
    for (k, (m, input)) in models.iter().enumerate() {
        let oracle = forward_spikes(&m.spec, &m.weights, input.clone());
        for hw in hardware_variants(
            &m.spec,
            &[NcChoice::Fixed(1), NcChoice::Fixed(2), NcChoice::Full],
            &[1, 3],
        ) {
            let run = run_spikes(&m.spec, &m.weights, &hw, input.clone());
            let same = run.layers.iter().map(|l| &l.output).eq(oracle.layer_outputs.iter())
                && run.output_counts == oracle.output_counts
                && run.decision == oracle.decision;
            if !same {
                return outcome(
                    false,
                    format!("model {k} ({}) differs at {:?}", m.spec.render_topology(), hw.layers),
                );
            }
            runs += 1;
        }
    }
    outcome(
        true,
        format!("{} models, {runs} mappings, all bit-identical", models.len()),
    )
}

/// Uniform N over `1..=max cap` and chunks over `{1, 2, 3, 4, plane}`, plus
/// mixed per-layer assignments.
fn all_mappings(m: &Model, rng: &mut impl Rng) -> Vec<HardwareConfig> {
    let spec = &m.spec;
    let max_cap = spec
        .compute_layers()
        .map(|i| spec.layers()[i].max_cores())
        .max()
        .unwrap_or(1);
    let max_plane = spec.shapes().iter().map(|s| s.plane_len()).max().unwrap_or(1);
    let nc: Vec<NcChoice> = (1..=max_cap).map(NcChoice::Fixed).collect();
    let mut out = hardware_variants(spec, &nc, &[1, 2, 3, 4, max_plane]);
    let shapes = spec.shapes();
    for _ in 0..10 {
        let mut hw = HardwareConfig::naive(spec);
        for (cfg, i) in hw.layers.iter_mut().zip(spec.compute_layers()) {
            let layer = &spec.layers()[i];
            let chunks = match layer {
                LayerSpec::Conv(_) => rng.gen_range(1..=shapes[i].plane_len()),
                _ => 1,
            };
            *cfg = CoreConfig {
                nc_count: rng.gen_range(1..=layer.max_cores()),
                chunk_count: chunks,
            };
        }
        out.push(hw);
    }
    out
}

fn hardware_invariance(models: &[(Model, pulse_core::codec::SpikeTensor)]) -> Outcome {
    let mut rng = synth::rng(2);
    let mut mappings = 0;
    for (k, (m, input)) in models.iter().take(50).enumerate() {
        let base = run_spikes(&m.spec, &m.weights, &HardwareConfig::naive(&m.spec), input.clone());
        let base_w: Vec<u64> = base
            .counters()
            .zip(m.spec.layers())
            .map(|(c, l)| workload(c, l))
            .collect();
        for hw in all_mappings(m, &mut rng) {
            let run = run_spikes(&m.spec, &m.weights, &hw, input.clone());
            let w: Vec<u64> = run
                .counters()
                .zip(m.spec.layers())
                .map(|(c, l)| workload(c, l))
                .collect();
            let same = run
                .layers
                .iter()
                .map(|l| &l.output)
                .eq(base.layers.iter().map(|l| &l.output))
                && run.decision == base.decision
                && w == base_w;
            if !same {
                return outcome(false, format!("model {k} differs at {:?}", hw.layers));
            }
            mappings += 1;
        }
    }
    outcome(
        true,
        format!("50 models, {mappings} mappings, identical outputs and workloads"),
    )
}

fn penc_exhaustive() -> Outcome {
    let start = Instant::now();
    for v in 0u64..(1 << 16) {
        let plane = BitPlane::from_u64(v, 16);
        let events = penc_compress(plane.as_ref());
        if events.len() as u32 != v.count_ones() || events.scatter(16) != plane {
            return outcome(false, format!("plane {v:#06x} does not round-trip"));
        }
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(secs < 10.0, format!("65536 planes round-trip in {secs:.3} s"))
}

fn comparator() -> Outcome {
    let mut rng = synth::rng(4);
    let mut raws: Vec<i32> = (0..1_000_000).map(|_| rng.gen()).collect();
    for top in 0u32..8 {
        for low in [0u32, 1, 0x0FFF_FFFF, 0x1000_0000, 0x1FFF_FFFE, 0x1FFF_FFFF] {
            raws.push(((top << 29) | low) as i32);
        }
    }
    let failures = raws
        .iter()
        .filter(|&&r| Fx32::from_raw(r).spike_check() != (r >= 0x2000_0000))
        .count();
    outcome(failures == 0, format!("{} raws, {failures} failures", raws.len()))
}

fn brute_force(w: &[u64], budget: usize) -> (u64, u64) {
    fn go(w: &[u64], left: usize, cores: &mut Vec<usize>, best: &mut Option<(u64, u64)>) {
        if cores.len() == w.len() {
            let (_, r) = bottleneck(w, cores);
            let r = (*r.numer(), *r.denom());
            if best.is_none_or(|b| (r.0 as u128) * (b.1 as u128) < (b.0 as u128) * (r.1 as u128)) {
                *best = Some(r);
            }
            return;
        }
        let rest = w.len() - cores.len() - 1;
        for n in 1..=left - rest {
            cores.push(n);
            go(w, left - n, cores, best);
            cores.pop();
        }
    }
    let mut best = None;
    go(w, budget, &mut Vec::new(), &mut best);
    best.unwrap()
}

fn allocator_optimality() -> Outcome {
    let mut rng = synth::rng(5);
    for i in 0..1000 {
        let len = rng.gen_range(1..=4);
        let w: Vec<u64> = (0..len).map(|_| rng.gen_range(1..=50)).collect();
        let budget = rng.gen_range(len..=16);
        let a = allocate(&w, &vec![usize::MAX; len], budget).unwrap();
        let best = brute_force(&w, budget);
        if (a.bottleneck[0], a.bottleneck[1]) != best {
            return outcome(
                false,
                format!(
                    "sample {i}: W={w:?} B={budget} got {:?}, optimum {best:?}",
                    a.bottleneck
                ),
            );
        }
    }
    outcome(true, "1000 samples match exhaustive enumeration")
}

fn workload_cross_check(
    models: &[(Model, pulse_core::codec::SpikeTensor)],
    calibration: &[(Model, pulse_core::codec::SpikeTensor)],
) -> Outcome {
    let mut layers = 0;
    for (m, input) in models.iter().chain(calibration) {
        let hw = HardwareConfig::naive(&m.spec);
        let run = run_spikes(&m.spec, &m.weights, &hw, input.clone());
        let cycles = estimate_cycles(&m.spec, &hw, &run);
        for ((layer, c), cyc) in m.spec.layers().iter().zip(run.counters()).zip(&cycles.layers) {
            if let LayerSpec::Conv(_) = layer {
                if workload(c, layer) != cyc.accum_cycles {
                    return outcome(
                        false,
                        format!(
                            "layer {}: W {} vs accum {}",
                            c.layer,
                            workload(c, layer),
                            cyc.accum_cycles
                        ),
                    );
                }
                layers += 1;
            }
        }
    }
    outcome(
        true,
        format!("{layers} conv layers, W == accum_cycles at N = chunk = 1"),
    )
}

struct Calibration {
    mean_total: f64,
    min_total: u64,
    max_total: u64,
    mean_layer_cycles: Vec<f64>,
    mean_workload: Vec<(usize, String, f64)>,
    inputs: Vec<(Model, pulse_core::codec::SpikeTensor)>,
    secs: f64,
}

fn calibrate() -> Calibration {
    let start = Instant::now();
    let (model, mut rng) = calibration_model(CALIBRATION_SEED);
    let mut totals = Vec::new();
    let mut layer_cycles = vec![0.0; model.spec.layers().len()];
    let mut workloads = vec![0.0; model.spec.layers().len()];
    let mut inputs = Vec::new();
    for k in 0..CALIBRATION_IMAGES {
        let image = calibration_image(&model.spec, &mut rng);
        let run = run_model(&model, &image, 1000 + k as u64).unwrap();
        let rep = report(&model.spec, &model.hw, &run, 1000 + k as u64);
        totals.push(rep.cycles.network_total);
        for (acc, l) in layer_cycles.iter_mut().zip(&rep.cycles.layers) {
            *acc += l.layer_total as f64 / CALIBRATION_IMAGES as f64;
        }
        for (acc, l) in workloads.iter_mut().zip(&rep.layers) {
            *acc += l.workload as f64 / CALIBRATION_IMAGES as f64;
        }
        inputs.push((model.clone(), run.input));
    }
    let mean_workload = model
        .spec
        .layers()
        .iter()
        .enumerate()
        .filter(|(_, l)| l.is_compute())
        .map(|(i, l)| (i, l.name().to_string(), workloads[i]))
        .collect();
    Calibration {
        mean_total: totals.iter().sum::<u64>() as f64 / totals.len() as f64,
        min_total: *totals.iter().min().unwrap(),
        max_total: *totals.iter().max().unwrap(),
        mean_layer_cycles: layer_cycles,
        mean_workload,
        inputs,
        secs: start.elapsed().as_secs_f64(),
    }
}

fn calibration_band(c: &Calibration) -> Outcome {
    let (lo, hi) = (TARGET_CYCLES / 2.0, TARGET_CYCLES * 2.0);
    let per_layer: Vec<String> = c.mean_layer_cycles.iter().map(|x| format!("{x:.0}")).collect();
    outcome(
        (lo..=hi).contains(&c.mean_total) && c.secs < 60.0,
        format!(
            "mean network_total {:.0} cycles over {CALIBRATION_IMAGES} images (range {}..{}, per layer [{}]), band [{lo:.0}, {hi:.0}], {:.1} s",
            c.mean_total,
            c.min_total,
            c.max_total,
            per_layer.join(", "),
            c.secs
        ),
    )
}

fn conv2_dominance(c: &Calibration) -> Outcome {
    let conv2 = c.mean_workload.iter().filter(|(_, k, _)| k == "conv").nth(1).unwrap();
    let others_max = c
        .mean_workload
        .iter()
        .filter(|(i, _, _)| *i != conv2.0)
        .map(|(_, _, w)| *w)
        .fold(0.0, f64::max);
    let listing: Vec<String> = c
        .mean_workload
        .iter()
        .map(|(i, k, w)| format!("{k}@{i}={w:.0}"))
        .collect();
    outcome(conv2.2 > others_max, format!("mean W: {}", listing.join(", ")))
}

fn pulse(dir: &Path, args: &[&str]) -> std::process::Output {
    let out = Command::new(env!("CARGO_BIN_EXE_pulse"))
        .current_dir(dir)
        .args(args)
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "pulse {args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn pipeline(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let d = |p: &str| p.to_string();
    let pulse = |args: &[&str]| pulse(dir, args);
    let mut outputs = Vec::new();
    let mut keep = |name: &str, out: std::process::Output| outputs.push((name.to_string(), out.stdout));
    keep(
        "gen",
        pulse(&[
            "gen-random",
            "--topology",
            "16x16x2-8C3-8C3-P2-3",
            "--classes",
            "3",
            "--pop",
            "2",
            "--seed",
            "9",
            "--out-dir",
            &d("m"),
        ]),
    );
    let manifest = d("m/manifest.json");
    let input = d("m/input.bin");
    for fmt in ["json", "csv", "text"] {
        keep(
            "profile",
            pulse(&[
                "profile",
                "--manifest",
                &manifest,
                "--input",
                &input,
                "--input",
                &input,
                "--samples",
                "3",
                "--seed",
                "5",
                "--out-dir",
                &d("p"),
                "--format",
                fmt,
            ]),
        );
        keep(
            "partition",
            pulse(&[
                "partition",
                "--profile",
                &d("p/profile.json"),
                "--budget",
                "12",
                "--out-dir",
                &d("q"),
                "--format",
                fmt,
            ]),
        );
        keep(
            "run",
            pulse(&[
                "run",
                "--manifest",
                &manifest,
                "--input",
                &input,
                "--seed",
                "5",
                "--oracle-check",
                "--out-dir",
                &d("r"),
                "--dump-spikes",
                "--format",
                fmt,
            ]),
        );
    }
    let mut files: Vec<_> = ["m", "p", "q", "r", "r/spikes"]
        .iter()
        .flat_map(|sub| fs::read_dir(dir.join(sub)).unwrap().map(|e| e.unwrap().path()))
        .filter(|p| p.is_file())
        .collect();
    files.sort();
    for f in files {
        outputs.push((
            f.strip_prefix(dir).unwrap().display().to_string(),
            fs::read(&f).unwrap(),
        ));
    }
    outputs
}

fn cli_determinism() -> Outcome {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let first = pipeline(a.path());
    let second = pipeline(b.path());
    if first.len() != second.len() {
        return outcome(false, "different file sets");
    }
    for ((na, ba), (nb, bb)) in first.iter().zip(&second) {
        if na != nb || ba != bb {
            return outcome(false, format!("{na} differs between runs"));
        }
    }
    outcome(
        true,
        format!("{} outputs byte-identical across two full pipelines", first.len()),
    )
}

fn main() {
    let start = Instant::now();
    let models = random_models(200);
    let calibration = calibrate();
    let results = [
        ("1 oracle equivalence", oracle_equivalence(&models)),
        ("2 hardware-parameter invariance", hardware_invariance(&models)),
        ("3 PENC exhaustive", penc_exhaustive()),
        ("4 three-bit comparator", comparator()),
        ("5 allocator optimality", allocator_optimality()),
        (
            "6 workload vs accumulation cycles",
            workload_cross_check(&models, &calibration.inputs),
        ),
        ("7 calibration band", calibration_band(&calibration)),
        ("8 conv2 workload dominance", conv2_dominance(&calibration)),
        ("9 CLI determinism", cli_determinism()),
    ];
    let mut failed = 0;
    for (name, o) in &results {
        println!(
            "{} criterion {name}: {}",
            if o.pass { "PASS" } else { "FAIL" },
            o.detail
        );
        failed += !o.pass as usize;
    }
    println!(
        "{} of {} criteria passed in {:.1} s",
        results.len() - failed,
        results.len(),
        start.elapsed().as_secs_f64()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
