//! Browser bindings: priority-encoder walk-through, core allocation and a
//! small end-to-end simulation. Every function takes and returns JSON text.

use serde::{Deserialize, Serialize};
use wasm_bindgen::prelude::*;

use pulse_core::codec::{penc_compress, BitPlane};
use pulse_core::engine::run_spikes;
use pulse_core::model::{HardwareConfig, LayerSpec, Model, NetworkSpec};
use pulse_core::oracle::forward_spikes;
use pulse_core::partition::{allocate, workload};
use pulse_core::perf::{report, RunReport};
use pulse_core::synth;
use pulse_core::Fx32;

#[derive(Serialize)]
struct PencStep {
    event: usize,
    remaining: String,
}

#[derive(Serialize)]
struct PencResult {
    bits: usize,
    popcount: usize,
    events: Vec<u32>,
    steps: Vec<PencStep>,
    scan_cycles: u64,
}

fn render(plane: &BitPlane) -> String {
    (0..plane.len()).map(|i| if plane.get(i) { '1' } else { '0' }).collect()
}

/// Compress a spike train given as a `0`/`1` string (index 0 first) and
/// list every intermediate state of the priority encoder.
#[wasm_bindgen]
pub fn penc(bits: &str, penc_width: usize) -> Result<String, String> {
    let bools = bits
        .chars()
        .filter(|c| !c.is_whitespace())
        .map(|c| match c {
            '0' => Ok(false),
            '1' => Ok(true),
            other => Err(format!("unexpected character {other:?}; use 0 and 1")),
        })
        .collect::<Result<Vec<bool>, String>>()?;
    if bools.is_empty() || penc_width == 0 {
        return Err("need at least one bit and a positive width".into());
    }
    let mut plane = BitPlane::from_bools(&bools);
    let events = penc_compress(plane.as_ref());
    let mut steps = Vec::with_capacity(events.len());
    for e in events.iter() {
        plane.set(e, false);
        steps.push(PencStep {
            event: e,
            remaining: render(&plane),
        });
    }
    let result = PencResult {
        bits: bools.len(),
        popcount: events.len(),
        scan_cycles: events.len() as u64 + bools.len().div_ceil(penc_width) as u64,
        events: events.into_inner(),
        steps,
    };
    Ok(serde_json::to_string(&result).unwrap())
}

#[derive(Deserialize)]
struct AllocateRequest {
    workloads: Vec<u64>,
    #[serde(default)]
    caps: Option<Vec<usize>>,
    budget: usize,
}

#[derive(Serialize)]
struct AllocateResult {
    nc_count: Vec<usize>,
    bottleneck_layer: usize,
    bottleneck: f64,
    per_core: Vec<f64>,
}

/// Min-max core allocation: `{"workloads": [...], "caps": [...]?, "budget": B}`.
#[wasm_bindgen]
pub fn allocate_cores(request: &str) -> Result<String, String> {
    let req: AllocateRequest = serde_json::from_str(request).map_err(|e| e.to_string())?;
    let caps = req.caps.unwrap_or_else(|| vec![usize::MAX; req.workloads.len()]);
    if caps.len() != req.workloads.len() {
        return Err("caps and workloads differ in length".into());
    }
    let a = allocate(&req.workloads, &caps, req.budget).map_err(|e| e.to_string())?;
    let result = AllocateResult {
        per_core: req
            .workloads
            .iter()
            .zip(&a.nc_count)
            .map(|(&w, &n)| w as f64 / n as f64)
            .collect(),
        bottleneck: a.bottleneck_value(),
        bottleneck_layer: a.bottleneck_layer,
        nc_count: a.nc_count,
    };
    Ok(serde_json::to_string(&result).unwrap())
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SimulateRequest {
    /// `"calibration"` for the 28x28 four-layer network with
    /// activity-normalized weights; otherwise a topology string.
    topology: String,
    #[serde(default = "one")]
    classes: usize,
    #[serde(default = "one")]
    pop_per_class: usize,
    #[serde(default = "three")]
    timesteps: usize,
    #[serde(default = "half")]
    beta: String,
    #[serde(default)]
    nc_count: Option<Vec<usize>>,
    #[serde(default)]
    seed: u64,
    /// Fraction of lit pixels in the random binary input.
    #[serde(default = "density")]
    density: f64,
}

fn one() -> usize {
    1
}
fn three() -> usize {
    3
}
fn half() -> String {
    "0.5".into()
}
fn density() -> f64 {
    0.11
}

#[derive(Serialize)]
struct SimulateResult {
    report: RunReport,
    /// Per compute layer `[layer, workload, max_cores]`.
    workloads: Vec<[u64; 3]>,
    oracle_match: bool,
}

fn build_model(req: &SimulateRequest, rng: &mut synth::SynthRng) -> Result<Model, String> {
    if req.topology == "calibration" {
        let (model, r) = synth::calibration_model(req.seed);
        *rng = r;
        return Ok(model);
    }
    let e = |e: pulse_core::Error| e.to_string();
    let topology = pulse_core::model::parse_topology(&req.topology, req.pop_per_class).map_err(e)?;
    let beta = Fx32::from_decimal_str(&req.beta).map_err(e)?;
    let spec = NetworkSpec::new(topology, req.timesteps, beta, req.classes, req.pop_per_class).map_err(e)?;
    let weights = synth::random_weights(&spec, -1.0, 1.0, rng);
    let hw = HardwareConfig::naive(&spec);
    Model::new(spec, weights, hw).map_err(e)
}

/// Simulate one random binary image through a random-weight network and
/// report predicted class, per-layer cycles and workloads, and whether the
/// engine agrees with the dense reference.
#[wasm_bindgen]
pub fn simulate(request: &str) -> Result<String, String> {
    let req: SimulateRequest = serde_json::from_str(request).map_err(|e| e.to_string())?;
    if !(0.0..=1.0).contains(&req.density) {
        return Err("density must lie in [0, 1]".into());
    }
    let mut rng = synth::rng(req.seed);
    let mut model = build_model(&req, &mut rng)?;
    if let Some(n) = &req.nc_count {
        let hw = model.hw.clone().with_nc_counts(n);
        if n.len() != hw.layers.len() {
            return Err(format!("nc_count needs {} entries", hw.layers.len()));
        }
        model = Model::new(model.spec, model.weights, hw).map_err(|e| e.to_string())?;
    }
    let image = synth::binary_image(model.spec.input(), req.density, &mut rng);
    let input = pulse_core::codec::rate_encode(&image, model.spec.timesteps, req.seed).map_err(|e| e.to_string())?;
    let run = run_spikes(&model.spec, &model.weights, &model.hw, input.clone());
    let oracle = forward_spikes(&model.spec, &model.weights, input);
    let oracle_match =
        run.layers.iter().map(|l| &l.output).eq(oracle.layer_outputs.iter()) && run.decision == oracle.decision;
    let workloads = model
        .spec
        .layers()
        .iter()
        .zip(run.counters())
        .filter(|(l, _)| !matches!(l, LayerSpec::MaxPool { .. }))
        .map(|(l, c)| [c.layer as u64, workload(c, l), l.max_cores() as u64])
        .collect();
    let result = SimulateResult {
        report: report(&model.spec, &model.hw, &run, req.seed),
        workloads,
        oracle_match,
    };
    Ok(serde_json::to_string(&result).unwrap())
}
