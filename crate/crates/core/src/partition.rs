//! Workload profiling and neural-core allocation.
//!
//! A profiling pass maps the network with one core and one chunk per layer
//! and records each layer's input spikes. The per-layer workload is then
//! `W_conv = F * C_out * sum(S_i)` or `W_dense = out_features * S`, and a
//! core budget is split across layers to minimize the slowest layer's
//! `W_l / N_l`.

use std::cmp::Ordering;
use std::fmt::Write as _;

use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::codec::Image;
use crate::engine::{run_network, LayerCounters};
use crate::error::{Error, Result};
use crate::model::{HardwareConfig, LayerSpec, NetworkSpec, Weights};

pub const PROFILE_FORMAT_VERSION: u32 = 1;

pub fn workload_from_spikes(layer: &LayerSpec, spikes: u64) -> u64 {
    match layer {
        LayerSpec::Conv(c) => (c.taps() * c.out_channels) as u64 * spikes,
        LayerSpec::Dense(d) => d.out_features as u64 * spikes,
        LayerSpec::MaxPool { .. } => 0,
    }
}

pub fn workload(counters: &LayerCounters, layer: &LayerSpec) -> u64 {
    workload_from_spikes(layer, counters.input_spikes)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayerWorkload {
    pub layer: usize,
    pub kind: String,
    /// Most cores the layer can use: `C_out` or `out_features`.
    pub max_cores: usize,
    /// Mean input spikes per image, rounded half up.
    pub spikes: u64,
    pub workload: u64,
}

/// Per compute layer workload averaged over a sample set.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WorkloadProfile {
    pub format_version: u32,
    pub topology: String,
    pub seed: u64,
    pub samples: usize,
    pub layers: Vec<LayerWorkload>,
}

impl WorkloadProfile {
    pub fn workloads(&self) -> Vec<u64> {
        self.layers.iter().map(|l| l.workload).collect()
    }

    pub fn caps(&self) -> Vec<usize> {
        self.layers.iter().map(|l| l.max_cores).collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("profile serializes") + "\n"
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("layer,kind,spikes,workload,share\n");
        let total: u64 = self.layers.iter().map(|l| l.workload).sum();
        for l in &self.layers {
            let share = if total == 0 {
                0.0
            } else {
                l.workload as f64 / total as f64
            };
            let _ = writeln!(out, "{},{},{},{},{share:.6}", l.layer, l.kind, l.spikes, l.workload);
        }
        out
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("{:>5}  {:<6}  {:>10}  {:>12}\n", "layer", "kind", "spikes", "workload");
        for l in &self.layers {
            let _ = writeln!(
                out,
                "{:>5}  {:<6}  {:>10}  {:>12}",
                l.layer, l.kind, l.spikes, l.workload
            );
        }
        out
    }
}

/// Naive mapping pass: every sample runs with one core and one chunk per
/// layer. Sample `i` is encoded with `seed + i`.
pub fn profile(spec: &NetworkSpec, weights: &Weights, samples: &[Image], seed: u64) -> Result<WorkloadProfile> {
    if samples.is_empty() {
        return Err(Error::Validation("profiling needs at least one sample".into()));
    }
    let hw = HardwareConfig::naive(spec);
    let compute: Vec<usize> = spec.compute_layers().collect();
    let mut sums = vec![0u64; compute.len()];
    for (i, image) in samples.iter().enumerate() {
        let run = run_network(spec, weights, &hw, image, seed.wrapping_add(i as u64))?;
        for (sum, &li) in sums.iter_mut().zip(&compute) {
            *sum += run.layers[li].counters.input_spikes;
        }
    }
    let n = samples.len() as u64;
    let layers = compute
        .iter()
        .zip(sums)
        .map(|(&li, sum)| {
            let layer = &spec.layers()[li];
            let spikes = (2 * sum + n) / (2 * n);
            LayerWorkload {
                layer: li,
                kind: layer.name().into(),
                max_cores: layer.max_cores(),
                spikes,
                workload: workload_from_spikes(layer, spikes),
            }
        })
        .collect();
    Ok(WorkloadProfile {
        format_version: PROFILE_FORMAT_VERSION,
        topology: spec.render_topology(),
        seed,
        samples: samples.len(),
        layers,
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Allocation {
    pub nc_count: Vec<usize>,
    /// Index of the layer attaining the min-max objective.
    pub bottleneck_layer: usize,
    /// `max_l W_l / N_l`, as an exact fraction `[numer, denom]`.
    pub bottleneck: [u64; 2],
}

impl Allocation {
    pub fn bottleneck_value(&self) -> f64 {
        self.bottleneck[0] as f64 / self.bottleneck[1] as f64
    }
}

/// `max_l W_l / N_l` and the first layer attaining it.
pub fn bottleneck(workloads: &[u64], cores: &[usize]) -> (usize, Ratio<u64>) {
    assert_eq!(workloads.len(), cores.len());
    let mut best = (0, Ratio::from_integer(0));
    for (i, (&w, &n)) in workloads.iter().zip(cores).enumerate() {
        let r = Ratio::new(w, n as u64);
        if r > best.1 {
            best = (i, r);
        }
    }
    best
}

/// `a` is strictly more loaded per core than `b`.
fn heavier((wa, na): (u64, usize), (wb, nb): (u64, usize)) -> bool {
    (wa as u128 * nb as u128).cmp(&(wb as u128 * na as u128)) == Ordering::Greater
}

/// Water-filling: start every layer at one core, then repeatedly grant a
/// core to the most loaded layer (`W_l / N_l`, earliest on ties) that is
/// still below its cap, until the budget is spent or every layer is capped.
pub fn allocate(workloads: &[u64], caps: &[usize], budget: usize) -> Result<Allocation> {
    assert_eq!(workloads.len(), caps.len());
    if workloads.is_empty() {
        return Err(Error::Allocation("no layers to allocate".into()));
    }
    if budget < workloads.len() {
        return Err(Error::Allocation(format!(
            "budget {budget} is below the layer count {}",
            workloads.len()
        )));
    }
    if let Some(i) = caps.iter().position(|&c| c == 0) {
        return Err(Error::Allocation(format!("layer {i} has a zero core cap")));
    }
    let mut cores = vec![1usize; workloads.len()];
    for _ in workloads.len()..budget {
        let mut pick: Option<usize> = None;
        for i in (0..workloads.len()).filter(|&i| cores[i] < caps[i]) {
            if pick.is_none_or(|p| heavier((workloads[i], cores[i]), (workloads[p], cores[p]))) {
                pick = Some(i);
            }
        }
        match pick {
            Some(i) => cores[i] += 1,
            None => break,
        }
    }
    let (bottleneck_layer, value) = bottleneck(workloads, &cores);
    Ok(Allocation {
        nc_count: cores,
        bottleneck_layer,
        bottleneck: [*value.numer(), *value.denom()],
    })
}
