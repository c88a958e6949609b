//! Cycle-approximate timing and resource estimates derived from engine
//! counters.
//!
//! PENC compression of the next plane overlaps accumulation of the current
//! one, so a layer costs `max(penc, accum) + activ + pipeline_overhead`.
//! Layers run strictly one after another, so the network latency is the sum.

use std::fmt::Write as _;

use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::engine::{LayerCounters, NetworkRun};
use crate::model::{ConvSpec, CoreConfig, DenseSpec, HardwareConfig, LayerSpec, NetworkSpec, Shape};
use crate::partition::workload;

pub const REPORT_FORMAT_VERSION: u32 = 1;

/// Calibration knobs of the timing model.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TimingKnobs {
    /// Spike-train bits the priority encoder scans per cycle.
    #[serde(default = "default_penc_width")]
    pub penc_width: usize,
    /// Pipeline fill cycles charged per `(t, c_in)` plane iteration.
    #[serde(default = "default_pipeline_fill")]
    pub pipeline_fill: u64,
}

fn default_penc_width() -> usize {
    32
}

fn default_pipeline_fill() -> u64 {
    4
}

impl Default for TimingKnobs {
    fn default() -> Self {
        TimingKnobs {
            penc_width: default_penc_width(),
            pipeline_fill: default_pipeline_fill(),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayerCycles {
    pub layer: usize,
    pub kind: String,
    pub penc_cycles: u64,
    pub accum_cycles: u64,
    pub activ_cycles: u64,
    pub pipeline_overhead_cycles: u64,
    pub layer_total: u64,
}

impl LayerCycles {
    fn finish(mut self) -> Self {
        self.layer_total = self.penc_cycles.max(self.accum_cycles) + self.activ_cycles + self.pipeline_overhead_cycles;
        self
    }
}

fn ceil_div(a: usize, b: usize) -> u64 {
    a.div_ceil(b) as u64
}

pub fn estimate_conv_cycles(
    counters: &LayerCounters,
    conv: &ConvSpec,
    out_shape: Shape,
    cores: CoreConfig,
    knobs: TimingKnobs,
) -> LayerCycles {
    let groups = ceil_div(conv.out_channels, cores.nc_count);
    let chunks = cores.chunk_count as u64;
    let events = counters.total_events();
    let planes = counters.plane_events.len() as u64;
    LayerCycles {
        layer: counters.layer,
        kind: "conv".into(),
        // Every chunk replays the full event list; out-of-chunk addresses
        // still occupy their address-generation slot.
        accum_cycles: groups * chunks * conv.taps() as u64 * events,
        penc_cycles: events + planes * ceil_div(counters.plane_bits, knobs.penc_width),
        activ_cycles: counters.timesteps as u64 * groups * out_shape.plane_len() as u64,
        pipeline_overhead_cycles: knobs.pipeline_fill * groups * chunks * planes,
        layer_total: 0,
    }
    .finish()
}

/// Dense layers read two 32-bit weights per URAM row, so each core
/// updates two neurons per cycle.
pub fn estimate_dense_cycles(
    counters: &LayerCounters,
    dense: &DenseSpec,
    cores: CoreConfig,
    knobs: TimingKnobs,
) -> LayerCycles {
    let events = counters.total_events();
    let steps = counters.plane_events.len() as u64;
    LayerCycles {
        layer: counters.layer,
        kind: "dense".into(),
        accum_cycles: ceil_div(dense.out_features, 2 * cores.nc_count) * events,
        penc_cycles: events + steps * ceil_div(dense.in_features, knobs.penc_width),
        activ_cycles: counters.timesteps as u64 * ceil_div(dense.out_features, cores.nc_count),
        pipeline_overhead_cycles: knobs.pipeline_fill * steps,
        layer_total: 0,
    }
    .finish()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CycleReport {
    pub layers: Vec<LayerCycles>,
    pub network_total: u64,
    pub clock_hz: u64,
    pub fps: f64,
}

impl CycleReport {
    pub fn new(layers: Vec<LayerCycles>, clock_hz: u64) -> Self {
        let network_total = layers.iter().map(|l| l.layer_total).sum();
        let fps = if network_total == 0 {
            0.0
        } else {
            clock_hz as f64 / network_total as f64
        };
        CycleReport {
            layers,
            network_total,
            clock_hz,
            fps,
        }
    }

    /// Frames per second as an exact ratio; `None` for an empty network.
    pub fn fps_exact(&self) -> Option<Ratio<u64>> {
        (self.network_total > 0).then(|| Ratio::new(self.clock_hz, self.network_total))
    }
}

/// On-chip storage implied by `(spec, hw)` alone.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayerResources {
    pub layer: usize,
    pub kind: String,
    /// Membrane potentials, 32 bits each, for every core's chunk.
    pub membrane_bits: u64,
    /// Conv filters held in flip-flops.
    pub weight_ff_bits: u64,
    /// Dense weights, two per 72-bit URAM row.
    pub uram_rows: u64,
    /// 4K-deep URAM tiles needed for `uram_rows`.
    pub uram_tiles: u64,
}

pub const URAM_DEPTH: u64 = 4096;

pub fn estimate_resources(spec: &NetworkSpec, hw: &HardwareConfig) -> Vec<LayerResources> {
    let shapes = spec.shapes();
    spec.compute_layers()
        .zip(&hw.layers)
        .map(|(i, cores)| {
            let n = cores.nc_count as u64;
            match &spec.layers()[i] {
                LayerSpec::Conv(c) => LayerResources {
                    layer: i,
                    kind: "conv".into(),
                    membrane_bits: n * 32 * ceil_div(shapes[i].plane_len(), cores.chunk_count),
                    weight_ff_bits: 32 * c.weight_len() as u64,
                    ..Default::default()
                },
                LayerSpec::Dense(d) => {
                    let rows = ceil_div(d.out_features, 2) * d.in_features as u64;
                    LayerResources {
                        layer: i,
                        kind: "dense".into(),
                        membrane_bits: n * 32 * ceil_div(d.out_features, cores.nc_count),
                        uram_rows: rows,
                        uram_tiles: rows.div_ceil(URAM_DEPTH),
                        ..Default::default()
                    }
                }
                LayerSpec::MaxPool { .. } => unreachable!("compute layers only"),
            }
        })
        .collect()
}

/// Cycle estimate of every layer of a completed run. Pooling is an OR gate
/// on the spike write path and costs no cycles.
pub fn estimate_cycles(spec: &NetworkSpec, hw: &HardwareConfig, run: &NetworkRun) -> CycleReport {
    let shapes = spec.shapes();
    let mut cores = hw.layers.iter();
    let layers = spec
        .layers()
        .iter()
        .zip(run.counters())
        .enumerate()
        .map(|(i, (layer, counters))| match layer {
            LayerSpec::Conv(c) => estimate_conv_cycles(counters, c, shapes[i], *cores.next().unwrap(), hw.timing),
            LayerSpec::Dense(d) => estimate_dense_cycles(counters, d, *cores.next().unwrap(), hw.timing),
            LayerSpec::MaxPool { .. } => LayerCycles {
                layer: i,
                kind: "maxpool".into(),
                ..Default::default()
            },
        })
        .collect();
    CycleReport::new(layers, hw.clock_hz())
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayerStats {
    pub layer: usize,
    pub kind: String,
    pub nc_count: Option<usize>,
    pub chunk_count: Option<usize>,
    pub input_spikes: u64,
    pub output_spikes: u64,
    pub accum_updates: u64,
    pub wrap_events: u64,
    pub workload: u64,
}

/// Everything `run` publishes about one image.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub format_version: u32,
    pub topology: String,
    pub seed: u64,
    pub timesteps: usize,
    pub predicted_class: usize,
    pub no_spike: bool,
    pub class_totals: Vec<u64>,
    pub layers: Vec<LayerStats>,
    pub cycles: CycleReport,
    pub resources: Vec<LayerResources>,
}

pub fn report(spec: &NetworkSpec, hw: &HardwareConfig, run: &NetworkRun, seed: u64) -> RunReport {
    let mut cores = hw.layers.iter();
    let layers = spec
        .layers()
        .iter()
        .zip(run.counters())
        .map(|(layer, c)| {
            let cfg = layer.is_compute().then(|| *cores.next().unwrap());
            LayerStats {
                layer: c.layer,
                kind: c.kind.clone(),
                nc_count: cfg.map(|h| h.nc_count),
                chunk_count: cfg.map(|h| h.chunk_count),
                input_spikes: c.input_spikes,
                output_spikes: c.output_spikes,
                accum_updates: c.accum_updates,
                wrap_events: c.wrap_events,
                workload: workload(c, layer),
            }
        })
        .collect();
    RunReport {
        format_version: REPORT_FORMAT_VERSION,
        topology: spec.render_topology(),
        seed,
        timesteps: spec.timesteps,
        predicted_class: run.decision.class,
        no_spike: run.decision.no_spike,
        class_totals: run.decision.class_totals.clone(),
        layers,
        cycles: estimate_cycles(spec, hw, run),
        resources: estimate_resources(spec, hw),
    }
}

impl RunReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes") + "\n"
    }

    /// Per-layer cycles and workload, one CSV row per layer.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "layer,kind,nc_count,chunk_count,input_spikes,output_spikes,workload,penc_cycles,accum_cycles,activ_cycles,pipeline_overhead_cycles,layer_total\n",
        );
        for (s, c) in self.layers.iter().zip(&self.cycles.layers) {
            let opt = |v: Option<usize>| v.map(|v| v.to_string()).unwrap_or_default();
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{},{},{}",
                s.layer,
                s.kind,
                opt(s.nc_count),
                opt(s.chunk_count),
                s.input_spikes,
                s.output_spikes,
                s.workload,
                c.penc_cycles,
                c.accum_cycles,
                c.activ_cycles,
                c.pipeline_overhead_cycles,
                c.layer_total
            );
        }
        out
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "topology   {}", self.topology);
        let _ = writeln!(out, "seed       {}", self.seed);
        let flag = if self.no_spike { " (no output spikes)" } else { "" };
        let _ = writeln!(out, "class      {}{flag}", self.predicted_class);
        let _ = writeln!(out);
        let _ = writeln!(
            out,
            "{:>5}  {:<7}  {:>3}  {:>5}  {:>9}  {:>9}  {:>10}  {:>9}  {:>10}  {:>9}  {:>8}  {:>10}",
            "layer", "kind", "nc", "chunk", "in_spk", "out_spk", "workload", "penc", "accum", "activ", "fill", "total"
        );
        for (s, c) in self.layers.iter().zip(&self.cycles.layers) {
            let opt = |v: Option<usize>| v.map(|v| v.to_string()).unwrap_or_else(|| "-".into());
            let _ = writeln!(
                out,
                "{:>5}  {:<7}  {:>3}  {:>5}  {:>9}  {:>9}  {:>10}  {:>9}  {:>10}  {:>9}  {:>8}  {:>10}",
                s.layer,
                s.kind,
                opt(s.nc_count),
                opt(s.chunk_count),
                s.input_spikes,
                s.output_spikes,
                s.workload,
                c.penc_cycles,
                c.accum_cycles,
                c.activ_cycles,
                c.pipeline_overhead_cycles,
                c.layer_total
            );
        }
        let _ = writeln!(out);
        let _ = writeln!(out, "latency    {} cycles", self.cycles.network_total);
        let _ = writeln!(
            out,
            "throughput {:.1} FPS at {} MHz",
            self.cycles.fps,
            self.cycles.clock_hz as f64 / 1e6
        );
        out
    }
}
