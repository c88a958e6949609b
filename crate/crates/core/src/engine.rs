//! Event-driven inference core.
//!
//! Each compute layer is unrolled over `N` neural cores along the output
//! channel axis: core `k` owns every OFM `o` with `o % N == k`. A core keeps
//! one membrane array per OFM chunk, replays the PENC event lists of every
//! `(timestep, input channel)` plane against it, then runs the LIF
//! activation (bias, threshold, soft reset, leak) once per timestep.

use serde::{Deserialize, Serialize};

use crate::codec::{index_to_coords, penc_compress, pop_decode, rate_encode, Decision, EventList, Image, SpikeTensor};
use crate::error::Result;
use crate::fxp::Fx32;
use crate::model::{
    ConvSpec, CoreConfig, DenseSpec, HardwareConfig, LayerParams, LayerSpec, Model, NetworkSpec, Padding, Shape,
    Weights,
};

/// One membrane update produced by the address generator: output neuron
/// `neuron` receives filter tap `tap`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Update {
    pub tap: (usize, usize),
    pub neuron: (usize, usize),
}

/// Calls `f(kr, kc, nr, nc)` for every output neuron that a spike at
/// `(row, col)` touches. This is cross-correlation in scatter form: neuron
/// `(r + pad - kr, c + pad - kc)` gets `w[kr][kc]`, out-of-map neurons are
/// dropped.
#[inline]
pub fn for_each_affected(
    (row, col): (usize, usize),
    kernel: usize,
    padding: Padding,
    (out_h, out_w): (usize, usize),
    mut f: impl FnMut(usize, usize, usize, usize),
) {
    let pad = match padding {
        Padding::Same => (kernel - 1) / 2,
        Padding::Valid => 0,
    };
    let (r, c) = (row + pad, col + pad);
    for kr in 0..kernel {
        let Some(nr) = r.checked_sub(kr).filter(|&nr| nr < out_h) else {
            continue;
        };
        for kc in 0..kernel {
            if let Some(nc) = c.checked_sub(kc).filter(|&nc| nc < out_w) {
                f(kr, kc, nr, nc);
            }
        }
    }
}

pub fn affected_updates(spike: (usize, usize), kernel: usize, padding: Padding, ofm: (usize, usize)) -> Vec<Update> {
    let mut out = Vec::with_capacity(kernel * kernel);
    for_each_affected(spike, kernel, padding, ofm, |kr, kc, nr, nc| {
        out.push(Update {
            tap: (kr, kc),
            neuron: (nr, nc),
        })
    });
    out
}

/// Performance counters of one layer for one image.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayerCounters {
    pub layer: usize,
    pub kind: String,
    pub timesteps: usize,
    /// Planes fed to PENC per timestep: input channels for conv, 1 for dense.
    pub planes_per_step: usize,
    /// Bits per PENC plane.
    pub plane_bits: usize,
    /// Popcount of the layer's input tensor (sum of `S_i`).
    pub input_spikes: u64,
    /// PENC output length per plane, `[t][plane]` row-major.
    pub plane_events: Vec<u64>,
    pub accum_updates: u64,
    pub core_updates: Vec<u64>,
    pub activations: u64,
    pub wrap_events: u64,
    pub output_spikes: u64,
}

impl LayerCounters {
    pub fn total_events(&self) -> u64 {
        self.plane_events.iter().sum()
    }
}

/// Row-major span `[start, end)` of chunk `k` when a plane of `len` neurons
/// is split into `chunks` pieces of `ceil(len / chunks)`.
pub fn chunk_range(len: usize, chunks: usize, k: usize) -> std::ops::Range<usize> {
    let size = len.div_ceil(chunks);
    let start = (k * size).min(len);
    start..((k + 1) * size).min(len)
}

/// LIF activation of one neuron at the end of a timestep: add bias, fire
/// if `u >= 1.0` and soft-reset, then leak by `beta`.
#[inline]
fn activate(u: &mut Fx32, bias: Fx32, beta: Fx32, wraps: &mut u64) -> bool {
    let (v, wrapped) = u.overflowing_add(bias);
    *wraps += wrapped as u64;
    let fired = v.spike_check();
    let v = if fired { v.soft_reset() } else { v };
    *u = beta * v;
    fired
}

/// PENC every `(t, c)` plane of `input`, `[t][c]` row-major.
pub fn compress_planes(input: &SpikeTensor) -> Vec<EventList> {
    let c = input.shape().channels;
    (0..input.timesteps() * c)
        .map(|p| penc_compress(input.plane(p / c, p % c)))
        .collect()
}

pub fn run_conv_layer(
    input: &SpikeTensor,
    conv: &ConvSpec,
    params: &LayerParams,
    cores: CoreConfig,
    beta: Fx32,
) -> (SpikeTensor, LayerCounters) {
    let events = compress_planes(input);
    run_conv_events(input.timesteps(), input.shape(), &events, conv, params, cores, beta)
}

/// Convolution over precomputed event lists, one per `(t, c_in)` plane.
/// The lists need not be sorted.
pub fn run_conv_events(
    timesteps: usize,
    in_shape: Shape,
    events: &[EventList],
    conv: &ConvSpec,
    params: &LayerParams,
    cores: CoreConfig,
    beta: Fx32,
) -> (SpikeTensor, LayerCounters) {
    assert_eq!(in_shape.channels, conv.in_channels);
    assert_eq!(events.len(), timesteps * conv.in_channels);
    let (out_h, out_w) = match conv.padding {
        Padding::Same => (in_shape.height, in_shape.width),
        Padding::Valid => (in_shape.height + 1 - conv.kernel, in_shape.width + 1 - conv.kernel),
    };
    let out_shape = Shape::new(conv.out_channels, out_h, out_w);
    let plane = out_shape.plane_len();
    let mut output = SpikeTensor::zeros(timesteps, out_shape);
    let mut counters = LayerCounters {
        kind: "conv".into(),
        timesteps,
        planes_per_step: conv.in_channels,
        plane_bits: in_shape.plane_len(),
        plane_events: events.iter().map(|e| e.len() as u64).collect(),
        core_updates: vec![0; cores.nc_count],
        ..Default::default()
    };
    counters.input_spikes = counters.total_events();

    // Event coordinates are shared by every core.
    let coords: Vec<Vec<(usize, usize)>> = events
        .iter()
        .map(|list| list.iter().map(|i| index_to_coords(i, in_shape.width)).collect())
        .collect();

    let mut membrane = Vec::with_capacity(plane.div_ceil(cores.chunk_count));
    for core in 0..cores.nc_count {
        for ofm in (core..conv.out_channels).step_by(cores.nc_count) {
            let bias = params.bias[ofm];
            for chunk in 0..cores.chunk_count {
                let span = chunk_range(plane, cores.chunk_count, chunk);
                membrane.clear();
                membrane.resize(span.len(), Fx32::ZERO);
                for t in 0..timesteps {
                    for ifm in 0..conv.in_channels {
                        let taps = &params.weights[(ofm * conv.in_channels + ifm) * conv.taps()..][..conv.taps()];
                        for &spike in &coords[t * conv.in_channels + ifm] {
                            for_each_affected(spike, conv.kernel, conv.padding, (out_h, out_w), |kr, kc, nr, nc| {
                                let idx = nr * out_w + nc;
                                if span.contains(&idx) {
                                    let u = &mut membrane[idx - span.start];
                                    let (v, wrapped) = u.overflowing_add(taps[kr * conv.kernel + kc]);
                                    *u = v;
                                    counters.wrap_events += wrapped as u64;
                                    counters.core_updates[core] += 1;
                                }
                            });
                        }
                    }
                    for (offset, u) in membrane.iter_mut().enumerate() {
                        if activate(u, bias, beta, &mut counters.wrap_events) {
                            output.set_index(t, ofm, span.start + offset);
                        }
                    }
                    counters.activations += span.len() as u64;
                }
            }
        }
    }
    counters.accum_updates = counters.core_updates.iter().sum();
    counters.output_spikes = output.total_spikes();
    (output, counters)
}

pub fn run_dense_layer(
    input: &SpikeTensor,
    dense: &DenseSpec,
    params: &LayerParams,
    cores: CoreConfig,
    beta: Fx32,
) -> (SpikeTensor, LayerCounters) {
    assert_eq!(input.shape().len(), dense.in_features);
    let timesteps = input.timesteps();
    let events: Vec<EventList> = (0..timesteps)
        .map(|t| penc_compress(input.flatten_timestep(t).as_ref()))
        .collect();
    run_dense_events(timesteps, &events, dense, params, cores, beta)
}

/// Dense layer over one event list per timestep, indices into the
/// flattened input.
pub fn run_dense_events(
    timesteps: usize,
    events: &[EventList],
    dense: &DenseSpec,
    params: &LayerParams,
    cores: CoreConfig,
    beta: Fx32,
) -> (SpikeTensor, LayerCounters) {
    assert_eq!(events.len(), timesteps);
    let mut output = SpikeTensor::zeros(timesteps, Shape::new(dense.out_features, 1, 1));
    let mut counters = LayerCounters {
        kind: "dense".into(),
        timesteps,
        planes_per_step: 1,
        plane_bits: dense.in_features,
        plane_events: events.iter().map(|e| e.len() as u64).collect(),
        core_updates: vec![0; cores.nc_count],
        ..Default::default()
    };
    counters.input_spikes = counters.total_events();

    for core in 0..cores.nc_count {
        let neurons: Vec<usize> = (core..dense.out_features).step_by(cores.nc_count).collect();
        let mut membrane = vec![Fx32::ZERO; neurons.len()];
        for (t, list) in events.iter().enumerate() {
            for i in list.iter() {
                for (u, &j) in membrane.iter_mut().zip(&neurons) {
                    let (v, wrapped) = u.overflowing_add(params.weights[j * dense.in_features + i]);
                    *u = v;
                    counters.wrap_events += wrapped as u64;
                }
                counters.core_updates[core] += neurons.len() as u64;
            }
            for (u, &j) in membrane.iter_mut().zip(&neurons) {
                if activate(u, params.bias[j], beta, &mut counters.wrap_events) {
                    output.set_index(t, j, 0);
                }
            }
            counters.activations += neurons.len() as u64;
        }
    }
    counters.accum_updates = counters.core_updates.iter().sum();
    counters.output_spikes = output.total_spikes();
    (output, counters)
}

/// OR-gate max pooling with window and stride `window`; ragged borders are
/// dropped.
pub fn run_maxpool(input: &SpikeTensor, window: usize) -> SpikeTensor {
    let s = input.shape();
    let out_shape = Shape::new(s.channels, s.height / window, s.width / window);
    let mut out = SpikeTensor::zeros(input.timesteps(), out_shape);
    for t in 0..input.timesteps() {
        for c in 0..s.channels {
            let plane = input.plane(t, c);
            for y in 0..out_shape.height {
                for x in 0..out_shape.width {
                    let fired = (0..window)
                        .any(|dy| (0..window).any(|dx| plane.get((window * y + dy) * s.width + window * x + dx)));
                    if fired {
                        out.set_index(t, c, y * out_shape.width + x);
                    }
                }
            }
        }
    }
    out
}

/// Output and counters of one layer.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LayerRun {
    pub output: SpikeTensor,
    pub counters: LayerCounters,
}

/// Result of one image through the whole network.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NetworkRun {
    pub input: SpikeTensor,
    pub layers: Vec<LayerRun>,
    /// Per-neuron spike totals of the final layer, flattened.
    pub output_counts: Vec<u64>,
    pub decision: Decision,
}

impl NetworkRun {
    pub fn counters(&self) -> impl Iterator<Item = &LayerCounters> {
        self.layers.iter().map(|l| &l.counters)
    }
}

/// Rate-encode `image` and run it through the network, layer by layer.
pub fn run_network(
    spec: &NetworkSpec,
    weights: &Weights,
    hw: &HardwareConfig,
    image: &Image,
    seed: u64,
) -> Result<NetworkRun> {
    let input = rate_encode(image, spec.timesteps, seed)?;
    Ok(run_spikes(spec, weights, hw, input))
}

pub fn run_model(model: &Model, image: &Image, seed: u64) -> Result<NetworkRun> {
    run_network(&model.spec, &model.weights, &model.hw, image, seed)
}

/// Run an already-encoded input. Each layer consumes its predecessor's full
/// multi-timestep output before the next layer starts.
pub fn run_spikes(spec: &NetworkSpec, weights: &Weights, hw: &HardwareConfig, input: SpikeTensor) -> NetworkRun {
    assert_eq!(input.shape(), spec.input(), "input tensor does not match the network");
    let mut layers: Vec<LayerRun> = Vec::with_capacity(spec.layers().len());
    let mut cores = hw.layers.iter();
    for (i, layer) in spec.layers().iter().enumerate() {
        let current = layers.last().map_or(&input, |l| &l.output);
        let (output, mut counters) = match layer {
            LayerSpec::Conv(conv) => {
                let params = weights.layers[i].as_ref().expect("conv weights");
                run_conv_layer(current, conv, params, *cores.next().expect("core config"), spec.beta)
            }
            LayerSpec::Dense(dense) => {
                let params = weights.layers[i].as_ref().expect("dense weights");
                run_dense_layer(current, dense, params, *cores.next().expect("core config"), spec.beta)
            }
            LayerSpec::MaxPool { window } => {
                let output = run_maxpool(current, *window);
                let counters = LayerCounters {
                    kind: "maxpool".into(),
                    timesteps: current.timesteps(),
                    input_spikes: current.total_spikes(),
                    output_spikes: output.total_spikes(),
                    ..Default::default()
                };
                (output, counters)
            }
        };
        counters.layer = i;
        layers.push(LayerRun { output, counters });
    }
    let output_counts = layers.last().map_or(&input, |l| &l.output).neuron_totals();
    let decision = pop_decode(&output_counts, spec.classes, spec.pop_per_class);
    NetworkRun {
        input,
        layers,
        output_counts,
        decision,
    }
}
