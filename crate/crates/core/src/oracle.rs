//! Dense reference forward pass.
//!
//! No events, cores or chunks: every timestep gathers each output neuron's
//! synaptic input by walking its full receptive field in row-major order.
//! It shares the Q3.29 datapath with the engine, so agreement is exact.

use serde::{Deserialize, Serialize};

use crate::codec::{pop_decode, rate_encode, Decision, Image, SpikeTensor};
use crate::error::Result;
use crate::fxp::Fx32;
use crate::model::{LayerParams, LayerSpec, NetworkSpec, Padding, Shape, Weights};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OracleRun {
    pub input: SpikeTensor,
    pub layer_outputs: Vec<SpikeTensor>,
    pub output_counts: Vec<u64>,
    pub decision: Decision,
}

/// Synaptic input of every output neuron at timestep `t`, flattened
/// `[C_out][H][W]`, in Q3.29 and in exact real arithmetic.
fn synaptic_input(
    layer: &LayerSpec,
    params: &LayerParams,
    input: &SpikeTensor,
    out: Shape,
    t: usize,
) -> (Vec<Fx32>, Vec<f64>) {
    let mut fx = vec![Fx32::ZERO; out.len()];
    let mut real = vec![0.0; out.len()];
    let ins = input.shape();
    match layer {
        LayerSpec::Conv(conv) => {
            let k = conv.kernel as isize;
            let pad = match conv.padding {
                Padding::Same => (k - 1) / 2,
                Padding::Valid => 0,
            };
            for o in 0..out.channels {
                for y in 0..out.height {
                    for x in 0..out.width {
                        let n = (o * out.height + y) * out.width + x;
                        for ci in 0..ins.channels {
                            for kr in 0..k {
                                for kc in 0..k {
                                    let iy = y as isize - pad + kr;
                                    let ix = x as isize - pad + kc;
                                    if iy < 0 || ix < 0 || iy >= ins.height as isize || ix >= ins.width as isize {
                                        continue;
                                    }
                                    if input.get(t, ci, iy as usize, ix as usize) {
                                        let w = params.conv_weight(conv, o, ci, kr as usize, kc as usize);
                                        fx[n] = fx[n] + w;
                                        real[n] += w.to_f64();
                                    }
                                }
                            }
                        }
                    }
                }
            }
        }
        LayerSpec::Dense(dense) => {
            let flat: Vec<bool> = (0..ins.channels)
                .flat_map(|c| (0..ins.height).flat_map(move |y| (0..ins.width).map(move |x| (c, y, x))))
                .map(|(c, y, x)| input.get(t, c, y, x))
                .collect();
            for j in 0..dense.out_features {
                for (i, _) in flat.iter().enumerate().filter(|(_, &s)| s) {
                    let w = params.weights[j * dense.in_features + i];
                    fx[j] = fx[j] + w;
                    real[j] += w.to_f64();
                }
            }
        }
        LayerSpec::MaxPool { .. } => unreachable!("pooling has no synapses"),
    }
    (fx, real)
}

fn bias_of(params: &LayerParams, out: Shape, n: usize) -> Fx32 {
    params.bias[n / out.plane_len()]
}

fn or_pool(input: &SpikeTensor, z: usize) -> SpikeTensor {
    let s = input.shape();
    let out_shape = Shape::new(s.channels, s.height / z, s.width / z);
    let mut out = SpikeTensor::zeros(input.timesteps(), out_shape);
    for t in 0..input.timesteps() {
        for c in 0..s.channels {
            for y in 0..out_shape.height {
                for x in 0..out_shape.width {
                    let mut any = false;
                    for dy in 0..z {
                        for dx in 0..z {
                            any |= input.get(t, c, y * z + dy, x * z + dx);
                        }
                    }
                    out.set(t, c, y, x, any);
                }
            }
        }
    }
    out
}

/// One compute layer over all timesteps. Returns the output spikes and,
/// when `real` is set, the largest gap between the Q3.29 membrane and a
/// real-valued membrane forced to spike at the same neurons.
fn lif_layer(
    layer: &LayerSpec,
    params: &LayerParams,
    input: &SpikeTensor,
    out: Shape,
    beta: Fx32,
    real: bool,
) -> (SpikeTensor, f64, bool) {
    let mut spikes = SpikeTensor::zeros(input.timesteps(), out);
    let mut u = vec![Fx32::ZERO; out.len()];
    let mut v = vec![0.0f64; out.len()];
    let mut max_err: f64 = 0.0;
    let mut wrapped = false;
    let plane = out.plane_len();
    for t in 0..input.timesteps() {
        let (syn_fx, syn_real) = synaptic_input(layer, params, input, out, t);
        for n in 0..out.len() {
            let b = bias_of(params, out, n);
            let (acc, w1) = u[n].overflowing_add(syn_fx[n]);
            let (acc, w2) = acc.overflowing_add(b);
            // Partial sums may wrap and unwrap; only the final residue matters.
            let w0 = syn_real[n] != syn_fx[n].to_f64();
            wrapped |= w0 || w1 || w2;
            let fired = acc.raw() >= Fx32::ONE.raw();
            let reset = if fired { acc + Fx32::NEG_ONE } else { acc };
            u[n] = beta * reset;
            if fired {
                spikes.set(t, n / plane, (n % plane) / out.width, n % out.width, true);
            }
            if real {
                let r = v[n] + syn_real[n] + b.to_f64() - if fired { 1.0 } else { 0.0 };
                v[n] = beta.to_f64() * r;
                max_err = max_err.max((v[n] - u[n].to_f64()).abs());
            }
        }
    }
    (spikes, max_err, wrapped)
}

/// Rate-encode with the engine's seed semantics, then run densely.
pub fn dense_forward(spec: &NetworkSpec, weights: &Weights, image: &Image, seed: u64) -> Result<OracleRun> {
    let input = rate_encode(image, spec.timesteps, seed)?;
    Ok(forward_spikes(spec, weights, input))
}

pub fn forward_spikes(spec: &NetworkSpec, weights: &Weights, input: SpikeTensor) -> OracleRun {
    let shapes = spec.shapes();
    let mut outputs: Vec<SpikeTensor> = Vec::with_capacity(shapes.len());
    for (i, layer) in spec.layers().iter().enumerate() {
        let current = outputs.last().unwrap_or(&input);
        let next = match layer {
            LayerSpec::MaxPool { window } => or_pool(current, *window),
            _ => {
                let params = weights.layers[i].as_ref().expect("compute layer weights");
                lif_layer(layer, params, current, shapes[i], spec.beta, false).0
            }
        };
        outputs.push(next);
    }
    let last = outputs.last().unwrap_or(&input);
    let s = last.shape();
    let mut output_counts = vec![0u64; s.len()];
    for t in 0..last.timesteps() {
        for c in 0..s.channels {
            for y in 0..s.height {
                for x in 0..s.width {
                    output_counts[(c * s.height + y) * s.width + x] += last.get(t, c, y, x) as u64;
                }
            }
        }
    }
    let decision = pop_decode(&output_counts, spec.classes, spec.pop_per_class);
    OracleRun {
        input,
        layer_outputs: outputs,
        output_counts,
        decision,
    }
}

/// Outcome of the real-arithmetic cross-check.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RealCheck {
    /// Largest |u_real - u_fx| over every neuron and timestep compared.
    pub max_abs_error: f64,
    pub layers_checked: usize,
    /// Layers skipped because their Q3.29 accumulation wrapped.
    pub layers_wrapped: usize,
}

/// Per-neuron tolerance of [`real_check`] absent wrap events.
pub const REAL_TOLERANCE: f64 = 1.0 / (1u64 << 20) as f64;

/// Re-run every compute layer with real-valued membranes that spike where
/// the Q3.29 run spiked. Only the leak truncation separates the two, so any
/// gap beyond [`REAL_TOLERANCE`] points at a datapath bug.
pub fn real_check(spec: &NetworkSpec, weights: &Weights, input: &SpikeTensor) -> RealCheck {
    let run = forward_spikes(spec, weights, input.clone());
    let shapes = spec.shapes();
    let mut check = RealCheck {
        max_abs_error: 0.0,
        layers_checked: 0,
        layers_wrapped: 0,
    };
    for (i, layer) in spec.layers().iter().enumerate() {
        let Some(params) = weights.layers[i].as_ref() else {
            continue;
        };
        let layer_in = if i == 0 { input } else { &run.layer_outputs[i - 1] };
        let (_, err, wrapped) = lif_layer(layer, params, layer_in, shapes[i], spec.beta, true);
        if wrapped {
            check.layers_wrapped += 1;
        } else {
            check.layers_checked += 1;
            check.max_abs_error = check.max_abs_error.max(err);
        }
    }
    check
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::run_spikes;
    use crate::model::{parse_topology, HardwareConfig};

    fn spec(topology: &str, t: usize, classes: usize) -> NetworkSpec {
        let topo = parse_topology(topology, 1).unwrap();
        NetworkSpec::new(topo, t, Fx32::from_decimal_str("0.15").unwrap(), classes, 1).unwrap()
    }

    #[test]
    fn zero_weights_never_spike() {
        let s = spec("6x6-2C3-P2-4", 3, 4);
        let image = Image::filled(s.input(), 1.0);
        let run = dense_forward(&s, &Weights::zeros(&s), &image, 1).unwrap();
        assert!(run.layer_outputs.iter().all(|o| o.total_spikes() == 0));
        assert!(run.decision.no_spike);
    }

    #[test]
    fn unit_kernel_passes_spike_through() {
        let s = spec("1x1-1C1", 1, 1);
        let mut w = Weights::zeros(&s);
        w.layers[0].as_mut().unwrap().weights[0] = Fx32::ONE;
        let run = dense_forward(&s, &w, &Image::filled(s.input(), 1.0), 0).unwrap();
        assert_eq!(run.output_counts, vec![1]);
        assert_eq!(run.decision.class, 0);
        assert!(!run.decision.no_spike);
    }

    #[test]
    fn small_random_model_matches_engine() {
        let mut rng = crate::synth::rng(99);
        let s = spec("6x6x2-3C3-4", 3, 4);
        let w = crate::synth::random_weights(&s, -1.0, 1.0, &mut rng);
        let input = rate_encode(&crate::synth::random_image(s.input(), 0.4, &mut rng), 3, 5).unwrap();
        let ours = forward_spikes(&s, &w, input.clone());
        let engine = run_spikes(&s, &w, &HardwareConfig::naive(&s), input);
        for (a, b) in ours.layer_outputs.iter().zip(&engine.layers) {
            assert_eq!(a, &b.output);
        }
        assert_eq!(ours.decision, engine.decision);
    }

    #[test]
    fn real_mode_agrees_within_tolerance() {
        let mut rng = crate::synth::rng(3);
        let s = spec("8x8-4C3-P2-6", 4, 6);
        let w = crate::synth::random_weights(&s, -1.0, 1.0, &mut rng);
        let input = rate_encode(&crate::synth::random_image(s.input(), 0.5, &mut rng), 4, 11).unwrap();
        let check = real_check(&s, &w, &input);
        assert_eq!(check.layers_checked + check.layers_wrapped, 2);
        assert!(check.max_abs_error <= REAL_TOLERANCE, "{check:?}");
    }
}
