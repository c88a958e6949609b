//! Synthetic models and inputs: random Q3.29 weights, Bernoulli images,
//! randomized small networks for the equivalence suite, and the calibration
//! setup for the 28x28 four-compute-layer network.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::codec::{Image, SpikeTensor};
use crate::fxp::Fx32;
use crate::model::{
    parse_topology, ConvSpec, CoreConfig, DenseSpec, HardwareConfig, LayerParams, LayerSpec, Model, NetworkSpec,
    Padding, Shape, Topology, Weights,
};

pub type SynthRng = ChaCha8Rng;

pub fn rng(seed: u64) -> SynthRng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn uniform_fx(rng: &mut impl Rng, lo: f64, hi: f64) -> Fx32 {
    Fx32::encode(rng.gen_range(lo..=hi)).expect("synthetic value inside the Q3.29 range")
}

/// Weights uniform in `[lo, hi]`, biases uniform in `[lo, hi] / 2`.
pub fn random_weights(spec: &NetworkSpec, lo: f64, hi: f64, rng: &mut impl Rng) -> Weights {
    random_weights_by_layer(spec, rng, |_, _| (lo, hi))
}

/// Like [`random_weights`] with a `(lo, hi)` range chosen per layer from
/// `(index, layer)`.
pub fn random_weights_by_layer(
    spec: &NetworkSpec,
    rng: &mut impl Rng,
    mut range: impl FnMut(usize, &LayerSpec) -> (f64, f64),
) -> Weights {
    let layers = spec
        .layers()
        .iter()
        .enumerate()
        .map(|(i, layer)| {
            let mut params = LayerParams::zeros(layer)?;
            let (lo, hi) = range(i, layer);
            for w in &mut params.weights {
                *w = uniform_fx(rng, lo, hi);
            }
            for b in &mut params.bias {
                *b = uniform_fx(rng, lo / 2.0, hi / 2.0);
            }
            Some(params)
        })
        .collect();
    Weights { layers }
}

/// Intensities uniform in `[0, max]`.
pub fn random_image(shape: Shape, max: f32, rng: &mut impl Rng) -> Image {
    let pixels = (0..shape.len()).map(|_| rng.gen_range(0.0..=max)).collect();
    Image::new(shape, pixels).expect("pixel count matches shape")
}

/// Binary image: each pixel is 1.0 with probability `density`, else 0.0.
pub fn binary_image(shape: Shape, density: f64, rng: &mut impl Rng) -> Image {
    let pixels = (0..shape.len())
        .map(|_| if rng.gen_bool(density) { 1.0 } else { 0.0 })
        .collect();
    Image::new(shape, pixels).expect("pixel count matches shape")
}

/// Bounds for [`random_model`].
#[derive(Clone, Copy, Debug)]
pub struct ModelLimits {
    pub max_convs: usize,
    pub max_pools: usize,
    pub max_dense: usize,
    pub max_channels: usize,
    pub max_side: usize,
    pub max_timesteps: usize,
}

impl Default for ModelLimits {
    fn default() -> Self {
        ModelLimits {
            max_convs: 2,
            max_pools: 1,
            max_dense: 1,
            max_channels: 8,
            max_side: 12,
            max_timesteps: 4,
        }
    }
}

/// Random network within `limits`: up to `max_convs` conv layers (kernel
/// 1, 3 or 5, either padding), an optional OR pool after the first conv and
/// an optional trailing dense layer with population decoding. Weights are
/// uniform in `[-1, 1]`; every layer gets one core and one chunk.
pub fn random_model(rng: &mut impl Rng, limits: ModelLimits) -> Model {
    loop {
        if let Some(model) = try_random_model(rng, limits) {
            return model;
        }
    }
}

fn try_random_model(rng: &mut impl Rng, limits: ModelLimits) -> Option<Model> {
    let mut shape = Shape::new(
        rng.gen_range(1..=limits.max_channels.min(3)),
        rng.gen_range(3..=limits.max_side),
        rng.gen_range(3..=limits.max_side),
    );
    let input = shape;
    let convs = rng.gen_range(0..=limits.max_convs);
    let mut pools = 0;
    let mut layers = Vec::new();
    for i in 0..convs {
        let kernel = [1, 3, 3, 5][rng.gen_range(0..4)];
        let padding = if rng.gen_bool(0.7) {
            Padding::Same
        } else {
            Padding::Valid
        };
        if padding == Padding::Valid && (shape.height < kernel || shape.width < kernel) {
            return None;
        }
        let conv = ConvSpec {
            kernel,
            in_channels: shape.channels,
            out_channels: rng.gen_range(1..=limits.max_channels),
            padding,
        };
        let (h, w) = match padding {
            Padding::Same => (shape.height, shape.width),
            Padding::Valid => (shape.height + 1 - kernel, shape.width + 1 - kernel),
        };
        shape = Shape::new(conv.out_channels, h, w);
        layers.push(LayerSpec::Conv(conv));
        if i == 0 && pools < limits.max_pools && rng.gen_bool(0.5) {
            let window = rng.gen_range(2..=3);
            if shape.height < window || shape.width < window {
                return None;
            }
            shape = Shape::new(shape.channels, shape.height / window, shape.width / window);
            layers.push(LayerSpec::MaxPool { window });
            pools += 1;
        }
    }
    let with_dense = limits.max_dense > 0 && (convs == 0 || rng.gen_bool(0.6));
    let (classes, pop) = if with_dense {
        let classes = rng.gen_range(1..=4);
        let pop = rng.gen_range(1..=3);
        layers.push(LayerSpec::Dense(DenseSpec {
            in_features: shape.len(),
            out_features: classes * pop,
        }));
        (classes, pop)
    } else {
        (shape.len(), 1)
    };
    if layers.is_empty() {
        return None;
    }
    let beta = Fx32::from_raw(rng.gen_range(Fx32::encode(0.05).unwrap().raw()..=Fx32::encode(0.95).unwrap().raw()));
    let timesteps = rng.gen_range(1..=limits.max_timesteps);
    let spec = NetworkSpec::new(Topology { input, layers }, timesteps, beta, classes, pop).ok()?;
    let weights = random_weights(&spec, -1.0, 1.0, rng);
    let hw = HardwareConfig::naive(&spec);
    Model::new(spec, weights, hw).ok()
}

/// Every `(nc_count, chunk_count)` assignment drawn from the given sets,
/// applied uniformly to all compute layers. Core counts are clamped to each
/// layer's cap and conv chunk counts to its OFM size; dense layers keep one
/// chunk.
pub fn hardware_variants(spec: &NetworkSpec, nc_counts: &[NcChoice], chunk_counts: &[usize]) -> Vec<HardwareConfig> {
    let shapes = spec.shapes();
    let mut out = Vec::new();
    for nc in nc_counts {
        for &chunks in chunk_counts {
            let mut hw = HardwareConfig::naive(spec);
            for (cfg, i) in hw.layers.iter_mut().zip(spec.compute_layers()) {
                let layer = &spec.layers()[i];
                let cap = layer.max_cores();
                let n = match *nc {
                    NcChoice::Fixed(n) => n.min(cap),
                    NcChoice::Full => cap,
                };
                let c = match layer {
                    LayerSpec::Conv(_) => chunks.min(shapes[i].plane_len()),
                    _ => 1,
                };
                *cfg = CoreConfig {
                    nc_count: n,
                    chunk_count: c,
                };
            }
            out.push(hw);
        }
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NcChoice {
    Fixed(usize),
    /// One core per output channel or neuron.
    Full,
}

/// The 28x28 network with three 3x3 conv layers, a 3x3 pool and a
/// population-coded dense classifier (10 classes x 50 neurons, 3 timesteps,
/// beta 0.15), mapped onto 8/32/4/2 neural cores.
pub const CALIBRATION_TOPOLOGY: &str = "28x28-32C3-32C3-P3-10C3-10";
pub const CALIBRATION_CORES: [usize; 4] = [8, 32, 4, 2];
/// Input sparsity band (fraction of zero pixels) of the calibration images.
pub const CALIBRATION_SPARSITY: (f64, f64) = (0.83, 0.95);

pub fn calibration_spec() -> NetworkSpec {
    let topology = parse_topology(CALIBRATION_TOPOLOGY, 50).expect("calibration topology parses");
    NetworkSpec::new(topology, 3, Fx32::from_decimal_str("0.15").unwrap(), 10, 50).expect("calibration spec is valid")
}

/// Hidden-layer firing density the calibration weights are normalized to.
pub const CALIBRATION_HIDDEN_DENSITY: f64 = 0.05;
/// Images used to normalize the calibration weights.
pub const CALIBRATION_FIT_IMAGES: usize = 4;

/// Activity-normalized random weights.
///
/// Layer by layer, a random pattern (weights uniform in `[-0.5, 1.5]`,
/// biases uniform in `[-0.5, 0.5]`) is scaled by the factor whose output
/// firing density on `images` is closest to `target`, found by bisection.
/// The scaled layer then produces the next layer's inputs.
pub fn activity_normalized_weights(
    spec: &NetworkSpec,
    images: &[Image],
    seed: u64,
    target: f64,
    rng: &mut impl Rng,
) -> Weights {
    use crate::codec::rate_encode;
    use crate::engine::{run_conv_layer, run_dense_layer, run_maxpool};

    let mut inputs: Vec<SpikeTensor> = images
        .iter()
        .enumerate()
        .map(|(i, img)| rate_encode(img, spec.timesteps, seed.wrapping_add(i as u64)).expect("pixels in [0, 1]"))
        .collect();
    let mut layers = Vec::with_capacity(spec.layers().len());
    for layer in spec.layers() {
        let Some(mut base) = LayerParams::zeros(layer) else {
            let LayerSpec::MaxPool { window } = layer else {
                unreachable!()
            };
            inputs = inputs.iter().map(|t| run_maxpool(t, *window)).collect();
            layers.push(None);
            continue;
        };
        let raw_w: Vec<f64> = base.weights.iter().map(|_| rng.gen_range(-0.5..=1.5)).collect();
        let raw_b: Vec<f64> = base.bias.iter().map(|_| rng.gen_range(-0.5..=0.5)).collect();
        let scaled = |s: f64| LayerParams {
            weights: raw_w.iter().map(|w| Fx32::encode(w * s).unwrap()).collect(),
            bias: raw_b.iter().map(|b| Fx32::encode(b * s).unwrap()).collect(),
        };
        let run = |params: &LayerParams| -> (Vec<SpikeTensor>, f64) {
            let outs: Vec<SpikeTensor> = inputs
                .iter()
                .map(|x| match layer {
                    LayerSpec::Conv(c) => run_conv_layer(x, c, params, CoreConfig::default(), spec.beta).0,
                    LayerSpec::Dense(d) => run_dense_layer(x, d, params, CoreConfig::default(), spec.beta).0,
                    LayerSpec::MaxPool { .. } => unreachable!(),
                })
                .collect();
            let spikes: u64 = outs.iter().map(|o| o.total_spikes()).sum();
            let slots: usize = outs.iter().map(|o| o.timesteps() * o.shape().len()).sum();
            (outs, spikes as f64 / slots as f64)
        };
        // |1.5 * s| must stay inside the Q3.29 range.
        let (mut lo, mut hi) = (0.0, 2.6);
        for _ in 0..40 {
            let mid = 0.5 * (lo + hi);
            if run(&scaled(mid)).1 < target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let (lo_out, lo_d) = run(&scaled(lo));
        let (hi_out, hi_d) = run(&scaled(hi));
        let (s, outs) = if (lo_d - target).abs() <= (hi_d - target).abs() {
            (lo, lo_out)
        } else {
            (hi, hi_out)
        };
        base = scaled(s);
        inputs = outs;
        layers.push(Some(base));
    }
    Weights { layers }
}

/// Binary 28x28 image whose sparsity is drawn uniformly from
/// [`CALIBRATION_SPARSITY`].
pub fn calibration_image(spec: &NetworkSpec, rng: &mut impl Rng) -> Image {
    let sparsity = rng.gen_range(CALIBRATION_SPARSITY.0..=CALIBRATION_SPARSITY.1);
    binary_image(spec.input(), 1.0 - sparsity, rng)
}

/// Calibration network with activity-normalized weights fitted on
/// [`CALIBRATION_FIT_IMAGES`] synthetic images. The returned generator
/// continues the same stream for drawing evaluation images.
pub fn calibration_model(seed: u64) -> (Model, SynthRng) {
    let mut rng = rng(seed);
    let spec = calibration_spec();
    let fit: Vec<Image> = (0..CALIBRATION_FIT_IMAGES)
        .map(|_| calibration_image(&spec, &mut rng))
        .collect();
    let weights = activity_normalized_weights(&spec, &fit, seed, CALIBRATION_HIDDEN_DENSITY, &mut rng);
    let hw = HardwareConfig::naive(&spec).with_nc_counts(&CALIBRATION_CORES);
    (Model::new(spec, weights, hw).expect("calibration model is valid"), rng)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn random_models_respect_limits() {
        let mut r = rng(1);
        let limits = ModelLimits::default();
        for _ in 0..200 {
            let m = random_model(&mut r, limits);
            let layers = m.spec.layers();
            let count = |f: fn(&LayerSpec) -> bool| layers.iter().filter(|l| f(l)).count();
            assert!(count(|l| matches!(l, LayerSpec::Conv(_))) <= 2);
            assert!(count(|l| matches!(l, LayerSpec::MaxPool { .. })) <= 1);
            assert!(count(|l| matches!(l, LayerSpec::Dense(_))) <= 1);
            assert!(m.spec.timesteps <= 4);
            let input = m.spec.input();
            assert!(input.height <= 12 && input.width <= 12);
            for s in m.spec.shapes() {
                assert!(s.channels <= 12 && s.height <= 12);
            }
        }
    }

    #[test]
    fn variants_cover_the_grid() {
        let spec = calibration_spec();
        let v = hardware_variants(
            &spec,
            &[NcChoice::Fixed(1), NcChoice::Fixed(2), NcChoice::Full],
            &[1, 3],
        );
        assert_eq!(v.len(), 6);
        for hw in &v {
            hw.validate(&spec).unwrap();
        }
        assert_eq!(v[4].layers[1].nc_count, 32);
        assert_eq!(v[4].layers[3].nc_count, 500);
    }
}
