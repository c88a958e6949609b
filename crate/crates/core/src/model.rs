//! Network topology, LIF parameters, weights and the per-layer hardware
//! configuration that parameterizes the generator.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fxp::Fx32;
use crate::perf::TimingKnobs;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Padding {
    #[default]
    Same,
    Valid,
}

/// Activation volume `[channels][height][width]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Shape {
    pub channels: usize,
    pub height: usize,
    pub width: usize,
}

impl Shape {
    pub const fn new(channels: usize, height: usize, width: usize) -> Self {
        Shape {
            channels,
            height,
            width,
        }
    }

    pub const fn plane_len(&self) -> usize {
        self.height * self.width
    }

    pub const fn len(&self) -> usize {
        self.channels * self.height * self.width
    }

    pub const fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

impl fmt::Display for Shape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}x{}x{}", self.height, self.width, self.channels)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConvSpec {
    pub kernel: usize,
    pub in_channels: usize,
    pub out_channels: usize,
    pub padding: Padding,
}

impl ConvSpec {
    /// Filter coefficients per input/output channel pair.
    pub const fn taps(&self) -> usize {
        self.kernel * self.kernel
    }

    pub const fn weight_len(&self) -> usize {
        self.out_channels * self.in_channels * self.taps()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DenseSpec {
    pub in_features: usize,
    pub out_features: usize,
}

impl DenseSpec {
    pub const fn weight_len(&self) -> usize {
        self.out_features * self.in_features
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum LayerSpec {
    Conv(ConvSpec),
    #[serde(rename = "maxpool")]
    MaxPool {
        window: usize,
    },
    Dense(DenseSpec),
}

impl LayerSpec {
    /// Conv and Dense layers own neural cores and parameters; pooling does not.
    pub const fn is_compute(&self) -> bool {
        !matches!(self, LayerSpec::MaxPool { .. })
    }

    pub fn name(&self) -> &'static str {
        match self {
            LayerSpec::Conv(_) => "conv",
            LayerSpec::MaxPool { .. } => "maxpool",
            LayerSpec::Dense(_) => "dense",
        }
    }

    /// Upper bound on neural cores: one per output channel or output neuron.
    pub fn max_cores(&self) -> usize {
        match self {
            LayerSpec::Conv(c) => c.out_channels,
            LayerSpec::Dense(d) => d.out_features,
            LayerSpec::MaxPool { .. } => 0,
        }
    }
}

/// Input dims plus an ordered, shape-consistent layer chain.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Topology {
    pub input: Shape,
    pub layers: Vec<LayerSpec>,
}

impl Topology {
    /// Output shape of each layer, validating the chain as it goes.
    pub fn infer_shapes(&self) -> Result<Vec<Shape>> {
        let mut shape = self.input;
        if shape.is_empty() {
            return Err(Error::Validation(format!("empty input shape {shape}")));
        }
        let mut shapes = Vec::with_capacity(self.layers.len());
        for (i, layer) in self.layers.iter().enumerate() {
            shape = next_shape(i, shape, layer, false)?;
            shapes.push(shape);
        }
        Ok(shapes)
    }

    /// Recompute every layer's input width from its predecessor.
    fn relink(&mut self) -> Result<()> {
        let mut shape = self.input;
        for (i, layer) in self.layers.iter_mut().enumerate() {
            match layer {
                LayerSpec::Conv(c) => c.in_channels = shape.channels,
                LayerSpec::Dense(d) => d.in_features = shape.len(),
                LayerSpec::MaxPool { .. } => {}
            }
            shape = next_shape(i, shape, layer, true)?;
        }
        Ok(())
    }

    /// Override the padding of each Conv layer, in order, and relink shapes.
    pub fn set_conv_padding(&mut self, padding: &[Padding]) -> Result<()> {
        let convs = self.layers.iter().filter(|l| matches!(l, LayerSpec::Conv(_))).count();
        if padding.len() != convs {
            return Err(Error::Validation(format!(
                "{} padding entries for {convs} conv layers",
                padding.len()
            )));
        }
        let mut it = padding.iter();
        for layer in &mut self.layers {
            if let LayerSpec::Conv(c) = layer {
                c.padding = *it.next().unwrap();
            }
        }
        self.relink()
    }

    pub fn output_shape(&self) -> Result<Shape> {
        Ok(self.infer_shapes()?.last().copied().unwrap_or(self.input))
    }
}

fn next_shape(index: usize, input: Shape, layer: &LayerSpec, relinking: bool) -> Result<Shape> {
    let invalid = |msg: String| Error::Validation(format!("layer {index} ({}): {msg}", layer.name()));
    let out = match *layer {
        LayerSpec::Conv(c) => {
            if c.kernel == 0 || c.out_channels == 0 {
                return Err(invalid("kernel and out_channels must be positive".into()));
            }
            if !relinking && c.in_channels != input.channels {
                return Err(invalid(format!(
                    "in_channels {} but upstream has {}",
                    c.in_channels, input.channels
                )));
            }
            let (h, w) = match c.padding {
                Padding::Same => {
                    if c.kernel % 2 == 0 {
                        return Err(invalid("same padding needs an odd kernel".into()));
                    }
                    (input.height, input.width)
                }
                Padding::Valid => (
                    (input.height + 1).saturating_sub(c.kernel),
                    (input.width + 1).saturating_sub(c.kernel),
                ),
            };
            Shape::new(c.out_channels, h, w)
        }
        LayerSpec::MaxPool { window } => {
            if window == 0 {
                return Err(invalid("window must be positive".into()));
            }
            Shape::new(input.channels, input.height / window, input.width / window)
        }
        LayerSpec::Dense(d) => {
            if d.out_features == 0 {
                return Err(invalid("out_features must be positive".into()));
            }
            if !relinking && d.in_features != input.len() {
                return Err(invalid(format!(
                    "in_features {} but upstream flattens to {}",
                    d.in_features,
                    input.len()
                )));
            }
            Shape::new(d.out_features, 1, 1)
        }
    };
    if out.is_empty() {
        return Err(invalid(format!("output shape {out} has a zero dimension")));
    }
    Ok(out)
}

/// Parse the compact topology grammar, e.g. `28x28-32C3-32C3-P3-10C3-10`.
///
/// The first token is `HxW` or `HxWxC`. Following tokens are `<n>C<k>`
/// (conv, same padding), `P<z>` or `MP<z>` (max pool) and bare integers
/// (dense). A trailing integer names the class count and is expanded to
/// `value * pop_per_class` output neurons.
pub fn parse_topology(s: &str, pop_per_class: usize) -> Result<Topology> {
    let tokens: Vec<&str> = s.trim().split('-').collect();
    let err = |position: usize, message: &str| Error::Parse {
        position,
        token: tokens.get(position).unwrap_or(&"").to_string(),
        message: message.to_string(),
    };
    if pop_per_class == 0 {
        return Err(Error::Validation("pop_per_class must be positive".into()));
    }
    let dims: Vec<&str> = tokens[0].split('x').collect();
    let dims: Vec<usize> = dims
        .iter()
        .map(|d| parse_positive(d))
        .collect::<Option<_>>()
        .ok_or_else(|| err(0, "expected HxW or HxWxC with positive integers"))?;
    let input = match dims[..] {
        [h, w] => Shape::new(1, h, w),
        [h, w, c] => Shape::new(c, h, w),
        _ => return Err(err(0, "expected HxW or HxWxC")),
    };

    let last = tokens.len() - 1;
    let mut layers = Vec::with_capacity(last);
    for (pos, tok) in tokens.iter().enumerate().skip(1) {
        let layer = if let Some(z) = tok.strip_prefix("MP").or_else(|| tok.strip_prefix('P')) {
            let window = parse_positive(z).ok_or_else(|| err(pos, "bad pooling window"))?;
            LayerSpec::MaxPool { window }
        } else if let Some((n, k)) = tok.split_once('C') {
            let out_channels = parse_positive(n).ok_or_else(|| err(pos, "bad filter count"))?;
            let kernel = parse_positive(k).ok_or_else(|| err(pos, "bad kernel size"))?;
            LayerSpec::Conv(ConvSpec {
                kernel,
                in_channels: 0,
                out_channels,
                padding: Padding::Same,
            })
        } else {
            let n = parse_positive(tok).ok_or_else(|| err(pos, "unrecognized token"))?;
            let out_features = if pos == last { n * pop_per_class } else { n };
            LayerSpec::Dense(DenseSpec {
                in_features: 0,
                out_features,
            })
        };
        if matches!(layer, LayerSpec::Conv(_) | LayerSpec::MaxPool { .. })
            && layers.iter().any(|l| matches!(l, LayerSpec::Dense(_)))
        {
            return Err(err(pos, "spatial layer after a dense layer"));
        }
        layers.push(layer);
    }
    let mut topology = Topology { input, layers };
    topology.relink()?;
    Ok(topology)
}

fn parse_positive(s: &str) -> Option<usize> {
    if s.is_empty() || !s.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    s.parse().ok().filter(|&n| n > 0)
}

/// Inverse of [`parse_topology`] for the same `pop_per_class`.
pub fn render_topology(topology: &Topology, pop_per_class: usize) -> String {
    let input = topology.input;
    let mut out = if input.channels == 1 {
        format!("{}x{}", input.height, input.width)
    } else {
        format!("{}x{}x{}", input.height, input.width, input.channels)
    };
    let last = topology.layers.len().wrapping_sub(1);
    for (i, layer) in topology.layers.iter().enumerate() {
        out.push('-');
        match layer {
            LayerSpec::Conv(c) => out.push_str(&format!("{}C{}", c.out_channels, c.kernel)),
            LayerSpec::MaxPool { window } => out.push_str(&format!("P{window}")),
            LayerSpec::Dense(d) if i == last => out.push_str(&(d.out_features / pop_per_class).to_string()),
            LayerSpec::Dense(d) => out.push_str(&d.out_features.to_string()),
        }
    }
    out
}

/// Full network description: topology plus LIF and decode parameters.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NetworkSpec {
    pub topology: Topology,
    pub timesteps: usize,
    pub beta: Fx32,
    pub theta: Fx32,
    pub classes: usize,
    pub pop_per_class: usize,
}

impl NetworkSpec {
    pub fn new(topology: Topology, timesteps: usize, beta: Fx32, classes: usize, pop_per_class: usize) -> Result<Self> {
        let spec = NetworkSpec {
            topology,
            timesteps,
            beta,
            theta: Fx32::ONE,
            classes,
            pop_per_class,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        let out = self.topology.output_shape()?;
        if self.timesteps == 0 {
            return Err(Error::Validation("timesteps must be positive".into()));
        }
        if self.theta != Fx32::ONE {
            return Err(Error::Validation(format!("theta must be 1.0, got {}", self.theta)));
        }
        if self.beta <= Fx32::ZERO || self.beta >= Fx32::ONE {
            return Err(Error::Validation(format!("beta must lie in (0, 1), got {}", self.beta)));
        }
        if self.classes == 0 || self.pop_per_class == 0 {
            return Err(Error::Validation("classes and pop_per_class must be positive".into()));
        }
        if out.len() != self.classes * self.pop_per_class {
            return Err(Error::Validation(format!(
                "final layer emits {} neurons but classes x pop_per_class = {} x {}",
                out.len(),
                self.classes,
                self.pop_per_class
            )));
        }
        Ok(())
    }

    pub fn input(&self) -> Shape {
        self.topology.input
    }

    pub fn layers(&self) -> &[LayerSpec] {
        &self.topology.layers
    }

    pub fn shapes(&self) -> Vec<Shape> {
        self.topology.infer_shapes().expect("validated spec")
    }

    /// Input shape of every layer.
    pub fn input_shapes(&self) -> Vec<Shape> {
        std::iter::once(self.input())
            .chain(self.shapes())
            .take(self.layers().len())
            .collect()
    }

    /// Indices of layers that carry weights and neural cores.
    pub fn compute_layers(&self) -> impl Iterator<Item = usize> + '_ {
        self.layers()
            .iter()
            .enumerate()
            .filter(|(_, l)| l.is_compute())
            .map(|(i, _)| i)
    }

    pub fn render_topology(&self) -> String {
        render_topology(&self.topology, self.pop_per_class)
    }
}

/// Weight and bias tensor of one Conv or Dense layer.
///
/// Conv weights are `[C_out][C_in][K][K]`, dense weights `[out][in]`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayerParams {
    pub weights: Vec<Fx32>,
    pub bias: Vec<Fx32>,
}

impl LayerParams {
    pub fn zeros(layer: &LayerSpec) -> Option<Self> {
        let (w, b) = match layer {
            LayerSpec::Conv(c) => (c.weight_len(), c.out_channels),
            LayerSpec::Dense(d) => (d.weight_len(), d.out_features),
            LayerSpec::MaxPool { .. } => return None,
        };
        Some(LayerParams {
            weights: vec![Fx32::ZERO; w],
            bias: vec![Fx32::ZERO; b],
        })
    }

    #[inline]
    pub fn conv_weight(&self, conv: &ConvSpec, ofm: usize, ifm: usize, kr: usize, kc: usize) -> Fx32 {
        self.weights[((ofm * conv.in_channels + ifm) * conv.kernel + kr) * conv.kernel + kc]
    }
}

/// Parameters of every layer; `None` at pooling layers.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Weights {
    pub layers: Vec<Option<LayerParams>>,
}

impl Weights {
    pub fn zeros(spec: &NetworkSpec) -> Self {
        Weights {
            layers: spec.layers().iter().map(LayerParams::zeros).collect(),
        }
    }

    pub fn validate(&self, spec: &NetworkSpec) -> Result<()> {
        if self.layers.len() != spec.layers().len() {
            return Err(Error::Validation(format!(
                "{} weight entries for {} layers",
                self.layers.len(),
                spec.layers().len()
            )));
        }
        for (i, (layer, params)) in spec.layers().iter().zip(&self.layers).enumerate() {
            match (LayerParams::zeros(layer), params) {
                (None, None) => {}
                (Some(expected), Some(got)) => {
                    check_len(i, "weights", expected.weights.len(), got.weights.len())?;
                    check_len(i, "bias", expected.bias.len(), got.bias.len())?;
                }
                (None, Some(_)) => return Err(Error::Validation(format!("layer {i} is a pool but has weights"))),
                (Some(_), None) => return Err(Error::Validation(format!("layer {i} is missing weights"))),
            }
        }
        Ok(())
    }
}

fn check_len(layer: usize, what: &'static str, expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::Shape {
            layer,
            what,
            expected,
            found,
        })
    }
}

/// Design-time parameters of one compute layer.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoreConfig {
    /// Neural cores, i.e. the output-channel unroll factor.
    pub nc_count: usize,
    /// Number of contiguous row-major spans each OFM is split into.
    pub chunk_count: usize,
}

impl Default for CoreConfig {
    fn default() -> Self {
        CoreConfig {
            nc_count: 1,
            chunk_count: 1,
        }
    }
}

pub const DEFAULT_CLOCK_MHZ: f64 = 125.0;

/// Per-compute-layer core configuration, in layer order, plus clock and
/// timing-model knobs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HardwareConfig {
    pub layers: Vec<CoreConfig>,
    pub clock_mhz: f64,
    pub timing: TimingKnobs,
}

impl HardwareConfig {
    pub fn uniform(spec: &NetworkSpec, nc_count: usize, chunk_count: usize) -> Self {
        HardwareConfig {
            layers: spec
                .compute_layers()
                .map(|_| CoreConfig { nc_count, chunk_count })
                .collect(),
            clock_mhz: DEFAULT_CLOCK_MHZ,
            timing: TimingKnobs::default(),
        }
    }

    /// Single core, single chunk everywhere: the profiling configuration.
    pub fn naive(spec: &NetworkSpec) -> Self {
        Self::uniform(spec, 1, 1)
    }

    pub fn with_nc_counts(mut self, counts: &[usize]) -> Self {
        for (cfg, &n) in self.layers.iter_mut().zip(counts) {
            cfg.nc_count = n;
        }
        self
    }

    pub fn clock_hz(&self) -> u64 {
        (self.clock_mhz * 1e6).round() as u64
    }

    pub fn validate(&self, spec: &NetworkSpec) -> Result<()> {
        let compute: Vec<usize> = spec.compute_layers().collect();
        if self.layers.len() != compute.len() {
            return Err(Error::Hardware(format!(
                "{} core configs for {} compute layers",
                self.layers.len(),
                compute.len()
            )));
        }
        if !(self.clock_mhz.is_finite() && self.clock_mhz > 0.0) {
            return Err(Error::Hardware(format!(
                "clock_mhz must be positive, got {}",
                self.clock_mhz
            )));
        }
        if self.timing.penc_width == 0 {
            return Err(Error::Hardware("penc_width must be positive".into()));
        }
        let shapes = spec.shapes();
        for (cfg, &li) in self.layers.iter().zip(&compute) {
            let layer = &spec.layers()[li];
            let cap = layer.max_cores();
            if cfg.nc_count == 0 || cfg.nc_count > cap {
                return Err(Error::Hardware(format!(
                    "layer {li}: nc_count {} outside 1..={cap}",
                    cfg.nc_count
                )));
            }
            let plane = match layer {
                LayerSpec::Conv(_) => shapes[li].plane_len(),
                _ => 1,
            };
            if cfg.chunk_count == 0 || cfg.chunk_count > plane {
                return Err(Error::Hardware(format!(
                    "layer {li}: chunk_count {} outside 1..={plane}",
                    cfg.chunk_count
                )));
            }
        }
        Ok(())
    }
}

/// Validated bundle of everything a simulation needs.
#[derive(Clone, Debug, PartialEq)]
pub struct Model {
    pub spec: NetworkSpec,
    pub weights: Weights,
    pub hw: HardwareConfig,
}

impl Model {
    pub fn new(spec: NetworkSpec, weights: Weights, hw: HardwareConfig) -> Result<Self> {
        spec.validate()?;
        weights.validate(&spec)?;
        hw.validate(&spec)?;
        Ok(Model { spec, weights, hw })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn conv(out: usize, k: usize) -> LayerSpec {
        LayerSpec::Conv(ConvSpec {
            kernel: k,
            in_channels: 0,
            out_channels: out,
            padding: Padding::Same,
        })
    }

    fn strip(t: &Topology) -> Vec<LayerSpec> {
        t.layers
            .iter()
            .map(|l| match *l {
                LayerSpec::Conv(c) => conv(c.out_channels, c.kernel),
                LayerSpec::Dense(d) => LayerSpec::Dense(DenseSpec { in_features: 0, ..d }),
                other => other,
            })
            .collect()
    }

    #[test]
    fn parses_network_one() {
        let t = parse_topology("28x28-32C3-32C3-P3-10C3-10", 50).unwrap();
        assert_eq!(t.input, Shape::new(1, 28, 28));
        assert_eq!(
            strip(&t),
            vec![
                conv(32, 3),
                conv(32, 3),
                LayerSpec::MaxPool { window: 3 },
                conv(10, 3),
                LayerSpec::Dense(DenseSpec {
                    in_features: 0,
                    out_features: 500
                }),
            ]
        );
        let shapes = t.infer_shapes().unwrap();
        assert_eq!(shapes[2], Shape::new(32, 9, 9));
        assert_eq!(
            t.layers[4],
            LayerSpec::Dense(DenseSpec {
                in_features: 810,
                out_features: 500
            })
        );
    }

    #[test]
    fn parses_network_three() {
        let t = parse_topology("32x32x3-32C3-P2-32C3-P2-256-10", 1).unwrap();
        assert_eq!(t.input, Shape::new(3, 32, 32));
        let shapes = t.infer_shapes().unwrap();
        assert_eq!(shapes[3], Shape::new(32, 8, 8));
        assert_eq!(
            t.layers[4],
            LayerSpec::Dense(DenseSpec {
                in_features: 2048,
                out_features: 256
            })
        );
        assert_eq!(
            t.layers[5],
            LayerSpec::Dense(DenseSpec {
                in_features: 256,
                out_features: 10
            })
        );
        if let LayerSpec::Conv(c) = t.layers[0] {
            assert_eq!(c.in_channels, 3);
        } else {
            panic!("expected conv");
        }
    }

    #[test]
    fn pool_token_synonyms() {
        let a = parse_topology("28x28-32C3-MP2-10", 1).unwrap();
        let b = parse_topology("28x28-32C3-P2-10", 1).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn input_only_is_valid_skeleton() {
        let t = parse_topology("28x28", 1).unwrap();
        assert!(t.layers.is_empty());
        assert!(t.infer_shapes().unwrap().is_empty());
    }

    #[test]
    fn parse_errors_carry_position() {
        for (s, pos) in [
            ("28-32C3", 0),
            ("28x28-32X3", 1),
            ("28x28-32C3-P0", 2),
            ("28x28-32C3-10-4C3", 3),
            ("28x28-C3", 1),
            ("axb", 0),
        ] {
            match parse_topology(s, 1) {
                Err(Error::Parse { position, .. }) => assert_eq!(position, pos, "{s}"),
                other => panic!("{s}: {other:?}"),
            }
        }
    }

    #[test]
    fn shape_inference() {
        let t = parse_topology("28x28-4C3", 1).unwrap();
        assert_eq!(t.infer_shapes().unwrap()[0], Shape::new(4, 28, 28));
        let t = parse_topology("28x28-P2", 1).unwrap();
        assert_eq!(t.infer_shapes().unwrap()[0], Shape::new(1, 14, 14));
        let t = parse_topology("28x28-P3", 1).unwrap();
        assert_eq!(t.infer_shapes().unwrap()[0], Shape::new(1, 9, 9));

        let mut t = parse_topology("28x28-4C3-10", 1).unwrap();
        t.set_conv_padding(&[Padding::Valid]).unwrap();
        assert_eq!(t.infer_shapes().unwrap()[0], Shape::new(4, 26, 26));
        assert_eq!(
            t.layers[1],
            LayerSpec::Dense(DenseSpec {
                in_features: 4 * 26 * 26,
                out_features: 10
            })
        );
    }

    #[test]
    fn shape_inference_rejects_vanishing_dims() {
        assert!(matches!(parse_topology("2x2-P3", 1), Err(Error::Validation(_))));
        let mut t = parse_topology("2x2-1C3", 1).unwrap();
        assert!(t.set_conv_padding(&[Padding::Valid]).is_err());
        assert!(parse_topology("4x4-1C2", 1).is_err());
    }

    #[test]
    fn render_inverts_parse() {
        for (s, p) in [
            ("28x28-32C3-32C3-P3-10C3-10", 50),
            ("32x32x3-32C3-P2-32C3-P2-256-10", 40),
            ("28x28-32C3-P2-32C3-P2-256-10", 60),
            ("28x28", 1),
            ("5x7x2-3C1", 1),
        ] {
            let t = parse_topology(s, p).unwrap();
            assert_eq!(render_topology(&t, p), s);
        }
    }

    #[test]
    fn spec_validation() {
        let t = parse_topology("28x28-32C3-32C3-P3-10C3-10", 50).unwrap();
        let beta = Fx32::from_decimal_str("0.15").unwrap();
        assert!(NetworkSpec::new(t.clone(), 3, beta, 10, 50).is_ok());
        assert!(NetworkSpec::new(t.clone(), 3, beta, 10, 49).is_err());
        assert!(NetworkSpec::new(t.clone(), 0, beta, 10, 50).is_err());
        assert!(NetworkSpec::new(t.clone(), 3, Fx32::ONE, 10, 50).is_err());
        assert!(NetworkSpec::new(t, 3, Fx32::ZERO, 10, 50).is_err());
    }

    #[test]
    fn hardware_validation() {
        let t = parse_topology("28x28-32C3-32C3-P3-10C3-10", 50).unwrap();
        let spec = NetworkSpec::new(t, 3, Fx32::from_decimal_str("0.15").unwrap(), 10, 50).unwrap();
        let hw = HardwareConfig::naive(&spec).with_nc_counts(&[8, 32, 4, 2]);
        hw.validate(&spec).unwrap();
        assert_eq!(hw.layers.len(), 4);
        let too_many = HardwareConfig::naive(&spec).with_nc_counts(&[33, 1, 1, 1]);
        assert!(matches!(too_many.validate(&spec), Err(Error::Hardware(_))));
        let mut dense_chunks = HardwareConfig::naive(&spec);
        dense_chunks.layers[3].chunk_count = 2;
        assert!(dense_chunks.validate(&spec).is_err());
    }

    #[test]
    fn weights_shape_mismatch_names_layer() {
        let t = parse_topology("6x6-2C3-P2-4", 1).unwrap();
        let spec = NetworkSpec::new(t, 1, Fx32::from_decimal_str("0.5").unwrap(), 4, 1).unwrap();
        let mut w = Weights::zeros(&spec);
        w.validate(&spec).unwrap();
        w.layers[0].as_mut().unwrap().weights.pop();
        match w.validate(&spec) {
            Err(Error::Shape {
                layer,
                what,
                expected,
                found,
            }) => {
                assert_eq!((layer, what, expected, found), (0, "weights", 18, 17));
            }
            other => panic!("{other:?}"),
        }
    }
}
