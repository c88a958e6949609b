//! JSON manifest plus raw Q3.29 weight blobs.
//!
//! ```json
//! {
//!   "format_version": 1,
//!   "topology": "28x28-32C3-32C3-P3-10C3-10",
//!   "padding": ["same", "same", "same"],
//!   "timesteps": 3,
//!   "beta": "0.15",
//!   "classes": 10,
//!   "pop_per_class": 50,
//!   "clock_mhz": 125.0,
//!   "timing": { "penc_width": 32, "pipeline_fill": 4 },
//!   "layers": [
//!     { "nc_count": 8, "chunk_count": 1,
//!       "weights_file": "layer0.weights.bin", "bias_file": "layer0.bias.bin" }
//!   ]
//! }
//! ```
//!
//! `layers` has one entry per conv or dense layer, in order. Blob paths are
//! relative to the manifest. Blobs are flat little-endian `i32` raws,
//! `[C_out][C_in][K][K]` or `[out][in]`; bias blobs are `[C_out]` / `[out]`.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fxp::Fx32;
use crate::model::{
    parse_topology, CoreConfig, HardwareConfig, LayerParams, LayerSpec, Model, NetworkSpec, Padding, Weights,
    DEFAULT_CLOCK_MHZ,
};
use crate::perf::TimingKnobs;

pub const MANIFEST_FORMAT_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestFile {
    #[serde(default = "default_version")]
    pub format_version: u32,
    pub topology: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub padding: Option<Vec<Padding>>,
    pub timesteps: usize,
    pub beta: String,
    pub classes: usize,
    pub pop_per_class: usize,
    #[serde(default = "default_clock")]
    pub clock_mhz: f64,
    #[serde(default)]
    pub timing: TimingKnobs,
    pub layers: Vec<ManifestLayer>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestLayer {
    pub nc_count: usize,
    #[serde(default = "default_chunks")]
    pub chunk_count: usize,
    pub weights_file: PathBuf,
    pub bias_file: PathBuf,
}

fn default_version() -> u32 {
    MANIFEST_FORMAT_VERSION
}

fn default_clock() -> f64 {
    DEFAULT_CLOCK_MHZ
}

fn default_chunks() -> usize {
    1
}

pub fn decode_blob(bytes: &[u8]) -> Option<Vec<Fx32>> {
    if !bytes.len().is_multiple_of(4) {
        return None;
    }
    Some(
        bytes
            .chunks_exact(4)
            .map(|b| Fx32::from_raw(i32::from_le_bytes(b.try_into().unwrap())))
            .collect(),
    )
}

pub fn encode_blob(values: &[Fx32]) -> Vec<u8> {
    values.iter().flat_map(|v| v.raw().to_le_bytes()).collect()
}

fn read_blob(layer: usize, what: &'static str, path: &Path, expected: usize) -> Result<Vec<Fx32>> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let values = decode_blob(&bytes).ok_or_else(|| {
        Error::Validation(format!(
            "layer {layer}: {} is {} bytes, not a whole number of int32 values",
            path.display(),
            bytes.len()
        ))
    })?;
    if values.len() != expected {
        return Err(Error::Shape {
            layer,
            what,
            expected,
            found: values.len(),
        });
    }
    Ok(values)
}

impl ManifestFile {
    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|source| Error::Json {
            path: path.to_path_buf(),
            source,
        })
    }

    /// Resolve the network and hardware description, without weights.
    pub fn resolve(&self) -> Result<(NetworkSpec, HardwareConfig)> {
        if self.format_version != MANIFEST_FORMAT_VERSION {
            return Err(Error::Validation(format!(
                "unsupported manifest format_version {}",
                self.format_version
            )));
        }
        let mut topology = parse_topology(&self.topology, self.pop_per_class)?;
        if let Some(padding) = &self.padding {
            topology.set_conv_padding(padding)?;
        }
        let beta = Fx32::from_decimal_str(&self.beta)?;
        let spec = NetworkSpec::new(topology, self.timesteps, beta, self.classes, self.pop_per_class)?;
        let hw = HardwareConfig {
            layers: self
                .layers
                .iter()
                .map(|l| CoreConfig {
                    nc_count: l.nc_count,
                    chunk_count: l.chunk_count,
                })
                .collect(),
            clock_mhz: self.clock_mhz,
            timing: self.timing,
        };
        hw.validate(&spec)?;
        Ok((spec, hw))
    }
}

/// Read, validate and shape-check a manifest and all of its blobs.
pub fn load_manifest(path: &Path) -> Result<Model> {
    let file = ManifestFile::read(path)?;
    let (spec, hw) = file.resolve()?;
    let base = path.parent().unwrap_or(Path::new("."));
    let mut entries = file.layers.iter();
    let mut layers = Vec::with_capacity(spec.layers().len());
    for (i, layer) in spec.layers().iter().enumerate() {
        let Some(zeros) = LayerParams::zeros(layer) else {
            layers.push(None);
            continue;
        };
        let entry = entries.next().expect("hardware validation checked the entry count");
        let weights = read_blob(i, "weights", &base.join(&entry.weights_file), zeros.weights.len())?;
        let bias = read_blob(i, "bias", &base.join(&entry.bias_file), zeros.bias.len())?;
        layers.push(Some(LayerParams { weights, bias }));
    }
    Model::new(spec, Weights { layers }, hw)
}

/// Write `manifest.json`-style `path` plus one weight and one bias blob per
/// compute layer next to it (`layer{i}.weights.bin`, `layer{i}.bias.bin`).
pub fn save_manifest(path: &Path, model: &Model) -> Result<()> {
    let dir = path.parent().unwrap_or(Path::new("."));
    let mut layers = Vec::new();
    let mut cores = model.hw.layers.iter();
    for (i, params) in model.weights.layers.iter().enumerate() {
        let Some(params) = params else { continue };
        let weights_file = PathBuf::from(format!("layer{i}.weights.bin"));
        let bias_file = PathBuf::from(format!("layer{i}.bias.bin"));
        write(&dir.join(&weights_file), &encode_blob(&params.weights))?;
        write(&dir.join(&bias_file), &encode_blob(&params.bias))?;
        let cfg = cores.next().expect("one core config per compute layer");
        layers.push(ManifestLayer {
            nc_count: cfg.nc_count,
            chunk_count: cfg.chunk_count,
            weights_file,
            bias_file,
        });
    }
    let padding = model
        .spec
        .layers()
        .iter()
        .filter_map(|l| match l {
            LayerSpec::Conv(c) => Some(c.padding),
            _ => None,
        })
        .collect::<Vec<_>>();
    let file = ManifestFile {
        format_version: MANIFEST_FORMAT_VERSION,
        topology: model.spec.render_topology(),
        padding: (!padding.is_empty()).then_some(padding),
        timesteps: model.spec.timesteps,
        beta: model.spec.beta.to_decimal_string(),
        classes: model.spec.classes,
        pop_per_class: model.spec.pop_per_class,
        clock_mhz: model.hw.clock_mhz,
        timing: model.hw.timing,
        layers,
    };
    let json = serde_json::to_string_pretty(&file).expect("manifest serializes") + "\n";
    write(path, json.as_bytes())
}

fn write(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}
