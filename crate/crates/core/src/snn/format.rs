//! Network description files.
//!
//! A network is a TOML description listing layers in order plus one raw
//! weight blob per layer: flat little-endian signed bytes in
//! (out_channel, in_channel, ky, kx) order. Each blob carries a small
//! `.meta` TOML sidecar describing its shape, cross-checked against the
//! layer config at load time. Blob paths are resolved relative to the
//! description file.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::layer::{Layer, LayerKind, LayerWeights, SnnLayerConfig};
use super::network::SnnNetwork;
use super::neuron::ThresholdAdapt;
use super::spikes::TensorShape;
use super::SnnError;

#[derive(Debug, Serialize, Deserialize)]
struct NetworkFile {
    input: ShapeEntry,
    #[serde(rename = "layers")]
    layers: Vec<LayerEntry>,
}

#[derive(Debug, Serialize, Deserialize)]
struct ShapeEntry {
    channels: usize,
    height: usize,
    width: usize,
}

#[derive(Debug, Serialize, Deserialize)]
struct LayerEntry {
    kind: LayerKind,
    in_channels: usize,
    out_channels: usize,
    #[serde(default = "default_kernel")]
    kernel: [usize; 2],
    #[serde(default = "default_stride")]
    stride: usize,
    base_potential: i16,
    threshold: i16,
    #[serde(default)]
    adapt_increment: i16,
    #[serde(default)]
    adapt_decay: i16,
    #[serde(default)]
    refractory_steps: u32,
    #[serde(default)]
    timestep_shift: u32,
    weights: String,
}

fn default_kernel() -> [usize; 2] {
    [1, 1]
}

fn default_stride() -> usize {
    1
}

#[derive(Debug, Serialize, Deserialize)]
struct WeightSidecar {
    out_channels: usize,
    in_channels: usize,
    kernel_h: usize,
    kernel_w: usize,
}

impl LayerEntry {
    fn to_config(&self) -> SnnLayerConfig {
        SnnLayerConfig {
            kind: self.kind,
            in_channels: self.in_channels,
            out_channels: self.out_channels,
            kernel: (self.kernel[0], self.kernel[1]),
            stride: self.stride,
            base_potential: self.base_potential,
            threshold: self.threshold,
            threshold_adapt: ThresholdAdapt {
                increment: self.adapt_increment,
                decay: self.adapt_decay,
            },
            refractory_steps: self.refractory_steps,
            timestep_shift: self.timestep_shift,
        }
    }

    fn from_layer(layer: &Layer, weights: String) -> Self {
        let cfg = &layer.cfg;
        LayerEntry {
            kind: cfg.kind,
            in_channels: cfg.in_channels,
            out_channels: cfg.out_channels,
            kernel: [cfg.kernel.0, cfg.kernel.1],
            stride: cfg.stride,
            base_potential: cfg.base_potential,
            threshold: cfg.threshold,
            adapt_increment: cfg.threshold_adapt.increment,
            adapt_decay: cfg.threshold_adapt.decay,
            refractory_steps: cfg.refractory_steps,
            timestep_shift: cfg.timestep_shift,
            weights,
        }
    }
}

fn read_file(path: &Path) -> Result<Vec<u8>, SnnError> {
    fs::read(path).map_err(|source| SnnError::Io { path: path.to_path_buf(), source })
}

/// Loads a weight blob plus its sidecar, checking the declared shape.
pub(crate) fn load_weights(path: &Path, cfg: &SnnLayerConfig) -> Result<LayerWeights, SnnError> {
    let meta_path = sidecar_path(path);
    let meta_text = String::from_utf8_lossy(&read_file(&meta_path)?).into_owned();
    let meta: WeightSidecar = toml::from_str(&meta_text).map_err(|e| SnnError::Format {
        path: meta_path.clone(),
        reason: e.to_string(),
    })?;
    let (kh, kw) = cfg.kernel;
    if (meta.out_channels, meta.in_channels, meta.kernel_h, meta.kernel_w)
        != (cfg.out_channels, cfg.in_channels, kh, kw)
    {
        return Err(SnnError::Format {
            path: meta_path,
            reason: format!(
                "sidecar shape ({}, {}, {}, {}) does not match the layer config ({}, {}, {}, {})",
                meta.out_channels, meta.in_channels, meta.kernel_h, meta.kernel_w,
                cfg.out_channels, cfg.in_channels, kh, kw
            ),
        });
    }
    let bytes = read_file(path)?;
    if bytes.len() != cfg.weight_count() {
        return Err(SnnError::WeightLength {
            path: path.display().to_string(),
            expected: cfg.weight_count(),
            got: bytes.len(),
        });
    }
    Ok(LayerWeights::new(bytes.iter().map(|&b| b as i8).collect()))
}

fn sidecar_path(blob: &Path) -> PathBuf {
    let mut s = blob.as_os_str().to_os_string();
    s.push(".meta");
    PathBuf::from(s)
}

/// Loads a network description and all referenced weight blobs.
pub fn load_network(path: &Path) -> Result<SnnNetwork, SnnError> {
    let text = String::from_utf8_lossy(&read_file(path)?).into_owned();
    let file: NetworkFile = toml::from_str(&text).map_err(|e| SnnError::Format {
        path: path.to_path_buf(),
        reason: e.to_string(),
    })?;
    let base = path.parent().unwrap_or_else(|| Path::new("."));
    let input = TensorShape::new(file.input.channels, file.input.height, file.input.width);
    let mut layers = Vec::with_capacity(file.layers.len());
    for entry in &file.layers {
        let cfg = entry.to_config();
        cfg.validate()?;
        let weights = load_weights(&base.join(&entry.weights), &cfg)?;
        layers.push(Layer::new(cfg, weights)?);
    }
    SnnNetwork::new(input, layers)
}

/// Writes a network description plus weight blobs and sidecars into `dir`.
/// Returns the path of the description file.
pub fn save_network(dir: &Path, net: &SnnNetwork) -> Result<PathBuf, SnnError> {
    fs::create_dir_all(dir).map_err(|source| SnnError::Io { path: dir.to_path_buf(), source })?;
    let mut entries = Vec::new();
    for (i, layer) in net.layers().iter().enumerate() {
        let blob_name = format!("layer{i}.wts");
        let blob_path = dir.join(&blob_name);
        let bytes: Vec<u8> = layer.weights().data().iter().map(|&w| w as u8).collect();
        fs::write(&blob_path, bytes)
            .map_err(|source| SnnError::Io { path: blob_path.clone(), source })?;
        let (kh, kw) = layer.cfg.kernel;
        let sidecar = WeightSidecar {
            out_channels: layer.cfg.out_channels,
            in_channels: layer.cfg.in_channels,
            kernel_h: kh,
            kernel_w: kw,
        };
        let meta_path = sidecar_path(&blob_path);
        let meta_text = toml::to_string(&sidecar).expect("sidecar serializes");
        fs::write(&meta_path, meta_text)
            .map_err(|source| SnnError::Io { path: meta_path.clone(), source })?;
        entries.push(LayerEntry::from_layer(layer, blob_name));
    }
    let shape = net.input_shape();
    let file = NetworkFile {
        input: ShapeEntry { channels: shape.channels, height: shape.height, width: shape.width },
        layers: entries,
    };
    let out_path = dir.join("network.toml");
    let text = toml::to_string(&file).expect("network description serializes");
    fs::write(&out_path, text)
        .map_err(|source| SnnError::Io { path: out_path.clone(), source })?;
    Ok(out_path)
}
