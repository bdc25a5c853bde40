//! Parameter files: an 8-byte little-endian header length, a JSON shape
//! header, then every parameter as little-endian f64 in the order of
//! `Mlp::visit_params`.

use std::path::Path;

use anyhow::{bail, ensure, Context, Result};
use illusion_forge_core::fusion::FusionMode;
use illusion_forge_core::trainer::{Activation, Layer, Mlp};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamHeader {
    pub dtype: String,
    pub mode: FusionMode,
    pub activation: Activation,
    /// (inputs, outputs) per trunk layer.
    pub trunk: Vec<(usize, usize)>,
    /// (inputs, outputs) per head.
    pub heads: Vec<(usize, usize)>,
    pub count: usize,
}

pub fn encode_params(net: &Mlp) -> Vec<u8> {
    let shape = |ls: &[Layer]| ls.iter().map(|l| (l.inputs, l.outputs)).collect();
    let header = ParamHeader {
        dtype: "f64le".into(),
        mode: net.mode,
        activation: net.activation,
        trunk: shape(&net.trunk),
        heads: shape(&net.heads),
        count: net.param_count(),
    };
    let json = serde_json::to_vec(&header).expect("header serializes");
    let mut out = Vec::with_capacity(8 + json.len() + 8 * header.count);
    out.extend_from_slice(&(json.len() as u64).to_le_bytes());
    out.extend_from_slice(&json);
    net.visit_params(|p| out.extend_from_slice(&p.to_le_bytes()));
    out
}

pub fn decode_params(bytes: &[u8]) -> Result<Mlp> {
    ensure!(bytes.len() >= 8, "truncated parameter file");
    let hlen = u64::from_le_bytes(bytes[..8].try_into()?) as usize;
    ensure!(bytes.len() >= 8 + hlen, "truncated parameter header");
    let header: ParamHeader = serde_json::from_slice(&bytes[8..8 + hlen])?;
    if header.dtype != "f64le" {
        bail!("unsupported dtype {}", header.dtype);
    }
    let data = &bytes[8 + hlen..];
    ensure!(data.len() == 8 * header.count, "expected {} parameters, found {} bytes", header.count, data.len());
    let zeros = |shape: &[(usize, usize)]| -> Vec<Layer> {
        shape
            .iter()
            .map(|&(i, o)| Layer { inputs: i, outputs: o, weights: vec![0.0; i * o], bias: vec![0.0; o] })
            .collect()
    };
    let mut net = Mlp { mode: header.mode, activation: header.activation, trunk: zeros(&header.trunk), heads: zeros(&header.heads) };
    ensure!(net.param_count() == header.count, "header count does not match shapes");
    let mut values = data.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")));
    net.visit_params_mut(|p| *p = values.next().expect("count checked"));
    Ok(net)
}

pub fn save_params(path: &Path, net: &Mlp) -> Result<()> {
    std::fs::write(path, encode_params(net)).with_context(|| format!("writing {}", path.display()))
}

pub fn load_params(path: &Path) -> Result<Mlp> {
    decode_params(&std::fs::read(path).with_context(|| format!("reading {}", path.display()))?)
}
