//! JSON model files.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::cnn::{ArchMeta, CnnModel, ConvLayer, DenseLayer, Params};
use crate::{Error, Result};

pub const FORMAT_VERSION: u64 = 1;

#[derive(Serialize, Deserialize)]
struct ModelFile {
    format_version: u64,
    arch_meta: ArchMeta,
    rng_seed: u64,
    parameters: ParamFile,
}

#[derive(Serialize, Deserialize)]
struct ParamFile {
    conv: Vec<ConvFile>,
    dense1: DenseFile,
    dense2: DenseFile,
}

#[derive(Serialize, Deserialize)]
struct ConvFile {
    /// `[out][in][3][3]`
    kernels: Vec<Vec<Vec<Vec<f64>>>>,
    bias: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct DenseFile {
    /// `[out][in]`
    weights: Vec<Vec<f64>>,
    bias: Vec<f64>,
}

fn conv_to_file(c: &ConvLayer) -> ConvFile {
    let kernels = c
        .weights
        .chunks(c.in_ch * 9)
        .map(|o| o.chunks(9).map(|k| k.chunks(3).map(<[f64]>::to_vec).collect()).collect())
        .collect();
    ConvFile { kernels, bias: c.bias.clone() }
}

fn dense_to_file(d: &DenseLayer) -> DenseFile {
    DenseFile { weights: d.weights.chunks(d.inputs).map(<[f64]>::to_vec).collect(), bias: d.bias.clone() }
}

fn shape_err(what: &str, expected: impl std::fmt::Debug, got: impl std::fmt::Debug) -> Error {
    Error::ShapeMismatch(format!("{what}: expected {expected:?}, got {got:?}"))
}

fn fill_conv(file: ConvFile, layer: &mut ConvLayer, l: usize) -> Result<()> {
    let dims = (
        file.kernels.len(),
        file.kernels.first().map_or(0, Vec::len),
        file.kernels.first().and_then(|k| k.first()).map_or(0, Vec::len),
    );
    if dims.0 != layer.out_ch || file.bias.len() != layer.out_ch {
        return Err(shape_err(&format!("conv{l} output channels"), layer.out_ch, (dims.0, file.bias.len())));
    }
    let mut flat = Vec::with_capacity(layer.weights.len());
    for o in &file.kernels {
        if o.len() != layer.in_ch {
            return Err(shape_err(&format!("conv{l} input channels"), layer.in_ch, o.len()));
        }
        for k in o {
            if k.len() != 3 || k.iter().any(|r| r.len() != 3) {
                return Err(shape_err(&format!("conv{l} kernel"), (3, 3), k.iter().map(Vec::len).collect::<Vec<_>>()));
            }
            k.iter().for_each(|r| flat.extend_from_slice(r));
        }
    }
    layer.weights = flat;
    layer.bias = file.bias;
    Ok(())
}

fn fill_dense(file: DenseFile, layer: &mut DenseLayer, name: &str) -> Result<()> {
    if file.weights.len() != layer.outputs || file.bias.len() != layer.outputs {
        return Err(shape_err(&format!("{name} outputs"), layer.outputs, (file.weights.len(), file.bias.len())));
    }
    if let Some(row) = file.weights.iter().find(|r| r.len() != layer.inputs) {
        return Err(shape_err(&format!("{name} inputs"), layer.inputs, row.len()));
    }
    layer.weights = file.weights.concat();
    layer.bias = file.bias;
    Ok(())
}

pub fn model_to_json(model: &CnnModel) -> Result<String> {
    let file = ModelFile {
        format_version: FORMAT_VERSION,
        arch_meta: model.arch.clone(),
        rng_seed: model.seed,
        parameters: ParamFile {
            conv: model.params.conv.iter().map(conv_to_file).collect(),
            dense1: dense_to_file(&model.params.dense1),
            dense2: dense_to_file(&model.params.dense2),
        },
    };
    Ok(serde_json::to_string(&file)?)
}

pub fn model_from_json(text: &str) -> Result<CnnModel> {
    let value: serde_json::Value = serde_json::from_str(text)?;
    let version = value
        .get("format_version")
        .and_then(serde_json::Value::as_u64)
        .ok_or_else(|| Error::InvalidManifest("model file lacks format_version".into()))?;
    if version != FORMAT_VERSION {
        return Err(Error::VersionMismatch(version));
    }
    let file: ModelFile = serde_json::from_value(value)?;
    file.arch_meta.validate()?;
    let mut params = Params::zeros(&file.arch_meta);
    let p = file.parameters;
    if p.conv.len() != params.conv.len() {
        return Err(shape_err("conv layer count", params.conv.len(), p.conv.len()));
    }
    for (l, (cf, layer)) in p.conv.into_iter().zip(&mut params.conv).enumerate() {
        fill_conv(cf, layer, l)?;
    }
    fill_dense(p.dense1, &mut params.dense1, "dense1")?;
    fill_dense(p.dense2, &mut params.dense2, "dense2")?;
    if !params.all_finite() {
        return Err(Error::ShapeMismatch("non-finite parameter".into()));
    }
    Ok(CnnModel { arch: file.arch_meta, params, seed: file.rng_seed })
}

pub fn save_model(model: &CnnModel, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, model_to_json(model)?)?;
    Ok(())
}

pub fn load_model(path: impl AsRef<Path>) -> Result<CnnModel> {
    let path = path.as_ref();
    if !path.exists() {
        return Err(Error::MissingFile(path.to_path_buf()));
    }
    model_from_json(&std::fs::read_to_string(path)?)
}
