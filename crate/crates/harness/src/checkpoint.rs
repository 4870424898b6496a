//! JSON checkpoints: a manifest plus named tensors stored as base64
//! little-endian f64 arrays.

use std::collections::BTreeMap;
use std::path::Path;

use base64::engine::general_purpose::STANDARD;
use base64::Engine;
use pregrasp::env::EnvConfig;
use pregrasp::nn::{Network, OptimizerState};
use pregrasp::sac::{Architecture, EvalReport, NetworksBundle, TrainerConfig};
use serde::{Deserialize, Serialize};

use crate::HarnessError;

pub const FORMAT_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckpointMeta {
    pub seed: u64,
    /// Index of the next episode to run.
    pub episode: usize,
    pub env_steps: u64,
    pub gradient_steps: u64,
    pub config_digest: String,
    pub architecture: Architecture,
    pub env: EnvConfig,
    pub trainer: TrainerConfig,
    /// Evaluation that selected this policy, for best-policy checkpoints.
    pub evaluation: Option<EvalReport>,
    pub created_by: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
struct AdamHyper {
    step: u64,
    beta1: f64,
    beta2: f64,
    eps: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct TensorRecord {
    name: String,
    shape: Vec<usize>,
    data: String,
}

#[derive(Debug, Serialize, Deserialize)]
struct CheckpointFile {
    format_version: u32,
    metadata: CheckpointMeta,
    optimizers: BTreeMap<String, AdamHyper>,
    tensors: Vec<TensorRecord>,
}

fn encode(values: &[f64]) -> String {
    let bytes: Vec<u8> = values.iter().flat_map(|v| v.to_le_bytes()).collect();
    STANDARD.encode(bytes)
}

fn decode(name: &str, text: &str, expected_len: usize) -> Result<Vec<f64>, HarnessError> {
    let bytes = STANDARD
        .decode(text)
        .map_err(|e| HarnessError::corrupt(format!("tensor `{name}`: {e}")))?;
    if bytes.len() != 8 * expected_len {
        return Err(HarnessError::corrupt(format!(
            "tensor `{name}` holds {} bytes, shape needs {}",
            bytes.len(),
            8 * expected_len
        )));
    }
    Ok(bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
        .collect())
}

fn networks(b: &NetworksBundle) -> [(&'static str, &Network); 6] {
    [
        ("actor", &b.actor),
        ("critic1", &b.critic1),
        ("critic2", &b.critic2),
        ("target_critic1", &b.target_critic1),
        ("target_critic2", &b.target_critic2),
        ("value", &b.value),
    ]
}

fn optimizers(b: &NetworksBundle) -> [(&'static str, &OptimizerState); 5] {
    [
        ("actor", &b.actor_opt),
        ("critic1", &b.critic1_opt),
        ("critic2", &b.critic2_opt),
        ("value", &b.value_opt),
        ("alpha", &b.alpha_opt),
    ]
}

/// Every tensor name and shape a bundle of `arch` stores, in file order.
pub fn tensor_manifest(arch: &Architecture) -> Vec<(String, Vec<usize>)> {
    let bundle = NetworksBundle::zeros(arch.clone()).expect("valid architecture");
    named_tensors(&bundle).into_iter().map(|(n, s, _)| (n, s)).collect()
}

fn named_tensors(b: &NetworksBundle) -> Vec<(String, Vec<usize>, Vec<f64>)> {
    let mut out = Vec::new();
    for (net_name, net) in networks(b) {
        for (t, shape, range) in net.tensor_layout() {
            out.push((format!("{net_name}.{t}"), shape, net.params()[range].to_vec()));
        }
    }
    out.push(("log_alpha".into(), vec![1], vec![b.log_alpha]));
    for (opt_name, opt) in optimizers(b) {
        let n = opt.len();
        out.push((format!("opt.{opt_name}.first_moment"), vec![n], opt.first_moment.clone()));
        out.push((format!("opt.{opt_name}.second_moment"), vec![n], opt.second_moment.clone()));
    }
    out
}

pub fn save_checkpoint(bundle: &NetworksBundle, meta: &CheckpointMeta, path: &Path) -> Result<(), HarnessError> {
    if meta.architecture != bundle.architecture {
        return Err(HarnessError::InvalidArgument(
            "metadata architecture differs from the bundle".into(),
        ));
    }
    let file = CheckpointFile {
        format_version: FORMAT_VERSION,
        metadata: meta.clone(),
        optimizers: optimizers(bundle)
            .into_iter()
            .map(|(name, o)| {
                (
                    name.to_string(),
                    AdamHyper {
                        step: o.step,
                        beta1: o.beta1,
                        beta2: o.beta2,
                        eps: o.eps,
                    },
                )
            })
            .collect(),
        tensors: named_tensors(bundle)
            .into_iter()
            .map(|(name, shape, data)| TensorRecord {
                name,
                shape,
                data: encode(&data),
            })
            .collect(),
    };
    let text = serde_json::to_string_pretty(&file).expect("checkpoint serializes");
    let tmp = path.with_extension("json.tmp");
    std::fs::write(&tmp, text).map_err(|e| HarnessError::io(&tmp, e))?;
    std::fs::rename(&tmp, path).map_err(|e| HarnessError::io(path, e))
}

fn parse_file(path: &Path) -> Result<CheckpointFile, HarnessError> {
    let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
    let value: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| HarnessError::corrupt(format!("{}: {e}", path.display())))?;
    let version = value
        .get("format_version")
        .and_then(|v| v.as_u64())
        .ok_or_else(|| HarnessError::corrupt(format!("{}: missing format_version", path.display())))?;
    if version != u64::from(FORMAT_VERSION) {
        return Err(HarnessError::VersionMismatch {
            found: version,
            supported: FORMAT_VERSION,
        });
    }
    serde_json::from_value(value).map_err(|e| HarnessError::corrupt(format!("{}: {e}", path.display())))
}

fn build_bundle(file: CheckpointFile, arch: &Architecture) -> Result<NetworksBundle, HarnessError> {
    let mut bundle = NetworksBundle::zeros(arch.clone()).map_err(HarnessError::Sac)?;
    let template = named_tensors(&bundle);
    let mut stored: BTreeMap<String, TensorRecord> = BTreeMap::new();
    for t in file.tensors {
        if stored.insert(t.name.clone(), t).is_some() {
            return Err(HarnessError::corrupt("duplicate tensor name".to_string()));
        }
    }
    let mut values: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    for (name, shape, _) in &template {
        let record = stored
            .remove(name)
            .ok_or_else(|| HarnessError::corrupt(format!("tensor `{name}` is missing")))?;
        if &record.shape != shape {
            return Err(HarnessError::ShapeMismatch {
                tensor: name.clone(),
                expected: shape.clone(),
                found: record.shape,
            });
        }
        let len = shape.iter().product();
        values.insert(name.clone(), decode(name, &record.data, len)?);
    }
    if let Some(extra) = stored.keys().next() {
        return Err(HarnessError::corrupt(format!("unexpected tensor `{extra}`")));
    }

    let fill = |net_name: &str, net: &mut Network, values: &BTreeMap<String, Vec<f64>>| {
        let mut params = vec![0.0; net.num_params()];
        for (t, _, range) in net.tensor_layout() {
            params[range].copy_from_slice(&values[&format!("{net_name}.{t}")]);
        }
        net.set_params(&params).expect("template length");
    };
    fill("actor", &mut bundle.actor, &values);
    fill("critic1", &mut bundle.critic1, &values);
    fill("critic2", &mut bundle.critic2, &values);
    fill("target_critic1", &mut bundle.target_critic1, &values);
    fill("target_critic2", &mut bundle.target_critic2, &values);
    fill("value", &mut bundle.value, &values);
    bundle.log_alpha = values["log_alpha"][0];

    for (opt_name, opt) in [
        ("actor", &mut bundle.actor_opt),
        ("critic1", &mut bundle.critic1_opt),
        ("critic2", &mut bundle.critic2_opt),
        ("value", &mut bundle.value_opt),
        ("alpha", &mut bundle.alpha_opt),
    ] {
        let h = file
            .optimizers
            .get(opt_name)
            .ok_or_else(|| HarnessError::corrupt(format!("optimizer `{opt_name}` is missing")))?;
        opt.step = h.step;
        opt.beta1 = h.beta1;
        opt.beta2 = h.beta2;
        opt.eps = h.eps;
        opt.first_moment.clone_from(&values[&format!("opt.{opt_name}.first_moment")]);
        opt.second_moment.clone_from(&values[&format!("opt.{opt_name}.second_moment")]);
    }
    Ok(bundle)
}

/// Loads a checkpoint with the architecture recorded in it.
pub fn load_checkpoint(path: &Path) -> Result<(NetworksBundle, CheckpointMeta), HarnessError> {
    let file = parse_file(path)?;
    let meta = file.metadata.clone();
    let arch = meta.architecture.clone();
    Ok((build_bundle(file, &arch)?, meta))
}

/// Loads a checkpoint into a bundle of `arch`, failing on the first tensor
/// whose stored shape differs.
pub fn load_checkpoint_as(path: &Path, arch: &Architecture) -> Result<(NetworksBundle, CheckpointMeta), HarnessError> {
    let file = parse_file(path)?;
    let meta = file.metadata.clone();
    Ok((build_bundle(file, arch)?, meta))
}
