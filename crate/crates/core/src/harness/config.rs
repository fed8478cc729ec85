use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::classical::{HeadKind, Preproc};
use crate::error::{Error, Result};
use crate::qnn::{Encoding, QnnArch, QnnKind, Readout};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Hybrid,
    Classical,
}

/// One point of the experiment grid.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ModelConfig {
    pub family: Family,
    pub preproc: Preproc,
    pub latent_dim: usize,
    pub tanh_pi: bool,
    pub qnn: Option<QnnArch>,
    pub head: Option<HeadKind>,
    pub seed: u64,
}

impl ModelConfig {
    pub fn hybrid(
        preproc: Preproc,
        latent_dim: usize,
        tanh_pi: bool,
        qnn: QnnArch,
        seed: u64,
    ) -> Self {
        Self {
            family: Family::Hybrid,
            preproc,
            latent_dim,
            tanh_pi,
            qnn: Some(qnn),
            head: None,
            seed,
        }
    }

    pub fn classical(preproc: Preproc, latent_dim: usize, head: HeadKind, seed: u64) -> Self {
        Self {
            family: Family::Classical,
            preproc,
            latent_dim,
            tanh_pi: false,
            qnn: None,
            head: Some(head),
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        match (self.family, &self.qnn, self.head) {
            (Family::Hybrid, Some(arch), None) => {
                arch.validate()?;
                if self.tanh_pi && arch.kind.encoding() != Encoding::Angle {
                    return bad("π·tanh applies only to angle-encoding QNNs");
                }
                QnnArch::qubits_for_latent(self.latent_dim)?;
            }
            (Family::Classical, None, Some(head)) => {
                if head == HeadKind::LinearOut {
                    return bad("linear_out is the hybrid readout, not a classical head");
                }
                if self.tanh_pi {
                    return bad("π·tanh applies only to angle-encoding QNNs");
                }
            }
            (Family::Hybrid, _, _) => return bad("hybrid models need a QNN and no head"),
            (Family::Classical, _, _) => return bad("classical models need a head and no QNN"),
        }
        if self.latent_dim == 0 {
            return bad("latent dimension must be positive");
        }
        Ok(())
    }

    /// Summary group: "classical" or the QNN family label.
    pub fn group(&self) -> &'static str {
        match &self.qnn {
            Some(arch) => arch.kind.label(),
            None => "classical",
        }
    }

    /// Compact human-readable name, e.g. `Ang-RY/3conv/16/tanh/ent/local`.
    pub fn label(&self) -> String {
        let mut parts = vec![
            self.group().to_string(),
            self.preproc.label().to_string(),
            self.latent_dim.to_string(),
        ];
        match (&self.qnn, self.head) {
            (Some(arch), _) => {
                if arch.kind.encoding() == Encoding::Angle {
                    parts.push(if self.tanh_pi { "tanh" } else { "linear" }.into());
                }
                if arch.kind != QnnKind::Qcnn {
                    parts.push(if arch.entangle { "ent" } else { "noent" }.into());
                    parts.push(readout_label(arch.readout).into());
                }
            }
            (None, Some(head)) => parts.push(head.label().into()),
            (None, None) => {}
        }
        parts.join("/")
    }

    /// Hex SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        hash_json(&serde_json::to_value(self).expect("config serializes"))
    }
}

pub fn readout_label(r: Readout) -> &'static str {
    match r {
        Readout::Local => "local",
        Readout::Global => "global",
        Readout::Final => "final",
    }
}

pub(crate) fn hash_json(value: &serde_json::Value) -> String {
    let digest = Sha256::digest(value.to_string().as_bytes());
    digest.iter().take(16).map(|b| format!("{b:02x}")).collect()
}

/// Axis values of the experiment grid. Combinations violating the
/// [`ModelConfig`] invariants are skipped during expansion.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSpec {
    pub families: Vec<Family>,
    pub qnn: Vec<QnnKind>,
    pub preproc: Vec<Preproc>,
    pub latent_dim: Vec<usize>,
    pub tanh_pi: Vec<bool>,
    pub entangle: Vec<bool>,
    pub readout: Vec<Readout>,
    pub heads: Vec<HeadKind>,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            families: vec![Family::Hybrid, Family::Classical],
            qnn: vec![
                QnnKind::AngRy,
                QnnKind::AngArb,
                QnnKind::AmpGen,
                QnnKind::Qcnn,
            ],
            preproc: vec![Preproc::Conv3, Preproc::Conv1, Preproc::Conv0],
            latent_dim: vec![16, 256],
            tanh_pi: vec![false, true],
            entangle: vec![false, true],
            readout: vec![Readout::Local, Readout::Global],
            heads: vec![
                HeadKind::None,
                HeadKind::Fcnone,
                HeadKind::Fcrelu,
                HeadKind::Mlp,
            ],
        }
    }
}

impl GridSpec {
    pub fn classical_only() -> Self {
        Self {
            families: vec![Family::Classical],
            ..Self::default()
        }
    }
}

/// Enumerates every valid configuration, in a fixed order.
pub fn expand_grid(spec: &GridSpec, seed: u64) -> Result<Vec<ModelConfig>> {
    let axes: [(&str, usize); 5] = [
        ("families", spec.families.len()),
        ("preproc", spec.preproc.len()),
        ("latent_dim", spec.latent_dim.len()),
        ("tanh_pi", spec.tanh_pi.len()),
        ("entangle", spec.entangle.len()),
    ];
    if let Some((name, _)) = axes.iter().find(|(_, n)| *n == 0) {
        return Err(Error::Config(format!("grid axis {name} is empty")));
    }
    if spec.families.contains(&Family::Hybrid) && (spec.qnn.is_empty() || spec.readout.is_empty()) {
        return Err(Error::Config(
            "hybrid grid needs qnn and readout values".into(),
        ));
    }
    if spec.families.contains(&Family::Classical) && spec.heads.is_empty() {
        return Err(Error::Config("classical grid needs head values".into()));
    }
    let mut out = Vec::new();
    let mut push = |c: ModelConfig| {
        if c.validate().is_ok() && !out.contains(&c) {
            out.push(c);
        }
    };
    for &family in &spec.families {
        match family {
            Family::Hybrid => {
                for &kind in &spec.qnn {
                    for &preproc in &spec.preproc {
                        for &latent in &spec.latent_dim {
                            if kind == QnnKind::Qcnn {
                                push(ModelConfig::hybrid(
                                    preproc,
                                    latent,
                                    false,
                                    QnnArch::qcnn(),
                                    seed,
                                ));
                                continue;
                            }
                            for &tanh in &spec.tanh_pi {
                                for &entangle in &spec.entangle {
                                    for &readout in &spec.readout {
                                        let arch = QnnArch {
                                            kind,
                                            entangle,
                                            readout,
                                        };
                                        push(ModelConfig::hybrid(
                                            preproc, latent, tanh, arch, seed,
                                        ));
                                    }
                                }
                            }
                        }
                    }
                }
            }
            Family::Classical => {
                for &preproc in &spec.preproc {
                    for &latent in &spec.latent_dim {
                        for &head in &spec.heads {
                            push(ModelConfig::classical(preproc, latent, head, seed));
                        }
                    }
                }
            }
        }
    }
    if out.is_empty() {
        return Err(Error::Config(
            "grid expands to no valid configuration".into(),
        ));
    }
    Ok(out)
}

/// Splitmix64 finalizer.
fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Independent RNG seed for one (config, fold, stream) triple.
pub fn derive_seed(master: u64, config_hash: &str, fold: usize, stream: u64) -> u64 {
    let h = u64::from_str_radix(&config_hash[..16.min(config_hash.len())], 16).unwrap_or(0);
    let mut s = mix(master ^ 0x9e37_79b9_7f4a_7c15);
    for part in [h, fold as u64, stream] {
        s = mix(s ^ part.wrapping_add(0x9e37_79b9_7f4a_7c15));
    }
    s
}
