//! Multi-DNN workload representation: layers, model graphs, dependences,
//! and the layer arithmetic (output dims, MAC counts, tensor sizes) that
//! every downstream cost and scheduling module builds on.
//!
//! A workload file lists each model once with a `batch` count; parsing
//! expands batches into independent model-graph copies with globally
//! unique layer ids.

use std::collections::HashMap;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::WorkloadError;

/// Layer operator kind.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OpKind {
    Conv2d,
    Pwconv,
    Dwconv,
    Fc,
    Trconv,
    Elemwise,
}

impl OpKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            OpKind::Conv2d => "conv2d",
            OpKind::Pwconv => "pwconv",
            OpKind::Dwconv => "dwconv",
            OpKind::Fc => "fc",
            OpKind::Trconv => "trconv",
            OpKind::Elemwise => "elemwise",
        }
    }

    /// True for kinds that slide a filter over the input.
    pub fn is_convolutional(&self) -> bool {
        matches!(
            self,
            OpKind::Conv2d | OpKind::Pwconv | OpKind::Dwconv | OpKind::Trconv
        )
    }
}

impl fmt::Display for OpKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Globally unique layer id, dense after batch expansion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LayerId(pub u32);

impl LayerId {
    pub fn index(&self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for LayerId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "L{}", self.0)
    }
}

/// One DNN layer. `K`/`C` are output/input channels, `Y`/`X` the input
/// activation height/width (pre-padded), `R`/`S` the filter height/width.
#[derive(Debug, Clone)]
pub struct Layer {
    pub id: LayerId,
    /// Layer name unique within its model, e.g. `conv1`.
    pub name: String,
    /// Index of the owning (expanded) model instance in the workload.
    pub model: usize,
    pub op: OpKind,
    pub k: u64,
    pub c: u64,
    pub y: u64,
    pub x: u64,
    pub r: u64,
    pub s: u64,
    pub stride: u64,
    /// Input upsampling factor, meaningful for `trconv` only.
    pub upscale: u64,
    /// Predecessor layer ids within the same model instance.
    pub depends_on: Vec<LayerId>,
}

impl Layer {
    /// Output spatial extents `(Yo, Xo)`.
    ///
    /// Convolutional kinds use valid (no-padding) convolution with explicit
    /// stride; `trconv` is computed on the upsampled input; `fc` collapses
    /// to `(1, 1)` and `elemwise` passes the input through.
    pub fn output_dims(&self) -> (u64, u64) {
        match self.op {
            OpKind::Conv2d | OpKind::Pwconv | OpKind::Dwconv => (
                (self.y - self.r) / self.stride + 1,
                (self.x - self.s) / self.stride + 1,
            ),
            OpKind::Trconv => (
                (self.y * self.upscale - self.r) / self.stride + 1,
                (self.x * self.upscale - self.s) / self.stride + 1,
            ),
            OpKind::Fc => (1, 1),
            OpKind::Elemwise => (self.y, self.x),
        }
    }

    /// Number of multiply-accumulate operations.
    pub fn mac_count(&self) -> u64 {
        let (yo, xo) = self.output_dims();
        match self.op {
            OpKind::Conv2d | OpKind::Pwconv | OpKind::Fc | OpKind::Trconv => {
                self.k * self.c * yo * xo * self.r * self.s
            }
            // No cross-channel accumulation: each output channel pairs with
            // exactly one input channel.
            OpKind::Dwconv => self.k * yo * xo * self.r * self.s,
            OpKind::Elemwise => 0,
        }
    }

    /// Tensor footprints in elements: `(weights, inputs, outputs)`.
    pub fn tensor_sizes(&self) -> (u64, u64, u64) {
        let (yo, xo) = self.output_dims();
        let w = match self.op {
            OpKind::Dwconv => self.k * self.r * self.s,
            OpKind::Elemwise => 0,
            _ => self.k * self.c * self.r * self.s,
        };
        let i = self.c * self.y * self.x;
        let o = self.k * yo * xo;
        (w, i, o)
    }

    /// Input channels divided by activation height, a scalar shape
    /// descriptor separating channel-heavy from activation-heavy layers.
    pub fn channel_activation_ratio(&self) -> f64 {
        self.c as f64 / self.y as f64
    }

    /// Channel multiplier `M = K / C` of a depth-wise layer, 1 otherwise.
    pub fn channel_multiplier(&self) -> u64 {
        if self.op == OpKind::Dwconv {
            self.k / self.c
        } else {
            1
        }
    }

    fn check_invariants(&self, model: &str) -> Result<(), WorkloadError> {
        let err = |reason: String| WorkloadError::Invariant {
            model: model.to_string(),
            layer: self.name.clone(),
            reason,
        };
        for (dim, v) in [
            ("K", self.k),
            ("C", self.c),
            ("Y", self.y),
            ("X", self.x),
            ("R", self.r),
            ("S", self.s),
            ("stride", self.stride),
            ("upscale", self.upscale),
        ] {
            if v < 1 {
                return Err(err(format!("{dim} must be >= 1, got {v}")));
            }
        }
        match self.op {
            OpKind::Pwconv => {
                if self.r != 1 || self.s != 1 {
                    return Err(err(format!(
                        "pwconv requires R = S = 1, got R={}, S={}",
                        self.r, self.s
                    )));
                }
            }
            OpKind::Fc => {
                if self.y != 1 || self.x != 1 || self.r != 1 || self.s != 1 || self.stride != 1 {
                    return Err(err("fc requires Y = X = R = S = stride = 1".into()));
                }
            }
            OpKind::Dwconv => {
                if self.k % self.c != 0 {
                    return Err(err(format!(
                        "K not a multiple of C (K={}, C={})",
                        self.k, self.c
                    )));
                }
            }
            OpKind::Elemwise => {
                if self.r != 1 || self.s != 1 {
                    return Err(err("elemwise requires R = S = 1".into()));
                }
            }
            OpKind::Conv2d | OpKind::Trconv => {}
        }
        if self.op.is_convolutional() {
            if self.stride > self.r || self.stride > self.s {
                return Err(err(format!(
                    "stride {} exceeds filter extent R={}, S={}",
                    self.stride, self.r, self.s
                )));
            }
            let (ye, xe) = if self.op == OpKind::Trconv {
                (self.y * self.upscale, self.x * self.upscale)
            } else {
                (self.y, self.x)
            };
            if ye < self.r || xe < self.s {
                return Err(err(format!(
                    "filter {}x{} does not fit input {}x{}",
                    self.r, self.s, ye, xe
                )));
            }
        }
        Ok(())
    }
}

/// One expanded model instance: `instance` distinguishes batch copies.
#[derive(Debug, Clone)]
pub struct ModelGraph {
    pub name: String,
    pub instance: u32,
    pub layers: Vec<Layer>,
}

impl ModelGraph {
    /// Display name such as `unet[2]`.
    pub fn label(&self) -> String {
        format!("{}[{}]", self.name, self.instance)
    }
}

/// A multi-DNN workload: a list of mutually independent model instances.
#[derive(Debug, Clone)]
pub struct Workload {
    pub models: Vec<ModelGraph>,
    // layer id -> (model index, layer index within model)
    index: Vec<(usize, usize)>,
}

impl Workload {
    pub fn layer_count(&self) -> usize {
        self.index.len()
    }

    pub fn layer(&self, id: LayerId) -> &Layer {
        let (m, l) = self.index[id.index()];
        &self.models[m].layers[l]
    }

    pub fn layers(&self) -> impl Iterator<Item = &Layer> {
        self.models.iter().flat_map(|m| m.layers.iter())
    }

    pub fn model_of(&self, id: LayerId) -> &ModelGraph {
        &self.models[self.index[id.index()].0]
    }

    /// Display name such as `unet[2]/dec1_conv2`.
    pub fn layer_label(&self, id: LayerId) -> String {
        let layer = self.layer(id);
        format!("{}/{}", self.models[layer.model].label(), layer.name)
    }

    pub fn total_macs(&self) -> u64 {
        self.layers().map(|l| l.mac_count()).sum()
    }

    /// Layers whose predecessors are all in `completed`, excluding layers
    /// already completed. Errors if `completed` is not dependence-closed.
    pub fn ready_set(
        &self,
        completed: &std::collections::HashSet<LayerId>,
    ) -> Result<Vec<&Layer>, WorkloadError> {
        for id in completed {
            let layer = self.layer(*id);
            for dep in &layer.depends_on {
                if !completed.contains(dep) {
                    return Err(WorkloadError::Model {
                        model: self.models[layer.model].label(),
                        reason: format!(
                            "completed set is not dependence-closed: {} done before {}",
                            layer.name,
                            self.layer(*dep).name
                        ),
                    });
                }
            }
        }
        let mut ready: Vec<&Layer> = self
            .layers()
            .filter(|l| !completed.contains(&l.id))
            .filter(|l| l.depends_on.iter().all(|d| completed.contains(d)))
            .collect();
        ready.sort_by_key(|l| l.id);
        Ok(ready)
    }

    /// Builds a validated workload from its raw file form, expanding
    /// batches into independent model instances.
    pub fn from_raw(raw: RawWorkload) -> Result<Self, WorkloadError> {
        if raw.model.is_empty() {
            return Err(WorkloadError::Parse("workload declares no models".into()));
        }
        let mut models = Vec::new();
        let mut index = Vec::new();
        let mut next_id = 0u32;
        for rm in &raw.model {
            if rm.batch < 1 {
                return Err(WorkloadError::Model {
                    model: rm.name.clone(),
                    reason: "batch must be >= 1".into(),
                });
            }
            if rm.layer.is_empty() {
                return Err(WorkloadError::Model {
                    model: rm.name.clone(),
                    reason: "model declares no layers".into(),
                });
            }
            for instance in 0..rm.batch {
                let model_idx = models.len();
                let mut name_to_id: HashMap<String, LayerId> = HashMap::new();
                let mut layers = Vec::with_capacity(rm.layer.len());
                for (li, rl) in rm.layer.iter().enumerate() {
                    let id = LayerId(next_id);
                    next_id += 1;
                    let lname = rl
                        .name
                        .clone()
                        .unwrap_or_else(|| format!("l{li}"));
                    if name_to_id.contains_key(lname.as_str()) {
                        return Err(WorkloadError::Model {
                            model: rm.name.clone(),
                            reason: format!("duplicate layer name `{lname}`"),
                        });
                    }
                    let deps: Vec<LayerId> = match &rl.depends_on {
                        Some(names) => {
                            let mut ids = Vec::with_capacity(names.len());
                            for n in names {
                                match name_to_id.get(n.as_str()) {
                                    Some(d) => ids.push(*d),
                                    None => {
                                        return Err(WorkloadError::Invariant {
                                            model: rm.name.clone(),
                                            layer: lname.clone(),
                                            reason: format!(
                                                "depends_on references `{n}`, which is not an earlier layer"
                                            ),
                                        })
                                    }
                                }
                            }
                            ids
                        }
                        // Omitted depends_on chains to the previous layer.
                        None if li > 0 => vec![layers[li - 1].id],
                        None => vec![],
                    };
                    if li > 0 && deps.is_empty() {
                        return Err(WorkloadError::Invariant {
                            model: rm.name.clone(),
                            layer: lname.clone(),
                            reason: "non-first layer must have at least one predecessor".into(),
                        });
                    }
                    let op = rl.op;
                    let layer = Layer {
                        id,
                        name: lname.clone(),
                        model: model_idx,
                        op,
                        k: rl.k,
                        c: rl.c,
                        y: rl.y,
                        x: rl.x,
                        r: rl.r,
                        s: rl.s,
                        stride: rl.stride,
                        upscale: rl.upscale,
                        depends_on: deps,
                    };
                    layer.check_invariants(&rm.name)?;
                    name_to_id.insert(lname, id);
                    index.push((model_idx, li));
                    layers.push(layer);
                }
                models.push(ModelGraph {
                    name: rm.name.clone(),
                    instance,
                    layers,
                });
            }
        }
        Ok(Workload { models, index })
    }
}

/// Raw on-disk workload form (TOML `[[model]]` / `[[model.layer]]`).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RawWorkload {
    pub model: Vec<RawModel>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RawModel {
    pub name: String,
    #[serde(default = "one_u32")]
    pub batch: u32,
    pub layer: Vec<RawLayer>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RawLayer {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub op: OpKind,
    pub k: u64,
    pub c: u64,
    #[serde(default = "one_u64")]
    pub y: u64,
    #[serde(default = "one_u64")]
    pub x: u64,
    #[serde(default = "one_u64")]
    pub r: u64,
    #[serde(default = "one_u64")]
    pub s: u64,
    #[serde(default = "one_u64")]
    pub stride: u64,
    #[serde(default = "one_u64")]
    pub upscale: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub depends_on: Option<Vec<String>>,
}

fn one_u32() -> u32 {
    1
}
fn one_u64() -> u64 {
    1
}

/// Parses a workload file, expanding batches and checking all invariants.
pub fn parse_workload(path: &Path) -> Result<Workload, WorkloadError> {
    let text = std::fs::read_to_string(path).map_err(|source| WorkloadError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_workload_str(&text)
}

/// Parses workload text in the file format.
pub fn parse_workload_str(text: &str) -> Result<Workload, WorkloadError> {
    let raw: RawWorkload =
        toml::from_str(text).map_err(|e| WorkloadError::Parse(e.to_string()))?;
    Workload::from_raw(raw)
}

/// Serializes a raw workload back to the file format.
pub fn workload_to_string(raw: &RawWorkload) -> String {
    toml::to_string_pretty(raw).expect("workload serialization cannot fail")
}
