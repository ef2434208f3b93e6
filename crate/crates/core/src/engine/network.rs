use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// One layer of a dense feed-forward learner.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Layer {
    Affine { in_dim: usize, out_dim: usize },
    Relu,
    /// Marks the logits as class scores. Forward is the identity; the softmax
    /// is folded into the cross-entropy loss.
    SoftmaxOutput { num_classes: usize },
}

/// Validated layer stack: affine/relu blocks ending in exactly one softmax output.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawSpec", into = "RawSpec")]
pub struct NetworkSpec {
    layers: Vec<Layer>,
    input_dim: usize,
    class_count: usize,
}

#[derive(Serialize, Deserialize)]
struct RawSpec {
    layers: Vec<Layer>,
}

impl TryFrom<RawSpec> for NetworkSpec {
    type Error = Error;

    fn try_from(raw: RawSpec) -> Result<Self> {
        NetworkSpec::new(raw.layers)
    }
}

impl From<NetworkSpec> for RawSpec {
    fn from(spec: NetworkSpec) -> Self {
        RawSpec {
            layers: spec.layers,
        }
    }
}

impl NetworkSpec {
    pub fn new(layers: Vec<Layer>) -> Result<Self> {
        let Some(Layer::Affine { in_dim, .. }) = layers.first().copied() else {
            return Err(Error::InvalidSpec("first layer must be affine".into()));
        };
        let mut width = in_dim;
        let mut class_count = None;
        for (j, layer) in layers.iter().enumerate() {
            if class_count.is_some() {
                return Err(Error::InvalidSpec(format!(
                    "layer {j} follows the output layer"
                )));
            }
            match *layer {
                Layer::Affine { in_dim, out_dim } => {
                    if in_dim == 0 || out_dim == 0 {
                        return Err(Error::InvalidSpec(format!("layer {j} has a zero dimension")));
                    }
                    if in_dim != width {
                        return Err(Error::InvalidSpec(format!(
                            "layer {j} expects {in_dim} inputs but receives {width}"
                        )));
                    }
                    width = out_dim;
                }
                Layer::Relu => {}
                Layer::SoftmaxOutput { num_classes } => {
                    if num_classes != width {
                        return Err(Error::InvalidSpec(format!(
                            "output layer declares {num_classes} classes but receives {width} scores"
                        )));
                    }
                    class_count = Some(num_classes);
                }
            }
        }
        let class_count =
            class_count.ok_or_else(|| Error::InvalidSpec("missing softmax output layer".into()))?;
        Ok(NetworkSpec {
            layers,
            input_dim: in_dim,
            class_count,
        })
    }

    /// Affine layers of the given widths with ReLU between them.
    pub fn mlp(input_dim: usize, hidden: &[usize], class_count: usize) -> Result<Self> {
        let mut layers = Vec::new();
        let mut width = input_dim;
        for &h in hidden {
            layers.push(Layer::Affine {
                in_dim: width,
                out_dim: h,
            });
            layers.push(Layer::Relu);
            width = h;
        }
        layers.push(Layer::Affine {
            in_dim: width,
            out_dim: class_count,
        });
        layers.push(Layer::SoftmaxOutput {
            num_classes: class_count,
        });
        NetworkSpec::new(layers)
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn class_count(&self) -> usize {
        self.class_count
    }

    /// `(in_dim, out_dim)` of each affine layer, in order.
    pub fn affine_dims(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.layers.iter().filter_map(|l| match *l {
            Layer::Affine { in_dim, out_dim } => Some((in_dim, out_dim)),
            _ => None,
        })
    }

    /// SHA-256 of the canonical JSON encoding.
    pub fn digest(&self) -> [u8; 32] {
        let json = serde_json::to_vec(self).expect("spec serializes");
        Sha256::digest(&json).into()
    }
}
