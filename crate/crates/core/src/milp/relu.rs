//! ReLU feed-forward networks: forward pass, interval bounds and the
//! big-M mixed-integer encoding.

use super::enclosure::EncodeError;
use super::model::{MilpModel, RowSense, VarId};
use crate::expr::Interval;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Relu,
    Identity,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    /// `weights[k]` is the row for output neuron `k`.
    pub weights: Vec<Vec<f64>>,
    pub bias: Vec<f64>,
    pub activation: Activation,
}

impl Layer {
    pub fn inputs(&self) -> usize {
        self.weights.first().map_or(0, Vec::len)
    }

    pub fn outputs(&self) -> usize {
        self.bias.len()
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum NetworkError {
    #[error("network has no layers")]
    Empty,
    #[error("layer {layer}: {msg}")]
    Shape { layer: usize, msg: String },
    #[error("layer {0} holds a non-finite entry")]
    NonFinite(usize),
    #[error("the last layer must be linear")]
    FinalActivation,
    #[error("constant mask has {got} entries for {want} outputs")]
    Mask { got: usize, want: usize },
}

/// A ReLU network whose outputs may be overridden by constants.
#[derive(Debug, Clone, PartialEq)]
pub struct NeuralNetwork {
    layers: Vec<Layer>,
    constants: Vec<Option<f64>>,
}

impl NeuralNetwork {
    pub fn new(
        layers: Vec<Layer>,
        constants: Vec<Option<f64>>,
    ) -> Result<NeuralNetwork, NetworkError> {
        let last = layers.last().ok_or(NetworkError::Empty)?;
        if last.activation != Activation::Identity {
            return Err(NetworkError::FinalActivation);
        }
        let mut width = layers[0].inputs();
        for (li, l) in layers.iter().enumerate() {
            if l.weights.len() != l.bias.len() {
                return Err(NetworkError::Shape {
                    layer: li,
                    msg: format!(
                        "{} weight rows but {} biases",
                        l.weights.len(),
                        l.bias.len()
                    ),
                });
            }
            if let Some(r) = l.weights.iter().position(|r| r.len() != width) {
                return Err(NetworkError::Shape {
                    layer: li,
                    msg: format!(
                        "row {r} has {} entries, expected {width}",
                        l.weights[r].len()
                    ),
                });
            }
            if l.weights
                .iter()
                .flatten()
                .chain(&l.bias)
                .any(|v| !v.is_finite())
            {
                return Err(NetworkError::NonFinite(li));
            }
            width = l.outputs();
        }
        if constants.len() != width {
            return Err(NetworkError::Mask {
                got: constants.len(),
                want: width,
            });
        }
        Ok(NeuralNetwork { layers, constants })
    }

    /// Network with no layers' effect: every output is the given constant.
    pub fn constant(n_in: usize, values: &[f64]) -> NeuralNetwork {
        let layer = Layer {
            weights: vec![vec![0.0; n_in]; values.len()],
            bias: values.to_vec(),
            activation: Activation::Identity,
        };
        NeuralNetwork {
            layers: vec![layer],
            constants: values.iter().map(|&v| Some(v)).collect(),
        }
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn constants(&self) -> &[Option<f64>] {
        &self.constants
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].inputs()
    }

    pub fn output_dim(&self) -> usize {
        self.constants.len()
    }

    /// True when every output is a fixed constant.
    pub fn is_constant(&self) -> bool {
        self.constants.iter().all(Option::is_some)
    }

    /// Outputs of the raw network, ignoring the constant mask.
    pub fn forward_raw(&self, x: &[f64]) -> Vec<f64> {
        let mut a = x.to_vec();
        for l in &self.layers {
            a = l
                .weights
                .iter()
                .zip(&l.bias)
                .map(|(row, b)| {
                    let z = row.iter().zip(&a).map(|(w, v)| w * v).sum::<f64>() + b;
                    match l.activation {
                        Activation::Relu => z.max(0.0),
                        Activation::Identity => z,
                    }
                })
                .collect();
        }
        a
    }

    pub fn forward(&self, x: &[f64]) -> Vec<f64> {
        let raw = if self.is_constant() {
            vec![0.0; self.output_dim()]
        } else {
            self.forward_raw(x)
        };
        raw.iter()
            .zip(&self.constants)
            .map(|(v, c)| c.unwrap_or(*v))
            .collect()
    }
}

/// Pre-activation intervals of every neuron, layer by layer.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerBounds {
    pub pre: Vec<Vec<Interval>>,
}

fn pad(iv: Interval) -> Interval {
    Interval {
        lo: iv.lo - 1e-9 * (1.0 + iv.lo.abs()),
        hi: iv.hi + 1e-9 * (1.0 + iv.hi.abs()),
    }
}

/// Interval matrix-vector propagation of an input box.
pub fn propagate_preactivation_bounds(net: &NeuralNetwork, input: &[Interval]) -> LayerBounds {
    let mut a = input.to_vec();
    let mut pre = Vec::with_capacity(net.layers.len());
    for l in &net.layers {
        let z: Vec<Interval> = l
            .weights
            .iter()
            .zip(&l.bias)
            .map(|(row, &b)| {
                let (mut lo, mut hi) = (b, b);
                for (&w, iv) in row.iter().zip(&a) {
                    if w >= 0.0 {
                        lo += w * iv.lo;
                        hi += w * iv.hi;
                    } else {
                        lo += w * iv.hi;
                        hi += w * iv.lo;
                    }
                }
                pad(Interval { lo, hi })
            })
            .collect();
        a = match l.activation {
            Activation::Relu => z
                .iter()
                .map(|iv| Interval {
                    lo: iv.lo.max(0.0),
                    hi: iv.hi.max(0.0),
                })
                .collect(),
            Activation::Identity => z.clone(),
        };
        pre.push(z);
    }
    LayerBounds { pre }
}

/// Encodes the network on `inputs`, returning one variable per output.
/// Masked outputs become fixed variables `u[t][k]`. Stable neurons get the
/// linear encoding; the rest get an indicator `d[t][l][k]`.
pub fn encode_relu_network(
    model: &mut MilpModel,
    net: &NeuralNetwork,
    bounds: &LayerBounds,
    inputs: &[VarId],
    t: usize,
) -> Result<Vec<VarId>, EncodeError> {
    if inputs.len() != net.input_dim() {
        return Err(EncodeError::Inputs {
            got: inputs.len(),
            want: net.input_dim(),
        });
    }
    let mut raw: Vec<Option<VarId>> = Vec::new();
    if !net.is_constant() {
        // None stands for an activation that is identically zero
        let mut act: Vec<Option<VarId>> = inputs.iter().copied().map(Some).collect();
        for (li, l) in net.layers.iter().enumerate() {
            let mut next = Vec::with_capacity(l.outputs());
            for (k, (row, &bias)) in l.weights.iter().zip(&l.bias).enumerate() {
                let iv = bounds.pre[li][k];
                let z = model.continuous(format!("z[{t}][{li}][{k}]"), iv.lo, iv.hi)?;
                let mut terms = vec![(z, 1.0)];
                terms.extend(
                    row.iter()
                        .zip(&act)
                        .filter_map(|(&w, a)| a.map(|v| (v, -w))),
                );
                model.add_row(terms, RowSense::Eq, bias)?;
                let out = match l.activation {
                    Activation::Identity => Some(z),
                    Activation::Relu if iv.hi <= 0.0 => None,
                    Activation::Relu if iv.lo >= 0.0 => Some(z),
                    Activation::Relu => {
                        let a = model.continuous(format!("a[{t}][{li}][{k}]"), 0.0, iv.hi)?;
                        let d = model.binary(format!("d[{t}][{li}][{k}]"))?;
                        model.add_row(vec![(a, 1.0), (z, -1.0)], RowSense::Ge, 0.0)?;
                        model.add_row(
                            vec![(a, 1.0), (z, -1.0), (d, -iv.lo)],
                            RowSense::Le,
                            -iv.lo,
                        )?;
                        model.add_row(vec![(a, 1.0), (d, -iv.hi)], RowSense::Le, 0.0)?;
                        Some(a)
                    }
                };
                next.push(out);
            }
            act = next;
        }
        raw = act;
    }
    let mut outs = Vec::with_capacity(net.output_dim());
    for (k, c) in net.constants.iter().enumerate() {
        match c {
            Some(c) => outs.push(model.continuous(format!("u[{t}][{k}]"), *c, *c)?),
            None => match raw[k] {
                Some(v) => outs.push(v),
                None => outs.push(model.continuous(format!("u[{t}][{k}]"), 0.0, 0.0)?),
            },
        }
    }
    Ok(outs)
}
