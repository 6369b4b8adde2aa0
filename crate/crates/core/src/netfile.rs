//! Plain-text controller files.
//!
//! ```text
//! // comment lines start with two slashes
//! 2                     number of layers
//! 2,3,1                 layer sizes, input first
//! relu,identity         one activation per layer
//! w11,w12               weights of layer 1, one row per neuron
//! ...
//! b1                    biases of layer 1, one per line
//! ...                   (then layer 2, and so on)
//! outputs               trailing section, one line per network output:
//! net                   the output comes from the network
//! const 0               the output is replaced by a constant
//! ```
//!
//! The `outputs` section is optional; without it every output is `net`.

use std::path::Path;

use crate::milp::{Activation, Layer, NetworkError, NeuralNetwork};

#[derive(Debug, thiserror::Error)]
pub enum NetFileError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("byte {offset} (line {line}): {msg}")]
    Parse {
        offset: usize,
        line: usize,
        msg: String,
    },
    #[error(transparent)]
    Network(#[from] NetworkError),
}

struct Lines<'a> {
    items: Vec<(usize, usize, &'a str)>,
    pos: usize,
    len: usize,
}

impl<'a> Lines<'a> {
    fn new(text: &'a str) -> Lines<'a> {
        let mut items = Vec::new();
        let mut offset = 0;
        for (k, raw) in text.split_inclusive('\n').enumerate() {
            let line = raw.trim();
            if !line.is_empty() && !line.starts_with("//") {
                items.push((offset, k + 1, line));
            }
            offset += raw.len();
        }
        Lines {
            items,
            pos: 0,
            len: text.len(),
        }
    }

    fn err(&self, msg: impl Into<String>) -> NetFileError {
        let (offset, line) = match self.items.get(self.pos) {
            Some(&(o, l, _)) => (o, l),
            None => (self.len, self.items.last().map_or(1, |i| i.1 + 1)),
        };
        NetFileError::Parse {
            offset,
            line,
            msg: msg.into(),
        }
    }

    fn next(&mut self, what: &str) -> Result<&'a str, NetFileError> {
        match self.items.get(self.pos) {
            Some(&(_, _, s)) => {
                self.pos += 1;
                Ok(s)
            }
            None => Err(self.err(format!("unexpected end of file, expected {what}"))),
        }
    }

    fn peek(&self) -> Option<&'a str> {
        self.items.get(self.pos).map(|i| i.2)
    }

    fn numbers(&mut self, what: &str, want: usize) -> Result<Vec<f64>, NetFileError> {
        let s = self.next(what)?;
        let vals: Result<Vec<f64>, _> = s
            .split(',')
            .map(str::trim)
            .filter(|t| !t.is_empty())
            .map(str::parse::<f64>)
            .collect();
        self.pos -= 1;
        let vals = vals.map_err(|e| self.err(format!("{what}: {e}")))?;
        if vals.len() != want {
            return Err(self.err(format!(
                "{what}: expected {want} values, found {}",
                vals.len()
            )));
        }
        if vals.iter().any(|v| !v.is_finite()) {
            return Err(self.err(format!("{what}: non-finite value")));
        }
        self.pos += 1;
        Ok(vals)
    }
}

pub fn parse_network(text: &str) -> Result<NeuralNetwork, NetFileError> {
    let mut lines = Lines::new(text);
    let count: usize = {
        let s = lines.next("layer count")?;
        s.parse().map_err(|_| {
            lines.pos -= 1;
            lines.err(format!("layer count: cannot parse {s:?}"))
        })?
    };
    let sizes: Vec<usize> = {
        let s = lines.next("layer sizes")?;
        let v: Result<Vec<usize>, _> = s.split(',').map(|t| t.trim().parse::<usize>()).collect();
        match v {
            Ok(v) if v.len() == count + 1 => v,
            _ => {
                lines.pos -= 1;
                return Err(lines.err(format!("layer sizes: expected {} sizes", count + 1)));
            }
        }
    };
    let acts: Vec<Activation> = {
        let s = lines.next("activations")?;
        let v: Option<Vec<Activation>> = s
            .split(',')
            .map(|t| match t.trim() {
                "relu" => Some(Activation::Relu),
                "identity" | "linear" => Some(Activation::Identity),
                _ => None,
            })
            .collect();
        match v {
            Some(v) if v.len() == count => v,
            _ => {
                lines.pos -= 1;
                return Err(lines.err(format!("activations: expected {count} of relu|identity")));
            }
        }
    };
    let mut layers = Vec::with_capacity(count);
    for l in 0..count {
        let (n_in, n_out) = (sizes[l], sizes[l + 1]);
        let mut weights = Vec::with_capacity(n_out);
        for r in 0..n_out {
            weights.push(lines.numbers(&format!("layer {} weight row {}", l + 1, r + 1), n_in)?);
        }
        let mut bias = Vec::with_capacity(n_out);
        for r in 0..n_out {
            bias.push(lines.numbers(&format!("layer {} bias {}", l + 1, r + 1), 1)?[0]);
        }
        layers.push(Layer {
            weights,
            bias,
            activation: acts[l],
        });
    }
    let n_out = sizes[count];
    let mut constants = vec![None; n_out];
    if lines.peek() == Some("outputs") {
        lines.next("outputs")?;
        for c in constants.iter_mut() {
            let s = lines.next("output line")?;
            if s == "net" {
                continue;
            }
            match s.strip_prefix("const").map(|v| v.trim().parse::<f64>()) {
                Some(Ok(v)) if v.is_finite() => *c = Some(v),
                _ => {
                    lines.pos -= 1;
                    return Err(lines.err(format!(
                        "output line: expected `net` or `const <value>`, found {s:?}"
                    )));
                }
            }
        }
    }
    if lines.peek().is_some() {
        return Err(lines.err("trailing content"));
    }
    Ok(NeuralNetwork::new(layers, constants)?)
}

pub fn load_network(path: &Path) -> Result<NeuralNetwork, NetFileError> {
    let text = std::fs::read_to_string(path).map_err(|e| NetFileError::Io {
        path: path.display().to_string(),
        source: e,
    })?;
    parse_network(&text)
}

/// Writes a network in the same format, with full float precision.
pub fn write_network(net: &NeuralNetwork) -> String {
    let mut out = String::from("// polyreach network\n");
    let layers = net.layers();
    out.push_str(&format!("{}\n", layers.len()));
    let mut sizes = vec![net.input_dim()];
    sizes.extend(layers.iter().map(|l| l.outputs()));
    out.push_str(
        &sizes
            .iter()
            .map(ToString::to_string)
            .collect::<Vec<_>>()
            .join(","),
    );
    out.push('\n');
    let acts: Vec<&str> = layers
        .iter()
        .map(|l| {
            if l.activation == Activation::Relu {
                "relu"
            } else {
                "identity"
            }
        })
        .collect();
    out.push_str(&acts.join(","));
    out.push('\n');
    for l in layers {
        for row in &l.weights {
            out.push_str(
                &row.iter()
                    .map(|v| format!("{v:?}"))
                    .collect::<Vec<_>>()
                    .join(","),
            );
            out.push('\n');
        }
        for b in &l.bias {
            out.push_str(&format!("{b:?}\n"));
        }
    }
    out.push_str("outputs\n");
    for c in net.constants() {
        match c {
            Some(v) => out.push_str(&format!("const {v:?}\n")),
            None => out.push_str("net\n"),
        }
    }
    out
}
