//! Feed-forward Q-network loaded from a plain-text weights file.
//!
//! Format, ignoring blank lines and `#` comments:
//!
//! ```text
//! relu                 activation: relu or tanh
//! 4 32 2               layer dims, input first
//! <out rows of in numbers>   layer 1 weights, row-major
//! <1 row of out numbers>     layer 1 bias
//! ...                        repeated per layer
//! ```
//!
//! The activation applies to every layer except the last, which is linear
//! so outputs can serve directly as Q-values.

use crate::error::{Error, Result};
use std::fmt::Write as _;
use std::path::Path;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Relu,
    Tanh,
}

impl Activation {
    fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Relu => x.max(0.0),
            Activation::Tanh => x.tanh(),
        }
    }

    fn name(self) -> &'static str {
        match self {
            Activation::Relu => "relu",
            Activation::Tanh => "tanh",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
struct Layer {
    /// Row-major, `rows` x `cols` where `rows` is the output width.
    weights: Vec<f64>,
    bias: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NetworkWeights {
    pub activation: Activation,
    pub dims: Vec<usize>,
    layers: Vec<Layer>,
}

impl NetworkWeights {
    pub fn new(
        activation: Activation,
        dims: Vec<usize>,
        flat: Vec<(Vec<f64>, Vec<f64>)>,
    ) -> Result<NetworkWeights> {
        if dims.len() < 2 {
            return Err(Error::contract("network needs at least input and output dims"));
        }
        if flat.len() != dims.len() - 1 {
            return Err(Error::contract(format!(
                "expected {} layers, got {}",
                dims.len() - 1,
                flat.len()
            )));
        }
        let mut layers = Vec::with_capacity(flat.len());
        for (i, (weights, bias)) in flat.into_iter().enumerate() {
            let (rows, cols) = (dims[i + 1], dims[i]);
            if weights.len() != rows * cols {
                return Err(Error::contract(format!(
                    "layer {i}: expected {rows}x{cols} weights, got {}",
                    weights.len()
                )));
            }
            if bias.len() != rows {
                return Err(Error::contract(format!(
                    "layer {i}: expected {rows} bias entries, got {}",
                    bias.len()
                )));
            }
            layers.push(Layer { weights, bias });
        }
        Ok(NetworkWeights { activation, dims, layers })
    }

    pub fn input_dim(&self) -> usize {
        self.dims[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.dims.last().unwrap()
    }

    pub fn forward(&self, input: &[f64]) -> Vec<f64> {
        debug_assert_eq!(input.len(), self.input_dim());
        let mut x = input.to_vec();
        let last = self.layers.len() - 1;
        for (li, layer) in self.layers.iter().enumerate() {
            let cols = self.dims[li];
            let rows = self.dims[li + 1];
            let mut y = layer.bias.clone();
            for r in 0..rows {
                let row = &layer.weights[r * cols..(r + 1) * cols];
                let mut acc = 0.0;
                for c in 0..cols {
                    acc += row[c] * x[c];
                }
                y[r] += acc;
            }
            if li != last {
                for v in &mut y {
                    *v = self.activation.apply(*v);
                }
            }
            x = y;
        }
        x
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{}", self.activation.name());
        let mut first = true;
        for d in &self.dims {
            if !first {
                out.push(' ');
            }
            let _ = write!(out, "{d}");
            first = false;
        }
        out.push('\n');
        for (li, layer) in self.layers.iter().enumerate() {
            let cols = self.dims[li];
            for row in layer.weights.chunks(cols) {
                push_row(&mut out, row);
            }
            push_row(&mut out, &layer.bias);
        }
        out
    }

    pub fn load(path: &Path) -> Result<NetworkWeights> {
        let text = std::fs::read_to_string(path)?;
        let p = path.display().to_string();
        let mut lines = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'));

        let activation = match lines.next() {
            Some("relu") => Activation::Relu,
            Some("tanh") => Activation::Tanh,
            other => {
                return Err(Error::parse(
                    &p,
                    format!("expected activation relu or tanh, got {other:?}"),
                ))
            }
        };
        let dims_line = lines
            .next()
            .ok_or_else(|| Error::parse(&p, "missing dims line"))?;
        let dims: Vec<usize> = dims_line
            .split_whitespace()
            .map(|t| {
                t.parse::<usize>()
                    .map_err(|_| Error::parse(&p, format!("bad dim {t:?}")))
            })
            .collect::<Result<_>>()?;
        if dims.len() < 2 || dims.contains(&0) {
            return Err(Error::parse(&p, format!("bad dims {dims:?}")));
        }

        let mut row =
            |layer: usize, what: &str, want: usize| -> Result<Vec<f64>> {
                let line = lines.next().ok_or_else(|| {
                    Error::parse(&p, format!("layer {layer}: missing {what} row"))
                })?;
                let vals: Vec<f64> = line
                    .split_whitespace()
                    .map(|t| {
                        t.parse::<f64>().map_err(|_| {
                            Error::parse(
                                &p,
                                format!("layer {layer}: bad number {t:?} in {what} row"),
                            )
                        })
                    })
                    .collect::<Result<_>>()?;
                if vals.len() != want {
                    return Err(Error::parse(
                        &p,
                        format!(
                            "layer {layer}: {what} row has {} values, expected {want}",
                            vals.len()
                        ),
                    ));
                }
                Ok(vals)
            };

        let mut flat = Vec::new();
        for li in 0..dims.len() - 1 {
            let (rows, cols) = (dims[li + 1], dims[li]);
            let mut weights = Vec::with_capacity(rows * cols);
            for _ in 0..rows {
                weights.extend(row(li, "weight", cols)?);
            }
            let bias = row(li, "bias", rows)?;
            flat.push((weights, bias));
        }
        if lines.next().is_some() {
            return Err(Error::parse(&p, "trailing data after last layer"));
        }
        NetworkWeights::new(activation, dims, flat)
    }
}

fn push_row(out: &mut String, row: &[f64]) {
    let mut first = true;
    for v in row {
        if !first {
            out.push(' ');
        }
        let _ = write!(out, "{v}");
        first = false;
    }
    out.push('\n');
}
