use std::fmt::Write as _;

use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::graph::Feature;

const MAGIC: &str = "alge-predictor 1";

/// Layer widths. Hidden attention layers concatenate `heads` outputs of
/// `hidden_per_head` units; the last attention layer averages `heads`
/// outputs of `heads * hidden_per_head` units, so every embedding is
/// `heads * hidden_per_head` wide.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ModelDims {
    pub input: usize,
    pub heads: usize,
    pub hidden_per_head: usize,
    pub layers: usize,
    pub fc_hidden: usize,
}

impl Default for ModelDims {
    fn default() -> Self {
        ModelDims {
            input: Feature::DEFAULT.len(),
            heads: 8,
            hidden_per_head: 8,
            layers: 3,
            fc_hidden: 32,
        }
    }
}

impl ModelDims {
    pub fn embedding(&self) -> usize {
        self.heads * self.hidden_per_head
    }

    pub fn layer_input(&self, layer: usize) -> usize {
        if layer == 0 {
            self.input
        } else {
            self.embedding()
        }
    }

    pub fn concatenates(&self, layer: usize) -> bool {
        layer + 1 < self.layers
    }

    pub fn head_output(&self, layer: usize) -> usize {
        if self.concatenates(layer) {
            self.hidden_per_head
        } else {
            self.embedding()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.input == 0 || self.heads == 0 || self.hidden_per_head == 0 || self.layers == 0 || self.fc_hidden == 0 {
            return Err(Error::param(format!("all model dimensions must be positive: {self:?}")));
        }
        Ok(())
    }
}

/// One attention head: `e_ij = a . LeakyReLU(W_c h_i + W_n h_j)`, message `W_n h_j`.
#[derive(Debug, Clone, PartialEq)]
pub struct AttentionHead {
    /// Projection of the receiving node, `out x in`.
    pub w_center: Array2<f64>,
    /// Projection of the neighbour (also the message), `out x in`.
    pub w_neighbor: Array2<f64>,
    pub attn: Array1<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PredictorParams {
    pub dims: ModelDims,
    pub features: Vec<Feature>,
    /// `layers[l][h]`
    pub layers: Vec<Vec<AttentionHead>>,
    pub fc1_w: Array2<f64>,
    pub fc1_b: Array1<f64>,
    pub fc2_w: Array1<f64>,
    pub fc2_b: Array1<f64>,
}

fn glorot(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Array2<f64> {
    let limit = (6.0 / (rows + cols) as f64).sqrt();
    Array2::from_shape_simple_fn((rows, cols), || rng.random_range(-limit..limit))
}

impl PredictorParams {
    /// Glorot-uniform weights and zero biases.
    pub fn init(dims: ModelDims, features: Vec<Feature>, seed: u64) -> Result<Self> {
        dims.validate()?;
        if features.len() != dims.input {
            return Err(Error::Shape(format!(
                "{} features for input width {}",
                features.len(),
                dims.input
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let layers = (0..dims.layers)
            .map(|l| {
                let (din, dout) = (dims.layer_input(l), dims.head_output(l));
                (0..dims.heads)
                    .map(|_| AttentionHead {
                        w_center: glorot(&mut rng, dout, din),
                        w_neighbor: glorot(&mut rng, dout, din),
                        attn: glorot(&mut rng, dout, 1).into_shape_with_order(dout).expect("column"),
                    })
                    .collect()
            })
            .collect();
        let emb = dims.embedding();
        Ok(PredictorParams {
            dims,
            features,
            layers,
            fc1_w: glorot(&mut rng, dims.fc_hidden, emb),
            fc1_b: Array1::zeros(dims.fc_hidden),
            fc2_w: glorot(&mut rng, dims.fc_hidden, 1).into_shape_with_order(dims.fc_hidden).expect("column"),
            fc2_b: Array1::zeros(1),
        })
    }

    /// Same shapes, all zeros (gradient accumulator).
    pub fn zeros_like(&self) -> Self {
        let mut z = self.clone();
        for t in z.tensors_mut() {
            t.iter_mut().for_each(|x| *x = 0.0);
        }
        z
    }

    /// Every tensor with its name and `(rows, cols)` shape, in a fixed order.
    pub fn manifest(&self) -> Vec<(String, usize, usize)> {
        let mut out = Vec::new();
        for (l, heads) in self.layers.iter().enumerate() {
            for (h, head) in heads.iter().enumerate() {
                let (r, c) = head.w_center.dim();
                out.push((format!("layer{l}.head{h}.w_center"), r, c));
                out.push((format!("layer{l}.head{h}.w_neighbor"), r, c));
                out.push((format!("layer{l}.head{h}.attn"), 1, head.attn.len()));
            }
        }
        let (r, c) = self.fc1_w.dim();
        out.push(("fc1.w".into(), r, c));
        out.push(("fc1.b".into(), 1, self.fc1_b.len()));
        out.push(("fc2.w".into(), 1, self.fc2_w.len()));
        out.push(("fc2.b".into(), 1, 1));
        out
    }

    pub fn tensors(&self) -> Vec<&[f64]> {
        let mut out: Vec<&[f64]> = Vec::new();
        for heads in &self.layers {
            for head in heads {
                out.push(head.w_center.as_slice().expect("standard layout"));
                out.push(head.w_neighbor.as_slice().expect("standard layout"));
                out.push(head.attn.as_slice().expect("standard layout"));
            }
        }
        out.push(self.fc1_w.as_slice().expect("standard layout"));
        out.push(self.fc1_b.as_slice().expect("standard layout"));
        out.push(self.fc2_w.as_slice().expect("standard layout"));
        out.push(self.fc2_b.as_slice().expect("standard layout"));
        out
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out: Vec<&mut [f64]> = Vec::new();
        for heads in &mut self.layers {
            for head in heads {
                out.push(head.w_center.as_slice_mut().expect("standard layout"));
                out.push(head.w_neighbor.as_slice_mut().expect("standard layout"));
                out.push(head.attn.as_slice_mut().expect("standard layout"));
            }
        }
        out.push(self.fc1_w.as_slice_mut().expect("standard layout"));
        out.push(self.fc1_b.as_slice_mut().expect("standard layout"));
        out.push(self.fc2_w.as_slice_mut().expect("standard layout"));
        out.push(self.fc2_b.as_slice_mut().expect("standard layout"));
        out
    }

    pub fn parameter_count(&self) -> usize {
        self.tensors().iter().map(|t| t.len()).sum()
    }

    /// Plain-text form: magic line, dimensions, feature list, then one
    /// `tensor <name> <rows> <cols>` block per tensor with one row of
    /// shortest round-trip decimals per line.
    pub fn to_text(&self) -> String {
        let d = &self.dims;
        let mut out = String::new();
        let _ = writeln!(out, "{MAGIC}");
        let _ = writeln!(
            out,
            "dims input={} heads={} hidden_per_head={} layers={} fc_hidden={}",
            d.input, d.heads, d.hidden_per_head, d.layers, d.fc_hidden
        );
        let names: Vec<&str> = self.features.iter().map(|f| f.name()).collect();
        let _ = writeln!(out, "features {}", names.join(","));
        for ((name, rows, cols), values) in self.manifest().into_iter().zip(self.tensors()) {
            let _ = writeln!(out, "tensor {name} {rows} {cols}");
            for row in values.chunks(cols) {
                let cells: Vec<String> = row.iter().map(|x| format!("{x:?}")).collect();
                let _ = writeln!(out, "{}", cells.join(" "));
            }
        }
        out.push_str("end\n");
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim_end()))
            .skip_while(|(_, l)| l.starts_with('#'));
        let mut next = |what: &str| {
            lines
                .next()
                .ok_or_else(|| Error::parse(0, format!("unexpected end of file, expected {what}")))
        };
        let (ln, magic) = next("header")?;
        if magic != MAGIC {
            return Err(Error::parse(ln, format!("expected {MAGIC:?}")));
        }
        let (ln, dims_line) = next("dims")?;
        let dims = parse_dims(ln, dims_line)?;
        let (ln, feature_line) = next("features")?;
        let features = feature_line
            .strip_prefix("features ")
            .ok_or_else(|| Error::parse(ln, "expected feature list"))?
            .split(',')
            .map(str::parse)
            .collect::<Result<Vec<Feature>>>()
            .map_err(|e| Error::parse(ln, e.to_string()))?;
        let mut params = PredictorParams::init(dims, features, 0).map_err(|e| Error::parse(ln, e.to_string()))?;
        let manifest = params.manifest();
        for ((name, rows, cols), tensor) in manifest.into_iter().zip(params.tensors_mut()) {
            let (ln, head) = next("tensor header")?;
            let expected = format!("tensor {name} {rows} {cols}");
            if head != expected {
                return Err(Error::parse(ln, format!("expected {expected:?}, found {head:?}")));
            }
            for r in 0..rows {
                let (ln, row) = next("tensor row")?;
                let cells: Vec<&str> = row.split_whitespace().collect();
                if cells.len() != cols {
                    return Err(Error::parse(ln, format!("expected {cols} values, found {}", cells.len())));
                }
                for (c, cell) in cells.iter().enumerate() {
                    tensor[r * cols + c] = cell
                        .parse()
                        .map_err(|_| Error::parse(ln, format!("invalid number {cell:?}")))?;
                }
            }
        }
        let (ln, end) = next("end")?;
        if end != "end" {
            return Err(Error::parse(ln, "expected end marker"));
        }
        Ok(params)
    }
}

fn parse_dims(ln: usize, line: &str) -> Result<ModelDims> {
    let rest = line
        .strip_prefix("dims ")
        .ok_or_else(|| Error::parse(ln, "expected dims line"))?;
    let mut dims = ModelDims::default();
    let mut seen = 0;
    for kv in rest.split_whitespace() {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| Error::parse(ln, format!("malformed {kv:?}")))?;
        let v: usize = v.parse().map_err(|_| Error::parse(ln, format!("malformed {kv:?}")))?;
        let slot = match k {
            "input" => &mut dims.input,
            "heads" => &mut dims.heads,
            "hidden_per_head" => &mut dims.hidden_per_head,
            "layers" => &mut dims.layers,
            "fc_hidden" => &mut dims.fc_hidden,
            _ => return Err(Error::parse(ln, format!("unknown dimension {k:?}"))),
        };
        *slot = v;
        seen += 1;
    }
    if seen != 5 {
        return Err(Error::parse(ln, "dims line must list all five dimensions"));
    }
    Ok(dims)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_shapes() {
        let p = PredictorParams::init(ModelDims::default(), Feature::DEFAULT.to_vec(), 1).unwrap();
        assert_eq!(p.layers.len(), 3);
        assert!(p.layers.iter().all(|l| l.len() == 8));
        assert_eq!(p.layers[0][0].w_center.dim(), (8, 4));
        assert_eq!(p.layers[1][0].w_center.dim(), (8, 64));
        assert_eq!(p.layers[2][0].w_neighbor.dim(), (64, 64));
        assert_eq!(p.fc1_w.dim(), (32, 64));
        assert_eq!(p.fc2_w.len(), 32);
        assert_eq!(p.manifest().len(), p.tensors().len());
    }

    #[test]
    fn text_round_trip_is_exact() {
        let p = PredictorParams::init(ModelDims::default(), Feature::DEFAULT.to_vec(), 42).unwrap();
        let text = p.to_text();
        let back = PredictorParams::from_text(&text).unwrap();
        assert_eq!(back, p);
        assert_eq!(back.to_text(), text);
        let commented = format!("# produced by test\n{text}");
        assert_eq!(PredictorParams::from_text(&commented).unwrap(), p);
    }

    #[test]
    fn rejects_corrupt_text() {
        let dims = ModelDims {
            heads: 2,
            hidden_per_head: 2,
            fc_hidden: 3,
            ..ModelDims::default()
        };
        let text = PredictorParams::init(dims, Feature::DEFAULT.to_vec(), 3).unwrap().to_text();
        assert!(PredictorParams::from_text(&text.replace("alge-predictor 1", "nope")).is_err());
        assert!(PredictorParams::from_text(&text.replace("fc_hidden=3", "fc_hidden=4")).is_err());
        let truncated: String = text.lines().take(12).map(|l| format!("{l}\n")).collect();
        assert!(PredictorParams::from_text(&truncated).is_err());
        assert!(PredictorParams::init(dims, vec![Feature::Degree], 0).is_err());
    }
}
