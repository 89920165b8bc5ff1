//! Forward and backward passes of the attention regressor.

use ndarray::{s, Array1, Array2, ArrayView2, Axis};

use super::params::PredictorParams;
use crate::error::{Error, Result};
use crate::graph::{Graph, NodeFeatures};

pub const LEAKY_SLOPE: f64 = 0.2;

#[inline]
fn leaky(x: f64) -> f64 {
    if x > 0.0 {
        x
    } else {
        LEAKY_SLOPE * x
    }
}

#[inline]
fn leaky_grad(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else {
        LEAKY_SLOPE
    }
}

#[inline]
fn elu(x: f64) -> f64 {
    if x > 0.0 {
        x
    } else {
        x.exp_m1()
    }
}

#[inline]
fn elu_grad(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else {
        x.exp()
    }
}

#[inline]
fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `N(i) ∪ {i}` for every node in CSR form, each list ascending.
#[derive(Debug, Clone)]
pub struct Neighborhoods {
    pub offsets: Vec<usize>,
    pub nodes: Vec<usize>,
}

impl Neighborhoods {
    pub fn new(g: &Graph) -> Self {
        let n = g.node_count();
        let mut offsets = Vec::with_capacity(n + 1);
        let mut nodes = Vec::with_capacity(2 * g.edge_count() + n);
        offsets.push(0);
        for i in 0..n {
            let nbrs = g.neighbors(i);
            let split = nbrs.partition_point(|&j| j < i);
            nodes.extend_from_slice(&nbrs[..split]);
            nodes.push(i);
            nodes.extend_from_slice(&nbrs[split..]);
            offsets.push(nodes.len());
        }
        Neighborhoods { offsets, nodes }
    }

    pub fn range(&self, i: usize) -> std::ops::Range<usize> {
        self.offsets[i]..self.offsets[i + 1]
    }
}

struct HeadCache {
    center: Array2<f64>,
    neighbor: Array2<f64>,
    /// Attention weight per CSR slot.
    alpha: Vec<f64>,
}

struct LayerCache {
    input: Array2<f64>,
    heads: Vec<HeadCache>,
    /// Layer output before the ELU.
    pre: Array2<f64>,
}

/// Everything the backward pass needs.
pub struct ForwardCache {
    hoods: Neighborhoods,
    layers: Vec<LayerCache>,
    embedding: Array2<f64>,
    fc1_pre: Array2<f64>,
    fc1_act: Array2<f64>,
    /// Sigmoid outputs, one per node.
    pub output: Array1<f64>,
}

fn check_shapes(params: &PredictorParams, g: &Graph, x: &NodeFeatures) -> Result<()> {
    if x.rows != g.node_count() {
        return Err(Error::Shape(format!(
            "feature matrix has {} rows, graph has {} nodes",
            x.rows,
            g.node_count()
        )));
    }
    if x.features != params.features {
        return Err(Error::Shape(format!(
            "features {:?} differ from the model's {:?}",
            x.features, params.features
        )));
    }
    Ok(())
}

fn attention_layer(heads: &[super::params::AttentionHead], concat: bool, input: &Array2<f64>, hoods: &Neighborhoods) -> LayerCache {
    let n = input.nrows();
    let dout = heads[0].w_center.nrows();
    let width = if concat { dout * heads.len() } else { dout };
    let mut pre = Array2::<f64>::zeros((n, width));
    let scale = 1.0 / heads.len() as f64;
    let mut caches = Vec::with_capacity(heads.len());
    let mut z = vec![0.0; dout];
    for (h, head) in heads.iter().enumerate() {
        let center = input.dot(&head.w_center.t());
        let neighbor = input.dot(&head.w_neighbor.t());
        let cs = center.as_slice().expect("standard layout");
        let ns = neighbor.as_slice().expect("standard layout");
        let a = head.attn.as_slice().expect("standard layout");
        let mut alpha = vec![0.0; hoods.nodes.len()];
        for i in 0..n {
            let range = hoods.range(i);
            let ci = &cs[i * dout..(i + 1) * dout];
            let mut max_logit = f64::NEG_INFINITY;
            for slot in range.clone() {
                let j = hoods.nodes[slot];
                let nj = &ns[j * dout..(j + 1) * dout];
                let mut e = 0.0;
                for c in 0..dout {
                    z[c] = ci[c] + nj[c];
                    e += a[c] * leaky(z[c]);
                }
                alpha[slot] = e;
                max_logit = max_logit.max(e);
            }
            let mut total = 0.0;
            for slot in range.clone() {
                alpha[slot] = (alpha[slot] - max_logit).exp();
                total += alpha[slot];
            }
            let offset = if concat { h * dout } else { 0 };
            let mut row = pre.slice_mut(s![i, offset..offset + dout]);
            for slot in range {
                alpha[slot] /= total;
                let j = hoods.nodes[slot];
                let weight = if concat { alpha[slot] } else { alpha[slot] * scale };
                for c in 0..dout {
                    row[c] += weight * ns[j * dout + c];
                }
            }
        }
        caches.push(HeadCache {
            center,
            neighbor,
            alpha,
        });
    }
    LayerCache {
        input: input.clone(),
        heads: caches,
        pre,
    }
}

/// Runs the network on every node, keeping intermediates for backprop.
pub fn forward_cached(params: &PredictorParams, g: &Graph, x: &NodeFeatures) -> Result<ForwardCache> {
    check_shapes(params, g, x)?;
    let hoods = Neighborhoods::new(g);
    let mut h = Array2::from_shape_vec((x.rows, x.cols()), x.values.clone())
        .map_err(|e| Error::Shape(e.to_string()))?;
    let mut layers = Vec::with_capacity(params.layers.len());
    for (l, heads) in params.layers.iter().enumerate() {
        let cache = attention_layer(heads, params.dims.concatenates(l), &h, &hoods);
        h = cache.pre.mapv(elu);
        layers.push(cache);
    }
    let embedding = h;
    let fc1_pre = embedding.dot(&params.fc1_w.t()) + &params.fc1_b;
    let fc1_act = fc1_pre.mapv(elu);
    let output = (fc1_act.dot(&params.fc2_w) + params.fc2_b[0]).mapv(sigmoid);
    Ok(ForwardCache {
        hoods,
        layers,
        embedding,
        fc1_pre,
        fc1_act,
        output,
    })
}

/// Predicted influence fraction in `(0, 1)` for every node.
pub fn forward(params: &PredictorParams, g: &Graph, x: &NodeFeatures) -> Result<Vec<f64>> {
    Ok(forward_cached(params, g, x)?.output.to_vec())
}

/// Attention weights of every layer and head, aligned with [`Neighborhoods`] slots.
pub fn attention_weights(params: &PredictorParams, g: &Graph, x: &NodeFeatures) -> Result<(Neighborhoods, Vec<Vec<Vec<f64>>>)> {
    let cache = forward_cached(params, g, x)?;
    let weights = cache
        .layers
        .iter()
        .map(|l| l.heads.iter().map(|h| h.alpha.clone()).collect())
        .collect();
    Ok((cache.hoods, weights))
}

/// Accumulates into `grads` the gradient of `sum_i out_grad[i] * output[i]`.
pub fn backward(params: &PredictorParams, cache: &ForwardCache, out_grad: &[f64], grads: &mut PredictorParams) {
    let n = cache.output.len();
    // sigmoid
    let dz2 = Array1::from_shape_fn(n, |i| {
        let y = cache.output[i];
        out_grad[i] * y * (1.0 - y)
    });
    grads.fc2_b[0] += dz2.sum();
    grads.fc2_w += &cache.fc1_act.t().dot(&dz2);
    let mut d_fc1 = Array2::from_shape_fn(cache.fc1_act.dim(), |(i, c)| dz2[i] * params.fc2_w[c]);
    d_fc1.zip_mut_with(&cache.fc1_pre, |d, &p| *d *= elu_grad(p));
    grads.fc1_b += &d_fc1.sum_axis(Axis(0));
    grads.fc1_w += &d_fc1.t().dot(&cache.embedding);
    let mut d_act = d_fc1.dot(&params.fc1_w);

    for (l, layer) in cache.layers.iter().enumerate().rev() {
        let mut d_pre = d_act;
        d_pre.zip_mut_with(&layer.pre, |d, &p| *d *= elu_grad(p));
        let concat = params.dims.concatenates(l);
        let need_input_grad = l > 0;
        let mut d_input = Array2::<f64>::zeros(layer.input.dim());
        for (h, (head, hc)) in params.layers[l].iter().zip(&layer.heads).enumerate() {
            let d_head = head_output_grad(&d_pre, h, params.layers[l].len(), head.w_center.nrows(), concat);
            let (d_center, d_neighbor, d_attn) = attention_backward(head.attn.as_slice().expect("standard layout"), hc, &cache.hoods, d_head.view());
            let gh = &mut grads.layers[l][h];
            gh.attn += &d_attn;
            gh.w_center += &d_center.t().dot(&layer.input);
            gh.w_neighbor += &d_neighbor.t().dot(&layer.input);
            if need_input_grad {
                d_input += &d_center.dot(&head.w_center);
                d_input += &d_neighbor.dot(&head.w_neighbor);
            }
        }
        d_act = d_input;
    }
}

fn head_output_grad(d_pre: &Array2<f64>, h: usize, heads: usize, dout: usize, concat: bool) -> Array2<f64> {
    if concat {
        d_pre.slice(s![.., h * dout..(h + 1) * dout]).to_owned()
    } else {
        d_pre / heads as f64
    }
}

fn attention_backward(a: &[f64], hc: &HeadCache, hoods: &Neighborhoods, d_out: ArrayView2<f64>) -> (Array2<f64>, Array2<f64>, Array1<f64>) {
    let (n, dout) = hc.center.dim();
    let cs = hc.center.as_slice().expect("standard layout");
    let ns = hc.neighbor.as_slice().expect("standard layout");
    let mut d_center = Array2::<f64>::zeros((n, dout));
    let mut d_neighbor = Array2::<f64>::zeros((n, dout));
    let mut d_attn = Array1::<f64>::zeros(dout);
    let dc = d_center.as_slice_mut().expect("standard layout");
    let dn = d_neighbor.as_slice_mut().expect("standard layout");
    let da = d_attn.as_slice_mut().expect("standard layout");
    let mut d_alpha = Vec::new();
    for i in 0..n {
        let g = d_out.row(i);
        let range = hoods.range(i);
        d_alpha.clear();
        let mut weighted = 0.0;
        for slot in range.clone() {
            let j = hoods.nodes[slot];
            let alpha = hc.alpha[slot];
            let mut dot = 0.0;
            for c in 0..dout {
                dot += g[c] * ns[j * dout + c];
                dn[j * dout + c] += alpha * g[c];
            }
            d_alpha.push(dot);
            weighted += alpha * dot;
        }
        for (k, slot) in range.enumerate() {
            let j = hoods.nodes[slot];
            let de = hc.alpha[slot] * (d_alpha[k] - weighted);
            if de == 0.0 {
                continue;
            }
            for c in 0..dout {
                let z = cs[i * dout + c] + ns[j * dout + c];
                da[c] += de * leaky(z);
                let dz = de * a[c] * leaky_grad(z);
                dc[i * dout + c] += dz;
                dn[j * dout + c] += dz;
            }
        }
    }
    (d_center, d_neighbor, d_attn)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gnn::params::ModelDims;
    use crate::graph::{generate_ba, node_features, Feature};

    fn small_dims() -> ModelDims {
        ModelDims {
            heads: 2,
            hidden_per_head: 3,
            fc_hidden: 4,
            ..ModelDims::default()
        }
    }

    #[test]
    fn neighborhoods_include_self_in_order() {
        let g = Graph::from_edges(3, [(0, 2), (1, 2)]).unwrap();
        let hoods = Neighborhoods::new(&g);
        assert_eq!(&hoods.nodes[hoods.range(2)], &[0, 1, 2]);
        assert_eq!(&hoods.nodes[hoods.range(0)], &[0, 2]);
    }

    #[test]
    fn lone_node_attends_to_itself() {
        let g = Graph::from_edges(2, []).unwrap();
        let x = NodeFeatures {
            features: Feature::DEFAULT.to_vec(),
            values: vec![0.1, 0.5, 0.0, 0.3, 0.9, 0.2, 0.4, 0.0],
            rows: 2,
        };
        let p = PredictorParams::init(ModelDims::default(), Feature::DEFAULT.to_vec(), 4).unwrap();
        let (_, w) = attention_weights(&p, &g, &x).unwrap();
        assert!(w.iter().flatten().all(|alpha| alpha == &vec![1.0, 1.0]));
    }

    #[test]
    fn zero_attention_vector_averages_neighbors() {
        let g = generate_ba(20, 2, 1).unwrap();
        let x = node_features(&g).unwrap();
        let mut p = PredictorParams::init(small_dims(), Feature::DEFAULT.to_vec(), 5).unwrap();
        for head in &mut p.layers[0] {
            head.attn.fill(0.0);
        }
        let (hoods, w) = attention_weights(&p, &g, &x).unwrap();
        for i in 0..20 {
            let r = hoods.range(i);
            let expect = 1.0 / r.len() as f64;
            for slot in r {
                assert!((w[0][0][slot] - expect).abs() < 1e-15);
            }
        }
        // first-layer output of head 0 at node 0 is the mean projected neighbour
        let cache = forward_cached(&p, &g, &x).unwrap();
        let proj = cache.layers[0].input.dot(&p.layers[0][0].w_neighbor.t());
        let r = hoods.range(0);
        let count = r.len() as f64;
        for c in 0..3 {
            let mean: f64 = r.clone().map(|slot| proj[[hoods.nodes[slot], c]]).sum::<f64>() / count;
            assert!((cache.layers[0].pre[[0, c]] - mean).abs() < 1e-12);
        }
    }

    #[test]
    fn attention_rows_sum_to_one() {
        let g = generate_ba(40, 3, 2).unwrap();
        let x = node_features(&g).unwrap();
        let p = PredictorParams::init(ModelDims::default(), Feature::DEFAULT.to_vec(), 6).unwrap();
        let (hoods, w) = attention_weights(&p, &g, &x).unwrap();
        for layer in &w {
            for head in layer {
                for i in 0..40 {
                    let total: f64 = hoods.range(i).map(|s| head[s]).sum();
                    assert!((total - 1.0).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn outputs_are_fractions() {
        let g = generate_ba(30, 2, 3).unwrap();
        let x = node_features(&g).unwrap();
        let p = PredictorParams::init(ModelDims::default(), Feature::DEFAULT.to_vec(), 7).unwrap();
        let y = forward(&p, &g, &x).unwrap();
        assert!(y.iter().all(|&v| v > 0.0 && v < 1.0));
    }

    #[test]
    fn shape_mismatch_is_an_error() {
        let g = generate_ba(10, 2, 3).unwrap();
        let x = node_features(&g).unwrap();
        let other = generate_ba(12, 2, 3).unwrap();
        let p = PredictorParams::init(small_dims(), Feature::DEFAULT.to_vec(), 1).unwrap();
        assert!(forward(&p, &other, &x).is_err());
        let q = PredictorParams::init(ModelDims { input: 1, ..small_dims() }, vec![Feature::Degree], 1).unwrap();
        assert!(forward(&q, &g, &x).is_err());
    }
}
