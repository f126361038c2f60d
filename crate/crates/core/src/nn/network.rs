//! Dense/residual networks with an optional spline-embedding input layer.
//!
//! All parameters live in one flat vector so the optimizer, gradient checks and
//! serialization see a single buffer. Forward passes run on a whole batch at a
//! time and return a [`Tape`] that backpropagation consumes.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::mat::{accumulate_outer, affine, back_through, column_sums_into, Mat};
use super::spline::UniformKnots;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Relu,
    Tanh,
}

impl Activation {
    fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Relu => z.max(0.0),
            Activation::Tanh => z.tanh(),
        }
    }

    /// Derivative expressed through the pre-activation `z` and output `a`.
    fn derivative(self, z: f64, a: f64) -> f64 {
        match self {
            Activation::Relu => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Tanh => 1.0 - a * a,
        }
    }
}

/// Spline embedding: `per_input` learnable splines per input coordinate on
/// `knots` uniform knots over `[-1, 1]`, averaged over the coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplineSpec {
    pub knots: usize,
    pub per_input: usize,
}

impl Default for SplineSpec {
    fn default() -> Self {
        Self {
            knots: 21,
            per_input: 8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkSpec {
    pub input_dim: usize,
    pub output_dim: usize,
    /// Widths of plain dense layers after the (optional) embedding.
    pub hidden: Vec<usize>,
    /// Residual blocks appended at the width of the last hidden layer.
    pub res_blocks: usize,
    pub activation: Activation,
    pub spline: Option<SplineSpec>,
}

impl NetworkSpec {
    /// Spline embedding, one width-64 layer, two residual blocks, linear head.
    pub fn spline_resnet(input_dim: usize, output_dim: usize) -> Self {
        Self {
            input_dim,
            output_dim,
            hidden: vec![64],
            res_blocks: 2,
            activation: Activation::Relu,
            spline: Some(SplineSpec::default()),
        }
    }

    /// A single affine map `W x + b`.
    pub fn linear(input_dim: usize, output_dim: usize) -> Self {
        Self {
            input_dim,
            output_dim,
            hidden: vec![],
            res_blocks: 0,
            activation: Activation::Tanh,
            spline: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.input_dim == 0 || self.output_dim == 0 {
            return Err(Error::InvalidConfig(
                "network dimensions must be positive".into(),
            ));
        }
        if self.res_blocks > 0 && self.hidden.is_empty() {
            return Err(Error::InvalidConfig(
                "residual blocks need at least one hidden layer".into(),
            ));
        }
        if self.hidden.contains(&0) {
            return Err(Error::InvalidConfig(
                "hidden widths must be positive".into(),
            ));
        }
        if let Some(s) = self.spline {
            if s.knots < 2 || s.per_input == 0 {
                return Err(Error::InvalidConfig(
                    "spline embedding needs >= 2 knots".into(),
                ));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy)]
struct Affine {
    w: usize,
    b: usize,
    inputs: usize,
    outputs: usize,
}

impl Affine {
    fn weights<'a>(&self, p: &'a [f64]) -> &'a [f64] {
        &p[self.w..self.w + self.inputs * self.outputs]
    }

    fn bias<'a>(&self, p: &'a [f64]) -> &'a [f64] {
        &p[self.b..self.b + self.outputs]
    }
}

#[derive(Debug, Clone, Copy)]
struct Embedding {
    offset: usize,
    inputs: usize,
    per_input: usize,
    knots: UniformKnots,
}

impl Embedding {
    fn theta_index(&self, input: usize, spline: usize, knot: usize) -> usize {
        self.offset + (input * self.per_input + spline) * self.knots.count + knot
    }
}

#[derive(Debug, Clone)]
struct Layout {
    embedding: Option<Embedding>,
    hidden: Vec<Affine>,
    blocks: Vec<(Affine, Affine)>,
    output: Affine,
    len: usize,
}

impl Layout {
    fn new(spec: &NetworkSpec) -> Self {
        let mut len = 0;
        let embedding = spec.spline.map(|s| {
            let e = Embedding {
                offset: 0,
                inputs: spec.input_dim,
                per_input: s.per_input,
                knots: UniformKnots::new(s.knots, -1.0, 1.0),
            };
            len += spec.input_dim * s.per_input * s.knots;
            e
        });
        let mut affine = |inputs: usize, outputs: usize| {
            let a = Affine {
                w: len,
                b: len + inputs * outputs,
                inputs,
                outputs,
            };
            len += inputs * outputs + outputs;
            a
        };
        let mut width = spec.input_dim + spec.spline.map_or(0, |s| s.per_input);
        let mut hidden = Vec::new();
        for &h in &spec.hidden {
            hidden.push(affine(width, h));
            width = h;
        }
        let blocks = (0..spec.res_blocks)
            .map(|_| (affine(width, width), affine(width, width)))
            .collect();
        let output = affine(width, spec.output_dim);
        Self {
            embedding,
            hidden,
            blocks,
            output,
            len,
        }
    }
}

/// Cached intermediate values of one batched forward pass.
#[derive(Debug, Clone)]
pub struct Tape {
    batch: usize,
    /// Spline segment `(i, w)` for every (sample, input) pair.
    segments: Vec<(usize, f64)>,
    hidden: Vec<LayerCache>,
    blocks: Vec<BlockCache>,
    head_input: Mat,
    pub output: Mat,
}

#[derive(Debug, Clone)]
struct LayerCache {
    input: Mat,
    pre: Mat,
    post: Mat,
}

#[derive(Debug, Clone)]
struct BlockCache {
    input: Mat,
    pre1: Mat,
    post1: Mat,
    sum: Mat,
    post: Mat,
}

impl Tape {
    pub fn batch(&self) -> usize {
        self.batch
    }
}

#[derive(Debug, Clone)]
pub struct Network {
    spec: NetworkSpec,
    layout: Layout,
    params: Vec<f64>,
}

impl Network {
    /// Glorot-uniform weights, zero biases and zero spline coefficients.
    pub fn new(spec: NetworkSpec, rng: &mut impl Rng) -> Result<Self> {
        spec.validate()?;
        let layout = Layout::new(&spec);
        let mut params = vec![0.0; layout.len];
        let all = layout
            .hidden
            .iter()
            .chain(layout.blocks.iter().flat_map(|(a, b)| [a, b]))
            .chain(std::iter::once(&layout.output));
        for a in all {
            let limit = (6.0 / (a.inputs + a.outputs) as f64).sqrt();
            for w in &mut params[a.w..a.w + a.inputs * a.outputs] {
                *w = rng.random_range(-limit..=limit);
            }
        }
        Ok(Self {
            spec,
            layout,
            params,
        })
    }

    pub fn spec(&self) -> &NetworkSpec {
        &self.spec
    }

    pub fn input_dim(&self) -> usize {
        self.spec.input_dim
    }

    pub fn output_dim(&self) -> usize {
        self.spec.output_dim
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn num_params(&self) -> usize {
        self.params.len()
    }

    /// Index ranges of each layer's parameters in the flat vector: the spline
    /// coefficients (if any), then every dense layer's weights and bias.
    pub fn layer_ranges(&self) -> Vec<std::ops::Range<usize>> {
        let l = &self.layout;
        let dense = |a: &Affine| a.w..a.b + a.outputs;
        let mut out = Vec::new();
        if let Some(e) = &l.embedding {
            out.push(e.offset..e.offset + e.inputs * e.per_input * e.knots.count);
        }
        out.extend(l.hidden.iter().map(dense));
        for (a, b) in &l.blocks {
            out.push(dense(a));
            out.push(dense(b));
        }
        out.push(dense(&l.output));
        out
    }

    /// Mutable access to the output layer as `(weights, bias)`.
    pub fn output_layer_mut(&mut self) -> (&mut [f64], &mut [f64]) {
        let a = self.layout.output;
        let (w, rest) = self.params[a.w..].split_at_mut(a.inputs * a.outputs);
        (w, &mut rest[..a.outputs])
    }

    /// Single-sample forward pass.
    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.input_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.input_dim(),
                got: x.len(),
            });
        }
        let tape = self.forward_batch(&Mat::from_vec(1, x.len(), x.to_vec()));
        Ok(tape.output.data)
    }

    /// Batched forward pass; `xs` is `batch x input_dim`.
    ///
    /// # Panics
    /// If `xs.cols` differs from the input dimension.
    pub fn forward_batch(&self, xs: &Mat) -> Tape {
        assert_eq!(xs.cols, self.input_dim(), "network input dimension");
        let p = &self.params;
        let act = self.spec.activation;
        let batch = xs.rows;

        let mut segments = Vec::new();
        let mut h = match &self.layout.embedding {
            None => xs.clone(),
            Some(e) => {
                let width = e.per_input + e.inputs;
                let mut out = Mat::zeros(batch, width);
                segments.reserve(batch * e.inputs);
                let scale = 1.0 / e.inputs as f64;
                for b in 0..batch {
                    let x = xs.row(b);
                    let row = out.row_mut(b);
                    for (l, &xl) in x.iter().enumerate() {
                        let (i, w) = e.knots.locate(xl);
                        segments.push((i, w));
                        for j in 0..e.per_input {
                            let t0 = p[e.theta_index(l, j, i - 1)];
                            let t1 = p[e.theta_index(l, j, i)];
                            row[j] += scale * (t0 + (t1 - t0) * w);
                        }
                    }
                    row[e.per_input..].copy_from_slice(x);
                }
                out
            }
        };

        let mut hidden = Vec::with_capacity(self.layout.hidden.len());
        for a in &self.layout.hidden {
            let pre = affine(&h, a.weights(p), a.bias(p));
            let mut post = pre.clone();
            post.data.iter_mut().for_each(|v| *v = act.apply(*v));
            let input = std::mem::replace(&mut h, post.clone());
            hidden.push(LayerCache { input, pre, post });
        }

        let mut blocks = Vec::with_capacity(self.layout.blocks.len());
        for (a1, a2) in &self.layout.blocks {
            let pre1 = affine(&h, a1.weights(p), a1.bias(p));
            let mut post1 = pre1.clone();
            post1.data.iter_mut().for_each(|v| *v = act.apply(*v));
            let mut sum = affine(&post1, a2.weights(p), a2.bias(p));
            sum.data.iter_mut().zip(&h.data).for_each(|(s, x)| *s += x);
            let mut post = sum.clone();
            post.data.iter_mut().for_each(|v| *v = act.apply(*v));
            let input = std::mem::replace(&mut h, post.clone());
            blocks.push(BlockCache {
                input,
                pre1,
                post1,
                sum,
                post,
            });
        }

        let o = self.layout.output;
        let output = affine(&h, o.weights(p), o.bias(p));
        Tape {
            batch,
            segments,
            hidden,
            blocks,
            head_input: h,
            output,
        }
    }

    /// Backpropagates `upstream` (`batch x output_dim`, the gradient of a scalar
    /// loss with respect to the outputs). Parameter gradients are accumulated
    /// into `param_grads` when given; input gradients are returned
    /// (`batch x input_dim`) when `want_input` is set.
    pub fn backward(
        &self,
        tape: &Tape,
        upstream: &Mat,
        mut param_grads: Option<&mut [f64]>,
        want_input: bool,
    ) -> Option<Mat> {
        assert_eq!(upstream.rows, tape.batch);
        assert_eq!(upstream.cols, self.output_dim());
        if let Some(g) = param_grads.as_deref() {
            assert_eq!(g.len(), self.params.len());
        }
        let p = &self.params;
        let act = self.spec.activation;

        let o = self.layout.output;
        if let Some(g) = param_grads.as_deref_mut() {
            accumulate_outer(
                upstream,
                &tape.head_input,
                &mut g[o.w..o.w + o.inputs * o.outputs],
            );
            column_sums_into(upstream, &mut g[o.b..o.b + o.outputs]);
        }
        let mut dh = back_through(upstream, o.weights(p), o.inputs);

        for ((a1, a2), c) in self.layout.blocks.iter().zip(&tape.blocks).rev() {
            let mut ds = dh;
            for ((d, z), a) in ds.data.iter_mut().zip(&c.sum.data).zip(&c.post.data) {
                *d *= act.derivative(*z, *a);
            }
            if let Some(g) = param_grads.as_deref_mut() {
                accumulate_outer(&ds, &c.post1, &mut g[a2.w..a2.w + a2.inputs * a2.outputs]);
                column_sums_into(&ds, &mut g[a2.b..a2.b + a2.outputs]);
            }
            let mut dz1 = back_through(&ds, a2.weights(p), a2.inputs);
            for ((d, z), a) in dz1.data.iter_mut().zip(&c.pre1.data).zip(&c.post1.data) {
                *d *= act.derivative(*z, *a);
            }
            if let Some(g) = param_grads.as_deref_mut() {
                accumulate_outer(&dz1, &c.input, &mut g[a1.w..a1.w + a1.inputs * a1.outputs]);
                column_sums_into(&dz1, &mut g[a1.b..a1.b + a1.outputs]);
            }
            let through = back_through(&dz1, a1.weights(p), a1.inputs);
            ds.data
                .iter_mut()
                .zip(&through.data)
                .for_each(|(d, t)| *d += t);
            dh = ds;
        }

        for (a, c) in self.layout.hidden.iter().zip(&tape.hidden).rev() {
            let mut dz = dh;
            for ((d, z), v) in dz.data.iter_mut().zip(&c.pre.data).zip(&c.post.data) {
                *d *= act.derivative(*z, *v);
            }
            if let Some(g) = param_grads.as_deref_mut() {
                accumulate_outer(&dz, &c.input, &mut g[a.w..a.w + a.inputs * a.outputs]);
                column_sums_into(&dz, &mut g[a.b..a.b + a.outputs]);
            }
            dh = back_through(&dz, a.weights(p), a.inputs);
        }

        let Some(e) = &self.layout.embedding else {
            return want_input.then_some(dh);
        };
        let n = e.inputs;
        let scale = 1.0 / n as f64;
        let h = e.knots.spacing();
        let mut dx = want_input.then(|| Mat::zeros(tape.batch, n));
        for b in 0..tape.batch {
            let row = dh.row(b);
            let (d_embed, d_direct) = row.split_at(e.per_input);
            if let Some(dx) = dx.as_mut() {
                dx.row_mut(b).copy_from_slice(d_direct);
            }
            for l in 0..n {
                let (i, w) = tape.segments[b * n + l];
                let mut slope_sum = 0.0;
                for (j, &dj) in d_embed.iter().enumerate() {
                    let k0 = e.theta_index(l, j, i - 1);
                    let k1 = e.theta_index(l, j, i);
                    if let Some(g) = param_grads.as_deref_mut() {
                        g[k0] += dj * scale * (1.0 - w);
                        g[k1] += dj * scale * w;
                    }
                    slope_sum += dj * (p[k1] - p[k0]);
                }
                if let Some(dx) = dx.as_mut() {
                    dx.row_mut(b)[l] += slope_sum * scale / h;
                }
            }
        }
        dx
    }

    /// Gradients of a scalar loss with respect to every parameter.
    pub fn backward_params(&self, tape: &Tape, upstream: &Mat) -> Vec<f64> {
        let mut g = vec![0.0; self.params.len()];
        self.backward(tape, upstream, Some(&mut g), false);
        g
    }

    /// Vector-Jacobian products with respect to the inputs (`batch x input_dim`).
    pub fn backward_input(&self, tape: &Tape, upstream: &Mat) -> Mat {
        self.backward(tape, upstream, None, true)
            .expect("input gradient requested")
    }

    /// `J(x)^T direction` at one point. For a scalar network and a direction of
    /// `[1.0]` this is the input gradient.
    pub fn input_vjp(&self, x: &[f64], direction: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.input_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.input_dim(),
                got: x.len(),
            });
        }
        if direction.len() != self.output_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.output_dim(),
                got: direction.len(),
            });
        }
        let tape = self.forward_batch(&Mat::from_vec(1, x.len(), x.to_vec()));
        let up = Mat::from_vec(1, direction.len(), direction.to_vec());
        Ok(self.backward_input(&tape, &up).data)
    }

    /// Input gradient of a scalar-output network.
    pub fn input_gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        if self.output_dim() != 1 {
            return Err(Error::DimensionMismatch {
                expected: 1,
                got: self.output_dim(),
            });
        }
        self.input_vjp(x, &[1.0])
    }
}
