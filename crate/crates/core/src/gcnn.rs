//! Graph convolutional networks over a fixed `n`-node graph.
//!
//! A layer is the parametric CoKleisli morphism
//! `(A, W, X) |-> sigma(A · X · W)` with the adjacency matrix `A : [n,n]` as
//! context, weights `W : [k_in, k_out]` as parameter and node features
//! `X : [n, k_in]` as input. Networks are `para_compose` folds of layers, so
//! the adjacency matrix is copied to every layer while the weights pile up
//! as parameters, the last layer's first.

use std::fmt;
use std::str::FromStr;

use crate::cokleisli::CoKlMorphism;
use crate::error::{Error, Result};
use crate::para::{self, ParaMorphism, Reparameterization};
use crate::seed;
use crate::smooth::{self, SmoothMap};
use crate::tensor::{Object, Shape, Tensor};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Activation {
    Relu,
    Sigmoid,
    Identity,
}

impl Activation {
    pub const ALL: [Activation; 3] = [Activation::Relu, Activation::Sigmoid, Activation::Identity];

    pub fn map(self, shape: &Shape) -> SmoothMap {
        match self {
            Activation::Relu => smooth::relu(shape),
            Activation::Sigmoid => smooth::sigmoid(shape),
            Activation::Identity => smooth::identity(&Object::single(shape.clone())),
        }
    }

    pub fn apply(self, t: &Tensor) -> Tensor {
        match self {
            Activation::Relu => t.map(|v| if v > 0.0 { v } else { 0.0 }),
            Activation::Sigmoid => t.map(|v| 1.0 / (1.0 + (-v).exp())),
            Activation::Identity => t.clone(),
        }
    }
}

impl FromStr for Activation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "relu" => Ok(Activation::Relu),
            "sigmoid" => Ok(Activation::Sigmoid),
            "identity" | "id" => Ok(Activation::Identity),
            other => Err(Error::Config(format!(
                "unknown activation {other:?} (expected relu, sigmoid or identity)"
            ))),
        }
    }
}

impl fmt::Display for Activation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Activation::Relu => "relu",
            Activation::Sigmoid => "sigmoid",
            Activation::Identity => "identity",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GcnnLayerSpec {
    pub n: usize,
    pub k_in: usize,
    pub k_out: usize,
    pub activation: Activation,
}

impl GcnnLayerSpec {
    pub fn new(n: usize, k_in: usize, k_out: usize, activation: Activation) -> Result<Self> {
        if n == 0 || k_in == 0 || k_out == 0 {
            return Err(Error::Config(format!(
                "layer dims must be positive, got n={n} k_in={k_in} k_out={k_out}"
            )));
        }
        Ok(GcnnLayerSpec {
            n,
            k_in,
            k_out,
            activation,
        })
    }

    pub fn weight_shape(&self) -> Shape {
        Shape::matrix(self.k_in, self.k_out)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GcnnNetworkSpec {
    n: usize,
    dims: Vec<usize>,
    activations: Vec<Activation>,
}

impl GcnnNetworkSpec {
    /// `dims = [d_0, ..., d_m]` feature widths; layer `i` maps `d_i -> d_{i+1}`
    /// with `activations[i]`.
    pub fn new(n: usize, dims: Vec<usize>, activations: Vec<Activation>) -> Result<Self> {
        if dims.len() < 2 || activations.len() != dims.len() - 1 {
            return Err(Error::Config(format!(
                "a network needs at least two dims and one activation per layer, got {} dims and {} activations",
                dims.len(),
                activations.len()
            )));
        }
        if n == 0 || dims.contains(&0) {
            return Err(Error::Config(format!(
                "dims must be positive, got n={n} dims={dims:?}"
            )));
        }
        Ok(GcnnNetworkSpec {
            n,
            dims,
            activations,
        })
    }

    pub fn single(layer: GcnnLayerSpec) -> Self {
        GcnnNetworkSpec {
            n: layer.n,
            dims: vec![layer.k_in, layer.k_out],
            activations: vec![layer.activation],
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn activations(&self) -> &[Activation] {
        &self.activations
    }

    pub fn depth(&self) -> usize {
        self.activations.len()
    }

    pub fn layers(&self) -> Vec<GcnnLayerSpec> {
        self.dims
            .windows(2)
            .zip(&self.activations)
            .map(|(d, &activation)| GcnnLayerSpec {
                n: self.n,
                k_in: d[0],
                k_out: d[1],
                activation,
            })
            .collect()
    }

    pub fn input_object(&self) -> Object {
        kappa_object(self.n, self.dims[0])
    }

    pub fn output_object(&self) -> Object {
        kappa_object(self.n, *self.dims.last().expect("at least two dims"))
    }

    pub fn context_object(&self) -> Object {
        Object::single(Shape::matrix(self.n, self.n))
    }

    /// Parameter object of the network: one weight matrix per layer, last
    /// layer first.
    pub fn param_object(&self) -> Object {
        Object::new(
            self.layers()
                .iter()
                .rev()
                .map(GcnnLayerSpec::weight_shape)
                .collect::<Vec<_>>(),
        )
    }

    /// Composition in the graph-network bicategory: run `self`, then `next`.
    pub fn then(&self, next: &GcnnNetworkSpec) -> Result<GcnnNetworkSpec> {
        if self.n != next.n || self.dims.last() != next.dims.first() {
            return Err(Error::Boundary {
                left: self.output_object(),
                right: next.input_object(),
            });
        }
        let mut dims = self.dims.clone();
        dims.extend_from_slice(&next.dims[1..]);
        let mut activations = self.activations.clone();
        activations.extend_from_slice(&next.activations);
        GcnnNetworkSpec::new(self.n, dims, activations)
    }

    /// Fan-in initialization: every weight uniform in
    /// `[-1/sqrt(k_in), 1/sqrt(k_in))`. Returned in parameter order (last
    /// layer first).
    pub fn init_params(&self, seed: u64) -> Vec<Tensor> {
        let mut rng = seed::rng(seed, "init", 0);
        let mut weights: Vec<Tensor> = self
            .layers()
            .iter()
            .map(|l| {
                let bound = 1.0 / (l.k_in as f64).sqrt();
                seed::uniform(&mut rng, &l.weight_shape(), -bound, bound)
            })
            .collect();
        weights.reverse();
        weights
    }
}

/// Object map of the embedding: `R^(n x k)` goes to the port `[n, k]`.
pub fn kappa_object(n: usize, k: usize) -> Object {
    Object::single(Shape::matrix(n, k))
}

/// `(A, W, X) |-> sigma((A · X) · W)`.
pub fn build_layer(spec: &GcnnLayerSpec) -> ParaMorphism {
    let a = Shape::matrix(spec.n, spec.n);
    let w = spec.weight_shape();
    let x = Shape::matrix(spec.n, spec.k_in);
    let out = Shape::matrix(spec.n, spec.k_out);
    let ports = Object::new(vec![a.clone(), w.clone(), x.clone()]);
    let body = smooth::wire(&ports, vec![0, 2, 1])
        .and_then(|m| {
            m.then(&smooth::matmul(&a, &x)?.parallel(&smooth::identity(&w.clone().into()))?)
        })
        .and_then(|m| m.then(&smooth::matmul(&x, &w)?))
        .and_then(|m| m.then(&spec.activation.map(&out)))
        .expect("layer wiring is well-typed for positive dims");
    let inner = CoKlMorphism::new(
        Object::single(a),
        Object::new(vec![w.clone(), x.clone()]),
        body,
    )
    .expect("layer body takes (A, W, X)");
    ParaMorphism::new(Object::single(w), Object::single(x), inner).expect("layer source is W x X")
}

/// Left fold of `para_compose` over the layers.
pub fn build_network(spec: &GcnnNetworkSpec) -> ParaMorphism {
    let mut layers = spec.layers().into_iter().map(|l| build_layer(&l));
    let first = layers.next().expect("at least one layer");
    layers.fold(first, |acc, layer| {
        para::para_compose(&acc, &layer).expect("consecutive layers share their boundary")
    })
}

/// The embedding of a graph network into parametric CoKleisli morphisms.
pub fn kappa_embed(spec: &GcnnNetworkSpec) -> ParaMorphism {
    build_network(spec)
}

/// Direct evaluation by the layer formula, independent of the expression
/// engine. `weights` are in parameter order (last layer first). Returns the
/// preactivation `A · H · W` of every layer and the final output.
pub fn reference_forward(
    spec: &GcnnNetworkSpec,
    adjacency: &Tensor,
    weights: &[Tensor],
    x: &Tensor,
) -> Result<(Vec<Tensor>, Tensor)> {
    let layers = spec.layers();
    if weights.len() != layers.len() {
        return Err(Error::shape(
            "reference_forward",
            format!(
                "{} weight matrices for {} layers",
                weights.len(),
                layers.len()
            ),
        ));
    }
    let mut h = x.clone();
    let mut pre = Vec::with_capacity(layers.len());
    for (layer, w) in layers.iter().zip(weights.iter().rev()) {
        let z = adjacency.matmul(&h)?.matmul(w)?;
        h = layer.activation.apply(&z);
        pre.push(z);
    }
    Ok((pre, h))
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdjacencyMatrix(Tensor);

impl AdjacencyMatrix {
    pub fn new(matrix: Tensor) -> Result<Self> {
        let (r, c) = matrix.shape().as_matrix();
        if matrix.shape().rank() != 2 || r != c {
            return Err(Error::shape(
                "AdjacencyMatrix",
                format!("expected a square matrix, got {}", matrix.shape()),
            ));
        }
        Ok(AdjacencyMatrix(matrix))
    }

    pub fn n(&self) -> usize {
        self.0.rows()
    }

    pub fn matrix(&self) -> &Tensor {
        &self.0
    }

    pub fn into_matrix(self) -> Tensor {
        self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NormalizeMode {
    Raw,
    /// `D^(-1/2) (A + I) D^(-1/2)` with `D` the degree matrix of `A + I`.
    SymmetricSelfLoops,
}

impl FromStr for NormalizeMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "raw" | "none" => Ok(NormalizeMode::Raw),
            "sym" | "symmetric" | "add-self-loops-symmetric" => {
                Ok(NormalizeMode::SymmetricSelfLoops)
            }
            other => Err(Error::Config(format!(
                "unknown normalization {other:?} (expected raw or symmetric)"
            ))),
        }
    }
}

pub fn normalize_adjacency(a: &AdjacencyMatrix, mode: NormalizeMode) -> Result<AdjacencyMatrix> {
    match mode {
        NormalizeMode::Raw => Ok(a.clone()),
        NormalizeMode::SymmetricSelfLoops => {
            let n = a.n();
            let looped = a.matrix().add(&Tensor::identity(n))?;
            let mut inv_sqrt = Vec::with_capacity(n);
            for i in 0..n {
                let degree: f64 = (0..n).map(|j| looped.get(i, j)).sum();
                if degree <= 0.0 {
                    return Err(Error::ZeroDegree { node: i });
                }
                inv_sqrt.push(1.0 / degree.sqrt());
            }
            let data = (0..n * n)
                .map(|idx| {
                    let (i, j) = (idx / n, idx % n);
                    inv_sqrt[i] * looped.get(i, j) * inv_sqrt[j]
                })
                .collect();
            AdjacencyMatrix::new(Tensor::matrix(n, n, data)?)
        }
    }
}

/// The 0/1 mask `p` with `p_i = 1` exactly when `x_i > 0`, so that
/// `diag(p) · x = ReLU(x)`. Matrices are masked column by column.
pub fn relu_mask(x: &Tensor) -> Tensor {
    x.map(|v| if v > 0.0 { 1.0 } else { 0.0 })
}

/// `diag(p) · x` as a genuine matrix product, applied to each column of `x`.
pub fn apply_mask(mask: &Tensor, x: &Tensor) -> Result<Tensor> {
    if mask.shape() != x.shape() {
        return Err(Error::shape(
            "apply_mask",
            format!("{} vs {}", mask.shape(), x.shape()),
        ));
    }
    let (rows, cols) = x.shape().as_matrix();
    let mut out = vec![0.0; rows * cols];
    for c in 0..cols {
        let column = |t: &Tensor| {
            Tensor::matrix(rows, 1, (0..rows).map(|r| t.data()[r * cols + c]).collect())
        };
        let p = column(mask)?;
        let mut diag = Tensor::zeros(Shape::matrix(rows, rows)).into_data();
        for r in 0..rows {
            diag[r * rows + r] = p.data()[r];
        }
        let col = Tensor::matrix(rows, rows, diag)?.matmul(&column(x)?)?;
        for r in 0..rows {
            out[r * cols + c] = col.data()[r];
        }
    }
    Tensor::new(x.shape().clone(), out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TwoCellVerdict {
    pub pass: bool,
    pub samples: usize,
    pub max_residual: f64,
}

/// Checks the 2-cell triangle `(r x A x X) ; h = h2` on random
/// `(A, p', X)` drawn uniformly from `[-1, 1]`.
pub fn two_cell_verify(
    r: &Reparameterization,
    h: &ParaMorphism,
    h2: &ParaMorphism,
    samples: usize,
    tol: f64,
    seed: u64,
) -> Result<TwoCellVerdict> {
    if r.codomain() != h.param() || r.domain() != h2.param() {
        return Err(Error::shape(
            "two_cell_verify",
            format!(
                "r : {} -> {} does not connect {} and {}",
                r.domain(),
                r.codomain(),
                h2.param(),
                h.param()
            ),
        ));
    }
    if h.source() != h2.source() || h.target() != h2.target() || h.context() != h2.context() {
        return Err(Error::shape(
            "two_cell_verify",
            "h and h2 have different boundaries",
        ));
    }
    let draw = |rng: &mut seed::Rng, obj: &Object| -> Vec<Tensor> {
        obj.ports()
            .iter()
            .map(|s| seed::uniform(rng, s, -1.0, 1.0))
            .collect()
    };
    let mut max_residual: f64 = 0.0;
    for i in 0..samples {
        let mut rng = seed::rng(seed, "two-cell", i as u64);
        let a = draw(&mut rng, h.context());
        let q = draw(&mut rng, h2.param());
        let x = draw(&mut rng, h.source());
        let p = r.map().evaluate(&q)?;
        let lhs = h.evaluate(&a, &p, &x)?;
        let rhs = h2.evaluate(&a, &q, &x)?;
        max_residual = max_residual.max(crate::tensor::max_residual(&lhs, &rhs));
    }
    Ok(TwoCellVerdict {
        pass: max_residual <= tol,
        samples,
        max_residual,
    })
}
