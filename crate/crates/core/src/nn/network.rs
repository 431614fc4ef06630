use rand::Rng;

use super::activation::ActivationKind;
use crate::error::{Error, Result};
use crate::linalg::Matrix;

/// One dense layer: `h = act(W x + b)` with `W` stored out×in.
#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub weight: Matrix,
    pub bias: Vec<f64>,
    pub activation: ActivationKind,
}

impl Layer {
    pub fn new(weight: Matrix, bias: Vec<f64>, activation: ActivationKind) -> Result<Self> {
        if bias.len() != weight.rows() {
            return Err(Error::Dimension(format!(
                "bias of length {} for a layer with {} outputs",
                bias.len(),
                weight.rows()
            )));
        }
        activation.validate()?;
        Ok(Self {
            weight,
            bias,
            activation,
        })
    }

    pub fn in_dim(&self) -> usize {
        self.weight.cols()
    }

    pub fn out_dim(&self) -> usize {
        self.weight.rows()
    }

    /// Uniform in ±sqrt(6/(fan_in+fan_out)), zero bias.
    pub fn glorot<R: Rng + ?Sized>(
        in_dim: usize,
        out_dim: usize,
        activation: ActivationKind,
        rng: &mut R,
    ) -> Self {
        let limit = (6.0 / (in_dim + out_dim) as f64).sqrt();
        let weight = Matrix::from_fn(out_dim, in_dim, |_, _| rng.random_range(-limit..=limit));
        Self {
            weight,
            bias: vec![0.0; out_dim],
            activation,
        }
    }

    fn preactivation(&self, input: &Matrix) -> Result<Matrix> {
        let mut z = input.matmul_t(&self.weight)?;
        for r in 0..z.rows() {
            for (v, b) in z.row_mut(r).iter_mut().zip(&self.bias) {
                *v += b;
            }
        }
        Ok(z)
    }

    fn is_finite(&self) -> bool {
        self.weight.is_finite() && self.bias.iter().all(|b| b.is_finite())
    }
}

/// Ordered stack of dense layers.
#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    layers: Vec<Layer>,
}

/// Everything recorded by a forward pass: the input batch and, per layer,
/// pre-activations `z_i` and post-activations `h_i` (one row per sample).
#[derive(Debug, Clone, PartialEq)]
pub struct ForwardTrace {
    pub input: Matrix,
    pub pre: Vec<Matrix>,
    pub post: Vec<Matrix>,
}

impl ForwardTrace {
    pub fn batch_size(&self) -> usize {
        self.input.rows()
    }

    pub fn output(&self) -> &Matrix {
        self.post.last().expect("trace of a non-empty network")
    }
}

/// Parameter gradients, laid out like the network, plus the gradient with
/// respect to the input batch.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub weights: Vec<Matrix>,
    pub biases: Vec<Vec<f64>>,
    pub input: Matrix,
}

impl Gradients {
    pub fn zeros_like(net: &Network) -> Self {
        Self {
            weights: net
                .layers
                .iter()
                .map(|l| Matrix::zeros(l.out_dim(), l.in_dim()))
                .collect(),
            biases: net.layers.iter().map(|l| vec![0.0; l.out_dim()]).collect(),
            input: Matrix::zeros(0, net.input_dim()),
        }
    }

    /// Euclidean norm over every weight and bias entry (input gradient excluded).
    pub fn global_norm(&self) -> f64 {
        let w: f64 = self.weights.iter().map(Matrix::sum_of_squares).sum();
        let b: f64 = self.biases.iter().flatten().map(|x| x * x).sum();
        (w + b).sqrt()
    }

    pub fn scale(&mut self, k: f64) {
        for w in &mut self.weights {
            w.scale_in_place(k);
        }
        for b in self.biases.iter_mut().flatten() {
            *b *= k;
        }
    }

    pub fn is_finite(&self) -> bool {
        self.weights.iter().all(Matrix::is_finite)
            && self.biases.iter().flatten().all(|x| x.is_finite())
    }

    /// Adds another gradient of identical shape.
    pub fn accumulate(&mut self, other: &Gradients) -> Result<()> {
        if self.weights.len() != other.weights.len() {
            return Err(Error::Dimension("gradient layer counts differ".into()));
        }
        for (a, b) in self.weights.iter_mut().zip(&other.weights) {
            if a.shape() != b.shape() {
                return Err(Error::Dimension("gradient shapes differ".into()));
            }
            a.as_mut_slice()
                .iter_mut()
                .zip(b.as_slice())
                .for_each(|(x, y)| *x += y);
        }
        for (a, b) in self.biases.iter_mut().zip(&other.biases) {
            a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
        }
        Ok(())
    }

    /// Flat parameter-order view `[W1, b1, W2, b2, ...]`.
    pub fn slices(&self) -> Vec<&[f64]> {
        self.weights
            .iter()
            .zip(&self.biases)
            .flat_map(|(w, b)| [w.as_slice(), b.as_slice()])
            .collect()
    }
}

impl Network {
    pub fn new(layers: Vec<Layer>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::InvalidArgument("a network needs at least one layer".into()));
        }
        for (i, pair) in layers.windows(2).enumerate() {
            if pair[0].out_dim() != pair[1].in_dim() {
                return Err(Error::Dimension(format!(
                    "layer {} outputs {} values but layer {} expects {}",
                    i + 1,
                    pair[0].out_dim(),
                    i + 2,
                    pair[1].in_dim()
                )));
            }
        }
        for l in &layers {
            l.activation.validate()?;
            if !l.is_finite() {
                return Err(Error::NonFinite("network parameters"));
            }
        }
        Ok(Self { layers })
    }

    /// Glorot-initialised MLP. `sizes` lists every width including input and
    /// output; all hidden layers share `hidden`, the last uses `output`.
    pub fn mlp<R: Rng + ?Sized>(
        sizes: &[usize],
        hidden: ActivationKind,
        output: ActivationKind,
        rng: &mut R,
    ) -> Result<Self> {
        if sizes.len() < 2 {
            return Err(Error::InvalidArgument(
                "mlp needs at least input and output sizes".into(),
            ));
        }
        let n = sizes.len() - 1;
        let layers = sizes
            .windows(2)
            .enumerate()
            .map(|(i, w)| {
                let act = if i + 1 == n { output } else { hidden };
                Layer::glorot(w[0], w[1], act, rng)
            })
            .collect();
        Network::new(layers)
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Layer] {
        &mut self.layers
    }

    pub fn n_layers(&self) -> usize {
        self.layers.len()
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].in_dim()
    }

    pub fn output_dim(&self) -> usize {
        self.layers[self.layers.len() - 1].out_dim()
    }

    pub fn n_params(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.weight.rows() * l.weight.cols() + l.bias.len())
            .sum()
    }

    pub fn is_finite(&self) -> bool {
        self.layers.iter().all(Layer::is_finite)
    }

    fn check_input(&self, inputs: &Matrix) -> Result<()> {
        if inputs.rows() > 0 && inputs.cols() != self.input_dim() {
            return Err(Error::Dimension(format!(
                "input width {} but network expects {}",
                inputs.cols(),
                self.input_dim()
            )));
        }
        Ok(())
    }

    /// Forward pass recording every pre- and post-activation.
    pub fn forward(&self, inputs: &Matrix) -> Result<(Matrix, ForwardTrace)> {
        self.check_input(inputs)?;
        let input = if inputs.rows() == 0 {
            Matrix::zeros(0, self.input_dim())
        } else {
            inputs.clone()
        };
        let mut pre = Vec::with_capacity(self.layers.len());
        let mut post: Vec<Matrix> = Vec::with_capacity(self.layers.len());
        for layer in &self.layers {
            let h_prev = post.last().unwrap_or(&input);
            let z = layer.preactivation(h_prev)?;
            let act = layer.activation;
            let h = z.map(|x| act.value(x));
            pre.push(z);
            post.push(h);
        }
        let out = post.last().cloned().expect("non-empty network");
        Ok((out, ForwardTrace { input, pre, post }))
    }

    /// Forward pass without keeping intermediates.
    pub fn predict(&self, inputs: &Matrix) -> Result<Matrix> {
        self.check_input(inputs)?;
        if inputs.rows() == 0 {
            return Ok(Matrix::zeros(0, self.output_dim()));
        }
        let mut h = self.layers[0].preactivation(inputs)?;
        let act = self.layers[0].activation;
        h.as_mut_slice().iter_mut().for_each(|x| *x = act.value(*x));
        for layer in &self.layers[1..] {
            h = layer.preactivation(&h)?;
            let act = layer.activation;
            h.as_mut_slice().iter_mut().for_each(|x| *x = act.value(*x));
        }
        Ok(h)
    }

    pub fn predict_one(&self, input: &[f64]) -> Result<Vec<f64>> {
        let m = Matrix::from_vec(1, input.len(), input.to_vec())?;
        Ok(self.predict(&m)?.into_vec())
    }

    /// Reverse-mode gradients of a scalar loss given `dL/d(output)`.
    pub fn backward(&self, trace: &ForwardTrace, grad_output: &Matrix) -> Result<Gradients> {
        let n = self.layers.len();
        if trace.pre.len() != n || trace.post.len() != n {
            return Err(Error::Dimension("trace was produced by a different network".into()));
        }
        let batch = trace.batch_size();
        if trace.input.cols() != self.input_dim() {
            return Err(Error::Dimension("trace input width does not match network".into()));
        }
        for (l, z) in self.layers.iter().zip(&trace.pre) {
            if z.rows() != batch || z.cols() != l.out_dim() {
                return Err(Error::Dimension("stale trace: layer shapes differ".into()));
            }
        }
        if grad_output.rows() != batch || grad_output.cols() != self.output_dim() {
            return Err(Error::Dimension(format!(
                "output gradient is {}x{}, expected {}x{}",
                grad_output.rows(),
                grad_output.cols(),
                batch,
                self.output_dim()
            )));
        }

        let mut weights = vec![Matrix::zeros(0, 0); n];
        let mut biases = vec![Vec::new(); n];
        let mut upstream = grad_output.clone();
        for i in (0..n).rev() {
            let layer = &self.layers[i];
            let z = &trace.pre[i];
            let act = layer.activation;
            // dL/dz = dL/dh ⊙ act'(z)
            let mut dz = upstream;
            dz.as_mut_slice()
                .iter_mut()
                .zip(z.as_slice())
                .for_each(|(g, &zv)| *g *= act.grad(zv));
            let h_prev = if i == 0 { &trace.input } else { &trace.post[i - 1] };
            weights[i] = dz.t_matmul(h_prev)?;
            biases[i] = dz.column_sums();
            upstream = dz.matmul(&layer.weight)?;
        }
        Ok(Gradients {
            weights,
            biases,
            input: upstream,
        })
    }

    /// Mutable flat parameter-order view `[W1, b1, W2, b2, ...]`.
    pub fn param_slices_mut(&mut self) -> Vec<&mut [f64]> {
        self.layers
            .iter_mut()
            .flat_map(|l| [l.weight.as_mut_slice(), l.bias.as_mut_slice()])
            .collect()
    }

    pub fn param_slices(&self) -> Vec<&[f64]> {
        self.layers
            .iter()
            .flat_map(|l| [l.weight.as_slice(), l.bias.as_slice()])
            .collect()
    }

    pub fn same_architecture(&self, other: &Network) -> bool {
        self.layers.len() == other.layers.len()
            && self.layers.iter().zip(&other.layers).all(|(a, b)| {
                a.weight.shape() == b.weight.shape() && a.activation == b.activation
            })
    }
}
