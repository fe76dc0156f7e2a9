//! Fully connected encoder/decoder with reverse-mode gradients and Adam.

mod adam;

pub use adam::{adam_step, AdamState, ADAM_BETA1, ADAM_BETA2, ADAM_EPS};

use crate::numerics::{Matrix, SeededRng};
use crate::Error;

/// Negative-side slope of the hidden activation.
pub const LEAKY_SLOPE: f64 = 0.1;

/// Layer widths as configured; `-1` stands for the dataset width.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LayerSpec {
    pub dims: Vec<i64>,
}

impl LayerSpec {
    pub fn new(dims: Vec<i64>) -> Result<Self, Error> {
        if dims.len() < 2 {
            return Err(Error::InvalidArgument("a network needs at least two layer widths".into()));
        }
        if let Some(d) = dims.iter().find(|&&d| d != -1 && d < 1) {
            return Err(Error::InvalidArgument(format!("layer width {d} is not positive")));
        }
        Ok(Self { dims })
    }

    /// Parses a comma-separated width list such as `-1,600,500,2`.
    pub fn parse(text: &str) -> Result<Self, Error> {
        let dims = text
            .split(',')
            .map(|s| {
                s.trim()
                    .parse::<i64>()
                    .map_err(|_| Error::InvalidArgument(format!("bad layer width {:?}", s.trim())))
            })
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(dims)
    }

    /// Replaces every `-1` by `input_dim`.
    pub fn resolve(&self, input_dim: usize) -> Vec<usize> {
        self.dims
            .iter()
            .map(|&d| if d == -1 { input_dim } else { d as usize })
            .collect()
    }
}

impl std::fmt::Display for LayerSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let parts: Vec<String> = self.dims.iter().map(i64::to_string).collect();
        f.write_str(&parts.join(","))
    }
}

/// Feed-forward network; weight `l` is `dims[l] × dims[l+1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Network {
    dims: Vec<usize>,
    pub weights: Vec<Matrix>,
    pub biases: Vec<Vec<f64>>,
}

/// Activations `X⁽⁰⁾ … X⁽ᴸ⁾` for one batch.
#[derive(Clone, Debug)]
pub struct ForwardTrace {
    pub activations: Vec<Matrix>,
}

impl ForwardTrace {
    pub fn input(&self) -> &Matrix {
        &self.activations[0]
    }

    pub fn output(&self) -> &Matrix {
        self.activations.last().expect("trace holds at least the input")
    }
}

/// Parameter gradients, laid out like the network.
#[derive(Clone, Debug, PartialEq)]
pub struct Gradients {
    pub weights: Vec<Matrix>,
    pub biases: Vec<Vec<f64>>,
}

impl Gradients {
    pub fn zeros_like(net: &Network) -> Self {
        Self {
            weights: net.weights.iter().map(|w| Matrix::zeros(w.rows(), w.cols())).collect(),
            biases: net.biases.iter().map(|b| vec![0.0; b.len()]).collect(),
        }
    }

    pub fn to_vec(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for (w, b) in self.weights.iter().zip(&self.biases) {
            out.extend_from_slice(w.as_slice());
            out.extend_from_slice(b);
        }
        out
    }
}

#[inline]
fn leaky(x: f64) -> f64 {
    if x > 0.0 {
        x
    } else {
        LEAKY_SLOPE * x
    }
}

impl Network {
    /// He-normal weights `N(0, 2/fan_in)` and zero biases.
    pub fn init_he(dims: &[usize], rng: &mut SeededRng) -> Result<Self, Error> {
        if dims.len() < 2 || dims.iter().any(|&d| d == 0) {
            return Err(Error::InvalidArgument(format!("invalid layer widths {dims:?}")));
        }
        let mut weights = Vec::with_capacity(dims.len() - 1);
        let mut biases = Vec::with_capacity(dims.len() - 1);
        for w in dims.windows(2) {
            let std = (2.0 / w[0] as f64).sqrt();
            let data = (0..w[0] * w[1]).map(|_| std * rng.normal()).collect();
            weights.push(Matrix::from_vec(w[0], w[1], data)?);
            biases.push(vec![0.0; w[1]]);
        }
        Ok(Self {
            dims: dims.to_vec(),
            weights,
            biases,
        })
    }

    /// Builds a network from explicit parameters.
    pub fn from_parts(weights: Vec<Matrix>, biases: Vec<Vec<f64>>) -> Result<Self, Error> {
        if weights.is_empty() || weights.len() != biases.len() {
            return Err(Error::Shape("need one bias vector per weight matrix".into()));
        }
        let mut dims = vec![weights[0].rows()];
        for (l, (w, b)) in weights.iter().zip(&biases).enumerate() {
            if w.rows() != *dims.last().unwrap() || b.len() != w.cols() {
                return Err(Error::Shape(format!("layer {l} parameters do not chain")));
            }
            dims.push(w.cols());
        }
        Ok(Self { dims, weights, biases })
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn num_layers(&self) -> usize {
        self.weights.len()
    }

    pub fn input_dim(&self) -> usize {
        self.dims[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.dims.last().unwrap()
    }

    /// `Σ_l (dims[l] + 1)·dims[l+1]`.
    pub fn param_count(&self) -> usize {
        self.dims.windows(2).map(|w| (w[0] + 1) * w[1]).sum()
    }

    /// Weights then bias per layer, in layer order.
    pub fn params(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.param_count());
        for (w, b) in self.weights.iter().zip(&self.biases) {
            out.extend_from_slice(w.as_slice());
            out.extend_from_slice(b);
        }
        out
    }

    pub fn set_params(&mut self, p: &[f64]) -> Result<(), Error> {
        if p.len() != self.param_count() {
            return Err(Error::Shape(format!(
                "expected {} parameters, got {}",
                self.param_count(),
                p.len()
            )));
        }
        let mut at = 0;
        for (w, b) in self.weights.iter_mut().zip(self.biases.iter_mut()) {
            let n = w.as_slice().len();
            w.as_mut_slice().copy_from_slice(&p[at..at + n]);
            at += n;
            let n = b.len();
            b.copy_from_slice(&p[at..at + n]);
            at += n;
        }
        Ok(())
    }

    /// Runs a batch through every layer, keeping each activation.
    pub fn forward(&self, x: &Matrix) -> Result<ForwardTrace, Error> {
        if x.cols() != self.dims[0] {
            return Err(Error::Shape(format!(
                "network expects {} input columns, got {}",
                self.dims[0],
                x.cols()
            )));
        }
        let last = self.num_layers() - 1;
        let mut activations = Vec::with_capacity(self.num_layers() + 1);
        activations.push(x.clone());
        for (l, (w, b)) in self.weights.iter().zip(&self.biases).enumerate() {
            let mut h = activations[l].matmul(w)?;
            for r in 0..h.rows() {
                for (v, bias) in h.row_mut(r).iter_mut().zip(b) {
                    *v += bias;
                    if l != last {
                        *v = leaky(*v);
                    }
                }
            }
            activations.push(h);
        }
        Ok(ForwardTrace { activations })
    }

    /// Final-layer output only.
    pub fn predict(&self, x: &Matrix) -> Result<Matrix, Error> {
        let mut trace = self.forward(x)?;
        Ok(trace.activations.pop().unwrap())
    }

    /// Reverse pass from `∂L/∂X⁽ᴸ⁾`; also returns `∂L/∂X⁽⁰⁾`.
    pub fn backward(&self, trace: &ForwardTrace, grad_out: &Matrix) -> Result<(Gradients, Matrix), Error> {
        if trace.activations.len() != self.num_layers() + 1 {
            return Err(Error::Shape("trace does not belong to this network".into()));
        }
        if grad_out.shape() != trace.output().shape() {
            return Err(Error::Shape(format!(
                "upstream gradient is {:?}, output is {:?}",
                grad_out.shape(),
                trace.output().shape()
            )));
        }
        let mut gw = Vec::with_capacity(self.num_layers());
        let mut gb = Vec::with_capacity(self.num_layers());
        let mut delta = grad_out.clone();
        let last = self.num_layers() - 1;
        for l in (0..self.num_layers()).rev() {
            if l != last {
                // the activation keeps the sign of its input, so the output decides the slope
                let out = &trace.activations[l + 1];
                for (d, &a) in delta.as_mut_slice().iter_mut().zip(out.as_slice()) {
                    if a <= 0.0 {
                        *d *= LEAKY_SLOPE;
                    }
                }
            }
            gw.push(trace.activations[l].t_matmul(&delta)?);
            gb.push(delta.column_sums());
            delta = delta.matmul_t(&self.weights[l])?;
        }
        gw.reverse();
        gb.reverse();
        Ok((Gradients { weights: gw, biases: gb }, delta))
    }
}
