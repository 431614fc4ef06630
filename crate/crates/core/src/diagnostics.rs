//! Pseudo-dying ReLU detection.
//!
//! A ReLU neuron is pseudo-dying with respect to a window of inputs when its
//! pre-activation is `<= 0` for every sample in the window. The pseudo-dying
//! ReLU ratio (PDRR) of a layer is the fraction of its neurons in that state.

use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::nn::{ForwardTrace, Network};

/// Default rolling-window size for PDRR reports.
pub const DEFAULT_WINDOW: usize = 256;

#[derive(Debug, Clone, PartialEq)]
pub struct LayerPdrr {
    /// 0-based layer index in the network.
    pub layer: usize,
    pub n_neurons: usize,
    pub n_pseudo_dying: usize,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PdrrReport {
    pub window_size: usize,
    pub layers: Vec<LayerPdrr>,
}

impl PdrrReport {
    pub fn ratios(&self) -> Vec<f64> {
        self.layers.iter().map(|l| l.ratio).collect()
    }
}

/// Per-neuron pseudo-dying flags for `layer` (0-based) of a traced batch.
pub fn pseudo_dying_mask(net: &Network, trace: &ForwardTrace, layer: usize) -> Result<Vec<bool>> {
    let l = net
        .layers()
        .get(layer)
        .ok_or_else(|| Error::InvalidArgument(format!("layer {layer} out of range")))?;
    if !l.activation.is_relu() {
        return Err(Error::UnsupportedActivation {
            op: "pseudo_dying_mask",
            activation: l.activation.to_string(),
        });
    }
    let z = trace
        .pre
        .get(layer)
        .ok_or_else(|| Error::Dimension("trace has fewer layers than the network".into()))?;
    if z.cols() != l.out_dim() {
        return Err(Error::Dimension("trace does not match network".into()));
    }
    mask_from_preactivations(z)
}

/// Flags columns whose every entry is `<= 0`.
pub fn mask_from_preactivations(z: &Matrix) -> Result<Vec<bool>> {
    if z.rows() == 0 {
        return Err(Error::InvalidArgument("pseudo-dying test over an empty window".into()));
    }
    let mut mask = vec![true; z.cols()];
    for row in z.row_iter() {
        for (m, &v) in mask.iter_mut().zip(row) {
            *m &= v <= 0.0;
        }
    }
    Ok(mask)
}

/// PDRR for every ReLU layer of `net` over the samples in `window`.
pub fn pdrr_report(net: &Network, window: &Matrix) -> Result<PdrrReport> {
    if window.rows() == 0 {
        return Err(Error::InvalidArgument("pdrr over an empty window".into()));
    }
    let (_, trace) = net.forward(window)?;
    let mut layers = Vec::new();
    for (i, l) in net.layers().iter().enumerate() {
        if !l.activation.is_relu() {
            continue;
        }
        let mask = mask_from_preactivations(&trace.pre[i])?;
        let dying = mask.iter().filter(|&&m| m).count();
        layers.push(LayerPdrr {
            layer: i,
            n_neurons: mask.len(),
            n_pseudo_dying: dying,
            ratio: dying as f64 / mask.len() as f64,
        });
    }
    Ok(PdrrReport {
        window_size: window.rows(),
        layers,
    })
}

/// Rolling buffer of the most recent network inputs.
#[derive(Debug, Clone)]
pub struct InputWindow {
    capacity: usize,
    dim: usize,
    rows: VecDeque<Vec<f64>>,
}

impl InputWindow {
    pub fn new(capacity: usize, dim: usize) -> Self {
        assert!(capacity >= 1, "window capacity must be positive");
        Self {
            capacity,
            dim,
            rows: VecDeque::with_capacity(capacity),
        }
    }

    pub fn push(&mut self, input: &[f64]) {
        debug_assert_eq!(input.len(), self.dim);
        if self.rows.len() == self.capacity {
            self.rows.pop_front();
        }
        self.rows.push_back(input.to_vec());
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn to_matrix(&self) -> Matrix {
        Matrix::from_fn(self.rows.len(), self.dim, |r, c| self.rows[r][c])
    }
}
