use rand::Rng;
use serde::{Deserialize, Serialize};

use super::layers::{BatchNorm, Conv, Flatten, Layer, Linear, MaxPool, Relu, TanhPi};
use super::tensor::{Param, Tensor};
use crate::error::{Error, Result};

pub const CONV_KERNEL: usize = 3;
pub const CONV_STRIDE: usize = 1;
pub const CONV_PADDING: usize = 1;
pub const POOL_KERNEL: usize = 2;
pub const POOL_STRIDE: usize = 2;
/// Output channels of the successive convolution blocks.
pub const CONV_CHANNELS: [usize; 3] = [8, 16, 32];

/// Classical feature extractor depth.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preproc {
    Conv3,
    Conv1,
    Conv0,
}

impl Preproc {
    pub fn conv_blocks(self) -> usize {
        match self {
            Preproc::Conv3 => 3,
            Preproc::Conv1 => 1,
            Preproc::Conv0 => 0,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Preproc::Conv3 => "3conv",
            Preproc::Conv1 => "1conv",
            Preproc::Conv0 => "0conv",
        }
    }
}

/// Classical processing between the latent vector and the logit.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HeadKind {
    None,
    Fcnone,
    Fcrelu,
    Mlp,
    /// The single linear map from QNN readout to logit in hybrid models.
    LinearOut,
}

impl HeadKind {
    pub fn label(self) -> &'static str {
        match self {
            HeadKind::None => "none",
            HeadKind::Fcnone => "fcnone",
            HeadKind::Fcrelu => "fcrelu",
            HeadKind::Mlp => "mlp",
            HeadKind::LinearOut => "linear_out",
        }
    }
}

/// Per-sample input layout: channel count plus one to three spatial axes.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct InputShape {
    pub channels: usize,
    pub spatial: Vec<usize>,
}

impl InputShape {
    pub fn new(channels: usize, spatial: Vec<usize>) -> Self {
        Self { channels, spatial }
    }

    /// Treats every axis of a raw sample as spatial with a single channel.
    pub fn single_channel(sample_shape: &[usize]) -> Self {
        Self::new(1, sample_shape.to_vec())
    }

    pub fn dims(&self) -> usize {
        self.spatial.len()
    }

    pub fn volume(&self) -> usize {
        self.channels * self.spatial.iter().product::<usize>()
    }

    /// `[channels, spatial...]`
    pub fn to_vec(&self) -> Vec<usize> {
        let mut v = vec![self.channels];
        v.extend(&self.spatial);
        v
    }
}

/// Ordered sequence of layers run forward and then backward.
#[derive(Clone, Debug, Default)]
pub struct LayerStack {
    layers: Vec<Layer>,
}

impl LayerStack {
    pub fn new(layers: Vec<Layer>) -> Self {
        Self { layers }
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Layer] {
        &mut self.layers
    }

    pub fn describe(&self) -> Vec<String> {
        self.layers.iter().map(Layer::describe).collect()
    }

    pub fn forward(&mut self, input: &Tensor, training: bool) -> Result<Tensor> {
        let mut x = input.clone();
        for layer in &mut self.layers {
            x = layer.forward(&x, training)?;
        }
        Ok(x)
    }

    /// Accumulates parameter gradients and returns the gradient with respect
    /// to the stack input.
    pub fn backward(&mut self, upstream: &Tensor) -> Result<Tensor> {
        let mut g = upstream.clone();
        for layer in self.layers.iter_mut().rev() {
            g = layer.backward(&g)?;
        }
        Ok(g)
    }

    pub fn params_mut(&mut self) -> Vec<&mut Param> {
        self.layers.iter_mut().flat_map(Layer::params_mut).collect()
    }

    pub fn params(&self) -> Vec<&Param> {
        self.layers.iter().flat_map(Layer::params).collect()
    }

    pub fn n_params(&self) -> usize {
        self.params().iter().map(|p| p.len()).sum()
    }

    pub fn zero_grad(&mut self) {
        for p in self.params_mut() {
            p.zero_grad();
        }
    }
}

/// Convolution blocks (Conv, BatchNorm, ReLU, MaxPool) as requested by the
/// variant, then Flatten and a fully connected projection to `latent_dim`,
/// with an optional trailing `π·tanh`.
pub fn build_preprocessor<R: Rng + ?Sized>(
    variant: Preproc,
    input: &InputShape,
    latent_dim: usize,
    tanh_pi: bool,
    rng: &mut R,
) -> Result<LayerStack> {
    let dims = input.dims();
    if !(1..=3).contains(&dims) {
        return Err(Error::Invalid(format!(
            "input must have 1 to 3 spatial axes, got {:?}",
            input.spatial
        )));
    }
    if latent_dim == 0 || input.channels == 0 {
        return Err(Error::Invalid("empty latent or channel dimension".into()));
    }
    let blocks = variant.conv_blocks();
    let min_extent = 1usize << blocks;
    if let Some(&small) = input.spatial.iter().find(|&&s| s < min_extent) {
        return Err(Error::Invalid(format!(
            "spatial extent {small} too small for {blocks} pooling halvings"
        )));
    }
    let mut layers = Vec::new();
    let mut shape = input.to_vec();
    let mut in_ch = input.channels;
    for &out_ch in CONV_CHANNELS.iter().take(blocks) {
        let block = [
            Layer::Conv(Conv::new(
                dims,
                in_ch,
                out_ch,
                CONV_KERNEL,
                CONV_STRIDE,
                CONV_PADDING,
                rng,
            )?),
            Layer::BatchNorm(BatchNorm::new(out_ch)),
            Layer::ReLU(Relu::default()),
            Layer::MaxPool(MaxPool::new(dims, POOL_KERNEL, POOL_STRIDE)),
        ];
        for layer in block {
            shape = layer.output_shape(&shape)?;
            layers.push(layer);
        }
        in_ch = out_ch;
    }
    let flat: usize = shape.iter().product();
    layers.push(Layer::Flatten(Flatten::default()));
    layers.push(Layer::FullyConnected(Linear::new(flat, latent_dim, rng)));
    if tanh_pi {
        layers.push(Layer::TanhPi(TanhPi::default()));
    }
    Ok(LayerStack::new(layers))
}

/// Head mapping `in_dim` features to a single logit.
pub fn build_head<R: Rng + ?Sized>(
    variant: HeadKind,
    in_dim: usize,
    hidden_dim: usize,
    rng: &mut R,
) -> Result<LayerStack> {
    if in_dim == 0 || hidden_dim == 0 {
        return Err(Error::Invalid("head dimensions must be positive".into()));
    }
    let fc = |i, o, rng: &mut R| Layer::FullyConnected(Linear::new(i, o, rng));
    let layers = match variant {
        HeadKind::None | HeadKind::LinearOut => vec![fc(in_dim, 1, rng)],
        HeadKind::Fcnone => vec![fc(in_dim, hidden_dim, rng), fc(hidden_dim, 1, rng)],
        HeadKind::Fcrelu => vec![
            fc(in_dim, hidden_dim, rng),
            Layer::ReLU(Relu::default()),
            fc(hidden_dim, 1, rng),
        ],
        HeadKind::Mlp => {
            let mut v = Vec::new();
            let mut d = in_dim;
            for _ in 0..3 {
                v.push(fc(d, hidden_dim, rng));
                v.push(Layer::ReLU(Relu::default()));
                d = hidden_dim;
            }
            v.push(fc(hidden_dim, 1, rng));
            v
        }
    };
    Ok(LayerStack::new(layers))
}
