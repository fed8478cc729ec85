//! Differentiable layers with hand-written backward passes.
//!
//! Each layer caches whatever its backward pass needs during `forward`.
//! Convolution and pooling work on `[batch, channels, spatial...]` with one
//! to three spatial axes; internally the spatial shape is right-aligned into
//! `[D, H, W]` with unit extent on missing axes.

use std::f64::consts::PI;

use rand::Rng;

use super::tensor::{Param, Tensor};
use crate::error::{Error, Result};

pub const BATCHNORM_EPS: f64 = 1e-5;
pub const BATCHNORM_MOMENTUM: f64 = 0.1;

#[derive(Clone, Debug)]
pub enum Layer {
    Conv(Conv),
    BatchNorm(BatchNorm),
    ReLU(Relu),
    MaxPool(MaxPool),
    Flatten(Flatten),
    FullyConnected(Linear),
    TanhPi(TanhPi),
}

impl Layer {
    pub fn forward(&mut self, x: &Tensor, training: bool) -> Result<Tensor> {
        match self {
            Layer::Conv(l) => l.forward(x),
            Layer::BatchNorm(l) => l.forward(x, training),
            Layer::ReLU(l) => l.forward(x),
            Layer::MaxPool(l) => l.forward(x),
            Layer::Flatten(l) => l.forward(x),
            Layer::FullyConnected(l) => l.forward(x),
            Layer::TanhPi(l) => l.forward(x),
        }
    }

    pub fn backward(&mut self, grad: &Tensor) -> Result<Tensor> {
        match self {
            Layer::Conv(l) => l.backward(grad),
            Layer::BatchNorm(l) => l.backward(grad),
            Layer::ReLU(l) => l.backward(grad),
            Layer::MaxPool(l) => l.backward(grad),
            Layer::Flatten(l) => l.backward(grad),
            Layer::FullyConnected(l) => l.backward(grad),
            Layer::TanhPi(l) => l.backward(grad),
        }
    }

    pub fn params_mut(&mut self) -> Vec<&mut Param> {
        match self {
            Layer::Conv(l) => vec![&mut l.weight, &mut l.bias],
            Layer::BatchNorm(l) => vec![&mut l.gamma, &mut l.beta],
            Layer::FullyConnected(l) => vec![&mut l.weight, &mut l.bias],
            _ => Vec::new(),
        }
    }

    pub fn params(&self) -> Vec<&Param> {
        match self {
            Layer::Conv(l) => vec![&l.weight, &l.bias],
            Layer::BatchNorm(l) => vec![&l.gamma, &l.beta],
            Layer::FullyConnected(l) => vec![&l.weight, &l.bias],
            _ => Vec::new(),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Layer::Conv(_) => "Conv",
            Layer::BatchNorm(_) => "BatchNorm",
            Layer::ReLU(_) => "ReLU",
            Layer::MaxPool(_) => "MaxPool",
            Layer::Flatten(_) => "Flatten",
            Layer::FullyConnected(_) => "FullyConnected",
            Layer::TanhPi(_) => "TanhPi",
        }
    }

    /// Short human-readable description, e.g. `FC(360→16)`.
    pub fn describe(&self) -> String {
        match self {
            Layer::Conv(c) => format!(
                "Conv{}d({}→{}, k{}, s{}, p{})",
                c.dims, c.in_ch, c.out_ch, c.kernel, c.stride, c.padding
            ),
            Layer::BatchNorm(b) => format!("BatchNorm({})", b.channels),
            Layer::ReLU(_) => "ReLU".into(),
            Layer::MaxPool(p) => format!("MaxPool{}d(k{}, s{})", p.dims, p.kernel, p.stride),
            Layer::Flatten(_) => "Flatten".into(),
            Layer::FullyConnected(l) => format!("FC({}→{})", l.in_dim, l.out_dim),
            Layer::TanhPi(_) => "TanhPi".into(),
        }
    }

    /// Output shape (without batch axis) for a given input shape.
    pub fn output_shape(&self, input: &[usize]) -> Result<Vec<usize>> {
        match self {
            Layer::Conv(c) => {
                let g = c.geometry(input)?;
                Ok(g.out_shape(c.out_ch))
            }
            Layer::MaxPool(p) => {
                let g = p.geometry(input)?;
                Ok(g.out_shape(input[0]))
            }
            Layer::Flatten(_) => Ok(vec![input.iter().product()]),
            Layer::FullyConnected(l) => {
                if input != [l.in_dim] {
                    return Err(Error::Shape(format!(
                        "FC({}→{}) cannot take input {input:?}",
                        l.in_dim, l.out_dim
                    )));
                }
                Ok(vec![l.out_dim])
            }
            Layer::BatchNorm(b) => {
                if input.first() != Some(&b.channels) {
                    return Err(Error::Shape(format!(
                        "BatchNorm({}) cannot take input {input:?}",
                        b.channels
                    )));
                }
                Ok(input.to_vec())
            }
            _ => Ok(input.to_vec()),
        }
    }
}

fn uniform_fan_in<R: Rng + ?Sized>(rng: &mut R, n: usize, fan_in: usize) -> Vec<f64> {
    let bound = 1.0 / (fan_in as f64).sqrt();
    (0..n).map(|_| rng.random_range(-bound..=bound)).collect()
}

/// Right-aligned `[D, H, W]` geometry of a sliding-window layer.
#[derive(Clone, Copy, Debug)]
struct Window {
    input: [usize; 3],
    output: [usize; 3],
    kernel: [usize; 3],
    stride: [usize; 3],
    padding: [usize; 3],
    dims: usize,
}

impl Window {
    fn new(
        dims: usize,
        spatial: &[usize],
        kernel: usize,
        stride: usize,
        padding: usize,
    ) -> Result<Self> {
        if spatial.len() != dims {
            return Err(Error::Shape(format!(
                "{dims}-d window layer got spatial shape {spatial:?}"
            )));
        }
        let mut w = Window {
            input: [1; 3],
            output: [1; 3],
            kernel: [1; 3],
            stride: [1; 3],
            padding: [0; 3],
            dims,
        };
        for (k, &len) in spatial.iter().enumerate() {
            let a = 3 - dims + k;
            w.input[a] = len;
            w.kernel[a] = kernel;
            w.stride[a] = stride;
            w.padding[a] = padding;
            if len + 2 * padding < kernel {
                return Err(Error::Shape(format!(
                    "spatial extent {len} too small for kernel {kernel}"
                )));
            }
            w.output[a] = (len + 2 * padding - kernel) / stride + 1;
        }
        Ok(w)
    }

    fn in_vol(&self) -> usize {
        self.input.iter().product()
    }

    fn out_vol(&self) -> usize {
        self.output.iter().product()
    }

    fn kernel_vol(&self) -> usize {
        self.kernel.iter().product()
    }

    fn out_shape(&self, channels: usize) -> Vec<usize> {
        let mut s = vec![channels];
        s.extend_from_slice(&self.output[3 - self.dims..]);
        s
    }

    /// Calls `f(out_index, kernel_index, in_index)` for every in-bounds tap.
    #[inline]
    fn for_each_tap(&self, mut f: impl FnMut(usize, usize, usize)) {
        let [od, oh, ow] = self.output;
        let [kd, kh, kw] = self.kernel;
        let [_, ih_len, iw_len] = self.input;
        for z in 0..od {
            for y in 0..oh {
                for x in 0..ow {
                    let o = (z * oh + y) * ow + x;
                    for a in 0..kd {
                        let iz = (z * self.stride[0] + a) as isize - self.padding[0] as isize;
                        if iz < 0 || iz as usize >= self.input[0] {
                            continue;
                        }
                        for b in 0..kh {
                            let iy = (y * self.stride[1] + b) as isize - self.padding[1] as isize;
                            if iy < 0 || iy as usize >= ih_len {
                                continue;
                            }
                            for c in 0..kw {
                                let ix =
                                    (x * self.stride[2] + c) as isize - self.padding[2] as isize;
                                if ix < 0 || ix as usize >= iw_len {
                                    continue;
                                }
                                let i = (iz as usize * ih_len + iy as usize) * iw_len + ix as usize;
                                f(o, (a * kh + b) * kw + c, i);
                            }
                        }
                    }
                }
            }
        }
    }
}

#[derive(Clone, Debug)]
pub struct Conv {
    pub dims: usize,
    pub in_ch: usize,
    pub out_ch: usize,
    pub kernel: usize,
    pub stride: usize,
    pub padding: usize,
    /// `[out_ch, in_ch, k…]`
    pub weight: Param,
    pub bias: Param,
    cache: Option<(Tensor, Window)>,
}

impl Conv {
    pub fn new<R: Rng + ?Sized>(
        dims: usize,
        in_ch: usize,
        out_ch: usize,
        kernel: usize,
        stride: usize,
        padding: usize,
        rng: &mut R,
    ) -> Result<Self> {
        if !(1..=3).contains(&dims) || kernel == 0 || stride == 0 {
            return Err(Error::Invalid(format!(
                "bad conv geometry: dims {dims}, kernel {kernel}, stride {stride}"
            )));
        }
        let kvol = kernel.pow(dims as u32);
        let fan_in = in_ch * kvol;
        Ok(Self {
            dims,
            in_ch,
            out_ch,
            kernel,
            stride,
            padding,
            weight: Param::new(uniform_fan_in(rng, out_ch * fan_in, fan_in)),
            bias: Param::new(uniform_fan_in(rng, out_ch, fan_in)),
            cache: None,
        })
    }

    fn geometry(&self, input: &[usize]) -> Result<Window> {
        if input.len() != self.dims + 1 || input[0] != self.in_ch {
            return Err(Error::Shape(format!(
                "Conv{}d expects [{}, spatial×{}], got {input:?}",
                self.dims, self.in_ch, self.dims
            )));
        }
        Window::new(
            self.dims,
            &input[1..],
            self.kernel,
            self.stride,
            self.padding,
        )
    }

    fn forward(&mut self, x: &Tensor) -> Result<Tensor> {
        let w = self.geometry(&x.shape()[1..])?;
        let batch = x.batch();
        let (iv, ov, kv) = (w.in_vol(), w.out_vol(), w.kernel_vol());
        let mut out = vec![0.0; batch * self.out_ch * ov];
        let weight = &self.weight.value;
        for b in 0..batch {
            for oc in 0..self.out_ch {
                let dst = &mut out[(b * self.out_ch + oc) * ov..][..ov];
                dst.iter_mut().for_each(|v| *v = self.bias.value[oc]);
                for ic in 0..self.in_ch {
                    let src = &x.data()[(b * self.in_ch + ic) * iv..][..iv];
                    let k = &weight[(oc * self.in_ch + ic) * kv..][..kv];
                    w.for_each_tap(|o, t, i| dst[o] += k[t] * src[i]);
                }
            }
        }
        let mut shape = vec![batch];
        shape.extend(w.out_shape(self.out_ch));
        self.cache = Some((x.clone(), w));
        Tensor::new(shape, out)
    }

    fn backward(&mut self, grad: &Tensor) -> Result<Tensor> {
        let (x, w) = self.cache.as_ref().ok_or(Error::NoForward("Conv"))?;
        let batch = x.batch();
        let (iv, ov, kv) = (w.in_vol(), w.out_vol(), w.kernel_vol());
        if grad.len() != batch * self.out_ch * ov {
            return Err(Error::Shape("Conv upstream gradient shape".into()));
        }
        let mut gx = vec![0.0; x.len()];
        for b in 0..batch {
            for oc in 0..self.out_ch {
                let g = &grad.data()[(b * self.out_ch + oc) * ov..][..ov];
                self.bias.grad[oc] += g.iter().sum::<f64>();
                for ic in 0..self.in_ch {
                    let src = &x.data()[(b * self.in_ch + ic) * iv..][..iv];
                    let woff = (oc * self.in_ch + ic) * kv;
                    let k = &self.weight.value[woff..woff + kv];
                    let gk = &mut self.weight.grad[woff..woff + kv];
                    let gsrc = &mut gx[(b * self.in_ch + ic) * iv..][..iv];
                    w.for_each_tap(|o, t, i| {
                        gk[t] += g[o] * src[i];
                        gsrc[i] += g[o] * k[t];
                    });
                }
            }
        }
        Tensor::new(x.shape().to_vec(), gx)
    }
}

#[derive(Clone, Debug)]
pub struct MaxPool {
    pub dims: usize,
    pub kernel: usize,
    pub stride: usize,
    cache: Option<(Vec<usize>, Vec<usize>)>,
}

impl MaxPool {
    pub fn new(dims: usize, kernel: usize, stride: usize) -> Self {
        Self {
            dims,
            kernel,
            stride,
            cache: None,
        }
    }

    fn geometry(&self, input: &[usize]) -> Result<Window> {
        if input.len() != self.dims + 1 {
            return Err(Error::Shape(format!(
                "MaxPool{}d expects [C, spatial×{}], got {input:?}",
                self.dims, self.dims
            )));
        }
        Window::new(self.dims, &input[1..], self.kernel, self.stride, 0)
    }

    fn forward(&mut self, x: &Tensor) -> Result<Tensor> {
        let w = self.geometry(&x.shape()[1..])?;
        let planes = x.shape()[0] * x.shape()[1];
        let (iv, ov) = (w.in_vol(), w.out_vol());
        let mut out = vec![f64::NEG_INFINITY; planes * ov];
        let mut argmax = vec![0usize; planes * ov];
        for p in 0..planes {
            let src = &x.data()[p * iv..][..iv];
            let dst = &mut out[p * ov..][..ov];
            let arg = &mut argmax[p * ov..][..ov];
            arg.iter_mut().for_each(|a| *a = p * iv);
            w.for_each_tap(|o, _, i| {
                if src[i] > dst[o] {
                    dst[o] = src[i];
                    arg[o] = p * iv + i;
                }
            });
        }
        let mut shape = vec![x.shape()[0]];
        shape.extend(w.out_shape(x.shape()[1]));
        self.cache = Some((argmax, x.shape().to_vec()));
        Tensor::new(shape, out)
    }

    fn backward(&mut self, grad: &Tensor) -> Result<Tensor> {
        let (argmax, in_shape) = self.cache.as_ref().ok_or(Error::NoForward("MaxPool"))?;
        if grad.len() != argmax.len() {
            return Err(Error::Shape("MaxPool upstream gradient shape".into()));
        }
        let mut gx = Tensor::zeros(in_shape.clone());
        for (g, &i) in grad.data().iter().zip(argmax) {
            gx.data_mut()[i] += g;
        }
        Ok(gx)
    }
}

#[derive(Clone, Debug)]
pub struct BatchNorm {
    pub channels: usize,
    pub gamma: Param,
    pub beta: Param,
    pub running_mean: Vec<f64>,
    pub running_var: Vec<f64>,
    cache: Option<BnCache>,
}

#[derive(Clone, Debug)]
struct BnCache {
    xhat: Vec<f64>,
    inv_std: Vec<f64>,
    shape: Vec<usize>,
    training: bool,
}

impl BatchNorm {
    pub fn new(channels: usize) -> Self {
        Self {
            channels,
            gamma: Param::new(vec![1.0; channels]),
            beta: Param::new(vec![0.0; channels]),
            running_mean: vec![0.0; channels],
            running_var: vec![1.0; channels],
            cache: None,
        }
    }

    fn layout(&self, x: &Tensor) -> Result<(usize, usize)> {
        if x.shape().len() < 2 || x.shape()[1] != self.channels {
            return Err(Error::Shape(format!(
                "BatchNorm({}) got {:?}",
                self.channels,
                x.shape()
            )));
        }
        let inner: usize = x.shape()[2..].iter().product();
        Ok((x.batch(), inner))
    }

    #[allow(clippy::needless_range_loop)]
    fn forward(&mut self, x: &Tensor, training: bool) -> Result<Tensor> {
        let (batch, inner) = self.layout(x)?;
        let c_n = self.channels;
        let count = (batch * inner) as f64;
        let idx = |b: usize, c: usize, s: usize| (b * c_n + c) * inner + s;
        let mut out = vec![0.0; x.len()];
        let mut xhat = vec![0.0; x.len()];
        let mut inv_std = vec![0.0; c_n];
        for c in 0..c_n {
            let (mean, var) = if training {
                let mut sum = 0.0;
                for b in 0..batch {
                    for s in 0..inner {
                        sum += x.data()[idx(b, c, s)];
                    }
                }
                let mean = sum / count;
                let mut sq = 0.0;
                for b in 0..batch {
                    for s in 0..inner {
                        sq += (x.data()[idx(b, c, s)] - mean).powi(2);
                    }
                }
                let var = sq / count;
                let unbiased = if count > 1.0 { sq / (count - 1.0) } else { var };
                self.running_mean[c] =
                    (1.0 - BATCHNORM_MOMENTUM) * self.running_mean[c] + BATCHNORM_MOMENTUM * mean;
                self.running_var[c] = (1.0 - BATCHNORM_MOMENTUM) * self.running_var[c]
                    + BATCHNORM_MOMENTUM * unbiased;
                (mean, var)
            } else {
                (self.running_mean[c], self.running_var[c])
            };
            let is = 1.0 / (var + BATCHNORM_EPS).sqrt();
            inv_std[c] = is;
            for b in 0..batch {
                for s in 0..inner {
                    let i = idx(b, c, s);
                    xhat[i] = (x.data()[i] - mean) * is;
                    out[i] = self.gamma.value[c] * xhat[i] + self.beta.value[c];
                }
            }
        }
        self.cache = Some(BnCache {
            xhat,
            inv_std,
            shape: x.shape().to_vec(),
            training,
        });
        Tensor::new(x.shape().to_vec(), out)
    }

    fn backward(&mut self, grad: &Tensor) -> Result<Tensor> {
        let cache = self.cache.as_ref().ok_or(Error::NoForward("BatchNorm"))?;
        if grad.shape() != cache.shape.as_slice() {
            return Err(Error::Shape("BatchNorm upstream gradient shape".into()));
        }
        let batch = cache.shape[0];
        let inner: usize = cache.shape[2..].iter().product();
        let c_n = self.channels;
        let count = (batch * inner) as f64;
        let idx = |b: usize, c: usize, s: usize| (b * c_n + c) * inner + s;
        let mut gx = vec![0.0; grad.len()];
        for c in 0..c_n {
            let mut sum_g = 0.0;
            let mut sum_gx = 0.0;
            for b in 0..batch {
                for s in 0..inner {
                    let i = idx(b, c, s);
                    sum_g += grad.data()[i];
                    sum_gx += grad.data()[i] * cache.xhat[i];
                }
            }
            self.beta.grad[c] += sum_g;
            self.gamma.grad[c] += sum_gx;
            let gamma = self.gamma.value[c];
            let is = cache.inv_std[c];
            for b in 0..batch {
                for s in 0..inner {
                    let i = idx(b, c, s);
                    gx[i] = if cache.training {
                        gamma * is / count
                            * (count * grad.data()[i] - sum_g - cache.xhat[i] * sum_gx)
                    } else {
                        gamma * is * grad.data()[i]
                    };
                }
            }
        }
        Tensor::new(cache.shape.clone(), gx)
    }
}

#[derive(Clone, Debug, Default)]
pub struct Relu {
    mask: Option<(Vec<bool>, Vec<usize>)>,
}

impl Relu {
    fn forward(&mut self, x: &Tensor) -> Result<Tensor> {
        let mask: Vec<bool> = x.data().iter().map(|v| *v > 0.0).collect();
        let out = x.data().iter().map(|v| v.max(0.0)).collect();
        self.mask = Some((mask, x.shape().to_vec()));
        Tensor::new(x.shape().to_vec(), out)
    }

    fn backward(&mut self, grad: &Tensor) -> Result<Tensor> {
        let (mask, shape) = self.mask.as_ref().ok_or(Error::NoForward("ReLU"))?;
        if grad.len() != mask.len() {
            return Err(Error::Shape("ReLU upstream gradient shape".into()));
        }
        let g = grad
            .data()
            .iter()
            .zip(mask)
            .map(|(g, m)| if *m { *g } else { 0.0 })
            .collect();
        Tensor::new(shape.clone(), g)
    }
}

/// `π·tanh(z)`, mapping features into (−π, π) before angle encoding.
#[derive(Clone, Debug, Default)]
pub struct TanhPi {
    tanh: Option<(Vec<f64>, Vec<usize>)>,
}

impl TanhPi {
    fn forward(&mut self, x: &Tensor) -> Result<Tensor> {
        let t: Vec<f64> = x.data().iter().map(|v| v.tanh()).collect();
        let out = t.iter().map(|v| PI * v).collect();
        self.tanh = Some((t, x.shape().to_vec()));
        Tensor::new(x.shape().to_vec(), out)
    }

    fn backward(&mut self, grad: &Tensor) -> Result<Tensor> {
        let (t, shape) = self.tanh.as_ref().ok_or(Error::NoForward("TanhPi"))?;
        if grad.len() != t.len() {
            return Err(Error::Shape("TanhPi upstream gradient shape".into()));
        }
        let g = grad
            .data()
            .iter()
            .zip(t)
            .map(|(g, t)| g * PI * (1.0 - t * t))
            .collect();
        Tensor::new(shape.clone(), g)
    }
}

#[derive(Clone, Debug, Default)]
pub struct Flatten {
    shape: Option<Vec<usize>>,
}

impl Flatten {
    fn forward(&mut self, x: &Tensor) -> Result<Tensor> {
        self.shape = Some(x.shape().to_vec());
        x.clone().reshape(vec![x.batch(), x.row_len()])
    }

    fn backward(&mut self, grad: &Tensor) -> Result<Tensor> {
        let shape = self.shape.as_ref().ok_or(Error::NoForward("Flatten"))?;
        grad.clone().reshape(shape.clone())
    }
}

/// `y = W x + b` with `W` stored `[out, in]`.
#[derive(Clone, Debug)]
pub struct Linear {
    pub in_dim: usize,
    pub out_dim: usize,
    pub weight: Param,
    pub bias: Param,
    input: Option<Tensor>,
}

impl Linear {
    pub fn new<R: Rng + ?Sized>(in_dim: usize, out_dim: usize, rng: &mut R) -> Self {
        Self {
            in_dim,
            out_dim,
            weight: Param::new(uniform_fan_in(rng, in_dim * out_dim, in_dim)),
            bias: Param::new(uniform_fan_in(rng, out_dim, in_dim)),
            input: None,
        }
    }

    fn forward(&mut self, x: &Tensor) -> Result<Tensor> {
        if x.shape().len() != 2 || x.shape()[1] != self.in_dim {
            return Err(Error::Shape(format!(
                "FC({}→{}) got {:?}",
                self.in_dim,
                self.out_dim,
                x.shape()
            )));
        }
        let batch = x.batch();
        let mut out = Vec::with_capacity(batch * self.out_dim);
        for b in 0..batch {
            let xb = x.row(b);
            for o in 0..self.out_dim {
                let w = &self.weight.value[o * self.in_dim..][..self.in_dim];
                out.push(self.bias.value[o] + w.iter().zip(xb).map(|(w, x)| w * x).sum::<f64>());
            }
        }
        self.input = Some(x.clone());
        Tensor::new(vec![batch, self.out_dim], out)
    }

    fn backward(&mut self, grad: &Tensor) -> Result<Tensor> {
        let x = self
            .input
            .as_ref()
            .ok_or(Error::NoForward("FullyConnected"))?;
        let batch = x.batch();
        if grad.shape() != [batch, self.out_dim] {
            return Err(Error::Shape(format!(
                "FC upstream gradient {:?}, expected [{batch}, {}]",
                grad.shape(),
                self.out_dim
            )));
        }
        let mut gx = vec![0.0; batch * self.in_dim];
        for b in 0..batch {
            let xb = x.row(b);
            let gb = grad.row(b);
            let gxb = &mut gx[b * self.in_dim..][..self.in_dim];
            for (o, &g) in gb.iter().enumerate() {
                self.bias.grad[o] += g;
                let row = o * self.in_dim;
                for i in 0..self.in_dim {
                    self.weight.grad[row + i] += g * xb[i];
                    gxb[i] += g * self.weight.value[row + i];
                }
            }
        }
        Tensor::new(vec![batch, self.in_dim], gx)
    }
}
