use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use super::Tensor;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LayerKind {
    Dense,
    Conv2d,
    Relu,
    Flatten,
}

impl LayerKind {
    pub fn tag(self) -> u32 {
        match self {
            LayerKind::Dense => 0,
            LayerKind::Conv2d => 1,
            LayerKind::Relu => 2,
            LayerKind::Flatten => 3,
        }
    }

    pub fn from_tag(tag: u32) -> Option<Self> {
        match tag {
            0 => Some(LayerKind::Dense),
            1 => Some(LayerKind::Conv2d),
            2 => Some(LayerKind::Relu),
            3 => Some(LayerKind::Flatten),
            _ => None,
        }
    }
}

/// One layer. Dense weights are `[out, in]`; conv weights are `[filters, channels, k, k]`
/// with stride 1 and no padding.
#[derive(Debug, Clone, PartialEq)]
pub enum Layer {
    Dense { weight: Tensor, bias: Tensor },
    Conv2d { weight: Tensor, bias: Tensor },
    Relu,
    Flatten,
}

impl Layer {
    pub fn kind(&self) -> LayerKind {
        match self {
            Layer::Dense { .. } => LayerKind::Dense,
            Layer::Conv2d { .. } => LayerKind::Conv2d,
            Layer::Relu => LayerKind::Relu,
            Layer::Flatten => LayerKind::Flatten,
        }
    }

    pub fn dense(inputs: usize, outputs: usize, rng: &mut impl Rng) -> Self {
        let limit = libm::sqrt(6.0 / (inputs + outputs) as f64);
        let weight = uniform(&[outputs, inputs], limit, rng);
        Layer::Dense {
            weight,
            bias: Tensor::zeros(&[outputs]),
        }
    }

    pub fn conv2d(channels: usize, filters: usize, kernel: usize, rng: &mut impl Rng) -> Self {
        let area = kernel * kernel;
        let limit = libm::sqrt(6.0 / ((channels + filters) * area) as f64);
        let weight = uniform(&[filters, channels, kernel, kernel], limit, rng);
        Layer::Conv2d {
            weight,
            bias: Tensor::zeros(&[filters]),
        }
    }

    fn output_shape(&self, input: &[usize]) -> Result<Vec<usize>> {
        match self {
            Layer::Dense { weight, .. } => {
                let (out, inp) = (weight.shape()[0], weight.shape()[1]);
                if input != [inp] {
                    return Err(Error::Config(format!(
                        "dense layer expects [{inp}], got {input:?}"
                    )));
                }
                Ok(vec![out])
            }
            Layer::Conv2d { weight, .. } => {
                let s = weight.shape();
                let (f, c, k) = (s[0], s[1], s[2]);
                if input.len() != 3 || input[0] != c || input[1] < k || input[2] < k {
                    return Err(Error::Config(format!(
                        "conv layer expects [{c}, >={k}, >={k}], got {input:?}"
                    )));
                }
                Ok(vec![f, input[1] - k + 1, input[2] - k + 1])
            }
            Layer::Relu => Ok(input.to_vec()),
            Layer::Flatten => Ok(vec![input.iter().product()]),
        }
    }
}

fn uniform(shape: &[usize], limit: f64, rng: &mut impl Rng) -> Tensor {
    let mut t = Tensor::zeros(shape);
    for v in t.data_mut() {
        *v = rng.random_range(-limit..=limit);
    }
    t
}

/// Activations recorded by [`Network::forward_trace`]; `activations[0]` is the input and
/// `activations[i + 1]` the output of layer `i`.
#[derive(Debug, Clone)]
pub struct Trace {
    pub activations: Vec<Tensor>,
}

impl Trace {
    pub fn logits(&self) -> &Tensor {
        self.activations.last().expect("trace holds at least the input")
    }
}

/// Parameter gradients in [`Network::params`] order (weight then bias per layer).
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub tensors: Vec<Tensor>,
}

impl Gradients {
    pub fn zeros_for(net: &Network) -> Self {
        Self {
            tensors: net.params().map(Tensor::zeros_like).collect(),
        }
    }

    pub fn add_scaled(&mut self, other: &Gradients, s: f64) {
        for (a, b) in self.tensors.iter_mut().zip(&other.tensors) {
            a.add_scaled(b, s);
        }
    }

    pub fn flat(&self) -> Vec<f64> {
        self.tensors.iter().flat_map(|t| t.data().iter().copied()).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    input_shape: Vec<usize>,
    layers: Vec<Layer>,
}

impl Network {
    /// Validates that the layer shapes compose for per-sample `input_shape`.
    pub fn new(input_shape: Vec<usize>, layers: Vec<Layer>) -> Result<Self> {
        let net = Self {
            input_shape,
            layers,
        };
        let out = net.output_shape()?;
        if out.len() != 1 {
            return Err(Error::Config(format!(
                "network must end in a flat logit vector, got {out:?}"
            )));
        }
        Ok(net)
    }

    /// conv(8, 3x3) -> relu -> flatten -> dense(64) -> relu -> dense(classes).
    pub fn default_arch(
        channels: usize,
        height: usize,
        width: usize,
        classes: usize,
        rng: &mut impl Rng,
    ) -> Result<Self> {
        Self::conv_arch(channels, height, width, 8, 64, classes, rng)
    }

    pub fn conv_arch(
        channels: usize,
        height: usize,
        width: usize,
        filters: usize,
        hidden: usize,
        classes: usize,
        rng: &mut impl Rng,
    ) -> Result<Self> {
        if height < 3 || width < 3 {
            return Err(Error::Config(format!("image {height}x{width} too small for 3x3 conv")));
        }
        let flat = filters * (height - 2) * (width - 2);
        Self::new(
            vec![channels, height, width],
            vec![
                Layer::conv2d(channels, filters, 3, rng),
                Layer::Relu,
                Layer::Flatten,
                Layer::dense(flat, hidden, rng),
                Layer::Relu,
                Layer::dense(hidden, classes, rng),
            ],
        )
    }

    /// Dense layers of the given widths with ReLU between them.
    pub fn mlp(widths: &[usize], rng: &mut impl Rng) -> Result<Self> {
        if widths.len() < 2 {
            return Err(Error::Config("mlp needs at least input and output widths".into()));
        }
        let mut layers = Vec::new();
        for (i, pair) in widths.windows(2).enumerate() {
            if i > 0 {
                layers.push(Layer::Relu);
            }
            layers.push(Layer::dense(pair[0], pair[1], rng));
        }
        Self::new(vec![widths[0]], layers)
    }

    pub fn input_shape(&self) -> &[usize] {
        &self.input_shape
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn output_shape(&self) -> Result<Vec<usize>> {
        let mut shape = self.input_shape.clone();
        for layer in &self.layers {
            shape = layer.output_shape(&shape)?;
        }
        Ok(shape)
    }

    pub fn num_classes(&self) -> usize {
        self.output_shape().map(|s| s[0]).unwrap_or(0)
    }

    pub fn params(&self) -> impl Iterator<Item = &Tensor> {
        self.layers.iter().flat_map(|l| match l {
            Layer::Dense { weight, bias } | Layer::Conv2d { weight, bias } => {
                vec![weight, bias]
            }
            _ => Vec::new(),
        })
    }

    pub fn params_mut(&mut self) -> impl Iterator<Item = &mut Tensor> {
        self.layers.iter_mut().flat_map(|l| match l {
            Layer::Dense { weight, bias } | Layer::Conv2d { weight, bias } => {
                vec![weight, bias]
            }
            _ => Vec::new(),
        })
    }

    pub fn param_count(&self) -> usize {
        self.params().map(Tensor::len).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.params().all(Tensor::is_finite)
    }

    fn check_batch(&self, batch: &Tensor) -> Result<()> {
        if batch.shape().len() != self.input_shape.len() + 1
            || batch.shape()[1..] != self.input_shape[..]
        {
            return Err(Error::Config(format!(
                "batch shape {:?} does not match network input {:?}",
                batch.shape(),
                self.input_shape
            )));
        }
        Ok(())
    }

    pub fn forward(&self, batch: &Tensor) -> Result<Tensor> {
        self.check_batch(batch)?;
        let mut x = batch.clone();
        for layer in &self.layers {
            x = forward_layer(layer, &x);
        }
        Ok(x)
    }

    pub fn forward_trace(&self, batch: &Tensor) -> Result<Trace> {
        self.check_batch(batch)?;
        let mut activations = Vec::with_capacity(self.layers.len() + 1);
        activations.push(batch.clone());
        for layer in &self.layers {
            let next = forward_layer(layer, activations.last().unwrap());
            activations.push(next);
        }
        Ok(Trace { activations })
    }

    /// Back-propagates `grad_logits` (dL/dlogits for the whole batch) through a trace.
    pub fn backward(&self, trace: &Trace, grad_logits: &Tensor) -> Result<Gradients> {
        if grad_logits.shape() != trace.logits().shape() {
            return Err(Error::Config(format!(
                "logit gradient shape {:?} does not match logits {:?}",
                grad_logits.shape(),
                trace.logits().shape()
            )));
        }
        let mut grads: Vec<Tensor> = Vec::new();
        let mut g = grad_logits.clone();
        for (i, layer) in self.layers.iter().enumerate().rev() {
            let input = &trace.activations[i];
            let output = &trace.activations[i + 1];
            let need_input_grad = i > 0;
            match layer {
                Layer::Dense { weight, .. } => {
                    let (gw, gb, gx) = dense_backward(weight, input, &g, need_input_grad);
                    grads.push(gb);
                    grads.push(gw);
                    g = gx;
                }
                Layer::Conv2d { weight, .. } => {
                    let (gw, gb, gx) = conv_backward(weight, input, &g, need_input_grad);
                    grads.push(gb);
                    grads.push(gw);
                    g = gx;
                }
                Layer::Relu => {
                    for (gv, &y) in g.data_mut().iter_mut().zip(output.data()) {
                        if y <= 0.0 {
                            *gv = 0.0;
                        }
                    }
                }
                Layer::Flatten => {
                    g = g.reshape(input.shape().to_vec())?;
                }
            }
        }
        grads.reverse();
        Ok(Gradients { tensors: grads })
    }
}

fn forward_layer(layer: &Layer, x: &Tensor) -> Tensor {
    match layer {
        Layer::Dense { weight, bias } => dense_forward(weight, bias, x),
        Layer::Conv2d { weight, bias } => conv_forward(weight, bias, x),
        Layer::Relu => {
            let mut y = x.clone();
            y.data_mut().iter_mut().for_each(|v| *v = v.max(0.0));
            y
        }
        Layer::Flatten => {
            let b = x.batch_size();
            let w = x.row_len();
            x.clone().reshape(vec![b, w]).expect("flatten preserves size")
        }
    }
}

fn dense_forward(weight: &Tensor, bias: &Tensor, x: &Tensor) -> Tensor {
    let (out, inp) = (weight.shape()[0], weight.shape()[1]);
    let b = x.batch_size();
    let w = weight.data();
    let mut y = Tensor::zeros(&[b, out]);
    for s in 0..b {
        let xr = x.row(s);
        let yr = y.row_mut(s);
        for o in 0..out {
            let wr = &w[o * inp..(o + 1) * inp];
            yr[o] = bias.data()[o] + dot(wr, xr);
        }
    }
    y
}

fn dense_backward(
    weight: &Tensor,
    x: &Tensor,
    g: &Tensor,
    need_input_grad: bool,
) -> (Tensor, Tensor, Tensor) {
    let (out, inp) = (weight.shape()[0], weight.shape()[1]);
    let b = x.batch_size();
    let mut gw = Tensor::zeros(weight.shape());
    let mut gb = Tensor::zeros(&[out]);
    let mut gx = if need_input_grad {
        Tensor::zeros(x.shape())
    } else {
        Tensor::zeros(&[0])
    };
    let w = weight.data();
    for s in 0..b {
        let xr = x.row(s);
        let gr = g.row(s);
        for o in 0..out {
            let go = gr[o];
            if go == 0.0 {
                continue;
            }
            gb.data_mut()[o] += go;
            axpy(&mut gw.data_mut()[o * inp..(o + 1) * inp], go, xr);
            if need_input_grad {
                axpy(gx.row_mut(s), go, &w[o * inp..(o + 1) * inp]);
            }
        }
    }
    (gw, gb, gx)
}

fn conv_forward(weight: &Tensor, bias: &Tensor, x: &Tensor) -> Tensor {
    let ws = weight.shape();
    let (f, c, k) = (ws[0], ws[1], ws[2]);
    let xs = x.shape();
    let (b, h, w) = (xs[0], xs[2], xs[3]);
    let (oh, ow) = (h - k + 1, w - k + 1);
    let mut y = Tensor::zeros(&[b, f, oh, ow]);
    let wd = weight.data();
    for s in 0..b {
        let xr = x.row(s);
        let yr = y.row_mut(s);
        for fi in 0..f {
            let plane = &mut yr[fi * oh * ow..(fi + 1) * oh * ow];
            plane.iter_mut().for_each(|v| *v = bias.data()[fi]);
            for ci in 0..c {
                let xin = &xr[ci * h * w..(ci + 1) * h * w];
                for ky in 0..k {
                    for kx in 0..k {
                        let wv = wd[((fi * c + ci) * k + ky) * k + kx];
                        for oy in 0..oh {
                            let src = &xin[(oy + ky) * w + kx..(oy + ky) * w + kx + ow];
                            axpy(&mut plane[oy * ow..(oy + 1) * ow], wv, src);
                        }
                    }
                }
            }
        }
    }
    y
}

fn conv_backward(
    weight: &Tensor,
    x: &Tensor,
    g: &Tensor,
    need_input_grad: bool,
) -> (Tensor, Tensor, Tensor) {
    let ws = weight.shape();
    let (f, c, k) = (ws[0], ws[1], ws[2]);
    let xs = x.shape();
    let (b, h, w) = (xs[0], xs[2], xs[3]);
    let (oh, ow) = (h - k + 1, w - k + 1);
    let mut gw = Tensor::zeros(ws);
    let mut gb = Tensor::zeros(&[f]);
    let mut gx = if need_input_grad {
        Tensor::zeros(xs)
    } else {
        Tensor::zeros(&[0])
    };
    let wd = weight.data();
    for s in 0..b {
        let xr = x.row(s);
        let gr = g.row(s);
        for fi in 0..f {
            let plane = &gr[fi * oh * ow..(fi + 1) * oh * ow];
            gb.data_mut()[fi] += plane.iter().sum::<f64>();
            for ci in 0..c {
                let xin = &xr[ci * h * w..(ci + 1) * h * w];
                for ky in 0..k {
                    for kx in 0..k {
                        let widx = ((fi * c + ci) * k + ky) * k + kx;
                        let mut acc = 0.0;
                        for oy in 0..oh {
                            let src = &xin[(oy + ky) * w + kx..(oy + ky) * w + kx + ow];
                            acc += dot(&plane[oy * ow..(oy + 1) * ow], src);
                        }
                        gw.data_mut()[widx] += acc;
                        if need_input_grad {
                            let wv = wd[widx];
                            let gxr = gx.row_mut(s);
                            let gin = &mut gxr[ci * h * w..(ci + 1) * h * w];
                            for oy in 0..oh {
                                let start = (oy + ky) * w + kx;
                                axpy(&mut gin[start..start + ow], wv, &plane[oy * ow..(oy + 1) * ow]);
                            }
                        }
                    }
                }
            }
        }
    }
    (gw, gb, gx)
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    // Four independent accumulators; the summation order is fixed so results stay bit-stable.
    let n = a.len().min(b.len());
    let chunks = n / 4;
    let mut acc = [0.0f64; 4];
    for i in 0..chunks {
        let j = i * 4;
        acc[0] += a[j] * b[j];
        acc[1] += a[j + 1] * b[j + 1];
        acc[2] += a[j + 2] * b[j + 2];
        acc[3] += a[j + 3] * b[j + 3];
    }
    let mut tail = 0.0;
    for j in chunks * 4..n {
        tail += a[j] * b[j];
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

#[inline]
fn axpy(y: &mut [f64], a: f64, x: &[f64]) {
    for (yv, xv) in y.iter_mut().zip(x) {
        *yv += a * xv;
    }
}
