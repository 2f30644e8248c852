//! Minimal batch-major neural network layers with hand-written backward
//! passes. Parameters of a whole network live in one flat vector; layers
//! hold offsets into it.

use std::fmt::Debug;
use std::iter::Sum;

use num_traits::Float;
use rand::Rng;
use rand_distr::{Distribution, Normal};

/// Scalar type of a network. `f32` for training, `f64` for gradient checks.
pub trait Real: Float + Default + Debug + Send + Sync + Sum + 'static {
    fn of(x: f64) -> Self;
    fn as_f64(self) -> f64;
    /// `C = op(A)·op(B) (+ C if accumulate)`, all row-major. `op(A)` is
    /// `m×k`, `op(B)` is `k×n`; `a_t`/`b_t` mean the buffer holds the
    /// transpose.
    #[allow(clippy::too_many_arguments)]
    fn gemm(m: usize, k: usize, n: usize, a: &[Self], a_t: bool, b: &[Self], b_t: bool, c: &mut [Self], accumulate: bool);
}

fn strides(rows: usize, cols: usize, transposed: bool) -> (isize, isize) {
    if transposed {
        (1, rows as isize)
    } else {
        (cols as isize, 1)
    }
}

macro_rules! impl_real {
    ($t:ty, $gemm:path) => {
        impl Real for $t {
            fn of(x: f64) -> Self {
                x as $t
            }

            fn as_f64(self) -> f64 {
                self as f64
            }

            fn gemm(m: usize, k: usize, n: usize, a: &[Self], a_t: bool, b: &[Self], b_t: bool, c: &mut [Self], accumulate: bool) {
                assert!(a.len() >= m * k && b.len() >= k * n && c.len() >= m * n, "gemm operand too small");
                if m == 0 || n == 0 {
                    return;
                }
                if k == 0 {
                    if !accumulate {
                        c[..m * n].fill(0.0);
                    }
                    return;
                }
                let (rsa, csa) = strides(m, k, a_t);
                let (rsb, csb) = strides(k, n, b_t);
                let beta = if accumulate { 1.0 } else { 0.0 };
                // SAFETY: bounds asserted above; strides describe dense
                // row-major buffers of exactly those shapes.
                unsafe {
                    $gemm(m, k, n, 1.0, a.as_ptr(), rsa, csa, b.as_ptr(), rsb, csb, beta, c.as_mut_ptr(), n as isize, 1);
                }
            }
        }
    };
}

impl_real!(f32, matrixmultiply::sgemm);
impl_real!(f64, matrixmultiply::dgemm);

/// Geometry of a 2-d convolution over channels-last images.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ConvGeom {
    pub in_h: usize,
    pub in_w: usize,
    pub in_c: usize,
    pub k: usize,
    pub stride: usize,
    pub pad: usize,
    pub out_c: usize,
    pub out_h: usize,
    pub out_w: usize,
}

impl ConvGeom {
    /// Kernel sizes larger than the padded input shrink to fit.
    pub fn new(in_h: usize, in_w: usize, in_c: usize, k: usize, stride: usize, pad: usize, out_c: usize) -> Self {
        let k = k.min(in_h + 2 * pad).min(in_w + 2 * pad).max(1);
        let out_h = (in_h + 2 * pad - k) / stride + 1;
        let out_w = (in_w + 2 * pad - k) / stride + 1;
        Self {
            in_h,
            in_w,
            in_c,
            k,
            stride,
            pad,
            out_c,
            out_h,
            out_w,
        }
    }

    fn patch(&self) -> usize {
        self.k * self.k * self.in_c
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Layer {
    Dense { input: usize, output: usize, w: usize, b: usize },
    Conv { geom: ConvGeom, w: usize, b: usize },
    MaxPool { h: usize, w: usize, c: usize, k: usize, stride: usize, out_h: usize, out_w: usize },
    Relu { len: usize },
    Tanh { len: usize },
    /// `y = x·σ(x)`.
    Swish { len: usize },
    /// `y = x + f(x)`; the inner stack must preserve the size.
    Residual(Vec<Layer>),
}

#[derive(Debug, Clone)]
pub enum Cache<R> {
    Input(Vec<R>),
    Output(Vec<R>),
    Argmax(Vec<u32>),
    Seq(Vec<Cache<R>>),
}

fn init_normal(params: &mut Vec<f64>, count: usize, std: f64, rng: &mut impl Rng) -> usize {
    let off = params.len();
    let dist = Normal::new(0.0, std).expect("finite std");
    params.extend((0..count).map(|_| dist.sample(rng)));
    off
}

fn init_zero(params: &mut Vec<f64>, count: usize) -> usize {
    let off = params.len();
    params.resize(off + count, 0.0);
    off
}

impl Layer {
    /// Dense layer with weights `N(0, gain²/fan_in)` and zero bias.
    pub fn dense(params: &mut Vec<f64>, input: usize, output: usize, gain: f64, rng: &mut impl Rng) -> Layer {
        let w = init_normal(params, input * output, gain / (input.max(1) as f64).sqrt(), rng);
        let b = init_zero(params, output);
        Layer::Dense { input, output, w, b }
    }

    pub fn conv(params: &mut Vec<f64>, geom: ConvGeom, rng: &mut impl Rng) -> Layer {
        let fan_in = geom.patch();
        let w = init_normal(params, fan_in * geom.out_c, (2.0 / fan_in as f64).sqrt(), rng);
        let b = init_zero(params, geom.out_c);
        Layer::Conv { geom, w, b }
    }

    pub fn max_pool(h: usize, w: usize, c: usize, k: usize, stride: usize) -> Layer {
        let k = k.min(h).min(w).max(1);
        Layer::MaxPool {
            h,
            w,
            c,
            k,
            stride,
            out_h: (h - k) / stride + 1,
            out_w: (w - k) / stride + 1,
        }
    }

    /// Values per sample going in.
    pub fn in_len(&self) -> usize {
        match self {
            Layer::Dense { input, .. } => *input,
            Layer::Conv { geom, .. } => geom.in_h * geom.in_w * geom.in_c,
            Layer::MaxPool { h, w, c, .. } => h * w * c,
            Layer::Relu { len } | Layer::Tanh { len } | Layer::Swish { len } => *len,
            Layer::Residual(inner) => inner.first().map_or(0, |l| l.in_len()),
        }
    }

    /// Values per sample coming out.
    pub fn out_len(&self) -> usize {
        match self {
            Layer::Dense { output, .. } => *output,
            Layer::Conv { geom, .. } => geom.out_h * geom.out_w * geom.out_c,
            Layer::MaxPool { out_h, out_w, c, .. } => out_h * out_w * c,
            Layer::Relu { len } | Layer::Tanh { len } | Layer::Swish { len } => *len,
            Layer::Residual(inner) => inner.first().map_or(0, |l| l.in_len()),
        }
    }

    pub fn forward<R: Real>(&self, params: &[R], x: Vec<R>, n: usize) -> (Vec<R>, Cache<R>) {
        debug_assert_eq!(x.len(), n * self.in_len());
        match self {
            Layer::Dense { input, output, w, b } => {
                let mut y = vec![R::zero(); n * output];
                for row in y.chunks_exact_mut(*output) {
                    row.copy_from_slice(&params[*b..b + output]);
                }
                R::gemm(n, *input, *output, &x, false, &params[*w..w + input * output], false, &mut y, true);
                (y, Cache::Input(x))
            }
            Layer::Conv { geom, w, b } => {
                let cols = im2col(geom, &x, n);
                let rows = n * geom.out_h * geom.out_w;
                let mut y = vec![R::zero(); rows * geom.out_c];
                for row in y.chunks_exact_mut(geom.out_c) {
                    row.copy_from_slice(&params[*b..b + geom.out_c]);
                }
                let p = geom.patch();
                R::gemm(rows, p, geom.out_c, &cols, false, &params[*w..w + p * geom.out_c], false, &mut y, true);
                (y, Cache::Input(cols))
            }
            Layer::MaxPool {
                h,
                w,
                c,
                k,
                stride,
                out_h,
                out_w,
            } => {
                let mut y = Vec::with_capacity(n * out_h * out_w * c);
                let mut arg = Vec::with_capacity(y.capacity());
                for s in 0..n {
                    for oy in 0..*out_h {
                        for ox in 0..*out_w {
                            for ch in 0..*c {
                                let mut best = R::neg_infinity();
                                let mut best_i = 0;
                                for ky in 0..*k {
                                    for kx in 0..*k {
                                        let i = ((s * h + oy * stride + ky) * w + ox * stride + kx) * c + ch;
                                        if x[i] > best {
                                            best = x[i];
                                            best_i = i;
                                        }
                                    }
                                }
                                y.push(best);
                                arg.push(best_i as u32);
                            }
                        }
                    }
                }
                (y, Cache::Argmax(arg))
            }
            Layer::Relu { .. } => {
                let y: Vec<R> = x.into_iter().map(|v| v.max(R::zero())).collect();
                (y.clone(), Cache::Output(y))
            }
            Layer::Tanh { .. } => {
                let y: Vec<R> = x.into_iter().map(|v| v.tanh()).collect();
                (y.clone(), Cache::Output(y))
            }
            Layer::Swish { .. } => {
                let y = x.iter().map(|&v| v * sigmoid(v)).collect();
                (y, Cache::Input(x))
            }
            Layer::Residual(inner) => {
                let (fx, cache) = forward_seq(inner, params, x.clone(), n);
                let y = x.iter().zip(&fx).map(|(&a, &b)| a + b).collect();
                (y, Cache::Seq(cache))
            }
        }
    }

    /// Accumulates parameter gradients into `grads` and returns the input
    /// gradient when `need_dx`.
    pub fn backward<R: Real>(
        &self,
        params: &[R],
        cache: &Cache<R>,
        dy: Vec<R>,
        n: usize,
        grads: &mut [R],
        need_dx: bool,
    ) -> Option<Vec<R>> {
        match (self, cache) {
            (Layer::Dense { input, output, w, b }, Cache::Input(x)) => {
                R::gemm(*input, n, *output, x, true, &dy, false, &mut grads[*w..w + input * output], true);
                for row in dy.chunks_exact(*output) {
                    for (g, &d) in grads[*b..b + output].iter_mut().zip(row) {
                        *g = *g + d;
                    }
                }
                need_dx.then(|| {
                    let mut dx = vec![R::zero(); n * input];
                    R::gemm(n, *output, *input, &dy, false, &params[*w..w + input * output], true, &mut dx, false);
                    dx
                })
            }
            (Layer::Conv { geom, w, b }, Cache::Input(cols)) => {
                let rows = n * geom.out_h * geom.out_w;
                let p = geom.patch();
                R::gemm(p, rows, geom.out_c, cols, true, &dy, false, &mut grads[*w..w + p * geom.out_c], true);
                for row in dy.chunks_exact(geom.out_c) {
                    for (g, &d) in grads[*b..b + geom.out_c].iter_mut().zip(row) {
                        *g = *g + d;
                    }
                }
                need_dx.then(|| {
                    let mut dcols = vec![R::zero(); rows * p];
                    R::gemm(rows, geom.out_c, p, &dy, false, &params[*w..w + p * geom.out_c], true, &mut dcols, false);
                    col2im(geom, &dcols, n)
                })
            }
            (Layer::MaxPool { .. }, Cache::Argmax(arg)) => need_dx.then(|| {
                let mut dx = vec![R::zero(); n * self.in_len()];
                for (&i, &d) in arg.iter().zip(&dy) {
                    dx[i as usize] = dx[i as usize] + d;
                }
                dx
            }),
            (Layer::Relu { .. }, Cache::Output(y)) => need_dx.then(|| {
                dy.iter()
                    .zip(y)
                    .map(|(&d, &v)| if v > R::zero() { d } else { R::zero() })
                    .collect()
            }),
            (Layer::Tanh { .. }, Cache::Output(y)) => {
                need_dx.then(|| dy.iter().zip(y).map(|(&d, &v)| d * (R::one() - v * v)).collect())
            }
            (Layer::Swish { .. }, Cache::Input(x)) => need_dx.then(|| {
                dy.iter()
                    .zip(x)
                    .map(|(&d, &v)| {
                        let s = sigmoid(v);
                        d * (s + v * s * (R::one() - s))
                    })
                    .collect()
            }),
            (Layer::Residual(inner), Cache::Seq(caches)) => {
                let dfx = backward_seq(inner, params, caches, dy.clone(), n, grads, true).expect("dx requested");
                need_dx.then(|| dy.iter().zip(&dfx).map(|(&a, &b)| a + b).collect())
            }
            _ => unreachable!("cache does not match layer"),
        }
    }
}

fn sigmoid<R: Real>(v: R) -> R {
    R::one() / (R::one() + (-v).exp())
}

pub fn forward_seq<R: Real>(layers: &[Layer], params: &[R], mut x: Vec<R>, n: usize) -> (Vec<R>, Vec<Cache<R>>) {
    let mut caches = Vec::with_capacity(layers.len());
    for l in layers {
        let (y, c) = l.forward(params, x, n);
        caches.push(c);
        x = y;
    }
    (x, caches)
}

pub fn backward_seq<R: Real>(
    layers: &[Layer],
    params: &[R],
    caches: &[Cache<R>],
    mut dy: Vec<R>,
    n: usize,
    grads: &mut [R],
    need_dx: bool,
) -> Option<Vec<R>> {
    for (i, (l, c)) in layers.iter().zip(caches).enumerate().rev() {
        let want = need_dx || i > 0;
        match l.backward(params, c, dy, n, grads, want) {
            Some(dx) => dy = dx,
            None => return None,
        }
    }
    Some(dy)
}

fn im2col<R: Real>(g: &ConvGeom, x: &[R], n: usize) -> Vec<R> {
    let p = g.patch();
    let mut cols = vec![R::zero(); n * g.out_h * g.out_w * p];
    let mut row = 0;
    for s in 0..n {
        for oy in 0..g.out_h {
            for ox in 0..g.out_w {
                let dst = &mut cols[row * p..(row + 1) * p];
                for ky in 0..g.k {
                    let iy = (oy * g.stride + ky) as isize - g.pad as isize;
                    if iy < 0 || iy >= g.in_h as isize {
                        continue;
                    }
                    for kx in 0..g.k {
                        let ix = (ox * g.stride + kx) as isize - g.pad as isize;
                        if ix < 0 || ix >= g.in_w as isize {
                            continue;
                        }
                        let src = ((s * g.in_h + iy as usize) * g.in_w + ix as usize) * g.in_c;
                        let d = (ky * g.k + kx) * g.in_c;
                        dst[d..d + g.in_c].copy_from_slice(&x[src..src + g.in_c]);
                    }
                }
                row += 1;
            }
        }
    }
    cols
}

fn col2im<R: Real>(g: &ConvGeom, cols: &[R], n: usize) -> Vec<R> {
    let p = g.patch();
    let mut dx = vec![R::zero(); n * g.in_h * g.in_w * g.in_c];
    let mut row = 0;
    for s in 0..n {
        for oy in 0..g.out_h {
            for ox in 0..g.out_w {
                let src = &cols[row * p..(row + 1) * p];
                for ky in 0..g.k {
                    let iy = (oy * g.stride + ky) as isize - g.pad as isize;
                    if iy < 0 || iy >= g.in_h as isize {
                        continue;
                    }
                    for kx in 0..g.k {
                        let ix = (ox * g.stride + kx) as isize - g.pad as isize;
                        if ix < 0 || ix >= g.in_w as isize {
                            continue;
                        }
                        let dst = ((s * g.in_h + iy as usize) * g.in_w + ix as usize) * g.in_c;
                        let d = (ky * g.k + kx) * g.in_c;
                        for c in 0..g.in_c {
                            dx[dst + c] = dx[dst + c] + src[d + c];
                        }
                    }
                }
                row += 1;
            }
        }
    }
    dx
}
