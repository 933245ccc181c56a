//! Minimal convolutional network kernels: 3x3/1x1 convolutions via im2col
//! GEMM, max pooling, bilinear upsampling, residual blocks, and Adam.
//!
//! Everything is written against a scalar trait so the same graph runs in
//! f32 for training and in f64 for finite-difference gradient verification.
//! All loops and reductions run in a fixed order; with one thread the output
//! is bit-reproducible.

use ndarray::linalg::general_mat_mul;
use ndarray::{Array1, Array2, Array4, ArrayView2, NdFloat, ShapeBuilder};
use rand::Rng;
use rand_chacha::ChaCha12Rng;

pub trait Scalar: NdFloat + std::fmt::Debug {
    fn from_f64(v: f64) -> Self;
    fn to_f64(self) -> f64;
}

impl Scalar for f32 {
    fn from_f64(v: f64) -> Self {
        v as f32
    }
    fn to_f64(self) -> f64 {
        self as f64
    }
}

impl Scalar for f64 {
    fn from_f64(v: f64) -> Self {
        v
    }
    fn to_f64(self) -> f64 {
        self
    }
}

/// Adam hyperparameters shared by every head.
pub const ADAM_BETA1: f64 = 0.9;
pub const ADAM_BETA2: f64 = 0.999;
pub const ADAM_EPS: f64 = 1e-8;

/// 2D convolution with same-padding, kernel size 1 or 3, plus its gradient
/// and Adam moment buffers.
pub struct Conv2d<F: Scalar> {
    pub w: Array4<F>, // [cout, cin, k, k]
    pub b: Array1<F>,
    pub gw: Array4<F>,
    pub gb: Array1<F>,
    mw: Array4<F>,
    vw: Array4<F>,
    mb: Array1<F>,
    vb: Array1<F>,
    steps: u64,
    pub k: usize,
}

/// Cached activations a convolution needs for its backward pass.
pub enum ConvCache<F: Scalar> {
    /// k=3: per-sample im2col matrices [cin*9, H*W].
    Cols(Vec<Array2<F>>, (usize, usize)),
    /// k=1: the input itself.
    Input(Array4<F>),
}

fn he_normal<F: Scalar>(rng: &mut ChaCha12Rng, fan_in: usize) -> F {
    // Box-Muller on the rng's uniform draws keeps the init independent of
    // rand_distr internals.
    let std = (2.0 / fan_in as f64).sqrt();
    let u1: f64 = rng.gen_range(f64::EPSILON..1.0);
    let u2: f64 = rng.gen_range(0.0..1.0);
    let n = (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos();
    F::from_f64(n * std)
}

impl<F: Scalar> Conv2d<F> {
    pub fn new(cin: usize, cout: usize, k: usize, rng: &mut ChaCha12Rng) -> Self {
        assert!(k == 1 || k == 3, "kernel size must be 1 or 3");
        let fan_in = cin * k * k;
        let w = Array4::from_shape_fn((cout, cin, k, k), |_| he_normal(rng, fan_in));
        Conv2d {
            w,
            b: Array1::zeros(cout),
            gw: Array4::zeros((cout, cin, k, k)),
            gb: Array1::zeros(cout),
            mw: Array4::zeros((cout, cin, k, k)),
            vw: Array4::zeros((cout, cin, k, k)),
            mb: Array1::zeros(cout),
            vb: Array1::zeros(cout),
            steps: 0,
            k,
        }
    }

    pub fn cout(&self) -> usize {
        self.w.dim().0
    }

    pub fn cin(&self) -> usize {
        self.w.dim().1
    }

    fn w_mat(&self) -> ArrayView2<'_, F> {
        let (cout, cin, k, _) = self.w.dim();
        self.w.view().into_shape_with_order((cout, cin * k * k)).unwrap()
    }

    pub fn forward(&self, x: &Array4<F>) -> (Array4<F>, ConvCache<F>) {
        let (bsz, cin, h, w) = x.dim();
        assert_eq!(cin, self.cin(), "conv input channels");
        let cout = self.cout();
        let mut y = Array4::zeros((bsz, cout, h, w));
        if self.k == 1 {
            for bi in 0..bsz {
                let xm = x
                    .index_axis(ndarray::Axis(0), bi)
                    .into_shape_with_order((cin, h * w))
                    .unwrap();
                let mut ym = y
                    .index_axis_mut(ndarray::Axis(0), bi)
                    .into_shape_with_order((cout, h * w))
                    .unwrap();
                general_mat_mul(F::one(), &self.w_mat(), &xm, F::zero(), &mut ym);
            }
            add_bias(&mut y, &self.b);
            (y, ConvCache::Input(x.clone()))
        } else {
            let mut caches = Vec::with_capacity(bsz);
            for bi in 0..bsz {
                let cols = im2col_3x3(&x.index_axis(ndarray::Axis(0), bi), h, w);
                let mut ym = y
                    .index_axis_mut(ndarray::Axis(0), bi)
                    .into_shape_with_order((cout, h * w))
                    .unwrap();
                general_mat_mul(F::one(), &self.w_mat(), &cols.view(), F::zero(), &mut ym);
                caches.push(cols);
            }
            add_bias(&mut y, &self.b);
            (y, ConvCache::Cols(caches, (h, w)))
        }
    }

    /// Accumulates weight/bias gradients and returns the input gradient.
    pub fn backward(&mut self, cache: &ConvCache<F>, dy: &Array4<F>) -> Array4<F> {
        let (bsz, cout, h, w) = dy.dim();
        assert_eq!(cout, self.cout());
        let cin = self.cin();
        let kk = self.k * self.k;
        let mut dx = Array4::zeros((bsz, cin, h, w));
        {
            let mut gwm = self
                .gw
                .view_mut()
                .into_shape_with_order((cout, cin * kk))
                .unwrap();
            match cache {
                ConvCache::Input(x) => {
                    for bi in 0..bsz {
                        let dym = dy
                            .index_axis(ndarray::Axis(0), bi)
                            .into_shape_with_order((cout, h * w))
                            .unwrap();
                        let xm = x
                            .index_axis(ndarray::Axis(0), bi)
                            .into_shape_with_order((cin, h * w))
                            .unwrap();
                        general_mat_mul(F::one(), &dym, &xm.t(), F::one(), &mut gwm);
                        let mut dxm = dx
                            .index_axis_mut(ndarray::Axis(0), bi)
                            .into_shape_with_order((cin, h * w))
                            .unwrap();
                        general_mat_mul(F::one(), &self.w_mat().t(), &dym, F::zero(), &mut dxm);
                    }
                }
                ConvCache::Cols(cols, _) => {
                    for bi in 0..bsz {
                        let dym = dy
                            .index_axis(ndarray::Axis(0), bi)
                            .into_shape_with_order((cout, h * w))
                            .unwrap();
                        general_mat_mul(F::one(), &dym, &cols[bi].t(), F::one(), &mut gwm);
                        let mut dcols = Array2::zeros((cin * kk, h * w));
                        general_mat_mul(F::one(), &self.w_mat().t(), &dym, F::zero(), &mut dcols);
                        col2im_3x3(
                            &dcols,
                            &mut dx.index_axis_mut(ndarray::Axis(0), bi),
                            h,
                            w,
                        );
                    }
                }
            }
        }
        for bi in 0..bsz {
            for co in 0..cout {
                let mut s = F::zero();
                for v in dy.index_axis(ndarray::Axis(0), bi).index_axis(ndarray::Axis(0), co) {
                    s = s + *v;
                }
                self.gb[co] = self.gb[co] + s;
            }
        }
        dx
    }

    /// Dense evaluation of a 1x1 convolution on gathered pixel features.
    pub fn forward_px(&self, x: &Array2<F>) -> Array2<F> {
        assert_eq!(self.k, 1);
        let (n, cin) = x.dim();
        assert_eq!(cin, self.cin());
        let mut y = Array2::zeros((n, self.cout()));
        general_mat_mul(F::one(), &x.view(), &self.w_mat().t(), F::zero(), &mut y.view_mut());
        for mut row in y.rows_mut() {
            row += &self.b;
        }
        y
    }

    pub fn backward_px(&mut self, x: &Array2<F>, dy: &Array2<F>) -> Array2<F> {
        assert_eq!(self.k, 1);
        let (n, cin) = x.dim();
        let cout = self.cout();
        assert_eq!(dy.dim(), (n, cout));
        {
            let mut gwm = self
                .gw
                .view_mut()
                .into_shape_with_order((cout, cin))
                .unwrap();
            general_mat_mul(F::one(), &dy.t(), &x.view(), F::one(), &mut gwm);
        }
        for row in dy.rows() {
            self.gb += &row;
        }
        let mut dx = Array2::zeros((n, cin));
        general_mat_mul(F::one(), &dy.view(), &self.w_mat(), F::zero(), &mut dx.view_mut());
        dx
    }

    pub fn zero_grads(&mut self) {
        self.gw.fill(F::zero());
        self.gb.fill(F::zero());
    }

    pub fn adam_step(&mut self, lr: f64) {
        self.steps += 1;
        let t = self.steps;
        adam_update(&mut self.w, &self.gw, &mut self.mw, &mut self.vw, lr, t);
        adam_update_1d(&mut self.b, &self.gb, &mut self.mb, &mut self.vb, lr, t);
    }

    /// Visit (suffix, data) pairs for checkpointing.
    pub fn visit<'a>(&'a self, prefix: &str, out: &mut Vec<(String, Vec<f64>, Vec<usize>)>) {
        out.push((
            format!("{prefix}/w"),
            self.w.iter().map(|v| v.to_f64()).collect(),
            self.w.shape().to_vec(),
        ));
        out.push((
            format!("{prefix}/b"),
            self.b.iter().map(|v| v.to_f64()).collect(),
            self.b.shape().to_vec(),
        ));
    }

    pub fn load(&mut self, name: &str, data: &[f64], shape: &[usize]) -> bool {
        if name == "w" {
            if shape != self.w.shape() {
                return false;
            }
            for (dst, src) in self.w.iter_mut().zip(data) {
                *dst = F::from_f64(*src);
            }
            true
        } else if name == "b" {
            if shape != self.b.shape() {
                return false;
            }
            for (dst, src) in self.b.iter_mut().zip(data) {
                *dst = F::from_f64(*src);
            }
            true
        } else {
            false
        }
    }
}

fn add_bias<F: Scalar>(y: &mut Array4<F>, b: &Array1<F>) {
    let (bsz, cout, h, w) = y.dim();
    for bi in 0..bsz {
        for co in 0..cout {
            let bias = b[co];
            let mut plane = y.slice_mut(ndarray::s![bi, co, .., ..]);
            plane.mapv_inplace(|v| v + bias);
            let _ = (h, w);
        }
    }
}

fn adam_update<F: Scalar, D: ndarray::Dimension>(
    w: &mut ndarray::Array<F, D>,
    g: &ndarray::Array<F, D>,
    m: &mut ndarray::Array<F, D>,
    v: &mut ndarray::Array<F, D>,
    lr: f64,
    t: u64,
) {
    let b1 = ADAM_BETA1;
    let b2 = ADAM_BETA2;
    let bc1 = 1.0 - b1.powi(t as i32);
    let bc2 = 1.0 - b2.powi(t as i32);
    for ((wi, gi), (mi, vi)) in w
        .iter_mut()
        .zip(g.iter())
        .zip(m.iter_mut().zip(v.iter_mut()))
    {
        let gf = gi.to_f64();
        let mf = b1 * mi.to_f64() + (1.0 - b1) * gf;
        let vf = b2 * vi.to_f64() + (1.0 - b2) * gf * gf;
        *mi = F::from_f64(mf);
        *vi = F::from_f64(vf);
        let mhat = mf / bc1;
        let vhat = vf / bc2;
        *wi = F::from_f64(wi.to_f64() - lr * mhat / (vhat.sqrt() + ADAM_EPS));
    }
}

fn adam_update_1d<F: Scalar>(
    w: &mut Array1<F>,
    g: &Array1<F>,
    m: &mut Array1<F>,
    v: &mut Array1<F>,
    lr: f64,
    t: u64,
) {
    adam_update(w, g, m, v, lr, t);
}

/// im2col for a 3x3 same-padded convolution: [cin*9, H*W].
fn im2col_3x3<F: Scalar>(x: &ndarray::ArrayView3<F>, h: usize, w: usize) -> Array2<F> {
    let cin = x.dim().0;
    let mut cols = Array2::zeros((cin * 9, h * w).f());
    let mut cols = {
        // Row-major is what the GEMM wants; build it directly.
        drop(cols);
        Array2::<F>::zeros((cin * 9, h * w))
    };
    for ci in 0..cin {
        let plane = x.index_axis(ndarray::Axis(0), ci);
        for kr in 0..3usize {
            for kc in 0..3usize {
                let row_idx = ci * 9 + kr * 3 + kc;
                let mut row = cols.row_mut(row_idx);
                for r in 0..h {
                    let sr = r as isize + kr as isize - 1;
                    if sr < 0 || sr >= h as isize {
                        continue; // stays zero
                    }
                    let sr = sr as usize;
                    // Columns c where source col c + kc - 1 is in range.
                    let (c_lo, c_hi) = match kc {
                        0 => (1, w),
                        1 => (0, w),
                        _ => (0, w - 1),
                    };
                    for c in c_lo..c_hi {
                        let sc = (c + kc) - 1;
                        row[r * w + c] = plane[[sr, sc]];
                    }
                }
            }
        }
    }
    cols
}

/// Scatter-add inverse of [`im2col_3x3`].
fn col2im_3x3<F: Scalar>(
    dcols: &Array2<F>,
    dx: &mut ndarray::ArrayViewMut3<F>,
    h: usize,
    w: usize,
) {
    let cin = dx.dim().0;
    for ci in 0..cin {
        let mut plane = dx.index_axis_mut(ndarray::Axis(0), ci);
        for kr in 0..3usize {
            for kc in 0..3usize {
                let row = dcols.row(ci * 9 + kr * 3 + kc);
                for r in 0..h {
                    let sr = r as isize + kr as isize - 1;
                    if sr < 0 || sr >= h as isize {
                        continue;
                    }
                    let sr = sr as usize;
                    let (c_lo, c_hi) = match kc {
                        0 => (1, w),
                        1 => (0, w),
                        _ => (0, w - 1),
                    };
                    for c in c_lo..c_hi {
                        let sc = (c + kc) - 1;
                        plane[[sr, sc]] = plane[[sr, sc]] + row[r * w + c];
                    }
                }
            }
        }
    }
}

/// 3x3 max pooling with stride 2 and same-padding; output is ceil(n/2).
pub struct PoolCache {
    pub argmax: Array4<u32>,
    pub in_h: usize,
    pub in_w: usize,
}

pub fn maxpool_3x3_s2<F: Scalar>(x: &Array4<F>) -> (Array4<F>, PoolCache) {
    let (bsz, c, h, w) = x.dim();
    let oh = h.div_ceil(2);
    let ow = w.div_ceil(2);
    let pad_r = if h % 2 == 1 { 1isize } else { 0 };
    let pad_c = if w % 2 == 1 { 1isize } else { 0 };
    let mut y = Array4::zeros((bsz, c, oh, ow));
    let mut argmax = Array4::zeros((bsz, c, oh, ow));
    for bi in 0..bsz {
        for ci in 0..c {
            let plane = x.slice(ndarray::s![bi, ci, .., ..]);
            for orow in 0..oh {
                for ocol in 0..ow {
                    let r0 = 2 * orow as isize - pad_r;
                    let c0 = 2 * ocol as isize - pad_c;
                    let mut best = F::neg_infinity();
                    let mut best_idx = 0u32;
                    for dr in 0..3isize {
                        let rr = r0 + dr;
                        if rr < 0 || rr >= h as isize {
                            continue;
                        }
                        for dc in 0..3isize {
                            let cc = c0 + dc;
                            if cc < 0 || cc >= w as isize {
                                continue;
                            }
                            let v = plane[[rr as usize, cc as usize]];
                            if v > best {
                                best = v;
                                best_idx = (rr as u32) * w as u32 + cc as u32;
                            }
                        }
                    }
                    y[[bi, ci, orow, ocol]] = best;
                    argmax[[bi, ci, orow, ocol]] = best_idx;
                }
            }
        }
    }
    (
        y,
        PoolCache {
            argmax,
            in_h: h,
            in_w: w,
        },
    )
}

pub fn maxpool_backward<F: Scalar>(cache: &PoolCache, dy: &Array4<F>) -> Array4<F> {
    let (bsz, c, oh, ow) = dy.dim();
    let mut dx = Array4::zeros((bsz, c, cache.in_h, cache.in_w));
    for bi in 0..bsz {
        for ci in 0..c {
            for orow in 0..oh {
                for ocol in 0..ow {
                    let idx = cache.argmax[[bi, ci, orow, ocol]] as usize;
                    let (r, cc) = (idx / cache.in_w, idx % cache.in_w);
                    dx[[bi, ci, r, cc]] = dx[[bi, ci, r, cc]] + dy[[bi, ci, orow, ocol]];
                }
            }
        }
    }
    dx
}

fn bilinear_axis(out_n: usize, in_n: usize) -> Vec<(usize, usize, f64, f64)> {
    (0..out_n)
        .map(|o| {
            let s = (o as f64 + 0.5) / 2.0 - 0.5;
            let i0 = s.floor();
            let frac = s - i0;
            let a = (i0 as isize).clamp(0, in_n as isize - 1) as usize;
            let b = (i0 as isize + 1).clamp(0, in_n as isize - 1) as usize;
            (a, b, 1.0 - frac, frac)
        })
        .collect()
}

/// x2 bilinear upsample cropped to (out_h, out_w), which must be within
/// [2*in - 1, 2*in] per axis so odd pre-pool sizes restore exactly.
pub fn upsample_bilinear_x2<F: Scalar>(x: &Array4<F>, out_h: usize, out_w: usize) -> Array4<F> {
    let (bsz, c, h, w) = x.dim();
    assert!(out_h <= 2 * h && out_w <= 2 * w);
    let rows = bilinear_axis(out_h, h);
    let cols = bilinear_axis(out_w, w);
    let mut y = Array4::zeros((bsz, c, out_h, out_w));
    for bi in 0..bsz {
        for ci in 0..c {
            let plane = x.slice(ndarray::s![bi, ci, .., ..]);
            for (orow, &(r0, r1, wr0, wr1)) in rows.iter().enumerate() {
                for (ocol, &(c0, c1, wc0, wc1)) in cols.iter().enumerate() {
                    let v = plane[[r0, c0]].to_f64() * (wr0 * wc0)
                        + plane[[r0, c1]].to_f64() * (wr0 * wc1)
                        + plane[[r1, c0]].to_f64() * (wr1 * wc0)
                        + plane[[r1, c1]].to_f64() * (wr1 * wc1);
                    y[[bi, ci, orow, ocol]] = F::from_f64(v);
                }
            }
        }
    }
    y
}

pub fn upsample_backward<F: Scalar>(dy: &Array4<F>, in_h: usize, in_w: usize) -> Array4<F> {
    let (bsz, c, oh, ow) = dy.dim();
    let rows = bilinear_axis(oh, in_h);
    let cols = bilinear_axis(ow, in_w);
    let mut dx = Array4::zeros((bsz, c, in_h, in_w));
    for bi in 0..bsz {
        for ci in 0..c {
            for (orow, &(r0, r1, wr0, wr1)) in rows.iter().enumerate() {
                for (ocol, &(c0, c1, wc0, wc1)) in cols.iter().enumerate() {
                    let g = dy[[bi, ci, orow, ocol]].to_f64();
                    dx[[bi, ci, r0, c0]] = dx[[bi, ci, r0, c0]] + F::from_f64(g * wr0 * wc0);
                    dx[[bi, ci, r0, c1]] = dx[[bi, ci, r0, c1]] + F::from_f64(g * wr0 * wc1);
                    dx[[bi, ci, r1, c0]] = dx[[bi, ci, r1, c0]] + F::from_f64(g * wr1 * wc0);
                    dx[[bi, ci, r1, c1]] = dx[[bi, ci, r1, c1]] + F::from_f64(g * wr1 * wc1);
                }
            }
        }
    }
    dx
}

pub fn relu_inplace<F: Scalar>(x: &mut Array4<F>) {
    x.mapv_inplace(|v| if v > F::zero() { v } else { F::zero() });
}

/// dx = dy where the forward output was positive.
pub fn relu_backward_from_output<F: Scalar>(dy: &mut Array4<F>, y: &Array4<F>) {
    ndarray::Zip::from(dy).and(y).for_each(|d, o| {
        if *o <= F::zero() {
            *d = F::zero();
        }
    });
}

/// Residual block: two 3x3 convolutions with a 1x1 skip projection when the
/// channel count changes.
pub struct ResBlock<F: Scalar> {
    pub conv1: Conv2d<F>,
    pub conv2: Conv2d<F>,
    pub skip: Option<Conv2d<F>>,
}

pub struct ResCache<F: Scalar> {
    c1: ConvCache<F>,
    y1: Array4<F>,
    c2: ConvCache<F>,
    cskip: Option<ConvCache<F>>,
    out: Array4<F>,
}

impl<F: Scalar> ResBlock<F> {
    pub fn new(cin: usize, cout: usize, rng: &mut ChaCha12Rng) -> Self {
        ResBlock {
            conv1: Conv2d::new(cin, cout, 3, rng),
            conv2: Conv2d::new(cout, cout, 3, rng),
            skip: (cin != cout).then(|| Conv2d::new(cin, cout, 1, rng)),
        }
    }

    pub fn forward(&self, x: &Array4<F>) -> (Array4<F>, ResCache<F>) {
        let (mut y1, c1) = self.conv1.forward(x);
        relu_inplace(&mut y1);
        let (y2, c2) = self.conv2.forward(&y1);
        let (skip_out, cskip) = match &self.skip {
            Some(conv) => {
                let (s, c) = conv.forward(x);
                (s, Some(c))
            }
            None => (x.clone(), None),
        };
        let mut out = y2;
        out += &skip_out;
        relu_inplace(&mut out);
        (
            out.clone(),
            ResCache {
                c1,
                y1,
                c2,
                cskip,
                out,
            },
        )
    }

    pub fn backward(&mut self, cache: &ResCache<F>, dy: &Array4<F>) -> Array4<F> {
        let mut dz = dy.clone();
        relu_backward_from_output(&mut dz, &cache.out);
        let dx_skip = match (&mut self.skip, &cache.cskip) {
            (Some(conv), Some(c)) => conv.backward(c, &dz),
            _ => dz.clone(),
        };
        let mut dy1 = self.conv2.backward(&cache.c2, &dz);
        relu_backward_from_output(&mut dy1, &cache.y1);
        let mut dx = self.conv1.backward(&cache.c1, &dy1);
        dx += &dx_skip;
        dx
    }

    pub fn zero_grads(&mut self) {
        self.conv1.zero_grads();
        self.conv2.zero_grads();
        if let Some(s) = &mut self.skip {
            s.zero_grads();
        }
    }

    pub fn adam_step(&mut self, lr: f64) {
        self.conv1.adam_step(lr);
        self.conv2.adam_step(lr);
        if let Some(s) = &mut self.skip {
            s.adam_step(lr);
        }
    }

    pub fn visit(&self, prefix: &str, out: &mut Vec<(String, Vec<f64>, Vec<usize>)>) {
        self.conv1.visit(&format!("{prefix}/conv1"), out);
        self.conv2.visit(&format!("{prefix}/conv2"), out);
        if let Some(s) = &self.skip {
            s.visit(&format!("{prefix}/skip"), out);
        }
    }
}

/// Draw standard normal samples in a fixed order via Box-Muller.
pub fn fill_standard_normal<F: Scalar, D: ndarray::Dimension>(
    rng: &mut ChaCha12Rng,
    arr: &mut ndarray::Array<F, D>,
) {
    for v in arr.iter_mut() {
        let u1: f64 = rng.gen_range(f64::EPSILON..1.0);
        let u2: f64 = rng.gen_range(0.0..1.0);
        *v = F::from_f64((-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos());
    }
}

/// ln(1 + e^x) without overflow.
pub fn softplus(x: f64) -> f64 {
    if x > 30.0 {
        x
    } else if x < -30.0 {
        x.exp()
    } else {
        x.exp().ln_1p()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    fn finite_diff_check<G: Fn() -> f64>(param: *mut f64, loss: G, analytic: f64, label: &str) {
        let h = 1e-5;
        unsafe {
            let orig = *param;
            *param = orig + h;
            let lp = loss();
            *param = orig - h;
            let lm = loss();
            *param = orig;
            let fd = (lp - lm) / (2.0 * h);
            let denom = analytic.abs().max(fd.abs()).max(1e-8);
            assert!(
                (analytic - fd).abs() / denom < 1e-5,
                "{label}: analytic {analytic} vs fd {fd}"
            );
        }
    }

    #[test]
    fn conv3x3_gradients_match_finite_differences() {
        let mut rng = ChaCha12Rng::seed_from_u64(1);
        let conv = std::cell::RefCell::new(Conv2d::<f64>::new(2, 3, 3, &mut rng));
        let mut x = Array4::<f64>::zeros((2, 2, 5, 4));
        fill_standard_normal(&mut rng, &mut x);
        let loss = || {
            let (y, _) = conv.borrow().forward(&x);
            y.iter().map(|v| v * v).sum::<f64>()
        };
        let (y, cache) = conv.borrow().forward(&x);
        let dy = y.mapv(|v| 2.0 * v);
        conv.borrow_mut().zero_grads();
        let dx = conv.borrow_mut().backward(&cache, &dy);

        // Weight gradient spot checks.
        for idx in [(0, 0, 0, 0), (2, 1, 2, 1), (1, 0, 1, 2)] {
            let analytic = conv.borrow().gw[idx];
            let ptr: *mut f64 = &mut conv.borrow_mut().w[idx];
            finite_diff_check(ptr, loss, analytic, &format!("w{idx:?}"));
        }
        let analytic_b = conv.borrow().gb[1];
        let ptr: *mut f64 = &mut conv.borrow_mut().b[1];
        finite_diff_check(ptr, loss, analytic_b, "bias");

        // Input gradient check against perturbing x.
        let h = 1e-5;
        let idx = (1, 1, 2, 3);
        let orig = x[idx];
        x[idx] = orig + h;
        let lp = loss();
        x[idx] = orig - h;
        let lm = loss();
        x[idx] = orig;
        let fd = (lp - lm) / (2.0 * h);
        assert!((dx[idx] - fd).abs() / fd.abs().max(1e-8) < 1e-5);
    }

    #[test]
    fn conv1x1_px_matches_map_path() {
        let mut rng = ChaCha12Rng::seed_from_u64(2);
        let conv = Conv2d::<f64>::new(4, 6, 1, &mut rng);
        let mut x = Array4::<f64>::zeros((1, 4, 3, 3));
        fill_standard_normal(&mut rng, &mut x);
        let (y, _) = conv.forward(&x);
        // Gather pixel (2,1) and compare.
        let mut px = Array2::zeros((1, 4));
        for c in 0..4 {
            px[[0, c]] = x[[0, c, 2, 1]];
        }
        let ypx = conv.forward_px(&px);
        for co in 0..6 {
            assert!((ypx[[0, co]] - y[[0, co, 2, 1]]).abs() < 1e-12);
        }
    }

    #[test]
    fn maxpool_shapes_and_gradient_routing() {
        let mut rng = ChaCha12Rng::seed_from_u64(3);
        let mut x = Array4::<f64>::zeros((1, 1, 5, 6));
        fill_standard_normal(&mut rng, &mut x);
        let (y, cache) = maxpool_3x3_s2(&x);
        assert_eq!(y.dim(), (1, 1, 3, 3));
        let dy = Array4::from_elem((1, 1, 3, 3), 1.0);
        let dx = maxpool_backward::<f64>(&cache, &dy);
        assert_eq!(dx.dim(), x.dim());
        // Total gradient mass is conserved.
        assert!((dx.sum() - 9.0).abs() < 1e-12);
    }

    #[test]
    fn upsample_restores_odd_sizes_and_conserves_gradient() {
        let mut rng = ChaCha12Rng::seed_from_u64(4);
        let mut x = Array4::<f64>::zeros((1, 2, 10, 12));
        fill_standard_normal(&mut rng, &mut x);
        let y = upsample_bilinear_x2(&x, 19, 24);
        assert_eq!(y.dim(), (1, 2, 19, 24));
        let dy = Array4::from_elem((1, 2, 19, 24), 1.0);
        let dx = upsample_backward::<f64>(&dy, 10, 12);
        assert!((dx.sum() - dy.sum()).abs() < 1e-9);
    }

    #[test]
    fn resblock_backward_matches_fd_on_input() {
        let mut rng = ChaCha12Rng::seed_from_u64(5);
        let mut block = ResBlock::<f64>::new(3, 5, &mut rng);
        let mut x = Array4::<f64>::zeros((1, 3, 4, 4));
        fill_standard_normal(&mut rng, &mut x);
        let loss = |x: &Array4<f64>| {
            let (y, _) = block.forward(x);
            y.iter().map(|v| v * v).sum::<f64>()
        };
        let (y, cache) = block.forward(&x);
        let dy = y.mapv(|v| 2.0 * v);
        block.zero_grads();
        let dx = block.backward(&cache, &dy);
        let h = 1e-6;
        let idx = (0, 1, 2, 2);
        let orig = x[idx];
        x[idx] = orig + h;
        let lp = loss(&x);
        x[idx] = orig - h;
        let lm = loss(&x);
        x[idx] = orig;
        let fd = (lp - lm) / (2.0 * h);
        assert!(
            (dx[idx] - fd).abs() / fd.abs().max(1e-6) < 1e-4,
            "dx {} vs fd {}",
            dx[idx],
            fd
        );
    }

    #[test]
    fn adam_moves_against_gradient() {
        let mut rng = ChaCha12Rng::seed_from_u64(6);
        let mut conv = Conv2d::<f64>::new(1, 1, 1, &mut rng);
        let w0 = conv.w[[0, 0, 0, 0]];
        conv.gw[[0, 0, 0, 0]] = 1.0;
        conv.adam_step(0.01);
        assert!(conv.w[[0, 0, 0, 0]] < w0);
    }
}
