//! im2col-based 2-D cross-correlation with zero padding.

use super::Real;
use crate::error::{Error, Result};

/// Output extent of a convolution along one axis.
pub fn conv2d_output_size(input: usize, kernel: usize, stride: usize, padding: usize) -> Option<usize> {
    let padded = input + 2 * padding;
    if stride == 0 || kernel == 0 || kernel > padded {
        return None;
    }
    Some((padded - kernel) / stride + 1)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ConvGeometry {
    pub batch: usize,
    pub in_channels: usize,
    pub height: usize,
    pub width: usize,
    pub out_channels: usize,
    pub kernel: usize,
    pub stride: usize,
    pub padding: usize,
    pub out_height: usize,
    pub out_width: usize,
}

impl ConvGeometry {
    pub fn new(input: &[usize], weight: &[usize], bias: &[usize], stride: usize, padding: usize) -> Result<Self> {
        let [batch, in_channels, height, width] = *input else {
            return Err(Error::shape("conv2d", format!("input must be [N,C,H,W], got {input:?}")));
        };
        let [out_channels, w_in, kh, kw] = *weight else {
            return Err(Error::shape("conv2d", format!("weight must be [Cout,Cin,k,k], got {weight:?}")));
        };
        if w_in != in_channels {
            return Err(Error::shape(
                "conv2d",
                format!("input has {in_channels} channels but weight expects {w_in} (input {input:?}, weight {weight:?})"),
            ));
        }
        if kh != kw {
            return Err(Error::shape("conv2d", format!("non-square kernel {kh}x{kw}")));
        }
        if bias != [out_channels] {
            return Err(Error::shape("conv2d", format!("bias must be [{out_channels}], got {bias:?}")));
        }
        if stride == 0 {
            return Err(Error::InvalidArgument("conv2d stride must be >= 1".into()));
        }
        let out_height = conv2d_output_size(height, kh, stride, padding);
        let out_width = conv2d_output_size(width, kw, stride, padding);
        let (Some(out_height), Some(out_width)) = (out_height, out_width) else {
            return Err(Error::shape(
                "conv2d",
                format!("kernel {kh} exceeds padded input {height}x{width} (padding {padding})"),
            ));
        };
        Ok(ConvGeometry {
            batch,
            in_channels,
            height,
            width,
            out_channels,
            kernel: kh,
            stride,
            padding,
            out_height,
            out_width,
        })
    }

    pub fn output_shape(&self) -> [usize; 4] {
        [self.batch, self.out_channels, self.out_height, self.out_width]
    }

    fn patch_len(&self) -> usize {
        self.in_channels * self.kernel * self.kernel
    }

    fn positions(&self) -> usize {
        self.out_height * self.out_width
    }

    fn image_len(&self) -> usize {
        self.in_channels * self.height * self.width
    }

    /// Input row/column feeding output index `o` at kernel offset `k`.
    #[inline]
    fn source(&self, o: usize, k: usize, extent: usize) -> Option<usize> {
        (o * self.stride + k).checked_sub(self.padding).filter(|&i| i < extent)
    }

    /// Range of output columns whose source column is in bounds for kernel column `kj`.
    fn valid_cols(&self, kj: usize) -> (usize, usize) {
        let lo = (0..self.out_width).find(|&ox| self.source(ox, kj, self.width).is_some());
        match lo {
            None => (0, 0),
            Some(lo) => {
                let hi = (lo..self.out_width)
                    .take_while(|&ox| self.source(ox, kj, self.width).is_some())
                    .last()
                    .map_or(lo, |h| h + 1);
                (lo, hi)
            }
        }
    }
}

/// Unfolds one image `[Cin,H,W]` into `Cin*k*k` rows of `OH*OW` values,
/// written at column offset `off` of a column matrix with row stride `ld`.
fn im2col<T: Real>(g: &ConvGeometry, image: &[T], col: &mut [T], ld: usize, off: usize) {
    let (k, ow, p) = (g.kernel, g.out_width, g.positions());
    for c in 0..g.in_channels {
        let plane = &image[c * g.height * g.width..(c + 1) * g.height * g.width];
        for ki in 0..k {
            for kj in 0..k {
                let row = &mut col[((c * k + ki) * k + kj) * ld + off..][..p];
                let (lo, hi) = g.valid_cols(kj);
                for oy in 0..g.out_height {
                    let dst = &mut row[oy * ow..(oy + 1) * ow];
                    let Some(iy) = g.source(oy, ki, g.height) else {
                        dst.fill(T::zero());
                        continue;
                    };
                    let src = &plane[iy * g.width..(iy + 1) * g.width];
                    dst[..lo].fill(T::zero());
                    dst[hi..].fill(T::zero());
                    if lo < hi {
                        let first = lo * g.stride + kj - g.padding;
                        if g.stride == 1 {
                            dst[lo..hi].copy_from_slice(&src[first..first + (hi - lo)]);
                        } else {
                            for (d, s) in dst[lo..hi].iter_mut().zip(src[first..].iter().step_by(g.stride)) {
                                *d = *s;
                            }
                        }
                    }
                }
            }
        }
    }
}

/// Adjoint of [`im2col`]: scatters columns back onto an image, accumulating.
fn col2im<T: Real>(g: &ConvGeometry, col: &[T], ld: usize, off: usize, image: &mut [T]) {
    let (k, ow, p) = (g.kernel, g.out_width, g.positions());
    for c in 0..g.in_channels {
        let plane = &mut image[c * g.height * g.width..(c + 1) * g.height * g.width];
        for ki in 0..k {
            for kj in 0..k {
                let row = &col[((c * k + ki) * k + kj) * ld + off..][..p];
                let (lo, hi) = g.valid_cols(kj);
                if lo >= hi {
                    continue;
                }
                let first = lo * g.stride + kj - g.padding;
                for oy in 0..g.out_height {
                    let Some(iy) = g.source(oy, ki, g.height) else { continue };
                    let src = &row[oy * ow + lo..oy * ow + hi];
                    let dst = &mut plane[iy * g.width + first..(iy + 1) * g.width];
                    if g.stride == 1 {
                        dst.iter_mut().zip(src).for_each(|(d, &s)| *d += s);
                    } else {
                        dst.iter_mut().step_by(g.stride).zip(src).for_each(|(d, &s)| *d += s);
                    }
                }
            }
        }
    }
}

/// Column-matrix budget (elements) per chunk of images.
const COL_BUDGET: usize = 1 << 18;

impl ConvGeometry {
    /// Images unfolded together so one GEMM covers the whole chunk.
    fn chunk(&self) -> usize {
        (COL_BUDGET / (self.patch_len() * self.positions()).max(1)).clamp(1, self.batch.max(1))
    }
}

/// Patches at most this long skip im2col: the GEMM would be all packing.
const DIRECT_MAX_PATCH: usize = 9;

/// Calls `f(tap, oy, iy, lo, hi, first)` for every kernel tap and output row
/// whose source row is in bounds: output columns `lo..hi` read input row `iy`
/// starting at column `first`.
fn for_each_tap(g: &ConvGeometry, mut f: impl FnMut(usize, usize, usize, usize, usize, usize)) {
    for ki in 0..g.kernel {
        for kj in 0..g.kernel {
            let (lo, hi) = g.valid_cols(kj);
            if lo >= hi {
                continue;
            }
            let first = lo * g.stride + kj - g.padding;
            for oy in 0..g.out_height {
                if let Some(iy) = g.source(oy, ki, g.height) {
                    f(ki * g.kernel + kj, oy, iy, lo, hi, first);
                }
            }
        }
    }
}

fn direct_forward<T: Real>(g: &ConvGeometry, input: &[T], weight: &[T], bias: &[T]) -> Vec<T> {
    let (p, cout, il, ow, kk2) = (g.positions(), g.out_channels, g.image_len(), g.out_width, g.kernel * g.kernel);
    let mut out = vec![T::zero(); g.batch * cout * p];
    for n in 0..g.batch {
        let image = &input[n * il..(n + 1) * il];
        for co in 0..cout {
            let plane = &mut out[(n * cout + co) * p..(n * cout + co + 1) * p];
            plane.fill(bias[co]);
            for ci in 0..g.in_channels {
                let src = &image[ci * g.height * g.width..(ci + 1) * g.height * g.width];
                let w = &weight[(co * g.in_channels + ci) * kk2..][..kk2];
                for_each_tap(g, |tap, oy, iy, lo, hi, first| {
                    let wt = w[tap];
                    let dst = &mut plane[oy * ow + lo..oy * ow + hi];
                    let row = &src[iy * g.width + first..(iy + 1) * g.width];
                    if g.stride == 1 {
                        dst.iter_mut().zip(row).for_each(|(d, &x)| *d += wt * x);
                    } else {
                        dst.iter_mut().zip(row.iter().step_by(g.stride)).for_each(|(d, &x)| *d += wt * x);
                    }
                });
            }
        }
    }
    out
}

fn direct_backward<T: Real>(g: &ConvGeometry, input: &[T], weight: &[T], grad_out: &[T], grads: &mut ConvGrads<T>) {
    let (p, cout, il, ow, kk2) = (g.positions(), g.out_channels, g.image_len(), g.out_width, g.kernel * g.kernel);
    let plane_len = g.height * g.width;
    for n in 0..g.batch {
        for co in 0..cout {
            let dy = &grad_out[(n * cout + co) * p..(n * cout + co + 1) * p];
            for ci in 0..g.in_channels {
                let wi = (co * g.in_channels + ci) * kk2;
                let off = n * il + ci * plane_len;
                if let Some(dw) = grads.weight.as_mut() {
                    let src = &input[off..off + plane_len];
                    for_each_tap(g, |tap, oy, iy, lo, hi, first| {
                        let d = &dy[oy * ow + lo..oy * ow + hi];
                        let row = &src[iy * g.width + first..(iy + 1) * g.width];
                        let s: T = if g.stride == 1 {
                            d.iter().zip(row).map(|(&a, &b)| a * b).sum()
                        } else {
                            d.iter().zip(row.iter().step_by(g.stride)).map(|(&a, &b)| a * b).sum()
                        };
                        dw[wi + tap] += s;
                    });
                }
                if let Some(dx) = grads.input.as_mut() {
                    let dst = &mut dx[off..off + plane_len];
                    for_each_tap(g, |tap, oy, iy, lo, hi, first| {
                        let wt = weight[wi + tap];
                        let d = &dy[oy * ow + lo..oy * ow + hi];
                        let row = &mut dst[iy * g.width + first..(iy + 1) * g.width];
                        if g.stride == 1 {
                            row.iter_mut().zip(d).for_each(|(x, &v)| *x += wt * v);
                        } else {
                            row.iter_mut().step_by(g.stride).zip(d).for_each(|(x, &v)| *x += wt * v);
                        }
                    });
                }
            }
        }
    }
}

pub(crate) fn conv2d_forward<T: Real>(g: &ConvGeometry, input: &[T], weight: &[T], bias: &[T]) -> Vec<T> {
    let (kk, p, cout, il) = (g.patch_len(), g.positions(), g.out_channels, g.image_len());
    if kk <= DIRECT_MAX_PATCH {
        return direct_forward(g, input, weight, bias);
    }
    let mut out = vec![T::zero(); g.batch * cout * p];
    let nb = g.chunk();
    let mut col = vec![T::zero(); kk * nb * p];
    let mut tmp = vec![T::zero(); cout * nb * p];
    for start in (0..g.batch).step_by(nb) {
        let m = nb.min(g.batch - start);
        let ld = m * p;
        for j in 0..m {
            let n = start + j;
            im2col(g, &input[n * il..(n + 1) * il], &mut col, ld, j * p);
        }
        // tmp[cout, m*p] = W[cout, kk] * col[kk, m*p]
        T::gemm(cout, kk, ld, T::one(), weight, (kk, 1), &col[..kk * ld], (ld, 1), T::zero(), &mut tmp[..cout * ld], (ld, 1));
        for j in 0..m {
            let dst = &mut out[(start + j) * cout * p..(start + j + 1) * cout * p];
            for (c, chunk) in dst.chunks_exact_mut(p).enumerate() {
                let src = &tmp[c * ld + j * p..c * ld + (j + 1) * p];
                chunk.iter_mut().zip(src).for_each(|(d, &s)| *d = s + bias[c]);
            }
        }
    }
    out
}

pub(crate) struct ConvGrads<T> {
    pub input: Option<Vec<T>>,
    pub weight: Option<Vec<T>>,
    pub bias: Option<Vec<T>>,
}

pub(crate) fn conv2d_backward<T: Real>(
    g: &ConvGeometry,
    input: &[T],
    weight: &[T],
    grad_out: &[T],
    need: [bool; 3],
) -> ConvGrads<T> {
    let (kk, p, cout, il) = (g.patch_len(), g.positions(), g.out_channels, g.image_len());
    let mut d_input = need[0].then(|| vec![T::zero(); input.len()]);
    let mut d_weight = need[1].then(|| vec![T::zero(); weight.len()]);
    let mut d_bias = need[2].then(|| vec![T::zero(); cout]);
    if let Some(db) = d_bias.as_mut() {
        for (i, chunk) in grad_out.chunks_exact(p).enumerate() {
            db[i % cout] += chunk.iter().copied().sum::<T>();
        }
    }
    if !need[0] && !need[1] {
        return ConvGrads { input: d_input, weight: d_weight, bias: d_bias };
    }
    if kk <= DIRECT_MAX_PATCH {
        let mut grads = ConvGrads { input: d_input, weight: d_weight, bias: d_bias };
        direct_backward(g, input, weight, grad_out, &mut grads);
        return grads;
    }
    let nb = g.chunk();
    let mut col = vec![T::zero(); kk * nb * p];
    let mut dy = vec![T::zero(); cout * nb * p];
    for start in (0..g.batch).step_by(nb) {
        let m = nb.min(g.batch - start);
        let ld = m * p;
        // gather dY into [cout, m*p]
        for j in 0..m {
            let src = &grad_out[(start + j) * cout * p..(start + j + 1) * cout * p];
            for (c, chunk) in src.chunks_exact(p).enumerate() {
                dy[c * ld + j * p..c * ld + (j + 1) * p].copy_from_slice(chunk);
            }
        }
        let dy = &dy[..cout * ld];
        if let Some(dw) = d_weight.as_mut() {
            for j in 0..m {
                let n = start + j;
                im2col(g, &input[n * il..(n + 1) * il], &mut col, ld, j * p);
            }
            // dW^T[kk, cout] += col[kk, m*p] * dY^T, keeping the large operand row-major
            T::gemm(kk, ld, cout, T::one(), &col[..kk * ld], (ld, 1), dy, (1, ld), T::one(), dw, (1, kk));
        }
        if let Some(dx) = d_input.as_mut() {
            // dcol[kk, m*p] = W^T * dY
            T::gemm(kk, cout, ld, T::one(), weight, (1, kk), dy, (ld, 1), T::zero(), &mut col[..kk * ld], (ld, 1));
            for j in 0..m {
                let n = start + j;
                col2im(g, &col, ld, j * p, &mut dx[n * il..(n + 1) * il]);
            }
        }
    }
    ConvGrads { input: d_input, weight: d_weight, bias: d_bias }
}
