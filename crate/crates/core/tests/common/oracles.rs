//! Independent reference implementations, written straight from the
//! defining formulas with no shared code paths.

/// Direct nested-loop cross-correlation with zero padding, `[N,C,H,W]` input.
#[allow(clippy::too_many_arguments)]
pub fn conv2d(
    x: &[f64],
    (n, cin, h, w): (usize, usize, usize, usize),
    weight: &[f64],
    bias: &[f64],
    cout: usize,
    k: usize,
    stride: usize,
    pad: usize,
) -> (Vec<f64>, usize, usize) {
    let oh = (h + 2 * pad - k) / stride + 1;
    let ow = (w + 2 * pad - k) / stride + 1;
    let mut out = vec![0.0; n * cout * oh * ow];
    for b in 0..n {
        for co in 0..cout {
            for oy in 0..oh {
                for ox in 0..ow {
                    let mut s = bias[co];
                    for ci in 0..cin {
                        for ky in 0..k {
                            for kx in 0..k {
                                let iy = (oy * stride + ky) as isize - pad as isize;
                                let ix = (ox * stride + kx) as isize - pad as isize;
                                if iy < 0 || ix < 0 || iy >= h as isize || ix >= w as isize {
                                    continue;
                                }
                                let xv = x[((b * cin + ci) * h + iy as usize) * w + ix as usize];
                                s += weight[((co * cin + ci) * k + ky) * k + kx] * xv;
                            }
                        }
                    }
                    out[((b * cout + co) * oh + oy) * ow + ox] = s;
                }
            }
        }
    }
    (out, oh, ow)
}

pub fn mish(x: f64) -> f64 {
    x * (1.0 + x.exp()).ln().tanh()
}

pub fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// One mean per sample over all `c*h*w` values of that sample.
pub fn gccp(x: &[f64], n: usize, c: usize, h: usize, w: usize) -> Vec<f64> {
    (0..n)
        .map(|b| {
            let mut s = 0.0;
            for p in 0..c {
                for i in 0..h {
                    for j in 0..w {
                        s += x[((b * c + p) * h + i) * w + j];
                    }
                }
            }
            s / (c * h * w) as f64
        })
        .collect()
}

pub fn mean(p: &[f64]) -> f64 {
    p.iter().sum::<f64>() / p.len() as f64
}

/// Population standard deviation, two-pass.
pub fn contrast(p: &[f64]) -> f64 {
    let m = mean(p);
    (p.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / p.len() as f64).sqrt()
}

/// Batch mean of `-x_y + log sum_j exp(x_j)` with max subtraction.
pub fn cross_entropy(rows: &[Vec<f64>], labels: &[usize]) -> f64 {
    let total: f64 = rows
        .iter()
        .zip(labels)
        .map(|(r, &y)| {
            let m = r.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            m + r.iter().map(|v| (v - m).exp()).sum::<f64>().ln() - r[y]
        })
        .sum();
    total / rows.len() as f64
}

/// Per-class `(precision, recall, f1)` counted straight from the label lists,
/// zero when a denominator vanishes, and the macro means plus accuracy.
#[allow(clippy::type_complexity)]
pub fn prf(pred: &[usize], truth: &[usize], classes: usize) -> (Vec<(f64, f64, f64)>, (f64, f64, f64, f64)) {
    let ratio = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
    let per: Vec<(f64, f64, f64)> = (0..classes)
        .map(|c| {
            let tp = pred.iter().zip(truth).filter(|(&p, &t)| p == c && t == c).count();
            let predicted = pred.iter().filter(|&&p| p == c).count();
            let actual = truth.iter().filter(|&&t| t == c).count();
            let (p, r) = (ratio(tp, predicted), ratio(tp, actual));
            let f = if p + r == 0.0 { 0.0 } else { 2.0 * p * r / (p + r) };
            (p, r, f)
        })
        .collect();
    let k = classes as f64;
    let acc = ratio(pred.iter().zip(truth).filter(|(p, t)| p == t).count(), pred.len());
    let macro_avg = (
        per.iter().map(|v| v.0).sum::<f64>() / k,
        per.iter().map(|v| v.1).sum::<f64>() / k,
        per.iter().map(|v| v.2).sum::<f64>() / k,
        acc,
    );
    (per, macro_avg)
}
