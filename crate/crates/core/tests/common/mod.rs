//! Finite-difference gradient checking and brute-force metric oracles shared
//! by the integration tests and the acceptance runner.
#![allow(dead_code)]

pub mod grad_cases;
pub mod oracles;

use mcfm::tensor::{Graph, Tensor, Var};
use rand::Rng;

pub const H: f64 = 1e-5;
pub const REL_TOL: f64 = 1e-4;

pub fn rel_err(a: f64, n: f64) -> f64 {
    (a - n).abs() / a.abs().max(n.abs()).max(1e-6)
}

pub fn random_tensor<R: Rng>(rng: &mut R, shape: &[usize], lo: f64, hi: f64) -> Tensor<f64> {
    let n = shape.iter().product();
    Tensor::new(shape.to_vec(), (0..n).map(|_| rng.gen_range(lo..hi)).collect()).unwrap()
}

/// Builds `f` on fresh leaves and reduces a non-scalar output to
/// `sum(out * w)` with fixed random `w`, so every output entry is exercised.
struct Probe<'a, F> {
    f: &'a F,
    weights: Option<Tensor<f64>>,
}

impl<F> Probe<'_, F>
where
    F: Fn(&mut Graph<f64>, &[Var]) -> mcfm::Result<Var>,
{
    fn eval(&self, g: &mut Graph<f64>, leaves: &[Var]) -> Var {
        let out = (self.f)(g, leaves).expect("forward");
        match &self.weights {
            None => out,
            Some(w) => {
                let w = g.constant(w.clone());
                let p = g.mul(out, w).expect("projection");
                g.sum(p).expect("sum")
            }
        }
    }

    fn value(&self, inputs: &[Tensor<f64>]) -> f64 {
        let mut g = Graph::new();
        let leaves: Vec<Var> = inputs.iter().map(|t| g.param(t.clone())).collect();
        let out = self.eval(&mut g, &leaves);
        g.value(out).item().unwrap()
    }
}

/// Worst relative error between the tape gradient and central differences of
/// `f` with respect to every input. `max_coords` caps how many coordinates
/// per input are probed (chosen at random), `None` probes all of them.
pub fn check<R, F>(rng: &mut R, inputs: &[Tensor<f64>], max_coords: Option<usize>, f: F) -> f64
where
    R: Rng,
    F: Fn(&mut Graph<f64>, &[Var]) -> mcfm::Result<Var>,
{
    let mut g = Graph::new();
    let leaves: Vec<Var> = inputs.iter().map(|t| g.param(t.clone())).collect();
    let raw = f(&mut g, &leaves).expect("forward");
    let weights = (g.value(raw).rank() != 0).then(|| {
        let shape = g.value(raw).shape().to_vec();
        random_tensor(rng, &shape, -1.0, 1.0)
    });
    let probe = Probe { f: &f, weights };
    let mut g = Graph::new();
    let leaves: Vec<Var> = inputs.iter().map(|t| g.param(t.clone())).collect();
    let out = probe.eval(&mut g, &leaves);
    g.backward(out).expect("backward");

    let mut worst: f64 = 0.0;
    for (i, t) in inputs.iter().enumerate() {
        let analytic = g.grad(leaves[i]).map(<[f64]>::to_vec).unwrap_or_else(|| vec![0.0; t.numel()]);
        let coords: Vec<usize> = match max_coords {
            Some(k) if k < t.numel() => (0..k).map(|_| rng.gen_range(0..t.numel())).collect(),
            _ => (0..t.numel()).collect(),
        };
        for j in coords {
            let mut shifted = inputs.to_vec();
            shifted[i].data_mut()[j] = t.data()[j] + H;
            let plus = probe.value(&shifted);
            shifted[i].data_mut()[j] = t.data()[j] - H;
            let minus = probe.value(&shifted);
            let numeric = (plus - minus) / (2.0 * H);
            worst = worst.max(rel_err(analytic[j], numeric));
        }
    }
    worst
}

/// Mann-Whitney count over every positive/negative pair.
pub fn brute_auc(scores: &[f64], positive: &[bool]) -> Option<f64> {
    let (mut num, mut pairs) = (0u64, 0u64);
    for (i, &si) in scores.iter().enumerate() {
        for (j, &sj) in scores.iter().enumerate() {
            if positive[i] && !positive[j] {
                pairs += 1;
                num += if si > sj { 2 } else if si == sj { 1 } else { 0 };
            }
        }
    }
    (pairs > 0).then(|| num as f64 / (2 * pairs) as f64)
}

/// Step-sum AP evaluated threshold by threshold from scratch.
pub fn brute_ap(scores: &[f64], positive: &[bool]) -> Option<f64> {
    let p = positive.iter().filter(|&&b| b).count();
    if p == 0 {
        return None;
    }
    let mut thresholds = scores.to_vec();
    thresholds.sort_by(|a, b| b.total_cmp(a));
    thresholds.dedup();
    let (mut ap, mut prev_tp) = (0.0, 0usize);
    for t in thresholds {
        let tp = (0..scores.len()).filter(|&i| scores[i] >= t && positive[i]).count();
        let fp = (0..scores.len()).filter(|&i| scores[i] >= t && !positive[i]).count();
        ap += (tp - prev_tp) as f64 / p as f64 * (tp as f64 / (tp + fp) as f64);
        prev_tp = tp;
    }
    Some(ap)
}
