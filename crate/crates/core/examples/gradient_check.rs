//! Compares tape gradients of a small conv -> mish -> pool -> cross-entropy
//! graph against central differences.
//!
//! cargo run --example gradient_check

use mcfm::tensor::{Graph, Tensor, Var};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn loss(g: &mut Graph<f64>, x: &[Var]) -> mcfm::Result<Var> {
    let y = g.conv2d(x[0], x[1], x[2], 1, 1)?;
    let y = g.mish(y)?;
    let y = g.global_avg_pool(y)?;
    g.softmax_cross_entropy(y, &[1, 0])
}

fn value(inputs: &[Tensor<f64>]) -> f64 {
    let mut g = Graph::new();
    let v: Vec<Var> = inputs.iter().map(|t| g.param(t.clone())).collect();
    let l = loss(&mut g, &v).expect("forward");
    g.value(l).item().expect("scalar")
}

fn main() -> mcfm::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut rand = |shape: &[usize]| {
        let n = shape.iter().product();
        Tensor::new(shape.to_vec(), (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect())
    };
    let inputs = vec![rand(&[2, 2, 5, 5])?, rand(&[3, 2, 3, 3])?, rand(&[3])?];

    let mut g = Graph::new();
    let vars: Vec<Var> = inputs.iter().map(|t| g.param(t.clone())).collect();
    let l = loss(&mut g, &vars)?;
    g.backward(l)?;

    let h = 1e-5;
    for (i, name) in ["input", "weight", "bias"].iter().enumerate() {
        let analytic = g.grad(vars[i]).expect("gradient").to_vec();
        let mut worst: f64 = 0.0;
        for j in 0..inputs[i].numel() {
            let mut p = inputs.clone();
            p[i].data_mut()[j] += h;
            let plus = value(&p);
            p[i].data_mut()[j] -= 2.0 * h;
            let numeric = (plus - value(&p)) / (2.0 * h);
            worst = worst.max((analytic[j] - numeric).abs() / analytic[j].abs().max(numeric.abs()).max(1e-6));
        }
        println!("{name:<7} {:>3} coordinates, worst relative error {worst:.2e}", inputs[i].numel());
    }
    Ok(())
}
