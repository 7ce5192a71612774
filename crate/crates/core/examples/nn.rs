//! Fits a small dense network to a linear target with Adam.

use debunk::nn::{Adam, AdamConfig, DenseNet, Model};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> debunk::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut net = DenseNet::new(&[3, 16, 1], &mut rng);
    let mut adam = Adam::new(AdamConfig { learning_rate: 1e-2, ..AdamConfig::default() });
    let data: Vec<([f64; 3], f64)> = (0..64)
        .map(|_| {
            let x = [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)];
            (x, 0.5 * x[0] - x[1] + 0.25 * x[2])
        })
        .collect();
    for epoch in 0..=300 {
        let mut grad = net.zeros_like();
        let mut loss = 0.0;
        for (x, y) in &data {
            let err = net.forward(x)?[0] - y;
            loss += err * err / data.len() as f64;
            grad.add_scaled(&net.backward(x, &[2.0 * err / data.len() as f64])?, 1.0);
        }
        adam.step(&mut net, &grad)?;
        if epoch % 50 == 0 {
            println!("epoch {epoch:>3}: mse {loss:.5}");
        }
    }
    Ok(())
}
