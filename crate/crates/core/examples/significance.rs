//! Correlation report with Williams significance marks for three synthetic
//! predictors of a noisy human score.

use glassbox_qe::stats::correlation_report;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> glassbox_qe::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let n = 300;
    let quality: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..1.0)).collect();
    let mut noisy = |scale: f64| -> Vec<f64> {
        quality.iter().map(|q| q + scale * rng.random_range(-1.0..1.0)).collect()
    };
    let predictors = vec![
        ("sharp".to_string(), "I".to_string(), noisy(0.3)),
        ("blurry".to_string(), "I".to_string(), noisy(1.5)),
        ("other".to_string(), "II".to_string(), noisy(1.4)),
    ];
    let human = noisy(0.5);
    let report = correlation_report(&predictors, &human, 0.05)?;
    print!("{}", report.to_tsv());
    println!();
    print!("{}", report.p_values_tsv());
    Ok(())
}
