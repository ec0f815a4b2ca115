//! Samplers, closed-form ground truths, and concentration certificates.

use ot_rates::costs::CostSpec;
use ot_rates::measures::{concentration_certificate, ground_truth_gaussian_w2, sample, SamplerSpec};

fn main() -> ot_rates::Result<()> {
    let mu = SamplerSpec::parse("ball:c=0,0,0;r=0.25", None)?;
    let nu = SamplerSpec::parse("translate:mu;z0=0.5,0,0", Some(&mu))?;
    let x = sample(&nu, 5, 42)?;
    for row in x.points.iter() {
        println!("{row:?}");
    }

    let identity = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
    let scaled = vec![vec![4.0, 0.0], vec![0.0, 1.0]];
    let pair = ground_truth_gaussian_w2(&[0.0, 0.0], &identity, &[1.0, 0.0], &scaled)?;
    println!("W2^2 between the Gaussians: {} (cost {})", pair.exact_value, CostSpec::quadratic(2).describe());

    let g = SamplerSpec::gaussian(vec![0.0; 3], vec![vec![1.0, 0.0, 0.0], vec![0.0, 2.0, 0.0], vec![0.0, 0.0, 0.5]])?;
    let cert = concentration_certificate(&g, 20_000, 9)?;
    if let Some(meta) = &cert.meta {
        println!(
            "sub-Weibull sigma {} beta {}: integral {} +- {}",
            meta.sigma, meta.beta, cert.integral, cert.std_error
        );
    }
    Ok(())
}
