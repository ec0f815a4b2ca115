//! The random-bijection gadget: reweighting a packing by q moves mass over
//! distances of order m^{-1/d}, so the excess cost shrinks like m^{-2/d}.

use ot_rates::costs::CostSpec;
use ot_rates::lowerbounds::{gadget_sweep, median_slope, packing_set, QFamily};

fn main() -> ot_rates::Result<()> {
    let d = 5;
    let p = packing_set(&vec![0.0; d], 0.5, 32)?;
    println!("packing of 32 points: separation {}, grid constant {}", p.separation, p.grid_constant);

    let cost = CostSpec::quadratic(d);
    let ms = [32, 64, 128, 256, 512];
    let seeds: Vec<u64> = (0..10).collect();
    let results = gadget_sweep(&ms, QFamily::Split(0.25), &vec![0.0; d], &cost, &seeds)?;
    for r in results.iter().filter(|r| r.seed == 0) {
        println!("m={:4} tv={} chi2={} value-h={:.6}", r.m, r.tv, r.chi2, r.value_minus_h);
    }
    println!("slope of the median excess cost: {:.3} (reference {:.3})", median_slope(&results)?, -2.0 / d as f64);
    Ok(())
}
