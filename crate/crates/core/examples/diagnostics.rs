//! Regularity diagnostics on empirical potentials and plans: semiconcavity,
//! displacement growth, and superdifferential growth.

use ot_rates::cli::{diagnose_displacement, diagnose_semiconcavity, diagnose_superdiff};
use ot_rates::config::parse_config;

const CONFIG: &str = "
[experiment]
cost = power:p=2,r=2
mu = gauss:m=0,0,0;cov=I
nu = gauss:m=1,0,0;cov=I
diag_n = 64
diag_plans = 4
triples = 2000
probes = 200
displacement_grid = 32,128
";

const COMPACT: &str = "
[experiment]
cost = power:p=2,r=2
mu = ball:c=0,0,0;r=0.25
pair = location:z0=0.5,0,0
diag_n = 64
diag_plans = 4
triples = 2000
";

fn main() -> ot_rates::Result<()> {
    let compact = parse_config(COMPACT)?;
    for r in diagnose_semiconcavity(&compact)? {
        println!("{}", r.status_line());
    }
    let gauss = parse_config(CONFIG)?;
    let disp = diagnose_displacement(&gauss)?;
    println!("{}", disp.status_line());
    println!("  {}", disp.witness.as_ref().unwrap());
    for r in diagnose_superdiff(&gauss)? {
        println!("{}", r.status_line());
    }
    Ok(())
}
