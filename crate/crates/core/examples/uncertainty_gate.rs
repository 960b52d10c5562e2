// Turn per-user confidence scores into sample bounds and allocate with them.

use std::fs::File;

use lcpa::channel::{composite_gains, draw_channels};
use lcpa::mm::{solve, MmOptions};
use lcpa::uncertainty::{apply_gate, read_confidence_csv, Aggregation};
use lcpa::Scenario;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/examples/data/confidence.csv");
    let reports = read_confidence_csv(File::open(path)?, Aggregation::Min)?;
    let mut s = Scenario::four_user_default();
    apply_gate(&mut s, &reports)?;
    for r in &reports {
        let b = s.rate_bounds[r.user];
        println!(
            "user {}: min score {:.3} -> samples in [{}, {}]",
            r.user + 1,
            r.aggregate,
            b.min,
            b.max
        );
    }
    let gains = composite_gains(&draw_channels(&s, 5))?;
    let sol = solve(&s, &gains, &MmOptions::default())?;
    println!(
        "powers (mW): {:?}",
        sol.powers.iter().map(|p| p * 1e3).collect::<Vec<_>>()
    );
    println!("worst error {:.5}", sol.objective);
    Ok(())
}
