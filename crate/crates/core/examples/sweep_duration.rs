// Predicted worst error as the upload window grows.

use lcpa::harness::{sweep, write_sweep, RunConfig, Scheme, SweepParam};
use lcpa::Scenario;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let s = Scenario::four_user_default();
    let schemes = [Scheme::Mm, Scheme::WaterFilling, Scheme::MaxMin];
    let points = sweep(
        &s,
        SweepParam::Duration,
        &[5.0, 10.0, 15.0, 20.0],
        &schemes,
        &RunConfig::default(),
    )?;
    write_sweep(std::io::stdout().lock(), SweepParam::Duration, &points)?;
    Ok(())
}
