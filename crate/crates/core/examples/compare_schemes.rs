// Every scheme on the same ten channel draws, written as CSV.

use lcpa::harness::{compare, summarize, write_allocations, GainMode, RunConfig, Scheme};
use lcpa::Scenario;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let s = Scenario::four_user_default();
    let cfg = RunConfig {
        seed: 42,
        draws: 10,
        gain_mode: GainMode::RealizedDiagonal,
        ..Default::default()
    };
    let schemes = [
        Scheme::Mm,
        Scheme::MirrorProx,
        Scheme::WaterFilling,
        Scheme::MaxMin,
    ];
    let rows = compare(&s, &schemes, &cfg)?;
    for (scheme, mean) in summarize(&rows) {
        println!(
            "{scheme:>14}: predicted max error {:.4}, CNN samples {:.0}",
            mean.objective, mean.samples[0]
        );
    }
    let mut csv = Vec::new();
    write_allocations(&mut csv, &rows, false)?;
    println!("\n{} CSV bytes, first line:", csv.len());
    println!("{}", String::from_utf8(csv)?.lines().next().unwrap_or(""));
    Ok(())
}
