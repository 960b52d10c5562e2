// MM allocation under full interference-coupled MRC gains, first without
// and then with a cap on one user's contribution.

use lcpa::channel::{composite_gains, draw_channels, rates, user_samples};
use lcpa::mm::{solve, MmOptions};
use lcpa::scenario::RateBounds;
use lcpa::Scenario;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut s = Scenario::four_user_default();
    let gains = composite_gains(&draw_channels(&s, 3))?;
    let free = solve(&s, &gains, &MmOptions::default())?;
    println!(
        "worst error {:.5} after {} iterations",
        free.objective, free.iterations
    );
    for (it, obj) in free.trace.objectives().iter().enumerate() {
        println!("  iteration {it}: {obj:.7}");
    }

    s.rate_bounds[1] = RateBounds { min: 0.0, max: 200.0 };
    let capped = solve(&s, &gains, &MmOptions::default())?;
    let r = rates(&gains, &capped.powers, s.noise_power);
    println!(
        "user 2 capped at 200 samples: sends {:.1}, worst error {:.5}",
        user_samples(&s, 1, r.0[1]),
        capped.objective
    );
    println!(
        "powers (mW): {:?}",
        capped.powers.iter().map(|p| p * 1e3).collect::<Vec<_>>()
    );
    Ok(())
}
