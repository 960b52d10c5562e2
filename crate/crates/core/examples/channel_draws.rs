// Draw Rayleigh channels, form MRC gains and turn powers into samples.

use lcpa::channel::{composite_gains, draw_channels, expected_gains, rates, sample_counts, SampleMode};
use lcpa::Scenario;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let s = Scenario::four_user_default();
    let gains = composite_gains(&draw_channels(&s, 7))?;
    let expected = expected_gains(&s);
    for k in 0..s.num_users {
        println!(
            "user {}: G_kk = {:.3e} (mean {:.3e}), worst cross gain {:.3e}",
            k + 1,
            gains.get(k, k),
            expected.get(k, k),
            (0..s.num_users)
                .filter(|&l| l != k)
                .map(|l| gains.get(k, l))
                .fold(0.0, f64::max)
        );
    }

    let uniform = vec![s.total_power / s.num_users as f64; s.num_users];
    let r = rates(&gains, &uniform, s.noise_power);
    println!("rates (bit/s/Hz): {:?}", r.0);
    let v = sample_counts(&r, &s, SampleMode::Continuous);
    let whole = sample_counts(&r, &s, SampleMode::Floored);
    for m in 0..s.num_tasks() {
        println!("task {}: {:.1} samples ({} whole)", m + 1, v[m], whole[m]);
    }
    Ok(())
}
