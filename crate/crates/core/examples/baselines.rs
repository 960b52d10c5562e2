// Water-filling versus max-min fairness on a diagonal channel.

use lcpa::baselines::{max_min_fair, sum_rate_diag, water_filling};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let gains = [3e-9, 1.5e-9, 4e-10, 9e-11];
    let noise = 10f64.powf(-11.7);
    let budget = 0.02;
    let wf = water_filling(&gains, noise, budget)?;
    let mm = max_min_fair(&gains, noise, budget)?;
    println!("{:>6} {:>14} {:>14}", "user", "water-filling", "max-min");
    for k in 0..gains.len() {
        println!("{:>6} {:>11.3} mW {:>11.3} mW", k + 1, wf[k] * 1e3, mm[k] * 1e3);
    }
    println!(
        "sum rate: {:.3} vs {:.3} bit/s/Hz",
        sum_rate_diag(&gains, noise, &wf),
        sum_rate_diag(&gains, noise, &mm)
    );
    Ok(())
}
