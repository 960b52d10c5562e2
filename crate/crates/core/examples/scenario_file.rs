// Load a scenario from TOML, inspect it, and write it back out.

use lcpa::scenario::{dbm_to_watt, estimate_overhead, Scenario};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/examples/data/four_users.toml");
    let s = Scenario::load(path)?;
    assert_eq!(s, Scenario::four_user_default().with_duration(20.0));

    println!(
        "users {} antennas {} tasks {}",
        s.num_users,
        s.num_antennas,
        s.num_tasks()
    );
    println!("P = {:.3} mW", s.total_power * 1e3);
    println!(
        "noise = {:.3e} W ({:.3e} at -87 dBm)",
        s.noise_power,
        dbm_to_watt(-87.0)
    );
    println!(
        "xi for 30% reserve, 10% packet loss = {}",
        estimate_overhead(0.3, 0.1)
    );
    for (m, g) in s.groups.iter().enumerate() {
        let users: Vec<usize> = g.iter().map(|k| k + 1).collect();
        println!("task {}: users {:?}", m + 1, users);
    }
    println!("\n{}", s.to_toml_string());
    Ok(())
}
