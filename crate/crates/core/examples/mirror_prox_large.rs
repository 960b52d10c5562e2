// Mirror-prox on a hundred users, timed against MM on the same diagonal
// gains.

use std::time::Instant;

use lcpa::channel::{expected_gains, GainMatrix};
use lcpa::mirror_prox::{lipschitz_constants, solve, MirrorProxOptions};
use lcpa::mm::{self, MmOptions};
use lcpa::Scenario;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let s = Scenario::four_user_default().with_num_users(100)?;
    let diag = expected_gains(&s).diagonal();
    let c = lipschitz_constants(&s, &diag, 0.1)?;
    println!(
        "L1 = {:.3e}  L2 = {:.3e}  initial step {:.3e}",
        c.l1,
        c.l2,
        1e3 / c.l2
    );

    let t = Instant::now();
    let mp = solve(&s, &diag, &MirrorProxOptions::default())?;
    let t_mp = t.elapsed();
    let t = Instant::now();
    let reference = mm::solve(&s, &GainMatrix::from_diagonal(&diag), &MmOptions::default())?;
    let t_mm = t.elapsed();

    println!(
        "mirror-prox: {:.8} in {} iterations, {:?}",
        mp.objective, mp.iterations, t_mp
    );
    println!(
        "mm:          {:.8} in {} iterations, {:?}",
        reference.objective, reference.iterations, t_mm
    );
    println!("task weights at the saddle point: {:?}", mp.state.alpha);
    Ok(())
}
