// Closed-form allocation for one CNN user and one SVM user with many
// antennas: the CNN user, whose error falls slowly and whose samples are
// large, receives almost all of the power.

use lcpa::asymptotic::solve;
use lcpa::channel::expected_gains;
use lcpa::Scenario;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let s = Scenario::cnn_svm_pair(10, 20.0);
    let diag = expected_gains(&s).diagonal();
    let sol = solve(&s, &diag)?;
    println!("status {:?}, common error level {:.5}", sol.status, sol.level.0);
    for (k, p) in sol.powers.iter().enumerate() {
        println!("user {}: {:.4} mW", k + 1, p * 1e3);
    }
    println!("bisection steps: {}", sol.trace.len());
    Ok(())
}
