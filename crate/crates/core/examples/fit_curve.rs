// Fit a learning curve to a few measured (sample count, error) points and
// use it to extrapolate.

use std::fs::File;

use lcpa::error_model::{fit, predict, read_fit_points};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/examples/data/cnn_points.csv");
    let points = read_fit_points(File::open(path)?)?;
    let f = fit(&points)?;
    println!(
        "a = {:.4}  b = {:.4}  mse = {:.3e}",
        f.params.scale, f.params.exponent, f.mse
    );
    for v in [500.0, 1000.0, 3000.0] {
        println!("predicted error at {v} samples: {:.4}", predict(&f.params, v)?);
    }
    Ok(())
}
