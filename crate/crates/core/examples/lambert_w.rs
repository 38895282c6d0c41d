//! Principal-branch Lambert W: a few values, the identity residual, and the
//! logarithmic enclosure used for large arguments.
//!
//! ```text
//! cargo run --example lambert_w
//! ```

use std::f64::consts::E;

use dc_optlab::lambert_w::{w0, w0_log_enclosure, BRANCH_POINT};

fn main() -> dc_optlab::Result<()> {
    println!("{:>14} {:>22} {:>10}", "x", "w0(x)", "residual");
    for x in [BRANCH_POINT, -0.3, -0.1, 0.0, 1.0, E, 10.0, 1e3, 1e6] {
        let w = w0(x)?;
        println!("{x:>14.6} {w:>22.16} {:>10.1e}", (w * w.exp() - x).abs());
    }

    println!();
    for z in [5.0, 50.0, 5e3, 5e6] {
        let (lo, hi) = w0_log_enclosure(z)?;
        println!("ln z - ln ln z = {lo:.6} <= w0({z:e}) = {:.6} <= ln z = {hi:.6}", w0(z)?);
    }

    // Below the branch point there is no real solution.
    assert!(w0(-0.5).is_err());
    Ok(())
}
