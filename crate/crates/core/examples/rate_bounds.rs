//! Convergence rate of the DC loss against the default rate `g(z) = z`, with
//! the two-sided bracket and the effect of `r` and `d`.

use dc_optlab::convergence::{corollary_probe, rate_onset};
use dc_optlab::{dc_rate, default_rate, theorem_bracket, DCParams};

fn main() -> dc_optlab::Result<()> {
    // p_d = e^-1 with c = 0 gives b = -1, so g_dc(z) = W0(-e^-z) + z.
    let p = DCParams::new(1.0, 0.0, 0.0, (-1.0f64).exp())?;
    println!("onset z_min = {}", rate_onset(p.b()));

    println!("{:>6} {:>10} {:>10} {:>10} {:>10}", "z", "g_dc", "g", "lower", "upper");
    for z in [3.0, 5.0, 10.0, 20.0, 50.0] {
        let br = theorem_bracket(p.b(), z)?;
        println!(
            "{z:>6.1} {:>10.6} {:>10.6} {:>10.6} {:>10.6}",
            dc_rate(&p, z)?,
            default_rate(z),
            br.lower,
            br.upper
        );
    }

    let shifts = corollary_probe(&p, 5.0, &[0.5, 1.0, 2.0, 4.0], &[0.0, 1.0, 2.0])?;
    println!("\ng over r {:?}: {:?}", shifts.r_values, shifts.g_over_r);
    println!("g over d {:?}: {:?}", shifts.d_values, shifts.g_over_d);
    Ok(())
}
