//! Compare the four loss shapes: how fast the response probability rises
//! around the difficulty and how flat the loss gets on either side.

use dc_optlab::dc_loss::{loss_derivative, per_sample_loss, response_probability};
use dc_optlab::DCParams;

fn main() -> dc_optlab::Result<()> {
    let shapes = [
        DCParams::no_dc(),
        DCParams::new(3.0, 0.0, 0.0, 0.5)?,
        DCParams::new(1.0, 2.0, 0.0, 0.5)?,
        DCParams::new(3.0, 2.0, 0.0, 0.5)?,
    ];
    let ts = [-3.0, -1.0, 0.0, 1.0, 3.0];

    for p in &shapes {
        println!("{} (r={}, c={}, a={:.3}, b={:.3})", p.kind().label(), p.r(), p.c(), p.a(), p.b());
        for &t in &ts {
            println!(
                "  t={t:>5.1}  P={:.6}  loss={:>10.6}  dloss/dt={:>10.6}",
                response_probability(p, t),
                per_sample_loss(p, t),
                loss_derivative(p, t)
            );
        }
    }
    Ok(())
}
