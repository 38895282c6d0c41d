//! Train a single neuron on mirrored Gaussian blobs with a no-DC loss and a
//! growing-DC loss, and print a few epochs of each trace.

use dc_optlab::data::generate_split;
use dc_optlab::neuron::{train_full, TrainConfig};
use dc_optlab::{DCParams, SyntheticSpec};

fn main() -> dc_optlab::Result<()> {
    let (train_set, test_set) = generate_split(&SyntheticSpec::default())?;
    let cfg = TrainConfig { epochs: 300, ..Default::default() };

    for params in [DCParams::no_dc(), DCParams::new(4.0, 0.0, 0.5, 0.5)?] {
        let out = train_full(&params, &train_set, &test_set, &cfg)?;
        println!("{} (r={}, d={})", params.kind().label(), params.r(), params.d());
        for t in out.trace.iter().filter(|t| t.epoch == 1 || t.epoch % 50 == 0) {
            println!(
                "  epoch {:>3}  loss {:>10.4}  test acc {:.3}  |θ| {:.3}  margin {:.4}",
                t.epoch, t.train_loss, t.test_accuracy, t.theta_norm, t.min_normalized_margin
            );
        }
        println!("  θ = {:?}", out.theta.0);
    }
    Ok(())
}
