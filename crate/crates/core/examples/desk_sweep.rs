//! A small version of the grid protocol: sample the full grid, keep a handful
//! of configs plus the no-DC baseline, and train each a few times.

use dc_optlab::neuron::TrainConfig;
use dc_optlab::sweep::{build_grid, run_sweep, sample_grid};
use dc_optlab::{DCParams, GridSpec, SyntheticSpec};

fn main() -> dc_optlab::Result<()> {
    let spec = GridSpec::default();
    let grid = build_grid(&spec)?;
    let sample = sample_grid(&grid, spec.pick_fraction, spec.seed)?;
    println!("grid {} configs, sampled {}", grid.len(), sample.len());

    let mut configs = vec![DCParams::no_dc()];
    configs.extend(sample.iter().take(6));
    let cfg = TrainConfig { epochs: 200, ..Default::default() };
    let result = run_sweep(&configs, &SyntheticSpec::default(), &cfg, 3, spec.seed)?;

    for c in &result.per_config {
        println!(
            "#{:<2} {:<14} r={:<6.3} c={:<6.3} d={:<4.1} p_d={:<4.2} acc {:.4} ± {:.4}",
            c.config_id,
            c.kind.label(),
            c.params.r(),
            c.params.c(),
            c.params.d(),
            c.params.p_d(),
            c.mean_final_accuracy.unwrap_or(f64::NAN),
            c.std_final_accuracy.unwrap_or(f64::NAN)
        );
    }
    println!("\n{}", result.comparison_table());
    Ok(())
}
