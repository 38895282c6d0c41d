//! Render the rate curves to an SVG file.
//!
//! ```text
//! cargo run --example svg_plot -- rates.svg
//! ```

use dc_optlab::convergence::RateCurve;
use dc_optlab::plot::{chart_from_csv, render_svg, PlotKind};
use dc_optlab::DCParams;

fn main() -> dc_optlab::Result<()> {
    let out = std::env::args().nth(1).unwrap_or_else(|| "rates.svg".into());
    let p = DCParams::new(1.0, 0.0, 0.0, (-1.0f64).exp())?;
    let zs: Vec<f64> = (0..=200).map(|k| 1.0 + 0.1 * k as f64).collect();

    let mut csv = Vec::new();
    RateCurve::sample(p, &zs)?.write_csv(&mut csv, false)?;
    let chart = chart_from_csv(&String::from_utf8_lossy(&csv), PlotKind::Rates, None)?;
    std::fs::write(&out, render_svg(&chart)).map_err(|e| dc_optlab::Error::Io {
        path: out.clone().into(),
        source: e,
    })?;
    println!("wrote {out}");
    Ok(())
}
