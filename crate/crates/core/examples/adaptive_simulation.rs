//! Plays the shipped budget trace against a synthetic clip.
//!
//! ```text
//! cargo run --example adaptive_simulation
//! ```

use enlight::energy::load_platform;
use enlight::harness::{load_budget_trace, run_simulation, SimulationOptions};
use enlight::imageio::{Frame, FrameSequence};
use enlight::net::load_weights;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = concat!(env!("CARGO_MANIFEST_DIR"), "/assets");
    let net = load_weights(format!("{dir}/demo_weights.json"))?;
    let preset = load_platform(format!("{dir}/cpu.json"))?;
    let trace = load_budget_trace(format!("{dir}/budget_trace.csv"))?;

    let fps = 10.0;
    let clip = FrameSequence::new(
        (0..60)
            .map(|t| {
                Frame::from_fn(54, 96, |y, x| {
                    let v = 0.09 + 0.06 * ((x as f64 + 2.0 * t as f64) * 0.27).sin() * (y as f64 * 0.21).cos();
                    [v, 0.85 * v, 0.7 * v]
                })
                .unwrap()
            })
            .collect(),
    )?
    .with_frame_rate(fps);

    let options = SimulationOptions { peak_mac_rate_per_ms: preset.peak_mac_rate_per_ms, ..Default::default() };
    let report = run_simulation(&clip, &trace, &net, preset.units()?, &options)?;
    println!("{:>5} {:>7} {:>5} {:>16} {:>12} {:>7} {:>10}", "t", "supply", "eps", "config", "E/frame", "Q", "lat ms");
    for r in &report.intervals {
        println!(
            "{:>5.1} {:>7.2} {:>5.2} {:>16} {:>12.4e} {:>7.3} {:>10.3}",
            r.time_s,
            r.supply_fraction,
            r.epsilon,
            r.active_config.to_string(),
            r.predicted_energy_per_frame,
            r.measured_quality,
            r.mean_latency_ms
        );
    }
    println!("{} frames, {} adaptations", report.totals.frames, report.totals.adaptations);
    Ok(())
}
