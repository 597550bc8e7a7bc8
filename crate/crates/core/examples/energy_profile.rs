//! Per-layer energy of the demo network and the cost of each reuse knob.

use enlight::energy::{load_platform, CacheSource, CacheState, EnergyProfiler};
use enlight::imageio::Resolution;
use enlight::net::load_weights;
use enlight::scheduler::ReuseConfig;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = concat!(env!("CARGO_MANIFEST_DIR"), "/assets");
    let net = load_weights(format!("{dir}/demo_weights.json"))?;
    let preset = load_platform(format!("{dir}/cpu.json"))?;
    let (h, w) = (270, 480);
    let profiler = EnergyProfiler::new(&net, h, w, preset.units()?);

    let cache = CacheState::new(0.7, CacheSource::Measured)?;
    println!("{h}x{w}, eps = {}", cache.epsilon);
    println!("{:>5} {:>10} {:>12} {:>12} {:>14}", "layer", "kind", "MACs", "accesses", "energy");
    for row in profiler.profile(&net, cache) {
        println!("{:>5} {:>10?} {:>12} {:>12} {:>14.4e}", row.layer, row.kind, row.macs, row.mem_accesses, row.energy);
    }

    println!("\nper-frame energy over 30 frames");
    for eps in [0.3, 0.7, 1.0] {
        let cache = CacheState::new(eps, CacheSource::Measured)?;
        let full = profiler.per_frame(&ReuseConfig::FULL, 30, cache)?;
        print!("eps {eps:.1}: (0, 0, 1) {full:.3e}");
        for (f, l, d) in [(0, 3, Resolution::Full), (4, 0, Resolution::Full), (0, 0, Resolution::Third)] {
            let c = ReuseConfig::new(f, l, d)?;
            print!("  {c} {:.0}%", 100.0 * profiler.per_frame(&c, 30, cache)? / full);
        }
        println!();
    }
    Ok(())
}
