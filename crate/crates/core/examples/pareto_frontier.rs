//! Evaluates all 132 configurations on a short clip and walks the frontier
//! as the energy supply drops.

use enlight::controller::{pareto_front, select_config, select_lambda, ConfigEvaluator};
use enlight::energy::{CacheSource, CacheState, EnergyUnitCosts};
use enlight::imageio::{Frame, FrameSequence};
use enlight::net::demo_network;

fn main() {
    let clip = FrameSequence::new(
        (0..16)
            .map(|t| {
                Frame::from_fn(48, 64, |y, x| {
                    let v = 0.1 + 0.07 * ((x as f64 + 2.0 * t as f64) * 0.31).sin() * (y as f64 * 0.23).cos();
                    [v, 0.85 * v, 0.7 * v]
                })
                .unwrap()
            })
            .collect(),
    )
    .unwrap();
    let net = demo_network();
    let evaluator = ConfigEvaluator::new(&net, &clip, EnergyUnitCosts::cpu()).unwrap();
    let table = evaluator.table().unwrap();
    let cache = CacheState::new(0.7, CacheSource::Measured).unwrap();
    let points = table.points(cache).unwrap();
    let front = pareto_front(&points).unwrap();

    println!("{} of {} configurations are nondominated", front.len(), points.len());
    for p in &front {
        println!("  {:<16} Q {:.3}  E/frame {:.4e}", p.config.to_string(), p.quality, p.energy);
    }
    println!();
    for supply in [1.0, 0.8, 0.6, 0.4, 0.2] {
        let lambda = select_lambda(supply).unwrap();
        println!("supply {supply:.1}  lambda {lambda:.2}  -> {}", select_config(&front, lambda).unwrap());
    }
}
