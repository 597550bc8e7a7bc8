//! Quality and stability metrics of an enhanced clip against its input.

use enlight::imageio::{Frame, FrameSequence};
use enlight::metrics::sequence_report;
use enlight::net::demo_network;
use enlight::scheduler::{enhance_sequence, ReuseConfig};

fn main() {
    let clip = FrameSequence::new(
        (0..6)
            .map(|t| {
                // a slow pan with flickering exposure
                let gain = if t % 2 == 0 { 1.0 } else { 1.15 };
                Frame::from_fn(40, 56, |y, x| {
                    let v = gain * (0.08 + 0.05 * ((x as f64 + t as f64) * 0.35).sin() * (y as f64 * 0.25).cos());
                    [v, 0.9 * v, 0.8 * v]
                })
                .unwrap()
            })
            .collect(),
    )
    .unwrap();
    let net = demo_network();

    let input = sequence_report(&clip, None).unwrap();
    println!("input     {}", serde_json::to_string(&input).unwrap());
    for config in [ReuseConfig::FULL, ReuseConfig::new(1, 0, enlight::imageio::Resolution::Full).unwrap()] {
        let out = enhance_sequence(&clip, &net, config).unwrap();
        let reference = enhance_sequence(&clip, &net, ReuseConfig::FULL).unwrap();
        let report = sequence_report(&out.frames, Some(&reference.frames)).unwrap();
        println!("{config:<9} {}", serde_json::to_string(&report).unwrap());
    }
}
