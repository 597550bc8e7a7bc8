//! Which frames and layers run under different reuse settings.

use enlight::controller::sequence_quality;
use enlight::imageio::{Frame, FrameSequence, Resolution};
use enlight::net::demo_network;
use enlight::scheduler::{enhance_sequence, FrameAction, ReuseConfig};

fn main() {
    let net = demo_network();
    let seq = FrameSequence::new(
        (0..9)
            .map(|t| {
                Frame::from_fn(48, 64, |y, x| {
                    let v = 0.1 + 0.06 * ((x as f64 + 2.0 * t as f64) * 0.3).sin() * (y as f64 * 0.2).cos();
                    [v, 0.85 * v, 0.7 * v]
                })
                .unwrap()
            })
            .collect(),
    )
    .unwrap();
    let reference = enhance_sequence(&seq, &net, ReuseConfig::FULL).unwrap();

    for (f, l, d) in [(0, 0, Resolution::Full), (0, 3, Resolution::Full), (2, 0, Resolution::Full), (2, 3, Resolution::Third)] {
        let config = ReuseConfig::new(f, l, d).unwrap();
        let out = enhance_sequence(&seq, &net, config).unwrap();
        let plan: String = out
            .plans
            .iter()
            .map(|p| match p.action {
                FrameAction::FullCompute => 'F',
                FrameAction::PartialCompute => 'P',
                FrameAction::ReuseMap => '.',
            })
            .collect();
        let layers: usize = out.executed.iter().map(|m| m.iter().filter(|&&r| r).count()).sum();
        let q = sequence_quality(out.frames.frames(), reference.frames.frames()).unwrap();
        println!("{config:<16} plan {plan}  layers run {layers:>3}  quality {q:.3}");
    }
}
