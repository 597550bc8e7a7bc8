//! Enhances a directory of frames with the shipped demo weights.
//!
//! ```text
//! cargo run --example enhance_frames -- <input-dir> <output-dir>
//! ```
//!
//! Without arguments a dark synthetic clip is generated and written under the
//! system temp directory.

use enlight::imageio::{load_sequence, save_sequence, Frame, FrameSequence, Resolution};
use enlight::net::load_weights;
use enlight::scheduler::{enhance_sequence, ReuseConfig};

fn synthetic() -> FrameSequence {
    let frames = (0..8)
        .map(|t| {
            Frame::from_fn(120, 160, |y, x| {
                let v = 0.05 + 0.05 * ((x + 3 * t) as f64 * 0.08).sin().abs() + 0.0004 * y as f64;
                [v, 0.9 * v, 0.75 * v]
            })
            .unwrap()
        })
        .collect();
    FrameSequence::new(frames).unwrap()
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let (seq, out_dir) = match args.as_slice() {
        [input, output] => (load_sequence(input)?, output.into()),
        _ => (synthetic(), std::env::temp_dir().join("enlight-enhanced")),
    };
    let net = load_weights(concat!(env!("CARGO_MANIFEST_DIR"), "/assets/demo_weights.json"))?;

    let config = ReuseConfig::new(2, 0, Resolution::Half)?;
    let out = enhance_sequence(&seq, &net, config)?;
    std::fs::create_dir_all(&out_dir)?;
    save_sequence(&out.frames, &out_dir)?;

    let before: f64 = seq.iter().map(Frame::mean_luminance).sum::<f64>() / seq.len() as f64;
    let after: f64 = out.frames.iter().map(Frame::mean_luminance).sum::<f64>() / seq.len() as f64;
    println!("config {config}: {} frames, network ran on {}", seq.len(), out.network_runs());
    println!("mean luminance {before:.3} -> {after:.3}");
    println!("mean exponent of first map {:.3}", out.gamma_maps[0].mean());
    println!("wrote {}", out_dir.display());
    Ok(())
}
