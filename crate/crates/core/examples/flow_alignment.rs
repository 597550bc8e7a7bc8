//! Dense flow between two frames of a pan, then alignment by warping.

use enlight::flow::{estimate_flow, warp};
use enlight::imageio::Frame;

fn texture(offset: f64) -> Frame {
    Frame::from_fn(64, 96, |y, x| {
        let (y, x) = (y as f64, x as f64 + offset);
        let v = 0.3 + 0.2 * (x * 0.25).sin() * (y * 0.19).cos();
        [v, v, v]
    })
    .unwrap()
}

fn mean_abs_luma(a: &Frame, b: &Frame, margin: usize) -> f64 {
    let (h, w) = a.dims();
    let (la, lb) = (a.luminance(), b.luminance());
    let mut sum = 0.0;
    let mut n = 0;
    for y in margin..h - margin {
        for x in margin..w - margin {
            sum += (la[y * w + x] - lb[y * w + x]).abs();
            n += 1;
        }
    }
    sum / n as f64
}

fn main() {
    let t = texture(0.0);
    for shift in [0.0, 1.0, 2.0, 3.5] {
        let t1 = texture(shift);
        let flow = estimate_flow(&t, &t1).unwrap();
        let [dx, dy] = flow.interior_mean(12);
        let aligned = warp(&t, &flow).unwrap();
        println!(
            "shift {shift:>3.1} px: flow ({dx:+.3}, {dy:+.3})  error before {:.4}  after {:.4}",
            mean_abs_luma(&t, &t1, 12),
            mean_abs_luma(&aligned, &t1, 12),
        );
    }
}
