//! The single-pass gamma curve next to the iterative quadratic curve.

use enlight::curves::{apply_gamma_curve, apply_quadratic_curve, CurveParamMap, GammaMap, ParamMaps};
use enlight::imageio::Frame;

fn main() {
    let levels = [0.02, 0.05, 0.1, 0.2, 0.4, 0.8];
    let ramp = Frame::from_fn(1, levels.len(), |_, x| [levels[x]; 3]).unwrap();
    let w = levels.len();

    println!("{:>8} {:>10} {:>10} {:>12} {:>12}", "input", "gamma 0.5", "gamma 0.3", "quad A=1 x4", "quad A=1 x8");
    let g05 = apply_gamma_curve(&ramp, &GammaMap::uniform(1, w, 0.5).unwrap()).unwrap();
    let g03 = apply_gamma_curve(&ramp, &GammaMap::uniform(1, w, 0.3).unwrap()).unwrap();
    let a = CurveParamMap::uniform(1, w, 1.0).unwrap();
    let q4 = apply_quadratic_curve(&ramp, std::slice::from_ref(&a), 4, ParamMaps::Shared).unwrap();
    let q8 = apply_quadratic_curve(&ramp, &[a], 8, ParamMaps::Shared).unwrap();
    for (x, level) in levels.iter().enumerate() {
        let at = |f: &Frame| f.pixel(0, x)[0];
        println!("{level:>8.3} {:>10.4} {:>10.4} {:>12.4} {:>12.4}", at(&g05), at(&g03), at(&q4), at(&q8));
    }

    // (I^a)^b == I^(ab): one pass with a composed map replaces a chain
    let a = GammaMap::uniform(1, w, 0.6).unwrap();
    let b = GammaMap::uniform(1, w, 0.5).unwrap();
    let chained = apply_gamma_curve(&apply_gamma_curve(&ramp, &a).unwrap(), &b).unwrap();
    let once = apply_gamma_curve(&ramp, &a.compose(&b).unwrap()).unwrap();
    let err = chained.data().iter().zip(once.data()).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max);
    println!("composition error {err:.1e}");
}
