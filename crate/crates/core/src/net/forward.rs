use std::sync::Arc;

use super::{LayerKind, LayerSpec, NetError, NetworkSpec, PaddingMode};
use crate::curves::GammaMap;
use crate::imageio::Frame;

/// Planar activations: `channels` planes of `height x width`.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    pub channels: usize,
    pub height: usize,
    pub width: usize,
    pub data: Vec<f64>,
}

impl Tensor {
    fn zeros(channels: usize, height: usize, width: usize) -> Self {
        Self { channels, height, width, data: vec![0.0; channels * height * width] }
    }

    fn from_frame(frame: &Frame) -> Self {
        let (h, w) = frame.dims();
        let plane = h * w;
        let mut t = Self::zeros(3, h, w);
        for (i, px) in frame.pixels().enumerate() {
            t.data[i] = px[0];
            t.data[plane + i] = px[1];
            t.data[2 * plane + i] = px[2];
        }
        t
    }

    pub fn plane(&self, c: usize) -> &[f64] {
        let n = self.height * self.width;
        &self.data[c * n..(c + 1) * n]
    }
}

/// Per-layer outputs of the most recent computation at one resolution.
#[derive(Debug, Clone)]
pub struct ActivationCache {
    dims: (usize, usize),
    tensors: Vec<Arc<Tensor>>,
    fresh: Vec<bool>,
}

impl ActivationCache {
    pub fn dims(&self) -> (usize, usize) {
        self.dims
    }

    pub fn layer_count(&self) -> usize {
        self.tensors.len()
    }

    pub fn output(&self, layer: usize) -> &Tensor {
        &self.tensors[layer]
    }

    /// Whether each layer was recomputed (rather than reused) by the pass that
    /// produced this cache.
    pub fn fresh(&self) -> &[bool] {
        &self.fresh
    }

    pub fn executed_layers(&self) -> usize {
        self.fresh.iter().filter(|&&f| f).count()
    }
}

/// Full forward pass.
pub fn forward(spec: &NetworkSpec, frame: &Frame) -> GammaMap {
    forward_partial(spec, frame, None, 0).expect("a pass without reuse cannot fail").0
}

/// Forward pass taking the outputs of the first `reuse_layers` layers from
/// `cached`. Layers after that are recomputed, with dense links to tensor 0
/// reading the current frame.
pub fn forward_partial(
    spec: &NetworkSpec,
    frame: &Frame,
    cached: Option<ActivationCache>,
    reuse_layers: usize,
) -> Result<(GammaMap, ActivationCache), NetError> {
    let layers = spec.layer_count();
    if reuse_layers >= layers {
        return Err(NetError::ReuseOutOfRange { reuse: reuse_layers, layers });
    }
    let dims = frame.dims();
    let mut tensors: Vec<Arc<Tensor>> = Vec::with_capacity(layers + 1);
    tensors.push(Arc::new(Tensor::from_frame(frame)));
    let mut fresh = vec![true; layers];
    if reuse_layers > 0 {
        let cache = cached.ok_or(NetError::CacheMismatch { cached: (0, 0), frame: dims, layers: 0 })?;
        if cache.dims != dims || cache.tensors.len() != layers {
            return Err(NetError::CacheMismatch { cached: cache.dims, frame: dims, layers: cache.tensors.len() });
        }
        tensors.extend(cache.tensors.into_iter().take(reuse_layers));
        fresh[..reuse_layers].fill(false);
    }
    for layer in &spec.layers()[reuse_layers..] {
        let inputs: Vec<&[f64]> = layer
            .dense_inputs
            .iter()
            .flat_map(|&t| {
                let t = &tensors[t];
                (0..t.channels).map(move |c| t.plane(c))
            })
            .collect();
        let out = match layer.kind {
            LayerKind::Conv => conv(layer, &inputs, dims),
            LayerKind::Activation => relu(&inputs, dims),
        };
        tensors.push(Arc::new(out));
    }
    let gamma = to_gamma(tensors.last().expect("at least one layer"), spec.gamma_range());
    tensors.remove(0);
    Ok((gamma, ActivationCache { dims, tensors, fresh }))
}

fn relu(inputs: &[&[f64]], (h, w): (usize, usize)) -> Tensor {
    let mut out = Tensor::zeros(inputs.len(), h, w);
    for (dst, src) in out.data.chunks_exact_mut(h * w).zip(inputs) {
        for (d, &s) in dst.iter_mut().zip(src.iter()) {
            *d = s.max(0.0);
        }
    }
    out
}

fn reflect(i: isize, n: usize) -> usize {
    if n == 1 {
        return 0;
    }
    let period = 2 * (n as isize - 1);
    let m = i.rem_euclid(period);
    (if m < n as isize { m } else { period - m }) as usize
}

/// Pads a plane by `p` on every side.
fn pad_plane(src: &[f64], h: usize, w: usize, p: usize, mode: PaddingMode) -> Vec<f64> {
    let pw = w + 2 * p;
    let mut out = vec![0.0; (h + 2 * p) * pw];
    for py in 0..h + 2 * p {
        let sy = py as isize - p as isize;
        let row = match mode {
            PaddingMode::Zeros if sy < 0 || sy >= h as isize => continue,
            PaddingMode::Zeros => sy as usize,
            PaddingMode::Reflect => reflect(sy, h),
        };
        let dst = &mut out[py * pw..(py + 1) * pw];
        dst[p..p + w].copy_from_slice(&src[row * w..(row + 1) * w]);
        if mode == PaddingMode::Reflect {
            for px in (0..p).chain(p + w..pw) {
                dst[px] = src[row * w + reflect(px as isize - p as isize, w)];
            }
        }
    }
    out
}

fn conv(layer: &LayerSpec, inputs: &[&[f64]], (h, w): (usize, usize)) -> Tensor {
    let k = layer.k;
    let p = layer.padding;
    let in_per_group = layer.cin / layer.groups;
    let out_per_group = layer.cout / layer.groups;
    let plane = h * w;
    let mut out = Tensor::zeros(layer.cout, h, w);

    let padded: Vec<Vec<f64>> = if k > 1 {
        inputs.iter().map(|src| pad_plane(src, h, w, p, layer.padding_mode)).collect()
    } else {
        Vec::new()
    };
    let pw = w + 2 * p;

    for (o, dst) in out.data.chunks_exact_mut(plane).enumerate() {
        dst.fill(layer.bias[o]);
        let group = o / out_per_group;
        for ic in 0..in_per_group {
            let c = group * in_per_group + ic;
            let kernel = &layer.weights[(o * in_per_group + ic) * k * k..][..k * k];
            if k == 1 {
                let wt = kernel[0];
                for (d, &s) in dst.iter_mut().zip(inputs[c].iter()) {
                    *d += wt * s;
                }
                continue;
            }
            let src = &padded[c];
            for ky in 0..k {
                for kx in 0..k {
                    let wt = kernel[ky * k + kx];
                    if wt == 0.0 {
                        continue;
                    }
                    for y in 0..h {
                        let s = &src[(y + ky) * pw + kx..][..w];
                        for (d, &v) in dst[y * w..(y + 1) * w].iter_mut().zip(s) {
                            *d += wt * v;
                        }
                    }
                }
            }
        }
    }
    out
}

fn to_gamma(raw: &Tensor, (lo, hi): (f64, f64)) -> GammaMap {
    let (ln_lo, ln_hi) = (lo.ln(), hi.ln());
    let plane = raw.height * raw.width;
    let mut exps = Vec::with_capacity(plane * 3);
    for i in 0..plane {
        for c in 0..3 {
            exps.push(raw.data[c * plane + i].clamp(ln_lo, ln_hi).exp().clamp(lo, hi));
        }
    }
    GammaMap::new(raw.height, raw.width, exps).expect("exponentials are positive")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curves::apply_gamma_curve;
    use crate::net::{demo_network, zero_network, DEFAULT_GAMMA_RANGE};

    fn textured(h: usize, w: usize, phase: f64) -> Frame {
        Frame::from_fn(h, w, |y, x| {
            let (y, x) = (y as f64, x as f64);
            [
                0.5 + 0.4 * ((x + phase) * 0.37).sin() * (y * 0.21).cos(),
                0.4 + 0.3 * ((x + phase) * 0.11 + y * 0.23).sin(),
                0.3 + 0.2 * ((y - phase) * 0.41).cos(),
            ]
        })
        .unwrap()
    }

    #[test]
    fn zero_weights_give_identity() {
        let f = textured(9, 13, 0.0);
        let g = forward(&zero_network(), &f);
        assert!(g.exponents().iter().all(|&e| e == 1.0));
        assert_eq!(apply_gamma_curve(&f, &g).unwrap(), f);
    }

    #[test]
    fn constant_input_gives_constant_interior() {
        let f = Frame::filled(12, 12, [0.2, 0.3, 0.4]).unwrap();
        let g = forward(&demo_network(), &f);
        let e = g.exponents();
        let at = |y: usize, x: usize, c: usize| e[(y * 12 + x) * 3 + c];
        // zero padding in block 2 only perturbs a two-pixel border
        for y in 2..10 {
            for x in 2..10 {
                for c in 0..3 {
                    assert!((at(y, x, c) - at(5, 5, c)).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn one_by_one_conv_definition() {
        let layer = LayerSpec::conv(1, 1, 1, vec![0]).with_params(vec![0.7], vec![-0.2]);
        let c = 0.4;
        let input = vec![c; 6];
        let out = conv(&layer, &[&input], (2, 3));
        assert!(out.data.iter().all(|&v| (v - (0.7 * c - 0.2)).abs() < 1e-15));
    }

    #[test]
    fn three_by_three_matches_direct_sum() {
        // independent direct evaluation with explicit bounds checks
        let (h, w) = (5, 6);
        let src: Vec<f64> = (0..h * w).map(|i| ((i * 7919) % 97) as f64 / 97.0).collect();
        let weights: Vec<f64> = (0..9).map(|i| (i as f64 - 4.0) * 0.1).collect();
        let layer = LayerSpec::conv(3, 1, 1, vec![0]).with_params(weights.clone(), vec![0.05]);
        let out = conv(&layer, &[&src], (h, w));
        for y in 0..h as isize {
            for x in 0..w as isize {
                let mut acc = 0.05;
                for ky in -1..=1isize {
                    for kx in -1..=1isize {
                        let (sy, sx) = (y + ky, x + kx);
                        if sy >= 0 && sy < h as isize && sx >= 0 && sx < w as isize {
                            acc += weights[((ky + 1) * 3 + kx + 1) as usize] * src[(sy * w as isize + sx) as usize];
                        }
                    }
                }
                assert!((out.data[(y * w as isize + x) as usize] - acc).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn reflect_indices() {
        assert_eq!(reflect(-1, 5), 1);
        assert_eq!(reflect(5, 5), 3);
        assert_eq!(reflect(-2, 5), 2);
        assert_eq!(reflect(3, 1), 0);
    }

    #[test]
    fn grouped_conv_keeps_groups_apart() {
        let mut layer = LayerSpec::conv(1, 2, 2, vec![0]).with_params(vec![2.0, 3.0], vec![0.0, 0.0]);
        layer.groups = 2;
        let a = vec![1.0; 4];
        let b = vec![10.0; 4];
        let out = conv(&layer, &[&a, &b], (2, 2));
        assert!(out.plane(0).iter().all(|&v| v == 2.0));
        assert!(out.plane(1).iter().all(|&v| v == 30.0));
    }

    #[test]
    fn gamma_is_clamped_to_range() {
        let mut layers = zero_network().layers().to_vec();
        let last = layers.last_mut().unwrap();
        last.bias = vec![-100.0, 0.0, 100.0];
        let net = NetworkSpec::new(layers, DEFAULT_GAMMA_RANGE).unwrap();
        let g = forward(&net, &textured(4, 4, 0.0));
        for px in g.exponents().chunks(3) {
            assert_eq!(px, &[0.25, 1.0, 4.0]);
        }
    }

    #[test]
    fn deterministic() {
        let f = textured(16, 20, 0.3);
        let net = demo_network();
        assert_eq!(forward(&net, &f), forward(&net, &f));
    }

    #[test]
    fn partial_without_reuse_equals_forward() {
        let net = demo_network();
        let a = textured(10, 14, 0.0);
        let b = textured(10, 14, 3.0);
        let (_, cache) = forward_partial(&net, &a, None, 0).unwrap();
        let (g, fresh) = forward_partial(&net, &b, Some(cache), 0).unwrap();
        assert_eq!(g, forward(&net, &b));
        assert!(fresh.fresh().iter().all(|&f| f));
    }

    #[test]
    fn reuse_on_same_frame_matches_full() {
        let net = demo_network();
        let f = textured(10, 14, 1.0);
        let (full, cache) = forward_partial(&net, &f, None, 0).unwrap();
        for reuse in 0..net.layer_count() {
            let (g, c) = forward_partial(&net, &f, Some(cache.clone()), reuse).unwrap();
            assert_eq!(g, full);
            assert_eq!(c.executed_layers(), net.layer_count() - reuse);
        }
    }

    #[test]
    fn deepest_reuse_recomputes_only_last_layer() {
        let net = demo_network();
        let a = textured(10, 14, 0.0);
        let b = textured(10, 14, 4.0);
        let (_, cache) = forward_partial(&net, &a, None, 0).unwrap();
        let n = net.layer_count();
        let (g, c) = forward_partial(&net, &b, Some(cache.clone()), n - 1).unwrap();
        assert_eq!(c.fresh().iter().filter(|&&f| f).count(), 1);
        assert!(c.fresh()[n - 1]);
        assert_ne!(g, forward(&net, &b));
        // reused leading tensors are carried over unchanged
        assert_eq!(c.output(0), cache.output(0));
    }

    #[test]
    fn reuse_errors() {
        let net = demo_network();
        let f = textured(6, 6, 0.0);
        assert!(matches!(
            forward_partial(&net, &f, None, net.layer_count()),
            Err(NetError::ReuseOutOfRange { .. })
        ));
        assert!(matches!(forward_partial(&net, &f, None, 2), Err(NetError::CacheMismatch { .. })));
        let (_, cache) = forward_partial(&net, &textured(8, 8, 0.0), None, 0).unwrap();
        assert!(matches!(forward_partial(&net, &f, Some(cache), 2), Err(NetError::CacheMismatch { .. })));
    }
}
