//! Two-frame motion estimation by polynomial expansion.
//!
//! Each neighbourhood is approximated by `f(p) ≈ pᵀ A p + bᵀ p + c` with a
//! Gaussian-weighted least-squares fit. A displacement `d` between two
//! signals with `f₂(p) = f₁(p - d)` satisfies `A d = -½ (b₂ - b₁)`; the
//! normal equations of that relation are averaged over a window and solved
//! per pixel, refined iteratively and coarse-to-fine.

use crate::imageio::resample_channels;

/// Tuning knobs for [`estimate_flow_with`](super::estimate_flow_with).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FarnebackParams {
    /// Pyramid levels including the full-resolution one.
    pub levels: usize,
    /// Side of the polynomial-expansion window (odd).
    pub poly_n: usize,
    pub poly_sigma: f64,
    /// Side of the box window that averages the normal equations (odd).
    pub window: usize,
    /// Refinement passes per level.
    pub iterations: usize,
}

impl Default for FarnebackParams {
    fn default() -> Self {
        Self { levels: 2, poly_n: 7, poly_sigma: 1.5, window: 15, iterations: 3 }
    }
}

/// Below this determinant the averaged system is treated as textureless.
const DEGENERATE_DET: f64 = 1e-14;

/// Expansion coefficients per pixel: `[r1 .. r6]` for
/// `r1 + r2 x + r3 y + r4 x² + r5 y² + r6 xy`.
struct Expansion {
    width: usize,
    height: usize,
    coeffs: Vec<[f64; 6]>,
}

impl Expansion {
    /// Bilinear lookup with edge clamping.
    fn sample(&self, x: f64, y: f64) -> [f64; 6] {
        let x = x.clamp(0.0, (self.width - 1) as f64);
        let y = y.clamp(0.0, (self.height - 1) as f64);
        let (x0, y0) = (x.floor() as usize, y.floor() as usize);
        let (x1, y1) = ((x0 + 1).min(self.width - 1), (y0 + 1).min(self.height - 1));
        let (fx, fy) = (x - x0 as f64, y - y0 as f64);
        let at = |yy: usize, xx: usize| &self.coeffs[yy * self.width + xx];
        let (a, b, c, d) = (at(y0, x0), at(y0, x1), at(y1, x0), at(y1, x1));
        let mut out = [0.0; 6];
        for k in 0..6 {
            let top = a[k] + (b[k] - a[k]) * fx;
            let bottom = c[k] + (d[k] - c[k]) * fx;
            out[k] = top + (bottom - top) * fy;
        }
        out
    }
}

/// Inverts a small dense matrix with Gauss-Jordan elimination and partial pivoting.
fn invert<const N: usize>(mut m: [[f64; N]; N]) -> Option<[[f64; N]; N]> {
    let mut inv = [[0.0; N]; N];
    for (i, row) in inv.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    for col in 0..N {
        let pivot = (col..N).max_by(|&a, &b| m[a][col].abs().total_cmp(&m[b][col].abs()))?;
        if m[pivot][col].abs() < 1e-15 {
            return None;
        }
        m.swap(col, pivot);
        inv.swap(col, pivot);
        let p = m[col][col];
        for k in 0..N {
            m[col][k] /= p;
            inv[col][k] /= p;
        }
        for row in 0..N {
            if row != col {
                let f = m[row][col];
                if f != 0.0 {
                    for k in 0..N {
                        m[row][k] -= f * m[col][k];
                        inv[row][k] -= f * inv[col][k];
                    }
                }
            }
        }
    }
    Some(inv)
}

/// Linear filters mapping an `n x n` neighbourhood to the six coefficients.
fn expansion_filters(n: usize, sigma: f64) -> Vec<[f64; 6]> {
    let r = (n / 2) as isize;
    let mut gram = [[0.0; 6]; 6];
    let mut taps = Vec::with_capacity(n * n);
    for dy in -r..=r {
        for dx in -r..=r {
            let (x, y) = (dx as f64, dy as f64);
            let w = (-(x * x + y * y) / (2.0 * sigma * sigma)).exp();
            let basis = [1.0, x, y, x * x, y * y, x * y];
            for i in 0..6 {
                for j in 0..6 {
                    gram[i][j] += w * basis[i] * basis[j];
                }
            }
            taps.push((w, basis));
        }
    }
    let inv = invert(gram).expect("expansion Gram matrix is positive definite");
    taps.iter()
        .map(|(w, basis)| {
            let mut f = [0.0; 6];
            for (k, fk) in f.iter_mut().enumerate() {
                *fk = w * (0..6).map(|j| inv[k][j] * basis[j]).sum::<f64>();
            }
            f
        })
        .collect()
}

fn expand(img: &[f64], height: usize, width: usize, filters: &[[f64; 6]], n: usize) -> Expansion {
    let r = (n / 2) as isize;
    let (h, w) = (height as isize, width as isize);
    let mut coeffs = vec![[0.0; 6]; height * width];
    for y in 0..h {
        for x in 0..w {
            let interior = y >= r && y < h - r && x >= r && x < w - r;
            let mut acc = [0.0; 6];
            let mut t = 0;
            for dy in -r..=r {
                let sy = if interior { y + dy } else { (y + dy).clamp(0, h - 1) };
                for dx in -r..=r {
                    let sx = if interior { x + dx } else { (x + dx).clamp(0, w - 1) };
                    let v = img[(sy * w + sx) as usize];
                    let f = &filters[t];
                    for k in 0..6 {
                        acc[k] += f[k] * v;
                    }
                    t += 1;
                }
            }
            coeffs[(y * w + x) as usize] = acc;
        }
    }
    Expansion { width, height, coeffs }
}

/// Separable box mean with replicated borders over `channels`-wide data.
fn box_mean(data: &mut [f64], height: usize, width: usize, channels: usize, window: usize) {
    let r = (window / 2) as isize;
    let norm = 1.0 / window as f64;
    let mut tmp = vec![0.0; data.len()];
    let (h, w) = (height as isize, width as isize);
    for y in 0..height {
        for x in 0..w {
            for c in 0..channels {
                let mut acc = 0.0;
                for dx in -r..=r {
                    let sx = (x + dx).clamp(0, w - 1) as usize;
                    acc += data[(y * width + sx) * channels + c];
                }
                tmp[(y * width + x as usize) * channels + c] = acc * norm;
            }
        }
    }
    for y in 0..h {
        for x in 0..width {
            for c in 0..channels {
                let mut acc = 0.0;
                for dy in -r..=r {
                    let sy = (y + dy).clamp(0, h - 1) as usize;
                    acc += tmp[(sy * width + x) * channels + c];
                }
                data[(y as usize * width + x) * channels + c] = acc * norm;
            }
        }
    }
}

/// One refinement pass: returns the new displacement field.
fn refine(first: &Expansion, second: &Expansion, flow: &[[f64; 2]], window: usize) -> Vec<[f64; 2]> {
    let (height, width) = (first.height, first.width);
    // g11, g12, g22, h1, h2
    let mut eqs = vec![0.0; height * width * 5];
    for y in 0..height {
        for x in 0..width {
            let i = y * width + x;
            let d = flow[i];
            let c1 = &first.coeffs[i];
            let c2 = second.sample(x as f64 + d[0], y as f64 + d[1]);
            let a11 = 0.5 * (c1[3] + c2[3]);
            let a22 = 0.5 * (c1[4] + c2[4]);
            let a12 = 0.25 * (c1[5] + c2[5]);
            let db1 = -0.5 * (c2[1] - c1[1]) + a11 * d[0] + a12 * d[1];
            let db2 = -0.5 * (c2[2] - c1[2]) + a12 * d[0] + a22 * d[1];
            let e = &mut eqs[i * 5..i * 5 + 5];
            e[0] = a11 * a11 + a12 * a12;
            e[1] = a11 * a12 + a12 * a22;
            e[2] = a12 * a12 + a22 * a22;
            e[3] = a11 * db1 + a12 * db2;
            e[4] = a12 * db1 + a22 * db2;
        }
    }
    box_mean(&mut eqs, height, width, 5, window);
    eqs.chunks_exact(5)
        .map(|e| {
            let det = e[0] * e[2] - e[1] * e[1];
            if det.abs() < DEGENERATE_DET {
                return [0.0, 0.0];
            }
            [(e[2] * e[3] - e[1] * e[4]) / det, (e[0] * e[4] - e[1] * e[3]) / det]
        })
        .collect()
}

/// Displacements `d` with `second(p + d) ≈ first(p)`, i.e. where each pixel of
/// `first` is found in `second`. Images are single-channel, row-major.
pub(super) fn farneback(
    first: &[f64],
    second: &[f64],
    height: usize,
    width: usize,
    params: &FarnebackParams,
) -> Vec<[f64; 2]> {
    let filters = expansion_filters(params.poly_n, params.poly_sigma);
    let min_side = params.poly_n.max(4);

    // pyramid[0] is full resolution
    let mut pyramid = vec![(first.to_vec(), second.to_vec(), height, width)];
    for _ in 1..params.levels.max(1) {
        let (a, b, h, w) = pyramid.last().expect("non-empty");
        let (nh, nw) = (h / 2, w / 2);
        if nh < min_side || nw < min_side {
            break;
        }
        let a2 = resample_channels(a, *h, *w, 1, nh, nw).expect("non-degenerate");
        let b2 = resample_channels(b, *h, *w, 1, nh, nw).expect("non-degenerate");
        pyramid.push((a2, b2, nh, nw));
    }

    let mut flow: Option<(Vec<[f64; 2]>, usize, usize)> = None;
    for (a, b, h, w) in pyramid.iter().rev() {
        let (h, w) = (*h, *w);
        let mut current = match flow.take() {
            None => vec![[0.0; 2]; h * w],
            Some((prev, ph, pw)) => {
                let flat: Vec<f64> = prev.iter().flat_map(|v| *v).collect();
                let up = resample_channels(&flat, ph, pw, 2, h, w).expect("non-degenerate");
                let (sx, sy) = (w as f64 / pw as f64, h as f64 / ph as f64);
                up.chunks_exact(2).map(|v| [v[0] * sx, v[1] * sy]).collect()
            }
        };
        let e1 = expand(a, h, w, &filters, params.poly_n);
        let e2 = expand(b, h, w, &filters, params.poly_n);
        for _ in 0..params.iterations {
            current = refine(&e1, &e2, &current, params.window);
        }
        flow = Some((current, h, w));
    }
    flow.expect("at least one level").0
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn filters_recover_exact_quadratics() {
        let n = 7;
        let filters = expansion_filters(n, 1.5);
        let poly = |x: f64, y: f64| 0.3 + 0.2 * x - 0.1 * y + 0.05 * x * x + 0.02 * y * y - 0.03 * x * y;
        let mut coeffs = [0.0; 6];
        let mut t = 0;
        for dy in -3..=3 {
            for dx in -3..=3 {
                let v = poly(dx as f64, dy as f64);
                for k in 0..6 {
                    coeffs[k] += filters[t][k] * v;
                }
                t += 1;
            }
        }
        let expected = [0.3, 0.2, -0.1, 0.05, 0.02, -0.03];
        for k in 0..6 {
            assert!((coeffs[k] - expected[k]).abs() < 1e-12, "{k}: {} vs {}", coeffs[k], expected[k]);
        }
    }

    #[test]
    fn invert_small_matrix() {
        let inv = invert([[4.0, 7.0], [2.0, 6.0]]).unwrap();
        let expected = [[0.6, -0.7], [-0.2, 0.4]];
        for i in 0..2 {
            for j in 0..2 {
                assert!((inv[i][j] - expected[i][j]).abs() < 1e-12);
            }
        }
        assert!(invert([[1.0, 2.0], [2.0, 4.0]]).is_none());
    }

    #[test]
    fn box_mean_of_constant_is_constant() {
        let mut d = vec![2.5; 6 * 7 * 2];
        box_mean(&mut d, 6, 7, 2, 5);
        assert!(d.iter().all(|&v| (v - 2.5).abs() < 1e-12));
    }
}
