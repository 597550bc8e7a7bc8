use super::{LayerSpec, NetworkSpec, PaddingMode, DEFAULT_GAMMA_RANGE};

/// The three-block topology with the given parameters, in layer order.
///
/// block 1: 1x1 conv 3→1, 3x3 conv 1→1 (reflect-padded)
/// block 2: 1x1 conv [rgb, block 1]→1, 3x3 conv 1→1 (zero-padded)
/// block 3: 1x1 conv [rgb, block 2]→3
///
/// Hidden convolutions are each followed by a ReLU layer, so the block
/// outputs feeding the dense links are tensors 4 and 8.
fn three_block(params: [(Vec<f64>, Vec<f64>); 5]) -> NetworkSpec {
    let [p1, p2, p3, p4, p5] = params;
    let layers = vec![
        LayerSpec::conv(1, 3, 1, vec![0]).with_params(p1.0, p1.1),
        LayerSpec::relu(1, 1),
        LayerSpec::conv(3, 1, 1, vec![2]).with_padding_mode(PaddingMode::Reflect).with_params(p2.0, p2.1),
        LayerSpec::relu(1, 3),
        LayerSpec::conv(1, 4, 1, vec![0, 4]).with_params(p3.0, p3.1),
        LayerSpec::relu(1, 5),
        LayerSpec::conv(3, 1, 1, vec![6]).with_params(p4.0, p4.1),
        LayerSpec::relu(1, 7),
        LayerSpec::conv(1, 4, 3, vec![0, 8]).with_params(p5.0, p5.1),
    ];
    NetworkSpec::new(layers, DEFAULT_GAMMA_RANGE).expect("three-block topology is well formed")
}

/// The three-block topology with all weights and biases zero; maps every
/// frame to `Γ = 1`.
pub fn zero_network() -> NetworkSpec {
    three_block([
        (vec![0.0; 3], vec![0.0]),
        (vec![0.0; 9], vec![0.0]),
        (vec![0.0; 4], vec![0.0]),
        (vec![0.0; 9], vec![0.0]),
        (vec![0.0; 12], vec![0.0; 3]),
    ])
}

/// Hand-set weights: exponents follow a smoothed local luminance, so dark
/// regions get `Γ < 1` and bright regions `Γ > 1`.
pub fn demo_network() -> NetworkSpec {
    let blur = vec![1.0 / 9.0; 9];
    let mut head = Vec::with_capacity(12);
    for c in 0..3 {
        let mut row = vec![0.0; 4];
        row[c] = 0.05;
        row[3] = 2.0;
        head.extend(row);
    }
    three_block([
        (vec![0.299, 0.587, 0.114], vec![0.0]),
        (blur.clone(), vec![0.0]),
        (vec![0.1, 0.1, 0.1, 0.7], vec![0.0]),
        (blur, vec![0.0]),
        (head, vec![-1.2; 3]),
    ])
}
