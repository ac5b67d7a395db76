//! One-dimensional quadrature rules.
//!
//! An adaptive Gauss–Kronrod (7/15) integrator for the slice volume
//! oracle, and a fixed Gauss–Legendre rule used to build product weights.

const GK_NODES: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];

const GK_WEIGHTS: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];

// Gauss weights for the odd-indexed Kronrod nodes.
const G_WEIGHTS: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

const GL8_NODES: [f64; 4] = [
    0.183_434_642_495_649_8,
    0.525_532_409_916_329,
    0.796_666_477_413_626_7,
    0.960_289_856_497_536_3,
];

const GL8_WEIGHTS: [f64; 4] = [
    0.362_683_783_378_362,
    0.313_706_645_877_887_3,
    0.222_381_034_453_374_5,
    0.101_228_536_290_376_3,
];

const MAX_DEPTH: usize = 48;

/// Result of a Gauss–Kronrod panel: (kronrod estimate, error estimate).
fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = fc * GK_WEIGHTS[7];
    let mut gauss = fc * G_WEIGHTS[3];
    for j in 0..7 {
        let dx = half * GK_NODES[j];
        let pair = f(center - dx) + f(center + dx);
        kronrod += GK_WEIGHTS[j] * pair;
        if j % 2 == 1 {
            gauss += G_WEIGHTS[j / 2] * pair;
        }
    }
    (kronrod * half, ((kronrod - gauss) * half).abs())
}

/// Adaptive Gauss–Kronrod integration of `f` over `[a, b]`.
///
/// Panels are bisected until each error estimate is below
/// `max(rel_tol * |I_panel|, abs_tol * width / (b - a))`.
pub fn integrate_adaptive<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    rel_tol: f64,
    abs_tol: f64,
) -> f64 {
    if a == b {
        return 0.0;
    }
    let total_width = (b - a).abs();
    let mut stack = vec![(a, b, 0usize)];
    let mut sum = 0.0;
    // Kahan compensation keeps summation error well below the panel tolerance.
    let mut carry = 0.0;
    while let Some((lo, hi, depth)) = stack.pop() {
        let (value, err) = gk15(&f, lo, hi);
        let local_abs = abs_tol * (hi - lo).abs() / total_width;
        if err <= (rel_tol * value.abs()).max(local_abs) || depth >= MAX_DEPTH {
            let y = value - carry;
            let t = sum + y;
            carry = (t - sum) - y;
            sum = t;
        } else {
            let mid = 0.5 * (lo + hi);
            stack.push((mid, hi, depth + 1));
            stack.push((lo, mid, depth + 1));
        }
    }
    sum
}

/// Eight-point Gauss–Legendre rule on `[a, b]`.
pub fn gauss_legendre8<F: Fn(f64) -> f64>(f: F, a: f64, b: f64) -> f64 {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let mut acc = 0.0;
    for (x, w) in GL8_NODES.iter().zip(GL8_WEIGHTS.iter()) {
        acc += w * (f(center - half * x) + f(center + half * x));
    }
    acc * half
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn adaptive_integrates_polynomials_and_exponentials() {
        let v = integrate_adaptive(|x| x * x, 0.0, 3.0, 1e-13, 1e-15);
        assert!((v - 9.0).abs() < 1e-13);
        let e = integrate_adaptive(f64::exp, 0.0, 5.0, 1e-13, 1e-15);
        assert!((e - (5f64.exp() - 1.0)).abs() / e < 1e-13);
    }

    #[test]
    fn adaptive_handles_sharp_features() {
        let v = integrate_adaptive(|x| 1.0 / (1e-4 + x * x), -1.0, 1.0, 1e-12, 1e-14);
        let exact = 2.0 * (1.0 / 1e-2) * (1.0f64 / 1e-2).atan();
        assert!((v - exact).abs() / exact < 1e-11, "{v} vs {exact}");
    }

    #[test]
    fn gauss_legendre_exact_for_degree_15() {
        let v = gauss_legendre8(|x| x.powi(15) + x.powi(14), -1.0, 2.0);
        let exact = (2f64.powi(16) - 1.0) / 16.0 + (2f64.powi(15) + 1.0) / 15.0;
        assert!((v - exact).abs() / exact < 1e-13);
    }
}
