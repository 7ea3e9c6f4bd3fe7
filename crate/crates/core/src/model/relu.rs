use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::dot;
use crate::math::plus;

/// Widths above this would enumerate more than 3¹⁰ index patterns.
pub const MAX_RELU_WIDTH: usize = 10;

/// The network output together with the two convex parts of its
/// difference-of-convex representation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReluSplit {
    pub total: f64,
    pub f_value: f64,
    pub g_value: f64,
}

/// Evaluates `max(bᵀ max(Aξ, 0) + β, 0)` and its split `f − g`.
///
/// With `u = max(Aξ, 0)` and `T± = ‖max(±b, Aξ, ±b + Aξ, 0)‖²`, where each
/// `T±` is computed as the maximum over all `3ᵏ` choices of one squared-plus
/// term per hidden unit,
///
/// ```text
/// f = ½ max(T₊ + ‖max(−b, 0)‖² + 2β,  T₋ + ‖max(b, 0)‖²)
/// g = ½ (T₋ + ‖max(b, 0)‖²)
/// ```
///
/// `a` is the `k × d` weight matrix, row-major; a bias column can be folded
/// in by appending a constant feature.
pub fn relu_two_layer_value(b: &[f64], a: &[f64], beta: f64, xi: &[f64]) -> Result<ReluSplit> {
    let k = b.len();
    if k == 0 {
        return Err(Error::InvalidSize(alloc::string::String::from("hidden width must be positive")));
    }
    if k > MAX_RELU_WIDTH {
        return Err(Error::WidthTooLarge { width: k, max: MAX_RELU_WIDTH });
    }
    let d = xi.len();
    if a.len() != k * d {
        return Err(Error::DimensionMismatch { expected: k * d, found: a.len() });
    }
    let pre: Vec<f64> = (0..k).map(|i| dot(&a[i * d..(i + 1) * d], xi)).collect();
    let total = plus(b.iter().zip(&pre).map(|(bi, ai)| bi * plus(*ai)).sum::<f64>() + beta);

    let terms = |sign: f64| -> Vec<[f64; 3]> {
        (0..k)
            .map(|i| {
                let sb = plus(sign * b[i]);
                let sa = plus(pre[i]);
                let sc = plus(sign * b[i] + pre[i]);
                [sb * sb, sa * sa, sc * sc]
            })
            .collect()
    };
    let t_plus = max_over_patterns(&terms(1.0));
    let t_minus = max_over_patterns(&terms(-1.0));
    let b_pos: f64 = b.iter().map(|v| plus(*v) * plus(*v)).sum();
    let b_neg: f64 = b.iter().map(|v| plus(-v) * plus(-v)).sum();

    let g_value = 0.5 * (t_minus + b_pos);
    let f_value = 0.5 * (t_plus + b_neg + 2.0 * beta).max(t_minus + b_pos);
    Ok(ReluSplit { total, f_value, g_value })
}

/// `max over λ ∈ Δ of Σᵢ term[i][λᵢ]`, by explicit enumeration of the `3ᵏ`
/// patterns.
fn max_over_patterns(terms: &[[f64; 3]]) -> f64 {
    let k = terms.len();
    let count = 3usize.pow(k as u32);
    let mut best = f64::NEG_INFINITY;
    for code in 0..count {
        let mut c = code;
        let mut s = 0.0;
        for t in terms {
            s += t[c % 3];
            c /= 3;
        }
        best = best.max(s);
    }
    debug_assert!(k > 0);
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_network() {
        let r = relu_two_layer_value(&[0.0, 0.0], &[1.0, -1.0, 2.0, 0.5], 0.0, &[1.0, 2.0]).unwrap();
        assert_eq!(r.total, 0.0);
        assert_eq!(r.f_value, r.g_value);
    }

    #[test]
    fn scalar_network() {
        let r = relu_two_layer_value(&[1.0], &[1.0], 0.0, &[2.0]).unwrap();
        assert_eq!(r.total, 2.0);
        assert!((r.f_value - r.g_value - 2.0).abs() < 1e-12);
    }

    #[test]
    fn width_cap() {
        let b = [1.0; 11];
        let a = [1.0; 11];
        assert_eq!(
            relu_two_layer_value(&b, &a, 0.0, &[1.0]),
            Err(Error::WidthTooLarge { width: 11, max: 10 })
        );
    }
}
