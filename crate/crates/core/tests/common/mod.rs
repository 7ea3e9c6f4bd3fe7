#![allow(dead_code)]

use dcmax_core::rng::Stream;
use dcmax_core::{build_piecewise_affine_model, Dataset, DifferenceMaxModel};

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn normal_vec(rng: &mut Stream, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.normal()).collect()
}

/// Phase data with unit-norm features: `z = |x̄ᵀξ| + σ·e`.
pub fn phase_data(seed: u64, signal: &[f64], sigma: f64, n: usize) -> Dataset {
    let p = signal.len();
    let mut rng = Stream::new(seed, 7);
    let mut rows = Vec::with_capacity(n);
    let mut z = Vec::with_capacity(n);
    for _ in 0..n {
        let mut v = normal_vec(&mut rng, p);
        let s = norm(&v);
        v.iter_mut().for_each(|e| *e /= s);
        z.push(dot(&v, signal).abs() + sigma * rng.normal());
        rows.push(v);
    }
    Dataset::from_rows(&rows, z).unwrap()
}

/// A random piecewise-affine regression instance with its parameter.
pub fn affine_instance(seed: u64, k_f: usize, k_g: usize, d: usize, n: usize) -> (DifferenceMaxModel, Dataset, Vec<f64>) {
    let model = build_piecewise_affine_model(k_f, k_g, d).unwrap();
    let mut rng = Stream::new(seed, 11);
    let rows: Vec<Vec<f64>> = (0..n).map(|_| normal_vec(&mut rng, d)).collect();
    let z = normal_vec(&mut rng, n);
    let x = normal_vec(&mut rng, model.param_dim);
    (model, Dataset::from_rows(&rows, z).unwrap(), x)
}

/// `max_j (aʲᵀξ + αⱼ) − max_j (bʲᵀξ + βⱼ)` from the packed parameter.
pub fn affine_model_oracle(x: &[f64], xi: &[f64], k_f: usize, k_g: usize) -> f64 {
    let d = xi.len();
    let piece = |j: usize| {
        let b = &x[j * (d + 1)..(j + 1) * (d + 1)];
        dot(&b[..d], xi) + b[d]
    };
    let f = (0..k_f).map(piece).fold(f64::NEG_INFINITY, f64::max);
    let g = (k_f..k_f + k_g).map(piece).fold(f64::NEG_INFINITY, f64::max);
    f - g
}
