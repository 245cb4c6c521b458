#![allow(dead_code)]

use nalgebra::DMatrix;
use otoc_core::circuit::{build_xy_generator, Circuit, CircuitLayer, GaussianGenerator};
use otoc_core::majorana::{combinations, jordan_wigner_decode, minor, ModeTuple, PauliObservable, Phase};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn normal(rng: &mut impl Rng) -> f64 {
    // Box-Muller
    let u1: f64 = rng.random::<f64>().max(1e-300);
    let u2: f64 = rng.random();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

/// Haar-ish orthogonal matrix from the QR factor of a Gaussian matrix.
pub fn random_orthogonal(k: usize, rng: &mut impl Rng) -> DMatrix<f64> {
    let g = DMatrix::from_fn(k, k, |_, _| normal(rng));
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for c in 0..k {
        if r[(c, c)] < 0.0 {
            q.column_mut(c).scale_mut(-1.0);
        }
    }
    q
}

pub fn random_antisymmetric(k: usize, rng: &mut impl Rng) -> DMatrix<f64> {
    let a = DMatrix::from_fn(k, k, |_, _| normal(rng));
    (&a - a.transpose()) * 0.5
}

pub fn random_nu(n: usize, strength: f64, rng: &mut impl Rng) -> Vec<f64> {
    (0..n).map(|_| strength * (2.0 * rng.random::<f64>() - 1.0)).collect()
}

pub fn random_generator(n: usize, rng: &mut impl Rng) -> GaussianGenerator {
    let dt = 0.2 + rng.random::<f64>();
    GaussianGenerator::new(random_antisymmetric(2 * n, rng), dt).unwrap()
}

/// `layers` random Gaussian layers with `gates` interaction gates scattered
/// between them at random qubits.
pub fn random_circuit(n: usize, layers: usize, gates: usize, rng: &mut impl Rng) -> Circuit {
    let mut slots = vec![0usize; layers + 1];
    for _ in 0..gates {
        slots[rng.random_range(0..=layers)] += 1;
    }
    let mut out = Vec::new();
    for (k, &count) in slots.iter().enumerate() {
        for _ in 0..count {
            out.push(CircuitLayer::Interaction(rng.random_range(1..n)));
        }
        if k < layers {
            out.push(CircuitLayer::Gaussian(random_generator(n, rng)));
        }
    }
    Circuit::new(n, out).unwrap()
}

/// Like `random_circuit` but with XY layers of random disorder in `[0, ν_max]`.
pub fn random_xy_circuit(n: usize, layers: usize, gates: usize, nu_max: f64, rng: &mut impl Rng) -> Circuit {
    let nu = rng.random::<f64>() * nu_max;
    let g = build_xy_generator(n, &random_nu(n, nu, rng), 0.2 + rng.random::<f64>()).unwrap();
    let mut c = random_circuit(n, layers, gates, rng);
    for layer in &mut c.layers {
        if let CircuitLayer::Gaussian(h) = layer {
            *h = g.clone();
        }
    }
    c
}

pub fn assert_close(a: f64, b: f64, tol: f64, what: &str) {
    assert!((a - b).abs() <= tol, "{what}: {a} vs {b} (|Δ| = {:.3e})", (a - b).abs());
}

pub fn propagator(circuit: &Circuit) -> DMatrix<f64> {
    let mut u = DMatrix::identity(2 * circuit.n, 2 * circuit.n);
    for p in circuit.propagators().into_iter().flatten() {
        u *= p;
    }
    u
}

pub fn all_tuples(modes: usize, k: usize) -> Vec<ModeTuple> {
    let items: Vec<usize> = (1..=modes).collect();
    combinations(&items, k).into_iter().map(|v| ModeTuple::new(v).unwrap()).collect()
}

/// `b_s²` by enumerating every configuration and decoding it to a Pauli string.
pub fn enumerated_boundary(u: &DMatrix<f64>, alpha: &ModeTuple, n: usize) -> Vec<f64> {
    let c = n / 2;
    let mut right = vec![0.0; n];
    let mut left = vec![0.0; n];
    for beta in all_tuples(2 * n, alpha.len()) {
        let w = minor(u, alpha, &beta).unwrap().powi(2);
        let obs = PauliObservable { phase: Phase::ONE, config: beta };
        let (letters, _) = jordan_wigner_decode(&obs, n).unwrap();
        let edge = |s: usize| matches!(letters[s], 'X' | 'Y');
        if let Some(s) = letters.iter().rposition(|&l| l != 'I') {
            if edge(s) {
                right[s] += w;
            }
        }
        if let Some(s) = letters.iter().position(|&l| l != 'I') {
            if edge(s) {
                left[s] += w;
            }
        }
    }
    (1..=n)
        .map(|s| {
            let (r, l) = (right[s - 1].sqrt(), left[s - 1].sqrt());
            if s > c {
                r
            } else if s < c {
                l
            } else {
                r.max(l)
            }
        })
        .collect()
}
