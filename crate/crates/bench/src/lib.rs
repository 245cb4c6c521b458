//! Fixtures shared by the criterion benches.

use otoc_core::circuit::{alternating_circuit_for, DisorderRealization, DEFAULT_DT};
use otoc_core::{Circuit, CircuitLayer};

/// Alternating circuit with disorder strength `nu` and a fixed seed.
pub fn alternating(n: usize, nu: f64, periods: usize, interactions: bool) -> Circuit {
    let d = DisorderRealization::draw(n, nu, 7, 0).expect("valid disorder");
    alternating_circuit_for(&d, DEFAULT_DT, periods, interactions).expect("valid circuit")
}

/// Gaussian layers with exactly `g` interaction gates spread through them.
pub fn few_gates(n: usize, g: usize) -> Circuit {
    let base = alternating(n, 1.0, g + 1, false);
    let mut layers = Vec::new();
    for (k, layer) in base.layers.into_iter().enumerate() {
        layers.push(layer);
        if k % 2 == 1 && layers.iter().filter(|l| matches!(l, CircuitLayer::Interaction(_))).count() < g {
            layers.push(CircuitLayer::Interaction(n / 2 + k % 3));
        }
    }
    Circuit::new(n, layers).expect("valid circuit")
}
