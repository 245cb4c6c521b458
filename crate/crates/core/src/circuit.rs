//! Disordered XY Gaussian layers, interaction gates and the alternating circuit.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;
use crate::majorana::SingleParticleMatrix;

/// Scale between the coupling matrix `T` of `H = −i Σ_{μ<ν} T_{μν} c_μ c_ν`
/// and the single-particle propagator `u = exp(HEISENBERG_SCALE · δt · T)`,
/// defined by `L c_μ L† = Σ_ν u_{μν} c_ν` for `L = exp(−iHδt)`.
///
/// This is the one place the conjugation orientation is fixed. With it,
/// propagators compose by right multiplication in time order: the amplitude
/// of `C_β` in `U C_α U†` is `det (u_1 ⋯ u_T)_{αβ}`.
pub const HEISENBERG_SCALE: f64 = 2.0;

pub const DEFAULT_DT: f64 = std::f64::consts::FRAC_PI_4;

/// Couplings of a quadratic Hamiltonian plus the time it acts for.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaussianGenerator {
    pub h: DMatrix<f64>,
    pub duration: f64,
}

impl GaussianGenerator {
    pub fn new(h: DMatrix<f64>, duration: f64) -> Result<Self> {
        if !h.is_square() || h.nrows() % 2 != 0 {
            return Err(Error::input("generator must be square with an even mode count"));
        }
        let skew = (&h + h.transpose()).amax();
        if skew > 1e-12 {
            return Err(Error::input(format!("generator is not antisymmetric ({skew:.3e})")));
        }
        Ok(GaussianGenerator { h, duration })
    }

    pub fn modes(&self) -> usize {
        self.h.nrows()
    }

    pub fn qubits(&self) -> usize {
        self.h.nrows() / 2
    }

    /// Whether `H` is real in the computational basis, i.e. couples only
    /// modes of opposite parity. The layer unitary is then symmetric.
    pub fn is_real(&self) -> bool {
        let k = self.h.nrows();
        (0..k).all(|a| (a % 2..k).step_by(2).all(|b| self.h[(a, b)] == 0.0))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum CircuitLayer {
    Gaussian(GaussianGenerator),
    /// `exp(−iπ/4 Z_j Z_{j+1})` on modes `(2j−1, 2j, 2j+1, 2j+2)`.
    Interaction(usize),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Circuit {
    pub n: usize,
    pub layers: Vec<CircuitLayer>,
}

impl Circuit {
    pub fn new(n: usize, layers: Vec<CircuitLayer>) -> Result<Self> {
        if n == 0 {
            return Err(Error::input("circuit needs at least one qubit"));
        }
        for layer in &layers {
            match layer {
                CircuitLayer::Gaussian(g) if g.modes() != 2 * n => {
                    return Err(Error::input(format!("Gaussian layer has {} modes, expected {}", g.modes(), 2 * n)))
                }
                CircuitLayer::Interaction(j) if *j == 0 || *j >= n => {
                    return Err(Error::input(format!("interaction qubit {j} outside 1..={}", n - 1)))
                }
                _ => {}
            }
        }
        Ok(Circuit { n, layers })
    }

    pub fn interaction_count(&self) -> usize {
        self.layers.iter().filter(|l| matches!(l, CircuitLayer::Interaction(_))).count()
    }

    /// Same circuit with every interaction gate removed.
    pub fn without_interactions(&self) -> Circuit {
        Circuit {
            n: self.n,
            layers: self.layers.iter().filter(|l| matches!(l, CircuitLayer::Gaussian(_))).cloned().collect(),
        }
    }

    /// Time slices: each Gaussian layer together with the interaction gates
    /// that follow it. Leading gates form a zero-duration first slice.
    pub fn slices(&self) -> Vec<Slice<'_>> {
        let mut out: Vec<Slice<'_>> = Vec::new();
        for layer in &self.layers {
            match layer {
                CircuitLayer::Gaussian(g) => out.push(Slice { gaussian: Some(g), gates: Vec::new() }),
                CircuitLayer::Interaction(j) => match out.last_mut() {
                    Some(s) => s.gates.push(*j),
                    None => out.push(Slice { gaussian: None, gates: vec![*j] }),
                },
            }
        }
        out
    }

    /// Times at the end of each slice, preceded by `t = 0`.
    pub fn slice_times(&self) -> Vec<f64> {
        let mut t = 0.0;
        let mut times = vec![0.0];
        for s in self.slices() {
            if let Some(g) = s.gaussian {
                t += g.duration;
            }
            times.push(t);
        }
        times
    }

    /// Layer order reversed. For these circuits every layer unitary is
    /// symmetric, so this is the transpose of the full unitary.
    /// Whether every layer unitary equals its transpose.
    pub fn is_symmetric(&self) -> bool {
        self.layers.iter().all(|l| match l {
            CircuitLayer::Gaussian(g) => g.is_real(),
            CircuitLayer::Interaction(_) => true,
        })
    }

    pub fn reversed(&self) -> Circuit {
        Circuit { n: self.n, layers: self.layers.iter().rev().cloned().collect() }
    }

    /// Propagators for the Gaussian layers, reusing the previous one when the
    /// generator repeats.
    pub fn propagators(&self) -> Vec<Option<SingleParticleMatrix>> {
        let mut last: Option<(&GaussianGenerator, SingleParticleMatrix)> = None;
        let mut out = Vec::with_capacity(self.layers.len());
        for layer in &self.layers {
            match layer {
                CircuitLayer::Gaussian(g) => {
                    let u = match &last {
                        Some((prev, u)) if *prev == g => u.clone(),
                        _ => exponentiate_generator(g),
                    };
                    last = Some((g, u.clone()));
                    out.push(Some(u));
                }
                CircuitLayer::Interaction(_) => out.push(None),
            }
        }
        out
    }
}

pub struct Slice<'a> {
    pub gaussian: Option<&'a GaussianGenerator>,
    pub gates: Vec<usize>,
}

/// One draw of the local potentials `ν_j ∈ [−ν, ν]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DisorderRealization {
    pub nu_values: Vec<f64>,
    pub strength: f64,
    pub seed: u64,
    pub index: u64,
}

impl DisorderRealization {
    /// Site `j` of realization `index` reads its own counter block of the
    /// ChaCha stream keyed by `seed`, so draws do not depend on evaluation order.
    pub fn draw(n: usize, strength: f64, seed: u64, index: u64) -> Result<Self> {
        if !(strength >= 0.0) || !strength.is_finite() {
            return Err(Error::input(format!("disorder strength must be finite and ≥ 0, got {strength}")));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(index);
        let nu_values = (0..n)
            .map(|site| {
                rng.set_word_pos(16 * site as u128);
                let x: f64 = rng.random();
                strength * (2.0 * x - 1.0)
            })
            .collect();
        Ok(DisorderRealization { nu_values, strength, seed, index })
    }
}

/// Couplings of `H_XY = Σ_j (X_j X_{j+1} + Y_j Y_{j+1}) + Σ_j ν_j Z_j`.
pub fn build_xy_generator(n: usize, nu_values: &[f64], dt: f64) -> Result<GaussianGenerator> {
    if n < 2 {
        return Err(Error::input("the XY chain needs n ≥ 2"));
    }
    if nu_values.len() != n {
        return Err(Error::input(format!("{} potentials for {n} qubits", nu_values.len())));
    }
    let mut h = DMatrix::<f64>::zeros(2 * n, 2 * n);
    let mut add = |a: usize, b: usize, v: f64| {
        h[(a - 1, b - 1)] += v;
        h[(b - 1, a - 1)] -= v;
    };
    for j in 1..n {
        add(2 * j, 2 * j + 1, 1.0);
        add(2 * j - 1, 2 * j + 2, -1.0);
    }
    for j in 1..=n {
        add(2 * j - 1, 2 * j, nu_values[j - 1]);
    }
    GaussianGenerator::new(h, dt)
}

/// `exp(HEISENBERG_SCALE · δt · h)`, re-projected onto the orthogonal group
/// if round-off drifts past 1e-12.
pub fn exponentiate_generator(g: &GaussianGenerator) -> SingleParticleMatrix {
    let a = &g.h * (HEISENBERG_SCALE * g.duration);
    let u = a.exp();
    let defect = linalg::orthogonality_defect(&u);
    if defect > 1e-12 {
        log::warn!("propagator orthogonality drift {defect:.2e}; re-projecting");
        return linalg::reproject_orthogonal(&u);
    }
    u
}

/// Propagator of `exp(−iπ/4 Z_e)` on `mode_count` modes: a quarter turn in the
/// `(2e−1, 2e)` plane.
pub fn z_rotation(e: usize, mode_count: usize) -> SingleParticleMatrix {
    let mut u = DMatrix::identity(mode_count, mode_count);
    let (a, b) = (2 * e - 2, 2 * e - 1);
    u[(a, a)] = 0.0;
    u[(b, b)] = 0.0;
    u[(a, b)] = -1.0;
    u[(b, a)] = 1.0;
    u
}

/// Fermionic swap of qubits `j` and `k`: `c_{2j−1} ↔ c_{2k−1}`, `c_{2j} ↔ c_{2k}`.
pub fn fswap_matrix(j: usize, k: usize, mode_count: usize) -> Result<SingleParticleMatrix> {
    if j == k {
        return Err(Error::input("fermionic swap needs two distinct qubits"));
    }
    if j == 0 || k == 0 || 2 * j.max(k) > mode_count {
        return Err(Error::input(format!("swap ({j},{k}) out of range for {mode_count} modes")));
    }
    let mut u = DMatrix::identity(mode_count, mode_count);
    u.swap_rows(2 * j - 2, 2 * k - 2);
    u.swap_rows(2 * j - 1, 2 * k - 1);
    Ok(u)
}

/// Gate positions of the two alternating interaction layers.
pub fn interaction_layer(n: usize, odd: bool) -> Vec<usize> {
    let start = if odd { 1 } else { 2 };
    (start..n).step_by(2).collect()
}

/// `[G, V₁V₃⋯, G, V₂V₄⋯]` repeated `num_periods` times with one disorder draw.
pub fn build_alternating_circuit(
    n: usize,
    nu: f64,
    dt: f64,
    num_periods: usize,
    seed: u64,
) -> Result<(Circuit, DisorderRealization)> {
    let disorder = DisorderRealization::draw(n, nu, seed, 0)?;
    let circuit = alternating_circuit_for(&disorder, dt, num_periods, true)?;
    Ok((circuit, disorder))
}

pub fn alternating_circuit_for(
    disorder: &DisorderRealization,
    dt: f64,
    num_periods: usize,
    interactions: bool,
) -> Result<Circuit> {
    let n = disorder.nu_values.len();
    if n < 4 {
        return Err(Error::input("the alternating circuit needs n ≥ 4"));
    }
    if n % 2 == 1 {
        return Err(Error::input("the alternating circuit is defined for even n only"));
    }
    if num_periods == 0 {
        return Err(Error::input("num_periods must be ≥ 1"));
    }
    let g = build_xy_generator(n, &disorder.nu_values, dt)?;
    let mut layers = Vec::new();
    for _ in 0..num_periods {
        for odd in [true, false] {
            layers.push(CircuitLayer::Gaussian(g.clone()));
            if interactions {
                layers.extend(interaction_layer(n, odd).into_iter().map(CircuitLayer::Interaction));
            }
        }
    }
    Circuit::new(n, layers)
}

/// Gaussian layers of duration `dt` with gates inserted after the layer that
/// ends at each requested time.
pub fn gaussian_circuit_with_gates(
    disorder: &DisorderRealization,
    dt: f64,
    num_layers: usize,
    gates: &[(usize, usize)],
) -> Result<Circuit> {
    let n = disorder.nu_values.len();
    let g = build_xy_generator(n, &disorder.nu_values, dt)?;
    let mut layers = Vec::new();
    for k in 1..=num_layers {
        layers.push(CircuitLayer::Gaussian(g.clone()));
        for &(q, after) in gates {
            if after == k {
                layers.push(CircuitLayer::Interaction(q));
            }
        }
    }
    if let Some(&(_, after)) = gates.iter().find(|(_, a)| *a == 0 || *a > num_layers) {
        return Err(Error::input(format!("gate after layer {after} outside 1..={num_layers}")));
    }
    Circuit::new(n, layers)
}
