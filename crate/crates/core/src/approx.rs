//! Single-determinant approximation of the lightcone of `B = X_{⌊n/2⌋}`.
//!
//! Gates straddling the lightcone edge are replaced by a Gaussian gadget
//! (a quarter turn about `Z` on the edge qubit plus a fermionic swap of the
//! neighbour with a fresh ancilla qubit); all other gates are dropped.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::circuit::{fswap_matrix, z_rotation, Circuit};
use crate::error::{Error, Result};
use crate::gaussian::{boundary_profile_unchecked, clamp_otoc, otoc_squared};
use crate::majorana::{ModeTuple, PauliObservable, SingleParticleMatrix};

pub const DEFAULT_EPSILON: f64 = 0.2;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum EdgeSide {
    Left,
    Right,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AncillaRecord {
    /// Qubit label of the ancilla in the extended chain (`n + k`).
    pub qubit: usize,
    pub side: EdgeSide,
    /// `Z` of the ancilla when it belongs to the evolved operator, empty when
    /// the ancilla starts as the identity.
    pub z_config: ModeTuple,
}

#[derive(Clone, Debug)]
pub struct ApproxState {
    pub n: usize,
    pub u: SingleParticleMatrix,
    pub alpha: ModeTuple,
    pub ancillas: Vec<AncillaRecord>,
    pub epsilon: f64,
}

impl ApproxState {
    /// `B = X_{⌊n/2⌋}` at `t = 0`.
    pub fn new(n: usize, epsilon: f64) -> Result<Self> {
        if n < 2 {
            return Err(Error::input("the approximation needs n ≥ 2"));
        }
        if !(epsilon > 0.0) {
            return Err(Error::input(format!("epsilon must be positive, got {epsilon}")));
        }
        let alpha = PauliObservable::single_site('X', n / 2, n)?.config;
        Ok(ApproxState { n, u: DMatrix::identity(2 * n, 2 * n), alpha, ancillas: Vec::new(), epsilon })
    }

    pub fn center(&self) -> usize {
        self.n / 2
    }

    pub fn absorb_gaussian(&mut self, g: &SingleParticleMatrix) {
        let rows = self.u.nrows();
        let block = self.u.view((0, 0), (rows, 2 * self.n)) * g;
        self.u.view_mut((0, 0), (rows, 2 * self.n)).copy_from(&block);
    }

    /// `b_s` for the chain sites at the current state.
    pub fn boundary(&self) -> Vec<f64> {
        boundary_profile_unchecked(&self.u, &self.alpha.zero_based(), self.n)
    }

    /// `𝒞(Z_s, B(t))` for every chain site.
    pub fn row(&self) -> Vec<f64> {
        let alpha = self.alpha.zero_based();
        (1..=self.n).map(|s| clamp_otoc(otoc_squared(&self.u, &alpha, &[2 * s - 2, 2 * s - 1]))).collect()
    }
}

/// Replaces the gate on qubits `(j, j+1)` whose edge is on `side`.
pub fn conditional_replace(state: &mut ApproxState, j: usize, side: EdgeSide) -> Result<()> {
    let n = state.n;
    if j == 0 || j >= n {
        return Err(Error::input(format!("interaction qubit {j} outside 1..={}", n - 1)));
    }
    let modes = state.u.nrows();
    let ancilla = modes / 2 + 1;
    let (edge, neighbour) = match side {
        EdgeSide::Right => (j, j + 1),
        EdgeSide::Left => (j + 1, j),
    };
    let z_config = match side {
        EdgeSide::Right => ModeTuple::new(vec![modes + 1, modes + 2])?,
        EdgeSide::Left => ModeTuple::empty(),
    };
    let mut u = DMatrix::identity(modes + 2, modes + 2);
    u.view_mut((0, 0), (modes, modes)).copy_from(&state.u);
    u = u * z_rotation(edge, modes + 2) * fswap_matrix(neighbour, ancilla, modes + 2)?;
    state.u = u;
    state.alpha = state.alpha.union(&z_config)?;
    state.ancillas.push(AncillaRecord { qubit: ancilla, side, z_config });
    Ok(())
}

/// Which replacement, if any, the gate on `(j, j+1)` gets under boundary `b`.
pub fn classify_gate(j: usize, n: usize, b: &[f64], epsilon: f64) -> Option<EdgeSide> {
    let c = n / 2;
    if j >= c && b[j - 1] >= epsilon {
        Some(EdgeSide::Right)
    } else if j < c && b[j] >= epsilon {
        Some(EdgeSide::Left)
    } else {
        None
    }
}

/// Applies one interaction layer: boundary weights are evaluated once, then
/// each gate is replaced or dropped.
pub fn approx_step(state: &mut ApproxState, gates: &[usize]) -> Result<usize> {
    if gates.is_empty() {
        return Ok(0);
    }
    let b = state.boundary();
    let mut applied = 0;
    for &j in gates {
        if j == 0 || j >= state.n {
            return Err(Error::input(format!("interaction qubit {j} outside 1..={}", state.n - 1)));
        }
        if let Some(side) = classify_gate(j, state.n, &b, state.epsilon) {
            conditional_replace(state, j, side)?;
            applied += 1;
        }
    }
    Ok(applied)
}

#[derive(Clone, Debug)]
pub struct ApproxRun {
    pub rows: Vec<Vec<f64>>,
    pub replacements: usize,
}

/// Lightcone of `X_{⌊n/2⌋}` probed by `Z_s`, one row per slice boundary.
pub fn approx_lightcone(circuit: &Circuit, epsilon: f64) -> Result<ApproxRun> {
    let mut state = ApproxState::new(circuit.n, epsilon)?;
    let props: Vec<SingleParticleMatrix> = circuit.propagators().into_iter().flatten().collect();
    let mut layer_props = props.iter();
    let mut rows = vec![state.row()];
    let mut replacements = 0;
    for slice in circuit.slices() {
        if slice.gaussian.is_some() {
            let u = layer_props.next().expect("one propagator per Gaussian layer");
            state.absorb_gaussian(u);
        }
        replacements += approx_step(&mut state, &slice.gates)?;
        rows.push(state.row());
    }
    Ok(ApproxRun { rows, replacements })
}
