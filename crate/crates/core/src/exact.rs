//! Exact correlator for circuits with a handful of interaction gates: a
//! signed sum of minors of one assembled orthogonal matrix.
//!
//! Every gate adds four ancilla modes in front of the current ones. After all
//! layers are absorbed, a kernel `K` is formed from the assembled matrix and
//! the probe, and `1 − 2𝒞²` is the sum over per-gate subset pairs `(β_i, β′_i)`
//! of `±det K[rows, cols]`.

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::circuit::{Circuit, CircuitLayer};
use crate::error::{Error, Result};
use crate::gaussian::{clamp_otoc, probe_configs};
use crate::linalg;
use crate::majorana::{ModeTuple, PauliObservable, SingleParticleMatrix};

pub const DEFAULT_MAX_GATES: usize = 6;

/// Outer-loop chunk for the parallel sum. Fixed so the reduction tree does
/// not depend on the thread count.
const CHUNK: usize = 32;

#[derive(Clone, Debug)]
pub struct AssembledEvolution {
    pub n: usize,
    pub m: SingleParticleMatrix,
    /// Number of ancilla modes, `4g`.
    pub ancillas: usize,
    /// Gate qubits, newest first, matching the ancilla block order.
    pub gates: Vec<usize>,
}

impl AssembledEvolution {
    pub fn new(n: usize) -> Self {
        AssembledEvolution { n, m: DMatrix::identity(2 * n, 2 * n), ancillas: 0, gates: Vec::new() }
    }

    pub fn gate_count(&self) -> usize {
        self.gates.len()
    }

    /// Ancilla modes, 1-based.
    pub fn ancilla_modes(&self) -> ModeTuple {
        ModeTuple::range(1, self.ancillas)
    }

    /// Gate quadruples in ancilla coordinates, newest gate first.
    pub fn gate_records(&self) -> Vec<ModeTuple> {
        (0..self.gate_count()).map(|i| ModeTuple::range(4 * i + 1, 4 * i + 4)).collect()
    }

    /// `u_(j) = u_(j−1) (I_A ⊕ u)`.
    pub fn absorb_gaussian(&mut self, u: &SingleParticleMatrix) -> Result<()> {
        if u.nrows() != 2 * self.n || u.ncols() != 2 * self.n {
            return Err(Error::input(format!(
                "Gaussian layer is {}×{}, expected {}×{}",
                u.nrows(),
                u.ncols(),
                2 * self.n,
                2 * self.n
            )));
        }
        let a = self.ancillas;
        let rows = self.m.nrows();
        let block = self.m.view((0, a), (rows, 2 * self.n)) * u;
        self.m.view_mut((0, a), (rows, 2 * self.n)).copy_from(&block);
        Ok(())
    }

    /// Prepends four ancilla modes for a gate on qubit `j`: the new first rows
    /// pick out the gate's modes, and the gate columns of the old matrix move
    /// into the new ancilla columns.
    pub fn extend_with_interaction(&mut self, j: usize) -> Result<()> {
        if j == 0 || j >= self.n {
            return Err(Error::input(format!("interaction qubit {j} outside 1..={}", self.n - 1)));
        }
        let a = self.ancillas;
        let size = self.m.nrows();
        let q: Vec<usize> = (0..4).map(|t| a + 2 * j - 2 + t).collect();
        let mut next = DMatrix::<f64>::zeros(size + 4, size + 4);
        for (t, &col) in q.iter().enumerate() {
            next[(t, 4 + col)] = 1.0;
            for r in 0..size {
                next[(4 + r, t)] = self.m[(r, col)];
            }
        }
        for r in 0..size {
            for c in 0..size {
                if !q.contains(&c) {
                    next[(4 + r, 4 + c)] = self.m[(r, c)];
                }
            }
        }
        self.m = next;
        self.ancillas += 4;
        self.gates.insert(0, j);
        Ok(())
    }

    pub fn from_circuit(circuit: &Circuit) -> Result<Self> {
        let mut state = AssembledEvolution::new(circuit.n);
        for (layer, prop) in circuit.layers.iter().zip(circuit.propagators()) {
            match (layer, prop) {
                (CircuitLayer::Gaussian(_), Some(u)) => state.absorb_gaussian(&u)?,
                (CircuitLayer::Interaction(j), _) => state.extend_with_interaction(*j)?,
                _ => unreachable!(),
            }
        }
        Ok(state)
    }

    /// `K = [[0, M_Aᵀ], [M_A, M_S R M_Sᵀ]]` with `M_A` the ancilla columns,
    /// `M_S` the system columns and `R = (−1)^{|η|}(I − 2P_η)`.
    pub fn build_kernel(&self, eta: &ModeTuple) -> Result<KernelMatrix> {
        let (a, n) = (self.ancillas, self.n);
        if eta.last_mode().unwrap_or(0) > 2 * n {
            return Err(Error::input(format!("probe {eta} exceeds the {} system modes", 2 * n)));
        }
        let size = self.m.nrows();
        let base = if eta.len() % 2 == 1 { -1.0 } else { 1.0 };
        let r_diag: Vec<f64> = (1..=2 * n).map(|mu| if eta.contains(mu) { -base } else { base }).collect();
        let ma = self.m.view((0, 0), (size, a));
        let ms = self.m.view((0, a), (size, 2 * n));
        let mut msr = ms.clone_owned();
        for (c, &d) in r_diag.iter().enumerate() {
            msr.column_mut(c).scale_mut(d);
        }
        let lower = msr * ms.transpose();
        let mut k = DMatrix::<f64>::zeros(a + size, a + size);
        k.view_mut((0, a), (a, size)).copy_from(&ma.transpose());
        k.view_mut((a, 0), (size, a)).copy_from(&ma);
        k.view_mut((a, a), (size, size)).copy_from(&lower);
        let asym = (&k - k.transpose()).amax();
        let defect = linalg::orthogonality_defect(&k);
        if asym > 1e-10 || defect > 1e-10 {
            return Err(Error::consistency(format!(
                "kernel not symmetric orthogonal (asymmetry {asym:.2e}, defect {defect:.2e})"
            )));
        }
        let rows = k.transpose().as_slice().to_vec();
        Ok(KernelMatrix { k, rows, eta_parity: eta.len() % 2, ancillas: a })
    }
}

#[derive(Clone, Debug)]
pub struct KernelMatrix {
    pub k: DMatrix<f64>,
    /// Row-major copy of `k` for minor gathering.
    rows: Vec<f64>,
    pub eta_parity: usize,
    ancillas: usize,
}

/// One per-gate choice of input subset `β ⊆ {1,2,3,4}` and its image.
#[derive(Clone, Copy, Debug)]
struct GateSubset {
    members: [u8; 4],
    len: u8,
    image: [u8; 4],
    image_len: u8,
    /// `|β|·Σβ + [|β| = 3]` mod 2.
    sign: u8,
}

fn gate_subsets() -> Vec<GateSubset> {
    (0u8..16)
        .map(|mask| {
            let mut members = [0u8; 4];
            let mut len = 0u8;
            for p in 0..4u8 {
                if mask & (1 << p) != 0 {
                    members[len as usize] = p + 1;
                    len += 1;
                }
            }
            let sum: u32 = members[..len as usize].iter().map(|&p| p as u32).sum();
            let mut image = [0u8; 4];
            let image_len;
            if len % 2 == 0 {
                image = members;
                image_len = len;
            } else {
                let mut k = 0;
                for p in 1..=4u8 {
                    if !members[..len as usize].contains(&p) {
                        image[k] = p;
                        k += 1;
                    }
                }
                image_len = k as u8;
            }
            let sign = ((len as u32 * sum + u32::from(len == 3)) % 2) as u8;
            GateSubset { members, len, image, image_len, sign }
        })
        .collect()
}

/// A choice of subsets across all gates, with the index lists it contributes.
#[derive(Clone, Debug)]
struct SideConfig {
    /// Positions in the first ancilla block (0-based K indices).
    inputs: Vec<usize>,
    /// Image positions in the second ancilla block (0-based K indices).
    images: Vec<usize>,
    sign: u8,
    delta: i32,
}

fn side_configs(gates: usize, ancillas: usize) -> Vec<SideConfig> {
    let subsets = gate_subsets();
    let total = 16usize.pow(gates as u32);
    (0..total)
        .map(|code| {
            let mut cfg = SideConfig { inputs: Vec::new(), images: Vec::new(), sign: 0, delta: 0 };
            let mut rest = code;
            let mut chosen = Vec::with_capacity(gates);
            for _ in 0..gates {
                chosen.push(subsets[rest % 16]);
                rest /= 16;
            }
            // most significant digit is gate 0 so codes run lexicographically
            chosen.reverse();
            for (i, s) in chosen.iter().enumerate() {
                cfg.inputs.extend(s.members[..s.len as usize].iter().map(|&p| 4 * i + p as usize - 1));
                cfg.images.extend(s.image[..s.image_len as usize].iter().map(|&p| ancillas + 4 * i + p as usize - 1));
                cfg.sign ^= s.sign;
                cfg.delta += s.image_len as i32 - s.len as i32;
            }
            cfg
        })
        .collect()
}

/// Sum with Neumaier compensation.
#[derive(Clone, Copy, Debug, Default)]
struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SeriesResult {
    /// The signed sum, equal to `1 − 2𝒞²`.
    pub sum: f64,
    pub value: f64,
    pub terms: usize,
}

/// Number of square-minor pairs for `g` gates, saturating at `usize::MAX`.
pub fn expected_term_count(g: usize) -> usize {
    // per gate: 8 subsets keep their size, 4 grow by two, 4 shrink by two
    let mut poly: Vec<usize> = vec![1];
    for _ in 0..g {
        let mut next = vec![0usize; poly.len() + 2];
        for (d, &c) in poly.iter().enumerate() {
            next[d] = next[d].saturating_add(c.saturating_mul(4));
            next[d + 1] = next[d + 1].saturating_add(c.saturating_mul(8));
            next[d + 2] = next[d + 2].saturating_add(c.saturating_mul(4));
        }
        poly = next;
    }
    poly.iter().fold(0usize, |acc, c| acc.saturating_add(c.saturating_mul(*c)))
}

fn check_gate_limit(g: usize, limit: usize) -> Result<()> {
    if g > limit {
        let terms = match expected_term_count(g) {
            usize::MAX => "more than 2^64".to_string(),
            t => t.to_string(),
        };
        return Err(Error::input(format!(
            "{g} interaction gates exceed the limit of {limit}: the exact series has {terms} terms"
        )));
    }
    Ok(())
}

/// Evaluates the series for `B = i^b C_α` against a kernel built from the probe.
pub fn exact_series(state: &AssembledEvolution, kernel: &KernelMatrix, alpha: &ModeTuple) -> Result<SeriesResult> {
    let (a, n) = (state.ancillas, state.n);
    if kernel.ancillas != a {
        return Err(Error::input("kernel was built for a different assembly"));
    }
    if alpha.last_mode().unwrap_or(0) > 2 * n {
        return Err(Error::input(format!("operator {alpha} exceeds the {} system modes", 2 * n)));
    }
    let tail: Vec<usize> = alpha.indices().iter().map(|&m| 2 * a + m - 1).collect();
    let sides = side_configs(state.gate_count(), a);
    let mut by_delta: std::collections::BTreeMap<i32, Vec<usize>> = Default::default();
    for (idx, s) in sides.iter().enumerate() {
        by_delta.entry(s.delta).or_default().push(idx);
    }
    let width = kernel.k.ncols();
    let tail_len = tail.len();
    let partials: Vec<(CompensatedSum, usize)> = (0..sides.len())
        .collect::<Vec<_>>()
        .par_chunks(CHUNK)
        .map(|chunk| {
            let mut acc = CompensatedSum::default();
            let mut terms = 0usize;
            let mut rows = Vec::new();
            let mut cols = Vec::new();
            let mut scratch = Vec::new();
            for &bi in chunk {
                let b = &sides[bi];
                // rows of the first block vanish on the first block's columns
                if b.inputs.len() > b.images.len() + tail_len {
                    terms += by_delta[&b.delta].len();
                    continue;
                }
                for &bpi in &by_delta[&b.delta] {
                    let bp = &sides[bpi];
                    if bp.inputs.len() > bp.images.len() + tail_len {
                        terms += 1;
                        continue;
                    }
                    rows.clear();
                    rows.extend_from_slice(&bp.inputs);
                    rows.extend_from_slice(&b.images);
                    rows.extend_from_slice(&tail);
                    cols.clear();
                    cols.extend_from_slice(&b.inputs);
                    cols.extend_from_slice(&bp.images);
                    cols.extend_from_slice(&tail);
                    debug_assert_eq!(rows.len(), cols.len());
                    let (nb, nbp) = (b.inputs.len(), bp.inputs.len());
                    let parity = (nb + nbp + nb * nbp + (b.sign ^ bp.sign) as usize) % 2;
                    let d = linalg::sub_det_row_major(&kernel.rows, width, &rows, &cols, &mut scratch);
                    acc.add(if parity == 1 { -d } else { d });
                    terms += 1;
                }
            }
            (acc, terms)
        })
        .collect();
    let mut total = CompensatedSum::default();
    let mut terms = 0;
    for (p, t) in &partials {
        total.add(p.value());
        terms += t;
    }
    let sum = total.value();
    Ok(SeriesResult { sum, value: clamp_otoc(0.5 * (1.0 - sum)), terms })
}

/// `𝒞_AB` for `B(t) = U B U†` with `U` the full circuit.
pub fn exact_otoc(circuit: &Circuit, a: &PauliObservable, b: &PauliObservable, max_gates: usize) -> Result<f64> {
    check_gate_limit(circuit.interaction_count(), max_gates)?;
    let state = AssembledEvolution::from_circuit(circuit)?;
    let kernel = state.build_kernel(&a.config)?;
    Ok(exact_series(&state, &kernel, &b.config)?.value)
}

/// `𝒞(P_s, B(t))` on every slice boundary and site.
///
/// When every layer unitary is symmetric the reversed prefix is the transpose
/// `Uᵀ`, and `‖[P, U B U†]‖ = ‖[B, Uᵀ P Uᵀ†]‖` up to complex conjugation of
/// Paulis. Evolving the probe instead of `B` keeps the evolved configuration
/// at two modes instead of `2⌊n/2⌋ − 1`.
pub fn exact_lightcone(circuit: &Circuit, b: &PauliObservable, probe: char, max_gates: usize) -> Result<Vec<Vec<f64>>> {
    check_gate_limit(circuit.interaction_count(), max_gates)?;
    let n = circuit.n;
    let probes: Vec<ModeTuple> = probe_configs(probe, n)?
        .into_iter()
        .map(|v| ModeTuple::new(v.into_iter().map(|m| m + 1).collect()))
        .collect::<Result<_>>()?;
    let mut ends = vec![0usize];
    let mut count = 0;
    for s in &circuit.slices() {
        count += usize::from(s.gaussian.is_some()) + s.gates.len();
        ends.push(count);
    }
    let symmetric = circuit.is_symmetric();
    ends.iter()
        .map(|&end| {
            let prefix = Circuit { n, layers: circuit.layers[..end].to_vec() };
            if symmetric {
                let state = AssembledEvolution::from_circuit(&prefix.reversed())?;
                let kernel = state.build_kernel(&b.config)?;
                probes
                    .par_iter()
                    .map(|p| exact_series(&state, &kernel, p).map(|r| r.value))
                    .collect::<Result<Vec<f64>>>()
            } else {
                let state = AssembledEvolution::from_circuit(&prefix)?;
                probes
                    .par_iter()
                    .map(|p| exact_series(&state, &state.build_kernel(p)?, &b.config).map(|r| r.value))
                    .collect::<Result<Vec<f64>>>()
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn term_counts() {
        assert_eq!(expected_term_count(0), 1);
        assert_eq!(expected_term_count(1), 96);
        assert_eq!(expected_term_count(2), 17920);
    }

    #[test]
    fn subset_images() {
        let subs = gate_subsets();
        let odd = subs.iter().filter(|s| s.len % 2 == 1).count();
        assert_eq!(odd, 8);
        for s in &subs {
            assert_eq!(s.len % 2, s.image_len % 2);
        }
    }

    #[test]
    fn extension_from_identity_is_a_permutation() {
        let mut st = AssembledEvolution::new(3);
        st.extend_with_interaction(2).unwrap();
        assert_eq!(st.m.nrows(), 10);
        for r in 0..10 {
            let nz: Vec<f64> = st.m.row(r).iter().copied().filter(|v| *v != 0.0).collect();
            assert_eq!(nz, vec![1.0]);
        }
        assert!(linalg::orthogonality_defect(&st.m) < 1e-15);
        // gate modes (3,4,5,6) of the system now route through the first block
        assert_eq!(st.m[(0, 4 + 2)], 1.0);
        assert_eq!(st.m[(4 + 2, 0)], 1.0);
    }

    #[test]
    fn gate_limit_is_enforced() {
        let layers = vec![CircuitLayer::Interaction(1); 3];
        let c = Circuit::new(2, layers).unwrap();
        let a = PauliObservable::single_site('X', 1, 2).unwrap();
        let err = exact_otoc(&c, &a, &a, 2).unwrap_err();
        assert!(err.to_string().contains("exceed"));
    }

    #[test]
    fn single_gate_commutes_with_z() {
        let c = Circuit::new(2, vec![CircuitLayer::Interaction(1)]).unwrap();
        let x1 = PauliObservable::single_site('X', 1, 2).unwrap();
        let z1 = PauliObservable::single_site('Z', 1, 2).unwrap();
        let v = exact_otoc(&c, &x1, &z1, DEFAULT_MAX_GATES).unwrap();
        assert!((v - 1.0).abs() < 1e-12);
    }
}
