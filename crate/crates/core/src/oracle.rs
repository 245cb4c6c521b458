//! Brute-force `2^n`-dimensional reference: full unitaries, commutator norms
//! and Majorana amplitude tables. Meant for small chains only.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::circuit::{Circuit, CircuitLayer, GaussianGenerator};
use crate::error::{Error, Result};
use crate::majorana::{combinations, ModeTuple};

pub const MAX_EVOLVE_QUBITS: usize = 12;
pub const MAX_AMPLITUDE_QUBITS: usize = 6;

pub type CMatrix = DMatrix<Complex64>;

#[derive(Clone, Debug)]
pub struct DenseOperator {
    pub matrix: CMatrix,
    pub n: usize,
}

/// Which conjugation an amplitude table refers to.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Orientation {
    /// `U C U†`
    Forward,
    /// `U† C U`
    Backward,
}

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn pauli_matrix(letter: char) -> Result<CMatrix> {
    let z = c(0.0, 0.0);
    let o = c(1.0, 0.0);
    let i = c(0.0, 1.0);
    Ok(match letter.to_ascii_uppercase() {
        'I' => DMatrix::from_row_slice(2, 2, &[o, z, z, o]),
        'X' => DMatrix::from_row_slice(2, 2, &[z, o, o, z]),
        'Y' => DMatrix::from_row_slice(2, 2, &[z, -i, i, z]),
        'Z' => DMatrix::from_row_slice(2, 2, &[o, z, z, -o]),
        other => return Err(Error::input(format!("invalid Pauli letter '{other}'"))),
    })
}

/// `P_1 ⊗ ⋯ ⊗ P_n`, qubit 1 most significant.
pub fn pauli_string(letters: &[char]) -> Result<CMatrix> {
    let mut out = DMatrix::from_element(1, 1, c(1.0, 0.0));
    for &l in letters {
        out = out.kronecker(&pauli_matrix(l)?);
    }
    Ok(out)
}

pub fn single_site(letter: char, site: usize, n: usize) -> Result<CMatrix> {
    let mut s = vec!['I'; n];
    s[site - 1] = letter;
    pauli_string(&s)
}

/// Dense `c_μ = Z_1⋯Z_{j−1} (X_j or Y_j)`.
pub fn majorana(mu: usize, n: usize) -> CMatrix {
    let j = mu.div_ceil(2);
    let mut s = vec!['I'; n];
    for q in s.iter_mut().take(j - 1) {
        *q = 'Z';
    }
    s[j - 1] = if mu % 2 == 1 { 'X' } else { 'Y' };
    pauli_string(&s).expect("valid letters")
}

/// Ordered product `C_α`.
pub fn configuration(alpha: &ModeTuple, n: usize) -> CMatrix {
    let d = 1usize << n;
    let mut out = CMatrix::identity(d, d);
    for &m in alpha.indices() {
        out *= majorana(m, n);
    }
    out
}

fn check_evolve_size(n: usize) -> Result<()> {
    if n > MAX_EVOLVE_QUBITS {
        return Err(Error::input(format!("dense oracle is capped at {MAX_EVOLVE_QUBITS} qubits, got {n}")));
    }
    Ok(())
}

/// `H = −i Σ_{μ<ν} h_{μν} c_μ c_ν` as a dense Hermitian matrix.
pub fn dense_hamiltonian(g: &GaussianGenerator) -> Result<CMatrix> {
    let n = g.qubits();
    check_evolve_size(n)?;
    let d = 1usize << n;
    let cs: Vec<CMatrix> = (1..=2 * n).map(|m| majorana(m, n)).collect();
    let mut h = CMatrix::zeros(d, d);
    for a in 0..2 * n {
        for b in a + 1..2 * n {
            let v = g.h[(a, b)];
            if v != 0.0 {
                h += (&cs[a] * &cs[b]) * c(0.0, -v);
            }
        }
    }
    Ok(h)
}

/// `exp(−iHt)` for Hermitian `H` by eigendecomposition.
pub fn unitary_from_hamiltonian(h: &CMatrix, t: f64) -> CMatrix {
    let eig = h.clone().symmetric_eigen();
    let v = &eig.eigenvectors;
    let phases = CMatrix::from_diagonal(&eig.eigenvalues.map(|e| Complex64::from_polar(1.0, -e * t)));
    v * phases * v.adjoint()
}

pub fn dense_gaussian(g: &GaussianGenerator) -> Result<CMatrix> {
    Ok(unitary_from_hamiltonian(&dense_hamiltonian(g)?, g.duration))
}

/// `exp(−iπ/4 Z_j Z_{j+1})`, diagonal.
pub fn dense_interaction(j: usize, n: usize) -> Result<CMatrix> {
    check_evolve_size(n)?;
    if j == 0 || j >= n {
        return Err(Error::input(format!("interaction qubit {j} outside 1..={}", n - 1)));
    }
    let d = 1usize << n;
    let bit = |x: usize, q: usize| (x >> (n - q)) & 1;
    let diag = nalgebra::DVector::from_fn(d, |x, _| {
        let zz = if bit(x, j) == bit(x, j + 1) { 1.0 } else { -1.0 };
        Complex64::from_polar(1.0, -std::f64::consts::FRAC_PI_4 * zz)
    });
    Ok(CMatrix::from_diagonal(&diag))
}

fn layer_unitary(layer: &CircuitLayer, n: usize) -> Result<CMatrix> {
    match layer {
        CircuitLayer::Gaussian(g) => dense_gaussian(g),
        CircuitLayer::Interaction(j) => dense_interaction(*j, n),
    }
}

/// `U = L_T ⋯ L_1`.
pub fn dense_evolve(circuit: &Circuit) -> Result<DenseOperator> {
    let n = circuit.n;
    check_evolve_size(n)?;
    let d = 1usize << n;
    let mut u = CMatrix::identity(d, d);
    let mut cache: Option<(&GaussianGenerator, CMatrix)> = None;
    for layer in &circuit.layers {
        let l = match (layer, &cache) {
            (CircuitLayer::Gaussian(g), Some((prev, m))) if *prev == g => m.clone(),
            (CircuitLayer::Gaussian(g), _) => {
                let m = dense_gaussian(g)?;
                cache = Some((g, m.clone()));
                m
            }
            _ => layer_unitary(layer, n)?,
        };
        u = l * u;
    }
    Ok(DenseOperator { matrix: u, n })
}

/// Row `i` of a monomial matrix as `(column, value)`; `None` unless every row
/// has exactly one nonzero entry (Pauli strings do).
fn monomial(a: &CMatrix) -> Option<Vec<(usize, Complex64)>> {
    let mut out = Vec::with_capacity(a.nrows());
    for i in 0..a.nrows() {
        let mut hit = None;
        for j in 0..a.ncols() {
            let v = a[(i, j)];
            if v != Complex64::new(0.0, 0.0) {
                if hit.is_some() {
                    return None;
                }
                hit = Some((j, v));
            }
        }
        out.push(hit?);
    }
    Some(out)
}

/// `(A·B, B·A)` for monomial `A` in `O(d²)`.
fn monomial_products(perm: &[(usize, Complex64)], b: &CMatrix) -> (CMatrix, CMatrix) {
    let d = b.nrows();
    let ab = CMatrix::from_fn(d, d, |i, j| perm[i].1 * b[(perm[i].0, j)]);
    let mut ba = CMatrix::zeros(d, d);
    for (k, &(col, v)) in perm.iter().enumerate() {
        for i in 0..d {
            ba[(i, col)] = b[(i, k)] * v;
        }
    }
    (ab, ba)
}

/// `𝒞` for `A` against an already evolved `B(t)`, by both the Frobenius and
/// the trace form; disagreement is a convention bug.
pub fn otoc_of_evolved(a: &CMatrix, bt: &CMatrix) -> Result<f64> {
    let d = a.nrows() as f64;
    let (comm, abab) = match monomial(a) {
        Some(perm) => {
            let (ab, ba) = monomial_products(&perm, bt);
            let abab = ab.iter().zip(ab.transpose().iter()).map(|(x, y)| x * y).sum::<Complex64>();
            (ab - ba, abab)
        }
        None => (a * bt - bt * a, (a * bt * a * bt).trace()),
    };
    let frob = comm.norm_squared() / (4.0 * d);
    let trace_form = 0.5 * (1.0 - abab.re / d);
    if (frob - trace_form).abs() > 1e-10 {
        return Err(Error::consistency(format!("commutator norm {frob} disagrees with trace form {trace_form}")));
    }
    Ok(frob.max(0.0).sqrt().min(1.0))
}

/// `𝒞_AB(t) = (4d)^{−1/2} ‖[A, U B U†]‖_F`.
pub fn dense_otoc(u: &DenseOperator, a: &CMatrix, b: &CMatrix) -> Result<f64> {
    let bt = &u.matrix * b * u.matrix.adjoint();
    otoc_of_evolved(a, &bt)
}

/// Coefficients of the conjugated configuration in the `C_β` basis.
pub fn dense_majorana_amplitudes(
    u: &DenseOperator,
    alpha: &ModeTuple,
    orientation: Orientation,
) -> Result<BTreeMap<ModeTuple, Complex64>> {
    let n = u.n;
    if n > MAX_AMPLITUDE_QUBITS {
        return Err(Error::input(format!("amplitude extraction is capped at {MAX_AMPLITUDE_QUBITS} qubits, got {n}")));
    }
    let ca = configuration(alpha, n);
    let o = match orientation {
        Orientation::Forward => &u.matrix * ca * u.matrix.adjoint(),
        Orientation::Backward => u.matrix.adjoint() * ca * &u.matrix,
    };
    let d = (1usize << n) as f64;
    let modes: Vec<usize> = (1..=2 * n).collect();
    let mut out = BTreeMap::new();
    for k in 0..=2 * n {
        for beta in combinations(&modes, k) {
            let beta = ModeTuple::new(beta)?;
            let cb = configuration(&beta, n);
            let amp = (cb.adjoint() * &o).trace() / d;
            if amp.norm() > 1e-13 {
                out.insert(beta, amp);
            }
        }
    }
    Ok(out)
}

/// `𝒞(P_s, B(t))` on every slice boundary and site for a single-site probe letter.
pub fn dense_lightcone(circuit: &Circuit, b: &CMatrix, probe: char) -> Result<Vec<Vec<f64>>> {
    let n = circuit.n;
    check_evolve_size(n)?;
    let probes: Vec<CMatrix> = (1..=n).map(|s| single_site(probe, s, n)).collect::<Result<_>>()?;
    let row = |bt: &CMatrix| -> Result<Vec<f64>> { probes.iter().map(|p| otoc_of_evolved(p, bt)).collect() };
    let mut bt = b.clone();
    let mut rows = vec![row(&bt)?];
    let mut cache: Option<(&GaussianGenerator, CMatrix)> = None;
    for slice in circuit.slices() {
        if let Some(g) = slice.gaussian {
            let l = match &cache {
                Some((prev, m)) if *prev == g => m.clone(),
                _ => {
                    let m = dense_gaussian(g)?;
                    cache = Some((g, m.clone()));
                    m
                }
            };
            bt = &l * bt * l.adjoint();
        }
        for &j in &slice.gates {
            // diagonal gate: conjugate entrywise
            let v = dense_interaction(j, n)?;
            let dg: Vec<Complex64> = v.diagonal().iter().copied().collect();
            for r in 0..bt.nrows() {
                for col in 0..bt.ncols() {
                    bt[(r, col)] *= dg[r] * dg[col].conj();
                }
            }
        }
        rows.push(row(&bt)?);
    }
    Ok(rows)
}
