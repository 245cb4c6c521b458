//! Majorana configurations, the Jordan–Wigner map, minors and the
//! Cauchy–Binet composition rules.
//!
//! Mode labels are 1-based everywhere in this API: on `n` qubits the modes are
//! `1..=2n`, with `c_{2j-1} = Z_1⋯Z_{j-1} X_j` and `c_{2j} = Z_1⋯Z_{j-1} Y_j`.

use std::fmt;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;

/// Dense real matrix acting on Majorana modes (`u`, `M`, `K`, ...).
pub type SingleParticleMatrix = DMatrix<f64>;

/// Minors smaller than this are reported as exactly zero.
pub const MINOR_ZERO: f64 = 1e-13;

/// Strictly increasing tuple of 1-based mode labels.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct ModeTuple(Vec<usize>);

impl ModeTuple {
    pub fn new(indices: Vec<usize>) -> Result<Self> {
        if indices.first() == Some(&0) {
            return Err(Error::input("mode labels are 1-based"));
        }
        if indices.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::input(format!("mode tuple {indices:?} is not strictly increasing")));
        }
        Ok(ModeTuple(indices))
    }

    /// Sorts and checks for duplicates.
    pub fn from_unsorted(mut indices: Vec<usize>) -> Result<Self> {
        indices.sort_unstable();
        Self::new(indices)
    }

    pub fn empty() -> Self {
        ModeTuple(Vec::new())
    }

    /// Contiguous range `lo..=hi`, empty when `hi < lo`.
    pub fn range(lo: usize, hi: usize) -> Self {
        assert!(lo >= 1);
        ModeTuple((lo..=hi).collect())
    }

    pub fn indices(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, mode: usize) -> bool {
        self.0.binary_search(&mode).is_ok()
    }

    pub fn last_mode(&self) -> Option<usize> {
        self.0.last().copied()
    }

    pub fn first_mode(&self) -> Option<usize> {
        self.0.first().copied()
    }

    pub fn sum(&self) -> usize {
        self.0.iter().sum()
    }

    pub fn zero_based(&self) -> Vec<usize> {
        self.0.iter().map(|&m| m - 1).collect()
    }

    pub fn union(&self, other: &ModeTuple) -> Result<ModeTuple> {
        let mut v = self.0.clone();
        v.extend_from_slice(&other.0);
        ModeTuple::from_unsorted(v)
    }

    pub fn is_disjoint(&self, other: &ModeTuple) -> bool {
        self.0.iter().all(|m| !other.contains(*m))
    }

    pub fn shifted(&self, offset: usize) -> ModeTuple {
        ModeTuple(self.0.iter().map(|m| m + offset).collect())
    }

    fn check_within(&self, mode_count: usize) -> Result<()> {
        match self.last_mode() {
            Some(m) if m > mode_count => Err(Error::input(format!("mode {m} out of range for {mode_count} modes"))),
            _ => Ok(()),
        }
    }
}

impl TryFrom<Vec<usize>> for ModeTuple {
    type Error = Error;
    fn try_from(v: Vec<usize>) -> Result<Self> {
        ModeTuple::new(v)
    }
}

impl From<ModeTuple> for Vec<usize> {
    fn from(t: ModeTuple) -> Self {
        t.0
    }
}

impl fmt::Display for ModeTuple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (k, m) in self.0.iter().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{m}")?;
        }
        write!(f, ")")
    }
}

/// A phase `i^k`, kept as an exponent so sign bookkeeping stays exact.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct Phase(u8);

impl Phase {
    pub const ONE: Phase = Phase(0);
    pub const I: Phase = Phase(1);
    pub const MINUS_ONE: Phase = Phase(2);
    pub const MINUS_I: Phase = Phase(3);

    pub fn from_power(k: i64) -> Self {
        Phase(k.rem_euclid(4) as u8)
    }

    pub fn power(self) -> u8 {
        self.0
    }

    pub fn sign(negative: bool) -> Self {
        if negative {
            Phase::MINUS_ONE
        } else {
            Phase::ONE
        }
    }

    pub fn conj(self) -> Self {
        Phase::from_power(-(self.0 as i64))
    }

    pub fn to_complex(self) -> Complex64 {
        match self.0 {
            0 => Complex64::new(1.0, 0.0),
            1 => Complex64::new(0.0, 1.0),
            2 => Complex64::new(-1.0, 0.0),
            _ => Complex64::new(0.0, -1.0),
        }
    }
}

impl std::ops::Mul for Phase {
    type Output = Phase;
    fn mul(self, rhs: Phase) -> Phase {
        Phase((self.0 + rhs.0) % 4)
    }
}

/// `i^a C_α`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PauliObservable {
    pub phase: Phase,
    pub config: ModeTuple,
}

impl PauliObservable {
    /// Hermitian and squaring to the identity.
    pub fn is_hermitian(&self) -> bool {
        let k = self.config.len();
        let lhs = self.phase * self.phase;
        let rhs = Phase::sign((k * k.saturating_sub(1) / 2) % 2 == 1);
        lhs == rhs
    }

    /// `P_site` on `n` qubits for a single letter.
    pub fn single_site(letter: char, site: usize, n: usize) -> Result<Self> {
        if site == 0 || site > n {
            return Err(Error::input(format!("site {site} out of range 1..={n}")));
        }
        let mut s = vec!['I'; n];
        s[site - 1] = letter;
        jordan_wigner_encode(&s)
    }
}

/// Multiplies Majorana monomials given in product order, returning the sign
/// and the normal-ordered configuration.
pub fn normal_order(modes: &[usize]) -> (bool, Vec<usize>) {
    let mut v = modes.to_vec();
    let mut negative = false;
    for i in 1..v.len() {
        let mut k = i;
        while k > 0 && v[k - 1] > v[k] {
            v.swap(k - 1, k);
            negative = !negative;
            k -= 1;
        }
    }
    let mut out = Vec::with_capacity(v.len());
    let mut idx = 0;
    while idx < v.len() {
        if idx + 1 < v.len() && v[idx] == v[idx + 1] {
            idx += 2;
        } else {
            out.push(v[idx]);
            idx += 1;
        }
    }
    (negative, out)
}

pub fn jordan_wigner_encode(pauli: &[char]) -> Result<PauliObservable> {
    if pauli.is_empty() {
        return Err(Error::input("empty Pauli string"));
    }
    let mut phase = Phase::ONE;
    let mut word: Vec<usize> = Vec::new();
    for (idx, &letter) in pauli.iter().enumerate() {
        let j = idx + 1;
        let (p, modes): (Phase, Vec<usize>) = match letter.to_ascii_uppercase() {
            'I' => (Phase::ONE, vec![]),
            // X_j = (-i)^{j-1} c_1 c_2 ⋯ c_{2j-1}
            'X' => (Phase::from_power(-(j as i64 - 1)), (1..=2 * j - 1).collect()),
            'Y' => {
                let mut m: Vec<usize> = (1..=2 * j - 2).collect();
                m.push(2 * j);
                (Phase::from_power(-(j as i64 - 1)), m)
            }
            'Z' => (Phase::MINUS_I, vec![2 * j - 1, 2 * j]),
            other => return Err(Error::input(format!("invalid Pauli letter '{other}'"))),
        };
        phase = phase * p;
        word.extend(modes);
    }
    let (neg, config) = normal_order(&word);
    Ok(PauliObservable { phase: phase * Phase::sign(neg), config: ModeTuple(config) })
}

/// Inverse of [`jordan_wigner_encode`]: returns the Pauli letters and the
/// residual phase `i^k` with `i^a C_α = i^k P_1⊗⋯⊗P_n`.
pub fn jordan_wigner_decode(obs: &PauliObservable, n: usize) -> Result<(Vec<char>, Phase)> {
    obs.config.check_within(2 * n)?;
    let occ = |m: usize| obs.config.contains(m);
    let mut letters = vec!['I'; n];
    let mut phase = obs.phase;
    let mut odd_to_right = false;
    for j in (1..=n).rev() {
        let (a, b) = (occ(2 * j - 1), occ(2 * j));
        // own factor O_j, then Z_j from every odd site to the right
        let (mut letter, mut p) = match (a, b) {
            (false, false) => ('I', Phase::ONE),
            (true, false) => ('X', Phase::ONE),
            (false, true) => ('Y', Phase::ONE),
            (true, true) => ('Z', Phase::I),
        };
        if odd_to_right {
            let (l, q) = match letter {
                'I' => ('Z', Phase::ONE),
                'X' => ('Y', Phase::MINUS_I),
                'Y' => ('X', Phase::I),
                _ => ('I', Phase::ONE),
            };
            letter = l;
            p = p * q;
        }
        letters[j - 1] = letter;
        phase = phase * p;
        if a != b {
            odd_to_right = !odd_to_right;
        }
    }
    Ok((letters, phase))
}

pub fn check_orthogonal(u: &SingleParticleMatrix, tol: f64) -> Result<()> {
    let d = linalg::orthogonality_defect(u);
    if d > tol {
        return Err(Error::input(format!("matrix is not orthogonal (defect {d:.3e})")));
    }
    Ok(())
}

/// `det(u_{rows, cols})`.
pub fn minor(u: &SingleParticleMatrix, rows: &ModeTuple, cols: &ModeTuple) -> Result<f64> {
    if rows.len() != cols.len() {
        return Err(Error::input(format!("non-square minor: {} rows, {} columns", rows.len(), cols.len())));
    }
    rows.check_within(u.nrows())?;
    cols.check_within(u.ncols())?;
    let mut scratch = Vec::new();
    let d = linalg::sub_det(u, &rows.zero_based(), &cols.zero_based(), &mut scratch);
    Ok(if d.abs() < MINOR_ZERO { 0.0 } else { d })
}

/// Amplitude `det((u1 u2)_{αγ})` of a composed evolution.
pub fn cauchy_binet(
    u1: &SingleParticleMatrix,
    u2: &SingleParticleMatrix,
    alpha: &ModeTuple,
    gamma: &ModeTuple,
) -> Result<f64> {
    if u1.ncols() != u2.nrows() {
        return Err(Error::input("mode count mismatch between u1 and u2"));
    }
    minor(&(u1 * u2), alpha, gamma)
}

/// Index sets for the pinned form of Cauchy–Binet.
#[derive(Clone, Debug)]
pub struct PinnedSets {
    pub s: ModeTuple,
    pub s_prime: ModeTuple,
    pub b_left: ModeTuple,
    pub b_right: ModeTuple,
}

impl PinnedSets {
    fn validate(&self, alpha: &ModeTuple, gamma: &ModeTuple) -> Result<()> {
        if alpha.len() + self.s.len() != gamma.len() + self.s_prime.len() {
            return Err(Error::input("length constraint |α| − |S′| = |γ| − |S| violated"));
        }
        if !self.b_left.is_disjoint(&self.b_right) {
            return Err(Error::input("B_l and B_r overlap"));
        }
        let mut pinned: Vec<usize> = self.s.indices().to_vec();
        pinned.extend_from_slice(self.s_prime.indices());
        pinned.sort_unstable();
        pinned.dedup();
        let pinned = ModeTuple(pinned);
        let b = self.b_left.union(&self.b_right)?;
        if !pinned.is_disjoint(&b) {
            return Err(Error::input("S or S′ overlaps the summed block"));
        }
        let (lo, hi) = match (pinned.first_mode(), pinned.last_mode()) {
            (Some(lo), Some(hi)) => (lo, hi),
            _ => match (self.b_left.last_mode(), self.b_right.first_mode()) {
                (Some(l), Some(r)) if l >= r => {
                    return Err(Error::input("B_l must lie left of B_r"));
                }
                _ => return Ok(()),
            },
        };
        if self.b_left.last_mode().is_some_and(|m| m >= lo) || self.b_right.first_mode().is_some_and(|m| m <= hi) {
            return Err(Error::input("B_l must lie left of, and B_r right of, S ∪ S′"));
        }
        Ok(())
    }

    fn block(&self) -> ModeTuple {
        self.b_left.union(&self.b_right).expect("validated disjoint")
    }
}

/// Closed form: `(-1)^{|S||S′|} det [[0, u2_{S,γ}], [u1_{α,S′}, u1_{α,B} ũ2_{B,γ}]]`,
/// where `ũ2` has the `B_l` rows negated when `|S| + |S′|` is odd.
pub fn modified_cauchy_binet(
    u1: &SingleParticleMatrix,
    u2: &SingleParticleMatrix,
    alpha: &ModeTuple,
    gamma: &ModeTuple,
    sets: &PinnedSets,
) -> Result<f64> {
    sets.validate(alpha, gamma)?;
    if u1.ncols() != u2.nrows() {
        return Err(Error::input("mode count mismatch between u1 and u2"));
    }
    for t in [alpha, &sets.s_prime, &sets.b_left, &sets.b_right] {
        t.check_within(u1.ncols())?;
    }
    alpha.check_within(u1.nrows())?;
    gamma.check_within(u2.ncols())?;
    sets.s.check_within(u2.nrows())?;

    let (ns, nsp, na, ng) = (sets.s.len(), sets.s_prime.len(), alpha.len(), gamma.len());
    let size = ns + na;
    let flip = (ns + nsp) % 2 == 1;
    let b = sets.block();
    let mut m = DMatrix::<f64>::zeros(size, size);
    for (r, &si) in sets.s.indices().iter().enumerate() {
        for (c, &gi) in gamma.indices().iter().enumerate() {
            m[(r, nsp + c)] = u2[(si - 1, gi - 1)];
        }
    }
    for (r, &ai) in alpha.indices().iter().enumerate() {
        for (c, &si) in sets.s_prime.indices().iter().enumerate() {
            m[(ns + r, c)] = u1[(ai - 1, si - 1)];
        }
        for (c, &gi) in gamma.indices().iter().enumerate() {
            let mut acc = 0.0;
            for &bi in b.indices() {
                let sgn = if flip && sets.b_left.contains(bi) { -1.0 } else { 1.0 };
                acc += u1[(ai - 1, bi - 1)] * sgn * u2[(bi - 1, gi - 1)];
            }
            m[(ns + r, nsp + c)] = acc;
        }
    }
    debug_assert_eq!(nsp + ng, size);
    let sign = if (ns * nsp) % 2 == 1 { -1.0 } else { 1.0 };
    Ok(sign * linalg::det(&m))
}

/// The defining subset sum `Σ_β det(u1_{α,β∪S′}) det(u2_{β∪S,γ})` over
/// `β ⊆ B_l ∪ B_r`. Exponential in `|B|`; used as a reference.
pub fn modified_cauchy_binet_sum(
    u1: &SingleParticleMatrix,
    u2: &SingleParticleMatrix,
    alpha: &ModeTuple,
    gamma: &ModeTuple,
    sets: &PinnedSets,
) -> Result<f64> {
    sets.validate(alpha, gamma)?;
    let b = sets.block();
    let k = alpha.len() as isize - sets.s_prime.len() as isize;
    if k < 0 || k as usize > b.len() {
        return Ok(0.0);
    }
    let mut total = 0.0;
    for beta in combinations(b.indices(), k as usize) {
        let beta = ModeTuple(beta);
        let left = minor(u1, alpha, &beta.union(&sets.s_prime)?)?;
        if left == 0.0 {
            continue;
        }
        total += left * minor(u2, &beta.union(&sets.s)?, gamma)?;
    }
    Ok(total)
}

/// All `k`-subsets of `items` in lexicographic order.
pub fn combinations(items: &[usize], k: usize) -> Vec<Vec<usize>> {
    let n = items.len();
    let mut out = Vec::new();
    if k > n {
        return out;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        out.push(idx.iter().map(|&i| items[i]).collect());
        let Some(pos) = (0..k).rev().find(|&p| idx[p] < p + n - k) else {
            return out;
        };
        idx[pos] += 1;
        for r in pos + 1..k {
            idx[r] = idx[r - 1] + 1;
        }
    }
}

/// The quadruple `(2j−1, 2j, 2j+1, 2j+2)` touched by the interaction gate on qubit `j`.
pub fn gate_modes(j: usize) -> ModeTuple {
    ModeTuple::range(2 * j - 1, 2 * j + 2)
}

/// Action of `V = exp(−iπ/4 Z_j Z_{j+1})` on a configuration inside its
/// quadruple: `V† C_β V = phase · C_image`.
pub fn interaction_image(beta: &ModeTuple, q: &ModeTuple) -> Result<(Phase, ModeTuple)> {
    if q.len() != 4 || q.indices().windows(2).any(|w| w[1] != w[0] + 1) || q.indices()[0] % 2 == 0 {
        return Err(Error::input(format!("{q} is not a gate quadruple")));
    }
    if beta.indices().iter().any(|m| !q.contains(*m)) {
        return Err(Error::input(format!("{beta} is not contained in {q}")));
    }
    if beta.len() % 2 == 0 {
        return Ok((Phase::ONE, beta.clone()));
    }
    let image: Vec<usize> = q.indices().iter().copied().filter(|m| !beta.contains(*m)).collect();
    let phase = Phase::MINUS_I * Phase::sign(beta.sum() % 2 == 1);
    Ok((phase, ModeTuple(image)))
}
