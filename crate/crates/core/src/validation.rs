//! Randomized agreement sweeps of the exact and Gaussian engines against the
//! dense oracle.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::circuit::{build_xy_generator, Circuit, CircuitLayer, DisorderRealization};
use crate::error::{Error, Result};
use crate::exact::exact_otoc;
use crate::gaussian::gaussian_otoc;
use crate::majorana::PauliObservable;
use crate::oracle::{self, CMatrix};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub circuits: usize,
    pub max_n: usize,
    pub max_gates: usize,
    /// Disorder strengths are drawn uniformly from `[0, max_nu]`.
    pub max_nu: f64,
    pub seed: u64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig { circuits: 200, max_n: 6, max_gates: 3, max_nu: 5.0, seed: 0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub circuits: usize,
    pub comparisons: usize,
    pub max_error: f64,
    /// Description of the worst comparison.
    pub worst: String,
}

impl SweepReport {
    fn merge(mut self, other: SweepReport) -> SweepReport {
        self.circuits += other.circuits;
        self.comparisons += other.comparisons;
        if other.max_error > self.max_error {
            self.max_error = other.max_error;
            self.worst = other.worst;
        }
        self
    }

    fn empty() -> SweepReport {
        SweepReport { circuits: 0, comparisons: 0, max_error: 0.0, worst: String::new() }
    }
}

/// Disordered XY layers of random duration with `gates` interaction gates at
/// random qubits and random positions. Circuit `index` is reproducible from
/// `(seed, index)` alone.
pub fn random_xy_circuit(n: usize, gates: usize, max_nu: f64, seed: u64, index: u64) -> Result<Circuit> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    let nu = max_nu * rng.random::<f64>();
    let disorder = DisorderRealization::draw(n, nu, seed ^ 0x9e37_79b9_7f4a_7c15, index)?;
    let dt = 0.2 + rng.random::<f64>();
    let g = build_xy_generator(n, &disorder.nu_values, dt)?;
    let count = rng.random_range(1..=3usize);
    let mut slots = vec![Vec::new(); count + 1];
    for _ in 0..gates {
        let at = rng.random_range(0..=count);
        slots[at].push(rng.random_range(1..n));
    }
    let mut layers = Vec::new();
    for (k, slot) in slots.into_iter().enumerate() {
        layers.extend(slot.into_iter().map(CircuitLayer::Interaction));
        if k < count {
            layers.push(CircuitLayer::Gaussian(g.clone()));
        }
    }
    Circuit::new(n, layers)
}

fn check(cfg: &SweepConfig, min_n: usize) -> Result<()> {
    if cfg.circuits == 0 {
        return Err(Error::input("circuits: must be ≥ 1"));
    }
    if cfg.max_n < min_n || cfg.max_n > oracle::MAX_EVOLVE_QUBITS {
        return Err(Error::input(format!(
            "max_n: must lie in {min_n}..={} for the dense oracle",
            oracle::MAX_EVOLVE_QUBITS
        )));
    }
    if !(cfg.max_nu >= 0.0 && cfg.max_nu.is_finite()) {
        return Err(Error::input("max_nu: must be finite and ≥ 0"));
    }
    Ok(())
}

/// Circuit `i` has `n = 2 + i mod (max_n − 1)` qubits and `g = ⌊i/(max_n − 1)⌋
/// mod (max_gates + 1)` gates, so every `(n, g)` pair recurs evenly. Each is
/// compared on `(A = X_{⌊n/2⌋}, B = Z_s)` for every site `s`.
pub fn exact_sweep(cfg: &SweepConfig) -> Result<SweepReport> {
    check(cfg, 2)?;
    let widths = cfg.max_n - 1;
    let reports: Vec<SweepReport> = (0..cfg.circuits)
        .into_par_iter()
        .map(|i| {
            let n = 2 + i % widths;
            let g = (i / widths) % (cfg.max_gates + 1);
            let circuit = random_xy_circuit(n, g, cfg.max_nu, cfg.seed, i as u64)?;
            let dense = oracle::dense_evolve(&circuit)?;
            let a = PauliObservable::single_site('X', n / 2, n)?;
            let am = oracle::single_site('X', n / 2, n)?;
            let mut report = SweepReport { circuits: 1, ..SweepReport::empty() };
            for s in 1..=n {
                let b = PauliObservable::single_site('Z', s, n)?;
                let fast = exact_otoc(&circuit, &a, &b, cfg.max_gates)?;
                let slow = oracle::dense_otoc(&dense, &am, &oracle::single_site('Z', s, n)?)?;
                let err = (fast - slow).abs();
                report.comparisons += 1;
                if err >= report.max_error {
                    report.max_error = err;
                    report.worst = format!("circuit {i} (n={n}, g={g}), B=Z{s}: exact {fast} vs dense {slow}");
                }
            }
            Ok(report)
        })
        .collect::<Result<_>>()?;
    Ok(reports.into_iter().fold(SweepReport::empty(), SweepReport::merge))
}

/// Gate-free circuits with `n` cycling through `2..=max_n`, compared on every
/// ordered site pair and every pair of Pauli letters.
pub fn gaussian_sweep(cfg: &SweepConfig) -> Result<SweepReport> {
    check(cfg, 2)?;
    let widths = cfg.max_n - 1;
    let reports: Vec<SweepReport> = (0..cfg.circuits)
        .into_par_iter()
        .map(|i| {
            let n = 2 + i % widths;
            let circuit = random_xy_circuit(n, 0, cfg.max_nu, cfg.seed, i as u64)?;
            let dense = oracle::dense_evolve(&circuit)?;
            let mut u = nalgebra::DMatrix::identity(2 * n, 2 * n);
            for p in circuit.propagators().into_iter().flatten() {
                u *= p;
            }
            let mut report = SweepReport { circuits: 1, ..SweepReport::empty() };
            let probes: Vec<(char, usize, CMatrix, PauliObservable)> = ['X', 'Y', 'Z']
                .into_iter()
                .flat_map(|l| (1..=n).map(move |s| (l, s)))
                .map(|(l, s)| Ok((l, s, oracle::single_site(l, s, n)?, PauliObservable::single_site(l, s, n)?)))
                .collect::<Result<_>>()?;
            for (lb, sb, bm, b) in &probes {
                let bt = &dense.matrix * bm * dense.matrix.adjoint();
                for (la, sa, am, a) in &probes {
                    let fast = gaussian_otoc(&u, &b.config, &a.config)?;
                    let slow = oracle::otoc_of_evolved(am, &bt)?;
                    let err = (fast - slow).abs();
                    report.comparisons += 1;
                    if err >= report.max_error {
                        report.max_error = err;
                        report.worst =
                            format!("circuit {i} (n={n}), A={la}{sa}, B={lb}{sb}: gaussian {fast} vs dense {slow}");
                    }
                }
            }
            Ok(report)
        })
        .collect::<Result<_>>()?;
    Ok(reports.into_iter().fold(SweepReport::empty(), SweepReport::merge))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn circuits_are_reproducible() {
        let a = random_xy_circuit(4, 2, 3.0, 11, 5).unwrap();
        let b = random_xy_circuit(4, 2, 3.0, 11, 5).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.interaction_count(), 2);
    }

    #[test]
    fn small_sweeps_agree() {
        let cfg = SweepConfig { circuits: 6, max_n: 4, max_gates: 1, max_nu: 2.0, seed: 3 };
        let r = exact_sweep(&cfg).unwrap();
        assert_eq!(r.circuits, 6);
        assert!(r.max_error < 1e-8, "{}", r.worst);
        let r = gaussian_sweep(&cfg).unwrap();
        assert!(r.max_error < 1e-10, "{}", r.worst);
    }

    #[test]
    fn oversized_chains_are_refused() {
        let cfg = SweepConfig { max_n: 40, ..SweepConfig::default() };
        assert!(exact_sweep(&cfg).unwrap_err().to_string().contains("max_n"));
    }
}
