//! Out-of-time-ordered correlators for one-dimensional circuits built from
//! Gaussian-fermionic (matchgate) layers and `exp(−iπ/4 Z Z)` interaction gates.
//!
//! Three engines compute the same quantity `𝒞_AB(t) = (4d)^{−1/2}‖[A, B(t)]‖_F`
//! with `B(t) = U B U†`:
//!
//! * [`gaussian`]: closed form for circuits without interactions,
//! * [`exact`]: a determinantal series, exponential only in the gate count,
//! * [`approx`]: a single-determinant lightcone approximation,
//!
//! and [`oracle`] checks all of them by brute force on small chains.

pub mod approx;
pub mod circuit;
pub mod error;
pub mod exact;
pub mod experiments;
pub mod gaussian;
pub mod io;
pub mod linalg;
pub mod majorana;
pub mod oracle;
pub mod validation;

pub use approx::{approx_lightcone, ApproxState, EdgeSide};
pub use circuit::{build_alternating_circuit, Circuit, CircuitLayer, DisorderRealization, GaussianGenerator};
pub use error::{Error, Result};
pub use exact::{exact_lightcone, exact_otoc, AssembledEvolution};
pub use experiments::{Engine, EnsembleSpec, LightconeGrid};
pub use gaussian::{boundary_profile, boundary_weight, gaussian_otoc, BoundaryProfile};
pub use majorana::{ModeTuple, PauliObservable, Phase, SingleParticleMatrix};
