//! Closed-form correlator for purely Gaussian evolution and the lightcone
//! boundary weight `b_s`.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::circuit::{Circuit, CircuitLayer};
use crate::error::{Error, Result};
use crate::linalg;
use crate::majorana::{check_orthogonal, ModeTuple, PauliObservable, SingleParticleMatrix};

/// `b_s` for every site at one time.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundaryProfile {
    pub weights: Vec<f64>,
    pub time: f64,
}

/// `𝒞²` from `½{1 + (−1)^{|α||η|+1} det[u_α (I − 2P_η) u_αᵀ]}`.
///
/// Each eigenvalue of the determinant is `cos²θ − sin²θ` for a principal
/// angle `θ` between the rows `α` and the coordinates `η`, so the product is
/// assembled from `min(cos θ, sin θ)` with `log1p`/`expm1`. Cosines are the
/// singular values of `u[α, η]`, sines those of the complementary block.
/// This keeps `𝒞²` accurate to relative precision when it is tiny.
/// Indices are 0-based rows/columns of `u`.
pub(crate) fn otoc_squared(u: &SingleParticleMatrix, alpha: &[usize], eta: &[usize]) -> f64 {
    let (ka, ke) = (alpha.len(), eta.len());
    let complement = |picked: &[usize], total: usize| -> Vec<usize> {
        let mut mask = vec![false; total];
        for &i in picked {
            mask[i] = true;
        }
        (0..total).filter(|&i| !mask[i]).collect()
    };
    let block = |rows: &[usize], cols: &[usize]| DMatrix::from_fn(rows.len(), cols.len(), |r, c| u[(rows[r], cols[c])]);
    let inner = block(alpha, eta);
    let outer =
        if ka <= ke { block(alpha, &complement(eta, u.ncols())) } else { block(&complement(alpha, u.nrows()), eta) };
    let k = ka.min(ke);
    let mut cos: Vec<f64> = inner.singular_values().iter().copied().collect();
    cos.sort_by(f64::total_cmp);
    let mut sin: Vec<f64> =
        if outer.is_empty() { Vec::new() } else { outer.singular_values().iter().copied().collect() };
    sin.sort_by(|a, b| b.total_cmp(a));
    sin.resize(k, 0.0);
    let mut log_mag = 0.0;
    let mut negative = (ka * ke) % 2 == 0;
    for (&c, &s) in cos.iter().zip(&sin) {
        let m = c.min(s);
        log_mag += (-2.0 * m * m).max(-1.0).ln_1p();
        negative ^= c > s;
    }
    if negative {
        -0.5 * log_mag.exp_m1()
    } else {
        0.5 * (1.0 + log_mag.exp())
    }
}

pub(crate) fn clamp_otoc(c2: f64) -> f64 {
    debug_assert!(c2 > -1e-9 && c2 < 1.0 + 1e-9, "correlator² out of range: {c2}");
    c2.clamp(0.0, 1.0).sqrt()
}

/// `𝒞_AB` for `B = i^b C_α` evolved by `u`, probed by `A = i^a C_η`.
pub fn gaussian_otoc(u: &SingleParticleMatrix, alpha: &ModeTuple, eta: &ModeTuple) -> Result<f64> {
    if alpha.is_empty() || eta.is_empty() {
        return Err(Error::input("both configurations must be nonempty"));
    }
    check_orthogonal(u, 1e-10)?;
    for t in [alpha, eta] {
        if t.last_mode().unwrap() > u.nrows() {
            return Err(Error::input(format!("{t} exceeds {} modes", u.nrows())));
        }
    }
    Ok(clamp_otoc(otoc_squared(u, &alpha.zero_based(), &eta.zero_based())))
}

/// Rows of `u` selected by `α`: the amplitudes `V` whose Gram matrix `VᵀV`
/// is the projection kernel of the configuration weights.
fn selected_rows(u: &SingleParticleMatrix, alpha: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(alpha.len(), u.ncols(), |r, c| u[(alpha[r], c)])
}

fn gather_cols(v: &DMatrix<f64>, cols: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(v.nrows(), cols.len(), |r, c| v[(r, cols[c])])
}

/// Total weight of configurations avoiding every mode in `cols`.
fn weight_avoiding(v: &DMatrix<f64>, cols: &[usize]) -> f64 {
    if cols.is_empty() {
        return 1.0;
    }
    let w = gather_cols(v, cols);
    let gram = if cols.len() <= v.nrows() { w.transpose() * &w } else { &w * w.transpose() };
    linalg::det(&(DMatrix::identity(gram.nrows(), gram.nrows()) - gram))
}

/// Total weight of configurations containing every mode in `cols`.
fn weight_containing(v: &DMatrix<f64>, cols: &[usize]) -> f64 {
    if cols.len() > v.nrows() {
        return 0.0;
    }
    let w = gather_cols(v, cols);
    linalg::det(&(w.transpose() * w))
}

/// `b_s²` with the edge on the right: exactly one of the two modes of site
/// `s` and nothing further right in the chain.
fn right_edge_squared(v: &DMatrix<f64>, s: usize, n: usize) -> f64 {
    let (x, y) = (2 * s - 2, 2 * s - 1);
    let far: Vec<usize> = (2 * s..2 * n).collect();
    let mut total = 0.0;
    for (a, b) in [(x, y), (y, x)] {
        let mut f1 = far.clone();
        f1.push(b);
        let mut f2 = f1.clone();
        f2.push(a);
        total += weight_avoiding(v, &f1) - weight_avoiding(v, &f2);
    }
    total
}

/// `b_s²` with the edge on the left: every mode of sites `1..s` and exactly
/// one mode of site `s`.
fn left_edge_squared(v: &DMatrix<f64>, s: usize) -> f64 {
    let (x, y) = (2 * s - 2, 2 * s - 1);
    let near: Vec<usize> = (0..2 * s - 2).collect();
    let mut total = 0.0;
    for (a, b) in [(x, y), (y, x)] {
        let mut s1 = near.clone();
        s1.push(a);
        let mut s2 = s1.clone();
        s2.push(b);
        total += weight_containing(v, &s1) - weight_containing(v, &s2);
    }
    total
}

fn edge_sqrt(b2: f64) -> f64 {
    debug_assert!(b2 > -1e-9, "negative boundary weight {b2}");
    b2.clamp(0.0, 1.0).sqrt()
}

fn check_boundary_args(u: &SingleParticleMatrix, alpha: &ModeTuple, n: usize) -> Result<()> {
    if alpha.len() % 2 == 0 {
        return Err(Error::input("boundary weights are defined for odd-parity operators only"));
    }
    if 2 * n > u.nrows() || alpha.last_mode().unwrap_or(0) > u.nrows() {
        return Err(Error::input("configuration or chain exceeds the mode count"));
    }
    Ok(())
}

/// `b_s` for all sites `1..=n` of the chain. Modes beyond `2n` (ancillas) are
/// summed over freely and never count as an edge.
pub fn boundary_profile(u: &SingleParticleMatrix, alpha: &ModeTuple, n: usize) -> Result<Vec<f64>> {
    check_boundary_args(u, alpha, n)?;
    Ok(boundary_profile_unchecked(u, &alpha.zero_based(), n))
}

pub(crate) fn boundary_profile_unchecked(u: &SingleParticleMatrix, alpha: &[usize], n: usize) -> Vec<f64> {
    let v = selected_rows(u, alpha);
    let c = n / 2;
    (1..=n)
        .map(|s| {
            if s > c {
                edge_sqrt(right_edge_squared(&v, s, n))
            } else if s < c {
                edge_sqrt(left_edge_squared(&v, s))
            } else {
                edge_sqrt(right_edge_squared(&v, s, n)).max(edge_sqrt(left_edge_squared(&v, s)))
            }
        })
        .collect()
}

/// `det [[0, u_{αS}ᵀ], [u_{αS}, u_{αN} u_{αN}ᵀ]]`, which is `(−1)^{|S|}` times
/// the weight of configurations containing all of `S` with the rest drawn
/// from `N`.
fn pinned_block_det(v: &DMatrix<f64>, pinned: &[usize], free: &[usize]) -> f64 {
    let (ks, ka) = (pinned.len(), v.nrows());
    let vs = gather_cols(v, pinned);
    let vn = gather_cols(v, free);
    let mut m = DMatrix::<f64>::zeros(ks + ka, ks + ka);
    m.view_mut((0, ks), (ks, ka)).copy_from(&vs.transpose());
    m.view_mut((ks, 0), (ka, ks)).copy_from(&vs);
    m.view_mut((ks, ks), (ka, ka)).copy_from(&(&vn * vn.transpose()));
    linalg::det(&m)
}

/// `b_s` at one site from the two block determinants whose sum is `−b_s²`.
/// Right-edge form for `s ≥ ⌊n/2⌋`, left-edge form for `s ≤ ⌊n/2⌋`, the
/// larger of the two at `s = ⌊n/2⌋`.
pub fn boundary_weight(u: &SingleParticleMatrix, alpha: &ModeTuple, s: usize, n: usize) -> Result<f64> {
    check_boundary_args(u, alpha, n)?;
    if s == 0 || s > n {
        return Err(Error::input(format!("site {s} outside 1..={n}")));
    }
    let v = selected_rows(u, &alpha.zero_based());
    let modes = u.ncols();
    let (x, y) = (2 * s - 2, 2 * s - 1);
    let right = || {
        let free: Vec<usize> = (0..modes).filter(|&m| m < x || m >= 2 * n).collect();
        let neg: f64 = [x, y].iter().map(|&p| pinned_block_det(&v, &[p], &free)).sum();
        edge_sqrt(-neg)
    };
    let left = || {
        let free: Vec<usize> = (y + 1..modes).collect();
        let neg: f64 = [x, y]
            .iter()
            .map(|&p| {
                let mut pinned: Vec<usize> = (0..x).collect();
                pinned.push(p);
                pinned_block_det(&v, &pinned, &free)
            })
            .sum();
        edge_sqrt(-neg)
    };
    let c = n / 2;
    Ok(if s > c {
        right()
    } else if s < c {
        left()
    } else {
        right().max(left())
    })
}

fn gaussian_only(circuit: &Circuit) -> Result<Vec<SingleParticleMatrix>> {
    if circuit.interaction_count() > 0 {
        return Err(Error::input("the Gaussian engine does not accept interaction gates"));
    }
    Ok(circuit.propagators().into_iter().flatten().collect())
}

/// Probe configurations `η_s` for a single-site letter on every site.
pub(crate) fn probe_configs(letter: char, n: usize) -> Result<Vec<Vec<usize>>> {
    (1..=n).map(|s| PauliObservable::single_site(letter, s, n).map(|p| p.config.zero_based())).collect()
}

/// `𝒞(P_s, B(t))` at `t = 0` and after every Gaussian layer.
pub fn gaussian_lightcone(circuit: &Circuit, b: &PauliObservable, probe: char) -> Result<Vec<Vec<f64>>> {
    let n = circuit.n;
    let props = gaussian_only(circuit)?;
    let probes = probe_configs(probe, n)?;
    let alpha = b.config.zero_based();
    let row = |u: &SingleParticleMatrix| probes.iter().map(|eta| clamp_otoc(otoc_squared(u, &alpha, eta))).collect();
    let mut u = DMatrix::identity(2 * n, 2 * n);
    let mut rows: Vec<Vec<f64>> = vec![row(&u)];
    for g in &props {
        u *= g;
        rows.push(row(&u));
    }
    Ok(rows)
}

/// `b_s(t)` at `t = 0` and after every Gaussian layer.
pub fn boundary_lightcone(circuit: &Circuit, b: &PauliObservable) -> Result<Vec<BoundaryProfile>> {
    let n = circuit.n;
    let props = gaussian_only(circuit)?;
    let mut u = DMatrix::identity(2 * n, 2 * n);
    check_boundary_args(&u, &b.config, n)?;
    let alpha = b.config.zero_based();
    let mut t = 0.0;
    let mut out = vec![BoundaryProfile { weights: boundary_profile_unchecked(&u, &alpha, n), time: t }];
    let durations = circuit.layers.iter().filter_map(|l| match l {
        CircuitLayer::Gaussian(g) => Some(g.duration),
        CircuitLayer::Interaction(_) => None,
    });
    for (g, dt) in props.iter().zip(durations) {
        u *= g;
        t += dt;
        out.push(BoundaryProfile { weights: boundary_profile_unchecked(&u, &alpha, n), time: t });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn x_center(n: usize) -> PauliObservable {
        PauliObservable::single_site('X', n / 2, n).unwrap()
    }

    #[test]
    fn anticommuting_pair_at_t0() {
        let u = DMatrix::identity(8, 8);
        let z2 = ModeTuple::new(vec![3, 4]).unwrap();
        let x2 = PauliObservable::single_site('X', 2, 4).unwrap().config;
        let x3 = PauliObservable::single_site('X', 3, 4).unwrap().config;
        assert!((gaussian_otoc(&u, &z2, &x2).unwrap() - 1.0).abs() < 1e-14);
        assert!(gaussian_otoc(&u, &z2, &x3).unwrap().abs() < 1e-14);
    }

    #[test]
    fn boundary_at_t0_sits_on_center() {
        let n = 6;
        let u = DMatrix::identity(2 * n, 2 * n);
        let b = boundary_profile(&u, &x_center(n).config, n).unwrap();
        for s in 1..=n {
            let expect = if s == n / 2 { 1.0 } else { 0.0 };
            assert!((b[s - 1] - expect).abs() < 1e-12, "site {s}: {}", b[s - 1]);
            let block = boundary_weight(&u, &x_center(n).config, s, n).unwrap();
            assert!((block - expect).abs() < 1e-12);
        }
    }

    #[test]
    fn even_operator_is_rejected() {
        let u = DMatrix::identity(4, 4);
        let z = ModeTuple::new(vec![1, 2]).unwrap();
        assert!(boundary_profile(&u, &z, 2).is_err());
    }

    #[test]
    fn interactions_are_refused() {
        let c = Circuit::new(4, vec![CircuitLayer::Interaction(1)]).unwrap();
        assert!(gaussian_lightcone(&c, &x_center(4), 'Z').is_err());
    }
}
