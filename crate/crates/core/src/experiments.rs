//! Disorder ensembles, the ε scan, and lightcone-shape analyses.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::approx::approx_lightcone;
use crate::circuit::{alternating_circuit_for, gaussian_circuit_with_gates, Circuit, DisorderRealization, DEFAULT_DT};
use crate::error::{Error, Result};
use crate::exact::exact_lightcone;
use crate::gaussian::{boundary_lightcone, gaussian_lightcone};
use crate::majorana::PauliObservable;
use crate::oracle;

/// Default start of the logarithmic fit window, `11π/4`.
pub const DEFAULT_FIT_START: f64 = 11.0 * std::f64::consts::FRAC_PI_4;

pub const DEFAULT_SEED: u64 = 2024;

/// Threshold on `𝒞` that defines lightcone support.
pub const SUPPORT_THRESHOLD: f64 = 0.1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Engine {
    Exact,
    Approx,
    Gaussian,
    Oracle,
}

impl Engine {
    pub fn name(self) -> &'static str {
        match self {
            Engine::Exact => "exact",
            Engine::Approx => "approx",
            Engine::Gaussian => "gaussian",
            Engine::Oracle => "oracle",
        }
    }
}

impl std::str::FromStr for Engine {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact" => Ok(Engine::Exact),
            "approx" => Ok(Engine::Approx),
            "gaussian" => Ok(Engine::Gaussian),
            "oracle" => Ok(Engine::Oracle),
            other => Err(Error::input(format!("unknown engine '{other}'"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridMeta {
    pub engine: String,
    pub n: usize,
    pub nu: f64,
    pub epsilon: Option<f64>,
    pub dt: f64,
    pub periods: usize,
    pub base_seed: u64,
    pub realizations: usize,
    /// Evolved observable, e.g. `X15`.
    #[serde(default)]
    pub b: String,
    #[serde(default)]
    pub probe: String,
    /// Placed gates as `(qubit, after layer)`; absent for the brickwork circuit.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gates: Option<Vec<(usize, usize)>>,
}

/// `𝒞(P_s, B(t))` for a probe letter `P` on every site, one row per time.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LightconeGrid {
    pub times: Vec<f64>,
    pub values: Vec<Vec<f64>>,
    pub meta: GridMeta,
}

impl LightconeGrid {
    pub fn new(times: Vec<f64>, values: Vec<Vec<f64>>, meta: GridMeta) -> Result<Self> {
        if times.len() != values.len() {
            return Err(Error::input(format!("{} times for {} rows", times.len(), values.len())));
        }
        if values.iter().any(|r| r.len() != meta.n) {
            return Err(Error::input("every row must have one value per site"));
        }
        if times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::input("grid times must be strictly increasing"));
        }
        if values.iter().flatten().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::input("grid values must lie in [0, 1]"));
        }
        Ok(LightconeGrid { times, values, meta })
    }

    pub fn rows(&self) -> usize {
        self.values.len()
    }

    pub fn sites(&self) -> usize {
        self.meta.n
    }

    pub fn matrix(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.rows(), self.sites(), |r, c| self.values[r][c])
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnsembleSpec {
    pub n: usize,
    pub nu: f64,
    pub dt: f64,
    pub periods: usize,
    pub epsilon: f64,
    pub realizations: usize,
    pub base_seed: u64,
    /// Evolved single-site Pauli; `None` is `X_{⌊n/2⌋}`.
    #[serde(default)]
    pub b: Option<(char, usize)>,
    #[serde(default = "default_probe")]
    pub probe: char,
    /// Gates placed on a purely Gaussian circuit of `2·periods` layers, as
    /// `(qubit, after layer)`. `None` is the alternating brickwork.
    #[serde(default)]
    pub gates: Option<Vec<(usize, usize)>>,
}

fn default_probe() -> char {
    'Z'
}

impl Default for EnsembleSpec {
    fn default() -> Self {
        EnsembleSpec {
            n: 6,
            nu: 0.0,
            dt: DEFAULT_DT,
            periods: 5,
            epsilon: 0.2,
            realizations: 1,
            base_seed: DEFAULT_SEED,
            b: None,
            probe: 'Z',
            gates: None,
        }
    }
}

impl EnsembleSpec {
    pub fn validate(&self) -> Result<()> {
        if self.realizations == 0 {
            return Err(Error::input("realizations must be ≥ 1"));
        }
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(Error::input(format!("dt must be positive, got {}", self.dt)));
        }
        Ok(())
    }

    pub fn disorder(&self, r: usize) -> Result<DisorderRealization> {
        DisorderRealization::draw(self.n, self.nu, self.base_seed, r as u64)
    }

    pub fn circuit(&self, r: usize, interactions: bool) -> Result<Circuit> {
        match (&self.gates, interactions) {
            (Some(gates), true) => gaussian_circuit_with_gates(&self.disorder(r)?, self.dt, 2 * self.periods, gates),
            (Some(_), false) => gaussian_circuit_with_gates(&self.disorder(r)?, self.dt, 2 * self.periods, &[]),
            (None, _) => alternating_circuit_for(&self.disorder(r)?, self.dt, self.periods, interactions),
        }
    }

    pub fn observable(&self) -> (char, usize) {
        self.b.unwrap_or(('X', self.n / 2))
    }

    pub fn times(&self) -> Vec<f64> {
        (0..=2 * self.periods).map(|k| k as f64 * self.dt).collect()
    }

    fn meta(&self, engine: Engine) -> GridMeta {
        GridMeta {
            engine: engine.name().to_string(),
            n: self.n,
            nu: self.nu,
            epsilon: (engine == Engine::Approx).then_some(self.epsilon),
            dt: self.dt,
            periods: self.periods,
            base_seed: self.base_seed,
            realizations: self.realizations,
            b: {
                let (letter, site) = self.observable();
                format!("{letter}{site}")
            },
            probe: self.probe.to_string(),
            gates: self.gates.clone(),
        }
    }
}

/// Lightcone rows of one disorder realization.
pub fn realization_rows(spec: &EnsembleSpec, engine: Engine, r: usize, max_gates: usize) -> Result<Vec<Vec<f64>>> {
    let n = spec.n;
    let (letter, site) = spec.observable();
    let b = PauliObservable::single_site(letter, site, n)?;
    match engine {
        Engine::Gaussian => gaussian_lightcone(&spec.circuit(r, false)?, &b, spec.probe),
        Engine::Approx => {
            if (letter, site, spec.probe) != ('X', n / 2, 'Z') {
                return Err(Error::input(format!("the approximate engine evolves X{} against Z probes only", n / 2)));
            }
            Ok(approx_lightcone(&spec.circuit(r, true)?, spec.epsilon)?.rows)
        }
        Engine::Exact => exact_lightcone(&spec.circuit(r, true)?, &b, spec.probe, max_gates),
        Engine::Oracle => {
            let bm = oracle::single_site(letter, site, n)?;
            oracle::dense_lightcone(&spec.circuit(r, true)?, &bm, spec.probe)
        }
    }
}

fn mean_rows(per_realization: &[Vec<Vec<f64>>]) -> Vec<Vec<f64>> {
    let count = per_realization.len() as f64;
    let mut acc = per_realization[0].clone();
    for rows in &per_realization[1..] {
        for (a, b) in acc.iter_mut().zip(rows) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += y;
            }
        }
    }
    for row in &mut acc {
        for x in row.iter_mut() {
            *x = (*x / count).clamp(0.0, 1.0);
        }
    }
    acc
}

/// Mean of `𝒞` over `R` realizations. Realizations run in parallel; the sum
/// is taken in realization order.
pub fn run_ensemble(spec: &EnsembleSpec, engine: Engine, max_gates: usize) -> Result<LightconeGrid> {
    spec.validate()?;
    let rows: Vec<Vec<Vec<f64>>> = (0..spec.realizations)
        .into_par_iter()
        .map(|r| realization_rows(spec, engine, r, max_gates))
        .collect::<Result<_>>()?;
    LightconeGrid::new(spec.times(), mean_rows(&rows), spec.meta(engine))
}

/// Mean boundary weight `b_s(t)` of the interaction-free circuits.
pub fn run_boundary_ensemble(spec: &EnsembleSpec) -> Result<LightconeGrid> {
    spec.validate()?;
    let (letter, site) = spec.observable();
    let b = PauliObservable::single_site(letter, site, spec.n)?;
    let rows: Vec<Vec<Vec<f64>>> = (0..spec.realizations)
        .into_par_iter()
        .map(|r| {
            let profiles = boundary_lightcone(&spec.circuit(r, false)?, &b)?;
            Ok(profiles.into_iter().map(|p| p.weights).collect())
        })
        .collect::<Result<_>>()?;
    let mut meta = spec.meta(Engine::Gaussian);
    meta.engine = "boundary".into();
    LightconeGrid::new(spec.times(), mean_rows(&rows), meta)
}

/// `‖A − E‖_F / (T·n)`.
pub fn per_pixel_error(a: &[Vec<f64>], e: &[Vec<f64>]) -> f64 {
    let mut sq = 0.0;
    let mut count = 0usize;
    for (ra, re) in a.iter().zip(e) {
        for (x, y) in ra.iter().zip(re) {
            sq += (x - y) * (x - y);
            count += 1;
        }
    }
    sq.sqrt() / count as f64
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpsilonScan {
    pub epsilons: Vec<f64>,
    pub errors: Vec<f64>,
    /// Most prominent interior local minimum, if any.
    pub minimizer: Option<f64>,
    /// Its prominence: the lower of the highest points on either side, minus the minimum.
    pub depth: f64,
    pub range: f64,
}

impl EpsilonScan {
    pub fn relative_depth(&self) -> f64 {
        if self.range > 0.0 {
            self.depth / self.range
        } else {
            0.0
        }
    }
}

pub fn analyze_curve(epsilons: Vec<f64>, errors: Vec<f64>) -> EpsilonScan {
    let k = errors.len();
    let max = errors.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = errors.iter().cloned().fold(f64::INFINITY, f64::min);
    let mut best: Option<(usize, f64)> = None;
    for i in 1..k.saturating_sub(1) {
        if errors[i] < errors[i - 1] && errors[i] <= errors[i + 1] {
            let left = errors[..i].iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let right = errors[i + 1..].iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let depth = left.min(right) - errors[i];
            if best.is_none_or(|(_, d)| depth > d) {
                best = Some((i, depth));
            }
        }
    }
    EpsilonScan {
        minimizer: best.map(|(i, _)| epsilons[i]),
        depth: best.map_or(0.0, |(_, d)| d),
        range: if k > 0 { max - min } else { 0.0 },
        epsilons,
        errors,
    }
}

/// Per-pixel error of the approximation against the dense oracle, averaged
/// over realizations, for each threshold in `epsilons`.
pub fn optimize_epsilon(spec: &EnsembleSpec, epsilons: &[f64]) -> Result<EpsilonScan> {
    spec.validate()?;
    if epsilons.is_empty() {
        return Err(Error::input("empty ε grid"));
    }
    let per_r: Vec<Vec<f64>> = (0..spec.realizations)
        .into_par_iter()
        .map(|r| {
            let exact = realization_rows(spec, Engine::Oracle, r, 0)?;
            let circuit = spec.circuit(r, true)?;
            epsilons
                .iter()
                .map(|&eps| Ok(per_pixel_error(&approx_lightcone(&circuit, eps)?.rows, &exact)))
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<_>>()?;
    let mut errors = vec![0.0; epsilons.len()];
    for row in &per_r {
        for (e, x) in errors.iter_mut().zip(row) {
            *e += x;
        }
    }
    for e in &mut errors {
        *e /= spec.realizations as f64;
    }
    Ok(analyze_curve(epsilons.to_vec(), errors))
}

/// ε values `step, 2·step, …` strictly below 1.
pub fn epsilon_grid(step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0 && step < 1.0) {
        return Err(Error::input(format!("ε step must be in (0, 1), got {step}")));
    }
    let count = ((1.0 - 1e-9) / step).floor() as usize;
    Ok((1..=count).map(|k| (k as f64 * step * 1e9).round() / 1e9).collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub points: usize,
}

/// Least-squares line through `(x, y)`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> Option<LinearFit> {
    let k = x.len();
    if k < 2 || k != y.len() {
        return None;
    }
    let mx = x.iter().sum::<f64>() / k as f64;
    let my = y.iter().sum::<f64>() / k as f64;
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|b| (b - my) * (b - my)).sum();
    if sxx == 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = x.iter().zip(y).map(|(a, b)| (b - intercept - slope * a).powi(2)).sum();
    let r_squared = if syy == 0.0 { 1.0 } else { 1.0 - ss_res / syy };
    Some(LinearFit { slope, intercept, r_squared, points: k })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PrincipalVector {
    pub sigma1: f64,
    pub u1: Vec<f64>,
    pub v1: Vec<f64>,
    /// `u1` against `log₁₀ t` on the fit window.
    pub semilog_fit: Option<LinearFit>,
    /// `u1` against `t` on the same window.
    pub linear_fit: Option<LinearFit>,
    pub degenerate: bool,
}

/// Rank-1 factor of the grid and fits of its time vector.
pub fn svd_principal_vector(grid: &LightconeGrid, fit_start: f64) -> Result<PrincipalVector> {
    if grid.rows() < 2 || grid.sites() < 2 {
        return Err(Error::input("SVD analysis needs at least a 2×2 grid"));
    }
    let svd = grid.matrix().svd(true, true);
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    let top = order[0];
    let sigma1 = svd.singular_values[top];
    let sigma2 = order.get(1).map_or(0.0, |&i| svd.singular_values[i]);
    let u = svd.u.expect("left vectors");
    let vt = svd.v_t.expect("right vectors");
    let mut u1: Vec<f64> = u.column(top).iter().copied().collect();
    let mut v1: Vec<f64> = vt.row(top).iter().copied().collect();
    if u1.iter().sum::<f64>() < 0.0 {
        u1.iter_mut().for_each(|x| *x = -*x);
        v1.iter_mut().for_each(|x| *x = -*x);
    }
    let degenerate = sigma1 - sigma2 < 1e-12;
    let (mut semilog, mut lin) = (None, None);
    if !degenerate {
        let window: Vec<usize> =
            (0..grid.rows()).filter(|&r| grid.times[r] >= fit_start && grid.times[r] > 0.0).collect();
        let t: Vec<f64> = window.iter().map(|&r| grid.times[r]).collect();
        let y: Vec<f64> = window.iter().map(|&r| u1[r]).collect();
        let logt: Vec<f64> = t.iter().map(|x| x.log10()).collect();
        semilog = linear_fit(&logt, &y);
        lin = linear_fit(&t, &y);
    }
    Ok(PrincipalVector { sigma1, u1, v1, semilog_fit: semilog, linear_fit: lin, degenerate })
}

/// Largest `𝒞` reached at site `s` over the run.
pub fn asymptotic_value(grid: &LightconeGrid, s: usize) -> Result<f64> {
    if s == 0 || s > grid.sites() {
        return Err(Error::input(format!("site {s} outside 1..={}", grid.sites())));
    }
    Ok(grid.values.iter().map(|r| r[s - 1]).fold(0.0, f64::max))
}

/// Outermost sites (1-based) with `𝒞 > threshold`.
pub fn envelope(row: &[f64], threshold: f64) -> Option<(usize, usize)> {
    let left = row.iter().position(|&v| v > threshold)?;
    let right = row.iter().rposition(|&v| v > threshold)?;
    Some((left + 1, right + 1))
}

pub fn support_width(row: &[f64], threshold: f64) -> usize {
    envelope(row, threshold).map_or(0, |(l, r)| r - l + 1)
}

/// Mean support width over rows `[from·T, to·T)`.
pub fn mean_width(grid: &LightconeGrid, from: f64, to: f64, threshold: f64) -> f64 {
    let t = grid.rows();
    let (a, b) = ((from * t as f64).floor() as usize, ((to * t as f64).floor() as usize).min(t));
    let widths: Vec<usize> = grid.values[a..b].iter().map(|r| support_width(r, threshold)).collect();
    widths.iter().sum::<usize>() as f64 / widths.len().max(1) as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    fn meta(n: usize) -> GridMeta {
        GridMeta {
            engine: "test".into(),
            n,
            nu: 0.0,
            epsilon: None,
            dt: 1.0,
            periods: 1,
            base_seed: 0,
            realizations: 1,
            b: "X1".into(),
            probe: "Z".into(),
            gates: None,
        }
    }

    #[test]
    fn rank_one_grid_is_recovered() {
        let v = [0.2, 0.5, 0.9, 0.4];
        let w = [1.0, 0.5, 0.25];
        let values: Vec<Vec<f64>> = v.iter().map(|a| w.iter().map(|b| a * b).collect()).collect();
        let times: Vec<f64> = (1..=4).map(|k| k as f64).collect();
        let grid = LightconeGrid::new(times, values, meta(3)).unwrap();
        let pv = svd_principal_vector(&grid, 0.0).unwrap();
        let nv = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        for (a, b) in pv.u1.iter().zip(v) {
            assert!((a - b / nv).abs() < 1e-12);
        }
        let nw = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        assert!((pv.sigma1 - nv * nw).abs() < 1e-12);
    }

    #[test]
    fn exact_line_has_unit_r_squared() {
        let x = [1.0, 2.0, 3.0, 4.0];
        let y = [3.0, 5.0, 7.0, 9.0];
        let f = linear_fit(&x, &y).unwrap();
        assert!((f.slope - 2.0).abs() < 1e-12);
        assert!((f.intercept - 1.0).abs() < 1e-12);
        assert!((f.r_squared - 1.0).abs() < 1e-12);
    }

    #[test]
    fn asymptotic_value_of_zero_grid() {
        let grid = LightconeGrid::new(vec![0.0, 1.0], vec![vec![0.0; 3]; 2], meta(3)).unwrap();
        assert_eq!(asymptotic_value(&grid, 2).unwrap(), 0.0);
        assert!(asymptotic_value(&grid, 4).is_err());
    }

    #[test]
    fn curve_minimum_detection() {
        let eps = vec![0.1, 0.2, 0.3, 0.4, 0.5];
        let scan = analyze_curve(eps.clone(), vec![5.0, 3.0, 1.0, 2.0, 4.0]);
        assert_eq!(scan.minimizer, Some(0.3));
        assert_eq!(scan.depth, 3.0);
        let flat = analyze_curve(eps, vec![5.0, 4.0, 3.0, 2.0, 1.0]);
        assert_eq!(flat.minimizer, None);
        assert_eq!(flat.relative_depth(), 0.0);
    }

    #[test]
    fn epsilon_grid_step() {
        let g = epsilon_grid(0.05).unwrap();
        assert_eq!(g.len(), 19);
        assert_eq!(g[0], 0.05);
        assert_eq!(g[18], 0.95);
    }

    #[test]
    fn envelopes() {
        let row = [0.0, 0.05, 0.3, 0.9, 0.2, 0.0];
        assert_eq!(envelope(&row, 0.1), Some((3, 5)));
        assert_eq!(support_width(&row, 0.1), 3);
        assert_eq!(envelope(&[0.0; 3], 0.1), None);
    }
}
