//! Conserved symbols, distribution functions, self-trapping diagnostics,
//! analytic and numerical critical nonlinearity, and Jordan-Wigner fermion
//! observables evaluated on lattice states.

use alloc::format;
use alloc::vec::Vec;

use num_complex::Complex64;
use num_traits::Float;

use crate::dynamics::{integrate, GdstModel, IntegratorConfig, Trajectory};
use crate::error::{Error, Result};
use crate::lattice::{
    site_offset, single_site_excitation, BosonLatticeState, GdstParams, MdnlsParams, Ordering,
    SpinLatticeState, XxzParams,
};

/// Total boson norm N = sum |beta_j|^2, conserved by the GDST and MDNLS flows.
pub fn boson_norm(state: &BosonLatticeState) -> f64 {
    state.amplitudes().iter().map(|b| b.norm_sqr()).sum()
}

/// Coherent-state symbol of the GDST Hamiltonian:
/// sum_k (w0 |b_k|^2 - (gamma/m)|b_k|^{2m}) - sum_{k!=l} lambda_kl b_k conj(b_l)
/// - gamma sum_k sum_n mu_n |b_k|^{2n}  (last double sum SO only).
pub fn gdst_energy(state: &BosonLatticeState, p: &GdstParams) -> Result<f64> {
    if state.len() != p.f() {
        return Err(Error::ShapeMismatch { expected: p.f(), found: state.len() });
    }
    Ok(gdst_energy_raw(state.amplitudes(), p))
}

pub(crate) fn gdst_energy_raw(state: &[Complex64], p: &GdstParams) -> f64 {
    let f = p.f();
    let mu = p.so_coefficients();
    let mut h = 0.0;
    for k in 0..f {
        let n = state[k].norm_sqr();
        h += p.omega0 * n - p.gamma / p.m as f64 * Float::powi(n, p.m as i32);
        if p.ordering.is_symmetric() {
            for (idx, &mu_n) in mu.mu().iter().enumerate() {
                h -= p.gamma * mu_n * Float::powi(n, idx as i32 + 1);
            }
        }
        for l in 0..f {
            let lam = p.coupling.get(k, l);
            if lam != 0.0 {
                h -= lam * (state[k] * state[l].conj()).re;
            }
        }
    }
    h
}

/// Coherent-state symbol of the MDNLS Hamiltonian on the ring:
/// V sum (A_j conj(A_{j+1}) + c.c.) - X sum (|A_{j+1}|^2 |A_{j+2}|^2 + |A_j|^4)
/// - (3X/2) sum |A_j|^2  (shift term SO only).
pub fn mdnls_energy(state: &BosonLatticeState, p: &MdnlsParams) -> Result<f64> {
    if state.len() != p.f {
        return Err(Error::ShapeMismatch { expected: p.f, found: state.len() });
    }
    Ok(mdnls_energy_raw(state.amplitudes(), p))
}

pub(crate) fn mdnls_energy_raw(state: &[Complex64], p: &MdnlsParams) -> f64 {
    let f = p.f;
    let mut h = 0.0;
    for j in 0..f {
        let a = state[j];
        let next = state[(j + 1) % f];
        let next2 = state[(j + 2) % f];
        h += 2.0 * p.v * (a * next.conj()).re;
        h -= p.x * (next.norm_sqr() * next2.norm_sqr() + a.norm_sqr() * a.norm_sqr());
        if p.ordering.is_symmetric() {
            h -= 1.5 * p.x * a.norm_sqr();
        }
    }
    h
}

/// Spin-1/2 sigma^z symbol at one site: (|z|^2 - 1)/(2(1 + |z|^2)).
#[inline]
pub(crate) fn sz_symbol(z: Complex64) -> f64 {
    let u = z.norm_sqr();
    (u - 1.0) / (2.0 * (1.0 + u))
}

/// Coherent-state symbol of H_XXZ with product factorization across sites:
/// V sum <sz_j><sz_{j+1}> - g sum (<s+_j><s-_{j+1}> + <s-_j><s+_{j+1}>).
pub fn xxz_energy_symbol(state: &SpinLatticeState, p: &XxzParams) -> Result<f64> {
    if state.len() != p.f {
        return Err(Error::ShapeMismatch { expected: p.f, found: state.len() });
    }
    Ok(xxz_energy_symbol_raw(state.coords(), p))
}

pub(crate) fn xxz_energy_symbol_raw(state: &[Complex64], p: &XxzParams) -> f64 {
    let f = p.f;
    let mut h = 0.0;
    for j in 0..f {
        let z = state[j];
        let next = state[(j + 1) % f];
        h += p.v * sz_symbol(z) * sz_symbol(next);
        // <s+_j><s-_{j+1}> + c.c. = 2 Re(conj(z_j) z_{j+1}) / ((1+u_j)(1+u_{j+1}))
        h -= p.g * 2.0 * (z.conj() * next).re / ((1.0 + z.norm_sqr()) * (1.0 + next.norm_sqr()));
    }
    h
}

/// Total sigma^z symbol, sum_j (|z_j|^2 - 1)/(2(1 + |z_j|^2)), in [-f/2, f/2].
pub fn total_sz_symbol(state: &SpinLatticeState) -> f64 {
    total_sz_symbol_raw(state.coords())
}

pub(crate) fn total_sz_symbol_raw(state: &[Complex64]) -> f64 {
    state.iter().map(|&z| sz_symbol(z)).sum()
}

/// Husimi Q-function of a single-mode coherent state sampled on a regular
/// grid of the reference-state label beta_r = x_r + i y_r.
#[derive(Debug, Clone)]
pub struct QFunctionField {
    pub grid_x: Vec<f64>,
    pub grid_y: Vec<f64>,
    /// Row-major values[iy * grid_x.len() + ix], all non-negative.
    pub values: Vec<f64>,
}

impl QFunctionField {
    pub fn value(&self, ix: usize, iy: usize) -> f64 {
        self.values[iy * self.grid_x.len() + ix]
    }

    /// Riemann-sum integral: grid cell area times the sum of the values.
    pub fn integral(&self) -> f64 {
        if self.grid_x.len() < 2 || self.grid_y.len() < 2 {
            return 0.0;
        }
        let dx = self.grid_x[1] - self.grid_x[0];
        let dy = self.grid_y[1] - self.grid_y[0];
        dx * dy * self.values.iter().sum::<f64>()
    }

    /// Grid point of the maximum value, as (x, y).
    pub fn argmax(&self) -> (f64, f64) {
        let mut best = 0;
        for (i, v) in self.values.iter().enumerate() {
            if *v > self.values[best] {
                best = i;
            }
        }
        (self.grid_x[best % self.grid_x.len()], self.grid_y[best / self.grid_x.len()])
    }
}

/// Q-function of the pure coherent state |beta>: a displaced unit-variance
/// Gaussian, Q(x, y) = exp(-(x - Re beta)^2 - (y - Im beta)^2) / pi.
pub fn q_function(beta: Complex64, grid_x: &[f64], grid_y: &[f64]) -> Result<QFunctionField> {
    if grid_x.is_empty() || grid_y.is_empty() {
        return Err(Error::InvalidParameter("Q-function grid must be non-empty".into()));
    }
    let inv_pi = 1.0 / core::f64::consts::PI;
    let mut values = Vec::with_capacity(grid_x.len() * grid_y.len());
    for &y in grid_y {
        for &x in grid_x {
            let dx = x - beta.re;
            let dy = y - beta.im;
            values.push(inv_pi * Float::exp(-dx * dx - dy * dy));
        }
    }
    Ok(QFunctionField { grid_x: grid_x.to_vec(), grid_y: grid_y.to_vec(), values })
}

/// Default Q-function grid: square window centered on the amplitude with
/// half-width max(6, |beta| + 6) and spacing 0.05, which captures all but
/// about 1e-8 of the Gaussian mass.
pub fn q_function_default_grid(beta: Complex64) -> (Vec<f64>, Vec<f64>) {
    let half_width = Float::max(6.0, beta.norm() + 6.0);
    let spacing = 0.05;
    // whole number of steps per side so the amplitude itself is a grid point
    let half_steps = Float::ceil(half_width / spacing) as usize;
    let n = 2 * half_steps + 1;
    let make = |center: f64| -> Vec<f64> {
        (0..n)
            .map(|i| center + spacing * (i as f64 - half_steps as f64))
            .collect()
    };
    (make(beta.re), make(beta.im))
}

/// Poisson number distribution of a single boson mode in a coherent state.
#[derive(Debug, Clone)]
pub struct PoissonDist {
    /// P_n for n = 0..=n_max.
    pub probs: Vec<f64>,
    /// 1 - sum(probs); the mass beyond the cutoff.
    pub tail_mass: f64,
}

impl PoissonDist {
    /// Mean sum n P_n over the tabulated range.
    pub fn mean(&self) -> f64 {
        self.probs.iter().enumerate().map(|(n, p)| n as f64 * p).sum()
    }
}

/// P_n = exp(-|beta|^2) |beta|^{2n} / n!, via the stable recurrence
/// P_{n+1} = P_n |beta|^2 / (n + 1).
pub fn poisson_distribution(beta: Complex64, n_max: usize) -> PoissonDist {
    let mean = beta.norm_sqr();
    let mut probs = Vec::with_capacity(n_max + 1);
    let mut p = Float::exp(-mean);
    probs.push(p);
    for n in 0..n_max {
        p *= mean / (n + 1) as f64;
        probs.push(p);
    }
    let tail_mass = Float::max(0.0, 1.0 - probs.iter().sum::<f64>());
    PoissonDist { probs, tail_mass }
}

/// Analytic critical nonlinearity of the quintic (m = 3) GDST dimer with
/// lambda = 1: 4/N^2 for NO and 4/(N(N+3)) for SO. For a different coupling
/// lambda, the threshold rescales by lambda.
pub fn gamma_cr_analytic(n_total: f64, ordering: Ordering) -> Result<f64> {
    if !(n_total > 0.0) {
        return Err(Error::InvalidParameter("total excitation number must be > 0".into()));
    }
    Ok(match ordering {
        Ordering::Normal => 4.0 / (n_total * n_total),
        Ordering::Symmetric => 4.0 / (n_total * (n_total + 3.0)),
    })
}

/// Population imbalance r = |beta_1|^2 - |beta_2|^2 of a dimer.
pub fn population_imbalance(state: &BosonLatticeState) -> Result<f64> {
    if state.len() != 2 {
        return Err(Error::ShapeMismatch { expected: 2, found: state.len() });
    }
    let a = state.amplitudes();
    Ok(a[0].norm_sqr() - a[1].norm_sqr())
}

/// Self-trapping criterion: |beta_{j0}(t)|^2 > N/2 at every sample time of
/// the trajectory. Sample spacing should not exceed a tenth of the linear
/// beat period 2 pi / (2 lambda).
pub fn is_self_trapped(traj: &Trajectory, j0: usize, n_total: f64) -> Result<bool> {
    let dim = traj.states().first().map(|s| s.len()).unwrap_or(0);
    let offset = site_offset(j0, dim)?;
    Ok(traj.states().iter().all(|s| s[offset].norm_sqr() > 0.5 * n_total))
}

/// Options for the numerical threshold search.
#[derive(Debug, Clone)]
pub struct GammaCrSearch {
    /// Initially excited site (1-based).
    pub j0: usize,
    /// Simulation horizon; by default 20 linear beat periods.
    pub horizon: f64,
    /// Absolute bracket-width target on gamma.
    pub tol: f64,
    /// Initial bracket [gamma_lo, gamma_hi]; expanded automatically when the
    /// predicate does not change sign across it.
    pub bracket: (f64, f64),
    pub integrator_rel_tol: f64,
    pub integrator_abs_tol: f64,
}

impl GammaCrSearch {
    /// Defaults for a dimer with coupling strength `lam` and threshold
    /// tolerance `tol`: horizon of 20 beat periods, bracket [1e-6, 1].
    pub fn dimer(lam: f64, tol: f64) -> Self {
        let beat_period = core::f64::consts::PI / Float::abs(lam);
        Self {
            j0: 1,
            horizon: 20.0 * beat_period,
            tol,
            bracket: (1e-6, 1.0),
            integrator_rel_tol: IntegratorConfig::DEFAULT_REL_TOL,
            integrator_abs_tol: IntegratorConfig::DEFAULT_ABS_TOL,
        }
    }
}

/// Bisects gamma for the smallest value at which the single-site excitation
/// of `n_total` quanta stays self-trapped over the horizon. The template's
/// gamma value is ignored; everything else (ordering, m, coupling) is kept.
pub fn gamma_cr_numeric(
    template: &GdstParams,
    n_total: f64,
    search: &GammaCrSearch,
) -> Result<f64> {
    if !(n_total > 0.0) {
        return Err(Error::InvalidParameter("total excitation number must be > 0".into()));
    }
    if !(search.tol > 0.0) || !(search.horizon > 0.0) {
        return Err(Error::InvalidParameter("gamma search needs positive tol and horizon".into()));
    }
    let f = template.f();
    let state0 = single_site_excitation(f, search.j0, n_total)?;

    // sample spacing: a tenth of the linear beat period of the largest coupling
    let lam_max = template
        .coupling
        .entries()
        .iter()
        .fold(0.0_f64, |acc, &x| Float::max(acc, Float::abs(x)));
    if lam_max == 0.0 {
        return Err(Error::InvalidParameter(
            "gamma search needs a nonzero coupling matrix".into(),
        ));
    }
    let dt = core::f64::consts::PI / (10.0 * lam_max);
    let n_samples = Float::ceil(search.horizon / dt) as usize;
    let mut cfg = IntegratorConfig::uniform(0.0, search.horizon, n_samples.max(1));
    cfg.rel_tol = search.integrator_rel_tol;
    cfg.abs_tol = search.integrator_abs_tol;

    let trapped = |gamma: f64| -> Result<bool> {
        let p = GdstParams::new(
            template.omega0,
            gamma,
            template.m,
            template.coupling.clone(),
            template.ordering,
        )?;
        let traj = integrate(&GdstModel(&p), state0.amplitudes(), &cfg)?;
        is_self_trapped(&traj, search.j0, n_total)
    };

    let (mut lo, mut hi) = search.bracket;
    if !(lo > 0.0) || !(hi > lo) {
        return Err(Error::InvalidParameter("bracket must satisfy 0 < lo < hi".into()));
    }
    // expand until lo is untrapped and hi is trapped
    let mut expansions = 0;
    while trapped(lo)? {
        lo *= 0.25;
        expansions += 1;
        if expansions > 40 {
            return Err(Error::Bracketing(format!(
                "predicate is self-trapped down to gamma = {lo:e}"
            )));
        }
    }
    expansions = 0;
    while !trapped(hi)? {
        hi *= 4.0;
        expansions += 1;
        if expansions > 40 {
            return Err(Error::Bracketing(format!(
                "no self-trapping found up to gamma = {hi:e}"
            )));
        }
    }

    while hi - lo > search.tol {
        let mid = 0.5 * (lo + hi);
        if trapped(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Jordan-Wigner fermion amplitude <a_j^dagger> = C_j exp(-i theta_j), with
/// theta_j = arg z_j and
/// C_j = |z_j|/(1+|z_j|^2) * prod_{k<j} (1-|z_k|^2)/(1+|z_k|^2).
/// The string factor keeps its sign, so C_j may be negative; the modulus is
/// bounded by 1/2.
pub fn fermion_amplitude(state: &SpinLatticeState, j: usize) -> Result<Complex64> {
    let offset = site_offset(j, state.len())?;
    let z = state.coords()[offset];
    let u = z.norm_sqr();
    let mut c = Float::sqrt(u) / (1.0 + u);
    for k in 0..offset {
        let uk = state.coords()[k].norm_sqr();
        c *= (1.0 - uk) / (1.0 + uk);
    }
    let theta = z.arg();
    Ok(c * Complex64::from_polar(1.0, -theta))
}

/// Fermion number expectation <n_j> = |z_j|^2 / (1 + |z_j|^2), in [0, 1).
pub fn fermion_number(state: &SpinLatticeState, j: usize) -> Result<f64> {
    let offset = site_offset(j, state.len())?;
    let u = state.coords()[offset].norm_sqr();
    Ok(u / (1.0 + u))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::nearest_neighbor_ring;
    use alloc::vec;
    use approx::assert_relative_eq;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn boson_norm_examples() {
        let zero = BosonLatticeState::new(vec![c(0.0, 0.0); 3]).unwrap();
        assert_eq!(boson_norm(&zero), 0.0);
        let s = single_site_excitation(2, 1, 10.0).unwrap();
        assert_relative_eq!(boson_norm(&s), 10.0, max_relative = 1e-15);
        let s = BosonLatticeState::new(vec![c(1.0, 0.0), c(0.0, 1.0)]).unwrap();
        assert_relative_eq!(boson_norm(&s), 2.0, max_relative = 1e-15);
    }

    #[test]
    fn gdst_energy_examples() {
        use crate::lattice::CouplingMatrix;
        let single = CouplingMatrix::new(1, vec![0.0]).unwrap();

        let zero = BosonLatticeState::new(vec![c(0.0, 0.0)]).unwrap();
        let p = GdstParams::new(1.0, 2.0, 2, single.clone(), Ordering::Normal).unwrap();
        assert_eq!(gdst_energy(&zero, &p).unwrap(), 0.0);

        let one = BosonLatticeState::new(vec![c(1.0, 0.0)]).unwrap();
        assert_relative_eq!(gdst_energy(&one, &p).unwrap(), 0.0, epsilon = 1e-15);

        let p = GdstParams::new(0.0, 1.0, 3, single, Ordering::Symmetric).unwrap();
        assert_relative_eq!(gdst_energy(&one, &p).unwrap(), -10.0 / 3.0, max_relative = 1e-14);
    }

    #[test]
    fn mdnls_energy_examples() {
        let zero = BosonLatticeState::new(vec![c(0.0, 0.0); 3]).unwrap();
        let p = MdnlsParams::new(1.0, 0.0, 3, Ordering::Normal).unwrap();
        assert_eq!(mdnls_energy(&zero, &p).unwrap(), 0.0);

        let uniform = BosonLatticeState::new(vec![c(1.0, 0.0); 3]).unwrap();
        assert_relative_eq!(mdnls_energy(&uniform, &p).unwrap(), 6.0, max_relative = 1e-14);

        let p = MdnlsParams::new(0.0, 1.0, 3, Ordering::Symmetric).unwrap();
        assert_relative_eq!(mdnls_energy(&uniform, &p).unwrap(), -10.5, max_relative = 1e-14);
    }

    #[test]
    fn xxz_energy_examples() {
        let f = 4;
        let p = XxzParams::new(2.0, 0.7, f, false).unwrap();
        let down = SpinLatticeState::new(vec![c(0.0, 0.0); f]).unwrap();
        assert_relative_eq!(
            xxz_energy_symbol(&down, &p).unwrap(),
            2.0 * f as f64 / 4.0,
            max_relative = 1e-15
        );

        let uniform = SpinLatticeState::new(vec![c(1.0, 0.0); f]).unwrap();
        assert_relative_eq!(
            xxz_energy_symbol(&uniform, &p).unwrap(),
            -0.7 * f as f64 / 2.0,
            max_relative = 1e-14
        );
    }

    #[test]
    fn total_sz_examples() {
        let f = 3;
        let down = SpinLatticeState::new(vec![c(0.0, 0.0); f]).unwrap();
        assert_relative_eq!(total_sz_symbol(&down), -1.5, max_relative = 1e-15);

        let eq = SpinLatticeState::new(vec![c(0.0, 1.0); f]).unwrap();
        assert_relative_eq!(total_sz_symbol(&eq), 0.0, epsilon = 1e-15);

        let mixed =
            SpinLatticeState::new(vec![c(1e3, 0.0), c(0.0, 0.0), c(0.0, 0.0)]).unwrap();
        // (u-1)/(2(1+u)) at u = 1e6, minus 1/2 twice
        let expect = 999_999.0 / 2_000_002.0 - 1.0;
        assert_relative_eq!(total_sz_symbol(&mixed), expect, max_relative = 1e-12);
    }

    #[test]
    fn q_function_examples() {
        let beta = c(1.3, -0.4);
        let (gx, gy) = q_function_default_grid(beta);
        let q = q_function(beta, &gx, &gy).unwrap();

        let inv_pi = 1.0 / core::f64::consts::PI;
        // center point of the default grid is the amplitude itself
        let icx = gx.len() / 2;
        let icy = gy.len() / 2;
        assert_relative_eq!(q.value(icx, icy), inv_pi, max_relative = 1e-12);

        // one unit away from the center along x
        let ix = icx + 20; // 20 * 0.05 = 1.0
        assert_relative_eq!(q.value(ix, icy), inv_pi * (-1.0_f64).exp(), max_relative = 1e-12);

        assert!((q.integral() - 1.0).abs() < 1e-3);
        let (ax, ay) = q.argmax();
        assert!((ax - beta.re).abs() <= 0.05 && (ay - beta.im).abs() <= 0.05);
    }

    #[test]
    fn q_function_empty_grid_rejected() {
        assert!(q_function(c(0.0, 0.0), &[], &[0.0]).is_err());
    }

    #[test]
    fn poisson_examples() {
        let p = poisson_distribution(c(0.0, 0.0), 5);
        assert_eq!(p.probs[0], 1.0);
        assert!(p.probs[1..].iter().all(|&x| x == 0.0));

        let beta = c(2.0_f64.sqrt(), 0.0); // |beta|^2 = 2
        let p = poisson_distribution(beta, 10);
        assert_relative_eq!(p.probs[2], 2.0 * (-2.0_f64).exp(), max_relative = 1e-14);

        let p = poisson_distribution(c(1.7, 2.1), 80);
        assert_relative_eq!(p.mean(), c(1.7, 2.1).norm_sqr(), max_relative = 1e-10);
        assert!(p.tail_mass >= 0.0);
    }

    #[test]
    fn gamma_cr_analytic_examples() {
        assert_relative_eq!(gamma_cr_analytic(10.0, Ordering::Normal).unwrap(), 0.04);
        assert_relative_eq!(
            gamma_cr_analytic(10.0, Ordering::Symmetric).unwrap(),
            4.0 / 130.0
        );
        for n in [1.0, 5.0, 50.0, 500.0] {
            let no = gamma_cr_analytic(n, Ordering::Normal).unwrap();
            let so = gamma_cr_analytic(n, Ordering::Symmetric).unwrap();
            assert!(so < no);
            assert!(so / no <= 1.0);
        }
        assert!(gamma_cr_analytic(0.0, Ordering::Normal).is_err());
    }

    #[test]
    fn imbalance_examples() {
        let s = single_site_excitation(2, 1, 10.0).unwrap();
        assert_relative_eq!(population_imbalance(&s).unwrap(), 10.0, max_relative = 1e-15);

        let eq = BosonLatticeState::new(vec![c(1.0, 1.0), c(-1.0, 1.0)]).unwrap();
        assert_eq!(population_imbalance(&eq).unwrap(), 0.0);

        let s = BosonLatticeState::new(vec![c(1.0, 0.0), c(0.0, 3.0_f64.sqrt())]).unwrap();
        assert_relative_eq!(population_imbalance(&s).unwrap(), -2.0, max_relative = 1e-15);

        let three = BosonLatticeState::new(vec![c(0.0, 0.0); 3]).unwrap();
        assert!(population_imbalance(&three).is_err());
    }

    #[test]
    fn self_trapping_dimer_against_analytic_threshold() {
        let coupling = nearest_neighbor_ring(2, 1.0).unwrap();
        let n_total = 10.0;
        let state0 = single_site_excitation(2, 1, n_total).unwrap();
        let cfg = IntegratorConfig::uniform(0.0, 20.0 * core::f64::consts::PI, 640);

        for (gamma, expect) in [(0.05, true), (0.03, false), (0.0, false)] {
            let p = GdstParams::new(0.0, gamma, 3, coupling.clone(), Ordering::Normal).unwrap();
            let traj = integrate(&GdstModel(&p), state0.amplitudes(), &cfg).unwrap();
            assert_eq!(is_self_trapped(&traj, 1, n_total).unwrap(), expect, "gamma = {gamma}");
        }
    }

    #[test]
    fn gamma_cr_numeric_matches_analytic() {
        let coupling = nearest_neighbor_ring(2, 1.0).unwrap();
        for ordering in [Ordering::Normal, Ordering::Symmetric] {
            for n in [2.0, 10.0] {
                let template =
                    GdstParams::new(0.0, 0.0, 3, coupling.clone(), ordering).unwrap();
                let analytic = gamma_cr_analytic(n, ordering).unwrap();
                let search = GammaCrSearch::dimer(1.0, 0.002 * analytic);
                let numeric = gamma_cr_numeric(&template, n, &search).unwrap();
                assert!(
                    ((numeric - analytic) / analytic).abs() < 0.02,
                    "N = {n}, {ordering:?}: numeric {numeric} vs analytic {analytic}"
                );
            }
        }
    }

    #[test]
    fn fermion_amplitude_examples() {
        let f = 3;
        let down = SpinLatticeState::new(vec![c(0.0, 0.0); f]).unwrap();
        assert_eq!(fermion_amplitude(&down, 1).unwrap(), c(0.0, 0.0));

        let s = SpinLatticeState::new(vec![c(1.0, 0.0), c(0.3, 0.1), c(0.0, 0.0)]).unwrap();
        assert_relative_eq!(fermion_amplitude(&s, 1).unwrap().norm(), 0.5, max_relative = 1e-15);
        // |z_1| = 1 kills the string for every site beyond it
        assert_relative_eq!(fermion_amplitude(&s, 2).unwrap().norm(), 0.0, epsilon = 1e-15);

        assert!(fermion_amplitude(&s, 4).is_err());
    }

    #[test]
    fn fermion_number_examples() {
        let s = SpinLatticeState::new(vec![c(0.0, 0.0), c(0.0, 1.0), c(3.0, 0.0)]).unwrap();
        assert_eq!(fermion_number(&s, 1).unwrap(), 0.0);
        assert_relative_eq!(fermion_number(&s, 2).unwrap(), 0.5, max_relative = 1e-15);
        assert_relative_eq!(fermion_number(&s, 3).unwrap(), 0.9, max_relative = 1e-15);
    }

    #[test]
    fn fermion_number_matches_sz_symbol() {
        let s = SpinLatticeState::new(vec![c(0.3, -1.2), c(2.5, 0.4), c(0.0, 0.09)]).unwrap();
        for j in 1..=3 {
            let n = fermion_number(&s, j).unwrap();
            let sz = sz_symbol(s.coords()[j - 1]);
            assert_relative_eq!(n - 0.5, sz, epsilon = 1e-15);
        }
    }
}
