//! Domain types and constructors shared by the dynamics and observable
//! modules: lattice states, coupling matrices, model parameter bundles and
//! the symmetric-ordering correction coefficients.
//!
//! Site indices are 1-based in every public interface and converted to
//! 0-based offsets internally.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;
use num_traits::Float;

use crate::error::{Error, Result};

/// Boson lattice state: one coherent-state label per site.
#[derive(Debug, Clone, PartialEq)]
pub struct BosonLatticeState {
    amplitudes: Vec<Complex64>,
}

impl BosonLatticeState {
    pub fn new(amplitudes: Vec<Complex64>) -> Result<Self> {
        if amplitudes.is_empty() {
            return Err(Error::InvalidParameter("state needs at least one site".into()));
        }
        if amplitudes.iter().any(|b| !b.re.is_finite() || !b.im.is_finite()) {
            return Err(Error::Domain("non-finite amplitude component".into()));
        }
        Ok(Self { amplitudes })
    }

    pub fn len(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    /// Amplitude at 1-based site index.
    pub fn amplitude(&self, site: usize) -> Result<Complex64> {
        site_offset(site, self.len()).map(|i| self.amplitudes[i])
    }
}

/// Spin lattice state: one stereographic su(2) coherent-state coordinate per
/// site. The north pole (point at infinity) is not representable.
#[derive(Debug, Clone, PartialEq)]
pub struct SpinLatticeState {
    coords: Vec<Complex64>,
}

impl SpinLatticeState {
    pub fn new(coords: Vec<Complex64>) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::InvalidParameter("state needs at least one site".into()));
        }
        if coords.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::Domain(
                "non-finite stereographic coordinate (north pole is not representable)".into(),
            ));
        }
        Ok(Self { coords })
    }

    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn coords(&self) -> &[Complex64] {
        &self.coords
    }

    /// Coordinate at 1-based site index.
    pub fn coord(&self, site: usize) -> Result<Complex64> {
        site_offset(site, self.len()).map(|i| self.coords[i])
    }
}

/// Dense symmetric hopping matrix with zero diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingMatrix {
    f: usize,
    entries: Vec<f64>, // row-major f x f
}

impl CouplingMatrix {
    /// Builds from a row-major matrix. Asymmetric input is rejected, not
    /// symmetrized; the diagonal must be zero.
    pub fn new(f: usize, entries: Vec<f64>) -> Result<Self> {
        if f == 0 {
            return Err(Error::InvalidParameter("coupling matrix needs f >= 1".into()));
        }
        if entries.len() != f * f {
            return Err(Error::ShapeMismatch { expected: f * f, found: entries.len() });
        }
        for j in 0..f {
            if entries[j * f + j] != 0.0 {
                return Err(Error::InvalidParameter(format!(
                    "coupling matrix diagonal entry ({},{}) must be zero",
                    j + 1,
                    j + 1
                )));
            }
            for k in 0..j {
                if entries[j * f + k] != entries[k * f + j] {
                    return Err(Error::InvalidParameter(format!(
                        "coupling matrix must be symmetric; entries ({},{}) and ({},{}) differ",
                        j + 1,
                        k + 1,
                        k + 1,
                        j + 1
                    )));
                }
            }
            if entries[j * f..(j + 1) * f].iter().any(|x| !x.is_finite()) {
                return Err(Error::Domain("non-finite coupling entry".into()));
            }
        }
        Ok(Self { f, entries })
    }

    pub fn dim(&self) -> usize {
        self.f
    }

    /// Entry at 0-based offsets.
    #[inline]
    pub fn get(&self, j: usize, k: usize) -> f64 {
        self.entries[j * self.f + k]
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }
}

/// Nearest-neighbor ring coupling with periodic boundary conditions.
pub fn nearest_neighbor_ring(f: usize, lam: f64) -> Result<CouplingMatrix> {
    if f < 2 {
        return Err(Error::InvalidParameter("nearest-neighbor ring needs f >= 2".into()));
    }
    let mut entries = vec![0.0; f * f];
    for j in 0..f {
        let next = (j + 1) % f;
        entries[j * f + next] = lam;
        entries[next * f + j] = lam;
    }
    CouplingMatrix::new(f, entries)
}

/// Operator-ordering rule used at quantization.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Ordering {
    /// Normal ordering; the quasiclassical flow is the classical one.
    Normal,
    /// Symmetric ordering; adds the diagonal correction terms for m > 2.
    Symmetric,
}

impl Ordering {
    pub fn is_symmetric(self) -> bool {
        matches!(self, Ordering::Symmetric)
    }
}

/// Symmetric-ordering correction coefficients mu_n, n = 1..m-1.
#[derive(Debug, Clone, PartialEq)]
pub struct SoCoefficients {
    mu: Vec<f64>,
}

impl SoCoefficients {
    pub fn mu(&self) -> &[f64] {
        &self.mu
    }

    pub fn len(&self) -> usize {
        self.mu.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mu.is_empty()
    }
}

/// Coefficients of the diagonal terms the symmetric ordering adds to the
/// normally ordered Hamiltonian:
/// mu_n = ((m-1)!/2^m) C(m, m-n) 2^n / n! for n = 1..m-1.
pub fn so_coefficients(m: u32) -> Result<SoCoefficients> {
    if m < 1 {
        return Err(Error::InvalidParameter("nonlinearity order m must be >= 1".into()));
    }
    let mut mu = Vec::with_capacity((m - 1) as usize);
    for n in 1..m {
        let c = binomial(m, m - n);
        mu.push(factorial(m - 1) / powi2(m) * c * powi2(n) / factorial(n));
    }
    Ok(SoCoefficients { mu })
}

fn factorial(n: u32) -> f64 {
    (2..=n).map(|k| k as f64).product()
}

fn binomial(n: u32, k: u32) -> f64 {
    factorial(n) / (factorial(k) * factorial(n - k))
}

fn powi2(n: u32) -> f64 {
    Float::powi(2.0_f64, n as i32)
}

/// GDST model parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct GdstParams {
    pub omega0: f64,
    /// Nonlinearity strength; negative (defocusing) values are accepted.
    pub gamma: f64,
    /// Nonlinearity order, m >= 2.
    pub m: u32,
    pub coupling: CouplingMatrix,
    pub ordering: Ordering,
}

impl GdstParams {
    pub fn new(
        omega0: f64,
        gamma: f64,
        m: u32,
        coupling: CouplingMatrix,
        ordering: Ordering,
    ) -> Result<Self> {
        if m < 2 {
            return Err(Error::InvalidParameter("GDST nonlinearity order m must be >= 2".into()));
        }
        if !omega0.is_finite() || !gamma.is_finite() {
            return Err(Error::Domain("non-finite GDST parameter".into()));
        }
        Ok(Self { omega0, gamma, m, coupling, ordering })
    }

    pub fn f(&self) -> usize {
        self.coupling.dim()
    }

    pub fn so_coefficients(&self) -> SoCoefficients {
        so_coefficients(self.m).expect("m >= 2 validated at construction")
    }
}

/// MDNLS model parameters on a periodic ring.
#[derive(Debug, Clone, PartialEq)]
pub struct MdnlsParams {
    pub v: f64,
    pub x: f64,
    pub f: usize,
    pub ordering: Ordering,
}

impl MdnlsParams {
    /// f = 2 is rejected: on a two-site "ring" the neighbors j-1 and j+1
    /// coincide and the ring sums would be double-counted.
    pub fn new(v: f64, x: f64, f: usize, ordering: Ordering) -> Result<Self> {
        if f < 3 {
            return Err(Error::InvalidParameter("MDNLS ring size f must be >= 3".into()));
        }
        if !v.is_finite() || !x.is_finite() {
            return Err(Error::Domain("non-finite MDNLS parameter".into()));
        }
        Ok(Self { v, x, f, ordering })
    }
}

/// XXZ spin-chain parameters on a periodic ring.
#[derive(Debug, Clone, PartialEq)]
pub struct XxzParams {
    /// Anisotropy V multiplying the sigma^z sigma^z term.
    pub v: f64,
    /// Hopping g multiplying the sigma^+ sigma^- exchange term.
    pub g: f64,
    pub f: usize,
    /// Whether the uniform (epsilon + V) sum-sigma^z rotation is included.
    /// The fermionic on-site energy epsilon is taken as zero here, so the
    /// rotation coefficient is V. Off by default.
    pub include_linear_term: bool,
}

impl XxzParams {
    pub fn new(v: f64, g: f64, f: usize, include_linear_term: bool) -> Result<Self> {
        if f < 3 {
            return Err(Error::InvalidParameter("XXZ ring size f must be >= 3".into()));
        }
        if !v.is_finite() || !g.is_finite() {
            return Err(Error::Domain("non-finite XXZ parameter".into()));
        }
        Ok(Self { v, g, f, include_linear_term })
    }
}

/// All excitation on one site: beta_{j0} = sqrt(n_total), the rest zero.
pub fn single_site_excitation(f: usize, j0: usize, n_total: f64) -> Result<BosonLatticeState> {
    if f == 0 {
        return Err(Error::InvalidParameter("lattice needs at least one site".into()));
    }
    if !(n_total >= 0.0) {
        return Err(Error::InvalidParameter("total excitation number must be >= 0".into()));
    }
    let offset = site_offset(j0, f)?;
    let mut amplitudes = vec![Complex64::new(0.0, 0.0); f];
    amplitudes[offset] = Complex64::new(Float::sqrt(n_total), 0.0);
    BosonLatticeState::new(amplitudes)
}

/// Converts a 1-based site index to a 0-based offset.
pub(crate) fn site_offset(site: usize, len: usize) -> Result<usize> {
    if site == 0 || site > len {
        Err(Error::IndexOutOfRange { index: site, len })
    } else {
        Ok(site - 1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn so_coefficients_match_closed_form() {
        assert!(so_coefficients(1).unwrap().is_empty());
        assert_eq!(so_coefficients(2).unwrap().mu(), &[1.0]);
        assert_eq!(so_coefficients(3).unwrap().mu(), &[1.5, 1.5]);
        assert_eq!(so_coefficients(4).unwrap().mu(), &[3.0, 4.5, 2.0]);
        assert!(so_coefficients(0).is_err());
    }

    #[test]
    fn so_coefficients_positive() {
        for m in 2..=8 {
            let mu = so_coefficients(m).unwrap();
            assert_eq!(mu.len(), (m - 1) as usize);
            assert!(mu.mu().iter().all(|&x| x > 0.0));
        }
    }

    #[test]
    fn ring_topology() {
        let ring = nearest_neighbor_ring(3, 1.0).unwrap();
        for j in 0..3 {
            for k in 0..3 {
                let expect = if j == k { 0.0 } else { 1.0 };
                assert_eq!(ring.get(j, k), expect);
            }
        }

        let two = nearest_neighbor_ring(2, 1.0).unwrap();
        assert_eq!(two.get(0, 1), 1.0);
        assert_eq!(two.get(1, 0), 1.0);

        let five = nearest_neighbor_ring(5, 0.5).unwrap();
        assert_eq!(five.get(0, 1), 0.5);
        assert_eq!(five.get(0, 2), 0.0);
        assert_eq!(five.get(0, 4), 0.5); // wraparound

        assert!(nearest_neighbor_ring(1, 1.0).is_err());
    }

    #[test]
    fn ring_symmetric_zero_diagonal() {
        for f in 2..=64 {
            let ring = nearest_neighbor_ring(f, 0.7).unwrap();
            for j in 0..f {
                assert_eq!(ring.get(j, j), 0.0);
                for k in 0..f {
                    assert_eq!(ring.get(j, k), ring.get(k, j));
                }
            }
        }
    }

    #[test]
    fn asymmetric_coupling_rejected() {
        let entries = vec![0.0, 1.0, 2.0, 0.0];
        assert!(CouplingMatrix::new(2, entries).is_err());
        let diag = vec![1.0, 0.0, 0.0, 0.0];
        assert!(CouplingMatrix::new(2, diag).is_err());
    }

    #[test]
    fn single_site_construction() {
        let s = single_site_excitation(2, 1, 10.0).unwrap();
        assert_eq!(s.amplitudes()[0], Complex64::new(10.0_f64.sqrt(), 0.0));
        assert_eq!(s.amplitudes()[1], Complex64::new(0.0, 0.0));

        let s = single_site_excitation(21, 21, 10.0).unwrap();
        assert_eq!(s.amplitude(21).unwrap(), Complex64::new(10.0_f64.sqrt(), 0.0));
        assert!(s.amplitudes()[..20].iter().all(|b| b.norm() == 0.0));

        let z = single_site_excitation(3, 2, 0.0).unwrap();
        assert!(z.amplitudes().iter().all(|b| b.norm() == 0.0));

        assert!(single_site_excitation(3, 5, 1.0).is_err());
        assert!(single_site_excitation(3, 0, 1.0).is_err());
    }

    #[test]
    fn single_site_norm_matches() {
        for &n in &[0.0, 0.3, 1.0, 10.0, 123.456] {
            let s = single_site_excitation(4, 2, n).unwrap();
            let norm: f64 = s.amplitudes().iter().map(|b| b.norm_sqr()).sum();
            assert!((norm - n).abs() <= 1e-15 * n.max(1.0));
        }
    }

    #[test]
    fn spin_state_rejects_non_finite() {
        assert!(SpinLatticeState::new(vec![Complex64::new(f64::INFINITY, 0.0)]).is_err());
        assert!(SpinLatticeState::new(vec![Complex64::new(f64::NAN, 0.0)]).is_err());
    }

    #[test]
    fn mdnls_degenerate_ring_rejected() {
        assert!(MdnlsParams::new(1.0, 1.0, 2, Ordering::Normal).is_err());
        assert!(MdnlsParams::new(1.0, 1.0, 3, Ordering::Normal).is_ok());
    }
}
