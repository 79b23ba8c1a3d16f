//! Exact Schrödinger evolution of small boson lattices in a truncated Fock
//! basis, used as the reference against which the factorized coherent-state
//! dynamics is judged.
//!
//! The Hamiltonian conserves total occupation, so it is block diagonal over
//! fixed-total sectors; the propagator diagonalizes each block once (dense
//! Hermitian Jacobi — block sizes here are desk-scale) and applies
//! exp(-i E t) in the eigenbasis. No sparse machinery; if lattices ever
//! outgrow a few thousand basis states, swap the eigensolver behind
//! `Propagator::new`.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;
use num_traits::Float;

use crate::error::{Error, Result};
use crate::lattice::{site_offset, BosonLatticeState, GdstParams, Ordering};

/// Enumerated occupation tuples (n_1, ..., n_f) with every n_j <= n_max,
/// optionally restricted to a fixed total occupation sector.
pub struct FockBasis {
    f: usize,
    n_max: u32,
    sector: Option<u32>,
    states: Vec<Vec<u32>>,
    index: BTreeMap<Vec<u32>, usize>,
}

impl FockBasis {
    pub fn f(&self) -> usize {
        self.f
    }

    pub fn n_max(&self) -> u32 {
        self.n_max
    }

    pub fn sector(&self) -> Option<u32> {
        self.sector
    }

    pub fn dim(&self) -> usize {
        self.states.len()
    }

    pub fn occupations(&self, i: usize) -> &[u32] {
        &self.states[i]
    }

    pub fn position(&self, occupations: &[u32]) -> Option<usize> {
        self.index.get(occupations).copied()
    }
}

/// Enumerates the basis in lexicographic tuple order (stable across runs).
pub fn enumerate_basis(f: usize, n_max: u32, sector: Option<u32>) -> Result<FockBasis> {
    if f < 1 {
        return Err(Error::InvalidParameter("mode count f must be >= 1".into()));
    }
    if let Some(total) = sector {
        if u64::from(total) > f as u64 * u64::from(n_max) {
            return Err(Error::InvalidParameter(format!(
                "sector total {total} exceeds f*n_max = {}; basis would be empty",
                f as u64 * u64::from(n_max)
            )));
        }
    }
    let mut states = Vec::new();
    let mut tuple = vec![0u32; f];
    loop {
        let keep = match sector {
            Some(total) => tuple.iter().sum::<u32>() == total,
            None => true,
        };
        if keep {
            states.push(tuple.clone());
        }
        // odometer increment with the last mode fastest
        let mut k = f;
        loop {
            if k == 0 {
                let index = states
                    .iter()
                    .enumerate()
                    .map(|(i, s)| (s.clone(), i))
                    .collect();
                return Ok(FockBasis { f, n_max, sector, states, index });
            }
            k -= 1;
            if tuple[k] < n_max {
                tuple[k] += 1;
                break;
            }
            tuple[k] = 0;
        }
    }
}

/// Normalized pure state over a [`FockBasis`]. `norm_defect` records
/// |1 - ||psi||| as accumulated by evolution; it is never silently repaired.
#[derive(Debug, Clone)]
pub struct QuantumState {
    pub amplitudes: Vec<Complex64>,
    pub norm_defect: f64,
}

impl QuantumState {
    /// Normalizes the given amplitudes; errors on a (near-)zero vector.
    pub fn new(mut amplitudes: Vec<Complex64>) -> Result<Self> {
        let norm = Float::sqrt(amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>());
        if !(norm > 1e-300) || !norm.is_finite() {
            return Err(Error::Domain(format!("cannot normalize state with norm {norm}")));
        }
        for a in &mut amplitudes {
            *a /= norm;
        }
        Ok(Self { amplitudes, norm_defect: 0.0 })
    }

    pub fn norm(&self) -> f64 {
        Float::sqrt(self.amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>())
    }

    pub fn inner(&self, other: &QuantumState) -> Result<Complex64> {
        if self.amplitudes.len() != other.amplitudes.len() {
            return Err(Error::ShapeMismatch {
                expected: self.amplitudes.len(),
                found: other.amplitudes.len(),
            });
        }
        Ok(self
            .amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }
}

/// Dense Hermitian matrix over a Fock basis, block diagonal in total
/// occupation. Row-major storage.
pub struct HamiltonianMatrix {
    dim: usize,
    data: Vec<Complex64>,
    totals: Vec<u32>,
    pub params: GdstParams,
}

impl HamiltonianMatrix {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn element(&self, row: usize, col: usize) -> Complex64 {
        self.data[row * self.dim + col]
    }

    pub fn ordering(&self) -> Ordering {
        self.params.ordering
    }
}

fn falling_factorial(n: u32, k: u32) -> f64 {
    let mut prod = 1.0;
    for i in 0..k {
        if i >= n {
            return 0.0;
        }
        prod *= (n - i) as f64;
    }
    prod
}

/// Builds the lattice Hamiltonian over `basis`: on-site
/// omega0 n - (gamma/m) n(n-1)...(n-m+1) per mode, the symmetric-ordering
/// diagonal correction -gamma sum_n mu_n n(n-1)...(n-n+1) when requested,
/// and hopping elements -lambda_jk sqrt((n_j+1) n_k) between tuples that
/// differ by moving one quantum.
pub fn build_gdst_hamiltonian(p: &GdstParams, basis: &FockBasis) -> Result<HamiltonianMatrix> {
    if p.f() != basis.f() {
        return Err(Error::ShapeMismatch { expected: p.f(), found: basis.f() });
    }
    let dim = basis.dim();
    let mut data = vec![Complex64::new(0.0, 0.0); dim * dim];
    let mu = p.so_coefficients();

    for (row, occ) in basis.states.iter().enumerate() {
        let mut diag = 0.0;
        for &n in occ {
            diag += p.omega0 * n as f64 - p.gamma / p.m as f64 * falling_factorial(n, p.m);
            if p.ordering.is_symmetric() {
                for (i, &mu_n) in mu.mu().iter().enumerate() {
                    diag -= p.gamma * mu_n * falling_factorial(n, i as u32 + 1);
                }
            }
        }
        data[row * dim + row] = Complex64::new(diag, 0.0);

        // hopping: raise mode j, lower mode k
        for j in 0..basis.f() {
            for k in 0..basis.f() {
                let lam = p.coupling.get(j, k);
                if lam == 0.0 || occ[k] == 0 || occ[j] >= basis.n_max() {
                    continue;
                }
                let mut target = occ.clone();
                target[j] += 1;
                target[k] -= 1;
                if let Some(col) = basis.position(&target) {
                    let amp = -lam * Float::sqrt(((occ[j] + 1) * occ[k]) as f64);
                    data[col * dim + row] += Complex64::new(amp, 0.0);
                }
            }
        }
    }

    let totals = basis.states.iter().map(|s| s.iter().sum()).collect();
    Ok(HamiltonianMatrix { dim, data, totals, params: p.clone() })
}

/// Product coherent state expanded over an unrestricted basis; returns the
/// normalized state and the tail mass 1 - sum |amplitude|^2 cut off by n_max.
pub fn coherent_product_state(
    beta: &BosonLatticeState,
    basis: &FockBasis,
) -> Result<(QuantumState, f64)> {
    if basis.sector().is_some() {
        return Err(Error::InvalidParameter(
            "coherent product states require an unrestricted basis".into(),
        ));
    }
    if beta.len() != basis.f() {
        return Err(Error::ShapeMismatch { expected: basis.f(), found: beta.len() });
    }
    // per-mode amplitude tables: e^{-|b|^2/2} b^n / sqrt(n!)
    let mut tables: Vec<Vec<Complex64>> = Vec::with_capacity(basis.f());
    for &b in beta.amplitudes() {
        let mut table = Vec::with_capacity(basis.n_max() as usize + 1);
        let mut amp = Complex64::new(Float::exp(-0.5 * b.norm_sqr()), 0.0);
        table.push(amp);
        for n in 1..=basis.n_max() {
            amp *= b / Float::sqrt(n as f64);
            table.push(amp);
        }
        tables.push(table);
    }
    let mut amplitudes = Vec::with_capacity(basis.dim());
    let mut captured = 0.0;
    for occ in &basis.states {
        let mut a = Complex64::new(1.0, 0.0);
        for (j, &n) in occ.iter().enumerate() {
            a *= tables[j][n as usize];
        }
        captured += a.norm_sqr();
        amplitudes.push(a);
    }
    let tail_mass = Float::max(1.0 - captured, 0.0);
    Ok((QuantumState::new(amplitudes)?, tail_mass))
}

/// As [`coherent_product_state`], but rejects a cutoff whose tail mass
/// exceeds `bound`.
pub fn coherent_product_state_checked(
    beta: &BosonLatticeState,
    basis: &FockBasis,
    bound: f64,
) -> Result<(QuantumState, f64)> {
    let (state, tail_mass) = coherent_product_state(beta, basis)?;
    if tail_mass > bound {
        return Err(Error::CutoffTooSmall { tail_mass, bound });
    }
    Ok((state, tail_mass))
}

struct Sector {
    indices: Vec<usize>,
    eigvals: Vec<f64>,
    /// column-major eigenvectors, column c = eigenvector of eigvals[c]
    eigvecs: Vec<Complex64>,
}

/// Cached spectral decomposition of a Hamiltonian, one dense eigenproblem
/// per total-occupation sector. Immutable after construction.
pub struct Propagator {
    dim: usize,
    sectors: Vec<Sector>,
}

impl Propagator {
    pub fn new(h: &HamiltonianMatrix) -> Result<Self> {
        let mut by_total: BTreeMap<u32, Vec<usize>> = BTreeMap::new();
        for (i, &t) in h.totals.iter().enumerate() {
            by_total.entry(t).or_default().push(i);
        }
        let mut sectors = Vec::with_capacity(by_total.len());
        for indices in by_total.into_values() {
            let k = indices.len();
            let mut block = vec![Complex64::new(0.0, 0.0); k * k];
            for (r, &i) in indices.iter().enumerate() {
                for (c, &j) in indices.iter().enumerate() {
                    block[r * k + c] = h.element(i, j);
                }
            }
            let (eigvals, eigvecs) = hermitian_eigen(&mut block, k)?;
            sectors.push(Sector { indices, eigvals, eigvecs });
        }
        Ok(Self { dim: h.dim(), sectors })
    }

    /// psi(t) = exp(-i H t) psi0. Unitary up to eigensolver roundoff; the
    /// result's norm_defect carries the accumulated defect, unrepaired.
    pub fn apply(&self, psi0: &QuantumState, t: f64) -> Result<QuantumState> {
        if psi0.amplitudes.len() != self.dim {
            return Err(Error::ShapeMismatch { expected: self.dim, found: psi0.amplitudes.len() });
        }
        if !t.is_finite() {
            return Err(Error::Domain("non-finite evolution time".into()));
        }
        let mut out = vec![Complex64::new(0.0, 0.0); self.dim];
        for sector in &self.sectors {
            let k = sector.indices.len();
            // coefficients in the eigenbasis: c = V^dagger psi
            let mut coeff = vec![Complex64::new(0.0, 0.0); k];
            for c in 0..k {
                let mut acc = Complex64::new(0.0, 0.0);
                for r in 0..k {
                    acc += sector.eigvecs[r * k + c].conj() * psi0.amplitudes[sector.indices[r]];
                }
                coeff[c] = acc * Complex64::from_polar(1.0, -sector.eigvals[c] * t);
            }
            for r in 0..k {
                let mut acc = Complex64::new(0.0, 0.0);
                for c in 0..k {
                    acc += sector.eigvecs[r * k + c] * coeff[c];
                }
                out[sector.indices[r]] = acc;
            }
        }
        let norm = Float::sqrt(out.iter().map(|a| a.norm_sqr()).sum::<f64>());
        Ok(QuantumState {
            amplitudes: out,
            norm_defect: psi0.norm_defect + Float::abs(1.0 - norm / psi0.norm().max(1e-300)),
        })
    }
}

/// One-shot exact propagation; builds the spectral decomposition and applies
/// it. Use [`Propagator`] directly when evolving to many times.
pub fn evolve(h: &HamiltonianMatrix, psi0: &QuantumState, t: f64) -> Result<QuantumState> {
    Propagator::new(h)?.apply(psi0, t)
}

/// Cyclic Jacobi diagonalization of a Hermitian matrix (row-major, n x n).
/// Returns eigenvalues and column-major eigenvectors with A = V diag(E) V^†.
fn hermitian_eigen(a: &mut [Complex64], n: usize) -> Result<(Vec<f64>, Vec<Complex64>)> {
    debug_assert_eq!(a.len(), n * n);
    let mut v = vec![Complex64::new(0.0, 0.0); n * n];
    for i in 0..n {
        v[i * n + i] = Complex64::new(1.0, 0.0);
    }
    if n <= 1 {
        return Ok((a.iter().step_by(n.max(1) + 1).map(|d| d.re).collect(), v));
    }
    let scale: f64 = a
        .iter()
        .map(|x| x.norm_sqr())
        .sum::<f64>()
        .sqrt()
        .max(1e-300);
    let tol = 1e-15 * scale;

    for _sweep in 0..100 {
        let mut off = 0.0;
        for p in 0..n {
            for q in (p + 1)..n {
                off += a[p * n + q].norm_sqr();
            }
        }
        if Float::sqrt(2.0 * off) <= tol {
            let eigvals = (0..n).map(|i| a[i * n + i].re).collect();
            return Ok((eigvals, v));
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let g = a[p * n + q];
                let absg = g.norm();
                if absg <= tol / (n as f64) {
                    continue;
                }
                let phase = g / absg;
                let tau = (a[q * n + q].re - a[p * n + p].re) / (2.0 * absg);
                let t = if tau >= 0.0 {
                    -1.0 / (tau + Float::sqrt(1.0 + tau * tau))
                } else {
                    1.0 / (-tau + Float::sqrt(1.0 + tau * tau))
                };
                let c = 1.0 / Float::sqrt(1.0 + t * t);
                let s = t * c;
                // plane rotation G: col p = c e_p + s conj(phase) e_q,
                //                   col q = -s e_p + c conj(phase) e_q
                let sp = s * phase.conj();
                let cp = c * phase.conj();
                // A <- A G (columns), then A <- G^† A (rows)
                for k in 0..n {
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    a[k * n + p] = c * akp + sp * akq;
                    a[k * n + q] = -s * akp + cp * akq;
                }
                for k in 0..n {
                    let apk = a[p * n + k];
                    let aqk = a[q * n + k];
                    a[p * n + k] = c * apk + sp.conj() * aqk;
                    a[q * n + k] = -s * apk + cp.conj() * aqk;
                }
                a[p * n + q] = Complex64::new(0.0, 0.0);
                a[q * n + p] = Complex64::new(0.0, 0.0);
                a[p * n + p] = Complex64::new(a[p * n + p].re, 0.0);
                a[q * n + q] = Complex64::new(a[q * n + q].re, 0.0);
                for k in 0..n {
                    let vkp = v[k * n + p];
                    let vkq = v[k * n + q];
                    v[k * n + p] = c * vkp + sp * vkq;
                    v[k * n + q] = -s * vkp + cp * vkq;
                }
            }
        }
    }
    Err(Error::NumericalDegeneracy(
        "Jacobi diagonalization failed to converge in 100 sweeps".into(),
    ))
}

/// Correlation index between an exact state and the factorized coherent
/// reference: 2 - 2 |<psi|psi_ref>| in [0, 2].
pub fn correlation_index(
    psi: &QuantumState,
    beta_ref: &BosonLatticeState,
    basis: &FockBasis,
) -> Result<f64> {
    let (psi_ref, _tail) = coherent_product_state(beta_ref, basis)?;
    let overlap = psi.inner(&psi_ref)?.norm();
    Ok(Float::max(2.0 - 2.0 * overlap, 0.0))
}

/// Exact occupation <n_j> of a 1-based mode.
pub fn mode_occupation(psi: &QuantumState, basis: &FockBasis, site: usize) -> Result<f64> {
    let j = site_offset(site, basis.f())?;
    if psi.amplitudes.len() != basis.dim() {
        return Err(Error::ShapeMismatch { expected: basis.dim(), found: psi.amplitudes.len() });
    }
    Ok(psi
        .amplitudes
        .iter()
        .zip(&basis.states)
        .map(|(a, occ)| a.norm_sqr() * occ[j] as f64)
        .sum())
}

/// Uncertainties of the quadratures x = (b^† + b)/sqrt(2) and
/// p = i (b^† - b)/sqrt(2) for a 1-based mode.
pub fn quadrature_uncertainty(
    psi: &QuantumState,
    basis: &FockBasis,
    site: usize,
) -> Result<(f64, f64)> {
    let j = site_offset(site, basis.f())?;
    if psi.amplitudes.len() != basis.dim() {
        return Err(Error::ShapeMismatch { expected: basis.dim(), found: psi.amplitudes.len() });
    }
    let mut b1 = Complex64::new(0.0, 0.0); // <b_j>
    let mut b2 = Complex64::new(0.0, 0.0); // <b_j^2>
    let mut occ_mean = 0.0; // <n_j>
    for (i, occ) in basis.states.iter().enumerate() {
        let n = occ[j];
        occ_mean += psi.amplitudes[i].norm_sqr() * n as f64;
        if n >= 1 {
            let mut lowered = occ.clone();
            lowered[j] = n - 1;
            if let Some(low) = basis.position(&lowered) {
                b1 += psi.amplitudes[low].conj()
                    * psi.amplitudes[i]
                    * Float::sqrt(n as f64);
            }
        }
        if n >= 2 {
            let mut lowered = occ.clone();
            lowered[j] = n - 2;
            if let Some(low) = basis.position(&lowered) {
                b2 += psi.amplitudes[low].conj()
                    * psi.amplitudes[i]
                    * Float::sqrt((n * (n - 1)) as f64);
            }
        }
    }
    let x_mean = core::f64::consts::SQRT_2 * b1.re;
    let p_mean = core::f64::consts::SQRT_2 * b1.im;
    let x2 = b2.re + occ_mean + 0.5;
    let p2 = -b2.re + occ_mean + 0.5;
    let dx2 = Float::max(x2 - x_mean * x_mean, 0.0);
    let dp2 = Float::max(p2 - p_mean * p_mean, 0.0);
    Ok((Float::sqrt(dx2), Float::sqrt(dp2)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{nearest_neighbor_ring, CouplingMatrix};
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn single_mode_params(omega0: f64, gamma: f64, m: u32, ordering: Ordering) -> GdstParams {
        let coupling = CouplingMatrix::new(1, vec![0.0]).unwrap();
        GdstParams::new(omega0, gamma, m, coupling, ordering).unwrap()
    }

    #[test]
    fn basis_enumeration_examples() {
        let b = enumerate_basis(1, 2, None).unwrap();
        assert_eq!(b.dim(), 3);
        assert_eq!(b.occupations(2), &[2]);

        let b = enumerate_basis(2, 1, None).unwrap();
        let tuples: Vec<&[u32]> = (0..b.dim()).map(|i| b.occupations(i)).collect();
        assert_eq!(tuples, vec![&[0, 0][..], &[0, 1], &[1, 0], &[1, 1]]);

        let b = enumerate_basis(2, 2, Some(2)).unwrap();
        let tuples: Vec<&[u32]> = (0..b.dim()).map(|i| b.occupations(i)).collect();
        assert_eq!(tuples, vec![&[0, 2][..], &[1, 1], &[2, 0]]);

        assert!(enumerate_basis(2, 2, Some(5)).is_err());
    }

    #[test]
    fn basis_index_roundtrip() {
        let b = enumerate_basis(3, 4, None).unwrap();
        assert_eq!(b.dim(), 125);
        for i in 0..b.dim() {
            assert_eq!(b.position(b.occupations(i)), Some(i));
        }
        assert_eq!(b.position(&[5, 0, 0]), None);
    }

    #[test]
    fn hamiltonian_diagonal_m2_normal() {
        let p = single_mode_params(1.3, 0.4, 2, Ordering::Normal);
        let b = enumerate_basis(1, 2, None).unwrap();
        let h = build_gdst_hamiltonian(&p, &b).unwrap();
        assert_eq!(h.element(0, 0), c(0.0, 0.0));
        assert_relative_eq!(h.element(1, 1).re, 1.3, epsilon = 1e-15);
        assert_relative_eq!(h.element(2, 2).re, 2.0 * 1.3 - 0.4, epsilon = 1e-14);
    }

    #[test]
    fn hamiltonian_hopping_element() {
        let p = GdstParams::new(
            0.0,
            0.0,
            2,
            CouplingMatrix::new(2, vec![0.0, 0.7, 0.7, 0.0]).unwrap(),
            Ordering::Normal,
        )
        .unwrap();
        let b = enumerate_basis(2, 1, None).unwrap();
        let h = build_gdst_hamiltonian(&p, &b).unwrap();
        let i10 = b.position(&[1, 0]).unwrap();
        let i01 = b.position(&[0, 1]).unwrap();
        assert_relative_eq!(h.element(i10, i01).re, -0.7, epsilon = 1e-15);
        assert_relative_eq!(h.element(i01, i10).re, -0.7, epsilon = 1e-15);
    }

    #[test]
    fn hamiltonian_symmetric_ordering_diagonal() {
        let gamma = 0.21;
        let p = single_mode_params(0.0, gamma, 3, Ordering::Symmetric);
        let b = enumerate_basis(1, 4, None).unwrap();
        let h = build_gdst_hamiltonian(&p, &b).unwrap();
        // at n=2 the cubic NO term n(n-1)(n-2)/3 vanishes; SO adds
        // -(mu1 n + mu2 n(n-1)) with mu = (1.5, 1.5)
        assert_relative_eq!(h.element(2, 2).re, -6.0 * gamma, epsilon = 1e-14);
    }

    #[test]
    fn hamiltonian_hermitian_and_block_diagonal() {
        let p = GdstParams::new(
            0.9,
            0.3,
            3,
            nearest_neighbor_ring(3, 0.5).unwrap(),
            Ordering::Symmetric,
        )
        .unwrap();
        let b = enumerate_basis(3, 3, None).unwrap();
        let h = build_gdst_hamiltonian(&p, &b).unwrap();
        for r in 0..h.dim() {
            for col in 0..h.dim() {
                let diff = h.element(r, col) - h.element(col, r).conj();
                assert!(diff.norm() == 0.0, "not Hermitian at ({r},{col})");
                let tr: u32 = b.occupations(r).iter().sum();
                let tc: u32 = b.occupations(col).iter().sum();
                if tr != tc {
                    assert_eq!(h.element(r, col), c(0.0, 0.0), "cross-sector at ({r},{col})");
                }
            }
        }
    }

    #[test]
    fn eigensolver_reconstructs_random_hermitian() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for n in [1usize, 2, 5, 12] {
            let mut m = vec![c(0.0, 0.0); n * n];
            for i in 0..n {
                m[i * n + i] = c(rng.gen_range(-2.0..2.0), 0.0);
                for j in (i + 1)..n {
                    let z = c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
                    m[i * n + j] = z;
                    m[j * n + i] = z.conj();
                }
            }
            let original = m.clone();
            let (e, v) = hermitian_eigen(&mut m, n).unwrap();
            // V diag(E) V^† == original and V unitary
            for r in 0..n {
                for col in 0..n {
                    let mut acc = c(0.0, 0.0);
                    let mut gram = c(0.0, 0.0);
                    for k in 0..n {
                        acc += v[r * n + k] * e[k] * v[col * n + k].conj();
                        gram += v[k * n + r].conj() * v[k * n + col];
                    }
                    assert!((acc - original[r * n + col]).norm() < 1e-12);
                    let expect = if r == col { 1.0 } else { 0.0 };
                    assert!((gram - c(expect, 0.0)).norm() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn coherent_state_examples() {
        let basis = enumerate_basis(2, 6, None).unwrap();
        let vac = BosonLatticeState::new(vec![c(0.0, 0.0); 2]).unwrap();
        let (state, tail) = coherent_product_state(&vac, &basis).unwrap();
        assert_eq!(tail, 0.0);
        let i00 = basis.position(&[0, 0]).unwrap();
        assert_relative_eq!(state.amplitudes[i00].norm(), 1.0, epsilon = 1e-15);

        let basis = enumerate_basis(1, 10, None).unwrap();
        let beta = BosonLatticeState::new(vec![c(1.0, 0.0)]).unwrap();
        let (state, tail) = coherent_product_state(&beta, &basis).unwrap();
        assert!(tail < 1e-7);
        // amplitudes squared follow the Poisson weights of the same label
        let pois = crate::observables::poisson_distribution(c(1.0, 0.0), 10);
        for n in 0..=10 {
            assert_relative_eq!(
                state.amplitudes[n].norm_sqr(),
                pois.probs[n],
                max_relative = 1e-6
            );
        }
    }

    #[test]
    fn coherent_state_checked_rejects_small_cutoff() {
        let basis = enumerate_basis(1, 2, None).unwrap();
        let beta = BosonLatticeState::new(vec![c(2.0, 0.0)]).unwrap();
        match coherent_product_state_checked(&beta, &basis, 1e-10) {
            Err(Error::CutoffTooSmall { tail_mass, .. }) => assert!(tail_mass > 0.5),
            other => panic!("expected cutoff error, got {other:?}"),
        }
        let sector = enumerate_basis(2, 2, Some(2)).unwrap();
        let two = BosonLatticeState::new(vec![c(1.0, 0.0); 2]).unwrap();
        assert!(coherent_product_state(&two, &sector).is_err());
    }

    #[test]
    fn evolve_identity_at_t0() {
        let p = single_mode_params(1.0, 0.2, 2, Ordering::Normal);
        let b = enumerate_basis(1, 8, None).unwrap();
        let h = build_gdst_hamiltonian(&p, &b).unwrap();
        let beta = BosonLatticeState::new(vec![c(0.8, 0.3)]).unwrap();
        let (psi0, _) = coherent_product_state(&beta, &b).unwrap();
        let psi = evolve(&h, &psi0, 0.0).unwrap();
        for (a, b) in psi.amplitudes.iter().zip(&psi0.amplitudes) {
            assert!((a - b).norm() < 1e-13);
        }
    }

    #[test]
    fn evolve_linear_hamiltonian_rotates_coherent_label() {
        // H = omega0 n sends |beta> to |beta e^{-i omega0 t}> exactly
        let omega0 = 1.7;
        let p = single_mode_params(omega0, 0.0, 2, Ordering::Normal);
        let b = enumerate_basis(1, 25, None).unwrap();
        let h = build_gdst_hamiltonian(&p, &b).unwrap();
        let beta0 = c(1.1, -0.4);
        let start = BosonLatticeState::new(vec![beta0]).unwrap();
        let (psi0, tail) = coherent_product_state(&start, &b).unwrap();
        assert!(tail < 1e-12);
        let prop = Propagator::new(&h).unwrap();
        for t in [0.5, 2.0, 7.3] {
            let psi = prop.apply(&psi0, t).unwrap();
            let rotated = beta0 * Complex64::from_polar(1.0, -omega0 * t);
            let reference = BosonLatticeState::new(vec![rotated]).unwrap();
            let eps = correlation_index(&psi, &reference, &b).unwrap();
            assert!(eps < 1e-10, "eps = {eps} at t = {t}");
        }
    }

    #[test]
    fn evolve_is_unitary_for_random_hermitian() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let p = GdstParams::new(
            rng.gen_range(0.5..1.5),
            rng.gen_range(0.01..0.3),
            3,
            nearest_neighbor_ring(2, rng.gen_range(0.3..1.0)).unwrap(),
            Ordering::Symmetric,
        )
        .unwrap();
        let b = enumerate_basis(2, 12, None).unwrap();
        let h = build_gdst_hamiltonian(&p, &b).unwrap();
        let raw: Vec<Complex64> = (0..b.dim())
            .map(|_| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        let psi0 = QuantumState::new(raw).unwrap();
        let prop = Propagator::new(&h).unwrap();
        for t in [1.0, 100.0, 260.0] {
            let psi = prop.apply(&psi0, t).unwrap();
            assert!((psi.norm() - 1.0).abs() < 1e-10, "norm drift at t = {t}");
        }
    }

    #[test]
    fn sector_populations_conserved() {
        let p = GdstParams::new(
            1.0,
            0.1,
            2,
            nearest_neighbor_ring(2, 0.8).unwrap(),
            Ordering::Normal,
        )
        .unwrap();
        let b = enumerate_basis(2, 6, None).unwrap();
        let h = build_gdst_hamiltonian(&p, &b).unwrap();
        let beta = BosonLatticeState::new(vec![c(0.7, 0.0), c(0.0, 0.5)]).unwrap();
        let (psi0, _) = coherent_product_state(&beta, &b).unwrap();
        let psi = evolve(&h, &psi0, 3.0).unwrap();
        let mut pop0 = BTreeMap::new();
        let mut pop1 = BTreeMap::new();
        for (i, occ) in b.states.iter().enumerate() {
            let total: u32 = occ.iter().sum();
            *pop0.entry(total).or_insert(0.0) += psi0.amplitudes[i].norm_sqr();
            *pop1.entry(total).or_insert(0.0) += psi.amplitudes[i].norm_sqr();
        }
        for (total, w0) in pop0 {
            assert_relative_eq!(pop1[&total], w0, epsilon = 1e-12);
        }
    }

    #[test]
    fn correlation_index_examples() {
        let b = enumerate_basis(2, 14, None).unwrap();
        let beta = BosonLatticeState::new(vec![c(1.0, 0.2), c(-0.3, 0.4)]).unwrap();
        let (psi, tail) = coherent_product_state(&beta, &b).unwrap();
        let eps = correlation_index(&psi, &beta, &b).unwrap();
        assert!(eps <= 10.0 * tail.max(1e-15), "eps = {eps}, tail = {tail}");

        // orthogonal state: a single basis vector missing from |0,0>'s support
        let vacuum = BosonLatticeState::new(vec![c(0.0, 0.0); 2]).unwrap();
        let mut amps = vec![c(0.0, 0.0); b.dim()];
        amps[b.position(&[1, 0]).unwrap()] = c(1.0, 0.0);
        let ortho = QuantumState::new(amps).unwrap();
        assert_relative_eq!(correlation_index(&ortho, &vacuum, &b).unwrap(), 2.0, epsilon = 1e-12);
    }

    #[test]
    fn linear_dimer_stays_factorized() {
        // gamma = 0: the factorized CS evolution is exact, so the correlation
        // index stays at the tail-induced floor.
        let lam = 1.0;
        let p = GdstParams::new(
            0.0,
            0.0,
            2,
            nearest_neighbor_ring(2, lam).unwrap(),
            Ordering::Normal,
        )
        .unwrap();
        let basis = enumerate_basis(2, 16, None).unwrap();
        let h = build_gdst_hamiltonian(&p, &basis).unwrap();
        let beta0 = BosonLatticeState::new(vec![c(1.2, 0.0), c(0.4, 0.3)]).unwrap();
        let (psi0, tail) = coherent_product_state(&beta0, &basis).unwrap();
        assert!(tail < 1e-10);
        let prop = Propagator::new(&h).unwrap();
        // analytic factorized flow: i beta' = -lam (sigma_x) beta
        for t in [0.7, 2.5, 6.0] {
            let psi = prop.apply(&psi0, t).unwrap();
            let (b1, b2) = (beta0.amplitudes()[0], beta0.amplitudes()[1]);
            let cos = Float::cos(lam * t);
            let sin = Float::sin(lam * t);
            let bt = BosonLatticeState::new(vec![
                b1 * cos + c(0.0, 1.0) * b2 * sin,
                b2 * cos + c(0.0, 1.0) * b1 * sin,
            ])
            .unwrap();
            let eps = correlation_index(&psi, &bt, &basis).unwrap();
            assert!(eps < 1e-6, "eps = {eps} at t = {t}");
        }
    }

    #[test]
    fn mode_occupation_examples() {
        let b = enumerate_basis(2, 20, None).unwrap();
        let vac = BosonLatticeState::new(vec![c(0.0, 0.0); 2]).unwrap();
        let (psi, _) = coherent_product_state(&vac, &b).unwrap();
        assert_eq!(mode_occupation(&psi, &b, 1).unwrap(), 0.0);

        let beta = BosonLatticeState::new(vec![c(0.0, 0.0), c(2.0_f64.sqrt(), 0.0)]).unwrap();
        let (psi, _) = coherent_product_state(&beta, &b).unwrap();
        assert_relative_eq!(mode_occupation(&psi, &b, 2).unwrap(), 2.0, max_relative = 1e-6);

        let mut amps = vec![c(0.0, 0.0); b.dim()];
        amps[b.position(&[1, 1]).unwrap()] = c(1.0, 0.0);
        let fock = QuantumState::new(amps).unwrap();
        assert_relative_eq!(mode_occupation(&fock, &b, 1).unwrap(), 1.0, epsilon = 1e-15);
        assert!(mode_occupation(&fock, &b, 3).is_err());
    }

    #[test]
    fn quadrature_uncertainty_examples() {
        let b = enumerate_basis(1, 30, None).unwrap();
        for beta in [c(0.0, 0.0), c(1.3, -0.7), c(0.5, 2.0)] {
            let state = BosonLatticeState::new(vec![beta]).unwrap();
            let (psi, tail) = coherent_product_state(&state, &b).unwrap();
            assert!(tail < 1e-10);
            let (dx, dp) = quadrature_uncertainty(&psi, &b, 1).unwrap();
            assert_relative_eq!(dx * dp, 0.5, epsilon = 1e-6);
            assert_relative_eq!(dx, core::f64::consts::FRAC_1_SQRT_2, epsilon = 1e-6);
        }

        let mut amps = vec![c(0.0, 0.0); b.dim()];
        amps[1] = c(1.0, 0.0);
        let one = QuantumState::new(amps).unwrap();
        let (dx, dp) = quadrature_uncertainty(&one, &b, 1).unwrap();
        assert_relative_eq!(dx, (1.5_f64).sqrt(), epsilon = 1e-12);
        assert_relative_eq!(dp, (1.5_f64).sqrt(), epsilon = 1e-12);
        assert_relative_eq!(dx * dp, 1.5, epsilon = 1e-12);
    }

    #[test]
    fn so_correction_expectation_matches_symbol() {
        // <beta| -gamma sum mu_n b^{† n} b^n |beta> = -gamma sum mu_n u^n
        let gamma = 0.13;
        let basis = enumerate_basis(1, 40, None).unwrap();
        for m in [2u32, 3, 4] {
            let p_no = single_mode_params(0.0, gamma, m, Ordering::Normal);
            let p_so = single_mode_params(0.0, gamma, m, Ordering::Symmetric);
            let h_no = build_gdst_hamiltonian(&p_no, &basis).unwrap();
            let h_so = build_gdst_hamiltonian(&p_so, &basis).unwrap();
            let beta = c(1.1, 0.6);
            let state = BosonLatticeState::new(vec![beta]).unwrap();
            let (psi, tail) = coherent_product_state(&state, &basis).unwrap();
            assert!(tail < 1e-12);
            let mut expect_diff = 0.0;
            for (i, a) in psi.amplitudes.iter().enumerate() {
                expect_diff += a.norm_sqr() * (h_so.element(i, i) - h_no.element(i, i)).re;
            }
            let u = beta.norm_sqr();
            let symbol: f64 = p_so
                .so_coefficients()
                .mu()
                .iter()
                .enumerate()
                .map(|(i, mu)| -gamma * mu * Float::powi(u, i as i32 + 1))
                .sum();
            assert_relative_eq!(expect_diff, symbol, max_relative = 1e-9);
        }
    }

    #[test]
    fn short_time_occupation_matches_quasiclassical() {
        // Ehrenfest check: |<n_j>(t) - |beta_j(t)|^2| shrinks like t^2
        use crate::dynamics::{integrate, GdstModel, IntegratorConfig};

        let p = GdstParams::new(
            0.0,
            0.05,
            3,
            nearest_neighbor_ring(2, 1.0).unwrap(),
            Ordering::Normal,
        )
        .unwrap();
        let basis = enumerate_basis(2, 18, None).unwrap();
        let h = build_gdst_hamiltonian(&p, &basis).unwrap();
        let beta0 = BosonLatticeState::new(vec![c(2.0, 0.0), c(0.0, 0.0)]).unwrap();
        let (psi0, _) = coherent_product_state(&beta0, &basis).unwrap();
        let prop = Propagator::new(&h).unwrap();

        let err_at = |t: f64| -> f64 {
            let psi = prop.apply(&psi0, t).unwrap();
            let cfg = IntegratorConfig::uniform(0.0, t, 2);
            let traj = integrate(&GdstModel(&p), beta0.amplitudes(), &cfg).unwrap();
            let quasi = traj.final_state()[0].norm_sqr();
            (mode_occupation(&psi, &basis, 1).unwrap() - quasi).abs()
        };
        let e1 = err_at(0.2);
        let e2 = err_at(0.1);
        assert!(e1 / e2 >= 3.5, "error ratio {} too small (e1={e1}, e2={e2})", e1 / e2);
    }
}
