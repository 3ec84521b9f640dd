//! Dense exact-diagonalization substrate: q-ary ring Hilbert spaces,
//! translation operators, momentum projectors, and trace-distance
//! machinery.
//!
//! Basis convention: site 0 is the most significant q-ary digit of the
//! amplitude index, so basis index `i` encodes the configuration
//! `(z_0, ..., z_{n-1})` with `i = sum_s z_s q^{n-1-s}`. `translate`
//! moves the content of site s to site s+1.

use ndarray::{Array1, Array2};
use ndarray_linalg::{Eigh, UPLO};
use num_complex::Complex64;
use num_integer::Integer;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

/// Default cap on dense state vectors (amplitude count).
pub const DENSE_STATE_CAP: usize = 1 << 20;
/// Default cap on the dimension of dense operators kept as full matrices.
pub const DENSE_OPERATOR_CAP: usize = 1 << 12;

/// An n-site ring of qudits with local dimension q.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct RingSpec {
    pub n: usize,
    pub q: usize,
}

impl RingSpec {
    pub fn new(n: usize, q: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::Domain("ring needs at least one site".into()));
        }
        if q < 2 {
            return Err(Error::Domain("local dimension must be >= 2".into()));
        }
        let spec = RingSpec { n, q };
        if spec.checked_dim().is_none() || spec.dim() > DENSE_STATE_CAP {
            return Err(Error::Resource(format!(
                "q^n = {q}^{n} exceeds the dense state cap of {DENSE_STATE_CAP} amplitudes"
            )));
        }
        Ok(spec)
    }

    fn checked_dim(&self) -> Option<usize> {
        self.q.checked_pow(self.n as u32)
    }

    /// Hilbert space dimension q^n.
    pub fn dim(&self) -> usize {
        self.q.pow(self.n as u32)
    }

    /// Guard for operations that materialize dim x dim matrices.
    pub fn require_operator_cap(&self) -> Result<()> {
        if self.dim() > DENSE_OPERATOR_CAP {
            return Err(Error::Resource(format!(
                "q^n = {} exceeds the dense operator cap of {DENSE_OPERATOR_CAP}",
                self.dim()
            )));
        }
        Ok(())
    }

    /// Digit of `index` at `site` under the most-significant-site-0 order.
    pub fn digit(&self, index: usize, site: usize) -> usize {
        (index / self.q.pow((self.n - 1 - site) as u32)) % self.q
    }

    /// Stride of `site` in the amplitude index.
    pub fn stride(&self, site: usize) -> usize {
        self.q.pow((self.n - 1 - site) as u32)
    }

    /// Basis index after shifting every site's content by `x` sites.
    pub fn translated_index(&self, index: usize, x: usize) -> usize {
        let mut out = 0;
        for site in 0..self.n {
            let src = (site + self.n - x % self.n) % self.n;
            out += self.digit(index, src) * self.stride(site);
        }
        out
    }
}

/// Dense state on a ring. Not necessarily normalized mid-pipeline; `norm`
/// reports the current 2-norm.
#[derive(Debug, Clone)]
pub struct StateVector {
    pub spec: RingSpec,
    pub amplitudes: Array1<Complex64>,
}

impl StateVector {
    pub fn new(spec: RingSpec, amplitudes: Array1<Complex64>) -> Result<Self> {
        if amplitudes.len() != spec.dim() {
            return Err(Error::Domain(format!(
                "amplitude count {} does not match q^n = {}",
                amplitudes.len(),
                spec.dim()
            )));
        }
        if amplitudes.iter().any(|a| !a.re.is_finite() || !a.im.is_finite()) {
            return Err(Error::Domain("non-finite amplitude".into()));
        }
        Ok(StateVector { spec, amplitudes })
    }

    /// Computational basis state |z_0 ... z_{n-1}> from its index.
    pub fn basis(spec: RingSpec, index: usize) -> Self {
        let mut amplitudes = Array1::zeros(spec.dim());
        amplitudes[index] = Complex64::new(1.0, 0.0);
        StateVector { spec, amplitudes }
    }

    /// Product state v^{tensor n}.
    pub fn product(spec: RingSpec, v: &[Complex64]) -> Result<Self> {
        if v.len() != spec.q {
            return Err(Error::Domain("local vector length must equal q".into()));
        }
        let mut amplitudes = Array1::from_elem(spec.dim(), Complex64::new(1.0, 0.0));
        for i in 0..spec.dim() {
            for s in 0..spec.n {
                amplitudes[i] *= v[spec.digit(i, s)];
            }
        }
        Ok(StateVector { spec, amplitudes })
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn normalized(&self) -> StateVector {
        let n = self.norm();
        StateVector {
            spec: self.spec,
            amplitudes: self.amplitudes.mapv(|a| a / n),
        }
    }

    pub fn inner(&self, other: &StateVector) -> Complex64 {
        self.amplitudes
            .iter()
            .zip(other.amplitudes.iter())
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    /// |psi><psi| as a dense operator.
    pub fn projector(&self) -> Result<DensityOperator> {
        self.spec.require_operator_cap()?;
        let d = self.spec.dim();
        let mut mat = Array2::zeros((d, d));
        for i in 0..d {
            for j in 0..d {
                mat[(i, j)] = self.amplitudes[i] * self.amplitudes[j].conj();
            }
        }
        DensityOperator::new(self.spec, mat)
    }
}

/// Cyclic shift by x sites: content of site s moves to site s+x.
/// Norm-preserving (a pure permutation of amplitudes).
pub fn translate(state: &StateVector, x: i64) -> StateVector {
    let n = state.spec.n as i64;
    let x = ((x % n) + n) % n;
    let mut out = Array1::zeros(state.spec.dim());
    for i in 0..state.spec.dim() {
        out[state.spec.translated_index(i, x as usize)] = state.amplitudes[i];
    }
    StateVector {
        spec: state.spec,
        amplitudes: out,
    }
}

/// Hermitian operator on the ring with its trace recorded. Projectors are
/// stored unnormalized, so `trace` is not necessarily 1.
#[derive(Debug, Clone)]
pub struct DensityOperator {
    pub spec: RingSpec,
    pub matrix: Array2<Complex64>,
    pub trace: f64,
}

impl DensityOperator {
    pub fn new(spec: RingSpec, matrix: Array2<Complex64>) -> Result<Self> {
        let d = spec.dim();
        if matrix.dim() != (d, d) {
            return Err(Error::Domain("operator dimension mismatch".into()));
        }
        let mut herm_err = 0.0_f64;
        for i in 0..d {
            for j in i..d {
                herm_err = herm_err.max((matrix[(i, j)] - matrix[(j, i)].conj()).norm());
            }
        }
        if herm_err > 1e-10 {
            return Err(Error::Structural(format!(
                "operator not Hermitian: max deviation {herm_err:.3e}"
            )));
        }
        let trace = (0..d).map(|i| matrix[(i, i)].re).sum();
        Ok(DensityOperator { spec, matrix, trace })
    }

    /// Ascending eigenvalues of the Hermitian matrix.
    pub fn eigenvalues(&self) -> Result<Array1<f64>> {
        let (w, _) = self
            .matrix
            .eigh(UPLO::Lower)
            .map_err(|e| Error::Structural(format!("eigensolve failed: {e}")))?;
        Ok(w)
    }

    /// Numerical rank: eigenvalues at least `rel_tol` times the largest
    /// count toward the rank.
    pub fn rank(&self, rel_tol: f64) -> Result<usize> {
        let w = self.eigenvalues()?;
        let max = w.iter().cloned().fold(0.0_f64, f64::max);
        if max <= 0.0 {
            return Ok(0);
        }
        Ok(w.iter().filter(|&&x| x >= rel_tol * max).count())
    }

    pub fn scaled(&self, factor: f64) -> DensityOperator {
        DensityOperator {
            spec: self.spec,
            matrix: self.matrix.mapv(|a| a * factor),
            trace: self.trace * factor,
        }
    }
}

/// Unnormalized momentum projector `P_k = (1/n) sum_x w^{-kx} T^x` with
/// `w = exp(2 pi i / n)`. Idempotent and Hermitian.
pub fn momentum_projector(spec: RingSpec, k_index: usize) -> Result<DensityOperator> {
    spec.require_operator_cap()?;
    if k_index >= spec.n {
        return Err(Error::Domain(format!(
            "momentum index {k_index} outside [0, {})",
            spec.n
        )));
    }
    let d = spec.dim();
    let n = spec.n as f64;
    let mut mat = Array2::<Complex64>::zeros((d, d));
    for x in 0..spec.n {
        let phase = Complex64::from_polar(
            1.0 / n,
            -2.0 * std::f64::consts::PI * (k_index * x) as f64 / n,
        );
        for i in 0..d {
            mat[(spec.translated_index(i, x), i)] += phase;
        }
    }
    DensityOperator::new(spec, mat)
}

/// The maximally mixed state over the zero-momentum sector: P_0 divided by
/// its trace.
pub fn rho_ti(spec: RingSpec) -> Result<DensityOperator> {
    let p0 = momentum_projector(spec, 0)?;
    let tr = p0.trace;
    if tr <= 0.0 {
        return Err(Error::Structural("zero-momentum projector has nonpositive trace".into()));
    }
    Ok(p0.scaled(1.0 / tr))
}

/// Closed form for Tr P_k: `(1/n) sum_x w^{-kx} q^{gcd(n,x)}` with
/// gcd(n, 0) = n.
pub fn sector_trace_formula(spec: RingSpec, k_index: usize) -> f64 {
    let n = spec.n;
    let mut sum = Complex64::new(0.0, 0.0);
    for x in 0..n {
        let g = if x == 0 { n } else { n.gcd(&x) };
        let phase =
            Complex64::from_polar(1.0, -2.0 * std::f64::consts::PI * (k_index * x) as f64 / n as f64);
        sum += phase * (spec.q as f64).powi(g as i32);
    }
    (sum / n as f64).re
}

/// Trace distance `(1/2) || a - b ||_1` via eigenvalues of the Hermitian
/// difference. Both operators must share a spec and have unit trace.
pub fn trace_distance(a: &DensityOperator, b: &DensityOperator) -> Result<f64> {
    if a.spec != b.spec {
        return Err(Error::Domain("trace_distance: spec mismatch".into()));
    }
    if (a.trace - 1.0).abs() > 1e-9 || (b.trace - 1.0).abs() > 1e-9 {
        return Err(Error::Precondition(format!(
            "trace_distance expects unit traces, got {} and {}",
            a.trace, b.trace
        )));
    }
    let diff = DensityOperator::new(a.spec, &a.matrix - &b.matrix)?;
    let w = diff.eigenvalues()?;
    Ok(0.5 * w.iter().map(|x| x.abs()).sum::<f64>())
}

/// Outcome of the projector form of the tails inequality
/// `D(rho, sigma) >= Tr(P sigma) - Tr(P rho)`.
#[derive(Debug, Clone, Copy)]
pub struct TailsCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

/// Checks `D(rho, sigma) >= Tr(P sigma) - Tr(P rho)` for a projector P.
pub fn tails_inequality_check(
    rho: &DensityOperator,
    sigma: &DensityOperator,
    projector: &DensityOperator,
) -> Result<TailsCheck> {
    if rho.spec != projector.spec || sigma.spec != projector.spec {
        return Err(Error::Domain("tails check: spec mismatch".into()));
    }
    let d = projector.spec.dim();
    let p = &projector.matrix;
    let p2 = p.dot(p);
    let mut idem_err = 0.0_f64;
    for i in 0..d {
        for j in 0..d {
            idem_err = idem_err.max((p2[(i, j)] - p[(i, j)]).norm());
        }
    }
    if idem_err > 1e-10 {
        return Err(Error::Precondition(format!(
            "P is not idempotent: max |P^2 - P| = {idem_err:.3e}"
        )));
    }
    let tr_prod = |m: &Array2<Complex64>| -> f64 {
        let mut t = Complex64::new(0.0, 0.0);
        for i in 0..d {
            for j in 0..d {
                t += p[(i, j)] * m[(j, i)];
            }
        }
        t.re
    };
    let lhs = trace_distance(rho, sigma)?;
    let rhs = tr_prod(&sigma.matrix) - tr_prod(&rho.matrix);
    Ok(TailsCheck {
        lhs,
        rhs,
        holds: lhs >= rhs - 1e-9,
    })
}

/// Reduced density matrix of a pure state on the given sites, in the order
/// listed. The result is q^{|sites|}-dimensional.
pub fn reduced_density(state: &StateVector, sites: &[usize]) -> Result<Array2<Complex64>> {
    let spec = state.spec;
    for &s in sites {
        if s >= spec.n {
            return Err(Error::Domain(format!("site {s} outside the ring")));
        }
    }
    let keep_dim = spec.q.pow(sites.len() as u32);
    let rest: Vec<usize> = (0..spec.n).filter(|s| !sites.contains(s)).collect();
    let rest_dim = spec.q.pow(rest.len() as u32);
    // gather amplitudes into a keep x rest matrix, then contract
    let mut m = Array2::<Complex64>::zeros((keep_dim, rest_dim));
    for i in 0..spec.dim() {
        let mut row = 0;
        for &s in sites {
            row = row * spec.q + spec.digit(i, s);
        }
        let mut col = 0;
        for &s in &rest {
            col = col * spec.q + spec.digit(i, s);
        }
        m[(row, col)] = state.amplitudes[i];
    }
    let mut rho = Array2::<Complex64>::zeros((keep_dim, keep_dim));
    for a in 0..keep_dim {
        for b in 0..keep_dim {
            let mut acc = Complex64::new(0.0, 0.0);
            for c in 0..rest_dim {
                acc += m[(a, c)] * m[(b, c)].conj();
            }
            rho[(a, b)] = acc;
        }
    }
    Ok(rho)
}

/// Tr(rho^2) for a small Hermitian matrix.
pub fn purity(rho: &Array2<Complex64>) -> f64 {
    let d = rho.nrows();
    let mut t = 0.0;
    for i in 0..d {
        for j in 0..d {
            t += (rho[(i, j)] * rho[(j, i)]).re;
        }
    }
    t
}

/// Dominant eigenvector of a small Hermitian matrix (for purifying
/// near-pure reduced states).
pub fn top_eigenvector(rho: &Array2<Complex64>) -> Result<Array1<Complex64>> {
    let (w, v) = rho
        .eigh(UPLO::Lower)
        .map_err(|e| Error::Structural(format!("eigensolve failed: {e}")))?;
    // eigh on a row-major complex array hands back the conjugated
    // eigenvector matrix (A = conj(V) diag(w) V^T), so undo the conjugation
    let top = w.len() - 1;
    Ok(v.column(top).mapv(|x| x.conj()))
}

/// Numerical rank of a Hermitian positive semidefinite matrix:
/// eigenvalues at least `rel_tol` times the largest count.
pub fn hermitian_rank(m: &Array2<Complex64>, rel_tol: f64) -> Result<usize> {
    let (w, _) = m
        .eigh(UPLO::Lower)
        .map_err(|e| Error::Structural(format!("eigensolve failed: {e}")))?;
    let max = w.iter().cloned().fold(0.0_f64, f64::max);
    if max <= 0.0 {
        return Ok(0);
    }
    Ok(w.iter().filter(|&&x| x >= rel_tol * max).count())
}

/// Rank of the span of a family of vectors via the Gram matrix G = S^H S.
pub fn gram_rank(vectors: &[Array1<Complex64>], rel_tol: f64) -> Result<usize> {
    if vectors.is_empty() {
        return Ok(0);
    }
    let k = vectors.len();
    let mut g = Array2::<Complex64>::zeros((k, k));
    for i in 0..k {
        for j in 0..k {
            g[(i, j)] = vectors[i]
                .iter()
                .zip(vectors[j].iter())
                .map(|(a, b)| a.conj() * b)
                .sum();
        }
    }
    hermitian_rank(&g, rel_tol)
}

/// Seeded standard complex Gaussian.
pub fn gaussian_complex<R: Rng>(rng: &mut R) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im) / 2.0_f64.sqrt()
}

/// Full-rank random density operator: G G^dagger normalized to unit trace,
/// with iid complex Gaussian G (Wishart construction).
pub fn random_density_operator<R: Rng>(spec: RingSpec, rng: &mut R) -> Result<DensityOperator> {
    spec.require_operator_cap()?;
    let d = spec.dim();
    let g = Array2::from_shape_fn((d, d), |_| gaussian_complex(rng));
    let mut m = Array2::<Complex64>::zeros((d, d));
    for i in 0..d {
        for j in 0..d {
            let mut acc = Complex64::new(0.0, 0.0);
            for k in 0..d {
                acc += g[(i, k)] * g[(j, k)].conj();
            }
            m[(i, j)] = acc;
        }
    }
    let tr: f64 = (0..d).map(|i| m[(i, i)].re).sum();
    DensityOperator::new(spec, m.mapv(|a| a / tr))
}

/// Random rank-k orthogonal projector from a QR factorization of a
/// Gaussian matrix.
pub fn random_projector<R: Rng>(spec: RingSpec, rank: usize, rng: &mut R) -> Result<DensityOperator> {
    spec.require_operator_cap()?;
    let d = spec.dim();
    if rank == 0 || rank > d {
        return Err(Error::Domain(format!("projector rank {rank} outside [1, {d}]")));
    }
    // Gram-Schmidt on Gaussian columns
    let mut cols: Vec<Array1<Complex64>> = Vec::with_capacity(rank);
    while cols.len() < rank {
        let mut v = Array1::from_shape_fn(d, |_| gaussian_complex(rng));
        for c in &cols {
            let ov: Complex64 = c.iter().zip(v.iter()).map(|(a, b)| a.conj() * b).sum();
            v = &v - &c.mapv(|x| x * ov);
        }
        let nrm = v.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if nrm > 1e-8 {
            cols.push(v.mapv(|x| x / nrm));
        }
    }
    let mut m = Array2::<Complex64>::zeros((d, d));
    for c in &cols {
        for i in 0..d {
            for j in 0..d {
                m[(i, j)] += c[i] * c[j].conj();
            }
        }
    }
    DensityOperator::new(spec, m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::combinatorics::necklace_count;
    use approx::assert_abs_diff_eq;
    use num_traits::ToPrimitive;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn spec_caps() {
        assert!(RingSpec::new(0, 2).is_err());
        assert!(RingSpec::new(3, 1).is_err());
        assert!(RingSpec::new(25, 2).is_err()); // 2^25 > 2^20
        let s = RingSpec::new(12, 2).unwrap();
        assert_eq!(s.dim(), 4096);
        assert!(s.require_operator_cap().is_ok());
        assert!(RingSpec::new(13, 2).unwrap().require_operator_cap().is_err());
    }

    #[test]
    fn translate_identity_and_period() {
        let spec = RingSpec::new(3, 2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let amps = Array1::from_shape_fn(spec.dim(), |_| gaussian_complex(&mut rng));
        let s = StateVector::new(spec, amps).unwrap();
        let t0 = translate(&s, 0);
        assert_eq!(t0.amplitudes, s.amplitudes);
        let roundtrip = translate(&translate(&s, 1), 2);
        for i in 0..spec.dim() {
            assert_abs_diff_eq!(
                (roundtrip.amplitudes[i] - s.amplitudes[i]).norm(),
                0.0,
                epsilon = 1e-15
            );
        }
        assert_abs_diff_eq!(translate(&s, 1).norm(), s.norm(), epsilon = 1e-14);
    }

    #[test]
    fn translate_matches_explicit_permutation() {
        // |010> -> |001> for n = 3, q = 2 under a one-site shift
        let spec = RingSpec::new(3, 2).unwrap();
        let s = StateVector::basis(spec, 0b010);
        let t = translate(&s, 1);
        assert_eq!(t.amplitudes[0b001], c(1.0, 0.0));
        // full 8x8 permutation: site s digit moves to site s+1
        for i in 0..8 {
            let s = StateVector::basis(spec, i);
            let t = translate(&s, 1);
            let expected = spec.translated_index(i, 1);
            assert_eq!(t.amplitudes[expected], c(1.0, 0.0));
            // explicit digit check
            for site in 0..3 {
                assert_eq!(spec.digit(expected, (site + 1) % 3), spec.digit(i, site));
            }
        }
    }

    #[test]
    fn projector_rank_counts_necklaces() {
        let spec = RingSpec::new(4, 2).unwrap();
        let p0 = momentum_projector(spec, 0).unwrap();
        assert_eq!(p0.rank(1e-8).unwrap(), 6);
        assert_eq!(
            necklace_count(4, 2).unwrap().to_u64().unwrap(),
            6
        );
    }

    #[test]
    fn nonzero_sector_trace() {
        let spec = RingSpec::new(2, 2).unwrap();
        let p1 = momentum_projector(spec, 1).unwrap();
        assert_abs_diff_eq!(p1.trace, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(sector_trace_formula(spec, 1), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn projectors_resolve_identity() {
        let spec = RingSpec::new(3, 2).unwrap();
        let d = spec.dim();
        let mut sum = Array2::<Complex64>::zeros((d, d));
        for k in 0..spec.n {
            sum = &sum + &momentum_projector(spec, k).unwrap().matrix;
        }
        for i in 0..d {
            for j in 0..d {
                let expect = if i == j { 1.0 } else { 0.0 };
                assert_abs_diff_eq!((sum[(i, j)] - c(expect, 0.0)).norm(), 0.0, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn rho_ti_properties() {
        let spec = RingSpec::new(4, 2).unwrap();
        let rho = rho_ti(spec).unwrap();
        assert_abs_diff_eq!(rho.trace, 1.0, epsilon = 1e-12);
        assert_eq!(rho.rank(1e-8).unwrap(), 6);
        // commutes with translation: T rho T^-1 = rho, checked through
        // basis-state images
        for i in 0..spec.dim() {
            for j in 0..spec.dim() {
                let ti = spec.translated_index(i, 1);
                let tj = spec.translated_index(j, 1);
                assert_abs_diff_eq!(
                    (rho.matrix[(ti, tj)] - rho.matrix[(i, j)]).norm(),
                    0.0,
                    epsilon = 1e-12
                );
            }
        }
    }

    #[test]
    fn trace_distance_basics() {
        let spec = RingSpec::new(2, 2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let rho = random_density_operator(spec, &mut rng).unwrap();
        assert_abs_diff_eq!(trace_distance(&rho, &rho).unwrap(), 0.0, epsilon = 1e-12);
        // orthogonal pure states
        let a = StateVector::basis(spec, 0).projector().unwrap();
        let b = StateVector::basis(spec, 3).projector().unwrap();
        assert_abs_diff_eq!(trace_distance(&a, &b).unwrap(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn trace_distance_rho_ti_vs_maximally_mixed() {
        // (n, q) = (2, 2): spectra {1/3, 1/3, 1/3, 0} vs uniform 1/4
        let spec = RingSpec::new(2, 2).unwrap();
        let rho = rho_ti(spec).unwrap();
        let mixed = DensityOperator::new(
            spec,
            Array2::from_shape_fn((4, 4), |(i, j)| {
                if i == j {
                    c(0.25, 0.0)
                } else {
                    c(0.0, 0.0)
                }
            }),
        )
        .unwrap();
        assert_abs_diff_eq!(trace_distance(&rho, &mixed).unwrap(), 0.25, epsilon = 1e-12);
    }

    #[test]
    fn tails_check_trivial_cases() {
        let spec = RingSpec::new(2, 2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let rho = random_density_operator(spec, &mut rng).unwrap();
        let p = random_projector(spec, 2, &mut rng).unwrap();
        let same = tails_inequality_check(&rho, &rho, &p).unwrap();
        assert!(same.rhs <= 1e-12);
        assert!(same.holds);

        // rho off the projector support, sigma on it
        let on = StateVector::basis(spec, 0).projector().unwrap();
        let off = StateVector::basis(spec, 3).projector().unwrap();
        let check = tails_inequality_check(&off, &on, &on).unwrap();
        assert_abs_diff_eq!(check.lhs, 1.0, epsilon = 1e-10);
        assert_abs_diff_eq!(check.rhs, 1.0, epsilon = 1e-10);
        assert!(check.holds);
    }

    #[test]
    fn tails_check_rejects_non_projector() {
        let spec = RingSpec::new(2, 2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let rho = random_density_operator(spec, &mut rng).unwrap();
        let sigma = random_density_operator(spec, &mut rng).unwrap();
        let err = tails_inequality_check(&rho, &sigma, &rho).unwrap_err();
        assert!(err.to_string().contains("idempotent"));
    }

    #[test]
    fn reduced_density_of_product_state() {
        let spec = RingSpec::new(4, 2).unwrap();
        let v = [c(0.6, 0.0), c(0.0, 0.8)];
        let s = StateVector::product(spec, &v).unwrap();
        let rho = reduced_density(&s, &[1, 2]).unwrap();
        assert_abs_diff_eq!(purity(&rho), 1.0, epsilon = 1e-12);
        let top = top_eigenvector(&rho).unwrap();
        // |v v> up to phase
        let expect = [
            v[0] * v[0],
            v[0] * v[1],
            v[1] * v[0],
            v[1] * v[1],
        ];
        let ov: Complex64 = expect.iter().zip(top.iter()).map(|(a, b)| a.conj() * b).sum();
        assert_abs_diff_eq!(ov.norm(), 1.0, epsilon = 1e-10);
    }
}
