//! Translation-invariant matrix product states on the ring, plus a
//! sampled span-rank oracle for the counting bound.

use ndarray::{Array1, Array2};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::combinatorics::{mps_dim_bound, BigCount};
use crate::error::{Error, Result};
use crate::statevector::{gaussian_complex, gram_rank, RingSpec, StateVector};

/// One site tensor A = {A^z}: q matrices of shape d_bond x d_bond.
#[derive(Debug, Clone)]
pub struct TimpsTensor {
    pub q: usize,
    pub d_bond: usize,
    pub matrices: Vec<Array2<Complex64>>,
}

impl TimpsTensor {
    pub fn new(q: usize, d_bond: usize, matrices: Vec<Array2<Complex64>>) -> Result<Self> {
        if q < 2 || d_bond == 0 {
            return Err(Error::Domain("TimpsTensor needs q >= 2, d_bond >= 1".into()));
        }
        if matrices.len() != q {
            return Err(Error::Domain(format!(
                "expected {q} matrices, got {}",
                matrices.len()
            )));
        }
        for m in &matrices {
            if m.dim() != (d_bond, d_bond) {
                return Err(Error::Domain("bond dimension mismatch".into()));
            }
            if m.iter().any(|a| !a.re.is_finite() || !a.im.is_finite()) {
                return Err(Error::Domain("non-finite tensor entry".into()));
            }
        }
        Ok(TimpsTensor { q, d_bond, matrices })
    }

    /// Independent standard complex Gaussian entries.
    pub fn random<R: Rng>(q: usize, d_bond: usize, rng: &mut R) -> Result<Self> {
        let matrices = (0..q)
            .map(|_| Array2::from_shape_fn((d_bond, d_bond), |_| gaussian_complex(rng)))
            .collect();
        TimpsTensor::new(q, d_bond, matrices)
    }
}

/// `|A> = sum_z Tr(A^{z_0} ... A^{z_{n-1}}) |z_0 ... z_{n-1}>`. Exactly
/// translation invariant by cyclicity of the trace. Not normalized.
pub fn contract_timps(tensor: &TimpsTensor, spec: RingSpec) -> Result<StateVector> {
    if tensor.q != spec.q {
        return Err(Error::Domain(format!(
            "tensor physical dimension {} does not match ring q = {}",
            tensor.q, spec.q
        )));
    }
    let d = tensor.d_bond;
    let dim = spec.dim();
    let mut amplitudes = Array1::<Complex64>::zeros(dim);
    for i in 0..dim {
        let mut prod = tensor.matrices[spec.digit(i, 0)].clone();
        for s in 1..spec.n {
            prod = prod.dot(&tensor.matrices[spec.digit(i, s)]);
        }
        amplitudes[i] = (0..d).map(|b| prod[(b, b)]).sum();
    }
    StateVector::new(spec, amplitudes)
}

/// Result of a sampled span-rank probe.
#[derive(Debug, Clone, serde::Serialize)]
pub struct SpanEstimate {
    pub samples: usize,
    pub gram_rank: usize,
    pub tolerance: f64,
    /// The counting bound being tested (serialized as a decimal string).
    #[serde(serialize_with = "crate::combinatorics::serialize_bigcount")]
    pub bound: BigCount,
}

/// Default sample count: 3 min(bound, q^n) + 10 for saturation margin.
pub fn default_timps_samples(spec: RingSpec, d_bond: u64) -> Result<usize> {
    let bound = mps_dim_bound(spec.n as u64, spec.q as u64, d_bond)?;
    let cap = BigCount::from(spec.dim());
    let eff = if bound < cap { bound } else { cap };
    // bounds beyond the Hilbert dimension are clamped, so this fits usize
    let eff: usize = eff.try_into().map_err(|_| {
        Error::Resource("sample count overflow".into())
    })?;
    Ok(3 * eff + 10)
}

fn required_samples(spec: RingSpec, bound: &BigCount) -> usize {
    let cap = BigCount::from(spec.dim());
    let eff = if bound < &cap { bound.clone() } else { cap };
    let eff: usize = eff.try_into().unwrap_or(usize::MAX / 2);
    2 * eff
}

/// Samples seeded random TIMPS, contracts them, and returns the numerical
/// rank of the span via the Gram matrix (relative eigenvalue threshold
/// `tolerance`). One RNG stream per sample index, so the result does not
/// depend on evaluation order.
pub fn timps_span_rank_with_tol(
    spec: RingSpec,
    d_bond: u64,
    samples: usize,
    seed: u64,
    tolerance: f64,
) -> Result<SpanEstimate> {
    let bound = mps_dim_bound(spec.n as u64, spec.q as u64, d_bond)?;
    let need = required_samples(spec, &bound);
    if samples < need {
        return Err(Error::Domain(format!(
            "timps_span_rank needs at least {need} samples for this grid point, got {samples}"
        )));
    }
    let mut states = Vec::with_capacity(samples);
    for idx in 0..samples {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(idx as u64);
        let tensor = TimpsTensor::random(spec.q, d_bond as usize, &mut rng)?;
        let state = contract_timps(&tensor, spec)?;
        let norm = state.norm();
        if norm < 1e-12 {
            return Err(Error::Structural("sampled TIMPS contracted to zero".into()));
        }
        states.push(state.amplitudes.mapv(|a| a / norm));
    }
    let rank = gram_rank(&states, tolerance)?;
    if BigCount::from(rank) > bound {
        return Err(Error::Structural(format!(
            "span rank {rank} exceeds the counting bound {bound}"
        )));
    }
    Ok(SpanEstimate {
        samples,
        gram_rank: rank,
        tolerance,
        bound,
    })
}

/// `timps_span_rank_with_tol` at the default 1e-8 threshold.
pub fn timps_span_rank(
    spec: RingSpec,
    d_bond: u64,
    samples: usize,
    seed: u64,
) -> Result<SpanEstimate> {
    timps_span_rank_with_tol(spec, d_bond, samples, seed, 1e-8)
}
