//! Brickwork circuits on the ring, light-cone cutting, block
//! factorization, and a span-rank probe for translation-invariant
//! depth-d states.
//!
//! Light-cone geometry: with layers indexed 0..depth from the input up,
//! a gate at layer l with left site a belongs to the cutting diamond at
//! site x iff `(a - x) mod n <= w` or `>= n - w`, where `w = depth-1-l`.
//! The cutting operator at x is the translate `C_x = T^x C_0 T^{-x}` of
//! the diamond at 0, so all cuts are exact translates of each other.

use base64::Engine;
use ndarray::{Array1, Array2, Array3};
use ndarray_linalg::{Eigh, UPLO};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::combinatorics::{block_decomposition, necklace_count, sre_dim_bound, BigCount};
use crate::error::{Error, Result};
use crate::statevector::{
    gaussian_complex, gram_rank, purity, reduced_density, top_eigenvector, translate, RingSpec,
    StateVector,
};
use crate::timps::SpanEstimate;

/// One two-site gate in a brickwork circuit, acting on
/// (left_site, left_site + 1 mod n).
#[derive(Debug, Clone)]
pub struct TwoSiteGate {
    pub left_site: usize,
    pub layer: usize,
    pub matrix: Array2<Complex64>,
}

impl TwoSiteGate {
    pub fn new(left_site: usize, layer: usize, matrix: Array2<Complex64>) -> Result<Self> {
        let m = matrix.nrows();
        if matrix.ncols() != m || m == 0 {
            return Err(Error::Domain("gate matrix must be square".into()));
        }
        let mut dev = 0.0_f64;
        for i in 0..m {
            for j in 0..m {
                let mut acc = Complex64::new(0.0, 0.0);
                for k in 0..m {
                    acc += matrix[(k, i)].conj() * matrix[(k, j)];
                }
                let expect = if i == j { 1.0 } else { 0.0 };
                dev = dev.max((acc - Complex64::new(expect, 0.0)).norm());
            }
        }
        if dev > 1e-12 {
            return Err(Error::Domain(format!(
                "gate not unitary: max |U^H U - I| = {dev:.3e}"
            )));
        }
        Ok(TwoSiteGate {
            left_site,
            layer,
            matrix,
        })
    }
}

/// Depth-d brickwork circuit. Gates are stored sorted by (layer, site)
/// and applied in that order.
#[derive(Debug, Clone)]
pub struct BrickworkCircuit {
    pub spec: RingSpec,
    pub depth: usize,
    pub gates: Vec<TwoSiteGate>,
}

impl BrickworkCircuit {
    pub fn new(spec: RingSpec, depth: usize, mut gates: Vec<TwoSiteGate>) -> Result<Self> {
        let qq = spec.q * spec.q;
        for g in &gates {
            if g.layer >= depth {
                return Err(Error::Domain(format!(
                    "gate layer {} outside [0, {depth})",
                    g.layer
                )));
            }
            if g.left_site >= spec.n {
                return Err(Error::Domain(format!("gate site {} outside the ring", g.left_site)));
            }
            if g.matrix.nrows() != qq {
                return Err(Error::Domain("gate dimension must be q^2".into()));
            }
        }
        gates.sort_by_key(|g| (g.layer, g.left_site));
        // within a layer, supports must be pairwise disjoint
        for l in 0..depth {
            let mut used = vec![false; spec.n];
            for g in gates.iter().filter(|g| g.layer == l) {
                for s in [g.left_site, (g.left_site + 1) % spec.n] {
                    if used[s] {
                        return Err(Error::Structural(format!(
                            "overlapping gates in layer {l} at site {s}"
                        )));
                    }
                    used[s] = true;
                }
            }
        }
        Ok(BrickworkCircuit { spec, depth, gates })
    }

    /// Circuit with the same gates at positions shifted by x.
    pub fn translated(&self, x: usize) -> BrickworkCircuit {
        let gates = self
            .gates
            .iter()
            .map(|g| TwoSiteGate {
                left_site: (g.left_site + x) % self.spec.n,
                layer: g.layer,
                matrix: g.matrix.clone(),
            })
            .collect();
        BrickworkCircuit {
            spec: self.spec,
            depth: self.depth,
            gates,
        }
    }

    /// Sites touched by any gate.
    pub fn support(&self) -> Vec<usize> {
        let mut used = vec![false; self.spec.n];
        for g in &self.gates {
            used[g.left_site] = true;
            used[(g.left_site + 1) % self.spec.n] = true;
        }
        (0..self.spec.n).filter(|&s| used[s]).collect()
    }
}

fn apply_two_site(
    state: &mut Array1<Complex64>,
    spec: RingSpec,
    matrix: &Array2<Complex64>,
    left: usize,
    dagger: bool,
) {
    let q = spec.q;
    let right = (left + 1) % spec.n;
    let sa = spec.stride(left);
    let sb = spec.stride(right);
    let mut scratch = vec![Complex64::new(0.0, 0.0); q * q];
    for i in 0..spec.dim() {
        if spec.digit(i, left) != 0 || spec.digit(i, right) != 0 {
            continue;
        }
        for za in 0..q {
            for zb in 0..q {
                scratch[za * q + zb] = state[i + za * sa + zb * sb];
            }
        }
        for za in 0..q {
            for zb in 0..q {
                let row = za * q + zb;
                let mut acc = Complex64::new(0.0, 0.0);
                for col in 0..q * q {
                    let m = if dagger {
                        matrix[(col, row)].conj()
                    } else {
                        matrix[(row, col)]
                    };
                    acc += m * scratch[col];
                }
                state[i + za * sa + zb * sb] = acc;
            }
        }
    }
}

/// Applies the circuit layer by layer. Norm is preserved (all gates are
/// unitary).
pub fn apply_circuit(circuit: &BrickworkCircuit, input: &StateVector) -> Result<StateVector> {
    if circuit.spec != input.spec {
        return Err(Error::Domain("apply_circuit: spec mismatch".into()));
    }
    let mut amps = input.amplitudes.clone();
    for g in &circuit.gates {
        apply_two_site(&mut amps, circuit.spec, &g.matrix, g.left_site, false);
    }
    StateVector::new(circuit.spec, amps)
}

/// Applies the inverse circuit: gates in reverse order, conjugated.
pub fn apply_circuit_inverse(
    circuit: &BrickworkCircuit,
    input: &StateVector,
) -> Result<StateVector> {
    if circuit.spec != input.spec {
        return Err(Error::Domain("apply_circuit_inverse: spec mismatch".into()));
    }
    let mut amps = input.amplitudes.clone();
    for g in circuit.gates.iter().rev() {
        apply_two_site(&mut amps, circuit.spec, &g.matrix, g.left_site, true);
    }
    StateVector::new(circuit.spec, amps)
}

/// Translation-invariance check: deviation is `|| psi - T psi ||`.
#[derive(Debug, Clone, Copy)]
pub struct TiDeviation {
    pub deviation: f64,
    pub within: bool,
}

pub fn is_translation_invariant(state: &StateVector, tol: f64) -> TiDeviation {
    let shifted = translate(state, 1);
    let deviation = state
        .amplitudes
        .iter()
        .zip(shifted.amplitudes.iter())
        .map(|(a, b)| (a - b).norm_sqr())
        .sum::<f64>()
        .sqrt();
    TiDeviation {
        deviation,
        within: deviation <= tol,
    }
}

/// Haar-random m x m unitary: Gram-Schmidt QR of a complex Gaussian
/// matrix with the R diagonal kept positive (the phase-fixed convention).
pub fn haar_unitary<R: Rng>(m: usize, rng: &mut R) -> Array2<Complex64> {
    let g = Array2::from_shape_fn((m, m), |_| gaussian_complex(rng));
    let mut cols: Vec<Array1<Complex64>> = Vec::with_capacity(m);
    for j in 0..m {
        let mut v = g.column(j).to_owned();
        for c in &cols {
            let ov: Complex64 = c.iter().zip(v.iter()).map(|(a, b)| a.conj() * b).sum();
            v = &v - &c.mapv(|x| x * ov);
        }
        let nrm = v.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        cols.push(v.mapv(|x| x / nrm));
    }
    let mut u = Array2::zeros((m, m));
    for (j, c) in cols.iter().enumerate() {
        for i in 0..m {
            u[(i, j)] = c[i];
        }
    }
    u
}

fn kron(a: &Array2<Complex64>, b: &Array2<Complex64>) -> Array2<Complex64> {
    let (ra, ca) = a.dim();
    let (rb, cb) = b.dim();
    Array2::from_shape_fn((ra * rb, ca * cb), |(i, j)| {
        a[(i / rb, j / cb)] * b[(i % rb, j % cb)]
    })
}

/// Haar-random local state, repeated on every site.
pub fn sample_product_state<R: Rng>(spec: RingSpec, rng: &mut R) -> Result<StateVector> {
    let mut v: Vec<Complex64> = (0..spec.q).map(|_| gaussian_complex(rng)).collect();
    let nrm = v.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    for a in v.iter_mut() {
        *a /= nrm;
    }
    StateVector::product(spec, &v)
}

/// Samples a brickwork circuit whose output on a site-independent product
/// state is exactly translation invariant.
///
/// Layers come in rounds: a pair of layers shares one random diagonal
/// phase gate placed at even then odd bonds (the two layers compose to
/// the same gate on every bond, which commutes with the shift), and a
/// trailing unpaired layer uses u (x) u with Haar u (a layer of identical
/// u (x) u gates is the on-site unitary u^{(x) n}). Every layer uses one
/// identical gate across its bonds.
pub fn sample_ti_brickwork<R: Rng>(
    spec: RingSpec,
    depth: usize,
    rng: &mut R,
) -> Result<BrickworkCircuit> {
    if depth > 0 && spec.n % 2 != 0 {
        return Err(Error::Domain(
            "brickwork layers need an even ring length".into(),
        ));
    }
    let q = spec.q;
    let mut gates = Vec::new();
    let place_layer = |layer: usize, gate: &Array2<Complex64>, gates: &mut Vec<TwoSiteGate>| -> Result<()> {
        let start = layer % 2;
        let mut a = start;
        while a < spec.n {
            gates.push(TwoSiteGate::new(a, layer, gate.clone())?);
            a += 2;
        }
        Ok(())
    };
    let mut l = 0;
    while l < depth {
        if l + 1 < depth {
            let mut d = Array2::<Complex64>::zeros((q * q, q * q));
            for k in 0..q * q {
                d[(k, k)] = Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * rng.gen::<f64>());
            }
            place_layer(l, &d, &mut gates)?;
            place_layer(l + 1, &d, &mut gates)?;
            l += 2;
        } else {
            let u = haar_unitary(q, rng);
            let g = kron(&u, &u);
            place_layer(l, &g, &mut gates)?;
            l += 1;
        }
    }
    BrickworkCircuit::new(spec, depth, gates)
}

/// The cutting operator `C_x = T^x C_0 T^{-x}`: the diamond-shaped gate
/// subset of the light-cone intersection at the bond (x, x+1), translated
/// from the diamond at 0.
pub fn lightcone_subcircuit(circuit: &BrickworkCircuit, x: usize) -> Result<BrickworkCircuit> {
    let n = circuit.spec.n;
    if x >= n {
        return Err(Error::Domain(format!("cut site {x} outside the ring")));
    }
    if n <= 2 * circuit.depth + 1 {
        return Err(Error::Domain(format!(
            "ring too small for disjoint light-cones: need n > 2 depth + 1 = {}",
            2 * circuit.depth + 1
        )));
    }
    let mut selected = Vec::new();
    for l in 0..circuit.depth {
        let w = circuit.depth - 1 - l;
        let mut count = 0usize;
        for g in circuit.gates.iter().filter(|g| g.layer == l) {
            let da = g.left_site % n;
            if da <= w || da >= n - w {
                selected.push(g.clone());
                count += 1;
            }
        }
        if count > w + 1 {
            return Err(Error::Structural(format!(
                "diamond layer {l} holds {count} gates, expected at most {}",
                w + 1
            )));
        }
    }
    Ok(BrickworkCircuit::new(circuit.spec, circuit.depth, selected)?.translated(x))
}

/// Site lists of the blocks and the remainder after cutting: block j
/// covers sites `(2d+1)j + 1 .. (2d+1)(j+1)` and the remainder covers the
/// final r sites wrapping through site 0.
pub fn cut_block_sites(n: usize, depth: usize) -> Result<(Vec<Vec<usize>>, Vec<usize>)> {
    let (m, r) = block_decomposition(n as u64, depth as u64)?;
    let (m, r, b) = (m as usize, r as usize, 2 * depth + 1);
    let blocks = (0..m)
        .map(|j| (0..b).map(|t| (b * j + 1 + t) % n).collect())
        .collect();
    let remainder = (0..r).map(|t| (b * m + 1 + t) % n).collect();
    Ok((blocks, remainder))
}

/// Whether the wrap-around cut at `(2d+1)m` is valid: its light-cone
/// support (2 depth sites around the cut) must not overlap the cut at 0,
/// except at depth <= 2 where the overlap is harmless (depth-1 outputs
/// are product states; depth-2 diamonds reduce to one gate).
pub fn wrap_cut_is_safe(n: usize, depth: usize) -> bool {
    match block_decomposition(n as u64, depth as u64) {
        Ok((_, r)) => depth <= 2 || r as usize >= 2 * depth,
        Err(_) => false,
    }
}

/// Applies the inverse cutting operators `C_{(2d+1)j}^{-1}` for
/// j = 0..m (every cut around the ring, including the wrap), so the
/// result splits into m pure blocks plus a pure remainder.
pub fn cut_state(circuit: &BrickworkCircuit, ti_state: &StateVector) -> Result<StateVector> {
    if !wrap_cut_is_safe(circuit.spec.n, circuit.depth) {
        return Err(Error::Precondition(format!(
            "wrap cut overlaps the first cut's light-cone at n = {}, depth = {}; \
             need remainder >= 2 depth (or depth <= 2)",
            circuit.spec.n, circuit.depth
        )));
    }
    let check = is_translation_invariant(ti_state, 1e-8);
    if !check.within {
        return Err(Error::Precondition(format!(
            "cut_state needs a translation-invariant input: deviation {:.3e}",
            check.deviation
        )));
    }
    let (m, _r) = block_decomposition(circuit.spec.n as u64, circuit.depth as u64)?;
    let b = 2 * circuit.depth + 1;
    let mut state = ti_state.clone();
    for j in 0..=(m as usize) {
        let sub = lightcone_subcircuit(circuit, (b * j) % circuit.spec.n)?;
        state = apply_circuit_inverse(&sub, &state)?;
    }
    Ok(state)
}

/// Block structure of the cut state: one 2d+1-site pure block repeated
/// around the ring plus a pure remainder.
#[derive(Debug, Clone)]
pub struct BlockFactorization {
    pub block: StateVector,
    pub remainder: StateVector,
    /// Worst deviation across: block-to-block identity (up to phase),
    /// remainder-to-block identity when sizes match, and the overlap of
    /// the reconstructed tensor product with the cut state.
    pub max_overlap_error: f64,
}

/// Cuts the state and extracts the pure block and remainder factors by
/// partial trace and purification, then reconstructs the tensor product
/// and reports the worst overlap deviation.
pub fn block_factorization(
    circuit: &BrickworkCircuit,
    ti_state: &StateVector,
) -> Result<BlockFactorization> {
    let spec = circuit.spec;
    let cut = cut_state(circuit, ti_state)?.normalized();
    let (blocks, remainder) = cut_block_sites(spec.n, circuit.depth)?;
    let mut factors: Vec<Array1<Complex64>> = Vec::new();
    let mut site_order: Vec<usize> = Vec::new();
    for sites in blocks.iter().chain(std::iter::once(&remainder)) {
        let rho = reduced_density(&cut, sites)?;
        let pur = purity(&rho);
        if pur < 1.0 - 1e-9 {
            return Err(Error::Structural(format!(
                "cut factor on sites {sites:?} not pure: purity {pur:.12}"
            )));
        }
        factors.push(top_eigenvector(&rho)?);
        site_order.extend_from_slice(sites);
    }
    let m = blocks.len();
    let mut max_err = 0.0_f64;
    // all block factors agree up to a global phase
    for f in factors.iter().take(m).skip(1) {
        let ov: Complex64 = factors[0].iter().zip(f.iter()).map(|(a, b)| a.conj() * b).sum();
        max_err = max_err.max((1.0 - ov.norm()).abs());
    }
    if remainder.len() == blocks[0].len() {
        let ov: Complex64 = factors[0]
            .iter()
            .zip(factors[m].iter())
            .map(|(a, b)| a.conj() * b)
            .sum();
        max_err = max_err.max((1.0 - ov.norm()).abs());
    }
    // reconstruct the tensor product in ring order and compare
    let mut recon = factors[0].clone();
    for f in factors.iter().skip(1) {
        let mut next = Array1::zeros(recon.len() * f.len());
        for (i, a) in recon.iter().enumerate() {
            for (j, b) in f.iter().enumerate() {
                next[i * f.len() + j] = a * b;
            }
        }
        recon = next;
    }
    let mut ordered = Array1::zeros(spec.dim());
    for (k, v) in recon.iter().enumerate() {
        // digit p of k (most significant first) belongs to site
        // site_order[p]
        let mut idx = 0;
        let mut rem = k;
        for p in (0..spec.n).rev() {
            let digit = rem % spec.q;
            rem /= spec.q;
            idx += digit * spec.stride(site_order[p]);
        }
        ordered[idx] = *v;
    }
    let ov: Complex64 = ordered
        .iter()
        .zip(cut.amplitudes.iter())
        .map(|(a, b)| a.conj() * b)
        .sum();
    max_err = max_err.max((1.0 - ov.norm()).abs());
    let block_spec = RingSpec::new(blocks[0].len(), spec.q)?;
    let rem_spec = RingSpec::new(remainder.len(), spec.q)?;
    Ok(BlockFactorization {
        block: StateVector::new(block_spec, factors[0].clone())?,
        remainder: StateVector::new(rem_spec, factors[m].clone())?,
        max_overlap_error: max_err,
    })
}

/// Two-body MPO factors of a gate: `G[(a,b),(c,d)] = sum_mu
/// L[a,c,mu] R[mu,b,d]` with bond dimension exactly q^2.
#[derive(Debug, Clone)]
pub struct GateMpoPair {
    pub q: usize,
    pub left_tensor: Array3<Complex64>,
    pub right_tensor: Array3<Complex64>,
    /// Operator-Schmidt coefficients, descending.
    pub singular_values: Vec<f64>,
}

impl GateMpoPair {
    /// Number of Schmidt coefficients above `rel_tol` times the largest.
    pub fn schmidt_rank(&self, rel_tol: f64) -> usize {
        let max = self.singular_values.first().copied().unwrap_or(0.0);
        if max <= 0.0 {
            return 0;
        }
        self.singular_values
            .iter()
            .filter(|&&s| s >= rel_tol * max)
            .count()
    }

    /// `sum_mu L[a,c,mu] R[mu,b,d]`, reassembled as a q^2 x q^2 matrix.
    pub fn recontract(&self) -> Array2<Complex64> {
        let q = self.q;
        Array2::from_shape_fn((q * q, q * q), |(row, col)| {
            let (a, b) = (row / q, row % q);
            let (c, d) = (col / q, col % q);
            (0..q * q)
                .map(|mu| self.left_tensor[(a, c, mu)] * self.right_tensor[(mu, b, d)])
                .sum()
        })
    }
}

/// Operator-Schmidt decomposition of a two-site gate across its bond,
/// via the eigendecomposition of R^H R for the reshuffled matrix
/// `R[(a,c),(b,d)] = G[(a,b),(c,d)]`.
pub fn gate_mpo_decompose(gate: &TwoSiteGate) -> Result<GateMpoPair> {
    let qq = gate.matrix.nrows();
    let q = (qq as f64).sqrt().round() as usize;
    if q * q != qq {
        return Err(Error::Domain("gate dimension is not a perfect square".into()));
    }
    let r = Array2::from_shape_fn((qq, qq), |(row, col)| {
        let (a, c) = (row / q, row % q);
        let (b, d) = (col / q, col % q);
        gate.matrix[(a * q + b, c * q + d)]
    });
    let h = {
        let mut h = Array2::<Complex64>::zeros((qq, qq));
        for i in 0..qq {
            for j in 0..qq {
                let mut acc = Complex64::new(0.0, 0.0);
                for k in 0..qq {
                    acc += r[(k, i)].conj() * r[(k, j)];
                }
                h[(i, j)] = acc;
            }
        }
        h
    };
    let (w, v) = h
        .eigh(UPLO::Lower)
        .map_err(|e| Error::Structural(format!("eigensolve failed: {e}")))?;
    // eigh on a row-major complex array returns the conjugated
    // eigenvector matrix; undo that, and flip to descending order
    let mut left = Array3::<Complex64>::zeros((q, q, qq));
    let mut right = Array3::<Complex64>::zeros((qq, q, q));
    let mut singular_values = Vec::with_capacity(qq);
    for (mu, src) in (0..qq).rev().enumerate() {
        let sigma = w[src].max(0.0).sqrt();
        singular_values.push(sigma);
        let vcol: Vec<Complex64> = (0..qq).map(|i| v[(i, src)].conj()).collect();
        if sigma > 1e-14 {
            for i in 0..qq {
                let mut u_i = Complex64::new(0.0, 0.0);
                for k in 0..qq {
                    u_i += r[(i, k)] * vcol[k];
                }
                u_i /= sigma;
                left[(i / q, i % q, mu)] = u_i * sigma.sqrt();
            }
            for k in 0..qq {
                right[(mu, k / q, k % q)] = vcol[k].conj() * sigma.sqrt();
            }
        }
    }
    let pair = GateMpoPair {
        q,
        left_tensor: left,
        right_tensor: right,
        singular_values,
    };
    let back = pair.recontract();
    let mut err = 0.0_f64;
    for i in 0..qq {
        for j in 0..qq {
            err = err.max((back[(i, j)] - gate.matrix[(i, j)]).norm());
        }
    }
    if err > 1e-10 {
        return Err(Error::Structural(format!(
            "MPO recontraction error {err:.3e} exceeds 1e-10"
        )));
    }
    Ok(pair)
}

/// Default sample count for the circuit span probe.
pub fn default_circuit_samples(spec: RingSpec, depth: usize) -> Result<usize> {
    Ok(3 * effective_circuit_bound(spec, depth)?.1 + 10)
}

/// (bound, effective-target) where the target is the bound clamped by the
/// necklace count and the Hilbert dimension.
fn effective_circuit_bound(spec: RingSpec, depth: usize) -> Result<(BigCount, usize)> {
    let neck = necklace_count(spec.n as u64, spec.q as u64)?;
    let bound = if depth >= 1 && block_decomposition(spec.n as u64, depth as u64).is_ok() {
        let sre = sre_dim_bound(spec.n as u64, depth as u64, spec.q as u64)?;
        if sre < neck {
            sre
        } else {
            neck.clone()
        }
    } else {
        neck.clone()
    };
    let mut eff = bound.clone();
    let cap = BigCount::from(spec.dim());
    if cap < eff {
        eff = cap;
    }
    let eff: usize = eff
        .try_into()
        .map_err(|_| Error::Resource("sample count overflow".into()))?;
    Ok((bound, eff))
}

/// Samples translation-invariant brickwork states and reports the
/// numerical rank of their span. A lower-bound probe: the rank must stay
/// below both the depth-d counting bound and the necklace count.
pub fn ti_circuit_span_rank(
    spec: RingSpec,
    depth: usize,
    samples: usize,
    seed: u64,
) -> Result<SpanEstimate> {
    if depth > 0 && spec.n % 2 != 0 {
        return Err(Error::Domain(
            "brickwork layers need an even ring length".into(),
        ));
    }
    let (bound, eff) = effective_circuit_bound(spec, depth)?;
    let need = 2 * eff;
    if samples < need {
        return Err(Error::Domain(format!(
            "ti_circuit_span_rank needs at least {need} samples for this grid point, got {samples}"
        )));
    }
    let mut states = Vec::with_capacity(samples);
    for idx in 0..samples {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(idx as u64);
        let product = sample_product_state(spec, &mut rng)?;
        let circuit = sample_ti_brickwork(spec, depth, &mut rng)?;
        let state = apply_circuit(&circuit, &product)?;
        let check = is_translation_invariant(&state, 1e-10);
        if !check.within {
            return Err(Error::Structural(format!(
                "sampled circuit output not translation invariant: deviation {:.3e}",
                check.deviation
            )));
        }
        states.push(state.normalized().amplitudes);
    }
    let rank = gram_rank(&states, 1e-8)?;
    let neck = necklace_count(spec.n as u64, spec.q as u64)?;
    if BigCount::from(rank) > bound || BigCount::from(rank) > neck {
        return Err(Error::Structural(format!(
            "span rank {rank} exceeds a counting bound ({bound} / {neck})"
        )));
    }
    Ok(SpanEstimate {
        samples,
        gram_rank: rank,
        tolerance: 1e-8,
        bound,
    })
}

// --- circuit serialization (replayable failing instances) ---

#[derive(serde::Serialize, serde::Deserialize)]
struct GateDoc {
    left_site: usize,
    layer: usize,
    /// Row-major complex entries, little-endian f64 pairs (re, im),
    /// base64.
    matrix: String,
    dim: usize,
}

#[derive(serde::Serialize, serde::Deserialize)]
struct CircuitDoc {
    n: usize,
    q: usize,
    depth: usize,
    gates: Vec<GateDoc>,
}

fn encode_matrix(m: &Array2<Complex64>) -> String {
    let mut bytes = Vec::with_capacity(m.len() * 16);
    for row in 0..m.nrows() {
        for col in 0..m.ncols() {
            bytes.extend_from_slice(&m[(row, col)].re.to_le_bytes());
            bytes.extend_from_slice(&m[(row, col)].im.to_le_bytes());
        }
    }
    base64::engine::general_purpose::STANDARD.encode(bytes)
}

fn decode_matrix(s: &str, dim: usize) -> Result<Array2<Complex64>> {
    let bytes = base64::engine::general_purpose::STANDARD
        .decode(s)
        .map_err(|e| Error::Domain(format!("bad matrix encoding: {e}")))?;
    if bytes.len() != dim * dim * 16 {
        return Err(Error::Domain("matrix payload length mismatch".into()));
    }
    let mut m = Array2::zeros((dim, dim));
    for (k, chunk) in bytes.chunks_exact(16).enumerate() {
        let re = f64::from_le_bytes(chunk[0..8].try_into().unwrap());
        let im = f64::from_le_bytes(chunk[8..16].try_into().unwrap());
        m[(k / dim, k % dim)] = Complex64::new(re, im);
    }
    Ok(m)
}

pub fn circuit_to_json(circuit: &BrickworkCircuit) -> Result<String> {
    let doc = CircuitDoc {
        n: circuit.spec.n,
        q: circuit.spec.q,
        depth: circuit.depth,
        gates: circuit
            .gates
            .iter()
            .map(|g| GateDoc {
                left_site: g.left_site,
                layer: g.layer,
                matrix: encode_matrix(&g.matrix),
                dim: g.matrix.nrows(),
            })
            .collect(),
    };
    serde_json::to_string_pretty(&doc).map_err(|e| Error::Structural(e.to_string()))
}

pub fn circuit_from_json(json: &str) -> Result<BrickworkCircuit> {
    let doc: CircuitDoc =
        serde_json::from_str(json).map_err(|e| Error::Domain(format!("bad circuit document: {e}")))?;
    let spec = RingSpec::new(doc.n, doc.q)?;
    let gates = doc
        .gates
        .iter()
        .map(|g| TwoSiteGate::new(g.left_site, g.layer, decode_matrix(&g.matrix, g.dim)?))
        .collect::<Result<Vec<_>>>()?;
    BrickworkCircuit::new(spec, doc.depth, gates)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use num_traits::ToPrimitive;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn swap_gate(q: usize) -> Array2<Complex64> {
        Array2::from_shape_fn((q * q, q * q), |(row, col)| {
            let (a, b) = (row / q, row % q);
            let (cc, d) = (col / q, col % q);
            if a == d && b == cc {
                c(1.0, 0.0)
            } else {
                c(0.0, 0.0)
            }
        })
    }

    #[test]
    fn empty_circuit_is_identity() {
        let spec = RingSpec::new(4, 2).unwrap();
        let circ = BrickworkCircuit::new(spec, 0, vec![]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let s = sample_product_state(spec, &mut rng).unwrap();
        let out = apply_circuit(&circ, &s).unwrap();
        for i in 0..spec.dim() {
            assert_eq!(out.amplitudes[i], s.amplitudes[i]);
        }
    }

    #[test]
    fn swap_gate_permutes_basis_state() {
        let spec = RingSpec::new(4, 2).unwrap();
        let gate = TwoSiteGate::new(0, 0, swap_gate(2)).unwrap();
        let circ = BrickworkCircuit::new(spec, 1, vec![gate]).unwrap();
        // |0100> -> |1000>
        let s = StateVector::basis(spec, 0b0100);
        let out = apply_circuit(&circ, &s).unwrap();
        assert_eq!(out.amplitudes[0b1000], c(1.0, 0.0));
    }

    #[test]
    fn inverse_restores_input() {
        let spec = RingSpec::new(6, 2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let circ = sample_ti_brickwork(spec, 3, &mut rng).unwrap();
        let s = sample_product_state(spec, &mut rng).unwrap();
        let out = apply_circuit(&circ, &s).unwrap();
        assert_abs_diff_eq!(out.norm(), 1.0, epsilon = 1e-12);
        let back = apply_circuit_inverse(&circ, &out).unwrap();
        for i in 0..spec.dim() {
            assert!((back.amplitudes[i] - s.amplitudes[i]).norm() < 1e-10);
        }
    }

    #[test]
    fn overlapping_gates_rejected() {
        let spec = RingSpec::new(4, 2).unwrap();
        let g0 = TwoSiteGate::new(0, 0, swap_gate(2)).unwrap();
        let g1 = TwoSiteGate::new(1, 0, swap_gate(2)).unwrap();
        let err = BrickworkCircuit::new(spec, 1, vec![g0, g1]).unwrap_err();
        assert!(err.to_string().contains("overlapping"));
    }

    #[test]
    fn ti_deviation_cases() {
        let spec = RingSpec::new(6, 2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        // sampled family output
        let circ = sample_ti_brickwork(spec, 2, &mut rng).unwrap();
        let s = sample_product_state(spec, &mut rng).unwrap();
        let out = apply_circuit(&circ, &s).unwrap();
        assert!(is_translation_invariant(&out, 1e-10).within);
        // product state: deviation exactly 0 up to roundoff
        assert!(is_translation_invariant(&s, 1e-12).within);
        // |100000>: orthogonal to its translate
        let basis = StateVector::basis(spec, 1 << 5);
        let check = is_translation_invariant(&basis, 1e-10);
        assert!(!check.within);
        assert_abs_diff_eq!(check.deviation, 2.0_f64.sqrt(), epsilon = 1e-12);
    }

    #[test]
    fn depth_one_diamond_is_single_gate() {
        let spec = RingSpec::new(6, 2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let circ = sample_ti_brickwork(spec, 1, &mut rng).unwrap();
        let sub = lightcone_subcircuit(&circ, 0).unwrap();
        assert_eq!(sub.gates.len(), 1);
        assert_eq!(sub.gates[0].left_site, 0);
        let shifted = lightcone_subcircuit(&circ, 3).unwrap();
        assert_eq!(shifted.gates[0].left_site, 3);
    }

    #[test]
    fn distant_diamonds_are_disjoint() {
        let spec = RingSpec::new(12, 2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for depth in [1usize, 2] {
            let circ = sample_ti_brickwork(spec, depth, &mut rng).unwrap();
            let b = 2 * depth + 1;
            let s0 = lightcone_subcircuit(&circ, 0).unwrap().support();
            let s1 = lightcone_subcircuit(&circ, b).unwrap().support();
            assert!(s0.iter().all(|s| !s1.contains(s)), "depth {depth}");
            assert!(
                lightcone_subcircuit(&circ, 0).unwrap().gates.len() <= depth * depth
            );
        }
    }

    #[test]
    fn diamond_translation_covariance() {
        let spec = RingSpec::new(10, 2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let circ = sample_ti_brickwork(spec, 2, &mut rng).unwrap();
        let direct = lightcone_subcircuit(&circ, 4).unwrap();
        let via_zero = lightcone_subcircuit(&circ, 0).unwrap().translated(4);
        let mut a: Vec<_> = direct.gates.iter().map(|g| (g.layer, g.left_site)).collect();
        let mut b: Vec<_> = via_zero.gates.iter().map(|g| (g.layer, g.left_site)).collect();
        a.sort();
        b.sort();
        assert_eq!(a, b);
    }

    #[test]
    fn cut_state_roundtrip_and_non_ti_rejection() {
        let spec = RingSpec::new(8, 2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let circ = sample_ti_brickwork(spec, 1, &mut rng).unwrap();
        let s = sample_product_state(spec, &mut rng).unwrap();
        let out = apply_circuit(&circ, &s).unwrap();
        let cut = cut_state(&circ, &out).unwrap();
        // reapply the cutting operators (in reverse cut order) to recover
        let (m, _) = block_decomposition(8, 1).unwrap();
        let mut back = cut.clone();
        for j in (0..=(m as usize)).rev() {
            let sub = lightcone_subcircuit(&circ, (3 * j) % 8).unwrap();
            back = apply_circuit(&sub, &back).unwrap();
        }
        for i in 0..spec.dim() {
            assert!((back.amplitudes[i] - out.amplitudes[i]).norm() < 1e-10);
        }
        // non-TI input rejected with the measured deviation
        let err = cut_state(&circ, &StateVector::basis(spec, 1)).unwrap_err();
        assert!(matches!(err, Error::Precondition(_)));
    }

    #[test]
    fn block_factorization_on_grid() {
        for &(n, depth) in &[(6usize, 1usize), (8, 1), (10, 2), (12, 2), (8, 2)] {
            let spec = RingSpec::new(n, 2).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64((n * 10 + depth) as u64);
            let circ = sample_ti_brickwork(spec, depth, &mut rng).unwrap();
            let s = sample_product_state(spec, &mut rng).unwrap();
            let out = apply_circuit(&circ, &s).unwrap();
            let fact = block_factorization(&circ, &out).unwrap();
            assert!(
                fact.max_overlap_error <= 1e-9,
                "n = {n}, depth = {depth}: error {:.3e}",
                fact.max_overlap_error
            );
            assert_eq!(fact.block.spec.n, 2 * depth + 1);
        }
    }

    #[test]
    fn depth_three_needs_disjoint_wrap_cut() {
        // n = 8, depth 3: remainder 1 < 6, the wrap cut overlaps
        let spec = RingSpec::new(8, 2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(19);
        let circ = sample_ti_brickwork(spec, 3, &mut rng).unwrap();
        let s = sample_product_state(spec, &mut rng).unwrap();
        let out = apply_circuit(&circ, &s).unwrap();
        let err = cut_state(&circ, &out).unwrap_err();
        assert!(matches!(err, Error::Precondition(_)));

        // n = 14, depth 3: remainder 7 >= 6, all cuts disjoint
        let spec = RingSpec::new(14, 2).unwrap();
        let circ = sample_ti_brickwork(spec, 3, &mut rng).unwrap();
        let s = sample_product_state(spec, &mut rng).unwrap();
        let out = apply_circuit(&circ, &s).unwrap();
        let fact = block_factorization(&circ, &out).unwrap();
        assert!(fact.max_overlap_error <= 1e-9, "{}", fact.max_overlap_error);
        assert_eq!(fact.block.spec.n, 7);
    }

    #[test]
    fn divisible_ring_remainder_equals_block() {
        // n = 6, d = 1: unit cell of size 3, remainder is a full block
        let spec = RingSpec::new(6, 2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let circ = sample_ti_brickwork(spec, 1, &mut rng).unwrap();
        let s = sample_product_state(spec, &mut rng).unwrap();
        let out = apply_circuit(&circ, &s).unwrap();
        let fact = block_factorization(&circ, &out).unwrap();
        assert_eq!(fact.remainder.spec.n, 3);
        let ov = fact.block.inner(&fact.remainder);
        assert_abs_diff_eq!(ov.norm(), 1.0, epsilon = 1e-9);
    }

    #[test]
    fn depth_zero_blocks_are_single_sites() {
        let spec = RingSpec::new(5, 2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let circ = BrickworkCircuit::new(spec, 0, vec![]).unwrap();
        let s = sample_product_state(spec, &mut rng).unwrap();
        let fact = block_factorization(&circ, &s).unwrap();
        assert_eq!(fact.block.spec.n, 1);
        assert!(fact.max_overlap_error <= 1e-10);
    }

    #[test]
    fn mpo_ranks() {
        let q = 2;
        let id = TwoSiteGate::new(0, 0, Array2::from_shape_fn((4, 4), |(i, j)| {
            if i == j { c(1.0, 0.0) } else { c(0.0, 0.0) }
        }))
        .unwrap();
        assert_eq!(gate_mpo_decompose(&id).unwrap().schmidt_rank(1e-10), 1);
        let swap = TwoSiteGate::new(0, 0, swap_gate(q)).unwrap();
        let pair = gate_mpo_decompose(&swap).unwrap();
        assert_eq!(pair.schmidt_rank(1e-10), 4);
        assert_eq!(pair.singular_values.len(), 4);
    }

    #[test]
    fn mpo_recontraction_for_random_gates() {
        let mut rng = ChaCha8Rng::seed_from_u64(15);
        for q in [2usize, 3] {
            for _ in 0..50 {
                let u = haar_unitary(q * q, &mut rng);
                let gate = TwoSiteGate::new(0, 0, u).unwrap();
                // the constructor of the pair checks recontraction <= 1e-10
                let pair = gate_mpo_decompose(&gate).unwrap();
                assert_eq!(pair.singular_values.len(), q * q);
            }
        }
    }

    #[test]
    fn span_rank_depth_zero_is_symmetric_subspace() {
        let spec = RingSpec::new(6, 2).unwrap();
        let samples = default_circuit_samples(spec, 0).unwrap();
        let est = ti_circuit_span_rank(spec, 0, samples, 21).unwrap();
        assert_eq!(est.gram_rank, 7);
    }

    #[test]
    fn span_rank_nondecreasing_in_depth() {
        let spec = RingSpec::new(6, 2).unwrap();
        let samples = default_circuit_samples(spec, 2).unwrap();
        let neck = necklace_count(6, 2).unwrap().to_usize().unwrap();
        let mut prev = 0;
        for depth in 0..=2usize {
            let est = ti_circuit_span_rank(spec, depth, samples.max(default_circuit_samples(spec, depth).unwrap()), 33).unwrap();
            assert!(est.gram_rank >= prev, "depth {depth}");
            assert!(est.gram_rank <= neck);
            prev = est.gram_rank;
        }
    }

    #[test]
    fn serialization_roundtrip_is_exact() {
        let spec = RingSpec::new(6, 2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let circ = sample_ti_brickwork(spec, 3, &mut rng).unwrap();
        let json = circuit_to_json(&circ).unwrap();
        let back = circuit_from_json(&json).unwrap();
        assert_eq!(back.depth, circ.depth);
        assert_eq!(back.gates.len(), circ.gates.len());
        for (a, b) in circ.gates.iter().zip(back.gates.iter()) {
            assert_eq!(a.left_site, b.left_site);
            assert_eq!(a.layer, b.layer);
            for i in 0..a.matrix.nrows() {
                for j in 0..a.matrix.ncols() {
                    // bit-exact float roundtrip
                    assert_eq!(a.matrix[(i, j)], b.matrix[(i, j)]);
                }
            }
        }
    }
}
