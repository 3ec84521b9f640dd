//! Shifted-trace correlation functions `Tr(O T^r)/q^n`, the
//! cycle-decomposition bound `q^{d-n}`, and connected correlators on the
//! momentum-sector states.
//!
//! The fast path never builds a q^n matrix: the only strings contributing
//! to `Tr(O T^r)` satisfy `Z_i = Z_{i-r}` off the support, which glues
//! each translation cycle into `max(1, a_c)` independent classes.

use ndarray::Array2;
use ndarray_linalg::{Eigh, UPLO};
use num_complex::Complex64;
use num_integer::Integer;

use crate::error::{Error, Result};
use crate::statevector::RingSpec;

/// Default cap on operator support size.
pub const DEFAULT_LOCALITY_CAP: usize = 3;

/// Operator supported on a sorted set of ring sites.
#[derive(Debug, Clone)]
pub struct LocalOperator {
    pub spec: RingSpec,
    pub support: Vec<usize>,
    pub matrix: Array2<Complex64>,
    /// Spectral norm, recorded at construction.
    pub op_norm: f64,
}

impl LocalOperator {
    /// Builds an operator under the default locality cap.
    pub fn new(spec: RingSpec, support: Vec<usize>, matrix: Array2<Complex64>) -> Result<Self> {
        Self::new_with_cap(spec, support, matrix, DEFAULT_LOCALITY_CAP)
    }

    /// Cap override for documented nonlocal fixtures.
    pub fn new_with_cap(
        spec: RingSpec,
        support: Vec<usize>,
        matrix: Array2<Complex64>,
        cap: usize,
    ) -> Result<Self> {
        if support.is_empty() {
            return Err(Error::Domain("operator support must be nonempty".into()));
        }
        if support.len() > cap {
            return Err(Error::Resource(format!(
                "support size {} exceeds the locality cap {cap}",
                support.len()
            )));
        }
        if support.windows(2).any(|w| w[0] >= w[1]) || *support.last().unwrap() >= spec.n {
            return Err(Error::Domain(
                "support must be strictly sorted sites within the ring".into(),
            ));
        }
        let dim = spec.q.pow(support.len() as u32);
        if matrix.dim() != (dim, dim) {
            return Err(Error::Domain(format!(
                "operator matrix must be {dim} x {dim} for this support"
            )));
        }
        if matrix.iter().any(|a| !a.re.is_finite() || !a.im.is_finite()) {
            return Err(Error::Domain("non-finite operator entry".into()));
        }
        let op_norm = spectral_norm(&matrix)?;
        Ok(LocalOperator {
            spec,
            support,
            matrix,
            op_norm,
        })
    }

    /// Single-site operator.
    pub fn on_site(spec: RingSpec, site: usize, matrix: Array2<Complex64>) -> Result<Self> {
        Self::new(spec, vec![site], matrix)
    }
}

fn spectral_norm(m: &Array2<Complex64>) -> Result<f64> {
    let d = m.nrows();
    let mut h = Array2::<Complex64>::zeros((d, d));
    for i in 0..d {
        for j in 0..d {
            let mut acc = Complex64::new(0.0, 0.0);
            for k in 0..d {
                acc += m[(k, i)].conj() * m[(k, j)];
            }
            h[(i, j)] = acc;
        }
    }
    let (w, _) = h
        .eigh(UPLO::Lower)
        .map_err(|e| Error::Structural(format!("eigensolve failed: {e}")))?;
    Ok(w.iter().cloned().fold(0.0_f64, f64::max).max(0.0).sqrt())
}

/// Class label per site under the off-support gluing `Z_i = Z_{i-r}`.
fn constraint_classes(spec: RingSpec, in_support: &[bool], r: usize) -> Vec<usize> {
    let n = spec.n;
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut Vec<usize>, mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for i in 0..n {
        if !in_support[i] {
            let pred = (i + n - r) % n;
            let (a, b) = (find(&mut parent, i), find(&mut parent, pred));
            if a != b {
                parent[a] = b;
            }
        }
    }
    let mut label = vec![usize::MAX; n];
    let mut next = 0;
    for i in 0..n {
        let root = find(&mut parent, i);
        if label[root] == usize::MAX {
            label[root] = next;
            next += 1;
        }
        label[i] = label[root];
    }
    label
}

/// Exact `Tr(O T^r) / q^n` by summing only over the independent
/// constraint classes that touch the support. r = 0 reduces to the
/// ordinary normalized trace.
pub fn shifted_trace(op: &LocalOperator, r: i64) -> Complex64 {
    let spec = op.spec;
    let (n, q) = (spec.n, spec.q);
    let r = (((r % n as i64) + n as i64) % n as i64) as usize;
    let mut in_support = vec![false; n];
    for &s in &op.support {
        in_support[s] = true;
    }
    let label = constraint_classes(spec, &in_support, r);
    let num_classes = label.iter().copied().max().unwrap() + 1;
    // classes the matrix element reads: row digits at a, column digits at
    // a - r
    let mut relevant: Vec<usize> = Vec::new();
    for &a in &op.support {
        for site in [a, (a + n - r) % n] {
            if !relevant.contains(&label[site]) {
                relevant.push(label[site]);
            }
        }
    }
    relevant.sort_unstable();
    let mut class_pos = vec![usize::MAX; num_classes];
    for (pos, &cls) in relevant.iter().enumerate() {
        class_pos[cls] = pos;
    }
    let free = num_classes - relevant.len();
    let mut acc = Complex64::new(0.0, 0.0);
    let mut assign = vec![0usize; relevant.len()];
    loop {
        let mut row = 0usize;
        let mut col = 0usize;
        for &a in &op.support {
            row = row * q + assign[class_pos[label[a]]];
            col = col * q + assign[class_pos[label[(a + n - r) % n]]];
        }
        acc += op.matrix[(row, col)];
        // odometer
        let mut pos = 0;
        loop {
            if pos == assign.len() {
                let scale = (q as f64).powi(free as i32 - n as i32);
                return acc * scale;
            }
            assign[pos] += 1;
            if assign[pos] < q {
                break;
            }
            assign[pos] = 0;
            pos += 1;
        }
    }
}

/// Dense full-matrix evaluation of `Tr(O T^r) / q^n`, the cross-check
/// oracle for the cycle fast path.
pub fn shifted_trace_dense(op: &LocalOperator, r: i64) -> Result<Complex64> {
    let spec = op.spec;
    spec.require_operator_cap()?;
    let n = spec.n;
    let r = (((r % n as i64) + n as i64) % n as i64) as usize;
    let mut acc = Complex64::new(0.0, 0.0);
    let full = embed(op)?;
    for i in 0..spec.dim() {
        acc += full[(i, spec.translated_index(i, r))];
    }
    Ok(acc / (spec.dim() as f64))
}

/// Dense q^n x q^n embedding of a local operator (identity off support).
pub fn embed(op: &LocalOperator) -> Result<Array2<Complex64>> {
    let spec = op.spec;
    spec.require_operator_cap()?;
    let dim = spec.dim();
    let rest: Vec<usize> = (0..spec.n).filter(|s| !op.support.contains(s)).collect();
    let mut full = Array2::zeros((dim, dim));
    for i in 0..dim {
        for j in 0..dim {
            if rest.iter().any(|&s| spec.digit(i, s) != spec.digit(j, s)) {
                continue;
            }
            let mut row = 0;
            let mut col = 0;
            for &a in &op.support {
                row = row * spec.q + spec.digit(i, a);
                col = col * spec.q + spec.digit(j, a);
            }
            full[(i, j)] = op.matrix[(row, col)];
        }
    }
    Ok(full)
}

/// Cycle-decomposition bound: `(1/q^n)|Tr(O T^r)| <= q^{d-n}` with
/// `d = sum_c max(1, a_c)` over the gcd(n, r) translation cycles, for
/// any O with spectral norm at most 1. Returned in log domain alongside
/// the plain value.
pub fn cycle_bound(spec: RingSpec, support: &[usize], r: i64) -> (f64, f64) {
    let n = spec.n;
    let r = (((r % n as i64) + n as i64) % n as i64) as usize;
    let g = if r == 0 { n } else { n.gcd(&r) };
    let mut d = 0usize;
    for c in 0..g {
        let mut a_c = 0usize;
        let mut site = c;
        loop {
            if support.contains(&site) {
                a_c += 1;
            }
            site = (site + r) % n;
            if site == c || r == 0 {
                break;
            }
        }
        d += a_c.max(1);
    }
    let log_bound = (d as f64 - n as f64) * (spec.q as f64).ln();
    (log_bound.exp(), log_bound)
}

/// The documented nonlocal fixture: supported on sites 1..n-1, it
/// cyclically shifts the qudits within its support backward, so that
/// `(1/q^n) Tr(O T) = 1/q` even though every local operator's shifted
/// trace is exponentially small.
pub fn near_global_shift_operator(spec: RingSpec) -> Result<LocalOperator> {
    if spec.n < 3 {
        return Err(Error::Domain("fixture needs n >= 3".into()));
    }
    let k = spec.n - 1;
    let q = spec.q;
    let dim = q.pow(k as u32);
    if dim > crate::statevector::DENSE_OPERATOR_CAP {
        return Err(Error::Resource("fixture operator exceeds the dense cap".into()));
    }
    let mut m = Array2::zeros((dim, dim));
    for x in 0..dim {
        // digits of x, most significant first
        let mut digits = vec![0usize; k];
        let mut rem = x;
        for p in (0..k).rev() {
            digits[p] = rem % q;
            rem /= q;
        }
        // backward cyclic shift within the support
        let mut y = 0usize;
        for p in 0..k {
            y = y * q + digits[(p + 1) % k];
        }
        m[(y, x)] = Complex64::new(1.0, 0.0);
    }
    LocalOperator::new_with_cap(spec, (1..spec.n).collect(), m, k)
}

/// Tensor product of two operators with disjoint supports, on the merged
/// sorted support.
pub fn tensor_product(a: &LocalOperator, b: &LocalOperator) -> Result<LocalOperator> {
    if a.spec != b.spec {
        return Err(Error::Domain("tensor_product: spec mismatch".into()));
    }
    if a.support.iter().any(|s| b.support.contains(s)) {
        return Err(Error::Domain("tensor_product needs disjoint supports".into()));
    }
    let q = a.spec.q;
    let mut merged: Vec<usize> = a.support.iter().chain(b.support.iter()).copied().collect();
    merged.sort_unstable();
    // for each merged position: (comes_from_a, position within that op)
    let origin: Vec<(bool, usize)> = merged
        .iter()
        .map(|s| {
            if let Some(p) = a.support.iter().position(|x| x == s) {
                (true, p)
            } else {
                (false, b.support.iter().position(|x| x == s).unwrap())
            }
        })
        .collect();
    let dim = q.pow(merged.len() as u32);
    let split = |idx: usize| -> (usize, usize) {
        let mut digits = vec![0usize; merged.len()];
        let mut rem = idx;
        for p in (0..merged.len()).rev() {
            digits[p] = rem % q;
            rem /= q;
        }
        let mut ia = 0usize;
        let mut ib = 0usize;
        // positions within a and b keep their own sorted order
        for pa in 0..a.support.len() {
            let p = origin.iter().position(|&(from_a, pos)| from_a && pos == pa).unwrap();
            ia = ia * q + digits[p];
        }
        for pb in 0..b.support.len() {
            let p = origin.iter().position(|&(from_a, pos)| !from_a && pos == pb).unwrap();
            ib = ib * q + digits[p];
        }
        (ia, ib)
    };
    let mut m = Array2::zeros((dim, dim));
    for row in 0..dim {
        let (ra, rb) = split(row);
        for col in 0..dim {
            let (ca, cb) = split(col);
            m[(row, col)] = a.matrix[(ra, ca)] * b.matrix[(rb, cb)];
        }
    }
    LocalOperator::new_with_cap(a.spec, merged, m, 2 * DEFAULT_LOCALITY_CAP)
}

/// Expectation value of a local operator on the normalized sector state
/// `rho_k = P_k / Tr P_k`, expanded term by term over translations.
#[derive(Debug, Clone)]
pub struct SectorExpectation {
    pub value: Complex64,
    /// Contribution `w^{-kr} Tr(O T^r)/q^n` per r, before normalization.
    pub per_r: Vec<Complex64>,
    /// The normalizing `sum_r w^{-kr} q^{gcd(n,r)-n}`.
    pub denominator: f64,
}

pub fn expectation_in_sector(op: &LocalOperator, k_index: usize) -> Result<SectorExpectation> {
    let spec = op.spec;
    let n = spec.n;
    if k_index >= n {
        return Err(Error::Domain(format!("momentum index {k_index} outside [0, {n})")));
    }
    let mut per_r = Vec::with_capacity(n);
    let mut num = Complex64::new(0.0, 0.0);
    let mut den = Complex64::new(0.0, 0.0);
    for r in 0..n {
        let phase = Complex64::from_polar(
            1.0,
            -2.0 * std::f64::consts::PI * (k_index * r) as f64 / n as f64,
        );
        let term = phase * shifted_trace(op, r as i64);
        per_r.push(term);
        num += term;
        let g = if r == 0 { n } else { n.gcd(&r) };
        den += phase * (spec.q as f64).powi(g as i32 - n as i32);
    }
    if den.re <= 0.0 || den.im.abs() > 1e-12 * den.re.max(1.0) {
        return Err(Error::Structural(format!(
            "sector normalization not positive real: {den}"
        )));
    }
    Ok(SectorExpectation {
        value: num / den.re,
        per_r,
        denominator: den.re,
    })
}

/// Connected correlator `<O_i O_j> - <O_i><O_j>` on `rho_k`.
#[derive(Debug, Clone, Copy)]
pub struct ConnectedCorrelation {
    pub mean_i: Complex64,
    pub mean_j: Complex64,
    pub joint: Complex64,
    pub connected: Complex64,
}

pub fn connected_correlation(
    k_index: usize,
    op_i: &LocalOperator,
    op_j: &LocalOperator,
) -> Result<ConnectedCorrelation> {
    let joint_op = tensor_product(op_i, op_j)?;
    let mean_i = expectation_in_sector(op_i, k_index)?.value;
    let mean_j = expectation_in_sector(op_j, k_index)?.value;
    let joint = expectation_in_sector(&joint_op, k_index)?.value;
    Ok(ConnectedCorrelation {
        mean_i,
        mean_j,
        joint,
        connected: joint - mean_i * mean_j,
    })
}
