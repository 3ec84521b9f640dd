//! Exact arbitrary-precision dimension formulas and the bound chain that
//! turns them into depth and time lower bounds.
//!
//! Everything on the integer side is exact (`BigUint`, no rounding); the
//! large-`n` side of each bound lives in log domain so that sweeps up to
//! `n ~ 10^6` stay finite.

use num_bigint::BigUint;
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// Exact nonnegative count. All integer paths through this module stay exact.
pub type BigCount = BigUint;

/// Natural log of a positive bound, with a flag recording whether an exact
/// `BigCount` twin was computed alongside it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogBound {
    pub log_value: f64,
    pub exact_flag: bool,
}

/// Serializes a `BigCount` as a decimal string (counts routinely exceed
/// u64 and JSON numbers).
pub fn serialize_bigcount<S: serde::Serializer>(x: &BigCount, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&x.to_string())
}

/// Euler's totient via trial-division factorization.
pub fn totient(k: u64) -> Result<BigCount> {
    if k == 0 {
        return Err(Error::Domain("totient undefined at 0".into()));
    }
    let mut n = k;
    let mut phi = k;
    let mut p = 2u64;
    while p * p <= n {
        if n % p == 0 {
            while n % p == 0 {
                n /= p;
            }
            phi -= phi / p;
        }
        p += 1;
    }
    if n > 1 {
        phi -= phi / n;
    }
    Ok(BigUint::from(phi))
}

/// Number of q-ary necklaces of length n: the count of cyclic-rotation
/// orbits of length-n strings, `(1/n) sum_{k|n} phi(k) q^{n/k}`.
///
/// The division by n is exact; this is asserted on every call.
pub fn necklace_count(n: u64, q: u64) -> Result<BigCount> {
    if n == 0 {
        return Err(Error::Domain("necklace_count requires n >= 1".into()));
    }
    if q < 2 {
        return Err(Error::Domain("necklace_count requires q >= 2".into()));
    }
    let q = BigUint::from(q);
    let mut sum = BigUint::zero();
    for k in 1..=n {
        if n % k == 0 {
            sum += totient(k)? * q.pow((n / k) as u32);
        }
    }
    let (quot, rem) = sum.div_rem(&BigUint::from(n));
    assert!(rem.is_zero(), "necklace sum must divide by n exactly");
    Ok(quot)
}

/// Exact binomial coefficient C(a, b).
pub fn binomial(a: u64, b: u64) -> BigCount {
    if b > a {
        return BigUint::zero();
    }
    let b = b.min(a - b);
    let mut num = BigUint::one();
    let mut den = BigUint::one();
    for i in 0..b {
        num *= BigUint::from(a - i);
        den *= BigUint::from(i + 1);
    }
    let (quot, rem) = num.div_rem(&den);
    debug_assert!(rem.is_zero());
    quot
}

/// Dimension of the space of degree-n homogeneous polynomials in v
/// variables: C(v - 1 + n, n).
pub fn hpoly_dim(n: u64, v: u64) -> Result<BigCount> {
    if v == 0 {
        return Err(Error::Domain("hpoly_dim requires v >= 1".into()));
    }
    Ok(binomial(v - 1 + n, n))
}

/// Upper bound on the span dimension of translation-invariant MPS with
/// bond dimension `d_bond`: hpoly_dim(n, q d^2).
pub fn mps_dim_bound(n: u64, q: u64, d_bond: u64) -> Result<BigCount> {
    if n == 0 {
        return Err(Error::Domain("mps_dim_bound requires n >= 1".into()));
    }
    if q < 2 || d_bond == 0 {
        return Err(Error::Domain(
            "mps_dim_bound requires q >= 2 and d_bond >= 1".into(),
        ));
    }
    hpoly_dim(n, q * d_bond * d_bond)
}

/// Splits `n = m (2d+1) + r` with the remainder convention `1 <= r <= 2d+1`:
/// when (2d+1) divides n, the remainder is forced to a full block
/// (r = 2d+1, m = n/(2d+1) - 1).
pub fn block_decomposition(n: u64, d: u64) -> Result<(u64, u64)> {
    let b = 2 * d + 1;
    if n < b + 1 {
        return Err(Error::Domain(format!(
            "n = {n} too small for depth {d}: need n >= {} for one full block",
            b + 1
        )));
    }
    let (mut m, mut r) = (n / b, n % b);
    if r == 0 {
        m -= 1;
        r = b;
    }
    Ok((m, r))
}

/// Upper bound on the span dimension of translation-invariant depth-d
/// states: `2d(2d+1) q^4 hpoly_dim(m, 2d(2d+1) q^4)` with
/// `n = m(2d+1) + r`, `1 <= r <= 2d+1`.
pub fn sre_dim_bound(n: u64, d: u64, q: u64) -> Result<BigCount> {
    if d == 0 {
        return Err(Error::Domain("sre_dim_bound requires d >= 1".into()));
    }
    if q < 2 {
        return Err(Error::Domain("sre_dim_bound requires q >= 2".into()));
    }
    let (m, _r) = block_decomposition(n, d)?;
    let v = 2 * d * (2 * d + 1) * q.pow(4);
    Ok(BigUint::from(v) * hpoly_dim(m, v)?)
}

/// Exact rational upper bound on the zero-momentum overlap of the depth-d
/// projector: numerator `sre_dim_bound(n,d,q)`, denominator
/// `necklace_count(n,q)`. May exceed 1; callers clamp for reporting.
pub fn overlap_bound_exact(n: u64, d: u64, q: u64) -> Result<(BigCount, BigCount)> {
    Ok((sre_dim_bound(n, d, q)?, necklace_count(n, q)?))
}

/// Natural log of a `BigUint`, accurate to f64 precision.
pub fn ln_big(x: &BigUint) -> f64 {
    if x.is_zero() {
        return f64::NEG_INFINITY;
    }
    let bits = x.bits();
    if bits <= 53 {
        return x.to_f64().unwrap().ln();
    }
    // keep the top 64 bits and track the shift
    let shift = bits - 53;
    let top = (x >> shift).to_f64().unwrap();
    top.ln() + (shift as f64) * std::f64::consts::LN_2
}

/// Log-domain overlap bound
/// `2d(2d+1) n q^{3-n} e^a (1 + n/a^gamma)^a` with `a = 2d(2d+1) q^4 - 1`,
/// valid for `1 < gamma < 2`. Finite for n up to 10^6 and beyond.
pub fn overlap_bound_log(n: u64, d: u64, q: u64, gamma: f64) -> Result<LogBound> {
    if !(1.0..2.0).contains(&gamma) || gamma <= 1.0 {
        return Err(Error::Domain(format!(
            "gamma = {gamma} outside the open interval (1, 2)"
        )));
    }
    // validates the same preconditions as the exact bound
    block_decomposition(n, d)?;
    if d == 0 || q < 2 {
        return Err(Error::Domain("overlap_bound_log requires d >= 1, q >= 2".into()));
    }
    let a = (2 * d * (2 * d + 1) * q.pow(4) - 1) as f64;
    let nf = n as f64;
    let lq = (q as f64).ln();
    let log_value = ((2 * d * (2 * d + 1)) as f64).ln()
        + nf.ln()
        + (3.0 - nf) * lq
        + a
        + a * (nf / a.powf(gamma)).ln_1p();
    Ok(LogBound {
        log_value,
        exact_flag: n <= 512,
    })
}

/// Largest gamma in (1, 2) with `(2d+1) a >= a^gamma` for every d up to
/// `d_max`, where `a = 2d(2d+1) q^4 - 1`. Found by bisection to 1e-9.
pub fn gamma_exponent(q: u64, d_max: u64) -> Result<f64> {
    if q < 2 || d_max == 0 {
        return Err(Error::Domain("gamma_exponent requires q >= 2, d_max >= 1".into()));
    }
    let holds = |gamma: f64| -> bool {
        (1..=d_max).all(|d| {
            let a = (2 * d * (2 * d + 1) * q.pow(4) - 1) as f64;
            ((2 * d + 1) as f64).ln() + a.ln() >= gamma * a.ln()
        })
    };
    let (mut lo, mut hi) = (1.0_f64, 2.0_f64);
    // gamma slightly above 1 always works: (2d+1) a > a
    while hi - lo > 1e-9 {
        let mid = 0.5 * (lo + hi);
        if holds(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo)
}

/// Default ceiling for the min-depth scan.
pub fn min_depth_ceiling(n: u64) -> u64 {
    (10.0 * (n as f64).sqrt()).ceil() as u64
}

/// Smallest depth d at which the counting bound no longer forces
/// `Tr P_d rho_TI < eta/2`, i.e. the first d where
/// `overlap_bound_log(n,d,q) >= log(eta/2)`.
pub fn min_depth_for_overlap(n: u64, q: u64, eta: f64) -> Result<u64> {
    if !(0.0..=1.0).contains(&eta) || eta <= 0.0 {
        return Err(Error::Domain(format!("eta = {eta} outside (0, 1]")));
    }
    let target = (eta / 2.0).ln();
    let ceiling = min_depth_ceiling(n);
    let mut d = 1;
    while d <= ceiling {
        if block_decomposition(n, d).is_err() {
            // past this point the block convention has no room; the bound
            // is vacuous for such shallow rings
            break;
        }
        let gamma = gamma_exponent(q, d)?;
        if overlap_bound_log(n, d, q, gamma)?.log_value >= target {
            return Ok(d);
        }
        d += 1;
    }
    Err(Error::Domain(format!(
        "min_depth_for_overlap: ceiling {ceiling} reached with no feasible depth (n = {n})"
    )))
}

/// Parametric depth model `d(tau, n, eps, r) = ceil(c tau (log(n tau / eps))^p)`.
///
/// The constants are configuration, not derived quantities; every report
/// that uses the model carries them.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct DepthModel {
    pub c: f64,
    pub p: f64,
    pub epsilon: f64,
    pub r: u64,
}

impl DepthModel {
    pub fn new(c: f64, p: f64, epsilon: f64, r: u64) -> Result<Self> {
        if c <= 0.0 || p < 1.0 || !(0.0..1.0).contains(&epsilon) || epsilon <= 0.0 || r == 0 {
            return Err(Error::Domain(format!(
                "invalid depth model: c = {c}, p = {p}, epsilon = {epsilon}, r = {r}"
            )));
        }
        Ok(DepthModel { c, p, epsilon, r })
    }

    /// Defaults c = 1, p = 1, r = 2 with eps = sqrt(eta).
    pub fn default_for_eta(eta: f64) -> Result<Self> {
        DepthModel::new(1.0, 1.0, eta.sqrt().min(0.999_999), 2)
    }

    /// Circuit depth sufficient to approximate time-tau evolution, per the
    /// model. Monotone nondecreasing in tau and n.
    pub fn depth(&self, tau: f64, n: u64) -> f64 {
        if tau <= 0.0 {
            return 0.0;
        }
        let arg = (n as f64) * tau / self.epsilon;
        if arg <= 1.0 {
            return 0.0;
        }
        (self.c * tau * arg.ln().powf(self.p)).ceil()
    }
}

/// Smallest tau whose model depth reaches `min_depth_for_overlap(n, q, eta)`,
/// by bisection over the monotone depth model. The result is meaningful
/// only relative to the model constants.
pub fn min_time_estimate(n: u64, q: u64, eta: f64, model: &DepthModel) -> Result<f64> {
    let target = min_depth_for_overlap(n, q, eta)? as f64;
    let mut hi = 1.0_f64;
    while model.depth(hi, n) < target {
        hi *= 2.0;
        if hi > 1e12 {
            return Err(Error::Domain("min_time_estimate: model never reaches target depth".into()));
        }
    }
    let mut lo = 0.0_f64;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if model.depth(mid, n) >= target {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}
