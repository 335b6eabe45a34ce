//! Exact and floating q-series computations.
//!
//! Finite and infinite q-Pochhammer symbols, Gaussian binomial coefficients,
//! the one-tail integral identity, the q-binomial theorem, and the two-tail
//! summation bound.  Identity checks at rational `q` run in exact
//! arbitrary-precision rationals; floating point is reserved for the
//! `q = 1 - d/n` asymptotics, where values underflow `f64` and the log-domain
//! field of [`QValue`] is the authoritative output.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use rand::Rng;

use crate::graph::substream_rng;
use crate::{Error, Result};

pub type Rational = BigRational;

/// `a / b` as an exact rational.
pub fn rat(a: i64, b: i64) -> Rational {
    Rational::new(BigInt::from(a), BigInt::from(b))
}

/// Parses `"a/b"` or `"a"` into an exact rational.
pub fn parse_rational(s: &str) -> Result<Rational> {
    let parse_int = |t: &str| {
        t.trim()
            .parse::<BigInt>()
            .map_err(|_| Error::Parse(format!("bad rational component `{t}`")))
    };
    match s.split_once('/') {
        Some((num, den)) => {
            let d = parse_int(den)?;
            if d.is_zero() {
                return Err(Error::Parse("rational with zero denominator".into()));
            }
            Ok(Rational::new(parse_int(num)?, d))
        }
        None => Ok(Rational::from_integer(parse_int(s)?)),
    }
}

/// A real scalar paired with a rigorous truncation-error bound.
///
/// For `q = 1 - d/n` with large `n/d`, `value` underflows to zero in `f64`;
/// `ln_value` is then the usable output and `ln_err` bounds the truncation
/// error of the log.  Finite computations have both error fields zero.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct QValue {
    pub value: f64,
    pub err: f64,
    pub ln_value: f64,
    pub ln_err: f64,
}

/// Finite q-Pochhammer symbol `(q; q)_r = prod_{j=1..r} (1 - q^j)`.
pub fn q_pochhammer(q: f64, r: usize) -> Result<f64> {
    check_q_open(q)?;
    let mut prod = 1.0;
    let mut qj = 1.0;
    for _ in 0..r {
        qj *= q;
        prod *= 1.0 - qj;
    }
    Ok(prod)
}

fn check_q_open(q: f64) -> Result<()> {
    if !(q > 0.0 && q < 1.0) {
        return Err(Error::InvalidParameter(format!("q = {q} outside (0, 1)")));
    }
    Ok(())
}

/// Infinite product `(q; q)_inf = prod_{j >= 1} (1 - q^j)`.
///
/// Truncated at the smallest `J` with tail bound
/// `q^(J+1) / ((1 - q)(1 - q^(J+1))) < 1e-14` relative; the bound comes from
/// `-log prod_{j > J} (1 - q^j) <= sum_{j > J} q^j / (1 - q^(J+1))`.
///
/// ```
/// use lipvol::qseries::q_pochhammer_inf;
///
/// let v = q_pochhammer_inf(0.5).unwrap();
/// assert!((v.value - 0.2887880951).abs() < 1e-9);
/// ```
pub fn q_pochhammer_inf(q: f64) -> Result<QValue> {
    check_q_open(q)?;
    if q >= 1.0 - 1e-12 {
        return Err(Error::InvalidParameter(
            "q_pochhammer_inf: q >= 1 - 1e-12, truncation length explodes".into(),
        ));
    }
    let ln_q = q.ln();
    let mut ln_sum = 0.0f64; // log of the partial product
    let mut comp = 0.0f64; // Kahan compensation
    let mut qj = 1.0f64;
    let mut j: u64 = 0;
    let tail = loop {
        j += 1;
        qj *= q;
        if j % 4096 == 0 {
            // resync the incremental power to limit rounding drift
            qj = (j as f64 * ln_q).exp();
        }
        let term = (-qj).ln_1p();
        let y = term - comp;
        let t = ln_sum + y;
        comp = (t - ln_sum) - y;
        ln_sum = t;
        let qj1 = qj * q;
        let tail = qj1 / ((1.0 - q) * (1.0 - qj1));
        if tail < 1e-14 {
            break tail;
        }
    };
    let value = ln_sum.exp();
    Ok(QValue {
        value,
        err: tail * value,
        ln_value: ln_sum,
        ln_err: tail,
    })
}

/// General infinite product `(z; q)_inf = prod_{j >= 0} (1 - z q^j)` for
/// `0 < q < 1`, `0 <= z < 1`.  Used by the q-binomial row identity.
pub fn pochhammer_z_inf(z: f64, q: f64) -> Result<f64> {
    check_q_open(q)?;
    if !(0.0..1.0).contains(&z) {
        return Err(Error::InvalidParameter(format!("z = {z} outside [0, 1)")));
    }
    let mut ln_sum = 0.0;
    let mut zqj = z;
    loop {
        if zqj < 1e-18 {
            break;
        }
        ln_sum += (-zqj).ln_1p();
        zqj *= q;
    }
    Ok(ln_sum.exp())
}

/// Coefficients of the Gaussian binomial `[n; r]_q` as a polynomial in `q`.
///
/// Built from the inversion-statistic recurrence on binary words with
/// `n - r` letters of one type and `r` of the other:
/// `f(i, j) = f(i-1, j) + q^i f(i, j-1)`.
pub fn gaussian_binomial_poly(n_top: usize, r: usize) -> Result<Vec<BigInt>> {
    if r > n_top {
        return Err(Error::InvalidParameter(format!(
            "gaussian_binomial: r = {r} > n = {n_top}"
        )));
    }
    let i_max = n_top - r;
    // dp[j] = polynomial for (i, j); sweep i outward.
    let mut dp: Vec<Vec<BigInt>> = (0..=r).map(|_| vec![BigInt::one()]).collect();
    for i in 1..=i_max {
        for j in 1..=r {
            // f(i, j) = f(i-1, j) + q^i * f(i, j-1)
            let prev = std::mem::take(&mut dp[j]); // f(i-1, j)
            let shifted = &dp[j - 1]; // f(i, j-1), already updated for this i
            let len = (i * j + 1).max(prev.len());
            let mut next = vec![BigInt::zero(); len];
            for (k, c) in prev.iter().enumerate() {
                next[k] += c;
            }
            for (k, c) in shifted.iter().enumerate() {
                next[k + i] += c;
            }
            dp[j] = next;
        }
    }
    Ok(dp[r].clone())
}

/// Gaussian binomial `[n; r]_q` evaluated exactly at rational `q`.
///
/// The polynomial form is used, so `q = 1` is legal and reduces to the
/// ordinary binomial coefficient.
pub fn gaussian_binomial(n_top: usize, r: usize, q: &Rational) -> Result<Rational> {
    let coeffs = gaussian_binomial_poly(n_top, r)?;
    // Horner evaluation.
    let mut acc = Rational::zero();
    for c in coeffs.iter().rev() {
        acc = acc * q + Rational::from_integer(c.clone());
    }
    Ok(acc)
}

/// Exact binomial coefficient `C(n, r)` as a big integer.
pub fn binomial(n: usize, r: usize) -> BigInt {
    num_integer::binomial(BigInt::from(n), BigInt::from(r.min(n)))
}

/// The one-tail integral
/// `A_{N,r}(q) = int_{[0,1]^N x [0,1]^r} q^(#{(i,u): y_u > t_i}) dy dt`,
/// evaluated in closed form as `C(N+r, r)^{-1} [N+r; r]_q`.
///
/// ```
/// use lipvol::qseries::{one_tail_a, one_tail_a_bruteforce, rat};
///
/// let q = rat(1, 2);
/// assert_eq!(one_tail_a(1, 1, &q).unwrap(), rat(3, 4));
/// assert_eq!(one_tail_a(4, 2, &q).unwrap(), one_tail_a_bruteforce(4, 2, &q).unwrap());
/// ```
pub fn one_tail_a(n: usize, r: usize, q: &Rational) -> Result<Rational> {
    let gb = gaussian_binomial(n + r, r, q)?;
    Ok(gb / Rational::from_integer(binomial(n + r, r)))
}

/// Independent route to `A_{N,r}(q)`: enumerate the `C(N+r, r)` binary words
/// and sum `q^inversions` directly.  Guarded at `N + r <= 22`.
pub fn one_tail_a_bruteforce(n: usize, r: usize, q: &Rational) -> Result<Rational> {
    let total = n + r;
    if total > 22 {
        return Err(Error::InvalidParameter(format!(
            "one_tail_a_bruteforce: N + r = {total} > 22"
        )));
    }
    let mut powers = Vec::with_capacity(n * r + 1);
    powers.push(Rational::one());
    for k in 1..=n * r {
        let p = powers[k - 1].clone() * q;
        powers.push(p);
    }
    let mut sum = Rational::zero();
    let mut count: u64 = 0;
    for mask in 0u32..(1u32 << total) {
        if mask.count_ones() as usize != r {
            continue;
        }
        count += 1;
        // positions ascending = sorted variable values; a set bit is a y.
        // inversions = sum over y positions of t positions below them.
        let mut inv = 0usize;
        let mut t_below = 0usize;
        for pos in 0..total {
            if mask & (1 << pos) != 0 {
                inv += t_below;
            } else {
                t_below += 1;
            }
        }
        sum += &powers[inv];
    }
    debug_assert_eq!(BigInt::from(count), binomial(total, r));
    Ok(sum / Rational::from_integer(BigInt::from(count)))
}

/// Report of the opposite-monotonicities correlation check.
#[derive(Debug, Clone, serde::Serialize)]
pub struct MonotoneReport {
    pub lhs_estimate: f64,
    pub rhs: f64,
    pub stderr: f64,
    pub samples: u64,
    pub seed: u64,
    pub pass: bool,
}

/// Monte Carlo check of the correlation inequality
/// `int B_r(t) C_s(t) dt <= A_{N,r} A_{N,s}`.
///
/// The left side is estimated by sampling `t` uniformly; for fixed `t` both
/// inner integrals factorize over their tail variables, so each sample costs
/// one sort plus two exact one-dimensional integrals:
/// `B_r(t) = g(t)^r` with `g(t) = sum_k q^k (t_(k+1) - t_(k))`, and
/// `C_s(t) = h(t)^s` with `h(t) = sum_k q^(N-k) (t_(k+1) - t_(k))`.
/// The right side is exact.  Pass means `lhs <= rhs + 4 stderr`.
pub fn monotone_correlation_check(
    n: usize,
    r: usize,
    s: usize,
    q: &Rational,
    samples: u64,
    seed: u64,
) -> Result<MonotoneReport> {
    if samples < 10_000 {
        return Err(Error::InvalidParameter(
            "monotone_correlation_check: need samples >= 10^4".into(),
        ));
    }
    let qf = q
        .to_f64()
        .ok_or_else(|| Error::InvalidParameter("q not representable as f64".into()))?;
    if !(0.0 < qf && qf < 1.0) {
        return Err(Error::InvalidParameter(format!("q = {qf} outside (0, 1)")));
    }
    let rhs = (one_tail_a(n, r, q)? * one_tail_a(n, s, q)?)
        .to_f64()
        .expect("rhs fits in f64");
    let mut rng = substream_rng(seed, 0);
    let mut mean = 0.0f64;
    let mut m2 = 0.0f64;
    let mut t = vec![0.0f64; n];
    for i in 0..samples {
        for ti in t.iter_mut() {
            *ti = rng.gen::<f64>();
        }
        t.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap());
        let mut g = 0.0;
        let mut h = 0.0;
        let mut prev = 0.0;
        for (k, &tk) in t.iter().enumerate() {
            let gap = tk - prev;
            g += qf.powi(k as i32) * gap;
            h += qf.powi((n - k) as i32) * gap;
            prev = tk;
        }
        let gap = 1.0 - prev;
        g += qf.powi(n as i32) * gap;
        h += gap; // q^0
        let value = g.powi(r as i32) * h.powi(s as i32);
        let delta = value - mean;
        mean += delta / (i + 1) as f64;
        m2 += delta * (value - mean);
    }
    let stderr = (m2 / (samples as f64 - 1.0)).sqrt() / (samples as f64).sqrt();
    Ok(MonotoneReport {
        lhs_estimate: mean,
        rhs,
        stderr,
        samples,
        seed,
        pass: mean <= rhs + 4.0 * stderr,
    })
}

/// The two-tail double sum `sum_{0 <= r,s <= R} q^(rs) / ((q;q)_r (q;q)_s)`.
///
/// Rows are accumulated with Kahan compensation; within a row with `r >= 1`
/// the terms eventually decay geometrically and the row is cut once a term
/// drops below 1e-18 of the accumulator.
pub fn two_tail_sum(q: f64, r_max: usize) -> Result<f64> {
    check_q_open(q)?;
    if r_max > 1_000_000 {
        return Err(Error::InvalidParameter("two_tail_sum: R > 10^6".into()));
    }
    // (q;q)_r for r = 0..R
    let mut poch = Vec::with_capacity(r_max + 1);
    poch.push(1.0f64);
    let mut qj = 1.0;
    for r in 1..=r_max {
        qj *= q;
        let next = poch[r - 1] * (1.0 - qj);
        if next == 0.0 || !next.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "two_tail_sum: (q;q)_{r} underflowed at q = {q}"
            )));
        }
        poch.push(next);
    }
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    let add = |x: f64, sum: &mut f64, comp: &mut f64| {
        let y = x - *comp;
        let t = *sum + y;
        *comp = (t - *sum) - y;
        *sum = t;
    };
    for r in 0..=r_max {
        let qr = q.powi(r as i32);
        let inv_r = 1.0 / poch[r];
        let mut qrs = 1.0; // q^(r*s)
        for (s, &poch_s) in poch.iter().enumerate() {
            let term = inv_r * qrs / poch_s;
            if !term.is_finite() {
                return Err(Error::InvalidParameter("two_tail_sum: overflow".into()));
            }
            if r >= 1 && s >= 1 && term < 1e-18 * sum {
                break;
            }
            add(term, &mut sum, &mut comp);
            qrs *= qr;
        }
    }
    Ok(sum)
}

/// The boundary-layer integral `-int_0^inf log(1 - e^{-t}) dt = pi^2 / 6`,
/// evaluated numerically to absolute error below 1e-10.
///
/// The integrand behaves like `-log t` near zero, so `[0, eps]` is handled by
/// the expansion `int_0^eps (-log t + t/2 - t^2/24) dt`; the far tail beyond
/// `T` is `sum_k e^{-kT} / k^2`; the middle is adaptive quadrature.
pub fn zeta_integral() -> Result<f64> {
    let eps: f64 = 1e-4;
    let cut = 40.0;
    let head = eps * (1.0 - eps.ln()) + eps * eps / 4.0 - eps * eps * eps / 72.0;
    let f = |t: f64| -(-(-t).exp()).ln_1p();
    let middle = crate::quad::adaptive_simpson(&f, eps, cut, 1e-12)?;
    let mut tail = 0.0;
    let mut k = 1.0f64;
    loop {
        let term = (-k * cut).exp() / (k * k);
        if term < 1e-18 {
            break;
        }
        tail += term;
        k += 1.0;
    }
    Ok(head + middle + tail)
}
