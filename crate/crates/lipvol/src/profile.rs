//! The logistic boundary-layer profile.
//!
//! The density
//!
//! ```text
//! rho_d(x) = (1 - e^{-d}) / ((1 + e^{-d x})(1 + e^{d (x - 1)}))
//! ```
//!
//! is close to 1 on `[0, 1]` with logistic boundary layers of width `1/d` at
//! both ends, and integrates to exactly 1 over the real line.  Its entropy is
//! `pi^2/(3d) + O(d^-2)`, the probability that two independent draws violate a
//! 1-Lipschitz edge constraint is `pi^2/(3d^2) + O(d^-3)`, and the combined
//! gain `H - (d/2) Q` is `pi^2/(6d) + O(d^-2)` — the constant of the sharp
//! random-graph asymptotic.
//!
//! All exponentials are routed through `log1p`/`expm1`-style stable forms, so
//! the functions are usable for `|d x|` far beyond the naive overflow range.

use rand::Rng;

use crate::graph::substream_rng;
use crate::quad::adaptive_simpson;
use crate::{Error, Result};

/// `log(1 + e^z)` without overflow.
fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

/// The pair `(d, T)` defining the truncated profile on `I = [-T/d, 1 + T/d]`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ProfileParams {
    pub d: f64,
    pub t: f64,
}

/// Quadrature summary of the profile: entropy `H`, violating-pair mass `Q`,
/// the gain `H - (d/2) Q`, and the normalization defect of the truncated
/// density.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ProfileSummary {
    pub h: f64,
    pub q: f64,
    pub gain: f64,
    pub norm_defect: f64,
}

impl ProfileParams {
    /// Parameters with an explicit window padding `T`.
    pub fn new(d: f64, t: f64) -> Result<ProfileParams> {
        if !(d >= 2.0) {
            return Err(Error::InvalidParameter(format!(
                "profile: d = {d} must be >= 2"
            )));
        }
        if !(t > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "profile: T = {t} must be positive"
            )));
        }
        Ok(ProfileParams { d, t })
    }

    /// The default window rule `T = log d`.
    pub fn with_default_window(d: f64) -> Result<ProfileParams> {
        ProfileParams::new(d, d.ln())
    }

    /// Diagnostic `T^2 / d`; the asymptotics need this to be small.
    pub fn window_diagnostic(&self) -> f64 {
        self.t * self.t / self.d
    }

    /// Window endpoints `(-T/d, 1 + T/d)`.
    pub fn window(&self) -> (f64, f64) {
        (-self.t / self.d, 1.0 + self.t / self.d)
    }

    /// Log of the untruncated density; finite for all `x`.
    pub fn ln_rho(&self, x: f64) -> f64 {
        let d = self.d;
        (-(-d).exp()).ln_1p() - softplus(-d * x) - softplus(d * (x - 1.0))
    }

    /// The untruncated density `rho_d(x)`.
    pub fn rho(&self, x: f64) -> f64 {
        self.ln_rho(x).exp()
    }

    /// Probability mass of the window under the untruncated density.
    pub fn window_mass(&self) -> f64 {
        let (a, b) = self.window();
        self.cdf(b) - self.cdf(a)
    }

    /// The truncated, renormalized density: `rho / mass` on the window,
    /// zero outside.
    pub fn rho_truncated(&self, x: f64) -> f64 {
        let (a, b) = self.window();
        if x < a || x > b {
            return 0.0;
        }
        self.rho(x) / self.window_mass()
    }

    /// Closed-form distribution function
    /// `F_d(x) = (1/d) log((1 + e^{dx}) / (1 + e^{d(x-1)}))`.
    pub fn cdf(&self, x: f64) -> f64 {
        let d = self.d;
        (softplus(d * x) - softplus(d * (x - 1.0))) / d
    }

    /// Inverse of [`cdf`](Self::cdf) on `u` strictly inside `(0, 1)`.
    ///
    /// The CDF inverts in closed form,
    /// `x = (1/d) (log(e^{du} - 1) - log(1 - e^{d(u-1)}))`,
    /// after which one Newton step polishes to 1e-12.
    pub fn inverse_cdf(&self, u: f64) -> Result<f64> {
        if !(u > 0.0 && u < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "inverse_cdf: u = {u} outside (0, 1)"
            )));
        }
        let d = self.d;
        // log(e^{du} - 1), stable for large du
        let du = d * u;
        let log_num = if du > 30.0 {
            du + (-(-du).exp()).ln_1p()
        } else {
            du.exp_m1().ln()
        };
        let log_den = (-(d * (u - 1.0)).exp()).ln_1p();
        let mut x = (log_num - log_den) / d;
        for _ in 0..2 {
            let fx = self.cdf(x) - u;
            let dfx = self.rho(x);
            if dfx > 0.0 {
                let step = fx / dfx;
                if step.is_finite() {
                    x -= step;
                }
            }
        }
        Ok(x)
    }

    /// `count` i.i.d. draws from the truncated, renormalized density, all in
    /// the window.  Reproducible per `(seed, stream)`.
    pub fn sample_stream(&self, count: usize, seed: u64, stream: u64) -> Result<Vec<f64>> {
        if count == 0 {
            return Err(Error::InvalidParameter("sample: count must be >= 1".into()));
        }
        let mut rng = substream_rng(seed, stream);
        let mut out = Vec::with_capacity(count);
        self.sample_into(&mut rng, count, &mut out)?;
        Ok(out)
    }

    /// Draws from the truncated density using an existing RNG.
    pub fn sample_into(
        &self,
        rng: &mut crate::graph::LipvolRng,
        count: usize,
        out: &mut Vec<f64>,
    ) -> Result<()> {
        let (a, b) = self.window();
        let (fa, fb) = (self.cdf(a), self.cdf(b));
        for _ in 0..count {
            let u = fa + rng.gen::<f64>() * (fb - fa);
            let x = self.inverse_cdf(u)?.clamp(a, b);
            out.push(x);
        }
        Ok(())
    }

    pub fn sample(&self, count: usize, seed: u64) -> Result<Vec<f64>> {
        self.sample_stream(count, seed, 0)
    }

    /// Differential entropy `H(rho_d) = -int rho log rho` of the untruncated
    /// profile, by adaptive quadrature.
    pub fn entropy_h(&self) -> Result<f64> {
        let d = self.d;
        let (lo, hi) = (-60.0 / d, 1.0 + 60.0 / d);
        adaptive_simpson(
            &|x| {
                let lr = self.ln_rho(x);
                -lr.exp() * lr
            },
            lo,
            hi,
            1e-12,
        )
    }

    /// Entropy of the truncated, renormalized profile:
    /// `H_I = (1/Z) (-int_I rho log rho) + log Z`.
    pub fn entropy_h_truncated(&self) -> Result<f64> {
        let (a, b) = self.window();
        let z = self.window_mass();
        let raw = adaptive_simpson(
            &|x| {
                let lr = self.ln_rho(x);
                -lr.exp() * lr
            },
            a,
            b,
            1e-12,
        )?;
        Ok(raw / z + z.ln())
    }

    /// Violating-pair probability `Q = P(|X - Y| > 1)` for independent draws
    /// from the untruncated profile.
    ///
    /// By symmetry `Q = 2 P(X - Y > 1) = 2 int rho(x) F(x - 1) dx`; the inner
    /// integral is the closed-form CDF, so only one quadrature dimension
    /// remains.
    pub fn bad_pair_q(&self) -> Result<f64> {
        let d = self.d;
        let (lo, hi) = (-60.0 / d, 1.0 + 60.0 / d);
        let v = adaptive_simpson(&|x| self.rho(x) * self.cdf(x - 1.0), lo, hi, 1e-13)?;
        Ok(2.0 * v)
    }

    /// Violating-pair probability under the truncated, renormalized profile.
    pub fn bad_pair_q_truncated(&self) -> Result<f64> {
        let (a, b) = self.window();
        let z = self.window_mass();
        let fa = self.cdf(a);
        let v = adaptive_simpson(
            &|x| {
                let tail = ((self.cdf(x - 1.0) - fa).max(0.0)) / z;
                (self.rho(x) / z) * tail
            },
            a,
            b,
            1e-13,
        )?;
        Ok(2.0 * v)
    }

    /// Full summary: entropy, violating-pair mass, the gain `H - (d/2) Q`,
    /// and the truncated density's normalization defect.
    ///
    /// ```
    /// use lipvol::profile::ProfileParams;
    ///
    /// let p = ProfileParams::with_default_window(100.0).unwrap();
    /// let s = p.summary().unwrap();
    /// let pi2_3 = std::f64::consts::PI.powi(2) / 3.0;
    /// assert!((100.0 * s.h - pi2_3).abs() < 0.05);
    /// assert!(s.norm_defect.abs() < 1e-8);
    /// ```
    pub fn summary(&self) -> Result<ProfileSummary> {
        let h = self.entropy_h()?;
        let q = self.bad_pair_q()?;
        let (a, b) = self.window();
        let norm = adaptive_simpson(&|x| self.rho_truncated(x), a, b, 1e-12)?;
        Ok(ProfileSummary {
            h,
            q,
            gain: h - 0.5 * self.d * q,
            norm_defect: (norm - 1.0).abs(),
        })
    }
}

/// Monte Carlo statistics of the neighbor extreme-value gap.
///
/// With `d` independent draws from the truncated profile, `M` the maximum,
/// `m` the minimum, and `R = m + 1 - M`, the available interval for a vertex
/// adjacent to all `d` samples has length `1 + R`.
#[derive(Debug, Clone, Copy, serde::Serialize, serde::Deserialize)]
pub struct NeighborExtremesReport {
    pub mean_r: f64,
    pub stderr_r: f64,
    pub mean_r2: f64,
    pub stderr_r2: f64,
    pub mean_log1p_r: f64,
    pub stderr_log1p_r: f64,
    /// Empirical `P(d (M - 1) <= 0)`; the limit law of `d (M - 1)` is
    /// standard logistic, with median 0.
    pub prob_max_shift_nonpos: f64,
    pub replicas: u64,
    pub seed: u64,
}

struct OnlineMean {
    n: u64,
    mean: f64,
    m2: f64,
}

impl OnlineMean {
    fn new() -> Self {
        OnlineMean {
            n: 0,
            mean: 0.0,
            m2: 0.0,
        }
    }
    fn push(&mut self, x: f64) {
        self.n += 1;
        let delta = x - self.mean;
        self.mean += delta / self.n as f64;
        self.m2 += delta * (x - self.mean);
    }
    fn stderr(&self) -> f64 {
        if self.n < 2 {
            return 0.0;
        }
        (self.m2 / (self.n as f64 - 1.0)).sqrt() / (self.n as f64).sqrt()
    }
}

/// Estimates `E[R]`, `E[R^2]`, and `E[log(1 + R)]` for the extreme-value gap
/// of `d_neighbors` draws per replica.
pub fn neighbor_extremes(
    p: &ProfileParams,
    d_neighbors: usize,
    replicas: u64,
    seed: u64,
) -> Result<NeighborExtremesReport> {
    if d_neighbors == 0 || replicas == 0 {
        return Err(Error::InvalidParameter(
            "neighbor_extremes: d_neighbors and replicas must be positive".into(),
        ));
    }
    let mut rng = substream_rng(seed, 0);
    let mut stat_r = OnlineMean::new();
    let mut stat_r2 = OnlineMean::new();
    let mut stat_log = OnlineMean::new();
    let mut nonpos: u64 = 0;
    let mut buf = Vec::with_capacity(d_neighbors);
    for _ in 0..replicas {
        buf.clear();
        p.sample_into(&mut rng, d_neighbors, &mut buf)?;
        let mut max = f64::NEG_INFINITY;
        let mut min = f64::INFINITY;
        for &x in &buf {
            max = max.max(x);
            min = min.min(x);
        }
        let r = min + 1.0 - max;
        stat_r.push(r);
        stat_r2.push(r * r);
        stat_log.push(r.ln_1p());
        if p.d * (max - 1.0) <= 0.0 {
            nonpos += 1;
        }
    }
    Ok(NeighborExtremesReport {
        mean_r: stat_r.mean,
        stderr_r: stat_r.stderr(),
        mean_r2: stat_r2.mean,
        stderr_r2: stat_r2.stderr(),
        mean_log1p_r: stat_log.mean,
        stderr_log1p_r: stat_log.stderr(),
        prob_max_shift_nonpos: nonpos as f64 / replicas as f64,
        replicas,
        seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn rho_midpoint_large_d() {
        let p = ProfileParams::new(100.0, 3.0).unwrap();
        let expected = (1.0 - (-100.0f64).exp()) / (1.0 + (-50.0f64).exp()).powi(2);
        assert!((p.rho(0.5) - expected).abs() < 1e-14);
        assert!((p.rho(0.5) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn rho_symmetry() {
        let p = ProfileParams::new(37.0, 4.0).unwrap();
        for &x in &[-0.3, -0.01, 0.0, 0.2, 0.5, 0.9, 1.3] {
            assert!((p.rho(x) - p.rho(1.0 - x)).abs() < 1e-12, "x = {x}");
            assert!(
                (p.rho_truncated(x) - p.rho_truncated(1.0 - x)).abs() < 1e-12,
                "x = {x}"
            );
        }
    }

    #[test]
    fn rho_integrates_to_one() {
        let p = ProfileParams::new(20.0, 3.0).unwrap();
        let v = adaptive_simpson(&|x| p.rho(x), -5.0, 6.0, 1e-12).unwrap();
        assert!((v - 1.0).abs() < 1e-10, "integral = {v}");
    }

    #[test]
    fn rho_stable_for_extreme_arguments() {
        let p = ProfileParams::new(100.0, 3.0).unwrap();
        for &x in &[-7.0, -3.0, 4.0, 8.0] {
            let v = p.rho(x);
            assert!(v.is_finite() && v >= 0.0, "x = {x}, rho = {v}");
        }
    }

    #[test]
    fn cdf_basics() {
        for d in [10.0, 50.0, 200.0] {
            let p = ProfileParams::new(d, 3.0).unwrap();
            assert!((p.cdf(0.5) - 0.5).abs() < 1e-12, "d = {d}");
        }
        let p = ProfileParams::new(25.0, 3.0).unwrap();
        assert!((p.cdf(1e6) - 1.0).abs() < 1e-12);
        assert!(p.cdf(-1e6).abs() < 1e-12);
    }

    #[test]
    fn inverse_cdf_roundtrip() {
        let p = ProfileParams::new(50.0, 50.0f64.ln()).unwrap();
        for i in 1..200 {
            let x = -0.1 + 1.2 * i as f64 / 200.0;
            let u = p.cdf(x);
            if u <= 0.0 || u >= 1.0 {
                continue;
            }
            let back = p.inverse_cdf(u).unwrap();
            assert!((back - x).abs() < 1e-9, "x = {x}, back = {back}");
        }
        assert!(p.inverse_cdf(0.0).is_err());
        assert!(p.inverse_cdf(1.0).is_err());
    }

    #[test]
    fn samples_inside_window_and_symmetric() {
        let p = ProfileParams::with_default_window(50.0).unwrap();
        let xs = p.sample(100_000, 17).unwrap();
        let (a, b) = p.window();
        let mut mean = 0.0;
        for &x in &xs {
            assert!(x >= a && x <= b);
            mean += x;
        }
        mean /= xs.len() as f64;
        // symmetric about 1/2; sd of one draw is <= ~0.3
        let tol = 4.0 * 0.3 / (xs.len() as f64).sqrt();
        assert!((mean - 0.5).abs() < tol, "mean = {mean}");
    }

    #[test]
    fn empirical_cdf_close_to_closed_form() {
        let p = ProfileParams::with_default_window(50.0).unwrap();
        let mut xs = p.sample(100_000, 23).unwrap();
        xs.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap());
        let n = xs.len() as f64;
        let mut sup = 0.0f64;
        for (i, &x) in xs.iter().enumerate() {
            let f = p.cdf(x);
            let lo = i as f64 / n;
            let hi = (i + 1) as f64 / n;
            sup = sup.max((f - lo).abs()).max((f - hi).abs());
        }
        assert!(sup < 0.01, "KS distance = {sup}");
    }

    #[test]
    fn truncation_mass_exponentially_small() {
        let d = 50.0;
        for t in [3.0, 5.0, 8.0] {
            let p = ProfileParams::new(d, t).unwrap();
            let missing = 1.0 - p.window_mass();
            assert!(missing <= (-t).exp(), "T = {t}: missing = {missing}");
        }
    }

    #[test]
    fn entropy_and_q_constants() {
        let p = ProfileParams::new(100.0, 3.0).unwrap();
        let h = p.entropy_h().unwrap();
        assert!((100.0 * h - PI * PI / 3.0).abs() < 0.04, "dH = {}", 100.0 * h);
        let q = p.bad_pair_q().unwrap();
        assert!(
            (100.0 * 100.0 * q - PI * PI / 3.0).abs() < 0.2,
            "d2Q = {}",
            1e4 * q
        );
    }

    #[test]
    fn gain_constant() {
        let p = ProfileParams::new(200.0, 3.0).unwrap();
        let s = p.summary().unwrap();
        assert!(
            (200.0 * s.gain - PI * PI / 6.0).abs() < 0.02,
            "d gain = {}",
            200.0 * s.gain
        );
        assert!(s.norm_defect < 1e-10);
        assert!(s.q >= 0.0 && s.q <= 1.0);
    }

    #[test]
    fn entropy_deviation_shrinks_with_d() {
        let mut devs = Vec::new();
        for d in [25.0, 50.0, 100.0, 200.0] {
            let p = ProfileParams::new(d, 3.0).unwrap();
            let h = p.entropy_h().unwrap();
            devs.push((d * h - PI * PI / 3.0).abs());
        }
        for w in devs.windows(2) {
            assert!(w[1] <= w[0] + 1e-9, "deviations not decreasing: {devs:?}");
        }
    }

    #[test]
    fn q_matches_two_dim_mc() {
        let p = ProfileParams::new(50.0, 3.0).unwrap();
        let q1 = p.bad_pair_q().unwrap();
        // 2-dim MC oracle on pairs from the untruncated law (sampled via the
        // full-range inverse CDF).
        let mut rng = substream_rng(99, 0);
        let pairs = 1_000_000usize;
        let mut hits = 0u64;
        for _ in 0..pairs {
            let x = p.inverse_cdf(rng.gen::<f64>().max(1e-12)).unwrap();
            let y = p.inverse_cdf(rng.gen::<f64>().max(1e-12)).unwrap();
            if (x - y).abs() > 1.0 {
                hits += 1;
            }
        }
        let q2 = hits as f64 / pairs as f64;
        let sigma = (q1 * (1.0 - q1) / pairs as f64).sqrt();
        assert!((q1 - q2).abs() < 4.0 * sigma, "q1 = {q1}, q2 = {q2}");
    }

    #[test]
    fn neighbor_extreme_statistics() {
        let d = 200.0;
        let p = ProfileParams::with_default_window(d).unwrap();
        let rep = neighbor_extremes(&p, 200, 40_000, 31).unwrap();
        // logistic median: half the maxima sit below 1
        let sigma = 0.5 / (rep.replicas as f64).sqrt();
        assert!(
            (rep.prob_max_shift_nonpos - 0.5).abs() < 4.0 * sigma,
            "P = {}",
            rep.prob_max_shift_nonpos
        );
        assert!(rep.mean_r.abs() * d < 0.3, "d E[R] = {}", rep.mean_r * d);
        assert!(rep.mean_r2 * d * d < 8.0, "d^2 E[R^2] = {}", rep.mean_r2 * d * d);
        // log(1 + r) >= r - r^2 pointwise on [-1/2, 1]
        assert!(
            rep.mean_log1p_r
                >= rep.mean_r - rep.mean_r2 - 4.0 * (rep.stderr_r + rep.stderr_r2)
        );
    }
}
