//! Exact integer counting of rooted h-Lipschitz functions, Ehrhart extraction
//! of the growth constant, homomorphism counting, the circular-target lifting
//! bijection, and the closed-form `K_{d,d}` volume.
//!
//! The count `N_G(h)` is a polynomial in `h` of degree `D = |V| - k`, whose
//! leading coefficient is the volume of the rooted Lipschitz polytope and
//! whose `D`-th root of that volume is `c(G)`.  Everything here is exact:
//! counts are big integers, the leading coefficient is an exact rational from
//! `D`-th finite differences at `h = 0..D`, and floating point enters only in
//! the final root extraction.

use num_bigint::BigInt;
use num_traits::{One, ToPrimitive, Zero};

use crate::graph::{components, Graph};
use crate::qseries::Rational;
use crate::{Error, Result};

/// Default node-expansion budget for the counting DFS.
pub const DEFAULT_WORK_BUDGET: u64 = 1_000_000_000;

/// Exact Ehrhart data for a graph.
#[derive(Debug, Clone)]
pub struct EhrhartResult {
    /// `N_G(h)` for `h = 0..=degree`.
    pub counts: Vec<BigInt>,
    /// `|V| - k`.
    pub degree: usize,
    /// Leading coefficient `Delta^D N / D!`, the polytope volume, exact.
    pub leading: Rational,
    /// `leading` as a float.
    pub volume: f64,
    /// `c(G) = leading^(1/D)`; 1 for edgeless graphs (`D = 0`).
    pub c: f64,
}

impl EhrhartResult {
    /// `log c(G)`, computed from the exact rational to avoid overflow.
    pub fn ln_c(&self) -> f64 {
        if self.degree == 0 {
            return 0.0;
        }
        ln_rational(&self.leading) / self.degree as f64
    }
}

fn ln_rational(r: &Rational) -> f64 {
    ln_bigint(r.numer()) - ln_bigint(r.denom())
}

fn ln_bigint(x: &BigInt) -> f64 {
    // exact for small values, digit-based for huge ones
    if let Some(v) = x.to_f64() {
        if v.is_finite() && v > 0.0 {
            return v.ln();
        }
    }
    let (_, digits) = x.to_radix_be(1 << 16);
    let mut acc = 0.0f64;
    for &d in &digits {
        acc = acc * 65536.0 + d as f64;
        if acc > 1e300 {
            break;
        }
    }
    // fallback only used for astronomically large values; good to ~1e-12 rel
    let mut ln = 0.0;
    let mut y = x.clone();
    let big = BigInt::from(u64::MAX);
    while y.magnitude().bits() > 50 {
        y /= &big;
        ln += (u64::MAX as f64).ln();
    }
    ln + y.to_f64().unwrap().ln()
}

struct LipschitzCounter {
    order: Vec<usize>,
    /// earlier neighbors of order[i], as positions into `order`
    earlier: Vec<Vec<usize>>,
    /// whether order[i] has a neighbor later in the order
    has_later: Vec<bool>,
    h: i64,
    budget: u64,
    spent: u64,
}

impl LipschitzCounter {
    fn new(g: &Graph, member: &[usize], root: usize, h: i64, budget: u64) -> Self {
        // BFS order from the root, ties by vertex index (adjacency is sorted).
        let mut in_comp = vec![false; g.vertex_count()];
        for &v in member {
            in_comp[v] = true;
        }
        let mut order = Vec::with_capacity(member.len());
        let mut pos = vec![usize::MAX; g.vertex_count()];
        let mut queue = std::collections::VecDeque::from([root]);
        pos[root] = 0;
        order.push(root);
        while let Some(u) = queue.pop_front() {
            for &v in g.neighbors(u) {
                if in_comp[v] && pos[v] == usize::MAX {
                    pos[v] = order.len();
                    order.push(v);
                    queue.push_back(v);
                }
            }
        }
        let mut earlier = vec![Vec::new(); order.len()];
        let mut has_later = vec![false; order.len()];
        for (i, &v) in order.iter().enumerate() {
            for &w in g.neighbors(v) {
                if in_comp[w] && pos[w] < i {
                    earlier[i].push(pos[w]);
                    has_later[pos[w]] = true;
                }
            }
        }
        LipschitzCounter {
            order,
            earlier,
            has_later,
            h,
            budget,
            spent: 0,
        }
    }

    /// Candidate window for position `i` given assigned values; `None` means
    /// empty.  Every non-root position has at least one earlier neighbor, so
    /// the window is always bounded.
    fn window(&self, i: usize, values: &[i64]) -> Option<(i64, i64)> {
        let mut lo = i64::MIN;
        let mut hi = i64::MAX;
        for &j in &self.earlier[i] {
            lo = lo.max(values[j] - self.h);
            hi = hi.min(values[j] + self.h);
            if lo > hi {
                return None;
            }
        }
        Some((lo, hi))
    }

    fn count(&mut self) -> Result<BigInt> {
        let mut values = vec![0i64; self.order.len()];
        match self.count_u128(1, &mut values) {
            Ok(Some(v)) => Ok(BigInt::from(v)),
            Ok(None) => {
                // overflowed the fast path; redo in big integers
                self.spent = 0;
                let mut values = vec![0i64; self.order.len()];
                self.count_big(1, &mut values)
            }
            Err(e) => Err(e),
        }
    }

    fn charge(&mut self) -> Result<()> {
        self.spent += 1;
        if self.spent > self.budget {
            return Err(Error::WorkBudget {
                spent: self.spent,
                budget: self.budget,
            });
        }
        Ok(())
    }

    /// Fast path: u128 arithmetic, `None` on overflow.
    fn count_u128(&mut self, i: usize, values: &mut [i64]) -> Result<Option<u128>> {
        if i == self.order.len() {
            return Ok(Some(1));
        }
        self.charge()?;
        let Some((lo, hi)) = self.window(i, values) else {
            return Ok(Some(0));
        };
        let width = (hi - lo + 1) as u128;
        if !self.has_later[i] {
            // nothing downstream depends on this value: multiply through
            return match self.count_u128(i + 1, values)? {
                Some(rest) => Ok(width.checked_mul(rest)),
                None => Ok(None),
            };
        }
        let mut total: u128 = 0;
        for x in lo..=hi {
            values[i] = x;
            match self.count_u128(i + 1, values)? {
                Some(sub) => {
                    total = match total.checked_add(sub) {
                        Some(t) => t,
                        None => return Ok(None),
                    }
                }
                None => return Ok(None),
            }
        }
        Ok(Some(total))
    }

    fn count_big(&mut self, i: usize, values: &mut [i64]) -> Result<BigInt> {
        if i == self.order.len() {
            return Ok(BigInt::one());
        }
        self.charge()?;
        let Some((lo, hi)) = self.window(i, values) else {
            return Ok(BigInt::zero());
        };
        if !self.has_later[i] {
            return Ok(self.count_big(i + 1, values)? * BigInt::from(hi - lo + 1));
        }
        let mut total = BigInt::zero();
        for x in lo..=hi {
            values[i] = x;
            total += self.count_big(i + 1, values)?;
        }
        Ok(total)
    }
}

/// Exact count of rooted integer `h`-Lipschitz functions on `g`.
///
/// Roots are the minimum-index vertex per component; the count is the product
/// over components.  A DFS over a BFS vertex order assigns values inside the
/// window cut out by the already-assigned neighbors, aborting early on empty
/// windows; vertices nothing later depends on are folded in multiplicatively.
pub fn count_lipschitz(g: &Graph, h: u32) -> Result<BigInt> {
    count_lipschitz_with(g, h, DEFAULT_WORK_BUDGET, None)
}

/// [`count_lipschitz`] with an explicit node-expansion budget and optional
/// root override (one root per component, in component order).
pub fn count_lipschitz_with(
    g: &Graph,
    h: u32,
    budget: u64,
    roots: Option<&[usize]>,
) -> Result<BigInt> {
    if g.has_loops() {
        return Err(Error::InvalidParameter(
            "count_lipschitz: input graph must be loop-free".into(),
        ));
    }
    let decomp = components(g);
    if let Some(roots) = roots {
        if roots.len() != decomp.k {
            return Err(Error::InvalidParameter(format!(
                "count_lipschitz: {} roots for {} components",
                roots.len(),
                decomp.k
            )));
        }
    }
    let mut total = BigInt::one();
    for c in 0..decomp.k {
        let member = decomp.members(c);
        let root = match roots {
            Some(r) => {
                if decomp.component_id[r[c]] != c {
                    return Err(Error::InvalidParameter(format!(
                        "count_lipschitz: root {} not in component {c}",
                        r[c]
                    )));
                }
                r[c]
            }
            None => decomp.roots[c],
        };
        let mut counter = LipschitzCounter::new(g, &member, root, h as i64, budget);
        total *= counter.count()?;
    }
    Ok(total)
}

/// Computes `N_G(h)` for `h = 0..=D`, extracts the leading coefficient by
/// exact `D`-th finite differences, and takes the real `D`-th root at the
/// very end.
///
/// ```
/// use lipvol::exact::ehrhart_c;
/// use lipvol::graph::make_cycle;
///
/// let c4 = make_cycle(4).unwrap();
/// let result = ehrhart_c(&c4).unwrap();
/// assert_eq!(result.leading.to_string(), "16/3");
/// assert!((result.c - (16.0f64 / 3.0).powf(1.0 / 3.0)).abs() < 1e-12);
/// ```
pub fn ehrhart_c(g: &Graph) -> Result<EhrhartResult> {
    ehrhart_c_with(g, DEFAULT_WORK_BUDGET)
}

pub fn ehrhart_c_with(g: &Graph, budget: u64) -> Result<EhrhartResult> {
    let decomp = components(g);
    let degree = g.vertex_count() - decomp.k;
    let mut counts = Vec::with_capacity(degree + 1);
    for h in 0..=degree {
        counts.push(count_lipschitz_with(g, h as u32, budget, None)?);
    }
    let leading = leading_coefficient(&counts, degree);
    let volume = leading.to_f64().unwrap_or(f64::INFINITY);
    let c = if degree == 0 {
        1.0
    } else {
        (ln_rational(&leading) / degree as f64).exp()
    };
    Ok(EhrhartResult {
        counts,
        degree,
        leading,
        volume,
        c,
    })
}

/// `Delta^D N(0) / D!` from values `N(0), ..., N(D)`.
fn leading_coefficient(counts: &[BigInt], degree: usize) -> Rational {
    let diff = finite_difference(counts, degree);
    let mut fact = BigInt::one();
    for j in 1..=degree {
        fact *= BigInt::from(j);
    }
    Rational::new(diff, fact)
}

/// `Delta^k N(0) = sum_j (-1)^(k-j) C(k, j) N(j)`.
pub fn finite_difference(values: &[BigInt], k: usize) -> BigInt {
    assert!(values.len() > k);
    let mut acc = BigInt::zero();
    for j in 0..=k {
        let term = crate::qseries::binomial(k, j) * &values[j];
        if (k - j) % 2 == 0 {
            acc += term;
        } else {
            acc -= term;
        }
    }
    acc
}

/// A graph-homomorphism count into a looped target.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HomCount {
    pub count: BigInt,
    pub target_m: usize,
}

/// Exact number of adjacency-preserving maps `g -> target`.
///
/// Loops on the target make equal images legal across an edge.  Bipartite
/// sources are counted by enumerating one color class and multiplying the
/// per-vertex compatible-image counts of the other class; everything else
/// falls back to a pruned DFS.  Guards: source at most 16 vertices on the
/// DFS path, target at most 64 vertices.
pub fn count_hom(g: &Graph, target: &Graph) -> Result<HomCount> {
    let m = target.vertex_count();
    if m == 0 || m > 64 {
        return Err(Error::InvalidParameter(
            "count_hom: target must have 1..=64 vertices".into(),
        ));
    }
    if g.has_loops() {
        return Err(Error::InvalidParameter(
            "count_hom: looped sources not supported".into(),
        ));
    }
    // compat[a]: bitmask of images legal across an edge whose other end maps
    // to a (neighbors of a, plus a itself when a is looped).
    let mut compat = vec![0u64; m];
    for a in 0..m {
        for &b in target.neighbors(a) {
            compat[a] |= 1 << b;
        }
        if target.has_loop_at(a) {
            compat[a] |= 1 << a;
        }
    }
    let decomp = components(g);
    let mut total = BigInt::one();
    for c in 0..decomp.k {
        let member = decomp.members(c);
        let sub = g.induced(&member)?;
        total *= count_hom_connected(&sub, m, &compat)?;
    }
    Ok(HomCount {
        count: total,
        target_m: m,
    })
}

fn count_hom_connected(g: &Graph, m: usize, compat: &[u64]) -> Result<BigInt> {
    let n = g.vertex_count();
    if let Some(color) = g.bipartition() {
        let class0: Vec<usize> = (0..n).filter(|&v| color[v] == 0).collect();
        let class1: Vec<usize> = (0..n).filter(|&v| color[v] == 1).collect();
        let (small, other) = if class0.len() <= class1.len() {
            (class0, class1)
        } else {
            (class1, class0)
        };
        if (m as f64).powi(small.len() as i32) <= 2e8 {
            return Ok(count_hom_bipartite(g, m, compat, &small, &other));
        }
    }
    if n > 16 {
        return Err(Error::InvalidParameter(format!(
            "count_hom: source with {n} vertices exceeds the DFS bound of 16"
        )));
    }
    Ok(count_hom_dfs(g, m, compat))
}

fn count_hom_bipartite(
    g: &Graph,
    m: usize,
    compat: &[u64],
    small: &[usize],
    other: &[usize],
) -> BigInt {
    let full: u64 = if m == 64 { u64::MAX } else { (1u64 << m) - 1 };
    let mut image = vec![0usize; g.vertex_count()];
    let mut total = BigInt::zero();
    let mut acc: u128 = 0;
    // enumerate images of the small class by odometer
    let k = small.len();
    let mut idx = vec![0usize; k];
    loop {
        for (j, &v) in small.iter().enumerate() {
            image[v] = idx[j];
        }
        let mut weight: u128 = 1;
        for &b in other {
            let mut allowed = full;
            for &a in g.neighbors(b) {
                allowed &= compat[image[a]];
                if allowed == 0 {
                    break;
                }
            }
            weight *= allowed.count_ones() as u128;
            if weight == 0 {
                break;
            }
        }
        acc = match acc.checked_add(weight) {
            Some(a) => a,
            None => {
                total += BigInt::from(acc);
                weight
            }
        };
        // advance odometer
        let mut j = 0;
        loop {
            if j == k {
                total += BigInt::from(acc);
                return total;
            }
            idx[j] += 1;
            if idx[j] < m {
                break;
            }
            idx[j] = 0;
            j += 1;
        }
    }
}

fn count_hom_dfs(g: &Graph, m: usize, compat: &[u64]) -> BigInt {
    let n = g.vertex_count();
    // BFS order so every later vertex has an assigned neighbor (connected g)
    let order = {
        let mut order = Vec::with_capacity(n);
        let mut seen = vec![false; n];
        let mut queue = std::collections::VecDeque::from([0usize]);
        seen[0] = true;
        while let Some(u) = queue.pop_front() {
            order.push(u);
            for &v in g.neighbors(u) {
                if !seen[v] {
                    seen[v] = true;
                    queue.push_back(v);
                }
            }
        }
        order
    };
    let pos = {
        let mut pos = vec![usize::MAX; n];
        for (i, &v) in order.iter().enumerate() {
            pos[v] = i;
        }
        pos
    };
    let earlier: Vec<Vec<usize>> = order
        .iter()
        .map(|&v| {
            g.neighbors(v)
                .iter()
                .copied()
                .filter(|&w| pos[w] < pos[v])
                .collect()
        })
        .collect();
    let full: u64 = if m == 64 { u64::MAX } else { (1u64 << m) - 1 };
    let mut image = vec![0usize; n];
    let mut count: u128 = 0;
    fn rec(
        i: usize,
        order: &[usize],
        earlier: &[Vec<usize>],
        compat: &[u64],
        full: u64,
        image: &mut [usize],
        count: &mut u128,
    ) {
        if i == order.len() {
            *count += 1;
            return;
        }
        let mut allowed = full;
        for &w in &earlier[i] {
            allowed &= compat[image[w]];
        }
        let mut bits = allowed;
        while bits != 0 {
            let a = bits.trailing_zeros() as usize;
            bits &= bits - 1;
            image[order[i]] = a;
            rec(i + 1, order, earlier, compat, full, image, count);
        }
    }
    rec(0, &order, &earlier, compat, full, &mut image, &mut count);
    BigInt::from(count)
}

/// Result of checking the lifting bijection `Hom(g, T_{M,h}) = M * N_g(h)`.
#[derive(Debug, Clone)]
pub struct LiftingReport {
    pub hom: BigInt,
    pub m_times_n: BigInt,
    pub m: usize,
    pub pass: bool,
}

/// Verifies the lifting bijection for a graph whose cycle space is generated
/// by 4-cycles (hypercubes, complete bipartite graphs, 4-cycles): rooted
/// `h`-Lipschitz functions biject with homomorphisms into the circular target
/// `T_{Lh, h}`, up to the `M`-fold vertex-transitivity of the target.
///
/// ```
/// use lipvol::exact::lifting_check;
/// use lipvol::graph::make_hypercube;
///
/// let q2 = make_hypercube(2).unwrap();
/// let report = lifting_check(&q2, 1, 5).unwrap();
/// assert!(report.pass);
/// assert_eq!(report.hom, report.m_times_n);
/// ```
pub fn lifting_check(g: &Graph, h: u32, l: usize) -> Result<LiftingReport> {
    if l < 5 {
        return Err(Error::InvalidParameter("lifting_check: need L >= 5".into()));
    }
    if g.bipartition().is_none() {
        return Err(Error::InvalidParameter(
            "lifting_check: source must be bipartite (4-cycle generated cycle space)".into(),
        ));
    }
    let m = l * h as usize;
    let target = crate::graph::make_circular_target(m, h as usize)?;
    let hom = count_hom(g, &target)?.count;
    let n = count_lipschitz(g, h)?;
    let m_times_n = BigInt::from(m) * n;
    let pass = hom == m_times_n;
    Ok(LiftingReport {
        hom,
        m_times_n,
        m,
        pass,
    })
}

/// Exact rooted Lipschitz-polytope volume of `K_{d,d}`:
/// `V_d = 2^(2d-1) d (d-1) B(d-1, d+1)` with
/// `B(d-1, d+1) = (d-2)! d! / (2d-1)!`.
pub fn kdd_volume_exact(d: usize) -> Result<Rational> {
    if d < 2 {
        return Err(Error::InvalidParameter("kdd_volume_exact: need d >= 2".into()));
    }
    let factorial = |k: usize| {
        let mut f = BigInt::one();
        for j in 2..=k {
            f *= BigInt::from(j);
        }
        f
    };
    let beta = Rational::new(factorial(d - 2) * factorial(d), factorial(2 * d - 1));
    let pow2 = BigInt::from(2u32).pow(2 * d as u32 - 1);
    Ok(Rational::from_integer(pow2 * BigInt::from(d) * BigInt::from(d - 1)) * beta)
}

/// Result of the Galvin-Tetali comparison for the hypercube.
#[derive(Debug, Clone)]
pub struct GalvinTetaliReport {
    pub lhs: BigInt,
    pub rhs: BigInt,
    /// `log Hom(Q_d, T)` and the comparison exponent `(2^d / 2d) log Hom(K_{d,d}, T)`.
    pub lhs_log: f64,
    pub rhs_log: f64,
    pub pass: bool,
}

/// Checks `Hom(Q_d, T_{M,h}) <= Hom(K_{d,d}, T_{M,h})^(2^d / 2d)` exactly,
/// via the integer-power comparison `lhs^(2d) <= rhs^(2^d)`.
pub fn galvin_tetali_check(d: usize, h: u32, l: usize) -> Result<GalvinTetaliReport> {
    if !(2..=3).contains(&d) {
        return Err(Error::InvalidParameter(
            "galvin_tetali_check: hypercube counting feasible for d in {2, 3}".into(),
        ));
    }
    let m = l * h as usize;
    let target = crate::graph::make_circular_target(m, h as usize)?;
    let qd = crate::graph::make_hypercube(d)?;
    let kdd = crate::graph::make_complete_bipartite(d, d)?;
    let lhs = count_hom(&qd, &target)?.count;
    let rhs = count_hom(&kdd, &target)?.count;
    let lhs_pow = lhs.clone().pow(2 * d as u32);
    let rhs_pow = rhs.clone().pow(1u32 << d);
    let pass = lhs_pow <= rhs_pow;
    let lhs_log = ln_bigint(&lhs);
    let rhs_log = (1u64 << d) as f64 / (2.0 * d as f64) * ln_bigint(&rhs);
    Ok(GalvinTetaliReport {
        lhs,
        rhs,
        lhs_log,
        rhs_log,
        pass,
    })
}

/// Upper bound on `c(Q_d)` from the homomorphism comparison:
/// `c(Q_d)^(N-1) <= L^{-1} (L V_d)^(N / 2d)` with `N = 2^d` and `V_d` the
/// exact `K_{d,d}` volume.  Returned as the bound on `c` itself.
pub fn hypercube_c_upper(d: usize, l: usize) -> Result<f64> {
    if d < 2 {
        return Err(Error::InvalidParameter("hypercube_c_upper: need d >= 2".into()));
    }
    if l < 5 {
        return Err(Error::InvalidParameter("hypercube_c_upper: need L >= 5".into()));
    }
    let vd = kdd_volume_exact(d)?;
    let n = (1u64 << d) as f64;
    let ln_l = (l as f64).ln();
    let ln_lvd = ln_l + ln_rational(&vd);
    let ln_bound = (-ln_l + n / (2.0 * d as f64) * ln_lvd) / (n - 1.0);
    Ok(ln_bound.exp())
}
