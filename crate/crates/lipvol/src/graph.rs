//! Graph representation, deterministic constructors, and `G(n, d/n)` generation.
//!
//! Vertices are `0..n`.  Edges are unordered pairs of distinct vertices;
//! self-loops are tracked separately and are legal only on homomorphism
//! targets (the circular target graphs of [`make_circular_target`]), never on
//! graphs fed to Lipschitz counting.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::{Error, Result};

/// The crate-wide seedable generator: ChaCha8, 64-bit seed, one substream per
/// replica via [`substream_rng`].  Identical (seed, stream) pairs are
/// bit-identical across platforms.
pub type LipvolRng = ChaCha8Rng;

/// RNG for a given seed and replica substream.
pub fn substream_rng(seed: u64, stream: u64) -> LipvolRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// An undirected simple graph with optional per-vertex loops.
///
/// Immutable after construction; adjacency lists are built once and shared
/// freely across concurrent readers.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    n: usize,
    edges: Vec<(usize, usize)>,
    loops: Vec<usize>,
    adj: Vec<Vec<usize>>,
}

impl Graph {
    /// Builds a graph from an edge list.  Endpoints must lie in `0..n`,
    /// loops passed as `(v, v)` pairs are rejected (use `loops`), and
    /// duplicate edges are rejected.
    pub fn new(n: usize, edges: &[(usize, usize)], loops: &[usize]) -> Result<Graph> {
        let mut normalized: Vec<(usize, usize)> = Vec::with_capacity(edges.len());
        for &(u, v) in edges {
            if u >= n || v >= n {
                return Err(Error::InvalidParameter(format!(
                    "edge ({u}, {v}) out of range for n = {n}"
                )));
            }
            if u == v {
                return Err(Error::InvalidParameter(format!(
                    "edge ({u}, {v}) is a loop; loops go in the loop set"
                )));
            }
            normalized.push((u.min(v), u.max(v)));
        }
        normalized.sort_unstable();
        if normalized.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidParameter("duplicate edge".into()));
        }
        let mut loop_set: Vec<usize> = loops.to_vec();
        loop_set.sort_unstable();
        loop_set.dedup();
        if loop_set.iter().any(|&v| v >= n) {
            return Err(Error::InvalidParameter("loop vertex out of range".into()));
        }
        let mut adj = vec![Vec::new(); n];
        for &(u, v) in &normalized {
            adj[u].push(v);
            adj[v].push(u);
        }
        for a in &mut adj {
            a.sort_unstable();
        }
        Ok(Graph {
            n,
            edges: normalized,
            loops: loop_set,
            adj,
        })
    }

    pub fn vertex_count(&self) -> usize {
        self.n
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Edges as sorted `(u, v)` pairs with `u < v`.
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    /// Vertices carrying a self-loop.
    pub fn loops(&self) -> &[usize] {
        &self.loops
    }

    pub fn has_loops(&self) -> bool {
        !self.loops.is_empty()
    }

    pub fn has_loop_at(&self, v: usize) -> bool {
        self.loops.binary_search(&v).is_ok()
    }

    /// Non-loop neighbors of `v`, sorted.
    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.adj[v]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adj[v].len()
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.adj[u].binary_search(&v).is_ok()
    }

    /// BFS distances from `root`; unreachable vertices get `usize::MAX`.
    pub fn bfs_distances(&self, root: usize) -> Vec<usize> {
        let mut dist = vec![usize::MAX; self.n];
        let mut queue = std::collections::VecDeque::new();
        dist[root] = 0;
        queue.push_back(root);
        while let Some(u) = queue.pop_front() {
            for &v in &self.adj[u] {
                if dist[v] == usize::MAX {
                    dist[v] = dist[u] + 1;
                    queue.push_back(v);
                }
            }
        }
        dist
    }

    /// Two-coloring by parity when the graph is bipartite (loops ignored).
    pub fn bipartition(&self) -> Option<Vec<u8>> {
        let mut color = vec![u8::MAX; self.n];
        for start in 0..self.n {
            if color[start] != u8::MAX {
                continue;
            }
            color[start] = 0;
            let mut queue = std::collections::VecDeque::from([start]);
            while let Some(u) = queue.pop_front() {
                for &v in &self.adj[u] {
                    if color[v] == u8::MAX {
                        color[v] = 1 - color[u];
                        queue.push_back(v);
                    } else if color[v] == color[u] {
                        return None;
                    }
                }
            }
        }
        Some(color)
    }

    /// The induced subgraph on `keep`, with vertices relabeled `0..keep.len()`
    /// in the order given.  Loops on kept vertices are preserved.
    pub fn induced(&self, keep: &[usize]) -> Result<Graph> {
        let mut index = vec![usize::MAX; self.n];
        for (i, &v) in keep.iter().enumerate() {
            if v >= self.n || index[v] != usize::MAX {
                return Err(Error::InvalidParameter(
                    "induced: vertex out of range or repeated".into(),
                ));
            }
            index[v] = i;
        }
        let mut edges = Vec::new();
        for &(u, v) in &self.edges {
            if index[u] != usize::MAX && index[v] != usize::MAX {
                edges.push((index[u], index[v]));
            }
        }
        let loops: Vec<usize> = self
            .loops
            .iter()
            .filter(|&&v| index[v] != usize::MAX)
            .map(|&v| index[v])
            .collect();
        Graph::new(keep.len(), &edges, &loops)
    }

    /// Serializes to the edge-list text format: first line `n m l`, then `m`
    /// lines `u v`, then `l` lines `u` for loops.
    pub fn to_edge_list(&self) -> String {
        let mut out = format!("{} {} {}\n", self.n, self.edges.len(), self.loops.len());
        for &(u, v) in &self.edges {
            out.push_str(&format!("{u} {v}\n"));
        }
        for &v in &self.loops {
            out.push_str(&format!("{v}\n"));
        }
        out
    }

    /// Parses the edge-list text format.
    pub fn from_edge_list(text: &str) -> Result<Graph> {
        let mut tokens = text.split_whitespace().map(|t| {
            t.parse::<usize>()
                .map_err(|_| Error::Parse(format!("bad integer token `{t}` in edge list")))
        });
        let mut next = |what: &str| -> Result<usize> {
            tokens
                .next()
                .ok_or_else(|| Error::Parse(format!("edge list truncated before {what}")))?
        };
        let n = next("n")?;
        let m = next("m")?;
        let l = next("l")?;
        let mut edges = Vec::with_capacity(m);
        for _ in 0..m {
            let u = next("edge endpoint")?;
            let v = next("edge endpoint")?;
            edges.push((u, v));
        }
        let mut loops = Vec::with_capacity(l);
        for _ in 0..l {
            loops.push(next("loop vertex")?);
        }
        Graph::new(n, &edges, &loops)
    }
}

/// Connected-component decomposition with one designated root per component.
///
/// Roots are the minimum-index vertex of each component; the rooted volume is
/// independent of the root choice, so any deterministic rule works and this
/// one is reproducible.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ComponentDecomposition {
    pub component_id: Vec<usize>,
    pub roots: Vec<usize>,
    pub k: usize,
}

impl ComponentDecomposition {
    /// Vertices of component `c`, ascending.
    pub fn members(&self, c: usize) -> Vec<usize> {
        (0..self.component_id.len())
            .filter(|&v| self.component_id[v] == c)
            .collect()
    }
}

/// BFS decomposition into connected components.
pub fn components(g: &Graph) -> ComponentDecomposition {
    let n = g.vertex_count();
    let mut component_id = vec![usize::MAX; n];
    let mut roots = Vec::new();
    for start in 0..n {
        if component_id[start] != usize::MAX {
            continue;
        }
        let c = roots.len();
        roots.push(start);
        component_id[start] = c;
        let mut queue = std::collections::VecDeque::from([start]);
        while let Some(u) = queue.pop_front() {
            for &v in g.neighbors(u) {
                if component_id[v] == usize::MAX {
                    component_id[v] = c;
                    queue.push_back(v);
                }
            }
        }
    }
    let k = roots.len();
    ComponentDecomposition {
        component_id,
        roots,
        k,
    }
}

/// Samples `G(n, p)` with explicit edge probability `p` in `[0, 1]`.
///
/// Geometric skipping over the `C(n,2)` pair sequence makes generation
/// `O(n + |E|)` rather than `O(n^2)`.
pub fn gen_gnp_with_p(n: usize, p: f64, seed: u64) -> Result<Graph> {
    if n == 0 {
        return Err(Error::InvalidParameter("gen_gnp: n must be positive".into()));
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidParameter(format!(
            "gen_gnp: p = {p} outside [0, 1]"
        )));
    }
    let total = (n as u64) * (n as u64 - 1) / 2;
    let mut edges = Vec::new();
    if p > 0.0 {
        let mut rng = substream_rng(seed, 0);
        let log1mp = (-p).ln_1p(); // ln(1 - p), -inf when p = 1
        let mut k: u64 = 0; // linear index of the next candidate pair
        let (mut u, mut v) = (0usize, 1usize); // pair at index k
        let advance = |u: &mut usize, v: &mut usize, gap: u64| {
            *v += gap as usize;
            while *v >= n {
                let excess = *v - n;
                *u += 1;
                *v = *u + 1 + excess;
            }
        };
        while k < total {
            let gap = if p >= 1.0 {
                0
            } else {
                let x: f64 = rng.gen::<f64>(); // [0, 1)
                let g = ((-x).ln_1p() / log1mp).floor();
                if g >= total as f64 {
                    break;
                }
                g as u64
            };
            if k + gap >= total {
                break;
            }
            advance(&mut u, &mut v, gap);
            edges.push((u, v));
            k += gap + 1;
            if k < total {
                // step to the next pair
                v += 1;
                if v >= n {
                    u += 1;
                    v = u + 1;
                }
            }
        }
    }
    Graph::new(n, &edges, &[])
}

/// Samples the sparse random graph `G(n, d/n)`.
///
/// `d = 0` is accepted as the edgeless degenerate case; `d >= n` is rejected.
///
/// ```
/// use lipvol::graph::{components, gen_gnp, giant_fraction_fixed_point};
///
/// let g = gen_gnp(2000, 4.0, 1).unwrap();
/// let comps = components(&g);
/// let giant = (0..comps.k).map(|c| comps.members(c).len()).max().unwrap();
/// let predicted = 1.0 - giant_fraction_fixed_point(4.0);
/// assert!((giant as f64 / 2000.0 - predicted).abs() < 0.05);
/// ```
pub fn gen_gnp(n: usize, d: f64, seed: u64) -> Result<Graph> {
    if n == 0 {
        return Err(Error::InvalidParameter("gen_gnp: n must be positive".into()));
    }
    if !d.is_finite() || d < 0.0 || d >= n as f64 {
        return Err(Error::InvalidParameter(format!(
            "gen_gnp: need 0 <= d < n, got d = {d}, n = {n}"
        )));
    }
    gen_gnp_with_p(n, d / n as f64, seed)
}

/// Path on `n` vertices: edges `i ~ i+1`.
pub fn make_path(n: usize) -> Result<Graph> {
    if n == 0 {
        return Err(Error::InvalidParameter("make_path: n must be >= 1".into()));
    }
    let edges: Vec<_> = (0..n.saturating_sub(1)).map(|i| (i, i + 1)).collect();
    Graph::new(n, &edges, &[])
}

/// Cycle on `n >= 3` vertices.
pub fn make_cycle(n: usize) -> Result<Graph> {
    if n < 3 {
        return Err(Error::InvalidParameter("make_cycle: n must be >= 3".into()));
    }
    let mut edges: Vec<_> = (0..n - 1).map(|i| (i, i + 1)).collect();
    edges.push((n - 1, 0));
    Graph::new(n, &edges, &[])
}

/// Complete graph on `n` vertices.
pub fn make_complete(n: usize) -> Result<Graph> {
    if n == 0 {
        return Err(Error::InvalidParameter("make_complete: n must be >= 1".into()));
    }
    let mut edges = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            edges.push((u, v));
        }
    }
    Graph::new(n, &edges, &[])
}

/// Complete bipartite graph `K_{a,b}`: left part `0..a`, right part `a..a+b`.
pub fn make_complete_bipartite(a: usize, b: usize) -> Result<Graph> {
    if a == 0 || b == 0 {
        return Err(Error::InvalidParameter(
            "make_complete_bipartite: parts must be nonempty".into(),
        ));
    }
    let mut edges = Vec::new();
    for u in 0..a {
        for v in a..a + b {
            edges.push((u, v));
        }
    }
    Graph::new(a + b, &edges, &[])
}

/// `d`-dimensional hypercube `Q_d`.  Vertex index = integer whose binary
/// expansion is the coordinate vector; edges connect indices at Hamming
/// distance 1.
pub fn make_hypercube(d: usize) -> Result<Graph> {
    if d == 0 || d > 20 {
        return Err(Error::InvalidParameter(
            "make_hypercube: need 1 <= d <= 20".into(),
        ));
    }
    let n = 1usize << d;
    let mut edges = Vec::new();
    for u in 0..n {
        for bit in 0..d {
            let v = u ^ (1 << bit);
            if u < v {
                edges.push((u, v));
            }
        }
    }
    Graph::new(n, &edges, &[])
}

/// The circular homomorphism target `T_{M,h}`: vertex set `Z/MZ`, a loop at
/// every vertex, and an edge when the cyclic distance is in `1..=h`.
///
/// Requires `M > 2h`, the precondition of the lifting bijection (increments
/// in `[-h, h]` must be determined modulo `M`).
pub fn make_circular_target(m: usize, h: usize) -> Result<Graph> {
    if m == 0 || h == 0 {
        return Err(Error::InvalidParameter(
            "make_circular_target: M and h must be positive".into(),
        ));
    }
    if m <= 2 * h {
        return Err(Error::InvalidParameter(format!(
            "make_circular_target: M = {m} <= 2h = {}; lifting needs M > 2h",
            2 * h
        )));
    }
    let mut edges = Vec::new();
    for u in 0..m {
        for delta in 1..=h {
            let v = (u + delta) % m;
            if u < v {
                edges.push((u, v));
            } else {
                edges.push((v, u));
            }
        }
    }
    edges.sort_unstable();
    edges.dedup();
    let loops: Vec<usize> = (0..m).collect();
    Graph::new(m, &edges, &loops)
}

/// Smallest fixed point of `rho = exp(-d (1 - rho))` on `[0, 1]`, to absolute
/// tolerance 1e-12.  This is the asymptotic fraction of `G(n, d/n)` outside
/// the giant component; it is 1 for `d <= 1` (no giant component).
pub fn giant_fraction_fixed_point(d: f64) -> f64 {
    assert!(d > 0.0, "giant_fraction_fixed_point: d must be positive");
    if d <= 1.0 {
        return 1.0;
    }
    let g = |rho: f64| (-d * (1.0 - rho)).exp() - rho;
    // g(0) > 0 and g(1 - eps) < 0 for d > 1; the smallest root sits between.
    let (mut lo, mut hi) = (0.0f64, 1.0 - 1e-9);
    if g(hi) >= 0.0 {
        return 1.0; // d barely above 1: root indistinguishable from 1
    }
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if g(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reject_bad_edges() {
        assert!(Graph::new(3, &[(0, 3)], &[]).is_err());
        assert!(Graph::new(3, &[(1, 1)], &[]).is_err());
        assert!(Graph::new(3, &[(0, 1), (1, 0)], &[]).is_err());
    }

    #[test]
    fn edge_list_roundtrip() {
        let g = make_circular_target(5, 1).unwrap();
        let text = g.to_edge_list();
        let h = Graph::from_edge_list(&text).unwrap();
        assert_eq!(g, h);
    }

    #[test]
    fn gnp_degenerate_cases() {
        let g = gen_gnp(10, 0.0, 7).unwrap();
        assert_eq!(g.edge_count(), 0);
        let g = gen_gnp_with_p(5, 1.0, 7).unwrap();
        assert_eq!(g.edge_count(), 10);
        assert!(gen_gnp(10, 10.0, 7).is_err());
        assert!(gen_gnp(0, 1.0, 7).is_err());
    }

    #[test]
    fn gnp_deterministic_and_seed_sensitive() {
        let a = gen_gnp(1000, 4.0, 42).unwrap();
        let b = gen_gnp(1000, 4.0, 42).unwrap();
        assert_eq!(a, b);
        let c = gen_gnp(1000, 4.0, 43).unwrap();
        assert_ne!(a.edges(), c.edges());
    }

    #[test]
    fn gnp_edge_count_in_range() {
        // |E| within 4 sigma of C(n,2) p with p = d/n.
        let (n, d) = (10_000usize, 4.0f64);
        let g = gen_gnp(n, d, 123).unwrap();
        let pairs = (n as f64) * (n as f64 - 1.0) / 2.0;
        let p = d / n as f64;
        let mean = pairs * p;
        let sigma = (pairs * p * (1.0 - p)).sqrt();
        let m = g.edge_count() as f64;
        assert!(
            (m - mean).abs() < 4.0 * sigma,
            "edge count {m} vs mean {mean}, sigma {sigma}"
        );
    }

    #[test]
    fn gnp_matches_dense_reference() {
        // Same distributional support sanity: every edge valid, no duplicates,
        // density roughly p for a mid-range p.
        let g = gen_gnp_with_p(200, 0.3, 9).unwrap();
        let pairs = 200.0 * 199.0 / 2.0;
        let frac = g.edge_count() as f64 / pairs;
        assert!((frac - 0.3).abs() < 0.05, "density {frac}");
    }

    #[test]
    fn components_basics() {
        let g = Graph::new(3, &[], &[]).unwrap();
        assert_eq!(components(&g).k, 3);

        let g = make_path(3).unwrap();
        let c = components(&g);
        assert_eq!(c.k, 1);
        assert_eq!(c.roots, vec![0]);

        let g = Graph::new(4, &[(0, 1), (2, 3)], &[]).unwrap();
        let c = components(&g);
        assert_eq!(c.k, 2);
        assert_eq!(c.roots, vec![0, 2]);
        assert_eq!(c.component_id, vec![0, 0, 1, 1]);
    }

    #[test]
    fn components_union_find_oracle() {
        // Oracle: union-find over edges must induce the same partition.
        let g = gen_gnp(300, 2.0, 5).unwrap();
        let c = components(&g);
        let mut parent: Vec<usize> = (0..300).collect();
        fn find(parent: &mut Vec<usize>, x: usize) -> usize {
            if parent[x] != x {
                let r = find(parent, parent[x]);
                parent[x] = r;
            }
            parent[x]
        }
        for &(u, v) in g.edges() {
            let (ru, rv) = (find(&mut parent, u), find(&mut parent, v));
            parent[ru] = rv;
        }
        for u in 0..300 {
            for v in 0..300 {
                let same_uf = find(&mut parent, u) == find(&mut parent, v);
                let same_c = c.component_id[u] == c.component_id[v];
                assert_eq!(same_uf, same_c, "vertices {u}, {v}");
            }
        }
    }

    #[test]
    fn constructors() {
        let q2 = make_hypercube(2).unwrap();
        assert_eq!(q2.vertex_count(), 4);
        assert_eq!(q2.edge_count(), 4);
        let q3 = make_hypercube(3).unwrap();
        assert_eq!(q3.vertex_count(), 8);
        assert_eq!(q3.edge_count(), 12);
        let k22 = make_complete_bipartite(2, 2).unwrap();
        assert_eq!(k22.edge_count(), 4);
        assert!(k22.bipartition().is_some());
        assert!(k22.neighbors(0).len() == 2);
    }

    #[test]
    fn hypercube_bipartite_by_popcount() {
        for d in 1..=6usize {
            let q = make_hypercube(d).unwrap();
            let color = q.bipartition().unwrap();
            let class0 = color.iter().filter(|&&c| c == color[0]).count();
            assert_eq!(class0, 1 << (d - 1));
            for v in 0..q.vertex_count() {
                let parity = (v.count_ones() % 2) as u8;
                assert_eq!(parity == (0usize.count_ones() % 2) as u8, color[v] == color[0]);
            }
        }
    }

    #[test]
    fn circular_target() {
        let t = make_circular_target(5, 1).unwrap();
        assert_eq!(t.loops().len(), 5);
        assert_eq!(t.edge_count(), 5);
        for v in 0..5 {
            assert_eq!(t.degree(v), 2);
        }
        let t = make_circular_target(10, 2).unwrap();
        for v in 0..10 {
            assert_eq!(t.degree(v), 4);
        }
        assert!(make_circular_target(5, 2).is_ok()); // 5 > 4
        assert!(make_circular_target(4, 2).is_err()); // boundary M = 2h
    }

    #[test]
    fn giant_fraction_values() {
        assert_eq!(giant_fraction_fixed_point(0.5), 1.0);
        // d = 2: bisection oracle value.
        let rho = giant_fraction_fixed_point(2.0);
        assert!((rho - 0.2032).abs() < 1e-3, "rho = {rho}");
        // d = 10: between e^{-10} and 2 e^{-10} e.
        let rho = giant_fraction_fixed_point(10.0);
        assert!(rho >= (-10.0f64).exp() && rho <= 2.0 * (-10.0f64).exp() * 1.0f64.exp());
    }

    #[test]
    fn giant_fraction_residual() {
        for d in [1.5, 2.0, 4.0, 8.0] {
            let rho = giant_fraction_fixed_point(d);
            let residual = (rho - (-d * (1.0 - rho)).exp()).abs();
            assert!(residual < 1e-10, "d = {d}, residual = {residual}");
        }
    }
}
