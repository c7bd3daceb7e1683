//! Synthetic benchmark graphs with known community structure.
//!
//! Three families:
//! * [`gen_pp`] — degree-corrected planted partition: equal-propensity
//!   communities, truncated power-law degrees, independent edges with
//!   `P(i ~ j) = 1 - exp(-omega_{g_i g_j} k_i k_j / 2m)`.
//! * [`gen_lfr_style`] — power-law community sizes *and* degrees with a
//!   global mixing fraction `mu` of cross-community stubs, wired by stub
//!   matching.
//! * [`gen_multiscale`] — a chain of structurally different blocks (a
//!   10-clique, a 20-clique, then sparse random blocks) at doubling sizes,
//!   joined by single bridge edges; communities live at different size and
//!   density scales.

use log::{debug, warn};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::graph::{Graph, Partition};

/// A generated graph together with its planted reference partition.
#[derive(Clone, Debug)]
pub struct PlantedGraph {
    pub graph: Graph,
    pub reference: Partition,
}

/// Planted-partition parameters.
#[derive(Clone, Debug)]
pub struct PpConfig {
    /// Number of nodes.
    pub n: usize,
    /// Number of planted communities.
    pub n_hat: usize,
    /// Intra/inter propensity pair `(omega_in, omega_out)`.
    pub omega: OmegaSpec,
    /// Truncated power-law degree exponent (density `k^-gamma`).
    pub gamma: f64,
    /// Smallest sampled degree.
    pub k_min: f64,
    /// Largest sampled degree.
    pub k_max: f64,
    /// RNG seed.
    pub seed: u64,
}

impl Default for PpConfig {
    fn default() -> Self {
        PpConfig {
            n: 16_000,
            n_hat: 10,
            omega: OmegaSpec::Ratio(10.0),
            gamma: 2.0,
            k_min: 15.0,
            k_max: 150.0,
            seed: 0,
        }
    }
}

/// How the intra/inter propensities are specified.
#[derive(Clone, Copy, Debug)]
pub enum OmegaSpec {
    /// Explicit `(omega_in, omega_out)`.
    Explicit { omega_in: f64, omega_out: f64 },
    /// Ratio `r = omega_in / omega_out`, normalized so the *expected* edge
    /// propensity over ordered community pairs is 1:
    /// `omega_out = n_hat / (r + n_hat - 1)`, `omega_in = r * omega_out`.
    Ratio(f64),
    /// Interpolation `lambda in [0, 1]` between featureless (`lambda = 0`,
    /// all propensities 1) and fully separated (`lambda = 1`):
    /// `omega_in = lambda * n_hat + (1 - lambda)`, `omega_out = 1 - lambda`.
    Interpolate(f64),
}

impl OmegaSpec {
    /// Resolves to concrete `(omega_in, omega_out)` for `n_hat` communities.
    pub fn resolve(&self, n_hat: usize) -> Result<(f64, f64)> {
        let nh = n_hat as f64;
        let (win, wout) = match *self {
            OmegaSpec::Explicit { omega_in, omega_out } => (omega_in, omega_out),
            OmegaSpec::Ratio(r) => {
                if !(r > 0.0) {
                    return Err(Error::Input("omega ratio must be positive".into()));
                }
                let wout = nh / (r + nh - 1.0);
                (r * wout, wout)
            }
            OmegaSpec::Interpolate(l) => {
                if !(0.0..=1.0).contains(&l) {
                    return Err(Error::Input("lambda must lie in [0, 1]".into()));
                }
                (l * nh + (1.0 - l), 1.0 - l)
            }
        };
        if win < 0.0 || wout < 0.0 || !win.is_finite() || !wout.is_finite() {
            return Err(Error::Input("propensities must be finite and nonnegative".into()));
        }
        Ok((win, wout))
    }
}

/// Samples from the truncated power law with density `~ k^-gamma` on
/// `[k_min, k_max]` by inverse-transform sampling.
fn power_law_sample<R: Rng>(gamma: f64, k_min: f64, k_max: f64, rng: &mut R) -> f64 {
    let u: f64 = rng.gen_range(0.0..1.0);
    if (gamma - 1.0).abs() < 1e-12 {
        // CDF ~ log k.
        (k_min.ln() + u * (k_max.ln() - k_min.ln())).exp()
    } else {
        let a = 1.0 - gamma;
        let lo = k_min.powf(a);
        let hi = k_max.powf(a);
        (lo + u * (hi - lo)).powf(1.0 / a)
    }
}

/// Degree-corrected planted-partition graph.
///
/// Nodes are assigned round-robin (`i mod n_hat`), target degrees are drawn
/// from the truncated power law, and each unordered pair is an independent
/// Bernoulli edge with `P = 1 - exp(-lambda_ij)`,
/// `lambda_ij = omega_{g_i g_j} k_i k_j / 2m` (the Poisson multigraph of the
/// model, collapsed to a simple graph).
pub fn gen_pp(cfg: &PpConfig) -> Result<PlantedGraph> {
    if cfg.n == 0 || cfg.n_hat == 0 {
        return Err(Error::Input("n and n_hat must be positive".into()));
    }
    if cfg.n_hat > cfg.n {
        return Err(Error::Input("n_hat cannot exceed n".into()));
    }
    if !(cfg.k_min > 0.0) || cfg.k_max < cfg.k_min {
        return Err(Error::Input("need 0 < k_min <= k_max".into()));
    }
    let (omega_in, omega_out) = cfg.omega.resolve(cfg.n_hat)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);

    let labels: Vec<usize> = (0..cfg.n).map(|i| i % cfg.n_hat).collect();
    let k: Vec<f64> = (0..cfg.n)
        .map(|_| power_law_sample(cfg.gamma, cfg.k_min, cfg.k_max, &mut rng))
        .collect();
    let two_m: f64 = k.iter().sum();

    let mut edges = Vec::new();
    for i in 0..cfg.n {
        for j in (i + 1)..cfg.n {
            let omega = if labels[i] == labels[j] { omega_in } else { omega_out };
            let lambda = omega * k[i] * k[j] / two_m;
            let p = 1.0 - (-lambda).exp();
            if p > 0.0 && rng.gen_bool(p.min(1.0)) {
                edges.push((i, j));
            }
        }
    }
    let graph = Graph::from_edges(cfg.n, &edges)?;
    let reference = Partition::new(labels, cfg.n_hat)?;
    Ok(PlantedGraph { graph, reference })
}

/// LFR-style benchmark parameters.
#[derive(Clone, Debug)]
pub struct LfrConfig {
    /// Number of nodes.
    pub n: usize,
    /// Fraction of each node's stubs pointing outside its community.
    pub mu: f64,
    /// Community-size power-law exponent.
    pub size_exponent: f64,
    /// Community size range.
    pub size_min: usize,
    pub size_max: usize,
    /// Degree power-law exponent.
    pub degree_exponent: f64,
    /// Degree range.
    pub k_min: usize,
    pub k_max: usize,
    /// RNG seed.
    pub seed: u64,
}

impl Default for LfrConfig {
    fn default() -> Self {
        LfrConfig {
            n: 1000,
            mu: 0.1,
            size_exponent: 1.0,
            size_min: 10,
            size_max: 50,
            degree_exponent: 2.0,
            k_min: 10,
            k_max: 50,
            seed: 0,
        }
    }
}

/// LFR-style benchmark: power-law community sizes and degrees, mixing
/// fraction `mu`, wired by intra- and inter-community stub matching.
///
/// Construction:
/// 1. community sizes drawn from the truncated power law until they cover
///    `n` (the last size clipped to fit; re-drawn if below `size_min`),
/// 2. degrees drawn per node, internal stubs `ceil((1 - mu) k)`,
/// 3. nodes assigned to communities in decreasing internal-degree order,
///    greedily into the community with most spare capacity whose size
///    exceeds the node's internal degree (a node must find enough distinct
///    intra-community partners),
/// 4. intra stubs matched uniformly inside each community and inter stubs
///    matched globally; self-loops/duplicates are dropped and the pairing
///    reshuffled for a bounded number of rounds, then odd leftovers are
///    repaired by `+-1` stub (logged).
pub fn gen_lfr_style(cfg: &LfrConfig) -> Result<PlantedGraph> {
    if cfg.n == 0 {
        return Err(Error::Input("n must be positive".into()));
    }
    if !(0.0..=1.0).contains(&cfg.mu) {
        return Err(Error::Input("mu must lie in [0, 1]".into()));
    }
    if cfg.size_min == 0 || cfg.size_max < cfg.size_min || cfg.size_max > cfg.n {
        return Err(Error::Input("need 0 < size_min <= size_max <= n".into()));
    }
    if cfg.k_min == 0 || cfg.k_max < cfg.k_min || cfg.k_max >= cfg.n {
        return Err(Error::Input("need 0 < k_min <= k_max < n".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);

    // 1. Community sizes covering n exactly.
    let mut sizes: Vec<usize> = Vec::new();
    let mut covered = 0usize;
    while covered < cfg.n {
        let mut s = power_law_sample(
            cfg.size_exponent,
            cfg.size_min as f64,
            cfg.size_max as f64 + 1.0,
            &mut rng,
        )
        .floor() as usize;
        s = s.clamp(cfg.size_min, cfg.size_max);
        if covered + s > cfg.n {
            let rest = cfg.n - covered;
            if rest >= cfg.size_min {
                s = rest;
            } else {
                // Fold the remainder into the previous community.
                if let Some(last) = sizes.last_mut() {
                    *last += rest;
                    covered += rest;
                    continue;
                } else {
                    s = rest; // single community smaller than size_min
                }
            }
        }
        sizes.push(s);
        covered += s;
    }
    let n_hat = sizes.len();

    // 2. Degrees and internal stub targets.
    let degrees: Vec<usize> = (0..cfg.n)
        .map(|_| {
            power_law_sample(
                cfg.degree_exponent,
                cfg.k_min as f64,
                cfg.k_max as f64 + 1.0,
                &mut rng,
            )
            .floor() as usize
        })
        .map(|k| k.clamp(cfg.k_min, cfg.k_max))
        .collect();
    let internal: Vec<usize> = degrees
        .iter()
        .map(|&k| ((1.0 - cfg.mu) * k as f64).ceil() as usize)
        .collect();

    // 3. Assignment: hardest nodes (largest internal degree) first, into the
    // community with the most spare room among those that can host them.
    let mut order: Vec<usize> = (0..cfg.n).collect();
    order.sort_by(|&a, &b| internal[b].cmp(&internal[a]).then(a.cmp(&b)));
    let mut room: Vec<usize> = sizes.clone();
    let mut labels = vec![usize::MAX; cfg.n];
    for &i in &order {
        let mut target: Option<usize> = None;
        for c in 0..n_hat {
            if room[c] == 0 || sizes[c] <= internal[i] {
                continue; // needs internal[i] distinct partners besides itself
            }
            if target.map_or(true, |t| room[c] > room[t]) {
                target = Some(c);
            }
        }
        let c = match target {
            Some(c) => c,
            None => {
                // No community is both roomy and large enough: take the
                // largest community with room and clip the internal degree.
                let c = (0..n_hat)
                    .filter(|&c| room[c] > 0)
                    .max_by_key(|&c| sizes[c])
                    .expect("sizes sum to n, so some community has room");
                debug!("lfr: node {i} internal degree {} clipped to fit community of size {}", internal[i], sizes[c]);
                c
            }
        };
        labels[i] = c;
        room[c] -= 1;
    }
    let internal: Vec<usize> = (0..cfg.n)
        .map(|i| internal[i].min(sizes[labels[i]] - 1))
        .collect();

    // 4. Stub matching.
    let mut edges: Vec<(usize, usize)> = Vec::new();
    let mut intra_stubs: Vec<Vec<usize>> = vec![Vec::new(); n_hat];
    for i in 0..cfg.n {
        for _ in 0..internal[i] {
            intra_stubs[labels[i]].push(i);
        }
    }
    let mut inter_stubs: Vec<usize> = Vec::new();
    for i in 0..cfg.n {
        for _ in 0..(degrees[i] - internal[i]) {
            inter_stubs.push(i);
        }
    }
    for stubs in intra_stubs.iter_mut() {
        match_stubs(stubs, &mut edges, None, &mut rng);
    }
    match_stubs(&mut inter_stubs, &mut edges, Some(&labels), &mut rng);

    let graph = Graph::from_edges(cfg.n, &edges)?;
    let reference = Partition::new(labels, n_hat)?;
    Ok(PlantedGraph { graph, reference })
}

/// Pairs up stubs uniformly; rejects self-loops, duplicate pairs and (when
/// `forbid_same` labels are given) same-community pairs by reshuffling the
/// leftovers for a bounded number of rounds. An odd leftover stub is dropped
/// with a log message (the realized degree is then off by one).
fn match_stubs<R: Rng>(
    stubs: &mut Vec<usize>,
    edges: &mut Vec<(usize, usize)>,
    forbid_same: Option<&[usize]>,
    rng: &mut R,
) {
    let mut taken: std::collections::HashSet<(usize, usize)> =
        edges.iter().map(|&(u, v)| (u.min(v), u.max(v))).collect();
    if stubs.len() % 2 == 1 {
        let dropped = stubs.pop().unwrap();
        debug!("stub matching: odd stub count, dropping one stub of node {dropped}");
    }
    for round in 0..20 {
        stubs.shuffle(rng);
        let mut leftovers = Vec::new();
        for pair in stubs.chunks(2) {
            let (u, v) = (pair[0], pair[1]);
            let key = (u.min(v), u.max(v));
            let same_forbidden = forbid_same.map_or(false, |l| l[u] == l[v]);
            if u == v || taken.contains(&key) || same_forbidden {
                leftovers.push(u);
                leftovers.push(v);
            } else {
                taken.insert(key);
                edges.push(key);
            }
        }
        *stubs = leftovers;
        if stubs.is_empty() {
            return;
        }
        if round == 19 {
            warn!(
                "stub matching: {} stubs unmatched after reshuffling; realized degrees are off by one",
                stubs.len()
            );
        }
    }
}

/// Multiscale chain parameters.
#[derive(Clone, Debug)]
pub struct MultiscaleConfig {
    /// Number of blocks in the chain.
    pub n_blocks: usize,
    /// RNG seed (used by the random blocks).
    pub seed: u64,
}

impl Default for MultiscaleConfig {
    fn default() -> Self {
        MultiscaleConfig { n_blocks: 6, seed: 0 }
    }
}

/// Multiscale chain: a sequence of structurally different blocks at doubling
/// sizes — block 0 is a 10-clique, block 1 a 20-clique, and every further
/// block `b` is an Erdős–Rényi graph `G(s, 20/s)` of size `s = 10 * 2^b`
/// (expected degree about 20). Consecutive blocks are joined by a single
/// bridge edge with uniformly chosen endpoints, so the planted communities
/// (one per block) sit at genuinely different size and density scales while
/// every pair of non-consecutive blocks stays disconnected.
pub fn gen_multiscale(cfg: &MultiscaleConfig) -> Result<PlantedGraph> {
    if cfg.n_blocks == 0 {
        return Err(Error::Input("need at least one block".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut edges: Vec<(usize, usize)> = Vec::new();
    let mut labels: Vec<usize> = Vec::new();
    let mut block_ranges: Vec<(usize, usize)> = Vec::new();
    let mut offset = 0usize;

    for b in 0..cfg.n_blocks {
        let size = 10usize << b; // 10, 20, 40, 80, 160, 320, ...
        let start = offset;
        if b < 2 {
            // A single clique on the whole block.
            for u in 0..size {
                for v in (u + 1)..size {
                    edges.push((start + u, start + v));
                }
            }
        } else {
            // Sparse random block G(size, 20/size).
            let p = (20.0 / size as f64).min(1.0);
            for u in 0..size {
                for v in (u + 1)..size {
                    if rng.gen_bool(p) {
                        edges.push((start + u, start + v));
                    }
                }
            }
        }
        labels.extend(std::iter::repeat(b).take(size));
        block_ranges.push((start, start + size));
        offset += size;
    }

    // Single uniform bridge between consecutive blocks.
    for w in block_ranges.windows(2) {
        let (a0, a1) = w[0];
        let (b0, b1) = w[1];
        let u = rng.gen_range(a0..a1);
        let v = rng.gen_range(b0..b1);
        edges.push((u, v));
    }

    let graph = Graph::from_edges(offset, &edges)?;
    let reference = Partition::new(labels, cfg.n_blocks)?;
    Ok(PlantedGraph { graph, reference })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn omega_ratio_normalization() {
        // r = 10, n_hat = 4: omega_out = 4 / 13, omega_in = 40 / 13.
        let (win, wout) = OmegaSpec::Ratio(10.0).resolve(4).unwrap();
        assert!((wout - 4.0 / 13.0).abs() < 1e-15);
        assert!((win - 40.0 / 13.0).abs() < 1e-15);
        // Average propensity over the n_hat^2 ordered community pairs is 1.
        let avg = (4.0 * win + 12.0 * wout) / 16.0;
        assert!((avg - 1.0).abs() < 1e-12);
    }

    #[test]
    fn omega_interpolation_endpoints() {
        let (win, wout) = OmegaSpec::Interpolate(0.0).resolve(5).unwrap();
        assert_eq!((win, wout), (1.0, 1.0)); // featureless
        let (win, wout) = OmegaSpec::Interpolate(1.0).resolve(5).unwrap();
        assert_eq!((win, wout), (5.0, 0.0)); // fully separated
        assert!(OmegaSpec::Interpolate(1.5).resolve(5).is_err());
        assert!(OmegaSpec::Ratio(0.0).resolve(5).is_err());
    }

    #[test]
    fn pp_round_robin_reference_and_determinism() {
        let cfg = PpConfig {
            n: 200,
            n_hat: 4,
            seed: 3,
            ..Default::default()
        };
        let a = gen_pp(&cfg).unwrap();
        let b = gen_pp(&cfg).unwrap();
        assert_eq!(a.reference.labels(), b.reference.labels());
        assert_eq!(a.graph.edge_count(), b.graph.edge_count());
        for i in 0..200 {
            assert_eq!(a.reference.label(i), i % 4);
        }
        let other = gen_pp(&PpConfig { seed: 4, ..cfg }).unwrap();
        assert_ne!(a.graph.edge_count(), other.graph.edge_count());
    }

    #[test]
    fn pp_degrees_and_assortativity_track_parameters() {
        let cfg = PpConfig {
            n: 1200,
            n_hat: 4,
            omega: OmegaSpec::Ratio(10.0),
            seed: 5,
            ..Default::default()
        };
        let pp = gen_pp(&cfg).unwrap();
        let g = &pp.graph;
        // Mean degree close to the power-law mean (~38 for gamma = 2 on
        // [15, 150]); edge collapsing loses a little.
        let mean = g.two_m() as f64 / g.n_nodes() as f64;
        assert!((25.0..50.0).contains(&mean), "mean degree {mean}");
        // Intra edges dominate: with r = 10 and 4 groups, omega_in / (sum)
        // puts ~77% of edges inside communities.
        let mut intra = 0usize;
        for (u, v) in g.edges() {
            if pp.reference.label(u) == pp.reference.label(v) {
                intra += 1;
            }
        }
        let frac = intra as f64 / g.edge_count() as f64;
        assert!(frac > 0.6, "intra fraction {frac}");
    }

    #[test]
    fn pp_interpolate_zero_is_featureless() {
        let cfg = PpConfig {
            n: 800,
            n_hat: 4,
            omega: OmegaSpec::Interpolate(0.0),
            seed: 9,
            ..Default::default()
        };
        let pp = gen_pp(&cfg).unwrap();
        let mut intra = 0usize;
        for (u, v) in pp.graph.edges() {
            if pp.reference.label(u) == pp.reference.label(v) {
                intra += 1;
            }
        }
        // Featureless: intra fraction near 1 / n_hat = 0.25.
        let frac = intra as f64 / pp.graph.edge_count() as f64;
        assert!((0.15..0.35).contains(&frac), "intra fraction {frac}");
    }

    #[test]
    fn lfr_respects_sizes_degrees_and_mixing() {
        let cfg = LfrConfig {
            n: 1000,
            mu: 0.1,
            seed: 2,
            ..Default::default()
        };
        let lfr = gen_lfr_style(&cfg).unwrap();
        let g = &lfr.graph;
        assert_eq!(g.n_nodes(), 1000);
        // Community sizes within bounds (last may absorb a remainder).
        let sizes = lfr.reference.community_sizes();
        for &s in &sizes {
            assert!(s >= cfg.size_min && s <= cfg.size_max + cfg.size_min);
        }
        assert_eq!(sizes.iter().sum::<usize>(), 1000);
        // Degrees within bounds, allowing -1 for dropped odd stubs and
        // duplicate-collapse slack.
        for i in 0..1000 {
            let d = g.degree(i);
            assert!(d + 3 >= cfg.k_min && d <= cfg.k_max, "degree {d} of node {i}");
        }
        // Global mixing close to mu.
        let mut inter = 0usize;
        for (u, v) in g.edges() {
            if lfr.reference.label(u) != lfr.reference.label(v) {
                inter += 1;
            }
        }
        let mix = inter as f64 / g.edge_count() as f64;
        assert!(
            (mix - 0.1).abs() < 0.05,
            "realized mixing {mix} far from mu = 0.1"
        );
    }

    #[test]
    fn lfr_is_deterministic_given_seed() {
        let cfg = LfrConfig {
            n: 300,
            seed: 11,
            ..Default::default()
        };
        let a = gen_lfr_style(&cfg).unwrap();
        let b = gen_lfr_style(&cfg).unwrap();
        assert_eq!(a.reference.labels(), b.reference.labels());
        let ea: Vec<_> = a.graph.edges().collect();
        let eb: Vec<_> = b.graph.edges().collect();
        assert_eq!(ea, eb);
    }

    #[test]
    fn multiscale_has_six_blocks_totaling_630_nodes() {
        let ms = gen_multiscale(&MultiscaleConfig::default()).unwrap();
        assert_eq!(ms.graph.n_nodes(), 630); // 10+20+40+80+160+320
        assert_eq!(ms.reference.n_hat(), 6);
        let sizes = ms.reference.community_sizes();
        assert_eq!(sizes, vec![10, 20, 40, 80, 160, 320]);
        // Exactly one bridge between consecutive blocks, none further apart.
        let mut cross = vec![vec![0usize; 6]; 6];
        for (u, v) in ms.graph.edges() {
            let (a, b) = (ms.reference.label(u), ms.reference.label(v));
            if a != b {
                cross[a.min(b)][a.max(b)] += 1;
            }
        }
        for a in 0..6 {
            for b in (a + 1)..6 {
                if b == a + 1 {
                    assert_eq!(cross[a][b], 1, "blocks {a},{b}");
                } else {
                    assert_eq!(cross[a][b], 0, "blocks {a},{b}");
                }
            }
        }
    }

    #[test]
    fn multiscale_block_structures() {
        let ms = gen_multiscale(&MultiscaleConfig::default()).unwrap();
        let g = &ms.graph;
        // Block 0 = one 10-clique: internal degree 9.
        for i in 0..10 {
            let internal = g
                .neighbors(i)
                .iter()
                .filter(|&&v| ms.reference.label(v) == 0)
                .count();
            assert_eq!(internal, 9);
        }
        // Block 1 = one 20-clique: internal degree 19.
        for i in 10..30 {
            let internal = g
                .neighbors(i)
                .iter()
                .filter(|&&v| ms.reference.label(v) == 1)
                .count();
            assert_eq!(internal, 19);
        }
        // Blocks 2.. are Erdős–Rényi with expected degree near 20 (p = 20/s):
        // mean internal degree (s-1)·20/s, Monte-Carlo slack on one draw.
        for (block, lo, hi) in [(2usize, 30usize, 70usize), (3, 70, 150), (4, 150, 310)] {
            let size = (hi - lo) as f64;
            let mean: f64 = (lo..hi)
                .map(|i| {
                    g.neighbors(i)
                        .iter()
                        .filter(|&&v| ms.reference.label(v) == block)
                        .count() as f64
                })
                .sum::<f64>()
                / size;
            assert!((14.0..26.0).contains(&mean), "block {block} mean degree {mean}");
            // Not a clique union: internal degrees must vary.
            let degrees: Vec<usize> = (lo..hi)
                .map(|i| {
                    g.neighbors(i)
                        .iter()
                        .filter(|&&v| ms.reference.label(v) == block)
                        .count()
                })
                .collect();
            assert!(degrees.iter().any(|&d| d != degrees[0]), "block {block} looks regular");
        }
        assert!(gen_multiscale(&MultiscaleConfig { n_blocks: 0, seed: 0 }).is_err());
    }
}
