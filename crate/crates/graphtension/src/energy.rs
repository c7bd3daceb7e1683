//! The surface-tension energy and its exact algebra.
//!
//! For a partition `g` and symmetric affinity matrix `W` the energy is
//!
//! ```text
//! E(g, W) = sum_{a,b} [ W_ab * Cut(a,b) + exp(-W_ab) * vol(a) * vol(b) / 2m ]
//! ```
//!
//! with ordered-pair cuts. Entries of `W` live in `(-inf, +inf]`; `+inf` is a
//! hard separation sentinel. Two conventions make the extended reals safe:
//! `inf * 0 := 0` in cut terms (an infinite affinity across an empty cut
//! costs nothing) and `exp(-inf) := 0` (IEEE already does this). Minimizing
//! `E` over `g` and `W` jointly is maximum-likelihood inference for the
//! degree-corrected stochastic block model.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Graph, Partition, PartitionStats, Volumes};

/// Symmetric community affinity matrix with entries in `(-inf, +inf]`.
///
/// `W = -log(omega)` for block-model rate parameters `omega in [0, +inf)`;
/// `W = +inf` encodes `omega = 0`, a pair of communities that never connect.
#[derive(Clone, Debug, PartialEq)]
pub struct AffinityMatrix {
    n_hat: usize,
    w: Vec<f64>,
}

impl AffinityMatrix {
    /// Builds from a square row-major matrix, enforcing symmetry and the
    /// entry range (`NaN` and `-inf` are rejected).
    pub fn from_flat(n_hat: usize, w: Vec<f64>) -> Result<Self> {
        if n_hat == 0 || w.len() != n_hat * n_hat {
            return Err(Error::Input(format!(
                "affinity matrix must be {n_hat}x{n_hat}, got {} entries",
                w.len()
            )));
        }
        for (idx, &v) in w.iter().enumerate() {
            if v.is_nan() || v == f64::NEG_INFINITY {
                return Err(Error::Input(format!(
                    "affinity entry ({}, {}) is {v}; entries must lie in (-inf, +inf]",
                    idx / n_hat,
                    idx % n_hat
                )));
            }
        }
        for a in 0..n_hat {
            for b in (a + 1)..n_hat {
                if w[a * n_hat + b] != w[b * n_hat + a] {
                    return Err(Error::Input(format!(
                        "affinity matrix must be symmetric; entries ({a},{b}) and ({b},{a}) differ"
                    )));
                }
            }
        }
        Ok(AffinityMatrix { n_hat, w })
    }

    /// Builds from nested rows.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n_hat = rows.len();
        let mut flat = Vec::with_capacity(n_hat * n_hat);
        for row in rows {
            if row.len() != n_hat {
                return Err(Error::Input("affinity matrix must be square".into()));
            }
            flat.extend_from_slice(row);
        }
        Self::from_flat(n_hat, flat)
    }

    /// Matrix with `diag` on the diagonal and `off` everywhere else.
    pub fn constant(n_hat: usize, diag: f64, off: f64) -> Self {
        let mut w = vec![off; n_hat * n_hat];
        for a in 0..n_hat {
            w[a * n_hat + a] = diag;
        }
        AffinityMatrix { n_hat, w }
    }

    /// The all-zero matrix (`omega = 1` everywhere).
    pub fn zeros(n_hat: usize) -> Self {
        AffinityMatrix {
            n_hat,
            w: vec![0.0; n_hat * n_hat],
        }
    }

    /// Number of communities.
    pub fn n_hat(&self) -> usize {
        self.n_hat
    }

    /// Entry `(a, b)`.
    pub fn get(&self, a: usize, b: usize) -> f64 {
        self.w[a * self.n_hat + b]
    }

    /// Sets entry `(a, b)` and its mirror.
    pub fn set_sym(&mut self, a: usize, b: usize, v: f64) {
        self.w[a * self.n_hat + b] = v;
        self.w[b * self.n_hat + a] = v;
    }

    /// Row-major entries.
    pub fn entries(&self) -> &[f64] {
        &self.w
    }

    /// True if any entry is the `+inf` sentinel.
    pub fn has_infinite(&self) -> bool {
        self.w.iter().any(|v| v.is_infinite())
    }

    /// Largest finite entry, if any.
    pub fn max_finite(&self) -> Option<f64> {
        self.w
            .iter()
            .copied()
            .filter(|v| v.is_finite())
            .fold(None, |acc, v| Some(acc.map_or(v, |m: f64| m.max(v))))
    }

    /// Copy with `+inf` entries replaced by a finite cap. Solvers that need a
    /// spectral decomposition of `W` work on the capped copy; exact energy
    /// bookkeeping keeps the sentinel.
    pub fn cap_infinite(&self, cap: f64) -> AffinityMatrix {
        AffinityMatrix {
            n_hat: self.n_hat,
            w: self
                .w
                .iter()
                .map(|&v| if v.is_infinite() { cap } else { v })
                .collect(),
        }
    }

    /// Copy with `+inf` entries replaced by `factor * max_finite()`, the
    /// reset rule the EM loop applies before handing `W` back to a solver.
    /// Fails if no entry is finite.
    pub fn reset_infinite(&self, factor: f64) -> Result<AffinityMatrix> {
        if !self.has_infinite() {
            return Ok(self.clone());
        }
        let max = self.max_finite().ok_or_else(|| {
            Error::Degenerate("all affinity entries are infinite; graph has no usable cut".into())
        })?;
        let replacement = factor * max;
        Ok(AffinityMatrix {
            n_hat: self.n_hat,
            w: self
                .w
                .iter()
                .map(|&v| if v.is_infinite() { replacement } else { v })
                .collect(),
        })
    }

    /// Wire representation: numbers, with `+inf` spelled as the string
    /// `"inf"` so JSON can carry it.
    pub fn to_wire(&self) -> Vec<Vec<WireEntry>> {
        (0..self.n_hat)
            .map(|a| {
                (0..self.n_hat)
                    .map(|b| {
                        let v = self.get(a, b);
                        if v.is_infinite() {
                            WireEntry::Tag("inf".into())
                        } else {
                            WireEntry::Num(v)
                        }
                    })
                    .collect()
            })
            .collect()
    }

    /// Parses the wire representation produced by [`AffinityMatrix::to_wire`].
    pub fn from_wire(rows: &[Vec<WireEntry>]) -> Result<Self> {
        let parsed: Vec<Vec<f64>> = rows
            .iter()
            .map(|row| {
                row.iter()
                    .map(|e| match e {
                        WireEntry::Num(v) => Ok(*v),
                        WireEntry::Tag(s) if s == "inf" => Ok(f64::INFINITY),
                        WireEntry::Tag(s) => {
                            Err(Error::Input(format!("unknown affinity token {s:?}")))
                        }
                    })
                    .collect()
            })
            .collect::<Result<_>>()?;
        Self::from_rows(&parsed)
    }
}

/// One entry of the JSON wire format for affinity matrices.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum WireEntry {
    /// Finite value.
    Num(f64),
    /// The string `"inf"`.
    Tag(String),
}

/// `W` split into a zero-diagonal surface-tension part and its diagonal.
///
/// `sigma_hat(a,b) = W_ab - W_aa/2 - W_bb/2`. Substituting into the energy
/// leaves the partition problem unchanged up to per-community volume terms
/// weighted by `diag_w`; see [`diagonal_identity_gap`] for the exact algebra.
#[derive(Clone, Debug, PartialEq)]
pub struct EliminatedAffinity {
    n_hat: usize,
    sigma: Vec<f64>,
    diag_w: Vec<f64>,
}

impl EliminatedAffinity {
    /// Number of communities.
    pub fn n_hat(&self) -> usize {
        self.n_hat
    }

    /// Surface tension `sigma_hat(a, b)`; the diagonal is exactly zero.
    pub fn sigma(&self, a: usize, b: usize) -> f64 {
        self.sigma[a * self.n_hat + b]
    }

    /// Row-major `sigma_hat` entries.
    pub fn sigma_entries(&self) -> &[f64] {
        &self.sigma
    }

    /// Original diagonal `W_aa`.
    pub fn diag_w(&self, a: usize) -> f64 {
        self.diag_w[a]
    }

    /// Original diagonal as a slice.
    pub fn diag(&self) -> &[f64] {
        &self.diag_w
    }

    /// Original affinity entry `W_ab = sigma_hat(a, b) + (W_aa + W_bb) / 2`.
    pub fn w(&self, a: usize, b: usize) -> f64 {
        self.sigma(a, b) + 0.5 * (self.diag_w[a] + self.diag_w[b])
    }

    /// `sigma_hat` as an affinity matrix (e.g. for well-posedness checks).
    pub fn sigma_matrix(&self) -> AffinityMatrix {
        AffinityMatrix {
            n_hat: self.n_hat,
            w: self.sigma.clone(),
        }
    }
}

/// Splits `W` into `sigma_hat` and the diagonal. The diagonal must be finite;
/// off-diagonal `+inf` entries stay `+inf` in `sigma_hat`.
pub fn eliminate_diagonal(w: &AffinityMatrix) -> Result<EliminatedAffinity> {
    let nh = w.n_hat();
    for a in 0..nh {
        if !w.get(a, a).is_finite() {
            return Err(Error::Input(format!(
                "diagonal affinity W({a},{a}) must be finite to eliminate the diagonal"
            )));
        }
    }
    let mut sigma = vec![0.0; nh * nh];
    let mut diag_w = vec![0.0; nh];
    for a in 0..nh {
        diag_w[a] = w.get(a, a);
        for b in 0..nh {
            sigma[a * nh + b] = w.get(a, b) - 0.5 * w.get(a, a) - 0.5 * w.get(b, b);
        }
    }
    Ok(EliminatedAffinity { n_hat: nh, sigma, diag_w })
}

/// `inf * 0 := 0` multiplication for cut terms.
#[inline]
fn xr_mul(w: f64, cut: f64) -> f64 {
    if cut == 0.0 {
        0.0
    } else {
        w * cut
    }
}

/// Difference of extended reals where `(+inf) - (+inf) := 0`: a move between
/// two states that are both infinitely expensive is treated as neutral.
#[inline]
fn xr_sub(p: f64, q: f64) -> f64 {
    if p.is_infinite() && q.is_infinite() {
        0.0
    } else {
        p - q
    }
}

/// Energy from precomputed statistics in `O(n_hat^2)`.
pub fn energy_from_stats(stats: &PartitionStats, two_m: f64, w: &AffinityMatrix) -> f64 {
    let nh = stats.n_hat();
    assert_eq!(w.n_hat(), nh, "affinity matrix has wrong community count");
    let mut total = 0.0;
    for a in 0..nh {
        let va = stats.vol(a);
        for b in 0..nh {
            total += xr_mul(w.get(a, b), stats.cut(a, b));
            let vb = stats.vol(b);
            if va != 0.0 && vb != 0.0 {
                total += (-w.get(a, b)).exp() * va * vb / two_m;
            }
        }
    }
    total
}

/// The exact surface-tension energy `E(g, W)`.
pub fn energy(graph: &Graph, volumes: &Volumes, partition: &Partition, w: &AffinityMatrix) -> f64 {
    let stats = PartitionStats::new(graph, volumes, partition);
    energy_from_stats(&stats, volumes.two_m(), w)
}

/// Closed-form optimal affinities for a fixed partition:
/// `omega*(a,b) = 2m * Cut(a,b) / (vol(a) * vol(b))`, `W* = -log omega*`.
/// Pairs with an empty cut (including empty communities) get the `+inf`
/// sentinel.
pub fn optimal_w_from_stats(stats: &PartitionStats, two_m: f64) -> AffinityMatrix {
    let nh = stats.n_hat();
    let mut w = vec![0.0; nh * nh];
    for a in 0..nh {
        for b in 0..nh {
            let c = stats.cut(a, b);
            w[a * nh + b] = if c == 0.0 {
                f64::INFINITY
            } else {
                -(two_m * c / (stats.vol(a) * stats.vol(b))).ln()
            };
        }
    }
    AffinityMatrix { n_hat: nh, w }
}

/// Optimal affinities for `partition`; see [`optimal_w_from_stats`].
pub fn optimal_w(graph: &Graph, volumes: &Volumes, partition: &Partition) -> AffinityMatrix {
    let stats = PartitionStats::new(graph, volumes, partition);
    optimal_w_from_stats(&stats, volumes.two_m())
}

/// Profile energy `E(g, W*(g))` evaluated directly from statistics:
/// `sum_{cut > 0} Cut * (1 - log(2m * Cut / (vol vol)))`. Always finite.
pub fn optimal_energy_from_stats(stats: &PartitionStats, two_m: f64) -> f64 {
    let nh = stats.n_hat();
    let mut total = 0.0;
    for a in 0..nh {
        for b in 0..nh {
            let c = stats.cut(a, b);
            if c > 0.0 {
                total += c * (1.0 - (two_m * c / (stats.vol(a) * stats.vol(b))).ln());
            }
        }
    }
    total
}

/// Profile energy `E(g, W*(g))` for a partition.
pub fn optimal_energy(graph: &Graph, volumes: &Volumes, partition: &Partition) -> f64 {
    let stats = PartitionStats::new(graph, volumes, partition);
    optimal_energy_from_stats(&stats, volumes.two_m())
}

/// Exact energy change if node `i` moves from its current community to `to`,
/// computed from current statistics in `O(n_hat)` per candidate without
/// touching the rest of the graph.
///
/// Derivation: with `x = stats.x(i)` (neighbor counts before the move) the
/// cut part telescopes to `2 * (S(to) - S(from))` where `S(c) = sum_b
/// W(c,b) * x(b)`; the volume part is
/// `(2 k_i (t(to) - t(from)) + k_i^2 (e(to,to) + e(from,from) - 2 e(to,from))) / 2m`
/// with `t(c) = sum_b vol(b) * exp(-W(c,b))` and `e = exp(-W)`.
pub fn move_delta_from_stats(
    stats: &PartitionStats,
    volumes: &Volumes,
    w: &AffinityMatrix,
    i: usize,
    from: usize,
    to: usize,
) -> f64 {
    let nh = stats.n_hat();
    assert!(from < nh && to < nh, "community index outside 0..{nh}");
    if from == to {
        return 0.0;
    }
    let x = stats.x(i);
    let mut s_to = 0.0;
    let mut s_from = 0.0;
    let mut t_to = 0.0;
    let mut t_from = 0.0;
    for b in 0..nh {
        s_to += xr_mul(w.get(to, b), x[b]);
        s_from += xr_mul(w.get(from, b), x[b]);
        t_to += stats.vol(b) * (-w.get(to, b)).exp();
        t_from += stats.vol(b) * (-w.get(from, b)).exp();
    }
    let k = volumes.degree(i);
    let cut_part = 2.0 * xr_sub(s_to, s_from);
    let vol_part = (2.0 * k * (t_to - t_from)
        + k * k
            * ((-w.get(to, to)).exp() + (-w.get(from, from)).exp()
                - 2.0 * (-w.get(to, from)).exp()))
        / volumes.two_m();
    cut_part + vol_part
}

/// Energy change if node `i` moved to community `a`, leaving everything else
/// fixed. Exact: matches `energy(after) - energy(before)` for finite `W`.
///
/// Recomputes statistics from scratch; solvers use
/// [`move_delta_from_stats`] against incrementally maintained statistics.
pub fn move_delta(
    graph: &Graph,
    volumes: &Volumes,
    partition: &Partition,
    w: &AffinityMatrix,
    i: usize,
    a: usize,
) -> f64 {
    assert!(i < graph.n_nodes(), "node {i} outside graph");
    assert!(a < partition.n_hat(), "community {a} outside 0..{}", partition.n_hat());
    assert_eq!(w.n_hat(), partition.n_hat(), "affinity matrix has wrong community count");
    let stats = PartitionStats::new(graph, volumes, partition);
    move_delta_from_stats(&stats, volumes, w, i, partition.label(i), a)
}

/// Relative energy gap `(E_alg - E_ref) / |E_ref|`. Lower is better; zero or
/// negative means the algorithm matched or beat the reference.
pub fn score(e_alg: f64, e_ref: f64) -> Result<f64> {
    if e_ref == 0.0 {
        return Err(Error::UndefinedScore);
    }
    Ok((e_alg - e_ref) / e_ref.abs())
}

/// Outcome of the surface-tension well-posedness checks.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct WellPosedness {
    /// All entries nonnegative.
    pub nonnegative: bool,
    /// Zero diagonal.
    pub zero_diagonal: bool,
    /// Triangle inequality `s(a,g) + s(g,b) >= s(a,b)` for all triples.
    pub triangle: bool,
}

impl WellPosedness {
    /// True when all three conditions hold, i.e. threshold dynamics for this
    /// tension matrix are well posed.
    pub fn is_well_posed(&self) -> bool {
        self.nonnegative && self.zero_diagonal && self.triangle
    }
}

/// Checks the Esedoglu–Otto style conditions on a tension matrix.
pub fn check_well_posedness(sigma: &AffinityMatrix) -> WellPosedness {
    let nh = sigma.n_hat();
    let nonnegative = sigma.entries().iter().all(|&v| v >= 0.0);
    let zero_diagonal = (0..nh).all(|a| sigma.get(a, a) == 0.0);
    let mut triangle = true;
    'outer: for a in 0..nh {
        for b in 0..nh {
            for g in 0..nh {
                if sigma.get(a, g) + sigma.get(g, b) < sigma.get(a, b) {
                    triangle = false;
                    break 'outer;
                }
            }
        }
    }
    WellPosedness {
        nonnegative,
        zero_diagonal,
        triangle,
    }
}

/// Residual of the diagonal-elimination identity
///
/// ```text
/// sum_{a,b} W_ab Cut(a,b)
///   = sum_{a != b} sigma_hat(a,b) Cut(a,b) + sum_a W_aa vol(a)
/// ```
///
/// for the given statistics (zero up to rounding for finite `W`). Exposed for
/// tests and diagnostics.
pub fn diagonal_identity_gap(stats: &PartitionStats, w: &AffinityMatrix) -> Result<f64> {
    let elim = eliminate_diagonal(w)?;
    let nh = stats.n_hat();
    let mut lhs = 0.0;
    let mut rhs = 0.0;
    for a in 0..nh {
        rhs += w.get(a, a) * stats.vol(a);
        for b in 0..nh {
            lhs += xr_mul(w.get(a, b), stats.cut(a, b));
            if a != b {
                rhs += xr_mul(elim.sigma(a, b), stats.cut(a, b));
            }
        }
    }
    Ok(xr_sub(lhs, rhs))
}
