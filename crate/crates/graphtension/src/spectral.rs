//! Eigendecompositions used by the diffusion-based solvers.
//!
//! The graph side needs the `m_eig` smallest eigenpairs of the combinatorial
//! Laplacian `L = diag(k) - A`. They come from Lanczos iteration with full
//! reorthogonalization and explicit deflation locking, which keeps repeated
//! eigenvalues honest (disconnected graphs have one zero mode per component
//! and all of them matter to the solvers). The community side needs complete
//! decompositions of small `n_hat x n_hat` symmetric matrices, which go
//! through a dense solver directly.
//!
//! For degenerate eigenvalues any orthonormal basis of the eigenspace is
//! acceptable; downstream code depends only on the spanned subspace.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::graph::Graph;

/// Below this node count the "iterative" path just calls the dense solver;
/// a Krylov space of nearly full dimension buys nothing.
const DENSE_CUTOFF: usize = 32;

/// The `m_eig` smallest Laplacian eigenpairs, ascending.
#[derive(Clone, Debug)]
pub struct LaplacianSpectrum {
    values: Vec<f64>,
    vectors: DMatrix<f64>,
}

impl LaplacianSpectrum {
    /// Eigenvalues, ascending.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Eigenvectors as columns, aligned with [`LaplacianSpectrum::values`].
    pub fn vectors(&self) -> &DMatrix<f64> {
        &self.vectors
    }

    /// Number of retained eigenpairs.
    pub fn len(&self) -> usize {
        self.values.len()
    }

    /// True when no eigenpairs were requested.
    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Full spectrum of a small dense symmetric matrix, ascending.
#[derive(Clone, Debug)]
pub struct DenseSpectrum {
    values: Vec<f64>,
    vectors: DMatrix<f64>,
}

impl DenseSpectrum {
    /// Eigenvalues, ascending.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Eigenvectors as columns, aligned with [`DenseSpectrum::values`].
    pub fn vectors(&self) -> &DMatrix<f64> {
        &self.vectors
    }
}

/// `out = L v` with `L = diag(deg) - A`, using the graph's structural degrees.
pub fn laplacian_matvec(graph: &Graph, v: &DVector<f64>, out: &mut DVector<f64>) {
    let n = graph.n_nodes();
    debug_assert_eq!(v.len(), n);
    for i in 0..n {
        let mut acc = graph.degree(i) as f64 * v[i];
        for &j in graph.neighbors(i) {
            acc -= v[j];
        }
        out[i] = acc;
    }
}

/// `L U` for a dense tall matrix `U` (one column per community).
pub fn laplacian_mul_matrix(graph: &Graph, u: &DMatrix<f64>) -> DMatrix<f64> {
    let n = graph.n_nodes();
    let cols = u.ncols();
    debug_assert_eq!(u.nrows(), n);
    let mut out = DMatrix::zeros(n, cols);
    for i in 0..n {
        let deg = graph.degree(i) as f64;
        for c in 0..cols {
            let mut acc = deg * u[(i, c)];
            for &j in graph.neighbors(i) {
                acc -= u[(j, c)];
            }
            out[(i, c)] = acc;
        }
    }
    out
}

/// Dense Laplacian matrix (for oracles and the small-graph shortcut).
pub fn dense_laplacian(graph: &Graph) -> DMatrix<f64> {
    let n = graph.n_nodes();
    let mut l = DMatrix::zeros(n, n);
    for i in 0..n {
        l[(i, i)] = graph.degree(i) as f64;
        for &j in graph.neighbors(i) {
            l[(i, j)] = -1.0;
        }
    }
    l
}

/// Computes the `m_eig` smallest eigenpairs of the graph Laplacian.
///
/// Deterministic given `seed`. Each returned pair satisfies
/// `||L v - lambda v|| <= tol`; failure to converge within the restart budget
/// reports the best residual reached.
pub fn smallest_eigenpairs(
    graph: &Graph,
    m_eig: usize,
    tol: f64,
    seed: u64,
) -> Result<LaplacianSpectrum> {
    let n = graph.n_nodes();
    if m_eig == 0 {
        return Err(Error::Input("m_eig must be at least 1".into()));
    }
    if m_eig > n {
        return Err(Error::Input(format!(
            "m_eig = {m_eig} exceeds the node count {n}"
        )));
    }
    if !(tol > 0.0) {
        return Err(Error::Input("eigensolver tolerance must be positive".into()));
    }
    if n <= DENSE_CUTOFF || m_eig + 2 >= n {
        let spec = sym_eig_dense_matrix(&dense_laplacian(graph))?;
        return Ok(LaplacianSpectrum {
            values: spec.values[..m_eig].to_vec(),
            vectors: spec.vectors.columns(0, m_eig).into_owned(),
        });
    }
    lanczos_smallest(graph, m_eig, tol, seed)
}

/// Lanczos with full reorthogonalization and deflation locking.
///
/// The zero eigenspace (component indicators) is locked exactly up front, so
/// the iteration only ever hunts nonzero eigenvalues. Restart policy: the
/// unconverged Ritz directions of one sweep seed the next sweep's start
/// vector, so progress on clustered eigenvalues carries over. Every third
/// restart draws a fresh random start instead, which is what discovers
/// additional copies of degenerate eigenvalues (a single Krylov space
/// contains one direction per distinct eigenvalue). On small problems a
/// late-restart fallback expands the basis to the whole deflated complement,
/// making the Rayleigh-Ritz step exact.
fn lanczos_smallest(
    graph: &Graph,
    m_eig: usize,
    tol: f64,
    seed: u64,
) -> Result<LaplacianSpectrum> {
    let n = graph.n_nodes();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut locked: Vec<(f64, DVector<f64>)> = Vec::new();
    // The zero eigenspace is known in closed form: one indicator vector per
    // connected component. Seed it as exactly-locked pairs. A single Krylov
    // space carries one direction per distinct eigenvalue, so recovering a
    // k-fold zero by restarts alone costs k sweeps and can lose the race
    // against faster-converging interior pairs, returning a set that is not
    // the true smallest.
    for comp in connected_components(graph) {
        if locked.len() == m_eig {
            break;
        }
        let scale = 1.0 / (comp.len() as f64).sqrt();
        let mut v = DVector::zeros(n);
        for i in comp {
            v[i] = scale;
        }
        locked.push((0.0, v));
    }
    let mut carry: Option<DVector<f64>> = None;
    let mut last_unlocked = f64::INFINITY;
    let max_restarts = 24.max(m_eig + 8);
    const EXACT_FALLBACK_RESTART: usize = 8;
    const EXACT_FALLBACK_MAX_DIM: usize = 2048;

    for restart in 0..max_restarts {
        let remaining = m_eig - locked.len();
        if remaining == 0 {
            break;
        }
        let free_dim = n - locked.len();
        // Bulk-edge eigenvalues (no spectral gap above the wanted window, the
        // typical situation for degree-heterogeneous graphs) need Krylov
        // spaces several times larger than the number of wanted pairs, so the
        // schedule scales with m_eig rather than with the remaining count.
        let mut dim = (6 * m_eig + 40 + restart * (3 * m_eig + 10)).min(free_dim);
        if restart >= EXACT_FALLBACK_RESTART && free_dim <= EXACT_FALLBACK_MAX_DIM {
            dim = free_dim;
        }
        log::debug!(
            "lanczos n={n} m_eig={m_eig} restart={restart} locked={} dim={dim}",
            locked.len()
        );

        // Start vector: carried Ritz information when available, otherwise
        // random; always orthogonal to everything already locked.
        let mut v = match carry.take() {
            Some(c) if restart % 3 != 0 => c,
            _ => random_unit(&mut rng, n),
        };
        orthogonalize(&mut v, locked.iter().map(|(_, q)| q));
        if v.norm() < 1e-10 {
            v = random_unit(&mut rng, n);
            orthogonalize(&mut v, locked.iter().map(|(_, q)| q));
            if v.norm() < 1e-10 {
                continue;
            }
        }
        v /= v.norm();

        // Lanczos recurrence with full reorthogonalization. Basis vectors are
        // kept and every new vector is re-projected against all of them (and
        // the locked pairs), trading memory for numerical reliability.
        let mut basis: Vec<DVector<f64>> = Vec::with_capacity(dim);
        let mut alpha = Vec::with_capacity(dim);
        let mut beta: Vec<f64> = Vec::with_capacity(dim);
        basis.push(v);
        let mut w = DVector::zeros(n);
        for j in 0..dim {
            laplacian_matvec(graph, &basis[j], &mut w);
            if j > 0 {
                w.axpy(-beta[j - 1], &basis[j - 1], 1.0);
            }
            let a = basis[j].dot(&w);
            alpha.push(a);
            w.axpy(-a, &basis[j], 1.0);
            // Two reorthogonalization sweeps ("twice is enough").
            for _ in 0..2 {
                orthogonalize(&mut w, basis.iter());
                orthogonalize(&mut w, locked.iter().map(|(_, q)| q));
            }
            let b = w.norm();
            if j + 1 == dim || b < 1e-12 {
                break;
            }
            beta.push(b);
            basis.push(&w / b);
        }

        // Ritz pairs from the tridiagonal matrix.
        let k = alpha.len();
        let mut t = DMatrix::zeros(k, k);
        for j in 0..k {
            t[(j, j)] = alpha[j];
            if j + 1 < k {
                t[(j, j + 1)] = beta[j];
                t[(j + 1, j)] = beta[j];
            }
        }
        let spec = sym_eig_dense_matrix(&t)?;

        // Lock converged pairs from the low end. Only the smallest
        // `remaining` Ritz values are candidates so a converged pair from
        // higher in the spectrum cannot displace a missing small one.
        // Unconverged candidates are summed into the next restart's start
        // vector so the work spent on them is not discarded.
        let mut carry_acc = DVector::zeros(n);
        let mut sweep_unlocked = f64::INFINITY;
        for idx in 0..k.min(remaining) {
            let theta = spec.values[idx];
            let s = spec.vectors.column(idx);
            let mut y = DVector::zeros(n);
            for (j, q) in basis.iter().enumerate() {
                y.axpy(s[j], q, 1.0);
            }
            orthogonalize(&mut y, locked.iter().map(|(_, q)| q));
            let norm = y.norm();
            if norm < 1e-8 {
                continue;
            }
            y /= norm;
            laplacian_matvec(graph, &y, &mut w);
            w.axpy(-theta, &y, 1.0);
            let res = w.norm();
            log::debug!("  ritz idx={idx} theta={theta:.6e} residual={res:.3e}");
            if res <= tol {
                locked.push((theta, y));
            } else {
                sweep_unlocked = sweep_unlocked.min(res);
                carry_acc += &y;
            }
        }
        last_unlocked = sweep_unlocked;
        orthogonalize(&mut carry_acc, locked.iter().map(|(_, q)| q));
        let carry_norm = carry_acc.norm();
        if carry_norm > 1e-10 {
            carry = Some(carry_acc / carry_norm);
        }
    }

    if locked.len() < m_eig {
        return Err(Error::Convergence {
            residual: last_unlocked,
            restarts: max_restarts,
        });
    }
    locked.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut vectors = DMatrix::zeros(n, m_eig);
    let mut values = Vec::with_capacity(m_eig);
    for (c, (val, vec)) in locked.into_iter().enumerate() {
        values.push(val);
        vectors.set_column(c, &vec);
    }
    Ok(LaplacianSpectrum { values, vectors })
}

/// Connected components in breadth-first order (deterministic).
fn connected_components(graph: &Graph) -> Vec<Vec<usize>> {
    let n = graph.n_nodes();
    let mut seen = vec![false; n];
    let mut comps = Vec::new();
    let mut queue = std::collections::VecDeque::new();
    for s in 0..n {
        if seen[s] {
            continue;
        }
        seen[s] = true;
        queue.push_back(s);
        let mut comp = Vec::new();
        while let Some(u) = queue.pop_front() {
            comp.push(u);
            for &v in graph.neighbors(u) {
                if !seen[v] {
                    seen[v] = true;
                    queue.push_back(v);
                }
            }
        }
        comps.push(comp);
    }
    comps
}

fn random_unit(rng: &mut ChaCha8Rng, n: usize) -> DVector<f64> {
    let mut v = DVector::from_fn(n, |_, _| rng.gen_range(-1.0..1.0));
    let norm = v.norm();
    if norm > 0.0 {
        v /= norm;
    }
    v
}

/// Subtracts the projection of `v` onto each `q` (classical Gram-Schmidt).
fn orthogonalize<'a, I: Iterator<Item = &'a DVector<f64>>>(v: &mut DVector<f64>, qs: I) {
    for q in qs {
        let c = q.dot(v);
        if c != 0.0 {
            v.axpy(-c, q, 1.0);
        }
    }
}

/// Full eigendecomposition of a small symmetric matrix given row-major
/// entries. Inputs are symmetrized by averaging with the transpose first.
pub fn sym_eig_dense(dim: usize, entries: &[f64]) -> Result<DenseSpectrum> {
    if dim == 0 || entries.len() != dim * dim {
        return Err(Error::Input(format!(
            "expected {dim}x{dim} matrix, got {} entries",
            entries.len()
        )));
    }
    if entries.iter().any(|v| !v.is_finite()) {
        return Err(Error::Input(
            "dense eigendecomposition requires finite entries".into(),
        ));
    }
    let m = DMatrix::from_row_slice(dim, dim, entries);
    sym_eig_dense_matrix(&m)
}

/// Dense symmetric eigendecomposition of an `nalgebra` matrix, ascending.
pub fn sym_eig_dense_matrix(m: &DMatrix<f64>) -> Result<DenseSpectrum> {
    let sym = (m + m.transpose()) * 0.5;
    let eig = sym.symmetric_eigen();
    let dim = eig.eigenvalues.len();
    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = DMatrix::zeros(dim, dim);
    for (c, &i) in order.iter().enumerate() {
        vectors.set_column(c, &eig.eigenvectors.column(i));
    }
    Ok(DenseSpectrum { values, vectors })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Graph;

    fn random_graph(rng: &mut ChaCha8Rng, n: usize, p: f64) -> Graph {
        let mut edges = Vec::new();
        for u in 0..n {
            for v in (u + 1)..n {
                if rng.gen_bool(p) {
                    edges.push((u, v));
                }
            }
        }
        Graph::from_edges(n, &edges).unwrap()
    }

    #[test]
    fn p3_spectrum_is_0_1_3() {
        let g = Graph::from_edges(3, &[(0, 1), (1, 2)]).unwrap();
        let spec = smallest_eigenpairs(&g, 3, 1e-10, 1).unwrap();
        let expect = [0.0, 1.0, 3.0];
        for (v, e) in spec.values().iter().zip(expect) {
            assert!((v - e).abs() < 1e-10, "eigenvalue {v} vs {e}");
        }
    }

    #[test]
    fn lanczos_matches_dense_oracle_on_random_graphs() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for trial in 0..6 {
            let n = rng.gen_range(50..140);
            let g = random_graph(&mut rng, n, 0.08);
            let m_eig = rng.gen_range(3..12);
            let spec = smallest_eigenpairs(&g, m_eig, 1e-9, 42 + trial).unwrap();
            let dense = sym_eig_dense_matrix(&dense_laplacian(&g)).unwrap();
            for i in 0..m_eig {
                assert!(
                    (spec.values()[i] - dense.values()[i]).abs() <= 1e-8,
                    "trial {trial}: eigenvalue {i}: {} vs dense {}",
                    spec.values()[i],
                    dense.values()[i]
                );
            }
            // Residuals and orthonormality.
            let v = spec.vectors();
            let gram = v.transpose() * v;
            for a in 0..m_eig {
                for b in 0..m_eig {
                    let want = if a == b { 1.0 } else { 0.0 };
                    assert!((gram[(a, b)] - want).abs() < 1e-8);
                }
                let col = DVector::from_column_slice(v.column(a).as_slice());
                let mut lv = DVector::zeros(n);
                laplacian_matvec(&g, &col, &mut lv);
                lv.axpy(-spec.values()[a], &col, 1.0);
                assert!(lv.norm() <= 1e-8, "residual {}", lv.norm());
            }
        }
    }

    #[test]
    fn repeated_zero_eigenvalues_from_components_are_all_found() {
        // Three disjoint cliques of 15 nodes: the kernel of L has dimension 3.
        let mut edges = Vec::new();
        for c in 0..3 {
            let base = c * 15;
            for u in 0..15 {
                for v in (u + 1)..15 {
                    edges.push((base + u, base + v));
                }
            }
        }
        let g = Graph::from_edges(45, &edges).unwrap();
        let spec = smallest_eigenpairs(&g, 5, 1e-9, 7).unwrap();
        for i in 0..3 {
            assert!(spec.values()[i].abs() <= 1e-8, "zero mode {i} missing");
        }
        // Fourth eigenvalue of a K15 Laplacian is 15.
        assert!((spec.values()[3] - 15.0).abs() < 1e-7);
    }

    #[test]
    fn eigensolver_is_deterministic_given_seed() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let g = random_graph(&mut rng, 80, 0.1);
        let a = smallest_eigenpairs(&g, 6, 1e-9, 123).unwrap();
        let b = smallest_eigenpairs(&g, 6, 1e-9, 123).unwrap();
        assert_eq!(a.values(), b.values());
        assert_eq!(a.vectors(), b.vectors());
    }

    #[test]
    fn sym_eig_dense_reconstructs_input() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let dim = rng.gen_range(2..9);
            let mut entries = vec![0.0; dim * dim];
            for a in 0..dim {
                for b in a..dim {
                    let v = rng.gen_range(-3.0..3.0);
                    entries[a * dim + b] = v;
                    entries[b * dim + a] = v;
                }
            }
            let spec = sym_eig_dense(dim, &entries).unwrap();
            let lam = DMatrix::from_diagonal(&DVector::from_vec(spec.values().to_vec()));
            let rec = spec.vectors() * lam * spec.vectors().transpose();
            let orig = DMatrix::from_row_slice(dim, dim, &entries);
            assert!((rec - orig).norm() <= 1e-10);
            // Ascending order.
            for i in 1..dim {
                assert!(spec.values()[i] >= spec.values()[i - 1]);
            }
        }
    }

    #[test]
    fn sym_eig_dense_symmetrizes_by_averaging() {
        // Asymmetric input: eigenvalues must match those of (M + M^T)/2.
        let entries = [0.0, 2.0, 0.0, 0.0];
        let spec = sym_eig_dense(2, &entries).unwrap();
        assert!((spec.values()[0] - -1.0).abs() < 1e-12);
        assert!((spec.values()[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn smallest_eigenpairs_validates_input() {
        let g = Graph::from_edges(3, &[(0, 1)]).unwrap();
        assert!(smallest_eigenpairs(&g, 0, 1e-9, 1).is_err());
        assert!(smallest_eigenpairs(&g, 4, 1e-9, 1).is_err());
        assert!(smallest_eigenpairs(&g, 2, 0.0, 1).is_err());
    }
}
