//! Types shared by the three partition solvers, plus the spectral diffusion
//! operator that Allen–Cahn and MBO both build on.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::energy::{energy, AffinityMatrix, EliminatedAffinity};
use crate::error::{Error, Result};
use crate::graph::{Graph, Partition, Volumes};
use crate::spectral::{sym_eig_dense_matrix, LaplacianSpectrum};

/// Which solver drives the partition updates inside the pipeline.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolverKind {
    /// Graph mean-curvature flow: greedy local moves by exact energy deltas.
    Mcf,
    /// Allen–Cahn gradient flow on soft assignments.
    Ac,
    /// MBO threshold dynamics: diffuse, then threshold.
    Mbo,
}

impl SolverKind {
    /// Lowercase name used in CLI flags and result JSON.
    pub fn name(&self) -> &'static str {
        match self {
            SolverKind::Mcf => "mcf",
            SolverKind::Ac => "ac",
            SolverKind::Mbo => "mbo",
        }
    }
}

/// Outcome of one solver invocation at fixed affinities.
#[derive(Clone, Debug)]
pub struct SolverRun {
    /// Final partition.
    pub partition: Partition,
    /// Exact energy of `partition` under the affinities the solver was given.
    pub energy: f64,
    /// Per-iteration energy trace. Mean-curvature flow and MBO record the
    /// exact energy after each sweep / outer step; Allen–Cahn records the
    /// Ginzburg–Landau energy of the soft assignment.
    pub trace: Vec<f64>,
    /// Iterations actually performed.
    pub iterations: usize,
    /// True when the solver reached its own fixed-point criterion rather
    /// than the iteration cap.
    pub converged: bool,
}

/// Number of Laplacian eigenpairs the diffusion-based solvers retain:
/// `min(2 n_hat, n)` unless overridden, clamped to `[1, n]`.
pub fn flow_m_eig(n: usize, n_hat: usize, override_m: Option<usize>) -> usize {
    override_m
        .unwrap_or_else(|| (2 * n_hat).min(n))
        .min(n)
        .max(1)
}

/// Trivial solver outcome when only one community is allowed.
pub(crate) fn single_community_run(
    graph: &Graph,
    volumes: &Volumes,
    w: &AffinityMatrix,
) -> SolverRun {
    let partition = Partition::all_in_one(graph.n_nodes());
    let e = energy(graph, volumes, &partition, w);
    SolverRun {
        partition,
        energy: e,
        trace: vec![e],
        iterations: 0,
        converged: true,
    }
}

/// Spectral data for the linear flow `U_t = L U sigma_hat - forcing`, shared
/// by the Allen–Cahn and MBO solvers.
///
/// Holds the retained Laplacian eigenpairs, the full eigendecomposition of
/// `sigma_hat`, and the pieces of the volume forcing. The implicit part of a
/// time step diagonalizes in the product basis: `U_hat = V_L^T U V_s` turns
/// `U - dt * L U sigma_hat` into entrywise divisions by
/// `coeff - dt * lam_L(i) * lam_s(j)`.
pub(crate) struct FlowOperator {
    /// Retained Laplacian eigenvectors, `n x m_eig`.
    pub v_l: DMatrix<f64>,
    /// Retained Laplacian eigenvalues, ascending.
    pub lam_l: Vec<f64>,
    /// Eigenvectors of `sigma_hat`, `n_hat x n_hat`.
    pub v_s: DMatrix<f64>,
    /// Eigenvalues of `sigma_hat`, ascending.
    pub lam_s: Vec<f64>,
    /// `exp(-W)` entrywise: the volume-forcing kernel. Uses the original
    /// affinities, not `sigma_hat`, so the forcing matches the exact energy's
    /// volume term for any diagonal.
    pub e_w: DMatrix<f64>,
    /// Volume degrees as a column vector.
    pub k: DVector<f64>,
    /// Original affinity diagonal `W_aa`.
    pub diag_w: DVector<f64>,
    /// Total volume `2m`.
    pub two_m: f64,
}

impl FlowOperator {
    /// Builds the operator for a finite `sigma_hat` (cap infinities first)
    /// from a precomputed Laplacian spectrum. The spectrum depends only on
    /// the graph, so callers that re-solve under changing affinities (the
    /// affinity-learning loop) compute it once and reuse it here.
    pub fn build(
        lap: &LaplacianSpectrum,
        volumes: &Volumes,
        elim: &EliminatedAffinity,
    ) -> Result<Self> {
        let n_hat = elim.n_hat();
        if elim.sigma_entries().iter().any(|v| !v.is_finite()) {
            return Err(Error::Input(
                "diffusion operator requires finite sigma_hat; cap infinite affinities first"
                    .into(),
            ));
        }
        let sig_mat = DMatrix::from_row_slice(n_hat, n_hat, elim.sigma_entries());
        let sig = sym_eig_dense_matrix(&sig_mat)?;
        let e_w = DMatrix::from_fn(n_hat, n_hat, |a, b| (-elim.w(a, b)).exp());
        Ok(FlowOperator {
            v_l: lap.vectors().clone(),
            lam_l: lap.values().to_vec(),
            v_s: sig.vectors().clone(),
            lam_s: sig.values().to_vec(),
            e_w,
            k: DVector::from_column_slice(volumes.degrees()),
            diag_w: DVector::from_column_slice(elim.diag()),
            two_m: volumes.two_m(),
        })
    }

    /// All eigenvalue products `lam_L(i) * lam_s(j)` of the diffusion map.
    pub fn products(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.lam_l.len() * self.lam_s.len());
        for &ll in &self.lam_l {
            for &ls in &self.lam_s {
                out.push(ll * ls);
            }
        }
        out
    }

    /// Volume forcing `(1/2m) k (k^T U) e^{-sigma_hat} + k diag_w^T`.
    pub fn forcing(&self, u: &DMatrix<f64>) -> DMatrix<f64> {
        let y = u.transpose() * &self.k; // n_hat vector
        let z = &self.e_w * y; // e_w is symmetric
        let mut f = &self.k * z.transpose();
        f /= self.two_m;
        f += &self.k * self.diag_w.transpose();
        f
    }

    /// Solves `coeff * U - dt * L U sigma_hat = F` in the retained spectral
    /// basis and maps back, discarding components outside the span.
    pub fn implicit_solve(&self, f: &DMatrix<f64>, coeff: f64, dt: f64) -> Result<DMatrix<f64>> {
        let mut f_hat = self.v_l.transpose() * f * &self.v_s;
        for (i, &ll) in self.lam_l.iter().enumerate() {
            for (j, &ls) in self.lam_s.iter().enumerate() {
                let pivot = coeff - dt * ll * ls;
                if pivot.abs() < 1e-12 {
                    return Err(Error::Config(format!(
                        "implicit diffusion pivot vanished (eigenvalue product {:.6e}); \
                         choose a smaller dt",
                        ll * ls
                    )));
                }
                f_hat[(i, j)] /= pivot;
            }
        }
        Ok(&self.v_l * f_hat * self.v_s.transpose())
    }
}
