//! MBO threshold dynamics: alternating diffusion and thresholding.
//!
//! Instead of resolving the sharp multiwell interface like Allen–Cahn, MBO
//! diffuses the soft assignment under the linear part of the flow,
//!
//! ```text
//! dU/dt = L U sigma_hat - forcing(U),
//! ```
//!
//! for a short time `tau` (a few semi-implicit inner steps with row-wise
//! simplex projection), then snaps every row back to a vertex of the simplex.
//! The threshold either picks the arg-max entry or, by default, weights the
//! row by the interaction matrix `sigma_hat` so that strongly repelled
//! communities are avoided.

use log::debug;
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::ac::{project_rows_to_simplex, SoftAssignment};
use crate::energy::{eliminate_diagonal, energy, AffinityMatrix, EliminatedAffinity};
use crate::error::{Error, Result};
use crate::graph::{Graph, Partition, Volumes};
use crate::solver::{flow_m_eig, single_community_run, FlowOperator, SolverRun};
use crate::spectral::{smallest_eigenpairs, sym_eig_dense_matrix, LaplacianSpectrum};

/// How thresholding turns a diffused row into a hard label.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ThresholdRule {
    /// Pick `argmin_a sum_b sigma_hat(a, b) U_ib`: communities that interact
    /// favourably (negative `sigma_hat`) with the row's current mass win.
    SigmaWeighted,
    /// Plain arg-max of the row.
    Argmax,
}

/// MBO parameters.
#[derive(Clone, Debug)]
pub struct MboConfig {
    /// Number of diffuse–threshold rounds.
    pub outer_steps: usize,
    /// Diffusion time per round; estimated from the spectra when `None`.
    pub tau: Option<f64>,
    /// Inner semi-implicit step size; estimated when `None`.
    pub dt_inner: Option<f64>,
    /// Retained Laplacian eigenpairs; defaults to `min(2 n_hat, n)`.
    pub m_eig: Option<usize>,
    /// Thresholding variant.
    pub threshold_rule: ThresholdRule,
    /// Finite stand-in for `+inf` affinities inside the spectral solve.
    pub inf_cap: f64,
    /// Residual tolerance for the Laplacian eigensolver.
    pub lanczos_tol: f64,
    /// Seed for the initial assignment and tie-breaking.
    pub seed: u64,
    /// Cap on inner steps per round (guards tiny estimated step sizes).
    pub max_inner: usize,
}

impl Default for MboConfig {
    fn default() -> Self {
        MboConfig {
            outer_steps: 100,
            tau: None,
            dt_inner: None,
            m_eig: None,
            threshold_rule: ThresholdRule::SigmaWeighted,
            inf_cap: 50.0,
            lanczos_tol: 1e-9,
            seed: 0,
            max_inner: 1_000,
        }
    }
}

/// Diffusion time and inner step size chosen from the operator spectra.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TimeSteps {
    pub tau: f64,
    pub dt_inner: f64,
}

/// Diffusion time from the eigenvalue products of `L` and `sigma_hat`:
/// interfaces should move but not dissolve, so `tau` is matched to the
/// geometric mean of the fastest and slowest active modes,
/// `tau = 8 / sqrt(max |p| * min nonzero |p|)`. Products below
/// `1e-10 * (1 + max |p|)` count as zero; all-zero products are degenerate.
pub fn tau_from_products(products: &[f64]) -> Result<f64> {
    let max_abs = products.iter().fold(0.0f64, |m, &p| m.max(p.abs()));
    let floor = 1e-10 * (1.0 + max_abs);
    let mut min_nz = f64::INFINITY;
    for &p in products {
        let a = p.abs();
        if a > floor && a < min_nz {
            min_nz = a;
        }
    }
    if max_abs <= floor || !min_nz.is_finite() {
        return Err(Error::Degenerate(
            "all eigenvalue products vanish; diffusion has no time scale".into(),
        ));
    }
    Ok(8.0 / (max_abs * min_nz).sqrt())
}

/// Estimates `(tau, dt_inner)` for a graph/affinity pair the way `mbo_run`
/// does before any overrides:
///
/// * `dt_inner = 0.9 * 2 / lambda_force`, where
///   `lambda_force = (2 sum k_i^2 / 2m) * lambda_max(e^{-W})` bounds
///   the forcing operator, and
/// * `tau` from [`tau_from_products`] over all products of retained
///   Laplacian eigenvalues with `sigma_hat` eigenvalues.
pub fn estimate_time_steps(
    graph: &Graph,
    volumes: &Volumes,
    elim: &EliminatedAffinity,
    m_eig: usize,
    lanczos_tol: f64,
    seed: u64,
) -> Result<TimeSteps> {
    let lap = smallest_eigenpairs(graph, m_eig, lanczos_tol, seed)?;
    let op = FlowOperator::build(&lap, volumes, elim)?;
    let tau = tau_from_products(&op.products())?;
    let dt_inner = dt_inner_from_force(volumes, elim)?;
    Ok(TimeSteps { tau, dt_inner })
}

/// `dt_inner = 0.9 * 2 / lambda_force` (stability bound for the explicitly
/// treated forcing term, with a 10% safety margin). The forcing kernel is
/// `e^{-W}` with the original diagonal, matching [`FlowOperator`].
pub fn dt_inner_from_force(volumes: &Volumes, elim: &EliminatedAffinity) -> Result<f64> {
    let n_hat = elim.n_hat();
    let sum_k2: f64 = volumes.degrees().iter().map(|k| k * k).sum();
    let ew = DMatrix::from_fn(n_hat, n_hat, |a, b| (-elim.w(a, b)).exp());
    let spec = sym_eig_dense_matrix(&ew)?;
    let lam_max = spec
        .values()
        .iter()
        .fold(f64::NEG_INFINITY, |m, &v| m.max(v));
    let lambda_force = (2.0 * sum_k2 / volumes.two_m()) * lam_max;
    if !(lambda_force > 0.0) {
        return Err(Error::Degenerate(
            "forcing operator has no positive spectral bound".into(),
        ));
    }
    Ok(0.9 * 2.0 / lambda_force)
}

/// Diffuses `U` for time `tau`: `ceil(tau / dt)` semi-implicit steps of
/// `dU/dt = L U sigma_hat - forcing(U)`, each followed by row-wise simplex
/// projection.
pub(crate) fn mbo_diffuse(
    op: &FlowOperator,
    u: &DMatrix<f64>,
    tau: f64,
    dt: f64,
    max_inner: usize,
) -> Result<DMatrix<f64>> {
    let mut steps = (tau / dt).ceil() as usize;
    if steps == 0 {
        steps = 1;
    }
    if steps > max_inner {
        debug!("mbo: capping inner diffusion steps {steps} -> {max_inner}");
        steps = max_inner;
    }
    let mut cur = u.clone();
    for _ in 0..steps {
        let mut f = cur.clone();
        f -= op.forcing(&cur) * dt;
        let mut next = op.implicit_solve(&f, 1.0, dt)?;
        project_rows_to_simplex(&mut next);
        cur = next;
    }
    Ok(cur)
}

/// Thresholds each row of `U` to a hard label; ties are broken uniformly.
pub fn mbo_threshold<R: Rng>(
    u: &DMatrix<f64>,
    elim: &EliminatedAffinity,
    rule: ThresholdRule,
    rng: &mut R,
) -> Partition {
    let (n, n_hat) = u.shape();
    let mut labels = Vec::with_capacity(n);
    let mut scores = vec![0.0f64; n_hat];
    let mut ties: Vec<usize> = Vec::with_capacity(n_hat);
    for i in 0..n {
        match rule {
            ThresholdRule::Argmax => {
                for (a, s) in scores.iter_mut().enumerate() {
                    *s = u[(i, a)];
                }
            }
            ThresholdRule::SigmaWeighted => {
                // score(a) = -sum_b sigma_hat(a, b) U_ib; larger is better.
                for (a, s) in scores.iter_mut().enumerate() {
                    let mut acc = 0.0;
                    for b in 0..n_hat {
                        acc += elim.sigma(a, b) * u[(i, b)];
                    }
                    *s = -acc;
                }
            }
        }
        let best = scores.iter().fold(f64::NEG_INFINITY, |m, &v| m.max(v));
        ties.clear();
        for (a, &v) in scores.iter().enumerate() {
            if v == best {
                ties.push(a);
            }
        }
        labels.push(if ties.len() == 1 {
            ties[0]
        } else {
            ties[rng.gen_range(0..ties.len())]
        });
    }
    Partition::new(labels, n_hat).expect("labels come from column indices")
}

/// Runs MBO threshold dynamics at fixed affinities.
///
/// Each outer round diffuses the indicator matrix of the current partition
/// for time `tau` and re-thresholds. Convergence is detected when a
/// partition repeats; the best-energy partition seen is returned.
pub fn mbo_run(
    graph: &Graph,
    volumes: &Volumes,
    w: &AffinityMatrix,
    n_hat: usize,
    init: Option<&Partition>,
    cfg: &MboConfig,
) -> Result<SolverRun> {
    mbo_checks(graph, w, n_hat)?;
    if n_hat == 1 {
        return Ok(single_community_run(graph, volumes, w));
    }
    let m_eig = flow_m_eig(graph.n_nodes(), n_hat, cfg.m_eig);
    let lap = smallest_eigenpairs(graph, m_eig, cfg.lanczos_tol, cfg.seed)?;
    mbo_run_on(graph, volumes, w, n_hat, init, cfg, &lap)
}

/// [`mbo_run`] with a precomputed Laplacian spectrum.
///
/// The spectrum depends only on the graph, so a caller that re-solves under
/// changing affinities (the affinity-learning loop) computes it once and
/// passes it to every round. `lap` must come from the same graph; its column
/// count determines how many diffusion modes are retained.
pub fn mbo_run_on(
    graph: &Graph,
    volumes: &Volumes,
    w: &AffinityMatrix,
    n_hat: usize,
    init: Option<&Partition>,
    cfg: &MboConfig,
    lap: &LaplacianSpectrum,
) -> Result<SolverRun> {
    let n = graph.n_nodes();
    mbo_checks(graph, w, n_hat)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    if n_hat == 1 {
        return Ok(single_community_run(graph, volumes, w));
    }
    if lap.vectors().nrows() != n {
        return Err(Error::Input(format!(
            "Laplacian spectrum has {} rows but the graph has {n} nodes",
            lap.vectors().nrows()
        )));
    }

    let capped = w.cap_infinite(cfg.inf_cap);
    let elim = eliminate_diagonal(&capped)?;
    let op = FlowOperator::build(lap, volumes, &elim)?;

    let tau = match cfg.tau {
        Some(v) if v > 0.0 => v,
        Some(_) => return Err(Error::Config("tau must be positive".into())),
        None => tau_from_products(&op.products())?,
    };
    let dt_est = match cfg.dt_inner {
        Some(v) if v > 0.0 => v,
        Some(_) => return Err(Error::Config("dt_inner must be positive".into())),
        None => dt_inner_from_force(volumes, &elim)?,
    };
    // The implicit solve has pivots 1 - dt * lam_L * lam_sigma; keep dt below
    // the first positive-product singularity so pivots stay away from zero.
    let max_pos = op
        .products()
        .iter()
        .fold(0.0f64, |m, &p| if p > 0.0 { m.max(p) } else { m });
    let dt = if max_pos > 0.0 {
        let cap = 0.9 / max_pos;
        if dt_est > cap {
            debug!("mbo: clamping dt_inner {dt_est} -> {cap} to keep implicit pivots regular");
            cap
        } else {
            dt_est
        }
    } else {
        dt_est
    };

    let mut partition = match init {
        Some(p) => {
            if p.len() != n || p.n_hat() != n_hat {
                return Err(Error::Input(
                    "warm-start partition does not match graph/n_hat".into(),
                ));
            }
            p.clone()
        }
        None => Partition::random(n, n_hat, &mut rng),
    };

    let mut best = partition.clone();
    let mut best_e = energy(graph, volumes, &partition, w);
    let mut trace = vec![best_e];
    let mut seen = vec![partition.labels().to_vec()];
    let mut converged = false;
    let mut iterations = 0;
    for _ in 0..cfg.outer_steps {
        let u = SoftAssignment::from_partition(&partition);
        let diffused = mbo_diffuse(&op, u.matrix(), tau, dt, cfg.max_inner)?;
        partition = mbo_threshold(&diffused, &elim, cfg.threshold_rule, &mut rng);
        iterations += 1;
        let e = energy(graph, volumes, &partition, w);
        trace.push(e);
        if e < best_e {
            best_e = e;
            best = partition.clone();
        }
        if seen.iter().any(|s| s == partition.labels()) {
            converged = true;
            break;
        }
        seen.push(partition.labels().to_vec());
    }

    Ok(SolverRun {
        partition: best,
        energy: best_e,
        trace,
        iterations,
        converged,
    })
}

fn mbo_checks(graph: &Graph, w: &AffinityMatrix, n_hat: usize) -> Result<()> {
    if n_hat == 0 {
        return Err(Error::Input("n_hat must be at least 1".into()));
    }
    if w.n_hat() != n_hat {
        return Err(Error::Input(format!(
            "affinity matrix is {}x{} but n_hat = {n_hat}",
            w.n_hat(),
            w.n_hat()
        )));
    }
    if graph.n_nodes() == 0 {
        return Err(Error::Degenerate("graph has no nodes".into()));
    }
    Ok(())
}
