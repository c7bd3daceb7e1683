//! Run harness: JSON-serializable results, single detection runs, and
//! seed-swept batches.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::energy::{optimal_energy, score, WireEntry};
use crate::error::{Error, Result};
use crate::eval::nmi;
use crate::graph::{Graph, Partition, Volumes};
use crate::pipeline::{detect, PipelineConfig};

/// Relative energy gap, or `"undefined"` when the reference energy is zero.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ScoreValue {
    Value(f64),
    Tag(String),
}

/// One detection run, as written to result JSON.
///
/// Everything except `runtime_s` is deterministic for a fixed graph, config
/// and seed: `params` uses sorted-key JSON maps, and infinite affinities
/// serialize as the string `"inf"`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunResult {
    /// Profile energy of the returned partition.
    pub energy: f64,
    /// Relative gap to the reference partition's energy; absent without a
    /// reference, `"undefined"` when the reference energy is zero.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub score: Option<ScoreValue>,
    /// Normalized mutual information against the reference; absent without
    /// a reference.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nmi: Option<f64>,
    /// Non-empty community count of the returned partition.
    pub n_communities: usize,
    /// Learned affinity matrix, row-major; `+inf` entries appear as `"inf"`.
    pub w_matrix: Vec<Vec<WireEntry>>,
    /// Wall-clock seconds.
    pub runtime_s: f64,
    /// Master seed of the run.
    pub seed: u64,
    /// Solver name: `mcf`, `ac` or `mbo`.
    pub solver: String,
    /// Echo of the pipeline and solver parameters.
    pub params: serde_json::Value,
}

fn params_json(cfg: &PipelineConfig) -> serde_json::Value {
    serde_json::json!({
        "n_hat_expected": cfg.n_hat_expected,
        "penalty_coeff": cfg.penalty_coeff,
        "inf_reset_factor": cfg.inf_reset_factor,
        "em_max_rounds": cfg.em_max_rounds,
        "warm_start": cfg.warm_start,
        "mcf": {
            "max_iters": cfg.mcf.max_iters,
            "serial": cfg.mcf.serial,
        },
        "ac": {
            "epsilon": cfg.ac.epsilon,
            "c": cfg.ac.c,
            "dt": cfg.ac.dt,
            "m_eig": cfg.ac.m_eig,
            "stop_tol": cfg.ac.stop_tol,
            "max_iters": cfg.ac.max_iters,
            "inf_cap": cfg.ac.inf_cap,
        },
        "mbo": {
            "outer_steps": cfg.mbo.outer_steps,
            "tau": cfg.mbo.tau,
            "dt_inner": cfg.mbo.dt_inner,
            "m_eig": cfg.mbo.m_eig,
            "threshold_rule": cfg.mbo.threshold_rule,
            "inf_cap": cfg.mbo.inf_cap,
            "max_inner": cfg.mbo.max_inner,
        },
    })
}

/// Runs the full detection pipeline and packages the result.
///
/// With a reference partition the result carries the relative energy gap
/// (`"undefined"` if the reference energy is zero) and the NMI.
pub fn run_detect(
    graph: &Graph,
    reference: Option<&Partition>,
    cfg: &PipelineConfig,
) -> Result<(RunResult, Partition)> {
    let start = Instant::now();
    let volumes = Volumes::from_graph(graph);
    let outcome = detect(graph, &volumes, cfg)?;
    let runtime_s = start.elapsed().as_secs_f64();

    let (score_v, nmi_v) = match reference {
        Some(r) => {
            let e_ref = optimal_energy(graph, &volumes, r);
            let s = match score(outcome.energy, e_ref) {
                Ok(v) => ScoreValue::Value(v),
                Err(Error::UndefinedScore) => ScoreValue::Tag("undefined".into()),
                Err(e) => return Err(e),
            };
            (Some(s), Some(nmi(&outcome.partition, r)?))
        }
        None => (None, None),
    };

    let result = RunResult {
        energy: outcome.energy,
        score: score_v,
        nmi: nmi_v,
        n_communities: outcome.partition.nonempty_count(),
        w_matrix: outcome.w.to_wire(),
        runtime_s,
        seed: cfg.seed,
        solver: cfg.solver.name().to_string(),
        params: params_json(cfg),
    };
    Ok((result, outcome.partition))
}

/// Derives the seed of trial `t` from the master seed.
pub fn trial_seed(master: u64, t: usize) -> u64 {
    master ^ (t as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

/// Worker cap for [`batch_detect`]: the `GRAPHTENSION_THREADS` environment
/// variable when set (minimum 1), otherwise the machine's parallelism.
pub fn worker_cap() -> usize {
    if let Ok(v) = std::env::var("GRAPHTENSION_THREADS") {
        if let Ok(n) = v.trim().parse::<usize>() {
            return n.max(1);
        }
    }
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

/// Runs `n_trials` independent detections with per-trial seeds
/// `trial_seed(cfg.seed, t)`, in parallel across worker threads.
///
/// Results come back ordered by trial index and are bit-identical to a
/// serial run except for `runtime_s`.
pub fn batch_detect(
    graph: &Graph,
    reference: Option<&Partition>,
    cfg: &PipelineConfig,
    n_trials: usize,
) -> Result<Vec<RunResult>> {
    if n_trials == 0 {
        return Err(Error::Input("need at least one trial".into()));
    }
    let workers = worker_cap().min(n_trials);
    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<Result<RunResult>>>> = Mutex::new((0..n_trials).map(|_| None).collect());

    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let t = next.fetch_add(1, Ordering::Relaxed);
                if t >= n_trials {
                    break;
                }
                let mut trial_cfg = cfg.clone();
                trial_cfg.seed = trial_seed(cfg.seed, t);
                let out = run_detect(graph, reference, &trial_cfg).map(|(r, _)| r);
                slots.lock().expect("result mutex poisoned")[t] = Some(out);
            });
        }
    });

    slots
        .into_inner()
        .expect("result mutex poisoned")
        .into_iter()
        .map(|slot| slot.expect("every trial index was claimed"))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::SolverKind;

    fn two_k5() -> (Graph, Partition) {
        let mut edges = Vec::new();
        for base in [0usize, 5] {
            for u in 0..5 {
                for v in (u + 1)..5 {
                    edges.push((base + u, base + v));
                }
            }
        }
        edges.push((4, 5));
        let g = Graph::from_edges(10, &edges).unwrap();
        let r = Partition::new(vec![0, 0, 0, 0, 0, 1, 1, 1, 1, 1], 2).unwrap();
        (g, r)
    }

    #[test]
    fn run_detect_fills_reference_metrics() {
        let (g, r) = two_k5();
        let cfg = PipelineConfig {
            n_hat_expected: 2,
            solver: SolverKind::Mcf,
            seed: 5,
            ..Default::default()
        };
        let (res, partition) = run_detect(&g, Some(&r), &cfg).unwrap();
        assert_eq!(res.n_communities, 2);
        assert_eq!(res.nmi, Some(1.0));
        match res.score {
            Some(ScoreValue::Value(v)) => assert!(v.abs() < 1e-12, "score {v}"),
            other => panic!("expected numeric score, got {other:?}"),
        }
        assert_eq!(partition.nonempty_count(), 2);
        assert_eq!(res.solver, "mcf");
        assert_eq!(res.seed, 5);

        // Without a reference the optional fields vanish from the JSON.
        let (res2, _) = run_detect(&g, None, &cfg).unwrap();
        let json = serde_json::to_string(&res2).unwrap();
        assert!(!json.contains("\"score\""));
        assert!(!json.contains("\"nmi\""));
        assert!(json.contains("\"w_matrix\""));
    }

    #[test]
    fn results_are_deterministic_modulo_runtime() {
        let (g, r) = two_k5();
        let cfg = PipelineConfig {
            n_hat_expected: 2,
            seed: 9,
            ..Default::default()
        };
        let (mut a, pa) = run_detect(&g, Some(&r), &cfg).unwrap();
        let (mut b, pb) = run_detect(&g, Some(&r), &cfg).unwrap();
        assert_eq!(pa.labels(), pb.labels());
        a.runtime_s = 0.0;
        b.runtime_s = 0.0;
        assert_eq!(
            serde_json::to_string(&a).unwrap(),
            serde_json::to_string(&b).unwrap()
        );
    }

    #[test]
    fn batch_matches_individual_trials_in_any_thread_count() {
        let (g, r) = two_k5();
        let cfg = PipelineConfig {
            n_hat_expected: 2,
            seed: 3,
            ..Default::default()
        };
        let batch = batch_detect(&g, Some(&r), &cfg, 4).unwrap();
        assert_eq!(batch.len(), 4);
        for (t, res) in batch.iter().enumerate() {
            let mut trial_cfg = cfg.clone();
            trial_cfg.seed = trial_seed(3, t);
            let (solo, _) = run_detect(&g, Some(&r), &trial_cfg).unwrap();
            assert_eq!(res.seed, solo.seed);
            assert_eq!(res.energy, solo.energy);
            assert_eq!(
                serde_json::to_string(&res.w_matrix).unwrap(),
                serde_json::to_string(&solo.w_matrix).unwrap()
            );
        }
        // Distinct seeds per trial.
        let seeds: std::collections::HashSet<u64> = batch.iter().map(|r| r.seed).collect();
        assert_eq!(seeds.len(), 4);
        assert!(batch_detect(&g, None, &cfg, 0).is_err());
    }

    #[test]
    fn undefined_score_serializes_as_string() {
        let v = ScoreValue::Tag("undefined".into());
        assert_eq!(serde_json::to_string(&v).unwrap(), "\"undefined\"");
        let n = ScoreValue::Value(0.25);
        assert_eq!(serde_json::to_string(&n).unwrap(), "0.25");
        let parsed: ScoreValue = serde_json::from_str("\"undefined\"").unwrap();
        assert_eq!(parsed, ScoreValue::Tag("undefined".into()));
    }
}
