//! Kernighan-Lin style baseline versus the mean-curvature-flow pipeline.
//!
//! Both minimize the same energy; the KL-style search forces every node to
//! move once per pass (escaping some local minima by accepting uphill moves),
//! while the detection pipeline wraps mean-curvature flow in affinity
//! learning plus split-merge restarts. On planted-partition graphs the
//! learned affinities and the restarts usually matter more than the deeper
//! local search.
//!
//! Run with: `cargo run --release --example kl_vs_mcf`

use graphtension::energy::optimal_energy;
use graphtension::eval::nmi;
use graphtension::generators::{gen_pp, OmegaSpec, PpConfig};
use graphtension::graph::Volumes;
use graphtension::pipeline::{detect, kl_baseline, PipelineConfig};
use graphtension::solver::SolverKind;

fn main() -> graphtension::Result<()> {
    let pp = gen_pp(&PpConfig {
        n: 400,
        n_hat: 4,
        omega: OmegaSpec::Ratio(8.0),
        seed: 2,
        ..Default::default()
    })?;
    let volumes = Volumes::from_graph(&pp.graph);
    let e_ref = optimal_energy(&pp.graph, &volumes, &pp.reference);
    println!(
        "planted partition: {} nodes, {} edges, reference energy {:.3}",
        pp.graph.n_nodes(),
        pp.graph.edge_count(),
        e_ref
    );
    println!("{:<12} {:>12} {:>8} {:>8}", "method", "energy", "nmi", "n_hat");

    for seed in 0..3u64 {
        let kl = kl_baseline(&pp.graph, &volumes, 4, 50, seed)?;
        println!(
            "{:<12} {:>12.3} {:>8.4} {:>8}",
            format!("kl (s{seed})"),
            kl.energy,
            nmi(&kl.partition, &pp.reference)?,
            kl.partition.nonempty_count(),
        );
    }

    for seed in 0..3u64 {
        let cfg = PipelineConfig {
            n_hat_expected: 4,
            solver: SolverKind::Mcf,
            seed,
            ..Default::default()
        };
        let res = detect(&pp.graph, &volumes, &cfg)?;
        println!(
            "{:<12} {:>12.3} {:>8.4} {:>8}",
            format!("mcf (s{seed})"),
            res.energy,
            nmi(&res.partition, &pp.reference)?,
            res.partition.n_hat(),
        );
    }
    Ok(())
}
