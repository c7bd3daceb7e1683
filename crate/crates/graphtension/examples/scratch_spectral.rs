//! Scratch probe (not part of the example suite).

use graphtension::graph::Graph;
use graphtension::spectral::{dense_laplacian, smallest_eigenpairs, sym_eig_dense_matrix};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_graph(rng: &mut ChaCha8Rng, n: usize, p: f64) -> Graph {
    let mut edges = Vec::new();
    for u in 0..n {
        for v in (u + 1)..n {
            if rng.gen_bool(p) {
                edges.push((u, v));
            }
        }
    }
    if edges.is_empty() {
        edges.push((0, 1 % n.max(2)));
    }
    Graph::from_edges(n, &edges).expect("valid random graph")
}

fn main() {
    let mut rng = ChaCha8Rng::seed_from_u64(19);
    for k in 0..20 {
        let n = rng.gen_range(40..=200);
        let graph = random_graph(&mut rng, n, (4.0 / n as f64).min(0.5));
        let m_eig = rng.gen_range(2..=8);
        // count components via BFS
        let mut seen = vec![false; n];
        let mut comps = 0;
        for s in 0..n {
            if seen[s] {
                continue;
            }
            comps += 1;
            let mut stack = vec![s];
            seen[s] = true;
            while let Some(u) = stack.pop() {
                for &v in graph.neighbors(u) {
                    if !seen[v] {
                        seen[v] = true;
                        stack.push(v);
                    }
                }
            }
        }
        let spectrum = smallest_eigenpairs(&graph, m_eig, 1e-10, k as u64).expect("lanczos");
        let dense = sym_eig_dense_matrix(&dense_laplacian(&graph)).expect("dense");
        let mut max_gap = 0.0f64;
        for j in 0..m_eig {
            max_gap = max_gap.max((spectrum.values()[j] - dense.values()[j]).abs());
        }
        println!(
            "k={k:2} n={n:3} comps={comps:2} m_eig={m_eig} gap={max_gap:.2e}  lancz={:?}  dense={:?}",
            &spectrum.values()[..m_eig.min(5)],
            &dense.values()[..m_eig.min(5)]
        );
    }
}
