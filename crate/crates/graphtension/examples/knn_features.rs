//! Segment a synthetic image by clustering its k-nearest-neighbor graph.
//!
//! Builds a small two-region image whose regions differ in color direction
//! (channel mix), expands every pixel into weighted neighborhood features,
//! links each pixel to its most similar peers under cosine similarity, and
//! detects communities in the resulting graph. Cosine similarity compares
//! directions, so the regions must differ in channel ratio, not just in
//! brightness: a dark-gray and a bright-gray patch look identical to it.
//!
//! Run with: `cargo run --release --example knn_features`

use graphtension::eval::{knn_graph, nmi, nonlocal_features, ImageTensor};
use graphtension::graph::{Partition, Volumes};
use graphtension::pipeline::{em_fit, PipelineConfig};
use graphtension::solver::SolverKind;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> graphtension::Result<()> {
    let (h, w) = (16, 16);
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    // Left half reddish (0.9, 0.1), right half bluish (0.1, 0.9), plus noise.
    let mut data = Vec::with_capacity(h * w * 2);
    let mut truth = Vec::with_capacity(h * w);
    for _i in 0..h {
        for j in 0..w {
            let region = usize::from(j >= w / 2);
            truth.push(region);
            let (red, blue) = if region == 0 { (0.9, 0.1) } else { (0.1, 0.9) };
            data.push(red + rng.gen_range(-0.05..0.05));
            data.push(blue + rng.gen_range(-0.05..0.05));
        }
    }
    let img = ImageTensor::new(h, w, 2, data)?;
    let features = nonlocal_features(&img, 1);
    let graph = knn_graph(&features, 8)?;
    println!(
        "image {h}x{w} -> {} pixels, knn graph with {} edges",
        features.n(),
        graph.edge_count()
    );

    let volumes = Volumes::from_graph(&graph);
    // Within a region the kNN links are noise-driven and nearly structureless,
    // so an open-ended community search would happily shave off spurious
    // sub-communities; fixing the community count at the known number of
    // regions keeps the inference on the question we actually care about.
    let cfg = PipelineConfig {
        n_hat_expected: 2,
        solver: SolverKind::Mcf,
        seed: 9,
        ..Default::default()
    };
    let result = em_fit(&graph, &volumes, 2, None, &cfg)?;
    let reference = Partition::new(truth, 2)?;
    println!(
        "detected {} segments, energy {:.3}, nmi vs true regions {:.4}",
        result.partition.nonempty_count(),
        result.energy,
        nmi(&result.partition, &reference)?
    );

    // Render the segmentation.
    for i in 0..h {
        let row: String = (0..w)
            .map(|j| char::from(b'a' + (result.partition.label(i * w + j) % 26) as u8))
            .collect();
        println!("  {row}");
    }
    Ok(())
}
