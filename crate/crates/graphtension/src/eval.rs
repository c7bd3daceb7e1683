//! Evaluation metrics and feature/graph utilities for non-graph data.

use log::debug;

use crate::error::{Error, Result};
use crate::graph::{Graph, Partition};

/// Normalized mutual information `2 I(A; B) / (H(A) + H(B))` with natural
/// logarithms, clamped to `[0, 1]`. Two zero-entropy labelings (both
/// constant) count as identical: NMI 1.
pub fn nmi(a: &Partition, b: &Partition) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::Input(format!(
            "partitions label {} and {} nodes",
            a.len(),
            b.len()
        )));
    }
    let n = a.len();
    if n == 0 {
        return Err(Error::Input("partitions are empty".into()));
    }
    let (ka, kb) = (a.n_hat(), b.n_hat());
    let mut joint = vec![0.0f64; ka * kb];
    let mut ca = vec![0.0f64; ka];
    let mut cb = vec![0.0f64; kb];
    for i in 0..n {
        let (x, y) = (a.label(i), b.label(i));
        joint[x * kb + y] += 1.0;
        ca[x] += 1.0;
        cb[y] += 1.0;
    }
    let nf = n as f64;
    let h = |counts: &[f64]| -> f64 {
        counts
            .iter()
            .filter(|&&c| c > 0.0)
            .map(|&c| {
                let p = c / nf;
                -p * p.ln()
            })
            .sum()
    };
    let ha = h(&ca);
    let hb = h(&cb);
    if ha == 0.0 && hb == 0.0 {
        return Ok(1.0);
    }
    let mut mi = 0.0;
    for x in 0..ka {
        for y in 0..kb {
            let c = joint[x * kb + y];
            if c > 0.0 {
                let p = c / nf;
                mi += p * (p * nf * nf / (ca[x] * cb[y])).ln();
            }
        }
    }
    Ok((2.0 * mi / (ha + hb)).clamp(0.0, 1.0))
}

/// Dense row-major feature matrix: one row per item.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureMatrix {
    n: usize,
    dim: usize,
    data: Vec<f64>,
}

impl FeatureMatrix {
    /// Wraps `n x dim` row-major data.
    pub fn new(n: usize, dim: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != n * dim {
            return Err(Error::Input(format!(
                "feature data holds {} values, expected {n} x {dim}",
                data.len()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::Input("features must be finite".into()));
        }
        Ok(FeatureMatrix { n, dim, data })
    }

    /// Builds from equal-length rows.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        let dim = rows.first().map_or(0, |r| r.len());
        let mut data = Vec::with_capacity(n * dim);
        for r in rows {
            if r.len() != dim {
                return Err(Error::Input("feature rows have unequal lengths".into()));
            }
            data.extend_from_slice(r);
        }
        FeatureMatrix::new(n, dim, data)
    }

    /// Number of items.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Feature dimension.
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// One item's feature row.
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }
}

/// A dense `height x width x channels` image, row-major.
#[derive(Clone, Debug)]
pub struct ImageTensor {
    height: usize,
    width: usize,
    channels: usize,
    data: Vec<f64>,
}

impl ImageTensor {
    /// Wraps raw data laid out as `(i * width + j) * channels + ch`.
    pub fn new(height: usize, width: usize, channels: usize, data: Vec<f64>) -> Result<Self> {
        if height == 0 || width == 0 || channels == 0 {
            return Err(Error::Input("image dimensions must be positive".into()));
        }
        if data.len() != height * width * channels {
            return Err(Error::Input(format!(
                "image data holds {} values, expected {height} x {width} x {channels}",
                data.len()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::Input("image values must be finite".into()));
        }
        Ok(ImageTensor { height, width, channels, data })
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    /// Pixel value with replicated-edge padding: out-of-range indices clamp
    /// to the nearest edge.
    pub fn get_padded(&self, i: isize, j: isize, ch: usize) -> f64 {
        let ii = i.clamp(0, self.height as isize - 1) as usize;
        let jj = j.clamp(0, self.width as isize - 1) as usize;
        self.data[(ii * self.width + jj) * self.channels + ch]
    }
}

/// Weighted neighborhood features: one row per pixel (row-major pixel order),
/// stacking the pixel's own channels and those of its Chebyshev-`radius`
/// neighborhood with replicated-edge padding.
///
/// Channel blocks appear center first (weight 1), then shell by shell; within
/// a shell the four axis-aligned offsets `(+d,0), (-d,0), (0,+d), (0,-d)`
/// come first (weight 0.5), then the remaining offsets ordered by row offset
/// descending, column offset descending (weight 0.25). For `radius = 1` this
/// is the classic 9-block layout
/// `[(i,j)] + 0.5 [(i+1,j),(i-1,j),(i,j+1),(i,j-1)] + 0.25 [diagonals]`.
pub fn nonlocal_features(img: &ImageTensor, radius: usize) -> FeatureMatrix {
    let side = 2 * radius + 1;
    let c = img.channels();
    let dim = side * side * c;
    let n = img.height() * img.width();

    // Offsets in feature order with their weights.
    let mut offsets: Vec<(isize, isize, f64)> = vec![(0, 0, 1.0)];
    for d in 1..=radius as isize {
        offsets.push((d, 0, 0.5));
        offsets.push((-d, 0, 0.5));
        offsets.push((0, d, 0.5));
        offsets.push((0, -d, 0.5));
        let mut rest = Vec::new();
        for di in -d..=d {
            for dj in -d..=d {
                if di.abs().max(dj.abs()) == d && di != 0 && dj != 0 {
                    rest.push((di, dj));
                }
            }
        }
        rest.sort_by(|a, b| b.0.cmp(&a.0).then(b.1.cmp(&a.1)));
        for (di, dj) in rest {
            offsets.push((di, dj, 0.25));
        }
    }
    debug_assert_eq!(offsets.len(), side * side);

    let mut data = Vec::with_capacity(n * dim);
    for i in 0..img.height() as isize {
        for j in 0..img.width() as isize {
            for &(di, dj, wgt) in &offsets {
                for ch in 0..c {
                    data.push(wgt * img.get_padded(i + di, j + dj, ch));
                }
            }
        }
    }
    FeatureMatrix::new(n, dim, data).expect("constructed with matching dimensions")
}

fn cosine(a: &[f64], b: &[f64], norm_a: f64, norm_b: f64) -> f64 {
    if norm_a == 0.0 || norm_b == 0.0 {
        return 0.0;
    }
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    dot / (norm_a * norm_b)
}

/// Exact k-nearest-neighbor graph under cosine similarity, symmetrized by
/// union, unweighted.
///
/// For each item the candidates are scanned in cyclic order starting after
/// the item itself (`i+1, i+2, ..., wrapping around`), and ties keep the
/// earlier candidate, so equal-similarity neighborhoods spread around the
/// cycle instead of piling onto the smallest indices. Zero-norm rows have
/// similarity 0 to everything (logged) and still receive `k` links.
pub fn knn_graph(features: &FeatureMatrix, k: usize) -> Result<Graph> {
    let n = features.n();
    if n == 0 {
        return Err(Error::Input("no items to link".into()));
    }
    if k == 0 {
        return Err(Error::Input("k must be at least 1".into()));
    }
    let norms: Vec<f64> = (0..n)
        .map(|i| features.row(i).iter().map(|v| v * v).sum::<f64>().sqrt())
        .collect();
    for (i, &nm) in norms.iter().enumerate() {
        if nm == 0.0 {
            debug!("knn: item {i} has a zero-norm feature row; similarities default to 0");
        }
    }

    let kk = k.min(n.saturating_sub(1));
    let mut edges = Vec::with_capacity(n * kk);
    // (similarity, arrival index); keep the top k, earlier arrival wins ties.
    let mut best: Vec<(f64, usize, usize)> = Vec::with_capacity(kk + 1);
    for i in 0..n {
        best.clear();
        for step in 1..n {
            let j = (i + step) % n;
            let s = cosine(features.row(i), features.row(j), norms[i], norms[j]);
            // Insert if better than the current worst (strictly: ties lose
            // to earlier arrivals).
            if best.len() < kk {
                best.push((s, step, j));
                best.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
            } else if s > best[kk - 1].0 {
                best[kk - 1] = (s, step, j);
                best.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
            }
        }
        for &(_, _, j) in &best {
            edges.push((i.min(j), i.max(j)));
        }
    }
    Graph::from_edges(n, &edges)
}
