//! Sparse graph storage, partitions, and the cut/volume bookkeeping shared by
//! every solver.
//!
//! Graphs are simple (no self-loops, no parallel edges), undirected, and kept
//! in compressed sparse row form. Partitions map each node to one of `n_hat`
//! communities; communities may be empty, which matters mid-optimization when
//! a solver abandons a label.
//!
//! Cut counts follow the ordered-pair convention: every edge between distinct
//! communities contributes to both `cut(a, b)` and `cut(b, a)`, and an edge
//! inside community `a` contributes 2 to `cut(a, a)`. Volumes are degree sums,
//! so `sum_b cut(a, b) == vol(a)` and `sum_a vol(a) == 2m` whenever volumes
//! come from the graph itself.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use rand::Rng;

use crate::error::{Error, Result};

/// Undirected simple graph in compressed sparse row form.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Graph {
    offsets: Vec<usize>,
    neighbors: Vec<usize>,
    degrees: Vec<usize>,
    two_m: usize,
}

impl Graph {
    /// Builds a graph on `n` nodes from an edge list. Self-loops are dropped
    /// and duplicate edges collapsed; both endpoints must lie in `0..n`.
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut adj: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); n];
        for &(u, v) in edges {
            if u >= n || v >= n {
                return Err(Error::Input(format!(
                    "edge ({u}, {v}) references a node outside 0..{n}"
                )));
            }
            if u == v {
                continue; // self-loops carry no cut information
            }
            adj[u].insert(v);
            adj[v].insert(u);
        }
        let mut offsets = Vec::with_capacity(n + 1);
        let mut neighbors = Vec::new();
        let mut degrees = Vec::with_capacity(n);
        offsets.push(0);
        for set in &adj {
            degrees.push(set.len());
            neighbors.extend(set.iter().copied());
            offsets.push(neighbors.len());
        }
        let two_m = neighbors.len();
        Ok(Graph {
            offsets,
            neighbors,
            degrees,
            two_m,
        })
    }

    /// Number of nodes.
    pub fn n_nodes(&self) -> usize {
        self.offsets.len() - 1
    }

    /// Number of undirected edges `m`.
    pub fn edge_count(&self) -> usize {
        self.two_m / 2
    }

    /// Total degree `2m`.
    pub fn two_m(&self) -> usize {
        self.two_m
    }

    /// Degree of node `i`.
    pub fn degree(&self, i: usize) -> usize {
        self.degrees[i]
    }

    /// All node degrees.
    pub fn degrees(&self) -> &[usize] {
        &self.degrees
    }

    /// Neighbors of node `i`, sorted ascending.
    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.neighbors[self.offsets[i]..self.offsets[i + 1]]
    }

    /// True if `{u, v}` is an edge.
    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.neighbors(u).binary_search(&v).is_ok()
    }

    /// Iterates every undirected edge once as `(u, v)` with `u < v`.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.n_nodes()).flat_map(move |u| {
            self.neighbors(u)
                .iter()
                .copied()
                .filter(move |&v| u < v)
                .map(move |v| (u, v))
        })
    }

    /// Subgraph induced by `members` (distinct node ids), plus the map from
    /// new ids `0..members.len()` back to the original ids.
    ///
    /// Only edges with both endpoints in `members` survive; the subgraph's own
    /// degrees therefore count internal edges only. Callers that need the
    /// parent graph's volumes should pair the subgraph with a [`Volumes`]
    /// built from the parent degrees.
    pub fn induced_subgraph(&self, members: &[usize]) -> Result<(Graph, Vec<usize>)> {
        let n = self.n_nodes();
        let mut new_id = vec![usize::MAX; n];
        for (new, &old) in members.iter().enumerate() {
            if old >= n {
                return Err(Error::Input(format!(
                    "subgraph member {old} outside 0..{n}"
                )));
            }
            if new_id[old] != usize::MAX {
                return Err(Error::Input(format!("duplicate subgraph member {old}")));
            }
            new_id[old] = new;
        }
        let mut edges = Vec::new();
        for (new_u, &old_u) in members.iter().enumerate() {
            for &old_v in self.neighbors(old_u) {
                let new_v = new_id[old_v];
                if new_v != usize::MAX && new_u < new_v {
                    edges.push((new_u, new_v));
                }
            }
        }
        let sub = Graph::from_edges(members.len(), &edges)?;
        Ok((sub, members.to_vec()))
    }
}

/// Parses a whitespace-separated edge list.
///
/// Each non-comment line holds exactly two 0-based node ids. Lines starting
/// with `#` and blank lines are skipped. The node count is `max id + 1`, so
/// ids never mentioned as endpoints but below the max are retained as
/// isolated, degree-0 nodes.
pub fn parse_edge_list<R: Read>(reader: R) -> Result<Graph> {
    let buf = BufReader::new(reader);
    let mut edges: Vec<(usize, usize)> = Vec::new();
    let mut max_id: Option<usize> = None;
    for (idx, line) in buf.lines().enumerate() {
        let lineno = idx + 1;
        let line = line?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut it = line.split_whitespace();
        let a = parse_node_id(it.next(), lineno)?;
        let b = parse_node_id(it.next(), lineno)?;
        if let Some(extra) = it.next() {
            return Err(Error::Parse {
                line: lineno,
                msg: format!("expected two node ids, found extra token {extra:?}"),
            });
        }
        max_id = Some(max_id.map_or(a.max(b), |m| m.max(a).max(b)));
        edges.push((a, b));
    }
    let n = max_id.map_or(0, |m| m + 1);
    Graph::from_edges(n, &edges)
}

fn parse_node_id(token: Option<&str>, lineno: usize) -> Result<usize> {
    let token = token.ok_or_else(|| Error::Parse {
        line: lineno,
        msg: "expected two node ids".into(),
    })?;
    if token.starts_with('-') {
        return Err(Error::Parse {
            line: lineno,
            msg: format!("negative node id {token:?}"),
        });
    }
    token.parse::<usize>().map_err(|e| Error::Parse {
        line: lineno,
        msg: format!("bad node id {token:?}: {e}"),
    })
}

/// Loads an edge list from a file. See [`parse_edge_list`] for the format.
pub fn load_edge_list<P: AsRef<Path>>(path: P) -> Result<Graph> {
    parse_edge_list(File::open(path)?)
}

/// Writes the graph as an edge list, one `u v` pair per line with `u < v`.
pub fn write_edge_list<W: Write>(graph: &Graph, writer: W) -> Result<()> {
    let mut w = BufWriter::new(writer);
    for (u, v) in graph.edges() {
        writeln!(w, "{u} {v}")?;
    }
    w.flush()?;
    Ok(())
}

/// Saves an edge list to a file.
pub fn save_edge_list<P: AsRef<Path>>(graph: &Graph, path: P) -> Result<()> {
    write_edge_list(graph, File::create(path)?)
}

/// Assignment of each node to one of `n_hat` communities (labels `0..n_hat`).
///
/// `n_hat` is the number of available labels, not the number of nonempty
/// communities; solvers may leave labels unused.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Partition {
    labels: Vec<usize>,
    n_hat: usize,
}

impl Partition {
    /// Wraps a label vector, checking every label lies in `0..n_hat`.
    pub fn new(labels: Vec<usize>, n_hat: usize) -> Result<Self> {
        if n_hat == 0 {
            return Err(Error::Input("n_hat must be at least 1".into()));
        }
        if let Some((i, &l)) = labels.iter().enumerate().find(|(_, &l)| l >= n_hat) {
            return Err(Error::Input(format!(
                "node {i} has label {l}, outside 0..{n_hat}"
            )));
        }
        Ok(Partition { labels, n_hat })
    }

    /// Every node in a single community.
    pub fn all_in_one(n: usize) -> Self {
        Partition {
            labels: vec![0; n],
            n_hat: 1,
        }
    }

    /// Uniformly random labels, deterministic given the RNG state.
    pub fn random<R: Rng>(n: usize, n_hat: usize, rng: &mut R) -> Self {
        assert!(n_hat >= 1, "n_hat must be at least 1");
        Partition {
            labels: (0..n).map(|_| rng.gen_range(0..n_hat)).collect(),
            n_hat,
        }
    }

    /// Number of nodes.
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    /// True when the partition covers no nodes.
    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Number of available labels.
    pub fn n_hat(&self) -> usize {
        self.n_hat
    }

    /// Label of node `i`.
    pub fn label(&self, i: usize) -> usize {
        self.labels[i]
    }

    /// The full label vector.
    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    /// Reassigns node `i`. The new label must lie in `0..n_hat`.
    pub fn set_label(&mut self, i: usize, label: usize) {
        assert!(label < self.n_hat, "label {label} outside 0..{}", self.n_hat);
        self.labels[i] = label;
    }

    /// Node count per label.
    pub fn community_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0usize; self.n_hat];
        for &l in &self.labels {
            sizes[l] += 1;
        }
        sizes
    }

    /// Number of labels with at least one member.
    pub fn nonempty_count(&self) -> usize {
        self.community_sizes().iter().filter(|&&s| s > 0).count()
    }

    /// Members of community `a`, ascending.
    pub fn members_of(&self, a: usize) -> Vec<usize> {
        self.labels
            .iter()
            .enumerate()
            .filter(|(_, &l)| l == a)
            .map(|(i, _)| i)
            .collect()
    }

    /// Node sets of all nonempty communities, ordered by label.
    pub fn communities(&self) -> Vec<Vec<usize>> {
        let mut groups = vec![Vec::new(); self.n_hat];
        for (i, &l) in self.labels.iter().enumerate() {
            groups[l].push(i);
        }
        groups.retain(|g| !g.is_empty());
        groups
    }

    /// Renumbers labels to `0..nonempty_count()`, preserving label order.
    pub fn compact(&self) -> Partition {
        let sizes = self.community_sizes();
        let mut remap = vec![usize::MAX; self.n_hat];
        let mut next = 0;
        for (l, &s) in sizes.iter().enumerate() {
            if s > 0 {
                remap[l] = next;
                next += 1;
            }
        }
        Partition {
            labels: self.labels.iter().map(|&l| remap[l]).collect(),
            n_hat: next.max(1),
        }
    }
}

/// Parses a partition file: one `node_id community_id` pair per line, node
/// ids 0-based, community ids 1-based. `#` comments and blank lines are
/// skipped. Every node in `0..=max node id` must appear exactly once.
pub fn parse_partition<R: Read>(reader: R) -> Result<Partition> {
    let buf = BufReader::new(reader);
    let mut pairs: Vec<(usize, usize)> = Vec::new();
    for (idx, line) in buf.lines().enumerate() {
        let lineno = idx + 1;
        let line = line?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut it = line.split_whitespace();
        let node = parse_node_id(it.next(), lineno)?;
        let comm = parse_node_id(it.next(), lineno)?;
        if it.next().is_some() {
            return Err(Error::Parse {
                line: lineno,
                msg: "expected `node community` only".into(),
            });
        }
        if comm == 0 {
            return Err(Error::Parse {
                line: lineno,
                msg: "community ids are 1-based; found 0".into(),
            });
        }
        pairs.push((node, comm - 1));
    }
    if pairs.is_empty() {
        return Err(Error::Input("partition file holds no assignments".into()));
    }
    let n = pairs.iter().map(|&(i, _)| i).max().unwrap() + 1;
    let n_hat = pairs.iter().map(|&(_, c)| c).max().unwrap() + 1;
    let mut labels = vec![usize::MAX; n];
    for (i, c) in pairs {
        if labels[i] != usize::MAX {
            return Err(Error::Input(format!("node {i} assigned more than once")));
        }
        labels[i] = c;
    }
    if let Some(missing) = labels.iter().position(|&l| l == usize::MAX) {
        return Err(Error::Input(format!("node {missing} has no assignment")));
    }
    Partition::new(labels, n_hat)
}

/// Loads a partition file. See [`parse_partition`] for the format.
pub fn load_partition<P: AsRef<Path>>(path: P) -> Result<Partition> {
    parse_partition(File::open(path)?)
}

/// Writes a partition as `node_id community_id` lines (communities 1-based).
pub fn write_partition<W: Write>(partition: &Partition, writer: W) -> Result<()> {
    let mut w = BufWriter::new(writer);
    let mut buf = String::new();
    for (i, &l) in partition.labels().iter().enumerate() {
        buf.clear();
        let _ = writeln!(buf, "{i} {}", l + 1);
        w.write_all(buf.as_bytes())?;
    }
    w.flush()?;
    Ok(())
}

/// Saves a partition to a file.
pub fn save_partition<P: AsRef<Path>>(partition: &Partition, path: P) -> Result<()> {
    write_partition(partition, File::create(path)?)
}

/// Degree data used for volume terms in the energy.
///
/// Normally the graph's own degrees. The split-merge wrapper substitutes the
/// parent graph's degrees and edge count when optimizing on induced
/// subgraphs, so subproblem energies stay on the global scale.
#[derive(Clone, Debug, PartialEq)]
pub struct Volumes {
    degrees: Vec<f64>,
    two_m: f64,
}

impl Volumes {
    /// Volume data of the graph itself.
    pub fn from_graph(graph: &Graph) -> Self {
        Volumes {
            degrees: graph.degrees().iter().map(|&d| d as f64).collect(),
            two_m: graph.two_m() as f64,
        }
    }

    /// Explicit degree vector and total volume `2m`.
    pub fn new(degrees: Vec<f64>, two_m: f64) -> Result<Self> {
        if degrees.iter().any(|&d| !d.is_finite() || d < 0.0) {
            return Err(Error::Input("degrees must be finite and nonnegative".into()));
        }
        if !two_m.is_finite() || two_m < 0.0 {
            return Err(Error::Input("2m must be finite and nonnegative".into()));
        }
        Ok(Volumes { degrees, two_m })
    }

    /// Volume degree of node `i`.
    pub fn degree(&self, i: usize) -> f64 {
        self.degrees[i]
    }

    /// All volume degrees.
    pub fn degrees(&self) -> &[f64] {
        &self.degrees
    }

    /// Total volume `2m`.
    pub fn two_m(&self) -> f64 {
        self.two_m
    }
}

/// Cut matrix, community volumes, and per-node neighbor counts for one
/// partition. This is the sufficient statistic for the energy: solvers update
/// it incrementally as nodes move.
#[derive(Clone, Debug)]
pub struct PartitionStats {
    n_hat: usize,
    cut: Vec<f64>,
    vol: Vec<f64>,
    x: Vec<f64>,
}

impl PartitionStats {
    /// Computes cut/vol/x from scratch in `O(n + 2m)`.
    ///
    /// `volumes` must describe the same node set as `graph`.
    pub fn new(graph: &Graph, volumes: &Volumes, partition: &Partition) -> Self {
        let n = graph.n_nodes();
        assert_eq!(partition.len(), n, "partition covers {} nodes, graph has {n}", partition.len());
        assert_eq!(volumes.degrees().len(), n, "volume data covers wrong node count");
        let n_hat = partition.n_hat();
        let mut cut = vec![0.0; n_hat * n_hat];
        let mut vol = vec![0.0; n_hat];
        let mut x = vec![0.0; n * n_hat];
        for i in 0..n {
            let a = partition.label(i);
            vol[a] += volumes.degree(i);
            for &j in graph.neighbors(i) {
                let b = partition.label(j);
                cut[a * n_hat + b] += 1.0;
                x[i * n_hat + b] += 1.0;
            }
        }
        PartitionStats { n_hat, cut, vol, x }
    }

    /// Number of community labels.
    pub fn n_hat(&self) -> usize {
        self.n_hat
    }

    /// Ordered-pair cut count between communities `a` and `b`.
    pub fn cut(&self, a: usize, b: usize) -> f64 {
        self.cut[a * self.n_hat + b]
    }

    /// Full cut matrix, row-major.
    pub fn cut_matrix(&self) -> &[f64] {
        &self.cut
    }

    /// Volume of community `a`.
    pub fn vol(&self, a: usize) -> f64 {
        self.vol[a]
    }

    /// All community volumes.
    pub fn vols(&self) -> &[f64] {
        &self.vol
    }

    /// Neighbor counts of node `i` by community: `x(i)[b]` is the number of
    /// neighbors of `i` currently in community `b`.
    pub fn x(&self, i: usize) -> &[f64] {
        &self.x[i * self.n_hat..(i + 1) * self.n_hat]
    }

    /// Applies the move of node `i` from community `from` to `to`, updating
    /// cut, volume, and neighbor counts in `O(deg(i) + n_hat)`.
    ///
    /// The caller is responsible for updating its own label vector.
    pub fn apply_move(
        &mut self,
        graph: &Graph,
        volumes: &Volumes,
        i: usize,
        from: usize,
        to: usize,
    ) {
        if from == to {
            return;
        }
        let nh = self.n_hat;
        let xi: Vec<f64> = self.x(i).to_vec();
        for b in 0..nh {
            if b == from || b == to {
                continue;
            }
            let v = xi[b];
            if v != 0.0 {
                self.cut[from * nh + b] -= v;
                self.cut[b * nh + from] -= v;
                self.cut[to * nh + b] += v;
                self.cut[b * nh + to] += v;
            }
        }
        self.cut[from * nh + from] -= 2.0 * xi[from];
        self.cut[to * nh + to] += 2.0 * xi[to];
        let d = xi[from] - xi[to];
        self.cut[from * nh + to] += d;
        self.cut[to * nh + from] += d;
        self.vol[from] -= volumes.degree(i);
        self.vol[to] += volumes.degree(i);
        for &j in graph.neighbors(i) {
            self.x[j * nh + from] -= 1.0;
            self.x[j * nh + to] += 1.0;
        }
    }
}
