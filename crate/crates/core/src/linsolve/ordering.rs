//! Nested-dissection ordering and the assembly tree it induces.
//!
//! Separators come from axis-aligned planes when vertex coordinates are known
//! and from BFS level sets otherwise. Tree nodes are emitted in postorder, so
//! eliminating them in index order is a valid elimination sequence.

use std::collections::VecDeque;

use crate::Point;

/// Symmetric adjacency in CSR form, without self loops.
#[derive(Debug, Clone)]
pub struct Graph {
    pub ptr: Vec<usize>,
    pub adj: Vec<usize>,
}

impl Graph {
    pub fn len(&self) -> usize {
        self.ptr.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.adj[self.ptr[v]..self.ptr[v + 1]]
    }

    /// Pattern of `A + Aᵀ` without the diagonal.
    pub fn symmetrized(n: usize, row_ptr: &[usize], col_idx: &[usize]) -> Self {
        let mut deg = vec![0usize; n];
        for i in 0..n {
            for &j in &col_idx[row_ptr[i]..row_ptr[i + 1]] {
                if i != j {
                    deg[i] += 1;
                    deg[j] += 1;
                }
            }
        }
        let mut ptr = vec![0usize; n + 1];
        for i in 0..n {
            ptr[i + 1] = ptr[i] + deg[i];
        }
        let mut fill = ptr.clone();
        let mut adj = vec![0usize; ptr[n]];
        for i in 0..n {
            for &j in &col_idx[row_ptr[i]..row_ptr[i + 1]] {
                if i != j {
                    adj[fill[i]] = j;
                    fill[i] += 1;
                    adj[fill[j]] = i;
                    fill[j] += 1;
                }
            }
        }
        // sort and deduplicate each list, then compact
        let mut out_ptr = vec![0usize; n + 1];
        let mut w = 0;
        for i in 0..n {
            let (s, e) = (ptr[i], ptr[i + 1]);
            adj[s..e].sort_unstable();
            let mut last = usize::MAX;
            for r in s..e {
                let v = adj[r];
                if v != last {
                    adj[w] = v;
                    w += 1;
                    last = v;
                }
            }
            out_ptr[i + 1] = w;
        }
        adj.truncate(w);
        Self { ptr: out_ptr, adj }
    }
}

/// One supernode of the assembly tree.
#[derive(Debug, Clone)]
pub struct TreeNode {
    /// Variables eliminated at this node, in elimination order.
    pub vars: Vec<usize>,
    pub children: Vec<usize>,
    pub parent: Option<usize>,
}

#[derive(Debug, Clone)]
pub struct Ordering {
    /// Nodes in postorder: every child precedes its parent.
    pub nodes: Vec<TreeNode>,
    /// `position[v]`: elimination index of variable `v`.
    pub position: Vec<usize>,
}

#[derive(Debug, Clone, Copy)]
pub struct OrderingParams {
    pub leaf_size: usize,
    pub plane_candidates: usize,
}

impl Default for OrderingParams {
    fn default() -> Self {
        Self {
            leaf_size: 256,
            plane_candidates: 12,
        }
    }
}

struct Dissector<'a> {
    graph: &'a Graph,
    coords: Option<&'a [Point]>,
    params: OrderingParams,
    /// Scratch labels: 0 = not in the current set.
    label: Vec<u32>,
    dist: Vec<usize>,
    nodes: Vec<TreeNode>,
}

const IN_SET: u32 = 1;
const LEFT: u32 = 2;
const RIGHT: u32 = 3;
const SEP: u32 = 4;

impl<'a> Dissector<'a> {
    /// Dissects `set`, returning the index of the subtree root.
    fn dissect(&mut self, set: Vec<usize>, depth: usize) -> usize {
        if set.len() <= self.params.leaf_size || depth > 64 {
            return self.leaf(set);
        }
        let split = self
            .coords
            .and_then(|c| self.plane_split(&set, c))
            .or_else(|| self.level_split(&set));
        let Some((left, right, sep)) = split else {
            return self.leaf(set);
        };
        drop(set);
        let mut children = Vec::with_capacity(2);
        for part in [left, right] {
            if !part.is_empty() {
                children.push(self.dissect(part, depth + 1));
            }
        }
        let id = self.nodes.len();
        for &c in &children {
            self.nodes[c].parent = Some(id);
        }
        self.nodes.push(TreeNode {
            vars: sep,
            children,
            parent: None,
        });
        id
    }

    fn leaf(&mut self, vars: Vec<usize>) -> usize {
        self.nodes.push(TreeNode {
            vars,
            children: Vec::new(),
            parent: None,
        });
        self.nodes.len() - 1
    }

    /// Labels `set` by side of the plane and moves left vertices touching the
    /// right side into the separator. Returns the separator size.
    fn classify(&mut self, set: &[usize], coords: &[Point], axis: usize, at: f64, tol: f64) -> (usize, usize, usize) {
        for &v in set {
            let x = coords[v][axis];
            self.label[v] = if (x - at).abs() <= tol {
                SEP
            } else if x < at {
                LEFT
            } else {
                RIGHT
            };
        }
        for &v in set {
            if self.label[v] == LEFT && self.graph.neighbors(v).iter().any(|&w| self.label[w] == RIGHT) {
                self.label[v] = SEP;
            }
        }
        let mut counts = (0, 0, 0);
        for &v in set {
            match self.label[v] {
                LEFT => counts.0 += 1,
                RIGHT => counts.1 += 1,
                _ => counts.2 += 1,
            }
        }
        counts
    }

    fn plane_split(&mut self, set: &[usize], coords: &[Point]) -> Option<(Vec<usize>, Vec<usize>, Vec<usize>)> {
        let mut lo = [f64::INFINITY; 3];
        let mut hi = [f64::NEG_INFINITY; 3];
        for &v in set {
            for d in 0..3 {
                lo[d] = lo[d].min(coords[v][d]);
                hi[d] = hi[d].max(coords[v][d]);
            }
        }
        let axis = (0..3).max_by(|&a, &b| (hi[a] - lo[a]).total_cmp(&(hi[b] - lo[b]))).unwrap();
        let extent = hi[axis] - lo[axis];
        if !(extent > 0.0) {
            return None;
        }
        let tol = 1e-9 * extent;
        let mut xs: Vec<f64> = set.iter().map(|&v| coords[v][axis]).collect();
        xs.sort_unstable_by(f64::total_cmp);
        let n = xs.len();
        let (a, b) = (n * 35 / 100, (n * 65 / 100).max(n * 35 / 100 + 1).min(n));
        let mut candidates: Vec<f64> = xs[a..b].to_vec();
        candidates.dedup_by(|x, y| (*x - *y).abs() <= tol);
        if candidates.len() > self.params.plane_candidates {
            let step = candidates.len() as f64 / self.params.plane_candidates as f64;
            candidates = (0..self.params.plane_candidates)
                .map(|i| candidates[((i as f64 + 0.5) * step) as usize])
                .collect();
        }
        let mut best: Option<(usize, usize, f64)> = None;
        for &at in &candidates {
            let (l, r, s) = self.classify(set, coords, axis, at, tol);
            if l == 0 || r == 0 {
                continue;
            }
            let imbalance = (l as f64 - r as f64).abs() / set.len() as f64;
            let score = (s, l.min(r));
            let better = match best {
                None => true,
                Some((bs, bm, _)) => score.0 < bs || (score.0 == bs && score.1 > bm),
            };
            if better && imbalance < 0.8 {
                best = Some((s, l.min(r), at));
            }
        }
        let (_, _, at) = best?;
        self.classify(set, coords, axis, at, tol);
        Some(self.collect(set))
    }

    fn collect(&mut self, set: &[usize]) -> (Vec<usize>, Vec<usize>, Vec<usize>) {
        let (mut l, mut r, mut s) = (Vec::new(), Vec::new(), Vec::new());
        for &v in set {
            match self.label[v] {
                LEFT => l.push(v),
                RIGHT => r.push(v),
                _ => s.push(v),
            }
            self.label[v] = 0;
        }
        (l, r, s)
    }

    fn bfs(&mut self, set: &[usize], start: usize) -> (usize, usize) {
        for &v in set {
            self.dist[v] = usize::MAX;
        }
        let mut queue = VecDeque::new();
        self.dist[start] = 0;
        queue.push_back(start);
        let mut last = start;
        while let Some(v) = queue.pop_front() {
            last = v;
            for &w in self.graph.neighbors(v) {
                if self.label[w] == IN_SET && self.dist[w] == usize::MAX {
                    self.dist[w] = self.dist[v] + 1;
                    queue.push_back(w);
                }
            }
        }
        (last, self.dist[last])
    }

    fn level_split(&mut self, set: &[usize]) -> Option<(Vec<usize>, Vec<usize>, Vec<usize>)> {
        for &v in set {
            self.label[v] = IN_SET;
        }
        let (far, _) = self.bfs(set, set[0]);
        let (_, depth) = self.bfs(set, far);
        let unreached = set.iter().filter(|&&v| self.dist[v] == usize::MAX).count();
        if unreached > 0 && depth < 2 {
            // split off the component just explored, no separator needed
            for &v in set {
                self.label[v] = if self.dist[v] == usize::MAX { RIGHT } else { LEFT };
            }
            return Some(self.collect(set));
        }
        if depth < 2 {
            for &v in set {
                self.label[v] = 0;
            }
            return None;
        }
        let mid = depth / 2;
        for &v in set {
            let d = self.dist[v];
            self.label[v] = if d == usize::MAX || d > mid {
                RIGHT
            } else if d < mid {
                LEFT
            } else {
                SEP
            };
        }
        Some(self.collect(set))
    }
}

/// Computes a nested-dissection ordering of `graph`, optionally guided by vertex coordinates.
pub fn nested_dissection(graph: &Graph, coords: Option<&[Point]>, params: OrderingParams) -> Ordering {
    let n = graph.len();
    let mut d = Dissector {
        graph,
        coords,
        params,
        label: vec![0; n],
        dist: vec![usize::MAX; n],
        nodes: Vec::new(),
    };
    if n > 0 {
        d.dissect((0..n).collect(), 0);
    }
    let nodes = d.nodes;
    let mut position = vec![usize::MAX; n];
    let mut next = 0;
    for node in &nodes {
        for &v in &node.vars {
            position[v] = next;
            next += 1;
        }
    }
    debug_assert_eq!(next, n);
    Ordering { nodes, position }
}
