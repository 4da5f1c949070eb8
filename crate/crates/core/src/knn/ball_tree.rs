use alloc::vec;
use alloc::vec::Vec;
use core::ops::Range;

use super::TopK;
use crate::types::{similarity, FeatureMatrix};

pub(crate) const DEFAULT_LEAF_SIZE: usize = 32;

/// Nodes whose similarity bound is below the current k-th similarity by at
/// least this much (relative to the vector norms) are skipped. The margin
/// absorbs rounding so the result stays identical to the exhaustive scan.
const PRUNE_SLACK: f64 = 1e-5;

#[derive(Debug, Clone)]
struct Node {
    start: usize,
    end: usize,
    /// Child node ids; `None` for leaves.
    children: Option<(usize, usize)>,
    radius: f64,
}

/// Ball tree over feature rows for exact maximum-inner-product search.
///
/// For a ball with center `c` and radius `r`, Cauchy-Schwarz bounds the inner
/// product of a query `q` with any member by `q.c + |q| r`.
#[derive(Debug, Clone)]
pub struct BallTree {
    d: usize,
    perm: Vec<u32>,
    nodes: Vec<Node>,
    centers: Vec<f64>,
    max_norm: f64,
}

impl BallTree {
    pub fn build(features: &FeatureMatrix, leaf_size: usize) -> Self {
        let n = features.n();
        let d = features.d();
        let leaf_size = leaf_size.max(1);
        let mut tree = Self { d, perm: (0..n as u32).collect(), nodes: Vec::new(), centers: Vec::new(), max_norm: 0.0 };
        tree.max_norm = (0..n).map(|i| norm(features.row(i))).fold(0.0, f64::max);

        let mut proj: Vec<(f64, u32)> = Vec::with_capacity(n);
        let mut stack = vec![tree.push_node(features, 0, n)];
        while let Some(id) = stack.pop() {
            let (start, end) = (tree.nodes[id].start, tree.nodes[id].end);
            if end - start <= leaf_size {
                continue;
            }
            // Split along the direction between two far-apart members.
            let center = tree.center(id).to_vec();
            let a = tree.farthest_from(features, start..end, &center);
            let a_row: Vec<f64> = features.row(a).iter().map(|&v| f64::from(v)).collect();
            let b = tree.farthest_from(features, start..end, &a_row);
            let dir: Vec<f64> = features.row(b).iter().zip(&a_row).map(|(&x, &y)| f64::from(x) - y).collect();
            proj.clear();
            proj.extend(tree.perm[start..end].iter().map(|&p| {
                let row = features.row(p as usize);
                (row.iter().zip(&dir).map(|(&x, &w)| f64::from(x) * w).sum::<f64>(), p)
            }));
            let mid = proj.len() / 2;
            proj.select_nth_unstable_by(mid, |x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)));
            for (slot, &(_, p)) in tree.perm[start..end].iter_mut().zip(&proj) {
                *slot = p;
            }
            let left = tree.push_node(features, start, start + mid);
            let right = tree.push_node(features, start + mid, end);
            tree.nodes[id].children = Some((left, right));
            stack.push(left);
            stack.push(right);
        }
        tree
    }

    fn push_node(&mut self, features: &FeatureMatrix, start: usize, end: usize) -> usize {
        let mut center = vec![0.0f64; self.d];
        for &p in &self.perm[start..end] {
            for (c, &v) in center.iter_mut().zip(features.row(p as usize)) {
                *c += f64::from(v);
            }
        }
        let count = (end - start) as f64;
        center.iter_mut().for_each(|c| *c /= count);
        let radius = self.perm[start..end].iter().map(|&p| dist(features.row(p as usize), &center)).fold(0.0, f64::max);
        self.centers.extend_from_slice(&center);
        self.nodes.push(Node { start, end, children: None, radius });
        self.nodes.len() - 1
    }

    fn center(&self, id: usize) -> &[f64] {
        &self.centers[id * self.d..(id + 1) * self.d]
    }

    fn farthest_from(&self, features: &FeatureMatrix, range: Range<usize>, point: &[f64]) -> usize {
        let mut best = (f64::NEG_INFINITY, 0usize);
        for &p in &self.perm[range] {
            let dd = dist(features.row(p as usize), point);
            if dd > best.0 {
                best = (dd, p as usize);
            }
        }
        best.1
    }

    /// Same contract as [`super::exact_rows`]; `features` must be the matrix
    /// the tree was built from.
    pub fn query_rows(
        &self,
        features: &FeatureMatrix,
        k: usize,
        rows: Range<usize>,
        neighbors: &mut [u32],
        sims: &mut [f32],
    ) {
        if k == 0 {
            return;
        }
        let mut top = TopK::new(k);
        let mut stack: Vec<(f64, usize)> = Vec::new();
        for q in rows.clone() {
            let query = features.row(q);
            let qnorm = norm(query);
            let slack = PRUNE_SLACK * (1.0 + qnorm * self.max_norm);
            top.reset();
            stack.clear();
            stack.push((f64::INFINITY, 0));
            while let Some((bound, id)) = stack.pop() {
                if let Some(t) = top.threshold() {
                    if bound < f64::from(t) - slack {
                        continue;
                    }
                }
                let node = &self.nodes[id];
                match node.children {
                    None => {
                        for &p in &self.perm[node.start..node.end] {
                            if p as usize != q {
                                top.push(similarity(query, features.row(p as usize)), p);
                            }
                        }
                    }
                    Some((l, r)) => {
                        let bl = self.bound(query, qnorm, l);
                        let br = self.bound(query, qnorm, r);
                        // Visit the more promising child first.
                        if bl >= br {
                            stack.push((br, r));
                            stack.push((bl, l));
                        } else {
                            stack.push((bl, l));
                            stack.push((br, r));
                        }
                    }
                }
            }
            let off = (q - rows.start) * k;
            top.write_sorted(&mut neighbors[off..off + k], &mut sims[off..off + k]);
        }
    }

    fn bound(&self, query: &[f32], qnorm: f64, id: usize) -> f64 {
        let dot: f64 = query.iter().zip(self.center(id)).map(|(&x, &c)| f64::from(x) * c).sum();
        dot + qnorm * self.nodes[id].radius
    }
}

fn norm(row: &[f32]) -> f64 {
    libm::sqrt(row.iter().map(|&v| f64::from(v) * f64::from(v)).sum())
}

fn dist(row: &[f32], point: &[f64]) -> f64 {
    libm::sqrt(row.iter().zip(point).map(|(&x, &c)| (f64::from(x) - c) * (f64::from(x) - c)).sum())
}
