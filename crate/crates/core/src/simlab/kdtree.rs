//! Exact k-nearest-neighbour search over a fixed point set.
//!
//! Results are ordered by `(squared distance, point index)`, so equal
//! distances resolve to the lower index and the output is fully
//! deterministic.

const LEAF_SIZE: usize = 16;

#[derive(Debug, Clone)]
enum Node {
    Leaf { start: usize, end: usize },
    Split { dim: usize, value: f32, left: usize, right: usize },
}

#[derive(Debug, Clone)]
pub struct KdTree {
    dims: usize,
    points: Vec<f32>,
    order: Vec<u32>,
    nodes: Vec<Node>,
}

impl KdTree {
    /// `points` is row-major `[point][dim]`.
    pub fn build(points: Vec<f32>, dims: usize) -> Self {
        assert!(dims > 0 && points.len().is_multiple_of(dims));
        let n = points.len() / dims;
        let mut tree = Self {
            dims,
            points,
            order: (0..n as u32).collect(),
            nodes: Vec::new(),
        };
        if n > 0 {
            tree.build_node(0, n);
        }
        tree
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    pub fn dims(&self) -> usize {
        self.dims
    }

    pub fn point(&self, i: usize) -> &[f32] {
        &self.points[i * self.dims..(i + 1) * self.dims]
    }

    fn build_node(&mut self, start: usize, end: usize) -> usize {
        let id = self.nodes.len();
        if end - start <= LEAF_SIZE {
            self.nodes.push(Node::Leaf { start, end });
            return id;
        }
        let dim = self.widest_dim(start, end);
        let mid = (end - start) / 2;
        let (points, dims) = (&self.points, self.dims);
        let key = |i: &u32| (points[*i as usize * dims + dim], *i);
        self.order[start..end].select_nth_unstable_by(mid, |a, b| {
            let (ka, kb) = (key(a), key(b));
            ka.0.total_cmp(&kb.0).then(ka.1.cmp(&kb.1))
        });
        let value = key(&self.order[start + mid]).0;
        self.nodes.push(Node::Leaf { start: 0, end: 0 });
        let left = self.build_node(start, start + mid);
        let right = self.build_node(start + mid, end);
        self.nodes[id] = Node::Split {
            dim,
            value,
            left,
            right,
        };
        id
    }

    fn widest_dim(&self, start: usize, end: usize) -> usize {
        (0..self.dims)
            .map(|d| {
                let (lo, hi) = self.order[start..end].iter().fold(
                    (f32::INFINITY, f32::NEG_INFINITY),
                    |(lo, hi), &i| {
                        let v = self.points[i as usize * self.dims + d];
                        (lo.min(v), hi.max(v))
                    },
                );
                (d, hi - lo)
            })
            .fold((0, f32::NEG_INFINITY), |best, (d, spread)| {
                if spread > best.1 {
                    (d, spread)
                } else {
                    best
                }
            })
            .0
    }

    #[inline]
    fn dist2(&self, q: &[f32], i: usize) -> f32 {
        let p = self.point(i);
        let mut s = 0f32;
        for d in 0..self.dims {
            let t = q[d] - p[d];
            s += t * t;
        }
        s
    }

    /// The `k` nearest points to `q` as `(squared distance, index)`, ascending.
    pub fn nearest(&self, q: &[f32], k: usize, out: &mut Vec<(f32, u32)>) {
        out.clear();
        if k == 0 || self.is_empty() {
            return;
        }
        self.search(0, q, k, out);
    }

    fn search(&self, node: usize, q: &[f32], k: usize, out: &mut Vec<(f32, u32)>) {
        match self.nodes[node] {
            Node::Leaf { start, end } => {
                for &i in &self.order[start..end] {
                    let d = self.dist2(q, i as usize);
                    push_bounded(out, k, (d, i));
                }
            }
            Node::Split {
                dim,
                value,
                left,
                right,
            } => {
                let diff = q[dim] - value;
                let (near, far) = if diff < 0.0 { (left, right) } else { (right, left) };
                self.search(near, q, k, out);
                let full = out.len() == k;
                if !full || diff * diff <= out[k - 1].0 {
                    self.search(far, q, k, out);
                }
            }
        }
    }
}

#[inline]
fn push_bounded(out: &mut Vec<(f32, u32)>, k: usize, item: (f32, u32)) {
    let less = |a: &(f32, u32), b: &(f32, u32)| a.0 < b.0 || (a.0 == b.0 && a.1 < b.1);
    if out.len() == k {
        if !less(&item, &out[k - 1]) {
            return;
        }
        out.pop();
    }
    let pos = out.partition_point(|e| less(e, &item));
    out.insert(pos, item);
}
