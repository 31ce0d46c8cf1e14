//! Static k-d tree over a borrowed point set, built per query batch.

use crate::scalar::Scalar;

use super::knn::{squared_distance, Nearest};

const LEAF_SIZE: usize = 8;

enum Node<T> {
    Leaf {
        start: usize,
        end: usize,
    },
    Split {
        dim: usize,
        value: T,
        left: Box<Node<T>>,
        right: Box<Node<T>>,
    },
}

pub struct KdTree<'a, T> {
    points: &'a [Vec<T>],
    order: Vec<usize>,
    root: Node<T>,
}

impl<'a, T: Scalar> KdTree<'a, T> {
    pub fn build(points: &'a [Vec<T>]) -> Self {
        let mut order: Vec<usize> = (0..points.len()).collect();
        let root = Self::build_node(points, &mut order, 0);
        Self {
            points,
            order,
            root,
        }
    }

    fn build_node(points: &[Vec<T>], order: &mut [usize], offset: usize) -> Node<T> {
        let n = order.len();
        if n <= LEAF_SIZE {
            return Node::Leaf {
                start: offset,
                end: offset + n,
            };
        }
        let r = points[order[0]].len();
        // Split on the widest coordinate.
        let mut best = (0, T::neg_infinity());
        for d in 0..r {
            let (lo, hi) = order
                .iter()
                .fold((T::infinity(), T::neg_infinity()), |(lo, hi), &i| {
                    (lo.min(points[i][d]), hi.max(points[i][d]))
                });
            if hi - lo > best.1 {
                best = (d, hi - lo);
            }
        }
        let dim = best.0;
        let mid = n / 2;
        order.select_nth_unstable_by(mid, |&a, &b| {
            points[a][dim]
                .partial_cmp(&points[b][dim])
                .unwrap_or(std::cmp::Ordering::Equal)
        });
        let value = points[order[mid]][dim];
        let (left, right) = order.split_at_mut(mid);
        Node::Split {
            dim,
            value,
            left: Box::new(Self::build_node(points, left, offset)),
            right: Box::new(Self::build_node(points, right, offset + mid)),
        }
    }

    /// The `k` nearest neighbours of point `query`, excluding itself.
    pub(crate) fn nearest_excluding(&self, query: usize, k: usize) -> Nearest<T> {
        let mut nn = Nearest::new(k);
        self.search(&self.root, query, &mut nn);
        nn
    }

    fn search(&self, node: &Node<T>, query: usize, nn: &mut Nearest<T>) {
        let q = &self.points[query];
        match node {
            Node::Leaf { start, end } => {
                for &j in &self.order[*start..*end] {
                    if j != query {
                        nn.offer(squared_distance(q, &self.points[j]), j);
                    }
                }
            }
            Node::Split {
                dim,
                value,
                left,
                right,
            } => {
                let diff = q[*dim] - *value;
                let (near, far) = if diff < T::zero() {
                    (left, right)
                } else {
                    (right, left)
                };
                self.search(near, query, nn);
                // Equal distances must still be visited so index ties resolve
                // the same way as the exhaustive search.
                if !nn.is_full() || diff * diff <= nn.worst() {
                    self.search(far, query, nn);
                }
            }
        }
    }
}
