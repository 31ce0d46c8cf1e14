use rand::Rng;

/// Simple undirected graph stored as adjacency bitsets.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Graph {
    nodes: usize,
    words: usize,
    adj: Vec<u64>,
}

impl Graph {
    pub fn empty(nodes: usize) -> Self {
        let words = nodes.div_ceil(64).max(1);
        Self {
            nodes,
            words,
            adj: vec![0; nodes * words],
        }
    }

    pub fn nodes(&self) -> usize {
        self.nodes
    }

    fn row(&self, u: usize) -> &[u64] {
        &self.adj[u * self.words..(u + 1) * self.words]
    }

    pub fn add_edge(&mut self, u: usize, v: usize) {
        assert!(
            u != v && u < self.nodes && v < self.nodes,
            "invalid edge ({u}, {v})"
        );
        self.adj[u * self.words + v / 64] |= 1 << (v % 64);
        self.adj[v * self.words + u / 64] |= 1 << (u % 64);
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.adj[u * self.words + v / 64] & (1 << (v % 64)) != 0
    }

    pub fn edge_count(&self) -> u64 {
        self.adj
            .iter()
            .map(|w| u64::from(w.count_ones()))
            .sum::<u64>()
            / 2
    }

    /// Number of triangles, counting each once.
    pub fn triangle_count(&self) -> u64 {
        // Each triangle is seen once from each of its three edges.
        let mut total = 0u64;
        for u in 0..self.nodes {
            let ru = self.row(u);
            self.for_each_neighbour_above(u, |v| {
                let rv = self.row(v);
                total += ru
                    .iter()
                    .zip(rv)
                    .map(|(a, b)| u64::from((a & b).count_ones()))
                    .sum::<u64>();
            });
        }
        total / 3
    }

    fn for_each_neighbour_above(&self, u: usize, mut f: impl FnMut(usize)) {
        let row = self.row(u);
        let first_word = (u + 1) / 64;
        for (wi, &word) in row.iter().enumerate().skip(first_word) {
            let mut bits = if wi == first_word {
                word & (!0u64 << ((u + 1) % 64))
            } else {
                word
            };
            while bits != 0 {
                f(wi * 64 + bits.trailing_zeros() as usize);
                bits &= bits - 1;
            }
        }
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.nodes).flat_map(move |u| {
            ((u + 1)..self.nodes)
                .filter(move |&v| self.has_edge(u, v))
                .map(move |v| (u, v))
        })
    }

    /// Symmetric with an empty diagonal.
    pub fn is_well_formed(&self) -> bool {
        (0..self.nodes).all(|u| {
            !self.has_edge(u, u)
                && (0..self.nodes).all(|v| self.has_edge(u, v) == self.has_edge(v, u))
        })
    }

    /// Erdős–Rényi graph with independent edges of probability `p`. Each
    /// pair uses 32 random bits, so `p` is resolved to `2^-32`.
    pub fn erdos_renyi<R: Rng + ?Sized>(nodes: usize, p: f64, rng: &mut R) -> Self {
        let mut g = Self::empty(nodes);
        if p <= 0.0 {
            return g;
        }
        let threshold = if p >= 1.0 {
            u64::MAX
        } else {
            (p * 2f64.powi(32)) as u64
        };
        let mut draws = vec![0u32; nodes * nodes.saturating_sub(1) / 2];
        rng.fill(&mut draws[..]);
        let mut draws = draws.into_iter();
        for u in 0..nodes {
            let start = u + 1;
            for wi in start / 64..g.words {
                let lo = (wi * 64).max(start);
                let hi = ((wi + 1) * 64).min(nodes);
                let mut word = 0u64;
                for v in lo..hi {
                    word |= u64::from(u64::from(draws.next().unwrap_or(u32::MAX)) < threshold)
                        << (v % 64);
                }
                g.adj[u * g.words + wi] = word;
            }
        }
        // Mirror the upper triangle.
        let words = g.words;
        for u in 0..nodes {
            let first_word = (u + 1) / 64;
            for wi in first_word..words {
                let mut bits = g.adj[u * words + wi];
                if wi == first_word {
                    bits &= !0u64 << ((u + 1) % 64);
                }
                while bits != 0 {
                    let v = wi * 64 + bits.trailing_zeros() as usize;
                    g.adj[v * words + u / 64] |= 1 << (u % 64);
                    bits &= bits - 1;
                }
            }
        }
        g
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn three_cycle() {
        let mut g = Graph::empty(3);
        g.add_edge(0, 1);
        g.add_edge(1, 2);
        g.add_edge(2, 0);
        assert_eq!(g.edge_count(), 3);
        assert_eq!(g.triangle_count(), 1);
        assert!(g.is_well_formed());
        assert_eq!(g.edges().collect::<Vec<_>>(), vec![(0, 1), (0, 2), (1, 2)]);
    }

    #[test]
    fn complete_graph_over_word_boundary() {
        let n = 70;
        let mut g = Graph::empty(n);
        for u in 0..n {
            for v in (u + 1)..n {
                g.add_edge(u, v);
            }
        }
        assert_eq!(g.edge_count(), (n * (n - 1) / 2) as u64);
        assert_eq!(g.triangle_count(), (n * (n - 1) * (n - 2) / 6) as u64);
    }
}
