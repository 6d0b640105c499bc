//! Fill-reducing ordering by recursive bisection on breadth-first level
//! structures.
//!
//! Each subgraph is split at the middle level of a BFS rooted at a
//! pseudo-peripheral vertex. A BFS level separates the levels on either side,
//! so ordering both halves before the separator keeps fill inside the
//! blocks. On surface meshes the levels are rings of roughly `√n` vertices.

use crate::fem::SparsityPattern;

const LEAF_SIZE: usize = 48;

/// Returns `perm` with `perm[new] = old`.
pub fn nested_dissection(pattern: &SparsityPattern) -> Vec<usize> {
    let n = pattern.dim();
    let mut state = State {
        pattern,
        member: vec![0; n],
        seen: vec![0; n],
        stamp: 0,
        order: Vec::with_capacity(n),
    };
    state.dissect((0..n).collect());
    debug_assert_eq!(state.order.len(), n);
    state.order
}

struct State<'a> {
    pattern: &'a SparsityPattern,
    member: Vec<u32>,
    seen: Vec<u32>,
    stamp: u32,
    order: Vec<usize>,
}

impl State<'_> {
    fn next_stamp(&mut self) -> u32 {
        self.stamp += 1;
        self.stamp
    }

    /// BFS restricted to current members; returns the levels.
    fn levels(&mut self, root: usize, group: u32) -> Vec<Vec<usize>> {
        let mark = self.next_stamp();
        self.seen[root] = mark;
        let mut levels = vec![vec![root]];
        loop {
            let mut next = Vec::new();
            for &v in levels.last().unwrap() {
                for &w in self.pattern.row(v) {
                    if self.member[w] == group && self.seen[w] != mark {
                        self.seen[w] = mark;
                        next.push(w);
                    }
                }
            }
            if next.is_empty() {
                return levels;
            }
            levels.push(next);
        }
    }

    fn dissect(&mut self, nodes: Vec<usize>) {
        if nodes.len() <= LEAF_SIZE {
            self.order.extend(nodes);
            return;
        }
        let group = self.next_stamp();
        for &v in &nodes {
            self.member[v] = group;
        }

        // Pseudo-peripheral root: restart from the far end of the deepest
        // level while the eccentricity keeps growing.
        let mut levels = self.levels(nodes[0], group);
        for _ in 0..4 {
            let far = *levels
                .last()
                .unwrap()
                .iter()
                .min_by_key(|&&v| self.degree_in(v, group))
                .unwrap();
            let candidate = self.levels(far, group);
            if candidate.len() <= levels.len() {
                break;
            }
            levels = candidate;
        }

        let reached: usize = levels.iter().map(Vec::len).sum();
        if reached < nodes.len() {
            // Disconnected: the reached component and the rest are
            // independent.
            let mark = self.seen[levels[0][0]];
            let (inside, outside): (Vec<usize>, Vec<usize>) =
                nodes.into_iter().partition(|&v| self.seen[v] == mark);
            self.dissect(inside);
            self.dissect(outside);
            return;
        }

        let half = nodes.len() / 2;
        let mut acc = 0;
        let mut split = levels.len();
        for (k, level) in levels.iter().enumerate() {
            acc += level.len();
            if acc >= half {
                split = k;
                break;
            }
        }
        if split == 0 || split + 1 >= levels.len() {
            self.order.extend(levels.into_iter().flatten());
            return;
        }
        let separator = std::mem::take(&mut levels[split]);
        let after: Vec<usize> = levels.drain(split + 1..).flatten().collect();
        let before: Vec<usize> = levels.into_iter().flatten().collect();
        self.dissect(before);
        self.dissect(after);
        self.order.extend(separator);
    }

    fn degree_in(&self, v: usize, group: u32) -> usize {
        self.pattern
            .row(v)
            .iter()
            .filter(|&&w| w != v && self.member[w] == group)
            .count()
    }
}
