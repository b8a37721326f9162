//! Fill-reducing symmetric ordering by recursive graph bisection.
//!
//! Separators are taken from breadth-first level structures rooted at a
//! pseudo-peripheral vertex. On the elongated meshes used here this cuts the
//! domain into strips, giving separators proportional to the mesh width.

use super::CompressedMatrix;

const LEAF_SIZE: usize = 48;

/// Adjacency of the symmetrized pattern of a square matrix, diagonal excluded.
struct Graph {
    ptr: Vec<usize>,
    adj: Vec<usize>,
}

impl Graph {
    fn from_pattern(a: &CompressedMatrix) -> Self {
        let n = a.nrows();
        let mut degree = vec![0usize; n];
        for i in 0..n {
            for (j, _) in a.row(i) {
                if i != j {
                    degree[i] += 1;
                    degree[j] += 1;
                }
            }
        }
        let mut ptr = vec![0usize; n + 1];
        for i in 0..n {
            ptr[i + 1] = ptr[i] + degree[i];
        }
        let mut next = ptr.clone();
        let mut adj = vec![0usize; ptr[n]];
        for i in 0..n {
            for (j, _) in a.row(i) {
                if i != j {
                    adj[next[i]] = j;
                    next[i] += 1;
                    adj[next[j]] = i;
                    next[j] += 1;
                }
            }
        }
        // Sort and deduplicate each list in place, recording new extents.
        let mut new_ptr = vec![0usize; n + 1];
        let mut out = Vec::with_capacity(adj.len());
        for i in 0..n {
            let list = &mut adj[ptr[i]..ptr[i + 1]];
            list.sort_unstable();
            let mut last = usize::MAX;
            for &j in list.iter() {
                if j != last {
                    out.push(j);
                    last = j;
                }
            }
            new_ptr[i + 1] = out.len();
        }
        Self {
            ptr: new_ptr,
            adj: out,
        }
    }

    fn neighbors(&self, v: usize) -> &[usize] {
        &self.adj[self.ptr[v]..self.ptr[v + 1]]
    }
}

struct Dissection<'g> {
    graph: &'g Graph,
    /// Region label of each vertex; only vertices carrying the active label
    /// are visible to a traversal.
    region: Vec<usize>,
    mark: Vec<usize>,
    stamp: usize,
    next_label: usize,
    order: Vec<usize>,
}

impl Dissection<'_> {
    fn fresh_label(&mut self, members: &[usize]) -> usize {
        let label = self.next_label;
        self.next_label += 1;
        for &v in members {
            self.region[v] = label;
        }
        label
    }

    /// Breadth-first levels from `root` inside region `label`. Returns the
    /// vertices in visit order and the index where each level starts.
    fn bfs(&mut self, root: usize, label: usize) -> (Vec<usize>, Vec<usize>) {
        self.stamp += 1;
        let stamp = self.stamp;
        self.mark[root] = stamp;
        let mut visited = vec![root];
        let mut starts = vec![0];
        let mut begin = 0;
        loop {
            let end = visited.len();
            for idx in begin..end {
                let v = visited[idx];
                for &w in self.graph.neighbors(v) {
                    if self.region[w] == label && self.mark[w] != stamp {
                        self.mark[w] = stamp;
                        visited.push(w);
                    }
                }
            }
            if visited.len() == end {
                break;
            }
            starts.push(end);
            begin = end;
        }
        (visited, starts)
    }

    fn pseudo_peripheral(&mut self, start: usize, label: usize) -> usize {
        let mut root = start;
        let (mut visited, mut starts) = self.bfs(root, label);
        for _ in 0..8 {
            let last = &visited[*starts.last().unwrap()..];
            // Farthest vertex of minimum degree.
            let candidate = *last
                .iter()
                .min_by_key(|&&v| (self.local_degree(v, label), v))
                .unwrap();
            let (v2, s2) = self.bfs(candidate, label);
            if s2.len() > starts.len() {
                root = candidate;
                visited = v2;
                starts = s2;
            } else {
                break;
            }
        }
        root
    }

    fn local_degree(&self, v: usize, label: usize) -> usize {
        self.graph
            .neighbors(v)
            .iter()
            .filter(|&&w| self.region[w] == label)
            .count()
    }

    fn dissect(&mut self, members: Vec<usize>) {
        if members.len() <= LEAF_SIZE {
            let mut leaf = members;
            leaf.sort_unstable();
            self.order.extend(leaf);
            return;
        }
        let label = self.fresh_label(&members);

        // Split into connected components first.
        let (component, _) = self.bfs(members[0], label);
        if component.len() < members.len() {
            let comp_label = self.fresh_label(&component);
            let rest: Vec<usize> = members
                .iter()
                .copied()
                .filter(|&v| self.region[v] != comp_label)
                .collect();
            self.dissect(component);
            self.dissect(rest);
            return;
        }

        let root = self.pseudo_peripheral(members[0], label);
        let (visited, starts) = self.bfs(root, label);
        if starts.len() < 3 {
            let mut leaf = members;
            leaf.sort_unstable();
            self.order.extend(leaf);
            return;
        }
        // Middle level: first level whose end passes half of the vertices.
        let half = visited.len() / 2;
        let mut mid = 1;
        for l in 1..starts.len() {
            let end = starts.get(l + 1).copied().unwrap_or(visited.len());
            mid = l;
            if end >= half {
                break;
            }
        }
        mid = mid.min(starts.len() - 2).max(1);
        let sep_start = starts[mid];
        let sep_end = starts[mid + 1];
        let lower: Vec<usize> = visited[..sep_start].to_vec();
        let upper: Vec<usize> = visited[sep_end..].to_vec();

        // Keep only separator vertices that touch the upper part; the rest
        // join the lower part.
        let upper_label = self.fresh_label(&upper);
        let mut separator = Vec::new();
        let mut lower = lower;
        for &v in &visited[sep_start..sep_end] {
            if self
                .graph
                .neighbors(v)
                .iter()
                .any(|&w| self.region[w] == upper_label)
            {
                separator.push(v);
            } else {
                lower.push(v);
            }
        }
        self.dissect(lower);
        self.dissect(upper);
        separator.sort_unstable();
        self.order.extend(separator);
    }
}

/// Elimination order `perm` (`perm[k]` is the index eliminated at step `k`)
/// for the symmetrized pattern of `a`.
pub fn nested_dissection(a: &CompressedMatrix) -> Vec<usize> {
    let n = a.nrows();
    let graph = Graph::from_pattern(a);
    let mut nd = Dissection {
        graph: &graph,
        region: vec![0; n],
        mark: vec![0; n],
        stamp: 0,
        next_label: 1,
        order: Vec::with_capacity(n),
    };
    nd.dissect((0..n).collect());
    debug_assert_eq!(nd.order.len(), n);
    nd.order
}
