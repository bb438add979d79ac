//! Directed modularity and its greedy agglomerative maximisation.
//!
//! For a digraph with `m` edges, a partition into modules scores
//!
//! ```text
//! Q = sum over modules c of  e_c / m  -  (in_c * out_c) / m^2
//! ```
//!
//! where `e_c` counts edges with both ends in `c` and `in_c`/`out_c` are the
//! summed in- and out-degrees of its nodes. All quantities are integers, so
//! merge gains are compared exactly as `m^2 * dQ`.

/// Modularity of `partition` (module label per node). Zero for an edgeless graph.
pub fn modularity(nodes: usize, edges: &[(usize, usize)], partition: &[usize]) -> f64 {
    assert_eq!(partition.len(), nodes, "one module label per node");
    let m = edges.len() as i64;
    if m == 0 {
        return 0.0;
    }
    let modules = partition.iter().copied().max().map_or(0, |x| x + 1);
    let mut inside = vec![0i64; modules];
    let mut indeg = vec![0i64; modules];
    let mut outdeg = vec![0i64; modules];
    for &(s, t) in edges {
        outdeg[partition[s]] += 1;
        indeg[partition[t]] += 1;
        if partition[s] == partition[t] {
            inside[partition[s]] += 1;
        }
    }
    let scaled: i64 = (0..modules)
        .map(|c| inside[c] * m - indeg[c] * outdeg[c])
        .sum();
    scaled as f64 / (m * m) as f64
}

/// Best partition found by greedy merging, with its modularity.
#[derive(Debug, Clone, PartialEq)]
pub struct Partition {
    pub q: f64,
    /// Module label per node, labels compacted to `0..k`.
    pub labels: Vec<usize>,
}

/// Starts from singletons and repeatedly applies the merge with the largest
/// positive gain. Ties go to the lexicographically first pair of modules.
pub fn greedy_modularity(nodes: usize, edges: &[(usize, usize)]) -> Partition {
    let m = edges.len() as i64;
    if m == 0 {
        return Partition {
            q: 0.0,
            labels: (0..nodes).collect(),
        };
    }
    // between[a][b]: edges from module a to module b
    let mut between = vec![vec![0i64; nodes]; nodes];
    let mut indeg = vec![0i64; nodes];
    let mut outdeg = vec![0i64; nodes];
    for &(s, t) in edges {
        between[s][t] += 1;
        outdeg[s] += 1;
        indeg[t] += 1;
    }
    let mut alive = vec![true; nodes];
    let mut owner: Vec<usize> = (0..nodes).collect();

    loop {
        let mut best: Option<(i64, usize, usize)> = None;
        for a in 0..nodes {
            if !alive[a] {
                continue;
            }
            for b in (a + 1)..nodes {
                if !alive[b] {
                    continue;
                }
                let links = between[a][b] + between[b][a];
                if links == 0 {
                    // cannot be a positive merge
                    continue;
                }
                let gain = m * links - (indeg[a] * outdeg[b] + indeg[b] * outdeg[a]);
                if gain > 0 && best.is_none_or(|(g, _, _)| gain > g) {
                    best = Some((gain, a, b));
                }
            }
        }
        let Some((_, a, b)) = best else { break };
        for c in 0..nodes {
            between[a][c] += between[b][c];
            between[b][c] = 0;
        }
        for c in 0..nodes {
            between[c][a] += between[c][b];
            between[c][b] = 0;
        }
        indeg[a] += indeg[b];
        outdeg[a] += outdeg[b];
        alive[b] = false;
        for o in owner.iter_mut() {
            if *o == b {
                *o = a;
            }
        }
    }

    let mut relabel = vec![usize::MAX; nodes];
    let mut next = 0;
    let labels = owner
        .iter()
        .map(|&o| {
            if relabel[o] == usize::MAX {
                relabel[o] = next;
                next += 1;
            }
            relabel[o]
        })
        .collect::<Vec<_>>();
    Partition {
        q: modularity(nodes, edges, &labels),
        labels,
    }
}
