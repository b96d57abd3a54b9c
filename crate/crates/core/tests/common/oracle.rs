//! Brute-force references kept independent of the library's solver path.

/// Minimum objective over every basic feasible solution of the
/// transportation polytope, found by enumerating all spanning trees of the
/// complete bipartite graph K_{n,m}. Exponential; meant for n + m <= 8.
pub fn exhaustive_ot(supply: &[f64], demand: &[f64], cost: &[Vec<f64>]) -> f64 {
    let (n, m) = (supply.len(), demand.len());
    let cells = n * m;
    let k = n + m - 1;
    let mut best = f64::INFINITY;
    let mut combo: Vec<usize> = (0..k).collect();
    loop {
        if let Some(flows) = tree_flows(&combo, n, m, supply, demand) {
            if flows.iter().all(|&x| x >= -1e-12) {
                let value: f64 = combo
                    .iter()
                    .zip(&flows)
                    .map(|(&c, &x)| x * cost[c / m][c % m])
                    .sum();
                best = best.min(value);
            }
        }
        // next k-combination of 0..cells
        let Some(i) = (0..k).rev().find(|&i| combo[i] < cells - k + i) else {
            return best;
        };
        combo[i] += 1;
        for j in i + 1..k {
            combo[j] = combo[j - 1] + 1;
        }
    }
}

/// Unique flows on a spanning tree, or `None` if the cells contain a cycle.
fn tree_flows(
    cells: &[usize],
    n: usize,
    m: usize,
    supply: &[f64],
    demand: &[f64],
) -> Option<Vec<f64>> {
    let nodes = n + m;
    let mut parent: Vec<usize> = (0..nodes).collect();
    fn find(p: &mut [usize], x: usize) -> usize {
        let mut r = x;
        while p[r] != r {
            r = p[r];
        }
        r
    }
    let edges: Vec<(usize, usize)> = cells.iter().map(|&c| (c / m, n + c % m)).collect();
    for &(a, b) in &edges {
        let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
        if ra == rb {
            return None;
        }
        parent[ra] = rb;
    }
    // n + m - 1 acyclic edges span all nodes. Solve by repeated leaf removal.
    let mut remaining: Vec<f64> = supply.iter().chain(demand).copied().collect();
    let mut alive = vec![true; edges.len()];
    let mut flows = vec![0.0; edges.len()];
    for _ in 0..edges.len() {
        let mut degree = vec![0usize; nodes];
        for (e, &(a, b)) in edges.iter().enumerate() {
            if alive[e] {
                degree[a] += 1;
                degree[b] += 1;
            }
        }
        let (e, leaf) = edges
            .iter()
            .enumerate()
            .filter(|(e, _)| alive[*e])
            .find_map(|(e, &(a, b))| {
                if degree[a] == 1 {
                    Some((e, a))
                } else if degree[b] == 1 {
                    Some((e, b))
                } else {
                    None
                }
            })
            .expect("a tree always has a leaf");
        let (a, b) = edges[e];
        let other = if leaf == a { b } else { a };
        let x = remaining[leaf];
        flows[e] = x;
        remaining[leaf] -= x;
        remaining[other] -= x;
        alive[e] = false;
    }
    Some(flows)
}

pub fn cosine(x: &[f64], y: &[f64]) -> f64 {
    let dot: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
    let nx = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    let ny = y.iter().map(|v| v * v).sum::<f64>().sqrt();
    (dot / (nx * ny)).clamp(-1.0, 1.0)
}

/// WRD computed with the exhaustive solver.
pub fn wrd_distance(xs: &[Vec<f64>], ys: &[Vec<f64>]) -> f64 {
    let norms = |vs: &[Vec<f64>]| -> Vec<f64> {
        let ns: Vec<f64> = vs
            .iter()
            .map(|v| v.iter().map(|x| x * x).sum::<f64>().sqrt())
            .collect();
        let total: f64 = ns.iter().sum();
        ns.into_iter().map(|n| n / total).collect()
    };
    let cost: Vec<Vec<f64>> = xs
        .iter()
        .map(|x| ys.iter().map(|y| 1.0 - cosine(x, y)).collect())
        .collect();
    exhaustive_ot(&norms(xs), &norms(ys), &cost)
}

pub fn cosine_of_means(xs: &[Vec<f64>], ys: &[Vec<f64>]) -> f64 {
    let mean = |vs: &[Vec<f64>]| -> Vec<f64> {
        let mut m = vec![0.0; vs[0].len()];
        for v in vs {
            for (a, b) in m.iter_mut().zip(v) {
                *a += b / vs.len() as f64;
            }
        }
        m
    };
    cosine(&mean(xs), &mean(ys))
}
