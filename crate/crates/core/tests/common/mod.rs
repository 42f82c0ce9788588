//! Reference solvers shared by the integration tests. They are slow and
//! generic on purpose and share no code with the library.

#![allow(dead_code)]

use mixchain::metrics::GridMeasure;
use mixchain::rng::SimRng;
use rand::Rng;

const PIVOT_TOL: f64 = 1e-12;

/// Dense tableau simplex for `max c.u` s.t. `A u <= b`, `u >= 0`, with
/// `b >= 0` so the slack basis is feasible. Bland's rule, no cycling.
pub fn simplex_max(a: &[Vec<f64>], b: &[f64], c: &[f64]) -> f64 {
    let (rows, vars) = (a.len(), c.len());
    let width = vars + rows + 1;
    let mut t = vec![vec![0.0; width]; rows + 1];
    for i in 0..rows {
        assert!(b[i] >= 0.0);
        t[i][..vars].copy_from_slice(&a[i]);
        t[i][vars + i] = 1.0;
        t[i][width - 1] = b[i];
    }
    for j in 0..vars {
        t[rows][j] = -c[j];
    }
    let mut basis: Vec<usize> = (vars..vars + rows).collect();
    loop {
        let Some(enter) = (0..width - 1).find(|&j| t[rows][j] < -PIVOT_TOL) else {
            return t[rows][width - 1];
        };
        let mut leave: Option<usize> = None;
        for i in 0..rows {
            if t[i][enter] > PIVOT_TOL {
                let ratio = t[i][width - 1] / t[i][enter];
                leave = match leave {
                    None => Some(i),
                    Some(l) => {
                        let best = t[l][width - 1] / t[l][enter];
                        if ratio < best - 1e-15 || (ratio <= best + 1e-15 && basis[i] < basis[l]) {
                            Some(i)
                        } else {
                            Some(l)
                        }
                    }
                };
            }
        }
        let r = leave.expect("bounded program");
        let p = t[r][enter];
        for v in t[r].iter_mut() {
            *v /= p;
        }
        let pivot_row = t[r].clone();
        for (i, row) in t.iter_mut().enumerate() {
            if i != r && row[enter] != 0.0 {
                let f = row[enter];
                for (v, pv) in row.iter_mut().zip(&pivot_row) {
                    *v -= f * pv;
                }
            }
        }
        basis[r] = enter;
    }
}

/// Merged support and signed mass difference `mu - nu`.
pub fn merged(mu: &GridMeasure, nu: &GridMeasure) -> (Vec<f64>, Vec<f64>) {
    let mut xs: Vec<f64> = mu.support().iter().chain(nu.support()).copied().collect();
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    let mut w = vec![0.0; xs.len()];
    for (x, p) in mu.support().iter().zip(mu.weights()) {
        w[xs.binary_search_by(|v| v.total_cmp(x)).unwrap()] += p;
    }
    for (x, p) in nu.support().iter().zip(nu.weights()) {
        w[xs.binary_search_by(|v| v.total_cmp(x)).unwrap()] -= p;
    }
    (xs, w)
}

/// Bounded-Lipschitz distance from its definition: `psi = u - 1` with
/// `u in [0, 2]` and `|psi_i - psi_j| <= min(|x_i - x_j|, cap)` for every pair.
pub fn bl_lp_oracle(mu: &GridMeasure, nu: &GridMeasure, cap: f64) -> f64 {
    let (xs, w) = merged(mu, nu);
    let k = xs.len();
    let mut a = Vec::new();
    let mut b = Vec::new();
    for i in 0..k {
        let mut row = vec![0.0; k];
        row[i] = 1.0;
        a.push(row);
        b.push(2.0);
        for j in 0..k {
            if i != j {
                let mut row = vec![0.0; k];
                row[i] = 1.0;
                row[j] = -1.0;
                a.push(row);
                b.push((xs[i] - xs[j]).abs().min(cap));
            }
        }
    }
    // sum w = 0, so sum w psi = sum w u
    let offset: f64 = w.iter().sum();
    simplex_max(&a, &b, &w) - offset
}

/// Optimal transport cost under `min(|x - y|, cap)`, solved on the primal
/// side by successive shortest augmenting paths.
pub fn capped_w1_primal(mu: &GridMeasure, nu: &GridMeasure, cap: f64) -> f64 {
    let (p, q) = (mu.len(), nu.len());
    // nodes: 0 source, 1..=p supply, p+1..=p+q demand, p+q+1 sink
    let nodes = p + q + 2;
    let sink = nodes - 1;
    let mut to = Vec::new();
    let mut capacity = Vec::new();
    let mut cost = Vec::new();
    let mut adj = vec![Vec::new(); nodes];
    let mut add = |u: usize, v: usize, c: f64, w: f64, adj: &mut Vec<Vec<usize>>| {
        adj[u].push(to.len());
        to.push(v);
        capacity.push(c);
        cost.push(w);
        adj[v].push(to.len());
        to.push(u);
        capacity.push(0.0);
        cost.push(-w);
    };
    for i in 0..p {
        add(0, 1 + i, mu.weights()[i], 0.0, &mut adj);
    }
    for j in 0..q {
        add(1 + p + j, sink, nu.weights()[j], 0.0, &mut adj);
    }
    for i in 0..p {
        for j in 0..q {
            let d = (mu.support()[i] - nu.support()[j]).abs().min(cap);
            add(1 + i, 1 + p + j, f64::INFINITY, d, &mut adj);
        }
    }
    let mut total = 0.0;
    let mut shipped = 0.0;
    while shipped < 1.0 - 1e-14 {
        let mut dist = vec![f64::INFINITY; nodes];
        let mut via = vec![usize::MAX; nodes];
        dist[0] = 0.0;
        for _ in 0..nodes {
            let mut changed = false;
            for u in 0..nodes {
                if dist[u] == f64::INFINITY {
                    continue;
                }
                for &e in &adj[u] {
                    if capacity[e] > 1e-15 && dist[u] + cost[e] < dist[to[e]] - 1e-15 {
                        dist[to[e]] = dist[u] + cost[e];
                        via[to[e]] = e;
                        changed = true;
                    }
                }
            }
            if !changed {
                break;
            }
        }
        if dist[sink] == f64::INFINITY {
            break;
        }
        let mut push = f64::INFINITY;
        let mut v = sink;
        while v != 0 {
            let e = via[v];
            push = push.min(capacity[e]);
            v = to[e ^ 1];
        }
        let mut v = sink;
        while v != 0 {
            let e = via[v];
            capacity[e] -= push;
            capacity[e ^ 1] += push;
            v = to[e ^ 1];
        }
        total += push * dist[sink];
        shipped += push;
    }
    total
}

/// A random measure with `atoms` atoms. Positions are drawn from a coarse
/// lattice half of the time so that two measures often share support points.
pub fn random_measure(rng: &mut SimRng, atoms: usize) -> GridMeasure {
    let lattice = rng.random::<bool>();
    let mut xs: Vec<f64> = Vec::with_capacity(atoms);
    while xs.len() < atoms {
        let x = if lattice {
            f64::from(rng.random_range(-12..=12i32)) * 0.25
        } else {
            rng.random_range(-3.0..3.0)
        };
        if !xs.contains(&x) {
            xs.push(x);
        }
    }
    xs.sort_by(f64::total_cmp);
    let masses: Vec<f64> = (0..atoms).map(|_| rng.random::<f64>() + 1e-3).collect();
    GridMeasure::from_masses(xs, masses).unwrap()
}
