//! Bipartite transport deficiency.
//!
//! For weights `a` (left) and `b` (right) and an adjacency relation, returns
//! `max_S [a(S) - b(N(S))]`, which by max-flow/min-cut equals
//! `a(total) - maxflow` on the network
//! `source -a_i-> i -inf-> j -b_j-> sink`.

const EPS: f64 = 1e-15;

struct Edge {
    to: usize,
    cap: f64,
}

struct Dinic {
    edges: Vec<Edge>,
    adj: Vec<Vec<usize>>,
    level: Vec<i32>,
    iter: Vec<usize>,
}

impl Dinic {
    fn new(n: usize) -> Self {
        Self { edges: Vec::new(), adj: vec![Vec::new(); n], level: vec![0; n], iter: vec![0; n] }
    }

    fn add(&mut self, u: usize, v: usize, cap: f64) {
        self.adj[u].push(self.edges.len());
        self.edges.push(Edge { to: v, cap });
        self.adj[v].push(self.edges.len());
        self.edges.push(Edge { to: u, cap: 0.0 });
    }

    fn bfs(&mut self, s: usize, t: usize) -> bool {
        self.level.iter_mut().for_each(|l| *l = -1);
        let mut queue = std::collections::VecDeque::new();
        self.level[s] = 0;
        queue.push_back(s);
        while let Some(u) = queue.pop_front() {
            for &e in &self.adj[u] {
                let v = self.edges[e].to;
                if self.edges[e].cap > EPS && self.level[v] < 0 {
                    self.level[v] = self.level[u] + 1;
                    queue.push_back(v);
                }
            }
        }
        self.level[t] >= 0
    }

    fn dfs(&mut self, u: usize, t: usize, f: f64) -> f64 {
        if u == t {
            return f;
        }
        while self.iter[u] < self.adj[u].len() {
            let e = self.adj[u][self.iter[u]];
            let v = self.edges[e].to;
            if self.edges[e].cap > EPS && self.level[v] == self.level[u] + 1 {
                let d = self.dfs(v, t, f.min(self.edges[e].cap));
                if d > 0.0 {
                    self.edges[e].cap -= d;
                    self.edges[e ^ 1].cap += d;
                    return d;
                }
            }
            self.iter[u] += 1;
        }
        0.0
    }

    fn max_flow(&mut self, s: usize, t: usize) -> f64 {
        let mut flow = 0.0;
        while self.bfs(s, t) {
            self.iter.iter_mut().for_each(|i| *i = 0);
            loop {
                let f = self.dfs(s, t, f64::INFINITY);
                if f <= 0.0 {
                    break;
                }
                flow += f;
            }
        }
        flow
    }
}

/// Deficiency via Dinic's algorithm on a general adjacency relation.
pub(crate) fn deficiency_dinic(a: &[f64], b: &[f64], adjacent: impl Fn(usize, usize) -> bool) -> f64 {
    let (m, n) = (a.len(), b.len());
    let s = m + n;
    let t = s + 1;
    let mut g = Dinic::new(m + n + 2);
    for (i, &w) in a.iter().enumerate() {
        g.add(s, i, w);
    }
    for (j, &w) in b.iter().enumerate() {
        g.add(m + j, t, w);
    }
    for i in 0..m {
        for j in 0..n {
            if adjacent(i, j) {
                g.add(i, m + j, f64::INFINITY);
            }
        }
    }
    let total: f64 = a.iter().sum();
    (total - g.max_flow(s, t)).max(0.0)
}

/// Deficiency for sorted points on the line with adjacency `|x_i - y_j| <= r`
/// (or `< r` when `strict`). Windows are monotone, so filling the leftmost
/// available capacity first is optimal.
pub(crate) fn deficiency_line(xs: &[f64], a: &[f64], ys: &[f64], b: &[f64], r: f64, strict: bool) -> f64 {
    let adj = |x: f64, y: f64| {
        let d = (x - y).abs();
        if strict {
            d < r
        } else {
            d <= r
        }
    };
    let mut cap = b.to_vec();
    let mut p = 0;
    let mut short = 0.0;
    for (i, &x) in xs.iter().enumerate() {
        let mut need = a[i];
        while p < ys.len() && (cap[p] <= 0.0 || (ys[p] < x && !adj(x, ys[p]))) {
            p += 1;
        }
        let mut j = p;
        while need > 0.0 && j < ys.len() && adj(x, ys[j]) {
            if cap[j] > 0.0 {
                if cap[j] >= need {
                    cap[j] -= need;
                    need = 0.0;
                } else {
                    need -= cap[j];
                    cap[j] = 0.0;
                }
            }
            j += 1;
        }
        short += need;
    }
    short
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dinic_simple() {
        let a = [0.5, 0.5];
        let b = [0.5, 0.5];
        assert!(deficiency_dinic(&a, &b, |i, j| i == j) < 1e-15);
        assert!((deficiency_dinic(&a, &b, |_, j| j == 0) - 0.5).abs() < 1e-15);
        assert!((deficiency_dinic(&a, &b, |_, _| false) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn line_matches_dinic_on_fixed_case() {
        let xs = [0.0, 0.4, 1.0];
        let a = [0.2, 0.5, 0.3];
        let ys = [0.1, 0.5, 0.9, 2.0];
        let b = [0.4, 0.1, 0.1, 0.4];
        for r in [0.05, 0.1, 0.2, 0.5, 1.0, 2.0] {
            let g1 = deficiency_line(&xs, &a, &ys, &b, r, false);
            let g2 = deficiency_dinic(&a, &b, |i, j| (xs[i] - ys[j]).abs() <= r);
            assert!((g1 - g2).abs() < 1e-12, "r={r}: {g1} vs {g2}");
        }
    }
}
