//! Dinic max-flow on real capacities.

use std::collections::VecDeque;

#[derive(Debug, Clone)]
struct Arc {
    to: usize,
    rev: usize,
    cap: f64,
}

#[derive(Debug, Clone)]
pub(crate) struct FlowNetwork {
    arcs: Vec<Vec<Arc>>,
    level: Vec<i64>,
    next: Vec<usize>,
    eps: f64,
}

impl FlowNetwork {
    /// `eps` is the residual capacity below which an arc counts as saturated.
    pub(crate) fn new(nodes: usize, eps: f64) -> Self {
        FlowNetwork {
            arcs: vec![Vec::new(); nodes],
            level: vec![-1; nodes],
            next: vec![0; nodes],
            eps,
        }
    }

    pub(crate) fn add_arc(&mut self, u: usize, v: usize, cap: f64) {
        let ru = self.arcs[v].len();
        let rv = self.arcs[u].len();
        self.arcs[u].push(Arc { to: v, rev: ru, cap });
        self.arcs[v].push(Arc { to: u, rev: rv, cap: 0.0 });
    }

    /// Undirected edge: capacity `cap` in both directions.
    pub(crate) fn add_edge(&mut self, u: usize, v: usize, cap: f64) {
        let ru = self.arcs[v].len();
        let rv = self.arcs[u].len();
        self.arcs[u].push(Arc { to: v, rev: ru, cap });
        self.arcs[v].push(Arc { to: u, rev: rv, cap });
    }

    fn bfs(&mut self, s: usize) {
        self.level.iter_mut().for_each(|l| *l = -1);
        self.level[s] = 0;
        let mut queue = VecDeque::from([s]);
        while let Some(u) = queue.pop_front() {
            for a in &self.arcs[u] {
                if a.cap > self.eps && self.level[a.to] < 0 {
                    self.level[a.to] = self.level[u] + 1;
                    queue.push_back(a.to);
                }
            }
        }
    }

    fn dfs(&mut self, u: usize, t: usize, limit: f64) -> f64 {
        if u == t {
            return limit;
        }
        while self.next[u] < self.arcs[u].len() {
            let i = self.next[u];
            let Arc { to, rev, cap } = self.arcs[u][i];
            if cap > self.eps && self.level[to] == self.level[u] + 1 {
                let pushed = self.dfs(to, t, limit.min(cap));
                if pushed > 0.0 {
                    self.arcs[u][i].cap -= pushed;
                    self.arcs[to][rev].cap += pushed;
                    return pushed;
                }
            }
            self.next[u] += 1;
        }
        0.0
    }

    pub(crate) fn max_flow(&mut self, s: usize, t: usize) -> f64 {
        let mut flow = 0.0;
        loop {
            self.bfs(s);
            if self.level[t] < 0 {
                return flow;
            }
            self.next.iter_mut().for_each(|x| *x = 0);
            loop {
                let pushed = self.dfs(s, t, f64::INFINITY);
                if pushed <= 0.0 {
                    break;
                }
                flow += pushed;
            }
        }
    }

    /// Nodes reachable from `s` in the residual network (valid after `max_flow`).
    pub(crate) fn source_side(&mut self, s: usize) -> Vec<bool> {
        self.bfs(s);
        self.level.iter().map(|&l| l >= 0).collect()
    }
}
