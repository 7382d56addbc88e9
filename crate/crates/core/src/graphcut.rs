//! Exact minimization for convex priors by a minimum cut.
//!
//! Every node `s` owns a column `a(s, 0..=L)`; the cut passes through the
//! unary arc `a(s, i) -> a(s, i+1)` of the chosen label. A column node
//! `a(s, i)` lies on the sink side exactly when the cumulative indicator
//! `X_s^i = [label < i]` is one, so arcs `u -> v` charge `[X_v - X_u]_+`.

use std::collections::VecDeque;

use crate::model::{LabelAssignment, MrfInstance};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CutArc {
    pub from: usize,
    pub to: usize,
    pub cap: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CutGraph {
    pub node_count: usize,
    pub arcs: Vec<CutArc>,
    pub source: usize,
    pub sink: usize,
    pub nodes: usize,
    pub labels: usize,
    pub big_m: f64,
}

impl CutGraph {
    /// Id of `a(s, i)`.
    pub fn column(&self, s: usize, i: usize) -> usize {
        column_id(self.labels, s, i)
    }
}

fn column_id(labels: usize, s: usize, i: usize) -> usize {
    2 + s * (labels + 1) + i
}

/// Capacities are finite except for the structural arcs, which get `big_m`.
pub fn build_cut_graph(inst: &MrfInstance) -> Result<(CutGraph, f64)> {
    let l = inst.label_count();
    let li = l as i64;
    let n = inst.node_count();
    let col = |s: usize, i: i64| column_id(l, s, i.clamp(0, li) as usize);
    let mut offset = 0.0;
    let mut unary: Vec<f64> = inst.unary_table().to_vec();
    let mut finite: Vec<CutArc> = Vec::new();
    let mut hard: Vec<(usize, usize)> = Vec::new();
    for (e, &(s, t)) in inst.topology().edges().iter().enumerate() {
        let hp = inst.edge_potential(e).to_hinge(l)?;
        let w = inst.edge_weight(e);
        if w > 0.0 {
            // w alpha (label_t - label_s)
            for i in 0..l {
                unary[s * l + i] -= w * hp.alpha * i as f64;
                unary[t * l + i] += w * hp.alpha * i as f64;
            }
            offset += w * hp.beta;
            for hg in &hp.hinges {
                let cap = w * hg.gamma;
                for i in 1.min(1 + hg.delta)..=(li - 1).max(li - 1 + hg.delta) {
                    let (head, tail) = (i.clamp(0, li), (i - hg.delta).clamp(0, li));
                    match (tail, head) {
                        (0, h) if h == li => offset += cap,
                        (tl, 0) if tl == li => {}
                        _ => finite.push(CutArc { from: col(t, tail), to: col(s, head), cap }),
                    }
                }
            }
        }
        if let Some(hi) = hp.h_max {
            for i in 1..=li {
                if i + hi < li {
                    hard.push((col(t, i + hi), col(s, i)));
                }
            }
        }
        if let Some(lo) = hp.h_min {
            for m in 1..=li {
                if m - lo < li {
                    hard.push((col(s, m - lo), col(t, m)));
                }
            }
        }
    }
    for s in 0..n {
        let row = &mut unary[s * l..(s + 1) * l];
        let shift = row.iter().copied().filter(|v| v.is_finite()).fold(f64::INFINITY, f64::min);
        if !shift.is_finite() {
            return Err(Error::InvalidInstance(format!("node {s} has no finite unary")));
        }
        offset += shift;
        for (i, v) in row.iter().enumerate() {
            let cap = v - shift;
            if cap.is_finite() {
                finite.push(CutArc { from: col(s, i as i64), to: col(s, i as i64 + 1), cap });
            } else {
                hard.push((col(s, i as i64), col(s, i as i64 + 1)));
            }
        }
    }
    if let Some(a) = finite.iter().find(|a| a.cap.is_nan() || a.cap < 0.0) {
        return Err(Error::InvalidInstance(format!("negative capacity {} on arc {} -> {}", a.cap, a.from, a.to)));
    }
    let big_m = 1.0 + finite.iter().map(|a| a.cap).sum::<f64>();
    let mut arcs = finite;
    arcs.extend(hard.into_iter().map(|(from, to)| CutArc { from, to, cap: big_m }));
    for s in 0..n {
        arcs.push(CutArc { from: 0, to: column_id(l, s, 0), cap: big_m });
        arcs.push(CutArc { from: column_id(l, s, l), to: 1, cap: big_m });
        for i in 0..l {
            arcs.push(CutArc { from: column_id(l, s, i + 1), to: column_id(l, s, i), cap: big_m });
        }
    }
    let g = CutGraph { node_count: 2 + n * (l + 1), arcs, source: 0, sink: 1, nodes: n, labels: l, big_m };
    Ok((g, offset))
}

struct Residual {
    head: Vec<usize>,
    cap: Vec<f64>,
    first: Vec<usize>,
    next: Vec<usize>,
}

const NONE: usize = usize::MAX;

impl Residual {
    fn new(g: &CutGraph) -> Self {
        let mut r = Residual {
            head: Vec::with_capacity(2 * g.arcs.len()),
            cap: Vec::with_capacity(2 * g.arcs.len()),
            first: vec![NONE; g.node_count],
            next: Vec::with_capacity(2 * g.arcs.len()),
        };
        for a in &g.arcs {
            r.push(a.from, a.to, a.cap);
            r.push(a.to, a.from, 0.0);
        }
        r
    }

    fn push(&mut self, from: usize, to: usize, cap: f64) {
        self.head.push(to);
        self.cap.push(cap);
        self.next.push(self.first[from]);
        self.first[from] = self.head.len() - 1;
    }
}

/// Dinic's algorithm. Returns the flow value and, per graph node, whether it
/// is reachable from the source in the final residual graph.
pub fn max_flow(g: &CutGraph) -> (f64, Vec<bool>) {
    let mut r = Residual::new(g);
    let max_cap = g.arcs.iter().map(|a| a.cap).fold(0.0, f64::max);
    let eps = 1e-12 * max_cap.max(1.0);
    let mut flow = 0.0;
    let nn = g.node_count;
    let mut level = vec![usize::MAX; nn];
    let mut it = vec![NONE; nn];
    loop {
        level.fill(usize::MAX);
        level[g.source] = 0;
        let mut q = VecDeque::from([g.source]);
        while let Some(u) = q.pop_front() {
            let mut a = r.first[u];
            while a != NONE {
                let v = r.head[a];
                if r.cap[a] > eps && level[v] == usize::MAX {
                    level[v] = level[u] + 1;
                    q.push_back(v);
                }
                a = r.next[a];
            }
        }
        if level[g.sink] == usize::MAX {
            break;
        }
        it.copy_from_slice(&r.first);
        loop {
            let pushed = augment(&mut r, &level, &mut it, g.source, g.sink, eps);
            if pushed <= eps {
                break;
            }
            flow += pushed;
        }
    }
    let mut seen = vec![false; nn];
    seen[g.source] = true;
    let mut q = VecDeque::from([g.source]);
    while let Some(u) = q.pop_front() {
        let mut a = r.first[u];
        while a != NONE {
            let v = r.head[a];
            if r.cap[a] > eps && !seen[v] {
                seen[v] = true;
                q.push_back(v);
            }
            a = r.next[a];
        }
    }
    (flow, seen)
}

/// One blocking-flow augmentation along a level-increasing path (iterative DFS).
fn augment(r: &mut Residual, level: &[usize], it: &mut [usize], s: usize, t: usize, eps: f64) -> f64 {
    let mut path: Vec<usize> = Vec::new();
    let mut u = s;
    loop {
        if u == t {
            let b = path.iter().map(|&a| r.cap[a]).fold(f64::INFINITY, f64::min);
            for &a in &path {
                r.cap[a] -= b;
                r.cap[a ^ 1] += b;
            }
            return b;
        }
        let mut advanced = false;
        while it[u] != NONE {
            let a = it[u];
            let v = r.head[a];
            if r.cap[a] > eps && level[v] == level[u] + 1 {
                path.push(a);
                u = v;
                advanced = true;
                break;
            }
            it[u] = r.next[a];
        }
        if !advanced {
            match path.pop() {
                None => return 0.0,
                Some(a) => {
                    u = r.head[a ^ 1];
                    it[u] = r.next[it[u]];
                }
            }
        }
    }
}

/// Label of every node from a source-side indicator.
pub fn extract_labeling(g: &CutGraph, source_side: &[bool]) -> Result<LabelAssignment> {
    let mut labels = Vec::with_capacity(g.nodes);
    for s in 0..g.nodes {
        let side: Vec<bool> = (0..=g.labels).map(|i| source_side[g.column(s, i)]).collect();
        let k = side.iter().take_while(|&&b| b).count();
        if k == 0 || k > g.labels || side[k..].iter().any(|&b| b) {
            return Err(Error::NonMonotoneCut(s));
        }
        labels.push(k - 1);
    }
    Ok(LabelAssignment { labels })
}

#[derive(Debug, Clone)]
pub struct CutSolution {
    pub labeling: LabelAssignment,
    pub flow: f64,
    pub offset: f64,
    pub energy: f64,
}

/// Builds the graph, cuts it and decodes the labeling.
pub fn solve_graphcut(inst: &MrfInstance) -> Result<CutSolution> {
    let (g, offset) = build_cut_graph(inst)?;
    let (flow, side) = max_flow(&g);
    if flow >= g.big_m {
        return Err(Error::InfeasibleLabeling("hard constraints admit no labeling".into()));
    }
    let labeling = extract_labeling(&g, &side)?;
    let energy = inst.energy_of_labeling(&labeling)?;
    Ok(CutSolution { labeling, flow, offset, energy })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::GraphTopology;
    use crate::oracle::brute_force_map;
    use crate::potentials::{ConvexHingePotential, Hinge};

    fn graph(n: usize, arcs: &[(usize, usize, f64)]) -> CutGraph {
        CutGraph {
            node_count: n,
            arcs: arcs.iter().map(|&(from, to, cap)| CutArc { from, to, cap }).collect(),
            source: 0,
            sink: 1,
            nodes: 0,
            labels: 0,
            big_m: 0.0,
        }
    }

    #[test]
    fn single_arc() {
        assert_eq!(max_flow(&graph(2, &[(0, 1, 3.0)])).0, 3.0);
    }

    #[test]
    fn diamond() {
        // source -> a (2) -> sink (1), source -> b (2) -> sink (3)
        let g = graph(4, &[(0, 2, 2.0), (2, 1, 1.0), (0, 3, 2.0), (3, 1, 3.0)]);
        let (f, side) = max_flow(&g);
        assert_eq!(f, 3.0);
        assert_eq!(side, vec![true, false, true, false]);
    }

    #[test]
    fn single_node_column() {
        let topo = GraphTopology::make_grid(1, 1).unwrap();
        let inst = MrfInstance::new(topo, 4, vec![3.0, 1.5, 2.0, 1.5], vec![], vec![], vec![]).unwrap();
        let sol = solve_graphcut(&inst).unwrap();
        assert_eq!(sol.flow + sol.offset, 1.5);
        assert_eq!(sol.energy, 1.5);
    }

    #[test]
    fn asymmetric_l1_arcs() {
        // gamma [h]_+ with L = 2: a single lateral arc
        let topo = GraphTopology::chain(2).unwrap();
        let hp = ConvexHingePotential::new(0.0, 0.0, vec![Hinge { gamma: 1.0, delta: 0 }]).unwrap();
        let inst = MrfInstance::homogeneous(topo, 2, vec![0.0; 4], hp.into()).unwrap();
        let (g, _) = build_cut_graph(&inst).unwrap();
        let lateral: Vec<_> = g.arcs.iter().filter(|a| a.cap == 1.0).collect();
        assert_eq!(lateral.len(), 1);
        assert_eq!((lateral[0].from, lateral[0].to), (g.column(1, 1), g.column(0, 1)));
    }

    #[test]
    fn abs_chain_matches_brute_force() {
        let topo = GraphTopology::chain(3).unwrap();
        let hp = ConvexHingePotential::max_affine_to_hinge(&[(1.0, 0.0), (-1.0, 0.0)]).unwrap();
        let unary = vec![0.0, 2.0, 3.0, 2.5, 2.0, 0.0, 1.0, 0.0, 3.0];
        let inst = MrfInstance::homogeneous(topo, 3, unary, hp.into()).unwrap();
        let sol = solve_graphcut(&inst).unwrap();
        let (_, e) = brute_force_map(&inst).unwrap();
        assert_eq!(sol.energy, e);
        assert!((sol.flow + sol.offset - e).abs() < 1e-9);
    }

    #[test]
    fn lipschitz_bounds_respected() {
        let topo = GraphTopology::chain(2).unwrap();
        let inst = MrfInstance::homogeneous(
            topo,
            5,
            vec![0.0, 5.0, 5.0, 5.0, 5.0, 5.0, 5.0, 5.0, 5.0, 0.0],
            ConvexHingePotential::lipschitz(2).unwrap().into(),
        )
        .unwrap();
        let sol = solve_graphcut(&inst).unwrap();
        let (_, e) = brute_force_map(&inst).unwrap();
        assert_eq!(sol.energy, e);
        let lab = &sol.labeling.labels;
        assert!((lab[1] as i64 - lab[0] as i64).abs() <= 2);
    }

    #[test]
    fn non_convex_rejected() {
        let inst = MrfInstance::gen_random_instance(2, 2, 5, 0).unwrap();
        assert!(matches!(build_cut_graph(&inst), Err(Error::NonConvex(_))));
    }
}
