//! MRF instances, labelings and their energies, instance generation and the
//! JSON instance format.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::potentials::{BoundedLinearPiece, ConvexHingePotential, Hinge, PiecewiseLinearPotential};
use crate::rng::SplitMix64;
use crate::{Error, Result, INFEASIBLE};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Orientation {
    Horizontal,
    Vertical,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GridInfo {
    pub width: usize,
    pub height: usize,
}

/// Graph topology. Grid topologies carry per-edge orientation and the
/// forward-difference neighbor lookup.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphTopology {
    node_count: usize,
    edges: Vec<(usize, usize)>,
    grid: Option<GridInfo>,
    orientation: Vec<Orientation>,
    right_edge: Vec<Option<usize>>,
    down_edge: Vec<Option<usize>>,
}

impl GraphTopology {
    pub fn from_edges(node_count: usize, edges: Vec<(usize, usize)>) -> Result<Self> {
        for &(s, t) in &edges {
            if s >= node_count || t >= node_count {
                return Err(Error::InvalidInstance(format!("edge ({s}, {t}) out of range")));
            }
            if s == t {
                return Err(Error::InvalidInstance(format!("self edge at node {s}")));
            }
        }
        Ok(Self {
            node_count,
            edges,
            grid: None,
            orientation: Vec::new(),
            right_edge: Vec::new(),
            down_edge: Vec::new(),
        })
    }

    /// Chain `0 - 1 - ... - (n-1)`.
    pub fn chain(n: usize) -> Result<Self> {
        Self::from_edges(n, (1..n).map(|s| (s - 1, s)).collect())
    }

    /// 4-connected forward-difference grid: each pixel links to its right and
    /// down neighbor. Pixels are row-major.
    pub fn make_grid(width: usize, height: usize) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidInstance(format!("grid {width}x{height} is empty")));
        }
        let n = width * height;
        let mut edges = Vec::with_capacity(2 * n);
        let mut orientation = Vec::with_capacity(2 * n);
        let mut right_edge = vec![None; n];
        let mut down_edge = vec![None; n];
        for y in 0..height {
            for x in 0..width {
                let s = y * width + x;
                if x + 1 < width {
                    right_edge[s] = Some(edges.len());
                    edges.push((s, s + 1));
                    orientation.push(Orientation::Horizontal);
                }
                if y + 1 < height {
                    down_edge[s] = Some(edges.len());
                    edges.push((s, s + width));
                    orientation.push(Orientation::Vertical);
                }
            }
        }
        Ok(Self {
            node_count: n,
            edges,
            grid: Some(GridInfo { width, height }),
            orientation,
            right_edge,
            down_edge,
        })
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn grid(&self) -> Option<GridInfo> {
        self.grid
    }

    pub fn orientation(&self, e: usize) -> Option<Orientation> {
        self.orientation.get(e).copied()
    }

    /// Edge from `s` to its right neighbor (grid only).
    pub fn right_edge(&self, s: usize) -> Option<usize> {
        self.right_edge.get(s).copied().flatten()
    }

    /// Edge from `s` to its lower neighbor (grid only).
    pub fn down_edge(&self, s: usize) -> Option<usize> {
        self.down_edge.get(s).copied().flatten()
    }

    /// `true` if the graph has no cycles.
    pub fn is_forest(&self) -> bool {
        let mut parent: Vec<usize> = (0..self.node_count).collect();
        fn find(p: &mut [usize], mut a: usize) -> usize {
            while p[a] != a {
                p[a] = p[p[a]];
                a = p[a];
            }
            a
        }
        for &(s, t) in &self.edges {
            let (a, b) = (find(&mut parent, s), find(&mut parent, t));
            if a == b {
                return false;
            }
            parent[a] = b;
        }
        true
    }
}

/// A pairwise prior in either representation.
#[derive(Debug, Clone, PartialEq)]
pub enum Potential {
    Pwl(PiecewiseLinearPotential),
    Hinge(ConvexHingePotential),
}

impl Potential {
    pub fn evaluate(&self, h: i64) -> f64 {
        match self {
            Potential::Pwl(p) => p.evaluate(h),
            Potential::Hinge(p) => p.evaluate(h),
        }
    }

    pub fn samples(&self, labels: usize) -> Vec<f64> {
        match self {
            Potential::Pwl(p) => p.samples(labels),
            Potential::Hinge(p) => p.samples(labels),
        }
    }

    /// Bounded-linear-piece form.
    pub fn to_pwl(&self, labels: usize) -> Result<PiecewiseLinearPotential> {
        match self {
            Potential::Pwl(p) => Ok(p.clone()),
            Potential::Hinge(p) => PiecewiseLinearPotential::from_samples(&p.samples(labels)),
        }
    }

    /// Hinge form; fails for non-convex priors.
    pub fn to_hinge(&self, labels: usize) -> Result<ConvexHingePotential> {
        match self {
            Potential::Hinge(p) => Ok(p.clone()),
            Potential::Pwl(p) if p.len() == 1 => Ok(ConvexHingePotential::from_piece(&p.pieces()[0], labels)),
            Potential::Pwl(p) => ConvexHingePotential::from_convex_samples(&p.samples(labels)),
        }
    }
}

impl From<PiecewiseLinearPotential> for Potential {
    fn from(p: PiecewiseLinearPotential) -> Self {
        Potential::Pwl(p)
    }
}

impl From<ConvexHingePotential> for Potential {
    fn from(p: ConvexHingePotential) -> Self {
        Potential::Hinge(p)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelAssignment {
    pub labels: Vec<usize>,
}

impl LabelAssignment {
    pub fn new(labels: Vec<usize>, label_count: usize) -> Result<Self> {
        if let Some(&bad) = labels.iter().find(|&&l| l >= label_count) {
            return Err(Error::Dimension(format!("label {bad} out of range 0..{label_count}")));
        }
        Ok(Self { labels })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

/// A pairwise MRF: unary table, per-edge prior and per-edge weight.
#[derive(Debug, Clone, PartialEq)]
pub struct MrfInstance {
    topology: GraphTopology,
    labels: usize,
    unary: Vec<f64>,
    potentials: Vec<Potential>,
    edge_potential: Vec<usize>,
    edge_weight: Vec<f64>,
}

impl MrfInstance {
    pub fn new(
        topology: GraphTopology,
        labels: usize,
        unary: Vec<f64>,
        potentials: Vec<Potential>,
        edge_potential: Vec<usize>,
        edge_weight: Vec<f64>,
    ) -> Result<Self> {
        if labels == 0 {
            return Err(Error::InvalidInstance("label count must be positive".into()));
        }
        let n = topology.node_count();
        let m = topology.edge_count();
        if unary.len() != n * labels {
            return Err(Error::Dimension(format!(
                "unary table has {} entries, expected {n} x {labels}",
                unary.len()
            )));
        }
        if unary.iter().any(|v| v.is_nan()) {
            return Err(Error::InvalidInstance("NaN unary".into()));
        }
        if edge_potential.len() != m || edge_weight.len() != m {
            return Err(Error::Dimension(format!(
                "{m} edges but {} potential indices and {} weights",
                edge_potential.len(),
                edge_weight.len()
            )));
        }
        if let Some(&bad) = edge_potential.iter().find(|&&k| k >= potentials.len()) {
            return Err(Error::InvalidInstance(format!("potential index {bad} out of range")));
        }
        if let Some(w) = edge_weight.iter().find(|w| !w.is_finite() || **w < 0.0) {
            return Err(Error::InvalidInstance(format!("edge weight {w} must be finite and nonnegative")));
        }
        for p in &potentials {
            match p {
                Potential::Pwl(p) => p.check_labels(labels)?,
                Potential::Hinge(p) => p.validate()?,
            }
        }
        Ok(Self { topology, labels, unary, potentials, edge_potential, edge_weight })
    }

    /// Every edge shares `potential` with unit weight.
    pub fn homogeneous(topology: GraphTopology, labels: usize, unary: Vec<f64>, potential: Potential) -> Result<Self> {
        let m = topology.edge_count();
        Self::new(topology, labels, unary, vec![potential], vec![0; m], vec![1.0; m])
    }

    /// Grid instance with `theta_s^i ~ U(0, 2)` and truncated-linear priors
    /// `alpha_st * min{|h|, 2}`, `alpha_st ~ U(0, 1)`.
    ///
    /// Draw order: all unaries (node-major, then label), then one weight per
    /// edge in edge order.
    pub fn gen_random_instance(width: usize, height: usize, labels: usize, seed: u64) -> Result<Self> {
        let topology = GraphTopology::make_grid(width, height)?;
        let mut rng = SplitMix64::new(seed);
        let unary = (0..topology.node_count() * labels).map(|_| rng.uniform(0.0, 2.0)).collect();
        let m = topology.edge_count();
        let weights = (0..m).map(|_| rng.next_f64()).collect();
        let prior = PiecewiseLinearPotential::truncated_linear(2.0, labels);
        Self::new(topology, labels, unary, vec![prior.into()], vec![0; m], weights)
    }

    pub fn topology(&self) -> &GraphTopology {
        &self.topology
    }

    pub fn label_count(&self) -> usize {
        self.labels
    }

    pub fn node_count(&self) -> usize {
        self.topology.node_count()
    }

    pub fn edge_count(&self) -> usize {
        self.topology.edge_count()
    }

    pub fn unary(&self, s: usize) -> &[f64] {
        &self.unary[s * self.labels..(s + 1) * self.labels]
    }

    pub fn unary_table(&self) -> &[f64] {
        &self.unary
    }

    pub fn potentials(&self) -> &[Potential] {
        &self.potentials
    }

    pub fn edge_potential(&self, e: usize) -> &Potential {
        &self.potentials[self.edge_potential[e]]
    }

    pub fn edge_potential_index(&self, e: usize) -> usize {
        self.edge_potential[e]
    }

    pub fn edge_weight(&self, e: usize) -> f64 {
        self.edge_weight[e]
    }

    /// `w_st * theta_st(h)`; infeasible differences stay infeasible even at zero weight.
    pub fn pairwise(&self, e: usize, h: i64) -> f64 {
        let v = self.edge_potential(e).evaluate(h);
        if v == INFEASIBLE {
            INFEASIBLE
        } else {
            self.edge_weight[e] * v
        }
    }

    pub fn check_labeling(&self, a: &LabelAssignment) -> Result<()> {
        if a.len() != self.node_count() {
            return Err(Error::Dimension(format!(
                "labeling has {} entries, instance has {} nodes",
                a.len(),
                self.node_count()
            )));
        }
        if let Some(&bad) = a.labels.iter().find(|&&l| l >= self.labels) {
            return Err(Error::Dimension(format!("label {bad} out of range")));
        }
        Ok(())
    }

    /// `sum_s theta_s(a_s) + sum_st w_st theta_st(a_t - a_s)`.
    pub fn energy_of_labeling(&self, a: &LabelAssignment) -> Result<f64> {
        self.check_labeling(a)?;
        let mut e = 0.0;
        for (s, &l) in a.labels.iter().enumerate() {
            e += self.unary(s)[l];
        }
        for (k, &(s, t)) in self.topology.edges().iter().enumerate() {
            e += self.pairwise(k, a.labels[t] as i64 - a.labels[s] as i64);
        }
        Ok(e)
    }

    pub fn read_instance(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text)
    }

    pub fn write_instance(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: InstanceFile = serde_json::from_str(text)?;
        file.into_instance()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&InstanceFile::from_instance(self))?)
    }
}

/// Label at the 1/2-isolevel of the cumulative `X^i = sum_{j<i} x^j`
/// (after renormalizing): the smallest `i` with `X^{i+1} > 1/2`, so a
/// cumulative value of exactly 1/2 moves to the upper label.
pub fn round_superlevel(x: &[f64]) -> usize {
    let total: f64 = x.iter().map(|v| v.max(0.0)).sum();
    if total.is_nan() || total <= 0.0 {
        return 0;
    }
    let mut cum = 0.0;
    let mut label = 0;
    for (i, v) in x.iter().enumerate() {
        if cum / total <= 0.5 {
            label = i;
        } else {
            break;
        }
        cum += v.max(0.0);
    }
    label
}

#[derive(Debug, Serialize, Deserialize)]
struct InstanceFile {
    labels: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    width: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    height: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    nodes: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    edges: Option<Vec<[usize; 2]>>,
    unary: Vec<f64>,
    potentials: Vec<PotentialFile>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    edge_potential: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    edge_weight: Option<Vec<f64>>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(untagged)]
enum PotentialFile {
    Pieces { pieces: Vec<[f64; 4]> },
    Hinges { hinges: HingeFile },
}

#[derive(Debug, Serialize, Deserialize)]
struct HingeFile {
    alpha: f64,
    beta: f64,
    /// `[gamma, delta]` pairs.
    #[serde(default)]
    terms: Vec<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    h_min: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    h_max: Option<f64>,
}

fn integral(v: f64, what: &str) -> Result<i64> {
    if v.fract() != 0.0 || !v.is_finite() {
        return Err(Error::Format(format!("{what} must be an integer, got {v}")));
    }
    Ok(v as i64)
}

impl PotentialFile {
    fn from_potential(p: &Potential) -> Self {
        match p {
            Potential::Pwl(p) => PotentialFile::Pieces {
                pieces: p.pieces().iter().map(|q| [q.alpha, q.beta, q.h_lo as f64, q.h_hi as f64]).collect(),
            },
            Potential::Hinge(p) => PotentialFile::Hinges {
                hinges: HingeFile {
                    alpha: p.alpha,
                    beta: p.beta,
                    terms: p.hinges.iter().map(|h| [h.gamma, h.delta as f64]).collect(),
                    h_min: p.h_min.map(|v| v as f64),
                    h_max: p.h_max.map(|v| v as f64),
                },
            },
        }
    }

    fn into_potential(self) -> Result<Potential> {
        match self {
            PotentialFile::Pieces { pieces } => {
                let pieces = pieces
                    .into_iter()
                    .map(|[a, b, lo, hi]| {
                        BoundedLinearPiece::new(a, b, integral(lo, "h_lo")?, integral(hi, "h_hi")?)
                    })
                    .collect::<Result<Vec<_>>>()?;
                Ok(Potential::Pwl(PiecewiseLinearPotential::new(pieces)?))
            }
            PotentialFile::Hinges { hinges } => {
                let terms = hinges
                    .terms
                    .iter()
                    .map(|&[g, d]| Ok(Hinge { gamma: g, delta: integral(d, "delta")? }))
                    .collect::<Result<Vec<_>>>()?;
                let h_min = hinges.h_min.map(|v| integral(v, "h_min")).transpose()?;
                let h_max = hinges.h_max.map(|v| integral(v, "h_max")).transpose()?;
                Ok(Potential::Hinge(
                    ConvexHingePotential::new(hinges.alpha, hinges.beta, terms)?.with_bounds(h_min, h_max)?,
                ))
            }
        }
    }
}

impl InstanceFile {
    fn from_instance(inst: &MrfInstance) -> Self {
        let grid = inst.topology.grid();
        let all_unit = inst.edge_weight.iter().all(|&w| w == 1.0);
        let single = inst.potentials.len() == 1;
        InstanceFile {
            labels: inst.labels,
            width: grid.map(|g| g.width),
            height: grid.map(|g| g.height),
            nodes: grid.is_none().then_some(inst.node_count()),
            edges: grid
                .is_none()
                .then(|| inst.topology.edges().iter().map(|&(s, t)| [s, t]).collect()),
            unary: inst.unary.clone(),
            potentials: inst.potentials.iter().map(PotentialFile::from_potential).collect(),
            edge_potential: (!single).then(|| inst.edge_potential.clone()),
            edge_weight: (!all_unit).then(|| inst.edge_weight.clone()),
        }
    }

    fn into_instance(self) -> Result<MrfInstance> {
        if self.labels == 0 {
            return Err(Error::Format("labels must be positive".into()));
        }
        let topology = match (self.width, self.height, self.edges) {
            (Some(w), Some(h), None) => GraphTopology::make_grid(w, h)?,
            (Some(_), Some(_), Some(_)) => {
                return Err(Error::Format("edges must be omitted for grid instances".into()))
            }
            (None, None, edges) => {
                let edges: Vec<(usize, usize)> = edges.unwrap_or_default().into_iter().map(|[s, t]| (s, t)).collect();
                let nodes = match self.nodes {
                    Some(n) => n,
                    None if self.unary.len().is_multiple_of(self.labels) => self.unary.len() / self.labels,
                    None => return Err(Error::Format("cannot infer node count".into())),
                };
                GraphTopology::from_edges(nodes, edges)?
            }
            _ => return Err(Error::Format("width and height must be given together".into())),
        };
        let m = topology.edge_count();
        let potentials = self
            .potentials
            .into_iter()
            .map(PotentialFile::into_potential)
            .collect::<Result<Vec<_>>>()?;
        let edge_potential = match self.edge_potential {
            Some(v) => v,
            None if potentials.len() == 1 => vec![0; m],
            None => return Err(Error::Format("edge_potential is required with several potentials".into())),
        };
        let edge_weight = self.edge_weight.unwrap_or_else(|| vec![1.0; m]);
        MrfInstance::new(topology, self.labels, self.unary, potentials, edge_potential, edge_weight)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn chain_example() -> MrfInstance {
        let topo = GraphTopology::chain(2).unwrap();
        let prior = PiecewiseLinearPotential::from_samples(&[1.0, 1.0, 0.0, 1.0, 1.0]).unwrap();
        MrfInstance::homogeneous(topo, 3, vec![0.0, 1.0, 2.0, 2.0, 1.0, 0.0], prior.into()).unwrap()
    }

    #[test]
    fn chain_energies() {
        let inst = chain_example();
        let e = |l: Vec<usize>| inst.energy_of_labeling(&LabelAssignment::new(l, 3).unwrap()).unwrap();
        assert_eq!(e(vec![0, 2]), 1.0);
        assert_eq!(e(vec![1, 1]), 2.0);
        let best = (0..9).map(|k| e(vec![k / 3, k % 3])).fold(f64::INFINITY, f64::min);
        assert_eq!(best, 1.0);
    }

    #[test]
    fn single_node_energy() {
        let topo = GraphTopology::make_grid(1, 1).unwrap();
        let inst = MrfInstance::new(topo, 1, vec![5.0], vec![], vec![], vec![]).unwrap();
        assert_eq!(inst.energy_of_labeling(&LabelAssignment { labels: vec![0] }).unwrap(), 5.0);
    }

    #[test]
    fn energy_dimension_mismatch() {
        let inst = chain_example();
        assert!(inst.energy_of_labeling(&LabelAssignment { labels: vec![0] }).is_err());
        assert!(inst.energy_of_labeling(&LabelAssignment { labels: vec![0, 3] }).is_err());
    }

    #[test]
    fn grid_edge_counts() {
        assert_eq!(GraphTopology::make_grid(2, 2).unwrap().edge_count(), 4);
        assert_eq!(GraphTopology::make_grid(1, 1).unwrap().edge_count(), 0);
        let g = GraphTopology::make_grid(20, 20).unwrap();
        assert_eq!(g.edge_count(), 760);
        let h = g.orientation.iter().filter(|o| **o == Orientation::Horizontal).count();
        assert_eq!(h, 380);
        assert!(GraphTopology::make_grid(0, 3).is_err());
    }

    #[test]
    fn grid_neighbors() {
        let g = GraphTopology::make_grid(3, 2).unwrap();
        let e = g.right_edge(1).unwrap();
        assert_eq!(g.edges()[e], (1, 2));
        let e = g.down_edge(1).unwrap();
        assert_eq!(g.edges()[e], (1, 4));
        assert_eq!(g.right_edge(2), None);
        assert_eq!(g.down_edge(4), None);
    }

    #[test]
    fn random_instance_shape_and_determinism() {
        let a = MrfInstance::gen_random_instance(20, 20, 20, 11).unwrap();
        assert_eq!(a.node_count(), 400);
        assert_eq!(a.edge_count(), 760);
        assert!(a.unary_table().iter().all(|&v| (0.0..2.0).contains(&v)));
        assert!(a.edge_weight.iter().all(|&v| (0.0..1.0).contains(&v)));
        let b = MrfInstance::gen_random_instance(20, 20, 20, 11).unwrap();
        assert_eq!(a, b);
        let small = MrfInstance::gen_random_instance(2, 1, 4, 5).unwrap();
        assert_eq!(small.edge_count(), 1);
    }

    #[test]
    fn random_unary_mean() {
        let a = MrfInstance::gen_random_instance(25, 20, 20, 99).unwrap();
        let mean = a.unary_table().iter().sum::<f64>() / a.unary_table().len() as f64;
        assert!((mean - 1.0).abs() < 0.05, "mean {mean}");
    }

    #[test]
    fn rounding_examples() {
        assert_eq!(round_superlevel(&[0.1, 0.2, 0.7]), 2);
        assert_eq!(round_superlevel(&[0.0, 0.0, 0.0, 1.0, 0.0]), 3);
        assert_eq!(round_superlevel(&[0.5, 0.5]), 1);
        for l in 0..6 {
            let mut x = vec![0.0; 6];
            x[l] = 1.0;
            assert_eq!(round_superlevel(&x), l);
        }
        // unnormalized input
        assert_eq!(round_superlevel(&[0.2, 0.4, 1.4]), 2);
    }

    #[test]
    fn json_roundtrip_grid_and_edges() {
        let a = MrfInstance::gen_random_instance(3, 2, 4, 1).unwrap();
        assert_eq!(MrfInstance::from_json(&a.to_json().unwrap()).unwrap(), a);

        let topo = GraphTopology::from_edges(3, vec![(0, 1), (2, 1)]).unwrap();
        let hinge = ConvexHingePotential::lipschitz(1).unwrap();
        let b = MrfInstance::new(
            topo,
            2,
            vec![0.0, 1.0, 0.5, 0.5, 2.0, 0.0],
            vec![PiecewiseLinearPotential::from_samples(&[1.0, 0.0, 1.0]).unwrap().into(), hinge.into()],
            vec![0, 1],
            vec![0.25, 3.0],
        )
        .unwrap();
        assert_eq!(MrfInstance::from_json(&b.to_json().unwrap()).unwrap(), b);
    }

    #[test]
    fn json_rejects_bad_files() {
        let bad_domain = r#"{"labels":2,"width":2,"height":1,"unary":[0,0,0,0],"potentials":[{"pieces":[[0,0,1,0]]}]}"#;
        assert!(MrfInstance::from_json(bad_domain).is_err());
        let bad_unary = r#"{"labels":2,"width":2,"height":1,"unary":[0,0,0],"potentials":[{"pieces":[[0,0,-1,1]]}]}"#;
        assert!(matches!(MrfInstance::from_json(bad_unary), Err(Error::Dimension(_))));
        let fractional = r#"{"labels":2,"width":2,"height":1,"unary":[0,0,0,0],"potentials":[{"pieces":[[0,0,-0.5,1]]}]}"#;
        assert!(matches!(MrfInstance::from_json(fractional), Err(Error::Format(_))));
        assert!(MrfInstance::from_json("{not json").is_err());
    }
}
