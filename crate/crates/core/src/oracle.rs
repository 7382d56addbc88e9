//! Brute-force and dense reference implementations.

use std::io::Write;

use crate::model::{GraphTopology, LabelAssignment, MrfInstance};
use crate::pdsolver::{solve, SolverConfig, Status};
use crate::potentials::{BoundedLinearPiece, ConvexHingePotential, Hinge, PiecewiseLinearPotential};
use crate::relaxations::{build_compact, build_full_lp, Atom, CompactStyle, StructuredProgram};
use crate::rng::SplitMix64;
use crate::{Error, Result, INFEASIBLE};

pub const BRUTE_FORCE_CAP: f64 = 1e7;

/// Exhaustive MAP; ties go to the lexicographically smallest labeling.
pub fn brute_force_map(inst: &MrfInstance) -> Result<(LabelAssignment, f64)> {
    let n = inst.node_count();
    let l = inst.label_count();
    let space = (l as f64).powi(n as i32);
    if space > BRUTE_FORCE_CAP {
        return Err(Error::SearchSpace(space));
    }
    let mut cur = LabelAssignment { labels: vec![0; n] };
    let mut best = (cur.clone(), inst.energy_of_labeling(&cur)?);
    loop {
        // odometer with the last node fastest, i.e. lexicographic order
        let mut k = n;
        loop {
            if k == 0 {
                return Ok(best);
            }
            k -= 1;
            cur.labels[k] += 1;
            if cur.labels[k] < l {
                break;
            }
            cur.labels[k] = 0;
        }
        let e = inst.energy_of_labeling(&cur)?;
        if e < best.1 {
            best = (cur.clone(), e);
        }
    }
}

/// Exact MAP on a chain `0 - 1 - ... - n-1` by dynamic programming.
pub fn chain_dp_map(inst: &MrfInstance) -> Result<(LabelAssignment, f64)> {
    let n = inst.node_count();
    let l = inst.label_count();
    let edges = inst.topology().edges();
    if edges.len() + 1 != n || edges.iter().enumerate().any(|(e, &(s, t))| s != e || t != e + 1) {
        return Err(Error::Unsupported("chain_dp_map needs edges (i, i+1) in order".into()));
    }
    let mut cost = inst.unary(0).to_vec();
    let mut back = vec![vec![0usize; l]; n];
    for (e, _) in edges.iter().enumerate() {
        let t = e + 1;
        let mut next = vec![INFEASIBLE; l];
        for j in 0..l {
            for i in 0..l {
                let c = cost[i] + inst.pairwise(e, j as i64 - i as i64);
                if c < next[j] {
                    next[j] = c;
                    back[t][j] = i;
                }
            }
            next[j] += inst.unary(t)[j];
        }
        cost = next;
    }
    let mut j = (0..l).fold(0, |b, i| if cost[i] < cost[b] { i } else { b });
    let energy = cost[j];
    let mut labels = vec![0; n];
    for s in (0..n).rev() {
        labels[s] = j;
        j = back[s][j];
    }
    Ok((LabelAssignment { labels }, energy))
}

/// `out[i] = min_j theta[j] + w * p(j - i)` by a double loop.
pub fn naive_envelope(theta: &[f64], p: &PiecewiseLinearPotential, w: f64) -> Vec<f64> {
    let l = theta.len();
    (0..l)
        .map(|i| {
            (0..l)
                .filter_map(|j| {
                    let v = p.evaluate(j as i64 - i as i64);
                    v.is_finite().then(|| theta[j] + w * v)
                })
                .fold(INFEASIBLE, f64::min)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Adjoint,
}

/// Dense `K` of a program, row-major.
pub fn dense_operator(prog: &StructuredProgram) -> Vec<Vec<f64>> {
    let mut k = vec![vec![0.0; prog.dim()]; prog.row_count()];
    for (r, row) in k.iter_mut().enumerate() {
        for a in prog.row(r) {
            match *a {
                Atom::Var { index, coef } => row[index] += coef,
                Atom::Prefix { block, upto, coef } => {
                    let o = prog.blocks[block].offset;
                    row[o..o + upto].iter_mut().for_each(|v| *v += coef);
                }
                Atom::RowSum { block, row: i, coef } => {
                    let b = &prog.blocks[block];
                    let cols = b.len / matrix_rows(prog, block);
                    row[b.offset + i * cols..b.offset + (i + 1) * cols].iter_mut().for_each(|v| *v += coef);
                }
                Atom::ColSum { block, col, coef } => {
                    let b = &prog.blocks[block];
                    let rows = matrix_rows(prog, block);
                    let cols = b.len / rows;
                    (0..rows).for_each(|i| row[b.offset + i * cols + col] += coef);
                }
            }
        }
    }
    k
}

fn matrix_rows(prog: &StructuredProgram, block: usize) -> usize {
    match prog.blocks[block].shape {
        crate::relaxations::Shape::Matrix { rows, .. } => rows,
        crate::relaxations::Shape::Vector => 1,
    }
}

/// Multiplies by the materialized dense operator.
pub fn naive_apply(prog: &StructuredProgram, v: &[f64], dir: Direction) -> Result<Vec<f64>> {
    let k = dense_operator(prog);
    match dir {
        Direction::Forward => {
            if v.len() != prog.dim() {
                return Err(Error::Dimension(format!("expected {} entries", prog.dim())));
            }
            Ok(k.iter().map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum()).collect())
        }
        Direction::Adjoint => {
            if v.len() != prog.row_count() {
                return Err(Error::Dimension(format!("expected {} entries", prog.row_count())));
            }
            let mut out = vec![0.0; prog.dim()];
            for (row, &p) in k.iter().zip(v) {
                out.iter_mut().zip(row).for_each(|(o, a)| *o += a * p);
            }
            Ok(out)
        }
    }
}

/// Random bounded-piece prior: one full-domain piece, the rest on random
/// subintervals; `alpha ~ U(-1, 1)`, `beta ~ U(0, 2)`.
pub fn random_pwl(rng: &mut SplitMix64, labels: usize, pieces: usize) -> PiecewiseLinearPotential {
    let m = labels as i64 - 1;
    let ps = (0..pieces.max(1))
        .map(|k| {
            let alpha = rng.uniform(-1.0, 1.0);
            let beta = rng.uniform(0.0, 2.0);
            if k == 0 {
                BoundedLinearPiece::full(alpha, beta, labels)
            } else {
                let a = rng.range_i64(-m, m);
                let b = rng.range_i64(-m, m);
                BoundedLinearPiece { alpha, beta, h_lo: a.min(b), h_hi: a.max(b) }
            }
        })
        .collect();
    PiecewiseLinearPotential::new(ps).expect("pieces are valid")
}

/// Grid instance with unaries `U(0, 2)` and one random prior per edge.
pub fn random_pwl_instance(width: usize, height: usize, labels: usize, pieces: usize, seed: u64) -> Result<MrfInstance> {
    let topo = GraphTopology::make_grid(width, height)?;
    let mut rng = SplitMix64::new(seed);
    let unary = (0..topo.node_count() * labels).map(|_| rng.uniform(0.0, 2.0)).collect();
    let m = topo.edge_count();
    let pots = (0..m).map(|_| random_pwl(&mut rng, labels, pieces).into()).collect();
    MrfInstance::new(topo, labels, unary, pots, (0..m).collect(), vec![1.0; m])
}

/// `min` over each window by direct scan.
pub fn naive_min_filter(values: &[f64], lo: i64, hi: i64) -> Vec<f64> {
    let n = values.len() as i64;
    (0..n)
        .map(|i| ((i + lo).max(0)..=(i + hi).min(n - 1)).map(|j| values[j as usize]).fold(INFEASIBLE, f64::min))
        .collect()
}

/// Multiple of `1/8` in `[lo, hi]`, exact in binary floating point.
pub fn dyadic(rng: &mut SplitMix64, lo: f64, hi: f64) -> f64 {
    let (a, b) = ((lo * 8.0).ceil() as i64, (hi * 8.0).floor() as i64);
    rng.range_i64(a, b) as f64 / 8.0
}

/// Like [`random_pwl`] with dyadic slopes and intercepts, so envelopes are
/// computed without rounding.
pub fn random_dyadic_pwl(rng: &mut SplitMix64, labels: usize, pieces: usize) -> PiecewiseLinearPotential {
    let m = labels as i64 - 1;
    let ps = (0..pieces.max(1))
        .map(|_| {
            let alpha = dyadic(rng, -2.0, 2.0);
            let beta = dyadic(rng, 0.0, 4.0);
            let a = rng.range_i64(-m, m);
            let b = rng.range_i64(-m, m);
            BoundedLinearPiece { alpha, beta, h_lo: a.min(b), h_hi: a.max(b) }
        })
        .collect();
    PiecewiseLinearPotential::new(ps).expect("pieces are valid")
}

/// Convex hinge prior with up to three hinges and, sometimes, hard bounds.
pub fn random_convex_hinge(rng: &mut SplitMix64, labels: usize) -> ConvexHingePotential {
    let m = labels as i64 - 1;
    let hinges = (0..rng.below(4)).map(|_| Hinge { gamma: rng.uniform(0.1, 2.0), delta: rng.range_i64(-m, m) }).collect();
    let p = ConvexHingePotential::new(rng.uniform(-1.0, 1.0), rng.uniform(0.0, 1.0), hinges).expect("valid hinges");
    if rng.below(3) == 0 {
        let (a, b) = (rng.range_i64(-m, 0), rng.range_i64(0, m));
        p.with_bounds(Some(a), Some(b)).expect("nonempty domain")
    } else {
        p
    }
}

/// Grid instance with unaries `U(0, 2)` and one random convex prior per edge.
pub fn random_convex_instance(width: usize, height: usize, labels: usize, seed: u64) -> Result<MrfInstance> {
    let topo = GraphTopology::make_grid(width, height)?;
    let mut rng = SplitMix64::new(seed);
    let unary = (0..topo.node_count() * labels).map(|_| rng.uniform(0.0, 2.0)).collect();
    let m = topo.edge_count();
    let pots = (0..m).map(|_| random_convex_hinge(&mut rng, labels).into()).collect();
    MrfInstance::new(topo, labels, unary, pots, (0..m).collect(), vec![1.0; m])
}

/// Minimum of symmetric `alpha_k |h| + beta_k` terms with random parameters.
pub fn random_l1_min(rng: &mut SplitMix64, labels: usize, terms: usize) -> PiecewiseLinearPotential {
    let parts: Vec<_> = (0..terms.max(1))
        .map(|_| PiecewiseLinearPotential::abs_affine(rng.uniform(0.0, 2.0), rng.uniform(0.0, 1.5), labels))
        .collect();
    PiecewiseLinearPotential::min_of(&parts).expect("nonempty")
}

/// Uniform labeling that every prior of `inst` admits, by rejection
/// (falls back to the constant labeling 0 after `tries`).
pub fn random_feasible_labeling(rng: &mut SplitMix64, inst: &MrfInstance, tries: usize) -> LabelAssignment {
    let l = inst.label_count() as u64;
    for _ in 0..tries {
        let a = LabelAssignment { labels: (0..inst.node_count()).map(|_| rng.below(l) as usize).collect() };
        if inst.energy_of_labeling(&a).is_ok_and(|e| e < INFEASIBLE) {
            return a;
        }
    }
    LabelAssignment { labels: vec![0; inst.node_count()] }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HarnessRow {
    pub seed: u64,
    pub opt_full: f64,
    pub opt_compact: f64,
    pub rel_diff: f64,
    pub converged: bool,
    pub gap_full: f64,
    pub gap_compact: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct HarnessReport {
    pub rows: Vec<HarnessRow>,
}

impl HarnessReport {
    pub fn max_rel_diff(&self) -> f64 {
        self.rows.iter().map(|r| r.rel_diff).fold(0.0, f64::max)
    }

    pub fn all_converged(&self) -> bool {
        self.rows.iter().all(|r| r.converged)
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "seed,opt_full,opt_compact,rel_diff,converged")?;
        for r in &self.rows {
            writeln!(w, "{},{},{},{},{}", r.seed, r.opt_full, r.opt_compact, r.rel_diff, r.converged)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HarnessConfig {
    pub seeds: u64,
    pub width: usize,
    pub height: usize,
    pub labels: usize,
    pub pieces: usize,
    pub solver: SolverConfig,
}

impl Default for HarnessConfig {
    fn default() -> Self {
        Self {
            seeds: 30,
            width: 3,
            height: 3,
            labels: 6,
            pieces: 3,
            solver: SolverConfig { max_iters: 200_000, tol: 1e-6, check_every: 50, ..Default::default() },
        }
    }
}

/// Solves the full and the compact relaxation of seeded random instances and
/// compares their optima (dual bounds at termination).
pub fn equivalence_harness(cfg: &HarnessConfig) -> Result<HarnessReport> {
    let mut rows = Vec::new();
    for seed in 0..cfg.seeds {
        let inst = random_pwl_instance(cfg.width, cfg.height, cfg.labels, cfg.pieces, seed)?;
        rows.push(compare_relaxations(&inst, seed, &cfg.solver)?);
    }
    Ok(HarnessReport { rows })
}

pub fn compare_relaxations(inst: &MrfInstance, seed: u64, solver: &SolverConfig) -> Result<HarnessRow> {
    let full = solve(&build_full_lp(inst), inst, solver)?;
    let compact = solve(&build_compact(inst, CompactStyle::General)?, inst, solver)?;
    let (a, b) = (full.dual_bound, compact.dual_bound);
    Ok(HarnessRow {
        seed,
        opt_full: a,
        opt_compact: b,
        rel_diff: (a - b).abs() / (1.0 + a.abs()),
        converged: full.status == Status::Converged && compact.status == Status::Converged,
        gap_full: full.relaxed_gap,
        gap_compact: compact.relaxed_gap,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pdsolver::{apply_adjoint, apply_forward};

    fn chain_example() -> MrfInstance {
        let topo = GraphTopology::chain(2).unwrap();
        let prior = PiecewiseLinearPotential::from_samples(&[1.0, 1.0, 0.0, 1.0, 1.0]).unwrap();
        MrfInstance::homogeneous(topo, 3, vec![0.0, 1.0, 2.0, 2.0, 1.0, 0.0], prior.into()).unwrap()
    }

    #[test]
    fn brute_force_chain() {
        let (a, e) = brute_force_map(&chain_example()).unwrap();
        assert_eq!(a.labels, vec![0, 2]);
        assert_eq!(e, 1.0);
    }

    #[test]
    fn brute_force_single_node_and_ties() {
        let topo = GraphTopology::make_grid(1, 1).unwrap();
        let inst = MrfInstance::new(topo, 3, vec![1.0, 0.0, 0.0], vec![], vec![], vec![]).unwrap();
        assert_eq!(brute_force_map(&inst).unwrap().0.labels, vec![1]);
    }

    #[test]
    fn brute_force_cap() {
        let inst = MrfInstance::gen_random_instance(4, 4, 5, 0).unwrap();
        assert!(matches!(brute_force_map(&inst), Err(Error::SearchSpace(_))));
    }

    #[test]
    fn brute_force_beats_random_labelings() {
        let inst = random_pwl_instance(3, 2, 4, 3, 5).unwrap();
        let (_, e) = brute_force_map(&inst).unwrap();
        let mut rng = SplitMix64::new(1);
        for _ in 0..1000 {
            let a = LabelAssignment { labels: (0..6).map(|_| rng.below(4) as usize).collect() };
            assert!(e <= inst.energy_of_labeling(&a).unwrap());
        }
    }

    #[test]
    fn chain_dp_equals_brute_force() {
        let mut rng = SplitMix64::new(4);
        for seed in 0..10 {
            let topo = GraphTopology::chain(5).unwrap();
            let unary = (0..20).map(|_| rng.uniform(0.0, 3.0)).collect();
            let p = random_pwl(&mut rng, 4, 3);
            let inst = MrfInstance::homogeneous(topo, 4, unary, p.into()).unwrap();
            let (a, e) = chain_dp_map(&inst).unwrap();
            let (_, eb) = brute_force_map(&inst).unwrap();
            assert!((e - eb).abs() < 1e-12, "seed {seed}");
            assert!((inst.energy_of_labeling(&a).unwrap() - e).abs() < 1e-12);
        }
    }

    #[test]
    fn naive_apply_matches_operator() {
        let inst = random_pwl_instance(2, 2, 3, 2, 7).unwrap();
        let prog = build_compact(&inst, CompactStyle::General).unwrap();
        let mut rng = SplitMix64::new(2);
        let x: Vec<f64> = (0..prog.dim()).map(|_| rng.uniform(-1.0, 1.0)).collect();
        let p: Vec<f64> = (0..prog.row_count()).map(|_| rng.uniform(-1.0, 1.0)).collect();
        let f = apply_forward(&prog, &x).unwrap();
        let fd = naive_apply(&prog, &x, Direction::Forward).unwrap();
        let a = apply_adjoint(&prog, &p).unwrap();
        let ad = naive_apply(&prog, &p, Direction::Adjoint).unwrap();
        assert!(f.iter().zip(&fd).all(|(u, v)| (u - v).abs() < 1e-12));
        assert!(a.iter().zip(&ad).all(|(u, v)| (u - v).abs() < 1e-12));
    }

    #[test]
    fn single_full_piece_relaxations_agree() {
        let mut rng = SplitMix64::new(0);
        let p = PiecewiseLinearPotential::new(vec![BoundedLinearPiece::full(0.4, 0.3, 4)]).unwrap();
        let topo = GraphTopology::make_grid(2, 2).unwrap();
        let unary = (0..16).map(|_| rng.uniform(0.0, 2.0)).collect();
        let inst = MrfInstance::homogeneous(topo, 4, unary, p.into()).unwrap();
        let row = compare_relaxations(&inst, 0, &HarnessConfig::default().solver).unwrap();
        assert!(row.converged);
        assert!(row.rel_diff < 1e-6, "{row:?}");
    }
}
