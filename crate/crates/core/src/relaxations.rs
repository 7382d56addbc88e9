//! LP relaxations as structured saddle-point programs.
//!
//! Every relaxation is stored as
//!
//! ```text
//! min_x  c.x + const + sum_g F_g(K_g x)     x in product of simple sets
//! ```
//!
//! where each dual block `g` groups rows of `K` and `F_g` is the support
//! function of its prox set: `Free` rows are equality constraints, an
//! `Interval [lo, hi]` row contributes `max(lo v, hi v)` (so `[0, c]` is a
//! hinge `c [v]_+` and `[0, inf)` is the constraint `v <= 0`), and an
//! `L2Ball(r)` group contributes `r ||v||_2`.
//!
//! Rows are sums of [`Atom`]s. Prefix atoms reference the cumulative sums
//! `Y^i = sum_{j<i} y^j` of a block: indices `i <= 0` resolve to the constant
//! zero and `i >= len` to the block total.

use std::fmt::Write as _;

use crate::model::{LabelAssignment, MrfInstance};
use crate::potentials::PiecewiseLinearPotential;
use crate::{pdsolver, Error, Result, INFEASIBLE};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PrimalKind {
    Simplex,
    Nonneg,
    Box { lo: f64, hi: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Shape {
    Vector,
    /// Row-major `rows x cols` table; enables row/column sum atoms.
    Matrix { rows: usize, cols: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    S,
    T,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Arm {
    Center,
    Right,
    Down,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Owner {
    Node(usize),
    Edge(usize),
    Stencil(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub enum BlockRole {
    Node(usize),
    /// Edge marginal `x_st`; `pairs` lists the stored `(i, j)` entries when
    /// infeasible label pairs were left out, `None` for the dense table.
    EdgeTable { edge: usize, pairs: Option<Vec<(usize, usize)>> },
    Branch { edge: usize, piece: usize, side: Side },
    StencilSelector { pixel: usize },
    StencilBranch { pixel: usize, piece: usize, arm: Arm },
}

#[derive(Debug, Clone, PartialEq)]
pub struct PrimalBlock {
    pub kind: PrimalKind,
    pub offset: usize,
    pub len: usize,
    pub shape: Shape,
    pub role: BlockRole,
    pub owner: Owner,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Atom {
    Var { index: usize, coef: f64 },
    /// `coef * sum_{j < upto} y_j` over block `block`, `1 <= upto <= len`.
    Prefix { block: usize, upto: usize, coef: f64 },
    RowSum { block: usize, row: usize, coef: f64 },
    ColSum { block: usize, col: usize, coef: f64 },
}

impl Atom {
    pub fn coef(&self) -> f64 {
        match *self {
            Atom::Var { coef, .. } | Atom::Prefix { coef, .. } | Atom::RowSum { coef, .. } | Atom::ColSum { coef, .. } => {
                coef
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ProxClass {
    Free,
    Interval { lo: f64, hi: f64 },
    L2Ball { radius: f64 },
}

impl ProxClass {
    /// Support function of the prox set, evaluated on the row values of one group.
    pub fn support(&self, values: &[f64]) -> f64 {
        match *self {
            ProxClass::Free => {
                if values.iter().all(|&v| v == 0.0) {
                    0.0
                } else {
                    INFEASIBLE
                }
            }
            ProxClass::Interval { lo, hi } => values.iter().map(|&v| interval_support(lo, hi, v)).sum(),
            ProxClass::L2Ball { radius } => radius * values.iter().map(|v| v * v).sum::<f64>().sqrt(),
        }
    }
}

pub(crate) fn interval_support(lo: f64, hi: f64, v: f64) -> f64 {
    if v > 0.0 {
        if hi.is_finite() {
            hi * v
        } else {
            INFEASIBLE
        }
    } else if v < 0.0 {
        if lo.is_finite() {
            lo * v
        } else {
            INFEASIBLE
        }
    } else {
        0.0
    }
}

/// A run of consecutive rows sharing one prox class.
#[derive(Debug, Clone, PartialEq)]
pub struct DualBlock {
    pub first_row: usize,
    pub rows: usize,
    pub prox: ProxClass,
    pub owner: Owner,
}

impl DualBlock {
    pub fn row_range(&self) -> std::ops::Range<usize> {
        self.first_row..self.first_row + self.rows
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CompactStyle {
    General,
    L1Min,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IsoVariant {
    JointTerms,
    JointBranch,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProgramKind {
    FullLp,
    ConvexLp,
    Compact(CompactStyle),
    Isotropic(IsoVariant),
}

#[derive(Debug, Clone, PartialEq)]
pub struct StructuredProgram {
    pub kind: ProgramKind,
    pub labels: usize,
    pub blocks: Vec<PrimalBlock>,
    pub objective: Vec<f64>,
    pub constant: f64,
    pub row_ptr: Vec<usize>,
    pub atoms: Vec<Atom>,
    pub dual_blocks: Vec<DualBlock>,
    pub node_blocks: Vec<usize>,
    /// For isotropic variants: symmetric `(alpha, beta)` terms or bounded pieces used per edge.
    pub(crate) iso_terms: Option<Vec<(f64, f64)>>,
}

/// Scalar counts by owner.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SizeReport {
    pub node_primal: usize,
    pub per_edge_primal: Vec<usize>,
    pub per_edge_rows: Vec<usize>,
    pub stencil_primal: usize,
    pub stencil_rows: usize,
    pub node_rows: usize,
    pub total_primal: usize,
    pub total_rows: usize,
}

impl SizeReport {
    pub fn max_edge_primal(&self) -> usize {
        self.per_edge_primal.iter().copied().max().unwrap_or(0)
    }

    pub fn max_edge_rows(&self) -> usize {
        self.per_edge_rows.iter().copied().max().unwrap_or(0)
    }

    /// Primal plus dual scalars.
    pub fn total_scalars(&self) -> usize {
        self.total_primal + self.total_rows
    }
}

impl std::fmt::Display for SizeReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "primal unknowns: {} (nodes {}, stencils {})", self.total_primal, self.node_primal, self.stencil_primal)?;
        writeln!(f, "dual rows:       {} (stencils {})", self.total_rows, self.stencil_rows)?;
        write!(
            f,
            "per edge (max):  {} unknowns, {} rows",
            self.max_edge_primal(),
            self.max_edge_rows()
        )
    }
}

impl StructuredProgram {
    pub fn dim(&self) -> usize {
        self.objective.len()
    }

    pub fn row_count(&self) -> usize {
        self.row_ptr.len() - 1
    }

    pub fn row(&self, r: usize) -> &[Atom] {
        &self.atoms[self.row_ptr[r]..self.row_ptr[r + 1]]
    }

    pub fn edge_count(&self) -> usize {
        let mut m = 0;
        let mut bump = |o: &Owner| {
            if let Owner::Edge(e) = o {
                m = m.max(e + 1);
            }
        };
        self.blocks.iter().for_each(|b| bump(&b.owner));
        self.dual_blocks.iter().for_each(|b| bump(&b.owner));
        m
    }

    pub fn count_sizes(&self) -> SizeReport {
        let m = self.edge_count();
        let mut rep = SizeReport {
            node_primal: 0,
            per_edge_primal: vec![0; m],
            per_edge_rows: vec![0; m],
            stencil_primal: 0,
            stencil_rows: 0,
            node_rows: 0,
            total_primal: self.dim(),
            total_rows: self.row_count(),
        };
        for b in &self.blocks {
            match b.owner {
                Owner::Node(_) => rep.node_primal += b.len,
                Owner::Edge(e) => rep.per_edge_primal[e] += b.len,
                Owner::Stencil(_) => rep.stencil_primal += b.len,
            }
        }
        for d in &self.dual_blocks {
            match d.owner {
                Owner::Node(_) => rep.node_rows += d.rows,
                Owner::Edge(e) => rep.per_edge_rows[e] += d.rows,
                Owner::Stencil(_) => rep.stencil_rows += d.rows,
            }
        }
        rep
    }

    /// Linear part `c.x + const`.
    pub fn linear_value(&self, x: &[f64]) -> f64 {
        self.constant + self.objective.iter().zip(x).map(|(c, v)| c * v).sum::<f64>()
    }

    /// Full objective including the row terms; [`INFEASIBLE`] when a
    /// constraint row or primal set is violated by more than `tol`.
    pub fn objective_value(&self, x: &[f64], tol: f64) -> Result<f64> {
        let r = pdsolver::apply_forward(self, x)?;
        let ev = pdsolver::row_terms(self, &r);
        if ev.infeasibility > tol || pdsolver::primal_set_violation(self, x) > tol {
            return Ok(INFEASIBLE);
        }
        Ok(self.linear_value(x) + ev.penalty)
    }

    /// Node marginals `x_s` of a primal vector.
    pub fn node_marginal<'a>(&self, x: &'a [f64], s: usize) -> &'a [f64] {
        let b = &self.blocks[self.node_blocks[s]];
        &x[b.offset..b.offset + b.len]
    }

    /// Labeling obtained by rounding every node marginal at its 1/2-isolevel.
    pub fn round(&self, x: &[f64]) -> LabelAssignment {
        LabelAssignment {
            labels: (0..self.node_blocks.len())
                .map(|s| crate::model::round_superlevel(self.node_marginal(x, s)))
                .collect(),
        }
    }

    /// Human-readable dump, one line per dual row.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for d in &self.dual_blocks {
            for r in d.row_range() {
                let _ = write!(out, "row {r} {:?} {:?}:", d.owner, d.prox);
                for a in self.row(r) {
                    let _ = match *a {
                        Atom::Var { index, coef } => write!(out, " {coef:+}*x[{index}]"),
                        Atom::Prefix { block, upto, coef } => write!(out, " {coef:+}*prefix(b{block},{upto})"),
                        Atom::RowSum { block, row, coef } => write!(out, " {coef:+}*rowsum(b{block},{row})"),
                        Atom::ColSum { block, col, coef } => write!(out, " {coef:+}*colsum(b{block},{col})"),
                    };
                }
                out.push('\n');
            }
        }
        out
    }
}

/// Incremental assembly of a [`StructuredProgram`].
#[derive(Debug)]
pub struct ProgramBuilder {
    prog: StructuredProgram,
    open: Option<DualBlock>,
}

impl ProgramBuilder {
    pub fn new(kind: ProgramKind, labels: usize) -> Self {
        Self {
            prog: StructuredProgram {
                kind,
                labels,
                blocks: Vec::new(),
                objective: Vec::new(),
                constant: 0.0,
                row_ptr: vec![0],
                atoms: Vec::new(),
                dual_blocks: Vec::new(),
                node_blocks: Vec::new(),
                iso_terms: None,
            },
            open: None,
        }
    }

    pub fn add_block(&mut self, kind: PrimalKind, len: usize, shape: Shape, role: BlockRole, owner: Owner) -> usize {
        if let Shape::Matrix { rows, cols } = shape {
            assert_eq!(rows * cols, len);
        }
        let offset = self.prog.objective.len();
        self.prog.objective.resize(offset + len, 0.0);
        if let BlockRole::Node(_) = role {
            self.prog.node_blocks.push(self.prog.blocks.len());
        }
        self.prog.blocks.push(PrimalBlock { kind, offset, len, shape, role, owner });
        self.prog.blocks.len() - 1
    }

    pub fn block(&self, b: usize) -> &PrimalBlock {
        &self.prog.blocks[b]
    }

    pub fn var(&self, block: usize, k: usize) -> usize {
        let b = &self.prog.blocks[block];
        debug_assert!(k < b.len);
        b.offset + k
    }

    pub fn add_cost(&mut self, index: usize, c: f64) {
        self.prog.objective[index] += c;
    }

    pub fn add_constant(&mut self, c: f64) {
        self.prog.constant += c;
    }

    /// Adds `coef * sum_{i=1}^{L-1} Y^i` of a length-`L` block to the objective.
    pub fn add_prefix_total_cost(&mut self, block: usize, coef: f64) {
        let (offset, len) = (self.prog.blocks[block].offset, self.prog.blocks[block].len);
        for j in 0..len {
            self.prog.objective[offset + j] += coef * (len - 1 - j) as f64;
        }
    }

    /// Prefix atom following the out-of-range convention; `None` means the constant zero.
    pub fn prefix(&self, block: usize, upto: i64, coef: f64) -> Option<Atom> {
        let len = self.prog.blocks[block].len as i64;
        if upto <= 0 {
            None
        } else {
            Some(Atom::Prefix { block, upto: upto.min(len) as usize, coef })
        }
    }

    pub fn begin_dual(&mut self, prox: ProxClass, owner: Owner) {
        self.end_dual();
        self.open = Some(DualBlock { first_row: self.prog.row_count(), rows: 0, prox, owner });
    }

    pub fn end_dual(&mut self) {
        if let Some(d) = self.open.take() {
            if d.rows > 0 {
                self.prog.dual_blocks.push(d);
            }
        }
    }

    pub fn push_row(&mut self, atoms: impl IntoIterator<Item = Atom>) {
        let d = self.open.as_mut().expect("push_row outside a dual block");
        self.prog.atoms.extend(atoms);
        self.prog.row_ptr.push(self.prog.atoms.len());
        d.rows += 1;
    }

    pub fn finish(mut self) -> StructuredProgram {
        self.end_dual();
        self.prog
    }
}

fn add_node_blocks(b: &mut ProgramBuilder, inst: &MrfInstance) {
    let l = inst.label_count();
    for s in 0..inst.node_count() {
        let blk = b.add_block(PrimalKind::Simplex, l, Shape::Vector, BlockRole::Node(s), Owner::Node(s));
        for (i, &th) in inst.unary(s).iter().enumerate() {
            let v = b.var(blk, i);
            b.add_cost(v, th);
        }
    }
}

const UNIT_BOX: PrimalKind = PrimalKind::Box { lo: 0.0, hi: 1.0 };

/// The standard relaxation with an `L x L` marginal per edge.
///
/// Infeasible label pairs are left out of the edge block.
pub fn build_full_lp(inst: &MrfInstance) -> StructuredProgram {
    let l = inst.label_count();
    let mut b = ProgramBuilder::new(ProgramKind::FullLp, l);
    add_node_blocks(&mut b, inst);
    for (e, &(s, t)) in inst.topology().edges().iter().enumerate() {
        let table: Vec<f64> = (0..l * l).map(|k| inst.pairwise(e, (k % l) as i64 - (k / l) as i64)).collect();
        let xs = b.node_var(s);
        let xt = b.node_var(t);
        if table.iter().all(|v| v.is_finite()) {
            let blk = b.add_block(
                UNIT_BOX,
                l * l,
                Shape::Matrix { rows: l, cols: l },
                BlockRole::EdgeTable { edge: e, pairs: None },
                Owner::Edge(e),
            );
            for (k, &v) in table.iter().enumerate() {
                let idx = b.var(blk, k);
                b.add_cost(idx, v);
            }
            b.begin_dual(ProxClass::Free, Owner::Edge(e));
            for i in 0..l {
                b.push_row([Atom::Var { index: xs + i, coef: 1.0 }, Atom::RowSum { block: blk, row: i, coef: -1.0 }]);
            }
            for j in 0..l {
                b.push_row([Atom::Var { index: xt + j, coef: 1.0 }, Atom::ColSum { block: blk, col: j, coef: -1.0 }]);
            }
        } else {
            let pairs: Vec<(usize, usize)> =
                (0..l * l).filter(|&k| table[k].is_finite()).map(|k| (k / l, k % l)).collect();
            let blk = b.add_block(
                UNIT_BOX,
                pairs.len(),
                Shape::Vector,
                BlockRole::EdgeTable { edge: e, pairs: Some(pairs.clone()) },
                Owner::Edge(e),
            );
            for (k, &(i, j)) in pairs.iter().enumerate() {
                let idx = b.var(blk, k);
                b.add_cost(idx, table[i * l + j]);
            }
            let off = b.block(blk).offset;
            b.begin_dual(ProxClass::Free, Owner::Edge(e));
            for i in 0..l {
                let mut row = vec![Atom::Var { index: xs + i, coef: 1.0 }];
                row.extend(pairs.iter().enumerate().filter(|(_, p)| p.0 == i).map(|(k, _)| Atom::Var { index: off + k, coef: -1.0 }));
                b.push_row(row);
            }
            for j in 0..l {
                let mut row = vec![Atom::Var { index: xt + j, coef: 1.0 }];
                row.extend(pairs.iter().enumerate().filter(|(_, p)| p.1 == j).map(|(k, _)| Atom::Var { index: off + k, coef: -1.0 }));
                b.push_row(row);
            }
        }
    }
    b.finish()
}

impl ProgramBuilder {
    fn node_var(&self, s: usize) -> usize {
        self.prog.blocks[self.prog.node_blocks[s]].offset
    }

    fn node_block(&self, s: usize) -> usize {
        self.prog.node_blocks[s]
    }

    /// Rows `Y_a^i - Y_b^{i + shift} <= 0` for `i = 1..=L`, skipping rows
    /// implied by equal block masses (right index at or past `L`).
    fn push_order_rows(&mut self, a: usize, bb: usize, shift: i64) {
        let l = self.prog.blocks[a].len as i64;
        for i in 1..=l {
            if i + shift >= l {
                continue;
            }
            let row: Vec<Atom> = [self.prefix(a, i, 1.0), self.prefix(bb, i + shift, -1.0)].into_iter().flatten().collect();
            self.push_row(row);
        }
    }
}

/// Superlevel relaxation for convex priors: only node marginals, hinge
/// terms on cumulative differences, hard bounds as one-sided rows.
pub fn build_convex_lp(inst: &MrfInstance) -> Result<StructuredProgram> {
    let l = inst.label_count();
    let li = l as i64;
    let mut b = ProgramBuilder::new(ProgramKind::ConvexLp, l);
    add_node_blocks(&mut b, inst);
    for (e, &(s, t)) in inst.topology().edges().iter().enumerate() {
        let hp = inst.edge_potential(e).to_hinge(l)?;
        let w = inst.edge_weight(e);
        let (bs, bt) = (b.node_block(s), b.node_block(t));
        if w > 0.0 {
            b.add_prefix_total_cost(bs, w * hp.alpha);
            b.add_prefix_total_cost(bt, -w * hp.alpha);
            b.add_constant(w * hp.beta);
            for hg in &hp.hinges {
                // gamma [h + delta]_+  <->  sum_i gamma [X_s^i - X_t^{i - delta}]_+
                let cap = w * hg.gamma;
                b.begin_dual(ProxClass::Interval { lo: 0.0, hi: cap }, Owner::Edge(e));
                let lo = 1.min(1 + hg.delta);
                let hi = (li - 1).max(li - 1 + hg.delta);
                let constant = |i: i64| if i <= 0 { Some(0.0f64) } else if i >= li { Some(1.0) } else { None };
                for i in lo..=hi {
                    match (constant(i), constant(i - hg.delta)) {
                        (Some(a), Some(c)) => b.add_constant(cap * (a - c).max(0.0)),
                        _ => {
                            let row: Vec<Atom> =
                                [b.prefix(bs, i, 1.0), b.prefix(bt, i - hg.delta, -1.0)].into_iter().flatten().collect();
                            b.push_row(row);
                        }
                    }
                }
            }
        }
        if hp.h_max.is_some() || hp.h_min.is_some() {
            b.begin_dual(ProxClass::Interval { lo: 0.0, hi: f64::INFINITY }, Owner::Edge(e));
            if let Some(hi) = hp.h_max {
                b.push_order_rows(bs, bt, hi);
            }
            if let Some(lo) = hp.h_min {
                b.push_order_rows(bt, bs, -lo);
            }
        }
    }
    Ok(b.finish())
}

struct BranchPair {
    ys: usize,
    yt: usize,
}

fn edge_pieces(inst: &MrfInstance, e: usize) -> Result<PiecewiseLinearPotential> {
    let l = inst.label_count();
    inst.edge_potential(e).to_pwl(l)?.clamped(l)
}

fn edge_l1_terms(inst: &MrfInstance, e: usize) -> Result<Vec<(f64, f64)>> {
    let l = inst.label_count();
    edge_pieces(inst, e)?
        .l1_terms(l)
        .ok_or_else(|| Error::Unsupported(format!("edge {e}: prior is not a minimum of alpha|h| + beta terms")))
}

/// Branch blocks plus marginalization and mass-coupling rows of one edge.
fn add_branches(b: &mut ProgramBuilder, e: usize, s: usize, t: usize, k: usize, l: usize) -> Vec<BranchPair> {
    let pairs: Vec<BranchPair> = (0..k)
        .map(|piece| BranchPair {
            ys: b.add_block(UNIT_BOX, l, Shape::Vector, BlockRole::Branch { edge: e, piece, side: Side::S }, Owner::Edge(e)),
            yt: b.add_block(UNIT_BOX, l, Shape::Vector, BlockRole::Branch { edge: e, piece, side: Side::T }, Owner::Edge(e)),
        })
        .collect();
    let (xs, xt) = (b.node_var(s), b.node_var(t));
    b.begin_dual(ProxClass::Free, Owner::Edge(e));
    for i in 0..l {
        let mut row = vec![Atom::Var { index: xs + i, coef: 1.0 }];
        row.extend(pairs.iter().map(|p| Atom::Var { index: b.var(p.ys, i), coef: -1.0 }));
        b.push_row(row);
    }
    for i in 0..l {
        let mut row = vec![Atom::Var { index: xt + i, coef: 1.0 }];
        row.extend(pairs.iter().map(|p| Atom::Var { index: b.var(p.yt, i), coef: -1.0 }));
        b.push_row(row);
    }
    for p in &pairs {
        b.push_row([
            Atom::Prefix { block: p.ys, upto: l, coef: 1.0 },
            Atom::Prefix { block: p.yt, upto: l, coef: -1.0 },
        ]);
    }
    pairs
}

fn add_block_cost(b: &mut ProgramBuilder, block: usize, c: f64) {
    let blk = b.block(block).clone();
    for j in 0..blk.len {
        b.add_cost(blk.offset + j, c);
    }
}

/// Compact relaxation with `2KL` unknowns per edge.
///
/// `General` treats each prior as a minimum of bounded linear pieces;
/// `L1Min` requires a minimum of symmetric `alpha_k |h| + beta_k` terms and
/// models each term with one absolute-value row per level.
pub fn build_compact(inst: &MrfInstance, style: CompactStyle) -> Result<StructuredProgram> {
    let l = inst.label_count();
    let mut b = ProgramBuilder::new(ProgramKind::Compact(style), l);
    add_node_blocks(&mut b, inst);
    for (e, &(s, t)) in inst.topology().edges().iter().enumerate() {
        let w = inst.edge_weight(e);
        match style {
            CompactStyle::General => {
                let pwl = edge_pieces(inst, e)?;
                let pairs = add_branches(&mut b, e, s, t, pwl.len(), l);
                add_general_costs(&mut b, &pwl, &pairs, w, true);
                add_domain_rows(&mut b, e, &pwl, &pairs, l);
            }
            CompactStyle::L1Min => {
                let terms = edge_l1_terms(inst, e)?;
                let pairs = add_branches(&mut b, e, s, t, terms.len(), l);
                for (p, &(alpha, beta)) in pairs.iter().zip(&terms) {
                    add_block_cost(&mut b, p.ys, w * beta / 2.0);
                    add_block_cost(&mut b, p.yt, w * beta / 2.0);
                    let cap = w * alpha;
                    if cap > 0.0 {
                        b.begin_dual(ProxClass::Interval { lo: -cap, hi: cap }, Owner::Edge(e));
                        for i in 1..l as i64 {
                            let row: Vec<Atom> = [b.prefix(p.ys, i, 1.0), b.prefix(p.yt, i, -1.0)].into_iter().flatten().collect();
                            b.push_row(row);
                        }
                    }
                }
            }
        }
    }
    b.end_dual();
    Ok(b.finish())
}

fn add_general_costs(b: &mut ProgramBuilder, pwl: &PiecewiseLinearPotential, pairs: &[BranchPair], w: f64, with_beta: bool) {
    for (p, piece) in pairs.iter().zip(pwl.pieces()) {
        if w == 0.0 {
            continue;
        }
        b.add_prefix_total_cost(p.ys, w * piece.alpha);
        b.add_prefix_total_cost(p.yt, -w * piece.alpha);
        if with_beta {
            add_block_cost(b, p.ys, w * piece.beta / 2.0);
            add_block_cost(b, p.yt, w * piece.beta / 2.0);
        }
    }
}

fn add_domain_rows(b: &mut ProgramBuilder, e: usize, pwl: &PiecewiseLinearPotential, pairs: &[BranchPair], l: usize) {
    let m = l as i64 - 1;
    if pwl.pieces().iter().all(|p| p.h_lo <= -m && p.h_hi >= m) {
        return;
    }
    b.begin_dual(ProxClass::Interval { lo: 0.0, hi: f64::INFINITY }, Owner::Edge(e));
    for (p, piece) in pairs.iter().zip(pwl.pieces()) {
        if piece.h_hi < m {
            b.push_order_rows(p.ys, p.yt, piece.h_hi);
        }
        if piece.h_lo > -m {
            b.push_order_rows(p.yt, p.ys, -piece.h_lo);
        }
    }
}

/// Isotropic compact relaxations on a grid.
///
/// `JointTerms` keeps per-edge branches and couples the horizontal and
/// vertical terms of each pixel through Euclidean norms. With symmetric
/// `alpha_k |h| + beta_k` priors both the level differences and the branch
/// masses are coupled; otherwise every piece must have zero slope, its domain
/// bounds stay hard per edge and only the branch masses are coupled.
///
/// `JointBranch` selects one branch per pixel shared by its right and down
/// edges (symmetric `alpha_k |h| + beta_k` priors only).
pub fn build_compact_isotropic(inst: &MrfInstance, variant: IsoVariant) -> Result<StructuredProgram> {
    let topo = inst.topology();
    if topo.grid().is_none() {
        return Err(Error::Unsupported("isotropic relaxation needs grid metadata".into()));
    }
    let l = inst.label_count();
    let n = inst.node_count();
    // Both arms of a pixel must carry the same prior and weight.
    for s in 0..n {
        if let (Some(eh), Some(ev)) = (topo.right_edge(s), topo.down_edge(s)) {
            if inst.edge_potential(eh) != inst.edge_potential(ev) || inst.edge_weight(eh) != inst.edge_weight(ev) {
                return Err(Error::Unsupported(format!("pixel {s}: horizontal and vertical priors differ")));
            }
        }
    }
    match variant {
        IsoVariant::JointTerms => build_joint_terms(inst, l, n),
        IsoVariant::JointBranch => build_joint_branch(inst, l, n),
    }
}

fn build_joint_terms(inst: &MrfInstance, l: usize, n: usize) -> Result<StructuredProgram> {
    let topo = inst.topology();
    let mut b = ProgramBuilder::new(ProgramKind::Isotropic(IsoVariant::JointTerms), l);
    add_node_blocks(&mut b, inst);
    let m = inst.edge_count();
    let mut branches: Vec<Vec<BranchPair>> = Vec::with_capacity(m);
    let mut l1: Vec<Option<Vec<(f64, f64)>>> = Vec::with_capacity(m);
    let mut pieces: Vec<PiecewiseLinearPotential> = Vec::with_capacity(m);
    for (e, &(s, t)) in topo.edges().iter().enumerate() {
        let pwl = edge_pieces(inst, e)?;
        let terms = pwl.l1_terms(l);
        if terms.is_none() && pwl.pieces().iter().any(|p| p.alpha != 0.0) {
            return Err(Error::Unsupported(format!(
                "edge {e}: isotropic coupling needs alpha|h| + beta terms or zero-slope pieces"
            )));
        }
        let k = terms.as_ref().map_or(pwl.len(), |t| t.len());
        let pairs = add_branches(&mut b, e, s, t, k, l);
        if terms.is_none() {
            add_domain_rows(&mut b, e, &pwl, &pairs, l);
        }
        branches.push(pairs);
        l1.push(terms);
        pieces.push(pwl);
    }
    for s in 0..n {
        let arms: Vec<usize> = [topo.right_edge(s), topo.down_edge(s)].into_iter().flatten().collect();
        let Some(&e0) = arms.first() else { continue };
        let w = inst.edge_weight(e0);
        if w == 0.0 {
            continue;
        }
        let coeffs: Vec<(f64, f64)> = match &l1[e0] {
            Some(t) => t.clone(),
            None => pieces[e0].pieces().iter().map(|p| (0.0, p.beta)).collect(),
        };
        for (k, &(alpha, beta)) in coeffs.iter().enumerate() {
            if alpha > 0.0 {
                let prox = if arms.len() == 2 {
                    None
                } else {
                    Some(ProxClass::Interval { lo: -w * alpha, hi: w * alpha })
                };
                if let Some(prox) = prox {
                    b.begin_dual(prox, Owner::Edge(e0));
                }
                for i in 1..l as i64 {
                    if prox.is_none() {
                        b.begin_dual(ProxClass::L2Ball { radius: w * alpha }, Owner::Stencil(s));
                    }
                    for &e in &arms {
                        let p = &branches[e][k];
                        let row: Vec<Atom> = [b.prefix(p.ys, i, 1.0), b.prefix(p.yt, i, -1.0)].into_iter().flatten().collect();
                        b.push_row(row);
                    }
                }
                b.end_dual();
            }
            if beta > 0.0 {
                if arms.len() == 2 {
                    b.begin_dual(ProxClass::L2Ball { radius: w * beta }, Owner::Stencil(s));
                    for &e in &arms {
                        let p = &branches[e][k];
                        b.push_row([
                            Atom::Prefix { block: p.ys, upto: l, coef: 0.5 },
                            Atom::Prefix { block: p.yt, upto: l, coef: 0.5 },
                        ]);
                    }
                    b.end_dual();
                } else {
                    let p = &branches[e0][k];
                    add_block_cost(&mut b, p.ys, w * beta / 2.0);
                    add_block_cost(&mut b, p.yt, w * beta / 2.0);
                }
            }
        }
    }
    let mut prog = b.finish();
    prog.iso_terms = None;
    Ok(prog)
}

fn build_joint_branch(inst: &MrfInstance, l: usize, n: usize) -> Result<StructuredProgram> {
    let topo = inst.topology();
    let mut b = ProgramBuilder::new(ProgramKind::Isotropic(IsoVariant::JointBranch), l);
    add_node_blocks(&mut b, inst);
    let mut all_terms: Option<Vec<(f64, f64)>> = None;
    for s in 0..n {
        let right = topo.right_edge(s);
        let down = topo.down_edge(s);
        let Some(e0) = right.or(down) else { continue };
        let terms = edge_l1_terms(inst, e0)?;
        if all_terms.is_none() {
            all_terms = Some(terms.clone());
        }
        let w = inst.edge_weight(e0);
        let k = terms.len();
        let z = b.add_block(PrimalKind::Simplex, k, Shape::Vector, BlockRole::StencilSelector { pixel: s }, Owner::Stencil(s));
        for (kk, &(_, beta)) in terms.iter().enumerate() {
            let v = b.var(z, kk);
            b.add_cost(v, w * beta);
        }
        let mut arms: Vec<(Arm, usize)> = vec![(Arm::Center, s)];
        if let Some(e) = right {
            arms.push((Arm::Right, topo.edges()[e].1));
        }
        if let Some(e) = down {
            arms.push((Arm::Down, topo.edges()[e].1));
        }
        // ys[arm][k]
        let ys: Vec<Vec<usize>> = arms
            .iter()
            .map(|&(arm, _)| {
                (0..k)
                    .map(|piece| {
                        b.add_block(UNIT_BOX, l, Shape::Vector, BlockRole::StencilBranch { pixel: s, piece, arm }, Owner::Stencil(s))
                    })
                    .collect()
            })
            .collect();
        b.begin_dual(ProxClass::Free, Owner::Stencil(s));
        for (a, &(_, node)) in arms.iter().enumerate() {
            let xn = b.node_var(node);
            for i in 0..l {
                let mut row = vec![Atom::Var { index: xn + i, coef: 1.0 }];
                row.extend(ys[a].iter().map(|&blk| Atom::Var { index: b.var(blk, i), coef: -1.0 }));
                b.push_row(row);
            }
        }
        for kk in 0..k {
            for arm_blocks in &ys {
                b.push_row([
                    Atom::Var { index: b.var(z, kk), coef: 1.0 },
                    Atom::Prefix { block: arm_blocks[kk], upto: l, coef: -1.0 },
                ]);
            }
        }
        b.end_dual();
        for (kk, &(alpha, _)) in terms.iter().enumerate() {
            let cap = w * alpha;
            if cap <= 0.0 {
                continue;
            }
            if arms.len() == 2 {
                b.begin_dual(ProxClass::Interval { lo: -cap, hi: cap }, Owner::Stencil(s));
            }
            for i in 1..l as i64 {
                if arms.len() == 3 {
                    b.begin_dual(ProxClass::L2Ball { radius: cap }, Owner::Stencil(s));
                }
                for other in &ys[1..] {
                    let row: Vec<Atom> =
                        [b.prefix(ys[0][kk], i, 1.0), b.prefix(other[kk], i, -1.0)].into_iter().flatten().collect();
                    b.push_row(row);
                }
            }
            b.end_dual();
        }
    }
    let mut prog = b.finish();
    prog.iso_terms = all_terms;
    Ok(prog)
}

fn one_hot(x: &mut [f64], block: &PrimalBlock, k: usize) {
    x[block.offset + k] = 1.0;
}

/// Lexicographically smallest minimizing piece of `pwl` at `h`.
fn active_piece(pwl: &PiecewiseLinearPotential, h: i64) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (k, p) in pwl.pieces().iter().enumerate() {
        if p.contains(h) {
            let v = p.line(h);
            if best.is_none_or(|(_, bv)| v < bv) {
                best = Some((k, v));
            }
        }
    }
    best.map(|(k, _)| k)
}

fn active_term(terms: &[(f64, f64)], cost: impl Fn(f64, f64) -> f64) -> usize {
    let mut best = (0, f64::INFINITY);
    for (k, &(a, b)) in terms.iter().enumerate() {
        let v = cost(a, b);
        if v < best.1 {
            best = (k, v);
        }
    }
    best.0
}

/// Integral primal point of `prog` encoding labeling `a`.
pub fn lift_labeling(inst: &MrfInstance, a: &LabelAssignment, prog: &StructuredProgram) -> Result<Vec<f64>> {
    inst.check_labeling(a)?;
    let l = inst.label_count();
    let lab = &a.labels;
    let topo = inst.topology();
    let diff = |e: usize| {
        let (s, t) = topo.edges()[e];
        lab[t] as i64 - lab[s] as i64
    };
    let mut x = vec![0.0; prog.dim()];

    // Per-edge active branch for branch-based programs.
    let mut edge_branch: Vec<Option<usize>> = vec![None; inst.edge_count()];
    for e in 0..inst.edge_count() {
        let h = diff(e);
        if !inst.pairwise(e, h).is_finite() {
            return Err(Error::InfeasibleLabeling(format!("edge {e} does not admit difference {h}")));
        }
        edge_branch[e] = match prog.kind {
            ProgramKind::Compact(CompactStyle::General) => active_piece(&edge_pieces(inst, e)?, h),
            ProgramKind::Isotropic(IsoVariant::JointTerms) => {
                let pwl = edge_pieces(inst, e)?;
                match pwl.l1_terms(l) {
                    Some(t) => Some(active_term(&t, |al, be| al * (h as f64).abs() + be)),
                    None => active_piece(&pwl, h),
                }
            }
            ProgramKind::Compact(CompactStyle::L1Min) => {
                Some(active_term(&edge_l1_terms(inst, e)?, |al, be| al * (h as f64).abs() + be))
            }
            _ => None,
        };
    }

    // Per-pixel active branch for the joint-branch program.
    let mut pixel_branch: Vec<usize> = vec![0; inst.node_count()];
    if let (ProgramKind::Isotropic(IsoVariant::JointBranch), Some(terms)) = (prog.kind, &prog.iso_terms) {
        for s in 0..inst.node_count() {
            let others: Vec<usize> = [topo.right_edge(s), topo.down_edge(s)]
                .into_iter()
                .flatten()
                .map(|e| topo.edges()[e].1)
                .collect();
            if others.is_empty() {
                continue;
            }
            let norm_sum: f64 = (1..l)
                .map(|i| {
                    let ys = (i > lab[s]) as i64 as f64;
                    others
                        .iter()
                        .map(|&o| {
                            let d = ys - (i > lab[o]) as i64 as f64;
                            d * d
                        })
                        .sum::<f64>()
                        .sqrt()
                })
                .sum();
            pixel_branch[s] = active_term(terms, |al, be| al * norm_sum + be);
        }
    }

    for blk in &prog.blocks {
        match &blk.role {
            BlockRole::Node(s) => one_hot(&mut x, blk, lab[*s]),
            BlockRole::EdgeTable { edge, pairs } => {
                let (s, t) = topo.edges()[*edge];
                let k = match pairs {
                    None => lab[s] * l + lab[t],
                    Some(p) => p.iter().position(|&q| q == (lab[s], lab[t])).ok_or_else(|| {
                        Error::InfeasibleLabeling(format!("edge {edge} has no entry for ({}, {})", lab[s], lab[t]))
                    })?,
                };
                one_hot(&mut x, blk, k);
            }
            BlockRole::Branch { edge, piece, side } => {
                let k = edge_branch[*edge].ok_or_else(|| Error::InfeasibleLabeling(format!("edge {edge}: no piece covers the difference")))?;
                if k == *piece {
                    let (s, t) = topo.edges()[*edge];
                    one_hot(&mut x, blk, if *side == Side::S { lab[s] } else { lab[t] });
                }
            }
            BlockRole::StencilSelector { pixel } => one_hot(&mut x, blk, pixel_branch[*pixel]),
            BlockRole::StencilBranch { pixel, piece, arm } => {
                if pixel_branch[*pixel] == *piece {
                    let node = match arm {
                        Arm::Center => *pixel,
                        Arm::Right => topo.edges()[topo.right_edge(*pixel).expect("right arm")].1,
                        Arm::Down => topo.edges()[topo.down_edge(*pixel).expect("down arm")].1,
                    };
                    one_hot(&mut x, blk, lab[node]);
                }
            }
        }
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{GraphTopology, Potential};
    use crate::potentials::{BoundedLinearPiece, ConvexHingePotential};

    fn chain_example() -> MrfInstance {
        let topo = GraphTopology::chain(2).unwrap();
        let prior = PiecewiseLinearPotential::from_samples(&[1.0, 1.0, 0.0, 1.0, 1.0]).unwrap();
        MrfInstance::homogeneous(topo, 3, vec![0.0, 1.0, 2.0, 2.0, 1.0, 0.0], prior.into()).unwrap()
    }

    fn lab(v: &[usize]) -> LabelAssignment {
        LabelAssignment { labels: v.to_vec() }
    }

    #[test]
    fn full_lp_sizes_and_rows() {
        let inst = chain_example();
        let prog = build_full_lp(&inst);
        assert_eq!(prog.dim(), 15);
        let rep = prog.count_sizes();
        assert_eq!(rep.per_edge_primal, vec![9]);
        assert_eq!(rep.per_edge_rows, vec![6]);
        // x_s^0 - sum_j x_st^{0j} = 0
        let table = prog.blocks.iter().position(|b| matches!(b.role, BlockRole::EdgeTable { .. })).unwrap();
        assert_eq!(prog.row(0), &[Atom::Var { index: 0, coef: 1.0 }, Atom::RowSum { block: table, row: 0, coef: -1.0 }]);
    }

    #[test]
    fn full_lp_lift_matches_energy() {
        let inst = chain_example();
        let prog = build_full_lp(&inst);
        let x = lift_labeling(&inst, &lab(&[0, 2]), &prog).unwrap();
        assert!((prog.objective_value(&x, 1e-12).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn full_lp_excludes_infeasible_pairs() {
        let topo = GraphTopology::chain(2).unwrap();
        let inst = MrfInstance::homogeneous(topo, 4, vec![0.0; 8], ConvexHingePotential::lipschitz(1).unwrap().into()).unwrap();
        let prog = build_full_lp(&inst);
        assert_eq!(prog.count_sizes().per_edge_primal, vec![10]);
        assert!(lift_labeling(&inst, &lab(&[0, 3]), &prog).is_err());
        let x = lift_labeling(&inst, &lab(&[1, 2]), &prog).unwrap();
        assert_eq!(prog.objective_value(&x, 1e-12).unwrap(), 0.0);
    }

    #[test]
    fn convex_abs_prior_rows() {
        let topo = GraphTopology::chain(2).unwrap();
        let hp = ConvexHingePotential::max_affine_to_hinge(&[(1.0, 0.0), (-1.0, 0.0)]).unwrap();
        let inst = MrfInstance::homogeneous(topo, 2, vec![0.0; 4], hp.into()).unwrap();
        let prog = build_convex_lp(&inst).unwrap();
        assert_eq!(prog.dual_blocks.len(), 1);
        assert_eq!(prog.dual_blocks[0].prox, ProxClass::Interval { lo: 0.0, hi: 2.0 });
        assert_eq!(prog.row_count(), 1);
        for (a, b) in [(0, 0), (0, 1), (1, 0), (1, 1)] {
            let x = lift_labeling(&inst, &lab(&[a, b]), &prog).unwrap();
            let v = prog.objective_value(&x, 1e-12).unwrap();
            assert_eq!(v, (b as f64 - a as f64).abs());
        }
    }

    #[test]
    fn convex_lipschitz_only_hard_rows() {
        let topo = GraphTopology::chain(2).unwrap();
        let inst = MrfInstance::homogeneous(topo, 32, vec![0.0; 64], ConvexHingePotential::lipschitz(2).unwrap().into()).unwrap();
        let prog = build_convex_lp(&inst).unwrap();
        assert_eq!(prog.dual_blocks.len(), 1);
        assert_eq!(prog.dual_blocks[0].prox, ProxClass::Interval { lo: 0.0, hi: f64::INFINITY });
        // Y_s^i <= Y_t^{i+2} for i + 2 < 32 and Y_t^m <= Y_s^{m+2} likewise.
        assert_eq!(prog.row_count(), 2 * 29);
        let b_t = prog.node_blocks[1];
        assert!(prog.row(0).contains(&Atom::Prefix { block: b_t, upto: 3, coef: -1.0 }));
        assert!(lift_labeling(&inst, &lab(&[0, 3]), &prog).is_err());
    }

    #[test]
    fn convex_single_node() {
        let topo = GraphTopology::make_grid(1, 1).unwrap();
        let inst = MrfInstance::new(topo, 3, vec![3.0, 1.0, 2.0], vec![], vec![], vec![]).unwrap();
        let prog = build_convex_lp(&inst).unwrap();
        assert_eq!(prog.row_count(), 0);
        assert_eq!(prog.objective, vec![3.0, 1.0, 2.0]);
    }

    #[test]
    fn compact_size_law() {
        for &l in &[4usize, 8, 20, 64] {
            let topo = GraphTopology::chain(2).unwrap();
            let pwl = PiecewiseLinearPotential::new(vec![
                BoundedLinearPiece::full(0.3, 0.0, l),
                BoundedLinearPiece::new(-1.0, 0.5, -2, 1).unwrap(),
                BoundedLinearPiece::new(2.0, 0.0, 1, 1).unwrap(),
            ])
            .unwrap();
            let inst = MrfInstance::homogeneous(topo, l, vec![0.0; 2 * l], pwl.into()).unwrap();
            let rep = build_compact(&inst, CompactStyle::General).unwrap().count_sizes();
            assert_eq!(rep.per_edge_primal, vec![2 * 3 * l]);
            assert!(rep.per_edge_rows[0] <= 2 * l * 4 + 3);
        }
    }

    #[test]
    fn compact_k1_has_no_domain_rows() {
        let topo = GraphTopology::chain(2).unwrap();
        let pwl = PiecewiseLinearPotential::new(vec![BoundedLinearPiece::full(0.5, 1.0, 4)]).unwrap();
        let inst = MrfInstance::homogeneous(topo, 4, vec![0.0; 8], pwl.into()).unwrap();
        let prog = build_compact(&inst, CompactStyle::General).unwrap();
        assert_eq!(prog.row_count(), 2 * 4 + 1);
    }

    #[test]
    fn compact_lifts_match_energy() {
        let sym = PiecewiseLinearPotential::min_of(&[
            PiecewiseLinearPotential::abs_affine(1.0, 0.0, 3),
            PiecewiseLinearPotential::abs_affine(0.0, 1.0, 3),
        ])
        .unwrap();
        let base = chain_example();
        let l1 = MrfInstance::homogeneous(base.topology().clone(), 3, base.unary_table().to_vec(), sym.into()).unwrap();
        for (style, inst) in [(CompactStyle::General, base), (CompactStyle::General, l1.clone()), (CompactStyle::L1Min, l1)] {
            let prog = build_compact(&inst, style).unwrap();
            for a in 0..3 {
                for c in 0..3 {
                    let x = lift_labeling(&inst, &lab(&[a, c]), &prog).unwrap();
                    let e = inst.energy_of_labeling(&lab(&[a, c])).unwrap();
                    assert!((prog.objective_value(&x, 1e-12).unwrap() - e).abs() < 1e-12, "{style:?} {a} {c}");
                }
            }
        }
    }

    #[test]
    fn l1_style_rejects_asymmetric() {
        let topo = GraphTopology::chain(2).unwrap();
        let pwl = PiecewiseLinearPotential::new(vec![BoundedLinearPiece::full(0.5, 1.0, 4)]).unwrap();
        let inst = MrfInstance::homogeneous(topo, 4, vec![0.0; 8], Potential::Pwl(pwl)).unwrap();
        assert!(build_compact(&inst, CompactStyle::L1Min).is_err());
    }

    fn grid_l1(w: usize, h: usize, l: usize, terms: &[(f64, f64)]) -> MrfInstance {
        let topo = GraphTopology::make_grid(w, h).unwrap();
        let parts: Vec<_> = terms.iter().map(|&(a, b)| PiecewiseLinearPotential::abs_affine(a, b, l)).collect();
        let pwl = PiecewiseLinearPotential::min_of(&parts).unwrap();
        MrfInstance::homogeneous(topo, l, vec![0.0; w * h * l], pwl.into()).unwrap()
    }

    #[test]
    fn isotropic_joint_terms_groups() {
        let inst = grid_l1(2, 2, 4, &[(1.0, 0.0)]);
        let prog = build_compact_isotropic(&inst, IsoVariant::JointTerms).unwrap();
        let balls: Vec<_> = prog.dual_blocks.iter().filter(|d| matches!(d.prox, ProxClass::L2Ball { .. })).collect();
        // pixel 0 has both arms: one group per level i = 1..3
        assert_eq!(balls.len(), 3);
        assert!(balls.iter().all(|d| d.rows == 2 && d.owner == Owner::Stencil(0)));
        // pixels 1 and 2 have a single arm each: interval rows
        let singles = prog
            .dual_blocks
            .iter()
            .filter(|d| matches!(d.prox, ProxClass::Interval { lo, .. } if lo < 0.0))
            .count();
        assert_eq!(singles, 2);
    }

    #[test]
    fn isotropic_joint_branch_structure() {
        let inst = grid_l1(2, 2, 3, &[(1.0, 0.0), (0.0, 1.0)]);
        let prog = build_compact_isotropic(&inst, IsoVariant::JointBranch).unwrap();
        let selectors = prog.blocks.iter().filter(|b| matches!(b.role, BlockRole::StencilSelector { .. })).count();
        assert_eq!(selectors, 3);
        let z0 = prog.blocks.iter().find(|b| b.role == BlockRole::StencilSelector { pixel: 0 }).unwrap();
        assert_eq!((z0.kind, z0.len), (PrimalKind::Simplex, 2));
        // pixel 0: 3 arms x L marginal rows + 3 mass rows per branch
        let free0: usize = prog
            .dual_blocks
            .iter()
            .filter(|d| d.owner == Owner::Stencil(0) && d.prox == ProxClass::Free)
            .map(|d| d.rows)
            .sum();
        assert_eq!(free0, 3 * 3 + 3 * 2);
    }

    #[test]
    fn isotropic_requires_grid() {
        let inst = chain_example();
        assert!(build_compact_isotropic(&inst, IsoVariant::JointTerms).is_err());
    }

    #[test]
    fn isotropic_lift_on_a_line_matches_energy() {
        let mut inst = grid_l1(4, 1, 4, &[(1.0, 0.0), (0.0, 1.5)]);
        inst = MrfInstance::new(
            inst.topology().clone(),
            4,
            (0..16).map(|v| (v % 5) as f64 * 0.3).collect(),
            inst.potentials().to_vec(),
            vec![0; 3],
            vec![1.0; 3],
        )
        .unwrap();
        for variant in [IsoVariant::JointTerms, IsoVariant::JointBranch] {
            let prog = build_compact_isotropic(&inst, variant).unwrap();
            for a in [[0, 3, 3, 1], [2, 2, 2, 2], [0, 1, 2, 3]] {
                let x = lift_labeling(&inst, &lab(&a), &prog).unwrap();
                let e = inst.energy_of_labeling(&lab(&a)).unwrap();
                assert!((prog.objective_value(&x, 1e-12).unwrap() - e).abs() < 1e-12, "{variant:?} {a:?}");
            }
        }
    }

    #[test]
    fn prefix_convention() {
        let inst = chain_example();
        let b = ProgramBuilder::new(ProgramKind::FullLp, 3);
        let mut b = b;
        add_node_blocks(&mut b, &inst);
        assert_eq!(b.prefix(0, 0, 1.0), None);
        assert_eq!(b.prefix(0, -4, 1.0), None);
        assert_eq!(b.prefix(0, 7, 2.0), Some(Atom::Prefix { block: 0, upto: 3, coef: 2.0 }));
    }

    #[test]
    fn dump_has_one_line_per_row() {
        let prog = build_full_lp(&chain_example());
        assert_eq!(prog.dump().lines().count(), prog.row_count());
    }
}
