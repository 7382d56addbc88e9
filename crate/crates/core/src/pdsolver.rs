//! Diagonally preconditioned primal-dual hybrid gradient solver.
//!
//! Solves `min_x max_p <Kx, p> + c.x - F*(p)` over the primal sets of a
//! [`StructuredProgram`]. Step sizes follow the diagonal rule
//! `tau_j = 1 / sum_i |K_ij|^a`, `sigma_i = 1 / sum_j |K_ij|^(2-a)`; inside an
//! `L2Ball` group every row uses the smallest `sigma` of the group.
//!
//! The operator is never assembled. Prefix, row-sum and column-sum atoms act
//! on per-block aggregates of `x̄`, and the adjoint of a prefix atom is applied
//! as a suffix sum, so one iteration is linear in the number of atoms plus the
//! number of unknowns.

use std::collections::hash_map::DefaultHasher;
use std::collections::HashMap;
use std::hash::{Hash, Hasher};
use std::io::Write;
use std::sync::Arc;

use crate::model::{LabelAssignment, MrfInstance};
use crate::relaxations::{interval_support, Atom, PrimalKind, ProxClass, Shape, StructuredProgram};
use crate::{Error, Result, INFEASIBLE};

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub max_iters: usize,
    pub tol: f64,
    /// Iterations between objective evaluations, rounding and stopping checks.
    pub check_every: usize,
    /// Exponent `a` of the preconditioner.
    pub precond_alpha: f64,
    pub step_floor: f64,
    /// Process blocks in parallel (requires the `parallel` feature); results
    /// are identical to the sequential mode.
    pub parallel: bool,
    /// Adaptive restarts to the running average at check points, driven by
    /// the relaxed gap plus infeasibility.
    pub restarts: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self { max_iters: 5000, tol: 1e-6, check_every: 10, precond_alpha: 1.0, step_floor: 1e-12, parallel: false, restarts: false }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Converged,
    MaxIterations,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TracePoint {
    pub iter: usize,
    /// Relaxed objective `P(x)` over its finite part.
    pub primal: f64,
    pub dual: f64,
    /// Energy of the labeling rounded at this checkpoint.
    pub rounded_energy: f64,
    pub best_energy: f64,
    /// `(best_energy - dual) / (1 + |dual|)`.
    pub gap: f64,
    /// `|primal - dual| / (1 + |dual|)`.
    pub relaxed_gap: f64,
    pub infeasibility: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct EnergyTrace {
    pub points: Vec<TracePoint>,
}

impl EnergyTrace {
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "iter,primal_energy,dual_bound,gap")?;
        for p in &self.points {
            writeln!(w, "{},{},{},{}", p.iter, p.best_energy, p.dual, p.gap)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct Solution {
    pub primal: Vec<f64>,
    pub dual: Vec<f64>,
    pub labeling: LabelAssignment,
    /// Energy of `labeling`, the best rounded labeling seen.
    pub energy: f64,
    /// Dual bound at the final iterate.
    pub dual_bound: f64,
    pub best_dual_bound: f64,
    pub primal_value: f64,
    pub relaxed_gap: f64,
    pub infeasibility: f64,
    pub iterations: usize,
    pub status: Status,
    /// Number of step sizes clamped by the floor.
    pub floored_steps: usize,
    pub trace: EnergyTrace,
}

/// Resolved operator: every non-variable atom points into a flat aggregate buffer.
#[derive(Debug, Clone)]
pub struct Operator {
    dim: usize,
    rows: usize,
    row_var: Csr,
    row_agg: Csr,
    plans: Vec<BlockPlan>,
    agg_len: usize,
    // Transposes restricted to referenced entries.
    csc: Csr,
    agg_rows: Csr,
}

/// Compressed sparse rows with 32-bit indices.
#[derive(Debug, Clone, Default)]
struct Csr {
    ptr: Vec<u32>,
    idx: Vec<u32>,
    coef: Vec<f64>,
}

impl Csr {
    fn new() -> Self {
        Self { ptr: vec![0], ..Default::default() }
    }

    fn push(&mut self, j: usize, c: f64) {
        self.idx.push(j as u32);
        self.coef.push(c);
    }

    fn end_row(&mut self) {
        self.ptr.push(self.idx.len() as u32);
    }

    fn rows(&self) -> usize {
        self.ptr.len() - 1
    }

    fn is_empty(&self) -> bool {
        self.idx.is_empty()
    }

    #[inline]
    fn row(&self, r: usize) -> (&[u32], &[f64]) {
        let (a, b) = (self.ptr[r] as usize, self.ptr[r + 1] as usize);
        (&self.idx[a..b], &self.coef[a..b])
    }

    fn entries(&self, r: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let (idx, coef) = self.row(r);
        idx.iter().zip(coef).map(|(&j, &c)| (j as usize, c))
    }

    /// Calls `f(k, row(start + k) . v)` for `k < n`.
    #[inline]
    fn dots(&self, start: usize, n: usize, v: &[f64], mut f: impl FnMut(usize, f64)) {
        let ptr = &self.ptr[start..=start + n];
        let mut a = ptr[0] as usize;
        for (k, &b) in ptr[1..].iter().enumerate() {
            let b = b as usize;
            let mut s = 0.0;
            for (&j, &c) in self.idx[a..b].iter().zip(&self.coef[a..b]) {
                s += c * v[j as usize];
            }
            f(k, s);
            a = b;
        }
    }

    #[inline]
    fn dot(&self, r: usize, v: &[f64]) -> f64 {
        let (idx, coef) = self.row(r);
        let mut s = 0.0;
        for (&j, &c) in idx.iter().zip(coef) {
            s += c * v[j as usize];
        }
        s
    }

    fn map_coef(&self, f: impl Fn(f64) -> f64) -> Self {
        Self { coef: self.coef.iter().map(|&c| f(c)).collect(), ..self.clone() }
    }

    fn remap(&mut self, f: impl Fn(usize) -> usize) {
        for j in &mut self.idx {
            *j = f(*j as usize) as u32;
        }
    }

    /// Transpose into `n` rows, column `j` landing in row `key(j)`.
    fn transpose(&self, n: usize, key: impl Fn(usize) -> usize) -> Self {
        let mut count = vec![0u32; n + 1];
        for &j in &self.idx {
            count[key(j as usize) + 1] += 1;
        }
        for i in 0..n {
            count[i + 1] += count[i];
        }
        let mut fill = count.clone();
        let mut idx = vec![0; self.idx.len()];
        let mut coef = vec![0.0; self.idx.len()];
        for r in 0..self.rows() {
            for (j, c) in self.entries(r) {
                let k = key(j);
                let f = fill[k] as usize;
                idx[f] = r as u32;
                coef[f] = c;
                fill[k] += 1;
            }
        }
        Self { ptr: count, idx, coef }
    }
}

#[derive(Debug, Clone)]
struct BlockPlan {
    offset: usize,
    len: usize,
    kind: PrimalKind,
    /// `(agg offset)` of the cumulative sums `cum[0..=len]`.
    prefix: Option<usize>,
    /// `(agg offset, rows, cols)`; row sums then column sums.
    matrix: Option<(usize, usize, usize)>,
    agg_start: usize,
    agg_len: usize,
    /// Offset into `csc_ptr` when variables of this block appear in `Var` atoms.
    csc_base: Option<usize>,
}

impl Operator {
    pub fn new(prog: &StructuredProgram) -> Self {
        let nb = prog.blocks.len();
        let mut needs_prefix = vec![false; nb];
        let mut needs_matrix = vec![false; nb];
        let mut var_ref = vec![false; nb];
        let mut block_of = Vec::with_capacity(prog.dim());
        for (b, blk) in prog.blocks.iter().enumerate() {
            block_of.extend(std::iter::repeat_n(b as u32, blk.len));
        }
        for a in &prog.atoms {
            match *a {
                Atom::Var { index, .. } => var_ref[block_of[index] as usize] = true,
                Atom::Prefix { block, .. } => needs_prefix[block] = true,
                Atom::RowSum { block, .. } | Atom::ColSum { block, .. } => needs_matrix[block] = true,
            }
        }
        let mut plans = Vec::with_capacity(nb);
        let mut agg_len = 0;
        let mut csc_len = 0;
        for (b, blk) in prog.blocks.iter().enumerate() {
            let agg_start = agg_len;
            let prefix = needs_prefix[b].then(|| {
                let o = agg_len;
                agg_len += blk.len + 1;
                o
            });
            let matrix = if needs_matrix[b] {
                let Shape::Matrix { rows, cols } = blk.shape else {
                    panic!("row/column atom on a vector block");
                };
                let o = agg_len;
                agg_len += rows + cols;
                Some((o, rows, cols))
            } else {
                None
            };
            let csc_base = var_ref[b].then(|| {
                let o = csc_len;
                csc_len += blk.len;
                o
            });
            plans.push(BlockPlan {
                offset: blk.offset,
                len: blk.len,
                kind: blk.kind,
                prefix,
                matrix,
                agg_start,
                agg_len: agg_len - agg_start,
                csc_base,
            });
        }
        let rows = prog.row_count();
        let mut row_var = Csr::new();
        let mut row_agg = Csr::new();
        for r in 0..rows {
            for a in prog.row(r) {
                match *a {
                    Atom::Var { index, coef } => row_var.push(index, coef),
                    Atom::Prefix { block, upto, coef } => row_agg.push(plans[block].prefix.unwrap() + upto, coef),
                    Atom::RowSum { block, row, coef } => row_agg.push(plans[block].matrix.unwrap().0 + row, coef),
                    Atom::ColSum { block, col, coef } => {
                        let (o, nr, _) = plans[block].matrix.unwrap();
                        row_agg.push(o + nr + col, coef)
                    }
                }
            }
            row_var.end_row();
            row_agg.end_row();
        }
        let csc_index = |j: usize| {
            let p = &plans[block_of[j] as usize];
            p.csc_base.unwrap() + (j - p.offset)
        };
        let csc = row_var.transpose(csc_len, csc_index);
        let agg_rows = row_agg.transpose(agg_len, |a| a);
        Self { dim: prog.dim(), rows, row_var, row_agg, plans, agg_len, csc, agg_rows }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    fn aggregates(&self, x: &[f64], agg: &mut [f64]) {
        for p in &self.plans {
            fill_block_aggregates(p, &x[p.offset..p.offset + p.len], &mut agg[p.agg_start..p.agg_start + p.agg_len]);
        }
    }

    #[inline]
    fn row_value(&self, r: usize, x: &[f64], agg: &[f64]) -> f64 {
        self.row_var.dot(r, x) + self.row_agg.dot(r, agg)
    }

    pub fn forward(&self, x: &[f64]) -> Vec<f64> {
        let mut agg = vec![0.0; self.agg_len];
        self.aggregates(x, &mut agg);
        (0..self.rows).map(|r| self.row_value(r, x, &agg)).collect()
    }

    pub fn adjoint(&self, p: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; self.dim];
        let mut scratch = Vec::new();
        for plan in &self.plans {
            self.block_gradient(plan, p, &mut scratch, |k, v| g[plan.offset + k] = v, |_| 0.0);
        }
        g
    }

    /// `constant + min_{x in X} (c + K^T p).x`.
    fn lagrangian_bound(&self, prog: &StructuredProgram, p: &[f64]) -> f64 {
        let mut scratch = Vec::new();
        let mut total = prog.constant;
        for plan in &self.plans {
            let mut acc = (0.0, INFEASIBLE);
            let c = &prog.objective[plan.offset..plan.offset + plan.len];
            self.block_gradient(plan, p, &mut scratch, |_, g| block_set_min(plan.kind, g, &mut acc), |k| c[k]);
            total += acc.0 + if acc.1.is_finite() { acc.1 } else { 0.0 };
        }
        total
    }

    /// Calls `out(k, (K^T p)_k + base(k))` for every variable of the block.
    #[inline]
    fn block_gradient(
        &self,
        plan: &BlockPlan,
        p: &[f64],
        scratch: &mut Vec<f64>,
        mut out: impl FnMut(usize, f64),
        base: impl Fn(usize) -> f64,
    ) {
        scratch.clear();
        scratch.resize(plan.agg_len, 0.0);
        self.agg_rows.dots(plan.agg_start, plan.agg_len, p, |k, v| scratch[k] = v);
        let var_part = |k: usize| match plan.csc_base {
            Some(b) => self.csc.dot(b + k, p),
            None => 0.0,
        };
        match (plan.prefix, plan.matrix) {
            (Some(po), None) => {
                let acc = &scratch[po - plan.agg_start..po - plan.agg_start + plan.len + 1];
                let mut suffix = 0.0;
                for k in (0..plan.len).rev() {
                    suffix += acc[k + 1];
                    out(k, base(k) + var_part(k) + suffix);
                }
            }
            (None, Some((mo, nr, nc))) => {
                let (rs, cs) = scratch[mo - plan.agg_start..mo - plan.agg_start + nr + nc].split_at(nr);
                for i in 0..nr {
                    for j in 0..nc {
                        let k = i * nc + j;
                        out(k, base(k) + var_part(k) + rs[i] + cs[j]);
                    }
                }
            }
            (None, None) => {
                for k in 0..plan.len {
                    out(k, base(k) + var_part(k));
                }
            }
            (Some(po), Some((mo, nr, nc))) => {
                let mut g: Vec<f64> = (0..plan.len).map(|k| base(k) + var_part(k)).collect();
                let acc = &scratch[po - plan.agg_start..po - plan.agg_start + plan.len + 1];
                let mut suffix = 0.0;
                for k in (0..plan.len).rev() {
                    suffix += acc[k + 1];
                    g[k] += suffix;
                }
                let base_m = mo - plan.agg_start;
                for i in 0..nr {
                    for j in 0..nc {
                        g[i * nc + j] += scratch[base_m + i] + scratch[base_m + nr + j];
                    }
                }
                for (k, v) in g.into_iter().enumerate() {
                    out(k, v);
                }
            }
        }
    }

    /// `sum_i |K_ij|^a` per column and `sum_j |K_ij|^b` per row.
    fn abs_sums(&self, a: f64, b: f64) -> (Vec<f64>, Vec<f64>) {
        let pa = |c: f64| abs_pow(c, a);
        let mut col = vec![0.0; self.dim];
        let mut scratch = Vec::new();
        let signless = Operator {
            row_var: self.row_var.map_coef(pa),
            row_agg: self.row_agg.map_coef(pa),
            csc: self.csc.map_coef(pa),
            agg_rows: self.agg_rows.map_coef(pa),
            ..self.clone()
        };
        let ones = vec![1.0; self.rows];
        for plan in &signless.plans {
            signless.block_gradient(plan, &ones, &mut scratch, |k, v| col[plan.offset + k] = v, |_| 0.0);
        }
        // Width of each aggregate: number of variables it sums.
        let mut width = vec![0usize; self.agg_len];
        for p in &self.plans {
            if let Some(o) = p.prefix {
                for u in 0..=p.len {
                    width[o + u] = u;
                }
            }
            if let Some((o, nr, nc)) = p.matrix {
                width[o..o + nr].iter_mut().for_each(|w| *w = nc);
                width[o + nr..o + nr + nc].iter_mut().for_each(|w| *w = nr);
            }
        }
        let row = (0..self.rows)
            .map(|r| {
                let v: f64 = self.row_var.entries(r).map(|(_, c)| abs_pow(c, b)).sum();
                let g: f64 = self.row_agg.entries(r).map(|(ag, c)| abs_pow(c, b) * width[ag] as f64).sum();
                v + g
            })
            .collect();
        (col, row)
    }
}

fn abs_pow(c: f64, e: f64) -> f64 {
    if e == 1.0 {
        c.abs()
    } else {
        c.abs().powf(e)
    }
}

fn fill_block_aggregates(p: &BlockPlan, x: &[f64], agg: &mut [f64]) {
    if let Some(o) = p.prefix {
        let cum = &mut agg[o - p.agg_start..o - p.agg_start + p.len + 1];
        cum[0] = 0.0;
        for k in 0..p.len {
            cum[k + 1] = cum[k] + x[k];
        }
    }
    if let Some((o, nr, nc)) = p.matrix {
        let (rs, cs) = agg[o - p.agg_start..o - p.agg_start + nr + nc].split_at_mut(nr);
        cs.fill(0.0);
        for i in 0..nr {
            let row = &x[i * nc..(i + 1) * nc];
            rs[i] = row.iter().sum();
            for (c, v) in cs.iter_mut().zip(row) {
                *c += v;
            }
        }
    }
}

/// `K x` for a program.
pub fn apply_forward(prog: &StructuredProgram, x: &[f64]) -> Result<Vec<f64>> {
    if x.len() != prog.dim() {
        return Err(Error::Dimension(format!("primal vector has {} entries, expected {}", x.len(), prog.dim())));
    }
    Ok(Operator::new(prog).forward(x))
}

/// `K^T p` for a program.
pub fn apply_adjoint(prog: &StructuredProgram, p: &[f64]) -> Result<Vec<f64>> {
    if p.len() != prog.row_count() {
        return Err(Error::Dimension(format!("dual vector has {} entries, expected {}", p.len(), prog.row_count())));
    }
    Ok(Operator::new(prog).adjoint(p))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RowEval {
    /// Sum of the finite support-function terms.
    pub penalty: f64,
    /// Largest violation of an equality or one-sided row.
    pub infeasibility: f64,
}

/// Splits `sum_g F_g(r_g)` into its finite part and the constraint violation.
pub fn row_terms(prog: &StructuredProgram, r: &[f64]) -> RowEval {
    let mut penalty = 0.0;
    let mut infeasibility: f64 = 0.0;
    for d in &prog.dual_blocks {
        let vals = &r[d.row_range()];
        match d.prox {
            ProxClass::Free => vals.iter().for_each(|v| infeasibility = infeasibility.max(v.abs())),
            ProxClass::Interval { lo, hi } => {
                for &v in vals {
                    let s = interval_support(lo, hi, v);
                    if s.is_finite() {
                        penalty += s;
                    } else {
                        infeasibility = infeasibility.max(v.abs());
                    }
                }
            }
            ProxClass::L2Ball { .. } => penalty += d.prox.support(vals),
        }
    }
    RowEval { penalty, infeasibility }
}

/// Largest distance of a primal block from its set (sup-norm).
pub fn primal_set_violation(prog: &StructuredProgram, x: &[f64]) -> f64 {
    let mut worst: f64 = 0.0;
    for b in &prog.blocks {
        let v = &x[b.offset..b.offset + b.len];
        match b.kind {
            PrimalKind::Simplex => {
                worst = worst.max((v.iter().sum::<f64>() - 1.0).abs());
                v.iter().for_each(|&t| worst = worst.max(-t));
            }
            PrimalKind::Nonneg => v.iter().for_each(|&t| worst = worst.max(-t)),
            PrimalKind::Box { lo, hi } => v.iter().for_each(|&t| worst = worst.max(lo - t).max(t - hi)),
        }
    }
    worst
}

/// Euclidean projection onto the probability simplex.
pub fn prox_simplex(v: &mut [f64]) {
    let ones = vec![1.0; v.len()];
    let mut idx = Vec::new();
    prox_simplex_weighted(v, &ones, &mut idx);
}

/// `argmin_x sum_j (x_j - v_j)^2 / (2 tau_j)` over the simplex:
/// `x_j = max(0, v_j - tau_j mu)` with the threshold `mu` found by sorting
/// the breakpoints `v_j / tau_j`.
pub fn prox_simplex_weighted(v: &mut [f64], tau: &[f64], idx: &mut Vec<usize>) {
    idx.clear();
    idx.extend(0..v.len());
    idx.sort_unstable_by(|&a, &b| (v[b] / tau[b]).total_cmp(&(v[a] / tau[a])));
    let (mut sv, mut st) = (0.0, 0.0);
    let mut mu = 0.0;
    for &j in idx.iter() {
        let (nsv, nst) = (sv + v[j], st + tau[j]);
        let cand = (nsv - 1.0) / nst;
        if st > 0.0 && v[j] - tau[j] * cand <= 0.0 {
            break;
        }
        sv = nsv;
        st = nst;
        mu = cand;
    }
    for (x, t) in v.iter_mut().zip(tau) {
        *x = (*x - t * mu).max(0.0);
    }
}

pub fn prox_interval(v: &mut [f64], lo: f64, hi: f64) {
    v.iter_mut().for_each(|x| *x = x.clamp(lo, hi));
}

pub fn prox_l2ball(v: &mut [f64], radius: f64) {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if n > radius {
        let s = radius / n;
        v.iter_mut().for_each(|x| *x *= s);
    }
}

#[derive(Debug, Clone)]
enum Tau {
    Uniform(f64),
    PerVar(Arc<[f64]>),
}

impl Tau {
    fn scaled(&self, f: f64) -> Tau {
        match self {
            Tau::Uniform(t) => Tau::Uniform(t * f),
            Tau::PerVar(v) => Tau::PerVar(v.iter().map(|t| t * f).collect()),
        }
    }
}

/// Interns block slices so that blocks with equal contents share storage.
#[derive(Default)]
struct SliceInterner {
    seen: HashMap<u64, Vec<Arc<[f64]>>>,
}

impl SliceInterner {
    fn intern(&mut self, v: &[f64]) -> Arc<[f64]> {
        let mut h = DefaultHasher::new();
        for x in v {
            x.to_bits().hash(&mut h);
        }
        let bucket = self.seen.entry(h.finish()).or_default();
        if let Some(a) = bucket.iter().find(|a| a.iter().zip(v).all(|(x, y)| x.to_bits() == y.to_bits()) && a.len() == v.len()) {
            return a.clone();
        }
        let a: Arc<[f64]> = v.into();
        bucket.push(a.clone());
        a
    }
}

/// Step sizes; `floored` counts sums below `floor`.
#[derive(Debug, Clone)]
pub struct Preconditioners {
    pub tau: Vec<f64>,
    pub sigma: Vec<f64>,
    pub floored: usize,
}

pub fn compute_preconditioners(prog: &StructuredProgram, alpha: f64, floor: f64) -> Preconditioners {
    let op = Operator::new(prog);
    preconditioners_for(&op, prog, alpha, floor)
}

fn preconditioners_for(op: &Operator, prog: &StructuredProgram, alpha: f64, floor: f64) -> Preconditioners {
    let (col, row) = op.abs_sums(alpha, 2.0 - alpha);
    let mut floored = 0;
    let mut inv = |s: f64| {
        if s < floor {
            floored += 1;
            1.0 / floor
        } else {
            1.0 / s
        }
    };
    let tau: Vec<f64> = col.iter().map(|&s| inv(s)).collect();
    let mut sigma: Vec<f64> = row.iter().map(|&s| inv(s)).collect();
    for d in &prog.dual_blocks {
        if let ProxClass::L2Ball { .. } = d.prox {
            let m = sigma[d.row_range()].iter().copied().fold(f64::INFINITY, f64::min);
            sigma[d.row_range()].iter_mut().for_each(|s| *s = m);
        }
    }
    Preconditioners { tau, sigma, floored }
}

struct State<'a> {
    op: &'a Operator,
    prog: &'a StructuredProgram,
    taus: Vec<Tau>,
    costs: Vec<Arc<[f64]>>,
    sigma: Vec<f64>,
    x: Vec<f64>,
    xbar: Vec<f64>,
    agg: Vec<f64>,
    p: Vec<f64>,
}

fn block_set_min(kind: PrimalKind, g: f64, acc: &mut (f64, f64)) {
    match kind {
        PrimalKind::Box { lo, hi } => acc.0 += (lo * g).min(hi * g),
        PrimalKind::Simplex => acc.1 = acc.1.min(g),
        PrimalKind::Nonneg => {
            if g < 0.0 {
                acc.0 = -INFEASIBLE;
            }
        }
    }
}

/// One primal block update. Returns `min_{x in X_b} g.x` with `g = c + K^T p`.
#[allow(clippy::too_many_arguments)]
fn primal_block(
    op: &Operator,
    plan: &BlockPlan,
    tau: &Tau,
    c: &[f64],
    p: &[f64],
    x: &mut [f64],
    xbar: &mut [f64],
    agg: &mut [f64],
    scratch: &mut Scratch,
    want_bound: bool,
) -> f64 {
    if let PrimalKind::Box { lo, hi } = plan.kind {
        if let (None, None, Some(m), Tau::Uniform(t)) = (plan.csc_base, plan.prefix, plan.matrix, tau) {
            return dense_box_block(op, plan, m, (lo, hi), *t, c, p, x, agg, scratch, want_bound);
        }
        if plan.matrix.is_none() {
            return vector_box_block(op, plan, (lo, hi), tau, c, p, x, xbar, agg, scratch);
        }
    }
    let mut bound = (0.0, INFEASIBLE);
    let kind = plan.kind;
    let tau_at = |k: usize| match tau {
        Tau::Uniform(t) => *t,
        Tau::PerVar(v) => v[k],
    };
    let v = &mut scratch.v;
    v.clear();
    v.resize(plan.len, 0.0);
    op.block_gradient(
        plan,
        p,
        &mut scratch.agg,
        |k, g| {
            block_set_min(kind, g, &mut bound);
            v[k] = x[k] - tau_at(k) * g;
        },
        |k| c[k],
    );
    match kind {
        PrimalKind::Box { lo, hi } => prox_interval(v, lo, hi),
        PrimalKind::Nonneg => prox_interval(v, 0.0, f64::INFINITY),
        PrimalKind::Simplex => match tau {
            Tau::Uniform(_) => {
                scratch.ones.resize(plan.len, 1.0);
                prox_simplex_weighted(v, &scratch.ones[..plan.len], &mut scratch.idx)
            }
            Tau::PerVar(t) => prox_simplex_weighted(v, t, &mut scratch.idx),
        },
    }
    let write_bar = plan.csc_base.is_some();
    let bar = &mut scratch.bar;
    bar.clear();
    for k in 0..plan.len {
        let b = 2.0 * v[k] - x[k];
        x[k] = v[k];
        bar.push(b);
    }
    if write_bar {
        xbar.copy_from_slice(bar);
    }
    fill_block_aggregates(plan, bar, agg);
    let simplex = if bound.1.is_finite() { bound.1 } else { 0.0 };
    bound.0 + simplex
}

fn gather(op: &Operator, plan: &BlockPlan, p: &[f64], out: &mut Vec<f64>) {
    out.clear();
    out.resize(plan.agg_len, 0.0);
    op.agg_rows.dots(plan.agg_start, plan.agg_len, p, |k, v| out[k] = v);
}

/// Box-constrained edge table touched only through row and column sums.
#[allow(clippy::too_many_arguments)]
fn dense_box_block(
    op: &Operator,
    plan: &BlockPlan,
    (mo, nr, nc): (usize, usize, usize),
    (lo, hi): (f64, f64),
    tau: f64,
    c: &[f64],
    p: &[f64],
    x: &mut [f64],
    agg: &mut [f64],
    scratch: &mut Scratch,
    want_bound: bool,
) -> f64 {
    gather(op, plan, p, &mut scratch.agg);
    let base = mo - plan.agg_start;
    let (racc, cacc) = scratch.agg[base..base + nr + nc].split_at(nr);
    let (rs, cs) = agg[base..base + nr + nc].split_at_mut(nr);
    cs.fill(0.0);
    let mut bound = 0.0;
    let brow = &mut scratch.bar;
    brow.clear();
    brow.resize(nc, 0.0);
    for i in 0..nr {
        let ri = racc[i];
        let xr = &mut x[i * nc..(i + 1) * nc];
        let cr = &c[i * nc..(i + 1) * nc];
        if want_bound {
            bound += cr.iter().zip(cacc).map(|(&cj, &aj)| {
                let g = cj + ri + aj;
                (lo * g).min(hi * g)
            }).sum::<f64>();
        }
        for (((xj, &cj), &aj), (bj, sj)) in xr.iter_mut().zip(cr).zip(cacc).zip(brow.iter_mut().zip(cs.iter_mut())) {
            let g = cj + ri + aj;
            let old = *xj;
            let xn = (old - tau * g).max(lo).min(hi);
            let b = 2.0 * xn - old;
            *xj = xn;
            *bj = b;
            *sj += b;
        }
        rs[i] = lane_sum(brow);
    }
    bound
}

/// Sum with four independent accumulators.
fn lane_sum(v: &[f64]) -> f64 {
    let mut acc = [0.0; 4];
    let chunks = v.chunks_exact(4);
    let rest: f64 = chunks.remainder().iter().sum();
    for ch in chunks {
        for (a, x) in acc.iter_mut().zip(ch) {
            *a += x;
        }
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + rest
}

/// Box-constrained vector block (variable and prefix atoms).
#[allow(clippy::too_many_arguments)]
fn vector_box_block(
    op: &Operator,
    plan: &BlockPlan,
    (lo, hi): (f64, f64),
    tau: &Tau,
    c: &[f64],
    p: &[f64],
    x: &mut [f64],
    xbar: &mut [f64],
    agg: &mut [f64],
    scratch: &mut Scratch,
) -> f64 {
    gather(op, plan, p, &mut scratch.agg);
    let bar = &mut scratch.bar;
    bar.clear();
    bar.resize(plan.len, 0.0);
    let direct = &mut scratch.v;
    direct.clear();
    direct.resize(plan.len, 0.0);
    if let Some(b) = plan.csc_base {
        op.csc.dots(b, plan.len, p, |k, v| direct[k] = v);
    }
    let mut bound = 0.0;
    let mut suffix = 0.0;
    let acc = plan.prefix.map(|po| &scratch.agg[po - plan.agg_start..po - plan.agg_start + plan.len + 1]);
    for k in (0..plan.len).rev() {
        let mut g = c[k] + direct[k];
        if let Some(acc) = acc {
            suffix += acc[k + 1];
            g += suffix;
        }
        bound += (lo * g).min(hi * g);
        let old = x[k];
        let t = match tau {
            Tau::Uniform(t) => *t,
            Tau::PerVar(v) => v[k],
        };
        let xn = (old - t * g).clamp(lo, hi);
        bar[k] = 2.0 * xn - old;
        x[k] = xn;
    }
    if plan.csc_base.is_some() {
        xbar.copy_from_slice(bar);
    }
    fill_block_aggregates(plan, bar, agg);
    bound
}

#[derive(Default)]
struct Scratch {
    v: Vec<f64>,
    agg: Vec<f64>,
    idx: Vec<usize>,
    ones: Vec<f64>,
    bar: Vec<f64>,
}

fn dual_block(op: &Operator, prox: ProxClass, first: usize, sigma: &[f64], x: &[f64], agg: &[f64], p: &mut [f64]) {
    let n = p.len();
    if !op.row_var.is_empty() {
        op.row_var.dots(first, n, x, |k, v| p[k] += sigma[k] * v);
    }
    match prox {
        ProxClass::Interval { lo, hi } => op.row_agg.dots(first, n, agg, |k, v| p[k] = (p[k] + sigma[k] * v).max(lo).min(hi)),
        ProxClass::Free => op.row_agg.dots(first, n, agg, |k, v| p[k] += sigma[k] * v),
        ProxClass::L2Ball { radius } => {
            op.row_agg.dots(first, n, agg, |k, v| p[k] += sigma[k] * v);
            prox_l2ball(p, radius);
        }
    }
}

/// Splits `v` into consecutive pieces of the given lengths.
fn split_lengths(mut v: &mut [f64], lens: impl Iterator<Item = usize>) -> Vec<&mut [f64]> {
    let mut out = Vec::new();
    for n in lens {
        let (a, b) = std::mem::take(&mut v).split_at_mut(n);
        out.push(a);
        v = b;
    }
    out
}

impl<'a> State<'a> {
    /// Sets `x̄ = x` after the iterate was replaced.
    fn reset_extrapolation(&mut self, full: &Operator) {
        let mut next = 0;
        for plan in &full.plans {
            if plan.csc_base.is_some() {
                self.xbar[next..next + plan.len].copy_from_slice(&self.x[plan.offset..plan.offset + plan.len]);
                next += plan.len;
            }
        }
        full.aggregates(&self.x, &mut self.agg);
    }

    fn dual_step(&mut self, parallel: bool) {
        let op = self.op;
        let (x, agg, sigma) = (&self.xbar, &self.agg, &self.sigma);
        let blocks = &self.prog.dual_blocks;
        let parts = split_lengths(&mut self.p, blocks.iter().map(|d| d.rows));
        let step = |(d, p): (&crate::relaxations::DualBlock, &mut [f64])| {
            dual_block(op, d.prox, d.first_row, &sigma[d.row_range()], x, agg, p)
        };
        if parallel {
            #[cfg(feature = "parallel")]
            {
                use rayon::prelude::*;
                blocks.par_iter().zip(parts.into_par_iter()).for_each(step);
                return;
            }
        }
        blocks.iter().zip(parts).for_each(step);
    }

    /// Primal step; returns the Lagrangian bound `D(p)` at the current dual point.
    fn primal_step(&mut self, parallel: bool, want_bound: bool) -> f64 {
        let op = self.op;
        let plans = &op.plans;
        let costs = &self.costs;
        let p = &self.p;
        let taus = &self.taus;
        let xs = split_lengths(&mut self.x, plans.iter().map(|b| b.len));
        let bars = split_lengths(&mut self.xbar, plans.iter().map(|b| if b.csc_base.is_some() { b.len } else { 0 }));
        let aggs = split_lengths(&mut self.agg, plans.iter().map(|b| b.agg_len));
        let work = |scratch: &mut Scratch, (((b, x), bar), agg): (((usize, &mut [f64]), &mut [f64]), &mut [f64])| {
            let plan = &plans[b];
            primal_block(op, plan, &taus[b], &costs[b], p, x, bar, agg, scratch, want_bound)
        };
        let bound: f64 = if parallel {
            #[cfg(feature = "parallel")]
            {
                use rayon::prelude::*;
                xs.into_par_iter()
                    .enumerate()
                    .zip(bars.into_par_iter())
                    .zip(aggs.into_par_iter())
                    .map_init(Scratch::default, work)
                    .collect::<Vec<f64>>()
                    .into_iter()
                    .sum()
            }
            #[cfg(not(feature = "parallel"))]
            {
                unreachable!()
            }
        } else {
            let mut scratch = Scratch::default();
            xs.into_iter().enumerate().zip(bars).zip(aggs).map(|t| work(&mut scratch, t)).sum()
        };
        self.prog.constant + bound
    }
}

/// Running sums of the iterates since the last restart.
struct Averages {
    on: bool,
    x: Vec<f64>,
    p: Vec<f64>,
    count: usize,
    last_restart: usize,
    err_restart: f64,
    err_prev: f64,
    /// Primal weight `w`: steps are `tau / w` and `sigma * w`.
    weight: f64,
    x_anchor: Vec<f64>,
    p_anchor: Vec<f64>,
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(u, v)| (u - v) * (u - v)).sum::<f64>().sqrt()
}

impl Averages {
    fn new(on: bool, dim: usize, rows: usize) -> Self {
        let (dim, rows) = if on { (dim, rows) } else { (0, 0) };
        Self {
            on,
            x: vec![0.0; dim],
            p: vec![0.0; rows],
            count: 0,
            last_restart: 0,
            err_restart: INFEASIBLE,
            err_prev: INFEASIBLE,
            weight: 1.0,
            x_anchor: vec![0.0; dim],
            p_anchor: vec![0.0; rows],
        }
    }

    fn add(&mut self, x: &[f64], p: &[f64]) {
        if !self.on {
            return;
        }
        self.x.iter_mut().zip(x).for_each(|(s, v)| *s += v);
        self.p.iter_mut().zip(p).for_each(|(s, v)| *s += v);
        self.count += 1;
    }

    fn means(&self) -> (Vec<f64>, Vec<f64>) {
        let w = 1.0 / self.count.max(1) as f64;
        (self.x.iter().map(|v| v * w).collect(), self.p.iter().map(|v| v * w).collect())
    }

    fn restart(&mut self, n: usize, err: f64) {
        self.x.fill(0.0);
        self.p.fill(0.0);
        self.count = 0;
        self.last_restart = n;
        self.err_restart = err;
        self.err_prev = INFEASIBLE;
    }
}

fn xbar_offsets(plans: &[BlockPlan]) -> usize {
    plans.iter().filter(|b| b.csc_base.is_some()).map(|b| b.len).sum()
}

/// Runs the solver from `x = x̄ = 0`, `p = 0`.
pub fn solve(prog: &StructuredProgram, inst: &MrfInstance, config: &SolverConfig) -> Result<Solution> {
    if prog.node_blocks.len() != inst.node_count() || prog.labels != inst.label_count() {
        return Err(Error::Dimension("program does not belong to this instance".into()));
    }
    let parallel = config.parallel && cfg!(feature = "parallel");
    let op = Operator::new(prog);
    let pre = preconditioners_for(&op, prog, config.precond_alpha, config.step_floor);
    let mut interner = SliceInterner::default();
    let taus: Vec<Tau> = op
        .plans
        .iter()
        .map(|b| {
            let t = &pre.tau[b.offset..b.offset + b.len];
            if t.iter().all(|&v| v == t[0]) {
                Tau::Uniform(t.first().copied().unwrap_or(1.0))
            } else {
                Tau::PerVar(interner.intern(t))
            }
        })
        .collect();
    let costs = op.plans.iter().map(|b| interner.intern(&prog.objective[b.offset..b.offset + b.len])).collect();
    drop(interner);
    // x̄ is only read through variable atoms, which index a packed copy;
    // other blocks live in the aggregates.
    let packed = PackedOperator::new(&op).op;
    let xbar_len = xbar_offsets(&op.plans);
    let mut st = State {
        op: &packed,
        prog,
        taus: taus.clone(),
        costs,
        sigma: pre.sigma.clone(),
        x: vec![0.0; prog.dim()],
        xbar: vec![0.0; xbar_len],
        agg: vec![0.0; op.agg_len],
        p: vec![0.0; op.rows],
    };
    let mut trace = EnergyTrace::default();
    let mut best_energy = INFEASIBLE;
    let mut best_labels: Option<LabelAssignment> = None;
    let mut best_dual = -INFEASIBLE;
    let (mut dual, mut primal_value, mut rel_gap, mut infeas) = (-INFEASIBLE, INFEASIBLE, INFEASIBLE, INFEASIBLE);
    let mut status = Status::MaxIterations;
    let mut iters = 0;
    let check_every = config.check_every.max(1);
    let mut eval_agg = vec![0.0; op.agg_len];
    let mut evaluate = |x: &[f64]| {
        op.aggregates(x, &mut eval_agg);
        let r: Vec<f64> = (0..op.rows).map(|i| op.row_value(i, x, &eval_agg)).collect();
        let ev = row_terms(prog, &r);
        (prog.linear_value(x) + ev.penalty, ev.infeasibility)
    };
    let gap_of = |primal: f64, dual: f64| (primal - dual).abs() / (1.0 + dual.abs());
    let mut avg = Averages::new(config.restarts, prog.dim(), op.rows);
    if config.restarts {
        let (pv, inf) = evaluate(&st.x);
        avg.err_restart = gap_of(pv, op.lagrangian_bound(prog, &st.p)) + inf;
    }
    for n in 1..=config.max_iters {
        st.dual_step(parallel);
        let check = n % check_every == 0 || n == config.max_iters;
        let d = st.primal_step(parallel, check);
        avg.add(&st.x, &st.p);
        iters = n;
        if !check {
            continue;
        }
        dual = d;
        if dual.is_nan() || dual == INFEASIBLE || st.x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite { iter: n, what: "primal iterate or dual bound".into() });
        }
        best_dual = best_dual.max(dual);
        (primal_value, infeas) = evaluate(&st.x);
        rel_gap = gap_of(primal_value, dual);
        if config.restarts {
            let (ax, ap) = avg.means();
            let (apv, ainf) = evaluate(&ax);
            let ad = op.lagrangian_bound(prog, &ap);
            best_dual = best_dual.max(ad);
            let (err_avg, err_cur) = (gap_of(apv, ad) + ainf, rel_gap + infeas);
            let use_avg = err_avg < err_cur;
            if use_avg {
                (primal_value, infeas, dual, rel_gap) = (apv, ainf, ad, gap_of(apv, ad));
            }
            let err = err_avg.min(err_cur);
            let since = n - avg.last_restart;
            let restart = err <= 0.2 * avg.err_restart
                || (err <= 0.8 * avg.err_restart && err > avg.err_prev)
                || since as f64 >= 0.36 * n as f64;
            if use_avg && (restart || (rel_gap < config.tol && infeas < config.tol)) {
                st.x = ax;
                st.p = ap;
                st.reset_extrapolation(&op);
            }
            if restart {
                let (dx, dp) = (dist(&st.x, &avg.x_anchor), dist(&st.p, &avg.p_anchor));
                if dx > 1e-10 && dp > 1e-10 {
                    avg.weight = (0.5 * (dp / dx).ln() + 0.5 * avg.weight.ln()).exp();
                    st.taus = taus.iter().map(|t| t.scaled(1.0 / avg.weight)).collect();
                    st.sigma = pre.sigma.iter().map(|s| s * avg.weight).collect();
                }
                avg.x_anchor.copy_from_slice(&st.x);
                avg.p_anchor.copy_from_slice(&st.p);
                avg.restart(n, err);
            } else {
                avg.err_prev = err;
            }
        }
        let labels = prog.round(&st.x);
        let e = inst.energy_of_labeling(&labels)?;
        if e < best_energy || best_labels.is_none() {
            best_energy = e;
            best_labels = Some(labels);
        }
        trace.points.push(TracePoint {
            iter: n,
            primal: primal_value,
            dual,
            rounded_energy: e,
            best_energy,
            gap: (best_energy - dual) / (1.0 + dual.abs()),
            relaxed_gap: rel_gap,
            infeasibility: infeas,
        });
        if rel_gap < config.tol && infeas < config.tol {
            status = Status::Converged;
            break;
        }
    }
    let labeling = match best_labels {
        Some(l) => l,
        None => prog.round(&st.x),
    };
    let energy = inst.energy_of_labeling(&labeling)?;
    Ok(Solution {
        primal: st.x,
        dual: st.p,
        labeling,
        energy,
        dual_bound: dual,
        best_dual_bound: best_dual,
        primal_value,
        relaxed_gap: rel_gap,
        infeasibility: infeas,
        iterations: iters,
        status,
        floored_steps: pre.floored,
        trace,
    })
}

/// Copy of an operator whose variable atoms index the packed x̄ vector.
struct PackedOperator {
    op: Operator,
}

impl PackedOperator {
    fn new(op: &Operator) -> Self {
        let mut map = vec![usize::MAX; op.dim];
        let mut next = 0;
        for p in &op.plans {
            if p.csc_base.is_some() {
                for k in 0..p.len {
                    map[p.offset + k] = next;
                    next += 1;
                }
            }
        }
        let mut packed = op.clone();
        packed.row_var.remap(|j| map[j]);
        Self { op: packed }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::GraphTopology;
    use crate::potentials::PiecewiseLinearPotential;
    use crate::relaxations::{build_compact, build_full_lp, CompactStyle};

    fn chain_example() -> MrfInstance {
        let topo = GraphTopology::chain(2).unwrap();
        let prior = PiecewiseLinearPotential::from_samples(&[1.0, 1.0, 0.0, 1.0, 1.0]).unwrap();
        MrfInstance::homogeneous(topo, 3, vec![0.0, 1.0, 2.0, 2.0, 1.0, 0.0], prior.into()).unwrap()
    }

    #[test]
    fn simplex_projection_examples() {
        let mut v = [0.5, 0.5];
        prox_simplex(&mut v);
        assert_eq!(v, [0.5, 0.5]);
        let mut v = [2.0, 0.0];
        prox_simplex(&mut v);
        assert_eq!(v, [1.0, 0.0]);
        let mut v = [0.0, 0.0, 0.0];
        prox_simplex(&mut v);
        for x in v {
            assert!((x - 1.0 / 3.0).abs() < 1e-15);
        }
    }

    #[test]
    fn weighted_simplex_kkt() {
        let v = [0.3, -0.2, 0.9, 0.1];
        let tau = [0.5, 2.0, 1.0, 0.25];
        let mut x = v;
        let mut idx = Vec::new();
        prox_simplex_weighted(&mut x, &tau, &mut idx);
        assert!((x.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        // x_j = max(0, v_j - tau_j mu) for a common mu
        let mus: Vec<f64> = (0..4).filter(|&j| x[j] > 0.0).map(|j| (v[j] - x[j]) / tau[j]).collect();
        assert!(mus.windows(2).all(|w| (w[0] - w[1]).abs() < 1e-12));
        for j in 0..4 {
            if x[j] == 0.0 {
                assert!(v[j] / tau[j] <= mus[0] + 1e-12);
            }
        }
    }

    #[test]
    fn interval_and_ball() {
        let mut v = [-1.0, 0.5, 3.0];
        prox_interval(&mut v, 0.0, 1.0);
        assert_eq!(v, [0.0, 0.5, 1.0]);
        let mut v = [3.0, 4.0];
        prox_l2ball(&mut v, 1.0);
        assert!((v[0] - 0.6).abs() < 1e-15 && (v[1] - 0.8).abs() < 1e-15);
        let mut v = [0.3, 0.4];
        prox_l2ball(&mut v, 1.0);
        assert_eq!(v, [0.3, 0.4]);
    }

    #[test]
    fn adjoint_identity() {
        let inst = chain_example();
        for prog in [build_full_lp(&inst), build_compact(&inst, CompactStyle::General).unwrap()] {
            let mut rng = crate::rng::SplitMix64::new(3);
            let x: Vec<f64> = (0..prog.dim()).map(|_| rng.uniform(-1.0, 1.0)).collect();
            let p: Vec<f64> = (0..prog.row_count()).map(|_| rng.uniform(-1.0, 1.0)).collect();
            let kx = apply_forward(&prog, &x).unwrap();
            let ktp = apply_adjoint(&prog, &p).unwrap();
            let lhs: f64 = kx.iter().zip(&p).map(|(a, b)| a * b).sum();
            let rhs: f64 = x.iter().zip(&ktp).map(|(a, b)| a * b).sum();
            assert!((lhs - rhs).abs() < 1e-12);
        }
    }

    #[test]
    fn preconditioner_full_lp() {
        let inst = chain_example();
        let prog = build_full_lp(&inst);
        let pre = compute_preconditioners(&prog, 1.0, 1e-12);
        // each node variable appears in one marginalization row; each table entry in two
        assert!(pre.tau[..6].iter().all(|&t| t == 1.0));
        assert!(pre.tau[6..].iter().all(|&t| t == 0.5));
        // row: one node variable + a row sum over L entries
        assert!(pre.sigma.iter().all(|&s| (s - 0.25).abs() < 1e-15));
        assert_eq!(pre.floored, 0);
    }

    #[test]
    fn solves_chain_example() {
        let inst = chain_example();
        for prog in [build_full_lp(&inst), build_compact(&inst, CompactStyle::General).unwrap()] {
            let sol = solve(&prog, &inst, &SolverConfig { max_iters: 20000, ..Default::default() }).unwrap();
            assert_eq!(sol.status, Status::Converged);
            assert!((sol.dual_bound - 1.0).abs() < 1e-4, "{}", sol.dual_bound);
            assert_eq!(sol.energy, 1.0);
        }
    }

    #[test]
    fn trace_csv_header() {
        let inst = chain_example();
        let prog = build_full_lp(&inst);
        let sol = solve(&prog, &inst, &SolverConfig { max_iters: 30, ..Default::default() }).unwrap();
        let mut out = Vec::new();
        sol.trace.write_csv(&mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert!(text.starts_with("iter,primal_energy,dual_bound,gap\n"));
        assert_eq!(text.lines().count(), 1 + sol.trace.points.len());
    }

    #[cfg(feature = "parallel")]
    #[test]
    fn parallel_matches_sequential() {
        let inst = MrfInstance::gen_random_instance(6, 5, 5, 11).unwrap();
        let prog = build_compact(&inst, CompactStyle::General).unwrap();
        let cfg = SolverConfig { max_iters: 200, ..Default::default() };
        let a = solve(&prog, &inst, &cfg).unwrap();
        let b = solve(&prog, &inst, &SolverConfig { parallel: true, ..cfg }).unwrap();
        assert_eq!(a.primal, b.primal);
        assert_eq!(a.dual, b.dual);
    }

    #[test]
    fn lagrangian_bound_matches_primal_step() {
        let inst = MrfInstance::gen_random_instance(4, 3, 4, 2).unwrap();
        for prog in [build_full_lp(&inst), build_compact(&inst, CompactStyle::General).unwrap()] {
            let cfg = SolverConfig { max_iters: 37, check_every: 37, ..Default::default() };
            let sol = solve(&prog, &inst, &cfg).unwrap();
            let op = Operator::new(&prog);
            let b = op.lagrangian_bound(&prog, &sol.dual);
            assert!((b - sol.dual_bound).abs() < 1e-9 * (1.0 + b.abs()), "{b} vs {}", sol.dual_bound);
        }
    }

    #[test]
    fn restarts_reach_the_same_optimum() {
        let inst = MrfInstance::gen_random_instance(5, 4, 5, 8).unwrap();
        let prog = build_full_lp(&inst);
        let cfg = SolverConfig { max_iters: 100_000, check_every: 50, ..Default::default() };
        let plain = solve(&prog, &inst, &cfg).unwrap();
        let fast = solve(&prog, &inst, &SolverConfig { restarts: true, ..cfg }).unwrap();
        assert_eq!((plain.status, fast.status), (Status::Converged, Status::Converged));
        assert!(fast.iterations <= plain.iterations, "{} > {}", fast.iterations, plain.iterations);
        assert!((plain.best_dual_bound - fast.best_dual_bound).abs() < 1e-4);
        assert!(fast.best_dual_bound <= fast.primal_value + 1e-6 * (1.0 + fast.primal_value.abs()));
    }
}
