//! Block-coordinate dual ascent (MPLP) with linear-time envelope updates.

use crate::model::{LabelAssignment, MrfInstance};
use crate::potentials::PiecewiseLinearPotential;
use crate::{Error, Result, INFEASIBLE};

/// `out[i] = min{values[j] : i+lo <= j <= i+hi, 0 <= j < n}`, `+inf` for empty windows.
pub fn min_filter(values: &[f64], lo: i64, hi: i64) -> Result<Vec<f64>> {
    if lo > hi {
        return Err(Error::InvalidInstance(format!("empty window [{lo}, {hi}]")));
    }
    let mut out = vec![INFEASIBLE; values.len()];
    min_filter_into(values, lo, hi, &mut out, &mut Vec::new());
    Ok(out)
}

/// [`min_filter`] into `out` (same length as `values`), with `dq` as the
/// monotone deque; requires `lo <= hi`.
fn min_filter_into(values: &[f64], lo: i64, hi: i64, out: &mut [f64], dq: &mut Vec<usize>) {
    let n = values.len() as i64;
    dq.clear();
    let mut head = 0;
    let mut next = lo.max(0);
    for i in 0..n {
        let (a, b) = (i + lo, (i + hi).min(n - 1));
        while next <= b {
            let v = values[next as usize];
            while dq.len() > head && values[dq[dq.len() - 1]] >= v {
                dq.pop();
            }
            dq.push(next as usize);
            next += 1;
        }
        while dq.len() > head && (dq[head] as i64) < a {
            head += 1;
        }
        out[i as usize] = if dq.len() > head && a <= b { values[dq[head]] } else { INFEASIBLE };
    }
}

/// Reusable buffers for [`lower_envelope_into`].
#[derive(Debug, Default)]
pub struct EnvelopeScratch {
    shifted: Vec<f64>,
    filtered: Vec<f64>,
    deque: Vec<usize>,
}

/// `out[i] = min_j theta[j] + w * p(j - i)`, one min-filter per piece.
pub fn lower_envelope(theta: &[f64], p: &PiecewiseLinearPotential, w: f64) -> Vec<f64> {
    let mut out = Vec::new();
    lower_envelope_into(theta, p, w, &mut out, &mut EnvelopeScratch::default());
    out
}

/// [`lower_envelope`] writing into `out`.
pub fn lower_envelope_into(
    theta: &[f64],
    p: &PiecewiseLinearPotential,
    w: f64,
    out: &mut Vec<f64>,
    scratch: &mut EnvelopeScratch,
) {
    let n = theta.len();
    out.clear();
    out.resize(n, INFEASIBLE);
    scratch.shifted.resize(n, 0.0);
    scratch.filtered.resize(n, 0.0);
    for piece in p.pieces() {
        let wa = w * piece.alpha;
        for (j, (s, &t)) in scratch.shifted.iter_mut().zip(theta).enumerate() {
            *s = t + wa * j as f64;
        }
        min_filter_into(&scratch.shifted, piece.h_lo, piece.h_hi, &mut scratch.filtered, &mut scratch.deque);
        for (i, (o, &v)) in out.iter_mut().zip(&scratch.filtered).enumerate() {
            let cand = v - wa * i as f64 + w * piece.beta;
            if cand < *o {
                *o = cand;
            }
        }
    }
}

/// Messages `delta_{t->s}` and `delta_{s->t}` per edge and the node beliefs
/// `theta_s + sum of incoming messages`.
#[derive(Debug, Clone, PartialEq)]
pub struct MessageState {
    pub to_source: Vec<Vec<f64>>,
    pub to_target: Vec<Vec<f64>>,
    pub beliefs: Vec<Vec<f64>>,
}

#[derive(Debug, Clone)]
pub struct MplpResult {
    pub dual_value: f64,
    pub labeling: LabelAssignment,
    pub state: MessageState,
    /// Dual value before the first sweep and after every sweep.
    pub history: Vec<f64>,
    pub sweeps: usize,
}

struct EdgePrior {
    forward: PiecewiseLinearPotential,
    backward: PiecewiseLinearPotential,
    w: f64,
}

fn priors(inst: &MrfInstance) -> Result<Vec<EdgePrior>> {
    let l = inst.label_count();
    (0..inst.edge_count())
        .map(|e| {
            let forward = inst.edge_potential(e).to_pwl(l)?.clamped(l)?;
            let backward = forward.mirrored();
            Ok(EdgePrior { forward, backward, w: inst.edge_weight(e) })
        })
        .collect()
}

fn dual_value(state: &MessageState, pri: &[EdgePrior], scratch: &mut EnvelopeScratch) -> f64 {
    let nodes: f64 = state.beliefs.iter().map(|b| b.iter().copied().fold(INFEASIBLE, f64::min)).sum();
    let (mut neg_t, mut env) = (Vec::new(), Vec::new());
    let mut edges = 0.0;
    for (e, p) in pri.iter().enumerate() {
        neg_t.clear();
        neg_t.extend(state.to_target[e].iter().map(|v| -v));
        lower_envelope_into(&neg_t, &p.forward, p.w, &mut env, scratch);
        edges += state.to_source[e].iter().zip(&env).map(|(d, v)| v - d).fold(INFEASIBLE, f64::min);
    }
    nodes + edges
}

fn argmin(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate() {
        if x < v[best] {
            best = i;
        }
    }
    best
}

/// Runs up to `sweeps` passes over the edges (construction order, both
/// directions per visit), stopping early once a sweep improves the dual by
/// less than `1e-9`.
pub fn mplp_solve(inst: &MrfInstance, sweeps: usize) -> Result<MplpResult> {
    let l = inst.label_count();
    let pri = priors(inst)?;
    let m = inst.edge_count();
    let mut state = MessageState {
        to_source: vec![vec![0.0; l]; m],
        to_target: vec![vec![0.0; l]; m],
        beliefs: (0..inst.node_count()).map(|s| inst.unary(s).to_vec()).collect(),
    };
    let mut scratch = EnvelopeScratch::default();
    let (mut env_t, mut env_s) = (Vec::new(), Vec::new());
    let mut history = vec![dual_value(&state, &pri, &mut scratch)];
    let mut done = 0;
    let mut bar_s = vec![0.0; l];
    let mut bar_t = vec![0.0; l];
    for _ in 0..sweeps {
        for (e, &(s, t)) in inst.topology().edges().iter().enumerate() {
            for i in 0..l {
                bar_s[i] = state.beliefs[s][i] - state.to_source[e][i];
                bar_t[i] = state.beliefs[t][i] - state.to_target[e][i];
            }
            lower_envelope_into(&bar_t, &pri[e].forward, pri[e].w, &mut env_t, &mut scratch);
            lower_envelope_into(&bar_s, &pri[e].backward, pri[e].w, &mut env_s, &mut scratch);
            for i in 0..l {
                let ts = -0.5 * bar_s[i] + 0.5 * env_t[i];
                let st = -0.5 * bar_t[i] + 0.5 * env_s[i];
                state.to_source[e][i] = ts;
                state.to_target[e][i] = st;
                state.beliefs[s][i] = bar_s[i] + ts;
                state.beliefs[t][i] = bar_t[i] + st;
            }
        }
        done += 1;
        let d = dual_value(&state, &pri, &mut scratch);
        let prev = *history.last().expect("history starts nonempty");
        history.push(d);
        if d - prev < 1e-9 {
            break;
        }
    }
    let labeling = LabelAssignment { labels: state.beliefs.iter().map(|b| argmin(b)).collect() };
    Ok(MplpResult { dual_value: *history.last().expect("nonempty"), labeling, state, history, sweeps: done })
}
