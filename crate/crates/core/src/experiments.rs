//! Drivers shared by the command-line tool and the acceptance suite.

use std::io::Write;

use crate::model::{GraphTopology, MrfInstance};
use crate::mplp::mplp_solve;
use crate::pdsolver::{solve, SolverConfig, Status};
use crate::potentials::ConvexHingePotential;
use crate::relaxations::build_full_lp;
use crate::rng::SplitMix64;
use crate::Result;

#[derive(Debug, Clone)]
pub struct EarlyStopConfig {
    pub width: usize,
    pub height: usize,
    pub labels: usize,
    pub sweeps: usize,
    pub solver: SolverConfig,
}

impl Default for EarlyStopConfig {
    fn default() -> Self {
        Self {
            width: 20,
            height: 20,
            labels: 20,
            sweeps: 20_000,
            solver: SolverConfig { max_iters: 100_000, tol: 1e-6, check_every: 100, restarts: true, ..Default::default() },
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EarlyStopRow {
    pub seed: u64,
    pub lp_value: f64,
    pub mplp_dual: f64,
    /// `lp_value - mplp_dual`.
    pub gap: f64,
    pub lp_converged: bool,
    pub lp_iterations: usize,
    pub mplp_monotone: bool,
    pub sweeps: usize,
}

/// Solves one random grid instance with MPLP and with the local-polytope LP
/// whose dual MPLP ascends.
pub fn early_stop_row(seed: u64, cfg: &EarlyStopConfig) -> Result<EarlyStopRow> {
    let inst = MrfInstance::gen_random_instance(cfg.width, cfg.height, cfg.labels, seed)?;
    early_stop_instance(&inst, seed, cfg)
}

pub fn early_stop_instance(inst: &MrfInstance, seed: u64, cfg: &EarlyStopConfig) -> Result<EarlyStopRow> {
    let m = mplp_solve(inst, cfg.sweeps)?;
    let prog = build_full_lp(inst);
    let sol = solve(&prog, inst, &cfg.solver)?;
    let lp_value = sol.best_dual_bound;
    Ok(EarlyStopRow {
        seed,
        lp_value,
        mplp_dual: m.dual_value,
        gap: lp_value - m.dual_value,
        lp_converged: sol.status == Status::Converged,
        lp_iterations: sol.iterations,
        mplp_monotone: m.history.windows(2).all(|w| w[1] >= w[0] - 1e-12),
        sweeps: m.sweeps,
    })
}

/// Bucket upper edges of the gap histogram; the last bucket is open.
pub const GAP_BUCKETS: [f64; 5] = [1e-6, 1e-4, 1e-3, 1e-2, 1e-1];

pub fn gap_histogram(rows: &[EarlyStopRow]) -> Vec<(String, usize)> {
    let mut labels: Vec<String> = Vec::new();
    let mut lo = f64::NEG_INFINITY;
    for &hi in &GAP_BUCKETS {
        labels.push(if lo.is_finite() { format!("({lo:e},{hi:e}]") } else { format!("<={hi:e}") });
        lo = hi;
    }
    labels.push(format!(">{lo:e}"));
    let mut counts = vec![0; labels.len()];
    for r in rows {
        let b = GAP_BUCKETS.iter().position(|&hi| r.gap <= hi).unwrap_or(GAP_BUCKETS.len());
        counts[b] += 1;
    }
    labels.into_iter().zip(counts).collect()
}

pub fn fraction_above(rows: &[EarlyStopRow], threshold: f64) -> f64 {
    rows.iter().filter(|r| r.gap > threshold).count() as f64 / rows.len().max(1) as f64
}

pub fn write_histogram_csv<W: Write>(rows: &[EarlyStopRow], mut w: W) -> std::io::Result<()> {
    writeln!(w, "gap_bucket,count")?;
    for (b, c) in gap_histogram(rows) {
        writeln!(w, "{b},{c}")?;
    }
    Ok(())
}

pub fn write_gaps_csv<W: Write>(rows: &[EarlyStopRow], mut w: W) -> std::io::Result<()> {
    writeln!(w, "seed,gap")?;
    for r in rows {
        writeln!(w, "{},{:e}", r.seed, r.gap)?;
    }
    Ok(())
}

/// Piecewise-smooth test signal in `[0, 1]` with two jumps and mild noise.
pub fn test_signal(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = SplitMix64::new(seed);
    (0..n)
        .map(|s| {
            let t = s as f64 / n.max(1) as f64;
            let base = if t < 0.3 {
                0.2
            } else if t < 0.65 {
                0.85 - 0.5 * (t - 0.3)
            } else {
                0.3 + 0.2 * (6.0 * t).sin()
            };
            (base + 0.03 * rng.normal()).clamp(0.0, 1.0)
        })
        .collect()
}

/// Chain with quadratic unaries `(i/(L-1) - f_s)^2` and the hard prior
/// `|h| <= round(eta L)`.
pub fn lipschitz_chain(signal: &[f64], labels: usize, eta: f64) -> Result<MrfInstance> {
    let bound = (eta * labels as f64).round() as i64;
    let topo = GraphTopology::chain(signal.len())?;
    let step = 1.0 / (labels.max(2) - 1) as f64;
    let unary = signal.iter().flat_map(|&f| (0..labels).map(move |i| (i as f64 * step - f).powi(2))).collect();
    MrfInstance::homogeneous(topo, labels, unary, ConvexHingePotential::lipschitz(bound)?.into())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn histogram_buckets() {
        let row = |gap| EarlyStopRow {
            seed: 0,
            lp_value: 0.0,
            mplp_dual: 0.0,
            gap,
            lp_converged: true,
            lp_iterations: 1,
            mplp_monotone: true,
            sweeps: 1,
        };
        let rows = [row(-1e-9), row(5e-4), row(0.02), row(3.0)];
        let h = gap_histogram(&rows);
        assert_eq!(h.len(), 6);
        assert_eq!(h.iter().map(|b| b.1).collect::<Vec<_>>(), vec![1, 0, 1, 0, 1, 1]);
        assert_eq!(fraction_above(&rows, 0.01), 0.5);
        let mut out = Vec::new();
        write_gaps_csv(&rows, &mut out).unwrap();
        assert!(String::from_utf8(out).unwrap().starts_with("seed,gap\n0,"));
    }

    #[test]
    fn tree_instances_have_no_gap() {
        let inst = MrfInstance::gen_random_instance(6, 1, 5, 4).unwrap();
        let r = early_stop_instance(&inst, 4, &EarlyStopConfig::default()).unwrap();
        assert!(r.lp_converged && r.mplp_monotone);
        assert!(r.gap.abs() < 1e-6, "{r:?}");
    }

    #[test]
    fn lipschitz_chain_shape() {
        let inst = lipschitz_chain(&test_signal(8, 1), 32, 1.0 / 16.0).unwrap();
        assert_eq!(inst.edge_count(), 7);
        assert_eq!(inst.pairwise(0, 2), 0.0);
        assert_eq!(inst.pairwise(0, 3), crate::INFEASIBLE);
    }
}
