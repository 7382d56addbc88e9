//! `cmrf`: instance generation, solving, denoising and the experiment drivers.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use compact_mrf::denoise::{self, DenoiseParams, SlopeUnit};
use compact_mrf::experiments::{self, EarlyStopConfig};
use compact_mrf::graphcut::solve_graphcut;
use compact_mrf::mplp::{lower_envelope, mplp_solve};
use compact_mrf::oracle::{self, brute_force_map, naive_envelope, HarnessConfig};
use compact_mrf::pdsolver::{solve, Solution, SolverConfig};
use compact_mrf::pgm::GrayImage;
use compact_mrf::relaxations::{
    build_compact, build_compact_isotropic, build_convex_lp, build_full_lp, CompactStyle, IsoVariant,
    StructuredProgram,
};
use compact_mrf::rng::SplitMix64;
use compact_mrf::{LabelAssignment, MrfInstance};

#[derive(Parser)]
#[command(name = "cmrf", version, about = "Compact LP relaxations for MAP inference in pairwise MRFs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a random grid instance with truncated-linear priors.
    Gen {
        #[arg(long, default_value_t = 20)]
        width: usize,
        #[arg(long, default_value_t = 20)]
        height: usize,
        #[arg(long, default_value_t = 20)]
        labels: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Solve an instance file with one backend.
    Solve {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, value_enum, default_value_t = Method::Compact)]
        method: Method,
        /// Solver iterations (MPLP: sweeps).
        #[arg(long, default_value_t = 5000)]
        iters: usize,
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
        #[arg(long, default_value_t = 10)]
        check_every: usize,
        /// Energy trace CSV (primal-dual methods).
        #[arg(long)]
        trace: Option<PathBuf>,
        /// Labeling JSON.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = 1)]
        threads: usize,
        /// Adaptive restarts of the primal-dual iteration.
        #[arg(long)]
        restarts: bool,
    },
    /// MPLP early-stopping study on random grids.
    Earlystop {
        #[arg(long, default_value_t = 50)]
        instances: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 20)]
        width: usize,
        #[arg(long, default_value_t = 20)]
        height: usize,
        #[arg(long, default_value_t = 20)]
        labels: usize,
        /// Histogram CSV (`gap_bucket,count`).
        #[arg(long)]
        out: PathBuf,
        /// Per-instance CSV (`seed,gap`).
        #[arg(long)]
        gaps: Option<PathBuf>,
        #[arg(long, default_value_t = 1)]
        threads: usize,
    },
    /// Denoise an 8-bit PGM image.
    Denoise {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, default_value_t = 64)]
        labels: usize,
        #[arg(long, default_value_t = 1.0)]
        lambda: f64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        trace: Option<PathBuf>,
        /// Isotropic relaxation (joint branch selection per pixel).
        #[arg(long)]
        iso: bool,
        /// With --iso: couple per-edge terms instead of sharing the branch.
        #[arg(long, requires = "iso")]
        iso_terms: bool,
        /// Solve the full LP instead of the compact one.
        #[arg(long, conflicts_with = "iso")]
        full: bool,
        /// Read the regularizer slopes per raw intensity unit instead of per
        /// normalized intensity.
        #[arg(long)]
        intensity_slopes: bool,
        #[arg(long, default_value_t = 3000)]
        iters: usize,
        #[arg(long, default_value_t = 100)]
        check_every: usize,
        /// Ground-truth image for a PSNR report.
        #[arg(long)]
        truth: Option<PathBuf>,
        #[arg(long, default_value_t = 1)]
        threads: usize,
    },
    /// Apply the 5% outlier plus Gaussian noise model to a PGM image.
    Corrupt {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write the built-in piecewise-constant test picture.
    Synth {
        #[arg(long, default_value_t = 64)]
        width: usize,
        #[arg(long, default_value_t = 64)]
        height: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Time the linear-time envelope against the quadratic scan.
    BenchEnvelope {
        /// One or more label counts, comma separated.
        #[arg(long, value_delimiter = ',', default_values_t = vec![64, 128, 256, 512])]
        labels: Vec<usize>,
        #[arg(long, default_value_t = 3)]
        pieces: usize,
        #[arg(long, default_value_t = 200)]
        reps: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Compare full and compact LP optima on random small grids.
    Harness {
        #[arg(long, default_value_t = 30)]
        seeds: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Method {
    LpFull,
    Compact,
    CompactIso,
    CompactIsoB,
    ConvexLp,
    Graphcut,
    Mplp,
    Brute,
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Gen { width, height, labels, seed, out } => {
            let inst = MrfInstance::gen_random_instance(width, height, labels, seed)?;
            inst.write_instance(&out).with_context(|| format!("writing {}", out.display()))?;
            println!("{} nodes, {} edges, {labels} labels -> {}", inst.node_count(), inst.edge_count(), out.display());
        }
        Command::Solve { input, method, iters, tol, check_every, trace, out, threads, restarts } => {
            let inst = MrfInstance::read_instance(&input).with_context(|| format!("reading {}", input.display()))?;
            let cfg = SolverConfig { restarts, ..solver_config(iters, tol, check_every, threads)? };
            let labeling = run_solve(&inst, method, &cfg, trace.as_ref())?;
            if let Some(path) = out {
                std::fs::write(&path, serde_json::to_string(&labeling)?)?;
            }
        }
        Command::Earlystop { instances, seed, width, height, labels, out, gaps, threads } => {
            let mut cfg = EarlyStopConfig { width, height, labels, ..Default::default() };
            cfg.solver.parallel = configure_threads(threads)?;
            let mut rows = Vec::new();
            for s in seed..seed + instances {
                let t = Instant::now();
                let r = experiments::early_stop_row(s, &cfg)?;
                println!(
                    "seed {s}: LP {:.6} ({} iterations), MPLP {:.6} after {} sweeps, gap {:.3e} [{:.1}s]",
                    r.lp_value,
                    r.lp_iterations,
                    r.mplp_dual,
                    r.sweeps,
                    r.gap,
                    t.elapsed().as_secs_f64()
                );
                rows.push(r);
            }
            experiments::write_histogram_csv(&rows, BufWriter::new(File::create(&out)?))?;
            if let Some(path) = gaps {
                experiments::write_gaps_csv(&rows, BufWriter::new(File::create(path)?))?;
            }
            println!(
                "gap > 0.001: {:.2}, gap > 0.01: {:.2}, MPLP monotone on all: {}",
                experiments::fraction_above(&rows, 1e-3),
                experiments::fraction_above(&rows, 1e-2),
                rows.iter().all(|r| r.mplp_monotone)
            );
        }
        Command::Denoise {
            input,
            labels,
            lambda,
            out,
            trace,
            iso,
            iso_terms,
            full,
            intensity_slopes,
            iters,
            check_every,
            truth,
            threads,
        } => {
            let img = GrayImage::read(&input).with_context(|| format!("reading {}", input.display()))?;
            let slopes = if intensity_slopes { SlopeUnit::Intensity } else { SlopeUnit::Normalized };
            let params = DenoiseParams { labels, lambda, slopes, ..Default::default() };
            let inst = denoise::denoise_instance(&img, &params)?;
            let prog = if full {
                build_full_lp(&inst)
            } else if iso {
                build_compact_isotropic(&inst, if iso_terms { IsoVariant::JointTerms } else { IsoVariant::JointBranch })?
            } else {
                build_compact(&inst, CompactStyle::L1Min)?
            };
            println!("{}", prog.count_sizes());
            let cfg = SolverConfig { tol: 0.0, ..solver_config(iters, 1e-6, check_every, threads)? };
            let sol = timed_solve(&prog, &inst, &cfg)?;
            report(&sol);
            let noisy = inst.energy_of_labeling(&denoise::nearest_labels(&img, labels))?;
            println!("noisy-input labeling energy: {noisy:.6}");
            if let Some(path) = trace {
                sol.trace.write_csv(BufWriter::new(File::create(path)?))?;
            }
            let result = denoise::labels_to_image(&sol.labeling, img.width, img.height, labels, img.maxval)?;
            result.write(&out)?;
            if let Some(path) = truth {
                let t = GrayImage::read(&path)?;
                if (t.width, t.height) != (img.width, img.height) {
                    bail!("ground truth is {}x{}, input is {}x{}", t.width, t.height, img.width, img.height);
                }
                println!("PSNR input {:.2} dB, output {:.2} dB", denoise::psnr(&img, &t), denoise::psnr(&result, &t));
            }
        }
        Command::Corrupt { input, seed, out } => {
            let img = GrayImage::read(&input).with_context(|| format!("reading {}", input.display()))?;
            denoise::corrupt(&img, seed).write(&out)?;
        }
        Command::Synth { width, height, out } => denoise::synthetic_image(width, height).write(&out)?,
        Command::BenchEnvelope { labels, pieces, reps, seed } => bench_envelope(&labels, pieces, reps, seed)?,
        Command::Harness { seeds, out } => {
            let report = oracle::equivalence_harness(&HarnessConfig { seeds, ..Default::default() })?;
            let mut w: Box<dyn Write> = match out {
                Some(p) => Box::new(BufWriter::new(File::create(p)?)),
                None => Box::new(std::io::stdout().lock()),
            };
            report.write_csv(&mut w)?;
            w.flush()?;
            eprintln!("max rel diff {:.3e}, all converged: {}", report.max_rel_diff(), report.all_converged());
        }
    }
    Ok(())
}

fn configure_threads(threads: usize) -> Result<bool> {
    if threads <= 1 {
        return Ok(false);
    }
    rayon::ThreadPoolBuilder::new().num_threads(threads).build_global()?;
    Ok(true)
}

fn solver_config(iters: usize, tol: f64, check_every: usize, threads: usize) -> Result<SolverConfig> {
    Ok(SolverConfig { max_iters: iters, tol, check_every, parallel: configure_threads(threads)?, ..Default::default() })
}

fn timed_solve(prog: &StructuredProgram, inst: &MrfInstance, cfg: &SolverConfig) -> Result<Solution> {
    let t = Instant::now();
    let sol = solve(prog, inst, cfg)?;
    println!("{} iterations ({:?}) in {:.2}s", sol.iterations, sol.status, t.elapsed().as_secs_f64());
    Ok(sol)
}

fn report(sol: &Solution) {
    println!("energy: {:.9}", sol.energy);
    println!("dual bound: {:.9}", sol.best_dual_bound);
    println!("relaxed gap: {:.3e}, infeasibility: {:.3e}", sol.relaxed_gap, sol.infeasibility);
}

fn run_solve(inst: &MrfInstance, method: Method, cfg: &SolverConfig, trace: Option<&PathBuf>) -> Result<LabelAssignment> {
    let prog = match method {
        Method::LpFull => Some(build_full_lp(inst)),
        Method::Compact => Some(build_compact(inst, CompactStyle::General)?),
        Method::CompactIso => Some(build_compact_isotropic(inst, IsoVariant::JointTerms)?),
        Method::CompactIsoB => Some(build_compact_isotropic(inst, IsoVariant::JointBranch)?),
        Method::ConvexLp => Some(build_convex_lp(inst)?),
        _ => None,
    };
    if let Some(prog) = prog {
        println!("{}", prog.count_sizes());
        let sol = timed_solve(&prog, inst, cfg)?;
        report(&sol);
        if let Some(path) = trace {
            sol.trace.write_csv(BufWriter::new(File::create(path)?))?;
        }
        return Ok(sol.labeling);
    }
    let labeling = match method {
        Method::Graphcut => {
            let cut = solve_graphcut(inst)?;
            println!("max flow: {:.9} (+ constant {:.9})", cut.flow, cut.offset);
            cut.labeling
        }
        Method::Mplp => {
            let r = mplp_solve(inst, cfg.max_iters)?;
            println!("dual bound: {:.9} after {} sweeps", r.dual_value, r.sweeps);
            r.labeling
        }
        Method::Brute => brute_force_map(inst)?.0,
        _ => unreachable!("relaxation methods return above"),
    };
    println!("energy: {:.9}", inst.energy_of_labeling(&labeling)?);
    Ok(labeling)
}

fn bench_envelope(labels: &[usize], pieces: usize, reps: usize, seed: u64) -> Result<()> {
    let mut rng = SplitMix64::new(seed);
    println!("labels,pieces,envelope_us,naive_us,equal");
    let mut prev: Option<(f64, f64)> = None;
    for &l in labels {
        if l < 2 {
            bail!("need at least two labels, got {l}");
        }
        let inputs: Vec<_> = (0..reps.max(1))
            .map(|_| {
                let p = oracle::random_dyadic_pwl(&mut rng, l, pieces);
                let theta: Vec<f64> = (0..l).map(|_| oracle::dyadic(&mut rng, -4.0, 4.0)).collect();
                (p, theta)
            })
            .collect();
        let t = Instant::now();
        let fast: Vec<_> = inputs.iter().map(|(p, th)| lower_envelope(th, p, 1.0)).collect();
        let fast_us = t.elapsed().as_secs_f64() * 1e6 / inputs.len() as f64;
        let t = Instant::now();
        let slow: Vec<_> = inputs.iter().map(|(p, th)| naive_envelope(th, p, 1.0)).collect();
        let naive_us = t.elapsed().as_secs_f64() * 1e6 / inputs.len() as f64;
        let equal = fast == slow;
        println!("{l},{pieces},{fast_us:.3},{naive_us:.3},{equal}");
        if let Some((f, n)) = prev {
            eprintln!("growth vs previous L: envelope x{:.2}, naive x{:.2}", fast_us / f, naive_us / n);
        }
        prev = Some((fast_us, naive_us));
        if !equal {
            bail!("envelope mismatch at L = {l}");
        }
    }
    Ok(())
}
