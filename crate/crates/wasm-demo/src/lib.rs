//! Browser bindings: an envelope explorer, a small denoiser and a per-edge
//! size comparison. Every entry point returns a JSON string.

use serde::Serialize;
use wasm_bindgen::prelude::*;

use compact_mrf::denoise::{corrupt, denoise_instance, labels_to_image, nearest_labels, psnr, synthetic_image, DenoiseParams};
use compact_mrf::mplp::lower_envelope;
use compact_mrf::oracle::{dyadic, naive_envelope, random_dyadic_pwl, random_pwl};
use compact_mrf::pdsolver::{solve, SolverConfig};
use compact_mrf::relaxations::{build_compact, build_full_lp, CompactStyle};
use compact_mrf::rng::SplitMix64;
use compact_mrf::{GraphTopology, MrfInstance};

type Json = Result<String, String>;

fn to_json<T: Serialize>(v: &T) -> Json {
    serde_json::to_string(v).map_err(|e| e.to_string())
}

fn js(e: compact_mrf::Error) -> String {
    e.to_string()
}

fn export(r: Json) -> Result<String, JsError> {
    r.map_err(|e| JsError::new(&e))
}

#[derive(Serialize)]
struct EnvelopeView {
    theta: Vec<f64>,
    /// `p(h)` for `h = -(L-1) ..= L-1`; `null` where the prior forbids `h`.
    potential: Vec<Option<f64>>,
    pieces: usize,
    envelope: Vec<f64>,
    matches_naive: bool,
}

/// Random prior with `pieces` bounded pieces and random unaries on `labels`
/// labels, together with `min_j theta[j] + w p(j - i)`. Inputs are multiples
/// of 1/8 (`weight` is rounded), so the comparison with the quadratic scan is
/// exact.
#[wasm_bindgen]
pub fn envelope_demo(labels: usize, pieces: usize, weight: f64, seed: u64) -> Result<String, JsError> {
    export(envelope_json(labels, pieces, weight, seed))
}

pub fn envelope_json(labels: usize, pieces: usize, weight: f64, seed: u64) -> Json {
    if !(2..=512).contains(&labels) {
        return Err(String::from("labels must be in 2..=512"));
    }
    let mut rng = SplitMix64::new(seed);
    let p = random_dyadic_pwl(&mut rng, labels, pieces.clamp(1, 8));
    let theta: Vec<f64> = (0..labels).map(|_| dyadic(&mut rng, 0.0, 4.0)).collect();
    let weight = (weight * 8.0).round() / 8.0;
    let m = labels as i64 - 1;
    let envelope = lower_envelope(&theta, &p, weight);
    let view = EnvelopeView {
        potential: (-m..=m).map(|h| Some(p.evaluate(h)).filter(|v| v.is_finite())).collect(),
        pieces: p.pieces().len(),
        matches_naive: envelope == naive_envelope(&theta, &p, weight),
        envelope,
        theta,
    };
    to_json(&view)
}

#[derive(Serialize)]
struct DenoiseView {
    width: usize,
    height: usize,
    clean: Vec<u8>,
    noisy: Vec<u8>,
    denoised: Vec<u8>,
    energy: f64,
    noisy_energy: f64,
    dual_bound: f64,
    iterations: usize,
    psnr_noisy: f64,
    psnr_denoised: f64,
    trace: Vec<(usize, f64, f64)>,
}

/// Corrupts the built-in test picture and denoises it with the compact
/// relaxation.
#[wasm_bindgen]
pub fn denoise_demo(size: usize, labels: usize, lambda: f64, iters: usize, seed: u64) -> Result<String, JsError> {
    export(denoise_json(size, labels, lambda, iters, seed))
}

pub fn denoise_json(size: usize, labels: usize, lambda: f64, iters: usize, seed: u64) -> Json {
    if !(4..=48).contains(&size) || !(2..=64).contains(&labels) {
        return Err(String::from("size must be in 4..=48 and labels in 2..=64"));
    }
    let clean = synthetic_image(size, size);
    let noisy = corrupt(&clean, seed);
    let params = DenoiseParams { labels, lambda, ..Default::default() };
    let inst = denoise_instance(&noisy, &params).map_err(js)?;
    let prog = build_compact(&inst, CompactStyle::L1Min).map_err(js)?;
    let cfg = SolverConfig { max_iters: iters.clamp(1, 5000), tol: 1e-6, check_every: 25, ..Default::default() };
    let sol = solve(&prog, &inst, &cfg).map_err(js)?;
    let out = labels_to_image(&sol.labeling, size, size, labels, noisy.maxval).map_err(js)?;
    let view = DenoiseView {
        width: size,
        height: size,
        noisy_energy: inst.energy_of_labeling(&nearest_labels(&noisy, labels)).map_err(js)?,
        energy: sol.energy,
        dual_bound: sol.best_dual_bound,
        iterations: sol.iterations,
        psnr_noisy: psnr(&noisy, &clean),
        psnr_denoised: psnr(&out, &clean),
        trace: sol.trace.points.iter().map(|t| (t.iter, t.best_energy, t.dual)).collect(),
        clean: clean.pixels,
        noisy: noisy.pixels,
        denoised: out.pixels,
    };
    to_json(&view)
}

#[derive(Serialize)]
struct SizeRow {
    labels: usize,
    full_primal: usize,
    full_rows: usize,
    compact_primal: usize,
    compact_rows: usize,
}

/// Per-edge unknowns and rows of the full and compact LPs on a two-node
/// model, for each label count in `labels`.
#[wasm_bindgen]
pub fn size_table(labels: Vec<usize>, pieces: usize, seed: u64) -> Result<String, JsError> {
    export(sizes_json(labels, pieces, seed))
}

pub fn sizes_json(labels: Vec<usize>, pieces: usize, seed: u64) -> Json {
    let mut rng = SplitMix64::new(seed);
    let mut rows = Vec::new();
    for l in labels {
        if !(2..=256).contains(&l) {
            return Err(String::from("label counts must be in 2..=256"));
        }
        let p = random_pwl(&mut rng, l, pieces.clamp(1, 8));
        let topo = GraphTopology::make_grid(2, 1).map_err(js)?;
        let inst = MrfInstance::homogeneous(topo, l, vec![0.0; 2 * l], p.into()).map_err(js)?;
        let full = build_full_lp(&inst).count_sizes();
        let compact = build_compact(&inst, CompactStyle::General).map_err(js)?.count_sizes();
        rows.push(SizeRow {
            labels: l,
            full_primal: full.max_edge_primal(),
            full_rows: full.max_edge_rows(),
            compact_primal: compact.max_edge_primal(),
            compact_rows: compact.max_edge_rows(),
        });
    }
    to_json(&rows)
}
