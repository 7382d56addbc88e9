//! Grayscale denoising instances with an outlier-robust data term and a
//! minimum of `alpha_k |du| + beta_k` regularizers.

use crate::model::{GraphTopology, LabelAssignment, MrfInstance};
use crate::pgm::GrayImage;
use crate::potentials::PiecewiseLinearPotential;
use crate::rng::SplitMix64;
use crate::{Error, Result};

pub const NOISE_SIGMA: f64 = 10.0;
pub const OUTLIER_RATE: f64 = 0.05;
pub const DEFAULT_PAIRS: [(f64, f64); 3] = [(24.0, 0.0), (8.0, 1.0), (3.2, 2.0)];

/// Unit in which intensity differences enter the regularizer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SlopeUnit {
    /// `|du| / 255`, so intensities span `[0, 1]`.
    #[default]
    Normalized,
    /// Raw intensity units `|du|` in `[0, 255]`.
    Intensity,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DenoiseParams {
    pub labels: usize,
    pub lambda: f64,
    pub pairs: Vec<(f64, f64)>,
    pub slopes: SlopeUnit,
}

impl Default for DenoiseParams {
    fn default() -> Self {
        Self { labels: 64, lambda: 1.0, pairs: DEFAULT_PAIRS.to_vec(), slopes: SlopeUnit::Normalized }
    }
}

pub fn label_intensity(i: usize, labels: usize) -> f64 {
    if labels == 1 {
        return 0.0;
    }
    i as f64 * 255.0 / (labels - 1) as f64
}

fn normal_pdf(x: f64, sigma: f64) -> f64 {
    (-(x * x) / (2.0 * sigma * sigma)).exp() / (sigma * (2.0 * std::f64::consts::PI).sqrt())
}

/// `-lambda log(0.05 + 0.95 phi(u - g; 0, 10))`.
pub fn data_cost(u: f64, g: f64, lambda: f64) -> f64 {
    -lambda * (OUTLIER_RATE + (1.0 - OUTLIER_RATE) * normal_pdf(u - g, NOISE_SIGMA)).ln()
}

/// The regularizer per label step.
pub fn regularizer(params: &DenoiseParams) -> Result<PiecewiseLinearPotential> {
    if params.labels < 2 {
        return Err(Error::InvalidInstance("denoising needs at least two labels".into()));
    }
    let step = 255.0 / (params.labels - 1) as f64;
    let scale = match params.slopes {
        SlopeUnit::Normalized => step / 255.0,
        SlopeUnit::Intensity => step,
    };
    let parts: Vec<_> =
        params.pairs.iter().map(|&(a, b)| PiecewiseLinearPotential::abs_affine(a * scale, b, params.labels)).collect();
    PiecewiseLinearPotential::min_of(&parts)
}

fn to_255(p: u8, maxval: u16) -> f64 {
    p as f64 * 255.0 / maxval as f64
}

/// Grid MRF for denoising `img` (4-neighborhood, unit weights).
pub fn denoise_instance(img: &GrayImage, params: &DenoiseParams) -> Result<MrfInstance> {
    let l = params.labels;
    let topo = GraphTopology::make_grid(img.width, img.height)?;
    let levels: Vec<f64> = (0..l).map(|i| label_intensity(i, l)).collect();
    let unary = img
        .pixels
        .iter()
        .flat_map(|&p| {
            let g = to_255(p, img.maxval);
            levels.iter().map(move |&u| data_cost(u, g, params.lambda))
        })
        .collect();
    MrfInstance::homogeneous(topo, l, unary, regularizer(params)?.into())
}

/// Label nearest to each pixel intensity.
pub fn nearest_labels(img: &GrayImage, labels: usize) -> LabelAssignment {
    let step = 255.0 / (labels.max(2) - 1) as f64;
    LabelAssignment {
        labels: img
            .pixels
            .iter()
            .map(|&p| ((to_255(p, img.maxval) / step).round() as usize).min(labels - 1))
            .collect(),
    }
}

pub fn labels_to_image(a: &LabelAssignment, width: usize, height: usize, labels: usize, maxval: u16) -> Result<GrayImage> {
    let pixels = a
        .labels
        .iter()
        .map(|&i| (label_intensity(i, labels) * maxval as f64 / 255.0).round().clamp(0.0, maxval as f64) as u8)
        .collect();
    let mut img = GrayImage::new(width, height, pixels)?;
    img.maxval = maxval;
    Ok(img)
}

/// Replaces 5% of the pixels by uniform outliers and adds `N(0, 10)` noise
/// to the rest, rounding and clamping to the 8-bit range.
pub fn corrupt(img: &GrayImage, seed: u64) -> GrayImage {
    let mut rng = SplitMix64::new(seed);
    let maxval = img.maxval as f64;
    let pixels = img
        .pixels
        .iter()
        .map(|&p| {
            let v = if rng.next_f64() < OUTLIER_RATE {
                rng.uniform(0.0, maxval + 1.0).floor()
            } else {
                p as f64 + NOISE_SIGMA * maxval / 255.0 * rng.normal()
            };
            v.round().clamp(0.0, maxval) as u8
        })
        .collect();
    GrayImage { pixels, ..img.clone() }
}

/// Piecewise-constant test picture: background, a bright rectangle, a
/// mid-gray disk and a dark bar.
pub fn synthetic_image(width: usize, height: usize) -> GrayImage {
    let (w, h) = (width as f64, height as f64);
    let pixels = (0..height)
        .flat_map(|y| {
            (0..width).map(move |x| {
                let (fx, fy) = ((x as f64 + 0.5) / w, (y as f64 + 0.5) / h);
                let disk = (fx - 0.62).powi(2) + (fy - 0.6).powi(2) < 0.22f64.powi(2);
                if (0.12..0.45).contains(&fx) && (0.15..0.5).contains(&fy) {
                    210
                } else if disk {
                    140
                } else if (0.1..0.9).contains(&fx) && (0.82..0.9).contains(&fy) {
                    25
                } else {
                    80
                }
            })
        })
        .collect();
    GrayImage { width, height, maxval: 255, pixels }
}

pub fn psnr(a: &GrayImage, b: &GrayImage) -> f64 {
    let mse = a.pixels.iter().zip(&b.pixels).map(|(&x, &y)| (x as f64 - y as f64).powi(2)).sum::<f64>()
        / a.pixels.len().max(1) as f64;
    10.0 * (a.maxval as f64 * a.maxval as f64 / mse).log10()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn data_term_shape() {
        let at = data_cost(100.0, 100.0, 1.0);
        let far = data_cost(0.0, 255.0, 1.0);
        assert!(at < far);
        assert!((far + (0.05f64).ln()).abs() < 1e-9);
        assert!((data_cost(100.0, 100.0, 2.0) - 2.0 * at).abs() < 1e-12);
    }

    #[test]
    fn regularizer_is_symmetric_min() {
        let p = regularizer(&DenoiseParams::default()).unwrap();
        assert_eq!(p.len(), 6);
        let terms = p.l1_terms(64).unwrap();
        assert_eq!(terms.len(), 3);
        // full jump across the range: min(24, 9, 5.2)
        assert!((p.evaluate(63) - 5.2).abs() < 1e-12);
        assert_eq!(p.evaluate(0), 0.0);
    }

    #[test]
    fn intensity_slopes() {
        let p = regularizer(&DenoiseParams { slopes: SlopeUnit::Intensity, ..Default::default() }).unwrap();
        assert!((p.evaluate(63) - (3.2 * 255.0 + 2.0)).abs() < 1e-9);
    }

    #[test]
    fn instance_dimensions() {
        let img = synthetic_image(5, 4);
        let inst = denoise_instance(&img, &DenoiseParams { labels: 8, ..Default::default() }).unwrap();
        assert_eq!(inst.node_count(), 20);
        assert_eq!(inst.edge_count(), 31);
        assert_eq!(inst.unary(0).len(), 8);
    }

    #[test]
    fn corruption_is_deterministic() {
        let img = synthetic_image(16, 16);
        assert_eq!(corrupt(&img, 3), corrupt(&img, 3));
        assert_ne!(corrupt(&img, 3), img);
    }

    #[test]
    fn label_roundtrip() {
        let img = GrayImage::new(3, 1, vec![0, 128, 255]).unwrap();
        let a = nearest_labels(&img, 64);
        assert_eq!(a.labels, vec![0, 32, 63]);
        let back = labels_to_image(&a, 3, 1, 64, 255).unwrap();
        assert_eq!(back.pixels, vec![0, 130, 255]);
    }
}
