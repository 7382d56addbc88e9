//! Pairwise potentials expressed as functions of the label difference
//! `h = label(t) - label(s)`.
//!
//! Two representations are used throughout the crate:
//!
//! * [`PiecewiseLinearPotential`]: a pointwise minimum of bounded linear
//!   pieces `alpha * h + beta` restricted to an integer interval. Arbitrary
//!   (also non-convex, discontinuous) difference-based priors fit this form.
//! * [`ConvexHingePotential`]: `alpha * h + beta + sum_k [gamma_k (h + delta_k)]_+`
//!   with optional hard bounds on `h`, for convex priors.

use serde::{Deserialize, Serialize};

use crate::{Error, Result, INFEASIBLE};

const TOL: f64 = 1e-12;

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= TOL * (1.0 + a.abs().max(b.abs()))
}

/// `alpha * h + beta` for `h` in `[h_lo, h_hi]`, infeasible elsewhere.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundedLinearPiece {
    pub alpha: f64,
    pub beta: f64,
    pub h_lo: i64,
    pub h_hi: i64,
}

impl BoundedLinearPiece {
    pub fn new(alpha: f64, beta: f64, h_lo: i64, h_hi: i64) -> Result<Self> {
        if h_lo > h_hi {
            return Err(Error::InvalidPotential(format!(
                "piece domain [{h_lo}, {h_hi}] is empty"
            )));
        }
        if !alpha.is_finite() || !beta.is_finite() {
            return Err(Error::InvalidPotential("non-finite piece coefficients".into()));
        }
        Ok(Self { alpha, beta, h_lo, h_hi })
    }

    /// Piece covering every difference admissible for `labels` labels.
    pub fn full(alpha: f64, beta: f64, labels: usize) -> Self {
        let m = labels as i64 - 1;
        Self { alpha, beta, h_lo: -m, h_hi: m }
    }

    pub fn contains(&self, h: i64) -> bool {
        self.h_lo <= h && h <= self.h_hi
    }

    pub fn value(&self, h: i64) -> f64 {
        if self.contains(h) {
            self.alpha * h as f64 + self.beta
        } else {
            INFEASIBLE
        }
    }

    pub fn line(&self, h: i64) -> f64 {
        self.alpha * h as f64 + self.beta
    }

    pub fn is_full_domain(&self, labels: usize) -> bool {
        let m = labels as i64 - 1;
        self.h_lo <= -m && self.h_hi >= m
    }
}

/// Pointwise minimum of bounded linear pieces.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PiecewiseLinearPotential {
    pieces: Vec<BoundedLinearPiece>,
}

impl PiecewiseLinearPotential {
    pub fn new(pieces: Vec<BoundedLinearPiece>) -> Result<Self> {
        if pieces.is_empty() {
            return Err(Error::InvalidPotential("at least one piece is required".into()));
        }
        for p in &pieces {
            BoundedLinearPiece::new(p.alpha, p.beta, p.h_lo, p.h_hi)?;
        }
        Ok(Self { pieces })
    }

    pub fn pieces(&self) -> &[BoundedLinearPiece] {
        &self.pieces
    }

    /// Number of pieces `K`.
    pub fn len(&self) -> usize {
        self.pieces.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pieces.is_empty()
    }

    /// `min` over pieces covering `h`; [`INFEASIBLE`] if none does.
    pub fn evaluate(&self, h: i64) -> f64 {
        self.pieces
            .iter()
            .filter(|p| p.contains(h))
            .map(|p| p.line(h))
            .fold(INFEASIBLE, f64::min)
    }

    /// Values at `h = -(L-1) ..= L-1`.
    pub fn samples(&self, labels: usize) -> Vec<f64> {
        let m = labels as i64 - 1;
        (-m..=m).map(|h| self.evaluate(h)).collect()
    }

    /// `alpha * |h| + beta` over the full difference range.
    pub fn abs_affine(alpha: f64, beta: f64, labels: usize) -> Self {
        let m = labels as i64 - 1;
        if alpha == 0.0 {
            return Self { pieces: vec![BoundedLinearPiece::full(0.0, beta, labels)] };
        }
        Self {
            pieces: vec![
                BoundedLinearPiece { alpha: -alpha, beta, h_lo: -m, h_hi: 0 },
                BoundedLinearPiece { alpha, beta, h_lo: 0, h_hi: m },
            ],
        }
    }

    /// `min{|h|, tau}` as three full-extent pieces.
    pub fn truncated_linear(tau: f64, labels: usize) -> Self {
        let m = labels as i64 - 1;
        Self {
            pieces: vec![
                BoundedLinearPiece { alpha: -1.0, beta: 0.0, h_lo: -m, h_hi: 0 },
                BoundedLinearPiece { alpha: 1.0, beta: 0.0, h_lo: 0, h_hi: m },
                BoundedLinearPiece::full(0.0, tau, labels),
            ],
        }
    }

    /// Concatenation of all pieces: the pointwise minimum of the inputs.
    pub fn min_of(potentials: &[PiecewiseLinearPotential]) -> Result<Self> {
        if potentials.is_empty() {
            return Err(Error::InvalidPotential("min_of needs at least one potential".into()));
        }
        let pieces = potentials.iter().flat_map(|p| p.pieces.iter().copied()).collect();
        Ok(Self { pieces })
    }

    /// The potential of the reversed edge, `h -> theta(-h)`.
    pub fn mirrored(&self) -> Self {
        Self {
            pieces: self
                .pieces
                .iter()
                .map(|p| BoundedLinearPiece { alpha: -p.alpha, beta: p.beta, h_lo: -p.h_hi, h_hi: -p.h_lo })
                .collect(),
        }
    }

    /// Checks that all piece domains lie in `[-(L-1), L-1]`.
    pub fn check_labels(&self, labels: usize) -> Result<()> {
        let m = labels as i64 - 1;
        for p in &self.pieces {
            if p.h_lo < -m || p.h_hi > m {
                return Err(Error::InvalidPotential(format!(
                    "piece domain [{}, {}] exceeds [-{m}, {m}]",
                    p.h_lo, p.h_hi
                )));
            }
        }
        Ok(())
    }

    /// Restricts every piece to `[-(L-1), L-1]`, dropping pieces that fall outside.
    pub fn clamped(&self, labels: usize) -> Result<Self> {
        let m = labels as i64 - 1;
        let pieces: Vec<_> = self
            .pieces
            .iter()
            .filter(|p| p.h_hi >= -m && p.h_lo <= m)
            .map(|p| BoundedLinearPiece { h_lo: p.h_lo.max(-m), h_hi: p.h_hi.min(m), ..*p })
            .collect();
        Self::new(pieces)
    }

    /// Interprets the pieces as a minimum of symmetric `alpha_k |h| + beta_k`
    /// terms. Returns `None` unless every piece is either a full-domain
    /// constant or half of a mirrored pair `(-a, b, [-(L-1), 0])`,
    /// `(a, b, [0, L-1])`.
    pub fn l1_terms(&self, labels: usize) -> Option<Vec<(f64, f64)>> {
        let m = labels as i64 - 1;
        let mut used = vec![false; self.pieces.len()];
        let mut terms = Vec::new();
        for (i, p) in self.pieces.iter().enumerate() {
            if used[i] {
                continue;
            }
            if p.alpha == 0.0 && p.h_lo <= -m && p.h_hi >= m {
                used[i] = true;
                terms.push((0.0, p.beta));
                continue;
            }
            let left = p.h_lo <= -m && p.h_hi == 0;
            let right = p.h_lo == 0 && p.h_hi >= m;
            if !(left || right) {
                return None;
            }
            let slope = if left { -p.alpha } else { p.alpha };
            if slope < 0.0 {
                return None;
            }
            let partner = self.pieces.iter().enumerate().position(|(j, q)| {
                !used[j]
                    && j != i
                    && q.beta == p.beta
                    && if left {
                        q.h_lo == 0 && q.h_hi >= m && q.alpha == slope
                    } else {
                        q.h_lo <= -m && q.h_hi == 0 && -q.alpha == slope
                    }
            })?;
            used[i] = true;
            used[partner] = true;
            terms.push((slope, p.beta));
        }
        Some(terms)
    }

    /// Exact representation of tabulated values at `h = -(L-1) ..= L-1`.
    ///
    /// Samples equal to [`INFEASIBLE`] are left uncovered. Maximal collinear
    /// runs become pieces (consecutive runs share their meeting sample when the
    /// values connect continuously); runs lying on the same line are merged
    /// when that line stays above the samples in between, and every piece is
    /// then widened as far as its line does not undercut a sample.
    pub fn from_samples(values: &[f64]) -> Result<Self> {
        if values.is_empty() || values.len().is_multiple_of(2) {
            return Err(Error::Dimension(format!(
                "expected 2L-1 samples, got {}",
                values.len()
            )));
        }
        let m = (values.len() as i64 - 1) / 2;
        let at = |h: i64| values[(h + m) as usize];
        if values.iter().any(|v| v.is_nan() || *v == f64::NEG_INFINITY) {
            return Err(Error::InvalidPotential("samples must be finite or +inf".into()));
        }

        // Reach of the collinear run starting at `a`.
        let reach = |a: i64| -> (i64, f64, f64) {
            let va = at(a);
            if a == m || !at(a + 1).is_finite() {
                return (a, 0.0, va);
            }
            let alpha = at(a + 1) - va;
            let mut b = a + 1;
            while b < m && at(b + 1).is_finite() && close(va + alpha * (b + 1 - a) as f64, at(b + 1)) {
                b += 1;
            }
            (b, alpha, va - alpha * a as f64)
        };

        let mut runs: Vec<BoundedLinearPiece> = Vec::new();
        let mut u = -m;
        while u <= m {
            if !at(u).is_finite() {
                u += 1;
                continue;
            }
            let mut best = {
                let (b, alpha, beta) = reach(u);
                (u, b, alpha, beta)
            };
            if u > -m && at(u - 1).is_finite() {
                let (b, alpha, beta) = reach(u - 1);
                if b >= best.1 {
                    best = (u - 1, b, alpha, beta);
                }
            }
            runs.push(BoundedLinearPiece { alpha: best.2, beta: best.3, h_lo: best.0, h_hi: best.1 });
            u = best.1 + 1;
        }
        if runs.is_empty() {
            return Err(Error::InvalidPotential("all samples are infeasible".into()));
        }

        let above = |p: &BoundedLinearPiece, h: i64| {
            let v = at(h);
            v.is_finite() && p.line(h) >= v - TOL * (1.0 + v.abs())
        };

        // Merge runs lying on a common line.
        let mut merged: Vec<BoundedLinearPiece> = Vec::new();
        let mut taken = vec![false; runs.len()];
        for i in 0..runs.len() {
            if taken[i] {
                continue;
            }
            let mut p = runs[i];
            taken[i] = true;
            for j in i + 1..runs.len() {
                if taken[j] {
                    continue;
                }
                let q = runs[j];
                let same = close(p.alpha, q.alpha) && close(p.line(q.h_lo), q.line(q.h_lo));
                if same && (p.h_hi..=q.h_lo).all(|h| above(&p, h)) {
                    p.h_hi = q.h_hi;
                    taken[j] = true;
                }
            }
            merged.push(p);
        }

        for p in &mut merged {
            while p.h_lo > -m && above(p, p.h_lo - 1) {
                p.h_lo -= 1;
            }
            while p.h_hi < m && above(p, p.h_hi + 1) {
                p.h_hi += 1;
            }
        }
        Self::new(merged)
    }
}

/// One hinge term `gamma * [h + delta]_+`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Hinge {
    pub gamma: f64,
    pub delta: i64,
}

/// Convex prior `alpha * h + beta + sum_k gamma_k [h + delta_k]_+`,
/// restricted to `h_min <= h <= h_max` when those bounds are set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvexHingePotential {
    pub alpha: f64,
    pub beta: f64,
    pub hinges: Vec<Hinge>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h_min: Option<i64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h_max: Option<i64>,
}

impl ConvexHingePotential {
    pub fn new(alpha: f64, beta: f64, hinges: Vec<Hinge>) -> Result<Self> {
        let p = Self { alpha, beta, hinges, h_min: None, h_max: None };
        p.validate()?;
        Ok(p)
    }

    pub fn with_bounds(mut self, h_min: Option<i64>, h_max: Option<i64>) -> Result<Self> {
        self.h_min = h_min;
        self.h_max = h_max;
        self.validate()?;
        Ok(self)
    }

    /// `0` for `|h| <= bound`, infeasible otherwise.
    pub fn lipschitz(bound: i64) -> Result<Self> {
        Self::new(0.0, 0.0, Vec::new())?.with_bounds(Some(-bound), Some(bound))
    }

    pub fn validate(&self) -> Result<()> {
        if !self.alpha.is_finite() || !self.beta.is_finite() {
            return Err(Error::InvalidPotential("non-finite affine part".into()));
        }
        for hg in &self.hinges {
            if !hg.gamma.is_finite() || hg.gamma <= 0.0 {
                return Err(Error::InvalidPotential(format!(
                    "hinge slope jump must be positive and finite, got {}",
                    hg.gamma
                )));
            }
        }
        if let (Some(lo), Some(hi)) = (self.h_min, self.h_max) {
            if lo > hi {
                return Err(Error::InvalidPotential(format!("empty domain [{lo}, {hi}]")));
            }
        }
        Ok(())
    }

    pub fn admits(&self, h: i64) -> bool {
        self.h_min.is_none_or(|lo| h >= lo) && self.h_max.is_none_or(|hi| h <= hi)
    }

    pub fn evaluate(&self, h: i64) -> f64 {
        if !self.admits(h) {
            return INFEASIBLE;
        }
        let hf = h as f64;
        let hinge: f64 = self
            .hinges
            .iter()
            .map(|hg| hg.gamma * ((h + hg.delta) as f64).max(0.0))
            .sum();
        hinge + self.alpha * hf + self.beta
    }

    pub fn samples(&self, labels: usize) -> Vec<f64> {
        let m = labels as i64 - 1;
        (-m..=m).map(|h| self.evaluate(h)).collect()
    }

    /// Converts `max_k (slope_k * h + intercept_k)` to hinge form.
    ///
    /// Dominated affines are dropped; each remaining slope change becomes a
    /// hinge whose breakpoint must be an integer.
    pub fn max_affine_to_hinge(affines: &[(f64, f64)]) -> Result<Self> {
        if affines.is_empty() {
            return Err(Error::InvalidPotential("no affine functions given".into()));
        }
        let mut lines: Vec<(f64, f64)> = affines.to_vec();
        lines.sort_by(|a, b| a.0.total_cmp(&b.0).then(b.1.total_cmp(&a.1)));
        lines.dedup_by(|later, earlier| later.0 == earlier.0);

        // Upper envelope of lines sorted by slope.
        let mut hull: Vec<(f64, f64)> = Vec::new();
        for &l in &lines {
            while hull.len() >= 2 {
                let (a1, b1) = hull[hull.len() - 2];
                let (a2, b2) = hull[hull.len() - 1];
                // l makes hull.last() redundant if it overtakes hull[-2] no later
                // than hull.last() does.
                let x12 = (b1 - b2) / (a2 - a1);
                let x1l = (b1 - l.1) / (l.0 - a1);
                if x1l <= x12 {
                    hull.pop();
                } else {
                    break;
                }
            }
            hull.push(l);
        }

        let (alpha, beta) = hull[0];
        let mut hinges = Vec::with_capacity(hull.len().saturating_sub(1));
        for w in hull.windows(2) {
            let (a1, b1) = w[0];
            let (a2, b2) = w[1];
            let x = (b1 - b2) / (a2 - a1);
            let r = x.round();
            if (x - r).abs() > 1e-9 * (1.0 + x.abs()) {
                return Err(Error::NonIntegralBreakpoint(x));
            }
            hinges.push(Hinge { gamma: a2 - a1, delta: -(r as i64) });
        }
        Self::new(alpha, beta, hinges)
    }

    /// Hinge form of a single bounded linear piece: its line plus hard bounds.
    pub fn from_piece(piece: &BoundedLinearPiece, labels: usize) -> Self {
        let m = labels as i64 - 1;
        Self {
            alpha: piece.alpha,
            beta: piece.beta,
            hinges: Vec::new(),
            h_min: (piece.h_lo > -m).then_some(piece.h_lo),
            h_max: (piece.h_hi < m).then_some(piece.h_hi),
        }
    }

    /// Hinge form of tabulated convex values at `h = -(L-1) ..= L-1`.
    ///
    /// The finite samples must form one contiguous, discretely convex stretch;
    /// infeasible samples outside it become hard bounds.
    pub fn from_convex_samples(values: &[f64]) -> Result<Self> {
        if values.is_empty() || values.len().is_multiple_of(2) {
            return Err(Error::Dimension(format!("expected 2L-1 samples, got {}", values.len())));
        }
        let m = (values.len() as i64 - 1) / 2;
        let finite: Vec<i64> = (-m..=m).filter(|h| values[(h + m) as usize].is_finite()).collect();
        let (lo, hi) = match (finite.first(), finite.last()) {
            (Some(&lo), Some(&hi)) => (lo, hi),
            _ => return Err(Error::InvalidPotential("all samples are infeasible".into())),
        };
        if (hi - lo + 1) as usize != finite.len() {
            return Err(Error::NonConvex("feasible differences are not contiguous".into()));
        }
        let at = |h: i64| values[(h + m) as usize];
        let h_min = (lo > -m).then_some(lo);
        let h_max = (hi < m).then_some(hi);
        if lo == hi {
            return Self::new(0.0, at(lo), Vec::new())?.with_bounds(h_min, h_max);
        }
        let alpha = at(lo + 1) - at(lo);
        let beta = at(lo) - alpha * lo as f64;
        let mut hinges = Vec::new();
        let mut slope = alpha;
        for h in lo + 1..hi {
            let next = at(h + 1) - at(h);
            let jump = next - slope;
            if jump < -TOL * (1.0 + next.abs() + slope.abs()) {
                return Err(Error::NonConvex(format!("slope decreases at h = {h}")));
            }
            if jump > TOL * (1.0 + next.abs() + slope.abs()) {
                hinges.push(Hinge { gamma: jump, delta: -h });
            }
            slope = next;
        }
        Self::new(alpha, beta, hinges)?.with_bounds(h_min, h_max)
    }

    /// `true` when the bounds do not cut into `[-(L-1), L-1]`.
    pub fn is_unbounded_for(&self, labels: usize) -> bool {
        let m = labels as i64 - 1;
        self.h_min.is_none_or(|lo| lo <= -m) && self.h_max.is_none_or(|hi| hi >= m)
    }
}
