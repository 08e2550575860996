//! Finite-box quantum evolution from the eigendecomposition of the
//! truncated operator, Abel-averaged position moments in closed form, and
//! the upper/lower transport exponents.
//!
//! The moment ⟨|X|^p⟩(T) = (2/T)∫₀^∞ e^{−2t/T} Σ_n |n|^p |⟨e^{−itH}δ₀,δ_n⟩|² dt
//! is evaluated without time stepping: expanding in the eigenbasis turns the
//! Abel average into the Lorentzian kernel 1/(1 + ((λ_a−λ_b)T/2)²) applied
//! to precomputed weight matrices.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{QpError, Result};
use crate::linalg::tridiag_eigen;
use crate::potential::PotentialSource;

/// Truncated operator on [−L, L] with its eigendecomposition, sized so the
/// ballistic cone never reaches the boundary within the requested horizon.
pub struct EvolutionSetup {
    pub box_radius: i64,
    pub t_max: f64,
    eigenvalues: Vec<f64>,
    /// amp0[a] = ψ_a(0)
    amp0: Vec<f64>,
    /// eigenvectors, one Vec per eigenpair
    vectors: Vec<Vec<f64>>,
}

const BOX_MARGIN: i64 = 64;
/// Maximum admissible time-averaged probability at the outermost sites.
pub const BOUNDARY_WEIGHT_CAP: f64 = 1e-6;

impl EvolutionSetup {
    /// Build the setup for horizons up to `t_max`, sizing
    /// L = ⌈(2 + ‖V‖∞) t_max⌉ + 64.
    pub fn new(src: &PotentialSource, t_max: f64) -> Result<EvolutionSetup> {
        if !(t_max > 0.0) {
            return Err(QpError::domain("t_max must be positive"));
        }
        let speed = 2.0 + src.sup_norm();
        let radius = (speed * t_max).ceil() as i64 + BOX_MARGIN;
        Self::with_radius(src, t_max, radius)
    }

    pub fn with_radius(src: &PotentialSource, t_max: f64, radius: i64) -> Result<EvolutionSetup> {
        let n = (2 * radius + 1) as usize;
        let diag: Vec<f64> = (-radius..=radius).map(|m| src.eval_unchecked(m)).collect();
        let off = vec![1.0; n - 1];
        let eig = tridiag_eigen(&diag, &off, true)?;
        // orthonormality spot check
        let dim = eig.values.len();
        for &(a, b) in &[(0usize, 0usize), (dim / 2, dim / 2), (0, dim - 1)] {
            let dot: f64 = (0..dim)
                .map(|i| eig.vectors[a][i] * eig.vectors[b][i])
                .sum();
            let want = if a == b { 1.0 } else { 0.0 };
            if (dot - want).abs() > 1e-9 {
                return Err(QpError::numeric(format!(
                    "eigenbasis orthonormality defect {:.3e}",
                    (dot - want).abs()
                )));
            }
        }
        let center = radius as usize;
        let amp0: Vec<f64> = eig.vectors.iter().map(|v| v[center]).collect();
        Ok(EvolutionSetup {
            box_radius: radius,
            t_max,
            eigenvalues: eig.values,
            amp0,
            vectors: eig.vectors,
        })
    }

    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    /// Weight matrix W_ab = ψ_a(0) ψ_b(0) Σ_n w(n) ψ_a(n) ψ_b(n) for a site
    /// weight function w. Row-major dim×dim.
    fn weight_matrix(&self, w: impl Fn(i64) -> f64 + Sync) -> Vec<f64> {
        let dim = self.dim();
        let radius = self.box_radius;
        let mut out = vec![0.0f64; dim * dim];
        out.par_chunks_mut(dim).enumerate().for_each(|(a, row)| {
            let va = &self.vectors[a];
            for (b, slot) in row.iter_mut().enumerate() {
                let vb = &self.vectors[b];
                let mut s = 0.0;
                for i in 0..dim {
                    let n = i as i64 - radius;
                    s += w(n) * va[i] * vb[i];
                }
                *slot = self.amp0[a] * self.amp0[b] * s;
            }
        });
        out
    }

    /// Abel-averaged expectation of the site weight w at horizon T:
    /// Σ_ab W_ab / (1 + ((λ_a−λ_b) T/2)²).
    fn abel_average(&self, weights: &[f64], t: f64) -> f64 {
        let dim = self.dim();
        (0..dim)
            .into_par_iter()
            .map(|a| {
                let la = self.eigenvalues[a];
                let mut s = 0.0;
                for b in 0..dim {
                    let om = (la - self.eigenvalues[b]) * t / 2.0;
                    s += weights[a * dim + b] / (1.0 + om * om);
                }
                s
            })
            .sum()
    }

    /// Instantaneous site distribution at time t (direct complex sum),
    /// used for the unitarity invariant.
    pub fn site_distribution(&self, t: f64) -> Vec<f64> {
        let dim = self.dim();
        (0..dim)
            .into_par_iter()
            .map(|i| {
                let mut re = 0.0;
                let mut im = 0.0;
                for a in 0..dim {
                    let c = self.amp0[a] * self.vectors[a][i];
                    let ph = -self.eigenvalues[a] * t;
                    re += c * ph.cos();
                    im += c * ph.sin();
                }
                re * re + im * im
            })
            .collect()
    }
}

/// Time-averaged p-th moments over a horizon grid.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MomentSeries {
    pub p: f64,
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    pub box_radius: i64,
}

/// Evaluate ⟨|X|^p⟩(T) over the grid, certifying that the time-averaged
/// boundary weight stays below 1e-6 at every requested horizon.
pub fn evolve_moments(setup: &EvolutionSetup, p: f64, t_grid: &[f64]) -> Result<MomentSeries> {
    if !(p > 0.0) {
        return Err(QpError::domain("moment order p must be positive"));
    }
    if t_grid.is_empty() {
        return Err(QpError::domain("empty horizon grid"));
    }
    let t_top = t_grid.iter().cloned().fold(0.0, f64::max);
    if t_top > setup.t_max * (1.0 + 1e-9) {
        return Err(QpError::domain(format!(
            "horizon {t_top} beyond setup t_max = {}",
            setup.t_max
        )));
    }
    let weights = setup.weight_matrix(|n| (n.abs() as f64).powf(p));
    let radius = setup.box_radius;
    let edge_weights = setup.weight_matrix(|n| if n.abs() >= radius - 1 { 1.0 } else { 0.0 });

    let mut values = Vec::with_capacity(t_grid.len());
    for &t in t_grid {
        let boundary = setup.abel_average(&edge_weights, t);
        if boundary > BOUNDARY_WEIGHT_CAP {
            return Err(QpError::domain(format!(
                "boundary weight {boundary:.3e} at T = {t} exceeds {BOUNDARY_WEIGHT_CAP}; enlarge box"
            )));
        }
        values.push(setup.abel_average(&weights, t));
    }
    Ok(MomentSeries {
        p,
        times: t_grid.to_vec(),
        values,
        box_radius: setup.box_radius,
    })
}

/// Upper and lower transport exponents from windowed slopes of
/// log⟨|X|^p⟩ against p·log T over the tail half of the grid.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TransportExponents {
    pub beta_plus: f64,
    pub beta_minus: f64,
    pub p: f64,
    /// first horizon of the tail window
    pub tail_from: f64,
    /// finite-horizon caveat: the asymptotic exponents live at T → ∞
    pub horizon: f64,
}

pub fn transport_exponents(ms: &MomentSeries) -> Result<TransportExponents> {
    if ms.times.len() < 8 {
        return Err(QpError::domain("need at least 8 horizons"));
    }
    let t_lo = ms.times.iter().cloned().fold(f64::INFINITY, f64::min);
    let t_hi = ms.times.iter().cloned().fold(0.0f64, f64::max);
    if t_hi / t_lo < 99.0 {
        return Err(QpError::domain("horizons must span at least 2 decades"));
    }
    let start = ms.times.len() / 2;
    let xs: Vec<f64> = ms.times[start..].iter().map(|t| t.ln()).collect();
    let ys: Vec<f64> = ms.values[start..]
        .iter()
        .map(|v| v.max(1e-300).ln())
        .collect();
    let w = 4.min(xs.len());
    let mut max_slope = f64::NEG_INFINITY;
    let mut min_slope = f64::INFINITY;
    for s in 0..=(xs.len() - w) {
        let (slope, _) = crate::scaling::least_squares(&xs[s..s + w], &ys[s..s + w]);
        max_slope = max_slope.max(slope);
        min_slope = min_slope.min(slope);
    }
    Ok(TransportExponents {
        beta_plus: max_slope / ms.p,
        beta_minus: min_slope / ms.p,
        p: ms.p,
        tail_from: ms.times[start],
        horizon: t_hi,
    })
}
