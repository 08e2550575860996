//! Transfer-matrix cocycles over a potential source and the exact 2×2
//! matrix algebra the quantitative estimates are built from: stable matrix
//! powers, hyperbolic diagonalization with a certified conjugator bound,
//! perturbed-product gaps, and the telescoping defect of almost-periods.
//!
//! Norm conventions: the Hilbert–Schmidt norm is the default for lemma
//! checks; the conjugation bound is stated for the operator norm and checked
//! there. Both are exposed on [`Mat2`].

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::ops::Mul;
use std::sync::RwLock;

use crate::error::{QpError, Result};
use crate::potential::PotentialSource;

/// Row-major 2×2 real matrix.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Mat2 {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

impl Mat2 {
    pub const IDENTITY: Mat2 = Mat2 {
        a: 1.0,
        b: 0.0,
        c: 0.0,
        d: 1.0,
    };

    pub fn new(a: f64, b: f64, c: f64, d: f64) -> Self {
        Mat2 { a, b, c, d }
    }

    /// One-step Schrödinger matrix [[E − v, −1], [1, 0]].
    pub fn schrodinger_step(energy: f64, v: f64) -> Self {
        Mat2::new(energy - v, -1.0, 1.0, 0.0)
    }

    /// Constructor that enforces unimodularity: |det − 1| must be ≤ 1e-12,
    /// and the entries are renormalized by √det.
    pub fn unimodular(a: f64, b: f64, c: f64, d: f64) -> Result<Self> {
        let m = Mat2::new(a, b, c, d);
        let det = m.det();
        if (det - 1.0).abs() > 1e-12 {
            return Err(QpError::domain(format!(
                "matrix is not unimodular: det = {det}"
            )));
        }
        let s = det.sqrt();
        Ok(Mat2::new(a / s, b / s, c / s, d / s))
    }

    pub fn det(&self) -> f64 {
        self.a * self.d - self.b * self.c
    }

    pub fn trace(&self) -> f64 {
        self.a + self.d
    }

    /// Hilbert–Schmidt norm √(a²+b²+c²+d²).
    pub fn hs_norm(&self) -> f64 {
        (self.a * self.a + self.b * self.b + self.c * self.c + self.d * self.d).sqrt()
    }

    /// Operator (spectral) norm: largest singular value.
    pub fn op_norm(&self) -> f64 {
        let s = self.a * self.a + self.b * self.b + self.c * self.c + self.d * self.d;
        let det = self.det();
        let disc = (s * s - 4.0 * det * det).max(0.0).sqrt();
        (0.5 * (s + disc)).sqrt()
    }

    /// Inverse of a unimodular matrix: [[d, −b], [−c, a]].
    pub fn inv_unimodular(&self) -> Mat2 {
        Mat2::new(self.d, -self.b, -self.c, self.a)
    }

    pub fn scale(&self, s: f64) -> Mat2 {
        Mat2::new(self.a * s, self.b * s, self.c * s, self.d * s)
    }

    pub fn add(&self, o: &Mat2) -> Mat2 {
        Mat2::new(self.a + o.a, self.b + o.b, self.c + o.c, self.d + o.d)
    }

    pub fn sub(&self, o: &Mat2) -> Mat2 {
        Mat2::new(self.a - o.a, self.b - o.b, self.c - o.c, self.d - o.d)
    }

    pub fn apply(&self, x: (f64, f64)) -> (f64, f64) {
        (self.a * x.0 + self.b * x.1, self.c * x.0 + self.d * x.1)
    }
}

impl Mul for Mat2 {
    type Output = Mat2;
    fn mul(self, rhs: Mat2) -> Mat2 {
        Mat2::new(
            self.a * rhs.a + self.b * rhs.c,
            self.a * rhs.b + self.b * rhs.d,
            self.c * rhs.a + self.d * rhs.c,
            self.c * rhs.b + self.d * rhs.d,
        )
    }
}

/// A product of one-step matrices with the scale factored out:
/// value = matrix · e^{log_scale}. Keeps huge products representable.
#[derive(Debug, Clone, Copy)]
pub struct ScaledMat2 {
    pub matrix: Mat2,
    pub log_scale: f64,
}

impl ScaledMat2 {
    pub fn identity() -> Self {
        ScaledMat2 {
            matrix: Mat2::IDENTITY,
            log_scale: 0.0,
        }
    }

    /// log of the HS norm of the represented matrix.
    pub fn log_hs_norm(&self) -> f64 {
        self.matrix.hs_norm().ln() + self.log_scale
    }

    /// Trace as (mantissa, log_scale): trace = mantissa · e^{log_scale}.
    pub fn trace_scaled(&self) -> (f64, f64) {
        (self.matrix.trace(), self.log_scale)
    }

    /// The raw matrix; may overflow to ±inf when log_scale is large.
    pub fn to_mat(&self) -> Mat2 {
        self.matrix.scale(self.log_scale.exp())
    }

    fn push(&mut self, step: Mat2) {
        self.matrix = step * self.matrix;
        let norm = self.matrix.hs_norm();
        if !(norm.is_finite() && norm > 0.0) {
            return;
        }
        if !(1e-100..=1e100).contains(&norm) {
            self.matrix = self.matrix.scale(1.0 / norm);
            self.log_scale += norm.ln();
        }
    }

    fn renorm_det(&mut self) {
        let det = self.matrix.det();
        if det > 0.0 && det.is_finite() {
            let s = det.sqrt();
            self.matrix = self.matrix.scale(1.0 / s);
            self.log_scale += s.ln();
        }
    }
}

/// Direction of a transfer chain: forward is the cocycle itself, reversed is
/// the reflected cocycle over frequency −α (factor j reads V(−1−j)).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Direction {
    Forward,
    Reversed,
}

/// Lazily evaluated transfer-matrix products A_n(θ, E) over a potential
/// source, with cached checkpoints for O(√n)-ish random access. Checkpoints
/// live behind an RwLock so one chain can serve concurrent readers.
pub struct TransferChain {
    src: PotentialSource,
    energy: f64,
    direction: Direction,
    stride: i64,
    checkpoints: RwLock<BTreeMap<i64, ScaledMat2>>,
}

const RENORM_EVERY: i64 = 32;

impl TransferChain {
    pub fn new(src: PotentialSource, energy: f64) -> Self {
        TransferChain {
            src,
            energy,
            direction: Direction::Forward,
            stride: 1024,
            checkpoints: RwLock::new(BTreeMap::new()),
        }
    }

    pub fn reversed(src: PotentialSource, energy: f64) -> Self {
        TransferChain {
            direction: Direction::Reversed,
            ..Self::new(src, energy)
        }
    }

    pub fn energy(&self) -> f64 {
        self.energy
    }

    pub fn source(&self) -> &PotentialSource {
        &self.src
    }

    /// Checkpoint spacing; roughly √n_max for the intended access pattern.
    pub fn with_stride(mut self, stride: i64) -> Self {
        self.stride = stride.max(RENORM_EVERY);
        self
    }

    fn site_value(&self, j: i64) -> f64 {
        match self.direction {
            Direction::Forward => self.src.eval_unchecked(j),
            Direction::Reversed => self.src.eval_unchecked(-1 - j),
        }
    }

    fn check_window(&self, lo: i64, hi: i64) -> Result<()> {
        let (map_lo, map_hi) = match self.direction {
            Direction::Forward => (lo, hi),
            Direction::Reversed => (-1 - hi, -1 - lo),
        };
        let w = self.src.window();
        if map_lo < w.0 || map_hi >= w.1 {
            return Err(QpError::Range {
                context: "transfer product exceeds potential window".into(),
                required_lo: map_lo,
                required_hi: map_hi,
            });
        }
        Ok(())
    }

    /// Scaled cumulative product A_n for n ≥ 0 (identity at 0), walking from
    /// the nearest cached checkpoint.
    fn cumulative(&self, n: i64) -> Result<ScaledMat2> {
        debug_assert!(n >= 0);
        if n == 0 {
            return Ok(ScaledMat2::identity());
        }
        self.check_window(1, n)?;
        let start = {
            let cache = self.checkpoints.read().unwrap();
            cache
                .range(..=n)
                .next_back()
                .map(|(&k, &v)| (k, v))
                .unwrap_or((0, ScaledMat2::identity()))
        };
        let (mut at, mut acc) = start;
        let mut new_points: Vec<(i64, ScaledMat2)> = Vec::new();
        while at < n {
            at += 1;
            acc.push(Mat2::schrodinger_step(self.energy, self.site_value(at)));
            if at % RENORM_EVERY == 0 {
                acc.renorm_det();
            }
            if at % self.stride == 0 {
                new_points.push((at, acc));
            }
        }
        if !new_points.is_empty() {
            let mut cache = self.checkpoints.write().unwrap();
            for (k, v) in new_points {
                cache.insert(k, v);
            }
        }
        Ok(acc)
    }

    /// A_n(T^shift θ) as a scaled product, any sign of n.
    ///
    /// Positive n multiplies steps at sites shift+1..shift+n (newest on the
    /// left); negative n is A_{−m}(θ) = A_m^{-1}(T^{−m}θ).
    pub fn product_shifted_scaled(&self, n: i64, shift: i64) -> Result<ScaledMat2> {
        if n >= 0 {
            if shift == 0 {
                return self.cumulative(n);
            }
            self.check_window(shift + 1, shift + n)?;
            let mut acc = ScaledMat2::identity();
            for j in shift + 1..=shift + n {
                acc.push(Mat2::schrodinger_step(self.energy, self.site_value(j)));
                if (j - shift) % RENORM_EVERY == 0 {
                    acc.renorm_det();
                }
            }
            Ok(acc)
        } else {
            let m = -n;
            // A_{-m}(T^shift) = [A(site shift) A(site shift-1) … A(site shift-m+1)]^{-1}
            self.check_window(shift - m + 1, shift)?;
            let mut acc = ScaledMat2::identity();
            let mut count = 0i64;
            for j in (shift - m + 1..=shift).rev() {
                let step = Mat2::schrodinger_step(self.energy, self.site_value(j));
                acc.matrix = acc.matrix * step;
                count += 1;
                let norm = acc.matrix.hs_norm();
                if !(1e-100..=1e100).contains(&norm) && norm.is_finite() && norm > 0.0 {
                    acc.matrix = acc.matrix.scale(1.0 / norm);
                    acc.log_scale += norm.ln();
                }
                if count % RENORM_EVERY == 0 {
                    acc.renorm_det();
                }
            }
            Ok(ScaledMat2 {
                matrix: acc.matrix.inv_unimodular(),
                log_scale: -acc.log_scale,
            })
        }
    }

    pub fn product_scaled(&self, n: i64) -> Result<ScaledMat2> {
        self.product_shifted_scaled(n, 0)
    }

    /// Raw n-step transfer matrix (overflows to ±inf entries past
    /// |log scale| ~ 700; use the scaled accessor for long products).
    pub fn product(&self, n: i64) -> Result<Mat2> {
        Ok(self.product_scaled(n)?.to_mat())
    }
}

/// Raw transfer product convenience wrapper.
pub fn transfer_product(chain: &TransferChain, n: i64) -> Result<Mat2> {
    chain.product(n)
}

// ---------------------------------------------------------------------------
// Uniform norm bound Λ
// ---------------------------------------------------------------------------

/// The measured uniform growth bound Λ with the (E, shift, n) attaining it.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LambdaReport {
    pub lambda: f64,
    pub at_energy: f64,
    pub at_shift: i64,
    pub at_n: i64,
    pub n0: i64,
    pub n_max: i64,
    /// per-energy maxima of (1/n) log‖A_n(T^k θ)‖
    pub per_energy: Vec<(f64, f64)>,
    /// finitely many shifts were sampled; the sup over all k ∈ ℤ may exceed
    /// the reported value
    pub shift_sample: Vec<i64>,
}

/// Measure Λ = max over E ∈ E_set, sampled shifts k and n ∈ [n0, n_max] of
/// (1/n) log‖A_n(T^k θ)‖ (HS norm).
pub fn norm_bound_lambda(
    src: &PotentialSource,
    e_set: &[f64],
    n_max: i64,
    n0: i64,
    shifts: &[i64],
) -> Result<LambdaReport> {
    if e_set.is_empty() {
        return Err(QpError::domain("empty energy set"));
    }
    if !(n_max > n0 && n0 >= 1) {
        return Err(QpError::domain("need n_max > n0 >= 1"));
    }
    let shifts: Vec<i64> = if shifts.is_empty() {
        vec![0]
    } else {
        shifts.to_vec()
    };
    let mut lambda = f64::NEG_INFINITY;
    let mut attain = (f64::NAN, 0i64, 0i64);
    let mut per_energy = Vec::with_capacity(e_set.len());
    for &e in e_set {
        let chain = TransferChain::new(src.clone(), e);
        let mut best_e = f64::NEG_INFINITY;
        for &k in &shifts {
            let mut acc = ScaledMat2::identity();
            for n in 1..=n_max {
                acc.push(Mat2::schrodinger_step(e, chain.site_value(k + n)));
                if n % RENORM_EVERY == 0 {
                    acc.renorm_det();
                }
                if n >= n0 {
                    let rate = acc.log_hs_norm() / n as f64;
                    if rate > best_e {
                        best_e = rate;
                    }
                    if rate > lambda {
                        lambda = rate;
                        attain = (e, k, n);
                    }
                }
            }
        }
        per_energy.push((e, best_e));
    }
    Ok(LambdaReport {
        lambda,
        at_energy: attain.0,
        at_shift: attain.1,
        at_n: attain.2,
        n0,
        n_max,
        per_energy,
        shift_sample: shifts,
    })
}

// ---------------------------------------------------------------------------
// Lyapunov exponent
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LyapunovEstimate {
    pub value: f64,
    pub std_error: f64,
    pub n: i64,
    pub samples: usize,
}

/// Phase-averaged Lyapunov exponent estimate
/// L̂(E) = mean over sampled orbits of (1/n) log‖A_n‖, with the phase
/// average realized by widely spaced shifts (Birkhoff sampling).
pub fn lyapunov_exponent(
    src: &PotentialSource,
    energy: f64,
    n: i64,
    theta_samples: usize,
) -> Result<LyapunovEstimate> {
    if n < 1 || theta_samples < 1 {
        return Err(QpError::domain("need n >= 1 and theta_samples >= 1"));
    }
    let chain = TransferChain::new(src.clone(), energy);
    // spread sample orbits far apart
    let stride = (2 * n + 1).max(1009) | 1;
    let mut values = Vec::with_capacity(theta_samples);
    for i in 0..theta_samples {
        let shift = (i as i64 - theta_samples as i64 / 2) * stride;
        let acc = chain.product_shifted_scaled(n, shift)?;
        let v = acc.log_hs_norm() / n as f64;
        if !v.is_finite() {
            return Err(QpError::numeric(format!(
                "transfer norm overflow at E = {energy}, shift = {shift}"
            )));
        }
        values.push(v);
    }
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    let var = if values.len() > 1 {
        values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (values.len() - 1) as f64
    } else {
        0.0
    };
    Ok(LyapunovEstimate {
        value: mean,
        std_error: (var / values.len() as f64).sqrt(),
        n,
        samples: theta_samples,
    })
}

// ---------------------------------------------------------------------------
// SL(2,R) power formula
// ---------------------------------------------------------------------------

/// Threshold below which |Tr A − 2| is treated as parabolic.
pub const PARABOLIC_SWITCH: f64 = 1e-10;
/// Band where both branches are computed and compared.
pub const PARABOLIC_CROSSCHECK_BAND: (f64, f64) = (1e-12, 1e-8);

/// The two scalar coefficients of the power formula:
/// s_k = (ρ^k − ρ^{−k})/(ρ − ρ^{−1}) and c_k = (ρ^k + ρ^{−k})/2, both real
/// in the elliptic and hyperbolic cases. Evaluated by the Chebyshev
/// three-term recurrences in x = Tr A / 2 (s_k = U_{k−1}(x), c_k = T_k(x)),
/// which stay stable through the parabolic degeneration ρ → ±1.
pub fn sl2_power_coefficients(m: &Mat2, k: u32) -> Result<(f64, f64)> {
    if (m.det() - 1.0).abs() > 1e-8 {
        return Err(QpError::domain(format!(
            "power formula needs det = 1, got {}",
            m.det()
        )));
    }
    let x = m.trace() / 2.0;
    Ok(chebyshev_pair(x, k))
}

fn chebyshev_pair(x: f64, k: u32) -> (f64, f64) {
    // s_k = U_{k-1}(x), c_k = T_k(x)
    if k == 0 {
        return (0.0, 1.0);
    }
    let (mut t_prev, mut t) = (1.0f64, x);
    let (mut u_prev, mut u) = (0.0f64, 1.0f64);
    for _ in 1..k {
        let t_next = 2.0 * x * t - t_prev;
        t_prev = t;
        t = t_next;
        let u_next = 2.0 * x * u - u_prev;
        u_prev = u;
        u = u_next;
    }
    (u, t)
}

/// k-th power of a unimodular matrix through the closed form
/// A^k = s_k (A − (Tr A / 2) I) + c_k I, with the parabolic branch
/// A^k = k(A − I) + I when |Tr A − 2| ≤ 1e-10.
pub fn sl2_power(m: &Mat2, k: u32) -> Result<Mat2> {
    Ok(sl2_power_checked(m, k)?.0)
}

/// Same as [`sl2_power`], also reporting the branch discrepancy when
/// |Tr A − 2| falls in the cross-check band.
pub fn sl2_power_checked(m: &Mat2, k: u32) -> Result<(Mat2, Option<f64>)> {
    if (m.det() - 1.0).abs() > 1e-8 {
        return Err(QpError::domain(format!(
            "power formula needs det = 1, got {}",
            m.det()
        )));
    }
    let gap = (m.trace() - 2.0).abs();
    let parabolic = || m.sub(&Mat2::IDENTITY).scale(k as f64).add(&Mat2::IDENTITY);
    let spectral = || {
        let (s_k, c_k) = chebyshev_pair(m.trace() / 2.0, k);
        let half_trace = m.trace() / 2.0;
        m.sub(&Mat2::IDENTITY.scale(half_trace))
            .scale(s_k)
            .add(&Mat2::IDENTITY.scale(c_k))
    };
    if gap <= PARABOLIC_SWITCH {
        let p = parabolic();
        let check = if gap >= PARABOLIC_CROSSCHECK_BAND.0 {
            Some(p.sub(&spectral()).hs_norm())
        } else {
            None
        };
        Ok((p, check))
    } else {
        let s = spectral();
        let check = if gap <= PARABOLIC_CROSSCHECK_BAND.1 {
            Some(parabolic().sub(&s).hs_norm())
        } else {
            None
        };
        Ok((s, check))
    }
}

// ---------------------------------------------------------------------------
// Hyperbolic conjugation
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConjugationReport {
    pub b: Mat2,
    pub rho: f64,
    /// operator norm of B (equals ‖B^{-1}‖ for |det B| = 1)
    pub norm_b: f64,
    /// certified bound √‖G‖/√(|Tr G|−2), doubled for |Tr G| > 6
    pub bound: f64,
    /// ‖B diag(ρ,1/ρ) B^{-1} − G‖_HS
    pub residual: f64,
}

/// Diagonalize a hyperbolic unimodular G = B diag(ρ, ρ^{-1}) B^{-1} with
/// |det B| = 1 (unit eigenvector columns scaled by 1/√|det|), certifying the
/// norm bound ‖B‖ ≤ √‖G‖/√(|Tr G|−2) (doubled for |Tr G| > 6).
pub fn hyperbolic_conjugator(g: &Mat2) -> Result<ConjugationReport> {
    if (g.det() - 1.0).abs() > 1e-9 {
        return Err(QpError::domain("conjugator needs det G = 1"));
    }
    let t = g.trace();
    if t.abs() <= 2.0 {
        return Err(QpError::domain(format!(
            "matrix is elliptic/parabolic: |Tr| = {} <= 2",
            t.abs()
        )));
    }
    let disc = (t * t - 4.0).sqrt();
    let rho = 0.5 * (t.abs() + disc) * t.signum(); // |rho| > 1
    let rho_inv = t.signum() * 2.0 / (t.abs() + disc); // stable 1/rho

    let col = |lam: f64| -> (f64, f64) {
        // eigenvector of [[a,b],[c,d]] for eigenvalue lam: rows of (G - lam)
        // give (b, lam - a) and (lam - d, c); take the larger
        let v1 = (g.b, lam - g.a);
        let v2 = (lam - g.d, g.c);
        let n1 = v1.0.hypot(v1.1);
        let n2 = v2.0.hypot(v2.1);
        let (v, n) = if n1 >= n2 { (v1, n1) } else { (v2, n2) };
        (v.0 / n, v.1 / n)
    };
    let u = col(rho);
    let v = col(rho_inv);
    let det_tilde = u.0 * v.1 - u.1 * v.0;
    if det_tilde.abs() < 1e-300 {
        return Err(QpError::numeric("eigenvectors are parallel"));
    }
    let s = det_tilde.abs().sqrt();
    let b = Mat2::new(u.0 / s, v.0 / s, u.1 / s, v.1 / s);

    let b_inv = {
        let det = b.det();
        Mat2::new(b.d / det, -b.b / det, -b.c / det, b.a / det)
    };
    let reconstructed = b * Mat2::new(rho, 0.0, 0.0, rho_inv) * b_inv;
    let residual = reconstructed.sub(g).hs_norm();

    let norm_b = b.op_norm();
    let base = g.op_norm().sqrt() / (t.abs() - 2.0).sqrt();
    let bound = if t.abs() <= 6.0 { base } else { 2.0 * base };
    Ok(ConjugationReport {
        b,
        rho,
        norm_b,
        bound,
        residual,
    })
}

// ---------------------------------------------------------------------------
// Product perturbation gap
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GapReport {
    pub actual: f64,
    pub bound: f64,
    pub m: f64,
    pub delta: f64,
    pub n: usize,
}

/// Gap between the perturbed product ∏(G + Δ_j) and G^N, against the bound
/// 2NM²δ valid whenever NMδ < 1/2 (M = max_{j≤N} ‖G^j‖, δ = max ‖Δ_j‖,
/// HS norms).
pub fn product_perturbation_gap(g: &Mat2, deltas: &[Mat2], n: usize) -> Result<GapReport> {
    if n == 0 || deltas.len() < n {
        return Err(QpError::domain("need 1 <= N <= deltas.len()"));
    }
    // M = max of ||G^j|| over 0 < j <= N
    let mut m = 0.0f64;
    let mut pw = Mat2::IDENTITY;
    for _ in 0..n {
        pw = pw * *g;
        m = m.max(pw.hs_norm());
    }
    let g_pow_n = pw;
    let delta = deltas[..n].iter().map(Mat2::hs_norm).fold(0.0, f64::max);
    if n as f64 * m * delta >= 0.5 {
        return Err(QpError::domain(format!(
            "precondition NMδ < 1/2 fails: N = {n}, M = {m:.3e}, δ = {delta:.3e}"
        )));
    }
    // coproduct with factor 1 rightmost
    let mut prod = Mat2::IDENTITY;
    for j in 0..n {
        prod = g.add(&deltas[j]) * prod;
    }
    let actual = prod.sub(&g_pow_n).hs_norm();
    let bound = 2.0 * n as f64 * m * m * delta;
    Ok(GapReport {
        actual,
        bound,
        m,
        delta,
        n,
    })
}

// ---------------------------------------------------------------------------
// Telescoping defect
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TelescopeRow {
    pub i: i64,
    pub delta_norm: f64,
    pub bound: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TelescopeReport {
    pub rows: Vec<TelescopeRow>,
    pub lambda: f64,
    pub beta_of_q: f64,
    pub c_n0: f64,
    pub violations: usize,
}

/// Measure Δ_i = A_q(T^{(i−1)q}θ) − A_q(θ) for |i| ≤ i_max against the
/// telescoping bound |i−1|·q·C_{n0}·e^{(Λ−β)q} with measured Λ and measured
/// β(q). C_{n0} is max‖A(θ,E)‖^{n0} over the scanned window.
pub fn telescoping_defect(
    src: &PotentialSource,
    energy: f64,
    q: i64,
    i_max: i64,
) -> Result<TelescopeReport> {
    if q < 1 || i_max < 1 {
        return Err(QpError::domain("need q >= 1 and i_max >= 1"));
    }
    let profile = crate::potential::repetition_defect(src, q, i_max)?;
    let n0 = 8.min(q).max(1);
    let lambda = norm_bound_lambda(src, &[energy], (4 * q).max(64), n0, &[0, q, -q])?;
    // one-step norm sup over the scanned window
    let mut c_v = 1.0f64;
    for n in (-i_max * q)..=((i_max + 1) * q) {
        c_v = c_v.max(Mat2::schrodinger_step(energy, src.eval_unchecked(n)).hs_norm());
    }
    let c_n0 = c_v.powi(n0 as i32);

    let chain = TransferChain::new(src.clone(), energy);
    let base = chain.product(q)?;
    let mut rows = Vec::new();
    let mut violations = 0usize;
    for i in (-i_max..=i_max).filter(|&i| i != 0) {
        let shifted = chain.product_shifted_scaled(q, (i - 1) * q)?.to_mat();
        let delta_norm = shifted.sub(&base).hs_norm();
        let bound = ((i - 1).abs() as f64)
            * q as f64
            * c_n0
            * ((lambda.lambda - profile.beta_of_q) * q as f64).exp();
        if delta_norm > bound && (i - 1) != 0 {
            violations += 1;
        }
        rows.push(TelescopeRow {
            i,
            delta_norm,
            bound,
        });
    }
    Ok(TelescopeReport {
        rows,
        lambda: lambda.lambda,
        beta_of_q: profile.beta_of_q,
        c_n0,
        violations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arithmetic::Frequency;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_sl2(rng: &mut ChaCha8Rng, spread: f64) -> Mat2 {
        // R(phi1) diag(e^s, e^-s) R(phi2) is a generic SL(2,R) element
        let phi1: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
        let phi2: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
        let s: f64 = rng.gen_range(-spread..spread);
        let r = |p: f64| Mat2::new(p.cos(), -p.sin(), p.sin(), p.cos());
        r(phi1) * Mat2::new(s.exp(), 0.0, 0.0, (-s).exp()) * r(phi2)
    }

    #[test]
    fn identity_and_det() {
        let m = Mat2::schrodinger_step(1.5, 0.3);
        assert_eq!(m.det(), 1.0);
        assert_eq!(Mat2::IDENTITY * m, m);
    }

    #[test]
    fn unimodular_constructor_rejects_bad_det() {
        assert!(Mat2::unimodular(2.0, 0.0, 0.0, 1.0).is_err());
        assert!(Mat2::unimodular(1.0, 0.5, 0.0, 1.0).is_ok());
    }

    #[test]
    fn zero_step_transfer_is_identity() {
        let chain = TransferChain::new(PotentialSource::free(), 0.7);
        assert_eq!(chain.product(0).unwrap(), Mat2::IDENTITY);
    }

    #[test]
    fn free_trace_is_chebyshev() {
        // V = 0, E = 2 cos t: Tr A_n = 2 cos(nt)
        let t = 0.9f64;
        let chain = TransferChain::new(PotentialSource::free(), 2.0 * t.cos());
        for n in 1..200i64 {
            let tr = chain.product(n).unwrap().trace();
            let expected = 2.0 * (n as f64 * t).cos();
            assert!(
                (tr - expected).abs() < 1e-10 * n as f64,
                "n = {n}: {tr} vs {expected}"
            );
        }
    }

    #[test]
    fn determinant_stays_unimodular() {
        let src = PotentialSource::almost_mathieu(1.0, Frequency::golden(50), 0.37);
        let chain = TransferChain::new(src, 0.5);
        for &n in &[10i64, 100, 1000, 5000] {
            let p = chain.product_scaled(n).unwrap();
            // represented det is det(matrix) e^{2 log_scale}, should be 1
            let log_det = p.matrix.det().abs().ln() + 2.0 * p.log_scale;
            let budget = 1e-8 * (n as f64 / 1e3).max(1.0);
            assert!(log_det.abs() < budget, "n = {n}: det drift {log_det}");
        }
    }

    #[test]
    fn cocycle_identity_random_pairs() {
        let src = PotentialSource::almost_mathieu(0.8, Frequency::golden(50), 0.21);
        let chain = TransferChain::new(src, 1.1);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..40 {
            let m: i64 = rng.gen_range(-300..300);
            let n: i64 = rng.gen_range(-300..300);
            let lhs = chain.product_shifted_scaled(m + n, 0).unwrap();
            let a_n = chain.product_shifted_scaled(n, m).unwrap();
            let a_m = chain.product_shifted_scaled(m, 0).unwrap();
            let rhs_mat = a_n.matrix * a_m.matrix;
            let rhs_scale = a_n.log_scale + a_m.log_scale;
            let scale = (rhs_scale - lhs.log_scale).exp();
            let diff = rhs_mat.scale(scale).sub(&lhs.matrix).hs_norm() / lhs.matrix.hs_norm();
            let budget = 1e-8 * ((m.abs() + n.abs()) as f64 / 1e3).max(1.0);
            assert!(diff < budget, "identity failed at m = {m}, n = {n}: {diff}");
        }
    }

    #[test]
    fn negative_n_is_inverse_of_shifted() {
        let src = PotentialSource::almost_mathieu(1.0, Frequency::golden(50), 0.4);
        let chain = TransferChain::new(src, 0.3);
        for &n in &[-1i64, -5, -37] {
            let a = chain.product(n).unwrap();
            let m = -n;
            let fwd = chain.product_shifted_scaled(m, n).unwrap().to_mat();
            let prod = a * fwd;
            assert!(
                prod.sub(&Mat2::IDENTITY).hs_norm() < 1e-9,
                "A_n A_{{-n}}(T^n) != I at n = {n}"
            );
        }
    }

    #[test]
    fn reversed_direction_matches_reflected_potential() {
        // the reversed cocycle reads V(-1-j) at factor j
        let src = PotentialSource::almost_mathieu(1.0, Frequency::golden(50), 0.29);
        let rev = TransferChain::reversed(src.clone(), 0.8);
        let mut acc = Mat2::IDENTITY;
        for j in 1..=40i64 {
            acc = Mat2::schrodinger_step(0.8, src.eval_unchecked(-1 - j)) * acc;
        }
        let got = rev.product(40).unwrap();
        assert!(got.sub(&acc).hs_norm() < 1e-10);
    }

    #[test]
    fn cayley_hamilton_random() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..1000 {
            let m = random_sl2(&mut rng, 1.5);
            let ch = (m * m).sub(&m.scale(m.trace())).add(&Mat2::IDENTITY);
            assert!(ch.hs_norm() < 1e-12 * (1.0 + m.hs_norm() * m.hs_norm()));
        }
    }

    #[test]
    fn sl2_power_matches_iterated_multiplication() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for case in 0..3000 {
            let m = match case % 3 {
                0 => random_sl2(&mut rng, 1.2), // generic (mostly hyperbolic)
                1 => {
                    // elliptic: conjugated rotation
                    let b = random_sl2(&mut rng, 0.8);
                    let p: f64 = rng.gen_range(0.1..3.0);
                    let rot = Mat2::new(p.cos(), -p.sin(), p.sin(), p.cos());
                    b * rot * b.inv_unimodular()
                }
                _ => {
                    // near-parabolic: |Tr - 2| in [1e-6, 1e-2]
                    let mu: f64 = rng.gen_range(1e-3..1e-1);
                    let b = random_sl2(&mut rng, 0.5);
                    let t = Mat2::new(1.0 + mu, 1.0, 0.0, 1.0 / (1.0 + mu));
                    b * t * b.inv_unimodular()
                }
            };
            let k = rng.gen_range(0..=64u32);
            let formula = sl2_power(&m, k).unwrap();
            let mut iter = Mat2::IDENTITY;
            for _ in 0..k {
                iter = iter * m;
            }
            let rel = formula.sub(&iter).hs_norm() / iter.hs_norm().max(1.0);
            assert!(rel < 1e-9, "case {case}, k = {k}: rel error {rel}");
        }
    }

    #[test]
    fn sl2_power_coefficients_basics() {
        let m = random_sl2(&mut ChaCha8Rng::seed_from_u64(3), 1.0);
        assert_eq!(sl2_power_coefficients(&m, 0).unwrap(), (0.0, 1.0));
        let (s1, c1) = sl2_power_coefficients(&m, 1).unwrap();
        assert!((s1 - 1.0).abs() < 1e-15);
        assert!((c1 - m.trace() / 2.0).abs() < 1e-15);
    }

    #[test]
    fn sl2_power_coefficients_elliptic_closed_form() {
        // Tr A = 2 cos psi: s_k = sin(k psi)/sin psi, c_k = cos(k psi)
        let psi = 0.31f64;
        let m = Mat2::new(psi.cos(), -psi.sin(), psi.sin(), psi.cos());
        for k in 1..=10u32 {
            let (s, c) = sl2_power_coefficients(&m, k).unwrap();
            assert!((s - (k as f64 * psi).sin() / psi.sin()).abs() < 1e-12);
            assert!((c - (k as f64 * psi).cos()).abs() < 1e-12);
        }
    }

    #[test]
    fn parabolic_branch_shear() {
        let m = Mat2::new(1.0, 1.0, 0.0, 1.0);
        let p = sl2_power(&m, 7).unwrap();
        assert_eq!(p, Mat2::new(1.0, 7.0, 0.0, 1.0));
        let id = sl2_power(&Mat2::IDENTITY, 13).unwrap();
        assert_eq!(id, Mat2::IDENTITY);
    }

    #[test]
    fn negative_trace_parabolic_handled_by_recurrence() {
        // Tr = -2 exactly: A^k = (-1)^k (k(-A - I) + I)
        let m = Mat2::new(-1.0, 1.0, 0.0, -1.0);
        let got = sl2_power(&m, 5).unwrap();
        let mut iter = Mat2::IDENTITY;
        for _ in 0..5 {
            iter = iter * m;
        }
        assert!(got.sub(&iter).hs_norm() < 1e-12);
    }

    #[test]
    fn conjugator_diagonal_case() {
        let g = Mat2::new(3.0, 0.0, 0.0, 1.0 / 3.0);
        let rep = hyperbolic_conjugator(&g).unwrap();
        assert!((rep.rho - 3.0).abs() < 1e-12);
        assert!(rep.residual < 1e-12);
        assert!((rep.norm_b - 1.0).abs() < 1e-9);
        // bound sqrt(3)/sqrt(4/3) ~ 1.5
        assert!((rep.bound - 3.0f64.sqrt() / (4.0f64 / 3.0).sqrt()).abs() < 1e-12);
        assert!(rep.norm_b <= rep.bound);
    }

    #[test]
    fn conjugator_rejects_elliptic() {
        let p = std::f64::consts::FRAC_PI_3;
        let rot = Mat2::new(p.cos(), -p.sin(), p.sin(), p.cos());
        assert!(hyperbolic_conjugator(&rot).is_err());
    }

    #[test]
    fn conjugator_random_suite() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for i in 0..2000 {
            let tr: f64 = rng.gen_range(2.001..6.0);
            let rho = 0.5 * (tr + (tr * tr - 4.0).sqrt());
            let b = random_sl2(&mut rng, 1.0);
            let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
            let g = b * Mat2::new(sign * rho, 0.0, 0.0, sign / rho) * b.inv_unimodular();
            let rep = hyperbolic_conjugator(&g).unwrap();
            assert!(rep.residual < 1e-9, "residual {} at case {i}", rep.residual);
            assert!(
                rep.norm_b <= rep.bound * (1.0 + 1e-9),
                "bound violated: {} > {} at case {i}",
                rep.norm_b,
                rep.bound
            );
        }
    }

    #[test]
    fn perturbation_gap_zero_deltas() {
        let g = random_sl2(&mut ChaCha8Rng::seed_from_u64(1), 0.2);
        let deltas = vec![Mat2::new(0.0, 0.0, 0.0, 0.0); 50];
        let rep = product_perturbation_gap(&g, &deltas, 50).unwrap();
        assert_eq!(rep.actual, 0.0);
        assert_eq!(rep.bound, 0.0);
    }

    #[test]
    fn perturbation_gap_random_suite() {
        let mut rng = ChaCha8Rng::seed_from_u64(15);
        for _ in 0..200 {
            // elliptic G keeps M modest
            let b = random_sl2(&mut rng, 0.4);
            let p: f64 = rng.gen_range(0.1..3.0);
            let rot = Mat2::new(p.cos(), -p.sin(), p.sin(), p.cos());
            let g = b * rot * b.inv_unimodular();
            let n = rng.gen_range(2..=100usize);
            let deltas: Vec<Mat2> = (0..n)
                .map(|_| {
                    Mat2::new(
                        rng.gen_range(-1e-6..1e-6),
                        rng.gen_range(-1e-6..1e-6),
                        rng.gen_range(-1e-6..1e-6),
                        rng.gen_range(-1e-6..1e-6),
                    )
                })
                .collect();
            let rep = product_perturbation_gap(&g, &deltas, n).unwrap();
            assert!(
                rep.actual <= rep.bound * (1.0 + 1e-12),
                "gap {} > bound {}",
                rep.actual,
                rep.bound
            );
        }
    }

    #[test]
    fn perturbation_gap_precondition() {
        let g = Mat2::new(2.0, 0.0, 0.0, 0.5);
        // N*M*delta far beyond 1/2
        let deltas = vec![Mat2::new(1e-3, 0.0, 0.0, 1e-3); 10];
        assert!(product_perturbation_gap(&g, &deltas, 10).is_err());
    }

    #[test]
    fn lyapunov_free_closed_forms() {
        let free = PotentialSource::free();
        // E = 10: L = log((10 + sqrt(96))/2)
        let l = lyapunov_exponent(&free, 10.0, 400, 4).unwrap();
        let expected = ((10.0 + 96.0f64.sqrt()) / 2.0).ln();
        assert!(
            (l.value - expected).abs() < 1e-2,
            "L(10) = {} vs {expected}",
            l.value
        );
        // E = 0: elliptic, L = 0
        let l0 = lyapunov_exponent(&free, 0.0, 4000, 4).unwrap();
        assert!(l0.value.abs() < 2.0 / 4000.0 + 3.0 * l0.std_error + 1e-6);
    }

    #[test]
    fn lyapunov_amo_supercritical() {
        let src = PotentialSource::almost_mathieu(2.0, Frequency::golden(60), 0.123);
        let l = lyapunov_exponent(&src, 0.5, 20_000, 8).unwrap();
        let expected = 2.0f64.ln();
        assert!(
            (l.value - expected).abs() / expected < 0.05,
            "L = {} vs log 2 = {expected}",
            l.value
        );
    }

    #[test]
    fn lambda_contract_and_free_decay() {
        let free = PotentialSource::free();
        assert!(norm_bound_lambda(&free, &[], 100, 10, &[0]).is_err());
        assert!(norm_bound_lambda(&free, &[0.5], 10, 10, &[0]).is_err());
        let short = norm_bound_lambda(&free, &[0.0, 1.0, -1.5], 64, 8, &[0, 100]).unwrap();
        let long = norm_bound_lambda(&free, &[0.0, 1.0, -1.5], 1024, 128, &[0, 100]).unwrap();
        assert!(long.lambda < short.lambda);
        assert!(long.lambda < 0.05, "free Λ should decay, got {}", long.lambda);
    }

    #[test]
    fn telescoping_exact_period_is_zero() {
        let alpha = Frequency::rational(3, 8).unwrap();
        let src = PotentialSource::almost_mathieu(1.0, alpha, 0.3);
        let rep = telescoping_defect(&src, 0.7, 8, 3).unwrap();
        for row in &rep.rows {
            assert!(row.delta_norm < 1e-12, "i = {}: {}", row.i, row.delta_norm);
        }
        assert_eq!(rep.violations, 0);
    }

    #[test]
    fn telescoping_i_one_vanishes() {
        let src = PotentialSource::almost_mathieu(1.0, Frequency::golden(50), 0.11);
        let rep = telescoping_defect(&src, 1.2, 13, 2).unwrap();
        let row1 = rep.rows.iter().find(|r| r.i == 1).unwrap();
        assert_eq!(row1.delta_norm, 0.0);
        assert_eq!(rep.violations, 0);
    }
}
