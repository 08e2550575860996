//! Potential families over ℤ and their repetition / almost-periodicity
//! profiles.
//!
//! Families are deterministic: the same (family, parameters, site) always
//! yields the same value bit-exactly, so defect scans and transfer products
//! are reproducible across runs and threads.

use serde::{Deserialize, Serialize};
use std::io::{BufRead, Write};
use std::sync::Arc;

use crate::arithmetic::Frequency;
use crate::error::{QpError, Result};

const TAU: f64 = std::f64::consts::TAU;

/// How close a Sturmian sampling phase may come to an indicator endpoint
/// before the evaluation is flagged.
pub const STURMIAN_BOUNDARY_TOL: f64 = 1e-14;

/// A deterministic potential sequence V(n) over a window of ℤ.
#[derive(Debug, Clone)]
pub struct PotentialSource {
    pub family: Family,
    window: (i64, i64),
}

#[derive(Debug, Clone)]
pub enum Family {
    /// V(n) = 2λ cos 2π(θ + nα)
    AlmostMathieu {
        lambda: f64,
        alpha: Arc<Frequency>,
        theta: f64,
    },
    /// V(n) = λ χ_{[1−α,1)}(θ + nα mod 1)
    Sturmian {
        lambda: f64,
        alpha: Arc<Frequency>,
        theta: f64,
    },
    /// V(n) = Σ_j c_j cos(2π j (θ + nα) + φ_j); harmonic 0 contributes the
    /// constant c_0 cos(φ_0)
    CustomAnalytic {
        harmonics: Vec<(u32, f64, f64)>,
        alpha: Arc<Frequency>,
        theta: f64,
    },
    /// V(n) = 2λ cos 2π(y + nθ + n(n−1)α/2), the skew-shift orbit
    SkewShift {
        lambda: f64,
        alpha: Arc<Frequency>,
        theta: f64,
        y: f64,
    },
    /// File-backed double array with explicit index origin
    File { values: Arc<Vec<f64>>, origin: i64 },
}

// generous window for analytic families: phases stay accurate to ~2^-50
// out to |n| ~ 2^40
const ANALYTIC_WINDOW: i64 = 1 << 40;

impl PotentialSource {
    pub fn almost_mathieu(lambda: f64, alpha: Frequency, theta: f64) -> Self {
        PotentialSource {
            family: Family::AlmostMathieu {
                lambda,
                alpha: Arc::new(alpha),
                theta,
            },
            window: (-ANALYTIC_WINDOW, ANALYTIC_WINDOW),
        }
    }

    /// The free Laplacian V ≡ 0.
    pub fn free() -> Self {
        Self::almost_mathieu(0.0, Frequency::golden(40), 0.0)
    }

    pub fn sturmian(lambda: f64, alpha: Frequency, theta: f64) -> Self {
        PotentialSource {
            family: Family::Sturmian {
                lambda,
                alpha: Arc::new(alpha),
                theta,
            },
            window: (-ANALYTIC_WINDOW, ANALYTIC_WINDOW),
        }
    }

    pub fn custom_analytic(harmonics: Vec<(u32, f64, f64)>, alpha: Frequency, theta: f64) -> Self {
        PotentialSource {
            family: Family::CustomAnalytic {
                harmonics,
                alpha: Arc::new(alpha),
                theta,
            },
            window: (-ANALYTIC_WINDOW, ANALYTIC_WINDOW),
        }
    }

    pub fn skew_shift(lambda: f64, alpha: Frequency, theta: f64, y: f64) -> Self {
        // triangular phases n(n-1)/2 keep i64-exactness only to ~2^30
        PotentialSource {
            family: Family::SkewShift {
                lambda,
                alpha: Arc::new(alpha),
                theta,
                y,
            },
            window: (-(1 << 30), 1 << 30),
        }
    }

    pub fn from_values(values: Vec<f64>, origin: i64) -> Result<Self> {
        if values.iter().any(|v| v.is_nan()) {
            return Err(QpError::domain("potential file contains NaN"));
        }
        let len = values.len() as i64;
        Ok(PotentialSource {
            family: Family::File {
                values: Arc::new(values),
                origin,
            },
            window: (origin, origin + len),
        })
    }

    /// Half-open evaluable window [lo, hi).
    pub fn window(&self) -> (i64, i64) {
        self.window
    }

    pub fn contains(&self, n: i64) -> bool {
        n >= self.window.0 && n < self.window.1
    }

    /// Evaluate V(n).
    pub fn eval(&self, n: i64) -> Result<f64> {
        if !self.contains(n) {
            return Err(QpError::Range {
                context: format!("V({n}) outside evaluable window"),
                required_lo: self.window.0,
                required_hi: self.window.1 - 1,
            });
        }
        Ok(self.eval_unchecked(n))
    }

    pub fn eval_unchecked(&self, n: i64) -> f64 {
        match &self.family {
            Family::AlmostMathieu {
                lambda,
                alpha,
                theta,
            } => 2.0 * lambda * (TAU * alpha.phase(*theta, n)).cos(),
            Family::Sturmian {
                lambda,
                alpha,
                theta,
            } => {
                let (ind, _) = sturmian_indicator(alpha, *theta, n);
                lambda * ind
            }
            Family::CustomAnalytic {
                harmonics,
                alpha,
                theta,
            } => {
                let x = alpha.phase(*theta, n);
                harmonics
                    .iter()
                    .map(|&(j, c, phi)| c * (TAU * j as f64 * x + phi).cos())
                    .sum()
            }
            Family::SkewShift {
                lambda,
                alpha,
                theta,
                y,
            } => {
                // y_n = y + n θ + n(n-1)/2 α mod 1
                let tri = n * (n - 1) / 2;
                let base = alpha.phase(0.0, tri);
                let lin = (n as f64) * theta + y;
                let x = frac(base + frac(lin));
                2.0 * lambda * (TAU * x).cos()
            }
            Family::File { values, origin } => values[(n - origin) as usize],
        }
    }

    /// Sup norm of the potential over a probe of the window (exact for the
    /// families with closed-form bounds).
    pub fn sup_norm(&self) -> f64 {
        match &self.family {
            Family::AlmostMathieu { lambda, .. } | Family::SkewShift { lambda, .. } => {
                2.0 * lambda.abs()
            }
            Family::Sturmian { lambda, .. } => lambda.abs(),
            Family::CustomAnalytic { harmonics, .. } => {
                harmonics.iter().map(|(_, c, _)| c.abs()).sum()
            }
            Family::File { values, .. } => values.iter().fold(0.0f64, |m, v| m.max(v.abs())),
        }
    }

    /// A file-backed copy with the window reversed (n ↦ −n), for the
    /// reindexing-symmetry checks.
    pub fn reversed_copy(&self, half_width: i64) -> Result<PotentialSource> {
        let vals: Vec<f64> = (-half_width..=half_width)
            .rev()
            .map(|n| self.eval_unchecked(n))
            .collect();
        PotentialSource::from_values(vals, -half_width)
    }
}

fn frac(x: f64) -> f64 {
    let f = x - x.floor();
    if f >= 1.0 {
        0.0
    } else {
        f
    }
}

/// Sturmian indicator χ_{[1−α,1)}(θ + nα mod 1) with half-open convention.
/// Returns (0/1 value, distance of the phase to the nearest endpoint).
fn sturmian_indicator(alpha: &Frequency, theta: f64, n: i64) -> (f64, f64) {
    let (x, corr) = alpha.phase_dd(theta, n);
    let boundary = 1.0 - alpha.value();
    // endpoint distances: {1-alpha} and {0 ~ 1}
    let d_b = ((x - boundary) + corr).abs();
    let d_0 = (x + corr).min((1.0 - x) - corr).abs();
    let inside = (x - boundary) + corr >= 0.0 && x < 1.0;
    (if inside { 1.0 } else { 0.0 }, d_b.min(d_0))
}

// ---------------------------------------------------------------------------
// Repetition profiles
// ---------------------------------------------------------------------------

/// Defect profile of a candidate almost-period q.
///
/// `defect` is max over 1 ≤ j ≤ q and adjacent block pairs |k| ≤ k_range of
/// |V(j+kq) − V(j+(k±1)q)|; with k_range = 1 this is exactly the basic
/// repetition defect max |V(j) − V(j±q)|.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RepetitionProfile {
    pub q: i64,
    pub defect: f64,
    /// −log(defect)/q, +∞ when the defect vanishes.
    pub beta_of_q: f64,
    pub k_range_checked: i64,
    /// ε solving k_range = e^{εβq}/q at the measured β (finite β only).
    pub epsilon_witness: f64,
    /// Largest K ≤ k_range with zero defect over all pairs |k| ≤ K.
    pub zero_defect_k_range: i64,
    /// Sturmian evaluations that landed within 1e-14 of an indicator
    /// endpoint (discontinuous sampling warning).
    pub boundary_flags: usize,
}

/// Compute the repetition profile of `src` at period `q` over adjacent block
/// pairs |k| ≤ k_max.
pub fn repetition_defect(src: &PotentialSource, q: i64, k_max: i64) -> Result<RepetitionProfile> {
    if q < 1 {
        return Err(QpError::domain("q must be >= 1"));
    }
    if k_max < 1 {
        return Err(QpError::domain("k_max must be >= 1"));
    }
    let lo = 1 - (k_max) * q;
    let hi = q + k_max * q;
    if !src.contains(lo) || !src.contains(hi) {
        return Err(QpError::Range {
            context: format!("repetition defect at q = {q}, k_max = {k_max}"),
            required_lo: lo,
            required_hi: hi,
        });
    }

    let mut boundary_flags = 0usize;
    let value = |n: i64, flags: &mut usize| -> f64 {
        if let Family::Sturmian {
            lambda,
            alpha,
            theta,
        } = &src.family
        {
            let (ind, dist) = sturmian_indicator(alpha, *theta, n);
            if dist < STURMIAN_BOUNDARY_TOL {
                *flags += 1;
            }
            lambda * ind
        } else {
            src.eval_unchecked(n)
        }
    };

    // adjacent pairs (k, k+1) for k in [-k_max, k_max-1] cover both +/-
    // comparisons at every interior k and one-sided at the range ends
    let mut defect = 0.0f64;
    let mut zero_up_to = k_max;
    for k in -k_max..k_max {
        let mut level = 0.0f64;
        for j in 1..=q {
            let a = value(j + k * q, &mut boundary_flags);
            let b = value(j + (k + 1) * q, &mut boundary_flags);
            level = level.max((a - b).abs());
        }
        if level > 0.0 {
            // pair (k, k+1) involves blocks up to |k|+1
            let reach = k.abs().max((k + 1).abs());
            zero_up_to = zero_up_to.min(reach - 1);
        }
        defect = defect.max(level);
    }

    let beta_of_q = if defect == 0.0 {
        f64::INFINITY
    } else {
        -defect.ln() / q as f64
    };
    let epsilon_witness = if beta_of_q.is_finite() && beta_of_q > 0.0 {
        ((k_max * q) as f64).ln() / (beta_of_q * q as f64)
    } else if defect == 0.0 {
        f64::INFINITY
    } else {
        0.0
    };
    Ok(RepetitionProfile {
        q,
        defect,
        beta_of_q,
        k_range_checked: k_max,
        epsilon_witness,
        zero_defect_k_range: zero_up_to.max(0),
        boundary_flags,
    })
}

/// Profiles across a list of periods plus the certified β̂ summary (minimum
/// of β(q) over the tail half of the supplied list).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AlmostPeriodicityScan {
    pub profiles: Vec<RepetitionProfile>,
    /// min over the tail half of the supplied q-list of β(q); this is the
    /// certified exponent for the given sequence.
    pub beta_hat: f64,
}

pub fn almost_periodicity_scan(
    src: &PotentialSource,
    q_list: &[i64],
    k_max: i64,
) -> Result<AlmostPeriodicityScan> {
    let profiles: Vec<RepetitionProfile> = q_list
        .iter()
        .map(|&q| repetition_defect(src, q, k_max))
        .collect::<Result<_>>()?;
    let beta_hat = if profiles.is_empty() {
        f64::NAN
    } else {
        let tail = &profiles[profiles.len() / 2..];
        tail.iter().map(|p| p.beta_of_q).fold(f64::INFINITY, f64::min)
    };
    Ok(AlmostPeriodicityScan { profiles, beta_hat })
}

// ---------------------------------------------------------------------------
// Potential file format
// ---------------------------------------------------------------------------

/// Write the `qp-potential v1` text format: a header line with origin and
/// length, then one value per line.
pub fn write_potential<W: Write>(mut w: W, src: &PotentialSource, lo: i64, hi: i64) -> Result<()> {
    let len = hi - lo;
    writeln!(w, "# qp-potential v1 origin={lo} length={len}")?;
    for n in lo..hi {
        writeln!(w, "{:.17e}", src.eval(n)?)?;
    }
    Ok(())
}

/// Read the `qp-potential v1` format back into a file-backed source.
pub fn read_potential<R: BufRead>(r: R) -> Result<PotentialSource> {
    let mut lines = r.lines();
    let header = lines
        .next()
        .ok_or_else(|| QpError::Parse("empty potential file".into()))??;
    let mut origin = None;
    let mut length = None;
    if !header.starts_with("# qp-potential v1") {
        return Err(QpError::Parse(format!("bad header: {header}")));
    }
    for tok in header.split_whitespace() {
        if let Some(v) = tok.strip_prefix("origin=") {
            origin = Some(v.parse::<i64>().map_err(|e| QpError::Parse(e.to_string()))?);
        }
        if let Some(v) = tok.strip_prefix("length=") {
            length = Some(v.parse::<i64>().map_err(|e| QpError::Parse(e.to_string()))?);
        }
    }
    let origin = origin.ok_or_else(|| QpError::Parse("missing origin=".into()))?;
    let length = length.ok_or_else(|| QpError::Parse("missing length=".into()))?;
    let mut values = Vec::with_capacity(length.max(0) as usize);
    for line in lines {
        let line = line?;
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        let v: f64 = t.parse().map_err(|e: std::num::ParseFloatError| {
            QpError::Parse(format!("bad value `{t}`: {e}"))
        })?;
        if v.is_nan() {
            return Err(QpError::domain("potential file contains NaN"));
        }
        values.push(v);
    }
    if values.len() as i64 != length {
        return Err(QpError::Parse(format!(
            "expected {length} values, found {}",
            values.len()
        )));
    }
    PotentialSource::from_values(values, origin)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arithmetic::circle_dist;

    fn golden() -> Frequency {
        Frequency::golden(60)
    }

    #[test]
    fn amo_zero_coupling_is_free() {
        let src = PotentialSource::almost_mathieu(0.0, golden(), 0.3);
        for n in -20..20 {
            assert_eq!(src.eval(n).unwrap(), 0.0);
        }
    }

    #[test]
    fn amo_quarter_phase_vanishes_at_origin() {
        let src = PotentialSource::almost_mathieu(1.0, golden(), 0.25);
        // 2 cos(pi/2) = 0
        assert!(src.eval(0).unwrap().abs() < 1e-15);
    }

    #[test]
    fn sturmian_prefix_is_fibonacci_word() {
        let src = PotentialSource::sturmian(1.0, golden(), 0.0);
        let got: Vec<i32> = (1..=5).map(|n| src.eval(n).unwrap() as i32).collect();
        assert_eq!(got, vec![1, 0, 1, 1, 0]);

        // substitution oracle: 1 -> 10, 0 -> 1, fixed point from "1"
        let mut word = vec![1u8];
        while word.len() < 80 {
            word = word
                .iter()
                .flat_map(|&c| if c == 1 { vec![1, 0] } else { vec![1] })
                .collect();
        }
        for (i, &c) in word.iter().take(60).enumerate() {
            let v = src.eval(i as i64 + 1).unwrap() as u8;
            assert_eq!(v, c, "Fibonacci word mismatch at n = {}", i + 1);
        }
    }

    #[test]
    fn file_source_range_error() {
        let src = PotentialSource::from_values(vec![1.0, 2.0, 3.0], -1).unwrap();
        assert!(src.eval(-1).is_ok());
        assert!(src.eval(1).is_ok());
        assert!(src.eval(2).is_err());
        assert!(src.eval(-2).is_err());
    }

    #[test]
    fn rational_alpha_gives_exact_period() {
        // alpha = 3/8: AMO is exactly 8-periodic
        let alpha = Frequency::rational(3, 8).unwrap();
        let src = PotentialSource::almost_mathieu(1.3, alpha, 0.2);
        let profile = repetition_defect(&src, 8, 4).unwrap();
        assert_eq!(profile.defect, 0.0);
        assert!(profile.beta_of_q.is_infinite());
        assert_eq!(profile.zero_defect_k_range, 4);
    }

    #[test]
    fn constant_sequence_zero_defect_any_q() {
        let src = PotentialSource::custom_analytic(vec![(0, 2.5, 0.0)], golden(), 0.0);
        for q in [1, 3, 7] {
            let p = repetition_defect(&src, q, 2).unwrap();
            assert_eq!(p.defect, 0.0);
        }
    }

    #[test]
    fn amo_defect_bounded_by_mean_value_theorem() {
        // defect(q) <= 4 pi lambda ||q alpha||
        let lambda = 0.7;
        let freq = golden();
        let src = PotentialSource::almost_mathieu(lambda, freq.clone(), 0.37);
        for &q in &[5i64, 8, 13, 21, 34, 55] {
            let p = repetition_defect(&src, q, 1).unwrap();
            let qa = circle_dist(freq.phase(0.0, q));
            let bound = 4.0 * std::f64::consts::PI * lambda * qa;
            assert!(
                p.defect <= bound * (1.0 + 1e-9) + 1e-15,
                "q = {q}: defect {} > bound {bound}",
                p.defect
            );
        }
    }

    #[test]
    fn convergent_denominators_beat_neighbors() {
        // at golden convergent denominators the defect dips
        let src = PotentialSource::almost_mathieu(1.0, golden(), 0.37);
        let d13 = repetition_defect(&src, 13, 1).unwrap().defect;
        let d14 = repetition_defect(&src, 14, 1).unwrap().defect;
        let d12 = repetition_defect(&src, 12, 1).unwrap().defect;
        assert!(d13 < d12 && d13 < d14);
    }

    #[test]
    fn defect_symmetric_under_reversal() {
        let src = PotentialSource::almost_mathieu(1.0, golden(), 0.123);
        let rev = src.reversed_copy(400).unwrap();
        for &q in &[5i64, 8, 13] {
            let a = repetition_defect(&src, q, 2).unwrap().defect;
            let b = repetition_defect(&rev, q, 2).unwrap().defect;
            assert!(
                (a - b).abs() <= 1e-12 * (1.0 + a.abs()),
                "q = {q}: {a} vs {b}"
            );
        }
    }

    #[test]
    fn scan_empty_list_is_empty() {
        let src = PotentialSource::free();
        let scan = almost_periodicity_scan(&src, &[], 1).unwrap();
        assert!(scan.profiles.is_empty());
    }

    #[test]
    fn window_too_small_names_required_range() {
        let src = PotentialSource::from_values(vec![0.0; 10], 0).unwrap();
        let err = repetition_defect(&src, 4, 2).unwrap_err();
        match err {
            QpError::Range {
                required_lo,
                required_hi,
                ..
            } => {
                assert_eq!(required_lo, 1 - 8);
                assert_eq!(required_hi, 4 + 8);
            }
            other => panic!("expected range error, got {other:?}"),
        }
    }

    #[test]
    fn potential_file_round_trip() {
        let src = PotentialSource::almost_mathieu(1.0, golden(), 0.11);
        let mut buf = Vec::new();
        write_potential(&mut buf, &src, -5, 7).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("# qp-potential v1 origin=-5 length=12"));
        let back = read_potential(std::io::Cursor::new(buf)).unwrap();
        for n in -5..7 {
            assert_eq!(back.eval(n).unwrap(), src.eval(n).unwrap());
        }
    }

    #[test]
    fn nan_rejected_on_load() {
        let text = "# qp-potential v1 origin=0 length=2\n1.0\nNaN\n";
        assert!(read_potential(std::io::Cursor::new(text.as_bytes())).is_err());
    }

    #[test]
    fn skew_shift_is_deterministic_and_bounded() {
        let src = PotentialSource::skew_shift(1.0, golden(), 0.1234, 0.5);
        for n in -50..50 {
            let a = src.eval(n).unwrap();
            let b = src.eval(n).unwrap();
            assert_eq!(a, b);
            assert!(a.abs() <= 2.0);
        }
    }
}
