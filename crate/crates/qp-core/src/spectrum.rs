//! Periodic-approximant band spectra through the discriminant Tr A_q(E),
//! level-set measures with the polynomial level-set bound, shrunken-band
//! statistics, box-counting dimension of band unions, and the
//! localized-block density verifier.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cocycle::{norm_bound_lambda, LambdaReport, TransferChain};
use crate::error::{QpError, Result};
use crate::linalg::tridiag_eigen;
use crate::potential::PotentialSource;
use crate::scaling::ScalingFit;

/// Sampled discriminant of the period-q block: energies, Tr A_q values, and
/// the refined band edges (|Tr| = 2 crossings).
#[derive(Debug, Clone)]
pub struct Discriminant {
    pub q: i64,
    pub energies: Vec<f64>,
    /// Tr A_q at the grid nodes, saturated to ±1e300 on overflow.
    pub traces: Vec<f64>,
    pub edges: Vec<BandEdge>,
    pub e_range: (f64, f64),
    src: PotentialSource,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct BandEdge {
    pub energy: f64,
    /// width of the final bisection bracket
    pub residual: f64,
    /// true if |Tr| ≤ 2 to the right of the edge
    pub entering: bool,
}

/// Ordered union of disjoint closed band intervals.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BandSet {
    pub intervals: Vec<(f64, f64)>,
    pub total_measure: f64,
    pub q: i64,
}

impl BandSet {
    pub fn from_intervals(intervals: Vec<(f64, f64)>, q: i64) -> Self {
        let total_measure = intervals.iter().map(|(a, b)| b - a).sum();
        BandSet {
            intervals,
            total_measure,
            q,
        }
    }

    /// Uniform sample from the union, driven by the supplied RNG.
    pub fn sample_uniform(&self, rng: &mut impl Rng) -> Option<f64> {
        if self.total_measure <= 0.0 {
            return None;
        }
        let mut u: f64 = rng.gen_range(0.0..self.total_measure);
        for &(a, b) in &self.intervals {
            let w = b - a;
            if u <= w {
                return Some(a + u);
            }
            u -= w;
        }
        self.intervals.last().map(|&(_, b)| b)
    }

    /// Midpoints of the `count` widest bands, in energy order.
    pub fn widest_midpoints(&self, count: usize) -> Vec<f64> {
        let mut by_width: Vec<(f64, f64)> = self.intervals.clone();
        by_width.sort_by(|x, y| (y.1 - y.0).partial_cmp(&(x.1 - x.0)).unwrap());
        let mut mids: Vec<f64> = by_width
            .iter()
            .take(count)
            .map(|(a, b)| 0.5 * (a + b))
            .collect();
        mids.sort_by(|a, b| a.partial_cmp(b).unwrap());
        mids
    }
}

const TRACE_SATURATE: f64 = 1e300;

fn trace_at(chain: &TransferChain, q: i64, e: f64) -> f64 {
    let _ = e;
    match chain.product_scaled(q) {
        Ok(p) => {
            let (mant, logs) = p.trace_scaled();
            let lv = mant.abs().max(1e-300).ln() + logs;
            if lv > 690.0 {
                TRACE_SATURATE.copysign(mant)
            } else {
                mant * logs.exp()
            }
        }
        Err(_) => f64::NAN,
    }
}

fn eval_trace(src: &PotentialSource, q: i64, e: f64) -> f64 {
    let chain = TransferChain::new(src.clone(), e);
    trace_at(&chain, q, e)
}

impl Discriminant {
    /// Tr A_q at an arbitrary energy.
    pub fn trace(&self, e: f64) -> f64 {
        eval_trace(&self.src, self.q, e)
    }
}

/// Sample Tr A_q(E) over `grid` nodes (at least 4q; doubled up to 64q when
/// crossings stay unresolved) and refine every |Tr| = 2 crossing by
/// bisection to an edge residual of 1e-12·q.
pub fn discriminant(
    src: &PotentialSource,
    q: i64,
    e_range: (f64, f64),
    grid: usize,
) -> Result<Discriminant> {
    if q < 1 {
        return Err(QpError::domain("q must be >= 1"));
    }
    let needed = 2.0 + src.sup_norm();
    if e_range.0 > -needed || e_range.1 < needed {
        return Err(QpError::domain(format!(
            "energy range must cover [-{needed}, {needed}]"
        )));
    }
    let min_grid = (4 * q).max(16) as usize;
    let mut grid = grid.max(min_grid);
    let max_grid = (64 * q).max(1024) as usize;
    loop {
        let d = discriminant_at_grid(src, q, e_range, grid)?;
        let bands = count_bands(&d);
        if bands <= q as usize {
            return Ok(d);
        }
        if grid >= max_grid {
            return Err(QpError::numeric(format!(
                "grid of {grid} nodes cannot resolve the {bands} apparent bands (q = {q}); \
                 refinement request"
            )));
        }
        grid = (grid * 2).min(max_grid);
    }
}

fn discriminant_at_grid(
    src: &PotentialSource,
    q: i64,
    e_range: (f64, f64),
    grid: usize,
) -> Result<Discriminant> {
    let (lo, hi) = e_range;
    let step = (hi - lo) / (grid as f64 - 1.0);
    let energies: Vec<f64> = (0..grid).map(|i| lo + step * i as f64).collect();
    let traces: Vec<f64> = energies
        .par_iter()
        .map(|&e| eval_trace(src, q, e))
        .collect();
    if traces.iter().any(|t| t.is_nan()) {
        return Err(QpError::numeric("trace evaluation failed on the grid"));
    }

    // refine edges: indicator |Tr| <= 2 changes between adjacent nodes
    let tol = 1e-12 * q as f64;
    let inside = |t: f64| t.abs() <= 2.0;
    let mut edges = Vec::new();
    for i in 0..grid - 1 {
        let (a, b) = (energies[i], energies[i + 1]);
        let (ia, ib) = (inside(traces[i]), inside(traces[i + 1]));
        if ia == ib {
            continue;
        }
        let (mut x0, mut x1) = (a, b);
        // bisect on the indicator
        for _ in 0..80 {
            if x1 - x0 <= tol {
                break;
            }
            let mid = 0.5 * (x0 + x1);
            let im = inside(eval_trace(src, q, mid));
            if im == ia {
                x0 = mid;
            } else {
                x1 = mid;
            }
        }
        edges.push(BandEdge {
            energy: 0.5 * (x0 + x1),
            residual: x1 - x0,
            entering: ib,
        });
    }
    Ok(Discriminant {
        q,
        energies,
        traces,
        edges,
        e_range,
        src: src.clone(),
    })
}

fn count_bands(d: &Discriminant) -> usize {
    band_set(d).map(|b| b.intervals.len()).unwrap_or(usize::MAX)
}

/// Assemble the closed band intervals {E : |Tr A_q(E)| ≤ 2} from a refined
/// discriminant. Touching bands merge.
pub fn band_set(d: &Discriminant) -> Result<BandSet> {
    let inside = |t: f64| t.abs() <= 2.0;
    let mut intervals: Vec<(f64, f64)> = Vec::new();
    let mut open: Option<f64> = if inside(d.traces[0]) {
        Some(d.energies[0])
    } else {
        None
    };
    for edge in &d.edges {
        match (open, edge.entering) {
            (None, true) => open = Some(edge.energy),
            (Some(a), false) => {
                intervals.push((a, edge.energy));
                open = None;
            }
            // grid artifacts; bisection order keeps these consistent
            (Some(_), true) | (None, false) => {}
        }
    }
    if let Some(a) = open {
        intervals.push((a, *d.energies.last().unwrap()));
    }
    // merge intervals that touch within the refinement tolerance
    let tol = 1e-10 * d.q as f64;
    let mut merged: Vec<(f64, f64)> = Vec::new();
    for (a, b) in intervals {
        if let Some(last) = merged.last_mut() {
            if a - last.1 <= tol {
                last.1 = b;
                continue;
            }
        }
        merged.push((a, b));
    }
    if merged.is_empty() {
        return Err(QpError::numeric(
            "empty band set: real potentials have nonempty spectrum",
        ));
    }
    Ok(BandSet::from_intervals(merged, d.q))
}

// ---------------------------------------------------------------------------
// Level sets and the polynomial level-set bound
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LevelSetReport {
    pub a: f64,
    pub b: f64,
    pub measure: f64,
    /// 2·diam(zeros of Tr−a)·max{(b−a)/(ζ+a), √((b−a)/(ζ+a))}, when ζ exists
    pub bound: Option<f64>,
    pub zeta: Option<f64>,
    pub zero_diameter: Option<f64>,
    pub bound_applies: bool,
    pub note: Option<String>,
}

/// Lebesgue measure of {E ∈ range : lo < Tr A_q(E) < hi} from refined
/// crossings of the two levels.
pub fn level_set_measure(d: &Discriminant, lo: f64, hi: f64) -> Result<f64> {
    if !(lo < hi) {
        return Err(QpError::domain("need lo < hi"));
    }
    let inside = |t: f64| t > lo && t < hi;
    let mut measure = 0.0;
    let mut open: Option<f64> = if inside(d.traces[0]) {
        Some(d.energies[0])
    } else {
        None
    };
    let tol = 1e-13 * (d.e_range.1 - d.e_range.0);
    for i in 0..d.energies.len() - 1 {
        let (ia, ib) = (inside(d.traces[i]), inside(d.traces[i + 1]));
        if ia == ib {
            continue;
        }
        let (mut x0, mut x1) = (d.energies[i], d.energies[i + 1]);
        for _ in 0..90 {
            if x1 - x0 <= tol {
                break;
            }
            let mid = 0.5 * (x0 + x1);
            if inside(d.trace(mid)) == ia {
                x0 = mid;
            } else {
                x1 = mid;
            }
        }
        let cross = 0.5 * (x0 + x1);
        match open {
            None => open = Some(cross),
            Some(a) => {
                measure += cross - a;
                open = None;
            }
        }
    }
    if let Some(a) = open {
        measure += d.energies.last().unwrap() - a;
    }
    Ok(measure)
}

/// Measure of {E : a < Tr A_q(E) < b} together with the polynomial
/// level-set bound when the interior extrema are resolvable.
pub fn trace_level_set(d: &Discriminant, a: f64, b: f64) -> Result<LevelSetReport> {
    if !(0.0 <= a && a < b) {
        return Err(QpError::domain("need 0 <= a < b"));
    }
    let measure = level_set_measure(d, a, b)?;
    if d.q < 2 {
        return Ok(LevelSetReport {
            a,
            b,
            measure,
            bound: None,
            zeta: None,
            zero_diameter: None,
            bound_applies: false,
            note: Some("degree-1 discriminant has no interior extrema; bound skipped".into()),
        });
    }
    // interior extrema from the grid, refined by golden-section
    let mut extrema_values = Vec::new();
    for i in 1..d.energies.len() - 1 {
        let (t0, t1, t2) = (d.traces[i - 1], d.traces[i], d.traces[i + 1]);
        let is_max = t1 >= t0 && t1 >= t2;
        let is_min = t1 <= t0 && t1 <= t2;
        if !(is_max || is_min) {
            continue;
        }
        let v = refine_extremum(d, d.energies[i - 1], d.energies[i + 1], is_max);
        extrema_values.push(v);
    }
    if extrema_values.is_empty() {
        return Err(QpError::numeric(
            "extrema scan failed: grid too coarse to see any interior extremum",
        ));
    }
    let zeta = extrema_values.iter().map(|v| v.abs()).fold(f64::INFINITY, f64::min);

    // zeros of Tr - a
    let mut zeros = Vec::new();
    for i in 0..d.energies.len() - 1 {
        let (f0, f1) = (d.traces[i] - a, d.traces[i + 1] - a);
        if f0 == 0.0 {
            zeros.push(d.energies[i]);
        }
        if f0 * f1 < 0.0 {
            let (mut x0, mut x1) = (d.energies[i], d.energies[i + 1]);
            for _ in 0..80 {
                let mid = 0.5 * (x0 + x1);
                if (d.trace(mid) - a) * f0 > 0.0 {
                    x0 = mid;
                } else {
                    x1 = mid;
                }
            }
            zeros.push(0.5 * (x0 + x1));
        }
    }
    let (bound, diam) = if zeros.len() >= 2 {
        let diam = zeros.last().unwrap() - zeros.first().unwrap();
        let ratio = (b - a) / (zeta + a);
        let bound = 2.0 * diam * ratio.max(ratio.sqrt());
        (Some(bound), Some(diam))
    } else {
        (None, None)
    };
    let bound_applies = zeta >= 2.0 - 1e-9 && bound.is_some();
    Ok(LevelSetReport {
        a,
        b,
        measure,
        bound,
        zeta: Some(zeta),
        zero_diameter: diam,
        bound_applies,
        note: None,
    })
}

fn refine_extremum(d: &Discriminant, mut lo: f64, mut hi: f64, is_max: bool) -> f64 {
    const INVPHI: f64 = 0.618_033_988_749_894_9;
    let sign = if is_max { 1.0 } else { -1.0 };
    let mut x1 = hi - INVPHI * (hi - lo);
    let mut x2 = lo + INVPHI * (hi - lo);
    let mut f1 = sign * d.trace(x1);
    let mut f2 = sign * d.trace(x2);
    for _ in 0..60 {
        if hi - lo < 1e-12 {
            break;
        }
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INVPHI * (hi - lo);
            f2 = sign * d.trace(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INVPHI * (hi - lo);
            f1 = sign * d.trace(x1);
        }
    }
    sign * d.trace(0.5 * (lo + hi))
}

/// Measure of the shrunken-band set
/// S_q = {E : 0 < |Tr A_q ∓ 2| < delta}, assembled from the four level
/// windows around ±2.
pub fn shrunken_band_measure(d: &Discriminant, delta: f64) -> Result<f64> {
    if !(delta > 0.0) {
        return Err(QpError::domain("delta must be positive"));
    }
    let plus = level_set_measure(d, 2.0 - delta, 2.0 + delta)?;
    let minus = level_set_measure(d, -2.0 - delta, -2.0 + delta)?;
    Ok(plus + minus)
}

// ---------------------------------------------------------------------------
// Trace theorem verifier
// ---------------------------------------------------------------------------

/// How energies are drawn for the trace scan.
#[derive(Debug, Clone)]
pub enum EnergySampler {
    /// Uniform draws from a reference band set (spectral-weight proxy).
    ReferenceBands { bands: BandSet, samples: usize },
    /// Explicit energy list.
    Explicit(Vec<f64>),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TraceScanRow {
    pub k: usize,
    pub q_k: i64,
    pub threshold: f64,
    /// fraction of sampled energies with |Tr A_{q_k}| < threshold
    pub fraction: f64,
    pub samples: usize,
    /// the reference period did not dominate q_k; the spectral-weight proxy
    /// is unreliable at this scale
    pub proxy_degraded: bool,
}

/// For each convergent index k, the fraction of proxy-spectral energies
/// satisfying the strict ellipticity bound |Tr A_{q_k}(E)| < 2 − e^{−10Λq_k}.
pub fn verify_trace_theorem(
    src: &PotentialSource,
    freq: &crate::arithmetic::Frequency,
    k_range: &[usize],
    sampler: &EnergySampler,
    lambda: &LambdaReport,
    seed: u64,
) -> Result<Vec<TraceScanRow>> {
    let energies: Vec<f64> = match sampler {
        EnergySampler::Explicit(es) => es.clone(),
        EnergySampler::ReferenceBands { bands, samples } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..*samples)
                .filter_map(|_| bands.sample_uniform(&mut rng))
                .collect()
        }
    };
    if energies.is_empty() {
        return Err(QpError::domain("no sample energies"));
    }
    let ref_period = match sampler {
        EnergySampler::ReferenceBands { bands, .. } => bands.q,
        EnergySampler::Explicit(_) => i64::MAX,
    };

    let mut rows = Vec::new();
    for &k in k_range {
        if k >= freq.expansion.convergents.len() {
            return Err(QpError::domain(format!(
                "convergent index {k} beyond materialized depth"
            )));
        }
        let q_k = match num_traits::ToPrimitive::to_i64(freq.expansion.q(k)) {
            Some(q) if q >= 1 => q,
            _ => {
                return Err(QpError::Construction {
                    context: format!("q_{k} exceeds addressable transfer length"),
                    max_feasible_depth: k,
                })
            }
        };
        let threshold = 2.0 - (-10.0 * lambda.lambda * q_k as f64).exp();
        let ln_threshold = threshold.ln();
        let hits: usize = energies
            .par_iter()
            .map(|&e| {
                let chain = TransferChain::new(src.clone(), e);
                match chain.product_scaled(q_k) {
                    Ok(p) => {
                        let (mant, logs) = p.trace_scaled();
                        let log_abs_tr = mant.abs().max(1e-300).ln() + logs;
                        usize::from(log_abs_tr < ln_threshold)
                    }
                    Err(_) => 0,
                }
            })
            .sum();
        rows.push(TraceScanRow {
            k,
            q_k,
            threshold,
            fraction: hits as f64 / energies.len() as f64,
            samples: energies.len(),
            proxy_degraded: ref_period <= 4 * q_k,
        });
    }
    Ok(rows)
}

// ---------------------------------------------------------------------------
// Box-counting dimension
// ---------------------------------------------------------------------------

/// Box-counting dimension estimate of an interval union: counts δ-boxes
/// meeting the set at each scale and fits log N(δ) against log(1/δ).
pub fn box_dimension(bs: &BandSet, scales: &[f64]) -> Result<ScalingFit> {
    if bs.intervals.is_empty() || bs.total_measure <= 0.0 && bs.intervals.len() < 2 {
        return Err(QpError::domain("degenerate set for box counting"));
    }
    if scales.len() < 4 {
        return Err(QpError::domain("need at least 4 scales"));
    }
    let span = scales.iter().fold((f64::INFINITY, 0.0f64), |acc, &s| {
        (acc.0.min(s), acc.1.max(s))
    });
    if span.1 / span.0 < 99.0 {
        return Err(QpError::domain("scales must span at least two decades"));
    }
    let mut inv_scales = Vec::with_capacity(scales.len());
    let mut counts = Vec::with_capacity(scales.len());
    for &delta in scales {
        if !(delta > 0.0) {
            return Err(QpError::domain("scales must be positive"));
        }
        let mut n_boxes: u64 = 0;
        let mut last_idx: Option<i64> = None;
        for &(a, b) in &bs.intervals {
            let lo = (a / delta).floor() as i64;
            let hi = (b / delta).floor() as i64;
            let lo_eff = match last_idx {
                Some(prev) if prev >= lo => prev + 1,
                _ => lo,
            };
            if hi >= lo_eff {
                n_boxes += (hi - lo_eff + 1) as u64;
                last_idx = Some(hi);
            }
        }
        inv_scales.push(1.0 / delta);
        counts.push(n_boxes.max(1) as f64);
    }
    ScalingFit::fit(&inv_scales, &counts, 4.min(scales.len()))
}

/// Middle-thirds Cantor set approximation at the given construction depth,
/// as a band set on [0,1]. Test fixture for the dimension estimator.
pub fn cantor_middle_thirds(depth: u32) -> BandSet {
    let mut intervals = vec![(0.0f64, 1.0f64)];
    for _ in 0..depth {
        intervals = intervals
            .iter()
            .flat_map(|&(a, b)| {
                let w = (b - a) / 3.0;
                [(a, a + w), (b - w, b)]
            })
            .collect();
    }
    BandSet::from_intervals(intervals, 0)
}

// ---------------------------------------------------------------------------
// Localized-block density verifier
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BlockWitness {
    pub block_index: i64,
    pub block_start: i64,
    pub block_end: i64,
    /// site of the largest transfer norm in the block
    pub witness_j: i64,
    pub max_log_norm: f64,
    pub threshold_log: f64,
    pub exceeds: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BlockWitnessReport {
    pub witnesses: Vec<BlockWitness>,
    pub k_n: i64,
    pub c2: f64,
    pub d: i64,
    pub lyapunov: f64,
}

/// For each block [2Nq_n, 2(N+1)q_n) inside the window, report the largest
/// transfer norm and whether it exceeds e^{k_n L/16} with
/// k_n = ⌊c₂ q_n/(4d)⌋ − 1. c₂ defaults to the measured fraction of sampled
/// phases with ‖A_m‖² > e^{m L/2}; d defaults to 2.
pub fn verify_localized_blocks(
    src: &PotentialSource,
    energy: f64,
    q_n: i64,
    window_blocks: usize,
    c2_override: Option<f64>,
    d_param: Option<i64>,
) -> Result<BlockWitnessReport> {
    if q_n < 1 || window_blocks == 0 {
        return Err(QpError::domain("need q_n >= 1 and a nonempty window"));
    }
    let lyap = crate::cocycle::lyapunov_exponent(src, energy, (8 * q_n).max(256), 16)?;
    if !(lyap.value > 3.0 * lyap.std_error && lyap.value > 0.0) {
        return Err(QpError::domain(format!(
            "Lyapunov exponent {} +- {} not positive with 3-sigma margin",
            lyap.value, lyap.std_error
        )));
    }
    let d_param = d_param.unwrap_or(2);
    let c2 = match c2_override {
        Some(c) => c,
        None => {
            // fraction of sampled orbits with ||A_m||^2 > e^{m L / 2}
            let m = (q_n / 2).clamp(16, 512);
            let chain = TransferChain::new(src.clone(), energy);
            let shifts = 64;
            let mut hits = 0usize;
            for i in 0..shifts {
                let shift = i as i64 * (2 * m + 17);
                let log_norm = chain.product_shifted_scaled(m, shift)?.log_hs_norm();
                if 2.0 * log_norm > m as f64 * lyap.value / 2.0 {
                    hits += 1;
                }
            }
            (hits as f64 / shifts as f64).max(1.0 / shifts as f64)
        }
    };
    let k_n = ((c2 * q_n as f64 / (4.0 * d_param as f64)).floor() as i64 - 1).max(1);
    let threshold_log = k_n as f64 * lyap.value / 16.0;

    let chain = TransferChain::new(src.clone(), energy);
    let mut witnesses = Vec::new();
    for block in 0..window_blocks as i64 {
        let start = 2 * block * q_n;
        let end = 2 * (block + 1) * q_n;
        let mut best = (start, f64::NEG_INFINITY);
        // walk the cumulative product across the block
        let mut acc = chain.product_scaled(start)?;
        for j in start + 1..end {
            let step = crate::cocycle::Mat2::schrodinger_step(energy, src.eval_unchecked(j));
            acc = {
                let mut a = acc;
                a.matrix = step * a.matrix;
                let norm = a.matrix.hs_norm();
                if norm.is_finite() && norm > 0.0 && !(1e-100..=1e100).contains(&norm) {
                    a.matrix = a.matrix.scale(1.0 / norm);
                    a.log_scale += norm.ln();
                }
                a
            };
            let ln = acc.log_hs_norm();
            if ln > best.1 {
                best = (j, ln);
            }
        }
        witnesses.push(BlockWitness {
            block_index: block,
            block_start: start,
            block_end: end,
            witness_j: best.0,
            max_log_norm: best.1,
            threshold_log,
            exceeds: best.1 > threshold_log,
        });
    }
    Ok(BlockWitnessReport {
        witnesses,
        k_n,
        c2,
        d: d_param,
        lyapunov: lyap.value,
    })
}

// ---------------------------------------------------------------------------
// Dirichlet interlacing helper
// ---------------------------------------------------------------------------

/// Eigenvalues of the q-site Dirichlet truncation starting at site 1.
pub fn dirichlet_eigenvalues(src: &PotentialSource, q: i64) -> Result<Vec<f64>> {
    let d: Vec<f64> = (1..=q).map(|n| src.eval_unchecked(n)).collect();
    let e = vec![1.0; (q - 1).max(0) as usize];
    Ok(tridiag_eigen(&d, &e, false)?.values)
}

/// Measure Λ on the midpoints of a band set (the natural energy set for the
/// trace-theorem machinery).
pub fn lambda_on_bands(
    src: &PotentialSource,
    bands: &BandSet,
    count: usize,
    n_max: i64,
    n0: i64,
) -> Result<LambdaReport> {
    let energies = bands.widest_midpoints(count);
    norm_bound_lambda(src, &energies, n_max, n0, &[0, 311, -311])
}
