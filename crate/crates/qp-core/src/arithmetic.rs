//! Continued-fraction arithmetic for frequencies α ∈ (0,1).
//!
//! Everything downstream (almost-periodicity scans, trace scans, the
//! Liouville-frequency experiments) consumes an irrational frequency through
//! its continued-fraction expansion rather than through a bare float. A
//! float entry point exists, but its certified depth is limited by the input
//! precision; constructed frequencies carry exact arbitrary-precision
//! quotients.

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use std::fmt;

use crate::error::{QpError, Result};

/// Natural log of a positive big integer, via bit length plus a 64-bit
/// mantissa. Relative error ~1e-15, good enough for every exponent estimate.
pub fn ln_biguint(x: &BigUint) -> f64 {
    if x.is_zero() {
        return f64::NEG_INFINITY;
    }
    let bits = x.bits();
    if bits <= 53 {
        return x.to_f64().unwrap().ln();
    }
    let shift = bits - 53;
    let top: BigUint = x >> shift;
    let mantissa = top.to_f64().unwrap();
    mantissa.ln() + (shift as f64) * std::f64::consts::LN_2
}

/// Nearest integer to e^y as a big integer.
///
/// For y small enough that e^y fits a 53-bit mantissa the rounding is exact.
/// Beyond that the result carries the top 53 significant bits (built as
/// m·2^k), which keeps log-domain quantities exact to ~1e-15 relative.
pub fn exp_round_biguint(y: f64) -> Result<BigUint> {
    if !y.is_finite() || y < 0.0 {
        return Err(QpError::domain(format!("exp_round: bad exponent {y}")));
    }
    if y < 36.0 {
        // e^36 < 2^53, so f64 rounding is exact integer rounding
        return Ok(BigUint::from(y.exp().round() as u64));
    }
    let t = y * std::f64::consts::LOG2_E;
    let m = t.floor();
    let f = t - m;
    let mant = (f.exp2() * (1u64 << 52) as f64).round() as u64;
    let shift = m as u64 - 52;
    Ok(BigUint::from(mant) << shift)
}

/// Continued-fraction data for a frequency α ∈ (0,1): partial quotients
/// a_1..a_N and the convergents p_n/q_n they generate.
///
/// Invariants (checked in tests): the recurrences
/// q_{n+1} = a_{n+1} q_n + q_{n-1}, p_{n+1} = a_{n+1} p_n + p_{n-1}
/// hold exactly in integer arithmetic, gcd(p_n, q_n) = 1, and
/// |α − p_n/q_n| < 1/(q_n q_{n+1}).
#[derive(Debug, Clone)]
pub struct FrequencyExpansion {
    /// Partial quotients a_1..a_N (arbitrary precision: Liouville bursts
    /// overflow u64 immediately).
    pub partial_quotients: Vec<BigUint>,
    /// Convergents (p_n, q_n) for n = 0..M with p_0/q_0 = 0/1. May be
    /// shallower than the quotient list when entries grow beyond
    /// `convergent_bit_cap`.
    pub convergents: Vec<(BigUint, BigUint)>,
    /// Number of partial quotients.
    pub depth: usize,
    /// Depth actually certified/achieved (float inputs exhaust precision).
    pub achieved_depth: usize,
    /// The input was rational and the expansion terminated exactly.
    pub rational: bool,
}

const CONVERGENT_BIT_CAP: u64 = 1 << 30;

impl FrequencyExpansion {
    fn from_quotients_capped(quotients: Vec<BigUint>, rational: bool) -> Self {
        let mut convergents = Vec::with_capacity(quotients.len() + 1);
        convergents.push((BigUint::zero(), BigUint::one()));
        let (mut p_prev, mut q_prev) = (BigUint::one(), BigUint::zero());
        for a in &quotients {
            let (p_last, q_last) = convergents.last().unwrap().clone();
            let p_next = a * &p_last + &p_prev;
            let q_next = a * &q_last + &q_prev;
            if q_next.bits() > CONVERGENT_BIT_CAP {
                break;
            }
            p_prev = p_last;
            q_prev = q_last;
            convergents.push((p_next, q_next));
        }
        let depth = quotients.len();
        FrequencyExpansion {
            partial_quotients: quotients,
            convergents,
            depth,
            achieved_depth: depth,
            rational,
        }
    }

    /// Build from explicit quotients (all ≥ 1).
    pub fn from_quotients(quotients: Vec<BigUint>) -> Result<Self> {
        if quotients.is_empty() {
            return Err(QpError::domain("empty quotient list"));
        }
        if quotients.iter().any(|a| a.is_zero()) {
            return Err(QpError::domain("partial quotients must be positive"));
        }
        Ok(Self::from_quotients_capped(quotients, false))
    }

    pub fn from_quotients_u64(quotients: &[u64]) -> Result<Self> {
        Self::from_quotients(quotients.iter().map(|&a| BigUint::from(a)).collect())
    }

    /// Convergent q_n (n = 0 is the seed 0/1).
    pub fn q(&self, n: usize) -> &BigUint {
        &self.convergents[n].1
    }

    pub fn p(&self, n: usize) -> &BigUint {
        &self.convergents[n].0
    }

    /// Number of computed convergents beyond the 0/1 seed.
    pub fn convergent_depth(&self) -> usize {
        self.convergents.len() - 1
    }

    /// log q_n for n up to `depth`, extended past the materialized
    /// convergents in log domain (needed when burst quotients outgrow the
    /// exact representation).
    pub fn log_q(&self, n: usize) -> f64 {
        if n < self.convergents.len() {
            return ln_biguint(self.q(n));
        }
        let m = self.convergents.len() - 1;
        let mut lq_prev = ln_biguint(self.q(m - 1));
        let mut lq = ln_biguint(self.q(m));
        for k in m..n {
            let la = ln_biguint(&self.partial_quotients[k]);
            let big = la + lq;
            let next = big + (lq_prev - big).exp().ln_1p();
            lq_prev = lq;
            lq = next;
        }
        lq
    }

    /// α as f64 from the deepest materialized convergent.
    pub fn value_f64(&self) -> f64 {
        let (p, q) = self.convergents.last().unwrap();
        big_ratio_f64(p, q)
    }

    /// α as a double-double (hi, lo) pair, accurate to ~2^-106 when the
    /// expansion is deep enough. The pair comes from the deepest convergent.
    pub fn value_dd(&self) -> (f64, f64) {
        let (p, q) = self.convergents.last().unwrap();
        big_ratio_dd(p, q)
    }

    /// Index of the deepest convergent with q_n ≤ cap, if any n ≥ 1 qualifies.
    pub fn deepest_convergent_below(&self, cap: u64) -> Option<usize> {
        let cap = BigUint::from(cap);
        (1..self.convergents.len())
            .rev()
            .find(|&n| self.q(n) <= &cap)
    }
}

fn big_ratio_f64(p: &BigUint, q: &BigUint) -> f64 {
    // align to 64-bit mantissas to dodge overflow for huge p, q
    let bp = p.bits() as i64;
    let bq = q.bits() as i64;
    if bp <= 52 && bq <= 52 {
        return p.to_f64().unwrap() / q.to_f64().unwrap();
    }
    let sp = (bp - 52).max(0) as u64;
    let sq = (bq - 52).max(0) as u64;
    let tp = (p >> sp).to_f64().unwrap();
    let tq = (q >> sq).to_f64().unwrap();
    (tp / tq) * 2f64.powi((sp as i64 - sq as i64) as i32)
}

fn big_ratio_dd(p: &BigUint, q: &BigUint) -> (f64, f64) {
    let hi = big_ratio_f64(p, q);
    // r = p - hi*q computed exactly; lo = r/q
    let (mant, exp) = split_f64(hi);
    // hi = mant * 2^exp with mant i64
    let mut hi_times_q = BigInt::from(q.clone()) * BigInt::from(mant);
    if exp >= 0 {
        hi_times_q <<= exp as u64;
    }
    let mut r = BigInt::from(p.clone());
    if exp < 0 {
        r <<= (-exp) as u64;
    }
    let num = r - hi_times_q;
    let mut den = BigInt::from(q.clone());
    if exp < 0 {
        den <<= (-exp) as u64;
    }
    let lo = big_int_ratio_f64(&num, &den);
    (hi, lo)
}

fn big_int_ratio_f64(p: &BigInt, q: &BigInt) -> f64 {
    let sign = if p.is_negative() { -1.0 } else { 1.0 };
    sign * big_ratio_f64(p.magnitude(), q.magnitude())
}

/// Decompose a finite positive f64 into (mantissa, exponent) with
/// value = mantissa * 2^exponent and mantissa an integer.
fn split_f64(x: f64) -> (i64, i64) {
    if x == 0.0 {
        return (0, 0);
    }
    let bits = x.to_bits();
    let exp_field = ((bits >> 52) & 0x7ff) as i64;
    let frac = (bits & ((1u64 << 52) - 1)) as i64;
    let sign = if bits >> 63 == 1 { -1 } else { 1 };
    if exp_field == 0 {
        (sign * frac, -1074)
    } else {
        (sign * (frac | (1 << 52)), exp_field - 1075)
    }
}

// ---------------------------------------------------------------------------
// Expansion entry points
// ---------------------------------------------------------------------------

/// Exact continued-fraction expansion of a rational p/q ∈ (0,1) by the
/// Euclidean algorithm. Flagged rational.
pub fn cf_expand_rational(p: &BigUint, q: &BigUint) -> Result<FrequencyExpansion> {
    if p.is_zero() || p >= q {
        return Err(QpError::domain("rational frequency must lie in (0,1)"));
    }
    let mut quotients = Vec::new();
    let (mut num, mut den) = (q.clone(), p.clone());
    // alpha = 0 + 1/(num/den) repeatedly
    while !den.is_zero() {
        let (quo, rem) = num.div_rem(&den);
        quotients.push(quo);
        num = den;
        den = rem;
    }
    // The leading quotient of q/p is a_1 since alpha < 1.
    Ok(FrequencyExpansion::from_quotients_capped(quotients, true))
}

/// Continued-fraction expansion of a float frequency.
///
/// The input is treated as α ± ulp/2; the expansions of both interval ends
/// are run in exact (dyadic rational) arithmetic and the certified common
/// prefix is returned. If precision runs out before `depth`, the result is
/// truncated with `achieved_depth < depth`. If the remainder terminates in
/// the certified range the input is flagged rational.
pub fn cf_expand(alpha: f64, depth: usize) -> Result<FrequencyExpansion> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(QpError::domain(format!(
            "frequency must lie in (0,1), got {alpha}"
        )));
    }
    if depth < 1 {
        return Err(QpError::domain("depth must be at least 1"));
    }
    let (mant, exp) = split_f64(alpha);
    // alpha = mant / 2^(-exp), exp < 0 for alpha in (0,1)
    let shift = (-exp) as u64;
    let two_k = BigUint::one() << shift;
    let m = BigUint::from(mant as u64);
    let lo_num = &m * 2u32 - 1u32; // (mant - 1/2) * 2
    let hi_num = &m * 2u32 + 1u32;
    let lo_den = &two_k * 2u32;
    let q_lo = cf_quotients_exact(&lo_num, &lo_den, depth + 1);
    let q_hi = cf_quotients_exact(&hi_num, &lo_den, depth + 1);

    let mut quotients = Vec::new();
    let mut rational = false;
    for i in 0..depth {
        match (q_lo.get(i), q_hi.get(i)) {
            (Some(a), Some(b)) if a == b => quotients.push(a.clone()),
            (None, None) => {
                rational = true;
                break;
            }
            _ => break,
        }
    }
    if quotients.is_empty() {
        return Err(QpError::numeric(
            "no certified quotients at input precision",
        ));
    }
    let achieved = quotients.len();
    let mut exp = FrequencyExpansion::from_quotients_capped(quotients, rational);
    exp.depth = depth.min(if rational { achieved } else { depth });
    exp.achieved_depth = achieved;
    Ok(exp)
}

fn cf_quotients_exact(p: &BigUint, q: &BigUint, max: usize) -> Vec<BigUint> {
    let mut out = Vec::new();
    let (mut num, mut den) = (q.clone(), p.clone());
    while !den.is_zero() && out.len() < max {
        let (quo, rem) = num.div_rem(&den);
        out.push(quo);
        num = den;
        den = rem;
    }
    out
}

// ---------------------------------------------------------------------------
// Exponent estimates
// ---------------------------------------------------------------------------

/// A limsup/liminf estimate read off a sample sequence through a tail window.
///
/// `limsup_estimate` is the max (and `liminf_estimate` the min) of the last
/// `window` samples; the paper-side quantities are tail objects, so early
/// transient samples are excluded.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExponentEstimate {
    pub values: Vec<f64>,
    pub limsup_estimate: f64,
    pub liminf_estimate: f64,
    pub depth_used: usize,
    pub window: usize,
}

impl ExponentEstimate {
    fn from_values(values: Vec<f64>, window: Option<usize>) -> Result<Self> {
        if values.is_empty() {
            return Err(QpError::InsufficientData("no samples".into()));
        }
        let default_window = values.len().div_ceil(2);
        let window = window.unwrap_or(default_window).clamp(1, values.len());
        let tail = &values[values.len() - window..];
        let limsup = tail.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let liminf = tail.iter().cloned().fold(f64::INFINITY, f64::min);
        Ok(ExponentEstimate {
            depth_used: values.len(),
            limsup_estimate: limsup,
            liminf_estimate: liminf,
            values,
            window,
        })
    }
}

/// Estimate β(α) = limsup log(q_{n+1})/q_n from an expansion.
///
/// `window` overrides the default tail window of ⌈len/2⌉ samples.
pub fn beta_exponent(exp: &FrequencyExpansion, window: Option<usize>) -> Result<ExponentEstimate> {
    if exp.depth < 3 {
        return Err(QpError::InsufficientData(
            "beta exponent needs depth >= 3".into(),
        ));
    }
    let n_samples = exp.depth - 1;
    let mut values = Vec::with_capacity(n_samples);
    let mut log_qs = Vec::with_capacity(exp.depth + 1);
    for n in 0..=exp.depth {
        log_qs.push(exp.log_q(n));
    }
    for n in 1..exp.depth {
        let q_n = log_qs[n].exp();
        values.push(if q_n.is_finite() && q_n > 0.0 {
            log_qs[n + 1] / q_n
        } else {
            // q_n too large for f64: the ratio is indistinguishable from 0
            0.0
        });
    }
    ExponentEstimate::from_values(values, window)
}

/// Estimate the quotient growth exponents
/// K_* = liminf (∏ a_i)^{1/k} and K^* = limsup (∏ a_i)^{1/k}.
///
/// Returned in log domain: the estimates are ln K, exponentiate to recover K.
pub fn k_exponents(
    exp: &FrequencyExpansion,
    window: Option<usize>,
) -> Result<(ExponentEstimate, ExponentEstimate)> {
    if exp.depth < 3 {
        return Err(QpError::InsufficientData(
            "k exponents need depth >= 3".into(),
        ));
    }
    let mut values = Vec::with_capacity(exp.depth);
    let mut acc = 0.0;
    for (k, a) in exp.partial_quotients.iter().enumerate() {
        acc += ln_biguint(a);
        values.push(acc / (k + 1) as f64);
    }
    let est = ExponentEstimate::from_values(values, window)?;
    let lower = ExponentEstimate {
        values: est.values.clone(),
        limsup_estimate: est.liminf_estimate,
        liminf_estimate: est.liminf_estimate,
        depth_used: est.depth_used,
        window: est.window,
    };
    let upper = ExponentEstimate {
        limsup_estimate: est.limsup_estimate,
        liminf_estimate: est.limsup_estimate,
        values: est.values,
        depth_used: est.depth_used,
        window: est.window,
    };
    Ok((lower, upper))
}

// ---------------------------------------------------------------------------
// Liouville construction
// ---------------------------------------------------------------------------

/// Cap on the bit size of a single burst quotient (64 MiB of limbs). The
/// construction is doubly exponential, so this bound is what decides how
/// many bursts are materializable.
pub const MAX_BURST_BITS: u64 = 1 << 29;

/// Build a frequency with prescribed Liouville exponent β₀.
///
/// Quotients are all 1 up to index n0; at indices n_k + 1 (with
/// n_k = q_{n_0} + q_{n_1} + … + q_{n_{k-1}} computed from the actual
/// convergents, bursts included) the quotient is round(e^{β₀ q_{n_k}}).
/// Along this sequence log q_{n_k+1}/q_{n_k} → β₀ and the running geometric
/// mean of the quotients at k = n_j tends to e^{β₀}.
///
/// The growth is doubly exponential: a burst whose quotient would exceed
/// [`MAX_BURST_BITS`] aborts construction with the max feasible depth. The
/// expansion is materialized to depth 2·n_last so the default tail window of
/// the exponent estimators starts at the last burst.
pub fn construct_liouville_alpha(
    beta0: f64,
    n0: usize,
    bursts: usize,
) -> Result<FrequencyExpansion> {
    if !(beta0 > 0.0) {
        return Err(QpError::domain("beta0 must be positive"));
    }
    if n0 < 5 {
        return Err(QpError::domain("n0 must be at least 5"));
    }
    if bursts < 1 {
        return Err(QpError::domain("bursts must be at least 1"));
    }

    let mut quotients: Vec<BigUint> = vec![BigUint::one(); n0];
    // convergents alongside, to read q_{n_k} as we go
    let mut q_seq: Vec<BigUint> = vec![BigUint::one()]; // q_0 = 1
    let mut q_prev = BigUint::zero(); // q_{-1}
    for a in &quotients {
        let q_new = a * q_seq.last().unwrap() + &q_prev;
        q_prev = q_seq.last().unwrap().clone();
        q_seq.push(q_new);
    }

    let mut n_k = n0;
    let mut sum_q: BigUint = BigUint::zero();
    let mut done = 0usize;
    while done < bursts {
        // burst at index n_k + 1 with a = round(e^{beta0 * q_{n_k}})
        let q_nk = q_seq[n_k].clone();
        // beta0 * q_nk in bits is beta0*q*log2(e); guard before computing
        if q_nk.bits() > 60
            || beta0 * q_nk.to_f64().unwrap_or(f64::INFINITY) * std::f64::consts::LOG2_E
                > MAX_BURST_BITS as f64
        {
            return if done == 0 {
                Err(QpError::Construction {
                    context: format!("first burst quotient needs more than {MAX_BURST_BITS} bits"),
                    max_feasible_depth: quotients.len(),
                })
            } else {
                // earlier bursts succeeded; return what is materializable
                finish_liouville(quotients, q_seq)
            };
        }
        let y = beta0 * q_nk.to_f64().unwrap();
        let a_burst = exp_round_biguint(y)?;
        if a_burst < BigUint::from(2u32) {
            return Err(QpError::domain(format!(
                "beta0 = {beta0} too small: burst quotient at q = {q_nk} rounds to 1"
            )));
        }
        // extend the all-ones run up to n_k, then place the burst
        while quotients.len() < n_k {
            quotients.push(BigUint::one());
            let q_new = q_seq.last().unwrap() + &q_prev;
            q_prev = q_seq.last().unwrap().clone();
            q_seq.push(q_new);
        }
        sum_q += q_nk;
        quotients.push(a_burst.clone());
        let q_new = &a_burst * q_seq.last().unwrap() + &q_prev;
        q_prev = q_seq.last().unwrap().clone();
        q_seq.push(q_new);
        done += 1;

        // next burst position
        match (&sum_q).to_usize() {
            Some(next) if next > n_k && done < bursts => n_k = next,
            _ => {
                // done, or the next position is beyond any materializable index
                return finish_liouville(quotients, q_seq);
            }
        }
    }
    finish_liouville(quotients, q_seq)
}

fn finish_liouville(
    mut quotients: Vec<BigUint>,
    mut q_seq: Vec<BigUint>,
) -> Result<FrequencyExpansion> {
    // pad with ones so that the default ⌈len/2⌉ tail window opens at the
    // last burst sample
    let last_burst = quotients
        .iter()
        .rposition(|a| a > &BigUint::one())
        .unwrap_or(quotients.len() - 1);
    let target = 2 * (last_burst + 1);
    let mut q_prev = q_seq[q_seq.len() - 2].clone();
    while quotients.len() < target {
        quotients.push(BigUint::one());
        let q_new = q_seq.last().unwrap() + &q_prev;
        q_prev = q_seq.last().unwrap().clone();
        q_seq.push(q_new);
    }
    FrequencyExpansion::from_quotients(quotients)
}

// ---------------------------------------------------------------------------
// Diophantine phase test
// ---------------------------------------------------------------------------

/// Result of scanning ‖θ + mα‖ ≥ γ/(|m|+1)^τ over |m| ≤ m_max.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DiophantineReport {
    pub holds: bool,
    /// m minimizing ‖θ+mα‖·(|m|+1)^τ
    pub worst_m: i64,
    /// the minimized value; the inequality holds iff this is ≥ γ
    pub worst_value: f64,
    pub gamma: f64,
    pub tau: f64,
    pub m_max: i64,
}

/// Check the α-Diophantine condition on a phase θ by exhaustive scan.
pub fn is_alpha_diophantine_phase(
    theta: f64,
    freq: &Frequency,
    gamma: f64,
    tau: f64,
    m_max: i64,
) -> Result<DiophantineReport> {
    if m_max < 1 {
        return Err(QpError::domain("m_max must be >= 1"));
    }
    if !(gamma > 0.0) || !(tau > 1.0) {
        return Err(QpError::domain("need gamma > 0 and tau > 1"));
    }
    let mut worst_m = 0i64;
    let mut worst = f64::INFINITY;
    for m in -m_max..=m_max {
        let phase = freq.phase(theta, m);
        let dist = circle_dist(phase);
        let value = dist * ((m.abs() + 1) as f64).powf(tau);
        if value < worst {
            worst = value;
            worst_m = m;
        }
    }
    Ok(DiophantineReport {
        holds: worst >= gamma,
        worst_m,
        worst_value: worst,
        gamma,
        tau,
        m_max,
    })
}

/// Distance from a point of [0,1) to the nearest integer.
pub fn circle_dist(x: f64) -> f64 {
    let f = x - x.floor();
    f.min(1.0 - f)
}

// ---------------------------------------------------------------------------
// Frequency: expansion + fast phase evaluation
// ---------------------------------------------------------------------------

/// A frequency with its expansion and a double-double representation used
/// for phase arithmetic θ + nα mod 1 at large |n| without precision loss.
#[derive(Debug, Clone)]
pub struct Frequency {
    pub expansion: FrequencyExpansion,
    hi: f64,
    lo: f64,
}

impl Frequency {
    pub fn new(expansion: FrequencyExpansion) -> Self {
        let (hi, lo) = expansion.value_dd();
        Frequency { expansion, hi, lo }
    }

    /// Golden mean (√5−1)/2 = [0;1,1,1,…].
    pub fn golden(depth: usize) -> Self {
        Self::new(FrequencyExpansion::from_quotients(vec![BigUint::one(); depth.max(3)]).unwrap())
    }

    /// Silver mean √2−1 = [0;2,2,2,…].
    pub fn silver(depth: usize) -> Self {
        Self::new(
            FrequencyExpansion::from_quotients(vec![BigUint::from(2u32); depth.max(3)]).unwrap(),
        )
    }

    pub fn liouville(beta0: f64, n0: usize, bursts: usize) -> Result<Self> {
        Ok(Self::new(construct_liouville_alpha(beta0, n0, bursts)?))
    }

    pub fn from_f64(alpha: f64, depth: usize) -> Result<Self> {
        Ok(Self::new(cf_expand(alpha, depth)?))
    }

    pub fn rational(p: u64, q: u64) -> Result<Self> {
        Ok(Self::new(cf_expand_rational(
            &BigUint::from(p),
            &BigUint::from(q),
        )?))
    }

    pub fn value(&self) -> f64 {
        self.hi
    }

    pub fn dd(&self) -> (f64, f64) {
        (self.hi, self.lo)
    }

    /// θ + nα mod 1 ∈ [0,1), with the n·α product carried in doubled
    /// precision so phases stay accurate to ~2^-50 for |n| up to 2^40.
    pub fn phase(&self, theta: f64, n: i64) -> f64 {
        let nf = n as f64;
        let p = nf * self.hi;
        let err = nf.mul_add(self.hi, -p); // exact FMA residual
        let frac_p = p - p.floor();
        let corr = err + nf * self.lo + theta;
        let mut x = frac_p + (corr - corr.floor());
        x -= x.floor();
        if x >= 1.0 {
            x -= 1.0;
        }
        x
    }

    /// Same phase with an explicit correction term, for boundary-sensitive
    /// comparisons (Sturmian indicator): returns (phase, dd-correction).
    pub fn phase_dd(&self, theta: f64, n: i64) -> (f64, f64) {
        let nf = n as f64;
        let p = nf * self.hi;
        let err = nf.mul_add(self.hi, -p);
        let frac_p = p - p.floor();
        let corr = err + nf * self.lo + theta;
        let corr_frac = corr - corr.floor();
        let mut x = frac_p + corr_frac;
        let mut rem = (frac_p - (x - corr_frac)) + corr_frac - (x - (x - corr_frac));
        // cheap two-sum cleanup
        if x >= 1.0 {
            x -= 1.0;
        }
        if x < 0.0 {
            x += 1.0;
            rem = 0.0;
        }
        (x, rem)
    }
}

/// Parse a frequency preset: `golden`, `silver`,
/// `liouville:beta=B[,n0=N][,bursts=K]`, `cf:[a1,a2,…]`, `P/Q`, or a float.
pub fn parse_frequency(spec: &str) -> Result<Frequency> {
    let spec = spec.trim();
    if spec == "golden" {
        return Ok(Frequency::golden(64));
    }
    if spec == "silver" {
        return Ok(Frequency::silver(48));
    }
    if let Some(rest) = spec.strip_prefix("liouville:") {
        let mut beta = None;
        let mut n0 = 5usize;
        let mut bursts = 2usize;
        for part in rest.split(',') {
            let (key, value) = part
                .split_once('=')
                .ok_or_else(|| QpError::Parse(format!("bad liouville parameter `{part}`")))?;
            match key.trim() {
                "beta" => beta = Some(value.trim().parse::<f64>().map_err(parse_err)?),
                "n0" => n0 = value.trim().parse::<usize>().map_err(parse_err)?,
                "bursts" => bursts = value.trim().parse::<usize>().map_err(parse_err)?,
                other => return Err(QpError::Parse(format!("unknown key `{other}`"))),
            }
        }
        let beta = beta.ok_or_else(|| QpError::Parse("liouville needs beta=".into()))?;
        return Frequency::liouville(beta, n0, bursts);
    }
    if let Some(rest) = spec.strip_prefix("cf:") {
        let rest = rest.trim_start_matches('[').trim_end_matches(']');
        let quotients: Vec<u64> = rest
            .split(',')
            .map(|t| t.trim().parse::<u64>().map_err(parse_err))
            .collect::<Result<_>>()?;
        return Ok(Frequency::new(FrequencyExpansion::from_quotients_u64(
            &quotients,
        )?));
    }
    if let Some((p, q)) = spec.split_once('/') {
        let p: u64 = p.trim().parse().map_err(parse_err)?;
        let q: u64 = q.trim().parse().map_err(parse_err)?;
        return Frequency::rational(p, q);
    }
    let alpha: f64 = spec.parse().map_err(parse_err)?;
    Frequency::from_f64(alpha, 48)
}

fn parse_err<E: fmt::Display>(e: E) -> QpError {
    QpError::Parse(e.to_string())
}

// ---------------------------------------------------------------------------
// JSON form (quotients and convergents as decimal strings)
// ---------------------------------------------------------------------------

const SERIALIZE_BIT_CAP: u64 = 1 << 17;

#[derive(Serialize, Deserialize)]
struct ExpansionJson {
    partial_quotients: Vec<String>,
    convergents: Vec<(String, String)>,
    depth: usize,
    achieved_depth: usize,
    rational: bool,
}

impl Serialize for FrequencyExpansion {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        if self
            .partial_quotients
            .iter()
            .any(|a| a.bits() > SERIALIZE_BIT_CAP)
        {
            return Err(serde::ser::Error::custom(
                "expansion quotients too large for decimal serialization",
            ));
        }
        ExpansionJson {
            partial_quotients: self.partial_quotients.iter().map(|a| a.to_string()).collect(),
            convergents: self
                .convergents
                .iter()
                .map(|(p, q)| (p.to_string(), q.to_string()))
                .collect(),
            depth: self.depth,
            achieved_depth: self.achieved_depth,
            rational: self.rational,
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for FrequencyExpansion {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = ExpansionJson::deserialize(d)?;
        let parse = |s: &str| {
            s.parse::<BigUint>()
                .map_err(|e| serde::de::Error::custom(format!("bad integer `{s}`: {e}")))
        };
        let quotients = raw
            .partial_quotients
            .iter()
            .map(|s| parse(s))
            .collect::<std::result::Result<Vec<_>, _>>()?;
        let mut exp = FrequencyExpansion::from_quotients_capped(quotients, raw.rational);
        exp.depth = raw.depth;
        exp.achieved_depth = raw.achieved_depth;
        // trust the recomputed convergents over the serialized ones
        Ok(exp)
    }
}
