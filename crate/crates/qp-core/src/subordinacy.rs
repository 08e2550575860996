//! Half-line solutions with rotated boundary conditions, truncated norms,
//! the subordinacy length scale l(φ, ε), Weyl m-functions from truncated
//! resolvents, the whole-line Borel transform, and the spectral-dimension
//! estimator built on its ε ↓ 0 scaling.
//!
//! Conventions. Solutions carry boundary data (u₁, u₀) = (cos φ, −sin φ),
//! which satisfies u₀ cos φ + u₁ sin φ = 0; the orthogonal companion is
//! v^φ = u^{φ+π/2}. The Dirichlet m-function is m(z) = −f₁/f₀ for the
//! decaying solution f, and rotated boundary conditions act by the Möbius
//! map m_φ = (cos φ · m + sin φ)/(cos φ − sin φ · m). Under this pairing the
//! whole-line combination (m_φ m̃_{π/2−φ} − 1)/(m_φ + m̃_{π/2−φ}) is exactly
//! φ-independent and equals (m₊ + m₋)/(1 − m₊ m₋), the Borel transform of
//! the δ₀/δ₁ spectral measure.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{QpError, Result};
use crate::potential::PotentialSource;
use crate::scaling::ScalingFit;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Side {
    Right,
    Left,
}

/// A half-line solution of Hu = Eu stored in log-domain (sign and log|u|),
/// with prefix sums of |u|² kept as running log-sum-exp so norms never
/// overflow. Index i holds u(i) on the right side and u(−i) on the left.
#[derive(Debug, Clone)]
pub struct HalfLineSolution {
    pub phi: f64,
    pub side: Side,
    pub energy: f64,
    signs: Vec<i8>,
    log_abs: Vec<f64>,
    /// prefix_lse[k] = log Σ_{i ∈ norm range up to k} u(i)², following the
    /// side-specific norm convention
    prefix_lse: Vec<f64>,
}

fn lse(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

impl HalfLineSolution {
    /// u(n) on the right side / u(−n) on the left; ±inf if the magnitude
    /// overflows f64.
    pub fn value(&self, i: usize) -> f64 {
        self.signs[i] as f64 * self.log_abs[i].exp()
    }

    pub fn log_abs_value(&self, i: usize) -> f64 {
        self.log_abs[i]
    }

    pub fn len(&self) -> usize {
        self.log_abs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.log_abs.is_empty()
    }

    /// log ‖u‖²_l with the side-specific fractional convention:
    /// right: Σ_{n=1}^{[l]} u(n)² + (l−[l]) u([l]+1)²
    /// left:  Σ_{n=1}^{[l]−1} u(−n)² + (l−[l]) u(−[l])²
    pub fn log_norm_sq(&self, l: f64) -> Result<f64> {
        if l < 1.0 {
            return Err(QpError::domain("truncation length must be >= 1"));
        }
        let fl = l.floor();
        let li = fl as usize;
        let frac = l - fl;
        match self.side {
            Side::Right => {
                if li + 1 >= self.len() {
                    return Err(QpError::Range {
                        context: "truncated norm beyond computed range".into(),
                        required_lo: 0,
                        required_hi: li as i64 + 1,
                    });
                }
                let body = self.prefix_lse[li];
                if frac > 0.0 {
                    Ok(lse(body, frac.ln() + 2.0 * self.log_abs[li + 1]))
                } else {
                    Ok(body)
                }
            }
            Side::Left => {
                if li >= self.len() {
                    return Err(QpError::Range {
                        context: "truncated norm beyond computed range".into(),
                        required_lo: -(li as i64),
                        required_hi: 0,
                    });
                }
                let body = if li >= 1 {
                    self.prefix_lse[li - 1]
                } else {
                    f64::NEG_INFINITY
                };
                if frac > 0.0 {
                    Ok(lse(body, frac.ln() + 2.0 * self.log_abs[li]))
                } else {
                    Ok(body)
                }
            }
        }
    }

    /// ‖u‖_l as f64 (may overflow for strongly hyperbolic energies; prefer
    /// the log accessor in growth estimates).
    pub fn norm(&self, l: f64) -> Result<f64> {
        Ok((0.5 * self.log_norm_sq(l)?).exp())
    }
}

/// Solve Hu = Eu on a half-line with boundary phase φ:
/// (u₁, u₀) = (cos φ, −sin φ), recurrence u_{n+1} = (E − V(n)) u_n − u_{n−1}
/// on the right, mirrored through site 0 on the left.
pub fn solve_half_line(
    src: &PotentialSource,
    energy: f64,
    phi: f64,
    side: Side,
    n_max: usize,
) -> Result<HalfLineSolution> {
    if n_max < 2 {
        return Err(QpError::domain("n_max must be at least 2"));
    }
    let (u0, u1) = (-phi.sin(), phi.cos());
    let mut signs = Vec::with_capacity(n_max + 1);
    let mut log_abs = Vec::with_capacity(n_max + 1);
    let mut prefix_lse = Vec::with_capacity(n_max + 1);

    let push = |v: f64, scale_log: f64, signs: &mut Vec<i8>, log_abs: &mut Vec<f64>| {
        signs.push(if v > 0.0 {
            1
        } else if v < 0.0 {
            -1
        } else {
            0
        });
        log_abs.push(if v == 0.0 {
            f64::NEG_INFINITY
        } else {
            v.abs().ln() + scale_log
        });
    };

    // carry (prev, cur) in rescaled arithmetic; scale_log tracks the factor
    let mut scale_log = 0.0f64;
    let (mut prev, mut cur);
    match side {
        Side::Right => {
            prev = u0;
            cur = u1;
            push(u0, 0.0, &mut signs, &mut log_abs);
            prefix_lse.push(f64::NEG_INFINITY); // norm range starts at n = 1
            push(u1, 0.0, &mut signs, &mut log_abs);
            prefix_lse.push(2.0 * log_abs[1]);
            for n in 1..n_max as i64 {
                let v = src.eval(n)?;
                let next = (energy - v) * cur - prev;
                prev = cur;
                cur = next;
                let mag = cur.abs().max(prev.abs());
                if mag > 1e150 {
                    let s = mag.ln();
                    cur *= (-s).exp();
                    prev *= (-s).exp();
                    scale_log += s;
                }
                push(cur, scale_log, &mut signs, &mut log_abs);
                let idx = log_abs.len() - 1;
                prefix_lse.push(lse(prefix_lse[idx - 1], 2.0 * log_abs[idx]));
            }
        }
        Side::Left => {
            // step down from (u1, u0) using V(0), V(-1), …
            prev = u1;
            cur = u0;
            push(u0, 0.0, &mut signs, &mut log_abs);
            prefix_lse.push(f64::NEG_INFINITY); // left norm range starts at u(-1)
            for n in 0..n_max as i64 {
                let v = src.eval(-n)?;
                let next = (energy - v) * cur - prev;
                prev = cur;
                cur = next;
                let mag = cur.abs().max(prev.abs());
                if mag > 1e150 {
                    let s = mag.ln();
                    cur *= (-s).exp();
                    prev *= (-s).exp();
                    scale_log += s;
                }
                push(cur, scale_log, &mut signs, &mut log_abs);
                let idx = log_abs.len() - 1;
                prefix_lse.push(lse(prefix_lse[idx - 1], 2.0 * log_abs[idx]));
            }
        }
    }
    Ok(HalfLineSolution {
        phi,
        side,
        energy,
        signs,
        log_abs,
        prefix_lse,
    })
}

/// ‖u‖_l with the exact fractional-part convention of the solution's side.
pub fn truncated_norm(sol: &HalfLineSolution, l: f64) -> Result<f64> {
    sol.norm(l)
}

// ---------------------------------------------------------------------------
// The subordinacy length scale
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LengthScale {
    pub phi: f64,
    pub epsilon: f64,
    pub l: f64,
    /// |‖u‖·‖v‖ − 1/(2ε)| at the returned l
    pub residual: f64,
}

/// Solve ‖u^φ‖_l · ‖v^φ‖_l = 1/(2ε) for l by bisection on the strictly
/// increasing product. The required range is bounded by [l] ≤ 1/ε + 1.
pub fn jl_length(
    src: &PotentialSource,
    energy: f64,
    phi: f64,
    epsilon: f64,
    side: Side,
) -> Result<LengthScale> {
    if !(epsilon > 0.0) {
        return Err(QpError::domain("epsilon must be positive"));
    }
    let l_cap = 1.0 / epsilon + 3.0;
    if l_cap > 5e7 {
        return Err(QpError::Range {
            context: format!("epsilon = {epsilon} needs l up to {l_cap:.3e}; extend-range request"),
            required_lo: 0,
            required_hi: l_cap as i64,
        });
    }
    let n_max = l_cap as usize + 2;
    let u = solve_half_line(src, energy, phi, side, n_max)?;
    let v = solve_half_line(src, energy, phi + std::f64::consts::FRAC_PI_2, side, n_max)?;
    jl_length_from_solutions(&u, &v, epsilon)
}

/// Same as [`jl_length`] for already-computed solutions.
pub fn jl_length_from_solutions(
    u: &HalfLineSolution,
    v: &HalfLineSolution,
    epsilon: f64,
) -> Result<LengthScale> {
    let target = -(2.0 * epsilon).ln(); // log(1/(2 eps))
    let product = |l: f64| -> Result<f64> {
        Ok(0.5 * (u.log_norm_sq(l)? + v.log_norm_sq(l)?))
    };
    let l_max = (u.len().min(v.len()) - 2) as f64;
    let mut lo = 1.0f64;
    let mut hi = l_max;
    if product(hi)? < target {
        return Err(QpError::Range {
            context: "computed range too short for requested epsilon".into(),
            required_lo: 0,
            required_hi: (2.0 * l_max) as i64,
        });
    }
    if product(lo)? >= target {
        hi = lo; // l = 1 already saturates; degenerate but well-defined
    }
    for _ in 0..200 {
        if hi - lo < 1e-12 * hi.max(1.0) {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if product(mid)? < target {
            lo = mid;
        } else {
            hi = mid;
        }
        let val = product(0.5 * (lo + hi))?;
        if (val - target).abs() <= (2e-8f64).ln_1p().abs() {
            break;
        }
    }
    let l = 0.5 * (lo + hi);
    let achieved = product(l)?;
    let residual = (achieved.exp() - target.exp()).abs();
    if residual > 1e-8 / epsilon {
        return Err(QpError::numeric(format!(
            "length-scale residual {residual:.3e} exceeds tolerance at epsilon = {epsilon}"
        )));
    }
    Ok(LengthScale {
        phi: u.phi,
        epsilon,
        l,
        residual,
    })
}

// ---------------------------------------------------------------------------
// m-functions
// ---------------------------------------------------------------------------

/// Dirichlet m-function of the right (or left) half line, from the backward
/// Riccati recursion of the truncated operator. The truncation starts at
/// 8/Im z sites and doubles until the value moves by < 1e-8 relative.
pub fn m_dirichlet(src: &PotentialSource, z: Complex64, side: Side) -> Result<Complex64> {
    if z.im < 1e-12 {
        return Err(QpError::domain("need Im z >= 1e-12"));
    }
    let site = |j: i64| -> f64 {
        match side {
            Side::Right => src.eval_unchecked(j),
            // reflected operator potential Ṽ(j) = V(1 − j)
            Side::Left => src.eval_unchecked(1 - j),
        }
    };
    let mut n = ((8.0 / z.im).ceil() as usize).clamp(32, 1 << 27);
    let mut prev: Option<Complex64> = None;
    loop {
        // w_k = f_k / f_{k-1}: w_k = 1 / (z - V(k) - w_{k+1}),
        // seeded with the free decaying tail at depth n
        let disc = (z * z - 4.0).sqrt();
        let mut w_tail = (z - disc) * 0.5;
        if w_tail.norm() > 1.0 {
            w_tail = (z + disc) * 0.5;
        }
        let mut w = w_tail;
        for k in (1..=n as i64).rev() {
            w = Complex64::new(1.0, 0.0) / (z - site(k) - w);
        }
        let m = -w;
        if let Some(p) = prev {
            if (m - p).norm() < 1e-8 * m.norm() {
                if m.im <= 0.0 {
                    return Err(QpError::numeric(format!(
                        "m-function lost the Herglotz property at z = {z}"
                    )));
                }
                return Ok(m);
            }
        }
        prev = Some(m);
        if n >= (1 << 27) {
            return Err(QpError::Truncation {
                context: format!("m-function at z = {z}"),
                reached: n,
                residual: prev.map(|p| p.norm()).unwrap_or(f64::NAN),
            });
        }
        n *= 2;
    }
}

/// m-function for the rotated boundary condition φ:
/// m_φ = (cos φ · m + sin φ)/(cos φ − sin φ · m).
pub fn m_rotate(m: Complex64, phi: f64) -> Complex64 {
    let (s, c) = phi.sin_cos();
    (m * c + s) / (Complex64::new(c, 0.0) - m * s)
}

/// Half-line Weyl m-function with boundary phase φ.
pub fn m_function_half_line(
    src: &PotentialSource,
    z: Complex64,
    phi: f64,
    side: Side,
) -> Result<Complex64> {
    let m = m_dirichlet(src, z, side)?;
    let m_phi = m_rotate(m, phi);
    if m_phi.im <= 0.0 {
        return Err(QpError::numeric(format!(
            "rotated m-function lost the Herglotz property at z = {z}, phi = {phi}"
        )));
    }
    Ok(m_phi)
}

/// Whole-line Borel transform via
/// M = (m_φ m̃_{π/2−φ} − 1)/(m_φ + m̃_{π/2−φ}), evaluated at φ = 0 and
/// cross-checked at φ = π/4 (≤ 1e-6 relative disagreement) plus the
/// sup_φ |m_φ| domination on a φ grid.
pub fn whole_line_m(src: &PotentialSource, z: Complex64) -> Result<Complex64> {
    if z.im <= 0.0 {
        return Err(QpError::domain("need Im z > 0"));
    }
    let m_plus = m_dirichlet(src, z, Side::Right)?;
    let m_minus = m_dirichlet(src, z, Side::Left)?;
    let combine = |phi: f64| -> Complex64 {
        let a = m_rotate(m_plus, phi);
        let b = m_rotate(m_minus, std::f64::consts::FRAC_PI_2 - phi);
        (a * b - 1.0) / (a + b)
    };
    let m0 = combine(0.0);
    let m4 = combine(std::f64::consts::FRAC_PI_4);
    let disagreement = (m0 - m4).norm() / m0.norm().max(1e-300);
    if disagreement > 1e-6 {
        return Err(QpError::numeric(format!(
            "whole-line m phi-independence violated: relative disagreement {disagreement:.3e}"
        )));
    }
    if m0.im <= 0.0 {
        return Err(QpError::numeric("whole-line m lost the Herglotz property"));
    }
    // domination by the half-line sup over a phi grid
    let sup_m = (0..8)
        .map(|i| {
            let phi = -std::f64::consts::FRAC_PI_2 + (i as f64 + 0.5) * std::f64::consts::PI / 8.0;
            m_rotate(m_plus, phi).norm()
        })
        .fold(0.0f64, f64::max);
    if m0.norm() > sup_m * (1.0 + 1e-6) + 1e-9 {
        return Err(QpError::numeric(format!(
            "|M| = {} exceeds sup_phi |m_phi| = {sup_m}",
            m0.norm()
        )));
    }
    Ok(m0)
}

// ---------------------------------------------------------------------------
// Spectral dimension
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpectralDimensionEstimate {
    /// log-log fit of |M(E+iε)| against ε with window diagnostics
    pub fit: ScalingFit,
    pub gamma_grid: Vec<f64>,
    /// per-γ running minimum of ε^{1−γ}|M| over the finest 60% of the grid
    /// (finite-scale liminf proxy)
    pub running_min: Vec<f64>,
    /// largest γ on the grid whose liminf proxy is non-divergent
    /// (window slope of log|M| vs log ε ≥ γ − 1 somewhere in the tail)
    pub s_hat: f64,
    pub max_tail_slope: f64,
}

/// Estimate the upper spectral dimension at E from the ε ↓ 0 behavior of
/// |M(E+iε)| along a geometric grid.
pub fn spectral_dimension_estimate(
    src: &PotentialSource,
    energy: f64,
    eps_grid: &[f64],
    gamma_grid: &[f64],
) -> Result<SpectralDimensionEstimate> {
    if eps_grid.len() < 12 {
        return Err(QpError::domain("epsilon grid needs at least 12 points"));
    }
    let (lo, hi) = eps_grid
        .iter()
        .fold((f64::INFINITY, 0.0f64), |acc, &e| (acc.0.min(e), acc.1.max(e)));
    if hi / lo < 999.0 {
        return Err(QpError::domain("epsilon grid must span at least 3 decades"));
    }
    let mut eps: Vec<f64> = eps_grid.to_vec();
    eps.sort_by(|a, b| b.partial_cmp(a).unwrap()); // coarse to fine
    let values: Vec<f64> = eps
        .iter()
        .map(|&e| Ok(whole_line_m(src, Complex64::new(energy, e))?.norm()))
        .collect::<Result<_>>()?;
    let fit = ScalingFit::fit(&eps, &values, 4)?;

    // tail = finest 60% of the grid
    let tail_start = eps.len() - (eps.len() * 6).div_ceil(10);
    let tail_eps = &eps[tail_start..];
    let tail_vals = &values[tail_start..];

    // max window slope of log|M| vs log eps over 4-point tail windows
    let w = 4.min(tail_eps.len());
    let mut max_slope = f64::NEG_INFINITY;
    for s in 0..=(tail_eps.len() - w) {
        let xs: Vec<f64> = tail_eps[s..s + w].iter().map(|e| e.ln()).collect();
        let ys: Vec<f64> = tail_vals[s..s + w].iter().map(|v| v.ln()).collect();
        let (slope, _) = crate::scaling::least_squares(&xs, &ys);
        max_slope = max_slope.max(slope);
    }

    let running_min: Vec<f64> = gamma_grid
        .iter()
        .map(|&g| {
            tail_eps
                .iter()
                .zip(tail_vals)
                .map(|(&e, &v)| e.powf(1.0 - g) * v)
                .fold(f64::INFINITY, f64::min)
        })
        .collect();

    let mut s_hat = 0.0;
    for &g in gamma_grid {
        if max_slope >= g - 1.0 - 1e-12 && g > s_hat {
            s_hat = g;
        }
    }
    Ok(SpectralDimensionEstimate {
        fit,
        gamma_grid: gamma_grid.to_vec(),
        running_min,
        s_hat,
        max_tail_slope: max_slope,
    })
}

/// Default γ grid for the spectral-dimension estimator: 0.05 … 1.00.
pub fn default_gamma_grid() -> Vec<f64> {
    (1..=20).map(|i| i as f64 * 0.05).collect()
}

// ---------------------------------------------------------------------------
// Sub-linear growth diagnostic
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SublinearGrowthRow {
    pub phi: f64,
    /// sup over the l grid of ‖u‖_l / (l^{1/2} log l), right solution
    pub sup_right: f64,
    /// same for the left solution
    pub sup_left: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SublinearGrowthReport {
    pub rows: Vec<SublinearGrowthRow>,
    /// φ minimizing max(sup_right, sup_left): the candidate
    /// generalized-eigenfunction boundary phase
    pub best_phi: f64,
    pub best_value: f64,
}

/// Scan the sub-linear growth functional sup_l ‖u^φ‖_l/(√l · log l) over a
/// φ grid, for both half lines.
pub fn sublinear_growth_check(
    src: &PotentialSource,
    energy: f64,
    l_grid: &[f64],
    phi_points: usize,
) -> Result<SublinearGrowthReport> {
    if l_grid.is_empty() {
        return Err(QpError::domain("empty l grid"));
    }
    let l_max = l_grid.iter().cloned().fold(0.0, f64::max);
    let n_max = l_max as usize + 2;
    let phi_points = phi_points.max(2);
    let mut rows = Vec::with_capacity(phi_points);
    for i in 0..phi_points {
        let phi = -std::f64::consts::FRAC_PI_2
            + (i as f64 + 0.5) * std::f64::consts::PI / phi_points as f64;
        let score = |side: Side| -> Result<f64> {
            let sol = solve_half_line(src, energy, phi, side, n_max)?;
            let mut sup: f64 = 0.0;
            for &l in l_grid {
                if l < 2.0 {
                    continue;
                }
                // log-domain: log ||u||_l - log(sqrt(l) log l)
                let log_val = 0.5 * sol.log_norm_sq(l)? - 0.5 * l.ln() - l.ln().ln();
                sup = sup.max(log_val.exp());
            }
            Ok(sup)
        };
        rows.push(SublinearGrowthRow {
            phi,
            sup_right: score(Side::Right)?,
            sup_left: score(Side::Left)?,
        });
    }
    let best = rows
        .iter()
        .min_by(|a, b| {
            let va = a.sup_right.max(a.sup_left);
            let vb = b.sup_right.max(b.sup_left);
            va.partial_cmp(&vb).unwrap()
        })
        .unwrap();
    Ok(SublinearGrowthReport {
        best_phi: best.phi,
        best_value: best.sup_right.max(best.sup_left),
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arithmetic::Frequency;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    const JL_LO: f64 = 0.10102051443364424; // 5 - sqrt(24)
    const JL_HI: f64 = 9.898979485566356; // 5 + sqrt(24)

    #[test]
    fn free_dirichlet_solution_pattern() {
        // V = 0, E = 0, phi = 0: u = (0, 1, 0, -1, 0, 1, …)
        let sol = solve_half_line(&PotentialSource::free(), 0.0, 0.0, Side::Right, 12).unwrap();
        let expect = [0.0, 1.0, 0.0, -1.0, 0.0, 1.0, 0.0, -1.0];
        for (i, &e) in expect.iter().enumerate() {
            assert!(
                (sol.value(i) - e).abs() < 1e-14,
                "u({i}) = {} vs {e}",
                sol.value(i)
            );
        }
    }

    #[test]
    fn wronskian_constant() {
        let src = PotentialSource::almost_mathieu(1.0, Frequency::golden(40), 0.3);
        for &phi in &[0.0, 0.4, -0.7, 1.2] {
            let u = solve_half_line(&src, 0.5, phi, Side::Right, 200).unwrap();
            let v = solve_half_line(
                &src,
                0.5,
                phi + std::f64::consts::FRAC_PI_2,
                Side::Right,
                200,
            )
            .unwrap();
            for n in 0..150 {
                let w = u.value(n + 1) * v.value(n) - u.value(n) * v.value(n + 1);
                assert!((w - -1.0).abs() < 1e-10, "W at n = {n}, phi = {phi}: {w}");
            }
        }
    }

    #[test]
    fn truncated_norm_hand_values() {
        // constant potential file with u = (1,1,1,…): V = E - 2 … easier to
        // inject a file's worth of ones directly through a crafted solution:
        // V(n) = 2, E = 3 gives u_{n+1} = u_n - u_{n-1}… instead test the
        // exact convention on the free pattern
        let sol = solve_half_line(&PotentialSource::free(), 0.0, 0.0, Side::Right, 12).unwrap();
        // u = (0,1,0,-1,0,1,…): ||u||^2 at integer l sums u(1..l)^2
        let n4 = truncated_norm(&sol, 4.0).unwrap();
        assert!((n4 * n4 - 2.0).abs() < 1e-12);
        // l = 2.5: 1 + 0.5 * u(3)^2 = 1.5
        let n25 = truncated_norm(&sol, 2.5).unwrap();
        assert!((n25 * n25 - 1.5).abs() < 1e-12);
    }

    #[test]
    fn truncated_norm_all_ones_example() {
        // l = 2.5 with u ≡ 1 gives 2 + 0.5
        let vals = vec![1.0; 64];
        let src = PotentialSource::from_values(vals, -32).unwrap();
        // V = 1, E = 3: u_{n+1} = 2 u_n - u_{n-1}; with (u1,u0) = (1,1) this
        // stays 1 forever… boundary (cos φ, −sin φ) with φ = −π/4 scaled: use
        // direct construction instead
        let mut sol = solve_half_line(&src, 3.0, 0.0, Side::Right, 10).unwrap();
        // overwrite with the constant-one pattern for the convention test
        for i in 0..sol.log_abs.len() {
            sol.signs[i] = 1;
            sol.log_abs[i] = 0.0;
        }
        for i in 1..sol.prefix_lse.len() {
            sol.prefix_lse[i] = (i as f64).ln();
        }
        let n = truncated_norm(&sol, 2.5).unwrap();
        assert!((n * n - 2.5).abs() < 1e-12);
    }

    #[test]
    fn norm_monotone_in_l() {
        let src = PotentialSource::almost_mathieu(0.7, Frequency::golden(40), 0.2);
        let sol = solve_half_line(&src, 0.3, 0.5, Side::Right, 500).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..100 {
            let l1: f64 = rng.gen_range(1.0..400.0);
            let l2: f64 = rng.gen_range(1.0..400.0);
            let (a, b) = if l1 <= l2 { (l1, l2) } else { (l2, l1) };
            assert!(
                truncated_norm(&sol, a).unwrap() <= truncated_norm(&sol, b).unwrap() + 1e-12
            );
        }
    }

    #[test]
    fn half_line_matches_tridiagonal_solve() {
        // forward recurrence vs direct linear solve of the truncated system
        let src = PotentialSource::almost_mathieu(1.0, Frequency::golden(40), 0.11);
        let e = 0.4;
        let n = 64usize;
        let sol = solve_half_line(&src, e, 0.0, Side::Right, n + 1).unwrap();
        // (H - E) u = 0 with u(0) = 0, u(1) = 1 fixed: solve rows 1..n-1
        // forward substitution is exactly the recurrence; verify row residuals
        for site in 1..n as i64 {
            let r = sol.value(site as usize + 1) + sol.value(site as usize - 1)
                + (src.eval(site).unwrap() - e) * sol.value(site as usize);
            assert!(r.abs() < 1e-10, "residual {r} at site {site}");
        }
    }

    #[test]
    fn jl_length_free_scales_like_inverse_epsilon() {
        let free = PotentialSource::free();
        let l1 = jl_length(&free, 0.0, 0.0, 1e-2, Side::Right).unwrap();
        let l2 = jl_length(&free, 0.0, 0.0, 5e-3, Side::Right).unwrap();
        assert!(
            (l1.l * 1e-2 - 1.0).abs() < 0.2,
            "l(1e-2) = {} not ~ 1/eps",
            l1.l
        );
        // halving epsilon strictly increases l
        assert!(l2.l > l1.l);
        // uv0 lower bound at the returned scale
        let u = solve_half_line(&free, 0.0, 0.0, Side::Right, l1.l as usize + 3).unwrap();
        let v = solve_half_line(
            &free,
            0.0,
            std::f64::consts::FRAC_PI_2,
            Side::Right,
            l1.l as usize + 3,
        )
        .unwrap();
        let prod = u.norm(l1.l).unwrap() * v.norm(l1.l).unwrap();
        assert!(prod >= (l1.l.floor() - 1.0) / 2.0 - 1e-9);
    }

    #[test]
    fn m_free_closed_form() {
        // V = 0: m(z) = (-z + sqrt(z^2-4))/2 on the Im > 0 branch;
        // m(i) = i (sqrt 5 - 1)/2
        let free = PotentialSource::free();
        let m = m_dirichlet(&free, Complex64::new(0.0, 1.0), Side::Right).unwrap();
        let want = Complex64::new(0.0, (5.0f64.sqrt() - 1.0) / 2.0);
        assert!((m - want).norm() < 1e-8, "m(i) = {m} vs {want}");
        let m_left = m_dirichlet(&free, Complex64::new(0.0, 1.0), Side::Left).unwrap();
        assert!((m_left - want).norm() < 1e-8);
    }

    #[test]
    fn m_herglotz_random() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let golden = Frequency::golden(40);
        for _ in 0..60 {
            let lambda: f64 = rng.gen_range(0.0..2.0);
            let theta: f64 = rng.gen_range(0.0..1.0);
            let src = PotentialSource::almost_mathieu(lambda, golden.clone(), theta);
            let z = Complex64::new(rng.gen_range(-4.0..4.0), rng.gen_range(1e-3..1.0));
            let m = m_dirichlet(&src, z, Side::Right).unwrap();
            assert!(m.im > 0.0);
            let phi: f64 = rng.gen_range(-1.5..1.5);
            let mp = m_function_half_line(&src, z, phi, Side::Right).unwrap();
            assert!(mp.im > 0.0);
        }
    }

    #[test]
    fn whole_line_m_free_closed_form() {
        // M(i) = (m+ + m-)/(1 - m+ m-) = 2/sqrt(5) i for V = 0
        let free = PotentialSource::free();
        let m = whole_line_m(&free, Complex64::new(0.0, 1.0)).unwrap();
        let want = Complex64::new(0.0, 2.0 / 5.0f64.sqrt());
        assert!((m - want).norm() < 1e-7, "M(i) = {m} vs {want}");
    }

    #[test]
    fn whole_line_m_phi_independent_by_construction() {
        let src = PotentialSource::almost_mathieu(1.0, Frequency::golden(40), 0.37);
        let m_plus = m_dirichlet(&src, Complex64::new(0.3, 1e-2), Side::Right).unwrap();
        let m_minus = m_dirichlet(&src, Complex64::new(0.3, 1e-2), Side::Left).unwrap();
        let combine = |phi: f64| {
            let a = m_rotate(m_plus, phi);
            let b = m_rotate(m_minus, std::f64::consts::FRAC_PI_2 - phi);
            (a * b - 1.0) / (a + b)
        };
        let base = combine(0.0);
        for &phi in &[0.2, 0.5, std::f64::consts::FRAC_PI_4, 1.1, -0.9] {
            let other = combine(phi);
            assert!(
                (other - base).norm() / base.norm() < 1e-10,
                "phi = {phi}: {other} vs {base}"
            );
        }
    }

    #[test]
    fn jl_inequality_free_and_amo() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let golden = Frequency::golden(40);
        for case in 0..40 {
            let src = match case % 3 {
                0 => PotentialSource::free(),
                1 => PotentialSource::almost_mathieu(1.0, golden.clone(), 0.3),
                _ => PotentialSource::sturmian(0.8, golden.clone(), 0.21),
            };
            let e: f64 = rng.gen_range(-1.8..1.8);
            let eps: f64 = 10f64.powf(rng.gen_range(-4.0..-1.0));
            let phi: f64 = rng.gen_range(-1.4..1.4);
            let scale = jl_length(&src, e, phi, eps, Side::Right).unwrap();
            let n_max = scale.l as usize + 3;
            let u = solve_half_line(&src, e, phi, Side::Right, n_max).unwrap();
            let v = solve_half_line(
                &src,
                e,
                phi + std::f64::consts::FRAC_PI_2,
                Side::Right,
                n_max,
            )
            .unwrap();
            let ratio =
                (0.5 * (u.log_norm_sq(scale.l).unwrap() - v.log_norm_sq(scale.l).unwrap())).exp();
            let m = m_function_half_line(&src, Complex64::new(e, eps), phi, Side::Right).unwrap();
            let lo = JL_LO / m.norm();
            let hi = JL_HI / m.norm();
            assert!(
                ratio > lo && ratio < hi,
                "case {case}: ratio {ratio} outside ({lo}, {hi}) at E={e}, eps={eps}, phi={phi}"
            );
        }
    }

    #[test]
    fn spectral_dimension_free_is_one() {
        let free = PotentialSource::free();
        let eps: Vec<f64> = crate::scaling::geometric_grid(1e-4, 1e-1, 16);
        let est = spectral_dimension_estimate(&free, 0.0, &eps, &default_gamma_grid()).unwrap();
        assert!(
            (est.s_hat - 1.0).abs() <= 0.05,
            "free spectral dimension {} not 1.0 +- 0.05",
            est.s_hat
        );
    }

    #[test]
    fn spectral_dimension_at_isolated_eigenvalue() {
        // single impurity V(0) = 5: bound state at E0 = sign * sqrt(V^2+4)…
        // locate it as the eigenvalue of a big truncation, then |M| ~ w/eps
        let mut vals = vec![0.0f64; 2049];
        vals[1024] = 5.0;
        let src = PotentialSource::from_values(vals, -1024).unwrap();
        let d: Vec<f64> = (-512..=512).map(|n| src.eval_unchecked(n)).collect();
        let e = vec![1.0; d.len() - 1];
        let eig = crate::linalg::tridiag_eigen(&d, &e, false).unwrap();
        let e0 = *eig
            .values
            .iter()
            .max_by(|a, b| a.partial_cmp(b).unwrap())
            .unwrap();
        assert!(e0 > 2.5, "impurity eigenvalue {e0} should sit above the band");
        let eps: Vec<f64> = crate::scaling::geometric_grid(1e-5, 1e-1, 16);
        let est = spectral_dimension_estimate(&src, e0, &eps, &default_gamma_grid()).unwrap();
        assert!(
            est.s_hat <= 0.1,
            "point-spectrum dimension {} should be ~0",
            est.s_hat
        );
    }

    #[test]
    fn sublinear_growth_free_vs_hyperbolic() {
        let free = PotentialSource::free();
        let l_grid: Vec<f64> = (4..12).map(|k| (1u64 << k) as f64).collect();
        let inside = sublinear_growth_check(&free, 0.5, &l_grid, 8).unwrap();
        let outside = sublinear_growth_check(&free, 3.0, &l_grid, 8).unwrap();
        // generic phi at hyperbolic E grows exponentially
        let worst_outside = outside
            .rows
            .iter()
            .map(|r| r.sup_right)
            .fold(0.0f64, f64::max);
        let worst_inside = inside
            .rows
            .iter()
            .map(|r| r.sup_right)
            .fold(0.0f64, f64::max);
        assert!(
            worst_outside > 1e3 * worst_inside.max(1e-6),
            "hyperbolic growth not detected: {worst_outside} vs {worst_inside}"
        );
    }

    #[test]
    fn left_norm_convention_index_shift() {
        // left norm sums u(-1)…u(-([l]-1)) plus fractional u(-[l])
        let src = PotentialSource::free();
        let sol = solve_half_line(&src, 0.0, 0.3, Side::Left, 12).unwrap();
        let l = 4.5f64;
        let direct: f64 = (1..=3).map(|n| sol.value(n) * sol.value(n)).sum::<f64>()
            + 0.5 * sol.value(4) * sol.value(4);
        let got = truncated_norm(&sol, l).unwrap();
        assert!(
            (got * got - direct).abs() < 1e-12,
            "left norm {} vs {direct}",
            got * got
        );
    }
}
