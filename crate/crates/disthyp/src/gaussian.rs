//! Closed-form rate-exponent bounds for the scalar Gaussian problems: the
//! correlated-pair inner/outer bounds with the D1/D2/D3 classification of
//! the correlation pair, and the many-help-one / CEO / one-helper regions.
//!
//! Everything is reported in bits; natural-log closed forms carry an
//! explicit `log2(e)` factor so the discrete and Gaussian modules agree on
//! units.

use crate::measures::LOG2_E;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum GaussianError {
    #[error("correlation pair invalid: rho0={rho0}, rho1={rho1}")]
    InvalidCorrelation { rho0: f64, rho1: f64 },
    #[error("correlation pair is outside the tractable regions")]
    Untractable,
    #[error("rho1 must lie in [0, 1), got {0}")]
    Rho1OutOfRange(f64),
    #[error("rate must be nonnegative, got {0}")]
    NegativeRate(f64),
    #[error("exponent must be nonnegative, got {0}")]
    NegativeExponent(f64),
    #[error("covariance matrix is not positive definite")]
    NotPositiveDefinite,
    #[error("variance must be strictly positive, got {0}")]
    BadVariance(f64),
    #[error("feasibility search supports at most 3 helpers, got {0}")]
    TooManyHelpers(usize),
    #[error("point has {got} helper rates, parameters have {expected}")]
    HelperCountMismatch { expected: usize, got: usize },
}

/// A pair of correlation coefficients for the zero-mean unit-variance
/// Gaussian pair, one per hypothesis. Construction canonicalizes to
/// `0 <= rho1 < 1` by flipping the sign of the detector observation, which
/// negates both coefficients; `y_flipped` records whether that happened.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianBinaryHypothesis {
    rho0: f64,
    rho1: f64,
    y_flipped: bool,
}

impl GaussianBinaryHypothesis {
    pub fn new(rho0: f64, rho1: f64) -> Result<Self, GaussianError> {
        if !(rho0 * rho0 < 1.0) || !(rho1 * rho1 < 1.0) || rho0 == rho1 {
            return Err(GaussianError::InvalidCorrelation { rho0, rho1 });
        }
        if rho1 < 0.0 {
            Ok(Self {
                rho0: -rho0,
                rho1: -rho1,
                y_flipped: true,
            })
        } else {
            Ok(Self {
                rho0,
                rho1,
                y_flipped: false,
            })
        }
    }

    pub fn rho0(&self) -> f64 {
        self.rho0
    }

    pub fn rho1(&self) -> f64 {
        self.rho1
    }

    pub fn y_flipped(&self) -> bool {
        self.y_flipped
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RegionKind {
    D1,
    D2,
    D3,
    Untractable,
}

impl std::fmt::Display for RegionKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RegionKind::D1 => write!(f, "D1"),
            RegionKind::D2 => write!(f, "D2"),
            RegionKind::D3 => write!(f, "D3"),
            RegionKind::Untractable => write!(f, "Untractable"),
        }
    }
}

/// Region label with the derived effective correlation `rho` and additive
/// offset `c` of the outer bound (both absent for untractable pairs).
#[derive(Debug, Clone, Copy, Serialize)]
pub struct RegionClass {
    pub kind: RegionKind,
    pub rho: Option<f64>,
    pub c: Option<f64>,
}

/// Centralized exponent of the pair:
/// `1/2 log((1-rho1^2)/(1-rho0^2)) - log(e) rho1 (rho0-rho1)/(1-rho1^2)`.
pub fn centralized_exponent(h: &GaussianBinaryHypothesis) -> f64 {
    let (r0, r1) = (h.rho0, h.rho1);
    0.5 * ((1.0 - r1 * r1) / (1.0 - r0 * r0)).log2()
        - LOG2_E * r1 * (r0 - r1) / (1.0 - r1 * r1)
}

/// Conditional divergence of the detector observation given the coupling
/// variable in the D3 construction: `2 log(e) rho1 / (1 - rho1)`.
pub fn conditional_kl_d3(rho1: f64) -> Result<f64, GaussianError> {
    if !(0.0..1.0).contains(&rho1) {
        return Err(GaussianError::Rho1OutOfRange(rho1));
    }
    Ok(2.0 * LOG2_E * rho1 / (1.0 - rho1))
}

/// Classifies the pair into the regions where the outer bound is
/// nontrivial:
/// - D1: `0 <= rho1 < rho0 < 1`,
/// - D2: `0 <= rho1`, `2 rho1 - 1 <= rho0 < rho1`,
/// - D3: `-1 < rho0 <= 2 rho1 - 1` and the coupling offset does not exceed
///   the centralized exponent,
/// with `rho = (rho0 - rho1)/(1 - rho1)` on D1 and D2 and
/// `(rho0 + rho1)/(1 - rho1)` on D3, and `c = 0` on D1 and D2.
pub fn classify(h: &GaussianBinaryHypothesis) -> RegionClass {
    let (r0, r1) = (h.rho0, h.rho1);
    if r0 > r1 {
        return RegionClass {
            kind: RegionKind::D1,
            rho: Some((r0 - r1) / (1.0 - r1)),
            c: Some(0.0),
        };
    }
    if r0 >= 2.0 * r1 - 1.0 {
        return RegionClass {
            kind: RegionKind::D2,
            rho: Some((r0 - r1) / (1.0 - r1)),
            c: Some(0.0),
        };
    }
    let c = 2.0 * LOG2_E * r1 / (1.0 - r1);
    if c <= centralized_exponent(h) {
        RegionClass {
            kind: RegionKind::D3,
            rho: Some((r0 + r1) / (1.0 - r1)),
            c: Some(c),
        }
    } else {
        RegionClass {
            kind: RegionKind::Untractable,
            rho: None,
            c: None,
        }
    }
}

/// Outer-bound exponent before intersecting with the centralized bound:
/// `1/2 log(1/(1 - rho^2 + rho^2 2^{-2 r1})) + c`.
pub fn outer_bound_exponent_raw(
    h: &GaussianBinaryHypothesis,
    r1: f64,
) -> Result<f64, GaussianError> {
    if r1 < 0.0 {
        return Err(GaussianError::NegativeRate(r1));
    }
    let class = classify(h);
    let (Some(rho), Some(c)) = (class.rho, class.c) else {
        return Err(GaussianError::Untractable);
    };
    let rho2 = rho * rho;
    Ok(0.5 * (1.0 / (1.0 - rho2 + rho2 * (-2.0 * r1).exp2())).log2() + c)
}

/// Outer-bound exponent, intersected with the centralized exponent.
pub fn outer_bound_exponent(
    h: &GaussianBinaryHypothesis,
    r1: f64,
) -> Result<f64, GaussianError> {
    Ok(outer_bound_exponent_raw(h, r1)?.min(centralized_exponent(h)))
}

/// Inner-bound exponent achieved by a Gaussian test channel at rate `r1`:
/// `1/2 log((1 - rho1^2 s)/(1 - rho0^2 s)) - log(e) rho1 (rho0 - rho1) s /
/// (1 - rho1^2 s)` with `s = 1 - 2^{-2 r1}`.
pub fn inner_bound_exponent(
    h: &GaussianBinaryHypothesis,
    r1: f64,
) -> Result<f64, GaussianError> {
    if r1 < 0.0 {
        return Err(GaussianError::NegativeRate(r1));
    }
    let (r0, r1c) = (h.rho0, h.rho1);
    let s = 1.0 - (-2.0 * r1).exp2();
    Ok(
        0.5 * ((1.0 - r1c * r1c * s) / (1.0 - r0 * r0 * s)).log2()
            - LOG2_E * r1c * (r0 - r1c) * s / (1.0 - r1c * r1c * s),
    )
}

/// Symmetric positive-definite 2x2 covariance matrix.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Covariance2x2 {
    pub var_a: f64,
    pub var_b: f64,
    pub cov: f64,
}

impl Covariance2x2 {
    pub fn new(var_a: f64, var_b: f64, cov: f64) -> Result<Self, GaussianError> {
        let m = Self { var_a, var_b, cov };
        if !(var_a > 0.0) || !(m.det() > 0.0) {
            return Err(GaussianError::NotPositiveDefinite);
        }
        Ok(m)
    }

    pub fn det(&self) -> f64 {
        self.var_a * self.var_b - self.cov * self.cov
    }
}

/// Relative entropy between zero-mean bivariate Gaussians,
/// `D(N(0, K0) || N(0, K1))` in bits:
/// `1/2 log(det K1 / det K0) - log e + (log e / 2) tr(K1^{-1} K0)`.
pub fn gaussian_kl(k0: &Covariance2x2, k1: &Covariance2x2) -> f64 {
    let trace = (k1.var_b * k0.var_a - 2.0 * k1.cov * k0.cov + k1.var_a * k0.var_b) / k1.det();
    0.5 * (k1.det() / k0.det()).log2() - LOG2_E + 0.5 * LOG2_E * trace
}

/// Latent decomposition of the pair over independent standard normals:
/// `X1 = x1[0] Z + x1[1] Z' + x1[2] W` and `Y = y[0] Z + y[1] Z' + y[2] V`,
/// per hypothesis.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct Decomposition {
    pub kind: RegionKind,
    pub h0_x1: [f64; 3],
    pub h0_y: [f64; 3],
    pub h1_x1: [f64; 3],
    pub h1_y: [f64; 3],
}

/// Coefficient table of the per-region latent decomposition; all radicands
/// are nonnegative inside the tractable regions.
pub fn decomposition(h: &GaussianBinaryHypothesis) -> Result<Decomposition, GaussianError> {
    let class = classify(h);
    let (r0, r1) = (h.rho0, h.rho1);
    let sq = |v: f64| -> Result<f64, GaussianError> {
        if v < -1e-12 {
            return Err(GaussianError::Untractable);
        }
        Ok(v.max(0.0).sqrt())
    };
    let h1_x1 = [sq(r1)?, 0.0, sq(1.0 - r1)?];
    let h1_y = h1_x1;
    let (h0_x1, h0_y) = match class.kind {
        RegionKind::D1 => {
            let (a, b, c) = (sq(r1)?, sq(r0 - r1)?, sq(1.0 - r0)?);
            ([a, b, c], [a, b, c])
        }
        RegionKind::D2 => {
            let (a, b, c) = (sq(r1)?, sq(r1 - r0)?, sq(1.0 - 2.0 * r1 + r0)?);
            ([a, b, c], [a, -b, c])
        }
        RegionKind::D3 => {
            let (a, b, c) = (sq(r1)?, sq(-r0 - r1)?, sq(1.0 + r0)?);
            ([a, b, c], [-a, -b, c])
        }
        RegionKind::Untractable => return Err(GaussianError::Untractable),
    };
    Ok(Decomposition {
        kind: class.kind,
        h0_x1,
        h0_y,
        h1_x1,
        h1_y,
    })
}

/// One row of a rate sweep.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct CurvePoint {
    pub r1: f64,
    pub inner: f64,
    pub outer: f64,
    pub centralized: f64,
}

/// Inner, outer, and centralized exponents sampled over a rate grid.
#[derive(Debug, Clone, Serialize)]
pub struct RegionCurve {
    pub class: RegionClass,
    pub points: Vec<CurvePoint>,
}

impl RegionCurve {
    /// CSV with the fixed header and 12 significant digits, `.` decimal
    /// separator, no locale dependence.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("R1,E_inner,E_outer,E_centralized\n");
        for p in &self.points {
            out.push_str(&format!(
                "{:.11e},{:.11e},{:.11e},{:.11e}\n",
                p.r1, p.inner, p.outer, p.centralized
            ));
        }
        out
    }
}

/// Evaluates both bounds and the centralized exponent on the given rate
/// grid. Requires a tractable pair.
pub fn sweep_curves(
    h: &GaussianBinaryHypothesis,
    r1_grid: &[f64],
) -> Result<RegionCurve, GaussianError> {
    let class = classify(h);
    if class.kind == RegionKind::Untractable {
        return Err(GaussianError::Untractable);
    }
    let e_c = centralized_exponent(h);
    let points = r1_grid
        .iter()
        .map(|&r1| {
            Ok(CurvePoint {
                r1,
                inner: inner_bound_exponent(h, r1)?,
                outer: outer_bound_exponent(h, r1)?,
                centralized: e_c,
            })
        })
        .collect::<Result<Vec<_>, GaussianError>>()?;
    Ok(RegionCurve { class, points })
}

/// Variances of the many-help-one problem: the hidden source, the detector
/// observation noise, and one noise variance per helper.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MhoParams {
    pub sigma2_x: f64,
    pub sigma2_n: f64,
    pub helper_noise: Vec<f64>,
}

impl MhoParams {
    pub fn new(
        sigma2_x: f64,
        sigma2_n: f64,
        helper_noise: Vec<f64>,
    ) -> Result<Self, GaussianError> {
        for &v in [sigma2_x, sigma2_n].iter().chain(helper_noise.iter()) {
            if !(v > 0.0) {
                return Err(GaussianError::BadVariance(v));
            }
        }
        Ok(Self {
            sigma2_x,
            sigma2_n,
            helper_noise,
        })
    }

    pub fn num_helpers(&self) -> usize {
        self.helper_noise.len()
    }

    /// Best exponent with everything at the detector:
    /// `1/2 log((sigma2_x + sigma2_n)/sigma2_n)`.
    pub fn centralized_exponent(&self) -> f64 {
        0.5 * ((self.sigma2_x + self.sigma2_n) / self.sigma2_n).log2()
    }
}

/// A candidate rate-exponent vector (main rate, helper rates, exponent).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateExponentPoint {
    pub main_rate: f64,
    pub helper_rates: Vec<f64>,
    pub exponent: f64,
}

/// Distortion proxy of the region: `(sigma2_x + sigma2_n) 2^{-2E} -
/// sigma2_n`. Nonpositive values mean the exponent is at or beyond the
/// centralized ceiling (empty region for finite rates).
pub fn mho_distortion(exponent: f64, p: &MhoParams) -> f64 {
    (p.sigma2_x + p.sigma2_n) * (-2.0 * exponent).exp2() - p.sigma2_n
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MhoStatus {
    Feasible,
    Infeasible,
    ExceedsCentralized,
}

/// Outcome of the membership search, with the witness allocation when
/// feasible.
#[derive(Debug, Clone, Serialize)]
pub struct MhoMembership {
    pub feasible: bool,
    pub status: MhoStatus,
    pub witness: Option<Vec<f64>>,
}

/// For fixed helper allocations `r`, the largest violation of the subset
/// constraints `R + sum_{l in S} R_l >= 1/2 log+[...] + sum_{l in S} r_l`
/// over every `S`; nonpositive means feasible at this `r`.
fn mho_violation(pt: &RateExponentPoint, p: &MhoParams, d: f64, r: &[f64]) -> f64 {
    let l = r.len();
    let mut worst = f64::NEG_INFINITY;
    for mask in 0u32..(1u32 << l) {
        let mut lhs = pt.main_rate;
        let mut r_sum = 0.0f64;
        let mut inv = 1.0 / p.sigma2_x;
        for i in 0..l {
            if mask & (1 << i) != 0 {
                lhs += pt.helper_rates[i];
                r_sum += r[i];
            } else {
                inv += (1.0 - (-2.0 * r[i]).exp2()) / p.helper_noise[i];
            }
        }
        let arg = 1.0 / (d * inv);
        let rhs = if arg <= 0.0 {
            f64::INFINITY
        } else {
            (0.5 * arg.log2()).max(0.0) + r_sum
        };
        worst = worst.max(rhs - lhs);
    }
    worst
}

/// Decides membership of `pt` in the many-help-one region by searching for
/// a witness allocation `0 <= r_l <= R_l`: a per-axis grid (step 0.01 bits,
/// coarsened if the grid would exceed a desk-scale budget) followed by
/// local coordinate refinement down to 1e-4. At most 3 helpers.
pub fn mho_membership(
    pt: &RateExponentPoint,
    p: &MhoParams,
) -> Result<MhoMembership, GaussianError> {
    let l = p.num_helpers();
    if l > 3 {
        return Err(GaussianError::TooManyHelpers(l));
    }
    if pt.helper_rates.len() != l {
        return Err(GaussianError::HelperCountMismatch {
            expected: l,
            got: pt.helper_rates.len(),
        });
    }
    if pt.main_rate < 0.0 {
        return Err(GaussianError::NegativeRate(pt.main_rate));
    }
    if let Some(&bad) = pt.helper_rates.iter().find(|&&r| r < 0.0) {
        return Err(GaussianError::NegativeRate(bad));
    }
    if pt.exponent < 0.0 {
        return Err(GaussianError::NegativeExponent(pt.exponent));
    }

    let d = mho_distortion(pt.exponent, p);
    if d <= 0.0 {
        return Ok(MhoMembership {
            feasible: false,
            status: MhoStatus::ExceedsCentralized,
            witness: None,
        });
    }

    // Grid over each axis: step 0.01 up to a total budget, always including
    // both endpoints. Allocations beyond ~10 bits change the constraints by
    // less than 2^-20 and are not worth gridding.
    let axis_values: Vec<Vec<f64>> = {
        let mut step = 0.01f64;
        loop {
            let counts: Vec<usize> = pt
                .helper_rates
                .iter()
                .map(|&rl| (rl.min(10.0) / step).floor() as usize + 1)
                .collect();
            let total: f64 = counts.iter().map(|&c| c as f64 + 1.0).product();
            if total <= 2.0e6 || step > 0.32 {
                break counts
                    .iter()
                    .zip(pt.helper_rates.iter())
                    .map(|(&c, &rl)| {
                        let mut vals: Vec<f64> =
                            (0..c).map(|k| (k as f64 * step).min(rl)).collect();
                        if (vals.last().copied().unwrap_or(-1.0) - rl).abs() > 1e-15 {
                            vals.push(rl);
                        }
                        vals
                    })
                    .collect();
            }
            step *= 2.0;
        }
    };

    let mut best_r = vec![0.0f64; l];
    let mut best_v = f64::INFINITY;
    let mut idx = vec![0usize; l];
    'grid: loop {
        let r: Vec<f64> = idx.iter().enumerate().map(|(i, &k)| axis_values[i][k]).collect();
        let v = mho_violation(pt, p, d, &r);
        if v < best_v {
            best_v = v;
            best_r = r;
            if best_v <= 0.0 {
                break;
            }
        }
        // Advance the mixed-radix counter.
        let mut axis = l;
        loop {
            if axis == 0 {
                break 'grid;
            }
            axis -= 1;
            idx[axis] += 1;
            if idx[axis] < axis_values[axis].len() {
                break;
            }
            idx[axis] = 0;
        }
    }

    // Coordinate refinement around the best grid point.
    for &step in &[0.005f64, 0.002, 0.001, 0.0005, 0.0002, 0.0001] {
        loop {
            let mut improved = false;
            for i in 0..l {
                for dir in [-1.0f64, 1.0] {
                    let mut r = best_r.clone();
                    r[i] = (r[i] + dir * step).clamp(0.0, pt.helper_rates[i]);
                    let v = mho_violation(pt, p, d, &r);
                    if v < best_v - 1e-15 {
                        best_v = v;
                        best_r = r;
                        improved = true;
                    }
                }
            }
            if !improved || best_v <= 0.0 {
                break;
            }
        }
        if best_v <= 0.0 {
            break;
        }
    }

    let feasible = best_v <= 1e-9;
    Ok(MhoMembership {
        feasible,
        status: if feasible {
            MhoStatus::Feasible
        } else {
            MhoStatus::Infeasible
        },
        witness: feasible.then_some(best_r),
    })
}

/// One-helper closed form: the least main-encoder rate supporting exponent
/// `e` at helper rate `r1`:
/// `1/2 log+[(sigma2_x / D)(1 - rho^2 + rho^2 2^{-2 r1})]` with
/// `rho^2 = sigma2_x/(sigma2_x + sigma2_{N1})`; infinite once the exponent
/// reaches the centralized ceiling.
pub fn one_helper_min_main_rate(r1: f64, e: f64, p: &MhoParams) -> Result<f64, GaussianError> {
    if p.num_helpers() != 1 {
        return Err(GaussianError::HelperCountMismatch {
            expected: 1,
            got: p.num_helpers(),
        });
    }
    if r1 < 0.0 {
        return Err(GaussianError::NegativeRate(r1));
    }
    if e < 0.0 {
        return Err(GaussianError::NegativeExponent(e));
    }
    let d = mho_distortion(e, p);
    if d <= 0.0 {
        return Ok(f64::INFINITY);
    }
    let rho2 = p.sigma2_x / (p.sigma2_x + p.helper_noise[0]);
    let arg = (p.sigma2_x / d) * (1.0 - rho2 + rho2 * (-2.0 * r1).exp2());
    Ok((0.5 * arg.log2()).max(0.0))
}

/// The helper allocation achieving the one-helper closed form:
/// `r1* = R1 + 1/2 log(1 - rho^2 + rho^2 2^{-2 R1})`.
pub fn one_helper_optimal_allocation(r1: f64, p: &MhoParams) -> Result<f64, GaussianError> {
    if p.num_helpers() != 1 {
        return Err(GaussianError::HelperCountMismatch {
            expected: 1,
            got: p.num_helpers(),
        });
    }
    if r1 < 0.0 {
        return Err(GaussianError::NegativeRate(r1));
    }
    let rho2 = p.sigma2_x / (p.sigma2_x + p.helper_noise[0]);
    Ok(r1 + 0.5 * (1.0 - rho2 + rho2 * (-2.0 * r1).exp2()).log2())
}
