//! Achievable exponents and bounds for finite-alphabet instances: the
//! quantize-bin-test inner-bound region, the two Shimokawa-Han-Amari error
//! exponents and their optimized envelope, the centralized exponent, the
//! coupling-based one-encoder outer bound, and sufficient-statistic checks.

use crate::channel_eval::ChannelEval;
use crate::hypothesis::{HypothesisError, HypothesisPair};
use crate::measures::{conditional_kl, kl_divergence, mutual_information, MeasureError};
use crate::optimize::{maximize_channel, ChannelSearchOptions, SearchOutcome, RATE_SLACK};
use crate::pmf::{JointPMF, PmfError, TestChannel, Variable, STRUCTURAL_ZERO};
use serde::Serialize;
use thiserror::Error;

/// Residual tolerance for the coupling conditions (C12)-(C15) and the
/// sufficient-statistic factorization check.
pub const COUPLING_TOL: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum DiscreteError {
    #[error(transparent)]
    Pmf(#[from] PmfError),
    #[error(transparent)]
    Hypothesis(#[from] HypothesisError),
    #[error(transparent)]
    Measure(#[from] MeasureError),
    #[error("rate must be nonnegative, got {0}")]
    NegativeRate(f64),
    #[error("operation requires exactly one encoder, got {0}")]
    NotOneEncoder(usize),
    #[error("channel set has {got} encoders, pair has {expected}")]
    EncoderCountMismatch { expected: usize, got: usize },
    #[error("time-share pmf invalid: {0}")]
    BadTimeShare(String),
    #[error("time-share alphabet {got} exceeds cap {cap}")]
    TimeShareCapExceeded { got: usize, cap: usize },
    #[error(
        "channel violates the feasible set: I(X1;U1|side,Y,Z) = {got} > rate {rate}"
    )]
    ChannelNotFeasible { got: f64, rate: f64 },
    #[error("coupling fails conditions {0}")]
    InvalidCoupling(String),
    #[error("coupled joints must extend the original variables with one Z variable")]
    BadCouplingShape,
    #[error("statistic map has length {got}, expected {expected}")]
    StatisticMapLength { expected: usize, got: usize },
    #[error("statistic map value {value} out of range [0, {size})")]
    StatisticMapRange { value: usize, size: usize },
}

/// One test channel per encoder and per time-share symbol, together with
/// the time-share pmf. `channels[l][t]` quantizes encoder `l` when `T = t`.
#[derive(Debug, Clone)]
pub struct TestChannelSet {
    channels: Vec<Vec<TestChannel>>,
    time_share: Vec<f64>,
}

impl TestChannelSet {
    pub fn new(
        channels: Vec<Vec<TestChannel>>,
        time_share: Vec<f64>,
    ) -> Result<Self, DiscreteError> {
        if channels.is_empty() {
            return Err(DiscreteError::EncoderCountMismatch {
                expected: 1,
                got: 0,
            });
        }
        let nt = time_share.len();
        if nt == 0 {
            return Err(DiscreteError::BadTimeShare("empty pmf".into()));
        }
        let sum: f64 = time_share.iter().sum();
        if time_share.iter().any(|&p| !(p >= 0.0)) || (sum - 1.0).abs() > 1e-12 {
            return Err(DiscreteError::BadTimeShare(format!("sums to {sum}")));
        }
        for per_t in channels.iter() {
            if per_t.len() != nt {
                return Err(DiscreteError::BadTimeShare(format!(
                    "encoder has {} channel variants for {} time-share symbols",
                    per_t.len(),
                    nt
                )));
            }
            let (ni, no) = (per_t[0].input_size(), per_t[0].output_size());
            if per_t
                .iter()
                .any(|c| c.input_size() != ni || c.output_size() != no)
            {
                return Err(DiscreteError::BadTimeShare(
                    "channel variants disagree on alphabet sizes".into(),
                ));
            }
        }
        Ok(Self {
            channels,
            time_share,
        })
    }

    /// Channel set without time sharing.
    pub fn without_time_share(channels: Vec<TestChannel>) -> Result<Self, DiscreteError> {
        Self::new(channels.into_iter().map(|c| vec![c]).collect(), vec![1.0])
    }

    pub fn num_encoders(&self) -> usize {
        self.channels.len()
    }

    pub fn time_share_size(&self) -> usize {
        self.time_share.len()
    }
}

/// Result of a single-encoder exponent computation.
#[derive(Debug, Clone, Serialize)]
pub struct ExponentResult {
    /// Encoder rate the computation was run at, in bits.
    pub rate: f64,
    /// Achieved exponent, in bits.
    pub value: f64,
    /// Optimizing (or supplied) test channel, rows indexed by the encoder
    /// symbol.
    pub channel: Vec<Vec<f64>>,
    /// Exponent assuming correct codeword decoding, when applicable.
    pub rho1: Option<f64>,
    /// Exponent of binning-induced errors, when applicable; `+inf` when the
    /// rate covers the codebook without binning.
    pub rho2: Option<f64>,
    /// Number of optimizer restarts merged into the result.
    pub restarts: usize,
    /// Winner-vs-runner-up objective deficit across restarts.
    pub gap: f64,
}

impl ExponentResult {
    /// Flat JSON form; `rho2 = +inf` is emitted as the string `"inf"`
    /// because JSON has no infinity literal.
    pub fn to_json(&self) -> serde_json::Value {
        let finite_or = |v: Option<f64>| match v {
            Some(x) if x.is_finite() => serde_json::json!(x),
            Some(_) => serde_json::json!("inf"),
            None => serde_json::Value::Null,
        };
        serde_json::json!({
            "rate": self.rate,
            "exponent": self.value,
            "rho1": finite_or(self.rho1),
            "rho2": finite_or(self.rho2),
            "channel": self.channel,
            "restarts": self.restarts,
            "gap": self.gap,
        })
    }
}

/// One sum-rate constraint of the region: the listed encoders must spend at
/// least `min_sum_rate` bits in total.
#[derive(Debug, Clone, Serialize)]
pub struct SumRateBound {
    pub encoders: Vec<usize>,
    pub min_sum_rate: f64,
}

/// The inner-bound region evaluated at one choice of auxiliaries: all
/// 2^L - 1 sum-rate lower bounds plus the exponent upper bound.
#[derive(Debug, Clone, Serialize)]
pub struct QbtRegionPoint {
    pub rate_bounds: Vec<SumRateBound>,
    pub exponent: f64,
}

fn fresh_name(base: &str, joint: &JointPMF) -> String {
    let mut name = base.to_string();
    while joint.var_index(&name).is_ok() {
        name.push('_');
    }
    name
}

/// Evaluates the quantize-bin-test inner bound at a fixed channel set:
/// for every nonempty S, `sum_{l in S} R_l >= I(X_S; U_S | U_{S^c}, side,
/// Z, T)`, and `E <= I(Y; U, side | Z, T)`. Requires a CI-flagged pair and
/// channels obeying the cardinality caps `|U_l| <= |X_l| + 2^L - 1`,
/// `|T| <= 2^L`.
pub fn qbt_region_point(
    h: &HypothesisPair,
    set: &TestChannelSet,
) -> Result<QbtRegionPoint, DiscreteError> {
    h.require_ci()?;
    let l = h.num_encoders();
    if set.num_encoders() != l {
        return Err(DiscreteError::EncoderCountMismatch {
            expected: l,
            got: set.num_encoders(),
        });
    }
    let t_cap = 1usize << l;
    if set.time_share_size() > t_cap {
        return Err(DiscreteError::TimeShareCapExceeded {
            got: set.time_share_size(),
            cap: t_cap,
        });
    }
    let roles = h.roles();
    let nt = set.time_share_size();

    // Joint over (original variables, T, U_1..U_L) with T independent and
    // each U_l attached to (X_l, T).
    let t_name = fresh_name("T", h.p());
    let t_channel = TestChannel::new(vec![set.time_share.clone()])?;
    let mut joint = h.p().compose_channel(&t_channel, &[], &t_name)?;
    let mut u_names = Vec::with_capacity(l);
    for (enc, per_t) in set.channels.iter().enumerate() {
        let x_name = roles.x[enc].as_str();
        let nx = h.p().size_of(x_name)?;
        let cap = nx + (1usize << l) - 1;
        per_t[0].check_output_cap(cap)?;
        if per_t[0].input_size() != nx {
            return Err(PmfError::ChannelInputMismatch {
                expected: nx,
                got: per_t[0].input_size(),
            }
            .into());
        }
        // Assemble the combined channel on (X_l, T), rows row-major in
        // (x, t).
        let nu = per_t[0].output_size();
        let mut rows = Vec::with_capacity(nx * nt);
        for x in 0..nx {
            for t in 0..nt {
                rows.push(per_t[t].row(x).to_vec());
            }
        }
        let combined = TestChannel::new(rows)?;
        let u_name = fresh_name(&format!("U{}", enc + 1), &joint);
        joint = joint.compose_channel(&combined, &[x_name, t_name.as_str()], &u_name)?;
        u_names.push(u_name);
        debug_assert_eq!(joint.size_of(u_names.last().unwrap())?, nu);
    }

    let side = roles.side_slice();
    let mut zt: Vec<&str> = roles.z_slice();
    zt.push(t_name.as_str());

    let mut rate_bounds = Vec::with_capacity((1usize << l) - 1);
    for mask in 1u32..(1u32 << l) {
        let in_s: Vec<usize> = (0..l).filter(|i| mask & (1 << i) != 0).collect();
        let x_s: Vec<&str> = in_s.iter().map(|&i| roles.x[i].as_str()).collect();
        let u_s: Vec<&str> = in_s.iter().map(|&i| u_names[i].as_str()).collect();
        let mut cond: Vec<&str> = (0..l)
            .filter(|i| mask & (1 << i) == 0)
            .map(|i| u_names[i].as_str())
            .collect();
        cond.extend(side.iter());
        cond.extend(zt.iter());
        let bound = mutual_information(&joint, &x_s, &u_s, &cond)?;
        rate_bounds.push(SumRateBound {
            encoders: in_s,
            min_sum_rate: bound,
        });
    }

    let mut u_side: Vec<&str> = u_names.iter().map(String::as_str).collect();
    u_side.extend(side.iter());
    let exponent = mutual_information(&joint, &[roles.y.as_str()], &u_side, &zt)?;
    Ok(QbtRegionPoint {
        rate_bounds,
        exponent,
    })
}

fn one_encoder_eval(h: &HypothesisPair) -> Result<ChannelEval, DiscreteError> {
    if h.num_encoders() != 1 {
        return Err(DiscreteError::NotOneEncoder(h.num_encoders()));
    }
    let roles = h.roles();
    Ok(ChannelEval::new(
        h.p(),
        &roles.x[0],
        &roles.side_slice(),
        &roles.y,
        &roles.z_slice(),
    )?)
}

/// Best quantize-bin-test exponent at rate `r1` for one encoder:
/// maximizes `I(Y; U, side | Z)` over channels with `|U| = |X1| + 1`
/// satisfying `I(X1; U | side, Z) <= r1`.
pub fn qbt_exponent_1enc(
    h: &HypothesisPair,
    r1: f64,
    opts: &ChannelSearchOptions,
) -> Result<ExponentResult, DiscreteError> {
    h.require_ci()?;
    if r1 < 0.0 {
        return Err(DiscreteError::NegativeRate(r1));
    }
    let eval = one_encoder_eval(h)?;
    let nx = eval.nx;
    let nu = nx + 1;
    let objective = |rows: &Vec<Vec<f64>>| eval.i_y_uc_z(rows);
    let rate = |rows: &Vec<Vec<f64>>| eval.i_x_u_cz(rows);
    let out = maximize_channel(nx, nu, &objective, &rate, r1, opts);
    Ok(ExponentResult {
        rate: r1,
        value: out.value,
        channel: out.rows,
        rho1: None,
        rho2: None,
        restarts: out.restarts,
        gap: out.gap,
    })
}

/// The channel-dependent information quantities of a fixed test channel on
/// a one-encoder pair; these locate the knees of the fixed-channel
/// exponent tradeoff.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ChannelProfile {
    /// I(Y; U, side | Z) — the saturated exponent.
    pub i_y_u_side_z: f64,
    /// I(X1; U | side, Z) — the least binning rate without exponent loss.
    pub i_x1_u_side_z: f64,
    /// I(X1; U | side, Y, Z) — below this rate the channel is infeasible.
    pub i_x1_u_side_yz: f64,
    /// I(U; X1) — at or above this rate binning never errs.
    pub i_u_x1: f64,
    /// I(Y; side | Z) — the exponent when the message is ignored.
    pub i_y_side_z: f64,
}

/// Computes the information profile of a fixed channel for a one-encoder
/// pair (CI not required; quantities are under the null hypothesis).
pub fn channel_profile(
    h: &HypothesisPair,
    channel: &TestChannel,
) -> Result<ChannelProfile, DiscreteError> {
    let eval = one_encoder_eval(h)?;
    if channel.input_size() != eval.nx {
        return Err(PmfError::ChannelInputMismatch {
            expected: eval.nx,
            got: channel.input_size(),
        }
        .into());
    }
    let q = eval.quantities(channel.rows());
    Ok(ChannelProfile {
        i_y_u_side_z: q.i_y_uc_z,
        i_x1_u_side_z: q.i_x_u_cz,
        i_x1_u_side_yz: q.i_x_u_cyz,
        i_u_x1: q.i_u_x,
        i_y_side_z: eval.i_y_c_given_z(),
    })
}

fn sha_components(eval: &ChannelEval, rows: &[Vec<f64>], r1: f64) -> (f64, f64) {
    let q = eval.quantities(rows);
    let rho1 = q.i_y_uc_z;
    let rho2 = if r1 >= q.i_u_x - RATE_SLACK {
        f64::INFINITY
    } else {
        (r1 - q.i_x_u_cyz).max(0.0) + eval.i_y_c_given_z()
    };
    (rho1, rho2)
}

/// The two Shimokawa-Han-Amari exponents for a fixed channel at rate `r1`:
/// `rho1 = I(Y; U, side | Z)` (correct decoding), and the binning exponent
/// `rho2 = [r1 - I(X1; U | side, Y, Z)]^+ + I(Y; side | Z)`, infinite once
/// `r1 >= I(U; X1)`. The channel must satisfy
/// `I(X1; U | side, Y, Z) <= r1`.
pub fn sha_exponents(
    h: &HypothesisPair,
    channel: &TestChannel,
    r1: f64,
) -> Result<ExponentResult, DiscreteError> {
    h.require_ci()?;
    if r1 < 0.0 {
        return Err(DiscreteError::NegativeRate(r1));
    }
    let eval = one_encoder_eval(h)?;
    channel.check_output_cap(eval.nx + 1)?;
    if channel.input_size() != eval.nx {
        return Err(PmfError::ChannelInputMismatch {
            expected: eval.nx,
            got: channel.input_size(),
        }
        .into());
    }
    let binding = eval.i_x_u_cyz(channel.rows());
    if binding > r1 + RATE_SLACK {
        return Err(DiscreteError::ChannelNotFeasible {
            got: binding,
            rate: r1,
        });
    }
    let (rho1, rho2) = sha_components(&eval, channel.rows(), r1);
    Ok(ExponentResult {
        rate: r1,
        value: rho1.min(rho2),
        channel: channel.rows().to_vec(),
        rho1: Some(rho1),
        rho2: Some(rho2),
        restarts: 0,
        gap: 0.0,
    })
}

/// Best Shimokawa-Han-Amari exponent at rate `r1`: maximizes
/// `min(rho1, rho2)` over channels with `|U| = |X1| + 1` satisfying
/// `I(X1; U | side, Y, Z) <= r1`.
///
/// The min objective kinks exactly where the two exponents balance, and
/// its maximizer usually sits on that crease, which plain coordinate
/// ascent tracks poorly. The search therefore runs two restart families:
/// one over the full feasible set, and one confined to
/// `I(X1; U | side, Z) <= r1` where the min reduces to the smooth
/// correct-decoding exponent. Both score candidates by the same closed-form
/// min objective; the better family wins.
pub fn sha_exponent_1enc(
    h: &HypothesisPair,
    r1: f64,
    opts: &ChannelSearchOptions,
) -> Result<ExponentResult, DiscreteError> {
    h.require_ci()?;
    if r1 < 0.0 {
        return Err(DiscreteError::NegativeRate(r1));
    }
    let eval = one_encoder_eval(h)?;
    let nx = eval.nx;
    let nu = nx + 1;
    let objective = |rows: &Vec<Vec<f64>>| {
        let (rho1, rho2) = sha_components(&eval, rows, r1);
        rho1.min(rho2)
    };
    let full_rate = |rows: &Vec<Vec<f64>>| eval.i_x_u_cyz(rows);
    let crease_rate = |rows: &Vec<Vec<f64>>| eval.i_x_u_cz(rows);
    let full = maximize_channel(nx, nu, &objective, &full_rate, r1, opts);
    // The confined family converges from far fewer starts: its objective
    // is smooth inside the sub-region.
    let crease_opts = ChannelSearchOptions {
        restarts: (opts.restarts / 4).max(4),
        ..opts.clone()
    };
    let creased = maximize_channel(nx, nu, &objective, &crease_rate, r1, &crease_opts);
    let restarts = full.restarts + creased.restarts;
    let (winner, other_value) = if creased.value > full.value {
        (creased, full.value)
    } else {
        (full, creased.value)
    };
    let gap = winner.gap.min((winner.value - other_value).abs());
    let (rho1, rho2) = sha_components(&eval, &winner.rows, r1);
    Ok(ExponentResult {
        rate: r1,
        value: winner.value,
        channel: winner.rows,
        rho1: Some(rho1),
        rho2: Some(rho2),
        restarts,
        gap,
    })
}

/// Centralized exponent `D(P || Q)` over the full joints (both strings at
/// the detector); may be `+inf`.
pub fn centralized_exponent(h: &HypothesisPair) -> Result<f64, DiscreteError> {
    Ok(kl_divergence(h.p(), h.q())?)
}

/// Outcome of the coupling conditions (C12)-(C15).
#[derive(Debug, Clone, Copy, Serialize)]
pub struct XiCheck {
    /// Z-marginalization of the coupled null recovers the original null.
    pub c12: bool,
    /// Z-marginalization of the coupled alternate recovers the original
    /// alternate.
    pub c13: bool,
    /// Under the coupled alternate, the encoder side and Y are
    /// conditionally independent given Z.
    pub c14: bool,
    /// The coupled (encoder side, Z) joints agree across both hypotheses.
    pub c15: bool,
}

impl XiCheck {
    pub fn holds(&self) -> bool {
        self.c12 && self.c13 && self.c14 && self.c15
    }

    fn failing(&self) -> String {
        let mut bad = Vec::new();
        if !self.c12 {
            bad.push("C12");
        }
        if !self.c13 {
            bad.push("C13");
        }
        if !self.c14 {
            bad.push("C14");
        }
        if !self.c15 {
            bad.push("C15");
        }
        bad.join(", ")
    }
}

/// Identifies the coupling variable: the one variable present in the
/// coupled joints but not in the original pair.
fn coupling_z_name(
    coupled_p: &JointPMF,
    coupled_q: &JointPMF,
    original: &HypothesisPair,
) -> Result<String, DiscreteError> {
    if coupled_p.variables() != coupled_q.variables() {
        return Err(DiscreteError::BadCouplingShape);
    }
    if coupled_p.num_vars() != original.p().num_vars() + 1 {
        return Err(DiscreteError::BadCouplingShape);
    }
    let mut extra: Option<&Variable> = None;
    for v in coupled_p.variables() {
        match original.p().var_index(&v.name) {
            Ok(i) => {
                if original.p().variables()[i].size != v.size {
                    return Err(DiscreteError::BadCouplingShape);
                }
            }
            Err(_) => {
                if extra.is_some() {
                    return Err(DiscreteError::BadCouplingShape);
                }
                extra = Some(v);
            }
        }
    }
    extra
        .map(|v| v.name.clone())
        .ok_or(DiscreteError::BadCouplingShape)
}

/// Checks whether `(coupled_p, coupled_q)` is a valid coupling of the
/// original pair: both Z-marginalizations recover the originals, the
/// alternate factors the encoder side from Y given Z, and the (encoder
/// side, Z) joints agree across hypotheses. All residuals are measured in
/// sup norm against [`COUPLING_TOL`].
pub fn xi_membership(
    coupled_p: &JointPMF,
    coupled_q: &JointPMF,
    original: &HypothesisPair,
) -> Result<XiCheck, DiscreteError> {
    let z_name = coupling_z_name(coupled_p, coupled_q, original)?;
    let orig_names: Vec<&str> = original
        .p()
        .variables()
        .iter()
        .map(|v| v.name.as_str())
        .collect();

    let c12 = coupled_p
        .marginalize(&orig_names)?
        .max_abs_diff(original.p())?
        <= COUPLING_TOL;
    let c13 = coupled_q
        .marginalize(&orig_names)?
        .max_abs_diff(original.q())?
        <= COUPLING_TOL;

    // Encoder-side variables: everything except Y in the original pair.
    let roles = original.roles();
    let x_names: Vec<&str> = roles.x_side();
    let y_name = roles.y.as_str();

    let xi = coupled_q.indices_of(&x_names)?;
    let yi = coupled_q.indices_of(&[y_name])?;
    let zi = coupled_q.indices_of(&[z_name.as_str()])?;
    let (dims, q_xyz) = coupled_q.grouped(&[&xi, &yi, &zi]);
    let (_, q_xz) = coupled_q.grouped(&[&xi, &zi]);
    let (_, q_yz) = coupled_q.grouped(&[&yi, &zi]);
    let (_, q_z) = coupled_q.grouped(&[&zi]);
    let (nx, ny, nz) = (dims[0], dims[1], dims[2]);
    let mut worst = 0.0f64;
    for x in 0..nx {
        for y in 0..ny {
            for z in 0..nz {
                let lhs = q_xyz[(x * ny + y) * nz + z] * q_z[z];
                let rhs = q_xz[x * nz + z] * q_yz[y * nz + z];
                worst = worst.max((lhs - rhs).abs());
            }
        }
    }
    let c14 = worst <= COUPLING_TOL;

    let mut xz: Vec<&str> = x_names.clone();
    xz.push(z_name.as_str());
    let c15 = coupled_p
        .marginalize(&xz)?
        .max_abs_diff(&coupled_q.marginalize(&xz)?)?
        <= COUPLING_TOL;

    Ok(XiCheck { c12, c13, c14, c15 })
}

/// One-encoder outer bound for a supplied coupling.
#[derive(Debug, Clone, Serialize)]
pub struct OuterBound1Enc {
    /// Final bound: `min(raw_bound, centralized)`.
    pub bound: f64,
    /// Coupling bound before intersecting with the centralized exponent.
    pub raw_bound: f64,
    /// Best `I(Y; U | Z)` over feasible channels.
    pub channel_value: f64,
    /// `D(P_{Y|Z} || Q_{Y|Z} | Z)` offset of the coupling.
    pub kl_offset: f64,
    /// Centralized exponent of the original pair.
    pub centralized: f64,
    pub channel: Vec<Vec<f64>>,
    pub restarts: usize,
    pub gap: f64,
}

/// Evaluates the one-encoder outer bound at rate `r1` for a coupling that
/// passes [`xi_membership`]: maximizes `I(Y; U | Z)` over channels with
/// `|U| = |X1| + 1` and `I(X1; U | Z) <= r1`, adds the conditional
/// divergence offset of the coupling, and intersects with the centralized
/// exponent.
pub fn outer_bound_1enc(
    original: &HypothesisPair,
    coupled_p: &JointPMF,
    coupled_q: &JointPMF,
    r1: f64,
    opts: &ChannelSearchOptions,
) -> Result<OuterBound1Enc, DiscreteError> {
    if original.num_encoders() != 1 {
        return Err(DiscreteError::NotOneEncoder(original.num_encoders()));
    }
    if r1 < 0.0 {
        return Err(DiscreteError::NegativeRate(r1));
    }
    let check = xi_membership(coupled_p, coupled_q, original)?;
    if !check.holds() {
        return Err(DiscreteError::InvalidCoupling(check.failing()));
    }
    let z_name = coupling_z_name(coupled_p, coupled_q, original)?;
    let roles = original.roles();
    let x1 = roles.x[0].as_str();
    let y = roles.y.as_str();

    let eval = ChannelEval::new(coupled_p, x1, &roles.side_slice(), y, &[z_name.as_str()])?;
    let nx = eval.nx;
    let nu = nx + 1;
    let objective = |rows: &Vec<Vec<f64>>| eval.i_y_uc_z(rows);
    let rate = |rows: &Vec<Vec<f64>>| eval.i_x_u_cz(rows);
    let SearchOutcome {
        rows,
        value,
        restarts,
        gap,
    } = maximize_channel(nx, nu, &objective, &rate, r1, opts);

    let kl_offset = conditional_kl(coupled_p, coupled_q, &[y], &[z_name.as_str()])?;
    let centralized = centralized_exponent(original)?;
    let raw_bound = value + kl_offset;
    Ok(OuterBound1Enc {
        bound: raw_bound.min(centralized),
        raw_bound,
        channel_value: value,
        kl_offset,
        centralized,
        channel: rows,
        restarts,
        gap,
    })
}

/// Result of the sufficient-statistic checks for a candidate statistic `X`
/// of the encoder observations.
#[derive(Debug, Clone, Serialize)]
pub struct SuffStatCheck {
    /// Exact conditional independence of (encoders, Y) given the statistic.
    pub c5: bool,
    /// Pairwise distinctness of the rows of `P(Y | X)` on positive-mass
    /// statistic symbols. Necessary (not sufficient) for minimality of the
    /// statistic.
    pub rows_distinct: bool,
    /// Centralized exponent `I(X; Y)` of the statistic.
    pub centralized_exponent: f64,
}

/// Checks a candidate statistic `x_map` (a table over the flattened
/// encoder-observation tuples, row-major in `x_vars` order) against the
/// joint `p` of the encoder observations and `y_var`.
pub fn sufficient_statistic_check(
    p: &JointPMF,
    x_vars: &[&str],
    y_var: &str,
    x_map: &[usize],
    x_size: usize,
) -> Result<SuffStatCheck, DiscreteError> {
    let xi = p.indices_of(x_vars)?;
    let yi = p.indices_of(&[y_var])?;
    let (dims, table) = p.grouped(&[&xi, &yi]);
    let (nv, ny) = (dims[0], dims[1]);
    if x_map.len() != nv {
        return Err(DiscreteError::StatisticMapLength {
            expected: nv,
            got: x_map.len(),
        });
    }
    if let Some(&bad) = x_map.iter().find(|&&v| v >= x_size) {
        return Err(DiscreteError::StatisticMapRange {
            value: bad,
            size: x_size,
        });
    }
    let sizes: Vec<usize> = xi.iter().map(|&i| p.variables()[i].size).collect();
    let l = sizes.len();

    // Per statistic symbol: total mass, per-encoder marginals, Y marginal.
    let mut mass = vec![0.0f64; x_size];
    let mut y_given = vec![0.0f64; x_size * ny];
    let mut enc_marg: Vec<Vec<f64>> = sizes
        .iter()
        .map(|&s| vec![0.0f64; x_size * s])
        .collect();
    let decode = |mut v: usize| -> Vec<usize> {
        let mut out = vec![0usize; l];
        for i in (0..l).rev() {
            out[i] = v % sizes[i];
            v /= sizes[i];
        }
        out
    };
    for v in 0..nv {
        let x = x_map[v];
        let vals = decode(v);
        for y in 0..ny {
            let pr = table[v * ny + y];
            mass[x] += pr;
            y_given[x * ny + y] += pr;
            for (i, &vi) in vals.iter().enumerate() {
                enc_marg[i][x * sizes[i] + vi] += pr;
            }
        }
    }

    // C5 residual in the division-free form
    // P(v, y) * mass(x)^L == prod_l P(v_l, x) * P(y, x).
    let mut worst = 0.0f64;
    for v in 0..nv {
        let x = x_map[v];
        let vals = decode(v);
        let m_pow = mass[x].powi(l as i32);
        for y in 0..ny {
            let lhs = table[v * ny + y] * m_pow;
            let mut rhs = y_given[x * ny + y];
            for (i, &vi) in vals.iter().enumerate() {
                rhs *= enc_marg[i][x * sizes[i] + vi];
            }
            worst = worst.max((lhs - rhs).abs());
        }
    }
    let c5 = worst <= COUPLING_TOL;

    // Pairwise distinctness of the conditional rows P(Y | X = x).
    let positive: Vec<usize> = (0..x_size)
        .filter(|&x| mass[x] > STRUCTURAL_ZERO)
        .collect();
    let mut rows_distinct = true;
    'outer: for (a, &xa) in positive.iter().enumerate() {
        for &xb in positive[a + 1..].iter() {
            let mut sup = 0.0f64;
            for y in 0..ny {
                let ra = y_given[xa * ny + y] / mass[xa];
                let rb = y_given[xb * ny + y] / mass[xb];
                sup = sup.max((ra - rb).abs());
            }
            if sup <= COUPLING_TOL {
                rows_distinct = false;
                break 'outer;
            }
        }
    }

    // Centralized exponent I(X; Y) of the statistic.
    let mut i_xy = 0.0f64;
    let p_y: Vec<f64> = (0..ny)
        .map(|y| (0..x_size).map(|x| y_given[x * ny + y]).sum())
        .collect();
    for x in 0..x_size {
        for y in 0..ny {
            let j = y_given[x * ny + y];
            if j > 0.0 {
                i_xy += j * (j / (mass[x] * p_y[y])).log2();
            }
        }
    }

    Ok(SuffStatCheck {
        c5,
        rows_distinct,
        centralized_exponent: i_xy,
    })
}
