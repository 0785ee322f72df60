//! Finite-blocklength Monte Carlo simulation of the quantize-bin-test
//! codec: a random codebook drawn i.i.d. from the auxiliary marginal,
//! uniform binning, quantization by first jointly typical codeword,
//! minimum-empirical-entropy decoding inside the bin, and a two-sided
//! typicality test at the detector.
//!
//! Trials are independent units on counter-based RNG streams derived from
//! the master seed, so results are bit-identical for a given config
//! regardless of thread count. The sent joint type is conveyed to the
//! detector out of band and is not charged against the rate; results carry
//! a metadata flag saying so.

use crate::hypothesis::{HypothesisError, HypothesisPair};
use crate::pmf::{JointPMF, PmfError, TestChannel, Variable};
use crate::typicality::type_is_typical;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

/// Hard cap on codebook size: 2^24 codewords.
pub const CODEBOOK_CAP_BITS: f64 = 24.0;

#[derive(Debug, Error)]
pub enum SimError {
    #[error(transparent)]
    Pmf(#[from] PmfError),
    #[error(transparent)]
    Hypothesis(#[from] HypothesisError),
    #[error("invalid config: {0}")]
    BadConfig(String),
    #[error("codebook would need {bits:.2} bits of index, cap is {CODEBOOK_CAP_BITS}")]
    CodebookCapExceeded { bits: f64 },
    #[error("bin {0} is empty")]
    EmptyBin(usize),
    #[error("reference mismatch: {0}")]
    ReferenceMismatch(String),
    #[error("simulator supports exactly one encoder, got {0}")]
    NotOneEncoder(usize),
    #[error("not enough data for an exponent fit: {0}")]
    InsufficientData(String),
}

/// Simulation parameters. `codebook_rate` is the quantizer codebook rate
/// (bits per symbol) and `bin_rate` the transmitted rate after binning;
/// `bin_rate = codebook_rate` disables binning. `mu` is the typicality
/// slack used by encoder and detector alike, `epsilon` the declared type-1
/// budget (recorded for reporting; the decision rule itself is
/// typicality-based). `n_list` switches to a blocklength sweep feeding the
/// exponent regression.
#[derive(Debug, Clone, Serialize, serde::Deserialize)]
pub struct SimConfig {
    pub n: usize,
    pub codebook_rate: f64,
    pub bin_rate: f64,
    pub mu: f64,
    pub epsilon: f64,
    pub trials: usize,
    pub seed: u64,
    #[serde(default)]
    pub n_list: Option<Vec<usize>>,
    #[serde(default = "default_shared_codebook")]
    pub shared_codebook: bool,
}

fn default_shared_codebook() -> bool {
    true
}

impl SimConfig {
    pub fn validate(&self) -> Result<(), SimError> {
        if self.trials == 0 {
            return Err(SimError::BadConfig("trials must be positive".into()));
        }
        if !(self.mu > 0.0) {
            return Err(SimError::BadConfig("mu must be positive".into()));
        }
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return Err(SimError::BadConfig("epsilon must lie in (0, 1)".into()));
        }
        if self.bin_rate > self.codebook_rate + 1e-12 {
            return Err(SimError::BadConfig(
                "bin_rate must not exceed codebook_rate".into(),
            ));
        }
        if !(self.bin_rate >= 0.0) || !(self.codebook_rate > 0.0) {
            return Err(SimError::BadConfig("rates must be nonnegative".into()));
        }
        for &n in self.blocklengths().iter() {
            if n == 0 {
                return Err(SimError::BadConfig("blocklength must be positive".into()));
            }
            let bits = (n as f64 * self.codebook_rate).ceil();
            if bits > CODEBOOK_CAP_BITS {
                return Err(SimError::CodebookCapExceeded { bits });
            }
        }
        Ok(())
    }

    /// The blocklengths this config runs: `n_list` when present, else `[n]`.
    pub fn blocklengths(&self) -> Vec<usize> {
        match &self.n_list {
            Some(list) if !list.is_empty() => list.clone(),
            _ => vec![self.n],
        }
    }
}

/// A sampled codebook: `2^ceil(n * codebook_rate)` codewords of length `n`
/// over the auxiliary alphabet, hashed uniformly into
/// `2^ceil(n * bin_rate)` bins (bin sizes differ by at most one).
#[derive(Debug, Clone)]
pub struct Codebook {
    n: usize,
    u_alphabet: usize,
    symbols: Vec<u8>,
    bin_of: Vec<u32>,
    bins: Vec<Vec<u32>>,
}

impl Codebook {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn u_alphabet(&self) -> usize {
        self.u_alphabet
    }

    pub fn num_codewords(&self) -> usize {
        self.bin_of.len()
    }

    pub fn num_bins(&self) -> usize {
        self.bins.len()
    }

    pub fn codeword(&self, i: usize) -> &[u8] {
        &self.symbols[i * self.n..(i + 1) * self.n]
    }

    pub fn bin_of(&self, i: usize) -> usize {
        self.bin_of[i] as usize
    }

    pub fn bin(&self, b: usize) -> &[u32] {
        &self.bins[b]
    }

    /// Builds a codebook directly from parts; for tests and tools that need
    /// a handcrafted codebook. `symbols` is row-major (codeword, position).
    pub fn from_parts(
        n: usize,
        u_alphabet: usize,
        symbols: Vec<u8>,
        num_bins: usize,
    ) -> Result<Self, SimError> {
        if n == 0 || symbols.len() % n != 0 {
            return Err(SimError::BadConfig("symbols not a multiple of n".into()));
        }
        let num_cw = symbols.len() / n;
        if num_bins == 0 || num_bins > num_cw {
            return Err(SimError::BadConfig("bad bin count".into()));
        }
        let bin_of: Vec<u32> = (0..num_cw).map(|i| (i % num_bins) as u32).collect();
        let mut bins = vec![Vec::new(); num_bins];
        for (i, &b) in bin_of.iter().enumerate() {
            bins[b as usize].push(i as u32);
        }
        Ok(Self {
            n,
            u_alphabet,
            symbols,
            bin_of,
            bins,
        })
    }
}

/// Draws the codebook for `cfg.n`: i.i.d. codewords from the auxiliary
/// marginal induced by `channel` on `source_marginal`, bins assigned as a
/// shuffled balanced partition.
pub fn build_codebook(
    channel: &TestChannel,
    source_marginal: &[f64],
    cfg: &SimConfig,
    rng: &mut ChaCha8Rng,
) -> Result<Codebook, SimError> {
    build_codebook_for_n(channel, source_marginal, cfg, cfg.n, rng)
}

fn build_codebook_for_n(
    channel: &TestChannel,
    source_marginal: &[f64],
    cfg: &SimConfig,
    n: usize,
    rng: &mut ChaCha8Rng,
) -> Result<Codebook, SimError> {
    cfg.validate()?;
    let cw_bits = (n as f64 * cfg.codebook_rate).ceil();
    if cw_bits > CODEBOOK_CAP_BITS {
        return Err(SimError::CodebookCapExceeded { bits: cw_bits });
    }
    let num_cw = 1usize << cw_bits as u32;
    let bin_bits = (n as f64 * cfg.bin_rate).ceil().max(0.0);
    let num_bins = (1usize << bin_bits as u32).min(num_cw);

    let p_u = channel.output_marginal(source_marginal)?;
    let mut cum = Vec::with_capacity(p_u.len());
    let mut acc = 0.0f64;
    for &p in &p_u {
        acc += p;
        cum.push(acc);
    }
    let draw = |rng: &mut ChaCha8Rng| -> u8 {
        let r = rng.gen::<f64>() * acc;
        cum.partition_point(|&c| c < r).min(p_u.len() - 1) as u8
    };
    let mut symbols = vec![0u8; num_cw * n];
    for s in symbols.iter_mut() {
        *s = draw(rng);
    }

    // Balanced labels, shuffled so bin membership is independent of the
    // codeword index.
    let mut labels: Vec<u32> = (0..num_cw).map(|i| (i % num_bins) as u32).collect();
    labels.shuffle(rng);
    let mut bins = vec![Vec::with_capacity(num_cw / num_bins + 1); num_bins];
    for (i, &b) in labels.iter().enumerate() {
        bins[b as usize].push(i as u32);
    }
    Ok(Codebook {
        n,
        u_alphabet: channel.output_size(),
        symbols,
        bin_of: labels,
        bins,
    })
}

/// Outcome of quantize-and-bin for one source string.
#[derive(Debug, Clone)]
pub struct EncodeOutcome {
    pub codeword: usize,
    pub bin: usize,
    /// Joint type of (source, codeword), row-major over (x, u).
    pub joint_type: Vec<f64>,
    /// False when no codeword was jointly typical and index 0 was sent.
    pub typical: bool,
}

fn pair_counts(a: &[u8], b: &[u8], na: usize, nb: usize, scratch: &mut [u32]) {
    debug_assert_eq!(scratch.len(), na * nb);
    scratch.fill(0);
    for (&x, &u) in a.iter().zip(b.iter()) {
        scratch[x as usize * nb + u as usize] += 1;
    }
}

fn counts_typical(counts: &[u32], n: usize, reference: &[f64], mu: f64) -> bool {
    let inv = 1.0 / n as f64;
    counts.iter().zip(reference.iter()).all(|(&c, &r)| {
        if r <= crate::pmf::STRUCTURAL_ZERO {
            c == 0
        } else {
            (c as f64 * inv - r).abs() <= mu
        }
    })
}

/// Quantizes `x_seq` to the first (lowest-index) codeword jointly
/// `mu`-typical with it under `reference` (a two-variable joint over
/// (source, auxiliary)); falls back to codeword 0 when none is typical.
pub fn encode(
    x_seq: &[u8],
    cb: &Codebook,
    reference: &JointPMF,
    mu: f64,
) -> Result<EncodeOutcome, SimError> {
    if x_seq.len() != cb.n {
        return Err(SimError::ReferenceMismatch(format!(
            "sequence length {} vs codebook blocklength {}",
            x_seq.len(),
            cb.n
        )));
    }
    if reference.num_vars() != 2 || reference.variables()[1].size != cb.u_alphabet {
        return Err(SimError::ReferenceMismatch(
            "reference must be a (source, auxiliary) joint".into(),
        ));
    }
    if !(mu > 0.0) {
        return Err(SimError::BadConfig("mu must be positive".into()));
    }
    let nx = reference.variables()[0].size;
    let nu = cb.u_alphabet;
    let mut counts = vec![0u32; nx * nu];
    let mut chosen = None;
    for i in 0..cb.num_codewords() {
        pair_counts(x_seq, cb.codeword(i), nx, nu, &mut counts);
        if counts_typical(&counts, cb.n, reference.probs(), mu) {
            chosen = Some(i);
            break;
        }
    }
    let (codeword, typical) = match chosen {
        Some(i) => (i, true),
        None => (0, false),
    };
    pair_counts(x_seq, cb.codeword(codeword), nx, nu, &mut counts);
    let joint_type = counts
        .iter()
        .map(|&c| c as f64 / cb.n as f64)
        .collect();
    Ok(EncodeOutcome {
        codeword,
        bin: cb.bin_of(codeword),
        joint_type,
        typical,
    })
}

/// Picks the codeword in `bin` minimizing the empirical joint entropy with
/// the detector sequence; ties break to the lowest index.
pub fn decode_min_entropy(
    cb: &Codebook,
    bin: usize,
    det_seq: &[u8],
    det_alphabet: usize,
) -> Result<usize, SimError> {
    if det_seq.len() != cb.n {
        return Err(SimError::ReferenceMismatch(
            "detector sequence length mismatch".into(),
        ));
    }
    let members = cb.bin(bin);
    if members.is_empty() {
        return Err(SimError::EmptyBin(bin));
    }
    let nu = cb.u_alphabet;
    let mut counts = vec![0u32; nu * det_alphabet];
    let mut best = (f64::INFINITY, usize::MAX);
    for &i in members.iter() {
        let i = i as usize;
        pair_counts(cb.codeword(i), det_seq, nu, det_alphabet, &mut counts);
        // H = log2 n - (1/n) sum c log2 c; the constant terms are shared,
        // so compare sum c log2 c (larger is lower entropy).
        let score: f64 = counts
            .iter()
            .filter(|&&c| c > 0)
            .map(|&c| c as f64 * (c as f64).log2())
            .sum();
        let h = -score;
        if h < best.0 {
            best = (h, i);
        }
    }
    Ok(best.1)
}

/// Detector decision.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Decision {
    H0,
    H1,
}

/// Declares H0 iff both the sent (source, codeword) joint type and the
/// (decoded codeword, detector tuple) pair are `mu`-typical for their
/// null-hypothesis references.
pub fn detect(
    u_hat: &[u8],
    sent_joint_type: &[f64],
    det_seq: &[u8],
    ref_xu: &JointPMF,
    ref_ud: &JointPMF,
    mu: f64,
) -> Result<Decision, SimError> {
    if !(mu > 0.0) {
        return Err(SimError::BadConfig("mu must be positive".into()));
    }
    if sent_joint_type.len() != ref_xu.probs().len() {
        return Err(SimError::ReferenceMismatch(
            "sent joint type shape mismatch".into(),
        ));
    }
    if u_hat.len() != det_seq.len() {
        return Err(SimError::ReferenceMismatch(
            "decoded/detector length mismatch".into(),
        ));
    }
    if !type_is_typical(sent_joint_type, ref_xu.probs(), mu) {
        return Ok(Decision::H1);
    }
    let nu = ref_ud.variables()[0].size;
    let nd = ref_ud.variables()[1].size;
    let n = det_seq.len();
    let mut counts = vec![0u32; nu * nd];
    pair_counts(u_hat, det_seq, nu, nd, &mut counts);
    if counts_typical(&counts, n, ref_ud.probs(), mu) {
        Ok(Decision::H0)
    } else {
        Ok(Decision::H1)
    }
}

/// Per-blocklength empirical error statistics.
#[derive(Debug, Clone, Serialize)]
pub struct RunStats {
    pub n: usize,
    pub trials: usize,
    pub type1_count: usize,
    pub type2_count: usize,
    pub type1_rate: f64,
    pub type2_rate: f64,
    /// 95% Wilson score interval for the type-2 rate.
    pub type2_ci: [f64; 2],
    /// Fraction of null-hypothesis trials whose quantizer found no typical
    /// codeword.
    pub encode_failure_rate_h0: f64,
    /// `-log2(type2_rate)/n`, absent when no type-2 errors were observed.
    pub neg_log2_type2_over_n: Option<f64>,
}

/// Least-squares fit of `-log2(type2)` against `n`.
#[derive(Debug, Clone, Serialize)]
pub struct ExponentFit {
    pub slope: f64,
    pub stderr: f64,
    pub points: usize,
}

/// Full simulation output.
#[derive(Debug, Clone, Serialize)]
pub struct SimResult {
    /// Rates at the largest blocklength run.
    pub type1_rate: f64,
    pub type2_rate: f64,
    pub type2_ci: [f64; 2],
    pub per_n: Vec<RunStats>,
    pub exponent_estimate: Option<ExponentFit>,
    /// Blocklengths dropped from the fit for lack of type-2 errors.
    pub excluded_n: Vec<usize>,
    /// The sent joint type travels out of band and is not charged against
    /// the rate.
    pub joint_type_rate_not_charged: bool,
}

fn wilson_interval(count: usize, trials: usize) -> [f64; 2] {
    let z = 1.959963984540054f64;
    let n = trials as f64;
    let p = count as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    [(center - half).max(0.0), (center + half).min(1.0)]
}

/// Least-squares slope of `-log2(type2_rate)` against `n` over blocklength
/// rows `(n, type2_rate)`. Rows without errors cannot contribute a finite
/// point; at least 3 distinct contributing blocklengths are required.
pub fn estimate_exponent(rows: &[(usize, f64)]) -> Result<ExponentFit, SimError> {
    let pts: Vec<(f64, f64)> = rows
        .iter()
        .filter(|&&(_, rate)| rate > 0.0)
        .map(|&(n, rate)| (n as f64, -rate.log2()))
        .collect();
    let mut ns: Vec<f64> = pts.iter().map(|&(n, _)| n).collect();
    ns.sort_by(|a, b| a.partial_cmp(b).unwrap());
    ns.dedup();
    if ns.len() < 3 {
        return Err(SimError::InsufficientData(format!(
            "{} blocklengths with nonzero type-2 counts, need 3",
            ns.len()
        )));
    }
    let m = pts.len() as f64;
    let mean_x = pts.iter().map(|&(x, _)| x).sum::<f64>() / m;
    let mean_y = pts.iter().map(|&(_, y)| y).sum::<f64>() / m;
    let sxx: f64 = pts.iter().map(|&(x, _)| (x - mean_x) * (x - mean_x)).sum();
    let sxy: f64 = pts.iter().map(|&(x, y)| (x - mean_x) * (y - mean_y)).sum();
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_x;
    let ss_res: f64 = pts
        .iter()
        .map(|&(x, y)| {
            let r = y - (intercept + slope * x);
            r * r
        })
        .sum();
    let dof = (m - 2.0).max(1.0);
    let stderr = (ss_res / dof / sxx).sqrt();
    Ok(ExponentFit {
        slope,
        stderr,
        points: pts.len(),
    })
}

/// Everything a trial worker needs, immutable and shared.
struct TrialSetup {
    n: usize,
    mu: f64,
    nd: usize,
    /// Cumulative joint over (x, d) under the null and the alternate.
    cum_p: Vec<f64>,
    cum_q: Vec<f64>,
    ref_xu: JointPMF,
    ref_ud: JointPMF,
}

impl TrialSetup {
    fn sample_pair(&self, rng: &mut ChaCha8Rng, under_null: bool) -> (u8, u8) {
        let cum = if under_null { &self.cum_p } else { &self.cum_q };
        let total = *cum.last().unwrap();
        let r = rng.gen::<f64>() * total;
        let idx = cum.partition_point(|&c| c < r).min(cum.len() - 1);
        ((idx / self.nd) as u8, (idx % self.nd) as u8)
    }
}

struct TrialOutcome {
    decided_h0: bool,
    encode_failed: bool,
}

fn run_trial(
    setup: &TrialSetup,
    cb: &Codebook,
    rng: &mut ChaCha8Rng,
    under_null: bool,
) -> Result<TrialOutcome, SimError> {
    let n = setup.n;
    let mut xs = vec![0u8; n];
    let mut ds = vec![0u8; n];
    for i in 0..n {
        let (x, d) = setup.sample_pair(rng, under_null);
        xs[i] = x;
        ds[i] = d;
    }
    let enc = encode(&xs, cb, &setup.ref_xu, setup.mu)?;
    let decoded = decode_min_entropy(cb, enc.bin, &ds, setup.nd)?;
    let decision = detect(
        cb.codeword(decoded),
        &enc.joint_type,
        &ds,
        &setup.ref_xu,
        &setup.ref_ud,
        setup.mu,
    )?;
    Ok(TrialOutcome {
        decided_h0: decision == Decision::H0,
        encode_failed: !enc.typical,
    })
}

fn setup_for(
    h: &HypothesisPair,
    channel: &TestChannel,
    n: usize,
    mu: f64,
) -> Result<TrialSetup, SimError> {
    if h.num_encoders() != 1 {
        return Err(SimError::NotOneEncoder(h.num_encoders()));
    }
    let roles = h.roles();
    let x1 = roles.x[0].as_str();
    let xi = h.p().indices_of(&[x1])?;
    let rest: Vec<usize> = (0..h.p().num_vars())
        .filter(|i| !xi.contains(i))
        .collect();
    let (dims, p_xd) = h.p().grouped(&[&xi, &rest]);
    let (_, q_xd) = h.q().grouped(&[&xi, &rest]);
    let (nx, nd) = (dims[0], dims[1]);
    if channel.input_size() != nx {
        return Err(SimError::ReferenceMismatch(format!(
            "channel input {} vs source alphabet {nx}",
            channel.input_size()
        )));
    }
    if nx > 256 || nd > 256 {
        return Err(SimError::BadConfig(
            "alphabets larger than 256 are outside the simulator's scale".into(),
        ));
    }
    let nu = channel.output_size();

    let p_x: Vec<f64> = (0..nx)
        .map(|x| (0..nd).map(|d| p_xd[x * nd + d]).sum())
        .collect();
    let mut ref_xu_probs = vec![0.0f64; nx * nu];
    for x in 0..nx {
        for (u, &c) in channel.row(x).iter().enumerate() {
            ref_xu_probs[x * nu + u] = p_x[x] * c;
        }
    }
    let ref_xu = JointPMF::new(
        vec![Variable::new("X", nx), Variable::new("U", nu)],
        ref_xu_probs,
    )?;
    let mut ref_ud_probs = vec![0.0f64; nu * nd];
    for x in 0..nx {
        for (u, &c) in channel.row(x).iter().enumerate() {
            if c == 0.0 {
                continue;
            }
            for d in 0..nd {
                ref_ud_probs[u * nd + d] += p_xd[x * nd + d] * c;
            }
        }
    }
    let ref_ud = JointPMF::new(
        vec![Variable::new("U", nu), Variable::new("D", nd)],
        ref_ud_probs,
    )?;

    let cum = |table: &[f64]| -> Vec<f64> {
        let mut acc = 0.0;
        table
            .iter()
            .map(|&p| {
                acc += p;
                acc
            })
            .collect()
    };
    Ok(TrialSetup {
        n,
        mu,
        nd,
        cum_p: cum(&p_xd),
        cum_q: cum(&q_xd),
        ref_xu,
        ref_ud,
    })
}

const STREAM_SHARED_CODEBOOK: u64 = 1 << 63;
const STREAM_TRIAL_CODEBOOK: u64 = 1 << 62;

fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn single_blocklength(
    cfg: &SimConfig,
    h: &HypothesisPair,
    channel: &TestChannel,
    n: usize,
    n_index: usize,
) -> Result<RunStats, SimError> {
    let setup = setup_for(h, channel, n, cfg.mu)?;
    let p_x: Vec<f64> = {
        let xi = h.p().indices_of(&[h.roles().x[0].as_str()])?;
        let (_, px) = h.p().grouped(&[&xi]);
        px
    };
    let shared_cb = if cfg.shared_codebook {
        let mut rng = stream_rng(cfg.seed, STREAM_SHARED_CODEBOOK | n_index as u64);
        Some(build_codebook_for_n(channel, &p_x, cfg, n, &mut rng)?)
    } else {
        None
    };

    let run_side = |under_null: bool| -> Result<(usize, usize), SimError> {
        let hyp_bit = u64::from(!under_null);
        let outcomes: Vec<Result<TrialOutcome, SimError>> = (0..cfg.trials)
            .into_par_iter()
            .map(|t| {
                let data_stream = ((t as u64) << 1) | hyp_bit;
                let mut rng = stream_rng(cfg.seed, data_stream);
                let owned_cb;
                let cb = match &shared_cb {
                    Some(cb) => cb,
                    None => {
                        let mut cb_rng = stream_rng(
                            cfg.seed,
                            STREAM_TRIAL_CODEBOOK | ((t as u64) << 1) | hyp_bit,
                        );
                        owned_cb = build_codebook_for_n(channel, &p_x, cfg, n, &mut cb_rng)?;
                        &owned_cb
                    }
                };
                run_trial(&setup, cb, &mut rng, under_null)
            })
            .collect();
        let mut errors = 0usize;
        let mut encode_failures = 0usize;
        for o in outcomes {
            let o = o?;
            let is_error = if under_null { !o.decided_h0 } else { o.decided_h0 };
            errors += usize::from(is_error);
            encode_failures += usize::from(o.encode_failed);
        }
        Ok((errors, encode_failures))
    };

    let (type1_count, h0_encode_failures) = run_side(true)?;
    let (type2_count, _) = run_side(false)?;
    let trials = cfg.trials;
    let type2_rate = type2_count as f64 / trials as f64;
    Ok(RunStats {
        n,
        trials,
        type1_count,
        type2_count,
        type1_rate: type1_count as f64 / trials as f64,
        type2_rate,
        type2_ci: wilson_interval(type2_count, trials),
        encode_failure_rate_h0: h0_encode_failures as f64 / trials as f64,
        neg_log2_type2_over_n: (type2_count > 0).then(|| -type2_rate.log2() / n as f64),
    })
}

/// Runs `cfg.trials` independent trials under each hypothesis for every
/// configured blocklength; deterministic in `(cfg, seed)` regardless of
/// thread count. The exponent regression appears once at least three
/// blocklengths record type-2 errors.
pub fn run_trials(
    cfg: &SimConfig,
    h: &HypothesisPair,
    channel: &TestChannel,
) -> Result<SimResult, SimError> {
    cfg.validate()?;
    let mut per_n = Vec::new();
    for (k, &n) in cfg.blocklengths().iter().enumerate() {
        per_n.push(single_blocklength(cfg, h, channel, n, k)?);
    }
    let rows: Vec<(usize, f64)> = per_n
        .iter()
        .map(|r| (r.n, r.type2_rate))
        .collect();
    let excluded_n: Vec<usize> = per_n
        .iter()
        .filter(|r| r.type2_count == 0)
        .map(|r| r.n)
        .collect();
    let exponent_estimate = if per_n.len() >= 3 {
        estimate_exponent(&rows).ok()
    } else {
        None
    };
    let head = per_n
        .iter()
        .max_by_key(|r| r.n)
        .expect("at least one blocklength");
    Ok(SimResult {
        type1_rate: head.type1_rate,
        type2_rate: head.type2_rate,
        type2_ci: head.type2_ci,
        per_n,
        exponent_estimate,
        excluded_n,
        joint_type_rate_not_charged: true,
    })
}

/// CSV rows `(n, type1, type2, -log2(type2)/n)` for a sweep result.
pub fn result_to_csv(result: &SimResult) -> String {
    let mut out = String::from("n,type1,type2,neg_log2_type2_over_n\n");
    for r in &result.per_n {
        match r.neg_log2_type2_over_n {
            Some(v) => out.push_str(&format!(
                "{},{:.11e},{:.11e},{:.11e}\n",
                r.n, r.type1_rate, r.type2_rate, v
            )),
            None => out.push_str(&format!("{},{:.11e},{:.11e},\n", r.n, r.type1_rate, r.type2_rate)),
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hypothesis::{ci_alternate_from_null, Roles};

    fn dsbs_pair(crossover: f64) -> HypothesisPair {
        let e = crossover;
        let p = JointPMF::new(
            vec![Variable::new("X1", 2), Variable::new("Y", 2)],
            vec![0.5 * (1.0 - e), 0.5 * e, 0.5 * e, 0.5 * (1.0 - e)],
        )
        .unwrap();
        let roles = Roles {
            x: vec!["X1".into()],
            side: None,
            y: "Y".into(),
            z: None,
        };
        let q = ci_alternate_from_null(&p, &roles).unwrap();
        HypothesisPair::new(p, q, roles, true).unwrap()
    }

    fn base_cfg() -> SimConfig {
        SimConfig {
            n: 12,
            codebook_rate: 0.75,
            bin_rate: 0.75,
            mu: 0.1,
            epsilon: 0.05,
            trials: 500,
            seed: 7,
            n_list: None,
            shared_codebook: true,
        }
    }

    #[test]
    fn config_validation() {
        let mut cfg = base_cfg();
        cfg.trials = 0;
        assert!(matches!(cfg.validate(), Err(SimError::BadConfig(_))));
        let mut cfg = base_cfg();
        cfg.bin_rate = 1.0;
        assert!(cfg.validate().is_err());
        let mut cfg = base_cfg();
        cfg.n = 64;
        assert!(matches!(
            cfg.validate(),
            Err(SimError::CodebookCapExceeded { .. })
        ));
    }

    #[test]
    fn codebook_shape_and_determinism() {
        let cfg = base_cfg();
        let ch = TestChannel::binary_symmetric(0.15).unwrap();
        let src = [0.5, 0.5];
        let mut rng = stream_rng(cfg.seed, STREAM_SHARED_CODEBOOK);
        let cb = build_codebook(&ch, &src, &cfg, &mut rng).unwrap();
        assert_eq!(cb.num_codewords(), 1 << 9); // ceil(12 * 0.75) = 9
        assert_eq!(cb.num_bins(), 1 << 9);
        // One codeword per bin in the no-binning regime.
        assert!((0..cb.num_bins()).all(|b| cb.bin(b).len() == 1));
        let mut rng2 = stream_rng(cfg.seed, STREAM_SHARED_CODEBOOK);
        let cb2 = build_codebook(&ch, &src, &cfg, &mut rng2).unwrap();
        assert_eq!(cb.symbols, cb2.symbols);
        assert_eq!(cb.bin_of, cb2.bin_of);
        // Bin sizes differ by at most one in the binned regime.
        let mut cfg_binned = cfg.clone();
        cfg_binned.bin_rate = 0.4;
        let mut rng3 = stream_rng(cfg.seed, STREAM_SHARED_CODEBOOK);
        let cb3 = build_codebook(&ch, &src, &cfg_binned, &mut rng3).unwrap();
        let sizes: Vec<usize> = (0..cb3.num_bins()).map(|b| cb3.bin(b).len()).collect();
        let (min, max) = (sizes.iter().min().unwrap(), sizes.iter().max().unwrap());
        assert!(max - min <= 1);
    }

    #[test]
    fn codebook_symbol_frequency_concentrates() {
        // n = 8, rate 1: 256 codewords; symbol frequency within 3 sigma of
        // the auxiliary marginal.
        let mut cfg = base_cfg();
        cfg.n = 8;
        cfg.codebook_rate = 1.0;
        cfg.bin_rate = 1.0;
        let ch = TestChannel::binary_symmetric(0.15).unwrap();
        let src = [0.5, 0.5];
        let mut rng = stream_rng(42, STREAM_SHARED_CODEBOOK);
        let cb = build_codebook(&ch, &src, &cfg, &mut rng).unwrap();
        let total = (cb.num_codewords() * cb.n()) as f64;
        let ones = cb.symbols.iter().filter(|&&s| s == 1).count() as f64;
        let p = 0.5; // symmetric channel on a symmetric source
        let sigma = (p * (1.0 - p) / total).sqrt();
        assert!((ones / total - p).abs() <= 3.0 * sigma);
    }

    #[test]
    fn encode_picks_first_typical() {
        // Codebook containing the source string itself, identity channel.
        let x = [0u8, 1, 0, 1];
        let symbols = vec![1u8, 1, 1, 1, 0, 1, 0, 1, 0, 0, 0, 0];
        let cb = Codebook::from_parts(4, 2, symbols, 3).unwrap();
        let reference = JointPMF::new(
            vec![Variable::new("X", 2), Variable::new("U", 2)],
            vec![0.5, 0.0, 0.0, 0.5],
        )
        .unwrap();
        let out = encode(&x, &cb, &reference, 0.05).unwrap();
        assert_eq!(out.codeword, 1);
        assert!(out.typical);
        // mu = 1 with a full-support reference accepts everything: index 0.
        let loose = JointPMF::new(
            vec![Variable::new("X", 2), Variable::new("U", 2)],
            vec![0.25; 4],
        )
        .unwrap();
        let out = encode(&x, &cb, &loose, 1.0).unwrap();
        assert_eq!(out.codeword, 0);
        // No typical codeword: falls back to index 0, flagged.
        let out = encode(&x, &cb, &reference, 1e-6);
        let out = out.unwrap();
        assert_eq!(out.codeword, 1); // the exact match is still typical
        let mismatched = [0u8, 0, 0, 0];
        let out = encode(&mismatched, &cb, &reference, 0.05).unwrap();
        assert!(!out.typical);
        assert_eq!(out.codeword, 0);
    }

    #[test]
    fn decode_min_entropy_prefers_aligned_codeword() {
        // Bin with the aligned codeword and an anti-aligned one; the joint
        // type with y of the aligned codeword has lower entropy.
        let y = [0u8, 0, 1, 1, 0, 1, 0, 1];
        let aligned = [0u8, 0, 1, 1, 0, 1, 0, 1];
        let mixed = [1u8, 0, 0, 1, 1, 0, 0, 1];
        let mut symbols = Vec::new();
        symbols.extend_from_slice(&mixed);
        symbols.extend_from_slice(&aligned);
        let cb = Codebook::from_parts(8, 2, symbols, 1).unwrap();
        let decoded = decode_min_entropy(&cb, 0, &y, 2).unwrap();
        assert_eq!(decoded, 1);
        // Identical codewords tie to the lowest index.
        let mut symbols = Vec::new();
        symbols.extend_from_slice(&aligned);
        symbols.extend_from_slice(&aligned);
        let cb = Codebook::from_parts(8, 2, symbols, 1).unwrap();
        assert_eq!(decode_min_entropy(&cb, 0, &y, 2).unwrap(), 0);
        // Single-codeword bin returns it.
        let cb = Codebook::from_parts(8, 2, aligned.to_vec(), 1).unwrap();
        assert_eq!(decode_min_entropy(&cb, 0, &y, 2).unwrap(), 0);
    }

    #[test]
    fn detect_vacuous_and_strict() {
        let ref_xu = JointPMF::new(
            vec![Variable::new("X", 2), Variable::new("U", 2)],
            vec![0.4, 0.1, 0.1, 0.4],
        )
        .unwrap();
        let ref_ud = JointPMF::new(
            vec![Variable::new("U", 2), Variable::new("D", 2)],
            vec![0.4, 0.1, 0.1, 0.4],
        )
        .unwrap();
        let u = [0u8, 1, 0, 1];
        let d = [1u8, 0, 1, 0];
        // mu = 1 with full-support references accepts anything.
        let sent = vec![0.25; 4];
        assert_eq!(
            detect(&u, &sent, &d, &ref_xu, &ref_ud, 1.0).unwrap(),
            Decision::H0
        );
        // An anti-aligned pair fails the second check at small mu.
        assert_eq!(
            detect(&u, &vec![0.4, 0.1, 0.1, 0.4], &d, &ref_xu, &ref_ud, 0.2).unwrap(),
            Decision::H1
        );
    }

    #[test]
    fn trials_zero_rejected_and_identical_measures_balance() {
        let pair = dsbs_pair(0.1);
        let ch = TestChannel::binary_symmetric(0.15).unwrap();
        let mut cfg = base_cfg();
        cfg.trials = 0;
        assert!(run_trials(&cfg, &pair, &ch).is_err());

        // P = Q: the acceptance event has the same probability under both
        // hypotheses, so type1 + type2 = 1 up to Monte Carlo noise.
        let p = pair.p().clone();
        let roles = pair.roles().clone();
        let same = HypothesisPair::new(p.clone(), p, roles, false).unwrap();
        let mut cfg = base_cfg();
        cfg.trials = 4000;
        let res = run_trials(&cfg, &same, &ch).unwrap();
        let sum = res.type1_rate + res.type2_rate;
        let sigma = (2.0 * 0.25f64 / cfg.trials as f64).sqrt();
        assert!(
            (sum - 1.0).abs() <= 3.0 * sigma,
            "type1 + type2 = {sum}, tolerance {}",
            3.0 * sigma
        );
    }

    #[test]
    fn deterministic_across_thread_counts() {
        let pair = dsbs_pair(0.1);
        let ch = TestChannel::binary_symmetric(0.15).unwrap();
        let mut cfg = base_cfg();
        cfg.trials = 300;
        let run = |threads: usize| {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap();
            pool.install(|| run_trials(&cfg, &pair, &ch).unwrap())
        };
        let a = run(1);
        let b = run(4);
        assert_eq!(
            serde_json::to_string(&a).unwrap(),
            serde_json::to_string(&b).unwrap()
        );
    }

    #[test]
    fn covering_improves_with_codebook_rate() {
        // DSBS instance at n = 12: encoding failures drop as the codebook
        // rate margin over I(X;U) grows from 0.05 to 0.3.
        let pair = dsbs_pair(0.1);
        let ch = TestChannel::binary_symmetric(0.15).unwrap();
        let i_xu = 1.0 - crate::measures::binary_entropy(0.15).unwrap();
        let failure_at = |margin: f64| {
            let mut cfg = base_cfg();
            cfg.n = 12;
            cfg.trials = 2000;
            cfg.mu = 0.1;
            cfg.codebook_rate = i_xu + margin;
            cfg.bin_rate = cfg.codebook_rate;
            let res = run_trials(&cfg, &pair, &ch).unwrap();
            res.per_n[0].encode_failure_rate_h0
        };
        let low = failure_at(0.05);
        let high = failure_at(0.3);
        assert!(
            high <= low + 0.02,
            "failure rate should not grow with margin: {low} -> {high}"
        );
    }

    #[test]
    fn exponent_fit_examples() {
        // Exact synthetic line: eta = 2^{-0.4 n}.
        let rows: Vec<(usize, f64)> = [10usize, 20, 30, 40]
            .iter()
            .map(|&n| (n, (-0.4 * n as f64).exp2()))
            .collect();
        let fit = estimate_exponent(&rows).unwrap();
        assert!((fit.slope - 0.4).abs() < 1e-12);
        assert!(fit.stderr < 1e-9);

        // +-10% multiplicative noise keeps the slope within 0.02.
        let mut rng = stream_rng(5, 0);
        let noisy: Vec<(usize, f64)> = (1..=6)
            .map(|k| {
                let n = 10 * k;
                let eta = (-0.4 * n as f64).exp2() * (1.0 + 0.2 * (rng.gen::<f64>() - 0.5));
                (n, eta)
            })
            .collect();
        let fit = estimate_exponent(&noisy).unwrap();
        assert!((fit.slope - 0.4).abs() < 0.02);

        // Degenerate inputs are errors.
        assert!(estimate_exponent(&[(10, 0.5)]).is_err());
        assert!(estimate_exponent(&[(10, 0.5), (20, 0.25), (30, 0.0)]).is_err());
    }

    #[test]
    fn fast_typicality_matches_reference_path() {
        let reference = JointPMF::new(
            vec![Variable::new("X", 2), Variable::new("U", 2)],
            vec![0.4, 0.1, 0.2, 0.3],
        )
        .unwrap();
        let mut rng = stream_rng(11, 0);
        for _ in 0..200 {
            let n = 16;
            let a: Vec<usize> = (0..n).map(|_| rng.gen_range(0..2)).collect();
            let b: Vec<usize> = (0..n).map(|_| rng.gen_range(0..2)).collect();
            let mu = 0.01 + rng.gen::<f64>() * 0.4;
            let slow =
                crate::typicality::is_jointly_typical(&[&a, &b], &reference, mu).unwrap();
            let a8: Vec<u8> = a.iter().map(|&v| v as u8).collect();
            let b8: Vec<u8> = b.iter().map(|&v| v as u8).collect();
            let mut counts = vec![0u32; 4];
            pair_counts(&a8, &b8, 2, 2, &mut counts);
            let fast = counts_typical(&counts, n, reference.probs(), mu);
            assert_eq!(slow, fast);
        }
    }
}
