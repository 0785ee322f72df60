//! Exact information measures over [`JointPMF`] tables, in bits.
//!
//! Conventions fixed here and used everywhere else in the crate:
//! - all logarithms are base 2,
//! - `0 log 0 = 0`,
//! - `p log(p/0) = +inf` for `p > 0`,
//! - probabilities at or below [`STRUCTURAL_ZERO`] count as structural zeros
//!   when deciding supports.

use crate::pmf::{JointPMF, PmfError, STRUCTURAL_ZERO};

/// log2(e); multiplies natural-log closed forms so every module reports bits.
pub const LOG2_E: f64 = std::f64::consts::LOG2_E;

#[derive(Debug, thiserror::Error)]
pub enum MeasureError {
    #[error(transparent)]
    Pmf(#[from] PmfError),
    #[error("probability {0} outside [0, 1]")]
    OutOfRange(f64),
}

/// Binary entropy `H_b(p) = -p log p - (1-p) log(1-p)` in bits; endpoints
/// map to 0.
pub fn binary_entropy(p: f64) -> Result<f64, MeasureError> {
    if !(0.0..=1.0).contains(&p) {
        return Err(MeasureError::OutOfRange(p));
    }
    Ok(term(p) + term(1.0 - p))
}

fn term(p: f64) -> f64 {
    if p <= 0.0 {
        0.0
    } else {
        -p * p.log2()
    }
}

/// Entropy of the marginal onto `vars` (no conditioning).
fn marginal_entropy(p: &JointPMF, vars: &[&str]) -> Result<f64, PmfError> {
    let m = p.marginalize(vars)?;
    Ok(m.probs().iter().map(|&q| term(q)).sum())
}

fn check_disjoint(groups: &[&[&str]]) -> Result<(), PmfError> {
    for (i, g) in groups.iter().enumerate() {
        for name in g.iter() {
            for h in groups[..i].iter() {
                if h.contains(name) {
                    return Err(PmfError::OverlappingSelectors(name.to_string()));
                }
            }
        }
    }
    Ok(())
}

/// Conditional entropy `H(vars | given)` in bits.
pub fn entropy(p: &JointPMF, vars: &[&str], given: &[&str]) -> Result<f64, MeasureError> {
    check_disjoint(&[vars, given])?;
    let joint: Vec<&str> = vars.iter().chain(given.iter()).copied().collect();
    Ok(marginal_entropy(p, &joint)? - marginal_entropy(p, given)?)
}

/// Conditional mutual information `I(a; b | given)` in bits.
pub fn mutual_information(
    p: &JointPMF,
    a: &[&str],
    b: &[&str],
    given: &[&str],
) -> Result<f64, MeasureError> {
    check_disjoint(&[a, b, given])?;
    let ag: Vec<&str> = a.iter().chain(given.iter()).copied().collect();
    let bg: Vec<&str> = b.iter().chain(given.iter()).copied().collect();
    let abg: Vec<&str> = a.iter().chain(b.iter()).chain(given.iter()).copied().collect();
    Ok(marginal_entropy(p, &ag)? + marginal_entropy(p, &bg)?
        - marginal_entropy(p, &abg)?
        - marginal_entropy(p, given)?)
}

/// Relative entropy `D(p || q)` in bits; `+inf` where `p` puts mass outside
/// the support of `q`; requires identical variable lists.
pub fn kl_divergence(p: &JointPMF, q: &JointPMF) -> Result<f64, MeasureError> {
    if p.variables() != q.variables() {
        return Err(PmfError::ShapeMismatch.into());
    }
    let mut d = 0.0f64;
    for (&pp, &qq) in p.probs().iter().zip(q.probs().iter()) {
        if pp <= STRUCTURAL_ZERO {
            continue;
        }
        if qq <= STRUCTURAL_ZERO {
            return Ok(f64::INFINITY);
        }
        d += pp * (pp / qq).log2();
    }
    Ok(d)
}

/// Conditional relative entropy `D(P_{target|given} || Q_{target|given} | given)`
/// in bits, with the outer expectation under `p`'s marginal on `given`.
pub fn conditional_kl(
    p: &JointPMF,
    q: &JointPMF,
    target: &[&str],
    given: &[&str],
) -> Result<f64, MeasureError> {
    check_disjoint(&[target, given])?;
    if p.variables() != q.variables() {
        return Err(PmfError::ShapeMismatch.into());
    }
    let joint: Vec<&str> = target.iter().chain(given.iter()).copied().collect();
    let ptg = p.marginalize(&joint)?;
    let qtg = q.marginalize(&joint)?;
    let pg = p.marginalize(given)?;
    let qg = q.marginalize(given)?;
    // D = sum_{t,g} p(t,g) log [ p(t,g) q(g) / (p(g) q(t,g)) ]
    let g_cells = pg.probs().len();
    let t_cells = ptg.probs().len() / g_cells.max(1);
    // `joint` orders target before given, so the flat index factors as
    // t * g_cells + g only when given is the fast axis; marginalize keeps the
    // requested order (target first), hence strides: g is fastest.
    let mut d = 0.0f64;
    for t in 0..t_cells {
        for g in 0..g_cells {
            let ptg_v = ptg.probs()[t * g_cells + g];
            if ptg_v <= STRUCTURAL_ZERO {
                continue;
            }
            let qtg_v = qtg.probs()[t * g_cells + g];
            let pg_v = pg.probs()[g];
            let qg_v = qg.probs()[g];
            if qtg_v <= STRUCTURAL_ZERO || qg_v <= STRUCTURAL_ZERO {
                return Ok(f64::INFINITY);
            }
            d += ptg_v * ((ptg_v * qg_v) / (pg_v * qtg_v)).log2();
        }
    }
    Ok(d)
}
