//! Robust joint typicality: a tuple of sequences is typical for a reference
//! pmf when every joint-type cell is within an additive slack `mu` of the
//! reference and no zero-probability cell occurs.

use crate::pmf::{empirical_joint_type, JointPMF, PmfError, STRUCTURAL_ZERO};

/// Checks robust `mu`-typicality of parallel sequences against `reference`.
/// One sequence per reference variable, equal lengths, `mu > 0`.
pub fn is_jointly_typical(
    seqs: &[&[usize]],
    reference: &JointPMF,
    mu: f64,
) -> Result<bool, PmfError> {
    if mu <= 0.0 {
        return Err(PmfError::NonPositiveMu(mu));
    }
    if seqs.len() != reference.num_vars() {
        return Err(PmfError::SequenceCountMismatch {
            expected: reference.num_vars(),
            got: seqs.len(),
        });
    }
    let sizes: Vec<usize> = reference.variables().iter().map(|v| v.size).collect();
    let joint_type = empirical_joint_type(seqs, &sizes)?;
    Ok(type_is_typical(joint_type.probs(), reference.probs(), mu))
}

/// Same check, on an already computed joint type laid out like `reference`.
pub fn type_is_typical(joint_type: &[f64], reference: &[f64], mu: f64) -> bool {
    debug_assert_eq!(joint_type.len(), reference.len());
    joint_type.iter().zip(reference.iter()).all(|(&t, &r)| {
        if r <= STRUCTURAL_ZERO {
            t <= 0.0
        } else {
            (t - r).abs() <= mu
        }
    })
}
