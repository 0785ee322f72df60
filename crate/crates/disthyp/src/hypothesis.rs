//! Binary hypothesis pairs over a shared variable list, with a role map
//! naming which variables are encoder observations, detector side
//! information, the detector observation itself, and the conditioning
//! variable. The conditional-independence flag marks instances whose
//! alternate hypothesis factors the detector observation from the encoder
//! side given the conditioning variable.

use crate::pmf::{JointPMF, PmfError};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Residual tolerance for the conditional-independence factorization and
/// marginal-agreement checks.
pub const CI_TOL: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum HypothesisError {
    #[error(transparent)]
    Pmf(#[from] PmfError),
    #[error("P and Q must share an identical variable list")]
    VariableListMismatch,
    #[error("role `{0}` names unknown variable `{1}`")]
    UnknownRoleVariable(String, String),
    #[error("variable `{0}` is assigned more than one role")]
    DuplicateRole(String),
    #[error("variable `{0}` has no role")]
    UnassignedVariable(String),
    #[error("at least one encoder variable is required")]
    NoEncoders,
    #[error("pair is not conditionally independent under H1: {0}")]
    NotConditionallyIndependent(String),
    #[error("operation requires a CI-flagged pair")]
    CiRequired,
}

/// Which variable plays which part. `x` lists the encoder observations in
/// order; `side` is the detector's extra observation (optional); `y` is the
/// detector observation tested for dependence; `z` is the conditioning
/// variable (optional).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Roles {
    pub x: Vec<String>,
    #[serde(default)]
    pub side: Option<String>,
    pub y: String,
    #[serde(default)]
    pub z: Option<String>,
}

impl Roles {
    pub fn num_encoders(&self) -> usize {
        self.x.len()
    }

    /// Encoder variables followed by the side variable, as string slices.
    pub fn x_side(&self) -> Vec<&str> {
        let mut v: Vec<&str> = self.x.iter().map(String::as_str).collect();
        if let Some(s) = &self.side {
            v.push(s.as_str());
        }
        v
    }

    pub fn side_slice(&self) -> Vec<&str> {
        self.side.iter().map(String::as_str).collect()
    }

    pub fn z_slice(&self) -> Vec<&str> {
        self.z.iter().map(String::as_str).collect()
    }
}

/// Wire format for a hypothesis pair:
/// `{"P": JointPMF, "Q": JointPMF, "roles": {...}, "ci": bool}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "HypothesisPairRepr", into = "HypothesisPairRepr")]
pub struct HypothesisPair {
    p: JointPMF,
    q: JointPMF,
    roles: Roles,
    ci: bool,
}

#[derive(Serialize, Deserialize)]
struct HypothesisPairRepr {
    #[serde(rename = "P")]
    p: JointPMF,
    #[serde(rename = "Q")]
    q: JointPMF,
    roles: Roles,
    #[serde(default)]
    ci: bool,
}

impl TryFrom<HypothesisPairRepr> for HypothesisPair {
    type Error = HypothesisError;
    fn try_from(r: HypothesisPairRepr) -> Result<Self, HypothesisError> {
        HypothesisPair::new(r.p, r.q, r.roles, r.ci)
    }
}

impl From<HypothesisPair> for HypothesisPairRepr {
    fn from(h: HypothesisPair) -> Self {
        HypothesisPairRepr {
            p: h.p,
            q: h.q,
            roles: h.roles,
            ci: h.ci,
        }
    }
}

impl HypothesisPair {
    /// Validates the variable lists, the role map (total, disjoint), and,
    /// when `ci` is set, the conditional-independence structure of `q`.
    pub fn new(
        p: JointPMF,
        q: JointPMF,
        roles: Roles,
        ci: bool,
    ) -> Result<Self, HypothesisError> {
        if p.variables() != q.variables() {
            return Err(HypothesisError::VariableListMismatch);
        }
        if roles.x.is_empty() {
            return Err(HypothesisError::NoEncoders);
        }
        let mut role_names: Vec<(&'static str, &str)> =
            roles.x.iter().map(|n| ("x", n.as_str())).collect();
        if let Some(s) = &roles.side {
            role_names.push(("side", s.as_str()));
        }
        role_names.push(("y", roles.y.as_str()));
        if let Some(z) = &roles.z {
            role_names.push(("z", z.as_str()));
        }
        for (i, &(role, name)) in role_names.iter().enumerate() {
            if p.var_index(name).is_err() {
                return Err(HypothesisError::UnknownRoleVariable(
                    role.to_string(),
                    name.to_string(),
                ));
            }
            if role_names[..i].iter().any(|&(_, n)| n == name) {
                return Err(HypothesisError::DuplicateRole(name.to_string()));
            }
        }
        for v in p.variables() {
            if !role_names.iter().any(|&(_, n)| n == v.name) {
                return Err(HypothesisError::UnassignedVariable(v.name.clone()));
            }
        }
        let pair = Self { p, q, roles, ci };
        if ci {
            pair.verify_ci()?;
        }
        Ok(pair)
    }

    pub fn p(&self) -> &JointPMF {
        &self.p
    }

    pub fn q(&self) -> &JointPMF {
        &self.q
    }

    pub fn roles(&self) -> &Roles {
        &self.roles
    }

    pub fn is_ci(&self) -> bool {
        self.ci
    }

    pub fn num_encoders(&self) -> usize {
        self.roles.num_encoders()
    }

    pub fn require_ci(&self) -> Result<(), HypothesisError> {
        if self.ci {
            Ok(())
        } else {
            Err(HypothesisError::CiRequired)
        }
    }

    /// Checks, within [`CI_TOL`]:
    /// - the (encoder side, z) and (y, z) marginals agree across P and Q, and
    /// - Q factors as P_{xside|z} * P_{y|z} * P_z, verified in the
    ///   division-free form Q(x,y,z) P(z) = P(x,z) P(y,z).
    fn verify_ci(&self) -> Result<(), HypothesisError> {
        let xs = self.roles.x_side();
        let z = self.roles.z_slice();
        let y = [self.roles.y.as_str()];

        let mut xz: Vec<&str> = xs.clone();
        xz.extend(z.iter());
        let p_xz = self.p.marginalize(&xz)?;
        let q_xz = self.q.marginalize(&xz)?;
        let d = p_xz.max_abs_diff(&q_xz)?;
        if d > CI_TOL {
            return Err(HypothesisError::NotConditionallyIndependent(format!(
                "(encoder side, z) marginals differ by {d}"
            )));
        }

        let mut yz: Vec<&str> = y.to_vec();
        yz.extend(z.iter());
        let p_yz = self.p.marginalize(&yz)?;
        let q_yz = self.q.marginalize(&yz)?;
        let d = p_yz.max_abs_diff(&q_yz)?;
        if d > CI_TOL {
            return Err(HypothesisError::NotConditionallyIndependent(format!(
                "(y, z) marginals differ by {d}"
            )));
        }

        // Factorization residual, evaluated on grouped tables indexed
        // (xside, y, z).
        let xi = self.q.indices_of(&xs)?;
        let yi = self.q.indices_of(&y)?;
        let zi = self.q.indices_of(&z)?;
        let (dims, q_xyz) = self.q.grouped(&[&xi, &yi, &zi]);
        let (_, p_xz_t) = self.p.grouped(&[&xi, &zi]);
        let (_, p_yz_t) = self.p.grouped(&[&yi, &zi]);
        let (_, p_z_t) = self.p.grouped(&[&zi]);
        let (nx, ny, nz) = (dims[0], dims[1], dims[2]);
        let mut worst = 0.0f64;
        for x in 0..nx {
            for yv in 0..ny {
                for zv in 0..nz {
                    let lhs = q_xyz[(x * ny + yv) * nz + zv] * p_z_t[zv];
                    let rhs = p_xz_t[x * nz + zv] * p_yz_t[yv * nz + zv];
                    worst = worst.max((lhs - rhs).abs());
                }
            }
        }
        if worst > CI_TOL {
            return Err(HypothesisError::NotConditionallyIndependent(format!(
                "factorization residual {worst}"
            )));
        }
        Ok(())
    }
}

/// Builds the canonical CI alternate from a null joint: Q = P_{xside|z}
/// P_{y|z} P_z, which by construction shares the (xside, z) and (y, z)
/// marginals with P.
pub fn ci_alternate_from_null(p: &JointPMF, roles: &Roles) -> Result<JointPMF, HypothesisError> {
    let xs = roles.x_side();
    let y = [roles.y.as_str()];
    let z = roles.z_slice();
    let xi = p.indices_of(&xs)?;
    let yi = p.indices_of(&y)?;
    let zi = p.indices_of(&z)?;
    let (dims, _) = p.grouped(&[&xi, &yi, &zi]);
    let (_, p_xz) = p.grouped(&[&xi, &zi]);
    let (_, p_yz) = p.grouped(&[&yi, &zi]);
    let (_, p_z) = p.grouped(&[&zi]);
    let nz = dims[2];

    // Assemble Q cell by cell in the *original* variable order.
    let sizes: Vec<usize> = p.variables().iter().map(|v| v.size).collect();
    let mut probs = vec![0.0f64; p.probs().len()];
    let nvars = sizes.len();
    let mut values = vec![0usize; nvars];
    for (flat, slot) in probs.iter_mut().enumerate() {
        // Decode flat index (row-major over the original order).
        let mut rem = flat;
        for i in (0..nvars).rev() {
            values[i] = rem % sizes[i];
            rem /= sizes[i];
        }
        let mut x_idx = 0usize;
        for &vi in xi.iter() {
            x_idx = x_idx * sizes[vi] + values[vi];
        }
        let mut y_idx = 0usize;
        for &vi in yi.iter() {
            y_idx = y_idx * sizes[vi] + values[vi];
        }
        let mut z_idx = 0usize;
        for &vi in zi.iter() {
            z_idx = z_idx * sizes[vi] + values[vi];
        }
        let pz = p_z[z_idx];
        if pz <= 0.0 {
            continue;
        }
        *slot = p_xz[x_idx * nz.max(1) + z_idx] * p_yz[y_idx * nz.max(1) + z_idx] / pz;
    }
    // Renormalize away accumulated rounding before validation.
    let total: f64 = probs.iter().sum();
    for v in probs.iter_mut() {
        *v /= total;
    }
    Ok(JointPMF::new(p.variables().to_vec(), probs)?)
}
