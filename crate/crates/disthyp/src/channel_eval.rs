//! Fast evaluation of the mutual-information quantities that drive the
//! test-channel optimizers. The auxiliary variable `U` is attached to a
//! single encoder variable `X` by a channel; the remaining variables are
//! grouped into an extra conditioning tuple `C` (detector side
//! information), the detector observation `Y`, and the conditioning tuple
//! `Z`. All quantities match the generic [`compose_channel`] +
//! [`mutual_information`] path exactly; this form just avoids rebuilding a
//! full joint per candidate channel.
//!
//! [`compose_channel`]: crate::pmf::JointPMF::compose_channel
//! [`mutual_information`]: crate::measures::mutual_information

use crate::hypothesis::HypothesisError;
use crate::pmf::JointPMF;

fn plogp(p: f64) -> f64 {
    if p > 0.0 {
        p * p.log2()
    } else {
        0.0
    }
}

/// Grouped view of a joint pmf, laid out `[x][c][y][z]` row-major.
pub(crate) struct ChannelEval {
    pub nx: usize,
    nc: usize,
    ny: usize,
    nz: usize,
    p4: Vec<f64>,
    /// y summed out: `[x][c][z]`.
    p3: Vec<f64>,
    p_x: Vec<f64>,
    p_cz: Vec<f64>,
    p_cyz: Vec<f64>,
    h_y_given_z: f64,
    i_y_c_given_z: f64,
}

/// The channel-dependent quantities needed by the region computations, all
/// in bits and all under the grouped joint the evaluator was built from.
#[derive(Debug, Clone, Copy)]
pub(crate) struct ChannelQuantities {
    /// I(Y; U, C | Z)
    pub i_y_uc_z: f64,
    /// I(X; U | C, Z)
    pub i_x_u_cz: f64,
    /// I(X; U | C, Y, Z)
    pub i_x_u_cyz: f64,
    /// I(U; X)
    pub i_u_x: f64,
}

impl ChannelEval {
    pub(crate) fn new(
        joint: &JointPMF,
        x_var: &str,
        c_vars: &[&str],
        y_var: &str,
        z_vars: &[&str],
    ) -> Result<Self, HypothesisError> {
        let xi = joint.indices_of(&[x_var])?;
        let ci = joint.indices_of(c_vars)?;
        let yi = joint.indices_of(&[y_var])?;
        let zi = joint.indices_of(z_vars)?;
        let (dims, p4) = joint.grouped(&[&xi, &ci, &yi, &zi]);
        let (nx, nc, ny, nz) = (dims[0], dims[1], dims[2], dims[3]);

        let mut p_x = vec![0.0f64; nx];
        let mut p3 = vec![0.0f64; nx * nc * nz];
        let mut p_cz = vec![0.0f64; nc * nz];
        let mut p_cyz = vec![0.0f64; nc * ny * nz];
        let mut p_yz = vec![0.0f64; ny * nz];
        let mut p_z = vec![0.0f64; nz];
        for x in 0..nx {
            for c in 0..nc {
                for y in 0..ny {
                    for z in 0..nz {
                        let v = p4[((x * nc + c) * ny + y) * nz + z];
                        p_x[x] += v;
                        p3[(x * nc + c) * nz + z] += v;
                        p_cz[c * nz + z] += v;
                        p_cyz[(c * ny + y) * nz + z] += v;
                        p_yz[y * nz + z] += v;
                        p_z[z] += v;
                    }
                }
            }
        }
        let h_yz: f64 = -p_yz.iter().map(|&v| plogp(v)).sum::<f64>();
        let h_z: f64 = -p_z.iter().map(|&v| plogp(v)).sum::<f64>();
        let h_cyz: f64 = -p_cyz.iter().map(|&v| plogp(v)).sum::<f64>();
        let h_cz: f64 = -p_cz.iter().map(|&v| plogp(v)).sum::<f64>();
        let h_y_given_z = h_yz - h_z;
        // I(Y; C | Z) = H(Y|Z) - H(Y|C,Z)
        let i_y_c_given_z = h_y_given_z - (h_cyz - h_cz);
        Ok(Self {
            nx,
            nc,
            ny,
            nz,
            p4,
            p3,
            p_x,
            p_cz,
            p_cyz,
            h_y_given_z,
            i_y_c_given_z,
        })
    }

    fn h_u_given_x(&self, rows: &[Vec<f64>]) -> f64 {
        let mut h = 0.0f64;
        for (x, row) in rows.iter().enumerate() {
            let mut s = 0.0;
            for &w in row.iter() {
                s -= plogp(w);
            }
            h += self.p_x[x] * s;
        }
        h
    }

    /// I(X; U | C, Z), computed without touching the y axis.
    pub(crate) fn i_x_u_cz(&self, rows: &[Vec<f64>]) -> f64 {
        let (nx, nc, nz) = (self.nx, self.nc, self.nz);
        let nu = rows[0].len();
        let mut h_u_given_cz = 0.0f64;
        for c in 0..nc {
            for z in 0..nz {
                let pcz = self.p_cz[c * nz + z];
                if pcz <= 0.0 {
                    continue;
                }
                for u in 0..nu {
                    let mut k = 0.0f64;
                    for x in 0..nx {
                        k += rows[x][u] * self.p3[(x * nc + c) * nz + z];
                    }
                    if k > 0.0 {
                        h_u_given_cz -= k * (k / pcz).log2();
                    }
                }
            }
        }
        h_u_given_cz - self.h_u_given_x(rows)
    }

    /// I(X; U | C, Y, Z), skipping the quantities the binning-feasibility
    /// bisection does not need.
    pub(crate) fn i_x_u_cyz(&self, rows: &[Vec<f64>]) -> f64 {
        let (nx, nc, ny, nz) = (self.nx, self.nc, self.ny, self.nz);
        let nu = rows[0].len();
        let block = nc * ny * nz;
        let mut j4 = vec![0.0f64; nu * block];
        for x in 0..nx {
            let px_block = &self.p4[x * block..(x + 1) * block];
            for (u, &w) in rows[x].iter().enumerate() {
                if w == 0.0 {
                    continue;
                }
                let out = &mut j4[u * block..(u + 1) * block];
                for (o, &p) in out.iter_mut().zip(px_block.iter()) {
                    *o += w * p;
                }
            }
        }
        let mut h_u_given_cyz = 0.0f64;
        for u in 0..nu {
            for cyz in 0..block {
                let j = j4[u * block + cyz];
                if j > 0.0 {
                    h_u_given_cyz -= j * (j / self.p_cyz[cyz]).log2();
                }
            }
        }
        h_u_given_cyz - self.h_u_given_x(rows)
    }

    /// I(Y; U, C | Z).
    pub(crate) fn i_y_uc_z(&self, rows: &[Vec<f64>]) -> f64 {
        self.quantities(rows).i_y_uc_z
    }

    /// I(Y; C | Z), independent of the channel.
    pub(crate) fn i_y_c_given_z(&self) -> f64 {
        self.i_y_c_given_z
    }

    /// Evaluates all channel-dependent quantities for `rows[x][u]`.
    pub(crate) fn quantities(&self, rows: &[Vec<f64>]) -> ChannelQuantities {
        let (nx, nc, ny, nz) = (self.nx, self.nc, self.ny, self.nz);
        debug_assert_eq!(rows.len(), nx);
        let nu = rows[0].len();

        // j4[u][c][y][z] = sum_x rows[x][u] * p4[x][c][y][z]
        let mut j4 = vec![0.0f64; nu * nc * ny * nz];
        let block = nc * ny * nz;
        for x in 0..nx {
            let px_block = &self.p4[x * block..(x + 1) * block];
            for (u, &w) in rows[x].iter().enumerate() {
                if w == 0.0 {
                    continue;
                }
                let out = &mut j4[u * block..(u + 1) * block];
                for (o, &p) in out.iter_mut().zip(px_block.iter()) {
                    *o += w * p;
                }
            }
        }

        let h_u_given_x = self.h_u_given_x(rows);

        // H(U) from the output marginal.
        let mut h_u = 0.0f64;
        for u in 0..nu {
            let mut pu = 0.0;
            for x in 0..nx {
                pu += self.p_x[x] * rows[x][u];
            }
            h_u -= plogp(pu);
        }

        // k3[u][c][z] = sum_y j4, plus the three conditional entropies.
        let mut h_y_given_ucz = 0.0f64;
        let mut h_u_given_cz = 0.0f64;
        let mut h_u_given_cyz = 0.0f64;
        for u in 0..nu {
            for c in 0..nc {
                for z in 0..nz {
                    let mut k = 0.0f64;
                    for y in 0..ny {
                        k += j4[((u * nc + c) * ny + y) * nz + z];
                    }
                    if k > 0.0 {
                        for y in 0..ny {
                            let j = j4[((u * nc + c) * ny + y) * nz + z];
                            if j > 0.0 {
                                h_y_given_ucz -= j * (j / k).log2();
                                let pc = self.p_cyz[(c * ny + y) * nz + z];
                                h_u_given_cyz -= j * (j / pc).log2();
                            }
                        }
                        let pcz = self.p_cz[c * nz + z];
                        h_u_given_cz -= k * (k / pcz).log2();
                    }
                }
            }
        }

        ChannelQuantities {
            i_y_uc_z: self.h_y_given_z - h_y_given_ucz,
            i_x_u_cz: h_u_given_cz - h_u_given_x,
            i_x_u_cyz: h_u_given_cyz - h_u_given_x,
            i_u_x: h_u - h_u_given_x,
        }
    }
}
