//! Environmental entropy increments along a trajectory of a compiled SDE.
//!
//! For dynamical coordinates x (M of them) with reduced diffusion matrix D,
//! drift A and C_i = A_i − Σ_m 𝒟_m D_im, the even-parity increment is
//!
//! ```text
//! dΔs = Σ_ij D⁻¹_ij C_i dx_j + Σ_k (𝒟_k C_k − [(𝒟_k D) D⁻¹ C]_k) dt
//! ```
//!
//! where 𝒟_m = ∂_m + Σ_l R_lm ∂_l is the derivative along the constraint
//! surface that ties the spectators to the dynamical coordinates. Second
//! derivatives pick up the variation of R itself, computed from
//! 𝒟_k B_spec = (𝒟_k R) B_dyn + R 𝒟_k B_dyn.

use nalgebra::{DMatrix, DVector};

use crate::coherence::N;
use crate::dynamics::CompiledSde;

use super::coupling::coupling_from_block;
use super::{EntropyError, Tolerances};

/// Reduced diffusion data at one state, with all derivatives already
/// corrected for the spectator coupling.
#[derive(Debug, Clone)]
pub struct ReducedDiffusion {
    pub dred: DMatrix<f64>,
    pub ared: DVector<f64>,
    pub cred: DVector<f64>,
    /// `grad[m]` = 𝒟_m D.
    pub grad: Vec<DMatrix<f64>>,
    /// `hess[k][m]` = 𝒟_k 𝒟_m D.
    pub hess: Vec<Vec<DMatrix<f64>>>,
    /// `dadx[(i, k)]` = 𝒟_k A_i.
    pub dadx: DMatrix<f64>,
    /// Spectator coupling R (L×M).
    pub r: DMatrix<f64>,
    /// Noise rows of the dynamical coordinates (M×K).
    pub b_dyn: DMatrix<f64>,
}

impl ReducedDiffusion {
    pub fn dims(&self) -> usize {
        self.dred.nrows()
    }

    /// 𝒟_k C_i.
    pub fn dcdx(&self, i: usize, k: usize) -> f64 {
        let mut v = self.dadx[(i, k)];
        for m in 0..self.dims() {
            v -= self.hess[k][m][(i, m)];
        }
        v
    }
}

/// Split of an increment into dΔs = drift·dt + Σ_j coeff_j dx_j.
#[derive(Debug, Clone, PartialEq)]
pub struct IncrementParts {
    pub drift: f64,
    pub coeff: Vec<f64>,
}

impl IncrementParts {
    pub fn apply(&self, dx: &[f64], dt: f64) -> f64 {
        self.drift * dt + self.coeff.iter().zip(dx).map(|(c, x)| c * x).sum::<f64>()
    }
}

fn smallest_eigenvalue(d: &DMatrix<f64>) -> f64 {
    if d.nrows() == 1 {
        return d[(0, 0)];
    }
    d.clone().symmetric_eigenvalues().min()
}

/// −(1/D)(dD/dx)dx − (d²D/dx²)dt + (1/D)(dD/dx)² dt for a scalar reduced
/// diffusion with zero drift.
pub fn entropy_increment_1d(d: f64, ddx: f64, d2dx2: f64, dx: f64, dt: f64, sing_tol: f64) -> Result<f64, EntropyError> {
    if !(d.is_finite() && ddx.is_finite() && d2dx2.is_finite()) {
        return Err(EntropyError::NonFinite);
    }
    if !(d > sing_tol) {
        return Err(EntropyError::SingularD(d));
    }
    let inc = -(ddx / d) * dx - d2dx2 * dt + (ddx * ddx / d) * dt;
    if inc.is_finite() {
        Ok(inc)
    } else {
        Err(EntropyError::NonFinite)
    }
}

/// Drift rate and dx coefficients of the general even-parity increment.
pub fn increment_parts(red: &ReducedDiffusion, sing_tol: f64) -> Result<IncrementParts, EntropyError> {
    let m = red.dims();
    if red.dred.iter().any(|x| !x.is_finite()) {
        return Err(EntropyError::NonFinite);
    }
    let lmin = smallest_eigenvalue(&red.dred);
    if !(lmin > sing_tol) {
        return Err(EntropyError::SingularD(lmin));
    }
    let dinv = red.dred.clone().try_inverse().ok_or(EntropyError::SingularD(lmin))?;
    let coeff = &dinv * &red.cred;
    let mut drift = 0.0;
    for k in 0..m {
        drift += red.dcdx(k, k);
        drift -= (red.grad[k].row(k) * &coeff)[(0, 0)];
    }
    let parts = IncrementParts { drift, coeff: coeff.iter().copied().collect() };
    if parts.drift.is_finite() && parts.coeff.iter().all(|c| c.is_finite()) {
        Ok(parts)
    } else {
        Err(EntropyError::NonFinite)
    }
}

/// General even-parity increment for the reduced coordinates.
pub fn entropy_increment_general(red: &ReducedDiffusion, dx: &[f64], dt: f64, sing_tol: f64) -> Result<f64, EntropyError> {
    let inc = increment_parts(red, sing_tol)?.apply(dx, dt);
    if inc.is_finite() {
        Ok(inc)
    } else {
        Err(EntropyError::NonFinite)
    }
}

/// Entropy bookkeeping for one choice of dynamical and spectator
/// coordinates of a compiled protocol.
#[derive(Debug, Clone)]
pub struct EntropyEngine {
    sde: CompiledSde,
    dyn_idx: Vec<usize>,
    spec_idx: Vec<usize>,
    group: Vec<usize>,
    tol: Tolerances,
    corrected: bool,
}

impl EntropyEngine {
    /// Coordinates are 0-based. The noise rows of `dyn ++ spec` and the
    /// drift rows of `dyn` must depend only on those coordinates.
    pub fn new(sde: &CompiledSde, dyn_idx: &[usize], spec_idx: &[usize], tol: Tolerances) -> Result<Self, EntropyError> {
        let group: Vec<usize> = dyn_idx.iter().chain(spec_idx).copied().collect();
        let mut seen = [false; N];
        for &g in &group {
            if g >= N || seen[g] {
                return Err(EntropyError::InvalidPartition);
            }
            seen[g] = true;
        }
        if dyn_idx.is_empty() {
            return Err(EntropyError::InvalidPartition);
        }
        for &row in &group {
            for ch in &sde.channels {
                if let Some(&c) = ch.dependencies(row).iter().find(|c| !seen[**c]) {
                    return Err(EntropyError::NotClosed { row, coordinate: c });
                }
            }
        }
        for &row in dyn_idx {
            if let Some(&c) = sde.drift_dependencies(row).iter().find(|c| !seen[**c]) {
                return Err(EntropyError::NotClosed { row, coordinate: c });
            }
        }
        Ok(Self { sde: sde.clone(), dyn_idx: dyn_idx.to_vec(), spec_idx: spec_idx.to_vec(), group, tol, corrected: true })
    }

    /// Drops the spectator correction (R = 0). Only useful to show that the
    /// correction matters.
    pub fn without_correction(mut self) -> Self {
        self.corrected = false;
        self
    }

    pub fn dyn_idx(&self) -> &[usize] {
        &self.dyn_idx
    }

    pub fn spec_idx(&self) -> &[usize] {
        &self.spec_idx
    }

    pub fn tolerances(&self) -> &Tolerances {
        &self.tol
    }

    /// Reduced diffusion data at `s`.
    pub fn reduce(&self, s: &[f64; N]) -> Result<ReducedDiffusion, EntropyError> {
        let m = self.dyn_idx.len();
        let n = self.group.len();
        let l = n - m;
        let kk = self.sde.n_channels();
        let g = &self.group;

        // Loadings and first partials on the group: b[(r, k)], db[k][(r, p)].
        let mut b = DMatrix::zeros(n, kk);
        let mut db = vec![DMatrix::zeros(n, n); kk];
        for (k, ch) in self.sde.channels.iter().enumerate() {
            let tau = ch.tau(s);
            for r in 0..n {
                b[(r, k)] = ch.loading(s, tau, g[r]);
                for p in 0..n {
                    db[k][(r, p)] = ch.d_loading(s, tau, g[r], g[p]);
                }
            }
        }
        if b.iter().any(|x| !x.is_finite()) {
            return Err(EntropyError::NonFinite);
        }

        let r_mat = if l > 0 && self.corrected {
            let block = (&b * b.transpose()) * 0.5;
            coupling_from_block(&block, m, &self.tol)?.3
        } else {
            DMatrix::zeros(l, m)
        };

        // Tangent map T (n×M): identity on dyn rows, R on spectator rows.
        let mut t = DMatrix::zeros(n, m);
        for i in 0..m {
            t[(i, i)] = 1.0;
        }
        t.view_mut((m, 0), (l, m)).copy_from(&r_mat);

        // tb[k] (n×M): 𝒟_m of every group loading.
        let tb: Vec<DMatrix<f64>> = db.iter().map(|d| d * &t).collect();

        let b_dyn = b.rows(0, m).into_owned();
        let gram = &b_dyn * b_dyn.transpose();
        let dred = &gram * 0.5;

        // 𝒟_k R (L×M) for each k.
        let dr: Vec<DMatrix<f64>> = if l > 0 && self.corrected {
            let ginv = gram.clone().try_inverse().ok_or(EntropyError::SingularD(0.0))?;
            let pinv = b_dyn.transpose() * ginv;
            (0..m)
                .map(|kd| {
                    let d_spec = DMatrix::from_fn(l, kk, |li, k| tb[k][(m + li, kd)]);
                    let d_dyn = DMatrix::from_fn(m, kk, |i, k| tb[k][(i, kd)]);
                    (d_spec - &r_mat * d_dyn) * &pinv
                })
                .collect()
        } else {
            vec![DMatrix::zeros(l, m); m]
        };

        // ddb[k][kd][(i, mi)] = 𝒟_kd 𝒟_mi B_{dyn i, k}.
        let mut ddb = vec![vec![DMatrix::zeros(m, m); m]; kk];
        for (k, ch) in self.sde.channels.iter().enumerate() {
            for kd in 0..m {
                for i in 0..m {
                    for mi in 0..m {
                        let mut v = 0.0;
                        for p in 0..n {
                            let tp = t[(p, mi)];
                            if tp == 0.0 {
                                continue;
                            }
                            for q in 0..n {
                                let tq = t[(q, kd)];
                                if tq != 0.0 {
                                    v += tq * tp * ch.dd_loading(g[i], g[p], g[q]);
                                }
                            }
                        }
                        for li in 0..l {
                            v += dr[kd][(li, mi)] * db[k][(i, m + li)];
                        }
                        ddb[k][kd][(i, mi)] = v;
                    }
                }
            }
        }

        // 𝒟_m D and 𝒟_k 𝒟_m D.
        let grad: Vec<DMatrix<f64>> = (0..m)
            .map(|mi| {
                DMatrix::from_fn(m, m, |i, j| {
                    0.5 * (0..kk).map(|k| tb[k][(i, mi)] * b[(j, k)] + b[(i, k)] * tb[k][(j, mi)]).sum::<f64>()
                })
            })
            .collect();
        let hess: Vec<Vec<DMatrix<f64>>> = (0..m)
            .map(|kd| {
                (0..m)
                    .map(|mi| {
                        DMatrix::from_fn(m, m, |i, j| {
                            0.5 * (0..kk)
                                .map(|k| {
                                    ddb[k][kd][(i, mi)] * b[(j, k)]
                                        + tb[k][(i, mi)] * tb[k][(j, kd)]
                                        + tb[k][(i, kd)] * tb[k][(j, mi)]
                                        + b[(i, k)] * ddb[k][kd][(j, mi)]
                                })
                                .sum::<f64>()
                        })
                    })
                    .collect()
            })
            .collect();

        let ared = DVector::from_fn(m, |i, _| self.sde.drift(s, g[i]));
        let dadx = DMatrix::from_fn(m, m, |i, kd| (0..n).map(|p| t[(p, kd)] * self.sde.lambda[g[i]][g[p]]).sum::<f64>());
        let cred = DVector::from_fn(m, |i, _| ared[i] - (0..m).map(|mi| grad[mi][(i, mi)]).sum::<f64>());

        Ok(ReducedDiffusion { dred, ared, cred, grad, hess, dadx, r: r_mat, b_dyn })
    }

    /// Increment split into drift rate and dx coefficients.
    pub fn parts(&self, s: &[f64; N]) -> Result<IncrementParts, EntropyError> {
        increment_parts(&self.reduce(s)?, self.tol.sing_tol)
    }

    /// One dynamical coordinate driven by one channel. The group block
    /// ½bbᵀ then has rank one, R = b_spec/b_dyn and cond(P) = √(1 + |R|²),
    /// so no decomposition is needed.
    fn increment_rank_one(&self, s: &[f64; N], dx: f64, dt: f64) -> Result<f64, EntropyError> {
        let g = &self.group;
        let n = g.len();
        let ch = &self.sde.channels[0];
        let tau = ch.tau(s);
        let mut b = [0.0; N];
        for r in 0..n {
            b[r] = ch.loading(s, tau, g[r]);
        }
        if b[..n].iter().any(|x| !x.is_finite()) {
            return Err(EntropyError::NonFinite);
        }
        let mut t = [0.0; N];
        t[0] = 1.0;
        if n > 1 && self.corrected {
            let b0 = b[0];
            if b0 == 0.0 {
                return Err(if b[1..n].iter().all(|&x| x == 0.0) {
                    EntropyError::SingularD(0.0)
                } else {
                    EntropyError::IllConditioned(f64::INFINITY)
                });
            }
            let mut r2 = 0.0;
            for r in 1..n {
                t[r] = b[r] / b0;
                r2 += t[r] * t[r];
            }
            let cond = if n > 2 { (1.0 + r2).sqrt() } else { 1.0 };
            if !(cond <= self.tol.kappa_max) {
                return Err(EntropyError::IllConditioned(cond));
            }
        }
        // tb[r] = 𝒟 B_r.
        let mut tb = [0.0; N];
        for r in 0..n {
            tb[r] = (0..n).filter(|&p| t[p] != 0.0).map(|p| t[p] * ch.d_loading(s, tau, g[r], g[p])).sum();
        }
        let mut ddb = 0.0;
        for p in 0..n {
            if t[p] == 0.0 {
                continue;
            }
            for q in 0..n {
                if t[q] != 0.0 {
                    ddb += t[q] * t[p] * ch.dd_loading(g[0], g[p], g[q]);
                }
            }
        }
        if n > 1 && self.corrected {
            for r in 1..n {
                let dr = (tb[r] - t[r] * tb[0]) / b[0];
                ddb += dr * ch.d_loading(s, tau, g[0], g[r]);
            }
        }
        let d = 0.5 * b[0] * b[0];
        let grad = tb[0] * b[0];
        let hess = ddb * b[0] + tb[0] * tb[0];
        let a = self.sde.drift(s, g[0]);
        let dadx: f64 = (0..n).map(|p| t[p] * self.sde.lambda[g[0]][g[p]]).sum();
        if a == 0.0 && dadx == 0.0 {
            return entropy_increment_1d(d, grad, hess, dx, dt, self.tol.sing_tol);
        }
        if !d.is_finite() {
            return Err(EntropyError::NonFinite);
        }
        if !(d > self.tol.sing_tol) {
            return Err(EntropyError::SingularD(d));
        }
        let coeff = (a - grad) / d;
        let drift = dadx - hess - grad * coeff;
        let inc = drift * dt + coeff * dx;
        if inc.is_finite() {
            Ok(inc)
        } else {
            Err(EntropyError::NonFinite)
        }
    }

    /// Increment via the general reduction, bypassing the rank-one shortcut.
    pub fn increment_general(&self, s: &[f64; N], dx: &[f64], dt: f64) -> Result<f64, EntropyError> {
        let red = self.reduce(s)?;
        if red.dims() == 1 && red.ared[0] == 0.0 && red.dadx[(0, 0)] == 0.0 {
            return entropy_increment_1d(red.dred[(0, 0)], red.grad[0][(0, 0)], red.hess[0][0][(0, 0)], dx[0], dt, self.tol.sing_tol);
        }
        entropy_increment_general(&red, dx, dt, self.tol.sing_tol)
    }

    /// Increment for the step from `s` with dynamical increments `dx`.
    pub fn increment(&self, s: &[f64; N], dx: &[f64], dt: f64) -> Result<f64, EntropyError> {
        if self.dyn_idx.len() == 1 && self.sde.n_channels() == 1 {
            return self.increment_rank_one(s, dx[0], dt);
        }
        self.increment_general(s, dx, dt)
    }

    /// Increment taking the full coherence increment and picking out the
    /// dynamical components.
    pub fn increment_from_full(&self, s: &[f64; N], ds: &[f64; N], dt: f64) -> Result<f64, EntropyError> {
        let mut dx = [0.0; N];
        for (i, &d) in self.dyn_idx.iter().enumerate() {
            dx[i] = ds[d];
        }
        self.increment(s, &dx[..self.dyn_idx.len()], dt)
    }
}
