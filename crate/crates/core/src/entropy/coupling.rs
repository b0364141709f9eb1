use nalgebra::{DMatrix, SymmetricEigen};

use crate::dynamics::Mat15;

use super::{EntropyError, Tolerances};

/// Linear relation dx_spec = R dx_dyn between spectator and dynamical
/// differentials, read off the null eigenvectors of the diffusion matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectatorCoupling {
    pub dyn_idx: Vec<usize>,
    pub spec_idx: Vec<usize>,
    /// Null eigenvectors restricted to `dyn_idx ++ spec_idx`, one per row.
    pub null_basis: DMatrix<f64>,
    /// Spectator components of the null vectors (L×L).
    pub p: DMatrix<f64>,
    /// Dynamical components of the null vectors (L×M).
    pub q: DMatrix<f64>,
    /// R = −P⁻¹Q (L×M).
    pub r: DMatrix<f64>,
}

/// Builds the coupling from the full diffusion matrix. `dyn_idx` and
/// `spec_idx` are 0-based coherence indices.
pub fn build_coupling(
    d: &Mat15,
    dyn_idx: &[usize],
    spec_idx: &[usize],
    tol: &Tolerances,
) -> Result<SpectatorCoupling, EntropyError> {
    let group: Vec<usize> = dyn_idx.iter().chain(spec_idx).copied().collect();
    let block = DMatrix::from_fn(group.len(), group.len(), |i, j| d[(group[i], group[j])]);
    let (null_basis, p, q, r) = coupling_from_block(&block, dyn_idx.len(), tol)?;
    Ok(SpectatorCoupling { dyn_idx: dyn_idx.to_vec(), spec_idx: spec_idx.to_vec(), null_basis, p, q, r })
}

type Parts = (DMatrix<f64>, DMatrix<f64>, DMatrix<f64>, DMatrix<f64>);

/// Works on the diffusion sub-block ordered dynamical-first. `m` is the
/// number of dynamical coordinates.
pub(crate) fn coupling_from_block(block: &DMatrix<f64>, m: usize, tol: &Tolerances) -> Result<Parts, EntropyError> {
    let n = block.nrows();
    let l = n - m;
    if l == 0 {
        let e = DMatrix::zeros(0, 0);
        return Ok((DMatrix::zeros(0, n), e.clone(), DMatrix::zeros(0, m), DMatrix::zeros(0, m)));
    }
    let scale = block.amax();
    if !scale.is_finite() {
        return Err(EntropyError::NonFinite);
    }
    if scale == 0.0 {
        return Err(EntropyError::SingularD(0.0));
    }
    let eig = SymmetricEigen::new(block / scale);
    let lmax = eig.eigenvalues.amax();
    let null: Vec<usize> = (0..n).filter(|&i| eig.eigenvalues[i].abs() < tol.null_tol * lmax).collect();
    if null.len() < l {
        return Err(EntropyError::RankDeficient { found: null.len(), needed: l });
    }
    if null.len() > l {
        // Fewer than m noisy directions: the reduced matrix is singular.
        return Err(EntropyError::SingularD(0.0));
    }
    let basis = DMatrix::from_fn(l, n, |k, j| eig.eigenvectors[(j, null[k])]);
    let p = basis.columns(m, l).into_owned();
    let q = basis.columns(0, m).into_owned();
    let sv = p.singular_values();
    let cond = sv.max() / sv.min();
    if !(cond <= tol.kappa_max) {
        return Err(EntropyError::IllConditioned(cond));
    }
    let pinv = p.clone().try_inverse().ok_or(EntropyError::IllConditioned(f64::INFINITY))?;
    let r = -(pinv * &q);
    Ok((basis, p, q, r))
}

/// Total derivative dD/dx_m = ∂D/∂x_m + Σ_l ∂D/∂x_l R_lm.
///
/// `partials[p]` is ∂D/∂x for the p-th coordinate of `dyn ++ spec`.
pub fn corrected_derivative(partials: &[DMatrix<f64>], coupling: &SpectatorCoupling, m: usize) -> DMatrix<f64> {
    let dims = coupling.dyn_idx.len();
    let mut out = partials[m].clone();
    for l in 0..coupling.spec_idx.len() {
        out += &partials[dims + l] * coupling.r[(l, m)];
    }
    out
}
