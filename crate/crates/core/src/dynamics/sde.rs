//! Itô coefficients of the stochastic master equation projected onto the
//! coherence vector.
//!
//! For ρ = ¼(I + s·Σ) the drift is affine in s and each noise column is
//! quadratic. Writing L = a·L̂ for a channel with coupling a:
//!
//! ```text
//! A_m  = α_m + Σ_n Λ_mn s_n
//! B_mk = a_k (β_mk + Σ_n Γ_mnk s_n − τ_k(s) s_m),   τ_k = c_k + Σ_n β_nk s_n
//! ```
//!
//! with β_mk = ¼Tr(Σ_m(L̂+L̂†)), Γ_mnk = ¼Tr(Σ_mΣ_nL̂† + Σ_mL̂Σ_n) and
//! c_k = ¼Tr(L̂+L̂†). [`CompiledSde`] stores these tensors once so that a
//! step costs a few sparse dot products.

use nalgebra::SMatrix;

use crate::coherence::{density_from_coherence, CoherenceState, GeneratorBasis, Mat4, C64, N};

use super::LindbladModel;

pub type Mat15 = SMatrix<f64, N, N>;

/// Drift, noise loadings and parity at one state.
#[derive(Debug, Clone, PartialEq)]
pub struct DiffusionModel {
    pub a: [f64; N],
    /// Noise column per channel: `b[k][m]` is B_mk.
    pub b: Vec<[f64; N]>,
    pub parity: [i8; N],
}

impl DiffusionModel {
    pub fn new(a: [f64; N], b: Vec<[f64; N]>) -> Self {
        Self { a, b, parity: [1; N] }
    }

    pub fn zero(channels: usize) -> Self {
        Self::new([0.0; N], vec![[0.0; N]; channels])
    }

    pub fn channels(&self) -> usize {
        self.b.len()
    }

    /// D = ½BBᵀ.
    pub fn diffusion(&self) -> Mat15 {
        Mat15::from_fn(|i, j| 0.5 * self.b.iter().map(|col| col[i] * col[j]).sum::<f64>())
    }

    /// Largest relative deviation from `other`, scaled by the larger
    /// coefficient magnitude of the two models (at least 1).
    pub fn max_relative_difference(&self, other: &DiffusionModel) -> f64 {
        assert_eq!(self.channels(), other.channels());
        let mut diff: f64 = 0.0;
        let mut scale: f64 = 1.0;
        for m in 0..N {
            diff = diff.max((self.a[m] - other.a[m]).abs());
            scale = scale.max(self.a[m].abs()).max(other.a[m].abs());
            for k in 0..self.channels() {
                diff = diff.max((self.b[k][m] - other.b[k][m]).abs());
                scale = scale.max(self.b[k][m].abs()).max(other.b[k][m].abs());
            }
        }
        diff / scale
    }
}

fn tr_re(m: &Mat4) -> f64 {
    m.trace().re
}

fn dissipator(l: &Mat4, x: &Mat4) -> Mat4 {
    let ld = l.adjoint();
    let ll = ld * l;
    l * x * ld - (ll * x + x * ll) * C64::from(0.5)
}

/// Right-hand side of the Lindblad equation at ρ.
pub fn lindblad_rhs(model: &LindbladModel, rho: &Mat4) -> Mat4 {
    let h = &model.hamiltonian;
    let mut out = (h * rho - rho * h) * C64::new(0.0, -1.0);
    for ch in &model.channels {
        out += dissipator(&ch.lindblad(), rho);
    }
    out
}

/// Noise part ρL† + Lρ − Tr[ρ(L+L†)]ρ of one channel.
fn noise_part(l: &Mat4, rho: &Mat4) -> Mat4 {
    let ld = l.adjoint();
    let tau = (rho * (l + ld)).trace();
    rho * ld + l * rho - rho * tau
}

/// Coefficients by direct projection A_m = Tr(Σ_m·drift), B_mk = Tr(Σ_m·noise_k).
pub fn sde_from_lindblads(model: &LindbladModel, s: &CoherenceState) -> DiffusionModel {
    let basis = GeneratorBasis::get();
    let rho = *density_from_coherence(s).matrix();
    let drift = lindblad_rhs(model, &rho);
    let a = std::array::from_fn(|m| tr_re(&(basis.sigma(m) * drift)));
    let b = model
        .channels
        .iter()
        .map(|ch| {
            let noise = noise_part(&ch.lindblad(), &rho);
            std::array::from_fn(|m| tr_re(&(basis.sigma(m) * noise)))
        })
        .collect();
    DiffusionModel::new(a, b)
}

/// Sparse row storage: row `m` holds `(col, value)` pairs.
#[derive(Debug, Clone, Default)]
struct SparseRows {
    start: Vec<usize>,
    entries: Vec<(usize, f64)>,
}

impl SparseRows {
    fn from_dense(d: &[[f64; N]; N]) -> Self {
        let mut start = Vec::with_capacity(N + 1);
        let mut entries = Vec::new();
        for row in d {
            start.push(entries.len());
            entries.extend(row.iter().enumerate().filter(|(_, v)| **v != 0.0).map(|(n, v)| (n, *v)));
        }
        start.push(entries.len());
        Self { start, entries }
    }

    #[inline]
    fn row(&self, m: usize) -> &[(usize, f64)] {
        &self.entries[self.start[m]..self.start[m + 1]]
    }
}

/// Polynomial coefficients of one noise channel at unit coupling.
#[derive(Debug, Clone)]
pub struct ChannelTensor {
    pub coupling: f64,
    pub c0: f64,
    pub beta: [f64; N],
    pub gamma: [[f64; N]; N],
    sparse: SparseRows,
}

impl ChannelTensor {
    /// τ(s) = c + Σ β_n s_n at unit coupling.
    #[inline]
    pub fn tau(&self, s: &[f64; N]) -> f64 {
        let mut t = self.c0;
        for n in 0..N {
            if self.beta[n] != 0.0 {
                t += self.beta[n] * s[n];
            }
        }
        t
    }

    /// B_m at this channel's coupling, given τ.
    #[inline]
    pub fn loading(&self, s: &[f64; N], tau: f64, m: usize) -> f64 {
        let mut acc = self.beta[m];
        for &(n, g) in self.sparse.row(m) {
            acc += g * s[n];
        }
        self.coupling * (acc - tau * s[m])
    }

    /// ∂B_m/∂s_p.
    #[inline]
    pub fn d_loading(&self, s: &[f64; N], tau: f64, m: usize, p: usize) -> f64 {
        let diag = if m == p { tau } else { 0.0 };
        self.coupling * (self.gamma[m][p] - self.beta[p] * s[m] - diag)
    }

    /// ∂²B_m/∂s_q∂s_p (constant).
    #[inline]
    pub fn dd_loading(&self, m: usize, p: usize, q: usize) -> f64 {
        let mut v = 0.0;
        if m == q {
            v -= self.beta[p];
        }
        if m == p {
            v -= self.beta[q];
        }
        self.coupling * v
    }

    /// Coordinates the loading of row `m` depends on.
    pub fn dependencies(&self, m: usize) -> Vec<usize> {
        let mut deps: Vec<usize> = self.sparse.row(m).iter().map(|&(n, _)| n).collect();
        deps.extend((0..N).filter(|&n| self.beta[n] != 0.0));
        deps.push(m);
        deps.sort_unstable();
        deps.dedup();
        deps
    }
}

/// Drift and noise of a [`LindbladModel`] compiled into polynomial form.
#[derive(Debug, Clone)]
pub struct CompiledSde {
    pub alpha: [f64; N],
    pub lambda: [[f64; N]; N],
    lambda_sparse: SparseRows,
    pub channels: Vec<ChannelTensor>,
}

/// Relative size below which a compiled coefficient is treated as an exact
/// zero. Keeps structural zeros free of trace round-off.
const ZERO_SNAP: f64 = 1e-14;

fn snap<const R: usize>(v: &mut [[f64; N]; R], extra: &mut [f64]) {
    let scale = v
        .iter()
        .flatten()
        .chain(extra.iter())
        .fold(0.0f64, |m, x| m.max(x.abs()));
    let cut = ZERO_SNAP * scale.max(f64::MIN_POSITIVE);
    for x in v.iter_mut().flatten().chain(extra.iter_mut()) {
        if x.abs() < cut {
            *x = 0.0;
        }
    }
}

impl CompiledSde {
    pub fn new(model: &LindbladModel) -> Self {
        let basis = GeneratorBasis::get();
        let quarter = C64::from(0.25);
        let identity = Mat4::identity();

        // Affine drift from the linear Lindblad map.
        let mut alpha: [f64; N] = std::array::from_fn(|m| {
            0.25 * tr_re(&(basis.sigma(m) * lindblad_rhs(model, &identity)))
        });
        let mut lambda = [[0.0; N]; N];
        for n in 0..N {
            let image = lindblad_rhs(model, basis.sigma(n));
            for m in 0..N {
                lambda[m][n] = 0.25 * tr_re(&(basis.sigma(m) * image));
            }
        }
        snap(&mut lambda, &mut alpha);

        let channels = model
            .channels
            .iter()
            .map(|ch| {
                let l = ch.operator;
                let ld = l.adjoint();
                let herm = l + ld;
                let mut c0 = [0.25 * tr_re(&herm)];
                let mut beta: [f64; N] = std::array::from_fn(|m| 0.25 * tr_re(&(basis.sigma(m) * herm)));
                let mut gamma = [[0.0; N]; N];
                for m in 0..N {
                    for n in 0..N {
                        let sm = basis.sigma(m);
                        let sn = basis.sigma(n);
                        gamma[m][n] = ((sm * sn * ld + sm * l * sn) * quarter).trace().re;
                    }
                }
                let mut extra: Vec<f64> = beta.iter().copied().chain(c0).collect();
                snap(&mut gamma, &mut extra);
                beta.copy_from_slice(&extra[..N]);
                c0[0] = extra[N];
                ChannelTensor {
                    coupling: ch.coupling,
                    c0: c0[0],
                    beta,
                    gamma,
                    sparse: SparseRows::from_dense(&gamma),
                }
            })
            .collect();

        Self { alpha, lambda, lambda_sparse: SparseRows::from_dense(&lambda), channels }
    }

    pub fn n_channels(&self) -> usize {
        self.channels.len()
    }

    /// Drift component A_m.
    #[inline]
    pub fn drift(&self, s: &[f64; N], m: usize) -> f64 {
        let mut acc = self.alpha[m];
        for &(n, l) in self.lambda_sparse.row(m) {
            acc += l * s[n];
        }
        acc
    }

    /// Fills drift `a` and noise columns `b` (one per channel).
    #[inline]
    pub fn eval_into(&self, s: &[f64; N], a: &mut [f64; N], b: &mut [[f64; N]]) {
        for (m, am) in a.iter_mut().enumerate() {
            *am = self.drift(s, m);
        }
        for (ch, col) in self.channels.iter().zip(b.iter_mut()) {
            let tau = ch.tau(s);
            for (m, bm) in col.iter_mut().enumerate() {
                *bm = ch.loading(s, tau, m);
            }
        }
    }

    pub fn evaluate(&self, s: &CoherenceState) -> DiffusionModel {
        let mut dm = DiffusionModel::zero(self.n_channels());
        self.eval_into(&s.s, &mut dm.a, &mut dm.b);
        dm
    }

    /// Coordinates that the drift of row `m` depends on.
    pub fn drift_dependencies(&self, m: usize) -> Vec<usize> {
        self.lambda_sparse.row(m).iter().map(|&(n, _)| n).collect()
    }
}
