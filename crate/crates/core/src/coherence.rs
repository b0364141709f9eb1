//! Density matrices of two spin-1/2 particles and their 15-component
//! coherence vectors.
//!
//! A state is written as ρ = ¼(I + Σ_m s_m Σ_m) where the generators are
//! the traceless tensor products of Pauli matrices, ordered as
//! Σ₁ = I⊗σx, Σ₂ = I⊗σy, Σ₃ = I⊗σz, Σ₄ = σx⊗I, …, Σ₁₅ = σz⊗σz.
//! The first tensor factor is particle 1. Vectors are stored 0-based, so
//! the component s_m lives at index `m - 1`; the [`ix`] module names them.

use std::sync::OnceLock;

use nalgebra::{Complex, Matrix2, Matrix4, Vector4};
use thiserror::Error;

pub type C64 = Complex<f64>;
pub type Mat4 = Matrix4<C64>;
pub type Ket = Vector4<C64>;

/// Number of coherence-vector components.
pub const N: usize = 15;

/// Default tolerance on negative eigenvalues of a physical state.
pub const POS_TOL: f64 = 1e-9;

/// 0-based storage index of each coherence component.
pub mod ix {
    pub const S1: usize = 0;
    pub const S2: usize = 1;
    pub const S3: usize = 2;
    pub const S4: usize = 3;
    pub const S5: usize = 4;
    pub const S6: usize = 5;
    pub const S7: usize = 6;
    pub const S8: usize = 7;
    pub const S9: usize = 8;
    pub const S10: usize = 9;
    pub const S11: usize = 10;
    pub const S12: usize = 11;
    pub const S13: usize = 12;
    pub const S14: usize = 13;
    pub const S15: usize = 14;
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CoherenceError {
    #[error("matrix is not Hermitian (max deviation {0:e})")]
    NotHermitian(f64),
    #[error("trace is {0}, expected 1")]
    TraceNotUnit(f64),
}

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// The four single-spin matrices I, σx, σy, σz.
pub fn pauli() -> [Matrix2<C64>; 4] {
    let o = c(0.0, 0.0);
    let l = c(1.0, 0.0);
    let i = c(0.0, 1.0);
    [
        Matrix2::new(l, o, o, l),
        Matrix2::new(o, l, l, o),
        Matrix2::new(o, -i, i, o),
        Matrix2::new(l, o, o, -l),
    ]
}

/// Kronecker product a ⊗ b; `a` acts on particle 1.
pub fn kron(a: &Matrix2<C64>, b: &Matrix2<C64>) -> Mat4 {
    Mat4::from_fn(|r, col| a[(r / 2, col / 2)] * b[(r % 2, col % 2)])
}

/// The fifteen generators Σ₁…Σ₁₅.
#[derive(Debug, Clone)]
pub struct GeneratorBasis {
    sigma: [Mat4; N],
    /// The four non-zero (row, column, value) entries of each generator.
    entries: [[(usize, usize, C64); 4]; N],
}

impl GeneratorBasis {
    fn build() -> Self {
        let p = pauli();
        let sigma = std::array::from_fn(|k| {
            let m = k + 1;
            kron(&p[m / 4], &p[m % 4])
        });
        let entries = std::array::from_fn(|k| {
            let g: &Mat4 = &sigma[k];
            let mut e = [(0, 0, c(0.0, 0.0)); 4];
            let mut n = 0;
            for r in 0..4 {
                for col in 0..4 {
                    if g[(r, col)].norm() > 0.0 {
                        e[n] = (r, col, g[(r, col)]);
                        n += 1;
                    }
                }
            }
            e
        });
        Self { sigma, entries }
    }

    /// Shared instance.
    pub fn get() -> &'static GeneratorBasis {
        static BASIS: OnceLock<GeneratorBasis> = OnceLock::new();
        BASIS.get_or_init(Self::build)
    }

    /// Generator at 0-based index `k` (Σ_{k+1}).
    pub fn sigma(&self, k: usize) -> &Mat4 {
        &self.sigma[k]
    }

    pub fn all(&self) -> &[Mat4; N] {
        &self.sigma
    }
}

/// Coherence vector together with the time it refers to.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoherenceState {
    pub s: [f64; N],
    pub t: f64,
}

impl CoherenceState {
    pub fn new(s: [f64; N]) -> Self {
        Self { s, t: 0.0 }
    }

    pub fn zero() -> Self {
        Self::new([0.0; N])
    }

    /// Component s_m with the 1-based label used in the generator ordering.
    pub fn get(&self, m: usize) -> f64 {
        self.s[m - 1]
    }
}

/// Hermitian, unit-trace 4×4 matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityMatrix(Mat4);

impl DensityMatrix {
    /// Validates Hermiticity and unit trace to 1e-12.
    pub fn new(m: Mat4) -> Result<Self, CoherenceError> {
        let herm = hermitian_deviation(&m);
        if herm > 1e-12 {
            return Err(CoherenceError::NotHermitian(herm));
        }
        let tr = m.trace();
        if (tr.re - 1.0).abs() > 1e-12 || tr.im.abs() > 1e-12 {
            return Err(CoherenceError::TraceNotUnit(tr.re));
        }
        Ok(Self(m))
    }

    /// Wraps without checks; used for matrices built from a coherence vector.
    pub(crate) fn from_raw(m: Mat4) -> Self {
        Self(m)
    }

    /// Projector onto a normalized copy of `psi`.
    pub fn pure(psi: &Ket) -> Self {
        let v = psi / C64::from(psi.norm());
        Self(v * v.adjoint())
    }

    pub fn matrix(&self) -> &Mat4 {
        &self.0
    }

    pub fn into_matrix(self) -> Mat4 {
        self.0
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> [f64; 4] {
        hermitian_eigenvalues(&self.0)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues()[0]
    }

    /// True when every eigenvalue is at least `-tol`. Uses a Cholesky
    /// factorization of ρ + tol·I, which is much cheaper than a full
    /// eigendecomposition.
    pub fn is_positive(&self, tol: f64) -> bool {
        let mut l = [[c(0.0, 0.0); 4]; 4];
        for j in 0..4 {
            let mut d = self.0[(j, j)].re + tol;
            for k in 0..j {
                d -= l[j][k].norm_sqr();
            }
            if !(d > 0.0) {
                return false;
            }
            let djj = d.sqrt();
            l[j][j] = c(djj, 0.0);
            for i in j + 1..4 {
                let mut v = self.0[(i, j)];
                for k in 0..j {
                    v -= l[i][k] * l[j][k].conj();
                }
                l[i][j] = v / djj;
            }
        }
        true
    }
}

pub fn hermitian_deviation(m: &Mat4) -> f64 {
    (m - m.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn hermitian_eigenvalues(m: &Mat4) -> [f64; 4] {
    let e = m.symmetric_eigenvalues();
    let mut v = [e[0], e[1], e[2], e[3]];
    v.sort_by(|a, b| a.total_cmp(b));
    v
}

/// s_m = Tr(ρ Σ_m).
pub fn coherence_from_density(rho: &DensityMatrix) -> Result<CoherenceState, CoherenceError> {
    let m = DensityMatrix::new(rho.0)?;
    let basis = GeneratorBasis::get();
    let s = std::array::from_fn(|k| (m.0 * basis.sigma(k)).trace().re);
    Ok(CoherenceState::new(s))
}

/// ρ = ¼(I + s·Σ). Trace and Hermiticity hold by construction.
pub fn density_from_coherence(state: &CoherenceState) -> DensityMatrix {
    density_from_slice(&state.s)
}

pub(crate) fn density_from_slice(s: &[f64; N]) -> DensityMatrix {
    let basis = GeneratorBasis::get();
    let mut m = Mat4::identity() * c(0.25, 0.0);
    for (k, &sk) in s.iter().enumerate() {
        for &(r, col, v) in &basis.entries[k] {
            m[(r, col)] += v * (0.25 * sk);
        }
    }
    DensityMatrix::from_raw(m)
}

/// Tr(Xρ(s)) = ¼Tr(X) + ¼ Σ_m s_m Tr(XΣ_m).
pub fn expectation(observable: &Mat4, state: &CoherenceState) -> Result<f64, CoherenceError> {
    let herm = hermitian_deviation(observable);
    if herm > 1e-12 {
        return Err(CoherenceError::NotHermitian(herm));
    }
    let basis = GeneratorBasis::get();
    let mut acc = observable.trace().re;
    for (k, &sk) in state.s.iter().enumerate() {
        acc += sk * (observable * basis.sigma(k)).trace().re;
    }
    Ok(0.25 * acc)
}

/// Tr ρ² = (1 + Σ s_m²)/4.
pub fn purity(state: &CoherenceState) -> f64 {
    (1.0 + state.s.iter().map(|x| x * x).sum::<f64>()) / 4.0
}

/// Trace distance ½‖ρ − σ‖₁ between two coherence states.
pub fn trace_distance(a: &CoherenceState, b: &CoherenceState) -> f64 {
    let mut d = *a;
    for (x, y) in d.s.iter_mut().zip(b.s.iter()) {
        *x -= y;
    }
    // ρ_a − ρ_b = ¼ (s_a − s_b)·Σ, which is traceless.
    let basis = GeneratorBasis::get();
    let mut m = Mat4::zeros();
    for (k, &dk) in d.s.iter().enumerate() {
        m += basis.sigma(k) * C64::from(dk);
    }
    let ev = hermitian_eigenvalues(&(m * C64::from(0.25)));
    0.5 * ev.iter().map(|x| x.abs()).sum::<f64>()
}

/// √max(⟨e|ρ|e⟩, 0) for a normalized ket `e`.
pub fn amplitude(rho: &DensityMatrix, e: &Ket) -> f64 {
    let p = (e.adjoint() * rho.matrix() * e)[(0, 0)].re;
    p.max(0.0).sqrt()
}

/// Computational basis kets |↑↑⟩, |↑↓⟩, |↓↑⟩, |↓↓⟩ (σz = +1 is "up").
pub mod kets {
    use super::{c, Ket, C64};

    pub fn basis(i: usize) -> Ket {
        let mut v = Ket::zeros();
        v[i] = c(1.0, 0.0);
        v
    }
    pub fn up_up() -> Ket {
        basis(0)
    }
    pub fn up_down() -> Ket {
        basis(1)
    }
    pub fn down_up() -> Ket {
        basis(2)
    }
    pub fn down_down() -> Ket {
        basis(3)
    }
    pub fn triplet_zero() -> Ket {
        (up_down() + down_up()) * C64::from(std::f64::consts::FRAC_1_SQRT_2)
    }
    pub fn singlet() -> Ket {
        (up_down() - down_up()) * C64::from(std::f64::consts::FRAC_1_SQRT_2)
    }

    /// Single-spin σx eigenvectors, `plus = true` for eigenvalue +1.
    pub fn x_spin(plus: bool) -> [C64; 2] {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        if plus {
            [c(h, 0.0), c(h, 0.0)]
        } else {
            [c(h, 0.0), c(-h, 0.0)]
        }
    }

    /// Single-spin σz eigenvectors.
    pub fn z_spin(plus: bool) -> [C64; 2] {
        if plus {
            [c(1.0, 0.0), c(0.0, 0.0)]
        } else {
            [c(0.0, 0.0), c(1.0, 0.0)]
        }
    }

    pub fn product(a: [C64; 2], b: [C64; 2]) -> Ket {
        Ket::new(a[0] * b[0], a[0] * b[1], a[1] * b[0], a[1] * b[1])
    }
}

/// Amplitudes of |1⟩_z|1⟩_z, the triplet-zero state and |−1⟩_z|−1⟩_z.
pub fn triplet_amplitudes(state: &CoherenceState) -> [f64; 3] {
    let rho = density_from_coherence(state);
    [
        amplitude(&rho, &kets::up_up()),
        amplitude(&rho, &kets::triplet_zero()),
        amplitude(&rho, &kets::down_down()),
    ]
}

/// Amplitudes of |1⟩_z|1⟩_x, |1⟩_z|−1⟩_x, |−1⟩_z|1⟩_x, |−1⟩_z|−1⟩_x.
pub fn case2_amplitudes(state: &CoherenceState) -> [f64; 4] {
    let rho = density_from_coherence(state);
    let mut out = [0.0; 4];
    for (i, (z, x)) in [(true, true), (true, false), (false, true), (false, false)]
        .into_iter()
        .enumerate()
    {
        let e = kets::product(kets::z_spin(z), kets::x_spin(x));
        out[i] = amplitude(&rho, &e);
    }
    out
}

/// Spin operators (ħ = 1) of the two-particle system.
pub mod ops {
    use super::{kron, pauli, Mat4, C64};

    fn half(m: Mat4) -> Mat4 {
        m * C64::from(0.5)
    }

    /// Component `axis` (1 = x, 2 = y, 3 = z) of the spin of particle 1.
    pub fn spin1(axis: usize) -> Mat4 {
        let p = pauli();
        half(kron(&p[axis], &p[0]))
    }

    /// Component `axis` of the spin of particle 2.
    pub fn spin2(axis: usize) -> Mat4 {
        let p = pauli();
        half(kron(&p[0], &p[axis]))
    }

    /// Component `axis` of the total spin.
    pub fn total(axis: usize) -> Mat4 {
        spin1(axis) + spin2(axis)
    }

    /// Total spin squared S² = Sx² + Sy² + Sz².
    pub fn total_squared() -> Mat4 {
        (1..=3).map(|a| total(a) * total(a)).fold(Mat4::zeros(), |acc, m| acc + m)
    }
}

/// Spin expectations read directly from the coherence vector.
pub mod obs {
    use super::{ix, CoherenceState};

    pub fn sz(s: &CoherenceState) -> f64 {
        0.5 * (s.s[ix::S3] + s.s[ix::S12])
    }
    pub fn sx(s: &CoherenceState) -> f64 {
        0.5 * (s.s[ix::S4] + s.s[ix::S1])
    }
    pub fn sy(s: &CoherenceState) -> f64 {
        0.5 * (s.s[ix::S2] + s.s[ix::S8])
    }
    pub fn s_squared(s: &CoherenceState) -> f64 {
        0.5 * (3.0 + s.s[ix::S5] + s.s[ix::S10] + s.s[ix::S15])
    }
    pub fn sz1(s: &CoherenceState) -> f64 {
        0.5 * s.s[ix::S12]
    }
    pub fn sz2(s: &CoherenceState) -> f64 {
        0.5 * s.s[ix::S3]
    }
    pub fn sx2(s: &CoherenceState) -> f64 {
        0.5 * s.s[ix::S1]
    }
}

/// Named initial states.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum StatePreset {
    Singlet,
    TripletSzPlus,
    TripletSzZero,
    TripletSzMinus,
    SxPlusPlus,
    SxMinusMinus,
    SxTripletZero,
    CaseBSuperposition,
    CaseDMixed,
    CaseEState,
    ProductZUpZDown,
}

impl StatePreset {
    pub const ALL: [StatePreset; 11] = [
        StatePreset::Singlet,
        StatePreset::TripletSzPlus,
        StatePreset::TripletSzZero,
        StatePreset::TripletSzMinus,
        StatePreset::SxPlusPlus,
        StatePreset::SxMinusMinus,
        StatePreset::SxTripletZero,
        StatePreset::CaseBSuperposition,
        StatePreset::CaseDMixed,
        StatePreset::CaseEState,
        StatePreset::ProductZUpZDown,
    ];

    /// State vector for pure presets.
    pub fn ket(&self) -> Option<Ket> {
        use kets::*;
        let h = C64::from(std::f64::consts::FRAC_1_SQRT_2);
        let q = C64::from(0.5);
        Some(match self {
            StatePreset::Singlet => singlet(),
            StatePreset::TripletSzPlus => up_up(),
            StatePreset::TripletSzZero => triplet_zero(),
            StatePreset::TripletSzMinus => down_down(),
            StatePreset::SxPlusPlus => product(x_spin(true), x_spin(true)),
            StatePreset::SxMinusMinus => product(x_spin(false), x_spin(false)),
            StatePreset::SxTripletZero => {
                (product(x_spin(true), x_spin(false)) + product(x_spin(false), x_spin(true))) * h
            }
            StatePreset::CaseBSuperposition => up_up() * h + (up_down() + down_up()) * q,
            StatePreset::CaseDMixed => return None,
            StatePreset::CaseEState => (up_up() + down_down()) * q + up_down() * h,
            StatePreset::ProductZUpZDown => up_down(),
        })
    }

    pub fn density(&self) -> DensityMatrix {
        match self.ket() {
            Some(psi) => DensityMatrix::pure(&psi),
            None => DensityMatrix::from_raw(Mat4::identity() * C64::from(0.25)),
        }
    }

    /// Coherence vector, with exact zeros and ±1 restored where rounding in
    /// the trace left residues below 1e-15.
    pub fn coherence(&self) -> CoherenceState {
        let mut st = coherence_from_density(&self.density()).expect("presets are valid");
        for x in st.s.iter_mut() {
            let r = x.round();
            if (*x - r).abs() < 1e-15 {
                *x = r;
            }
        }
        st
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generator_order() {
        let b = GeneratorBasis::get();
        let p = pauli();
        assert_eq!(*b.sigma(ix::S1), kron(&p[0], &p[1]));
        assert_eq!(*b.sigma(ix::S12), kron(&p[3], &p[0]));
        assert_eq!(*b.sigma(ix::S15), kron(&p[3], &p[3]));
    }

    #[test]
    fn singlet_vector() {
        let s = StatePreset::Singlet.coherence();
        for (k, &x) in s.s.iter().enumerate() {
            let want = if [ix::S5, ix::S10, ix::S15].contains(&k) { -1.0 } else { 0.0 };
            assert_eq!(x, want, "component {}", k + 1);
        }
    }

    #[test]
    fn rejects_bad_trace() {
        let m = Mat4::identity() * C64::from(0.3);
        assert!(matches!(DensityMatrix::new(m), Err(CoherenceError::TraceNotUnit(_))));
    }
}
