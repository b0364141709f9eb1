//! Regions of observable space that trajectories must respect.

use serde::{Deserialize, Serialize};

use crate::coherence::{ix, CoherenceState, StatePreset, N};

use super::config::Case;

/// Semi-axes and centre offset of the two triplet superposition ellipses
/// 2x² + 4(z ∓ ½)² = 1 in the (⟨Sx⟩, ⟨Sz⟩) plane.
const ELLIPSE_A: f64 = std::f64::consts::FRAC_1_SQRT_2;
const ELLIPSE_B: f64 = 0.5;

/// Constraint checked on every step of a trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Geometry {
    None,
    /// (⟨Sx,2⟩, ⟨Sz,1⟩) stays in the union of the four circles of radius ½
    /// centred at (±½, 0), (0, ±½).
    Petals,
    /// (⟨Sx⟩, ⟨Sz⟩) keeps the sign of ⟨Sx⟩ and stays outside both
    /// superposition ellipses.
    OutsideLoci { side: f64 },
    /// (⟨Sx⟩, ⟨Sz⟩) stays on the line ⟨Sx⟩ = 0.
    OnLine,
    /// (⟨Sx⟩, ⟨Sz⟩) stays on the upper (z centre +½) or lower ellipse.
    OnEllipse { upper: bool },
}

impl Geometry {
    pub fn for_case(case: Case, initial: StatePreset) -> Self {
        match (case, initial) {
            (Case::Case2, _) => Geometry::Petals,
            (Case::Case1, _) => Geometry::None,
            (_, StatePreset::SxPlusPlus) => Geometry::OutsideLoci { side: 1.0 },
            (_, StatePreset::SxMinusMinus) => Geometry::OutsideLoci { side: -1.0 },
            (_, StatePreset::SxTripletZero) => Geometry::OnLine,
            (_, StatePreset::CaseBSuperposition) => Geometry::OnEllipse { upper: true },
            _ => Geometry::None,
        }
    }

    /// How far the state lies outside the allowed region (0 when inside).
    pub fn violation(&self, s: &[f64; N]) -> f64 {
        match *self {
            Geometry::None => 0.0,
            Geometry::Petals => {
                let (x, y) = petal_point(s);
                petal_violation(x, y)
            }
            Geometry::OutsideLoci { side } => {
                let (x, z) = sz_plane_point(s);
                let cross = (-side * x).max(0.0);
                cross.max(ellipse_penetration(x, z, 0.5)).max(ellipse_penetration(x, z, -0.5))
            }
            Geometry::OnLine => sz_plane_point(s).0.abs(),
            Geometry::OnEllipse { upper } => {
                let (x, z) = sz_plane_point(s);
                let cz = if upper { 0.5 } else { -0.5 };
                ellipse_offset(x, z - cz)
            }
        }
    }

    pub fn state_violation(&self, st: &CoherenceState) -> f64 {
        self.violation(&st.s)
    }
}

/// (⟨Sx,2⟩, ⟨Sz,1⟩).
pub fn petal_point(s: &[f64; N]) -> (f64, f64) {
    (0.5 * s[ix::S1], 0.5 * s[ix::S12])
}

/// (⟨Sx⟩, ⟨Sz⟩).
pub fn sz_plane_point(s: &[f64; N]) -> (f64, f64) {
    (0.5 * (s[ix::S4] + s[ix::S1]), 0.5 * (s[ix::S3] + s[ix::S12]))
}

/// Distance outside the petal union, also counting any excursion beyond
/// the square |x|, |y| ≤ ½.
pub fn petal_violation(x: f64, y: f64) -> f64 {
    let circles = [(0.5, 0.0), (-0.5, 0.0), (0.0, 0.5), (0.0, -0.5)];
    let out = circles
        .iter()
        .map(|(cx, cy)| ((x - cx).hypot(y - cy) - 0.5).max(0.0))
        .fold(f64::INFINITY, f64::min);
    let bx = (x.abs() - 0.5).max(0.0);
    let by = (y.abs() - 0.5).max(0.0);
    out.max(bx).max(by)
}

/// Depth of (x, z) inside the ellipse centred at (0, cz); 0 outside.
pub fn ellipse_penetration(x: f64, z: f64, cz: f64) -> f64 {
    let dz = z - cz;
    if (x / ELLIPSE_A).powi(2) + (dz / ELLIPSE_B).powi(2) >= 1.0 {
        return 0.0;
    }
    // Collapse endpoints lie on the loci, so shallow penetrations are common;
    // the first-order offset is accurate to O(d²) there.
    let near = ellipse_offset(x, dz);
    if near < SHALLOW {
        near
    } else {
        ellipse_distance(x, dz)
    }
}

/// Depth below which [`ellipse_offset`] replaces the exact distance.
const SHALLOW: f64 = 1e-3;

/// First-order distance |f|/|∇f| to the centred ellipse, accurate for
/// points close to it and cheap enough for every step.
pub fn ellipse_offset(x: f64, y: f64) -> f64 {
    let (a2, b2) = (ELLIPSE_A * ELLIPSE_A, ELLIPSE_B * ELLIPSE_B);
    let f = x * x / a2 + y * y / b2 - 1.0;
    let g = (2.0 * x / a2).hypot(2.0 * y / b2);
    if g > 0.0 {
        f.abs() / g
    } else {
        ELLIPSE_B
    }
}

/// Euclidean distance from (x, y) to the centred ellipse with the
/// superposition-locus semi-axes.
pub fn ellipse_distance(x: f64, y: f64) -> f64 {
    let d = |th: f64| (x - ELLIPSE_A * th.cos()).hypot(y - ELLIPSE_B * th.sin());
    let n = 256;
    let step = std::f64::consts::TAU / n as f64;
    let mut best = 0.0;
    let mut best_d = f64::INFINITY;
    for k in 0..n {
        let th = k as f64 * step;
        let v = d(th);
        if v < best_d {
            best_d = v;
            best = th;
        }
    }
    let (mut lo, mut hi) = (best - step, best + step);
    for _ in 0..60 {
        let m1 = lo + (hi - lo) / 3.0;
        let m2 = hi - (hi - lo) / 3.0;
        if d(m1) < d(m2) {
            hi = m2;
        } else {
            lo = m1;
        }
    }
    d(0.5 * (lo + hi)).min(best_d)
}
