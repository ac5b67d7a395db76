//! Warped-product models of de Sitter and hyperbolic space and the
//! closed-form analytics of coordinate slices.
//!
//! Both models are `R_+ x S^n` with metric `∓dr² + ϑ(r)² σ`; de Sitter uses
//! `ϑ = cosh`, hyperbolic space `ϑ = sinh`. Slices `{r = const}` of the de
//! Sitter model are the round, totally umbilic fixed points of the flow and
//! serve as oracles everywhere else in the crate.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use crate::error::{Error, Result};
use crate::quadrature::integrate_adaptive;

/// Relative tolerance of the slice-volume quadrature.
pub const VOLUME_REL_TOL: f64 = 1e-13;
/// Absolute fallback tolerance of the slice-volume quadrature.
pub const VOLUME_ABS_TOL: f64 = 1e-14;

const INVERSE_BRACKET: (f64, f64) = (1e-8, 50.0);
// Areas within this relative distance of the equator are rejected.
const EQUATOR_REL_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum WarpKind {
    /// Upper branch of de Sitter space, `ϑ = cosh`.
    DeSitter,
    /// Hyperbolic space, `ϑ = sinh`.
    Hyperbolic,
}

/// Ambient space-form data: the hypersurface dimension and the warp function.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct WarpModel {
    dim: usize,
    kind: WarpKind,
}

impl WarpModel {
    pub fn new(dim: usize, kind: WarpKind) -> Result<Self> {
        if dim < 2 {
            return Err(Error::Domain(format!(
                "hypersurface dimension must be at least 2, got {dim}"
            )));
        }
        Ok(Self { dim, kind })
    }

    pub fn de_sitter(dim: usize) -> Result<Self> {
        Self::new(dim, WarpKind::DeSitter)
    }

    pub fn hyperbolic(dim: usize) -> Result<Self> {
        Self::new(dim, WarpKind::Hyperbolic)
    }

    /// Hypersurface dimension `n`.
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kind(&self) -> WarpKind {
        self.kind
    }

    /// Same kind, different dimension.
    pub fn with_dim(&self, dim: usize) -> Result<Self> {
        Self::new(dim, self.kind)
    }

    /// The dual model (de Sitter <-> hyperbolic) of the same dimension.
    pub fn dual(&self) -> Self {
        let kind = match self.kind {
            WarpKind::DeSitter => WarpKind::Hyperbolic,
            WarpKind::Hyperbolic => WarpKind::DeSitter,
        };
        Self {
            dim: self.dim,
            kind,
        }
    }

    #[inline]
    pub fn warp(&self, r: f64) -> f64 {
        match self.kind {
            WarpKind::DeSitter => r.cosh(),
            WarpKind::Hyperbolic => r.sinh(),
        }
    }

    #[inline]
    pub fn warp_derivative(&self, r: f64) -> f64 {
        match self.kind {
            WarpKind::DeSitter => r.sinh(),
            WarpKind::Hyperbolic => r.cosh(),
        }
    }

    /// `ϑ''`, which equals `ϑ` for both kinds.
    #[inline]
    pub fn warp_second(&self, r: f64) -> f64 {
        match self.kind {
            WarpKind::DeSitter => r.cosh(),
            WarpKind::Hyperbolic => r.sinh(),
        }
    }

    fn require_de_sitter(&self) -> Result<()> {
        match self.kind {
            WarpKind::DeSitter => Ok(()),
            WarpKind::Hyperbolic => Err(Error::Domain(
                "slice analytics are defined for the de Sitter model only".into(),
            )),
        }
    }
}

/// Measure of the unit `k`-sphere, `2π^((k+1)/2) / Γ((k+1)/2)`.
pub fn sphere_measure(k: usize) -> f64 {
    let s = (k as f64 + 1.0) / 2.0;
    2.0 * PI.powf(s) / gamma(s)
}

fn require_positive_radius(r: f64) -> Result<()> {
    if r > 0.0 && r.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("radius must be positive, got {r}")))
    }
}

/// `∫_0^r ϑ(s)^n ds`, the enclosed volume density of a slice per unit
/// measure of `S^n`. Defined for any `r >= 0`.
pub fn volume_density(model: &WarpModel, r: f64) -> f64 {
    let n = model.dim() as i32;
    integrate_adaptive(
        |s| model.warp(s).powi(n),
        0.0,
        r,
        VOLUME_REL_TOL,
        VOLUME_ABS_TOL,
    )
}

/// Closed-form data of the coordinate slice `{r = const}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SliceData {
    pub radius: f64,
    pub area: f64,
    pub volume: f64,
    pub mean_curvature: f64,
    pub total_h1: f64,
    pub w2: f64,
}

pub fn slice_data(model: &WarpModel, r: f64) -> Result<SliceData> {
    model.require_de_sitter()?;
    require_positive_radius(r)?;
    let n = model.dim();
    let omega = sphere_measure(n);
    let area = omega * model.warp(r).powi(n as i32);
    let volume = omega * volume_density(model, r);
    let mean_curvature = model.warp_derivative(r) / model.warp(r);
    let total_h1 = mean_curvature * area;
    Ok(SliceData {
        radius: r,
        area,
        volume,
        mean_curvature,
        total_h1,
        w2: total_h1 - volume,
    })
}

/// Area of the slice of radius `r`.
pub fn phi1(model: &WarpModel, r: f64) -> Result<f64> {
    model.require_de_sitter()?;
    require_positive_radius(r)?;
    Ok(sphere_measure(model.dim()) * model.warp(r).powi(model.dim() as i32))
}

/// `W2` of the slice of radius `r`.
pub fn phi2(model: &WarpModel, r: f64) -> Result<f64> {
    model.require_de_sitter()?;
    require_positive_radius(r)?;
    let n = model.dim() as i32;
    let omega = sphere_measure(model.dim());
    Ok(omega * model.warp_derivative(r) * model.warp(r).powi(n - 1)
        - omega * volume_density(model, r))
}

/// Radius of the slice with area `a`; safeguarded Newton iteration inside
/// a fixed bracket.
pub fn phi1_inverse(model: &WarpModel, a: f64) -> Result<f64> {
    model.require_de_sitter()?;
    let n = model.dim();
    let omega = sphere_measure(n);
    if !(a > omega * (1.0 + EQUATOR_REL_TOL)) || !a.is_finite() {
        return Err(Error::Domain(format!(
            "area {a} does not exceed the equator area {omega}"
        )));
    }
    let (mut lo, mut hi) = INVERSE_BRACKET;
    let residual = |r: f64| omega * model.warp(r).powi(n as i32) - a;
    if residual(hi) < 0.0 {
        return Err(Error::Domain(format!(
            "area {a} exceeds the slice area at r = {hi}"
        )));
    }
    if residual(lo) >= 0.0 {
        return Ok(lo);
    }
    let mut r = 0.5 * (lo + hi);
    for _ in 0..200 {
        let f = residual(r);
        if f == 0.0 {
            return Ok(r);
        }
        if f < 0.0 {
            lo = r;
        } else {
            hi = r;
        }
        let slope =
            omega * n as f64 * model.warp(r).powi(n as i32 - 1) * model.warp_derivative(r);
        let newton = r - f / slope;
        let next = if slope > 0.0 && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        let converged = (next - r).abs() <= 2.0 * f64::EPSILON * r || hi - lo <= f64::EPSILON * hi;
        r = next;
        if converged {
            return Ok(r);
        }
    }
    Ok(r)
}

/// The equality function of the Minkowski inequality: `φ2 ∘ φ1⁻¹`.
pub fn phi_of_area(model: &WarpModel, a: f64) -> Result<f64> {
    let r = phi1_inverse(model, a)?;
    phi2(model, r)
}
