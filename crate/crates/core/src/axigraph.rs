//! Axisymmetric spacelike graphs `r = ρ(ψ)` over `S^n` in de Sitter space.
//!
//! `ψ ∈ [0, π]` is the polar angle of `S^n`. Profiles are sampled on the
//! uniform grid `ψ_i = iπ/N`, and even reflection across both poles supplies
//! the ghost nodes, so every one-sided derivative vanishes at the axis.
//!
//! In these coordinates the induced metric is
//! `g = ϑ²v² dψ² + ϑ² sin²ψ σ_{n-1}` with `v² = 1 - ρ'²/ϑ²`, and the shape
//! operator has the radial eigenvalue `κ_rad` (multiplicity one) and the
//! angular eigenvalue `κ_ang` (multiplicity `n-1`).

use std::f64::consts::PI;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::quadrature::gauss_legendre8;
use crate::spaceform::WarpModel;

/// Smallest admissible number of grid intervals.
pub const MIN_INTERVALS: usize = 16;
/// Default spacelikeness floor on `v²`.
pub const DEFAULT_EPS_V: f64 = 1e-6;

/// Uniform polar-angle grid together with the product-trapezoid weights
/// `w_i = ∫ hat_i(ψ) sin^{n-1}ψ dψ`.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    dim: usize,
    intervals: usize,
    step: f64,
    psi: Vec<f64>,
    weights: Vec<f64>,
    cells: Vec<f64>,
}

impl Grid {
    pub fn new(dim: usize, intervals: usize) -> Result<Self> {
        if intervals < MIN_INTERVALS {
            return Err(Error::InvalidProfile(format!(
                "grid needs at least {MIN_INTERVALS} intervals, got {intervals}"
            )));
        }
        let step = PI / intervals as f64;
        let psi: Vec<f64> = (0..=intervals).map(|i| i as f64 * step).collect();
        let power = (dim - 1) as i32;
        let weight = |x: f64| x.sin().powi(power);
        let mut weights = vec![0.0; intervals + 1];
        for i in 0..intervals {
            let (a, b) = (psi[i], psi[i + 1]);
            weights[i] += gauss_legendre8(|x| (b - x) / step * weight(x), a, b);
            weights[i + 1] += gauss_legendre8(|x| (x - a) / step * weight(x), a, b);
        }
        // control volumes [ψ_i - h/2, ψ_i + h/2] clipped to [0, π]
        let cells = psi
            .iter()
            .map(|&x| gauss_legendre8(weight, (x - 0.5 * step).max(0.0), (x + 0.5 * step).min(PI)))
            .collect();
        Ok(Self {
            dim,
            intervals,
            step,
            psi,
            weights,
            cells,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn intervals(&self) -> usize {
        self.intervals
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn psi(&self) -> &[f64] {
        &self.psi
    }

    /// Product-trapezoid weights against `sin^{n-1}ψ`.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.psi.len()
    }

    pub fn is_empty(&self) -> bool {
        self.psi.is_empty()
    }

    #[inline]
    pub fn is_pole(&self, i: usize) -> bool {
        i == 0 || i == self.intervals
    }
}

/// Centered first and second differences of a field that is even about
/// both poles.
pub fn even_derivatives(values: &[f64], step: f64) -> (Vec<f64>, Vec<f64>) {
    let last = values.len() - 1;
    let at = |i: isize| -> f64 {
        if i < 0 {
            values[(-i) as usize]
        } else if i as usize > last {
            values[2 * last - i as usize]
        } else {
            values[i as usize]
        }
    };
    let mut first = vec![0.0; values.len()];
    let mut second = vec![0.0; values.len()];
    for i in 0..=last {
        let k = i as isize;
        let (lo, mid, hi) = (at(k - 1), values[i], at(k + 1));
        first[i] = if i == 0 || i == last {
            0.0
        } else {
            (hi - lo) / (2.0 * step)
        };
        second[i] = (hi - 2.0 * mid + lo) / (step * step);
    }
    (first, second)
}

/// Centered first differences of an even field; zero at the poles.
pub fn even_gradient(values: &[f64], step: f64) -> Vec<f64> {
    let last = values.len() - 1;
    (0..=last)
        .map(|i| {
            if i == 0 || i == last {
                0.0
            } else {
                (values[i + 1] - values[i - 1]) / (2.0 * step)
            }
        })
        .collect()
}

/// Legendre polynomial `P_l(x)` by the three-term recurrence.
pub fn legendre(l: usize, x: f64) -> f64 {
    match l {
        0 => 1.0,
        1 => x,
        _ => {
            let (mut p0, mut p1) = (1.0, x);
            for k in 1..l {
                let kf = k as f64;
                let p2 = ((2.0 * kf + 1.0) * x * p1 - kf * p0) / (kf + 1.0);
                p0 = p1;
                p1 = p2;
            }
            p1
        }
    }
}

/// `(P_l(x), P_l'(x), P_l''(x))` from the recurrences
/// `P'_{k+1} = P'_{k-1} + (2k+1) P_k` and `P''_{k+1} = P''_{k-1} + (2k+1) P'_k`.
pub fn legendre_with_derivatives(l: usize, x: f64) -> (f64, f64, f64) {
    let mut p = [1.0, x];
    let mut dp = [0.0, 1.0];
    let mut d2p = [0.0, 0.0];
    if l == 0 {
        return (1.0, 0.0, 0.0);
    }
    for k in 1..l {
        let kf = k as f64;
        let next = ((2.0 * kf + 1.0) * x * p[1] - kf * p[0]) / (kf + 1.0);
        let next_d = dp[0] + (2.0 * kf + 1.0) * p[1];
        let next_d2 = d2p[0] + (2.0 * kf + 1.0) * dp[1];
        p = [p[1], next];
        dp = [dp[1], next_d];
        d2p = [d2p[1], next_d2];
    }
    (p[1], dp[1], d2p[1])
}

/// A sampled radial function `ρ(ψ) > 0` over the upper branch.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialProfile {
    model: WarpModel,
    grid: Arc<Grid>,
    rho: Vec<f64>,
}

impl RadialProfile {
    pub fn new(model: WarpModel, rho: Vec<f64>) -> Result<Self> {
        if rho.len() < MIN_INTERVALS + 1 {
            return Err(Error::InvalidProfile(format!(
                "profile needs at least {} nodes, got {}",
                MIN_INTERVALS + 1,
                rho.len()
            )));
        }
        let grid = Arc::new(Grid::new(model.dim(), rho.len() - 1)?);
        Self::on_grid(model, grid, rho)
    }

    /// Builds a profile on an existing grid (cheap; the grid is shared).
    pub fn on_grid(model: WarpModel, grid: Arc<Grid>, rho: Vec<f64>) -> Result<Self> {
        if grid.dim() != model.dim() {
            return Err(Error::InvalidProfile(format!(
                "grid dimension {} does not match model dimension {}",
                grid.dim(),
                model.dim()
            )));
        }
        if rho.len() != grid.len() {
            return Err(Error::InvalidProfile(format!(
                "expected {} samples, got {}",
                grid.len(),
                rho.len()
            )));
        }
        if let Some((i, &r)) = rho
            .iter()
            .enumerate()
            .find(|(_, r)| !(**r > 0.0) || !r.is_finite())
        {
            return Err(Error::InvalidProfile(format!(
                "rho must be positive and finite (upper branch), node {i} has {r}"
            )));
        }
        Ok(Self { model, grid, rho })
    }

    pub fn from_fn(model: WarpModel, intervals: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        let grid = Arc::new(Grid::new(model.dim(), intervals)?);
        let rho = grid.psi().iter().map(|&p| f(p)).collect();
        Self::on_grid(model, grid, rho)
    }

    /// The coordinate slice `ρ ≡ r`.
    pub fn slice(model: WarpModel, intervals: usize, r: f64) -> Result<Self> {
        Self::from_fn(model, intervals, |_| r)
    }

    /// `ρ = r + ε P_l(cos ψ)`.
    pub fn legendre(
        model: WarpModel,
        intervals: usize,
        r: f64,
        eps: f64,
        l: usize,
    ) -> Result<Self> {
        Self::from_fn(model, intervals, |p| r + eps * legendre(l, p.cos()))
    }

    /// Same grid, new samples.
    pub fn with_rho(&self, rho: Vec<f64>) -> Result<Self> {
        Self::on_grid(self.model, Arc::clone(&self.grid), rho)
    }

    pub fn model(&self) -> &WarpModel {
        &self.model
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn dim(&self) -> usize {
        self.model.dim()
    }

    pub fn intervals(&self) -> usize {
        self.grid.intervals()
    }

    pub fn step(&self) -> f64 {
        self.grid.step()
    }

    pub fn psi(&self) -> &[f64] {
        self.grid.psi()
    }

    pub fn rho(&self) -> &[f64] {
        &self.rho
    }

    pub fn min_rho(&self) -> f64 {
        self.rho.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_rho(&self) -> f64 {
        self.rho.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn mean_rho(&self) -> f64 {
        self.rho.iter().sum::<f64>() / self.rho.len() as f64
    }

    pub fn oscillation(&self) -> f64 {
        self.max_rho() - self.min_rho()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Derivatives {
    pub first: Vec<f64>,
    pub second: Vec<f64>,
}

/// Second-order centered differences of `ρ` with parity ghost nodes.
pub fn derivatives(profile: &RadialProfile) -> Derivatives {
    let (first, second) = even_derivatives(profile.rho(), profile.step());
    Derivatives { first, second }
}

/// Pointwise differential geometry of a profile.
#[derive(Debug, Clone, PartialEq)]
pub struct GeometryFrame {
    pub dim: usize,
    pub rho_prime: Vec<f64>,
    pub rho_second: Vec<f64>,
    pub v: Vec<f64>,
    pub u: Vec<f64>,
    pub kappa_rad: Vec<f64>,
    pub kappa_ang: Vec<f64>,
    pub h1: Vec<f64>,
    pub h2: Vec<f64>,
    pub norm_a2: Vec<f64>,
    pub ring2: Vec<f64>,
    pub grad2rho: Vec<f64>,
    pub min_v2: f64,
    pub min_h1: f64,
    pub max_h1: f64,
    pub max_ring2: f64,
}

impl GeometryFrame {
    pub fn len(&self) -> usize {
        self.v.len()
    }

    pub fn is_empty(&self) -> bool {
        self.v.is_empty()
    }
}

/// `v²` and the two principal curvatures at one node.
///
/// On the axis `ρ' cot ψ` is replaced by its limit `ρ''`, which makes the
/// point umbilic.
#[inline]
pub fn node_curvatures(
    model: &WarpModel,
    psi: f64,
    rho: f64,
    d1: f64,
    d2: f64,
    on_axis: bool,
) -> (f64, f64, f64) {
    let th = model.warp(rho);
    let dth = model.warp_derivative(rho);
    let v2 = 1.0 - d1 * d1 / (th * th);
    let v = v2.max(0.0).sqrt();
    let kappa_rad = (th * d2 + th * th * dth - 2.0 * dth * d1 * d1) / (th * th * th * v * v * v);
    let cot_term = if on_axis { d2 } else { d1 * psi.cos() / psi.sin() };
    let kappa_ang = (dth + cot_term / th) / (th * v);
    (v2, kappa_rad, kappa_ang)
}

/// Frame from explicitly supplied derivatives. Nodes flagged by
/// `on_axis` use the umbilic pole limit.
pub fn frame_from_derivatives(
    model: &WarpModel,
    psi: &[f64],
    rho: &[f64],
    rho_prime: &[f64],
    rho_second: &[f64],
    on_axis: impl Fn(usize) -> bool,
    eps_v: f64,
) -> Result<GeometryFrame> {
    let n = model.dim();
    let nf = n as f64;
    let len = rho.len();
    let mut frame = GeometryFrame {
        dim: n,
        rho_prime: rho_prime.to_vec(),
        rho_second: rho_second.to_vec(),
        v: Vec::with_capacity(len),
        u: Vec::with_capacity(len),
        kappa_rad: Vec::with_capacity(len),
        kappa_ang: Vec::with_capacity(len),
        h1: Vec::with_capacity(len),
        h2: Vec::with_capacity(len),
        norm_a2: Vec::with_capacity(len),
        ring2: Vec::with_capacity(len),
        grad2rho: Vec::with_capacity(len),
        min_v2: f64::INFINITY,
        min_h1: f64::INFINITY,
        max_h1: f64::NEG_INFINITY,
        max_ring2: 0.0,
    };
    for i in 0..len {
        let (v2, kr, ka) = node_curvatures(
            model,
            psi[i],
            rho[i],
            rho_prime[i],
            rho_second[i],
            on_axis(i),
        );
        if !(v2 > eps_v) {
            return Err(Error::SpacelikeBreached { node: i, v2 });
        }
        let th = model.warp(rho[i]);
        let v = v2.sqrt();
        let h1 = (kr + (nf - 1.0) * ka) / nf;
        let h2 = (2.0 * kr * ka + (nf - 2.0) * ka * ka) / nf;
        let norm_a2 = kr * kr + (nf - 1.0) * ka * ka;
        let ring2 = (nf - 1.0) / nf * (kr - ka) * (kr - ka);
        let grad2rho = rho_prime[i] * rho_prime[i] / (th * th * v2);
        frame.min_v2 = frame.min_v2.min(v2);
        frame.min_h1 = frame.min_h1.min(h1);
        frame.max_h1 = frame.max_h1.max(h1);
        frame.max_ring2 = frame.max_ring2.max(ring2);
        frame.v.push(v);
        frame.u.push(th / v);
        frame.kappa_rad.push(kr);
        frame.kappa_ang.push(ka);
        frame.h1.push(h1);
        frame.h2.push(h2);
        frame.norm_a2.push(norm_a2);
        frame.ring2.push(ring2);
        frame.grad2rho.push(grad2rho);
    }
    Ok(frame)
}

pub fn frame(profile: &RadialProfile) -> Result<GeometryFrame> {
    frame_with_floor(profile, DEFAULT_EPS_V)
}

pub fn frame_with_floor(profile: &RadialProfile, eps_v: f64) -> Result<GeometryFrame> {
    let d = derivatives(profile);
    let grid = profile.grid();
    frame_from_derivatives(
        profile.model(),
        grid.psi(),
        profile.rho(),
        &d.first,
        &d.second,
        |i| grid.is_pole(i),
        eps_v,
    )
}

/// Induced Laplace–Beltrami operator of an axisymmetric field, in flux
/// form `Δf = (1/√g) ∂ψ(√g g^{ψψ} ∂ψ f)` with `√g ∝ ϑⁿ v sin^{n-1}ψ`.
///
/// Finite-volume discretization: fluxes at cell midpoints, divided by the
/// exact `sin^{n-1}` measure of each control volume. The pole cells are
/// half cells and the flux through the axis vanishes.
pub fn laplace_beltrami(profile: &RadialProfile, field: &[f64]) -> Result<Vec<f64>> {
    let model = profile.model();
    let grid = profile.grid();
    let n = model.dim() as i32;
    let h = grid.step();
    let rho = profile.rho();
    let last = grid.intervals();
    if field.len() != rho.len() {
        return Err(Error::InvalidProfile(format!(
            "field has {} samples, profile has {}",
            field.len(),
            rho.len()
        )));
    }

    // a_{i+1/2} (f_{i+1} - f_i)/h with a = ϑ^{n-2} sin^{n-1}ψ / v
    let mut flux = Vec::with_capacity(last);
    for i in 0..last {
        let rm = 0.5 * (rho[i] + rho[i + 1]);
        let dr = (rho[i + 1] - rho[i]) / h;
        let th = model.warp(rm);
        let v2 = 1.0 - dr * dr / (th * th);
        if !(v2 > 0.0) {
            return Err(Error::SpacelikeBreached { node: i, v2 });
        }
        let s = (grid.psi()[i] + 0.5 * h).sin().powi(n - 1);
        let a = th.powi(n - 2) * s / v2.sqrt();
        flux.push(a * (field[i + 1] - field[i]) / h);
    }

    let d1 = even_gradient(rho, h);
    let mut out = vec![0.0; rho.len()];
    for i in 0..=last {
        let th = model.warp(rho[i]);
        let v2 = 1.0 - d1[i] * d1[i] / (th * th);
        if !(v2 > 0.0) {
            return Err(Error::SpacelikeBreached { node: i, v2 });
        }
        let density = th.powi(n) * v2.sqrt();
        let inflow = if i == 0 { 0.0 } else { flux[i - 1] };
        let outflow = if i == last { 0.0 } else { flux[i] };
        out[i] = (outflow - inflow) / (density * grid.cells[i]);
    }
    Ok(out)
}

/// `g(∇a, ∇b) = a' b' / (ϑ² v²)` for even fields.
pub fn gradient_pairing(profile: &RadialProfile, frame: &GeometryFrame, a: &[f64], b: &[f64]) -> Vec<f64> {
    let h = profile.step();
    let da = even_gradient(a, h);
    let db = even_gradient(b, h);
    let model = profile.model();
    profile
        .rho()
        .iter()
        .enumerate()
        .map(|(i, &r)| {
            let th = model.warp(r);
            da[i] * db[i] / (th * th * frame.v[i] * frame.v[i])
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn ds(n: usize) -> WarpModel {
        WarpModel::de_sitter(n).unwrap()
    }

    fn max_abs(v: impl IntoIterator<Item = f64>) -> f64 {
        v.into_iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    #[test]
    fn rejects_small_or_nonpositive_profiles() {
        assert!(RadialProfile::new(ds(2), vec![1.0; 10]).is_err());
        let mut rho = vec![1.0; 33];
        rho[5] = -0.1;
        assert!(RadialProfile::new(ds(2), rho).is_err());
        assert!(RadialProfile::slice(ds(2), 8, 1.0).is_err());
    }

    #[test]
    fn product_weights_integrate_sphere_measure() {
        for n in [2, 3, 5] {
            let g = Grid::new(n, 64).unwrap();
            let total: f64 = g.weights().iter().sum();
            let exact = crate::spaceform::sphere_measure(n) / crate::spaceform::sphere_measure(n - 1);
            assert_relative_eq!(total, exact, max_relative = 1e-14);
        }
    }

    #[test]
    fn legendre_values() {
        for &x in &[-0.7, 0.0, 0.3, 1.0] {
            assert_relative_eq!(legendre(2, x), 0.5 * (3.0 * x * x - 1.0), epsilon = 1e-15);
            assert_relative_eq!(legendre(3, x), 0.5 * (5.0 * x * x * x - 3.0 * x), epsilon = 1e-15);
        }
    }

    #[test]
    fn legendre_derivatives_match_closed_forms() {
        for &x in &[-0.9, -0.2, 0.0, 0.55, 1.0] {
            let (p, dp, d2p) = legendre_with_derivatives(4, x);
            assert_relative_eq!(p, legendre(4, x), epsilon = 1e-15);
            let closed_d = (140.0 * x * x * x - 60.0 * x) / 8.0;
            let closed_d2 = (420.0 * x * x - 60.0) / 8.0;
            assert_relative_eq!(dp, closed_d, epsilon = 1e-13);
            assert_relative_eq!(d2p, closed_d2, epsilon = 1e-13);
        }
        assert_eq!(legendre_with_derivatives(1, 0.3), (0.3, 1.0, 0.0));
    }

    #[test]
    fn constant_profile_has_zero_derivatives() {
        let p = RadialProfile::slice(ds(2), 40, 0.8).unwrap();
        let d = derivatives(&p);
        assert!(d.first.iter().all(|&x| x == 0.0));
        assert!(d.second.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn derivatives_are_second_order() {
        let f = |p: f64| 1.0 + 0.1 * (2.0 * p).cos();
        let df = |p: f64| -0.2 * (2.0 * p).sin();
        let errs: Vec<f64> = [50, 100, 200]
            .iter()
            .map(|&n| {
                let p = RadialProfile::from_fn(ds(2), n, f).unwrap();
                let d = derivatives(&p);
                max_abs(p.psi().iter().zip(&d.first).map(|(&x, &y)| y - df(x)))
            })
            .collect();
        for w in errs.windows(2) {
            assert!((w[0] / w[1]).log2() >= 1.9, "{errs:?}");
        }
    }

    #[test]
    fn pole_derivative_vanishes_for_even_profiles() {
        let p = RadialProfile::from_fn(ds(2), 64, |x| 1.0 + 0.2 * x.cos()).unwrap();
        let d = derivatives(&p);
        assert_eq!(d.first[0], 0.0);
        assert_eq!(d.first[64], 0.0);
    }

    #[test]
    fn slice_frame_is_umbilic() {
        for n in [2, 3, 5] {
            let r: f64 = 1.0;
            let p = RadialProfile::slice(ds(n), 32, r).unwrap();
            let f = frame(&p).unwrap();
            for i in 0..f.len() {
                assert_relative_eq!(f.kappa_rad[i], r.tanh(), max_relative = 1e-14);
                assert_relative_eq!(f.kappa_ang[i], r.tanh(), max_relative = 1e-14);
                assert_eq!(f.v[i], 1.0);
                assert_relative_eq!(f.u[i], r.cosh(), max_relative = 1e-15);
                assert!(f.ring2[i] < 1e-28);
            }
        }
        let f = frame(&RadialProfile::slice(ds(2), 32, 1.0).unwrap()).unwrap();
        assert_relative_eq!(f.h2[7], 0.580_025_658_385_974, max_relative = 1e-13);
    }

    #[test]
    fn pole_points_are_umbilic() {
        let p = RadialProfile::legendre(ds(3), 100, 1.0, 0.1, 2).unwrap();
        let f = frame(&p).unwrap();
        assert_relative_eq!(f.kappa_rad[0], f.kappa_ang[0], max_relative = 1e-14);
        assert_relative_eq!(f.kappa_rad[100], f.kappa_ang[100], max_relative = 1e-14);
    }

    #[test]
    fn trace_free_norm_identities() {
        for n in [2, 3, 4] {
            let p = RadialProfile::legendre(ds(n), 80, 1.2, 0.12, 3).unwrap();
            let f = frame(&p).unwrap();
            let nf = n as f64;
            for i in 0..f.len() {
                let direct = f.norm_a2[i] - nf * f.h1[i] * f.h1[i];
                assert!((direct - f.ring2[i]).abs() < 1e-12);
                assert!(f.ring2[i] >= 0.0);
                let closed = (1.0 - f.v[i] * f.v[i]) / (f.v[i] * f.v[i]);
                assert!((f.grad2rho[i] - closed).abs() < 1e-13 * (1.0 + closed));
                // normalized H2 = H1² - |Å|²/(n(n-1)) · n ... check via σ2
                let s2 = f.kappa_rad[i] * (nf - 1.0) * f.kappa_ang[i]
                    + (nf - 1.0) * (nf - 2.0) / 2.0 * f.kappa_ang[i] * f.kappa_ang[i];
                assert_relative_eq!(f.h2[i], s2 / (nf * (nf - 1.0) / 2.0), max_relative = 1e-13);
            }
        }
    }

    #[test]
    fn perturbed_slice_family_is_mean_convex() {
        for k in 0..=15 {
            let eps = 0.01 * k as f64;
            let p = RadialProfile::legendre(ds(2), 200, 1.0, eps, 2).unwrap();
            assert!(frame(&p).unwrap().min_h1 > 0.0, "eps = {eps}");
        }
    }

    #[test]
    fn steep_profile_breaches_spacelikeness() {
        // |ρ'| reaches 3.2 near ψ = π/8 where ϑ(ρ) ≈ 1.67
        let p = RadialProfile::from_fn(ds(2), 64, |x| 0.3 + 0.8 * (1.0 + (4.0 * x).cos())).unwrap();
        match frame(&p) {
            Err(Error::SpacelikeBreached { .. }) => {}
            other => panic!("expected breach, got {other:?}"),
        }
    }

    #[test]
    fn laplacian_of_constant_vanishes() {
        let p = RadialProfile::legendre(ds(3), 64, 1.0, 0.1, 2).unwrap();
        let lap = laplace_beltrami(&p, &vec![2.5; 65]).unwrap();
        assert!(max_abs(lap) < 1e-12);
    }

    #[test]
    fn laplacian_on_round_sphere_matches_eigenvalue() {
        // On a slice the induced metric is ϑ(r)² σ. The zonal harmonic of
        // degree 2 on S^n (a Gegenbauer polynomial) has σ-eigenvalue -2(n+1).
        let zonal = |n: usize, x: f64| match n {
            2 => legendre(2, x),
            _ => 4.0 * x * x - 1.0,
        };
        for n in [2, 3] {
            let r: f64 = 0.7;
            let errs: Vec<f64> = [64, 128, 256]
                .iter()
                .map(|&m| {
                    let p = RadialProfile::slice(ds(n), m, r).unwrap();
                    let field: Vec<f64> = p.psi().iter().map(|x| zonal(n, x.cos())).collect();
                    let lap = laplace_beltrami(&p, &field).unwrap();
                    let lambda = -(2.0 * (2.0 + n as f64 - 1.0)) / r.cosh().powi(2);
                    max_abs(lap.iter().zip(&field).map(|(a, b)| a - lambda * b))
                })
                .collect();
            for w in errs.windows(2) {
                assert!((w[0] / w[1]).log2() > 1.9, "n = {n}: {errs:?}");
            }
        }
    }

    #[test]
    fn laplacian_of_rho_vanishes_on_slices() {
        let p = RadialProfile::slice(ds(2), 50, 1.3).unwrap();
        let lap = laplace_beltrami(&p, p.rho()).unwrap();
        assert!(max_abs(lap) == 0.0);
    }
}
