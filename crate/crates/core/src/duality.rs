//! Minkowski-space picture of an axisymmetric graph and the Gauss-map
//! duality with starshaped hypersurfaces of hyperbolic space.
//!
//! De Sitter space is the quadric `⟨y, y⟩ = 1` and hyperbolic space the
//! upper sheet of `⟨x, x⟩ = -1` in `R^{1,n+1}`. The axisymmetric profile
//! curve lives in the `(e0, e1, e2)` plane; trailing components are zero.
//! For a strictly convex spacelike hypersurface the timelike unit normal
//! `ν` traces a hypersurface of hyperbolic space whose own unit normal is
//! `y`, with principal curvatures `1/κ`.

use serde::{Deserialize, Serialize};

use crate::axigraph::{frame, GeometryFrame, RadialProfile};
use crate::error::{Error, Result};
use crate::spaceform::WarpModel;

/// Curvature floor of the convexity gate.
pub const KAPPA_FLOOR: f64 = 1e-6;

/// `⟨a, b⟩ = -a⁰b⁰ + Σ aᵅbᵅ`.
pub fn minkowski(a: &[f64], b: &[f64]) -> f64 {
    let spatial: f64 = a[1..].iter().zip(&b[1..]).map(|(x, y)| x * y).sum();
    spatial - a[0] * b[0]
}

/// Reflection across the symmetry axis, `e2 -> -e2`.
fn reflect(p: &[f64]) -> Vec<f64> {
    let mut q = p.to_vec();
    q[2] = -q[2];
    q
}

/// Centered first and second angular differences of an axisymmetric
/// curve; ghost points at the poles are reflections across the axis.
pub fn curve_derivatives(points: &[Vec<f64>], step: f64) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let last = points.len() - 1;
    let mut first = Vec::with_capacity(points.len());
    let mut second = Vec::with_capacity(points.len());
    for i in 0..=last {
        let lo = if i == 0 { reflect(&points[1]) } else { points[i - 1].clone() };
        let hi = if i == last { reflect(&points[last - 1]) } else { points[i + 1].clone() };
        let mid = &points[i];
        first.push(lo.iter().zip(&hi).map(|(a, b)| (b - a) / (2.0 * step)).collect());
        second.push(
            lo.iter()
                .zip(&hi)
                .zip(mid)
                .map(|((a, b), c)| (b - 2.0 * c + a) / (step * step))
                .collect(),
        );
    }
    (first, second)
}

/// Profile curve `y` and future timelike unit normal `ν` in `R^{1,n+1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct AmbientCurve {
    pub points: Vec<Vec<f64>>,
    pub normals: Vec<Vec<f64>>,
}

/// `y = (sinh ρ, cosh ρ cos ψ, cosh ρ sin ψ, 0, ...)` together with the unit
/// normal `ν`.
///
/// Writing `ν = a ∂r + b ∂ψ`, orthogonality to the tangent `ρ' ∂r + ∂ψ`
/// gives `b ϑ² = a ρ'` and `⟨ν, ν⟩ = -1` gives `a = 1/v`.
pub fn embed(profile: &RadialProfile, frame: &GeometryFrame) -> Result<AmbientCurve> {
    let width = profile.dim() + 2;
    let mut points = Vec::with_capacity(frame.len());
    let mut normals = Vec::with_capacity(frame.len());
    for (i, (&psi, &rho)) in profile.psi().iter().zip(profile.rho()).enumerate() {
        let d1 = frame.rho_prime[i];
        let (sh, ch) = (rho.sinh(), rho.cosh());
        let v2 = 1.0 - d1 * d1 / (ch * ch);
        if !(v2 > 0.0) {
            return Err(Error::SpacelikeBreached { node: i, v2 });
        }
        let a = 1.0 / v2.sqrt();
        let b = a * d1 / (ch * ch);
        let (s, c) = psi.sin_cos();
        let mut y = vec![0.0; width];
        y[0] = sh;
        y[1] = ch * c;
        y[2] = ch * s;
        // ∂r ↦ (cosh ρ, sinh ρ p), ∂ψ ↦ (0, cosh ρ p_ψ)
        let mut nu = vec![0.0; width];
        nu[0] = a * ch;
        nu[1] = a * sh * c - b * ch * s;
        nu[2] = a * sh * s + b * ch * c;
        points.push(y);
        normals.push(nu);
    }
    Ok(AmbientCurve { points, normals })
}

/// The dual hypersurface `x̃ = ν` in hyperbolic space.
#[derive(Debug, Clone, PartialEq)]
pub struct DualCurve {
    pub points: Vec<Vec<f64>>,
    /// Hyperbolic radial coordinate `r̃ = arccosh(x̃⁰)`.
    pub radius: Vec<f64>,
    /// Polar angle of `x̃` in the `(e1, e2)` plane.
    pub angle: Vec<f64>,
    /// Dual support function `ũ = ⟨-e - ⟨e, x̃⟩x̃, y⟩`.
    pub support: Vec<f64>,
    /// `⟨∂ψ x̃, ∂ψ x̃⟩` by centered differences.
    pub metric: Vec<f64>,
}

fn convexity_gate(frame: &GeometryFrame) -> Result<()> {
    for i in 0..frame.len() {
        let kappa = frame.kappa_rad[i].min(frame.kappa_ang[i]);
        if !(kappa > KAPPA_FLOOR) {
            return Err(Error::NotConvex { node: i, kappa });
        }
    }
    Ok(())
}

pub fn dualize(curve: &AmbientCurve, frame: &GeometryFrame, step: f64) -> Result<DualCurve> {
    convexity_gate(frame)?;
    let points = curve.normals.clone();
    let (tangent, _) = curve_derivatives(&points, step);
    let radius = points.iter().map(|x| x[0].max(1.0).acosh()).collect();
    let angle = points.iter().map(|x| x[2].abs().atan2(x[1])).collect();
    let support = points
        .iter()
        .zip(&curve.points)
        .map(|(x, y)| {
            // ϑ̃∂r̃ = -e - ⟨e, x̃⟩x̃ with ⟨e, x̃⟩ = -x̃⁰
            let mut field: Vec<f64> = x.iter().map(|c| x[0] * c).collect();
            field[0] -= 1.0;
            minkowski(&field, y)
        })
        .collect();
    let metric = tangent.iter().map(|t| minkowski(t, t)).collect();
    Ok(DualCurve {
        points,
        radius,
        angle,
        support,
        metric,
    })
}

/// Elementary symmetric polynomials `σ_n` and `σ_{n-1}` of one radial
/// value `a` and `n - 1` angular values `b`.
fn top_symmetric(n: usize, a: f64, b: f64) -> (f64, f64) {
    let m = n as i32 - 1;
    let top = a * b.powi(m);
    let below = b.powi(m) + (n as f64 - 1.0) * a * b.powi(m - 1);
    (top, below)
}

/// `(ϑ̃'(r̃) - n ũ σ_n(κ̃)/σ_{n-1}(κ̃)) - (u - ϑ'(ρ)/H1)` at every node,
/// with `κ̃ = 1/κ`. Both brackets are the normal speed of the flow, read
/// on the dual and on the original side.
pub fn dual_speed_identity(
    profile: &RadialProfile,
    frame: &GeometryFrame,
    dual: &DualCurve,
) -> Result<Vec<f64>> {
    convexity_gate(frame)?;
    let hyperbolic = profile.model().dual();
    let model = profile.model();
    let n = profile.dim();
    Ok((0..frame.len())
        .map(|i| {
            let (top, below) =
                top_symmetric(n, 1.0 / frame.kappa_rad[i], 1.0 / frame.kappa_ang[i]);
            let dual_speed = hyperbolic.warp_derivative(dual.radius[i])
                - n as f64 * dual.support[i] * top / below;
            let speed = frame.u[i] - model.warp_derivative(profile.rho()[i]) / frame.h1[i];
            dual_speed - speed
        })
        .collect())
}

/// Dual radial curvature `-⟨∂²ψ x̃, ν̃⟩ / ⟨∂ψ x̃, ∂ψ x̃⟩` with `ν̃ = y`.
pub fn dual_radial_curvature(curve: &AmbientCurve, dual: &DualCurve, step: f64) -> Vec<f64> {
    let (_, second) = curve_derivatives(&dual.points, step);
    second
        .iter()
        .zip(&curve.points)
        .zip(&dual.metric)
        .map(|((xs, y), g)| -minkowski(xs, y) / g)
        .collect()
}

/// Unit spacelike normal of the dual curve, rebuilt from the points alone
/// as the Lorentz-orthogonal complement of `x̃` and `∂ψ x̃` in the
/// `(e0, e1, e2)` span, oriented so that its time component is positive.
pub fn dual_normal(dual: &DualCurve, step: f64) -> Vec<Vec<f64>> {
    let (tangent, _) = curve_derivatives(&dual.points, step);
    dual.points
        .iter()
        .zip(&tangent)
        .map(|(x, t)| {
            let cross = [
                x[1] * t[2] - x[2] * t[1],
                x[2] * t[0] - x[0] * t[2],
                x[0] * t[1] - x[1] * t[0],
            ];
            // lower the index: w = J (x × t), J = diag(-1, 1, 1)
            let mut w = vec![0.0; x.len()];
            w[0] = -cross[0];
            w[1] = cross[1];
            w[2] = cross[2];
            let norm = minkowski(&w, &w).sqrt();
            let sign = if w[0] < 0.0 { -1.0 } else { 1.0 };
            w.iter().map(|c| sign * c / norm).collect()
        })
        .collect()
}

/// Natural cubic spline through `(xs, ys)`; `xs` strictly increasing.
#[derive(Debug, Clone)]
struct CubicSpline {
    xs: Vec<f64>,
    ys: Vec<f64>,
    moments: Vec<f64>,
}

impl CubicSpline {
    fn new(xs: Vec<f64>, ys: Vec<f64>) -> Self {
        let m = xs.len();
        let mut moments = vec![0.0; m];
        if m > 2 {
            // tridiagonal system for the second derivatives (Thomas algorithm)
            let mut diag = vec![0.0; m];
            let mut rhs = vec![0.0; m];
            let mut upper = vec![0.0; m];
            for i in 1..m - 1 {
                let (hl, hr) = (xs[i] - xs[i - 1], xs[i + 1] - xs[i]);
                let lower = hl / 6.0;
                diag[i] = (hl + hr) / 3.0;
                upper[i] = hr / 6.0;
                rhs[i] = (ys[i + 1] - ys[i]) / hr - (ys[i] - ys[i - 1]) / hl;
                if i > 1 {
                    let w = lower / diag[i - 1];
                    diag[i] -= w * upper[i - 1];
                    rhs[i] -= w * rhs[i - 1];
                }
            }
            for i in (1..m - 1).rev() {
                let next = if i + 1 < m - 1 { moments[i + 1] } else { 0.0 };
                moments[i] = (rhs[i] - upper[i] * next) / diag[i];
            }
        }
        Self { xs, ys, moments }
    }

    fn eval(&self, x: f64) -> f64 {
        let k = match self.xs.partition_point(|&p| p <= x) {
            0 => 0,
            j if j >= self.xs.len() => self.xs.len() - 2,
            j => j - 1,
        };
        let h = self.xs[k + 1] - self.xs[k];
        let a = (self.xs[k + 1] - x) / h;
        let b = (x - self.xs[k]) / h;
        a * self.ys[k]
            + b * self.ys[k + 1]
            + ((a * a * a - a) * self.moments[k] + (b * b * b - b) * self.moments[k + 1]) * h * h
                / 6.0
    }
}

/// Spline of an axisymmetric function of the polar angle, mirrored evenly
/// across both poles so that the interpolant has zero slope there.
fn mirrored_spline(angle: &[f64], values: &[f64]) -> CubicSpline {
    let pi = std::f64::consts::PI;
    let last = angle.len() - 1;
    let mut xs = Vec::with_capacity(3 * angle.len());
    let mut ys = Vec::with_capacity(3 * angle.len());
    for i in (1..=last).rev() {
        xs.push(-angle[i]);
        ys.push(values[i]);
    }
    xs.extend_from_slice(angle);
    ys.extend_from_slice(values);
    for i in (0..last).rev() {
        xs.push(2.0 * pi - angle[i]);
        ys.push(values[i]);
    }
    CubicSpline::new(xs, ys)
}

/// Dual curvatures from the hyperbolic graph `r̃ = ρ̃(ψ̃)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DualGraphCurvatures {
    /// Uniform dual angles.
    pub angle: Vec<f64>,
    pub kappa_rad: Vec<f64>,
    pub kappa_ang: Vec<f64>,
    /// Angular curvature mapped back to the original nodes.
    pub kappa_ang_at_nodes: Vec<f64>,
    /// Radial curvature mapped back to the original nodes.
    pub kappa_rad_at_nodes: Vec<f64>,
}

/// Resamples `r̃(ψ̃)` onto a uniform grid and evaluates the principal
/// curvatures of the starshaped graph
///
/// `κ̃_rad = (-ϑ̃ρ̃'' + ϑ̃²ϑ̃' + 2ϑ̃'ρ̃'²) / (ϑ̃³ṽ³)`,
/// `κ̃_ang = (ϑ̃' - ρ̃' cot ψ̃ / ϑ̃) / (ϑ̃ṽ)`, `ṽ² = 1 + ρ̃'²/ϑ̃²`.
pub fn dual_graph_curvatures(model: &WarpModel, dual: &DualCurve) -> Result<DualGraphCurvatures> {
    let hyp = model.dual();
    let angle = &dual.angle;
    if let Some(i) = angle.windows(2).position(|w| !(w[1] > w[0])) {
        return Err(Error::Domain(format!(
            "dual angle is not strictly increasing at node {}",
            i + 1
        )));
    }
    let last = angle.len() - 1;
    let step = std::f64::consts::PI / last as f64;
    let spline = mirrored_spline(angle, &dual.radius);
    let uniform: Vec<f64> = (0..=last).map(|i| i as f64 * step).collect();
    let radius: Vec<f64> = uniform.iter().map(|&x| spline.eval(x)).collect();
    let (d1, d2) = crate::axigraph::even_derivatives(&radius, step);
    let mut kappa_rad = Vec::with_capacity(radius.len());
    let mut kappa_ang = Vec::with_capacity(radius.len());
    for i in 0..=last {
        let (th, dth) = (hyp.warp(radius[i]), hyp.warp_derivative(radius[i]));
        let v = (1.0 + d1[i] * d1[i] / (th * th)).sqrt();
        kappa_rad.push(
            (-th * d2[i] + th * th * dth + 2.0 * dth * d1[i] * d1[i]) / (th * th * th * v * v * v),
        );
        let cot_term = if i == 0 || i == last {
            d2[i]
        } else {
            d1[i] * uniform[i].cos() / uniform[i].sin()
        };
        kappa_ang.push((dth - cot_term / th) / (th * v));
    }
    let back_ang = mirrored_spline(&uniform, &kappa_ang);
    let back_rad = mirrored_spline(&uniform, &kappa_rad);
    Ok(DualGraphCurvatures {
        kappa_ang_at_nodes: angle.iter().map(|&x| back_ang.eval(x)).collect(),
        kappa_rad_at_nodes: angle.iter().map(|&x| back_rad.eval(x)).collect(),
        angle: uniform,
        kappa_rad,
        kappa_ang,
    })
}

/// Largest violation of each duality identity on one profile.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DualReport {
    /// `max |⟨x̃, x̃⟩ + 1|`.
    pub hyperboloid: f64,
    /// `max |⟨x̃, y⟩|`.
    pub orthogonality: f64,
    /// `max |u - ϑ̃'(r̃)|`.
    pub support: f64,
    /// `max |ũ - ϑ'(ρ)|`.
    pub dual_support: f64,
    /// `max |⟨∂ψx̃, ∂ψx̃⟩ - κ_rad² g_ψψ|`.
    pub metric: f64,
    /// `max |dual_speed_identity|`.
    pub speed_identity: f64,
    /// `max |κ̃_rad κ_rad - 1|` from the ambient second derivative.
    pub radial_product: f64,
    /// `max |κ̃_ang κ_ang - 1|` from the resampled hyperbolic graph.
    pub angular_product: f64,
    /// `max |ν̃ - y|` over all components, `ν̃` rebuilt from `x̃` alone.
    pub involution: f64,
}

fn max_abs(values: impl IntoIterator<Item = f64>) -> f64 {
    values.into_iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Runs every duality identity on a strictly convex profile.
pub fn dual_check(profile: &RadialProfile) -> Result<DualReport> {
    let fr = frame(profile)?;
    let step = profile.step();
    let curve = embed(profile, &fr)?;
    let dual = dualize(&curve, &fr, step)?;
    let model = profile.model();
    let hyp = model.dual();
    let rho = profile.rho();
    let len = fr.len();

    let identity = dual_speed_identity(profile, &fr, &dual)?;
    let radial = dual_radial_curvature(&curve, &dual, step);
    let graph = dual_graph_curvatures(model, &dual)?;
    let rebuilt = dual_normal(&dual, step);

    Ok(DualReport {
        hyperboloid: max_abs(dual.points.iter().map(|x| minkowski(x, x) + 1.0)),
        orthogonality: max_abs(dual.points.iter().zip(&curve.points).map(|(x, y)| minkowski(x, y))),
        support: max_abs((0..len).map(|i| fr.u[i] - hyp.warp_derivative(dual.radius[i]))),
        dual_support: max_abs((0..len).map(|i| dual.support[i] - model.warp_derivative(rho[i]))),
        metric: max_abs((0..len).map(|i| {
            let g = model.warp(rho[i]).powi(2) * fr.v[i] * fr.v[i];
            dual.metric[i] - fr.kappa_rad[i] * fr.kappa_rad[i] * g
        })),
        speed_identity: max_abs(identity),
        radial_product: max_abs((0..len).map(|i| radial[i] * fr.kappa_rad[i] - 1.0)),
        angular_product: max_abs(
            (0..len).map(|i| graph.kappa_ang_at_nodes[i] * fr.kappa_ang[i] - 1.0),
        ),
        involution: max_abs(
            rebuilt
                .iter()
                .zip(&curve.points)
                .flat_map(|(a, b)| a.iter().zip(b).map(|(p, q)| p - q).collect::<Vec<_>>()),
        ),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn ds(n: usize) -> WarpModel {
        WarpModel::de_sitter(n).unwrap()
    }

    #[test]
    fn slice_embedding_is_closed_form() {
        let r: f64 = 0.9;
        let p = RadialProfile::slice(ds(3), 40, r).unwrap();
        let f = frame(&p).unwrap();
        let c = embed(&p, &f).unwrap();
        for (i, &psi) in p.psi().iter().enumerate() {
            let y = &c.points[i];
            let nu = &c.normals[i];
            assert_eq!(y.len(), 5);
            assert_relative_eq!(y[0], r.sinh(), max_relative = 1e-15);
            assert_relative_eq!(y[1], r.cosh() * psi.cos(), epsilon = 1e-15);
            assert_relative_eq!(nu[0], r.cosh(), max_relative = 1e-15);
            assert_relative_eq!(nu[2], r.sinh() * psi.sin(), epsilon = 1e-15);
            assert_eq!(&y[3..], &[0.0, 0.0]);
            assert!((minkowski(y, y) - 1.0).abs() < 1e-14);
            assert!((minkowski(nu, nu) + 1.0).abs() < 1e-14);
            assert!(minkowski(nu, y).abs() < 1e-14);
        }
    }

    #[test]
    fn ambient_height_and_support() {
        let p = RadialProfile::legendre(ds(2), 100, 1.0, 0.05, 2).unwrap();
        let f = frame(&p).unwrap();
        let c = embed(&p, &f).unwrap();
        let e = [1.0, 0.0, 0.0, 0.0];
        for i in 0..f.len() {
            let y = &c.points[i];
            assert_relative_eq!(-minkowski(y, &e), p.rho()[i].sinh(), max_relative = 1e-14);
            // ϑ∂r = e - ⟨e, y⟩y
            let ey = minkowski(&e, y);
            let field: Vec<f64> = e.iter().zip(y).map(|(a, b)| a - ey * b).collect();
            assert!((-minkowski(&field, &c.normals[i]) - f.u[i]).abs() < 1e-8);
        }
    }

    #[test]
    fn slice_dual_is_geodesic_sphere() {
        for r in [0.4, 1.0, 2.0] {
            let p = RadialProfile::slice(ds(2), 64, r).unwrap();
            let report = dual_check(&p).unwrap();
            assert!(report.hyperboloid < 1e-13);
            assert!(report.speed_identity < 1e-12);
            let f = frame(&p).unwrap();
            let c = embed(&p, &f).unwrap();
            let d = dualize(&c, &f, p.step()).unwrap();
            for &rt in &d.radius {
                assert_relative_eq!(rt, r, max_relative = 1e-12);
            }
            let g = dual_graph_curvatures(p.model(), &d).unwrap();
            for &k in &g.kappa_ang {
                assert_relative_eq!(k, 1.0 / r.tanh(), max_relative = 1e-9);
            }
        }
    }

    #[test]
    fn convexity_gate_rejects_flat_profiles() {
        let p = RadialProfile::slice(ds(2), 32, 1e-8).unwrap();
        let f = frame(&p).unwrap();
        let c = embed(&p, &f).unwrap();
        assert!(matches!(
            dualize(&c, &f, p.step()),
            Err(Error::NotConvex { .. })
        ));
    }

    #[test]
    fn speed_identity_holds_across_dimensions() {
        for n in [2, 3, 5] {
            let p = RadialProfile::legendre(ds(n), 120, 1.0, 0.05, 2).unwrap();
            let report = dual_check(&p).unwrap();
            assert!(report.speed_identity < 1e-10, "n = {n}: {report:?}");
            assert!(report.orthogonality < 1e-12);
        }
    }

    #[test]
    fn spline_reproduces_cubics() {
        let xs: Vec<f64> = (0..20).map(|i| 0.1 * i as f64 + 0.01 * (i * i) as f64).collect();
        let ys: Vec<f64> = xs.iter().map(|x| x.sin()).collect();
        let s = CubicSpline::new(xs.clone(), ys);
        for &x in &[0.35, 1.0, 2.2] {
            assert!((s.eval(x) - f64::sin(x)).abs() < 1e-4);
        }
        assert_eq!(s.eval(xs[5]), xs[5].sin());
    }
}
