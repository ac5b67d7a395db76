//! Global integrals of a profile: area, enclosed volume, total mean
//! curvature, `W2 = ∫H1 - vol`, the Minkowski identities
//! `∫ϑ'H_{k-1} = ∫uH_k` and the Minkowski-inequality gap.

use serde::{Deserialize, Serialize};

use crate::axigraph::{GeometryFrame, RadialProfile};
use crate::error::Result;
use crate::spaceform::{phi_of_area, sphere_measure, volume_density, WarpModel};

/// Node spacing of the cached volume table.
pub const VOLUME_TABLE_SPACING: f64 = 1e-3;

/// One time sample of the global functionals. Field order is the CSV
/// column order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FunctionalRecord {
    pub t: f64,
    pub min_rho: f64,
    pub max_rho: f64,
    pub area: f64,
    pub volume: f64,
    #[serde(rename = "total_H1")]
    pub total_h1: f64,
    #[serde(rename = "W2")]
    pub w2: f64,
    #[serde(rename = "dW2_predicted")]
    pub dw2_predicted: f64,
    #[serde(rename = "min_H1")]
    pub min_h1: f64,
    #[serde(rename = "max_H1")]
    pub max_h1: f64,
    pub max_ring2: f64,
    pub min_v2: f64,
    pub mink1_residual: f64,
    pub mink2_residual: f64,
}

/// Column names of a trace CSV, in order.
pub const RECORD_COLUMNS: [&str; 14] = [
    "t",
    "min_rho",
    "max_rho",
    "area",
    "volume",
    "total_H1",
    "W2",
    "dW2_predicted",
    "min_H1",
    "max_H1",
    "max_ring2",
    "min_v2",
    "mink1_residual",
    "mink2_residual",
];

/// `∫_Σ f dμ` by the product trapezoid rule against `sin^{n-1}ψ`.
pub fn surface_integral(profile: &RadialProfile, frame: &GeometryFrame, integrand: &[f64]) -> f64 {
    let model = profile.model();
    let n = model.dim() as i32;
    let weights = profile.grid().weights();
    let sum: f64 = profile
        .rho()
        .iter()
        .zip(weights)
        .zip(integrand)
        .zip(&frame.v)
        .map(|(((&r, &w), &f), &v)| w * f * model.warp(r).powi(n) * v)
        .sum();
    sphere_measure(model.dim() - 1) * sum
}

/// Cubic Hermite table of `V(r) = ∫_0^r ϑⁿ`, using the exact slope `ϑⁿ`
/// at every node. Values outside the tabulated range fall back to direct
/// quadrature.
#[derive(Debug, Clone)]
pub struct VolumeTable {
    model: WarpModel,
    start: f64,
    spacing: f64,
    values: Vec<f64>,
    slopes: Vec<f64>,
}

impl VolumeTable {
    /// Tabulates `[lo - margin, hi + margin]` (clipped at zero).
    pub fn new(model: WarpModel, lo: f64, hi: f64, margin: f64) -> Self {
        let start = (lo - margin).max(0.0);
        let end = hi + margin;
        let count = (((end - start) / VOLUME_TABLE_SPACING).ceil() as usize).max(1);
        let spacing = (end - start) / count as f64;
        let n = model.dim() as i32;
        let mut values = Vec::with_capacity(count + 1);
        let mut acc = volume_density(&model, start);
        values.push(acc);
        for k in 0..count {
            let a = start + k as f64 * spacing;
            acc += crate::quadrature::integrate_adaptive(
                |s| model.warp(s).powi(n),
                a,
                a + spacing,
                1e-14,
                1e-17,
            );
            values.push(acc);
        }
        let slopes = (0..=count)
            .map(|k| model.warp(start + k as f64 * spacing).powi(n))
            .collect();
        Self {
            model,
            start,
            spacing,
            values,
            slopes,
        }
    }

    /// Table covering the radial range of a profile with a 0.05 margin.
    pub fn for_profile(profile: &RadialProfile) -> Self {
        Self::new(*profile.model(), profile.min_rho(), profile.max_rho(), 0.05)
    }

    pub fn contains(&self, r: f64) -> bool {
        r >= self.start && r <= self.start + self.spacing * (self.values.len() - 1) as f64
    }

    pub fn eval(&self, r: f64) -> f64 {
        if !self.contains(r) {
            return volume_density(&self.model, r);
        }
        let x = (r - self.start) / self.spacing;
        let k = (x.floor() as usize).min(self.values.len() - 2);
        let s = x - k as f64;
        let h = self.spacing;
        let (s2, s3) = (s * s, s * s * s);
        let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
        let h10 = s3 - 2.0 * s2 + s;
        let h01 = -2.0 * s3 + 3.0 * s2;
        let h11 = s3 - s2;
        h00 * self.values[k]
            + h10 * h * self.slopes[k]
            + h01 * self.values[k + 1]
            + h11 * h * self.slopes[k + 1]
    }
}

fn volume_from(profile: &RadialProfile, density: impl Fn(f64) -> f64) -> f64 {
    let model = profile.model();
    let sum: f64 = profile
        .rho()
        .iter()
        .zip(profile.grid().weights())
        .map(|(&r, &w)| w * density(r))
        .sum();
    sphere_measure(model.dim() - 1) * sum
}

/// Volume between the equator `{r = 0}` and the graph, by direct quadrature
/// of `∫_0^ρ ϑⁿ` at every node.
pub fn enclosed_volume(profile: &RadialProfile) -> f64 {
    let model = *profile.model();
    volume_from(profile, |r| volume_density(&model, r))
}

/// [`enclosed_volume`] through a cached table.
pub fn enclosed_volume_cached(profile: &RadialProfile, table: &VolumeTable) -> f64 {
    volume_from(profile, |r| table.eval(r))
}

fn relative_gap(lhs: f64, rhs: f64) -> f64 {
    if lhs == rhs {
        0.0
    } else {
        (lhs - rhs).abs() / rhs.abs()
    }
}

/// Relative residuals of the Minkowski identities for `k = 1, 2`.
pub fn minkowski_residuals(profile: &RadialProfile, frame: &GeometryFrame) -> (f64, f64) {
    let model = profile.model();
    let dth: Vec<f64> = profile.rho().iter().map(|&r| model.warp_derivative(r)).collect();
    let u_h1: Vec<f64> = frame.u.iter().zip(&frame.h1).map(|(a, b)| a * b).collect();
    let u_h2: Vec<f64> = frame.u.iter().zip(&frame.h2).map(|(a, b)| a * b).collect();
    let dth_h1: Vec<f64> = dth.iter().zip(&frame.h1).map(|(a, b)| a * b).collect();
    let k1 = relative_gap(
        surface_integral(profile, frame, &dth),
        surface_integral(profile, frame, &u_h1),
    );
    let k2 = relative_gap(
        surface_integral(profile, frame, &dth_h1),
        surface_integral(profile, frame, &u_h2),
    );
    (k1, k2)
}

/// `(n-1) ∫ ϑ' (H1² - H2) / H1`, the rate of `W2` along the flow.
///
/// With the normalized `H2`, `H1² - H2 = |Å|² / (n(n-1))` where
/// `|Å|² = |A|² - nH1²`.
pub fn predicted_w2_rate(profile: &RadialProfile, frame: &GeometryFrame) -> f64 {
    let model = profile.model();
    let integrand: Vec<f64> = profile
        .rho()
        .iter()
        .enumerate()
        .map(|(i, &r)| {
            let h1 = frame.h1[i];
            model.warp_derivative(r) * (h1 * h1 - frame.h2[i]) / h1
        })
        .collect();
    (model.dim() as f64 - 1.0) * surface_integral(profile, frame, &integrand)
}

fn build_record(
    profile: &RadialProfile,
    frame: &GeometryFrame,
    t: f64,
    volume: f64,
) -> FunctionalRecord {
    let area = surface_integral(profile, frame, &vec![1.0; frame.len()]);
    let total_h1 = surface_integral(profile, frame, &frame.h1);
    let (mink1_residual, mink2_residual) = minkowski_residuals(profile, frame);
    FunctionalRecord {
        t,
        min_rho: profile.min_rho(),
        max_rho: profile.max_rho(),
        area,
        volume,
        total_h1,
        w2: total_h1 - volume,
        dw2_predicted: predicted_w2_rate(profile, frame),
        min_h1: frame.min_h1,
        max_h1: frame.max_h1,
        max_ring2: frame.max_ring2,
        min_v2: frame.min_v2,
        mink1_residual,
        mink2_residual,
    }
}

/// All functionals of one snapshot.
pub fn record(profile: &RadialProfile, frame: &GeometryFrame, t: f64) -> FunctionalRecord {
    build_record(profile, frame, t, enclosed_volume(profile))
}

/// [`record`] with the enclosed volume taken from a cached table.
pub fn record_cached(
    profile: &RadialProfile,
    frame: &GeometryFrame,
    t: f64,
    table: &VolumeTable,
) -> FunctionalRecord {
    build_record(profile, frame, t, enclosed_volume_cached(profile, table))
}

/// `φ(|Σ|) - W2(Σ)`; nonnegative for spacelike mean-convex surfaces and
/// zero exactly on umbilic ones.
pub fn minkowski_gap(model: &WarpModel, record: &FunctionalRecord) -> Result<f64> {
    Ok(phi_of_area(model, record.area)? - record.w2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::axigraph::frame;
    use crate::spaceform::slice_data;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn ds(n: usize) -> WarpModel {
        WarpModel::de_sitter(n).unwrap()
    }

    #[test]
    fn slice_area_matches_closed_form() {
        let p = RadialProfile::slice(ds(2), 400, 1.0).unwrap();
        let f = frame(&p).unwrap();
        let area = surface_integral(&p, &f, &vec![1.0; f.len()]);
        assert_relative_eq!(area, 4.0 * PI * 1f64.cosh().powi(2), max_relative = 1e-12);
        assert_eq!(surface_integral(&p, &f, &vec![0.0; f.len()]), 0.0);
    }

    #[test]
    fn slice_volume_and_w2() {
        for n in [2, 3, 5] {
            for r in [0.3, 1.0, 2.0] {
                let p = RadialProfile::slice(ds(n), 400, r).unwrap();
                let f = frame(&p).unwrap();
                let s = slice_data(&ds(n), r).unwrap();
                let rec = record(&p, &f, 0.0);
                assert_relative_eq!(rec.volume, s.volume, max_relative = 1e-12);
                assert_relative_eq!(rec.w2, s.w2, max_relative = 1e-10);
                assert_eq!(rec.mink1_residual, 0.0f64.max(rec.mink1_residual));
                assert!(rec.mink1_residual < 1e-14 && rec.mink2_residual < 1e-14);
                assert!(minkowski_gap(&ds(n), &rec).unwrap().abs() < 1e-8);
            }
        }
    }

    #[test]
    fn volume_vanishes_toward_equator() {
        let p = RadialProfile::slice(ds(2), 64, 1e-6).unwrap();
        assert!(enclosed_volume(&p) < 2e-5);
    }

    #[test]
    fn volume_is_monotone_in_profile() {
        let a = RadialProfile::legendre(ds(2), 64, 1.0, 0.1, 2).unwrap();
        let b = a.with_rho(a.rho().iter().map(|r| r + 0.01).collect()).unwrap();
        assert!(enclosed_volume(&a) < enclosed_volume(&b));
    }

    #[test]
    fn cached_volume_agrees_with_quadrature() {
        let p = RadialProfile::legendre(ds(3), 128, 1.0, 0.15, 2).unwrap();
        let table = VolumeTable::for_profile(&p);
        let direct = enclosed_volume(&p);
        let cached = enclosed_volume_cached(&p, &table);
        assert_relative_eq!(direct, cached, max_relative = 1e-12);
        for &r in &[0.9, 1.0001, 1.1234] {
            assert_relative_eq!(table.eval(r), volume_density(&ds(3), r), max_relative = 1e-12);
        }
    }

    #[test]
    fn perturbed_slice_minkowski_residuals_small() {
        let p = RadialProfile::legendre(ds(2), 400, 1.0, 0.1, 2).unwrap();
        let f = frame(&p).unwrap();
        let (k1, k2) = minkowski_residuals(&p, &f);
        assert!(k1 < 1e-5 && k2 < 1e-5, "{k1} {k2}");
    }

    #[test]
    fn w2_rate_matches_trace_free_norm() {
        let p = RadialProfile::legendre(ds(3), 100, 0.8, 0.1, 4).unwrap();
        let f = frame(&p).unwrap();
        let model = ds(3);
        let integrand: Vec<f64> = (0..f.len())
            .map(|i| model.warp_derivative(p.rho()[i]) * f.ring2[i] / f.h1[i])
            .collect();
        let via_ring = surface_integral(&p, &f, &integrand) / 3.0;
        assert_relative_eq!(predicted_w2_rate(&p, &f), via_ring, max_relative = 1e-10);
    }

    #[test]
    fn w2_rate_is_nonnegative() {
        let p = RadialProfile::legendre(ds(3), 100, 0.8, 0.1, 4).unwrap();
        let f = frame(&p).unwrap();
        assert!(predicted_w2_rate(&p, &f) > 0.0);
    }

    #[test]
    fn gap_requires_area_above_equator() {
        let rec = FunctionalRecord {
            t: 0.0,
            min_rho: 0.0,
            max_rho: 0.0,
            area: 4.0,
            volume: 0.0,
            total_h1: 0.0,
            w2: 0.0,
            dw2_predicted: 0.0,
            min_h1: 0.0,
            max_h1: 0.0,
            max_ring2: 0.0,
            min_v2: 1.0,
            mink1_residual: 0.0,
            mink2_residual: 0.0,
        };
        assert!(minkowski_gap(&ds(2), &rec).is_err());
    }
}
