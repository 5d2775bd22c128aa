//! Closed-form equivalent Fisher information matrices (EFIMs) for array localization.

use std::f64::consts::PI;
use std::fmt;

use nalgebra::DMatrix;

use crate::array::saaf;
use crate::error::{Error, Result};
use crate::linalg::{is_singular, outer, pinv_sym, sym_eigenvalues};
use crate::model::{anchor_range_bearing, AgentMotion, Position2D, Scenario};
use crate::signal::{spectral_derivative, ComplexSampleSeries};

pub const SINGULAR_RTOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Param {
    X,
    Y,
    Orientation,
    Direction,
    Speed,
}

impl fmt::Display for Param {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Param::X => "x",
            Param::Y => "y",
            Param::Orientation => "psi",
            Param::Direction => "psi_d",
            Param::Speed => "v",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EfimResult {
    pub matrix: DMatrix<f64>,
    pub labels: Vec<Param>,
    pub source: &'static str,
}

impl EfimResult {
    fn new(matrix: DMatrix<f64>, labels: &[Param], source: &'static str) -> Self {
        Self {
            matrix,
            labels: labels.to_vec(),
            source,
        }
    }

    pub fn speb(&self) -> SpebValue {
        let n = self
            .labels
            .iter()
            .take_while(|p| matches!(p, Param::X | Param::Y))
            .count();
        if n == self.labels.len() {
            speb(&self.matrix)
        } else {
            match schur_complement(&self.matrix, &[0, 1]) {
                Ok(s) if !s.pinv_used => speb(&s.matrix),
                _ => SpebValue {
                    value: f64::INFINITY,
                    singular: true,
                },
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        self.matrix.iter().all(|v| *v == 0.0)
    }
}

const POS: [Param; 2] = [Param::X, Param::Y];

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpebValue {
    pub value: f64,
    pub singular: bool,
}

impl SpebValue {
    pub fn root(&self) -> f64 {
        self.value.sqrt()
    }
}

/// Ranging direction matrix `J_r(phi) = q q^T`, `q = [cos phi, sin phi]`.
pub fn rdm(phi: f64) -> DMatrix<f64> {
    let (s, c) = phi.sin_cos();
    outer(&[c, s])
}

pub fn visual_angle(
    offset: f64,
    offset_angle: f64,
    bearing: f64,
    orientation: f64,
    range: f64,
) -> f64 {
    offset * (bearing - orientation - offset_angle).sin() / range
}

/// Ranging intensity `8 pi^2 SNR (1 - chi) / c^2`.
pub fn intensity(snr: f64, poc: f64, c: f64) -> f64 {
    8.0 * PI * PI * snr * (1.0 - poc) / (c * c)
}

/// Per-anchor quantities for the LOS anchors; NLOS anchors carry no position information.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AnchorGeometry {
    pub range: f64,
    pub bearing: f64,
    pub lambda: f64,
}

pub fn anchor_geometry(s: &Scenario, reference: &Position2D) -> Result<Vec<AnchorGeometry>> {
    let mut out = Vec::with_capacity(s.anchors.len());
    for a in &s.anchors {
        let (range, bearing) = anchor_range_bearing(reference, &a.position)?;
        if a.los {
            out.push(AnchorGeometry {
                range,
                bearing,
                lambda: intensity(a.snr, a.poc, s.c),
            });
        }
    }
    Ok(out)
}

fn visual_angles(s: &Scenario, g: &AnchorGeometry) -> Vec<f64> {
    s.array
        .offsets
        .iter()
        .map(|&(d, a)| visual_angle(d, a, g.bearing, s.pose.orientation, g.range))
        .collect()
}

/// Full-knowledge static EFIM (phase and orientation known).
pub fn efim_static_full(s: &Scenario) -> Result<EfimResult> {
    let sig = &s.signal;
    let w =
        sig.beta * sig.beta + sig.carrier * sig.carrier + 2.0 * sig.bcc * sig.beta * sig.carrier;
    let mut j = DMatrix::zeros(2, 2);
    for g in anchor_geometry(s, &s.pose.reference)? {
        for th in visual_angles(s, &g) {
            j += rdm(g.bearing + th) * (g.lambda * w);
        }
    }
    Ok(EfimResult::new(j, &POS, "static_full"))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StaticMode {
    /// Pairwise visual-angle form, keeps the per-element ranging directions.
    Exact,
    /// Far-field form in terms of the SAAF.
    FarField,
    /// Per-element form with the array centroid as reference point.
    Centered,
}

/// Static EFIM for the position with unknown phase and known orientation.
pub fn efim_static_orient_known(s: &Scenario, mode: StaticMode) -> Result<EfimResult> {
    let (b, f) = s.signal.recentred();
    let (b2, f2) = (b * b, f * f);
    let na = s.array.len() as f64;
    let mut j = DMatrix::zeros(2, 2);
    match mode {
        StaticMode::Exact => {
            for g in anchor_geometry(s, &s.pose.reference)? {
                let th = visual_angles(s, &g);
                let mut pair = 0.0;
                for k in 0..th.len() {
                    j += rdm(g.bearing + th[k]) * (g.lambda * b2);
                    for l in k + 1..th.len() {
                        pair += (th[k] - th[l]).powi(2);
                    }
                }
                j += rdm(g.bearing + PI / 2.0) * (g.lambda * f2 * pair / na);
            }
            Ok(EfimResult::new(j, &POS, "static_exact"))
        }
        StaticMode::FarField => {
            for g in anchor_geometry(s, &s.pose.reference)? {
                let gs = saaf(&s.array, g.bearing - s.pose.orientation);
                j += rdm(g.bearing) * (g.lambda * na * b2);
                j += rdm(g.bearing + PI / 2.0) * (g.lambda * na * f2 * gs / (g.range * g.range));
            }
            Ok(EfimResult::new(j, &POS, "static_far_field"))
        }
        StaticMode::Centered => {
            let (cs, _) = centroid_scenario(s);
            for g in anchor_geometry(&cs, &cs.pose.reference)? {
                for th in visual_angles(&cs, &g) {
                    j += rdm(g.bearing) * (g.lambda * b2);
                    j += rdm(g.bearing + PI / 2.0) * (g.lambda * f2 * th * th);
                }
            }
            Ok(EfimResult::new(j, &POS, "static_centered"))
        }
    }
}

/// The same scenario with the element centroid as reference point; also returns that point.
pub fn centroid_scenario(s: &Scenario) -> (Scenario, Position2D) {
    let pts = s.array.body_coords();
    let n = pts.len() as f64;
    let cx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let cy = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let (so, co) = s.pose.orientation.sin_cos();
    let p = Position2D::new(
        s.pose.reference.x + co * cx - so * cy,
        s.pose.reference.y + so * cx + co * cy,
    );
    let mut out = s.clone();
    out.array = s.array.centered();
    out.pose.reference = p;
    (out, p)
}

/// Static EFIM with unknown orientation: `{x, y, psi}` block and the position EFIM.
pub fn efim_static_orient_unknown(s: &Scenario) -> Result<(EfimResult, EfimResult)> {
    let (b, f) = s.signal.recentred();
    let (b2, f2) = (b * b, f * f);
    let na = s.array.len() as f64;
    let geo = anchor_geometry(s, &s.pose.reference)?;
    let mut j3 = DMatrix::zeros(3, 3);
    for g in &geo {
        for th in visual_angles(s, g) {
            let a = g.bearing + th;
            j3 += outer(&[a.cos(), a.sin(), -g.range * th]) * (g.lambda * b2);
        }
        let gs = saaf(&s.array, g.bearing - s.pose.orientation);
        let (sn, cs) = g.bearing.sin_cos();
        j3 += outer(&[-sn, cs, -g.range]) * (g.lambda * na * f2 * gs / (g.range * g.range));
    }

    let mut j2 = DMatrix::zeros(2, 2);
    let mut weights = Vec::with_capacity(geo.len());
    for g in &geo {
        let gs = saaf(&s.array, g.bearing - s.pose.orientation);
        j2 += rdm(g.bearing) * (na * g.lambda * b2);
        weights.push((g.lambda * gs, q2(g.bearing) / g.range));
    }
    let total: f64 = weights.iter().map(|w| w.0).sum();
    if total > 0.0 {
        j2 += pairwise_direction(&weights, total) * (na * f2);
    }
    Ok((
        EfimResult::new(
            j3,
            &[Param::X, Param::Y, Param::Orientation],
            "static_unknown_3x3",
        ),
        EfimResult::new(j2, &POS, "static_unknown_2x2"),
    ))
}

fn q2(phi: f64) -> nalgebra::Vector2<f64> {
    nalgebra::Vector2::new(-phi.sin(), phi.cos())
}

/// `1/2 sum_{i,j} w_i w_j / total * g(x_i - x_j)`.
fn pairwise_direction(items: &[(f64, nalgebra::Vector2<f64>)], total: f64) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(2, 2);
    for (wi, xi) in items {
        for (wj, xj) in items {
            let d = xi - xj;
            m += outer(&[d.x, d.y]) * (0.5 * wi * wj / total);
        }
    }
    m
}

#[derive(Clone, Copy, Debug)]
pub enum DynamicMode<'a> {
    /// Narrowband, balanced-phase approximation.
    Approx,
    /// Exact `A1, A2, A3` coefficients from the sampled pulse.
    ExactCoeffs(&'a ComplexSampleSeries),
}

fn motion_of(s: &Scenario) -> Result<AgentMotion> {
    s.motion
        .ok_or_else(|| Error::Unsupported("dynamic EFIM needs agent motion".into()))
}

fn trms_of(s: &Scenario) -> Result<f64> {
    s.signal
        .trms
        .ok_or_else(|| Error::Unsupported("dynamic EFIM needs t_rms".into()))
}

/// Doppler quantities of one anchor: `delta = v_r cos(phi - psi_d)` and `omega = v sin(psi_d - phi) / D`.
pub fn doppler_terms(g: &AnchorGeometry, m: &AgentMotion, c: f64) -> (f64, f64) {
    let delta = m.speed / c * (g.bearing - m.direction).cos();
    let omega = m.speed * (m.direction - g.bearing).sin() / g.range;
    (delta, omega)
}

/// Dynamic EFIM for the position with known orientation and velocity.
pub fn efim_dynamic_known(s: &Scenario, mode: DynamicMode<'_>) -> Result<EfimResult> {
    let m = motion_of(s)?;
    let na = s.array.len() as f64;
    let mut j = DMatrix::zeros(2, 2);
    match mode {
        DynamicMode::Approx => {
            let t = trms_of(s)?;
            let (b, f) = s.signal.recentred();
            for g in anchor_geometry(s, &s.pose.reference)? {
                let (delta, omega) = doppler_terms(&g, &m, s.c);
                let gs = saaf(&s.array, g.bearing - s.pose.orientation);
                let lam = g.lambda * na / (1.0 - delta);
                j += rdm(g.bearing) * (lam * b * b);
                j += rdm(g.bearing + PI / 2.0)
                    * (lam * f * f * (gs / (g.range * g.range) + omega * omega * t * t));
            }
            Ok(EfimResult::new(j, &POS, "dyn_approx"))
        }
        DynamicMode::ExactCoeffs(series) => {
            let mom = PulseMoments::new(series, s.signal.carrier, m.reference_time);
            for g in anchor_geometry(s, &s.pose.reference)? {
                let (delta, omega) = doppler_terms(&g, &m, s.c);
                let th = visual_angles(s, &g);
                let (a1, a2, a3) = mom.coefficients(&th, omega);
                let scale = g.lambda / (4.0 * PI * PI * mom.energy * (1.0 - delta));
                let (q1, qq) = (g.bearing, g.bearing + PI / 2.0);
                let (sn, cs) = g.bearing.sin_cos();
                let cross = outer(&[cs - sn, sn + cs]) * 0.5 - outer(&[cs + sn, sn - cs]) * 0.5;
                j += (rdm(q1) * a1 + rdm(qq) * a2 + cross * a3) * scale;
            }
            Ok(EfimResult::new(j, &POS, "dyn_exact"))
        }
    }
}

/// Integrals of the pulse needed by the exact dynamic coefficients, in signal time
/// measured from the reference time.
#[derive(Clone, Copy, Debug)]
pub struct PulseMoments {
    pub energy: f64,
    /// `int |h|^2 u^n`, `h = s0' + j 2 pi f_c s0`.
    pub h2: [f64; 3],
    /// `int m u^n`, `m = Im{s0' s0*} + 2 pi f_c |s0|^2`.
    pub m: [f64; 2],
    /// `int Re{s0' s0*} u`.
    pub r1: f64,
}

impl PulseMoments {
    pub fn new(series: &ComplexSampleSeries, carrier: f64, reference_time: f64) -> Self {
        let len = (4 * series.samples.len()).next_power_of_two();
        let ds = spectral_derivative(series, len);
        let dt = series.dt();
        let w = 2.0 * PI * carrier;
        let mut out = PulseMoments {
            energy: 0.0,
            h2: [0.0; 3],
            m: [0.0; 2],
            r1: 0.0,
        };
        for (n, (s, d)) in series.samples.iter().zip(&ds).enumerate() {
            let u = series.time(n) - reference_time;
            let h = d + s * num_complex::Complex64::new(0.0, w);
            let h2 = h.norm_sqr();
            let prod = d * s.conj();
            let mm = prod.im + w * s.norm_sqr();
            out.energy += s.norm_sqr();
            out.h2[0] += h2;
            out.h2[1] += h2 * u;
            out.h2[2] += h2 * u * u;
            out.m[0] += mm;
            out.m[1] += mm * u;
            out.r1 += prod.re * u;
        }
        out.energy *= dt;
        out.h2.iter_mut().for_each(|v| *v *= dt);
        out.m.iter_mut().for_each(|v| *v *= dt);
        out.r1 *= dt;
        out
    }

    /// `(A1, A2, A3)` before the `lambda / (4 pi^2 E (1 - delta))` factor, with the element
    /// sensitivity `w_k(u) = theta_k - omega u`. The amplitude nuisance is eliminated too.
    pub fn coefficients(&self, theta: &[f64], omega: f64) -> (f64, f64, f64) {
        let na = theta.len() as f64;
        let e = self.energy;
        let [h0, h1, h2] = self.h2;
        let [m0, m1] = self.m;
        let sum_t: f64 = theta.iter().sum();
        let sum_t2: f64 = theta.iter().map(|t| t * t).sum();
        // sums over elements of int |h|^2 w_k^n and int m w_k
        let hw1 = sum_t * h0 - na * omega * h1;
        let hw2 = sum_t2 * h0 - 2.0 * omega * sum_t * h1 + na * omega * omega * h2;
        let mw = sum_t * m0 - na * omega * m1;
        let rw = -na * omega * self.r1;
        let a1 = na * (h0 - m0 * m0 / e);
        let a3 = hw1 - m0 * mw / e;
        let a2 = hw2 - mw * mw / (na * e) - rw * rw / (na * e);
        (a1, a2, a3)
    }
}

fn dyn_terms(
    s: &Scenario,
) -> Result<(AgentMotion, f64, f64, f64, Vec<(AnchorGeometry, f64, f64)>)> {
    let m = motion_of(s)?;
    let t = trms_of(s)?;
    let (b, f) = s.signal.recentred();
    let geo = anchor_geometry(s, &s.pose.reference)?
        .into_iter()
        .map(|g| {
            let (delta, omega) = doppler_terms(&g, &m, s.c);
            (
                AnchorGeometry {
                    lambda: g.lambda / (1.0 - delta),
                    ..g
                },
                delta,
                omega,
            )
        })
        .collect();
    Ok((m, t, b, f, geo))
}

/// Moving agent with known speed, unknown orientation and heading:
/// `{x, y, psi, psi_d}` block and the position EFIM.
pub fn efim_dynamic_orient_dir_unknown(s: &Scenario) -> Result<(EfimResult, EfimResult)> {
    let (m, t, b, f, geo) = dyn_terms(s)?;
    let na = s.array.len() as f64;
    let mut j4 = DMatrix::zeros(4, 4);
    for (g, _, omega) in &geo {
        let (sn, cs) = g.bearing.sin_cos();
        let gs = saaf(&s.array, g.bearing - s.pose.orientation);
        let d = g.range;
        j4 += outer(&[cs, sn, 0.0, 0.0]) * (na * g.lambda * b * b);
        j4 += outer(&[-sn, cs, -d, 0.0]) * (na * g.lambda * f * f * gs / (d * d));
        j4 += outer(&[-sn, cs, 0.0, -d]) * (na * g.lambda * f * f * omega * omega * t * t);
    }

    let mut j2 = DMatrix::zeros(2, 2);
    let mut aoa = Vec::new();
    let mut dop = Vec::new();
    for (g, _, _) in &geo {
        j2 += rdm(g.bearing) * (g.lambda * b * b);
        let x = q2(g.bearing) / g.range;
        aoa.push((g.lambda * saaf(&s.array, g.bearing - s.pose.orientation), x));
        let sd = (g.bearing - m.direction).sin();
        dop.push((g.lambda * sd * sd, x));
    }
    let ta: f64 = aoa.iter().map(|w| w.0).sum();
    let td: f64 = dop.iter().map(|w| w.0).sum();
    if ta > 0.0 {
        j2 += pairwise_direction(&aoa, ta) * (f * f);
    }
    if td > 0.0 {
        j2 += pairwise_direction(&dop, td) * (f * f * m.speed * m.speed * t * t);
    }
    j2 *= na;
    Ok((
        EfimResult::new(
            j4,
            &[Param::X, Param::Y, Param::Orientation, Param::Direction],
            "dyn_unknown_4x4",
        ),
        EfimResult::new(j2, &POS, "dyn_unknown_2x2"),
    ))
}

/// Moving agent with orientation, heading and speed all unknown: `{x, y, psi, psi_d, v}`.
/// The Doppler vector is stored premultiplied by `omega`, so radial motion stays finite.
pub fn efim_dynamic_all_unknown(s: &Scenario) -> Result<EfimResult> {
    let (m, t, b, f, geo) = dyn_terms(s)?;
    let na = s.array.len() as f64;
    let mut j5 = DMatrix::zeros(5, 5);
    for (g, _, omega) in &geo {
        let (sn, cs) = g.bearing.sin_cos();
        let gs = saaf(&s.array, g.bearing - s.pose.orientation);
        let d = g.range;
        let radial = (g.bearing - m.direction).cos();
        j5 += outer(&[cs, sn, 0.0, 0.0, 0.0]) * (na * g.lambda * b * b);
        j5 += outer(&[-sn, cs, -d, 0.0, 0.0]) * (na * g.lambda * f * f * gs / (d * d));
        j5 += outer(&[-omega * sn, omega * cs, 0.0, -omega * d, radial])
            * (na * g.lambda * f * f * t * t);
    }
    Ok(EfimResult::new(
        j5,
        &[
            Param::X,
            Param::Y,
            Param::Orientation,
            Param::Direction,
            Param::Speed,
        ],
        "dyn_all_unknown_5x5",
    ))
}

#[derive(Clone, Debug, PartialEq)]
pub struct SchurOutput {
    pub matrix: DMatrix<f64>,
    pub pinv_used: bool,
}

/// EFIM of the parameters in `keep` after eliminating the rest. Falls back to the
/// pseudo-inverse when the eliminated block is singular and says so.
pub fn schur_complement(j: &DMatrix<f64>, keep: &[usize]) -> Result<SchurOutput> {
    let n = j.nrows();
    if j.ncols() != n || keep.iter().any(|&k| k >= n) {
        return Err(Error::Unsupported(format!(
            "bad Schur request on a {n}x{n} matrix"
        )));
    }
    let drop: Vec<usize> = (0..n).filter(|i| !keep.contains(i)).collect();
    let a = DMatrix::from_fn(keep.len(), keep.len(), |r, c| j[(keep[r], keep[c])]);
    if drop.is_empty() {
        return Ok(SchurOutput {
            matrix: a,
            pinv_used: false,
        });
    }
    let b = DMatrix::from_fn(keep.len(), drop.len(), |r, c| j[(keep[r], drop[c])]);
    let cm = DMatrix::from_fn(drop.len(), drop.len(), |r, c| j[(drop[r], drop[c])]);
    let singular = is_singular(&cm, SINGULAR_RTOL);
    let cinv = if singular {
        pinv_sym(&cm, SINGULAR_RTOL)
    } else {
        match cm.clone().cholesky() {
            Some(ch) => ch.inverse(),
            None => pinv_sym(&cm, SINGULAR_RTOL),
        }
    };
    let s = &a - &b * cinv * b.transpose();
    Ok(SchurOutput {
        matrix: (&s + s.transpose()) * 0.5,
        pinv_used: singular,
    })
}

/// Squared position error bound `tr(J^{-1})`; infinite when `J` is rank deficient.
pub fn speb(j: &DMatrix<f64>) -> SpebValue {
    if is_singular(j, SINGULAR_RTOL) {
        return SpebValue {
            value: f64::INFINITY,
            singular: true,
        };
    }
    let ev = sym_eigenvalues(j);
    SpebValue {
        value: ev.iter().map(|e| 1.0 / e).sum(),
        singular: false,
    }
}

/// SPEB of a UOA with known orientation from the TOA weights `r_i = lambda_i beta^2`,
/// AOA weights `s_i = lambda_i f_c^2 G / D_i^2` and bearings.
pub fn speb_uoa_closed(r: &[f64], s: &[f64], phi: &[f64]) -> f64 {
    let num: f64 = 2.0 * r.iter().zip(s).map(|(a, b)| a + b).sum::<f64>();
    let mut den = 0.0;
    for i in 0..phi.len() {
        for k in 0..phi.len() {
            let (ui, uk) = (r[i] - s[i], r[k] - s[k]);
            den += ui * uk * (phi[i] - phi[k]).sin().powi(2) + s[i] * r[k] + r[i] * s[k];
        }
    }
    num / den
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::array::ula;
    use crate::model::{AnchorNode, AntennaArray, ArrayPose, KnowledgeFlags, SPEED_OF_LIGHT};
    use crate::signal::{snr_from_db, SignalSummary};

    fn worked_example() -> Scenario {
        Scenario {
            anchors: vec![AnchorNode::los(
                Position2D::new(50.0, 0.0),
                snr_from_db(30.0),
            )],
            array: ula(2, 0.5).unwrap(),
            pose: ArrayPose {
                reference: Position2D::new(0.0, 0.0),
                orientation: PI / 2.0,
            },
            motion: None,
            knowledge: KnowledgeFlags::default(),
            signal: SignalSummary::new(1e6, 1e8),
            c: SPEED_OF_LIGHT,
        }
    }

    #[test]
    fn worked_example_numbers() {
        let s = worked_example();
        let lam = intensity(1000.0, 0.0, SPEED_OF_LIGHT);
        assert!((lam - 8.7852e-13).abs() / 8.7852e-13 < 1e-4);
        let j = efim_static_orient_known(&s, StaticMode::FarField).unwrap();
        let ev = sym_eigenvalues(&j.matrix);
        assert!((ev[1] - 1.757).abs() < 1e-3, "{ev:?}");
        assert!((ev[0] - 0.4393).abs() < 1e-4, "{ev:?}");
        let sp = speb(&j.matrix);
        assert!((sp.value - 2.845).abs() < 1e-3, "{}", sp.value);
    }

    #[test]
    fn rdm_rotation_identity() {
        for phi in [0.0, 0.4, 2.2, -1.3] {
            let lhs = rdm(phi + PI / 4.0) - rdm(phi - PI / 4.0);
            let q1 = [phi.cos(), phi.sin()];
            let q2 = [-phi.sin(), phi.cos()];
            let rhs = DMatrix::from_fn(2, 2, |i, j| q1[i] * q2[j] + q2[i] * q1[j]);
            assert!((lhs - rhs).norm() < 1e-14);
        }
    }

    #[test]
    fn centred_form_equals_farfield_at_centroid() {
        let mut s = worked_example();
        s.array = AntennaArray::from_body_coords(&[(0.3, 0.1), (0.9, -0.2), (0.5, 0.6)]).unwrap();
        s.anchors
            .push(AnchorNode::los(Position2D::new(-20.0, 35.0), 500.0));
        let (cs, _) = centroid_scenario(&s);
        let a = efim_static_orient_known(&s, StaticMode::Centered)
            .unwrap()
            .matrix;
        let b = efim_static_orient_known(&cs, StaticMode::FarField)
            .unwrap()
            .matrix;
        assert!((&a - &b).norm() / b.norm() < 1e-12);
    }

    #[test]
    fn unknown_2x2_is_schur_of_farfield_3x3() {
        let mut s = worked_example();
        s.array = ula(4, 1.0).unwrap();
        s.anchors
            .push(AnchorNode::los(Position2D::new(-10.0, 40.0), 300.0));
        s.anchors
            .push(AnchorNode::los(Position2D::new(5.0, -30.0), 800.0));
        let (_, j2) = efim_static_orient_unknown(&s).unwrap();
        // far-field 3x3 without the baseband orientation terms
        let (b, f) = s.signal.recentred();
        let na = s.array.len() as f64;
        let mut j3 = DMatrix::zeros(3, 3);
        for g in anchor_geometry(&s, &s.pose.reference).unwrap() {
            let (sn, cs) = g.bearing.sin_cos();
            let gs = saaf(&s.array, g.bearing - s.pose.orientation);
            j3 += outer(&[cs, sn, 0.0]) * (na * g.lambda * b * b);
            j3 += outer(&[-sn, cs, -g.range]) * (na * g.lambda * f * f * gs / (g.range * g.range));
        }
        let sc = schur_complement(&j3, &[0, 1]).unwrap();
        assert!(!sc.pinv_used);
        assert!((&sc.matrix - &j2.matrix).norm() / j2.matrix.norm() < 1e-12);
    }

    #[test]
    fn dynamic_2x2_is_schur_of_4x4() {
        let mut s = worked_example();
        s.array = ula(3, 0.5).unwrap();
        s.anchors
            .push(AnchorNode::los(Position2D::new(-10.0, 40.0), 300.0));
        s.anchors
            .push(AnchorNode::los(Position2D::new(5.0, -30.0), 800.0));
        s.motion = Some(AgentMotion {
            speed: 30.0,
            direction: 0.3,
            reference_time: 0.0,
        });
        s.signal = s.signal.with_trms(0.01);
        let (j4, j2) = efim_dynamic_orient_dir_unknown(&s).unwrap();
        let sc = schur_complement(&j4.matrix, &[0, 1]).unwrap();
        assert!((&sc.matrix - &j2.matrix).norm() / j2.matrix.norm() < 1e-10);
    }

    #[test]
    fn all_unknown_handles_radial_motion() {
        let mut s = worked_example();
        s.anchors
            .push(AnchorNode::los(Position2D::new(0.0, 40.0), 300.0));
        // heading straight along the bearing of the first anchor
        s.motion = Some(AgentMotion {
            speed: 30.0,
            direction: PI,
            reference_time: 0.0,
        });
        s.signal = s.signal.with_trms(0.01);
        let j5 = efim_dynamic_all_unknown(&s).unwrap();
        assert!(j5.matrix.iter().all(|v| v.is_finite()));
    }

    #[test]
    fn uoa_closed_speb_matches_matrix_route() {
        let mut s = worked_example();
        s.array = crate::array::uca(6, 1.0).unwrap();
        s.anchors = vec![
            AnchorNode::los(Position2D::new(50.0, 0.0), 1000.0),
            AnchorNode::los(Position2D::new(-20.0, 30.0), 400.0),
            AnchorNode::los(Position2D::new(-10.0, -45.0), 2000.0),
        ];
        let j = efim_static_orient_known(&s, StaticMode::FarField).unwrap();
        let na = 6.0;
        let g = crate::array::saaf_uca(6, 1.0);
        let geo = anchor_geometry(&s, &s.pose.reference).unwrap();
        let r: Vec<f64> = geo.iter().map(|a| na * a.lambda * 1e12).collect();
        let sv: Vec<f64> = geo
            .iter()
            .map(|a| na * a.lambda * 1e16 * g / (a.range * a.range))
            .collect();
        let phi: Vec<f64> = geo.iter().map(|a| a.bearing).collect();
        let closed = speb_uoa_closed(&r, &sv, &phi);
        let m = speb(&j.matrix).value;
        assert!((closed - m).abs() / m < 1e-12);
    }

    #[test]
    fn nlos_only_gives_zero_efim() {
        let mut s = worked_example();
        s.anchors[0].los = false;
        let j = efim_static_orient_known(&s, StaticMode::FarField).unwrap();
        assert!(j.is_zero());
        assert!(j.speb().singular);
    }
}
