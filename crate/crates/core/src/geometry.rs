//! Anchor-geometry factors, GDOP, optimal anchor placement and the EFIM rank table.

use std::f64::consts::PI;

use nalgebra::{DMatrix, Matrix2};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::array::saaf;
use crate::efim::{
    anchor_geometry, efim_dynamic_known, efim_dynamic_orient_dir_unknown, efim_static_orient_known,
    efim_static_orient_unknown, DynamicMode, StaticMode, SINGULAR_RTOL,
};
use crate::error::{Error, Result};
use crate::linalg::{is_singular, sym_eigenvalues};
use crate::model::{
    AgentMotion, AnchorNode, AntennaArray, ArrayPose, KnowledgeFlags, Position2D, Scenario,
    SPEED_OF_LIGHT,
};
use crate::signal::SignalSummary;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GeometricFactors {
    pub gf1: f64,
    pub gf2: f64,
    /// `gf1 / sum |u_i|`, in `[0, 1]`.
    pub gf1_norm: f64,
    /// `gf2 / sum lambda_i / D_i`, in `[0, 1]`.
    pub gf2_norm: f64,
}

/// `|sum u_i exp(j 2 phi_i)|`.
pub fn gf1(u: &[f64], phi: &[f64]) -> f64 {
    u.iter()
        .zip(phi)
        .map(|(u, p)| Complex64::from_polar(*u, 2.0 * p))
        .sum::<Complex64>()
        .norm()
}

/// `|sum lambda_i / D_i exp(j phi_i)|`.
pub fn gf2(lambda: &[f64], range: &[f64], phi: &[f64]) -> f64 {
    lambda
        .iter()
        .zip(range)
        .zip(phi)
        .map(|((l, d), p)| Complex64::from_polar(l / d, *p))
        .sum::<Complex64>()
        .norm()
}

/// TOA weights `r_i`, AOA weights `s_i` and bearings of the LOS anchors.
pub fn anchor_weights(s: &Scenario) -> Result<(Vec<f64>, Vec<f64>, Vec<f64>)> {
    let (b, f) = s.signal.recentred();
    let mut r = Vec::new();
    let mut w = Vec::new();
    let mut phi = Vec::new();
    for g in anchor_geometry(s, &s.pose.reference)? {
        let gs = saaf(&s.array, g.bearing - s.pose.orientation);
        r.push(g.lambda * b * b);
        w.push(g.lambda * f * f * gs / (g.range * g.range));
        phi.push(g.bearing);
    }
    Ok((r, w, phi))
}

pub fn geometric_factors(s: &Scenario) -> Result<GeometricFactors> {
    let (r, w, phi) = anchor_weights(s)?;
    let u: Vec<f64> = r.iter().zip(&w).map(|(a, b)| a - b).collect();
    let geo = anchor_geometry(s, &s.pose.reference)?;
    let lam: Vec<f64> = geo.iter().map(|g| g.lambda).collect();
    let rng: Vec<f64> = geo.iter().map(|g| g.range).collect();
    let g1 = gf1(&u, &phi);
    let g2 = gf2(&lam, &rng, &phi);
    let n1: f64 = u.iter().map(|x| x.abs()).sum();
    let n2: f64 = lam.iter().zip(&rng).map(|(l, d)| l / d).sum();
    Ok(GeometricFactors {
        gf1: g1,
        gf2: g2,
        gf1_norm: if n1 > 0.0 { g1 / n1 } else { 0.0 },
        gf2_norm: if n2 > 0.0 { g2 / n2 } else { 0.0 },
    })
}

/// Geometric dilution of precision for range and bearing rows
/// `[cos t, sin t]` and `[-sin t / D, cos t / D]`.
pub fn gdop(theta: &[f64], range: &[f64]) -> f64 {
    let mut m = Matrix2::zeros();
    for (t, d) in theta.iter().zip(range) {
        let (s, c) = t.sin_cos();
        m += Matrix2::new(c * c, c * s, c * s, s * s);
        m += Matrix2::new(s * s, -c * s, -c * s, c * c) / (d * d);
    }
    match m.try_inverse() {
        Some(inv) => inv.trace().sqrt(),
        None => f64::INFINITY,
    }
}

/// Normalized `|sum u_i exp(j 2 phi_i)|`; zero at a known-orientation optimum.
pub fn anchor_optimality_residual(u: &[f64], phi: &[f64]) -> f64 {
    let n: f64 = u.iter().map(|x| x.abs()).sum();
    if n == 0.0 {
        0.0
    } else {
        gf1(u, phi) / n
    }
}

/// Smallest reachable normalized GF1 for fixed weights: `max(0, 2 max|u| - sum|u|) / sum|u|`.
pub fn gf1_lower_bound(u: &[f64]) -> f64 {
    let n: f64 = u.iter().map(|x| x.abs()).sum();
    let m = u.iter().map(|x| x.abs()).fold(0.0, f64::max);
    if n == 0.0 {
        0.0
    } else {
        (2.0 * m - n).max(0.0) / n
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Objective {
    OrientationKnown,
    OrientationUnknown,
}

/// Anchors on circles of fixed radius around the agent; only the bearings move.
/// `saaf` is the constant SAAF of a UOA.
#[derive(Clone, Debug, PartialEq)]
pub struct PlacementProblem {
    pub lambda: Vec<f64>,
    pub range: Vec<f64>,
    pub beta: f64,
    pub carrier: f64,
    pub saaf: f64,
    pub elements: usize,
}

impl PlacementProblem {
    fn toa(&self, i: usize) -> f64 {
        self.elements as f64 * self.lambda[i] * self.beta * self.beta
    }

    fn aoa(&self, i: usize) -> f64 {
        self.elements as f64 * self.lambda[i] * self.carrier * self.carrier * self.saaf
            / (self.range[i] * self.range[i])
    }

    fn toa_sum(&self) -> f64 {
        (0..self.lambda.len()).map(|i| self.toa(i)).sum()
    }

    fn aoa_sum(&self) -> f64 {
        (0..self.lambda.len()).map(|i| self.aoa(i)).sum()
    }

    /// Per-anchor `u_i = r_i - s_i` (without the element count).
    pub fn u(&self) -> Vec<f64> {
        let na = self.elements as f64;
        (0..self.lambda.len())
            .map(|i| (self.toa(i) - self.aoa(i)) / na)
            .collect()
    }

    pub fn efim(&self, phi: &[f64], obj: Objective) -> Matrix2<f64> {
        let mut j = Matrix2::zeros();
        for (i, p) in phi.iter().enumerate() {
            let (s, c) = p.sin_cos();
            j += Matrix2::new(c * c, c * s, c * s, s * s) * self.toa(i);
            j += Matrix2::new(s * s, -c * s, -c * s, c * c) * self.aoa(i);
        }
        if obj == Objective::OrientationUnknown {
            let (kappa, w) = self.rotation_term(phi);
            j -= w * w.transpose() * kappa;
        }
        j
    }

    fn rotation_term(&self, phi: &[f64]) -> (f64, nalgebra::Vector2<f64>) {
        let total: f64 = self.lambda.iter().map(|l| l * self.saaf).sum();
        let kappa = if total > 0.0 {
            self.elements as f64 * self.carrier * self.carrier / total
        } else {
            0.0
        };
        let mut w = nalgebra::Vector2::zeros();
        for (i, p) in phi.iter().enumerate() {
            w += nalgebra::Vector2::new(-p.sin(), p.cos())
                * (self.lambda[i] * self.saaf / self.range[i]);
        }
        (kappa, w)
    }

    pub fn speb(&self, phi: &[f64], obj: Objective) -> f64 {
        let j = self.efim(phi, obj);
        let det = j.determinant();
        let ev = sym_eigenvalues(&DMatrix::from_column_slice(2, 2, j.as_slice()));
        if ev[0] <= SINGULAR_RTOL * ev[1].abs() || det <= 0.0 {
            return f64::INFINITY;
        }
        j.trace() / det
    }

    /// Analytic gradient of the SPEB with respect to the bearings.
    pub fn speb_gradient(&self, phi: &[f64], obj: Objective) -> Vec<f64> {
        let j = self.efim(phi, obj);
        let Some(inv) = j.try_inverse() else {
            return vec![0.0; phi.len()];
        };
        let inv2 = inv * inv;
        let (kappa, w) = self.rotation_term(phi);
        phi.iter()
            .enumerate()
            .map(|(i, p)| {
                let (s2, c2) = (2.0 * p).sin_cos();
                let mut dj = Matrix2::new(-s2, c2, c2, s2) * (self.toa(i) - self.aoa(i));
                if obj == Objective::OrientationUnknown {
                    let q1 = nalgebra::Vector2::new(p.cos(), p.sin());
                    let ci = self.lambda[i] * self.saaf / self.range[i];
                    // d/dphi_i of -kappa w w^T with dw = -c_i q1
                    dj += (q1 * w.transpose() + w * q1.transpose()) * (kappa * ci);
                }
                -(inv2 * dj).trace()
            })
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PlacementResult {
    pub phi: Vec<f64>,
    pub speb: f64,
    pub gf1_norm: f64,
    pub iterations: usize,
    pub converged: bool,
    /// All `u_i` vanish; every angle assignment gives the same SPEB.
    pub isotropic: bool,
}

/// Gradient descent with step halving from `restarts` random starts; keeps the best.
pub fn optimize_anchor_angles(
    p: &PlacementProblem,
    obj: Objective,
    restarts: usize,
    seed: u64,
) -> Result<PlacementResult> {
    let n = p.lambda.len();
    if n == 0 || p.range.len() != n {
        return Err(Error::InvalidScenario(
            "placement needs matching weights and ranges".into(),
        ));
    }
    let runs: Vec<PlacementResult> = (0..restarts.max(1))
        .into_par_iter()
        .map(|r| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(r as u64);
            let start: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..2.0 * PI)).collect();
            descend(p, obj, start)
        })
        .collect();
    let mut best = runs[0].clone();
    for r in runs.into_iter().skip(1) {
        if r.speb < best.speb {
            best = r;
        }
    }
    Ok(best)
}

fn descend(p: &PlacementProblem, obj: Objective, mut phi: Vec<f64>) -> PlacementResult {
    let mut f = p.speb(&phi, obj);
    let mut step = 1.0;
    let mut iterations = 0;
    let mut converged = false;
    while iterations < 20_000 && f.is_finite() {
        iterations += 1;
        let g = p.speb_gradient(&phi, obj);
        let gn2: f64 = g.iter().map(|x| x * x).sum();
        if gn2.sqrt() <= 1e-8 * f {
            converged = true;
            break;
        }
        let gn = gn2.sqrt();
        let mut t = step;
        let mut accepted = false;
        for _ in 0..60 {
            let trial: Vec<f64> = phi.iter().zip(&g).map(|(x, d)| x - t * d / gn).collect();
            let ft = p.speb(&trial, obj);
            if ft <= f - 1e-4 * t * gn {
                phi = trial;
                f = ft;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if !accepted {
            converged = gn <= 1e-8 * f;
            break;
        }
        step = (2.0 * t).min(1.0);
    }
    for x in &mut phi {
        *x = x.rem_euclid(2.0 * PI);
    }
    let u = p.u();
    let isotropic = u
        .iter()
        .all(|x| x.abs() <= 1e-12 * (p.toa_sum() + p.aoa_sum()));
    PlacementResult {
        gf1_norm: anchor_optimality_residual(&u, &phi),
        speb: f,
        phi,
        iterations,
        converged,
        isotropic,
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OrientationStats {
    pub average: f64,
    pub max: f64,
    pub argmax: f64,
    pub min: f64,
}

/// Average over orientation by the periodic trapezoid rule with `n` nodes, plus the maximum
/// from a 1024-point scan refined by golden-section search.
pub fn orientation_avg_speb(f: impl Fn(f64) -> f64 + Sync, n: usize) -> OrientationStats {
    let h = 2.0 * PI / n as f64;
    let nodes: Vec<f64> = (0..n).into_par_iter().map(|i| f(i as f64 * h)).collect();
    let average = nodes.iter().sum::<f64>() / n as f64;
    let scan = 1024;
    let hs = 2.0 * PI / scan as f64;
    let values: Vec<f64> = (0..scan)
        .into_par_iter()
        .map(|i| f(i as f64 * hs))
        .collect();
    let (mut imax, mut vmax, mut vmin) = (0usize, f64::NEG_INFINITY, f64::INFINITY);
    for (i, &v) in values.iter().enumerate() {
        if v > vmax {
            vmax = v;
            imax = i;
        }
        vmin = vmin.min(v);
    }
    let (mut a, mut b) = ((imax as f64 - 1.0) * hs, (imax as f64 + 1.0) * hs);
    let gr = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - gr * (b - a);
    let mut d = a + gr * (b - a);
    for _ in 0..80 {
        if f(c) > f(d) {
            b = d;
        } else {
            a = c;
        }
        c = b - gr * (b - a);
        d = a + gr * (b - a);
    }
    let x = 0.5 * (a + b);
    let fx = f(x);
    let (max, argmax) = if fx > vmax {
        (fx, x)
    } else {
        (vmax, imax as f64 * hs)
    };
    OrientationStats {
        average,
        max,
        argmax: argmax.rem_euclid(2.0 * PI),
        min: vmin,
    }
}

/// For `a - b` positive semidefinite, checks `tr(a^{-1}) <= tr(b^{-1})`.
/// Returns `(a - b is PSD, inequality holds)`.
pub fn trace_inverse_monotone_check(a: &DMatrix<f64>, b: &DMatrix<f64>) -> (bool, bool) {
    let d = a - b;
    let ev = sym_eigenvalues(&d);
    let scale = sym_eigenvalues(a)
        .iter()
        .fold(0.0_f64, |m, e| m.max(e.abs()));
    let psd = ev[0] >= -1e-12 * scale;
    let ta = a.clone().try_inverse().map(|m| m.trace());
    let tb = b.clone().try_inverse().map(|m| m.trace());
    let holds = match (ta, tb) {
        (Some(x), Some(y)) => x <= y * (1.0 + 1e-12),
        (_, None) => true,
        (None, Some(_)) => false,
    };
    (psd, holds)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SignalCase {
    NoCarrier,
    NoBaseband,
    Both,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TableCell {
    pub moving: bool,
    pub signal: SignalCase,
    pub orientation_known: bool,
}

impl TableCell {
    pub fn all() -> Vec<TableCell> {
        let mut out = Vec::new();
        for orientation_known in [true, false] {
            for (moving, signal) in [
                (false, SignalCase::NoCarrier),
                (false, SignalCase::NoBaseband),
                (false, SignalCase::Both),
                (true, SignalCase::NoBaseband),
                (true, SignalCase::Both),
            ] {
                out.push(TableCell {
                    moving,
                    signal,
                    orientation_known,
                });
            }
        }
        out
    }

    pub fn label(&self) -> String {
        format!(
            "{}/{}/{}",
            if self.orientation_known {
                "orientation-known"
            } else {
                "orientation-unknown"
            },
            if self.moving { "dynamic" } else { "static" },
            match self.signal {
                SignalCase::NoCarrier => "f_c=0",
                SignalCase::NoBaseband => "beta=0",
                SignalCase::Both => "beta,f_c>0",
            }
        )
    }

    /// Minimum anchors, minimum antennas, and whether either one alone suffices.
    pub fn requirement(&self) -> (usize, usize, bool) {
        use SignalCase::*;
        match (self.orientation_known, self.moving, self.signal) {
            (true, false, NoCarrier) => (2, 1, false),
            (true, false, NoBaseband) => (2, 2, false),
            (true, false, Both) => (2, 2, true),
            (true, true, NoBaseband) => (2, 1, false),
            (true, true, Both) => (1, 1, false),
            (false, false, NoCarrier) => (2, 1, false),
            (false, false, NoBaseband) => (3, 2, false),
            (false, false, Both) => (2, 1, false),
            (false, true, NoBaseband) => (3, 1, false),
            (false, true, Both) => (2, 1, false),
            (_, true, NoCarrier) => (usize::MAX, usize::MAX, false),
        }
    }

    pub fn requirement_text(&self) -> String {
        let (a, k, either) = self.requirement();
        match (a, k, either) {
            (1, 1, _) => "no restriction".into(),
            (a, 1, _) => format!(">={a} anchors"),
            (a, k, true) => format!(">={a} anchors or >={k} antennas"),
            (a, k, false) => format!(">={a} anchors and >={k} antennas"),
        }
    }

    /// `(anchors, antennas, expected full rank)` at and just below the requirement.
    pub fn cases(&self) -> Vec<(usize, usize, bool)> {
        let (a, k, either) = self.requirement();
        let mut out = Vec::new();
        if either {
            out.push((a, 1, true));
            out.push((1, k, true));
            out.push((1, 1, false));
        } else {
            out.push((a, 1.max(k), true));
            if a > 1 {
                out.push((a - 1, 4.max(k), false));
            }
            if k > 1 {
                out.push((a, k - 1, false));
            }
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RankCase {
    pub anchors: usize,
    pub antennas: usize,
    pub expect_full: bool,
    pub observed_full: bool,
}

/// Rank of the position EFIM for random generic geometries at and one below each requirement.
pub fn efim_rank_requirements(cell: TableCell, seed: u64) -> Result<Vec<RankCase>> {
    let mut out = Vec::new();
    for (ci, (na, nk, expect)) in cell.cases().into_iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(ci as u64);
        let s = random_generic_scenario(&mut rng, cell, na, nk)?;
        let j = position_efim(&s, cell)?;
        out.push(RankCase {
            anchors: na,
            antennas: nk,
            expect_full: expect,
            observed_full: !is_singular(&j, SINGULAR_RTOL),
        });
    }
    Ok(out)
}

fn position_efim(s: &Scenario, cell: TableCell) -> Result<DMatrix<f64>> {
    Ok(match (cell.moving, cell.orientation_known) {
        (false, true) => efim_static_orient_known(s, StaticMode::FarField)?.matrix,
        (false, false) => efim_static_orient_unknown(s)?.1.matrix,
        (true, true) => efim_dynamic_known(s, DynamicMode::Approx)?.matrix,
        (true, false) => efim_dynamic_orient_dir_unknown(s)?.1.matrix,
    })
}

fn random_generic_scenario(
    rng: &mut ChaCha8Rng,
    cell: TableCell,
    anchors: usize,
    antennas: usize,
) -> Result<Scenario> {
    let (beta, carrier) = match cell.signal {
        SignalCase::NoCarrier => (1e6, 0.0),
        SignalCase::NoBaseband => (0.0, 1e8),
        SignalCase::Both => (1e6, 1e8),
    };
    let anchors = (0..anchors)
        .map(|_| {
            let d = rng.random_range(20.0..60.0);
            let a = rng.random_range(0.0..2.0 * PI);
            AnchorNode::los(
                Position2D::from_polar(d, a),
                rng.random_range(100.0..2000.0),
            )
        })
        .collect();
    let pts: Vec<(f64, f64)> = (0..antennas)
        .map(|_| (rng.random_range(-0.5..0.5), rng.random_range(-0.5..0.5)))
        .collect();
    let array = AntennaArray::from_body_coords(&pts)?;
    let motion = cell.moving.then(|| AgentMotion {
        speed: 30.0,
        direction: rng.random_range(0.0..2.0 * PI),
        reference_time: 0.0,
    });
    let mut signal = SignalSummary::new(beta, carrier);
    signal.trms = Some(0.01);
    Ok(Scenario {
        anchors,
        array,
        pose: ArrayPose {
            reference: Position2D::default(),
            orientation: rng.random_range(0.0..2.0 * PI),
        },
        motion,
        knowledge: KnowledgeFlags {
            phase: false,
            orientation: cell.orientation_known,
            direction: cell.orientation_known,
            speed: true,
        },
        signal,
        c: SPEED_OF_LIGHT,
    })
}
