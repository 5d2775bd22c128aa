//! Squared array aperture function (SAAF) and array shape helpers.

use std::f64::consts::PI;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::model::AntennaArray;

#[derive(Clone, Debug, PartialEq)]
pub enum ArraySpec {
    Custom(AntennaArray),
    Ula { elements: usize, diameter: f64 },
    Uca { elements: usize, diameter: f64 },
}

impl ArraySpec {
    pub fn build(&self) -> Result<AntennaArray> {
        match *self {
            ArraySpec::Custom(ref a) => Ok(a.clone()),
            ArraySpec::Ula { elements, diameter } => ula(elements, diameter),
            ArraySpec::Uca { elements, diameter } => uca(elements, diameter),
        }
    }
}

/// Uniform linear array along the body x-axis, centred on the reference point.
pub fn ula(n: usize, diameter: f64) -> Result<AntennaArray> {
    if n == 0 || !(diameter >= 0.0) {
        return Err(Error::InvalidScenario(format!(
            "ULA with {n} elements and diameter {diameter}"
        )));
    }
    if n == 1 {
        return Ok(AntennaArray::single());
    }
    let pts: Vec<(f64, f64)> = (0..n)
        .map(|k| (-0.5 * diameter + diameter * k as f64 / (n - 1) as f64, 0.0))
        .collect();
    AntennaArray::from_body_coords(&pts)
}

/// Uniform circular array centred on the reference point, first element on the body x-axis.
pub fn uca(n: usize, diameter: f64) -> Result<AntennaArray> {
    if n < 3 || !(diameter >= 0.0) {
        return Err(Error::InvalidScenario(format!(
            "UCA needs >= 3 elements, got {n}"
        )));
    }
    AntennaArray::new(
        (0..n)
            .map(|k| (0.5 * diameter, 2.0 * PI * k as f64 / n as f64))
            .collect(),
    )
}

/// Second central moments of the body-frame coordinates: `(var x, var y, cov xy)`.
pub fn moments(array: &AntennaArray) -> (f64, f64, f64) {
    let pts = array.body_coords();
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let (mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0);
    for &(x, y) in &pts {
        sxx += (x - mx) * (x - mx);
        syy += (y - my) * (y - my);
        sxy += (x - mx) * (y - my);
    }
    (sxx / n, syy / n, sxy / n)
}

/// `G(theta)`: variance over elements of `x_k sin(theta) - y_k cos(theta)`.
pub fn saaf(array: &AntennaArray, theta: f64) -> f64 {
    let (s, c) = theta.sin_cos();
    let proj: Vec<f64> = array
        .body_coords()
        .iter()
        .map(|&(x, y)| x * s - y * c)
        .collect();
    let n = proj.len() as f64;
    let mean = proj.iter().sum::<f64>() / n;
    proj.iter().map(|p| (p - mean) * (p - mean)).sum::<f64>() / n
}

/// SAAF from the second moments.
pub fn saaf_from_moments(m: (f64, f64, f64), theta: f64) -> f64 {
    let (s, c) = theta.sin_cos();
    m.0 * s * s + m.1 * c * c - m.2 * (2.0 * theta).sin()
}

pub fn saaf_ula(n: usize, diameter: f64, theta: f64) -> f64 {
    if n < 2 {
        return 0.0;
    }
    let n = n as f64;
    (n + 1.0) / (12.0 * (n - 1.0)) * diameter * diameter * theta.sin().powi(2)
}

pub fn saaf_uca(n: usize, diameter: f64) -> f64 {
    debug_assert!(n >= 3);
    diameter * diameter / 8.0
}

/// Mean of the SAAF over all directions.
pub fn average_saaf(array: &AntennaArray) -> f64 {
    let (xx, yy, _) = moments(array);
    0.5 * (xx + yy)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct UoaClass {
    /// Orientation-invariant SAAF.
    pub uoa: bool,
    /// Additionally all elements equidistant from the centroid.
    pub ucoa: bool,
}

pub fn classify_uoa(array: &AntennaArray, rtol: f64) -> UoaClass {
    let (xx, yy, xy) = moments(array);
    let scale = xx + yy;
    if scale == 0.0 {
        return UoaClass {
            uoa: true,
            ucoa: true,
        };
    }
    let uoa = (xx - yy).abs() <= rtol * scale && xy.abs() <= rtol * scale;
    let pts = array.body_coords();
    let n = pts.len() as f64;
    let cx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let cy = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let r2: Vec<f64> = pts
        .iter()
        .map(|&(x, y)| (x - cx).powi(2) + (y - cy).powi(2))
        .collect();
    let mean = r2.iter().sum::<f64>() / n;
    let ucoa = uoa && r2.iter().all(|r| (r - mean).abs() <= rtol * scale);
    UoaClass { uoa, ucoa }
}

/// Centre and radius of the minimum enclosing circle.
pub fn enclosing_circle(points: &[(f64, f64)]) -> ((f64, f64), f64) {
    let mut pts = points.to_vec();
    pts.shuffle(&mut ChaCha8Rng::seed_from_u64(0x5eed));
    let scale = pts
        .iter()
        .map(|p| p.0.abs().max(p.1.abs()))
        .fold(0.0, f64::max);
    let slack = 1e-12 * scale.max(f64::MIN_POSITIVE);
    let inside = |c: (f64, f64), r: f64, p: (f64, f64)| (p.0 - c.0).hypot(p.1 - c.1) <= r + slack;

    let (mut c, mut r) = (pts[0], 0.0);
    for i in 1..pts.len() {
        if inside(c, r, pts[i]) {
            continue;
        }
        c = pts[i];
        r = 0.0;
        for j in 0..i {
            if inside(c, r, pts[j]) {
                continue;
            }
            (c, r) = circle2(pts[i], pts[j]);
            for k in 0..j {
                if !inside(c, r, pts[k]) {
                    (c, r) = circle3(pts[i], pts[j], pts[k]);
                }
            }
        }
    }
    (c, r)
}

fn circle2(a: (f64, f64), b: (f64, f64)) -> ((f64, f64), f64) {
    let c = (0.5 * (a.0 + b.0), 0.5 * (a.1 + b.1));
    (c, 0.5 * (a.0 - b.0).hypot(a.1 - b.1))
}

fn circle3(a: (f64, f64), b: (f64, f64), c: (f64, f64)) -> ((f64, f64), f64) {
    let (bx, by) = (b.0 - a.0, b.1 - a.1);
    let (cx, cy) = (c.0 - a.0, c.1 - a.1);
    let d = 2.0 * (bx * cy - by * cx);
    if d.abs() <= 1e-14 * (bx * bx + by * by + cx * cx + cy * cy) {
        // collinear: the widest pair decides
        let cands = [circle2(a, b), circle2(a, c), circle2(b, c)];
        return cands
            .into_iter()
            .fold(cands[0], |m, x| if x.1 > m.1 { x } else { m });
    }
    let b2 = bx * bx + by * by;
    let c2 = cx * cx + cy * cy;
    let ux = (cy * b2 - by * c2) / d;
    let uy = (bx * c2 - cx * b2) / d;
    ((a.0 + ux, a.1 + uy), ux.hypot(uy))
}

/// Diameter of the minimum enclosing circle of the elements.
pub fn diameter(array: &AntennaArray) -> f64 {
    2.0 * enclosing_circle(&array.body_coords()).1
}
