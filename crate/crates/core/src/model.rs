//! Agent, array, anchor and signal-path description plus the delay model.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::signal::SignalSummary;

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct Position2D {
    pub x: f64,
    pub y: f64,
}

impl Position2D {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn from_polar(r: f64, angle: f64) -> Self {
        Self::new(r * angle.cos(), r * angle.sin())
    }

    pub fn distance(&self, other: &Position2D) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

/// Element offsets `(d_k, psi_k)` in the body frame of the array reference point.
#[derive(Clone, Debug, PartialEq)]
pub struct AntennaArray {
    pub offsets: Vec<(f64, f64)>,
}

impl AntennaArray {
    pub fn new(offsets: Vec<(f64, f64)>) -> Result<Self> {
        if offsets.is_empty() {
            return Err(Error::InvalidScenario(
                "array needs at least one element".into(),
            ));
        }
        for (k, &(d, a)) in offsets.iter().enumerate() {
            if !(d.is_finite() && a.is_finite()) || d < 0.0 {
                return Err(Error::InvalidScenario(format!(
                    "element {k} has offset ({d}, {a})"
                )));
            }
        }
        Ok(Self { offsets })
    }

    pub fn single() -> Self {
        Self {
            offsets: vec![(0.0, 0.0)],
        }
    }

    /// Builds an array from body-frame Cartesian coordinates.
    pub fn from_body_coords(points: &[(f64, f64)]) -> Result<Self> {
        Self::new(
            points
                .iter()
                .map(|&(x, y)| (x.hypot(y), y.atan2(x)))
                .collect(),
        )
    }

    pub fn body_coords(&self) -> Vec<(f64, f64)> {
        self.offsets
            .iter()
            .map(|&(d, a)| (d * a.cos(), d * a.sin()))
            .collect()
    }

    pub fn len(&self) -> usize {
        self.offsets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.offsets.is_empty()
    }

    /// Same geometry re-expressed with the element centroid as reference point.
    pub fn centered(&self) -> Self {
        let pts = self.body_coords();
        let n = pts.len() as f64;
        let cx = pts.iter().map(|p| p.0).sum::<f64>() / n;
        let cy = pts.iter().map(|p| p.1).sum::<f64>() / n;
        let shifted: Vec<(f64, f64)> = pts.iter().map(|&(x, y)| (x - cx, y - cy)).collect();
        Self::from_body_coords(&shifted).expect("finite offsets")
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct ArrayPose {
    pub reference: Position2D,
    pub orientation: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct AgentMotion {
    pub speed: f64,
    pub direction: f64,
    pub reference_time: f64,
}

/// One propagation path; `range_bias` (m) and `angle_bias` (rad) are zero for a LOS first path.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PathComponent {
    pub amplitude: f64,
    pub range_bias: f64,
    pub angle_bias: f64,
}

impl PathComponent {
    pub fn los(amplitude: f64) -> Self {
        Self {
            amplitude,
            range_bias: 0.0,
            angle_bias: 0.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AnchorNode {
    pub position: Position2D,
    /// Linear first-path SNR `alpha^2 E / N0`.
    pub snr: f64,
    pub poc: f64,
    pub los: bool,
    /// Path components, first path first. Only the waveform oracle looks past the SNR.
    pub paths: Vec<PathComponent>,
}

impl AnchorNode {
    pub fn los(position: Position2D, snr: f64) -> Self {
        Self {
            position,
            snr,
            poc: 0.0,
            los: true,
            paths: vec![PathComponent::los(1.0)],
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct KnowledgeFlags {
    pub phase: bool,
    pub orientation: bool,
    pub direction: bool,
    pub speed: bool,
}

impl Default for KnowledgeFlags {
    fn default() -> Self {
        Self {
            phase: false,
            orientation: true,
            direction: true,
            speed: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Scenario {
    pub anchors: Vec<AnchorNode>,
    pub array: AntennaArray,
    pub pose: ArrayPose,
    pub motion: Option<AgentMotion>,
    pub knowledge: KnowledgeFlags,
    pub signal: SignalSummary,
    pub c: f64,
}

impl Scenario {
    pub fn with_pose(&self, pose: ArrayPose) -> Self {
        Self {
            pose,
            ..self.clone()
        }
    }

    pub fn is_dynamic(&self) -> bool {
        self.motion.is_some_and(|m| m.speed != 0.0)
    }
}

pub fn antenna_position(pose: &ArrayPose, array: &AntennaArray, k: usize) -> Position2D {
    let (d, a) = array.offsets[k];
    let ang = pose.orientation + a;
    Position2D::new(
        pose.reference.x + d * ang.cos(),
        pose.reference.y + d * ang.sin(),
    )
}

pub fn antenna_position_dynamic(
    pose: &ArrayPose,
    array: &AntennaArray,
    k: usize,
    motion: &AgentMotion,
    t: f64,
) -> Position2D {
    let p = antenna_position(pose, array, k);
    let s = motion.speed * (t - motion.reference_time);
    Position2D::new(
        p.x + s * motion.direction.cos(),
        p.y + s * motion.direction.sin(),
    )
}

/// Range `D_j` and bearing `phi_j` of the agent as seen from an anchor (angle of `p - p_j`).
pub fn anchor_range_bearing(agent: &Position2D, anchor: &Position2D) -> Result<(f64, f64)> {
    let dx = agent.x - anchor.x;
    let dy = agent.y - anchor.y;
    let d = dx.hypot(dy);
    if !(d > 0.0) {
        return Err(Error::DegenerateGeometry(format!(
            "anchor at ({}, {}) coincides with the agent",
            anchor.x, anchor.y
        )));
    }
    Ok((d, dy.atan2(dx)))
}

/// Geometry shared by every delay evaluation for one anchor/element pair.
#[derive(Clone, Copy, Debug)]
pub struct DelayGeometry {
    pub range: f64,
    pub bearing: f64,
    pub offset: f64,
    pub offset_angle: f64,
    pub orientation: f64,
}

/// Delay of one path at receive time `t`. Reduces to the static far-field delay when `v = 0`.
/// Bearing and range are frozen at the reference time.
pub fn path_delay(
    g: &DelayGeometry,
    path: &PathComponent,
    motion: &AgentMotion,
    c: f64,
    t: f64,
) -> f64 {
    let (num, delta) = delay_terms(g, path, motion, c);
    num / (1.0 - delta) - (t - motion.reference_time) * delta / (1.0 - delta)
}

/// Transmit-time argument `u = t - tau(t)` written as `u = a t + b`.
pub fn signal_time_affine(
    g: &DelayGeometry,
    path: &PathComponent,
    motion: &AgentMotion,
    c: f64,
) -> (f64, f64) {
    let (num, delta) = delay_terms(g, path, motion, c);
    let a = 1.0 / (1.0 - delta);
    let b = -(num + motion.reference_time * delta) / (1.0 - delta);
    (a, b)
}

fn delay_terms(
    g: &DelayGeometry,
    path: &PathComponent,
    motion: &AgentMotion,
    c: f64,
) -> (f64, f64) {
    let arrival = g.bearing + path.angle_bias;
    let num = (g.range - g.offset * (arrival - g.orientation - g.offset_angle).cos()
        + path.range_bias)
        / c;
    let delta = motion.speed / c * (arrival - motion.direction).cos();
    (num, delta)
}

#[derive(Clone, Debug, PartialEq)]
pub struct Diagnostic {
    pub check: &'static str,
    pub value: f64,
    pub ok: bool,
    pub note: String,
}

/// Rejects inconsistent scenarios and reports the validity-range checks.
pub fn validate_scenario(s: &Scenario) -> Result<Vec<Diagnostic>> {
    let bad = |m: String| Err(Error::InvalidScenario(m));
    if s.anchors.is_empty() {
        return bad("no anchors".into());
    }
    if s.array.is_empty() {
        return bad("array has no elements".into());
    }
    if !(s.c > 0.0 && s.c.is_finite()) {
        return bad(format!("propagation speed {}", s.c));
    }
    if !s.pose.reference.is_finite() || !s.pose.orientation.is_finite() {
        return bad("non-finite pose".into());
    }
    s.signal.check()?;
    if let Some(m) = s.motion {
        if !(m.speed >= 0.0 && m.speed < s.c)
            || !m.direction.is_finite()
            || !m.reference_time.is_finite()
        {
            return bad(format!("speed {} must lie in [0, c)", m.speed));
        }
    }
    for (j, a) in s.anchors.iter().enumerate() {
        if !a.position.is_finite() {
            return bad(format!("anchor {j} has a non-finite position"));
        }
        if !(a.snr > 0.0 && a.snr.is_finite()) {
            return bad(format!("anchor {j} has SNR {}", a.snr));
        }
        if !(0.0..1.0).contains(&a.poc) {
            return bad(format!(
                "anchor {j} has path-overlap coefficient {} outside [0, 1)",
                a.poc
            ));
        }
        anchor_range_bearing(&s.pose.reference, &a.position)?;
    }

    let aperture = s.array.offsets.iter().map(|o| o.0).fold(0.0, f64::max);
    let nearest = s
        .anchors
        .iter()
        .map(|a| s.pose.reference.distance(&a.position))
        .fold(f64::INFINITY, f64::min);
    let ff = aperture / nearest;
    let los = s.anchors.iter().filter(|a| a.los).count();
    let mut out = vec![
        Diagnostic {
            check: "far_field_ratio",
            value: ff,
            ok: ff <= 0.1,
            note: "max element offset over nearest anchor range".into(),
        },
        Diagnostic {
            check: "los_anchor_count",
            value: los as f64,
            ok: los > 0,
            note: if los == 0 {
                "EFIM will be zero: no LOS anchor".into()
            } else {
                String::new()
            },
        },
    ];
    if s.signal.carrier > 0.0 {
        if let Some(b) = s.signal.band_limit {
            let nb = b / s.signal.carrier;
            let limit = if s.is_dynamic() { 0.1 } else { 1.0 };
            out.push(Diagnostic {
                check: "narrowband_ratio",
                value: nb,
                ok: nb <= limit,
                note: format!("B/f_c must not exceed {limit}"),
            });
        }
        let wavelength = s.c / s.signal.carrier;
        let spacing = max_nearest_spacing(&s.array);
        out.push(Diagnostic {
            check: "phase_ambiguity",
            value: spacing / wavelength,
            ok: spacing < wavelength,
            note: "largest nearest-neighbour spacing over wavelength".into(),
        });
    }
    Ok(out)
}

fn max_nearest_spacing(array: &AntennaArray) -> f64 {
    let pts = array.body_coords();
    if pts.len() < 2 {
        return 0.0;
    }
    pts.iter()
        .enumerate()
        .map(|(i, p)| {
            pts.iter()
                .enumerate()
                .filter(|(j, _)| *j != i)
                .map(|(_, q)| (p.0 - q.0).hypot(p.1 - q.1))
                .fold(f64::INFINITY, f64::min)
        })
        .fold(0.0, f64::max)
}

/// Wraps an angle into `(-pi, pi]`.
pub fn wrap_angle(a: f64) -> f64 {
    let mut w = a.rem_euclid(2.0 * PI);
    if w > PI {
        w -= 2.0 * PI;
    }
    w
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bearing_points_from_anchor_to_agent() {
        let agent = Position2D::new(0.0, 0.0);
        let (d, phi) = anchor_range_bearing(&agent, &Position2D::new(50.0, 0.0)).unwrap();
        assert_eq!(d, 50.0);
        assert!((phi - PI).abs() < 1e-15);
        let (d, phi) = anchor_range_bearing(&agent, &Position2D::new(0.0, 20.0)).unwrap();
        assert_eq!(d, 20.0);
        assert!((phi + PI / 2.0).abs() < 1e-15);
    }

    #[test]
    fn coincident_anchor_is_rejected() {
        let p = Position2D::new(1.0, 2.0);
        assert!(matches!(
            anchor_range_bearing(&p, &p),
            Err(Error::DegenerateGeometry(_))
        ));
    }

    #[test]
    fn element_positions() {
        let pose = ArrayPose {
            reference: Position2D::new(1.0, 1.0),
            orientation: PI / 2.0,
        };
        let arr = AntennaArray::new(vec![(0.0, 0.0), (2.0, 0.0)]).unwrap();
        let p = antenna_position(&pose, &arr, 1);
        assert!((p.x - 1.0).abs() < 1e-15 && (p.y - 3.0).abs() < 1e-15);
        let m = AgentMotion {
            speed: 2.0,
            direction: 0.0,
            reference_time: 1.0,
        };
        let q = antenna_position_dynamic(&pose, &arr, 1, &m, 3.5);
        assert!((q.x - 6.0).abs() < 1e-15 && (q.y - 3.0).abs() < 1e-15);
    }

    #[test]
    fn static_delay_limit() {
        let g = DelayGeometry {
            range: 30.0,
            bearing: 0.3,
            offset: 0.5,
            offset_angle: 0.2,
            orientation: 0.1,
        };
        let path = PathComponent {
            amplitude: 1.0,
            range_bias: 4.0,
            angle_bias: 0.05,
        };
        let still = AgentMotion::default();
        let tau = path_delay(&g, &path, &still, 100.0, 7.0);
        let want = 30.0 / 100.0 + (-0.5 * (0.3 - 0.1 + 0.05 - 0.2_f64).cos() + 4.0) / 100.0;
        assert!((tau - want).abs() < 1e-15);
    }

    #[test]
    fn affine_argument_matches_delay() {
        let g = DelayGeometry {
            range: 30.0,
            bearing: 2.0,
            offset: 0.5,
            offset_angle: 0.2,
            orientation: 0.1,
        };
        let path = PathComponent::los(1.0);
        let m = AgentMotion {
            speed: 3.0,
            direction: 0.4,
            reference_time: 0.7,
        };
        let (a, b) = signal_time_affine(&g, &path, &m, 100.0);
        for t in [0.0, 0.5, 2.0] {
            let u = t - path_delay(&g, &path, &m, 100.0, t);
            assert!((a * t + b - u).abs() < 1e-14);
        }
    }
}
