//! Strict TOML experiment configuration. Every physical quantity is a string with a unit.

use std::path::{Path, PathBuf};

use arrayloc::array::ArraySpec;
use arrayloc::model::validate_scenario;
use arrayloc::signal::{read_signal_file, summarize};
use arrayloc::{
    AgentMotion, AnchorNode, AntennaArray, ArrayPose, ComplexSampleSeries, KnowledgeFlags,
    Position2D, Scenario, SignalSummary, SPEED_OF_LIGHT,
};
use serde::Deserialize;

use crate::units::{parse, Kind};
use crate::CliError;

pub const SCHEMA: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Experiment {
    Point,
    Grid,
    OrientationSweep,
    GeometryMc,
    ArrayCompare,
    OracleCheck,
    OptimizeAnchors,
    RankTable,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::Point => "point",
            Experiment::Grid => "grid",
            Experiment::OrientationSweep => "orientation-sweep",
            Experiment::GeometryMc => "geometry-mc",
            Experiment::ArrayCompare => "array-compare",
            Experiment::OracleCheck => "oracle-check",
            Experiment::OptimizeAnchors => "optimize-anchors",
            Experiment::RankTable => "rank-table",
        }
    }

    fn from_name(s: &str) -> Option<Self> {
        use Experiment::*;
        [
            Point,
            Grid,
            OrientationSweep,
            GeometryMc,
            ArrayCompare,
            OracleCheck,
            OptimizeAnchors,
            RankTable,
        ]
        .into_iter()
        .find(|e| e.name() == s)
    }
}

#[derive(Deserialize, Debug)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    schema: u32,
    experiment: Option<String>,
    propagation_speed: Option<String>,
    signal: Option<RawSignal>,
    array: Option<RawArray>,
    pose: Option<RawPose>,
    motion: Option<RawMotion>,
    knowledge: Option<RawKnowledge>,
    #[serde(default)]
    anchor: Vec<RawAnchor>,
    grid: Option<RawGrid>,
    sweep: Option<RawSweep>,
    mc: Option<RawMc>,
    compare: Option<RawCompare>,
    optimize: Option<RawOptimize>,
    rank: Option<RawRank>,
    oracle: Option<RawOracle>,
}

#[derive(Deserialize, Debug)]
#[serde(deny_unknown_fields)]
struct RawSignal {
    carrier: String,
    beta: Option<String>,
    bcc: Option<f64>,
    trms: Option<String>,
    file: Option<String>,
}

#[derive(Deserialize, Debug)]
#[serde(deny_unknown_fields)]
struct RawArray {
    kind: String,
    elements: Option<usize>,
    diameter: Option<String>,
    points: Option<Vec<[String; 2]>>,
}

#[derive(Deserialize, Debug)]
#[serde(deny_unknown_fields)]
struct RawPose {
    x: String,
    y: String,
    orientation: String,
}

#[derive(Deserialize, Debug)]
#[serde(deny_unknown_fields)]
struct RawMotion {
    speed: String,
    direction: String,
    reference_time: String,
}

#[derive(Deserialize, Debug, Default)]
#[serde(deny_unknown_fields)]
struct RawKnowledge {
    phase: Option<bool>,
    orientation: Option<bool>,
    direction: Option<bool>,
    speed: Option<bool>,
}

#[derive(Deserialize, Debug)]
#[serde(deny_unknown_fields)]
struct RawAnchor {
    x: String,
    y: String,
    snr: String,
    poc: Option<f64>,
    los: Option<bool>,
}

#[derive(Deserialize, Debug)]
#[serde(deny_unknown_fields)]
struct RawGrid {
    x_min: String,
    x_max: String,
    y_min: String,
    y_max: String,
    step: String,
}

#[derive(Deserialize, Debug)]
#[serde(deny_unknown_fields)]
struct RawSweep {
    psi_min: String,
    psi_max: String,
    points: usize,
    betas: Option<Vec<String>>,
}

#[derive(Deserialize, Debug)]
#[serde(deny_unknown_fields)]
struct RawMc {
    trials: usize,
    seed: Option<u64>,
    range: String,
    snrs: Vec<String>,
    betas: Vec<String>,
    direction_min: String,
    direction_max: String,
}

#[derive(Deserialize, Debug)]
#[serde(deny_unknown_fields)]
struct RawCompare {
    elements: Vec<usize>,
    diameter: String,
    points: usize,
}

#[derive(Deserialize, Debug)]
#[serde(deny_unknown_fields)]
struct RawOptimize {
    objective: String,
    restarts: usize,
    seed: Option<u64>,
}

#[derive(Deserialize, Debug)]
#[serde(deny_unknown_fields)]
struct RawRank {
    seed: Option<u64>,
}

#[derive(Deserialize, Debug)]
#[serde(deny_unknown_fields)]
struct RawOracle {
    scenarios: Option<Vec<String>>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GridSpec {
    pub x: (f64, f64),
    pub y: (f64, f64),
    pub step: f64,
}

impl GridSpec {
    fn axis(lo: f64, hi: f64, step: f64) -> Vec<f64> {
        let n = ((hi - lo) / step + 1e-9).floor() as usize + 1;
        (0..n).map(|i| lo + step * i as f64).collect()
    }

    pub fn xs(&self) -> Vec<f64> {
        Self::axis(self.x.0, self.x.1, self.step)
    }

    pub fn ys(&self) -> Vec<f64> {
        Self::axis(self.y.0, self.y.1, self.step)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepSpec {
    pub psi: (f64, f64),
    pub points: usize,
    pub betas: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct McSpec {
    pub trials: usize,
    pub seed: Option<u64>,
    pub range: f64,
    pub snrs: Vec<f64>,
    pub betas: Vec<f64>,
    pub directions: (f64, f64),
}

#[derive(Clone, Debug, PartialEq)]
pub struct CompareSpec {
    pub elements: Vec<usize>,
    pub diameter: f64,
    pub points: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct OptimizeSpec {
    pub known: bool,
    pub restarts: usize,
    pub seed: Option<u64>,
}

#[derive(Clone, Debug, Default)]
pub struct ExperimentConfig {
    pub experiment: Option<Experiment>,
    pub scenario: Option<Scenario>,
    pub series: Option<ComplexSampleSeries>,
    pub grid: Option<GridSpec>,
    pub sweep: Option<SweepSpec>,
    pub mc: Option<McSpec>,
    pub compare: Option<CompareSpec>,
    pub optimize: Option<OptimizeSpec>,
    pub rank_seed: Option<u64>,
    pub oracle_scenarios: Option<Vec<String>>,
}

impl ExperimentConfig {
    pub fn scenario(&self) -> Result<&Scenario, CliError> {
        self.scenario.as_ref().ok_or_else(|| {
            CliError::Config("this experiment needs [signal] and [array] sections".into())
        })
    }

    fn require<'a, T>(v: &'a Option<T>, section: &str) -> Result<&'a T, CliError> {
        v.as_ref()
            .ok_or_else(|| CliError::Config(format!("missing [{section}] section")))
    }

    pub fn grid(&self) -> Result<&GridSpec, CliError> {
        Self::require(&self.grid, "grid")
    }

    pub fn sweep(&self) -> Result<&SweepSpec, CliError> {
        Self::require(&self.sweep, "sweep")
    }

    pub fn mc(&self) -> Result<&McSpec, CliError> {
        Self::require(&self.mc, "mc")
    }

    pub fn compare(&self) -> Result<&CompareSpec, CliError> {
        Self::require(&self.compare, "compare")
    }

    pub fn optimize(&self) -> Result<&OptimizeSpec, CliError> {
        Self::require(&self.optimize, "optimize")
    }
}

fn q(text: &str, kind: Kind, field: &str) -> Result<f64, CliError> {
    parse(text, kind).map_err(|e| CliError::Config(format!("{field}: {e}")))
}

fn qs(items: &[String], kind: Kind, field: &str) -> Result<Vec<f64>, CliError> {
    items
        .iter()
        .enumerate()
        .map(|(i, t)| q(t, kind, &format!("{field}[{i}]")))
        .collect()
}

pub fn load_scenario(path: &Path) -> Result<ExperimentConfig, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    parse_config(&text, &base)
}

/// Parses and validates a config; relative signal paths resolve against `base`.
pub fn parse_config(text: &str, base: &Path) -> Result<ExperimentConfig, CliError> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
    if raw.schema != SCHEMA {
        return Err(CliError::Config(format!(
            "schema {} is not supported (expected {SCHEMA})",
            raw.schema
        )));
    }
    let experiment = raw
        .experiment
        .as_deref()
        .map(|e| {
            Experiment::from_name(e)
                .ok_or_else(|| CliError::Config(format!("unknown experiment `{e}`")))
        })
        .transpose()?;

    let c = match &raw.propagation_speed {
        Some(t) => q(t, Kind::Speed, "propagation_speed")?,
        None => SPEED_OF_LIGHT,
    };

    let mut series = None;
    let signal = match &raw.signal {
        Some(sig) => {
            let (summary, s) = build_signal(sig, base)?;
            series = s;
            Some(summary)
        }
        None => None,
    };
    let array = raw.array.as_ref().map(build_array).transpose()?;

    let scenario = match (signal, array) {
        (Some(signal), Some(array)) => Some(build_scenario(&raw, signal, array, c)?),
        (None, None) => {
            if !raw.anchor.is_empty() || raw.pose.is_some() || raw.motion.is_some() {
                return Err(CliError::Config(
                    "scenario keys given without [signal] and [array]".into(),
                ));
            }
            None
        }
        (None, Some(_)) => return Err(CliError::Config("missing [signal] section".into())),
        (Some(_), None) => return Err(CliError::Config("missing [array] section".into())),
    };

    let grid = raw
        .grid
        .as_ref()
        .map(|g| -> Result<GridSpec, CliError> {
            let spec = GridSpec {
                x: (
                    q(&g.x_min, Kind::Length, "grid.x_min")?,
                    q(&g.x_max, Kind::Length, "grid.x_max")?,
                ),
                y: (
                    q(&g.y_min, Kind::Length, "grid.y_min")?,
                    q(&g.y_max, Kind::Length, "grid.y_max")?,
                ),
                step: q(&g.step, Kind::Length, "grid.step")?,
            };
            if !(spec.step > 0.0) || spec.xs().len() < 2 || spec.ys().len() < 2 {
                return Err(CliError::Config(
                    "grid needs a positive step and at least 2 points per axis".into(),
                ));
            }
            Ok(spec)
        })
        .transpose()?;

    let sweep = raw
        .sweep
        .as_ref()
        .map(|s| -> Result<SweepSpec, CliError> {
            if s.points < 2 {
                return Err(CliError::Config("sweep.points must be at least 2".into()));
            }
            Ok(SweepSpec {
                psi: (
                    q(&s.psi_min, Kind::Angle, "sweep.psi_min")?,
                    q(&s.psi_max, Kind::Angle, "sweep.psi_max")?,
                ),
                points: s.points,
                betas: match &s.betas {
                    Some(b) => qs(b, Kind::Frequency, "sweep.betas")?,
                    None => Vec::new(),
                },
            })
        })
        .transpose()?;

    let mc = raw
        .mc
        .as_ref()
        .map(|m| -> Result<McSpec, CliError> {
            if m.trials == 0 || m.snrs.is_empty() || m.betas.is_empty() {
                return Err(CliError::Config("mc needs trials, snrs and betas".into()));
            }
            Ok(McSpec {
                trials: m.trials,
                seed: m.seed,
                range: q(&m.range, Kind::Length, "mc.range")?,
                snrs: qs(&m.snrs, Kind::Snr, "mc.snrs")?,
                betas: qs(&m.betas, Kind::Frequency, "mc.betas")?,
                directions: (
                    q(&m.direction_min, Kind::Angle, "mc.direction_min")?,
                    q(&m.direction_max, Kind::Angle, "mc.direction_max")?,
                ),
            })
        })
        .transpose()?;

    let compare = raw
        .compare
        .as_ref()
        .map(|c| -> Result<CompareSpec, CliError> {
            if c.points < 2 || c.elements.is_empty() {
                return Err(CliError::Config(
                    "compare needs elements and at least 2 points".into(),
                ));
            }
            Ok(CompareSpec {
                elements: c.elements.clone(),
                diameter: q(&c.diameter, Kind::Length, "compare.diameter")?,
                points: c.points,
            })
        })
        .transpose()?;

    let optimize = raw
        .optimize
        .as_ref()
        .map(|o| -> Result<OptimizeSpec, CliError> {
            let known = match o.objective.as_str() {
                "known" => true,
                "unknown" => false,
                other => {
                    return Err(CliError::Config(format!(
                        "optimize.objective `{other}` (known | unknown)"
                    )))
                }
            };
            Ok(OptimizeSpec {
                known,
                restarts: o.restarts.max(1),
                seed: o.seed,
            })
        })
        .transpose()?;

    Ok(ExperimentConfig {
        experiment,
        scenario,
        series,
        grid,
        sweep,
        mc,
        compare,
        optimize,
        rank_seed: raw.rank.and_then(|r| r.seed),
        oracle_scenarios: raw.oracle.and_then(|o| o.scenarios),
    })
}

fn build_signal(
    sig: &RawSignal,
    base: &Path,
) -> Result<(SignalSummary, Option<ComplexSampleSeries>), CliError> {
    let carrier = q(&sig.carrier, Kind::Frequency, "signal.carrier")?;
    if let Some(file) = &sig.file {
        if sig.beta.is_some() || sig.bcc.is_some() || sig.trms.is_some() {
            return Err(CliError::Config(
                "signal.file replaces beta, bcc and trms; drop them".into(),
            ));
        }
        let mut p = PathBuf::from(file);
        if p.is_relative() {
            p = base.join(p);
        }
        let series = read_signal_file(&p)?;
        let summary = summarize(&series, carrier)?;
        return Ok((summary, Some(series)));
    }
    let beta = sig
        .beta
        .as_deref()
        .ok_or_else(|| CliError::Config("signal.beta is required without signal.file".into()))?;
    let mut summary = SignalSummary::new(q(beta, Kind::Frequency, "signal.beta")?, carrier);
    summary.bcc = sig.bcc.unwrap_or(0.0);
    if let Some(t) = &sig.trms {
        summary.trms = Some(q(t, Kind::Time, "signal.trms")?);
    }
    summary.check()?;
    Ok((summary, None))
}

fn build_array(a: &RawArray) -> Result<AntennaArray, CliError> {
    let sized = |kind: &str| -> Result<(usize, f64), CliError> {
        let n = a
            .elements
            .ok_or_else(|| CliError::Config(format!("array.elements is required for {kind}")))?;
        let d = a
            .diameter
            .as_deref()
            .ok_or_else(|| CliError::Config(format!("array.diameter is required for {kind}")))?;
        if a.points.is_some() {
            return Err(CliError::Config(format!(
                "array.points is only for kind = \"custom\", not {kind}"
            )));
        }
        Ok((n, q(d, Kind::Length, "array.diameter")?))
    };
    let spec = match a.kind.as_str() {
        "ula" => {
            let (elements, diameter) = sized("ula")?;
            ArraySpec::Ula { elements, diameter }
        }
        "uca" => {
            let (elements, diameter) = sized("uca")?;
            ArraySpec::Uca { elements, diameter }
        }
        "custom" => {
            if a.elements.is_some() || a.diameter.is_some() {
                return Err(CliError::Config(
                    "custom arrays take only array.points".into(),
                ));
            }
            let pts = a
                .points
                .as_ref()
                .ok_or_else(|| CliError::Config("array.points is required".into()))?;
            let coords = pts
                .iter()
                .enumerate()
                .map(|(i, [x, y])| {
                    Ok((
                        q(x, Kind::Length, &format!("array.points[{i}].x"))?,
                        q(y, Kind::Length, &format!("array.points[{i}].y"))?,
                    ))
                })
                .collect::<Result<Vec<_>, CliError>>()?;
            ArraySpec::Custom(AntennaArray::from_body_coords(&coords)?)
        }
        other => {
            return Err(CliError::Config(format!(
                "array.kind `{other}` (ula | uca | custom)"
            )))
        }
    };
    Ok(spec.build()?)
}

fn build_scenario(
    raw: &RawConfig,
    signal: SignalSummary,
    array: AntennaArray,
    c: f64,
) -> Result<Scenario, CliError> {
    let pose = match &raw.pose {
        Some(p) => ArrayPose {
            reference: Position2D::new(
                q(&p.x, Kind::Length, "pose.x")?,
                q(&p.y, Kind::Length, "pose.y")?,
            ),
            orientation: q(&p.orientation, Kind::Angle, "pose.orientation")?,
        },
        None => return Err(CliError::Config("missing [pose] section".into())),
    };
    let motion = raw
        .motion
        .as_ref()
        .map(|m| -> Result<AgentMotion, CliError> {
            Ok(AgentMotion {
                speed: q(&m.speed, Kind::Speed, "motion.speed")?,
                direction: q(&m.direction, Kind::Angle, "motion.direction")?,
                reference_time: q(&m.reference_time, Kind::Time, "motion.reference_time")?,
            })
        })
        .transpose()?;
    let k = raw.knowledge.as_ref();
    let d = KnowledgeFlags::default();
    let knowledge = KnowledgeFlags {
        phase: k.and_then(|k| k.phase).unwrap_or(d.phase),
        orientation: k.and_then(|k| k.orientation).unwrap_or(d.orientation),
        direction: k.and_then(|k| k.direction).unwrap_or(d.direction),
        speed: k.and_then(|k| k.speed).unwrap_or(d.speed),
    };
    let anchors = raw
        .anchor
        .iter()
        .enumerate()
        .map(|(j, a)| -> Result<AnchorNode, CliError> {
            let mut node = AnchorNode::los(
                Position2D::new(
                    q(&a.x, Kind::Length, &format!("anchor[{j}].x"))?,
                    q(&a.y, Kind::Length, &format!("anchor[{j}].y"))?,
                ),
                q(&a.snr, Kind::Snr, &format!("anchor[{j}].snr"))?,
            );
            node.poc = a.poc.unwrap_or(0.0);
            node.los = a.los.unwrap_or(true);
            Ok(node)
        })
        .collect::<Result<Vec<_>, _>>()?;
    let s = Scenario {
        anchors,
        array,
        pose,
        motion,
        knowledge,
        signal,
        c,
    };
    if s.is_dynamic() && signal.beta > signal.carrier {
        return Err(CliError::Config(format!(
            "a moving agent needs a narrowband signal: beta {} Hz exceeds f_c {} Hz",
            signal.beta, signal.carrier
        )));
    }
    if !s.anchors.is_empty() {
        validate_scenario(&s)?;
    }
    Ok(s)
}
