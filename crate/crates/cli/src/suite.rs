//! Bundled scaled-unit scenarios that pit every closed form against the waveform oracle.

use std::f64::consts::PI;

use arrayloc::efim::{
    efim_dynamic_all_unknown, efim_dynamic_known, efim_dynamic_orient_dir_unknown,
    efim_static_full, efim_static_orient_known, efim_static_orient_unknown, schur_complement,
    DynamicMode, StaticMode,
};
use arrayloc::linalg::{equilibrated_error, relative_spectral_error, whitened_gap};
use arrayloc::model::PathComponent;
use arrayloc::oracle::{
    effective_poc, numerical_fim, real_passband_fim, Entry, ParameterVector, TimeGrid,
    WaveformModel,
};
use arrayloc::signal::{gaussian_pulse, summarize};
use arrayloc::{
    AgentMotion, AnchorNode, AntennaArray, ArrayPose, ComplexSampleSeries, KnowledgeFlags,
    Position2D, Scenario,
};
use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::table::ResultTable;
use crate::CliError;

#[derive(Clone, Debug)]
pub struct OracleScenario {
    pub name: &'static str,
    pub scenario: Scenario,
    pub series: ComplexSampleSeries,
    pub phases: Vec<f64>,
    pub grid: TimeGrid,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CheckRow {
    pub check: String,
    pub scenario: String,
    pub metric: &'static str,
    pub error: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl CheckRow {
    fn new(check: &str, scenario: &str, metric: &'static str, error: f64, tolerance: f64) -> Self {
        Self {
            check: check.into(),
            scenario: scenario.into(),
            metric,
            error,
            tolerance,
            pass: error.is_finite() && error <= tolerance,
        }
    }
}

const STATIC_C: f64 = 100.0;
const STATIC_FC: f64 = 50.0;
const DYN_C: f64 = 200.0;
const DYN_FC: f64 = 100.0;

fn anchors3() -> Vec<AnchorNode> {
    vec![
        AnchorNode::los(Position2D::new(20.0, 3.0), 1000.0),
        AnchorNode::los(Position2D::new(-6.0, 18.0), 800.0),
        AnchorNode::los(Position2D::new(-5.0, -21.0), 1500.0),
    ]
}

fn body(points: &[(f64, f64)]) -> AntennaArray {
    AntennaArray::from_body_coords(points)
        .expect("distinct elements")
        .centered()
}

fn static_pulse(offset: f64) -> ComplexSampleSeries {
    let sigma = 1.0 / (4.0 * PI * 0.5);
    let g = gaussian_pulse(96, 32.0, 0.0, 1.5, sigma);
    if offset == 0.0 {
        return g;
    }
    let samples = g
        .samples
        .iter()
        .enumerate()
        .map(|(n, v)| v * Complex64::from_polar(1.0, 2.0 * PI * offset * g.time(n)))
        .collect();
    ComplexSampleSeries::new(samples, g.sample_rate, g.t0).expect("finite samples")
}

fn dynamic_pulse(asymmetric: bool) -> ComplexSampleSeries {
    let sigma = 1.0 / (4.0 * PI * 0.25);
    if !asymmetric {
        return gaussian_pulse(192, 32.0, 0.0, 3.0, sigma);
    }
    ComplexSampleSeries::from_fn(192, 32.0, 0.0, |t| {
        let x = (t - 3.0) / sigma;
        let y = (t - 3.4) / sigma;
        Complex64::new((-0.25 * x * x).exp() + 0.5 * (-0.25 * y * y).exp(), 0.0)
    })
}

fn make(
    name: &'static str,
    anchors: Vec<AnchorNode>,
    array: AntennaArray,
    pose: ArrayPose,
    motion: Option<AgentMotion>,
    series: ComplexSampleSeries,
    (c, fc, duration): (f64, f64, f64),
) -> OracleScenario {
    let signal = summarize(&series, fc).expect("valid pulse");
    let phases = [0.1, 0.2, 0.3][..anchors.len()].to_vec();
    let grid =
        TimeGrid::for_band(0.0, duration, fc, signal.band_limit.unwrap_or(0.0)).expect("grid");
    OracleScenario {
        name,
        scenario: Scenario {
            anchors,
            array,
            pose,
            motion,
            knowledge: KnowledgeFlags::default(),
            signal,
            c,
        },
        series,
        phases,
        grid,
    }
}

/// Five static scenarios: 1 to 3 LOS anchors, 1 to 4 antennas, one with a second path.
pub fn static_scenarios() -> Vec<OracleScenario> {
    let units = (STATIC_C, STATIC_FC, 4.0);
    let mut with_echo = anchors3();
    // Second path far behind the first: no overlap.
    with_echo[1].paths.push(PathComponent {
        amplitude: 0.6,
        range_bias: 160.0,
        angle_bias: 0.3,
    });
    vec![
        make(
            "static-1a-1k",
            vec![AnchorNode::los(Position2D::new(20.0, 3.0), 1000.0)],
            AntennaArray::single(),
            ArrayPose {
                reference: Position2D::new(0.3, -0.2),
                orientation: 0.4,
            },
            None,
            static_pulse(0.0),
            units,
        ),
        make(
            "static-2a-2k",
            anchors3()[..2].to_vec(),
            body(&[(-0.25, 0.0), (0.25, 0.05)]),
            ArrayPose {
                reference: Position2D::new(-0.5, 0.7),
                orientation: 1.1,
            },
            None,
            static_pulse(0.0),
            units,
        ),
        make(
            "static-3a-3k",
            anchors3(),
            body(&[(0.0, 0.0), (0.5, 0.1), (-0.1, 0.4)]),
            ArrayPose {
                reference: Position2D::new(0.3, -0.2),
                orientation: 0.4,
            },
            None,
            static_pulse(0.0),
            units,
        ),
        make(
            "static-3a-4k-echo",
            with_echo,
            body(&[(-0.3, -0.2), (0.3, -0.15), (0.25, 0.3), (-0.2, 0.25)]),
            ArrayPose {
                reference: Position2D::new(0.0, 0.5),
                orientation: -0.7,
            },
            None,
            static_pulse(0.0),
            (STATIC_C, STATIC_FC, 5.5),
        ),
        make(
            "static-2a-4k-offset",
            vec![anchors3()[0].clone(), anchors3()[2].clone()],
            body(&[(-0.3, 0.0), (-0.1, 0.2), (0.1, -0.2), (0.35, 0.05)]),
            ArrayPose {
                reference: Position2D::new(1.0, 1.0),
                orientation: 2.0,
            },
            None,
            static_pulse(0.3),
            units,
        ),
    ]
}

/// Two moving-agent scenarios: a symmetric pulse and an asymmetric one with an off-centre reference time.
pub fn dynamic_scenarios() -> Vec<OracleScenario> {
    let array = body(&[(-0.25, -0.1), (0.25, -0.1), (0.0, 0.2)]);
    let pose = ArrayPose {
        reference: Position2D::new(0.3, -0.2),
        orientation: 0.4,
    };
    let units = (DYN_C, DYN_FC, 6.5);
    vec![
        make(
            "dynamic-symmetric",
            anchors3(),
            array.clone(),
            pose,
            Some(AgentMotion {
                speed: 0.2,
                direction: 0.7,
                reference_time: 3.0,
            }),
            dynamic_pulse(false),
            units,
        ),
        make(
            "dynamic-asymmetric",
            anchors3(),
            array,
            pose,
            Some(AgentMotion {
                speed: 0.2,
                direction: 0.7,
                reference_time: 2.2,
            }),
            dynamic_pulse(true),
            units,
        ),
    ]
}

pub fn bundled_names() -> Vec<&'static str> {
    let mut names: Vec<&'static str> = static_scenarios().iter().map(|s| s.name).collect();
    names.extend(dynamic_scenarios().iter().map(|s| s.name));
    names.push("prop-real-complex");
    names
}

struct Oracle<'a> {
    sc: &'a OracleScenario,
}

impl Oracle<'_> {
    fn fim(&self, s: &Scenario) -> Result<(DMatrix<f64>, ParameterVector), CliError> {
        let model = WaveformModel::new(s, &self.sc.series, &self.sc.phases, 1.0, &self.sc.grid)?;
        let params = ParameterVector::unknowns(s);
        Ok((numerical_fim(&model, &params, &self.sc.grid)?, params))
    }

    fn keep(
        f: &DMatrix<f64>,
        p: &ParameterVector,
        keep: &[Entry],
    ) -> Result<DMatrix<f64>, CliError> {
        let idx: Vec<usize> = keep
            .iter()
            .map(|e| p.index_of(*e).expect("entry is unknown"))
            .collect();
        Ok(schur_complement(f, &idx)?.matrix)
    }
}

const POS: [Entry; 2] = [Entry::X, Entry::Y];

fn run_static(sc: &OracleScenario) -> Result<Vec<CheckRow>, CliError> {
    let o = Oracle { sc };
    let name = sc.name;
    let mut rows = Vec::new();
    let base = &sc.scenario;

    let mut full = base.clone();
    full.knowledge.phase = true;
    let (f, p) = o.fim(&full)?;
    let or = Oracle::keep(&f, &p, &POS)?;
    rows.push(CheckRow::new(
        "static-full-knowledge",
        name,
        "rel_spectral",
        relative_spectral_error(&efim_static_full(&full)?.matrix, &or),
        1e-3,
    ));

    let (f, p) = o.fim(base)?;
    let or = Oracle::keep(&f, &p, &POS)?;
    let cf = efim_static_orient_known(base, StaticMode::Exact)?.matrix;
    rows.push(CheckRow::new(
        "static-phase-unknown",
        name,
        "rel_spectral",
        relative_spectral_error(&cf, &or),
        1e-3,
    ));

    let mut un = base.clone();
    un.knowledge.orientation = false;
    let (f, p) = o.fim(&un)?;
    let (j3, j2) = efim_static_orient_unknown(&un)?;
    let o3 = Oracle::keep(&f, &p, &[Entry::X, Entry::Y, Entry::Orientation])?;
    let o2 = Oracle::keep(&f, &p, &POS)?;
    rows.push(CheckRow::new(
        "static-orientation-unknown-3x3",
        name,
        "rel_spectral",
        relative_spectral_error(&j3.matrix, &o3),
        1e-3,
    ));
    rows.push(CheckRow::new(
        "static-orientation-unknown-2x2",
        name,
        "rel_spectral",
        relative_spectral_error(&j2.matrix, &o2),
        1e-3,
    ));

    for (j, a) in base.anchors.iter().enumerate() {
        if a.paths.len() > 1 {
            let model = WaveformModel::new(base, &sc.series, &sc.phases, 1.0, &sc.grid)?;
            let chi = effective_poc(&model, &sc.grid, j)?;
            rows.push(CheckRow::new(
                "separated-path-overlap",
                name,
                "abs",
                chi.abs(),
                1e-6,
            ));
        }
    }
    Ok(rows)
}

fn run_dynamic(sc: &OracleScenario) -> Result<Vec<CheckRow>, CliError> {
    let o = Oracle { sc };
    let name = sc.name;
    let mut rows = Vec::new();
    let base = &sc.scenario;
    let b = sc.scenario.signal.band_limit.unwrap_or(f64::INFINITY);
    let ratio = b / base.signal.carrier;
    let band = (1.0 + 3.17 * ratio).powi(2) - 1.0 + 1e-3;

    let (f, p) = o.fim(base)?;
    let or = Oracle::keep(&f, &p, &POS)?;
    let approx = efim_dynamic_known(base, DynamicMode::Approx)?.matrix;
    let exact = efim_dynamic_known(base, DynamicMode::ExactCoeffs(&sc.series))?.matrix;
    rows.push(CheckRow::new(
        "dynamic-narrowband",
        name,
        "whitened_gap",
        whitened_gap(&approx, &or),
        band,
    ));
    rows.push(CheckRow::new(
        "dynamic-exact-coefficients",
        name,
        "rel_spectral",
        relative_spectral_error(&exact, &or),
        1e-3,
    ));

    rows.push(CheckRow::new(
        "narrowband-precondition",
        name,
        "B/f_c",
        ratio,
        0.02,
    ));
    let block_tol = 1e-2;
    let mut hd = base.clone();
    hd.knowledge.orientation = false;
    hd.knowledge.direction = false;
    let (f, p) = o.fim(&hd)?;
    let (j4, j2) = efim_dynamic_orient_dir_unknown(&hd)?;
    let o4 = Oracle::keep(
        &f,
        &p,
        &[Entry::X, Entry::Y, Entry::Orientation, Entry::Direction],
    )?;
    let o2 = Oracle::keep(&f, &p, &POS)?;
    rows.push(CheckRow::new(
        "dynamic-heading-unknown-4x4",
        name,
        "rel_spectral",
        relative_spectral_error(&j4.matrix, &o4),
        block_tol,
    ));
    rows.push(CheckRow::new(
        "dynamic-heading-unknown-4x4",
        name,
        "equilibrated",
        equilibrated_error(&j4.matrix, &o4),
        block_tol,
    ));
    rows.push(CheckRow::new(
        "dynamic-heading-unknown-2x2",
        name,
        "rel_spectral",
        relative_spectral_error(&j2.matrix, &o2),
        block_tol,
    ));

    let mut vu = hd.clone();
    vu.knowledge.speed = false;
    let (f, p) = o.fim(&vu)?;
    let j5 = efim_dynamic_all_unknown(&vu)?.matrix;
    let o5 = Oracle::keep(
        &f,
        &p,
        &[
            Entry::X,
            Entry::Y,
            Entry::Orientation,
            Entry::Direction,
            Entry::Speed,
        ],
    )?;
    rows.push(CheckRow::new(
        "dynamic-velocity-unknown-5x5",
        name,
        "rel_spectral",
        relative_spectral_error(&j5, &o5),
        block_tol,
    ));
    rows.push(CheckRow::new(
        "dynamic-velocity-unknown-5x5",
        name,
        "equilibrated",
        equilibrated_error(&j5, &o5),
        block_tol,
    ));
    Ok(rows)
}

/// Real passband against complex envelope FIM on a bandlimited scenario.
fn run_real_complex() -> Result<Vec<CheckRow>, CliError> {
    let sc = &static_scenarios()[2];
    let model = WaveformModel::new(&sc.scenario, &sc.series, &sc.phases, 1.0, &sc.grid)?;
    let params = ParameterVector::unknowns(&sc.scenario);
    let fc = numerical_fim(&model, &params, &sc.grid)?;
    let fr = real_passband_fim(&model, &params, &sc.grid)?;
    Ok(vec![
        CheckRow::new(
            "real-vs-complex-passband",
            "prop-real-complex",
            "rel_spectral",
            relative_spectral_error(&fr, &fc),
            1e-4,
        ),
        CheckRow::new(
            "real-vs-complex-passband",
            "prop-real-complex",
            "equilibrated",
            equilibrated_error(&fr, &fc),
            1e-4,
        ),
    ])
}

/// Runs the named scenarios, or all of them.
pub fn run(names: Option<&[String]>) -> Result<Vec<CheckRow>, CliError> {
    let wanted = |n: &str| names.is_none_or(|ns| ns.iter().any(|x| x == n));
    if let Some(ns) = names {
        let known = bundled_names();
        if let Some(bad) = ns.iter().find(|n| !known.contains(&n.as_str())) {
            return Err(CliError::Config(format!(
                "unknown oracle scenario `{bad}` (known: {})",
                known.join(", ")
            )));
        }
    }
    let mut rows = Vec::new();
    for sc in static_scenarios().iter().filter(|s| wanted(s.name)) {
        rows.extend(run_static(sc)?);
    }
    for sc in dynamic_scenarios().iter().filter(|s| wanted(s.name)) {
        rows.extend(run_dynamic(sc)?);
    }
    if wanted("prop-real-complex") {
        rows.extend(run_real_complex()?);
    }
    Ok(rows)
}

pub fn to_table(rows: &[CheckRow]) -> ResultTable {
    let mut t = ResultTable::new(&[
        ("check", ""),
        ("scenario", ""),
        ("metric", ""),
        ("error", ""),
        ("tolerance", ""),
        ("pass", ""),
    ]);
    for r in rows {
        t.push(vec![
            r.check.clone().into(),
            r.scenario.clone().into(),
            r.metric.into(),
            r.error.into(),
            r.tolerance.into(),
            r.pass.into(),
        ]);
    }
    t
}
