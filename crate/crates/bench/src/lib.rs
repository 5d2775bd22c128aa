//! Fixtures shared by the criterion benches.

use std::f64::consts::PI;

use arrayloc::array::uca;
use arrayloc::geometry::PlacementProblem;
use arrayloc::oracle::{TimeGrid, WaveformModel};
use arrayloc::signal::{band_limit, gaussian_pulse, snr_from_db, summarize};
use arrayloc::{
    AgentMotion, AnchorNode, AntennaArray, ArrayPose, ComplexSampleSeries, KnowledgeFlags,
    Position2D, Scenario, SignalSummary, SPEED_OF_LIGHT,
};

/// Agent with a 6-element UCA among `anchors` anchors on a 50 m circle.
pub fn static_scenario(anchors: usize) -> Scenario {
    let anchors = (0..anchors)
        .map(|k| {
            let a = 2.0 * PI * k as f64 / anchors as f64 + 0.3;
            AnchorNode::los(
                Position2D::from_polar(50.0, a),
                snr_from_db(20.0 + 5.0 * (k % 4) as f64),
            )
        })
        .collect();
    Scenario {
        anchors,
        array: uca(6, 1.0).unwrap(),
        pose: ArrayPose {
            reference: Position2D::new(1.0, -2.0),
            orientation: 0.4,
        },
        motion: None,
        knowledge: KnowledgeFlags::default(),
        signal: SignalSummary::new(1e6, 1e8),
        c: SPEED_OF_LIGHT,
    }
}

pub fn moving_scenario(anchors: usize) -> Scenario {
    let mut s = static_scenario(anchors);
    s.motion = Some(AgentMotion {
        speed: 30.0,
        direction: 0.2,
        reference_time: 0.0,
    });
    s.signal = s.signal.with_trms(1e-2);
    s
}

pub fn placement(anchors: usize) -> PlacementProblem {
    PlacementProblem {
        lambda: (0..anchors)
            .map(|k| snr_from_db(28.0 + (k % 3) as f64))
            .collect(),
        range: (0..anchors).map(|k| 40.0 + 5.0 * (k % 4) as f64).collect(),
        beta: 2e6,
        carrier: 2e8,
        saaf: 0.125,
        elements: 6,
    }
}

/// Small scaled-unit waveform model: 3 elements, 2 anchors, Gaussian pulse.
pub fn oracle_model() -> (WaveformModel, TimeGrid, Scenario) {
    let series: ComplexSampleSeries = gaussian_pulse(96, 32.0, 0.0, 1.5, 1.0 / (2.0 * PI));
    let array = AntennaArray::from_body_coords(&[(0.0, 0.0), (0.5, 0.1), (-0.1, 0.4)]).unwrap();
    let s = Scenario {
        anchors: vec![
            AnchorNode::los(Position2D::new(20.0, 3.0), 400.0),
            AnchorNode::los(Position2D::new(-12.0, 15.0), 250.0),
        ],
        array,
        pose: ArrayPose {
            reference: Position2D::new(0.3, -0.2),
            orientation: 0.4,
        },
        motion: None,
        knowledge: KnowledgeFlags::default(),
        signal: summarize(&series, 50.0).unwrap(),
        c: 100.0,
    };
    let grid = TimeGrid::for_band(0.0, 4.0, 50.0, band_limit(&series)).unwrap();
    let model = WaveformModel::new(&s, &series, &[0.2, 0.9], 1.0, &grid).unwrap();
    (model, grid, s)
}
