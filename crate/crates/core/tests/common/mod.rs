#![allow(dead_code)]

use std::f64::consts::PI;

use arrayloc::oracle::{TimeGrid, WaveformModel};
use arrayloc::signal::{gaussian_pulse, summarize};
use arrayloc::{
    AnchorNode, AntennaArray, ArrayPose, ComplexSampleSeries, KnowledgeFlags, Position2D, Scenario,
};
use num_complex::Complex64;

pub const C: f64 = 100.0;
pub const FC: f64 = 50.0;

/// Gaussian pulse with effective bandwidth 0.5 Hz centred at 1.5 s, optionally frequency offset.
pub fn pulse(offset: f64) -> ComplexSampleSeries {
    let g = gaussian_pulse(96, 32.0, 0.0, 1.5, 1.0 / (4.0 * PI * 0.5));
    let samples = g
        .samples
        .iter()
        .enumerate()
        .map(|(n, v)| v * Complex64::from_polar(1.0, 2.0 * PI * offset * g.time(n)))
        .collect();
    ComplexSampleSeries::new(samples, g.sample_rate, g.t0).unwrap()
}

pub fn scenario(
    anchors: Vec<AnchorNode>,
    array: AntennaArray,
    series: &ComplexSampleSeries,
    carrier: f64,
) -> Scenario {
    Scenario {
        anchors,
        array,
        pose: ArrayPose {
            reference: Position2D::new(0.3, -0.2),
            orientation: 0.4,
        },
        motion: None,
        knowledge: KnowledgeFlags::default(),
        signal: summarize(series, carrier).unwrap(),
        c: C,
    }
}

pub fn grid(s: &Scenario, series: &ComplexSampleSeries, duration: f64) -> TimeGrid {
    let band = arrayloc::signal::band_limit(series);
    TimeGrid::for_band(0.0, duration, s.signal.carrier, band).unwrap()
}

pub fn model(s: &Scenario, series: &ComplexSampleSeries, grid: &TimeGrid) -> WaveformModel {
    let phases: Vec<f64> = (0..s.anchors.len()).map(|j| 0.2 + 0.7 * j as f64).collect();
    WaveformModel::new(s, series, &phases, 1.0, grid).unwrap()
}

pub fn three_element() -> AntennaArray {
    AntennaArray::from_body_coords(&[(0.0, 0.0), (0.5, 0.1), (-0.1, 0.4)]).unwrap()
}
