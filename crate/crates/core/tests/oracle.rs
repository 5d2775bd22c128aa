mod common;

use std::f64::consts::PI;

use arrayloc::linalg::{relative_spectral_error, sym_eigenvalues};
use arrayloc::model::{path_delay, DelayGeometry};
use arrayloc::oracle::{
    effective_poc, numerical_fim, oracle_efim, real_passband_fim, Entry, ParameterVector, TimeGrid,
    WaveformModel,
};
use arrayloc::{AgentMotion, AnchorNode, AntennaArray, PathComponent, Position2D};
use common::*;

fn one_anchor(snr: f64) -> Vec<AnchorNode> {
    vec![AnchorNode::los(Position2D::new(20.0, 3.0), snr)]
}

#[test]
fn delay_only_information_is_full_knowledge_ranging() {
    let series = pulse(0.3);
    let s = scenario(one_anchor(500.0), AntennaArray::single(), &series, FC);
    let g = grid(&s, &series, 4.0);
    let m = model(&s, &series, &g);
    let p = ParameterVector {
        entries: vec![Entry::RangeBias(0, 0)],
    };
    // d/db = (1/c) d/dtau
    let j_tau = numerical_fim(&m, &p, &g).unwrap()[(0, 0)] * C * C;
    let sig = s.signal;
    let want = 8.0 * PI * PI * 500.0 * (sig.beta.powi(2) + FC * FC + 2.0 * sig.bcc * sig.beta * FC);
    assert!(
        sig.bcc.abs() > 0.1,
        "offset pulse should have a visible BCC"
    );
    assert!(((j_tau - want) / want).abs() < 1e-4, "{j_tau} vs {want}");
}

#[test]
fn phase_only_information() {
    let series = pulse(0.0);
    let s = scenario(one_anchor(300.0), three_element(), &series, FC);
    let g = grid(&s, &series, 4.0);
    let m = model(&s, &series, &g);
    let p = ParameterVector {
        entries: vec![Entry::Phase(0)],
    };
    let j = numerical_fim(&m, &p, &g).unwrap()[(0, 0)];
    let want = 2.0 * 3.0 * 300.0;
    assert!(((j - want) / want).abs() < 1e-6, "{j} vs {want}");
}

#[test]
fn fim_is_symmetric_psd() {
    let series = pulse(0.0);
    let mut anchors = one_anchor(400.0);
    anchors.push(AnchorNode::los(Position2D::new(-12.0, 15.0), 250.0));
    let s = scenario(anchors, three_element(), &series, FC);
    let g = grid(&s, &series, 4.0);
    let m = model(&s, &series, &g);
    let f = numerical_fim(&m, &ParameterVector::unknowns(&s), &g).unwrap();
    let norm = f.abs().max();
    assert!((&f - f.transpose()).abs().max() <= 1e-8 * norm);
    let floor = sym_eigenvalues(&f)
        .into_iter()
        .fold(f64::INFINITY, f64::min);
    assert!(floor >= -1e-6 * norm, "eigenvalue floor {floor}");
}

#[test]
fn waveform_is_linear_in_amplitude() {
    let series = pulse(0.0);
    let s1 = scenario(one_anchor(100.0), three_element(), &series, FC);
    let s4 = scenario(one_anchor(400.0), three_element(), &series, FC);
    let g = grid(&s1, &series, 4.0);
    let a = model(&s1, &series, &g).mean_waveform(&g, 0, 1).unwrap();
    let b = model(&s4, &series, &g).mean_waveform(&g, 0, 1).unwrap();
    let peak = a.iter().map(|v| v.norm()).fold(0.0, f64::max);
    for (x, y) in a.iter().zip(&b) {
        assert!((2.0 * x - y).norm() <= 1e-12 * peak);
    }
}

#[test]
fn still_agent_uses_static_delays() {
    let g = DelayGeometry {
        range: 25.0,
        bearing: 1.1,
        offset: 0.4,
        offset_angle: 0.3,
        orientation: -0.2,
    };
    let path = PathComponent {
        amplitude: 1.0,
        range_bias: 2.5,
        angle_bias: 0.1,
    };
    for dir in [0.0, 1.0, 2.5] {
        let still = AgentMotion {
            speed: 0.0,
            direction: dir,
            reference_time: 0.7,
        };
        for t in [0.0, 0.9, 4.0] {
            let tau = path_delay(&g, &path, &still, C, t);
            let want = (25.0 - 0.4 * (1.1 + 0.1 + 0.2 - 0.3_f64).cos() + 2.5) / C;
            assert_eq!(tau, want);
        }
    }
}

#[test]
fn grid_refinement_converges() {
    let series = pulse(0.0);
    let s = scenario(one_anchor(400.0), three_element(), &series, FC);
    let g = grid(&s, &series, 4.0);
    let fine = TimeGrid::new(g.start, g.end() - g.start, 2 * g.len).unwrap();
    let p = ParameterVector::unknowns(&s);
    let a = numerical_fim(&model(&s, &series, &g), &p, &g).unwrap();
    let b = numerical_fim(&model(&s, &series, &fine), &p, &fine).unwrap();
    let norm = b.abs().max();
    for (x, y) in a.iter().zip(b.iter()) {
        if y.abs() > 1e-6 * norm {
            assert!(((x - y) / y).abs() < 1e-4, "{x} vs {y}");
        }
    }
}

#[test]
fn noise_density_scales_both_fims() {
    let series = pulse(0.0);
    let s = scenario(one_anchor(400.0), three_element(), &series, FC);
    // Same amplitude at twice the noise density means half the SNR.
    let s_half = scenario(one_anchor(200.0), three_element(), &series, FC);
    let g = grid(&s, &series, 4.0);
    let p = ParameterVector::unknowns(&s);
    let m1 = model(&s, &series, &g);
    let phases: Vec<f64> = vec![0.2];
    let m2 = WaveformModel::new(&s_half, &series, &phases, 2.0, &g).unwrap();
    for f in [numerical_fim, real_passband_fim] {
        let a = f(&m1, &p, &g).unwrap();
        let b = f(&m2, &p, &g).unwrap();
        assert!(relative_spectral_error(&(b * 2.0), &a) < 1e-12);
    }
}

#[test]
fn aliased_pulse_breaks_real_complex_agreement() {
    // Pulse band edge well above a 2 Hz carrier.
    let series = pulse(0.0);
    let s = scenario(one_anchor(400.0), three_element(), &series, 2.0);
    let g = grid(&s, &series, 4.0);
    let m = model(&s, &series, &g);
    let p = ParameterVector::unknowns(&s);
    let a = numerical_fim(&m, &p, &g).unwrap();
    let b = real_passband_fim(&m, &p, &g).unwrap();
    assert!(relative_spectral_error(&b, &a) > 1e-4);
}

fn echo_anchor(amplitude: f64, range_bias: f64) -> Vec<AnchorNode> {
    let mut a = AnchorNode::los(Position2D::new(-6.0, 18.0), 500.0);
    a.paths.push(PathComponent {
        amplitude,
        range_bias,
        angle_bias: 0.0,
    });
    vec![a]
}

fn poc(amplitude: f64, range_bias: f64) -> f64 {
    let series = pulse(0.0);
    let s = scenario(
        echo_anchor(amplitude, range_bias),
        three_element(),
        &series,
        FC,
    );
    let g = grid(&s, &series, 5.5);
    effective_poc(&model(&s, &series, &g), &g, 0).unwrap()
}

#[test]
fn poc_of_duplicate_path_is_one() {
    let chi = poc(0.5, 0.0);
    assert!(chi > 1.0 - 1e-6, "{chi}");
}

#[test]
fn poc_of_separated_path_is_zero() {
    let chi = poc(0.6, 160.0);
    assert!(chi < 1e-6, "{chi}");
}

#[test]
fn poc_ignores_second_path_amplitude() {
    let a = poc(0.3, 8.0);
    let b = poc(0.8, 8.0);
    assert!(
        a > 0.01,
        "overlapping echo should cost information, got {a}"
    );
    assert!((a - b).abs() < 1e-6, "{a} vs {b}");
}

#[test]
fn oracle_matches_phase_only_elimination() {
    // Eliminating only the phase of a single-element receiver leaves the envelope information.
    let series = pulse(0.0);
    let s = scenario(one_anchor(500.0), AntennaArray::single(), &series, FC);
    let g = grid(&s, &series, 4.0);
    let m = model(&s, &series, &g);
    let p = ParameterVector {
        entries: vec![Entry::RangeBias(0, 0), Entry::Phase(0)],
    };
    let e = oracle_efim(&m, &p, &g, &[Entry::RangeBias(0, 0)]).unwrap();
    let want = 8.0 * PI * PI * 500.0 * s.signal.beta.powi(2) / (C * C);
    let got = e.matrix[(0, 0)];
    assert!(((got - want) / want).abs() < 1e-3, "{got} vs {want}");
}
