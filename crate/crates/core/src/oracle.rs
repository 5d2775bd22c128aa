//! Numerical FIM oracle: central differences of the sampled mean waveform.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::efim::{schur_complement, SchurOutput};
use crate::error::{Error, Result};
use crate::model::{
    anchor_range_bearing, signal_time_affine, AgentMotion, DelayGeometry, KnowledgeFlags, Scenario,
};
use crate::signal::{band_limit, spectrum, ComplexSampleSeries};

pub const REL_STEP: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TimeGrid {
    pub start: f64,
    pub dt: f64,
    pub len: usize,
}

impl TimeGrid {
    pub fn new(start: f64, duration: f64, len: usize) -> Result<Self> {
        if len < 64 || !(duration > 0.0) {
            return Err(Error::Unsupported(format!(
                "time grid needs >= 64 points, got {len}"
            )));
        }
        Ok(Self {
            start,
            dt: duration / len as f64,
            len,
        })
    }

    /// Smallest power-of-two grid over `duration` sampled at `>= 16 (f_c + B)`.
    pub fn for_band(start: f64, duration: f64, carrier: f64, band: f64) -> Result<Self> {
        let need = (16.0 * (carrier + band) * duration).ceil() as usize;
        Self::new(start, duration, need.max(64).next_power_of_two())
    }

    pub fn rate(&self) -> f64 {
        1.0 / self.dt
    }

    pub fn end(&self) -> f64 {
        self.start + self.dt * self.len as f64
    }

    fn trapz(&self, f: impl Fn(usize) -> f64) -> f64 {
        let inner: f64 = (0..self.len).map(&f).sum();
        self.dt * (inner - 0.5 * (f(0) + f(self.len - 1)))
    }
}

/// One entry of the full parameter vector.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Entry {
    X,
    Y,
    Orientation,
    Direction,
    Speed,
    Phase(usize),
    Amplitude(usize, usize),
    RangeBias(usize, usize),
    AngleBias(usize, usize),
}

/// Baseband pulse as a trigonometric polynomial over its zero-padded record.
#[derive(Clone, Debug)]
struct Baseband {
    t0: f64,
    bins: Vec<(f64, Complex64)>,
}

impl Baseband {
    fn new(series: &ComplexSampleSeries, min_period: f64) -> Self {
        let n = series.samples.len();
        let need = (min_period * series.sample_rate).ceil() as usize;
        let len = (2 * n).max(need).next_power_of_two();
        let sp = spectrum(series, len);
        let peak = sp.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max);
        let bins = sp
            .freqs
            .iter()
            .zip(&sp.coeffs)
            .filter(|(_, c)| c.norm() > 1e-15 * peak)
            .map(|(&f, &c)| (f, c / len as f64))
            .collect();
        Self {
            t0: series.t0,
            bins,
        }
    }

    /// `s0(a t_n + b)` on the grid, accumulated per bin with a phasor recurrence
    /// re-anchored every 256 samples.
    fn eval_affine(&self, a: f64, b: f64, grid: &TimeGrid, out: &mut [Complex64]) {
        out.iter_mut().for_each(|v| *v = Complex64::new(0.0, 0.0));
        let u0 = a * grid.start + b - self.t0;
        let du = a * grid.dt;
        for &(f, c) in &self.bins {
            let w = 2.0 * PI * f;
            let step = Complex64::from_polar(1.0, w * du);
            for (blk, chunk) in out.chunks_mut(256).enumerate() {
                let n0 = (blk * 256) as f64;
                let mut z = c * Complex64::from_polar(1.0, w * (u0 + n0 * du));
                for v in chunk {
                    *v += z;
                    z *= step;
                }
            }
        }
    }
}

/// Mutable part of the model: everything a parameter entry can touch.
#[derive(Clone, Debug)]
struct State {
    scenario: Scenario,
    phases: Vec<f64>,
    amplitudes: Vec<Vec<f64>>,
}

impl State {
    fn get(&self, e: Entry) -> f64 {
        let s = &self.scenario;
        let m = s.motion.unwrap_or_default();
        match e {
            Entry::X => s.pose.reference.x,
            Entry::Y => s.pose.reference.y,
            Entry::Orientation => s.pose.orientation,
            Entry::Direction => m.direction,
            Entry::Speed => m.speed,
            Entry::Phase(j) => self.phases[j],
            Entry::Amplitude(j, l) => self.amplitudes[j][l],
            Entry::RangeBias(j, l) => s.anchors[j].paths[l].range_bias,
            Entry::AngleBias(j, l) => s.anchors[j].paths[l].angle_bias,
        }
    }

    fn shifted(&self, e: Entry, h: f64) -> State {
        let mut st = self.clone();
        let s = &mut st.scenario;
        match e {
            Entry::X => s.pose.reference.x += h,
            Entry::Y => s.pose.reference.y += h,
            Entry::Orientation => s.pose.orientation += h,
            Entry::Direction => s.motion.get_or_insert_with(AgentMotion::default).direction += h,
            Entry::Speed => s.motion.get_or_insert_with(AgentMotion::default).speed += h,
            Entry::Phase(j) => st.phases[j] += h,
            Entry::Amplitude(j, l) => st.amplitudes[j][l] += h,
            Entry::RangeBias(j, l) => s.anchors[j].paths[l].range_bias += h,
            Entry::AngleBias(j, l) => s.anchors[j].paths[l].angle_bias += h,
        }
        st
    }
}

/// Received mean waveforms for a scenario driven by a sampled baseband pulse.
/// First-path amplitudes follow from the anchor SNRs; later paths keep their ratio to the first.
#[derive(Clone, Debug)]
pub struct WaveformModel {
    state: State,
    baseband: Baseband,
    pub n0: f64,
    pub energy: f64,
    pub band: f64,
}

impl WaveformModel {
    pub fn new(
        scenario: &Scenario,
        series: &ComplexSampleSeries,
        phases: &[f64],
        n0: f64,
        grid: &TimeGrid,
    ) -> Result<Self> {
        if phases.len() != scenario.anchors.len() {
            return Err(Error::InvalidScenario(
                "one initial phase per anchor".into(),
            ));
        }
        if !(n0 > 0.0) {
            return Err(Error::InvalidScenario(format!("noise density {n0}")));
        }
        let energy = series.energy();
        let amplitudes = scenario
            .anchors
            .iter()
            .map(|a| {
                let a1 = (a.snr * n0 / energy).sqrt();
                let base = a.paths.first().map_or(1.0, |p| p.amplitude);
                a.paths.iter().map(|p| a1 * p.amplitude / base).collect()
            })
            .collect();
        let record = series.samples.len() as f64 / series.sample_rate;
        let baseband = Baseband::new(series, record + (grid.end() - grid.start));
        Ok(Self {
            state: State {
                scenario: scenario.clone(),
                phases: phases.to_vec(),
                amplitudes,
            },
            baseband,
            n0,
            energy,
            band: band_limit(series),
        })
    }

    pub fn scenario(&self) -> &Scenario {
        &self.state.scenario
    }

    pub fn mean_waveform(&self, grid: &TimeGrid, j: usize, k: usize) -> Result<Vec<Complex64>> {
        let mut out = vec![Complex64::new(0.0, 0.0); grid.len];
        let mut tmp = vec![Complex64::new(0.0, 0.0); grid.len];
        self.waveform_into(&self.state, grid, j, k, &mut out, &mut tmp)?;
        Ok(out)
    }

    fn waveform_into(
        &self,
        st: &State,
        grid: &TimeGrid,
        j: usize,
        k: usize,
        out: &mut [Complex64],
        tmp: &mut [Complex64],
    ) -> Result<()> {
        let s = &st.scenario;
        let anchor = &s.anchors[j];
        let (range, bearing) = anchor_range_bearing(&s.pose.reference, &anchor.position)?;
        let (offset, offset_angle) = s.array.offsets[k];
        let g = DelayGeometry {
            range,
            bearing,
            offset,
            offset_angle,
            orientation: s.pose.orientation,
        };
        let motion = s.motion.unwrap_or_default();
        let wc = 2.0 * PI * s.signal.carrier;
        out.iter_mut().for_each(|v| *v = Complex64::new(0.0, 0.0));
        for (l, path) in anchor.paths.iter().enumerate() {
            let (a, b) = signal_time_affine(&g, path, &motion, s.c);
            self.baseband.eval_affine(a, b, grid, tmp);
            let amp = st.amplitudes[j][l];
            for (n, v) in out.iter_mut().enumerate() {
                let u = a * (grid.start + n as f64 * grid.dt) + b;
                *v += tmp[n] * Complex64::from_polar(amp, wc * u + st.phases[j]);
            }
        }
        Ok(())
    }

    /// Fraction of each path's energy that falls inside the grid; should be 1.
    pub fn captured_energy(&self, grid: &TimeGrid) -> Result<f64> {
        let s = &self.state.scenario;
        let motion = s.motion.unwrap_or_default();
        let mut worst = 1.0_f64;
        let mut tmp = vec![Complex64::new(0.0, 0.0); grid.len];
        for anchor in &s.anchors {
            let (range, bearing) = anchor_range_bearing(&s.pose.reference, &anchor.position)?;
            for &(offset, offset_angle) in &s.array.offsets {
                let g = DelayGeometry {
                    range,
                    bearing,
                    offset,
                    offset_angle,
                    orientation: s.pose.orientation,
                };
                for path in &anchor.paths {
                    let (a, b) = signal_time_affine(&g, path, &motion, s.c);
                    self.baseband.eval_affine(a, b, grid, &mut tmp);
                    let got = grid.trapz(|n| tmp[n].norm_sqr());
                    worst = worst.min(got * a / self.energy);
                }
            }
        }
        Ok(worst)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ParameterVector {
    pub entries: Vec<Entry>,
}

impl ParameterVector {
    /// Unknown entries implied by the knowledge flags: position always; orientation, heading and
    /// speed when unknown; per anchor the phase (when unknown), the first-path amplitude and, for
    /// every NLOS or later path, its angle bias, range bias and amplitude.
    pub fn unknowns(s: &Scenario) -> Self {
        let mut entries = vec![Entry::X, Entry::Y];
        if !s.knowledge.orientation {
            entries.push(Entry::Orientation);
        }
        if s.motion.is_some() {
            if !s.knowledge.direction {
                entries.push(Entry::Direction);
            }
            if !s.knowledge.speed {
                entries.push(Entry::Speed);
            }
        }
        for (j, a) in s.anchors.iter().enumerate() {
            if !s.knowledge.phase {
                entries.push(Entry::Phase(j));
            }
            for l in 0..a.paths.len() {
                if l > 0 || !a.los {
                    entries.push(Entry::AngleBias(j, l));
                    entries.push(Entry::RangeBias(j, l));
                }
                entries.push(Entry::Amplitude(j, l));
            }
        }
        Self { entries }
    }

    pub fn index_of(&self, e: Entry) -> Option<usize> {
        self.entries.iter().position(|x| *x == e)
    }

    fn anchor_of(e: Entry) -> Option<usize> {
        match e {
            Entry::Phase(j)
            | Entry::Amplitude(j, _)
            | Entry::RangeBias(j, _)
            | Entry::AngleBias(j, _) => Some(j),
            _ => None,
        }
    }
}

fn step_for(model: &WaveformModel, e: Entry, value: f64) -> f64 {
    let s = model.scenario();
    let length = s
        .anchors
        .iter()
        .map(|a| a.position.distance(&s.pose.reference))
        .fold(0.0, f64::max);
    let unit = match e {
        Entry::X | Entry::Y | Entry::RangeBias(..) => length,
        Entry::Amplitude(j, _) => model.state.amplitudes[j][0],
        _ => 1.0,
    };
    REL_STEP * value.abs().max(unit)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Integrand {
    /// `Re{d_i* d_j}` of the complex envelope model.
    Complex,
    /// `2 Re{d_i} Re{d_j}` of the real passband model `sqrt(2) Re{mu}`.
    RealPassband,
}

/// FIM over `params` by central differences, trapezoid integration on `grid`.
pub fn numerical_fim(
    model: &WaveformModel,
    params: &ParameterVector,
    grid: &TimeGrid,
) -> Result<DMatrix<f64>> {
    fim_with(model, params, grid, Integrand::Complex)
}

/// FIM of the real passband model; agrees with [`numerical_fim`] when `B < f_c`.
pub fn real_passband_fim(
    model: &WaveformModel,
    params: &ParameterVector,
    grid: &TimeGrid,
) -> Result<DMatrix<f64>> {
    fim_with(model, params, grid, Integrand::RealPassband)
}

fn fim_with(
    model: &WaveformModel,
    params: &ParameterVector,
    grid: &TimeGrid,
    kind: Integrand,
) -> Result<DMatrix<f64>> {
    let s = model.scenario();
    let need = 16.0 * (s.signal.carrier + model.band);
    if grid.rate() < need * (1.0 - 1e-12) {
        return Err(Error::Unsupported(format!(
            "grid rate {} Hz below 16 (f_c + B) = {need} Hz",
            grid.rate()
        )));
    }
    let captured = model.captured_energy(grid)?;
    if captured < 1.0 - 1e-9 {
        return Err(Error::Unsupported(format!(
            "observation window keeps only {captured} of a path's energy"
        )));
    }
    let pairs: Vec<(usize, usize)> = (0..s.anchors.len())
        .flat_map(|j| (0..s.array.len()).map(move |k| (j, k)))
        .collect();
    let n = params.entries.len();
    let parts: Vec<Result<DMatrix<f64>>> = pairs
        .par_iter()
        .map(|&(j, k)| pair_fim(model, params, grid, kind, j, k))
        .collect();
    let mut f = DMatrix::zeros(n, n);
    for p in parts {
        f += p?;
    }
    Ok(f * (2.0 / model.n0))
}

fn pair_fim(
    model: &WaveformModel,
    params: &ParameterVector,
    grid: &TimeGrid,
    kind: Integrand,
    j: usize,
    k: usize,
) -> Result<DMatrix<f64>> {
    let idx: Vec<usize> = (0..params.entries.len())
        .filter(|&i| ParameterVector::anchor_of(params.entries[i]).is_none_or(|a| a == j))
        .collect();
    let mut plus = vec![Complex64::new(0.0, 0.0); grid.len];
    let mut minus = vec![Complex64::new(0.0, 0.0); grid.len];
    let mut tmp = vec![Complex64::new(0.0, 0.0); grid.len];
    let mut derivs: Vec<Vec<Complex64>> = Vec::with_capacity(idx.len());
    for &i in &idx {
        let e = params.entries[i];
        let h = step_for(model, e, model.state.get(e));
        model.waveform_into(&model.state.shifted(e, h), grid, j, k, &mut plus, &mut tmp)?;
        model.waveform_into(
            &model.state.shifted(e, -h),
            grid,
            j,
            k,
            &mut minus,
            &mut tmp,
        )?;
        derivs.push(
            plus.iter()
                .zip(&minus)
                .map(|(p, m)| (p - m) / (2.0 * h))
                .collect(),
        );
    }
    let n = params.entries.len();
    let mut f = DMatrix::zeros(n, n);
    for a in 0..idx.len() {
        for b in a..idx.len() {
            let (da, db) = (&derivs[a], &derivs[b]);
            let v = match kind {
                Integrand::Complex => grid.trapz(|t| (da[t].conj() * db[t]).re),
                Integrand::RealPassband => grid.trapz(|t| 2.0 * da[t].re * db[t].re),
            };
            f[(idx[a], idx[b])] = v;
            f[(idx[b], idx[a])] = v;
        }
    }
    Ok(f)
}

/// Oracle EFIM of the `keep` entries after eliminating every other unknown.
pub fn oracle_efim(
    model: &WaveformModel,
    params: &ParameterVector,
    grid: &TimeGrid,
    keep: &[Entry],
) -> Result<SchurOutput> {
    let f = numerical_fim(model, params, grid)?;
    let idx = keep
        .iter()
        .map(|e| {
            params
                .index_of(*e)
                .ok_or_else(|| Error::Unsupported(format!("{e:?} is not an unknown")))
        })
        .collect::<Result<Vec<_>>>()?;
    schur_complement(&f, &idx)
}

/// Effective path-overlap coefficient of anchor `j`: one minus the ratio of the radial position
/// information with all its paths to that with the first path alone, anchor `j` observed alone
/// with phase and orientation known. Clamped to [0, 1].
/// A surrogate for the path-overlap coefficient, not its definition.
pub fn effective_poc(model: &WaveformModel, grid: &TimeGrid, j: usize) -> Result<f64> {
    let radial = |paths: usize| -> Result<f64> {
        let mut m = model.clone();
        let keep_anchor = m.state.scenario.anchors[j].clone();
        let mut anchor = keep_anchor.clone();
        anchor.paths.truncate(paths);
        m.state.scenario.anchors = vec![anchor];
        m.state.scenario.knowledge = KnowledgeFlags {
            phase: true,
            orientation: true,
            direction: true,
            speed: true,
        };
        m.state.phases = vec![model.state.phases[j]];
        m.state.amplitudes = vec![model.state.amplitudes[j][..paths].to_vec()];
        let params = ParameterVector::unknowns(&m.state.scenario);
        let out = oracle_efim(&m, &params, grid, &[Entry::X, Entry::Y])?;
        let (_, phi) =
            anchor_range_bearing(&m.state.scenario.pose.reference, &keep_anchor.position)?;
        let q = nalgebra::Vector2::new(phi.cos(), phi.sin());
        Ok((q.transpose() * &out.matrix * q)[(0, 0)])
    };
    let full = radial(model.state.scenario.anchors[j].paths.len())?;
    let single = radial(1)?;
    Ok((1.0 - full / single).clamp(0.0, 1.0))
}
