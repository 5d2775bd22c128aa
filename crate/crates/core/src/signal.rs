//! Spectral and temporal summaries of a sampled complex baseband pulse.

use std::f64::consts::PI;
use std::path::Path;

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct ComplexSampleSeries {
    pub samples: Vec<Complex64>,
    pub sample_rate: f64,
    pub t0: f64,
}

impl ComplexSampleSeries {
    pub fn new(samples: Vec<Complex64>, sample_rate: f64, t0: f64) -> Result<Self> {
        let s = Self {
            samples,
            sample_rate,
            t0,
        };
        s.check()?;
        Ok(s)
    }

    /// Samples `f` at `t0 + n / sample_rate`.
    pub fn from_fn(n: usize, sample_rate: f64, t0: f64, f: impl Fn(f64) -> Complex64) -> Self {
        let samples = (0..n).map(|i| f(t0 + i as f64 / sample_rate)).collect();
        Self {
            samples,
            sample_rate,
            t0,
        }
    }

    pub fn dt(&self) -> f64 {
        1.0 / self.sample_rate
    }

    pub fn time(&self, n: usize) -> f64 {
        self.t0 + n as f64 / self.sample_rate
    }

    pub fn energy(&self) -> f64 {
        self.samples.iter().map(|s| s.norm_sqr()).sum::<f64>() * self.dt()
    }

    fn check(&self) -> Result<()> {
        if self.samples.len() < 2 {
            return Err(Error::InvalidSignal("need at least two samples".into()));
        }
        if !(self.sample_rate > 0.0 && self.sample_rate.is_finite()) || !self.t0.is_finite() {
            return Err(Error::InvalidSignal(format!(
                "sample rate {}",
                self.sample_rate
            )));
        }
        if self
            .samples
            .iter()
            .any(|s| !(s.re.is_finite() && s.im.is_finite()))
        {
            return Err(Error::InvalidSignal("non-finite sample".into()));
        }
        if self.energy() == 0.0 {
            return Err(Error::InvalidSignal("zero-energy signal".into()));
        }
        Ok(())
    }
}

/// What the closed-form EFIMs need to know about the transmitted pulse.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SignalSummary {
    pub beta: f64,
    pub bcc: f64,
    pub carrier: f64,
    pub band_limit: Option<f64>,
    pub trms: Option<f64>,
    pub energy: Option<f64>,
    pub t_ob: Option<f64>,
}

impl SignalSummary {
    pub fn new(beta: f64, carrier: f64) -> Self {
        Self {
            beta,
            bcc: 0.0,
            carrier,
            band_limit: None,
            trms: None,
            energy: None,
            t_ob: None,
        }
    }

    pub fn with_trms(mut self, trms: f64) -> Self {
        self.trms = Some(trms);
        self
    }

    /// Effective bandwidth and carrier after removing the spectral centroid:
    /// `(beta sqrt(1 - gamma^2), f_c + gamma beta)`.
    pub fn recentred(&self) -> (f64, f64) {
        (
            self.beta * (1.0 - self.bcc * self.bcc).max(0.0).sqrt(),
            self.carrier + self.bcc * self.beta,
        )
    }

    pub fn check(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidSignal(m));
        if !(self.beta >= 0.0 && self.beta.is_finite()) {
            return bad(format!("effective bandwidth {}", self.beta));
        }
        if !(self.carrier >= 0.0 && self.carrier.is_finite()) {
            return bad(format!("carrier {}", self.carrier));
        }
        if !(-1.0..=1.0).contains(&self.bcc) {
            return bad(format!("BCC {} outside [-1, 1]", self.bcc));
        }
        if let Some(t) = self.trms {
            if !(t >= 0.0 && t.is_finite()) {
                return bad(format!("t_rms {t}"));
            }
        }
        if let Some(b) = self.band_limit {
            if !(b >= 0.0 && b.is_finite()) {
                return bad(format!("band limit {b}"));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SpectralOptions {
    /// Transform length is the next power of two at or above `pad_factor * len`.
    /// `pad_factor = 1` treats the record as one period of a periodic signal.
    pub pad_factor: usize,
}

impl Default for SpectralOptions {
    fn default() -> Self {
        Self { pad_factor: 4 }
    }
}

/// Signed bin frequencies and DFT coefficients of the padded record.
pub(crate) struct Spectrum {
    pub freqs: Vec<f64>,
    pub coeffs: Vec<Complex64>,
}

pub(crate) fn spectrum(sig: &ComplexSampleSeries, len: usize) -> Spectrum {
    let mut buf = vec![Complex64::new(0.0, 0.0); len];
    buf[..sig.samples.len()].copy_from_slice(&sig.samples);
    FftPlanner::new().plan_fft_forward(len).process(&mut buf);
    let df = sig.sample_rate / len as f64;
    let freqs = (0..len)
        .map(|m| {
            if m <= len / 2 {
                m as f64 * df
            } else {
                (m as f64 - len as f64) * df
            }
        })
        .collect();
    Spectrum { freqs, coeffs: buf }
}

fn padded_len(sig: &ComplexSampleSeries, opts: SpectralOptions) -> usize {
    let n = sig.samples.len();
    if opts.pad_factor <= 1 {
        n
    } else {
        (opts.pad_factor * n).next_power_of_two()
    }
}

/// Power-weighted first and second spectral moments. The Nyquist bin, when present,
/// is split evenly between +fs/2 and -fs/2.
fn moments(sig: &ComplexSampleSeries, opts: SpectralOptions) -> (f64, f64) {
    let len = padded_len(sig, opts);
    let sp = spectrum(sig, len);
    let (mut p0, mut p1, mut p2) = (0.0, 0.0, 0.0);
    for (m, (f, c)) in sp.freqs.iter().zip(&sp.coeffs).enumerate() {
        let w = c.norm_sqr();
        p0 += w;
        p2 += f * f * w;
        if !(len % 2 == 0 && m == len / 2) {
            p1 += f * w;
        }
    }
    (p1 / p0, p2 / p0)
}

pub fn effective_bandwidth(sig: &ComplexSampleSeries) -> f64 {
    effective_bandwidth_with(sig, SpectralOptions::default())
}

pub fn effective_bandwidth_with(sig: &ComplexSampleSeries, opts: SpectralOptions) -> f64 {
    moments(sig, opts).1.sqrt()
}

/// Baseband-carrier correlation: spectral centroid over effective bandwidth.
pub fn bcc(sig: &ComplexSampleSeries) -> f64 {
    bcc_with(sig, SpectralOptions::default())
}

pub fn bcc_with(sig: &ComplexSampleSeries, opts: SpectralOptions) -> f64 {
    let (m1, m2) = moments(sig, opts);
    if m2 == 0.0 {
        0.0
    } else {
        m1 / m2.sqrt()
    }
}

/// Shifts the spectrum so its centroid sits at DC. Returns the shifted series and the
/// removed frequency `gamma beta`, which is added to the carrier.
pub fn recentre(sig: &ComplexSampleSeries) -> (ComplexSampleSeries, f64) {
    let (m1, _) = moments(sig, SpectralOptions::default());
    let samples = sig
        .samples
        .iter()
        .enumerate()
        .map(|(n, s)| s * Complex64::from_polar(1.0, -2.0 * PI * m1 * sig.time(n)))
        .collect();
    (
        ComplexSampleSeries {
            samples,
            sample_rate: sig.sample_rate,
            t0: sig.t0,
        },
        m1,
    )
}

/// Energy-weighted standard deviation of time.
pub fn trms(sig: &ComplexSampleSeries) -> f64 {
    let (mut w0, mut w1, mut w2) = (0.0, 0.0, 0.0);
    for (n, s) in sig.samples.iter().enumerate() {
        let w = s.norm_sqr();
        let t = sig.time(n);
        w0 += w;
        w1 += w * t;
        w2 += w * t * t;
    }
    let mean = w1 / w0;
    (w2 / w0 - mean * mean).max(0.0).sqrt()
}

/// `int f |S0(f)|^2 phi'(f) df / (E beta)`, evaluated as `-Im{int t s0* s0' dt} / (E beta)`
/// on the recentred pulse. Carries units of seconds.
pub fn balanced_phase_residual(sig: &ComplexSampleSeries) -> f64 {
    let (rc, _) = recentre(sig);
    let len = padded_len(&rc, SpectralOptions::default());
    let deriv = spectral_derivative(&rc, len);
    let dt = rc.dt();
    let mut acc = 0.0;
    for n in 0..rc.samples.len() {
        acc += rc.time(n) * (rc.samples[n].conj() * deriv[n]).im;
    }
    let e = rc.energy();
    let beta = effective_bandwidth(&rc);
    if beta == 0.0 {
        return 0.0;
    }
    -acc * dt / (e * beta)
}

/// Band-limited derivative of the zero-padded record, truncated back to the record length.
pub(crate) fn spectral_derivative(sig: &ComplexSampleSeries, len: usize) -> Vec<Complex64> {
    let sp = spectrum(sig, len);
    let mut buf: Vec<Complex64> = sp
        .freqs
        .iter()
        .zip(&sp.coeffs)
        .enumerate()
        .map(|(m, (f, c))| {
            if len % 2 == 0 && m == len / 2 {
                Complex64::new(0.0, 0.0)
            } else {
                c * Complex64::new(0.0, 2.0 * PI * f)
            }
        })
        .collect();
    FftPlanner::new().plan_fft_inverse(len).process(&mut buf);
    buf.truncate(sig.samples.len());
    for v in &mut buf {
        *v /= len as f64;
    }
    buf
}

/// Highest bin frequency whose power is within 120 dB of the spectral peak.
pub fn band_limit(sig: &ComplexSampleSeries) -> f64 {
    let sp = spectrum(sig, padded_len(sig, SpectralOptions::default()));
    let peak = sp.coeffs.iter().map(|c| c.norm_sqr()).fold(0.0, f64::max);
    sp.freqs
        .iter()
        .zip(&sp.coeffs)
        .filter(|(_, c)| c.norm_sqr() >= 1e-12 * peak)
        .map(|(f, _)| f.abs())
        .fold(0.0, f64::max)
}

pub fn snr_from_db(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn snr_to_db(snr: f64) -> f64 {
    10.0 * snr.log10()
}

/// `alpha^2 E / N0`.
pub fn first_path_snr(amplitude: f64, energy: f64, n0: f64) -> f64 {
    amplitude * amplitude * energy / n0
}

pub fn summarize(sig: &ComplexSampleSeries, carrier: f64) -> Result<SignalSummary> {
    sig.check()?;
    let n = sig.samples.len() as f64;
    Ok(SignalSummary {
        beta: effective_bandwidth(sig),
        bcc: bcc(sig),
        carrier,
        band_limit: Some(band_limit(sig)),
        trms: Some(trms(sig)),
        energy: Some(sig.energy()),
        t_ob: Some(n / sig.sample_rate),
    })
}

/// Parses `sample_rate_hz=<v> t0_s=<v>` followed by one `re,im` pair per line.
pub fn parse_signal(text: &str) -> Result<ComplexSampleSeries> {
    let mut lines = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty());
    let Some((hl, header)) = lines.next() else {
        return Err(Error::SignalFormat {
            line: 1,
            msg: "empty file".into(),
        });
    };
    let err = |line: usize, msg: String| Error::SignalFormat {
        line: line + 1,
        msg,
    };
    let (mut rate, mut t0) = (None, None);
    for tok in header.split_whitespace() {
        let (k, v) = tok
            .split_once('=')
            .ok_or_else(|| err(hl, format!("bad header token `{tok}`")))?;
        let v: f64 = v
            .parse()
            .map_err(|_| err(hl, format!("bad number `{v}`")))?;
        match k {
            "sample_rate_hz" => rate = Some(v),
            "t0_s" => t0 = Some(v),
            _ => return Err(err(hl, format!("unknown header key `{k}`"))),
        }
    }
    let rate = rate.ok_or_else(|| err(hl, "missing sample_rate_hz".into()))?;
    let t0 = t0.ok_or_else(|| err(hl, "missing t0_s".into()))?;
    let mut samples = Vec::new();
    for (i, l) in lines {
        let (re, im) = l
            .trim()
            .split_once(',')
            .ok_or_else(|| err(i, "expected `re,im`".into()))?;
        let re: f64 = re
            .trim()
            .parse()
            .map_err(|_| err(i, format!("bad number `{re}`")))?;
        let im: f64 = im
            .trim()
            .parse()
            .map_err(|_| err(i, format!("bad number `{im}`")))?;
        samples.push(Complex64::new(re, im));
    }
    ComplexSampleSeries::new(samples, rate, t0)
}

pub fn read_signal_file(path: &Path) -> Result<ComplexSampleSeries> {
    parse_signal(&std::fs::read_to_string(path)?)
}

/// Sampled Gaussian pulse `exp(-(t - centre)^2 / (4 sigma^2))`, so that `|s0|^2` has
/// time spread `sigma` and the effective bandwidth is `1 / (4 pi sigma)`.
pub fn gaussian_pulse(
    n: usize,
    sample_rate: f64,
    t0: f64,
    centre: f64,
    sigma: f64,
) -> ComplexSampleSeries {
    ComplexSampleSeries::from_fn(n, sample_rate, t0, |t| {
        let x = (t - centre) / sigma;
        Complex64::new((-0.25 * x * x).exp(), 0.0)
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn periodic() -> SpectralOptions {
        SpectralOptions { pad_factor: 1 }
    }

    #[test]
    fn tone_has_point_spectrum() {
        let s = ComplexSampleSeries::from_fn(256, 64.0, 0.0, |t| {
            Complex64::from_polar(1.0, 2.0 * PI * 5.0 * t)
        });
        assert!((effective_bandwidth_with(&s, periodic()) - 5.0).abs() < 1e-12);
        assert!((bcc_with(&s, periodic()) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn symmetric_tones() {
        let s = ComplexSampleSeries::from_fn(256, 64.0, 0.0, |t| {
            Complex64::new((2.0 * PI * 5.0 * t).cos(), 0.0)
        });
        assert!((effective_bandwidth_with(&s, periodic()) - 5.0).abs() < 1e-12);
        assert!(bcc_with(&s, periodic()).abs() < 1e-12);
    }

    #[test]
    fn dc_only() {
        let s = ComplexSampleSeries::from_fn(64, 8.0, 0.0, |_| Complex64::new(1.0, 0.0));
        assert!(effective_bandwidth_with(&s, periodic()).abs() < 1e-12);
    }

    #[test]
    fn gaussian_pulse_moments() {
        let sigma = 0.05;
        let s = gaussian_pulse(1024, 1000.0, 0.0, 0.512, sigma);
        let beta = effective_bandwidth(&s);
        assert!((beta - 1.0 / (4.0 * PI * sigma)).abs() / beta < 1e-6);
        assert!((trms(&s) - sigma).abs() / sigma < 1e-6);
        assert!(bcc(&s).abs() < 1e-9);
    }

    #[test]
    fn rectangle_trms_matches_discrete_uniform() {
        let n = 400;
        let s = ComplexSampleSeries::from_fn(n, 100.0, 0.0, |_| Complex64::new(1.0, 0.0));
        let want = ((n * n - 1) as f64 / 12.0).sqrt() / 100.0;
        assert!((trms(&s) - want).abs() < 1e-12);
        let t = n as f64 / 100.0;
        assert!((trms(&s) - t / 12f64.sqrt()).abs() / trms(&s) < 1e-4);
    }

    #[test]
    fn recentring_removes_offset() {
        let base = gaussian_pulse(1024, 1000.0, 0.0, 0.512, 0.05);
        let shifted = ComplexSampleSeries {
            samples: base
                .samples
                .iter()
                .enumerate()
                .map(|(n, s)| s * Complex64::from_polar(1.0, 2.0 * PI * 3.0 * base.time(n)))
                .collect(),
            ..base.clone()
        };
        let (rc, shift) = recentre(&shifted);
        assert!((shift - 3.0).abs() < 1e-9);
        assert!(bcc(&rc).abs() < 1e-9);
        let b0 = effective_bandwidth(&base);
        let b1 = effective_bandwidth(&shifted);
        let g = bcc(&shifted);
        assert!((b1 * (1.0 - g * g).sqrt() - b0).abs() / b0 < 1e-9);
    }

    #[test]
    fn parse_reports_line() {
        let e = parse_signal("sample_rate_hz=10 t0_s=0\n1,0\n1;0\n").unwrap_err();
        assert!(matches!(e, Error::SignalFormat { line: 3, .. }));
        let s = parse_signal("sample_rate_hz=10 t0_s=0.5\n1,0\n0,1\n").unwrap();
        assert_eq!(s.samples.len(), 2);
        assert_eq!(s.t0, 0.5);
        assert!(parse_signal("t0_s=0\n1,0\n1,0\n").is_err());
    }

    #[test]
    fn snr_db_roundtrip() {
        assert!((snr_from_db(30.0) - 1000.0).abs() < 1e-9);
        assert!((snr_to_db(snr_from_db(17.3)) - 17.3).abs() < 1e-12);
        assert_eq!(first_path_snr(2.0, 3.0, 4.0), 3.0);
    }
}
