//! IIR band-pass filter design and application.
//!
//! Filters are designed as analog Butterworth prototypes, transformed
//! lowpass-to-bandpass, then discretized with the bilinear transform using
//! frequency prewarping so the -3 dB points land exactly on the requested
//! band edges. The result is a cascade of biquad sections applied in
//! direct-form II transposed.

use num_complex::Complex64;
use std::f64::consts::PI;

use crate::error::{Error, Result};

/// One second-order section, coefficients normalized so a0 = 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Biquad {
    pub b0: f64,
    pub b1: f64,
    pub b2: f64,
    pub a1: f64,
    pub a2: f64,
}

impl Biquad {
    /// Both poles strictly inside the unit circle (Jury criterion).
    pub fn is_stable(&self) -> bool {
        self.a2 < 1.0 && self.a1.abs() < 1.0 + self.a2
    }

    fn response_at(&self, omega: f64) -> Complex64 {
        let z1 = Complex64::from_polar(1.0, -omega);
        let z2 = Complex64::from_polar(1.0, -2.0 * omega);
        (self.b0 + self.b1 * z1 + self.b2 * z2) / (1.0 + self.a1 * z1 + self.a2 * z2)
    }
}

/// A cascade of biquad sections realizing one band-pass filter.
#[derive(Debug, Clone, PartialEq)]
pub struct BiquadCascade {
    pub sections: Vec<Biquad>,
    pub sample_rate_hz: f64,
    pub passband_hz: (f64, f64),
}

impl BiquadCascade {
    /// Complex frequency response at `freq_hz`.
    pub fn response_at(&self, freq_hz: f64) -> Complex64 {
        let omega = 2.0 * PI * freq_hz / self.sample_rate_hz;
        self.sections
            .iter()
            .fold(Complex64::new(1.0, 0.0), |acc, s| acc * s.response_at(omega))
    }

    /// Magnitude response at `freq_hz`.
    pub fn magnitude_at(&self, freq_hz: f64) -> f64 {
        self.response_at(freq_hz).norm()
    }
}

/// Butterworth prototype poles for a normalized lowpass (cutoff 1 rad/s),
/// restricted to the closed upper half plane; conjugates are implied.
fn prototype_poles_upper(order: usize) -> Vec<Complex64> {
    (0..order)
        .map(|k| {
            let theta = PI * (2 * k + order + 1) as f64 / (2 * order) as f64;
            Complex64::new(theta.cos(), theta.sin())
        })
        .filter(|p| p.im > -1e-12)
        .collect()
}

/// Bilinear transform of an analog pole/zero location.
fn bilinear(s: Complex64, fs2: f64) -> Complex64 {
    (fs2 + s) / (fs2 - s)
}

fn biquad_from_conjugate_pole(z: Complex64) -> (f64, f64) {
    (-2.0 * z.re, z.norm_sqr())
}

/// Design a Butterworth band-pass filter.
///
/// `order` is the prototype (lowpass) order; the band-pass has `2 * order`
/// poles. Band edges sit at 1/sqrt(2) of the peak magnitude.
pub fn design_butterworth_bandpass(
    order: usize,
    low_hz: f64,
    high_hz: f64,
    sample_rate_hz: f64,
) -> Result<BiquadCascade> {
    if order < 1 {
        return Err(Error::InvalidInput("filter order must be >= 1".into()));
    }
    let nyquist = sample_rate_hz / 2.0;
    if !(0.0 < low_hz && low_hz < high_hz && high_hz < nyquist) {
        return Err(Error::InvalidInput(format!(
            "invalid band [{low_hz}, {high_hz}] Hz for sample rate {sample_rate_hz} Hz"
        )));
    }

    let fs2 = 2.0 * sample_rate_hz;
    // Prewarped analog band edges.
    let warped_low = fs2 * (PI * low_hz / sample_rate_hz).tan();
    let warped_high = fs2 * (PI * high_hz / sample_rate_hz).tan();
    let center = (warped_low * warped_high).sqrt();
    let bandwidth = warped_high - warped_low;

    // Lowpass-to-bandpass: each prototype pole p yields the two roots of
    // s^2 - (p * bw) s + center^2.
    let mut sections = Vec::with_capacity(2 * order);
    for p in prototype_poles_upper(order) {
        let half = p * bandwidth * 0.5;
        let disc = (half * half - Complex64::new(center * center, 0.0)).sqrt();
        let analog = [half + disc, half - disc];
        let digital = [bilinear(analog[0], fs2), bilinear(analog[1], fs2)];

        if p.im.abs() < 1e-12 {
            // Real prototype pole: its two band-pass poles form one section,
            // either a conjugate pair or two real poles.
            let (a1, a2) = if digital[0].im.abs() > 1e-12 {
                biquad_from_conjugate_pole(digital[0])
            } else {
                (-(digital[0].re + digital[1].re), digital[0].re * digital[1].re)
            };
            sections.push(Biquad { b0: 1.0, b1: 0.0, b2: -1.0, a1, a2 });
        } else {
            // Complex prototype pole: each band-pass pole pairs with its own
            // conjugate (which stems from the conjugate prototype pole).
            for z in digital {
                let (a1, a2) = biquad_from_conjugate_pole(z);
                sections.push(Biquad { b0: 1.0, b1: 0.0, b2: -1.0, a1, a2 });
            }
        }
    }

    // Unity gain at the digital image of the analog center frequency,
    // normalized section by section to keep intermediate levels bounded.
    let center_digital_hz = (center / fs2).atan() * sample_rate_hz / PI;
    let omega0 = 2.0 * PI * center_digital_hz / sample_rate_hz;
    for section in &mut sections {
        let gain = section.response_at(omega0).norm();
        if gain <= 0.0 || !gain.is_finite() {
            return Err(Error::InvalidInput(
                "degenerate filter design: zero gain at center".into(),
            ));
        }
        section.b0 /= gain;
        section.b2 /= gain;
    }

    let cascade = BiquadCascade {
        sections,
        sample_rate_hz,
        passband_hz: (low_hz, high_hz),
    };
    for section in &cascade.sections {
        if !section.is_stable() {
            return Err(Error::InvalidInput(format!(
                "unstable section in design for [{low_hz}, {high_hz}] Hz"
            )));
        }
    }
    Ok(cascade)
}

/// Causal direct-form II transposed filtering with zero initial conditions.
/// Output length equals input length.
pub fn apply(filter: &BiquadCascade, samples: &[f64]) -> Result<Vec<f64>> {
    if let Some(i) = samples.iter().position(|s| !s.is_finite()) {
        return Err(Error::InvalidInput(format!("non-finite sample at index {i}")));
    }
    let mut out = samples.to_vec();
    for section in &filter.sections {
        let mut s1 = 0.0;
        let mut s2 = 0.0;
        for x in out.iter_mut() {
            let y = section.b0 * *x + s1;
            s1 = section.b1 * *x - section.a1 * y + s2;
            s2 = section.b2 * *x - section.a2 * y;
            *x = y;
        }
    }
    Ok(out)
}
