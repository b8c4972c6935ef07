//! Digital Butterworth low-pass filter designed by the bilinear transform,
//! run as a cascade of second-order sections.

use crate::error::{Error, Result};

/// One biquad `(b0 + b1 z⁻¹ + b2 z⁻²) / (1 + a1 z⁻¹ + a2 z⁻²)`.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Section {
    b: [f64; 3],
    a: [f64; 2],
}

#[derive(Debug, Clone, PartialEq)]
pub struct Butterworth {
    sections: Vec<Section>,
}

impl Butterworth {
    /// Low-pass of even `order` with cutoff given as a fraction of Nyquist.
    pub fn lowpass(order: usize, cutoff: f64) -> Result<Self> {
        if order == 0 || order % 2 == 1 {
            return Err(Error::InvalidParameter(format!(
                "filter order must be even and positive, got {order}"
            )));
        }
        if !(cutoff > 0.0 && cutoff < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "cutoff must lie in (0, 1), got {cutoff}"
            )));
        }
        let wc = 2.0 * (std::f64::consts::FRAC_PI_2 * cutoff).tan();
        let w2 = wc * wc;
        let sections = (1..=order / 2)
            .map(|k| {
                let angle = std::f64::consts::PI * (2 * k + order - 1) as f64 / (2 * order) as f64;
                let re = angle.cos();
                let a0 = 4.0 - 4.0 * re * wc + w2;
                Section {
                    b: [w2 / a0, 2.0 * w2 / a0, w2 / a0],
                    a: [(2.0 * w2 - 8.0) / a0, (4.0 + 4.0 * re * wc + w2) / a0],
                }
            })
            .collect();
        Ok(Self { sections })
    }

    /// Filters `x` from rest.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut out = x.to_vec();
        for s in &self.sections {
            let (mut z1, mut z2) = (0.0, 0.0);
            for v in out.iter_mut() {
                let input = *v;
                let y = s.b[0] * input + z1;
                z1 = s.b[1] * input - s.a[0] * y + z2;
                z2 = s.b[2] * input - s.a[1] * y;
                *v = y;
            }
        }
        out
    }

    /// `|H(e^{iω})|` at `ω = π f`.
    pub fn gain(&self, f: f64) -> f64 {
        let w = std::f64::consts::PI * f;
        let z1 = (w.cos(), -w.sin());
        let z2 = ((2.0 * w).cos(), -(2.0 * w).sin());
        self.sections
            .iter()
            .map(|s| {
                let num = (s.b[0] + s.b[1] * z1.0 + s.b[2] * z2.0, s.b[1] * z1.1 + s.b[2] * z2.1);
                let den = (1.0 + s.a[0] * z1.0 + s.a[1] * z2.0, s.a[0] * z1.1 + s.a[1] * z2.1);
                num.0.hypot(num.1) / den.0.hypot(den.1)
            })
            .product()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn butterworth_gain_profile() {
        let f = Butterworth::lowpass(6, 0.3).unwrap();
        assert!((f.gain(0.0) - 1.0).abs() < 1e-12);
        assert!((f.gain(0.3) - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-9);
        assert!(f.gain(0.9) < 1e-3);
        assert!(Butterworth::lowpass(5, 0.3).is_err());
    }

    #[test]
    fn step_response_settles_at_one() {
        let f = Butterworth::lowpass(6, 0.2).unwrap();
        let y = f.apply(&[1.0; 400]);
        assert!((y[399] - 1.0).abs() < 1e-9);
    }
}
