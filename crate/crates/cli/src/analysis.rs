//! Oscillation analysis of a magnetisation trace.

use nalgebra::{Matrix4, Vector4};

/// `Delta (Delta / omega_c)^(alpha / (1 - alpha))`, the coupling-renormalised
/// tunnelling frequency. Only meaningful for `alpha < 1`.
pub fn renormalized_tunnelling(delta: f64, omega_c: f64, alpha: f64) -> f64 {
    delta * (delta / omega_c).powf(alpha / (1.0 - alpha))
}

/// Times at which the linearly interpolated series changes sign.
pub fn zero_crossings(times: &[f64], values: &[f64]) -> Vec<f64> {
    let mut out = Vec::new();
    for i in 1..values.len().min(times.len()) {
        let (a, b) = (values[i - 1], values[i]);
        if a == 0.0 && i > 1 {
            continue;
        }
        if (a > 0.0 && b <= 0.0) || (a < 0.0 && b >= 0.0) {
            if b == 0.0 {
                out.push(times[i]);
            } else {
                out.push(times[i - 1] + (times[i] - times[i - 1]) * a / (a - b));
            }
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq)]
pub struct FrequencyFit {
    /// Angular frequency of `A exp(-gamma t) cos(omega t + phi)`.
    pub frequency: f64,
    pub damping: f64,
    pub amplitude: f64,
    pub phase: f64,
    /// `pi / mean spacing` of the zero crossings, the starting guess.
    pub crossing_frequency: f64,
    pub zero_crossings: usize,
    pub rmse: f64,
    pub r_squared: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub enum FrequencyAnalysis {
    Oscillating(FrequencyFit),
    /// Fewer than two zero crossings: overdamped or localised.
    NoOscillation { zero_crossings: usize },
}

impl FrequencyAnalysis {
    pub fn frequency(&self) -> Option<f64> {
        match self {
            Self::Oscillating(f) => Some(f.frequency),
            Self::NoOscillation { .. } => None,
        }
    }
}

fn model(p: &Vector4<f64>, t: f64) -> f64 {
    p[0] * (-p[1] * t).exp() * (p[2] * t + p[3]).cos()
}

fn cost(p: &Vector4<f64>, times: &[f64], values: &[f64]) -> f64 {
    times
        .iter()
        .zip(values)
        .map(|(&t, &y)| (model(p, t) - y).powi(2))
        .sum()
}

/// Levenberg-Marquardt fit of the damped cosine starting from `p`.
fn fit_damped_cosine(mut p: Vector4<f64>, times: &[f64], values: &[f64]) -> Vector4<f64> {
    let mut lambda = 1e-3;
    let mut current = cost(&p, times, values);
    for _ in 0..500 {
        let mut jtj = Matrix4::<f64>::zeros();
        let mut jtr = Vector4::<f64>::zeros();
        for (&t, &y) in times.iter().zip(values) {
            let e = (-p[1] * t).exp();
            let (s, c) = (p[2] * t + p[3]).sin_cos();
            let j = Vector4::new(e * c, -t * p[0] * e * c, -t * p[0] * e * s, -p[0] * e * s);
            let r = p[0] * e * c - y;
            jtj += j * j.transpose();
            jtr += j * r;
        }
        let mut improved = false;
        while lambda < 1e12 {
            let mut a = jtj;
            for k in 0..4 {
                a[(k, k)] += lambda * jtj[(k, k)].max(1e-12);
            }
            let Some(step) = a.lu().solve(&(-jtr)) else {
                lambda *= 10.0;
                continue;
            };
            let trial = p + step;
            let c = cost(&trial, times, values);
            if c.is_finite() && c < current {
                let rel = (current - c) / current.max(1e-300);
                p = trial;
                current = c;
                lambda = (lambda / 10.0).max(1e-12);
                improved = rel > 1e-14;
                break;
            }
            lambda *= 10.0;
        }
        if !improved {
            break;
        }
    }
    p
}

/// Frequency and damping of an underdamped trace `values(times)`.
pub fn analyze_frequency(times: &[f64], values: &[f64]) -> FrequencyAnalysis {
    let crossings = zero_crossings(times, values);
    if crossings.len() < 2 {
        return FrequencyAnalysis::NoOscillation {
            zero_crossings: crossings.len(),
        };
    }
    let spacing = (crossings[crossings.len() - 1] - crossings[0]) / (crossings.len() - 1) as f64;
    let omega0 = std::f64::consts::PI / spacing;
    // the first crossing of A cos(omega t + phi) sits at (pi/2 - phi) / omega
    let phi0 = std::f64::consts::FRAC_PI_2 - omega0 * crossings[0];
    let a0 = values[0] / phi0.cos().abs().max(0.2) * phi0.cos().signum();
    let p = fit_damped_cosine(Vector4::new(a0, 0.0, omega0, phi0), times, values);

    let mean = values.iter().sum::<f64>() / values.len() as f64;
    let ss_tot: f64 = values.iter().map(|y| (y - mean).powi(2)).sum();
    let ss_res = cost(&p, times, values);
    let (mut amplitude, mut phase, frequency) = (p[0], p[3], p[2].abs());
    if p[2] < 0.0 {
        phase = -phase;
    }
    if amplitude < 0.0 {
        amplitude = -amplitude;
        phase += std::f64::consts::PI;
    }
    phase = phase.rem_euclid(2.0 * std::f64::consts::PI);
    FrequencyAnalysis::Oscillating(FrequencyFit {
        frequency,
        damping: p[1],
        amplitude,
        phase,
        crossing_frequency: omega0,
        zero_crossings: crossings.len(),
        rmse: (ss_res / values.len() as f64).sqrt(),
        r_squared: if ss_tot > 0.0 { 1.0 - ss_res / ss_tot } else { 0.0 },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(n: usize, dt: f64) -> Vec<f64> {
        (0..n).map(|i| i as f64 * dt).collect()
    }

    #[test]
    fn renormalised_frequency_values() {
        assert_eq!(renormalized_tunnelling(0.1, 1.0, 0.0), 0.1);
        let v = renormalized_tunnelling(0.1, 1.0, 0.2);
        assert!((v - 0.1 * 0.1f64.powf(0.25)).abs() < 1e-15);
        assert!((v - 0.0562).abs() < 1e-4);
    }

    #[test]
    fn crossings_are_interpolated() {
        let c = zero_crossings(&[0.0, 1.0, 2.0, 3.0], &[1.0, -1.0, -1.0, 3.0]);
        assert_eq!(c, vec![0.5, 2.25]);
        assert!(zero_crossings(&[0.0, 1.0], &[1.0, 1.0]).is_empty());
    }

    #[test]
    fn free_precession_frequency() {
        let t = grid(3001, 0.1);
        let y: Vec<f64> = t.iter().map(|t| (0.1 * t).cos()).collect();
        let FrequencyAnalysis::Oscillating(f) = analyze_frequency(&t, &y) else {
            panic!("expected oscillation");
        };
        assert!((f.frequency - 0.1).abs() < 1e-3 * 0.1);
        assert!(f.damping.abs() < 1e-6);
        assert!(f.r_squared > 0.999999);
    }

    #[test]
    fn damped_oscillation_parameters() {
        let t = grid(2001, 0.1);
        let y: Vec<f64> = t
            .iter()
            .map(|t| 0.9 * (-0.01 * t).exp() * (0.0562 * t + 0.1).cos())
            .collect();
        let FrequencyAnalysis::Oscillating(f) = analyze_frequency(&t, &y) else {
            panic!("expected oscillation");
        };
        assert!((f.frequency - 0.0562).abs() < 1e-6);
        assert!((f.damping - 0.01).abs() < 1e-6);
        assert!((f.amplitude - 0.9).abs() < 1e-6);
    }

    #[test]
    fn flat_and_monotone_traces_do_not_oscillate() {
        let t = grid(100, 1.0);
        let flat = vec![1.0; 100];
        assert_eq!(
            analyze_frequency(&t, &flat),
            FrequencyAnalysis::NoOscillation { zero_crossings: 0 }
        );
        let decay: Vec<f64> = t.iter().map(|t| (-0.05 * t).exp() - 0.1).collect();
        assert!(analyze_frequency(&t, &decay).frequency().is_none());
    }
}
