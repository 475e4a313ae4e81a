//! Far-field uniform linear array.

use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;

pub const DEFAULT_SPEED_OF_SOUND: f64 = 343.0;

#[derive(Debug, Clone, Copy, PartialEq, thiserror::Error)]
pub enum GeometryError {
    #[error("an array needs at least two microphones (got {0})")]
    TooFewMics(usize),
    #[error("microphone spacing must be positive and finite (got {0})")]
    InvalidSpacing(f64),
    #[error("speed of sound must be positive and finite (got {0})")]
    InvalidSpeed(f64),
    #[error("arrival angle {0} deg is outside [-90, 90]")]
    InvalidAngle(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArrayGeometry {
    mic_count: usize,
    spacing: f64,
    speed_of_sound: f64,
}

impl ArrayGeometry {
    pub fn new(mic_count: usize, spacing: f64) -> Result<Self, GeometryError> {
        Self::with_speed_of_sound(mic_count, spacing, DEFAULT_SPEED_OF_SOUND)
    }

    pub fn with_speed_of_sound(mic_count: usize, spacing: f64, speed_of_sound: f64) -> Result<Self, GeometryError> {
        if mic_count < 2 {
            return Err(GeometryError::TooFewMics(mic_count));
        }
        if !(spacing > 0.0 && spacing.is_finite()) {
            return Err(GeometryError::InvalidSpacing(spacing));
        }
        if !(speed_of_sound > 0.0 && speed_of_sound.is_finite()) {
            return Err(GeometryError::InvalidSpeed(speed_of_sound));
        }
        Ok(Self {
            mic_count,
            spacing,
            speed_of_sound,
        })
    }

    pub fn mic_count(&self) -> usize {
        self.mic_count
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn speed_of_sound(&self) -> f64 {
        self.speed_of_sound
    }

    /// Arrival delay of each microphone relative to the first, in seconds.
    /// Angles are measured from broadside.
    pub fn delays(&self, angle_deg: f64) -> Result<Vec<f64>, GeometryError> {
        if !(angle_deg.abs() <= 90.0) {
            return Err(GeometryError::InvalidAngle(angle_deg));
        }
        let per_mic = self.spacing * angle_deg.to_radians().sin() / self.speed_of_sound;
        Ok((0..self.mic_count).map(|m| m as f64 * per_mic).collect())
    }

    /// Unit-magnitude relative transfer function `exp(-2 pi i f tau_m)`.
    pub fn steering_vector(&self, angle_deg: f64, frequency_hz: f64) -> Result<Vec<Complex64>, GeometryError> {
        Ok(self
            .delays(angle_deg)?
            .into_iter()
            .map(|tau| Complex64::from_polar(1.0, -2.0 * PI * frequency_hz * tau))
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn broadside_and_dc_are_all_ones() {
        let g = ArrayGeometry::new(4, 0.05).unwrap();
        for z in g.steering_vector(0.0, 3000.0).unwrap() {
            assert_eq!(z, Complex64::new(1.0, 0.0));
        }
        for z in g.steering_vector(45.0, 0.0).unwrap() {
            assert_eq!(z, Complex64::new(1.0, 0.0));
        }
    }

    #[test]
    fn thirty_degrees_at_one_khz() {
        let g = ArrayGeometry::new(4, 0.05).unwrap();
        let a = g.steering_vector(30.0, 1000.0).unwrap();
        for (m, z) in a.iter().enumerate() {
            let phase = -2.0 * PI * 1000.0 * m as f64 * 0.025 / 343.0;
            assert!((z.norm() - 1.0).abs() < 1e-15);
            assert!((z - Complex64::new(phase.cos(), phase.sin())).norm() < 1e-12);
        }
    }

    #[test]
    fn rejects_bad_input() {
        assert_eq!(ArrayGeometry::new(1, 0.05), Err(GeometryError::TooFewMics(1)));
        assert!(ArrayGeometry::new(2, 0.0).is_err());
        let g = ArrayGeometry::new(2, 0.05).unwrap();
        assert_eq!(g.steering_vector(91.0, 1.0), Err(GeometryError::InvalidAngle(91.0)));
    }
}
