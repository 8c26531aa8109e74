//! Sizing and sensing arithmetic for the inspection quadcopter: thrust per
//! motor, component mass budget, and the alignment angle of a three-sensor
//! laser array.

use std::io::Read;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Sensor range of the laser rangefinders, metres.
pub const LASER_RANGE_M: (f64, f64) = (0.2, 30.0);

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThrustParams {
    pub total_weight_g: f64,
    /// Safety factor; 1.1 reproduces the design thrust of the reference
    /// airframe.
    pub alpha: f64,
    pub n_motors: u32,
}

impl ThrustParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.total_weight_g > 0.0 && self.total_weight_g.is_finite()) {
            return Err(Error::InvalidParameter("total weight must be positive".into()));
        }
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return Err(Error::InvalidParameter("alpha must be positive".into()));
        }
        if self.n_motors == 0 {
            return Err(Error::InvalidParameter("motor count must be at least 1 (division by zero)".into()));
        }
        Ok(())
    }
}

/// `2·α·W / N`, grams.
pub fn thrust_per_motor(p: &ThrustParams) -> Result<f64> {
    p.validate()?;
    Ok(2.0 * p.alpha * p.total_weight_g / p.n_motors as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MassItem {
    pub name: String,
    pub unit_weight_g: f64,
    pub pieces: u32,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MassBudget {
    pub items: Vec<MassItem>,
}

impl MassBudget {
    pub fn validate(&self) -> Result<()> {
        for it in &self.items {
            if !(it.unit_weight_g >= 0.0 && it.unit_weight_g.is_finite()) {
                return Err(Error::InvalidParameter(format!("'{}': weight must be non-negative", it.name)));
            }
            if it.pieces == 0 {
                return Err(Error::InvalidParameter(format!("'{}': pieces must be at least 1", it.name)));
            }
        }
        Ok(())
    }

    /// The nine component rows of the reference airframe.
    pub fn reference_airframe() -> Self {
        let rows: [(&str, f64, u32); 9] = [
            ("Thermal camera", 72.0, 1),
            ("Camera", 116.0, 1),
            ("Laser sensors", 850.0, 12),
            ("Robot arm 6dof", 940.0, 2),
            ("Robot arm 4dof", 640.0, 2),
            ("Drone motor", 1038.0, 4),
            ("Drone frame", 12000.0, 1),
            ("IMU+GPS", 180.0, 1),
            ("FPGA board", 263.0, 1),
        ];
        Self {
            items: rows
                .iter()
                .map(|&(name, unit_weight_g, pieces)| MassItem {
                    name: name.into(),
                    unit_weight_g,
                    pieces,
                })
                .collect(),
        }
    }

    /// Reads `name,unit_weight_g,pieces` records with a header line.
    pub fn from_csv(reader: impl Read) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let items = rdr
            .deserialize()
            .collect::<std::result::Result<Vec<MassItem>, _>>()
            .map_err(|e| Error::Config(format!("mass budget: {e}")))?;
        let b = Self { items };
        b.validate()?;
        Ok(b)
    }

    pub fn total_pieces(&self) -> u64 {
        self.items.iter().map(|i| i.pieces as u64).sum()
    }
}

/// `Σ unit_weight × pieces`, grams.
pub fn total_mass(b: &MassBudget) -> Result<f64> {
    b.validate()?;
    Ok(b.items.iter().map(|i| i.unit_weight_g * i.pieces as f64).sum())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LaserReadings {
    pub distances_m: [f64; 3],
    pub spacing_m: f64,
}

impl LaserReadings {
    pub fn validate(&self) -> Result<()> {
        let (min, max) = LASER_RANGE_M;
        for &d in &self.distances_m {
            if !(min..=max).contains(&d) {
                return Err(Error::OutOfRange { value: d, min, max });
            }
        }
        if !(self.spacing_m > 0.0 && self.spacing_m.is_finite()) {
            return Err(Error::InvalidParameter("sensor spacing must be positive".into()));
        }
        Ok(())
    }
}

/// Angle between the sensor baseline and the target: arctangent of the
/// least-squares slope through `(k·spacing, d_k)`. Positive when the far end
/// of the array reads longer.
pub fn alignment_angle(r: &LaserReadings) -> Result<f64> {
    r.validate()?;
    let xs = [0.0, r.spacing_m, 2.0 * r.spacing_m];
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = r.distances_m.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (x, y) in xs.iter().zip(&r.distances_m) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
    }
    Ok((sxy / sxx).atan())
}
