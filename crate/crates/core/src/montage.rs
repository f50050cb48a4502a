//! Electrode montages: named scalp positions on a spherical head model.
//!
//! A montage fixes the channel count, the channel order, and the 3-D
//! geometry that the channel graph is built from. The crate ships a
//! 19-electrode 10/20 montage as a JSON data file; any montage with the
//! same schema can be substituted at run time.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One electrode: a label plus a point on the head sphere.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct Electrode {
    pub label: String,
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Electrode {
    pub fn position(&self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }
}

/// A named set of electrodes on a sphere of radius `radius`.
///
/// Invariants enforced on construction and load:
/// - at least two electrodes, labels unique (case-insensitive)
/// - every electrode within `1e-6 * radius` of the sphere surface
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct Montage {
    pub name: String,
    pub radius: f64,
    pub electrodes: Vec<Electrode>,
}

/// Relative tolerance for the on-sphere check.
pub const ON_SPHERE_REL_TOL: f64 = 1e-6;

/// The embedded default montage (19-channel 10/20 on the unit sphere).
const DEFAULT_MONTAGE_JSON: &str = include_str!("../data/montage_10_20.json");

impl Montage {
    pub fn new(name: impl Into<String>, radius: f64, electrodes: Vec<Electrode>) -> Result<Self> {
        let montage = Montage {
            name: name.into(),
            radius,
            electrodes,
        };
        montage.validate()?;
        Ok(montage)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.radius.is_finite() && self.radius > 0.0) {
            return Err(Error::validation(format!(
                "montage radius must be positive and finite, got {}",
                self.radius
            )));
        }
        if self.electrodes.len() < 2 {
            return Err(Error::validation(format!(
                "montage needs at least 2 electrodes, got {}",
                self.electrodes.len()
            )));
        }
        let mut seen = std::collections::HashSet::new();
        for e in &self.electrodes {
            if !seen.insert(e.label.to_ascii_lowercase()) {
                return Err(Error::validation(format!(
                    "duplicate electrode label '{}'",
                    e.label
                )));
            }
            let norm = (e.x * e.x + e.y * e.y + e.z * e.z).sqrt();
            if !norm.is_finite() || (norm - self.radius).abs() > ON_SPHERE_REL_TOL * self.radius {
                return Err(Error::validation(format!(
                    "electrode '{}' is off the sphere: |p| = {}, radius = {}",
                    e.label, norm, self.radius
                )));
            }
        }
        Ok(())
    }

    pub fn num_channels(&self) -> usize {
        self.electrodes.len()
    }

    pub fn labels(&self) -> Vec<String> {
        self.electrodes.iter().map(|e| e.label.clone()).collect()
    }

    /// Index of a label, matched case-insensitively.
    pub fn index_of(&self, label: &str) -> Option<usize> {
        let needle = label.to_ascii_lowercase();
        self.electrodes
            .iter()
            .position(|e| e.label.to_ascii_lowercase() == needle)
    }

    /// The montage shipped with the crate: 19 standard 10/20 positions on
    /// the unit sphere.
    pub fn shipped_10_20() -> Montage {
        let montage: Montage =
            serde_json::from_str(DEFAULT_MONTAGE_JSON).expect("embedded montage parses");
        montage.validate().expect("embedded montage is valid");
        montage
    }

    /// Recompute the standard 10/20 positions from their angular
    /// definition on the unit sphere. `shipped_10_20` is this function's
    /// output frozen into a data file.
    ///
    /// Frame: +x right, +y nasion (front), +z vertex. Midline and coronal
    /// electrodes sit on their great circles at 10/20 percentages of the
    /// arc; the circumferential ring sits at 18 deg elevation; F3/F4/P3/P4
    /// are spherical midpoints of their neighbouring arc positions.
    pub fn standard_10_20() -> Montage {
        let d = std::f64::consts::PI / 180.0;
        let ring = |az_deg: f64| -> [f64; 3] {
            let (el, az) = (18.0 * d, az_deg * d);
            [el.cos() * az.sin(), el.cos() * az.cos(), el.sin()]
        };
        // Midline: angle measured from the nasion along the midline arc.
        let midline = |a_deg: f64| -> [f64; 3] {
            let a = a_deg * d;
            [0.0, a.cos(), a.sin()]
        };
        // Coronal: angle measured from the left preauricular point.
        let coronal = |b_deg: f64| -> [f64; 3] {
            let b = b_deg * d;
            [-b.cos(), 0.0, b.sin()]
        };
        let mid = |a: [f64; 3], b: [f64; 3]| -> [f64; 3] {
            let s = [a[0] + b[0], a[1] + b[1], a[2] + b[2]];
            let n = (s[0] * s[0] + s[1] * s[1] + s[2] * s[2]).sqrt();
            [s[0] / n, s[1] / n, s[2] / n]
        };

        let fz = midline(54.0);
        let pz = midline(126.0);
        let f7 = ring(-54.0);
        let f8 = ring(54.0);
        let t5 = ring(-126.0);
        let t6 = ring(126.0);

        let positions: Vec<(&str, [f64; 3])> = vec![
            ("Fp1", ring(-18.0)),
            ("Fp2", ring(18.0)),
            ("F7", f7),
            ("F3", mid(f7, fz)),
            ("Fz", fz),
            ("F4", mid(f8, fz)),
            ("F8", f8),
            ("T3", coronal(18.0)),
            ("C3", coronal(54.0)),
            ("Cz", [0.0, 0.0, 1.0]),
            ("C4", coronal(126.0)),
            ("T4", coronal(162.0)),
            ("T5", t5),
            ("P3", mid(t5, pz)),
            ("Pz", pz),
            ("P4", mid(t6, pz)),
            ("T6", t6),
            ("O1", ring(-162.0)),
            ("O2", ring(162.0)),
        ];

        let electrodes = positions
            .into_iter()
            .map(|(label, p)| Electrode {
                label: label.to_string(),
                x: p[0],
                y: p[1],
                z: p[2],
            })
            .collect();

        Montage::new("standard-10-20", 1.0, electrodes).expect("standard montage is valid")
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Montage> {
        let text = std::fs::read_to_string(path)?;
        let montage: Montage = serde_json::from_str(&text)?;
        montage.validate()?;
        Ok(montage)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let text = serde_json::to_string_pretty(self)?;
        std::fs::write(path, text)?;
        Ok(())
    }
}
