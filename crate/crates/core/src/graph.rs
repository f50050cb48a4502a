//! The fully connected weighted channel graph: geodesic distances on the
//! scalp sphere and the reciprocal-distance edge-weight matrix.

use ndarray::Array2;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::montage::{Montage, ON_SPHERE_REL_TOL};

/// Below this central angle (radians) two electrodes are treated as
/// coincident and edge-weight construction fails loudly.
pub const DISTANCE_EPSILON: f64 = 1e-9;

/// Symmetric channel-pair weights with zero diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeWeightMatrix {
    pub weights: Array2<f64>,
    pub montage_name: String,
    pub labels: Vec<String>,
}

/// Great-circle angle between two on-sphere points, in radians.
///
/// The normalized dot product is clamped to [-1, 1] before `acos`, so
/// antipodal and coincident pairs are exact despite rounding.
pub fn geodesic_distance(a: [f64; 3], b: [f64; 3], radius: f64) -> Result<f64> {
    if !(radius.is_finite() && radius > 0.0) {
        return Err(Error::validation("radius must be positive"));
    }
    for (name, p) in [("first", a), ("second", b)] {
        let norm = (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt();
        if !norm.is_finite() || (norm - radius).abs() > ON_SPHERE_REL_TOL * radius {
            return Err(Error::validation(format!(
                "{name} point is off the sphere: |p| = {norm}, radius = {radius}"
            )));
        }
    }
    let dot = (a[0] * b[0] + a[1] * b[1] + a[2] * b[2]) / (radius * radius);
    Ok(dot.clamp(-1.0, 1.0).acos())
}

/// Build the reciprocal-geodesic-distance weight matrix for a montage:
/// `w[i][j] = 1 / D_ij` off the diagonal, zero on it.
pub fn build_edge_weights(montage: &Montage) -> Result<EdgeWeightMatrix> {
    montage.validate()?;
    let c = montage.num_channels();
    let mut weights = Array2::<f64>::zeros((c, c));
    for i in 0..c {
        for j in (i + 1)..c {
            let d = geodesic_distance(
                montage.electrodes[i].position(),
                montage.electrodes[j].position(),
                montage.radius,
            )?;
            if d <= DISTANCE_EPSILON {
                return Err(Error::CoincidentElectrodes(
                    montage.electrodes[i].label.clone(),
                    montage.electrodes[j].label.clone(),
                ));
            }
            let w = 1.0 / d;
            weights[[i, j]] = w;
            weights[[j, i]] = w; // mirrored, so symmetry is exact
        }
    }
    Ok(EdgeWeightMatrix {
        weights,
        montage_name: montage.name.clone(),
        labels: montage.labels(),
    })
}

impl EdgeWeightMatrix {
    pub fn num_channels(&self) -> usize {
        self.weights.nrows()
    }

    /// Full-precision CSV: C rows of C "%.17g"-formatted columns.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for row in self.weights.rows() {
            let cells: Vec<String> = row.iter().map(|&v| format_g17(v)).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }

    pub fn to_json(&self) -> Result<String> {
        #[derive(Serialize)]
        struct Json<'a> {
            labels: &'a [String],
            weights: Vec<Vec<f64>>,
        }
        let weights = self
            .weights
            .rows()
            .into_iter()
            .map(|r| r.to_vec())
            .collect();
        Ok(serde_json::to_string_pretty(&Json {
            labels: &self.labels,
            weights,
        })?)
    }

    /// Symmetrically permute rows and columns: `out[i][j] = w[p[i]][p[j]]`.
    /// Used by the geometry-ablation experiments.
    pub fn permuted(&self, perm: &[usize]) -> Result<EdgeWeightMatrix> {
        let c = self.num_channels();
        if perm.len() != c {
            return Err(Error::shape(format!(
                "permutation of length {} for {c} channels",
                perm.len()
            )));
        }
        let mut seen = vec![false; c];
        for &p in perm {
            if p >= c || seen[p] {
                return Err(Error::validation("not a permutation"));
            }
            seen[p] = true;
        }
        let mut weights = Array2::<f64>::zeros((c, c));
        for i in 0..c {
            for j in 0..c {
                weights[[i, j]] = self.weights[[perm[i], perm[j]]];
            }
        }
        Ok(EdgeWeightMatrix {
            weights,
            montage_name: format!("{}-permuted", self.montage_name),
            labels: self.labels.clone(),
        })
    }
}

/// Shortest representation of an f64 that round-trips, like C's "%.17g".
fn format_g17(v: f64) -> String {
    let s = format!("{v}");
    if s.parse::<f64>() == Ok(v) {
        s
    } else {
        format!("{v:.17e}")
    }
}
