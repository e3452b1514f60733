use serde::{Deserialize, Serialize};

use crate::geometry::{Aabb, Vec2};

/// How traced samples are paired with target samples.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CurveMode {
    /// Sample `q` of the trace is compared with target sample `q`.
    #[default]
    Fixed,
    /// Any one-to-one pairing is allowed; the cheapest is used.
    Arbitrary,
}

/// Sampled target path for the end-effector.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CurveRecord", into = "CurveRecord")]
pub struct TargetCurve {
    samples: Vec<Vec2>,
    mode: CurveMode,
}

#[derive(Serialize, Deserialize)]
struct CurveRecord {
    #[serde(default)]
    mode: CurveMode,
    samples: Vec<Vec2>,
}

impl TryFrom<CurveRecord> for TargetCurve {
    type Error = String;
    fn try_from(r: CurveRecord) -> Result<Self, String> {
        TargetCurve::new(r.samples, r.mode)
    }
}

impl From<TargetCurve> for CurveRecord {
    fn from(c: TargetCurve) -> Self {
        CurveRecord {
            mode: c.mode,
            samples: c.samples,
        }
    }
}

impl TargetCurve {
    pub fn new(samples: Vec<Vec2>, mode: CurveMode) -> Result<Self, String> {
        if samples.len() < 3 {
            return Err(format!(
                "a target curve needs at least 3 samples, got {}",
                samples.len()
            ));
        }
        if let Some(i) = samples.iter().position(|p| !p.is_finite()) {
            return Err(format!("sample {i} is not finite"));
        }
        Ok(TargetCurve { samples, mode })
    }

    pub fn samples(&self) -> &[Vec2] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn mode(&self) -> CurveMode {
        self.mode
    }

    pub fn with_mode(mut self, mode: CurveMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn centroid(&self) -> Vec2 {
        let sum = self.samples.iter().fold(Vec2::ZERO, |a, &b| a + b);
        sum * (1.0 / self.samples.len() as f64)
    }

    pub fn bounds(&self) -> Aabb {
        Aabb::of_points(&self.samples).expect("non-empty")
    }

    /// Default workspace side: twice the diagonal of the bounding box.
    pub fn default_box_side(&self) -> f64 {
        let d = self.bounds().diagonal();
        if d > 0.0 {
            2.0 * d
        } else {
            1.0
        }
    }

    /// Default regularization weight: 1% of the mean squared distance of the
    /// samples from their centroid.
    pub fn default_lambda(&self) -> f64 {
        let c = self.centroid();
        let msd = self.samples.iter().map(|p| (*p - c).norm_sq()).sum::<f64>()
            / self.samples.len() as f64;
        0.01 * msd
    }

    /// Resample a closed polyline to `count` points spaced evenly by arc
    /// length, starting at the first vertex.
    pub fn resample(points: &[Vec2], count: usize, mode: CurveMode) -> Result<Self, String> {
        TargetCurve::new(resample_closed(points, count)?, mode)
    }
}

/// Equal arc-length resampling of a polyline treated as closed. Sample `q`
/// sits at arc length `q·L/count` from the first vertex.
pub fn resample_closed(points: &[Vec2], count: usize) -> Result<Vec<Vec2>, String> {
    if points.len() < 2 {
        return Err("need at least two points to resample".into());
    }
    if count == 0 {
        return Err("sample count must be positive".into());
    }
    let mut poly: Vec<Vec2> = points.to_vec();
    if poly.first() != poly.last() {
        poly.push(poly[0]);
    }
    let mut cumulative = Vec::with_capacity(poly.len());
    cumulative.push(0.0);
    for w in poly.windows(2) {
        let last = *cumulative.last().unwrap();
        cumulative.push(last + w[0].distance(w[1]));
    }
    let total = *cumulative.last().unwrap();
    if !(total > 0.0) {
        return Err("curve has zero length".into());
    }
    let mut out = Vec::with_capacity(count);
    let mut seg = 0;
    for q in 0..count {
        let s = total * q as f64 / count as f64;
        while seg + 1 < poly.len() - 1 && cumulative[seg + 1] <= s {
            seg += 1;
        }
        let len = cumulative[seg + 1] - cumulative[seg];
        let f = if len > 0.0 {
            (s - cumulative[seg]) / len
        } else {
            0.0
        };
        out.push(poly[seg] + (poly[seg + 1] - poly[seg]) * f);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn square_resamples_to_side_midpoints() {
        let sq = [
            Vec2::new(0.0, 0.0),
            Vec2::new(2.0, 0.0),
            Vec2::new(2.0, 2.0),
            Vec2::new(0.0, 2.0),
        ];
        let r = resample_closed(&sq, 8).unwrap();
        assert_eq!(r[0], Vec2::new(0.0, 0.0));
        assert_eq!(r[1], Vec2::new(1.0, 0.0));
        assert_eq!(r[3], Vec2::new(2.0, 1.0));
        assert_eq!(r[7], Vec2::new(0.0, 1.0));
    }

    #[test]
    fn resampling_is_idempotent_on_even_polygons() {
        let pts: Vec<Vec2> = (0..12)
            .map(|i| Vec2::from_angle(std::f64::consts::TAU * i as f64 / 12.0) * 3.0)
            .collect();
        let r = resample_closed(&pts, 12).unwrap();
        for (a, b) in pts.iter().zip(&r) {
            assert_abs_diff_eq!(a.distance(*b), 0.0, epsilon = 1e-9);
        }
    }

    #[test]
    fn rejects_short_and_degenerate_input() {
        assert!(TargetCurve::new(vec![Vec2::ZERO; 2], CurveMode::Fixed).is_err());
        assert!(resample_closed(&[Vec2::ZERO, Vec2::ZERO], 4).is_err());
        let json = r#"{"samples": [[0,0],[1,0],[1,1]]}"#;
        let c: TargetCurve = serde_json::from_str(json).unwrap();
        assert_eq!(c.mode(), CurveMode::Fixed);
        assert!(
            serde_json::from_str::<TargetCurve>(r#"{"mode":"arbitrary","samples":[[0,0]]}"#)
                .is_err()
        );
    }

    #[test]
    fn default_scales() {
        let c = TargetCurve::new(
            vec![
                Vec2::new(-1.0, 0.0),
                Vec2::new(1.0, 0.0),
                Vec2::new(1.0, 2.0),
                Vec2::new(-1.0, 2.0),
            ],
            CurveMode::Fixed,
        )
        .unwrap();
        assert_eq!(c.centroid(), Vec2::new(0.0, 1.0));
        assert_abs_diff_eq!(c.default_box_side(), 2.0 * 8f64.sqrt(), epsilon = 1e-12);
        assert_abs_diff_eq!(c.default_lambda(), 0.02, epsilon = 1e-12);
    }
}
