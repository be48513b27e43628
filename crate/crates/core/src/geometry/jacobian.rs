use std::ops::Mul;

use serde::{Deserialize, Serialize};

use super::{DiskPoint, GeometryError};
use crate::mesh::ParamSurface;

/// Triangles whose signed area falls below this are treated as degenerate.
pub const DEGENERATE_AREA: f64 = 1e-14;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlanarTriangle {
    pub p1: DiskPoint,
    pub p2: DiskPoint,
    pub p3: DiskPoint,
}

impl PlanarTriangle {
    pub fn new(p1: DiskPoint, p2: DiskPoint, p3: DiskPoint) -> Self {
        PlanarTriangle { p1, p2, p3 }
    }

    pub fn signed_area(&self) -> f64 {
        let (a, b) = self.edges();
        0.5 * (a[0] * b[1] - a[1] * b[0])
    }

    pub fn is_degenerate(&self) -> bool {
        let area = self.signed_area();
        area.is_nan() || area.abs() < DEGENERATE_AREA
    }

    /// Edge vectors `(p2 - p1, p3 - p1)`.
    fn edges(&self) -> ([f64; 2], [f64; 2]) {
        (
            [self.p2.u - self.p1.u, self.p2.v - self.p1.v],
            [self.p3.u - self.p1.u, self.p3.v - self.p1.v],
        )
    }
}

/// Row-major 2×2 matrix with its determinant kept alongside.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Jacobian2x2 {
    entries: [f64; 4],
    det: f64,
}

impl Jacobian2x2 {
    pub const IDENTITY: Jacobian2x2 = Jacobian2x2 { entries: [1.0, 0.0, 0.0, 1.0], det: 1.0 };

    pub fn new(a: f64, b: f64, c: f64, d: f64) -> Self {
        Jacobian2x2 { entries: [a, b, c, d], det: a * d - b * c }
    }

    pub fn entries(&self) -> [f64; 4] {
        self.entries
    }

    pub fn det(&self) -> f64 {
        self.det
    }

    pub fn apply(&self, x: [f64; 2]) -> [f64; 2] {
        let [a, b, c, d] = self.entries;
        [a * x[0] + b * x[1], c * x[0] + d * x[1]]
    }
}

impl Mul for Jacobian2x2 {
    type Output = Jacobian2x2;

    fn mul(self, rhs: Jacobian2x2) -> Jacobian2x2 {
        let [a, b, c, d] = self.entries;
        let [e, f, g, h] = rhs.entries;
        Jacobian2x2::new(a * e + b * g, a * f + b * h, c * e + d * g, c * f + d * h)
    }
}

/// Linear part of the affine map taking `source` onto `target`.
///
/// `J = [w3 - w1, w2 - w1] · [v3 - v1, v2 - v1]⁻¹`, so that `J` sends every
/// source edge to the matching target edge.
pub fn derivative_map(
    source: &PlanarTriangle,
    target: &PlanarTriangle,
) -> Result<Jacobian2x2, GeometryError> {
    let area = source.signed_area();
    if area.is_nan() || area.abs() < DEGENERATE_AREA {
        return Err(GeometryError::DegenerateTriangle { area });
    }
    let (s2, s3) = source.edges();
    let (t2, t3) = target.edges();
    // Source edge matrix S = [s3 s2] (columns); det S = -2·area.
    let det_s = s3[0] * s2[1] - s2[0] * s3[1];
    let inv = [s2[1] / det_s, -s2[0] / det_s, -s3[1] / det_s, s3[0] / det_s];
    // J = T · S⁻¹ with T = [t3 t2].
    let t = [t3[0], t2[0], t3[1], t2[1]];
    Ok(Jacobian2x2::new(
        t[0] * inv[0] + t[1] * inv[2],
        t[0] * inv[1] + t[1] * inv[3],
        t[2] * inv[0] + t[3] * inv[2],
        t[2] * inv[1] + t[3] * inv[3],
    ))
}

/// Surface TBM of one face: `sqrt(det J)`.
pub fn tbm_value(jacobian: &Jacobian2x2) -> Result<f64, GeometryError> {
    let det = jacobian.det();
    if det.is_nan() || det <= 0.0 {
        return Err(GeometryError::Orientation { det });
    }
    Ok(det.sqrt())
}

/// Per-vertex TBM of `deformed` relative to `reference`.
///
/// Both surfaces must share connectivity. Each face contributes
/// `sqrt(det J)` of the map between its parameter-domain triangles, and a
/// vertex takes the mean over its incident faces. Vertices without faces get
/// `1.0`.
pub fn surface_tbm(
    reference: &ParamSurface,
    deformed: &ParamSurface,
) -> Result<Vec<f64>, GeometryError> {
    if reference.faces() != deformed.faces() || reference.len() != deformed.len() {
        return Err(GeometryError::ConnectivityMismatch);
    }
    let mut sum = vec![0.0; reference.len()];
    let mut count = vec![0usize; reference.len()];
    for face in reference.faces() {
        let tri = |s: &ParamSurface| {
            PlanarTriangle::new(s.param(face[0]), s.param(face[1]), s.param(face[2]))
        };
        let j = derivative_map(&tri(reference), &tri(deformed))?;
        let value = tbm_value(&j)?;
        for &v in face {
            sum[v] += value;
            count[v] += 1;
        }
    }
    Ok(sum
        .into_iter()
        .zip(count)
        .map(|(s, c)| if c == 0 { 1.0 } else { s / c as f64 })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn tri(a: (f64, f64), b: (f64, f64), c: (f64, f64)) -> PlanarTriangle {
        let p = |(u, v): (f64, f64)| DiskPoint::new_unchecked(u, v);
        PlanarTriangle::new(p(a), p(b), p(c))
    }

    fn sub(a: DiskPoint, b: DiskPoint) -> [f64; 2] {
        [a.u - b.u, a.v - b.v]
    }

    #[test]
    fn identical_triangles_give_identity() {
        let t = tri((0.1, 0.0), (0.4, 0.1), (0.2, 0.3));
        let j = derivative_map(&t, &t).unwrap();
        for (got, want) in j.entries().iter().zip([1.0, 0.0, 0.0, 1.0]) {
            assert!((got - want).abs() < 1e-12);
        }
        assert!((j.det() - 1.0).abs() < 1e-12);
        assert!((tbm_value(&j).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn doubled_triangle_gives_twice_identity() {
        let s = tri((0.1, 0.1), (0.3, 0.1), (0.1, 0.25));
        let t = tri((0.1, 0.1), (0.5, 0.1), (0.1, 0.4));
        let j = derivative_map(&s, &t).unwrap();
        for (got, want) in j.entries().iter().zip([2.0, 0.0, 0.0, 2.0]) {
            assert!((got - want).abs() < 1e-12);
        }
        assert!((j.det() - 4.0).abs() < 1e-12);
        assert!((tbm_value(&j).unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn degenerate_source_is_rejected() {
        let s = tri((0.0, 0.0), (0.1, 0.1), (0.2, 0.2));
        let t = tri((0.0, 0.0), (0.1, 0.0), (0.0, 0.1));
        assert!(matches!(derivative_map(&s, &t), Err(GeometryError::DegenerateTriangle { .. })));
        // A degenerate target is fine for the map itself but fails the TBM.
        let j = derivative_map(&t, &s).unwrap();
        assert!(matches!(tbm_value(&j), Err(GeometryError::Orientation { .. })));
    }

    #[test]
    fn flipped_target_is_an_orientation_error() {
        let s = tri((0.0, 0.0), (0.1, 0.0), (0.0, 0.1));
        let t = tri((0.0, 0.0), (0.0, 0.1), (0.1, 0.0));
        let j = derivative_map(&s, &t).unwrap();
        assert!(j.det() < 0.0);
        assert!(tbm_value(&j).is_err());
    }

    fn coord() -> impl Strategy<Value = f64> {
        -0.6..0.6f64
    }

    fn triangle() -> impl Strategy<Value = PlanarTriangle> {
        (coord(), coord(), coord(), coord(), coord(), coord())
            .prop_map(|(a, b, c, d, e, f)| tri((a, b), (c, d), (e, f)))
            .prop_filter("non-degenerate", |t| t.signed_area().abs() > 1e-3)
    }

    proptest! {
        #[test]
        fn reconstructs_target_edges(s in triangle(), t in triangle()) {
            let j = derivative_map(&s, &t).unwrap();
            for (se, te) in [(sub(s.p2, s.p1), sub(t.p2, t.p1)), (sub(s.p3, s.p1), sub(t.p3, t.p1))] {
                let got = j.apply(se);
                prop_assert!((got[0] - te[0]).abs() < 1e-10);
                prop_assert!((got[1] - te[1]).abs() < 1e-10);
            }
            let [a, b, c, d] = j.entries();
            let recomputed = a * d - b * c;
            prop_assert!((j.det() - recomputed).abs() <= 1e-12 * recomputed.abs().max(1e-300));
        }

        #[test]
        fn tbm_is_multiplicative(a in triangle(), b in triangle(), c in triangle()) {
            let j1 = derivative_map(&a, &b).unwrap();
            let j2 = derivative_map(&b, &c).unwrap();
            prop_assume!(j1.det() > 0.0 && j2.det() > 0.0);
            let both = tbm_value(&(j2 * j1)).unwrap();
            let prod = tbm_value(&j1).unwrap() * tbm_value(&j2).unwrap();
            prop_assert!((both - prod).abs() <= 1e-10 * prod);
        }
    }
}
