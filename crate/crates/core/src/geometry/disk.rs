use serde::{Deserialize, Serialize};

use super::GeometryError;

/// A point of the open unit disk.
///
/// The same type carries Klein-model and Poincaré-model coordinates; which
/// model a value lives in is decided by the caller.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiskPoint {
    pub u: f64,
    pub v: f64,
}

impl DiskPoint {
    pub const ORIGIN: DiskPoint = DiskPoint { u: 0.0, v: 0.0 };

    /// Builds a point and checks that it lies strictly inside the unit disk.
    pub fn new(u: f64, v: f64) -> Result<Self, GeometryError> {
        let p = DiskPoint { u, v };
        p.validate()?;
        Ok(p)
    }

    /// Builds a point without the disk check.
    pub const fn new_unchecked(u: f64, v: f64) -> Self {
        DiskPoint { u, v }
    }

    pub fn norm_sq(self) -> f64 {
        self.u * self.u + self.v * self.v
    }

    pub fn norm(self) -> f64 {
        self.u.hypot(self.v)
    }

    pub fn is_inside(self) -> bool {
        // NaN compares false, so non-finite points are rejected too.
        self.norm_sq() < 1.0
    }

    pub fn validate(self) -> Result<(), GeometryError> {
        if self.is_inside() {
            Ok(())
        } else {
            Err(GeometryError::OutsideDisk { u: self.u, v: self.v })
        }
    }

    fn dist(self, other: DiskPoint) -> f64 {
        (self.u - other.u).hypot(self.v - other.v)
    }
}

/// Hyperbolic distance between two points in the Klein model.
///
/// The chord through `a` and `b` meets the unit circle at two points. The one
/// on `a`'s side is labeled `ea` and the one on `b`'s side `eb`, so that
/// `|ea b| > |ea a|` and `|eb a| > |eb b|`; the distance is then
/// `½ ln(|ea b|·|eb a| / (|ea a|·|eb b|))`.
pub fn klein_distance(a: DiskPoint, b: DiskPoint) -> Result<f64, GeometryError> {
    a.validate()?;
    b.validate()?;
    Ok(klein_distance_unchecked(a, b))
}

/// [`klein_distance`] for points already known to be inside the disk.
pub fn klein_distance_unchecked(a: DiskPoint, b: DiskPoint) -> f64 {
    if a == b {
        return 0.0;
    }
    let (e1, e2) = chord_endpoints(a, b);
    // Label the endpoints from the ordering constraints rather than from the
    // root order of the quadratic.
    let (ea, eb) = if e1.dist(a) < e1.dist(b) { (e1, e2) } else { (e2, e1) };
    let num = ea.dist(b) * eb.dist(a);
    let den = ea.dist(a) * eb.dist(b);
    let d = 0.5 * (num / den).ln();
    d.max(0.0)
}

/// Intersections of the line through `a` and `b` with the unit circle.
///
/// Solves `|a + s (b - a)|² = 1`; both roots are real because `a` is inside
/// the disk, and they have opposite signs.
fn chord_endpoints(a: DiskPoint, b: DiskPoint) -> (DiskPoint, DiskPoint) {
    let (eu, ev) = (b.u - a.u, b.v - a.v);
    let qa = eu * eu + ev * ev;
    let qb = 2.0 * (a.u * eu + a.v * ev);
    let qc = a.norm_sq() - 1.0;
    let disc = (qb * qb - 4.0 * qa * qc).sqrt();
    // Cancellation-free form of the two roots; qc < 0 keeps the denominators
    // away from zero.
    let q = -0.5 * (qb + qb.signum() * disc);
    let q = if q == 0.0 { -0.5 * disc } else { q };
    let s1 = q / qa;
    let s2 = qc / q;
    let at = |s: f64| DiskPoint::new_unchecked(a.u + s * eu, a.v + s * ev);
    (at(s1), at(s2))
}

/// Poincaré-disk point to the Klein model: `k = 2p / (1 + |p|²)`.
pub fn poincare_to_klein(p: DiskPoint) -> Result<DiskPoint, GeometryError> {
    p.validate()?;
    let s = 2.0 / (1.0 + p.norm_sq());
    Ok(DiskPoint::new_unchecked(s * p.u, s * p.v))
}

/// Klein point to the Poincaré disk: `p = k / (1 + sqrt(1 - |k|²))`.
pub fn klein_to_poincare(k: DiskPoint) -> Result<DiskPoint, GeometryError> {
    k.validate()?;
    let s = 1.0 / (1.0 + (1.0 - k.norm_sq()).sqrt());
    Ok(DiskPoint::new_unchecked(s * k.u, s * k.v))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn p(u: f64, v: f64) -> DiskPoint {
        DiskPoint::new(u, v).unwrap()
    }

    // Independent route: Poincaré-model distance, arcosh form.
    fn poincare_distance(x: DiskPoint, y: DiskPoint) -> f64 {
        let num = 2.0 * ((x.u - y.u).powi(2) + (x.v - y.v).powi(2));
        let den = (1.0 - x.norm_sq()) * (1.0 - y.norm_sq());
        (1.0 + num / den).acosh()
    }

    #[test]
    fn identical_points_are_at_zero_distance() {
        let a = p(0.3, -0.2);
        assert_eq!(klein_distance(a, a).unwrap(), 0.0);
    }

    #[test]
    fn origin_to_half() {
        let d = klein_distance(DiskPoint::ORIGIN, p(0.5, 0.0)).unwrap();
        assert_relative_eq!(d, 0.5 * 3f64.ln(), epsilon = 1e-12);
        assert_relative_eq!(d, 0.5f64.atanh(), epsilon = 1e-12);
    }

    #[test]
    fn symmetric_and_matches_poincare_route() {
        let a = p(0.2, 0.1);
        let b = p(-0.3, 0.4);
        let ab = klein_distance(a, b).unwrap();
        let ba = klein_distance(b, a).unwrap();
        assert!((ab - ba).abs() < 1e-9);
        let oracle = poincare_distance(klein_to_poincare(a).unwrap(), klein_to_poincare(b).unwrap());
        assert!((ab - oracle).abs() < 1e-9 * oracle.max(1.0));
    }

    #[test]
    fn rejects_points_on_or_outside_circle() {
        let inside = p(0.1, 0.1);
        let on = DiskPoint::new_unchecked(1.0, 0.0);
        let out = DiskPoint::new_unchecked(0.9, 0.9);
        assert!(klein_distance(inside, on).is_err());
        assert!(klein_distance(out, inside).is_err());
        assert!(DiskPoint::new(f64::NAN, 0.0).is_err());
    }

    #[test]
    fn conversions() {
        assert_eq!(poincare_to_klein(DiskPoint::ORIGIN).unwrap(), DiskPoint::ORIGIN);
        let k = poincare_to_klein(p(0.5, 0.0)).unwrap();
        assert_relative_eq!(k.u, 0.8, epsilon = 1e-15);
        assert_eq!(k.v, 0.0);
        let q = p(0.3, -0.4);
        let back = klein_to_poincare(poincare_to_klein(q).unwrap()).unwrap();
        assert!((back.u - q.u).abs() < 1e-12 && (back.v - q.v).abs() < 1e-12);
    }

    #[test]
    fn near_boundary_pair_is_finite() {
        let a = p(0.999_999, 0.0);
        let b = p(-0.999_999, 0.0);
        let d = klein_distance(a, b).unwrap();
        let oracle = poincare_distance(klein_to_poincare(a).unwrap(), klein_to_poincare(b).unwrap());
        assert!(d.is_finite());
        assert!((d - oracle).abs() < 1e-6 * oracle);
    }
}
