//! Geometric primitives: poses, the pinhole camera, bearing vectors and the
//! error metrics used to score estimated poses.
//!
//! All camera-frame observations are stored as unit vectors: a point
//! observation is the bearing through the pixel, a line observation is the
//! unit normal of the plane spanned by the 2D line and the camera center.

use nalgebra::{Matrix3, Vector2, Vector3};

use crate::error::{Error, Result};

/// Bearings closer than this to parallel cannot define a plane normal.
pub const PARALLEL_BEARING_TOL: f64 = 1e-10;

/// A rigid transform from the object frame into the camera frame.
///
/// `rotation` is a proper rotation matrix (RᵀR = I, det R = +1) and
/// `translation` is expressed in scene length units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose {
    pub rotation: Matrix3<f64>,
    pub translation: Vector3<f64>,
}

impl Pose {
    pub fn new(rotation: Matrix3<f64>, translation: Vector3<f64>) -> Self {
        Self {
            rotation,
            translation,
        }
    }

    pub fn identity() -> Self {
        Self::new(Matrix3::identity(), Vector3::zeros())
    }

    /// Maps an object-frame point into the camera frame.
    pub fn transform(&self, p: &Vector3<f64>) -> Vector3<f64> {
        self.rotation * p + self.translation
    }

    /// Frobenius deviation of RᵀR from the identity plus the determinant
    /// deviation from +1. Zero for an exact rotation.
    pub fn rotation_defect(&self) -> f64 {
        let r = &self.rotation;
        ((r.transpose() * r) - Matrix3::identity()).norm() + (r.determinant() - 1.0).abs()
    }
}

/// Pinhole intrinsics in pixels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CameraIntrinsics {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub width: u32,
    pub height: u32,
}

impl CameraIntrinsics {
    /// Standard Kinect v1 calibration (640x480).
    pub const KINECT_V1: CameraIntrinsics = CameraIntrinsics {
        fx: 525.0,
        fy: 525.0,
        cx: 319.5,
        cy: 239.5,
        width: 640,
        height: 480,
    };

    pub fn is_valid(&self) -> bool {
        self.fx > 0.0
            && self.fy > 0.0
            && self.cx > 0.0
            && self.cx < self.width as f64
            && self.cy > 0.0
            && self.cy < self.height as f64
    }

    /// Projects a camera-frame point with positive depth onto the image plane.
    pub fn project(&self, p: &Vector3<f64>) -> Option<Vector2<f64>> {
        if p.z <= 0.0 {
            return None;
        }
        Some(Vector2::new(
            self.fx * p.x / p.z + self.cx,
            self.fy * p.y / p.z + self.cy,
        ))
    }

    pub fn contains(&self, px: &Vector2<f64>) -> bool {
        px.x >= 0.0 && px.x < self.width as f64 && px.y >= 0.0 && px.y < self.height as f64
    }
}

impl Default for CameraIntrinsics {
    fn default() -> Self {
        Self::KINECT_V1
    }
}

/// A 3D point in the object frame paired with its observed bearing.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointCorrespondence {
    /// Point in the object frame.
    pub point: Vector3<f64>,
    /// Unit bearing in the camera frame.
    pub bearing: Vector3<f64>,
}

impl PointCorrespondence {
    /// Builds a correspondence from a (not necessarily unit) bearing.
    pub fn from_bearing(point: Vector3<f64>, bearing: Vector3<f64>) -> Self {
        Self {
            point,
            bearing: bearing.normalize(),
        }
    }

    pub fn from_pixel(point: Vector3<f64>, pixel: Vector2<f64>, k: &CameraIntrinsics) -> Self {
        Self {
            point,
            bearing: bearing_from_pixel(&pixel, k),
        }
    }
}

/// A 3D line (two object-frame points) paired with the unit normal of the
/// plane through the observed 2D line and the camera center.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineCorrespondence {
    pub p1: Vector3<f64>,
    pub p2: Vector3<f64>,
    /// Unit normal of the interpretation plane, camera frame.
    pub normal: Vector3<f64>,
}

impl LineCorrespondence {
    pub fn from_normal(p1: Vector3<f64>, p2: Vector3<f64>, normal: Vector3<f64>) -> Self {
        Self {
            p1,
            p2,
            normal: normal.normalize(),
        }
    }

    /// Builds the normal from two bearings sampled on the 2D line.
    pub fn from_bearings(
        p1: Vector3<f64>,
        p2: Vector3<f64>,
        u1: &Vector3<f64>,
        u2: &Vector3<f64>,
    ) -> Result<Self> {
        Ok(Self {
            p1,
            p2,
            normal: normal_from_bearings(u1, u2)?,
        })
    }

    pub fn from_pixels(
        p1: Vector3<f64>,
        p2: Vector3<f64>,
        px1: Vector2<f64>,
        px2: Vector2<f64>,
        k: &CameraIntrinsics,
    ) -> Result<Self> {
        let u1 = bearing_from_pixel(&px1, k);
        let u2 = bearing_from_pixel(&px2, k);
        Self::from_bearings(p1, p2, &u1, &u2)
    }
}

/// Skew-symmetric cross-product matrix: `skew(v) * w == v.cross(&w)`.
pub fn skew(v: &Vector3<f64>) -> Matrix3<f64> {
    Matrix3::new(0.0, -v.z, v.y, v.z, 0.0, -v.x, -v.y, v.x, 0.0)
}

/// Back-projects a pixel into a unit bearing through the camera center.
pub fn bearing_from_pixel(px: &Vector2<f64>, k: &CameraIntrinsics) -> Vector3<f64> {
    Vector3::new((px.x - k.cx) / k.fx, (px.y - k.cy) / k.fy, 1.0).normalize()
}

/// Unit normal of the plane through the camera center and two bearings.
pub fn normal_from_bearings(u1: &Vector3<f64>, u2: &Vector3<f64>) -> Result<Vector3<f64>> {
    let n = u1.cross(u2);
    let norm = n.norm();
    if norm < PARALLEL_BEARING_TOL {
        return Err(Error::DegenerateLine { norm });
    }
    Ok(n / norm)
}

/// Absolute angle of the relative rotation R_estᵀ·R_gt, in degrees.
///
/// The angle comes from the trace of the residual rotation, with the trace
/// clamped to [-1, 3] so rounding cannot push acos out of its domain.
pub fn rotation_error_deg(r_est: &Matrix3<f64>, r_gt: &Matrix3<f64>) -> f64 {
    let delta = r_est.transpose() * r_gt;
    let tr = delta.trace().clamp(-1.0, 3.0);
    (((tr - 1.0) / 2.0).clamp(-1.0, 1.0)).acos().to_degrees()
}

/// Relative translation error ‖t_est − t_gt‖ / ‖t_gt‖.
pub fn translation_error_rel(t_est: &Vector3<f64>, t_gt: &Vector3<f64>) -> Result<f64> {
    let norm = t_gt.norm();
    if norm < 1e-12 {
        return Err(Error::ZeroGroundTruth { norm });
    }
    Ok((t_est - t_gt).norm() / norm)
}

/// Frobenius-nearest proper rotation to an arbitrary 3x3 matrix
/// (orthogonal Procrustes with the determinant forced to +1).
pub fn nearest_rotation(m: &Matrix3<f64>) -> Matrix3<f64> {
    let svd = m.svd(true, true);
    let u = svd.u.expect("svd of 3x3 always yields u");
    let v_t = svd.v_t.expect("svd of 3x3 always yields v_t");
    let det = (u * v_t).determinant();
    u * Matrix3::from_diagonal(&Vector3::new(1.0, 1.0, det.signum())) * v_t
}

/// Sine of the angle between a point's observed ray and its transformed
/// position; zero when the collinearity constraint holds exactly.
pub fn collinearity_residual(pose: &Pose, pc: &PointCorrespondence) -> f64 {
    let v = pose.transform(&pc.point);
    let norm = v.norm();
    if norm == 0.0 {
        return 0.0;
    }
    pc.bearing.cross(&(v / norm)).norm()
}

/// Largest normalized distance of the line's transformed endpoints from the
/// interpretation plane.
pub fn coplanarity_residual(pose: &Pose, lc: &LineCorrespondence) -> f64 {
    let r1 = pose.transform(&lc.p1);
    let r2 = pose.transform(&lc.p2);
    let d1 = lc.normal.dot(&r1).abs() / r1.norm().max(1e-300);
    let d2 = lc.normal.dot(&r2).abs() / r2.norm().max(1e-300);
    d1.max(d2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use nalgebra::{Rotation3, Unit, UnitQuaternion};
    use proptest::prelude::*;

    fn rot_z(deg: f64) -> Matrix3<f64> {
        Rotation3::from_axis_angle(&Vector3::z_axis(), deg.to_radians()).into_inner()
    }

    #[test]
    fn skew_matches_definition() {
        let m = skew(&Vector3::new(1.0, 2.0, 3.0));
        let expected = Matrix3::new(0.0, -3.0, 2.0, 3.0, 0.0, -1.0, -2.0, 1.0, 0.0);
        assert_eq!(m, expected);
        assert_eq!(skew(&Vector3::zeros()), Matrix3::zeros());
    }

    #[test]
    fn bearing_at_principal_point_is_optical_axis() {
        let k = CameraIntrinsics::KINECT_V1;
        let u = bearing_from_pixel(&Vector2::new(k.cx, k.cy), &k);
        assert_relative_eq!(u, Vector3::new(0.0, 0.0, 1.0), epsilon = 1e-15);

        let u = bearing_from_pixel(&Vector2::new(k.cx + k.fx, k.cy), &k);
        let s = 1.0 / 2.0f64.sqrt();
        assert_relative_eq!(u, Vector3::new(s, 0.0, s), epsilon = 1e-15);
    }

    #[test]
    fn normal_from_canonical_bearings() {
        let n = normal_from_bearings(&Vector3::x(), &Vector3::y()).unwrap();
        assert_relative_eq!(n, Vector3::z(), epsilon = 1e-15);

        let u = Vector3::new(0.3, -0.2, 0.9).normalize();
        assert!(matches!(
            normal_from_bearings(&u, &u),
            Err(Error::DegenerateLine { .. })
        ));
    }

    #[test]
    fn rotation_error_known_angles() {
        let r = rot_z(33.0);
        assert_relative_eq!(rotation_error_deg(&r, &r), 0.0, epsilon = 1e-12);
        assert_relative_eq!(
            rotation_error_deg(&(r * rot_z(10.0)), &r),
            10.0,
            epsilon = 1e-9
        );
    }

    #[test]
    fn translation_error_examples() {
        let a = Vector3::new(0.0, 0.0, 1.0);
        let b = Vector3::new(0.0, 0.0, 2.0);
        assert_eq!(translation_error_rel(&b, &b).unwrap(), 0.0);
        assert_relative_eq!(translation_error_rel(&a, &b).unwrap(), 0.5);
        assert!(matches!(
            translation_error_rel(&a, &Vector3::zeros()),
            Err(Error::ZeroGroundTruth { .. })
        ));
    }

    #[test]
    fn nearest_rotation_fixes_scale_and_sign() {
        let r = rot_z(47.0);
        assert_relative_eq!(nearest_rotation(&r), r, epsilon = 1e-12);
        assert_relative_eq!(nearest_rotation(&(r * 1.000001)), r, epsilon = 1e-5);

        let improper = r * Matrix3::from_diagonal(&Vector3::new(1.0, 1.0, -1.0));
        let fixed = nearest_rotation(&improper);
        assert_relative_eq!(fixed.determinant(), 1.0, epsilon = 1e-12);
    }

    proptest! {
        #[test]
        fn skew_reproduces_cross_product(
            v in prop::array::uniform3(-10.0f64..10.0),
            w in prop::array::uniform3(-10.0f64..10.0),
        ) {
            let v = Vector3::from(v);
            let w = Vector3::from(w);
            let lhs = skew(&v) * w;
            let rhs = v.cross(&w);
            prop_assert!((lhs - rhs).norm() < 1e-12);
            prop_assert!((skew(&v).transpose() + skew(&v)).norm() == 0.0);
        }

        #[test]
        fn bearing_round_trips_through_projection(
            px in 1.0f64..639.0,
            py in 1.0f64..479.0,
            depth in 0.1f64..10.0,
        ) {
            let k = CameraIntrinsics::KINECT_V1;
            let u = bearing_from_pixel(&Vector2::new(px, py), &k);
            let reproj = k.project(&(u * depth)).unwrap();
            prop_assert!((reproj - Vector2::new(px, py)).norm() < 1e-9);
        }

        #[test]
        fn normal_is_perpendicular_to_both_bearings(
            a in prop::array::uniform3(-1.0f64..1.0),
            b in prop::array::uniform3(-1.0f64..1.0),
        ) {
            let u1 = Vector3::from(a);
            let u2 = Vector3::from(b);
            prop_assume!(u1.norm() > 1e-3 && u2.norm() > 1e-3);
            let u1 = u1.normalize();
            let u2 = u2.normalize();
            prop_assume!(u1.cross(&u2).norm() > 1e-6);
            let n = normal_from_bearings(&u1, &u2).unwrap();
            prop_assert!(n.dot(&u1).abs() < 1e-12);
            prop_assert!(n.dot(&u2).abs() < 1e-12);
        }

        #[test]
        fn rotation_error_matches_quaternion_angle(
            axis_a in prop::array::uniform3(-1.0f64..1.0),
            angle_a in -3.1f64..3.1,
            axis_b in prop::array::uniform3(-1.0f64..1.0),
            angle_b in -3.1f64..3.1,
        ) {
            let axis_a = Vector3::from(axis_a);
            let axis_b = Vector3::from(axis_b);
            prop_assume!(axis_a.norm() > 1e-3 && axis_b.norm() > 1e-3);
            let ra = Rotation3::from_axis_angle(&Unit::new_normalize(axis_a), angle_a);
            let rb = Rotation3::from_axis_angle(&Unit::new_normalize(axis_b), angle_b);

            // Independent route: relative-rotation angle via quaternion extraction.
            let q = UnitQuaternion::from_rotation_matrix(&(ra.inverse() * rb));
            let expect = q.angle().to_degrees();
            let got = rotation_error_deg(&ra.into_inner(), &rb.into_inner());
            prop_assert!((got - expect).abs() < 1e-9, "{got} vs {expect}");
            // Symmetry.
            let swapped = rotation_error_deg(&rb.into_inner(), &ra.into_inner());
            prop_assert!((got - swapped).abs() < 1e-9);
        }

        #[test]
        fn translation_error_is_scale_invariant(
            a in prop::array::uniform3(-5.0f64..5.0),
            b in prop::array::uniform3(-5.0f64..5.0),
            lambda in 0.01f64..100.0,
        ) {
            let ta = Vector3::from(a);
            let tb = Vector3::from(b);
            prop_assume!(tb.norm() > 1e-6);
            let base = translation_error_rel(&ta, &tb).unwrap();
            let scaled = translation_error_rel(&(ta * lambda), &(tb * lambda)).unwrap();
            prop_assert!((base - scaled).abs() < 1e-9 * (1.0 + base));
        }
    }
}
