//! 2D similarity-transform algebra and estimation.
//!
//! A similarity transform is a uniform scale, a rotation and a translation
//! (4 degrees of freedom in the plane). Two estimators are provided:
//!
//! * [`estimate_similarity_ls`] - closed-form least-squares fit over n >= 2
//!   point correspondences (Umeyama's SVD-of-covariance construction, with
//!   the determinant correction that rules out reflections), and
//! * [`estimate_similarity_two_point`] - the exact solution through two
//!   anchor correspondences.

use nalgebra::{Matrix2, Rotation2, Vector2};
use thiserror::Error;

pub type Vec2 = Vector2<f64>;

/// Two coincident points closer than this cannot anchor a transform.
pub const DEGENERACY_EPS_M: f64 = 1e-6;

/// Minimum spread of the source point set for a least-squares fit.
pub const MIN_SRC_SPREAD_M: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum GeometryError {
    #[error("degenerate correspondences: {0}")]
    Degenerate(String),
    #[error("non-finite coordinates in input")]
    NonFinite,
    #[error("src/dst lengths differ ({src} vs {dst})")]
    LengthMismatch { src: usize, dst: usize },
}

/// Uniform scale + rotation + translation mapping one planar frame to another.
///
/// Applies as `scale * R(rotation) * p + translation`. Scale is strictly
/// positive and the rotation is a proper rotation, so the transform can never
/// represent a reflection.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SimilarityTransform2D {
    pub scale: f64,
    /// Rotation angle in radians, normalized to (-pi, pi].
    pub rotation: f64,
    pub translation: Vec2,
}

impl SimilarityTransform2D {
    pub fn new(scale: f64, rotation: f64, translation: Vec2) -> Self {
        assert!(scale > 0.0, "similarity scale must be positive");
        Self {
            scale,
            rotation: normalize_angle(rotation),
            translation,
        }
    }

    pub fn identity() -> Self {
        Self {
            scale: 1.0,
            rotation: 0.0,
            translation: Vec2::zeros(),
        }
    }

    pub fn rotation_matrix(&self) -> Matrix2<f64> {
        Rotation2::new(self.rotation).into_inner()
    }

    /// `scale * R * p + t`.
    pub fn apply(&self, p: Vec2) -> Vec2 {
        self.scale * (self.rotation_matrix() * p) + self.translation
    }

    /// The transform undoing `self`: `apply(invert(T), apply(T, p)) == p`.
    pub fn invert(&self) -> Self {
        let inv_scale = 1.0 / self.scale;
        let inv_rot = Rotation2::new(-self.rotation).into_inner();
        Self {
            scale: inv_scale,
            rotation: normalize_angle(-self.rotation),
            translation: -inv_scale * (inv_rot * self.translation),
        }
    }

    /// Composition applying `other` first: `apply(compose(a, b), p) == a(b(p))`.
    pub fn compose(&self, other: &Self) -> Self {
        Self {
            scale: self.scale * other.scale,
            rotation: normalize_angle(self.rotation + other.rotation),
            translation: self.scale * (self.rotation_matrix() * other.translation)
                + self.translation,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.scale.is_finite()
            && self.rotation.is_finite()
            && self.translation.x.is_finite()
            && self.translation.y.is_finite()
    }

    /// Parameter-wise comparison; rotation compared on the circle.
    pub fn approx_eq(&self, other: &Self, tol: f64) -> bool {
        (self.scale - other.scale).abs() <= tol
            && angle_distance(self.rotation, other.rotation) <= tol
            && (self.translation - other.translation).norm() <= tol
    }
}

/// Wraps an angle into (-pi, pi].
pub fn normalize_angle(a: f64) -> f64 {
    let mut r = a.rem_euclid(std::f64::consts::TAU);
    if r > std::f64::consts::PI {
        r -= std::f64::consts::TAU;
    }
    r
}

/// Absolute angular difference on the circle, in [0, pi].
pub fn angle_distance(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(std::f64::consts::TAU);
    d.min(std::f64::consts::TAU - d)
}

/// Paired source/destination planar points for a least-squares fit.
///
/// Source points come from the drifting local frame (z already discarded),
/// destinations from the surveyed building frame.
#[derive(Debug, Clone)]
pub struct PointCorrespondences {
    src: Vec<Vec2>,
    dst: Vec<Vec2>,
}

impl PointCorrespondences {
    pub fn new(src: Vec<Vec2>, dst: Vec<Vec2>) -> Result<Self, GeometryError> {
        if src.len() != dst.len() {
            return Err(GeometryError::LengthMismatch {
                src: src.len(),
                dst: dst.len(),
            });
        }
        if src.len() < 2 {
            return Err(GeometryError::Degenerate(format!(
                "need at least 2 correspondences, got {}",
                src.len()
            )));
        }
        if src
            .iter()
            .chain(dst.iter())
            .any(|p| !p.x.is_finite() || !p.y.is_finite())
        {
            return Err(GeometryError::NonFinite);
        }
        let spread = src
            .iter()
            .enumerate()
            .flat_map(|(i, a)| src[i + 1..].iter().map(move |b| (a - b).norm()))
            .fold(0.0_f64, f64::max);
        if spread <= MIN_SRC_SPREAD_M {
            return Err(GeometryError::Degenerate(
                "source points are coincident".into(),
            ));
        }
        Ok(Self { src, dst })
    }

    pub fn len(&self) -> usize {
        self.src.len()
    }

    pub fn is_empty(&self) -> bool {
        self.src.is_empty()
    }

    pub fn src(&self) -> &[Vec2] {
        &self.src
    }

    pub fn dst(&self) -> &[Vec2] {
        &self.dst
    }
}

/// Least-squares similarity fit over point correspondences.
///
/// Closed-form construction: rotation from the SVD of the cross-covariance
/// (with the sign correction that keeps det(R) = +1), scale from the variance
/// ratio, translation from the centroids. Minimizes the mean squared residual
/// `||dst_i - (s R src_i + t)||^2` over all proper similarities.
pub fn estimate_similarity_ls(
    corr: &PointCorrespondences,
) -> Result<SimilarityTransform2D, GeometryError> {
    let n = corr.len() as f64;
    let mu_src: Vec2 = corr.src.iter().sum::<Vec2>() / n;
    let mu_dst: Vec2 = corr.dst.iter().sum::<Vec2>() / n;

    let var_src = corr
        .src
        .iter()
        .map(|p| (p - mu_src).norm_squared())
        .sum::<f64>()
        / n;

    let mut cov = Matrix2::zeros();
    for (s, d) in corr.src.iter().zip(corr.dst.iter()) {
        cov += (d - mu_dst) * (s - mu_src).transpose();
    }
    cov /= n;

    let svd = cov.svd(true, true);
    let u = svd.u.expect("2x2 SVD always yields u");
    let v_t = svd.v_t.expect("2x2 SVD always yields v_t");
    let sing = svd.singular_values;

    // Determinant correction: pick the proper rotation closest to the data
    // even when the reflected solution would have a lower residual.
    let sign = if u.determinant() * v_t.determinant() < 0.0 {
        -1.0
    } else {
        1.0
    };
    let correction = Matrix2::new(1.0, 0.0, 0.0, sign);
    let rot = u * correction * v_t;
    let rotation = rot[(1, 0)].atan2(rot[(0, 0)]);

    let scale = (sing[0] + sign * sing[1]) / var_src;
    if !(scale.is_finite() && scale > 0.0) {
        return Err(GeometryError::Degenerate(format!(
            "non-positive fitted scale {scale}"
        )));
    }

    let rot_m = Rotation2::new(rotation).into_inner();
    let translation = mu_dst - scale * (rot_m * mu_src);
    Ok(SimilarityTransform2D {
        scale,
        rotation: normalize_angle(rotation),
        translation,
    })
}

/// Exact similarity through two anchor correspondences.
///
/// Maps the segment `src_a -> src_b` onto `dst_a -> dst_b` by translation,
/// uniform scaling and rotation; both anchors are reproduced exactly.
pub fn estimate_similarity_two_point(
    src_a: Vec2,
    src_b: Vec2,
    dst_a: Vec2,
    dst_b: Vec2,
) -> Result<SimilarityTransform2D, GeometryError> {
    for p in [src_a, src_b, dst_a, dst_b] {
        if !p.x.is_finite() || !p.y.is_finite() {
            return Err(GeometryError::NonFinite);
        }
    }
    let d = src_b - src_a;
    let e = dst_b - dst_a;
    if d.norm() <= DEGENERACY_EPS_M || e.norm() <= DEGENERACY_EPS_M {
        return Err(GeometryError::Degenerate(
            "anchor pair is coincident".into(),
        ));
    }
    let scale = e.norm() / d.norm();
    let rotation = normalize_angle(e.y.atan2(e.x) - d.y.atan2(d.x));
    let rot_m = Rotation2::new(rotation).into_inner();
    let translation = dst_a - scale * (rot_m * src_a);
    Ok(SimilarityTransform2D {
        scale,
        rotation,
        translation,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_distr::{Distribution, Normal};
    use std::f64::consts::{FRAC_PI_2, PI};

    fn apply_all(t: &SimilarityTransform2D, pts: &[Vec2]) -> Vec<Vec2> {
        pts.iter().map(|p| t.apply(*p)).collect()
    }

    #[test]
    fn ls_identity_on_equal_point_sets() {
        let pts = vec![
            Vec2::new(0.0, 0.0),
            Vec2::new(3.0, 1.0),
            Vec2::new(-2.0, 4.0),
        ];
        let corr = PointCorrespondences::new(pts.clone(), pts).unwrap();
        let t = estimate_similarity_ls(&corr).unwrap();
        assert!(t.approx_eq(&SimilarityTransform2D::identity(), 1e-12));
    }

    #[test]
    fn ls_recovers_known_transform() {
        let truth = SimilarityTransform2D::new(2.0, FRAC_PI_2, Vec2::new(3.0, -1.0));
        let src = vec![
            Vec2::new(0.4, -1.2),
            Vec2::new(5.1, 2.3),
            Vec2::new(-3.3, 0.7),
            Vec2::new(1.9, 4.4),
        ];
        let dst = apply_all(&truth, &src);
        let corr = PointCorrespondences::new(src, dst).unwrap();
        let fit = estimate_similarity_ls(&corr).unwrap();
        assert!(
            fit.approx_eq(&truth, 1e-9),
            "fit {fit:?} vs truth {truth:?}"
        );
    }

    #[test]
    fn ls_with_gaussian_noise_stays_close() {
        let truth = SimilarityTransform2D::new(2.0, FRAC_PI_2, Vec2::new(3.0, -1.0));
        let src = vec![
            Vec2::new(-4.0, -4.0),
            Vec2::new(4.0, -4.0),
            Vec2::new(4.0, 4.0),
            Vec2::new(-4.0, 4.0),
        ];
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let noise = Normal::new(0.0, 0.01).unwrap();
        let dst: Vec<Vec2> = src
            .iter()
            .map(|p| truth.apply(*p) + Vec2::new(noise.sample(&mut rng), noise.sample(&mut rng)))
            .collect();
        let corr = PointCorrespondences::new(src.clone(), dst.clone()).unwrap();
        let fit = estimate_similarity_ls(&corr).unwrap();

        let rms = (src
            .iter()
            .zip(dst.iter())
            .map(|(s, d)| (d - fit.apply(*s)).norm_squared())
            .sum::<f64>()
            / src.len() as f64)
            .sqrt();
        assert!(rms <= 0.03, "residual rms {rms}");
        assert!((fit.scale - truth.scale).abs() / truth.scale <= 0.01);
        assert!(angle_distance(fit.rotation, truth.rotation) / truth.rotation.abs() <= 0.01);
        assert!((fit.translation - truth.translation).norm() / truth.translation.norm() <= 0.01);
    }

    #[test]
    fn ls_never_returns_reflection() {
        // dst is a mirrored copy of src; the best orthogonal map is a
        // reflection, which the estimator must refuse.
        let src = vec![
            Vec2::new(0.0, 0.0),
            Vec2::new(2.0, 0.0),
            Vec2::new(0.0, 1.0),
            Vec2::new(2.0, 1.5),
        ];
        let dst: Vec<Vec2> = src.iter().map(|p| Vec2::new(p.x, -p.y)).collect();
        let corr = PointCorrespondences::new(src, dst).unwrap();
        let fit = estimate_similarity_ls(&corr).unwrap();
        assert!(fit.is_finite());
        assert!(fit.scale > 0.0);
        assert_relative_eq!(fit.rotation_matrix().determinant(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn ls_residual_invariant_under_rigid_pre_transform() {
        let src = vec![
            Vec2::new(1.0, 2.0),
            Vec2::new(-3.0, 0.5),
            Vec2::new(2.2, -1.7),
            Vec2::new(0.3, 3.1),
        ];
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let noise = Normal::new(0.0, 0.05).unwrap();
        let dst: Vec<Vec2> = src
            .iter()
            .map(|p| {
                Vec2::new(p.y, -p.x) * 1.4
                    + Vec2::new(2.0 + noise.sample(&mut rng), noise.sample(&mut rng))
            })
            .collect();

        let residual = |src: &[Vec2], dst: &[Vec2]| {
            let corr = PointCorrespondences::new(src.to_vec(), dst.to_vec()).unwrap();
            let t = estimate_similarity_ls(&corr).unwrap();
            src.iter()
                .zip(dst.iter())
                .map(|(s, d)| (d - t.apply(*s)).norm_squared())
                .sum::<f64>()
        };

        let rigid = SimilarityTransform2D::new(1.0, 0.8, Vec2::new(-5.0, 7.0));
        let src2 = apply_all(&rigid, &src);
        let dst2 = apply_all(&rigid, &dst);
        assert_relative_eq!(residual(&src, &dst), residual(&src2, &dst2), epsilon = 1e-9);
    }

    #[test]
    fn ls_rejects_degenerate_input() {
        let p = Vec2::new(1.0, 1.0);
        assert!(PointCorrespondences::new(vec![p, p], vec![p, Vec2::new(2.0, 2.0)]).is_err());
        assert!(PointCorrespondences::new(vec![p], vec![p]).is_err());
        assert!(PointCorrespondences::new(
            vec![p, Vec2::new(f64::NAN, 0.0)],
            vec![p, Vec2::new(0.0, 0.0)]
        )
        .is_err());
    }

    #[test]
    fn two_point_identity() {
        let a = Vec2::new(1.0, 2.0);
        let b = Vec2::new(4.0, 6.0);
        let t = estimate_similarity_two_point(a, b, a, b).unwrap();
        assert!(t.approx_eq(&SimilarityTransform2D::identity(), 1e-12));
    }

    #[test]
    fn two_point_scale_and_quarter_turn() {
        let t = estimate_similarity_two_point(
            Vec2::new(0.0, 0.0),
            Vec2::new(1.0, 0.0),
            Vec2::new(0.0, 0.0),
            Vec2::new(0.0, 2.0),
        )
        .unwrap();
        assert_relative_eq!(t.scale, 2.0, epsilon = 1e-12);
        assert_relative_eq!(t.rotation, FRAC_PI_2, epsilon = 1e-12);
        assert!(t.translation.norm() <= 1e-12);
    }

    #[test]
    fn two_point_reproduces_anchors_exactly() {
        let (sa, sb) = (Vec2::new(-2.0, 3.0), Vec2::new(5.0, -1.0));
        let (da, db) = (Vec2::new(10.0, 10.0), Vec2::new(4.0, 18.0));
        let t = estimate_similarity_two_point(sa, sb, da, db).unwrap();
        assert!((t.apply(sa) - da).norm() <= 1e-9);
        assert!((t.apply(sb) - db).norm() <= 1e-9);
    }

    #[test]
    fn two_point_matches_least_squares_on_same_pairs() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(42);
        let uni = rand_distr::Uniform::new(-10.0, 10.0).unwrap();
        for _ in 0..100 {
            let mut p = || Vec2::new(uni.sample(&mut rng), uni.sample(&mut rng));
            let (sa, sb, da, db) = (p(), p(), p(), p());
            if (sb - sa).norm() <= DEGENERACY_EPS_M || (db - da).norm() <= DEGENERACY_EPS_M {
                continue;
            }
            let two = estimate_similarity_two_point(sa, sb, da, db).unwrap();
            let ls = estimate_similarity_ls(
                &PointCorrespondences::new(vec![sa, sb], vec![da, db]).unwrap(),
            )
            .unwrap();
            assert!(two.approx_eq(&ls, 1e-9), "two {two:?} vs ls {ls:?}");
        }
    }

    #[test]
    fn two_point_rejects_coincident_pair() {
        let p = Vec2::new(1.0, 1.0);
        assert!(matches!(
            estimate_similarity_two_point(p, p, Vec2::new(0.0, 0.0), Vec2::new(1.0, 0.0)),
            Err(GeometryError::Degenerate(_))
        ));
    }

    #[test]
    fn apply_arithmetic() {
        let t = SimilarityTransform2D::new(2.0, 0.0, Vec2::new(1.0, 0.0));
        assert_relative_eq!(t.apply(Vec2::new(1.0, 1.0)).x, 3.0);
        assert_relative_eq!(t.apply(Vec2::new(1.0, 1.0)).y, 2.0);
    }

    #[test]
    fn compose_scale_halves_cancel() {
        let double = SimilarityTransform2D::new(2.0, 0.0, Vec2::zeros());
        let half = SimilarityTransform2D::new(0.5, 0.0, Vec2::zeros());
        let c = double.compose(&half);
        assert!(c.approx_eq(&SimilarityTransform2D::identity(), 1e-12));
    }

    #[test]
    fn invert_identity_is_identity() {
        let id = SimilarityTransform2D::identity();
        assert!(id.invert().approx_eq(&id, 0.0));
    }

    #[test]
    fn normalize_angle_range() {
        for a in [-7.0, -PI, -0.1, 0.0, 0.1, PI, 7.0, 100.0] {
            let n = normalize_angle(a);
            assert!(n > -PI - 1e-12 && n <= PI + 1e-12, "{a} -> {n}");
            assert!(angle_distance(a, n) <= 1e-9);
        }
    }

    fn arb_transform() -> impl Strategy<Value = SimilarityTransform2D> {
        (0.1f64..10.0, -PI..PI, -50.0f64..50.0, -50.0f64..50.0)
            .prop_map(|(s, r, tx, ty)| SimilarityTransform2D::new(s, r, Vec2::new(tx, ty)))
    }

    fn arb_point() -> impl Strategy<Value = Vec2> {
        (-100.0f64..100.0, -100.0f64..100.0).prop_map(|(x, y)| Vec2::new(x, y))
    }

    proptest! {
        #[test]
        fn prop_invert_round_trips(t in arb_transform(), p in arb_point()) {
            let q = t.apply(t.invert().apply(p));
            prop_assert!((q - p).norm() <= 1e-9 * (1.0 + p.norm()));
            let r = t.invert().apply(t.apply(p));
            prop_assert!((r - p).norm() <= 1e-9 * (1.0 + p.norm()));
        }

        #[test]
        fn prop_compose_matches_sequential_application(
            a in arb_transform(), b in arb_transform(), p in arb_point()
        ) {
            let lhs = a.compose(&b).apply(p);
            let rhs = a.apply(b.apply(p));
            prop_assert!((lhs - rhs).norm() <= 1e-6);
        }

        #[test]
        fn prop_compose_with_inverse_is_identity(t in arb_transform()) {
            prop_assert!(t.compose(&t.invert()).approx_eq(&SimilarityTransform2D::identity(), 1e-9));
        }
    }
}
