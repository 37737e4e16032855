//! Central-difference stencils on real 3-D sections of the Hilbert space.
//!
//! The differential identities of additive frame functions live on real
//! three-dimensional subspaces: fixing three orthonormal complex directions
//! (phases folded in) turns the radially-extended frame function into a real
//! function g on R³, and every check below is a central-difference estimate
//! of a derivative of g with O(h²) truncation error.

use crate::hilbert::{dot3, HVector, Projector};
use crate::measures::{FrameFunction, MeasureResult};

use super::GleasonError;

/// A real function on R³ that may fail to evaluate (frame functions of
/// partial measures propagate domain errors).
pub type SectionFn<'a> = dyn Fn(&[f64; 3]) -> MeasureResult<f64> + 'a;

/// Three orthonormal complex directions; real coordinates v ∈ R³ embed as
/// Σ_k v_k b_k. Orthonormality makes ‖embed(v)‖ = ‖v‖, so the degree-2
/// radial extension restricts to a degree-2 extension on the section.
pub struct RealSection {
    basis: [HVector; 3],
}

impl RealSection {
    pub fn new(
        b1: HVector,
        b2: HVector,
        b3: HVector,
        tol: f64,
    ) -> Result<RealSection, GleasonError> {
        let basis = [b1, b2, b3];
        let mut defect = 0.0f64;
        for i in 0..3 {
            for j in 0..3 {
                let g = basis[i].inner(&basis[j]);
                let expected = if i == j { 1.0 } else { 0.0 };
                defect = defect.max((g - num_complex::Complex64::new(expected, 0.0)).norm());
            }
        }
        if defect > tol {
            return Err(GleasonError::SectionNotOrthonormal { defect });
        }
        Ok(RealSection { basis })
    }

    /// Section through an orthogonal unit pair: (φ1, φ2, any unit vector
    /// orthogonal to both). Requires dimension >= 3.
    pub fn through_pair(phi1: &HVector, phi2: &HVector) -> Result<RealSection, GleasonError> {
        let d = phi1.dim();
        if d < 3 {
            return Err(GleasonError::DimensionTooSmall { dim: d });
        }
        let overlap = phi1.inner(phi2).norm();
        if overlap > 1e-8 {
            return Err(GleasonError::NotOrthogonal { overlap });
        }
        let complement =
            crate::hilbert::orthogonal_complement(&[phi1.clone(), phi2.clone()], 1e-8)?;
        RealSection::new(phi1.clone(), phi2.clone(), complement[0].clone(), 1e-8)
    }

    pub fn embed(&self, v: &[f64; 3]) -> HVector {
        let mut out = self.basis[0].scaled(num_complex::Complex64::new(v[0], 0.0));
        out = out.add(&self.basis[1].scaled(num_complex::Complex64::new(v[1], 0.0)));
        out.add(&self.basis[2].scaled(num_complex::Complex64::new(v[2], 0.0)))
    }

    /// The frame function restricted to this section.
    pub fn restrict<'a>(
        &'a self,
        f: &'a FrameFunction,
    ) -> impl Fn(&[f64; 3]) -> MeasureResult<f64> + 'a {
        move |v| f.eval(&self.embed(v))
    }
}

fn offset(v: &[f64; 3], axis: usize, delta: f64) -> [f64; 3] {
    let mut out = *v;
    out[axis] += delta;
    out
}

/// First derivative ∂g/∂v_i by central differences.
pub fn central_diff(g: &SectionFn, v: &[f64; 3], axis: usize, h: f64) -> MeasureResult<f64> {
    Ok((g(&offset(v, axis, h))? - g(&offset(v, axis, -h))?) / (2.0 * h))
}

/// Third derivative ∂³g/∂v_i∂v_j∂v_k by nested central differences
/// (eight evaluations; O(h²) truncation error for C⁵ functions, repeated
/// indices included).
pub fn third_derivative(
    g: &SectionFn,
    v: &[f64; 3],
    axes: [usize; 3],
    h: f64,
) -> MeasureResult<f64> {
    let [i, j, k] = axes;
    let mut acc = 0.0;
    for si in [-1.0, 1.0] {
        for sj in [-1.0, 1.0] {
            for sk in [-1.0, 1.0] {
                let mut p = *v;
                p[i] += si * h;
                p[j] += sj * h;
                p[k] += sk * h;
                acc += si * sj * sk * g(&p)?;
            }
        }
    }
    Ok(acc / (8.0 * h * h * h))
}

/// All 27 third derivatives at `v`.
#[derive(Clone, Copy, Debug)]
pub struct ThirdDerivTensor {
    pub entries: [[[f64; 3]; 3]; 3],
    pub step: f64,
}

impl ThirdDerivTensor {
    pub fn max_abs(&self) -> f64 {
        let mut m = 0.0f64;
        for plane in &self.entries {
            for row in plane {
                for &x in row {
                    m = m.max(x.abs());
                }
            }
        }
        m
    }

    /// Largest deviation between entries that should coincide by symmetry
    /// of mixed partials.
    pub fn symmetry_defect(&self) -> f64 {
        let mut defect = 0.0f64;
        for i in 0..3 {
            for j in 0..3 {
                for k in 0..3 {
                    let base = self.entries[i][j][k];
                    for perm in [[i, k, j], [j, i, k], [j, k, i], [k, i, j], [k, j, i]] {
                        defect = defect.max((base - self.entries[perm[0]][perm[1]][perm[2]]).abs());
                    }
                }
            }
        }
        defect
    }

    /// Σ_ijk a_i b_j c_k ∂³f/∂v_i∂v_j∂v_k.
    #[allow(clippy::needless_range_loop)]
    pub fn contract(&self, a: &[f64; 3], b: &[f64; 3], c: &[f64; 3]) -> f64 {
        let mut acc = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                for k in 0..3 {
                    acc += a[i] * b[j] * c[k] * self.entries[i][j][k];
                }
            }
        }
        acc
    }
}

/// Estimates every third derivative of `g` at `v`. Callers should keep
/// h within [1e-5, 1e-2]: smaller steps drown in roundoff, larger ones in
/// truncation.
#[allow(clippy::needless_range_loop)]
pub fn third_derivative_tensor(
    g: &SectionFn,
    v: &[f64; 3],
    h: f64,
) -> MeasureResult<ThirdDerivTensor> {
    debug_assert!((1e-5..=1e-2).contains(&h), "step {h} outside [1e-5, 1e-2]");
    let mut entries = [[[0.0f64; 3]; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            for k in 0..3 {
                entries[i][j][k] = third_derivative(g, v, [i, j, k], h)?;
            }
        }
    }
    Ok(ThirdDerivTensor { entries, step: h })
}

/// Central-difference estimate of (w·∂/∂v − v·∂/∂w)[f(v) + f(w)], the
/// plane-rotation generator applied to the pair sum. Vanishes (to FD noise)
/// exactly when the pair sum depends only on the spanned plane.
pub fn rotation_identity_residual(
    g: &SectionFn,
    v: &[f64; 3],
    w: &[f64; 3],
    h: f64,
) -> Result<f64, GleasonError> {
    let overlap = dot3(v, w).abs();
    if overlap > 1e-8 {
        return Err(GleasonError::NotOrthogonal { overlap });
    }
    let mut acc = 0.0;
    for i in 0..3 {
        acc += w[i] * central_diff(g, v, i, h)?;
        acc -= v[i] * central_diff(g, w, i, h)?;
    }
    Ok(acc)
}

/// Central-difference defect of the radial constraint v·∂g/∂v − 2g at `v`;
/// O(h²) for any degree-2 homogeneous function.
pub fn radial_defect(g: &SectionFn, v: &[f64; 3], h: f64) -> MeasureResult<f64> {
    let mut acc = 0.0;
    for i in 0..3 {
        acc += v[i] * central_diff(g, v, i, h)?;
    }
    Ok(acc - 2.0 * g(v)?)
}

/// Frame-function evaluation on rank-1 projectors built from section
/// coordinates; a convenience for callers that want μ(φφ†) rather than the
/// radial extension.
pub fn section_projector(
    section: &RealSection,
    v: &[f64; 3],
) -> crate::hilbert::HilbertResult<Projector> {
    let embedded = section.embed(v);
    crate::hilbert::projector_from_vector(&embedded.normalized()?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::{norm3, HVector};
    use crate::measures::{BornMeasure, DensityOperator, FrameFunction};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha12Rng;

    fn total(v: &[f64; 3]) -> MeasureResult<f64> {
        Ok(v[0] + v[1] + v[2])
    }

    #[test]
    fn central_diff_matches_linear_gradient() {
        let g: &SectionFn = &total;
        let v = [0.3, -0.2, 0.9];
        for axis in 0..3 {
            let d = central_diff(g, &v, axis, 1e-4).unwrap();
            assert!((d - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn third_derivative_of_cubic_monomial() {
        // ∂³(v1³)/∂v1³ = 6; all other entries vanish.
        let g: &SectionFn = &|v| Ok(v[0] * v[0] * v[0]);
        let v = [0.4, 0.1, -0.3];
        let t = third_derivative_tensor(g, &v, 1e-3).unwrap();
        assert!((t.entries[0][0][0] - 6.0).abs() < 1e-6);
        assert!(t.entries[1][1][1].abs() < 1e-6);
        assert!(t.entries[0][1][2].abs() < 1e-6);
    }

    #[test]
    fn third_derivative_of_mixed_monomial() {
        // ∂³(v1 v2 v3)/∂v1∂v2∂v3 = 1.
        let g: &SectionFn = &|v| Ok(v[0] * v[1] * v[2]);
        let t = third_derivative(g, &[0.2, 0.5, -0.1], [0, 1, 2], 1e-3).unwrap();
        assert!((t - 1.0).abs() < 1e-8);
    }

    #[test]
    fn cubic_over_norm_oracle_at_basis_point() {
        // f = v1³/‖v‖ at v = e2: entry (1,1,1) = 6/‖e2‖ = 6.
        let g: &SectionFn = &|v| Ok(v[0].powi(3) / norm3(v));
        let t = third_derivative_tensor(g, &[0.0, 1.0, 0.0], 1e-3).unwrap();
        assert!(
            (t.entries[0][0][0] - 6.0).abs() < 1e-3,
            "entry (1,1,1) = {}",
            t.entries[0][0][0]
        );
    }

    /// Hand-derived third derivatives of f = v1³/r, r = ‖v‖:
    /// f_ijk = 6δ/r-type terms assembled below; used as the analytic
    /// convergence oracle.
    fn cubic_over_norm_third(v: &[f64; 3], i: usize, j: usize, k: usize) -> f64 {
        let r = norm3(v);
        let x = v[0];
        let d1 = |a: usize| if a == 0 { 1.0 } else { 0.0 };
        let delta = |a: usize, b: usize| if a == b { 1.0 } else { 0.0 };
        // f = x³ g(v) with g = 1/r; derivatives of g:
        // g_i = −v_i/r³, g_ij = 3 v_i v_j / r⁵ − δ_ij / r³,
        // g_ijk = −15 v_i v_j v_k / r⁷ + 3 (δ_ij v_k + δ_ik v_j + δ_jk v_i) / r⁵.
        let g_i = |a: usize| -v[a] / r.powi(3);
        let g_ij = |a: usize, b: usize| 3.0 * v[a] * v[b] / r.powi(5) - delta(a, b) / r.powi(3);
        let g_ijk = -15.0 * v[i] * v[j] * v[k] / r.powi(7)
            + 3.0 * (delta(i, j) * v[k] + delta(i, k) * v[j] + delta(j, k) * v[i]) / r.powi(5);
        // Leibniz over (x³)·g with ∂x³/∂v_a = 3x²δ_a0 etc.
        6.0 * d1(i) * d1(j) * d1(k) / r
            + 6.0 * x * (d1(i) * d1(j) * g_i(k) + d1(i) * d1(k) * g_i(j) + d1(j) * d1(k) * g_i(i))
            + 3.0 * x * x * (d1(i) * g_ij(j, k) + d1(j) * g_ij(i, k) + d1(k) * g_ij(i, j))
            + x.powi(3) * g_ijk
    }

    #[test]
    fn cubic_over_norm_matches_analytic_oracle() {
        let g: &SectionFn = &|v| Ok(v[0].powi(3) / norm3(v));
        let v = [0.6, 0.4, -0.7];
        let t = third_derivative_tensor(g, &v, 1e-3).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                for k in 0..3 {
                    let exact = cubic_over_norm_third(&v, i, j, k);
                    assert!(
                        (t.entries[i][j][k] - exact).abs() < 1e-4,
                        "({i},{j},{k}): fd {} vs analytic {exact}",
                        t.entries[i][j][k]
                    );
                }
            }
        }
    }

    #[test]
    fn third_derivative_error_shrinks_quadratically() {
        // Halving h must shrink the deviation from the analytic oracle by
        // at least 3x (O(h²) truncation dominates at these steps).
        let g: &SectionFn = &|v| Ok(v[0].powi(3) / norm3(v));
        let v = [0.6, 0.4, -0.7];
        let dev = |h: f64| {
            let t = third_derivative_tensor(g, &v, h).unwrap();
            let mut worst = 0.0f64;
            for i in 0..3 {
                for j in 0..3 {
                    for k in 0..3 {
                        worst = worst
                            .max((t.entries[i][j][k] - cubic_over_norm_third(&v, i, j, k)).abs());
                    }
                }
            }
            worst
        };
        let coarse = dev(1e-2);
        let fine = dev(5e-3);
        assert!(
            coarse / fine >= 3.0,
            "convergence ratio {} below 3",
            coarse / fine
        );
    }

    #[test]
    fn tensor_is_permutation_symmetric_within_fd_noise() {
        let g: &SectionFn = &|v| Ok(v[0].powi(3) / norm3(v) + v[0] * v[1] * v[2]);
        let t = third_derivative_tensor(g, &[0.5, -0.3, 0.8], 1e-3).unwrap();
        assert!(t.symmetry_defect() < 1e-4);
    }

    #[test]
    fn rotation_residual_vanishes_for_quadratic_sections() {
        // f(v) = v1² is additive-compatible; the pair sum is rotation
        // invariant so the residual is FD noise only.
        let g: &SectionFn = &|v| Ok(v[0] * v[0]);
        let res = rotation_identity_residual(g, &[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0], 1e-4).unwrap();
        assert!(res.abs() < 1e-10);
    }

    #[test]
    fn rotation_residual_matches_cubic_oracle() {
        // f(v) = v1³/‖v‖: residual = 3 v1² w1/‖v‖ − 3 w1² v1/‖w‖ for v ⟂ w.
        let g: &SectionFn = &|v| Ok(v[0].powi(3) / norm3(v));
        let inv_sqrt2 = 1.0 / 2.0f64.sqrt();
        let v = [inv_sqrt2, inv_sqrt2, 0.0];
        let w = [inv_sqrt2, -inv_sqrt2, 0.0];
        let expected = 3.0 * v[0] * v[0] * w[0] / norm3(&v) - 3.0 * w[0] * w[0] * v[0] / norm3(&w);
        let res = rotation_identity_residual(g, &v, &w, 1e-4).unwrap();
        assert!(
            (res - expected).abs() < 1e-5,
            "residual {res} vs oracle {expected}"
        );
    }

    #[test]
    fn rotation_residual_rejects_non_orthogonal_pair() {
        let g: &SectionFn = &|v| Ok(v[0] * v[0]);
        assert!(matches!(
            rotation_identity_residual(g, &[1.0, 0.0, 0.0], &[1.0, 1.0, 0.0], 1e-4),
            Err(GleasonError::NotOrthogonal { .. })
        ));
    }

    #[test]
    fn radial_defect_vanishes_for_born_sections() {
        let mut rng = ChaCha12Rng::seed_from_u64(3);
        let rho = DensityOperator::random(4, &mut rng);
        let f = FrameFunction::from_measure(BornMeasure::new(rho));
        let a = HVector::random_unit(4, &mut rng);
        let rest = crate::hilbert::orthogonal_complement(std::slice::from_ref(&a), 1e-8).unwrap();
        let section = RealSection::new(a, rest[0].clone(), rest[1].clone(), 1e-8).unwrap();
        let g = section.restrict(&f);
        for point in [[0.9, 0.1, -0.4], [1.0, 0.0, 0.0], [0.2, -0.7, 0.5]] {
            let defect = radial_defect(&g, &point, 1e-4).unwrap();
            assert!(defect.abs() < 1e-8, "radial defect {defect}");
        }
    }

    #[test]
    fn section_embedding_preserves_norm() {
        let mut rng = ChaCha12Rng::seed_from_u64(9);
        let a = HVector::random_unit(5, &mut rng);
        let rest = crate::hilbert::orthogonal_complement(std::slice::from_ref(&a), 1e-8).unwrap();
        let section = RealSection::new(a, rest[0].clone(), rest[1].clone(), 1e-8).unwrap();
        for _ in 0..10 {
            let v = [
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
            ];
            assert!((section.embed(&v).norm() - norm3(&v)).abs() < 1e-12);
        }
    }
}
