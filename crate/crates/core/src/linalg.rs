use nalgebra::{DMatrix, DVector, Matrix3, Matrix3xX};

/// Relative singular-value cutoff used for rank decisions and pseudoinverses.
pub(crate) const RANK_RTOL: f64 = 1e-9;

pub(crate) fn singular_values(a: &Matrix3xX<f64>) -> Vec<f64> {
    let mut sv: Vec<f64> = a.clone().svd(false, false).singular_values.iter().copied().collect();
    sv.sort_by(|x, y| y.total_cmp(x));
    sv
}

pub(crate) fn numerical_rank(sv: &[f64]) -> usize {
    let max = sv.iter().copied().fold(0.0, f64::max);
    if max == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > RANK_RTOL * max).count()
}

/// `(A·Aᵀ)⁺` built from the SVD of `A`, so the cutoff applies to singular
/// values of `A` rather than to their squares.
pub(crate) fn gram_pinv(a: &Matrix3xX<f64>) -> Matrix3<f64> {
    let svd = a.clone().svd(true, false);
    let u = svd.u.expect("requested left singular vectors");
    let max = svd.singular_values.iter().copied().fold(0.0, f64::max);
    let mut out = Matrix3::zeros();
    if max == 0.0 {
        return out;
    }
    for (k, &s) in svd.singular_values.iter().enumerate() {
        if s > RANK_RTOL * max {
            let col = u.column(k);
            out += (col * col.transpose()) / (s * s);
        }
    }
    out
}

/// Orthonormal basis of `{v : A·v = 0}`.
pub(crate) fn null_space(a: &Matrix3xX<f64>) -> Vec<DVector<f64>> {
    let m = a.ncols();
    // Pad to a square matrix so the SVD returns a full set of right singular vectors.
    let n = m.max(3);
    let mut padded = DMatrix::<f64>::zeros(n, m);
    padded.view_mut((0, 0), (3, m)).copy_from(a);
    let svd = padded.svd(false, true);
    let v_t = svd.v_t.expect("requested right singular vectors");
    let max = svd.singular_values.iter().copied().fold(0.0, f64::max);
    let cutoff = RANK_RTOL * max;
    (0..m)
        .filter(|&k| max == 0.0 || svd.singular_values[k] <= cutoff)
        .map(|k| v_t.row(k).transpose())
        .collect()
}
