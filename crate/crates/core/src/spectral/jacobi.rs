/// One-sided (Hestenes) Jacobi on the columns of a column-major `m x k`
/// array with `k <= m`. The array is overwritten by `A V`; the returned
/// values are the column norms sorted nonincreasingly.
pub(crate) fn one_sided_jacobi(cols: &mut [f64], m: usize, k: usize) -> Vec<f64> {
    debug_assert!(k <= m);
    debug_assert_eq!(cols.len(), m * k);
    const TOL: f64 = 1e-15;
    const MAX_SWEEPS: usize = 80;

    let mut norms = vec![0.0; k];
    for _ in 0..MAX_SWEEPS {
        for (j, nj) in norms.iter_mut().enumerate() {
            *nj = dot(&cols[j * m..(j + 1) * m], &cols[j * m..(j + 1) * m]);
        }
        let mut rotated = false;
        for i in 0..k {
            for j in (i + 1)..k {
                let alpha = norms[i];
                let beta = norms[j];
                if alpha == 0.0 || beta == 0.0 {
                    continue;
                }
                let (left, right) = cols.split_at_mut(j * m);
                let ci = &mut left[i * m..(i + 1) * m];
                let cj = &mut right[..m];
                let gamma = dot(ci, cj);
                if gamma.abs() <= TOL * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for (a, b) in ci.iter_mut().zip(cj.iter_mut()) {
                    let x = *a;
                    let y = *b;
                    *a = c * x - s * y;
                    *b = s * x + c * y;
                }
                norms[i] = alpha - t * gamma;
                norms[j] = beta + t * gamma;
            }
        }
        if !rotated {
            break;
        }
    }
    let mut sv: Vec<f64> = (0..k)
        .map(|j| dot(&cols[j * m..(j + 1) * m], &cols[j * m..(j + 1) * m]).sqrt())
        .collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    sv
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0f64; 4];
    let chunks = a.len() / 4;
    for c in 0..chunks {
        for l in 0..4 {
            acc[l] += a[4 * c + l] * b[4 * c + l];
        }
    }
    let mut s = (acc[0] + acc[1]) + (acc[2] + acc[3]);
    for i in chunks * 4..a.len() {
        s += a[i] * b[i];
    }
    s
}
