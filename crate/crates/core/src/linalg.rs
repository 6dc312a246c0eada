//! Small dense complex linear algebra: a cyclic Jacobi eigensolver for
//! Hermitian matrices and helpers shared by the spin modules.

use nalgebra::{Complex, SMatrix, SVector};

pub type C64 = Complex<f64>;
/// 9×9 complex matrix over the |m_s, m_I⟩ product basis.
pub type Mat9 = SMatrix<C64, 9, 9>;
pub type Vec9 = SVector<C64, 9>;
pub type Mat3 = SMatrix<C64, 3, 3>;

pub const MAX_JACOBI_SWEEPS: usize = 100;

/// Largest |H_ij − conj(H_ji)| over all entries.
pub fn hermiticity_error<const N: usize>(m: &SMatrix<C64, N, N>) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..N {
        for j in i..N {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

/// Eigen-decomposition of a Hermitian matrix by cyclic complex Jacobi
/// rotations. Returns eigenvalues sorted ascending and the matching
/// eigenvectors as columns.
///
/// The input is assumed Hermitian; only the upper triangle drives the
/// rotations and the diagonal imaginary parts are ignored.
pub fn jacobi_eigh<const N: usize>(m: &SMatrix<C64, N, N>) -> (SVector<f64, N>, SMatrix<C64, N, N>) {
    let mut a = *m;
    // Symmetrize from the upper triangle so tiny input asymmetries cannot
    // bias the rotations.
    for i in 0..N {
        a[(i, i)] = C64::new(a[(i, i)].re, 0.0);
        for j in (i + 1)..N {
            a[(j, i)] = a[(i, j)].conj();
        }
    }
    let mut v = SMatrix::<C64, N, N>::identity();

    let scale: f64 = a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if scale == 0.0 {
        return (SVector::<f64, N>::zeros(), v);
    }
    let tol = scale * 1e-15;

    for _ in 0..MAX_JACOBI_SWEEPS {
        let off: f64 = (0..N)
            .flat_map(|i| ((i + 1)..N).map(move |j| (i, j)))
            .map(|(i, j)| a[(i, j)].norm_sqr())
            .sum::<f64>()
            .sqrt();
        if off <= tol {
            break;
        }
        for p in 0..N {
            for q in (p + 1)..N {
                let b = a[(p, q)];
                let babs = b.norm();
                if babs <= tol * 1e-3 {
                    continue;
                }
                let phase = b / babs;
                let app = a[(p, p)].re;
                let aqq = a[(q, q)].re;
                let theta = (aqq - app) / (2.0 * babs);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                // G = [[c e^{iφ}, s e^{iφ}], [-s, c]] restricted to (p, q).
                let g_pp = phase * c;
                let g_pq = phase * s;
                let g_qp = C64::new(-s, 0.0);
                let g_qq = C64::new(c, 0.0);

                // A <- A G (columns p, q)
                for k in 0..N {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = akp * g_pp + akq * g_qp;
                    a[(k, q)] = akp * g_pq + akq * g_qq;
                }
                // A <- G^† A (rows p, q)
                for k in 0..N {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = g_pp.conj() * apk + g_qp.conj() * aqk;
                    a[(q, k)] = g_pq.conj() * apk + g_qq.conj() * aqk;
                }
                a[(p, q)] = C64::new(0.0, 0.0);
                a[(q, p)] = C64::new(0.0, 0.0);
                a[(p, p)] = C64::new(a[(p, p)].re, 0.0);
                a[(q, q)] = C64::new(a[(q, q)].re, 0.0);
                // V <- V G
                for k in 0..N {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = vkp * g_pp + vkq * g_qp;
                    v[(k, q)] = vkp * g_pq + vkq * g_qq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..N).collect();
    order.sort_by(|&i, &j| a[(i, i)].re.total_cmp(&a[(j, j)].re).then(i.cmp(&j)));
    let vals = SVector::<f64, N>::from_fn(|k, _| a[(order[k], order[k])].re);
    let vecs = SMatrix::<C64, N, N>::from_fn(|r, k| v[(r, order[k])]);
    (vals, vecs)
}

/// `V diag(f(λ)) V†` for a spectral decomposition.
pub fn spectral_apply<const N: usize>(
    vals: &SVector<f64, N>,
    vecs: &SMatrix<C64, N, N>,
    f: impl Fn(f64) -> C64,
) -> SMatrix<C64, N, N> {
    let mut scaled = *vecs;
    for k in 0..N {
        let fk = f(vals[k]);
        for r in 0..N {
            scaled[(r, k)] *= fk;
        }
    }
    scaled * vecs.adjoint()
}

/// Kronecker product of two 3×3 matrices into the 9×9 product space,
/// with the first factor on the slow index.
pub fn kron3(a: &Mat3, b: &Mat3) -> Mat9 {
    Mat9::from_fn(|r, c| a[(r / 3, c / 3)] * b[(r % 3, c % 3)])
}
