//! Dense symmetric-indefinite `P A Pᵀ = L D Lᵀ` with Bunch–Kaufman partial
//! pivoting (lower storage, 1×1 and 2×2 diagonal blocks).

use nalgebra::DMatrix;

use super::{classify_block, Block};
use crate::error::{Error, Result};
use crate::model::Inertia;

const ALPHA: f64 = 0.640_388_203_202_208_0; // (1 + √17) / 8

#[derive(Clone, Debug)]
pub struct DenseLdl {
    n: usize,
    /// Row-major; strictly lower part holds `L`, diagonal blocks hold `D`.
    a: Vec<f64>,
    /// `perm[i]` is the original index placed at position `i`.
    perm: Vec<usize>,
    blocks: Vec<Block>,
    inertia: Inertia,
}

impl DenseLdl {
    pub fn factor(m: &DMatrix<f64>) -> Result<Self> {
        let n = m.nrows();
        assert_eq!(n, m.ncols(), "matrix must be square");
        let mut a = vec![0.0; n * n];
        let mut max_abs: f64 = 0.0;
        for i in 0..n {
            for j in 0..=i {
                let v = m[(i, j)];
                if !v.is_finite() {
                    return Err(Error::FactorizationBreakdown { index: i, pivot: v });
                }
                a[i * n + j] = v;
                max_abs = max_abs.max(v.abs());
            }
        }
        let tau0 = super::zero_pivot_tolerance(max_abs);
        let mut perm: Vec<usize> = (0..n).collect();
        let mut blocks = Vec::new();
        let mut inertia = Inertia::default();
        let mut col = vec![0.0; n];
        let mut col2 = vec![0.0; n];

        let mut k = 0;
        while k < n {
            let absakk = a[k * n + k].abs();
            let (imax, colmax) = ((k + 1)..n)
                .map(|i| (i, a[i * n + k].abs()))
                .fold((k, 0.0), |best, c| if c.1 > best.1 { c } else { best });

            if absakk.max(colmax) <= tau0 {
                inertia.n_zero += 1;
                blocks.push(Block::One { at: k, d: a[k * n + k] });
                for i in (k + 1)..n {
                    a[i * n + k] = 0.0;
                }
                k += 1;
                continue;
            }

            let (kp, kstep) = if absakk >= ALPHA * colmax {
                (k, 1)
            } else {
                let row_left = (k..imax).map(|j| a[imax * n + j].abs());
                let row_below = ((imax + 1)..n).map(|i| a[i * n + imax].abs());
                let rowmax = row_left.chain(row_below).fold(0.0, f64::max);
                if absakk * rowmax >= ALPHA * colmax * colmax {
                    (k, 1)
                } else if a[imax * n + imax].abs() >= ALPHA * rowmax {
                    (imax, 1)
                } else {
                    (imax, 2)
                }
            };

            let kk = k + kstep - 1;
            if kp != kk {
                swap_symmetric(&mut a, n, kk, kp);
                perm.swap(kk, kp);
            }

            if kstep == 1 {
                let d = a[k * n + k];
                for i in (k + 1)..n {
                    col[i] = a[i * n + k];
                }
                for j in (k + 1)..n {
                    let cj = col[j];
                    if cj == 0.0 {
                        continue;
                    }
                    for i in j..n {
                        a[i * n + j] -= col[i] * cj / d;
                    }
                }
                for i in (k + 1)..n {
                    a[i * n + k] = col[i] / d;
                }
                let block = Block::One { at: k, d };
                inertia = inertia + classify_block(&block, tau0);
                blocks.push(block);
            } else {
                let d11 = a[k * n + k];
                let d21 = a[(k + 1) * n + k];
                let d22 = a[(k + 1) * n + k + 1];
                let det = d11 * d22 - d21 * d21;
                if det == 0.0 || !det.is_finite() {
                    return Err(Error::FactorizationBreakdown { index: k, pivot: det });
                }
                for i in (k + 2)..n {
                    col[i] = a[i * n + k];
                    col2[i] = a[i * n + k + 1];
                }
                for i in (k + 2)..n {
                    let (w1, w2) = (col[i], col2[i]);
                    let l1 = (w1 * d22 - w2 * d21) / det;
                    let l2 = (w2 * d11 - w1 * d21) / det;
                    for j in (k + 2)..=i {
                        a[i * n + j] -= l1 * col[j] + l2 * col2[j];
                    }
                    a[i * n + k] = l1;
                    a[i * n + k + 1] = l2;
                }
                let block = Block::Two {
                    at: k,
                    d11,
                    d21,
                    d22,
                };
                inertia = inertia + classify_block(&block, tau0);
                blocks.push(block);
            }
            k += kstep;
        }
        Ok(DenseLdl {
            n,
            a,
            perm,
            blocks,
            inertia,
        })
    }

    pub fn inertia(&self) -> Inertia {
        self.inertia
    }

    /// Solves `A x = b` in place. The factor must be nonsingular.
    pub fn solve_in_place(&self, b: &mut [f64]) {
        let n = self.n;
        assert_eq!(b.len(), n);
        let mut y: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        // L z = c (unit lower, with 2×2 blocks leaving the coupled entry out of L)
        for block in &self.blocks {
            let (start, width) = block.span();
            for c in start..start + width {
                let yc = y[c];
                if yc != 0.0 {
                    for i in (start + width)..n {
                        y[i] -= self.a[i * n + c] * yc;
                    }
                }
            }
        }
        for block in &self.blocks {
            block.solve_diagonal(&mut y);
        }
        for block in self.blocks.iter().rev() {
            let (start, width) = block.span();
            for c in start..start + width {
                let mut s = 0.0;
                for i in (start + width)..n {
                    s += self.a[i * n + c] * y[i];
                }
                y[c] -= s;
            }
        }
        for (i, &p) in self.perm.iter().enumerate() {
            b[p] = y[i];
        }
    }
}

/// Symmetric interchange of indices `p < q` in lower storage, including the
/// already-computed rows of `L`.
fn swap_symmetric(a: &mut [f64], n: usize, p: usize, q: usize) {
    debug_assert!(p < q);
    for j in 0..p {
        a.swap(p * n + j, q * n + j);
    }
    for i in (q + 1)..n {
        a.swap(i * n + p, i * n + q);
    }
    for j in (p + 1)..q {
        a.swap(j * n + p, q * n + j);
    }
    a.swap(p * n + p, q * n + q);
}

#[cfg(test)]
mod tests {
    use super::*;

    fn residual(m: &DMatrix<f64>, f: &DenseLdl, b: &[f64]) -> f64 {
        let mut x = b.to_vec();
        f.solve_in_place(&mut x);
        let r = m * nalgebra::DVector::from_vec(x) - nalgebra::DVector::from_row_slice(b);
        r.amax()
    }

    #[test]
    fn two_by_two_pivot_on_zero_diagonal() {
        let m = DMatrix::from_row_slice(3, 3, &[0.0, 1.0, 2.0, 1.0, 0.0, 3.0, 2.0, 3.0, 0.0]);
        let f = DenseLdl::factor(&m).unwrap();
        let eig = m.clone().symmetric_eigenvalues();
        let neg = eig.iter().filter(|&&v| v < 0.0).count();
        assert_eq!(f.inertia().n_minus, neg);
        assert_eq!(f.inertia().n_plus, 3 - neg);
        assert!(residual(&m, &f, &[1.0, -2.0, 0.5]) < 1e-12);
    }

    #[test]
    fn solves_random_indefinite_systems() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for n in [1usize, 2, 5, 17, 40] {
            let mut m = DMatrix::<f64>::zeros(n, n);
            for i in 0..n {
                for j in 0..=i {
                    let v: f64 = rng.random_range(-1.0..1.0);
                    m[(i, j)] = v;
                    m[(j, i)] = v;
                }
            }
            let f = DenseLdl::factor(&m).unwrap();
            let b: Vec<f64> = (0..n).map(|i| (i as f64).sin()).collect();
            assert!(residual(&m, &f, &b) < 1e-8, "n = {n}");
        }
    }

    #[test]
    fn non_finite_entries_break_down() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, f64::NAN, f64::NAN, 1.0]);
        assert!(matches!(
            DenseLdl::factor(&m),
            Err(Error::FactorizationBreakdown { index: 1, .. })
        ));
    }
}
