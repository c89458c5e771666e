//! Banded `A = L D Lᵀ` without interchanges. Near-singular diagonal entries
//! are paired with their successor into a 2×2 block, which keeps the fill
//! within one diagonal of the original band. If neither choice keeps the multipliers
//! bounded the factorization reports itself unstable and the caller falls
//! back to the dense pivoted path.

use super::{classify_block, Block};
use crate::model::Inertia;
use crate::sparse::SymSparse;

const ALPHA: f64 = 0.640_388_203_202_208_0;
const MULTIPLIER_LIMIT: f64 = 1e3;

#[derive(Clone, Debug)]
pub struct BandLdl {
    n: usize,
    bw: usize,
    /// Column-major lower band: entry `(i, j)` with `0 <= i - j <= bw + 1`
    /// lives at `j * (bw + 2) + (i - j)`. The extra diagonal holds the one
    /// multiplier a 2×2 block pushes past the band of its first column.
    ab: Vec<f64>,
    blocks: Vec<Block>,
    inertia: Inertia,
}

impl BandLdl {
    #[inline]
    fn at(&self, i: usize, j: usize) -> usize {
        j * (self.bw + 2) + (i - j)
    }

    /// `None` when the unpivoted elimination would be unstable.
    pub fn factor(m: &SymSparse, tau0: f64) -> Option<Self> {
        let n = m.order();
        let bw = m.bandwidth();
        let mut f = BandLdl {
            n,
            bw,
            ab: vec![0.0; n * (bw + 2)],
            blocks: Vec::new(),
            inertia: Inertia::default(),
        };
        for j in 0..n {
            for &(i, v) in m.row(j) {
                if i >= j {
                    let p = f.at(i, j);
                    f.ab[p] = v;
                }
            }
        }
        let mut col = vec![0.0; bw + 2];
        let mut col2 = vec![0.0; bw + 2];
        let mut k = 0;
        while k < n {
            let last = (k + bw).min(n - 1);
            let akk = f.ab[f.at(k, k)];
            let omega = ((k + 1)..=last)
                .map(|i| f.ab[f.at(i, k)].abs())
                .fold(0.0, f64::max);

            if akk.abs().max(omega) <= tau0 {
                f.inertia.n_zero += 1;
                f.blocks.push(Block::One { at: k, d: akk });
                for i in (k + 1)..=last {
                    let p = f.at(i, k);
                    f.ab[p] = 0.0;
                }
                k += 1;
                continue;
            }

            if akk.abs() >= ALPHA * omega {
                for i in (k + 1)..=last {
                    col[i - k] = f.ab[f.at(i, k)];
                }
                for j in (k + 1)..=last {
                    let cj = col[j - k];
                    if cj == 0.0 {
                        continue;
                    }
                    for i in j..=last {
                        let p = f.at(i, j);
                        f.ab[p] -= col[i - k] * cj / akk;
                    }
                }
                for i in (k + 1)..=last {
                    let p = f.at(i, k);
                    f.ab[p] = col[i - k] / akk;
                }
                let block = Block::One { at: k, d: akk };
                f.inertia = f.inertia + classify_block(&block, tau0);
                f.blocks.push(block);
                k += 1;
                continue;
            }

            // 2×2 block on (k, k+1); k + 1 < n because omega > 0.
            let last2 = (k + 1 + bw).min(n - 1);
            let d11 = akk;
            let d21 = f.ab[f.at(k + 1, k)];
            let d22 = f.ab[f.at(k + 1, k + 1)];
            let det = d11 * d22 - d21 * d21;
            if det == 0.0 || !det.is_finite() {
                return None;
            }
            for i in (k + 2)..=last2 {
                col[i - k] = if i <= last { f.ab[f.at(i, k)] } else { 0.0 };
                col2[i - k] = f.ab[f.at(i, k + 1)];
            }
            let mut lmax: f64 = 0.0;
            for i in (k + 2)..=last2 {
                let (w1, w2) = (col[i - k], col2[i - k]);
                let l1 = (w1 * d22 - w2 * d21) / det;
                let l2 = (w2 * d11 - w1 * d21) / det;
                lmax = lmax.max(l1.abs()).max(l2.abs());
            }
            if lmax > MULTIPLIER_LIMIT {
                return None;
            }
            for i in (k + 2)..=last2 {
                let (w1, w2) = (col[i - k], col2[i - k]);
                let l1 = (w1 * d22 - w2 * d21) / det;
                let l2 = (w2 * d11 - w1 * d21) / det;
                for j in (k + 2)..=i {
                    let p = f.at(i, j);
                    f.ab[p] -= l1 * col[j - k] + l2 * col2[j - k];
                }
                let p = f.at(i, k);
                f.ab[p] = l1;
                let p = f.at(i, k + 1);
                f.ab[p] = l2;
            }
            let block = Block::Two { at: k, d11, d21, d22 };
            f.inertia = f.inertia + classify_block(&block, tau0);
            f.blocks.push(block);
            k += 2;
        }
        Some(f)
    }

    pub fn inertia(&self) -> Inertia {
        self.inertia
    }

    pub fn solve_in_place(&self, y: &mut [f64]) {
        let n = self.n;
        assert_eq!(y.len(), n);
        for block in &self.blocks {
            let (start, width) = block.span();
            for c in start..start + width {
                let yc = y[c];
                if yc == 0.0 {
                    continue;
                }
                let last = (c + self.bw + 1).min(n - 1);
                for i in (start + width)..=last.max(start + width - 1) {
                    y[i] -= self.ab[self.at(i, c)] * yc;
                }
            }
        }
        for block in &self.blocks {
            block.solve_diagonal(y);
        }
        for block in self.blocks.iter().rev() {
            let (start, width) = block.span();
            for c in start..start + width {
                let last = (c + self.bw + 1).min(n - 1);
                let mut s = 0.0;
                for i in (start + width)..=last.max(start + width - 1) {
                    s += self.ab[self.at(i, c)] * y[i];
                }
                y[c] -= s;
            }
        }
    }
}
