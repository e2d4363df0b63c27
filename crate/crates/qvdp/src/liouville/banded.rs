//! Banded real matrices in LAPACK-style storage with partial-pivoting LU.
//!
//! The generator blocks have one subdiagonal and two superdiagonals; the
//! reduced kernel system has two of each. Partial pivoting widens the upper
//! bandwidth by `kl`, so the working storage keeps `2*kl + ku + 1` rows.

#![allow(clippy::needless_range_loop)] // band arithmetic reads clearest indexed

/// Band storage: entry `(i, j)` with `-ku <= i - j <= kl` lives at
/// `data[j * ldab + (kl + ku + i - j)]`.
#[derive(Debug, Clone)]
pub struct BandedMatrix {
    dim: usize,
    kl: usize,
    ku: usize,
    ldab: usize,
    data: Vec<f64>,
}

impl BandedMatrix {
    pub fn new(dim: usize, kl: usize, ku: usize) -> Self {
        let ldab = 2 * kl + ku + 1;
        BandedMatrix {
            dim,
            kl,
            ku,
            ldab,
            data: vec![0.0; ldab * dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    fn slot(&self, i: usize, j: usize) -> usize {
        debug_assert!(i < self.dim && j < self.dim);
        debug_assert!(
            i + self.ku >= j && j + self.kl >= i,
            "({i},{j}) out of band"
        );
        j * self.ldab + (self.kl + self.ku + i - j)
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        let s = self.slot(i, j);
        self.data[s] = v;
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        if i + self.ku < j || j + self.kl < i {
            return 0.0;
        }
        self.data[self.slot(i, j)]
    }

    /// `y = A x` over the original band (valid before factorization only).
    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.dim);
        assert_eq!(y.len(), self.dim);
        for (i, yi) in y.iter_mut().enumerate() {
            let lo = i.saturating_sub(self.kl);
            let hi = (i + self.ku).min(self.dim - 1);
            let mut acc = 0.0;
            for j in lo..=hi {
                acc += self.get(i, j) * x[j];
            }
            *yi = acc;
        }
    }

    /// In-place LU with partial pivoting (dgbtrf-style).
    pub fn lu_factor(mut self) -> BandedLu {
        let n = self.dim;
        let (kl, ku) = (self.kl, self.ku);
        let kw = kl + ku; // working upper bandwidth after pivoting
        let mut pivots = vec![0usize; n];
        let mut min_pivot = f64::INFINITY;
        let mut max_pivot = 0.0f64;
        for j in 0..n {
            let i_max = (j + kl).min(n - 1);
            let mut p = j;
            let mut best = self.get_work(j, j, kw).abs();
            for i in (j + 1)..=i_max {
                let v = self.get_work(i, j, kw).abs();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            pivots[j] = p;
            if p != j {
                let col_max = (j + kw).min(n - 1);
                for jj in j..=col_max {
                    let a = self.get_work(j, jj, kw);
                    let b = self.get_work(p, jj, kw);
                    self.set_work(j, jj, kw, b);
                    self.set_work(p, jj, kw, a);
                }
            }
            let mut u = self.get_work(j, j, kw);
            if u == 0.0 {
                // Exactly singular column: substitute a vanishing pivot so the
                // factorization can finish; the pivot ratio reports the rank gap.
                u = f64::MIN_POSITIVE;
                self.set_work(j, j, kw, u);
            }
            min_pivot = min_pivot.min(u.abs());
            max_pivot = max_pivot.max(u.abs());
            for i in (j + 1)..=i_max {
                let m = self.get_work(i, j, kw) / u;
                self.set_work(i, j, kw, m);
                if m != 0.0 {
                    let col_max = (j + kw).min(n - 1);
                    for jj in (j + 1)..=col_max {
                        let v = self.get_work(i, jj, kw) - m * self.get_work(j, jj, kw);
                        self.set_work(i, jj, kw, v);
                    }
                }
            }
        }
        BandedLu {
            mat: self,
            pivots,
            min_pivot,
            max_pivot,
        }
    }

    // Band accessors over the widened working band (|i - j| <= kl below,
    // i - j >= -(kl + ku) above).
    #[inline]
    fn get_work(&self, i: usize, j: usize, kw: usize) -> f64 {
        if i + kw < j || j + self.kl < i {
            return 0.0;
        }
        self.data[j * self.ldab + (self.kl + self.ku + i - j)]
    }

    #[inline]
    fn set_work(&mut self, i: usize, j: usize, kw: usize, v: f64) {
        debug_assert!(i + kw >= j && j + self.kl >= i);
        self.data[j * self.ldab + (self.kl + self.ku + i - j)] = v;
    }
}

/// Factored form; solves `A x = b` in place.
#[derive(Debug, Clone)]
pub struct BandedLu {
    mat: BandedMatrix,
    pivots: Vec<usize>,
    min_pivot: f64,
    max_pivot: f64,
}

impl BandedLu {
    pub fn dim(&self) -> usize {
        self.mat.dim
    }

    /// Smallest over largest pivot magnitude; near zero signals (numerical)
    /// rank deficiency.
    pub fn pivot_ratio(&self) -> f64 {
        if self.max_pivot == 0.0 {
            0.0
        } else {
            self.min_pivot / self.max_pivot
        }
    }

    pub fn solve_in_place(&self, b: &mut [f64]) {
        let n = self.mat.dim;
        assert_eq!(b.len(), n);
        let (kl, ku) = (self.mat.kl, self.mat.ku);
        let kw = kl + ku;
        // Forward: apply P and L.
        for j in 0..n {
            let p = self.pivots[j];
            if p != j {
                b.swap(p, j);
            }
            let i_max = (j + kl).min(n - 1);
            for i in (j + 1)..=i_max {
                b[i] -= self.mat.get_work(i, j, kw) * b[j];
            }
        }
        // Backward: solve U x = y.
        for j in (0..n).rev() {
            b[j] /= self.mat.get_work(j, j, kw);
            let i_min = j.saturating_sub(kw);
            for i in i_min..j {
                b[i] -= self.mat.get_work(i, j, kw) * b[j];
            }
        }
    }
}
