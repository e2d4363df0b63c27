//! Truncated-Fock-space oracle for the master equation
//! `d rho/dt = i[rho, H] + kappa D[a] + g D[a†] + eta D[a^2]`.
//!
//! The generator leaves each density-matrix diagonal `rho_{n,n+k}` invariant,
//! so it block-diagonalizes by the offset `k`. Block `k >= 0` couples row `n`
//! to rows `n-1, n, n+1, n+2` (one sub-, two superdiagonals); `k < 0` blocks
//! are complex conjugates and never built. In the rotating frame the blocks
//! are real; the lab frame adds the constant `-i omega0 k` to the diagonal.
//!
//! The `k = 0` block is built with a closed top boundary (the pump outflow
//! from the highest Fock state is dropped) so that every column sums to zero
//! and the truncated block remains an exact trace-preserving generator.

#![allow(clippy::needless_range_loop)] // band arithmetic reads clearest indexed

pub mod banded;
pub mod eigen;

use num_complex::Complex64;
use rayon::prelude::*;
use thiserror::Error;

use crate::asymptotics;
use crate::exactstate::{DiagonalState, ExactStateError, Provenance, SystemParams};
use banded::BandedMatrix;

/// Zero-mode magnitude threshold, relative to `kappa`.
pub const ZERO_MODE_THRESHOLD: f64 = 1e-10;

/// Default number of off-diagonal blocks scanned for the asymptotic decay rate.
pub const DEFAULT_K_MAX: usize = 4;

/// Leading eigenvalues requested per block.
const N_LEADING: usize = 6;

#[derive(Debug, Error)]
pub enum LiouvilleError {
    #[error("block dimension too small: trunc = {trunc} must exceed k + 4 = {}", k + 4)]
    DimensionTooSmall { trunc: usize, k: usize },
    #[error("kernel is (numerically) more than one-dimensional: pivot ratio {ratio:.3e}")]
    SingularBeyondRankOne { ratio: f64 },
    #[error("zero-mode identification failed: smallest |lambda| = {magnitude:.3e} exceeds {threshold:.3e}")]
    ZeroModeIdentification { magnitude: f64, threshold: f64 },
    #[error("eigenvalue iteration failed: {detail}")]
    EigenNoConvergence { detail: String },
    #[error(transparent)]
    State(#[from] ExactStateError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Frame {
    Rotating,
    Lab,
}

/// One offset block of the Liouvillian, stored by its four coupling bands.
#[derive(Debug, Clone)]
pub struct BlockGenerator {
    offset_k: usize,
    trunc: usize,
    frame: Frame,
    /// `-i omega0 k`; zero in the rotating frame.
    lab_diagonal_shift: Complex64,
    /// `diag[n]`: loss diagonal (real part).
    diag: Vec<f64>,
    /// `sub[n]`: coupling from row `n-1`, `g sqrt(n (n+k))`; `sub[0] = 0`.
    sub: Vec<f64>,
    /// `sup1[n]`: coupling from row `n+1`, `kappa sqrt((n+1)(n+1+k))`.
    sup1: Vec<f64>,
    /// `sup2[n]`: coupling from row `n+2`, `eta sqrt((n+1)(n+2)(n+k+1)(n+k+2))`.
    sup2: Vec<f64>,
}

impl BlockGenerator {
    pub fn offset_k(&self) -> usize {
        self.offset_k
    }

    pub fn trunc(&self) -> usize {
        self.trunc
    }

    /// Number of rows, `trunc + 1 - k` (rows `n = 0 ..= trunc - k`).
    pub fn dim(&self) -> usize {
        self.trunc + 1 - self.offset_k
    }

    pub fn frame(&self) -> Frame {
        self.frame
    }

    pub fn lab_diagonal_shift(&self) -> Complex64 {
        self.lab_diagonal_shift
    }

    /// Real matrix entry `(row, col)` within the band, rotating frame.
    pub fn entry(&self, row: usize, col: usize) -> f64 {
        let dim = self.dim();
        if row >= dim || col >= dim {
            return 0.0;
        }
        match col as isize - row as isize {
            -1 => self.sub[row],
            0 => self.diag[row],
            1 => self.sup1[row],
            2 => self.sup2[row],
            _ => 0.0,
        }
    }

    /// Column sums of the real part; exactly zero for `k = 0`.
    pub fn column_sums(&self) -> Vec<f64> {
        let dim = self.dim();
        (0..dim)
            .map(|j| {
                let mut s = self.diag[j];
                if j >= 1 {
                    s += self.sup1[j - 1];
                }
                if j >= 2 {
                    s += self.sup2[j - 2];
                }
                if j + 1 < dim {
                    s += self.sub[j + 1];
                }
                s
            })
            .collect()
    }

    /// Banded copy of `M - sigma I` (rotating-frame real part).
    pub fn shifted_banded(&self, sigma: f64) -> BandedMatrix {
        let dim = self.dim();
        let mut m = BandedMatrix::new(dim, 1, 2);
        for n in 0..dim {
            m.set(n, n, self.diag[n] - sigma);
            if n >= 1 {
                m.set(n, n - 1, self.sub[n]);
            }
            if n + 1 < dim {
                m.set(n, n + 1, self.sup1[n]);
            }
            if n + 2 < dim {
                m.set(n, n + 2, self.sup2[n]);
            }
        }
        m
    }

    /// Dense rotating-frame copy, for the reference eigensolver path.
    pub fn to_dense(&self) -> nalgebra::DMatrix<f64> {
        let dim = self.dim();
        let mut m = nalgebra::DMatrix::zeros(dim, dim);
        for r in 0..dim {
            for c in r.saturating_sub(1)..dim.min(r + 3) {
                m[(r, c)] = self.entry(r, c);
            }
        }
        m
    }
}

/// Spectral observables of the Liouvillian.
#[derive(Debug, Clone)]
pub struct SpectralSummary {
    /// Real dissipative gap: `-max Re lambda` over nonzero `k = 0` eigenvalues.
    pub rdg: f64,
    /// Asymptotic decay rate: min over blocks of the smallest `|Re lambda|`
    /// (zero mode excluded).
    pub adr: f64,
    /// Block offset attaining the ADR.
    pub adr_block: usize,
    /// `1 / adr`.
    pub relaxation_time: f64,
    /// Per-block leading eigenvalues (lab-frame shift applied when set).
    pub leading_eigenvalues: Vec<(usize, Vec<Complex64>)>,
}

/// Builds offset block `k` of the Liouvillian at Fock cutoff `trunc`.
pub fn build_block(
    params: &SystemParams,
    k: usize,
    trunc: usize,
) -> Result<BlockGenerator, LiouvilleError> {
    if trunc <= k + 4 {
        return Err(LiouvilleError::DimensionTooSmall { trunc, k });
    }
    let dim = trunc + 1 - k;
    let (g, kappa, eta) = (params.g(), params.kappa(), params.eta());
    let kf = k as f64;
    let mut diag = Vec::with_capacity(dim);
    let mut sub = Vec::with_capacity(dim);
    let mut sup1 = Vec::with_capacity(dim);
    let mut sup2 = Vec::with_capacity(dim);
    for n in 0..dim {
        let nf = n as f64;
        let pump_loss = if k == 0 && n == dim - 1 {
            // Closed boundary: the pump channel out of the top state has no
            // in-band counterpart, so dropping it keeps the block an exact
            // generator (columns sum to zero).
            0.0
        } else {
            g * (2.0 * nf + kf + 2.0) / 2.0
        };
        diag.push(
            -(kappa * (2.0 * nf + kf) / 2.0
                + pump_loss
                + eta * (nf * (nf - 1.0) + (nf + kf) * (nf + kf - 1.0)) / 2.0),
        );
        sub.push(if n >= 1 {
            g * (nf * (nf + kf)).sqrt()
        } else {
            0.0
        });
        sup1.push(kappa * ((nf + 1.0) * (nf + 1.0 + kf)).sqrt());
        sup2.push(eta * ((nf + 1.0) * (nf + 2.0) * (nf + kf + 1.0) * (nf + kf + 2.0)).sqrt());
    }
    let frame = if params.omega0() == 0.0 {
        Frame::Rotating
    } else {
        Frame::Lab
    };
    let lab_diagonal_shift = Complex64::new(0.0, -params.omega0() * kf);
    Ok(BlockGenerator {
        offset_k: k,
        trunc,
        frame,
        lab_diagonal_shift: if frame == Frame::Lab {
            lab_diagonal_shift
        } else {
            Complex64::ZERO
        },
        diag,
        sub,
        sup1,
        sup2,
    })
}

/// Steady state from the `k = 0` kernel, independent of the closed forms.
///
/// The last stationarity equation is an exact linear combination of the
/// others (columns sum to zero), so it is dropped in favour of the
/// normalization; the entry nearest the expected distribution peak is pinned
/// to 1 and the remaining banded system is solved by LU.
pub fn steady_state_oracle(
    params: &SystemParams,
    trunc: usize,
) -> Result<DiagonalState, LiouvilleError> {
    let block = build_block(params, 0, trunc)?;
    let dim = block.dim();
    let (mu, _) = asymptotics::moment_scale_estimate(params);
    let j_fix = (mu.round() as usize).min(dim - 1);

    let n_red = dim - 1;
    let mut reduced = BandedMatrix::new(n_red, 2, 2);
    let mut rhs = vec![0.0f64; n_red];
    for r in 0..n_red {
        let lo = r.saturating_sub(1);
        let hi = (r + 2).min(dim - 1);
        for c in lo..=hi {
            let v = block.entry(r, c);
            if c == j_fix {
                rhs[r] = -v;
            } else {
                let c_red = if c > j_fix { c - 1 } else { c };
                reduced.set(r, c_red, v);
            }
        }
    }
    let lu = reduced.lu_factor();
    let ratio = lu.pivot_ratio();
    if ratio < 1e-12 {
        return Err(LiouvilleError::SingularBeyondRankOne { ratio });
    }
    lu.solve_in_place(&mut rhs);

    let mut p = Vec::with_capacity(dim);
    for c in 0..dim {
        if c == j_fix {
            p.push(1.0);
        } else {
            let c_red = if c > j_fix { c - 1 } else { c };
            p.push(rhs[c_red]);
        }
    }
    Ok(DiagonalState::new(p, Provenance::Oracle)?)
}

/// Leading eigenvalues of one block near the origin (rotating frame), with
/// the `k = 0` zero mode identified and removed.
fn block_leading(
    block: &BlockGenerator,
    params: &SystemParams,
) -> Result<Vec<Complex64>, LiouvilleError> {
    let kappa = params.kappa();
    let mut sigma = if block.offset_k() == 0 {
        1e-3 * kappa
    } else {
        0.0
    };
    let mut last_err = None;
    for _ in 0..3 {
        let lu = block.shifted_banded(sigma).lu_factor();
        match eigen::shift_invert_leading(&lu, sigma, N_LEADING, None) {
            Ok(eigs) => {
                if block.offset_k() == 0 {
                    return strip_zero_mode(eigs, kappa);
                }
                return Ok(eigs);
            }
            Err(e) => {
                last_err = Some(e);
                // A shift that collides with an eigenvalue stalls the solve;
                // nudge it and retry.
                sigma = if sigma == 0.0 {
                    1e-4 * kappa
                } else {
                    sigma * 1.618
                };
            }
        }
    }
    Err(last_err.unwrap())
}

fn strip_zero_mode(mut eigs: Vec<Complex64>, kappa: f64) -> Result<Vec<Complex64>, LiouvilleError> {
    let (idx, smallest) = eigs
        .iter()
        .enumerate()
        .map(|(i, l)| (i, l.norm()))
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .expect("nonempty eigenvalue set");
    if smallest > ZERO_MODE_THRESHOLD * kappa {
        return Err(LiouvilleError::ZeroModeIdentification {
            magnitude: smallest,
            threshold: ZERO_MODE_THRESHOLD * kappa,
        });
    }
    eigs.remove(idx);
    Ok(eigs)
}

/// The real dissipative gap `Delta_RDG` of the `k = 0` block.
pub fn real_dissipative_gap(params: &SystemParams, trunc: usize) -> Result<f64, LiouvilleError> {
    let block = build_block(params, 0, trunc)?;
    let eigs = block_leading(&block, params)?;
    let max_re = eigs.iter().map(|l| l.re).fold(f64::NEG_INFINITY, f64::max);
    Ok(-max_re)
}

/// Scans blocks `k = 0 ..= k_max` for the asymptotic decay rate and reports
/// the full spectral summary.
pub fn asymptotic_decay_rate(
    params: &SystemParams,
    trunc: usize,
    k_max: usize,
) -> Result<SpectralSummary, LiouvilleError> {
    let per_block: Vec<(usize, Vec<Complex64>)> = (0..=k_max)
        .into_par_iter()
        .map(|k| -> Result<_, LiouvilleError> {
            let block = build_block(params, k, trunc)?;
            let eigs = block_leading(&block, params)?;
            Ok((k, eigs))
        })
        .collect::<Result<Vec<_>, _>>()?;

    let rdg = {
        let k0 = &per_block[0].1;
        -k0.iter().map(|l| l.re).fold(f64::NEG_INFINITY, f64::max)
    };
    let (adr_block, adr) = per_block
        .iter()
        .map(|(k, eigs)| {
            let min_abs_re = eigs
                .iter()
                .map(|l| l.re.abs())
                .fold(f64::INFINITY, f64::min);
            (*k, min_abs_re)
        })
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .expect("k_max >= 0 gives at least one block");

    let shift = Complex64::new(0.0, -params.omega0());
    let leading_eigenvalues = per_block
        .into_iter()
        .map(|(k, eigs)| {
            let s = shift * k as f64;
            (k, eigs.into_iter().map(|l| l + s).collect())
        })
        .collect();

    Ok(SpectralSummary {
        rdg,
        adr,
        adr_block,
        relaxation_time: 1.0 / adr,
        leading_eigenvalues,
    })
}

/// Default Fock cutoff for spectral computations.
pub fn default_spectral_trunc(params: &SystemParams) -> usize {
    crate::exactstate::truncation_estimate(params).max(60)
}
