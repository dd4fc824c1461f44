//! Two-layer block-diagonalization precoder: the outer layer sits in the
//! null space of the other users' covariance eigenspaces, the inner layer
//! diagonalizes the user's projected channel.

use crate::channel::CovarianceFactor;
use crate::error::{Error, Result};
use crate::linalg::{full_left_svd, thin_svd, CMat, C64};

/// Singular values of the projected channel below this are counted as degenerate.
pub const DEGENERATE_GAIN: f64 = 1e-12;

/// Horizontal concatenation of every other user's eigenvectors.
pub fn interference_basis(covs: &[CovarianceFactor], k: usize) -> CMat {
    let m = covs.first().map_or(0, |c| c.eigvecs.nrows());
    let cols: usize = covs
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != k)
        .map(|(_, c)| c.rank())
        .sum();
    let mut out = CMat::zeros(m, cols);
    let mut at = 0;
    for (_, c) in covs.iter().enumerate().filter(|&(i, _)| i != k) {
        out.columns_mut(at, c.rank()).copy_from(&c.eigvecs);
        at += c.rank();
    }
    out
}

/// `K_k = S^{-1/2}` times the last `S` left singular vectors of `Λ_k`.
pub fn outer_precoder(lambda: &CMat, bs_antennas: usize, streams: usize) -> Result<CMat> {
    let occupied = lambda.ncols();
    if lambda.nrows() != bs_antennas {
        return Err(Error::Dimension(format!(
            "interference basis has {} rows, expected {bs_antennas}",
            lambda.nrows()
        )));
    }
    if streams == 0 || occupied + streams > bs_antennas {
        return Err(Error::Dimension(format!(
            "{streams} streams do not fit in the {}-dimensional null space",
            bs_antennas as i64 - occupied as i64
        )));
    }
    let basis = if occupied == 0 {
        CMat::identity(bs_antennas, bs_antennas)
    } else {
        full_left_svd(lambda).u
    };
    let scale = C64::new(1.0 / (streams as f64).sqrt(), 0.0);
    Ok(basis.columns(bs_antennas - streams, streams).into_owned() * scale)
}

#[derive(Debug, Clone)]
pub struct InnerPrecoder {
    /// `D_k = V̂`, `S x S` unitary.
    pub inner: CMat,
    /// `Û`, `N x S`.
    pub left: CMat,
    /// Singular values of `H_kᴴ K_k`, descending.
    pub gains: Vec<f64>,
    /// Some of the top `S` singular values fell below [`DEGENERATE_GAIN`].
    pub degenerate: bool,
}

/// SVD of the projected channel `H_kᴴ K_k`.
pub fn inner_precoder(h: &CMat, outer: &CMat) -> Result<InnerPrecoder> {
    if h.nrows() != outer.nrows() {
        return Err(Error::Dimension(format!(
            "channel has {} rows, precoder {}",
            h.nrows(),
            outer.nrows()
        )));
    }
    let streams = outer.ncols();
    if streams > h.ncols() {
        return Err(Error::Dimension(format!(
            "{streams} streams exceed {} receive antennas",
            h.ncols()
        )));
    }
    let projected = h.adjoint() * outer;
    let svd = thin_svd(&projected);
    let degenerate = svd.singular.iter().any(|&g| g < DEGENERATE_GAIN);
    Ok(InnerPrecoder {
        inner: svd.v,
        left: svd.u,
        gains: svd.singular,
        degenerate,
    })
}

#[derive(Debug, Clone)]
pub struct UserPrecoder {
    pub outer: CMat,
    pub inner: InnerPrecoder,
    /// `P_k = K_k D_k`, `M x S`.
    pub combined: CMat,
}

#[derive(Debug, Clone)]
pub struct PrecoderSet {
    pub users: Vec<UserPrecoder>,
}

impl PrecoderSet {
    pub fn build(covs: &[CovarianceFactor], direct: &[CMat], streams: usize) -> Result<Self> {
        let users = direct
            .iter()
            .enumerate()
            .map(|(k, h)| {
                let outer = outer_precoder(&interference_basis(covs, k), h.nrows(), streams)?;
                let inner = inner_precoder(h, &outer)?;
                let combined = &outer * &inner.inner;
                Ok(UserPrecoder {
                    outer,
                    inner,
                    combined,
                })
            })
            .collect::<Result<_>>()?;
        Ok(PrecoderSet { users })
    }

    pub fn degenerate_count(&self) -> usize {
        self.users.iter().filter(|u| u.inner.degenerate).count()
    }

    /// `[P_1 ... P_K]`, optionally leaving one user out.
    pub fn stacked(&self, skip: Option<usize>) -> CMat {
        let parts: Vec<&CMat> = self
            .users
            .iter()
            .enumerate()
            .filter(|&(i, _)| Some(i) != skip)
            .map(|(_, u)| &u.combined)
            .collect();
        let rows = self.users.first().map_or(0, |u| u.combined.nrows());
        let cols = parts.iter().map(|p| p.ncols()).sum();
        let mut out = CMat::zeros(rows, cols);
        let mut at = 0;
        for p in parts {
            out.columns_mut(at, p.ncols()).copy_from(p);
            at += p.ncols();
        }
        out
    }
}
