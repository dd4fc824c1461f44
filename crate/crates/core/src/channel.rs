//! Channel synthesis: low-rank direct-link covariances, correlated Rayleigh
//! RIS links, the Khatri-Rao cascade operator and imperfect cascade CSI.

use rand::Rng;

use crate::error::{Error, Result};
use crate::linalg::{
    complex_gaussian, exponential_correlation, symmetric_sqrt, to_complex, CMat, CVec, C64,
};
use crate::scenario::{CsiErrorMode, LinkGains, SystemConfig};

/// Truncated eigendecomposition of a direct-link covariance.
#[derive(Debug, Clone)]
pub struct CovarianceFactor {
    /// `M x r` orthonormal eigenvectors.
    pub eigvecs: CMat,
    /// Positive eigenvalues, descending.
    pub eigvals: Vec<f64>,
}

impl CovarianceFactor {
    pub fn rank(&self) -> usize {
        self.eigvals.len()
    }
}

/// Random orthonormal eigenspace with eigenvalues drawn from U(0.5, 1.5) and
/// rescaled so they sum to `bs_antennas * gain`.
pub fn synth_covariance<R: Rng + ?Sized>(
    bs_antennas: usize,
    rank: usize,
    gain: f64,
    rng: &mut R,
) -> Result<CovarianceFactor> {
    if rank == 0 || rank > bs_antennas {
        return Err(Error::Dimension(format!(
            "covariance rank {rank} must lie in 1..={bs_antennas}"
        )));
    }
    let draw = complex_gaussian(bs_antennas, rank, rng);
    let eigvecs = draw.qr().q();
    let mut eigvals: Vec<f64> = (0..rank).map(|_| rng.random_range(0.5..1.5)).collect();
    let scale = bs_antennas as f64 * gain / eigvals.iter().sum::<f64>();
    for v in &mut eigvals {
        *v *= scale;
    }
    eigvals.sort_by(|a, b| b.total_cmp(a));
    Ok(CovarianceFactor { eigvecs, eigvals })
}

/// Draws `H = U Δ^{1/2} H̄` with `H̄` an `r x N` standard complex Gaussian matrix.
/// Returns `(H, H̄)`.
pub fn sample_direct<R: Rng + ?Sized>(
    cov: &CovarianceFactor,
    user_antennas: usize,
    rng: &mut R,
) -> (CMat, CMat) {
    let fading = complex_gaussian(cov.rank(), user_antennas, rng);
    let mut basis = cov.eigvecs.clone();
    for (j, &lambda) in cov.eigvals.iter().enumerate() {
        basis.column_mut(j).scale_mut(lambda.sqrt());
    }
    (basis * &fading, fading)
}

/// Square roots of the exponential spatial correlation matrices at each array.
/// `None` stands for the identity (no correlation).
#[derive(Debug, Clone)]
pub struct LinkCorrelation {
    bs: Option<CMat>,
    ris: Option<CMat>,
    ue: Option<CMat>,
}

impl LinkCorrelation {
    pub fn new(cfg: &SystemConfig) -> Self {
        let root = |n: usize, rho: f64| {
            (rho != 0.0).then(|| to_complex(&symmetric_sqrt(&exponential_correlation(n, rho))))
        };
        LinkCorrelation {
            bs: root(cfg.bs_antennas, cfg.rho_bs),
            ris: root(cfg.ris_elements, cfg.rho_ris),
            ue: root(cfg.user_antennas, cfg.rho_ue),
        }
    }

    fn apply(left: &Option<CMat>, white: CMat, right: &Option<CMat>) -> CMat {
        let m = match left {
            Some(l) => l * white,
            None => white,
        };
        match right {
            Some(r) => m * r,
            None => m,
        }
    }
}

/// Kronecker-correlated Rayleigh draws of the BS-RIS channel `G` (`L x M`) and
/// every RIS-user channel `F_k` (`L x N`).
pub fn sample_ris_links<R: Rng + ?Sized>(
    cfg: &SystemConfig,
    gains: &LinkGains,
    corr: &LinkCorrelation,
    rng: &mut R,
) -> (CMat, Vec<CMat>) {
    let (l, m, n) = (cfg.ris_elements, cfg.bs_antennas, cfg.user_antennas);
    let g = LinkCorrelation::apply(&corr.ris, complex_gaussian(l, m, rng), &corr.bs)
        * C64::new(gains.bs_ris.sqrt(), 0.0);
    let f = gains
        .ris_user
        .iter()
        .map(|&beta| {
            LinkCorrelation::apply(&corr.ris, complex_gaussian(l, n, rng), &corr.ue)
                * C64::new(beta.sqrt(), 0.0)
        })
        .collect();
    (g, f)
}

/// One Monte Carlo draw of every channel in the scenario.
#[derive(Debug, Clone)]
pub struct ChannelRealization {
    pub covariances: Vec<CovarianceFactor>,
    /// `H_k`, `M x N`.
    pub direct: Vec<CMat>,
    /// `H̄_k`, `r_k x N`.
    pub direct_fading: Vec<CMat>,
    /// `G`, `L x M`.
    pub bs_ris: CMat,
    /// `F_k`, `L x N`.
    pub ris_user: Vec<CMat>,
}

/// Draws covariances, direct links and RIS links in a fixed order from `rng`.
pub fn draw_realization<R: Rng + ?Sized>(
    cfg: &SystemConfig,
    gains: &LinkGains,
    corr: &LinkCorrelation,
    rng: &mut R,
) -> Result<ChannelRealization> {
    let covariances = cfg
        .ranks
        .iter()
        .zip(&gains.bs_user)
        .map(|(&r, &gain)| synth_covariance(cfg.bs_antennas, r, gain, rng))
        .collect::<Result<Vec<_>>>()?;
    let (direct, direct_fading) = covariances
        .iter()
        .map(|cov| sample_direct(cov, cfg.user_antennas, rng))
        .unzip();
    let (bs_ris, ris_user) = sample_ris_links(cfg, gains, corr, rng);
    Ok(ChannelRealization {
        covariances,
        direct,
        direct_fading,
        bs_ris,
        ris_user,
    })
}

/// Column-wise Kronecker product: column `l` is `a[:, l] ⊗ b[:, l]`.
pub fn khatri_rao(a: &CMat, b: &CMat) -> Result<CMat> {
    if a.ncols() != b.ncols() {
        return Err(Error::Dimension(format!(
            "Khatri-Rao factors have {} and {} columns",
            a.ncols(),
            b.ncols()
        )));
    }
    let (ra, rb) = (a.nrows(), b.nrows());
    let mut out = CMat::zeros(ra * rb, a.ncols());
    for l in 0..a.ncols() {
        for i in 0..ra {
            let ai = a[(i, l)];
            for j in 0..rb {
                out[(i * rb + j, l)] = ai * b[(j, l)];
            }
        }
    }
    Ok(out)
}

/// `S_k = Gᵀ ⋄ F_kᴴ`, the `MN x L` operator with `S_k θ = vec(F_kᴴ diag(θ) G)`.
pub fn build_cascade_operator(g: &CMat, f_k: &CMat) -> Result<CMat> {
    if g.nrows() != f_k.nrows() {
        return Err(Error::Dimension(format!(
            "G has {} rows but F_k has {}",
            g.nrows(),
            f_k.nrows()
        )));
    }
    khatri_rao(&g.transpose(), &f_k.adjoint())
}

const MODULUS_TOL: f64 = 1e-9;

/// Effective cascade channel `Z_k` (`M x N`) with `Z_kᴴ = F_kᴴ diag(θ) G`.
///
/// `theta` must be unit-modulus, or all zeros for the RIS-absent case.
pub fn cascade_channel(f_k: &CMat, theta: &CVec, g: &CMat) -> Result<CMat> {
    let l = g.nrows();
    if f_k.nrows() != l || theta.len() != l {
        return Err(Error::Dimension(format!(
            "RIS with {l} elements, F_k has {} rows, theta has {} entries",
            f_k.nrows(),
            theta.len()
        )));
    }
    let absent = theta.iter().all(|t| *t == C64::new(0.0, 0.0));
    if !absent {
        if let Some(bad) = theta.iter().find(|t| (t.norm() - 1.0).abs() > MODULUS_TOL) {
            return Err(Error::Domain(format!(
                "reflection coefficient with modulus {} is not unit-modulus",
                bad.norm()
            )));
        }
    }
    let mut weighted = g.clone();
    for (mut row, &t) in weighted.row_iter_mut().zip(theta.iter()) {
        row *= t;
    }
    Ok((f_k.adjoint() * weighted).adjoint())
}

/// Imperfect cascade CSI `Ẑ = sqrt(1 - τ²) Z + τ E`.
///
/// The error matrix is always drawn so that a shared stream stays aligned
/// across different `tau` values.
pub fn corrupt_csi<R: Rng + ?Sized>(z: &CMat, tau: f64, mode: CsiErrorMode, rng: &mut R) -> CMat {
    let mut err = complex_gaussian(z.nrows(), z.ncols(), rng);
    if tau == 0.0 {
        return z.clone();
    }
    if mode == CsiErrorMode::Scaled {
        let entries = (z.nrows() * z.ncols()).max(1) as f64;
        err *= C64::new((z.norm_squared() / entries).sqrt(), 0.0);
    }
    z * C64::new((1.0 - tau * tau).sqrt(), 0.0) + err * C64::new(tau, 0.0)
}
