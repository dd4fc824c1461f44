//! User-side two-layer receivers `Q_k W_k` and their per-symbol SINRs.
//!
//! `W_k` suppresses RIS reflections using only the estimated cascade channel,
//! `Q_k` removes inter-symbol interference with a left inverse. SINRs are
//! evaluated in closed form against the true channels, with symbol
//! expectations `E{x xᴴ} = diag(α)`.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::linalg::{full_left_svd, left_inverse, CMat};
use crate::precoder::PrecoderSet;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ReceiverMode {
    /// Zero-forcing on the legitimate channel, blind to the RIS.
    Unmitigated,
    /// Null every RIS-reflected stream (F-MIT).
    FullMitigation,
    /// Null only other users' reflected streams and harness the own reflection (H-MIT).
    HarnessMitigation,
}

impl ReceiverMode {
    pub fn label(self) -> &'static str {
        match self {
            ReceiverMode::Unmitigated => "unmit",
            ReceiverMode::FullMitigation => "fmit",
            ReceiverMode::HarnessMitigation => "hmit",
        }
    }
}

impl fmt::Display for ReceiverMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for ReceiverMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "").as_str() {
            "unmit" | "unmitigated" | "none" => Ok(ReceiverMode::Unmitigated),
            "fmit" => Ok(ReceiverMode::FullMitigation),
            "hmit" => Ok(ReceiverMode::HarnessMitigation),
            _ => Err(Error::Parse(format!("unknown receiver `{s}`"))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct CombinerPair {
    /// `W`, `W_dim x N`.
    pub inner: CMat,
    /// `Q`, `S x W_dim`.
    pub outer: CMat,
    pub mode: ReceiverMode,
    /// The left inverse fell back to the pseudo-inverse.
    pub pinv_fallback: bool,
}

impl CombinerPair {
    pub fn rows(&self) -> usize {
        self.inner.nrows()
    }

    /// `Q W`, `S x N`.
    pub fn filter(&self) -> CMat {
        &self.outer * &self.inner
    }
}

/// Last `rows` rows of `Uᴴ` from the full SVD of `estimate`.
fn trailing_left_rows(estimate: &CMat, rows: usize) -> CMat {
    let u = full_left_svd(estimate).u;
    let n = u.ncols();
    u.columns(n - rows, rows).adjoint()
}

fn check_dims(z_hat: &CMat, streams_block: &CMat, h: &CMat, p_k: &CMat) -> Result<()> {
    let (m, n) = h.shape();
    if z_hat.shape() != (m, n) || streams_block.nrows() != m || p_k.nrows() != m {
        return Err(Error::Dimension(format!(
            "receiver inputs: H {m}x{n}, Z {:?}, stacked precoders with {} rows, P_k with {} rows",
            z_hat.shape(),
            streams_block.nrows(),
            p_k.nrows()
        )));
    }
    if p_k.ncols() > n {
        return Err(Error::Dimension(format!(
            "{} streams exceed {n} receive antennas",
            p_k.ncols()
        )));
    }
    Ok(())
}

/// Full mitigation: `W` spans the estimated left null space of `Ẑ_kᴴ P̃`,
/// with `max(N - KS, S)` rows; `Q` left-inverts `W H_kᴴ P_k`.
pub fn fmit_combiner(z_hat: &CMat, p_all: &CMat, h: &CMat, p_k: &CMat) -> Result<CombinerPair> {
    check_dims(z_hat, p_all, h, p_k)?;
    let n = h.ncols();
    let rows = n.saturating_sub(p_all.ncols()).max(p_k.ncols());
    let inner = trailing_left_rows(&(z_hat.adjoint() * p_all), rows);
    let li = left_inverse(&(&inner * h.adjoint() * p_k));
    Ok(CombinerPair {
        inner,
        outer: li.matrix,
        mode: ReceiverMode::FullMitigation,
        pinv_fallback: li.fallback,
    })
}

/// Harness-and-mitigate: `W` spans the estimated left null space of
/// `Ẑ_kᴴ P̃*` (other users only), with `max(N - (K-1)S, S)` rows; `Q`
/// left-inverts the estimated `W (H_kᴴ + Ẑ_kᴴ) P_k`.
pub fn hmit_combiner(z_hat: &CMat, p_others: &CMat, h: &CMat, p_k: &CMat) -> Result<CombinerPair> {
    check_dims(z_hat, p_others, h, p_k)?;
    let n = h.ncols();
    let rows = n.saturating_sub(p_others.ncols()).max(p_k.ncols());
    let inner = trailing_left_rows(&(z_hat.adjoint() * p_others), rows);
    let li = left_inverse(&(&inner * (h.adjoint() + z_hat.adjoint()) * p_k));
    Ok(CombinerPair {
        inner,
        outer: li.matrix,
        mode: ReceiverMode::HarnessMitigation,
        pinv_fallback: li.fallback,
    })
}

/// `W = I_N` and `Q` the left pseudo-inverse of `H_kᴴ P_k`.
pub fn unmitigated_combiner(h: &CMat, p_k: &CMat) -> Result<CombinerPair> {
    if h.nrows() != p_k.nrows() {
        return Err(Error::Dimension(format!(
            "H has {} rows, P_k {}",
            h.nrows(),
            p_k.nrows()
        )));
    }
    let li = left_inverse(&(h.adjoint() * p_k));
    Ok(CombinerPair {
        inner: CMat::identity(h.ncols(), h.ncols()),
        outer: li.matrix,
        mode: ReceiverMode::Unmitigated,
        pinv_fallback: li.fallback,
    })
}

/// Per-symbol power budget at the detector output (linear, mW).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SymbolSinr {
    pub signal: f64,
    pub inter_symbol: f64,
    pub ris: f64,
    pub noise: f64,
    pub sinr: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SinrBreakdown {
    pub symbols: Vec<SymbolSinr>,
}

impl SinrBreakdown {
    pub fn sinrs(&self) -> Vec<f64> {
        self.symbols.iter().map(|s| s.sinr).collect()
    }
}

/// Everything needed to evaluate one user's detector against the true channels.
#[derive(Debug, Clone, Copy)]
pub struct LinkView<'a> {
    pub user: usize,
    /// True direct channel `H_k`.
    pub direct: &'a CMat,
    /// True cascade channel `Z_k`.
    pub cascade: &'a CMat,
    pub precoders: &'a PrecoderSet,
    /// Power allocation of every user.
    pub alpha: &'a [Vec<f64>],
    pub power: f64,
    pub noise: f64,
}

/// Closed-form SINR of every symbol of `link.user` after `combiner`.
pub fn sinr_per_symbol(combiner: &CombinerPair, link: &LinkView<'_>) -> SinrBreakdown {
    let k = link.user;
    let filter = combiner.filter();
    let own = &link.precoders.users[k].combined;
    let harness = combiner.mode == ReceiverMode::HarnessMitigation;

    let effective = if harness {
        &filter * (link.direct.adjoint() + link.cascade.adjoint()) * own
    } else {
        &filter * link.direct.adjoint() * own
    };
    let skip = harness.then_some(k);
    let reflected = &filter * link.cascade.adjoint() * link.precoders.stacked(skip);
    let reflected_alpha: Vec<f64> = link
        .alpha
        .iter()
        .enumerate()
        .filter(|&(i, _)| Some(i) != skip)
        .flat_map(|(_, a)| a.iter().copied())
        .collect();

    let own_alpha = &link.alpha[k];
    let symbols = (0..own.ncols())
        .map(|s| {
            let signal = link.power * own_alpha[s] * effective[(s, s)].norm_sqr();
            let inter_symbol = link.power
                * (0..own.ncols())
                    .filter(|&c| c != s)
                    .map(|c| own_alpha[c] * effective[(s, c)].norm_sqr())
                    .sum::<f64>();
            let ris = link.power
                * reflected_alpha
                    .iter()
                    .enumerate()
                    .map(|(c, a)| a * reflected[(s, c)].norm_sqr())
                    .sum::<f64>();
            let noise = link.noise * filter.row(s).norm_squared();
            let denom = inter_symbol + ris + noise;
            let sinr = if denom > 0.0 {
                signal / denom
            } else if signal > 0.0 {
                f64::INFINITY
            } else {
                0.0
            };
            SymbolSinr {
                signal,
                inter_symbol,
                ris,
                noise,
                sinr,
            }
        })
        .collect();
    SinrBreakdown { symbols }
}
