//! Shared numeric parameters: level counts, flow scale and logarithms.

use num_rational::Ratio;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Exact non-negative rational used for φ and certificate parameters.
pub type Rational = Ratio<u64>;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ParamError {
    #[error("phi must lie in (0, 1], got {0}")]
    PhiOutOfRange(Rational),
    #[error("graph needs at least 4 edges to have two batch levels, got {0}")]
    TooFewEdges(usize),
}

/// ⌈log₂ x⌉, with `ceil_log2(0) = ceil_log2(1) = 0`.
pub fn ceil_log2(x: u64) -> u64 {
    if x <= 1 {
        0
    } else {
        64 - u64::from((x - 1).leading_zeros())
    }
}

/// ⌈log₂ n⌉ floored at 1.
pub fn log_n(n: usize) -> u64 {
    ceil_log2(n as u64).max(1)
}

/// ⌈log₂ ⌈log₂ n⌉⌉ floored at 1.
pub fn loglog_n(n: usize) -> u64 {
    ceil_log2(log_n(n)).max(1)
}

/// ⌈r · x⌉ for a rational `r`.
pub fn ceil_mul(r: Rational, x: u64) -> u64 {
    let num = u128::from(*r.numer()) * u128::from(x);
    let den = u128::from(*r.denom());
    num.div_ceil(den) as u64
}

/// ⌈x / φ⌉.
pub fn ceil_div_phi(x: u64, phi: Rational) -> u64 {
    ceil_mul(phi.recip(), x)
}

/// Parameters derived from the initial graph and φ.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Params {
    pub n: usize,
    pub m: usize,
    pub phi: Rational,
    /// k = ⌈log₂ m⌉
    pub k: usize,
    /// λ = k + ⌈log₂ φ⁻¹⌉ + 1
    pub lambda: usize,
    /// Flow unit scale σ. Equal to λ so the per-level sink step is an integer.
    pub sigma: u64,
    pub log_n: u64,
    pub loglog_n: u64,
}

impl Params {
    pub fn new(n: usize, m: usize, phi: Rational) -> Result<Self, ParamError> {
        if *phi.numer() == 0 || phi > Rational::from_integer(1) {
            return Err(ParamError::PhiOutOfRange(phi));
        }
        if m < 4 {
            return Err(ParamError::TooFewEdges(m));
        }
        let k = ceil_log2(m as u64) as usize;
        // smallest t with p·2^t ≥ q
        let (p, q) = (*phi.numer(), *phi.denom());
        let mut t = 0usize;
        while (p << t) < q {
            t += 1;
        }
        let lambda = k + t + 1;
        Ok(Params {
            n,
            m,
            phi,
            k,
            lambda,
            sigma: lambda as u64,
            log_n: log_n(n),
            loglog_n: loglog_n(n),
        })
    }

    pub fn phi_p(&self) -> u64 {
        *self.phi.numer()
    }

    pub fn phi_q(&self) -> u64 {
        *self.phi.denom()
    }

    /// ⌈c·σ/φ⌉ in scaled units.
    pub fn scaled_over_phi(&self, c: u64) -> u64 {
        ceil_div_phi(c * self.sigma, self.phi)
    }
}
