//! Constant presets. `Paper` uses the constants as stated; `Desk` scales them
//! so that every branch of every algorithm runs on graphs with n ≤ 64.

use serde::{Deserialize, Serialize};

use crate::params::{ceil_mul, Params, Rational};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum PresetName {
    Paper,
    Desk,
}

/// What to do when a certificate layer cannot route all of its source right
/// after a rebuild.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExcessPolicy {
    /// Report the leftover excess as an error.
    Fail,
    /// Disconnect each vertex that keeps excess through the regular edge
    /// removal path, add it to the pruned set, and recompute the layer.
    Prune,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Constants {
    pub name: PresetName,
    /// Dinitz round constant of batch pruning
    pub dinitz_c: u64,
    /// denominator of the sparse-cut while condition
    pub sparsity_denom: u64,
    /// volume constant for proposal sets
    pub c_vol: u64,
    /// deletion budget is ⌊φ·2^{k−1}/denom⌋; `None` means 10^7·log₂⁶ n
    pub budget_denom: Option<u64>,
    /// drain rate multiplier for the amortized pruner, times λ·log₂n/φ
    pub drain_amortized: u64,
    /// drain rate multiplier for the worst-case pruner, times λ·log₂n/φ
    pub drain_worstcase: u64,
    /// scale applied to the 8000/400-family certificate constants
    pub cap_scale: Rational,
    /// certificate Dinitz rounds are ⌈cert_rounds·log₂n/φ⌉
    pub cert_rounds: u64,
    pub c_recourse: u64,
    pub c_work: u64,
    pub c_exp: u64,
    /// background job estimate is job_c·σ·k³·λ·log₂n·2^{k−i}/φ², divided by job_c_den
    pub job_c: u64,
    pub job_c_den: u64,
    pub job_safety: u64,
    /// Source multiplier of a backtracker: (θ·mul_theta + 1)·d on S.
    pub backtrack_theta_mul: u64,
    pub check_balance: bool,
    pub excess_policy: ExcessPolicy,
}

impl Constants {
    pub fn paper() -> Self {
        Constants {
            name: PresetName::Paper,
            dinitz_c: 100_000_000,
            sparsity_denom: 1_000_000,
            c_vol: 6400,
            budget_denom: None,
            drain_amortized: 1_000_000,
            drain_worstcase: 10_000_000,
            cap_scale: Rational::from_integer(1),
            cert_rounds: 200,
            c_recourse: 1,
            c_work: 1,
            c_exp: 1,
            job_c: 1,
            job_c_den: 16,
            job_safety: 2,
            backtrack_theta_mul: 1,
            check_balance: true,
            excess_policy: ExcessPolicy::Fail,
        }
    }

    pub fn desk() -> Self {
        Constants {
            name: PresetName::Desk,
            dinitz_c: 4,
            sparsity_denom: 4,
            budget_denom: Some(1),
            drain_amortized: 4,
            drain_worstcase: 4,
            cap_scale: Rational::new(1, 1000),
            check_balance: false,
            excess_policy: ExcessPolicy::Prune,
            ..Constants::paper()
        }
    }

    pub fn named(name: PresetName) -> Self {
        match name {
            PresetName::Paper => Self::paper(),
            PresetName::Desk => Self::desk(),
        }
    }
}

/// Every derived limit used by the pruners for one graph and preset.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Limits {
    pub params: Params,
    pub consts: Constants,
}

impl Limits {
    pub fn new(params: Params, consts: Constants) -> Self {
        Limits { params, consts }
    }

    fn over_phi(&self, x: u128) -> u128 {
        let p = &self.params;
        (x * u128::from(p.phi_q())).div_ceil(u128::from(p.phi_p()))
    }

    fn sat(x: u128) -> u64 {
        x.min(u128::from(u64::MAX)) as u64
    }

    /// Dinitz rounds for batch pruning: C·λ·log₂n·log₂log₂n/φ.
    pub fn batch_rounds(&self) -> usize {
        let p = &self.params;
        let x = u128::from(self.consts.dinitz_c) * p.lambda as u128 * u128::from(p.log_n) * u128::from(p.loglog_n);
        Self::sat(self.over_phi(x)).min(u64::from(u32::MAX)) as usize
    }

    /// Dinitz rounds for certificate layers and backtrackers: c·log₂n/φ.
    pub fn cert_rounds(&self) -> usize {
        let p = &self.params;
        Self::sat(self.over_phi(u128::from(self.consts.cert_rounds) * u128::from(p.log_n))) as usize
    }

    pub fn deletion_budget(&self) -> u64 {
        let p = &self.params;
        let denom = match self.consts.budget_denom {
            Some(d) => d,
            None => 10_000_000u64.saturating_mul(p.log_n.pow(6)),
        };
        crate::batching::deletion_budget(p.phi, p.k, Rational::from_integer(denom))
    }

    fn drain(&self, mul: u64) -> u64 {
        let p = &self.params;
        Self::sat(self.over_phi(u128::from(mul) * p.lambda as u128 * u128::from(p.log_n)))
    }

    pub fn drain_amortized(&self) -> u64 {
        self.drain(self.consts.drain_amortized)
    }

    pub fn drain_worstcase(&self) -> u64 {
        self.drain(self.consts.drain_worstcase)
    }

    fn scaled_cap(&self, x: u128) -> u64 {
        ceil_mul(self.consts.cap_scale, Self::sat(self.over_phi(x))).max(1)
    }

    /// Certificate layer edge capacity 8000·k³·σ/φ (scaled by cap_scale).
    pub fn cert_cap(&self) -> u64 {
        let p = &self.params;
        self.scaled_cap(8000 * (p.k as u128).pow(3) * u128::from(p.sigma))
    }

    /// Removal calls per layer for one edge; equal to the layer capacity.
    pub fn removal_rounds(&self) -> u64 {
        self.cert_cap()
    }

    /// Maximum vertices one certificate edge removal may prune: 8000·k⁴·σ/φ.
    pub fn recourse_unit(&self) -> u64 {
        let p = &self.params;
        self.scaled_cap(8000 * (p.k as u128).pow(4) * u128::from(p.sigma))
    }

    /// Backtracker edge capacity 400·θ·σ/φ (scaled by cap_scale).
    pub fn backtrack_cap(&self, theta: u64) -> u64 {
        self.scaled_cap(400 * u128::from(theta) * u128::from(self.params.sigma))
    }

    fn over_phi_sq(&self, x: u128) -> u64 {
        let p = &self.params;
        let q = u128::from(p.phi_q());
        let pp = u128::from(p.phi_p());
        Self::sat((x * q * q).div_ceil(pp * pp))
    }

    /// Per-deletion recourse budget R = c_R·k⁴·λ·log₂n·σ/φ².
    pub fn recourse_budget(&self) -> u64 {
        let p = &self.params;
        let x = u128::from(self.consts.c_recourse)
            * (p.k as u128).pow(4)
            * p.lambda as u128
            * u128::from(p.log_n)
            * u128::from(p.sigma);
        self.over_phi_sq(x)
    }

    /// Per-deletion work budget W = c_W·σ·k⁴·λ·log₂n/φ².
    pub fn work_budget(&self) -> u64 {
        let p = &self.params;
        let x = u128::from(self.consts.c_work)
            * u128::from(p.sigma)
            * (p.k as u128).pow(4)
            * p.lambda as u128
            * u128::from(p.log_n);
        self.over_phi_sq(x)
    }

    /// Expansion floor φ/(c_exp·log₂⁴ m) for the remainder.
    pub fn expansion_floor(&self) -> Rational {
        let p = &self.params;
        let lm = crate::params::log_n(p.m);
        p.phi / Rational::from_integer(self.consts.c_exp * lm.pow(4))
    }

    /// Estimated total work of a background rebuild of level `i`.
    pub fn job_estimate(&self, i: usize) -> u64 {
        let p = &self.params;
        let shift = p.k.saturating_sub(i) as u32;
        let x = u128::from(self.consts.job_c)
            * u128::from(p.sigma)
            * (p.k as u128).pow(3)
            * p.lambda as u128
            * u128::from(p.log_n)
            * (1u128 << shift);
        self.over_phi_sq(x) / self.consts.job_c_den.max(1)
    }

    /// Per-deletion step budget of a level-`i` job: the estimate spread over
    /// its 2^{k−i−2}-deletion window, times the safety factor.
    pub fn job_step_budget(&self, i: usize) -> u64 {
        let window = 1u64 << (self.params.k - i - 2);
        self.job_estimate(i).div_ceil(window) * self.consts.job_safety
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q4() -> Limits {
        Limits::new(Params::new(16, 32, Rational::new(1, 4)).unwrap(), Constants::desk())
    }

    #[test]
    fn desk_limits_on_q4() {
        let l = q4();
        assert_eq!(l.deletion_budget(), 4);
        assert_eq!(l.drain_amortized(), 4 * 8 * 4 * 4);
        // 8000·125·8·4 / 1000
        assert_eq!(l.cert_cap(), 32_000);
        assert_eq!(l.batch_rounds(), 4 * 8 * 4 * 2 * 4);
        assert_eq!(l.recourse_budget(), 625 * 8 * 4 * 8 * 16);
    }

    #[test]
    fn paper_budget_is_vacuous_at_desk_scale() {
        let l = Limits::new(Params::new(16, 32, Rational::new(1, 4)).unwrap(), Constants::paper());
        assert_eq!(l.deletion_budget(), 0);
    }

    #[test]
    fn job_budget_covers_window() {
        let l = q4();
        for i in 1..=l.params.k - 2 {
            let window = 1u64 << (l.params.k - i - 2);
            assert!(l.job_step_budget(i) * window >= 2 * l.job_estimate(i));
        }
    }
}
