//! Leading-order PAC and discretisation bounds.
//!
//! Sample-complexity expressions are evaluated with exact rational
//! arithmetic: `ε`, `γ` are read as the decimals they print as (so `0.1` is
//! exactly `1/10`), powers are taken over big integers and the quotient is
//! rounded up. Hidden logarithmic factors and absolute constants are not
//! included, so every count here is a leading-order estimate, never an exact
//! sample count.

use std::fmt;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

pub const ESTIMATE_LABEL: &str = "leading-order estimate";

/// Parses the shortest decimal form of `x` into an exact rational.
pub fn decimal(x: f64) -> BigRational {
    let text = format!("{x}");
    let (neg, digits) = match text.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, text.as_str()),
    };
    let (int, frac) = digits.split_once('.').unwrap_or((digits, ""));
    let numer: BigInt = format!("{int}{frac}").parse().expect("f64 display is decimal");
    let denom = BigInt::from(10u32).pow(frac.len() as u32);
    let r = BigRational::new(numer, denom);
    if neg {
        -r
    } else {
        r
    }
}

fn ceil_to_uint(r: &BigRational) -> BigUint {
    r.ceil().to_integer().to_biguint().unwrap_or_else(BigUint::zero)
}

/// `2√radius_sq/λ + 1` as a rational; values within 1e-9 of an integer are
/// taken to be that integer.
fn grid_base(radius_sq: u64, lambda: f64) -> BigRational {
    let x = 2.0 * (radius_sq as f64).sqrt() / lambda + 1.0;
    let r = x.round();
    if (x - r).abs() <= 1e-9 * r.max(1.0) && r < u128::MAX as f64 {
        BigRational::from_integer(BigInt::from(r as u128))
    } else {
        decimal(x)
    }
}

fn rpow(base: &BigRational, exp: u64) -> BigRational {
    num_traits::pow(base.clone(), exp as usize)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundInputs {
    pub epsilon: f64,
    pub delta: f64,
    pub gamma: f64,
    /// Grid spacing.
    pub lambda: f64,
    pub n_players: u32,
    pub card_s: u64,
    pub card_a: u64,
    /// Trajectory window (Case II).
    pub h: u32,
    /// Reward Lipschitz constant.
    pub l_r: f64,
    /// Transition Lipschitz constant.
    pub l_t: f64,
    /// Point-to-set / density Lipschitz constant.
    pub l: f64,
    /// Discretisation constant of the value gap.
    pub k: f64,
    /// Discretisation constant of the transition gap.
    pub k_p: f64,
}

impl Default for BoundInputs {
    /// Matching Pennies, `h = 2`, `γ = 0.8`, unit Lipschitz constants.
    fn default() -> Self {
        BoundInputs {
            epsilon: 0.1,
            delta: 0.1,
            gamma: 0.8,
            lambda: 0.5,
            n_players: 2,
            card_s: 1,
            card_a: 2,
            h: 2,
            l_r: 1.0,
            l_t: 1.0,
            l: 1.0,
            k: 1.0,
            k_p: 1.0,
        }
    }
}

impl BoundInputs {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.gamma) {
            return Err(invalid("gamma", format!("{} outside [0, 1)", self.gamma)));
        }
        // ε(1−γ) ≤ 1, checked on the decimals so ε = 1/(1−γ) is not lost to rounding
        if !(self.epsilon > 0.0 && self.epsilon.is_finite())
            || decimal(self.epsilon) * self.one_minus_gamma() > BigRational::one()
        {
            return Err(invalid("epsilon", format!("{} outside (0, 1/(1−γ)]", self.epsilon)));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(invalid("delta", format!("{} outside (0, 1)", self.delta)));
        }
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return Err(invalid("lambda", "must be positive"));
        }
        if self.n_players == 0 || self.card_s == 0 || self.card_a == 0 {
            return Err(invalid("dimensions", "n, |S| and |A| must be positive"));
        }
        for (name, v) in [
            ("L_R", self.l_r),
            ("L_T", self.l_t),
            ("L", self.l),
            ("K", self.k),
            ("K_p", self.k_p),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(invalid(name, format!("{v} must be finite and nonnegative")));
            }
        }
        Ok(())
    }

    /// Extra check for the discretisation terms: `λ ∈ (0, L/2]`.
    pub fn validate_discretisation(&self) -> Result<()> {
        self.validate()?;
        if self.lambda > self.l / 2.0 {
            return Err(invalid(
                "lambda",
                format!("{} exceeds L/2 = {}", self.lambda, self.l / 2.0),
            ));
        }
        Ok(())
    }

    pub fn card_sa(&self) -> u64 {
        self.card_s * self.card_a
    }

    /// Covering radius of the shaper's Q-table net, `λ√(|S||A|)/2`.
    pub fn alpha(&self) -> f64 {
        self.lambda * (self.card_sa() as f64).sqrt() / 2.0
    }

    pub fn v_max(&self) -> f64 {
        1.0 / (1.0 - self.gamma)
    }

    fn one_minus_gamma(&self) -> BigRational {
        BigRational::one() - decimal(self.gamma)
    }

    /// `ε²(1−γ)⁴`
    fn m_denominator(&self) -> BigRational {
        rpow(&decimal(self.epsilon), 2) * rpow(&self.one_minus_gamma(), 4)
    }

    /// `ε³(1−γ)⁶`
    fn complexity_denominator(&self) -> BigRational {
        rpow(&decimal(self.epsilon), 3) * rpow(&self.one_minus_gamma(), 6)
    }

    fn state_net_base(&self) -> BigRational {
        grid_base(self.n_players as u64 * self.card_sa(), self.lambda)
    }

    fn action_net_base(&self) -> BigRational {
        grid_base(self.card_sa(), self.lambda)
    }

    fn window_count(&self, times: u64) -> BigRational {
        let exp = times * self.n_players as u64 * self.h as u64;
        BigRational::from_integer(BigInt::from(self.card_sa()).pow(exp as u32))
    }
}

/// `(2√(n|S||A|)/λ + 1)^{n|S||A|} / (ε²(1−γ)⁴)`, rounded up.
pub fn m_case1(inputs: &BoundInputs) -> Result<BigUint> {
    inputs.validate()?;
    let d = inputs.n_players as u64 * inputs.card_sa();
    Ok(ceil_to_uint(
        &(rpow(&inputs.state_net_base(), d) / inputs.m_denominator()),
    ))
}

/// `(|S||A|)^{nh} / (ε²(1−γ)⁴)`, rounded up.
pub fn m_case2(inputs: &BoundInputs) -> Result<BigUint> {
    inputs.validate()?;
    Ok(ceil_to_uint(&(inputs.window_count(1) / inputs.m_denominator())))
}

/// `(2√(n|S||A|)/λ+1)^{2n|S||A|} (2√(|S||A|)/λ+1)^{|S||A|} / (ε³(1−γ)⁶)`.
pub fn sample_complexity_case1(inputs: &BoundInputs) -> Result<BigUint> {
    inputs.validate()?;
    let d = inputs.n_players as u64 * inputs.card_sa();
    let num = rpow(&inputs.state_net_base(), 2 * d) * rpow(&inputs.action_net_base(), inputs.card_sa());
    Ok(ceil_to_uint(&(num / inputs.complexity_denominator())))
}

/// `(|S||A|)^{2nh} (2√(|S||A|)/λ+1)^{|S||A|} / (ε³(1−γ)⁶)`.
pub fn sample_complexity_case2(inputs: &BoundInputs) -> Result<BigUint> {
    inputs.validate()?;
    let num = inputs.window_count(2) * rpow(&inputs.action_net_base(), inputs.card_sa());
    Ok(ceil_to_uint(&(num / inputs.complexity_denominator())))
}

/// Generic R-MAX known-count requirement `(S + ln(SA/δ)) V_max² / (ε²(1−γ)²)`.
pub fn m_generic(n_states: u64, n_actions: u64, epsilon: f64, delta: f64, gamma: f64) -> Result<f64> {
    check_generic(n_states, n_actions, epsilon, delta, gamma)?;
    let v_max = 1.0 / (1.0 - gamma);
    let s = n_states as f64;
    Ok((s + (s * n_actions as f64 / delta).ln()) * v_max * v_max / (epsilon * epsilon * (1.0 - gamma).powi(2)))
}

/// Generic R-MAX sample complexity `S²A / (ε³(1−γ)⁶)`, rounded up.
pub fn sample_complexity_generic(
    n_states: u64,
    n_actions: u64,
    epsilon: f64,
    delta: f64,
    gamma: f64,
) -> Result<BigUint> {
    check_generic(n_states, n_actions, epsilon, delta, gamma)?;
    let num = BigRational::from_integer(BigInt::from(n_states).pow(2) * BigInt::from(n_actions));
    let den = rpow(&decimal(epsilon), 3) * rpow(&(BigRational::one() - decimal(gamma)), 6);
    Ok(ceil_to_uint(&(num / den)))
}

fn check_generic(n_states: u64, n_actions: u64, epsilon: f64, delta: f64, gamma: f64) -> Result<()> {
    BoundInputs {
        epsilon,
        delta,
        gamma,
        card_s: n_states.max(1),
        card_a: n_actions.max(1),
        ..BoundInputs::default()
    }
    .validate()?;
    if n_states == 0 || n_actions == 0 {
        return Err(invalid("dimensions", "S and A must be positive"));
    }
    Ok(())
}

/// `Kλ/(1−γ)²`.
pub fn discretisation_gap(k: f64, lambda: f64, gamma: f64) -> f64 {
    k * lambda / (1.0 - gamma).powi(2)
}

/// Simulation lemma: `ε_R/(1−γ) + γ ε_P V_max / (2(1−γ))`.
pub fn simulation_gap(eps_r: f64, eps_p: f64, gamma: f64, v_max: f64) -> f64 {
    eps_r / (1.0 - gamma) + gamma * eps_p * v_max / (2.0 * (1.0 - gamma))
}

/// Value gap of a discretised policy: `L_R α/(1−γ) + γ K_p α/(1−γ)²`.
pub fn discretised_value_gap(l_r: f64, k_p: f64, alpha: f64, gamma: f64) -> f64 {
    l_r * alpha / (1.0 - gamma) + gamma * k_p * alpha / (1.0 - gamma).powi(2)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BoundCase {
    #[serde(rename = "I")]
    I,
    #[serde(rename = "II")]
    II,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub label: String,
    pub case: BoundCase,
    pub inputs: BoundInputs,
    pub alpha: f64,
    #[serde(with = "biguint_string")]
    pub m_required: BigUint,
    #[serde(with = "biguint_string")]
    pub sample_complexity: BigUint,
    pub discretisation_gap: f64,
    /// `L_R α/(1−γ) + γ K_p α/(1−γ)²`, as in the Case I statement.
    pub simulation_gap: f64,
    /// `L_R α/(1−γ) + γ K_p α/(2(1−γ)²)`, as in the Case II statement.
    pub simulation_gap_halved: f64,
    /// `ε` + discretisation gap + full simulation gap.
    pub total_suboptimality_case1: f64,
    /// `ε` + discretisation gap + halved simulation gap.
    pub total_suboptimality_case2: f64,
}

mod biguint_string {
    use num_bigint::BigUint;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &BigUint, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&v.to_string())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BigUint, D::Error> {
        let text = String::deserialize(d)?;
        text.parse().map_err(serde::de::Error::custom)
    }
}

/// Assembles every term of the final guarantee for one case.
pub fn total_bound(inputs: &BoundInputs, case: BoundCase) -> Result<BoundReport> {
    inputs.validate_discretisation()?;
    let (m_required, sample_complexity) = match case {
        BoundCase::I => (m_case1(inputs)?, sample_complexity_case1(inputs)?),
        BoundCase::II => (m_case2(inputs)?, sample_complexity_case2(inputs)?),
    };
    let alpha = inputs.alpha();
    let g = inputs.gamma;
    let disc = discretisation_gap(inputs.k, inputs.lambda, g);
    let sim = discretised_value_gap(inputs.l_r, inputs.k_p, alpha, g);
    let sim_halved = inputs.l_r * alpha / (1.0 - g) + g * inputs.k_p * alpha / (2.0 * (1.0 - g).powi(2));
    Ok(BoundReport {
        label: ESTIMATE_LABEL.to_string(),
        case,
        inputs: inputs.clone(),
        alpha,
        m_required,
        sample_complexity,
        discretisation_gap: disc,
        simulation_gap: sim,
        simulation_gap_halved: sim_halved,
        total_suboptimality_case1: inputs.epsilon + disc + sim,
        total_suboptimality_case2: inputs.epsilon + disc + sim_halved,
    })
}

/// Scientific shorthand for big counts, e.g. `1.18e6`.
fn short(v: &BigUint) -> String {
    let digits = v.to_string();
    if digits.len() <= 6 {
        return digits;
    }
    let lead = v
        .to_f64()
        .map(|f| format!("{f:.3e}"))
        .unwrap_or_else(|| format!("{}.{}e{}", &digits[..1], &digits[1..4], digits.len() - 1));
    lead
}

impl fmt::Display for BoundReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let i = &self.inputs;
        let case = match self.case {
            BoundCase::I => "I",
            BoundCase::II => "II",
        };
        writeln!(f, "R-FOS bound report (Case {case}, {})", self.label)?;
        let rows: Vec<(&str, String)> = vec![
            ("epsilon", i.epsilon.to_string()),
            ("delta", i.delta.to_string()),
            ("gamma", i.gamma.to_string()),
            ("lambda", i.lambda.to_string()),
            ("alpha", format!("{:.6}", self.alpha)),
            ("n players", i.n_players.to_string()),
            ("|S|", i.card_s.to_string()),
            ("|A|", i.card_a.to_string()),
            ("h", i.h.to_string()),
            ("L_R / L_T / L", format!("{} / {} / {}", i.l_r, i.l_t, i.l)),
            ("K / K_p", format!("{} / {}", i.k, i.k_p)),
            (
                "m required",
                format!("{} ({})", self.m_required, short(&self.m_required)),
            ),
            (
                "sample complexity",
                format!("{} ({})", self.sample_complexity, short(&self.sample_complexity)),
            ),
            ("discretisation gap", format!("{:.6}", self.discretisation_gap)),
            ("simulation gap", format!("{:.6}", self.simulation_gap)),
            ("simulation gap (halved)", format!("{:.6}", self.simulation_gap_halved)),
            ("total (Case I form)", format!("{:.6}", self.total_suboptimality_case1)),
            ("total (Case II form)", format!("{:.6}", self.total_suboptimality_case2)),
        ];
        let width = rows.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
        for (k, v) in rows {
            writeln!(f, "  {k:<width$}  {v}")?;
        }
        Ok(())
    }
}

/// `log_16` of a big count, for scaling tables.
pub fn log16(v: &BigUint) -> f64 {
    if v.is_zero() {
        return f64::NEG_INFINITY;
    }
    let bits = v.bits();
    // keep 53 significant bits to avoid f64 overflow on huge values
    let shift = bits.saturating_sub(53);
    let top = (v >> shift).to_f64().unwrap_or(f64::MAX);
    (top.log2() + shift as f64) / 4.0
}
