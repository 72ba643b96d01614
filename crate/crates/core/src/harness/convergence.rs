use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Convergence rule for a reward curve.
///
/// The curve is smoothed with a trailing mean over
/// `max(min_window, window_fraction · len)` points (shorter at the start).
/// The plateau is the mean of the last `tail_fraction` of the raw series.
/// Convergence is the first index where the smoothed curve reaches
/// `rise · plateau` and never afterwards drops below `hold · plateau`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConvergenceOptions {
    pub rise: f64,
    pub hold: f64,
    pub min_window: usize,
    pub window_fraction: f64,
    pub tail_fraction: f64,
}

impl Default for ConvergenceOptions {
    fn default() -> Self {
        ConvergenceOptions {
            rise: 0.95,
            hold: 0.90,
            min_window: 100,
            window_fraction: 0.01,
            tail_fraction: 0.05,
        }
    }
}

impl ConvergenceOptions {
    pub fn validate(&self) -> Result<()> {
        if !(0.0 < self.hold && self.hold <= self.rise && self.rise <= 1.0) {
            return Err(invalid("convergence", "need 0 < hold ≤ rise ≤ 1"));
        }
        if self.min_window == 0 {
            return Err(invalid("min_window", "must be positive"));
        }
        for f in [self.window_fraction, self.tail_fraction] {
            if !(0.0..=1.0).contains(&f) {
                return Err(invalid("convergence", "fractions must lie in [0, 1]"));
            }
        }
        Ok(())
    }

    pub fn window(&self, len: usize) -> usize {
        self.min_window.max((self.window_fraction * len as f64).ceil() as usize)
    }
}

/// Trailing mean with the given window, shorter windows at the start.
pub fn trailing_mean(series: &[f64], window: usize) -> Vec<f64> {
    let window = window.max(1);
    let mut out = Vec::with_capacity(series.len());
    let mut sum = 0.0;
    for (i, &x) in series.iter().enumerate() {
        sum += x;
        if i >= window {
            sum -= series[i - window];
        }
        out.push(sum / (i + 1).min(window) as f64);
    }
    out
}

pub fn plateau(series: &[f64], tail_fraction: f64) -> f64 {
    if series.is_empty() {
        return 0.0;
    }
    let n = ((tail_fraction * series.len() as f64).ceil() as usize).clamp(1, series.len());
    series[series.len() - n..].iter().sum::<f64>() / n as f64
}

/// Index at which `series` converges, or `series.len()` if it never does.
pub fn detect_convergence(series: &[f64], opts: &ConvergenceOptions) -> usize {
    let n = series.len();
    if n == 0 {
        return 0;
    }
    let smooth = trailing_mean(series, opts.window(n));
    let top = plateau(series, opts.tail_fraction);
    if top <= 0.0 {
        return n;
    }
    // scan backwards for the last dip below the hold level
    let hold = opts.hold * top;
    let start = smooth.iter().rposition(|&v| v < hold).map_or(0, |i| i + 1);
    let rise = opts.rise * top;
    smooth[start..].iter().position(|&v| v >= rise).map_or(n, |i| start + i)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn opts() -> ConvergenceOptions {
        ConvergenceOptions {
            min_window: 1,
            window_fraction: 0.0,
            ..ConvergenceOptions::default()
        }
    }

    #[test]
    fn step_function_converges_at_the_step() {
        let mut s = vec![0.0; 300];
        s.extend(vec![1.0; 700]);
        assert_eq!(detect_convergence(&s, &opts()), 300);
    }

    #[test]
    fn smoothing_delays_detection() {
        let mut s = vec![0.0; 300];
        s.extend(vec![1.0; 700]);
        let o = ConvergenceOptions::default();
        // window of 100: the mean reaches 0.95 after 95 ones
        assert_eq!(detect_convergence(&s, &o), 394);
    }

    #[test]
    fn late_dip_moves_convergence() {
        let mut s = vec![1.0; 1000];
        s[600] = 0.0;
        assert_eq!(detect_convergence(&s, &opts()), 601);
    }

    #[test]
    fn flat_zero_never_converges() {
        assert_eq!(detect_convergence(&[0.0; 50], &opts()), 50);
        assert_eq!(detect_convergence(&[], &opts()), 0);
    }

    #[test]
    fn trailing_mean_partial_windows() {
        assert_eq!(trailing_mean(&[2.0, 4.0, 6.0, 8.0], 2), vec![2.0, 3.0, 5.0, 7.0]);
    }

    proptest! {
        #[test]
        fn index_in_range(s in proptest::collection::vec(0.0f64..1.0, 0..400)) {
            let i = detect_convergence(&s, &ConvergenceOptions::default());
            prop_assert!(i <= s.len());
        }

        #[test]
        fn constant_positive_converges_immediately(c in 0.01f64..1.0, n in 1usize..300) {
            prop_assert_eq!(detect_convergence(&vec![c; n], &opts()), 0);
        }
    }
}
