//! Closed-form bounds for Matching Pennies as the window grows, plus the
//! policy-parameter case at the same accuracy.

use num_bigint::BigUint;
use num_traits::{ToPrimitive, Zero};
use rfos::bounds::{self, total_bound, BoundCase, BoundInputs};

fn main() -> rfos::Result<()> {
    let base = BoundInputs::default();
    // λ = √2 makes the grid size an integer, so successive ratios are exact
    for lambda in [base.lambda, std::f64::consts::SQRT_2] {
        println!("λ = {lambda}");
        println!("{:>3} {:>14} {:>28} {:>14}", "h", "m", "sample complexity", "ratio");
        let mut prev = None;
        for h in 1..=5 {
            let inputs = BoundInputs {
                h,
                lambda,
                ..base.clone()
            };
            let m = bounds::m_case2(&inputs)?;
            let c = bounds::sample_complexity_case2(&inputs)?;
            let ratio = prev.as_ref().map_or(String::new(), |p: &BigUint| {
                if (&c % p).is_zero() {
                    format!("{}", &c / p)
                } else {
                    format!("{:.9}", c.to_f64().unwrap_or(f64::NAN) / p.to_f64().unwrap_or(f64::NAN))
                }
            });
            println!("{h:>3} {m:>14} {c:>28} {ratio:>14}");
            prev = Some(c);
        }
    }
    println!();
    println!("{}", total_bound(&base, BoundCase::II)?);
    println!();
    println!("{}", total_bound(&base, BoundCase::I)?);
    Ok(())
}
