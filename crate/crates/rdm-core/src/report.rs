//! JSON encoding of exact rationals and solver statistics.
//!
//! Golden files compare byte for byte, so nothing here may go through
//! floating point. A rational becomes `{"num", "den", "decimal"}`;
//! numerator and denominator are JSON numbers while they fit exactly
//! into a double's integer range and decimal strings beyond that.

use lpcore::{rational_decimal, SolveStats};
use num_bigint::BigInt;
use serde_json::{json, Value};

use crate::Rat;

/// Largest integer a JSON number can carry without rounding (2^53).
const MAX_EXACT: i64 = 1 << 53;

fn bigint_json(n: &BigInt) -> Value {
    match i64::try_from(n) {
        Ok(v) if v.abs() < MAX_EXACT => json!(v),
        _ => json!(n.to_string()),
    }
}

pub fn rat_json(r: &Rat) -> Value {
    json!({
        "num": bigint_json(r.numer()),
        "den": bigint_json(r.denom()),
        "decimal": rational_decimal(r),
    })
}

pub fn opt_rat_json(r: &Option<Rat>) -> Value {
    match r {
        Some(v) => rat_json(v),
        None => Value::Null,
    }
}

pub fn stats_json(s: &SolveStats) -> Value {
    json!({
        "simplex_iterations": s.simplex_iterations,
        "branch_nodes": s.branch_nodes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat;
    use num_bigint::BigInt;
    use num_rational::BigRational;

    #[test]
    fn small_rationals_use_numbers() {
        let v = rat_json(&(rat(3) / rat(2)));
        assert_eq!(v["num"], json!(3));
        assert_eq!(v["den"], json!(2));
        assert_eq!(v["decimal"], json!("1.5"));
    }

    #[test]
    fn negative_values_round_trip() {
        let v = rat_json(&(rat(-7) / rat(4)));
        assert_eq!(v["num"], json!(-7));
        assert_eq!(v["den"], json!(4));
        assert_eq!(v["decimal"], json!("-1.75"));
    }

    #[test]
    fn huge_components_become_strings() {
        let big = BigInt::from(1i64 << 53) * BigInt::from(3);
        let r = BigRational::new(big.clone(), BigInt::from(1));
        let v = rat_json(&r);
        assert_eq!(v["num"], json!(big.to_string()));
        assert_eq!(v["den"], json!(1));
    }

    #[test]
    fn boundary_stays_exact() {
        // 2^53 itself is representable but the next integer is not;
        // keep the cutoff strictly below it.
        let r = BigRational::from(BigInt::from(1i64 << 53));
        assert_eq!(rat_json(&r)["num"], json!((1i64 << 53).to_string()));
        let r = BigRational::from(BigInt::from((1i64 << 53) - 1));
        assert_eq!(rat_json(&r)["num"], json!((1i64 << 53) - 1));
    }

    #[test]
    fn missing_bounds_serialize_as_null() {
        assert_eq!(opt_rat_json(&None), Value::Null);
        assert_eq!(opt_rat_json(&Some(rat(2)))["num"], json!(2));
    }

    #[test]
    fn stats_carry_both_counters() {
        let s = SolveStats {
            simplex_iterations: 12,
            branch_nodes: 3,
        };
        let v = stats_json(&s);
        assert_eq!(v["simplex_iterations"], json!(12));
        assert_eq!(v["branch_nodes"], json!(3));
    }
}
