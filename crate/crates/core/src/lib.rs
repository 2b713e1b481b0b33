//! Modeling, simulation and identification of rank-deficient stationary
//! vector processes through a feedback representation whose feedback
//! channel is deterministic.

pub mod error;
pub mod estimate;
pub mod factorize;
pub mod harness;
pub mod poly;
pub mod ratfun;
pub mod roots;
pub mod simulate;

pub use error::{Error, Result};
pub use poly::Poly;
pub use ratfun::{angle_grid, RatTF};
pub use simulate::TimeSeries;

/// Shortest round-trip decimal form of `x`, in positional notation for
/// moderate magnitudes and scientific notation otherwise.
pub fn fmt_f64(x: f64) -> String {
    let a = x.abs();
    if x == 0.0 || (1e-5..1e16).contains(&a) || !x.is_finite() {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

#[cfg(test)]
mod tests {
    use super::fmt_f64;

    #[test]
    fn number_format_round_trips() {
        for x in [0.1, -2.5, 1e-300, 123456.789, 1.0 / 3.0, 6.02e23, -0.0] {
            assert_eq!(fmt_f64(x).parse::<f64>().unwrap().to_bits(), x.to_bits());
        }
        assert_eq!(fmt_f64(1e-30), "1e-30");
        assert_eq!(fmt_f64(0.25), "0.25");
    }
}
