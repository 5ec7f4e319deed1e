//! Compensated summation for norms and energies.
//!
//! Lattice functions repeat the same term many times, and naive summation
//! then rounds with a consistent bias.

/// Neumaier's variant of Kahan summation.
pub trait FSum: Iterator<Item = f64> + Sized {
    fn fsum(self) -> f64 {
        let (mut s, mut c) = (0.0f64, 0.0f64);
        for x in self {
            let t = s + x;
            if s.abs() >= x.abs() {
                c += (s - t) + x;
            } else {
                c += (x - t) + s;
            }
            s = t;
        }
        s + c
    }
}

impl<I: Iterator<Item = f64>> FSum for I {}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_cancelled_terms() {
        let v = [1.0, 1e100, 1.0, -1e100];
        assert_eq!(v.iter().copied().fsum(), 2.0);
        let tenth = std::iter::repeat_n(0.1, 1_000_000).fsum();
        assert!((tenth - 100_000.0).abs() < 1e-9);
    }
}
