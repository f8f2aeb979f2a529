//! Float shims and deterministic accumulation helpers.
//!
//! On `no_std` builds the elementary functions come from `libm`; with `std`
//! they come from the standard library so results match what callers get
//! from plain `f64` methods. All summations that feed reported numbers go
//! through [`Kahan`] or [`LogSum`] so they are reproducible bit for bit
//! independent of chunking, as long as the merge order is fixed.

#![allow(dead_code)]

#[cfg(feature = "std")]
mod fx {
    pub fn ln(x: f64) -> f64 {
        x.ln()
    }
    pub fn exp(x: f64) -> f64 {
        x.exp()
    }
    pub fn sqrt(x: f64) -> f64 {
        x.sqrt()
    }
    pub fn powf(x: f64, y: f64) -> f64 {
        x.powf(y)
    }
    pub fn atan2(y: f64, x: f64) -> f64 {
        y.atan2(x)
    }
    pub fn hypot(x: f64, y: f64) -> f64 {
        x.hypot(y)
    }
    pub fn floor(x: f64) -> f64 {
        x.floor()
    }
    pub fn cos(x: f64) -> f64 {
        x.cos()
    }
    pub fn sin(x: f64) -> f64 {
        x.sin()
    }
}

#[cfg(not(feature = "std"))]
mod fx {
    pub fn ln(x: f64) -> f64 {
        libm::log(x)
    }
    pub fn exp(x: f64) -> f64 {
        libm::exp(x)
    }
    pub fn sqrt(x: f64) -> f64 {
        libm::sqrt(x)
    }
    pub fn powf(x: f64, y: f64) -> f64 {
        libm::pow(x, y)
    }
    pub fn atan2(y: f64, x: f64) -> f64 {
        libm::atan2(y, x)
    }
    pub fn hypot(x: f64, y: f64) -> f64 {
        libm::hypot(x, y)
    }
    pub fn floor(x: f64) -> f64 {
        libm::floor(x)
    }
    pub fn cos(x: f64) -> f64 {
        libm::cos(x)
    }
    pub fn sin(x: f64) -> f64 {
        libm::sin(x)
    }
}

pub use fx::*;

/// Compensated (Kahan) accumulator.
#[derive(Debug, Clone, Copy, Default)]
pub struct Kahan {
    sum: f64,
    comp: f64,
}

impl Kahan {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: f64) {
        let y = x - self.comp;
        let t = self.sum + y;
        self.comp = (t - self.sum) - y;
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum
    }
}

/// Streaming log-sum-exp: accumulates `log(sum exp(term))` without ever
/// materializing the raw exponentials. The running maximum shifts the
/// accumulator on the fly, so terms spanning hundreds of orders of
/// magnitude are safe.
#[derive(Debug, Clone, Copy)]
pub struct LogSum {
    max: f64,
    sum: Kahan,
}

impl Default for LogSum {
    fn default() -> Self {
        Self {
            max: f64::NEG_INFINITY,
            sum: Kahan::new(),
        }
    }
}

impl LogSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_log(&mut self, log_term: f64) {
        if log_term == f64::NEG_INFINITY {
            return;
        }
        if log_term > self.max {
            if self.max != f64::NEG_INFINITY {
                let rescale = exp(self.max - log_term);
                let mut s = Kahan::new();
                s.add(self.sum.value() * rescale);
                self.sum = s;
            }
            self.max = log_term;
        }
        self.sum.add(exp(log_term - self.max));
    }

    /// Merge another accumulator into this one. Used for fixed-order
    /// combination of per-subtree partial sums.
    pub fn merge(&mut self, other: &LogSum) {
        if other.max == f64::NEG_INFINITY {
            return;
        }
        self.add_log(other.value());
    }

    pub fn value(&self) -> f64 {
        if self.max == f64::NEG_INFINITY {
            f64::NEG_INFINITY
        } else {
            self.max + ln(self.sum.value())
        }
    }
}

/// Find the root of a continuous monotone function on `[lo, hi]` by
/// bisection. `increasing` states the monotonicity direction; the caller
/// guarantees a sign change. Returns the midpoint of the final bracket.
pub fn bisect<F: FnMut(f64) -> f64>(mut f: F, mut lo: f64, mut hi: f64, tol: f64, increasing: bool) -> f64 {
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        let v = f(mid);
        let below = if increasing { v < 0.0 } else { v > 0.0 };
        if below {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Map an ordered list of inputs, producing outputs in input order.
///
/// With the `parallel` feature the map runs on the ambient rayon pool;
/// collection order is still the input order, so any subsequent fold is
/// bit-identical to the serial build regardless of worker count.
#[cfg(feature = "parallel")]
pub fn ordered_map<T, U, F>(items: alloc::vec::Vec<T>, f: F) -> alloc::vec::Vec<U>
where
    T: Send,
    U: Send,
    F: Fn(T) -> U + Sync + Send,
{
    use rayon::prelude::*;
    items.into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub fn ordered_map<T, U, F>(items: alloc::vec::Vec<T>, f: F) -> alloc::vec::Vec<U>
where
    F: Fn(T) -> U,
{
    items.into_iter().map(f).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kahan_recovers_small_terms() {
        let mut k = Kahan::new();
        k.add(1.0);
        for _ in 0..1_000_000 {
            k.add(1e-16);
        }
        assert!((k.value() - (1.0 + 1e-10)).abs() < 1e-12);
    }

    #[test]
    fn logsum_matches_direct_sum() {
        let terms = [0.3_f64, 1.7, 0.004, 2.2, 0.11];
        let mut ls = LogSum::new();
        for t in terms {
            ls.add_log(t.ln());
        }
        let direct: f64 = terms.iter().sum();
        assert!((ls.value() - direct.ln()).abs() < 1e-14);
    }

    #[test]
    fn logsum_survives_extreme_range() {
        let mut ls = LogSum::new();
        ls.add_log(-900.0);
        ls.add_log(-900.0);
        assert!((ls.value() - (-900.0 + core::f64::consts::LN_2)).abs() < 1e-12);
    }

    #[test]
    fn bisect_finds_sqrt2() {
        let r = bisect(|x| x * x - 2.0, 0.0, 2.0, 1e-12, true);
        assert!((r - core::f64::consts::SQRT_2).abs() < 1e-11);
    }
}
