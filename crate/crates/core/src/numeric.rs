//! Exact floating-point accumulation.
//!
//! Neighborhood sums are kept as non-overlapping expansions (Shewchuk's
//! partials) so that the rounded total does not depend on summation order.
//! That makes per-root averages bit-identical across worker counts and
//! member orders, and lets the scan average equal the average recomputed
//! from the selected members.

use std::cmp::Ordering;

#[derive(Debug, Clone, Default)]
pub struct ExactSum {
    partials: Vec<f64>,
    // inf/nan inputs bypass the expansion
    special: f64,
}

impl ExactSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn clear(&mut self) {
        self.partials.clear();
        self.special = 0.0;
    }

    pub fn add(&mut self, x: f64) {
        if !x.is_finite() {
            self.special += x;
            return;
        }
        let mut x = x;
        let mut kept = 0;
        for j in 0..self.partials.len() {
            let mut y = self.partials[j];
            if x.abs() < y.abs() {
                std::mem::swap(&mut x, &mut y);
            }
            let hi = x + y;
            let lo = y - (hi - x);
            if lo != 0.0 {
                self.partials[kept] = lo;
                kept += 1;
            }
            x = hi;
        }
        self.partials.truncate(kept);
        self.partials.push(x);
    }

    /// Correctly rounded (ties-to-even) value of the exact sum.
    pub fn value(&self) -> f64 {
        if self.special != 0.0 || self.special.is_nan() {
            return self.special;
        }
        let p = &self.partials;
        let mut n = p.len();
        if n == 0 {
            return 0.0;
        }
        n -= 1;
        let mut hi = p[n];
        let mut lo = 0.0;
        while n > 0 {
            let x = hi;
            n -= 1;
            let y = p[n];
            hi = x + y;
            let yr = hi - x;
            lo = y - yr;
            if lo != 0.0 {
                break;
            }
        }
        if n > 0 && ((lo < 0.0 && p[n - 1] < 0.0) || (lo > 0.0 && p[n - 1] > 0.0)) {
            let y = lo * 2.0;
            let x = hi + y;
            let yr = x - hi;
            if y == yr {
                hi = x;
            }
        }
        hi
    }

    /// Correctly rounded value of `sum / count`.
    ///
    /// The quotient is first approximated from the rounded sum, then moved to
    /// whichever neighbor brackets the exact rational `sum / count`, deciding
    /// midpoints by the sign of an exact residual expansion.
    pub fn mean(&self, count: usize) -> f64 {
        assert!(count > 0, "mean of zero terms");
        let total = self.value();
        let kf = count as f64;
        if !total.is_finite() || count == 1 {
            return total / kf;
        }
        let mut q = total / kf;
        // The first guess is within two ulps; a few steps always suffice.
        for _ in 0..8 {
            let up = q.next_up();
            let half_up = (up - q) * 0.5;
            let c_up = self.cmp_scaled(kf, q, half_up);
            if c_up == Ordering::Greater || (c_up == Ordering::Equal && is_odd(q)) {
                q = up;
                continue;
            }
            let down = q.next_down();
            let half_down = (q - down) * 0.5;
            let c_down = self.cmp_scaled(kf, q, -half_down);
            if c_down == Ordering::Less || (c_down == Ordering::Equal && is_odd(q)) {
                q = down;
                continue;
            }
            break;
        }
        q
    }

    /// Compares the exact sum against `k * (q + offset)`, evaluated exactly.
    fn cmp_scaled(&self, k: f64, q: f64, offset: f64) -> Ordering {
        let mut residual = self.clone();
        let p = k * q;
        let e = k.mul_add(q, -p);
        residual.add(-p);
        residual.add(-e);
        residual.add(-(k * offset));
        let v = residual.value();
        v.partial_cmp(&0.0).unwrap_or(Ordering::Equal)
    }
}

impl Extend<f64> for ExactSum {
    fn extend<I: IntoIterator<Item = f64>>(&mut self, iter: I) {
        for x in iter {
            self.add(x);
        }
    }
}

impl FromIterator<f64> for ExactSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut s = ExactSum::new();
        s.extend(iter);
        s
    }
}

const LIMBS: usize = 34;
// Inputs at or above 2^(BIG_EXP - 1023) bypass the limbs so that limb
// contents stay far below the f64 overflow threshold.
const BIG_EXP: u64 = 1950;
const NORMALIZE_EVERY: u32 = 1000;

/// Fixed-point accumulator over the finite `f64` range.
///
/// Every finite double is an integer multiple of `2^-1075`; its mantissa is
/// shifted into one of a fixed set of signed 128-bit limbs. Adding is a few
/// integer operations, much cheaper than [`ExactSum::add`] on long runs, and
/// the result converts losslessly into an [`ExactSum`].
#[derive(Debug, Clone)]
pub struct LongAccumulator {
    limbs: [i128; LIMBS],
    pending: u32,
    big: ExactSum,
}

impl Default for LongAccumulator {
    fn default() -> Self {
        Self {
            limbs: [0; LIMBS],
            pending: 0,
            big: ExactSum::new(),
        }
    }
}

impl LongAccumulator {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn clear(&mut self) {
        self.limbs = [0; LIMBS];
        self.pending = 0;
        self.big.clear();
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        let bits = x.to_bits();
        let e = (bits >> 52) & 0x7ff;
        if e >= BIG_EXP {
            self.big.add(x);
            return;
        }
        let frac = bits & ((1u64 << 52) - 1);
        // subnormals share the exponent of the smallest normal
        let (m, p) = if e == 0 { (frac, 1) } else { (frac | (1u64 << 52), e) };
        // each term is below 2^117, so 1000 of them cannot overflow a limb
        let v = (m as i128) << (p & 63);
        let slot = &mut self.limbs[(p >> 6) as usize];
        if bits >> 63 == 1 {
            *slot -= v;
        } else {
            *slot += v;
        }
        self.pending += 1;
        if self.pending == NORMALIZE_EVERY {
            self.normalize();
        }
    }

    /// Moves carries upward so every limb but the last lies in `[0, 2^64)`.
    fn normalize(&mut self) {
        for i in 0..LIMBS - 1 {
            let carry = self.limbs[i] >> 64;
            self.limbs[i] -= carry << 64;
            self.limbs[i + 1] += carry;
        }
        self.pending = 0;
    }

    /// The exact total as an expansion.
    pub fn to_exact(&self) -> ExactSum {
        let mut acc = self.clone();
        acc.normalize();
        // After normalizing, the top limb carries the sign of the whole
        // total; negate so that every limb is a non-negative digit.
        let neg = acc.limbs[LIMBS - 1] < 0;
        if neg {
            acc.limbs.iter_mut().for_each(|l| *l = -*l);
            acc.normalize();
        }
        let mut out = acc.big;
        for (i, &limb) in acc.limbs.iter().enumerate() {
            if limb == 0 {
                continue;
            }
            let mut mag = limb as u128;
            let mut pos = 64 * i as i32;
            while mag != 0 {
                let chunk = (mag & 0xffff_ffff) as f64;
                if chunk != 0.0 {
                    // chunk * 2^(pos - 1075), split so no step leaves the normal range
                    let v = chunk * pow2(pos - 1075 + 64) * pow2(-64);
                    out.add(if neg { -v } else { v });
                }
                mag >>= 32;
                pos += 32;
            }
        }
        out
    }

    pub fn value(&self) -> f64 {
        self.to_exact().value()
    }

    pub fn mean(&self, count: usize) -> f64 {
        self.to_exact().mean(count)
    }
}

/// `2^e` for `-1022 <= e <= 1023`.
fn pow2(e: i32) -> f64 {
    debug_assert!((-1022..=1023).contains(&e), "{e}");
    f64::from_bits(((e + 1023) as u64) << 52)
}

fn is_odd(x: f64) -> bool {
    x.to_bits() & 1 == 1
}

/// Exactly rounded sum of a slice.
pub fn exact_sum(values: &[f64]) -> f64 {
    values.iter().copied().collect::<ExactSum>().value()
}

/// Exactly rounded arithmetic mean of a slice.
pub fn exact_mean(values: &[f64]) -> f64 {
    values.iter().copied().collect::<ExactSum>().mean(values.len())
}

/// Unbiased sample mean and variance. `None` for fewer than two values.
pub fn mean_and_variance(values: &[f64]) -> Option<(f64, f64)> {
    if values.len() < 2 {
        return None;
    }
    let mean = exact_mean(values);
    let ss: ExactSum = values.iter().map(|x| (x - mean) * (x - mean)).collect();
    Some((mean, ss.value() / (values.len() - 1) as f64))
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_bigint::BigInt;
    use num_rational::BigRational;
    use proptest::prelude::*;

    fn to_rational(x: f64) -> BigRational {
        BigRational::from_float(x).unwrap()
    }

    /// Round a rational to the nearest f64 (ties to even) by bracketing.
    fn round_rational(r: &BigRational) -> f64 {
        let approx = {
            let n: f64 = r.numer().to_string().parse().unwrap_or(0.0);
            let d: f64 = r.denom().to_string().parse().unwrap_or(1.0);
            n / d
        };
        let mut q = if approx.is_finite() { approx } else { 0.0 };
        for _ in 0..4096 {
            let up = q.next_up();
            let down = q.next_down();
            let mid_up = (to_rational(q) + to_rational(up)) / BigInt::from(2);
            let mid_down = (to_rational(q) + to_rational(down)) / BigInt::from(2);
            if *r > mid_up || (*r == mid_up && is_odd(q)) {
                q = up;
            } else if *r < mid_down || (*r == mid_down && is_odd(q)) {
                q = down;
            } else {
                return q;
            }
        }
        panic!("rational rounding did not converge");
    }

    #[test]
    fn cancellation_is_exact() {
        let mut s = ExactSum::new();
        s.extend([1e100, 1.0, -1e100, 1e-100]);
        assert_eq!(s.value(), 1.0 + 1e-100);
        assert_eq!(exact_sum(&[0.1; 10]), 1.0);
    }

    #[test]
    fn mean_of_repeated_value_is_that_value() {
        for &a in &[0.1, 2.0, 1.0 / 3.0, -7.25, 1e-300, 123456.789] {
            for k in [1usize, 3, 7, 10, 500, 1000] {
                let s: ExactSum = std::iter::repeat(a).take(k).collect();
                assert_eq!(s.mean(k), a, "a={a} k={k}");
            }
        }
        // naive (0.1*3)/3 misses by an ulp
        assert_ne!((0.1f64 * 3.0) / 3.0, 0.1);
    }

    #[test]
    fn empty_sum_is_zero() {
        assert_eq!(ExactSum::new().value(), 0.0);
    }

    #[test]
    fn variance_of_small_sample() {
        let (m, v) = mean_and_variance(&[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(m, 2.0);
        assert_eq!(v, 1.0);
        assert!(mean_and_variance(&[1.0]).is_none());
    }

    #[test]
    fn long_accumulator_edge_values() {
        let cases: Vec<Vec<f64>> = vec![
            vec![],
            vec![f64::MIN_POSITIVE / 4.0, f64::MIN_POSITIVE / 4.0],
            vec![5e-324, -5e-324, 5e-324],
            vec![f64::MAX, -f64::MAX, 1.0],
            vec![1e300, 1e-300, -1e300],
            vec![0.1; 2500],
            vec![-0.0, 0.0],
            vec![1e200, 1e200, -1.5e200],
        ];
        for xs in cases {
            let mut acc = LongAccumulator::new();
            xs.iter().for_each(|&x| acc.add(x));
            assert_eq!(acc.value().to_bits(), exact_sum(&xs).to_bits(), "{:?}", &xs[..xs.len().min(4)]);
            if !xs.is_empty() {
                assert_eq!(acc.mean(xs.len()), exact_mean(&xs));
            }
        }
    }

    proptest! {
        #[test]
        fn sum_matches_rational_oracle(xs in prop::collection::vec(-1e6f64..1e6, 1..40)) {
            let exact: BigRational = xs.iter().map(|&x| to_rational(x)).sum();
            prop_assert_eq!(exact_sum(&xs), round_rational(&exact));
        }

        #[test]
        fn mean_matches_rational_oracle(xs in prop::collection::vec(-1e3f64..1e3, 1..40)) {
            let exact: BigRational = xs.iter().map(|&x| to_rational(x)).sum();
            let q = exact / BigInt::from(xs.len());
            prop_assert_eq!(exact_mean(&xs), round_rational(&q));
        }

        #[test]
        fn long_accumulator_matches_expansion(
            xs in prop::collection::vec(
                prop_oneof![
                    -1e6f64..1e6,
                    any::<f64>().prop_filter("finite", |x| x.is_finite()),
                    (-1e-300f64..1e-300),
                ],
                0..1300,
            )
        ) {
            let mut acc = LongAccumulator::new();
            xs.iter().for_each(|&x| acc.add(x));
            let reference: ExactSum = xs.iter().copied().collect();
            prop_assert_eq!(acc.value().to_bits(), reference.value().to_bits());
            if !xs.is_empty() {
                prop_assert_eq!(acc.mean(xs.len()).to_bits(), reference.mean(xs.len()).to_bits());
            }
        }

        #[test]
        fn sum_is_order_independent(mut xs in prop::collection::vec(-1e9f64..1e9, 1..60), seed in any::<u64>()) {
            let before = exact_sum(&xs);
            let n = xs.len();
            let mut state = seed;
            for i in (1..n).rev() {
                state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                xs.swap(i, (state >> 33) as usize % (i + 1));
            }
            prop_assert_eq!(before, exact_sum(&xs));
        }
    }
}
