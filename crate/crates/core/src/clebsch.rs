//! Clebsch–Gordan coefficients from the Racah formula.
//!
//! Angular momenta are passed doubled (`2j`, `2m`) so half-integers stay exact.
//! The alternating Racah sum is evaluated in exact integer arithmetic, which
//! removes the cancellation that ruins floating-point sums at large `j`; the
//! factorial prefactors are accumulated as compensated log-factorials.

use num_bigint::BigInt;
use num_traits::{Signed, ToPrimitive, Zero};

/// `ln n!` for `n < len`, summed with Kahan compensation.
#[derive(Debug, Clone)]
pub struct LogFactorials {
    table: Vec<f64>,
}

impl LogFactorials {
    pub fn new(max_n: usize) -> Self {
        let mut table = Vec::with_capacity(max_n + 1);
        table.push(0.0);
        let (mut sum, mut comp) = (0.0f64, 0.0f64);
        for k in 1..=max_n {
            let y = (k as f64).ln() - comp;
            let t = sum + y;
            comp = (t - sum) - y;
            sum = t;
            table.push(sum);
        }
        Self { table }
    }

    pub fn ln_factorial(&self, n: i64) -> f64 {
        self.table[usize::try_from(n).expect("negative factorial argument")]
    }

    pub fn max_n(&self) -> usize {
        self.table.len() - 1
    }
}

fn ln_abs_big(x: &BigInt) -> f64 {
    let bits = x.bits();
    if bits <= 1000 {
        x.abs().to_f64().unwrap_or(f64::INFINITY).ln()
    } else {
        let shift = bits - 64;
        (x.abs() >> shift).to_f64().unwrap().ln() + shift as f64 * std::f64::consts::LN_2
    }
}

/// Computes coefficients with a shared log-factorial table.
#[derive(Debug, Clone)]
pub struct ClebschGordan {
    lf: LogFactorials,
}

impl ClebschGordan {
    /// Table large enough for all couplings with `2j ≤ max_two_j`.
    pub fn new(max_two_j: u32) -> Self {
        Self { lf: LogFactorials::new(2 * max_two_j as usize + 2) }
    }

    /// `⟨j1 m1; j2 m2 | J M⟩` with all arguments doubled.
    pub fn coefficient(&self, two_j1: i64, two_m1: i64, two_j2: i64, two_m2: i64, two_j: i64, two_m: i64) -> f64 {
        if two_m1 + two_m2 != two_m
            || two_j1 < 0
            || two_j2 < 0
            || two_j < 0
            || two_m1.abs() > two_j1
            || two_m2.abs() > two_j2
            || two_m.abs() > two_j
            || (two_j1 + two_m1) % 2 != 0
            || (two_j2 + two_m2) % 2 != 0
            || (two_j + two_m) % 2 != 0
            || two_j > two_j1 + two_j2
            || two_j < (two_j1 - two_j2).abs()
            || (two_j1 + two_j2 + two_j) % 2 != 0
        {
            return 0.0;
        }
        let need = ((two_j1 + two_j2 + two_j) / 2 + 1) as usize;
        assert!(need <= self.lf.max_n(), "log-factorial table too small for 2j = {two_j}");

        let h = |x: i64| x / 2;
        let a = h(two_j1 + two_j2 - two_j);
        let b = h(two_j1 - two_m1);
        let c = h(two_j2 + two_m2);
        let d = h(two_j - two_j2 + two_m1);
        let e = h(two_j - two_j1 - two_m2);
        let t_min = 0.max(-d).max(-e);
        let t_max = a.min(b).min(c);
        if t_min > t_max {
            return 0.0;
        }

        // Horner evaluation of Σ_t term_t / term_{t_min} with
        // term_{t+1}/term_t = -(a-t)(b-t)(c-t) / ((t+1)(d+t+1)(e+t+1))
        let mut num = BigInt::from(1);
        let mut den = BigInt::from(1);
        for t in (t_min..t_max).rev() {
            let p = (a - t) * (b - t) * (c - t);
            let q = (t + 1) * (d + t + 1) * (e + t + 1);
            num = &den * q - num * p;
            den *= q;
        }
        if num.is_zero() {
            return 0.0;
        }
        let negative = num.is_negative() ^ (t_min % 2 != 0);

        let lf = |n: i64| self.lf.ln_factorial(n);
        let ln_prefactor = 0.5
            * (((two_j + 1) as f64).ln()
                + lf(h(two_j + two_j1 - two_j2))
                + lf(h(two_j - two_j1 + two_j2))
                + lf(a)
                - lf(h(two_j1 + two_j2 + two_j) + 1)
                + lf(h(two_j + two_m))
                + lf(h(two_j - two_m))
                + lf(b)
                + lf(h(two_j1 + two_m1))
                + lf(h(two_j2 - two_m2))
                + lf(c));
        let ln_first = -(lf(t_min) + lf(a - t_min) + lf(b - t_min) + lf(c - t_min) + lf(d + t_min) + lf(e + t_min));
        let magnitude = (ln_prefactor + ln_first + ln_abs_big(&num) - ln_abs_big(&den)).exp();
        if negative {
            -magnitude
        } else {
            magnitude
        }
    }
}

/// One-off coefficient with half-integer arguments given as `f64`.
pub fn clebsch_gordan(j1: f64, m1: f64, j2: f64, m2: f64, j: f64, m: f64) -> f64 {
    let d = |x: f64| (2.0 * x).round() as i64;
    let max = d(j1).max(d(j2)).max(d(j)).max(0) as u32;
    ClebschGordan::new(max).coefficient(d(j1), d(m1), d(j2), d(m2), d(j), d(m))
}

#[cfg(test)]
mod tests {
    use super::*;

    // exact values from symbolic evaluation
    const TABLE: &[([f64; 6], f64)] = &[
        ([0.5, 0.5, 0.5, -0.5, 1.0, 0.0], std::f64::consts::FRAC_1_SQRT_2),
        ([1.0, 1.0, 1.0, -1.0, 0.0, 0.0], 0.577_350_269_189_625_8),
        ([1.0, 0.0, 1.0, 0.0, 2.0, 0.0], 0.816_496_580_927_726),
        ([1.0, 1.0, 1.0, -1.0, 2.0, 0.0], 0.408_248_290_463_863),
        ([1.0, 0.0, 1.0, 0.0, 1.0, 0.0], 0.0),
        ([1.0, 1.0, 1.0, -1.0, 1.0, 0.0], std::f64::consts::FRAC_1_SQRT_2),
        ([2.0, 1.0, 1.0, -1.0, 1.0, 0.0], 0.547_722_557_505_166_1),
        ([2.0, -2.0, 2.0, 1.0, 3.0, -1.0], -0.547_722_557_505_166_1),
        ([1.5, 0.5, 1.0, 0.0, 2.5, 0.5], 0.774_596_669_241_483_4),
        ([1.5, -0.5, 1.5, 0.5, 2.0, 0.0], -0.5),
    ];

    const LARGE: &[([f64; 6], f64)] = &[
        ([25.0, 3.0, 25.0, -5.0, 30.0, -2.0], 0.074_695_264_268_003_847),
        ([50.0, 10.0, 50.0, -12.0, 60.0, -2.0], 0.015_311_512_336_624_579),
        ([50.0, 0.0, 50.0, 0.0, 100.0, 0.0], 0.335_284_320_695_200_6),
        ([50.0, 50.0, 50.0, -50.0, 0.0, 0.0], 0.099_503_719_020_998_914),
        ([50.0, 7.0, 50.0, -7.0, 99.0, 0.0], 0.250_165_432_110_822_3),
        ([50.0, -20.0, 50.0, 25.0, 37.0, 5.0], 0.042_590_224_705_984_279),
    ];

    #[test]
    fn small_j_exact_values() {
        for (a, v) in TABLE {
            let got = clebsch_gordan(a[0], a[1], a[2], a[3], a[4], a[5]);
            assert!((got - v).abs() < 1e-14, "{a:?}: {got} vs {v}");
        }
    }

    #[test]
    fn large_j_relative_accuracy() {
        for (a, v) in LARGE {
            let got = clebsch_gordan(a[0], a[1], a[2], a[3], a[4], a[5]);
            assert!(((got - v) / v).abs() < 1e-11, "{a:?}: {got} vs {v}");
        }
    }

    #[test]
    fn selection_rules() {
        assert_eq!(clebsch_gordan(1.0, 1.0, 1.0, 1.0, 2.0, 1.0), 0.0);
        assert_eq!(clebsch_gordan(1.0, 0.0, 1.0, 0.0, 3.0, 0.0), 0.0);
        assert_eq!(clebsch_gordan(1.0, 2.0, 1.0, -2.0, 2.0, 0.0), 0.0);
        assert_eq!(clebsch_gordan(0.5, 0.5, 1.0, 0.0, 1.0, 0.5), 0.0);
    }

    #[test]
    fn columns_are_orthonormal() {
        let cg = ClebschGordan::new(40);
        for (tj1, tj2) in [(3, 5), (20, 20), (40, 40)] {
            for tj in ((tj1 - tj2 as i64).abs()..=tj1 + tj2).step_by(2) {
                for tjp in [tj, (tj - 2).max((tj1 - tj2).abs())] {
                    let tm = tj.min(tjp) % 2;
                    let mut s = 0.0;
                    for tm1 in (-tj1..=tj1).step_by(2) {
                        let tm2 = tm - tm1;
                        s += cg.coefficient(tj1, tm1, tj2, tm2, tj, tm) * cg.coefficient(tj1, tm1, tj2, tm2, tjp, tm);
                    }
                    let expect = if tj == tjp { 1.0 } else { 0.0 };
                    assert!((s - expect).abs() < 1e-12, "{tj1} {tj2} {tj} {tjp}: {s}");
                }
            }
        }
    }
}
