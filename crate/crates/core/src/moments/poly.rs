//! Exact polynomials over the rationals and the binomial (Newton forward) basis.

use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

/// Polynomial with exact rational coefficients, lowest degree first.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RationalPoly {
    coeffs: Vec<BigRational>,
}

impl RationalPoly {
    pub fn new(mut coeffs: Vec<BigRational>) -> Self {
        while coeffs.last().is_some_and(Zero::is_zero) {
            coeffs.pop();
        }
        Self { coeffs }
    }

    pub fn from_integers(coeffs: &[i64]) -> Self {
        Self::new(coeffs.iter().map(|&c| BigRational::from_integer(c.into())).collect())
    }

    /// `Σ_j d_j · C(N, j)` expanded in the monomial basis.
    pub fn from_forward_differences(diffs: &[BigInt]) -> Self {
        let mut acc = vec![BigRational::zero(); diffs.len().max(1)];
        // falling factorial N(N-1)...(N-j+1) in monomial form
        let mut falling = vec![BigRational::one()];
        let mut factorial = BigInt::one();
        for (j, d) in diffs.iter().enumerate() {
            if j > 0 {
                factorial *= j;
                let shift = BigRational::from_integer(BigInt::from(j - 1));
                let mut next = vec![BigRational::zero(); falling.len() + 1];
                for (i, c) in falling.iter().enumerate() {
                    next[i + 1] += c;
                    next[i] -= c * &shift;
                }
                falling = next;
            }
            let scale = BigRational::new(d.clone(), factorial.clone());
            for (i, c) in falling.iter().enumerate() {
                acc[i] += c * &scale;
            }
        }
        Self::new(acc)
    }

    pub fn coeffs(&self) -> &[BigRational] {
        &self.coeffs
    }

    /// Degree, with the zero polynomial reported as 0.
    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    pub fn leading(&self) -> BigRational {
        self.coeffs.last().cloned().unwrap_or_else(BigRational::zero)
    }

    pub fn eval(&self, x: &BigRational) -> BigRational {
        self.coeffs.iter().rev().fold(BigRational::zero(), |acc, c| acc * x + c)
    }

    pub fn eval_integer(&self, n: u64) -> BigRational {
        self.eval(&BigRational::from_integer(n.into()))
    }

    pub fn eval_f64(&self, x: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, c| acc * x + rational_to_f64(c))
    }
}

impl fmt::Display for RationalPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (i, c) in self.coeffs.iter().enumerate().rev() {
            if c.is_zero() {
                continue;
            }
            let sign = if c.is_negative() { "-" } else { "+" };
            if first {
                if c.is_negative() {
                    write!(f, "-")?;
                }
            } else {
                write!(f, " {sign} ")?;
            }
            first = false;
            let a = c.abs();
            let show_coeff = i == 0 || !a.is_one();
            if show_coeff {
                if a.is_integer() {
                    write!(f, "{}", a.numer())?;
                } else {
                    write!(f, "({}/{})", a.numer(), a.denom())?;
                }
            }
            match i {
                0 => {}
                1 => write!(f, "N")?,
                _ => write!(f, "N^{i}")?,
            }
        }
        if first {
            write!(f, "0")?;
        }
        Ok(())
    }
}

/// `Δ^j f(0)` for `j = 0..values.len()`, given `values[n] = f(n)`.
pub fn forward_differences(values: &[i128]) -> Vec<i128> {
    let mut row = values.to_vec();
    let mut out = Vec::with_capacity(values.len());
    while !row.is_empty() {
        out.push(row[0]);
        row = row.windows(2).map(|w| w[1] - w[0]).collect();
    }
    out
}

/// `Σ_j d_j · C(n, j)` in exact integers.
pub fn eval_binomial_basis(diffs: &[BigInt], n: u64) -> BigInt {
    let mut total = BigInt::zero();
    let mut binom = BigInt::one();
    for (j, d) in diffs.iter().enumerate() {
        if j as u64 > n {
            break;
        }
        if j > 0 {
            binom = binom * BigInt::from(n - j as u64 + 1) / BigInt::from(j);
        }
        total += d * &binom;
    }
    total
}

/// Nearest `f64` to an exact rational.
pub fn rational_to_f64(x: &BigRational) -> f64 {
    use num_traits::ToPrimitive;
    x.to_f64().unwrap_or(f64::NAN)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    #[test]
    fn newton_basis_reproduces_cube() {
        let values: Vec<i128> = (0..6).map(|n: i128| (n + 1).pow(3)).collect();
        let diffs = forward_differences(&values);
        assert_eq!(&diffs[4..], &[0, 0]);
        let big: Vec<BigInt> = diffs[..4].iter().map(|&d| BigInt::from(d)).collect();
        let poly = RationalPoly::from_forward_differences(&big);
        assert_eq!(poly, RationalPoly::from_integers(&[1, 3, 3, 1]));
        assert_eq!(poly.to_string(), "N^3 + 3N^2 + 3N + 1");
        for n in 0..20u64 {
            assert_eq!(eval_binomial_basis(&big, n), BigInt::from((n + 1).pow(3)));
        }
    }

    #[test]
    fn rational_leading_coefficient() {
        // f(n) = n(n+1)/2 has leading coefficient 1/2
        let values: Vec<i128> = (0..4).map(|n: i128| n * (n + 1) / 2).collect();
        let diffs: Vec<BigInt> = forward_differences(&values).into_iter().map(BigInt::from).collect();
        let poly = RationalPoly::from_forward_differences(&diffs[..3]);
        assert_eq!(poly.leading(), q(1, 2));
        assert_eq!(poly.degree(), 2);
        assert_eq!(poly.to_string(), "(1/2)N^2 + (1/2)N");
        assert_eq!(poly.eval_integer(10), q(55, 1));
    }

    #[test]
    fn conversion_of_huge_rationals() {
        let big = BigInt::from(10).pow(400);
        let x = BigRational::new(&big * 3, &big * 7);
        assert!((rational_to_f64(&x) - 3.0 / 7.0).abs() < 1e-15);
        let y = BigRational::new(BigInt::from(10).pow(350) * 5 + 1, BigInt::from(10).pow(350));
        assert!((rational_to_f64(&y) - 5.0).abs() < 1e-14);
        assert_eq!(rational_to_f64(&q(-1, 4)), -0.25);
    }
}
