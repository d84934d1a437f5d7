//! Wronskians of monomial families `u^{n_1}, ..., u^{n_k}`.

use crate::{Error, Real, Result};
use num_bigint::BigInt;
use num_traits::{One, Zero};

fn check(exponents: &[u32]) -> Result<()> {
    if exponents.is_empty() {
        return Err(Error::Degenerate("empty exponent list".into()));
    }
    if exponents.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Degenerate(format!(
            "exponents must be strictly increasing: {exponents:?}"
        )));
    }
    Ok(())
}

/// `det[d^i/du^i u^{n_j}]` evaluated numerically by Gaussian elimination.
pub fn wronskian_monomials<F: Real>(exponents: &[u32], u: F) -> Result<F> {
    check(exponents)?;
    let k = exponents.len();
    let mut a: Vec<Vec<F>> = (0..k)
        .map(|i| {
            exponents
                .iter()
                .map(|&n| {
                    let mut c = F::one();
                    for r in 0..i as u32 {
                        c = c * F::from_i64(n as i64 - r as i64).unwrap();
                    }
                    if c == F::zero() {
                        c
                    } else {
                        c * u.powi(n as i32 - i as i32)
                    }
                })
                .collect()
        })
        .collect();
    let mut det = F::one();
    for c in 0..k {
        let p = (c..k)
            .max_by(|&x, &y| a[x][c].abs().partial_cmp(&a[y][c].abs()).unwrap())
            .unwrap();
        if a[p][c] == F::zero() {
            return Ok(F::zero());
        }
        if p != c {
            a.swap(p, c);
            det = -det;
        }
        det = det * a[c][c];
        for r in c + 1..k {
            let f = a[r][c] / a[c][c];
            for j in c..k {
                let v = a[c][j];
                a[r][j] = a[r][j] - f * v;
            }
        }
    }
    Ok(det)
}

/// `prod_{i<j} (n_j - n_i)`: the Wronskian equals this times `u^{sum n - k(k-1)/2}`.
pub fn wronskian_constant(exponents: &[u32]) -> BigInt {
    let mut p = BigInt::one();
    for j in 0..exponents.len() {
        for i in 0..j {
            p *= BigInt::from(exponents[j] as i64 - exponents[i] as i64);
        }
    }
    p
}

/// Every leading Wronskian `W[u^{n_1}, ..., u^{n_k}]` is a nonzero constant
/// times a power of `u`, so it is nonvanishing on `(0, inf)` exactly when
/// the constant is nonzero.
pub fn ect_certify(exponents: &[u32]) -> Result<bool> {
    check(exponents)?;
    Ok((1..=exponents.len()).all(|k| !wronskian_constant(&exponents[..k]).is_zero()))
}
