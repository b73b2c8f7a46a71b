//! Associated Legendre functions and real scalar spherical harmonics.
//!
//! `P_{n,j}(t) = 1/(2ⁿ n!) (1−t²)^{j/2} ∂ₜ^{n+j} (t²−1)ⁿ` carries no
//! Condon–Shortley phase; the `(−1)ʲ` factor lives in the normalized
//! `X_{n,j}`. Real harmonics use the cosine branch for negative orders and
//! the sine branch for positive orders:
//!
//! ```text
//! Y_{n,j} = √2 X_{n,|j|}(t) cos(jφ)   j < 0
//!         = X_{n,0}(t)                j = 0
//!         = √2 X_{n,j}(t) sin(jφ)     j > 0
//! ```

use std::f64::consts::{PI, SQRT_2};

use crate::error::{Error, Result};

/// Largest band limit the tables are sized for.
pub const MAX_BAND: usize = 64;

/// Degree/order pair of a scalar harmonic, `|j| ≤ n`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DegreeOrder {
    pub n: usize,
    pub j: i64,
}

impl DegreeOrder {
    pub fn new(n: usize, j: i64) -> Result<Self> {
        if j.unsigned_abs() as usize > n {
            return Err(Error::Domain(format!("order {j} exceeds degree {n}")));
        }
        Ok(Self { n, j })
    }

    /// Dense index `n² + n + j`, running through `0..(N+1)²` for a band `N`.
    #[inline]
    pub fn index(self) -> usize {
        ((self.n * self.n + self.n) as i64 + self.j) as usize
    }

    #[inline]
    pub fn from_index(k: usize) -> Self {
        let mut n = (k as f64).sqrt() as usize;
        while n * n > k {
            n -= 1;
        }
        while (n + 1) * (n + 1) <= k {
            n += 1;
        }
        Self {
            n,
            j: k as i64 - (n * n + n) as i64,
        }
    }

    /// All pairs with `n ≤ band`, in index order.
    pub fn all(band: usize) -> impl Iterator<Item = DegreeOrder> {
        (0..=band).flat_map(|n| (-(n as i64)..=n as i64).map(move |j| DegreeOrder { n, j }))
    }

    /// Number of pairs with `n ≤ band`.
    #[inline]
    pub fn count(band: usize) -> usize {
        (band + 1) * (band + 1)
    }
}

fn check_t(t: f64) -> Result<()> {
    if !(t.abs() <= 1.0) {
        return Err(Error::Domain(format!("t = {t} outside [-1, 1]")));
    }
    Ok(())
}

fn check_nj(n: usize, j: usize) -> Result<()> {
    if j > n {
        return Err(Error::Domain(format!("order {j} exceeds degree {n}")));
    }
    Ok(())
}

/// `P_{m,j}(t)` for `m = j..=nmax` by upward recurrence in the degree,
/// seeded from the diagonal `P_{j,j} = (2j−1)!! (1−t²)^{j/2}`.
fn column(j: usize, nmax: usize, t: f64) -> Vec<f64> {
    let s = (1.0 - t * t).max(0.0).sqrt();
    let mut diag = 1.0;
    for k in 1..=j {
        diag *= (2 * k - 1) as f64 * s;
    }
    let mut out = Vec::with_capacity(nmax + 1 - j);
    out.push(diag);
    if nmax > j {
        out.push((2 * j + 1) as f64 * t * diag);
    }
    for m in (j + 2)..=nmax {
        let a = out[m - j - 1];
        let b = out[m - j - 2];
        let next = ((2 * m - 1) as f64 * t * a - (m + j - 1) as f64 * b) / (m - j) as f64;
        out.push(next);
    }
    out
}

/// `P_{n,j}(t)` for `0 ≤ j ≤ n`, `|t| ≤ 1`.
pub fn assoc_legendre(n: usize, j: usize, t: f64) -> Result<f64> {
    check_nj(n, j)?;
    check_t(t)?;
    Ok(column(j, n, t)[n - j])
}

/// `dP_{n,j}/dt` from `(1−t²) P′_{n,j} = −n t P_{n,j} + (n+j) P_{n−1,j}`.
/// Rejects `|t| = 1`.
pub fn assoc_legendre_dt(n: usize, j: usize, t: f64) -> Result<f64> {
    check_nj(n, j)?;
    check_t(t)?;
    if t.abs() == 1.0 {
        return Err(Error::Pole(t));
    }
    let col = column(j, n, t);
    Ok(derivative_from_column(&col, n, j, t))
}

#[inline]
fn derivative_from_column(col: &[f64], n: usize, j: usize, t: f64) -> f64 {
    let p = col[n - j];
    let p_prev = if n > j { col[n - j - 1] } else { 0.0 };
    (-(n as f64) * t * p + (n + j) as f64 * p_prev) / (1.0 - t * t)
}

/// `(−1)ʲ √((2n+1)/4π · (n−j)!/(n+j)!)`, factorial ratio by incremental product.
pub fn normalization(n: usize, j: usize) -> f64 {
    let mut ratio = 1.0;
    for k in (n - j + 1)..=(n + j) {
        ratio /= k as f64;
    }
    let sign = if j.is_multiple_of(2) { 1.0 } else { -1.0 };
    sign * ((2 * n + 1) as f64 / (4.0 * PI) * ratio).sqrt()
}

/// `X_{n,j}(t)`.
pub fn normalized_legendre(n: usize, j: usize, t: f64) -> Result<f64> {
    Ok(normalization(n, j) * assoc_legendre(n, j, t)?)
}

#[inline]
fn trig(j: i64, phi: f64) -> (f64, f64) {
    // (factor, d factor / dφ)
    match j {
        0 => (1.0, 0.0),
        j if j < 0 => {
            let m = j as f64;
            (SQRT_2 * (m * phi).cos(), -SQRT_2 * m * (m * phi).sin())
        }
        j => {
            let m = j as f64;
            (SQRT_2 * (m * phi).sin(), SQRT_2 * m * (m * phi).cos())
        }
    }
}

/// Real scalar harmonic `Y_{n,j}(φ, t)`.
pub fn scalar_sh(n: usize, j: i64, phi: f64, t: f64) -> Result<f64> {
    let dj = DegreeOrder::new(n, j)?;
    let x = normalized_legendre(n, dj.j.unsigned_abs() as usize, t)?;
    Ok(x * trig(j, phi).0)
}

/// `(∂φ Y_{n,j}, ∂ₜ Y_{n,j})` at an interior point.
pub fn scalar_sh_grad_components(n: usize, j: i64, phi: f64, t: f64) -> Result<(f64, f64)> {
    let dj = DegreeOrder::new(n, j)?;
    check_t(t)?;
    if t.abs() == 1.0 {
        return Err(Error::Pole(t));
    }
    let m = dj.j.unsigned_abs() as usize;
    let col = column(m, n, t);
    let norm = normalization(n, m);
    let x = norm * col[n - m];
    let dx = norm * derivative_from_column(&col, n, m, t);
    let (f, df) = trig(j, phi);
    Ok((x * df, dx * f))
}

/// Values and partial derivatives of every `Y_{n,j}` with `n ≤ band` at one
/// interior point, indexed by [`DegreeOrder::index`].
#[derive(Clone, Debug)]
pub struct HarmonicsAtPoint {
    pub value: Vec<f64>,
    pub d_phi: Vec<f64>,
    pub d_t: Vec<f64>,
}

pub fn scalar_sh_all(band: usize, phi: f64, t: f64) -> Result<HarmonicsAtPoint> {
    check_t(t)?;
    if t.abs() == 1.0 {
        return Err(Error::Pole(t));
    }
    let len = DegreeOrder::count(band);
    let mut out = HarmonicsAtPoint {
        value: vec![0.0; len],
        d_phi: vec![0.0; len],
        d_t: vec![0.0; len],
    };
    for m in 0..=band {
        let col = column(m, band, t);
        let trig_pos = trig(m as i64, phi);
        let trig_neg = trig(-(m as i64), phi);
        for n in m..=band {
            let norm = normalization(n, m);
            let x = norm * col[n - m];
            let dx = norm * derivative_from_column(&col, n, m, t);
            let orders: &[(i64, (f64, f64))] = if m == 0 {
                &[(0, (1.0, 0.0))]
            } else {
                &[(m as i64, trig_pos), (-(m as i64), trig_neg)]
            };
            for &(j, (f, df)) in orders {
                let k = DegreeOrder { n, j }.index();
                out.value[k] = x * f;
                out.d_phi[k] = x * df;
                out.d_t[k] = dx * f;
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    /// Rodrigues formula evaluated from the exact polynomial coefficients of
    /// `(t²−1)ⁿ`; independent of the recurrence.
    fn rodrigues(n: usize, j: usize, t: f64) -> f64 {
        // coefficients of (t² − 1)ⁿ in powers of t
        let mut coeffs = vec![0.0; 2 * n + 1];
        let mut binom = 1.0;
        for k in 0..=n {
            // C(n,k) t^{2k} (−1)^{n−k}
            let sign = if (n - k).is_multiple_of(2) { 1.0 } else { -1.0 };
            coeffs[2 * k] = sign * binom;
            binom = binom * (n - k) as f64 / (k + 1) as f64;
        }
        for _ in 0..(n + j) {
            coeffs = (1..coeffs.len()).map(|p| p as f64 * coeffs[p]).collect();
            if coeffs.is_empty() {
                return 0.0;
            }
        }
        let poly = coeffs.iter().rev().fold(0.0, |acc, &c| acc * t + c);
        let fact: f64 = (1..=n).map(|k| k as f64).product();
        (1.0 - t * t).powf(j as f64 / 2.0) * poly / (2f64.powi(n as i32) * fact)
    }

    #[test]
    fn low_degree_values() {
        assert_abs_diff_eq!(assoc_legendre(0, 0, 0.3).unwrap(), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(assoc_legendre(1, 0, 0.3).unwrap(), 0.3, epsilon = 1e-15);
        assert_abs_diff_eq!(assoc_legendre(1, 1, 0.5).unwrap(), 0.75f64.sqrt(), epsilon = 1e-15);
    }

    #[test]
    fn derivative_values() {
        assert_abs_diff_eq!(assoc_legendre_dt(1, 0, 0.2).unwrap(), 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(assoc_legendre_dt(2, 0, 0.5).unwrap(), 1.5, epsilon = 1e-14);
        assert_abs_diff_eq!(
            assoc_legendre_dt(1, 1, 0.5).unwrap(),
            -0.5 / 0.75f64.sqrt(),
            epsilon = 1e-14
        );
    }

    #[test]
    fn normalized_values() {
        let c = (1.0 / (4.0 * PI)).sqrt();
        assert_abs_diff_eq!(normalized_legendre(0, 0, -0.7).unwrap(), c, epsilon = 1e-15);
        assert_abs_diff_eq!(
            normalized_legendre(1, 0, 1.0).unwrap(),
            (3.0 / (4.0 * PI)).sqrt(),
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(
            normalized_legendre(1, 1, 0.0).unwrap(),
            -(3.0 / (8.0 * PI)).sqrt(),
            epsilon = 1e-15
        );
    }

    #[test]
    fn scalar_harmonic_values() {
        assert_abs_diff_eq!(
            scalar_sh(0, 0, 1.0, 0.5).unwrap(),
            (1.0 / (4.0 * PI)).sqrt(),
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(
            scalar_sh(1, 0, 0.0, 0.8).unwrap(),
            0.8 * (3.0 / (4.0 * PI)).sqrt(),
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(
            scalar_sh(1, 1, PI / 2.0, 0.0).unwrap(),
            -SQRT_2 * (3.0 / (8.0 * PI)).sqrt(),
            epsilon = 1e-15
        );
        // cosine branch for negative order
        assert_abs_diff_eq!(
            scalar_sh(1, -1, 0.0, 0.0).unwrap(),
            -SQRT_2 * (3.0 / (8.0 * PI)).sqrt(),
            epsilon = 1e-15
        );
    }

    #[test]
    fn gradient_component_values() {
        assert_eq!(scalar_sh_grad_components(0, 0, 0.4, 0.1).unwrap(), (0.0, 0.0));
        let (dp, dt) = scalar_sh_grad_components(1, 0, 0.0, 0.3).unwrap();
        assert_abs_diff_eq!(dp, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(dt, (3.0 / (4.0 * PI)).sqrt(), epsilon = 1e-14);
        let (dp, dt) = scalar_sh_grad_components(1, 1, 0.0, 0.0).unwrap();
        assert_abs_diff_eq!(dp, SQRT_2 * normalized_legendre(1, 1, 0.0).unwrap(), epsilon = 1e-15);
        assert_abs_diff_eq!(dt, 0.0, epsilon = 1e-15);
    }

    #[test]
    fn domain_errors() {
        assert!(assoc_legendre(2, 3, 0.1).is_err());
        assert!(assoc_legendre(2, 1, 1.1).is_err());
        assert!(assoc_legendre(2, 1, f64::NAN).is_err());
        assert!(matches!(assoc_legendre_dt(2, 1, 1.0), Err(Error::Pole(_))));
        assert!(matches!(assoc_legendre_dt(2, 1, -1.0), Err(Error::Pole(_))));
        assert!(scalar_sh(2, -3, 0.0, 0.0).is_err());
        assert!(scalar_sh_grad_components(2, 1, 0.0, 1.0).is_err());
        assert!(DegreeOrder::new(1, 2).is_err());
    }

    #[test]
    fn endpoints_are_finite() {
        assert_abs_diff_eq!(assoc_legendre(5, 0, 1.0).unwrap(), 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(assoc_legendre(5, 0, -1.0).unwrap(), -1.0, epsilon = 1e-14);
        assert_eq!(assoc_legendre(5, 2, 1.0).unwrap(), 0.0);
    }

    #[test]
    fn recurrence_matches_rodrigues() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..100 {
            let t: f64 = rng.random_range(-1.0..=1.0);
            for n in 0..=8 {
                for j in 0..=n {
                    let a = assoc_legendre(n, j, t).unwrap();
                    let b = rodrigues(n, j, t);
                    // P_{8,8} reaches 15!! ≈ 2e6, so compare relative to magnitude
                    assert!((a - b).abs() <= 1e-12 * b.abs().max(1.0), "n={n} j={j} t={t}: {a} vs {b}");
                }
            }
        }
    }

    #[test]
    fn derivative_matches_central_differences() {
        let h = 1e-6;
        for n in 0..=10 {
            for j in 0..=n {
                for k in 0..=40 {
                    let t = -0.99 + 1.98 * k as f64 / 40.0;
                    let d = assoc_legendre_dt(n, j, t).unwrap();
                    let plus = assoc_legendre(n, j, t + h).unwrap();
                    let minus = assoc_legendre(n, j, t - h).unwrap();
                    let fd = (plus - minus) / (2.0 * h);
                    let scale = plus.abs().max(minus.abs()).max(d.abs()).max(1.0);
                    assert!((d - fd).abs() <= 1e-6 * scale, "n={n} j={j} t={t}: {d} vs {fd}");
                }
            }
        }
    }

    #[test]
    fn normalized_derivative_matches_central_differences_absolute() {
        let h = 1e-6;
        for n in 0..=10 {
            for j in 0..=n {
                for k in 0..=40 {
                    let t = -0.99 + 1.98 * k as f64 / 40.0;
                    let d = normalization(n, j) * assoc_legendre_dt(n, j, t).unwrap();
                    let fd = (normalized_legendre(n, j, t + h).unwrap()
                        - normalized_legendre(n, j, t - h).unwrap())
                        / (2.0 * h);
                    assert!((d - fd).abs() <= 1e-6, "n={n} j={j} t={t}");
                }
            }
        }
    }

    #[test]
    fn high_band_is_finite() {
        for &t in &[-0.999, -0.3, 0.0, 0.7, 0.999] {
            let all = scalar_sh_all(MAX_BAND, 1.3, t).unwrap();
            assert!(all.value.iter().chain(&all.d_phi).chain(&all.d_t).all(|v| v.is_finite()));
        }
    }

    #[test]
    fn batch_matches_pointwise() {
        let (phi, t) = (2.1, -0.37);
        let all = scalar_sh_all(7, phi, t).unwrap();
        for dj in DegreeOrder::all(7) {
            let k = dj.index();
            assert_abs_diff_eq!(all.value[k], scalar_sh(dj.n, dj.j, phi, t).unwrap(), epsilon = 1e-13);
            let (dp, dt) = scalar_sh_grad_components(dj.n, dj.j, phi, t).unwrap();
            assert_abs_diff_eq!(all.d_phi[k], dp, epsilon = 1e-12);
            assert_abs_diff_eq!(all.d_t[k], dt, epsilon = 1e-12);
        }
    }

    #[test]
    fn index_round_trip() {
        for (k, dj) in DegreeOrder::all(12).enumerate() {
            assert_eq!(dj.index(), k);
            assert_eq!(DegreeOrder::from_index(k), dj);
        }
    }
}
