//! Closed-form sharp constant and the fields attaining it.
//!
//! ```text
//! γ(κ) = κ + 2                              κ ≤ −4
//!      = ½((κ+6) − √(κ² + 4κ + 36))          κ > −4
//! ```
//!
//! so that `∫|∇*u|² + κ∫(u·n)² ≥ γ(κ) ∫|u|²` for every `u`. The fields with
//! equality live in `span{y⁽¹⁾₀₀, y⁽¹⁾₁ⱼ, y⁽²⁾₁ⱼ}`:
//!
//! * `κ < −4`: `u = ±√4π y⁽¹⁾₀₀`, i.e. `±n`;
//! * `κ > −4`: `c₀ = 0`, `τⱼ = −2√2/(γ−2) σⱼ`,
//!   `|σ|² = 2π(√(κ²+4κ+36) − (κ+2)) / √(κ²+4κ+36)`;
//! * `κ = −4`: `τⱼ = σⱼ/√2` and `2c₀² + 3|σ|² = 8π`.

use std::f64::consts::SQRT_2;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::{g_kappa, norm_sq};
use crate::vsh::{CoeffSet, ModeIndex};
use crate::FOUR_PI;

/// `|κ + 4|` below this is treated as the critical value.
pub const CRITICAL_WINDOW: f64 = 1e-12;

/// Relative slack on `∫|u|² = 4π` accepted by [`equality_residual`].
pub const NORMALIZATION_TOLERANCE: f64 = 1e-8;

fn discriminant_root(kappa: f64) -> f64 {
    (kappa * kappa + 4.0 * kappa + 36.0).sqrt()
}

/// `γ₊(κ) = ½((κ+6) − √(κ²+4κ+36))` for every real `κ`.
///
/// Evaluated as `4κ / ((κ+6) + √(…))` when `κ > −6` to avoid cancellation for
/// large `κ`; both forms are algebraically identical.
pub fn gamma_plus(kappa: f64) -> f64 {
    let d = discriminant_root(kappa);
    if kappa + 6.0 > 0.0 {
        4.0 * kappa / ((kappa + 6.0) + d)
    } else {
        0.5 * ((kappa + 6.0) - d)
    }
}

/// The sharp constant `γ(κ)`.
pub fn gamma(kappa: f64) -> Result<f64> {
    if !kappa.is_finite() {
        return Err(Error::InvalidParameter(format!("kappa must be finite, got {kappa}")));
    }
    Ok(if kappa <= -4.0 {
        kappa + 2.0
    } else {
        gamma_plus(kappa)
    })
}

/// `|κ| + γ(κ)`, the constant of the tangential form valid for `κ < 0`.
pub fn shifted_constant(kappa: f64) -> Result<f64> {
    if !(kappa < 0.0) {
        return Err(Error::InvalidParameter(format!(
            "shifted constant needs kappa < 0, got {kappa}"
        )));
    }
    Ok(-kappa + gamma(kappa)?)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Regime {
    /// `κ < −4`
    Below,
    /// `κ = −4`
    Critical,
    /// `κ > −4`
    Above,
}

impl Regime {
    pub fn classify(kappa: f64) -> Regime {
        if (kappa + 4.0).abs() < CRITICAL_WINDOW {
            Regime::Critical
        } else if kappa < -4.0 {
            Regime::Below
        } else {
            Regime::Above
        }
    }
}

/// `(σ_{−1}, σ₀, σ₁)` etc. Index `j + 1`.
pub type Triple = [f64; 3];

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MinimizerSpec {
    pub kappa: f64,
    pub regime: Regime,
    pub c0: f64,
    pub sigma: Triple,
    pub tau: Triple,
}

impl MinimizerSpec {
    /// Coefficients on `y⁽¹⁾₀₀`, `y⁽¹⁾₁ⱼ` and `y⁽²⁾₁ⱼ`.
    pub fn coeffs(&self) -> CoeffSet {
        let mut c = CoeffSet::zeros(1);
        let set = |c: &mut CoeffSet, i, n, j, v| c.set(ModeIndex::new(i, n, j).expect("valid"), v).expect("in band");
        set(&mut c, 1, 0, 0, self.c0);
        for j in -1..=1i64 {
            set(&mut c, 1, 1, j, self.sigma[(j + 1) as usize]);
            set(&mut c, 2, 1, j, self.tau[(j + 1) as usize]);
        }
        c
    }
}

/// Free parameters of the equality family, one variant per regime.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum FreeParams {
    /// `u = sign · n`.
    Below { positive: bool },
    /// Direction of `σ` in ℝ³; its length is fixed by `κ`.
    Above { direction: Triple },
    /// `c₀` and the direction of `σ`; `|σ|² = (8π − 2c₀²)/3`.
    Critical { c0: f64, direction: Triple },
}

impl FreeParams {
    /// Critical-regime parameters from a mixing angle:
    /// `c₀ = √4π cos a`, `|σ| = √(8π/3) sin a`.
    pub fn critical_from_angle(angle: f64, direction: Triple) -> FreeParams {
        let c0 = FOUR_PI.sqrt() * angle.cos();
        let sign = if angle.sin() < 0.0 { -1.0 } else { 1.0 };
        FreeParams::Critical {
            c0,
            direction: direction.map(|d| d * sign),
        }
    }
}

fn unit(direction: Triple) -> Result<Triple> {
    let n = direction.iter().map(|d| d * d).sum::<f64>().sqrt();
    if !(n > 0.0) || !n.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "direction {direction:?} must be a finite non-zero vector"
        )));
    }
    Ok(direction.map(|d| d / n))
}

/// `|σ|²` of the equality family for `κ > −4`.
pub fn above_sigma_norm_sq(kappa: f64) -> f64 {
    let d = discriminant_root(kappa);
    2.0 * std::f64::consts::PI * (d - (kappa + 2.0)) / d
}

/// `τⱼ / σⱼ` for `κ ≥ −4`.
pub fn tau_over_sigma(kappa: f64) -> f64 {
    -2.0 * SQRT_2 / (gamma_plus(kappa) - 2.0)
}

/// A member of the equality family and its coefficients.
pub fn build_minimizer(kappa: f64, params: FreeParams) -> Result<(MinimizerSpec, CoeffSet)> {
    gamma(kappa)?;
    let regime = Regime::classify(kappa);
    let spec = match (regime, params) {
        (Regime::Below, FreeParams::Below { positive }) => MinimizerSpec {
            kappa,
            regime,
            c0: if positive { 1.0 } else { -1.0 } * FOUR_PI.sqrt(),
            sigma: [0.0; 3],
            tau: [0.0; 3],
        },
        (Regime::Above, FreeParams::Above { direction }) => {
            let dir = unit(direction)?;
            let len = above_sigma_norm_sq(kappa).sqrt();
            let sigma = dir.map(|d| d * len);
            let ratio = tau_over_sigma(kappa);
            MinimizerSpec {
                kappa,
                regime,
                c0: 0.0,
                sigma,
                tau: sigma.map(|s| s * ratio),
            }
        }
        (Regime::Critical, FreeParams::Critical { c0, direction }) => {
            let rest = 8.0 * std::f64::consts::PI - 2.0 * c0 * c0;
            if !c0.is_finite() || rest < -1e-12 * FOUR_PI {
                return Err(Error::InvalidParameter(format!(
                    "2c0² = {} exceeds 8π",
                    2.0 * c0 * c0
                )));
            }
            let len = (rest.max(0.0) / 3.0).sqrt();
            let sigma = if len == 0.0 {
                [0.0; 3]
            } else {
                unit(direction)?.map(|d| d * len)
            };
            MinimizerSpec {
                kappa,
                regime,
                c0,
                sigma,
                tau: sigma.map(|s| s / SQRT_2),
            }
        }
        (regime, params) => {
            return Err(Error::InvalidParameter(format!(
                "parameters {params:?} do not match regime {regime:?} at kappa = {kappa}"
            )))
        }
    };
    let c = spec.coeffs();
    Ok((spec, c))
}

/// `G_κ(û) − 4π γ(κ)` for a normalized coefficient set.
pub fn equality_residual(c: &CoeffSet, kappa: f64) -> Result<f64> {
    let n = norm_sq(c);
    if !((n - FOUR_PI).abs() <= NORMALIZATION_TOLERANCE * FOUR_PI) {
        return Err(Error::NotNormalized { norm_sq: n });
    }
    Ok(g_kappa(c, kappa) - FOUR_PI * gamma(kappa)?)
}

fn support() -> Vec<ModeIndex> {
    let mut s = vec![ModeIndex::new(1, 0, 0).expect("valid")];
    for j in -1..=1 {
        s.push(ModeIndex::new(1, 1, j).expect("valid"));
        s.push(ModeIndex::new(2, 1, j).expect("valid"));
    }
    s
}

/// Whether a normalized `c` lies in the equality family at `κ`, every
/// condition checked to absolute tolerance `tol` on the coefficients.
pub fn membership_check(c: &CoeffSet, kappa: f64, tol: f64) -> bool {
    let Ok(g) = gamma(kappa) else { return false };
    if c.max_abs_outside(&support()) > tol {
        return false;
    }
    if (norm_sq(c).sqrt() - FOUR_PI.sqrt()).abs() > tol {
        return false;
    }
    let c0 = c.coeff(1, 0, 0);
    let sigma: Triple = [-1, 0, 1].map(|j| c.coeff(1, 1, j));
    let tau: Triple = [-1, 0, 1].map(|j| c.coeff(2, 1, j));
    match Regime::classify(kappa) {
        Regime::Below => {
            sigma.iter().chain(&tau).all(|v| v.abs() <= tol)
                && (c0.abs() - FOUR_PI.sqrt()).abs() <= tol
        }
        Regime::Above => {
            let ratio = -2.0 * SQRT_2 / (g - 2.0);
            c0.abs() <= tol && sigma.iter().zip(&tau).all(|(s, t)| (t - ratio * s).abs() <= tol)
        }
        Regime::Critical => sigma
            .iter()
            .zip(&tau)
            .all(|(s, t)| (t - s / SQRT_2).abs() <= tol),
    }
}

/// One row of the `gamma-table` output.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GammaRow {
    pub kappa: f64,
    pub gamma: f64,
    pub gamma_plus: f64,
    pub shifted: Option<f64>,
}

impl GammaRow {
    pub fn at(kappa: f64) -> Result<Self> {
        Ok(Self {
            kappa,
            gamma: gamma(kappa)?,
            gamma_plus: gamma_plus(kappa),
            shifted: shifted_constant(kappa).ok(),
        })
    }
}

/// `steps` equally spaced samples on `[from, to]` (inclusive).
pub fn gamma_table(from: f64, to: f64, steps: usize) -> Result<Vec<GammaRow>> {
    if steps == 0 || !from.is_finite() || !to.is_finite() || (steps == 1 && from != to) || from > to {
        return Err(Error::InvalidParameter(format!(
            "bad range [{from}, {to}] with {steps} steps"
        )));
    }
    (0..steps)
        .map(|k| {
            let kappa = if steps == 1 {
                from
            } else {
                from + (to - from) * k as f64 / (steps - 1) as f64
            };
            GammaRow::at(kappa)
        })
        .collect()
}

/// CSV with columns `kappa,gamma,gamma_plus,shifted`; `shifted` is empty
/// for `κ ≥ 0`.
pub fn write_gamma_table<W: Write>(rows: &[GammaRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["kappa", "gamma", "gamma_plus", "shifted"])?;
    for r in rows {
        w.write_record(&[
            r.kappa.to_string(),
            r.gamma.to_string(),
            r.gamma_plus.to_string(),
            r.shifted.map(|s| s.to_string()).unwrap_or_default(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::random_normalized;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use std::f64::consts::PI;

    #[test]
    fn gamma_examples() {
        assert_eq!(gamma(-4.0).unwrap(), -2.0);
        assert_eq!(gamma(-8.0).unwrap(), -6.0);
        assert_abs_diff_eq!(gamma(6.0).unwrap(), 6.0 - 2.0 * 6f64.sqrt(), epsilon = 1e-14);
        assert!(gamma(f64::NAN).is_err());
        assert!(gamma(f64::INFINITY).is_err());
    }

    #[test]
    fn gamma_plus_examples() {
        assert_eq!(gamma_plus(-4.0), -2.0);
        assert_eq!(gamma_plus(0.0), 0.0);
        assert!((gamma_plus(1e6) - 2.0).abs() < 1e-4);
        // both algebraic forms agree
        for k in [-30.0, -6.5, -5.0, -1.0, 0.5, 3.0, 40.0] {
            let naive = 0.5 * ((k + 6.0) - (k * k + 4.0 * k + 36.0f64).sqrt());
            assert_abs_diff_eq!(gamma_plus(k), naive, epsilon = 1e-12);
        }
    }

    #[test]
    fn shifted_examples() {
        assert_eq!(shifted_constant(-4.0).unwrap(), 2.0);
        assert_eq!(shifted_constant(-8.0).unwrap(), 2.0);
        assert!(shifted_constant(-1e-8).unwrap().abs() < 1e-7);
        assert!(shifted_constant(0.0).is_err());
        assert!(shifted_constant(2.0).is_err());
    }

    #[test]
    fn gamma_is_continuous_increasing_and_below_two() {
        let n = 100_000;
        let (lo, hi) = (-50.0, 50.0);
        let step = (hi - lo) / n as f64;
        let mut prev = gamma(lo).unwrap();
        for k in 1..=n {
            let kappa = lo + step * k as f64;
            let g = gamma(kappa).unwrap();
            assert!(g > prev, "not increasing at {kappa}");
            assert!(g - prev < 2.0 * step, "jump at {kappa}");
            assert!(g < 2.0);
            if kappa > -4.0 {
                assert!(g < kappa + 2.0);
            }
            prev = g;
        }
    }

    #[test]
    fn regime_classification() {
        assert_eq!(Regime::classify(-4.0), Regime::Critical);
        assert_eq!(Regime::classify(-4.0 + 1e-13), Regime::Critical);
        assert_eq!(Regime::classify(-4.5), Regime::Below);
        assert_eq!(Regime::classify(-3.9), Regime::Above);
    }

    #[test]
    fn minimizer_below() {
        let (spec, c) = build_minimizer(-8.0, FreeParams::Below { positive: true }).unwrap();
        assert_eq!(spec.regime, Regime::Below);
        assert_abs_diff_eq!(c.coeff(1, 0, 0), FOUR_PI.sqrt(), epsilon = 1e-15);
        assert_abs_diff_eq!(g_kappa(&c, -8.0), -24.0 * PI, epsilon = 1e-12);
        assert_abs_diff_eq!(g_kappa(&c, -8.0), FOUR_PI * gamma(-8.0).unwrap(), epsilon = 1e-12);
    }

    #[test]
    fn minimizer_above_at_zero() {
        let (spec, c) = build_minimizer(0.0, FreeParams::Above { direction: [0.0, 1.0, 0.0] }).unwrap();
        assert_abs_diff_eq!(spec.sigma[1].powi(2), FOUR_PI / 3.0, epsilon = 1e-13);
        assert_abs_diff_eq!(spec.tau[1], SQRT_2 * spec.sigma[1], epsilon = 1e-14);
        assert_abs_diff_eq!(norm_sq(&c), FOUR_PI, epsilon = 1e-13);
        assert_abs_diff_eq!(g_kappa(&c, 0.0), 0.0, epsilon = 1e-13);
    }

    #[test]
    fn minimizer_critical() {
        let (_, c) = build_minimizer(
            -4.0,
            FreeParams::Critical {
                c0: 2.0 * PI.sqrt(),
                direction: [1.0, 0.0, 0.0],
            },
        )
        .unwrap();
        assert_abs_diff_eq!(g_kappa(&c, -4.0), -8.0 * PI, epsilon = 1e-12);
        assert_abs_diff_eq!(norm_sq(&c), FOUR_PI, epsilon = 1e-12);
        for angle in [0.3, 1.0, 2.5, -0.7] {
            let (spec, c) = build_minimizer(-4.0, FreeParams::critical_from_angle(angle, [1.0, -2.0, 0.5])).unwrap();
            let s2: f64 = spec.sigma.iter().map(|s| s * s).sum();
            assert_abs_diff_eq!(2.0 * spec.c0 * spec.c0 + 3.0 * s2, 8.0 * PI, epsilon = 1e-12);
            assert!(equality_residual(&c, -4.0).unwrap().abs() < 1e-10);
            assert!(membership_check(&c, -4.0, 1e-10));
        }
    }

    #[test]
    fn minimizer_parameter_errors() {
        assert!(build_minimizer(-8.0, FreeParams::Above { direction: [1.0, 0.0, 0.0] }).is_err());
        assert!(build_minimizer(1.0, FreeParams::Above { direction: [0.0; 3] }).is_err());
        assert!(build_minimizer(1.0, FreeParams::Below { positive: false }).is_err());
        assert!(build_minimizer(-4.0, FreeParams::Critical { c0: 4.0, direction: [1.0, 0.0, 0.0] }).is_err());
        assert!(build_minimizer(-4.0, FreeParams::Critical { c0: 1.0, direction: [0.0; 3] }).is_err());
        assert!(build_minimizer(f64::NAN, FreeParams::Below { positive: true }).is_err());
    }

    #[test]
    fn residual_examples() {
        let normal = CoeffSet::zeros(1).with(1, 0, 0, FOUR_PI.sqrt()).unwrap();
        let r = equality_residual(&normal, 6.0).unwrap();
        assert_abs_diff_eq!(r, FOUR_PI * 8.0 - FOUR_PI * (6.0 - 2.0 * 6f64.sqrt()), epsilon = 1e-11);
        assert!(r > 0.0);
        assert!(equality_residual(&normal.scale(2.0), 6.0).is_err());

        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(4);
        for _ in 0..50 {
            let c = random_normalized(3, &mut rng);
            assert!(equality_residual(&c, 1.5).unwrap() > 0.0);
        }
    }

    #[test]
    fn membership_examples() {
        let (_, c) = build_minimizer(2.0, FreeParams::Above { direction: [0.2, -1.0, 0.4] }).unwrap();
        assert!(membership_check(&c, 2.0, 1e-12));
        let mut perturbed = CoeffSet::zeros(2).combine(0.0, &c, 1.0);
        perturbed.set(ModeIndex::new(3, 2, 0).unwrap(), 1e-3).unwrap();
        assert!(!membership_check(&perturbed, 2.0, 1e-6));
        // wrong regime relation
        assert!(!membership_check(&c, -8.0, 1e-6));
        assert!(!membership_check(&c, f64::NAN, 1e-6));
    }

    #[test]
    fn both_families_coexist_at_critical_value() {
        let normal = CoeffSet::zeros(1).with(1, 0, 0, -FOUR_PI.sqrt()).unwrap();
        assert!(equality_residual(&normal, -4.0).unwrap().abs() <= 1e-9);
        // limit of the κ > −4 family
        let len = above_sigma_norm_sq(-4.0).sqrt();
        let ratio = tau_over_sigma(-4.0);
        let c = CoeffSet::zeros(1)
            .with(1, 1, 0, len)
            .unwrap()
            .with(2, 1, 0, len * ratio)
            .unwrap();
        assert!(equality_residual(&c, -4.0).unwrap().abs() <= 1e-9);
        assert!(membership_check(&c, -4.0, 1e-12));
    }

    #[test]
    fn above_regime_norm_split() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(12);
        for _ in 0..100 {
            let kappa = rng.random_range(-3.99..60.0);
            let dir = [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)];
            let (spec, c) = build_minimizer(kappa, FreeParams::Above { direction: dir }).unwrap();
            let s2: f64 = spec.sigma.iter().map(|s| s * s).sum();
            let t2: f64 = spec.tau.iter().map(|s| s * s).sum();
            assert_abs_diff_eq!(s2 + t2, FOUR_PI, epsilon = 1e-11);
            let g = gamma(kappa).unwrap();
            assert!((t2 / s2 - 8.0 / (g - 2.0).powi(2)).abs() < 1e-10 * (t2 / s2).max(1.0));
            assert!(equality_residual(&c, kappa).unwrap().abs() < 1e-10);
        }
    }

    #[test]
    fn table_csv_and_errors() {
        let rows = gamma_table(-1.0, 1.0, 3).unwrap();
        let mut buf = Vec::new();
        write_gamma_table(&rows, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines[0], "kappa,gamma,gamma_plus,shifted");
        assert!(lines[2].ends_with(','), "shifted empty at kappa = 0: {}", lines[2]);
        assert!(!lines[1].ends_with(','));
        assert!(gamma_table(1.0, -1.0, 3).is_err());
        assert!(gamma_table(0.0, 1.0, 0).is_err());
        assert!(gamma_table(0.0, 1.0, 1).is_err());
        assert_eq!(gamma_table(2.0, 2.0, 1).unwrap().len(), 1);
    }
}
