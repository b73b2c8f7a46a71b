//! Energies in coefficient space.
//!
//! For `u = Σ û⁽ⁱ⁾(n,j) y⁽ⁱ⁾ₙⱼ`, with `n* = n(n+1)`:
//!
//! ```text
//! ∫|∇*u|²   = Σ (n*+2) û₁² − 4√n* û₁û₂ + n* û₂² + n* û₃²
//! ∫(u·n)²   = Σ û₁²
//! G_κ(û)    = Σ (n*−2+κ) û₁² + (2û₁ − √n* û₂)² + n* û₃²
//! ∫|u|²     = Σ û₁² + û₂² + û₃²
//! ```
//!
//! The quadrature route in [`energy_report`] never uses these identities: it
//! differentiates each Cartesian component through the scalar harmonic
//! analysis of [`crate::grid`].

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{dirichlet_energy_with_table, SampledVectorField, ScalarTable};
use crate::legendre::DegreeOrder;
use crate::par::Execution;
use crate::vsh::{require_analysis, CoeffSet, ModeIndex, VshTable};
use crate::{n_star, FOUR_PI};

#[inline]
fn per_degree(c: &CoeffSet, mut f: impl FnMut(f64, f64, f64, f64) -> f64) -> f64 {
    let (a, b, d) = (c.family(1), c.family(2), c.family(3));
    (0..a.len())
        .map(|k| f(n_star(DegreeOrder::from_index(k).n), a[k], b[k], d[k]))
        .sum()
}

/// `∫|∇*u|²` from coefficients.
pub fn dirichlet_energy(c: &CoeffSet) -> f64 {
    per_degree(c, |ns, u1, u2, u3| {
        (ns + 2.0) * u1 * u1 - 4.0 * ns.sqrt() * u1 * u2 + ns * u2 * u2 + ns * u3 * u3
    })
}

/// `∫(u·n)²` from coefficients.
pub fn anisotropy_energy(c: &CoeffSet) -> f64 {
    c.family(1).iter().map(|v| v * v).sum()
}

/// `G_κ(û)`.
pub fn g_kappa(c: &CoeffSet, kappa: f64) -> f64 {
    per_degree(c, |ns, u1, u2, u3| {
        let mix = 2.0 * u1 - ns.sqrt() * u2;
        (ns - 2.0 + kappa) * u1 * u1 + mix * mix + ns * u3 * u3
    })
}

/// `⟨û, û⟩ = ∫|u|²`.
pub fn norm_sq(c: &CoeffSet) -> f64 {
    (1..=3).flat_map(|f| c.family(f)).map(|v| v * v).sum()
}

/// `∫|u × n|² = ∫|u|² − ∫(u·n)²`.
pub fn tangential_norm_sq(c: &CoeffSet) -> f64 {
    (2..=3).flat_map(|f| c.family(f)).map(|v| v * v).sum()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Route {
    Spectral,
    Quadrature,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergyBreakdown {
    pub dirichlet: f64,
    pub anisotropy: f64,
    pub total: f64,
    pub norm_sq: f64,
    pub kappa: f64,
    pub route: Route,
}

impl EnergyBreakdown {
    pub fn new(dirichlet: f64, anisotropy: f64, norm_sq: f64, kappa: f64, route: Route) -> Self {
        Self {
            dirichlet,
            anisotropy,
            total: dirichlet + kappa * anisotropy,
            norm_sq,
            kappa,
            route,
        }
    }

    pub fn from_coeffs(c: &CoeffSet, kappa: f64) -> Self {
        Self::new(
            dirichlet_energy(c),
            anisotropy_energy(c),
            norm_sq(c),
            kappa,
            Route::Spectral,
        )
    }

    /// Energy per unit `∫|u|²`; `None` for the zero field.
    pub fn rayleigh_quotient(&self) -> Option<f64> {
        (self.norm_sq > 0.0).then(|| self.total / self.norm_sq)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("plain numeric record")
    }
}

/// What to report on.
pub enum EnergyInput<'a> {
    Coeffs(&'a CoeffSet),
    /// Samples plus the band used for the spectral analysis.
    Field {
        field: &'a SampledVectorField,
        band: usize,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergyReport {
    pub spectral: EnergyBreakdown,
    pub quadrature: Option<EnergyBreakdown>,
    /// Largest relative disagreement between the two routes over
    /// dirichlet, anisotropy, total and norm.
    pub max_rel_diff: Option<f64>,
    pub tolerance: f64,
}

impl EnergyReport {
    pub fn routes_agree(&self) -> bool {
        self.max_rel_diff.is_none_or(|d| d <= self.tolerance)
    }
}

/// Default relative tolerance for route agreement.
pub const ROUTE_TOLERANCE: f64 = 1e-8;

fn rel_diff(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1.0)
}

/// Fills the spectral breakdown and, for sampled input, the independent
/// quadrature breakdown. Route disagreement is a diagnostic, not an error.
pub fn energy_report(input: EnergyInput<'_>, kappa: f64) -> Result<EnergyReport> {
    if !kappa.is_finite() {
        return Err(Error::InvalidParameter(format!("kappa = {kappa}")));
    }
    match input {
        EnergyInput::Coeffs(c) => Ok(EnergyReport {
            spectral: EnergyBreakdown::from_coeffs(c, kappa),
            quadrature: None,
            max_rel_diff: None,
            tolerance: ROUTE_TOLERANCE,
        }),
        EnergyInput::Field { field, band } => {
            require_analysis(&field.grid, band)?;
            let exec = Execution::default();
            let vsh = VshTable::with_execution(field.grid.clone(), band, exec)?;
            let c = vsh.analyze(field, exec)?;
            let spectral = EnergyBreakdown::from_coeffs(&c, kappa);
            // Cartesian components of band-N vector harmonics reach degree N+1.
            let scalar = ScalarTable::with_execution(field.grid.clone(), band + 1, exec)?;
            let quadrature = EnergyBreakdown::new(
                dirichlet_energy_with_table(field, &scalar, exec)?,
                field.normal_energy(),
                field.norm_sq(),
                kappa,
                Route::Quadrature,
            );
            let diff = [
                rel_diff(spectral.dirichlet, quadrature.dirichlet),
                rel_diff(spectral.anisotropy, quadrature.anisotropy),
                rel_diff(spectral.total, quadrature.total),
                rel_diff(spectral.norm_sq, quadrature.norm_sq),
            ]
            .into_iter()
            .fold(0.0, f64::max);
            Ok(EnergyReport {
                spectral,
                quadrature: Some(quadrature),
                max_rel_diff: Some(diff),
                tolerance: ROUTE_TOLERANCE,
            })
        }
    }
}

/// Rescales `c` so that `∫|u|² = 4π`. Errors on the zero set.
pub fn normalize(c: &CoeffSet) -> Result<CoeffSet> {
    let n = norm_sq(c);
    if !(n > 0.0) || !n.is_finite() {
        return Err(Error::NotNormalized { norm_sq: n });
    }
    Ok(c.scale((FOUR_PI / n).sqrt()))
}

/// Independent standard normal entries on every mode up to `band`, rescaled
/// onto the constraint sphere `∫|u|² = 4π`.
pub fn random_normalized<R: Rng + ?Sized>(band: usize, rng: &mut R) -> CoeffSet {
    random_on_families(band, &[1, 2, 3], rng)
}

/// As [`random_normalized`] but with the radial family left at zero.
pub fn random_tangential<R: Rng + ?Sized>(band: usize, rng: &mut R) -> CoeffSet {
    random_on_families(band, &[2, 3], rng)
}

fn random_on_families<R: Rng + ?Sized>(band: usize, families: &[u8], rng: &mut R) -> CoeffSet {
    assert!(band >= 1 || families.contains(&1), "empty mode set");
    loop {
        let mut c = CoeffSet::zeros(band);
        for m in ModeIndex::all(band).filter(|m| families.contains(&m.family())) {
            let v: f64 = rng.sample(StandardNormal);
            c.set(m, v).expect("mode within band");
        }
        if let Ok(c) = normalize(&c) {
            return c;
        }
    }
}
