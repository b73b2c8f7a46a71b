//! Invariant batteries behind `verify`.

use std::sync::Arc;

use anyhow::Result;
use clap::ValueEnum;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use sphere_poincare::eigensolver::{gamma_numeric, numeric_minimizer, numeric_minimizer_random};
use sphere_poincare::grid::{dirichlet_energy_scalar_route, Grid, SampledVectorField};
use sphere_poincare::sharp::{
    build_minimizer, equality_residual, gamma, membership_check, FreeParams, Regime,
};
use sphere_poincare::spectral::{
    dirichlet_energy, energy_report, g_kappa, norm_sq, random_normalized, random_tangential,
    EnergyInput,
};
use sphere_poincare::vsh::{analyze, synthesize, CoeffSet, ModeIndex, VshTable};
use sphere_poincare::{Execution, FOUR_PI};

use crate::report::RunReport;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    Orthonormality,
    EnergyRoutes,
    Inequality,
    Equality,
    Lemma,
}

pub struct SuiteOptions {
    pub seed: u64,
    pub samples: Option<usize>,
    pub tol: Option<f64>,
    pub band: Option<usize>,
    pub kappas: Vec<f64>,
}

impl SuiteOptions {
    fn rng(&self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.seed)
    }
}

pub fn run(suite: Suite, opts: &SuiteOptions, report: &mut RunReport) -> Result<()> {
    report.param("suite", suite);
    report.param("seed", opts.seed);
    match suite {
        Suite::Orthonormality => orthonormality(opts, report),
        Suite::EnergyRoutes => energy_routes(opts, report),
        Suite::Inequality => inequality(opts, report),
        Suite::Equality => equality(opts, report),
        Suite::Lemma => lemma(opts, report),
    }
}

fn orthonormality(opts: &SuiteOptions, report: &mut RunReport) -> Result<()> {
    let band = opts.band.unwrap_or(6);
    let tol = opts.tol.unwrap_or(1e-10);
    let samples = opts.samples.unwrap_or(50);
    report.param("band", band);
    report.param("samples", samples);

    let table = VshTable::new(Arc::new(Grid::for_band(band)), band)?;
    let m = table.modes.len();
    let w = &table.weights;
    let worst = Execution::default()
        .map_range(m, |a| {
            let ra = table.row(a);
            (a..m)
                .map(|b| {
                    let rb = table.row(b);
                    let g: f64 = (0..w.len()).map(|k| w[k] * ra[k].dot(&rb[k])).sum();
                    (g - if a == b { 1.0 } else { 0.0 }).abs()
                })
                .fold(0.0, f64::max)
        })
        .into_iter()
        .fold(0.0, f64::max);
    report.output("gram_size", m);
    report.at_most("gram matrix deviation from identity", worst, tol);

    let trip_band = band.min(4);
    let grid = Arc::new(Grid::for_band(trip_band));
    let mut rng = opts.rng();
    let mut trip: f64 = 0.0;
    for _ in 0..samples {
        let c = random_normalized(trip_band, &mut rng);
        let back = analyze(&synthesize(&c, grid.clone())?, trip_band)?;
        for (mode, v) in c.iter() {
            trip = trip.max((back.get(mode) - v).abs());
        }
    }
    report.at_most("analyze after synthesize round trip", trip, tol * 0.1);
    Ok(())
}

fn energy_routes(opts: &SuiteOptions, report: &mut RunReport) -> Result<()> {
    let band = opts.band.unwrap_or(4);
    let tol = opts.tol.unwrap_or(1e-8);
    let samples = opts.samples.unwrap_or(100);
    let kappas = if opts.kappas.is_empty() {
        vec![-8.0, -4.0, 0.0, 6.0]
    } else {
        opts.kappas.clone()
    };
    report.param("band", band);
    report.param("samples", samples);
    report.param("kappas", &kappas);

    let grid = Arc::new(Grid::for_band(band));
    let table = VshTable::new(grid.clone(), band)?;
    let mut rng = opts.rng();
    let mut worst: f64 = 0.0;
    for _ in 0..samples {
        let c = random_normalized(band, &mut rng);
        let u = table.synthesize(&c, Execution::default());
        for &kappa in &kappas {
            let r = energy_report(EnergyInput::Field { field: &u, band }, kappa)?;
            worst = worst.max(r.max_rel_diff.unwrap_or(f64::INFINITY));
        }
    }
    report.at_most("max relative gap between spectral and quadrature routes", worst, tol);

    let n = SampledVectorField::normal(grid);
    let dn = dirichlet_energy_scalar_route(&n, band)?;
    report.at_most("Dirichlet energy of the normal field minus 8 pi", (dn - 2.0 * FOUR_PI).abs(), 1e-10);
    let normal = CoeffSet::zeros(0).with(1, 0, 0, FOUR_PI.sqrt())?;
    let anchor = kappas
        .iter()
        .map(|&k| (g_kappa(&normal, k) - FOUR_PI * (k + 2.0)).abs())
        .fold(0.0, f64::max);
    report.at_most("energy of the normal field minus 4 pi (kappa + 2)", anchor, 1e-10);
    Ok(())
}

fn inequality(opts: &SuiteOptions, report: &mut RunReport) -> Result<()> {
    let band = opts.band.unwrap_or(6);
    let tol = opts.tol.unwrap_or(1e-9);
    let samples = opts.samples.unwrap_or(1000);
    let kappas = if opts.kappas.is_empty() {
        (0..21).map(|k| -10.0 + k as f64).collect()
    } else {
        opts.kappas.clone()
    };
    report.param("band", band);
    report.param("samples", samples);
    report.param("kappas", &kappas);

    let mut rng = opts.rng();
    let sets: Vec<CoeffSet> = (0..samples).map(|_| random_normalized(band, &mut rng)).collect();
    let mut margin = f64::INFINITY;
    for &kappa in &kappas {
        let floor = FOUR_PI * gamma(kappa)?;
        margin = Execution::default()
            .map_slice(&sets, |c| g_kappa(c, kappa) - floor)
            .into_iter()
            .fold(margin, f64::min);
    }
    report.at_least("min of G - 4 pi gamma over samples", margin, -tol);

    let tangential: Vec<CoeffSet> = (0..samples.clamp(1, 500))
        .map(|_| random_tangential(band.max(1), &mut rng))
        .collect();
    let t_margin = tangential
        .iter()
        .map(|c| dirichlet_energy(c) - 2.0 * norm_sq(c))
        .fold(f64::INFINITY, f64::min);
    report.at_least("min of D - 2 |u|^2 over tangential samples", t_margin, -tol);
    Ok(())
}

fn critical_samples() -> Vec<FreeParams> {
    [0.0, 0.4, 1.1, std::f64::consts::FRAC_PI_2]
        .iter()
        .map(|&a| FreeParams::critical_from_angle(a, [0.3, -0.5, 0.8]))
        .collect()
}

fn equality(opts: &SuiteOptions, report: &mut RunReport) -> Result<()> {
    let tol = opts.tol.unwrap_or(1e-10);
    let kappas = if opts.kappas.is_empty() {
        vec![-8.0, -4.5, -4.0, -3.9, 0.0, 6.0, 100.0]
    } else {
        opts.kappas.clone()
    };
    report.param("kappas", &kappas);
    let mut res: f64 = 0.0;
    let mut norm: f64 = 0.0;
    let mut non_members = 0usize;
    for &kappa in &kappas {
        let params = match Regime::classify(kappa) {
            Regime::Below => vec![FreeParams::Below { positive: true }, FreeParams::Below { positive: false }],
            Regime::Critical => critical_samples(),
            Regime::Above => vec![
                FreeParams::Above { direction: [0.0, 1.0, 0.0] },
                FreeParams::Above { direction: [1.0, -2.0, 0.5] },
            ],
        };
        for p in params {
            let (_, c) = build_minimizer(kappa, p)?;
            res = res.max(equality_residual(&c, kappa)?.abs());
            norm = norm.max((norm_sq(&c) - FOUR_PI).abs());
        }
        if !membership_check(&numeric_minimizer(kappa, 20), kappa, 1e-8) {
            non_members += 1;
        }
    }
    report.at_most("max |G - 4 pi gamma| on the equality family", res, tol);
    report.at_most("max | |u|^2 - 4 pi | on the equality family", norm, tol);
    report.at_most("numeric minimizers outside the family", non_members as f64, 0.0);
    Ok(())
}

fn lemma(opts: &SuiteOptions, report: &mut RunReport) -> Result<()> {
    let tol = opts.tol.unwrap_or(1e-12);
    let max_degree = opts.band.unwrap_or(20);
    report.param("kappa_range", [-50.0, 50.0]);
    report.param("max_degree", max_degree);
    let allowed: Vec<ModeIndex> = [(1, 0, 0), (1, 1, -1), (1, 1, 0), (1, 1, 1), (2, 1, -1), (2, 1, 0), (2, 1, 1)]
        .iter()
        .map(|&(i, n, j)| ModeIndex::new(i, n, j))
        .collect::<std::result::Result<_, _>>()?;
    let mut rng = opts.rng();
    let mut outside: f64 = 0.0;
    let mut sign_gap: f64 = 0.0;
    let mut gamma_gap: f64 = 0.0;
    for k in 0..=1000 {
        let kappa = -50.0 + 0.1 * k as f64;
        gamma_gap = gamma_gap.max((gamma_numeric(kappa, max_degree).value - gamma(kappa)?).abs());
        for c in [
            numeric_minimizer(kappa, max_degree),
            numeric_minimizer_random(kappa, max_degree, &mut rng),
        ] {
            outside = outside.max(c.max_abs_outside(&allowed));
            for j in -1..=1 {
                let (a, b) = (c.coeff(1, 1, j), c.coeff(2, 1, j));
                // opposite signs contribute the smaller magnitude
                if a * b < 0.0 {
                    sign_gap = sign_gap.max(a.abs().min(b.abs()));
                }
            }
        }
    }
    report.at_most("max |coefficient| off the n <= 1, i <= 2 channels", outside, tol);
    report.at_most("max sign disagreement of u1 and u2 at n = 1", sign_gap, tol);
    report.at_most("max |numeric gamma - closed gamma|", gamma_gap, tol);
    Ok(())
}
