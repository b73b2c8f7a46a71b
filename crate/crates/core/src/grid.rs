//! Quadrature on the unit sphere.
//!
//! Nodes are the tensor product of an `n_t`-point Gauss–Legendre rule in
//! `t = cos θ` and `n_phi` uniform longitudes. The rule integrates
//! `tᵃ cos(bφ)` exactly for `a ≤ 2 n_t − 1` and `b < n_phi`, and never
//! touches the poles.
//!
//! The scalar-harmonic analysis here works per Cartesian component and knows
//! nothing about vector harmonics; it is the reference route for every
//! Dirichlet-energy identity checked elsewhere in the crate.

use std::f64::consts::PI;
use std::io::Write;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::legendre::{scalar_sh_all, DegreeOrder, MAX_BAND};
use crate::par::Execution;
use crate::{n_star, Vec3};

/// Gauss–Legendre nodes and weights on `[−1, 1]`, ascending in `t`.
pub fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    let mut out = vec![(0.0, 0.0); n];
    let m = n.div_ceil(2);
    for i in 0..m {
        // Tricomi initial guess, then Newton on P_n
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        if d.is_finite() {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        out[i] = (-x, w);
        out[n - 1 - i] = (x, w);
    }
    if n % 2 == 1 {
        out[n / 2].0 = 0.0;
    }
    out
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    (p1, n as f64 * (x * p1 - p0) / (x * x - 1.0))
}

/// One quadrature node.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Node {
    pub phi: f64,
    pub t: f64,
    pub weight: f64,
}

impl Node {
    /// Point `σ(φ, t)` on the sphere, equal to the outward normal there.
    pub fn normal(&self) -> Vec3 {
        let s = (1.0 - self.t * self.t).sqrt();
        Vec3::new(s * self.phi.cos(), s * self.phi.sin(), self.t)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Grid {
    n_t: usize,
    n_phi: usize,
    nodes_t: Vec<(f64, f64)>,
    phis: Vec<f64>,
}

impl Grid {
    pub fn new(n_t: usize, n_phi: usize) -> Result<Self> {
        if n_t == 0 || n_phi == 0 {
            return Err(Error::InvalidParameter(format!(
                "grid sizes must be positive, got ({n_t}, {n_phi})"
            )));
        }
        let phis = (0..n_phi)
            .map(|k| 2.0 * PI * k as f64 / n_phi as f64)
            .collect();
        Ok(Self {
            n_t,
            n_phi,
            nodes_t: gauss_legendre(n_t),
            phis,
        })
    }

    /// Default oversampled grid `(2N+2, 4N+3)` for band limit `N`.
    pub fn for_band(band: usize) -> Self {
        Self::new(2 * band + 2, 4 * band + 3).expect("positive sizes")
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.n_t, self.n_phi)
    }

    pub fn n_t(&self) -> usize {
        self.n_t
    }

    pub fn n_phi(&self) -> usize {
        self.n_phi
    }

    pub fn nodes_t(&self) -> &[(f64, f64)] {
        &self.nodes_t
    }

    pub fn phis(&self) -> &[f64] {
        &self.phis
    }

    pub fn len(&self) -> usize {
        self.n_t * self.n_phi
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Node `k`, row-major in (t-index, φ-index).
    #[inline]
    pub fn node(&self, k: usize) -> Node {
        let (it, ip) = (k / self.n_phi, k % self.n_phi);
        let (t, wt) = self.nodes_t[it];
        Node {
            phi: self.phis[ip],
            t,
            weight: wt * 2.0 * PI / self.n_phi as f64,
        }
    }

    pub fn nodes(&self) -> impl Iterator<Item = Node> + '_ {
        (0..self.len()).map(move |k| self.node(k))
    }

    pub fn total_weight(&self) -> f64 {
        self.nodes().map(|n| n.weight).sum()
    }

    /// Whether products of spherical polynomials up to `degree` integrate exactly.
    pub fn resolves_degree(&self, degree: usize) -> bool {
        2 * self.n_t > degree && self.n_phi > degree
    }

    /// Largest band whose scalar analysis this grid performs exactly.
    pub fn max_band(&self) -> usize {
        (self.n_t - 1).min((self.n_phi - 1) / 2).min(MAX_BAND)
    }

    /// Errors unless band-`band` scalar analysis is exact for band-`band` inputs.
    pub fn require_band(&self, band: usize, what: &str) -> Result<()> {
        if band > MAX_BAND {
            return Err(Error::InvalidParameter(format!(
                "band limit {band} exceeds maximum {MAX_BAND}"
            )));
        }
        if !self.resolves_degree(2 * band) {
            return Err(Error::UnderResolved {
                grid: self.shape(),
                what: what.to_string(),
                min_t: band + 1,
                min_phi: 2 * band + 1,
            });
        }
        Ok(())
    }

    pub fn integrate(&self, f: &SampledScalarField) -> Result<f64> {
        check_same_grid(self, &f.grid)?;
        Ok(self
            .nodes()
            .zip(&f.values)
            .map(|(n, v)| n.weight * v)
            .sum())
    }
}

pub fn check_same_grid(a: &Grid, b: &Grid) -> Result<()> {
    if a.shape() != b.shape() {
        return Err(Error::GridMismatch {
            left: a.shape(),
            right: b.shape(),
        });
    }
    Ok(())
}

/// Right-handed orthonormal frame `(εφ, εᵗ, n)` at an interior point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TangentFrame {
    pub eps_phi: Vec3,
    pub eps_t: Vec3,
    pub normal: Vec3,
}

pub fn tangent_frame(phi: f64, t: f64) -> Result<TangentFrame> {
    if !(t.abs() < 1.0) {
        return Err(Error::Pole(t));
    }
    let s = (1.0 - t * t).sqrt();
    let (sp, cp) = phi.sin_cos();
    Ok(TangentFrame {
        eps_phi: Vec3::new(-sp, cp, 0.0),
        eps_t: Vec3::new(-t * cp, -t * sp, s),
        normal: Vec3::new(s * cp, s * sp, t),
    })
}

#[derive(Clone, Debug)]
pub struct SampledScalarField {
    pub grid: Arc<Grid>,
    pub values: Vec<f64>,
}

impl SampledScalarField {
    pub fn new(grid: Arc<Grid>, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::Shape {
                expected: grid.len(),
                got: values.len(),
            });
        }
        Ok(Self { grid, values })
    }

    pub fn from_fn(grid: Arc<Grid>, f: impl Fn(Node) -> f64) -> Self {
        let values = grid.nodes().map(f).collect();
        Self { grid, values }
    }

    pub fn integrate(&self) -> f64 {
        self.grid.integrate(self).expect("field lives on its own grid")
    }
}

#[derive(Clone, Debug)]
pub struct SampledVectorField {
    pub grid: Arc<Grid>,
    pub values: Vec<Vec3>,
}

impl SampledVectorField {
    pub fn new(grid: Arc<Grid>, values: Vec<Vec3>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::Shape {
                expected: grid.len(),
                got: values.len(),
            });
        }
        Ok(Self { grid, values })
    }

    pub fn from_fn(grid: Arc<Grid>, f: impl Fn(Node) -> Vec3) -> Self {
        let values = grid.nodes().map(f).collect();
        Self { grid, values }
    }

    pub fn zeros(grid: Arc<Grid>) -> Self {
        let values = vec![Vec3::zeros(); grid.len()];
        Self { grid, values }
    }

    /// The outward normal field `n(ξ) = ξ`.
    pub fn normal(grid: Arc<Grid>) -> Self {
        Self::from_fn(grid, |n| n.normal())
    }

    /// Cartesian component `k ∈ {0, 1, 2}` as a scalar field.
    pub fn component(&self, k: usize) -> SampledScalarField {
        SampledScalarField {
            grid: self.grid.clone(),
            values: self.values.iter().map(|v| v[k]).collect(),
        }
    }

    pub fn from_components(grid: Arc<Grid>, comps: [&[f64]; 3]) -> Result<Self> {
        for c in comps {
            if c.len() != grid.len() {
                return Err(Error::Shape {
                    expected: grid.len(),
                    got: c.len(),
                });
            }
        }
        let values = (0..grid.len())
            .map(|k| Vec3::new(comps[0][k], comps[1][k], comps[2][k]))
            .collect();
        Ok(Self { grid, values })
    }

    pub fn scale(&self, a: f64) -> Self {
        Self {
            grid: self.grid.clone(),
            values: self.values.iter().map(|v| v * a).collect(),
        }
    }

    pub fn axpy(&self, a: f64, other: &Self) -> Result<Self> {
        check_same_grid(&self.grid, &other.grid)?;
        Ok(Self {
            grid: self.grid.clone(),
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(u, v)| u + v * a)
                .collect(),
        })
    }

    /// `∫ |u|²`.
    pub fn norm_sq(&self) -> f64 {
        self.grid
            .nodes()
            .zip(&self.values)
            .map(|(n, v)| n.weight * v.norm_squared())
            .sum()
    }

    /// `∫ (u·n)²`.
    pub fn normal_energy(&self) -> f64 {
        self.grid
            .nodes()
            .zip(&self.values)
            .map(|(n, v)| n.weight * v.dot(&n.normal()).powi(2))
            .sum()
    }

    /// Largest pointwise Euclidean norm.
    pub fn max_norm(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Writes `phi,t,ux,uy,uz`, one row per node in grid order.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["phi", "t", "ux", "uy", "uz"])?;
        for (node, v) in self.grid.nodes().zip(&self.values) {
            w.write_record(&[
                node.phi.to_string(),
                node.t.to_string(),
                v.x.to_string(),
                v.y.to_string(),
                v.z.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// `∫ u·v`.
pub fn inner_product(u: &SampledVectorField, v: &SampledVectorField) -> Result<f64> {
    check_same_grid(&u.grid, &v.grid)?;
    Ok(u.grid
        .nodes()
        .zip(u.values.iter().zip(&v.values))
        .map(|(n, (a, b))| n.weight * a.dot(b))
        .sum())
}

/// Scalar harmonics and their partial derivatives tabulated on a grid.
///
/// Layout is mode-major: entry `(mode, node)` sits at `mode * grid.len() + node`.
#[derive(Clone, Debug)]
pub struct ScalarTable {
    pub grid: Arc<Grid>,
    pub band: usize,
    pub weights: Vec<f64>,
    pub value: Vec<f64>,
    pub d_phi: Vec<f64>,
    pub d_t: Vec<f64>,
}

impl ScalarTable {
    pub fn new(grid: Arc<Grid>, band: usize) -> Result<Self> {
        Self::with_execution(grid, band, Execution::default())
    }

    /// Tabulates without checking resolution; synthesis-only callers may use
    /// coarse grids.
    pub fn with_execution(grid: Arc<Grid>, band: usize, exec: Execution) -> Result<Self> {
        if band > MAX_BAND {
            return Err(Error::InvalidParameter(format!(
                "band limit {band} exceeds maximum {MAX_BAND}"
            )));
        }
        let nodes = grid.len();
        let modes = DegreeOrder::count(band);
        let per_node = exec.map_range(nodes, |k| {
            let node = grid.node(k);
            scalar_sh_all(band, node.phi, node.t)
        });
        let mut value = vec![0.0; modes * nodes];
        let mut d_phi = vec![0.0; modes * nodes];
        let mut d_t = vec![0.0; modes * nodes];
        for (k, h) in per_node.into_iter().enumerate() {
            let h = h?;
            for m in 0..modes {
                value[m * nodes + k] = h.value[m];
                d_phi[m * nodes + k] = h.d_phi[m];
                d_t[m * nodes + k] = h.d_t[m];
            }
        }
        let weights = grid.nodes().map(|n| n.weight).collect();
        Ok(Self {
            grid,
            band,
            weights,
            value,
            d_phi,
            d_t,
        })
    }

    pub fn modes(&self) -> usize {
        DegreeOrder::count(self.band)
    }

    #[inline]
    pub fn row(&self, mode: usize) -> &[f64] {
        let n = self.grid.len();
        &self.value[mode * n..(mode + 1) * n]
    }

    /// Coefficients `∫ f Y_{n,j}` for all `n ≤ band`.
    pub fn analyze(&self, f: &[f64], exec: Execution) -> Result<ScalarCoeffs> {
        if f.len() != self.grid.len() {
            return Err(Error::Shape {
                expected: self.grid.len(),
                got: f.len(),
            });
        }
        let wf: Vec<f64> = self.weights.iter().zip(f).map(|(w, v)| w * v).collect();
        let coeffs = exec.map_range(self.modes(), |m| {
            self.row(m).iter().zip(&wf).map(|(y, v)| y * v).sum()
        });
        Ok(ScalarCoeffs {
            band: self.band,
            coeffs,
        })
    }

    /// Pointwise `Σ c(n,j) Y_{n,j}`; coefficients above the table band are ignored.
    pub fn synthesize(&self, c: &ScalarCoeffs, exec: Execution) -> Vec<f64> {
        let nodes = self.grid.len();
        let modes = self.modes().min(c.coeffs.len());
        let mut out = vec![0.0; nodes];
        exec.fill(&mut out, |k| {
            (0..modes)
                .map(|m| c.coeffs[m] * self.value[m * nodes + k])
                .sum()
        });
        out
    }
}

/// Scalar harmonic coefficients indexed by [`DegreeOrder::index`].
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarCoeffs {
    pub band: usize,
    pub coeffs: Vec<f64>,
}

impl ScalarCoeffs {
    pub fn zeros(band: usize) -> Self {
        Self {
            band,
            coeffs: vec![0.0; DegreeOrder::count(band)],
        }
    }

    pub fn get(&self, n: usize, j: i64) -> f64 {
        DegreeOrder::new(n, j)
            .ok()
            .filter(|d| d.n <= self.band)
            .map_or(0.0, |d| self.coeffs[d.index()])
    }

    pub fn set(&mut self, n: usize, j: i64, v: f64) -> Result<()> {
        let d = DegreeOrder::new(n, j)?;
        if n > self.band {
            return Err(Error::Domain(format!("degree {n} above band {}", self.band)));
        }
        self.coeffs[d.index()] = v;
        Ok(())
    }

    /// `Σ n(n+1) c(n,j)²`.
    pub fn dirichlet(&self) -> f64 {
        self.coeffs
            .iter()
            .enumerate()
            .map(|(k, c)| n_star(DegreeOrder::from_index(k).n) * c * c)
            .sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = (DegreeOrder, f64)> + '_ {
        self.coeffs
            .iter()
            .enumerate()
            .map(|(k, &c)| (DegreeOrder::from_index(k), c))
    }
}

/// Scalar-harmonic coefficients of `f` up to degree `band`.
pub fn scalar_analyze(f: &SampledScalarField, band: usize) -> Result<ScalarCoeffs> {
    f.grid.require_band(band, "scalar analysis")?;
    let table = ScalarTable::new(f.grid.clone(), band)?;
    table.analyze(&f.values, Execution::default())
}

/// Samples `Σ c(n,j) Y_{n,j}` on a grid.
pub fn scalar_synthesize(c: &ScalarCoeffs, grid: Arc<Grid>) -> Result<SampledScalarField> {
    let table = ScalarTable::new(grid.clone(), c.band)?;
    let values = table.synthesize(c, Execution::default());
    SampledScalarField::new(grid, values)
}

/// `∫ |∇*u|²` computed per Cartesian component as `Σₖ Σ n* cₖ(n,j)²`.
pub fn dirichlet_energy_scalar_route(u: &SampledVectorField, band: usize) -> Result<f64> {
    u.grid.require_band(band, "Dirichlet energy")?;
    let table = ScalarTable::new(u.grid.clone(), band)?;
    dirichlet_energy_with_table(u, &table, Execution::default())
}

pub fn dirichlet_energy_with_table(
    u: &SampledVectorField,
    table: &ScalarTable,
    exec: Execution,
) -> Result<f64> {
    check_same_grid(&u.grid, &table.grid)?;
    let mut total = 0.0;
    for k in 0..3 {
        let comp: Vec<f64> = u.values.iter().map(|v| v[k]).collect();
        total += table.analyze(&comp, exec)?.dirichlet();
    }
    Ok(total)
}

/// `−Δ*u` per Cartesian component, truncated at the table band.
pub fn neg_laplacian(
    u: &SampledVectorField,
    table: &ScalarTable,
    exec: Execution,
) -> Result<SampledVectorField> {
    check_same_grid(&u.grid, &table.grid)?;
    let mut comps: [Vec<f64>; 3] = Default::default();
    for (k, out) in comps.iter_mut().enumerate() {
        let comp: Vec<f64> = u.values.iter().map(|v| v[k]).collect();
        let mut c = table.analyze(&comp, exec)?;
        for (idx, v) in c.coeffs.iter_mut().enumerate() {
            *v *= n_star(DegreeOrder::from_index(idx).n);
        }
        *out = table.synthesize(&c, exec);
    }
    SampledVectorField::from_components(u.grid.clone(), [&comps[0], &comps[1], &comps[2]])
}
