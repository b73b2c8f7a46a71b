//! Real vector spherical harmonics.
//!
//! ```text
//! y⁽¹⁾ₙⱼ = Yₙⱼ n
//! y⁽²⁾ₙⱼ = ∇*Yₙⱼ / √n*,   ∇* = εφ (1/√(1−t²)) ∂φ + εᵗ √(1−t²) ∂ₜ
//! y⁽³⁾ₙⱼ = n × y⁽²⁾ₙⱼ
//! ```
//!
//! The families `2` and `3` start at degree 1. Coefficient tables are dense
//! per family; the degree-0 slots of families 2 and 3 exist in storage but
//! are always zero and cannot be written.

use std::fmt;
use std::io::{Read, Write};
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::grid::{check_same_grid, tangent_frame, Grid, SampledVectorField, ScalarTable};
use crate::legendre::{scalar_sh, scalar_sh_grad_components, DegreeOrder, MAX_BAND};
use crate::par::Execution;
use crate::{n_star, Vec3};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ModeIndex {
    family: u8,
    n: usize,
    j: i64,
}

impl ModeIndex {
    pub fn new(family: u8, n: usize, j: i64) -> Result<Self> {
        let valid = (1..=3).contains(&family)
            && j.unsigned_abs() as usize <= n
            && (family == 1 || n >= 1);
        if !valid {
            return Err(Error::InvalidMode {
                family,
                degree: n,
                order: j,
            });
        }
        Ok(Self { family, n, j })
    }

    pub fn family(self) -> u8 {
        self.family
    }

    pub fn n(self) -> usize {
        self.n
    }

    pub fn j(self) -> i64 {
        self.j
    }

    pub fn degree_order(self) -> DegreeOrder {
        DegreeOrder {
            n: self.n,
            j: self.j,
        }
    }

    /// All modes with `n ≤ band`, ordered by degree, then order, then family.
    pub fn all(band: usize) -> impl Iterator<Item = ModeIndex> {
        DegreeOrder::all(band).flat_map(|dj| {
            let families: &[u8] = if dj.n == 0 { &[1] } else { &[1, 2, 3] };
            families.iter().map(move |&family| ModeIndex {
                family,
                n: dj.n,
                j: dj.j,
            })
        })
    }

    pub fn count(band: usize) -> usize {
        3 * DegreeOrder::count(band) - 2
    }
}

impl fmt::Display for ModeIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "y{}[{},{}]", self.family, self.n, self.j)
    }
}

/// Band-limited coefficient table `û⁽ⁱ⁾(n, j)`.
#[derive(Clone, Debug, PartialEq)]
pub struct CoeffSet {
    band: usize,
    data: [Vec<f64>; 3],
}

impl CoeffSet {
    pub fn zeros(band: usize) -> Self {
        let len = DegreeOrder::count(band);
        Self {
            band,
            data: [vec![0.0; len], vec![0.0; len], vec![0.0; len]],
        }
    }

    pub fn band(&self) -> usize {
        self.band
    }

    pub fn get(&self, mode: ModeIndex) -> f64 {
        if mode.n > self.band {
            return 0.0;
        }
        self.data[(mode.family - 1) as usize][mode.degree_order().index()]
    }

    /// Convenience lookup that returns zero for invalid or out-of-band indices.
    pub fn coeff(&self, family: u8, n: usize, j: i64) -> f64 {
        ModeIndex::new(family, n, j).map_or(0.0, |m| self.get(m))
    }

    pub fn set(&mut self, mode: ModeIndex, value: f64) -> Result<()> {
        if mode.n > self.band {
            return Err(Error::InvalidParameter(format!(
                "{mode} above band {}",
                self.band
            )));
        }
        if !value.is_finite() {
            return Err(Error::InvalidParameter(format!("non-finite value for {mode}")));
        }
        self.data[(mode.family - 1) as usize][mode.degree_order().index()] = value;
        Ok(())
    }

    /// Builder form of [`CoeffSet::set`] for literal tables.
    pub fn with(mut self, family: u8, n: usize, j: i64, value: f64) -> Result<Self> {
        self.set(ModeIndex::new(family, n, j)?, value)?;
        Ok(self)
    }

    /// Per-family slice indexed by [`DegreeOrder::index`]; family in `1..=3`.
    pub fn family(&self, family: u8) -> &[f64] {
        &self.data[(family - 1) as usize]
    }

    pub fn iter(&self) -> impl Iterator<Item = (ModeIndex, f64)> + '_ {
        ModeIndex::all(self.band).map(move |m| (m, self.get(m)))
    }

    pub fn scale(&self, a: f64) -> Self {
        let mut out = self.clone();
        out.data.iter_mut().flatten().for_each(|v| *v *= a);
        out
    }

    /// `a·self + b·other`, with the band of the larger operand.
    pub fn combine(&self, a: f64, other: &CoeffSet, b: f64) -> CoeffSet {
        let mut out = CoeffSet::zeros(self.band.max(other.band));
        for (m, v) in ModeIndex::all(out.band).map(|m| (m, a * self.get(m) + b * other.get(m))) {
            out.data[(m.family - 1) as usize][m.degree_order().index()] = v;
        }
        out
    }

    /// Largest absolute coefficient outside the given set of modes.
    pub fn max_abs_outside(&self, support: &[ModeIndex]) -> f64 {
        self.iter()
            .filter(|(m, _)| !support.contains(m))
            .map(|(_, v)| v.abs())
            .fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().flatten().all(|v| v.is_finite())
    }

    /// Writes `i,n,j,value` for every mode up to the band.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["i", "n", "j", "value"])?;
        for (m, v) in self.iter() {
            w.write_record(&[
                m.family.to_string(),
                m.n.to_string(),
                m.j.to_string(),
                v.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    /// Reads `i,n,j,value` rows. Invalid modes, duplicates and rows above
    /// `band` (when given) are rejected; absent modes are zero. Without an
    /// explicit band the largest degree present is used.
    pub fn read_csv<R: Read>(input: R, band: Option<usize>) -> Result<Self> {
        #[derive(serde::Deserialize)]
        struct Row {
            i: u8,
            n: usize,
            j: i64,
            value: f64,
        }
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
        let headers = rdr.headers()?.clone();
        if headers.iter().collect::<Vec<_>>() != ["i", "n", "j", "value"] {
            return Err(Error::Parse(format!("unexpected header {headers:?}")));
        }
        let mut rows = Vec::new();
        for rec in rdr.deserialize() {
            let row: Row = rec?;
            let mode = ModeIndex::new(row.i, row.n, row.j)?;
            rows.push((mode, row.value));
        }
        let band = match band {
            Some(b) => b,
            None => rows.iter().map(|(m, _)| m.n).max().unwrap_or(0),
        };
        if band > MAX_BAND {
            return Err(Error::InvalidParameter(format!("band {band} exceeds {MAX_BAND}")));
        }
        let mut out = CoeffSet::zeros(band);
        let mut seen = std::collections::HashSet::new();
        for (mode, value) in rows {
            if !seen.insert(mode) {
                return Err(Error::Parse(format!("duplicate row for {mode}")));
            }
            out.set(mode, value)?;
        }
        Ok(out)
    }
}

/// `y⁽ⁱ⁾ₙⱼ(φ, t)` at an interior point.
pub fn eval_vsh(mode: ModeIndex, phi: f64, t: f64) -> Result<Vec3> {
    let frame = tangent_frame(phi, t)?;
    let (n, j) = (mode.n, mode.j);
    if mode.family == 1 {
        return Ok(frame.normal * scalar_sh(n, j, phi, t)?);
    }
    let (d_phi, d_t) = scalar_sh_grad_components(n, j, phi, t)?;
    let y2 = tangential(&frame.eps_phi, &frame.eps_t, n, t, d_phi, d_t);
    Ok(match mode.family {
        2 => y2,
        _ => frame.normal.cross(&y2),
    })
}

#[inline]
fn tangential(eps_phi: &Vec3, eps_t: &Vec3, n: usize, t: f64, d_phi: f64, d_t: f64) -> Vec3 {
    let s = (1.0 - t * t).sqrt();
    (eps_phi * (d_phi / s) + eps_t * (s * d_t)) / n_star(n).sqrt()
}

/// Every vector harmonic with `n ≤ band` tabulated on a grid, mode-major in
/// [`ModeIndex::all`] order.
#[derive(Clone, Debug)]
pub struct VshTable {
    pub grid: Arc<Grid>,
    pub band: usize,
    pub modes: Vec<ModeIndex>,
    pub weights: Vec<f64>,
    pub values: Vec<Vec3>,
}

impl VshTable {
    pub fn new(grid: Arc<Grid>, band: usize) -> Result<Self> {
        Self::with_execution(grid, band, Execution::default())
    }

    pub fn with_execution(grid: Arc<Grid>, band: usize, exec: Execution) -> Result<Self> {
        let scalar = ScalarTable::with_execution(grid.clone(), band, exec)?;
        let nodes = grid.len();
        let frames: Vec<_> = grid
            .nodes()
            .map(|n| tangent_frame(n.phi, n.t))
            .collect::<Result<_>>()?;
        let modes: Vec<ModeIndex> = ModeIndex::all(band).collect();
        let rows = exec.map_slice(&modes, |m| {
            let s = m.degree_order().index() * nodes;
            (0..nodes)
                .map(|k| {
                    let f = &frames[k];
                    let t = grid.node(k).t;
                    match m.family {
                        1 => f.normal * scalar.value[s + k],
                        fam => {
                            let y2 = tangential(&f.eps_phi, &f.eps_t, m.n, t, scalar.d_phi[s + k], scalar.d_t[s + k]);
                            if fam == 2 {
                                y2
                            } else {
                                f.normal.cross(&y2)
                            }
                        }
                    }
                })
                .collect::<Vec<_>>()
        });
        Ok(Self {
            weights: scalar.weights,
            grid,
            band,
            modes,
            values: rows.into_iter().flatten().collect(),
        })
    }

    #[inline]
    pub fn row(&self, mode: usize) -> &[Vec3] {
        let n = self.grid.len();
        &self.values[mode * n..(mode + 1) * n]
    }

    pub fn field(&self, mode: usize) -> SampledVectorField {
        SampledVectorField {
            grid: self.grid.clone(),
            values: self.row(mode).to_vec(),
        }
    }

    pub fn position(&self, mode: ModeIndex) -> Option<usize> {
        self.modes.iter().position(|&m| m == mode)
    }

    pub fn synthesize(&self, c: &CoeffSet, exec: Execution) -> SampledVectorField {
        let nodes = self.grid.len();
        let active: Vec<(usize, f64)> = self
            .modes
            .iter()
            .enumerate()
            .map(|(k, &m)| (k, c.get(m)))
            .filter(|&(_, v)| v != 0.0)
            .collect();
        let mut values = vec![Vec3::zeros(); nodes];
        exec.fill(&mut values, |node| {
            active
                .iter()
                .fold(Vec3::zeros(), |acc, &(k, v)| acc + self.values[k * nodes + node] * v)
        });
        SampledVectorField {
            grid: self.grid.clone(),
            values,
        }
    }

    pub fn analyze(&self, u: &SampledVectorField, exec: Execution) -> Result<CoeffSet> {
        check_same_grid(&u.grid, &self.grid)?;
        let wu: Vec<Vec3> = u
            .values
            .iter()
            .zip(&self.weights)
            .map(|(v, w)| v * *w)
            .collect();
        let coeffs = exec.map_range(self.modes.len(), |k| {
            self.row(k).iter().zip(&wu).map(|(y, v)| y.dot(v)).sum::<f64>()
        });
        let mut out = CoeffSet::zeros(self.band);
        for (m, v) in self.modes.iter().zip(coeffs) {
            out.set(*m, v)?;
        }
        Ok(out)
    }
}

/// Samples `Σ û⁽ⁱ⁾(n,j) y⁽ⁱ⁾ₙⱼ` on `grid`.
pub fn synthesize(c: &CoeffSet, grid: Arc<Grid>) -> Result<SampledVectorField> {
    grid.require_band(c.band(), "vector synthesis")?;
    let table = VshTable::new(grid, c.band())?;
    Ok(table.synthesize(c, Execution::default()))
}

/// `û⁽ⁱ⁾(n,j) = (u, y⁽ⁱ⁾ₙⱼ)` for `n ≤ band`. The grid must integrate products
/// of two band-`band` vector fields exactly.
pub fn analyze(u: &SampledVectorField, band: usize) -> Result<CoeffSet> {
    require_analysis(&u.grid, band)?;
    let table = VshTable::new(u.grid.clone(), band)?;
    table.analyze(u, Execution::default())
}

/// Cartesian components of band-`N` vector harmonics are spherical
/// polynomials of degree `N+1`, so exact analysis needs degree `2N+2`.
pub fn require_analysis(grid: &Grid, band: usize) -> Result<()> {
    if !grid.resolves_degree(2 * band + 2) {
        return Err(Error::UnderResolved {
            grid: grid.shape(),
            what: "vector analysis".into(),
            min_t: band + 2,
            min_phi: 2 * band + 3,
        });
    }
    Ok(())
}
