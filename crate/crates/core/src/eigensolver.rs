//! Numeric recovery of the sharp constant from the block structure of `G_κ`.
//!
//! `G_κ` decouples over `(n, j)`. For each degree the pair `(û₁, û₂)` sees the
//! symmetric matrix
//!
//! ```text
//! [ n*+2+κ   −2√n* ]
//! [ −2√n*      n*  ]
//! ```
//!
//! and `û₃` sees the scalar `n*`. At `n = 0` only `û₁(0,0)` exists, with
//! weight `κ + 2`. The constrained minimum of `G_κ / 4π` is the smallest of
//! all these eigenvalues. Nothing here consults the closed form in
//! [`crate::sharp`].

use std::f64::consts::SQRT_2;

use serde::Serialize;

use crate::par::Execution;
use crate::vsh::{CoeffSet, ModeIndex};
use crate::{n_star, FOUR_PI};

pub const DEFAULT_MAX_DEGREE: usize = 20;

/// Relative gap under which two channel eigenvalues count as tied.
pub const TIE_TOLERANCE: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SpectralBlock {
    /// `n = 0`: the scalar `κ + 2` acting on `û₁(0,0)`.
    Radial { kappa: f64 },
    /// `n ≥ 1`: the `(û₁, û₂)` matrix and the decoupled `û₃` eigenvalue.
    Coupled {
        n: usize,
        matrix: [[f64; 2]; 2],
        u3_eigenvalue: f64,
    },
}

impl SpectralBlock {
    pub fn n(&self) -> usize {
        match *self {
            SpectralBlock::Radial { .. } => 0,
            SpectralBlock::Coupled { n, .. } => n,
        }
    }

    pub fn trace(&self) -> f64 {
        match *self {
            SpectralBlock::Radial { kappa } => kappa + 2.0,
            SpectralBlock::Coupled { matrix, .. } => matrix[0][0] + matrix[1][1],
        }
    }
}

pub fn block(n: usize, kappa: f64) -> SpectralBlock {
    if n == 0 {
        return SpectralBlock::Radial { kappa };
    }
    let ns = n_star(n);
    let off = -2.0 * ns.sqrt();
    SpectralBlock::Coupled {
        n,
        matrix: [[ns + 2.0 + kappa, off], [off, ns]],
        u3_eigenvalue: ns,
    }
}

/// Smaller eigenvalue of a symmetric 2×2 matrix and its unit eigenvector,
/// signed so the first component is non-negative (second on a tie).
pub fn symmetric_min_eigenpair(m: [[f64; 2]; 2]) -> (f64, [f64; 2]) {
    eigenpair_with_off_sq(m, m[0][1] * m[0][1])
}

/// Same as [`symmetric_min_eigenpair`] with the squared off-diagonal supplied
/// exactly, which keeps integer-valued determinants free of rounding.
fn eigenpair_with_off_sq(m: [[f64; 2]; 2], b_sq: f64) -> (f64, [f64; 2]) {
    let (a, b, d) = (m[0][0], m[0][1], m[1][1]);
    let tr = a + d;
    let det = a * d - b_sq;
    let disc = ((a - d) * (a - d) + 4.0 * b_sq).sqrt();
    let value = if tr > 0.0 {
        2.0 * det / (tr + disc)
    } else {
        0.5 * (tr - disc)
    };
    // two candidate null vectors of (M − λI); keep the better conditioned one
    let v1 = [b, value - a];
    let v2 = [value - d, b];
    let norm = |v: [f64; 2]| (v[0] * v[0] + v[1] * v[1]).sqrt();
    let mut v = if norm(v1) >= norm(v2) { v1 } else { v2 };
    let len = norm(v);
    if len == 0.0 {
        // already diagonal with a == d
        v = [1.0, 0.0];
    } else {
        v = [v[0] / len, v[1] / len];
    }
    if v[0] < 0.0 || (v[0] == 0.0 && v[1] < 0.0) {
        v = [-v[0], -v[1]];
    }
    (value, v)
}

/// Minimum eigenpair of a block. For the radial block the vector is `(1, 0)`.
pub fn min_eigenpair(b: &SpectralBlock) -> (f64, [f64; 2]) {
    match *b {
        SpectralBlock::Radial { kappa } => (kappa + 2.0, [1.0, 0.0]),
        // the off-diagonal is −2√n*, so its square is exactly 4n*
        SpectralBlock::Coupled { n, matrix, .. } => eigenpair_with_off_sq(matrix, 4.0 * n_star(n)),
    }
}

/// Which invariant subspace attains a candidate minimum.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Channel {
    /// `û₁(0,0)`
    Radial,
    /// The coupled `(û₁, û₂)` block of degree `n`.
    Block { n: usize },
    /// The `û₃` channel of degree `n`.
    Curl { n: usize },
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NumericGamma {
    pub value: f64,
    /// Every channel within [`TIE_TOLERANCE`] of the minimum, lowest degree first.
    pub argmin: Vec<Channel>,
    /// Minimizing `(û₁, û₂)` direction when a coupled block attains the minimum.
    pub eigenvector: Option<[f64; 2]>,
}

fn candidates(kappa: f64, max_degree: usize, exec: Execution) -> Vec<(Channel, f64, [f64; 2])> {
    let mut out = vec![(Channel::Radial, kappa + 2.0, [1.0, 0.0])];
    let per_degree = exec.map_range(max_degree, |k| {
        let n = k + 1;
        let b = block(n, kappa);
        let (value, vec) = min_eigenpair(&b);
        [
            (Channel::Block { n }, value, vec),
            (Channel::Curl { n }, n_star(n), [0.0, 0.0]),
        ]
    });
    out.extend(per_degree.into_iter().flatten());
    out
}

/// `min G_κ / 4π` over all channels with `n ≤ max_degree`.
pub fn gamma_numeric(kappa: f64, max_degree: usize) -> NumericGamma {
    gamma_numeric_with(kappa, max_degree, Execution::Sequential)
}

pub fn gamma_numeric_with(kappa: f64, max_degree: usize, exec: Execution) -> NumericGamma {
    let all = candidates(kappa, max_degree, exec);
    let value = all.iter().map(|c| c.1).fold(f64::INFINITY, f64::min);
    let tol = TIE_TOLERANCE * value.abs().max(1.0);
    let winners: Vec<_> = all.iter().filter(|c| c.1 - value <= tol).collect();
    let eigenvector = winners
        .iter()
        .find(|c| matches!(c.0, Channel::Block { .. }))
        .map(|c| c.2);
    NumericGamma {
        value,
        argmin: winners.iter().map(|c| c.0).collect(),
        eigenvector,
    }
}

/// Sweeps [`gamma_numeric`] over many `κ`.
pub fn gamma_numeric_sweep(kappas: &[f64], max_degree: usize, exec: Execution) -> Vec<NumericGamma> {
    exec.map_slice(kappas, |&k| gamma_numeric(k, max_degree))
}

/// A normalized minimizer supported on the first argmin channel. Degenerate
/// orders `j` are combined along `direction` (indexed `j + 1`); for `n ≥ 2`
/// channels, which never win, only `j = 0` is used.
pub fn numeric_minimizer_along(kappa: f64, max_degree: usize, direction: [f64; 3]) -> CoeffSet {
    let result = gamma_numeric(kappa, max_degree);
    let scale = FOUR_PI.sqrt();
    let channel = result.argmin[0];
    let band = match channel {
        Channel::Radial => 1,
        Channel::Block { n } | Channel::Curl { n } => n.max(1),
    };
    let mut c = CoeffSet::zeros(band);
    let mut put = |i, n, j, v| {
        c.set(ModeIndex::new(i, n, j).expect("valid mode"), v)
            .expect("within band")
    };
    match channel {
        Channel::Radial => put(1, 0, 0, scale),
        Channel::Block { n } => {
            let (_, e) = min_eigenpair(&block(n, kappa));
            if n == 1 {
                let len = direction.iter().map(|d| d * d).sum::<f64>().sqrt();
                let dir = if len > 0.0 {
                    direction.map(|d| d / len)
                } else {
                    [0.0, 1.0, 0.0]
                };
                for j in -1..=1i64 {
                    let d = dir[(j + 1) as usize];
                    put(1, 1, j, scale * e[0] * d);
                    put(2, 1, j, scale * e[1] * d);
                }
            } else {
                put(1, n, 0, scale * e[0]);
                put(2, n, 0, scale * e[1]);
            }
        }
        Channel::Curl { n } => put(3, n, 0, scale),
    }
    c
}

/// [`numeric_minimizer_along`] with the deterministic `j = 0` direction.
pub fn numeric_minimizer(kappa: f64, max_degree: usize) -> CoeffSet {
    numeric_minimizer_along(kappa, max_degree, [0.0, 1.0, 0.0])
}

/// [`numeric_minimizer_along`] with a uniformly random direction.
pub fn numeric_minimizer_random<R: rand::Rng + ?Sized>(kappa: f64, max_degree: usize, rng: &mut R) -> CoeffSet {
    use rand_distr::StandardNormal;
    let dir = loop {
        let d: [f64; 3] = [rng.sample(StandardNormal), rng.sample(StandardNormal), rng.sample(StandardNormal)];
        if d.iter().map(|v| v * v).sum::<f64>() > 1e-12 {
            break d;
        }
    };
    numeric_minimizer_along(kappa, max_degree, dir)
}

/// `τ/σ = −2√2/(G − 2)`, the ratio implied by the second block equation.
pub fn block_ratio(eigenvalue: f64) -> f64 {
    -2.0 * SQRT_2 / (eigenvalue - 2.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{g_kappa, norm_sq};
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};

    #[test]
    fn block_examples() {
        let k = 1.7;
        match block(1, k) {
            SpectralBlock::Coupled { matrix, u3_eigenvalue, .. } => {
                assert_eq!(matrix[0][0], 4.0 + k);
                assert_abs_diff_eq!(matrix[0][1], -2.0 * SQRT_2, epsilon = 1e-15);
                assert_eq!(matrix[1][0], matrix[0][1]);
                assert_eq!(matrix[1][1], 2.0);
                assert_eq!(u3_eigenvalue, 2.0);
            }
            other => panic!("{other:?}"),
        }
        assert_eq!(block(0, k), SpectralBlock::Radial { kappa: k });
        assert_eq!(min_eigenpair(&block(0, k)).0, k + 2.0);
        match block(2, 0.0) {
            SpectralBlock::Coupled { matrix, .. } => {
                assert_eq!(matrix[0][0], 8.0);
                assert_abs_diff_eq!(matrix[0][1], -2.0 * 6f64.sqrt(), epsilon = 1e-15);
                assert_eq!(matrix[1][1], 6.0);
            }
            other => panic!("{other:?}"),
        }
        for n in 1..10 {
            assert_abs_diff_eq!(block(n, k).trace(), 2.0 * n_star(n) + 2.0 + k, epsilon = 1e-12);
        }
    }

    #[test]
    fn degree_one_eigenvalue_by_hand() {
        for k in [-20.0, -4.0, -1.0, 0.0, 3.0, 25.0] {
            let (v, e) = min_eigenpair(&block(1, k));
            let hand = 0.5 * ((k + 6.0) - (k * k + 4.0 * k + 36.0f64).sqrt());
            assert_abs_diff_eq!(v, hand, epsilon = 1e-12);
            assert_abs_diff_eq!(e[0] * e[0] + e[1] * e[1], 1.0, epsilon = 1e-15);
            // eigen-equation residual
            if let SpectralBlock::Coupled { matrix: m, .. } = block(1, k) {
                assert_abs_diff_eq!(m[0][0] * e[0] + m[0][1] * e[1], v * e[0], epsilon = 1e-12);
                assert_abs_diff_eq!(m[1][0] * e[0] + m[1][1] * e[1], v * e[1], epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn critical_eigenvector() {
        let (v, e) = min_eigenpair(&block(1, -4.0));
        assert_eq!(v, -2.0);
        assert_abs_diff_eq!(e[0], (2.0f64 / 3.0).sqrt(), epsilon = 1e-15);
        assert_abs_diff_eq!(e[1], (1.0f64 / 3.0).sqrt(), epsilon = 1e-15);
        assert_abs_diff_eq!(e[1] / e[0], SQRT_2 / 2.0, epsilon = 1e-15);
    }

    #[test]
    fn degree_two_at_zero_exceeds_degree_one() {
        let (v2, _) = min_eigenpair(&block(2, 0.0));
        // tr 14, det 48 − 24 = 24
        assert_abs_diff_eq!(v2, 0.5 * (14.0 - (196.0f64 - 96.0).sqrt()), epsilon = 1e-12);
        assert!(v2 > 0.0);
    }

    #[test]
    fn gamma_numeric_examples() {
        let r = gamma_numeric(-8.0, 20);
        assert_eq!(r.value, -6.0);
        assert_eq!(r.argmin, vec![Channel::Radial]);
        let r = gamma_numeric(6.0, 20);
        assert_abs_diff_eq!(r.value, 6.0 - 2.0 * 6f64.sqrt(), epsilon = 1e-13);
        assert_eq!(r.argmin, vec![Channel::Block { n: 1 }]);
        let r = gamma_numeric(-4.0, 20);
        assert_eq!(r.value, -2.0);
        assert_eq!(r.argmin, vec![Channel::Radial, Channel::Block { n: 1 }]);
    }

    #[test]
    fn argmin_degree_at_most_one() {
        for k in 0..=1000 {
            let kappa = -50.0 + 0.1 * k as f64;
            let r = gamma_numeric(kappa, 30);
            assert!(r.argmin.iter().all(|c| matches!(c, Channel::Radial | Channel::Block { n: 1 })), "{kappa}: {:?}", r.argmin);
            assert!(!r.argmin.iter().any(|c| matches!(c, Channel::Curl { .. })));
            if let Some(e) = r.eigenvector {
                assert!(e[0] > 0.0 && e[1] > 0.0);
            }
        }
    }

    #[test]
    fn independent_of_truncation() {
        for kappa in [-30.0, -4.0, -2.0, 0.0, 7.0, 45.0] {
            let base = gamma_numeric(kappa, 1).value;
            let mut prev = base;
            for n in 2..=30 {
                let v = gamma_numeric(kappa, n).value;
                assert!(v <= prev);
                assert_eq!(v, base);
                prev = v;
            }
        }
    }

    #[test]
    fn minimizer_examples() {
        let c = numeric_minimizer(-8.0, 20);
        assert_abs_diff_eq!(c.coeff(1, 0, 0), FOUR_PI.sqrt(), epsilon = 1e-15);
        assert_abs_diff_eq!(norm_sq(&c), FOUR_PI, epsilon = 1e-13);

        let c = numeric_minimizer(6.0, 20);
        let r = gamma_numeric(6.0, 20).value;
        assert_abs_diff_eq!(g_kappa(&c, 6.0), FOUR_PI * r, epsilon = 1e-11);
        assert_abs_diff_eq!(c.coeff(2, 1, 0) / c.coeff(1, 1, 0), block_ratio(r), epsilon = 1e-12);

        let c = numeric_minimizer(0.0, 20);
        assert_abs_diff_eq!(c.coeff(1, 1, 0).powi(2), FOUR_PI / 3.0, epsilon = 1e-12);
    }

    #[test]
    fn random_direction_minimizers() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2);
        for _ in 0..20 {
            let kappa = rng.random_range(-3.9..30.0);
            let c = numeric_minimizer_random(kappa, 10, &mut rng);
            let r = gamma_numeric(kappa, 10).value;
            assert_abs_diff_eq!(norm_sq(&c), FOUR_PI, epsilon = 1e-11);
            assert_abs_diff_eq!(g_kappa(&c, kappa), FOUR_PI * r, epsilon = 1e-10);
        }
    }

    #[test]
    fn sweep_policies_agree() {
        let ks: Vec<f64> = (0..200).map(|k| -20.0 + 0.2 * k as f64).collect();
        let a = gamma_numeric_sweep(&ks, 20, Execution::Sequential);
        let b = gamma_numeric_sweep(&ks, 20, Execution::Parallel);
        assert_eq!(a, b);
        assert_eq!(gamma_numeric_with(3.0, 20, Execution::Parallel), gamma_numeric(3.0, 20));
    }
}
