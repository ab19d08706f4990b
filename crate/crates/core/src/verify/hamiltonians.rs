use rand::Rng;
use serde::{Deserialize, Serialize};

use super::CheckReport;
use crate::ensemble::{modulus_on_sites, Grid, IncrementEnergy, LocalHamiltonian};
use crate::error::{Error, Result};
use crate::scaling::scaled_hamiltonians;

const A1_TOL: f64 = 1e-9;
const A2_TOL: f64 = 1e-9;

/// Randomized check of both parts of A1: monotonicity in each coordinate, and
/// the increment inequality for `a ≥ b` tied in one coordinate.
pub fn check_a1<R: Rng + ?Sized>(h: &LocalHamiltonian<f64>, trials: u64, rng: &mut R) -> Result<CheckReport> {
    if trials == 0 {
        return Err(Error::param("trials", "must be at least 1"));
    }
    let mut worst_mono = f64::INFINITY;
    let mut worst_incr = f64::INFINITY;
    for _ in 0..trials {
        let a: [f64; 6] = std::array::from_fn(|_| rng.random_range(-3.0..3.0));
        let delta = rng.random_range(1e-3..2.0);

        // Monotonicity: non-increasing in the upper row, non-decreasing in the lower.
        let c = rng.random_range(0..6);
        let mut up = a;
        up[c] += delta;
        let change = h.evaluate_checked(&up)? - h.evaluate_checked(&a)?;
        worst_mono = worst_mono.min(if c < 3 { -change } else { change });

        // Increment inequality with b ≤ a, tied at k.
        let k = rng.random_range(0..6);
        let mut b = a;
        for (i, v) in b.iter_mut().enumerate() {
            if i != k {
                *v -= rng.random_range(0.0..2.0);
            }
        }
        let (mut a2, mut b2) = (a, b);
        a2[k] += delta;
        b2[k] += delta;
        let lhs = -h.evaluate_checked(&a2)? + h.evaluate_checked(&a)?;
        let rhs = -h.evaluate_checked(&b2)? + h.evaluate_checked(&b)?;
        worst_incr = worst_incr.min(lhs - rhs);
    }
    let worst = worst_mono.min(worst_incr);
    Ok(CheckReport::new("A1", trials, worst, A1_TOL, "floating-point slack on exact inequalities")
        .param("hamiltonian", h.kind())
        .details(serde_json::json!({
            "monotonicity_margin": worst_mono,
            "increment_margin": worst_incr,
        })))
}

/// Convexity of an increment energy: second differences over consecutive grid
/// points must be nonnegative.
pub fn check_a2(energy: &dyn IncrementEnergy, grid: &Grid<f64>) -> Result<CheckReport> {
    if grid.count() < 3 {
        return Err(Error::InsufficientData {
            what: "test points",
            needed: 3,
            got: grid.count(),
        });
    }
    let vals: Vec<f64> = grid.sites().iter().map(|&x| energy.energy(x)).collect();
    if vals.iter().any(|v| v.is_nan()) {
        return Err(Error::NotANumber("random walk Hamiltonian"));
    }
    let mut worst = f64::INFINITY;
    let mut at = grid.site(1);
    for i in 1..vals.len() - 1 {
        let d2 = vals[i + 1] - 2.0 * vals[i] + vals[i - 1];
        if d2 < worst {
            worst = d2;
            at = grid.site(i);
        }
    }
    Ok(
        CheckReport::new("A2", grid.count() as u64 - 2, worst, A2_TOL, "floating-point slack on second differences")
            .param("from", grid.origin())
            .param("to", grid.end())
            .param("points", grid.count())
            .details(serde_json::json!({ "worst_at": at })),
    )
}

/// Test-curve families for A3, each producing an `(L_k, L_{k+1})` pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CurveFamily {
    /// Random constants with `L_k ≥ L_{k+1}`.
    Constant,
    /// Random low-frequency sinusoids.
    Smooth,
    /// Alternating `±1/2` at every grid site.
    Sawtooth,
}

impl CurveFamily {
    fn sample<R: Rng + ?Sized>(self, grid: &Grid<f64>, rng: &mut R) -> (Vec<f64>, Vec<f64>) {
        let xs = grid.sites();
        match self {
            CurveFamily::Constant => {
                let c1 = rng.random_range(-1.0..1.0);
                let c2 = c1 - rng.random_range(0.0..2.0);
                (vec![c1; xs.len()], vec![c2; xs.len()])
            }
            CurveFamily::Smooth => {
                let gap = rng.random_range(0.0..2.0);
                let mut wave = |c: f64| {
                    let amp = rng.random_range(0.0..1.0);
                    let freq = rng.random_range(0.5..1.5);
                    let phase = rng.random_range(0.0..std::f64::consts::TAU);
                    xs.iter()
                        .map(|x| c + amp * (std::f64::consts::TAU * freq * x + phase).sin())
                        .collect::<Vec<f64>>()
                };
                let top = wave(0.0);
                let bottom = wave(-gap);
                (top, bottom)
            }
            CurveFamily::Sawtooth => {
                let c = rng.random_range(0.0..2.0);
                let saw = |shift: f64| -> Vec<f64> {
                    (0..xs.len()).map(|i| shift + if i % 2 == 0 { 0.5 } else { -0.5 }).collect()
                };
                (saw(0.0), saw(-c))
            }
        }
    }
}

/// One A3 evaluation on a pair of curves.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct A3Trial {
    /// `|Σ H(⎕) / ∫ e^{L_{k+1} − L_k} − 1|`.
    pub lhs: f64,
    /// `ω(L_k, mesh) + ω(L_{k+1}, mesh) + mesh`.
    pub exponent: f64,
}

impl A3Trial {
    pub fn bound(&self, c1: f64) -> f64 {
        (c1 * self.exponent).exp_m1()
    }

    /// Smallest `C₁` for which this trial satisfies the bound.
    pub fn required_c1(&self) -> f64 {
        self.lhs.ln_1p() / self.exponent
    }
}

/// Riemann sum of `H` over interior sites against the exact integral of
/// `exp(L_{k+1} − L_k)` for the piecewise-linear interpolants.
pub fn a3_lhs(h: &LocalHamiltonian<f64>, grid: &Grid<f64>, upper: &[f64], lower: &[f64]) -> Result<A3Trial> {
    let n = grid.count();
    if upper.len() != n || lower.len() != n {
        return Err(Error::Mismatch("curves must have one value per grid site".into()));
    }
    if n < 3 {
        return Err(Error::InsufficientData {
            what: "grid points",
            needed: 3,
            got: n,
        });
    }
    let mesh = grid.mesh();
    let sum: f64 = (1..n - 1)
        .map(|u| h.evaluate(&[upper[u - 1], upper[u], upper[u + 1], lower[u - 1], lower[u], lower[u + 1]]))
        .sum();
    let integral: f64 = (0..n - 1)
        .map(|i| {
            let d0 = lower[i] - upper[i];
            let d1 = lower[i + 1] - upper[i + 1];
            if (d1 - d0).abs() < 1e-12 {
                mesh * (0.5 * (d0 + d1)).exp()
            } else {
                mesh * (d1.exp() - d0.exp()) / (d1 - d0)
            }
        })
        .sum();
    if !(integral > 0.0) || !integral.is_finite() {
        return Err(Error::param("curves", format!("integral of exp(gap) is {integral}")));
    }
    let w = modulus_on_sites(&[upper], 0..=n - 1, 1) + modulus_on_sites(&[lower], 0..=n - 1, 1);
    Ok(A3Trial {
        lhs: (sum / integral - 1.0).abs(),
        exponent: w + mesh,
    })
}

/// A3 for the scaled interaction at noise level `n` on the lattice `mesh·ℤ ∩ [0, 1]`,
/// with `mesh = 2/√N` read from the grid.
pub fn check_a3<R: Rng + ?Sized>(n: usize, family: CurveFamily, trials: u64, c1: f64, rng: &mut R) -> Result<CheckReport> {
    if trials == 0 {
        return Err(Error::param("trials", "must be at least 1"));
    }
    if !(c1 > 0.0) {
        return Err(Error::param("c1", format!("must be positive, got {c1}")));
    }
    let h = scaled_hamiltonians(n)?;
    let mesh = 2.0 / (n as f64).sqrt();
    let steps = (1.0 / mesh + 1e-9).floor() as usize;
    let grid = Grid::new(0.0, mesh, steps + 1)?;
    let mut worst_margin = f64::INFINITY;
    let mut worst_lhs: f64 = 0.0;
    let mut worst_ratio: f64 = 0.0;
    let mut min_c1: f64 = 0.0;
    for _ in 0..trials {
        let (up, lo) = family.sample(&grid, rng);
        let t = a3_lhs(&h.interaction, &grid, &up, &lo)?;
        let bound = t.bound(c1);
        worst_margin = worst_margin.min(bound - t.lhs);
        worst_lhs = worst_lhs.max(t.lhs);
        worst_ratio = worst_ratio.max(t.lhs / bound);
        min_c1 = min_c1.max(t.required_c1());
    }
    Ok(CheckReport::new("A3", trials, worst_margin, 0.0, "bound with the configured C1")
        .param("N", n)
        .param("family", family)
        .param("c1", c1)
        .param("mesh", mesh)
        .details(serde_json::json!({
            "worst_lhs": worst_lhs,
            "worst_lhs_over_bound": worst_ratio,
            "smallest_passing_c1": min_c1,
        })))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensemble::{FnEnergy, RWHamiltonian, Shift};
    use crate::scaling::scaled_hamiltonians;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn a1_zero_and_log_gamma_pass() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let z = check_a1(&LocalHamiltonian::Zero, 100, &mut rng).unwrap();
        assert!(z.pass && z.worst_margin == 0.0);
        let h = scaled_hamiltonians(16).unwrap().interaction;
        let r = check_a1(&h, 100_000, &mut rng).unwrap();
        assert!(r.pass && r.worst_margin >= -1e-12, "{}", r.render());
    }

    #[test]
    fn a1_controls_fail() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let up = LocalHamiltonian::custom("increasing in a2", |a: &[f64; 6]| a[1] + 10.0);
        assert!(!check_a1(&up, 1000, &mut rng).unwrap().pass);
        // Concave in the gap: monotone, but the increment inequality fails.
        let concave = LocalHamiltonian::custom("concave", |a: &[f64; 6]| (a[5] - a[1]).atan() + 2.0);
        let r = check_a1(&concave, 10_000, &mut rng).unwrap();
        assert!(!r.pass);
        assert!(r.details["monotonicity_margin"].as_f64().unwrap() >= 0.0);
    }

    #[test]
    fn a2_cases() {
        let g = Grid::new(-5.0, 0.01, 1001).unwrap();
        let q = RWHamiltonian::quadratic(2.0).unwrap();
        let r = check_a2(&q, &g).unwrap();
        assert!(r.pass);
        // Second differences of x²/4 are exactly h²/2 up to rounding.
        assert!((r.worst_margin - 0.5e-4).abs() < 1e-12);
        let lg = scaled_hamiltonians(64).unwrap().random_walk;
        assert!(check_a2(&lg, &Grid::new(lg.center() - 5.0, 0.01, 1001).unwrap()).unwrap().pass);
        let wavy = FnEnergy(|x: f64| x * x / 2.0 + 0.3 * (3.0 * x).sin());
        assert!(!check_a2(&wavy, &g).unwrap().pass);
    }

    #[test]
    fn a3_constant_curves_closed_form() {
        for n in [16usize, 64, 256] {
            let h = scaled_hamiltonians(n).unwrap().interaction;
            let s = (n as f64).sqrt();
            let mesh = 2.0 / s;
            let steps = (1.0 / mesh).round() as usize;
            let g = Grid::new(0.0, mesh, steps + 1).unwrap();
            let t = a3_lhs(&h, &g, &vec![0.3; steps + 1], &vec![-0.4; steps + 1]).unwrap();
            let expect = 1.0 - (steps - 1) as f64 / steps as f64 * s / (s - 1.0);
            assert!((t.lhs - expect.abs()).abs() < 1e-12);
            assert!(t.lhs <= t.bound(3.0));
        }
    }

    #[test]
    fn a3_sawtooth_bound_is_loose() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let r = check_a3(64, CurveFamily::Sawtooth, 50, 3.0, &mut rng).unwrap();
        assert!(r.pass);
        assert!(r.details["worst_lhs_over_bound"].as_f64().unwrap() < 0.1);
    }

    #[test]
    fn exponential_shift_matters_for_a1() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for shift in [Shift::Before, Shift::Same, Shift::After] {
            let h = LocalHamiltonian::exponential(0.5, shift).unwrap();
            assert!(check_a1(&h, 2000, &mut rng).unwrap().pass);
        }
    }
}
