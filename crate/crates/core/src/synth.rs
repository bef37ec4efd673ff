//! Seeded random SMDP instances with smooth concave payoffs and monotone
//! location-family kernels, for randomized property checks.

use rand::Rng;
use rand::SeedableRng;
use rand_xoshiro::Xoshiro256StarStar;

use crate::error::Result;
use crate::grid::Grid;
use crate::mdp::{Kernel, Mdp};
use crate::numeric;
use crate::smdp::{ModelFamily, Smdp};

/// Builds a randomized smooth instance.
///
/// States and actions are grids on [0, 1]; the payoff is concave and
/// increasing in the action with positive state–action complementarity
/// and increasing in the state; true and model kernels are
/// cell-integrated location families whose conditional mean increases in
/// (s, x). Models scan the drift slope θ and misperceive the intercept
/// and the noise scale, so the family is misspecified for almost every
/// draw.
pub fn random_smooth_smdp(seed: u64) -> Result<Smdp> {
    let mut rng = Xoshiro256StarStar::seed_from_u64(seed.wrapping_mul(0x9E37_79B9_7F4A_7C15));
    let n_s = rng.gen_range(5..=8);
    let n_x = rng.gen_range(7..=11);
    let states = Grid::linspace(0.0, 1.0, n_s, "state")?;
    let actions = Grid::linspace(0.0, 1.0, n_x, "action")?;
    let discount = rng.gen_range(0.6..0.92);

    // u(s, x) = a0 s + a1 ln(1 + b x) + a2 s x − a3 x².
    let a0 = rng.gen_range(0.4..1.2);
    let a1 = rng.gen_range(0.1..0.5);
    let b = rng.gen_range(0.5..3.0);
    let a2 = rng.gen_range(0.0..0.4);
    let a3 = rng.gen_range(0.3..0.9);
    let mut payoff = vec![0.0; n_s * n_x];
    for (i, &s) in states.points().iter().enumerate() {
        for (j, &x) in actions.points().iter().enumerate() {
            payoff[i * n_x + j] = a0 * s + a1 * (1.0 + b * x).ln() + a2 * s * x - a3 * x * x;
        }
    }

    // True kernel: mean c0 + c1 s + c2 x, scale sigma.
    let c0 = rng.gen_range(0.0..0.3);
    let c1 = rng.gen_range(0.2..0.6);
    let c2 = rng.gen_range(0.3..0.8);
    let sigma = rng.gen_range(0.15..0.35);
    let edges = numeric::midpoint_edges(states.points(), true);
    let row = |mean: f64, sd: f64| -> Vec<f64> {
        let mut r = numeric::gaussian_cell_masses(mean, sd, &edges);
        let total: f64 = r.iter().sum();
        for p in r.iter_mut() {
            *p /= total;
        }
        r
    };
    let mut true_rows = Vec::with_capacity(n_s * n_x);
    for &s in states.points() {
        for &x in actions.points() {
            true_rows.push(row(c0 + c1 * s + c2 * x, sigma));
        }
    }
    let true_kernel = Kernel::from_rows(n_s, n_x, true_rows)?;

    // Model family: drift slope θ with a perturbed intercept, action
    // sensitivity, and noise scale.
    let intercept_shift = rng.gen_range(-0.25..0.25);
    let action_slope_factor = rng.gen_range(0.55..1.45);
    let scale_factor = rng.gen_range(0.6..1.5);
    let sigma_m = sigma * scale_factor;
    let c2_m = c2 * action_slope_factor;
    let theta_lo = (c1 - 0.4).max(0.0);
    let theta_hi = (c1 + 0.4).min(1.2);
    let theta_grid = Grid::linspace(theta_lo, theta_hi, 31, "theta")?;
    let kernels = theta_grid
        .points()
        .iter()
        .map(|&theta| {
            let mut rows = Vec::with_capacity(n_s * n_x);
            for &s in states.points() {
                for &x in actions.points() {
                    rows.push(row(c0 + intercept_shift + theta * s + c2_m * x, sigma_m));
                }
            }
            Kernel::from_rows(n_s, n_x, rows)
        })
        .collect::<Result<Vec<_>>>()?;
    let family = ModelFamily::new(theta_grid, kernels)?;

    let mdp = Mdp::new(states, actions, true_kernel, payoff, discount)?;
    Smdp::new(mdp, family, None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::smdp::check_regularity;

    #[test]
    fn instances_are_regular_and_usually_misspecified() {
        let mut misspecified = 0;
        for seed in 0..10 {
            let smdp = random_smooth_smdp(seed).unwrap();
            let reg = check_regularity(&smdp);
            assert!(reg.absolute_continuity_ok, "seed {seed}");
            if smdp.is_misspecified() {
                misspecified += 1;
            }
        }
        assert!(misspecified >= 9);
    }

    #[test]
    fn generation_is_deterministic() {
        let a = random_smooth_smdp(3).unwrap();
        let b = random_smooth_smdp(3).unwrap();
        assert!(a.mdp().kernel().approx_eq(b.mdp().kernel(), 0.0));
        assert_eq!(a.mdp().payoff_matrix(), b.mdp().payoff_matrix());
    }
}
