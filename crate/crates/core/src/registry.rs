//! Built-in example models: the dynamic effort task, AR(1) inference with
//! mixture-normal innovations, and the consumption–savings problem with a
//! misperceived wealth process. Each builder produces a discretized
//! [`Smdp`]; closed-form objects are provided for cross-validation.

use rand::distributions::Distribution;
use rand::SeedableRng;
use rand_distr::StandardNormal;
use rand_xoshiro::Xoshiro256StarStar;
use serde::{Deserialize, Serialize};

use crate::equilibrium::{verify_equilibrium, Equilibrium, VerifyOptions};
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::mdp::{Kernel, Mdp, Policy, TransitionPayoff, ValueFunction};
use crate::numeric;
use crate::smdp::{Belief, JointDistribution, ModelFamily, Smdp};

// ---------------------------------------------------------------------------
// Effort task
// ---------------------------------------------------------------------------

/// Parameters of the dynamic effort-provision task.
///
/// Outcomes are failure (0) or success (1); the agent chooses low or high
/// effort. High effort guarantees success; low effort succeeds with
/// probability `q0` after a failure and `q1` after a success. High effort
/// costs `c`. The standing assumption `0 < q0 < 1−c < q1 < 1` is enforced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EffortTaskSpec {
    pub c: f64,
    pub q0: f64,
    pub q1: f64,
    pub discount: f64,
    /// Number of θ nodes on [theta_min, theta_max]; the indifference
    /// model 1−c is inserted exactly whenever it lies inside the bounds.
    pub theta_points: usize,
    pub theta_min: f64,
    pub theta_max: f64,
}

impl EffortTaskSpec {
    pub fn new(c: f64, q0: f64, q1: f64, discount: f64) -> Self {
        Self {
            c,
            q0,
            q1,
            discount,
            theta_points: 201,
            theta_min: 0.0,
            theta_max: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = 0.0 < self.q0
            && self.q0 < 1.0 - self.c
            && 1.0 - self.c < self.q1
            && self.q1 < 1.0
            && (0.0..1.0).contains(&self.discount)
            && self.theta_points >= 3
            && 0.0 <= self.theta_min
            && self.theta_min < self.theta_max
            && self.theta_max <= 1.0;
        if ok {
            Ok(())
        } else {
            Err(Error::Infeasible(format!(
                "effort task requires 0 < q0 < 1−c < q1 < 1, got c={}, q0={}, q1={}",
                self.c, self.q0, self.q1
            )))
        }
    }

    /// The mixed equilibrium weight lies in [0, 1] iff
    /// `q1 − (1−c) ≤ c (q1 − q0)`.
    pub fn mixed_feasible(&self) -> bool {
        self.q1 - (1.0 - self.c) <= self.c * (self.q1 - self.q0)
    }

    /// Closed-form mixing weight on low effort, `(q1−(1−c))/(c(q1−q0))`.
    pub fn closed_form_mix(&self) -> f64 {
        (self.q1 - (1.0 - self.c)) / (self.c * (self.q1 - self.q0))
    }

    /// Closed-form stationary success probability `(1−c−q0)/(q1−q0)`.
    pub fn closed_form_ms1(&self) -> f64 {
        (1.0 - self.c - self.q0) / (self.q1 - self.q0)
    }
}

/// Builds the 2-state × 2-action effort-task SMDP. Action 0 is low
/// effort, action 1 is high effort; the payoff rides on the realized
/// outcome, `u(x, s') = s' − c·1{x = H}`.
pub fn build_effort_task(spec: &EffortTaskSpec) -> Result<Smdp> {
    spec.validate()?;
    let states = Grid::new(vec![0.0, 1.0], "outcome")?;
    let actions = Grid::new(vec![0.0, 1.0], "effort")?;
    let (q0, q1, c) = (spec.q0, spec.q1, spec.c);
    let true_kernel = Kernel::new(
        2,
        2,
        vec![
            1.0 - q0, q0, // (s=0, L)
            0.0, 1.0, // (s=0, H)
            1.0 - q1, q1, // (s=1, L)
            0.0, 1.0, // (s=1, H)
        ],
    )?;
    // u(s, x, s') = s' − c·1{x=H}; next-state coordinates are 0 and 1.
    let tp = TransitionPayoff::new(
        2,
        2,
        vec![
            0.0, 1.0, // (0, L, ·)
            -c,
            1.0 - c, // (0, H, ·)
            0.0, 1.0, // (1, L, ·)
            -c,
            1.0 - c, // (1, H, ·)
        ],
    )?;
    let objective_payoff = tp.expected(&true_kernel);
    let mdp = Mdp::new(states, actions, true_kernel, objective_payoff, spec.discount)?;

    let base = Grid::linspace(spec.theta_min, spec.theta_max, spec.theta_points, "theta")?;
    let theta_grid = if spec.theta_min <= 1.0 - c && 1.0 - c <= spec.theta_max {
        base.with_node(1.0 - c, 1e-9)?.0
    } else {
        base
    };
    let kernels = theta_grid
        .points()
        .iter()
        .map(|&theta| {
            Kernel::new(
                2,
                2,
                vec![
                    1.0 - theta,
                    theta,
                    0.0,
                    1.0,
                    1.0 - theta,
                    theta,
                    0.0,
                    1.0,
                ],
            )
        })
        .collect::<Result<Vec<_>>>()?;
    let family = ModelFamily::new(theta_grid, kernels)?;
    Smdp::new(mdp, family, Some(tp))
}

/// Effort-style task whose true success probability under low effort is
/// the same `q` in both states, so the family contains the truth at
/// θ = q (a correctly specified control case).
pub fn build_state_independent_task(
    q: f64,
    c: f64,
    discount: f64,
    theta_points: usize,
) -> Result<Smdp> {
    if !(0.0 < q && q < 1.0 && 0.0 < c && c < 1.0) {
        return Err(Error::Infeasible("need q, c in (0, 1)".into()));
    }
    let states = Grid::new(vec![0.0, 1.0], "outcome")?;
    let actions = Grid::new(vec![0.0, 1.0], "effort")?;
    let true_kernel = Kernel::new(
        2,
        2,
        vec![1.0 - q, q, 0.0, 1.0, 1.0 - q, q, 0.0, 1.0],
    )?;
    let tp = TransitionPayoff::new(
        2,
        2,
        vec![0.0, 1.0, -c, 1.0 - c, 0.0, 1.0, -c, 1.0 - c],
    )?;
    let objective_payoff = tp.expected(&true_kernel);
    let mdp = Mdp::new(states, actions, true_kernel, objective_payoff, discount)?;
    let base = Grid::linspace(0.0, 1.0, theta_points, "theta")?;
    let (with_q, _) = base.with_node(q, 1e-9)?;
    let (theta_grid, _) = with_q.with_node(1.0 - c, 1e-9)?;
    let kernels = theta_grid
        .points()
        .iter()
        .map(|&theta| {
            Kernel::new(
                2,
                2,
                vec![
                    1.0 - theta,
                    theta,
                    0.0,
                    1.0,
                    1.0 - theta,
                    theta,
                    0.0,
                    1.0,
                ],
            )
        })
        .collect::<Result<Vec<_>>>()?;
    let family = ModelFamily::new(theta_grid, kernels)?;
    Smdp::new(mdp, family, Some(tp))
}

/// Exact closed-form mixed Berk-Nash equilibrium of the effort task:
/// `θ* = 1−c`, state-independent low-effort weight
/// `(q1−(1−c))/(c(q1−q0))`, stationary success probability
/// `(1−c−q0)/(q1−q0)`.
pub fn effort_task_closed_form(spec: &EffortTaskSpec) -> Result<Equilibrium> {
    spec.validate()?;
    if !spec.mixed_feasible() {
        return Err(Error::Infeasible(
            "mixed equilibrium weight exceeds 1 for these parameters".into(),
        ));
    }
    let smdp = build_effort_task(spec)?;
    let alpha = spec.closed_form_mix();
    let ms1 = spec.closed_form_ms1();
    let theta_star = 1.0 - spec.c;
    let mass = vec![
        (1.0 - ms1) * alpha,
        (1.0 - ms1) * (1.0 - alpha),
        ms1 * alpha,
        ms1 * (1.0 - alpha),
    ];
    let m_star = JointDistribution::new(2, 2, mass)?;
    let node = smdp.theta_grid().nearest(theta_star);
    let mu_star = Belief::dirac(smdp.theta_grid().len(), node);
    let policy = Policy::new(2, 2, vec![alpha, 1.0 - alpha, alpha, 1.0 - alpha])?;
    let v = (1.0 - spec.c) / (1.0 - spec.discount);
    let value = ValueFunction {
        values: vec![v, v],
    };
    let mut eq = Equilibrium {
        m_star,
        mu_star,
        theta_star,
        policy,
        value,
        residuals: Default::default(),
        theta_node: node,
        mixing_weight: Some(alpha),
        unidentified_range: None,
        at_theta_boundary: false,
    };
    eq.residuals = verify_equilibrium(&smdp, &eq, &VerifyOptions::default())?;
    Ok(eq)
}

// ---------------------------------------------------------------------------
// AR(1) inference with mixture-normal innovations
// ---------------------------------------------------------------------------

/// Parameters of the decision-free AR(1) inference example. The true
/// innovations are an equal-weight two-component normal mixture with
/// means `mu1`, `mu2` and common variance `sigma²`; the models are
/// Gaussian AR(1) processes indexed by the persistence parameter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ar1Spec {
    pub rho: f64,
    pub mu1: f64,
    pub mu2: f64,
    pub sigma: f64,
    /// State grid size (≥ 21).
    pub grid_points: usize,
    /// Grid half-width in unconditional standard deviations.
    pub truncation: f64,
    pub theta_points: usize,
    pub theta_bound: f64,
}

impl Ar1Spec {
    pub fn new(rho: f64, mu1: f64, mu2: f64, sigma: f64) -> Self {
        Self {
            rho,
            mu1,
            mu2,
            sigma,
            grid_points: 201,
            truncation: 4.0,
            theta_points: 201,
            theta_bound: 0.95,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.rho != 0.0
            && self.rho.abs() < 1.0
            && self.sigma > 0.0
            && self.grid_points >= 21
            && self.truncation > 0.0
            && self.theta_points >= 3
            && self.theta_bound > self.rho.abs()
            && self.theta_bound < 1.0;
        if ok {
            Ok(())
        } else {
            Err(Error::Infeasible(format!(
                "AR(1) spec requires 0 < |rho| < 1, sigma > 0, grid_points ≥ 21, got rho={}, sigma={}, grid_points={}",
                self.rho, self.sigma, self.grid_points
            )))
        }
    }

    /// Innovation variance of the mixture, `σ² + ((μ1−μ2)/2)²`.
    pub fn innovation_variance(&self) -> f64 {
        self.sigma * self.sigma + 0.25 * (self.mu1 - self.mu2) * (self.mu1 - self.mu2)
    }

    /// Unconditional standard deviation of the state.
    pub fn unconditional_sd(&self) -> f64 {
        (self.innovation_variance() / (1.0 - self.rho * self.rho)).sqrt()
    }
}

/// Builds the single-action AR(1) SMDP: truncated equally spaced state
/// grid, mixture-normal true rows, Gaussian model rows per θ, all
/// cell-integrated and renormalized.
pub fn build_ar1(spec: &Ar1Spec) -> Result<Smdp> {
    spec.validate()?;
    let center = 0.5 * (spec.mu1 + spec.mu2) / (1.0 - spec.rho);
    let half = spec.truncation * spec.unconditional_sd();
    let states = Grid::linspace(center - half, center + half, spec.grid_points, "state")?;
    let actions = Grid::new(vec![0.0], "none")?;
    let edges = numeric::midpoint_edges(states.points(), true);

    let renorm = |mut row: Vec<f64>| -> Vec<f64> {
        let sum: f64 = row.iter().sum();
        for p in row.iter_mut() {
            *p /= sum;
        }
        row
    };

    let n = spec.grid_points;
    let mut true_rows = Vec::with_capacity(n);
    for &s in states.points() {
        let a = numeric::gaussian_cell_masses(spec.rho * s + spec.mu1, spec.sigma, &edges);
        let b = numeric::gaussian_cell_masses(spec.rho * s + spec.mu2, spec.sigma, &edges);
        let row: Vec<f64> = a.iter().zip(&b).map(|(x, y)| 0.5 * (x + y)).collect();
        true_rows.push(renorm(row));
    }
    let true_kernel = Kernel::from_rows(n, 1, true_rows)?;

    let mut theta_points: Vec<f64> = Grid::linspace(
        -spec.theta_bound,
        spec.theta_bound,
        spec.theta_points,
        "theta",
    )?
    .points()
    .to_vec();
    // Pin the node nearest ρ to ρ exactly so a correctly specified family
    // (μ1 = μ2 = 0) contains the true kernel.
    let tmp = Grid::new(theta_points.clone(), "theta")?;
    let i = tmp.nearest(spec.rho);
    let lo_ok = i == 0 || theta_points[i - 1] < spec.rho;
    let hi_ok = i + 1 == theta_points.len() || theta_points[i + 1] > spec.rho;
    if lo_ok && hi_ok {
        theta_points[i] = spec.rho;
    }
    let theta_grid = Grid::new(theta_points, "theta")?;

    let kernels = theta_grid
        .points()
        .iter()
        .map(|&theta| {
            let rows: Vec<Vec<f64>> = states
                .points()
                .iter()
                .map(|&s| renorm(numeric::gaussian_cell_masses(theta * s, spec.sigma, &edges)))
                .collect();
            Kernel::from_rows(n, 1, rows)
        })
        .collect::<Result<Vec<_>>>()?;
    let family = ModelFamily::new(theta_grid, kernels)?;

    let mdp = Mdp::new(states, actions, true_kernel, vec![0.0; n], 0.5)?;
    Smdp::new(mdp, family, None)
}

/// Statewise least-squares fit of the AR(1) persistence at a fixed state.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StatewiseFit {
    pub theta: f64,
    /// `s = 0` is degenerate for the least-squares form; the KL grid
    /// argmin is returned instead.
    pub degenerate: bool,
}

/// Solves `θ̂(s)·s² = E_Q[s'·s]` on the discretized conditional row,
/// i.e. `θ̂(s) = E[s'|s]/s`. At `s = 0` the division is degenerate and
/// the KL grid argmin of the point mass at `s` is returned, flagged.
pub fn ar1_statewise_best_fit(smdp: &Smdp, state: usize) -> Result<StatewiseFit> {
    let s = smdp.mdp().states().get(state);
    if s.abs() < 1e-12 {
        let m = JointDistribution::point_mass(smdp.n_states(), smdp.n_actions(), state, 0);
        let bf = crate::smdp::best_fit(smdp, &m, 1e-12)?;
        return Ok(StatewiseFit {
            theta: bf.theta_interp,
            degenerate: true,
        });
    }
    let row = smdp.mdp().kernel().row(state, 0);
    let mean_next: f64 = row
        .iter()
        .zip(smdp.mdp().states().points())
        .map(|(p, sn)| p * sn)
        .sum();
    Ok(StatewiseFit {
        theta: mean_next / s,
        degenerate: false,
    })
}

// ---------------------------------------------------------------------------
// Consumption–savings with misperceived wealth process
// ---------------------------------------------------------------------------

/// Parameters of the savings problem. True log-wealth evolves as
/// `ln y' = α* + β* ln x + γ* z + ξ` with `ξ ~ N(0,1)` and `z ~ U[0,1]`
/// i.i.d.; the models drop the `γ* z` term. Utility is `z ln(y − x)` and
/// the action is the saved fraction of wealth.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SavingsSpec {
    pub alpha_star: f64,
    pub beta_star: f64,
    pub gamma_star: f64,
    pub delta: f64,
    pub wealth_points: usize,
    /// Log-wealth grid half-width in stationary standard deviations.
    pub wealth_truncation: f64,
    /// Explicit log-wealth grid bounds. When absent the bounds come from
    /// the stationary moments; pin them when sweeping a primitive so all
    /// instances share one grid.
    pub wealth_log_bounds: Option<(f64, f64)>,
    pub z_points: usize,
    pub fraction_points: usize,
    pub fraction_min: f64,
    pub fraction_max: f64,
    pub theta_points: usize,
    pub theta_min: f64,
    pub theta_max: f64,
}

impl SavingsSpec {
    pub fn new(alpha_star: f64, beta_star: f64, gamma_star: f64, delta: f64) -> Self {
        Self {
            alpha_star,
            beta_star,
            gamma_star,
            delta,
            wealth_points: 39,
            wealth_truncation: 4.5,
            wealth_log_bounds: None,
            z_points: 5,
            fraction_points: 29,
            fraction_min: 0.02,
            fraction_max: 0.97,
            theta_points: 25,
            theta_min: 0.05,
            theta_max: 0.95,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.beta_star > 0.0
            && self.beta_star < 1.0
            && self.gamma_star >= 0.0
            && self.delta > 0.0
            && self.delta < 1.0
            && self.wealth_points >= 9
            && self.z_points >= 2
            && self.fraction_points >= 3
            && 0.0 < self.fraction_min
            && self.fraction_min < self.fraction_max
            && self.fraction_max < 1.0
            && 0.0 < self.theta_min
            && self.theta_min < self.theta_max
            && self.theta_max < 1.0
            && self.theta_points >= 5;
        if ok {
            Ok(())
        } else {
            Err(Error::Infeasible(
                "savings spec requires 0 < beta_star < 1, gamma_star ≥ 0, 0 < delta < 1".into(),
            ))
        }
    }

    /// Policy fraction `A_z(β) = 0.5δβ / ((1−δβ)z + 0.5δβ)`.
    pub fn policy_fraction(&self, beta: f64, z: f64) -> f64 {
        let db = self.delta * beta;
        0.5 * db / ((1.0 - db) * z + 0.5 * db)
    }

    /// Midpoint z grid, symmetric around 1/2.
    pub fn z_nodes(&self) -> Vec<f64> {
        (0..self.z_points)
            .map(|j| (j as f64 + 0.5) / self.z_points as f64)
            .collect()
    }

    /// Reference log saving `L₀ = E[ln A_z(β*)] + E[ln y]` under the
    /// correct policy, from the stationary mean in closed form.
    pub fn reference_log_saving(&self) -> f64 {
        let zs = self.z_nodes();
        let mean_ln_a = zs
            .iter()
            .map(|&z| self.policy_fraction(self.beta_star, z).ln())
            .sum::<f64>()
            / zs.len() as f64;
        let mean_ln_y = (self.alpha_star + self.beta_star * mean_ln_a + 0.5 * self.gamma_star)
            / (1.0 - self.beta_star);
        mean_ln_a + mean_ln_y
    }

    /// Stationary mean and standard deviation of log wealth under the
    /// correct policy (moments over the discrete z nodes).
    pub fn stationary_log_wealth_moments(&self) -> (f64, f64) {
        let zs = self.z_nodes();
        let lnas: Vec<f64> = zs
            .iter()
            .map(|&z| self.policy_fraction(self.beta_star, z).ln())
            .collect();
        let mean_ln_a = lnas.iter().sum::<f64>() / zs.len() as f64;
        let mean_ln_y = (self.alpha_star + self.beta_star * mean_ln_a + 0.5 * self.gamma_star)
            / (1.0 - self.beta_star);
        // Innovation w = β* ln A_z + γ* z + ξ.
        let mean_w: f64 = zs
            .iter()
            .zip(&lnas)
            .map(|(&z, &la)| self.beta_star * la + self.gamma_star * z)
            .sum::<f64>()
            / zs.len() as f64;
        let var_w: f64 = zs
            .iter()
            .zip(&lnas)
            .map(|(&z, &la)| {
                let w = self.beta_star * la + self.gamma_star * z;
                (w - mean_w) * (w - mean_w)
            })
            .sum::<f64>()
            / zs.len() as f64
            + 1.0;
        let var_ln_y = var_w / (1.0 - self.beta_star * self.beta_star);
        (mean_ln_y, var_ln_y.sqrt())
    }
}

/// Savings SMDP plus the grid metadata needed to interpret flattened
/// states and project policies back onto the `A_z(β)` family.
#[derive(Debug, Clone)]
pub struct SavingsModel {
    pub smdp: Smdp,
    pub spec: SavingsSpec,
    pub log_wealth: Grid,
    pub z_grid: Grid,
    pub fractions: Grid,
    pub reference_log_saving: f64,
}

impl SavingsModel {
    pub fn new(spec: &SavingsSpec) -> Result<Self> {
        spec.validate()?;
        let (lo, hi) = match spec.wealth_log_bounds {
            Some(b) => b,
            None => {
                let (mean_ln_y, sd_ln_y) = spec.stationary_log_wealth_moments();
                let half = spec.wealth_truncation * sd_ln_y;
                (mean_ln_y - half, mean_ln_y + half)
            }
        };
        let log_wealth = Grid::linspace(lo, hi, spec.wealth_points, "log_wealth")?;
        let z_grid = Grid::new(spec.z_nodes(), "z")?;
        let fractions = Grid::linspace(
            spec.fraction_min,
            spec.fraction_max,
            spec.fraction_points,
            "fraction",
        )?;
        let l0 = spec.reference_log_saving();

        let (ny, nz, na) = (log_wealth.len(), z_grid.len(), fractions.len());
        let ns = ny * nz;
        // Next-state cells: log-wealth cells with absorbing (infinite)
        // outer edges; z' uniform over the z nodes.
        let edges = numeric::midpoint_edges(log_wealth.points(), false);
        let z_weight = 1.0 / nz as f64;

        let row_for = |drift: f64| -> Vec<f64> {
            let y_mass = numeric::gaussian_cell_masses(drift, 1.0, &edges);
            let mut row = vec![0.0; ns];
            for (iy, &my) in y_mass.iter().enumerate() {
                for iz in 0..nz {
                    row[iy * nz + iz] = my * z_weight;
                }
            }
            row
        };

        let mut true_rows = Vec::with_capacity(ns * na);
        let mut payoff = vec![0.0; ns * na];
        for iy in 0..ny {
            let ly = log_wealth.get(iy);
            for iz in 0..nz {
                let z = z_grid.get(iz);
                for (ia, &a) in fractions.points().iter().enumerate() {
                    let ln_x = a.ln() + ly;
                    let drift = spec.alpha_star + spec.beta_star * ln_x + spec.gamma_star * z;
                    true_rows.push(row_for(drift));
                    let consumption = (ly.exp() * (1.0 - a)).max(1e-8);
                    payoff[(iy * nz + iz) * na + ia] = z * consumption.ln();
                }
            }
        }
        let true_kernel = Kernel::from_rows(ns, na, true_rows)?;

        let theta_grid = Grid::linspace(spec.theta_min, spec.theta_max, spec.theta_points, "beta")?;
        let kernels = theta_grid
            .points()
            .iter()
            .map(|&beta| {
                let alpha_beta = spec.alpha_star
                    + (spec.beta_star - beta) * l0
                    + 0.5 * spec.gamma_star;
                let mut rows = Vec::with_capacity(ns * na);
                for iy in 0..ny {
                    let ly = log_wealth.get(iy);
                    for _iz in 0..nz {
                        for &a in fractions.points() {
                            let ln_x = a.ln() + ly;
                            rows.push(row_for(alpha_beta + beta * ln_x));
                        }
                    }
                }
                Kernel::from_rows(ns, na, rows)
            })
            .collect::<Result<Vec<_>>>()?;
        let family = ModelFamily::new(theta_grid, kernels)?;

        let states = Grid::new((0..ns).map(|i| i as f64).collect(), "wealth_z_index")?;
        let mdp = Mdp::new(states, fractions.clone(), true_kernel, payoff, spec.delta)?;
        let smdp = Smdp::new(mdp, family, None)?
            .with_state_axes(vec![log_wealth.clone(), z_grid.clone()])?;
        Ok(Self {
            smdp,
            spec: spec.clone(),
            log_wealth,
            z_grid,
            fractions,
            reference_log_saving: l0,
        })
    }

    pub fn n_states(&self) -> usize {
        self.log_wealth.len() * self.z_grid.len()
    }

    /// Marginal distribution over the log-wealth axis.
    pub fn wealth_marginal(&self, m: &JointDistribution) -> Vec<f64> {
        let (ny, nz) = (self.log_wealth.len(), self.z_grid.len());
        let ms = m.state_marginal();
        (0..ny)
            .map(|iy| (0..nz).map(|iz| ms[iy * nz + iz]).sum())
            .collect()
    }

    /// Mass on the extreme log-wealth nodes (truncation diagnostics).
    pub fn boundary_mass(&self, m: &JointDistribution) -> f64 {
        let w = self.wealth_marginal(m);
        w[0] + w[w.len() - 1]
    }

    /// Projects a policy onto the `A_z(β)` family: the β minimizing the
    /// m-weighted squared distance between chosen fractions and `A_z(β)`
    /// over a fine β scan.
    pub fn project_policy_beta(&self, policy: &Policy, m: &JointDistribution) -> f64 {
        let (ny, nz) = (self.log_wealth.len(), self.z_grid.len());
        let objective = |beta: f64| -> f64 {
            let mut acc = 0.0;
            for iy in 0..ny {
                for iz in 0..nz {
                    let s = iy * nz + iz;
                    let w: f64 = (0..policy.n_actions()).map(|x| m.mass(s, x)).sum();
                    if w == 0.0 {
                        continue;
                    }
                    let target = self.spec.policy_fraction(beta, self.z_grid.get(iz));
                    for x in 0..policy.n_actions() {
                        let pw = policy.weight(s, x) * w;
                        if pw > 0.0 {
                            let d = self.fractions.get(x) - target;
                            acc += pw * d * d;
                        }
                    }
                }
            }
            acc
        };
        let mut best = (self.spec.theta_min, objective(self.spec.theta_min));
        let n_scan = 400;
        for k in 1..=n_scan {
            let beta = self.spec.theta_min
                + (self.spec.theta_max - self.spec.theta_min) * k as f64 / n_scan as f64;
            let v = objective(beta);
            if v < best.1 {
                best = (beta, v);
            }
        }
        best.0
    }
}

/// Convenience wrapper returning only the SMDP.
pub fn build_savings(spec: &SavingsSpec) -> Result<Smdp> {
    Ok(SavingsModel::new(spec)?.smdp)
}

/// Right-hand side of the stationary inference map
/// `β̂ = β* + γ*·Cov(z, ln A_z(β)) / (Var(ln A_z(β)) + Var(ln Y))`,
/// with moments under the continuous true process evaluated by Monte
/// Carlo (`n_draws` periods after a 10⁴-period burn-in, fixed seed).
pub fn savings_consistency_rhs(beta: f64, spec: &SavingsSpec, seed: u64, n_draws: usize) -> f64 {
    assert!(beta > 0.0 && beta < 1.0);
    let mut rng = Xoshiro256StarStar::seed_from_u64(seed);
    let normal = StandardNormal;
    let burn = 10_000;
    let mut ln_y = spec.alpha_star / (1.0 - spec.beta_star);
    // Accumulators for (z, lnA, lnY) first and second moments.
    let (mut s_z, mut s_a, mut s_y) = (0.0, 0.0, 0.0);
    let (mut s_zz, mut s_aa, mut s_yy, mut s_za) = (0.0, 0.0, 0.0, 0.0);
    let mut count = 0.0;
    for t in 0..burn + n_draws {
        let z: f64 = rng.gen::<f64>();
        let xi: f64 = normal.sample(&mut rng);
        let ln_a = spec.policy_fraction(beta, z).ln();
        let ln_x = ln_a + ln_y;
        if t >= burn {
            count += 1.0;
            s_z += z;
            s_a += ln_a;
            s_y += ln_y;
            s_zz += z * z;
            s_aa += ln_a * ln_a;
            s_yy += ln_y * ln_y;
            s_za += z * ln_a;
        }
        ln_y = spec.alpha_star + spec.beta_star * ln_x + spec.gamma_star * z + xi;
    }
    let mz = s_z / count;
    let ma = s_a / count;
    let my = s_y / count;
    let cov_za = s_za / count - mz * ma;
    let var_a = s_aa / count - ma * ma;
    let var_y = s_yy / count - my * my;
    let _ = s_zz;
    spec.beta_star + spec.gamma_star * cov_za / (var_a + var_y)
}

/// Fixed point of the Monte Carlo inference map by bisection on
/// `rhs(β) − β` over `(0, β*]`, common random numbers across evaluations.
pub fn savings_eq13_fixed_point(spec: &SavingsSpec, seed: u64, n_draws: usize) -> Result<f64> {
    let g = |beta: f64| savings_consistency_rhs(beta, spec, seed, n_draws) - beta;
    let mut lo = 0.02_f64.min(0.5 * spec.beta_star);
    let hi = spec.beta_star;
    let mut flo = g(lo);
    let fhi = g(hi);
    if fhi > 0.0 {
        // γ* = 0 puts the fixed point at β* itself.
        return Ok(hi);
    }
    // Walk the bracket up if the lower end is also negative.
    let mut tries = 0;
    while flo < 0.0 && tries < 8 {
        lo *= 0.5;
        flo = g(lo);
        tries += 1;
    }
    if flo < 0.0 {
        return Err(Error::NoConvergence {
            what: "savings inference map bracketing".into(),
            max_iter: 8,
            achieved: flo.abs(),
            tol: 0.0,
        });
    }
    let (root, _) = numeric::bisect(g, lo, hi, 1e-6, 1e-6, 200);
    Ok(root)
}

use rand::Rng;

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn effort_kernel_entries_match_definitions() {
        let smdp = build_effort_task(&EffortTaskSpec::new(0.45, 0.3, 0.6, 0.9)).unwrap();
        let q = smdp.mdp().kernel();
        assert_abs_diff_eq!(q.prob(0, 0, 1), 0.3, epsilon = 0.0);
        assert_abs_diff_eq!(q.prob(1, 0, 1), 0.6, epsilon = 0.0);
        assert_abs_diff_eq!(q.prob(0, 1, 1), 1.0, epsilon = 0.0);
        assert_abs_diff_eq!(q.prob(1, 1, 1), 1.0, epsilon = 0.0);
        // Objective payoff is the true-expectation form.
        assert_abs_diff_eq!(smdp.mdp().payoff(0, 0), 0.3, epsilon = 1e-15);
        assert_abs_diff_eq!(smdp.mdp().payoff(1, 0), 0.6, epsilon = 1e-15);
        assert_abs_diff_eq!(smdp.mdp().payoff(0, 1), 0.55, epsilon = 1e-15);
    }

    #[test]
    fn effort_theta_grid_contains_indifference_model() {
        let spec = EffortTaskSpec::new(0.45, 0.3, 0.6, 0.9);
        let smdp = build_effort_task(&spec).unwrap();
        let grid = smdp.theta_grid();
        let i = grid.nearest(1.0 - spec.c);
        assert_eq!(grid.get(i), 1.0 - spec.c);
    }

    #[test]
    fn effort_task_is_misspecified_when_q0_differs_from_q1() {
        let smdp = build_effort_task(&EffortTaskSpec::new(0.45, 0.3, 0.6, 0.9)).unwrap();
        assert!(smdp.is_misspecified());
    }

    #[test]
    fn effort_invariants_enforced() {
        assert!(build_effort_task(&EffortTaskSpec::new(0.45, 0.6, 0.9, 0.9)).is_err());
        assert!(build_effort_task(&EffortTaskSpec::new(0.45, 0.3, 0.5, 0.9)).is_err());
    }

    #[test]
    fn closed_form_values_for_canonical_parameters() {
        let spec = EffortTaskSpec::new(0.45, 0.3, 0.6, 0.9);
        assert_abs_diff_eq!(spec.closed_form_mix(), 0.37037037037037035, epsilon = 1e-15);
        assert_abs_diff_eq!(spec.closed_form_ms1(), 5.0 / 6.0, epsilon = 1e-12);
        let eq = effort_task_closed_form(&spec).unwrap();
        assert_abs_diff_eq!(eq.theta_star, 0.55, epsilon = 1e-15);
        let ms = eq.m_star.state_marginal();
        assert_abs_diff_eq!(ms[1], 0.8333333333333334, epsilon = 1e-12);
    }

    #[test]
    fn closed_form_mix_vanishes_at_feasibility_edge() {
        // c → (1−q1)+ makes the numerator q1−(1−c) → 0.
        let spec = EffortTaskSpec::new(0.4 + 1e-9, 0.3, 0.6, 0.9);
        assert!(spec.validate().is_ok());
        assert!(spec.closed_form_mix() < 1e-6);
    }

    #[test]
    fn ar1_correctly_specified_when_means_are_zero() {
        let mut spec = Ar1Spec::new(0.6, 0.0, 0.0, 1.0);
        spec.grid_points = 41;
        spec.theta_points = 41;
        let smdp = build_ar1(&spec).unwrap();
        assert!(!smdp.is_misspecified());
        let i = smdp.theta_grid().nearest(0.6);
        assert_eq!(smdp.theta_grid().get(i), 0.6);
    }

    #[test]
    fn ar1_mixture_innovations_are_misspecified() {
        let mut spec = Ar1Spec::new(0.6, -0.5, 0.5, 1.0);
        spec.grid_points = 41;
        spec.theta_points = 41;
        let smdp = build_ar1(&spec).unwrap();
        assert!(smdp.is_misspecified());
    }

    #[test]
    fn ar1_statewise_fit_matches_mixture_conditional_mean() {
        // E[s'|s] = ρs + (μ1+μ2)/2, so θ̂(s) = ρ + (μ1+μ2)/(2s).
        let mut spec = Ar1Spec::new(0.6, 0.2, 0.8, 1.0);
        spec.grid_points = 201;
        spec.theta_points = 41;
        let smdp = build_ar1(&spec).unwrap();
        let states = smdp.mdp().states();
        let target = 2.0;
        let idx = states.nearest(target);
        let s = states.get(idx);
        let fit = ar1_statewise_best_fit(&smdp, idx).unwrap();
        assert!(!fit.degenerate);
        let expect = spec.rho + 0.5 * (spec.mu1 + spec.mu2) / s;
        assert_abs_diff_eq!(fit.theta, expect, epsilon = 1e-4);
    }

    #[test]
    fn ar1_statewise_fit_error_shrinks_under_grid_refinement() {
        // The discretization error is dominated by the truncation window;
        // enlarging it (with proportionally more nodes) must at least
        // halve the error against the analytic conditional mean.
        let eval = |truncation: f64, grid_points: usize| -> f64 {
            let mut spec = Ar1Spec::new(0.6, 0.2, 0.8, 1.0);
            spec.grid_points = grid_points;
            spec.theta_points = 41;
            spec.truncation = truncation;
            let smdp = build_ar1(&spec).unwrap();
            let states = smdp.mdp().states();
            let idx = states.nearest(2.0);
            let s = states.get(idx);
            let fit = ar1_statewise_best_fit(&smdp, idx).unwrap();
            let expect = spec.rho + 0.5 * (spec.mu1 + spec.mu2) / s;
            (fit.theta - expect).abs()
        };
        let coarse = eval(3.0, 51);
        let fine = eval(4.0, 101);
        assert!(
            fine <= 0.5 * coarse + 1e-12,
            "coarse {coarse:.3e}, fine {fine:.3e}"
        );
    }

    #[test]
    fn ar1_statewise_fit_flags_zero_state() {
        let mut spec = Ar1Spec::new(0.6, 0.0, 0.0, 1.0);
        spec.grid_points = 41;
        spec.theta_points = 41;
        let smdp = build_ar1(&spec).unwrap();
        let zero = smdp.mdp().states().nearest(0.0);
        assert!(smdp.mdp().states().get(zero).abs() < 1e-12);
        let fit = ar1_statewise_best_fit(&smdp, zero).unwrap();
        assert!(fit.degenerate);
    }

    #[test]
    fn savings_builder_shapes_and_normalization() {
        let mut spec = SavingsSpec::new(0.0, 0.6, 1.0, 0.9);
        spec.wealth_points = 15;
        spec.z_points = 3;
        spec.fraction_points = 9;
        spec.theta_points = 7;
        let model = SavingsModel::new(&spec).unwrap();
        let smdp = &model.smdp;
        assert_eq!(smdp.n_states(), 45);
        assert_eq!(smdp.n_actions(), 9);
        assert!(smdp.is_misspecified());
        assert_eq!(smdp.state_axes().len(), 2);
        // Correct-policy fractions fall inside the action grid.
        for &z in model.z_grid.points() {
            let a = spec.policy_fraction(spec.beta_star, z);
            assert!(a > spec.fraction_min && a < spec.fraction_max);
        }
    }

    #[test]
    fn savings_correctly_specified_when_gamma_is_zero() {
        let mut spec = SavingsSpec::new(0.0, 0.6, 0.0, 0.9);
        spec.wealth_points = 11;
        spec.z_points = 3;
        spec.fraction_points = 7;
        spec.theta_points = 7;
        // β* must be a θ node for the entrywise comparison to find it.
        spec.theta_min = 0.2;
        spec.theta_max = 0.8;
        // 7 nodes on [0.2, 0.8] include 0.6 exactly.
        let model = SavingsModel::new(&spec).unwrap();
        assert!(!model.smdp.is_misspecified());
    }

    #[test]
    fn consistency_rhs_returns_beta_star_when_gamma_zero() {
        let spec = SavingsSpec::new(0.0, 0.6, 0.0, 0.9);
        let rhs = savings_consistency_rhs(0.4, &spec, 7, 20_000);
        assert_abs_diff_eq!(rhs, 0.6, epsilon = 1e-12);
    }

    #[test]
    fn consistency_rhs_below_beta_star_when_gamma_positive() {
        let spec = SavingsSpec::new(0.0, 0.6, 1.0, 0.9);
        let rhs = savings_consistency_rhs(0.5, &spec, 7, 50_000);
        assert!(rhs < spec.beta_star);
        assert!(rhs > 0.0);
    }

    #[test]
    fn eq13_fixed_point_interior() {
        let spec = SavingsSpec::new(0.0, 0.6, 1.0, 0.9);
        let fp = savings_eq13_fixed_point(&spec, 7, 100_000).unwrap();
        assert!(fp > 0.0 && fp < spec.beta_star, "fp = {fp}");
    }
}
