//! Simulation of the misspecified Bayesian learning process: states drawn
//! from the true kernel, actions optimal under the current posterior, and
//! grid-Bayes updates over the parameter set.
//!
//! Two action rules are provided. `Anticipated` re-solves the stationary
//! problem each period treating the current posterior as permanent and
//! plays the greatest selection; `BeliefDp` solves the belief-augmented
//! Bellman equation on a discretized belief simplex (at most 3 models)
//! and plays its policy.

use std::io::Write;

use rand::Rng;
use rand::SeedableRng;
use rand_xoshiro::Xoshiro256StarStar;
use serde::{Deserialize, Serialize};

use crate::equilibrium::Equilibrium;
use crate::error::{Error, Result};
use crate::mdp::{
    greatest_selection, optimal_policy_set, solve_value_function_from, Policy, ValueFunction,
};
use crate::smdp::{mixture_kernel, Belief, ModelFamily, Smdp};

/// Action rule used along the simulated path.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LearningMode {
    /// Re-solve the stationary problem at the current posterior each
    /// period (anticipated utility).
    Anticipated,
    /// Solve the belief-augmented dynamic program on a discretized
    /// belief simplex; permitted only for families with ≤ 3 models.
    BeliefDp,
}

/// Which law transitions are sampled from. The subjective option exists
/// for model-consistency diagnostics (posterior-mean martingale checks).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SamplingLaw {
    TrueKernel,
    SubjectiveMixture,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SimulateOptions {
    pub mode: LearningMode,
    /// Re-solve cadence in anticipated mode (1 = every period).
    pub resolve_every: usize,
    /// Store a full belief snapshot every this many periods.
    pub snapshot_every: usize,
    /// Nodes per simplex dimension in belief-DP mode.
    pub belief_grid_points: usize,
    pub value_tol: f64,
    pub indifference_slack: f64,
    pub sampling: SamplingLaw,
    /// Initial state distribution q₀; point mass at state 0 when absent.
    pub initial_state_dist: Option<Vec<f64>>,
}

impl Default for SimulateOptions {
    fn default() -> Self {
        Self {
            mode: LearningMode::Anticipated,
            resolve_every: 1,
            snapshot_every: 1000,
            belief_grid_points: 51,
            value_tol: 1e-10,
            indifference_slack: 1e-8,
            sampling: SamplingLaw::TrueKernel,
            initial_state_dist: None,
        }
    }
}

/// One simulated period. The posterior summary is taken after the Bayes
/// update on this period's transition.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Step {
    pub state: usize,
    pub action: usize,
    pub next_state: usize,
    pub posterior_mean: f64,
    pub posterior_sd: f64,
}

/// A simulated learning path.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Trajectory {
    pub seed: u64,
    pub initial_state_dist: Vec<f64>,
    pub periods: usize,
    pub mode: LearningMode,
    pub resolve_every: usize,
    pub steps: Vec<Step>,
    /// (period, belief) snapshots at the configured cadence, plus the
    /// final belief.
    pub snapshots: Vec<(usize, Belief)>,
    pub final_belief: Belief,
    /// Largest sup-norm distance between the exact posterior and its
    /// simplex projection (belief-DP mode only).
    pub projection_error: f64,
}

impl Trajectory {
    /// CSV export: period, state, action, next_state, posterior_mean,
    /// posterior_sd.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(
            w,
            "period,state,action,next_state,posterior_mean,posterior_sd"
        )?;
        for (t, s) in self.steps.iter().enumerate() {
            writeln!(
                w,
                "{},{},{},{},{},{}",
                t, s.state, s.action, s.next_state, s.posterior_mean, s.posterior_sd
            )?;
        }
        Ok(())
    }
}

/// Bayes update over the parameter grid: posterior ∝ Q_θ(s'|s,x)·μ(θ).
pub fn bayes_update(
    belief: &Belief,
    family: &ModelFamily,
    s: usize,
    x: usize,
    s_next: usize,
) -> Result<Belief> {
    let mut post = Vec::with_capacity(belief.len());
    let mut total = 0.0;
    for (i, &w) in belief.mass().iter().enumerate() {
        let like = family.kernel(i).prob(s, x, s_next);
        let p = w * like;
        post.push(p);
        total += p;
    }
    if !(total > 0.0) {
        return Err(Error::ZeroLikelihood {
            state: s,
            action: x,
            next_state: s_next,
        });
    }
    for p in post.iter_mut() {
        *p /= total;
    }
    Ok(Belief::new(post)?)
}

fn sample_index<R: Rng>(row: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    for (i, &p) in row.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    row.len() - 1
}

/// Runs the learning process for `periods` steps.
///
/// All randomness comes from a xoshiro256** generator seeded through
/// SplitMix64 from `seed`; identical inputs reproduce trajectories
/// bitwise.
pub fn simulate_learning(
    smdp: &Smdp,
    prior: &Belief,
    periods: usize,
    seed: u64,
    opts: &SimulateOptions,
) -> Result<Trajectory> {
    if prior.len() != smdp.family().len() {
        return Err(Error::Dimension(format!(
            "prior over {} parameters, family has {}",
            prior.len(),
            smdp.family().len()
        )));
    }
    if periods == 0 {
        return Err(Error::Infeasible("periods must be ≥ 1".into()));
    }
    let ns = smdp.n_states();
    let q0 = match &opts.initial_state_dist {
        Some(d) => {
            if d.len() != ns {
                return Err(Error::Dimension("initial state distribution length".into()));
            }
            d.clone()
        }
        None => {
            let mut d = vec![0.0; ns];
            d[0] = 1.0;
            d
        }
    };
    match opts.mode {
        LearningMode::Anticipated => simulate_anticipated(smdp, prior, periods, seed, opts, q0),
        LearningMode::BeliefDp => simulate_belief_dp(smdp, prior, periods, seed, opts, q0),
    }
}

fn simulate_anticipated(
    smdp: &Smdp,
    prior: &Belief,
    periods: usize,
    seed: u64,
    opts: &SimulateOptions,
    q0: Vec<f64>,
) -> Result<Trajectory> {
    let theta_grid = smdp.theta_grid();
    let mut rng = Xoshiro256StarStar::seed_from_u64(seed);
    let mut belief = prior.clone();
    let mut state = sample_index(&q0, &mut rng);
    let mut warm = ValueFunction::zeros(smdp.n_states());
    let mut policy: Option<Policy> = None;
    let mut steps = Vec::with_capacity(periods);
    let mut snapshots = Vec::new();
    let resolve_every = opts.resolve_every.max(1);
    for t in 0..periods {
        if t % resolve_every == 0 || policy.is_none() {
            let mdp_mu = smdp.subjective_mdp_for_belief(&belief)?;
            let v = solve_value_function_from(&mdp_mu, opts.value_tol, warm.clone(), 1_000_000)?;
            let pc = optimal_policy_set(&mdp_mu, &v, opts.indifference_slack);
            policy = Some(greatest_selection(&pc));
            warm = v;
        }
        let action = policy
            .as_ref()
            .unwrap()
            .pure_assignment()
            .expect("selections are pure")[state];
        let row: Vec<f64> = match opts.sampling {
            SamplingLaw::TrueKernel => smdp.mdp().kernel().row(state, action).to_vec(),
            SamplingLaw::SubjectiveMixture => {
                mixture_kernel(smdp.family(), &belief)?.row(state, action).to_vec()
            }
        };
        let next_state = sample_index(&row, &mut rng);
        belief = bayes_update(&belief, smdp.family(), state, action, next_state)?;
        if t % opts.snapshot_every == 0 {
            snapshots.push((t, belief.clone()));
        }
        steps.push(Step {
            state,
            action,
            next_state,
            posterior_mean: belief.mean(theta_grid),
            posterior_sd: belief.sd(theta_grid),
        });
        state = next_state;
    }
    Ok(Trajectory {
        seed,
        initial_state_dist: q0,
        periods,
        mode: LearningMode::Anticipated,
        resolve_every,
        steps,
        snapshots,
        final_belief: belief,
        projection_error: 0.0,
    })
}

/// Uniform barycentric grid on the belief simplex over `k ≤ 3` models.
fn simplex_nodes(k: usize, points_per_dim: usize) -> Vec<Vec<f64>> {
    let g = points_per_dim.max(2) - 1;
    let mut nodes = Vec::new();
    match k {
        1 => nodes.push(vec![1.0]),
        2 => {
            for i in 0..=g {
                let p = i as f64 / g as f64;
                nodes.push(vec![p, 1.0 - p]);
            }
        }
        3 => {
            for i in 0..=g {
                for j in 0..=(g - i) {
                    let a = i as f64 / g as f64;
                    let b = j as f64 / g as f64;
                    nodes.push(vec![a, b, 1.0 - a - b]);
                }
            }
        }
        _ => unreachable!(),
    }
    nodes
}

fn nearest_node(nodes: &[Vec<f64>], mass: &[f64]) -> (usize, f64) {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (i, node) in nodes.iter().enumerate() {
        let d: f64 = node
            .iter()
            .zip(mass)
            .map(|(a, b)| (a - b) * (a - b))
            .sum();
        if d < best_d {
            best_d = d;
            best = i;
        }
    }
    let sup = nodes[best]
        .iter()
        .zip(mass)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    (best, sup)
}

fn simulate_belief_dp(
    smdp: &Smdp,
    prior: &Belief,
    periods: usize,
    seed: u64,
    opts: &SimulateOptions,
    q0: Vec<f64>,
) -> Result<Trajectory> {
    let k = smdp.family().len();
    if k > 3 {
        return Err(Error::BeliefDpTooLarge(k));
    }
    let theta_grid = smdp.theta_grid();
    let (ns, nx) = (smdp.n_states(), smdp.n_actions());
    let beta = smdp.mdp().discount();
    let nodes = simplex_nodes(k, opts.belief_grid_points);
    let nn = nodes.len();

    // Per node: mixture kernel and subjective payoff.
    let mut node_kernels = Vec::with_capacity(nn);
    let mut node_payoffs = Vec::with_capacity(nn);
    for node in &nodes {
        let b = Belief::new(node.clone())?;
        let kern = mixture_kernel(smdp.family(), &b)?;
        let mdp = smdp.subjective_mdp_for_kernel(kern.clone())?;
        node_payoffs.push(mdp.payoff_matrix().to_vec());
        node_kernels.push(kern);
    }
    // Deterministic belief transitions: node × (s, x, s') → node.
    let mut proj = vec![0usize; nn * ns * nx * ns];
    for (bi, node) in nodes.iter().enumerate() {
        let b = Belief::new(node.clone())?;
        for s in 0..ns {
            for x in 0..nx {
                for sn in 0..ns {
                    let idx = ((bi * ns + s) * nx + x) * ns + sn;
                    proj[idx] = match bayes_update(&b, smdp.family(), s, x, sn) {
                        Ok(post) => nearest_node(&nodes, post.mass()).0,
                        // Zero subjective likelihood: the model cannot
                        // reach this transition, value contribution is 0.
                        Err(_) => bi,
                    };
                }
            }
        }
    }
    // Value iteration on the product space (s, node).
    let stop = if beta > 0.0 {
        opts.value_tol * (1.0 - beta) / beta
    } else {
        f64::INFINITY
    };
    let mut v = vec![0.0; ns * nn];
    let mut policy_table = vec![0usize; ns * nn];
    for _ in 0..1_000_000 {
        let mut delta: f64 = 0.0;
        let mut next = vec![0.0; ns * nn];
        for bi in 0..nn {
            let kern = &node_kernels[bi];
            let pay = &node_payoffs[bi];
            for s in 0..ns {
                let mut best = f64::NEG_INFINITY;
                let mut best_x = 0;
                for x in 0..nx {
                    let row = kern.row(s, x);
                    let mut acc = 0.0;
                    for sn in 0..ns {
                        if row[sn] > 0.0 {
                            let nb = proj[((bi * ns + s) * nx + x) * ns + sn];
                            acc += row[sn] * v[sn * nn + nb];
                        }
                    }
                    let q = pay[s * nx + x] + beta * acc;
                    if q > best {
                        best = q;
                        best_x = x;
                    }
                }
                next[s * nn + bi] = best;
                policy_table[s * nn + bi] = best_x;
                delta = delta.max((best - v[s * nn + bi]).abs());
            }
        }
        v = next;
        if delta <= stop {
            break;
        }
    }

    // Simulate with the exact posterior, projecting only for the policy
    // lookup.
    let mut rng = Xoshiro256StarStar::seed_from_u64(seed);
    let mut belief = prior.clone();
    let mut state = sample_index(&q0, &mut rng);
    let mut steps = Vec::with_capacity(periods);
    let mut snapshots = Vec::new();
    let mut projection_error: f64 = 0.0;
    for t in 0..periods {
        let (node, err) = nearest_node(&nodes, belief.mass());
        projection_error = projection_error.max(err);
        let action = policy_table[state * nn + node];
        let row = smdp.mdp().kernel().row(state, action).to_vec();
        let next_state = sample_index(&row, &mut rng);
        belief = bayes_update(&belief, smdp.family(), state, action, next_state)?;
        if t % opts.snapshot_every == 0 {
            snapshots.push((t, belief.clone()));
        }
        steps.push(Step {
            state,
            action,
            next_state,
            posterior_mean: belief.mean(theta_grid),
            posterior_sd: belief.sd(theta_grid),
        });
        state = next_state;
    }
    Ok(Trajectory {
        seed,
        initial_state_dist: q0,
        periods,
        mode: LearningMode::BeliefDp,
        resolve_every: 1,
        steps,
        snapshots,
        final_belief: belief,
        projection_error,
    })
}

/// Convergence diagnostics over the last three dyadic windows
/// `[T/8, T/4)`, `[T/4, T/2)`, `[T/2, T)`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConvergenceReport {
    /// Total-variation distance between the window's empirical
    /// state–action frequencies and m*.
    pub tv_distances: [f64; 3],
    /// |posterior mean − θ*| at each window's end.
    pub posterior_mean_distances: [f64; 3],
    pub tv_declining: bool,
    pub posterior_declining: bool,
    pub final_tv: f64,
    pub final_posterior_mean_distance: f64,
}

pub fn convergence_diagnostics(
    smdp: &Smdp,
    trajectory: &Trajectory,
    eq: &Equilibrium,
) -> Result<ConvergenceReport> {
    let t = trajectory.steps.len();
    if t < 8 {
        return Err(Error::Infeasible(
            "need at least 8 periods for dyadic diagnostics".into(),
        ));
    }
    let (ns, nx) = (smdp.n_states(), smdp.n_actions());
    let windows = [(t / 8, t / 4), (t / 4, t / 2), (t / 2, t)];
    let mut tv = [0.0; 3];
    let mut pd = [0.0; 3];
    for (w, &(lo, hi)) in windows.iter().enumerate() {
        let mut freq = vec![0.0; ns * nx];
        for step in &trajectory.steps[lo..hi] {
            freq[step.state * nx + step.action] += 1.0;
        }
        let count = (hi - lo) as f64;
        for f in freq.iter_mut() {
            *f /= count;
        }
        tv[w] = 0.5
            * freq
                .iter()
                .zip(eq.m_star.raw())
                .map(|(a, b)| (a - b).abs())
                .sum::<f64>();
        pd[w] = (trajectory.steps[hi - 1].posterior_mean - eq.theta_star).abs();
    }
    Ok(ConvergenceReport {
        tv_distances: tv,
        posterior_mean_distances: pd,
        tv_declining: tv[0] >= tv[1] && tv[1] >= tv[2],
        posterior_declining: pd[0] >= pd[1] && pd[1] >= pd[2],
        final_tv: tv[2],
        final_posterior_mean_distance: pd[2],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;
    use crate::mdp::Kernel;
    use crate::registry::{build_effort_task, EffortTaskSpec};
    use crate::smdp::ModelFamily;
    use approx::assert_abs_diff_eq;

    fn effort() -> Smdp {
        build_effort_task(&EffortTaskSpec::new(0.45, 0.3, 0.6, 0.9)).unwrap()
    }

    #[test]
    fn bayes_equal_likelihoods_leave_belief_unchanged() {
        let smdp = effort();
        let b = Belief::uniform(smdp.family().len());
        // High effort succeeds with probability 1 under every model.
        let post = bayes_update(&b, smdp.family(), 0, 1, 1).unwrap();
        for (a, c) in post.mass().iter().zip(b.mass()) {
            assert_abs_diff_eq!(a, c, epsilon = 1e-15);
        }
    }

    #[test]
    fn bayes_two_to_one_likelihood_ratio() {
        // Two models with likelihoods 0.6 and 0.3 for the observation:
        // prior (1/2, 1/2) → posterior (2/3, 1/3).
        let ka = Kernel::new(2, 1, vec![0.4, 0.6, 0.4, 0.6]).unwrap();
        let kb = Kernel::new(2, 1, vec![0.7, 0.3, 0.7, 0.3]).unwrap();
        let family = ModelFamily::new(
            Grid::new(vec![0.3, 0.6], "theta").unwrap(),
            vec![ka, kb],
        )
        .unwrap();
        let prior = Belief::uniform(2);
        let post = bayes_update(&prior, &family, 0, 0, 1).unwrap();
        assert_abs_diff_eq!(post.mass()[0], 2.0 / 3.0, epsilon = 1e-15);
        assert_abs_diff_eq!(post.mass()[1], 1.0 / 3.0, epsilon = 1e-15);
    }

    #[test]
    fn bayes_dirac_prior_is_absorbing() {
        let smdp = effort();
        let i = smdp.theta_grid().nearest(0.7);
        let prior = Belief::dirac(smdp.family().len(), i);
        let post = bayes_update(&prior, smdp.family(), 1, 0, 1).unwrap();
        assert_abs_diff_eq!(post.mass()[i], 1.0, epsilon = 1e-15);
    }

    #[test]
    fn bayes_zero_total_likelihood_errors() {
        let smdp = effort();
        // Dirac at θ = 0 cannot explain a success under low effort.
        let prior = Belief::dirac(smdp.family().len(), 0);
        assert!(matches!(
            bayes_update(&prior, smdp.family(), 0, 0, 1),
            Err(Error::ZeroLikelihood { .. })
        ));
    }

    #[test]
    fn single_period_trajectory() {
        let smdp = effort();
        let prior = Belief::uniform(smdp.family().len());
        let tr = simulate_learning(&smdp, &prior, 1, 42, &SimulateOptions::default()).unwrap();
        assert_eq!(tr.steps.len(), 1);
    }

    #[test]
    fn trajectories_are_bitwise_reproducible() {
        let smdp = effort();
        let prior = Belief::uniform(smdp.family().len());
        let opts = SimulateOptions::default();
        let a = simulate_learning(&smdp, &prior, 200, 7, &opts).unwrap();
        let b = simulate_learning(&smdp, &prior, 200, 7, &opts).unwrap();
        for (x, y) in a.steps.iter().zip(&b.steps) {
            assert_eq!(x.state, y.state);
            assert_eq!(x.action, y.action);
            assert_eq!(x.next_state, y.next_state);
            assert_eq!(x.posterior_mean.to_bits(), y.posterior_mean.to_bits());
        }
    }

    #[test]
    fn posterior_support_never_grows() {
        let smdp = effort();
        let n = smdp.family().len();
        let mut w = vec![0.0; n];
        for i in (0..n).step_by(2) {
            w[i] = 1.0;
        }
        let prior = Belief::from_weights(&w).unwrap();
        let zero_before: Vec<usize> = (0..n).filter(|&i| prior.mass()[i] == 0.0).collect();
        let tr = simulate_learning(&smdp, &prior, 300, 3, &SimulateOptions::default()).unwrap();
        for i in zero_before {
            assert_eq!(tr.final_belief.mass()[i], 0.0);
        }
    }

    #[test]
    fn posterior_mean_is_a_martingale_under_the_subjective_mixture() {
        // Sampling transitions from the agent's own mixture makes the
        // posterior mean a martingale: the average terminal drift over
        // independent seeds is zero within Monte Carlo error.
        let smdp = effort();
        let prior = Belief::uniform(smdp.family().len());
        let opts = SimulateOptions {
            sampling: SamplingLaw::SubjectiveMixture,
            ..Default::default()
        };
        let start = prior.mean(smdp.theta_grid());
        let n_seeds = 400;
        let mut drifts = Vec::with_capacity(n_seeds);
        for seed in 0..n_seeds as u64 {
            let tr = simulate_learning(&smdp, &prior, 40, seed, &opts).unwrap();
            drifts.push(tr.steps.last().unwrap().posterior_mean - start);
        }
        let mean: f64 = drifts.iter().sum::<f64>() / n_seeds as f64;
        let var: f64 =
            drifts.iter().map(|d| (d - mean) * (d - mean)).sum::<f64>() / (n_seeds - 1) as f64;
        let se = (var / n_seeds as f64).sqrt();
        assert!(
            mean.abs() <= 4.0 * se + 1e-4,
            "drift {mean:.5} exceeds 4·se {se:.5}"
        );
    }

    #[test]
    fn correctly_specified_family_concentrates_on_truth() {
        // A state-independent success probability q embeds the truth in
        // the effort-style family at θ = q; with 1−c < q the agent keeps
        // playing the informative low action and the posterior
        // concentrates on the truth (Bayesian consistency).
        let (q, c) = (0.7, 0.75);
        let smdp = crate::registry::build_state_independent_task(q, c, 0.9, 201).unwrap();
        assert!(!smdp.is_misspecified());
        let prior = Belief::uniform(smdp.family().len());
        let opts = SimulateOptions {
            initial_state_dist: Some(vec![0.0, 1.0]),
            ..Default::default()
        };
        let tr = simulate_learning(&smdp, &prior, 20_000, 3, &opts).unwrap();
        let final_mean = tr.steps.last().unwrap().posterior_mean;
        assert_abs_diff_eq!(final_mean, q, epsilon = 0.02);
    }

    #[test]
    fn belief_dp_rejects_large_families() {
        let smdp = effort();
        let prior = Belief::uniform(smdp.family().len());
        let opts = SimulateOptions {
            mode: LearningMode::BeliefDp,
            ..Default::default()
        };
        assert!(matches!(
            simulate_learning(&smdp, &prior, 10, 0, &opts),
            Err(Error::BeliefDpTooLarge(_))
        ));
    }

    #[test]
    fn belief_dp_runs_on_a_two_model_family() {
        // Shrink the effort-task family to two models bracketing 1−c.
        let smdp = effort();
        let grid = Grid::new(vec![0.3, 0.8], "theta").unwrap();
        let kern = |theta: f64| {
            Kernel::new(
                2,
                2,
                vec![1.0 - theta, theta, 0.0, 1.0, 1.0 - theta, theta, 0.0, 1.0],
            )
            .unwrap()
        };
        let family = ModelFamily::new(grid, vec![kern(0.3), kern(0.8)]).unwrap();
        let small = Smdp::new(
            smdp.mdp().clone(),
            family,
            smdp.transition_payoff().cloned(),
        )
        .unwrap();
        let prior = Belief::uniform(2);
        let opts = SimulateOptions {
            mode: LearningMode::BeliefDp,
            belief_grid_points: 21,
            ..Default::default()
        };
        let tr = simulate_learning(&small, &prior, 500, 5, &opts).unwrap();
        assert_eq!(tr.steps.len(), 500);
        // Projection error is bounded by half the simplex grid spacing.
        assert!(tr.projection_error <= 0.5 / 20.0 + 1e-12);
    }

    #[test]
    fn diagnostics_flag_adversarial_dirac_prior() {
        use crate::equilibrium::{solve_berk_nash, SolveOptions};
        let smdp = effort();
        let eqs = solve_berk_nash(&smdp, &SolveOptions::default()).unwrap();
        let eq = eqs.iter().find(|e| e.is_mixed()).unwrap();
        // Dirac at a wrong θ never moves; the posterior distance stalls.
        let wrong = smdp.theta_grid().nearest(0.9);
        let prior = Belief::dirac(smdp.family().len(), wrong);
        let tr = simulate_learning(&smdp, &prior, 2_000, 9, &SimulateOptions::default()).unwrap();
        let rep = convergence_diagnostics(&smdp, &tr, eq).unwrap();
        assert!(rep.final_posterior_mean_distance > 0.1);
        assert!(!rep.posterior_declining || rep.posterior_mean_distances[0] > 0.1);
    }
}
