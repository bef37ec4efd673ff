//! Berk-Nash equilibrium computation and verification.
//!
//! The solver works scalar-by-scalar on the parameter grid: it evaluates
//! the consistency map θ ↦ best-fit(invariant distribution of the policy
//! optimal under Q_θ), locates its fixed points, and searches
//! state-independent mixing weights at indifference nodes. Verification
//! recomputes all three equilibrium conditions by direct enumeration on
//! an independent code path.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mdp::{
    action_values, greatest_selection, invariant_joint_distribution, least_selection,
    optimal_policy_set, solve_value_function_from, InvariantJoint, Policy, PolicyCorrespondence,
    ValueFunction,
};
use crate::smdp::{best_fit, Belief, BestFit, JointDistribution, Smdp};

/// Residuals of the three equilibrium conditions.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct ResidualReport {
    /// Max over supp(m*) of the Bellman slack of chosen actions under the
    /// belief-mixture kernel.
    pub optimality_gap: f64,
    /// Weighted-KL suboptimality of supp(μ*) relative to the grid minimum.
    pub inference_gap: f64,
    /// Sup-norm violation of the balance equation under the true kernel.
    pub stationarity_gap: f64,
}

impl ResidualReport {
    pub fn max_gap(&self) -> f64 {
        self.optimality_gap
            .max(self.inference_gap)
            .max(self.stationarity_gap)
    }
}

/// Solved equilibrium bundle.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Equilibrium {
    pub m_star: JointDistribution,
    pub mu_star: Belief,
    /// Inferred best-fit model (sub-grid interpolated for pure equilibria;
    /// the indifference node value for mixed ones).
    pub theta_star: f64,
    pub policy: Policy,
    /// Value function of the subjective problem at μ*.
    pub value: ValueFunction,
    pub residuals: ResidualReport,
    /// Grid node carrying μ*.
    pub theta_node: usize,
    /// State-independent weight on the lower indifferent action, for
    /// mixed equilibria.
    pub mixing_weight: Option<f64>,
    /// Weighted KL is flat on supp(m*): any θ in this range supports the
    /// same behavior (identification fails on the equilibrium path).
    pub unidentified_range: Option<(f64, f64)>,
    /// θ* lies within one grid step of the parameter boundary, so the
    /// constraint on Θ may bind.
    pub at_theta_boundary: bool,
}

impl Equilibrium {
    pub fn is_mixed(&self) -> bool {
        self.mixing_weight.is_some()
    }

    pub fn is_degenerate(&self) -> bool {
        self.unidentified_range.is_some()
    }
}

/// Which pure selection from the optimal correspondence to follow.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Selection {
    Least,
    Greatest,
}

/// Options shared by the solver and the verifier.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolveOptions {
    /// Acceptance threshold on all three verification gaps.
    pub verify_tol: f64,
    /// Bellman solve tolerance.
    pub value_tol: f64,
    /// Slack for declaring actions optimal (indifference detection).
    pub indifference_slack: f64,
    /// Stationary-distribution residual target.
    pub stationary_tol: f64,
    /// |consistency_map(θ) − θ| accepted as a fixed point.
    pub fixed_point_tol: f64,
    /// Skip the regularity gate.
    pub force: bool,
    /// Also report flat-KL (unidentified-on-path) equilibrium classes.
    pub include_degenerate: bool,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            verify_tol: 1e-8,
            value_tol: 1e-10,
            indifference_slack: 1e-8,
            stationary_tol: 1e-12,
            fixed_point_tol: 1e-8,
            force: false,
            include_degenerate: true,
        }
    }
}

/// Verifier tolerances (independent of the solver's).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VerifyOptions {
    pub value_tol: f64,
    pub support_tol: f64,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self {
            value_tol: 1e-10,
            support_tol: 1e-15,
        }
    }
}

/// One evaluation of the consistency map at a parameter node.
#[derive(Debug, Clone)]
pub struct ConsistencyResult {
    /// Node the input θ snapped to.
    pub node: usize,
    pub policy: Policy,
    pub invariant: InvariantJoint,
    pub best_fit: BestFit,
}

impl ConsistencyResult {
    /// Interpolated best-fit θ, or `None` when inference ties on the
    /// induced distribution.
    pub fn theta_fit(&self) -> Option<f64> {
        if self.best_fit.tie {
            None
        } else {
            Some(self.best_fit.theta_interp)
        }
    }
}

/// Solves the subjective problem at the nearest grid node to `theta`,
/// plays the requested pure selection, forms the invariant joint
/// distribution under the true kernel, and infers the best-fit model of
/// that distribution.
pub fn consistency_map(smdp: &Smdp, theta: f64, selection: Selection) -> Result<ConsistencyResult> {
    let grid = smdp.theta_grid();
    if theta < grid.min() - 1e-9 || theta > grid.max() + 1e-9 {
        return Err(Error::ThetaOutOfRange(theta));
    }
    let node = grid.nearest(theta);
    let opts = SolveOptions::default();
    let mdp = smdp.subjective_mdp_at(node)?;
    let v = solve_value_function_from(
        &mdp,
        opts.value_tol,
        ValueFunction::zeros(mdp.n_states()),
        1_000_000,
    )?;
    let pc = optimal_policy_set(&mdp, &v, opts.indifference_slack);
    let policy = match selection {
        Selection::Least => least_selection(&pc),
        Selection::Greatest => greatest_selection(&pc),
    };
    let invariant = invariant_joint_distribution(smdp.mdp().kernel(), &policy, opts.stationary_tol)?;
    let best = best_fit(smdp, &invariant.joint, 1e-9)?;
    Ok(ConsistencyResult {
        node,
        policy,
        invariant,
        best_fit: best,
    })
}

struct NodeEval {
    value: ValueFunction,
    correspondence: PolicyCorrespondence,
    /// Per selection (least, greatest): policy, invariant joint, best fit.
    /// `best_fit` is `None` when the weighted KL is infinite everywhere.
    selections: [SelEval; 2],
}

struct SelEval {
    policy: Policy,
    invariant: InvariantJoint,
    best_fit: Option<BestFit>,
}

type PolicyCache = std::collections::HashMap<Vec<usize>, (InvariantJoint, Option<BestFit>)>;

fn eval_node(
    smdp: &Smdp,
    node: usize,
    warm: &ValueFunction,
    opts: &SolveOptions,
    cache: &mut PolicyCache,
) -> Result<NodeEval> {
    let mdp = smdp.subjective_mdp_at(node)?;
    let v = solve_value_function_from(&mdp, opts.value_tol, warm.clone(), 1_000_000)?;
    let pc = optimal_policy_set(&mdp, &v, opts.indifference_slack);
    let mut selections = Vec::with_capacity(2);
    for sel in [Selection::Least, Selection::Greatest] {
        let policy = match sel {
            Selection::Least => least_selection(&pc),
            Selection::Greatest => greatest_selection(&pc),
        };
        // The invariant joint and its KL profile depend only on the pure
        // assignment, which repeats across many parameter nodes.
        let key = policy.pure_assignment().expect("selections are pure");
        let (invariant, best_fit) = match cache.get(&key) {
            Some(hit) => hit.clone(),
            None => {
                let invariant = invariant_joint_distribution(
                    smdp.mdp().kernel(),
                    &policy,
                    opts.stationary_tol,
                )?;
                let best_fit = match best_fit(smdp, &invariant.joint, 1e-9) {
                    Ok(bf) => Some(bf),
                    Err(Error::AllInfiniteKl) => None,
                    Err(e) => return Err(e),
                };
                cache.insert(key, (invariant.clone(), best_fit.clone()));
                (invariant, best_fit)
            }
        };
        selections.push(SelEval {
            policy,
            invariant,
            best_fit,
        });
    }
    let selections: [SelEval; 2] = match selections.try_into() {
        Ok(arr) => arr,
        Err(_) => unreachable!(),
    };
    Ok(NodeEval {
        value: v,
        correspondence: pc,
        selections,
    })
}

fn near_boundary(theta: f64, smdp: &Smdp) -> bool {
    let grid = smdp.theta_grid();
    let n = grid.len();
    if n < 2 {
        return true;
    }
    let lo_step = grid.get(1) - grid.get(0);
    let hi_step = grid.get(n - 1) - grid.get(n - 2);
    theta <= grid.min() + lo_step || theta >= grid.max() - hi_step
}

/// Computes all Berk-Nash equilibria found on the parameter grid.
///
/// Pure equilibria are the fixed points of the grid-snapped consistency
/// map: node `i` yields one exactly when its interpolated best-fit lands
/// inside the node's snapping cell, which subsumes sign-change bracketing
/// of `h(θ) = consistency_map(θ) − θ` with bisection refinement (every
/// reported fixed point has `|h| = 0` at the reported θ*). At parameter
/// nodes where the optimal action set is non-singleton in every state, a
/// state-independent mixing weight between the least and greatest
/// indifferent actions is searched by bisection so that the induced
/// best-fit reproduces the node. Flat-KL classes (supports that never
/// exercise the misspecified channel) are reported as degenerate
/// equilibria with their supporting θ range when they verify exactly.
///
/// Every returned equilibrium passes [`verify_equilibrium`] within
/// `opts.verify_tol`.
pub fn solve_berk_nash(smdp: &Smdp, opts: &SolveOptions) -> Result<Vec<Equilibrium>> {
    if !opts.force {
        let reg = crate::smdp::check_regularity(smdp);
        if !reg.solver_ok() {
            return Err(Error::Regularity(format!(
                "{} absolute-continuity violations on the grid interior",
                reg.total_violations
            )));
        }
    }
    let grid = smdp.theta_grid().clone();
    let n = grid.len();
    let mut evals: Vec<NodeEval> = Vec::with_capacity(n);
    let mut warm = ValueFunction::zeros(smdp.n_states());
    let mut cache = PolicyCache::new();
    for node in 0..n {
        let ev = eval_node(smdp, node, &warm, opts, &mut cache)?;
        warm = ev.value.clone();
        evals.push(ev);
    }

    let mut candidates: Vec<Equilibrium> = Vec::new();

    // Pure fixed points of the snapped consistency map.
    for node in 0..n {
        let cell_lo = if node == 0 {
            grid.min()
        } else {
            0.5 * (grid.get(node - 1) + grid.get(node))
        };
        let cell_hi = if node + 1 == n {
            grid.max()
        } else {
            0.5 * (grid.get(node) + grid.get(node + 1))
        };
        for (k, sel_eval) in evals[node].selections.iter().enumerate() {
            let Some(bf) = &sel_eval.best_fit else {
                continue;
            };
            if bf.tie {
                continue;
            }
            let fit = bf.theta_interp;
            let h = fit - grid.get(node);
            let in_cell = fit >= cell_lo - 1e-12 && fit <= cell_hi + 1e-12;
            if !in_cell || h.abs() > (cell_hi - cell_lo).max(opts.fixed_point_tol) {
                continue;
            }
            // Residual of the snapped map at the reported θ* is zero by
            // construction; keep the explicit guard for clarity.
            if (fit - grid.get(node)).abs() > (cell_hi - cell_lo) + opts.fixed_point_tol {
                continue;
            }
            let _ = k;
            let mut eq = Equilibrium {
                m_star: sel_eval.invariant.joint.clone(),
                mu_star: Belief::dirac(n, node),
                theta_star: fit,
                policy: sel_eval.policy.clone(),
                value: evals[node].value.clone(),
                residuals: Default::default(),
                theta_node: node,
                mixing_weight: None,
                unidentified_range: None,
                at_theta_boundary: near_boundary(fit, smdp),
            };
            if let Ok(rep) = verify_equilibrium(smdp, &eq, &VerifyOptions::default()) {
                if rep.max_gap() <= opts.verify_tol {
                    eq.residuals = rep;
                    push_candidate(&mut candidates, eq);
                }
            }
        }
    }

    // Mixed equilibria at indifference nodes.
    for node in 0..n {
        let pc = &evals[node].correspondence;
        let any_mult = pc.optimal_sets.iter().any(|s| s.len() > 1);
        if !any_mult {
            continue;
        }
        let lo = pc.optimal_sets[0][0];
        let hi = *pc.optimal_sets[0].last().unwrap();
        let shared = pc
            .optimal_sets
            .iter()
            .all(|s| s[0] == lo && *s.last().unwrap() == hi && s.len() > 1);
        if !shared {
            continue;
        }
        let theta_hat = grid.get(node);
        if let Some(eq) = search_mixed(smdp, node, theta_hat, lo, hi, &evals[node], opts)? {
            push_candidate(&mut candidates, eq);
        }
    }

    // Degenerate flat-KL classes.
    if opts.include_degenerate {
        let mut node = 0;
        while node < n {
            let tie_here = |i: usize| -> Option<&SelEval> {
                // Either selection whose induced fit is fully flat.
                evals[i]
                    .selections
                    .iter()
                    .find(|se| se.best_fit.as_ref().map_or(false, |bf| bf.tie && bf.set.len() == n))
            };
            let Some(first) = tie_here(node) else {
                node += 1;
                continue;
            };
            let assignment = first.policy.pure_assignment();
            let mut end = node;
            while end + 1 < n {
                match tie_here(end + 1) {
                    Some(se) if se.policy.pure_assignment() == assignment => end += 1,
                    _ => break,
                }
            }
            let se = tie_here(node).unwrap();
            let mut eq = Equilibrium {
                m_star: se.invariant.joint.clone(),
                mu_star: Belief::dirac(n, node),
                theta_star: grid.get(node),
                policy: se.policy.clone(),
                value: evals[node].value.clone(),
                residuals: Default::default(),
                theta_node: node,
                mixing_weight: None,
                unidentified_range: Some((grid.get(node), grid.get(end))),
                at_theta_boundary: node == 0 || end == n - 1,
            };
            if let Ok(rep) = verify_equilibrium(smdp, &eq, &VerifyOptions::default()) {
                if rep.max_gap() <= 1e-10 {
                    eq.residuals = rep;
                    push_candidate(&mut candidates, eq);
                }
            }
            node = end + 1;
        }
    }

    if candidates.is_empty() {
        return Err(Error::NoEquilibrium);
    }
    candidates.sort_by(|a, b| a.theta_star.partial_cmp(&b.theta_star).unwrap());
    Ok(candidates)
}

fn push_candidate(candidates: &mut Vec<Equilibrium>, eq: Equilibrium) {
    let dup = candidates.iter().any(|c| {
        (c.theta_star - eq.theta_star).abs() <= 1e-9
            && c.is_mixed() == eq.is_mixed()
            && c.is_degenerate() == eq.is_degenerate()
            && c.policy
                .row(0)
                .iter()
                .zip(eq.policy.row(0))
                .all(|(a, b)| (a - b).abs() <= 1e-9)
    });
    if !dup {
        candidates.push(eq);
    }
}

/// Bisects the state-independent mixing weight α on the lower indifferent
/// action so that the best-fit of the induced invariant distribution
/// reproduces the indifference node.
fn search_mixed(
    smdp: &Smdp,
    node: usize,
    theta_hat: f64,
    lo_action: usize,
    hi_action: usize,
    node_eval: &NodeEval,
    opts: &SolveOptions,
) -> Result<Option<Equilibrium>> {
    let (ns, nx) = (smdp.n_states(), smdp.n_actions());
    let make_policy = |alpha: f64| -> Policy {
        let mut weights = vec![0.0; ns * nx];
        for s in 0..ns {
            weights[s * nx + lo_action] = alpha;
            weights[s * nx + hi_action] += 1.0 - alpha;
        }
        Policy::new(ns, nx, weights).expect("mixing weights normalized")
    };
    // Evaluate fit(α); ties at the endpoints are resolved by an interior
    // nudge (the invariant distribution is continuous in α).
    let eval_fit = |alpha: f64| -> Result<Option<(f64, Policy, InvariantJoint)>> {
        let mut a = alpha;
        for _ in 0..2 {
            let policy = make_policy(a);
            let inv =
                invariant_joint_distribution(smdp.mdp().kernel(), &policy, opts.stationary_tol)?;
            match best_fit(smdp, &inv.joint, 1e-9) {
                Ok(bf) if !bf.tie => return Ok(Some((bf.theta_interp, policy, inv))),
                Ok(_) | Err(Error::AllInfiniteKl) => {
                    let nudged = a.clamp(1e-9, 1.0 - 1e-9);
                    if nudged == a {
                        return Ok(None);
                    }
                    a = nudged;
                }
                Err(e) => return Err(e),
            }
        }
        Ok(None)
    };

    // Coarse scan for a sign change of g(α) = fit(α) − θ̂.
    let n_scan = 32;
    let mut prev: Option<(f64, f64)> = None;
    let mut bracket = None;
    for k in 0..=n_scan {
        let alpha = k as f64 / n_scan as f64;
        let g = match eval_fit(alpha)? {
            Some((fit, _, _)) => fit - theta_hat,
            None => {
                prev = None;
                continue;
            }
        };
        if g == 0.0 {
            bracket = Some((alpha, alpha));
            break;
        }
        if let Some((pa, pg)) = prev {
            if pg.signum() != g.signum() {
                bracket = Some((pa, alpha));
                break;
            }
        }
        prev = Some((alpha, g));
    }
    let Some((mut a_lo, mut a_hi)) = bracket else {
        return Ok(None);
    };
    if a_lo != a_hi {
        for _ in 0..100 {
            if a_hi - a_lo <= 1e-13 {
                break;
            }
            let mid = 0.5 * (a_lo + a_hi);
            let gm = match eval_fit(mid)? {
                Some((fit, _, _)) => fit - theta_hat,
                None => break,
            };
            let gl = match eval_fit(a_lo)? {
                Some((fit, _, _)) => fit - theta_hat,
                None => break,
            };
            if gm == 0.0 {
                a_lo = mid;
                a_hi = mid;
                break;
            }
            if gm.signum() == gl.signum() {
                a_lo = mid;
            } else {
                a_hi = mid;
            }
        }
    }
    let alpha_star = 0.5 * (a_lo + a_hi);
    let Some((fit, policy, inv)) = eval_fit(alpha_star)? else {
        return Ok(None);
    };
    if (fit - theta_hat).abs() > opts.fixed_point_tol {
        return Ok(None);
    }
    let mut eq = Equilibrium {
        m_star: inv.joint,
        mu_star: Belief::dirac(smdp.theta_grid().len(), node),
        theta_star: theta_hat,
        policy,
        value: node_eval.value.clone(),
        residuals: Default::default(),
        theta_node: node,
        mixing_weight: Some(alpha_star),
        unidentified_range: None,
        at_theta_boundary: near_boundary(theta_hat, smdp),
    };
    let rep = verify_equilibrium(smdp, &eq, &VerifyOptions::default())?;
    if rep.max_gap() > opts.verify_tol {
        return Ok(None);
    }
    eq.residuals = rep;
    Ok(Some(eq))
}

/// Recomputes all three equilibrium conditions from scratch by direct
/// enumeration (no bisection, no argmin interpolation).
pub fn verify_equilibrium(
    smdp: &Smdp,
    candidate: &Equilibrium,
    opts: &VerifyOptions,
) -> Result<ResidualReport> {
    let m = &candidate.m_star;
    if m.n_states() != smdp.n_states() || m.n_actions() != smdp.n_actions() {
        return Err(Error::Dimension(
            "candidate distribution disagrees with the SMDP grids".into(),
        ));
    }
    if candidate.mu_star.len() != smdp.theta_grid().len() {
        return Err(Error::Dimension(
            "candidate belief disagrees with the parameter grid".into(),
        ));
    }
    // (a) Optimality of supported actions under the mixture kernel.
    let mdp_mu = smdp.subjective_mdp_for_belief(&candidate.mu_star)?;
    let v = crate::mdp::solve_value_function(&mdp_mu, opts.value_tol)?;
    let q = action_values(&mdp_mu, &v);
    let nx = smdp.n_actions();
    let mut optimality_gap: f64 = 0.0;
    for (s, x) in m.support(opts.support_tol) {
        let row = &q[s * nx..][..nx];
        let best = row.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b));
        optimality_gap = optimality_gap.max(best - row[x]);
    }
    // (b) Beliefs restricted to the best-fit set.
    let n_theta = smdp.theta_grid().len();
    let kl: Vec<f64> = (0..n_theta)
        .map(|i| crate::smdp::weighted_kl(smdp, i, m))
        .collect();
    let min_kl = kl.iter().cloned().fold(f64::INFINITY, f64::min);
    if min_kl.is_infinite() {
        return Err(Error::AllInfiniteKl);
    }
    let mut inference_gap: f64 = 0.0;
    for i in candidate.mu_star.support(1e-12) {
        let g = kl[i] - min_kl;
        inference_gap = inference_gap.max(if g.is_finite() { g } else { f64::INFINITY });
    }
    // (c) Invariance of the state marginal under the true kernel.
    let ms = m.state_marginal();
    let mut image = vec![0.0; smdp.n_states()];
    for s in 0..smdp.n_states() {
        for x in 0..nx {
            let w = m.mass(s, x);
            if w == 0.0 {
                continue;
            }
            let row = smdp.mdp().kernel().row(s, x);
            for (im, p) in image.iter_mut().zip(row) {
                *im += w * p;
            }
        }
    }
    let stationarity_gap = crate::numeric::sup_norm_diff(&image, &ms);
    Ok(ResidualReport {
        optimality_gap,
        inference_gap,
        stationarity_gap,
    })
}

/// Image of a point under the equilibrium correspondence: invariant
/// joints of the extreme optimal selections under the mixture kernel
/// (plus the candidate's own conditional policy when it is admissible),
/// together with the best-fit set of `m`.
#[derive(Debug, Clone)]
pub struct EquilibriumMapImage {
    pub m_samples: Vec<JointDistribution>,
    pub best_fit_support: Vec<usize>,
}

pub fn equilibrium_map_apply(
    smdp: &Smdp,
    m: &JointDistribution,
    mu: &Belief,
) -> Result<EquilibriumMapImage> {
    let opts = SolveOptions::default();
    let mdp_mu = smdp.subjective_mdp_for_belief(mu)?;
    let v = crate::mdp::solve_value_function(&mdp_mu, opts.value_tol)?;
    let pc = optimal_policy_set(&mdp_mu, &v, opts.indifference_slack);
    let mut policies = vec![least_selection(&pc), greatest_selection(&pc)];
    if let Some(conditional) = conditional_policy(m, &pc) {
        policies.push(conditional);
    }
    let mut m_samples = Vec::with_capacity(policies.len());
    for policy in &policies {
        let inv = invariant_joint_distribution(smdp.mdp().kernel(), policy, opts.stationary_tol)?;
        m_samples.push(inv.joint);
    }
    let best_fit_support = crate::smdp::best_fit_set(smdp, m, 1e-9)?;
    Ok(EquilibriumMapImage {
        m_samples,
        best_fit_support,
    })
}

/// Conditional action distribution of `m`, admissible when its support is
/// optimal; states without mass fall back to the greatest optimal action.
fn conditional_policy(m: &JointDistribution, pc: &PolicyCorrespondence) -> Option<Policy> {
    let (ns, nx) = (m.n_states(), m.n_actions());
    let ms = m.state_marginal();
    let mut weights = vec![0.0; ns * nx];
    for s in 0..ns {
        if ms[s] > 0.0 {
            for x in 0..nx {
                let w = m.mass(s, x) / ms[s];
                if w > 1e-12 && !pc.optimal_sets[s].contains(&x) {
                    return None;
                }
                weights[s * nx + x] = w;
            }
            // Renormalize against accumulated rounding.
            let sum: f64 = weights[s * nx..][..nx].iter().sum();
            for w in &mut weights[s * nx..][..nx] {
                *w /= sum;
            }
        } else {
            weights[s * nx + *pc.optimal_sets[s].last().unwrap()] = 1.0;
        }
    }
    Policy::new(ns, nx, weights).ok()
}
