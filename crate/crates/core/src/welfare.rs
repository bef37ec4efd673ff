//! Objective welfare under the true dynamics, the correct-vs-misspecified
//! welfare gap, and its certified upper bound in terms of the primitives.

use serde::{Deserialize, Serialize};

use crate::equilibrium::Equilibrium;
use crate::error::{Error, Result};
use crate::mdp::{greatest_selection, optimal_policy_set, solve_value_function, Kernel, Policy};
use crate::numeric;
use crate::smdp::{kl_divergence, Smdp};

/// Policy evaluation under the true kernel: solves `W = u_π + β P_π W`
/// to a residual of at most 1e-12.
pub fn objective_welfare(
    kernel_true: &Kernel,
    payoff: &[f64],
    discount: f64,
    policy: &Policy,
) -> Result<Vec<f64>> {
    let (ns, nx) = (kernel_true.n_states(), kernel_true.n_actions());
    if policy.n_states() != ns || policy.n_actions() != nx || payoff.len() != ns * nx {
        return Err(Error::Dimension("policy evaluation inputs disagree".into()));
    }
    if !(0.0..1.0).contains(&discount) {
        return Err(Error::InvalidDiscount(discount));
    }
    let mut u_pi = vec![0.0; ns];
    let mut p_pi = vec![0.0; ns * ns];
    for s in 0..ns {
        for x in 0..nx {
            let w = policy.weight(s, x);
            if w == 0.0 {
                continue;
            }
            u_pi[s] += w * payoff[s * nx + x];
            let row = kernel_true.row(s, x);
            for sn in 0..ns {
                p_pi[s * ns + sn] += w * row[sn];
            }
        }
    }
    // (I − β P_π) W = u_π by a direct solve, iterative refinement as a
    // residual guard.
    let mut a = vec![0.0; ns * ns];
    for s in 0..ns {
        for sn in 0..ns {
            a[s * ns + sn] = if s == sn { 1.0 } else { 0.0 } - discount * p_pi[s * ns + sn];
        }
    }
    let mut w = numeric::solve_dense(a, u_pi.clone()).ok_or_else(|| Error::NoConvergence {
        what: "policy evaluation".into(),
        max_iter: 1,
        achieved: f64::INFINITY,
        tol: 1e-12,
    })?;
    // Residual polish by value iteration on the evaluation operator.
    for _ in 0..10_000 {
        let mut next = u_pi.clone();
        for s in 0..ns {
            let mut acc = 0.0;
            for sn in 0..ns {
                acc += p_pi[s * ns + sn] * w[sn];
            }
            next[s] += discount * acc;
        }
        let res = numeric::sup_norm_diff(&next, &w);
        w = next;
        if res <= 1e-13 {
            break;
        }
    }
    Ok(w)
}

/// Total-variation bound from relative entropy: `2·√(1 − e^{−kl})`,
/// saturating at 2 for infinite divergence.
pub fn bretagnolle_huber(kl: f64) -> f64 {
    assert!(kl >= 0.0);
    if kl.is_infinite() {
        return 2.0;
    }
    2.0 * (1.0 - (-kl).exp()).max(0.0).sqrt()
}

/// The welfare-gap upper bound in both published forms.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct WelfareBound {
    /// `(2βm₀(1−e^{−k*}) + m₁γ)/(1−β)`.
    pub statement: f64,
    /// `(2βm₀√(1−e^{−k*}) + m₁γ)/(1−β)`; since `√t ≥ t` on [0,1] this is
    /// never smaller than the statement form.
    pub proof: f64,
}

impl WelfareBound {
    /// The looser of the two forms, used for certification.
    pub fn certified(&self) -> f64 {
        self.statement.max(self.proof)
    }
}

/// Evaluates the welfare-gap bound from its primitive ingredients.
pub fn theorem5_bound(m0: f64, m1: f64, gamma: f64, k_star: f64, discount: f64) -> WelfareBound {
    assert!(m0 >= 0.0 && m1 >= 0.0 && gamma >= 0.0 && k_star >= 0.0);
    assert!((0.0..1.0).contains(&discount));
    let one_minus_e = if k_star.is_infinite() {
        1.0
    } else {
        (1.0 - (-k_star).exp()).max(0.0)
    };
    let statement = (2.0 * discount * m0 * one_minus_e + m1 * gamma) / (1.0 - discount);
    let proof = (2.0 * discount * m0 * one_minus_e.sqrt() + m1 * gamma) / (1.0 - discount);
    WelfareBound { statement, proof }
}

/// Welfare comparison of correct and misspecified learning.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WelfareReport {
    pub w_correct: Vec<f64>,
    pub w_misspec: Vec<f64>,
    pub gap_supnorm: f64,
    /// Certified bound (the looser of the two forms).
    pub bound: f64,
    pub bound_statement: f64,
    pub bound_proof: f64,
    /// Absolute payoff bound sup|u|.
    pub m0: f64,
    /// Largest payoff difference quotient along the action grid.
    pub m1: f64,
    /// Sup-norm policy gap in action coordinates.
    pub gamma: f64,
    /// Largest one-step KL between the true-kernel rows induced by the
    /// two policies.
    pub k_star: f64,
    pub bound_satisfied: bool,
    /// The derivative surrogate for m₁ needs at least 3 action nodes.
    pub smooth_applicable: bool,
    /// A mixed equilibrium policy was reduced to its greatest pure
    /// selection for evaluation.
    pub purified_mixed_policy: bool,
}

fn purify_greatest(policy: &Policy) -> (Policy, bool) {
    if policy.is_pure() {
        return (policy.clone(), false);
    }
    let assignment: Vec<usize> = (0..policy.n_states())
        .map(|s| {
            policy
                .row(s)
                .iter()
                .enumerate()
                .filter(|(_, &w)| w > 0.0)
                .map(|(x, _)| x)
                .last()
                .unwrap()
        })
        .collect();
    (Policy::pure(policy.n_actions(), &assignment), true)
}

/// Greatest-selection optimal policy of the true decision problem,
/// the natural `correct_policy` input for [`welfare_report`].
pub fn correct_policy(smdp: &Smdp) -> Result<Policy> {
    let v = solve_value_function(smdp.mdp(), 1e-12)?;
    let pc = optimal_policy_set(smdp.mdp(), &v, 1e-10);
    Ok(greatest_selection(&pc))
}

/// Objective welfare of the equilibrium policy against the correct one,
/// with every ingredient of the certified bound.
///
/// `correct` must be optimal for the true MDP. Mixed equilibrium
/// policies are evaluated through their greatest pure selection
/// (flagged); the bound's KL ingredient ranges over all states.
pub fn welfare_report(smdp: &Smdp, eq: &Equilibrium, correct: &Policy) -> Result<WelfareReport> {
    let mdp = smdp.mdp();
    let (ns, nx) = (mdp.n_states(), mdp.n_actions());
    let (correct_pure, _) = purify_greatest(correct);
    let (mis_pure, purified) = purify_greatest(&eq.policy);
    let payoff = mdp.payoff_matrix();
    let w_correct = objective_welfare(mdp.kernel(), payoff, mdp.discount(), &correct_pure)?;
    let w_misspec = objective_welfare(mdp.kernel(), payoff, mdp.discount(), &mis_pure)?;
    let gap_supnorm = numeric::sup_norm_diff(&w_correct, &w_misspec);

    let m0 = mdp.max_abs_payoff();
    let actions = mdp.actions().points();
    let smooth_applicable = nx >= 3;
    let mut m1: f64 = 0.0;
    for s in 0..ns {
        for x in 0..nx.saturating_sub(1) {
            let du = (mdp.payoff(s, x + 1) - mdp.payoff(s, x)).abs();
            let dx = actions[x + 1] - actions[x];
            m1 = m1.max(du / dx);
        }
    }
    let ca = correct_pure.pure_assignment().unwrap();
    let ma = mis_pure.pure_assignment().unwrap();
    let mut gamma: f64 = 0.0;
    let mut k_star: f64 = 0.0;
    for s in 0..ns {
        gamma = gamma.max((actions[ca[s]] - actions[ma[s]]).abs());
        let d = kl_divergence(mdp.kernel().row(s, ca[s]), mdp.kernel().row(s, ma[s]));
        k_star = k_star.max(d);
    }
    let bound = theorem5_bound(m0, m1, gamma, k_star, mdp.discount());
    let certified = bound.certified();
    Ok(WelfareReport {
        w_correct,
        w_misspec,
        gap_supnorm,
        bound: certified,
        bound_statement: bound.statement,
        bound_proof: bound.proof,
        m0,
        m1,
        gamma,
        k_star,
        bound_satisfied: gap_supnorm <= certified + 1e-9,
        smooth_applicable,
        purified_mixed_policy: purified,
    })
}
