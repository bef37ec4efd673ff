//! Finite Markov decision processes and exact dynamic programming.
//!
//! Value iteration with a certified contraction stopping rule, optimal
//! policy correspondences with least/greatest selections, and invariant
//! distributions of the state chain induced by a policy.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::numeric;
use crate::smdp::JointDistribution;

/// Transition probability tensor indexed `[state][action][next_state]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Kernel {
    n_states: usize,
    n_actions: usize,
    probs: Vec<f64>,
}

impl Kernel {
    /// Validates row normalization (1 within 1e-12) and nonnegativity.
    pub fn new(n_states: usize, n_actions: usize, probs: Vec<f64>) -> Result<Self> {
        if probs.len() != n_states * n_actions * n_states {
            return Err(Error::Dimension(format!(
                "kernel tensor has {} entries, expected {}",
                probs.len(),
                n_states * n_actions * n_states
            )));
        }
        for s in 0..n_states {
            for x in 0..n_actions {
                let row = &probs[(s * n_actions + x) * n_states..][..n_states];
                if row.iter().any(|&p| p < 0.0 || !p.is_finite()) {
                    return Err(Error::NegativeProbability {
                        context: format!("kernel row ({s}, {x})"),
                    });
                }
                let sum: f64 = row.iter().sum();
                if (sum - 1.0).abs() > 1e-12 {
                    return Err(Error::RowNotNormalized {
                        state: s,
                        action: x,
                        sum,
                    });
                }
            }
        }
        Ok(Self {
            n_states,
            n_actions,
            probs,
        })
    }

    /// Builds from per-(state, action) rows without copying.
    pub fn from_rows(n_states: usize, n_actions: usize, rows: Vec<Vec<f64>>) -> Result<Self> {
        let mut probs = Vec::with_capacity(n_states * n_actions * n_states);
        for row in rows {
            probs.extend_from_slice(&row);
        }
        Self::new(n_states, n_actions, probs)
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    pub fn row(&self, s: usize, x: usize) -> &[f64] {
        &self.probs[(s * self.n_actions + x) * self.n_states..][..self.n_states]
    }

    pub fn prob(&self, s: usize, x: usize, s_next: usize) -> f64 {
        self.probs[(s * self.n_actions + x) * self.n_states + s_next]
    }

    /// Entrywise equality within `tol`.
    pub fn approx_eq(&self, other: &Kernel, tol: f64) -> bool {
        self.n_states == other.n_states
            && self.n_actions == other.n_actions
            && self
                .probs
                .iter()
                .zip(&other.probs)
                .all(|(a, b)| (a - b).abs() <= tol)
    }
}

/// Per-period payoff on realized transitions, `u(s, x, s')`.
///
/// The framework's payoff is a function of (state, action); models whose
/// payoff rides on the realized next state are folded in by taking the
/// expectation under whichever kernel the decision problem uses.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransitionPayoff {
    n_states: usize,
    n_actions: usize,
    values: Vec<f64>,
}

impl TransitionPayoff {
    pub fn new(n_states: usize, n_actions: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != n_states * n_actions * n_states {
            return Err(Error::Dimension(format!(
                "transition payoff has {} entries, expected {}",
                values.len(),
                n_states * n_actions * n_states
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("transition payoff".into()));
        }
        Ok(Self {
            n_states,
            n_actions,
            values,
        })
    }

    pub fn value(&self, s: usize, x: usize, s_next: usize) -> f64 {
        self.values[(s * self.n_actions + x) * self.n_states + s_next]
    }

    /// Expected payoff matrix `[s][x]` under `kernel`.
    pub fn expected(&self, kernel: &Kernel) -> Vec<f64> {
        let (ns, nx) = (self.n_states, self.n_actions);
        let mut out = vec![0.0; ns * nx];
        for s in 0..ns {
            for x in 0..nx {
                let row = kernel.row(s, x);
                let vals = &self.values[(s * nx + x) * ns..][..ns];
                out[s * nx + x] = row.iter().zip(vals).map(|(p, v)| p * v).sum();
            }
        }
        out
    }
}

/// Finite MDP: grids, kernel, payoff matrix `[state][action]`, discount.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Mdp {
    states: Grid,
    actions: Grid,
    kernel: Kernel,
    payoff: Vec<f64>,
    discount: f64,
}

impl Mdp {
    pub fn new(
        states: Grid,
        actions: Grid,
        kernel: Kernel,
        payoff: Vec<f64>,
        discount: f64,
    ) -> Result<Self> {
        if kernel.n_states() != states.len() || kernel.n_actions() != actions.len() {
            return Err(Error::Dimension(format!(
                "kernel is {}x{} but grids are {}x{}",
                kernel.n_states(),
                kernel.n_actions(),
                states.len(),
                actions.len()
            )));
        }
        if payoff.len() != states.len() * actions.len() {
            return Err(Error::Dimension(format!(
                "payoff has {} entries, expected {}",
                payoff.len(),
                states.len() * actions.len()
            )));
        }
        if payoff.iter().any(|u| !u.is_finite()) {
            return Err(Error::NonFinite("payoff".into()));
        }
        // discount = 0 collapses to the static problem and is allowed.
        if !(0.0..1.0).contains(&discount) {
            return Err(Error::InvalidDiscount(discount));
        }
        Ok(Self {
            states,
            actions,
            kernel,
            payoff,
            discount,
        })
    }

    pub fn n_states(&self) -> usize {
        self.states.len()
    }

    pub fn n_actions(&self) -> usize {
        self.actions.len()
    }

    pub fn states(&self) -> &Grid {
        &self.states
    }

    pub fn actions(&self) -> &Grid {
        &self.actions
    }

    pub fn kernel(&self) -> &Kernel {
        &self.kernel
    }

    pub fn payoff(&self, s: usize, x: usize) -> f64 {
        self.payoff[s * self.actions.len() + x]
    }

    pub fn payoff_matrix(&self) -> &[f64] {
        &self.payoff
    }

    pub fn discount(&self) -> f64 {
        self.discount
    }

    pub fn max_abs_payoff(&self) -> f64 {
        self.payoff.iter().fold(0.0, |m, u| m.max(u.abs()))
    }
}

/// Value function over states.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValueFunction {
    pub values: Vec<f64>,
}

impl ValueFunction {
    pub fn zeros(n: usize) -> Self {
        Self {
            values: vec![0.0; n],
        }
    }
}

/// Possibly mixed stationary policy; rows are distributions over actions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Policy {
    n_states: usize,
    n_actions: usize,
    weights: Vec<f64>,
}

impl Policy {
    pub fn new(n_states: usize, n_actions: usize, weights: Vec<f64>) -> Result<Self> {
        if weights.len() != n_states * n_actions {
            return Err(Error::Dimension(format!(
                "policy has {} weights, expected {}",
                weights.len(),
                n_states * n_actions
            )));
        }
        for s in 0..n_states {
            let row = &weights[s * n_actions..][..n_actions];
            if row.iter().any(|&w| w < 0.0 || !w.is_finite()) {
                return Err(Error::NegativeProbability {
                    context: format!("policy row {s}"),
                });
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > 1e-12 {
                return Err(Error::RowNotNormalized {
                    state: s,
                    action: 0,
                    sum,
                });
            }
        }
        Ok(Self {
            n_states,
            n_actions,
            weights,
        })
    }

    /// Pure policy assigning one action index per state.
    pub fn pure(n_actions: usize, assignment: &[usize]) -> Self {
        let n_states = assignment.len();
        let mut weights = vec![0.0; n_states * n_actions];
        for (s, &x) in assignment.iter().enumerate() {
            weights[s * n_actions + x] = 1.0;
        }
        Self {
            n_states,
            n_actions,
            weights,
        }
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    pub fn weight(&self, s: usize, x: usize) -> f64 {
        self.weights[s * self.n_actions + x]
    }

    pub fn row(&self, s: usize) -> &[f64] {
        &self.weights[s * self.n_actions..][..self.n_actions]
    }

    /// True iff every row puts weight 1 on a single action.
    pub fn is_pure(&self) -> bool {
        (0..self.n_states).all(|s| self.row(s).iter().any(|&w| w == 1.0))
    }

    /// The chosen action per state for a pure policy.
    pub fn pure_assignment(&self) -> Option<Vec<usize>> {
        (0..self.n_states)
            .map(|s| self.row(s).iter().position(|&w| w == 1.0))
            .collect()
    }
}

/// Per-state sets of actions optimal within `slack`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyCorrespondence {
    pub optimal_sets: Vec<Vec<usize>>,
    pub slack: f64,
    pub n_actions: usize,
}

/// Bellman action values `u(s,x) + β Σ V(s') Q(s'|s,x)`, laid out `[s][x]`.
pub fn action_values(mdp: &Mdp, v: &ValueFunction) -> Vec<f64> {
    let (ns, nx) = (mdp.n_states(), mdp.n_actions());
    let beta = mdp.discount();
    let mut out = vec![0.0; ns * nx];
    for s in 0..ns {
        for x in 0..nx {
            let row = mdp.kernel().row(s, x);
            let cont: f64 = row.iter().zip(&v.values).map(|(p, vv)| p * vv).sum();
            out[s * nx + x] = mdp.payoff(s, x) + beta * cont;
        }
    }
    out
}

fn bellman_max(action_values: &[f64], ns: usize, nx: usize) -> Vec<f64> {
    (0..ns)
        .map(|s| {
            action_values[s * nx..][..nx]
                .iter()
                .fold(f64::NEG_INFINITY, |m, &q| m.max(q))
        })
        .collect()
}

/// Value iteration from `v0` until successive iterates differ by at most
/// `tol·(1−β)/β` in sup-norm, which certifies a Bellman residual ≤ tol.
pub fn solve_value_function_from(
    mdp: &Mdp,
    tol: f64,
    v0: ValueFunction,
    max_iter: usize,
) -> Result<ValueFunction> {
    assert!(tol > 0.0, "tolerance must be positive");
    let (ns, nx) = (mdp.n_states(), mdp.n_actions());
    let beta = mdp.discount();
    let mut v = v0;
    if beta == 0.0 {
        let q = action_values(mdp, &ValueFunction::zeros(ns));
        return Ok(ValueFunction {
            values: bellman_max(&q, ns, nx),
        });
    }
    let stop = tol * (1.0 - beta) / beta;
    let mut achieved = f64::INFINITY;
    for _ in 0..max_iter {
        let q = action_values(mdp, &v);
        let next = bellman_max(&q, ns, nx);
        achieved = numeric::sup_norm_diff(&next, &v.values);
        v.values = next;
        if achieved <= stop {
            return Ok(v);
        }
    }
    Err(Error::NoConvergence {
        what: "value iteration".into(),
        max_iter,
        achieved,
        tol: stop,
    })
}

/// Value iteration from zero. Default entry point.
pub fn solve_value_function(mdp: &Mdp, tol: f64) -> Result<ValueFunction> {
    solve_value_function_from(mdp, tol, ValueFunction::zeros(mdp.n_states()), 1_000_000)
}

/// Sup-norm of `v − T v` where `T` is the Bellman operator.
pub fn bellman_residual(mdp: &Mdp, v: &ValueFunction) -> f64 {
    let q = action_values(mdp, v);
    let tv = bellman_max(&q, mdp.n_states(), mdp.n_actions());
    numeric::sup_norm_diff(&tv, &v.values)
}

/// Actions whose Bellman right-hand side is within `slack` of the state
/// maximum. Nonempty per state by construction.
pub fn optimal_policy_set(mdp: &Mdp, v: &ValueFunction, slack: f64) -> PolicyCorrespondence {
    let (ns, nx) = (mdp.n_states(), mdp.n_actions());
    let q = action_values(mdp, v);
    let mut optimal_sets = Vec::with_capacity(ns);
    for s in 0..ns {
        let row = &q[s * nx..][..nx];
        let best = row.iter().fold(f64::NEG_INFINITY, |m, &x| m.max(x));
        let set: Vec<usize> = (0..nx).filter(|&x| row[x] >= best - slack).collect();
        optimal_sets.push(set);
    }
    PolicyCorrespondence {
        optimal_sets,
        slack,
        n_actions: nx,
    }
}

/// Pure policy picking the lowest optimal action index per state.
pub fn least_selection(pc: &PolicyCorrespondence) -> Policy {
    let assignment: Vec<usize> = pc.optimal_sets.iter().map(|set| set[0]).collect();
    Policy::pure(pc.n_actions, &assignment)
}

/// Pure policy picking the highest optimal action index per state.
pub fn greatest_selection(pc: &PolicyCorrespondence) -> Policy {
    let assignment: Vec<usize> = pc
        .optimal_sets
        .iter()
        .map(|set| *set.last().unwrap())
        .collect();
    Policy::pure(pc.n_actions, &assignment)
}

/// Invariant joint distribution of a kernel composed with a policy.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InvariantJoint {
    pub joint: JointDistribution,
    /// Sup-norm balance-equation residual actually achieved.
    pub residual: f64,
    /// More than one closed communicating class exists in the chain.
    pub multiple_classes: bool,
}

/// Stationary joint distribution `m(s, x) = m_S(s)·policy(x|s)` where
/// `m_S` is invariant for the state chain induced by `kernel` and
/// `policy`.
///
/// Iterates the chain from the default initial state (index 0) with
/// Cesàro averaging; chains of at most 200 states fall back to a direct
/// linear solve when iteration stalls. With several closed classes the
/// limit from state 0 is returned and flagged.
pub fn invariant_joint_distribution(
    kernel: &Kernel,
    policy: &Policy,
    tol: f64,
) -> Result<InvariantJoint> {
    let (ns, nx) = (kernel.n_states(), kernel.n_actions());
    if policy.n_states() != ns || policy.n_actions() != nx {
        return Err(Error::Dimension(format!(
            "policy is {}x{} but kernel is {}x{}",
            policy.n_states(),
            policy.n_actions(),
            ns,
            nx
        )));
    }
    // State chain P(s'|s) under the policy.
    let mut chain = vec![0.0; ns * ns];
    for s in 0..ns {
        for x in 0..nx {
            let w = policy.weight(s, x);
            if w == 0.0 {
                continue;
            }
            let row = kernel.row(s, x);
            for sn in 0..ns {
                chain[s * ns + sn] += w * row[sn];
            }
        }
    }
    let multiple_classes = count_closed_classes(&chain, ns) > 1;

    let step = |pi: &[f64]| -> Vec<f64> {
        let mut next = vec![0.0; ns];
        for s in 0..ns {
            let p = pi[s];
            if p == 0.0 {
                continue;
            }
            for sn in 0..ns {
                next[sn] += p * chain[s * ns + sn];
            }
        }
        next
    };
    let residual_of = |pi: &[f64]| numeric::sup_norm_diff(&step(pi), pi);

    let mut pi = vec![0.0; ns];
    pi[0] = 1.0;
    let mut cesaro = pi.clone();
    let mut count = 1.0;
    let max_iter = 20_000.max(100 * ns);
    let mut best = pi.clone();
    let mut best_res = residual_of(&pi);
    for it in 1..=max_iter {
        pi = step(&pi);
        count += 1.0;
        for (c, p) in cesaro.iter_mut().zip(&pi) {
            *c += (p - *c) / count;
        }
        if it % 16 == 0 || it == max_iter {
            for cand in [&pi, &cesaro] {
                let r = residual_of(cand);
                if r < best_res {
                    best_res = r;
                    best.copy_from_slice(cand);
                }
            }
            if best_res <= tol {
                break;
            }
        }
    }
    if best_res > tol && ns <= 200 {
        if let Some((direct, r)) = direct_stationary(&chain, ns, &best) {
            if r < best_res {
                best = direct;
            }
        }
    }
    // Clean tiny negatives from the solve and renormalize.
    let total: f64 = best.iter().map(|p| p.max(0.0)).sum();
    for p in best.iter_mut() {
        *p = p.max(0.0) / total;
    }
    let best_res = residual_of(&best);

    let mut mass = vec![0.0; ns * nx];
    for s in 0..ns {
        for x in 0..nx {
            mass[s * nx + x] = best[s] * policy.weight(s, x);
        }
    }
    Ok(InvariantJoint {
        joint: JointDistribution::new_unchecked(ns, nx, mass),
        residual: best_res,
        multiple_classes,
    })
}

/// Solves `π P = π`, `Σ π = 1` directly, restricted to the states carrying
/// mass in `hint` (the class reached from the initial state) plus their
/// forward closure.
fn direct_stationary(chain: &[f64], ns: usize, hint: &[f64]) -> Option<(Vec<f64>, f64)> {
    // Forward-closed support of the hint.
    let mut in_set = vec![false; ns];
    let mut stack: Vec<usize> = (0..ns).filter(|&s| hint[s] > 1e-300).collect();
    for &s in &stack {
        in_set[s] = true;
    }
    while let Some(s) = stack.pop() {
        for sn in 0..ns {
            if chain[s * ns + sn] > 0.0 && !in_set[sn] {
                in_set[sn] = true;
                stack.push(sn);
            }
        }
    }
    let idx: Vec<usize> = (0..ns).filter(|&s| in_set[s]).collect();
    let k = idx.len();
    // (P^T − I) π = 0 with the last equation replaced by Σ π = 1.
    let mut a = vec![0.0; k * k];
    let mut b = vec![0.0; k];
    for (r, &sr) in idx.iter().enumerate() {
        for (c, &sc) in idx.iter().enumerate() {
            a[r * k + c] = chain[sc * ns + sr] - if r == c { 1.0 } else { 0.0 };
        }
    }
    for c in 0..k {
        a[(k - 1) * k + c] = 1.0;
    }
    b[k - 1] = 1.0;
    let sol = numeric::solve_dense(a, b)?;
    if sol.iter().any(|&p| p < -1e-9 || !p.is_finite()) {
        return None;
    }
    let mut pi = vec![0.0; ns];
    for (c, &sc) in idx.iter().enumerate() {
        pi[sc] = sol[c].max(0.0);
    }
    let total: f64 = pi.iter().sum();
    for p in pi.iter_mut() {
        *p /= total;
    }
    let mut next = vec![0.0; ns];
    for s in 0..ns {
        for sn in 0..ns {
            next[sn] += pi[s] * chain[s * ns + sn];
        }
    }
    let r = numeric::sup_norm_diff(&next, &pi);
    Some((pi, r))
}

/// Number of closed communicating classes of the chain digraph.
fn count_closed_classes(chain: &[f64], ns: usize) -> usize {
    // Tarjan-free approach: repeated reachability, fine for small chains.
    // reach[s] = set of states reachable from s (including s).
    let reach: Vec<Vec<bool>> = (0..ns)
        .map(|s| {
            let mut seen = vec![false; ns];
            let mut stack = vec![s];
            seen[s] = true;
            while let Some(t) = stack.pop() {
                for u in 0..ns {
                    if chain[t * ns + u] > 0.0 && !seen[u] {
                        seen[u] = true;
                        stack.push(u);
                    }
                }
            }
            seen
        })
        .collect();
    let mut class_of = vec![usize::MAX; ns];
    let mut n_classes = 0;
    for s in 0..ns {
        if class_of[s] != usize::MAX {
            continue;
        }
        let members: Vec<usize> = (0..ns)
            .filter(|&t| reach[s][t] && reach[t][s])
            .collect();
        for &t in &members {
            class_of[t] = n_classes;
        }
        n_classes += 1;
    }
    let mut closed = 0;
    for c in 0..n_classes {
        let members: Vec<usize> = (0..ns).filter(|&s| class_of[s] == c).collect();
        let is_closed = members.iter().all(|&s| {
            (0..ns).all(|u| chain[s * ns + u] == 0.0 || class_of[u] == c)
        });
        if is_closed {
            closed += 1;
        }
    }
    closed
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn two_state_mdp(discount: f64) -> Mdp {
        // Two states, two actions; action 1 pushes toward state 1.
        let kernel = Kernel::new(
            2,
            2,
            vec![
                0.8, 0.2, // (0, 0)
                0.3, 0.7, // (0, 1)
                0.6, 0.4, // (1, 0)
                0.1, 0.9, // (1, 1)
            ],
        )
        .unwrap();
        Mdp::new(
            Grid::new(vec![0.0, 1.0], "s").unwrap(),
            Grid::new(vec![0.0, 1.0], "x").unwrap(),
            kernel,
            vec![0.0, -0.1, 1.0, 0.9],
            discount,
        )
        .unwrap()
    }

    #[test]
    fn zero_discount_collapses_to_static_max() {
        let mdp = two_state_mdp(0.0);
        let v = solve_value_function(&mdp, 1e-10).unwrap();
        assert_abs_diff_eq!(v.values[0], 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(v.values[1], 1.0, epsilon = 1e-12);
    }

    #[test]
    fn constant_payoff_geometric_sum() {
        // u ≡ 1, discount 0.9 -> V ≡ 10.
        let kernel = Kernel::new(2, 2, vec![0.5; 8].iter().map(|_| 0.5).collect()).unwrap();
        let mdp = Mdp::new(
            Grid::new(vec![0.0, 1.0], "s").unwrap(),
            Grid::new(vec![0.0, 1.0], "x").unwrap(),
            kernel,
            vec![1.0; 4],
            0.9,
        )
        .unwrap();
        let v = solve_value_function(&mdp, 1e-10).unwrap();
        for s in 0..2 {
            assert_abs_diff_eq!(v.values[s], 10.0, epsilon = 1e-8);
        }
        assert!(bellman_residual(&mdp, &v) <= 1e-10);
    }

    #[test]
    fn solver_meets_residual_contract() {
        let mdp = two_state_mdp(0.95);
        for tol in [1e-6, 1e-10] {
            let v = solve_value_function(&mdp, tol).unwrap();
            assert!(bellman_residual(&mdp, &v) <= tol);
        }
    }

    #[test]
    fn residual_of_zero_value_on_unit_payoff_is_one() {
        let kernel = Kernel::new(1, 1, vec![1.0]).unwrap();
        let mdp = Mdp::new(
            Grid::new(vec![0.0], "s").unwrap(),
            Grid::new(vec![0.0], "x").unwrap(),
            kernel,
            vec![1.0],
            0.9,
        )
        .unwrap();
        let v = ValueFunction::zeros(1);
        assert_abs_diff_eq!(bellman_residual(&mdp, &v), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn strict_maximizer_gives_singleton_sets() {
        let mdp = two_state_mdp(0.9);
        let v = solve_value_function(&mdp, 1e-10).unwrap();
        let pc = optimal_policy_set(&mdp, &v, 1e-12);
        for set in &pc.optimal_sets {
            assert_eq!(set.len(), 1);
        }
        let least = least_selection(&pc);
        let greatest = greatest_selection(&pc);
        assert_eq!(least, greatest);
        assert!(least.is_pure());
    }

    #[test]
    fn selections_split_two_element_sets() {
        let pc = PolicyCorrespondence {
            optimal_sets: vec![vec![0, 1], vec![0, 1]],
            slack: 1e-8,
            n_actions: 2,
        };
        let least = least_selection(&pc);
        let greatest = greatest_selection(&pc);
        assert_eq!(least.pure_assignment().unwrap(), vec![0, 0]);
        assert_eq!(greatest.pure_assignment().unwrap(), vec![1, 1]);
    }

    #[test]
    fn identity_kernel_keeps_point_mass_at_initial_state() {
        let kernel = Kernel::new(3, 1, vec![1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0]).unwrap();
        let policy = Policy::pure(1, &[0, 0, 0]);
        let inv = invariant_joint_distribution(&kernel, &policy, 1e-12).unwrap();
        assert!(inv.multiple_classes);
        assert_abs_diff_eq!(inv.joint.mass(0, 0), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn two_state_balance_matches_analytic_solution() {
        // Always-L in the effort task: P(1|0)=q0, P(1|1)=q1.
        let (q0, q1) = (0.3, 0.6);
        let kernel = Kernel::new(2, 1, vec![1.0 - q0, q0, 1.0 - q1, q1]).unwrap();
        let policy = Policy::pure(1, &[0, 0]);
        let inv = invariant_joint_distribution(&kernel, &policy, 1e-12).unwrap();
        let m_s1 = q0 / (1.0 - q1 + q0);
        assert_abs_diff_eq!(inv.joint.mass(1, 0), m_s1, epsilon = 1e-10);
        assert!(inv.residual <= 1e-12);
        assert!(!inv.multiple_classes);
    }

    #[test]
    fn periodic_chain_resolved_by_direct_solve() {
        // Deterministic 2-cycle: plain power iteration oscillates.
        let kernel = Kernel::new(2, 1, vec![0.0, 1.0, 1.0, 0.0]).unwrap();
        let policy = Policy::pure(1, &[0, 0]);
        let inv = invariant_joint_distribution(&kernel, &policy, 1e-12).unwrap();
        assert_abs_diff_eq!(inv.joint.state_marginal()[0], 0.5, epsilon = 1e-12);
        assert!(inv.residual <= 1e-12);
    }

    #[test]
    fn contraction_factor_bounds_backup_distance() {
        let mdp = two_state_mdp(0.9);
        let v1 = ValueFunction {
            values: vec![1.0, -2.0],
        };
        let v2 = ValueFunction {
            values: vec![-0.5, 3.0],
        };
        let q1 = action_values(&mdp, &v1);
        let q2 = action_values(&mdp, &v2);
        let t1 = bellman_max(&q1, 2, 2);
        let t2 = bellman_max(&q2, 2, 2);
        let lhs = numeric::sup_norm_diff(&t1, &t2);
        let rhs = 0.9 * numeric::sup_norm_diff(&v1.values, &v2.values);
        assert!(lhs <= rhs + 1e-12);
    }
}
