//! Comparative statics: primitive sweeps, positive/negative shock
//! detection, and stochastic-order checkers (usual order, increasing
//! convex order, strong set order).

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::equilibrium::{solve_berk_nash, Equilibrium, SolveOptions};
use crate::error::{Error, Result};
use crate::lattice::Shape;
use crate::mdp::{greatest_selection, least_selection, optimal_policy_set, solve_value_function_from, ValueFunction};
use crate::smdp::{Belief, JointDistribution, Smdp};

/// Outcome of a dominance check; `exact` is false when only a generator
/// subfamily (quadrants, sampled hinges) was tested.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct OrderVerdict {
    pub dominated: bool,
    pub exact: bool,
}

/// Enumerates all upper sets of the product poset as bitmasks, processing
/// elements from the top of the order down so closure is maintained by
/// construction. Returns `None` above the cap.
fn enumerate_upper_sets(shape: &Shape, cap: usize) -> Option<Vec<u32>> {
    let n = shape.len();
    debug_assert!(n <= 20);
    // Reverse linear extension: descending coordinate sum.
    let mut order: Vec<usize> = (0..n).collect();
    let height = |i: usize| -> usize { shape.unflatten(i).iter().sum() };
    order.sort_by(|&a, &b| height(b).cmp(&height(a)).then(a.cmp(&b)));
    // Strict successors of each element.
    let succs: Vec<u32> = (0..n)
        .map(|e| {
            let mut mask = 0u32;
            for f in 0..n {
                if f != e && shape.leq(e, f) {
                    mask |= 1 << f;
                }
            }
            mask
        })
        .collect();
    let mut out = Vec::new();
    let mut stack: Vec<(usize, u32)> = vec![(0, 0)];
    while let Some((depth, mask)) = stack.pop() {
        if depth == n {
            out.push(mask);
            if out.len() > cap {
                return None;
            }
            continue;
        }
        let e = order[depth];
        // Excluding e is always closure-safe at this stage.
        stack.push((depth + 1, mask));
        // Including e requires every strict successor already in.
        if succs[e] & !mask == 0 {
            stack.push((depth + 1, mask | (1 << e)));
        }
    }
    Some(out)
}

fn joint_shape(m: &JointDistribution, state_shape: &Shape) -> Shape {
    let mut sizes = state_shape.sizes().to_vec();
    sizes.push(m.n_actions());
    Shape::new(sizes)
}

/// First-order stochastic dominance of `m2` over `m1` in the
/// componentwise product order on states × actions.
///
/// Exact upper-set enumeration when the grid has at most 20 cells;
/// otherwise only quadrant upper sets are tested and the verdict is
/// flagged approximate.
pub fn check_fosd(
    m1: &JointDistribution,
    m2: &JointDistribution,
    state_shape: &Shape,
) -> OrderVerdict {
    assert_eq!(m1.n_states(), m2.n_states());
    assert_eq!(m1.n_actions(), m2.n_actions());
    let shape = joint_shape(m1, state_shape);
    let n = shape.len();
    if n <= 20 {
        if let Some(masks) = enumerate_upper_sets(&shape, 1 << 20) {
            let measure = |m: &JointDistribution, mask: u32| -> f64 {
                (0..n)
                    .filter(|i| mask & (1 << i) != 0)
                    .map(|i| m.raw()[i])
                    .sum()
            };
            let dominated = masks
                .iter()
                .all(|&mask| measure(m2, mask) >= measure(m1, mask) - 1e-12);
            return OrderVerdict {
                dominated,
                exact: true,
            };
        }
    }
    let q1 = shape.upper_quadrant_sums(m1.raw());
    let q2 = shape.upper_quadrant_sums(m2.raw());
    let dominated = q1.iter().zip(&q2).all(|(a, b)| *b >= a - 1e-12);
    OrderVerdict {
        dominated,
        exact: false,
    }
}

/// Increasing-convex-order dominance of `m2` over `m1`.
///
/// One-dimensional margins (single action, scalar states, or single
/// state) are compared exactly by stop-loss transforms at every support
/// point; product grids are compared against hinge functions
/// `max(0, a·s + b·x − c)` sampled on a 10×10×10 coefficient lattice with
/// `a, b ≥ 0`, flagged approximate.
pub fn check_icx(
    m1: &JointDistribution,
    m2: &JointDistribution,
    state_coords: &[f64],
    action_coords: &[f64],
    scalar_states: bool,
) -> OrderVerdict {
    assert_eq!(m1.n_states(), m2.n_states());
    assert_eq!(m1.n_actions(), m2.n_actions());
    let one_dim = (m1.n_actions() == 1 && scalar_states) || m1.n_states() == 1;
    if one_dim {
        let (coords, w1, w2): (Vec<f64>, Vec<f64>, Vec<f64>) = if m1.n_actions() == 1 {
            (
                state_coords.to_vec(),
                m1.raw().to_vec(),
                m2.raw().to_vec(),
            )
        } else {
            (
                action_coords.to_vec(),
                m1.raw().to_vec(),
                m2.raw().to_vec(),
            )
        };
        let stop_loss = |w: &[f64], t: f64| -> f64 {
            coords
                .iter()
                .zip(w)
                .map(|(&v, &p)| p * (v - t).max(0.0))
                .sum()
        };
        let dominated = coords
            .iter()
            .all(|&t| stop_loss(&w2, t) >= stop_loss(&w1, t) - 1e-12);
        return OrderVerdict {
            dominated,
            exact: true,
        };
    }
    // Hinge sampling on normalized coordinates.
    let norm = |v: &[f64]| -> Vec<f64> {
        let (lo, hi) = (v[0], v[v.len() - 1]);
        let span = if hi > lo { hi - lo } else { 1.0 };
        v.iter().map(|x| (x - lo) / span).collect()
    };
    let sc = norm(state_coords);
    let ac = norm(action_coords);
    let nx = m1.n_actions();
    let mut dominated = true;
    'outer: for ai in 0..10 {
        for bi in 0..10 {
            let a = ai as f64 / 9.0;
            let b = bi as f64 / 9.0;
            for ci in 0..10 {
                let c = (a + b) * ci as f64 / 9.0;
                let mut e1 = 0.0;
                let mut e2 = 0.0;
                for s in 0..m1.n_states() {
                    for x in 0..nx {
                        let h = (a * sc[s] + b * ac[x] - c).max(0.0);
                        if h > 0.0 {
                            e1 += h * m1.mass(s, x);
                            e2 += h * m2.mass(s, x);
                        }
                    }
                }
                if e2 < e1 - 1e-12 {
                    dominated = false;
                    break 'outer;
                }
            }
        }
    }
    OrderVerdict {
        dominated,
        exact: false,
    }
}

/// Strong set order: `set2 ≥ set1` iff for all `a ∈ set1`, `b ∈ set2`,
/// `max(a,b) ∈ set2` and `min(a,b) ∈ set1` (membership within `tol`).
pub fn check_strong_set_order(set1: &[f64], set2: &[f64], tol: f64) -> bool {
    let contains = |set: &[f64], v: f64| set.iter().any(|&s| (s - v).abs() <= tol);
    for &a in set1 {
        for &b in set2 {
            if !contains(set2, a.max(b)) || !contains(set1, a.min(b)) {
                return false;
            }
        }
    }
    true
}

fn sso_indices_ge(lo_set: &[usize], hi_set: &[usize]) -> bool {
    // hi_set ≥ lo_set in the strong set order on action indices.
    for &a in lo_set {
        for &b in hi_set {
            if !hi_set.contains(&a.max(b)) || !lo_set.contains(&a.min(b)) {
                return false;
            }
        }
    }
    true
}

/// Classification of a primitive change per the optimal-policy
/// correspondence at every probe belief and state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ShockClass {
    Positive,
    Negative,
    Neither,
}

impl std::fmt::Display for ShockClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            ShockClass::Positive => "positive",
            ShockClass::Negative => "negative",
            ShockClass::Neither => "neither",
        };
        f.write_str(s)
    }
}

/// Probe beliefs shared between two SMDPs: Dirac beliefs at every θ value
/// present in both grids (within 1e-12) plus the uniform belief over the
/// shared values.
pub fn shock_probe_pairs(a: &Smdp, b: &Smdp) -> Vec<(Belief, Belief)> {
    let ga = a.theta_grid();
    let gb = b.theta_grid();
    let mut shared: Vec<(usize, usize)> = Vec::new();
    let mut j = 0usize;
    for i in 0..ga.len() {
        while j < gb.len() && gb.get(j) < ga.get(i) - 1e-12 {
            j += 1;
        }
        if j < gb.len() && (gb.get(j) - ga.get(i)).abs() <= 1e-12 {
            shared.push((i, j));
        }
    }
    let mut probes = Vec::with_capacity(shared.len() + 1);
    for &(i, j) in &shared {
        probes.push((Belief::dirac(ga.len(), i), Belief::dirac(gb.len(), j)));
    }
    if !shared.is_empty() {
        let mut wa = vec![0.0; ga.len()];
        let mut wb = vec![0.0; gb.len()];
        for &(i, j) in &shared {
            wa[i] = 1.0;
            wb[j] = 1.0;
        }
        probes.push((
            Belief::from_weights(&wa).unwrap(),
            Belief::from_weights(&wb).unwrap(),
        ));
    }
    probes
}

/// Classifies the change from `smdp1` to `smdp2` by comparing optimal
/// policy sets `G(s, μ)` in the strong set order at every probe belief
/// and state: positive when `G₂ ≥ G₁` everywhere (identical sets count
/// by reflexivity), negative when `G₁ ≥ G₂` everywhere, neither
/// otherwise.
pub fn verify_positive_shock(
    smdp1: &Smdp,
    smdp2: &Smdp,
    probes: &[(Belief, Belief)],
) -> Result<ShockClass> {
    if smdp1.n_states() != smdp2.n_states() || smdp1.n_actions() != smdp2.n_actions() {
        return Err(Error::Dimension(
            "shock comparison requires shared state/action grids".into(),
        ));
    }
    let slack = 1e-8;
    let value_tol = 1e-10;
    let mut all_ge = true;
    let mut all_le = true;
    let mut warm1 = ValueFunction::zeros(smdp1.n_states());
    let mut warm2 = ValueFunction::zeros(smdp2.n_states());
    for (b1, b2) in probes {
        let mdp1 = smdp1.subjective_mdp_for_belief(b1)?;
        let mdp2 = smdp2.subjective_mdp_for_belief(b2)?;
        let v1 = solve_value_function_from(&mdp1, value_tol, warm1.clone(), 1_000_000)?;
        let v2 = solve_value_function_from(&mdp2, value_tol, warm2.clone(), 1_000_000)?;
        let pc1 = optimal_policy_set(&mdp1, &v1, slack);
        let pc2 = optimal_policy_set(&mdp2, &v2, slack);
        warm1 = v1;
        warm2 = v2;
        for s in 0..smdp1.n_states() {
            if !sso_indices_ge(&pc1.optimal_sets[s], &pc2.optimal_sets[s]) {
                all_ge = false;
            }
            if !sso_indices_ge(&pc2.optimal_sets[s], &pc1.optimal_sets[s]) {
                all_le = false;
            }
            if !all_ge && !all_le {
                return Ok(ShockClass::Neither);
            }
        }
    }
    Ok(if all_ge {
        ShockClass::Positive
    } else if all_le {
        ShockClass::Negative
    } else {
        ShockClass::Neither
    })
}

/// A primitive to sweep and the ordered values to sweep it over.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ShockSpec {
    /// Primitive path: one of `payoff-parameter`, `discount`,
    /// `true-kernel-parameter`, `model-family-parameter`,
    /// `theta-grid-bounds`, or a generator-specific field name.
    pub target: String,
    pub values: Vec<f64>,
}

impl ShockSpec {
    pub fn new(target: impl Into<String>, values: Vec<f64>) -> Result<Self> {
        let strictly_monotone = values.windows(2).all(|w| w[0] < w[1])
            || values.windows(2).all(|w| w[0] > w[1]);
        if values.is_empty() || !strictly_monotone {
            return Err(Error::Infeasible(
                "shock values must be strictly monotone and non-empty".into(),
            ));
        }
        Ok(Self {
            target: target.into(),
            values,
        })
    }
}

/// Per-primitive-value record of a sweep.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepRecord {
    pub value: f64,
    pub status: String,
    pub n_equilibria: usize,
    pub theta_least: Option<f64>,
    pub theta_greatest: Option<f64>,
    /// Mean state coordinate of the representative equilibrium marginal.
    pub ms_mean: Option<f64>,
    pub at_theta_boundary: bool,
    /// Current representative distribution dominates the previous one.
    pub fosd_vs_prev: Option<bool>,
    pub icx_vs_prev: Option<bool>,
    /// Previous representative distribution dominates the current one
    /// (the expected direction on decreasing sweeps).
    pub fosd_prev_over_cur: Option<bool>,
    pub icx_prev_over_cur: Option<bool>,
    pub order_checks_exact: bool,
    pub shock_vs_prev: Option<ShockClass>,
    /// Strong-set-order comparison of consecutive Θ grids (recorded for
    /// parameter-set sweeps).
    pub theta_grid_sso_vs_prev: Option<bool>,
}

/// Sweep output: records sorted by primitive value.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepResult {
    pub target: String,
    pub records: Vec<SweepRecord>,
}

impl SweepResult {
    /// CSV schema: primitive, theta_least, theta_greatest, mS_mean,
    /// fosd_vs_prev, icx_vs_prev, shock_class, solver_status.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(
            w,
            "primitive,theta_least,theta_greatest,mS_mean,fosd_vs_prev,icx_vs_prev,shock_class,solver_status"
        )?;
        let opt = |v: &Option<f64>| v.map_or("na".to_string(), |x| format!("{x}"));
        let optb = |v: &Option<bool>| v.map_or("na".to_string(), |x| x.to_string());
        for r in &self.records {
            writeln!(
                w,
                "{},{},{},{},{},{},{},{}",
                r.value,
                opt(&r.theta_least),
                opt(&r.theta_greatest),
                opt(&r.ms_mean),
                optb(&r.fosd_vs_prev),
                optb(&r.icx_vs_prev),
                r.shock_vs_prev
                    .map_or("na".to_string(), |c| c.to_string()),
                r.status
            )?;
        }
        Ok(())
    }

    /// True when both θ summaries move weakly in the given direction
    /// across all solved records.
    pub fn theta_monotone(&self, nondecreasing: bool) -> bool {
        let solved: Vec<&SweepRecord> = self
            .records
            .iter()
            .filter(|r| r.theta_least.is_some())
            .collect();
        solved.windows(2).all(|w| {
            let (a_l, b_l) = (w[0].theta_least.unwrap(), w[1].theta_least.unwrap());
            let (a_g, b_g) = (w[0].theta_greatest.unwrap(), w[1].theta_greatest.unwrap());
            if nondecreasing {
                b_l >= a_l - 1e-9 && b_g >= a_g - 1e-9
            } else {
                b_l <= a_l + 1e-9 && b_g <= a_g + 1e-9
            }
        })
    }
}

#[derive(Debug, Clone)]
pub struct SweepOptions {
    pub solve: SolveOptions,
    /// Worker threads for the per-value solve phase.
    pub jobs: usize,
    /// Compare consecutive Θ grids in the strong set order (parameter-set
    /// sweeps).
    pub check_theta_grid_order: bool,
}

impl Default for SweepOptions {
    fn default() -> Self {
        Self {
            solve: SolveOptions::default(),
            jobs: 1,
            check_theta_grid_order: false,
        }
    }
}

struct ValueOutcome {
    status: String,
    n_equilibria: usize,
    theta_least: Option<f64>,
    theta_greatest: Option<f64>,
    ms_mean: Option<f64>,
    at_boundary: bool,
    m_rep: Option<JointDistribution>,
}

/// Summary rule: non-degenerate equilibria take precedence; otherwise the
/// flat-KL classes report their supporting θ range. The representative
/// distribution for order comparisons is the least-θ* non-degenerate
/// equilibrium.
fn summarize(eqs: &[Equilibrium], smdp: &Smdp) -> ValueOutcome {
    let nondeg: Vec<&Equilibrium> = eqs.iter().filter(|e| !e.is_degenerate()).collect();
    let (theta_least, theta_greatest, m_rep) = if !nondeg.is_empty() {
        let least = nondeg
            .iter()
            .min_by(|a, b| a.theta_star.partial_cmp(&b.theta_star).unwrap())
            .unwrap();
        let greatest = nondeg
            .iter()
            .max_by(|a, b| a.theta_star.partial_cmp(&b.theta_star).unwrap())
            .unwrap();
        (
            Some(least.theta_star),
            Some(greatest.theta_star),
            Some(least.m_star.clone()),
        )
    } else {
        let lo = eqs
            .iter()
            .filter_map(|e| e.unidentified_range.map(|r| r.0))
            .fold(f64::INFINITY, f64::min);
        let hi = eqs
            .iter()
            .filter_map(|e| e.unidentified_range.map(|r| r.1))
            .fold(f64::NEG_INFINITY, f64::max);
        (Some(lo), Some(hi), eqs.first().map(|e| e.m_star.clone()))
    };
    let ms_mean = m_rep.as_ref().map(|m| {
        m.state_marginal()
            .iter()
            .zip(smdp.mdp().states().points())
            .map(|(p, s)| p * s)
            .sum()
    });
    let at_boundary = eqs.iter().any(|e| e.at_theta_boundary);
    ValueOutcome {
        status: "ok".into(),
        n_equilibria: eqs.len(),
        theta_least,
        theta_greatest,
        ms_mean,
        at_boundary,
        m_rep,
    }
}

/// Solves the Berk-Nash problem at every primitive value and fills
/// pairwise order verdicts and shock classifications.
///
/// Per-value solver failures are recorded in the row status without
/// aborting the sweep. Sweep points are independent; with `jobs > 1`
/// they are solved concurrently and aggregated in value order.
pub fn sweep<F>(build: F, shock: &ShockSpec, opts: &SweepOptions) -> SweepResult
where
    F: Fn(f64) -> Result<Smdp> + Sync,
{
    let values = &shock.values;
    let n = values.len();
    let solve_one = |value: f64| -> ValueOutcome {
        match build(value) {
            Ok(smdp) => match solve_berk_nash(&smdp, &opts.solve) {
                Ok(eqs) => summarize(&eqs, &smdp),
                Err(Error::NoEquilibrium) => ValueOutcome {
                    status: "no_equilibrium".into(),
                    n_equilibria: 0,
                    theta_least: None,
                    theta_greatest: None,
                    ms_mean: None,
                    at_boundary: false,
                    m_rep: None,
                },
                Err(e) => ValueOutcome {
                    status: format!("error: {e}"),
                    n_equilibria: 0,
                    theta_least: None,
                    theta_greatest: None,
                    ms_mean: None,
                    at_boundary: false,
                    m_rep: None,
                },
            },
            Err(e) => ValueOutcome {
                status: format!("error: {e}"),
                n_equilibria: 0,
                theta_least: None,
                theta_greatest: None,
                ms_mean: None,
                at_boundary: false,
                m_rep: None,
            },
        }
    };

    let jobs = opts.jobs.max(1).min(n.max(1));
    let outcomes: Vec<ValueOutcome> = if jobs <= 1 || n <= 1 {
        values.iter().map(|&v| solve_one(v)).collect()
    } else {
        let mut slots: Vec<Option<ValueOutcome>> = (0..n).map(|_| None).collect();
        std::thread::scope(|scope| {
            let chunks: Vec<&mut [Option<ValueOutcome>]> =
                slots.chunks_mut(n.div_ceil(jobs)).collect();
            let mut start = 0usize;
            let mut handles = Vec::new();
            for chunk in chunks {
                let len = chunk.len();
                let vals = &values[start..start + len];
                let solve_ref = &solve_one;
                handles.push(scope.spawn(move || {
                    for (slot, &v) in chunk.iter_mut().zip(vals) {
                        *slot = Some(solve_ref(v));
                    }
                }));
                start += len;
            }
            for h in handles {
                h.join().expect("sweep worker panicked");
            }
        });
        slots.into_iter().map(Option::unwrap).collect()
    };

    // Pairwise comparisons in value order (shocks rebuild the two SMDPs).
    let mut records: Vec<SweepRecord> = Vec::with_capacity(n);
    for (i, (outcome, &value)) in outcomes.iter().zip(values).enumerate() {
        let mut rec = SweepRecord {
            value,
            status: outcome.status.clone(),
            n_equilibria: outcome.n_equilibria,
            theta_least: outcome.theta_least,
            theta_greatest: outcome.theta_greatest,
            ms_mean: outcome.ms_mean,
            at_theta_boundary: outcome.at_boundary,
            fosd_vs_prev: None,
            icx_vs_prev: None,
            fosd_prev_over_cur: None,
            icx_prev_over_cur: None,
            order_checks_exact: true,
            shock_vs_prev: None,
            theta_grid_sso_vs_prev: None,
        };
        if i > 0 {
            if let (Some(prev_m), Some(cur_m)) = (&outcomes[i - 1].m_rep, &outcome.m_rep) {
                if let (Ok(prev_s), Ok(cur_s)) = (build(values[i - 1]), build(value)) {
                    let shape = cur_s.state_shape();
                    let fosd = check_fosd(prev_m, cur_m, &shape);
                    let fosd_rev = check_fosd(cur_m, prev_m, &shape);
                    let scalar = cur_s.state_axes().len() == 1;
                    let icx = check_icx(
                        prev_m,
                        cur_m,
                        cur_s.mdp().states().points(),
                        cur_s.mdp().actions().points(),
                        scalar,
                    );
                    let icx_rev = check_icx(
                        cur_m,
                        prev_m,
                        cur_s.mdp().states().points(),
                        cur_s.mdp().actions().points(),
                        scalar,
                    );
                    rec.fosd_vs_prev = Some(fosd.dominated);
                    rec.icx_vs_prev = Some(icx.dominated);
                    rec.fosd_prev_over_cur = Some(fosd_rev.dominated);
                    rec.icx_prev_over_cur = Some(icx_rev.dominated);
                    rec.order_checks_exact = fosd.exact && icx.exact;
                    let probes = shock_probe_pairs(&prev_s, &cur_s);
                    rec.shock_vs_prev = verify_positive_shock(&prev_s, &cur_s, &probes).ok();
                    if opts.check_theta_grid_order {
                        rec.theta_grid_sso_vs_prev = Some(check_strong_set_order(
                            prev_s.theta_grid().points(),
                            cur_s.theta_grid().points(),
                            1e-9,
                        ));
                    }
                }
            }
        }
        records.push(rec);
    }
    SweepResult {
        target: shock.target.clone(),
        records,
    }
}

/// Image policies of the two extreme selections (used by shock tests).
pub fn extreme_selections(smdp: &Smdp, belief: &Belief) -> Result<(Vec<usize>, Vec<usize>)> {
    let mdp = smdp.subjective_mdp_for_belief(belief)?;
    let v = crate::mdp::solve_value_function(&mdp, 1e-10)?;
    let pc = optimal_policy_set(&mdp, &v, 1e-8);
    Ok((
        least_selection(&pc).pure_assignment().unwrap(),
        greatest_selection(&pc).pure_assignment().unwrap(),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::registry::{build_effort_task, EffortTaskSpec};
    use approx::assert_abs_diff_eq;

    fn shape2() -> Shape {
        Shape::new(vec![2])
    }

    #[test]
    fn fosd_is_reflexive() {
        let m = JointDistribution::new(2, 2, vec![0.1, 0.2, 0.3, 0.4]).unwrap();
        let v = check_fosd(&m, &m, &shape2());
        assert!(v.dominated && v.exact);
    }

    #[test]
    fn fosd_point_masses_at_extremes() {
        let bottom = JointDistribution::point_mass(2, 2, 0, 0);
        let top = JointDistribution::point_mass(2, 2, 1, 1);
        assert!(check_fosd(&bottom, &top, &shape2()).dominated);
        assert!(!check_fosd(&top, &bottom, &shape2()).dominated);
    }

    #[test]
    fn fosd_matches_cdf_rule_on_chains() {
        // Single action: FOSD is the CDF comparison.
        let m1 = JointDistribution::new(4, 1, vec![0.4, 0.3, 0.2, 0.1]).unwrap();
        let m2 = JointDistribution::new(4, 1, vec![0.1, 0.2, 0.3, 0.4]).unwrap();
        let sh = Shape::new(vec![4]);
        assert!(check_fosd(&m1, &m2, &sh).dominated);
        assert!(!check_fosd(&m2, &m1, &sh).dominated);
    }

    #[test]
    fn fosd_incomparable_pair() {
        // Mass swaps across incomparable corners (0,1) and (1,0).
        let a = JointDistribution::new(2, 2, vec![0.0, 0.5, 0.5, 0.0]).unwrap();
        let b = JointDistribution::new(2, 2, vec![0.0, 0.4, 0.6, 0.0]).unwrap();
        let v1 = check_fosd(&a, &b, &shape2());
        let v2 = check_fosd(&b, &a, &shape2());
        assert!(!(v1.dominated && v2.dominated));
    }

    #[test]
    fn fosd_transitive_on_shifted_chain() {
        let m1 = JointDistribution::new(3, 1, vec![0.6, 0.3, 0.1]).unwrap();
        let m2 = JointDistribution::new(3, 1, vec![0.3, 0.4, 0.3]).unwrap();
        let m3 = JointDistribution::new(3, 1, vec![0.1, 0.3, 0.6]).unwrap();
        let sh = Shape::new(vec![3]);
        assert!(check_fosd(&m1, &m2, &sh).dominated);
        assert!(check_fosd(&m2, &m3, &sh).dominated);
        assert!(check_fosd(&m1, &m3, &sh).dominated);
    }

    #[test]
    fn icx_reflexive_and_nested_with_fosd() {
        let m1 = JointDistribution::new(3, 1, vec![0.5, 0.3, 0.2]).unwrap();
        let m2 = JointDistribution::new(3, 1, vec![0.2, 0.3, 0.5]).unwrap();
        let coords = [0.0, 1.0, 2.0];
        let v = check_icx(&m1, &m1, &coords, &[0.0], true);
        assert!(v.dominated && v.exact);
        // FOSD pair is also icx-ordered.
        assert!(check_fosd(&m1, &m2, &Shape::new(vec![3])).dominated);
        assert!(check_icx(&m1, &m2, &coords, &[0.0], true).dominated);
    }

    #[test]
    fn icx_mean_preserving_spread_dominates() {
        // Point mass at the middle vs an equal split on the endpoints.
        let center = JointDistribution::new(3, 1, vec![0.0, 1.0, 0.0]).unwrap();
        let spread = JointDistribution::new(3, 1, vec![0.5, 0.0, 0.5]).unwrap();
        let coords = [0.0, 1.0, 2.0];
        assert!(check_icx(&center, &spread, &coords, &[0.0], true).dominated);
        assert!(!check_icx(&spread, &center, &coords, &[0.0], true).dominated);
        // The spread does not FOSD-dominate.
        assert!(!check_fosd(&center, &spread, &Shape::new(vec![3])).dominated);
    }

    #[test]
    fn strong_set_order_examples() {
        let grid_a: Vec<f64> = (0..=50).map(|i| i as f64 / 100.0).collect();
        let grid_b: Vec<f64> = (30..=80).map(|i| i as f64 / 100.0).collect();
        assert!(check_strong_set_order(&grid_a, &grid_a, 1e-12));
        assert!(check_strong_set_order(&grid_a, &grid_b, 1e-9));
        assert!(!check_strong_set_order(&[0.0, 1.0], &[0.5], 1e-12));
    }

    #[test]
    fn identical_primitives_classify_as_positive_by_reflexivity() {
        let smdp = build_effort_task(&EffortTaskSpec::new(0.45, 0.3, 0.6, 0.9)).unwrap();
        let probes = shock_probe_pairs(&smdp, &smdp);
        let class = verify_positive_shock(&smdp, &smdp, &probes).unwrap();
        assert_eq!(class, ShockClass::Positive);
    }

    #[test]
    fn effort_cost_fall_is_positive_shock() {
        let hi_cost = build_effort_task(&EffortTaskSpec::new(0.5, 0.2, 0.65, 0.9)).unwrap();
        let lo_cost = build_effort_task(&EffortTaskSpec::new(0.4, 0.2, 0.65, 0.9)).unwrap();
        let probes = shock_probe_pairs(&hi_cost, &lo_cost);
        assert!(probes.len() > 100);
        let class = verify_positive_shock(&hi_cost, &lo_cost, &probes).unwrap();
        assert_eq!(class, ShockClass::Positive);
        // The reverse direction (a cost increase) is a negative shock.
        let rev = shock_probe_pairs(&lo_cost, &hi_cost);
        let class = verify_positive_shock(&lo_cost, &hi_cost, &rev).unwrap();
        assert_eq!(class, ShockClass::Negative);
    }

    #[test]
    fn single_value_sweep_is_valid_without_pairwise_verdicts() {
        let shock = ShockSpec::new("payoff-parameter:c", vec![0.45]).unwrap();
        let result = sweep(
            |c| build_effort_task(&EffortTaskSpec::new(c, 0.3, 0.6, 0.9)),
            &shock,
            &SweepOptions::default(),
        );
        assert_eq!(result.records.len(), 1);
        let r = &result.records[0];
        assert_eq!(r.status, "ok");
        assert!(r.fosd_vs_prev.is_none());
        assert!(r.shock_vs_prev.is_none());
        assert_abs_diff_eq!(r.theta_greatest.unwrap(), 0.55, epsilon = 1e-9);
    }

    #[test]
    fn shock_spec_requires_monotone_values() {
        assert!(ShockSpec::new("discount", vec![0.3, 0.2, 0.4]).is_err());
        assert!(ShockSpec::new("discount", vec![]).is_err());
        assert!(ShockSpec::new("discount", vec![0.5, 0.4]).is_ok());
    }

    #[test]
    fn sweep_parallel_matches_sequential() {
        let shock = ShockSpec::new("payoff-parameter:c", vec![0.42, 0.45, 0.48]).unwrap();
        let build = |c: f64| build_effort_task(&EffortTaskSpec::new(c, 0.2, 0.65, 0.9));
        let seq = sweep(build, &shock, &SweepOptions::default());
        let par = sweep(
            build,
            &shock,
            &SweepOptions {
                jobs: 3,
                ..Default::default()
            },
        );
        for (a, b) in seq.records.iter().zip(&par.records) {
            assert_eq!(a.theta_least, b.theta_least);
            assert_eq!(a.status, b.status);
            assert_eq!(a.shock_vs_prev, b.shock_vs_prev);
        }
    }
}
