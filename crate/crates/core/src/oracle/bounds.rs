//! Near-optimality certificates against exhaustively-computed optima.
//!
//! On a tiny instance's copy space we can afford the real thing: enumerate
//! every reachable belief state, compute the true optimal adaptive policies
//! for expected and worst-case cover cost by dynamic programming, run the
//! cost-greedy policy, and check the multiplicative guarantees
//!
//! ```text
//! avg:  c_avg(greedy) <= c_avg(optimal) * (ln(Q / eta) + 1)
//! wc:   c_wc(greedy)  <= c_wc(optimal)  * (ln(Q / (delta * eta)) + 1)
//! ```
//!
//! where Q is the coverage threshold, eta the largest value such that any
//! objective value above `Q - eta` already covers, and delta the smallest
//! copy probability.
//!
//! Q and eta are not guessed: every attainable objective value is
//! enumerated, Q is placed at the midpoint of an adjacent pair (at or below
//! the minimum full-history value, so coverage is always attainable), and
//! eta is the exact distance to the nearest attainable value below Q.
//!
//! The greedy here maximizes threshold-truncated gain per cost,
//! `sum_o p(o) * (min(Q, f_child) - f) / cost`: the guarantee is stated for
//! the truncated objective, and chasing mass reduction beyond Q can provably
//! break the bound.

use std::collections::{BTreeMap, HashMap};

use rand::Rng;

use super::instance::{gen_mixed_instance, GeneratorParams, InstanceError, TinyInstance};
use super::noisy::{build_noisy_problem, NoisyProblem, Outcome};

/// Everything needed to audit one instance's guarantee check.
#[derive(Debug, Clone)]
pub struct BoundCertificate {
    pub n_hypotheses: usize,
    pub n_actions: usize,
    pub n_copies: usize,
    /// Coverage threshold.
    pub q: f64,
    /// Cover slack: objective above `q - eta` implies covered.
    pub eta: f64,
    /// Smallest copy probability.
    pub delta: f64,
    pub greedy_avg: f64,
    pub greedy_wc: f64,
    pub optimal_avg: f64,
    pub optimal_wc: f64,
    pub avg_bound: f64,
    pub wc_bound: f64,
}

impl BoundCertificate {
    pub fn avg_ok(&self) -> bool {
        self.greedy_avg <= self.avg_bound + 1e-9
    }

    pub fn wc_ok(&self) -> bool {
        self.greedy_wc <= self.wc_bound + 1e-9
    }

    /// Both guarantees hold and greedy is no cheaper than the optimum
    /// (anything else would mean the "optimal" enumeration is broken).
    pub fn ok(&self) -> bool {
        self.avg_ok()
            && self.wc_ok()
            && self.greedy_avg >= self.optimal_avg - 1e-9
            && self.greedy_wc >= self.optimal_wc - 1e-9
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CertifyError {
    #[error("greedy stalled with no positive-gain action before covering")]
    GreedyStalled,
    #[error(transparent)]
    Instance(#[from] InstanceError),
}

/// One belief state of the cover problem: which actions ran (bitmask) and
/// which copies are still consistent.
type StateKey = (u32, Vec<u32>);

fn executed_actions(mask: u32, n_actions: usize) -> Vec<usize> {
    (0..n_actions).filter(|&a| mask & (1 << a) != 0).collect()
}

/// Group the survivors by their outcome of `action`, collapsing the
/// interchangeable NoContact slots onto slot zero: the aggregated NoContact
/// probability with the slot-zero survivor set is exactly equivalent (the
/// objective's per-action factor K compensates the 1/K slot split).
fn branch(
    problem: &NoisyProblem,
    survivors: &[u32],
    action: usize,
) -> Vec<(f64, Vec<u32>)> {
    let mut mass = 0.0;
    let mut groups: BTreeMap<Outcome, (f64, Vec<u32>)> = BTreeMap::new();
    for &i in survivors {
        let copy = &problem.copies[i as usize];
        mass += copy.prob;
        let outcome = copy.outcomes[action];
        let (rep, keep) = match outcome {
            Outcome::NcSlot(j) => (Outcome::NcSlot(0), j == 0),
            g => (g, true),
        };
        let entry = groups.entry(rep).or_insert_with(|| (0.0, Vec::new()));
        entry.0 += copy.prob;
        if keep {
            entry.1.push(i);
        }
    }
    groups
        .into_values()
        .map(|(p, child)| (p / mass, child))
        .collect()
}

/// Every attainable objective value over reachable states, sorted and
/// deduplicated, plus the minimum full-history value (the ceiling for
/// coverable thresholds).
pub fn attainable_values(problem: &NoisyProblem) -> (Vec<f64>, f64) {
    let n_a = problem.instance.n_actions();
    let mut values: Vec<f64> = Vec::new();
    let mut f_full_min = f64::INFINITY;
    let all: Vec<u32> = (0..problem.n_copies() as u32).collect();

    fn explore(
        problem: &NoisyProblem,
        survivors: &[u32],
        mask: u32,
        next_min: usize,
        values: &mut Vec<f64>,
        f_full_min: &mut f64,
    ) {
        let n_a = problem.instance.n_actions();
        let executed = executed_actions(mask, n_a);
        let f = problem.explicit_objective(&executed, survivors);
        values.push(f);
        if executed.len() == n_a {
            *f_full_min = f_full_min.min(f);
        }
        for a in next_min..n_a {
            for (_, child) in branch(problem, survivors, a) {
                explore(problem, &child, mask | (1 << a), a + 1, values, f_full_min);
            }
        }
    }

    explore(problem, &all, 0, 0, &mut values, &mut f_full_min);
    debug_assert!(n_a <= 32);
    values.sort_by(f64::total_cmp);
    values.dedup_by(|a, b| (*a - *b).abs() <= 1e-12);
    (values, f_full_min)
}

/// Place a coverage threshold at the midpoint of an adjacent pair of
/// attainable values (restricted to pairs whose upper value is reachable
/// from every full history, with a gap wide enough that a 1e-9 tolerance
/// can't blur the boundary). `rho` in [0,1) picks among the eligible pairs.
/// Returns `(q, eta)`, or None when the instance offers no clean boundary.
pub fn choose_target(problem: &NoisyProblem, rho: f64) -> Option<(f64, f64)> {
    let (values, f_full_min) = attainable_values(problem);
    let pairs: Vec<(f64, f64)> = values
        .windows(2)
        .filter(|w| w[1] <= f_full_min + 1e-15 && w[1] - w[0] > 2e-9)
        .map(|w| (w[0], w[1]))
        .filter(|(lo, hi)| (lo + hi) / 2.0 >= 0.05)
        .collect();
    if pairs.is_empty() {
        return None;
    }
    let idx = ((rho.clamp(0.0, 1.0 - 1e-12)) * pairs.len() as f64) as usize;
    let (lo, hi) = pairs[idx.min(pairs.len() - 1)];
    let q = (lo + hi) / 2.0;
    Some((q, q - lo))
}

#[derive(Clone, Copy)]
enum Mode {
    Avg,
    Wc,
}

/// True optimal cover cost from a state, by dynamic programming over
/// (executed mask, survivor set).
fn optimal_cost(
    problem: &NoisyProblem,
    q: f64,
    mode: Mode,
    mask: u32,
    survivors: &[u32],
    memo: &mut HashMap<StateKey, f64>,
) -> f64 {
    let n_a = problem.instance.n_actions();
    let executed = executed_actions(mask, n_a);
    if problem.explicit_objective(&executed, survivors) >= q {
        return 0.0;
    }
    if executed.len() == n_a {
        return f64::INFINITY; // uncoverable; prevented by target choice
    }
    let key = (mask, survivors.to_vec());
    if let Some(&v) = memo.get(&key) {
        return v;
    }
    let mut best = f64::INFINITY;
    for a in 0..n_a {
        if mask & (1 << a) != 0 {
            continue;
        }
        let children = branch(problem, survivors, a);
        let continuation = match mode {
            Mode::Avg => children
                .iter()
                .map(|(p, child)| {
                    p * optimal_cost(problem, q, mode, mask | (1 << a), child, memo)
                })
                .sum::<f64>(),
            Mode::Wc => children
                .iter()
                .map(|(_, child)| optimal_cost(problem, q, mode, mask | (1 << a), child, memo))
                .fold(0.0, f64::max),
        };
        best = best.min(problem.instance.actions[a].cost + continuation);
    }
    memo.insert(key, best);
    best
}

/// Expected and worst-case cost of the truncated-gain greedy cover policy,
/// by recursion over its decision tree.
fn greedy_costs(
    problem: &NoisyProblem,
    q: f64,
    mask: u32,
    survivors: &[u32],
    memo: &mut HashMap<StateKey, (f64, f64)>,
) -> Result<(f64, f64), CertifyError> {
    let n_a = problem.instance.n_actions();
    let executed = executed_actions(mask, n_a);
    let f = problem.explicit_objective(&executed, survivors);
    if f >= q {
        return Ok((0.0, 0.0));
    }
    let key = (mask, survivors.to_vec());
    if let Some(&v) = memo.get(&key) {
        return Ok(v);
    }

    // Select: maximize truncated expected gain per unit cost, ties to the
    // lowest action id.
    let mut selected: Option<(usize, f64, Vec<(f64, Vec<u32>)>)> = None;
    for a in 0..n_a {
        if mask & (1 << a) != 0 {
            continue;
        }
        let children = branch(problem, survivors, a);
        let gain: f64 = children
            .iter()
            .map(|(p, child)| {
                let f_child = problem
                    .explicit_objective(&executed_actions(mask | (1 << a), n_a), child);
                p * (f_child.min(q) - f)
            })
            .sum();
        let score = gain / problem.instance.actions[a].cost;
        let better = match &selected {
            None => true,
            Some((_, best, _)) => score > *best,
        };
        if better {
            selected = Some((a, score, children));
        }
    }
    let (a, score, children) = selected.ok_or(CertifyError::GreedyStalled)?;
    if score <= 1e-15 {
        return Err(CertifyError::GreedyStalled);
    }

    let cost = problem.instance.actions[a].cost;
    let mut avg = cost;
    let mut wc = 0.0f64;
    for (p, child) in &children {
        let (child_avg, child_wc) = greedy_costs(problem, q, mask | (1 << a), child, memo)?;
        avg += p * child_avg;
        wc = wc.max(child_wc);
    }
    let result = (avg, cost + wc);
    memo.insert(key, result);
    Ok(result)
}

/// Run the full audit for one instance and threshold.
pub fn certify(problem: &NoisyProblem, q: f64, eta: f64) -> Result<BoundCertificate, CertifyError> {
    let all: Vec<u32> = (0..problem.n_copies() as u32).collect();
    let delta = problem.min_copy_prob();

    let (greedy_avg, greedy_wc) = greedy_costs(problem, q, 0, &all, &mut HashMap::new())?;
    let optimal_avg = optimal_cost(problem, q, Mode::Avg, 0, &all, &mut HashMap::new());
    let optimal_wc = optimal_cost(problem, q, Mode::Wc, 0, &all, &mut HashMap::new());

    Ok(BoundCertificate {
        n_hypotheses: problem.instance.n_hypotheses(),
        n_actions: problem.instance.n_actions(),
        n_copies: problem.n_copies(),
        q,
        eta,
        delta,
        greedy_avg,
        greedy_wc,
        optimal_avg,
        optimal_wc,
        avg_bound: optimal_avg * ((q / eta).ln() + 1.0),
        wc_bound: optimal_wc * ((q / (delta * eta)).ln() + 1.0),
    })
}

/// Generate one random instance and certify it. Returns None when the drawn
/// instance offers no clean threshold (caller draws again).
pub fn certify_random_instance<R: Rng>(
    params: &GeneratorParams,
    rng: &mut R,
) -> Result<Option<(TinyInstance, BoundCertificate)>, CertifyError> {
    let instance = gen_mixed_instance(params, rng);
    let problem = build_noisy_problem(&instance)?;
    let rho: f64 = rng.gen();
    match choose_target(&problem, rho) {
        None => Ok(None),
        Some((q, eta)) => {
            let cert = certify(&problem, q, eta)?;
            Ok(Some((instance, cert)))
        }
    }
}
