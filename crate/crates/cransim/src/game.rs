//! Merge/split coalition formation for JT-CoMP clustering.
//!
//! RRHs are the players. Testing a coalition means re-evaluating, on the
//! current TTI, the throughput of every UE attached to the involved RRHs
//! and scoring the change per RRH: edge UEs are compared against their
//! throughput under the last accepted partition, non-edge UEs against a
//! fixed fraction `(1 - d_f)` of their throughput without JT-CoMP. An
//! operation is accepted only when no involved UE falls below its
//! reference and at least one edge UE strictly improves; accepted
//! operations update the per-RRH cumulative payoffs and the per-UE
//! baselines. Merge candidates are ordered by the macro-scale C/I matrix
//! of the edge UEs and gated by the C/I threshold. Merge and split sweeps
//! repeat until a full pass accepts nothing, so the returned partition
//! admits no further accepted operation.

use std::collections::BTreeSet;

use crate::channel::MacroLosses;
use crate::error::{Error, Result};
use crate::phy::{CompPlan, EvalScope, TtiPhy};
use crate::Real;

/// Disjoint, covering partition of the RRH set, kept in canonical form
/// (members sorted, coalitions sorted by smallest member).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partition {
    coalitions: Vec<Vec<usize>>,
}

impl Partition {
    pub fn singletons(n_rrhs: usize) -> Self {
        Partition { coalitions: (0..n_rrhs).map(|l| vec![l]).collect() }
    }

    pub fn from_sets(mut sets: Vec<Vec<usize>>) -> Self {
        for s in sets.iter_mut() {
            s.sort_unstable();
        }
        sets.retain(|s| !s.is_empty());
        sets.sort();
        Partition { coalitions: sets }
    }

    pub fn coalitions(&self) -> &[Vec<usize>] {
        &self.coalitions
    }

    pub fn coalition_of(&self, rrh: usize) -> &[usize] {
        self.coalitions
            .iter()
            .find(|c| c.contains(&rrh))
            .map(|c| c.as_slice())
            .expect("rrh belongs to some coalition")
    }

    /// Pairwise disjoint, covering all of `0..n_rrhs`, within the size cap.
    pub fn validate(&self, n_rrhs: usize, max_size: Option<usize>) -> Result<()> {
        let mut seen = vec![false; n_rrhs];
        for c in &self.coalitions {
            if c.is_empty() {
                return Err(Error::invalid_input("empty coalition"));
            }
            if let Some(cap) = max_size {
                if c.len() > cap {
                    return Err(Error::invalid_input("coalition exceeds the size cap"));
                }
            }
            for &l in c {
                if l >= n_rrhs || seen[l] {
                    return Err(Error::invalid_input("coalitions must be disjoint and in range"));
                }
                seen[l] = true;
            }
        }
        if seen.iter().all(|&s| s) {
            Ok(())
        } else {
            Err(Error::invalid_input("partition does not cover all RRHs"))
        }
    }

    /// Replace the coalitions of `a` and `b` by their union.
    pub fn merge(&mut self, a: usize, b: usize) {
        let ca = self.coalition_of(a).to_vec();
        let cb = self.coalition_of(b).to_vec();
        if ca == cb {
            return;
        }
        self.coalitions.retain(|c| *c != ca && *c != cb);
        let mut union = ca;
        union.extend(cb);
        union.sort_unstable();
        self.coalitions.push(union);
        self.coalitions.sort();
    }

    /// Split `rrh` out of its coalition into a singleton.
    pub fn split_out(&mut self, rrh: usize) {
        let c = self.coalition_of(rrh).to_vec();
        if c.len() < 2 {
            return;
        }
        self.coalitions.retain(|x| *x != c);
        let rest: Vec<usize> = c.into_iter().filter(|&x| x != rrh).collect();
        self.coalitions.push(rest);
        self.coalitions.push(vec![rrh]);
        self.coalitions.sort();
    }

    pub fn avg_size(&self) -> Real {
        let n: usize = self.coalitions.iter().map(|c| c.len()).sum();
        n as Real / self.coalitions.len() as Real
    }

    pub fn max_size(&self) -> usize {
        self.coalitions.iter().map(|c| c.len()).max().unwrap_or(0)
    }
}

/// Flag the `floor(edge_fraction * |UEs|)` UEs with the lowest pre-CoMP
/// effective SINR as edge UEs (ties resolved by ascending UE id).
pub fn classify_edge_ues(eff_sinrs: &[Real], edge_fraction: Real) -> Vec<bool> {
    let n = eff_sinrs.len();
    let count = ((edge_fraction * n as Real).floor() as usize).min(n);
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| eff_sinrs[a].partial_cmp(&eff_sinrs[b]).unwrap().then(a.cmp(&b)));
    let mut edge = vec![false; n];
    for &u in idx.iter().take(count) {
        edge[u] = true;
    }
    edge
}

/// Decode rank of each edge UE (ascending effective SINR, ties by id);
/// `usize::MAX` for non-edge UEs.
pub fn edge_ranks(eff_sinrs: &[Real], edge: &[bool]) -> Vec<usize> {
    let mut edge_ids: Vec<usize> = (0..edge.len()).filter(|&u| edge[u]).collect();
    edge_ids.sort_by(|&a, &b| eff_sinrs[a].partial_cmp(&eff_sinrs[b]).unwrap().then(a.cmp(&b)));
    let mut ranks = vec![usize::MAX; edge.len()];
    for (r, &u) in edge_ids.iter().enumerate() {
        ranks[u] = r;
    }
    ranks
}

/// Macro-scale carrier-to-interference value in dB.
pub fn ci_value(v_interferer_db: Real, v_serving_db: Real) -> Real {
    v_interferer_db - v_serving_db
}

/// Per-RRH averaged and ascending-sorted C/I values of its edge UEs toward
/// every other RRH. RRHs without edge UEs get a column of +inf sentinels.
#[derive(Debug, Clone)]
pub struct CiMatrix {
    pub n_rrhs: usize,
    /// Column per RRH, ascending.
    pub values: Vec<Vec<Real>>,
    /// Interferer id per column entry.
    pub ids: Vec<Vec<usize>>,
    dense: Vec<Real>,
}

pub fn build_ci_matrix(edge: &[bool], serving: &[usize], v: &MacroLosses<Real>) -> CiMatrix {
    let n_rrhs = v.n_rrhs;
    let mut dense = vec![Real::INFINITY; n_rrhs * n_rrhs];
    let mut values = Vec::with_capacity(n_rrhs);
    let mut ids = Vec::with_capacity(n_rrhs);
    for l in 0..n_rrhs {
        let edge_ues: Vec<usize> =
            (0..v.n_ues).filter(|&u| edge[u] && serving[u] == l).collect();
        let mut column: Vec<(Real, usize)> = (0..n_rrhs)
            .filter(|&j| j != l)
            .map(|j| {
                let avg = if edge_ues.is_empty() {
                    Real::INFINITY
                } else {
                    edge_ues.iter().map(|&e| ci_value(v.at(e, j), v.at(e, l))).sum::<Real>()
                        / edge_ues.len() as Real
                };
                dense[l * n_rrhs + j] = avg;
                (avg, j)
            })
            .collect();
        column.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
        values.push(column.iter().map(|x| x.0).collect());
        ids.push(column.iter().map(|x| x.1).collect());
    }
    CiMatrix { n_rrhs, values, ids, dense }
}

impl CiMatrix {
    /// Averaged C/I of RRH `l`'s edge UEs toward interferer `j`.
    pub fn ci(&self, l: usize, j: usize) -> Real {
        self.dense[l * self.n_rrhs + j]
    }

    pub fn below_threshold_pairs(&self, threshold_db: Real) -> usize {
        self.dense.iter().filter(|&&x| x <= threshold_db).count()
    }
}

/// Three-way sign comparison of two throughput values.
pub fn sgn(delta_b: Real, delta_a: Real) -> i64 {
    if delta_b < delta_a {
        -1
    } else if delta_b > delta_a {
        1
    } else {
        0
    }
}

/// One RRH's payoff for a candidate coalition, with the condition counters.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PayoffBreakdown {
    pub phi: i64,
    pub k_e: usize,
    pub k_ne: usize,
    /// Edge UEs with unchanged / decreased throughput.
    pub q_e: usize,
    pub xi_e: usize,
    /// Non-edge UEs exactly at / below their threshold.
    pub q_ne: usize,
    pub xi_ne: usize,
    /// Edge UEs that strictly improved.
    pub strict_e: usize,
}

/// Evaluate the payoff of one RRH: sign sums over its edge and non-edge
/// UEs, the miss-count penalties, plus the cumulative payoff `phi_a`.
pub fn rrh_payoff(
    ues: &[usize],
    edge: &[bool],
    delta_b: impl Fn(usize) -> Real,
    baseline: impl Fn(usize) -> Real,
    nocomp: impl Fn(usize) -> Real,
    d_f: Real,
    phi_a: i64,
) -> PayoffBreakdown {
    let mut b = PayoffBreakdown {
        phi: 0,
        k_e: 0,
        k_ne: 0,
        q_e: 0,
        xi_e: 0,
        q_ne: 0,
        xi_ne: 0,
        strict_e: 0,
    };
    let mut sum_e: i64 = 0;
    let mut sum_ne: i64 = 0;
    for &u in ues {
        if edge[u] {
            b.k_e += 1;
            match sgn(delta_b(u), baseline(u)) {
                1 => {
                    sum_e += 1;
                    b.strict_e += 1;
                }
                0 => b.q_e += 1,
                _ => {
                    sum_e -= 1;
                    b.xi_e += 1;
                }
            }
        } else {
            b.k_ne += 1;
            match sgn(delta_b(u), (1.0 - d_f) * nocomp(u)) {
                1 => sum_ne += 1,
                0 => b.q_ne += 1,
                _ => {
                    sum_ne -= 1;
                    b.xi_ne += 1;
                }
            }
        }
    }
    b.phi = sum_e + sum_ne - (b.k_e as i64 - 1 - b.q_e as i64 + b.xi_e as i64)
        - (b.k_ne as i64 - 1 - b.q_ne as i64 + b.xi_ne as i64)
        + phi_a;
    b
}

/// Pareto order over per-RRH payoffs: every payoff at least as good and at
/// least one strictly better. Both maps must cover the same RRHs.
pub fn pareto_prefers(candidate: &[(usize, i64)], incumbent: &[(usize, i64)]) -> Result<bool> {
    if candidate.len() != incumbent.len()
        || candidate.iter().zip(incumbent).any(|(c, i)| c.0 != i.0)
    {
        return Err(Error::invalid_input("payoff comparison over mismatched RRH supports"));
    }
    let mut strict = false;
    for (c, i) in candidate.iter().zip(incumbent) {
        if c.1 < i.1 {
            return Ok(false);
        }
        if c.1 > i.1 {
            strict = true;
        }
    }
    Ok(strict)
}

#[derive(Debug, Clone)]
pub struct GameConfig {
    pub d_f: Real,
    pub ci_threshold_db: Real,
    pub max_coalition_size: usize,
}

/// Mutable game state carried across activations.
#[derive(Debug, Clone)]
pub struct GameState {
    pub partition: Partition,
    /// Cumulative payoff per RRH.
    pub phi: Vec<i64>,
    /// Per-UE throughput under the current accepted partition (bps),
    /// refreshed at every activation and at every accepted operation.
    pub baselines: Vec<Real>,
}

impl GameState {
    pub fn new(n_rrhs: usize, n_ues: usize) -> Self {
        GameState {
            partition: Partition::singletons(n_rrhs),
            phi: vec![0; n_rrhs],
            baselines: vec![0.0; n_ues],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OpKind {
    Merge,
    Split,
}

/// Record of an accepted operation with the raw comparisons that justified
/// it, so tests can re-verify acceptance soundness.
#[derive(Debug, Clone, PartialEq)]
pub struct AcceptedOp {
    pub kind: OpKind,
    pub members: Vec<usize>,
    /// (ue, new throughput, baseline) for edge UEs of the involved RRHs.
    pub edge_checks: Vec<(usize, Real, Real)>,
    /// (ue, new throughput, threshold) for non-edge UEs.
    pub nonedge_checks: Vec<(usize, Real, Real)>,
}

#[derive(Debug, Clone, Default)]
pub struct ActivationStats {
    pub merge_tests: u64,
    pub merge_accepts: u64,
    pub split_tests: u64,
    pub split_accepts: u64,
    pub size_rejects: u64,
    pub passes: u64,
    pub below_threshold_pairs: u64,
    pub accepted_ops: Vec<AcceptedOp>,
}

impl ActivationStats {
    pub fn iterations(&self) -> u64 {
        self.merge_tests + self.split_tests
    }
}

/// Everything the game needs to evaluate candidate coalitions on one TTI.
pub struct GameCtx<'a> {
    pub phy: &'a TtiPhy<'a>,
    pub plan: &'a CompPlan,
    /// Per-UE throughput of the shadow no-CoMP evaluation (bps).
    pub nocomp_bps: &'a [Real],
    pub cfg: &'a GameConfig,
}

struct Decision {
    accept: bool,
    payoffs: Vec<(usize, PayoffBreakdown)>,
    edge_checks: Vec<(usize, Real, Real)>,
    nonedge_checks: Vec<(usize, Real, Real)>,
}

impl<'a> GameCtx<'a> {
    /// Throughputs of all UEs of `coalitions` evaluated jointly, written
    /// into a dense per-UE scratch vector.
    fn eval_into(&self, coalitions: &[&[usize]], bps: &mut [Real]) {
        for c in coalitions {
            for e in self.phy.eval_coalition(c, Some(self.plan), EvalScope::All, false) {
                bps[e.ue] = e.bps;
            }
        }
    }

    /// Score the candidate layout for `involved` RRHs against the current
    /// baselines. Merges additionally demand a strict edge-UE improvement
    /// (a merge that changes nothing is not formed) and the utility-sum
    /// condition; splits accept whenever nothing is violated, which is what
    /// dissolves coalitions that stopped helping their edge UEs.
    fn decide(&self, state: &GameState, involved: &[usize], bps: &[Real], kind: OpKind) -> Decision {
        let mut payoffs = Vec::with_capacity(involved.len());
        let mut edge_checks = Vec::new();
        let mut nonedge_checks = Vec::new();
        for &l in involved {
            let ues = &self.phy.cell_ues[l];
            let b = rrh_payoff(
                ues,
                &self.plan.edge,
                |u| bps[u],
                |u| state.baselines[u],
                |u| self.nocomp_bps[u],
                self.cfg.d_f,
                state.phi[l],
            );
            for &u in ues {
                if self.plan.edge[u] {
                    edge_checks.push((u, bps[u], state.baselines[u]));
                } else {
                    nonedge_checks.push((u, bps[u], (1.0 - self.cfg.d_f) * self.nocomp_bps[u]));
                }
            }
            payoffs.push((l, b));
        }

        let candidate: Vec<(usize, i64)> = payoffs.iter().map(|(l, b)| (*l, b.phi)).collect();
        let incumbent: Vec<(usize, i64)> = involved.iter().map(|&l| (l, state.phi[l])).collect();
        let pareto = pareto_prefers(&candidate, &incumbent).expect("same support");
        let accept = match kind {
            OpKind::Merge => {
                let any_strict_edge = payoffs.iter().any(|(_, b)| b.strict_e > 0);
                let cand: i64 = candidate.iter().map(|x| x.1).sum();
                let inc: i64 = incumbent.iter().map(|x| x.1).sum();
                pareto && any_strict_edge && cand > inc
            }
            OpKind::Split => pareto,
        };
        Decision { accept, payoffs, edge_checks, nonedge_checks }
    }

    fn apply(&self, state: &mut GameState, decision: &Decision, bps: &[Real]) {
        for (l, b) in &decision.payoffs {
            state.phi[*l] = b.phi;
            for &u in &self.phy.cell_ues[*l] {
                state.baselines[u] = bps[u];
            }
        }
    }

    /// Re-evaluate the inherited partition on this TTI's channels so the
    /// edge baselines refer to current instantaneous throughputs.
    fn refresh_baselines(&self, state: &mut GameState) {
        let mut bps = vec![0.0; self.phy.n_ues];
        let coalitions: Vec<Vec<usize>> = state.partition.coalitions().to_vec();
        for c in &coalitions {
            self.eval_into(&[c.as_slice()], &mut bps);
        }
        for c in &coalitions {
            for &l in c {
                for &u in &self.phy.cell_ues[l] {
                    state.baselines[u] = bps[u];
                }
            }
        }
    }
}

/// Run one activation of the merge/split algorithm starting from the
/// inherited partition. Sweeps repeat until a full merge-and-split pass
/// accepts nothing, so the result admits no further accepted operation.
pub fn run_coalition_formation(ctx: &GameCtx, ci: &CiMatrix, state: &mut GameState) -> ActivationStats {
    let n_rrhs = ci.n_rrhs;
    let thr = ctx.cfg.ci_threshold_db;
    let cap = ctx.cfg.max_coalition_size;
    let mut stats = ActivationStats {
        below_threshold_pairs: ci.below_threshold_pairs(thr) as u64,
        ..ActivationStats::default()
    };

    ctx.refresh_baselines(state);

    let mut tested: BTreeSet<Vec<usize>> = BTreeSet::new();
    let mut bps = vec![0.0; ctx.phy.n_ues];

    loop {
        stats.passes += 1;
        let mut accepted_any = false;

        // Merge phase: walk the C/I matrix row by row; within a row the
        // most-interfered RRH seeks its candidate first.
        'rows: for row in 0..n_rrhs.saturating_sub(1) {
            let mut entries: Vec<(Real, usize, usize)> = (0..n_rrhs)
                .filter_map(|l| {
                    ci.values[l]
                        .get(row)
                        .filter(|v| v.is_finite())
                        .map(|&v| (v, l, ci.ids[l][row]))
                })
                .collect();
            entries.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
            if entries.first().map_or(true, |e| e.0 > thr) {
                // Columns are sorted ascending, so no later row qualifies.
                break 'rows;
            }
            for (value, l, cand) in entries {
                if value > thr {
                    break;
                }
                let ca = state.partition.coalition_of(l).to_vec();
                let cb = state.partition.coalition_of(cand).to_vec();
                if ca == cb {
                    continue;
                }
                let mut union = ca;
                union.extend(cb);
                union.sort_unstable();
                if !tested.insert(union.clone()) {
                    continue;
                }
                if union.len() > cap {
                    stats.size_rejects += 1;
                    continue;
                }
                stats.merge_tests += 1;
                ctx.eval_into(&[&union], &mut bps);
                let decision = ctx.decide(state, &union, &bps, OpKind::Merge);
                if decision.accept {
                    state.partition.merge(l, cand);
                    ctx.apply(state, &decision, &bps);
                    stats.merge_accepts += 1;
                    stats.accepted_ops.push(AcceptedOp {
                        kind: OpKind::Merge,
                        members: union,
                        edge_checks: decision.edge_checks,
                        nonedge_checks: decision.nonedge_checks,
                    });
                    accepted_any = true;
                    // Accepted operations change the baselines, so earlier
                    // verdicts are stale.
                    tested.clear();
                }
            }
        }

        // Split phase: sweep single-member splits until a pass accepts none.
        loop {
            let mut split_accepted = false;
            'sweep: for c in state.partition.coalitions().to_vec() {
                if c.len() < 2 {
                    continue;
                }
                for &m in &c {
                    stats.split_tests += 1;
                    let rest: Vec<usize> = c.iter().copied().filter(|&x| x != m).collect();
                    ctx.eval_into(&[&rest, &[m]], &mut bps);
                    let decision = ctx.decide(state, &c, &bps, OpKind::Split);
                    if decision.accept {
                        state.partition.split_out(m);
                        ctx.apply(state, &decision, &bps);
                        stats.split_accepts += 1;
                        stats.accepted_ops.push(AcceptedOp {
                            kind: OpKind::Split,
                            members: c.clone(),
                            edge_checks: decision.edge_checks,
                            nonedge_checks: decision.nonedge_checks,
                        });
                        split_accepted = true;
                        accepted_any = true;
                        tested.clear();
                        break 'sweep;
                    }
                }
            }
            if !split_accepted {
                break;
            }
        }

        if !accepted_any {
            break;
        }
    }
    stats
}

/// Exhaustively test every operation the mechanism could perform on the
/// final partition: all pairwise coalition merges reachable through a
/// below-threshold C/I pair (within the size cap) and all single-member
/// splits. Returns the first accepted operation if the partition is not
/// stable.
pub fn check_dhp_stable(ctx: &GameCtx, ci: &CiMatrix, state: &GameState) -> (bool, Option<String>) {
    let thr = ctx.cfg.ci_threshold_db;
    let cap = ctx.cfg.max_coalition_size;
    let coalitions = state.partition.coalitions();
    let mut bps = vec![0.0; ctx.phy.n_ues];

    for i in 0..coalitions.len() {
        for j in i + 1..coalitions.len() {
            let (a, b) = (&coalitions[i], &coalitions[j]);
            if a.len() + b.len() > cap {
                continue;
            }
            let gated = a
                .iter()
                .any(|&l| b.iter().any(|&c| ci.ci(l, c) <= thr))
                || b.iter().any(|&l| a.iter().any(|&c| ci.ci(l, c) <= thr));
            if !gated {
                continue;
            }
            let mut union = a.clone();
            union.extend(b.iter());
            union.sort_unstable();
            ctx.eval_into(&[&union], &mut bps);
            if ctx.decide(state, &union, &bps, OpKind::Merge).accept {
                return (false, Some(format!("acceptable merge {union:?}")));
            }
        }
    }

    for c in coalitions {
        if c.len() < 2 {
            continue;
        }
        for &m in c {
            let rest: Vec<usize> = c.iter().copied().filter(|&x| x != m).collect();
            ctx.eval_into(&[&rest, &[m]], &mut bps);
            if ctx.decide(state, c, &bps, OpKind::Split).accept {
                return (false, Some(format!("acceptable split of {m} from {c:?}")));
            }
        }
    }
    (true, None)
}

/// The algorithm reactivates when a handover occurred or any UE changed
/// its edge status.
pub fn reactivation_triggers(handovers: usize, prev_edge: &[bool], curr_edge: &[bool]) -> bool {
    handovers > 0 || prev_edge != curr_edge
}
