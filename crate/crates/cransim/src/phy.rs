//! Per-RB physical layer: NOMA user pairing, zero-forcing beamforming,
//! fractional transmit power control and SINR evaluation with and without
//! joint transmission.
//!
//! [`TtiPhy`] freezes everything about one TTI that does not depend on the
//! RRH partition: schedules, pre-CoMP NOMA clusters, ZF beamformers (always
//! computed from the pre-CoMP strong users) and a lookup table of
//! channel/beam gains. Because every beam always transmits its full power
//! share, the interference a UE receives from an RRH outside its own
//! coalition does not depend on how the rest of the network is partitioned;
//! [`TtiPhy::eval_coalition`] therefore evaluates one coalition at a time,
//! which is what both the coalition game and the greedy baseline need.

use num_complex::Complex;

use crate::channel::ChannelRealization;
use crate::error::{Error, Result};
use crate::linalg::{self, CMat, CVec};
use crate::linkadapt::{effective_sinr, per_rb_tbs, CqiTable, SinrAveraging};
use crate::scalar::Scalar;
use crate::scheduler::RbGrid;
use crate::Real;

/// Condition-estimate ceiling before ZF falls back to the regularized
/// inverse; below this the orthogonality residual stays under 1e-9.
pub const ZF_COND_LIMIT: Real = 1e6;
/// Tikhonov scale for the regularized fallback, relative to trace(HH^H)/N.
pub const ZF_EPS_SCALE: Real = 1e-10;

/// Channel correlation `|h_s h_w^H| / (||h_s|| ||h_w||)` in [0, 1].
pub fn correlation_metric<S: Scalar>(h_s: &[Complex<S>], h_w: &[Complex<S>]) -> Result<S> {
    let ns = linalg::norm(h_s);
    let nw = linalg::norm(h_w);
    if !(ns > S::zero()) || !(nw > S::zero()) {
        return Err(Error::invalid_input("correlation of a zero channel vector is undefined"));
    }
    Ok(linalg::dot_conj(h_s, h_w).norm() / (ns * nw))
}

/// FTPC power fractions `a_k = G_k^-p / sum_j G_j^-p`.
pub fn ftpc_coefficients<S: Scalar>(gains: &[S], p_ftpc: S) -> Result<Vec<S>> {
    if gains.is_empty() {
        return Err(Error::invalid_input("FTPC over an empty cluster"));
    }
    let mut weights = Vec::with_capacity(gains.len());
    let mut sum = S::zero();
    for &g in gains {
        if !(g > S::zero()) {
            return Err(Error::invalid_input("FTPC requires strictly positive channel gains"));
        }
        let w = g.powf(-p_ftpc);
        weights.push(w);
        sum += w;
    }
    Ok(weights.into_iter().map(|w| w / sum).collect())
}

/// Per-beam per-subcarrier transmit power: total power split equally over
/// all beams and all available subcarriers.
pub fn beam_power<S: Scalar>(tx_power_total: S, num_beams: usize, num_subcarriers_total: usize) -> S {
    tx_power_total / (S::of(num_beams as f64) * S::of(num_subcarriers_total as f64))
}

/// Unit-norm ZF beamformers from the strong users' channel rows
/// (`W = H^H (H H^H)^-1`, columns normalized). The flag reports whether the
/// regularized fallback was used.
pub fn zf_beamformers<S: Scalar>(strong_rows: &[&[Complex<S>]]) -> (Vec<CVec<S>>, bool) {
    let h = CMat::from_rows(strong_rows);
    let p = linalg::right_pseudo_inverse(&h, S::of(ZF_COND_LIMIT), S::of(ZF_EPS_SCALE));
    let cols = p
        .columns
        .into_iter()
        .map(|mut col| {
            let n = linalg::norm(&col);
            if n > S::zero() {
                for x in col.iter_mut() {
                    *x = *x / n;
                }
            }
            col
        })
        .collect();
    (cols, p.regularized)
}

/// Split one RB's scheduled group into NOMA pairs: top half by channel gain
/// are strong users (one per beam, descending gain), each matched greedily
/// with the unassigned weak user of highest correlation. Returns one member
/// list per beam in decode order (ascending gain, i.e. `[weak, strong]`);
/// trailing beams are empty when the cell cannot fill them. Repeated ids in
/// a wrapped group collapse so no UE sits twice in one cluster.
pub fn pair_noma_users(
    ch: &ChannelRealization<Real>,
    rrh: usize,
    group: &[usize],
    n_beams: usize,
) -> Vec<Vec<usize>> {
    let mut beams = vec![Vec::new(); n_beams];
    if group.is_empty() {
        return beams;
    }
    let mut uniq: Vec<usize> = group.to_vec();
    uniq.sort_unstable();
    uniq.dedup();
    // Strong user on ties: lower id.
    uniq.sort_by(|&a, &b| {
        ch.gain(b, rrh)
            .partial_cmp(&ch.gain(a, rrh))
            .unwrap()
            .then(a.cmp(&b))
    });

    let used = n_beams.min(uniq.len().div_ceil(2));
    let strong = &uniq[..used];
    let mut weak: Vec<usize> = uniq[used..].to_vec();
    for (n, &s) in strong.iter().enumerate() {
        if weak.is_empty() {
            beams[n] = vec![s];
            continue;
        }
        let mut best = 0usize;
        let mut best_c = -1.0;
        for (i, &w) in weak.iter().enumerate() {
            let c = correlation_metric(ch.at(s, rrh), ch.at(w, rrh)).unwrap_or(0.0);
            if c > best_c {
                best_c = c;
                best = i;
            }
        }
        let w = weak.remove(best);
        beams[n] = vec![w, s];
    }
    beams
}

/// Partition-independent PHY parameters for one run.
#[derive(Debug, Clone)]
pub struct PhyParams {
    pub n_beams: usize,
    pub subcarriers_per_rb: usize,
    pub p_ftpc: Real,
    /// Noise power per subcarrier, watts.
    pub noise_w: Real,
    /// Data resource elements per RB.
    pub n_re: u32,
    pub tti_s: Real,
    pub sinr_averaging: SinrAveraging,
    pub cqi: CqiTable,
}

/// Pre-CoMP clusters and beamformers of one cell on one RB.
#[derive(Debug, Clone)]
pub struct CellRb {
    /// Member lists per beam in decode order (ascending gain); may be empty.
    pub beams: Vec<Vec<usize>>,
    /// Unit-norm beamformers; all-zero vector for inactive beams.
    pub w: Vec<CVec<Real>>,
    pub regularized: bool,
}

/// Additive SINR components (watts, per subcarrier).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SinrBreakdown {
    pub useful: Real,
    pub intrabeam: Real,
    pub interbeam: Real,
    pub intercell: Real,
    pub noise: Real,
    pub sinr: Real,
}

/// Throughput evaluation of one UE under one coalition.
#[derive(Debug, Clone)]
pub struct UeEval {
    pub ue: usize,
    /// Per-allocation SINR (one entry per scheduled (RB, beam) slot).
    pub sinrs: Vec<Real>,
    /// Linear effective SINR; 0 when the UE was not scheduled.
    pub eff_sinr: Real,
    pub total_bits: u64,
    pub bps: Real,
    /// Populated only when detail was requested.
    pub breakdowns: Vec<SinrBreakdown>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EvalScope {
    All,
    EdgeOnly,
}

/// Frozen per-TTI PHY context.
pub struct TtiPhy<'a> {
    pub ch: &'a ChannelRealization<Real>,
    pub serving: &'a [usize],
    pub params: &'a PhyParams,
    pub n_rrhs: usize,
    pub n_ues: usize,
    pub n_rbs: usize,
    /// Per-RRH per-beam per-subcarrier power.
    pub beam_power_w: Vec<Real>,
    /// `[rrh][rb]` pre-CoMP clusters.
    pub cells: Vec<Vec<CellRb>>,
    /// Attached UE ids per RRH, ascending.
    pub cell_ues: Vec<Vec<usize>>,
    gain: Vec<Real>,
    t_pow: Vec<Real>,
    allocs: Vec<Vec<(usize, usize)>>,
    zf_regularizations: usize,
}

impl<'a> TtiPhy<'a> {
    pub fn build(
        ch: &'a ChannelRealization<Real>,
        serving: &'a [usize],
        schedule: &[RbGrid],
        tx_power_w: &[Real],
        params: &'a PhyParams,
    ) -> TtiPhy<'a> {
        let n_rrhs = ch.n_rrhs;
        let n_ues = ch.n_ues;
        let n_rbs = schedule.first().map_or(0, |g| g.groups.len());
        let n_beams = params.n_beams;
        let n_sc_total = n_rbs * params.subcarriers_per_rb;

        let beam_power_w: Vec<Real> = tx_power_w
            .iter()
            .map(|&p| beam_power(p, n_beams, n_sc_total))
            .collect();

        let mut zf_regularizations = 0usize;
        let mut cells: Vec<Vec<CellRb>> = Vec::with_capacity(n_rrhs);
        for l in 0..n_rrhs {
            let mut per_rb = Vec::with_capacity(n_rbs);
            for rb in 0..n_rbs {
                let beams = pair_noma_users(ch, l, &schedule[l].groups[rb], n_beams);
                let strong_rows: Vec<&[Complex<Real>]> = beams
                    .iter()
                    .filter(|b| !b.is_empty())
                    .map(|b| ch.at(*b.last().unwrap(), l))
                    .collect();
                let (mut w, regularized) = if strong_rows.is_empty() {
                    (Vec::new(), false)
                } else {
                    zf_beamformers(&strong_rows)
                };
                if regularized {
                    zf_regularizations += 1;
                }
                // Scatter active-beam columns back to beam positions.
                let zero = vec![Complex::new(0.0, 0.0); ch.n_antennas];
                let mut w_full = vec![zero; n_beams];
                let mut it = w.drain(..);
                for (n, b) in beams.iter().enumerate() {
                    if !b.is_empty() {
                        w_full[n] = it.next().expect("one column per active beam");
                    }
                }
                per_rb.push(CellRb { beams, w: w_full, regularized });
            }
            cells.push(per_rb);
        }

        // Gain lookup |h_{l,u} w_{l,n,rb}|^2 and per-cell received powers.
        let mut gain = vec![0.0; n_ues * n_rrhs * n_rbs * n_beams];
        let mut t_pow = vec![0.0; n_ues * n_rrhs * n_rbs];
        for u in 0..n_ues {
            for l in 0..n_rrhs {
                let h = ch.at(u, l);
                for rb in 0..n_rbs {
                    let mut cell_sum = 0.0;
                    for n in 0..n_beams {
                        let g = if cells[l][rb].beams[n].is_empty() {
                            0.0
                        } else {
                            linalg::dot(h, &cells[l][rb].w[n]).norm_sqr()
                        };
                        gain[((u * n_rrhs + l) * n_rbs + rb) * n_beams + n] = g;
                        cell_sum += g;
                    }
                    t_pow[(u * n_rrhs + l) * n_rbs + rb] = beam_power_w[l] * cell_sum;
                }
            }
        }

        let mut allocs: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n_ues];
        for l in 0..n_rrhs {
            for rb in 0..n_rbs {
                for (n, beam) in cells[l][rb].beams.iter().enumerate() {
                    for &u in beam {
                        allocs[u].push((rb, n));
                    }
                }
            }
        }

        let mut cell_ues: Vec<Vec<usize>> = vec![Vec::new(); n_rrhs];
        for (u, &l) in serving.iter().enumerate() {
            cell_ues[l].push(u);
        }

        TtiPhy {
            ch,
            serving,
            params,
            n_rrhs,
            n_ues,
            n_rbs,
            beam_power_w,
            cells,
            cell_ues,
            gain,
            t_pow,
            allocs,
            zf_regularizations,
        }
    }

    #[inline]
    pub fn gain(&self, u: usize, l: usize, rb: usize, n: usize) -> Real {
        self.gain[((u * self.n_rrhs + l) * self.n_rbs + rb) * self.params.n_beams + n]
    }

    /// Total power received by `u` from all beams of `l` on `rb`.
    #[inline]
    pub fn cell_power(&self, u: usize, l: usize, rb: usize) -> Real {
        self.t_pow[(u * self.n_rrhs + l) * self.n_rbs + rb]
    }

    pub fn allocs(&self, u: usize) -> &[(usize, usize)] {
        &self.allocs[u]
    }

    pub fn zf_regularizations(&self) -> usize {
        self.zf_regularizations
    }

    /// Evaluate the UEs of the member cells under the coalition formed by
    /// `members` (sorted RRH ids). `plan` carries the CoMP beam assignments;
    /// without it (or for singleton coalitions) the evaluation is the plain
    /// non-CoMP path.
    pub fn eval_coalition(
        &self,
        members: &[usize],
        plan: Option<&CompPlan>,
        scope: EvalScope,
        detail: bool,
    ) -> Vec<UeEval> {
        debug_assert!(members.windows(2).all(|w| w[0] < w[1]));
        let comp_active = plan.is_some() && members.len() >= 2;
        let plan_ref = plan.filter(|_| comp_active);

        let mut member_idx = vec![usize::MAX; self.n_rrhs];
        for (i, &l) in members.iter().enumerate() {
            member_idx[l] = i;
        }

        // Compose clusters per (member, rb, beam) under this coalition.
        let n_beams = self.params.n_beams;
        let mut clusters: Vec<Vec<Cluster>> = Vec::with_capacity(members.len() * self.n_rbs);
        for &l in members {
            for rb in 0..self.n_rbs {
                let mut per_beam = Vec::with_capacity(n_beams);
                for n in 0..n_beams {
                    per_beam.push(self.compose_cluster(l, rb, n, members, &member_idx, plan_ref));
                }
                clusters.push(per_beam);
            }
        }
        let cluster_at = |mi: usize, rb: usize| -> &Vec<Cluster> { &clusters[mi * self.n_rbs + rb] };

        let mut out = Vec::new();
        for &l in members {
            let mi = member_idx[l];
            for &u in &self.cell_ues[l] {
                if scope == EvalScope::EdgeOnly {
                    let is_edge = plan.map_or(false, |p| p.edge[u]);
                    if !is_edge {
                        continue;
                    }
                }
                out.push(self.eval_ue(u, l, mi, &member_idx, plan_ref, &cluster_at, detail));
            }
        }
        out
    }

    /// Cluster composition of every member cell under the coalition, as
    /// `(rrh, rb, clusters-per-beam)` tuples (decode order and FTPC
    /// coefficients included).
    pub fn composed(&self, members: &[usize], plan: Option<&CompPlan>) -> Vec<(usize, usize, Vec<Cluster>)> {
        let comp_active = plan.is_some() && members.len() >= 2;
        let plan_ref = plan.filter(|_| comp_active);
        let mut member_idx = vec![usize::MAX; self.n_rrhs];
        for (i, &l) in members.iter().enumerate() {
            member_idx[l] = i;
        }
        let mut out = Vec::new();
        for &l in members {
            for rb in 0..self.n_rbs {
                let clusters = (0..self.params.n_beams)
                    .map(|n| self.compose_cluster(l, rb, n, members, &member_idx, plan_ref))
                    .collect();
                out.push((l, rb, clusters));
            }
        }
        out
    }

    fn compose_cluster(
        &self,
        l: usize,
        rb: usize,
        n: usize,
        members: &[usize],
        member_idx: &[usize],
        plan: Option<&CompPlan>,
    ) -> Cluster {
        let base = &self.cells[l][rb].beams[n];
        let mut order: Vec<usize>;
        match plan {
            None => order = base.clone(),
            Some(p) => {
                let mut edge_members: Vec<usize> = base.iter().copied().filter(|&u| p.edge[u]).collect();
                for &e in p.joiners(l, rb, n) {
                    let s = self.serving[e];
                    if s != l && member_idx[s] != usize::MAX && members.len() >= 2 {
                        edge_members.push(e);
                    }
                }
                edge_members.sort_by_key(|&u| p.edge_rank[u]);
                order = edge_members;
                order.extend(base.iter().copied().filter(|&u| !p.edge[u]));
            }
        }
        if order.is_empty() {
            return Cluster { order, a: Vec::new() };
        }
        let gains: Vec<Real> = order.iter().map(|&u| self.ch.gain(u, l)).collect();
        let a = ftpc_coefficients(&gains, self.params.p_ftpc)
            .expect("cluster members have positive channel gains");
        Cluster { order, a }
    }

    #[allow(clippy::too_many_arguments)]
    fn eval_ue<'c>(
        &self,
        u: usize,
        l: usize,
        mi: usize,
        member_idx: &[usize],
        plan: Option<&CompPlan>,
        cluster_at: &impl Fn(usize, usize) -> &'c Vec<Cluster>,
        detail: bool,
    ) -> UeEval {
        let mut sinrs = Vec::with_capacity(self.allocs[u].len());
        let mut breakdowns = Vec::new();
        let is_comp_edge = plan.map_or(false, |p| p.edge[u]);

        for &(rb, n) in &self.allocs[u] {
            let cluster = &cluster_at(mi, rb)[n];
            let k = cluster.position(u);
            let p_l = self.beam_power_w[l];
            let g_ln = self.gain(u, l, rb, n);
            let a_u = cluster.a[k];

            let mut useful = g_ln * a_u * p_l;
            let intrabeam: Real = cluster.a[k + 1..].iter().map(|&a| g_ln * a * p_l).sum();
            let mut interbeam = 0.0;
            for n2 in 0..self.params.n_beams {
                if n2 != n {
                    interbeam += self.gain(u, l, rb, n2) * p_l;
                }
            }
            let mut intercell = 0.0;
            if is_comp_edge {
                let p = plan.unwrap();
                for l2 in 0..self.n_rrhs {
                    if l2 == l {
                        continue;
                    }
                    if member_idx[l2] == usize::MAX {
                        // Outside the coalition: plain interference.
                        intercell += self.cell_power(u, l2, rb);
                        continue;
                    }
                    match p.choice(u, l2, rb) {
                        Some(nj) => {
                            let cj = &cluster_at(member_idx[l2], rb)[nj];
                            let kj = cj.position(u);
                            let g_jn = self.gain(u, l2, rb, nj);
                            let p_j = self.beam_power_w[l2];
                            useful += g_jn * cj.a[kj] * p_j;
                            // Residual intrabeam of the cooperating cluster
                            // plus that RRH's other beams.
                            intercell += cj.a[kj + 1..].iter().map(|&a| g_jn * a * p_j).sum::<Real>();
                            for n2 in 0..self.params.n_beams {
                                if n2 != nj {
                                    intercell += self.gain(u, l2, rb, n2) * p_j;
                                }
                            }
                        }
                        // No cluster for this UE at the cooperating RRH on
                        // this RB: the whole cell stays plain interference.
                        None => intercell += self.cell_power(u, l2, rb),
                    }
                }
            } else {
                for l2 in 0..self.n_rrhs {
                    if l2 != l {
                        intercell += self.cell_power(u, l2, rb);
                    }
                }
            }

            let noise = self.params.noise_w;
            let denom = intrabeam + interbeam + intercell + noise;
            let sinr = useful / denom;
            sinrs.push(sinr);
            if detail {
                breakdowns.push(SinrBreakdown {
                    useful,
                    intrabeam,
                    interbeam,
                    intercell,
                    noise,
                    sinr,
                });
            }
        }

        let eff_sinr = if sinrs.is_empty() {
            0.0
        } else {
            effective_sinr(&sinrs, self.params.sinr_averaging).expect("non-empty")
        };
        let mut total_bits = 0u64;
        for &s in &sinrs {
            let cqi = self.params.cqi.cqi_for_sinr(s).expect("SINR is finite");
            total_bits += per_rb_tbs(&self.params.cqi, cqi, self.params.n_re) as u64;
        }
        UeEval {
            ue: u,
            eff_sinr,
            bps: total_bits as Real / self.params.tti_s,
            total_bits,
            sinrs,
            breakdowns,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Cluster {
    /// Members in decode order (position 0 decoded first).
    pub order: Vec<usize>,
    pub a: Vec<Real>,
}

impl Cluster {
    fn position(&self, u: usize) -> usize {
        self.order.iter().position(|&x| x == u).expect("UE is a cluster member")
    }
}

/// CoMP beam assignments for the current TTI's edge set: for every edge UE,
/// the cluster it would join at each other RRH (chosen by maximum channel
/// correlation with that cluster's strong user), independent of the
/// partition actually formed.
pub struct CompPlan {
    pub edge: Vec<bool>,
    /// Decode rank among edge UEs (ascending pre-CoMP effective SINR),
    /// shared by every cluster that serves the UE.
    pub edge_rank: Vec<usize>,
    n_rrhs: usize,
    n_rbs: usize,
    n_beams: usize,
    choice: Vec<u8>,
    joiners: Vec<Vec<usize>>,
}

const NO_CHOICE: u8 = u8::MAX;

impl CompPlan {
    pub fn build(phy: &TtiPhy, edge: Vec<bool>, edge_rank: Vec<usize>) -> CompPlan {
        let (n_ues, n_rrhs, n_rbs, n_beams) =
            (phy.n_ues, phy.n_rrhs, phy.n_rbs, phy.params.n_beams);
        let mut choice = vec![NO_CHOICE; n_ues * n_rrhs * n_rbs];
        let mut joiners: Vec<Vec<usize>> = vec![Vec::new(); n_rrhs * n_rbs * n_beams];

        for e in 0..n_ues {
            if !edge[e] {
                continue;
            }
            let serving = phy.serving[e];
            let mut rbs: Vec<usize> = phy.allocs(e).iter().map(|&(rb, _)| rb).collect();
            rbs.dedup();
            for rb in rbs {
                for j in 0..n_rrhs {
                    if j == serving {
                        continue;
                    }
                    let mut best: Option<(usize, Real)> = None;
                    for (n, beam) in phy.cells[j][rb].beams.iter().enumerate() {
                        if beam.is_empty() {
                            continue;
                        }
                        let strong = *beam.last().unwrap();
                        let c = correlation_metric(phy.ch.at(e, j), phy.ch.at(strong, j))
                            .unwrap_or(0.0);
                        if best.map_or(true, |(_, bc)| c > bc) {
                            best = Some((n, c));
                        }
                    }
                    if let Some((n, _)) = best {
                        choice[(e * n_rrhs + j) * n_rbs + rb] = n as u8;
                        joiners[(j * n_rbs + rb) * n_beams + n].push(e);
                    }
                }
            }
        }
        for list in joiners.iter_mut() {
            list.sort_by_key(|&e| edge_rank[e]);
        }
        CompPlan { edge, edge_rank, n_rrhs, n_rbs, n_beams, choice, joiners }
    }

    /// Beam the edge UE joins at cooperating RRH `j` on `rb`, if any.
    #[inline]
    pub fn choice(&self, e: usize, j: usize, rb: usize) -> Option<usize> {
        match self.choice[(e * self.n_rrhs + j) * self.n_rbs + rb] {
            NO_CHOICE => None,
            n => Some(n as usize),
        }
    }

    /// Edge UEs that join cluster `(l, rb, n)` when their serving RRH
    /// cooperates with `l`, in decode-rank order.
    #[inline]
    pub fn joiners(&self, l: usize, rb: usize, n: usize) -> &[usize] {
        &self.joiners[(l * self.n_rbs + rb) * self.n_beams + n]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::ChannelRealization;
    use crate::linkadapt::CqiTable;
    use crate::rng::Stream;
    use num_complex::Complex64;
    use rand::Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn correlation_examples() {
        let a = vec![c(1.0, 0.0), c(1.0, 0.0)];
        assert!((correlation_metric(&a, &a).unwrap() - 1.0).abs() < 1e-12);

        let e1 = vec![c(1.0, 0.0), c(0.0, 0.0)];
        let e2 = vec![c(0.0, 0.0), c(1.0, 0.0)];
        assert!(correlation_metric(&e1, &e2).unwrap().abs() < 1e-12);

        // ((1,1)/sqrt(2), (1,0)) -> 1/sqrt(2)
        let s = vec![c(1.0 / 2f64.sqrt(), 0.0), c(1.0 / 2f64.sqrt(), 0.0)];
        let w = vec![c(1.0, 0.0), c(0.0, 0.0)];
        assert!((correlation_metric(&s, &w).unwrap() - 1.0 / 2f64.sqrt()).abs() < 1e-12);

        let z = vec![c(0.0, 0.0)];
        assert!(correlation_metric(&z, &e1[..1]).is_err());
    }

    #[test]
    fn ftpc_examples() {
        // p = 0: equal split.
        let a = ftpc_coefficients(&[1.0f64, 9.0], 0.0).unwrap();
        assert_eq!(a, vec![0.5, 0.5]);
        // Equal gains: uniform for any p.
        let a = ftpc_coefficients(&[2.0f64, 2.0, 2.0], 0.7).unwrap();
        for &x in &a {
            assert!((x - 1.0 / 3.0).abs() < 1e-12);
        }
        // G = (1, 4), p = 1 -> (0.8, 0.2).
        let a = ftpc_coefficients(&[1.0f64, 4.0], 1.0).unwrap();
        assert!((a[0] - 0.8).abs() < 1e-12 && (a[1] - 0.2).abs() < 1e-12);
        // G = (1, 4), p = 0.4 -> (0.63518, 0.36482).
        let a = ftpc_coefficients(&[1.0f64, 4.0], 0.4).unwrap();
        assert!((a[0] - 0.635_183_105_687_455_8).abs() < 1e-12, "{}", a[0]);
        assert!((a[0] + a[1] - 1.0).abs() < 1e-15);
        // Zero gain is degenerate.
        assert!(ftpc_coefficients(&[0.0f64, 1.0], 0.4).is_err());
    }

    #[test]
    fn ftpc_weak_user_gets_more_power() {
        let mut rng = Stream::new(1, "ftpc");
        for _ in 0..200 {
            let g: Vec<f64> = (0..3).map(|_| rng.gen_range(0.01..10.0)).collect();
            let a = ftpc_coefficients(&g, 0.4).unwrap();
            assert!((a.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            for i in 0..3 {
                for j in 0..3 {
                    if g[i] < g[j] {
                        assert!(a[i] > a[j]);
                    }
                }
            }
        }
    }

    #[test]
    fn beam_power_examples() {
        // 1 W over 4 beams x 1272 subcarriers.
        let p = beam_power(1.0f64, 4, 106 * 12);
        assert!((p - 1.0 / 5088.0).abs() < 1e-18);
        assert_eq!(beam_power(1.0f64, 1, 1), 1.0);
        assert!((beam_power(1.0f64, 2, 8) * 2.0 - beam_power(1.0f64, 1, 8)).abs() < 1e-18);
    }

    #[test]
    fn zf_single_antenna_matched_filter() {
        let h = vec![c(0.6, 0.8)];
        let (w, reg) = zf_beamformers(&[&h]);
        assert!(!reg);
        // w = h^H / ||h||: h*w = ||h||.
        let hw = linalg::dot(&h, &w[0]);
        assert!((hw.norm() - 1.0).abs() < 1e-12);
        assert!((linalg::norm(&w[0]) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn zf_orthogonal_rows_exact() {
        let h0 = vec![c(2.0, 0.0), c(0.0, 0.0)];
        let h1 = vec![c(0.0, 0.0), c(0.0, 3.0)];
        let (w, reg) = zf_beamformers(&[&h0, &h1]);
        assert!(!reg);
        assert!(linalg::dot(&h0, &w[1]).norm() < 1e-15);
        assert!(linalg::dot(&h1, &w[0]).norm() < 1e-15);
        assert!((linalg::dot(&h0, &w[0]).norm() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn zf_random_orthogonality() {
        let mut rng = Stream::new(2, "zf");
        for _ in 0..200 {
            let rows: Vec<Vec<Complex64>> = (0..4)
                .map(|_| (0..4).map(|_| c(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)).collect())
                .collect();
            let refs: Vec<&[Complex64]> = rows.iter().map(|r| r.as_slice()).collect();
            let (w, reg) = zf_beamformers(&refs);
            if reg {
                continue;
            }
            for n in 0..4 {
                for m in 0..4 {
                    if n != m {
                        let leak = linalg::dot(&rows[n], &w[m]).norm() / linalg::norm(&rows[n]);
                        assert!(leak < 1e-9, "leak {leak}");
                    }
                }
            }
        }
    }

    // --- synthetic-context helpers -------------------------------------

    struct Fixture {
        ch: ChannelRealization<Real>,
        serving: Vec<usize>,
        schedule: Vec<RbGrid>,
        tx: Vec<Real>,
        params: PhyParams,
    }

    impl Fixture {
        fn phy(&self) -> TtiPhy<'_> {
            TtiPhy::build(&self.ch, &self.serving, &self.schedule, &self.tx, &self.params)
        }
    }

    fn params(n_beams: usize, noise: Real) -> PhyParams {
        PhyParams {
            n_beams,
            subcarriers_per_rb: 12,
            p_ftpc: 0.4,
            noise_w: noise,
            n_re: 144,
            tti_s: 1e-3,
            sinr_averaging: SinrAveraging::Linear,
            cqi: CqiTable::default(),
        }
    }

    /// Two cells, one antenna, one beam, one RB. Cell 0 serves UEs {0, 1},
    /// cell 1 serves UEs {2, 3}.
    fn two_cell_fixture(seed: u64) -> Fixture {
        let mut rng = Stream::new(seed, "fixture");
        let n_ues = 4;
        let n_rrhs = 2;
        let h: Vec<Complex64> = (0..n_ues * n_rrhs)
            .map(|_| c(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5))
            .collect();
        let ch = ChannelRealization::from_vectors(n_ues, n_rrhs, 1, h);
        let schedule = vec![
            RbGrid { groups: vec![vec![0, 1]] },
            RbGrid { groups: vec![vec![2, 3]] },
        ];
        Fixture {
            ch,
            serving: vec![0, 0, 1, 1],
            schedule,
            tx: vec![1.0, 1.0],
            params: params(1, 1e-9),
        }
    }

    #[test]
    fn single_user_sinr_is_snr() {
        // One cell, one UE, one beam: SINR = |hw|^2 P / noise.
        let ch = ChannelRealization::from_vectors(1, 1, 1, vec![c(0.3, -0.4)]);
        let schedule = vec![RbGrid { groups: vec![vec![0, 0]] }];
        let p = params(1, 1e-6);
        let phy = TtiPhy::build(&ch, &[0], &schedule, &[1.0], &p);
        let evals = phy.eval_coalition(&[0], None, EvalScope::All, true);
        assert_eq!(evals.len(), 1);
        let b = &evals[0].breakdowns[0];
        assert_eq!(b.intrabeam, 0.0);
        assert_eq!(b.interbeam, 0.0);
        assert_eq!(b.intercell, 0.0);
        // |hw| = ||h|| for the matched single-antenna beam; P = 1/12.
        let expect = 0.25 * (1.0 / 12.0) / 1e-6;
        assert!((b.sinr - expect).abs() / expect < 1e-12, "{} vs {expect}", b.sinr);
    }

    #[test]
    fn strongest_user_has_no_intrabeam() {
        let f = two_cell_fixture(3);
        let phy = f.phy();
        let evals = phy.eval_coalition(&[0], None, EvalScope::All, true);
        // Decode order is ascending gain: the last member of the beam is the
        // strong user and sees zero intrabeam interference.
        let strong = *phy.cells[0][0].beams[0].last().unwrap();
        for e in &evals {
            if e.ue == strong {
                assert_eq!(e.breakdowns[0].intrabeam, 0.0);
            } else {
                assert!(e.breakdowns[0].intrabeam > 0.0);
            }
        }
    }

    #[test]
    fn pairing_splits_by_gain() {
        let mut rng = Stream::new(9, "pair");
        let h: Vec<Complex64> = (0..8).map(|_| c(rng.gen::<f64>() + 0.1, rng.gen::<f64>())).collect();
        let ch = ChannelRealization::from_vectors(8, 1, 1, h);
        let beams = pair_noma_users(&ch, 0, &[0, 1, 2, 3, 4, 5, 6, 7], 4);
        assert_eq!(beams.len(), 4);
        let mut seen = Vec::new();
        for b in &beams {
            assert_eq!(b.len(), 2);
            // Decode order ascending gain.
            assert!(ch.gain(b[0], 0) <= ch.gain(b[1], 0));
            seen.extend_from_slice(b);
        }
        seen.sort_unstable();
        assert_eq!(seen, (0..8).collect::<Vec<_>>());
    }

    #[test]
    fn pairing_prefers_colinear_weak_user() {
        // Strong user 0 along e1; weak users: 1 colinear with 0, 2 orthogonal.
        let h = vec![
            c(10.0, 0.0), c(0.0, 0.0),   // ue0 (strong)
            c(1.0, 0.0), c(0.0, 0.0),    // ue1 colinear
            c(0.0, 0.0), c(2.0, 0.0),    // ue2 orthogonal, higher gain than ue1
        ];
        let ch = ChannelRealization::from_vectors(3, 1, 2, h);
        let beams = pair_noma_users(&ch, 0, &[0, 1, 2], 2);
        // Strong users: 0 (gain 100) and 2 (gain 4); weak pool: {1}.
        // Beam of ue0 takes ue1 (correlation 1 vs 0).
        assert_eq!(beams[0], vec![1, 0]);
        assert_eq!(beams[1], vec![2]);
    }

    #[test]
    fn wrapped_duplicate_never_repeats_in_cluster() {
        let mut rng = Stream::new(10, "pair");
        let h: Vec<Complex64> = (0..6).map(|_| c(rng.gen::<f64>() + 0.1, rng.gen())).collect();
        let ch = ChannelRealization::from_vectors(3, 1, 2, h);
        // Wrapped group repeats ue 0.
        let beams = pair_noma_users(&ch, 0, &[0, 1, 2, 0], 2);
        for b in &beams {
            let mut s = b.clone();
            s.sort_unstable();
            s.dedup();
            assert_eq!(s.len(), b.len());
        }
        let total: usize = beams.iter().map(|b| b.len()).sum();
        assert_eq!(total, 3);
    }

    #[test]
    fn energy_accounting_per_cluster() {
        let f = two_cell_fixture(4);
        let phy = f.phy();
        for l in 0..2 {
            for rb in 0..1 {
                for beam in &phy.cells[l][rb].beams {
                    if beam.is_empty() {
                        continue;
                    }
                    let gains: Vec<Real> = beam.iter().map(|&u| f.ch.gain(u, l)).collect();
                    let a = ftpc_coefficients(&gains, f.params.p_ftpc).unwrap();
                    let total: Real = a.iter().map(|&x| x * phy.beam_power_w[l]).sum();
                    assert!((total - phy.beam_power_w[l]).abs() < 1e-15 * phy.beam_power_w[l].max(1.0));
                }
            }
        }
    }

    /// Build a two-cell fixture where UE 0 is the weak member of cell 0 and
    /// the only edge UE, then compare CoMP on/off.
    fn edge_plan(phy: &TtiPhy) -> CompPlan {
        let evals = phy.eval_coalition(&[0], None, EvalScope::All, false);
        let _ = evals;
        let mut edge = vec![false; phy.n_ues];
        edge[0] = true;
        let mut rank = vec![usize::MAX; phy.n_ues];
        rank[0] = 0;
        CompPlan::build(phy, edge, rank)
    }

    #[test]
    fn comp_improves_weak_edge_user() {
        for seed in 0..20u64 {
            let f = two_cell_fixture(100 + seed);
            let phy = f.phy();
            // Skip draws where ue0 is not the weak member of its beam.
            if phy.cells[0][0].beams[0][0] != 0 {
                continue;
            }
            let plan = edge_plan(&phy);
            let before = phy.eval_coalition(&[0], None, EvalScope::All, true);
            let after = phy.eval_coalition(&[0, 1], Some(&plan), EvalScope::All, true);
            let b0 = before.iter().find(|e| e.ue == 0).unwrap();
            let a0 = after.iter().find(|e| e.ue == 0).unwrap();
            assert!(
                a0.sinrs[0] > b0.sinrs[0],
                "seed {seed}: comp {} <= nocomp {}",
                a0.sinrs[0],
                b0.sinrs[0]
            );
            // The cooperating transmission moved out of intercell interference.
            assert!(a0.breakdowns[0].intercell < b0.breakdowns[0].intercell);
            assert!(a0.breakdowns[0].useful > b0.breakdowns[0].useful);
        }
    }

    #[test]
    fn singleton_coalition_matches_no_comp_path() {
        let f = two_cell_fixture(7);
        let phy = f.phy();
        let plan = edge_plan(&phy);
        let without = phy.eval_coalition(&[0], None, EvalScope::All, false);
        let with = phy.eval_coalition(&[0], Some(&plan), EvalScope::All, false);
        for (a, b) in without.iter().zip(&with) {
            assert_eq!(a.ue, b.ue);
            assert_eq!(a.sinrs, b.sinrs);
            assert_eq!(a.total_bits, b.total_bits);
        }
    }

    #[test]
    fn grown_cluster_reduces_existing_power_shares() {
        let f = two_cell_fixture(11);
        let phy = f.phy();
        let plan = edge_plan(&phy);
        // Under the coalition, cell 1's cluster grows by edge UE 0: its
        // original members' FTPC coefficients must shrink.
        let base = &phy.cells[1][0].beams[0];
        let gains: Vec<Real> = base.iter().map(|&u| f.ch.gain(u, 1)).collect();
        let a_before = ftpc_coefficients(&gains, f.params.p_ftpc).unwrap();

        let mut grown: Vec<usize> = vec![0];
        grown.extend_from_slice(base);
        let gains_grown: Vec<Real> = grown.iter().map(|&u| f.ch.gain(u, 1)).collect();
        let a_after = ftpc_coefficients(&gains_grown, f.params.p_ftpc).unwrap();
        for (i, &u) in base.iter().enumerate() {
            let _ = u;
            assert!(a_after[i + 1] < a_before[i]);
        }
        // And the evaluator reflects the growth: cooperating cluster now has
        // three members in decode order with the edge UE first.
        let evals = phy.eval_coalition(&[0, 1], Some(&plan), EvalScope::All, false);
        assert_eq!(evals.len(), 4);
    }

    #[test]
    fn edge_users_decode_first_in_comp_clusters() {
        let f = two_cell_fixture(13);
        let phy = f.phy();
        // Mark the strong member of cell 0's beam as edge: even as the
        // highest-gain member it must decode first once CoMP is active.
        let strong = *phy.cells[0][0].beams[0].last().unwrap();
        let mut edge = vec![false; phy.n_ues];
        edge[strong] = true;
        let mut rank = vec![usize::MAX; phy.n_ues];
        rank[strong] = 0;
        let plan = CompPlan::build(&phy, edge, rank);
        let evals = phy.eval_coalition(&[0, 1], Some(&plan), EvalScope::All, true);
        let e = evals.iter().find(|e| e.ue == strong).unwrap();
        // First decode position: intrabeam interference from everyone after.
        assert!(e.breakdowns[0].intrabeam > 0.0);
    }

    #[test]
    fn zf_strong_user_sees_negligible_interbeam() {
        // One cell, two beams, four UEs: each beam's strong user is a ZF
        // row, so its interbeam leakage is at numerical-noise level.
        let mut rng = Stream::new(33, "zf-strong");
        let h: Vec<Complex64> = (0..4 * 2)
            .map(|_| c(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5))
            .collect();
        let ch = ChannelRealization::from_vectors(4, 1, 2, h);
        let schedule = vec![RbGrid { groups: vec![vec![0, 1, 2, 3]] }];
        let p = params(2, 1e-15);
        let phy = TtiPhy::build(&ch, &[0; 4], &schedule, &[1.0], &p);
        let evals = phy.eval_coalition(&[0], None, EvalScope::All, true);
        for beam in &phy.cells[0][0].beams {
            let strong = *beam.last().unwrap();
            let e = evals.iter().find(|e| e.ue == strong).unwrap();
            let b = &e.breakdowns[0];
            assert!(
                b.interbeam < 1e-18 * b.useful,
                "strong user interbeam {} vs useful {}",
                b.interbeam,
                b.useful
            );
        }
    }

    #[test]
    fn edge_relative_order_consistent_across_clusters() {
        // Two edge UEs served by cell 0 both join cell 1's only beam; their
        // decode order there must follow the shared edge rank, with the
        // joiners ahead of cell 1's own non-edge members.
        let mut rng = Stream::new(35, "edge-order");
        let h: Vec<Complex64> = (0..4 * 2)
            .map(|_| c(rng.gen::<f64>() + 0.05, rng.gen::<f64>() - 0.5))
            .collect();
        let ch = ChannelRealization::from_vectors(4, 2, 1, h);
        let schedule = vec![
            RbGrid { groups: vec![vec![0, 1]] },
            RbGrid { groups: vec![vec![2, 3]] },
        ];
        let p = params(1, 1e-12);
        let phy = TtiPhy::build(&ch, &[0, 0, 1, 1], &schedule, &[1.0, 1.0], &p);
        let edge = vec![true, true, false, false];
        let mut rank = vec![usize::MAX; 4];
        rank[1] = 0; // ue1 decodes before ue0 in every cluster
        rank[0] = 1;
        let plan = CompPlan::build(&phy, edge, rank);
        let composed = phy.composed(&[0, 1], Some(&plan));
        for (l, _, clusters) in &composed {
            for cl in clusters {
                let pos = |u: usize| cl.order.iter().position(|&x| x == u);
                if let (Some(p1), Some(p0)) = (pos(1), pos(0)) {
                    assert!(p1 < p0, "edge rank order violated in cell {l}: {:?}", cl.order);
                }
                // Edge members always precede non-edge members.
                if let Some(last_edge) = cl.order.iter().rposition(|&u| u <= 1) {
                    assert!(
                        cl.order[..last_edge].iter().all(|&u| u <= 1),
                        "non-edge member decoded before an edge member: {:?}",
                        cl.order
                    );
                }
            }
        }
        // Cell 1's beam grew to K' = 4 with both joiners present.
        let grown = composed
            .iter()
            .find(|(l, _, _)| *l == 1)
            .map(|(_, _, c)| c[0].order.len())
            .unwrap();
        assert_eq!(grown, 4);
    }

    #[test]
    fn comp_beam_choice_follows_correlation() {
        // Edge UE 0's channel toward RRH 1 is colinear with the strong user
        // of beam 0 there; the plan must choose beam 0.
        let h = vec![
            // ue0: toward rrh0, toward rrh1
            c(0.1, 0.0), c(0.0, 0.0),     c(5.0, 0.0), c(0.0, 0.0),
            // ue1
            c(1.0, 0.0), c(0.5, 0.0),     c(0.1, 0.1), c(0.2, 0.0),
            // ue2: strong of rrh1 beam0 (by gain), colinear with ue0 there
            c(0.05, 0.0), c(0.01, 0.0),   c(10.0, 0.0), c(0.0, 0.0),
            // ue3: strong of rrh1 beam1, orthogonal to ue0 there
            c(0.02, 0.0), c(0.0, 0.01),   c(0.0, 0.0), c(8.0, 0.0),
        ];
        let ch = ChannelRealization::from_vectors(4, 2, 2, h);
        let schedule = vec![
            RbGrid { groups: vec![vec![0, 1]] },
            RbGrid { groups: vec![vec![2, 3]] },
        ];
        let p = params(2, 1e-9);
        let phy = TtiPhy::build(&ch, &[0, 0, 1, 1], &schedule, &[1.0, 1.0], &p);
        let beam_of_2 = phy.cells[1][0]
            .beams
            .iter()
            .position(|b| b.contains(&2))
            .unwrap();
        let mut edge = vec![false; 4];
        edge[0] = true;
        let mut rank = vec![usize::MAX; 4];
        rank[0] = 0;
        let plan = CompPlan::build(&phy, edge, rank);
        assert_eq!(plan.choice(0, 1, 0), Some(beam_of_2));
    }

    #[test]
    fn coalition_eval_independent_of_outside_structure() {
        // Three cells; evaluating coalition {0} must not depend on whether
        // cells 1 and 2 are merged (their transmissions are fixed).
        let mut rng = Stream::new(21, "fixture");
        let h: Vec<Complex64> = (0..6 * 3)
            .map(|_| c(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5))
            .collect();
        let ch = ChannelRealization::from_vectors(6, 3, 1, h);
        let schedule = vec![
            RbGrid { groups: vec![vec![0, 1]] },
            RbGrid { groups: vec![vec![2, 3]] },
            RbGrid { groups: vec![vec![4, 5]] },
        ];
        let p = params(1, 1e-9);
        let phy = TtiPhy::build(&ch, &[0, 0, 1, 1, 2, 2], &schedule, &[1.0; 3], &p);
        let mut edge = vec![false; 6];
        edge[2] = true;
        let mut rank = vec![usize::MAX; 6];
        rank[2] = 0;
        let plan = CompPlan::build(&phy, edge, rank);
        let solo = phy.eval_coalition(&[0], Some(&plan), EvalScope::All, false);
        // "Merge" 1 and 2 elsewhere: evaluation of {0} is a separate call and
        // must produce identical results (characteristic form).
        let _other = phy.eval_coalition(&[1, 2], Some(&plan), EvalScope::All, false);
        let solo_again = phy.eval_coalition(&[0], Some(&plan), EvalScope::All, false);
        for (a, b) in solo.iter().zip(&solo_again) {
            assert_eq!(a.sinrs, b.sinrs);
        }
    }
}
