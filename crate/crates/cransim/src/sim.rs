//! Per-TTI simulation driver and metrics aggregation.
//!
//! The order of work inside one TTI is fixed: mobility, macro losses,
//! attachment/handover, fading, scheduling, shadow no-CoMP evaluation,
//! edge classification, reactivation check, clustering scheme, final
//! evaluation under the applied partition, link adaptation, report. The
//! shadow no-CoMP evaluation reuses the TTI's channels and schedule, so it
//! equals a paired run of the `no_comp` scheme on the same seed.

use crate::channel::{ChannelRealization, MacroLosses, ShadowMap};
use crate::config::ScenarioConfig;
use crate::error::{Error, Result};
use crate::game::{
    build_ci_matrix, check_dhp_stable, classify_edge_ues, edge_ranks, reactivation_triggers,
    run_coalition_formation, AcceptedOp, GameCtx, GameState, Partition,
};
use crate::phy::{CompPlan, EvalScope, PhyParams, TtiPhy};
use crate::rng::Stream;
use crate::scheduler::{round_robin_schedule, RbGrid};
use crate::schemes::{greedy_clusters, static_clusters, Scheme};
use crate::topology::{advance_mobility, build_layout, drop_ues, update_attachment};
use crate::Real;

/// Per-UE slice of a TTI report.
#[derive(Debug, Clone, PartialEq)]
pub struct UeTtiRecord {
    pub ue: usize,
    pub serving_rrh: usize,
    pub is_edge: bool,
    /// Effective SINR under the applied partition (linear).
    pub eff_sinr: Real,
    pub bps: Real,
    /// Shadow throughput of the same TTI without JT-CoMP.
    pub nocomp_bps: Real,
    /// Scheduled (RB, beam) slots this TTI.
    pub allocs: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TtiReport {
    pub tti: u32,
    pub activated: bool,
    pub handovers: usize,
    pub partition: Vec<Vec<usize>>,
    pub avg_coalition_size: Real,
    pub max_coalition_size: usize,
    pub merge_tests: u64,
    pub merge_accepts: u64,
    pub split_tests: u64,
    pub split_accepts: u64,
    pub below_threshold_pairs: u64,
    /// Subset evaluations of the greedy baseline.
    pub gc_evaluations: u64,
    /// Scheme-appropriate iteration count for this TTI.
    pub iterations: u64,
    pub zf_regularizations: usize,
    pub accepted_ops: Vec<AcceptedOp>,
    /// Post-activation stability re-check result (only when
    /// `verify_stability` is set and the game activated this TTI).
    pub dhp_stable: Option<bool>,
    pub per_ue: Vec<UeTtiRecord>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StreamDigest {
    pub name: String,
    pub digest: u64,
    pub draws: u64,
}

/// Aggregates of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub scheme: Scheme,
    pub seed: u64,
    pub ttis: u32,
    pub n_ues: usize,
    pub per_ue_avg_bps: Vec<Real>,
    pub per_ue_avg_nocomp_bps: Vec<Real>,
    pub per_ue_edge_fraction: Vec<Real>,
    /// Mean over (UE, TTI) samples, split by the per-TTI edge status.
    pub avg_edge_bps: Real,
    pub avg_nonedge_bps: Real,
    pub avg_all_bps: Real,
    pub cdf_inst_edge: Vec<Real>,
    pub cdf_inst_nonedge: Vec<Real>,
    pub cdf_avg_edge: Vec<Real>,
    pub cdf_avg_nonedge: Vec<Real>,
    /// Percent of (UE, TTI) samples below the paired no-CoMP value.
    pub pct_inst_decreased: Real,
    /// UEs whose average throughput fell more than 10/20/30/40/50 %.
    pub reduction_brackets: [usize; 5],
    pub users_increased: usize,
    pub users_equal: usize,
    pub users_decreased: usize,
    pub activations: u32,
    /// Mean iterations per activation (game tests, greedy evaluations).
    pub avg_iterations: Real,
    pub avg_coalition_size: Real,
    pub avg_max_coalition_size: Real,
    pub zf_regularizations: u64,
    pub stream_digests: Vec<StreamDigest>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub summary: RunSummary,
    pub ttis: Vec<TtiReport>,
}

/// Simulate one run for `cfg.seed`. Identical configs produce identical
/// outputs bit for bit.
pub fn run_simulation(cfg: &ScenarioConfig) -> Result<RunOutput> {
    cfg.validate()?;
    let n_rrhs = cfg.rrh_count;

    let mut topology_stream = Stream::new(cfg.seed, "topology");
    let mut shadowing_stream = Stream::new(cfg.seed, "shadowing");
    let mut fading_stream = Stream::new(cfg.seed, "fading");
    let mut scheduling_stream = Stream::new(cfg.seed, "scheduling");
    let mut scheme_stream = Stream::new(cfg.seed, "scheme");

    let (layout, rrhs) = build_layout(
        n_rrhs,
        cfg.circumradius_m,
        cfg.tx_power_w(),
        cfg.tx_antennas,
        cfg.tx_gain_dbi,
    )?;
    let mut ues = drop_ues(
        &rrhs,
        &layout,
        cfg.ues_per_cell,
        cfg.ue_speed_kmh,
        cfg.rx_gain_dbi,
        &mut topology_stream,
    )?;
    let n_ues = ues.len();
    let shadow = ShadowMap::draw(n_ues, n_rrhs, cfg.shadow_std_db, &mut shadowing_stream);
    let pathloss = cfg.pathloss_params();
    let params = PhyParams {
        n_beams: cfg.tx_antennas,
        subcarriers_per_rb: cfg.subcarriers_per_rb,
        p_ftpc: cfg.p_ftpc,
        noise_w: cfg.noise_w(),
        n_re: cfg.n_re(),
        tti_s: cfg.tti_s(),
        sinr_averaging: cfg.effective_sinr_averaging,
        cqi: cfg.cqi_table(),
    };
    let game_cfg = cfg.game_config();
    let tx_power: Vec<Real> = rrhs.iter().map(|r| r.tx_power_w).collect();
    let positions: Vec<[Real; 2]> = rrhs.iter().map(|r| r.position).collect();

    let mut current_partition = match cfg.scheme {
        Scheme::Sc => static_clusters(&positions, cfg.static_cluster_size),
        _ => Partition::singletons(n_rrhs),
    };
    let mut game_state = GameState::new(n_rrhs, n_ues);
    let mut prev_edge = vec![false; n_ues];
    let mut reports: Vec<TtiReport> = Vec::with_capacity(cfg.ttis as usize);

    for tti in 0..cfg.ttis {
        advance_mobility(&mut ues, &layout, cfg.tti_s());
        let v = MacroLosses::compute(
            n_ues,
            n_rrhs,
            |u, l| layout.wrap_distance(ues[u].position, rrhs[l].position),
            &shadow,
            cfg.carrier_ghz,
            &pathloss,
            cfg.tx_gain_dbi,
            cfg.rx_gain_dbi,
        )?;
        let handovers = update_attachment(&mut ues, |u, l| v.at(u, l), n_rrhs);
        let ch = ChannelRealization::realize(&v, cfg.tx_antennas, &mut fading_stream);
        let serving: Vec<usize> = ues.iter().map(|u| u.serving_rrh).collect();

        let mut cell_lists: Vec<Vec<usize>> = vec![Vec::new(); n_rrhs];
        for ue in &ues {
            cell_lists[ue.serving_rrh].push(ue.id);
        }
        let schedule: Vec<RbGrid> = cell_lists
            .iter()
            .map(|list| round_robin_schedule(list, cfg.num_rbs, cfg.group_size(), &mut scheduling_stream))
            .collect();

        let phy = TtiPhy::build(&ch, &serving, &schedule, &tx_power, &params);

        // Shadow no-CoMP evaluation: classification reference and the d_f
        // thresholds both come from here.
        let mut nocomp_bps = vec![0.0; n_ues];
        let mut eff_pre = vec![0.0; n_ues];
        for l in 0..n_rrhs {
            for e in phy.eval_coalition(&[l], None, EvalScope::All, false) {
                nocomp_bps[e.ue] = e.bps;
                eff_pre[e.ue] = e.eff_sinr;
            }
        }
        let edge = classify_edge_ues(&eff_pre, cfg.edge_fraction);
        for ue in ues.iter_mut() {
            ue.is_edge = edge[ue.id];
        }
        let ranks = edge_ranks(&eff_pre, &edge);
        let plan = CompPlan::build(&phy, edge.clone(), ranks);

        let triggered = tti == 0 || reactivation_triggers(handovers.len(), &prev_edge, &edge);
        let mut activated = false;
        let mut gc_evaluations = 0u64;
        let mut merge_tests = 0u64;
        let mut merge_accepts = 0u64;
        let mut split_tests = 0u64;
        let mut split_accepts = 0u64;
        let mut below_threshold_pairs = 0u64;
        let mut accepted_ops = Vec::new();
        let mut dhp_stable = None;
        match cfg.scheme {
            Scheme::NoComp | Scheme::Sc => {}
            Scheme::Gc => {
                if triggered {
                    activated = true;
                    let (p, evals) = greedy_clusters(&phy, &plan, cfg.gc_max_size, &mut scheme_stream);
                    current_partition = p;
                    gc_evaluations = evals;
                }
            }
            Scheme::Game => {
                if triggered {
                    activated = true;
                    let ci = build_ci_matrix(&edge, &serving, &v);
                    let ctx = GameCtx {
                        phy: &phy,
                        plan: &plan,
                        nocomp_bps: &nocomp_bps,
                        cfg: &game_cfg,
                    };
                    let stats = run_coalition_formation(&ctx, &ci, &mut game_state);
                    current_partition = game_state.partition.clone();
                    merge_tests = stats.merge_tests;
                    merge_accepts = stats.merge_accepts;
                    split_tests = stats.split_tests;
                    split_accepts = stats.split_accepts;
                    below_threshold_pairs = stats.below_threshold_pairs;
                    accepted_ops = stats.accepted_ops;
                    if cfg.verify_stability {
                        let (stable, _) = check_dhp_stable(&ctx, &ci, &game_state);
                        dhp_stable = Some(stable);
                    }
                }
            }
        }

        // Final evaluation under the applied partition.
        let mut final_bps = vec![0.0; n_ues];
        let mut final_eff = vec![0.0; n_ues];
        let mut final_allocs = vec![0u32; n_ues];
        for c in current_partition.coalitions() {
            for e in phy.eval_coalition(c, Some(&plan), EvalScope::All, false) {
                final_bps[e.ue] = e.bps;
                final_eff[e.ue] = e.eff_sinr;
                final_allocs[e.ue] = e.sinrs.len() as u32;
            }
        }

        let per_ue: Vec<UeTtiRecord> = (0..n_ues)
            .map(|u| UeTtiRecord {
                ue: u,
                serving_rrh: serving[u],
                is_edge: edge[u],
                eff_sinr: final_eff[u],
                bps: final_bps[u],
                nocomp_bps: nocomp_bps[u],
                allocs: final_allocs[u],
            })
            .collect();
        let iterations = match cfg.scheme {
            Scheme::Game => merge_tests + split_tests,
            Scheme::Gc => gc_evaluations,
            _ => 0,
        };
        reports.push(TtiReport {
            tti,
            activated,
            handovers: handovers.len(),
            partition: current_partition.coalitions().to_vec(),
            avg_coalition_size: current_partition.avg_size(),
            max_coalition_size: current_partition.max_size(),
            merge_tests,
            merge_accepts,
            split_tests,
            split_accepts,
            below_threshold_pairs,
            gc_evaluations,
            iterations,
            zf_regularizations: phy.zf_regularizations(),
            accepted_ops,
            dhp_stable,
            per_ue,
        });
        prev_edge = edge;
    }

    let stream_digests = vec![
        digest_of(&topology_stream),
        digest_of(&shadowing_stream),
        digest_of(&fading_stream),
        digest_of(&scheduling_stream),
        digest_of(&scheme_stream),
    ];
    let summary = summarize(cfg, n_ues, &reports, stream_digests);
    Ok(RunOutput { summary, ttis: reports })
}

fn digest_of(s: &Stream) -> StreamDigest {
    StreamDigest { name: s.name().to_string(), digest: s.digest(), draws: s.draws() }
}

fn summarize(
    cfg: &ScenarioConfig,
    n_ues: usize,
    reports: &[TtiReport],
    stream_digests: Vec<StreamDigest>,
) -> RunSummary {
    let n_ttis = reports.len();
    let mut per_ue_sum = vec![0.0; n_ues];
    let mut per_ue_nocomp_sum = vec![0.0; n_ues];
    let mut per_ue_edge_ttis = vec![0usize; n_ues];
    let mut cdf_inst_edge = Vec::new();
    let mut cdf_inst_nonedge = Vec::new();
    let mut decreased_samples = 0usize;
    let mut activations = 0u32;
    let mut iter_sum = 0u64;
    let mut coal_sum = 0.0;
    let mut coal_max_sum = 0.0;
    let mut zf_total = 0u64;

    for r in reports {
        if r.activated {
            activations += 1;
            iter_sum += r.iterations;
        }
        coal_sum += r.avg_coalition_size;
        coal_max_sum += r.max_coalition_size as Real;
        zf_total += r.zf_regularizations as u64;
        for u in &r.per_ue {
            per_ue_sum[u.ue] += u.bps;
            per_ue_nocomp_sum[u.ue] += u.nocomp_bps;
            if u.is_edge {
                per_ue_edge_ttis[u.ue] += 1;
                cdf_inst_edge.push(u.bps);
            } else {
                cdf_inst_nonedge.push(u.bps);
            }
            if u.bps < u.nocomp_bps {
                decreased_samples += 1;
            }
        }
    }

    let t = n_ttis.max(1) as Real;
    let per_ue_avg_bps: Vec<Real> = per_ue_sum.iter().map(|s| s / t).collect();
    let per_ue_avg_nocomp_bps: Vec<Real> = per_ue_nocomp_sum.iter().map(|s| s / t).collect();
    let per_ue_edge_fraction: Vec<Real> =
        per_ue_edge_ttis.iter().map(|&c| c as Real / t).collect();

    let mean = |v: &[Real]| if v.is_empty() { 0.0 } else { v.iter().sum::<Real>() / v.len() as Real };
    let avg_edge_bps = mean(&cdf_inst_edge);
    let avg_nonedge_bps = mean(&cdf_inst_nonedge);
    let total_samples = cdf_inst_edge.len() + cdf_inst_nonedge.len();
    let avg_all_bps = if total_samples == 0 {
        0.0
    } else {
        (cdf_inst_edge.iter().sum::<Real>() + cdf_inst_nonedge.iter().sum::<Real>())
            / total_samples as Real
    };

    let mut reduction_brackets = [0usize; 5];
    let mut users_increased = 0;
    let mut users_equal = 0;
    let mut users_decreased = 0;
    let mut cdf_avg_edge = Vec::new();
    let mut cdf_avg_nonedge = Vec::new();
    for u in 0..n_ues {
        let avg = per_ue_avg_bps[u];
        let base = per_ue_avg_nocomp_bps[u];
        if avg > base {
            users_increased += 1;
        } else if avg < base {
            users_decreased += 1;
        } else {
            users_equal += 1;
        }
        if base > 0.0 {
            let reduction = 1.0 - avg / base;
            for (i, thr) in [0.1, 0.2, 0.3, 0.4, 0.5].iter().enumerate() {
                if reduction > *thr {
                    reduction_brackets[i] += 1;
                }
            }
        }
        if per_ue_edge_fraction[u] > 0.5 {
            cdf_avg_edge.push(avg);
        } else {
            cdf_avg_nonedge.push(avg);
        }
    }

    let sort = |v: &mut Vec<Real>| v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    sort(&mut cdf_inst_edge);
    sort(&mut cdf_inst_nonedge);
    sort(&mut cdf_avg_edge);
    sort(&mut cdf_avg_nonedge);

    RunSummary {
        scheme: cfg.scheme,
        seed: cfg.seed,
        ttis: n_ttis as u32,
        n_ues,
        per_ue_avg_bps,
        per_ue_avg_nocomp_bps,
        per_ue_edge_fraction,
        avg_edge_bps,
        avg_nonedge_bps,
        avg_all_bps,
        pct_inst_decreased: if total_samples == 0 {
            0.0
        } else {
            100.0 * decreased_samples as Real / total_samples as Real
        },
        cdf_inst_edge,
        cdf_inst_nonedge,
        cdf_avg_edge,
        cdf_avg_nonedge,
        reduction_brackets,
        users_increased,
        users_equal,
        users_decreased,
        activations,
        avg_iterations: if activations == 0 { 0.0 } else { iter_sum as Real / activations as Real },
        avg_coalition_size: coal_sum / t,
        avg_max_coalition_size: coal_max_sum / t,
        zf_regularizations: zf_total,
        stream_digests,
    }
}

/// Run every scheme on identical random streams (same seed, same shared
/// sub-streams) for paired comparisons.
pub fn paired_comparison(cfg: &ScenarioConfig, schemes: &[Scheme]) -> Result<Vec<RunOutput>> {
    if schemes.is_empty() {
        return Err(Error::invalid_config("paired comparison needs at least one scheme"));
    }
    schemes
        .iter()
        .map(|&scheme| {
            let mut c = cfg.clone();
            c.scheme = scheme;
            run_simulation(&c)
        })
        .collect()
}

/// Set a numeric config field by name (sweep axis).
pub fn set_axis(cfg: &mut ScenarioConfig, axis: &str, value: f64) -> Result<()> {
    let as_usize = |v: f64| -> Result<usize> {
        if v >= 0.0 && v.fract() == 0.0 {
            Ok(v as usize)
        } else {
            Err(Error::invalid_config(format!("axis value {v} is not a non-negative integer")))
        }
    };
    match axis {
        "d_f" => cfg.d_f = value,
        "edge_fraction" => cfg.edge_fraction = value,
        "ci_threshold_db" => cfg.ci_threshold_db = value,
        "p_ftpc" => cfg.p_ftpc = value,
        "ue_speed_kmh" => cfg.ue_speed_kmh = value,
        "shadow_std_db" => cfg.shadow_std_db = value,
        "tx_power_dbm" => cfg.tx_power_dbm = value,
        "carrier_ghz" => cfg.carrier_ghz = value,
        "rrh_count" => cfg.rrh_count = as_usize(value)?,
        "ues_per_cell" => cfg.ues_per_cell = as_usize(value)?,
        "num_rbs" => cfg.num_rbs = as_usize(value)?,
        "tx_antennas" => cfg.tx_antennas = as_usize(value)?,
        "ttis" => cfg.ttis = as_usize(value)? as u32,
        "max_coalition_size" => cfg.max_coalition_size = as_usize(value)?,
        "static_cluster_size" => cfg.static_cluster_size = as_usize(value)?,
        "gc_max_size" => cfg.gc_max_size = as_usize(value)?,
        other => {
            return Err(Error::invalid_config(format!("unknown sweep axis '{other}'")));
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub value: f64,
    pub runs: u32,
    pub avg_edge_bps: Real,
    pub avg_nonedge_bps: Real,
    pub avg_all_bps: Real,
    pub avg_coalition_size: Real,
    pub avg_max_coalition_size: Real,
    pub avg_iterations: Real,
    pub pct_inst_decreased: Real,
    pub activations_mean: Real,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepTable {
    pub axis: String,
    pub rows: Vec<SweepRow>,
}

/// One aggregate row per axis value, averaged over `cfg.runs` seeds
/// (`cfg.seed..cfg.seed+runs`).
pub fn sweep(cfg: &ScenarioConfig, axis: &str, values: &[f64]) -> Result<SweepTable> {
    let mut rows = Vec::with_capacity(values.len());
    for &value in values {
        let mut point = cfg.clone();
        set_axis(&mut point, axis, value)?;
        point.validate()?;
        let mut acc = SweepRow {
            value,
            runs: cfg.runs,
            avg_edge_bps: 0.0,
            avg_nonedge_bps: 0.0,
            avg_all_bps: 0.0,
            avg_coalition_size: 0.0,
            avg_max_coalition_size: 0.0,
            avg_iterations: 0.0,
            pct_inst_decreased: 0.0,
            activations_mean: 0.0,
        };
        for r in 0..cfg.runs {
            let mut run_cfg = point.clone();
            run_cfg.seed = cfg.seed + r as u64;
            let out = run_simulation(&run_cfg)?;
            let s = &out.summary;
            acc.avg_edge_bps += s.avg_edge_bps;
            acc.avg_nonedge_bps += s.avg_nonedge_bps;
            acc.avg_all_bps += s.avg_all_bps;
            acc.avg_coalition_size += s.avg_coalition_size;
            acc.avg_max_coalition_size += s.avg_max_coalition_size;
            acc.avg_iterations += s.avg_iterations;
            acc.pct_inst_decreased += s.pct_inst_decreased;
            acc.activations_mean += s.activations as Real;
        }
        let n = cfg.runs as Real;
        acc.avg_edge_bps /= n;
        acc.avg_nonedge_bps /= n;
        acc.avg_all_bps /= n;
        acc.avg_coalition_size /= n;
        acc.avg_max_coalition_size /= n;
        acc.avg_iterations /= n;
        acc.pct_inst_decreased /= n;
        acc.activations_mean /= n;
        rows.push(acc);
    }
    Ok(SweepTable { axis: axis.to_string(), rows })
}
