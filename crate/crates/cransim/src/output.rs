//! CSV and manifest emission.
//!
//! All tables are UTF-8 comma-separated with a single header row. Schemas
//! (documented in the README) are frozen; plotting is external. `meta.json`
//! carries the config hash, seeds, code version and wall time — wall time
//! is the only field that varies between identical runs.

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::config::ScenarioConfig;
use crate::error::Result;
use crate::sim::{RunOutput, SweepTable};
use crate::Real;

/// Which per-run tables to emit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Emit {
    Summary,
    PerTti,
    Both,
}

impl std::str::FromStr for Emit {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "summary" => Ok(Emit::Summary),
            "per-tti" | "per_tti" => Ok(Emit::PerTti),
            "both" => Ok(Emit::Both),
            other => Err(crate::Error::invalid_config(format!("unknown emit mode '{other}'"))),
        }
    }
}

fn fmt(x: Real) -> String {
    if x == x.trunc() && x.abs() < 1e15 {
        format!("{:.1}", x)
    } else {
        format!("{x}")
    }
}

pub const SUMMARY_HEADER: &str = "run,seed,scheme,ttis,ues,avg_edge_bps,avg_nonedge_bps,avg_all_bps,\
pct_inst_decreased,pct_red_gt10,pct_red_gt20,pct_red_gt30,pct_red_gt40,pct_red_gt50,\
users_increased,users_equal,users_decreased,activations,avg_iterations,\
avg_coalition_size,avg_max_coalition_size,zf_regularizations,\
digest_topology,digest_shadowing,digest_fading,digest_scheduling,digest_scheme";

fn summary_row(run: usize, out: &RunOutput) -> String {
    let s = &out.summary;
    let pct = |n: usize| 100.0 * n as Real / s.n_ues.max(1) as Real;
    let digest = |name: &str| {
        s.stream_digests
            .iter()
            .find(|d| d.name == name)
            .map(|d| format!("{:016x}", d.digest))
            .unwrap_or_default()
    };
    format!(
        "{run},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
        s.seed,
        s.scheme,
        s.ttis,
        s.n_ues,
        fmt(s.avg_edge_bps),
        fmt(s.avg_nonedge_bps),
        fmt(s.avg_all_bps),
        fmt(s.pct_inst_decreased),
        fmt(pct(s.reduction_brackets[0])),
        fmt(pct(s.reduction_brackets[1])),
        fmt(pct(s.reduction_brackets[2])),
        fmt(pct(s.reduction_brackets[3])),
        fmt(pct(s.reduction_brackets[4])),
        s.users_increased,
        s.users_equal,
        s.users_decreased,
        s.activations,
        fmt(s.avg_iterations),
        fmt(s.avg_coalition_size),
        fmt(s.avg_max_coalition_size),
        s.zf_regularizations,
        digest("topology"),
        digest("shadowing"),
        digest("fading"),
        digest("scheduling"),
        digest("scheme"),
    )
}

fn partition_string(partition: &[Vec<usize>]) -> String {
    partition
        .iter()
        .map(|c| c.iter().map(|x| x.to_string()).collect::<Vec<_>>().join("|"))
        .collect::<Vec<_>>()
        .join(";")
}

/// Write every table for a batch of runs into `dir`.
pub fn write_run_outputs(
    dir: &Path,
    cfg: &ScenarioConfig,
    outputs: &[RunOutput],
    emit: Emit,
    wall_time_s: f64,
) -> Result<()> {
    fs::create_dir_all(dir)?;

    if emit != Emit::PerTti {
        let mut summary = String::from(SUMMARY_HEADER);
        summary.push('\n');
        for (run, out) in outputs.iter().enumerate() {
            summary.push_str(&summary_row(run, out));
            summary.push('\n');
        }
        fs::write(dir.join("summary.csv"), summary)?;

        let mut per_ue = String::from("run,seed,ue,avg_bps,avg_nocomp_bps,edge_tti_fraction\n");
        for (run, out) in outputs.iter().enumerate() {
            let s = &out.summary;
            for u in 0..s.n_ues {
                per_ue.push_str(&format!(
                    "{run},{},{u},{},{},{}\n",
                    s.seed,
                    fmt(s.per_ue_avg_bps[u]),
                    fmt(s.per_ue_avg_nocomp_bps[u]),
                    fmt(s.per_ue_edge_fraction[u]),
                ));
            }
        }
        fs::write(dir.join("per_ue.csv"), per_ue)?;

        for (name, pick) in [
            ("cdf_inst_edge.csv", 0usize),
            ("cdf_inst_nonedge.csv", 1),
            ("cdf_avg_edge.csv", 2),
            ("cdf_avg_nonedge.csv", 3),
        ] {
            let mut samples: Vec<Real> = Vec::new();
            for out in outputs {
                let v = match pick {
                    0 => &out.summary.cdf_inst_edge,
                    1 => &out.summary.cdf_inst_nonedge,
                    2 => &out.summary.cdf_avg_edge,
                    _ => &out.summary.cdf_avg_nonedge,
                };
                samples.extend_from_slice(v);
            }
            samples.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let mut text = String::from("throughput_bps\n");
            for s in samples {
                text.push_str(&fmt(s));
                text.push('\n');
            }
            fs::write(dir.join(name), text)?;
        }
    }

    if emit != Emit::Summary {
        let mut per_tti = String::from(
            "run,seed,tti,ue,serving_rrh,is_edge,eff_sinr,bps,nocomp_bps,allocs,\
activated,handovers,partition,avg_coalition_size,max_coalition_size,iterations\n",
        );
        for (run, out) in outputs.iter().enumerate() {
            let seed = out.summary.seed;
            for r in &out.ttis {
                let p = partition_string(&r.partition);
                for u in &r.per_ue {
                    per_tti.push_str(&format!(
                        "{run},{seed},{},{},{},{},{},{},{},{},{},{},{p},{},{},{}\n",
                        r.tti,
                        u.ue,
                        u.serving_rrh,
                        u.is_edge as u8,
                        fmt(u.eff_sinr),
                        fmt(u.bps),
                        fmt(u.nocomp_bps),
                        u.allocs,
                        r.activated as u8,
                        r.handovers,
                        fmt(r.avg_coalition_size),
                        r.max_coalition_size,
                        r.iterations,
                    ));
                }
            }
        }
        fs::write(dir.join("per_tti.csv"), per_tti)?;
    }

    fs::write(dir.join("config_resolved.toml"), cfg.to_toml_string())?;

    let seeds: Vec<u64> = outputs.iter().map(|o| o.summary.seed).collect();
    let meta = serde_json::json!({
        "config_hash": cfg.hash(),
        "scheme": cfg.scheme.name(),
        "seeds": seeds,
        "code_version": env!("CARGO_PKG_VERSION"),
        "wall_time_s": wall_time_s,
    });
    let mut f = fs::File::create(dir.join("meta.json"))?;
    writeln!(f, "{}", serde_json::to_string_pretty(&meta).expect("meta serializes"))?;
    Ok(())
}

/// Write a sweep table as one CSV.
pub fn write_sweep(dir: &Path, cfg: &ScenarioConfig, table: &SweepTable) -> Result<()> {
    fs::create_dir_all(dir)?;
    let mut text = format!(
        "{},runs,avg_edge_bps,avg_nonedge_bps,avg_all_bps,avg_coalition_size,\
avg_max_coalition_size,avg_iterations,pct_inst_decreased,activations_mean\n",
        table.axis
    );
    for r in &table.rows {
        text.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{}\n",
            r.value,
            r.runs,
            fmt(r.avg_edge_bps),
            fmt(r.avg_nonedge_bps),
            fmt(r.avg_all_bps),
            fmt(r.avg_coalition_size),
            fmt(r.avg_max_coalition_size),
            fmt(r.avg_iterations),
            fmt(r.pct_inst_decreased),
            fmt(r.activations_mean),
        ));
    }
    fs::write(dir.join("sweep.csv"), text)?;
    fs::write(dir.join("config_resolved.toml"), cfg.to_toml_string())?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schemes::Scheme;
    use crate::sim::run_simulation;

    #[test]
    fn emit_parse() {
        assert_eq!("summary".parse::<Emit>().unwrap(), Emit::Summary);
        assert_eq!("per-tti".parse::<Emit>().unwrap(), Emit::PerTti);
        assert_eq!("both".parse::<Emit>().unwrap(), Emit::Both);
        assert!("nope".parse::<Emit>().is_err());
    }

    #[test]
    fn writes_expected_files() {
        let cfg = ScenarioConfig {
            scheme: Scheme::Game,
            seed: 3,
            ttis: 2,
            rrh_count: 3,
            ues_per_cell: 4,
            num_rbs: 4,
            tx_antennas: 2,
            ..ScenarioConfig::default()
        };
        let out = run_simulation(&cfg).unwrap();
        let dir = tempfile::tempdir().unwrap();
        write_run_outputs(dir.path(), &cfg, &[out], Emit::Both, 0.1).unwrap();
        for name in [
            "summary.csv",
            "per_ue.csv",
            "per_tti.csv",
            "cdf_inst_edge.csv",
            "cdf_inst_nonedge.csv",
            "cdf_avg_edge.csv",
            "cdf_avg_nonedge.csv",
            "meta.json",
            "config_resolved.toml",
        ] {
            assert!(dir.path().join(name).exists(), "missing {name}");
        }
        let summary = std::fs::read_to_string(dir.path().join("summary.csv")).unwrap();
        assert!(summary.starts_with("run,seed,scheme"));
        assert_eq!(summary.lines().count(), 2);
    }
}
