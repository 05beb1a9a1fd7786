//! Scenario configuration: every tunable parameter of a run, with defaults
//! matching the reference parameter set (3.5 GHz carrier, 30 dBm RRHs on a
//! 125 m hexagonal wrap-around grid, 20 MHz / 106 RBs, 15 UEs per cell).
//!
//! Configs load from TOML; unknown keys are rejected, absent keys take the
//! defaults. The fully resolved config is echoed next to the outputs for
//! provenance.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linkadapt::{resource_elements, CqiRow, CqiTable, SinrAveraging};
use crate::schemes::Scheme;
use crate::Real;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScenarioConfig {
    pub scheme: Scheme,
    pub seed: u64,
    /// Seeds `seed..seed+runs` are simulated by the CLI.
    pub runs: u32,
    pub ttis: u32,
    pub rrh_count: usize,

    pub circumradius_m: Real,
    pub ues_per_cell: usize,
    pub ue_speed_kmh: Real,

    pub carrier_ghz: Real,
    pub tx_power_dbm: Real,
    pub tx_antennas: usize,
    pub rx_antennas: usize,
    pub tx_gain_dbi: Real,
    pub rx_gain_dbi: Real,

    pub bandwidth_mhz: Real,
    pub subcarrier_khz: Real,
    pub num_rbs: usize,
    pub subcarriers_per_rb: usize,
    pub ofdm_symbols: usize,
    pub dmrs_symbols: usize,
    pub tti_ms: Real,

    pub noise_figure_db: Real,
    pub thermal_noise_dbm_hz: Real,

    pub pathloss_a: Real,
    pub pathloss_b: Real,
    pub pathloss_c: Real,
    pub pathloss_min_distance_m: Real,
    pub shadow_std_db: Real,

    pub users_per_cluster: usize,
    pub p_ftpc: Real,

    pub d_f: Real,
    pub edge_fraction: Real,
    pub ci_threshold_db: Real,
    pub max_coalition_size: usize,

    pub static_cluster_size: usize,
    pub gc_max_size: usize,

    pub effective_sinr_averaging: SinrAveraging,
    /// Re-verify the stability of the game's final partition after every
    /// activation by exhaustive merge/split enumeration (slow; meant for
    /// small RRH counts).
    pub verify_stability: bool,
    pub cqi: Vec<CqiRow>,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            scheme: Scheme::Game,
            seed: 1,
            runs: 1,
            ttis: 100,
            rrh_count: 12,
            circumradius_m: 125.0,
            ues_per_cell: 15,
            ue_speed_kmh: 5.0,
            carrier_ghz: 3.5,
            tx_power_dbm: 30.0,
            tx_antennas: 4,
            rx_antennas: 1,
            tx_gain_dbi: 8.17,
            rx_gain_dbi: 0.0,
            bandwidth_mhz: 20.0,
            subcarrier_khz: 15.0,
            num_rbs: 106,
            subcarriers_per_rb: 12,
            ofdm_symbols: 14,
            dmrs_symbols: 2,
            tti_ms: 1.0,
            noise_figure_db: 9.0,
            thermal_noise_dbm_hz: -174.0,
            pathloss_a: 22.7,
            pathloss_b: 41.0,
            pathloss_c: 20.0,
            pathloss_min_distance_m: 10.0,
            shadow_std_db: 4.0,
            users_per_cluster: 2,
            p_ftpc: 0.4,
            d_f: 0.4,
            edge_fraction: 0.2,
            ci_threshold_db: 10.0,
            max_coalition_size: 4,
            static_cluster_size: 4,
            gc_max_size: 4,
            effective_sinr_averaging: SinrAveraging::Linear,
            verify_stability: false,
            cqi: CqiTable::default().rows,
        }
    }
}

impl ScenarioConfig {
    /// Small, fast configuration for experiments on one core: 7 RRHs,
    /// 6 UEs per cell, 12 RBs, 2 antennas, 200 TTIs.
    pub fn desk_scale() -> Self {
        ScenarioConfig {
            rrh_count: 7,
            ues_per_cell: 6,
            num_rbs: 12,
            tx_antennas: 2,
            ttis: 200,
            ..ScenarioConfig::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        fn positive(v: Real, name: &str) -> Result<()> {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::invalid_config(format!("{name} must be positive, got {v}")))
            }
        }
        if self.rrh_count == 0 {
            return Err(Error::invalid_config("rrh_count must be at least 1"));
        }
        if self.ues_per_cell == 0 {
            return Err(Error::invalid_config("ues_per_cell must be at least 1"));
        }
        if self.ttis == 0 {
            // Allowed: produces an empty report stream.
        }
        if self.runs == 0 {
            return Err(Error::invalid_config("runs must be at least 1"));
        }
        positive(self.circumradius_m, "circumradius_m")?;
        if self.ue_speed_kmh < 0.0 {
            return Err(Error::invalid_config("ue_speed_kmh must be non-negative"));
        }
        positive(self.carrier_ghz, "carrier_ghz")?;
        positive(self.bandwidth_mhz, "bandwidth_mhz")?;
        positive(self.subcarrier_khz, "subcarrier_khz")?;
        positive(self.tti_ms, "tti_ms")?;
        if self.tx_antennas == 0 {
            return Err(Error::invalid_config("tx_antennas must be at least 1"));
        }
        if self.rx_antennas != 1 {
            return Err(Error::invalid_config("only single-antenna UEs are modeled"));
        }
        if self.users_per_cluster != 2 {
            return Err(Error::invalid_config(
                "users_per_cluster must be 2 (pre-CoMP NOMA pairs)",
            ));
        }
        if self.num_rbs == 0 {
            return Err(Error::invalid_config("num_rbs must be at least 1"));
        }
        if self.subcarriers_per_rb == 0 || self.ofdm_symbols == 0 {
            return Err(Error::invalid_config("RB dimensions must be positive"));
        }
        if self.dmrs_symbols >= self.ofdm_symbols {
            return Err(Error::invalid_config("dmrs_symbols must leave data symbols"));
        }
        if !(0.0..=1.0).contains(&self.p_ftpc) {
            return Err(Error::invalid_config("p_ftpc must lie in [0, 1]"));
        }
        if !(0.0..1.0).contains(&self.d_f) {
            return Err(Error::invalid_config("d_f must lie in [0, 1)"));
        }
        if !(self.edge_fraction > 0.0 && self.edge_fraction < 1.0) {
            return Err(Error::invalid_config("edge_fraction must lie in (0, 1)"));
        }
        if self.shadow_std_db < 0.0 {
            return Err(Error::invalid_config("shadow_std_db must be non-negative"));
        }
        if self.max_coalition_size == 0 {
            return Err(Error::invalid_config("max_coalition_size must be at least 1"));
        }
        if self.static_cluster_size == 0 {
            return Err(Error::invalid_config("static_cluster_size must be at least 1"));
        }
        if self.gc_max_size == 0 {
            return Err(Error::invalid_config("gc_max_size must be at least 1"));
        }
        self.cqi_table().validate()?;
        Ok(())
    }

    pub fn cqi_table(&self) -> CqiTable {
        CqiTable::new(self.cqi.clone())
    }

    pub fn tx_power_w(&self) -> Real {
        10f64.powf((self.tx_power_dbm - 30.0) / 10.0)
    }

    pub fn tti_s(&self) -> Real {
        self.tti_ms * 1e-3
    }

    /// Noise power per subcarrier in watts.
    pub fn noise_w(&self) -> Real {
        crate::channel::noise_power(
            self.subcarrier_khz * 1e3,
            self.thermal_noise_dbm_hz,
            self.noise_figure_db,
        )
    }

    /// Data resource elements per RB.
    pub fn n_re(&self) -> u32 {
        resource_elements(self.subcarriers_per_rb, self.ofdm_symbols, self.dmrs_symbols)
    }

    /// Scheduled UEs per RB (`K * N`).
    pub fn group_size(&self) -> usize {
        self.users_per_cluster * self.tx_antennas
    }

    pub fn pathloss_params(&self) -> crate::channel::PathLossParams<Real> {
        crate::channel::PathLossParams {
            a: self.pathloss_a,
            b: self.pathloss_b,
            c: self.pathloss_c,
            min_distance_m: self.pathloss_min_distance_m,
        }
    }

    pub fn game_config(&self) -> crate::game::GameConfig {
        crate::game::GameConfig {
            d_f: self.d_f,
            ci_threshold_db: self.ci_threshold_db,
            max_coalition_size: self.max_coalition_size,
        }
    }

    pub fn from_toml_str(s: &str) -> Result<Self> {
        let cfg: ScenarioConfig =
            toml::from_str(s).map_err(|e| Error::ConfigParse(e.to_string()))?;
        Ok(cfg)
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    /// FNV-1a hash of the canonical TOML encoding, for provenance.
    pub fn hash(&self) -> String {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for b in self.to_toml_string().bytes() {
            h ^= b as u64;
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        }
        format!("{h:016x}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        ScenarioConfig::default().validate().unwrap();
        ScenarioConfig::desk_scale().validate().unwrap();
    }

    #[test]
    fn derived_quantities() {
        let cfg = ScenarioConfig::default();
        assert!((cfg.tx_power_w() - 1.0).abs() < 1e-12);
        assert_eq!(cfg.n_re(), 144);
        assert_eq!(cfg.group_size(), 8);
        assert!((cfg.tti_s() - 1e-3).abs() < 1e-18);
    }

    #[test]
    fn toml_round_trip() {
        let cfg = ScenarioConfig::desk_scale();
        let text = cfg.to_toml_string();
        let back = ScenarioConfig::from_toml_str(&text).unwrap();
        assert_eq!(cfg, back);
    }

    #[test]
    fn unknown_keys_rejected() {
        let err = ScenarioConfig::from_toml_str("not_a_real_key = 3\n");
        assert!(err.is_err());
    }

    #[test]
    fn partial_config_takes_defaults() {
        let cfg = ScenarioConfig::from_toml_str("seed = 42\nscheme = \"no_comp\"\n").unwrap();
        assert_eq!(cfg.seed, 42);
        assert_eq!(cfg.scheme, Scheme::NoComp);
        assert_eq!(cfg.rrh_count, 12);
    }

    #[test]
    fn invalid_values_rejected() {
        let mut cfg = ScenarioConfig::default();
        cfg.rrh_count = 0;
        assert!(cfg.validate().is_err());

        let mut cfg = ScenarioConfig::default();
        cfg.d_f = 1.0;
        assert!(cfg.validate().is_err());

        let mut cfg = ScenarioConfig::default();
        cfg.edge_fraction = 0.0;
        assert!(cfg.validate().is_err());

        let mut cfg = ScenarioConfig::default();
        cfg.users_per_cluster = 3;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn hash_is_stable_and_sensitive() {
        let a = ScenarioConfig::default();
        let mut b = ScenarioConfig::default();
        assert_eq!(a.hash(), b.hash());
        b.seed = 2;
        assert_ne!(a.hash(), b.hash());
    }
}
