//! Link adaptation: SINR→CQI mapping and transport-block sizing.
//!
//! An MCS is selected per RB from the effective per-subcarrier SINR of that
//! RB. Per-RB transport block bits are `floor(N_RE * R * Q_m)` rounded down
//! to a whole byte, with `N_RE = min(156, subcarriers * symbols - DM-RS REs)`.
//! The SINR thresholds of the CQI table are configurable; the defaults span
//! -6.7 dB to 22.7 dB in even steps.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::Real;

/// One CQI table row: modulation order, code rate (x1024) and the minimum
/// SINR for which the row is selected.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CqiRow {
    pub index: u8,
    pub modulation_order: u8,
    pub code_rate_x1024: u16,
    pub threshold_db: Real,
}

impl CqiRow {
    pub fn spectral_efficiency(&self) -> Real {
        self.modulation_order as Real * self.code_rate_x1024 as Real / 1024.0
    }
}

/// 15-entry CQI/MCS table (256QAM family). CQI 0 means no transmission.
#[derive(Debug, Clone, PartialEq)]
pub struct CqiTable {
    pub rows: Vec<CqiRow>,
    /// Row thresholds converted to linear SINR, so boundary comparisons
    /// are exact.
    thresholds_linear: Vec<Real>,
}

/// Default modulation orders and code rates, lowest to highest CQI.
const DEFAULT_MCS: [(u8, u16); 15] = [
    (2, 78),
    (2, 193),
    (2, 449),
    (4, 378),
    (4, 490),
    (4, 616),
    (6, 466),
    (6, 567),
    (6, 666),
    (6, 772),
    (6, 873),
    (8, 711),
    (8, 797),
    (8, 885),
    (8, 948),
];

impl Default for CqiTable {
    fn default() -> Self {
        let rows = DEFAULT_MCS
            .iter()
            .enumerate()
            .map(|(i, &(qm, rate))| CqiRow {
                index: i as u8 + 1,
                modulation_order: qm,
                code_rate_x1024: rate,
                threshold_db: -6.7 + 2.1 * i as Real,
            })
            .collect();
        CqiTable::new(rows)
    }
}

impl CqiTable {
    pub fn new(rows: Vec<CqiRow>) -> Self {
        let thresholds_linear = rows.iter().map(|r| 10f64.powf(r.threshold_db / 10.0)).collect();
        CqiTable { rows, thresholds_linear }
    }

    pub fn validate(&self) -> Result<()> {
        if self.rows.len() != 15 {
            return Err(Error::invalid_config("CQI table must have 15 rows"));
        }
        for (i, row) in self.rows.iter().enumerate() {
            if row.index != i as u8 + 1 {
                return Err(Error::invalid_config("CQI indices must be 1..=15 in order"));
            }
            if ![2, 4, 6, 8].contains(&row.modulation_order) {
                return Err(Error::invalid_config("modulation order must be 2, 4, 6 or 8"));
            }
            if row.code_rate_x1024 == 0 || row.code_rate_x1024 >= 1024 {
                return Err(Error::invalid_config("code rate must be in (0, 1024)"));
            }
            if i > 0 {
                let prev = &self.rows[i - 1];
                if row.threshold_db <= prev.threshold_db {
                    return Err(Error::invalid_config("CQI thresholds must be strictly increasing"));
                }
                if row.spectral_efficiency() <= prev.spectral_efficiency() {
                    return Err(Error::invalid_config(
                        "CQI spectral efficiencies must be strictly increasing",
                    ));
                }
            }
        }
        Ok(())
    }

    /// Largest CQI whose threshold does not exceed the SINR (boundary
    /// inclusive); 0 below the lowest threshold (no transmission).
    pub fn cqi_for_sinr(&self, sinr_linear: Real) -> Result<u8> {
        if sinr_linear.is_nan() {
            return Err(Error::invalid_input("NaN SINR"));
        }
        let mut cqi = 0;
        for (row, &thr) in self.rows.iter().zip(&self.thresholds_linear) {
            if thr <= sinr_linear {
                cqi = row.index;
            } else {
                break;
            }
        }
        Ok(cqi)
    }

    pub fn row(&self, cqi: u8) -> Option<&CqiRow> {
        if cqi == 0 {
            None
        } else {
            self.rows.get(cqi as usize - 1)
        }
    }
}

/// Data resource elements per RB: `min(156, subcarriers * symbols - DM-RS)`.
pub fn resource_elements(subcarriers_per_rb: usize, ofdm_symbols: usize, dmrs_symbols: usize) -> u32 {
    let total = subcarriers_per_rb * ofdm_symbols;
    let dmrs = subcarriers_per_rb * dmrs_symbols;
    (total.saturating_sub(dmrs)).min(156) as u32
}

/// Transport-block bits for one RB at the given CQI (byte-aligned floor).
pub fn per_rb_tbs(table: &CqiTable, cqi: u8, n_re: u32) -> u32 {
    match table.row(cqi) {
        None => 0,
        Some(row) => {
            let raw = (n_re as u64 * row.modulation_order as u64 * row.code_rate_x1024 as u64) / 1024;
            (raw - raw % 8) as u32
        }
    }
}

/// How per-RB SINRs are averaged into the effective SINR.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SinrAveraging {
    Linear,
    Db,
}

/// Effective SINR of a set of scheduled-RB SINRs (linear in, linear out).
pub fn effective_sinr<S: Scalar>(sinrs: &[S], domain: SinrAveraging) -> Result<S> {
    if sinrs.is_empty() {
        return Err(Error::invalid_input("effective SINR of an empty RB set is undefined"));
    }
    let n = S::of(sinrs.len() as f64);
    match domain {
        SinrAveraging::Linear => Ok(sinrs.iter().copied().sum::<S>() / n),
        SinrAveraging::Db => {
            let ten = S::of(10.0);
            let mean_db = sinrs.iter().map(|s| ten * s.log10()).sum::<S>() / n;
            Ok(ten.powf(mean_db / ten))
        }
    }
}

/// Per-RB bits plus the resulting instantaneous throughput.
#[derive(Debug, Clone, PartialEq)]
pub struct TbsResult {
    pub per_rb_bits: Vec<u32>,
    pub total_bits: u64,
    pub throughput_bps: Real,
}

/// Map each scheduled RB's SINR to bits and sum into a TTI throughput.
pub fn ue_throughput(table: &CqiTable, per_rb_sinrs: &[Real], n_re: u32, tti_seconds: Real) -> Result<TbsResult> {
    let mut per_rb_bits = Vec::with_capacity(per_rb_sinrs.len());
    let mut total: u64 = 0;
    for &s in per_rb_sinrs {
        let bits = per_rb_tbs(table, table.cqi_for_sinr(s)?, n_re);
        per_rb_bits.push(bits);
        total += bits as u64;
    }
    Ok(TbsResult {
        per_rb_bits,
        total_bits: total,
        throughput_bps: total as Real / tti_seconds,
    })
}
