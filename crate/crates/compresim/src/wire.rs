//! Wire-cost model and the communication ledger.
//!
//! Sparsifiers transmit value scalars plus index integers, the stochastic
//! quantizer transmits raw bits (one norm scalar plus per-coordinate
//! sign/level), identity transmits full scalars. The cost table converting
//! scalars and indices to bits is configurable per run.

use serde::{Deserialize, Serialize};

/// Cost of one compressed message.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct WireCost {
    /// 64-bit value scalars.
    pub scalars: u64,
    /// 32-bit index integers.
    pub index_ints: u64,
    /// Raw bits for formats accounted directly in bits (quantizer payloads).
    pub raw_bits: u64,
}

impl WireCost {
    pub fn scalars(n: u64) -> Self {
        WireCost {
            scalars: n,
            ..Default::default()
        }
    }

    pub fn sparsified(k: u64) -> Self {
        WireCost {
            scalars: k,
            index_ints: k,
            raw_bits: 0,
        }
    }

    pub fn bits(b: u64) -> Self {
        WireCost {
            raw_bits: b,
            ..Default::default()
        }
    }

    pub fn accumulate(&mut self, other: &WireCost) {
        self.scalars += other.scalars;
        self.index_ints += other.index_ints;
        self.raw_bits += other.raw_bits;
    }
}

/// Bit widths used to convert scalar/index counts into total bits.
#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
pub struct CostModel {
    #[serde(default = "default_bits_per_scalar")]
    pub bits_per_scalar: u64,
    #[serde(default = "default_bits_per_index")]
    pub bits_per_index: u64,
}

fn default_bits_per_scalar() -> u64 {
    64
}

fn default_bits_per_index() -> u64 {
    32
}

impl Default for CostModel {
    fn default() -> Self {
        CostModel {
            bits_per_scalar: 64,
            bits_per_index: 32,
        }
    }
}

impl CostModel {
    pub fn total_bits(&self, cost: &WireCost) -> u64 {
        cost.scalars * self.bits_per_scalar + cost.index_ints * self.bits_per_index + cost.raw_bits
    }
}

/// Exact counts of transmitted payload and oracle work during one run.
///
/// Counters are monotone non-decreasing; they are written only by the
/// compress/FCC/run paths. Uplink counters sum over all workers; downlink
/// counters count each server broadcast once. The per-worker counters track
/// the budget `T` of gradient queries and communication rounds.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CommLedger {
    pub uplink_scalars: u64,
    pub uplink_index_ints: u64,
    pub uplink_bits: u64,
    pub downlink_scalars: u64,
    pub downlink_index_ints: u64,
    pub downlink_bits: u64,
    pub grad_queries_per_worker: u64,
    pub comm_rounds_per_worker: u64,
}

impl CommLedger {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn record_uplink(&mut self, cost: &WireCost, model: &CostModel) {
        self.uplink_scalars += cost.scalars;
        self.uplink_index_ints += cost.index_ints;
        self.uplink_bits += model.total_bits(cost);
    }

    pub fn record_downlink(&mut self, cost: &WireCost, model: &CostModel) {
        self.downlink_scalars += cost.scalars;
        self.downlink_index_ints += cost.index_ints;
        self.downlink_bits += model.total_bits(cost);
    }

    pub fn record_queries_per_worker(&mut self, n: u64) {
        self.grad_queries_per_worker += n;
    }

    pub fn record_comm_rounds_per_worker(&mut self, n: u64) {
        self.comm_rounds_per_worker += n;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cost_model_conversion() {
        let model = CostModel::default();
        let cost = WireCost {
            scalars: 2,
            index_ints: 3,
            raw_bits: 5,
        };
        assert_eq!(model.total_bits(&cost), 2 * 64 + 3 * 32 + 5);
    }

    #[test]
    fn ledger_accumulates_monotonically() {
        let model = CostModel::default();
        let mut ledger = CommLedger::new();
        ledger.record_uplink(&WireCost::sparsified(4), &model);
        ledger.record_uplink(&WireCost::sparsified(4), &model);
        ledger.record_downlink(&WireCost::scalars(10), &model);
        assert_eq!(ledger.uplink_scalars, 8);
        assert_eq!(ledger.uplink_index_ints, 8);
        assert_eq!(ledger.uplink_bits, 8 * 64 + 8 * 32);
        assert_eq!(ledger.downlink_scalars, 10);
        assert_eq!(ledger.downlink_bits, 640);
    }
}
