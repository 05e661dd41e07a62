//! Training-mode taxonomy shared by the RL and supervised harnesses.

use std::fmt;
use std::str::FromStr;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Mode {
    /// Uniform replay / shuffled batches, unweighted loss.
    Baseline,
    /// Screener weights multiply the loss; screener co-trained per batch.
    Sn,
    /// Prioritized replay with importance-sampling weights.
    Per,
    /// Prioritized selection, then screener weights multiply the
    /// IS-weighted loss.
    PerSn,
    /// Replay priorities come from the screener output (alpha = 1);
    /// RL-only.
    SnSampling,
}

impl Mode {
    pub const ALL: [Mode; 5] = [Mode::Baseline, Mode::Sn, Mode::Per, Mode::PerSn, Mode::SnSampling];

    pub fn uses_screener(self) -> bool {
        matches!(self, Mode::Sn | Mode::PerSn | Mode::SnSampling)
    }

    pub fn uses_prioritized_replay(self) -> bool {
        matches!(self, Mode::Per | Mode::PerSn | Mode::SnSampling)
    }

    pub fn valid_for_supervised(self) -> bool {
        self != Mode::SnSampling
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Baseline => "Baseline",
            Mode::Sn => "SN",
            Mode::Per => "PER",
            Mode::PerSn => "PER_SN",
            Mode::SnSampling => "SN_Sampling",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Mode::ALL
            .into_iter()
            .find(|m| m.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| {
                format!(
                    "unknown mode `{s}` (expected one of Baseline, SN, PER, PER_SN, SN_Sampling)"
                )
            })
    }
}
