//! Attack outcome reporting.
//!
//! An attack runs the same scheme over several input settings under one
//! strategy and claims some party cannot tell the settings apart. The
//! report records what was measured: per-setting budget arithmetic, the
//! literal view comparison, and the chance element the strategy leaned
//! on. Nothing in here is asserted; it is evidence for the caller.

use std::fmt;

use crate::canonical::Side;
use crate::channel::{Delivered, SessionResult};
use crate::util::fnv1a;

/// One attacked session.
#[derive(Clone, PartialEq, Debug)]
pub struct SettingRow {
    /// The inputs this setting ran, e.g. `x=0 y=1`.
    pub label: String,
    pub budget: u64,
    pub cost: u64,
    /// Interventions the engine discarded (over budget or ill-shaped).
    pub dropped: u64,
    /// Length of the claimed party's reception sequence.
    pub view_len: usize,
    /// Digest of that sequence, for eyeballing which rows coincide.
    pub view_digest: u64,
    /// Whether the claimed party decoded its counterpart's true input,
    /// where the scheme decodes one at all.
    pub decoded_ok: Option<bool>,
}

impl SettingRow {
    pub fn from_session(
        label: String,
        target: Side,
        result: &SessionResult,
        decoded_ok: Option<bool>,
    ) -> SettingRow {
        let view = result.view(target);
        SettingRow {
            label,
            budget: result.budget,
            cost: result.cost_total,
            dropped: result.dropped_interventions,
            view_len: view.len(),
            view_digest: view_digest(&view),
            decoded_ok,
        }
    }
}

/// A measured indistinguishability claim: the named party's reception
/// sequences in the listed settings were compared value for value.
#[derive(Clone, PartialEq, Debug)]
pub struct Claim {
    pub target: Side,
    /// Indices into [`AttackReport::rows`].
    pub settings: Vec<usize>,
    pub views_identical: bool,
}

#[derive(Clone, PartialEq, Debug)]
pub struct AttackReport {
    pub attack: &'static str,
    pub scheme: String,
    pub rounds: usize,
    /// The chance element the strategy relies on.
    pub gamble: String,
    /// Whether it came up this time.
    pub gamble_holds: bool,
    pub rows: Vec<SettingRow>,
    pub claims: Vec<Claim>,
    pub notes: Vec<String>,
}

impl AttackReport {
    /// An attack stands when every claim held. A missed gamble is not a
    /// failure: the strategy only promises anything when its gamble
    /// comes up.
    pub fn ok(&self) -> bool {
        !self.gamble_holds || self.claims.iter().all(|c| c.views_identical)
    }
}

/// Digest of a reception sequence; equal sequences hash equal, and a
/// differing pair collides with probability too small to care about.
pub fn view_digest(view: &[Delivered]) -> u64 {
    let mut bytes = Vec::new();
    for d in view {
        match d {
            Delivered::Bottom => bytes.push(0xff),
            Delivered::Sym(s) => {
                bytes.push(1);
                bytes.extend_from_slice(&(s.0.len() as u32).to_le_bytes());
                for v in &s.0 {
                    bytes.extend_from_slice(&v.to_le_bytes());
                }
            }
        }
    }
    fnv1a(bytes)
}

pub(crate) fn side_name(side: Side) -> &'static str {
    match side {
        Side::Alice => "alice",
        Side::Bob => "bob",
    }
}

impl fmt::Display for AttackReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{} vs {} ({} rounds)", self.attack, self.scheme, self.rounds)?;
        writeln!(
            f,
            "gamble: {} ({})",
            self.gamble,
            if self.gamble_holds { "holds" } else { "missed" }
        )?;
        writeln!(
            f,
            "{:<12} {:>6} {:>6} {:>7}  {:<28} decoded",
            "setting", "budget", "cost", "dropped", "view"
        )?;
        for row in &self.rows {
            let decoded = match row.decoded_ok {
                Some(true) => "ok",
                Some(false) => "wrong",
                None => "-",
            };
            writeln!(
                f,
                "{:<12} {:>6} {:>6} {:>7}  {:<28} {}",
                row.label,
                row.budget,
                row.cost,
                row.dropped,
                format!("{} recv @ {:016x}", row.view_len, row.view_digest),
                decoded,
            )?;
        }
        for claim in &self.claims {
            let names: Vec<&str> = claim
                .settings
                .iter()
                .map(|&i| self.rows[i].label.as_str())
                .collect();
            writeln!(
                f,
                "claim: {} sees one view across {{{}}}: {}",
                side_name(claim.target),
                names.join(", "),
                if claim.views_identical {
                    "views identical"
                } else {
                    "VIEWS DIFFER"
                },
            )?;
        }
        for note in &self.notes {
            writeln!(f, "note: {}", note)?;
        }
        write!(
            f,
            "verdict: {}",
            if self.ok() { "attack stands" } else { "attack failed" }
        )
    }
}
