//! Exclusion lists: units a pre-trial removed from the main-study population.
//!
//! A list carries the digest of the protocol that produced it, so a scenario
//! that still declares the same protocol can detect silent edits between the
//! pre-trial run and the main study.

use serde::{Deserialize, Serialize};

use super::{sha256_hex, Scenario};
use crate::error::{Error, Result};
use crate::pretrial::PretrialProtocol;

/// Stable content hash of a protocol declaration.
pub fn protocol_digest(protocol: &PretrialProtocol) -> String {
    let bytes = serde_json::to_vec(protocol).expect("protocols serialize");
    sha256_hex(&bytes)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExclusionList {
    pub protocol_id: String,
    pub protocol_digest: String,
    pub registered: bool,
    pub excluded_units: Vec<String>,
}

impl ExclusionList {
    /// Build a list from a pre-trial's calls. Refuses unregistered protocols
    /// outright: a list no scenario can consume should never exist.
    pub fn new(protocol: &PretrialProtocol, excluded_units: Vec<String>) -> Result<Self> {
        if !protocol.registered {
            return Err(Error::Unregistered(protocol.id.clone()));
        }
        Ok(Self {
            protocol_id: protocol.id.clone(),
            protocol_digest: protocol_digest(protocol),
            registered: true,
            excluded_units,
        })
    }

    pub fn to_json(&self) -> String {
        let mut text = serde_json::to_string_pretty(self).expect("exclusion lists serialize");
        text.push('\n');
        text
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Io(format!("malformed exclusion list: {e}")))
    }
}

/// Drop the excluded units from a scenario's population and re-check the
/// assignment mechanism against what remains.
pub fn apply_exclusions(scenario: &Scenario, list: &ExclusionList) -> Result<Scenario> {
    if !list.registered {
        return Err(Error::Unregistered(list.protocol_id.clone()));
    }
    if let Ok(protocol) = scenario.protocol(&list.protocol_id) {
        if !protocol.registered {
            return Err(Error::Unregistered(protocol.id.clone()));
        }
        let expected = protocol_digest(protocol);
        if expected != list.protocol_digest {
            return Err(Error::Protocol(format!(
                "exclusion list was produced by a different version of protocol `{}` \
                 (digest {} != {})",
                list.protocol_id, list.protocol_digest, expected
            )));
        }
    }
    for unit in &list.excluded_units {
        scenario.table.unit(unit)?;
    }
    let keep: Vec<String> = scenario
        .table
        .units()
        .iter()
        .map(|u| u.id.clone())
        .filter(|id| !list.excluded_units.contains(id))
        .collect();
    if keep.is_empty() {
        return Err(Error::domain("exclusion list removes every unit"));
    }
    let table = scenario.table.retain_units(&keep)?;
    scenario.mechanism.validate(&table)?;
    let timecourse = scenario.timecourse.clone().map(|mut plan| {
        plan.curves.retain(|unit, _| keep.contains(unit));
        plan
    });
    Ok(Scenario { table, timecourse, ..scenario.clone() })
}
