//! Scheduling instances: satellites, ground stations, orders and pass windows.
//!
//! All quantities are integers (MB, milli-units, seconds) so that every
//! downstream computation is exact.

mod canonical;
mod filter;
mod synthetic;

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use canonical::{canonical_scenario, tiny_scenario};
pub use filter::{
    apply_feasibility_filters, apply_filters_with, FilterParams, FilteredInstance, PrefilterKind,
    PrefilterReason, DEFAULT_CLOUD_THRESHOLD_MILLI,
};
pub use synthetic::{generate_synthetic, SyntheticParams};

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("malformed scenario document: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("invalid scenario at `{path}`: {message}")]
    Validation { path: String, message: String },
    #[error("invalid generator parameter `{0}`")]
    Params(&'static str),
}

impl ScenarioError {
    fn at(path: impl Into<String>, message: impl Into<String>) -> Self {
        ScenarioError::Validation {
            path: path.into(),
            message: message.into(),
        }
    }

    /// Field path for validation errors, if any.
    pub fn field(&self) -> Option<&str> {
        match self {
            ScenarioError::Validation { path, .. } => Some(path),
            _ => None,
        }
    }
}

/// Closed-open time interval `[start_s, end_s)`, serialized as a two-element array.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Window(pub i64, pub i64);

impl Window {
    pub fn start(&self) -> i64 {
        self.0
    }

    pub fn end(&self) -> i64 {
        self.1
    }

    pub fn overlaps(&self, start_s: i64, end_s: i64) -> bool {
        self.0 < end_s && start_s < self.1
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Satellite {
    pub id: String,
    pub storage_capacity_mb: i64,
    pub initial_storage_mb: i64,
    pub downlink_rate_kbps: i64,
    pub min_slew_s: i64,
    #[serde(default)]
    pub unavailable_windows: Vec<Window>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroundStation {
    pub id: String,
    #[serde(default)]
    pub unavailable_windows: Vec<Window>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Order {
    pub id: String,
    pub value_milli: i64,
    pub priority: i64,
    pub data_mb: i64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub deadline_s: Option<i64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PassKind {
    Imaging,
    Downlink,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PassWindow {
    pub id: String,
    pub satellite_id: String,
    pub kind: PassKind,
    pub start_s: i64,
    pub end_s: i64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub order_candidates: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cloud_fraction_milli: Option<i64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub station_id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tx_mb: Option<i64>,
}

impl PassWindow {
    pub fn imaging(
        id: impl Into<String>,
        satellite_id: impl Into<String>,
        start_s: i64,
        end_s: i64,
        candidates: &[&str],
        cloud_fraction_milli: i64,
    ) -> Self {
        PassWindow {
            id: id.into(),
            satellite_id: satellite_id.into(),
            kind: PassKind::Imaging,
            start_s,
            end_s,
            order_candidates: candidates.iter().map(|s| s.to_string()).collect(),
            cloud_fraction_milli: Some(cloud_fraction_milli),
            station_id: None,
            tx_mb: None,
        }
    }

    /// Downlink pass; `tx_mb` is filled in by [`ScenarioSpec::normalize`].
    pub fn downlink(
        id: impl Into<String>,
        satellite_id: impl Into<String>,
        station_id: impl Into<String>,
        start_s: i64,
        end_s: i64,
    ) -> Self {
        PassWindow {
            id: id.into(),
            satellite_id: satellite_id.into(),
            kind: PassKind::Downlink,
            start_s,
            end_s,
            order_candidates: Vec::new(),
            cloud_fraction_milli: None,
            station_id: Some(station_id.into()),
            tx_mb: None,
        }
    }

    pub fn is_imaging(&self) -> bool {
        self.kind == PassKind::Imaging
    }

    pub fn duration_s(&self) -> i64 {
        self.end_s - self.start_s
    }

    pub fn cloud(&self) -> i64 {
        self.cloud_fraction_milli.unwrap_or(0)
    }

    pub fn tx(&self) -> i64 {
        self.tx_mb.unwrap_or(0)
    }
}

/// Data volume a downlink of `duration_s` transmits at `rate_kbps`, rounded down.
pub fn downlink_volume_mb(rate_kbps: i64, duration_s: i64) -> i64 {
    (rate_kbps * duration_s).div_euclid(8 * 1000)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSpec {
    pub name: String,
    pub horizon_s: i64,
    pub satellites: Vec<Satellite>,
    pub stations: Vec<GroundStation>,
    pub orders: Vec<Order>,
    pub passes: Vec<PassWindow>,
}

/// Parse and validate a scenario document.
pub fn load_scenario(text: &str) -> Result<ScenarioSpec, ScenarioError> {
    let mut scenario: ScenarioSpec = serde_json::from_str(text)?;
    scenario.normalize_and_validate()?;
    Ok(scenario)
}

impl ScenarioSpec {
    pub fn satellite(&self, id: &str) -> Option<&Satellite> {
        self.satellites.iter().find(|s| s.id == id)
    }

    pub fn station(&self, id: &str) -> Option<&GroundStation> {
        self.stations.iter().find(|s| s.id == id)
    }

    pub fn order(&self, id: &str) -> Option<&Order> {
        self.orders.iter().find(|o| o.id == id)
    }

    pub fn pass(&self, id: &str) -> Option<&PassWindow> {
        self.passes.iter().find(|p| p.id == id)
    }

    pub fn satellite_mut(&mut self, id: &str) -> Option<&mut Satellite> {
        self.satellites.iter_mut().find(|s| s.id == id)
    }

    pub fn order_mut(&mut self, id: &str) -> Option<&mut Order> {
        self.orders.iter_mut().find(|o| o.id == id)
    }

    /// Imaging passes listing `order_id` as a candidate, in document order.
    pub fn candidate_passes<'a>(&'a self, order_id: &'a str) -> impl Iterator<Item = &'a PassWindow> {
        self.passes
            .iter()
            .filter(move |p| p.is_imaging() && p.order_candidates.iter().any(|o| o == order_id))
    }

    /// Keys sorted, no insignificant whitespace.
    pub fn to_canonical_json(&self) -> String {
        let value = serde_json::to_value(self).expect("scenario serializes");
        serde_json::to_string(&value).expect("value serializes")
    }

    /// Fill derived fields (imaging cloud defaults to 0, downlink `tx_mb`) and
    /// check every invariant.
    pub fn normalize_and_validate(&mut self) -> Result<(), ScenarioError> {
        self.normalize();
        self.validate()
    }

    pub fn normalize(&mut self) {
        let rates: BTreeMap<String, i64> = self
            .satellites
            .iter()
            .map(|s| (s.id.clone(), s.downlink_rate_kbps))
            .collect();
        for p in &mut self.passes {
            match p.kind {
                PassKind::Imaging => {
                    if p.cloud_fraction_milli.is_none() {
                        p.cloud_fraction_milli = Some(0);
                    }
                }
                PassKind::Downlink => {
                    if p.tx_mb.is_none() {
                        if let Some(rate) = rates.get(&p.satellite_id) {
                            p.tx_mb = Some(downlink_volume_mb(*rate, p.duration_s()));
                        }
                    }
                }
            }
        }
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        if self.horizon_s <= 0 {
            return Err(ScenarioError::at("horizon_s", "must be positive"));
        }
        unique_ids("satellites", self.satellites.iter().map(|s| s.id.as_str()))?;
        unique_ids("stations", self.stations.iter().map(|s| s.id.as_str()))?;
        unique_ids("orders", self.orders.iter().map(|o| o.id.as_str()))?;
        unique_ids("passes", self.passes.iter().map(|p| p.id.as_str()))?;

        for (i, s) in self.satellites.iter().enumerate() {
            let path = |f: &str| format!("satellites[{i}].{f}");
            if s.storage_capacity_mb < 0 {
                return Err(ScenarioError::at(path("storage_capacity_mb"), "must be non-negative"));
            }
            if s.initial_storage_mb < 0 || s.initial_storage_mb > s.storage_capacity_mb {
                return Err(ScenarioError::at(
                    path("initial_storage_mb"),
                    format!(
                        "initial storage {} outside [0, {}]",
                        s.initial_storage_mb, s.storage_capacity_mb
                    ),
                ));
            }
            if s.downlink_rate_kbps <= 0 {
                return Err(ScenarioError::at(path("downlink_rate_kbps"), "must be positive"));
            }
            if s.min_slew_s < 0 {
                return Err(ScenarioError::at(path("min_slew_s"), "must be non-negative"));
            }
            check_windows(&path("unavailable_windows"), &s.unavailable_windows)?;
        }
        for (i, g) in self.stations.iter().enumerate() {
            check_windows(&format!("stations[{i}].unavailable_windows"), &g.unavailable_windows)?;
        }
        for (i, o) in self.orders.iter().enumerate() {
            let path = |f: &str| format!("orders[{i}].{f}");
            if o.value_milli <= 0 {
                return Err(ScenarioError::at(path("value_milli"), "must be positive"));
            }
            if o.priority < 1 {
                return Err(ScenarioError::at(path("priority"), "must be at least 1"));
            }
            if o.data_mb <= 0 {
                return Err(ScenarioError::at(path("data_mb"), "must be positive"));
            }
            if matches!(o.deadline_s, Some(d) if d < 0) {
                return Err(ScenarioError::at(path("deadline_s"), "must be non-negative"));
            }
        }

        let orders: BTreeSet<&str> = self.orders.iter().map(|o| o.id.as_str()).collect();
        for (i, p) in self.passes.iter().enumerate() {
            let path = |f: &str| format!("passes[{i}].{f}");
            let Some(sat) = self.satellite(&p.satellite_id) else {
                return Err(ScenarioError::at(
                    path("satellite_id"),
                    format!("unknown satellite `{}`", p.satellite_id),
                ));
            };
            if p.start_s < 0 || p.start_s >= p.end_s || p.end_s > self.horizon_s {
                return Err(ScenarioError::at(
                    path("start_s"),
                    format!(
                        "window [{}, {}] must satisfy 0 <= start < end <= {}",
                        p.start_s, p.end_s, self.horizon_s
                    ),
                ));
            }
            match p.kind {
                PassKind::Imaging => {
                    if p.order_candidates.is_empty() {
                        return Err(ScenarioError::at(
                            path("order_candidates"),
                            "imaging pass needs at least one candidate order",
                        ));
                    }
                    let mut seen = BTreeSet::new();
                    for (j, o) in p.order_candidates.iter().enumerate() {
                        if !orders.contains(o.as_str()) {
                            return Err(ScenarioError::at(
                                format!("passes[{i}].order_candidates[{j}]"),
                                format!("unknown order `{o}`"),
                            ));
                        }
                        if !seen.insert(o) {
                            return Err(ScenarioError::at(
                                format!("passes[{i}].order_candidates[{j}]"),
                                format!("duplicate candidate `{o}`"),
                            ));
                        }
                    }
                    if !matches!(p.cloud_fraction_milli, Some(c) if (0..=1000).contains(&c)) {
                        return Err(ScenarioError::at(
                            path("cloud_fraction_milli"),
                            "must be in [0, 1000]",
                        ));
                    }
                    if p.station_id.is_some() {
                        return Err(ScenarioError::at(path("station_id"), "imaging passes have no station"));
                    }
                    if p.tx_mb.is_some() {
                        return Err(ScenarioError::at(path("tx_mb"), "imaging passes have no tx volume"));
                    }
                }
                PassKind::Downlink => {
                    match &p.station_id {
                        Some(g) if self.station(g).is_some() => {}
                        Some(g) => {
                            return Err(ScenarioError::at(
                                path("station_id"),
                                format!("unknown station `{g}`"),
                            ))
                        }
                        None => {
                            return Err(ScenarioError::at(
                                path("station_id"),
                                "downlink pass needs a station",
                            ))
                        }
                    }
                    if !p.order_candidates.is_empty() {
                        return Err(ScenarioError::at(
                            path("order_candidates"),
                            "downlink passes carry no candidates",
                        ));
                    }
                    if p.cloud_fraction_milli.is_some() {
                        return Err(ScenarioError::at(
                            path("cloud_fraction_milli"),
                            "downlink passes carry no cloud forecast",
                        ));
                    }
                    let expected = downlink_volume_mb(sat.downlink_rate_kbps, p.duration_s());
                    if p.tx_mb != Some(expected) {
                        return Err(ScenarioError::at(
                            path("tx_mb"),
                            format!("expected {expected} MB from link rate and duration"),
                        ));
                    }
                }
            }
        }
        Ok(())
    }
}

fn unique_ids<'a>(what: &str, ids: impl Iterator<Item = &'a str>) -> Result<(), ScenarioError> {
    let mut seen = BTreeSet::new();
    for (i, id) in ids.enumerate() {
        if id.is_empty() {
            return Err(ScenarioError::at(format!("{what}[{i}].id"), "empty id"));
        }
        if !seen.insert(id) {
            return Err(ScenarioError::at(
                format!("{what}[{i}].id"),
                format!("duplicate id `{id}`"),
            ));
        }
    }
    Ok(())
}

fn check_windows(path: &str, windows: &[Window]) -> Result<(), ScenarioError> {
    for (i, w) in windows.iter().enumerate() {
        if w.0 >= w.1 {
            return Err(ScenarioError::at(
                format!("{path}[{i}]"),
                format!("window [{}, {}] must have start < end", w.0, w.1),
            ));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "name": "minimal",
        "horizon_s": 1000,
        "satellites": [{"id": "S1", "storage_capacity_mb": 2048, "initial_storage_mb": 0,
                        "downlink_rate_kbps": 8000, "min_slew_s": 10, "unavailable_windows": []}],
        "stations": [{"id": "G1"}],
        "orders": [{"id": "O1", "value_milli": 1000, "priority": 1, "data_mb": 100}],
        "passes": [
            {"id": "P1", "satellite_id": "S1", "kind": "imaging", "start_s": 0, "end_s": 60,
             "order_candidates": ["O1"], "cloud_fraction_milli": 100},
            {"id": "Q1", "satellite_id": "S1", "kind": "downlink", "start_s": 200, "end_s": 300,
             "station_id": "G1"}
        ]
    }"#;

    #[test]
    fn minimal_document_loads() {
        let s = load_scenario(MINIMAL).unwrap();
        assert_eq!(s.passes.len(), 2);
        // 8000 kbps * 100 s / 8 / 1000
        assert_eq!(s.pass("Q1").unwrap().tx_mb, Some(100));
    }

    #[test]
    fn unknown_satellite_is_reported_with_field_path() {
        let text = MINIMAL.replacen(r#""satellite_id": "S1", "kind": "imaging""#, r#""satellite_id": "S9", "kind": "imaging""#, 1);
        let err = load_scenario(&text).unwrap_err();
        assert_eq!(err.field(), Some("passes[0].satellite_id"));
    }

    #[test]
    fn initial_storage_above_capacity_rejected() {
        let text = MINIMAL.replace(r#""initial_storage_mb": 0"#, r#""initial_storage_mb": 4096"#);
        let err = load_scenario(&text).unwrap_err();
        assert_eq!(err.field(), Some("satellites[0].initial_storage_mb"));
    }

    #[test]
    fn degenerate_window_rejected() {
        let text = MINIMAL.replace(r#""start_s": 200, "end_s": 300"#, r#""start_s": 300, "end_s": 300"#);
        let err = load_scenario(&text).unwrap_err();
        assert_eq!(err.field(), Some("passes[1].start_s"));
    }

    #[test]
    fn unknown_keys_and_floats_rejected() {
        let text = MINIMAL.replace(r#""name": "minimal","#, r#""name": "minimal", "epoch": 3,"#);
        assert!(matches!(load_scenario(&text), Err(ScenarioError::Parse(_))));
        let text = MINIMAL.replace(r#""data_mb": 100"#, r#""data_mb": 100.5"#);
        assert!(matches!(load_scenario(&text), Err(ScenarioError::Parse(_))));
        assert!(matches!(load_scenario("{ not json"), Err(ScenarioError::Parse(_))));
    }

    #[test]
    fn inconsistent_tx_rejected() {
        let text = MINIMAL.replace(r#""station_id": "G1"}"#, r#""station_id": "G1", "tx_mb": 5}"#);
        let err = load_scenario(&text).unwrap_err();
        assert_eq!(err.field(), Some("passes[1].tx_mb"));
    }

    #[test]
    fn canonical_json_is_sorted_and_compact() {
        let s = load_scenario(MINIMAL).unwrap();
        let text = s.to_canonical_json();
        assert!(!text.contains(' ') || !text.contains(": "));
        assert!(text.starts_with(r#"{"horizon_s":1000,"name":"minimal","orders":"#));
        let back = load_scenario(&text).unwrap();
        assert_eq!(back, s);
        assert_eq!(back.to_canonical_json(), text);
    }

    #[test]
    fn downlink_volume_rounds_down() {
        assert_eq!(downlink_volume_mb(15_000, 480), 900);
        assert_eq!(downlink_volume_mb(15_000, 1), 1);
        assert_eq!(downlink_volume_mb(7, 1), 0);
    }
}
