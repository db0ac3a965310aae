use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::{PassKind, PassWindow, ScenarioSpec};

/// 20% cloud cover.
pub const DEFAULT_CLOUD_THRESHOLD_MILLI: i64 = 200;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PrefilterKind {
    Visibility,
    Deadline,
    Cloud,
    SatUnavailable,
    StationUnavailable,
}

impl PrefilterKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            PrefilterKind::Visibility => "visibility",
            PrefilterKind::Deadline => "deadline",
            PrefilterKind::Cloud => "cloud",
            PrefilterKind::SatUnavailable => "sat_unavailable",
            PrefilterKind::StationUnavailable => "station_unavailable",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PrefilterReason {
    pub kind: PrefilterKind,
    pub pass_id: Option<String>,
    pub detail: String,
}

/// Filter thresholds. `pass_thresholds` overrides the global cloud threshold
/// for individual passes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FilterParams {
    pub cloud_threshold_milli: i64,
    #[serde(default)]
    pub pass_thresholds: BTreeMap<String, i64>,
}

impl Default for FilterParams {
    fn default() -> Self {
        FilterParams::with_threshold(DEFAULT_CLOUD_THRESHOLD_MILLI)
    }
}

impl FilterParams {
    pub fn with_threshold(cloud_threshold_milli: i64) -> Self {
        FilterParams {
            cloud_threshold_milli,
            pass_thresholds: BTreeMap::new(),
        }
    }

    pub fn threshold_for(&self, pass_id: &str) -> i64 {
        self.pass_thresholds
            .get(pass_id)
            .copied()
            .unwrap_or(self.cloud_threshold_milli)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FilteredInstance {
    pub scenario: ScenarioSpec,
    pub params: FilterParams,
    /// (order id, pass id)
    pub admissible_pairs: BTreeSet<(String, String)>,
    pub admissible_downlinks: BTreeSet<String>,
    pub prefilter_log: BTreeMap<String, Vec<PrefilterReason>>,
    pub downlink_log: BTreeMap<String, Vec<PrefilterReason>>,
}

impl FilteredInstance {
    /// An order is prefiltered when no admissible (order, pass) pair survives.
    pub fn is_prefiltered(&self, order_id: &str) -> bool {
        !self.admissible_pairs.iter().any(|(o, _)| o == order_id)
    }

    pub fn admissible_passes_of<'a>(&'a self, order_id: &'a str) -> impl Iterator<Item = &'a str> {
        self.admissible_pairs
            .iter()
            .filter(move |(o, _)| o == order_id)
            .map(|(_, p)| p.as_str())
    }

    pub fn is_admissible(&self, order_id: &str, pass_id: &str) -> bool {
        self.admissible_pairs
            .contains(&(order_id.to_string(), pass_id.to_string()))
    }

    pub fn reasons(&self, order_id: &str) -> &[PrefilterReason] {
        self.prefilter_log
            .get(order_id)
            .map(Vec::as_slice)
            .unwrap_or(&[])
    }
}

pub fn apply_feasibility_filters(scenario: &ScenarioSpec, cloud_threshold_milli: i64) -> FilteredInstance {
    apply_filters_with(scenario, &FilterParams::with_threshold(cloud_threshold_milli))
}

fn unavailable_satellite(scenario: &ScenarioSpec, p: &PassWindow) -> bool {
    scenario
        .satellite(&p.satellite_id)
        .map(|s| s.unavailable_windows.iter().any(|w| w.overlaps(p.start_s, p.end_s)))
        .unwrap_or(false)
}

pub fn apply_filters_with(scenario: &ScenarioSpec, params: &FilterParams) -> FilteredInstance {
    let mut admissible_pairs = BTreeSet::new();
    let mut admissible_downlinks = BTreeSet::new();
    let mut prefilter_log: BTreeMap<String, Vec<PrefilterReason>> = BTreeMap::new();
    let mut downlink_log: BTreeMap<String, Vec<PrefilterReason>> = BTreeMap::new();

    for p in &scenario.passes {
        match p.kind {
            PassKind::Imaging => {
                let sat_down = unavailable_satellite(scenario, p);
                let threshold = params.threshold_for(&p.id);
                for o in &p.order_candidates {
                    let Some(order) = scenario.order(o) else { continue };
                    let mut reasons = Vec::new();
                    if let Some(deadline) = order.deadline_s {
                        if p.end_s > deadline {
                            reasons.push(PrefilterReason {
                                kind: PrefilterKind::Deadline,
                                pass_id: Some(p.id.clone()),
                                detail: format!("pass {} ends at {} s, after deadline {} s", p.id, p.end_s, deadline),
                            });
                        }
                    }
                    if p.cloud() > threshold {
                        reasons.push(PrefilterReason {
                            kind: PrefilterKind::Cloud,
                            pass_id: Some(p.id.clone()),
                            detail: format!("cloud forecast {}‰ exceeds threshold {}‰", p.cloud(), threshold),
                        });
                    }
                    if sat_down {
                        reasons.push(PrefilterReason {
                            kind: PrefilterKind::SatUnavailable,
                            pass_id: Some(p.id.clone()),
                            detail: format!("{} unavailable during pass {}", p.satellite_id, p.id),
                        });
                    }
                    if reasons.is_empty() {
                        admissible_pairs.insert((o.clone(), p.id.clone()));
                    } else {
                        prefilter_log.entry(o.clone()).or_default().extend(reasons);
                    }
                }
            }
            PassKind::Downlink => {
                let mut reasons = Vec::new();
                if unavailable_satellite(scenario, p) {
                    reasons.push(PrefilterReason {
                        kind: PrefilterKind::SatUnavailable,
                        pass_id: Some(p.id.clone()),
                        detail: format!("{} unavailable during pass {}", p.satellite_id, p.id),
                    });
                }
                let station_down = p
                    .station_id
                    .as_deref()
                    .and_then(|g| scenario.station(g))
                    .map(|g| g.unavailable_windows.iter().any(|w| w.overlaps(p.start_s, p.end_s)))
                    .unwrap_or(false);
                if station_down {
                    reasons.push(PrefilterReason {
                        kind: PrefilterKind::StationUnavailable,
                        pass_id: Some(p.id.clone()),
                        detail: format!(
                            "station {} unavailable during pass {}",
                            p.station_id.as_deref().unwrap_or("?"),
                            p.id
                        ),
                    });
                }
                if reasons.is_empty() {
                    admissible_downlinks.insert(p.id.clone());
                } else {
                    downlink_log.insert(p.id.clone(), reasons);
                }
            }
        }
    }

    for order in &scenario.orders {
        if !admissible_pairs.iter().any(|(o, _)| *o == order.id) {
            prefilter_log.entry(order.id.clone()).or_default().push(PrefilterReason {
                kind: PrefilterKind::Visibility,
                pass_id: None,
                detail: format!("no admissible imaging pass remains for {}", order.id),
            });
        }
    }

    FilteredInstance {
        scenario: scenario.clone(),
        params: params.clone(),
        admissible_pairs,
        admissible_downlinks,
        prefilter_log,
        downlink_log,
    }
}
