//! The handcrafted three-satellite, single-station test instance.
//!
//! Structure: S1 and S2 have no downlink contacts at all; S3 has four
//! contacts with the only station. Every order needs 1843 MB and S3 starts
//! at 80% of its 8192 MB storage, so nothing fits on S3 until its first
//! contact has drained data. Pass times are chosen so that the solved
//! instance has one scheduled order, two optimality trade-offs and seven
//! infeasible orders (two blocked by storage alone, two by the missing
//! downlink alone, three by both jointly).

use super::{GroundStation, Order, PassWindow, Satellite, ScenarioSpec};

const HORIZON_S: i64 = 12 * 3600;
const CAPACITY_MB: i64 = 8192;
const ORDER_MB: i64 = 1843;
const RATE_KBPS: i64 = 15_000;
const SLEW_S: i64 = 150;

// S3 imaging before the first contact: storage-blocked.
const S3_EARLY: [&str; 14] = [
    "ORD-01", "ORD-03", "ORD-04", "ORD-06", "ORD-09", "ORD-03", "ORD-04", "ORD-01", "ORD-03",
    "ORD-04", "ORD-06", "ORD-09", "ORD-03", "ORD-04",
];
// S3 imaging between the first and second contact: room for exactly one order.
const S3_MID: [&str; 6] = ["ORD-05", "ORD-07", "ORD-10", "ORD-05", "ORD-07", "ORD-10"];
const S1_PASSES: [&str; 7] = ["ORD-01", "ORD-05", "ORD-02", "ORD-10", "ORD-07", "ORD-05", "ORD-10"];
const S2_PASSES: [&str; 7] = ["ORD-06", "ORD-07", "ORD-08", "ORD-05", "ORD-09", "ORD-10", "ORD-07"];

fn satellite(id: &str, initial_storage_mb: i64) -> Satellite {
    Satellite {
        id: id.into(),
        storage_capacity_mb: CAPACITY_MB,
        initial_storage_mb,
        downlink_rate_kbps: RATE_KBPS,
        min_slew_s: SLEW_S,
        unavailable_windows: vec![],
    }
}

fn cloud(i: usize) -> i64 {
    (i as i64 * 37) % 190
}

pub fn canonical_scenario() -> ScenarioSpec {
    let orders = [
        ("ORD-01", 6000, 2),
        ("ORD-02", 5000, 1),
        ("ORD-03", 7000, 2),
        ("ORD-04", 6500, 2),
        ("ORD-05", 9000, 3),
        ("ORD-06", 5500, 1),
        ("ORD-07", 7500, 2),
        ("ORD-08", 4000, 1),
        ("ORD-09", 6000, 2),
        ("ORD-10", 7000, 1),
    ]
    .into_iter()
    .map(|(id, value_milli, priority)| Order {
        id: id.into(),
        value_milli,
        priority,
        data_mb: ORDER_MB,
        deadline_s: None,
    })
    .collect();

    let mut passes = Vec::new();
    let mut n = 0;
    for (i, o) in S1_PASSES.iter().enumerate() {
        let start = 2000 + 5000 * i as i64;
        passes.push(PassWindow::imaging(format!("S1-I{:02}", i + 1), "S1", start, start + 150, &[o], cloud(n)));
        n += 1;
    }
    for (i, o) in S2_PASSES.iter().enumerate() {
        // the last pass sits inside the slew margin of the one before it
        let start = if i == 6 { 28_700 } else { 3500 + 5000 * i as i64 };
        passes.push(PassWindow::imaging(format!("S2-I{:02}", i + 1), "S2", start, start + 150, &[o], cloud(n)));
        n += 1;
    }
    for (i, o) in S3_EARLY.iter().chain(S3_MID.iter()).enumerate() {
        let start = if i < S3_EARLY.len() {
            600 + 400 * i as i64
        } else {
            8000 + 400 * (i - S3_EARLY.len()) as i64
        };
        passes.push(PassWindow::imaging(format!("S3-I{:02}", i + 1), "S3", start, start + 120, &[o], cloud(n)));
        n += 1;
    }
    for (i, start) in [6500, 11_000, 20_000, 30_000].into_iter().enumerate() {
        passes.push(PassWindow::downlink(format!("S3-D{}", i + 1), "S3", "SVALBARD", start, start + 480));
    }

    let mut scenario = ScenarioSpec {
        name: "canonical-svalbard".into(),
        horizon_s: HORIZON_S,
        satellites: vec![satellite("S1", 3277), satellite("S2", 3277), satellite("S3", 6554)],
        stations: vec![GroundStation {
            id: "SVALBARD".into(),
            unavailable_windows: vec![],
        }],
        orders,
        passes,
    };
    scenario
        .normalize_and_validate()
        .expect("canonical scenario is valid");
    scenario
}

/// Two orders on one satellite with a single downlink large enough for both.
pub fn tiny_scenario() -> ScenarioSpec {
    let mut scenario = ScenarioSpec {
        name: "tiny-2".into(),
        horizon_s: 1000,
        satellites: vec![Satellite {
            id: "S1".into(),
            storage_capacity_mb: 2048,
            initial_storage_mb: 0,
            // 60 s at this rate moves 2048 MB
            downlink_rate_kbps: 273_067,
            min_slew_s: 0,
            unavailable_windows: vec![],
        }],
        stations: vec![GroundStation {
            id: "G1".into(),
            unavailable_windows: vec![],
        }],
        orders: vec![
            Order { id: "o1".into(), value_milli: 10_000, priority: 1, data_mb: 1024, deadline_s: None },
            Order { id: "o2".into(), value_milli: 5000, priority: 1, data_mb: 1024, deadline_s: None },
        ],
        passes: vec![
            PassWindow::imaging("p1", "S1", 0, 60, &["o1"], 0),
            PassWindow::imaging("p2", "S1", 100, 160, &["o2"], 0),
            PassWindow::downlink("q1", "S1", "G1", 300, 360),
        ],
    };
    scenario.normalize_and_validate().expect("tiny scenario is valid");
    scenario
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn structure_matches_instance_description() {
        let s = canonical_scenario();
        assert_eq!(s.satellites.len(), 3);
        assert_eq!(s.orders.len(), 10);
        assert_eq!(s.passes.len(), 38);
        assert_eq!(s.passes.iter().filter(|p| p.is_imaging()).count(), 34);
        let downlinks: Vec<_> = s.passes.iter().filter(|p| !p.is_imaging()).collect();
        assert_eq!(downlinks.len(), 4);
        assert!(downlinks.iter().all(|p| p.satellite_id == "S3"));
        assert!(s.orders.iter().all(|o| o.data_mb == 1843));
        let s3 = s.satellite("S3").unwrap();
        assert_eq!(s3.storage_capacity_mb - s3.initial_storage_mb, 1638);
        assert_eq!(downlinks[0].tx_mb, Some(900));
    }

    #[test]
    fn tiny_downlink_moves_all_data() {
        assert_eq!(tiny_scenario().pass("q1").unwrap().tx_mb, Some(2048));
    }
}
