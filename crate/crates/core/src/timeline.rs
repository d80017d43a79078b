//! Merges every timestamped record into one UTC-ordered event list.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::model::{ArtifactRecord, EpochInstant, Payload, RecordKind, SourceLocator};
use crate::phi::redact;

/// A record together with the application that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct AppRecord {
    pub app: String,
    pub record: ArtifactRecord,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TimelineEvent {
    pub at: EpochInstant,
    pub app: String,
    pub kind: RecordKind,
    pub summary: String,
    pub locator: SourceLocator,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Timeline {
    pub events: Vec<TimelineEvent>,
    /// Records that carry no timestamp.
    pub excluded: usize,
}

/// Ordering: UTC second, app, locator detail; remaining ties fall to the
/// millisecond remainder and then the other fields, so the order is total.
pub fn event_order(a: &TimelineEvent, b: &TimelineEvent) -> Ordering {
    a.at.utc
        .cmp(&b.at.utc)
        .then_with(|| a.app.cmp(&b.app))
        .then_with(|| a.locator.detail.cmp(&b.locator.detail))
        .then_with(|| a.at.remainder_ms.cmp(&b.at.remainder_ms))
        .then_with(|| a.locator.cmp(&b.locator))
        .then_with(|| a.kind.cmp(&b.kind))
        .then_with(|| a.summary.cmp(&b.summary))
        .then_with(|| a.at.raw_value.cmp(&b.at.raw_value))
}

pub fn build_timeline(records: &[AppRecord], redacted: bool) -> Timeline {
    let mut timeline = Timeline::default();
    for r in records {
        match r.record.payload.timeline_instant() {
            Some(at) => timeline.events.push(TimelineEvent {
                at: at.clone(),
                app: r.app.clone(),
                kind: r.record.kind(),
                summary: summarize(&r.record.payload, redacted),
                locator: r.record.locator.clone(),
            }),
            None => timeline.excluded += 1,
        }
    }
    timeline.events.sort_by(event_order);
    timeline
}

fn summarize(payload: &Payload, redacted: bool) -> String {
    if !redacted {
        return payload.summary();
    }
    match payload {
        Payload::Device(d) => format!("device {} ({}) last used", d.id, redact(&d.mac_address)),
        Payload::RawHit(h) => format!("{} hit {}", h.pattern.as_str(), redact(&h.text)),
        other => other.summary(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{normalize_timestamp, ContainerKind, HitPattern, RawHit};
    use crate::time::UtcInstant;
    use alloc::borrow::ToOwned;
    use alloc::vec;

    fn hit(app: &str, raw: Option<i64>, detail: &str) -> AppRecord {
        AppRecord {
            app: app.to_owned(),
            record: ArtifactRecord::new(
                Payload::RawHit(RawHit {
                    pattern: HitPattern::UnmappedMeasureCode,
                    text: "type 9".into(),
                    measure_code: Some(9),
                    measured_at: raw.map(|r| normalize_timestamp(r).unwrap()),
                }),
                SourceLocator {
                    package_name: app.to_owned(),
                    relative_path: "x.db".into(),
                    container: ContainerKind::SqliteTable,
                    detail: detail.to_owned(),
                },
                UtcInstant::EPOCH,
            ),
        }
    }

    #[test]
    fn empty() {
        assert_eq!(build_timeline(&[], true), Timeline::default());
    }

    #[test]
    fn mixed_units_and_ties() {
        let recs = vec![
            hit("b", Some(1_542_127_729_662), "m:2"),
            hit("a", Some(1_530_829_549), "m:9"),
            hit("a", Some(1_530_829_549), "m:1"),
            hit("a", None, "m:3"),
        ];
        let t = build_timeline(&recs, false);
        assert_eq!(t.excluded, 1);
        let details: Vec<&str> = t.events.iter().map(|e| e.locator.detail.as_str()).collect();
        assert_eq!(details, ["m:1", "m:9", "m:2"]);
    }
}
