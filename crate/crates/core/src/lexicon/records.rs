//! Annotation logs: JSONL files of [`AnnotationRecord`]s, and pairing the two
//! annotators' judgments for agreement statistics.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use super::{AnnotationRecord, Judgment};

#[derive(Debug, Error)]
pub enum RecordsError {
    #[error("line {line}: {reason}")]
    Malformed { line: usize, reason: String },
    #[error("expected exactly two annotators, found {0:?}")]
    AnnotatorCount(Vec<String>),
    #[error("annotator `{annotator}` judged `{item}` twice in round {round}")]
    DuplicateJudgment {
        annotator: String,
        item: String,
        round: u32,
    },
}

pub fn parse_annotation_log(text: &str) -> Result<Vec<AnnotationRecord>, RecordsError> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(idx, l)| {
            serde_json::from_str(l).map_err(|e| RecordsError::Malformed {
                line: idx + 1,
                reason: e.to_string(),
            })
        })
        .collect()
}

pub fn render_annotation_log(records: &[AnnotationRecord]) -> String {
    records
        .iter()
        .map(|r| serde_json::to_string(r).expect("records serialize") + "\n")
        .collect()
}

/// Reads a two-column `item<TAB>judgment` sheet as one annotator's round-1 records.
pub fn parse_judgment_sheet(
    text: &str,
    annotator: &str,
) -> Result<Vec<AnnotationRecord>, RecordsError> {
    let mut out = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        if raw.trim().is_empty() || (idx == 0 && raw.starts_with("item\t")) {
            continue;
        }
        let bad = |reason: String| RecordsError::Malformed { line, reason };
        let (item, judgment) = raw
            .split_once('\t')
            .ok_or_else(|| bad("expected item and judgment columns".into()))?;
        let judgment: Judgment = judgment.trim().parse().map_err(|e| bad(format!("{e}")))?;
        out.push(AnnotationRecord {
            item_id: item.to_owned(),
            annotator_id: annotator.to_owned(),
            judgment,
            timestamp: 0,
            round: 1,
        });
    }
    Ok(out)
}

/// Both annotators' judgments of one item in the latest round both completed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DualJudgment {
    pub item_id: String,
    pub round: u32,
    pub first: Judgment,
    pub second: Judgment,
}

/// Pairs judgments item by item. `annotators` fixes which one is "first"; when
/// `None`, the two distinct ids in the log are taken in sorted order. Items
/// without a round judged by both are skipped. Output is sorted by item id.
pub fn dual_judgments(
    records: &[AnnotationRecord],
    annotators: Option<(&str, &str)>,
) -> Result<Vec<DualJudgment>, RecordsError> {
    let (first, second) = match annotators {
        Some((a, b)) => (a.to_owned(), b.to_owned()),
        None => {
            let ids: BTreeSet<&str> = records.iter().map(|r| r.annotator_id.as_str()).collect();
            let ids: Vec<String> = ids.into_iter().map(str::to_owned).collect();
            if ids.len() != 2 {
                return Err(RecordsError::AnnotatorCount(ids));
            }
            (ids[0].clone(), ids[1].clone())
        }
    };
    // (item, round) -> [first, second]
    let mut slots: BTreeMap<(&str, u32), [Option<Judgment>; 2]> = BTreeMap::new();
    for r in records {
        let side = if r.annotator_id == first {
            0
        } else if r.annotator_id == second {
            1
        } else {
            continue;
        };
        let slot = &mut slots.entry((r.item_id.as_str(), r.round)).or_default()[side];
        if slot.is_some() {
            return Err(RecordsError::DuplicateJudgment {
                annotator: r.annotator_id.clone(),
                item: r.item_id.clone(),
                round: r.round,
            });
        }
        *slot = Some(r.judgment);
    }
    let mut latest: BTreeMap<&str, DualJudgment> = BTreeMap::new();
    for ((item, round), pair) in slots {
        if let [Some(a), Some(b)] = pair {
            // Rounds iterate in ascending order, so later rounds overwrite.
            latest.insert(
                item,
                DualJudgment {
                    item_id: item.to_owned(),
                    round,
                    first: a,
                    second: b,
                },
            );
        }
    }
    Ok(latest.into_values().collect())
}

/// Pairs two per-annotator record lists regardless of the ids they carry.
pub fn pair_sheets(
    first: &[AnnotationRecord],
    second: &[AnnotationRecord],
) -> Result<Vec<DualJudgment>, RecordsError> {
    let relabel = |records: &[AnnotationRecord], id: &str| -> Vec<AnnotationRecord> {
        records
            .iter()
            .cloned()
            .map(|mut r| {
                r.annotator_id = id.to_owned();
                r
            })
            .collect()
    };
    let mut all = relabel(first, "first");
    all.extend(relabel(second, "second"));
    dual_judgments(&all, Some(("first", "second")))
}
