use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{AnnotationRecord, Annotator, Judgment, PolarityLabel};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum AdjudicationError {
    #[error("records refer to different items (`{0}` vs `{1}`)")]
    ItemMismatch(String, String),
    #[error("both records come from annotator `{0}`")]
    SameAnnotator(String),
    #[error("annotator `{0}` is not in the roster")]
    UnknownAnnotator(String),
    #[error("annotators `{0}` and `{1}` share an experience rank")]
    AmbiguousSeniority(String, String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum AdjudicationOutcome {
    /// `borderline` is set when exactly one annotator was uncertain.
    Final {
        label: PolarityLabel,
        borderline: bool,
    },
    ReIterate,
}

/// Resolves two annotators' judgments of one item.
///
/// Agreement finalizes; a disagreement goes to the more senior annotator; a single
/// Uncertain defers to the other judgment; two Uncertains send the item back for
/// another round.
pub fn adjudicate(
    a: &AnnotationRecord,
    b: &AnnotationRecord,
    annotators: &[Annotator],
) -> Result<AdjudicationOutcome, AdjudicationError> {
    if a.item_id != b.item_id {
        return Err(AdjudicationError::ItemMismatch(
            a.item_id.clone(),
            b.item_id.clone(),
        ));
    }
    if a.annotator_id == b.annotator_id {
        return Err(AdjudicationError::SameAnnotator(a.annotator_id.clone()));
    }
    let rank = |id: &str| {
        annotators
            .iter()
            .find(|x| x.id == id)
            .map(|x| x.experience_rank)
            .ok_or_else(|| AdjudicationError::UnknownAnnotator(id.to_owned()))
    };
    let (rank_a, rank_b) = (rank(&a.annotator_id)?, rank(&b.annotator_id)?);

    Ok(match (a.judgment, b.judgment) {
        (Judgment::Uncertain, Judgment::Uncertain) => AdjudicationOutcome::ReIterate,
        (Judgment::Uncertain, Judgment::Label(label))
        | (Judgment::Label(label), Judgment::Uncertain) => AdjudicationOutcome::Final {
            label,
            borderline: true,
        },
        (Judgment::Label(la), Judgment::Label(lb)) if la == lb => AdjudicationOutcome::Final {
            label: la,
            borderline: false,
        },
        (Judgment::Label(la), Judgment::Label(lb)) => {
            let label = match rank_a.cmp(&rank_b) {
                std::cmp::Ordering::Less => la,
                std::cmp::Ordering::Greater => lb,
                std::cmp::Ordering::Equal => {
                    return Err(AdjudicationError::AmbiguousSeniority(
                        a.annotator_id.clone(),
                        b.annotator_id.clone(),
                    ))
                }
            };
            AdjudicationOutcome::Final {
                label,
                borderline: false,
            }
        }
    })
}
