//! Append-only event log and the task index rebuilt from it.

use std::collections::{BTreeMap, HashMap};
use std::fs::{self, File, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use polarlex_core::lexicon::{
    adjudicate, cohen_kappa, dual_judgments, AdjudicationOutcome, AnnotationRecord, Annotator,
    Judgment, KappaError, KappaOptions, KappaReport, Lexicon, LexiconEntry, Ngram, PolarityLabel,
    Provenance,
};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const LOG_FILE: &str = "events.jsonl";

/// Rounds an item may go through before double uncertainty leaves it unresolved.
pub const MAX_ROUNDS: u32 = 2;

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("{0}")]
    Invalid(String),
    #[error("unknown task `{0}`")]
    UnknownTask(String),
    #[error("unknown item `{0}`")]
    UnknownItem(String),
    #[error("annotator `{0}` is not on this task")]
    UnknownAnnotator(String),
    #[error("{0}")]
    Forbidden(String),
    #[error("{0}")]
    Conflict(String),
    #[error("event log line {line}: {reason}")]
    CorruptLog { line: usize, reason: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaskItem {
    pub item_id: String,
    pub ngram: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gloss: Option<String>,
    #[serde(default)]
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum Event {
    TaskCreated {
        task_id: String,
        items: Vec<TaskItem>,
        annotators: Vec<Annotator>,
        created_at: i64,
    },
    LabelSubmitted {
        task_id: String,
        record: AnnotationRecord,
    },
    Resolved {
        task_id: String,
        item_id: String,
        annotator_id: String,
        label: PolarityLabel,
        timestamp: i64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FinalBasis {
    Agreement,
    /// One annotator was uncertain; the other's label stands.
    Deferral,
    /// Disagreement settled in favour of the more experienced annotator.
    Seniority,
    /// Set explicitly by the senior annotator.
    Review,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "state", rename_all = "snake_case")]
pub enum ItemState {
    Unlabeled,
    SingleLabeled,
    Final {
        label: PolarityLabel,
        borderline: bool,
        basis: FinalBasis,
    },
    /// Waiting for labels in the given round.
    ReIteration {
        round: u32,
    },
    /// Still doubly uncertain after the last round.
    Unresolved,
}

impl ItemState {
    pub fn is_open(&self) -> bool {
        matches!(
            self,
            ItemState::Unlabeled | ItemState::SingleLabeled | ItemState::ReIteration { .. }
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ItemView {
    #[serde(flatten)]
    pub item: TaskItem,
    pub position: usize,
    pub round: u32,
    #[serde(flatten)]
    pub state: ItemState,
    /// Judgments of the current round, keyed by annotator.
    pub judgments: BTreeMap<String, Judgment>,
    pub reviewed: bool,
}

#[derive(Debug, Clone, PartialEq)]
struct ItemRecord {
    item: TaskItem,
    round: u32,
    state: ItemState,
    current: BTreeMap<String, AnnotationRecord>,
    reviewed: bool,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct Progress {
    pub total: usize,
    pub unlabeled: usize,
    pub single_labeled: usize,
    pub final_items: usize,
    pub reiteration: usize,
    pub unresolved: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Task {
    pub task_id: String,
    pub annotators: Vec<Annotator>,
    items: Vec<ItemRecord>,
    index: HashMap<String, usize>,
    history: Vec<AnnotationRecord>,
}

impl Task {
    fn item(&self, item_id: &str) -> Result<&ItemRecord, StoreError> {
        self.index
            .get(item_id)
            .map(|&i| &self.items[i])
            .ok_or_else(|| StoreError::UnknownItem(item_id.to_owned()))
    }

    pub fn check_annotator(&self, id: &str) -> Result<&Annotator, StoreError> {
        self.annotators
            .iter()
            .find(|a| a.id == id)
            .ok_or_else(|| StoreError::UnknownAnnotator(id.to_owned()))
    }

    pub fn senior(&self) -> &Annotator {
        self.annotators
            .iter()
            .min_by_key(|a| a.experience_rank)
            .expect("tasks have two annotators")
    }

    fn view(&self, position: usize) -> ItemView {
        let r = &self.items[position];
        ItemView {
            item: r.item.clone(),
            position,
            round: r.round,
            state: r.state,
            judgments: r
                .current
                .iter()
                .map(|(k, v)| (k.clone(), v.judgment))
                .collect(),
            reviewed: r.reviewed,
        }
    }

    pub fn items(&self) -> Vec<ItemView> {
        (0..self.items.len()).map(|i| self.view(i)).collect()
    }

    pub fn item_view(&self, item_id: &str) -> Result<ItemView, StoreError> {
        self.item(item_id)?;
        Ok(self.view(self.index[item_id]))
    }

    /// First open item, in task order, that `annotator` has not judged this round.
    pub fn next_for(&self, annotator: &str) -> Result<Option<ItemView>, StoreError> {
        self.check_annotator(annotator)?;
        Ok(self
            .items
            .iter()
            .position(|r| r.state.is_open() && !r.current.contains_key(annotator))
            .map(|i| self.view(i)))
    }

    pub fn remaining_for(&self, annotator: &str) -> usize {
        self.items
            .iter()
            .filter(|r| r.state.is_open() && !r.current.contains_key(annotator))
            .count()
    }

    pub fn progress(&self) -> Progress {
        let mut p = Progress {
            total: self.items.len(),
            ..Default::default()
        };
        for r in &self.items {
            match r.state {
                ItemState::Unlabeled => p.unlabeled += 1,
                ItemState::SingleLabeled => p.single_labeled += 1,
                ItemState::Final { .. } => p.final_items += 1,
                ItemState::ReIteration { .. } => p.reiteration += 1,
                ItemState::Unresolved => p.unresolved += 1,
            }
        }
        p
    }

    /// Every label ever submitted, in submission order.
    pub fn history(&self) -> &[AnnotationRecord] {
        &self.history
    }

    /// Kappa over the latest round each item was judged by both annotators.
    pub fn kappa(&self, options: &KappaOptions) -> Result<KappaReport, StoreError> {
        let order = (
            self.annotators[0].id.as_str(),
            self.annotators[1].id.as_str(),
        );
        let pairs: Vec<(Judgment, Judgment)> = dual_judgments(&self.history, Some(order))
            .map_err(|e| StoreError::Invalid(e.to_string()))?
            .into_iter()
            .map(|d| (d.first, d.second))
            .collect();
        if pairs.is_empty() {
            return Err(StoreError::Conflict(
                "no item has been labeled by both annotators yet".into(),
            ));
        }
        cohen_kappa(&pairs, options).map_err(|e| match e {
            KappaError::EmptyInput => {
                StoreError::Conflict("every dual-labeled item is borderline".into())
            }
            other => StoreError::Conflict(other.to_string()),
        })
    }

    /// Items whose last dual round disagreed or stayed uncertain and that the
    /// senior annotator has not reviewed yet.
    pub fn disagreements(&self) -> Vec<ItemView> {
        (0..self.items.len())
            .filter(|&i| {
                let r = &self.items[i];
                !r.reviewed
                    && matches!(
                        r.state,
                        ItemState::Unresolved
                            | ItemState::Final {
                                basis: FinalBasis::Seniority,
                                ..
                            }
                    )
            })
            .map(|i| self.view(i))
            .collect()
    }

    /// Final items as a lexicon. Bigram keys are marked as extracted bigrams,
    /// unigrams as manual entries.
    pub fn export(&self) -> Lexicon {
        self.items
            .iter()
            .filter_map(|r| match r.state {
                ItemState::Final { label, .. } => {
                    let ngram = Ngram::from_key(&r.item.ngram).ok()?;
                    let provenance = if ngram.is_bigram() {
                        Provenance::BigramExtraction
                    } else {
                        Provenance::Manual
                    };
                    Some(LexiconEntry::new(
                        ngram,
                        label,
                        provenance,
                        r.item.gloss.clone(),
                    ))
                }
                _ => None,
            })
            .collect()
    }
}

/// Tasks materialized from the event log. All mutation goes through [`Store::append`].
#[derive(Debug)]
pub struct Store {
    path: Option<PathBuf>,
    file: Option<File>,
    tasks: BTreeMap<String, Task>,
    events: usize,
}

fn now_millis() -> i64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_millis() as i64)
        .unwrap_or(0)
}

impl Store {
    /// A store that keeps events in memory only.
    pub fn in_memory() -> Self {
        Self {
            path: None,
            file: None,
            tasks: BTreeMap::new(),
            events: 0,
        }
    }

    /// Opens (or creates) `dir/events.jsonl` and replays it. A torn final line,
    /// left by a crash mid-write, is cut off; any other bad line is an error.
    pub fn open(dir: impl AsRef<Path>) -> Result<Self, StoreError> {
        fs::create_dir_all(dir.as_ref())?;
        let path = dir.as_ref().join(LOG_FILE);
        let text = if path.exists() {
            fs::read_to_string(&path)?
        } else {
            String::new()
        };
        let mut store = Self::in_memory();
        let mut good_len = 0usize;
        let lines: Vec<&str> = text.split_inclusive('\n').collect();
        for (idx, line) in lines.iter().enumerate() {
            let complete = line.ends_with('\n');
            let body = line.trim_end_matches(['\n', '\r']);
            if body.trim().is_empty() {
                good_len += line.len();
                continue;
            }
            let parsed = serde_json::from_str::<Event>(body)
                .map_err(|e| e.to_string())
                .and_then(|ev| store.apply(ev).map_err(|e| e.to_string()));
            match parsed {
                Ok(()) => good_len += line.len(),
                Err(reason) if !complete && idx + 1 == lines.len() => {
                    log::warn!("dropping torn final event log line: {reason}");
                    break;
                }
                Err(reason) => {
                    return Err(StoreError::CorruptLog {
                        line: idx + 1,
                        reason,
                    })
                }
            }
        }
        let file = OpenOptions::new().create(true).append(true).open(&path)?;
        if good_len < text.len() {
            file.set_len(good_len as u64)?;
        } else if !text.is_empty() && !text.ends_with('\n') {
            // A complete event without its newline: finish the line.
            (&file).write_all(b"\n")?;
        }
        store.path = Some(path);
        store.file = Some(file);
        Ok(store)
    }

    pub fn path(&self) -> Option<&Path> {
        self.path.as_deref()
    }

    pub fn event_count(&self) -> usize {
        self.events
    }

    pub fn task(&self, id: &str) -> Result<&Task, StoreError> {
        self.tasks
            .get(id)
            .ok_or_else(|| StoreError::UnknownTask(id.to_owned()))
    }

    pub fn task_ids(&self) -> impl Iterator<Item = &str> {
        self.tasks.keys().map(String::as_str)
    }

    /// Applies `event` and then writes it to the log. If the write fails the
    /// index is rebuilt from disk, so memory never runs ahead of the log.
    fn append(&mut self, event: Event) -> Result<(), StoreError> {
        self.apply(event.clone())?;
        let Some(file) = self.file.as_mut() else {
            return Ok(());
        };
        let mut line = serde_json::to_string(&event).expect("events serialize");
        line.push('\n');
        let written = file
            .write_all(line.as_bytes())
            .and_then(|_| file.sync_data());
        if let Err(e) = written {
            let dir = self
                .path
                .as_ref()
                .and_then(|p| p.parent())
                .map(Path::to_path_buf)
                .expect("file-backed stores have a path");
            *self = Store::open(dir)?;
            return Err(e.into());
        }
        Ok(())
    }

    fn apply(&mut self, event: Event) -> Result<(), StoreError> {
        let id = event_task(&event).to_owned();
        let mut slot = self.tasks.remove(&id);
        let result = check(&mut slot, &event);
        if let Some(task) = slot {
            self.tasks.insert(id, task);
        }
        result?;
        self.events += 1;
        Ok(())
    }

    pub fn create_task(
        &mut self,
        items: Vec<TaskItem>,
        annotators: Vec<Annotator>,
    ) -> Result<String, StoreError> {
        let task_id = format!("task-{:04}", self.tasks.len() + 1);
        self.append(Event::TaskCreated {
            task_id: task_id.clone(),
            items,
            annotators,
            created_at: now_millis(),
        })?;
        Ok(task_id)
    }

    pub fn submit_label(
        &mut self,
        task_id: &str,
        item_id: &str,
        annotator: &str,
        judgment: Judgment,
    ) -> Result<ItemView, StoreError> {
        let round = self.task(task_id)?.item(item_id)?.round;
        self.append(Event::LabelSubmitted {
            task_id: task_id.to_owned(),
            record: AnnotationRecord {
                item_id: item_id.to_owned(),
                annotator_id: annotator.to_owned(),
                judgment,
                timestamp: now_millis(),
                round,
            },
        })?;
        self.task(task_id)?.item_view(item_id)
    }

    pub fn resolve(
        &mut self,
        task_id: &str,
        item_id: &str,
        annotator: &str,
        label: PolarityLabel,
    ) -> Result<ItemView, StoreError> {
        self.append(Event::Resolved {
            task_id: task_id.to_owned(),
            item_id: item_id.to_owned(),
            annotator_id: annotator.to_owned(),
            label,
            timestamp: now_millis(),
        })?;
        self.task(task_id)?.item_view(item_id)
    }
}

fn event_task(event: &Event) -> &str {
    match event {
        Event::TaskCreated { task_id, .. }
        | Event::LabelSubmitted { task_id, .. }
        | Event::Resolved { task_id, .. } => task_id,
    }
}

/// Applies `event` to `slot` (the task it names, if it exists), or reports why
/// the event is not allowed. `slot` is left untouched on error.
fn check(slot: &mut Option<Task>, event: &Event) -> Result<(), StoreError> {
    match event {
        Event::TaskCreated {
            task_id,
            items,
            annotators,
            ..
        } => {
            if slot.is_some() {
                return Err(StoreError::Conflict(format!(
                    "task `{task_id}` already exists"
                )));
            }
            *slot = Some(new_task(task_id, items, annotators)?);
            Ok(())
        }
        Event::LabelSubmitted { task_id, record } => {
            let task = slot
                .as_mut()
                .ok_or_else(|| StoreError::UnknownTask(task_id.clone()))?;
            label(task, record)
        }
        Event::Resolved {
            task_id,
            item_id,
            annotator_id,
            label,
            ..
        } => {
            let task = slot
                .as_mut()
                .ok_or_else(|| StoreError::UnknownTask(task_id.clone()))?;
            task.check_annotator(annotator_id)?;
            if task.senior().id != *annotator_id {
                return Err(StoreError::Forbidden(format!(
                    "only the senior annotator `{}` can resolve items",
                    task.senior().id
                )));
            }
            let pos = *task
                .index
                .get(item_id)
                .ok_or_else(|| StoreError::UnknownItem(item_id.clone()))?;
            let r = &mut task.items[pos];
            if r.state.is_open() {
                return Err(StoreError::Conflict(format!(
                    "item `{item_id}` is still being labeled"
                )));
            }
            r.state = ItemState::Final {
                label: *label,
                borderline: false,
                basis: FinalBasis::Review,
            };
            r.reviewed = true;
            Ok(())
        }
    }
}

fn new_task(
    task_id: &str,
    items: &[TaskItem],
    annotators: &[Annotator],
) -> Result<Task, StoreError> {
    let invalid = |m: String| Err(StoreError::Invalid(m));
    if items.is_empty() {
        return invalid("a task needs at least one item".into());
    }
    if annotators.len() != 2 {
        return invalid(format!(
            "a task needs exactly 2 annotators, got {}",
            annotators.len()
        ));
    }
    if annotators[0].id == annotators[1].id {
        return invalid("annotator ids must differ".into());
    }
    if annotators[0].experience_rank == annotators[1].experience_rank {
        return invalid("annotators must have distinct experience ranks".into());
    }
    let mut index = HashMap::with_capacity(items.len());
    for (i, item) in items.iter().enumerate() {
        if item.item_id.is_empty() {
            return invalid(format!("item {} has an empty id", i + 1));
        }
        if let Err(e) = Ngram::from_key(&item.ngram) {
            return invalid(format!("item `{}`: {e}", item.item_id));
        }
        if index.insert(item.item_id.clone(), i).is_some() {
            return invalid(format!("duplicate item id `{}`", item.item_id));
        }
    }
    Ok(Task {
        task_id: task_id.to_owned(),
        annotators: annotators.to_vec(),
        items: items
            .iter()
            .map(|item| ItemRecord {
                item: item.clone(),
                round: 1,
                state: ItemState::Unlabeled,
                current: BTreeMap::new(),
                reviewed: false,
            })
            .collect(),
        index,
        history: Vec::new(),
    })
}

fn label(task: &mut Task, record: &AnnotationRecord) -> Result<(), StoreError> {
    task.check_annotator(&record.annotator_id)?;
    let annotators = task.annotators.clone();
    let pos = *task
        .index
        .get(&record.item_id)
        .ok_or_else(|| StoreError::UnknownItem(record.item_id.clone()))?;
    let r = &mut task.items[pos];
    if !r.state.is_open() {
        return Err(StoreError::Conflict(format!(
            "item `{}` is closed",
            record.item_id
        )));
    }
    if record.round != r.round {
        return Err(StoreError::Conflict(format!(
            "item `{}` is in round {}, not {}",
            record.item_id, r.round, record.round
        )));
    }
    if r.current.contains_key(&record.annotator_id) {
        return Err(StoreError::Conflict(format!(
            "`{}` already labeled `{}` in round {}",
            record.annotator_id, record.item_id, r.round
        )));
    }
    r.current
        .insert(record.annotator_id.clone(), record.clone());
    if r.current.len() == 1 {
        r.state = ItemState::SingleLabeled;
    } else {
        let mut both = r.current.values();
        let (a, b) = (both.next().unwrap(), both.next().unwrap());
        let outcome =
            adjudicate(a, b, &annotators).map_err(|e| StoreError::Invalid(e.to_string()))?;
        r.state = match outcome {
            AdjudicationOutcome::Final { label, borderline } => ItemState::Final {
                label,
                borderline,
                basis: if borderline {
                    FinalBasis::Deferral
                } else if a.judgment == b.judgment {
                    FinalBasis::Agreement
                } else {
                    FinalBasis::Seniority
                },
            },
            AdjudicationOutcome::ReIterate if r.round < MAX_ROUNDS => {
                r.round += 1;
                r.current.clear();
                ItemState::ReIteration { round: r.round }
            }
            AdjudicationOutcome::ReIterate => ItemState::Unresolved,
        };
    }
    task.history.push(record.clone());
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn roster() -> Vec<Annotator> {
        vec![
            Annotator {
                id: "ravi".into(),
                experience_rank: 2,
            },
            Annotator {
                id: "sita".into(),
                experience_rank: 1,
            },
        ]
    }

    fn items(keys: &[&str]) -> Vec<TaskItem> {
        keys.iter()
            .map(|k| TaskItem {
                item_id: k.to_string(),
                ngram: k.to_string(),
                gloss: None,
                count: 1,
            })
            .collect()
    }

    #[test]
    fn create_validates() {
        let mut s = Store::in_memory();
        assert!(matches!(
            s.create_task(vec![], roster()),
            Err(StoreError::Invalid(_))
        ));
        assert!(s
            .create_task(items(&["a"]), roster()[..1].to_vec())
            .is_err());
        assert!(s.create_task(items(&["a", "a"]), roster()).is_err());
        let mut same_rank = roster();
        same_rank[0].experience_rank = 1;
        assert!(s.create_task(items(&["a"]), same_rank).is_err());
        let id = s.create_task(items(&["a", "b", "c"]), roster()).unwrap();
        assert_eq!(s.task(&id).unwrap().progress().unlabeled, 3);
        assert_eq!(s.event_count(), 1);
    }

    #[test]
    fn seniority_and_reiteration() {
        use Judgment::*;
        use PolarityLabel::*;
        let mut s = Store::in_memory();
        let id = s.create_task(items(&["a", "b"]), roster()).unwrap();
        s.submit_label(&id, "a", "ravi", Label(Positive)).unwrap();
        let v = s.submit_label(&id, "a", "sita", Label(Negative)).unwrap();
        assert_eq!(
            v.state,
            ItemState::Final {
                label: Negative,
                borderline: false,
                basis: FinalBasis::Seniority
            }
        );
        s.submit_label(&id, "b", "ravi", Uncertain).unwrap();
        let v = s.submit_label(&id, "b", "sita", Uncertain).unwrap();
        assert_eq!(v.state, ItemState::ReIteration { round: 2 });
        assert_eq!(
            s.task(&id)
                .unwrap()
                .next_for("ravi")
                .unwrap()
                .unwrap()
                .item
                .item_id,
            "b"
        );
        s.submit_label(&id, "b", "ravi", Uncertain).unwrap();
        let v = s.submit_label(&id, "b", "sita", Uncertain).unwrap();
        assert_eq!(v.state, ItemState::Unresolved);
        assert!(s.task(&id).unwrap().next_for("ravi").unwrap().is_none());
        assert_eq!(s.task(&id).unwrap().disagreements().len(), 2);
        assert!(matches!(
            s.resolve(&id, "b", "ravi", Neutral),
            Err(StoreError::Forbidden(_))
        ));
        s.resolve(&id, "b", "sita", Neutral).unwrap();
        assert_eq!(s.task(&id).unwrap().disagreements().len(), 1);
        assert_eq!(s.task(&id).unwrap().export().len(), 2);
    }

    #[test]
    fn rejected_events_leave_no_trace() {
        let mut s = Store::in_memory();
        let id = s.create_task(items(&["a"]), roster()).unwrap();
        s.submit_label(&id, "a", "ravi", Judgment::Uncertain)
            .unwrap();
        let before = s.task(&id).unwrap().clone();
        assert!(matches!(
            s.submit_label(&id, "a", "ravi", Judgment::Uncertain),
            Err(StoreError::Conflict(_))
        ));
        assert!(matches!(
            s.submit_label(&id, "a", "nobody", Judgment::Uncertain),
            Err(StoreError::UnknownAnnotator(_))
        ));
        assert_eq!(s.task(&id).unwrap(), &before);
        assert_eq!(s.event_count(), 2);
    }
}
