use serde::{Deserialize, Serialize};
use uuid::Uuid;

use fillin_core::graph::{LabeledGraph, Pair};
use fillin_core::pcm::{llsm_incomplete, IncompletePcm};

use crate::error::{ElicitError, Result};
use crate::reference::{ReferenceRuns, ReliabilityHint};
use crate::sequences::{select_sequence, SequenceKind, SequencePlan};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SessionState {
    Active,
    Abandoned,
    Complete,
}

/// A pair as sent over the wire: zero-based indices plus the one-based
/// `aIJ` label.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WirePair {
    pub i: usize,
    pub j: usize,
    pub label: String,
}

impl From<Pair> for WirePair {
    fn from(p: Pair) -> Self {
        WirePair {
            i: p.0,
            j: p.1,
            label: p.to_string(),
        }
    }
}

/// Accepted forms for a pair in requests: `[i, j]`, `{"i": .., "j": ..}`,
/// or a label such as `"a12"`. Indices are zero-based; `i > j` is allowed
/// and means the reciprocal comparison.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PairInput {
    Indices([usize; 2]),
    Object { i: usize, j: usize },
    Label(String),
}

impl PairInput {
    /// `(row, column)` as given.
    pub fn oriented(&self) -> Result<(usize, usize)> {
        match self {
            PairInput::Indices([i, j]) | PairInput::Object { i, j } => Ok((*i, *j)),
            PairInput::Label(s) => {
                let digits = s.strip_prefix('a').unwrap_or(s);
                let bad = || ElicitError::Validation(format!("cannot read pair label {s:?}"));
                // labels are two one-digit items, items 1 through 9
                let mut it = digits.chars().map(|c| c.to_digit(10));
                match (it.next(), it.next(), it.next()) {
                    (Some(Some(a)), Some(Some(b)), None) if a >= 1 && b >= 1 => {
                        Ok((a as usize - 1, b as usize - 1))
                    }
                    _ => Err(bad()),
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Answer {
    pub pair: Pair,
    /// How many times item `pair.0` is preferred to item `pair.1`.
    pub value: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub idempotency_key: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LiveEstimate {
    pub state: SessionState,
    pub e_answered: usize,
    pub connected: bool,
    /// Present iff `connected`.
    pub weights: Option<Vec<f64>>,
    /// Connected components of the answered comparisons when they do not
    /// yet connect every item.
    pub components: Option<Vec<Vec<usize>>>,
    pub reliability_hint: Option<ReliabilityHint>,
    pub extrapolated: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NextQuestion {
    pub done: bool,
    pub pair: Option<WirePair>,
    /// Everything answerable right now; `pair` is the smallest of these.
    pub allowed_pairs: Vec<WirePair>,
    pub group: Option<usize>,
    pub answered: usize,
    pub total: usize,
}

#[derive(Debug, Clone)]
pub struct Session {
    pub id: Uuid,
    pub n: usize,
    pub item_labels: Vec<String>,
    pub plan: SequencePlan,
    pub answers: Vec<Answer>,
    pub state: SessionState,
    ipcm: IncompletePcm,
}

impl Session {
    pub fn new(id: Uuid, n: usize, item_labels: Option<Vec<String>>, budget: Option<usize>) -> Result<Session> {
        let plan = select_sequence(n, budget)?;
        Session::with_plan(id, item_labels, plan)
    }

    pub fn with_plan(id: Uuid, item_labels: Option<Vec<String>>, plan: SequencePlan) -> Result<Session> {
        let n = plan.n;
        let item_labels = match item_labels {
            Some(l) if l.len() != n => {
                return Err(ElicitError::Validation(format!(
                    "expected {n} item labels, got {}",
                    l.len()
                )))
            }
            Some(l) => l,
            None => (1..=n).map(|i| format!("item {i}")).collect(),
        };
        Ok(Session {
            id,
            n,
            item_labels,
            plan,
            answers: Vec::new(),
            state: SessionState::Active,
            ipcm: IncompletePcm::new(n)?,
        })
    }

    pub fn answered(&self) -> &LabeledGraph {
        self.ipcm.graph()
    }

    fn is_answered(&self, p: Pair) -> bool {
        self.ipcm.is_known(p.0, p.1)
    }

    /// Index of the first group with unanswered pairs.
    pub fn current_group(&self) -> Option<usize> {
        self.plan
            .groups
            .iter()
            .position(|g| g.iter().any(|&p| !self.is_answered(p)))
    }

    pub fn allowed_pairs(&self) -> Vec<Pair> {
        let Some(k) = self.current_group() else {
            return Vec::new();
        };
        let mut out: Vec<Pair> = self.plan.groups[k]
            .iter()
            .copied()
            .filter(|&p| !self.is_answered(p))
            .collect();
        out.sort();
        out
    }

    pub fn next_question(&self) -> Result<NextQuestion> {
        if self.state == SessionState::Abandoned {
            return Err(ElicitError::State("session was abandoned".into()));
        }
        let allowed = self.allowed_pairs();
        Ok(NextQuestion {
            done: allowed.is_empty(),
            pair: allowed.first().map(|&p| p.into()),
            allowed_pairs: allowed.into_iter().map(Into::into).collect(),
            group: self.current_group(),
            answered: self.answers.len(),
            total: self.plan.len(),
        })
    }

    /// The stored answer for a repeated idempotency key, if any.
    pub fn replayed(&self, key: Option<&str>) -> Option<&Answer> {
        let key = key?;
        self.answers
            .iter()
            .find(|a| a.idempotency_key.as_deref() == Some(key))
    }

    /// Validates a submission and normalizes it to an upper-triangle pair.
    pub fn check_answer(&self, pair: &PairInput, value: f64, key: Option<String>) -> Result<Answer> {
        if self.state != SessionState::Active {
            return Err(ElicitError::State(format!("session is {:?}", self.state).to_lowercase()));
        }
        if !(value.is_finite() && value > 0.0) {
            return Err(ElicitError::Validation(format!(
                "comparison value must be a positive number, got {value}"
            )));
        }
        let (r, c) = pair.oriented()?;
        if r == c || r >= self.n || c >= self.n {
            return Err(ElicitError::Validation(format!(
                "({r}, {c}) is not a pair of distinct items below {}",
                self.n
            )));
        }
        let (p, v) = if r < c { (Pair(r, c), value) } else { (Pair(c, r), 1.0 / value) };
        let allowed = self.allowed_pairs();
        if !allowed.contains(&p) {
            let message = if self.is_answered(p) {
                format!("{p} is already answered")
            } else {
                format!("{p} is not askable yet")
            };
            return Err(ElicitError::Sequencing { message, allowed });
        }
        Ok(Answer {
            pair: p,
            value: v,
            idempotency_key: key,
        })
    }

    /// Records a checked answer.
    pub fn apply_answer(&mut self, answer: Answer) -> Result<()> {
        self.ipcm.set(answer.pair, answer.value)?;
        self.answers.push(answer);
        if self.current_group().is_none() {
            self.state = SessionState::Complete;
        }
        Ok(())
    }

    pub fn check_abandon(&self) -> Result<()> {
        match self.state {
            SessionState::Active => Ok(()),
            s => Err(ElicitError::State(format!("session is already {s:?}").to_lowercase())),
        }
    }

    pub fn apply_abandon(&mut self) {
        self.state = SessionState::Abandoned;
    }

    pub fn estimate(&self, refs: &ReferenceRuns) -> Result<LiveEstimate> {
        let g = self.answered();
        let connected = g.is_connected();
        let weights = if connected {
            Some(llsm_incomplete(&self.ipcm)?.into_vec())
        } else {
            None
        };
        Ok(LiveEstimate {
            state: self.state,
            e_answered: g.edge_count(),
            connected,
            weights,
            components: (!connected).then(|| g.components()),
            reliability_hint: refs.hint(g),
            extrapolated: self.plan.extrapolated || self.plan.kind == SequenceKind::Heuristic,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn session(n: usize, budget: Option<usize>) -> Session {
        Session::new(Uuid::nil(), n, None, budget).unwrap()
    }

    fn answer(s: &mut Session, p: PairInput, v: f64) -> Result<()> {
        let a = s.check_answer(&p, v, None)?;
        s.apply_answer(a)
    }

    #[test]
    fn star_budget_gives_exact_weights() {
        let mut s = session(4, Some(3));
        for (j, v) in [(1, 2.0), (2, 4.0), (3, 8.0)] {
            answer(&mut s, PairInput::Indices([0, j]), v).unwrap();
        }
        assert_eq!(s.state, SessionState::Complete);
        let est = s.estimate(&ReferenceRuns::default()).unwrap();
        let w = est.weights.unwrap();
        let raw = [1.0, 0.5, 0.25, 0.125];
        let total: f64 = raw.iter().sum();
        for (a, b) in w.iter().zip(raw) {
            assert!((a - b / total).abs() < 1e-12);
        }
    }

    #[test]
    fn groups_are_enforced() {
        let mut s = session(4, None);
        assert_eq!(s.next_question().unwrap().pair.unwrap().label, "a12");
        let err = answer(&mut s, PairInput::Label("a13".into()), 2.0).unwrap_err();
        match err {
            ElicitError::Sequencing { allowed, .. } => assert_eq!(allowed.len(), 4),
            other => panic!("{other:?}"),
        }
        // any order inside the group
        answer(&mut s, PairInput::Label("a34".into()), 2.0).unwrap();
        answer(&mut s, PairInput::Object { i: 1, j: 0 }, 0.5).unwrap();
        assert_eq!(s.answers[1].pair, Pair(0, 1));
        assert_eq!(s.answers[1].value, 2.0);
        assert!(matches!(
            answer(&mut s, PairInput::Label("a12".into()), 2.0),
            Err(ElicitError::Sequencing { .. })
        ));
        assert!(matches!(
            answer(&mut s, PairInput::Label("a23".into()), 0.0),
            Err(ElicitError::Validation(_))
        ));
    }

    #[test]
    fn abandon_is_terminal() {
        let mut s = session(5, None);
        let est = s.estimate(&ReferenceRuns::default()).unwrap();
        assert!(!est.connected && est.weights.is_none());
        assert_eq!(est.components.unwrap().len(), 5);
        s.check_abandon().unwrap();
        s.apply_abandon();
        assert!(s.check_abandon().is_err());
        assert!(s.next_question().is_err());
        assert!(matches!(
            s.check_answer(&PairInput::Label("a14".into()), 1.0, None),
            Err(ElicitError::State(_))
        ));
    }

    #[test]
    fn labels() {
        assert_eq!(PairInput::Label("a25".into()).oriented().unwrap(), (1, 4));
        assert_eq!(PairInput::Label("31".into()).oriented().unwrap(), (2, 0));
        assert!(PairInput::Label("a1".into()).oriented().is_err());
        assert!(PairInput::Label("a01".into()).oriented().is_err());
        assert!(Session::new(Uuid::nil(), 3, Some(vec!["x".into()]), None).is_err());
    }
}
