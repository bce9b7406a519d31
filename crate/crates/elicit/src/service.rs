//! Session registry shared by the HTTP handlers.

use std::collections::HashMap;
use std::path::Path;
use std::sync::{Arc, Mutex, RwLock};

use serde::{Deserialize, Serialize};
use uuid::Uuid;

use crate::error::{ElicitError, Result};
use crate::journal::{Event, Journal};
use crate::reference::ReferenceRuns;
use crate::session::{Answer, LiveEstimate, NextQuestion, PairInput, Session, SessionState};
use crate::sequences::{select_sequence, SequenceKind};

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct CreateSession {
    pub n: usize,
    #[serde(default)]
    pub item_labels: Option<Vec<String>>,
    /// Number of comparisons the respondent is willing to make.
    #[serde(default)]
    pub budget: Option<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SubmitAnswer {
    pub pair: PairInput,
    pub value: f64,
    #[serde(default)]
    pub idempotency_key: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SessionView {
    pub id: Uuid,
    pub n: usize,
    pub item_labels: Vec<String>,
    pub kind: SequenceKind,
    pub state: SessionState,
    pub total: usize,
    pub answers: Vec<Answer>,
    pub estimate: LiveEstimate,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SubmitOutcome {
    /// False when the request repeated an idempotency key.
    pub recorded: bool,
    pub answer: Answer,
    pub next: NextQuestion,
    pub estimate: LiveEstimate,
}

pub struct Service {
    sessions: RwLock<HashMap<Uuid, Arc<Mutex<Session>>>>,
    journal: Option<Mutex<Journal>>,
    refs: ReferenceRuns,
}

impl Service {
    /// Sessions live only in memory.
    pub fn in_memory(refs: ReferenceRuns) -> Service {
        Service {
            sessions: RwLock::default(),
            journal: None,
            refs,
        }
    }

    /// Sessions are journaled to `path` and restored from it.
    pub fn persistent(path: impl AsRef<Path>, refs: ReferenceRuns) -> Result<Service> {
        let (journal, events) = Journal::open(path)?;
        let mut sessions: HashMap<Uuid, Session> = HashMap::new();
        for ev in events {
            match ev {
                Event::Created { id, item_labels, plan } => {
                    sessions.insert(id, Session::with_plan(id, Some(item_labels), plan)?);
                }
                Event::Answered { id, pair, value, idempotency_key } => {
                    let s = sessions.get_mut(&id).ok_or_else(|| replay_error(id))?;
                    s.apply_answer(Answer { pair, value, idempotency_key })?;
                }
                Event::Abandoned { id } => {
                    sessions.get_mut(&id).ok_or_else(|| replay_error(id))?.apply_abandon();
                }
            }
        }
        tracing::info!(sessions = sessions.len(), "journal replayed");
        Ok(Service {
            sessions: RwLock::new(
                sessions
                    .into_iter()
                    .map(|(k, v)| (k, Arc::new(Mutex::new(v))))
                    .collect(),
            ),
            journal: Some(Mutex::new(journal)),
            refs,
        })
    }

    pub fn references(&self) -> &ReferenceRuns {
        &self.refs
    }

    fn record(&self, ev: &Event) -> Result<()> {
        match &self.journal {
            Some(j) => j.lock().expect("journal lock").append(ev),
            None => Ok(()),
        }
    }

    fn get(&self, id: Uuid) -> Result<Arc<Mutex<Session>>> {
        self.sessions
            .read()
            .expect("session map lock")
            .get(&id)
            .cloned()
            .ok_or_else(|| ElicitError::NotFound(id.to_string()))
    }

    pub fn create(&self, req: CreateSession) -> Result<SessionView> {
        let plan = select_sequence(req.n, req.budget)?;
        let id = Uuid::new_v4();
        let session = Session::with_plan(id, req.item_labels, plan)?;
        self.record(&Event::Created {
            id,
            item_labels: session.item_labels.clone(),
            plan: session.plan.clone(),
        })?;
        let view = self.view_of(&session)?;
        self.sessions
            .write()
            .expect("session map lock")
            .insert(id, Arc::new(Mutex::new(session)));
        Ok(view)
    }

    pub fn next(&self, id: Uuid) -> Result<NextQuestion> {
        let s = self.get(id)?;
        let s = s.lock().expect("session lock");
        s.next_question()
    }

    pub fn submit(&self, id: Uuid, req: SubmitAnswer) -> Result<SubmitOutcome> {
        let s = self.get(id)?;
        let mut s = s.lock().expect("session lock");
        if let Some(prev) = s.replayed(req.idempotency_key.as_deref()).cloned() {
            let (r, c) = req.pair.oriented()?;
            let same = if r < c {
                prev.pair == fillin_core::graph::Pair(r, c) && prev.value == req.value
            } else {
                prev.pair == fillin_core::graph::Pair(c, r) && prev.value == 1.0 / req.value
            };
            if !same {
                return Err(ElicitError::Conflict(format!(
                    "idempotency key {:?} was used for a different answer",
                    req.idempotency_key.unwrap_or_default()
                )));
            }
            return Ok(SubmitOutcome {
                recorded: false,
                answer: prev,
                next: s.next_question()?,
                estimate: s.estimate(&self.refs)?,
            });
        }
        let answer = s.check_answer(&req.pair, req.value, req.idempotency_key)?;
        self.record(&Event::Answered {
            id,
            pair: answer.pair,
            value: answer.value,
            idempotency_key: answer.idempotency_key.clone(),
        })?;
        s.apply_answer(answer.clone())?;
        Ok(SubmitOutcome {
            recorded: true,
            answer,
            next: s.next_question()?,
            estimate: s.estimate(&self.refs)?,
        })
    }

    pub fn abandon(&self, id: Uuid) -> Result<LiveEstimate> {
        let s = self.get(id)?;
        let mut s = s.lock().expect("session lock");
        s.check_abandon()?;
        self.record(&Event::Abandoned { id })?;
        s.apply_abandon();
        s.estimate(&self.refs)
    }

    pub fn view(&self, id: Uuid) -> Result<SessionView> {
        let s = self.get(id)?;
        let s = s.lock().expect("session lock");
        self.view_of(&s)
    }

    fn view_of(&self, s: &Session) -> Result<SessionView> {
        Ok(SessionView {
            id: s.id,
            n: s.n,
            item_labels: s.item_labels.clone(),
            kind: s.plan.kind,
            state: s.state,
            total: s.plan.len(),
            answers: s.answers.clone(),
            estimate: s.estimate(&self.refs)?,
        })
    }
}

fn replay_error(id: Uuid) -> ElicitError {
    ElicitError::Io(std::io::Error::new(
        std::io::ErrorKind::InvalidData,
        format!("journal refers to unknown session {id}"),
    ))
}
