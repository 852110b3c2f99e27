use std::collections::HashMap;
use std::sync::{Arc, Condvar, Mutex};

use serde::{Deserialize, Serialize};

use super::generator::{truncate_tokens, GenerationError, Generator, Limiter, DEFAULT_MAX_OUTPUT_TOKENS};
use super::session::{SessionError, SessionStore};
use super::{
    assemble_evidence, build_prompt, build_retrieval_query, extract_ada_citations, ChatSession, ChatTurn, StructuredAnswer,
    DEFAULT_HISTORY_TURNS, DEFAULT_K, DEFAULT_PER_HIT_CHARS, DEFAULT_TOTAL_BUDGET_CHARS,
};
use crate::search::{SearchError, SearchHit, SearchIndex};

/// Reply used when retrieval finds nothing; the generator is not called.
pub const NO_EVIDENCE_ANSWER: &str = "Δεν βρέθηκαν σχετικές αποφάσεις για την ερώτησή σας.";

/// Ranked lookup over the corpus.
pub trait Retriever: Send + Sync {
    fn retrieve(&self, query: &str, k: usize) -> Result<Vec<SearchHit>, String>;
}

impl Retriever for SearchIndex {
    fn retrieve(&self, query: &str, k: usize) -> Result<Vec<SearchHit>, String> {
        match self.search(query, k) {
            Ok(hits) => Ok(hits),
            Err(SearchError::EmptyIndex) => Ok(Vec::new()),
            Err(e) => Err(e.to_string()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum AnswerMode {
    #[default]
    #[serde(alias = "streaming")]
    Streaming,
    #[serde(alias = "structured")]
    Structured,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RagConfig {
    pub k: usize,
    pub history_turns: usize,
    pub per_hit_chars: usize,
    pub total_budget_chars: usize,
    pub max_output_tokens: usize,
    /// Generator calls running at once across all sessions.
    pub max_concurrent_generations: usize,
}

impl Default for RagConfig {
    fn default() -> Self {
        Self {
            k: DEFAULT_K,
            history_turns: DEFAULT_HISTORY_TURNS,
            per_hit_chars: DEFAULT_PER_HIT_CHARS,
            total_budget_chars: DEFAULT_TOTAL_BUDGET_CHARS,
            max_output_tokens: DEFAULT_MAX_OUTPUT_TOKENS,
            max_concurrent_generations: 4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Answer {
    pub session_id: String,
    pub text: String,
    pub cited_adas: Vec<String>,
    /// ADAs of the evidence blocks given to the generator.
    pub evidence_adas: Vec<String>,
    /// Cited ADAs that were not part of the evidence.
    pub ungrounded_citations: Vec<String>,
    pub structured: Option<StructuredAnswer>,
    pub no_evidence: bool,
    /// Turns in the session after this exchange.
    pub session_turns: usize,
}

#[derive(Debug, thiserror::Error)]
pub enum RagError {
    #[error("retrieval failed: {0}")]
    RetrievalFailed(String),
    #[error("generation failed: {0}")]
    GenerationFailed(#[from] GenerationError),
    #[error(transparent)]
    Session(#[from] SessionError),
}

struct Slots {
    free: Mutex<usize>,
    cv: Condvar,
}

struct SlotGuard<'a>(&'a Slots);

impl Slots {
    fn acquire(&self) -> SlotGuard<'_> {
        let mut free = self.free.lock().unwrap_or_else(|p| p.into_inner());
        while *free == 0 {
            free = self.cv.wait(free).unwrap_or_else(|p| p.into_inner());
        }
        *free -= 1;
        SlotGuard(self)
    }
}

impl Drop for SlotGuard<'_> {
    fn drop(&mut self) {
        *self.0.free.lock().unwrap_or_else(|p| p.into_inner()) += 1;
        self.0.cv.notify_one();
    }
}

pub struct RagService {
    retriever: Arc<dyn Retriever>,
    generator: Arc<dyn Generator>,
    store: Arc<dyn SessionStore>,
    config: RagConfig,
    session_locks: Mutex<HashMap<String, Arc<Mutex<()>>>>,
    slots: Slots,
}

fn now_ms() -> i64 {
    std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map_or(0, |d| i64::try_from(d.as_millis()).unwrap_or(i64::MAX))
}

fn new_session_id() -> String {
    #[cfg(feature = "native")]
    {
        uuid::Uuid::new_v4().to_string()
    }
    #[cfg(not(feature = "native"))]
    {
        use std::sync::atomic::{AtomicU64, Ordering};
        static NEXT: AtomicU64 = AtomicU64::new(0);
        format!("s{:x}-{}", now_ms(), NEXT.fetch_add(1, Ordering::Relaxed))
    }
}

impl RagService {
    pub fn new(retriever: Arc<dyn Retriever>, generator: Arc<dyn Generator>, store: Arc<dyn SessionStore>, config: RagConfig) -> Self {
        let slots = Slots { free: Mutex::new(config.max_concurrent_generations.max(1)), cv: Condvar::new() };
        Self { retriever, generator, store, config, session_locks: Mutex::new(HashMap::new()), slots }
    }

    pub fn config(&self) -> &RagConfig {
        &self.config
    }

    pub fn generator_name(&self) -> &str {
        self.generator.name()
    }

    pub fn create_session(&self) -> Result<String, RagError> {
        let id = loop {
            let id = new_session_id();
            if !self.store.exists(&id)? {
                break id;
            }
        };
        self.store.save(&ChatSession::new(id.clone()))?;
        Ok(id)
    }

    pub fn session(&self, session_id: &str) -> Result<ChatSession, RagError> {
        Ok(self.store.load(session_id)?)
    }

    pub fn session_exists(&self, session_id: &str) -> Result<bool, RagError> {
        Ok(self.store.exists(session_id)?)
    }

    fn lock_for(&self, session_id: &str) -> Arc<Mutex<()>> {
        let mut locks = self.session_locks.lock().unwrap_or_else(|p| p.into_inner());
        locks.entry(session_id.to_string()).or_default().clone()
    }

    /// Answers `question` in the given session, creating the session if it
    /// does not exist. Streamed text goes to `on_chunk` as it is produced.
    /// Requests on the same session run one at a time.
    pub fn answer(
        &self,
        session_id: &str,
        question: &str,
        mode: AnswerMode,
        on_chunk: &mut dyn FnMut(&str),
    ) -> Result<Answer, RagError> {
        let lock = self.lock_for(session_id);
        let _guard = lock.lock().unwrap_or_else(|p| p.into_inner());
        let mut session = match self.store.load(session_id) {
            Ok(s) => s,
            Err(SessionError::NotFound(_)) => ChatSession::new(session_id),
            Err(e) => return Err(e.into()),
        };
        let asked_at = now_ms();

        let query = build_retrieval_query(&session, question, self.config.history_turns);
        log::debug!("retrieval query for {session_id}: {query}");
        let hits = match self.retriever.retrieve(&query, self.config.k) {
            Ok(h) => h,
            Err(e) => return Err(self.record_failure(session, question, asked_at, RagError::RetrievalFailed(e))),
        };
        let evidence = assemble_evidence(&hits, self.config.per_hit_chars, self.config.total_budget_chars);
        let no_evidence = evidence.adas.is_empty();
        let evidence_adas = evidence.adas.clone();

        let max = self.config.max_output_tokens;
        let (text, structured) = if no_evidence {
            let structured = (mode == AnswerMode::Structured).then(|| StructuredAnswer {
                concise_answer: NO_EVIDENCE_ANSWER.into(),
                detailed_explanation: String::new(),
                citations: Vec::new(),
            });
            if mode == AnswerMode::Streaming {
                on_chunk(NO_EVIDENCE_ANSWER);
            }
            (NO_EVIDENCE_ANSWER.to_string(), structured)
        } else {
            let prompt = build_prompt(&session, evidence, question, self.config.history_turns);
            let _slot = self.slots.acquire();
            let generated = match mode {
                AnswerMode::Streaming => {
                    let mut limiter = Limiter::new(max, on_chunk);
                    let out = self.generator.generate(&prompt, &mut |c| limiter.push(c));
                    if out.is_ok() {
                        limiter.finish();
                    }
                    out.map(|full| (truncate_tokens(&full, max).to_string(), None))
                }
                AnswerMode::Structured => self.generator.generate_structured(&prompt).map(|mut s| {
                    s.concise_answer = truncate_tokens(&s.concise_answer, max).to_string();
                    s.detailed_explanation = truncate_tokens(&s.detailed_explanation, max).to_string();
                    let text = if s.detailed_explanation.is_empty() {
                        s.concise_answer.clone()
                    } else {
                        format!("{}\n\n{}", s.concise_answer, s.detailed_explanation)
                    };
                    (text, Some(s))
                }),
            };
            match generated {
                Ok(g) => g,
                Err(e) => return Err(self.record_failure(session, question, asked_at, e.into())),
            }
        };

        let mut cited_adas = structured.as_ref().map(|s| s.citations.clone()).unwrap_or_default();
        for ada in extract_ada_citations(&text) {
            if !cited_adas.contains(&ada) {
                cited_adas.push(ada);
            }
        }
        let ungrounded_citations: Vec<String> = cited_adas.iter().filter(|a| !evidence_adas.contains(a)).cloned().collect();
        if !ungrounded_citations.is_empty() {
            log::warn!("session {session_id}: citations outside the evidence: {ungrounded_citations:?}");
        }

        session.turns.push(ChatTurn::user(question, asked_at));
        let mut reply = ChatTurn::assistant(text.clone(), cited_adas.clone(), now_ms().max(asked_at));
        reply.structured = structured.clone();
        session.turns.push(reply);
        self.store.save(&session)?;

        Ok(Answer {
            session_id: session.session_id.clone(),
            text,
            cited_adas,
            evidence_adas,
            ungrounded_citations,
            structured,
            no_evidence,
            session_turns: session.turns.len(),
        })
    }

    /// Keeps the question with an error marker and no assistant turn.
    fn record_failure(&self, mut session: ChatSession, question: &str, asked_at: i64, err: RagError) -> RagError {
        let mut turn = ChatTurn::user(question, asked_at);
        turn.error = Some(err.to_string());
        session.turns.push(turn);
        match self.store.save(&session) {
            Ok(()) => err,
            Err(e) => {
                log::error!("could not record failed turn in {}: {e}", session.session_id);
                err
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use std::sync::atomic::{AtomicUsize, Ordering};

    use super::*;
    use crate::corpus::{DecisionRecord, StoredDocument};
    use crate::rag::{ExtractiveGenerator, MemorySessionStore, Prompt, ScriptedGenerator};
    use crate::DocumentSource;

    const ADAS: [&str; 3] = ["ΨΣ02ΟΕΨΠ-ΛΔΤ", "6Μ6ΨΟΕΨΠ-ΛΗ2", "ΩΞ4Β46ΜΤΛΚ-ΑΒΓ"];

    fn index() -> SearchIndex {
        let bodies = [
            "Εγκρίνει δαπάνη για την προμήθεια καυσίμων του δήμου.",
            "Ανάθεση σύμβασης καθαρισμού σχολικών κτιρίων.",
            "Πρόσληψη προσωπικού για τις ανάγκες της ύδρευσης.",
        ];
        let mut idx = SearchIndex::default();
        for (ada, body) in ADAS.iter().zip(bodies) {
            idx.index_document(&StoredDocument {
                record: DecisionRecord::minimal(*ada),
                body_markdown: body.into(),
                source: DocumentSource::PreextractedText,
                extraction_tool: "test".into(),
                stored_at: 0,
            });
        }
        idx
    }

    fn service(generator: Arc<dyn Generator>) -> RagService {
        RagService::new(Arc::new(index()), generator, Arc::new(MemorySessionStore::default()), RagConfig::default())
    }

    #[test]
    fn extractive_pipeline() {
        let svc = service(Arc::new(ExtractiveGenerator));
        let id = svc.create_session().unwrap();
        let mut streamed = String::new();
        let a = svc.answer(&id, "δαπάνη καυσίμων", AnswerMode::Streaming, &mut |c| streamed.push_str(c)).unwrap();
        assert_eq!(a.evidence_adas[0], ADAS[0]);
        assert_eq!(a.cited_adas, vec![ADAS[0]]);
        assert!(a.ungrounded_citations.is_empty());
        assert_eq!(streamed, a.text);
        assert_eq!(svc.session(&id).unwrap().turns.len(), 2);

        // History still points at the first decision; a fresh session does not.
        let s = svc.answer(&id, "καθαρισμού σχολικών", AnswerMode::Structured, &mut |_| {}).unwrap();
        assert_eq!(s.structured.unwrap().citations, vec![ADAS[0]]);
        let session = svc.session(&id).unwrap();
        assert_eq!(session.turns.len(), 4);
        session.validate().unwrap();
        let fresh = svc.answer("other", "καθαρισμού σχολικών", AnswerMode::Structured, &mut |_| {}).unwrap();
        assert_eq!(fresh.structured.unwrap().citations, vec![ADAS[1]]);
    }

    #[test]
    fn stopword_question_has_no_evidence() {
        let calls = Arc::new(AtomicUsize::new(0));
        struct Counting(Arc<AtomicUsize>);
        impl Generator for Counting {
            fn name(&self) -> &str {
                "counting"
            }
            fn generate(&self, _: &Prompt, _: &mut dyn FnMut(&str)) -> Result<String, GenerationError> {
                self.0.fetch_add(1, Ordering::SeqCst);
                Ok(String::new())
            }
            fn generate_structured_raw(&self, _: &Prompt) -> Result<String, GenerationError> {
                self.0.fetch_add(1, Ordering::SeqCst);
                Ok(String::new())
            }
        }
        let svc = service(Arc::new(Counting(calls.clone())));
        let a = svc.answer("s1", "και το για τα", AnswerMode::Streaming, &mut |_| {}).unwrap();
        assert!(a.no_evidence);
        assert_eq!(a.text, NO_EVIDENCE_ANSWER);
        assert!(a.cited_adas.is_empty());
        assert_eq!(calls.load(Ordering::SeqCst), 0);
        assert_eq!(a.session_turns, 2);
    }

    #[test]
    fn ungrounded_citations_are_flagged() {
        let g = ScriptedGenerator::new([("δαπάνη καυσίμων".to_string(), "Βλ. ΑΑΑΑΑΑΑΑΑΑ-ΒΒΒ και ΨΣ02ΟΕΨΠ-ΛΔΤ.".to_string())]);
        let svc = service(Arc::new(g));
        let a = svc.answer("s", "δαπάνη καυσίμων", AnswerMode::Streaming, &mut |_| {}).unwrap();
        assert_eq!(a.cited_adas, vec!["ΑΑΑΑΑΑΑΑΑΑ-ΒΒΒ", "ΨΣ02ΟΕΨΠ-ΛΔΤ"]);
        assert_eq!(a.ungrounded_citations, vec!["ΑΑΑΑΑΑΑΑΑΑ-ΒΒΒ"]);
    }

    #[test]
    fn failure_keeps_user_turn_only() {
        struct Broken;
        impl Generator for Broken {
            fn name(&self) -> &str {
                "broken"
            }
            fn generate(&self, _: &Prompt, on_chunk: &mut dyn FnMut(&str)) -> Result<String, GenerationError> {
                on_chunk("partial ");
                Err(GenerationError::Failed("connection reset".into()))
            }
            fn generate_structured_raw(&self, _: &Prompt) -> Result<String, GenerationError> {
                Ok("{}".into())
            }
        }
        let svc = service(Arc::new(Broken));
        let err = svc.answer("s", "δαπάνη", AnswerMode::Streaming, &mut |_| {}).unwrap_err();
        assert!(matches!(err, RagError::GenerationFailed(_)));
        let err = svc.answer("s", "δαπάνη", AnswerMode::Structured, &mut |_| {}).unwrap_err();
        assert!(matches!(err, RagError::GenerationFailed(GenerationError::Schema { .. })));
        let s = svc.session("s").unwrap();
        assert_eq!(s.turns.len(), 2);
        assert!(s.turns.iter().all(|t| t.role == super::super::ChatRole::User && t.error.is_some()));
        s.validate().unwrap();
    }

    #[test]
    fn output_is_capped() {
        let long = format!("ΨΣ02ΟΕΨΠ-ΛΔΤ {}", "λέξη ".repeat(3000));
        let svc = service(Arc::new(ScriptedGenerator::new([("δαπάνη".to_string(), long)])));
        let mut streamed = String::new();
        let a = svc.answer("s", "δαπάνη", AnswerMode::Streaming, &mut |c| streamed.push_str(c)).unwrap();
        assert_eq!(crate::textstats::ReferenceTokenizer::split(&a.text).len(), DEFAULT_MAX_OUTPUT_TOKENS);
        assert!(streamed == a.text, "streamed text differs from the stored answer");
    }

    #[test]
    fn same_session_requests_are_serialized() {
        let svc = service(Arc::new(ExtractiveGenerator));
        std::thread::scope(|scope| {
            for _ in 0..8 {
                scope.spawn(|| svc.answer("shared", "δαπάνη", AnswerMode::Streaming, &mut |_| {}).unwrap());
            }
        });
        let s = svc.session("shared").unwrap();
        assert_eq!(s.turns.len(), 16);
        s.validate().unwrap();
    }

    /// Records queries; fails when told to.
    #[derive(Default)]
    struct Capture {
        queries: Mutex<Vec<String>>,
        fail: bool,
    }

    impl Retriever for Capture {
        fn retrieve(&self, query: &str, k: usize) -> Result<Vec<SearchHit>, String> {
            self.queries.lock().unwrap().push(query.to_string());
            if self.fail {
                return Err("index offline".into());
            }
            index().retrieve(query, k)
        }
    }

    #[test]
    fn follow_up_uses_prior_turns() {
        let capture = Arc::new(Capture::default());
        let svc = RagService::new(capture.clone(), Arc::new(ExtractiveGenerator), Arc::new(MemorySessionStore::default()), RagConfig::default());
        let first = svc.answer("s", "δαπάνη καυσίμων", AnswerMode::Streaming, &mut |_| {}).unwrap();
        svc.answer("s", "ποιος υπέγραψε αυτές τις αποφάσεις;", AnswerMode::Streaming, &mut |_| {}).unwrap();
        let queries = capture.queries.lock().unwrap();
        assert_eq!(queries[1], format!("ποιος υπέγραψε αυτές τις αποφάσεις; δαπάνη καυσίμων {}", first.text));
    }

    #[test]
    fn retrieval_failure_is_recorded() {
        let capture = Arc::new(Capture { fail: true, ..Default::default() });
        let svc = RagService::new(capture, Arc::new(ExtractiveGenerator), Arc::new(MemorySessionStore::default()), RagConfig::default());
        assert!(matches!(svc.answer("s", "δαπάνη", AnswerMode::Streaming, &mut |_| {}), Err(RagError::RetrievalFailed(_))));
        let s = svc.session("s").unwrap();
        assert_eq!(s.turns.len(), 1);
        assert!(s.turns[0].error.as_deref().unwrap().contains("index offline"));
    }
}
