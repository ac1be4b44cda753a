use std::fmt;
use std::sync::Mutex;
use std::time::Duration;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EventKind {
    Started,
    Completed,
    Failed,
    Retried,
    ToolInvoked,
}

impl fmt::Display for EventKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EventKind::Started => "started",
            EventKind::Completed => "completed",
            EventKind::Failed => "failed",
            EventKind::Retried => "retried",
            EventKind::ToolInvoked => "tool_invoked",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunEvent {
    /// Offset from the runner clock's origin.
    pub timestamp: Duration,
    pub agent_name: String,
    pub kind: EventKind,
    pub payload: String,
}

impl fmt::Display for RunEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "[{:>9.3}s] {} {}",
            self.timestamp.as_secs_f64(),
            self.agent_name,
            self.kind
        )?;
        if !self.payload.is_empty() {
            write!(f, ": {}", self.payload)?;
        }
        Ok(())
    }
}

pub trait EventSink: Send + Sync {
    fn emit(&self, event: RunEvent);
}

impl<F> EventSink for F
where
    F: Fn(RunEvent) + Send + Sync,
{
    fn emit(&self, event: RunEvent) {
        self(event)
    }
}

#[derive(Debug, Default, Clone, Copy)]
pub struct NullSink;

impl EventSink for NullSink {
    fn emit(&self, _event: RunEvent) {}
}

/// Collects every event; used by tests and summaries.
#[derive(Debug, Default)]
pub struct MemorySink {
    events: Mutex<Vec<RunEvent>>,
}

impl MemorySink {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn events(&self) -> Vec<RunEvent> {
        self.events.lock().expect("sink lock poisoned").clone()
    }

    pub fn count(&self, agent: &str, kind: EventKind) -> usize {
        self.events
            .lock()
            .expect("sink lock poisoned")
            .iter()
            .filter(|e| e.agent_name == agent && e.kind == kind)
            .count()
    }

    /// Lifecycle kinds for one agent, in emission order, without tool events.
    pub fn lifecycle(&self, agent: &str) -> Vec<EventKind> {
        self.events
            .lock()
            .expect("sink lock poisoned")
            .iter()
            .filter(|e| e.agent_name == agent && e.kind != EventKind::ToolInvoked)
            .map(|e| e.kind)
            .collect()
    }

    pub fn clear(&self) {
        self.events.lock().expect("sink lock poisoned").clear();
    }
}

impl EventSink for MemorySink {
    fn emit(&self, event: RunEvent) {
        self.events.lock().expect("sink lock poisoned").push(event);
    }
}

/// Checks that a lifecycle sequence reads started, retried*, then a single
/// terminal event. Repeated runs of the same agent are accepted back to back.
pub fn is_well_formed_lifecycle(kinds: &[EventKind]) -> bool {
    if kinds.is_empty() {
        return false;
    }
    let mut expecting_start = true;
    for kind in kinds {
        match (expecting_start, kind) {
            (true, EventKind::Started) => expecting_start = false,
            (false, EventKind::Retried) => {}
            (false, EventKind::Completed | EventKind::Failed) => expecting_start = true,
            _ => return false,
        }
    }
    expecting_start
}

#[cfg(test)]
mod tests {
    use super::EventKind::*;
    use super::*;

    #[test]
    fn lifecycle_grammar() {
        assert!(is_well_formed_lifecycle(&[Started, Completed]));
        assert!(is_well_formed_lifecycle(&[
            Started, Retried, Retried, Failed
        ]));
        assert!(is_well_formed_lifecycle(&[
            Started, Completed, Started, Failed
        ]));
        assert!(!is_well_formed_lifecycle(&[Started]));
        assert!(!is_well_formed_lifecycle(&[Retried, Completed]));
        assert!(!is_well_formed_lifecycle(&[Started, Completed, Retried]));
        assert!(!is_well_formed_lifecycle(&[]));
    }
}
