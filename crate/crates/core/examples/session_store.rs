// Persists a session and a trace, then reads them back.

use std::error::Error;

use socratic_tutor::domain::PipelineTrace;
use socratic_tutor::store::Store;
use socratic_tutor::{Role, Session};

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let dir = tempfile::tempdir()?;
    let store = Store::open(dir.path())?;

    let mut session = Session::new("bubblesort", "student-7");
    session.append_message(Role::Student, "Where do I start?")?;
    session.append_message(Role::Tutor, "What does one pass of the outer loop achieve?")?;
    // Two student messages in a row are refused.
    assert!(session.append_message(Role::Tutor, "again").is_err());
    store.save_session(&session)?;

    let mut trace = PipelineTrace::new(0);
    trace.relevance_score = Some(8);
    store.save_trace(&session.session_id, &trace)?;

    let loaded = store.load_session(&session.session_id)?;
    assert_eq!(loaded, session);
    println!("stored at {}", store.session_path(&session.session_id).display());
    println!("trace at  {}", store.trace_path(&session.session_id, 0).display());
    for s in store.list_sessions(Some("student-7"))? {
        println!("{} {} messages={}", s.session_id, s.exercise_id, s.message_count);
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
