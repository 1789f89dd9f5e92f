// Validates a model's file picks against the exercise repository.

use std::error::Error;

use socratic_tutor::context::{load_fixture, render_file_listing};
use socratic_tutor::pipeline::parse_file_selection;

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let fixture = load_fixture(concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/bubblesort"))?;
    println!("listing shown to the model:\n{}\n", render_file_listing(&fixture.repository, true));

    let completion = "- src/main/java/sort/BubbleSort.java\n- src/main/java/sort/SortUtils.java\n- BUILD_LOG";
    let sel = parse_file_selection(completion, &fixture.repository, fixture.build_log.is_some());
    println!("accepted: {:?}", sel.accepted);
    println!("build log: {}", sel.include_build_log);
    println!("dropped: {:?}", sel.dropped);
    assert_eq!(sel.dropped, ["src/main/java/sort/SortUtils.java"]);
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
