// Assembles grounding context under shrinking character budgets.

use std::error::Error;

use socratic_tutor::context::{assemble_context, load_fixture};

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let fixture = load_fixture(concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/bubblesort"))?;
    let selected = vec![
        "src/main/java/sort/BubbleSort.java".to_string(),
        "src/test/java/sort/BubbleSortTest.java".to_string(),
    ];
    let floor = fixture.problem_statement.chars().count();
    println!("problem statement: {floor} chars (never truncated)");
    for budget in [24_000, 2_500, 1_400, 900, floor] {
        let bundle = assemble_context(&fixture, &selected, true, budget)?;
        let files: Vec<String> =
            bundle.selected_file_contents.iter().map(|(p, c)| format!("{p}={}", c.chars().count())).collect();
        println!(
            "budget {budget:>6}: total {:>5}, feedback {:>3}, files [{}], build log {:?}",
            bundle.total_chars,
            bundle.test_feedback_rendered.chars().count(),
            files.join(", "),
            bundle.build_log_excerpt.as_ref().map(|l| l.chars().count()),
        );
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
