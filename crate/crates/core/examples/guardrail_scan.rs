// Runs the static leak scanner over a few drafts.

use std::error::Error;

use socratic_tutor::guardrails::{static_scan, ScanConfig};

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let drafts = [
        "What happens on the last pass when i points at the final element?",
        "Use this:\n```java\nfor (int i = 0; i < n - 1; i++)\n```",
        "int tmp = a[i];\na[i] = a[i + 1];\na[i + 1] = tmp;",
        "1. Open the file\n2. Read each line\n3. Parse the number\n4. Add it up\n5. Print the sum",
        "ok",
    ];
    let scan = ScanConfig::default();
    for d in drafts {
        let v = static_scan(d, &scan);
        let names: Vec<&str> = v.violations.iter().map(|v| v.as_str()).collect();
        println!(
            "{:<5} {:<40} {:?}",
            if v.passed { "pass" } else { "FAIL" },
            d.lines().next().unwrap_or(""),
            names
        );
    }

    // Keywords are configuration: a Python-only list.
    let py = ScanConfig::from_keyword_list("def,import,return,for,while");
    assert!(!static_scan("def f(x):\n    return x\nimport os", &py).passed);
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
