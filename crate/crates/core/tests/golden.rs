//! Snapshot tests for rendered prompts. Run with `UPDATE_GOLDEN=1` to
//! rewrite the files after an intended wording change, then review the diff.

use std::path::PathBuf;

use indexmap::IndexMap;

use revchain_core::evalgen::{render_baseline_prompt, BaselineMethod};
use revchain_core::fixtures;
use revchain_core::resolvers::templates::{completion_prompt, extraction_prompt, selection_prompt};
use revchain_core::resolvers::{CompletionRequest, Scenario, SelectionRequest};

fn check(name: &str, actual: &str) {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/golden")
        .join(name);
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        std::fs::write(&path, actual).unwrap();
        return;
    }
    let expected = std::fs::read_to_string(&path)
        .unwrap_or_else(|_| panic!("missing {}; run with UPDATE_GOLDEN=1", path.display()));
    assert_eq!(actual, expected, "{name} differs from its snapshot");
}

#[test]
fn baseline_prompts() {
    let inst = fixtures::meeting_room_instance();
    for method in BaselineMethod::ALL {
        check(
            &format!("baseline_{}.txt", method.as_str().replace('-', "_")),
            &render_baseline_prompt(method, &inst),
        );
    }
}

#[test]
fn planner_prompts() {
    let pool = fixtures::meeting_room_pool();
    let book = pool.lookup("BookRoom").unwrap();
    let mut candidates = IndexMap::new();
    for arg in &book.arguments {
        candidates.insert(arg.name.clone(), pool.filter_by_type(arg.value_type));
    }
    let completion = CompletionRequest {
        query: fixtures::MEETING_ROOM_QUERY,
        context: &[],
        api: book,
        unfilled: book.arguments.iter().collect(),
        candidates_per_arg: candidates,
        path: vec![],
    };
    check("completion_book_room.txt", &completion_prompt(&completion));

    let extraction = CompletionRequest {
        unfilled: vec![&book.arguments[0]],
        candidates_per_arg: IndexMap::new(),
        ..completion
    };
    check("extraction_book_room.txt", &extraction_prompt(&extraction));

    let selection = SelectionRequest {
        scenario: Scenario::FinalApi,
        task_description: fixtures::MEETING_ROOM_QUERY.into(),
        candidates: pool.iter().collect(),
        path: vec![],
    };
    check("selection_final.txt", &selection_prompt(&selection));
}
