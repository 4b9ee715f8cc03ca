use std::time::Instant;
use tabterm::engine::{ld_run, Budget};
use tabterm::syntax::{parse_goal, parse_program, ParseOptions};

#[test]
fn time_ld_grammar() {
    let src = std::fs::read_to_string(
        concat!(env!("CARGO_MANIFEST_DIR"), "/../../examples/grammar_r.tlp"),
    )
    .unwrap();
    let p = parse_program(&src, &ParseOptions::default()).unwrap();
    let q = parse_goal("s([a,a,a,b],So)", &p).unwrap();
    for steps in [1000usize, 10_000, 50_000] {
        let b = Budget { max_steps: steps, ..Budget::default() };
        let t = Instant::now();
        let run = ld_run(&p, &q.atom, &b);
        println!(
            "steps={steps}: {:?} calls={} trace={} status={:?}",
            t.elapsed(),
            run.calls.len(),
            run.trace.len(),
            run.outcome.status
        );
    }
}
