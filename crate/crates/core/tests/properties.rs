use std::collections::BTreeMap;

use proptest::prelude::*;

use revchain_core::evalgen::{judge, Outcome, Prediction};
use revchain_core::{
    canonicalize, equivalent, execute, execution_order, parse_call_expr, render_call_expr, ApiPool, ApiSpec,
    Behavior, Binding, MockEnv, PlanNode, ValueType,
};

const NAMES: [&str; 6] = ["Alpha", "Beta", "GetThing", "Name2ID", "X", "find_room"];
const ARGS: [&str; 6] = ["a", "b", "city", "person_ID", "start_time", "n"];

fn literal() -> impl Strategy<Value = Binding> {
    prop_oneof![
        "\\PC{0,12}".prop_map(Binding::literal),
        "[a-z '\\\\\"]{0,8}".prop_map(Binding::literal),
        (-10_000i64..10_000).prop_map(|n| Binding::typed_literal(n.to_string(), ValueType::Integer)),
        (0u32..1000, 1u32..100)
            .prop_map(|(i, f)| Binding::typed_literal(format!("{i}.{f}"), ValueType::Float)),
    ]
}

fn node_from(name: usize, args: Vec<(usize, Binding)>) -> PlanNode {
    let mut node = PlanNode::new(NAMES[name]);
    for (a, b) in args {
        if !node.bindings.contains_key(ARGS[a]) {
            node = node.with(ARGS[a], b);
        }
    }
    node
}

fn tree(ask_user: bool) -> impl Strategy<Value = PlanNode> {
    let leaf_binding = if ask_user {
        prop_oneof![4 => literal(), 1 => Just(Binding::AskUser { question: "?".into() })].boxed()
    } else {
        literal().boxed()
    };
    let leaf = (
        0..NAMES.len(),
        prop::collection::vec((0..ARGS.len(), leaf_binding.clone()), 0..3),
    )
        .prop_map(|(n, args)| node_from(n, args));
    leaf.prop_recursive(4, 24, 3, move |inner| {
        let binding = prop_oneof![
            2 => leaf_binding.clone(),
            1 => inner.prop_map(|c| Binding::SubCall(Box::new(c))),
        ];
        (
            0..NAMES.len(),
            prop::collection::vec((0..ARGS.len(), binding), 0..4),
        )
            .prop_map(|(n, args)| node_from(n, args))
    })
}

fn reversed(node: &PlanNode) -> PlanNode {
    let mut out = PlanNode::new(node.api_name.clone());
    for (arg, b) in node.bindings.iter().rev() {
        let b = match b {
            Binding::SubCall(c) => Binding::SubCall(Box::new(reversed(c))),
            other => other.clone(),
        };
        out = out.with(arg.clone(), b);
    }
    out
}

fn digest_env(plan: &PlanNode) -> MockEnv {
    let mut env = MockEnv::new();
    plan.visit(&mut |n| {
        env.register_behavior(n.api_name.clone(), Behavior::Digest { output: None });
    });
    env
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2000))]

    #[test]
    fn render_then_parse_is_equivalent(t in tree(true)) {
        let text = render_call_expr(std::slice::from_ref(&t)).unwrap();
        let back = parse_call_expr(&text).unwrap();
        prop_assert_eq!(back.len(), 1);
        prop_assert!(equivalent(&back[0], &t), "{}", text);
        prop_assert_eq!(render_call_expr(&back).unwrap(), text);
    }

    #[test]
    fn canonicalize_is_idempotent(t in tree(true)) {
        let once = canonicalize(&t);
        prop_assert_eq!(canonicalize(&once), once.clone());
        prop_assert!(equivalent(&t, &once));
    }

    #[test]
    fn argument_order_does_not_matter(t in tree(true)) {
        let r = reversed(&t);
        prop_assert!(equivalent(&t, &r));
        let v = judge("p", &Prediction::Plans(vec![r]), std::slice::from_ref(&t));
        prop_assert_eq!(v.outcome, Outcome::Correct);
    }

    #[test]
    fn judge_accepts_identical_plan_lists(a in tree(true), b in tree(true)) {
        let gold = vec![a, b];
        let v = judge("p", &Prediction::Plans(gold.iter().rev().cloned().collect()), &gold);
        prop_assert_eq!(v.outcome, Outcome::Correct);
    }

    #[test]
    fn execution_order_is_topological(t in tree(false)) {
        let steps = execution_order(&t).unwrap();
        prop_assert_eq!(steps.len(), t.call_count());
        prop_assert_eq!(&steps.last().unwrap().api_name, &t.api_name);
        for (i, step) in steps.iter().enumerate() {
            prop_assert_eq!(step.order_index, i);
            for &dep in step.dependency_args.values() {
                prop_assert!(dep < i);
            }
        }
        // every step except the root feeds exactly one later step
        let mut fed = vec![0usize; steps.len()];
        for s in &steps {
            for &d in s.dependency_args.values() {
                fed[d] += 1;
            }
        }
        prop_assert!(fed[..steps.len() - 1].iter().all(|&c| c == 1));
        prop_assert_eq!(fed[steps.len() - 1], 0);
    }

    #[test]
    fn execution_substitutes_outputs_exactly(t in tree(false)) {
        let env = digest_env(&t);
        let first = execute(&t, &env).unwrap();
        let steps = execution_order(&t).unwrap();
        for (step, call) in steps.iter().zip(&first.calls) {
            prop_assert_eq!(&step.api_name, &call.api_name);
            for (arg, &dep) in &step.dependency_args {
                prop_assert_eq!(&call.args[arg], &first.calls[dep].output);
            }
            for (arg, text) in &step.literal_args {
                prop_assert_eq!(&call.args[arg], text);
            }
        }
        prop_assert_eq!(&first.output, &first.calls.last().unwrap().output);
        prop_assert_eq!(execute(&t, &env).unwrap(), first);
    }

    #[test]
    fn filter_by_type_matches_brute_force(
        outputs in prop::collection::vec(0usize..ValueType::ALL.len(), 0..12),
        wanted in 0usize..ValueType::ALL.len(),
    ) {
        let pool = ApiPool::new(
            outputs
                .iter()
                .enumerate()
                .map(|(i, t)| ApiSpec::new(format!("Api{i}"), "").output("out", "", ValueType::ALL[*t]))
                .collect(),
        );
        let wanted = ValueType::ALL[wanted];
        let got: Vec<&str> = pool.filter_by_type(wanted).iter().map(|a| a.name.as_str()).collect();
        let mut expected = Vec::new();
        for (i, &o) in outputs.iter().enumerate() {
            let t = ValueType::ALL[o];
            if wanted == ValueType::Unknown || t == wanted {
                expected.push(format!("Api{i}"));
            }
        }
        prop_assert_eq!(got, expected);
    }
}

#[test]
fn quote_style_does_not_matter() {
    let a = parse_call_expr(r#"F(x="it's", y=G(z='10.50'))"#).unwrap();
    let b = parse_call_expr(r"F(y=G(z=10.5), x='it\'s')").unwrap();
    assert!(equivalent(&a[0], &b[0]));
    let by_arg: BTreeMap<_, _> = canonicalize(&a[0]).bindings.into_iter().collect();
    assert_eq!(by_arg.len(), 2);
}
