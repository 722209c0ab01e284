use bfds::NodeFunction;
use bfds_cli::format::{parse_function, render_function};
use proptest::prelude::*;

fn node_function() -> impl Strategy<Value = NodeFunction> {
    let vars = prop::collection::vec(0usize..12, 1..4);
    prop_oneof![
        any::<bool>().prop_map(NodeFunction::Const),
        (0usize..12).prop_map(NodeFunction::Pos),
        (0usize..12).prop_map(NodeFunction::Neg),
        vars.clone().prop_map(NodeFunction::Or),
        vars.clone().prop_map(NodeFunction::And),
        vars.prop_flat_map(|srcs| {
            let len = 1usize << srcs.len();
            prop::collection::vec(any::<bool>(), len).prop_map(move |outputs| NodeFunction::Table { srcs: srcs.clone(), outputs })
        }),
    ]
}

proptest! {
    #[test]
    fn rendered_functions_parse_back(f in node_function()) {
        let text = render_function(&f);
        prop_assert_eq!(parse_function(&text), Ok(f));
    }

    #[test]
    fn surrounding_whitespace_is_ignored(f in node_function()) {
        let text = format!("  {}\t", render_function(&f));
        prop_assert_eq!(parse_function(&text), Ok(f));
    }
}
