mod common;

use common::astgen;
use proptest::prelude::*;
use selfhwdebug::rtlcheck::{parse, serialize};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn serialized_tree_parses_back_equal(ast in astgen::ast()) {
        let text = serialize(&ast);
        let back = parse(&text).map_err(|e| TestCaseError::fail(format!("{e}\n{text}")))?;
        prop_assert_eq!(back, ast);
    }

    #[test]
    fn serialization_is_a_fixed_point(ast in astgen::ast()) {
        let once = serialize(&ast);
        let twice = serialize(&parse(&once).unwrap());
        prop_assert_eq!(once, twice);
    }
}
