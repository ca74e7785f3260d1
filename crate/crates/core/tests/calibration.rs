use std::collections::BTreeMap;

use encact::he_core::default_cost_table;

#[test]
fn committed_cost_table_matches_defaults() {
    let text = include_str!("../calibration/cost_table.json");
    let table: BTreeMap<String, f64> = serde_json::from_str(text).unwrap();
    assert_eq!(table, default_cost_table());
}
