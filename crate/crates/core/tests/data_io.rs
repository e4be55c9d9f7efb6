use kinbm::data_io::{parse_portfolio_str, portfolio_to_string, PolicyRecord, PolicyYear, Profile};
use kinbm::Error;
use proptest::prelude::*;

fn record(i: usize) -> impl Strategy<Value = PolicyRecord> {
    (
        0u8..=1,
        1u8..=4,
        1u8..=4,
        1u8..=4,
        prop::collection::vec(prop::collection::vec(0.01f64..1e6, 0..4), 1..4),
    )
        .prop_map(move |(g, a, p, r, years)| PolicyRecord {
            policy_id: format!("P{i:04}"),
            profile: Profile::new(g, a, p, r).unwrap(),
            years: years
                .into_iter()
                .enumerate()
                .map(|(l, sizes)| PolicyYear { year: 2011 + l as i64, count: sizes.len() as u64, severities: sizes })
                .collect(),
        })
}

fn portfolio() -> impl Strategy<Value = Vec<PolicyRecord>> {
    (1usize..20).prop_flat_map(|n| (0..n).map(record).collect::<Vec<_>>())
}

proptest! {
    #[test]
    fn csv_round_trip(records in portfolio()) {
        let text = portfolio_to_string(&records).unwrap();
        prop_assert_eq!(parse_portfolio_str(&text).unwrap(), records);
    }
}

#[test]
fn parse_errors_carry_line_numbers() {
    let text = "policy_id,gender,age_class,price_class,area_class,year,count,severities\n\
                P1,0,1,1,1,2011,1,50.5\n\
                P1,0,1,1,1,2012,2,10\n";
    match parse_portfolio_str(text) {
        Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
        other => panic!("expected a parse error, got {other:?}"),
    }
}

#[test]
fn covariate_changes_are_rejected() {
    let text = "policy_id,gender,age_class,price_class,area_class,year,count,severities\n\
                P1,0,1,1,1,2011,0,\n\
                P1,1,1,1,1,2012,0,\n";
    assert!(matches!(parse_portfolio_str(text), Err(Error::Parse { line: 3, .. })));
}
