use proptest::prelude::*;
use selfhwdebug::report::{aggregate_outcomes, percent, Format};
use selfhwdebug::rtlcheck::VerdictStatus;

const CWES: [&str; 5] = ["CWE-1191", "CWE-1231", "CWE-1244", "CWE-1245", "CWE-1300"];
const LABELS: [&str; 5] = ["Basic", "Intermediate", "Advanced", "GPT-4", "Two-shot"];
/// Expected pass counts out of five, rows in `CWES` order.
const EXPECTED: [[u32; 5]; 5] = [[2, 5, 3, 4, 5], [0, 0, 1, 2, 5], [5, 4, 5, 5, 5], [5, 5, 5, 5, 5], [2, 4, 5, 5, 5]];
const EXPECTED_AVERAGES: [u32; 5] = [56, 72, 76, 84, 100];

fn outcomes_for(counts: &[[u32; 5]; 5]) -> Vec<(String, String, VerdictStatus)> {
    let mut out = Vec::new();
    for (r, cwe) in CWES.iter().enumerate() {
        for (c, label) in LABELS.iter().enumerate() {
            for i in 0..5 {
                let s = if i < counts[r][c] { VerdictStatus::Pass } else { VerdictStatus::Fail };
                out.push((cwe.to_string(), label.to_string(), s));
            }
        }
    }
    out
}

fn float_percent(p: u32, t: u32) -> u32 {
    (100.0 * p as f64 / t as f64).round() as u32
}

#[test]
fn expected_counts_reproduce_expected_averages() {
    let report = aggregate_outcomes(outcomes_for(&EXPECTED));
    for (c, label) in LABELS.iter().enumerate() {
        let column_passes: u32 = EXPECTED.iter().map(|row| row[c]).sum();
        assert_eq!(report.averages[*label], float_percent(column_passes, 25));
        assert_eq!(report.averages[*label], EXPECTED_AVERAGES[c]);
    }
    let md = report.render(Format::Markdown);
    assert!(md.contains("| CWE-1231 | 0 out of 5 | 0 out of 5 | 1 out of 5 | 2 out of 5 | 5 out of 5 | 0 |"));
    assert!(md.contains("| Average | 56% | 72% | 76% | 84% | 100% | 0 |"));
    assert_eq!(report.attempt_count(), 125);
}

#[test]
fn csv_lists_every_cell() {
    let report = aggregate_outcomes(outcomes_for(&EXPECTED));
    let csv = report.render(Format::Csv);
    let lines: Vec<&str> = csv.split("\r\n").filter(|l| !l.is_empty()).collect();
    assert_eq!(lines.len(), 26);
    assert_eq!(lines[0], "cwe,config,passes,total");
    assert!(lines.contains(&"CWE-1191,Advanced,3,5"));
}

fn status() -> impl Strategy<Value = VerdictStatus> {
    prop_oneof![Just(VerdictStatus::Pass), Just(VerdictStatus::Fail), Just(VerdictStatus::Indeterminate)]
}

fn outcome() -> impl Strategy<Value = (String, String, VerdictStatus)> {
    (0usize..4, 0usize..3, status()).prop_map(|(c, l, s)| (format!("CWE-{c}"), format!("L{l}"), s))
}

proptest! {
    #[test]
    fn cells_do_not_depend_on_order(mut v in proptest::collection::vec(outcome(), 0..60), seed in any::<u64>()) {
        let a = aggregate_outcomes(v.clone());
        // Deterministic shuffle from the seed.
        let mut x = seed | 1;
        for i in (1..v.len()).rev() {
            x ^= x << 13;
            x ^= x >> 7;
            x ^= x << 17;
            v.swap(i, (x % (i as u64 + 1)) as usize);
        }
        let b = aggregate_outcomes(v);
        for (cwe, row) in &a.rows {
            for (label, cell) in row {
                prop_assert_eq!(b.cell(cwe, label), Some(*cell));
            }
        }
        prop_assert_eq!(&a.averages.iter().collect::<std::collections::BTreeMap<_, _>>(),
                        &b.averages.iter().collect::<std::collections::BTreeMap<_, _>>());
    }

    #[test]
    fn totals_and_averages_match_counts(v in proptest::collection::vec(outcome(), 0..60)) {
        let r = aggregate_outcomes(v.clone());
        prop_assert_eq!(r.attempt_count() as usize, v.len());
        for (label, avg) in &r.averages {
            let of_label: Vec<_> = v.iter().filter(|o| &o.1 == label).collect();
            let passes = of_label.iter().filter(|o| o.2 == VerdictStatus::Pass).count() as u32;
            prop_assert_eq!(*avg, float_percent(passes, of_label.len() as u32));
        }
        for row in r.rows.values() {
            for cell in row.values() {
                prop_assert!(cell.passes + cell.indeterminate <= cell.total);
            }
        }
    }

    #[test]
    fn integer_rounding_matches_float_rounding(p in 0u64..1000, extra in 0u64..1000) {
        let t = p + extra;
        prop_assume!(t > 0);
        prop_assert_eq!(percent(p, t), Some(float_percent(p as u32, t as u32)));
    }
}
