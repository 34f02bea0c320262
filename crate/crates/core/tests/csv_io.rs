use std::path::Path;

use proptest::prelude::*;

use planeclust::cli::{load_csv, save_csv, write_csv, ColumnRef};
use planeclust::{Dataset, Error, Matrix};

fn write(dir: &Path, name: &str, text: &str) -> std::path::PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn location(e: Error) -> (usize, usize) {
    match e {
        Error::Parse { line, column, .. } => (line, column),
        other => panic!("expected a parse error, got {other}"),
    }
}

fn finite() -> impl Strategy<Value = f64> {
    prop_oneof![
        any::<f64>().prop_filter("finite", |x| x.is_finite()),
        -1e3..1e3f64,
        Just(0.0),
        Just(-0.0),
        Just(f64::MIN_POSITIVE),
        Just(5e-324),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn round_trip_is_bit_exact(
        (n, d, values, labels) in (1usize..20, 1usize..5).prop_flat_map(|(n, d)| {
            (Just(n), Just(d), prop::collection::vec(finite(), n * d), prop::collection::vec(-1i64..6, n))
        }),
        with_labels in any::<bool>(),
    ) {
        let points = Matrix::from_vec(n, d, values.clone()).unwrap();
        let data = Dataset::new(points, with_labels.then(|| labels.clone())).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.csv");
        save_csv(&data, &path).unwrap();
        let label = ColumnRef::Name("label".into());
        let back = load_csv(&path, true, with_labels.then_some(&label)).unwrap();
        prop_assert_eq!(back.len(), n);
        prop_assert_eq!(back.dim(), d);
        for (a, b) in back.points().as_slice().iter().zip(&values) {
            prop_assert_eq!(a.to_bits(), b.to_bits());
        }
        // labels come back canonical: ranks of the distinct non-negative ids
        let mut ids: Vec<i64> = labels.iter().copied().filter(|&l| l >= 0).collect();
        ids.sort_unstable();
        ids.dedup();
        let canonical: Vec<i64> = labels
            .iter()
            .map(|l| ids.binary_search(l).map_or(-1, |r| r as i64))
            .collect();
        prop_assert_eq!(back.labels().map(<[i64]>::to_vec), with_labels.then_some(canonical));
    }
}

#[test]
fn header_names_survive() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(dir.path(), "a.csv", "height, width ,cls\n1,2,0\n3,4,1\n");
    let data = load_csv(&p, true, Some(&"cls".parse().unwrap())).unwrap();
    assert_eq!(data.feature_names().unwrap(), ["height", "width"]);
    assert_eq!(data.labels().unwrap(), [0, 1]);
    let mut out = Vec::new();
    write_csv(&data, &mut out).unwrap();
    assert_eq!(
        String::from_utf8(out).unwrap(),
        "height,width,label\n1,2,0\n3,4,1\n"
    );
}

#[test]
fn label_by_index_without_header() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(dir.path(), "b.csv", "2,0.5,7\n1,1.5,8\n");
    let data = load_csv(&p, false, Some(&ColumnRef::Index(0))).unwrap();
    // ids are renumbered to 0..C in increasing order
    assert_eq!(data.labels().unwrap(), [1, 0]);
    assert_eq!(data.points().as_slice(), [0.5, 7.0, 1.5, 8.0]);
}

#[test]
fn integral_float_labels_accepted() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(dir.path(), "c.csv", "x,y\n0.1,1.0\n0.2,-1.0\n0.3,0.0\n");
    let data = load_csv(&p, true, Some(&"y".parse().unwrap())).unwrap();
    assert_eq!(data.labels().unwrap(), [1, -1, 0]);
}

#[test]
fn non_numeric_cell_reports_line_and_column() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(dir.path(), "e.csv", "x,y\n1,2\n3,abc\n");
    assert_eq!(location(load_csv(&p, true, None).unwrap_err()), (3, 2));
}

#[test]
fn ragged_row_reports_line() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(dir.path(), "f.csv", "1,2\n3,4\n5\n");
    assert_eq!(location(load_csv(&p, false, None).unwrap_err()).0, 3);
}

#[test]
fn fractional_label_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(dir.path(), "g.csv", "x,l\n1,0\n2,0.5\n");
    assert_eq!(
        location(load_csv(&p, true, Some(&"l".parse().unwrap())).unwrap_err()),
        (3, 2)
    );
}

#[test]
fn missing_label_column_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(dir.path(), "h.csv", "x,y\n1,2\n");
    assert!(load_csv(&p, true, Some(&"nope".parse().unwrap())).is_err());
    assert!(load_csv(&p, true, Some(&ColumnRef::Index(5))).is_err());
}

#[test]
fn empty_and_missing_files_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(dir.path(), "empty.csv", "x,y\n");
    assert!(load_csv(&p, true, None).is_err());
    assert!(matches!(
        load_csv(dir.path().join("absent.csv"), true, None),
        Err(Error::Io(_))
    ));
}

#[test]
fn non_finite_values_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(dir.path(), "i.csv", "1,NaN\n");
    assert!(load_csv(&p, false, None).is_err());
}
