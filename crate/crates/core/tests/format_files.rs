use tensoraudit::format::{load_tensor, save_tensor};
use tensoraudit::{Error, Tensor3};

const GOLDEN: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/tests/fixtures/golden_2x2x2.tns3");

#[test]
fn golden_fixture_loads_to_documented_values() {
    // Written independently of the library: X[i][j][k] = 1 + i + 2j + 4k.
    let x = load_tensor(GOLDEN).unwrap();
    assert_eq!(x.dims(), [2, 2, 2]);
    for k in 0..2 {
        for j in 0..2 {
            for i in 0..2 {
                assert_eq!(x.get(i, j, k), (1 + i + 2 * j + 4 * k) as f64);
            }
        }
    }
    assert_eq!(x.as_slice(), &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0]);
}

#[test]
fn golden_fixture_is_reproduced_byte_for_byte() {
    let x = Tensor3::from_fn(2, 2, 2, |i, j, k| (1 + i + 2 * j + 4 * k) as f64);
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("x.tns3");
    save_tensor(&x, &p).unwrap();
    assert_eq!(std::fs::read(&p).unwrap(), std::fs::read(GOLDEN).unwrap());
}

#[test]
fn truncated_file_reports_lengths() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("cut.tns3");
    let bytes = std::fs::read(GOLDEN).unwrap();
    std::fs::write(&p, &bytes[..bytes.len() - 5]).unwrap();
    match load_tensor(&p) {
        Err(Error::Format { message, .. }) => {
            assert!(message.contains("94") && message.contains("89"), "{message}");
        }
        other => panic!("expected format error, got {other:?}"),
    }
}

#[test]
fn missing_file_is_an_io_error() {
    let err = load_tensor("/nonexistent/x.tns3").unwrap_err();
    assert_eq!(err.kind(), "io");
}
