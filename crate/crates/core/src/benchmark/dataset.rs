use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use super::{BenchmarkError, BenchmarkSample};

/// Writes one JSON object per line. An empty sample list produces an empty file.
pub fn write_dataset(samples: &[BenchmarkSample], path: &Path) -> Result<(), BenchmarkError> {
    let io_err = |source| BenchmarkError::Io { path: path.to_path_buf(), source };
    let mut out = BufWriter::new(File::create(path).map_err(io_err)?);
    for sample in samples {
        serde_json::to_writer(&mut out, sample).map_err(|e| io_err(e.into()))?;
        out.write_all(b"\n").map_err(io_err)?;
    }
    out.flush().map_err(io_err)
}

pub fn read_dataset(path: &Path) -> Result<Vec<BenchmarkSample>, BenchmarkError> {
    let io_err = |source| BenchmarkError::Io { path: path.to_path_buf(), source };
    let reader = BufReader::new(File::open(path).map_err(io_err)?);
    let mut samples = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line.map_err(io_err)?;
        if line.trim().is_empty() {
            continue;
        }
        let sample = serde_json::from_str(&line).map_err(|source| BenchmarkError::Parse { line: idx + 1, source })?;
        samples.push(sample);
    }
    Ok(samples)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::benchmark::Strategy;
    use crate::language::Language;
    use crate::trigger::TriggerToken;
    use proptest::prelude::*;

    fn sample(i: usize) -> BenchmarkSample {
        BenchmarkSample {
            sample_id: format!("repo/f.py#L{i}:trigger"),
            language: Language::Python,
            file_id: "repo/f.py".into(),
            line_no: i,
            left_context: format!("def f():\n    return "),
            target: format!("g({i}) \"q\""),
            right_context: "\n# done\n".into(),
            trigger: if i % 2 == 0 { TriggerToken::parse("return") } else { None },
            strategy: if i % 2 == 0 { Strategy::Trigger } else { Strategy::Random },
        }
    }

    #[test]
    fn field_names_are_exact() {
        let v: serde_json::Value = serde_json::to_value(sample(2)).unwrap();
        let mut keys: Vec<&str> = v.as_object().unwrap().keys().map(String::as_str).collect();
        keys.sort();
        assert_eq!(
            keys,
            ["file_id", "language", "left_context", "line_no", "right_context", "sample_id", "strategy", "target", "trigger"]
        );
        assert_eq!(v["trigger"], "return");
        assert_eq!(v["strategy"], "trigger");
        assert_eq!(serde_json::to_value(sample(1)).unwrap()["trigger"], serde_json::Value::Null);
    }

    #[test]
    fn round_trip_and_empty() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.jsonl");
        let samples: Vec<_> = (1..=100).map(sample).collect();
        write_dataset(&samples, &path).unwrap();
        assert_eq!(read_dataset(&path).unwrap(), samples);

        write_dataset(&[], &path).unwrap();
        assert_eq!(std::fs::read(&path).unwrap().len(), 0);
        assert!(read_dataset(&path).unwrap().is_empty());
    }

    #[test]
    fn truncated_line_reports_line_number() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.jsonl");
        write_dataset(&[sample(1), sample(2), sample(3)], &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        std::fs::write(&path, &text[..text.len() - 20]).unwrap();
        match read_dataset(&path) {
            Err(BenchmarkError::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    proptest! {
        #[test]
        fn arbitrary_text_survives_round_trip(left in "\\PC{0,30}", target in "[^\n]{1,20}", right in "\\PC{0,30}") {
            let dir = tempfile::tempdir().unwrap();
            let path = dir.path().join("d.jsonl");
            let mut s = sample(4);
            s.left_context = left;
            s.target = target;
            s.right_context = right;
            write_dataset(std::slice::from_ref(&s), &path).unwrap();
            prop_assert_eq!(read_dataset(&path).unwrap(), vec![s]);
        }
    }
}
