//! JSONL dataset files: one object per line with fields uid, text, label,
//! split. Label and split are stored by name and resolved against the fixed
//! taxonomy on load.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};

use dialogic_core::corpus::{Dataset, LabeledExample, Split};
use dialogic_core::taxonomy::CategoryLabel;

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Record {
    uid: String,
    text: String,
    label: String,
    split: String,
}

/// Writes examples as one JSON object per line, in collection order.
pub fn write_dataset(path: &Path, examples: &[LabeledExample]) -> Result<()> {
    let file =
        File::create(path).with_context(|| format!("creating dataset file {}", path.display()))?;
    let mut writer = BufWriter::new(file);
    for example in examples {
        let record = Record {
            uid: example.uid.clone(),
            text: example.text.clone(),
            label: example.label.name().to_string(),
            split: example.split.as_str().to_string(),
        };
        serde_json::to_writer(&mut writer, &record)?;
        writer.write_all(b"\n")?;
    }
    writer.flush()?;
    Ok(())
}

/// Loads a JSONL dataset, reporting malformed records with their line
/// number, unknown labels with the offending record, and duplicate uids.
pub fn load_dataset(path: &Path) -> Result<Dataset> {
    let file =
        File::open(path).with_context(|| format!("opening dataset file {}", path.display()))?;
    let reader = BufReader::new(file);
    let mut examples = Vec::new();
    for (index, line) in reader.lines().enumerate() {
        let line_no = index + 1;
        let line = line.with_context(|| format!("{}:{line_no}: read error", path.display()))?;
        if line.trim().is_empty() {
            continue;
        }
        let record: Record = serde_json::from_str(&line)
            .with_context(|| format!("{}:{line_no}: malformed record", path.display()))?;
        let label = CategoryLabel::from_name(&record.label, &record.uid)
            .with_context(|| format!("{}:{line_no}", path.display()))?;
        let split = Split::parse(&record.split)
            .with_context(|| format!("{}:{line_no}: record {:?}", path.display(), record.uid))?;
        let example = LabeledExample::new(record.uid, record.text, label, split)
            .with_context(|| format!("{}:{line_no}", path.display()))?;
        examples.push(example);
    }
    Ok(Dataset::from_examples(examples)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write_lines(lines: &[&str]) -> tempfile::NamedTempFile {
        let mut file = tempfile::NamedTempFile::new().unwrap();
        for line in lines {
            writeln!(file, "{line}").unwrap();
        }
        file
    }

    #[test]
    fn single_record_round_trip() {
        let file = write_lines(&[
            r#"{"uid":"a1","text":"请大家做好笔记","label":"note-taking","split":"train"}"#,
        ]);
        let dataset = load_dataset(file.path()).unwrap();
        assert_eq!(dataset.len(), 1);
        let example = dataset.get("a1").unwrap();
        assert_eq!(example.label.name(), "note-taking");
        assert_eq!(example.split, Split::Train);
        assert_eq!(example.text, "请大家做好笔记");
    }

    #[test]
    fn unknown_label_is_a_taxonomy_error() {
        let file =
            write_lines(&[r#"{"uid":"a1","text":"写作业","label":"homework","split":"train"}"#]);
        let err = load_dataset(file.path()).unwrap_err();
        let message = format!("{err:#}");
        assert!(message.contains("homework"), "message: {message}");
        assert!(message.contains("a1"), "message: {message}");
    }

    #[test]
    fn duplicate_uid_is_a_uniqueness_error() {
        let file = write_lines(&[
            r#"{"uid":"a1","text":"大家好","label":"greeting","split":"train"}"#,
            r#"{"uid":"a1","text":"你们好","label":"greeting","split":"train"}"#,
        ]);
        let err = load_dataset(file.path()).unwrap_err();
        assert!(format!("{err:#}").contains("duplicate uid"));
    }

    #[test]
    fn malformed_record_names_the_line() {
        let file = write_lines(&[
            r#"{"uid":"a1","text":"大家好","label":"greeting","split":"train"}"#,
            r#"{"uid":"a2","text":"#,
        ]);
        let err = load_dataset(file.path()).unwrap_err();
        assert!(format!("{err:#}").contains(":2:"), "err: {err:#}");
    }

    #[test]
    fn write_then_load_is_identity() {
        let examples: Vec<LabeledExample> = CategoryLabel::all()
            .enumerate()
            .map(|(i, label)| {
                LabeledExample::new(
                    format!("u{i}"),
                    format!("第{i}句话 with mixed ascii"),
                    label,
                    match i % 3 {
                        0 => Split::Train,
                        1 => Split::Validation,
                        _ => Split::Test,
                    },
                )
                .unwrap()
            })
            .collect();
        let file = tempfile::NamedTempFile::new().unwrap();
        write_dataset(file.path(), &examples).unwrap();
        let loaded = load_dataset(file.path()).unwrap();
        assert_eq!(loaded.examples(), examples.as_slice());
    }
}
