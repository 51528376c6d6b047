//! Labeled utterances and the adapters that read them.
//!
//! The canonical interchange format is jsonl: one UTF-8 object per line
//! with string fields `text` and `intent`. A csv adapter (header
//! `text,intent`) and an adapter for the public nested Snips export
//! convert into the same in-memory form, so everything downstream sees
//! one schema.

use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::data::text::preprocess_with;
use crate::data::vocab::Vocab;
use crate::error::{Error, Result};

/// One labeled utterance.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Example {
    pub text: String,
    pub tokens: Vec<String>,
    /// Filled by [`Dataset::encode`]; empty until then.
    pub token_ids: Vec<usize>,
    pub intent_id: usize,
    pub intent_name: String,
}

/// A set of examples plus the dense intent label list; `intent_id` indexes
/// into `labels`. Labels are kept in first-occurrence order so loading the
/// same file twice yields the same ids.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dataset {
    pub examples: Vec<Example>,
    pub labels: Vec<String>,
}

/// File format tags accepted by the loaders and the CLI.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Jsonl,
    Csv,
    SnipsNested,
}

impl Format {
    pub fn parse(s: &str) -> Result<Format> {
        match s {
            "jsonl" => Ok(Format::Jsonl),
            "csv" => Ok(Format::Csv),
            "snips" | "snips-nested" => Ok(Format::SnipsNested),
            other => Err(Error::Config(format!(
                "unknown dataset format '{other}' (expected jsonl, csv, or snips)"
            ))),
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Format::Jsonl => "jsonl",
            Format::Csv => "csv",
            Format::SnipsNested => "snips",
        }
    }
}

#[derive(Deserialize)]
struct JsonlRecord {
    text: String,
    intent: String,
}

#[derive(Serialize)]
struct JsonlRecordOut<'a> {
    text: &'a str,
    intent: &'a str,
}

impl Dataset {
    /// Builds a dataset from raw (text, intent) pairs, preprocessing each
    /// utterance and assigning label ids in first-occurrence order.
    pub fn from_pairs<I>(pairs: I, lowercase: bool) -> Result<Dataset>
    where
        I: IntoIterator<Item = (String, String)>,
    {
        let mut labels: Vec<String> = Vec::new();
        let mut examples = Vec::new();
        for (text, intent) in pairs {
            let intent_id = match labels.iter().position(|l| l == &intent) {
                Some(i) => i,
                None => {
                    labels.push(intent.clone());
                    labels.len() - 1
                }
            };
            let tokens = preprocess_with(&text, lowercase);
            examples.push(Example {
                text,
                tokens,
                token_ids: Vec::new(),
                intent_id,
                intent_name: intent,
            });
        }
        if examples.is_empty() {
            return Err(Error::Data("dataset contains no examples".into()));
        }
        Ok(Dataset { examples, labels })
    }

    /// Loads a file in the given format.
    pub fn load(path: &Path, format: Format, lowercase: bool) -> Result<Dataset> {
        let pairs = match format {
            Format::Jsonl => read_jsonl(path)?,
            Format::Csv => read_csv(path)?,
            Format::SnipsNested => read_snips_nested(path)?,
        };
        Dataset::from_pairs(pairs, lowercase)
    }

    /// Looks every token up in `vocab`, mapping unknown tokens to UNK.
    pub fn encode(&mut self, vocab: &Vocab) {
        for ex in &mut self.examples {
            ex.token_ids = vocab.encode(&ex.tokens);
        }
    }

    pub fn len(&self) -> usize {
        self.examples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.examples.is_empty()
    }

    /// Per-intent counts in label-id order.
    pub fn stats(&self) -> Vec<(String, usize)> {
        let mut counts = vec![0usize; self.labels.len()];
        for ex in &self.examples {
            counts[ex.intent_id] += 1;
        }
        self.labels.iter().cloned().zip(counts).collect()
    }

    /// Rebinds `intent_id`s to a reference label list (typically the one a
    /// model was trained with). Any intent absent from the reference set
    /// is a data error that spells out the difference between the two
    /// label sets.
    pub fn relabel(&mut self, reference: &[String]) -> Result<()> {
        let unknown: Vec<&String> = self
            .labels
            .iter()
            .filter(|l| !reference.contains(l))
            .collect();
        if !unknown.is_empty() {
            let missing: Vec<&String> = reference
                .iter()
                .filter(|l| !self.labels.contains(l))
                .collect();
            return Err(Error::Data(format!(
                "dataset labels do not match the model's label set: dataset has {:?} which the model lacks; model additionally knows {:?}",
                unknown, missing
            )));
        }
        for ex in &mut self.examples {
            let id = reference
                .iter()
                .position(|l| l == &ex.intent_name)
                .expect("checked above");
            ex.intent_id = id;
        }
        self.labels = reference.to_vec();
        Ok(())
    }

    /// Writes the canonical jsonl form (original text + intent name).
    pub fn write_jsonl(&self, path: &Path) -> Result<()> {
        let mut file = std::fs::File::create(path)?;
        for ex in &self.examples {
            let rec = JsonlRecordOut {
                text: &ex.text,
                intent: &ex.intent_name,
            };
            let line = serde_json::to_string(&rec)
                .map_err(|e| Error::Data(format!("cannot serialize example: {e}")))?;
            writeln!(file, "{line}")?;
        }
        Ok(())
    }

    /// Writes the `text,intent` csv form (original text + intent name).
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut writer = csv::Writer::from_path(path).map_err(csv_write_err)?;
        writer
            .write_record(["text", "intent"])
            .map_err(csv_write_err)?;
        for ex in &self.examples {
            writer
                .write_record([ex.text.as_str(), ex.intent_name.as_str()])
                .map_err(csv_write_err)?;
        }
        writer.flush()?;
        Ok(())
    }

    /// Writes `path` in `format` (the nested format is read-only — it
    /// exists to import third-party corpora, not to produce them).
    pub fn write(&self, path: &Path, format: Format) -> Result<()> {
        match format {
            Format::Jsonl => self.write_jsonl(path),
            Format::Csv => self.write_csv(path),
            Format::SnipsNested => Err(Error::Config(
                "the nested json format is supported for reading only".into(),
            )),
        }
    }
}

fn csv_write_err(e: csv::Error) -> Error {
    Error::Data(format!("cannot write csv record: {e}"))
}

fn read_jsonl(path: &Path) -> Result<Vec<(String, String)>> {
    let file = open(path)?;
    let mut pairs = Vec::new();
    for (idx, line) in BufReader::new(file).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: JsonlRecord = serde_json::from_str(&line).map_err(|e| Error::Parse {
            line: idx + 1,
            msg: format!("invalid jsonl record: {e}"),
        })?;
        pairs.push((rec.text, rec.intent));
    }
    Ok(pairs)
}

fn read_csv(path: &Path) -> Result<Vec<(String, String)>> {
    let file = open(path)?;
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(file);
    let headers = reader
        .headers()
        .map_err(|e| Error::Parse { line: 1, msg: format!("cannot read csv header: {e}") })?
        .clone();
    if headers.len() != 2 || &headers[0] != "text" || &headers[1] != "intent" {
        return Err(Error::Parse {
            line: 1,
            msg: format!("csv header must be 'text,intent', found {headers:?}"),
        });
    }
    let mut pairs = Vec::new();
    for (idx, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::Parse {
            line: idx + 2,
            msg: format!("invalid csv record: {e}"),
        })?;
        if record.len() != 2 {
            return Err(Error::Parse {
                line: idx + 2,
                msg: format!("expected 2 csv fields, found {}", record.len()),
            });
        }
        pairs.push((record[0].to_string(), record[1].to_string()));
    }
    Ok(pairs)
}

/// The public Snips export: a JSON object mapping each intent name to a
/// list of utterances, every utterance being `{"data": [chunks]}` where a
/// chunk carries a `text` fragment (entity chunks carry extra fields that
/// are ignored — the fragments are simply concatenated).
fn read_snips_nested(path: &Path) -> Result<Vec<(String, String)>> {
    use serde_json::Value;

    let file = open(path)?;
    let root: Value = serde_json::from_reader(BufReader::new(file))
        .map_err(|e| Error::Parse { line: e.line().max(1), msg: format!("invalid snips json: {e}") })?;
    let obj = root.as_object().ok_or_else(|| Error::Data(
        "snips file must be a top-level object mapping intent names to utterance lists".into(),
    ))?;

    let mut pairs = Vec::new();
    for (intent, utterances) in obj {
        let list = utterances.as_array().ok_or_else(|| {
            Error::Data(format!("snips intent '{intent}' must map to an array of utterances"))
        })?;
        for utt in list {
            let chunks = utt
                .get("data")
                .and_then(Value::as_array)
                .ok_or_else(|| {
                    Error::Data(format!(
                        "snips utterance under '{intent}' is missing its 'data' chunk list"
                    ))
                })?;
            let mut text = String::new();
            for chunk in chunks {
                let fragment = chunk.get("text").and_then(Value::as_str).ok_or_else(|| {
                    Error::Data(format!(
                        "snips chunk under '{intent}' is missing its 'text' field"
                    ))
                })?;
                text.push_str(fragment);
            }
            pairs.push((text, intent.clone()));
        }
    }
    Ok(pairs)
}

fn open(path: &Path) -> Result<std::fs::File> {
    std::fs::File::open(path).map_err(|e| {
        Error::Io(std::io::Error::new(
            e.kind(),
            format!("cannot open dataset file {}: {e}", path.display()),
        ))
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write_file(dir: &tempfile::TempDir, name: &str, contents: &str) -> std::path::PathBuf {
        let path = dir.path().join(name);
        let mut f = std::fs::File::create(&path).unwrap();
        f.write_all(contents.as_bytes()).unwrap();
        path
    }

    #[test]
    fn jsonl_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_file(
            &dir,
            "d.jsonl",
            "{\"text\":\"skip this song\",\"intent\":\"NextSong\"}\n{\"text\":\"play some jazz\",\"intent\":\"PlayMusic\"}\n",
        );
        let ds = Dataset::load(&path, Format::Jsonl, true).unwrap();
        assert_eq!(ds.len(), 2);
        assert_eq!(ds.examples[0].intent_name, "NextSong");
        assert_eq!(ds.examples[0].tokens, ["skip", "this", "song"]);
        assert_eq!(ds.labels, ["NextSong", "PlayMusic"]);

        let out = dir.path().join("out.jsonl");
        ds.write_jsonl(&out).unwrap();
        let reloaded = Dataset::load(&out, Format::Jsonl, true).unwrap();
        assert_eq!(ds, reloaded);
    }

    #[test]
    fn jsonl_bad_line_is_a_parse_error_with_line_number() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_file(
            &dir,
            "d.jsonl",
            "{\"text\":\"ok\",\"intent\":\"A\"}\nnot json\n",
        );
        let err = Dataset::load(&path, Format::Jsonl, true).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }), "{err:?}");
    }

    #[test]
    fn empty_file_is_a_data_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_file(&dir, "d.jsonl", "");
        assert!(matches!(
            Dataset::load(&path, Format::Jsonl, true).unwrap_err(),
            Error::Data(_)
        ));
    }

    #[test]
    fn csv_parses_with_header() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_file(
            &dir,
            "d.csv",
            "text,intent\n\"switch off, please\",SwitchLightOff\nplay a song,PlayMusic\n",
        );
        let ds = Dataset::load(&path, Format::Csv, true).unwrap();
        assert_eq!(ds.len(), 2);
        assert_eq!(ds.examples[0].tokens, ["switch", "off", "please"]);
    }

    #[test]
    fn csv_wrong_header_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_file(&dir, "d.csv", "utterance,label\na,b\n");
        let err = Dataset::load(&path, Format::Csv, true).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }));
    }

    #[test]
    fn snips_nested_flattens_entity_chunks() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_file(
            &dir,
            "s.json",
            r#"{"SwitchLightOn":[{"data":[{"text":"turn on the "},{"text":"kitchen","entity":"room"},{"text":" lights"}]}],"PlayMusic":[{"data":[{"text":"play jazz"}]}]}"#,
        );
        let ds = Dataset::load(&path, Format::SnipsNested, true).unwrap();
        assert_eq!(ds.len(), 2);
        let on = ds
            .examples
            .iter()
            .find(|e| e.intent_name == "SwitchLightOn")
            .unwrap();
        assert_eq!(on.text, "turn on the kitchen lights");
        assert_eq!(on.tokens, ["turn", "on", "the", "kitchen", "lights"]);
    }

    #[test]
    fn encode_uses_unk_for_unseen_tokens() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_file(&dir, "d.jsonl", "{\"text\":\"hello there\",\"intent\":\"A\"}\n");
        let mut ds = Dataset::load(&path, Format::Jsonl, true).unwrap();
        let vocab = Vocab::build([["hello"]]);
        ds.encode(&vocab);
        assert_eq!(ds.examples[0].token_ids, [vocab.id("hello"), crate::data::vocab::UNK_ID]);
    }

    #[test]
    fn stats_counts_per_intent() {
        let pairs = vec![
            ("a".into(), "X".into()),
            ("b".into(), "Y".into()),
            ("c".into(), "X".into()),
        ];
        let ds = Dataset::from_pairs(pairs, true).unwrap();
        assert_eq!(ds.stats(), [("X".to_string(), 2), ("Y".to_string(), 1)]);
    }

    #[test]
    fn relabel_maps_onto_reference_ids() {
        let pairs = vec![("a".into(), "Y".into()), ("b".into(), "X".into())];
        let mut ds = Dataset::from_pairs(pairs, true).unwrap();
        let reference = vec!["X".to_string(), "Y".to_string()];
        ds.relabel(&reference).unwrap();
        assert_eq!(ds.examples[0].intent_id, 1);
        assert_eq!(ds.examples[1].intent_id, 0);
        assert_eq!(ds.labels, reference);
    }

    #[test]
    fn relabel_reports_the_label_set_difference() {
        let pairs = vec![("a".into(), "Z".into())];
        let mut ds = Dataset::from_pairs(pairs, true).unwrap();
        let err = ds.relabel(&["X".to_string()]).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("Z") && msg.contains("X"), "{msg}");
    }
}
