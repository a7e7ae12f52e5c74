use crate::cba::{Instance, TrainingInstance};

use super::DataError;

/// One column per attribute, class label last.
pub fn write_training_csv(data: &[TrainingInstance]) -> String {
    let mut writer = csv::Writer::from_writer(Vec::new());
    if let Some(first) = data.first() {
        let mut header: Vec<&str> = first.items.keys().map(String::as_str).collect();
        header.push("class");
        writer.write_record(&header).expect("in-memory write");
    }
    for d in data {
        let mut row: Vec<&str> = d.items.values().map(String::as_str).collect();
        row.push(&d.class_label);
        writer.write_record(&row).expect("in-memory write");
    }
    String::from_utf8(writer.into_inner().expect("flush")).expect("utf-8")
}

pub fn parse_training_csv(text: &str) -> Result<Vec<TrainingInstance>, DataError> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let header = reader.headers()?.clone();
    if header.len() < 2 {
        return Err(DataError::Parse {
            line: 1,
            message: "need at least one attribute column and a class column".into(),
        });
    }
    let attrs: Vec<String> = header.iter().take(header.len() - 1).map(str::to_string).collect();
    let mut out = Vec::new();
    for row in reader.records() {
        let row = row?;
        let items: Instance = attrs
            .iter()
            .cloned()
            .zip(row.iter().map(str::to_string))
            .collect();
        out.push(TrainingInstance::new(items, &row[row.len() - 1]));
    }
    Ok(out)
}
