//! Enrollment CSV: header `student_id,class_id,days`, one enrollment per row.

use std::fs::File;
use std::io::{BufReader, Read, Write};
use std::path::Path;

use super::{EnrollmentNetwork, NetworkBuilder, Weekdays};
use crate::error::{Error, Result};

const HEADER: [&str; 3] = ["student_id", "class_id", "days"];

fn valid_id(s: &str) -> bool {
    !s.is_empty() && s.bytes().all(|b| b.is_ascii_alphanumeric() || b == b'_' || b == b'-')
}

pub fn parse_enrollments<R: Read>(source: R) -> Result<EnrollmentNetwork> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(source);
    let mut builder = NetworkBuilder::new();
    let mut record = csv::StringRecord::new();
    let mut first = true;
    while reader.read_record(&mut record)? {
        let line = record.position().map_or(0, |p| p.line());
        let err = |msg: String| Error::Parse { line, msg };
        if first {
            first = false;
            if record.iter().ne(HEADER) {
                return Err(err(format!("expected header `{}`", HEADER.join(","))));
            }
            continue;
        }
        if record.len() != 3 {
            return Err(err(format!("expected 3 fields, found {}", record.len())));
        }
        let (student, class, days) = (&record[0], &record[1], &record[2]);
        if !valid_id(student) {
            return Err(err(format!("invalid student id `{student}`")));
        }
        if !valid_id(class) {
            return Err(err(format!("invalid class id `{class}`")));
        }
        let days: Weekdays = days.parse().map_err(err)?;
        builder.enroll(student.into(), class.into(), days).map_err(err)?;
    }
    Ok(builder.build())
}

pub fn read_enrollments(path: impl AsRef<Path>) -> Result<EnrollmentNetwork> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    parse_enrollments(BufReader::new(file))
}

/// Writes rows grouped by class, both classes and rosters in id order.
pub fn write_enrollments<W: Write>(net: &EnrollmentNetwork, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(HEADER)?;
    for class in net.classes() {
        let days = class.meeting_days.to_string();
        for &s in class.roster() {
            w.write_record([net.students()[s as usize].as_str(), class.id.as_str(), days.as_str()])?;
        }
    }
    w.flush().map_err(|e| Error::io("<enrollment csv>", e))?;
    Ok(())
}

pub fn write_enrollments_file(net: &EnrollmentNetwork, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_enrollments(net, std::io::BufWriter::new(file))
}
