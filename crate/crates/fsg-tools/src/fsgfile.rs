//! Genome persistence.
//!
//! The FSG file format is UTF-8 JSON Lines: a header object on line 1,
//! one entry object per following line, LF endings. Keys are emitted in
//! sorted order and block numbers as plain decimal integers, so writing
//! the same genome always produces the same bytes.
//!
//! ```text
//! {"block_size":4096,"device_label":"disk0","format":"fsg/1","volume_uuid":"00102030405060708090a0b0c0d0e0f0"}
//! {"blocks":[8193,8194],"path":"/etc/hosts"}
//! ```
//!
//! The debugfs-dump ingest format is TSV: `path<TAB>comma-joined block
//! numbers`, empty block field allowed (see tools/make_fixtures.sh for a
//! producer).

use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use fsg_core::genome::GenomeError;
use fsg_core::{BlockList, Corpus, Fsg};

pub const FSG_FORMAT: &str = "fsg/1";

#[derive(Debug, Error)]
pub enum FsgFileError {
    #[error("write failed after {bytes_written} bytes")]
    WriteIo {
        bytes_written: u64,
        #[source]
        source: std::io::Error,
    },
    #[error("read failed")]
    ReadIo(#[from] std::io::Error),
    #[error("parse error at line {line}: {reason}")]
    ParseLine { line: usize, reason: String },
    #[error("duplicate entry: {0}")]
    DuplicateEntry(String),
    #[error("not an fsg file (format {0:?})")]
    WrongFormat(String),
    #[error(transparent)]
    Genome(#[from] GenomeError),
}

// serde emits struct fields in declaration order; these are declared in
// sorted key order to keep the output byte-deterministic
#[derive(Serialize, Deserialize)]
struct HeaderLine {
    block_size: u32,
    device_label: String,
    format: String,
    volume_uuid: Option<String>,
}

#[derive(Serialize, Deserialize)]
struct EntryLine {
    blocks: Vec<u64>,
    path: String,
}

fn uuid_hex(uuid: &[u8; 16]) -> String {
    uuid.iter().map(|b| format!("{b:02x}")).collect()
}

fn parse_uuid_hex(s: &str) -> Option<[u8; 16]> {
    if s.len() != 32 {
        return None;
    }
    let mut out = [0u8; 16];
    for (i, byte) in out.iter_mut().enumerate() {
        *byte = u8::from_str_radix(&s[2 * i..2 * i + 2], 16).ok()?;
    }
    Some(out)
}

/// Writes the genome in the FSG format; returns the byte count written.
pub fn write_fsg<W: Write>(fsg: &Fsg, mut sink: W) -> Result<u64, FsgFileError> {
    let mut written = 0u64;
    let mut put = |sink: &mut W, line: String| -> Result<(), FsgFileError> {
        let bytes = line.into_bytes();
        sink.write_all(&bytes)
            .and_then(|_| sink.write_all(b"\n"))
            .map_err(|source| FsgFileError::WriteIo {
                bytes_written: written,
                source,
            })?;
        written += bytes.len() as u64 + 1;
        Ok(())
    };

    let header = HeaderLine {
        block_size: fsg.block_size,
        device_label: fsg.device_label.clone(),
        format: FSG_FORMAT.to_string(),
        volume_uuid: fsg.volume_uuid.as_ref().map(uuid_hex),
    };
    put(
        &mut sink,
        serde_json::to_string(&header).expect("header serializes"),
    )?;
    for (path, blocks) in fsg.entries() {
        let entry = EntryLine {
            blocks: blocks.to_vec(),
            path: path.to_string(),
        };
        put(
            &mut sink,
            serde_json::to_string(&entry).expect("entry serializes"),
        )?;
    }
    Ok(written)
}

/// Reads a genome written by [`write_fsg`]. Entries arrive sorted by path
/// whatever their order in the source; duplicate paths are an error.
pub fn read_fsg<R: Read>(source: R) -> Result<Fsg, FsgFileError> {
    let mut lines = BufReader::new(source).lines();
    let header_line = lines.next().transpose()?.ok_or(FsgFileError::ParseLine {
        line: 1,
        reason: "missing header".to_string(),
    })?;
    let header: HeaderLine =
        serde_json::from_str(&header_line).map_err(|e| FsgFileError::ParseLine {
            line: 1,
            reason: e.to_string(),
        })?;
    if header.format != FSG_FORMAT {
        return Err(FsgFileError::WrongFormat(header.format));
    }
    let volume_uuid = match &header.volume_uuid {
        None => None,
        Some(hex) => Some(parse_uuid_hex(hex).ok_or_else(|| FsgFileError::ParseLine {
            line: 1,
            reason: format!("bad volume_uuid {hex:?}"),
        })?),
    };
    let mut fsg = Fsg::new(header.device_label, volume_uuid, header.block_size)?;

    for (idx, line) in lines.enumerate() {
        let line_no = idx + 2;
        let line = line?;
        if line.is_empty() {
            continue;
        }
        let entry: EntryLine =
            serde_json::from_str(&line).map_err(|e| FsgFileError::ParseLine {
                line: line_no,
                reason: e.to_string(),
            })?;
        let blocks = BlockList::new(entry.blocks).map_err(|e| FsgFileError::ParseLine {
            line: line_no,
            reason: e.to_string(),
        })?;
        fsg.insert(entry.path.clone(), blocks)
            .map_err(|_| FsgFileError::DuplicateEntry(entry.path))?;
    }
    Ok(fsg)
}

/// Parses a debugfs-style block dump (TSV) into a genome.
pub fn ingest_debugfs_dump<R: Read>(
    source: R,
    device_label: &str,
    block_size: u32,
) -> Result<Fsg, FsgFileError> {
    let mut fsg = Fsg::new(device_label.to_string(), None, block_size)?;
    for (idx, line) in BufReader::new(source).lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        if line.is_empty() {
            continue;
        }
        let Some((path, blocks_field)) = line.split_once('\t') else {
            return Err(FsgFileError::ParseLine {
                line: line_no,
                reason: "missing tab separator".to_string(),
            });
        };
        let mut blocks = Vec::new();
        if !blocks_field.is_empty() {
            for token in blocks_field.split(',') {
                let b: u64 = token.trim().parse().map_err(|_| FsgFileError::ParseLine {
                    line: line_no,
                    reason: format!("bad block number {token:?}"),
                })?;
                blocks.push(b);
            }
        }
        let blocks = BlockList::new(blocks).map_err(|e| FsgFileError::ParseLine {
            line: line_no,
            reason: e.to_string(),
        })?;
        fsg.insert(path.to_string(), blocks)
            .map_err(|_| FsgFileError::DuplicateEntry(path.to_string()))?;
    }
    Ok(fsg)
}

pub fn read_fsg_file(path: &Path) -> Result<Fsg, FsgFileError> {
    read_fsg(std::fs::File::open(path)?)
}

pub fn write_fsg_file(fsg: &Fsg, path: &Path) -> Result<u64, FsgFileError> {
    write_fsg(fsg, std::fs::File::create(path)?)
}

/// Loads every `*.fsg` file of a directory (sorted by file name) as one
/// corpus labeled after the directory.
pub fn read_corpus_dir(dir: &Path) -> Result<Corpus, FsgFileError> {
    let mut paths: Vec<_> = std::fs::read_dir(dir)?
        .collect::<Result<Vec<_>, _>>()?
        .into_iter()
        .map(|e| e.path())
        .filter(|p| p.extension().is_some_and(|x| x == "fsg"))
        .collect();
    paths.sort();
    let mut installations = Vec::with_capacity(paths.len());
    for p in paths {
        installations.push(read_fsg_file(&p)?);
    }
    let label = dir
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| "corpus".to_string());
    Ok(Corpus::new(label, installations)?)
}
