//! On-disk formats: sequence directories, result files and observation logs.
//!
//! Sequence directory layout:
//!
//! ```text
//! imgs/00000001.png    frames, 1-indexed (RGB8, or L8 for thermal frames)
//! groundtruth.txt      x1,y1,w,h per line
//! absent.txt           0 or 1 per line
//! language.txt         one sentence
//! attributes.txt       comma-separated attribute codes
//! ```

use std::collections::BTreeSet;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use image::codecs::png::PngEncoder;
use image::{ExtendedColorType, ImageEncoder};

use crate::error::{Error, Result};
use crate::frame::{Frame, Modality};
use crate::geometry::BoundingBox;
use crate::types::{Attribute, LanguageSentence, SequenceRecord, TrackerObservation, OBSERVATION_STRIDE};

pub const OBS_LOG_MAGIC: [u8; 4] = *b"LTOB";
pub const OBS_LOG_VERSION: u32 = 1;

pub(crate) fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

pub(crate) fn read_bytes(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| Error::io(path, e))
}

pub(crate) fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub(crate) fn create_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(|e| Error::io(path, e))
}

/// Lines of a text file, ignoring a single trailing newline.
fn lines(text: &str) -> Vec<&str> {
    let mut v: Vec<&str> = text.split('\n').collect();
    if v.last() == Some(&"") {
        v.pop();
    }
    v
}

fn parse_floats(path: &Path, line_no: usize, line: &str, n: usize) -> Result<Vec<f64>> {
    let vals: Vec<&str> = line.trim_end_matches('\r').split(',').collect();
    if vals.len() != n {
        return Err(Error::parse(
            path,
            line_no,
            format!("expected {n} comma-separated values, found {}", vals.len()),
        ));
    }
    vals.iter()
        .map(|v| {
            v.trim()
                .parse::<f64>()
                .map_err(|_| Error::parse(path, line_no, format!("not a number: {v:?}")))
        })
        .collect()
}

fn parse_box(path: &Path, line_no: usize, v: &[f64]) -> Result<BoundingBox> {
    BoundingBox::try_new(v[0], v[1], v[2], v[3])
        .map_err(|e| Error::parse(path, line_no, e.to_string()))
}

pub fn frame_path(dir: &Path, index: usize) -> PathBuf {
    dir.join("imgs").join(format!("{:08}.png", index + 1))
}

pub fn encode_png(frame: &Frame) -> Result<Vec<u8>> {
    let mut bytes = Vec::new();
    let enc = PngEncoder::new(&mut bytes);
    let (w, h) = (frame.width() as u32, frame.height() as u32);
    let res = match frame.modality() {
        Modality::Rgb => enc.write_image(frame.raw(), w, h, ExtendedColorType::Rgb8),
        Modality::Thermal => {
            let gray: Vec<u8> = frame.raw().chunks_exact(3).map(|p| p[0]).collect();
            if frame.raw().chunks_exact(3).any(|p| p[0] != p[1] || p[0] != p[2]) {
                return Err(Error::Invalid("thermal frame is not grayscale".into()));
            }
            enc.write_image(&gray, w, h, ExtendedColorType::L8)
        }
    };
    res.map_err(|source| Error::Image {
        path: PathBuf::from("<memory>"),
        source,
    })?;
    Ok(bytes)
}

pub fn read_frame(path: &Path) -> Result<Frame> {
    let img = image::open(path).map_err(|source| Error::Image {
        path: path.to_owned(),
        source,
    })?;
    let (w, h) = (img.width() as usize, img.height() as usize);
    match img {
        image::DynamicImage::ImageLuma8(g) => {
            let data = g.into_raw().into_iter().flat_map(|v| [v, v, v]).collect();
            Frame::from_raw(w, h, data, Modality::Thermal)
        }
        other => Frame::from_raw(w, h, other.into_rgb8().into_raw(), Modality::Rgb),
    }
}

pub fn write_sequence(record: &SequenceRecord, dir: &Path) -> Result<()> {
    record.validate()?;
    create_dir(&dir.join("imgs"))?;
    for (i, frame) in record.frames.iter().enumerate() {
        write_bytes(&frame_path(dir, i), &encode_png(frame)?)?;
    }
    let mut gt = String::new();
    let mut absent = String::new();
    for (b, &a) in record.gt.iter().zip(&record.absent) {
        gt.push_str(&format!("{},{},{},{}\n", b.x1, b.y1, b.w, b.h));
        absent.push_str(if a { "1\n" } else { "0\n" });
    }
    write_bytes(&dir.join("groundtruth.txt"), gt.as_bytes())?;
    write_bytes(&dir.join("absent.txt"), absent.as_bytes())?;
    write_bytes(&dir.join("language.txt"), format!("{}\n", record.sentence).as_bytes())?;
    let attrs: Vec<&str> = record.attributes.iter().map(Attribute::code).collect();
    write_bytes(&dir.join("attributes.txt"), format!("{}\n", attrs.join(",")).as_bytes())?;
    Ok(())
}

/// Reads the annotations of a sequence directory without decoding frames.
pub fn read_annotations(dir: &Path) -> Result<(Vec<BoundingBox>, Vec<bool>, LanguageSentence, BTreeSet<Attribute>)> {
    let gt_path = dir.join("groundtruth.txt");
    let gt_text = read_text(&gt_path)?;
    let mut gt = Vec::new();
    for (i, line) in lines(&gt_text).into_iter().enumerate() {
        let v = parse_floats(&gt_path, i + 1, line, 4)?;
        gt.push(parse_box(&gt_path, i + 1, &v)?);
    }

    let absent_path = dir.join("absent.txt");
    let absent = parse_absent(&absent_path, &read_text(&absent_path)?)?;

    let lang_path = dir.join("language.txt");
    let sentence = LanguageSentence::parse(&read_text(&lang_path)?)
        .map_err(|e| Error::parse(&lang_path, 1, e.to_string()))?;

    let attr_path = dir.join("attributes.txt");
    let attr_text = read_text(&attr_path)?;
    let mut attributes = BTreeSet::new();
    for code in attr_text.trim().split(',').filter(|c| !c.trim().is_empty()) {
        let a = code
            .parse::<Attribute>()
            .map_err(|e| Error::parse(&attr_path, 1, e.to_string()))?;
        attributes.insert(a);
    }
    Ok((gt, absent, sentence, attributes))
}

/// Decodes an absent-label file. Accepts one flag per line or a single
/// comma-separated line.
pub fn parse_absent(path: &Path, text: &str) -> Result<Vec<bool>> {
    let mut out = Vec::new();
    for (i, line) in lines(text).into_iter().enumerate() {
        for tok in line.trim_end_matches('\r').split(',') {
            match tok.trim() {
                "0" => out.push(false),
                "1" => out.push(true),
                other => {
                    return Err(Error::parse(path, i + 1, format!("absent flag must be 0 or 1, got {other:?}")))
                }
            }
        }
    }
    Ok(out)
}

pub fn count_frames(dir: &Path) -> Result<usize> {
    let imgs = dir.join("imgs");
    let mut n = 0;
    for entry in fs::read_dir(&imgs).map_err(|e| Error::io(&imgs, e))? {
        let entry = entry.map_err(|e| Error::io(&imgs, e))?;
        if entry.path().extension().is_some_and(|x| x == "png") {
            n += 1;
        }
    }
    Ok(n)
}

pub fn read_sequence(dir: &Path) -> Result<SequenceRecord> {
    let (gt, absent, sentence, attributes) = read_annotations(dir)?;
    let n_frames = count_frames(dir)?;
    if gt.len() != n_frames {
        return Err(Error::parse(
            dir.join("groundtruth.txt"),
            gt.len() + 1,
            format!("{} ground-truth lines for {} frames", gt.len(), n_frames),
        ));
    }
    if absent.len() != n_frames {
        return Err(Error::parse(
            dir.join("absent.txt"),
            absent.len() + 1,
            format!("{} absent flags for {} frames", absent.len(), n_frames),
        ));
    }
    let frames = (0..n_frames)
        .map(|i| read_frame(&frame_path(dir, i)))
        .collect::<Result<Vec<_>>>()?;
    let name = dir
        .file_name()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let record = SequenceRecord {
        name,
        frames,
        gt,
        absent,
        attributes,
        sentence,
    };
    record.validate()?;
    Ok(record)
}

/// One `x1,y1,w,h,conf` line per frame, frame 1 first.
pub fn write_results(path: &Path, results: &[(BoundingBox, f64)]) -> Result<()> {
    let mut text = String::new();
    for (b, c) in results {
        text.push_str(&format!("{},{},{},{},{}\n", b.x1, b.y1, b.w, b.h, c));
    }
    write_bytes(path, text.as_bytes())
}

pub fn read_results(path: &Path) -> Result<Vec<(BoundingBox, f64)>> {
    let text = read_text(path)?;
    lines(&text)
        .into_iter()
        .enumerate()
        .map(|(i, line)| {
            let v = parse_floats(path, i + 1, line, 5)?;
            Ok((parse_box(path, i + 1, &v)?, v[4]))
        })
        .collect()
}

/// Writes observations as a little-endian f32 log with a 16-byte header
/// (magic, version, frame count, record stride).
pub fn write_observation_log(path: &Path, observations: &[TrackerObservation]) -> Result<()> {
    if let Some(parent) = path.parent() {
        create_dir(parent)?;
    }
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let mut header = Vec::with_capacity(16);
    header.extend_from_slice(&OBS_LOG_MAGIC);
    header.extend_from_slice(&OBS_LOG_VERSION.to_le_bytes());
    header.extend_from_slice(&(observations.len() as u32).to_le_bytes());
    header.extend_from_slice(&(OBSERVATION_STRIDE as u32).to_le_bytes());
    w.write_all(&header).map_err(|e| Error::io(path, e))?;
    for obs in observations {
        obs.validate()?;
        let bytes: Vec<u8> = obs.to_record().iter().flat_map(|v| v.to_le_bytes()).collect();
        w.write_all(&bytes).map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Raw observation log: `frames` records of `OBSERVATION_STRIDE` floats.
#[derive(Clone, Debug, PartialEq)]
pub struct ObservationLog {
    pub data: Vec<f32>,
    pub frames: usize,
}

impl ObservationLog {
    pub fn from_observations(obs: &[TrackerObservation]) -> Self {
        Self {
            data: obs.iter().flat_map(|o| o.to_record()).collect(),
            frames: obs.len(),
        }
    }

    pub fn record(&self, i: usize) -> &[f32] {
        &self.data[i * OBSERVATION_STRIDE..(i + 1) * OBSERVATION_STRIDE]
    }

    pub fn observation(&self, i: usize) -> TrackerObservation {
        TrackerObservation::from_record(self.record(i)).expect("stride checked at load")
    }
}

pub fn read_observation_log(path: &Path) -> Result<ObservationLog> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    if bytes.len() < 16 || bytes[..4] != OBS_LOG_MAGIC {
        return Err(Error::parse(path, 1, "missing observation-log magic"));
    }
    let word = |i: usize| u32::from_le_bytes(bytes[i..i + 4].try_into().unwrap()) as usize;
    if word(4) != OBS_LOG_VERSION as usize {
        return Err(Error::parse(path, 1, format!("unsupported log version {}", word(4))));
    }
    let frames = word(8);
    let stride = word(12);
    if stride != OBSERVATION_STRIDE {
        return Err(Error::parse(path, 1, format!("record stride {stride}, expected {OBSERVATION_STRIDE}")));
    }
    let body = &bytes[16..];
    if body.len() != frames * stride * 4 {
        return Err(Error::parse(
            path,
            1,
            format!("header declares {frames} frames but body holds {} bytes", body.len()),
        ));
    }
    let data = body
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Ok(ObservationLog { data, frames })
}

/// Per-frame IoU against ground truth, one value per line.
pub fn write_iou_log(path: &Path, ious: &[f64]) -> Result<()> {
    let text: String = ious.iter().map(|v| format!("{v}\n")).collect();
    write_bytes(path, text.as_bytes())
}

pub fn read_iou_log(path: &Path) -> Result<Vec<f64>> {
    let text = read_text(path)?;
    lines(&text)
        .into_iter()
        .enumerate()
        .map(|(i, l)| {
            l.trim()
                .parse::<f64>()
                .map_err(|_| Error::parse(path, i + 1, format!("not a number: {l:?}")))
        })
        .collect()
}
