//! Binary trajectory persistence.
//!
//! Layout (all integers little-endian):
//!
//! ```text
//! magic   [u8; 4] = "SGTJ"
//! version u16     = 1
//! n       u32     particles per frame
//! d       u8      dimensions
//! count   u32     frame count (patched on finish when streaming)
//! spacing f64
//! meta    u32 length + UTF-8 JSON (TrajectoryMeta)
//! species n x u8
//! frames  count x { time f64, kind u8, box d x f64, positions n*d x f64, crc32 u32 }
//! blocks  0.. x  { tag [u8;4], len u64, payload, crc32 u32 }
//! ```
//!
//! The per-frame CRC32 covers the frame bytes before it; trailing blocks carry
//! auxiliary arrays (feature matrices, softness fields) inside the same
//! container.

use super::{Frame, FrameKind, Species, Trajectory, TrajectoryError, TrajectoryMeta};
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Seek, SeekFrom, Write};
use std::path::Path;

const MAGIC: [u8; 4] = *b"SGTJ";
const VERSION: u16 = 1;

/// Tag for feature-matrix blocks.
pub const BLOCK_TAG_FEATURES: [u8; 4] = *b"FEAT";
/// Tag for per-frame softness blocks.
pub const BLOCK_TAG_SOFTNESS: [u8; 4] = *b"SOFT";

/// An auxiliary payload stored after the frames.
#[derive(Debug, Clone, PartialEq)]
pub struct DataBlock {
    pub tag: [u8; 4],
    pub payload: Vec<u8>,
}

fn write_frame<W: Write>(w: &mut W, frame: &Frame) -> std::io::Result<()> {
    let mut buf = Vec::with_capacity(9 + 8 * (frame.box_edges.len() + frame.positions.len()));
    buf.extend_from_slice(&frame.time.to_le_bytes());
    buf.push(frame.kind as u8);
    for &e in &frame.box_edges {
        buf.extend_from_slice(&e.to_le_bytes());
    }
    for &x in &frame.positions {
        buf.extend_from_slice(&x.to_le_bytes());
    }
    let crc = crc32fast::hash(&buf);
    w.write_all(&buf)?;
    w.write_all(&crc.to_le_bytes())?;
    Ok(())
}

/// Incremental writer supporting append-per-frame output during simulation.
pub struct TrajectoryWriter {
    out: BufWriter<File>,
    n: usize,
    dim: usize,
    species: Vec<Species>,
    count: u32,
    count_offset: u64,
}

impl TrajectoryWriter {
    /// Creates the file and writes the header from the first frame's shape.
    pub fn create(
        path: &Path,
        template: &Frame,
        spacing: f64,
        meta: &TrajectoryMeta,
    ) -> Result<TrajectoryWriter, TrajectoryError> {
        let file = File::create(path)?;
        let mut out = BufWriter::new(file);
        out.write_all(&MAGIC)?;
        out.write_all(&VERSION.to_le_bytes())?;
        out.write_all(&(template.n_particles() as u32).to_le_bytes())?;
        out.write_all(&[template.dim() as u8])?;
        let count_offset = (4 + 2 + 4 + 1) as u64;
        out.write_all(&0u32.to_le_bytes())?;
        out.write_all(&spacing.to_le_bytes())?;
        let meta_json = serde_json::to_vec(meta).map_err(|_| TrajectoryError::Corrupt("meta"))?;
        out.write_all(&(meta_json.len() as u32).to_le_bytes())?;
        out.write_all(&meta_json)?;
        for &s in &template.species {
            out.write_all(&[s as u8])?;
        }
        Ok(TrajectoryWriter {
            out,
            n: template.n_particles(),
            dim: template.dim(),
            species: template.species.clone(),
            count: 0,
            count_offset,
        })
    }

    pub fn append(&mut self, frame: &Frame) -> Result<(), TrajectoryError> {
        if frame.n_particles() != self.n || frame.dim() != self.dim {
            return Err(TrajectoryError::ParticleCountMismatch {
                index: self.count as usize,
                expected: self.n,
                found: frame.n_particles(),
            });
        }
        debug_assert_eq!(frame.species, self.species);
        write_frame(&mut self.out, frame)?;
        self.count += 1;
        Ok(())
    }

    /// Appends an auxiliary block after the frames.
    pub fn append_block(&mut self, block: &DataBlock) -> Result<(), TrajectoryError> {
        write_block(&mut self.out, block)?;
        Ok(())
    }

    /// Patches the frame count into the header and flushes.
    pub fn finish(mut self) -> Result<(), TrajectoryError> {
        self.out.flush()?;
        let mut file = self.out.into_inner().map_err(|e| e.into_error())?;
        file.seek(SeekFrom::Start(self.count_offset))?;
        file.write_all(&self.count.to_le_bytes())?;
        file.sync_all()?;
        Ok(())
    }
}

fn write_block<W: Write>(w: &mut W, block: &DataBlock) -> std::io::Result<()> {
    w.write_all(&block.tag)?;
    w.write_all(&(block.payload.len() as u64).to_le_bytes())?;
    w.write_all(&block.payload)?;
    w.write_all(&crc32fast::hash(&block.payload).to_le_bytes())?;
    Ok(())
}

/// Writes a whole trajectory with optional trailing blocks.
pub fn write_trajectory(traj: &Trajectory, path: &Path) -> Result<(), TrajectoryError> {
    write_trajectory_with_blocks(traj, &[], path)
}

pub fn write_trajectory_with_blocks(
    traj: &Trajectory,
    blocks: &[DataBlock],
    path: &Path,
) -> Result<(), TrajectoryError> {
    let template = traj
        .frames
        .first()
        .cloned()
        .unwrap_or_else(|| Frame {
            time: 0.0,
            box_edges: vec![],
            positions: vec![],
            species: vec![],
            kind: FrameKind::Inherent,
        });
    let mut w = TrajectoryWriter::create(path, &template, traj.spacing, &traj.meta)?;
    for frame in &traj.frames {
        w.append(frame)?;
    }
    for block in blocks {
        w.append_block(block)?;
    }
    w.finish()
}

/// Appends a feature block to an existing trajectory file.
pub fn append_feature_block(path: &Path, payload: Vec<u8>) -> Result<(), TrajectoryError> {
    let mut file = std::fs::OpenOptions::new().append(true).open(path)?;
    write_block(
        &mut file,
        &DataBlock {
            tag: BLOCK_TAG_FEATURES,
            payload,
        },
    )?;
    Ok(())
}

struct Header {
    n: usize,
    dim: usize,
    count: usize,
    spacing: f64,
    meta: TrajectoryMeta,
    species: Vec<Species>,
}

fn read_exact_or(
    r: &mut impl Read,
    buf: &mut [u8],
    what: &'static str,
) -> Result<(), TrajectoryError> {
    r.read_exact(buf).map_err(|e| {
        if e.kind() == std::io::ErrorKind::UnexpectedEof {
            TrajectoryError::Truncated(what)
        } else {
            TrajectoryError::Io(e)
        }
    })
}

fn read_u32(r: &mut impl Read, what: &'static str) -> Result<u32, TrajectoryError> {
    let mut b = [0u8; 4];
    read_exact_or(r, &mut b, what)?;
    Ok(u32::from_le_bytes(b))
}

fn read_f64(r: &mut impl Read, what: &'static str) -> Result<f64, TrajectoryError> {
    let mut b = [0u8; 8];
    read_exact_or(r, &mut b, what)?;
    Ok(f64::from_le_bytes(b))
}

fn read_header(r: &mut impl Read) -> Result<Header, TrajectoryError> {
    let mut magic = [0u8; 4];
    read_exact_or(r, &mut magic, "magic")?;
    if magic != MAGIC {
        return Err(TrajectoryError::BadMagic);
    }
    let mut vbuf = [0u8; 2];
    read_exact_or(r, &mut vbuf, "version")?;
    let version = u16::from_le_bytes(vbuf);
    if version != VERSION {
        return Err(TrajectoryError::VersionMismatch(version));
    }
    let n = read_u32(r, "particle count")? as usize;
    let mut dbuf = [0u8; 1];
    read_exact_or(r, &mut dbuf, "dimension")?;
    let dim = dbuf[0] as usize;
    if dim == 0 || dim > 3 {
        return Err(TrajectoryError::Corrupt("dimension"));
    }
    let count = read_u32(r, "frame count")? as usize;
    let spacing = read_f64(r, "spacing")?;
    let meta_len = read_u32(r, "meta length")? as usize;
    if meta_len > 1 << 24 {
        return Err(TrajectoryError::Corrupt("meta length"));
    }
    let mut meta_buf = vec![0u8; meta_len];
    read_exact_or(r, &mut meta_buf, "meta")?;
    let meta: TrajectoryMeta =
        serde_json::from_slice(&meta_buf).map_err(|_| TrajectoryError::Corrupt("meta json"))?;
    let mut species_buf = vec![0u8; n];
    read_exact_or(r, &mut species_buf, "species")?;
    let species = species_buf
        .into_iter()
        .map(|b| Species::from_u8(b).ok_or(TrajectoryError::Corrupt("species")))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Header {
        n,
        dim,
        count,
        spacing,
        meta,
        species,
    })
}

fn read_frame(
    r: &mut impl Read,
    header: &Header,
    index: usize,
) -> Result<Frame, TrajectoryError> {
    let payload_len = 8 + 1 + 8 * (header.dim + header.n * header.dim);
    let mut buf = vec![0u8; payload_len];
    read_exact_or(r, &mut buf, "frame")?;
    let crc_stored = read_u32(r, "frame checksum")?;
    if crc32fast::hash(&buf) != crc_stored {
        return Err(TrajectoryError::ChecksumMismatch(index));
    }
    let time = f64::from_le_bytes(buf[0..8].try_into().unwrap());
    let kind = FrameKind::from_u8(buf[8]).ok_or(TrajectoryError::Corrupt("frame kind"))?;
    let mut off = 9;
    let mut box_edges = Vec::with_capacity(header.dim);
    for _ in 0..header.dim {
        box_edges.push(f64::from_le_bytes(buf[off..off + 8].try_into().unwrap()));
        off += 8;
    }
    let mut positions = Vec::with_capacity(header.n * header.dim);
    for _ in 0..header.n * header.dim {
        positions.push(f64::from_le_bytes(buf[off..off + 8].try_into().unwrap()));
        off += 8;
    }
    Ok(Frame {
        time,
        box_edges,
        positions,
        species: header.species.clone(),
        kind,
    })
}

/// Reads a trajectory written by [`write_trajectory`] or [`TrajectoryWriter`].
pub fn read_trajectory(path: &Path) -> Result<Trajectory, TrajectoryError> {
    let mut r = BufReader::new(File::open(path)?);
    let header = read_header(&mut r)?;
    let mut frames = Vec::with_capacity(header.count);
    for idx in 0..header.count {
        frames.push(read_frame(&mut r, &header, idx)?);
    }
    Ok(Trajectory {
        frames,
        spacing: header.spacing,
        meta: header.meta,
    })
}

/// Reads the auxiliary blocks that follow the frames.
pub fn read_blocks(path: &Path) -> Result<Vec<DataBlock>, TrajectoryError> {
    let mut r = BufReader::new(File::open(path)?);
    let header = read_header(&mut r)?;
    let frame_bytes = (8 + 1 + 8 * (header.dim + header.n * header.dim) + 4) as i64;
    r.seek(SeekFrom::Current(frame_bytes * header.count as i64))?;
    let mut blocks = Vec::new();
    loop {
        let mut tag = [0u8; 4];
        match r.read_exact(&mut tag) {
            Ok(()) => {}
            Err(e) if e.kind() == std::io::ErrorKind::UnexpectedEof => break,
            Err(e) => return Err(TrajectoryError::Io(e)),
        }
        let mut len_buf = [0u8; 8];
        read_exact_or(&mut r, &mut len_buf, "block length")?;
        let len = u64::from_le_bytes(len_buf) as usize;
        if len > 1 << 33 {
            return Err(TrajectoryError::Corrupt("block length"));
        }
        let mut payload = vec![0u8; len];
        read_exact_or(&mut r, &mut payload, "block payload")?;
        let crc_stored = read_u32(&mut r, "block checksum")?;
        if crc32fast::hash(&payload) != crc_stored {
            return Err(TrajectoryError::ChecksumMismatch(usize::MAX));
        }
        blocks.push(DataBlock { tag, payload });
    }
    Ok(blocks)
}

#[cfg(test)]
mod tests {
    use super::*;
    use tempfile::tempdir;

    fn sample_traj() -> Trajectory {
        let mk = |t: f64, shift: f64| Frame {
            time: t,
            box_edges: vec![6.0, 6.0, 6.0],
            positions: vec![
                0.5 + shift,
                1.0,
                1.5,
                2.0,
                2.5 + shift,
                3.0,
                3.5,
                4.0,
                4.5 + shift,
                5.0,
                5.5,
                0.25,
            ],
            species: vec![Species::A, Species::A, Species::B, Species::A],
            kind: FrameKind::Inherent,
        };
        Trajectory::new(
            vec![mk(0.0, 0.0), mk(1.0, 0.125)],
            TrajectoryMeta {
                temperature: 0.47,
                density: 1.2,
                n_particles: 4,
                seed: 7,
                extra: Default::default(),
            },
        )
        .unwrap()
    }

    #[test]
    fn round_trip_bit_exact() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("t.strj");
        let traj = sample_traj();
        write_trajectory(&traj, &path).unwrap();
        let back = read_trajectory(&path).unwrap();
        assert_eq!(traj, back);
    }

    #[test]
    fn truncated_file_reports_truncation() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("t.strj");
        write_trajectory(&sample_traj(), &path).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        std::fs::write(&path, &bytes[..bytes.len() - 13]).unwrap();
        match read_trajectory(&path) {
            Err(TrajectoryError::Truncated(_)) => {}
            other => panic!("expected truncation error, got {other:?}"),
        }
    }

    #[test]
    fn bumped_version_reports_version_error() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("t.strj");
        write_trajectory(&sample_traj(), &path).unwrap();
        let mut bytes = std::fs::read(&path).unwrap();
        bytes[4] = 0xFF;
        std::fs::write(&path, &bytes).unwrap();
        assert!(matches!(
            read_trajectory(&path),
            Err(TrajectoryError::VersionMismatch(_))
        ));
    }

    #[test]
    fn corrupted_frame_reports_checksum_error() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("t.strj");
        write_trajectory(&sample_traj(), &path).unwrap();
        let mut bytes = std::fs::read(&path).unwrap();
        let n = bytes.len();
        bytes[n - 20] ^= 0x01;
        std::fs::write(&path, &bytes).unwrap();
        assert!(matches!(
            read_trajectory(&path),
            Err(TrajectoryError::ChecksumMismatch(_))
        ));
    }

    #[test]
    fn blocks_round_trip() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("t.strj");
        let block = DataBlock {
            tag: BLOCK_TAG_FEATURES,
            payload: vec![1, 2, 3, 4, 5],
        };
        write_trajectory_with_blocks(&sample_traj(), &[block.clone()], &path).unwrap();
        append_feature_block(&path, vec![9, 9]).unwrap();
        let blocks = read_blocks(&path).unwrap();
        assert_eq!(blocks.len(), 2);
        assert_eq!(blocks[0], block);
        assert_eq!(blocks[1].payload, vec![9, 9]);
        // frames still readable after appending blocks
        assert_eq!(read_trajectory(&path).unwrap(), sample_traj());
    }

    #[test]
    fn streaming_writer_matches_one_shot() {
        let dir = tempdir().unwrap();
        let a = dir.path().join("a.strj");
        let b = dir.path().join("b.strj");
        let traj = sample_traj();
        write_trajectory(&traj, &a).unwrap();
        let mut w = TrajectoryWriter::create(&b, &traj.frames[0], traj.spacing, &traj.meta).unwrap();
        for f in &traj.frames {
            w.append(f).unwrap();
        }
        w.finish().unwrap();
        assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    }
}
